"""Small stand-in behavior trees shaped like the framework's object model.

The classes here mirror the attribute surface the extractor duck-types
against (`name`, `children`, `memory`, `policy.synchronise`, `decorated`),
so the demos double as a compatibility contract: anything the extractor
handles on these it handles on the real framework classes of the same
names.
"""


class Behaviour:
    def __init__(self, name):
        self.name = name
        self.children = []


class Success(Behaviour):
    pass


class Failure(Behaviour):
    pass


class Running(Behaviour):
    pass


class Composite(Behaviour):
    def __init__(self, name, children=()):
        super().__init__(name)
        self.children = list(children)


class Selector(Composite):
    def __init__(self, name, memory=False, children=()):
        super().__init__(name, children)
        self.memory = memory


class Sequence(Composite):
    def __init__(self, name, memory=False, children=()):
        super().__init__(name, children)
        self.memory = memory


class SuccessOnAll:
    def __init__(self, synchronise=False):
        self.synchronise = synchronise


class SuccessOnOne:
    def __init__(self, synchronise=False):
        self.synchronise = synchronise


class Parallel(Composite):
    def __init__(self, name, policy, children=()):
        super().__init__(name, children)
        self.policy = policy


class Decorator(Behaviour):
    def __init__(self, name, child):
        super().__init__(name)
        self.decorated = child
        self.children = [child]


class Inverter(Decorator):
    pass


class OneShot(Decorator):
    pass


def selector_demo():
    return Selector("chooser", children=[Success("primary"),
                                         Failure("fallback")])


def sequence_memory_demo():
    return Sequence("pipeline", memory=True,
                    children=[Success("fetch"), Running("process"),
                              Success("store")])


def parallel_demo():
    return Parallel("workers", SuccessOnAll(),
                    children=[Success("left"), Running("right")])


class _Mystery(Behaviour):
    """A custom leaf with no verification_profile annotation."""


def custom_leaf_demo():
    return Selector("root", children=[Success("known"), _Mystery("mystery")])


class BatterySensor(Behaviour):
    """An annotated custom leaf: precise statuses plus a blackboard write."""

    verification_profile = {
        "statuses": "SF",
        "blackboard": [
            {"name": "battery_low", "type": {"kind": "bool"},
             "initial": False},
        ],
        "effects": [
            {"trigger": "S", "variable": "battery_low",
             "update": {"kind": "set", "value": True}},
            {"trigger": "F", "variable": "battery_low",
             "update": {"kind": "set", "value": False}},
        ],
    }


def annotated_demo():
    return Sequence("monitor", children=[BatterySensor("check_battery"),
                                         Running("surface")])
