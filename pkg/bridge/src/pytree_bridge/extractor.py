"""Walks a live behavior tree object graph into interchange JSON.

The walk never imports the tree framework. Nodes are recognized by class
name, checked across the whole MRO so user subclasses keep working, plus
attribute shape (`children`, `memory`, `policy`, `decorated`). Everything
unrecognized degrades conservatively instead of failing: unknown leaves get
the full S/F/R status domain, unknown single-child wrappers become identity
status maps, unknown multi-child nodes collapse to a leaf, and every such
fallback produces one warning naming the node.

Custom leaves may opt in to precise modeling through a
`verification_profile` attribute, a dict with up to three keys:

  statuses    string over S, F, R: the statuses the leaf can return
  blackboard  list of variable declarations this leaf relies on, each
              {"name": ..., "type": {"kind": "bool"} | {"kind": "int",
              "lo": ..., "hi": ...} | {"kind": "enum", "values": [...]},
              "initial": ...}
  effects     list of writes, each {"trigger": "tick" | "S" | "F" | "R",
              "variable": ..., "update": {"kind": "any"} | {"kind": "set",
              "value": ...} | {"kind": "from_status", "map": {...}}}

The blackboard and effect fragments are spliced verbatim into the emitted
document, so their shape is exactly the interchange form.
"""
import json
import re
from dataclasses import dataclass

FORMAT_VERSION = "btv1"

_NAME_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
_STATUS_LETTERS = "SFR"

#: leaf classes whose return status is fixed by construction
_TRIVIAL_LEAVES = {"Success": "S", "Failure": "F", "Running": "R"}

#: single-child wrappers with a pure status rewrite
_STATUS_REWRITES = {
    "Inverter": {"S": "F", "F": "S", "R": "R"},
    "FailureIsSuccess": {"S": "S", "F": "S", "R": "R"},
    "FailureIsRunning": {"S": "S", "F": "R", "R": "R"},
    "SuccessIsFailure": {"S": "F", "F": "F", "R": "R"},
    "SuccessIsRunning": {"S": "R", "F": "F", "R": "R"},
    "RunningIsFailure": {"S": "S", "F": "F", "R": "F"},
    "RunningIsSuccess": {"S": "S", "F": "F", "R": "S"},
}

_IDENTITY = {"S": "S", "F": "F", "R": "R"}


class ExtractError(ValueError):
    """The input object graph cannot be serialized as a tree."""


@dataclass(frozen=True)
class ExtractionResult:
    document: str
    warnings: tuple[str, ...]


def _class_names(node) -> set[str]:
    return {c.__name__ for c in type(node).__mro__}


def _children(node) -> list:
    return list(getattr(node, "children", ()) or ())


def _sanitize(raw: str) -> str:
    name = re.sub(r"[^a-z0-9_]+", "_", str(raw).lower()).strip("_")
    if not name or not name[0].isalpha():
        name = "node_" + name if name else "node"
    return name


class _Walk:
    def __init__(self):
        self.warnings: list[str] = []
        self.seen: set[int] = set()
        self.names: set[str] = set()
        self.blackboard: dict[str, dict] = {}

    def warn(self, node_name: str, message: str) -> None:
        self.warnings.append(f"{node_name}: {message}")

    def unique_name(self, node) -> str:
        raw = getattr(node, "name", None)
        name = _sanitize(raw if raw is not None else type(node).__name__)
        if name in self.names:
            base, i = name, 2
            while f"{base}_{i}" in self.names:
                i += 1
            name = f"{base}_{i}"
            self.warn(name, f"renamed from {raw!r} to avoid a collision")
        self.names.add(name)
        assert _NAME_RE.match(name)
        return name

    def node(self, obj) -> dict:
        if id(obj) in self.seen:
            raise ExtractError(
                f"node {getattr(obj, 'name', obj)!r} is reachable twice; "
                f"the input must be a tree")
        self.seen.add(id(obj))

        names = _class_names(obj)
        name = self.unique_name(obj)
        kids = _children(obj)

        if "Selector" in names or "Sequence" in names:
            word = "selector" if "Selector" in names else "sequence"
            return {"kind": word, "name": name,
                    "memory": bool(getattr(obj, "memory", False)),
                    "children": [self.node(c) for c in kids]}
        if "Parallel" in names:
            return self.parallel(obj, name, kids)
        if "OneShot" in names and len(kids) == 1:
            return {"kind": "oneshot", "name": name,
                    "children": [self.node(kids[0])]}
        rewrite = next((m for c, m in _STATUS_REWRITES.items()
                        if c in names), None)
        if rewrite is not None and len(kids) == 1:
            return {"kind": "statusmap", "name": name, "map": rewrite,
                    "children": [self.node(kids[0])]}

        if len(kids) == 1:
            self.warn(name, f"unrecognized wrapper {type(obj).__name__}; "
                            f"kept as an identity status map")
            return {"kind": "statusmap", "name": name, "map": dict(_IDENTITY),
                    "children": [self.node(kids[0])]}
        if kids:
            self.warn(name, f"unrecognized composite {type(obj).__name__} "
                            f"with {len(kids)} children; collapsed to a "
                            f"full-domain leaf, its subtree was not walked")
            return self.fallback_leaf(name)
        return self.leaf(obj, name)

    def parallel(self, obj, name: str, kids: list) -> dict:
        policy = getattr(obj, "policy", None)
        policy_names = _class_names(policy) if policy is not None else set()
        if "SuccessOnOne" in policy_names:
            threshold = 1
        elif "SuccessOnAll" in policy_names:
            threshold = len(kids)
        else:
            threshold = len(kids)
            self.warn(name, f"unrecognized parallel policy "
                            f"{type(policy).__name__}; assuming all "
                            f"children must succeed")
        return {"kind": "parallel", "name": name, "threshold": threshold,
                "flavor": "pytrees",
                "synchronized": bool(getattr(policy, "synchronise", False)),
                "children": [self.node(c) for c in kids]}

    def leaf(self, obj, name: str) -> dict:
        annotation = getattr(obj, "verification_profile", None)
        if annotation is not None:
            return self.annotated_leaf(obj, name, annotation)
        trivial = next((s for c, s in _TRIVIAL_LEAVES.items()
                        if c in _class_names(obj)), None)
        if trivial is not None:
            return {"kind": "leaf", "name": name, "statuses": trivial,
                    "effects": []}
        self.warn(name, f"unknown leaf {type(obj).__name__} carries no "
                        f"verification_profile; assuming it can return "
                        f"any status")
        return self.fallback_leaf(name)

    def fallback_leaf(self, name: str) -> dict:
        return {"kind": "leaf", "name": name, "statuses": _STATUS_LETTERS,
                "effects": []}

    def annotated_leaf(self, obj, name: str, annotation) -> dict:
        if not isinstance(annotation, dict):
            self.warn(name, "verification_profile must be a dict; the "
                            "annotation was ignored")
            return self.fallback_leaf(name)
        statuses = annotation.get("statuses", _STATUS_LETTERS)
        if (not isinstance(statuses, str) or not statuses
                or any(ch not in _STATUS_LETTERS for ch in statuses)
                or len(set(statuses)) != len(statuses)):
            self.warn(name, f"bad statuses {statuses!r} in "
                            f"verification_profile; using the full domain")
            statuses = _STATUS_LETTERS
        for decl in annotation.get("blackboard", ()):
            self.declare(name, decl)
        return {"kind": "leaf", "name": name, "statuses": statuses,
                "effects": list(annotation.get("effects", ()))}

    def declare(self, node_name: str, decl) -> None:
        if not isinstance(decl, dict) or not {"name", "type",
                                              "initial"} <= decl.keys():
            self.warn(node_name, f"blackboard entry {decl!r} needs name, "
                                 f"type, and initial; it was skipped")
            return
        var = decl["name"]
        known = self.blackboard.get(var)
        if known is None:
            self.blackboard[var] = decl
        elif known != decl:
            self.warn(node_name, f"blackboard variable {var!r} was already "
                                 f"declared differently; keeping the first "
                                 f"declaration")


def extract(root) -> ExtractionResult:
    """Serializes the tree rooted at `root` into an interchange document."""
    walk = _Walk()
    node = walk.node(root)
    doc = {
        "format": FORMAT_VERSION,
        "blackboard": [walk.blackboard[k] for k in sorted(walk.blackboard)],
        "blackboard_file": None,
        "spec_file": None,
        "root": node,
    }
    return ExtractionResult(json.dumps(doc, indent=2) + "\n",
                            tuple(walk.warnings))
