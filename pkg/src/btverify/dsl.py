"""Text and JSON formats for behavior tree documents.

The text form is line-oriented with 2-space indentation in its canonical
rendering:

    format btv1

    blackboard {
      flag: bool = false
      count: int[0..3] = 1
      mode: enum{idle, work} = idle
    }

    spec_file "specs.ltl"

    selector root {
      check
      sequence walk memory {
        leaf step statuses SR {
          on S: flag := true
        }
        parallel regroup sync all {
          a
          b
        }
      }
    }

A bare identifier is shorthand for a leaf with the full S/F/R status domain
and no effects; the serializer prefers that form. Unnamed nodes are named
`<kindword><preorder index>` when parsed. `blackboard_file` points at an SMV
fragment to paste verbatim instead of generating one; `spec_file` points at
LTL properties to append to an emitted model.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from .core import (
    Status, SUCCESS, FAILURE, RUNNING,
    BoolDomain, IntDomain, EnumDomain, Domain, BlackboardDecl,
    BlackboardEffect, OnTick, OnStatus, Nondet, SetConstant, SetFromStatus,
    ParallelFlavor, ParallelPolicy, Selector, Sequence, Parallel, Decorator,
    StatusMap, OneShot, Leaf, Tree, Draft, build, leaf as leaf_draft,
    STATUS_MAP_SHORTHANDS,
)

FORMAT_VERSION = "btv1"

RESERVED_WORDS = frozenset({
    "format", "blackboard", "blackboard_file", "spec_file",
    "selector", "sequence", "parallel", "leaf", "oneshot", "statusmap",
    "memory", "sync", "one", "all", "threshold", "flavor", "pytrees",
    "on", "tick", "statuses", "map", "any", "bool", "int", "enum",
    "true", "false",
} | set(STATUS_MAP_SHORTHANDS))

_STATUS_BY_LETTER = {"S": SUCCESS, "F": FAILURE, "R": RUNNING}


class DslError(Exception):
    pass


class ParseError(DslError):
    def __init__(self, message: str, line: int, col: int,
                 filename: str = "<dsl>") -> None:
        super().__init__(f"{filename}:{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename


class JsonError(DslError):
    pass


@dataclass
class Document:
    tree: Tree
    blackboard_file: Optional[str] = None
    spec_file: Optional[str] = None


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "int" | "string" | "punct" | "eof"
    text: str
    line: int
    col: int


_PUNCTS = (":=", "->", "..", "{", "}", "(", ")", "[", "]", ":", "=", ",")


def _tokenize(text: str, filename: str) -> list[Token]:
    toks: list[Token] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        i = 0
        while i < len(line):
            ch = line[i]
            col = i + 1
            if ch in " \t":
                i += 1
                continue
            if ch == "#":
                break
            if ch == '"':
                j = line.find('"', i + 1)
                if j < 0:
                    raise ParseError("unterminated string", lineno, col, filename)
                toks.append(Token("string", line[i + 1:j], lineno, col))
                i = j + 1
                continue
            for p in _PUNCTS:
                if line.startswith(p, i):
                    # a '-' only forms '->'; bare '-' starts a negative number
                    toks.append(Token("punct", p, lineno, col))
                    i += len(p)
                    break
            else:
                if ch.isdigit() or (ch == "-" and i + 1 < len(line)
                                    and line[i + 1].isdigit()):
                    j = i + 1
                    while j < len(line) and line[j].isdigit():
                        j += 1
                    toks.append(Token("int", line[i:j], lineno, col))
                    i = j
                elif ch.isalpha() or ch == "_":
                    j = i
                    while j < len(line) and (line[j].isalnum() or line[j] == "_"):
                        j += 1
                    toks.append(Token("ident", line[i:j], lineno, col))
                    i = j
                else:
                    raise ParseError(f"unexpected character {ch!r}",
                                     lineno, col, filename)
    last = (toks[-1].line + 1) if toks else 1
    toks.append(Token("eof", "", last, 1))
    return toks


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, filename: str) -> None:
        self.toks = _tokenize(text, filename)
        self.pos = 0
        self.filename = filename

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col, self.filename)

    def expect_punct(self, text: str) -> Token:
        tok = self.next()
        if tok.kind != "punct" or tok.text != text:
            raise self.fail(f"expected {text!r}, found {tok.text or 'end of file'!r}", tok)
        return tok

    def expect_word(self, word: str) -> Token:
        tok = self.next()
        if tok.kind != "ident" or tok.text != word:
            raise self.fail(f"expected {word!r}, found {tok.text or 'end of file'!r}", tok)
        return tok

    def expect_name(self, what: str) -> str:
        tok = self.next()
        if tok.kind != "ident":
            raise self.fail(f"expected {what}, found {tok.text or 'end of file'!r}", tok)
        if tok.text in RESERVED_WORDS:
            raise self.fail(f"{tok.text!r} is a reserved word", tok)
        return tok.text

    def at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.text == word

    def eat_word(self, word: str) -> bool:
        if self.at_word(word):
            self.pos += 1
            return True
        return False

    # -- grammar ------------------------------------------------------------

    def document(self) -> Document:
        self.expect_word("format")
        tok = self.next()
        if tok.text != FORMAT_VERSION:
            raise self.fail(f"unsupported format {tok.text!r}, expected "
                            f"{FORMAT_VERSION!r}", tok)
        decls: list[BlackboardDecl] = []
        bb_file = spec_file = None
        while True:
            if self.at_word("blackboard"):
                if decls:
                    raise self.fail("duplicate blackboard block")
                self.next()
                decls = self.blackboard_block()
            elif self.at_word("blackboard_file"):
                self.next()
                bb_file = self.string_value()
            elif self.at_word("spec_file"):
                self.next()
                spec_file = self.string_value()
            else:
                break
        root = self.node()
        tok = self.peek()
        if tok.kind != "eof":
            raise self.fail(f"unexpected trailing input {tok.text!r}", tok)
        return Document(build(root, decls), bb_file, spec_file)

    def string_value(self) -> str:
        tok = self.next()
        if tok.kind != "string":
            raise self.fail("expected a quoted string", tok)
        return tok.text

    def blackboard_block(self) -> list[BlackboardDecl]:
        self.expect_punct("{")
        decls = []
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            name = self.expect_name("variable name")
            self.expect_punct(":")
            domain = self.domain()
            self.expect_punct("=")
            decls.append(BlackboardDecl(name, domain, self.value()))
        self.next()
        return decls

    def domain(self) -> Domain:
        tok = self.next()
        if tok.text == "bool":
            return BoolDomain()
        if tok.text == "int":
            self.expect_punct("[")
            lo = self.int_value()
            self.expect_punct("..")
            hi = self.int_value()
            self.expect_punct("]")
            return IntDomain(lo, hi)
        if tok.text == "enum":
            self.expect_punct("{")
            values = [self.expect_name("enum value")]
            while self.peek().text == ",":
                self.next()
                values.append(self.expect_name("enum value"))
            self.expect_punct("}")
            return EnumDomain(tuple(values))
        raise self.fail(f"expected a type (bool, int, enum), found {tok.text!r}", tok)

    def int_value(self) -> int:
        tok = self.next()
        if tok.kind != "int":
            raise self.fail(f"expected an integer, found {tok.text!r}", tok)
        return int(tok.text)

    def value(self) -> Any:
        tok = self.next()
        if tok.kind == "int":
            return int(tok.text)
        if tok.kind == "ident":
            if tok.text == "true":
                return True
            if tok.text == "false":
                return False
            return tok.text
        raise self.fail(f"expected a value, found {tok.text or 'end of file'!r}", tok)

    def optional_name(self) -> Optional[str]:
        tok = self.peek()
        if tok.kind == "ident" and tok.text not in RESERVED_WORDS:
            self.pos += 1
            return tok.text
        return None

    def node(self) -> Draft:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.fail(f"expected a node, found {tok.text or 'end of file'!r}", tok)
        word = tok.text
        if word in ("selector", "sequence"):
            self.next()
            name = self.optional_name()
            memory = self.eat_word("memory")
            kids = self.body()
            kind = Selector(memory) if word == "selector" else Sequence(memory)
            return Draft(kind, name, kids)
        if word == "parallel":
            return self.parallel()
        if word == "leaf":
            return self.leaf()
        if word == "oneshot":
            self.next()
            name = self.optional_name()
            kids = self.body()
            return Draft(Decorator(OneShot()), name, kids)
        if word == "statusmap":
            self.next()
            name = self.optional_name()
            mapping = self.status_mapping()
            kids = self.body()
            return Draft(Decorator(StatusMap.of(mapping)), name, kids)
        if word in STATUS_MAP_SHORTHANDS:
            self.next()
            name = self.optional_name()
            kids = self.body()
            kind = StatusMap.of(STATUS_MAP_SHORTHANDS[word], word)
            return Draft(Decorator(kind), name, kids)
        if word in RESERVED_WORDS:
            raise self.fail(f"{word!r} is a reserved word", tok)
        self.next()
        return leaf_draft(word)

    def parallel(self) -> Draft:
        self.next()
        name = self.optional_name()
        sync = self.eat_word("sync")
        tok = self.next()
        if tok.text == "one":
            threshold: Union[int, str] = "one"
        elif tok.text == "all":
            threshold = "all"
        elif tok.text == "threshold":
            self.expect_punct("=")
            threshold = self.int_value()
        else:
            raise self.fail("expected a policy (one, all, threshold=K), "
                            f"found {tok.text!r}", tok)
        flavor = ParallelFlavor.PYTREES
        if self.eat_word("flavor"):
            self.expect_punct("=")
            tok = self.next()
            if tok.text == "pytrees":
                flavor = ParallelFlavor.PYTREES
            elif tok.text == "threshold":
                flavor = ParallelFlavor.THRESHOLD
            else:
                raise self.fail("expected pytrees or threshold", tok)
        kids = self.body()
        return Draft(Parallel(ParallelPolicy(threshold, flavor), sync), name, kids)

    def leaf(self) -> Draft:
        self.next()
        name = self.expect_name("leaf name")
        statuses = frozenset(_STATUS_BY_LETTER.values())
        if self.eat_word("statuses"):
            tok = self.next()
            if tok.kind != "ident":
                raise self.fail("expected status letters", tok)
            seen = set()
            for ch in tok.text:
                if ch not in _STATUS_BY_LETTER:
                    raise self.fail(f"bad status letter {ch!r} (use S, F, R)", tok)
                if ch in seen:
                    raise self.fail(f"duplicate status letter {ch!r}", tok)
                seen.add(ch)
            statuses = frozenset(_STATUS_BY_LETTER[ch] for ch in seen)
        effects: list[BlackboardEffect] = []
        if self.peek().text == "{":
            self.next()
            while not (self.peek().kind == "punct" and self.peek().text == "}"):
                effects.append(self.effect())
            self.next()
        letters = "".join(s.letter for s in (SUCCESS, FAILURE, RUNNING)
                          if s in statuses)
        return leaf_draft(name, letters, effects)

    def effect(self) -> BlackboardEffect:
        self.expect_word("on")
        tok = self.next()
        if tok.text == "tick":
            trigger: Union[OnTick, OnStatus] = OnTick()
        elif tok.text in _STATUS_BY_LETTER:
            trigger = OnStatus(_STATUS_BY_LETTER[tok.text])
        else:
            raise self.fail(f"expected a trigger (tick, S, F, R), found {tok.text!r}", tok)
        self.expect_punct(":")
        variable = self.expect_name("variable name")
        self.expect_punct(":=")
        if self.at_word("any"):
            self.next()
            return BlackboardEffect(variable, trigger, Nondet())
        if self.at_word("map"):
            self.next()
            entries: dict[Status, Any] = {}
            tok = self.expect_punct("(")
            while True:
                stok = self.next()
                if stok.text not in _STATUS_BY_LETTER:
                    raise self.fail(f"expected a status letter, found {stok.text!r}", stok)
                status = _STATUS_BY_LETTER[stok.text]
                if status in entries:
                    raise self.fail(f"duplicate map key {stok.text!r}", stok)
                self.expect_punct("->")
                entries[status] = self.value()
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            self.expect_punct(")")
            return BlackboardEffect(variable, trigger, SetFromStatus.of(entries))
        return BlackboardEffect(variable, trigger, SetConstant(self.value()))

    def status_mapping(self) -> dict[Status, Status]:
        self.expect_punct("(")
        mapping: dict[Status, Status] = {}
        while True:
            tok = self.next()
            if tok.text not in _STATUS_BY_LETTER:
                raise self.fail(f"expected a status letter, found {tok.text!r}", tok)
            key = _STATUS_BY_LETTER[tok.text]
            if key in mapping:
                raise self.fail(f"duplicate map key {tok.text!r}", tok)
            self.expect_punct("->")
            tok = self.next()
            if tok.text not in _STATUS_BY_LETTER:
                raise self.fail(f"expected a status letter, found {tok.text!r}", tok)
            mapping[key] = _STATUS_BY_LETTER[tok.text]
            if self.peek().text == ",":
                self.next()
                continue
            break
        self.expect_punct(")")
        return mapping

    def body(self) -> list[Draft]:
        self.expect_punct("{")
        kids = []
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            kids.append(self.node())
        self.next()
        return kids


def parse(text: str, filename: str = "<dsl>") -> Document:
    return _Parser(text, filename).document()


# ---------------------------------------------------------------------------
# Canonical serializer
# ---------------------------------------------------------------------------

def _format_value(v: Any) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    return str(v)


def _format_domain(d: Domain) -> str:
    if isinstance(d, BoolDomain):
        return "bool"
    if isinstance(d, IntDomain):
        return f"int[{d.lo}..{d.hi}]"
    return "enum{" + ", ".join(d.values) + "}"


def _format_update(u: Any) -> str:
    if isinstance(u, Nondet):
        return "any"
    if isinstance(u, SetConstant):
        return _format_value(u.value)
    entries = u.as_dict()
    parts = [f"{s.letter} -> {_format_value(entries[s])}"
             for s in (SUCCESS, FAILURE, RUNNING) if s in entries]
    return "map(" + ", ".join(parts) + ")"


def _format_trigger(t: Union[OnTick, OnStatus]) -> str:
    return "tick" if isinstance(t, OnTick) else t.status.letter


def serialize(doc: Union[Document, Tree]) -> str:
    """Canonical text: explicit names everywhere, 2-space indent, bare-ident
    shorthand for plain leaves, defaults omitted.
    """
    if isinstance(doc, Tree):
        doc = Document(doc)
    tree = doc.tree
    for node in tree.nodes:
        if node.name in RESERVED_WORDS:
            raise DslError(f"node name {node.name!r} is a reserved word and "
                           "cannot be serialized")

    sections = [f"format {FORMAT_VERSION}"]
    if tree.blackboard:
        lines = ["blackboard {"]
        for d in tree.blackboard:
            lines.append(f"  {d.name}: {_format_domain(d.domain)} = "
                         f"{_format_value(d.initial)}")
        lines.append("}")
        sections.append("\n".join(lines))
    if doc.blackboard_file is not None:
        sections.append(f'blackboard_file "{doc.blackboard_file}"')
    if doc.spec_file is not None:
        sections.append(f'spec_file "{doc.spec_file}"')

    out: list[str] = []

    def emit(n: int, depth: int) -> None:
        pad = "  " * depth
        kind = tree.kind(n)
        name = tree.name(n)
        if isinstance(kind, Leaf):
            prof = kind.profile
            full = frozenset(_STATUS_BY_LETTER.values())
            if prof.statuses == full and not prof.effects:
                out.append(pad + name)
                return
            head = f"leaf {name}"
            if prof.statuses != full:
                head += f" statuses {prof.status_letters()}"
            if prof.effects:
                out.append(pad + head + " {")
                for e in prof.effects:
                    out.append(f"{pad}  on {_format_trigger(e.trigger)}: "
                               f"{e.variable} := {_format_update(e.update)}")
                out.append(pad + "}")
            else:
                out.append(pad + head)
            return
        if isinstance(kind, Decorator):
            if isinstance(kind.kind, OneShot):
                head = f"oneshot {name}"
            else:
                m = kind.kind.as_dict()
                label = next((lbl for lbl, sm in STATUS_MAP_SHORTHANDS.items()
                              if sm == m), None)
                if label:
                    head = f"{label} {name}"
                else:
                    pairs = ", ".join(f"{s.letter} -> {m[s].letter}"
                                      for s in (SUCCESS, FAILURE, RUNNING))
                    head = f"statusmap {name} ({pairs})"
            out.append(pad + head + " {")
            emit(tree.first_child(n), depth + 1)
            out.append(pad + "}")
            return
        if isinstance(kind, (Selector, Sequence)):
            word = "selector" if isinstance(kind, Selector) else "sequence"
            head = f"{word} {name}" + (" memory" if kind.memory else "")
        else:
            head = f"parallel {name}" + (" sync" if kind.synchronized else "")
            thr = kind.policy.threshold
            head += f" {thr}" if isinstance(thr, str) else f" threshold={thr}"
            if kind.policy.flavor is ParallelFlavor.THRESHOLD:
                head += " flavor=threshold"
        out.append(pad + head + " {")
        for c in tree.children(n):
            emit(c, depth + 1)
        out.append(pad + "}")

    emit(tree.root, 0)
    sections.append("\n".join(out))
    return "\n\n".join(sections) + "\n"


# ---------------------------------------------------------------------------
# JSON mirror
# ---------------------------------------------------------------------------

def _domain_to_json(d: Domain) -> dict:
    if isinstance(d, BoolDomain):
        return {"kind": "bool"}
    if isinstance(d, IntDomain):
        return {"kind": "int", "lo": d.lo, "hi": d.hi}
    return {"kind": "enum", "values": list(d.values)}


def _update_to_json(u: Any) -> dict:
    if isinstance(u, Nondet):
        return {"kind": "any"}
    if isinstance(u, SetConstant):
        return {"kind": "set", "value": u.value}
    entries = u.as_dict()
    return {"kind": "from_status",
            "map": {s.letter: entries[s] for s in (SUCCESS, FAILURE, RUNNING)
                    if s in entries}}


def _node_to_json(tree: Tree, n: int) -> dict:
    kind = tree.kind(n)
    name = tree.name(n)
    kids = [_node_to_json(tree, c) for c in tree.children(n)]
    if isinstance(kind, Leaf):
        prof = kind.profile
        return {
            "kind": "leaf",
            "name": name,
            "statuses": prof.status_letters(),
            "effects": [
                {"trigger": _format_trigger(e.trigger),
                 "variable": e.variable,
                 "update": _update_to_json(e.update)}
                for e in prof.effects
            ],
        }
    if isinstance(kind, Decorator):
        if isinstance(kind.kind, OneShot):
            return {"kind": "oneshot", "name": name, "children": kids}
        m = kind.kind.as_dict()
        return {"kind": "statusmap", "name": name,
                "map": {s.letter: m[s].letter for s in (SUCCESS, FAILURE, RUNNING)},
                "children": kids}
    if isinstance(kind, Parallel):
        return {"kind": "parallel", "name": name,
                "threshold": kind.policy.threshold,
                "flavor": kind.policy.flavor.value,
                "synchronized": kind.synchronized,
                "children": kids}
    word = "selector" if isinstance(kind, Selector) else "sequence"
    return {"kind": word, "name": name, "memory": kind.memory, "children": kids}


def to_json(doc: Union[Document, Tree]) -> str:
    if isinstance(doc, Tree):
        doc = Document(doc)
    tree = doc.tree
    obj = {
        "format": FORMAT_VERSION,
        "blackboard": [
            {"name": d.name, "type": _domain_to_json(d.domain),
             "initial": d.initial}
            for d in tree.blackboard
        ],
        "blackboard_file": doc.blackboard_file,
        "spec_file": doc.spec_file,
        "root": _node_to_json(tree, tree.root),
    }
    return json.dumps(obj, indent=2) + "\n"


def _want(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise JsonError(f"{where}: expected an object")
    if key not in obj:
        raise JsonError(f"{where}: missing {key!r}")
    return obj[key]


def _status_from_letter(letter: Any, where: str) -> Status:
    if letter not in _STATUS_BY_LETTER:
        raise JsonError(f"{where}: bad status letter {letter!r}")
    return _STATUS_BY_LETTER[letter]


def _domain_from_json(obj: dict, where: str) -> Domain:
    kind = _want(obj, "kind", where)
    if kind == "bool":
        return BoolDomain()
    if kind == "int":
        return IntDomain(int(_want(obj, "lo", where)), int(_want(obj, "hi", where)))
    if kind == "enum":
        return EnumDomain(tuple(_want(obj, "values", where)))
    raise JsonError(f"{where}: unknown type kind {kind!r}")


def _update_from_json(obj: dict, where: str) -> Any:
    kind = _want(obj, "kind", where)
    if kind == "any":
        return Nondet()
    if kind == "set":
        return SetConstant(_want(obj, "value", where))
    if kind == "from_status":
        m = _want(obj, "map", where)
        return SetFromStatus.of({
            _status_from_letter(k, where): v for k, v in m.items()})
    raise JsonError(f"{where}: unknown update kind {kind!r}")


def _node_from_json(obj: dict, where: str) -> Draft:
    kind = _want(obj, "kind", where)
    name = _want(obj, "name", where)
    here = f"{where}.{name}" if name else where
    kids = [_node_from_json(c, here)
            for c in obj.get("children", [])]
    if kind == "leaf":
        if kids:
            raise JsonError(f"{here}: a leaf cannot have children")
        effects = []
        for i, e in enumerate(obj.get("effects", [])):
            ewhere = f"{here}.effects[{i}]"
            trig = _want(e, "trigger", ewhere)
            trigger = OnTick() if trig == "tick" else \
                OnStatus(_status_from_letter(trig, ewhere))
            effects.append(BlackboardEffect(
                _want(e, "variable", ewhere), trigger,
                _update_from_json(_want(e, "update", ewhere), ewhere)))
        letters = _want(obj, "statuses", here)
        seen = set()
        for ch in letters:
            _status_from_letter(ch, here)
            if ch in seen:
                raise JsonError(f"{here}: duplicate status letter {ch!r}")
            seen.add(ch)
        return leaf_draft(name, letters, effects)
    if kind == "oneshot":
        return Draft(Decorator(OneShot()), name, kids)
    if kind == "statusmap":
        m = _want(obj, "map", here)
        mapping = {_status_from_letter(k, here): _status_from_letter(v, here)
                   for k, v in m.items()}
        label = next((lbl for lbl, sm in STATUS_MAP_SHORTHANDS.items()
                      if sm == mapping), "")
        return Draft(Decorator(StatusMap.of(mapping, label)), name, kids)
    if kind == "parallel":
        threshold = _want(obj, "threshold", here)
        if not (isinstance(threshold, int) or threshold in ("one", "all")):
            raise JsonError(f"{here}: bad threshold {threshold!r}")
        flavor_word = obj.get("flavor", "pytrees")
        try:
            flavor = ParallelFlavor(flavor_word)
        except ValueError:
            raise JsonError(f"{here}: unknown flavor {flavor_word!r}") from None
        return Draft(Parallel(ParallelPolicy(threshold, flavor),
                              bool(obj.get("synchronized", False))), name, kids)
    if kind in ("selector", "sequence"):
        memory = bool(obj.get("memory", False))
        k = Selector(memory) if kind == "selector" else Sequence(memory)
        return Draft(k, name, kids)
    raise JsonError(f"{here}: unknown node kind {kind!r}")


def from_json(text: str) -> Document:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise JsonError(f"not valid JSON: {e}") from None
    version = _want(obj, "format", "document")
    if version != FORMAT_VERSION:
        raise JsonError(f"unsupported format {version!r}")
    decls = []
    for i, d in enumerate(obj.get("blackboard", [])):
        where = f"blackboard[{i}]"
        decls.append(BlackboardDecl(
            _want(d, "name", where),
            _domain_from_json(_want(d, "type", where), where),
            _want(d, "initial", where)))
    root = _node_from_json(_want(obj, "root", "document"), "root")
    return Document(build(root, decls),
                    obj.get("blackboard_file"), obj.get("spec_file"))
