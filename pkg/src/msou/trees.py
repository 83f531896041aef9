"""Tree representations: finite trees, regular trees (finite class graphs),
lazy sources, node paths, and the shared text formats.

Letters are a base identifier plus a stack of annotation layers; relabeling
automata append one annotation layer each.  Plain user alphabets are letters
with an empty annotation stack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Protocol

from .errors import InputError, PathError

# Letters injected by engine constructions; user alphabets may not declare them.
RESERVED_LETTERS = frozenset({"omega", "nd", "?", "#cut"})

NodePath = tuple[int, ...]
ROOT_PATH: NodePath = ()


def canon_key(x):
    """Total order key over the hashable values used as states/phenotypes."""
    if isinstance(x, bool):
        return (0, "1" if x else "0")
    if isinstance(x, int):
        return (0, f"{x:020d}")
    if isinstance(x, str):
        return (1, x)
    if isinstance(x, tuple):
        return (2, tuple(canon_key(y) for y in x))
    if isinstance(x, frozenset):
        return (3, tuple(sorted(canon_key(y) for y in x)))
    if isinstance(x, Letter):
        return (4, canon_key(x.base), canon_key(x.anns))
    return (9, repr(x))


def key_text(x) -> str:
    """Deterministic compact rendering of states/phenotypes for labels and reports."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, str)):
        return str(x)
    if isinstance(x, tuple):
        return "(" + ",".join(key_text(y) for y in x) + ")"
    if isinstance(x, frozenset):
        return "{" + ",".join(sorted((key_text(y) for y in x), )) + "}"
    if isinstance(x, Letter):
        return letter_text(x)
    return repr(x)


# One annotation layer: a function state -> {0,1,2}, stored canonically sorted.
Annotation = tuple[tuple[object, int], ...]


def make_annotation(mapping) -> Annotation:
    items = tuple(sorted(mapping.items(), key=lambda kv: canon_key(kv[0])))
    for _, v in items:
        if v not in (0, 1, 2):
            raise InputError(f"annotation value {v!r} outside 0/1/2")
    return items


@dataclass(frozen=True)
class Letter:
    """A tree label: base identifier plus appended annotation layers."""

    base: str
    anns: tuple[Annotation, ...] = ()

    def is_reserved(self) -> bool:
        return self.base in RESERVED_LETTERS

    def with_annotation(self, mapping) -> "Letter":
        return Letter(self.base, self.anns + (make_annotation(mapping),))

    def project(self, keep: tuple[int, ...] | None) -> "Letter":
        """Keep only the annotation layers at the given indices (None = identity)."""
        if keep is None:
            return self
        return Letter(self.base, tuple(self.anns[i] for i in keep if i < len(self.anns)))

    def ann_value(self, layer: int, state) -> int:
        for k, v in self.anns[layer]:
            if k == state:
                return v
        raise KeyError(state)

    def __repr__(self):
        return f"Letter({letter_text(self)!r})"


def letter_text(letter: Letter) -> str:
    if not letter.anns:
        return letter.base
    parts = [letter.base]
    for ann in letter.anns:
        parts.append("[" + ",".join(f"{key_text(k)}:{v}" for k, v in ann) + "]")
    return "(" + ",".join(parts) + ")"


OMEGA = Letter("omega")
CUT = Letter("#cut")
ND = Letter("nd")
QMARK = Letter("?")


class FiniteTree:
    """An immutable finite ordered tree with labeled nodes."""

    __slots__ = ("label", "children", "size", "height", "_hash")

    def __init__(self, label: Letter, children: tuple["FiniteTree", ...] = ()):
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "children", tuple(children))
        object.__setattr__(self, "size", 1 + sum(c.size for c in self.children))
        object.__setattr__(
            self, "height", 1 + max((c.height for c in self.children), default=0)
        )
        object.__setattr__(self, "_hash", hash((label, self.children)))

    def __setattr__(self, name, value):
        raise AttributeError("FiniteTree is immutable")

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, FiniteTree):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.label == other.label
            and self.children == other.children
        )

    @property
    def arity(self) -> int:
        return len(self.children)

    def nodes(self, prefix: NodePath = ()) -> Iterator[tuple[NodePath, "FiniteTree"]]:
        """Preorder traversal of (path, subtree) pairs."""
        yield prefix, self
        for i, c in enumerate(self.children, start=1):
            yield from c.nodes(prefix + (i,))

    def paths(self) -> list[NodePath]:
        return [p for p, _ in self.nodes()]

    def letters(self) -> frozenset[Letter]:
        return frozenset(st.label for _, st in self.nodes())

    def max_arity(self) -> int:
        return max((st.arity for _, st in self.nodes()), default=0)

    def __repr__(self):
        return f"FiniteTree({format_tree(self)!r})"


def tree(label, *children) -> FiniteTree:
    """Convenience constructor; accepts a bare string for the label."""
    if isinstance(label, str):
        label = Letter(label)
    return FiniteTree(label, tuple(children))


def subtree(t: FiniteTree, path: NodePath) -> FiniteTree:
    """Subtree starting at the node addressed by `path` (1-based child steps)."""
    cur = t
    for k, step in enumerate(path):
        if step < 1 or step > cur.arity:
            raise PathError(path, path[:k])
        cur = cur.children[step - 1]
    return cur


def same_shape(t1: FiniteTree, t2: FiniteTree) -> bool:
    """True iff the two trees have the same node set (labels ignored)."""
    if t1.arity != t2.arity:
        return False
    return all(same_shape(a, b) for a, b in zip(t1.children, t2.children))


def relabel(t: FiniteTree, fn) -> FiniteTree:
    return FiniteTree(fn(t), tuple(relabel(c, fn) for c in t.children))


# ---------------------------------------------------------------------------
# Regular trees


@dataclass(frozen=True)
class RegularTree:
    """Finite presentation of a tree with finitely many distinct subtrees.

    `rule` maps each class to its label and the classes of its children; the
    denoted tree unfolds the rules coinductively from `root`.
    """

    rule: dict
    root: str
    max_arity: int | None = None

    @property
    def classes(self) -> frozenset[str]:
        return frozenset(self.rule)

    def label(self, cls: str) -> Letter:
        return self.rule[cls][0]

    def kids(self, cls: str) -> tuple[str, ...]:
        return self.rule[cls][1]

    def letters(self) -> frozenset[Letter]:
        return frozenset(le for le, _ in self.rule.values())

    def arity_bound(self) -> int:
        return max((len(ks) for _, ks in self.rule.values()), default=0)

    def reachable(self) -> list[str]:
        """Classes reachable from the root, in deterministic BFS order."""
        seen, order, queue = {self.root}, [self.root], [self.root]
        while queue:
            cls = queue.pop(0)
            if cls not in self.rule:
                continue
            for k in self.kids(cls):
                if k not in seen:
                    seen.add(k)
                    order.append(k)
                    queue.append(k)
        return order

    def __repr__(self):
        return f"RegularTree({format_regular(self)!r})"


def regular(rules: dict, root: str, max_arity: int | None = None) -> RegularTree:
    """Convenience constructor; rules map class -> (label, child classes)."""
    norm = {}
    for cls, (label, kids) in rules.items():
        if isinstance(label, str):
            label = Letter(label)
        norm[cls] = (label, tuple(kids))
    return RegularTree(norm, root, max_arity)


def validate_regular(r: RegularTree) -> list[str]:
    """Check the class-graph invariants; returns non-fatal warnings.

    Raises InputError on dangling classes or arity overflow; unreachable
    classes only produce a warning.
    """
    if r.root not in r.rule:
        raise InputError(f"root class {r.root!r} has no rule")
    for cls in sorted(r.rule):
        _, kids = r.rule[cls]
        for k in kids:
            if k not in r.rule:
                raise InputError(f"class {cls!r} references undefined class {k!r}")
        if r.max_arity is not None and len(kids) > r.max_arity:
            raise InputError(
                f"class {cls!r} has arity {len(kids)} above bound {r.max_arity}"
            )
    reach = set(r.reachable())
    return [f"class {c!r} unreachable from root" for c in sorted(r.rule) if c not in reach]


def unfold(r: RegularTree, depth: int) -> FiniteTree:
    """Depth-limited unfolding of the denoted tree.

    Nodes at the frontier depth keep their label when they are leaves and
    become `#cut` leaves when subtrees had to be discarded.
    """
    if depth < 0:
        raise InputError("depth must be nonnegative")

    def build(cls: str, d: int) -> FiniteTree:
        label, kids = r.rule[cls]
        if d == depth:
            if kids:
                return FiniteTree(CUT)
            return FiniteTree(label)
        return FiniteTree(label, tuple(build(k, d + 1) for k in kids))

    return build(r.root, 0)


# ---------------------------------------------------------------------------
# Lazy sources


class LazyTreeSource(Protocol):
    """Deterministic producer contract for possibly infinite trees."""

    def label(self) -> Letter: ...

    def arity(self) -> int: ...

    def child(self, i: int) -> "LazyTreeSource": ...


@dataclass(frozen=True)
class RegularSource:
    """LazyTreeSource view of a regular tree class."""

    tree_: RegularTree
    cls: str

    def label(self) -> Letter:
        return self.tree_.label(self.cls)

    def arity(self) -> int:
        return len(self.tree_.kids(self.cls))

    def child(self, i: int) -> "RegularSource":
        kids = self.tree_.kids(self.cls)
        if not 1 <= i <= len(kids):
            raise PathError((i,), ())
        return RegularSource(self.tree_, kids[i - 1])


def source_of_regular(r: RegularTree) -> RegularSource:
    return RegularSource(r, r.root)


def materialize(source: LazyTreeSource, depth: int) -> FiniteTree:
    """Depth-limited materialization with the same frontier rule as `unfold`."""
    if depth < 0:
        raise InputError("depth must be nonnegative")

    def build(src: LazyTreeSource, d: int) -> FiniteTree:
        r = src.arity()
        if d == depth:
            if r:
                return FiniteTree(CUT)
            return FiniteTree(src.label())
        return FiniteTree(src.label(), tuple(build(src.child(i), d + 1) for i in range(1, r + 1)))

    return build(source, 0)


# ---------------------------------------------------------------------------
# Text formats


_IDENT_EXTRA = "_'#?"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch in _IDENT_EXTRA


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "%":  # comment to end of line
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self.pos += 1
            else:
                break

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        self.skip_ws()
        if not self.text.startswith(ch, self.pos):
            raise InputError(f"expected {ch!r} at position {self.pos} in {self.text!r}")
        self.pos += len(ch)

    def try_take(self, ch: str) -> bool:
        self.skip_ws()
        if self.text.startswith(ch, self.pos):
            self.pos += len(ch)
            return True
        return False

    def ident(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and _is_ident_char(self.text[self.pos]):
            self.pos += 1
        if self.pos == start:
            raise InputError(f"expected identifier at position {start} in {self.text!r}")
        return self.text[start:self.pos]

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise InputError(f"expected integer at position {start}")
        return int(self.text[start:self.pos])

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def _parse_term(sc: _Scanner) -> FiniteTree:
    name = sc.ident()
    children = []
    if sc.try_take("["):
        if not sc.try_take("]"):
            while True:
                children.append(_parse_term(sc))
                if sc.try_take("]"):
                    break
                sc.expect(",")
    return FiniteTree(Letter(name), tuple(children))


def parse_tree(text: str) -> FiniteTree:
    """Parse the term syntax `a[t1,...,tr]`; zero-child brackets omissible."""
    sc = _Scanner(text)
    t = _parse_term(sc)
    if not sc.at_end():
        raise InputError(f"trailing input at position {sc.pos} in {text!r}")
    return t


def format_tree(t: FiniteTree) -> str:
    head = letter_text(t.label)
    if not t.children:
        return head
    return head + "[" + ",".join(format_tree(c) for c in t.children) + "]"


def parse_regular(text: str) -> RegularTree:
    """Parse the class-per-line format: `class w = a[w, l]` plus `root w`."""
    rule = {}
    root = None
    for raw in text.splitlines():
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        sc = _Scanner(line)
        kw = sc.ident()
        if kw == "root":
            root = sc.ident()
        elif kw == "class":
            cls = sc.ident()
            sc.expect("=")
            name = sc.ident()
            kids = []
            if sc.try_take("["):
                if not sc.try_take("]"):
                    while True:
                        kids.append(sc.ident())
                        if sc.try_take("]"):
                            break
                        sc.expect(",")
            if cls in rule:
                raise InputError(f"class {cls!r} defined twice")
            rule[cls] = (Letter(name), tuple(kids))
        else:
            raise InputError(f"unknown keyword {kw!r} in regular-tree file")
        if not sc.at_end():
            raise InputError(f"trailing input in line {line!r}")
    if root is None:
        raise InputError("missing `root` line")
    r = RegularTree(rule, root)
    validate_regular(r)
    return r


def format_regular(r: RegularTree) -> str:
    lines = []
    for cls in sorted(r.rule):
        label, kids = r.rule[cls]
        rhs = letter_text(label)
        if kids:
            rhs += "[" + ", ".join(kids) + "]"
        lines.append(f"class {cls} = {rhs}")
    lines.append(f"root {r.root}")
    return "\n".join(lines) + "\n"


def regular_to_dot(r: RegularTree, name: str = "classes") -> str:
    """DOT rendering of the class graph."""
    lines = [f"digraph {name} {{"]
    for cls in sorted(r.rule):
        label, _ = r.rule[cls]
        shape = "doublecircle" if cls == r.root else "circle"
        lines.append(f'  "{cls}" [label="{cls}: {letter_text(label)}", shape={shape}];')
    for cls in sorted(r.rule):
        _, kids = r.rule[cls]
        for i, k in enumerate(kids, start=1):
            lines.append(f'  "{cls}" -> "{k}" [label="{i}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
