"""Monadic second-order logic with two set-variable kinds and the unbounding
quantifier, evaluated directly on finite trees.

Variables come in two kinds: finite-set variables and arbitrary-set variables.
The unbounding quantifier binds a finite-set variable and holds when its body
is satisfiable by finite sets of every cardinality; it may only be applied
when all free variables of the body are finite-set kind.

The direct evaluator is the package's oracle: quantifiers enumerate subsets of
the node set as bitmasks over a preorder node list.  It is deliberately
literal and is capped, not optimized, beyond memoization.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import FormulaError, InputError, ResourceCapError
from .trees import FiniteTree, Letter, NodePath, canon_key, letter_text

FIN = "fin"
INF = "inf"

# Quantified formulas refuse trees with more nodes than this.
QUANTIFIER_NODE_CAP = 16


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = FIN

    def __post_init__(self):
        if self.kind not in (FIN, INF):
            raise FormulaError(f"unknown variable kind {self.kind!r}")

    def __repr__(self):
        return f"{self.name}:{self.kind}"


def fin(name: str) -> Variable:
    return Variable(name, FIN)


def inf(name: str) -> Variable:
    return Variable(name, INF)


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    """Every node in the set has this letter, after projecting annotations."""

    letter: Letter
    var: Variable
    keep: tuple[int, ...] | None = None


@dataclass(frozen=True)
class LabelIn(Formula):
    """Every node in the set has a (projected) label from the given set."""

    letters: frozenset[Letter]
    var: Variable
    keep: tuple[int, ...] | None = None


@dataclass(frozen=True)
class ChildAt(Formula):
    """Both sets are singletons and the right node is the i-th child of the left."""

    left: Variable
    index: int
    right: Variable

    def __post_init__(self):
        if self.index < 1:
            raise FormulaError("child index must be >= 1")


@dataclass(frozen=True)
class Subset(Formula):
    left: Variable
    right: Variable


@dataclass(frozen=True)
class DescIn(Formula):
    """`root` is a singleton and every node of `inside` weakly descends from it.

    Evaluation-level primitive used by relativization; not supported by the
    phenotype or compiler pipelines.
    """

    root: Variable
    inside: Variable


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Not(Formula):
    inner: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: Variable
    body: Formula


@dataclass(frozen=True)
class ExistsFin(Formula):
    var: Variable
    body: Formula


@dataclass(frozen=True)
class Unbounded(Formula):
    """For every n the body holds for some finite set of cardinality >= n."""

    var: Variable
    body: Formula


_QUANTIFIERS = (Exists, ExistsFin, Unbounded)

# ---------------------------------------------------------------------------
# Structural helpers

_FREE_CACHE: dict[int, frozenset[Variable]] = {}
_KEEPALIVE: list[Formula] = []


def free_vars(f: Formula) -> frozenset[Variable]:
    got = _FREE_CACHE.get(id(f))
    if got is not None:
        return got
    if isinstance(f, (Atom, LabelIn)):
        out = frozenset({f.var})
    elif isinstance(f, ChildAt):
        out = frozenset({f.left, f.right})
    elif isinstance(f, Subset):
        out = frozenset({f.left, f.right})
    elif isinstance(f, DescIn):
        out = frozenset({f.root, f.inside})
    elif isinstance(f, And):
        out = free_vars(f.left) | free_vars(f.right)
    elif isinstance(f, Not):
        out = free_vars(f.inner)
    elif isinstance(f, _QUANTIFIERS):
        out = free_vars(f.body) - {f.var}
    else:
        raise FormulaError(f"unknown formula node {f!r}")
    _FREE_CACHE[id(f)] = out
    _KEEPALIVE.append(f)
    return out


def subformulas(f: Formula):
    yield f
    if isinstance(f, And):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, Not):
        yield from subformulas(f.inner)
    elif isinstance(f, _QUANTIFIERS):
        yield from subformulas(f.body)


def is_sentence(f: Formula) -> bool:
    return not free_vars(f)


def in_fragment(f: Formula) -> bool:
    """True iff only finite-set binders occur (no arbitrary-set quantifier)."""
    return not any(isinstance(g, Exists) for g in subformulas(f))


def check_wf(f: Formula) -> None:
    """Well-formedness: binder kinds, the finite-free-variable restriction on
    the unbounding quantifier, and name uniqueness along each scope chain."""

    def walk(g: Formula, scope: dict[str, Variable]):
        if isinstance(g, (Atom, LabelIn)):
            _occurs(g.var, scope)
        elif isinstance(g, (ChildAt, Subset)):
            _occurs(g.left, scope)
            _occurs(g.right, scope)
        elif isinstance(g, DescIn):
            _occurs(g.root, scope)
            _occurs(g.inside, scope)
        elif isinstance(g, And):
            walk(g.left, scope)
            walk(g.right, scope)
        elif isinstance(g, Not):
            walk(g.inner, scope)
        elif isinstance(g, _QUANTIFIERS):
            v = g.var
            if isinstance(g, Exists) and v.kind != INF:
                raise FormulaError(
                    f"exists binds arbitrary-set variables only, got {v!r}"
                )
            if isinstance(g, (ExistsFin, Unbounded)) and v.kind != FIN:
                raise FormulaError(
                    f"{type(g).__name__} binds finite-set variables only, got {v!r}"
                )
            if v.name in scope:
                raise FormulaError(f"variable {v.name!r} shadows an enclosing binding")
            if isinstance(g, Unbounded):
                bad = [w for w in free_vars(g.body) if w.kind != FIN]
                if bad:
                    raise FormulaError(
                        "unbounding quantifier requires all free variables of its "
                        f"body to be finite-set kind; offending: {bad[0].name!r}"
                    )
            walk(g.body, {**scope, v.name: v})
        else:
            raise FormulaError(f"unknown formula node {g!r}")

    def _occurs(v: Variable, scope: dict[str, Variable]):
        bound = scope.get(v.name)
        if bound is not None and bound != v:
            raise FormulaError(
                f"occurrence {v!r} disagrees with binder {bound!r} of the same name"
            )

    free = free_vars(f)
    by_name: dict[str, Variable] = {}
    for v in free:
        if v.name in by_name and by_name[v.name] != v:
            raise FormulaError(f"free variable {v.name!r} used with two kinds")
        by_name[v.name] = v
    walk(f, dict(by_name))


# ---------------------------------------------------------------------------
# Valuations

Valuation = Mapping[Variable, frozenset[NodePath]]

EMPTY_VALUATION: dict[Variable, frozenset[NodePath]] = {}


def normalize_valuation(v: Valuation) -> dict[Variable, frozenset[NodePath]]:
    return {var: frozenset(tuple(p) for p in paths) for var, paths in v.items()}


def restrict_valuation(v: Valuation, u: NodePath) -> dict[Variable, frozenset[NodePath]]:
    """The valuation of the subtree at `u`: strip the prefix `u` from members."""
    n = len(u)
    out = {}
    for var, paths in v.items():
        out[var] = frozenset(p[n:] for p in paths if p[:n] == tuple(u))
    return out


# ---------------------------------------------------------------------------
# Mask-based evaluation engine


class TreeIndex:
    """Preorder node indexing of a finite tree for bitmask set encodings."""

    __slots__ = ("tree", "n", "paths", "path_to_bit", "child_bits", "full",
                 "desc_mask", "_letter_masks", "_subs")

    def __init__(self, t: FiniteTree):
        self.tree = t
        pairs = list(t.nodes())
        self.n = len(pairs)
        self.paths = [p for p, _ in pairs]
        self.path_to_bit = {p: i for i, (p, _) in enumerate(pairs)}
        self.full = (1 << self.n) - 1
        self.child_bits = []
        self.desc_mask = [0] * self.n
        for i, (p, st) in enumerate(pairs):
            self.child_bits.append(
                [self.path_to_bit[p + (k,)] for k in range(1, st.arity + 1)]
            )
            # Preorder makes each subtree a contiguous bit range.
            self.desc_mask[i] = ((1 << st.size) - 1) << i
        self._letter_masks: dict = {}
        self._subs = [st for _, st in pairs]

    def label_mask(self, letters: frozenset[Letter], keep) -> int:
        key = (letters, keep)
        got = self._letter_masks.get(key)
        if got is None:
            got = 0
            for i, st in enumerate(self._subs):
                if st.label.project(keep) in letters:
                    got |= 1 << i
            self._letter_masks[key] = got
        return got

    def mask_of(self, paths: Iterable[NodePath]) -> int:
        m = 0
        for p in paths:
            bit = self.path_to_bit.get(tuple(p))
            if bit is None:
                raise InputError(f"valuation path {list(p)} not a node of the tree")
            m |= 1 << bit
        return m

    def paths_of(self, mask: int) -> frozenset[NodePath]:
        return frozenset(self.paths[i] for i in range(self.n) if mask >> i & 1)


_INDEX_CACHE: dict[FiniteTree, TreeIndex] = {}


def tree_index(t: FiniteTree) -> TreeIndex:
    idx = _INDEX_CACHE.get(t)
    if idx is None:
        idx = TreeIndex(t)
        _INDEX_CACHE[t] = idx
    return idx


_FREE_ORDER_CACHE: dict[int, tuple[Variable, ...]] = {}


def _free_order(f: Formula) -> tuple[Variable, ...]:
    got = _FREE_ORDER_CACHE.get(id(f))
    if got is None:
        got = tuple(sorted(free_vars(f), key=lambda v: (v.name, v.kind)))
        _FREE_ORDER_CACHE[id(f)] = got
    return got


_EVAL_CACHE: dict = {}


def clear_caches():
    _EVAL_CACHE.clear()
    _INDEX_CACHE.clear()


def _check_cap(f: Formula, idx: TreeIndex):
    if idx.n > QUANTIFIER_NODE_CAP and any(
        isinstance(g, _QUANTIFIERS) for g in subformulas(f)
    ):
        raise ResourceCapError(
            f"direct evaluation of quantified formulas is capped at "
            f"{QUANTIFIER_NODE_CAP} nodes; tree has {idx.n}"
        )


def _eval_masks(f: Formula, idx: TreeIndex, env: dict[Variable, int]) -> bool:
    key = (id(f), idx.tree, tuple(env.get(v, 0) for v in _free_order(f)))
    got = _EVAL_CACHE.get(key)
    if got is not None:
        return got
    out = _eval_masks_raw(f, idx, env)
    _EVAL_CACHE[key] = out
    return out


def _eval_masks_raw(f: Formula, idx: TreeIndex, env) -> bool:
    if isinstance(f, Atom):
        return env[f.var] & ~idx.label_mask(frozenset({f.letter}), f.keep) == 0
    if isinstance(f, LabelIn):
        return env[f.var] & ~idx.label_mask(f.letters, f.keep) == 0
    if isinstance(f, Subset):
        return env[f.left] & ~env[f.right] == 0
    if isinstance(f, ChildAt):
        mx, my = env[f.left], env[f.right]
        if mx.bit_count() != 1 or my.bit_count() != 1:
            return False
        x = mx.bit_length() - 1
        kids = idx.child_bits[x]
        return f.index <= len(kids) and (1 << kids[f.index - 1]) == my
    if isinstance(f, DescIn):
        mr, mi = env[f.root], env[f.inside]
        if mr.bit_count() != 1:
            return False
        return mi & ~idx.desc_mask[mr.bit_length() - 1] == 0
    if isinstance(f, And):
        return _eval_masks(f.left, idx, env) and _eval_masks(f.right, idx, env)
    if isinstance(f, Not):
        return not _eval_masks(f.inner, idx, env)
    if isinstance(f, (Exists, ExistsFin)):
        # On finite trees arbitrary-set and finite-set quantification coincide.
        for s in range(idx.full + 1):
            if _eval_masks(f.body, idx, {**env, f.var: s}):
                return True
        return False
    if isinstance(f, Unbounded):
        # Needs witnesses of every cardinality up to one past the node count.
        for n in range(idx.n + 2):
            if not any(
                s.bit_count() >= n and _eval_masks(f.body, idx, {**env, f.var: s})
                for s in range(idx.full + 1)
            ):
                return False
        return True
    raise FormulaError(f"unknown formula node {f!r}")


def eval_direct(f: Formula, t: FiniteTree, v: Valuation = EMPTY_VALUATION) -> bool:
    """Direct semantics of a formula on a finite tree under a valuation."""
    check_wf(f)
    idx = tree_index(t)
    _check_cap(f, idx)
    env = {}
    for var in free_vars(f):
        if var not in v:
            raise FormulaError(f"unbound free variable {var!r}")
        env[var] = idx.mask_of(v[var])
    return _eval_masks(f, idx, env)


# ---------------------------------------------------------------------------
# Derived connectives and formula builders


def or_(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def any_of(fs: list[Formula]) -> Formula:
    if not fs:
        return false_formula()
    out = fs[0]
    for g in fs[1:]:
        out = or_(out, g)
    return out


def all_of(fs: list[Formula]) -> Formula:
    if not fs:
        return true_formula()
    out = fs[0]
    for g in fs[1:]:
        out = And(out, g)
    return out


def forall(var: Variable, body: Formula) -> Formula:
    if var.kind == INF:
        return Not(Exists(var, Not(body)))
    return Not(ExistsFin(var, Not(body)))


_FRESH = itertools.count()


def fresh_var(kind: str = FIN, hint: str = "T") -> Variable:
    return Variable(f"{hint}{next(_FRESH)}", kind)


def true_formula() -> Formula:
    v = fresh_var(FIN, "Tt")
    return ExistsFin(v, Subset(v, v))


def false_formula() -> Formula:
    return Not(true_formula())


def empty(x: Variable, alphabet: Iterable[Letter]) -> Formula:
    """Emptiness via two distinct letters: all nodes labeled a and all labeled b."""
    letters = sorted(set(alphabet), key=canon_key)
    if len(letters) < 2:
        raise InputError("empty/big/sing need an alphabet with at least 2 letters")
    return And(Atom(letters[0], x), Atom(letters[1], x))


def big(x: Variable, alphabet: Iterable[Letter]) -> Formula:
    """The set has at least two elements: a nonempty proper subset exists.

    The witness subset can always be taken finite, so a finite-set binder is
    used; this keeps the expansion inside the finite-quantifier fragment.
    """
    y = fresh_var(FIN, "Big")
    return ExistsFin(
        y, And(And(Subset(y, x), Not(Subset(x, y))), Not(empty(y, alphabet)))
    )


def sing(x: Variable, alphabet: Iterable[Letter]) -> Formula:
    return And(Not(empty(x, alphabet)), Not(big(x, alphabet)))


def child_any(x: Variable, y: Variable, max_arity: int) -> Formula:
    if max_arity < 1:
        raise InputError("child-any needs max arity >= 1")
    return any_of([ChildAt(x, i, y) for i in range(1, max_arity + 1)])


def labels_in(x: Variable, letters: Iterable[Letter], alphabet, max_arity=None) -> Formula:
    """Every node of the set carries one of the given letters."""
    y = fresh_var(FIN, "Lab")
    body = implies(
        And(sing(y, alphabet), Subset(y, x)),
        any_of([Atom(le, y) for le in sorted(set(letters), key=canon_key)]),
    )
    return forall(y, body)


def derived(kind: str, *args, alphabet=None, max_arity=None) -> Formula:
    """Macro expansion of the standard derived forms."""
    if kind == "or":
        return or_(*args)
    if kind == "implies":
        return implies(*args)
    if kind == "forall":
        return forall(*args)
    if kind == "empty":
        return empty(args[0], alphabet)
    if kind == "big":
        return big(args[0], alphabet)
    if kind == "sing":
        return sing(args[0], alphabet)
    if kind == "child-any":
        return child_any(args[0], args[1], max_arity)
    if kind == "labels-in-A":
        return labels_in(args[0], args[1], alphabet, max_arity)
    raise InputError(f"unknown derived form {kind!r}")


def empty_any(x: Variable) -> Formula:
    """Alphabet-independent emptiness: every subset of x contains x back."""
    y = fresh_var(FIN, "Em")
    return forall(y, implies(Subset(y, x), Subset(x, y)))


def singleton_any(x: Variable) -> Formula:
    """Alphabet-independent singleton test."""
    return And(Not(empty_any(x)), Not(big_any(x)))


def big_any(x: Variable) -> Formula:
    y = fresh_var(FIN, "Bg")
    return ExistsFin(y, And(Subset(y, x), And(Not(Subset(x, y)), Not(empty_any(y)))))


def is_root(x: Variable, max_arity: int) -> Formula:
    """x is a singleton holding the root (the node that is nobody's child)."""
    p = fresh_var(FIN, "Pa")
    return And(
        singleton_any(x),
        Not(ExistsFin(p, And(singleton_any(p), child_any(p, x, max_arity)))),
    )


def root_labeled(letters: Iterable[Letter] | Letter, max_arity: int,
                 keep: tuple[int, ...] | None = None) -> Formula:
    """Sentence: the root's (projected) label is the letter / in the set."""
    if isinstance(letters, Letter):
        letters = [letters]
    lset = frozenset(letters)
    x = fresh_var(FIN, "Rl")
    return ExistsFin(x, And(is_root(x, max_arity), LabelIn(lset, x, keep)))


# ---------------------------------------------------------------------------
# Relativization


def relativize_at(f: Formula, target: Variable) -> Formula:
    """The sentence `f` holds in the subtree at every node of `target`.

    Quantifiers are restricted to weak descendants of a singleton pivot via
    the descendant primitive, then closed universally over singleton subsets
    of the target set.
    """
    check_wf(f)
    if not is_sentence(f):
        raise FormulaError("relativization expects a sentence")
    pivot = fresh_var(FIN, "Rv")

    def restrict(g: Formula) -> Formula:
        if isinstance(g, (Atom, LabelIn, ChildAt, Subset, DescIn)):
            return g
        if isinstance(g, And):
            return And(restrict(g.left), restrict(g.right))
        if isinstance(g, Not):
            return Not(restrict(g.inner))
        if isinstance(g, Exists):
            return Exists(g.var, And(DescIn(pivot, g.var), restrict(g.body)))
        if isinstance(g, ExistsFin):
            return ExistsFin(g.var, And(DescIn(pivot, g.var), restrict(g.body)))
        if isinstance(g, Unbounded):
            return Unbounded(g.var, And(DescIn(pivot, g.var), restrict(g.body)))
        raise FormulaError(f"unknown formula node {g!r}")

    body = implies(And(singleton_any(pivot), Subset(pivot, target)), restrict(f))
    return forall(pivot, body)


def relativize(f: Formula, max_arity: int, var_name: str = "X") -> tuple[Formula, Variable]:
    """Build `f^`(X): true iff the sentence `f` holds in the subtree at every
    node of X.  `max_arity` is accepted for interface compatibility; the
    descendant primitive does not need it.
    """
    del max_arity
    x = Variable(var_name, FIN)
    return relativize_at(f, x), x


# ---------------------------------------------------------------------------
# Concrete syntax

_KEYWORDS = {"exists", "existsfin", "U", "free", "sub", "true", "false"}


class _FScanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip(self):
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "#":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self.pos += 1
            else:
                break

    def peek(self, k: int = 1) -> str:
        self.skip()
        return self.text[self.pos:self.pos + k]

    def take(self, tok: str) -> bool:
        self.skip()
        if self.text.startswith(tok, self.pos):
            self.pos += len(tok)
            return True
        return False

    def expect(self, tok: str):
        if not self.take(tok):
            raise InputError(f"expected {tok!r} at position {self.pos}")

    def ident(self) -> str:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] in "_'"
        ):
            self.pos += 1
        if start == self.pos:
            raise InputError(f"expected identifier at position {start}")
        return self.text[start:self.pos]

    def at_end(self) -> bool:
        self.skip()
        return self.pos >= len(self.text)


class _FormulaParser:
    """Recursive descent for the surface syntax.

    formula   := implication
    implication := disjunct ('->' implication)?
    disjunct  := conjunct ('\\/' conjunct)*
    conjunct  := unary ('/\\' unary)*
    unary     := '~' unary | quantifier | atom | '(' formula ')'
    quantifier:= ('exists'|'existsfin'|'U') NAME '.' formula
    atom      := NAME '(' VAR ')' | VAR 'child_'i VAR | VAR 'sub' VAR
               | 'empty(' VAR ')' | 'big(' VAR ')' | 'sing(' VAR ')'
               | 'true' | 'false'
    """

    def __init__(self, text: str, free: dict[str, Variable], alphabet=None):
        self.sc = _FScanner(text)
        self.free = dict(free)
        self.bound: list[Variable] = []
        self.alphabet = tuple(sorted(alphabet, key=canon_key)) if alphabet else None

    def lookup(self, name: str) -> Variable:
        for v in reversed(self.bound):
            if v.name == name:
                return v
        if name in self.free:
            return self.free[name]
        raise InputError(f"undeclared variable {name!r} (declare with `free {name} : fin;`)")

    def parse(self) -> Formula:
        f = self.implication()
        if not self.sc.at_end():
            raise InputError(f"trailing input at position {self.sc.pos}")
        return f

    def implication(self) -> Formula:
        left = self.disjunct()
        if self.sc.take("->"):
            return implies(left, self.implication())
        return left

    def disjunct(self) -> Formula:
        out = self.conjunct()
        while self.sc.take("\\/"):
            out = or_(out, self.conjunct())
        return out

    def conjunct(self) -> Formula:
        out = self.unary()
        while self.sc.take("/\\"):
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        if self.sc.take("~"):
            return Not(self.unary())
        if self.sc.take("("):
            f = self.implication()
            self.sc.expect(")")
            return f
        name = self.sc.ident()
        if name == "exists":
            return self.quantified(Exists, INF)
        if name == "existsfin":
            return self.quantified(ExistsFin, FIN)
        if name == "U":
            return self.quantified(Unbounded, FIN)
        if name == "true":
            return true_formula()
        if name == "false":
            return false_formula()
        if self.sc.peek() == "(":
            self.sc.expect("(")
            var = self.lookup(self.sc.ident())
            self.sc.expect(")")
            if name in ("empty", "big", "sing"):
                if self.alphabet is None:
                    raise InputError(f"{name}(...) needs a known alphabet")
                fn = {"empty": empty, "big": big, "sing": sing}[name]
                return fn(var, self.alphabet)
            return Atom(Letter(name), var)
        # variable-led atom: X child_i Y | X sub Y
        left = self.lookup(name)
        if self.sc.take("sub"):
            return Subset(left, self.lookup(self.sc.ident()))
        word = self.sc.ident()
        if word.startswith("child_"):
            idx = int(word[len("child_"):])
            return ChildAt(left, idx, self.lookup(self.sc.ident()))
        raise InputError(f"cannot parse atom near {name!r} {word!r}")

    def quantified(self, ctor, kind) -> Formula:
        vname = self.sc.ident()
        self.sc.expect(".")
        var = Variable(vname, kind)
        self.bound.append(var)
        body = self.implication()
        self.bound.pop()
        return ctor(var, body)


def parse_formula(text: str, alphabet=None) -> Formula:
    """Parse a formula file: optional `free NAME : fin|inf;` lines, then the body."""
    free: dict[str, Variable] = {}
    body_lines = []
    in_header = True
    for raw in text.splitlines():
        stripped = raw.strip()
        if in_header and stripped.startswith("free "):
            rest = stripped[len("free "):].strip()
            if not rest.endswith(";"):
                raise InputError("free declaration must end with ';'")
            rest = rest[:-1]
            name, _, kind = rest.partition(":")
            name, kind = name.strip(), kind.strip()
            if kind not in (FIN, INF):
                raise InputError(f"free variable kind must be fin or inf, got {kind!r}")
            free[name] = Variable(name, kind)
        else:
            in_header = False
            body_lines.append(raw)
    f = _FormulaParser("\n".join(body_lines), free, alphabet).parse()
    check_wf(f)
    return f


def format_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        head = letter_text(f.letter)
        if f.keep is not None:
            head += "@" + ",".join(map(str, f.keep))
        return f"{head}({f.var.name})"
    if isinstance(f, LabelIn):
        names = ",".join(sorted(letter_text(le) for le in f.letters))
        suffix = "" if f.keep is None else "@" + ",".join(map(str, f.keep))
        return f"labelin{{{names}}}{suffix}({f.var.name})"
    if isinstance(f, ChildAt):
        return f"{f.left.name} child_{f.index} {f.right.name}"
    if isinstance(f, Subset):
        return f"{f.left.name} sub {f.right.name}"
    if isinstance(f, DescIn):
        return f"descin({f.root.name},{f.inside.name})"
    if isinstance(f, And):
        return f"({format_formula(f.left)} /\\ {format_formula(f.right)})"
    if isinstance(f, Not):
        return f"~{format_formula(f.inner)}"
    if isinstance(f, Exists):
        return f"exists {f.var.name}. {format_formula(f.body)}"
    if isinstance(f, ExistsFin):
        return f"existsfin {f.var.name}. {format_formula(f.body)}"
    if isinstance(f, Unbounded):
        return f"U {f.var.name}. {format_formula(f.body)}"
    raise FormulaError(f"unknown formula node {f!r}")
