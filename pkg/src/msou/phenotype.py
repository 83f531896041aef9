"""Logical types (phenotypes) of trees relative to a formula, their finite
domains, the one-step composition function, and evaluation engines: literal
recursion on finite trees, a compositional fold, and least-fixpoint plus
pumping analysis on regular trees for the finite-quantifier fragment.

Phenotype value shapes, by formula node:

  label and subset atoms   'tt' | 'ff'
  child atom               'tt' | 'empty' | 'root' | 'ff'
  conjunction              pair of member phenotypes
  negation                 the inner phenotype unchanged
  set quantifiers          frozenset of body phenotypes
  unbounding quantifier    pair (achievable, unboundedly-achievable) of
                           frozensets, second contained in the first
"""

from __future__ import annotations

import itertools

from .errors import DomainSizeError, FormulaError, FragmentError
from .logic import (
    And, Atom, ChildAt, DescIn, EMPTY_VALUATION, Exists, ExistsFin, Formula,
    LabelIn, Not, Subset, Unbounded, Valuation, Variable, _check_cap,
    check_wf, free_vars, normalize_valuation, restrict_valuation, subformulas,
    tree_index,
)
from .pumping import Production, ProductionSystem
from .trees import FiniteTree, Letter, RegularTree, key_text

DEFAULT_DOMAIN_CAP = 2 ** 20

TT, FF, EMPTY, ROOT = "tt", "ff", "empty", "root"


def _bool_pht(b: bool) -> str:
    return TT if b else FF


def phenotype_text(p) -> str:
    return key_text(p)


# ---------------------------------------------------------------------------
# Domains


def domain_size(f: Formula) -> int:
    if isinstance(f, (Atom, LabelIn, Subset)):
        return 2
    if isinstance(f, ChildAt):
        return 4
    if isinstance(f, And):
        return domain_size(f.left) * domain_size(f.right)
    if isinstance(f, Not):
        return domain_size(f.inner)
    if isinstance(f, (Exists, ExistsFin)):
        return 2 ** domain_size(f.body)
    if isinstance(f, Unbounded):
        return 4 ** domain_size(f.body)
    raise FragmentError(f"no phenotype domain for {type(f).__name__}")


class PhenotypeDomain:
    """Enumerator of all structurally valid phenotypes of a formula."""

    def __init__(self, formula: Formula, cap: int = DEFAULT_DOMAIN_CAP):
        self.formula = formula
        self.cap = cap
        self.size = domain_size(formula)
        if self.size > cap:
            raise DomainSizeError(
                f"phenotype domain of size {self.size} exceeds the cap {cap} "
                f"for {type(formula).__name__}"
            )
        self._values = None

    def values(self) -> tuple:
        if self._values is None:
            self._values = tuple(_enumerate(self.formula, self.cap))
        return self._values

    def __iter__(self):
        return iter(self.values())

    def __len__(self):
        return self.size


def _enumerate(f: Formula, cap: int):
    if isinstance(f, (Atom, LabelIn, Subset)):
        yield TT
        yield FF
        return
    if isinstance(f, ChildAt):
        yield from (TT, EMPTY, ROOT, FF)
        return
    if isinstance(f, And):
        for a in _enumerate(f.left, cap):
            for b in _enumerate(f.right, cap):
                yield (a, b)
        return
    if isinstance(f, Not):
        yield from _enumerate(f.inner, cap)
        return
    if isinstance(f, (Exists, ExistsFin)):
        inner = tuple(_enumerate(f.body, cap))
        for r in range(len(inner) + 1):
            for combo in itertools.combinations(inner, r):
                yield frozenset(combo)
        return
    if isinstance(f, Unbounded):
        inner = tuple(_enumerate(f.body, cap))
        subsets = []
        for r in range(len(inner) + 1):
            subsets.extend(frozenset(c) for c in itertools.combinations(inner, r))
        for a in subsets:
            for b in subsets:
                yield (a, b)
        return
    raise FragmentError(f"no phenotype domain for {type(f).__name__}")


def pht_domain(f: Formula, cap: int = DEFAULT_DOMAIN_CAP) -> PhenotypeDomain:
    return PhenotypeDomain(f, cap)


def check_u_containment(f: Formula, p) -> bool:
    """Second components of unbounding-quantifier phenotypes sit inside the first."""
    if isinstance(f, Unbounded):
        a, b = p
        return b <= a and all(check_u_containment(f.body, s) for s in a)
    if isinstance(f, And):
        return check_u_containment(f.left, p[0]) and check_u_containment(f.right, p[1])
    if isinstance(f, Not):
        return check_u_containment(f.inner, p)
    if isinstance(f, (Exists, ExistsFin)):
        return all(check_u_containment(f.body, s) for s in p)
    return True


# ---------------------------------------------------------------------------
# Direct computation on finite trees

_PHT_CACHE: dict = {}


def clear_caches():
    _PHT_CACHE.clear()


def _free_key(f, env):
    return tuple(env.get(v, 0) for v in sorted(free_vars(f), key=lambda v: (v.name, v.kind)))


def _pht(f: Formula, idx, env) -> object:
    key = (id(f), idx.tree, _free_key(f, env))
    got = _PHT_CACHE.get(key)
    if got is not None:
        return got
    out = _pht_raw(f, idx, env)
    _PHT_CACHE[key] = out
    return out


def _pht_raw(f: Formula, idx, env):
    if isinstance(f, Atom):
        return _bool_pht(env[f.var] & ~idx.label_mask(frozenset({f.letter}), f.keep) == 0)
    if isinstance(f, LabelIn):
        return _bool_pht(env[f.var] & ~idx.label_mask(f.letters, f.keep) == 0)
    if isinstance(f, Subset):
        return _bool_pht(env[f.left] & ~env[f.right] == 0)
    if isinstance(f, ChildAt):
        mx, my = env[f.left], env[f.right]
        if mx.bit_count() == 1 and my.bit_count() == 1:
            x = mx.bit_length() - 1
            kids = idx.child_bits[x]
            if f.index <= len(kids) and (1 << kids[f.index - 1]) == my:
                return TT
        if mx == 0 and my == 0:
            return EMPTY
        if mx == 0 and my == 1:  # bit 0 is the preorder root
            return ROOT
        return FF
    if isinstance(f, And):
        return (_pht(f.left, idx, env), _pht(f.right, idx, env))
    if isinstance(f, Not):
        return _pht(f.inner, idx, env)
    if isinstance(f, (Exists, ExistsFin)):
        # Arbitrary-set and finite-set quantification coincide on finite trees.
        return frozenset(
            _pht(f.body, idx, {**env, f.var: s}) for s in range(idx.full + 1)
        )
    if isinstance(f, Unbounded):
        best: dict = {}
        for s in range(idx.full + 1):
            sigma = _pht(f.body, idx, {**env, f.var: s})
            c = s.bit_count()
            if best.get(sigma, -1) < c:
                best[sigma] = c
        achievable = frozenset(best)
        # Unbounded achievability needs witnesses of every cardinality; on a
        # finite tree the threshold one past the node count is never met.
        unbounded = frozenset(s for s, c in best.items() if c >= idx.n + 1)
        return (achievable, unbounded)
    if isinstance(f, DescIn):
        raise FragmentError("descendant primitive has no phenotype")
    raise FormulaError(f"unknown formula node {f!r}")


def pht_direct(f: Formula, t: FiniteTree, v: Valuation = EMPTY_VALUATION):
    """The phenotype of a finite tree under a valuation, by the literal
    recursive definition (quantifiers enumerate node subsets)."""
    check_wf(f)
    idx = tree_index(t)
    _check_cap(f, idx)
    env = {}
    for var in free_vars(f):
        if var not in v:
            raise FormulaError(f"unbound free variable {var!r}")
        env[var] = idx.mask_of(v[var])
    return _pht(f, idx, env)


# ---------------------------------------------------------------------------
# Truth-value extraction


def tv(f: Formula, p) -> bool:
    """Whether trees with phenotype `p` satisfy `f`."""
    if isinstance(f, (Atom, LabelIn, Subset, ChildAt)):
        return p == TT
    if isinstance(f, And):
        return tv(f.left, p[0]) and tv(f.right, p[1])
    if isinstance(f, Not):
        return not tv(f.inner, p)
    if isinstance(f, (Exists, ExistsFin)):
        return any(tv(f.body, s) for s in p)
    if isinstance(f, Unbounded):
        return any(tv(f.body, s) for s in p[1])
    raise FormulaError(f"no truth extraction for {f!r}")


# ---------------------------------------------------------------------------
# One-step composition


def comp(letter: Letter, r: int, f: Formula, R: frozenset[Variable], kids: tuple = ()):
    """Phenotype of a tree from its root letter, arity, the set R of variables
    whose set contains the root, and the phenotypes of the child subtrees."""
    if len(kids) != r:
        raise FormulaError(f"expected {r} child phenotypes, got {len(kids)}")
    if isinstance(f, Atom):
        ok = all(k == TT for k in kids) and (
            letter.project(f.keep) == f.letter or f.var not in R
        )
        return _bool_pht(ok)
    if isinstance(f, LabelIn):
        ok = all(k == TT for k in kids) and (
            letter.project(f.keep) in f.letters or f.var not in R
        )
        return _bool_pht(ok)
    if isinstance(f, Subset):
        ok = all(k == TT for k in kids) and (f.left not in R or f.right in R)
        return _bool_pht(ok)
    if isinstance(f, ChildAt):
        x_in, y_in = f.left in R, f.right in R
        tt_somewhere = [j for j, k in enumerate(kids) if k == TT]
        rest_empty = all(
            k == EMPTY for j, k in enumerate(kids) if j not in tt_somewhere
        )
        if (
            len(tt_somewhere) == 1
            and rest_empty
            and not x_in
            and not y_in
        ):
            return TT
        if (
            f.index <= r
            and kids[f.index - 1] == ROOT
            and all(k == EMPTY for j, k in enumerate(kids) if j != f.index - 1)
            and x_in
            and not y_in
        ):
            return TT
        if all(k == EMPTY for k in kids) and not x_in and not y_in:
            return EMPTY
        if all(k == EMPTY for k in kids) and not x_in and y_in:
            return ROOT
        return FF
    if isinstance(f, Not):
        return comp(letter, r, f.inner, R, kids)
    if isinstance(f, And):
        left = comp(letter, r, f.left, R, tuple(k[0] for k in kids))
        right = comp(letter, r, f.right, R, tuple(k[1] for k in kids))
        return (left, right)
    if isinstance(f, (Exists, ExistsFin)):
        out = set()
        for combo in itertools.product(*kids) if kids else ((),):
            out.add(comp(letter, r, f.body, R | {f.var}, combo))
            out.add(comp(letter, r, f.body, R - {f.var}, combo))
        return frozenset(out)
    if isinstance(f, Unbounded):
        firsts = tuple(k[0] for k in kids)
        seconds = tuple(k[1] for k in kids)
        a_set = set()
        for combo in itertools.product(*firsts) if kids else ((),):
            a_set.add(comp(letter, r, f.body, R | {f.var}, combo))
            a_set.add(comp(letter, r, f.body, R - {f.var}, combo))
        b_set = set()
        for j in range(r):
            pools = [seconds[j] if i == j else firsts[i] for i in range(r)]
            for combo in itertools.product(*pools):
                b_set.add(comp(letter, r, f.body, R | {f.var}, combo))
                b_set.add(comp(letter, r, f.body, R - {f.var}, combo))
        return (frozenset(a_set), frozenset(b_set))
    raise FragmentError(f"no composition for {type(f).__name__}")


def pht_compositional(f: Formula, t: FiniteTree, v: Valuation = EMPTY_VALUATION):
    """Bottom-up fold of `comp` over the tree; must agree with `pht_direct`."""
    check_wf(f)
    val = normalize_valuation(v)
    for var in free_vars(f):
        if var not in val:
            raise FormulaError(f"unbound free variable {var!r}")

    def go(node: FiniteTree, nv) -> object:
        r_set = frozenset(var for var, s in nv.items() if () in s)
        kids = tuple(
            go(node.children[i], restrict_valuation(nv, (i + 1,)))
            for i in range(node.arity)
        )
        return comp(node.label, node.arity, f, r_set, kids)

    return go(t, val)


# ---------------------------------------------------------------------------
# Regular trees: least fixpoint + pumping for the finite-quantifier fragment


def _require_fragment(f: Formula):
    for g in subformulas(f):
        if isinstance(g, Exists):
            raise FragmentError(
                "regular-tree evaluation supports only finite-set binders; "
                "arbitrary-set quantifier present"
            )
        if isinstance(g, DescIn):
            raise FragmentError("descendant primitive not supported on regular trees")


def _quantifier_sets(body: Formula, var: Variable, r: RegularTree, seeds: dict):
    """Least fixpoint of achievable body phenotypes per class when `var` ranges
    over finite node sets and every other variable is empty.

    Seeds are the empty-set phenotypes; a step applies the composition
    function at a class with the root either in or out of the set.
    """
    reach = sorted(r.rule)
    sets: dict[str, set] = {c: {seeds[c]} for c in reach}
    changed = True
    while changed:
        changed = False
        for c in reach:
            label, kids = r.rule[c]
            pools = [sorted(sets[k], key=key_text) for k in kids]
            for combo in itertools.product(*pools) if kids else ((),):
                for r_set in (frozenset(), frozenset({var})):
                    got = comp(label, len(kids), body, r_set, tuple(combo))
                    if got not in sets[c]:
                        sets[c].add(got)
                        changed = True
    return sets


def _quantifier_productions(body, var, r, seeds, sets):
    """Derivation system over (class, phenotype) facts; a step is important
    when it puts the class's root node into the quantified set."""
    prods = []
    for c in sorted(r.rule):
        label, kids = r.rule[c]
        prods.append(Production((c, seeds[c]), ()))
        pools = [sorted(sets[k], key=key_text) for k in kids]
        for combo in itertools.product(*pools) if kids else ((),):
            premises = tuple((k, s) for k, s in zip(kids, combo))
            for r_set in (frozenset(), frozenset({var})):
                got = comp(label, len(kids), body, r_set, tuple(combo))
                prods.append(Production((c, got), premises, important=var in r_set))
    return prods


def pht_regular(f: Formula, r: RegularTree) -> dict[str, object]:
    """Per class, the phenotype of the denoted subtree under the empty
    valuation.  Requires the finite-quantifier fragment."""
    check_wf(f)
    _require_fragment(f)

    def go(g: Formula) -> dict[str, object]:
        reach = sorted(r.rule)
        if isinstance(g, (Atom, LabelIn, Subset)):
            # Empty sets: label atoms and inclusions hold vacuously.
            return {c: TT for c in reach}
        if isinstance(g, ChildAt):
            return {c: EMPTY for c in reach}
        if isinstance(g, And):
            left, right = go(g.left), go(g.right)
            return {c: (left[c], right[c]) for c in reach}
        if isinstance(g, Not):
            return go(g.inner)
        if isinstance(g, ExistsFin):
            seeds = go(g.body)
            sets = _quantifier_sets(g.body, g.var, r, seeds)
            return {c: frozenset(sets[c]) for c in reach}
        if isinstance(g, Unbounded):
            seeds = go(g.body)
            sets = _quantifier_sets(g.body, g.var, r, seeds)
            system = ProductionSystem(
                _quantifier_productions(g.body, g.var, r, seeds, sets)
            )
            starts = [(c, s) for c in reach for s in sets[c]]
            unb = system.unbounded(starts)
            return {
                c: (
                    frozenset(sets[c]),
                    frozenset(s for s in sets[c] if (c, s) in unb),
                )
                for c in reach
            }
        raise FragmentError(f"unsupported node {type(g).__name__} on regular trees")

    return go(f)


def check_regular(f: Formula, r: RegularTree) -> bool:
    """Truth of a fragment sentence on the denoted (possibly infinite) tree."""
    if free_vars(f):
        raise FormulaError("check_regular expects a sentence")
    return tv(f, pht_regular(f, r)[r.root])


def reflect_regular(f: Formula, r: RegularTree) -> RegularTree:
    """Relabel each class with the truth of the sentence in its subtree."""
    if free_vars(f):
        raise FormulaError("reflect_regular expects a sentence")
    phts = pht_regular(f, r)
    rule = {}
    for c, (label, kids) in r.rule.items():
        value = tv(f, phts[c]) if c in phts else False
        rule[c] = (label.with_annotation({"sat": 1 if value else 0}), kids)
    return RegularTree(rule, r.root, r.max_arity)
