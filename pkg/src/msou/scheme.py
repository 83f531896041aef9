"""Sorts, simply-sorted lambda-terms, higher-order recursion schemes, and
budgeted lazy expansion of the generated tree.

Terms use de Bruijn indices internally; the surface syntax keeps names.
Expansion head-reduces leftmost-outermost, unfolding nonterminals on demand.
A position whose head reduction revisits a previous term provably diverges
and becomes an `omega` leaf; a position that exhausts its step budget becomes
an `omega` leaf flagged unproven.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InputError, SortError
from .trees import CUT, OMEGA, FiniteTree, Letter, NodePath

DEFAULT_BUDGET = 100_000


# ---------------------------------------------------------------------------
# Sorts


@dataclass(frozen=True)
class Sort:
    """Ground sort when `arg` is None, else the arrow `arg -> res`."""

    arg: "Sort | None" = None
    res: "Sort | None" = None

    def is_ground(self) -> bool:
        return self.arg is None

    def __repr__(self):
        return sort_text(self)


GROUND = Sort()


def arrow(arg: Sort, res: Sort) -> Sort:
    return Sort(arg, res)


def sort_text(s: Sort) -> str:
    if s.is_ground():
        return "o"
    left = sort_text(s.arg)
    if not s.arg.is_ground():
        left = f"({left})"
    return f"{left} -> {sort_text(s.res)}"


# ---------------------------------------------------------------------------
# Terms (de Bruijn)


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Ctor(Term):
    letter: Letter
    children: tuple[Term, ...] = ()


@dataclass(frozen=True)
class BVar(Term):
    index: int


@dataclass(frozen=True)
class Ref(Term):
    """Occurrence of a nonterminal."""

    name: str


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Lam(Term):
    sort: Sort
    body: Term
    hint: str = field(default="x", compare=False)


def shift(t: Term, d: int, cutoff: int = 0) -> Term:
    if isinstance(t, BVar):
        return BVar(t.index + d) if t.index >= cutoff else t
    if isinstance(t, (Ref,)):
        return t
    if isinstance(t, Ctor):
        return Ctor(t.letter, tuple(shift(c, d, cutoff) for c in t.children))
    if isinstance(t, App):
        return App(shift(t.fn, d, cutoff), shift(t.arg, d, cutoff))
    if isinstance(t, Lam):
        return Lam(t.sort, shift(t.body, d, cutoff + 1), t.hint)
    raise TypeError(t)


def _subst(t: Term, j: int, s: Term) -> Term:
    if isinstance(t, BVar):
        return s if t.index == j else t
    if isinstance(t, Ref):
        return t
    if isinstance(t, Ctor):
        return Ctor(t.letter, tuple(_subst(c, j, s) for c in t.children))
    if isinstance(t, App):
        return App(_subst(t.fn, j, s), _subst(t.arg, j, s))
    if isinstance(t, Lam):
        return Lam(t.sort, _subst(t.body, j + 1, shift(s, 1)), t.hint)
    raise TypeError(t)


def beta(lam: Lam, arg: Term) -> Term:
    """One beta step: (\\x. body) arg."""
    return shift(_subst(lam.body, 0, shift(arg, 1)), -1)


def term_text(t: Term, names: tuple[str, ...] = (), nonterminals=frozenset()) -> str:
    """Readable named rendering; de Bruijn indices resolve against `names`."""
    if isinstance(t, Ctor):
        if not t.children:
            return t.letter.base
        return t.letter.base + "[" + ", ".join(
            term_text(c, names, nonterminals) for c in t.children
        ) + "]"
    if isinstance(t, BVar):
        return names[t.index] if t.index < len(names) else f"?{t.index}"
    if isinstance(t, Ref):
        return t.name
    if isinstance(t, App):
        fn = term_text(t.fn, names, nonterminals)
        arg = term_text(t.arg, names, nonterminals)
        if isinstance(t.arg, (App, Lam)):
            arg = f"({arg})"
        return f"{fn} {arg}"
    if isinstance(t, Lam):
        name = t.hint
        k = 0
        while name in names:
            k += 1
            name = f"{t.hint}{k}"
        return f"\\{name}:{sort_text(t.sort)}. {term_text(t.body, (name,) + names, nonterminals)}"
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Schemes


@dataclass(frozen=True)
class Scheme:
    nonterminals: dict
    rules: dict
    start: str

    def __post_init__(self):
        if self.start not in self.nonterminals:
            raise InputError(f"start nonterminal {self.start!r} undeclared")


def sort_check(s: Scheme) -> dict[str, Sort]:
    """Verify the scheme invariants; returns the nonterminal sort assignment."""
    if not s.nonterminals.get(s.start, GROUND).is_ground():
        raise SortError(f"start nonterminal {s.start!r} must have the ground sort")
    for name in s.nonterminals:
        if name not in s.rules:
            raise SortError(f"nonterminal {name!r} has no rule")
    for name, body in s.rules.items():
        if name not in s.nonterminals:
            raise SortError(f"rule for undeclared nonterminal {name!r}")
        if isinstance(body, Ref):
            raise SortError(f"rule body of {name!r} is a bare nonterminal")
        declared = s.nonterminals[name]
        got = _infer(body, (), s, path=(name,))
        if got != declared:
            raise SortError(
                f"rule body of {name!r} has sort {sort_text(got)}, "
                f"declared {sort_text(declared)}"
            )
    return dict(s.nonterminals)


def _infer(t: Term, env: tuple[Sort, ...], s: Scheme, path) -> Sort:
    if isinstance(t, Ctor):
        if t.letter.is_reserved():
            raise SortError(
                f"reserved letter {t.letter.base!r} in a user scheme at {_ptext(path)}"
            )
        for i, c in enumerate(t.children, start=1):
            got = _infer(c, env, s, path + (i,))
            if not got.is_ground():
                raise SortError(
                    f"constructor child at {_ptext(path + (i,))} has sort "
                    f"{sort_text(got)}, expected o"
                )
        return GROUND
    if isinstance(t, BVar):
        if t.index >= len(env):
            raise SortError(f"free variable (not a nonterminal) at {_ptext(path)}")
        return env[t.index]
    if isinstance(t, Ref):
        if t.name not in s.nonterminals:
            raise SortError(f"free variable {t.name!r} is not a nonterminal")
        return s.nonterminals[t.name]
    if isinstance(t, App):
        ft = _infer(t.fn, env, s, path + ("fn",))
        if ft.is_ground():
            raise SortError(f"application of a ground-sort term at {_ptext(path)}")
        at = _infer(t.arg, env, s, path + ("arg",))
        if at != ft.arg:
            raise SortError(
                f"sort mismatch at {_ptext(path)}: argument has {sort_text(at)}, "
                f"function expects {sort_text(ft.arg)}"
            )
        return ft.res
    if isinstance(t, Lam):
        return arrow(t.sort, _infer(t.body, (t.sort,) + env, s, path + ("body",)))
    raise TypeError(t)


def _ptext(path) -> str:
    return "/".join(str(p) for p in path)


def scheme_alphabet(s: Scheme) -> tuple[frozenset[Letter], int]:
    """Letters used by node constructors plus omega, and the maximal arity."""
    letters = {OMEGA}
    max_arity = 0

    def walk(t: Term):
        nonlocal max_arity
        if isinstance(t, Ctor):
            letters.add(t.letter)
            max_arity = max(max_arity, len(t.children))
            for c in t.children:
                walk(c)
        elif isinstance(t, App):
            walk(t.fn)
            walk(t.arg)
        elif isinstance(t, Lam):
            walk(t.body)

    for body in s.rules.values():
        walk(body)
    return frozenset(letters), max_arity


# ---------------------------------------------------------------------------
# Head reduction


def _unwind(t: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def _rebuild(head: Term, args: list[Term]) -> Term:
    for a in args:
        head = App(head, a)
    return head


def head_reduce(t: Term, s: Scheme, budget: int):
    """Reduce a closed ground-sort term until a head constructor appears.

    Returns ('head', letter, child terms), ('omega', True) when the term
    provably diverges (the reduction revisits a term), or ('omega', False)
    when the budget ran out first.
    """
    seen = {t}
    cur = t
    for _ in range(budget):
        head, args = _unwind(cur)
        if isinstance(head, Ctor):
            if args:
                raise SortError("ground-sort constructor applied to arguments")
            return ("head", head.letter, list(head.children))
        if isinstance(head, Lam):
            if not args:
                raise SortError("head reduction reached a bare lambda of arrow sort")
            cur = _rebuild(beta(head, args[0]), args[1:])
        elif isinstance(head, Ref):
            cur = _rebuild(s.rules[head.name], args)
        else:
            raise SortError(f"stuck head {head!r} (unbound variable?)")
        if cur in seen:
            return ("omega", True)
        seen.add(cur)
    return ("omega", False)


def _find_innermost_redex(t: Term, path=()):
    """Deepest-leftmost beta redex, as (path, redex) or None."""
    if isinstance(t, App):
        got = _find_innermost_redex(t.fn, path + ("fn",))
        if got:
            return got
        got = _find_innermost_redex(t.arg, path + ("arg",))
        if got:
            return got
        if isinstance(t.fn, Lam):
            return path, t
        return None
    if isinstance(t, Lam):
        return _find_innermost_redex(t.body, path + ("body",))
    if isinstance(t, Ctor):
        for i, c in enumerate(t.children):
            got = _find_innermost_redex(c, path + (i,))
            if got:
                return got
    return None


def _replace_at(t: Term, path, new: Term) -> Term:
    if not path:
        return new
    step, rest = path[0], path[1:]
    if step == "fn":
        return App(_replace_at(t.fn, rest, new), t.arg)
    if step == "arg":
        return App(t.fn, _replace_at(t.arg, rest, new))
    if step == "body":
        return Lam(t.sort, _replace_at(t.body, rest, new), t.hint)
    kids = list(t.children)
    kids[step] = _replace_at(kids[step], rest, new)
    return Ctor(t.letter, tuple(kids))


def head_reduce_innermost(t: Term, s: Scheme, budget: int):
    """Alternative strategy: contract innermost beta redexes first, unfolding
    the head nonterminal only when no redex exists.  Used for the desk-scale
    confluence cross-check; may diverge where the outermost strategy does not.
    """
    seen = {t}
    cur = t
    for _ in range(budget):
        head, args = _unwind(cur)
        if isinstance(head, Ctor) and not args:
            return ("head", head.letter, list(head.children))
        got = _find_innermost_redex(cur)
        if got:
            path, redex = got
            cur = _replace_at(cur, path, beta(redex.fn, redex.arg))
        elif isinstance(head, Ref):
            cur = _rebuild(s.rules[head.name], args)
        else:
            raise SortError(f"stuck head {head!r}")
        if cur in seen:
            return ("omega", True)
        seen.add(cur)
    return ("omega", False)


# ---------------------------------------------------------------------------
# Tree expansion


def boehm_expand(
    s: Scheme,
    depth: int,
    budget: int = DEFAULT_BUDGET,
    reducer=head_reduce,
) -> tuple[FiniteTree, frozenset[NodePath]]:
    """Depth-truncated generated tree plus the set of budget-unproven positions.

    Frontier rule matches `unfold`: a node at the cutoff depth keeps its label
    when it is a leaf and becomes `#cut` when subtrees were discarded.
    """
    if depth < 0:
        raise InputError("depth must be nonnegative")
    sort_check(s)
    unproven: set[NodePath] = set()

    def expand(term: Term, d: int, at: NodePath) -> FiniteTree:
        res = reducer(term, s, budget)
        if res[0] == "omega":
            if not res[1]:
                unproven.add(at)
            return FiniteTree(OMEGA)
        _, letter, kids = res
        if d == depth:
            if kids:
                return FiniteTree(CUT)
            return FiniteTree(letter)
        return FiniteTree(
            letter,
            tuple(expand(k, d + 1, at + (i,)) for i, k in enumerate(kids, start=1)),
        )

    return expand(Ref(s.start), 0, ()), frozenset(unproven)


def boehm_prefix(s: Scheme, depth: int, budget: int = DEFAULT_BUDGET) -> FiniteTree:
    return boehm_expand(s, depth, budget)[0]


class SchemeSource:
    """LazyTreeSource over a scheme; memoizes head reductions per node."""

    __slots__ = ("scheme", "term", "budget", "_head")

    def __init__(self, scheme: Scheme, term: Term, budget: int):
        self.scheme = scheme
        self.term = term
        self.budget = budget
        self._head = None

    def _force(self):
        if self._head is None:
            self._head = head_reduce(self.term, self.scheme, self.budget)
        return self._head

    @property
    def unproven(self) -> bool:
        res = self._force()
        return res[0] == "omega" and not res[1]

    def label(self) -> Letter:
        res = self._force()
        return OMEGA if res[0] == "omega" else res[1]

    def arity(self) -> int:
        res = self._force()
        return 0 if res[0] == "omega" else len(res[2])

    def child(self, i: int) -> "SchemeSource":
        res = self._force()
        if res[0] == "omega" or not 1 <= i <= len(res[2]):
            raise InputError(f"no child {i} at this node")
        return SchemeSource(self.scheme, res[2][i - 1], self.budget)


def boehm_source(s: Scheme, budget: int = DEFAULT_BUDGET) -> SchemeSource:
    sort_check(s)
    return SchemeSource(s, Ref(s.start), budget)


# ---------------------------------------------------------------------------
# Surface syntax


class _SchemeScanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip(self):
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "%":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self.pos += 1
            else:
                break

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

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


def _parse_sort(sc: _SchemeScanner) -> Sort:
    if sc.take("("):
        left = _parse_sort(sc)
        sc.expect(")")
    else:
        sc.expect("o")
        left = GROUND
    if sc.take("->"):
        return arrow(left, _parse_sort(sc))
    return left


def _parse_term(sc: _SchemeScanner, env: tuple[str, ...], nts: frozenset) -> Term:
    atoms = []
    while True:
        sc.skip()
        ch = sc.peek()
        if ch == "\\":
            sc.expect("\\")
            name = sc.ident()
            sc.expect(":")
            sort = _parse_sort(sc)
            sc.expect(".")
            body = _parse_term(sc, (name,) + env, nts)
            atoms.append(Lam(sort, body, name))
            break  # lambda extends to the end of the application
        if ch == "(":
            sc.expect("(")
            atoms.append(_parse_term(sc, env, nts))
            sc.expect(")")
            continue
        if ch and (ch.isalnum() or ch in "_'"):
            name = sc.ident()
            if sc.take("["):
                kids = []
                if not sc.take("]"):
                    while True:
                        kids.append(_parse_term(sc, env, nts))
                        if sc.take("]"):
                            break
                        sc.expect(",")
                atoms.append(Ctor(Letter(name), tuple(kids)))
            elif name in env:
                atoms.append(BVar(env.index(name)))
            elif name in nts:
                atoms.append(Ref(name))
            else:
                atoms.append(Ctor(Letter(name)))
            continue
        break
    if not atoms:
        raise InputError(f"expected a term at position {sc.pos}")
    term = atoms[0]
    for a in atoms[1:]:
        term = App(term, a)
    return term


def parse_scheme(text: str) -> Scheme:
    """Parse the scheme format: `nonterminal N : sort = term;` lines and `start N;`."""
    # First pass: nonterminal names and sorts, so bodies may reference later ones.
    sc = _SchemeScanner(text)
    decls: list[tuple[str, Sort, int]] = []
    start = None
    while not sc.at_end():
        kw = sc.ident()
        if kw == "start":
            start = sc.ident()
            sc.expect(";")
        elif kw == "nonterminal":
            name = sc.ident()
            sc.expect(":")
            sort = _parse_sort(sc)
            sc.expect("=")
            body_start = sc.pos
            depth = 0
            while sc.pos < len(sc.text):
                ch = sc.text[sc.pos]
                if ch == "(" or ch == "[":
                    depth += 1
                elif ch == ")" or ch == "]":
                    depth -= 1
                elif ch == ";" and depth == 0:
                    break
                sc.pos += 1
            decls.append((name, sort, body_start))
            body_end = sc.pos
            decls[-1] = (name, sort, (body_start, body_end))
            sc.expect(";")
        else:
            raise InputError(f"unknown keyword {kw!r} in scheme file")
    if start is None:
        raise InputError("missing `start` declaration")
    names = [n for n, _, _ in decls]
    if len(set(names)) != len(names):
        raise InputError("duplicate nonterminal declaration")
    nts = frozenset(names)
    nonterminals = {n: srt for n, srt, _ in decls}
    rules = {}
    for name, _, (b0, b1) in decls:
        body_sc = _SchemeScanner(text[b0:b1])
        rules[name] = _parse_term(body_sc, (), nts)
        if not body_sc.at_end():
            raise InputError(f"trailing input in rule for {name!r}")
    scheme = Scheme(nonterminals, rules, start)
    sort_check(scheme)
    return scheme


def format_scheme(s: Scheme) -> str:
    lines = []
    for name in sorted(s.nonterminals):
        lines.append(
            f"nonterminal {name} : {sort_text(s.nonterminals[name])} = "
            f"{term_text(s.rules[name], (), frozenset(s.nonterminals))};"
        )
    lines.append(f"start {s.start};")
    return "\n".join(lines) + "\n"
