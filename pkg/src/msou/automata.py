"""Relabeling tree automata: prefix automata with importance counting, sentence
bundles evaluated at every subtree, and alphabet-chained nesting of the two.

A prefix automaton assigns states to finitely many nodes of a run; applying it
records per node and state whether a run exists from there (value 1), whether
runs with arbitrarily many important nodes exist (value 2), or neither (0).
A sentence-bundle automaton records per node the truth of each sentence in the
subtree (values 0/1 only).  Both append one annotation layer to node labels.

Layers embedded behind other automata carry an input projection (`keep`): the
annotation indices of the full input letters that the layer's transitions or
sentences mention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import FormulaError, FragmentError, InputError
from .logic import (
    And, Atom, ChildAt, ExistsFin, Formula, LabelIn, Not, Subset, Unbounded,
    Variable, all_of, any_of, check_wf, child_any, eval_direct, false_formula,
    format_formula, free_vars, fresh_var, forall, implies, is_root,
    parse_formula, relativize_at, singleton_any, subformulas,
)
from .phenotype import pht_regular, tv
from .pumping import Production, ProductionSystem
from .trees import (
    FiniteTree, Letter, RegularTree, canon_key, key_text, letter_text,
    make_annotation, relabel,
)


class _Top:
    """Placeholder target: the whole child subtree stays state-less."""

    __slots__ = ()

    def __repr__(self):
        return "TOP"


TOP = _Top()


@dataclass(frozen=True)
class UPrefixAutomaton:
    """Nondeterministic top-down relabeling automaton with important states.

    Transitions are tuples (state, letter, targets); a transition applies at a
    node with exactly `len(targets)` children.  Runs assign states to finitely
    many nodes; all other nodes (whole subtrees) stay state-less.
    """

    states: frozenset
    important: frozenset
    transitions: frozenset
    alphabet: frozenset | None = None
    keep: tuple[int, ...] | None = None
    in_anns: int = 0

    def __post_init__(self):
        if not self.important <= self.states:
            raise InputError("important states must be a subset of the states")
        if any(isinstance(q, _Top) for q in self.states):
            raise InputError("the state-less placeholder cannot be a state")
        for tr in self.transitions:
            q, letter, targets = tr
            if q not in self.states:
                raise InputError(f"transition head {q!r} is not a state")
            if self.alphabet is not None and letter not in self.alphabet:
                raise InputError(f"transition letter {letter_text(letter)} not in alphabet")
            for s in targets:
                if not isinstance(s, _Top) and s not in self.states:
                    raise InputError(f"transition target {s!r} is not a state")

    def state_order(self) -> tuple:
        return tuple(sorted(self.states, key=canon_key))

    def by_letter_arity(self) -> dict:
        table: dict = {}
        for q, letter, targets in self.transitions:
            table.setdefault((letter, len(targets)), []).append((q, targets))
        return table


@dataclass(frozen=True)
class MSOAutomaton:
    """A bundle of sentences, one per index; each recorded per subtree as 0/1."""

    sentences: dict
    alphabet: frozenset | None = None
    in_anns: int = 0

    def __post_init__(self):
        for q, f in self.sentences.items():
            check_wf(f)
            if free_vars(f):
                raise InputError(f"bundle sentence for {q!r} has free variables")

    @property
    def states(self) -> frozenset:
        return frozenset(self.sentences)

    def state_order(self) -> tuple:
        return tuple(sorted(self.sentences, key=canon_key))


Layer = UPrefixAutomaton | MSOAutomaton


@dataclass(frozen=True)
class NestedAutomaton:
    """Alphabet-chained sequence of layers, applied in order."""

    layers: tuple

    def __post_init__(self):
        if not self.layers:
            raise InputError("a nested automaton needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.in_anns != prev.in_anns + 1:
                raise InputError(
                    "alphabet chaining violated: layer expecting "
                    f"{nxt.in_anns} annotation layers follows output with "
                    f"{prev.in_anns + 1}"
                )

    @property
    def in_anns(self) -> int:
        return self.layers[0].in_anns

    def out_anns(self) -> int:
        return self.layers[-1].in_anns + 1


def single(layer: Layer) -> NestedAutomaton:
    return NestedAutomaton((layer,))


def chain(a: NestedAutomaton, b: NestedAutomaton) -> NestedAutomaton:
    return NestedAutomaton(a.layers + b.layers)


def annotation_maps(states, values=(0, 1, 2)):
    """All functions from the states into the value set, in canonical order."""
    order = tuple(sorted(states, key=canon_key))
    if not order:
        yield {}
        return
    import itertools

    for combo in itertools.product(values, repeat=len(order)):
        yield dict(zip(order, combo))


def output_letters(layer: Layer, input_letters) -> list[Letter]:
    """The declared output alphabet: every input letter times every annotation."""
    out = []
    for le in sorted(input_letters, key=canon_key):
        for h in annotation_maps(layer.states if isinstance(layer, UPrefixAutomaton) else layer.sentences):
            out.append(le.with_annotation(h))
    return out


# ---------------------------------------------------------------------------
# Shifting layers behind extra annotation layers


def shift_formula_atoms(f: Formula, k: int) -> Formula:
    """Re-index atom projections after `k` annotation layers were prepended."""
    if k == 0:
        return f

    def move(keep, letter_anns):
        base = keep if keep is not None else tuple(range(letter_anns))
        return tuple(i + k for i in base)

    if isinstance(f, Atom):
        return Atom(f.letter, f.var, move(f.keep, len(f.letter.anns)))
    if isinstance(f, LabelIn):
        anns_counts = {len(le.anns) for le in f.letters}
        if len(anns_counts) > 1 and f.keep is None:
            raise InputError("cannot shift a mixed-depth label set without a projection")
        count = anns_counts.pop() if anns_counts else 0
        return LabelIn(f.letters, f.var, move(f.keep, count))
    if isinstance(f, (ChildAt, Subset)):
        return f
    if isinstance(f, And):
        return And(shift_formula_atoms(f.left, k), shift_formula_atoms(f.right, k))
    if isinstance(f, Not):
        return Not(shift_formula_atoms(f.inner, k))
    if isinstance(f, (ExistsFin, Unbounded)):
        return type(f)(f.var, shift_formula_atoms(f.body, k))
    from .logic import Exists

    if isinstance(f, Exists):
        return Exists(f.var, shift_formula_atoms(f.body, k))
    from .logic import DescIn

    if isinstance(f, DescIn):
        return f
    raise FormulaError(f"unknown formula node {f!r}")


def shift_layer(layer: Layer, k: int) -> Layer:
    """Embed a layer after `k` extra annotation layers it must ignore."""
    if k == 0:
        return layer
    if isinstance(layer, UPrefixAutomaton):
        keep = layer.keep if layer.keep is not None else tuple(range(layer.in_anns))
        return replace(layer, keep=tuple(i + k for i in keep), in_anns=layer.in_anns + k)
    new_sentences = {
        q: shift_formula_atoms(f, k) for q, f in layer.sentences.items()
    }
    return replace(layer, sentences=new_sentences, in_anns=layer.in_anns + k)


def shift_nested(n: NestedAutomaton, k: int) -> NestedAutomaton:
    return NestedAutomaton(tuple(shift_layer(layer, k) for layer in n.layers))


# ---------------------------------------------------------------------------
# Runs on finite trees


@dataclass(frozen=True)
class RunStats:
    exists: bool
    max_importance: int | None


def _match_label(a: UPrefixAutomaton, label: Letter) -> Letter:
    return label.project(a.keep)


def run_stats_finite(a: UPrefixAutomaton, t: FiniteTree, q) -> RunStats:
    """Whether some run assigns `q` to the root, and the maximum number of
    important nodes over such runs; bottom-up dynamic programming."""
    table = a.by_letter_arity()
    memo: dict = {}

    def stats(node: FiniteTree, state) -> tuple[bool, int]:
        key = (id(node), state)
        got = memo.get(key)
        if got is not None:
            return got
        best = (False, -1)
        label = _match_label(a, node.label)
        for head, targets in table.get((label, node.arity), ()):
            if head != state:
                continue
            total = 1 if state in a.important else 0
            ok = True
            for child, s in zip(node.children, targets):
                if isinstance(s, _Top):
                    continue
                sub_ok, sub_imp = stats(child, s)
                if not sub_ok:
                    ok = False
                    break
                total += sub_imp
            if ok and (not best[0] or total > best[1]):
                best = (True, total)
        memo[key] = best
        return best

    ok, imp = stats(t, q)
    return RunStats(ok, imp if ok else None)


def enumerate_runs(a: UPrefixAutomaton, t: FiniteTree, q) -> list[dict]:
    """All runs assigning `q` to the root, as path -> state/TOP maps.

    Debug-scale only: the number of runs can explode combinatorially.
    """
    table = a.by_letter_arity()

    def assigns(node: FiniteTree, state, at) -> list[dict]:
        if isinstance(state, _Top):
            return [{p: TOP for p, _ in node.nodes(at)}]
        out = []
        label = _match_label(a, node.label)
        for head, targets in table.get((label, node.arity), ()):
            if head != state:
                continue
            partial = [{at: state}]
            for i, (child, s) in enumerate(zip(node.children, targets), start=1):
                child_maps = assigns(child, s, at + (i,))
                partial = [dict(m, **cm) for m in partial for cm in child_maps]
                if not partial:
                    break
            out.extend(partial)
        return out

    return assigns(t, q, ())


def run_is_valid(a: UPrefixAutomaton, t: FiniteTree, rho: dict) -> bool:
    """Check the two run conditions: finitely many stated nodes (automatic on
    finite trees) and local consistency at every node."""
    table = a.by_letter_arity()
    for path, node in t.nodes():
        state = rho.get(path, TOP)
        child_states = tuple(
            rho.get(path + (i,), TOP) for i in range(1, node.arity + 1)
        )
        if isinstance(state, _Top):
            if not all(isinstance(s, _Top) for s in child_states):
                return False
            continue
        label = _match_label(a, node.label)
        good = any(
            head == state and targets == child_states
            for head, targets in table.get((label, node.arity), ())
        )
        if not good:
            return False
    return True


def run_importance(a: UPrefixAutomaton, rho: dict) -> int:
    return sum(1 for s in rho.values() if not isinstance(s, _Top) and s in a.important)


# ---------------------------------------------------------------------------
# Applications


def apply_uprefix_finite(a: UPrefixAutomaton, t: FiniteTree) -> FiniteTree:
    """Relabel every node with the run-existence values; on finite trees the
    unbounded value 2 cannot occur (finitely many runs, bounded importance)."""

    def process(node: FiniteTree) -> FiniteTree:
        h = {}
        for q in a.states:
            h[q] = 1 if run_stats_finite(a, node, q).exists else 0
        return FiniteTree(
            node.label.with_annotation(h), tuple(process(c) for c in node.children)
        )

    return process(t)


def _uprefix_system(a: UPrefixAutomaton, r: RegularTree) -> ProductionSystem:
    prods = []
    table = a.by_letter_arity()
    for c in r.reachable():
        label, kids = r.rule[c]
        plabel = _match_label(a, label)
        for head, targets in table.get((plabel, len(kids)), ()):
            premises = tuple(
                (k, s) for k, s in zip(kids, targets) if not isinstance(s, _Top)
            )
            prods.append(
                Production((c, head), premises, important=head in a.important)
            )
    return ProductionSystem(prods)


def apply_uprefix_regular(a: UPrefixAutomaton, r: RegularTree) -> RegularTree:
    """Same relabeling on a regular tree: run existence per (class, state) by
    least fixpoint, value 2 by pumping analysis of the derivation system."""
    system = _uprefix_system(a, r)
    derivable = system.derivable()
    starts = [(c, q) for c in r.reachable() for q in a.states]
    unbounded = system.unbounded(starts)
    rule = {}
    for c, (label, kids) in r.rule.items():
        h = {}
        for q in a.states:
            if (c, q) in unbounded:
                h[q] = 2
            elif (c, q) in derivable:
                h[q] = 1
            else:
                h[q] = 0
        rule[c] = (label.with_annotation(h), kids)
    return RegularTree(rule, r.root, r.max_arity)


def apply_mso_finite(m: MSOAutomaton, t: FiniteTree) -> FiniteTree:
    """Relabel every node with the truth of each bundle sentence in its subtree."""

    def process(node: FiniteTree) -> FiniteTree:
        h = {q: (1 if eval_direct(f, node) else 0) for q, f in m.sentences.items()}
        return FiniteTree(
            node.label.with_annotation(h), tuple(process(c) for c in node.children)
        )

    return process(t)


def apply_mso_regular(m: MSOAutomaton, r: RegularTree) -> RegularTree:
    """Fragment sentences evaluated per class through the phenotype engine."""
    truth: dict[str, dict] = {c: {} for c in r.rule}
    for q, f in m.sentences.items():
        phts = pht_regular(f, r)
        for c in r.rule:
            truth[c][q] = 1 if tv(f, phts[c]) else 0
    rule = {
        c: (label.with_annotation(truth[c]), kids)
        for c, (label, kids) in r.rule.items()
    }
    return RegularTree(rule, r.root, r.max_arity)


def apply_layer(layer: Layer, x):
    if isinstance(x, FiniteTree):
        if isinstance(layer, UPrefixAutomaton):
            return apply_uprefix_finite(layer, x)
        return apply_mso_finite(layer, x)
    if isinstance(layer, UPrefixAutomaton):
        return apply_uprefix_regular(layer, x)
    return apply_mso_regular(layer, x)


def apply_nested(n: NestedAutomaton, x):
    """Layer-by-layer application; regular input needs fragment sentences."""
    for layer in n.layers:
        x = apply_layer(layer, x)
    return x


# ---------------------------------------------------------------------------
# Automata back to logic


def _letter_minus_last(eta: Letter) -> Letter:
    if not eta.anns:
        raise InputError("output letter carries no annotation layer")
    return Letter(eta.base, eta.anns[:-1])


def _last_ann(eta: Letter) -> dict:
    return dict(eta.anns[-1])


def _mso_layer_formula(m: MSOAutomaton, eta: Letter, max_arity: int) -> Formula:
    inner = _letter_minus_last(eta)
    h = _last_ann(eta)
    if set(h) != set(m.sentences):
        raise InputError("annotation layer does not match the bundle's indices")
    x = fresh_var("fin", "Rt")
    parts: list[Formula] = [
        ExistsFin(x, And(is_root(x, max_arity), Atom(inner, x, m_keep(m))))
    ]
    for q in m.state_order():
        if h[q] == 1:
            parts.append(m.sentences[q])
        elif h[q] == 0:
            parts.append(Not(m.sentences[q]))
        else:  # sentence bundles never produce the value 2
            return false_formula()
    return all_of(parts)


def m_keep(m: MSOAutomaton) -> tuple[int, ...] | None:
    return tuple(range(m.in_anns)) if m.in_anns else None


def _run_exists_formula(a: UPrefixAutomaton, q, max_arity: int,
                        counted: Variable | None = None) -> Formula:
    """Some run assigns `q` to the root; encoded with one finite-set variable
    per state holding the nodes assigned that state.

    With `counted` given, additionally requires that set to sit inside the
    important-state nodes of the run.
    """
    order = a.state_order()
    sets = {p: fresh_var("fin", f"S{i}_") for i, p in enumerate(order)}

    def in_support(v: Variable) -> Formula:
        return any_of([Subset(v, sets[p]) for p in order])

    parts: list[Formula] = []
    rt = fresh_var("fin", "Rr")
    parts.append(ExistsFin(rt, And(is_root(rt, max_arity), Subset(rt, sets[q]))))
    # pairwise disjointness via singletons
    d = fresh_var("fin", "Dj")
    overlap = any_of([
        And(Subset(d, sets[p1]), Subset(d, sets[p2]))
        for i, p1 in enumerate(order)
        for p2 in order[i + 1:]
    ])
    parts.append(forall(d, implies(singleton_any(d), Not(overlap))))
    # support is ancestor-closed: a stated child forces a stated parent
    pu, pv = fresh_var("fin", "Au"), fresh_var("fin", "Av")
    parts.append(
        forall(
            pu,
            forall(
                pv,
                implies(
                    all_of([
                        singleton_any(pu),
                        singleton_any(pv),
                        child_any(pu, pv, max_arity),
                        in_support(pv),
                    ]),
                    in_support(pu),
                ),
            ),
        )
    )
    # local consistency at every stated node
    table = a.by_letter_arity()
    u = fresh_var("fin", "Lu")
    for p in order:
        options: list[Formula] = []
        for (letter, arity), rows in sorted(
            table.items(), key=lambda kv: (canon_key(kv[0][0]), kv[0][1])
        ):
            for head, targets in sorted(rows, key=canon_key):
                if head != p:
                    continue
                conj: list[Formula] = [Atom(letter, u, a.keep)]
                if arity + 1 <= max_arity:
                    w = fresh_var("fin", "Ar")
                    conj.append(
                        Not(ExistsFin(w, And(singleton_any(w), ChildAt(u, arity + 1, w))))
                    )
                for i, s in enumerate(targets, start=1):
                    w = fresh_var("fin", f"C{i}_")
                    if isinstance(s, _Top):
                        inner = And(
                            And(singleton_any(w), ChildAt(u, i, w)),
                            Not(in_support(w)),
                        )
                    else:
                        inner = And(
                            And(singleton_any(w), ChildAt(u, i, w)),
                            Subset(w, sets[s]),
                        )
                    conj.append(ExistsFin(w, inner))
                options.append(all_of(conj))
        parts.append(
            forall(u, implies(And(singleton_any(u), Subset(u, sets[p])), any_of(options)))
        )
    if counted is not None:
        imp_order = [p for p in order if p in a.important]
        dd = fresh_var("fin", "Ic")
        member = any_of([Subset(dd, sets[p]) for p in imp_order])
        parts.append(
            forall(dd, implies(And(singleton_any(dd), Subset(dd, counted)), member))
        )
    body = all_of(parts)
    for p in reversed(order):
        body = ExistsFin(sets[p], body)
    return body


def _uprefix_layer_formula(a: UPrefixAutomaton, eta: Letter, max_arity: int) -> Formula:
    inner = _letter_minus_last(eta)
    h = _last_ann(eta)
    if set(h) != set(a.states):
        raise InputError("annotation layer does not match the automaton's states")
    x = fresh_var("fin", "Rt")
    keep = a.keep if a.keep is not None else (tuple(range(a.in_anns)) or None)
    parts: list[Formula] = [
        ExistsFin(x, And(is_root(x, max_arity), Atom(inner, x, keep)))
    ]
    for q in a.state_order():
        exists_q = _run_exists_formula(a, q, max_arity)
        c = fresh_var("fin", "Uc")
        unbounded_q = Unbounded(c, _run_exists_formula(a, q, max_arity, counted=c))
        if h[q] == 0:
            parts.append(Not(exists_q))
        elif h[q] == 1:
            parts.append(And(exists_q, Not(unbounded_q)))
        else:
            parts.append(unbounded_q)
    return all_of(parts)


def _substitute_letter_atoms(f: Formula, table: dict) -> Formula:
    """Replace every label atom by the relativized sentence for its letter."""
    if isinstance(f, Atom):
        return table[("atom", f.letter, f.keep)](f.var)
    if isinstance(f, LabelIn):
        return table[("in", f.letters, f.keep)](f.var)
    if isinstance(f, (ChildAt, Subset)):
        return f
    if isinstance(f, And):
        return And(
            _substitute_letter_atoms(f.left, table),
            _substitute_letter_atoms(f.right, table),
        )
    if isinstance(f, Not):
        return Not(_substitute_letter_atoms(f.inner, table))
    if isinstance(f, (ExistsFin, Unbounded)):
        return type(f)(f.var, _substitute_letter_atoms(f.body, table))
    from .logic import DescIn, Exists

    if isinstance(f, Exists):
        return Exists(f.var, _substitute_letter_atoms(f.body, table))
    if isinstance(f, DescIn):
        return f
    raise FormulaError(f"unknown formula node {f!r}")


def automaton_to_formula(n: NestedAutomaton, eta: Letter, max_arity: int) -> Formula:
    """A sentence true on exactly the input trees whose processed root label
    is `eta`.

    Single layers translate directly; composition substitutes, for each label
    atom of the later formula, the relativized sentence stating that the
    earlier automaton produces that label at every node of the set.
    """
    last = n.layers[-1]
    if isinstance(last, UPrefixAutomaton):
        psi = _uprefix_layer_formula(last, eta, max_arity)
    else:
        psi = _mso_layer_formula(last, eta, max_arity)
    if len(n.layers) == 1:
        check_wf(psi)
        return psi

    prefix = NestedAutomaton(n.layers[:-1])

    # Collect the letter atoms of psi and build one relativized sentence each.
    needed: set = set()

    def collect(g: Formula):
        if isinstance(g, Atom):
            needed.add(("atom", g.letter, g.keep))
        elif isinstance(g, LabelIn):
            needed.add(("in", g.letters, g.keep))
        elif isinstance(g, And):
            collect(g.left)
            collect(g.right)
        elif isinstance(g, Not):
            collect(g.inner)
        elif hasattr(g, "body"):
            collect(g.body)

    collect(psi)

    table = {}
    for key in needed:
        kind, payload, keep = key
        if keep is not None:
            raise InputError(
                "composition to logic supports unprojected layer formulas only"
            )
        letters = [payload] if kind == "atom" else sorted(payload, key=canon_key)
        sentence = any_of(
            [automaton_to_formula(prefix, le, max_arity) for le in letters]
        )

        def maker(sent):
            def build(var: Variable) -> Formula:
                return relativize_at(sent, var)

            return build

        table[key] = maker(sentence)

    out = _substitute_letter_atoms(psi, table)
    check_wf(out)
    return out


# ---------------------------------------------------------------------------
# Serialization


def _state_to_text(s) -> str:
    return "#top" if isinstance(s, _Top) else key_text(s)


def uprefix_to_json(a: UPrefixAutomaton) -> dict:
    return {
        "kind": "uprefix",
        "alphabet": sorted((letter_text(le) for le in a.alphabet), ) if a.alphabet else None,
        "states": sorted(_state_to_text(q) for q in a.states),
        "important": sorted(_state_to_text(q) for q in a.important),
        "transitions": sorted(
            [
                _state_to_text(q),
                letter_text(le),
                [_state_to_text(s) for s in targets],
            ]
            for q, le, targets in a.transitions
        ),
    }


def mso_to_json(m: MSOAutomaton) -> dict:
    return {
        "kind": "mso",
        "alphabet": sorted((letter_text(le) for le in m.alphabet)) if m.alphabet else None,
        "states": sorted(_state_to_text(q) for q in m.sentences),
        "sentences": {
            _state_to_text(q): format_formula(f)
            for q, f in sorted(m.sentences.items(), key=lambda kv: canon_key(kv[0]))
        },
    }


def nested_to_json(n: NestedAutomaton) -> dict:
    return {
        "kind": "nested",
        "layers": [
            uprefix_to_json(l) if isinstance(l, UPrefixAutomaton) else mso_to_json(l)
            for l in n.layers
        ],
    }


def automaton_to_json_text(x) -> str:
    if isinstance(x, UPrefixAutomaton):
        doc = uprefix_to_json(x)
    elif isinstance(x, MSOAutomaton):
        doc = mso_to_json(x)
    else:
        doc = nested_to_json(x)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def automaton_from_json_text(text: str):
    """Parse user automata: plain string states and base letters only."""
    doc = json.loads(text)
    return _automaton_from_doc(doc)


def _automaton_from_doc(doc: dict):
    kind = doc.get("kind")
    if kind == "nested":
        return NestedAutomaton(tuple(_layer_from_doc(d) for d in doc["layers"]))
    return _layer_from_doc(doc)


def _layer_from_doc(doc: dict):
    kind = doc.get("kind")
    alphabet = (
        frozenset(Letter(s) for s in doc["alphabet"]) if doc.get("alphabet") else None
    )
    if kind == "uprefix":
        states = frozenset(doc["states"])
        transitions = set()
        for row in doc["transitions"]:
            q, letter, targets = row
            transitions.add(
                (
                    q,
                    Letter(letter),
                    tuple(TOP if s == "#top" else s for s in targets),
                )
            )
        return UPrefixAutomaton(
            states=states,
            important=frozenset(doc.get("important", [])),
            transitions=frozenset(transitions),
            alphabet=alphabet,
        )
    if kind == "mso":
        sentences = {
            q: parse_formula(text, alphabet=alphabet)
            for q, text in doc["sentences"].items()
        }
        return MSOAutomaton(sentences=sentences, alphabet=alphabet)
    raise InputError(f"unknown automaton kind {kind!r}")


def run_to_dot(t: FiniteTree, rho: dict, name: str = "run") -> str:
    """DOT rendering of a run witness over a finite tree."""
    lines = [f"digraph {name} {{"]
    for path, node in t.nodes():
        pid = "n" + "_".join(map(str, path))
        state = rho.get(path, TOP)
        lines.append(
            f'  {pid} [label="{letter_text(node.label)} | {_state_to_text(state)}"];'
        )
    for path, node in t.nodes():
        pid = "n" + "_".join(map(str, path))
        for i in range(1, node.arity + 1):
            cid = "n" + "_".join(map(str, path + (i,)))
            lines.append(f"  {pid} -> {cid};")
    lines.append("}")
    return "\n".join(lines) + "\n"
