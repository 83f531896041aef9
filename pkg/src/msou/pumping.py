"""Derivation systems over finite class graphs and their pumping analyses.

A production system is a finite set of productions `head -> premises`; a
derivation is a finite tree of production instances.  Three questions recur
across the package and are answered here:

  * which heads have any derivation at all (least fixpoint),
  * from which heads the number of *important* production instances in a
    derivation is unbounded,
  * for which letter sets A the derivations from a head contain, for every n,
    a derivation with at least n instances of every letter in A.

Unboundedness reduces to cycle analysis: pumping a cycle of the premise graph
replicates the productions on the cycle and fresh copies of their side
premises, so the count of a quantity grows without bound iff a cycle through
derivable heads can yield at least one unit per pass, either from a production
on the cycle itself or from a side premise that can derive one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable


@dataclass(frozen=True)
class Production:
    head: Hashable
    premises: tuple[Hashable, ...]
    important: bool = False
    letter: Hashable | None = None


class ProductionSystem:
    def __init__(self, productions: Iterable[Production]):
        self.productions = list(productions)
        self.by_head: dict[Hashable, list[Production]] = {}
        for p in self.productions:
            self.by_head.setdefault(p.head, []).append(p)

    # -- basic least fixpoints ------------------------------------------------

    def derivable(self) -> frozenset:
        """Heads admitting at least one finite derivation."""
        good: set = set()
        changed = True
        while changed:
            changed = False
            for p in self.productions:
                if p.head not in good and all(m in good for m in p.premises):
                    good.add(p.head)
                    changed = True
        return frozenset(good)

    def _live(self, derivable: frozenset) -> list[Production]:
        return [
            p
            for p in self.productions
            if p.head in derivable and all(m in derivable for m in p.premises)
        ]

    def _can_units(self, live, derivable, counts) -> frozenset:
        """Heads from which some derivation contains >= 1 counted production."""
        can: set = set()
        changed = True
        while changed:
            changed = False
            for p in live:
                if p.head in can:
                    continue
                if counts(p) or any(m in can for m in p.premises):
                    can.add(p.head)
                    changed = True
        return frozenset(can)

    def _reach(self, live, starts) -> frozenset:
        seen = set(s for s in starts)
        queue = list(seen)
        by_head: dict[Hashable, list[Production]] = {}
        for p in live:
            by_head.setdefault(p.head, []).append(p)
        while queue:
            h = queue.pop()
            for p in by_head.get(h, ()):
                for m in p.premises:
                    if m not in seen:
                        seen.add(m)
                        queue.append(m)
        return frozenset(seen)

    @staticmethod
    def _sccs(nodes, edges) -> list[set]:
        """Tarjan strongly connected components; iterative."""
        index = {}
        low = {}
        on_stack = set()
        stack = []
        sccs = []
        counter = [0]
        adj = {n: [] for n in nodes}
        for u, v in edges:
            if u in adj and v in adj:
                adj[u].append(v)

        for start in nodes:
            if start in index:
                continue
            work = [(start, 0)]
            while work:
                node, ei = work[-1]
                if ei == 0:
                    index[node] = low[node] = counter[0]
                    counter[0] += 1
                    stack.append(node)
                    on_stack.add(node)
                advanced = False
                for j in range(ei, len(adj[node])):
                    nxt = adj[node][j]
                    if nxt not in index:
                        work[-1] = (node, j + 1)
                        work.append((nxt, 0))
                        advanced = True
                        break
                    if nxt in on_stack:
                        low[node] = min(low[node], index[nxt])
                if advanced:
                    continue
                work.pop()
                if low[node] == index[node]:
                    comp = set()
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.add(w)
                        if w == node:
                            break
                    sccs.append(comp)
                else:
                    if work:
                        parent = work[-1][0]
                        low[parent] = min(low[parent], low[node])
        return sccs

    # -- unbounded importance -------------------------------------------------

    def unbounded(self, starts: Iterable[Hashable]) -> frozenset:
        """Starts whose derivations carry unboundedly many important instances.

        An edge of the premise graph can yield importance per pass when its
        production is important or some sibling premise can derive an important
        instance; the start is unbounded iff such an edge lies on a cycle
        reachable from it.
        """
        derivable = self.derivable()
        live = self._live(derivable)
        can_imp = self._can_units(live, derivable, lambda p: p.important)

        edges = []  # (head, premise, per_pass)
        for p in live:
            for i, m in enumerate(p.premises):
                per_pass = p.important or any(
                    mj in can_imp for j, mj in enumerate(p.premises) if j != i
                )
                edges.append((p.head, m, per_pass))

        sccs = self._sccs(list(derivable), [(u, v) for u, v, _ in edges])
        comp_of = {}
        for k, comp in enumerate(sccs):
            for n in comp:
                comp_of[n] = k
        multi = {k for k, comp in enumerate(sccs) if len(comp) > 1}
        # A single-node SCC pumps only via a self-loop edge.
        pump_heads = set()
        for u, v, per_pass in edges:
            if not per_pass:
                continue
            if comp_of.get(u) == comp_of.get(v) and (comp_of[u] in multi or u == v):
                pump_heads.add(u)

        result = set()
        live_deriv = [(p.head, m) for p in live for m in p.premises]
        adj: dict[Hashable, list[Hashable]] = {}
        for u, v in live_deriv:
            adj.setdefault(u, []).append(v)
        for s in starts:
            if s not in derivable:
                continue
            seen = {s}
            queue = [s]
            hit = False
            while queue and not hit:
                u = queue.pop()
                if u in pump_heads:
                    hit = True
                    break
                for v in adj.get(u, ()):
                    if v not in seen:
                        seen.add(v)
                        queue.append(v)
            if hit:
                result.add(s)
        return frozenset(result)

    # -- letter analyses --------------------------------------------------

    def letters_somewhere(self) -> dict[Hashable, frozenset]:
        """For each derivable head, the letters appearing in some derivation."""
        derivable = self.derivable()
        live = self._live(derivable)
        acc: dict[Hashable, set] = {h: set() for h in derivable}
        changed = True
        while changed:
            changed = False
            for p in live:
                cur = acc[p.head]
                add = set()
                if p.letter is not None and p.letter not in cur:
                    add.add(p.letter)
                for m in p.premises:
                    add |= acc[m] - cur
                if add:
                    cur |= add
                    changed = True
        return {h: frozenset(s) for h, s in acc.items()}

    def sup_sets(self, letters: frozenset) -> dict[Hashable, frozenset]:
        """Downward-closed families of letter subsets with simultaneous growth.

        B is in the family of head h iff for every n some derivation from h
        contains at least n instances of every letter in B.  Combination at a
        production takes unions over premises; a strongly connected region
        additionally contributes, per pass, the letters of its internal
        productions and anything extractable from their side premises.
        """
        derivable = self.derivable()
        live = self._live(derivable)
        lett = self.letters_somewhere()

        edges = [(p.head, m) for p in live for m in p.premises]
        sccs = self._sccs(list(derivable), edges)
        comp_of = {}
        for k, comp in enumerate(sccs):
            for n in comp:
                comp_of[n] = k
        self_loops = {u for u, v in edges if u == v}
        nontrivial = {
            k for k, comp in enumerate(sccs) if len(comp) > 1
        } | {comp_of[u] for u in self_loops}

        # Letters one pass around each pumpable region can contribute: per
        # internal edge, the production's own letter plus anything the side
        # premises (every premise except the cycle continuation) can derive.
        pump_letters: dict[int, set] = {k: set() for k in nontrivial}
        for p in live:
            k = comp_of[p.head]
            if k not in nontrivial:
                continue
            for i, m in enumerate(p.premises):
                if comp_of.get(m) != k:
                    continue
                if p.letter is not None and p.letter in letters:
                    pump_letters[k].add(p.letter)
                for j, mj in enumerate(p.premises):
                    if j != i:
                        pump_letters[k] |= lett.get(mj, frozenset()) & letters
        pump_frozen = {k: frozenset(v) for k, v in pump_letters.items()}

        empty = frozenset()
        fam: dict[Hashable, set[frozenset]] = {h: {empty} for h in derivable}

        def down_close_add(target: set, newset: frozenset) -> bool:
            if newset in target:
                return False
            added = False
            stack = [newset]
            while stack:
                s = stack.pop()
                if s in target:
                    continue
                target.add(s)
                added = True
                for x in s:
                    stack.append(s - {x})
            return added

        changed = True
        while changed:
            changed = False
            for p in live:
                target = fam[p.head]
                combos = {empty}
                for m in p.premises:
                    combos = {c | b for c in combos for b in fam[m]}
                for c in combos:
                    if down_close_add(target, c):
                        changed = True
            # Pump rule: heads inside a pumpable region may add its per-pass
            # letters to anything already achievable, then keep growing.
            for h in derivable:
                extra = pump_frozen.get(comp_of.get(h), empty)
                if not extra:
                    continue
                for c in list(fam[h]):
                    if down_close_add(fam[h], c | extra):
                        changed = True
        return {h: frozenset(s) for h, s in fam.items()}
