"""LTL over the traces of a bilateral contract.

A trace is a maximal sequence of contract transitions; the atom `a` holds at
a position when the label fired there carries `a` (by either participant).
Finite maximal traces use the usual finite-trace reading: `X` fails at the
last position, `U` needs its right side within the trace, `[]` ranges over
the remaining positions only.  `holds` quantifies over all traces.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from co2.contracts import Atom, BilateralContract, DEFAULT_STATE_CAP, explore


class Formula:
    __slots__ = ()

    def __str__(self):
        from co2.frontend import render

        return render(self)


@dataclass(frozen=True)
class LTrue(Formula):
    pass


@dataclass(frozen=True)
class LAtom(Formula):
    atom: Atom


@dataclass(frozen=True)
class LNot(Formula):
    arg: Formula


@dataclass(frozen=True)
class LAnd(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class LOr(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class LImplies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class LNext(Formula):
    arg: Formula


@dataclass(frozen=True)
class LUntil(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class LAlways(Formula):
    arg: Formula


@dataclass(frozen=True)
class LEventually(Formula):
    arg: Formula


TRUE = LTrue()


def core(f: Formula) -> Formula:
    """Rewrite into true / atom / not / and / X / U."""
    match f:
        case LTrue() | LAtom():
            return f
        case LNot(a):
            return LNot(core(a))
        case LAnd(a, b):
            return LAnd(core(a), core(b))
        case LOr(a, b):
            return LNot(LAnd(LNot(core(a)), LNot(core(b))))
        case LImplies(a, b):
            return LNot(LAnd(core(a), LNot(core(b))))
        case LNext(a):
            return LNext(core(a))
        case LUntil(a, b):
            return LUntil(core(a), core(b))
        case LEventually(a):
            return LUntil(TRUE, core(a))
        case LAlways(a):
            return LNot(LUntil(TRUE, LNot(core(a))))
    raise TypeError(f"not a formula: {f!r}")


def _subformulas(f, acc):
    if f in acc:
        return
    match f:
        case LNot(a) | LNext(a):
            _subformulas(a, acc)
        case LAnd(a, b) | LUntil(a, b):
            _subformulas(a, acc)
            _subformulas(b, acc)
    acc[f] = None


def eval_empty(f: Formula) -> bool:
    """Truth on the empty trace (a contract that cannot move at all)."""
    match f:
        case LTrue():
            return True
        case LAtom() | LNext() | LUntil():
            return False
        case LNot(a):
            return not eval_empty(a)
        case LAnd(a, b):
            return eval_empty(a) and eval_empty(b)
    return eval_empty(core(f))


def holds(g: BilateralContract, phi: Formula, cap: int = DEFAULT_STATE_CAP) -> bool:
    """True iff every maximal trace from g satisfies phi."""
    neg = LNot(core(phi))
    states, edges = explore(g, cap)
    root = g.key()
    if not edges[root]:
        return not eval_empty(neg)

    sub: dict = {}
    _subformulas(neg, sub)
    # Elementary obligations: X h as written, plus X(f U g) for every until.
    elem = []
    for f in sub:
        if isinstance(f, LNext):
            elem.append(f.arg)
        elif isinstance(f, LUntil):
            elem.append(f)
    elem = list(dict.fromkeys(elem))
    untils = [f for f in sub if isinstance(f, LUntil)]

    # Kripke nodes are transitions (src, index); successors are the outgoing
    # transitions of the target state.
    nodes = []
    node_atom = {}
    node_succ = {}
    for k, succ in edges.items():
        for i, (lab, k2) in enumerate(succ):
            n = (k, i)
            nodes.append(n)
            node_atom[n] = lab.atom
            node_succ[n] = [(k2, j) for j in range(len(edges[k2]))]

    def value(f, atom, nxt):
        match f:
            case LTrue():
                return True
            case LAtom(a):
                return atom == a
            case LNot(a):
                return not value(a, atom, nxt)
            case LAnd(a, b):
                return value(a, atom, nxt) and value(b, atom, nxt)
            case LNext(a):
                return nxt[a]
            case LUntil(a, b):
                return value(b, atom, nxt) or (value(a, atom, nxt) and nxt[f])
        raise TypeError(f)

    # Product nodes: (kripke node, assignment to elementary obligations).
    assignments = {}
    for n in nodes:
        opts = []
        terminal = not node_succ[n]
        for bits in product((False, True), repeat=len(elem)):
            if terminal and any(bits):
                continue
            opts.append(dict(zip(elem, bits)))
        assignments[n] = opts

    def pnode(n, ai):
        return (n, ai)

    def consistent(n, ai, m, bi):
        nxt = assignments[n][ai]
        atom_m = node_atom[m]
        nxt_m = assignments[m][bi]
        return all(nxt[h] == value(h, atom_m, nxt_m) for h in elem)

    init = [
        pnode((root, i), ai)
        for i in range(len(edges[root]))
        for ai, a in enumerate(assignments[(root, i)])
        if value(neg, node_atom[(root, i)], a)
    ]
    # Reachable product graph.
    succ_p: dict = {}
    seen = set(init)
    stack = list(init)
    while stack:
        n, ai = stack.pop()
        out = []
        for m in node_succ[n]:
            for bi in range(len(assignments[m])):
                if consistent(n, ai, m, bi):
                    out.append((m, bi))
                    if (m, bi) not in seen:
                        seen.add((m, bi))
                        stack.append((m, bi))
        succ_p[(n, ai)] = out

    # A counterexample is a path from init to a terminal product node, or into
    # a cycle that fulfils every until obligation.
    good = set()
    for p in seen:
        n, ai = p
        if not node_succ[n]:
            good.add(p)
    for comp in _sccs(list(seen), succ_p):
        cs = set(comp)
        if len(comp) == 1 and comp[0] not in succ_p[comp[0]]:
            continue
        if not any(q in cs for p in comp for q in succ_p[p]):
            continue
        ok = True
        for u in untils:
            if not any(
                not assignments[p[0]][p[1]][u]
                or value(u.right, node_atom[p[0]], assignments[p[0]][p[1]])
                for p in comp
            ):
                ok = False
                break
        if ok:
            good.update(comp)
    if not good:
        return True
    # Backward reachability from good nodes.
    preds: dict = {p: [] for p in seen}
    for p, out in succ_p.items():
        for q in out:
            preds[q].append(p)
    reach = set(good)
    stack = list(good)
    while stack:
        q = stack.pop()
        for p in preds[q]:
            if p not in reach:
                reach.add(p)
                stack.append(p)
    return not any(p in reach for p in init)


def _sccs(nodes, succ):
    """Tarjan's algorithm, iterative."""
    index = {}
    low = {}
    on = set()
    st = []
    out = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        st.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    st.append(w)
                    on.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                    advanced = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = st.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


sccs = _sccs
ltl_holds = holds
