"""Context-free abstract semantics of contracts and of one participant's process.

The abstract process LTS lets the analysed participant fire any of its
prefixes (the context is assumed to cooperate), while `ctx` moves model the
context instantiating session variables.  Latent contracts are dropped from
abstract states: they carry no prefixes and affect neither enabled steps nor
ready-do sets, and keeping them would make the state space infinite.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from co2.contracts import NIL, Atom, Contract, ExtSum, IntSum, Ready, E, unfold
from co2.syntax import (
    NIL_P, Ask, Call, Delim, Do, Fuse, Latent, Name, Par, Process, Sum, Tau, Tell, Var,
    idents_in_order, process_key, subst,
)
from co2.system import collect_garbage, expand_thread

SHARP = Name("s#")
DEFAULT_ABSTRACT_CAP = 50_000


class AbstractCapExceeded(RuntimeError):
    pass


# -- contracts ---------------------------------------------------------------------


@dataclass(frozen=True)
class Act:
    atom: Atom


@dataclass(frozen=True)
class Ctx:
    pass


@dataclass(frozen=True)
class Zero:
    pass


CTX = Ctx()
ZERO = Zero()


def abs_contract_steps(c: Contract) -> list[tuple[object, Contract]]:
    c = unfold(c)
    out = []
    if isinstance(c, (IntSum, ExtSum)):
        for a, k in c.branches:
            out.append((Act(a), k))
            out.append((Act(a), E))
        out.append((ZERO, NIL))
        if isinstance(c, ExtSum):
            for a, k in c.branches:
                out.append((CTX, Ready(a, k)))
        elif len(c.branches) == 1:
            a, k = c.branches[0]
            out.append((CTX, Ready(a, k)))
    elif isinstance(c, Ready):
        out.append((Act(c.atom), c.body))
    out.append((CTX, c))
    seen = []
    for lab, k in out:
        if (lab, k) not in seen:
            seen.append((lab, k))
    return seen


# -- processes ------------------------------------------------------------------------


@dataclass(frozen=True)
class AbsLabel:
    kind: str  # tau, tell, fuse, do, ask, ctx
    address: str = ""
    target: object = None
    atom: Atom | None = None

    def is_do_on(self, s) -> bool:
        return self.kind == "do" and self.target == s

    def __str__(self):
        if self.kind == "ctx":
            return "ctx"
        parts = [self.kind]
        if self.target is not None:
            parts.append(str(self.target))
        if self.atom is not None:
            parts.append(str(self.atom))
        return " ".join(parts) + (f" @{self.address}" if self.address else "")


@dataclass(frozen=True)
class AbstractState:
    participant: str
    threads: tuple[Process, ...]

    def __str__(self):
        from co2.frontend import render_process

        if not self.threads:
            return "0"
        return " | ".join(
            f"({render_process(t)})" if isinstance(t, Delim) else render_process(t) for t in self.threads
        )


def open_top(p: Process | list) -> list[Process]:
    """Hoist and strip unguarded delimitations; the binders become free."""
    out = []
    counter = [0]

    def go(q):
        match q:
            case Delim(u, body):
                v = type(u)(f"%o{counter[0]}")
                counter[0] += 1
                go(subst(body, {u: v}))
            case Par(items):
                for r in items:
                    go(r)
            case _:
                r = collect_garbage(q)
                if r != NIL_P:
                    out.append(r)

    for q in p if isinstance(p, (list, tuple)) else [p]:
        go(q)
    return out


def canonical(participant: str, p: Process | list) -> AbstractState:
    threads = [t for t in open_top(p) if not isinstance(t, Latent)]
    threads = [_prune_latents(t) for t in threads]
    free = set()
    for t in threads:
        free.update(idents_in_order(t, []))
    anon = frozenset(u for u in free if u != SHARP)
    threads.sort(key=lambda t: process_key(t, anon))
    occ = []
    for t in threads:
        idents_in_order(t, occ)
    ren = {}
    nv = nn = 0
    for u in occ:
        if u == SHARP or u in ren:
            continue
        if isinstance(u, Var):
            ren[u] = Var(f"v{nv}")
            nv += 1
        else:
            ren[u] = Name(f"n{nn}")
            nn += 1
    # Two-step renaming keeps the substitution simultaneous.
    tmp = {u: type(u)(f"%c{i}") for i, u in enumerate(ren)}
    threads = [subst(subst(t, tmp), {tmp[u]: v for u, v in ren.items()}) for t in threads]
    return AbstractState(participant, tuple(threads))


def _prune_latents(p: Process) -> Process:
    from co2.syntax import Branch, par

    match p:
        case Latent():
            return NIL_P
        case Sum(branches):
            return Sum(tuple(Branch(b.prefix, _prune_latents(b.cont), b.addr) for b in branches))
        case Par(items):
            return par(_prune_latents(q) for q in items)
        case Delim(u, body):
            return Delim(u, _prune_latents(body))
    return p


# Canonical states only use v<k>/n<k>, so this name is always fresh.
_FRESH = Name("%fresh")


def abs_process_steps(st: AbstractState, defs: dict) -> list[tuple[AbsLabel, AbstractState]]:
    out = {}
    a = st.participant
    for i, t in enumerate(st.threads):
        binders, expanded = expand_thread(t, defs)
        others = list(st.threads[:i]) + list(st.threads[i + 1:])
        for j, th in enumerate(expanded):
            if not isinstance(th, Sum):
                continue
            siblings = others + expanded[:j] + expanded[j + 1:]
            for b in th.branches:
                rest = siblings + [b.cont]
                pi = b.prefix
                match pi:
                    case Tau():
                        out.setdefault((AbsLabel("tau", b.addr), canonical(a, rest)), None)
                    case Tell():
                        out.setdefault((AbsLabel("tell", b.addr), canonical(a, rest)), None)
                    case Fuse(x) if isinstance(x, Var):
                        nxt = canonical(a, [subst(q, {x: _FRESH}) for q in rest])
                        out.setdefault((AbsLabel("fuse", b.addr), nxt), None)
                    case Do(x, atom) if isinstance(x, Name):
                        out.setdefault((AbsLabel("do", b.addr, x, atom), canonical(a, rest)), None)
                    case Ask(x) if isinstance(x, Name):
                        out.setdefault((AbsLabel("ask", b.addr, x), canonical(a, rest)), None)
    free_vars = []
    for t in st.threads:
        for u in idents_in_order(t, []):
            if isinstance(u, Var) and u not in free_vars:
                free_vars.append(u)
    for v in free_vars:
        nxt = canonical(a, [subst(t, {v: _FRESH}) for t in st.threads])
        out.setdefault((AbsLabel("ctx"), nxt), None)
    out.setdefault((AbsLabel("ctx"), st), None)
    return list(out)


def explore_abstract(start: AbstractState, defs: dict, cap: int = DEFAULT_ABSTRACT_CAP):
    """Reachable abstract graph: {state: [(label, state'), ...]} in BFS order."""
    graph = {}
    seen = {start}
    queue = deque([start])
    while queue:
        st = queue.popleft()
        succ = abs_process_steps(st, defs)
        graph[st] = succ
        for _, nxt in succ:
            if nxt not in seen:
                if len(seen) >= cap:
                    raise AbstractCapExceeded(f"more than {cap} abstract states")
                seen.add(nxt)
                queue.append(nxt)
    return graph


def abstract_graph_json(graph) -> dict:
    index = {st: i for i, st in enumerate(graph)}
    return {
        "nodes": [str(st) for st in graph],
        "edges": [
            {"from": index[st], "to": index[nxt], "label": str(lab)} for st, succ in graph.items() for lab, nxt in succ
        ],
    }
