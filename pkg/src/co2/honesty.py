"""Static honesty criterion: realizability in the abstract semantics plus x-safety.

A participant passes when every contract it advertises is realized by the
continuation of the advertising prefix, whatever the context does, and no
parallel code can act on the advertised session behind its back.
Passing implies honesty; failing proves nothing.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from co2.abstraction import (
    DEFAULT_ABSTRACT_CAP, SHARP, AbstractCapExceeded, AbstractState, Act, abs_contract_steps, canonical,
    explore_abstract,
)
from co2.contracts import Contract, Nil, unblocks, unfold
from co2.ltl import sccs
from co2.syntax import (
    Branch, Call, Delim, Do, Latent, Name, Par, Process, ProcessError, Sum, Tell, calls_in, subst,
)
from co2.system import ready_do

SHARP_HONEST = "SharpHonest"
NOT_SHARP_HONEST = "NotSharpHonest"
UNSUPPORTED = "Unsupported"


@dataclass
class Realizes:
    holds: bool
    certificate: dict | None = None

    def __bool__(self):
        return self.holds


@dataclass
class HonestyVerdict:
    status: str
    reasons: list[dict] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return {SHARP_HONEST: 0, NOT_SHARP_HONEST: 1, UNSUPPORTED: 2}[self.status]

    def to_json(self) -> dict:
        return {"status": self.status, "reasons": self.reasons}


def _unblocks(c: Contract, xs) -> bool:
    # 0 cannot be realized by anything; treat it as blocked.
    if isinstance(unfold(c), Nil):
        return False
    return unblocks(c, xs)


def admissible_sccs(graph, s) -> dict:
    """Map each state to whether its do_s-free SCC is {tau,tell}-fair admissible.

    An SCC hosts a fair infinite path iff every tau/tell prefix address that
    is enabled in all of its states is also fired by some edge inside it.
    """
    free = {st: [(lab, nxt) for lab, nxt in succ if not lab.is_do_on(s)] for st, succ in graph.items()}
    succ_only = {st: [nxt for _, nxt in out] for st, out in free.items()}
    result = {}
    for comp in sccs(list(graph), succ_only):
        members = set(comp)
        enabled_everywhere = None
        fired = set()
        for st in comp:
            here = {(lab.kind, lab.address) for lab, _ in graph[st] if lab.kind in ("tau", "tell")}
            enabled_everywhere = here if enabled_everywhere is None else enabled_everywhere & here
            for lab, nxt in free[st]:
                if nxt in members and lab.kind in ("tau", "tell"):
                    fired.add((lab.kind, lab.address))
        ok = (enabled_everywhere or set()) <= fired
        # Every abstract state has a ctx self-loop, so SCCs are never trivial.
        for st in comp:
            result[st] = ok
    return result


def realizes(
    start: AbstractState, c: Contract, defs: dict, s=SHARP, cap: int = DEFAULT_ABSTRACT_CAP, graph=None
) -> Realizes:
    """Greatest-fixpoint realizability of c at session s by the abstract process."""
    if graph is None:
        graph = explore_abstract(start, defs, cap)
    adm = admissible_sccs(graph, s)
    rd_cache = {}

    def rd(st):
        if st not in rd_cache:
            rd_cache[st] = ready_do(s, st.threads, defs)
        return rd_cache[st]

    c0 = unfold(c)
    root = (start, c0)
    parent = {root: None}
    queue = deque([root])
    while queue:
        pair = queue.popleft()
        st, k = pair
        if adm[st] and not _unblocks(k, rd(st)):
            return Realizes(False, _certificate(parent, pair, rd(st)))
        for lab, nxt in graph[st]:
            if lab.is_do_on(s):
                targets = [k2 for lab2, k2 in abs_contract_steps(k) if lab2 == Act(lab.atom)]
            else:
                targets = [k]
            for k2 in targets:
                p2 = (nxt, unfold(k2))
                if p2 not in parent:
                    parent[p2] = (pair, lab)
                    queue.append(p2)
    return Realizes(True, None)


def _certificate(parent, pair, rd_set):
    from co2.frontend import render_contract

    path = []
    cur = pair
    while parent[cur] is not None:
        prev, lab = parent[cur]
        path.append(str(lab))
        cur = prev
    st, k = pair
    return {
        "path": path[::-1],
        "process": str(st),
        "contract": render_contract(k),
        "ready_do": sorted(str(a) for a in rd_set),
    }


# -- syntactic checks -----------------------------------------------------------------


def reachable_definitions(p: Process, defs: dict) -> list[str]:
    out = []
    todo = [c.name for c in calls_in(p)]
    while todo:
        n = todo.pop(0)
        if n in out:
            continue
        if n not in defs:
            raise ProcessError(f"undefined process identifier {n}")
        out.append(n)
        todo.extend(c.name for c in calls_in(defs[n].body))
    return out


def _call_graph(defs):
    return {n: {c.name for c in calls_in(d.body)} for n, d in defs.items()}


def _reach(graph, start):
    seen = set()
    todo = list(graph.get(start, ()))
    while todo:
        n = todo.pop()
        if n not in seen:
            seen.add(n)
            todo.extend(graph.get(n, ()))
    return seen


def finite_control_violations(p: Process, defs: dict) -> list[str]:
    """Definitions that put a parallel composition under their own recursion."""
    names = reachable_definitions(p, defs)
    cg = _call_graph(defs)
    bad = []
    for n in names:
        if _par_under_recursion(defs[n].body, n, cg):
            bad.append(n)
    return bad


def _par_under_recursion(body, name, cg) -> bool:
    def recursive_calls(q):
        return [c for c in calls_in(q) if c.name == name or name in _reach(cg, c.name)]

    def go(q):
        match q:
            case Par(items):
                if recursive_calls(q):
                    return True
                return any(go(r) for r in items)
            case Sum(branches):
                return any(go(b.cont) for b in branches)
            case Delim(_, b):
                return go(b)
        return False

    return go(body)


def is_finite_control(p: Process, defs: dict) -> bool:
    return not finite_control_violations(p, defs)


def _may_do(defs) -> dict:
    """(definition, parameter index) pairs whose body may perform do on that parameter."""
    may = {(n, i): False for n, d in defs.items() for i in range(len(d.params))}
    changed = True
    while changed:
        changed = False
        for n, d in defs.items():
            for i, x in enumerate(d.params):
                if may[(n, i)]:
                    continue
                if _acts_on(d.body, x, may):
                    may[(n, i)] = True
                    changed = True
    return may


def _acts_on(p, x, may) -> bool:
    match p:
        case Sum(branches):
            for b in branches:
                if isinstance(b.prefix, Do) and b.prefix.target == x:
                    return True
                if _acts_on(b.cont, x, may):
                    return True
            return False
        case Par(items):
            return any(_acts_on(q, x, may) for q in items)
        case Delim(u, body):
            return u != x and _acts_on(body, x, may)
        case Call(n, args):
            return any(a == x and may.get((n, i), False) for i, a in enumerate(args))
    return False


def _uniquify(p: Process) -> Process:
    """Rename every delimitation binder to a distinct identifier."""
    counter = [0]

    def go(q):
        match q:
            case Delim(u, body):
                v = type(u)(f"{u.name}#{counter[0]}")
                counter[0] += 1
                return Delim(v, go(subst(body, {u: v})))
            case Sum(branches):
                return Sum(tuple(Branch(b.prefix, go(b.cont), b.addr) for b in branches))
            case Par(items):
                return Par(tuple(go(r) for r in items))
        return q

    return go(p)


def _tells(p: Process):
    """Yield (tell branch, enclosing sum) for every tell occurrence."""
    match p:
        case Sum(branches):
            for b in branches:
                if isinstance(b.prefix, Tell):
                    yield b, p
                yield from _tells(b.cont)
        case Par(items):
            for q in items:
                yield from _tells(q)
        case Delim(_, body):
            yield from _tells(body)


def _context_offenders(p: Process, hole: Sum, x, may) -> list[str]:
    """Do prefixes (or calls that may do) on x outside the hole."""
    out = []

    def go(q):
        if q is hole:
            return
        match q:
            case Sum(branches):
                for b in branches:
                    if isinstance(b.prefix, Do) and b.prefix.target == x:
                        out.append(b.addr)
                    go(b.cont)
            case Par(items):
                for r in items:
                    go(r)
            case Delim(_, body):
                go(body)
            case Call(n, args):
                for i, a in enumerate(args):
                    if a == x and may.get((n, i), False):
                        out.append(f"call {n}")

    go(p)
    return out


def x_safe(p: Process, address: str, defs: dict | None = None) -> bool:
    """Whether the context of the tell at `address` leaves its session variable alone."""
    may = _may_do(defs or {})
    body = _uniquify(p)
    for branch, hole in _tells(body):
        if branch.addr == address:
            x = branch.prefix.target
            if isinstance(x, Name):
                return True
            return not _context_offenders(body, hole, x, may)
    raise ProcessError(f"no tell prefix at address {address}")


def _latents(p: Process):
    match p:
        case Latent():
            yield p
        case Sum(branches):
            for b in branches:
                yield from _latents(b.cont)
        case Par(items):
            for q in items:
                yield from _latents(q)
        case Delim(_, body):
            yield from _latents(body)


def check_sharp_honesty(
    participant: str, p: Process, defs: dict, cap: int = DEFAULT_ABSTRACT_CAP
) -> HonestyVerdict:
    from co2.frontend import render_contract

    try:
        names = reachable_definitions(p, defs)
    except ProcessError as e:
        return HonestyVerdict(UNSUPPORTED, [{"kind": "UndefinedIdentifier", "detail": str(e)}])
    bad = finite_control_violations(p, defs)
    if bad:
        return HonestyVerdict(UNSUPPORTED, [{"kind": "NotFiniteControl", "definition": n} for n in bad])

    roots = [(participant, p)] + [(n, defs[n].body) for n in names]
    reasons = []
    for where, body in roots:
        for k in _latents(body):
            if k.owner == participant:
                reasons.append({"kind": "OwnLatentContract", "location": where, "session": str(k.target)})

    may = _may_do(defs)
    for where, body in roots:
        body = _uniquify(body)
        for branch, hole in _tells(body):
            tell = branch.prefix
            if isinstance(tell.target, Name):
                continue
            x = tell.target
            offenders = _context_offenders(body, hole, x, may)
            if offenders:
                reasons.append({"kind": "XSafetyViolation", "tell": branch.addr, "offending": offenders})
            q = subst(branch.cont, {x: SHARP})
            start = canonical(participant, q)
            try:
                r = realizes(start, tell.contract, defs, SHARP, cap)
            except AbstractCapExceeded as e:
                return HonestyVerdict(UNSUPPORTED, reasons + [{"kind": "StateCapExceeded", "tell": branch.addr, "detail": str(e)}])
            if not r.holds:
                reasons.append({
                    "kind": "RealizesFailure",
                    "tell": branch.addr,
                    "contract": render_contract(tell.contract),
                    "counterexample": r.certificate,
                })
    return HonestyVerdict(NOT_SHARP_HONEST if reasons else SHARP_HONEST, reasons)
