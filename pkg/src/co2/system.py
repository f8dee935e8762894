"""Normal forms and the reduction semantics of contracting systems."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from co2 import contracts as C
from co2.contracts import BilateralContract, ContractLabel, Says
from co2.ltl import holds
from co2.syntax import (
    NIL_P, Ask, Branch, Call, Delim, Do, Fuse, Latent, Name, Par, Process, ProcessError, RawSystem,
    Sum, SysBox, SysDelim, SysNil, SysPar, SysSession, Tau, Tell, Var, free_idents, idents_in_order,
    par, prefix_key, process_key, subst, subst_prefix, unfold_call,
)


@dataclass(frozen=True)
class System:
    """A system in normal form.

    All delimitations are at the top, sessions are sorted by name, boxes by
    participant, and each box is a sorted tuple of threads (latent contracts,
    prefix-guarded sums and calls).
    """

    restricted: tuple = ()
    sessions: tuple[tuple[Name, BilateralContract], ...] = ()
    boxes: tuple[tuple[str, tuple[Process, ...]], ...] = ()

    def session(self, s) -> BilateralContract | None:
        for n, g in self.sessions:
            if n == s:
                return g
        return None

    def box(self, participant) -> tuple[Process, ...]:
        for a, ts in self.boxes:
            if a == participant:
                return ts
        return ()

    def participants(self) -> list[str]:
        return [a for a, _ in self.boxes]

    def to_raw(self) -> RawSystem:
        items = [SysSession(n, g) for n, g in self.sessions]
        items += [SysBox(a, par(ts) if ts else NIL_P) for a, ts in self.boxes]
        body = SysPar(tuple(items)) if items else SysNil()
        for u in reversed(self.restricted):
            body = SysDelim(u, body)
        return body

    def __str__(self):
        from co2.frontend import render

        return render(self)


@dataclass(frozen=True)
class SystemLabel:
    participant: str
    prefix: object
    address: str

    def to_json(self):
        from co2.frontend import render_prefix

        return {"participant": self.participant, "prefix": render_prefix(self.prefix), "address": self.address}

    def __str__(self):
        from co2.frontend import render_prefix

        return f"{self.participant} says {render_prefix(self.prefix)} @{self.address}"


# -- normalization -------------------------------------------------------------------


class _Flattener:
    def __init__(self):
        self.k = 0
        self.restricted = []
        self.orig = {}
        self.sessions = []
        self.boxes = {}  # participant -> list of thread lists, one per raw box

    def fresh(self, u):
        t = type(u)(f"%{self.k}")
        self.k += 1
        self.orig[t] = u
        self.restricted.append(t)
        return t

    def system(self, s):
        match s:
            case SysDelim(u, body):
                t = self.fresh(u)
                from co2.syntax import subst_system

                self.system(subst_system(body, {u: t}))
            case SysPar(items):
                for q in items:
                    self.system(q)
            case SysSession(n, g):
                self.sessions.append((n, g))
            case SysBox(a, p):
                threads = []
                self.process(p, threads)
                self.boxes.setdefault(a, []).append(threads)
            case SysNil():
                pass
            case _:
                raise TypeError(s)

    def process(self, p, out):
        match p:
            case Delim(u, body):
                t = self.fresh(u)
                self.process(subst(body, {u: t}), out)
            case Par(items):
                for q in items:
                    self.process(q, out)
            case _:
                q = collect_garbage(p)
                if q != NIL_P:
                    out.append(q)


def collect_garbage(p: Process) -> Process:
    """Drop latent contracts on session names and fuses on session names."""
    match p:
        case Latent(t, _, _):
            return NIL_P if isinstance(t, Name) else p
        case Sum(branches):
            if len(branches) == 1 and isinstance(branches[0].prefix, Fuse) and isinstance(branches[0].prefix.target, Name):
                return NIL_P
            return Sum(tuple(Branch(b.prefix, collect_garbage(b.cont), b.addr) for b in branches))
        case Par(items):
            return par(collect_garbage(q) for q in items)
        case Delim(u, body):
            return Delim(u, collect_garbage(body))
    return p


def normalize(s: RawSystem | System) -> System:
    if isinstance(s, System):
        s = s.to_raw()
    f = _Flattener()
    f.system(s)

    boxes = {}
    for a, groups in f.boxes.items():
        coded = [g for g in groups if any(not isinstance(t, Latent) for t in g)]
        if len(coded) > 1:
            raise ProcessError(f"participant {a} has two boxes with non-latent code")
        boxes[a] = [t for g in groups for t in g]

    used = set()
    for n, _ in f.sessions:
        used.add(n)
    for ts in boxes.values():
        for t in ts:
            used |= free_idents(t)
    restricted = [u for u in f.restricted if u in used]
    anon = frozenset(restricted)

    ordered = {}
    for a in sorted(boxes):
        ordered[a] = sorted(boxes[a], key=lambda t: process_key(t, anon))

    # Canonical names: bound variables n0, n1, ... by first occurrence; bound
    # names keep their source name unless it clashes.
    free_names = {u.name for u in used if u not in anon}
    ren = {}
    taken = set(free_names)
    for u in restricted:
        if isinstance(u, Name):
            want = f.orig[u].name
            if want in taken:
                want = _fresh_name("s", taken)
            taken.add(want)
            ren[u] = Name(want)
    occ = []
    for a, ts in ordered.items():
        for t in ts:
            idents_in_order(t, occ)
    k = 0
    for u in occ:
        if isinstance(u, Var) and u in anon and u not in ren:
            while f"n{k}" in taken:
                k += 1
            ren[u] = Var(f"n{k}")
            taken.add(f"n{k}")
    for u in restricted:
        if u not in ren:
            ren[u] = Var(_fresh_name("n", taken))
            taken.add(ren[u].name)

    sessions = tuple(sorted(((ren.get(n, n), g) for n, g in f.sessions), key=lambda x: x[0].name))
    names = [n for n, _ in sessions]
    if len(set(names)) != len(names):
        raise ProcessError("duplicate session name")
    out_boxes = tuple((a, tuple(subst(t, ren) for t in ts)) for a, ts in ordered.items())
    new_restricted = tuple(sorted((ren[u] for u in restricted), key=lambda u: (isinstance(u, Var), _natkey(u.name))))
    return System(new_restricted, sessions, out_boxes)


def _natkey(s):
    import re

    return [int(x) if x.isdigit() else x for x in re.split(r"(\d+)", s)]


def _fresh_name(prefix, taken):
    k = 0
    while f"{prefix}{k}" in taken:
        k += 1
    return f"{prefix}{k}"


# -- steps ---------------------------------------------------------------------------


def expand_thread(t: Process, defs: dict) -> tuple[list, list[Process]]:
    """Unfold a call one level and split it into (new binders, threads)."""
    if not isinstance(t, Call):
        return [], [t]
    body = unfold_call(t, defs)
    binders = []
    threads = []
    taken = set()

    def go(p):
        match p:
            case Delim(u, b):
                v = type(u)(f"%d{len(binders)}")
                binders.append(v)
                go(subst(b, {u: v}))
            case Par(items):
                for q in items:
                    go(q)
            case Call():
                # Calls in bodies are prefix guarded; an unguarded one here
                # comes from a top-level call chain and is unfolded again.
                if p.name in taken:
                    raise ProcessError(f"unguarded recursion through {p.name}")
                taken.add(p.name)
                bs, ts = expand_thread(p, defs)
                binders.extend(bs)
                threads.extend(ts)
            case _:
                q = collect_garbage(p)
                if q != NIL_P:
                    threads.append(q)

    go(body)
    return binders, threads


def find_agreements(latents: list[Latent], x) -> list[tuple[BilateralContract, list[Latent], dict]]:
    out = []
    for i in range(len(latents)):
        for j in range(i + 1, len(latents)):
            k1, k2 = latents[i], latents[j]
            if k1.owner == k2.owner:
                continue
            if not (isinstance(k1.target, Var) and isinstance(k2.target, Var) and isinstance(x, Var)):
                continue
            if not C.is_compliant(k1.contract, k2.contract).compliant:
                continue
            g = BilateralContract(Says(k1.owner, k1.contract), Says(k2.owner, k2.contract))
            rest = [k for m, k in enumerate(latents) if m not in (i, j)]
            out.append((g, rest, {x: None, k1.target: None, k2.target: None}))
    return out


_ASK_CACHE: dict = {}


def _ask(g, phi) -> bool:
    key = (g.key(), phi)
    if key not in _ASK_CACHE:
        _ASK_CACHE[key] = holds(g, phi)
    return _ASK_CACHE[key]


def _all_names(sys: System) -> set[str]:
    out = {u.name for u in sys.restricted}
    for n, _ in sys.sessions:
        out.add(n.name)
    for _, ts in sys.boxes:
        for t in ts:
            for u in idents_in_order(t, []):
                out.add(u.name)
    return out


def system_steps(sys: System, defs: dict) -> list[tuple[SystemLabel, System]]:
    """All reductions of a normalized system, in a deterministic order."""
    results = {}
    for a, threads in sys.boxes:
        for i, t in enumerate(threads):
            binders, expanded = expand_thread(t, defs)
            others = list(threads[:i]) + list(threads[i + 1:])
            for j, th in enumerate(expanded):
                if not isinstance(th, Sum):
                    continue
                siblings = others + expanded[:j] + expanded[j + 1:]
                for b in th.branches:
                    for lab, nxt in _fire(sys, a, b, siblings, binders, defs):
                        results.setdefault((lab, nxt), None)
    out = list(results)
    out.sort(key=lambda r: (r[0].participant, _natkey(r[0].address), prefix_key(r[0].prefix), str(r[1])))
    return out


def _rebuild(sys: System, a: str, threads: list, binders: list, sessions=None, extra=None, sigma=None) -> System:
    items = []
    for n, g in (sessions if sessions is not None else sys.sessions):
        items.append(SysSession(n, g))
    for b, ts in sys.boxes:
        if b == a:
            ts = threads
        items.append(SysBox(b, par(ts)))
    if a not in sys.participants():
        items.append(SysBox(a, par(threads)))
    for e in extra or ():
        items.append(e)
    body: RawSystem = SysPar(tuple(items))
    if sigma:
        from co2.syntax import subst_system

        body = subst_system(body, sigma)
    restricted = list(sys.restricted) + list(binders)
    if sigma:
        restricted = [u for u in restricted if u not in sigma]
    for u in reversed(restricted):
        body = SysDelim(u, body)
    return normalize(body)


def _fire(sys, a, b: Branch, siblings, binders, defs):
    pi, cont = b.prefix, b.cont
    rest = siblings + [cont]
    match pi:
        case Tau():
            yield SystemLabel(a, pi, b.addr), _rebuild(sys, a, rest, binders)
        case Tell(to, x, c):
            latent = SysBox(to, Latent(x, a, c))
            yield SystemLabel(a, pi, b.addr), _rebuild(sys, a, rest, binders, extra=[latent])
        case Fuse(x):
            if not isinstance(x, Var):
                return
            latents = [t for t in siblings if isinstance(t, Latent)]
            non_latent = [t for t in siblings if not isinstance(t, Latent)]
            taken = _all_names(sys) | {u.name for u in binders}
            s = Name(_fresh_name("s", taken))
            for g, remaining, dom in find_agreements(latents, x):
                sigma = {u: s for u in dom}
                threads = non_latent + remaining + [cont]
                sessions = list(sys.sessions) + [(s, g)]
                # s is bound at the top: reuse restriction list via binders.
                nxt = _rebuild(sys, a, threads, binders + [s], sessions=sessions, sigma=sigma)
                yield SystemLabel(a, Fuse(s), b.addr), nxt
        case Do(s, atom):
            g = sys.session(s)
            if g is None or a not in g.participants:
                return
            g2 = C.step(g, ContractLabel(a, atom))
            if g2 is None:
                return
            sessions = [(n, g2 if n == s else h) for n, h in sys.sessions]
            yield SystemLabel(a, pi, b.addr), _rebuild(sys, a, rest, binders, sessions=sessions)
        case Ask(s, phi):
            g = sys.session(s)
            if g is None or not _ask(g, phi):
                return
            yield SystemLabel(a, pi, b.addr), _rebuild(sys, a, rest, binders)


# -- ready-do and culpability ------------------------------------------------------------


def ready_do(s, p: Process | Iterable[Process], defs: dict | None = None) -> frozenset:
    """Atoms a with an unguarded `do s a` in p (calls are unfolded)."""
    defs = defs or {}
    out = set()
    seen_calls = set()

    def go(q):
        match q:
            case Sum(branches):
                for b in branches:
                    if isinstance(b.prefix, Do) and b.prefix.target == s:
                        out.add(b.prefix.atom)
            case Par(items):
                for r in items:
                    go(r)
            case Delim(u, body):
                if u != s:
                    go(body)
            case Call():
                if q in seen_calls:
                    return
                seen_calls.add(q)
                go(unfold_call(q, defs))

    if isinstance(p, Process):
        go(p)
    else:
        for q in p:
            go(q)
    return frozenset(out)


def culpable_at(participant: str, s, sys: System) -> bool:
    g = sys.session(s)
    if g is None or participant not in g.participants:
        return False
    return C.is_culpable(g, participant)


def culpability_map(sys: System) -> list[tuple[str, str, bool]]:
    out = []
    for n, g in sys.sessions:
        for p in sorted(g.participants):
            out.append((n.name, p, C.is_culpable(g, p)))
    return out
