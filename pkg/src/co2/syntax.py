"""Abstract syntax of contracting processes and systems."""
from __future__ import annotations

from dataclasses import dataclass

from co2.contracts import Atom, BilateralContract, Contract, ExtSum, IntSum, Nil, Ready, Rec, RecVar


class ProcessError(ValueError):
    """A process or system term is not well formed."""


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, order=True)
class Name:
    name: str

    def __str__(self):
        return self.name


Ident = Var | Name

# -- prefixes -------------------------------------------------------------------


@dataclass(frozen=True)
class Tau:
    @property
    def target(self):
        return None


@dataclass(frozen=True)
class Tell:
    to: str
    target: Ident
    contract: Contract


@dataclass(frozen=True)
class Fuse:
    target: Ident


@dataclass(frozen=True)
class Do:
    target: Ident
    atom: Atom


@dataclass(frozen=True)
class Ask:
    target: Ident
    formula: object


Prefix = Tau | Tell | Fuse | Do | Ask

# -- processes ---------------------------------------------------------------------


class Process:
    __slots__ = ()

    def __str__(self):
        from co2.frontend import render

        return render(self)


@dataclass(frozen=True)
class Latent(Process):
    target: Ident
    owner: str
    contract: Contract


@dataclass(frozen=True)
class Branch:
    prefix: Prefix
    cont: Process
    addr: str = ""


@dataclass(frozen=True)
class Sum(Process):
    branches: tuple[Branch, ...]


@dataclass(frozen=True)
class Par(Process):
    items: tuple[Process, ...]


@dataclass(frozen=True)
class Delim(Process):
    ident: Ident
    body: Process


@dataclass(frozen=True)
class Call(Process):
    name: str
    args: tuple[Ident, ...]


NIL_P = Sum(())


@dataclass(frozen=True)
class Definition:
    name: str
    params: tuple[Var, ...]
    body: Process


# -- systems ------------------------------------------------------------------------


class RawSystem:
    __slots__ = ()

    def __str__(self):
        from co2.frontend import render

        return render(self)


@dataclass(frozen=True)
class SysBox(RawSystem):
    participant: str
    process: Process


@dataclass(frozen=True)
class SysSession(RawSystem):
    name: Name
    contract: BilateralContract


@dataclass(frozen=True)
class SysPar(RawSystem):
    items: tuple[RawSystem, ...]


@dataclass(frozen=True)
class SysDelim(RawSystem):
    ident: Ident
    body: RawSystem


@dataclass(frozen=True)
class SysNil(RawSystem):
    pass


SYS_NIL = SysNil()

# -- free identifiers and substitution ------------------------------------------------


def prefix_idents(pi) -> set:
    t = getattr(pi, "target", None)
    return {t} if t is not None else set()


def free_idents(p: Process) -> frozenset:
    match p:
        case Latent(t, _, _):
            return frozenset({t})
        case Sum(branches):
            out = set()
            for b in branches:
                out |= prefix_idents(b.prefix)
                out |= free_idents(b.cont)
            return frozenset(out)
        case Par(items):
            return frozenset().union(*(free_idents(q) for q in items)) if items else frozenset()
        case Delim(u, body):
            return free_idents(body) - {u}
        case Call(_, args):
            return frozenset(args)
    raise TypeError(p)


def free_idents_system(s: RawSystem) -> frozenset:
    match s:
        case SysBox(_, p):
            return free_idents(p)
        case SysSession(n, _):
            return frozenset({n})
        case SysPar(items):
            return frozenset().union(*(free_idents_system(q) for q in items)) if items else frozenset()
        case SysDelim(u, body):
            return free_idents_system(body) - {u}
    return frozenset()


def all_idents(p) -> set:
    """Every identifier occurring in p, bound or free."""
    out = set()

    def go(q):
        match q:
            case Latent(t, _, _):
                out.add(t)
            case Sum(branches):
                for b in branches:
                    out.update(prefix_idents(b.prefix))
                    go(b.cont)
            case Par(items) | SysPar(items):
                for i in items:
                    go(i)
            case Delim(u, body) | SysDelim(u, body):
                out.add(u)
                go(body)
            case Call(_, args):
                out.update(args)
            case SysBox(_, proc):
                go(proc)
            case SysSession(n, _):
                out.add(n)

    go(p)
    return out


def fresh_like(u: Ident, avoid) -> Ident:
    base = u.name.rstrip("'")
    k = 1
    while True:
        cand = type(u)(base + "'" * k)
        if cand not in avoid:
            return cand
        k += 1


def subst_prefix(pi, m: dict):
    match pi:
        case Tell(to, t, c):
            return Tell(to, m.get(t, t), c)
        case Fuse(t):
            return Fuse(m.get(t, t))
        case Do(t, a):
            return Do(m.get(t, t), a)
        case Ask(t, f):
            return Ask(m.get(t, t), f)
    return pi


def subst(p: Process, m: dict) -> Process:
    """Capture-avoiding substitution of identifiers."""
    if not m:
        return p
    match p:
        case Latent(t, o, c):
            return Latent(m.get(t, t), o, c)
        case Sum(branches):
            return Sum(tuple(Branch(subst_prefix(b.prefix, m), subst(b.cont, m), b.addr) for b in branches))
        case Par(items):
            return Par(tuple(subst(q, m) for q in items))
        case Call(n, args):
            return Call(n, tuple(m.get(a, a) for a in args))
        case Delim(u, body):
            inner = {k: v for k, v in m.items() if k != u}
            if not inner:
                return p
            fv = free_idents(body)
            inner = {k: v for k, v in inner.items() if k in fv}
            if not inner:
                return p
            if u in inner.values():
                u2 = fresh_like(u, set(inner.values()) | all_idents(body) | set(inner))
                body = subst(body, {u: u2})
                u = u2
            return Delim(u, subst(body, inner))
    raise TypeError(p)


def subst_system(s: RawSystem, m: dict) -> RawSystem:
    match s:
        case SysBox(a, p):
            return SysBox(a, subst(p, m))
        case SysSession(n, g):
            return SysSession(m.get(n, n), g)
        case SysPar(items):
            return SysPar(tuple(subst_system(q, m) for q in items))
        case SysDelim(u, body):
            inner = {k: v for k, v in m.items() if k != u}
            if u in inner.values():
                u2 = fresh_like(u, set(inner.values()) | all_idents(body))
                body = subst_system(body, {u: u2})
                u = u2
            return SysDelim(u, subst_system(body, inner))
    return s


def unfold_call(call: Call, defs: dict) -> Process:
    d = defs.get(call.name)
    if d is None:
        raise ProcessError(f"undefined process identifier {call.name}")
    if len(d.params) != len(call.args):
        raise ProcessError(f"{call.name} expects {len(d.params)} arguments, got {len(call.args)}")
    # Rename params apart first so that simultaneous substitution is safe.
    tmp = {p: Var(f"%p{i}") for i, p in enumerate(d.params)}
    body = subst(d.body, tmp)
    return subst(body, {tmp[p]: a for p, a in zip(d.params, call.args)})


# -- canonical keys -------------------------------------------------------------------


def contract_key(c: Contract):
    match c:
        case Nil():
            return ("0",)
        case IntSum(branches):
            return ("I",) + tuple((a.name, a.co, contract_key(k)) for a, k in branches)
        case ExtSum(branches):
            return ("X",) + tuple((a.name, a.co, contract_key(k)) for a, k in branches)
        case Ready(a, b):
            return ("R", a.name, a.co, contract_key(b))
        case Rec(b):
            return ("rec", contract_key(b))
        case RecVar(i):
            return ("v", i)
    raise TypeError(c)


def formula_key(f):
    return repr(f)


def _ident_key(u, anon):
    if u in anon:
        return ("?",)
    return (type(u).__name__, u.name)


def prefix_key(pi, anon=frozenset()):
    match pi:
        case Tau():
            return ("tau",)
        case Tell(to, t, c):
            return ("tell", to, _ident_key(t, anon), contract_key(c))
        case Fuse(t):
            return ("fuse", _ident_key(t, anon))
        case Do(t, a):
            return ("do", _ident_key(t, anon), a.name, a.co)
        case Ask(t, f):
            return ("ask", _ident_key(t, anon), formula_key(f))
    raise TypeError(pi)


def process_key(p: Process, anon=frozenset()):
    """Sort key; identifiers in `anon` are treated as interchangeable."""
    match p:
        case Latent(t, o, c):
            return (0, _ident_key(t, anon), o, contract_key(c))
        case Call(n, args):
            return (1, n, tuple(_ident_key(a, anon) for a in args))
        case Sum(branches):
            return (2, tuple((prefix_key(b.prefix, anon), process_key(b.cont, anon), b.addr) for b in branches))
        case Par(items):
            return (3, tuple(process_key(q, anon) for q in items))
        case Delim(u, body):
            return (4, type(u).__name__, process_key(body, anon - {u}))
    raise TypeError(p)


def idents_in_order(p: Process, out: list, bound=frozenset()):
    """Free identifiers in first-occurrence order."""
    def add(u):
        if u not in bound and u not in out:
            out.append(u)

    match p:
        case Latent(t, _, _):
            add(t)
        case Sum(branches):
            for b in branches:
                t = getattr(b.prefix, "target", None)
                if t is not None:
                    add(t)
                idents_in_order(b.cont, out, bound)
        case Par(items):
            for q in items:
                idents_in_order(q, out, bound)
        case Delim(u, body):
            idents_in_order(body, out, bound | {u})
        case Call(_, args):
            for a in args:
                add(a)
    return out


def prefix_guarded_calls(p: Process, guarded=False) -> bool:
    """True when every call in p sits under a prefix."""
    match p:
        case Call():
            return guarded
        case Sum(branches):
            return all(prefix_guarded_calls(b.cont, True) for b in branches)
        case Par(items):
            return all(prefix_guarded_calls(q, guarded) for q in items)
        case Delim(_, body):
            return prefix_guarded_calls(body, guarded)
    return True


def calls_in(p: Process) -> list[Call]:
    out = []

    def go(q):
        match q:
            case Call():
                out.append(q)
            case Sum(branches):
                for b in branches:
                    go(b.cont)
            case Par(items):
                for i in items:
                    go(i)
            case Delim(_, body):
                go(body)

    go(p)
    return out


def par(items) -> Process:
    """Flattening parallel composition that drops nil components."""
    flat = []
    for q in items:
        if isinstance(q, Par):
            flat.extend(q.items)
        elif q != NIL_P:
            flat.append(q)
    if not flat:
        return NIL_P
    if len(flat) == 1:
        return flat[0]
    return Par(tuple(flat))
