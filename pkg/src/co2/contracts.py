"""Unilateral and bilateral contracts: syntax, LTS, compliance and culpability.

Contracts are immutable terms.  Recursion variables use de Bruijn indices, so
alpha-equivalent terms compare equal; binder names survive only as rendering
hints.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple

DEFAULT_STATE_CAP = 100_000


class ContractError(ValueError):
    """A contract violates a well-formedness rule or an operation precondition."""


class StateCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class Atom:
    name: str
    co: bool = False

    def __post_init__(self):
        if self.name == "e" and self.co:
            raise ContractError("the success atom e is self-dual; ~e is not allowed")

    def dual(self) -> Atom:
        if self.name == "e":
            return self
        return Atom(self.name, not self.co)

    @property
    def is_success(self) -> bool:
        return self.name == "e"

    def __str__(self):
        return ("~" if self.co else "") + self.name


SUCCESS = Atom("e")


class _ReadyMarker:
    """The marker that ready sets use for a pending ready prefix."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "RDY"

    def __reduce__(self):
        return (_ReadyMarker, ())


RDY = _ReadyMarker()


class Contract:
    __slots__ = ()

    def __str__(self):
        from co2.frontend import render

        return render(self)


@dataclass(frozen=True)
class Nil(Contract):
    def __hash__(self):
        return hash("Nil")


@dataclass(frozen=True)
class IntSum(Contract):
    branches: tuple[tuple[Atom, Contract], ...]

    def __hash__(self):
        return _cached_hash(self, ("int", self.branches))


@dataclass(frozen=True)
class ExtSum(Contract):
    branches: tuple[tuple[Atom, Contract], ...]

    def __hash__(self):
        return _cached_hash(self, ("ext", self.branches))


@dataclass(frozen=True)
class Ready(Contract):
    atom: Atom
    body: Contract

    def __hash__(self):
        return _cached_hash(self, ("rdy", self.atom, self.body))


@dataclass(frozen=True)
class Rec(Contract):
    body: Contract
    hint: str = field(default="X", compare=False)

    def __hash__(self):
        return _cached_hash(self, ("rec", self.body))


@dataclass(frozen=True)
class RecVar(Contract):
    index: int
    hint: str = field(default="X", compare=False)

    def __hash__(self):
        return hash(("var", self.index))


_HASHES: dict[int, tuple[object, int]] = {}


def _cached_hash(obj, key) -> int:
    # Terms are immutable and deep; cache by identity (keeping obj alive).
    hit = _HASHES.get(id(obj))
    if hit is not None and hit[0] is obj:
        return hit[1]
    h = hash(key)
    if len(_HASHES) > 500_000:
        _HASHES.clear()
    _HASHES[id(obj)] = (obj, h)
    return h


NIL = Nil()
E = Rec(IntSum(((SUCCESS, RecVar(0, "X")),)), "X")
# The dual of E; the only other admissible continuation of e.
E_DUAL = Rec(ExtSum(((SUCCESS, RecVar(0, "X")),)), "X")
Sum = IntSum | ExtSum


def int_sum(branches: Iterable[tuple[Atom, Contract]]) -> Contract:
    branches = tuple(branches)
    _check_distinct(branches)
    return IntSum(branches) if branches else NIL


def ext_sum(branches: Iterable[tuple[Atom, Contract]]) -> Contract:
    branches = tuple(branches)
    _check_distinct(branches)
    return ExtSum(branches) if branches else NIL


def _check_distinct(branches):
    atoms = [a for a, _ in branches]
    if len(set(atoms)) != len(atoms):
        raise ContractError(f"branch atoms must be pairwise distinct: {', '.join(map(str, atoms))}")


def atoms_of(c: Contract) -> frozenset[Atom]:
    """Atoms of the branches of a head-normal sum."""
    if isinstance(c, (IntSum, ExtSum)):
        return frozenset(a for a, _ in c.branches)
    return frozenset()


# -- well-formedness ---------------------------------------------------------


def validate(c: Contract) -> Contract:
    """Check closedness, guardedness, distinct branch atoms and top-level-only ready."""
    _validate(c, depth=0, unguarded=frozenset(), top=True)
    return c


def _validate(c, depth, unguarded, top):
    if isinstance(c, Nil):
        return
    if isinstance(c, RecVar):
        if c.index >= depth:
            raise ContractError(f"free recursion variable {c.hint}")
        if depth - 1 - c.index in unguarded:
            raise ContractError(f"recursion on {c.hint} is not guarded by a sum branch")
        return
    if isinstance(c, Rec):
        if c in (E, E_DUAL):
            return
        _validate(c.body, depth + 1, unguarded | {depth}, top=False)
        return
    if isinstance(c, Ready):
        if not top:
            raise ContractError("ready may appear at the top level only")
        _validate(c.body, depth, unguarded, top=False)
        return
    if isinstance(c, (IntSum, ExtSum)):
        if not c.branches:
            raise ContractError("empty sums must be written 0")
        _check_distinct(c.branches)
        for a, cont in c.branches:
            if a.is_success and cont not in (E, E_DUAL):
                raise ContractError("the continuation of e must be E")
            _validate(cont, depth, frozenset(), top=False)
        return
    raise TypeError(f"not a contract: {c!r}")


def contains_nil(c: Contract) -> bool:
    if isinstance(c, Nil):
        return True
    if isinstance(c, (IntSum, ExtSum)):
        return any(contains_nil(k) for _, k in c.branches)
    if isinstance(c, (Rec, Ready)):
        return contains_nil(c.body)
    return False


def contains_ready(c: Contract) -> bool:
    if isinstance(c, Ready):
        return True
    if isinstance(c, (IntSum, ExtSum)):
        return any(contains_ready(k) for _, k in c.branches)
    if isinstance(c, Rec):
        return contains_ready(c.body)
    return False


# -- unfolding ----------------------------------------------------------------


@lru_cache(maxsize=None)
def _subst(c: Contract, repl: Contract, depth: int) -> Contract:
    # repl is closed, so no index shifting is needed.
    if isinstance(c, RecVar):
        return repl if c.index == depth else c
    if isinstance(c, Rec):
        return Rec(_subst(c.body, repl, depth + 1), c.hint)
    if isinstance(c, IntSum):
        return IntSum(tuple((a, _subst(k, repl, depth)) for a, k in c.branches))
    if isinstance(c, ExtSum):
        return ExtSum(tuple((a, _subst(k, repl, depth)) for a, k in c.branches))
    if isinstance(c, Ready):
        return Ready(c.atom, _subst(c.body, repl, depth))
    return c


@lru_cache(maxsize=None)
def unfold(c: Contract) -> Contract:
    """Head normal form: unfold recursion until a sum, ready or 0 is exposed."""
    seen = 0
    while isinstance(c, Rec):
        c = _subst(c.body, c, 0)
        seen += 1
        if seen > 10_000:
            raise ContractError("unguarded recursion")
    if isinstance(c, RecVar):
        raise ContractError("free recursion variable")
    if isinstance(c, (IntSum, ExtSum)) and not c.branches:
        return NIL
    return c


def ready_sets(c: Contract) -> frozenset[frozenset]:
    c = unfold(c)
    if isinstance(c, Nil):
        return frozenset({frozenset()})
    if isinstance(c, Ready):
        return frozenset({frozenset({RDY})})
    if isinstance(c, IntSum):
        return frozenset(frozenset({a}) for a, _ in c.branches)
    return frozenset({frozenset(a for a, _ in c.branches)})


def succeeds(c: Contract) -> bool:
    """True when the contract offers the success atom e right now.

    The continuation of e is not inspected: duals of E carry e with an
    external-sum continuation, and those must count as successful too.
    """
    c = unfold(c)
    if isinstance(c, Ready):
        return c.atom.is_success
    return SUCCESS in atoms_of(c)


def dual(c: Contract) -> Contract:
    """Swap internal and external sums and co every atom."""
    if contains_nil(c):
        raise ContractError("dual is defined on 0-free contracts only")
    if contains_ready(c):
        raise ContractError("dual is defined on ready-free contracts only")
    return _dual(c)


def _dual(c):
    if isinstance(c, IntSum):
        return ExtSum(tuple((a.dual(), _dual(k)) for a, k in c.branches))
    if isinstance(c, ExtSum):
        return IntSum(tuple((a.dual(), _dual(k)) for a, k in c.branches))
    if isinstance(c, Rec):
        return Rec(_dual(c.body), c.hint)
    return c


def unblocks(c: Contract, xs: Iterable[Atom]) -> bool:
    c = unfold(c)
    if isinstance(c, Nil):
        raise ContractError("unblocks is undefined on 0")
    allowed = set(xs) | {SUCCESS}
    if isinstance(c, Ready):
        return c.atom in allowed
    return any(y <= allowed for y in ready_sets(c))


# -- bilateral contracts ---------------------------------------------------------


@dataclass(frozen=True)
class Says:
    participant: str
    contract: Contract


@dataclass(frozen=True)
class BilateralContract:
    left: Says
    right: Says

    def __post_init__(self):
        if self.left.participant == self.right.participant:
            raise ContractError("the two parties of a bilateral contract must differ")
        if isinstance(unfold(self.left.contract), Ready) and isinstance(unfold(self.right.contract), Ready):
            raise ContractError("at most one ready prefix in a bilateral contract")

    @classmethod
    def of(cls, a: str, c: Contract, b: str, d: Contract) -> BilateralContract:
        return cls(Says(a, c), Says(b, d))

    @property
    def participants(self) -> tuple[str, str]:
        return self.left.participant, self.right.participant

    def contract_of(self, participant: str) -> Contract:
        if participant == self.left.participant:
            return self.left.contract
        if participant == self.right.participant:
            return self.right.contract
        raise ContractError(f"{participant} is not a party of this contract")

    def key(self):
        """State identity: participants plus head normal forms."""
        return (self.left.participant, unfold(self.left.contract),
                self.right.participant, unfold(self.right.contract))

    def __str__(self):
        from co2.frontend import render

        return render(self)


@dataclass(frozen=True, order=True)
class ContractLabel:
    participant: str
    atom: Atom

    def sort_key(self):
        return (self.participant, self.atom.name, self.atom.co)

    def __str__(self):
        return f"{self.participant} says {self.atom}"


def _moves(c: Contract, d: Contract) -> list[tuple[Atom, Contract, Contract]]:
    """Moves of the party holding c against a partner holding d."""
    d_raw = d
    c, d = unfold(c), unfold(d)
    out = []
    if isinstance(c, Ready):
        return [(c.atom, c.body, d_raw)]
    if isinstance(d, Ready):
        return []
    if isinstance(c, IntSum):
        for a, k in c.branches:
            want = a.dual()
            if isinstance(d, IntSum):
                if len(d.branches) == 1 and d.branches[0][0] == want:
                    out.append((a, k, Ready(want, d.branches[0][1])))
                else:
                    out.append((a, E, NIL))
            else:
                match = _branch(d, want)
                if match is not None:
                    out.append((a, k, Ready(want, match)))
                else:
                    out.append((a, E, NIL))
    elif isinstance(c, ExtSum):
        if isinstance(d, IntSum):
            return []
        offered = {b.dual() for b in atoms_of(d)}
        disjoint = not (atoms_of(c) & offered)
        for a, k in c.branches:
            match = _branch(d, a.dual())
            if match is not None:
                out.append((a, k, Ready(a.dual(), match)))
            elif disjoint:
                out.append((a, E, NIL))
    return out


def _branch(d, atom):
    if isinstance(d, (IntSum, ExtSum)):
        for a, k in d.branches:
            if a == atom:
                return k
    return None


def bilateral_steps(g: BilateralContract) -> list[tuple[ContractLabel, BilateralContract]]:
    """All transitions of g, sorted by label."""
    a, c = g.left.participant, g.left.contract
    b, d = g.right.participant, g.right.contract
    out = []
    for atom, c2, d2 in _moves(c, d):
        out.append((ContractLabel(a, atom), BilateralContract.of(a, c2, b, d2)))
    for atom, d2, c2 in _moves(d, c):
        out.append((ContractLabel(b, atom), BilateralContract.of(a, c2, b, d2)))
    out.sort(key=lambda t: t[0].sort_key())
    return out


def step(g: BilateralContract, label: ContractLabel) -> BilateralContract | None:
    for lab, g2 in bilateral_steps(g):
        if lab == label:
            return g2
    return None


def explore(g: BilateralContract, cap: int = DEFAULT_STATE_CAP):
    """Reachable state graph of g: (states by key, edges by key), BFS order."""
    states = {g.key(): g}
    edges: dict = {}
    queue = deque([g])
    while queue:
        cur = queue.popleft()
        succ = []
        for lab, nxt in bilateral_steps(cur):
            k = nxt.key()
            if k not in states:
                if len(states) >= cap:
                    raise StateCapExceeded(f"more than {cap} bilateral states")
                states[k] = nxt
                queue.append(nxt)
            succ.append((lab, k))
        edges[cur.key()] = succ
    return states, edges


class Compliance(NamedTuple):
    compliant: bool
    witness: tuple[ContractLabel, ...] | None

    def __bool__(self):
        return self.compliant


def _has_nil(g: BilateralContract) -> bool:
    return isinstance(unfold(g.left.contract), Nil) or isinstance(unfold(g.right.contract), Nil)


def is_compliant(c: Contract, d: Contract, cap: int = DEFAULT_STATE_CAP) -> Compliance:
    """Breadth-first search for a reachable state with a 0 component."""
    g = BilateralContract.of("A", c, "B", d)
    parent = {g.key(): None}
    queue = deque([g])
    while queue:
        cur = queue.popleft()
        if _has_nil(cur):
            trace = []
            k = cur.key()
            while parent[k] is not None:
                k, lab = parent[k]
                trace.append(lab)
            return Compliance(False, tuple(reversed(trace)))
        for lab, nxt in bilateral_steps(cur):
            k = nxt.key()
            if k not in parent:
                if len(parent) >= cap:
                    raise StateCapExceeded(f"more than {cap} bilateral states")
                parent[k] = (cur.key(), lab)
                queue.append(nxt)
    return Compliance(True, None)


def _ready_condition(c: Contract, d: Contract) -> bool:
    for x in ready_sets(c):
        cx = {a.dual() for a in x if a is not RDY}
        for y in ready_sets(d):
            if cx & y:
                continue
            if RDY in (x | y) - (x & y):
                continue
            return False
    return True


def is_compliant_gfp(c: Contract, d: Contract, cap: int = DEFAULT_STATE_CAP) -> bool:
    """Compliance as the largest relation closed under the ready-set condition."""
    g = BilateralContract.of("A", c, "B", d)
    states, edges = explore(g, cap)
    preds: dict = {k: [] for k in states}
    for k, succ in edges.items():
        for _, k2 in succ:
            preds[k2].append(k)
    alive = set(states)
    work = []
    for k, st in states.items():
        if not _ready_condition(st.left.contract, st.right.contract):
            alive.discard(k)
            work.append(k)
    while work:
        k = work.pop()
        for p in preds[k]:
            if p in alive:
                alive.discard(p)
                work.append(p)
    return g.key() in alive


def is_culpable(g: BilateralContract, participant: str) -> bool:
    c = unfold(g.contract_of(participant))
    if isinstance(c, Nil):
        return True
    mine = [lab for lab, _ in bilateral_steps(g) if lab.participant == participant]
    if any(lab.atom.is_success for lab in mine):
        return False
    return bool(mine)


def exculpate(g: BilateralContract, participant: str) -> list[ContractLabel]:
    """Shortest participant-solo trace (at most two steps) ending non-culpable."""
    if contains_nil(g.contract_of(participant)):
        raise ContractError(f"the contract of {participant} is not 0-free")
    frontier = [((), g)]
    for _ in range(3):
        done = [t for t, h in frontier if not is_culpable(h, participant)]
        if done:
            return list(min(done, key=lambda t: [lab.sort_key() for lab in t]))
        frontier = [
            (t + (lab,), h2)
            for t, h in frontier
            for lab, h2 in bilateral_steps(h)
            if lab.participant == participant
        ]
    raise RuntimeError(f"no exculpating trace of length <= 2 for {participant} in {g}")
