"""Seeded random generators for contracts and bilateral states used across the tests."""
from __future__ import annotations

import random

from co2.contracts import (
    E, NIL, SUCCESS, Atom, BilateralContract, ExtSum, IntSum, Rec, RecVar, dual, explore, is_compliant, validate,
)

NAMES = ("a", "b", "c", "d")


class _Budget:
    def __init__(self, sums, recs):
        self.sums = sums
        self.recs = recs


def random_contract(rng: random.Random, max_sums: int = 5, max_recs: int = 2, zero: bool = False,
                    success: bool = True) -> object:
    """A closed, guarded contract with at most `max_sums` sum nodes and `max_recs` binders.

    Recursion bodies are always sums, so every variable is guarded.
    """
    budget = _Budget(rng.randint(1, max_sums), max_recs)
    c = _gen(rng, budget, 0, zero, success, top=True)
    return validate(c)


def _leaf(rng, depth, zero):
    opts = ["E"]
    if depth:
        opts += ["var", "var"]
    if zero:
        opts.append("0")
    k = rng.choice(opts)
    if k == "E":
        return E
    if k == "0":
        return NIL
    i = rng.randrange(depth)
    return RecVar(i, f"X{depth - i}")


def _gen(rng, budget, depth, zero, success, top=False):
    if budget.sums <= 0 or (not top and rng.random() < 0.25):
        return _leaf(rng, depth, zero)
    if budget.recs > 0 and rng.random() < 0.3:
        budget.recs -= 1
        return Rec(_sum(rng, budget, depth + 1, zero, success), f"X{depth + 1}")
    return _sum(rng, budget, depth, zero, success)


def _sum(rng, budget, depth, zero, success):
    budget.sums -= 1
    n = rng.randint(1, 3)
    names = rng.sample(NAMES, n)
    atoms = [Atom(x, rng.random() < 0.5) for x in names]
    if success and rng.random() < 0.15:
        atoms[0] = SUCCESS
    branches = tuple((a, E if a == SUCCESS else _gen(rng, budget, depth, zero, success)) for a in atoms)
    return IntSum(branches) if rng.random() < 0.5 else ExtSum(branches)


def random_pair(rng: random.Random, **kw):
    return random_contract(rng, **kw), random_contract(rng, **kw)


def compliant_pairs(rng: random.Random, n: int):
    """n compliant pairs: duals, random pairs that happen to comply, and mixtures."""
    out = []
    while len(out) < n:
        c = random_contract(rng, success=False)
        mode = rng.random()
        if mode < 0.5:
            d = dual(c)
        else:
            d = random_contract(rng, success=False)
        if is_compliant(c, d):
            out.append((c, d))
    return out


def reachable_states(g: BilateralContract, cap: int = 10_000):
    states, _ = explore(g, cap)
    return list(states.values())


def perturb(rng: random.Random, c, rate: float = 0.3):
    """Randomly drop branches, flip sum kinds or cut continuations to E."""
    def go(k):
        match k:
            case IntSum(branches) | ExtSum(branches):
                bs = [(a, go(x)) for a, x in branches]
                if len(bs) > 1 and rng.random() < rate:
                    bs.pop(rng.randrange(len(bs)))
                kind = type(k)
                if rng.random() < rate / 2:
                    kind = ExtSum if kind is IntSum else IntSum
                return kind(tuple(bs))
            case Rec(body, hint):
                return Rec(go(body), hint)
        if rng.random() < rate / 3 and not isinstance(k, RecVar):
            return E
        return k

    return validate(go(c))


def mixed_pairs(rng: random.Random, n: int):
    """Random pairs, half of them built from a dual so that compliance is common."""
    out = []
    for i in range(n):
        if i % 2 == 0:
            out.append(random_pair(rng, zero=True))
        else:
            c = random_contract(rng)
            out.append((c, perturb(rng, dual(c))))
    return out
