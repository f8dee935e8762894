"""Trace-producing runs of a system under a scheduling policy."""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from co2.system import System, SystemLabel, culpability_map, system_steps

POLICIES = ("fixed-script", "seeded-random", "exhaustive-bounded", "participant-solo")


class ScriptError(ValueError):
    pass


@dataclass
class SimTrace:
    states: list[System]
    labels: list[SystemLabel] = field(default_factory=list)

    @property
    def culpability(self) -> list[tuple[int, str, str, bool]]:
        return [(i, s, p, c) for i, st in enumerate(self.states) for s, p, c in culpability_map(st)]

    @property
    def final(self) -> System:
        return self.states[-1]

    def to_json(self) -> dict:
        return {
            "states": [str(s) for s in self.states],
            "labels": [lab.to_json() for lab in self.labels],
            "culpability": [
                {"step": i, "session": s, "participant": p, "culpable": c} for i, s, p, c in self.culpability
            ],
        }


def label_matches(entry: str, lab: SystemLabel) -> bool:
    """A script entry names a step by address, `participant@address`, or its rendering."""
    entry = entry.strip()
    if entry == lab.address:
        return True
    if entry == f"{lab.participant}@{lab.address}":
        return True
    return entry == str(lab).rsplit(" @", 1)[0]


def simulate(
    sys: System,
    defs: dict,
    policy: str = "seeded-random",
    max_steps: int = 100,
    seed: int = 0,
    script: list[str] | None = None,
    participant: str | None = None,
    frontier: int = 10_000,
) -> SimTrace:
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    if policy == "fixed-script":
        return _scripted(sys, defs, script or [], max_steps)
    if policy == "seeded-random":
        return _random(sys, defs, max_steps, random.Random(seed), None)
    if policy == "participant-solo":
        if participant is None:
            raise ValueError("participant-solo needs a participant")
        return _random(sys, defs, max_steps, random.Random(seed), participant)
    if policy == "exhaustive-bounded":
        return _exhaustive(sys, defs, max_steps, frontier)
    raise ValueError(f"unknown policy {policy!r}; expected one of {', '.join(POLICIES)}")


def _scripted(sys, defs, script, max_steps):
    trace = SimTrace([sys])
    for n, entry in enumerate(script[:max_steps]):
        steps = system_steps(trace.final, defs)
        for lab, nxt in steps:
            if label_matches(entry, lab):
                trace.labels.append(lab)
                trace.states.append(nxt)
                break
        else:
            enabled = ", ".join(f"{lab.participant}@{lab.address}" for lab, _ in steps) or "none"
            raise ScriptError(f"script step {n + 1} ({entry!r}) is not enabled; enabled: {enabled}")
    return trace


def _random(sys, defs, max_steps, rng, solo):
    """Random choice; for solo runs the longest-waiting prefix goes first.

    Serving the prefix address that has been enabled for longest keeps the run
    fair: nothing persistently enabled is starved.
    """
    trace = SimTrace([sys])
    waiting: dict = {}
    for _ in range(max_steps):
        steps = system_steps(trace.final, defs)
        if solo is not None:
            steps = [(lab, nxt) for lab, nxt in steps if lab.participant == solo]
        if not steps:
            break
        keys = {(lab.participant, lab.address) for lab, _ in steps}
        waiting = {k: waiting.get(k, 0) + 1 for k in keys}
        if solo is not None:
            oldest = max(waiting.values())
            pool = [s for s in steps if waiting[(s[0].participant, s[0].address)] == oldest]
        else:
            pool = steps
        lab, nxt = pool[rng.randrange(len(pool))]
        waiting.pop((lab.participant, lab.address), None)
        trace.labels.append(lab)
        trace.states.append(nxt)
    return trace


def _exhaustive(sys, defs, max_steps, frontier):
    """Breadth-first over all runs up to max_steps.

    Returns a shortest run to a stuck state if one exists within the bound,
    otherwise the first longest run found.
    """
    parent = {sys: None}
    queue = deque([(sys, 0)])
    last = sys
    while queue:
        st, depth = queue.popleft()
        steps = system_steps(st, defs)
        last = st
        if not steps:
            break
        if depth >= max_steps:
            continue
        for lab, nxt in steps:
            if nxt not in parent:
                if len(parent) >= frontier:
                    queue.clear()
                    break
                parent[nxt] = (st, lab)
                queue.append((nxt, depth + 1))
    states, labels = [last], []
    while parent[states[-1]] is not None:
        prev, lab = parent[states[-1]]
        labels.append(lab)
        states.append(prev)
    return SimTrace(states[::-1], labels[::-1])
