import random
from collections import deque
from importlib import resources

import pytest

from co2.abstraction import SHARP, CTX, abs_contract_steps, abs_process_steps, canonical, explore_abstract
from co2.contracts import E, NIL, Atom, IntSum, Nil, Ready, dual, is_compliant, unfold
from co2.frontend import parse_contract as pc, parse_process, parse_system, render
from co2.honesty import (
    NOT_SHARP_HONEST, SHARP_HONEST, UNSUPPORTED, admissible_sccs, check_sharp_honesty, is_finite_control,
    realizes, x_safe,
)
from co2.syntax import Call, Var, par, subst
from co2.system import culpability_map, ready_do, system_steps
from gen import perturb

C_STORE = pc("rec Z . addToCart.Z + creditCard.(~ok (+) ~no) + e")
C_BUYER = pc("~addToCart; ~creditCard; (ok + no)")


def load(name):
    return parse_system(resources.files("co2").joinpath(f"data/{name}.co2").read_text())


def verdict(name, participant):
    src = load(name)
    return check_sharp_honesty(participant, src.box_process(participant), src.definitions)


def call_state(name, defname):
    src = load(name)
    return canonical("A", Call(defname, (SHARP,))), src.definitions


# -- realizes ------------------------------------------------------------------------


def test_store_definition_realizes_store_contract():
    st, defs = call_state("store", "X")
    assert realizes(st, C_STORE, defs).holds
    assert ready_do(SHARP, Call("X", (SHARP,)), defs) == {Atom("addToCart"), Atom("creditCard")}


def test_buyer_definition_does_not_realize_buyer_contract():
    st, defs = call_state("store", "Y")
    r = realizes(st, C_BUYER, defs)
    assert not r.holds
    cert = r.certificate
    assert cert["contract"] == "ok + no"
    assert cert["ready_do"] == ["ok"]
    assert [p.split(" @")[0] for p in cert["path"]] == ["do s# ~addToCart", "do s# ~creditCard"]


def test_nil_realizes_success():
    assert realizes(canonical("A", []), E, {}).holds


def test_nil_does_not_realize_obligation():
    assert not realizes(canonical("A", []), pc("a;E"), {}).holds


def test_zero_is_never_realized():
    assert not realizes(canonical("A", []), NIL, {}).holds


def test_tau_before_do_realizes():
    defs = parse_system("X(x) := tau . do x a\nA[0]").definitions
    st = canonical("A", Call("X", (SHARP,)))
    assert realizes(st, pc("a;E"), defs).holds


def test_unfair_divergence_does_not_excuse():
    # A tau loop that is always enabled must be fired; do is reachable after it.
    defs = parse_system("L(x) := tau . L(x) + do x a\nA[0]").definitions
    st = canonical("A", Call("L", (SHARP,)))
    assert realizes(st, pc("a;E"), defs).holds


def test_divergence_only_path_fails():
    defs = parse_system("L(x) := tau . L(x)\nA[0]").definitions
    st = canonical("A", Call("L", (SHARP,)))
    assert not realizes(st, pc("a;E"), defs).holds


def test_admissible_sccs_on_tau_choice():
    # From the loop state, the do-free tau self-loop is a fair cycle.
    defs = parse_system("L(x) := tau . L(x) + do x a\nA[0]").definitions
    st = canonical("A", Call("L", (SHARP,)))
    graph = explore_abstract(st, defs)
    assert admissible_sccs(graph, SHARP)[st]


# -- step closure of realizability -------------------------------------------------


@pytest.mark.parametrize("defname,contract", [("X", C_STORE)])
def test_realizes_closed_under_steps(defname, contract):
    st, defs = call_state("store", defname)
    graph = explore_abstract(st, defs)
    good = {(st, unfold(contract))}
    todo = list(good)
    while todo:
        q, c = todo.pop()
        assert realizes(q, c, defs).holds
        for k in [k for lab, k in abs_contract_steps(c) if lab == CTX]:
            assert realizes(q, k, defs).holds
        for lab, q2 in graph[q]:
            if lab.is_do_on(SHARP):
                nexts = [(q2, unfold(k)) for la, k in abs_contract_steps(c) if getattr(la, "atom", None) == lab.atom]
            else:
                nexts = [(q2, c)]
            for pair in nexts:
                if pair not in good:
                    good.add(pair)
                    todo.append(pair)
    assert len(good) > 3


# -- x-safety and finite control ---------------------------------------------------


def test_store_is_x_safe():
    src = load("store")
    assert x_safe(src.box_process("A"), "A:0.0", src.definitions)


def test_xunsafe_store_is_not_x_safe():
    src = load("store_xunsafe")
    assert not x_safe(src.box_process("A"), "A:0.0", src.definitions)


def test_lonely_tell_is_x_safe():
    p = parse_process("(x) tell B {x} (a;E) . do x a", root="A")
    assert x_safe(p, "A:0", {})


def test_do_through_call_is_unsafe():
    src = parse_system("D(z) := do z a\n"
                       "A[(x) (tell A {x} (a;E) . do x a | fuse x . D(x))]")
    assert not x_safe(src.box_process("A"), "A:0.0", src.definitions)


def test_x_safe_bad_address():
    with pytest.raises(Exception):
        x_safe(parse_process("tau", root="A"), "A:7", {})


def test_finite_control_store():
    src = load("store")
    assert is_finite_control(src.box_process("A"), src.definitions)


def test_par_under_recursion_is_not_finite_control():
    src = parse_system("X() := tau . (X() | X())\nA[X()]")
    assert not is_finite_control(src.box_process("A"), src.definitions)


def test_mutual_recursion_without_par_is_finite_control():
    src = parse_system("X(x) := tau . Y(x)\nY(x) := do x a . X(x)\nA[(x) X(x)]")
    assert is_finite_control(src.box_process("A"), src.definitions)


def test_par_outside_recursion_is_finite_control():
    src = parse_system("X(x) := tau . (do x a | do x b)\nA[(x) X(x)]")
    assert is_finite_control(src.box_process("A"), src.definitions)


# -- verdicts ------------------------------------------------------------------------


def test_store_is_sharp_honest():
    v = verdict("store", "A")
    assert v.status == SHARP_HONEST and v.reasons == [] and v.exit_code == 0


def test_travel_is_sharp_honest():
    assert verdict("travel", "A").status == SHARP_HONEST


def test_ask_choice_is_not_sharp_honest():
    v = verdict("askstore", "A")
    assert v.status == NOT_SHARP_HONEST and v.exit_code == 1
    assert [r["kind"] for r in v.reasons] == ["RealizesFailure"]


def test_xunsafe_reason():
    v = verdict("store_xunsafe", "A")
    assert v.status == NOT_SHARP_HONEST
    assert {"kind": "XSafetyViolation", "tell": "A:0.0", "offending": ["A:1.0.0"]} in v.reasons


def test_dishonest_buyer_fails_at_ok_no():
    v = verdict("store", "B")
    assert v.status == NOT_SHARP_HONEST
    (r,) = v.reasons
    assert r["kind"] == "RealizesFailure" and r["counterexample"]["contract"] == "ok + no"


def test_voucher_has_a_concrete_culpable_run():
    # The tau branch of X abandons the session with V; if V has sent ~ok, A
    # stays culpable in a stuck system.
    src = load("voucher")
    start = src.initial()
    seen = {start}
    queue = deque([start])
    found = None
    while queue and found is None:
        st = queue.popleft()
        steps = system_steps(st, src.definitions)
        if not steps and ("s1", "A", True) in culpability_map(st):
            found = st
        for _, nxt in steps:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    assert found is not None
    assert render(found.session(found.sessions[1][0])) == "A says ready ok . E | V says E"


def test_own_latent_contract_reported():
    src = parse_system("A[(x) ({x} A says a;E | tell B {x} (a;E) . do x a)]")
    v = check_sharp_honesty("A", src.box_process("A"), src.definitions)
    assert v.status == NOT_SHARP_HONEST
    assert any(r["kind"] == "OwnLatentContract" for r in v.reasons)


def test_not_finite_control_unsupported():
    src = parse_system("X() := tau . (X() | X())\nA[X()]")
    v = check_sharp_honesty("A", src.box_process("A"), src.definitions)
    assert v.status == UNSUPPORTED and v.exit_code == 2
    assert v.reasons == [{"kind": "NotFiniteControl", "definition": "X"}]


def test_cap_exceeded_unsupported():
    src = load("travel")
    v = check_sharp_honesty("A", src.box_process("A"), src.definitions, cap=2)
    assert v.status == UNSUPPORTED


def test_verdict_json_shape():
    data = verdict("askstore", "A").to_json()
    assert set(data) == {"status", "reasons"}
    assert set(data["reasons"][0]) == {"kind", "tell", "contract", "counterexample"}


@pytest.mark.parametrize("name", ["store", "travel"])
def test_honesty_preserved_by_abstract_steps(name):
    src = load(name)
    st = canonical("A", src.box_process("A"))
    for _, nxt in abs_process_steps(st, src.definitions):
        v = check_sharp_honesty("A", par(nxt.threads), src.definitions)
        assert v.status == SHARP_HONEST, (str(nxt), v.reasons)


def test_tell_step_leaves_realizing_continuation():
    # After the tell, closing the told variable with the session leaves a
    # process that realizes the told contract.
    src = load("store")
    st = canonical("A", src.box_process("A"))
    (_, nxt), = [(lab, nxt) for lab, nxt in abs_process_steps(st, src.definitions) if lab.kind == "tell"]
    q = canonical("A", [subst(t, {Var("v0"): SHARP}) for t in nxt.threads])
    assert "s#" in str(q)
    assert realizes(q, C_STORE, src.definitions).holds


# -- falsification against concrete partners ----------------------------------------


def _partner_process(rng, c, depth=6):
    """A buyer process loosely following contract c; it may drop options."""
    c = unfold(c)
    if depth == 0 or isinstance(c, (Nil, Ready)):
        return "0"
    if isinstance(c, IntSum):
        branches = rng.sample(list(c.branches), rng.randint(1, len(c.branches)))
    else:
        branches = list(c.branches) if rng.random() < 0.8 else rng.sample(list(c.branches), 1)
    parts = []
    for a, k in branches:
        if a.is_success:
            continue
        parts.append(f"do y {a} . ({_partner_process(rng, k, depth - 1)})")
    return " + ".join(parts) or "0"


def _stuck_culpable(text, participant, cap=4000):
    src = parse_system(text)
    start = src.initial()
    seen = {start: 0}
    queue = deque([start])
    while queue:
        st = queue.popleft()
        steps = system_steps(st, src.definitions)
        if not steps and any(p == participant and c for _, p, c in culpability_map(st)):
            return st
        if seen[st] >= 20:
            continue
        for _, nxt in steps:
            if nxt not in seen and len(seen) < cap:
                seen[nxt] = seen[st] + 1
                queue.append(nxt)
    return None


def test_store_never_stuck_culpable_against_random_buyers():
    rng = random.Random(31)
    base = resources.files("co2").joinpath("data/store.co2").read_text()
    head = base[: base.index("A[")]
    tried = 0
    while tried < 25:
        d = perturb(rng, dual(C_STORE), rate=0.4)
        if not is_compliant(C_STORE, d).compliant:
            continue
        tried += 1
        body = _partner_process(rng, d)
        text = (head + "A[(x) (tell A {x} cA . X(x) | fuse x)] | "
                f"B[(y) tell A {{y}} ({render(d)}) . ({body})]")
        assert _stuck_culpable(text, "A") is None, text


def test_travel_never_stuck_culpable():
    text = resources.files("co2").joinpath("data/travel.co2").read_text()
    assert _stuck_culpable(text, "A") is None


def test_falsifier_detects_dishonest_buyer():
    text = resources.files("co2").joinpath("data/store.co2").read_text()
    assert _stuck_culpable(text, "B") is not None
