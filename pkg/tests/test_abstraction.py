import random
from importlib import resources

import pytest

from co2.abstraction import (
    CTX, ZERO, AbstractState, Act, abs_contract_steps, abs_process_steps, abstract_graph_json, canonical,
    explore_abstract, open_top,
)
from co2.contracts import E, NIL, Atom, BilateralContract, Ready, bilateral_steps, unfold
from co2.frontend import parse_contract as pc, parse_process, parse_system
from co2.simulate import simulate
from co2.syntax import Delim
from gen import compliant_pairs, reachable_states
from projection import ctx_absorption_failures, reachable_contracts, trace_projects

C_STORE = pc("rec Z . addToCart.Z + creditCard.(~ok (+) ~no) + e")
SAMPLES = ["store", "voucher", "travel", "askstore", "store_xunsafe"]


def load(name):
    return parse_system(resources.files("co2").joinpath(f"data/{name}.co2").read_text())


def sample_contracts():
    out = {}
    for name in SAMPLES:
        for k, c in load(name).contracts.items():
            out[f"{name}.{k}"] = c
    return out


def act_targets(c, atom):
    return {k for lab, k in abs_contract_steps(c) if lab == Act(atom)}


# -- contracts -----------------------------------------------------------------------


def test_store_contract_credit_card():
    assert pc("~ok (+) ~no") in act_targets(C_STORE, Atom("creditCard"))


def test_store_contract_add_to_cart_loops():
    assert C_STORE in act_targets(C_STORE, Atom("addToCart"))


def test_act_also_reaches_success():
    assert E in act_targets(C_STORE, Atom("creditCard"))


def test_nil_only_ctx():
    assert abs_contract_steps(NIL) == [(CTX, NIL)]


def test_zero_step_on_sums():
    assert (ZERO, NIL) in abs_contract_steps(pc("a;E (+) b;E"))


def test_ctx_moves():
    ext = pc("a.E + b.E")
    readies = {k for lab, k in abs_contract_steps(ext) if lab == CTX}
    assert readies == {ext, Ready(Atom("a"), E), Ready(Atom("b"), E)}
    single = pc("a;E")
    assert Ready(Atom("a"), E) in {k for lab, k in abs_contract_steps(single) if lab == CTX}
    multi = pc("a;E (+) b;E")
    assert {k for lab, k in abs_contract_steps(multi) if lab == CTX} == {multi}


def test_ready_fires_its_atom():
    assert abs_contract_steps(Ready(Atom("a"), E)) == [(Act(Atom("a")), E), (CTX, Ready(Atom("a"), E))]


@pytest.mark.parametrize("name", sorted(sample_contracts()))
def test_ctx_absorption(name):
    assert ctx_absorption_failures(sample_contracts()[name]) == []


def test_ctx_absorption_visits_ready_states():
    assert any(isinstance(k, Ready) for k in reachable_contracts(C_STORE))


def test_contract_steps_are_abstracted():
    rng = random.Random(21)
    for c, d in compliant_pairs(rng, 100):
        for g in reachable_states(BilateralContract.of("A", c, "B", d)):
            for lab, g2 in bilateral_steps(g):
                me, other = lab.participant, "B" if lab.participant == "A" else "A"
                mine = {unfold(k) for la, k in abs_contract_steps(g.contract_of(me)) if la == Act(lab.atom)}
                assert unfold(g2.contract_of(me)) in mine
                theirs = {unfold(k) for la, k in abs_contract_steps(g.contract_of(other)) if la in (CTX, ZERO)}
                assert unfold(g2.contract_of(other)) in theirs


# -- processes -----------------------------------------------------------------------


def test_open_top_strips_delimitations():
    threads = open_top(parse_process("(x) (do x a | tau)", root="A"))
    assert len(threads) == 2
    assert not any(isinstance(t, Delim) for t in threads)


def test_open_top_keeps_guarded_delimitation():
    p = parse_process("tau . ((x) do x a)", root="A")
    assert open_top(p) == [p]


def test_canonical_renames_in_order():
    st = canonical("A", parse_process("(x) (y) (do y a | fuse x | fuse y)", root="A"))
    assert str(st) == "do v0 a | fuse v1 | fuse v0"
    names = canonical("A", parse_process("do s a | do t b", root="A", sessions={"s", "t"}))
    assert str(names) == "do n0 a | do n1 b"


def test_canonical_is_invariant_under_renaming():
    p = parse_process("(x) (tell B {x} (a;E) . do x a | fuse x)", root="A")
    q = parse_process("(z) (fuse z | tell B {z} (a;E) . do z a)", root="A")
    # Equal up to prefix addresses, which follow the source layout.
    assert str(canonical("A", p)) == str(canonical("A", q))


def test_fuse_instantiates_variable():
    st = canonical("A", parse_process("(x) fuse x . do x a", root="A"))
    steps = [(lab, nxt) for lab, nxt in abs_process_steps(st, {}) if lab.kind == "fuse"]
    assert len(steps) == 1
    assert str(steps[0][1]) == "do n0 a"


def test_do_on_variable_not_enabled():
    st = canonical("A", parse_process("(x) do x a", root="A"))
    assert [lab.kind for lab, _ in abs_process_steps(st, {})] == ["ctx", "ctx"]


def test_ctx_self_loop_always_present():
    for name in SAMPLES:
        src = load(name)
        for p in src.initial().participants():
            st = canonical(p, src.box_process(p))
            assert any(lab.kind == "ctx" and nxt == st for lab, nxt in abs_process_steps(st, src.definitions))


def test_tell_drops_latent():
    st = canonical("A", parse_process("(x) tell B {x} (a;E) . tau", root="A"))
    (lab, nxt), = [(lab, nxt) for lab, nxt in abs_process_steps(st, {}) if lab.kind == "tell"]
    assert str(nxt) == "tau"


@pytest.mark.parametrize("name", SAMPLES)
def test_abstract_spaces_are_finite(name):
    src = load(name)
    for p in src.initial().participants():
        graph = explore_abstract(canonical(p, src.box_process(p)), src.definitions, cap=5000)
        assert 0 < len(graph) < 5000


def test_graph_json_shape():
    src = load("store")
    graph = explore_abstract(canonical("A", src.box_process("A")), src.definitions)
    data = abstract_graph_json(graph)
    assert len(data["nodes"]) == len(graph)
    assert all({"from", "to", "label"} <= set(e) for e in data["edges"])


def test_store_runs_project_onto_store_participant():
    src = load("store")
    for seed in range(20):
        trace = simulate(src.initial(), src.definitions, "seeded-random", 25, seed=seed)
        assert trace_projects(trace, "A", src.definitions)
        assert trace_projects(trace, "B", src.definitions)


def test_empty_abstract_state_renders_nil():
    assert str(AbstractState("A", ())) == "0"
