import itertools
import random

from conftest import demo_text

from mlg import syntax as S
from mlg import typecheck as T
from mlg.engine import TERMINATED, initial_configuration, run
from mlg.explorer import canonicalize, explore, find_deadlocks
from mlg.prelude import load_program
from mlg.typecheck import check_program

from termgen import gen_proc, proc_program


def load(src, prelude=False):
    program = load_program(src, include_prelude=prelude)
    result = check_program(program)
    assert result.ok, [d.render() for d in result.diagnostics]
    return program, result.obj_annotations


def canon_of(src, prelude=False):
    program, ann = load(src, prelude)
    return canonicalize(initial_configuration(program, ann))


def canon_of_term(term: S.ProcTerm):
    program = proc_program(term)
    return canonicalize(initial_configuration(program))


def test_canonical_state_drops_nil():
    assert canon_of("system = 0\n").soup == ()
    base = "chan c : nat\nsystem = c!(1) . 0\n"
    with_nil = "chan c : nat\nsystem = c!(1) . 0 | 0\n"
    assert canon_of(base) == canon_of(with_nil)


def test_par_is_commutative_and_associative():
    a = "chan c : nat\nchan d : nat\n"
    left = a + "system = (c!(1) . 0 | d!(2) . 0) | c?(x) . 0\n"
    right = a + "system = c?(x) . 0 | (d!(2) . 0 | c!(1) . 0)\n"
    assert canon_of(left) == canon_of(right)


def test_sum_is_commutative():
    a = "chan c : nat\nchan d : nat\n"
    left = a + "system = c!(1) . 0 + d!(2) . 0\n"
    right = a + "system = d!(2) . 0 + c!(1) . 0\n"
    assert canon_of(left) == canon_of(right)


def test_restriction_is_alpha_invariant():
    left = "system = new c : nat in c!(1) . 0 | c?(x) . 0\n"
    right = "system = new other : nat in other!(1) . 0 | other?(x) . 0\n"
    assert canon_of(left) == canon_of(right)


def test_distinct_restricted_channels_distinguished():
    one = "system = new a : nat in (a!(1) . 0 | a?(x) . 0)\n"
    two = (
        "system = new a : nat in new b : nat in"
        " (a!(1) . 0 | b?(x) . 0)\n"
    )
    assert canon_of(one) != canon_of(two)


def test_randomized_par_commutativity():
    rng = random.Random(11)
    for _ in range(50):
        p = gen_proc(rng, depth=4)
        q = gen_proc(rng, depth=4)
        assert (
            canon_of_term(S.Par(p, q)) == canon_of_term(S.Par(q, p))
        )
        assert (
            canon_of_term(S.Par(p, S.Nil())) == canon_of_term(p)
        )


def test_explore_deadlocked_receiver():
    program, ann = load(demo_text("deadlock_recv.mlg"))
    graph = explore(program, annotations=ann)
    assert len(graph.states) == 1
    assert graph.deadlocks == {graph.initial}
    assert graph.terminals == set()
    witnesses = find_deadlocks(graph)
    assert witnesses == [(graph.initial, [])]


def test_explore_filesystem_no_deadlocks():
    program, ann = load(demo_text("filesystem.mlg"), prelude=True)
    graph = explore(program, annotations=ann)
    assert graph.deadlocks == set()
    assert len(graph.terminals) == 1
    assert not graph.frontier
    # write(10) precedes reserve on every path: no edge out of a state
    # whose incoming history lacks the write can be a reserve comm
    reserve_src = {src for src, lab, _ in graph.edges if lab == "comm(reserve)"}
    write_dst = {dst for _, lab, dst in graph.edges if lab == "comm(write)"}
    reachable_before_write = set()
    stack = [graph.initial]
    blocked = write_dst
    while stack:
        state = stack.pop()
        if state in reachable_before_write:
            continue
        reachable_before_write.add(state)
        for src, lab, dst in graph.edges:
            if src == state and lab != "comm(write)":
                stack.append(dst)
    assert not (reserve_src & reachable_before_write)


def test_sum_branches_exclusive():
    program, ann = load(
        "chan c : nat\nchan d : nat\n"
        "system = (c!(1) . 0 + d!(2) . 0) | c?(x) . 0 | d?(y) . 0\n"
    )
    graph = explore(program, annotations=ann)
    # each resolution strands the other branch's receiver, a stuck soup
    assert graph.terminals == set()
    assert len(graph.deadlocks) == 2
    for state in graph.deadlocks:
        assert len(state.soup) == 1


def test_self_sum_cannot_communicate():
    program, ann = load(
        "chan c : nat\n"
        "system = c!(0) . 0 + c?(x) . 0\n"
    )
    graph = explore(program, annotations=ann)
    assert len(graph.states) == 1
    assert graph.deadlocks == {graph.initial}


def test_find_deadlocks_shortest_witness():
    program, ann = load(
        "chan c : nat\nchan d : nat\n"
        "system = c!(1) . d?(y) . 0 | c?(x) . 0\n"
    )
    graph = explore(program, annotations=ann)
    witnesses = find_deadlocks(graph)
    assert len(witnesses) == 1
    _, path = witnesses[0]
    assert path == ["comm(c)"]


def test_race_demo_state_count_and_no_deadlock():
    program, ann = load(demo_text("race.mlg"), prelude=True)
    graph = explore(program, annotations=ann)
    assert graph.deadlocks == set()
    assert len(graph.states) <= 1000
    assert len(graph.terminals) >= 1


def test_repl_budget_marks_frontier():
    program, ann = load(
        "chan c : nat\n"
        "system = !c?(x) . 0 | !c!(1) . 0\n"
    )
    graph = explore(program, repl_budget=1, annotations=ann)
    assert graph.budget_cut
    assert graph.frontier


def test_explore_depth_cut_marks_frontier():
    program, ann = load(
        "chan c : nat\n"
        "system = c!(1) . c!(2) . c!(3) . 0 | c?(x) . c?(y) . c?(w) . 0\n"
    )
    graph = explore(program, max_depth=1, annotations=ann)
    assert graph.frontier


def test_engine_runs_land_in_explored_states():
    program, ann = load(demo_text("filesystem.mlg"), prelude=True)
    graph = explore(program, annotations=ann)
    for seed in range(5):
        config, verdict, _ = run(program, seed=seed, annotations=ann)
        assert verdict == TERMINATED
        assert canonicalize(config) in graph.states


def test_to_dot_mentions_deadlocks():
    program, ann = load(demo_text("deadlock_recv.mlg"))
    graph = explore(program, annotations=ann)
    dot = graph.to_dot()
    assert dot.startswith("digraph states {")
    assert "deadlock" in dot


# ---------------------------------------------------------------------------
# Small brute-force cross-check (a miniature of the acceptance oracle)


def _mini_oracle_deadlock(program) -> bool:
    """Uncanonicalized search for a reachable stuck non-empty soup."""
    from mlg.engine import enabled_redexes, initial_configuration, step

    start = initial_configuration(program)
    seen = set()
    stack = [start]
    found = False
    while stack:
        config = stack.pop()
        key = (
            tuple(sorted(
                (m.pid, id(m.term)) for m in config.soup
            )),
            config.step_count,
        )
        redexes = enabled_redexes(config)
        if not redexes:
            if config.soup:
                found = True
            continue
        for redex in redexes:
            stack.append(step(config, redex))
    return found


def test_explorer_agrees_with_mini_oracle():
    sources = [
        "chan c1 : nat\nchan c2 : nat\nsystem = c1!(0) . 0 | c1?(x) . 0\n",
        "chan c1 : nat\nchan c2 : nat\nsystem = c1!(0) . 0 | c2?(x) . 0\n",
        "chan c1 : nat\nchan c2 : nat\n"
        "system = c1!(0) . c2?(y) . 0 | c1?(x) . 0 | c2!(1) . 0\n",
        "chan c1 : nat\nchan c2 : nat\n"
        "system = c1!(0) . 0 + c1?(x) . 0\n",
    ]
    for src in sources:
        program, ann = load(src)
        graph = explore(program, annotations=ann)
        assert bool(graph.deadlocks) == _mini_oracle_deadlock(program), src
