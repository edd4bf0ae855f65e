#  Copyright 2026 DALD Developers
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

from collections import Counter

import numpy as np
import pytest
from scipy import stats

from dald.dald_errors import (
    ConfigError,
    CyclicPattern,
    DiagonalMismatch,
    InvalidNetwork,
    MultipleRoots,
)
from dald.model import VariableBlock, build_problem, quadratic_term
from dald.coordination import (
    HierarchicalMatrix,
    HierarchicalNetwork,
    SweepPlan,
    es_sweep_plan,
    load_matrix,
    load_network,
    matrix_from_network,
    network_from_matrix,
    save_matrix,
    save_network,
    select_blocks,
    sequential_chain,
    validate_stage_coupling,
)

from conftest import random_dag_edges

CHAIN_MATRIX = [[3, 1, 1, 1], [0, 2, 1, 1], [0, 0, 1, 1], [0, 0, 0, 0]]


# -----------------------------------------------------------------------------
# hierarchical networks and matrices
# -----------------------------------------------------------------------------


def test_chain_matrix():
    assert matrix_from_network(sequential_chain(4)).tolist() == CHAIN_MATRIX


def test_chain_matrix_to_network():
    net = network_from_matrix(HierarchicalMatrix(np.array(CHAIN_MATRIX)))
    assert net.edges == sequential_chain(4).edges
    assert net.root == 4


def test_single_node():
    assert matrix_from_network(sequential_chain(1)).tolist() == [[0]]


def test_parallel_leaves():
    net = HierarchicalNetwork.from_edges(3, [(1, 3), (2, 3)])
    a = matrix_from_network(net).entries
    assert a[0, 2] == a[1, 2] == 1
    assert a[0, 0] == a[1, 1] == 1
    assert a[2, 2] == 0
    assert net.children(3) == {1, 2}
    assert net.level_of == {1: 0, 2: 0, 3: 1}


def test_diagonal_mismatch():
    with pytest.raises(DiagonalMismatch):
        network_from_matrix(np.array([[2, 1], [0, 0]]))


def test_cyclic_pattern():
    with pytest.raises(CyclicPattern):
        HierarchicalNetwork.from_edges(3, [(1, 2), (2, 3), (3, 1)])


def test_multiple_roots():
    with pytest.raises(MultipleRoots):
        HierarchicalNetwork.from_edges(3, [(1, 2)])


def test_off_diagonal_values():
    with pytest.raises(InvalidNetwork):
        network_from_matrix(np.array([[1, 2], [0, 0]]))


def test_random_dag_round_trips(rng):
    for _ in range(100):
        n = int(rng.integers(1, 9))
        net = HierarchicalNetwork.from_edges(n, random_dag_edges(rng, n))
        matrix = matrix_from_network(net)

        # diagonal equals out-degree, off-diagonal is 0/1
        off = matrix.off_diagonal()
        assert set(np.unique(off)) <= {0, 1}
        np.testing.assert_array_equal(np.diag(matrix.entries), off.sum(axis=1))

        again = network_from_matrix(matrix)
        assert again.edges == net.edges
        assert matrix_from_network(again).tolist() == matrix.tolist()


def test_matrix_file_round_trip(tmp_path, samples_dir):
    matrix = load_matrix(samples_dir / "chain-matrix.json")
    assert matrix.tolist() == CHAIN_MATRIX

    save_matrix(matrix, tmp_path / "m.json")
    assert load_matrix(tmp_path / "m.json").tolist() == CHAIN_MATRIX


def test_network_file_round_trip(tmp_path):
    net = HierarchicalNetwork.from_edges(3, [(1, 3), (2, 3)])
    save_network(net, tmp_path / "net.json")
    assert load_network(tmp_path / "net.json").edges == net.edges


def test_malformed_matrix_file(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("[[1, 0], ")
    with pytest.raises(ConfigError):
        load_matrix(path)

    path.write_text('{"a": 1}')
    with pytest.raises(ConfigError):
        load_matrix(path)


# -----------------------------------------------------------------------------
# sweep plans
# -----------------------------------------------------------------------------


def test_es_leveling_of_chain():
    assert es_sweep_plan(sequential_chain(4)).stages == ((1,), (2,), (3,), (4,))


def test_es_leveling_of_parallel_leaves():
    plan = es_sweep_plan(HierarchicalNetwork.from_edges(3, [(1, 3), (2, 3)]))
    assert plan.stages == ((1, 2), (3,))
    assert plan.predecessors[3] == {1, 2}


def test_es_leveling_single_node():
    assert es_sweep_plan(sequential_chain(1)).stages == ((1,),)


def test_topological_order_respected(rng):
    for _ in range(50):
        n = int(rng.integers(2, 9))
        net = HierarchicalNetwork.from_edges(n, random_dag_edges(rng, n))
        stage_of = es_sweep_plan(net).stage_of
        assert all(stage_of[_c] < stage_of[_p] for _c, _p in net.edges)


def test_plan_must_cover_each_node_once():
    with pytest.raises(InvalidNetwork):
        SweepPlan(stages=((1, 2), (2, 3)))


def test_full_cycle_returns_stages(rng):
    plan = es_sweep_plan(sequential_chain(3))
    for sweep in range(1, 5):
        assert select_blocks(plan, sweep, rng) == list(plan.stages)


def test_partial_cycle_uniform_selection(rng):
    plan = es_sweep_plan(sequential_chain(4), mode="partial-cycle", quota=1)

    sweeps = 40_000
    counts = Counter(
        _n for _s in range(sweeps) for _stage in select_blocks(plan, _s, rng) for _n in _stage
    )
    for block in range(1, 5):
        assert abs(counts[block] - sweeps / 4) <= 0.05 * sweeps / 4

    small = Counter(
        _n for _s in range(4000) for _stage in select_blocks(plan, _s, rng) for _n in _stage
    )
    assert stats.chisquare([small[_b] for _b in range(1, 5)]).pvalue > 1e-3


def test_partial_cycle_keeps_stage_order(rng):
    plan = es_sweep_plan(sequential_chain(5), mode="partial-cycle", quota=3)
    for sweep in range(20):
        chosen = [_n for _stage in select_blocks(plan, sweep, rng) for _n in _stage]
        assert len(chosen) == 3
        assert chosen == sorted(chosen)


def test_partial_cycle_greedy_selection(rng):
    plan = es_sweep_plan(sequential_chain(4), mode="partial-cycle", selection_policy="greedy", quota=2)
    stages = select_blocks(plan, 1, rng, last_dual={1: 0.1, 2: 5.0, 3: 0.2, 4: 5.0})
    assert stages == [(2,), (4,)]

    # blocks never solved come first
    stages = select_blocks(plan, 1, rng, last_dual={1: 0.1, 2: 5.0})
    assert stages == [(3,), (4,)]


def test_selective_repetitive_repeat_list(rng):
    plan = es_sweep_plan(sequential_chain(4), mode="selective-repetitive", repeats={3: 2})
    solves = [_n for _stage in select_blocks(plan, 1, rng) for _n in _stage]
    assert Counter(solves)[3] == 2
    assert solves[:4] == [1, 2, 3, 4]


def test_selective_repetitive_random_extra(rng):
    plan = es_sweep_plan(sequential_chain(4), mode="selective-repetitive", quota=2)
    solves = [_n for _stage in select_blocks(plan, 1, rng) for _n in _stage]
    assert len(solves) == 6
    assert solves[:4] == [1, 2, 3, 4]


# -----------------------------------------------------------------------------
# stage coupling
# -----------------------------------------------------------------------------


def test_chain_plan_has_no_stage_warnings(toy):
    assert validate_stage_coupling(toy, es_sweep_plan(sequential_chain(4))) == []


def test_coupled_blocks_in_one_stage(toy):
    net = HierarchicalNetwork.from_edges(4, [(1, 3), (2, 3), (3, 4)])
    warnings = validate_stage_coupling(toy, es_sweep_plan(net))
    assert len(warnings) == 1
    assert "subproblems 1 and 2" in warnings[0]


def test_uncoupled_blocks_in_one_stage():
    blocks = [VariableBlock.unbounded(_i) for _i in (1, 2, 3)]
    terms = [quadratic_term(f"f{_i}", [(_i, 0)], hessian=[[2.0]]) for _i in (1, 2, 3)]
    problem = build_problem(blocks, terms, [])

    net = HierarchicalNetwork.from_edges(3, [(1, 3), (2, 3)])
    assert validate_stage_coupling(problem, es_sweep_plan(net)) == []
