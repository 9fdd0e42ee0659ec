import math

import numpy as np
import pytest

from snakewalk import glued as gt
from snakewalk.errors import OracleValidationError, PreconditionError
from snakewalk.graph import Snake
from snakewalk.tree import WavePacketSpec

PACKET = WavePacketSpec(-2, 1.5 * math.pi, 0.5)


@pytest.mark.parametrize("N,verts", [(1, 6), (2, 14), (3, 30)])
def test_glued_trees_counts(N, verts):
    g = gt.make_glued_trees(N, seed=3)
    assert g.graph.num_vertices == verts
    assert len(g.cycle) == 2 ** (N + 1)
    assert all(len(lab) == 2 * N + 2 for lab in g.labels)
    assert len(g.leaves(1)) == len(g.leaves(2)) == 2 ** N
    # every edge changes the layer by one and degrees are 2 or 3
    for u, v in g.graph.edges():
        assert abs(g.layer[u] - g.layer[v]) == 1
    degs = {len(g.graph.neighbors(v)) for v in g.labels}
    assert degs == {2, 3}
    assert g.layer[g.root1] == -N and g.layer[g.root2] == N + 1


def test_glued_trees_are_seeded():
    a, b = gt.make_glued_trees(2, seed=5), gt.make_glued_trees(2, seed=5)
    assert a.labels == b.labels and a.cycle == b.cycle
    with pytest.raises(PreconditionError):
        gt.make_glued_trees(0)


def test_expand_layer_sizes():
    eg = gt.expand(gt.make_glued_trees(2, seed=1), 4)
    assert eg.graph.num_vertices == 62
    sizes = eg.layer_sizes()
    assert sizes[-4] == 1 and sizes[5] == 1
    assert [sizes[x] for x in range(-4, 1)] == [1, 2, 4, 8, 16]
    assert eg.copies == 4
    assert eg.region(eg.root(1)) == "T1" and eg.region(eg.root(2)) == "T2"
    with pytest.raises(PreconditionError):
        gt.expand(gt.make_glued_trees(2, seed=1), 2)


def test_oracle_counts_and_rejects():
    g = gt.make_glued_trees(2, seed=2)
    o = gt.Oracle(g, seed=0)
    assert o.entrance == g.root1
    assert set(o.neighbors(g.root1)) == set(g.graph.neighbors(g.root1))
    assert o.neighbors("not-a-label") == gt.FAILURE == "INVALID"
    assert o.queries == 2
    o.reset()
    assert o.queries == 0


def test_explore_recovers_graph():
    g = gt.make_glued_trees(3, seed=4)
    o = gt.Oracle(g, seed=1)
    h = gt.explore(o, 3)
    assert h.root2 == g.root2
    assert h.layer == g.layer
    assert o.queries == g.graph.num_vertices
    with pytest.raises(OracleValidationError):
        gt.explore(gt.Oracle(g), 2)


def test_column_invariance():
    eg = gt.expand(gt.make_glued_trees(2, seed=1), 4)
    assert gt.column_invariance_residual(eg, 3) < 1e-10


def test_compressed_walk_matches_column_hamiltonian():
    eg = gt.expand(gt.make_glued_trees(2, seed=1), 4)
    worst, count = gt.compare_with_column_hamiltonian(eg, 3)
    assert count > 0 and worst < 1e-12


def test_compressed_walk_does_not_depend_on_the_cycle():
    a = gt.ColumnBasis(gt.expand(gt.make_glued_trees(2, seed=1), 3), 3)
    b = gt.ColumnBasis(gt.expand(gt.make_glued_trees(2, seed=7), 3), 3)
    assert a.keys == b.keys
    assert np.abs(a.compressed().toarray() - b.compressed().toarray()).max() < 1e-12


def test_snake_column_and_bridging():
    g = gt.make_glued_trees(1, seed=0)
    eg = gt.expand(g, 2)
    leaf1 = [v for v in g.graph.neighbors(g.root1)][0]
    leaf2 = [v for v in g.graph.neighbors(leaf1) if g.layer[v] == 1][0]
    snake = Snake(((0, g.root1), (0, leaf1), (0, leaf2), (0, g.root2)))
    assert gt.snake_column(eg, snake) == (-1, 0b111)
    assert gt.is_bridging(eg, snake)
    path = gt.extract_root_path(snake, eg)
    assert path == [g.root1, leaf1, leaf2, g.root2]
    assert gt.validate_path(path, gt.Oracle(g))
    back = Snake(tuple(reversed(snake.vertices)))
    assert gt.extract_root_path(back, eg) == path


def test_snake_inside_first_tree_has_no_path():
    g = gt.make_glued_trees(1, seed=0)
    eg = gt.expand(g, 3)
    snake = Snake((("T1", 1), ("T1", 2), ("T1", 1)))
    assert not gt.is_bridging(eg, snake)
    assert gt.extract_root_path(snake, eg) is None


def test_validate_path_rejects_bad_steps():
    g = gt.make_glued_trees(2, seed=0)
    o = gt.Oracle(g)
    with pytest.raises(OracleValidationError):
        gt.validate_path([g.root1, g.root2], o)
    with pytest.raises(OracleValidationError):
        gt.validate_path([g.root1], o)
    with pytest.raises(OracleValidationError):
        gt.validate_path([g.root1, g.root1], o)


def test_loop_erase():
    assert gt._loop_erase([1, 2, 3, 2, 4, 1, 5]) == [1, 5]
    assert gt._loop_erase([1, 2, 3]) == [1, 2, 3]


def test_uniform_column_sampling():
    eg = gt.expand(gt.make_glued_trees(1, seed=0), 3)
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(200):
        s = gt.sample_snake_in_column(eg, -3, 0b11, 2, rng)
        assert gt.snake_column(eg, s) == (-3, 0b11)
        seen.add(s.vertices)
    assert len(seen) == 4
    with pytest.raises(PreconditionError):
        gt.sample_snake_in_column(eg, -3, 0b00, 2, rng)


def test_zero_time_stays_in_first_tree():
    g = gt.make_glued_trees(1, seed=0)
    out = gt.run_algorithm(gt.Oracle(g, 0), 1, 3, 3, PACKET, 0.0, seed=1, samples=50)
    assert out.bridging_probability < 1e-20
    assert not any(r.bridging for r in out.samples)
    eg = gt.expand(g, 3)
    assert all(all(eg.layer[v] <= -1 for v in r.snake) for r in out.samples)


def test_exact_run_finds_valid_paths():
    g = gt.make_glued_trees(1, seed=0)
    o = gt.Oracle(g, 0)
    out = gt.run_algorithm(o, 1, 3, 3, PACKET, 6.0, seed=11, samples=200, mode="exact")
    assert out.mode == "exact"
    assert 0 < out.bridging_probability < 1
    hits = [r for r in out.samples if r.bridging]
    assert hits
    for r in hits:
        assert r.path[0] == g.root1 and r.path[-1] == g.root2
        assert len(set(r.path)) == len(r.path)
    assert out.simulation_queries == g.graph.num_vertices
    assert out.queries == out.simulation_queries + out.validation_queries
    d = out.to_dict()
    assert d["config"]["rank"] == 1 and len(d["samples"]) == 200


def test_runs_are_reproducible():
    g = gt.make_glued_trees(1, seed=0)
    a = gt.run_algorithm(gt.Oracle(g, 0), 1, 3, 3, PACKET, 6.0, seed=2, samples=30)
    b = gt.run_algorithm(gt.Oracle(g, 0), 1, 3, 3, PACKET, 6.0, seed=2, samples=30)
    assert a.to_dict() == b.to_dict()


def test_column_mode_makes_no_simulation_queries():
    g = gt.make_glued_trees(1, seed=0)
    packet = WavePacketSpec(-4, 1.5 * math.pi, 0.5)
    out = gt.run_algorithm(gt.Oracle(g, 0), 1, 6, 3, packet, 6.0, seed=1, samples=20, mode="column")
    assert out.mode == "column" and out.simulation_queries == 0
    assert 0 <= out.bridging_probability <= 1


def test_run_preconditions():
    g = gt.make_glued_trees(1, seed=0)
    o = gt.Oracle(g)
    with pytest.raises(PreconditionError):
        gt.run_algorithm(o, 1, 3, 2, PACKET, 1.0)
    with pytest.raises(PreconditionError):
        gt.run_algorithm(o, 1, 1, 3, PACKET, 1.0)
    with pytest.raises(PreconditionError):
        gt.run_algorithm(o, 1, 3, 3, WavePacketSpec(5, 4.0, 0.5), 1.0)
    with pytest.raises(PreconditionError):
        gt.run_algorithm(o, 1, 3, 3, PACKET, 1.0, mode="magic")
    with pytest.raises(PreconditionError):
        gt.run_algorithm(o, 1, 3, 3, PACKET, 1.0, mode="column")
