import copy

import numpy as np
import pytest

from optecot.engines import CMAES, GeneticProgramming, make_engine
from optecot.engines.gp import (
    depth,
    evaluate_tree,
    paths,
    random_tree,
    replace,
    size,
    subtree,
    to_string,
)
from optecot.problems import McSphere, SymbolicRegression


def random_increasing_map(rng):
    """Strictly increasing piecewise-linear map with random knots and slopes."""
    knots = np.sort(rng.uniform(-50, 50, size=int(rng.integers(1, 6))))
    slopes = rng.uniform(0.01, 100, size=len(knots) + 1)
    offset = rng.uniform(-1e3, 1e3)

    def g(v):
        out = offset + slopes[0] * v
        for k, s_prev, s_next in zip(knots, slopes[:-1], slopes[1:]):
            out += (s_next - s_prev) * max(0.0, v - k)
        return out

    return g


def check_rank_invariance(engine, scores_fn, rng, n_maps):
    for _ in range(n_maps):
        pop = engine.ask()
        scores = scores_fn(pop)
        g = random_increasing_map(rng)
        a, b = copy.deepcopy(engine), copy.deepcopy(engine)
        a.tell(scores)
        b.tell([g(s) for s in scores])
        assert a.digest() == b.digest()
        assert repr(a.ask()) == repr(b.ask())
        engine.tell(scores)


def test_cmaes_rank_invariance():
    prob = McSphere()
    eng = CMAES(6, 20, seed=1, bounds=prob.bounds)
    check_rank_invariance(eng, lambda pop: [prob.true_value(x) for x in pop], np.random.default_rng(7), 10)


def test_gp_rank_invariance():
    prob = SymbolicRegression()
    eng = GeneticProgramming(2, 30, seed=1)
    check_rank_invariance(eng, lambda pop: [prob.evaluate(t, 50)[0] for t in pop], np.random.default_rng(7), 10)


def test_cmaes_converges_on_sphere():
    eng = CMAES(4, 12, seed=0, mean=np.full(4, 3.0), sigma=1.0)
    for _ in range(150):
        pop = eng.ask()
        eng.tell([-float(np.sum(x**2)) for x in pop])
    assert np.linalg.norm(eng.mean) < 1e-4


def test_cmaes_clips_to_bounds_and_is_deterministic():
    a = CMAES(3, 8, seed=5, bounds=(-1.0, 1.0), sigma=10.0)
    b = CMAES(3, 8, seed=5, bounds=(-1.0, 1.0), sigma=10.0)
    pa, pb = a.ask(), b.ask()
    assert all(np.all(np.abs(x) <= 1.0) for x in pa)
    assert repr(pa) == repr(pb) and a.digest() == b.digest()


def test_cmaes_call_order_errors():
    eng = CMAES(2, 4, seed=0)
    with pytest.raises(RuntimeError):
        eng.tell([1, 2, 3, 4])
    eng.ask()
    with pytest.raises(ValueError):
        eng.tell([1, 2])


def test_tree_helpers():
    tree = ("add", ("mul", ("x", 0), ("x", 1)), ("c", 2.0))
    assert depth(tree) == 2 and size(tree) == 5  # terminals have depth 0
    assert list(paths(tree))[0] == ()
    assert subtree(tree, (1, 2)) == ("x", 1)
    assert replace(tree, (2,), ("x", 0)) == ("add", ("mul", ("x", 0), ("x", 1)), ("x", 0))
    X = np.array([[1.0, 2.0], [3.0, -1.0]])
    assert evaluate_tree(tree, X).tolist() == [4.0, -1.0]
    assert to_string(tree) == "((x1 * x2) + 2.0)"


def test_protected_division():
    X = np.array([[0.0, 1.0], [2.0, 1.0]])
    assert evaluate_tree(("div", ("x", 1), ("x", 0)), X).tolist() == [1.0, 0.5]


def test_gp_respects_depth_limit():
    prob = SymbolicRegression()
    eng = GeneticProgramming(2, 40, seed=3, max_depth=6, init_depth=(2, 5))
    for _ in range(15):
        pop = eng.ask()
        eng.tell([prob.evaluate(t, 50)[0] for t in pop])
    assert all(depth(t) <= 6 for t in eng.ask())


def test_random_tree_full_depth():
    rng = np.random.default_rng(0)
    assert all(depth(random_tree(rng, 2, 4, full=True)) == 4 for _ in range(20))


def test_make_engine_checks_representation():
    with pytest.raises(ValueError):
        make_engine(SymbolicRegression(), "cmaes", 10, 0)
    with pytest.raises(ValueError):
        make_engine(McSphere(), "gp", 10, 0)
    with pytest.raises(ValueError):
        make_engine(McSphere(), "pso", 10, 0)
    assert isinstance(make_engine(McSphere(), "cmaes", 10, 0), CMAES)
