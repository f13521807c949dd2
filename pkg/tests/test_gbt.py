import numpy as np
import pytest

from qselect.errors import ValidationError
from qselect.gbt import RegressorHyper, fit_gradient_boosted


def quadratic_data(m=5, n=256, seed=0):
    rng = np.random.default_rng(seed)
    w_star = rng.dirichlet(np.ones(m))
    X = rng.dirichlet(np.ones(m), size=n)
    y = 1.0 + ((X - w_star) ** 2).sum(axis=1)
    return X, y


class TestHyper:
    def test_defaults(self):
        h = RegressorHyper()
        assert (h.n_trees, h.max_depth, h.learning_rate, h.subsample) == (100, 4, 0.05, 0.8)

    def test_validation(self):
        with pytest.raises(ValidationError):
            RegressorHyper(max_depth=0)
        with pytest.raises(ValidationError):
            RegressorHyper(learning_rate=0.0)
        with pytest.raises(ValidationError):
            RegressorHyper(subsample=1.5)


class TestFit:
    def test_in_sample_rmse_under_5pct_of_range(self):
        X, y = quadratic_data()
        model = fit_gradient_boosted(X, y)
        rmse = np.sqrt(np.mean((model.predict(X) - y) ** 2))
        assert rmse < 0.05 * np.ptp(y)

    def test_constant_targets_yield_constant_model(self):
        X = np.random.default_rng(0).random((30, 3))
        y = np.full(30, 2.5)
        model = fit_gradient_boosted(X, y)
        assert model.n_trees == 0
        assert np.all(model.predict(X) == 2.5)

    def test_deterministic_given_seed_and_order(self):
        X, y = quadratic_data(seed=3)
        a = fit_gradient_boosted(X, y, RegressorHyper(seed=7))
        b = fit_gradient_boosted(X, y, RegressorHyper(seed=7))
        grid = np.random.default_rng(1).dirichlet(np.ones(5), size=500)
        assert np.array_equal(a.predict(grid), b.predict(grid))

    def test_seed_changes_model(self):
        X, y = quadratic_data(seed=3)
        a = fit_gradient_boosted(X, y, RegressorHyper(seed=7))
        b = fit_gradient_boosted(X, y, RegressorHyper(seed=8))
        grid = np.random.default_rng(1).dirichlet(np.ones(5), size=500)
        assert not np.array_equal(a.predict(grid), b.predict(grid))

    def test_single_feature_step_function(self):
        X = np.linspace(0, 1, 100)[:, None]
        y = (X[:, 0] > 0.5).astype(float)
        model = fit_gradient_boosted(X, y, RegressorHyper(subsample=1.0))
        pred = model.predict(np.array([[0.1], [0.9]]))
        assert pred[0] < 0.1 and pred[1] > 0.9

    def test_bad_shapes_rejected(self):
        with pytest.raises(ValidationError):
            fit_gradient_boosted(np.zeros((4, 2)), np.zeros(5))
        with pytest.raises(ValidationError):
            fit_gradient_boosted(np.zeros((0, 2)), np.zeros(0))

    def test_depth_limit_respected(self):
        X, y = quadratic_data(m=3, n=200)
        model = fit_gradient_boosted(X, y, RegressorHyper(max_depth=2, n_trees=10))
        for tree in model.trees:
            # depth-2 tree has at most 7 nodes
            assert len(tree.feature) <= 7

    def test_prediction_vector_matches_scalar_walk(self):
        # vectorized routing agrees with a straightforward nodewise walk
        X, y = quadratic_data(m=4, n=120, seed=9)
        model = fit_gradient_boosted(X, y, RegressorHyper(n_trees=20))
        queries = np.random.default_rng(2).dirichlet(np.ones(4), size=50)

        def walk(tree, x):
            node = 0
            while tree.feature[node] >= 0:
                if x[tree.feature[node]] <= tree.threshold[node]:
                    node = tree.left[node]
                else:
                    node = tree.right[node]
            return tree.value[node]

        want = np.full(50, model.base)
        for tree in model.trees:
            want += model.learning_rate * np.array([walk(tree, q) for q in queries])
        got = model.predict(queries)
        assert np.allclose(got, want, atol=1e-12)
