import numpy as np
import pytest

from cealsim.objective import (
    ProblemInstance,
    eval_f,
    grad,
    make_instance,
    max_grad_norm,
    noisy_grad,
    noisy_grad_mean,
)


def _tiny(dim=2, curvature=(1.0, 4.0), x_star=(0.0, 0.0), alpha=1.0, beta=4.0, sigma=1.0):
    return ProblemInstance(
        dim=dim, alpha=alpha, beta=beta, sigma=sigma, clients=2, horizon=100,
        minimizer=np.array(x_star), domain_radius=0.1, curvature=np.array(curvature),
    )


class TestEval:
    def test_zero_at_minimizer(self):
        inst = _tiny()
        assert eval_f(inst, inst.minimizer) == 0.0

    def test_scalar_quadratic(self):
        inst = _tiny(dim=1, curvature=(2.0,), x_star=(0.0,), alpha=2.0, beta=2.0)
        assert eval_f(inst, np.array([1.0])) == pytest.approx(1.0)

    def test_two_dim(self):
        inst = _tiny()
        assert eval_f(inst, np.array([1.0, 1.0])) == pytest.approx(2.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_f(_tiny(), np.zeros(3))


class TestGrad:
    def test_zero_at_minimizer(self):
        inst = _tiny()
        assert np.array_equal(grad(inst, inst.minimizer), np.zeros(2))

    def test_scalar(self):
        inst = _tiny(dim=1, curvature=(2.0,), x_star=(0.0,), alpha=2.0, beta=2.0)
        assert np.allclose(grad(inst, np.array([3.0])), [6.0])

    def test_componentwise(self):
        inst = _tiny(x_star=(1.0, 0.0))
        assert np.allclose(grad(inst, np.array([2.0, 1.0])), [1.0, 4.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            grad(_tiny(), np.zeros(5))


class TestNoisyGrad:
    def test_zero_noise_degenerates_to_grad(self):
        inst = _tiny(sigma=0.0)
        rng = np.random.default_rng(0)
        x = np.array([0.03, -0.04])
        assert np.array_equal(noisy_grad(inst, x, rng), grad(inst, x))

    def test_monte_carlo_mean(self):
        """Sample mean within 4 sigma / sqrt(n d) of the true gradient."""
        inst = _tiny(sigma=1.0)
        rng = np.random.default_rng(42)
        x = np.array([0.05, 0.02])
        n = 100_000
        samples = np.array([noisy_grad(inst, x, rng) for _ in range(n)])
        tol = 4.0 * inst.sigma / np.sqrt(n * inst.dim)
        assert np.all(np.abs(samples.mean(axis=0) - grad(inst, x)) <= tol)

    def test_monte_carlo_variance(self):
        inst = _tiny(sigma=1.0)
        rng = np.random.default_rng(43)
        x = np.zeros(2)
        samples = np.array([noisy_grad(inst, x, rng) for _ in range(100_000)])
        var = samples.var(axis=0)
        assert np.all(np.abs(var - inst.sigma**2 / inst.dim) <= 0.1 * inst.sigma**2 / inst.dim)

    def test_seeded_reproducibility(self):
        inst = _tiny()
        x = np.array([0.01, 0.02])
        a = noisy_grad(inst, x, np.random.default_rng(7))
        b = noisy_grad(inst, x, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_uniform_noise_matches_variance(self):
        inst = _tiny(sigma=1.0)
        uni = ProblemInstance(
            dim=2, alpha=1.0, beta=4.0, sigma=1.0, clients=2, horizon=100,
            minimizer=np.zeros(2), domain_radius=0.1,
            curvature=np.array([1.0, 4.0]), noise="uniform",
        )
        rng = np.random.default_rng(11)
        samples = np.array([noisy_grad(uni, np.zeros(2), rng) for _ in range(100_000)])
        assert np.all(np.abs(samples.mean(axis=0)) <= 0.02)
        assert np.all(np.abs(samples.var(axis=0) - 0.5) <= 0.05)

    def test_mean_draw_matches_law(self):
        """noisy_grad_mean agrees with averaging explicit samples in law."""
        inst = _tiny(sigma=1.0)
        x = np.array([0.05, -0.03])
        rng = np.random.default_rng(5)
        means = np.array([noisy_grad_mean(inst, x, 25, rng) for _ in range(40_000)])
        err = means - grad(inst, x)
        assert np.all(np.abs(err.mean(axis=0)) <= 4 / np.sqrt(40_000 * 2 * 25))
        assert np.all(np.abs(err.var(axis=0) - 0.5 / 25) <= 0.1 * 0.5 / 25)

    def test_uniform_mean_materializes_samples(self):
        uni = ProblemInstance(
            dim=2, alpha=1.0, beta=4.0, sigma=1.0, clients=2, horizon=100,
            minimizer=np.zeros(2), domain_radius=0.1,
            curvature=np.array([1.0, 4.0]), noise="uniform",
        )
        rng = np.random.default_rng(5)
        means = np.array([noisy_grad_mean(uni, np.zeros(2), 16, rng) for _ in range(20_000)])
        assert np.all(np.abs(means.var(axis=0) - 0.5 / 16) <= 0.15 * 0.5 / 16)


class TestConvexityProperties:
    def test_bracketing_inequalities(self):
        """alpha/beta bracketing of f and the gradient-gap inequalities."""
        inst = make_instance(4, 1.0, 3.0, 0.5, 2, 100, curvature="geomspace",
                             minimizer="offset")
        rng = np.random.default_rng(3)
        r = inst.domain_radius
        for _ in range(200):
            x = rng.uniform(-r, r, 4)
            y = rng.uniform(-r, r, 4)
            fx, fy, gx = eval_f(inst, x), eval_f(inst, y), grad(inst, x)
            lin = fx + float(gx @ (y - x))
            dist2 = float(np.dot(y - x, y - x))
            assert fy >= lin + 0.5 * inst.alpha * dist2 - 1e-12
            assert fy <= lin + 0.5 * inst.beta * dist2 + 1e-12
            gap = fx - eval_f(inst, inst.minimizer)
            gn2 = float(gx @ gx)
            assert 2 * inst.alpha * gap - 1e-12 <= gn2 <= 2 * inst.beta * gap + 1e-12


class TestConstruction:
    def test_factory_enforces_gradient_cap(self):
        inst = make_instance(8, 1.0, 5.0, 1.0, 4, 1000, minimizer="offset")
        assert max_grad_norm(inst) == pytest.approx(0.5, rel=1e-9)

    def test_validator_rejects_oversized_gradient(self):
        with pytest.raises(ValueError, match="gradient norm"):
            ProblemInstance(
                dim=2, alpha=1.0, beta=1.0, sigma=0.1, clients=1, horizon=10,
                minimizer=np.zeros(2), domain_radius=10.0, curvature=np.ones(2),
            )

    def test_validator_rejects_curvature_outside_band(self):
        with pytest.raises(ValueError, match="curvature"):
            ProblemInstance(
                dim=2, alpha=1.0, beta=2.0, sigma=0.1, clients=1, horizon=10,
                minimizer=np.zeros(2), domain_radius=0.05, curvature=np.array([0.5, 2.0]),
            )

    def test_validator_rejects_exterior_minimizer(self):
        with pytest.raises(ValueError, match="minimizer"):
            ProblemInstance(
                dim=1, alpha=1.0, beta=1.0, sigma=0.1, clients=1, horizon=10,
                minimizer=np.array([0.2]), domain_radius=0.1, curvature=np.ones(1),
            )

    def test_explicit_minimizer_requires_radius(self):
        with pytest.raises(ValueError, match="domain_radius"):
            make_instance(2, 1.0, 1.0, 0.1, 1, 10, minimizer=[0.0, 0.0])
