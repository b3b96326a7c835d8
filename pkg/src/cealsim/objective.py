"""Diagonal quadratic objectives with a noisy first-order oracle.

The function family is

    f(x) = 0.5 * sum_i  curvature_i * (x_i - minimizer_i)**2

on an axis-aligned box [-domain_radius, domain_radius]^dim.  Eigenvalues
(curvature) lie in [alpha, beta], so f is alpha-strongly convex and
beta-smooth, and f, grad f and the minimizer are all available in closed
form for exact regret accounting.

Clients observe grad f(x) + xi, where xi has independent zero-mean
components with per-coordinate variance sigma^2/dim.  The Gaussian
instantiation satisfies E[exp(l * v.xi)] <= exp(l^2 sigma^2 / (2 dim)) for
every unit vector v; a bounded-uniform variant with the same variance is
available behind the same interface for robustness checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProblemInstance",
    "make_instance",
    "eval_f",
    "grad",
    "noisy_grad",
    "noisy_grad_mean",
    "max_grad_norm",
]


@dataclass(frozen=True)
class ProblemInstance:
    """An immutable problem description shared by all simulated clients.

    Attributes:
        dim: dimension d of the domain.
        alpha: strong-convexity constant.
        beta: smoothness constant, beta >= alpha.
        sigma: sub-Gaussian noise scale (directional variance proxy
            sigma^2/dim per the oracle contract).
        clients: number of clients M.
        horizon: per-client query budget T.
        minimizer: vector x* of length dim, strictly inside the box.
        domain_radius: half-width of the axis-aligned box centered at 0.
        curvature: eigenvalues of the diagonal Hessian, in [alpha, beta].
        noise: "gaussian" or "uniform".
    """

    dim: int
    alpha: float
    beta: float
    sigma: float
    clients: int
    horizon: int
    minimizer: np.ndarray
    domain_radius: float
    curvature: np.ndarray
    noise: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "minimizer", np.asarray(self.minimizer, dtype=float))
        object.__setattr__(self, "curvature", np.asarray(self.curvature, dtype=float))
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not (0 < self.alpha <= self.beta):
            raise ValueError(f"need 0 < alpha <= beta, got alpha={self.alpha}, beta={self.beta}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.clients < 1 or self.horizon < 1:
            raise ValueError("clients and horizon must be positive")
        if self.minimizer.shape != (self.dim,) or self.curvature.shape != (self.dim,):
            raise ValueError("minimizer and curvature must have length dim")
        if self.domain_radius <= 0:
            raise ValueError("domain_radius must be positive")
        if self.curvature.min() < self.alpha - 1e-12 or self.curvature.max() > self.beta + 1e-12:
            raise ValueError("curvature eigenvalues must lie in [alpha, beta]")
        if np.max(np.abs(self.minimizer)) >= self.domain_radius:
            raise ValueError("minimizer must lie strictly inside the domain box")
        if self.noise not in ("gaussian", "uniform"):
            raise ValueError(f"unknown noise kind {self.noise!r}")
        sup = max_grad_norm(self)
        if sup > 1.0 + 1e-9:
            raise ValueError(
                f"gradient norm over the domain box is {sup:.6g} > 1; "
                "rescale the domain (see make_instance)"
            )

    @property
    def f_star(self) -> float:
        """Minimum value of f (zero for this family)."""
        return 0.0


def max_grad_norm(instance: ProblemInstance) -> float:
    """Supremum of ||grad f|| over the domain box (attained at a corner)."""
    reach = instance.domain_radius + np.abs(instance.minimizer)
    return float(np.linalg.norm(instance.curvature * reach))


def make_instance(
    dim: int,
    alpha: float,
    beta: float,
    sigma: float,
    clients: int,
    horizon: int,
    *,
    curvature: str | list[float] | np.ndarray = "linspace",
    minimizer: str | list[float] | np.ndarray = "center",
    minimizer_scale: float = 0.25,
    grad_cap: float = 0.5,
    domain_radius: float | None = None,
    noise: str = "gaussian",
) -> ProblemInstance:
    """Build a valid instance, solving for the domain half-width.

    Unless an explicit domain_radius is given, the box is scaled so that
    the gradient norm over the box is exactly grad_cap.  The default cap
    of 0.5 leaves a factor-2 margin below the required bound of 1, so the
    bound keeps holding on the whole sublevel set reachable by unprojected
    descent steps from any starting point in the box.

    curvature: "linspace" (uniform in [alpha, beta]), "geomspace", or an
        explicit list of eigenvalues.
    minimizer: "center" (x* = 0), "offset" (x* = minimizer_scale * radius
        on alternating coordinate signs), or an explicit vector.
    """
    if not (0 < grad_cap <= 1.0):
        raise ValueError(f"grad_cap must be in (0, 1], got {grad_cap}")
    if isinstance(curvature, str):
        if curvature == "linspace":
            lam = np.linspace(alpha, beta, dim)
        elif curvature == "geomspace":
            lam = np.geomspace(alpha, beta, dim)
        else:
            raise ValueError(f"unknown curvature spec {curvature!r}")
    else:
        lam = np.asarray(curvature, dtype=float)

    if isinstance(minimizer, str):
        if minimizer == "center":
            frac = np.zeros(dim)
        elif minimizer == "offset":
            signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
            frac = minimizer_scale * signs
        else:
            raise ValueError(f"unknown minimizer spec {minimizer!r}")
        if np.max(np.abs(frac)) >= 1.0:
            raise ValueError("minimizer_scale must be < 1 to stay inside the box")
        if domain_radius is None:
            # Solve sqrt(sum lam_i^2 (R + |x*_i|)^2) = grad_cap with x* = frac*R.
            domain_radius = grad_cap / float(np.linalg.norm(lam * (1.0 + np.abs(frac))))
        x_star = frac * domain_radius
    else:
        x_star = np.asarray(minimizer, dtype=float)
        if domain_radius is None:
            raise ValueError("explicit minimizer vectors require an explicit domain_radius")

    return ProblemInstance(
        dim=dim,
        alpha=alpha,
        beta=beta,
        sigma=sigma,
        clients=clients,
        horizon=horizon,
        minimizer=x_star,
        domain_radius=float(domain_radius),
        curvature=lam,
        noise=noise,
    )


def _check_dim(instance: ProblemInstance, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.dim,):
        raise ValueError(f"expected a vector of length {instance.dim}, got shape {x.shape}")
    return x


def eval_f(instance: ProblemInstance, x: np.ndarray) -> float:
    """f(x) = 0.5 * sum_i curvature_i (x_i - x*_i)^2."""
    x = _check_dim(instance, x)
    diff = x - instance.minimizer
    return 0.5 * float(np.dot(instance.curvature * diff, diff))


def grad(instance: ProblemInstance, x: np.ndarray) -> np.ndarray:
    """Exact gradient, component i equal to curvature_i (x_i - x*_i)."""
    x = _check_dim(instance, x)
    return instance.curvature * (x - instance.minimizer)


def _noise(instance: ProblemInstance, rng: np.random.Generator, shape) -> np.ndarray:
    scale = instance.sigma / math.sqrt(instance.dim)
    if instance.noise == "gaussian":
        return scale * rng.standard_normal(shape)
    # Uniform on [-a, a] with a = sigma*sqrt(3/d) matches the per-coordinate
    # variance sigma^2/d of the Gaussian variant.
    half = instance.sigma * math.sqrt(3.0 / instance.dim)
    return rng.uniform(-half, half, shape)


def noisy_grad(instance: ProblemInstance, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One sample G(x) = grad f(x) + xi.  Deterministic given the rng state."""
    g = grad(instance, x)
    if instance.sigma == 0:
        return g
    return g + _noise(instance, rng, instance.dim)


def noisy_grad_mean(
    instance: ProblemInstance,
    x: np.ndarray,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample mean of `count` independent noisy gradients at x.

    For Gaussian noise the mean is drawn directly from its exact law
    N(grad f(x), sigma^2/(dim*count) I); for other noise kinds the
    individual samples are materialized and averaged.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    g = grad(instance, x)
    if instance.sigma == 0:
        return g
    if instance.noise == "gaussian":
        scale = instance.sigma / math.sqrt(instance.dim * count)
        return g + scale * rng.standard_normal(instance.dim)
    return g + _noise(instance, rng, (count, instance.dim)).mean(axis=0)
