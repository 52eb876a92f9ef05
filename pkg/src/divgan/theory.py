"""Numerical checks of the analysis behind the regularizer.

Two facts are exercised:

1. The difference quotient ||G(z2) - G(z1)|| / ||z2 - z1|| is bounded above
   by the path integral of the Jacobian operator norm along the segment
   from z1 to z2 (gradient theorem + Cauchy-Schwarz). Checked by composite
   midpoint quadrature of the spectral norm; the inequality must hold for
   any smooth generator, trained or not.

2. If one parameter update pulls G(z1) toward a target y* by eps, then
   every z2 whose before/after difference quotients are small enough
   (Eq.-level condition) is pulled toward the same target by eps/2. The
   implication is checked probe by probe; the ball-radius formula is
   reported as a sampled estimate only, since the infimum over all z is
   not computable.

Norms here are l2 / spectral (matching the analysis), regardless of the
training-side norm choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import NumericsError, Var, backward, concat
from .nets import NetworkParams, generator_forward, mlp_forward

__all__ = [
    "BoundCheckReport",
    "AttractionReport",
    "BOUND_RTOL",
    "BOUND_ATOL",
    "path_jacobians",
    "path_gradient_bound",
    "bound_suite",
    "attraction_check",
]

BOUND_RTOL = 1e-6
BOUND_ATOL = 1e-8


@dataclass
class BoundCheckReport:
    lhs: float  # difference quotient between the endpoints
    rhs: float  # quadrature of Jacobian norms along the segment
    slack: float  # rhs - lhs
    n_quadrature: int

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + BOUND_RTOL) + BOUND_ATOL


def _batched_jacobians(params_G: NetworkParams, zs: np.ndarray, x=None) -> np.ndarray:
    """Jacobians of G w.r.t. z at each row of zs, shape (n, out_dim, z_dim).

    Rows are independent, so one seeded backward per output component
    recovers every per-row gradient at once.
    """
    n, z_dim = zs.shape
    leaf = Var(zs)
    if x is not None:
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        inp = concat([Var(np.repeat(x, n, axis=0)), leaf], axis=1)
    else:
        inp = leaf
    out, _ = mlp_forward(params_G, inp)
    m = out.shape[1]
    jac = np.zeros((n, m, z_dim))
    for i in range(m):
        seed = np.zeros(out.shape)
        seed[:, i] = 1.0
        backward(out, seed=seed)
        jac[:, i, :] = leaf.grad
    if not np.all(np.isfinite(jac)):
        raise NumericsError("path_gradient_bound: non-finite Jacobian")
    return jac


def path_jacobians(params_G: NetworkParams, z1, z2, n_quad: int, x=None) -> np.ndarray:
    """Jacobians at the composite-midpoint nodes of the segment z1 -> z2."""
    z1 = np.asarray(z1, dtype=np.float64).reshape(-1)
    z2 = np.asarray(z2, dtype=np.float64).reshape(-1)
    ts = (np.arange(n_quad) + 0.5) / n_quad
    gamma = ts[:, None] * z2[None, :] + (1.0 - ts)[:, None] * z1[None, :]
    return _batched_jacobians(params_G, gamma, x=x)


def path_gradient_bound(params_G: NetworkParams, z1, z2, n_quad: int = 64,
                        x=None, matrix_norm: str = "spectral") -> BoundCheckReport:
    """Difference quotient vs averaged Jacobian norm along the segment.

    lhs = ||G(x,z2) - G(x,z1)||_2 / ||z2 - z1||_2; rhs integrates the
    Jacobian norm (spectral by default, Frobenius as a looser option) over
    the straight line between the latents by midpoint quadrature.
    """
    if n_quad < 8:
        raise ValueError("path_gradient_bound: n_quad must be >= 8")
    if matrix_norm not in ("spectral", "frobenius"):
        raise ValueError(f"path_gradient_bound: unknown matrix norm {matrix_norm!r}")
    z1 = np.asarray(z1, dtype=np.float64).reshape(-1)
    z2 = np.asarray(z2, dtype=np.float64).reshape(-1)
    gap = float(np.linalg.norm(z2 - z1))
    if gap == 0.0:
        raise ValueError("path_gradient_bound: z1 and z2 coincide")
    ends = np.stack([z1, z2])
    if x is not None:
        xr = np.asarray(x, dtype=np.float64).reshape(1, -1)
        ys = generator_forward(params_G, ends, np.repeat(xr, 2, axis=0)).data
    else:
        ys = generator_forward(params_G, ends).data
    lhs = float(np.linalg.norm(ys[1] - ys[0]) / gap)
    jac = path_jacobians(params_G, z1, z2, n_quad, x=x)
    if matrix_norm == "spectral":
        norms = np.linalg.svd(jac, compute_uv=False)[:, 0]
    else:
        norms = np.sqrt(np.sum(jac * jac, axis=(1, 2)))
    rhs = float(np.mean(norms))
    return BoundCheckReport(lhs=lhs, rhs=rhs, slack=rhs - lhs, n_quadrature=n_quad)


def bound_suite(params_G: NetworkParams, n_pairs: int, rng, z_dim: int | None = None,
                n_quad: int | None = None, refine: int | None = None,
                x=None) -> dict:
    """Run the bound on random latent pairs; near-violations get a refined
    quadrature before counting as failures."""
    if z_dim is None:
        z_dim = params_G.spec.input_dim if x is None else params_G.spec.input_dim - np.asarray(x).size
    if n_quad is None:
        # piecewise-constant relu Jacobians need a finer grid than smooth tanh
        n_quad = 512 if params_G.spec.hidden_activation == "relu" else 64
    if refine is None:
        refine = max(4 * n_quad, 256)
    violations = 0
    min_slack = np.inf
    refined = 0
    for _ in range(n_pairs):
        z1 = rng.standard_normal(z_dim)
        z2 = rng.standard_normal(z_dim)
        rep = path_gradient_bound(params_G, z1, z2, n_quad=n_quad, x=x)
        if not rep.holds:
            refined += 1
            rep = path_gradient_bound(params_G, z1, z2, n_quad=refine, x=x)
            if not rep.holds:
                violations += 1
        min_slack = min(min_slack, rep.slack)
    return {
        "pairs": n_pairs,
        "n_quad": n_quad,
        "violations": violations,
        "refined": refined,
        "min_slack": float(min_slack),
        "passed": violations == 0,
    }


@dataclass
class AttractionReport:
    """Probe-level outcomes for the co-attraction implication.

    condition_holds -> attracted must have zero exceptions; the ball radius
    is a sampled estimate (min over probes, plus a grid refinement in 2D),
    not the exact infimum over all latents.
    """

    epsilon: float
    z2: np.ndarray
    gap: np.ndarray
    ratio_t: np.ndarray
    ratio_t1: np.ndarray
    condition_holds: np.ndarray
    attracted: np.ndarray
    radius_estimate: float
    n_probes: int

    @property
    def counterexamples(self) -> int:
        return int(np.sum(self.condition_holds & ~self.attracted))

    def records(self) -> list[dict]:
        return [
            {
                "z2": self.z2[i].tolist(),
                "gap": float(self.gap[i]),
                "ratio_t": float(self.ratio_t[i]),
                "ratio_t1": float(self.ratio_t1[i]),
                "condition_holds": bool(self.condition_holds[i]),
                "attracted_by_half_eps": bool(self.attracted[i]),
            }
            for i in range(self.n_probes)
        ]

    def summary(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "n_probes": self.n_probes,
            "n_condition_holds": int(np.sum(self.condition_holds)),
            "n_attracted": int(np.sum(self.attracted)),
            "counterexamples": self.counterexamples,
            "radius_estimate": None if np.isinf(self.radius_estimate) else self.radius_estimate,
            "passed": self.counterexamples == 0,
        }


def _dists_to(params: NetworkParams, zs: np.ndarray, y_star: np.ndarray, x=None) -> np.ndarray:
    if x is not None:
        xr = np.asarray(x, dtype=np.float64).reshape(1, -1)
        ys = generator_forward(params, zs, np.repeat(xr, len(zs), axis=0)).data
    else:
        ys = generator_forward(params, zs).data
    return np.linalg.norm(ys - y_star[None, :], axis=1)


def _ratios_from(params: NetworkParams, z1: np.ndarray, zs: np.ndarray,
                 gaps: np.ndarray, x=None) -> np.ndarray:
    both = np.vstack([z1[None, :], zs])
    if x is not None:
        xr = np.asarray(x, dtype=np.float64).reshape(1, -1)
        ys = generator_forward(params, both, np.repeat(xr, len(both), axis=0)).data
    else:
        ys = generator_forward(params, both).data
    return np.linalg.norm(ys[1:] - ys[0][None, :], axis=1) / gaps


def attraction_check(params_t: NetworkParams, params_t1: NetworkParams, z1,
                     y_star, probes: int, rng, x=None,
                     grid_points: int = 61) -> AttractionReport:
    """Check that every probe satisfying the closeness condition is pulled
    toward y* by eps/2 when z1 is pulled by eps.

    Requires eps = ||y* - G_t(z1)|| - ||y* - G_{t+1}(z1)|| > 0. Probes are
    standard Gaussian; for 2D latents, a [-3, 3]^2 grid additionally
    tightens the sampled radius estimate.
    """
    if probes < 1:
        raise ValueError("attraction_check: probes must be >= 1")
    z1 = np.asarray(z1, dtype=np.float64).reshape(-1)
    y_star = np.asarray(y_star, dtype=np.float64).reshape(-1)
    d1 = _dists_to(params_t, z1[None, :], y_star, x=x)[0]
    d1_next = _dists_to(params_t1, z1[None, :], y_star, x=x)[0]
    eps = float(d1 - d1_next)
    if eps <= 0:
        raise ValueError(
            f"attraction_check: z1 is not attracted (epsilon = {eps:.3e} <= 0)"
        )

    z2 = rng.standard_normal((probes, z1.size))
    gaps = np.linalg.norm(z2 - z1[None, :], axis=1)
    keep = gaps > 0.0
    z2, gaps = z2[keep], gaps[keep]
    ratio_t = _ratios_from(params_t, z1, z2, gaps, x=x)
    ratio_t1 = _ratios_from(params_t1, z1, z2, gaps, x=x)
    condition = (ratio_t + ratio_t1) * gaps <= eps / 2.0
    attracted = (_dists_to(params_t1, z2, y_star, x=x) + eps / 2.0
                 < _dists_to(params_t, z2, y_star, x=x))

    max_ratios = np.maximum(ratio_t, ratio_t1)
    inf_est = float(np.min(max_ratios)) if len(max_ratios) else np.inf
    if z1.size == 2 and grid_points > 1:
        axis = np.linspace(-3.0, 3.0, grid_points)
        gx, gy = np.meshgrid(axis, axis)
        gz = np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)
        ggaps = np.linalg.norm(gz - z1[None, :], axis=1)
        sel = ggaps > 0.0
        gz, ggaps = gz[sel], ggaps[sel]
        gmax = np.maximum(
            _ratios_from(params_t, z1, gz, ggaps, x=x),
            _ratios_from(params_t1, z1, gz, ggaps, x=x),
        )
        if len(gmax):
            inf_est = min(inf_est, float(np.min(gmax)))
    radius = eps / (4.0 * inf_est) if inf_est > 0 else np.inf

    return AttractionReport(
        epsilon=eps,
        z2=z2,
        gap=gaps,
        ratio_t=ratio_t,
        ratio_t1=ratio_t1,
        condition_holds=condition,
        attracted=attracted,
        radius_estimate=float(radius),
        n_probes=len(z2),
    )
