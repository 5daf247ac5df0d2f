"""Conditional U-statistic estimator, population centering and convolutions.

The centering is a population quantity: expectations of the kernel-weighted
U-statistics are convolutions of known data-generating-process densities with
the scaled product kernel, evaluated by tensor Gauss-Legendre quadrature.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr

from .errors import (
    DegenerateSample,
    NoClosedFormConditional,
    SchemaError,
    ZeroDensityWindow,
)
from .function_class import FunctionSpec, builtin_member
from .kernels import Kernel1D
from .ucore import Sample, UKernelSpec, u_stat_windowed


@dataclass(frozen=True)
class Noise:
    kind: str  # "none" | "gaussian" | "uniform"
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "uniform"):
            raise SchemaError(f"unknown noise kind {self.kind!r}")
        if self.kind != "none" and self.param <= 0:
            raise SchemaError("noise parameter must be positive")

    def draw(self, rng, size):
        if self.kind == "none":
            return np.zeros(size)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.param, size)
        return rng.uniform(-self.param, self.param, size)

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "none":
            return (v >= 0.0).astype(float)
        if self.kind == "gaussian":
            return ndtr(v / self.param)
        return np.clip((v + self.param) / (2.0 * self.param), 0.0, 1.0)

    @property
    def bound(self):
        """Almost-sure bound on |noise|, or None for gaussian."""
        if self.kind == "none":
            return 0.0
        if self.kind == "uniform":
            return self.param
        return None


@dataclass(frozen=True)
class DgpSpec:
    """Fully known data-generating process: X ~ fX, Y = r(X) + noise."""

    id: str
    fx: Callable[[np.ndarray], np.ndarray]
    support: Tuple[float, float]
    regression: Callable[[np.ndarray], np.ndarray]
    noise: Noise
    sample_x: Callable  # (rng, n) -> ndarray
    r_bound: float  # sup |r| over the support

    def simulate_y_given_x(self, x, rng):
        x = np.asarray(x, dtype=float)
        return self.regression(x) + self.noise.draw(rng, x.shape)


def _uniform01_fx(x):
    return np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0)


def _std_normal_fx(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


_DGP_BUILDERS = {
    "uniform_linear": lambda noise: DgpSpec(
        "uniform_linear", _uniform01_fx, (0.0, 1.0), lambda x: x, noise,
        lambda rng, n: rng.uniform(0.0, 1.0, n), r_bound=1.0,
    ),
    "uniform_quadratic": lambda noise: DgpSpec(
        "uniform_quadratic", _uniform01_fx, (0.0, 1.0), lambda x: x * x, noise,
        lambda rng, n: rng.uniform(0.0, 1.0, n), r_bound=1.0,
    ),
    "normal_linear": lambda noise: DgpSpec(
        "normal_linear", _std_normal_fx, (-6.0, 6.0), lambda x: x, noise,
        lambda rng, n: rng.normal(0.0, 1.0, n), r_bound=6.0,
    ),
}


def make_dgp(dgp_id, noise_kind="none", noise_param=0.0):
    noise = Noise(noise_kind, noise_param)
    try:
        dgp = _DGP_BUILDERS[dgp_id](noise)
    except KeyError:
        raise SchemaError(
            f"unknown dgp id {dgp_id!r}; known: {sorted(_DGP_BUILDERS)}"
        ) from None
    _validate_density(dgp)
    return dgp


def _validate_density(dgp, tol=1e-8):
    lo, hi = dgp.support
    nodes, weights = leggauss(64)
    edges = np.linspace(lo, hi, 33)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total += half * float(np.dot(weights, dgp.fx(mid + half * nodes)))
    if abs(total - 1.0) > tol:
        raise SchemaError(
            f"dgp {dgp.id!r}: density integrates to {total:.12g} over support"
        )


@dataclass(frozen=True)
class EstimateCell:
    t: tuple
    h: float
    phi: str
    numerator: float
    denominator: float
    mhat: Optional[float]
    status: str  # "ok" | "empty_window" | "nonpositive_denominator"


def estimate(phi, h, t, s, kernel):
    """Stute's estimator m^(t, h) = U_n(phi, h, t) / U_n(1, h, t).

    A vanishing window or a signed-kernel denominator is a cell status, not
    an exception: small-h cells are legitimately empty at finite n.
    """
    m = phi.m
    if m > s.n:
        raise DegenerateSample(f"m={m} exceeds n={s.n}")
    one = builtin_member("one", m)
    num = u_stat_windowed(UKernelSpec(phi, h, tuple(t), kernel), s).value
    den = u_stat_windowed(UKernelSpec(one, h, tuple(t), kernel), s).value
    if den == 0.0:
        return EstimateCell(tuple(t), h, phi.id, num, den, None, "empty_window")
    if den < 0.0:
        return EstimateCell(
            tuple(t), h, phi.id, num, den, None, "nonpositive_denominator"
        )
    return EstimateCell(tuple(t), h, phi.id, num, den, num / den, "ok")


def product_density(dgp, t):
    """f~(t) = prod_j fX(t_j); accepts a point (m,) or a batch (..., m)."""
    t = np.asarray(t, dtype=float)
    out = np.prod(dgp.fx(t), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _max_uniform_expectation(centers, a):
    """E max_j (c_j + U_j) with U_j iid Uniform(-a, a); exact by piecewise
    Gauss-Legendre (the CDF product is piecewise polynomial)."""
    centers = np.asarray(centers, dtype=float)
    if a == 0.0:
        return float(np.max(centers))
    lo = float(np.min(centers) - a)
    hi = float(np.max(centers) + a)
    cuts = np.unique(np.concatenate([centers - a, centers + a, [lo, hi]]))
    cuts = cuts[(cuts >= lo) & (cuts <= hi)]
    nodes, weights = leggauss(centers.size + 2)
    total = 0.0
    for s0, s1 in zip(cuts[:-1], cuts[1:]):
        mid, half = 0.5 * (s0 + s1), 0.5 * (s1 - s0)
        v = mid + half * nodes
        cdf = np.prod(
            np.clip((v[:, None] - centers[None, :] + a) / (2.0 * a), 0.0, 1.0),
            axis=1,
        )
        total += half * float(np.dot(weights, 1.0 - cdf))
    return lo + total


def true_regression(dgp, phi, t):
    """Closed-form m_phi(t) = E[phi(Y) | X = t] for the built-in pairs.

    Accepts a point (m,) or a batch (..., m). All built-in noises are
    centered, so the sum and product cases carry no correction terms.
    """
    t = np.asarray(t, dtype=float)
    m = phi.m
    if t.shape[-1] != m:
        raise SchemaError(f"t must have trailing dimension {m}")
    pid = phi.id
    r = dgp.regression

    if pid == "one":
        out = np.ones(t.shape[:-1])
    elif pid.startswith("const:"):
        out = np.full(t.shape[:-1], float(pid.split(":", 1)[1]))
    elif pid == "sum":
        out = np.sum(r(t), axis=-1)
    elif pid.startswith("sum_clipped:"):
        M = float(pid.split(":", 1)[1])
        bound = dgp.noise.bound
        if bound is None or m * (dgp.r_bound + bound) > M:
            raise NoClosedFormConditional(
                f"sum_clipped closed form needs the clip inactive on the "
                f"support; M={M} too small or noise unbounded"
            )
        out = np.sum(r(t), axis=-1)
    elif pid == "product":
        out = np.prod(r(t), axis=-1)
    elif pid.startswith("identity_j:"):
        j = int(pid.split(":", 1)[1])
        out = r(t[..., j - 1])
    elif pid.startswith("indicator_leq:"):
        c = float(pid.split(":", 1)[1])
        out = np.prod(dgp.noise.cdf(c - r(t)), axis=-1)
    elif pid == "max":
        if dgp.noise.kind == "gaussian":
            raise NoClosedFormConditional("max has no closed form under gaussian noise")
        centers = r(t)
        if centers.ndim == 1:
            out = np.float64(_max_uniform_expectation(centers, dgp.noise.param))
        else:
            flat = centers.reshape(-1, m)
            out = np.array(
                [_max_uniform_expectation(row, dgp.noise.param) for row in flat]
            ).reshape(centers.shape[:-1])
    else:
        raise NoClosedFormConditional(f"no closed-form regression for {pid!r}")
    return float(out) if np.ndim(out) == 0 else out


def conditional_mean_fixed(dgp, phi, xs_free, slot, y):
    """E[phi(Y_1..Y_m) | Y_slot = y, X_i = x_i for the other slots].

    xs_free has shape (..., m-1): the x-coordinates of the non-fixed slots,
    in slot order. Vectorized over the leading axes.
    """
    xs_free = np.asarray(xs_free, dtype=float)
    m = phi.m
    pid = phi.id
    r = dgp.regression
    if pid == "one":
        return np.ones(xs_free.shape[:-1])
    if pid.startswith("const:"):
        return np.full(xs_free.shape[:-1], float(pid.split(":", 1)[1]))
    if pid == "sum":
        return y + np.sum(r(xs_free), axis=-1)
    if pid == "product":
        return y * np.prod(r(xs_free), axis=-1)
    if pid.startswith("identity_j:"):
        j = int(pid.split(":", 1)[1]) - 1
        if j == slot:
            return np.full(xs_free.shape[:-1], y)
        free_pos = j if j < slot else j - 1
        return r(xs_free[..., free_pos])
    if pid.startswith("indicator_leq:"):
        c = float(pid.split(":", 1)[1])
        others = np.prod(dgp.noise.cdf(c - r(xs_free)), axis=-1)
        return (1.0 if y <= c else 0.0) * others
    raise NoClosedFormConditional(f"no closed-form conditional mean for {pid!r}")


def _axis_rule(kernel, h, zj, quad_order, breakpoints):
    """Gauss-Legendre nodes/weights on [-1/2, 1/2], segmented where the
    mapped point z - h*u crosses a density breakpoint."""
    cuts = [-0.5, 0.5]
    if breakpoints:
        for b in breakpoints:
            u = (zj - b) / h
            if -0.5 < u < 0.5:
                cuts.append(u)
    cuts = sorted(set(cuts))
    base_nodes, base_weights = leggauss(quad_order)
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes.append(mid + half * base_nodes)
        weights.append(half * base_weights)
    return np.concatenate(nodes), np.concatenate(weights)


def convolve(phi, kernel, h, z, quad_order=64, breakpoints=None):
    """(phi * K~_h)(z) = h^{-d} integral of phi(x) prod_j K((z_j - x_j)/h) dx.

    phi must be vectorized over batches of shape (N, d). Computed in the
    kernel's own coordinates, so the integration box is always the support
    cube regardless of h.
    """
    z = np.asarray(z, dtype=float).ravel()
    d = z.size
    rules = [_axis_rule(kernel, h, z[j], quad_order, breakpoints) for j in range(d)]
    mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    U = np.stack([m.ravel() for m in mesh], axis=-1)  # (N, d)
    pts = z[None, :] - h * U
    vals = np.asarray(phi(pts), dtype=float)
    kw = np.ones(U.shape[0])
    for j in range(d):
        kw *= kernel.eval(U[:, j])
    w = rules[0][1]
    for j in range(1, d):
        w = np.multiply.outer(w, rules[j][1]).ravel()
    return float(np.dot(vals * kw, w))


def expected_u(dgp, phi, kernel, h, t, quad_order=64):
    """E U_n(phi, h, t) = (m_phi * f~) convolved with the scaled product kernel."""
    def integrand(pts):
        return np.asarray(true_regression(dgp, phi, pts), dtype=float) * product_density(
            dgp, pts
        )

    return convolve(
        integrand, kernel, h, np.asarray(t, dtype=float),
        quad_order=quad_order, breakpoints=list(dgp.support),
    )


def expected_u_one(dgp, m, kernel, h, t, quad_order=64):
    """E U_n(1, h, t) = f~ convolved with the scaled product kernel."""
    return convolve(
        lambda pts: product_density(dgp, pts), kernel, h,
        np.asarray(t, dtype=float), quad_order=quad_order,
        breakpoints=list(dgp.support),
    )


def centering(phi, h, t, dgp, kernel, quad_order=64):
    """E^ m^ = E U_n(phi, h, t) / E U_n(1, h, t), both by quadrature."""
    t = np.asarray(t, dtype=float)
    den = expected_u_one(dgp, phi.m, kernel, h, t, quad_order)
    if den <= 1e-14:
        raise ZeroDensityWindow(
            f"denominator convolution {den:.3g} at t={tuple(t)}, h={h}"
        )
    num = expected_u(dgp, phi, kernel, h, t, quad_order)
    return num / den


def bias_sup(dgp, fc, h, t_grid, kernel, quad_order=64):
    """max over members and grid points of |E^ m^ - m_phi(t)|."""
    worst = 0.0
    for phi in fc.members:
        for t in t_grid:
            cent = centering(phi, h, t, dgp, kernel, quad_order)
            truth = true_regression(dgp, phi, np.asarray(t, dtype=float))
            worst = max(worst, abs(cent - truth))
    return worst
