"""Scalar smoothing kernels with compact support and their scaled products.

All built-in kernels live on [-1/2, 1/2], integrate to one and are bounded.
The support boundary is closed: K(+-1/2) counts as inside the window, so the
binary-search windows used by the U-statistic code agree with the kernel's
own support test.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DimensionMismatch, InvalidBandwidth, SchemaError

SUPPORT_HALFWIDTH = 0.5


@dataclass(frozen=True)
class Kernel1D:
    """A one-dimensional kernel: vectorized evaluator, sup-bound and support."""

    id: str
    eval: Callable[[np.ndarray], np.ndarray]
    kappa: float
    support_halfwidth: float = SUPPORT_HALFWIDTH

    def __call__(self, u):
        return self.eval(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class ProductKernelEval:
    """Product kernel of order m built from a single scalar kernel."""

    base: Kernel1D
    m: int


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    integral: float
    sup_abs: float
    support_violations: list
    signed: bool


def _uniform(u):
    return np.where(np.abs(u) <= 0.5, 1.0, 0.0)


def _epanechnikov(u):
    # (3/2)(1 - 4u^2) on [-1/2, 1/2], rescaled from the classical [-1, 1] form
    return np.where(np.abs(u) <= 0.5, 1.5 * (1.0 - 4.0 * u * u), 0.0)


def _triweight(u):
    # (35/16)(1 - 4u^2)^3 on [-1/2, 1/2]
    w = 1.0 - 4.0 * u * u
    return np.where(np.abs(u) <= 0.5, (35.0 / 16.0) * w * w * w, 0.0)


_BUILTINS = {
    "uniform": lambda: Kernel1D("uniform", _uniform, kappa=1.0),
    "epanechnikov-rescaled": lambda: Kernel1D(
        "epanechnikov-rescaled", _epanechnikov, kappa=1.5
    ),
    "triweight-rescaled": lambda: Kernel1D(
        "triweight-rescaled", _triweight, kappa=35.0 / 16.0
    ),
}


def builtin_kernel_ids():
    return tuple(sorted(_BUILTINS))


def get_kernel(kernel_id):
    try:
        return _BUILTINS[kernel_id]()
    except KeyError:
        raise SchemaError(
            f"unknown kernel id {kernel_id!r}; known: {sorted(_BUILTINS)}"
        ) from None


def table_kernel(u_nodes, k_values, kappa=None, kernel_id="user-table"):
    """Kernel given by a sampled table on [-1/2, 1/2], linearly interpolated."""
    u_nodes = np.asarray(u_nodes, dtype=float)
    k_values = np.asarray(k_values, dtype=float)
    if u_nodes.ndim != 1 or u_nodes.shape != k_values.shape:
        raise SchemaError("kernel table must be two equal-length columns")
    if np.any(np.diff(u_nodes) <= 0):
        raise SchemaError("kernel table abscissae must be strictly increasing")
    if u_nodes[0] < -0.5 - 1e-12 or u_nodes[-1] > 0.5 + 1e-12:
        raise SchemaError("kernel table abscissae must lie in [-0.5, 0.5]")
    if kappa is None:
        kappa = float(np.max(np.abs(k_values)))

    def _eval(u):
        out = np.interp(u, u_nodes, k_values, left=0.0, right=0.0)
        return np.where(np.abs(u) <= 0.5, out, 0.0)

    return Kernel1D(kernel_id, _eval, kappa=float(kappa))


def load_table_kernel(path, kappa=None):
    """Load a user kernel from CSV with header ``u,k``."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "u,k":
            raise SchemaError(f"kernel CSV must have header 'u,k', got {header!r}")
        us, ks = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise SchemaError(f"kernel CSV row {lineno}: expected two fields")
            try:
                us.append(float(parts[0]))
                ks.append(float(parts[1]))
            except ValueError:
                raise SchemaError(
                    f"kernel CSV row {lineno}: non-numeric entry"
                ) from None
    return table_kernel(us, ks, kappa=kappa)


def _composite_gauss_legendre(f, a, b, order, panels=8):
    nodes, weights = leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total += half * float(np.dot(weights, f(mid + half * nodes)))
    return total


def validate_kernel(k, probe_points=1001, quad_order=64):
    """Check the kernel contracts: support, boundedness, unit integral.

    Failures are reported in the returned :class:`ValidationReport`, never
    raised.
    """
    if probe_points < 100:
        raise ValueError("probe_points must be >= 100")
    if quad_order < 16:
        raise ValueError("quad_order must be >= 16")

    inside = np.linspace(-0.5, 0.5, probe_points)
    outside = np.concatenate(
        [np.linspace(-2.0, -0.5, probe_points // 2, endpoint=False),
         -np.linspace(-2.0, -0.5, probe_points // 2, endpoint=False)]
    )
    vals_in = k(inside)
    vals_out = k(outside)

    violations = [
        (float(u), float(v))
        for u, v in zip(outside, vals_out)
        if v != 0.0 and abs(u) > 0.5
    ]
    sup_abs = float(np.max(np.abs(vals_in)))
    integral = _composite_gauss_legendre(k, -0.5, 0.5, quad_order)
    signed = bool(np.any(vals_in < 0.0))

    passed = (
        not violations
        and sup_abs <= k.kappa + 1e-12
        and abs(integral - 1.0) <= 1e-10
    )
    return ValidationReport(
        passed=passed,
        integral=integral,
        sup_abs=sup_abs,
        support_violations=violations,
        signed=signed,
    )


def eval_scaled(k, h, z):
    """Scaled kernel h^{-1} K(z/h); zero outside the closed window |z| <= h/2."""
    if h <= 0:
        raise InvalidBandwidth(f"bandwidth must be positive, got {h}")
    z = np.asarray(z, dtype=float)
    out = np.where(np.abs(z) <= h / 2.0, k(z / h) / h, 0.0)
    return float(out) if out.ndim == 0 else out


def eval_product(pk, h, t, x):
    """Product kernel h^{-m} prod_j K((t_j - x_j)/h)."""
    if h <= 0:
        raise InvalidBandwidth(f"bandwidth must be positive, got {h}")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.shape[-1] != pk.m or x.shape[-1] != pk.m:
        raise DimensionMismatch(
            f"expected length-{pk.m} vectors, got {t.shape} and {x.shape}"
        )
    z = t - x
    vals = np.where(np.abs(z) <= h / 2.0, pk.base(z / h) / h, 0.0)
    out = np.prod(vals, axis=-1)
    return float(out) if np.ndim(out) == 0 else out
