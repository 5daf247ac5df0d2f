"""Finite families of m-argument functions with envelopes and moment regimes.

The theory's supremum over a function class is realized here as a maximum
over an explicit finite family, which is what the simulation harness needs.
Member evaluators are vectorized: they accept arrays of shape (..., m) and
return arrays of shape (...).
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DimensionMismatch, SchemaError


@dataclass(frozen=True)
class FunctionSpec:
    id: str
    eval: Callable[[np.ndarray], np.ndarray]
    m: int

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.m:
            raise DimensionMismatch(
                f"{self.id}: expected trailing dimension {self.m}, got {y.shape}"
            )
        out = self.eval(y)
        return float(out) if np.ndim(out) == 0 else np.asarray(out, dtype=float)


@dataclass(frozen=True)
class Bounded:
    M: float


@dataclass(frozen=True)
class Unbounded:
    p: float
    mu_p: Optional[float] = None

    def __post_init__(self):
        if self.p <= 2:
            raise ValueError("unbounded regime requires p > 2")


Regime = Union[Bounded, Unbounded]


def builtin_member(spec_id, m):
    """Construct one of the built-in family members by id string.

    Known ids: ``sum``, ``product``, ``max``, ``one``, ``const:c``,
    ``identity_j:j`` (1-based), ``indicator_leq:c`` (product of per-coordinate
    indicators 1{y_j <= c}), ``sum_clipped:M`` (sum clipped to [-M, M]).
    """
    if spec_id == "sum":
        return FunctionSpec("sum", lambda y: np.sum(y, axis=-1), m)
    if spec_id == "product":
        return FunctionSpec("product", lambda y: np.prod(y, axis=-1), m)
    if spec_id == "max":
        return FunctionSpec("max", lambda y: np.max(y, axis=-1), m)
    if spec_id == "one":
        return FunctionSpec("one", lambda y: np.ones(y.shape[:-1]), m)
    if spec_id.startswith("const:"):
        c = float(spec_id.split(":", 1)[1])
        return FunctionSpec(spec_id, lambda y: np.full(y.shape[:-1], c), m)
    if spec_id.startswith("identity_j:"):
        j = int(spec_id.split(":", 1)[1])
        if not 1 <= j <= m:
            raise SchemaError(f"identity_j index {j} out of range 1..{m}")
        return FunctionSpec(spec_id, lambda y: y[..., j - 1], m)
    if spec_id.startswith("indicator_leq:"):
        c = float(spec_id.split(":", 1)[1])
        return FunctionSpec(
            spec_id, lambda y: np.prod((y <= c).astype(float), axis=-1), m
        )
    if spec_id.startswith("sum_clipped:"):
        M = float(spec_id.split(":", 1)[1])
        return FunctionSpec(
            spec_id, lambda y: np.clip(np.sum(y, axis=-1), -M, M), m
        )
    raise SchemaError(f"unknown function member id {spec_id!r}")


def polynomial_member(spec_id, m, terms):
    """Member of the form sum_k c_k * prod_j y_j^{e_kj}.

    ``terms`` is a list of (coefficient, exponents) with len(exponents) == m.
    """
    terms = [(float(c), tuple(int(e) for e in es)) for c, es in terms]
    for _, es in terms:
        if len(es) != m:
            raise SchemaError("polynomial exponent tuple length must equal m")

    def _eval(y):
        out = np.zeros(y.shape[:-1])
        for c, es in terms:
            mono = np.full(y.shape[:-1], c)
            for j, e in enumerate(es):
                if e:
                    mono = mono * y[..., j] ** e
            out = out + mono
        return out

    return FunctionSpec(spec_id, _eval, m)


@dataclass(frozen=True)
class FunctionClass:
    members: tuple
    envelope: Callable[[np.ndarray], np.ndarray]
    regime: Regime

    def __post_init__(self):
        if not self.members:
            raise ValueError("function class must have at least one member")
        ms = {f.m for f in self.members}
        if len(ms) != 1:
            raise DimensionMismatch(f"members disagree on arity: {sorted(ms)}")

    @property
    def m(self):
        return self.members[0].m


def make_function_class(members, regime, envelope=None):
    members = tuple(members)
    if envelope is None:
        # smallest valid envelope for a finite family: pointwise max of |phi|
        def envelope(y, _members=members):
            y = np.asarray(y, dtype=float)
            return np.max(np.stack([np.abs(f.eval(y)) for f in _members]), axis=0)

    return FunctionClass(members=members, envelope=envelope, regime=regime)


@dataclass(frozen=True)
class EnvelopeReport:
    passed: bool
    max_violation: float
    offending_member: Optional[str]
    offending_point: Optional[tuple]


def envelope_check(fc, probes):
    """Verify envelope(y) >= |phi(y)| for every member on every probe point."""
    probes = np.asarray(probes, dtype=float)
    if probes.size == 0:
        raise ValueError("probes must be nonempty")
    env = np.asarray(fc.envelope(probes), dtype=float)
    worst = -np.inf
    who, where = None, None
    for f in fc.members:
        viol = np.abs(f.eval(probes)) - env
        i = int(np.argmax(viol))
        if viol.flat[i] > worst:
            worst = float(viol.flat[i])
            who = f.id
            where = tuple(probes.reshape(-1, fc.m)[i])
    return EnvelopeReport(
        passed=worst <= 0.0,
        max_violation=worst,
        offending_member=who,
        offending_point=where,
    )


def envelope_tilde(fc, kappa, y):
    """Symmetrized envelope kappa^m * sum over permutations sigma of F(y_sigma).

    Accepts a single length-m point or a batch of shape (N, m).
    """
    y = np.asarray(y, dtype=float)
    m = fc.m
    if y.shape[-1] != m:
        raise DimensionMismatch(f"expected trailing dimension {m}, got {y.shape}")
    total = np.zeros(y.shape[:-1])
    for sigma in itertools.permutations(range(m)):
        total = total + np.asarray(fc.envelope(y[..., sigma]), dtype=float)
    out = (kappa ** m) * total
    return float(out) if np.ndim(out) == 0 else out


def conditional_moment_estimate(fc, dgp, p, x_grid, mc_reps, seed):
    """Monte Carlo estimate of mu_p = sup over the grid of E[F^p(Y) | X = x].

    The theoretical sup runs over all of R^m; restricting it to a user grid
    is reported by the caller, not hidden here.
    """
    if mc_reps < 1000:
        raise ValueError("mc_reps must be >= 1000")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    best = -np.inf
    for x in x_grid:
        x = np.asarray(x, dtype=float)
        ys = np.empty((mc_reps, fc.m))
        for j in range(fc.m):
            ys[:, j] = dgp.simulate_y_given_x(np.full(mc_reps, x[j]), rng)
        fvals = np.asarray(fc.envelope(ys), dtype=float)
        best = max(best, float(np.mean(fvals ** p)))
    return best
