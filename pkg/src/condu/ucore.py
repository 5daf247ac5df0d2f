"""U-statistics over ordered tuples of distinct indices.

Three evaluation paths for the kernel-weighted U-statistics: a brute-force
enumeration (the oracle), a locality-pruned path that only enumerates tuples
inside the kernel window, and a seeded incomplete-U subsampler for large n.
Exact summation (math.fsum) is used whenever the tuple count is small enough
that the brute and windowed paths must agree bit for bit.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    BruteForceBudgetExceeded,
    BudgetExceedsPopulation,
    DegenerateSample,
    SchemaError,
)
from .function_class import FunctionSpec
from .kernels import Kernel1D

BRUTE_TUPLE_BUDGET = 10 ** 8
# below this window-tuple count the pruned path uses exact summation and is
# bit-identical to the brute path; above it, vectorized pairwise summation
# (agreement within 1e-12 relative)
EXACT_PATH_MAX = 400
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class Sample:
    """Paired observations (x_i, y_i), immutable, with a cached stable sort."""

    x: np.ndarray
    y: np.ndarray
    _sort_index: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape or x.size < 1:
            raise SchemaError("sample needs two equal-length nonempty columns")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            bad = int(np.argmax(~(np.isfinite(x) & np.isfinite(y))))
            raise SchemaError(f"non-finite sample entry at row {bad + 1}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        x.setflags(write=False)
        y.setflags(write=False)
        # ties broken by original index: stable sort keeps enumeration
        # reproducible
        object.__setattr__(self, "_sort_index", np.argsort(x, kind="stable"))

    @property
    def n(self):
        return self.x.size

    @property
    def sort_index(self):
        return self._sort_index


@dataclass(frozen=True)
class UKernelSpec:
    """The U-kernel g(y) * prod_j h^{-1} K((t_j - x_j)/h)."""

    g: FunctionSpec
    h: float
    t: tuple
    kernel: Kernel1D

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))
        if len(self.t) != self.g.m:
            raise SchemaError(
                f"t has length {len(self.t)} but g takes {self.g.m} arguments"
            )

    @property
    def m(self):
        return self.g.m


@dataclass(frozen=True)
class UStatResult:
    value: float
    tuples_evaluated: int
    tuples_total: int
    mode: str


def count_indices(n, k):
    """|I_n^k| = n! / (n-k)!, or 0 when k > n."""
    if k > n:
        return 0
    return math.perm(n, k)


def ukernel_scalar(spec):
    """Scalar evaluator H(xs, ys) for a UKernelSpec; used by exact paths."""
    g, h, t, kern = spec.g, spec.h, spec.t, spec.kernel
    m = spec.m
    half = h / 2.0

    def H(xs, ys):
        w = 1.0
        for j in range(m):
            z = t[j] - xs[j]
            if abs(z) > half:
                return 0.0
            w *= float(kern.eval(np.float64(z / h))) / h
        return float(g.eval(np.asarray(ys, dtype=float))) * w

    return H


def u_stat_brute(H, s, k):
    """Complete U-statistic by lexicographic enumeration with exact summation.

    H is a scalar callable H(xs, ys) of two length-k tuples.
    """
    n = s.n
    if k > n:
        raise DegenerateSample(f"order k={k} exceeds sample size n={n}")
    total = count_indices(n, k)
    if n ** k > BRUTE_TUPLE_BUDGET:
        raise BruteForceBudgetExceeded(
            f"n^k = {n ** k} exceeds the brute-force budget; "
            "use u_stat_windowed or incomplete_u"
        )
    x, y = s.x, s.y
    terms = (
        H(tuple(x[list(idx)]), tuple(y[list(idx)]))
        for idx in itertools.permutations(range(n), k)
    )
    value = math.fsum(terms) / total
    return UStatResult(value, total, total, "brute")


def _windows(spec, s):
    """Per-coordinate original-index windows |t_j - x_i| <= h/2.

    Bounds are widened by a few ulps so no tuple that evaluates nonzero can
    be missed to floating rounding; extra boundary points contribute exact
    zeros.
    """
    order = s.sort_index
    xs = s.x[order]
    half = spec.h / 2.0
    out = []
    for tj in spec.t:
        lo_val, hi_val = tj - half, tj + half
        for _ in range(4):
            lo_val = np.nextafter(lo_val, -np.inf)
            hi_val = np.nextafter(hi_val, np.inf)
        lo = np.searchsorted(xs, lo_val, side="left")
        hi = np.searchsorted(xs, hi_val, side="right")
        out.append(order[lo:hi])
    return out


def _weights(spec, s, idx, j):
    z = spec.t[j] - s.x[idx]
    w = np.where(np.abs(z) <= spec.h / 2.0, spec.kernel.eval(z / spec.h) / spec.h, 0.0)
    return w


def _pairs_eval(g, y1, y2):
    a, b = np.broadcast_arrays(y1[:, None], y2[None, :])
    return g.eval(np.stack([a, b], axis=-1))


def u_stat_windowed(spec, s, sorted_index=None):
    """Locality-pruned complete U-statistic, equal to u_stat_brute.

    Only tuples whose every coordinate lies inside the closed kernel window
    are enumerated; the distinct-index constraint is enforced during the
    Cartesian enumeration.
    """
    m, n = spec.m, s.n
    if m > n:
        raise DegenerateSample(f"order m={m} exceeds sample size n={n}")
    total = count_indices(n, m)
    wins = _windows(spec, s)
    sizes = [w.size for w in wins]
    window_tuples = int(np.prod([float(sz) for sz in sizes]))
    if min(sizes) == 0:
        return UStatResult(0.0, 0, total, "windowed")

    if window_tuples <= EXACT_PATH_MAX:
        H = ukernel_scalar(spec)
        x, y = s.x, s.y
        terms = []
        evaluated = 0
        for idx in itertools.product(*wins):
            if len(set(idx)) != m:
                continue
            evaluated += 1
            terms.append(H(tuple(x[list(idx)]), tuple(y[list(idx)])))
        value = math.fsum(terms) / total
        return UStatResult(value, evaluated, total, "windowed")

    weights = [_weights(spec, s, wins[j], j) for j in range(m)]
    y = s.y
    if m == 1:
        acc = float(np.dot(spec.g.eval(y[wins[0]][:, None]), weights[0]))
        evaluated = sizes[0]
    elif m == 2:
        G = _pairs_eval(spec.g, y[wins[0]], y[wins[1]])
        acc = float(weights[0] @ (G @ weights[1]))
        common, i1, i2 = np.intersect1d(wins[0], wins[1], return_indices=True)
        if common.size:
            diag = spec.g.eval(np.stack([y[common], y[common]], axis=-1))
            acc -= float(np.sum(diag * weights[0][i1] * weights[1][i2]))
        evaluated = sizes[0] * sizes[1] - common.size
    elif m == 3:
        acc = 0.0
        evaluated = 0
        w23 = np.outer(weights[1], weights[2])
        neq23 = wins[1][:, None] != wins[2][None, :]
        chunk = max(1, _CHUNK_ELEMENTS // max(1, sizes[1] * sizes[2]))
        for lo in range(0, sizes[0], chunk):
            hi = min(lo + chunk, sizes[0])
            i1 = wins[0][lo:hi]
            mask = (
                neq23[None, :, :]
                & (i1[:, None, None] != wins[1][None, :, None])
                & (i1[:, None, None] != wins[2][None, None, :])
            )
            a = np.broadcast_to(y[i1][:, None, None], mask.shape)
            b = np.broadcast_to(y[wins[1]][None, :, None], mask.shape)
            c = np.broadcast_to(y[wins[2]][None, None, :], mask.shape)
            G = spec.g.eval(np.stack([a, b, c], axis=-1))
            acc += float(
                np.sum(G * mask * weights[0][lo:hi, None, None] * w23[None, :, :])
            )
            evaluated += int(np.sum(mask))
    else:
        raise BruteForceBudgetExceeded(
            f"windowed vectorized path supports m <= 3; window has "
            f"{window_tuples} tuples for m={m}"
        )
    return UStatResult(acc / total, evaluated, total, "windowed")


def symmetrize(H, m):
    """Average of H over all joint permutations of its (x, y) argument pairs."""
    perms = list(itertools.permutations(range(m)))
    fact = float(len(perms))

    def Hbar(xs, ys):
        return math.fsum(
            H(tuple(xs[i] for i in sig), tuple(ys[i] for i in sig)) for sig in perms
        ) / fact

    return Hbar


def u_process(spec, s, expected):
    """sqrt(n) (U_n(g, h, t) - expected), with U_n from the windowed path."""
    res = u_stat_windowed(spec, s)
    return math.sqrt(s.n) * (res.value - expected)


def _unrank_tuples(ranks, n, m):
    """Map ranks in [0, n!/(n-m)!) to ordered tuples of distinct indices."""
    ranks = np.asarray(ranks, dtype=np.int64)
    digits = np.empty((ranks.size, m), dtype=np.int64)
    rem = ranks.copy()
    for k in range(m - 1, -1, -1):
        base = n - k
        digits[:, k] = rem % base
        rem //= base
    idx = np.empty_like(digits)
    idx[:, 0] = digits[:, 0]
    for k in range(1, m):
        cur = digits[:, k].copy()
        priors = np.sort(idx[:, :k], axis=1)
        for c in range(k):
            cur += cur >= priors[:, c]
        idx[:, k] = cur
    return idx


def incomplete_u(spec, s, budget, seed):
    """Incomplete U-statistic over `budget` tuples sampled without replacement.

    Uses a counter-based generator keyed by the seed, so the draw is a pure
    function of (seed, n, m, budget).
    """
    m, n = spec.m, s.n
    if m > n:
        raise DegenerateSample(f"order m={m} exceeds sample size n={n}")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    total = count_indices(n, m)
    if budget > total:
        raise BudgetExceedsPopulation(
            f"budget {budget} exceeds population {total}"
        )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    ranks = rng.choice(total, size=budget, replace=False)
    idx = _unrank_tuples(ranks, n, m)

    ys = s.y[idx]
    gvals = np.asarray(spec.g.eval(ys), dtype=float)
    w = np.ones(budget)
    for j in range(m):
        w *= _weights(spec, s, idx[:, j], j)
    value = float(np.mean(gvals * w))
    return UStatResult(value, budget, total, "incomplete")


def read_sample_csv(path):
    """Read a sample from CSV with header ``x,y``; row-numbered errors."""
    xs, ys = [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "x,y":
            raise SchemaError(f"sample CSV must have header 'x,y', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise SchemaError(f"sample CSV row {lineno}: missing value")
            try:
                xv, yv = float(parts[0]), float(parts[1])
            except ValueError:
                raise SchemaError(
                    f"sample CSV row {lineno}: non-numeric entry"
                ) from None
            if not (math.isfinite(xv) and math.isfinite(yv)):
                raise SchemaError(f"sample CSV row {lineno}: non-finite entry")
            xs.append(xv)
            ys.append(yv)
    if not xs:
        raise SchemaError("sample CSV has no data rows")
    return Sample(np.array(xs), np.array(ys))


def write_sample_csv(path, s):
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for xv, yv in zip(s.x, s.y):
            fh.write(f"{xv:.17g},{yv:.17g}\n")
