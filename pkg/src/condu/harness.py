"""Monte Carlo harness: bandwidth-sweep experiments with deterministic output.

Every random draw is keyed by (master seed, n, rep) through a counter-based
generator, rows are canonically sorted, and floats are serialized with 17
significant digits, so two runs of the same config produce byte-identical
files regardless of thread count.
"""

import itertools
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import gamma_threshold, lower_bandwidth, normalizer
from .errors import BoundedClassHasNoRemainder, EmptyBandwidthRange
from .estimator import expected_u, expected_u_one, true_regression
from .errors import NoClosedFormConditional
from .function_class import Bounded, FunctionSpec, builtin_member, envelope_tilde
from .ucore import Sample, UKernelSpec, u_stat_windowed


def child_seed(master, *key):
    """Independent per-task stream: a spawn key derived from integer labels."""
    return np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))


def simulate(dgp, n, seed):
    """Draw a sample of size n from the data-generating process.

    `seed` may be an int or a SeedSequence; the generator is counter-based so
    the draw is a pure function of the seed.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    rng = np.random.Generator(np.random.Philox(seed))
    x = np.asarray(dgp.sample_x(rng, n), dtype=float)
    y = dgp.simulate_y_given_x(x, rng)
    return Sample(x, y)


def make_t_grid(interval, points, m):
    """Tensor grid of evaluation points over interval^m."""
    lo, hi = interval
    axis = np.linspace(lo, hi, points)
    return tuple(itertools.product(*([tuple(axis)] * m)))


def bandwidth_cap(cfg, n):
    """Upper end of the sweep: fixed b0, or b0 / log n under the decaying rule."""
    if cfg.bn_rule == "fixed":
        return cfg.regime.b0
    return cfg.regime.b0 / math.log(n)


def bandwidths(cfg, n):
    """Dyadic sweep grid anchored at the rate lower bound for this n:
    h_j^m = 2^j a_n^m while h_j stays below the cap."""
    m = cfg.m
    a = lower_bandwidth(cfg.regime, n)
    cap = bandwidth_cap(cfg, n)
    if a > cap * (1.0 + 1e-12):
        raise EmptyBandwidthRange(
            f"rate anchor {a:.6g} exceeds the bandwidth cap {cap:.6g} at n={n}"
        )
    hs = [a]
    j = 1
    while True:
        hj = (2.0 ** j * a ** m) ** (1.0 / m)
        if hj > cap * (1.0 + 1e-12):
            break
        hs.append(hj)
        j += 1
    return tuple(hs)


@dataclass(frozen=True)
class DeviationRow:
    stat: str  # "process" | "est_centering" | "est_truth"
    n: int
    rep: int
    h: float
    t: tuple
    phi: str
    raw: float
    normalized: float
    status: str

    @property
    def sort_key(self):
        return (self.stat, self.n, self.rep, self.h, self.t, self.phi)


def expectation_cache(cfg, n, hs, tgrid):
    """Population quantities shared by every replication at this n.

    Keys: ("EU1", h, t) for the denominator, ("EU", phi, h, t) for numerators,
    ("m", phi, t) for the closed-form regression (None when unavailable).
    """
    cache = {}
    for t in tgrid:
        for phi in cfg.fc.members:
            try:
                cache[("m", phi.id, t)] = float(
                    true_regression(cfg.dgp, phi, np.asarray(t))
                )
            except NoClosedFormConditional:
                cache[("m", phi.id, t)] = None
    for h in hs:
        for t in tgrid:
            cache[("EU1", h, t)] = expected_u_one(
                cfg.dgp, cfg.m, cfg.kernel, h, t, cfg.quad_order
            )
            for phi in cfg.fc.members:
                cache[("EU", phi.id, h, t)] = expected_u(
                    cfg.dgp, phi, cfg.kernel, h, t, cfg.quad_order
                )
    return cache


def sweep_cells(cfg, s, n, rep, hs, tgrid, cache):
    """One replication: every (h, t, phi) cell, three deviation statistics.

    "process" compares the raw kernel-weighted U-statistic to its expectation;
    "est_centering" compares the ratio estimate to its population centering;
    "est_truth" compares it to the closed-form regression function. The
    normalized column applies sqrt(n h^m / (|log h| v loglog n)) to the raw
    deviation for every statistic; consistency summaries use the raw column.
    """
    rows = []
    one = builtin_member("one", cfg.m)
    for h in hs:
        norm = normalizer(n, h, cfg.m)
        for t in tgrid:
            den = u_stat_windowed(UKernelSpec(one, h, t, cfg.kernel), s).value
            eu1 = cache[("EU1", h, t)]
            raw1 = abs(den - eu1)
            rows.append(
                DeviationRow("process", n, rep, h, t, "one", raw1, norm * raw1, "ok")
            )
            if den > 0.0:
                status = "ok"
            elif den == 0.0:
                status = "empty_window"
            else:
                status = "nonpositive_denominator"
            for phi in cfg.fc.members:
                num = u_stat_windowed(UKernelSpec(phi, h, t, cfg.kernel), s).value
                eu = cache[("EU", phi.id, h, t)]
                raw = abs(num - eu)
                rows.append(
                    DeviationRow("process", n, rep, h, t, phi.id, raw, norm * raw, "ok")
                )
                if status != "ok":
                    nan = float("nan")
                    rows.append(
                        DeviationRow(
                            "est_centering", n, rep, h, t, phi.id, nan, nan, status
                        )
                    )
                    rows.append(
                        DeviationRow("est_truth", n, rep, h, t, phi.id, nan, nan, status)
                    )
                    continue
                mhat = num / den
                cent = eu / eu1
                raw2 = abs(mhat - cent)
                rows.append(
                    DeviationRow(
                        "est_centering", n, rep, h, t, phi.id, raw2, norm * raw2, "ok"
                    )
                )
                truth = cache[("m", phi.id, t)]
                if truth is not None:
                    raw3 = abs(mhat - truth)
                    rows.append(
                        DeviationRow(
                            "est_truth", n, rep, h, t, phi.id, raw3, norm * raw3, "ok"
                        )
                    )
    return rows


def _sup(rows, stat, n, rep, field="normalized"):
    vals = [
        getattr(r, field)
        for r in rows
        if r.stat == stat and r.n == n and r.rep == rep and r.status == "ok"
    ]
    return max(vals) if vals else float("nan")


def bias_from_cache(cfg, hs, tgrid, cache):
    """max over members, bandwidths and grid points of |centering - truth|,
    reusing the cached convolutions."""
    worst = 0.0
    for phi in cfg.fc.members:
        for h in hs:
            for t in tgrid:
                truth = cache[("m", phi.id, t)]
                eu1 = cache[("EU1", h, t)]
                if truth is None or eu1 <= 1e-14:
                    continue
                worst = max(worst, abs(cache[("EU", phi.id, h, t)] / eu1 - truth))
    return worst


def bias_at_cap(cfg, n, tgrid):
    """|centering - truth| maximized over members and grid at the cap
    bandwidth b_n itself, where the bias over [a_n, b_n] peaks."""
    cap = bandwidth_cap(cfg, n)
    worst = 0.0
    for phi in cfg.fc.members:
        eu1 = {
            t: expected_u_one(cfg.dgp, cfg.m, cfg.kernel, cap, t, cfg.quad_order)
            for t in tgrid
        }
        for t in tgrid:
            try:
                truth = float(true_regression(cfg.dgp, phi, np.asarray(t)))
            except NoClosedFormConditional:
                continue
            if eu1[t] <= 1e-14:
                continue
            eu = expected_u(cfg.dgp, phi, cfg.kernel, cap, t, cfg.quad_order)
            worst = max(worst, abs(eu / eu1[t] - truth))
    return worst


def remainder_member(phi, fc, kappa, threshold):
    """phi gated to the region where the symmetrized envelope exceeds the
    truncation level; its U-statistic is the remainder term of the split."""

    def _eval(y, _phi=phi, _fc=fc, _k=kappa, _thr=threshold):
        base = np.asarray(_phi.eval(y), dtype=float)
        ft = np.asarray(envelope_tilde(_fc, _k, y), dtype=float)
        return base * (ft > _thr)

    return FunctionSpec(f"{phi.id}|remainder", _eval, phi.m)


def remainder_diagnostic(cfg, ell, rep=0, mc_draws=50_000, p=None):
    """Normalized supremum of the truncation-remainder U-process at block ell.

    Works at the block sample size n = 2^ell with the truncation level
    eps * (n / log n)^{1/p}. The expectation of the remainder U-statistic has
    no closed form, so it is estimated by shared Monte Carlo draws; the
    returned mc_se quantifies that error at the supremum cell.
    """
    m = cfg.m
    if p is None:
        p = getattr(cfg.fc.regime, "p", None)
    if isinstance(cfg.fc.regime, Bounded):
        bound = (cfg.kernel.kappa ** m) * math.factorial(m) * cfg.fc.regime.M
        if p is None:
            raise BoundedClassHasNoRemainder(
                "bounded class: supply p explicitly to form a truncation level"
            )
        _, threshold = gamma_threshold(ell, cfg.epsilon, p)
        if threshold >= bound:
            raise BoundedClassHasNoRemainder(
                f"truncation level {threshold:.6g} >= envelope bound {bound:.6g}; "
                "the remainder is identically zero for this bounded class"
            )
    else:
        _, threshold = gamma_threshold(ell, cfg.epsilon, p)

    n = 2 ** ell
    hs = bandwidths(cfg, n)
    tgrid = make_t_grid(cfg.t_interval, cfg.t_points, m)
    s = simulate(cfg.dgp, n, child_seed(cfg.seed, n, rep, 1))
    members = [
        remainder_member(phi, cfg.fc, cfg.kernel.kappa, threshold)
        for phi in cfg.fc.members
    ]

    # shared Monte Carlo draws for every cell's expectation
    rng = np.random.Generator(np.random.Philox(child_seed(cfg.seed, n, rep, 2)))
    xs = np.asarray(cfg.dgp.sample_x(rng, mc_draws * m), dtype=float).reshape(
        mc_draws, m
    )
    ys = cfg.dgp.simulate_y_given_x(xs.ravel(), rng).reshape(mc_draws, m)
    gated = {
        g.id: np.asarray(g.eval(ys), dtype=float) for g in members
    }

    sup_val, sup_se, cells = 0.0, 0.0, []
    for h in hs:
        norm = normalizer(n, h, m)
        for t in tgrid:
            w = np.ones(mc_draws)
            for j in range(m):
                z = t[j] - xs[:, j]
                inside = np.abs(z) <= h / 2.0
                w *= np.where(inside, cfg.kernel.eval(z / h) / h, 0.0)
            for g in members:
                u = u_stat_windowed(UKernelSpec(g, h, t, cfg.kernel), s).value
                samples = gated[g.id] * w
                eu = float(np.mean(samples))
                se = float(np.std(samples, ddof=1)) / math.sqrt(mc_draws)
                dev = norm * abs(u - eu)
                cells.append(
                    {"phi": g.id, "h": h, "t": list(t), "dev": dev, "mc_se": norm * se}
                )
                if dev > sup_val:
                    sup_val, sup_se = dev, norm * se
    return {
        "ell": ell,
        "n": n,
        "threshold": threshold,
        "sup_normalized": sup_val,
        "mc_se_at_sup": sup_se,
        "cells": cells,
    }


@dataclass(frozen=True)
class RateReport:
    per_n: dict
    rows: tuple
    config: dict = field(default_factory=dict)


def rate_experiment(cfg, out_dir=None, threads=1, include_remainder=False):
    """Full sweep over n_list x reps x bandwidths x grid x members.

    Returns a RateReport; when out_dir is given also writes deviations.csv,
    report.json and config_echo.json atomically. Output bytes are independent
    of `threads`.
    """
    tgrid = make_t_grid(cfg.t_interval, cfg.t_points, cfg.m)
    all_rows = []
    per_n = {}
    for n in cfg.n_list:
        hs = bandwidths(cfg, n)
        cache = expectation_cache(cfg, n, hs, tgrid)

        def _one_rep(rep, _n=n, _hs=hs, _cache=cache):
            s = simulate(cfg.dgp, _n, child_seed(cfg.seed, _n, rep))
            return sweep_cells(cfg, s, _n, rep, _hs, tgrid, _cache)

        reps = range(cfg.reps)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                chunks = list(pool.map(_one_rep, reps))
        else:
            chunks = [_one_rep(r) for r in reps]
        n_rows = [row for chunk in chunks for row in chunk]
        all_rows.extend(n_rows)

        entry = {
            "anchor": lower_bandwidth(cfg.regime, n),
            "cap": bandwidth_cap(cfg, n),
            "bandwidths": list(hs),
            "bias_sup": max(
                bias_from_cache(cfg, hs, tgrid, cache), bias_at_cap(cfg, n, tgrid)
            ),
            "cells_total": len(n_rows),
            "cells_ok": sum(1 for r in n_rows if r.status == "ok"),
        }
        summaries = {
            "sup_normalized_process": ("process", "normalized"),
            "sup_normalized_estimator": ("est_centering", "normalized"),
            "sup_consistency": ("est_truth", "raw"),
        }
        for key, (stat, fieldname) in summaries.items():
            sups = [_sup(n_rows, stat, n, rep, fieldname) for rep in range(cfg.reps)]
            entry[f"{key}_per_rep"] = sups
            finite = [v for v in sups if not math.isnan(v)]
            entry[key] = max(finite) if finite else float("nan")
            entry[f"{key}_mean"] = float(np.mean(finite)) if finite else float("nan")
        if include_remainder and not isinstance(cfg.fc.regime, Bounded):
            ell = max(2, math.ceil(math.log2(n)))
            diag = remainder_diagnostic(cfg, ell)
            entry["remainder_sup"] = diag["sup_normalized"]
            entry["remainder"] = {
                k: diag[k] for k in ("ell", "n", "threshold", "sup_normalized",
                                     "mc_se_at_sup")
            }
        per_n[n] = entry

    all_rows.sort(key=lambda r: r.sort_key)
    report = RateReport(per_n=per_n, rows=tuple(all_rows), config=cfg.raw)
    if out_dir is not None:
        write_outputs(report, cfg, out_dir)
    return report


def _fmt(x):
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return "%.17g" % x


def atomic_write(path, text):
    """Write via a temp file in the same directory, then rename into place."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def deviations_csv_text(report, m):
    tcols = ",".join(f"t_{j + 1}" for j in range(m))
    lines = [f"stat,n,rep,h,{tcols},phi,raw_dev,normalized_dev,status"]
    for r in report.rows:
        ts = ",".join(_fmt(v) for v in r.t)
        lines.append(
            f"{r.stat},{r.n},{r.rep},{_fmt(r.h)},{ts},{r.phi},"
            f"{_fmt(r.raw)},{_fmt(r.normalized)},{r.status}"
        )
    return "\n".join(lines) + "\n"


def write_outputs(report, cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    atomic_write(
        os.path.join(out_dir, "deviations.csv"), deviations_csv_text(report, cfg.m)
    )
    doc = {"per_n": {str(n): v for n, v in report.per_n.items()}}
    atomic_write(
        os.path.join(out_dir, "report.json"),
        json.dumps(doc, indent=2, sort_keys=True) + "\n",
    )
    atomic_write(
        os.path.join(out_dir, "config_echo.json"),
        json.dumps(report.config, indent=2, sort_keys=True) + "\n",
    )
