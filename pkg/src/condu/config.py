"""JSON experiment configs: one self-describing document per run.

Sections: dgp, kernel, function_class, regime, grids, experiment. The parsed
config keeps the raw dict alongside the built objects so every output
directory can echo exactly what was run.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

from .bandwidth import RateRegime
from .errors import SchemaError
from .estimator import DgpSpec, make_dgp
from .function_class import (
    Bounded,
    FunctionClass,
    Unbounded,
    builtin_member,
    make_function_class,
    polynomial_member,
)
from .kernels import Kernel1D, get_kernel, load_table_kernel


@dataclass(frozen=True)
class ExperimentConfig:
    dgp: DgpSpec
    fc: FunctionClass
    kernel: Kernel1D
    regime: RateRegime
    n_list: tuple
    reps: int
    t_interval: tuple
    t_points: int
    bn_rule: str  # "fixed" | "decaying"
    seed: int
    epsilon: float = 1.0
    quad_order: int = 64
    raw: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.fc.m


def _require(section, key, where):
    if key not in section:
        raise SchemaError(f"missing field '{key}' in config section '{where}'")
    return section[key]


def parse_config(doc):
    """Build an ExperimentConfig from a config dict (already JSON-decoded)."""
    if not isinstance(doc, dict):
        raise SchemaError("config must be a JSON object")
    for section in ("dgp", "kernel", "function_class", "regime", "grids", "experiment"):
        if section not in doc:
            raise SchemaError(f"missing config section '{section}'")

    d = doc["dgp"]
    dgp = make_dgp(
        _require(d, "id", "dgp"),
        noise_kind=d.get("noise", "none"),
        noise_param=float(d.get("noise_param", 0.0)),
    )

    k = doc["kernel"]
    if "table" in k:
        kernel = load_table_kernel(k["table"], kappa=k.get("kappa"))
    else:
        kernel = get_kernel(_require(k, "id", "kernel"))

    f = doc["function_class"]
    m = int(_require(f, "m", "function_class"))
    members = []
    for spec in _require(f, "members", "function_class"):
        if isinstance(spec, str):
            members.append(builtin_member(spec, m))
        elif isinstance(spec, dict) and "poly" in spec:
            members.append(polynomial_member(spec.get("id", "poly"), m, spec["poly"]))
        else:
            raise SchemaError(f"unrecognized function member spec {spec!r}")
    rg = _require(f, "regime", "function_class")
    kind = _require(rg, "kind", "function_class.regime")
    if kind == "bounded":
        regime_fc = Bounded(M=float(_require(rg, "M", "function_class.regime")))
    elif kind == "unbounded":
        regime_fc = Unbounded(
            p=float(_require(rg, "p", "function_class.regime")),
            mu_p=rg.get("mu_p"),
        )
    else:
        raise SchemaError(f"unknown regime kind {kind!r}")
    fc = make_function_class(members, regime_fc)

    r = doc["regime"]
    rate = RateRegime(
        kind=kind,
        c=float(_require(r, "c", "regime")),
        m=m,
        b0=float(_require(r, "b0", "regime")),
        p=regime_fc.p if kind == "unbounded" else None,
    )

    g = doc["grids"]
    interval = tuple(float(v) for v in _require(g, "interval", "grids"))
    if len(interval) != 2 or interval[0] >= interval[1]:
        raise SchemaError("grids.interval must be [c, d] with c < d")
    bn_rule = g.get("bn_rule", "fixed")
    if bn_rule not in ("fixed", "decaying"):
        raise SchemaError(f"unknown bn_rule {bn_rule!r}")

    e = doc["experiment"]
    n_list = tuple(int(v) for v in _require(e, "n_list", "experiment"))
    if list(n_list) != sorted(n_list):
        raise SchemaError("experiment.n_list must be ascending")

    return ExperimentConfig(
        dgp=dgp,
        fc=fc,
        kernel=kernel,
        regime=rate,
        n_list=n_list,
        reps=int(e.get("reps", 1)),
        t_interval=interval,
        t_points=int(g.get("points_per_axis", 21)),
        bn_rule=bn_rule,
        seed=int(e.get("seed", 0)),
        epsilon=float(e.get("epsilon", 1.0)),
        quad_order=int(g.get("quad_order", 64)),
        raw=doc,
    )


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}") from None
    return parse_config(doc)
