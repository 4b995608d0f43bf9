"""Command dispatch, configuration resolution, and report emission.

Configuration comes from an optional key=value file plus flags; flags win.
Every output embeds the fully resolved configuration and its hash, so a run
is reproducible from its own header.  Exit codes: 0 success, 1 validation
error, 2 budget-flagged variance runs, 3 resource caps.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import (
    DivergentIntegralError,
    ResourceCapError,
    SieveLabError,
    ValidationError,
)
from .experiment import (
    coverage_scan,
    exceptional_measure,
    squarefull_window_measure,
    trend_scan,
)
from .expsums import fourier_coefficient, kloosterman_incomplete, weil_sweep
from .params import SieveParams
from .theory import main_term_constant, sieve_main_term
from .variance import dispersion_bracket_probe, variance_decomposition
from .weights import build_weight_family, sandwich_sweep, write_weights_csv
from .windows import smooth_window

COMMANDS = ("constant", "weights", "sandwich", "kloosterman", "gamma",
            "variance", "dispersion", "census", "corollary", "trend")

_PARAM_FIELDS = {
    "x": float, "length": int, "q": int, "residue": int, "eps": float,
    "kappa": float, "level_d": float, "z": float, "y": float,
    "w_level": float, "level_e": float, "beta": int, "eta": float,
}
_GLOBAL_FIELDS = {
    "out": str, "format": str, "seed": int, "workers": int,
    "budget_constant": float, "y_big": int, "resolution": int,
    "support_cap": int, "table_limit": int,
}
_COMMAND_FIELDS = {
    "p_max": int, "a": int, "b": int, "c": int, "d": int, "lam": float,
    "truncation": int, "limit_mode": str, "n_max": int, "configs": int,
    "threshold_coef": float, "psi": float, "density_grid": str,
    "m1": int, "n1": int, "m2": int, "n2": int, "e": int, "e2": int,
    "delta": int, "x_limit": float, "window": str,
}
_ALL_FIELDS = {**_PARAM_FIELDS, **_GLOBAL_FIELDS, **_COMMAND_FIELDS}

_DEFAULTS = {
    "format": "json", "seed": 1, "workers": 1, "budget_constant": 10.0,
    "y_big": 1_000_000, "resolution": 4096, "support_cap": 2_000_000,
    "table_limit": 2_000_000,
}


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def resolved(self) -> dict:
        return {"command": self.command,
                "values": {k: self.values[k] for k in sorted(self.values)},
                "provenance": {k: self.provenance[k] for k in sorted(self.provenance)}}

    def hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _parse_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value",
                                      fields=("config",))
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _ALL_FIELDS:
                raise ValidationError(f"{path}:{lineno}: unknown key '{key}'",
                                      fields=(key,))
            try:
                out[key] = _ALL_FIELDS[key](val.strip())
            except ValueError:
                raise ValidationError(
                    f"{path}:{lineno}: bad value for '{key}'", fields=(key,)
                ) from None
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # map argparse failures onto exit code 1
        raise ValidationError(message, fields=("argv",))


def parse_config(argv: list[str]) -> RunConfig:
    """Resolve command, defaults, config file, and flag overrides (flags win)."""
    parser = _Parser(prog="sievelab", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key=value configuration file")
    for key, typ in _ALL_FIELDS.items():
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, type=typ)
    ns = parser.parse_args(argv)

    values = dict(_DEFAULTS)
    provenance = {k: "default" for k in values}
    if ns.config:
        for k, v in _parse_config_file(ns.config).items():
            values[k] = v
            provenance[k] = "config"
    for key in _ALL_FIELDS:
        flag_val = getattr(ns, key, None)
        if flag_val is not None:
            values[key] = flag_val
            provenance[key] = "flag"
    if values.get("format") not in ("csv", "json", "jsonl"):
        raise ValidationError(f"unknown format {values.get('format')}",
                              fields=("format",))
    return RunConfig(ns.command, values, provenance)


def _sieve_params(cfg: RunConfig) -> SieveParams:
    overrides = {k: cfg.values[k] for k in _PARAM_FIELDS if k in cfg.values}
    return SieveParams.desk(**overrides)


def _header(cfg: RunConfig) -> dict:
    return {"tool": "sievelab", "version": __version__,
            "config_hash": cfg.hash(), "config": cfg.resolved()}


def emit_report(result, cfg: RunConfig) -> int:
    """Write the report per the io settings; returns the exit code."""
    fmt = cfg.get("format")
    out_path = cfg.get("out")
    header = _header(cfg)
    code = result.pop("exit_code", 0) if isinstance(result, dict) else 0

    if fmt == "json":
        payload = json.dumps({**header, "result": result}, indent=2, sort_keys=True,
                             default=str)
        _write_text(payload + "\n", out_path)
    elif fmt == "jsonl":
        lines = [json.dumps(header, sort_keys=True, default=str)]
        rows = result.get("rows", []) if isinstance(result, dict) else result
        lines += [json.dumps(r, sort_keys=True, default=str) for r in rows]
        _write_text("\n".join(lines) + "\n", out_path)
    else:
        rows = result.get("rows", []) if isinstance(result, dict) else result
        columns = result.get("columns") if isinstance(result, dict) else None
        text_rows = [f"# {json.dumps(header, sort_keys=True)}"]
        if out_path is None:
            raise ValidationError("csv output requires --out", fields=("out",))
        with open(out_path, "w", newline="") as fh:
            fh.write(text_rows[0] + "\n")
            writer = csv.writer(fh)
            if columns:
                writer.writerow(columns)
            writer.writerows(rows)
    return code


def _write_text(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _run_constant(cfg: RunConfig) -> dict:
    report = main_term_constant(
        kappa=cfg.get("kappa", SieveParams.desk().kappa),
        resolution=cfg.get("resolution"),
        limit_mode=cfg.get("limit_mode", "derived"),
    )
    params = _sieve_params(cfg)
    family = build_weight_family(params, cap=cfg.get("support_cap"))
    m = sieve_main_term(family.lower, family.correction, params.q,
                        support_cap=cfg.get("support_cap"))
    full = report.to_json_dict()
    full["M_value"] = float(m.value)
    full["V_z"] = float(m.v_z)
    full["M_over_V"] = m.ratio_to_v
    return full


def _run_weights(cfg: RunConfig) -> dict:
    params = _sieve_params(cfg)
    family = build_weight_family(params, cap=cfg.get("support_cap"))
    systems = [family.linear.upper, family.linear.lower, family.small.upper,
               family.small.lower, family.lower, family.correction]
    systems += [family.upper_by_scale[p] for p in sorted(family.upper_by_scale)]
    if cfg.get("format") == "csv":
        rows = []
        for system in systems:
            kind = system.kind if system.scale is None else f"{system.kind}[{system.scale}]"
            rows += [(d, kind, system.entries[d]) for d in system.support()]
        return {"rows": rows, "columns": ["d", "kind", "value"]}
    return {
        "support_sizes": {
            (s.kind if s.scale is None else f"{s.kind}[{s.scale}]"): len(s.entries)
            for s in systems
        },
        "scales": sorted(family.upper_by_scale),
    }


def _run_sandwich(cfg: RunConfig) -> dict:
    params = _sieve_params(cfg)
    family = build_weight_family(params, cap=cfg.get("support_cap"))
    n_max = cfg.get("n_max", 1_000_000)
    failures = sandwich_sweep(n_max, family.lower, family.upper_by_scale, params)
    return {"n_max": n_max, "failures": {str(k): v for k, v in failures.items()},
            "ok": not any(failures.values())}


def _run_kloosterman(cfg: RunConfig) -> dict:
    if cfg.get("x_limit") is not None:
        inc = kloosterman_incomplete(cfg.get("a", 1), cfg.get("q", 101),
                                     cfg.get("d", 1), cfg.get("x_limit"))
        return {"real": inc.value.real, "imag": inc.value.imag,
                "bound_ratio": inc.bound_ratio, "terms": inc.terms}
    rows, worst, pairs = weil_sweep(cfg.get("p_max", 499),
                                    workers=cfg.get("workers"))
    return {"rows": rows, "columns": ["p", "a", "b", "magnitude", "bound", "ratio"],
            "worst_ratio": worst, "pairs_covered": pairs, "ok": worst <= 1.0}


def _run_gamma(cfg: RunConfig) -> dict:
    d = cfg.get("d", 1)
    lam = cfg.get("lam", 0.5)
    coeff = fourier_coefficient(d, lam, cfg.get("truncation"))
    exact = fourier_coefficient_exact_or_none(d, lam)
    return {"d": d, "lam": lam, "value": coeff.value, "tail_bound": coeff.tail_bound,
            "truncation": coeff.truncation, "exact": exact}


def fourier_coefficient_exact_or_none(d: int, lam: float):
    from .expsums import fourier_coefficient_exact

    frac = Fraction(lam).limit_denominator(10**9)
    if abs(float(frac) - lam) > 1e-12:
        return None
    return float(fourier_coefficient_exact(d, frac))


def _run_variance(cfg: RunConfig) -> dict:
    rng = np.random.Generator(np.random.Philox(cfg.get("seed")))
    window = smooth_window(cfg.get("window", "wide"))
    rows = []
    flagged = 0
    for _ in range(cfg.get("configs", 10)):
        q = int(rng.choice([1, 3, 5]))
        x_scale = float(rng.integers(2000, 10_001))
        length = int(rng.integers(20, 201))
        coeffs = {d: float(rng.uniform(-1.0, 1.0))
                  for d in range(1, 11) if math.gcd(d, q) == 1}
        report = variance_decomposition(
            coeffs, q, length, x_scale, window,
            budget_constant=cfg.get("budget_constant"),
            y_big=cfg.get("y_big"),
        )
        flagged += 0 if report.ok else 1
        rows.append(report.to_json_dict())
    return {"rows": rows, "flagged": flagged,
            "exit_code": 2 if flagged else 0}


def _run_dispersion(cfg: RunConfig) -> dict:
    probe = dispersion_bracket_probe(
        cfg.get("m1", 8), cfg.get("n1", 8), cfg.get("m2", 8), cfg.get("n2", 8),
        cfg.get("e", 1), cfg.get("e2", 1), cfg.get("a", 1), cfg.get("q", 5),
        cfg.get("delta", 1), cfg.get("x", 1.0e4),
        window=smooth_window(cfg.get("window", "dyadic")),
    )
    return {"quadruple_sum": probe.quadruple_sum, "paper_bound": probe.paper_bound,
            "ratio": probe.ratio, "tuples": probe.tuples}


def _census_payload(census, squarefull=None) -> dict:
    payload = {
        "q": census.q, "x": census.x_scale, "length": census.length,
        "z": census.z, "threshold": census.threshold,
        "A": census.average_density, "total": census.total,
        "normalized": census.normalized,
        "rows": sorted(census.per_class.items()),
        "columns": ["a", "measure"],
    }
    if squarefull is not None:
        payload["squarefull_total"] = squarefull.total
    return payload


def _run_census(cfg: RunConfig) -> dict:
    q = cfg.get("q", 4)
    x_scale = cfg.get("x", 1.0e4)
    length = cfg.get("length", 100)
    z = cfg.values.get("z", x_scale**0.125)
    coef = cfg.get("threshold_coef", 0.05)
    avg = length / (_phi(q) * math.log(x_scale))
    census = exceptional_measure(q, x_scale, length, z, coef * avg)
    squarefull = squarefull_window_measure(q, x_scale, length, z)
    return _census_payload(census, squarefull)


def _phi(q: int) -> int:
    from .arith import euler_phi_int

    return euler_phi_int(q)


def _run_corollary(cfg: RunConfig) -> dict:
    result = coverage_scan(cfg.get("q", 101), cfg.get("psi", 10.0))
    return {"q": result.q, "bound": result.bound, "covered": result.covered,
            "total": result.total, "fraction": result.fraction,
            "rows": sorted(result.witnesses.items()),
            "columns": ["a", "witness"]}


def _run_trend(cfg: RunConfig) -> dict:
    grid = [float(v) for v in cfg.get("density_grid", "2,4,8,16").split(",")]
    rows = trend_scan(cfg.get("q", 3), cfg.get("x", 1.0e6),
                      cfg.get("z", cfg.get("x", 1.0e6) ** 0.125),
                      cfg.get("threshold_coef", 0.05), grid)
    return {"rows": [(r.average_density, r.length, r.total_measure,
                      r.normalized, r.degenerate) for r in rows],
            "columns": ["A", "L", "total_measure", "normalized", "degenerate"]}


_RUNNERS = {
    "constant": _run_constant, "weights": _run_weights, "sandwich": _run_sandwich,
    "kloosterman": _run_kloosterman, "gamma": _run_gamma, "variance": _run_variance,
    "dispersion": _run_dispersion, "census": _run_census,
    "corollary": _run_corollary, "trend": _run_trend,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        result = _RUNNERS[cfg.command](cfg)
        return emit_report(result, cfg)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3
    except DivergentIntegralError as exc:
        print(f"divergent integral: {exc}", file=sys.stderr)
        return 1
    except SieveLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
