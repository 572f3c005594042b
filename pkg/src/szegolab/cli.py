"""Command-line driver.

    szegolab clt --config clt.json --out runs/clt --threads 4 --assert
    szegolab validate --config clt.json
    szegolab selftest --out runs/selftest

The config is a JSON object; ``--set path.to.field=value`` overrides single
fields (values are parsed as JSON when possible). Every run writes
``report.json`` plus experiment-specific CSV files into ``--out``.

Exit status: 0 success, 2 invalid configuration, 3 statistical acceptance
failure (only with ``--assert``).
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import estimators, limits, szego
from .eigen import eig_tridiagonal
from .io import SCHEMA_VERSION, write_csv, write_report
from .model import PotentialDistribution, SeedPolicy, build_hamiltonian, check_hypotheses
from .symbols import compose, symbol_from_dict

EXPERIMENTS = ("clt", "asclt", "variance", "ids", "entropy", "decay", "selftest")

EXIT_OK, EXIT_INVALID, EXIT_ASSERT = 0, 2, 3

DEFAULT_SYMBOLS = {"a": {"kind": "fermi", "beta": 3.0, "fermi_energy": 0.0},
                   "phi": {"kind": "renyi", "alpha": 2.0}}

DEFAULTS = {
    "clt": {"M": 256, "B": 64, "n": 1000, "centering": "self"},
    "asclt": {"M_max": 300, "B": 64, "grid": "auto", "intervals": [[-1.0, 1.0]], "sigma": None,
              "centering": "ensemble", "n_center": 100, "tolerance": 0.15},
    "variance": {"l_max": 50, "n_sites": 20000, "B": 40, "window": 24, "quad_nodes": 8,
                 "n_outer": 400, "n_inner": 100},
    "ids": {"M": 512, "n": 200, "energies": {"lo": -3.0, "hi": 3.0, "n": 61}},
    "entropy": {"alpha": 2.0, "beta": 3.0, "fermi_energy": 0.0, "M_list": [32, 64, 128], "B": 64, "n": 400},
    "decay": {"M": 60, "B": 64, "d_max": 60, "d_range": [5, 40], "p_list": [5, 10, 20, 40],
              "outer_half_width": 64, "n_pairs": 20},
    "selftest": {},
}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path: str | None, experiment: str, overrides=(), seed=None) -> dict:
    cfg = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ConfigError(["<root>: config must be a JSON object"])
    for item in overrides:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError([f"--set {item!r}: expected path=value"])
        _set_path(cfg, key, _parse_value(val))
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("experiment", experiment)
    return cfg


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(out.get(k), dict) and isinstance(v, dict) else v
    return out


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate(cfg: dict) -> dict:
    """Static validation. Returns ``{"ok", "errors", "warnings", "config"}`` with defaults filled in."""
    errors, warns = [], []
    kind = cfg.get("experiment")
    if kind not in EXPERIMENTS:
        return {"ok": False, "errors": [f"experiment: unknown kind {kind!r}"], "warnings": [], "config": cfg}
    full = _merge(copy.deepcopy(DEFAULTS[kind]), cfg)
    full.setdefault("dist", {"kind": "uniform", "half_width": 1.0})
    if kind in ("clt", "asclt", "variance", "decay"):
        syms = copy.deepcopy(DEFAULT_SYMBOLS)
        for name, given in dict(cfg.get("symbols") or {}).items():
            base = syms.get(name)
            # a symbol of another kind replaces the default instead of merging into it
            same = isinstance(given, dict) and isinstance(base, dict) and given.get("kind", base["kind"]) == base["kind"]
            syms[name] = _merge(base, given) if same else given
        full["symbols"] = syms
    if "seed" not in cfg:
        warns.append("seed: missing, defaulted to 0")
        full["seed"] = 0
    seed = full["seed"]
    if not _is_int(seed) or not 0 <= seed < 2**64:
        errors.append(f"seed: must be an unsigned 64-bit integer, got {seed!r}")

    if kind == "selftest":
        return {"ok": not errors, "errors": errors, "warnings": warns, "config": full}

    dist = None
    try:
        dist = PotentialDistribution.from_dict(full["dist"])
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"dist: {exc}")

    def sym(name):
        spec = full.get("symbols", {}).get(name)
        if spec is None:
            errors.append(f"symbols.{name}: missing")
            return None
        try:
            return symbol_from_dict(spec)
        except (KeyError, TypeError) as exc:
            errors.append(f"symbols.{name}: missing field {exc}")
        except ValueError as exc:
            field = next((k for k in spec if k != "kind" and k in str(exc)), None)
            errors.append(f"symbols.{name}{'.' + field if field else ''}: {exc}")
        return None

    def need_int(key, lo=0):
        v = full.get(key)
        if not _is_int(v) or v < lo:
            errors.append(f"{key}: must be an integer >= {lo}, got {v!r}")

    def need_pos(key):
        v = full.get(key)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            errors.append(f"{key}: must be > 0, got {v!r}")

    if kind in ("clt", "asclt", "variance", "decay"):
        a, phi = sym("a"), sym("phi")
        if a is not None and phi is not None:
            try:
                gamma = compose(phi, a)
                if dist is not None:
                    lo, hi = -2 - dist.bound, 2 + dist.bound
                    a.validate_on(lo, hi)
                    gamma.validate_on(lo, hi)
                if kind == "variance" and gamma.deriv is None:
                    errors.append("symbols: the martingale estimator needs a differentiable gamma")
            except ValueError as exc:
                errors.append(f"symbols: {exc}")
    if kind == "clt":
        need_int("M"), need_int("B"), need_int("n", 30)
        if full.get("centering") not in ("self", "ids"):
            errors.append(f"centering: must be 'self' or 'ids', got {full.get('centering')!r}")
    elif kind == "asclt":
        need_int("M_max", 1), need_int("B"), need_int("n_center", 2)
        if full.get("grid") not in ("auto", "exact", "geometric"):
            errors.append(f"grid: must be auto, exact or geometric, got {full.get('grid')!r}")
        if full.get("centering") not in ("ids", "ensemble"):
            errors.append(f"centering: must be 'ids' or 'ensemble', got {full.get('centering')!r}")
        if full.get("sigma") is not None:
            need_pos("sigma")
        ivs = full.get("intervals")
        if not isinstance(ivs, list) or not ivs or not all(
                isinstance(iv, list) and len(iv) == 2 and iv[0] < iv[1] for iv in ivs):
            errors.append("intervals: must be a nonempty list of [lo, hi] pairs with lo < hi")
    elif kind == "variance":
        need_int("l_max"), need_int("n_sites", 2), need_int("B"), need_int("window")
        need_int("quad_nodes", 4), need_int("n_outer", 2), need_int("n_inner", 2)
        if _is_int(full.get("l_max")) and _is_int(full.get("n_sites")) and full["l_max"] >= full["n_sites"]:
            errors.append("l_max: must be smaller than n_sites")
    elif kind == "ids":
        need_int("M"), need_int("n", 1)
        e = full.get("energies")
        if isinstance(e, dict):
            if not (_is_int(e.get("n")) and e["n"] >= 1 and e.get("lo", 0) <= e.get("hi", 0)):
                errors.append("energies: need lo <= hi and integer n >= 1")
        elif not isinstance(e, list) or not e:
            errors.append("energies: must be a list or {lo, hi, n}")
    elif kind == "entropy":
        need_pos("alpha"), need_pos("beta"), need_int("B"), need_int("n", 2)
        ml = full.get("M_list")
        if not isinstance(ml, list) or not ml or not all(_is_int(m) and m >= 0 for m in ml) or ml != sorted(ml):
            errors.append("M_list: must be an ascending list of nonnegative integers")
    elif kind == "decay":
        need_int("M"), need_int("B"), need_int("d_max", 1), need_int("outer_half_width", 1), need_int("n_pairs", 1)
        if _is_int(full.get("outer_half_width")):
            if not all(_is_int(p) and 0 <= p < full["outer_half_width"] for p in full.get("p_list", [])):
                errors.append("p_list: every p must satisfy 0 <= p < outer_half_width")

    if dist is not None and kind in ("clt", "asclt", "variance", "entropy"):
        hyp_kind = "renyi" if (kind == "entropy" or full.get("symbols", {}).get("phi", {}).get("kind")
                               in ("renyi", "von_neumann")) else kind
        warns.extend(check_hypotheses(dist, hyp_kind, emit=False).warnings)
    return {"ok": not errors, "errors": errors, "warnings": warns, "config": full}


def _energies(spec):
    if isinstance(spec, dict):
        return np.linspace(spec["lo"], spec["hi"], spec["n"])
    return np.asarray(spec, dtype=float)


def _base_report(cfg: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "experiment": cfg["experiment"], "seed": cfg["seed"],
            "config_echo": cfg}


def _run_clt(cfg, out: Path, workers):
    dist = PotentialDistribution.from_dict(cfg["dist"])
    a, phi = symbol_from_dict(cfg["symbols"]["a"]), symbol_from_dict(cfg["symbols"]["phi"])
    samples, rep = limits.run_clt(dist, a, phi, cfg["M"], cfg["B"], cfg["n"], cfg["centering"],
                                  cfg["seed"], workers)
    write_csv(out / "clt_samples.csv", ["realization_index", "trace", "sigma_sample"], samples.rows())
    report = _base_report(cfg) | {
        "M": cfg["M"], "B": cfg["B"], "n": cfg["n"], "mu_hat": samples.mu_hat,
        "sigma2_hat": rep.sigma2_hat, "ks_D": rep.ks_D, "ks_p": rep.ks_p,
        "ks_scaled": rep.ks_scaled, "centering_budget": rep.centering_budget,
        "degenerate": rep.degenerate, "verdict": rep.verdict,
    }
    return report, rep.passed


def _run_asclt(cfg, out: Path, workers):
    dist = PotentialDistribution.from_dict(cfg["dist"])
    a, phi = symbol_from_dict(cfg["symbols"]["a"]), symbol_from_dict(cfg["symbols"]["phi"])
    traj = limits.run_asclt(dist, a, phi, cfg["M_max"], cfg["grid"], cfg["B"],
                            [tuple(iv) for iv in cfg["intervals"]], cfg["sigma"], seed=cfg["seed"],
                            centering=cfg["centering"], n_center=cfg["n_center"])
    header = ["m", "Z_m"] + [f"L_m[{lo:g},{hi:g})" for lo, hi in traj.intervals]
    write_csv(out / "asclt.csv", header, traj.rows())
    err = traj.final_error
    passed = bool(np.all(err <= cfg["tolerance"]))
    report = _base_report(cfg) | {
        "M": cfg["M_max"], "B": cfg["B"], "grid": traj.grid, "centering": traj.centering,
        "mu_hat": traj.mu, "sigma": traj.sigma, "L_final": traj.final, "target": traj.target,
        "abs_error": err, "verdict": "pass" if passed else "fail",
    }
    return report, passed


def _run_variance(cfg, out: Path, workers):
    dist = PotentialDistribution.from_dict(cfg["dist"])
    a, phi = symbol_from_dict(cfg["symbols"]["a"]), symbol_from_dict(cfg["symbols"]["phi"])
    gamma = compose(phi, a)
    corr = estimators.correlation_sum_sigma2(dist, gamma, cfg["l_max"], cfg["B"], cfg["n_sites"], cfg["seed"])
    mart = estimators.martingale_sigma2(dist, gamma, cfg["window"], 0, cfg["quad_nodes"], cfg["n_outer"],
                                        cfg["n_inner"], cfg["seed"])
    c = corr.diagnostics["C"]
    write_csv(out / "correlation.csv", ["l", "C_l", "partial_sum"],
              [(l, c[l], corr.diagnostics["partial_sums"][l]) for l in range(len(c))])
    pos = [estimators.positivity_check(e) for e in (corr, mart)]
    passed = all(p.passed for p in pos)
    report = _base_report(cfg) | {
        "estimates": [corr.summary(), mart.summary()],
        "positivity": [p.message for p in pos],
        "sigma2_hat": corr.sigma2, "verdict": "pass" if passed else "fail",
    }
    return report, passed


def _run_ids(cfg, out: Path, workers):
    dist = PotentialDistribution.from_dict(cfg["dist"])
    est = estimators.ids_cdf(dist, _energies(cfg["energies"]), cfg["M"], cfg["n"], cfg["seed"])
    write_csv(out / "ids.csv", ["E", "N_hat", "SE"], est.rows())
    report = _base_report(cfg) | {"M": cfg["M"], "n": cfg["n"], "box_size": est.box_size, "verdict": "pass"}
    if dist.kind == "constant" and dist.params[0] == 0.0:
        report["max_abs_error_vs_free_ids"] = float(np.max(np.abs(est.values - estimators.free_ids(est.energies))))
    return report, True


def _run_entropy(cfg, out: Path, workers):
    dist = PotentialDistribution.from_dict(cfg["dist"])
    rep = limits.entanglement_entropy_experiment(dist, cfg["alpha"], cfg["beta"], cfg["fermi_energy"],
                                                 cfg["M_list"], cfg["B"], cfg["n"], cfg["seed"],
                                                 workers=workers)
    write_csv(out / "fluctuation.csv", ["M", "var_over_volume", "SE"], [(p.M, p.ratio, p.se) for p in rep.scan])
    clt = rep.clt
    report = _base_report(cfg) | {
        "M": cfg["M_list"][-1], "B": cfg["B"], "n": cfg["n"],
        "mu_hat": rep.volume_coefficient, "mu_se": rep.volume_se,
        "sigma2_hat": rep.sigma2.sigma2, "sigma2_se": rep.sigma2.stderr,
        "ks_D": clt.ks_D if clt else None, "ks_p": clt.ks_p if clt else None,
        "hypothesis_warnings": rep.warnings,
        "verdict": "pass" if rep.positive and (clt is None or clt.passed) else "fail",
    }
    return report, report["verdict"] == "pass"


def _run_decay(cfg, out: Path, workers):
    dist = PotentialDistribution.from_dict(cfg["dist"])
    a, phi = symbol_from_dict(cfg["symbols"]["a"]), symbol_from_dict(cfg["symbols"]["phi"])
    spec = szego.BufferedBoxSpec(cfg["M"], cfg["B"])
    from .model import sample_potential
    v = sample_potential(dist, (-spec.outer_half_width, spec.outer_half_width), cfg["seed"], 0)
    prof = szego.offdiagonal_decay_profile(v, a, spec, cfg["d_max"])
    write_csv(out / "decay_profile.csv", ["d", "max_abs_entry"], prof.rows())
    win = szego.window_insensitivity(compose(phi, a), dist, cfg["p_list"], cfg["outer_half_width"],
                                     cfg["n_pairs"], cfg["seed"])
    write_csv(out / "window_insensitivity.csv", ["p", "mean_abs_diff"], win)
    lo, hi = cfg["d_range"]
    slope = szego.loglog_slope(prof, lo, hi)
    report = _base_report(cfg) | {"M": cfg["M"], "B": cfg["B"], "loglog_slope": slope,
                                  "verdict": "pass" if slope <= -2 else "fail"}
    return report, slope <= -2


def selftest_checks(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Fast analytic oracle suite: free spectrum, free IDS, i.i.d. reduction."""
    from .symbols import identity_symbol

    checks = []
    for n in (8, 64, 512):
        vals = eig_tridiagonal(build_hamiltonian(np.zeros(n))).values
        err = float(np.max(np.abs(vals - -2 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1)))))
        checks.append((f"free spectrum N={n}", err <= 1e-10, f"max error {err:.2e}"))
    E = np.linspace(-2, 2, 41)
    ids = estimators.ids_cdf(PotentialDistribution.constant(0.0), E, 128, 2, seed)
    err = float(np.max(np.abs(ids.values - estimators.free_ids(E))))
    checks.append(("free IDS arccos(-E/2)/pi", err <= 0.02, f"sup error {err:.2e}"))
    ident = identity_symbol()
    dist = PotentialDistribution.uniform(1.0)
    samples, rep = limits.run_clt(dist, ident, ident, 32, 4, 400, "ids", seed)
    from .model import sample_potential
    plain = np.array([math.fsum(sample_potential(dist, (-32, 32), seed, r)) / math.sqrt(65) for r in range(400)])
    err = float(np.max(np.abs(samples.values - plain)))
    checks.append(("i.i.d. reduction: pipeline == plain sum", err <= 1e-10, f"max error {err:.2e}"))
    var_ok = abs(rep.sigma2_hat - 1 / 3) <= 5 * (1 / 3) * math.sqrt(2 / 399)
    checks.append(("i.i.d. reduction: variance 1/3", var_ok, f"sigma2_hat {rep.sigma2_hat:.4f}"))
    return checks


def _run_selftest(cfg, out: Path, workers):
    checks = selftest_checks(cfg["seed"])
    for name, ok, info in checks:
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}: {info}")
    passed = all(ok for _, ok, _ in checks)
    report = _base_report(cfg) | {"checks": [{"name": n, "passed": ok, "info": i} for n, ok, i in checks],
                                  "verdict": "pass" if passed else "fail"}
    return report, passed


RUNNERS = {"clt": _run_clt, "asclt": _run_asclt, "variance": _run_variance, "ids": _run_ids,
           "entropy": _run_entropy, "decay": _run_decay, "selftest": _run_selftest}


def _summary_line(report: dict) -> str:
    keys = ("M", "B", "n", "mu_hat", "sigma2_hat", "ks_D", "ks_p", "L_final", "loglog_slope")
    parts = [f"{k}={report[k]}" for k in keys if report.get(k) is not None]
    return f"{report['experiment']}: verdict={report.get('verdict')} " + " ".join(parts)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="szegolab", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=EXPERIMENTS + ("validate",))
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: available cores)")
    p.add_argument("--out", default="szegolab_out", help="output directory")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit 3 when the statistical verdict fails")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE",
                   help="override a config field by dotted path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command, args.overrides, args.seed)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.command == "validate":
        res = validate(cfg)
        for w in res["warnings"]:
            print(f"warning: {w}")
        for e in res["errors"]:
            print(f"error: {e}", file=sys.stderr)
        print("ok" if res["ok"] else "invalid")
        return EXIT_OK if res["ok"] else EXIT_INVALID
    cfg["experiment"] = args.command
    res = validate(cfg)
    for w in res["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    if not res["ok"]:
        for e in res["errors"]:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    full = res["config"]
    workers = args.threads if args.threads else (os.cpu_count() or 1)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report, passed = RUNNERS[args.command](full, out, workers)
    report["warnings"] = res["warnings"]
    write_report(out / "report.json", report)
    print(_summary_line(report))
    if args.assert_ and not passed:
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
