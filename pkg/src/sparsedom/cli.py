"""Batch front door: scenario configs in, deterministic reports out.

Verbs: run, sweep, constants, dominate.  A scenario is a JSON file with a
strict schema (unknown keys are errors); outputs are a JSON-lines report,
a CSV summary, and per-check plot data.  Identical config + seed produces
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .calibration import CalibrationConstants
from .czo import cotlar_check, cz_decomposition, make_kernel
from .dyadic import GridGeometry
from .gridfn import GridFunction
from .report import VerificationReport, inputs_digest, make_report
from .suite import (bmo_symbol, dyadic_valued_function, random_sparse_family,
                    random_step_function, step_weight, two_step_weight,
                    weight_tuple)
from .verify import (build_dictionary, check_ainfty_stability,
                     check_commutator_bound, check_dyadic_sum, check_exp_ap,
                     check_john_nirenberg, check_pointwise_domination,
                     check_prodweight, check_sparse_kolmogorov,
                     check_testing_lemma, check_theorem, check_weak_type,
                     p0_reduction_gap)
from .weights import (ExponentTuple, ap_constant, derived_sigmas, dual_h_infty,
                      dual_w_infty, fujii_wilson, hruscev,
                      multilinear_ap_constant, multilinear_w_infty, nu_weight,
                      reverse_holder_check)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILED_CHECKS = 2

_SCHEMA = {
    "label": None,
    "geometry": {"dimension", "resolution"},
    "seed": None,
    "kernel": {"name", "width", "amplitude", "holder", "truncation", "signed"},
    "exponents": {"p", "p0", "gamma"},
    "weights": {"kind", "values", "count", "scale"},
    "functions": {"kind", "count"},
    "checks": None,
    "calibration": None,
    "sweep": {"parameter", "values"},
}

CHECK_NAMES = (
    "constants", "testing", "kolmogorov", "dyadic_sum", "theorem1",
    "theorem2", "theorem3", "commutator", "john_nirenberg", "exp_ap",
    "ainfty_stability", "prodweight", "weak_type", "cotlar", "domination",
    "cz_decomposition", "p0_reduction",
)


class ConfigError(ValueError):
    pass


def validate_config(cfg: dict, require_sweep: bool = False) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key, value in cfg.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key: {key!r}")
        allowed = _SCHEMA[key]
        if allowed is not None:
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            for sub in value:
                if sub not in allowed:
                    raise ConfigError(f"unknown key {key}.{sub}")
    if "geometry" not in cfg:
        raise ConfigError("config needs a geometry section")
    for check in cfg.get("checks", []):
        if check not in CHECK_NAMES:
            raise ConfigError(f"unknown check {check!r}; "
                              f"known: {', '.join(CHECK_NAMES)}")
    if require_sweep and "sweep" not in cfg:
        raise ConfigError("sweep verb needs a sweep section")
    if "sweep" in cfg:
        sweep = cfg["sweep"]
        if sweep.get("parameter") not in ("resolution", "weight_scale",
                                          "gamma"):
            raise ConfigError("sweep.parameter must be resolution, "
                              "weight_scale or gamma")
        if not isinstance(sweep.get("values"), list) or not sweep["values"]:
            raise ConfigError("sweep.values must be a nonempty list")


class Scenario:
    """Validated config plus lazily built inputs."""

    def __init__(self, cfg: dict, seed_override=None):
        validate_config(cfg)
        self.cfg = cfg
        geo = cfg["geometry"]
        self.geom = GridGeometry(int(geo["dimension"]), int(geo["resolution"]))
        self.seed = int(seed_override if seed_override is not None
                        else cfg.get("seed", 0))
        exps = cfg.get("exponents", {})
        self.P = ExponentTuple(tuple(float(p) for p in exps.get("p", (2.0, 2.0))))
        self.p0 = float(exps.get("p0", 1.0))
        self.gamma = float(exps.get("gamma", 1.0))
        self.calib = CalibrationConstants().with_overrides(
            cfg.get("calibration", {}))
        self.digest = inputs_digest(cfg)
        self._kernel = None

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng((self.seed, salt))

    @property
    def kernel(self):
        if self._kernel is None:
            spec = dict(self.cfg.get("kernel", {"name": "smooth_tensor"}))
            name = spec.pop("name")
            self._kernel = make_kernel(name, self.geom.dimension, **spec)
        return self._kernel

    def weight_system(self):
        spec = self.cfg.get("weights", {"kind": "seeded"})
        kind = spec.get("kind", "seeded")
        scale = float(spec.get("scale", 1.0))
        if kind == "constant":
            values = spec.get("values", [1.0] * self.P.m)
            ws = [step_weight(self.geom, float(v) * scale, float(v) * scale)
                  for v in values]
        elif kind == "two_step":
            values = spec.get("values")
            if values is None or len(values) != self.P.m:
                raise ConfigError("two_step weights need one [left, right] "
                                  "pair per exponent")
            ws = [step_weight(self.geom, float(a) * scale, float(b))
                  for a, b in values]
        elif kind == "seeded":
            rng = self.rng(101)
            ws = [two_step_weight(self.geom, rng, hi=4.0 * scale)
                  for _ in range(self.P.m)]
        else:
            raise ConfigError(f"unknown weights.kind {kind!r}")
        return nu_weight(ws, self.P), derived_sigmas(ws, self.P), ws

    def function_pairs(self):
        spec = self.cfg.get("functions", {"kind": "seeded", "count": 4})
        kind = spec.get("kind", "seeded")
        count = int(spec.get("count", 4))
        rng = self.rng(202)
        if kind == "indicators":
            from .suite import indicator_pair
            return [indicator_pair(self.geom, rng) for _ in range(count)]
        if kind == "seeded":
            return [(random_step_function(self.geom, rng),
                     random_step_function(self.geom, rng))
                    for _ in range(count)]
        raise ConfigError(f"unknown functions.kind {kind!r}")


# -- check runners ----------------------------------------------------------------


def _run_constants(sc: Scenario):
    w, sigmas, ws = sc.weight_system()
    reports = []
    floor = 1.0 - 1e-9
    entries = [("ap.w1", ap_constant(ws[0], sc.P.p_list[0])),
               ("ap_multi", multilinear_ap_constant(w, sigmas, sc.P)),
               ("fujii_wilson.nu", fujii_wilson(w)),
               ("w_infty", multilinear_w_infty(sigmas, sc.P)),
               ("hruscev", hruscev(sigmas, sc.P))]
    for i in range(1, sc.P.m + 1):
        entries.append((f"dual_w_infty.{i}",
                        dual_w_infty(w, sigmas, sc.P, sc.gamma, i)))
        entries.append((f"dual_h_infty.{i}",
                        dual_h_infty(w, sigmas, sc.P, sc.gamma, i)))
    for name, rep in entries:
        reports.append(make_report(f"constants.{name}", floor, rep.value, 1.0,
                                   value=rep.value,
                                   witness=str(rep.witness)))
    return reports, {}


def _run_testing(sc: Scenario):
    rng = sc.rng(303)
    reports = []
    for _ in range(max(1, int(sc.cfg.get("functions", {}).get("count", 4)))):
        fam = random_sparse_family(sc.geom, rng)
        w, sigmas, _ = sc.weight_system()
        reports.extend(check_testing_lemma(sc.geom, fam, w, sigmas, sc.P,
                                           sc.gamma, sc.calib))
    return reports, {}


def _run_kolmogorov(sc: Scenario):
    rng = sc.rng(404)
    fam = random_sparse_family(sc.geom, rng)
    u = two_step_weight(sc.geom, rng)
    v = two_step_weight(sc.geom, rng)
    R = fam[0]
    return [check_sparse_kolmogorov(sc.geom, fam, u, v, 0.4, 0.4, R,
                                    sc.calib)], {}


def _run_dyadic_sum(sc: Scenario):
    rng = sc.rng(505)
    fam = random_sparse_family(sc.geom, rng, max_level=4)
    coeffs = {q: float(rng.uniform(0.0, 1.0)) for q in fam}
    sigma = two_step_weight(sc.geom, rng)
    return check_dyadic_sum(sc.geom, coeffs, 2.0, sigma, sc.calib), {}


def _run_theorem(sc: Scenario, which: int):
    rng = sc.rng(600 + which)
    fam = random_sparse_family(sc.geom, rng)
    w, sigmas, _ = sc.weight_system()
    dictionary = build_dictionary(sc.geom, rng, sc.P, sigmas)
    return [check_theorem(sc.geom, fam, w, sigmas, sc.P, sc.p0, sc.gamma,
                          dictionary, which, sc.calib)], {}


def _run_commutator(sc: Scenario):
    rng = sc.rng(707)
    _, _, ws = sc.weight_system()
    bs = [bmo_symbol(sc.geom, rng) for _ in range(sc.P.m)]
    dictionary = build_dictionary(sc.geom, rng, sc.P, ws)
    return [check_commutator_bound(sc.kernel, bs, ws, sc.P, dictionary,
                                   sc.calib)], {}


def _run_john_nirenberg(sc: Scenario):
    rng = sc.rng(808)
    return [check_john_nirenberg(bmo_symbol(sc.geom, rng), sc.calib)], {}


def _run_exp_ap(sc: Scenario):
    rng = sc.rng(809)
    return [check_exp_ap(bmo_symbol(sc.geom, rng), None, 2.0, sc.calib)], {}


def _run_ainfty(sc: Scenario):
    rng = sc.rng(810)
    b = bmo_symbol(sc.geom, rng)
    w = two_step_weight(sc.geom, rng)
    return [check_ainfty_stability(b, w, None, sc.calib)], {}


def _run_prodweight(sc: Scenario):
    rng = sc.rng(811)
    w, sigmas, _ = sc.weight_system()
    b = bmo_symbol(sc.geom, rng)
    return [check_prodweight(w, sigmas, sc.P, b, None, 1, sc.calib)], {}


def _run_weak_type(sc: Scenario):
    return check_weak_type(sc.kernel, sc.function_pairs(), sc.calib), {}


def _run_cotlar(sc: Scenario):
    reports = []
    for f1, f2 in sc.function_pairs():
        reports.append(cotlar_check(sc.kernel, f1, f2, 0.25, sc.calib))
    return reports, {}


def _run_domination(sc: Scenario):
    f1, f2 = sc.function_pairs()[0]
    report, result = check_pointwise_domination(sc.kernel, f1, f2, sc.calib)
    from .czo import TruncationField
    from .sparse import sparse_apply
    field = TruncationField(sc.kernel, sc.geom, [(f1, f2)])
    lhs = field.sharp()
    denom = np.zeros(sc.geom.n_cells)
    for fam in result.families.values():
        denom += sparse_apply(fam.cubes, abs(f1), abs(f2)).values
    rhs = sc.kernel.constant_sum() * denom
    return [report], {"domination": (lhs, rhs)}


def _run_cz(sc: Scenario):
    rng = sc.rng(909)
    f = dyadic_valued_function(sc.geom, rng)
    dec = cz_decomposition(f, 2.0)
    recon = dec.good + dec.bad_sum()
    gap = float(np.max(np.abs(recon.values - f.values)))
    rep = make_report("cz_decomposition", gap, 1e-12, 1.0,
                      parts=len(dec.parts), whole_base=dec.whole_base)
    return [rep], {}


def _run_p0_reduction(sc: Scenario):
    rng = sc.rng(910)
    fam = random_sparse_family(sc.geom, rng)
    f1 = random_step_function(sc.geom, rng)
    f2 = random_step_function(sc.geom, rng)
    gap = p0_reduction_gap(fam, f1, f2, 2.0, 2.0)
    return [make_report("p0_reduction", gap, 1e-10, 1.0)], {}


_RUNNERS = {
    "constants": _run_constants,
    "testing": _run_testing,
    "kolmogorov": _run_kolmogorov,
    "dyadic_sum": _run_dyadic_sum,
    "theorem1": lambda sc: _run_theorem(sc, 1),
    "theorem2": lambda sc: _run_theorem(sc, 2),
    "theorem3": lambda sc: _run_theorem(sc, 3),
    "commutator": _run_commutator,
    "john_nirenberg": _run_john_nirenberg,
    "exp_ap": _run_exp_ap,
    "ainfty_stability": _run_ainfty,
    "prodweight": _run_prodweight,
    "weak_type": _run_weak_type,
    "cotlar": _run_cotlar,
    "domination": _run_domination,
    "cz_decomposition": _run_cz,
    "p0_reduction": _run_p0_reduction,
}


# -- output -------------------------------------------------------------------------


def _write_outputs(out_dir: Path, reports: list[VerificationReport],
                   plots: dict, digest: str, prefix: str | None = None):
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"{prefix}," if prefix is not None else ""
    with open(out_dir / "report.jsonl", "a") as fh:
        for rep in reports:
            rep.details.setdefault("digest", digest)
            fh.write(rep.to_json() + "\n")
    summary = out_dir / "summary.csv"
    new = not summary.exists()
    with open(summary, "a") as fh:
        if new:
            head = "sweep," if prefix is not None else ""
            fh.write(head + "check,lhs,rhs,ratio,slack,pass\n")
        for rep in reports:
            fh.write(tag + rep.csv_row() + "\n")
    if plots:
        plot_dir = out_dir / "plots"
        plot_dir.mkdir(exist_ok=True)
        for name, (lhs, rhs) in sorted(plots.items()):
            with open(plot_dir / f"{name}.csv", "w") as fh:
                fh.write("cell,lhs,rhs\n")
                for i, (a, b) in enumerate(zip(lhs, rhs)):
                    fh.write(f"{i},{float(a)!r},{float(b)!r}\n")


def _execute(sc: Scenario, checks, threads: int):
    ordered = list(checks)
    results = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {name: pool.submit(_RUNNERS[name], sc)
                       for name in ordered}
            for name, fut in futures.items():
                results[name] = fut.result()
    else:
        for name in ordered:
            results[name] = _RUNNERS[name](sc)
    reports, plots = [], {}
    for name in ordered:
        rep, pl = results[name]
        reports.extend(rep)
        plots.update(pl)
    return reports, plots


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    sc = Scenario(cfg, args.seed)
    reports, plots = _execute(sc, cfg.get("checks", []), args.threads)
    _write_outputs(Path(args.out), reports, plots, sc.digest)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED_CHECKS


def _apply_sweep(cfg: dict, parameter: str, value) -> dict:
    import copy
    out = copy.deepcopy(cfg)
    out.pop("sweep", None)
    if parameter == "resolution":
        out["geometry"]["resolution"] = int(value)
    elif parameter == "weight_scale":
        out.setdefault("weights", {"kind": "seeded"})["scale"] = float(value)
    elif parameter == "gamma":
        out.setdefault("exponents", {})["gamma"] = float(value)
    return out


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    validate_config(cfg, require_sweep=True)
    parameter = cfg["sweep"]["parameter"]
    ok = True
    for value in cfg["sweep"]["values"]:
        sub = _apply_sweep(cfg, parameter, value)
        sc = Scenario(sub, args.seed)
        reports, plots = _execute(sc, sub.get("checks", []), args.threads)
        _write_outputs(Path(args.out), reports, plots, sc.digest,
                       prefix=f"{parameter}={value}")
        ok = ok and all(r.passed for r in reports)
    return EXIT_OK if ok else EXIT_FAILED_CHECKS


def _cmd_constants(args) -> int:
    cfg = _load_config(args.config)
    sc = Scenario(cfg, args.seed)
    reports, plots = _run_constants(sc)
    _write_outputs(Path(args.out), reports, plots, sc.digest)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED_CHECKS


def _cmd_dominate(args) -> int:
    cfg = _load_config(args.config)
    sc = Scenario(cfg, args.seed)
    reports, plots = _run_domination(sc)
    f1, f2 = sc.function_pairs()[0]
    from .sparse import sparse_domination
    result = sparse_domination(sc.kernel, f1, f2, sc.calib)
    out = Path(args.out)
    _write_outputs(out, reports, plots, sc.digest)
    with open(out / "families.json", "w") as fh:
        json.dump(result.to_json(), fh, sort_keys=True, indent=1)
        fh.write("\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED_CHECKS


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sparsedom",
        description="run sparse-domination verification scenarios")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, fn in (("run", _cmd_run), ("sweep", _cmd_sweep),
                     ("constants", _cmd_constants), ("dominate", _cmd_dominate)):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        sys.stderr.write(json.dumps({"error": "config", "detail": str(exc)})
                         + "\n")
        return EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        sys.stderr.write(json.dumps({"error": "invalid", "detail": str(exc)})
                         + "\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
