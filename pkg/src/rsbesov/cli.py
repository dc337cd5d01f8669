"""Configuration-driven experiment runner.

Every verification is a subcommand.  A run reads one YAML or JSON config
(``--config``), applies flag overrides, validates the result and writes
into its output directory:

* ``report.json``: the resolved config, the library version, the checks and
  the numbers behind them.  Keys are sorted and no clock or host
  information is included, so identical inputs give byte-identical files.
* ``metadata.json``: timestamps, wall time, interpreter and kernel backend.
* one or more CSV tables, described in the README.

Exit codes: 0 all checks passed, 2 input or configuration error, 3 a
numerical check failed, 4 a resource cap was hit.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__, kernels
from .besov import BesovParams, besov_breakdown, holder_norm, radius_c_oscillation, two_model_seminorm
from .errors import InputError, ResourceError, RSBesovError
from .fixtures import (ELEMENTARY_FIXTURES, FIXTURE_NAMES, NEGATIVE_SUITE, _noise_box, build_fixture,
                       elementary_fixture, fubini_jets, noise_expansion)
from .geometry import Box, make_grid
from .model import (check_model_algebra, default_lambda_grid, estimate_gamma_norm, estimate_pi_norm,
                    polynomial_model, sample_pairs)
from .reconstruct import (bound_report, coefficient_error, evaluate, reconstruct, two_model_error)
from .stochastic import fubini_check, fubini_refinement_study, sample_brownian
from .structure import polynomial_structure
from .testfunctions import PlacedTest, quadrature_pairing, standard_dictionary
from .wavelets import build_basis, check_mra

SCHEMA_VERSION = 1
OUTPUT_ENV = "RSBESOV_OUTPUT_ROOT"
COMMANDS = ("wavelet-check", "model-check", "besov-norm", "reconstruct", "bound-sweep", "two-model", "fubini",
            "fubini-refine")

COMMON = {
    "schema_version": SCHEMA_VERSION,
    "command": None,
    "name": None,
    "seed": None,
    "basis": {"family": "daubechies", "N": 3, "depth": 12},
    "domain": [[0.0, 1.0]],
    "output": None,
    "limits": {"max_level": 12, "max_paths": 100000},
}

PARAMS = {
    "wavelet-check": {"degrees": None, "tol": 1e-6},
    "model-check": {"fixture": None, "max_degree": 2, "gamma": None, "grid_level": 5, "pairs": 1000,
                    "dictionary_size": 4, "r": 1, "lambda_levels": 8, "tol": 1e-8, "stability": 0.05},
    "besov-norm": {"fixture": "sine-lift", "n_max": 6, "gamma": None, "p": 2.0, "q": 2.0, "shells": 6,
                   "radius": 2.0, "radius_constant": 1.0, "pairs": 500},
    "reconstruct": {"fixture": "xi-constant", "n_max": 6, "gamma": None, "p": 2.0, "q": 2.0, "rule": "riemann",
                    "lambda_levels": 8, "dictionary_size": 4, "r": 1, "coefficient_tol": 1e-6},
    "bound-sweep": {"fixtures": list(NEGATIVE_SUITE), "n_max": 4, "p": 2.0, "q": 2.0, "lambda_levels": 8,
                    "dictionary_size": 4, "r": 1, "slope_margin": 0.2, "ratio_constant": 0.25,
                    "centers": [0.25, 0.5, 0.75], "weak_lambdas": [0.5, 0.25]},
    "two-model": {"fixture": "xi-cos", "n_max": 5, "p": 2.0, "q": 2.0, "eps": [1e-1, 1e-2, 1e-3],
                  "delta_seed": 101, "lambda_levels": 8, "dictionary_size": 4, "r": 1, "linearity_tol": 0.1},
    "fubini": {"fixtures": list(ELEMENTARY_FIXTURES), "seeds": 10, "n_max": 4, "T": 1.0, "dt": 1.0 / 64,
               "test": {"member": 1, "center": [0.5], "lam": 0.5}, "tol": 1e-10},
    "fubini-refine": {"n_max": 4, "levels": [2, 3, 4, 5, 6], "paths": 10000, "chunk": 500, "T": 1.0,
                      "test": {"member": 1, "center": [0.5], "lam": 0.5}, "ratio_max": 0.6,
                      "standard_errors": 3.0},
}


# --------------------------------------------------------------------------
# configuration


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise InputError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and base[key]:
            if not isinstance(val, dict):
                raise InputError(f"config key {where!r} must be a mapping")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def default_config(command: str) -> dict:
    if command not in COMMANDS:
        raise InputError(f"unknown command {command!r}")
    cfg = copy.deepcopy(COMMON)
    cfg["command"] = command
    cfg["params"] = copy.deepcopy(PARAMS[command])
    return cfg


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise InputError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InputError("the config must be a mapping at top level")
    return data


def parse_domain(text: str) -> list:
    """'0:1' or '0:1,-1:2' -> [[lo, hi], ...]."""
    out = []
    for part in text.split(","):
        try:
            lo, hi = (float(v) for v in part.split(":"))
        except ValueError as exc:
            raise InputError(f"bad domain {text!r}; use lo:hi per axis, comma separated") from exc
        out.append([lo, hi])
    return out


def _number(value, name: str, lo=None, integer: bool = False, allow_inf: bool = False):
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity") and allow_inf:
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(f"{name} must be a number, got {value!r}")
    if integer and (not float(value).is_integer()):
        raise InputError(f"{name} must be an integer, got {value!r}")
    if math.isinf(value) and not allow_inf:
        raise InputError(f"{name} must be finite")
    if lo is not None and value < lo:
        raise InputError(f"{name} must be at least {lo}, got {value!r}")
    return int(value) if integer else float(value)


def resolve_config(command: str, file_cfg: dict | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the config file, then flag overrides; validated."""
    cfg = default_config(command)
    file_cfg = dict(file_cfg or {})
    version = file_cfg.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InputError(f"unsupported schema_version {version!r} (this build reads {SCHEMA_VERSION})")
    if file_cfg.get("command") not in (None, command):
        raise InputError(f"config was written for {file_cfg['command']!r}, not {command!r}")
    cfg = _merge(cfg, file_cfg)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key in ("seed", "domain", "output"):
            cfg[key] = val
        else:
            if key not in cfg["params"]:
                raise InputError(f"--{key.replace('_', '-')} does not apply to {command}")
            cfg["params"][key] = val
    _validate(cfg)
    return cfg


def _validate(cfg: dict):
    prm = cfg["params"]
    basis = cfg["basis"]
    if basis["family"] != "daubechies":
        raise InputError(f"unknown basis family {basis['family']!r}")
    _number(basis["N"], "basis.N", 1, integer=True)
    _number(basis["depth"], "basis.depth", 4, integer=True)
    if cfg["seed"] is not None:
        _number(cfg["seed"], "seed", 0, integer=True)
    dom = cfg["domain"]
    if not isinstance(dom, list) or not dom:
        raise InputError("domain must be a list of [lo, hi] pairs")
    Box.of(dom)
    if len(dom) != 1 and cfg["command"] != "wavelet-check":
        raise InputError("the experiment fixtures are one-dimensional; give a single [lo, hi]")
    lim = cfg["limits"]
    _number(lim["max_level"], "limits.max_level", 1, integer=True)
    _number(lim["max_paths"], "limits.max_paths", 1, integer=True)
    for key in ("fixture",):
        if prm.get(key) is not None and prm[key] not in FIXTURE_NAMES:
            raise InputError(f"unknown fixture {prm[key]!r}; choose from {', '.join(FIXTURE_NAMES)}")
    if "fixtures" in prm:
        known = ELEMENTARY_FIXTURES if cfg["command"] == "fubini" else FIXTURE_NAMES
        if not isinstance(prm["fixtures"], list) or not prm["fixtures"]:
            raise InputError("params.fixtures must be a non-empty list")
        for name in prm["fixtures"]:
            if name not in known:
                raise InputError(f"unknown fixture {name!r}; choose from {', '.join(known)}")
    if "n_max" in prm:
        _number(prm["n_max"], "n_max", 0, integer=True)
    if "gamma" in prm and prm["gamma"] is not None:
        _number(prm["gamma"], "gamma")
    if "p" in prm:
        p = _number(prm["p"], "p", 1)
        if not 1 < p:
            raise InputError("p must exceed 1")
    if "q" in prm:
        q = _number(prm["q"], "q", 1, allow_inf=True)
        if not 1 < q:
            raise InputError("q must exceed 1")
    if "eps" in prm:
        if not prm["eps"] or any(_number(e, "eps") <= 0 for e in prm["eps"]):
            raise InputError("eps must be a non-empty list of positive numbers")
    if "levels" in prm:
        lv = [_number(k, "levels", 0, integer=True) for k in prm["levels"]]
        if len(lv) < 3 or lv != sorted(set(lv)):
            raise InputError("levels must be at least three increasing integers")
    if "paths" in prm:
        _number(prm["paths"], "paths", 2, integer=True)
    if "seeds" in prm:
        _number(prm["seeds"], "seeds", 1, integer=True)


def _check_limits(cfg: dict, level: int | None = None, paths: int | None = None):
    lim = cfg["limits"]
    if level is not None and level > lim["max_level"]:
        raise ResourceError(f"level {level} exceeds limits.max_level = {lim['max_level']}")
    if paths is not None and paths > lim["max_paths"]:
        raise ResourceError(f"{paths} paths exceed limits.max_paths = {lim['max_paths']}")


# --------------------------------------------------------------------------
# output


def _plain(obj):
    """Recursively convert to JSON-safe builtins; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path: Path, header: list, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def output_dir(cfg: dict) -> Path:
    if cfg["output"]:
        return Path(cfg["output"])
    root = Path(os.environ.get(OUTPUT_ENV, "rsbesov-runs"))
    return root / (cfg["name"] or cfg["command"])


class Run:
    """Collects checks, results and tables for one subcommand."""

    def __init__(self, cfg: dict, out: Path):
        self.cfg = cfg
        self.out = out
        self.checks = {}
        self.results = {}
        self.tables = []

    def check(self, name: str, ok) -> bool:
        self.checks[name] = bool(ok)
        return bool(ok)

    def table(self, filename: str, header: list, rows):
        write_csv(self.out / filename, header, rows)
        self.tables.append(filename)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def report(self) -> dict:
        return {"command": self.cfg["command"], "version": __version__, "schema_version": SCHEMA_VERSION,
                "config": self.cfg, "passed": self.passed, "checks": self.checks, "results": self.results,
                "tables": sorted(self.tables)}


# --------------------------------------------------------------------------
# shared helpers


def _basis(cfg, scaling=(1,)):
    b = cfg["basis"]
    return build_basis(int(b["N"]), scaling, int(b["depth"]))


def _filter(cfg):
    from .wavelets import daubechies_filter

    return daubechies_filter(int(cfg["basis"]["N"]))


def _fixture(cfg, name: str, n_max: int):
    _check_limits(cfg, level=n_max + 4)
    if int(cfg["basis"]["N"]) != 3:
        raise InputError("the fixtures are built on the Daubechies N = 3 basis; set basis.N to 3")
    return build_fixture(name, n_max, seed=cfg["seed"], K=[tuple(v) for v in cfg["domain"]])


def _dictionary(prm):
    return standard_dictionary(1, int(prm.get("r", 1)), int(prm.get("dictionary_size", 4)))


def _params(prm, gamma) -> BesovParams:
    g = gamma if prm.get("gamma") is None else prm["gamma"]
    return BesovParams(g, float(prm["p"]), _number(prm["q"], "q", allow_inf=True),
                       int(prm.get("shells", 6)))


def _placed(test_cfg: dict, scaling):
    D = standard_dictionary(1, 1, 4)
    m = int(test_cfg["member"])
    if not 0 <= m < len(D):
        raise InputError(f"test member must be in 0..{len(D) - 1}")
    return PlacedTest(D.members[m], tuple(float(c) for c in test_cfg["center"]), float(test_cfg["lam"]), scaling)


# --------------------------------------------------------------------------
# subcommands


def run_wavelet_check(run: Run):
    cfg, prm = run.cfg, run.cfg["params"]
    basis = _basis(cfg)
    degrees = list(range(basis.N)) if prm["degrees"] is None else prm["degrees"]
    rep = check_mra(basis, degrees=degrees, tol=float(prm["tol"]))
    run.results["mra"] = rep.to_dict()
    rows = [("orthonormality", "father", rep.orthonormality_defect),
            ("orthonormality", "mother", rep.mother_orthonormality_defect),
            ("orthogonality", "father-mother", rep.father_mother_defect),
            ("mass", "father", rep.mass_defect),
            ("refinement", "father", rep.refinement_residual)]
    rows += [("reproduction", f"degree {m}", v) for m, v in rep.reproduction_errors.items()]
    rows += [("vanishing_moment", f"{name} degree {m}", v)
             for name, d in rep.vanishing_moment_defects.items() for m, v in d.items()]
    run.table("defects.csv", ["check", "item", "defect"], rows)
    run.check("mra", rep.passed)


def run_model_check(run: Run):
    cfg, prm = run.cfg, run.cfg["params"]
    K = Box.of(cfg["domain"])
    if prm["fixture"] is None:
        st = polynomial_structure(1, (1,), int(prm["max_degree"]))
        model = polynomial_model(st, _filter(cfg))
        gamma = prm["max_degree"] if prm["gamma"] is None else prm["gamma"]
    else:
        fx = _fixture(cfg, prm["fixture"], 6)
        model, st = fx.model, fx.model.structure
        gamma = fx.gamma if prm["gamma"] is None else prm["gamma"]
    _check_limits(cfg, level=int(prm["grid_level"]))
    grid = make_grid(int(prm["grid_level"]), (1,), K)
    seed = 0 if cfg["seed"] is None else cfg["seed"]
    alg = check_model_algebra(model, grid, int(prm["pairs"]), seed, tol=float(prm["tol"]))
    lam = default_lambda_grid(int(prm["lambda_levels"]))
    size = int(prm["dictionary_size"])
    pi1 = estimate_pi_norm(model, gamma, standard_dictionary(1, int(prm["r"]), size), lam, grid)
    pi2 = estimate_pi_norm(model, gamma, standard_dictionary(1, int(prm["r"]), 2 * size), lam, grid)
    pairs = sample_pairs(grid, int(prm["pairs"]), seed)
    g1 = estimate_gamma_norm(model, gamma, pairs)
    g2 = estimate_gamma_norm(model, gamma, sample_pairs(grid, 2 * int(prm["pairs"]), seed + 1))
    stab = float(prm["stability"])
    run.results.update({"structure": st.to_dict(), "gamma": str(gamma), "algebra": alg.to_dict(),
                        "pi_norm": pi1, "pi_norm_doubled": pi2, "gamma_norm": g1, "gamma_norm_doubled": g2})
    run.table("norms.csv", ["quantity", "base", "doubled", "relative_change"],
              [(name, a, b, abs(b - a) / a if a else 0.0) for name, a, b in (("pi_norm", pi1, pi2),
                                                                             ("gamma_norm", g1, g2))])
    run.table("algebra.csv", ["defect", "value"],
              [(k, v) for k, v in alg.to_dict().items() if k.endswith("defect") and v is not None])
    run.check("algebra", alg.passed)
    run.check("norms_finite", all(math.isfinite(v) for v in (pi1, pi2, g1, g2)))
    run.check("pi_norm_stable", abs(pi2 - pi1) <= stab * max(pi1, 1e-300))
    run.check("gamma_norm_stable", abs(g2 - g1) <= stab * max(g1, 1e-300))


def run_besov_norm(run: Run):
    cfg, prm = run.cfg, run.cfg["params"]
    fx = _fixture(cfg, prm["fixture"], int(prm["n_max"]))
    params = _params(prm, fx.gamma)
    f = fx.f if params.gamma == fx.f.gamma else type(fx.f)(fx.f.structure, params.gamma, fx.f.grid,
                                                             fx.f.values, fx.f.domain)
    br = besov_breakdown(f, fx.model, params, fx.K)
    C = float(prm["radius"])
    osc_c = radius_c_oscillation(f, fx.model, params, C, fx.K)
    hn = holder_norm(f, fx.model, params.gamma, fx.K)
    sg = make_grid(min(f.grid.n, 6), (1,), fx.K)
    gn = estimate_gamma_norm(fx.model, params.gamma, sample_pairs(sg, int(prm["pairs"])))
    bound = (1.0 + gn) * br.total
    ratio = osc_c / bound if bound > 0 else 0.0
    run.results.update({"fixture": fx.name, "breakdown": br.to_dict(), "norm": br.total,
                        "radius": C, "radius_oscillation": osc_c, "holder_norm": hn, "gamma_norm": gn,
                        "radius_ratio": ratio})
    rows = [("level", fam, v) for fam, v in sorted(br.level.items())]
    rows += [("oscillation", fam, v) for fam, v in sorted(br.oscillation.items())]
    run.table("breakdown.csv", ["term", "family", "value"], rows)
    run.check("finite", math.isfinite(br.total))
    run.check("radius_bound", ratio <= float(prm["radius_constant"]))


def _weak_errors(result, g, dictionary, centers, lams, scaling) -> list:
    rows = []
    for mi, member in enumerate(dictionary):
        for x in centers:
            for lam in lams:
                T = PlacedTest(member, (float(x),), float(lam), scaling)
                rows.append((mi, float(x), float(lam), abs(evaluate(result, T) - quadrature_pairing(g, T))))
    return rows


def run_reconstruct(run: Run):
    cfg, prm = run.cfg, run.cfg["params"]
    n_max = int(prm["n_max"])
    _check_limits(cfg, level=n_max + 1)
    fx = _fixture(cfg, prm["fixture"], n_max)
    params = _params(prm, fx.gamma)
    D = _dictionary(prm)
    lam = default_lambda_grid(int(prm["lambda_levels"]))
    res = reconstruct(fx.f, fx.model, fx.model.filt, n_max, rule=prm["rule"])
    rep = bound_report(fx.f, fx.model, res, params, D, lam, fx.K)
    res.to_csv(run.out / "coefficients.csv")
    run.tables.append("coefficients.csv")
    run.table("lambda_errors.csv", ["lambda", "lp_norm", "sup_error"],
              zip(rep.lambdas, rep.per_lambda, rep.sup_error))
    run.results.update({"fixture": fx.name, "n_max": n_max, "bound": rep.to_dict(),
                        "coefficients": sum(1 for _ in res.rows())})
    if fx.name == "xi-constant":
        err = coefficient_error(res, fx.target)
        run.results["coefficient_error"] = err
        run.check("coefficients_match_target", err < float(prm["coefficient_tol"]))
    if fx.name == "sine-lift":
        rows = _weak_errors(res, np.sin, D, [0.25, 0.5, 0.75], [0.5, 0.25], fx.f.grid.scaling)
        run.table("weak_errors.csv", ["member", "center", "lambda", "error"], rows)
        run.results["max_weak_error"] = max(r[3] for r in rows)
    run.check("finite", math.isfinite(rep.lhs))


def run_bound_sweep(run: Run):
    cfg, prm = run.cfg, run.cfg["params"]
    n0 = int(prm["n_max"])
    levels = [n0, n0 + 1, n0 + 2]
    _check_limits(cfg, level=levels[-1] + 4)
    D = _dictionary(prm)
    lam = default_lambda_grid(int(prm["lambda_levels"]))
    margin, const = float(prm["slope_margin"]), float(prm["ratio_constant"])
    rows, weak_rows, summary = [], [], {}
    for name in prm["fixtures"]:
        weak = {}
        for n in levels:
            fx = _fixture(cfg, name, n)
            params = _params(prm, fx.gamma)
            res = reconstruct(fx.f, fx.model, fx.model.filt, n)
            if float(fx.gamma) > 0:
                for mi, x, lm, err in _weak_errors(res, np.sin, D, prm["centers"], prm["weak_lambdas"],
                                                   fx.f.grid.scaling):
                    weak.setdefault((mi, x, lm), []).append(err)
                    weak_rows.append((name, n, mi, x, lm, err))
                continue
            rep = bound_report(fx.f, fx.model, res, params, D, lam, fx.K)
            thr = float(fx.gamma) - margin
            zero = max(rep.sup_error) == 0.0
            slope_ok = zero or (rep.slope is not None and rep.slope >= thr)
            ratio_ok = zero if rep.ratio is None else rep.ratio <= const
            rows.append((name, n, str(fx.gamma), rep.lhs, rep.rhs_proxy, rep.ratio if rep.ratio is not None else "",
                         rep.slope if rep.slope is not None else "", thr, int(ratio_ok), int(slope_ok)))
            summary.setdefault(name, []).append(rep.to_dict())
            run.check(f"{name}/n_max={n}/ratio", ratio_ok)
            run.check(f"{name}/n_max={n}/slope", slope_ok)
        if weak:
            mono = all(all(b < a for a, b in zip(v[:-1], v[1:])) for v in weak.values())
            summary[name] = {"max_error": [max(v[i] for v in weak.values()) for i in range(len(levels))]}
            run.check(f"{name}/weak_error_decreasing", mono)
    if rows:
        run.table("bound_sweep.csv", ["fixture", "n_max", "gamma", "lhs", "rhs_proxy", "ratio", "slope",
                                      "slope_threshold", "ratio_pass", "slope_pass"], rows)
    if weak_rows:
        run.table("weak_errors.csv", ["fixture", "n_max", "member", "center", "lambda", "error"], weak_rows)
    run.results.update({"levels": levels, "ratio_constant": const, "fixtures": summary})


def run_two_model(run: Run):
    cfg, prm = run.cfg, run.cfg["params"]
    n_max = int(prm["n_max"])
    fx = _fixture(cfg, prm["fixture"], n_max)
    if float(fx.gamma) >= 0:
        raise InputError("two-model runs use a negative-regularity fixture")
    st = fx.model.structure
    filt = fx.model.filt
    s = st.scaling
    delta = noise_expansion(st.min_homogeneity, s, filt, n_max, _noise_box(fx.K, filt, s), int(prm["delta_seed"]))
    params = _params(prm, fx.gamma)
    D = _dictionary(prm)
    lam = default_lambda_grid(int(prm["lambda_levels"]))
    r1 = reconstruct(fx.f, fx.model, filt, n_max)
    rows = []
    for eps in prm["eps"]:
        m2 = fx.model.perturbed(delta, float(eps))
        r2 = reconstruct(fx.f, m2, filt, n_max)
        rep = two_model_error(fx.f, fx.f, fx.model, m2, (r1, r2), params, D, lam, fx.K)
        semi = two_model_seminorm(fx.f, fx.f, fx.model, m2, params, fx.K)
        rows.append((float(eps), rep.lhs, rep.lhs / float(eps), semi))
    ref = rows[0][2]
    spread = max(abs(r[2] / ref - 1.0) for r in rows) if ref > 0 else math.inf
    run.table("two_model.csv", ["eps", "error", "error_over_eps", "jet_seminorm"], rows)
    run.results.update({"fixture": fx.name, "n_max": n_max, "linearity_spread": spread,
                        "rows": [list(r) for r in rows]})
    run.check("linear_in_eps", spread <= float(prm["linearity_tol"]))


def run_fubini(run: Run):
    cfg, prm = run.cfg, run.cfg["params"]
    n_max = int(prm["n_max"])
    _check_limits(cfg, level=n_max + 2)
    model, jets = fubini_jets(n_max)
    psi = _placed(prm["test"], jets[0].grid.scaling)
    first = 0 if cfg["seed"] is None else cfg["seed"]
    rows, worst, cache = [], {}, {}
    for name in prm["fixtures"]:
        H = elementary_fixture(name, jets, float(prm["T"]))
        worst[name] = 0.0
        for seed in range(first, first + int(prm["seeds"])):
            W = sample_brownian(float(prm["T"]), float(prm["dt"]), seed)
            r = fubini_check(H, W, psi, model, model.filt, n_max, cache)
            rows.append((name, seed, r.lhs, r.rhs, r.diff, r.relative))
            worst[name] = max(worst[name], r.relative)
    run.table("paths.csv", ["fixture", "seed", "lhs", "rhs", "diff", "relative"], rows)
    run.results.update({"max_relative": worst, "paths": len(rows)})
    for name, v in worst.items():
        run.check(f"{name}/interchange", v <= float(prm["tol"]))


def run_fubini_refine(run: Run):
    cfg, prm = run.cfg, run.cfg["params"]
    n_max = int(prm["n_max"])
    paths = int(prm["paths"])
    _check_limits(cfg, level=n_max + 2, paths=paths)
    model, jets = fubini_jets(n_max)
    psi = _placed(prm["test"], jets[0].grid.scaling)
    seed = 0 if cfg["seed"] is None else cfg["seed"]
    study = fubini_refinement_study(lambda t: math.cos(2.0 * t) + 0.5, jets[0], float(prm["T"]), prm["levels"],
                                    psi, model, model.filt, n_max, paths, seed, int(prm["chunk"]))
    rows = []
    for i, k in enumerate(study.levels):
        cauchy = study.cauchy[i] if i < len(study.cauchy) else ""
        ratio = study.cauchy_ratios[i - 1] if 0 < i <= len(study.cauchy_ratios) else ""
        rows.append((k, study.mean_square_gap[i], cauchy, ratio, study.variance[i], study.isometry[i],
                     study.standard_error[i]))
    run.table("refinement.csv", ["level", "mean_square_gap", "cauchy", "cauchy_ratio", "variance", "isometry",
                                 "standard_error"], rows)
    run.results["study"] = study.to_dict()
    nse = float(prm["standard_errors"])
    run.check("cauchy_decay", all(r <= float(prm["ratio_max"]) for r in study.cauchy_ratios))
    run.check("isometry", all(abs(v - i) <= nse * se for v, i, se in
                              zip(study.variance, study.isometry, study.standard_error)))


RUNNERS = {
    "wavelet-check": run_wavelet_check,
    "model-check": run_model_check,
    "besov-norm": run_besov_norm,
    "reconstruct": run_reconstruct,
    "bound-sweep": run_bound_sweep,
    "two-model": run_two_model,
    "fubini": run_fubini,
    "fubini-refine": run_fubini_refine,
}


def execute(cfg: dict) -> tuple:
    """Run a resolved config; returns (exit code, output directory)."""
    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc)
    t0 = time.perf_counter()
    run = Run(cfg, out)
    RUNNERS[cfg["command"]](run)
    (out / "report.json").write_text(dumps_report(run.report()))
    meta = {"started": started.isoformat(), "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "wall_seconds": time.perf_counter() - t0, "python": platform.python_version(),
            "platform": platform.platform(), "kernel_backend": kernels.BACKEND, "argv": sys.argv}
    (out / "metadata.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return (0 if run.passed else 3), out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsbesov", description="Run a verification experiment.")
    parser.add_argument("--version", action="version", version=f"rsbesov {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", help="YAML or JSON config file")
        p.add_argument("-o", "--output", help=f"output directory (default ${OUTPUT_ENV}/<name>)")
        p.add_argument("--seed", type=int)
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument("--gamma", type=float)
        p.add_argument("--p", type=float)
        p.add_argument("--q", type=str, help="a number or 'inf'")
        p.add_argument("--domain", type=str, help="lo:hi per axis, comma separated")
        p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_cfg = load_config_file(args.config) if args.config else {}
        q = args.q
        if q is not None and q.strip().lower() not in ("inf", "infinity"):
            try:
                q = float(q)
            except ValueError as exc:
                raise InputError(f"--q must be a number or 'inf', got {q!r}") from exc
        overrides = {"seed": args.seed, "n_max": args.n_max, "gamma": args.gamma, "p": args.p, "q": q,
                     "domain": parse_domain(args.domain) if args.domain else None, "output": args.output}
        cfg = resolve_config(args.command, file_cfg, overrides)
        if args.print_config:
            sys.stdout.write(dumps_report(cfg))
            return 0
        code, out = execute(cfg)
    except RSBesovError as exc:
        print(f"rsbesov: error: {exc}", file=sys.stderr)
        return exc.exit_code
    report = json.loads((out / "report.json").read_text())
    failed = [k for k, v in report["checks"].items() if not v]
    status = "PASS" if code == 0 else "FAIL"
    print(f"{args.command}: {status} ({len(report['checks']) - len(failed)}/{len(report['checks'])} checks)"
          f" -> {out}")
    for name in failed:
        print(f"  failed: {name}")
    return code


if __name__ == "__main__":
    sys.exit(main())
