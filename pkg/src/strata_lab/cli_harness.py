"""Reproducible experiment runs over the determinant laboratory.

One JSON config drives a family of subcommands (Lyapunov sweeps, zero
inventories, potential-theory checks, IDS and localization diagnostics).
Each run writes CSV tables with a fixed column order, optional JSON
side artifacts, and a manifest recording the config hash, per-task
status, and the file index.  Numbers are printed with 12 significant
digits and tasks are planned and merged in a fixed order, so reruns of
the same config produce byte-identical tables regardless of --threads.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .model import GOLDEN_MEAN, Potential
from .cocycle import acceleration, classify_stratum, lyapunov_n, strata_measure
from .determinant import det_family
from .spectral_localization import (
    deviation_set,
    dirichlet_eigenvalues,
    eigenfunction_decay,
    double_resonance_scan,
    expansion_identity_scan,
    holder_exponent,
    ids,
)
from .zeros_potential import (
    clearest_eps,
    circle_average_green,
    count_annulus,
    find_zeros,
    green_annulus,
    jensen_identity_residual,
    riesz_decompose,
    riesz_mass,
    zero_count_vs_acceleration,
)

TWO_PI = 2.0 * math.pi

SUBCOMMANDS = (
    "lyapunov", "acceleration", "zeros", "verify-acc-zeros", "green",
    "riesz", "ids", "holder", "strata", "ldt", "localize", "all",
)


class ConfigError(ValueError):
    """Raised when the experiment config fails validation."""


class _Precondition(RuntimeError):
    """A task's mathematical preconditions do not hold for this input.

    Reported as status "skipped" in the manifest, not as a failure."""


# ----------------------------------------------------------------------
# config schema
# ----------------------------------------------------------------------

_DEFAULTS: Dict[str, Any] = {
    "potential": "amo(2.0)",
    "alpha": "golden",
    "energies": [0.5],
    "eps": 0.05,
    "eps_grid": [0.02, 0.04, 0.06, 0.08, 0.1],
    "n": 512,
    "n_ladder": [100, 200, 400],
    "seed": 0,
    "out_dir": "runs",
    "quadrature": {"K": 256, "lyapunov_K": 1024},
    "ids": {"n": 2000, "samples": 8},
    "holder": {
        "n": 2000,
        "delta_ladder": [1e-4, 2.15443469e-4, 4.64158883e-4, 1e-3,
                         2.15443469e-3, 4.64158883e-3, 1e-2],
    },
    "ldt": {"threshold": None, "grid_per_n": 64, "scan_count": 20},
    "localize": {"n": 1000, "theta": 0.0, "count": 10,
                 "window_margin": 8, "window_len": 120},
    "riesz": {"R_eps": 0.05, "eps_r": 0.02, "n_radii": 9, "n_angles": 256,
              "jensen_radii": [0.01, 0.04], "K": 4096},
    "green": {"samples": 100, "boundary_tol": 1e-10, "symmetry_tol": 1e-12,
              "average_tol": 1e-9},
    "strata": {"tau_pos": 0.05, "spectrum_box": 300, "spectrum_theta": 0.123},
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for k, v in override.items():
        if isinstance(base.get(k), dict) and isinstance(v, dict):
            out[k] = _merge(base[k], v)
        else:
            out[k] = v
    return out


def _check_unknown_keys(raw: Dict[str, Any]) -> None:
    for k, v in raw.items():
        if k not in _DEFAULTS:
            raise ConfigError(f"unknown config key {k!r}")
        if isinstance(_DEFAULTS[k], dict) and isinstance(v, dict):
            bad = set(v) - set(_DEFAULTS[k])
            if bad:
                raise ConfigError(f"unknown keys {sorted(bad)} in section {k!r}")


def _parse_energies(spec) -> Tuple[float, ...]:
    if isinstance(spec, dict):
        bad = set(spec) - {"start", "stop", "count"}
        if bad:
            raise ConfigError(f"unknown keys {sorted(bad)} in energies range")
        count = int(spec["count"])
        if count < 1:
            raise ConfigError("energies range needs count >= 1")
        return tuple(float(E) for E in
                     np.linspace(float(spec["start"]), float(spec["stop"]), count))
    if not isinstance(spec, (list, tuple)):
        raise ConfigError("energies must be a list or a start/stop/count range")
    return tuple(float(E) for E in spec)


def _parse_potential(spec) -> Potential:
    try:
        if isinstance(spec, str):
            return Potential.from_preset(spec)
        if isinstance(spec, dict):
            return Potential.from_dict(spec)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad potential spec: {exc}") from exc
    raise ConfigError("potential must be a preset string or a coeffs dict")


def _parse_alpha(spec) -> float:
    if isinstance(spec, str):
        if spec.strip().lower() == "golden":
            return GOLDEN_MEAN
        raise ConfigError(f"unknown alpha preset {spec!r}")
    a = float(spec)
    if not 0.0 < a < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    return a


def _positive_int_ladder(values, name: str) -> Tuple[int, ...]:
    try:
        ladder = tuple(int(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a list of integers") from exc
    if any(v < 2 for v in ladder):
        raise ConfigError(f"{name} entries must be >= 2")
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigError(f"{name} must be strictly increasing")
    return ladder


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment parameters plus the resolved raw dict.

    The raw dict is what gets hashed and shipped to worker processes; the
    typed fields are conveniences parsed from it exactly once."""

    raw: Dict[str, Any]
    potential: Potential
    alpha: float
    energies: Tuple[float, ...]
    eps: float
    eps_grid: Tuple[float, ...]
    n: int
    n_ladder: Tuple[int, ...]
    seed: int
    out_dir: str

    @classmethod
    def from_raw(cls, raw: Dict[str, Any]) -> "ExperimentConfig":
        resolved = _merge(_DEFAULTS, raw)
        _check_unknown_keys(raw)
        potential = _parse_potential(resolved["potential"])
        alpha = _parse_alpha(resolved["alpha"])
        energies = _parse_energies(resolved["energies"])
        eps = float(resolved["eps"])
        eps_grid = tuple(float(e) for e in resolved["eps_grid"])
        if eps <= 0:
            raise ConfigError("eps must be positive")
        if len(eps_grid) < 2 or any(e < 0 for e in eps_grid):
            raise ConfigError("eps_grid needs >= 2 nonnegative entries")
        if any(b <= a for a, b in zip(eps_grid, eps_grid[1:])):
            raise ConfigError("eps_grid must be strictly increasing")
        strip_reach = max(eps, max(eps_grid), float(resolved["riesz"]["R_eps"]))
        if strip_reach >= potential.eta:
            raise ConfigError(
                f"strip half-widths reach {strip_reach} but the potential is "
                f"only analytic up to eta = {potential.eta}")
        n = int(resolved["n"])
        if n < 2:
            raise ConfigError("n must be >= 2")
        cfg = cls(
            raw=resolved,
            potential=potential,
            alpha=alpha,
            energies=energies,
            eps=eps,
            eps_grid=eps_grid,
            n=n,
            n_ladder=_positive_int_ladder(resolved["n_ladder"], "n_ladder"),
            seed=int(resolved["seed"]),
            out_dir=str(resolved["out_dir"]),
        )
        _positive_int_ladder(
            sorted({int(resolved["ids"]["n"]), int(resolved["holder"]["n"]),
                    int(resolved["localize"]["n"])}) or [2], "section box sizes")
        jr = resolved["riesz"]["jensen_radii"]
        if len(jr) != 2 or not 0 < jr[0] < jr[1] < resolved["riesz"]["R_eps"]:
            raise ConfigError("riesz.jensen_radii must be 0 < r1 < r2 < R_eps")
        return cfg

    def section(self, name: str) -> Dict[str, Any]:
        return self.raw[name]


def config_hash(raw: Dict[str, Any]) -> str:
    """Hash of the resolved config, minus the output location."""
    resolved = _merge(_DEFAULTS, raw)
    items = {k: v for k, v in resolved.items() if k != "out_dir"}
    blob = json.dumps(items, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


# ----------------------------------------------------------------------
# output tables
# ----------------------------------------------------------------------

_TABLES: Dict[str, Dict[str, List[str]]] = {
    "lyapunov": {
        "lyapunov.csv": ["E", "n", "K", "eps", "L", "std_error"],
    },
    "acceleration": {
        "acceleration.csv": ["E", "n", "K", "raw_slope", "kappa",
                             "residual", "non_affine", "n_segments"],
        "accel_curve.csv": ["E", "eps", "L", "segment"],
        "accel_segments.csv": ["E", "segment", "eps_min", "eps_max",
                               "slope", "kappa", "residual"],
    },
    "zeros": {
        "zeros.csv": ["E", "n", "idx", "re", "im", "modulus", "eps_coord",
                      "multiplicity", "on_circle", "pair_inversive",
                      "pair_reflection"],
        "zero_counts.csv": ["E", "n", "eps_half", "count", "ratio_per_2n",
                            "boundary_margin", "n_flagged"],
    },
    "verify-acc-zeros": {
        "verify_acc_zeros.csv": ["E", "eps", "kappa", "L0", "n", "count",
                                 "ratio_per_2n", "deviation",
                                 "decay_exponent", "boundary_clear"],
    },
    "green": {
        "green_suite.csv": ["check", "samples", "max_abs_err", "tol",
                            "passed"],
    },
    "riesz": {
        "riesz.csv": ["E", "n", "R_eps", "boundary_max_dev",
                      "mean_value_max_resid", "h_min", "h_max", "L_ref",
                      "jensen_r1", "jensen_r2", "jensen_residual", "eps_r",
                      "mass_v", "mass_u", "count_ratio", "kappa",
                      "dev_from_2kappa"],
    },
    "ids": {
        "ids.csv": ["E", "n", "value", "spread"],
    },
    "holder": {
        "holder.csv": ["E0", "n", "beta", "beta_stderr", "in_gap",
                       "message"],
    },
    "strata": {
        "strata.csv": ["E", "L0", "kappa", "residual", "non_affine",
                       "in_spectrum", "label"],
    },
    "ldt": {
        "ldt_arcs.csv": ["E", "n", "threshold", "arc", "left", "right",
                         "width", "pair"],
        "resonance_scan.csv": ["E", "scan", "theta", "y", "clear",
                               "pair_index"],
    },
    "localize": {
        "localize_summary.csv": ["index", "eigenvalue", "center",
                                 "slope_left", "slope_right", "resid_left",
                                 "resid_right", "fit_sites_left",
                                 "fit_sites_right", "decay_rate",
                                 "localized", "exp_l1", "exp_l2", "exp_y",
                                 "expansion_residual"],
        "decay_profiles.csv": ["index", "site", "abs_phi", "log_abs_phi"],
    },
    "all": {
        "acceptance.csv": ["criterion", "name", "passed", "observed",
                           "seconds"],
    },
}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12g" % float(value)
    if value is None:
        return ""
    return str(value)


def _write_table(path: str, columns: Sequence[str],
                 rows: Sequence[Dict[str, Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


# ----------------------------------------------------------------------
# task functions (run in worker processes; must stay module level)
# ----------------------------------------------------------------------

def _payload(tables: Optional[Dict[str, List[dict]]] = None,
             json_files: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    return {"tables": tables or {}, "json": json_files or {}}


def _task_lyapunov(cfg: ExperimentConfig, E: float, n: int) -> Dict[str, Any]:
    K = int(cfg.section("quadrature")["lyapunov_K"])
    rows = []
    for eps in (0.0,) + cfg.eps_grid:
        est = lyapunov_n(cfg.potential, cfg.alpha, E, n, eps, K)
        rows.append({"E": E, "n": n, "K": K, "eps": eps, "L": est.value,
                     "std_error": est.std_error})
    return _payload({"lyapunov.csv": rows})


def _fit_segments(eps: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Label each grid point with a fitted affine segment id.

    A single segment unless a two-piece fit cuts the residual by 4x, which
    is the signature of a slope break inside the window."""
    m = len(eps)
    labels = np.zeros(m, dtype=int)
    if m < 5:
        return labels
    def ssr(sl):
        c = np.polyfit(eps[sl], L[sl], 1)
        r = L[sl] - np.polyval(c, eps[sl])
        return float(np.dot(r, r))
    one = ssr(slice(None))
    best_k, best = -1, one
    for k in range(2, m - 1):
        tot = ssr(slice(0, k)) + ssr(slice(k, m))
        if tot < best:
            best_k, best = k, tot
    if best_k >= 0 and best < 0.25 * one:
        labels[best_k:] = 1
    return labels


def _task_acceleration(cfg: ExperimentConfig, E: float) -> Dict[str, Any]:
    quad = cfg.section("quadrature")
    est = acceleration(cfg.potential, cfg.alpha, E, cfg.eps_grid,
                       n=cfg.n, K=int(quad["K"]))
    eps = np.asarray(est.eps_grid)
    L = np.asarray(est.L_values)
    labels = _fit_segments(eps, L) if est.non_affine else np.zeros(len(eps), int)
    curve = [{"E": E, "eps": e, "L": v, "segment": int(s)}
             for e, v, s in zip(eps, L, labels)]
    segments = []
    for s in sorted(set(labels.tolist())):
        sel = labels == s
        slope = float(np.polyfit(eps[sel], L[sel], 1)[0]) / TWO_PI
        segments.append({
            "E": E, "segment": int(s),
            "eps_min": float(eps[sel].min()), "eps_max": float(eps[sel].max()),
            "slope": slope, "kappa": int(round(slope)),
            "residual": abs(slope - round(slope))})
    main_row = {"E": E, "n": est.n, "K": est.quadrature_points,
                "raw_slope": est.raw_slope, "kappa": est.kappa,
                "residual": est.residual, "non_affine": est.non_affine,
                "n_segments": len(segments)}
    return _payload({"acceleration.csv": [main_row],
                     "accel_curve.csv": curve,
                     "accel_segments.csv": segments})


def _task_zeros(cfg: ExperimentConfig, E: float, n: int) -> Dict[str, Any]:
    fam = det_family(cfg.potential, cfg.alpha, E, n)
    inv = find_zeros(fam)
    refl = inv.pair_reflection
    zrows = []
    for i, w in enumerate(inv.roots):
        zrows.append({
            "E": E, "n": n, "idx": i, "re": float(w.real), "im": float(w.imag),
            "modulus": float(abs(w)),
            "eps_coord": float(abs(math.log(abs(w))) / TWO_PI),
            "multiplicity": int(inv.multiplicities[i]),
            "on_circle": bool(inv.on_circle[i]),
            "pair_inversive": int(inv.pair_inversive[i]),
            "pair_reflection": int(refl[i]) if refl is not None else -2})
    ann = count_annulus(inv, cfg.eps / 2.0)
    crow = {"E": E, "n": n, "eps_half": cfg.eps / 2.0, "count": ann.count,
            "ratio_per_2n": ann.count / (2.0 * n),
            "boundary_margin": ann.boundary_margin,
            "n_flagged": len(ann.flagged)}
    return _payload({"zeros.csv": zrows, "zero_counts.csv": [crow]})


def _task_verify(cfg: ExperimentConfig, E: float) -> Dict[str, Any]:
    quad = cfg.section("quadrature")
    try:
        rep = zero_count_vs_acceleration(
            cfg.potential, cfg.alpha, E, cfg.eps, cfg.n_ladder,
            kappa_n=cfg.n, kappa_K=int(quad["K"]))
    except ValueError as exc:
        raise _Precondition(str(exc)) from exc
    rows = []
    for n, count, dev in zip(rep.ns, rep.counts, rep.deviations):
        rows.append({"E": E, "eps": rep.eps, "kappa": rep.kappa,
                     "L0": rep.L0, "n": n, "count": count,
                     "ratio_per_2n": count / (2.0 * n), "deviation": dev,
                     "decay_exponent": (math.nan if rep.decay_exponent is None
                                        else rep.decay_exponent),
                     "boundary_clear": rep.boundary_clear})
    return _payload({"verify_acc_zeros.csv": rows})


def _task_green(cfg: ExperimentConfig, seed: int) -> Dict[str, Any]:
    sec = cfg.section("green")
    samples = int(sec["samples"])
    R = math.exp(TWO_PI * float(cfg.section("riesz")["R_eps"]))
    rng = np.random.default_rng(seed)
    lr = math.log(R)

    def draw(m):
        radial = np.exp(rng.uniform(-0.95 * lr, 0.95 * lr, m))
        return radial * np.exp(1j * TWO_PI * rng.uniform(0.0, 1.0, m))

    zs, ws = draw(samples), draw(samples)
    boundary = np.concatenate([
        R * np.exp(1j * TWO_PI * rng.uniform(0, 1, samples // 2)),
        np.exp(1j * TWO_PI * rng.uniform(0, 1, samples - samples // 2)) / R])
    err_boundary = float(np.max(np.abs(green_annulus(boundary, ws, R))))
    err_sym = float(np.max(np.abs(green_annulus(zs, ws, R)
                                  - green_annulus(ws, zs, R))))
    # trapezoid circle averages converge geometrically in the radial gap,
    # so resample radii that land too close to the pole circle
    err_avg = 0.0
    K = 4096
    phi = TWO_PI * np.arange(K) / K
    for w in ws[:samples // 4]:
        r = math.exp(rng.uniform(-0.9 * lr, 0.9 * lr))
        while abs(math.log(abs(w)) - math.log(r)) < 0.01:
            r = math.exp(rng.uniform(-0.9 * lr, 0.9 * lr))
        quad = float(np.mean(green_annulus(r * np.exp(1j * phi), w, R)))
        err_avg = max(err_avg, abs(quad - circle_average_green(r, R, w)))
    rows = [
        {"check": "boundary_zero", "samples": samples,
         "max_abs_err": err_boundary, "tol": float(sec["boundary_tol"]),
         "passed": err_boundary <= float(sec["boundary_tol"])},
        {"check": "symmetry", "samples": samples,
         "max_abs_err": err_sym, "tol": float(sec["symmetry_tol"]),
         "passed": err_sym <= float(sec["symmetry_tol"])},
        {"check": "circle_average", "samples": samples // 4,
         "max_abs_err": err_avg, "tol": float(sec["average_tol"]),
         "passed": err_avg <= float(sec["average_tol"])},
    ]
    return _payload({"green_suite.csv": rows})


def _task_riesz(cfg: ExperimentConfig, E: float) -> Dict[str, Any]:
    sec = cfg.section("riesz")
    quad = cfg.section("quadrature")
    R_eps = float(sec["R_eps"])
    R = math.exp(TWO_PI * R_eps)
    fam = det_family(cfg.potential, cfg.alpha, E, cfg.n)
    inv = find_zeros(fam)
    dec = riesz_decompose(fam, inv, R, n_radii=int(sec["n_radii"]),
                          n_angles=int(sec["n_angles"]))
    L_ref = lyapunov_n(cfg.potential, cfg.alpha, E, cfg.n, R_eps,
                       int(quad["lyapunov_K"])).value
    # nudge the comparison circles off any zero moduli before Jensen;
    # the identity wants radii, clearest_eps works in half-width coords
    coords = inv.eps_coords()
    jr1, jr2 = (float(v) for v in sec["jensen_radii"])
    r1 = clearest_eps(coords, 0.5 * jr1, jr1)
    r2 = clearest_eps(coords, jr2, min(1.5 * jr2, 0.9 * R_eps))
    jres = jensen_identity_residual(fam, inv, math.exp(TWO_PI * r1),
                                    math.exp(TWO_PI * r2), R,
                                    K=int(sec["K"]))
    mass = riesz_mass(cfg.potential, cfg.alpha, E, cfg.n,
                      float(sec["eps_r"]), K=int(sec["K"]),
                      fam=fam, inv=inv, kappa_n=cfg.n,
                      kappa_K=int(quad["K"]))
    row = {"E": E, "n": cfg.n, "R_eps": R_eps,
           "boundary_max_dev": dec.boundary_max_dev,
           "mean_value_max_resid": dec.mean_value_max_resid,
           "h_min": dec.h_min, "h_max": dec.h_max, "L_ref": L_ref,
           "jensen_r1": r1, "jensen_r2": r2, "jensen_residual": jres,
           "eps_r": mass.eps_r, "mass_v": mass.mass_v, "mass_u": mass.mass_u,
           "count_ratio": mass.count_ratio, "kappa": mass.kappa,
           "dev_from_2kappa": mass.dev_from_2kappa}
    return _payload({"riesz.csv": [row]})


def _task_ids(cfg: ExperimentConfig, E: float) -> Dict[str, Any]:
    sec = cfg.section("ids")
    est = ids(cfg.potential, cfg.alpha, E, int(sec["n"]),
              int(sec["samples"]))
    return _payload({"ids.csv": [{
        "E": E, "n": est.n, "value": est.value, "spread": est.spread}]})


def _task_holder(cfg: ExperimentConfig, E0: float) -> Dict[str, Any]:
    sec = cfg.section("holder")
    fit = holder_exponent(cfg.potential, cfg.alpha, E0,
                          sec["delta_ladder"], int(sec["n"]),
                          int(cfg.section("ids")["samples"]))
    return _payload({"holder.csv": [{
        "E0": E0, "n": fit.n, "beta": fit.beta,
        "beta_stderr": fit.beta_stderr, "in_gap": fit.in_gap,
        "message": fit.message}]})


def _task_strata(cfg: ExperimentConfig, E: float) -> Dict[str, Any]:
    quad = cfg.section("quadrature")
    sec = cfg.section("strata")
    L0 = lyapunov_n(cfg.potential, cfg.alpha, E, cfg.n, 0.0,
                    int(quad["lyapunov_K"])).value
    acc = acceleration(cfg.potential, cfg.alpha, E, cfg.eps_grid,
                       n=cfg.n, K=int(quad["K"]))
    box = int(sec["spectrum_box"])
    spec = dirichlet_eigenvalues(cfg.potential, cfg.alpha,
                                 float(sec["spectrum_theta"]), box)
    in_spec = bool(np.min(np.abs(spec.eigenvalues - E)) <= 10.0 / box)
    rec = classify_stratum(E, L0, acc.kappa, tau_pos=float(sec["tau_pos"]),
                           non_affine=acc.non_affine, in_spectrum=in_spec)
    return _payload({"strata.csv": [{
        "E": E, "L0": L0, "kappa": acc.kappa, "residual": acc.residual,
        "non_affine": acc.non_affine, "in_spectrum": in_spec,
        "label": rec.label}]})


def _task_ldt(cfg: ExperimentConfig, E: float, seed: int,
              geom_name: str) -> Dict[str, Any]:
    sec = cfg.section("ldt")
    threshold = sec["threshold"]
    try:
        geom = deviation_set(
            cfg.potential, cfg.alpha, E, cfg.n,
            threshold=None if threshold is None else float(threshold),
            grid_size=int(sec["grid_per_n"]) * cfg.n)
    except ValueError as exc:
        raise _Precondition(str(exc)) from exc
    arows = []
    for j, (left, right) in enumerate(geom.intervals):
        pair = geom.pair_map[j] if geom.pair_map is not None else -2
        arows.append({"E": E, "n": geom.n, "threshold": geom.threshold,
                      "arc": j, "left": left, "right": right,
                      "width": right - left, "pair": int(pair)})
    rng = np.random.default_rng(seed)
    srows = []
    for s in range(int(sec["scan_count"])):
        theta = float(rng.uniform(0.0, 1.0))
        y = int(rng.integers(geom.n + 1, 10 * geom.n))
        rep = double_resonance_scan(geom, theta, cfg.alpha, y)
        srows.append({"E": E, "scan": s, "theta": theta, "y": y,
                      "clear": rep.clear, "pair_index": rep.pair_index})
    return _payload({"ldt_arcs.csv": arows, "resonance_scan.csv": srows},
                    {geom_name: geom.to_json_dict()})


def _task_localize(cfg: ExperimentConfig, index: int) -> Dict[str, Any]:
    sec = cfg.section("localize")
    n, theta = int(sec["n"]), float(sec["theta"])
    prof = eigenfunction_decay(cfg.potential, cfg.alpha, theta, n, index,
                               seed=cfg.seed)
    margin, wlen = int(sec["window_margin"]), int(sec["window_len"])
    # tail window away from the localization center; containing it makes
    # the window determinant near-resonant
    if prof.center <= n // 2:
        l1 = prof.center + margin
    else:
        l1 = prof.center - margin - wlen
    l1 = min(max(1, l1), n - 2 - wlen)
    try:
        resid, (l1, l2), y = expansion_identity_scan(
            cfg.potential, cfg.alpha, theta, prof.eigenvalue,
            prof.eigenvector, (l1, l1 + wlen))
    except ValueError:
        resid, l2, y = math.nan, l1 + wlen, (2 * l1 + wlen) // 2
    srow = {"index": index, "eigenvalue": prof.eigenvalue,
            "center": prof.center, "slope_left": prof.slope_left,
            "slope_right": prof.slope_right, "resid_left": prof.resid_left,
            "resid_right": prof.resid_right,
            "fit_sites_left": prof.fit_sites_left,
            "fit_sites_right": prof.fit_sites_right,
            "decay_rate": prof.decay_rate, "localized": prof.is_localized(),
            "exp_l1": l1, "exp_l2": l2, "exp_y": y,
            "expansion_residual": resid}
    absv = np.abs(prof.eigenvector)
    with np.errstate(divide="ignore"):
        logs = np.log(absv)
    prows = [{"index": index, "site": j, "abs_phi": float(absv[j]),
              "log_abs_phi": float(logs[j])} for j in range(n)]
    return _payload({"localize_summary.csv": [srow],
                     "decay_profiles.csv": prows})


_TASKS = {
    "lyapunov": _task_lyapunov,
    "acceleration": _task_acceleration,
    "zeros": _task_zeros,
    "verify": _task_verify,
    "green": _task_green,
    "riesz": _task_riesz,
    "ids": _task_ids,
    "holder": _task_holder,
    "strata": _task_strata,
    "ldt": _task_ldt,
    "localize": _task_localize,
}


def _run_task(packed):
    name, raw, key, params = packed
    t0 = time.perf_counter()
    try:
        cfg = ExperimentConfig.from_raw(raw)
        payload = _TASKS[name](cfg, **params)
        return key, "ok", payload, "", time.perf_counter() - t0
    except _Precondition as exc:
        return key, "skipped", _payload(), str(exc), time.perf_counter() - t0
    except Exception as exc:  # sibling tasks keep running; manifest records it
        msg = f"{type(exc).__name__}: {exc}"
        return key, "failed", _payload(), msg, time.perf_counter() - t0


# ----------------------------------------------------------------------
# planners
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class _TaskSpec:
    key: str
    func: str
    params: Dict[str, Any]
    cost: int


def _plan(subcommand: str, cfg: ExperimentConfig) -> List[_TaskSpec]:
    quad = cfg.section("quadrature")
    K, K_ly = int(quad["K"]), int(quad["lyapunov_K"])
    tasks: List[_TaskSpec] = []
    if subcommand == "lyapunov":
        for E in cfg.energies:
            for n in cfg.n_ladder:
                tasks.append(_TaskSpec(
                    f"lyapunov[E={E:.6g},n={n}]", "lyapunov",
                    {"E": E, "n": n}, (len(cfg.eps_grid) + 1) * n * K_ly))
    elif subcommand == "acceleration":
        for E in cfg.energies:
            tasks.append(_TaskSpec(
                f"acceleration[E={E:.6g}]", "acceleration", {"E": E},
                len(cfg.eps_grid) * cfg.n * K))
    elif subcommand == "zeros":
        for E in cfg.energies:
            for n in cfg.n_ladder:
                tasks.append(_TaskSpec(
                    f"zeros[E={E:.6g},n={n}]", "zeros",
                    {"E": E, "n": n}, 50 * (2 * n) ** 2))
    elif subcommand == "verify-acc-zeros":
        for E in cfg.energies:
            cost = sum(50 * (2 * n) ** 2 for n in cfg.n_ladder)
            tasks.append(_TaskSpec(
                f"verify[E={E:.6g}]", "verify", {"E": E},
                cost + cfg.n * K * (len(cfg.eps_grid) + 2)))
    elif subcommand == "green":
        tasks.append(_TaskSpec(
            "green[suite]", "green", {"seed": cfg.seed},
            int(cfg.section("green")["samples"]) * 4096))
    elif subcommand == "riesz":
        sec = cfg.section("riesz")
        cost = (50 * (2 * cfg.n) ** 2
                + int(sec["n_radii"]) * int(sec["n_angles"]) * 2 * cfg.n)
        for E in cfg.energies:
            tasks.append(_TaskSpec(
                f"riesz[E={E:.6g}]", "riesz", {"E": E}, cost))
    elif subcommand == "ids":
        sec = cfg.section("ids")
        for E in cfg.energies:
            tasks.append(_TaskSpec(
                f"ids[E={E:.6g}]", "ids", {"E": E},
                int(sec["samples"]) * int(sec["n"]) * 40))
    elif subcommand == "holder":
        sec = cfg.section("holder")
        for E in cfg.energies:
            tasks.append(_TaskSpec(
                f"holder[E0={E:.6g}]", "holder", {"E0": E},
                2 * len(sec["delta_ladder"])
                * int(cfg.section("ids")["samples"]) * int(sec["n"])))
    elif subcommand == "strata":
        for E in cfg.energies:
            tasks.append(_TaskSpec(
                f"strata[E={E:.6g}]", "strata", {"E": E},
                (len(cfg.eps_grid) * K + K_ly) * cfg.n))
    elif subcommand == "ldt":
        sec = cfg.section("ldt")
        for i, E in enumerate(cfg.energies):
            tasks.append(_TaskSpec(
                f"ldt[E={E:.6g}]", "ldt",
                {"E": E, "seed": cfg.seed + i,
                 "geom_name": f"ldt_geometry_{i}.json"},
                int(sec["grid_per_n"]) * cfg.n * 40))
    elif subcommand == "localize":
        sec = cfg.section("localize")
        n, count = int(sec["n"]), int(sec["count"])
        base = n // 2 - count // 2
        for j in range(count):
            tasks.append(_TaskSpec(
                f"localize[index={base + j}]", "localize",
                {"index": base + j}, 30 * n * n))
    else:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    return tasks


# ----------------------------------------------------------------------
# run driver
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RunManifest:
    """Record of one run: what was asked, what happened, what was written."""

    subcommand: str
    version: str
    config_hash: str
    seed: int
    threads: int
    out_dir: str
    started_utc: str
    finished_utc: str
    tasks: Tuple[Dict[str, Any], ...]
    files: Tuple[str, ...]

    @property
    def n_failed(self) -> int:
        return sum(1 for t in self.tasks if t["status"] == "failed")

    @property
    def ok(self) -> bool:
        return self.n_failed == 0

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _load_config(config) -> Dict[str, Any]:
    if config is None:
        return {}
    if isinstance(config, dict):
        return dict(config)
    with open(config, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config JSON must be an object")
    return raw


def _finish_strata(cfg: ExperimentConfig, rows: List[dict]) -> Optional[dict]:
    """Measure per label, defined only on a uniform energy grid."""
    if len(cfg.energies) < 2 or not rows:
        return None
    diffs = np.diff(cfg.energies)
    if np.max(np.abs(diffs - diffs[0])) > 1e-12 * max(1.0, abs(diffs[0])):
        return None
    records = [classify_stratum(r["E"], r["L0"], r["kappa"],
                                tau_pos=float(cfg.section("strata")["tau_pos"]),
                                non_affine=bool(r["non_affine"]),
                                in_spectrum=bool(r["in_spectrum"]))
               for r in rows]
    measure = strata_measure(records, float(abs(diffs[0])))
    return {"cell_width": float(abs(diffs[0])),
            "measure": {k: measure[k] for k in sorted(measure)}}


def run(subcommand: str, config=None, out_dir: Optional[str] = None,
        threads: int = 1, seed: Optional[int] = None,
        dry_run: bool = False) -> RunManifest:
    """Plan and execute one subcommand; returns the manifest.

    `config` is a dict, a path to a JSON file, or None for pure defaults.
    Results land in CSV/JSON files under out_dir (config out_dir unless
    overridden here).  Planning order fixes row order, so thread count
    never changes the bytes written.
    """
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    raw = _load_config(config)
    if seed is not None:
        raw["seed"] = int(seed)
    cfg = ExperimentConfig.from_raw(raw)
    resolved_raw = cfg.raw
    target = out_dir if out_dir is not None else cfg.out_dir
    started = _utc_now()

    if subcommand == "all":
        from .acceptance import run_all
        if dry_run:
            print("dry run: 12 acceptance criteria, nothing computed")
            return RunManifest(subcommand, __version__, config_hash(raw),
                               cfg.seed, threads, target, started,
                               _utc_now(), (), ())
        os.makedirs(target, exist_ok=True)
        records = run_all()
        rows = [dataclasses.asdict(r) for r in records]
        _write_table(os.path.join(target, "acceptance.csv"),
                     _TABLES["all"]["acceptance.csv"], rows)
        tasks = tuple({"key": f"criterion-{r.criterion}",
                       "status": "ok" if r.passed else "failed",
                       "seconds": round(r.seconds, 3),
                       "error": "" if r.passed else r.observed}
                      for r in records)
        manifest = RunManifest(subcommand, __version__, config_hash(raw),
                               cfg.seed, threads, target, started,
                               _utc_now(), tasks, ("acceptance.csv",))
        with open(os.path.join(target, "manifest.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        return manifest

    specs = _plan(subcommand, cfg)
    if dry_run:
        total = sum(s.cost for s in specs)
        print(f"dry run: {len(specs)} task(s), cost proxy {total:.3g}")
        for s in specs:
            print(f"  {s.key}  cost {s.cost:.3g}")
        return RunManifest(subcommand, __version__, config_hash(raw),
                           cfg.seed, threads, target, started, _utc_now(),
                           tuple({"key": s.key, "status": "planned",
                                  "seconds": 0.0, "error": ""}
                                 for s in specs), ())

    packed = [(s.func, resolved_raw, s.key, s.params) for s in specs]
    if threads > 1 and len(packed) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_task, packed))
    else:
        results = [_run_task(p) for p in packed]

    os.makedirs(target, exist_ok=True)
    tables: Dict[str, List[dict]] = {f: [] for f in _TABLES[subcommand]}
    json_files: Dict[str, Any] = {}
    task_records = []
    for key, status, payload, err, secs in results:
        task_records.append({"key": key, "status": status,
                             "seconds": round(secs, 3), "error": err})
        for fname, rows in payload["tables"].items():
            tables[fname].extend(rows)
        json_files.update(payload["json"])

    if subcommand == "strata":
        summary = _finish_strata(cfg, tables["strata.csv"])
        if summary is not None:
            json_files["strata_summary.json"] = summary

    files = []
    for fname, columns in _TABLES[subcommand].items():
        _write_table(os.path.join(target, fname), columns, tables[fname])
        files.append(fname)
    for fname, obj in json_files.items():
        with open(os.path.join(target, fname), "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
        files.append(fname)

    manifest = RunManifest(subcommand, __version__, config_hash(raw),
                           cfg.seed, threads, target, started, _utc_now(),
                           tuple(task_records), tuple(files))
    with open(os.path.join(target, "manifest.json"), "w",
              encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
    return manifest


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strata-lab",
        description="Determinant-zero and Lyapunov-acceleration experiments "
                    "for quasi-periodic Schrodinger operators.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", default=None,
                        help="JSON config file (defaults apply when omitted)")
    parser.add_argument("--out", default=None,
                        help="output directory (overrides config out_dir)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--dry-run", action="store_true",
                        help="print the task plan without computing")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        manifest = run(args.subcommand, config=args.config, out_dir=args.out,
                       threads=args.threads, seed=args.seed,
                       dry_run=args.dry_run)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.dry_run:
        return 0
    for t in manifest.tasks:
        note = f"  [{t['error']}]" if t["error"] else ""
        print(f"{t['status']:7s} {t['key']}  ({t['seconds']:.2f}s){note}")
    print(f"wrote {len(manifest.files)} file(s) to {manifest.out_dir} "
          f"(config {manifest.config_hash})")
    if not manifest.ok:
        print(f"error: {manifest.n_failed} task(s) failed", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
