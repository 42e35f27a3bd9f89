"""Named, configuration-driven experiments with CSV tables, fits and verdicts.

Every experiment writes its tables first, then computes fits and verdicts by
reading those tables back (``evaluate``), so a report can always be audited
from its CSV files.  Threshold values and derived constants used by the
verdict are written to ``meta.csv`` alongside the tables.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import evolution as ev
from .commutators import (CommutatorSpec, dyadic_pieces, localized_commutator, semicommutator,
                          window_status, duality_bound_check, duality_constant, gamma_samples,
                          gamma_transform, two_variable_l2, default_gamma)
from .fitting import fit_geometric, fit_loglog
from .grid import GridFunction, GridSpec, l2_norm, spectral_derivative
from .norms import hst_norm
from .profiles import AdmissibilityError, SpeedProfile, check_admissible, smooth_step, periodic_offset
from .quantize import (identity, operator_norm, quantize_semiclassical, smallest_singular_value,
                       apply_symbol)
from .seminorms import seminorm_M, seminorm_N
from .symbols import (Symbol, dagger_weight, decompose_pi_sigma, make_bump, make_dyadic_partition,
                      make_symbol_d, make_symbol_p, make_symbol_p_inv)

CSV_VERSION = 1
EXPERIMENTS = ("oracle", "theorem1", "theorem2", "commutator_scaling", "dyadic_decay",
               "coercivity", "boundedness", "seminorm_scaling", "gamma_identity")
FIT_BASED = ("theorem2", "commutator_scaling", "coercivity", "boundedness", "seminorm_scaling")


class ConfigError(ValueError):
    """Invalid experiment configuration; raised before any computation."""


def load_defaults() -> dict:
    return json.loads(resources.files("semiclass_lab").joinpath("defaults.json").read_text())


def parse_t(value) -> float:
    """Accept 0.125, "0.125" or "2^-3"."""
    if isinstance(value, str) and "^" in value:
        base, exp = value.split("^")
        return float(base) ** float(exp)
    return float(value)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    grid: GridSpec
    speed: SpeedProfile
    t_sweep: tuple = ()
    seeds: tuple = (0,)
    tolerances: dict = field(default_factory=dict)
    output_dir: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        ts = np.asarray(self.t_sweep, dtype=float)
        if len(ts):
            if np.any(ts <= 0) or np.any(ts > 1):
                raise ConfigError("t_sweep values must lie in (0, 1]")
            if np.any(np.diff(ts) <= 0):
                raise ConfigError("t_sweep must be strictly increasing")
        if self.name in FIT_BASED and len(ts) < 4:
            raise ConfigError(f"{self.name} needs at least 4 t_sweep points")
        if self.speed.period is not None and not np.isclose(self.speed.period, self.grid.period):
            raise ConfigError("speed period differs from grid period")
        try:
            self.speed.check_c1(np.real(self.speed(self.grid.x_nodes)))
            self.speed.check_c1()
        except AdmissibilityError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def thresholds(self) -> dict:
        return {**load_defaults(), **self.tolerances}

    def to_dict(self) -> dict:
        return {"name": self.name, "grid": self.grid.to_dict(), "speed": self.speed.to_dict(),
                "t_sweep": list(self.t_sweep), "seeds": list(self.seeds),
                "tolerances": dict(self.tolerances), "params": dict(self.params)}

    @property
    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def with_n(self, n):
        return ExperimentConfig(self.name, GridSpec(n, self.grid.period), self.speed, self.t_sweep,
                                self.seeds, self.tolerances, self.output_dir, self.params)

    @classmethod
    def from_dict(cls, d, output_dir=None):
        try:
            grid = GridSpec(int(d["grid"]["n"]), float(d["grid"].get("period", 1.0)))
            speed = SpeedProfile.from_dict(d["speed"], d["speed"].get("period", grid.period))
            return cls(name=d["name"], grid=grid, speed=speed,
                       t_sweep=tuple(parse_t(t) for t in d.get("t_sweep", ())),
                       seeds=tuple(int(s) for s in d.get("seeds", (0,))),
                       tolerances=dict(d.get("tolerances", {})),
                       output_dir=output_dir or d.get("output_dir"),
                       params=dict(d.get("params", {})))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc


@dataclass
class ExperimentReport:
    name: str
    inputs_digest: str
    tables: dict
    fits: dict
    verdict: dict
    runtime: float
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdict.values())

    def to_dict(self):
        return {"name": self.name, "inputs_digest": self.inputs_digest, "tables": self.tables,
                "fits": self.fits, "verdict": self.verdict, "passed": self.passed,
                "runtime_seconds": self.runtime, "notes": self.notes}


# Table I/O.  Floats are written with 17 significant digits so reruns are byte-identical.

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_table(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def read_table(path: Path) -> dict:
    """Columns as lists; numeric columns become float arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = {}
    for key in (rows[0].keys() if rows else []):
        vals = [r[key] for r in rows]
        try:
            cols[key] = np.array([float(v) if v != "" else np.nan for v in vals])
        except ValueError:
            cols[key] = vals
    return cols


def write_meta(path: Path, meta: dict):
    write_table(path, ["key", "value"], [(k, json.dumps(v)) for k, v in sorted(meta.items())])


def read_meta(path: Path) -> dict:
    with open(path, newline="") as fh:
        return {r["key"]: json.loads(r["value"]) for r in csv.DictReader(fh)}


def _logger(name):
    return logging.getLogger(f"semiclass_lab.{name}")


def _fit_dict(fit):
    return fit.to_dict() if fit is not None else None


def _slope_ok(fit, thr):
    return (fit is not None and abs(fit.slope - thr["slope_target"]) <= thr["slope_band"]
            and fit.r2 >= thr["fit_r2_min"])


def _spread_ok(values, factor):
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.isfinite(v)) and np.all(v > 0) and v.max() / v.min() < factor)


def _stable(a, b, rel, floor):
    return bool(abs(a - b) <= rel * max(abs(a), abs(b)) or max(abs(a), abs(b)) < floor)


# Experiments.

def run_oracle(cfg: ExperimentConfig, out: Path):
    """RK4 against the constant-c multiplier solution, plus energy conservation."""
    if not cfg.speed.is_constant:
        raise ConfigError("oracle needs a constant speed profile")
    p = cfg.params
    T = float(p.get("T", 1.0))
    base = dict(grid=cfg.grid, speed=cfg.speed, t_final=T, theta=float(p.get("theta", 0.1)),
                initial_data=p.get("initial_data", {"kind": "gaussian"}),
                n_outputs=int(p.get("n_outputs", 100)))
    rk = ev.solve(ev.IvpConfig(stepper="rk4", **base))
    ex = ev.solve(ev.IvpConfig(stepper="exact_constant_c", **base))
    e0 = l2_norm(rk.states[0]) ** 2  # p^{-1}(x, 0 D) is the identity
    rows = []
    for i, t in enumerate(rk.times):
        err = l2_norm(rk.states[i] - ex.states[i]) / max(l2_norm(ex.states[i]), 1e-300)
        erk = e0 if t == 0 else rk.energies[i]
        eex = e0 if t == 0 else ex.energies[i]
        rows.append((t, l2_norm(rk.states[i]), l2_norm(ex.states[i]), err, erk, eex))
    write_table(out / "oracle.csv", ["time", "rk4_l2", "exact_l2", "rel_error", "energy_rk4", "energy_exact"], rows)
    return {"oracle": "oracle.csv"}, {"T": T, "rk4_steps": rk.steps}


def verdict_oracle(out: Path, meta, thr):
    tab = read_table(out / "oracle.csv")
    t = tab["time"]
    lo, hi = thr["conservation_window"]
    win = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    e0 = tab["energy_exact"][0]
    cons_ex = float(np.max(np.abs(tab["energy_exact"][win] - e0)) / e0) if np.any(win) else np.nan
    cons_rk = float(np.max(np.abs(tab["energy_rk4"][win] - e0)) / e0) if np.any(win) else np.nan
    err = float(np.max(tab["rel_error"]))
    fits = {"max_rel_error": err, "exact_conservation": cons_ex, "stepper_conservation": cons_rk}
    verdict = {"rk4_matches_exact": err <= thr["oracle_rel_error"],
               "exact_conserves_energy": cons_ex <= thr["exact_conservation"],
               "rk4_conserves_energy": cons_rk <= thr["stepper_conservation"]}
    return fits, verdict


def run_theorem1(cfg: ExperimentConfig, out: Path):
    """Energy growth rates along the flow, repeated on a doubled grid and with halved steps."""
    p = cfg.params
    T = float(p.get("T", 0.5))
    theta = float(p.get("theta", 0.1))
    data = p.get("initial_data", {"kind": "gaussian", "width": cfg.grid.period / 8})
    n_out = int(p.get("n_outputs", 100))
    runs = {"base": (cfg.grid, theta), "n_doubled": (cfg.grid.refined(), theta),
            "dt_halved": (cfg.grid, theta / 2)}
    log = _logger("theorem1")
    e_rows, r_rows = [], []
    for label, (grid, th) in runs.items():
        tr = ev.solve(ev.IvpConfig(grid, cfg.speed.with_period(grid.period), T, "rk4", th, data,
                                   n_outputs=n_out))
        log.info("%s: n=%d theta=%g steps=%d", label, grid.n, th, tr.steps)
        for t, nrm, e in zip(tr.times, tr.norms(), tr.energies):
            e_rows.append((label, grid.n, th, t, nrm, e if np.isfinite(e) else ""))
        rate = ev.gronwall_rate(tr)
        idx = {float(t): i for i, t in enumerate(tr.times)}
        for t, r in zip(rate.times, rate.rates):
            inst = ev.instantaneous_rate(tr.states[idx[float(t)]], cfg.speed.with_period(grid.period), t)
            r_rows.append((label, grid.n, th, t, r, inst))
    write_table(out / "energy.csv", ["run", "n", "theta", "time", "l2_norm", "energy"], e_rows)
    write_table(out / "rates.csv", ["run", "n", "theta", "time", "rate", "instantaneous_rate"], r_rows)
    return {"energy": "energy.csv", "rates": "rates.csv"}, {
        "T": T, "window_start": T / 10, "constant_speed": cfg.speed.is_constant}


def verdict_theorem1(out: Path, meta, thr):
    tab = read_table(out / "rates.csv")
    runs = np.array(tab["run"])
    t0 = meta["window_start"]
    maxima = {}
    for label in ("base", "n_doubled", "dt_halved"):
        sel = (runs == label) & (tab["time"] >= t0 - 1e-12)
        maxima[label] = float(np.max(tab["rate"][sel]))
    sel = (runs == "base") & (tab["time"] >= t0 - 1e-12)
    max_abs = float(np.max(np.abs(tab["rate"][sel])))
    fd_vs_exact = float(np.max(np.abs(tab["rate"][sel] - tab["instantaneous_rate"][sel])))
    rel, floor = thr["rate_stability"], thr["rate_abs_floor"]
    fits = {"max_rate": maxima, "max_abs_rate": max_abs, "fd_vs_instantaneous": fd_vs_exact}
    verdict = {"rate_finite": all(np.isfinite(v) for v in maxima.values()),
               "stable_under_n_doubling": _stable(maxima["base"], maxima["n_doubled"], rel, floor),
               "stable_under_dt_halving": _stable(maxima["base"], maxima["dt_halved"], rel, floor)}
    if meta.get("constant_speed"):
        verdict["constant_speed_conserves"] = max_abs < thr["constant_c_rate"]
    return fits, verdict


def _eps_profile_symbol(speed: SpeedProfile, x0, eps, lo, hi, period):
    """p_eps^{-1} with c_eps = c on I_eps, blended to c(x0) outside and kept in [lo, hi]."""
    c_ref = float(np.real(speed(np.array([x0])))[0])

    def c_eps(x):
        w = smooth_step(periodic_offset(x, x0, period) / (2 * eps))
        return np.clip(c_ref + w * (np.real(speed(x)) - c_ref), lo, hi)

    def p_inv(x, xi):
        cx = c_eps(x)
        return (1 + cx * np.abs(xi)) ** (-1 / cx)

    return Symbol(p_inv, -1 / hi, "custom", meta={"period": period, "part": "p_inv_eps"})


def run_theorem2(cfg: ExperimentConfig, out: Path):
    """Wave-packet probes of the localized two-sided estimate."""
    p = cfg.params
    L = cfg.grid.period
    x0 = float(p.get("x0", L / 2))
    eps = float(p.get("eps", L / 5))
    sigma = float(p.get("sigma", 0.08))
    us = [float(u) for u in p.get("u_values", 2.0 ** np.arange(3, 7.01, 0.5))]
    n_probe = int(p.get("n_probe", 2**16))
    away = float(p.get("away_offset", L / 2))
    tol = float(p.get("support_tol", 1e-13))
    log = _logger("theorem2")
    big = GridSpec(n_probe, L)
    speed = cfg.speed.with_period(L)
    chi = make_bump(x0, eps, L)
    in_i = np.abs(periodic_offset(big.x_nodes, x0, L)) < eps
    c_on = np.real(speed(big.x_nodes[in_i]))
    c_plus, c_minus = float(c_on.max()) + eps, float(c_on.min()) - eps
    if c_minus <= 0:
        raise ConfigError(f"eps={eps} too large: inf c - eps = {c_minus}")
    s_minus, s_plus = -1 / c_minus, -1 / c_plus
    plateau = bool(np.ptp(c_on) < 1e-12)
    m1 = speed.m1
    pinv = make_symbol_p_inv(speed)
    peps = _eps_profile_symbol(speed, x0, eps, c_minus, c_plus, L)
    chiv = np.real(chi(big.x_nodes, 0.0))
    probe_rows, const_rows = [], []
    for t in cfg.t_sweep:
        C = semicommutator(CommutatorSpec(peps, chi, t), cfg.grid)
        const_rows.append((t, operator_norm(C, (-m1, t), (0.0, t)) / t))
        for placement, center in (("in", x0), ("away", (x0 + away) % L)):
            for u in us:
                f = ev.wave_packet(big, u / t, center, sigma)
                Pf = apply_symbol(pinv, f, t, support_tol=tol)
                cf = GridFunction(big, chiv * f.values)
                probe_rows.append((t, u, u / t, placement, l2_norm(GridFunction(big, chiv * Pf.values)),
                                   l2_norm(cf), hst_norm(cf, s_minus, t), hst_norm(cf, s_plus, t),
                                   t * hst_norm(f, -m1, t)))
        log.info("t=%g done (C0=%.4g)", t, const_rows[-1][1])
    write_table(out / "probes.csv", ["t", "u", "xi0", "placement", "lhs", "chi_l2", "chi_hs_minus",
                                     "chi_hs_plus", "slack"], probe_rows)
    write_table(out / "constants.csv", ["t", "C0"], const_rows)
    c_loc = float(c_on.mean())
    return {"probes": "probes.csv", "constants": "constants.csv"}, {
        "s_minus": s_minus, "s_plus": s_plus, "plateau": plateau, "c_loc": c_loc,
        "expected_exponent": -1 / c_loc if plateau else None, "eps": eps, "x0": x0}


def verdict_theorem2(out: Path, meta, thr):
    pr = read_table(out / "probes.csv")
    cs = read_table(out / "constants.csv")
    place = np.array(pr["placement"])
    ts = cs["t"]
    c0 = dict(zip(ts, cs["C0"]))
    exps, c1s, c2s = [], [], []
    for t in ts:
        sel = (pr["t"] == t) & (place == "in")
        u = pr["u"][sel]
        fit = fit_loglog(np.abs(1 + 2j * np.pi * u), pr["lhs"][sel] / pr["chi_l2"][sel])
        exps.append(fit.slope)
        c2s.append(float(np.max(pr["lhs"][sel] / pr["chi_hs_plus"][sel])))
        c1s.append(float(np.min((pr["lhs"][sel] + c0[t] * pr["slack"][sel]) / pr["chi_hs_minus"][sel])))
    exps = np.array(exps)
    rel = thr["exponent_rel_tol"]
    if meta.get("plateau"):
        target = meta["expected_exponent"]
        exp_ok = bool(np.all(np.abs(exps - target) <= rel * abs(target)))
    else:
        lo, hi = meta["s_minus"], meta["s_plus"]
        exp_ok = bool(np.all((exps >= lo - rel * abs(lo)) & (exps <= hi + rel * abs(hi))))

    def stable(v):
        v = np.asarray(v)
        return bool(np.all(np.abs(v / np.median(v) - 1) <= thr["constant_stability"]))

    holds = True
    for i, t in enumerate(ts):
        sel = pr["t"] == t
        up = c2s[i] * pr["chi_hs_plus"][sel] + c0[t] * pr["slack"][sel]
        low = c1s[i] * pr["chi_hs_minus"][sel] - c0[t] * pr["slack"][sel]
        a = pr["lhs"][sel]
        holds &= bool(np.all(a <= up * (1 + 1e-9) + 1e-300) and np.all(low <= a * (1 + 1e-9) + 1e-300))
    fits = {"exponents": exps.tolist(), "C0": list(cs["C0"]), "C1": c1s, "C2": c2s}
    verdict = {"local_smoothing_exponent": exp_ok, "sandwich_holds": holds,
               "C0_stable": stable(cs["C0"]), "C1_stable": stable(c1s), "C2_stable": stable(c2s)}
    return fits, verdict


def run_commutator_scaling(cfg: ExperimentConfig, out: Path):
    """||c_t(p^{-1}, d)|| and its lowest-frequency localized piece from H^{-m1}_t to L2."""
    speed = cfg.speed.with_period(cfg.grid.period)
    m1 = speed.m1
    pinv, d = make_symbol_p_inv(speed), make_symbol_d(speed)
    psi = make_dyadic_partition(0)[0]
    laws = cfg.params.get("laws", ["semicommutator", "localized_low"])
    rows = []
    for t in cfg.t_sweep:
        sp = CommutatorSpec(pinv, d, t)
        if "semicommutator" in laws:
            rows.append((t, "semicommutator", operator_norm(semicommutator(sp, cfg.grid), (-m1, t), (0.0, t)),
                         f"H^-{m1:.6g}_t", "L2"))
        if "localized_low" in laws:
            op = localized_commutator(CommutatorSpec(pinv, d, t, psi), cfg.grid)
            rows.append((t, "localized_low", operator_norm(op, (-m1, t), (0.0, t)), f"H^-{m1:.6g}_t", "L2"))
    write_table(out / "norms.csv", ["t", "law", "measured_norm", "space_from", "space_to"], rows)
    return {"norms": "norms.csv"}, {"laws": laws}


def _law_fits(tab, thr):
    laws = np.array(tab["law"])
    fits, verdict = {}, {}
    for law in dict.fromkeys(laws):
        sel = laws == law
        fit = fit_loglog(tab["t"][sel], tab["measured_norm"][sel])
        fits[law] = fit.to_dict()
        verdict[f"{law}_linear_in_t"] = _slope_ok(fit, thr) and fit.points >= thr["min_fit_points"]
    return fits, verdict


def verdict_commutator_scaling(out: Path, meta, thr):
    return _law_fits(read_table(out / "norms.csv"), thr)


def run_dyadic_decay(cfg: ExperimentConfig, out: Path):
    """Norms of the dyadic pieces of c_t(p^{-1}, d^dagger) at a fixed t."""
    p = cfg.params
    t = parse_t(p.get("t", 2.0**-6))
    speed = cfg.speed.with_period(cfg.grid.period)
    m1 = speed.m1
    adm = check_admissible(speed, cfg.grid)
    N = int(p.get("N", adm.n_supported))
    pinv = make_symbol_p_inv(speed)
    ddag = dagger_weight(make_symbol_d(speed), m1)
    j_max = int(p.get("j_max", max(1, math.ceil(math.log2(4 * t * cfg.grid.xi_max)) + 1)))
    windows = make_dyadic_partition(j_max)
    pieces = dyadic_pieces(pinv, ddag, t, cfg.grid, windows)
    full = semicommutator(CommutatorSpec(pinv, ddag, t), cfg.grid).matrix
    total = sum(op.matrix for op in pieces.values())
    tele = float(np.linalg.norm(total - full, 2) / max(np.linalg.norm(full, 2), 1e-300))
    rows = []
    for w in windows:
        j = w.meta["j"]
        status = window_status(j, t, cfg.grid)
        sp = CommutatorSpec(pinv, ddag, t, w)
        norm = operator_norm(pieces[j]) if j in pieces else 0.0
        rows.append((j, status, sp.support_distance, w.meta["support"][1], sp.interval_length,
                     norm, "L2", "L2"))
    write_table(out / "pieces.csv", ["j", "status", "support_inner", "support_outer", "interval_length",
                                     "measured_norm", "space_from", "space_to"], rows)
    return {"pieces": "pieces.csv"}, {"t": t, "N": N, "m1": m1, "telescoping_residual": tele,
                                      "threshold": N - 1.5 - m1 - cfg.thresholds["dyadic_margin"],
                                      "admissibility": list(adm.verdict), "n_supported": adm.n_supported}


def verdict_dyadic_decay(out: Path, meta, thr):
    tab = read_table(out / "pieces.csv")
    status = np.array(tab["status"])
    sel = (status == "resolved") & (tab["j"] >= 1) & (tab["measured_norm"] > 0)
    fits, verdict = {}, {}
    if np.sum(sel) >= 2:
        fit = fit_geometric(tab["j"][sel], tab["measured_norm"][sel])
        fits["geometric"] = fit.to_dict()
        fits["decay_exponent"] = -fit.slope
        verdict["geometric_decay"] = -fit.slope >= meta["threshold"]
    else:
        verdict["geometric_decay"] = False
    verdict["telescoping_sum"] = meta["telescoping_residual"] <= 1e-6
    return fits, verdict


def run_coercivity(cfg: ExperimentConfig, out: Path):
    speed = cfg.speed.with_period(cfg.grid.period)
    m1 = speed.m1
    p, pinv = make_symbol_p(speed), make_symbol_p_inv(speed)
    rows = []
    for t in cfg.t_sweep:
        C = semicommutator(CommutatorSpec(p, pinv, t), cfg.grid)
        P = quantize_semiclassical(p, t, cfg.grid)
        Pi = quantize_semiclassical(pinv, t, cfg.grid)
        I = identity(cfg.grid)
        resid = float(np.max(np.abs((I + C).matrix - (P @ Pi).matrix)))
        rows.append((t, operator_norm(C, (-m1, t), (-m1, t)),
                     smallest_singular_value(Pi, (-m1, t), (0.0, t)),
                     smallest_singular_value(I + C, (-m1, t), (-m1, t)), resid))
    write_table(out / "coercivity.csv", ["t", "commutator_norm", "sigma_min_weighted_p_inv",
                                         "sigma_min_identity_plus_c", "identity_residual"], rows)
    return {"coercivity": "coercivity.csv"}, {"m1": m1}


def verdict_coercivity(out: Path, meta, thr):
    tab = read_table(out / "coercivity.csv")
    t, c = tab["t"], tab["commutator_norm"]
    small = t <= thr["coercivity_small_t"] + 1e-15
    fit = fit_loglog(t, c)
    above = t[c >= 1]
    fits = {"commutator": fit.to_dict(), "T_estimate": float(above[0]) if len(above) else None,
            "sigma_min_range": [float(tab["sigma_min_weighted_p_inv"].min()),
                                float(tab["sigma_min_weighted_p_inv"].max())]}
    verdict = {"small_t_bound": bool(np.any(small) and np.all(c[small] <= thr["coercivity_bound"])),
               "commutator_linear_in_t": _slope_ok(fit, thr),
               "sigma_min_uniform": _spread_ok(tab["sigma_min_weighted_p_inv"], thr["spread_factor"]),
               "identity_plus_c_invertible": bool(np.all(tab["sigma_min_identity_plus_c"] > 0)),
               "product_identity": bool(np.all(tab["identity_residual"] <= 1e-10))}
    return fits, verdict


def run_boundedness(cfg: ExperimentConfig, out: Path):
    speed = cfg.speed.with_period(cfg.grid.period)
    m1, m2 = speed.m1, speed.m2
    d, p = make_symbol_d(speed), make_symbol_p(speed)
    pid = dagger_weight(make_symbol_p_inv(speed), m2)
    rows = []
    for t in cfg.t_sweep:
        rows.append((t, "d", operator_norm(quantize_semiclassical(d, t, cfg.grid)), "L2", "L2"))
        rows.append((t, "p_inv_weighted", operator_norm(quantize_semiclassical(pid, t, cfg.grid)), "L2", "L2"))
        rows.append((t, "p", operator_norm(quantize_semiclassical(p, t, cfg.grid), (0.0, t), (-m1, t)),
                     "L2", f"H^-{m1:.6g}_t"))
    write_table(out / "norms.csv", ["t", "law", "measured_norm", "space_from", "space_to"], rows)
    return {"norms": "norms.csv"}, {"m1": m1, "m2": m2}


def verdict_boundedness(out: Path, meta, thr):
    tab = read_table(out / "norms.csv")
    laws = np.array(tab["law"])
    fits, verdict = {}, {}
    for law in dict.fromkeys(laws):
        v = tab["measured_norm"][laws == law]
        fits[law] = {"min": float(v.min()), "max": float(v.max())}
        verdict[f"{law}_uniform_in_t"] = _spread_ok(v, thr["spread_factor"])
    return fits, verdict


def run_seminorm_scaling(cfg: ExperimentConfig, out: Path):
    speed = cfg.speed.with_period(cfg.grid.period)
    m1 = speed.m1
    p = make_symbol_p(speed)
    pi, _ = decompose_pi_sigma(p, speed)
    m_idx = [tuple(x) for x in cfg.params.get("M_indices", [[0, 0], [1, 1], [2, 2]])]
    n_idx = [tuple(x) for x in cfg.params.get("N_indices", [[2, 1]])]
    rows = []
    for t in cfg.t_sweep:
        for j, k in m_idx:
            e = seminorm_M(p.rescaled(t), j, k, m1, cfg.grid)
            rows.append(("M", j, k, m1, t, e.value, e.refined_value, ";".join(e.flags)))
        for s, k in n_idx:
            e = seminorm_N(pi.rescaled(t), s, k, m1, cfg.grid)
            rows.append(("N", s, k, m1, t, e.value, e.refined_value, ";".join(e.flags)))
    write_table(out / "seminorms.csv", ["kind", "j_or_s", "k", "m", "t", "value", "refined_value", "flags"], rows)
    return {"seminorms": "seminorms.csv"}, {"m1": m1}


def verdict_seminorm_scaling(out: Path, meta, thr):
    tab = read_table(out / "seminorms.csv")
    kinds = np.array(tab["kind"])
    fits, verdict = {}, {}
    keys = dict.fromkeys(zip(kinds, tab["j_or_s"], tab["k"]))
    for kind, a, b in keys:
        sel = (kinds == kind) & (tab["j_or_s"] == a) & (tab["k"] == b)
        t, v = tab["t"][sel], tab["value"][sel]
        order = np.argsort(-t)  # from t = 1 downwards
        v = v[order]
        name = f"{kind}_{a:g}_{b:g}"
        fits[name] = {"t": t[order].tolist(), "value": v.tolist()}
        verdict[f"{name}_nonincreasing"] = bool(np.all(v[1:] <= v[:-1] * (1 + thr["seminorm_tol"])))
    return fits, verdict


def _smooth_gamma(grid):
    w = 2 * np.pi * grid.x_nodes / grid.period
    return np.exp(np.cos(w)) * (1 + 0.3 * np.sin(2 * w))


def run_gamma_identity(cfg: ExperimentConfig, out: Path):
    g = cfg.grid
    rows, drows = [], []
    gam0 = gamma_samples(default_gamma, g)
    gam1 = _smooth_gamma(g).astype(complex)
    dgam1 = spectral_derivative(gam1, g, 1)
    g0n = np.sqrt(g.dx * np.sum(np.abs(gam0) ** 2))
    g1n = np.sqrt(g.dx * np.sum(np.abs(dgam1) ** 2))
    C = duality_constant(g)
    for seed in cfg.seeds:
        rng = np.random.default_rng(seed)
        f = GridFunction(g, rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n))
        for sign in (+1, -1):
            G = gamma_transform(f, gam0, sign)
            lhs, rhs = two_variable_l2(G, g), g0n * l2_norm(f)
            rows.append((seed, sign, 0, lhs, rhs, abs(lhs - rhs) / rhs))
            G1 = spectral_derivative(gamma_transform(f, gam1, sign), g, 1, axis=0)
            lhs, rhs = two_variable_l2(G1, g), g1n * l2_norm(f)
            rows.append((seed, sign, 1, lhs, rhs, abs(lhs - rhs) / rhs))
        gx = np.fft.ifft(np.where(np.abs(np.fft.fftfreq(g.n, g.dx)) <= 4.0,
                                  rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n), 0))
        bxi = np.exp(-(g.freq_nodes / (g.xi_max / 4)) ** 2) * rng.standard_normal(g.n)
        lhs, rhs = duality_bound_check(np.outer(gx, bxi), g)
        drows.append((seed, lhs, rhs, C, lhs / rhs))
    write_table(out / "gamma.csv", ["seed", "sign", "order", "lhs", "rhs", "rel_error"], rows)
    write_table(out / "duality.csv", ["seed", "lhs", "rhs", "constant", "ratio"], drows)
    return {"gamma": "gamma.csv", "duality": "duality.csv"}, {"duality_constant": C}


def verdict_gamma_identity(out: Path, meta, thr):
    tab = read_table(out / "gamma.csv")
    du = read_table(out / "duality.csv")
    o = tab["order"]
    fits = {"max_rel_error_order0": float(np.max(tab["rel_error"][o == 0])),
            "max_rel_error_order1": float(np.max(tab["rel_error"][o == 1])),
            "max_duality_ratio": float(np.max(du["ratio"]))}
    verdict = {"plancherel": fits["max_rel_error_order0"] <= thr["gamma_tol"],
               "derivative_identity": fits["max_rel_error_order1"] <= thr["gamma_derivative_tol"],
               "duality_bound": bool(np.all(du["ratio"] <= du["constant"] * (1 + 1e-12)))}
    return fits, verdict


RUNNERS = {name: globals()[f"run_{name}"] for name in EXPERIMENTS}
VERDICTS = {name: globals()[f"verdict_{name}"] for name in EXPERIMENTS}

PLOTS = {
    "oracle": ("oracle.csv", "time", "rel_error", "logscale y"),
    "theorem1": ("rates.csv", "time", "rate", ""),
    "theorem2": ("probes.csv", "u", "lhs", "logscale xy"),
    "commutator_scaling": ("norms.csv", "t", "measured_norm", "logscale xy"),
    "dyadic_decay": ("pieces.csv", "j", "measured_norm", "logscale y"),
    "coercivity": ("coercivity.csv", "t", "commutator_norm", "logscale xy"),
    "boundedness": ("norms.csv", "t", "measured_norm", "logscale x"),
    "seminorm_scaling": ("seminorms.csv", "t", "value", "logscale xy"),
    "gamma_identity": ("gamma.csv", "seed", "rel_error", "logscale y"),
}


def write_plot_script(name, out: Path):
    table, xcol, ycol, scale = PLOTS[name]
    with open(out / table) as fh:
        header = fh.readline().strip().split(",")
    xi, yi = header.index(xcol) + 1, header.index(ycol) + 1
    lines = ["set datafile separator ','", f"set title '{name}'", f"set xlabel '{xcol}'",
             f"set ylabel '{ycol}'"]
    if scale:
        lines.append(f"set {scale}")
    lines.append(f"plot '{table}' every ::1 using {xi}:{yi} with linespoints notitle")
    (out / "plot.gp").write_text("\n".join(lines) + "\n")


def evaluate(name, out: Path, thresholds=None):
    """Recompute fits and verdict from the tables in ``out``."""
    out = Path(out)
    meta = read_meta(out / "meta.csv")
    thr = {**load_defaults(), **(thresholds or {}), **meta.get("thresholds", {})}
    return VERDICTS[name](out, meta, thr)


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> ExperimentReport:
    out = Path(output_dir or cfg.output_dir or Path("results") / cfg.name)
    out.mkdir(parents=True, exist_ok=True)
    log = _logger(cfg.name)
    log.info("starting (n=%d, L=%g)", cfg.grid.n, cfg.grid.period)
    start = time.perf_counter()
    tables, meta = RUNNERS[cfg.name](cfg, out)
    meta = {**meta, "thresholds": cfg.thresholds, "csv_version": CSV_VERSION,
            "grid": cfg.grid.to_dict(), "inputs_digest": cfg.digest}
    write_meta(out / "meta.csv", meta)
    tables = {**tables, "meta": "meta.csv"}
    fits, verdict = evaluate(cfg.name, out)
    verdict = {k: bool(v) for k, v in verdict.items()}
    write_plot_script(cfg.name, out)
    runtime = time.perf_counter() - start
    report = ExperimentReport(cfg.name, cfg.digest, tables, fits, verdict, runtime,
                              {k: v for k, v in meta.items() if k != "thresholds"})
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True, default=float))
    (out / "fits.json").write_text(json.dumps(fits, indent=2, sort_keys=True, default=float))
    log.info("finished in %.1fs: %s", runtime, "pass" if report.passed else "FAIL")
    return report
