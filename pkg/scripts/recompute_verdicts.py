"""Re-derive the headline numbers of finished runs from their CSV tables alone.

Uses only csv, json and numpy (no package code), so it is an independent
check on the verdicts stored in report.json.

    python scripts/recompute_verdicts.py results
"""
import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np


def table(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {}
    for key in rows[0]:
        vals = [r[key] for r in rows]
        try:
            out[key] = np.array([float(v) if v else np.nan for v in vals])
        except ValueError:
            out[key] = np.array(vals)
    return out


def meta(path):
    with open(path, newline="") as fh:
        return {r["key"]: json.loads(r["value"]) for r in csv.DictReader(fh)}


def slope_r2(x, y):
    lx, ly = np.log(x), np.log(y)
    a, b = np.polyfit(lx, ly, 1)
    r2 = 1 - np.sum((ly - a * lx - b) ** 2) / np.sum((ly - ly.mean()) ** 2)
    return a, r2


def slope_ok(a, r2, thr):
    return abs(a - thr["slope_target"]) <= thr["slope_band"] and r2 >= thr["fit_r2_min"]


def check_oracle(d, m, thr):
    tab = table(d / "oracle.csv")
    t = tab["time"]
    lo, hi = thr["conservation_window"]
    win = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    e0 = tab["energy_exact"][0]
    err = tab["rel_error"].max()
    ex = np.max(np.abs(tab["energy_exact"][win] - e0)) / e0
    rk = np.max(np.abs(tab["energy_rk4"][win] - e0)) / e0
    ok = err <= thr["oracle_rel_error"] and ex <= thr["exact_conservation"] and rk <= thr["stepper_conservation"]
    return ok, f"error {err:.2e}, conservation exact {ex:.2e} / rk4 {rk:.2e}"


def check_theorem1(d, m, thr):
    tab = table(d / "rates.csv")
    keep = tab["time"] >= m["window_start"] - 1e-12
    mx = {r: tab["rate"][keep & (tab["run"] == r)].max() for r in ("base", "n_doubled", "dt_halved")}
    b = mx["base"]

    def stable(v):
        return abs(v - b) <= thr["rate_stability"] * max(abs(v), abs(b)) or max(abs(v), abs(b)) < thr["rate_abs_floor"]

    ok = all(np.isfinite(v) for v in mx.values()) and stable(mx["n_doubled"]) and stable(mx["dt_halved"])
    return ok, "max rates " + ", ".join(f"{k} {v:.6g}" for k, v in mx.items())


def check_theorem2(d, m, thr):
    pr = table(d / "probes.csv")
    sel_in = pr["placement"] == "in"
    exps = []
    for t in np.unique(pr["t"]):
        s = sel_in & (pr["t"] == t)
        exps.append(slope_r2(np.abs(1 + 2j * np.pi * pr["u"][s]), pr["lhs"][s] / pr["chi_l2"][s])[0])
    exps = np.array(exps)
    if m.get("plateau"):
        target = m["expected_exponent"]
        ok = bool(np.all(np.abs(exps - target) <= thr["exponent_rel_tol"] * abs(target)))
    else:
        lo, hi = m["s_minus"], m["s_plus"]
        ok = bool(np.all((exps >= lo * (1 + thr["exponent_rel_tol"])) & (exps <= hi * (1 - thr["exponent_rel_tol"]))))
    return ok, f"exponents {np.round(exps, 4).tolist()} (sandwich constants: see report.json)"


def check_laws(d, m, thr):
    tab = table(d / "norms.csv")
    ok, parts = True, []
    for law in dict.fromkeys(tab["law"]):
        s = tab["law"] == law
        a, r2 = slope_r2(tab["t"][s], tab["measured_norm"][s])
        ok &= slope_ok(a, r2, thr) and s.sum() >= thr["min_fit_points"]
        parts.append(f"{law} slope {a:.4f} R2 {r2:.4f}")
    return ok, "; ".join(parts)


def check_dyadic(d, m, thr):
    tab = table(d / "pieces.csv")
    s = (tab["status"] == "resolved") & (tab["j"] >= 1) & (tab["measured_norm"] > 0)
    rate = -np.polyfit(tab["j"][s], np.log2(tab["measured_norm"][s]), 1)[0]
    ok = rate >= m["threshold"] and m["telescoping_residual"] <= 1e-6
    return ok, f"decay exponent {rate:.3f} vs threshold {m['threshold']:.3f}"


def check_coercivity(d, m, thr):
    tab = table(d / "coercivity.csv")
    t, c, s = tab["t"], tab["commutator_norm"], tab["sigma_min_weighted_p_inv"]
    small = t <= thr["coercivity_small_t"] + 1e-15
    a, r2 = slope_r2(t, c)
    ok = (small.any() and c[small].max() <= thr["coercivity_bound"] and slope_ok(a, r2, thr)
          and s.min() > 0 and s.max() / s.min() < thr["spread_factor"]
          and np.all(tab["identity_residual"] <= 1e-10))
    return ok, f"slope {a:.4f}, small-t max {c[small].max():.3e}, sigma_min spread {s.max() / s.min():.3f}"


def check_boundedness(d, m, thr):
    tab = table(d / "norms.csv")
    ok, parts = True, []
    for law in dict.fromkeys(tab["law"]):
        v = tab["measured_norm"][tab["law"] == law]
        ok &= v.min() > 0 and v.max() / v.min() < thr["spread_factor"]
        parts.append(f"{law} spread {v.max() / v.min():.3f}")
    return ok, "; ".join(parts)


def check_seminorms(d, m, thr):
    tab = table(d / "seminorms.csv")
    ok, worst = True, 0.0
    for key in dict.fromkeys(zip(tab["kind"], tab["j_or_s"], tab["k"])):
        s = (tab["kind"] == key[0]) & (tab["j_or_s"] == key[1]) & (tab["k"] == key[2])
        v = tab["value"][s][np.argsort(-tab["t"][s])]
        worst = max(worst, float(np.max(v[1:] / v[:-1])))
        ok &= bool(np.all(v[1:] <= v[:-1] * (1 + thr["seminorm_tol"])))
    return ok, f"largest consecutive ratio {worst:.4f}"


def check_gamma(d, m, thr):
    g, du = table(d / "gamma.csv"), table(d / "duality.csv")
    e0 = g["rel_error"][g["order"] == 0].max()
    e1 = g["rel_error"][g["order"] == 1].max()
    ok = e0 <= thr["gamma_tol"] and e1 <= thr["gamma_derivative_tol"] and np.all(du["ratio"] <= du["constant"] * (1 + 1e-12))
    return ok, f"Plancherel {e0:.1e}, derivative {e1:.1e}, duality ratio {du['ratio'].max():.3f} <= {du['constant'][0]:.3f}"


CHECKS = {"oracle": check_oracle, "theorem1": check_theorem1, "theorem2": check_theorem2,
          "commutator_scaling": check_laws, "dyadic_decay": check_dyadic, "coercivity": check_coercivity,
          "boundedness": check_boundedness, "seminorm_scaling": check_seminorms, "gamma_identity": check_gamma}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("results", nargs="?", default="results")
    args = parser.parse_args(argv)
    root = Path(args.results)
    disagreements = failures = 0
    for name, check in CHECKS.items():
        d = root / name
        if not (d / "meta.csv").exists():
            print(f"{name:20s} missing")
            continue
        m = meta(d / "meta.csv")
        ok, detail = check(d, m, m["thresholds"])
        stored = json.loads((d / "report.json").read_text())["verdict"]
        stored_ok = all(stored.values())
        agree = bool(ok) == stored_ok
        disagreements += not agree
        failures += not ok
        print(f"{name:20s} {'pass' if ok else 'FAIL':4s} {'' if agree else '(report disagrees) '}{detail}")
    return 1 if disagreements else (2 if failures else 0)


if __name__ == "__main__":
    sys.exit(main())
