"""Command-line front end: synthesize corrections, sweep gate times, verify results.

Every subcommand reads an optional JSON config (``--config``) whose keys
mirror the long options; command-line values win.  Outputs go to ``--out``:

* ``fidelity.csv`` (or ``squeezing.csv`` for the cavity) with one row per
  gate time,
* ``coefficients.json`` with the per-order Fourier coefficients,
* ``diagnostics.json`` with solver residuals and divergence flags,
* ``errors.json`` whenever a sweep point fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .errors import DivergingCorrection, MagnusPulseError
from .magnus import integrate_magnus, magnus_defect
from .metrics import bloch_trajectory, pulse_spectrum, spectral_peaks
from .scenarios import REGISTRY, build_scenario
from .scenarios.transmon import drag_baseline
from .solver import QUAD_TOL, _interaction_hamiltonian, split_params

log = logging.getLogger("magnuspulse")

CSV_SCHEMA = 1
DEFAULT_ORDER = {"qubit": 2, "pdc": 6, "transmon": 6, "snap": 4}
DEFAULT_SWEEP = {"qubit": "3:10:30", "pdc": "5:30:6", "transmon": "3:15:25", "snap": "50:50:1"}
DEFAULT_EMIT = {"fidelity_csv": True, "coefficients_json": True, "pulse_csv": False,
                "spectrum_csv": False, "bloch_csv": False}
MAGNUS_TOL = 1e-11
FMT = "{:.15e}"


class ConfigError(ValueError):
    pass


# --- configuration ------------------------------------------------------------

def parse_sweep(spec):
    """``"a:b:n"``, a number, a list or ``{"start", "end", "count"}`` -> list of floats."""
    if isinstance(spec, (int, float)):
        return [float(spec)]
    if isinstance(spec, dict):
        spec = f"{spec['start']}:{spec['end']}:{spec['count']}"
    if isinstance(spec, (list, tuple)):
        vals = [float(v) for v in spec]
    else:
        parts = str(spec).split(":")
        if len(parts) == 1:
            vals = [float(parts[0])]
        elif len(parts) == 3:
            start, end, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ConfigError("sweep count must be at least 1")
            vals = list(np.linspace(start, end, count)) if count > 1 else [start]
        else:
            raise ConfigError(f"bad sweep {spec!r}; expected START:END:COUNT")
    if not vals:
        raise ConfigError("sweep is empty")
    if any(v <= 0 for v in vals):
        raise ConfigError("gate times must be positive")
    return [float(v) for v in vals]


def load_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    for key in ("scenario", "order", "seed", "out", "tol", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "tf_sweep", None) is not None:
        cfg["tf_sweep"] = args.tf_sweep
    name = cfg.get("scenario")
    if name not in REGISTRY:
        raise ConfigError(f"scenario must be one of {sorted(REGISTRY)}, got {name!r}")
    cfg.setdefault("params", {})
    cfg.setdefault("order", DEFAULT_ORDER[name])
    cfg["order"] = int(cfg["order"])
    if not 1 <= cfg["order"] <= 6:
        raise ConfigError("order must be between 1 and 6")
    cfg["tf_sweep"] = parse_sweep(cfg.get("tf_sweep", DEFAULT_SWEEP[name]))
    cfg.setdefault("seed", 0)
    if cfg["seed"] is None:
        raise ConfigError("a seed is required")
    cfg["seed"] = int(cfg["seed"])
    cfg["tol"] = float(cfg.get("tol", 1e-11))
    cfg.setdefault("out", "magnuspulse_out")
    cfg["emit"] = {**DEFAULT_EMIT, **cfg.get("emit", {})}
    cfg["workers"] = int(cfg.get("workers", 1))
    return cfg


def public_params(scenario):
    return {k: v for k, v in scenario.params.items() if not k.startswith("_")}


# --- one sweep point ----------------------------------------------------------

def _coeff_records(scenario, x):
    out = []
    for ch, p in zip(scenario.channels, split_params(scenario.channels, x)):
        fld = ch.template.to_field(p, scenario.t_f)
        out.append({"channel": ch.name, "operator": ch.operator,
                    "k": list(range(fld.k_max + 1)), "c": fld.c.tolist(), "d": fld.d.tolist()})
    return out


def _magnus_defect(scenario, x, order):
    if not scenario.basis.exact_matrices:
        return None
    hI = _interaction_hamiltonian(scenario, scenario.frame(), x)
    stack = integrate_magnus(hI, scenario.basis, order, scenario.t_f, tol=MAGNUS_TOL)
    return magnus_defect(stack, hI, scenario.basis, scenario.t_f)


def _metrics(name, scenario, x, tol):
    if name == "pdc":
        rep = scenario.squeezing(x, tol=tol)
        return {"S": rep.S, "phi": rep.phi}
    rep = scenario.evaluate(x, tol=tol)
    return {"eps": rep.epsilon, "leakage": rep.leakage}


def run_point(name, tf, params, order, seed, tol):
    """Correct one scenario instance and evaluate every order.

    Returns a JSON-serializable record; raises library errors unchanged.
    """
    sc = build_scenario(name, tf, params)
    failure = None
    try:
        res = sc.correct(order, seed=seed)
    except DivergingCorrection as exc:
        # keep the orders that were accepted before the blow-up
        if exc.partial is None or not exc.partial.per_order:
            raise
        res, failure = exc.partial, _error_record(tf, exc)
    rec = {"tf": tf, "t_f": sc.t_f, "params": public_params(sc),
           "uncorrected": _metrics(name, sc, None, tol), "orders": [], "error": failure}
    if name == "pdc":
        rwa = sc.rwa_squeezing(tol=tol)
        rec["rwa"] = {"S": rwa.S, "phi": rwa.phi}
    if name == "transmon":
        drag = sc.evaluate(extra=drag_baseline(sc), tol=tol)
        rec["drag"] = {"eps": drag.epsilon, "leakage": drag.leakage}
    for i, m in enumerate(res.orders, start=1):
        x = res.total(i)
        diag = {k: v for k, v in res.diagnostics[i - 1].items()
                if isinstance(v, (int, float, bool, str)) or v is None}
        rec["orders"].append({"order": m, "x": x.tolist(), "step_x": res.per_order[i - 1].tolist(),
                              "metrics": _metrics(name, sc, x, tol),
                              "coefficients": _coeff_records(sc, res.per_order[i - 1]),
                              "diagnostics": diag})
    rec["magnus_defect"] = _magnus_defect(sc, res.total(), res.orders[-1])
    return rec


def _error_record(tf, exc):
    return {"tf": tf, "error": type(exc).__name__, "message": str(exc),
            "details": {k: v for k, v in vars(exc).items()
                        if isinstance(v, (int, float, str, type(None)))}}


def _safe_point(args):
    name, tf, params, order, seed, tol = args
    try:
        rec = run_point(name, tf, params, order, seed, tol)
        return rec, rec["error"]
    except MagnusPulseError as exc:
        return None, _error_record(tf, exc)
    except Exception as exc:  # keep the sweep going; the record says what broke
        return None, {"tf": tf, "error": type(exc).__name__, "message": str(exc),
                      "traceback": traceback.format_exc(limit=5)}


# --- writers ------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return "nan"
    return FMT.format(float(v))


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def metric_table(name, records):
    """Header and rows of the per-point metric table."""
    labels = sorted({o["order"] for r in records for o in r["orders"]})

    def per_order(r, key):
        got = {o["order"]: o["metrics"][key] for o in r["orders"]}
        return [got.get(m) for m in labels]

    if name == "pdc":
        header = ["t_f", "S_rwa", "S_uncorrected", "phi_uncorrected"]
        for m in labels:
            header += [f"S_order{m}", f"phi_order{m}"]
        rows = []
        for r in records:
            row = [r["tf"], r["rwa"]["S"], r["uncorrected"]["S"], r["uncorrected"]["phi"]]
            for S, phi in zip(per_order(r, "S"), per_order(r, "phi")):
                row += [S, phi]
            rows.append(row)
        return header, rows
    header = ["t_f", "eps_uncorrected"] + [f"eps_order{m}" for m in labels]
    if name == "transmon":
        header.append("eps_drag")
    rows = []
    for r in records:
        row = [r["tf"], r["uncorrected"]["eps"]] + per_order(r, "eps")
        if name == "transmon":
            row.append(r["drag"]["eps"])
        rows.append(row)
    return header, rows


def metadata(cfg):
    return {"scenario": cfg["scenario"], "params": cfg["params"], "order": cfg["order"],
            "seed": cfg["seed"], "tf_sweep": cfg["tf_sweep"],
            "tolerances": {"oracle": cfg["tol"], "quadrature": QUAD_TOL, "magnus": MAGNUS_TOL},
            "code_version": __version__, "csv_schema": CSV_SCHEMA}


def _tag(tf):
    return f"{tf:.6g}".replace(".", "p")


def _pulse_rows(sc, x, n=512):
    t = np.linspace(0.0, sc.t_f, n)
    X0, Y0 = sc.pulse_quadratures(None, t)
    X1, Y1 = sc.pulse_quadratures(x, t)
    return [list(r) for r in zip(t, X0, Y0, X1, Y1)]


def write_outputs(cfg, records, errors):
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    name = cfg["scenario"]
    emit = cfg["emit"]
    records = sorted(records, key=lambda r: r["tf"])
    if emit["fidelity_csv"] and records:
        header, rows = metric_table(name, records)
        fname = "squeezing.csv" if name == "pdc" else "fidelity.csv"
        write_csv(os.path.join(out, fname), header, rows)
    if emit["coefficients_json"]:
        doc = {"metadata": metadata(cfg), "points": records}
        with open(os.path.join(out, "coefficients.json"), "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
    diag = [{"tf": r["tf"], "magnus_defect": r["magnus_defect"],
             "orders": [o["diagnostics"] for o in r["orders"]]} for r in records]
    with open(os.path.join(out, "diagnostics.json"), "w", encoding="utf-8") as fh:
        json.dump(diag, fh, indent=1)
    if emit["pulse_csv"]:
        for r in records:
            sc = build_scenario(name, r["tf"], cfg["params"])
            write_csv(os.path.join(out, f"pulse_tf{_tag(r['tf'])}.csv"),
                      ["t", "x_original", "y_original", "x_corrected", "y_corrected"],
                      _pulse_rows(sc, np.asarray(r["orders"][-1]["x"])))
    if emit["spectrum_csv"]:
        write_spectra(cfg, records)
    if emit["bloch_csv"]:
        write_bloch(cfg, records)
    if errors:
        with open(os.path.join(out, "errors.json"), "w", encoding="utf-8") as fh:
            json.dump(errors, fh, indent=1)
    write_manifest(out, cfg, n_points=len(records), n_errors=len(errors))


def write_manifest(out, cfg, **extra):
    files = sorted(f for f in os.listdir(out) if f != "manifest.json")
    doc = {"csv_schema": CSV_SCHEMA, "code_version": __version__, "scenario": cfg["scenario"],
           "files": files, **extra}
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def write_spectra(cfg, records, rel_height=1e-2):
    out, name = cfg["out"], cfg["scenario"]
    peak_rows, snap_rows = [], []
    for r in records:
        sc = build_scenario(name, r["tf"], cfg["params"])
        x = np.asarray(r["orders"][-1]["x"])
        n = 4096
        t = np.arange(n) * sc.t_f / n
        spec = {}
        for label, xx in (("original", None), ("corrected", x)):
            X, Y = sc.pulse_quadratures(xx, t)
            omega, mag = pulse_spectrum(np.column_stack([X, Y]), sc.t_f)
            spec[label] = mag
            amp = np.hypot(mag[:, 0], mag[:, 1])
            w_pk, idx = spectral_peaks(omega, amp, rel_height)
            peak_rows += [[r["tf"], label, w, amp[i]] for w, i in zip(w_pk, idx)]
        rows = [[w, *spec["original"][i], *spec["corrected"][i]] for i, w in enumerate(omega)]
        write_csv(os.path.join(out, f"spectrum_tf{_tag(r['tf'])}.csv"),
                  ["omega", "x_original", "y_original", "x_corrected", "y_corrected"], rows)
        if name == "snap":
            n_tr = sc.params["n_trunc"]
            m0 = sc.peak_matches(None, levels=range(n_tr))
            m1 = sc.peak_matches(x, levels=range(n_tr))
            snap_rows += [[r["tf"], k, k * sc.params["chi"], float(m0[k]), float(m1[k])]
                          for k in range(n_tr)]
    write_csv(os.path.join(out, "peaks.csv"), ["t_f", "pulse", "omega", "amplitude"], peak_rows)
    if snap_rows:
        write_csv(os.path.join(out, "snap_peaks.csv"),
                  ["t_f", "k", "omega_k", "peak_original", "peak_corrected"], snap_rows)


def write_bloch(cfg, records, n=401):
    out, name = cfg["out"], cfg["scenario"]
    if name != "qubit":
        raise ConfigError("Bloch trajectories are only defined for the qubit scenario")
    for r in records:
        sc = build_scenario(name, r["tf"], cfg["params"])
        x = np.asarray(r["orders"][-1]["x"])
        t = np.linspace(0.0, sc.t_f, n)
        psi0 = np.array([1.0, 0.0], dtype=complex)
        cols = [t]
        for kw in ({"x": None}, {"x": x}, {"x": None, "include_v": False}):
            U = sc.propagate(**kw, tol=cfg["tol"])
            cols += list(bloch_trajectory(U(t) @ psi0).T)
        header = ["t"] + [f"{c}_{lab}" for lab in ("uncorrected", "corrected", "rwa")
                          for c in ("x", "y", "z")]
        write_csv(os.path.join(out, f"bloch_tf{_tag(r['tf'])}.csv"), header,
                  [list(row) for row in zip(*cols)])


# --- subcommands --------------------------------------------------------------

def execute(cfg, parallel=False):
    jobs = [(cfg["scenario"], tf, cfg["params"], cfg["order"], cfg["seed"], cfg["tol"])
            for tf in cfg["tf_sweep"]]
    if parallel and cfg["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            results = list(pool.map(_safe_point, jobs))
    else:
        results = [_safe_point(j) for j in jobs]
    records = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    for e in errors:
        print(json.dumps({"status": "error", **{k: v for k, v in e.items() if k != "traceback"}}),
              file=sys.stderr)
    write_outputs(cfg, records, errors)
    return 1 if errors else 0


def cmd_run(args):
    return execute(load_config(args), parallel=False)


def cmd_sweep(args):
    return execute(load_config(args), parallel=True)


def _load_coefficients(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def cmd_verify(args):
    """Re-simulate stored corrections and compare every stored metric."""
    doc = _load_coefficients(args.coefficients)
    meta = doc["metadata"]
    name = meta["scenario"]
    tol = meta["tolerances"]["oracle"]
    worst = 0.0
    for r in doc["points"]:
        sc = build_scenario(name, r["tf"], meta["params"])
        pairs = [(r["uncorrected"], None)] + [(o["metrics"], np.asarray(o["x"])) for o in r["orders"]]
        for stored, x in pairs:
            fresh = _metrics(name, sc, x, tol)
            for key, val in stored.items():
                worst = max(worst, abs(fresh[key] - val))
    ok = worst <= args.atol
    print(json.dumps({"status": "ok" if ok else "mismatch", "max_deviation": worst,
                      "points": len(doc["points"])}))
    return 0 if ok else 1


def _records_for(args):
    if args.coefficients:
        doc = _load_coefficients(args.coefficients)
        meta = doc["metadata"]
        cfg = {"scenario": meta["scenario"], "params": meta["params"], "tol": meta["tolerances"]["oracle"],
               "out": args.out or "magnuspulse_out"}
        return cfg, doc["points"]
    cfg = load_config(args)
    recs, errors = [], []
    for tf in cfg["tf_sweep"]:
        r, e = _safe_point((cfg["scenario"], tf, cfg["params"], cfg["order"], cfg["seed"], cfg["tol"]))
        if r is None:
            errors.append(e)
        else:
            recs.append(r)
    if errors:
        raise MagnusPulseError(json.dumps(errors))
    return cfg, recs


def cmd_spectrum(args):
    cfg, recs = _records_for(args)
    os.makedirs(cfg["out"], exist_ok=True)
    write_spectra(cfg, recs)
    write_manifest(cfg["out"], cfg)
    return 0


def cmd_bloch(args):
    cfg, recs = _records_for(args)
    os.makedirs(cfg["out"], exist_ok=True)
    write_bloch(cfg, recs)
    write_manifest(cfg["out"], cfg)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="magnuspulse", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--scenario", choices=sorted(REGISTRY))
        sp.add_argument("--order", type=int)
        sp.add_argument("--tf-sweep", dest="tf_sweep", help="START:END:COUNT in scenario units")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--tol", type=float, help="relative tolerance of the verification oracle")

    for name, fn, help_ in (("run", cmd_run, "correct and evaluate every sweep point"),
                            ("sweep", cmd_sweep, "like run, with a worker pool")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        if name == "sweep":
            sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("verify", help="re-simulate a coefficients file")
    sp.add_argument("coefficients")
    sp.add_argument("--atol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_verify)

    for name, fn in (("spectrum", cmd_spectrum), ("bloch", cmd_bloch)):
        sp = sub.add_parser(name, help=f"write {name} tables")
        common(sp)
        sp.add_argument("--coefficients", help="coefficients.json from a previous run")
        sp.set_defaults(func=fn)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MagnusPulseError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"status": "error", "error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
