"""Command-line orchestration: collide | spectrum | verify | evolve.

Configuration is a flat JSON file with explicit units in key names; outputs
are UTF-8 comma CSV with a header row plus JSON reports under the schema
kinetic-gap/report-v1.  Same config + seed reproduces byte-identical output.

Exit codes: 0 pass, 1 check failure, 2 usage/config error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

DEFAULTS = {
    "gamma": 1.0,
    "s": 0.5,
    "b0": 0.05,
    "theta_min_rad": 0.05,
    "Lv": 8.0,
    "n": 10,
    "n_theta_panels": 6,
    "n_phi": 8,
    "nodes_per_panel": 3,
    "split_R": 2.0,
    "delta": 0.0025,
    "eps": 0.1,
    "weight_k": 10,
    "l": 5.0,
    "m0": 2.5,
    "k0": None,
    "dt": 0.1,
    "t_end": 3.0,
    "integrator": "expm",
    "lx_max": 1,
    "record_every": 1,
    "picard_max_iter": 8,
    "picard_tol": 1e-9,
    "seed": 7,
    "out_dir": "kinetic-gap-out",
    "suite": "all",
    "ell_list": [[0, 0, 0], [1, 0, 0]],
    "compare_fourier": False,
    "weight": "polynomial",
}


class ConfigError(ValueError):
    pass


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}")
        unknown = sorted(set(user) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        cfg.update(user)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    def bad(fieldname, msg):
        raise ConfigError(f"config field '{fieldname}': {msg}")

    if not 0.0 < cfg["gamma"] <= 1.0:
        bad("gamma", f"must be in (0, 1], got {cfg['gamma']}")
    if not 0.0 < cfg["s"] < 1.0:
        bad("s", f"must be in (0, 1), got {cfg['s']}")
    if cfg["b0"] <= 0:
        bad("b0", "must be positive")
    if not 0.0 < cfg["theta_min_rad"] < np.pi / 2:
        bad("theta_min_rad", "must lie in (0, pi/2)")
    if cfg["Lv"] <= 0:
        bad("Lv", "must be positive")
    n = cfg["n"]
    if not isinstance(n, int) or n < 4 or n % 2 != 0:
        bad("n", f"must be an even integer >= 4, got {n}")
    if cfg["n_phi"] % 2 != 0 or cfg["n_phi"] < 2:
        bad("n_phi", "must be a positive even integer")
    if cfg["n_theta_panels"] < 2:
        bad("n_theta_panels", "must be >= 2")
    if cfg["m0"] <= max(4.0 * cfg["s"], 1.0):
        bad("m0", f"must exceed max(4s, 1) = {max(4.0 * cfg['s'], 1.0)}")
    if cfg["dt"] <= 0 or cfg["t_end"] <= 0:
        bad("dt", "dt and t_end must be positive")
    if cfg["integrator"] not in ("expm", "rk4"):
        bad("integrator", "must be 'expm' or 'rk4'")
    if not 0.0 < cfg["delta"] < 1.0:
        bad("delta", "must lie in (0, 1)")
    if not 0.0 < cfg["eps"] < 1.0:
        bad("eps", "must lie in (0, 1)")
    if cfg["split_R"] <= 0:
        bad("split_R", "must be positive")


def derived_quantities(cfg: dict) -> dict:
    l0 = int(np.ceil((37.0 + 5.0 * cfg["gamma"]) / (2.0 * cfg["m0"])))
    from .estimates import k0_default
    return {"l0": l0, "k0_effective": (cfg["k0"] if cfg["k0"] is not None
                                       else k0_default(cfg["gamma"]))}


def build_objects(cfg: dict):
    from .fields import SplitParams
    from .grids import KernelParams, build_angular, build_grid
    kp = KernelParams(gamma=cfg["gamma"], s=cfg["s"], b0=cfg["b0"],
                      theta_min=cfg["theta_min_rad"])
    grid = build_grid(cfg["Lv"], cfg["n"])
    aq = build_angular(kp, cfg["n_theta_panels"], cfg["n_phi"],
                       cfg["nodes_per_panel"])
    sp = SplitParams(R=cfg["split_R"])
    return kp, grid, aq, sp


def write_csv(path: str, columns: dict):
    keys = list(columns)
    rows = len(next(iter(columns.values()))) if columns else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(keys) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(columns[k][i]) for k in keys) + "\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _dump_json(path: str, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_collide(cfg: dict) -> int:
    from .collision import collision_invariants, q_direct, q_fourier, q_split
    from .fields import DistributionField, maxwellian, maxwellian_array
    kp, grid, aq, sp = build_objects(cfg)
    rng = np.random.default_rng(cfg["seed"])
    mu3 = maxwellian_array(grid)
    vx, vy, vz = grid.nodes
    coef = rng.standard_normal(4)
    fa = (coef[0] + 0.3 * coef[1] * vx + 0.2 * coef[2] * vy * vz
          + 0.1 * coef[3] * grid.vsq) * mu3
    f = DistributionField(grid, {(0, 0, 0): fa.astype(complex)})
    mu = maxwellian(grid)
    q = q_direct(f, f, kp, aq)
    qmm = q_direct(mu, mu, kp, aq)
    inv = collision_invariants(f, kp, aq)
    qr, qbar = q_split(f, f, kp, sp, aq)
    recon = (qr + qbar - q).l2() / max(q.l2(), 1e-300)
    out = {
        "equilibrium_residual_rel": float(np.max(np.abs(qmm.ell0)) / np.max(mu3)),
        "invariants_abs": [float(abs(x)) for x in inv],
        "invariants_tol": 1e-8 * f.l2() ** 2,
        "split_partition_rel": float(recon),
        "field_l2": f.l2(),
    }
    out["pass"] = bool(out["equilibrium_residual_rel"] <= 1e-6
                       and max(out["invariants_abs"]) <= out["invariants_tol"]
                       and recon <= 1e-12)
    if cfg["compare_fourier"]:
        qf = q_fourier(f, f, kp, sp, aq)
        qd = q_direct(f, f, kp, aq, variant="R", sp=sp)
        rel = (qf - qd).l2() / max(qd.l2(), 1e-300)
        out["fourier_vs_direct_rel"] = float(rel)
        out["pass"] = bool(out["pass"] and rel < 1e-2)
    os.makedirs(cfg["out_dir"], exist_ok=True)
    cols = {"vx": vx.reshape(-1), "vy": vy.reshape(-1), "vz": vz.reshape(-1),
            "Q_re": np.real(q.ell0).reshape(-1), "Q_im": np.imag(q.ell0).reshape(-1)}
    write_csv(os.path.join(cfg["out_dir"], "collide_field.csv"), cols)
    _dump_json(os.path.join(cfg["out_dir"], "collide_report.json"),
               {"schema": "kinetic-gap/report-v1", "name": "collide",
                "config": cfg, **out})
    print(("PASS" if out["pass"] else "FAIL") + " collide")
    return 0 if out["pass"] else 1


def cmd_spectrum(cfg: dict) -> int:
    import scipy.linalg
    from .linearized import (assemble_L, conservative_correction, null_enforced,
                             principal_angle_to_null, spectrum, with_transport)
    kp, grid, aq, _ = build_objects(cfg)
    os.makedirs(cfg["out_dir"], exist_ok=True)
    weights = (["polynomial", "gaussian"] if cfg["weight"] == "both"
               else [cfg["weight"]])
    summary = {"schema": "kinetic-gap/report-v1", "name": "spectrum",
               "config": cfg, "modes": {}}
    ok = True
    for wt in weights:
        base = assemble_L(grid, kp, aq, weight_tag=wt)
        if wt == "polynomial":
            base = null_enforced(conservative_correction(base))
        else:
            base = null_enforced(base)
        sr0 = spectrum(base)
        for ell in [tuple(e) for e in cfg["ell_list"]]:
            op = with_transport(base, ell) if ell != (0, 0, 0) else base
            sr = spectrum(op, cluster_tol=sr0.cluster_tol)
            tag = f"{wt}_l{ell[0]}{ell[1]}{ell[2]}"
            write_csv(os.path.join(cfg["out_dir"], f"spectrum_{tag}.csv"),
                      {"re": sr.eigvals.real, "im": sr.eigvals.imag,
                       "cluster": sr.cluster.astype(int)})
            entry = {"n_cluster": sr.n_cluster, "gap": sr.gap,
                     "cluster_tol": sr.cluster_tol,
                     "max_re_outside": float(np.max(sr.eigvals[~sr.cluster].real))
                     if np.any(~sr.cluster) else None}
            if ell == (0, 0, 0):
                entry["principal_angle"] = principal_angle_to_null(sr, op)
                ok &= sr.n_cluster == 5 and sr.gap > 0
            summary["modes"][tag] = entry
    summary["pass"] = bool(ok)
    _dump_json(os.path.join(cfg["out_dir"], "spectrum_summary.json"), summary)
    print(("PASS" if ok else "FAIL") + " spectrum")
    return 0 if ok else 1


def cmd_verify(cfg: dict) -> int:
    from .estimates import run_suite
    kp, grid, aq, _ = build_objects(cfg)
    try:
        reports = run_suite(cfg["suite"], grid, kp, aq, seed=cfg["seed"])
    except ValueError as e:
        raise ConfigError(str(e))
    os.makedirs(cfg["out_dir"], exist_ok=True)
    ok = True
    for r in reports:
        _dump_json(os.path.join(cfg["out_dir"], f"verify_{r.name}.json"),
                   r.to_dict())
        print(r)
        ok &= r.passed
    return 0 if ok else 1


def cmd_evolve(cfg: dict, mode: str = "linear") -> int:
    from .dynamics import (EvolutionConfig, LinearFlow, NumericalAbort,
                           evolve_linear, evolve_nonlinear, picard_solve)
    from .fields import DistributionField, maxwellian_array
    from .linearized import project_moments_out
    kp, grid, aq, _ = build_objects(cfg)
    ecfg = EvolutionConfig(dt=cfg["dt"], t_end=cfg["t_end"],
                           integrator=cfg["integrator"], l=cfg["l"],
                           m0=cfg["m0"], k0=cfg["k0"], lx_max=cfg["lx_max"],
                           record_every=cfg["record_every"],
                           picard_max_iter=cfg["picard_max_iter"],
                           picard_tol=cfg["picard_tol"])
    modes = [(0, 0, 0)] if cfg["lx_max"] == 0 else [(0, 0, 0), (1, 0, 0), (-1, 0, 0)]
    flow = LinearFlow(grid, kp, aq, modes, ecfg)
    rng = np.random.default_rng(cfg["seed"])
    mu3 = maxwellian_array(grid)
    vx, vy, vz = grid.nodes
    coef = rng.standard_normal(3)
    pert = project_moments_out(grid, (coef[0] * vx * vy + 0.5 * coef[1] * grid.vsq
                                      + 0.7 * coef[2]) * mu3)
    amp = 1e-3 / max(np.max(np.abs(pert)), 1e-300)
    f0modes = {(0, 0, 0): (amp * pert).astype(complex)}
    if cfg["lx_max"] > 0 and mode != "linear":
        f0modes[(1, 0, 0)] = 0.2 * amp * (vx + 0.5j * vy) * mu3
    f0 = DistributionField(grid, f0modes)
    os.makedirs(cfg["out_dir"], exist_ok=True)
    summary = {"schema": "kinetic-gap/report-v1", "name": f"evolve_{mode}",
               "config": cfg, "gap_fit": flow.gap()}
    code = 0
    try:
        if mode == "linear":
            rec = evolve_linear(f0, ecfg, flow)
        elif mode == "nonlinear":
            rec = evolve_nonlinear(f0, ecfg, flow)
        elif mode == "picard":
            rec, diag = picard_solve(f0, ecfg, flow)
            summary["picard"] = {"ratios": diag["ratios"],
                                 "iterations": diag["iterations"],
                                 "contracted": diag["contracted"]}
            code = 0 if diag["contracted"] else 1
        else:
            raise ConfigError(f"unknown evolve mode {mode!r}")
    except NumericalAbort as e:
        summary["abort"] = str(e)
        _dump_json(os.path.join(cfg["out_dir"], f"evolve_{mode}_summary.json"),
                   summary)
        print(f"ABORT evolve_{mode}: {e}")
        return 3
    ts = np.asarray(rec.times)
    ys = np.asarray(rec.y_l)
    mask = ys > 1e-300
    if mask.sum() >= 3:
        slope = float(np.polyfit(ts[mask][1:], np.log(ys[mask][1:]), 1)[0])
    else:
        slope = float("nan")
    summary["decay_slope"] = slope
    summary["y_l_first_last"] = [float(ys[0]), float(ys[-1])]
    drift = np.max(np.abs(np.asarray(rec.moments) - np.asarray(rec.moments[0])))
    summary["moment_drift"] = float(drift)
    summary["min_F"] = float(np.min(rec.min_F))
    write_csv(os.path.join(cfg["out_dir"], f"evolve_{mode}_trajectory.csv"),
              rec.as_columns())
    _dump_json(os.path.join(cfg["out_dir"], f"evolve_{mode}_summary.json"), summary)
    print(f"evolve_{mode}: slope={slope:.4f} gap={summary['gap_fit']:.4f}")
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kinetic-gap",
        description="Desk-scale non-cutoff Boltzmann toolkit")
    parser.add_argument("command",
                        choices=["collide", "spectrum", "verify", "evolve"])
    parser.add_argument("--config", default=None, help="flat JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--suite", default=None,
                        help="verify suite: exact|explicit|constants|fitted|all")
    parser.add_argument("--mode", default="linear",
                        choices=["linear", "nonlinear", "picard"],
                        help="evolve mode")
    parser.add_argument("--weight", default=None,
                        choices=["polynomial", "gaussian", "both"])
    parser.add_argument("--compare-fourier", action="store_true", default=None)
    args = parser.parse_args(argv)
    overrides = {"seed": args.seed, "out_dir": args.out, "suite": args.suite,
                 "weight": args.weight, "compare_fourier": args.compare_fourier}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "collide":
            return cmd_collide(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "evolve":
            return cmd_evolve(cfg, args.mode)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
