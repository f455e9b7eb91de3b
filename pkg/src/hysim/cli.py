"""Command-line front end.

Subcommands cover the library's capabilities end to end:

  deterministic   exact-event simulation, trajectory CSV, optional period
                  certificate
  stochastic      ensemble of thickened-switching trajectories, one CSV each,
                  plus a manifest of seeds and files
  intensity       ensemble occupancy map on a state plane (CSV matrix + PGM)
  sweep           synchronization prevalence vs noise amplitude (CSV)
  derive-params   reduce a physical plant table to model coefficients and
                  report deltas against the canonical set

Every command writes config_echo.json next to its outputs: the fully
resolved configuration (defaults < config file < flags) plus the command
name, sufficient to reproduce the run bit for bit.  The HYSIM_THREADS
environment variable caps ensemble worker threads without affecting any
output value.  Exit status is 0 exactly when every requested artifact was
written.
"""

from __future__ import annotations

import argparse
import dataclasses
import functools
import json
import sys
from pathlib import Path

from .config import RunConfig, load_config, merge_flags
from .dynamics import REFERENCE_PLANT, CANONICAL_COEFFICIENTS, reduce_physical
from .hybrid import Box, detect_period, run_deterministic
from .intensity import accumulate_intensity, prevalence_sweep, sweep_to_csv
from .stochastic import RandomSource, map_ensemble, run_stochastic

__all__ = ["main", "build_parser"]


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out) if cfg.out is not None else Path("hysim_output")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _echo_config(cfg: RunConfig, command: str, out: Path) -> None:
    doc = cfg.to_dict()
    doc["command"] = command
    _write_json(out / "config_echo.json", doc)
    print(f"wrote {out / 'config_echo.json'}")


def cmd_deterministic(cfg: RunConfig) -> int:
    traj = run_deterministic(cfg.initial_state.as_array(), cfg.initial_mode,
                             horizon=cfg.horizon, dt=cfg.dt,
                             coeffs=cfg.coefficients, box=cfg.box)
    out = _out_dir(cfg)
    csv_path = out / "trajectory.csv"
    traj.to_csv(csv_path)
    print(f"wrote {csv_path}  ({len(traj.events)} events over {traj.horizon:g} s)")
    if cfg.detect_period:
        cert = detect_period(traj)
        cert_path = out / "certificate.json"
        _write_json(cert_path, cert.to_dict() if cert is not None else None)
        if cert is not None:
            print(f"wrote {cert_path}  (period {cert.period:.6f} s, "
                  f"{cert.shift} switch instants per cycle)")
        else:
            print(f"wrote {cert_path}  (no periodic cycle detected)")
    _echo_config(cfg, "deterministic", out)
    return 0


def cmd_stochastic(cfg: RunConfig) -> int:
    out = _out_dir(cfg)

    def one(traj, j):
        path = out / ("traj_%03d.csv" % j)
        traj.to_csv(path)
        return {"index": j, "stream": [cfg.seed, j], "file": path.name,
                "n_events": len(traj.events)}

    rows = map_ensemble(one, cfg.initial_state.as_array(), cfg.initial_mode,
                        cfg.horizon, cfg.eps, cfg.n_traj, cfg.seed, cfg.dt,
                        cfg.coefficients, cfg.box, cfg.scheme)
    manifest = {
        "command": "stochastic",
        "master_seed": cfg.seed,
        "n_traj": cfg.n_traj,
        "eps": cfg.eps,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "scheme": cfg.scheme,
        "trajectories": rows,
    }
    _write_json(out / "manifest.json", manifest)
    for r in rows:
        print(f"wrote {out / r['file']}  ({r['n_events']} events)")
    print(f"wrote {out / 'manifest.json'}")
    _echo_config(cfg, "stochastic", out)
    return 0


def cmd_intensity(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    if cfg.eps > 0:
        grids = map_ensemble(
            lambda traj, j: accumulate_intensity([traj], cfg.plane, cfg.grid_bounds,
                                                 cfg.bin_width, cfg.interval),
            cfg.initial_state.as_array(), cfg.initial_mode, cfg.horizon,
            cfg.eps, cfg.n_traj, cfg.seed, cfg.dt, cfg.coefficients, cfg.box,
            cfg.scheme)
        grid = functools.reduce(lambda a, b: a.merge(b), grids)
    else:
        traj = run_deterministic(cfg.initial_state.as_array(), cfg.initial_mode,
                                 horizon=cfg.horizon, dt=cfg.dt,
                                 coeffs=cfg.coefficients, box=cfg.box)
        grid = accumulate_intensity([traj], cfg.plane, cfg.grid_bounds,
                                    cfg.bin_width, cfg.interval)
    csv_path = out / f"intensity_{cfg.plane}.csv"
    pgm_path = out / f"intensity_{cfg.plane}.pgm"
    grid.to_csv(csv_path)
    grid.to_pgm(pgm_path)
    print(f"wrote {csv_path}  ({grid.counts.sum()} samples binned, "
          f"{grid.overflow} out of range, {grid.n_traj} trajectories)")
    print(f"wrote {pgm_path}")
    _echo_config(cfg, "intensity", out)
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    rows = prevalence_sweep(cfg.eps_list, cfg.initial_state.as_array(),
                            cfg.initial_mode, horizon=cfg.horizon,
                            n_traj=cfg.n_traj, master_seed=cfg.seed, dt=cfg.dt,
                            coeffs=cfg.coefficients, box=cfg.box,
                            dt_sync=cfg.dt_sync, p_ref=cfg.p_ref,
                            p_tol=cfg.p_tol, scheme=cfg.scheme)
    csv_path = out / "sweep.csv"
    sweep_to_csv(rows, csv_path)
    for r in rows:
        print(f"eps={r.eps:<8g} prevalence={r.mean_prevalence:.4f} "
              f"+/- {r.stderr:.4f}  (n={r.n_traj})")
    print(f"wrote {csv_path}")
    _echo_config(cfg, "sweep", out)
    return 0


def cmd_derive_params(cfg: RunConfig) -> int:
    physical = cfg.physical if cfg.physical is not None else REFERENCE_PLANT
    derived = reduce_physical(physical)
    canonical = CANONICAL_COEFFICIENTS
    names = [f.name for f in dataclasses.fields(derived)]
    print(f"{'coefficient':<12} {'derived':>22} {'canonical':>22} {'delta':>12}")
    deltas = {}
    for name in names:
        dv = getattr(derived, name)
        cv = getattr(canonical, name)
        deltas[name] = dv - cv
        print(f"{name:<12} {dv:>22.12g} {cv:>22.12g} {dv - cv:>12.3g}")
    if cfg.out is not None:
        out = _out_dir(cfg)
        _write_json(out / "derived_coefficients.json", {
            "derived": derived.to_dict(),
            "canonical": canonical.to_dict(),
            "delta": deltas,
        })
        print(f"wrote {out / 'derived_coefficients.json'}")
        _echo_config(cfg, "derive-params", out)
    return 0


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", metavar="PATH", default=None,
                    help="JSON config file (flags override its values)")
    sp.add_argument("--seed", type=int, default=None, help="master seed")
    sp.add_argument("--horizon", type=float, default=None, help="run length [s]")
    sp.add_argument("--dt", type=float, default=None, help="sample/integration step [s]")
    sp.add_argument("--t-lower", type=float, default=None, help="lower switching bound [degC]")
    sp.add_argument("--t-upper", type=float, default=None, help="upper switching bound [degC]")
    sp.add_argument("--out", metavar="DIR", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hysim",
        description="Hybrid simulator for a two-display-case refrigeration loop "
                    "with hysteresis and thickened switching.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("deterministic", help="exact-event noiseless simulation")
    _add_common(sp)
    sp.add_argument("--detect-period", action="store_const", const=True, default=None,
                    help="append a periodic-cycle certificate if one is found")

    sp = sub.add_parser("stochastic", help="ensemble with thickened switching")
    _add_common(sp)
    sp.add_argument("--eps", type=float, default=None, help="switching band half-width")
    sp.add_argument("--n-traj", type=int, default=None, help="ensemble size")
    sp.add_argument("--scheme", choices=("independent", "summed"), default=None,
                    help="switching-clock formulation")

    sp = sub.add_parser("intensity", help="state-plane occupancy map of an ensemble")
    _add_common(sp)
    sp.add_argument("--eps", type=float, default=None, help="switching band half-width")
    sp.add_argument("--n-traj", type=int, default=None, help="ensemble size")
    sp.add_argument("--plane", choices=("t1t2", "t1p"), default=None,
                    help="projection plane")
    sp.add_argument("--bin-width", type=float, default=None, help="grid bin width")
    sp.add_argument("--scheme", choices=("independent", "summed"), default=None,
                    help="switching-clock formulation")

    sp = sub.add_parser("sweep", help="synchronization prevalence vs noise amplitude")
    _add_common(sp)
    sp.add_argument("--n-traj", type=int, default=None, help="ensemble size per amplitude")
    sp.add_argument("--scheme", choices=("independent", "summed"), default=None,
                    help="switching-clock formulation")

    sp = sub.add_parser("derive-params",
                        help="reduce a physical plant table to model coefficients")
    sp.add_argument("--config", metavar="PATH", default=None,
                    help="JSON config file supplying the physical table")
    sp.add_argument("--out", metavar="DIR", default=None, help="output directory")

    return p


_COMMANDS = {
    "deterministic": cmd_deterministic,
    "stochastic": cmd_stochastic,
    "intensity": cmd_intensity,
    "sweep": cmd_sweep,
    "derive-params": cmd_derive_params,
}

_FLAG_KEYS = ("seed", "horizon", "dt", "out", "eps", "n_traj", "detect_period",
              "plane", "bin_width", "scheme")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {k: getattr(args, k) for k in _FLAG_KEYS if hasattr(args, k)}
        cfg = merge_flags(cfg, **overrides)
        t_lower = getattr(args, "t_lower", None)
        t_upper = getattr(args, "t_upper", None)
        if t_lower is not None or t_upper is not None:
            box = Box(t_lower if t_lower is not None else cfg.box.t_lower,
                      t_upper if t_upper is not None else cfg.box.t_upper)
            cfg = dataclasses.replace(cfg, box=box)
        return _COMMANDS[args.command](cfg)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
