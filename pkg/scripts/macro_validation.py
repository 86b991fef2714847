#!/usr/bin/env python3
"""Full consistency pipeline: run micro replications, calibrate the macro
model, simulate it, and score macro-vs-micro agreement."""

import argparse
from pathlib import Path

from parkdyn.calibration import calibrate, micro_series_on_macro_grid, validate
from parkdyn.cli import write_csv, write_json
from parkdyn.macromodel import simulate_macro
from parkdyn.microsim import Simulation
from parkdyn.scenarios import (
    base_price_rows,
    desk_network,
    macro_demand,
    macro_initial_state,
    macro_params_from_calibration,
    validation_scenario,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/macro_validation")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--dt-macro", type=float, default=10.0, help="s")
    args = ap.parse_args()

    net = desk_network()
    sc = validation_scenario()
    results = [Simulation(net, sc, seed).run() for seed in range(args.seeds)]
    report = calibrate(results)
    dt = args.dt_macro / 3600.0
    params = macro_params_from_calibration(report, net, sc, dt)
    park, passing = macro_demand(sc, dt)
    traj = simulate_macro(
        park, passing, base_price_rows(sc, len(park)), params,
        initial_state=macro_initial_state(sc),
    )
    micro = micro_series_on_macro_grid(results, args.dt_macro)
    metrics = validate(traj, micro)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.save(out / "calibration.json")
    write_json(out / "validation.json", metrics)
    rows = [
        (traj.t[k + 1], traj.n_on[k + 1], traj.n_off[k + 1], traj.n[k + 1], traj.v[k + 1])
        for k in range(traj.n_steps)
    ]
    write_csv(out / "macro_run.csv", ["t", "n_on", "n_off", "n_active", "v"], rows)
    for name in ("n_on", "n_off", "n_active", "v"):
        m = metrics[name]
        print(
            f"{name}: peak_rel_err={m['peak_relative_error']:.3f} "
            f"rmse={m['rmse']:.3f} envelope={m['envelope_fraction']:.3f}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
