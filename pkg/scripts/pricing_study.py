#!/usr/bin/env python3
"""Pricing-mode comparison on the micro plant with slack off-street capacity:
no-price vs closed-loop MPC vs full-horizon dynamic/static."""

import argparse
from pathlib import Path

import numpy as np

from parkdyn.calibration import calibrate
from parkdyn.cli import run_mode, write_csv, write_json
from parkdyn.microsim import Simulation
from parkdyn.mpc import MpcConfig
from parkdyn.scenarios import desk_network, macro_params_from_calibration, validation_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/pricing")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--starts", type=int, default=4)
    ap.add_argument("--budget", type=int, default=80)
    args = ap.parse_args()

    net = desk_network(lot_capacity=100)  # doubled lot: off-street slack
    sc = validation_scenario(parker_count=450)
    base_results = [Simulation(net, sc, s).run() for s in range(args.seeds)]
    report = calibrate(base_results)
    cfg = MpcConfig(n_starts=args.starts, budget=args.budget)
    params = macro_params_from_calibration(report, net, sc, cfg.dt_macro)

    rows = []
    for mode in ("no-price", "mpc", "full-dynamic", "full-static"):
        for seed in range(args.seeds):
            m = run_mode(mode, net, sc, params, cfg, seed)
            rows.append(
                (mode, seed, m["deadweight_veh_hr"], m["on_street_cruising_veh_hr"],
                 m["ineffective_cruising_veh_hr"], m["total_travel_time_veh_hr"])
            )

    out = Path(args.out)
    write_csv(
        out / "comparison.csv",
        ["mode", "seed", "deadweight_veh_hr", "on_street_cruising_veh_hr",
         "ineffective_cruising_veh_hr", "total_travel_time_veh_hr"],
        rows,
    )
    write_json(out / "config.json", vars(args))
    arr = {}
    for mode, seed, dw, cr, ic, tt in rows:
        arr.setdefault(mode, []).append(ic)
    for mode, vals in arr.items():
        print(f"{mode}: mean ineffective cruising {np.mean(vals):.2f} veh-hr")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
