"""Command-line orchestration: build networks, run replications, sweep the
two-bin theory, calibrate, validate, and compare pricing policies.

Every command rewrites its outputs byte-identically for the same inputs;
wall-clock metadata goes only to a run_meta.json side file.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import bintheory, calibration, macromodel, mpc, network, microsim, scenarios

DISTANCE_KINDS = ("exp-distance", "geometric", "modified-geometric")

FMT = "{:.10g}"


def _fmt(x) -> str:
    if isinstance(x, float):
        return FMT.format(x)
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_meta(out_dir, argv):
    write_json(Path(out_dir) / "run_meta.json", {"argv": argv, "written_at": time.time()})


def _parse_seeds(text: str) -> list[int]:
    seeds = [int(s) for s in text.replace(",", " ").split()]
    if not seeds:
        raise SystemExit("no seeds given")
    return seeds


# ------------------------------------------------------------------ net


def cmd_net_build(args):
    net = network.build_grid(
        args.rows, args.cols, args.link_length, args.vf, args.kj, args.spots_per_link, args.spot_spacing
    )
    if args.total_spots is not None:
        shares = None
        if args.upper_share is not None:
            shares = {0: 1.0 - args.upper_share, 1: args.upper_share}
        net = network.redistribute_parking(net, args.total_spots, shares, args.supply_fraction)
    if args.lot_capacity:
        upper = sorted(lid for lid, r in net.region_assignment.items() if r == 1)
        entry = args.lot_entry or (upper[len(upper) // 2] if upper else sorted(net.links)[0])
        net = network.add_lot(
            net,
            network.OffStreetLot(
                "lot",
                entry_link=entry,
                capacity=args.lot_capacity,
                circuit_length=args.lot_circuit,
                internal_cruise_speed=args.lot_speed,
            ),
        )
    network.save_network(net, args.out)
    print(f"wrote {args.out}: {len(net.nodes)} nodes, {len(net.links)} links, "
          f"{net.total_parking_capacity} spots, {len(net.lots)} lots")
    return 0


def cmd_net_check(args):
    try:
        net = network.load_network(args.net)
    except network.NetworkFormatError as e:
        print(f"INVALID: {e}", file=sys.stderr)
        return 1
    ok = net.is_strongly_connected()
    print(
        f"{args.net}: {len(net.nodes)} nodes, {len(net.links)} links, "
        f"L={net.total_length:.3f} km, {net.total_parking_capacity} on-street spots, "
        f"{len(net.lots)} lots, regions={list(net.regions())}, "
        f"strongly_connected={ok}"
    )
    return 0 if ok else 1


# ---------------------------------------------------------------- micro


def _run_one_seed(net, sc, seed, out_dir, nfd_window):
    res = microsim.Simulation(net, sc, seed).run()
    seed_dir = Path(out_dir) / f"seed_{seed}"
    write_events_csv(seed_dir / "events.csv", res.events)
    rows = microsim.measure_nfd(res.series, res.network_length, nfd_window, res.dt_sim)
    write_csv(seed_dir / "nfd.csv", ["t_s", "K", "Q", "V"], rows)
    write_series_csv(seed_dir / "series.csv", res)
    metrics = microsim.performance_metrics(res)
    metrics["summary"] = res.summary
    metrics["ineffective_cruising_veh_hr"] = res.ineffective_cruising_time()
    write_json(seed_dir / "metrics.json", metrics)
    return res.summary


def write_events_csv(path, events):
    write_csv(
        path,
        ["vehicle_id", "t_s", "from_family", "to_family", "link_id", "dist_km", "occ_on", "occ_off"],
        events,
    )


def load_events_csv(path) -> list[microsim.Event]:
    out = []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            out.append(
                microsim.Event(
                    int(row["vehicle_id"]),
                    float(row["t_s"]),
                    row["from_family"],
                    row["to_family"],
                    row["link_id"],
                    float(row["dist_km"]),
                    float(row["occ_on"]),
                    float(row["occ_off"]),
                )
            )
    return out


_SERIES_COLS = (
    "t_s",
    "dist_km",
    "active",
    "n_i",
    "n_ii",
    "n_iii",
    "n_iv",
    "n_on",
    "n_off",
    "in_circuit",
    "occ_on",
    "occ_off",
    "parked_on",
    "parked_off",
    "overflow",
)


def write_series_csv(path, res: microsim.RunResult):
    rows = zip(*(res.series[c] for c in _SERIES_COLS))
    write_csv(path, list(_SERIES_COLS), rows)


def load_run_dir(seed_dir) -> microsim.RunResult:
    """Rebuild the pieces of a RunResult that calibration needs."""
    seed_dir = Path(seed_dir)
    events = load_events_csv(seed_dir / "events.csv")
    data = np.genfromtxt(seed_dir / "series.csv", delimiter=",", names=True)
    series = {c: np.atleast_1d(data[c]) for c in _SERIES_COLS}
    with open(seed_dir / "metrics.json") as fh:
        metrics = json.load(fh)
    summary = metrics["summary"]
    dt = float(series["t_s"][1] - series["t_s"][0]) if len(series["t_s"]) > 1 else 1.0
    return microsim.RunResult(
        events=events,
        series=series,
        vehicles=[],
        seed=summary["seed"],
        dt_sim=dt,
        horizon=len(series["t_s"]) * dt / 3600.0,
        network_length=summary["network_length"],
        l_off=summary["l_off"],
        v_off_f=summary["v_off_f"],
        summary=summary,
    )


def cmd_micro_run(args):
    net = network.load_network(args.net)
    sc = microsim.ScenarioConfig.load(args.config)
    seeds = _parse_seeds(args.seeds)
    out = Path(args.out)
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as ex:
            futs = {ex.submit(_run_one_seed, net, sc, s, out, args.nfd_window): s for s in seeds}
            for fut in concurrent.futures.as_completed(futs):
                fut.result()
    else:
        for s in seeds:
            _run_one_seed(net, sc, s, out, args.nfd_window)
    write_meta(out, sys.argv[1:])
    print(f"wrote {len(seeds)} replications under {out}")
    return 0


# ---------------------------------------------------------------- theory


def cmd_theory_sweep(args):
    out = Path(args.out)
    vcs = [float(x) for x in args.vc.replace(",", " ").split()]
    Ks = np.round(np.arange(0.0, args.kj + args.k_step / 2, args.k_step), 10)
    report = {}
    rows = []
    for vc in vcs:
        p = bintheory.BinParams(args.vf, vc, args.kj)
        sweep = bintheory.envelope_sweep(p, Ks, cruising=True, brute_step=args.brute_step)
        for i, K in enumerate(sweep["K"]):
            rows.append(
                (
                    vc,
                    K,
                    sweep["v_max"][i],
                    sweep["v_min"][i],
                    sweep["v_max_brute"][i],
                    sweep["v_min_brute"][i],
                )
            )
        kc = bintheory.critical_density(p)
        dev = max(
            float(np.abs(sweep["v_max"] - sweep["v_max_brute"]).max()),
            float(np.abs(sweep["v_min"] - sweep["v_min_brute"]).max()),
        )
        cont = []
        for x in (kc / 4, 3 * kc / 4, kc, kc / 2, args.kj / 2, (kc + args.kj) / 2):
            d = 1e-11
            a = bintheory.envelope_with_cruising(max(0.0, x - d), p)
            b = bintheory.envelope_with_cruising(min(args.kj, x + d), p)
            cont.append(max(abs(a[0] - b[0]), abs(a[1] - b[1])))
        report[str(vc)] = {
            "critical_density": kc,
            "max_abs_dev_vs_brute": dev,
            "max_branch_discontinuity": max(cont),
            "unstable_area": bintheory.unstable_area(p, True),
        }
    write_csv(
        out / "envelopes.csv",
        ["v_c", "K", "Vmax_formula", "Vmin_formula", "Vmax_brute", "Vmin_brute"],
        rows,
    )
    write_json(out / "brute_check.json", report)
    write_meta(out, sys.argv[1:])
    print(f"wrote {out}/envelopes.csv ({len(rows)} rows) and brute_check.json")
    return 0


# ------------------------------------------------------------ estimators


def cmd_estimators_fit(args):
    run_dirs = sorted(Path(args.runs).glob("seed_*"))
    if not run_dirs:
        print(f"no seed_* directories under {args.runs}", file=sys.stderr)
        return 1
    logs = [load_events_csv(d / "events.csv") for d in run_dirs]
    obs = calibration.extract_occupancy_distance(logs, trend=args.trend, occupancy_ref=args.ref)
    if args.kind == "exp-distance":
        model, diag = calibration.fit_distance_curve(obs)
    else:
        model, diag = calibration.fit_estimator(obs, args.kind)
    write_json(args.out, {"kind": model.kind, "params": model.params, "diagnostics": diag,
                          "filter": f"{args.trend}+{args.ref}"})
    print(f"wrote {args.out}: {model.kind} {model.params}")
    return 0


# ---------------------------------------------------------------- macro


def cmd_macro_run(args):
    net = network.load_network(args.net)
    sc = microsim.ScenarioConfig.load(args.config)
    report = calibration.CalibrationReport.load(args.calibration)
    dt = args.dt_macro / 3600.0
    params = scenarios.macro_params_from_calibration(report, net, sc, dt)
    park, pas = scenarios.macro_demand(sc, dt)
    prices = scenarios.base_price_rows(sc, len(park))
    traj = macromodel.simulate_macro(
        park, pas, prices, params, initial_state=scenarios.macro_initial_state(sc)
    )
    rows = [
        (
            traj.t[k + 1],
            traj.n_m_on[k + 1],
            traj.n_m_off[k + 1],
            traj.n_m_pass[k + 1],
            traj.n_c[k + 1],
            traj.n_on[k + 1],
            traj.n_off[k + 1],
            traj.v[k + 1],
            traj.O_on[k + 1],
            traj.o_c[k],
            traj.q_off_on[k],
            traj.q_out_on[k],
            traj.q_out_off[k],
        )
        for k in range(traj.n_steps)
    ]
    write_csv(
        args.out,
        ["t", "n_m_on", "n_m_off", "n_m_pass", "n_c", "n_on", "n_off", "v", "O_on",
         "o_c", "q_off_on", "q_out_on", "q_out_off"],
        rows,
    )
    print(f"wrote {args.out} ({traj.n_steps} steps)")
    return 0


# ------------------------------------------------------------- calibrate


def cmd_calibrate(args):
    run_dirs = sorted(Path(args.runs).glob("seed_*"))
    if not run_dirs:
        print(f"no seed_* directories under {args.runs}", file=sys.stderr)
        return 1
    results = [load_run_dir(d) for d in run_dirs]
    report = calibration.calibrate(
        results, nfd_window_s=args.nfd_window, trend=args.trend, occupancy_ref=args.ref
    )
    report.save(args.out)
    print(
        f"wrote {args.out}: nfd=({report.nfd.v0:.2f},{report.nfd.n0:.2f},{report.nfd.w:.2f}) "
        f"l_m=({report.l_m_on:.3f},{report.l_m_off:.3f},{report.l_m_pass:.3f}) "
        f"dist={report.distance_model.params}"
    )
    return 0


# -------------------------------------------------------------- validate


def cmd_validate(args):
    net = network.load_network(args.net)
    sc = microsim.ScenarioConfig.load(args.config)
    report = calibration.CalibrationReport.load(args.calibration)
    run_dirs = sorted(Path(args.runs).glob("seed_*"))
    if not run_dirs:
        print(f"no seed_* directories under {args.runs}", file=sys.stderr)
        return 1
    results = [load_run_dir(d) for d in run_dirs]
    dt = args.dt_macro / 3600.0
    params = scenarios.macro_params_from_calibration(report, net, sc, dt)
    park, pas = scenarios.macro_demand(sc, dt)
    traj = macromodel.simulate_macro(
        park, pas, scenarios.base_price_rows(sc, len(park)), params,
        initial_state=scenarios.macro_initial_state(sc),
    )
    micro = calibration.micro_series_on_macro_grid(results, args.dt_macro)
    metrics = calibration.validate(traj, micro)
    write_json(args.out, metrics)
    print(json.dumps(metrics, indent=1, sort_keys=True))
    return 0


# ------------------------------------------------------------------ mpc


def _mpc_config(args) -> mpc.MpcConfig:
    return mpc.MpcConfig(
        prediction_horizon=args.intervals * args.control_interval,
        control_interval=args.control_interval,
        n_intervals=args.intervals,
        dt_macro=args.dt_macro / 3600.0,
        n_starts=args.starts,
        budget=args.budget,
        controlled=tuple(args.controlled.split(",")),
        tau_min=args.tau_min,
        tau_max=args.tau_max,
        tau_gap=args.tau_gap,
    )


def cmd_mpc_run(args):
    net = network.load_network(args.net)
    sc = microsim.ScenarioConfig.load(args.config)
    report = calibration.CalibrationReport.load(args.calibration)
    seeds = _parse_seeds(args.seeds)
    cfg = _mpc_config(args)
    params = scenarios.macro_params_from_calibration(report, net, sc, cfg.dt_macro)
    park, pas = scenarios.macro_demand(sc, cfg.dt_macro)
    out = Path(args.out)
    log_rows, pred_rows = [], []
    for seed in seeds:
        sim = microsim.Simulation(net, sc, seed)
        plant = mpc.MicroPlant(sim, params)
        log = mpc.mpc_loop(
            plant, params, cfg, park, pas, horizon=sc.horizon,
            base_prices=(sc.tau_on, sc.tau_off),
        )
        for it in log.iterations:
            log_rows.append(
                (seed, it.t_hr, it.applied[0], it.applied[1], it.predicted_objective, it.evaluations)
            )
            if it.realized_n_c is not None:
                for j, (p, r) in enumerate(zip(it.predicted_n_c, it.realized_n_c)):
                    pred_rows.append((seed, it.t_hr, j, p, r))
        log_rows.append(
            (seed, sc.horizon, "", "", log.plant_ineffective_cruising, "")
        )
    write_csv(
        out / "mpc_log.csv",
        ["seed", "t_hr", "tau_on", "tau_off", "objective", "evaluations"],
        log_rows,
    )
    write_csv(
        out / "prediction_vs_plant.csv",
        ["seed", "t_hr", "step", "predicted_n_c", "realized_n_c"],
        pred_rows,
    )
    write_meta(out, sys.argv[1:])
    print(f"wrote {out}/mpc_log.csv and prediction_vs_plant.csv")
    return 0


MODES = ("no-price", "mpc", "full-dynamic", "full-static")


def run_mode(mode, net, sc, params, cfg, seed):
    """One plant replication under one pricing mode; returns the four
    time-related metrics of the comparison."""
    sim = microsim.Simulation(net, sc, seed)
    if mode == "no-price":
        sim.set_prices(sc.tau_on, sc.tau_off)
        res = sim.run()
        deadweight = float(res.series["overflow"].sum()) * res.l_off / res.v_off_f
        cruise = float(res.series["n_iv"].sum()) * res.dt_sim / 3600.0
        total_tt = float(res.series["active"].sum()) * res.dt_sim / 3600.0
    else:
        park, pas = scenarios.macro_demand(sc, cfg.dt_macro)
        plant = mpc.MicroPlant(sim, params)
        if mode == "mpc":
            mpc.mpc_loop(plant, params, cfg, park, pas, horizon=sc.horizon,
                         base_prices=(sc.tau_on, sc.tau_off))
        else:
            sol = mpc.solve_full_horizon(
                park, pas, params, cfg, sc.horizon, (sc.tau_on, sc.tau_off),
                mode="dynamic" if mode == "full-dynamic" else "static",
                initial_state=scenarios.macro_initial_state(sc),
            )
            for tau_on, tau_off in sol.schedule.prices:
                plant.set_prices(tau_on, tau_off)
                plant.advance(sol.schedule.interval_hr)
        res = sim.result()
        deadweight = float(res.series["overflow"][: sim.step_i].sum()) * res.l_off / res.v_off_f
        cruise = float(res.series["n_iv"][: sim.step_i].sum()) * res.dt_sim / 3600.0
        total_tt = float(res.series["active"][: sim.step_i].sum()) * res.dt_sim / 3600.0
    return {
        "deadweight_veh_hr": deadweight,
        "on_street_cruising_veh_hr": cruise,
        "ineffective_cruising_veh_hr": deadweight + cruise,
        "total_travel_time_veh_hr": total_tt,
    }


def cmd_compare(args):
    if not Path(args.calibration).exists():
        print(f"calibration file not found: {args.calibration}", file=sys.stderr)
        return 1
    net = network.load_network(args.net)
    sc = microsim.ScenarioConfig.load(args.config)
    report = calibration.CalibrationReport.load(args.calibration)
    seeds = _parse_seeds(args.seeds)
    modes = args.modes.split(",")
    bad = [m for m in modes if m not in MODES]
    if bad:
        print(f"unknown modes: {bad}", file=sys.stderr)
        return 1
    cfg = _mpc_config(args)
    params = scenarios.macro_params_from_calibration(report, net, sc, cfg.dt_macro)
    rows = []
    for mode in modes:
        for seed in seeds:
            m = run_mode(mode, net, sc, params, cfg, seed)
            rows.append(
                (
                    mode,
                    seed,
                    m["deadweight_veh_hr"],
                    m["on_street_cruising_veh_hr"],
                    m["ineffective_cruising_veh_hr"],
                    m["total_travel_time_veh_hr"],
                )
            )
    out = Path(args.out)
    write_csv(
        out / "comparison.csv",
        ["mode", "seed", "deadweight_veh_hr", "on_street_cruising_veh_hr",
         "ineffective_cruising_veh_hr", "total_travel_time_veh_hr"],
        rows,
    )
    write_meta(out, sys.argv[1:])
    print(f"wrote {out}/comparison.csv ({len(rows)} rows)")
    return 0


# ------------------------------------------------------------------ main


def _add_mpc_flags(p):
    p.add_argument("--control-interval", type=float, default=0.25, help="hr")
    p.add_argument("--intervals", type=int, default=2)
    p.add_argument("--dt-macro", type=float, default=10.0, help="s")
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--budget", type=int, default=400)
    p.add_argument("--controlled", default="on")
    p.add_argument("--tau-min", type=float, default=0.0)
    p.add_argument("--tau-max", type=float, default=10.0)
    p.add_argument("--tau-gap", type=float, default=3.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="parkdyn", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    net_p = sub.add_parser("net", help="network tools")
    net_sub = net_p.add_subparsers(dest="subcommand", required=True)
    b = net_sub.add_parser("build", help="build a grid network file")
    b.add_argument("--rows", type=int, default=6)
    b.add_argument("--cols", type=int, default=6)
    b.add_argument("--link-length", type=float, default=0.1, help="km")
    b.add_argument("--vf", type=float, default=50.0)
    b.add_argument("--kj", type=float, default=100.0)
    b.add_argument("--spots-per-link", type=int, default=0)
    b.add_argument("--spot-spacing", type=float, default=0.0)
    b.add_argument("--total-spots", type=int, default=None)
    b.add_argument("--upper-share", type=float, default=None)
    b.add_argument("--supply-fraction", type=float, default=1.0)
    b.add_argument("--lot-entry", default=None)
    b.add_argument("--lot-capacity", type=int, default=0)
    b.add_argument("--lot-circuit", type=float, default=0.3)
    b.add_argument("--lot-speed", type=float, default=15.0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_net_build)
    c = net_sub.add_parser("check", help="validate a network file")
    c.add_argument("--net", required=True)
    c.set_defaults(func=cmd_net_check)

    m = sub.add_parser("micro", help="micro-simulation")
    m_sub = m.add_subparsers(dest="subcommand", required=True)
    r = m_sub.add_parser("run", help="run replications")
    r.add_argument("--net", required=True)
    r.add_argument("--config", required=True)
    r.add_argument("--seeds", default="0,1,2,3,4,5,6,7,8,9")
    r.add_argument("--out", required=True)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--nfd-window", type=float, default=60.0, help="s")
    r.set_defaults(func=cmd_micro_run)

    t = sub.add_parser("theory", help="two-bin NFD theory")
    t_sub = t.add_subparsers(dest="subcommand", required=True)
    s = t_sub.add_parser("sweep", help="envelope sweep with brute-force check")
    s.add_argument("--vf", type=float, default=50.0)
    s.add_argument("--kj", type=float, default=100.0)
    s.add_argument("--vc", default="10,20,30,40")
    s.add_argument("--k-step", type=float, default=0.1)
    s.add_argument("--brute-step", type=float, default=0.01)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_theory_sweep)

    e = sub.add_parser("estimators", help="distance/time-to-park estimators")
    e_sub = e.add_subparsers(dest="subcommand", required=True)
    f = e_sub.add_parser("fit", help="fit an estimator to run output")
    f.add_argument("--runs", required=True, help="directory with seed_* runs")
    f.add_argument("--kind", default="exp-distance", choices=list(DISTANCE_KINDS))
    f.add_argument("--trend", default="increasing", choices=["increasing", "decreasing", "both"])
    f.add_argument("--ref", default="init", choices=["init", "avg"])
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_estimators_fit)

    ma = sub.add_parser("macro", help="macro model")
    ma_sub = ma.add_subparsers(dest="subcommand", required=True)
    mr = ma_sub.add_parser("run", help="simulate the macro model")
    mr.add_argument("--net", required=True)
    mr.add_argument("--config", required=True)
    mr.add_argument("--calibration", required=True)
    mr.add_argument("--dt-macro", type=float, default=10.0, help="s")
    mr.add_argument("--out", required=True)
    mr.set_defaults(func=cmd_macro_run)

    ca = sub.add_parser("calibrate", help="fit macro inputs from micro runs")
    ca.add_argument("--runs", required=True)
    ca.add_argument("--nfd-window", type=float, default=60.0)
    ca.add_argument("--trend", default="increasing", choices=["increasing", "decreasing", "both"])
    ca.add_argument("--ref", default="init", choices=["init", "avg"])
    ca.add_argument("--out", required=True)
    ca.set_defaults(func=cmd_calibrate)

    va = sub.add_parser("validate", help="macro-vs-micro consistency metrics")
    va.add_argument("--net", required=True)
    va.add_argument("--config", required=True)
    va.add_argument("--calibration", required=True)
    va.add_argument("--runs", required=True)
    va.add_argument("--dt-macro", type=float, default=10.0)
    va.add_argument("--out", required=True)
    va.set_defaults(func=cmd_validate)

    mp = sub.add_parser("mpc", help="closed-loop pricing")
    mp_sub = mp.add_subparsers(dest="subcommand", required=True)
    mpr = mp_sub.add_parser("run", help="MPC on the micro plant")
    mpr.add_argument("--net", required=True)
    mpr.add_argument("--config", required=True)
    mpr.add_argument("--calibration", required=True)
    mpr.add_argument("--seeds", default="0,1,2,3,4,5,6,7,8,9")
    mpr.add_argument("--out", required=True)
    _add_mpc_flags(mpr)
    mpr.set_defaults(func=cmd_mpc_run)

    co = sub.add_parser("compare", help="pricing-mode comparison on same seeds")
    co.add_argument("--modes", default="no-price,mpc,full-dynamic,full-static")
    co.add_argument("--net", required=True)
    co.add_argument("--config", required=True)
    co.add_argument("--calibration", required=True)
    co.add_argument("--seeds", default="0,1,2,3,4,5,6,7,8,9")
    co.add_argument("--out", required=True)
    _add_mpc_flags(co)
    co.set_defaults(func=cmd_compare)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, macromodel.ConservationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
