"""Command-line front end: scenario files, figure presets, deterministic outputs."""

import argparse
import configparser
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__, checks, sim
from .modem import unit_energy_pam

PRESETS = {
    # four-user 8-PAM uplink, all methods (error-rate and bound figures)
    "fig1": dict(methods=sim.ALL_METHODS),
    "fig2": dict(methods=sim.ALL_METHODS),
    "fig3": dict(methods=sim.ALL_METHODS),
    # sum-rate comparison incl. the two-user 64-QAM reference
    "fig4": dict(methods=sim.ALL_METHODS, snr="0:5:50"),
    # imperfect-CSI comparison, closed-form methods only
    "fig5": dict(methods=(sim.ZF, sim.MMSE, sim.SMINR), snr="0:5:45"),
}


class ConfigError(Exception):
    pass


def _parse_snr(text: str):
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            start, step, stop = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError
            n = int(round((stop - start) / step)) + 1
            return tuple(start + i * step for i in range(n))
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(
            f"bad SNR spec {text!r}, expected start:step:stop or a comma list"
        ) from None


def _parse_users(text: str):
    text = text.strip().lower()
    try:
        count, mod = text.split("x")
        count = int(count)
        if count < 1 or not mod.endswith("pam"):
            raise ValueError
        order = int(mod[:-3])
    except ValueError:
        raise ConfigError(f"bad users spec {text!r}, expected e.g. 4x8pam") from None
    return tuple(unit_energy_pam(order) for _ in range(count))


def _load_scenario_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read scenario file {path}")
    if "scenario" not in parser:
        raise ConfigError(f"{path} has no [scenario] section")
    return dict(parser["scenario"])


def build_scenario(args) -> sim.Scenario:
    values = {}
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}")
        values.update(PRESETS[args.preset])
    if args.scenario:
        values.update(_load_scenario_file(args.scenario))
    for flag, key in [
        ("antennas", "antennas"), ("users", "users"), ("snr", "snr"),
        ("realizations", "realizations"), ("symbols", "symbols"),
        ("csi_var", "csi_var"), ("methods", "methods"), ("seed", "seed"),
    ]:
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v

    try:
        users = values.get("users", "4x8pam")
        if isinstance(users, str):
            users = _parse_users(users)
        snr = values.get("snr", "0:5:40")
        if isinstance(snr, str):
            snr = _parse_snr(snr)
        methods = values.get("methods", sim.ALL_METHODS)
        if isinstance(methods, str):
            methods = tuple(m.strip().upper() for m in methods.split(","))
        scenario = sim.Scenario(
            n_antennas=int(values.get("antennas", 4)),
            users=users,
            snr_grid_db=snr,
            n_realizations=int(values.get("realizations", 500)),
            n_symbols=int(values.get("symbols", 2000)),
            csi_error_var=float(values.get("csi_var", 0.0)),
            methods=methods,
            seed=int(values.get("seed", 0)),
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    if getattr(args, "paper_scale", False):
        scenario = scenario.paper_scale()
    return scenario


def _n_workers(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("BEAMSIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _write_outputs(out_dir, scenario, result, extra=None):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "sweep.csv")
    json_path = os.path.join(out_dir, "sweep.json")
    manifest_path = os.path.join(out_dir, "manifest.json")
    csv_text = result.to_csv()
    if extra:
        csv_text += "".join(
            line + "\n" for line in extra.to_csv().splitlines()[1:]
        )
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(csv_text)
    payload = {"scenario": scenario.to_dict(), "rows": result.rows_as_dicts()}
    if extra:
        payload["rows"].extend(extra.rows_as_dicts())
    with open(json_path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    canonical = json.dumps(scenario.to_dict(), sort_keys=True).encode()
    manifest = {
        "scenario_digest": hashlib.sha256(canonical).hexdigest(),
        "code_version": __version__,
        "seed": scenario.seed,
        "created_unix": int(time.time()),
        "outputs": [csv_path, json_path],
    }
    with open(manifest_path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return csv_path


def cmd_sweep(args) -> int:
    scenario = build_scenario(args)
    result = sim.run_sweep(scenario, n_workers=_n_workers(args))
    path = _write_outputs(args.out, scenario, result)
    print(f"wrote {path}")
    return 0


def cmd_rate(args) -> int:
    scenario = build_scenario(args)
    result = sim.run_sweep(scenario, n_workers=_n_workers(args))
    qam_scenario = sim.Scenario(
        n_antennas=scenario.n_antennas,
        users=tuple(unit_energy_pam(8) for _ in range(2)),
        snr_grid_db=scenario.snr_grid_db,
        n_realizations=scenario.n_realizations,
        n_symbols=scenario.n_symbols,
        csi_error_var=scenario.csi_error_var,
        methods=(sim.ZF, sim.MMSE),
        seed=scenario.seed,
    )
    qam = sim.qam_reference_sweep(qam_scenario, qam_order=64,
                                  n_workers=_n_workers(args))
    path = _write_outputs(args.out, scenario, result, extra=qam)
    print(f"wrote {path}")
    return 0


def cmd_csi(args) -> int:
    scenario = build_scenario(args)
    if not set(scenario.methods) <= {sim.ZF, sim.MMSE, sim.SMINR}:
        scenario = sim.Scenario(
            n_antennas=scenario.n_antennas, users=scenario.users,
            snr_grid_db=scenario.snr_grid_db,
            n_realizations=scenario.n_realizations,
            n_symbols=scenario.n_symbols, csi_error_var=scenario.csi_error_var,
            methods=(sim.ZF, sim.MMSE, sim.SMINR), seed=scenario.seed,
        )
    os.makedirs(args.out, exist_ok=True)
    lines = ["csi_var," + ",".join(sim.CSV_COLUMNS)]
    all_rows = []
    for var in (0.0, 0.001, 0.01):
        s = sim.Scenario(
            n_antennas=scenario.n_antennas, users=scenario.users,
            snr_grid_db=scenario.snr_grid_db,
            n_realizations=scenario.n_realizations,
            n_symbols=scenario.n_symbols, csi_error_var=var,
            methods=scenario.methods, seed=scenario.seed,
        )
        result = sim.imperfect_csi_sweep(s, n_workers=_n_workers(args))
        for line in result.to_csv().splitlines()[1:]:
            lines.append(f"{var:.17g},{line}")
        for row in result.rows_as_dicts():
            row["csi_var"] = var
            all_rows.append(row)
    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    json_path = os.path.join(args.out, "sweep.json")
    payload = {"scenario": scenario.to_dict(), "rows": all_rows}
    with open(json_path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    canonical = json.dumps(scenario.to_dict(), sort_keys=True).encode()
    manifest = {
        "scenario_digest": hashlib.sha256(canonical).hexdigest(),
        "code_version": __version__,
        "seed": scenario.seed,
        "created_unix": int(time.time()),
        "outputs": [csv_path, json_path],
    }
    with open(os.path.join(args.out, "manifest.json"), "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {csv_path}")
    return 0


def cmd_check(args) -> int:
    results = checks.run_checks(quick=args.quick, seed=args.seed or 12345)
    width = max(len(name) for name, _, _ in results)
    failures = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"{name:<{width}}  {status}  {detail}")
        failures += 0 if ok else 1
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamsim",
        description="Multiuser PAM receive-beamforming experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_out=True):
        p.add_argument("--preset", choices=sorted(PRESETS), help="figure preset")
        p.add_argument("--scenario", help="scenario file ([scenario] key = value)")
        p.add_argument("--antennas", type=int)
        p.add_argument("--users", help="e.g. 4x8pam")
        p.add_argument("--snr", help="grid as start:step:stop or comma list (dB)")
        p.add_argument("--realizations", type=int)
        p.add_argument("--symbols", type=int)
        p.add_argument("--csi-var", dest="csi_var", type=float)
        p.add_argument("--methods", help="comma list of methods")
        p.add_argument("--seed", type=int)
        p.add_argument("--paper-scale", action="store_true",
                       help="use the original 10^4 x 10^3 Monte-Carlo scale")
        p.add_argument("--threads", type=int,
                       help="worker processes (default: BEAMSIM_THREADS or all cores)")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")

    p_sweep = sub.add_parser("sweep", help="SER / analytic-Pe / bound sweep")
    add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_rate = sub.add_parser("rate", help="sum-rate sweep incl. 64-QAM reference")
    add_common(p_rate)
    p_rate.set_defaults(func=cmd_rate)

    p_csi = sub.add_parser("csi", help="imperfect-CSI sweep over error variances")
    add_common(p_csi)
    p_csi.set_defaults(func=cmd_csi)

    p_check = sub.add_parser("check", help="run the property suites")
    p_check.add_argument("--quick", action="store_true", help="small instance sizes")
    p_check.add_argument("--seed", type=int)
    p_check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
