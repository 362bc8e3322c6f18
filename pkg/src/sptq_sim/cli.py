"""Command-line entry point: ``sptq-sim {state,sweep,chsh,classical}``.

Reports are written as JSON to ``--out`` (default: the scenario's
``output_dir`` or the current directory); sweeps also write one CSV per
arm 1 angle.  Errors go to stderr as ``error[<CODE>] <message>`` and the
exit status is non-zero.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiment
from ._validation import SptqError
from .scenario import Scenario, ScenarioError, load_scenario, validate_report

log = logging.getLogger("sptq_sim")

CSV_COLUMNS = ("theta2_deg", "counts", "dwell_s", "prob_exact")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def _load(args) -> Scenario:
    scn = load_scenario(args.scenario) if args.scenario else Scenario()
    if args.seed is not None:
        scn = replace(scn, experiment=replace(scn.experiment, seed=args.seed))
    return scn


def _out_dir(args, scn: Scenario) -> Path:
    out = Path(args.out or scn.output_dir or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScenarioError(f"output directory not writable: {exc.strerror}", "$.output_dir") from None
    return out


def _write_json(path: Path, report: dict) -> None:
    validate_report(report)
    path.write_text(json.dumps(report, indent=2, sort_keys=False) + "\n")
    log.info("wrote %s", path)


def write_sweep_csv(path: Path, curve: dict) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for point in sorted(curve["points"], key=lambda p: p["theta2_deg"]):
            writer.writerow([repr(float(point[c])) for c in CSV_COLUMNS])


def cmd_state(args) -> int:
    scn = _load(args)
    report = experiment.run_state(scn)
    np.set_printoptions(precision=4, suppress=True, linewidth=160)
    rho = np.array(report["density_real"]) + 1j * np.array(report["density_imag"])
    print(f"target state: {report['target']}")
    print(f"fidelity to target: {report['fidelity']:.12f}")
    for name, value in report["purity"].items():
        print(f"purity[{name}]: {value:.6f}")
    for name, value in report["concurrence"].items():
        print(f"concurrence[{name}]: {value:.6f}")
    nonzero = np.argwhere(np.abs(rho) > 1e-12)
    print("nonzero density-matrix elements (row, col): value")
    for r, c in nonzero:
        print(f"  ({r:2d}, {c:2d}): {rho[r, c].real:+.6f}{rho[r, c].imag:+.6f}j")
    _write_json(_out_dir(args, scn) / "state_report.json", report)
    return EXIT_OK


def cmd_sweep(args) -> int:
    scn = replace(_load(args), measurement="sweep")
    report = experiment.run_experiment(scn, exact=args.exact)
    out = _out_dir(args, scn)
    for curve in report["curves"]:
        write_sweep_csv(out / f"sweep_theta1_{curve['theta1_deg']:g}.csv", curve)
        fit = curve["fit"]
        print(f"theta1={curve['theta1_deg']:g} deg: V = {fit['visibility']:.4f} "
              f"+/- {fit['sigma_visibility']:.4f} (exact {curve['visibility_exact']:.4f})")
    sc = report["derived"]["source_coherence"]
    if sc is not None:
        print(f"implied source coherence: {sc:.4f}")
    _write_json(out / "sweep_report.json", report)
    return EXIT_OK


def cmd_chsh(args) -> int:
    scn = replace(_load(args), measurement="chsh")
    report = experiment.run_experiment(scn, exact=args.exact)
    for key in ("standard", "optimized"):
        block = report[key]
        sig = block["significance"]
        sig_txt = "n/a" if sig is None else f"{sig:.1f}"
        print(f"{key}: S = {block['S']:.4f} +/- {block['sigma_S']:.4f} "
              f"(exact {block['S_exact']:.4f}, {sig_txt} sigma above 2)")
    _write_json(_out_dir(args, scn) / "chsh_report.json", report)
    return EXIT_OK


def cmd_classical(args) -> int:
    scn = replace(_load(args), measurement="classical_visibility")
    report = experiment.run_experiment(scn, exact=True)
    print(f"V_C1 (dove prism in): {report['V_C1']:.4f}")
    print(f"V_C2 (dove prism out): {report['V_C2']:.4f}")
    _write_json(_out_dir(args, scn) / "classical_report.json", report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sptq-sim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in [
        ("state", cmd_state, "print the output state and its fidelity to the ideal target"),
        ("sweep", cmd_sweep, "analyzer sweeps at arm 1 = 0 and 45 degrees, with fits"),
        ("chsh", cmd_chsh, "CHSH S parameter at standard and optimized settings"),
        ("classical", cmd_classical, "classical-laser visibility of the SWAP gate"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--scenario", help="scenario JSON file (default: ideal scenario)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="override the scenario RNG seed")
        p.add_argument("--exact", action="store_true", help="use expected counts, no sampling")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.seed is not None and args.seed < 0:
        print("error[E_SCHEMA] --seed: must be a non-negative integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except SptqError as exc:
        print(f"error[{exc.code}] {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
