#!/usr/bin/env python3
"""Recompute the worked examples for the quantum exterior algebra.

Usage:
    uv run python scripts/reproduce_examples.py
    uv run python scripts/reproduce_examples.py --q 3 --window 12
    uv run python scripts/reproduce_examples.py --json examples.json
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from twistcoh.cli.commands import EXIT_OK, run


def print_header(text: str) -> None:
    print(f"\n{'=' * 60}")
    print(f"  {text}")
    print(f"{'=' * 60}\n")


def run_report(argv: list[str]) -> dict:
    report, code, usage = run(argv)
    if code != EXIT_OK or report is None:
        print(f"  FAILED: {' '.join(argv)}")
        if usage:
            print(f"  {usage}")
        elif report is not None:
            print(f"  {report.model_dump_json()}")
        sys.exit(1)
    return json.loads(report.model_dump_json())


def examples(q: str, window: int) -> dict[str, dict]:
    base = ["--q", q]
    nu = ["--twist", "nu", "--t", "2"]
    results: dict[str, dict] = {}

    print_header(f"HOCHSCHILD COHOMOLOGY  (q = {q})")
    hh = run_report([*base, "hochschild", *nu, "--max-degree", "4", "--products"])
    print(f"  degrees:      {hh['degrees']}")
    print(f"  dims:         {hh['dims']}")
    print(f"  associative:  {hh['associative']}")
    results["hochschild"] = hh

    print_header("STRONG COMMUTATIVITY OF THE DEGREE-4 GENERATOR")
    strong = run_report([*base, "strong-check", *nu, "--index", "2", "--n", "2"])
    print(f"  degree {strong['degree']}, n = {strong['n']}: strong = {strong['strong']}")
    skewed = run_report(
        [*base, "strong-check", "--twist", "sigma", "--t", "2", "--index", "0", "--basis", "1"]
    )
    print(f"  sigma-twisted degree 0: strong = {skewed['strong']}")
    results["strong"] = strong

    print_header("FINITE GENERATION")
    for module in ("M", "M10", "M01"):
        fg = run_report([*base, "fg-check", module, *nu])
        witness = fg["witness"]
        extra = f"  witness in degree {witness['degree']}" if witness else ""
        print(f"  {module:<4} dims={fg['dims']}  verdict={fg['verdict']}{extra}")
        results[f"fg_{module}"] = fg

    print_header("SUPPORT VARIETY DIMENSIONS")
    for module in ("L", "M", "k"):
        report = run_report(
            [*base, "variety-dim", module, *nu, "--window", str(window), "--fg-window", "6"]
        )
        caveats = "; ".join(report["caveats"]) or "none"
        print(f"  {module:<2} dim={report['dim']}  trivial={report['trivial']}  caveats: {caveats}")
        results[f"variety_{module}"] = report

    print_header("PERIODICITY")
    periodic = run_report([*base, "periodicity", "M", *nu, "--max-shift", "1"])
    print(f"  M: found={periodic['found']}  shift={periodic['shift']}  period={periodic['period']}")
    results["periodicity"] = periodic

    print_header("DIMENSION REDUCTION")
    reduced = run_report([*base, "reduce", "M", *nu, "--index", "2"])
    print(f"  K_eta dim:           {reduced['k_eta_dim']}")
    print(f"  sequence exact:      {reduced['sequence_exact']}")
    print(f"  tensored exact:      {reduced['tensor_sequence_exact']}")
    print(f"  growth of result:    {reduced['growth']['verdict']}")
    results["reduce"] = reduced
    return results


def main() -> None:
    parser = argparse.ArgumentParser(description="Recompute the worked examples")
    parser.add_argument("--q", default="2", help="parameter of the algebra")
    parser.add_argument("--window", type=int, default=8, help="complexity window")
    parser.add_argument("--json", dest="json_path", help="write all reports here")
    args = parser.parse_args()

    results = examples(args.q, args.window)
    if args.json_path:
        Path(args.json_path).write_text(json.dumps(results, indent=2), encoding="utf-8")
        print(f"\n  Reports written to {args.json_path}")


if __name__ == "__main__":
    main()
