"""Rerun the rate-law constant search and print every candidate.

Usage: python scripts/calibrate_kinetics.py [--budget 4.0] [--json out.json]
"""

import argparse
import json

from precipopt.calibration import calibrate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--budget", type=float, default=4.0, help="inflow budget V_tot")
    ap.add_argument("--json", metavar="PATH", help="also write the full report")
    args = ap.parse_args()
    report = calibrate(budget=args.budget)
    print(f"{'k_N':>5} {'B':>4} {'k_G':>4} {'mean':>7} {'W/J':>6} {'R/W':>5}  verdict")
    for c in report.candidates:
        verdict = "accepted" if c.accepted else c.reason
        print(f"{c.k_N:5g} {c.B:4g} {c.k_G:4g} {c.nominal_mean:7.4f} {c.worst_ratio:6.2f} {c.robust_ratio:5.2f}  {verdict}")
    if report.chosen is None:
        print("no candidate accepted")
    else:
        c = report.chosen
        print(f"chosen: k_N={c.k_N:g}, B={c.B:g}, k_G={c.k_G:g}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)


if __name__ == "__main__":
    main()
