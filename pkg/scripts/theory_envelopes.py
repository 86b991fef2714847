#!/usr/bin/env python3
"""Two-bin NFD envelope sweep across cruising speeds, with the brute-force
check and the unstable-area comparison (envelopes grow as cruisers slow)."""

import argparse

from parkdyn.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/theory")
    ap.add_argument("--vf", type=float, default=50.0)
    ap.add_argument("--kj", type=float, default=100.0)
    ap.add_argument("--vc", default="10,20,30,40")
    args = ap.parse_args()
    return cli_main(
        [
            "theory",
            "sweep",
            "--vf",
            str(args.vf),
            "--kj",
            str(args.kj),
            "--vc",
            args.vc,
            "--out",
            args.out,
        ]
    )


if __name__ == "__main__":
    raise SystemExit(main())
