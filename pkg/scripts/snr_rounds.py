"""Noise budget and multi-round g2 for sequential extraction rounds."""

import argparse

from csqfc.fixtures import PAPER_ZETA, paper_cavity, paper_signal
from csqfc.noise import NOISE_CONVENTION, multi_round_g2, operating_point, rounds_within_threshold


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rounds", type=int, default=40)
    args = ap.parse_args()
    op = operating_point(paper_cavity(), paper_signal())
    print(f"S780 = {op.s_780:.6f}, N780 = {op.n_780:.4g} ({NOISE_CONVENTION!r} convention), "
          f"zeta = {op.zeta:.2f}")
    zetas = (op.zeta, PAPER_ZETA, 10 * PAPER_ZETA)
    print("round " + " ".join(f"zeta={z:8.2f}" for z in zetas))
    for m in range(1, args.rounds + 1):
        print(f"{m:5d} " + " ".join(f"{multi_round_g2(0.01, z, m):13.4f}" for z in zetas))
    for z in zetas:
        print(f"zeta={z:.2f}: rounds with g2 <= 0.5: {rounds_within_threshold(0.01, z, 0.5)}")


if __name__ == "__main__":
    main()
