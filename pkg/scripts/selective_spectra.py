"""Channel-selective conversion: tooth selection by comb-spacing pump steps and
output routing by FSR pump steps."""

import argparse

import numpy as np

from csqfc.core import PumpSetting
from csqfc.fixtures import COMB_SPACING, FSR, PUMP_00, paper_cavity, paper_plan
from csqfc.spectra import simulate_conversion, simulate_transmission

TWO_PI = 2 * np.pi


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--power", type=float, default=180.0, help="pump power [mW]")
    args = ap.parse_args()
    plan, cav = paper_plan(), paper_cavity()
    ref = None
    for n, m in ((0, 0), (-1, 0), (-2, 0), (0, -10), (0, 10)):
        pump = PumpSetting(args.power, PUMP_00 + n * COMB_SPACING + m * FSR)
        trans = simulate_transmission(plan, cav, pump)
        conv = simulate_conversion(plan, cav, pump)
        center = conv.meta["converted_center"]
        ref = center if ref is None else ref
        row = " ".join(f"{v:5.3f}" for v in trans.powers)
        print(f"comb {n:+d} fsr {m:+3d}: target tooth {trans.meta['target_index']:+d}, "
              f"converted shift {(center - ref) / TWO_PI / 1e9:+7.2f} GHz | {row}")


if __name__ == "__main__":
    main()
