"""FSR recovery from the bundled spectra, with and without instrument blur."""

import numpy as np

from csqfc.errors import NoPeriodicityError
from csqfc.fixtures import FSR_FIXTURES, OSA_SIGNAL_RESOLUTION, fsr_fixture
from csqfc.fsr import estimate_fsr
from csqfc.spectra import convolve_instrument

TWO_PI = 2 * np.pi


def main() -> None:
    specs = {name: fsr_fixture(name) for name in FSR_FIXTURES}
    specs["resonant_comb (600 MHz blur)"] = convolve_instrument(
        specs["resonant_comb"], OSA_SIGNAL_RESOLUTION)
    for name, spec in specs.items():
        try:
            est = estimate_fsr(spec)
        except NoPeriodicityError as exc:
            print(f"{name:30s} rejected: {exc}")
            continue
        print(f"{name:30s} FSR = {est.fsr / TWO_PI / 1e9:.6f} GHz "
              f"(+- {est.bin_error_bound / TWO_PI / 1e6:.1f} MHz bin, "
              f"prominence {est.peak_prominence:.3g})")


if __name__ == "__main__":
    main()
