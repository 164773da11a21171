"""Regenerate the bundled FSR-estimation spectra under src/csqfc/data/."""

from pathlib import Path

from csqfc.fixtures import FSR_FIXTURES, fsr_fixture
from csqfc.spectra import write_spectrum

DATA = Path(__file__).resolve().parents[1] / "src" / "csqfc" / "data"

if __name__ == "__main__":
    for name in FSR_FIXTURES:
        csv_path, _ = write_spectrum(fsr_fixture(name), DATA / f"{name}.csv")
        print(csv_path)
