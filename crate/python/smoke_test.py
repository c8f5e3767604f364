"""Smoke test for the rdsim extension module.

Build first:  pip install --no-build-isolation -e crates/py
"""

import math
import tempfile
from pathlib import Path

import rdsim


def main():
    chips = rdsim.prbs15_chips(1000)
    assert len(chips) == 1000 and set(chips) == {-1, 1}

    out = rdsim.mzm_output([0.0, 0.5, 1.0], [0.0, 0.0, 0.0], v_pi=1.0, v_dc=0.0)
    assert all(abs(a - b) < 1e-12 for a, b in zip(out, [1.0, 0.5, 0.0]))

    support, coeffs = rdsim.omp([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], [0.0, 2.0, 0.0], 1)
    assert support == [1] and abs(coeffs[0] - 2.0) < 1e-12

    cfg = rdsim.TrialConfig()
    ideal = rdsim.run_single_trial(cfg.ideal())
    assert ideal.error < 1e-3, ideal
    limited = rdsim.run_single_trial(cfg)
    print(f"ideal error {ideal.error:.3e}, 500 MHz error {limited.error:.3f}")

    terms = rdsim.decompose_terms(cfg.ideal())
    assert terms["second_harmonic"] < 1e-20

    report = rdsim.run_sweep(cfg, [0.5, 0.243], [1, 16])
    means = report.mean_errors
    assert means[1] < means[0], means
    print(f"mean errors {means}, max reduction {100 * report.max_reduction:.1f}%")
    assert report.to_csv().splitlines()[0] == "amplitude_ratio,position_1,position_16,mean"

    with tempfile.TemporaryDirectory() as tmp:
        report.write(Path(tmp))
        again = rdsim.load_report(Path(tmp) / "records")
        assert again.to_csv() == report.to_csv()

    try:
        rdsim.TrialConfig.from_toml("[receiver]\nposition = 99\n")
    except ValueError as e:
        print(f"rejected bad config: {e}")
    else:
        raise AssertionError("bad config accepted")

    assert math.isclose(rdsim.reconstruction_error([0.0, 0.0], [1.0, 1.0]), 1.0)
    print("smoke test ok")


if __name__ == "__main__":
    main()
