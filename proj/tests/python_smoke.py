"""Smoke test for the pybind11 module; pass the build dir as argv[1]."""
import math
import sys
import tempfile

if len(sys.argv) > 1:
    sys.path.insert(0, sys.argv[1])

import _flexboc as fb


def test_signal():
    cfg = fb.FlexBocConfig()
    cfg.validate()
    assert cfg.samples_per_epoch() == 280000
    code = fb.gen_pn_code(cfg, 1)
    assert code.length() == 125
    assert all(c in (-1, 1) for c in code.chips)
    w = fb.synth_flexboc(cfg, code, 1e-3)
    assert len(w.samples) == 280000
    assert max(abs(s) for s in w.samples) <= 1.0 + 1e-12


def test_measurement_closure():
    a, b = fb.SiteClock(), fb.SiteClock()
    a.offset_fs = 1_000_000  # 1 ns
    series = fb.run_exchange_measurement_level(
        a, b, fb.LinkModel(), fb.CalibrationSet(), 1000, 1e-3, fb.JitterModel(), 42
    )
    assert len(series) == 1000
    assert all(v == 1_000_000 for v in series.delta_t_fs)


def test_jitter_and_stability():
    assert abs(fb.jitter_sigma_ps(80.0) - 0.8) < 1e-9
    assert fb.jitter_sigma_ps(35.0) > fb.jitter_sigma_ps(55.0)

    x = [4.2e-9] * 400
    md = fb.mdev(x, 1.0)
    assert all(v == 0.0 for v in md.value)
    td = fb.tdev(x, 1.0)
    assert len(td.tau_s) == len(md.tau_s)


def test_spectrum_bandwidth():
    cfg = fb.FlexBocConfig()
    code = fb.gen_pn_code(cfg, 1)
    w = fb.synth_flexboc(cfg, code, 5e-3)
    sp = fb.spectrum(w.samples, cfg.sample_rate, 12.5e3)
    bw = fb.effective_bandwidth(sp)
    assert abs(bw - 500e3) < 25e3, bw


def test_scenario_runner():
    names = fb.bundled_scenario_names()
    assert "fig5_autocorr" in names
    with tempfile.TemporaryDirectory() as out:
        rep = fb.run_scenario("fig5_autocorr", out)
        assert "flexboc_autocorr.csv" in rep.artifacts
        assert "manifest.txt" in rep.artifacts


def test_config_error_maps_to_valueerror():
    cfg = fb.FlexBocConfig()
    cfg.code_len = 0
    try:
        cfg.validate()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        t()
        print(f"ok {t.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    main()
