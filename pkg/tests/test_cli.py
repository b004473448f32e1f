"""
Tests for the command-line entry point.
"""

import json
from dataclasses import replace

import numpy as np
import pytest

import zs_spectrum_extractor as cli
from spectrum_extractor import reference
from spectrum_extractor.fastpoly import EvalGrid
from spectrum_extractor.reference import ChirpedSechSpec, chirped_sech_signal
from spectrum_extractor.scattering import run_scheme
from spectrum_extractor.signal_io import SpectrumCSVParser


@pytest.fixture(autouse=True)
def no_thread_env(monkeypatch):
    monkeypatch.delenv("SPECTRUM_EXTRACTOR_THREADS", raising=False)


SMALL = ["--M", "64", "--L", "10", "--n-xi", "9", "--xi-min", "-2", "--xi-max", "2"]


def test_synth_zero(tmp_path):
    out = tmp_path / "zero.csv"
    assert cli.main(["synth", "zero", "--L", "5", "--M", "16", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,q_re,q_im"
    assert len(lines) == 18
    assert all(line.endswith(",0,0") for line in lines[1:])


def test_compute_zero_signal(tmp_path):
    signal_path, spectrum_path = tmp_path / "zero.csv", tmp_path / "spectrum.csv"
    cli.main(["synth", "zero", "--L", "5", "--M", "16", "--out", str(signal_path)])

    status = cli.main(["compute", "--input", str(signal_path), "--out", str(spectrum_path),
                       "--n-xi", "9", "--scheme", "tes4"])

    assert status == 0
    spectrum = SpectrumCSVParser(str(spectrum_path)).read_spectrum()
    np.testing.assert_allclose(spectrum["a"], 1.0, atol=1e-12)
    np.testing.assert_allclose(spectrum["b"], 0.0, atol=1e-12)
    summary = json.loads((tmp_path / "spectrum.json").read_text())
    assert summary["format_version"] == 1
    assert summary["scheme"] == "tes4"
    assert summary["N"] == 9
    assert summary["M"] == 16


def test_synth_then_compute_matches_in_memory(tmp_path):
    """Reading the written signal back gives bit-identical spectra."""
    signal_path, spectrum_path = tmp_path / "sech.csv", tmp_path / "spectrum.csv"
    cli.main(["synth", "chirped-sech", "--A", "5.2", "--C", "4", "--out", str(signal_path)] + SMALL)
    assert cli.main(["compute", "--input", str(signal_path), "--out", str(spectrum_path)] + SMALL) == 0

    s = chirped_sech_signal(ChirpedSechSpec(A=5.2, C=4.0, L=10.0, M=64))
    expected = run_scheme(s, EvalGrid.linspace(-2.0, 2.0, 9), "tes4sb")
    spectrum = SpectrumCSVParser(str(spectrum_path)).read_spectrum()
    np.testing.assert_array_equal(spectrum["a"], expected.a)
    np.testing.assert_array_equal(spectrum["b"], expected.b)


def test_compute_fast_agrees_with_conventional(tmp_path):
    fast_path, slow_path = tmp_path / "fast.csv", tmp_path / "slow.csv"
    base = ["compute", "--M", "256", "--n-xi", "33"]
    assert cli.main(base + ["--scheme", "ftes4sb", "--out", str(fast_path)]) == 0
    assert cli.main(base + ["--scheme", "tes4sb", "--out", str(slow_path)]) == 0

    fast = SpectrumCSVParser(str(fast_path)).read_spectrum()
    slow = SpectrumCSVParser(str(slow_path)).read_spectrum()
    assert np.sqrt(np.mean(np.abs(fast["a"] - slow["a"]) ** 2)) < 1e-8
    assert np.sqrt(np.mean(np.abs(fast["b"] - slow["b"]) ** 2)) < 1e-8
    summary = json.loads((tmp_path / "fast.json").read_text())
    assert summary["ec_exact"] == pytest.approx(8.08)


def test_compute_rejects_bad_config(tmp_path):
    assert cli.main(["compute", "--M", "1", "--out", str(tmp_path / "s.csv")]) == 1


def test_compute_rejects_unknown_scheme(tmp_path):
    assert cli.main(["compute", "--scheme", "rk4", "--out", str(tmp_path / "s.csv")]) == 1


def test_compute_missing_input(tmp_path):
    assert cli.main(["compute", "--input", str(tmp_path / "missing.csv"),
                     "--out", str(tmp_path / "s.csv")]) == 1


def test_invalid_sigma_is_usage_error():
    assert cli.main(["compute", "--sigma", "2"]) != 0


def test_threads_from_environment(tmp_path, monkeypatch, mocker):
    monkeypatch.setenv("SPECTRUM_EXTRACTOR_THREADS", "2")
    run = mocker.spy(cli, "run_scheme")
    assert cli.main(["compute", "--out", str(tmp_path / "s.csv")] + SMALL) == 0
    assert run.call_args.kwargs["threads"] == 2


def test_invariant_command(tmp_path):
    out = tmp_path / "invariant.csv"
    assert cli.main(["invariant", "--out", str(out)] + SMALL) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "xi,h_err_bo,h_err_tes4,h_err_tes4sb,h_err_ftes4sb"
    assert len(lines) == 10


def test_bench_command(tmp_path):
    out = tmp_path / "bench.csv"
    status = cli.main(["bench", "--M-list", "16,32,64", "--schemes", "bo,ftes4sb",
                       "--n-xi", "5", "--out", str(out)])
    assert status == 0
    assert len(out.read_text().splitlines()) == 7


def test_convergence_command_oracle(tmp_path):
    out = tmp_path / "conv.csv"
    status = cli.main(["convergence", "--reference", "oracle", "--M-list", "512,1024,2048",
                       "--schemes", "bo,tes4", "--A", "1", "--C", "0", "--L", "20",
                       "--n-xi", "9", "--xi-min", "-2", "--xi-max", "2", "--out", str(out)])
    assert status == 0
    document = json.loads((tmp_path / "conv.json").read_text())
    assert 1.7 <= document["slopes"]["bo"]["rmse_a"]["fitted"] <= 2.3
    assert len(out.read_text().splitlines()) == 7


def test_convergence_rejects_short_m_list(tmp_path):
    assert cli.main(["convergence", "--M-list", "512,1024", "--out", str(tmp_path / "c.csv")]) == 1


def test_invariant_command_flags_vanishing_a(tmp_path, mocker):
    real_run = cli.run_scheme

    def run_with_zero(*args, **kwargs):
        res = real_run(*args, **kwargs)
        res.a_zero[0] = True
        return res

    mocker.patch.object(cli, "run_scheme", side_effect=run_with_zero)
    out = tmp_path / "invariant.csv"
    assert cli.main(["invariant", "--out", str(out)] + SMALL) == 1
    assert out.exists()


def test_convergence_command_unconverged_oracle(tmp_path, mocker):
    real_oracle = reference.oracle_spectrum
    mocker.patch("spectrum_extractor.reference.oracle_spectrum",
                 side_effect=lambda *args, **kwargs: replace(real_oracle(*args, **kwargs), converged=False))
    out = tmp_path / "conv.csv"
    status = cli.main(["convergence", "--reference", "oracle", "--M-list", "64,128,256",
                       "--schemes", "bo", "--A", "1", "--C", "0", "--L", "10",
                       "--n-xi", "5", "--xi-min", "-2", "--xi-max", "2", "--out", str(out)])
    assert status == 1
    document = json.loads((tmp_path / "conv.json").read_text())
    assert document["reference_converged"] is False
