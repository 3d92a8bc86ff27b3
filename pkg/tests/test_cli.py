import json

import numpy as np
import pytest

from polproj import tomography
from polproj.cli import CliError, RunConfig, main, parse_amplitudes, parse_state
from polproj.formats import (
    format_counts,
    hardy_to_records,
    matrix_from_report,
    parse_counts,
    parse_hardy_counts,
    parse_table,
)
from polproj.hardy import table_i_counts
from polproj.optics import VppbsSettings, compose_projector, psi_tilde
from polproj.states import SINGLET, random_state, same_up_to_phase
from polproj.tomography import expected_counts, probe_states


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_synthesize_singlet(capsys):
    code, out, _ = run(["synthesize", "--state", "singlet"], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["gamma"] == 0 and rep["eta"] == 1
    assert np.allclose(matrix_from_report(rep["ua"]), np.eye(2))


def test_synthesize_psi_tilde_amplitudes(capsys):
    amps = ",".join(f"{float(z.real)!r}{float(z.imag):+}j" for z in psi_tilde(0.645).amplitudes)
    code, out, _ = run(["synthesize", "--state", amps], capsys)
    rep = json.loads(out)
    assert rep["eta"] == pytest.approx(0.608, abs=1e-3)
    assert np.allclose(matrix_from_report(rep["ua"]), np.eye(2))
    assert np.allclose(matrix_from_report(rep["ub"]), np.eye(2))


def test_synthesize_state_file(tmp_path, capsys):
    psi = random_state(np.random.default_rng(0))
    f = tmp_path / "state.txt"
    f.write_text("# random target\n" + ", ".join(str(z) for z in psi.amplitudes) + "\n")
    code, out, _ = run(["synthesize", "--state", f"@{f}", "--format", "text"], capsys)
    assert code == 0
    fid = float(out.split("verification fidelity = ")[1])
    assert fid >= 1 - 1e-9


def test_synthesize_reports_plate_angles(capsys):
    _, out, _ = run(["synthesize", "--state", "DR"], capsys)
    plates = json.loads(out)["plates"]
    for arm in ("a", "b"):
        assert plates[arm]["qwp_deg"] == pytest.approx(np.degrees(plates[arm]["qwp_rad"]))
    assert plates["verification_fidelity"] == pytest.approx(1, abs=1e-9)


def test_amplitude_parse_error_has_position():
    with pytest.raises(CliError, match=r"amplitude 3 \('oops', column 9\)"):
        parse_amplitudes("1, 0.5j,oops,0")
    with pytest.raises(CliError, match="4 comma-separated"):
        parse_amplitudes("1,2")


def test_parse_state_names():
    assert same_up_to_phase(parse_state("singlet"), SINGLET)
    assert same_up_to_phase(parse_state("psi_tilde", 0.2), psi_tilde(0.2))
    assert np.allclose(parse_state("hv").amplitudes, [0, 1, 0, 0])
    assert np.allclose(parse_state("1, i, 0, 0").amplitudes, np.array([1, 1j, 0, 0]) / np.sqrt(2))
    with pytest.raises(CliError):
        parse_state("psi_tilde")
    with pytest.raises(CliError):
        parse_state("zz")


def test_bad_amplitudes_exit_2(capsys):
    code, out, err = run(["synthesize", "--state", "1,2,x,4"], capsys)
    assert code == 2 and out == "" and "amplitude 3" in err


def test_tomography_noiseless_sweep(capsys):
    code, out, _ = run(["tomography", "simulate", "--sweep", "0.03:0.95:5", "--t-v-fixed", "0.458"], capsys)
    t = parse_table(out)
    assert code == 0
    for col in ("HV_HV", "VH_VH"):
        assert np.allclose(t[col], t["theory_" + col], atol=1e-10)
    assert np.allclose(np.real(t["HV_VH"]), t["theory_HV_VH"], atol=1e-10)


def test_tomography_nominal_noise_json(capsys):
    code, out, _ = run(
        ["tomography", "simulate", "--sweep", "0.03:0.95:6", "--t-v-fixed", "0.458", "--noise", "nominal",
         "--format", "json", "--seed", "4"],
        capsys,
    )
    rep = json.loads(out)
    assert 0.9 < rep["mean_fidelity"] < 1


def test_tomography_ingest_exact(tmp_path, capsys):
    s = VppbsSettings.from_transmissions(0.7, 0.458)
    f = tmp_path / "c.csv"
    f.write_text(format_counts(expected_counts(compose_projector(s)[2], probe_states(), 1.0, 1.0)))
    code, out, _ = run(["tomography", "ingest", "--counts", str(f), "--t-h", "0.7", "--t-v", "0.458",
                        "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["fidelity"] >= 1 - 1e-8


def test_tomography_ingest_schema_error(tmp_path, capsys):
    f = tmp_path / "c.csv"
    f.write_text("label,counts,duration_s,rate_scale\nHH,3,1,1\n")
    code, _, err = run(["tomography", "ingest", "--counts", str(f)], capsys)
    assert code == 2 and "missing labels" in err and "RR" in err


def test_tomography_out_of_range_writes_nothing(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, err = run(["tomography", "simulate", "--sweep", "0:0.95:3", "--t-v-fixed", "0.458",
                        "--noise", "nominal", "--out", str(out)], capsys)
    assert code == 2 and "T_H" in err
    assert not out.exists()


def test_non_convergence_exit_3(tmp_path, capsys, monkeypatch):
    real = tomography.reconstruct
    monkeypatch.setattr(tomography, "reconstruct", lambda *a, **k: real(*a, **k, max_iter=1))
    code, _, err = run(["tomography", "simulate", "--t-h", "0.5", "--t-v", "0.5", "--noise", "nominal"], capsys)
    assert code == 3 and "converge" in err


def test_hardy_analyze_table_i(tmp_path, capsys):
    f = tmp_path / "t1.csv"
    f.write_text(format_counts(hardy_to_records(table_i_counts())))
    code, out, _ = run(["hardy", "analyze", "--counts", str(f)], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["inequality"]["lhs"] == 420
    assert rep["inequality"]["sigma"] == pytest.approx(60, abs=1)
    q = rep["inference_quoted"]
    assert (round(q["expected"]), round(q["expected_sigma"])) == (1202, 71)
    assert q["observed"] == 727
    assert rep["inference_raw"]["p1"] == pytest.approx(0.805, abs=1e-3)


def test_hardy_missing_rows(tmp_path, capsys):
    f = tmp_path / "t1.csv"
    f.write_text(format_counts(hardy_to_records(table_i_counts())[1:]))
    code, _, err = run(["hardy", "analyze", "--counts", str(f)], capsys)
    assert code == 2 and "alpha,-alpha_perp" in err


def test_hardy_simulate_ideal_zero_rows(capsys):
    code, out, _ = run(["hardy", "simulate", "--gamma", "0.645", "--format", "csv"], capsys)
    counts = parse_hardy_counts(out)
    assert code == 0
    assert [counts[lb] for lb in ("alpha,-alpha_perp", "beta,-alpha", "alpha_perp,-beta_perp")] == [0, 0, 0]


def test_hardy_simulate_visibility(capsys):
    _, out, _ = run(["hardy", "simulate", "--noise-hom-vis", "0.9", "--dark-rate", "0.05", "--seed", "2"], capsys)
    rep = json.loads(out)
    assert all(v > 0 for v in rep["counts"].values())
    assert rep["inequality"]["lhs"] > 0


def test_hom_scan_dip(capsys):
    _, out, _ = run(["hom-scan", "--state", "HH", "--delays=-10:10:21"], capsys)
    t = parse_table(out)
    assert t["probability"][10] == pytest.approx(0, abs=1e-12)
    assert t["probability"][0] == pytest.approx(0.5, abs=1e-10)


def test_hom_scan_flat_and_peak(capsys):
    _, out, _ = run(["hom-scan", "--state", "HH", "--delays=-3:3:7", "--noise-hom-vis", "0"], capsys)
    assert np.ptp(parse_table(out)["probability"]) < 1e-15
    _, out, _ = run(["hom-scan", "--state", "singlet", "--delays=-10:10:3"], capsys)
    p = parse_table(out)["probability"]
    assert p[1] > p[0]


def test_hom_scan_counts_column(capsys):
    _, out, _ = run(["hom-scan", "--delays=-2:2:5", "--rate-scale", "100", "--seed", "1"], capsys)
    t = parse_table(out)
    assert list(t) == ["delay", "probability", "counts"]
    assert all(isinstance(n, int) for n in t["counts"])


@pytest.mark.parametrize(
    "argv",
    [
        ["synthesize", "--state", "singlet", "--format", "csv"],
        ["tomography", "simulate", "--t-h", "1.5", "--t-v", "0.5"],
        ["tomography", "simulate", "--sweep", "0:1"],
        ["hardy", "simulate", "--gamma", "1.0"],
        ["hom-scan", "--overlap-sigma", "0"],
        ["tomography", "simulate", "--t-h", "0.5", "--t-v", "0.5", "--noise-hom-vis", "2"],
    ],
)
def test_validation_errors_exit_2(argv, capsys):
    code, out, _ = run(argv, capsys)
    assert code == 2 and out == ""


def test_run_config_rejects_unknown_keys():
    with pytest.raises(CliError, match="unknown config keys: colour"):
        RunConfig.from_dict({"command": "synthesize", "colour": "red"})


def test_run_config_default_format():
    assert RunConfig.from_dict({"command": "hom-scan"}).format == "csv"


@pytest.mark.parametrize(
    "argv",
    [
        ["synthesize", "--state", "DR"],
        ["tomography", "simulate", "--sweep", "0.03:0.95:4", "--t-v-fixed", "0.458", "--noise", "nominal"],
        ["hardy", "simulate", "--noise-hom-vis", "0.9"],
        ["hom-scan", "--delays=-3:3:5", "--rate-scale", "50"],
    ],
)
def test_byte_identical_outputs(argv, tmp_path):
    paths = [tmp_path / "a", tmp_path / "b"]
    for p in paths:
        assert main(argv + ["--seed", "7", "--out", str(p)] if argv[0] != "synthesize" else argv + ["--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_count_file_written_by_hardy_reingests(tmp_path):
    f = tmp_path / "sim.csv"
    assert main(["hardy", "simulate", "--format", "csv", "--noise-hom-vis", "0.9", "--out", str(f)]) == 0
    recs = parse_counts(f.read_text())
    assert len(recs) == 6
    assert main(["hardy", "analyze", "--counts", str(f), "--out", str(tmp_path / "r.json")]) == 0
