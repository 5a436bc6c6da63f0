import json
from pathlib import Path

import numpy as np
import pytest

from ionmagnet import __version__
from ionmagnet.config import from_dict, preset_config
from ionmagnet.couplings import CouplingMatrix, InteractionDiagram
from ionmagnet.crystal import IonCrystal
from ionmagnet.dynamics import SpinState
from ionmagnet.exceptions import ResonantDetuning, ValidationError
from ionmagnet.ising import GroundManifold
from ionmagnet.modes import ModeSpectrum
from ionmagnet.pipeline import (
    crystal_and_modes,
    crystal_from_payload,
    emit_plot_data,
    load_json,
    read_csv,
    run_pipeline,
)

GOLDEN = json.loads((Path(__file__).parent / "golden" / "csv_headers.json").read_text(encoding="utf-8"))
REVERSAL = {"preset": "hex7_case1", "analysis": {"time_reversal": True, "shots": 500}}


@pytest.fixture(scope="module")
def fm4_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fm4")
    rec = run_pipeline(preset_config("fm4"), out)
    return rec, out, emit_plot_data(rec, out)


@pytest.fixture(scope="module")
def reversal_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("rev")
    rec = run_pipeline(from_dict(REVERSAL), out)
    return rec, out, emit_plot_data(rec, out)


def test_fm4_end_to_end(fm4_run):
    rec, out, _ = fm4_run
    assert rec.manifold.degeneracy == 2
    assert rec.manifold.configs == ("0000", "1111")
    header, rows = read_csv(out / "evolution.csv")
    assert header == ["t_us", "B_khz", "ground_fraction"]
    assert float(rows[0][1]) == pytest.approx(29.0)
    header, rows = read_csv(out / "histogram.csv")
    assert len(rows) == 2**4


def test_reversal_sx_has_three_distributions(reversal_run):
    rec, out, _ = reversal_run
    header, rows = read_csv(out / "sx.csv")
    assert header == ["sx", "initial", "forward", "returned"]
    assert len(rows) == 8
    assert float(rows[0][3]) == pytest.approx(rec.reversal.return_probability, abs=1e-12)
    assert len(read_csv(out / "histogram.csv")[1]) == 2**7


@pytest.mark.parametrize("case", ["fm4", "hex7_case1"])
def test_golden_csv_headers(case, fm4_run, reversal_run):
    _, out, files = fm4_run if case == "fm4" else reversal_run
    got = {p.name: read_csv(p)[0] for p in files if p.suffix == ".csv"}
    assert got == GOLDEN[case]


def test_every_file_carries_provenance(reversal_run):
    rec, out, files = reversal_run
    stamp = f"# ionmagnet {__version__} config {rec.config_hash}"
    for p in files:
        text = p.read_text(encoding="utf-8")
        if p.suffix == ".csv":
            assert text.splitlines()[0] == stamp
        else:
            assert json.loads(text)["provenance"] == {"config_hash": rec.config_hash, "version": __version__}


def test_byte_identical_reruns(tmp_path):
    cfg = from_dict(REVERSAL)
    for d in ("a", "b"):
        emit_plot_data(run_pipeline(cfg, tmp_path / d), tmp_path / d)
    names = sorted(p.name for p in (tmp_path / "a").iterdir() if p.is_file())
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_cache_reuse_gives_identical_stage_outputs(tmp_path):
    cfg = preset_config("hex7_case2")
    _, c1, s1 = crystal_and_modes(cfg, tmp_path)
    assert list((tmp_path / ".cache").iterdir())
    _, c2, s2 = crystal_and_modes(cfg, tmp_path)
    assert np.array_equal(c1.positions, c2.positions)
    assert np.array_equal(s1.mode_matrix, s2.mode_matrix)
    assert np.array_equal(s1.frequencies, s2.frequencies)


def _close(a, b, tol=1e-12):
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    return a.shape == b.shape and np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(b)))


def test_artifacts_round_trip(reversal_run):
    rec, out, _ = reversal_run
    crystal, trap = crystal_from_payload(load_json(out / "crystal.json"))
    assert trap == rec.trap and _close(crystal.positions, rec.crystal.positions)
    assert IonCrystal.from_dict(rec.crystal.to_dict()).potential_energy == rec.crystal.potential_energy
    spectrum = ModeSpectrum.from_dict(load_json(out / "modes.json")["spectrum"])
    assert _close(spectrum.mode_matrix, rec.spectrum.mode_matrix) and _close(spectrum.frequencies, rec.spectrum.frequencies)
    cm = CouplingMatrix.from_dict(load_json(out / "couplings.json")["couplings"])
    assert _close(cm.j, rec.couplings.j)
    assert InteractionDiagram.from_dict(load_json(out / "diagram.json")) == rec.diagram
    d = load_json(out / "manifold.json")
    d.pop("labels")
    assert GroundManifold.from_dict(d) == rec.manifold
    state = SpinState.from_dict(load_json(out / "final_state.json"))
    assert _close(state.amplitudes, rec.final_state.amplitudes)
    header, rows = read_csv(out / "couplings.csv")
    j = np.array([[float(x) for x in r[1:]] for r in rows])
    assert _close(j * 2e3 * np.pi, rec.couplings.j)


def test_planar_violation_is_a_validation_error():
    with pytest.raises(ValidationError, match="planar-crystal condition"):
        from_dict({"trap": {"omega_x_khz": 500, "omega_y_khz": 500, "omega_z_khz": 400, "n_ions": 4},
                   "drive": {"diagram": "fm4"}})


def test_stage_name_on_numerical_errors():
    cfg = from_dict({"trap": {"preset": "rhombus4"},
                     "drive": {"mu_mhz": 1.5, "recoil_khz": 18.0}})  # on the COM mode
    with pytest.raises(ResonantDetuning, match=r"^\[couplings\]"):
        run_pipeline(cfg)
