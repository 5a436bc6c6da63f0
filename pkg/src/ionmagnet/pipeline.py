"""Pipeline orchestration (crystal -> modes -> couplings -> evolve -> analyze) and file output.

Every file written here carries the config hash and library version: JSON files
in a ``provenance`` object, CSV files in a leading ``#`` comment line.  Floats
are written with ``repr`` and JSON keys are sorted, so a rerun of the same
config reproduces every file byte for byte.
"""

import contextlib
import csv
import io
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .couplings import CouplingMatrix, RamanDrive, apply_sign_flip, classify_graph, coupling_matrix, recoil_frequency
from .crystal import IonCrystal, TrapParams, equilibrium_positions
from .dynamics import StepControl, SpinState, evolve, ground_population, initial_state, time_reversal_protocol
from .exceptions import IonMagnetError
from .ising import MAX_GAP_SPINS, GroundManifold, classical_ground_manifold, gap_profile
from .measurement import basis_populations, ground_state_fraction, sample_shots, sx_distribution
from .modes import ModeSpectrum, mode_comb, transverse_modes
from .presets import diagram as preset_diagram
from .schedule import RampSchedule
from .spins import label

log = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
KHZ = TWO_PI * 1e3
MHZ = TWO_PI * 1e6
TOP_POPULATIONS = 8
CACHE_DIR = ".cache"


@contextlib.contextmanager
def stage(name):
    """Prefix errors raised inside a stage with the stage name."""
    try:
        yield
    except IonMagnetError as exc:
        if not getattr(exc, "stage", None):
            exc.stage = name
            exc.args = (f"[{name}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise


# ---------------------------------------------------------------------------
# config -> physics objects


def build_trap(cfg):
    fx, fy, fz = cfg.trap.frequencies_khz()
    return TrapParams.from_khz(fx, fy, fz, cfg.trap.mass_amu, cfg.trap.charge_e)


def build_schedule(cfg):
    s = cfg.schedule
    return RampSchedule.from_end_fraction(s.b0_khz * KHZ, s.duration_us * 1e-6, s.b_end_fraction)


def build_step_control(cfg):
    s = cfg.schedule
    return StepControl(max_step=None if s.max_step_us is None else s.max_step_us * 1e-6, tol=s.tol)


def build_drive(cfg, spectrum):
    """Raman drive in rad/s, or ``None`` when the config gives no detuning."""
    d = cfg.drive
    if not d.has_detuning:
        return None
    if d.mu_mhz is not None:
        mu = d.mu_mhz * MHZ
    else:
        mu = float(spectrum.frequencies[d.mu_mode - 1]) + d.mu_offset_khz * KHZ
    rabi = np.asarray(d.rabi_khz, dtype=float) * KHZ
    trap = spectrum.trap
    if d.recoil_khz is not None:
        return RamanDrive(rabi, mu, d.recoil_khz * KHZ)
    return RamanDrive(rabi, mu, recoil_frequency(d.delta_k, trap.ion_mass), delta_k=d.delta_k)


# ---------------------------------------------------------------------------
# stages


def _cache_path(out_dir, key):
    return None if out_dir is None else Path(out_dir) / CACHE_DIR / f"modes-{key}.json"


def crystal_and_modes(cfg, out_dir=None):
    """Crystal and transverse spectrum, reusing a cached result keyed on the trap block."""
    trap = build_trap(cfg)
    path = _cache_path(out_dir, cfg.block_hash("trap"))
    if path is not None and path.exists():
        with open(path) as fh:
            cached = json.load(fh)
        log.info("reusing cached crystal and modes from %s", path)
        return trap, IonCrystal.from_dict(cached["crystal"]), ModeSpectrum.from_dict(cached["spectrum"])
    with stage("crystal"):
        crystal = equilibrium_positions(trap, cfg.trap.ions, restarts=cfg.trap.restarts, rng_seed=cfg.crystal_seed)
    with stage("modes"):
        spectrum = transverse_modes(crystal, trap)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        _write_text(path, _dumps({"crystal": crystal.to_dict(), "spectrum": spectrum.to_dict()}))
    return trap, crystal, spectrum


def couplings_stage(cfg, spectrum):
    """``(drive, physical, effective)``; the effective matrix drives the spins."""
    with stage("couplings"):
        drive = build_drive(cfg, spectrum) if spectrum is not None else None
        physical = None
        if drive is not None:
            physical = coupling_matrix(spectrum, drive)
            if cfg.drive.sign_flip:
                physical = apply_sign_flip(physical)
        if cfg.drive.diagram is not None:
            effective = preset_diagram(cfg.drive.diagram, cfg.drive.j0_khz)
        else:
            effective = physical
    return drive, physical, effective


@dataclass
class RunRecord:
    """Everything one pipeline run produced, plus provenance."""

    config: object
    config_hash: str
    version: str
    trap: TrapParams
    crystal: IonCrystal
    spectrum: ModeSpectrum
    drive: RamanDrive
    physical_couplings: CouplingMatrix
    couplings: CouplingMatrix
    diagram: object
    manifold: GroundManifold
    schedule: RampSchedule
    gaps: object
    trajectory: object
    histogram: object
    sx_initial: object
    sx_final: object
    ground_fraction: float
    reversal: object = None
    sx_returned: object = None
    shots: np.ndarray = None

    @property
    def final_state(self):
        return self.trajectory.final

    @property
    def provenance(self):
        return {"config_hash": self.config_hash, "version": self.version}

    def summary(self):
        out = {
            "preset": self.config.preset,
            "n_ions": self.couplings.n_ions,
            "degeneracy": self.manifold.degeneracy,
            "ground_energy_khz": self.manifold.energy / KHZ,
            "ground_fraction": self.ground_fraction,
            "mean_sx": self.sx_final.mean,
            "evolve_step_us": self.trajectory.step * 1e6,
            "min_gap_khz": None if self.gaps is None else self.gaps.min_gap / KHZ,
            "return_probability": None if self.reversal is None else self.reversal.return_probability,
        }
        return out


def run_pipeline(cfg, out_dir=None):
    """Run every stage for a validated config; crystal/modes are cached under ``out_dir``."""
    trap, crystal, spectrum = crystal_and_modes(cfg, out_dir)
    drive, physical, cm = couplings_stage(cfg, spectrum)
    n = cm.n_ions
    with stage("ground"):
        graph = classify_graph(cm, cfg.analysis.edge_threshold)
        manifold = classical_ground_manifold(cm)
    schedule = build_schedule(cfg)
    with stage("gaps"):
        gaps = gap_profile(cm, schedule, cfg.analysis.gap_samples) if n <= MAX_GAP_SPINS else None
    with stage("evolve"):
        times = np.linspace(0.0, schedule.duration, cfg.schedule.samples)
        traj = evolve(initial_state(n), cm, schedule, sample_times=times, step_control=build_step_control(cfg))
    with stage("analyze"):
        hist = basis_populations(traj.final, cfg.analysis.basis)
        fraction = ground_population(traj.final, manifold)
        shots = None
        if cfg.analysis.shots > 0:
            shots = sample_shots(hist, cfg.analysis.shots, cfg.analysis.prep_error, cfg.seed)
    reversal = sx_returned = None
    if cfg.analysis.time_reversal:
        with stage("reverse"):
            reversal = time_reversal_protocol(cm, schedule, build_step_control(cfg))
            sx_returned = sx_distribution(reversal.returned)
    return RunRecord(
        config=cfg,
        config_hash=cfg.hash(),
        version=__version__,
        trap=trap,
        crystal=crystal,
        spectrum=spectrum,
        drive=drive,
        physical_couplings=physical,
        couplings=cm,
        diagram=graph,
        manifold=manifold,
        schedule=schedule,
        gaps=gaps,
        trajectory=traj,
        histogram=hist,
        sx_initial=sx_distribution(initial_state(n)),
        sx_final=sx_distribution(traj.final),
        ground_fraction=fraction,
        reversal=reversal,
        sx_returned=sx_returned,
        shots=shots,
    )


# ---------------------------------------------------------------------------
# serialization helpers


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def _write_text(path, text):
    # newline="" keeps output identical across platforms
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


class ArtifactWriter:
    """Writes JSON and CSV files into ``out_dir`` stamped with provenance."""

    def __init__(self, out_dir, provenance):
        self.out_dir = Path(out_dir)
        self.provenance = dict(provenance)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written = []

    def json(self, name, payload):
        payload = dict(payload)
        payload["provenance"] = self.provenance
        path = self.out_dir / name
        _write_text(path, _dumps(payload))
        self.written.append(path)
        return path

    def csv(self, name, header, rows):
        buf = io.StringIO()
        buf.write(f"# ionmagnet {self.provenance['version']} config {self.provenance['config_hash']}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        path = self.out_dir / name
        _write_text(path, buf.getvalue())
        self.written.append(path)
        return path


def read_csv(path):
    """``(header, rows)`` of a file written by :class:`ArtifactWriter`, rows as strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    d.pop("provenance", None)
    return d


# ---------------------------------------------------------------------------
# per-artifact writers, shared by the single-stage commands


def crystal_payload(crystal, trap):
    return {
        "n_ions": crystal.n_ions,
        "positions_dimensionless": crystal.positions.tolist(),
        "positions_um": (crystal.positions_si(trap) * 1e6).tolist(),
        "energy": crystal.potential_energy,
        "gradient_norm": crystal.gradient_norm,
        "length_scale_um": trap.length_scale * 1e6,
        "trap": trap.to_dict(),
    }


def crystal_from_payload(d):
    crystal = IonCrystal(int(d["n_ions"]), np.asarray(d["positions_dimensionless"], dtype=float).reshape(-1, 2),
                         float(d["energy"]), float(d["gradient_norm"]))
    return crystal, TrapParams.from_dict(d["trap"])


def write_crystal(w, crystal, trap):
    w.json("crystal.json", crystal_payload(crystal, trap))
    um = crystal.positions_si(trap) * 1e6
    rows = [(k + 1, *crystal.positions[k], *um[k]) for k in range(crystal.n_ions)]
    w.csv("crystal.csv", ["ion", "x", "y", "x_um", "y_um"], rows)


def modes_payload(spectrum):
    return {
        "frequencies_mhz": (spectrum.frequencies / MHZ).tolist(),
        "mode_matrix": spectrum.mode_matrix.tolist(),
        "spectrum": spectrum.to_dict(),
    }


def write_modes(w, spectrum):
    w.json("modes.json", modes_payload(spectrum))
    n = spectrum.n_ions
    rows = [(line.index, line.frequency_mhz, *line.weights) for line in mode_comb(spectrum)]
    w.csv("mode_comb.csv", ["mode", "frequency_mhz"] + [f"weight_ion{k + 1}" for k in range(n)], rows)


def write_couplings(w, cm, graph, drive=None, physical=None):
    w.json("couplings.json", {
        "couplings": cm.to_dict(),
        "physical": None if physical is None else physical.to_dict(),
        "drive": None if drive is None else drive.to_dict(),
        "units": "rad/s",
    })
    n = cm.n_ions
    j = cm.j / KHZ
    w.csv("couplings.csv", ["ion"] + [str(k + 1) for k in range(n)], [(i + 1, *j[i]) for i in range(n)])
    w.json("diagram.json", graph.to_dict())


def write_manifold(w, manifold):
    payload = manifold.to_dict()
    payload["labels"] = [label(int(c, 2), len(c)) for c in manifold.configs]
    w.json("manifold.json", payload)


def gap_rows(gaps):
    k = max(len(s.energies) for s in gaps.samples)
    header = ["t_us", "B_khz", "gap_khz"] + [f"E{m}_khz" for m in range(k)]
    rows = []
    for s in gaps.samples:
        e = list(s.energies / KHZ) + [""] * (k - len(s.energies))
        rows.append((s.t * 1e6, s.b_field / KHZ, s.gap / KHZ, *e))
    return header, rows


def write_gaps(w, gaps):
    header, rows = gap_rows(gaps)
    w.csv("gaps.csv", header, rows)


def write_trajectory(w, traj, manifold, schedule):
    n = traj.final.n_spins
    final_pops = basis_populations(traj.final, "y")
    top = [i for i, _ in final_pops.top(TOP_POPULATIONS)]
    header = ["t_us", "ground_population", "sx_mean"] + [f"p_{format(i, f'0{n}b')}" for i in top]
    rows, evo = [], []
    for t, state in traj:
        pops = basis_populations(state, "y").probs
        g = ground_population(state, manifold)
        rows.append((t * 1e6, g, sx_distribution(state).mean, *pops[top]))
        evo.append((t * 1e6, float(schedule.field(t)) / KHZ, g))
    w.csv("trajectory.csv", header, rows)
    w.csv("evolution.csv", ["t_us", "B_khz", "ground_fraction"], evo)
    w.json("final_state.json", traj.final.to_dict())


def write_histogram(w, hist, shots=None):
    n = hist.n_spins
    rows = [(k, format(k, f"0{n}b"), label(k, n), hist.probs[k]) for k in range(2**n)]
    w.csv("histogram.csv", ["index", "bits", "label", "probability"], rows)
    if shots is not None:
        w.csv("shots.csv", ["index", "bits", "count"],
              [(k, format(k, f"0{n}b"), int(shots[k])) for k in range(2**n)])


def write_sx(w, columns):
    """``columns`` is an ordered list of (name, SxDistribution) sharing the same support."""
    values = columns[0][1].values
    rows = [(v, *(d.probs[k] for _, d in columns)) for k, v in enumerate(values)]
    w.csv("sx.csv", ["sx"] + [name for name, _ in columns], rows)


def emit_plot_data(record, out_dir):
    """Write the figure-shaped CSV tables and the JSON artifacts of ``record``."""
    w = ArtifactWriter(out_dir, record.provenance)
    w.json("config.json", record.config.to_dict())
    write_crystal(w, record.crystal, record.trap)
    write_modes(w, record.spectrum)
    write_couplings(w, record.couplings, record.diagram, record.drive, record.physical_couplings)
    write_manifold(w, record.manifold)
    if record.gaps is not None:
        write_gaps(w, record.gaps)
    write_trajectory(w, record.trajectory, record.manifold, record.schedule)
    write_histogram(w, record.histogram, record.shots)
    cols = [("initial", record.sx_initial), ("forward", record.sx_final)]
    if record.reversal is not None:
        cols.append(("returned", record.sx_returned))
        w.json("reversal.json", {
            "return_probability": record.reversal.return_probability,
            "forward_final": record.reversal.forward_final.to_dict(),
            "returned": record.reversal.returned.to_dict(),
        })
    write_sx(w, cols)
    w.json("summary.json", record.summary())
    return w.written


def analyze(state, manifold, basis="y", shots=0, prep_error=0.0, seed=0):
    """Histogram, S_x distribution and summary numbers for a stored state."""
    hist = basis_populations(state, basis)
    y_hist = hist if basis == "y" else basis_populations(state, "y")
    counts = sample_shots(hist, shots, prep_error, seed) if shots > 0 else None
    sx = sx_distribution(state)
    summary = {
        "ground_fraction": ground_state_fraction(y_hist, manifold),
        "mean_sx": sx.mean,
        "basis": basis,
        "shots": shots,
    }
    if counts is not None:
        summary["shot_ground_fraction"] = float(counts[manifold.indices].sum() / shots) if basis == "y" else None
    return hist, sx, counts, summary


def load_state(path):
    return SpinState.from_dict(load_json(path))


def load_manifold(path):
    return GroundManifold.from_dict(load_json(path))


def load_couplings(path):
    return CouplingMatrix.from_dict(load_json(path)["couplings"])


def load_spectrum(path):
    return ModeSpectrum.from_dict(load_json(path)["spectrum"])


def default_out_dir():
    return Path(os.getcwd()) / "ionmagnet-out"
