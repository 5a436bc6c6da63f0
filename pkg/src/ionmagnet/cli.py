"""Command-line entry point: ``ionmagnet <subcommand> [options]``.

Files go to ``--out-dir``; a short summary of each command goes to stdout in
the ``--format`` of choice.  Exit status is 0 on success, 2 for invalid input
and 3 for numerical failures.
"""

import argparse
import csv
import json
import logging
import sys

import numpy as np

from . import __version__
from . import config as config_mod
from . import pipeline as pl
from .config import ExperimentConfig, ScheduleBlock
from .couplings import classify_graph
from .dynamics import evolve, ground_population, initial_state, time_reversal_protocol
from .exceptions import NumericalError, ValidationError
from .ising import classical_ground_manifold, gap_profile
from .measurement import sx_distribution
from .modes import transverse_modes
from .presets import EXPERIMENTS, TRAPS
from .schedule import RampSchedule

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("ionmagnet")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="experiment config (JSON)")
    p.add_argument("--out-dir", default="ionmagnet-out", help="output directory (default: %(default)s)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="stdout summary format")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="ionmagnet", description="Trapped-ion quantum magnet simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("crystal", parents=[common], help="equilibrium crystal from the trap block")
    p = sub.add_parser("modes", parents=[common], help="transverse normal modes")
    p.add_argument("--crystal", help="crystal JSON from the crystal command")
    p = sub.add_parser("couplings", parents=[common], help="spin-spin coupling matrix and diagram")
    p.add_argument("--modes", help="modes JSON from the modes command")
    for name, what in (("ground", "classical ground manifold"), ("gaps", "sector gap profile along the ramp"),
                       ("evolve", "adiabatic ramp"), ("reverse", "ramp down and back up")):
        p = sub.add_parser(name, parents=[common], help=what)
        p.add_argument("--couplings", help="couplings JSON from the couplings command")
    p = sub.add_parser("analyze", parents=[common], help="readout statistics of a stored state")
    p.add_argument("--state", required=True, help="state JSON (final_state.json)")
    p.add_argument("--manifold", required=True, help="manifold JSON (manifold.json)")
    p.add_argument("--basis", choices=("x", "y", "z"), default="y")
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--prep-error", type=float, default=0.0)
    sub.add_parser("run", parents=[common], help="full pipeline")
    p = sub.add_parser("presets", parents=[common], help="list built-in experiments")
    p.add_argument("--show", metavar="NAME", help="print the resolved config of one preset")
    return parser


# ---------------------------------------------------------------------------


def _config(args, required=True):
    if args.config is None:
        if required:
            raise ValidationError("this command needs --config", "--config")
        return None
    cfg = config_mod.load(args.config)
    return cfg.with_seed(args.seed) if args.seed is not None else cfg


def _provenance(cfg):
    return {"config_hash": cfg.hash() if cfg is not None else None, "version": __version__}


def _writer(args, cfg):
    return pl.ArtifactWriter(args.out_dir, _provenance(cfg))


def _schedule_parts(cfg):
    block = cfg.schedule if cfg is not None else ScheduleBlock()
    sched = RampSchedule.from_end_fraction(block.b0_khz * pl.KHZ, block.duration_us * 1e-6, block.b_end_fraction)
    stub = ExperimentConfig(schedule=block)
    return block, sched, pl.build_step_control(stub)


def _couplings(args, cfg):
    if args.couplings:
        return pl.load_couplings(args.couplings)
    if cfg is None:
        raise ValidationError("need --couplings or --config", "--couplings")
    _, _, spectrum = pl.crystal_and_modes(cfg, args.out_dir)
    return pl.couplings_stage(cfg, spectrum)[2]


def cmd_crystal(args):
    cfg = _config(args)
    trap, crystal, _ = pl.crystal_and_modes(cfg, args.out_dir)
    pl.write_crystal(_writer(args, cfg), crystal, trap)
    return {"n_ions": crystal.n_ions, "energy": crystal.potential_energy, "gradient_norm": crystal.gradient_norm,
            "length_scale_um": trap.length_scale * 1e6}


def cmd_modes(args):
    if args.crystal:
        cfg = _config(args, required=False)
        crystal, trap = pl.crystal_from_payload(pl.load_json(args.crystal))
        with pl.stage("modes"):
            spectrum = transverse_modes(crystal, trap)
    else:
        cfg = _config(args)
        _, _, spectrum = pl.crystal_and_modes(cfg, args.out_dir)
    pl.write_modes(_writer(args, cfg), spectrum)
    return {"frequencies_mhz": (spectrum.frequencies / pl.MHZ).tolist()}


def cmd_couplings(args):
    cfg = _config(args)
    spectrum = pl.load_spectrum(args.modes) if args.modes else pl.crystal_and_modes(cfg, args.out_dir)[2]
    drive, physical, cm = pl.couplings_stage(cfg, spectrum)
    graph = classify_graph(cm, cfg.analysis.edge_threshold)
    pl.write_couplings(_writer(args, cfg), cm, graph, drive, physical)
    return {"n_ions": cm.n_ions, "max_abs_j_khz": float(np.abs(cm.j).max() / pl.KHZ),
            "edges": len(graph.edges), "dropped": len(graph.dropped)}


def cmd_ground(args):
    cfg = _config(args, required=not args.couplings)
    cm = _couplings(args, cfg)
    with pl.stage("ground"):
        manifold = classical_ground_manifold(cm)
    pl.write_manifold(_writer(args, cfg), manifold)
    return {"degeneracy": manifold.degeneracy, "energy_khz": manifold.energy / pl.KHZ,
            "configs": list(manifold.configs)}


def cmd_gaps(args):
    cfg = _config(args, required=not args.couplings)
    cm = _couplings(args, cfg)
    _, sched, _ = _schedule_parts(cfg)
    samples = cfg.analysis.gap_samples if cfg is not None else 21
    with pl.stage("gaps"):
        gaps = gap_profile(cm, sched, samples)
    pl.write_gaps(_writer(args, cfg), gaps)
    return {"min_gap_khz": gaps.min_gap / pl.KHZ, "sector": gaps.sector}


def cmd_evolve(args):
    cfg = _config(args, required=not args.couplings)
    cm = _couplings(args, cfg)
    block, sched, ctrl = _schedule_parts(cfg)
    with pl.stage("ground"):
        manifold = classical_ground_manifold(cm)
    with pl.stage("evolve"):
        times = np.linspace(0.0, sched.duration, block.samples)
        traj = evolve(initial_state(cm.n_ions), cm, sched, sample_times=times, step_control=ctrl)
    w = _writer(args, cfg)
    pl.write_manifold(w, manifold)
    pl.write_trajectory(w, traj, manifold, sched)
    return {"ground_population": ground_population(traj.final, manifold),
            "mean_sx": sx_distribution(traj.final).mean, "step_us": traj.step * 1e6}


def cmd_reverse(args):
    cfg = _config(args, required=not args.couplings)
    cm = _couplings(args, cfg)
    _, sched, ctrl = _schedule_parts(cfg)
    with pl.stage("reverse"):
        res = time_reversal_protocol(cm, sched, ctrl)
    w = _writer(args, cfg)
    w.json("reversal.json", {"return_probability": res.return_probability,
                             "forward_final": res.forward_final.to_dict(), "returned": res.returned.to_dict()})
    w.json("final_state.json", res.returned.to_dict())
    pl.write_sx(w, [("initial", sx_distribution(initial_state(cm.n_ions))),
                    ("forward", sx_distribution(res.forward_final)),
                    ("returned", sx_distribution(res.returned))])
    return {"return_probability": res.return_probability}


def cmd_analyze(args):
    cfg = _config(args, required=False)
    state = pl.load_state(args.state)
    manifold = pl.load_manifold(args.manifold)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg is not None else 0)
    with pl.stage("analyze"):
        hist, sx, counts, summary = pl.analyze(state, manifold, args.basis, args.shots, args.prep_error, seed)
    w = _writer(args, cfg)
    pl.write_histogram(w, hist, counts)
    pl.write_sx(w, [("final", sx)])
    w.json("summary.json", summary)
    return summary


def cmd_run(args):
    cfg = _config(args)
    record = pl.run_pipeline(cfg, args.out_dir)
    pl.emit_plot_data(record, args.out_dir)
    return record.summary()


def cmd_presets(args):
    if args.show:
        if args.show not in EXPERIMENTS:
            raise ValidationError(f"unknown preset {args.show!r}; choose from {sorted(EXPERIMENTS)}", "--show")
        # drop the preset name so that edits to the dump are not overridden on reload
        doc = {**config_mod.preset_config(args.show).to_dict(), "preset": None}
        print(json.dumps(doc, indent=2, sort_keys=True))
        return None
    return {
        "experiments": {k: v["description"] for k, v in sorted(EXPERIMENTS.items())},
        "traps": {k: list(v) for k, v in sorted(TRAPS.items())},
    }


COMMANDS = {
    "crystal": cmd_crystal,
    "modes": cmd_modes,
    "couplings": cmd_couplings,
    "ground": cmd_ground,
    "gaps": cmd_gaps,
    "evolve": cmd_evolve,
    "reverse": cmd_reverse,
    "analyze": cmd_analyze,
    "run": cmd_run,
    "presets": cmd_presets,
}


def _print(summary, fmt):
    if summary is None:
        return
    if fmt == "json":
        print(json.dumps(summary, indent=2, sort_keys=True))
        return
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["key", "value"])
    for k in sorted(summary):
        v = summary[k]
        w.writerow([k, json.dumps(v) if isinstance(v, (list, dict)) else v])


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        summary = COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _print(summary, args.format)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
