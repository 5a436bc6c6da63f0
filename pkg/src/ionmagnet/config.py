"""Experiment configuration: a JSON document with four blocks.

Units are part of the key names: ``*_khz`` and ``*_mhz`` are ordinary
frequencies (frequency/2pi), ``*_us`` are microseconds, masses are in amu and
charges in units of e.  Unknown keys are rejected with the full key path.

A ``preset`` names one of :data:`ionmagnet.presets.EXPERIMENTS`; every block
the preset defines replaces the corresponding user block wholesale.  Run
``ionmagnet presets --show NAME`` to get the resolved document as a starting
point for a modified experiment.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields

from .exceptions import ValidationError
from .presets import EXPERIMENTS, TRAP_IONS, TRAPS

log = logging.getLogger(__name__)

BASES = ("x", "y", "z")


def _type_error(path, want, got):
    return ValidationError(f"expected {want}, got {type(got).__name__} {got!r}", path)


def _number(path, v, positive=False, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _type_error(path, "a number", v)
    v = float(v)
    if positive and not v > 0:
        raise ValidationError(f"must be > 0, got {v!r}", path)
    return v


def _integer(path, v, minimum=None, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise _type_error(path, "an integer", v)
    if minimum is not None and v < minimum:
        raise ValidationError(f"must be >= {minimum}, got {v}", path)
    return v


@dataclass(frozen=True)
class TrapBlock:
    omega_x_khz: float = None
    omega_y_khz: float = None
    omega_z_khz: float = None
    mass_amu: float = 171.0
    charge_e: float = 1.0
    n_ions: int = None
    restarts: int = 32
    seed: int = None
    preset: str = None

    def validate(self, path="trap"):
        if self.preset is not None and self.preset not in TRAPS:
            raise ValidationError(f"unknown trap preset {self.preset!r}; choose from {sorted(TRAPS)}", f"{path}.preset")
        for key in ("omega_x_khz", "omega_y_khz", "omega_z_khz"):
            v = getattr(self, key)
            if self.preset is None and v is None:
                raise ValidationError("required unless a trap preset is given", f"{path}.{key}")
            _number(f"{path}.{key}", v, positive=True, allow_none=True)
        _number(f"{path}.mass_amu", self.mass_amu, positive=True)
        _number(f"{path}.charge_e", self.charge_e, positive=True)
        if self.n_ions is None and self.preset is None:
            raise ValidationError("required unless a trap preset is given", f"{path}.n_ions")
        _integer(f"{path}.n_ions", self.n_ions, 1, allow_none=True)
        _integer(f"{path}.restarts", self.restarts, 1)
        _integer(f"{path}.seed", self.seed, 0, allow_none=True)
        fx, fy, fz = self.frequencies_khz()
        if not fz > max(fx, fy):
            raise ValidationError(
                "planar-crystal condition violated: omega_z_khz must exceed max(omega_x_khz, omega_y_khz) "
                f"(got {fx:g}, {fy:g}, {fz:g})",
                f"{path}.omega_z_khz",
            )

    def frequencies_khz(self):
        base = TRAPS[self.preset] if self.preset else (None, None, None)
        return tuple(
            getattr(self, k) if getattr(self, k) is not None else b
            for k, b in zip(("omega_x_khz", "omega_y_khz", "omega_z_khz"), base)
        )

    @property
    def ions(self):
        return self.n_ions if self.n_ions is not None else TRAP_IONS[self.preset]


@dataclass(frozen=True)
class DriveBlock:
    """Raman drive.  ``mu_mhz`` fixes the detuning directly; otherwise it is
    placed ``mu_offset_khz`` away from transverse mode ``mu_mode`` (1 = COM).

    ``diagram`` swaps the computed matrix for a hand-coded interaction graph
    of strength ``j0_khz``; the physical matrix is still computed when a
    detuning is given.  ``sign_flip`` acts on the physical matrix only.
    """

    rabi_khz: object = 50.0
    mu_mhz: float = None
    mu_mode: int = None
    mu_offset_khz: float = 0.0
    recoil_khz: float = None
    delta_k: float = None
    sign_flip: bool = False
    diagram: str = None
    j0_khz: float = 1.0

    def validate(self, n_ions, path="drive"):
        from .presets import DIAGRAMS

        if isinstance(self.rabi_khz, list):
            if len(self.rabi_khz) != n_ions:
                raise ValidationError(f"{len(self.rabi_khz)} Rabi frequencies for {n_ions} ions", f"{path}.rabi_khz")
            for k, v in enumerate(self.rabi_khz):
                _number(f"{path}.rabi_khz[{k}]", v)
                if v < 0:
                    raise ValidationError("must be >= 0", f"{path}.rabi_khz[{k}]")
        else:
            if _number(f"{path}.rabi_khz", self.rabi_khz) < 0:
                raise ValidationError("must be >= 0", f"{path}.rabi_khz")
        if self.mu_mhz is not None and self.mu_mode is not None:
            raise ValidationError("give either mu_mhz or mu_mode, not both", f"{path}.mu_mhz")
        _number(f"{path}.mu_mhz", self.mu_mhz, positive=True, allow_none=True)
        if self.mu_mode is not None and not 1 <= _integer(f"{path}.mu_mode", self.mu_mode) <= n_ions:
            raise ValidationError(f"must lie in 1..{n_ions}", f"{path}.mu_mode")
        _number(f"{path}.mu_offset_khz", self.mu_offset_khz)
        if self.recoil_khz is not None and self.delta_k is not None:
            raise ValidationError("give either recoil_khz or delta_k, not both", f"{path}.recoil_khz")
        _number(f"{path}.recoil_khz", self.recoil_khz, positive=True, allow_none=True)
        _number(f"{path}.delta_k", self.delta_k, positive=True, allow_none=True)
        if self.has_detuning and self.recoil_khz is None and self.delta_k is None:
            raise ValidationError("a detuning needs recoil_khz or delta_k", f"{path}.recoil_khz")
        if not isinstance(self.sign_flip, bool):
            raise _type_error(f"{path}.sign_flip", "true or false", self.sign_flip)
        if self.diagram is not None and self.diagram not in DIAGRAMS:
            raise ValidationError(f"unknown diagram {self.diagram!r}; choose from {sorted(DIAGRAMS)}", f"{path}.diagram")
        _number(f"{path}.j0_khz", self.j0_khz, positive=True)
        if not self.has_detuning and self.diagram is None:
            raise ValidationError("need mu_mhz, mu_mode or a diagram", path)

    @property
    def has_detuning(self):
        return self.mu_mhz is not None or self.mu_mode is not None


@dataclass(frozen=True)
class ScheduleBlock:
    b0_khz: float = 29.0
    duration_us: float = 300.0
    b_end_fraction: float = 0.05
    samples: int = 21
    tol: float = 1e-6
    max_step_us: float = None

    def validate(self, path="schedule"):
        _number(f"{path}.b0_khz", self.b0_khz, positive=True)
        _number(f"{path}.duration_us", self.duration_us, positive=True)
        f = _number(f"{path}.b_end_fraction", self.b_end_fraction)
        if not 0 < f < 1:
            raise ValidationError("must lie in (0, 1)", f"{path}.b_end_fraction")
        _integer(f"{path}.samples", self.samples, 2)
        _number(f"{path}.tol", self.tol, positive=True)
        _number(f"{path}.max_step_us", self.max_step_us, positive=True, allow_none=True)


@dataclass(frozen=True)
class AnalysisBlock:
    basis: str = "y"
    shots: int = 0
    prep_error: float = 0.0
    edge_threshold: float = 0.2
    time_reversal: bool = False
    gap_samples: int = 21

    def validate(self, path="analysis"):
        if self.basis not in BASES:
            raise ValidationError(f"must be one of {BASES}, got {self.basis!r}", f"{path}.basis")
        _integer(f"{path}.shots", self.shots, 0)
        p = _number(f"{path}.prep_error", self.prep_error)
        if not 0 <= p <= 1:
            raise ValidationError("must lie in [0, 1]", f"{path}.prep_error")
        t = _number(f"{path}.edge_threshold", self.edge_threshold)
        if not 0 < t < 1:
            raise ValidationError("must lie in (0, 1)", f"{path}.edge_threshold")
        if not isinstance(self.time_reversal, bool):
            raise _type_error(f"{path}.time_reversal", "true or false", self.time_reversal)
        _integer(f"{path}.gap_samples", self.gap_samples, 2)


_BLOCKS = {"trap": TrapBlock, "drive": DriveBlock, "schedule": ScheduleBlock, "analysis": AnalysisBlock}
_TOP_KEYS = set(_BLOCKS) | {"preset", "seed", "description"}


def _block(cls, raw, path):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise _type_error(path, "an object", raw)
    allowed = {f.name for f in fields(cls)}
    for key in raw:
        if key not in allowed:
            raise ValidationError(f"unknown key; allowed keys are {sorted(allowed)}", f"{path}.{key}")
    return cls(**raw)


@dataclass(frozen=True)
class ExperimentConfig:
    trap: TrapBlock = field(default_factory=TrapBlock)
    drive: DriveBlock = field(default_factory=DriveBlock)
    schedule: ScheduleBlock = field(default_factory=ScheduleBlock)
    analysis: AnalysisBlock = field(default_factory=AnalysisBlock)
    preset: str = None
    seed: int = 0
    description: str = ""

    def validate(self):
        _integer("seed", self.seed, 0)
        self.trap.validate()
        self.drive.validate(self.trap.ions)
        self.schedule.validate()
        self.analysis.validate()
        return self

    @property
    def crystal_seed(self):
        return self.trap.seed if self.trap.seed is not None else self.seed

    def to_dict(self):
        out = {name: asdict(getattr(self, name)) for name in _BLOCKS}
        out.update(preset=self.preset, seed=self.seed, description=self.description)
        return out

    def with_seed(self, seed):
        return ExperimentConfig(self.trap, self.drive, self.schedule, self.analysis, self.preset, seed,
                                self.description).validate()

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self):
        """sha256 of the canonical resolved document."""
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def block_hash(self, *names):
        payload = {n: self.to_dict()[n] for n in names}
        if "trap" in names:
            payload["crystal_seed"] = self.crystal_seed
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def from_dict(raw):
    """Validate a parsed document, resolving a preset if one is named."""
    if not isinstance(raw, dict):
        raise _type_error("<root>", "an object", raw)
    for key in raw:
        if key not in _TOP_KEYS:
            raise ValidationError(f"unknown key; allowed keys are {sorted(_TOP_KEYS)}", key)
    raw = dict(raw)
    name = raw.get("preset")
    if name is not None:
        if name not in EXPERIMENTS:
            raise ValidationError(f"unknown preset {name!r}; choose from {sorted(EXPERIMENTS)}", "preset")
        for block, content in EXPERIMENTS[name].items():
            if block == "description":
                raw.setdefault("description", content)
                continue
            if block in raw:
                log.warning("preset %s replaces the %s block of the config", name, block)
            raw[block] = content
    seed = raw.get("seed", 0)
    description = raw.get("description", "")
    if not isinstance(description, str):
        raise _type_error("description", "a string", description)
    cfg = ExperimentConfig(
        **{b: _block(cls, raw.get(b), b) for b, cls in _BLOCKS.items()},
        preset=name,
        seed=seed,
        description=description,
    )
    return cfg.validate()


def load(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not valid JSON ({exc})", str(path)) from None
    return from_dict(raw)


def preset_config(name):
    return from_dict({"preset": name})
