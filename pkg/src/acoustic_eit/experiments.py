"""Config-driven sweep generation, noise synthesis, pipelines, and export.

External units at this boundary: frequencies and rates in Hz, powers in dBm,
capacitance in farads. Everything is converted to angular frequencies on the
way into the physics layer and back to Hz on the way out, so exported tables
are directly plot-ready.

Determinism: a config plus its seed fully determines every byte of the
export. Noise uses a counter-based generator (Philox); multi-row schemes
derive one child seed per row via SeedSequence.spawn so row order and
parallel evaluation cannot change the draws. Exports carry no timestamps.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ConvergenceError
from .estimation import fit_dip_lorentzian, fit_linewidth_line, rabi_per_point, samples_from_arrays
from .idt import IdtTransducer
from .model import ThreeLevelAtom, reflection_coefficient, transmission_flux_coefficient
from .poles import classify_regime
from .units import (
    PowerCalibration,
    TWO_PI,
    angular_to_hz,
    dbm_to_watts,
    hz_to_angular,
    watts_to_dbm,
)

SCHEMA_VERSION = 1
SCHEMES = ("control-sweep", "power-sweep", "flux-sweep", "linewidth-pipeline")
FORMATS = ("csv", "json")

_SWEEP_VALUE_COLUMNS = ("re", "im", "abs", "phase", "annotation")
PIPELINE_COLUMNS = (
    "power_dbm",
    "power_watts",
    "gamma_eit_hz",
    "gamma_eit_sigma_hz",
    "omega_c_hz",
    "omega_c_sigma_hz",
    "one_sided",
    "log10_power_watts",
    "log10_omega_c_hz",
    "dip_center_hz",
    "regime",
    "status",
)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _finite(value: float) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


# ---------------------------------------------------------------------------
# Config types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Inclusive linear grid: count points from start to stop."""

    start: float
    stop: float
    count: int

    def __post_init__(self) -> None:
        _require(_finite(self.start) and _finite(self.stop), "grid start/stop must be finite numbers")
        _require(isinstance(self.count, int) and not isinstance(self.count, bool) and self.count >= 1,
                 "grid count must be an integer >= 1")
        # start == stop with count > 1 is allowed: a repeated-setpoint grid is
        # how rank-deficient sweeps (all rows at one power) are expressed

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    def to_dict(self) -> dict[str, Any]:
        return {"start": self.start, "stop": self.stop, "count": self.count}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], where: str) -> "GridSpec":
        _require(isinstance(data, Mapping), f"{where} must be an object with start/stop/count")
        extra = set(data) - {"start", "stop", "count"}
        _require(not extra, f"{where} has unknown keys: {sorted(extra)}")
        _require({"start", "stop", "count"} <= set(data), f"{where} needs start, stop, and count")
        count = data["count"]
        _require(isinstance(count, int) and not isinstance(count, bool), f"{where}.count must be an integer")
        return cls(start=float(data["start"]), stop=float(data["stop"]), count=count)


@dataclass(frozen=True)
class AtomParams:
    """Three-level atom in external units (Hz, not angular)."""

    frequency_hz: float
    anharmonicity_hz: float
    decay_hz: float
    upper_decay_hz: float = 0.0
    dephasing1_hz: float = 0.0
    dephasing2_hz: float = 0.0

    def build(self) -> ThreeLevelAtom:
        try:
            return ThreeLevelAtom(
                omega10=hz_to_angular(self.frequency_hz),
                anharmonicity=hz_to_angular(self.anharmonicity_hz),
                Gamma10=hz_to_angular(self.decay_hz),
                Gamma21=hz_to_angular(self.upper_decay_hz),
                gphi1=hz_to_angular(self.dephasing1_hz),
                gphi2=hz_to_angular(self.dephasing2_hz),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid atom parameters: {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        return {
            "frequency_hz": self.frequency_hz,
            "anharmonicity_hz": self.anharmonicity_hz,
            "decay_hz": self.decay_hz,
            "upper_decay_hz": self.upper_decay_hz,
            "dephasing1_hz": self.dephasing1_hz,
            "dephasing2_hz": self.dephasing2_hz,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AtomParams":
        _require(isinstance(data, Mapping), "atom must be an object")
        known = {
            "frequency_hz", "anharmonicity_hz", "decay_hz",
            "upper_decay_hz", "dephasing1_hz", "dephasing2_hz",
        }
        extra = set(data) - known
        _require(not extra, f"atom has unknown keys: {sorted(extra)}")
        _require({"frequency_hz", "anharmonicity_hz", "decay_hz"} <= set(data),
                 "atom needs frequency_hz, anharmonicity_hz, and decay_hz")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class IdtParams:
    """Transducer geometry in external units."""

    pairs: int
    frequency_hz: float
    k2: float
    capacitance_f: float
    inductance_h: float | None = None

    def build(self) -> IdtTransducer:
        try:
            return IdtTransducer(
                pairs=self.pairs,
                omega_center=hz_to_angular(self.frequency_hz),
                k2=self.k2,
                capacitance=self.capacitance_f,
                inductance=self.inductance_h,
            )
        except ValueError as exc:
            raise ConfigError(f"invalid idt parameters: {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        return {
            "pairs": self.pairs,
            "frequency_hz": self.frequency_hz,
            "k2": self.k2,
            "capacitance_f": self.capacitance_f,
            "inductance_h": self.inductance_h,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "IdtParams":
        _require(isinstance(data, Mapping), "idt must be an object")
        known = {"pairs", "frequency_hz", "k2", "capacitance_f", "inductance_h"}
        extra = set(data) - known
        _require(not extra, f"idt has unknown keys: {sorted(extra)}")
        _require({"pairs", "frequency_hz", "k2", "capacitance_f"} <= set(data),
                 "idt needs pairs, frequency_hz, k2, and capacitance_f")
        pairs = data["pairs"]
        _require(isinstance(pairs, int) and not isinstance(pairs, bool), "idt.pairs must be an integer")
        inductance = data.get("inductance_h")
        return cls(
            pairs=pairs,
            frequency_hz=float(data["frequency_hz"]),
            k2=float(data["k2"]),
            capacitance_f=float(data["capacitance_f"]),
            inductance_h=None if inductance is None else float(inductance),
        )


@dataclass(frozen=True)
class CalibrationParams:
    """Control-line power calibration: either k directly or a power anchor.

    k_hz2_per_watt uses cyclic units ((Omega_c/2pi)^2 = k * P); the anchor
    form pins one known Rabi frequency at one known power.
    """

    k_hz2_per_watt: float | None = None
    anchor_power_dbm: float | None = None
    anchor_rabi_hz: float | None = None

    def build(self) -> PowerCalibration:
        has_k = self.k_hz2_per_watt is not None
        has_anchor = self.anchor_power_dbm is not None or self.anchor_rabi_hz is not None
        _require(has_k != has_anchor,
                 "calibration needs exactly one of k_hz2_per_watt or an anchor pair")
        try:
            if has_k:
                return PowerCalibration(k=self.k_hz2_per_watt * TWO_PI**2)
            _require(self.anchor_power_dbm is not None and self.anchor_rabi_hz is not None,
                     "calibration anchor needs both anchor_power_dbm and anchor_rabi_hz")
            return PowerCalibration.from_threshold_anchor(
                power_dbm=self.anchor_power_dbm,
                omega_c=hz_to_angular(self.anchor_rabi_hz),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid calibration: {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        return {
            "k_hz2_per_watt": self.k_hz2_per_watt,
            "anchor_power_dbm": self.anchor_power_dbm,
            "anchor_rabi_hz": self.anchor_rabi_hz,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CalibrationParams":
        _require(isinstance(data, Mapping), "calibration must be an object")
        known = {"k_hz2_per_watt", "anchor_power_dbm", "anchor_rabi_hz"}
        extra = set(data) - known
        _require(not extra, f"calibration has unknown keys: {sorted(extra)}")
        values = {k: (None if data.get(k) is None else float(data.get(k))) for k in known}
        return cls(**values)


@dataclass(frozen=True)
class NoiseParams:
    """Measurement noise model: relative Gaussian noise and its seed."""

    sigma_rel: float = 0.0
    seed: int = 0
    kind: str = "complex"

    def __post_init__(self) -> None:
        _require(_finite(self.sigma_rel) and self.sigma_rel >= 0.0, "noise.sigma_rel must be >= 0")
        _require(isinstance(self.seed, int) and not isinstance(self.seed, bool)
                 and 0 <= self.seed < 2**64, "noise.seed must be an integer in [0, 2^64)")
        _require(self.kind in ("complex", "magnitude"), "noise.kind must be 'complex' or 'magnitude'")

    def to_dict(self) -> dict[str, Any]:
        return {"sigma_rel": self.sigma_rel, "seed": self.seed, "kind": self.kind}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NoiseParams":
        _require(isinstance(data, Mapping), "noise must be an object")
        known = {"sigma_rel", "seed", "kind"}
        extra = set(data) - known
        _require(not extra, f"noise has unknown keys: {sorted(extra)}")
        seed = data.get("seed", 0)
        _require(isinstance(seed, int) and not isinstance(seed, bool), "noise.seed must be an integer")
        return cls(
            sigma_rel=float(data.get("sigma_rel", 0.0)),
            seed=seed,
            kind=str(data.get("kind", "complex")),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one simulated experiment."""

    scheme: str
    atom: AtomParams
    idt: IdtParams | None = None
    calibration: CalibrationParams | None = None
    probe_detuning_hz: float = 0.0
    power_grid: GridSpec | None = None
    control_frequency_grid: GridSpec | None = None
    probe_detuning_grid: GridSpec | None = None
    control_rabi_hz: tuple[float, ...] = ()
    control_frequency_hz: float | None = None
    residual_detuning_hz: float = 0.0
    crosstalk_re: float = 0.0
    crosstalk_im: float = 0.0
    scale: float = 1.0
    noise: NoiseParams = field(default_factory=NoiseParams)
    output_path: str | None = None
    output_format: str = "csv"

    def validate(self) -> None:
        _require(self.scheme in SCHEMES, f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        _require(self.output_format in FORMATS, f"output_format must be one of {FORMATS}")
        _require(_finite(self.probe_detuning_hz), "probe_detuning_hz must be finite")
        _require(_finite(self.residual_detuning_hz), "residual_detuning_hz must be finite")
        _require(_finite(self.crosstalk_re) and _finite(self.crosstalk_im), "crosstalk must be finite")
        _require(_finite(self.scale) and self.scale > 0.0, "scale must be positive")
        self.atom.build()
        if self.idt is not None:
            self.idt.build()
        if self.scheme in ("control-sweep", "power-sweep", "linewidth-pipeline"):
            _require(self.calibration is not None, f"{self.scheme} needs a calibration section")
            self.calibration.build()
            _require(self.power_grid is not None, f"{self.scheme} needs power_grid")
        if self.scheme in ("control-sweep", "linewidth-pipeline"):
            _require(self.control_frequency_grid is not None,
                     f"{self.scheme} needs control_frequency_grid")
            _require(min(self.control_frequency_grid.start, self.control_frequency_grid.stop) > 0.0,
                     "control_frequency_grid must be positive frequencies")
        if self.scheme == "linewidth-pipeline":
            _require(self.power_grid.count >= 3, "linewidth-pipeline needs at least 3 powers")
            _require(self.control_frequency_grid.count >= 5,
                     "linewidth-pipeline needs at least 5 frequency points")
        if self.scheme == "power-sweep" and self.control_frequency_hz is not None:
            _require(self.control_frequency_hz > 0.0, "control_frequency_hz must be positive")
        if self.scheme == "flux-sweep":
            _require(self.probe_detuning_grid is not None, "flux-sweep needs probe_detuning_grid")
            _require(len(self.control_rabi_hz) > 0, "flux-sweep needs at least one control_rabi_hz")
            _require(all(_finite(v) and v >= 0.0 for v in self.control_rabi_hz),
                     "control_rabi_hz values must be finite and nonnegative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "scheme": self.scheme,
            "atom": self.atom.to_dict(),
            "idt": None if self.idt is None else self.idt.to_dict(),
            "calibration": None if self.calibration is None else self.calibration.to_dict(),
            "probe_detuning_hz": self.probe_detuning_hz,
            "power_grid": None if self.power_grid is None else self.power_grid.to_dict(),
            "control_frequency_grid": (
                None if self.control_frequency_grid is None else self.control_frequency_grid.to_dict()
            ),
            "probe_detuning_grid": (
                None if self.probe_detuning_grid is None else self.probe_detuning_grid.to_dict()
            ),
            "control_rabi_hz": list(self.control_rabi_hz),
            "control_frequency_hz": self.control_frequency_hz,
            "residual_detuning_hz": self.residual_detuning_hz,
            "crosstalk_re": self.crosstalk_re,
            "crosstalk_im": self.crosstalk_im,
            "scale": self.scale,
            "noise": self.noise.to_dict(),
            "output_path": self.output_path,
            "output_format": self.output_format,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        _require(isinstance(data, Mapping), "config must be a JSON object")
        data = dict(data)
        version = data.pop("schema_version", None)
        _require(version == SCHEMA_VERSION,
                 f"config schema_version must be {SCHEMA_VERSION}, got {version!r}")
        known = {
            "scheme", "atom", "idt", "calibration", "probe_detuning_hz", "power_grid",
            "control_frequency_grid", "probe_detuning_grid", "control_rabi_hz",
            "control_frequency_hz", "residual_detuning_hz", "crosstalk_re", "crosstalk_im",
            "scale", "noise", "output_path", "output_format",
        }
        extra = set(data) - known
        _require(not extra, f"config has unknown keys: {sorted(extra)}")
        _require("scheme" in data, "config needs a scheme")
        _require("atom" in data and data["atom"] is not None, "config needs an atom section")
        rabi = data.get("control_rabi_hz", [])
        _require(isinstance(rabi, (list, tuple)), "control_rabi_hz must be a list")
        out_path = data.get("output_path")
        cfg = cls(
            scheme=str(data["scheme"]),
            atom=AtomParams.from_dict(data["atom"]),
            idt=None if data.get("idt") is None else IdtParams.from_dict(data["idt"]),
            calibration=(
                None if data.get("calibration") is None
                else CalibrationParams.from_dict(data["calibration"])
            ),
            probe_detuning_hz=float(data.get("probe_detuning_hz", 0.0)),
            power_grid=(
                None if data.get("power_grid") is None
                else GridSpec.from_dict(data["power_grid"], "power_grid")
            ),
            control_frequency_grid=(
                None if data.get("control_frequency_grid") is None
                else GridSpec.from_dict(data["control_frequency_grid"], "control_frequency_grid")
            ),
            probe_detuning_grid=(
                None if data.get("probe_detuning_grid") is None
                else GridSpec.from_dict(data["probe_detuning_grid"], "probe_detuning_grid")
            ),
            control_rabi_hz=tuple(float(v) for v in rabi),
            control_frequency_hz=(
                None if data.get("control_frequency_hz") is None
                else float(data["control_frequency_hz"])
            ),
            residual_detuning_hz=float(data.get("residual_detuning_hz", 0.0)),
            crosstalk_re=float(data.get("crosstalk_re", 0.0)),
            crosstalk_im=float(data.get("crosstalk_im", 0.0)),
            scale=float(data.get("scale", 1.0)),
            noise=(
                NoiseParams() if data.get("noise") is None
                else NoiseParams.from_dict(data["noise"])
            ),
            output_path=None if out_path is None else str(out_path),
            output_format=str(data.get("output_format", "csv")),
        )
        cfg.validate()
        return cfg


def merge_config_dicts(base: Mapping[str, Any], overlay: Mapping[str, Any]) -> dict[str, Any]:
    """Field-by-field overlay: overlay leaves win, objects merge recursively."""
    merged = dict(base)
    for key, value in overlay.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge_config_dicts(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config_file(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    _require(isinstance(data, dict), "config file must contain a JSON object")
    return data


# ---------------------------------------------------------------------------
# Built-in device profile
# ---------------------------------------------------------------------------

# Reflection-side device: probe resonant with the 0-1 transition, second
# transition 2.15 GHz, radiative decay 20.1 MHz, coherence rates 21 / 4.94 MHz.
_REFLECTION_ATOM = AtomParams(
    frequency_hz=2.2684e9,
    anharmonicity_hz=118.4e6,
    decay_hz=20.1e6,
    upper_decay_hz=1.09e6,
    dephasing1_hz=10.95e6,
    dephasing2_hz=4.395e6,
)

# Transmission-side device: probe fixed at 2.2644 GHz, upper coherence rate
# 4.5 MHz as extracted from the transmitted lineshapes.
_TRANSMISSION_ATOM = AtomParams(
    frequency_hz=2.2644e9,
    anharmonicity_hz=114.4e6,
    decay_hz=20.1e6,
    upper_decay_hz=1.09e6,
    dephasing1_hz=10.95e6,
    dephasing2_hz=3.955e6,
)

_PROFILE_IDT = IdtParams(pairs=25, frequency_hz=2.26e9, k2=7.11e-4, capacitance_f=1.5e-13)

# Anchor: the EIT/ATS threshold Rabi frequency 16.06 MHz is reached at
# -45 dBm of room-temperature control power.
_PROFILE_CALIBRATION = CalibrationParams(anchor_power_dbm=-45.0, anchor_rabi_hz=16.06e6)

PROFILE_NAMES = ("paper",)


def paper_profile(scheme: str) -> ExperimentConfig:
    """Built-in device profile reproducing the published datasets per scheme."""
    _require(scheme in SCHEMES, f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if scheme == "control-sweep":
        cfg = ExperimentConfig(
            scheme=scheme,
            atom=_REFLECTION_ATOM,
            idt=_PROFILE_IDT,
            calibration=_PROFILE_CALIBRATION,
            power_grid=GridSpec(start=-60.0, stop=-40.0, count=21),
            control_frequency_grid=GridSpec(start=2.10e9, stop=2.20e9, count=201),
        )
    elif scheme == "power-sweep":
        cfg = ExperimentConfig(
            scheme=scheme,
            atom=_REFLECTION_ATOM,
            idt=_PROFILE_IDT,
            calibration=_PROFILE_CALIBRATION,
            power_grid=GridSpec(start=-60.0, stop=-40.0, count=41),
            control_frequency_hz=2.15e9,
        )
    elif scheme == "linewidth-pipeline":
        cfg = ExperimentConfig(
            scheme=scheme,
            atom=_REFLECTION_ATOM,
            idt=_PROFILE_IDT,
            calibration=_PROFILE_CALIBRATION,
            power_grid=GridSpec(start=-60.0, stop=-45.0, count=10),
            control_frequency_grid=GridSpec(start=2.125e9, stop=2.175e9, count=201),
        )
    else:
        cfg = ExperimentConfig(
            scheme=scheme,
            atom=_TRANSMISSION_ATOM,
            idt=_PROFILE_IDT,
            calibration=_PROFILE_CALIBRATION,
            probe_detuning_grid=GridSpec(start=-50.0e6, stop=50.0e6, count=401),
            control_rabi_hz=(6.0e6, 16.0e6, 30.0e6),
            residual_detuning_hz=4.0e6,
            crosstalk_re=0.05,
            crosstalk_im=0.0,
        )
    cfg.validate()
    return cfg


def resolve_config(
    scheme: str,
    profile: str | None = None,
    config_path: str | Path | None = None,
    *,
    seed: int | None = None,
    output_path: str | None = None,
    output_format: str | None = None,
) -> ExperimentConfig:
    """Combine profile, config file, and command-line overrides into a config.

    A config file overlays the profile field-by-field when both are given;
    without a profile the file must be complete. The scheme is fixed by the
    caller and must not conflict with the file.
    """
    if profile is not None:
        _require(profile in PROFILE_NAMES, f"unknown profile {profile!r}; choose from {PROFILE_NAMES}")
        base = paper_profile(scheme).to_dict()
    else:
        base = None
    if config_path is not None:
        overlay = load_config_file(config_path)
        if "scheme" in overlay and overlay["scheme"] != scheme:
            raise ConfigError(
                f"config file scheme {overlay['scheme']!r} conflicts with requested {scheme!r}"
            )
        if base is not None:
            overlay.pop("schema_version", None)
            merged = merge_config_dicts(base, overlay)
        else:
            merged = overlay
        merged["scheme"] = scheme
        cfg = ExperimentConfig.from_dict(merged)
    elif base is not None:
        cfg = ExperimentConfig.from_dict(base)
    else:
        raise ConfigError("need --config, --profile, or both")
    updates: dict[str, Any] = {}
    if seed is not None:
        _require(0 <= seed < 2**64, "seed must be in [0, 2^64)")
        updates["noise"] = NoiseParams(sigma_rel=cfg.noise.sigma_rel, seed=seed, kind=cfg.noise.kind)
    if output_path is not None:
        updates["output_path"] = output_path
    if output_format is not None:
        _require(output_format in FORMATS, f"output_format must be one of {FORMATS}")
        updates["output_format"] = output_format
    if updates:
        cfg = replace(cfg, **updates)
        cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Records and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRecord:
    """One simulated point: axis coordinates, complex response, annotation."""

    axes: tuple[float, ...]
    value: complex
    annotation: str = ""

    def __post_init__(self) -> None:
        if not all(math.isfinite(a) for a in self.axes):
            raise ValueError("record axes must be finite")
        if not (math.isfinite(self.value.real) and math.isfinite(self.value.imag)):
            raise ValueError("record value must be finite")

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def phase(self) -> float:
        return cmath.phase(self.value)


@dataclass(frozen=True)
class RunResult:
    """Everything a scheme run produces: rows for export plus summary facts."""

    config: ExperimentConfig
    columns: tuple[str, ...]
    records: tuple[SweepRecord, ...]
    table: tuple[dict[str, Any], ...]
    summary: dict[str, Any]


def _sweep_result(
    config: ExperimentConfig,
    axis_names: tuple[str, ...],
    records: Sequence[SweepRecord],
    summary: dict[str, Any],
) -> RunResult:
    columns = axis_names + _SWEEP_VALUE_COLUMNS
    table = []
    for rec in records:
        row: dict[str, Any] = dict(zip(axis_names, rec.axes))
        row["re"] = rec.value.real
        row["im"] = rec.value.imag
        row["abs"] = rec.magnitude
        row["phase"] = rec.phase
        row["annotation"] = rec.annotation
        table.append(row)
    return RunResult(
        config=config,
        columns=columns,
        records=tuple(records),
        table=tuple(table),
        summary=summary,
    )


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------


def synthesize_noise(
    records: Sequence[SweepRecord],
    sigma_rel: float,
    seed: int | np.random.SeedSequence,
    kind: str = "complex",
) -> list[SweepRecord]:
    """Add seeded Gaussian measurement noise to a record list.

    kind="complex": independent noise per quadrature with standard deviation
    sigma_rel * max|value| (the physical digitizer model). kind="magnitude":
    multiplies each value by (1 + n), n ~ N(0, sigma_rel), for sensitivity
    studies. Deterministic given the seed; sigma_rel = 0 returns the records
    unchanged.
    """
    if sigma_rel < 0.0 or not math.isfinite(sigma_rel):
        raise ValueError("sigma_rel must be finite and >= 0")
    if kind not in ("complex", "magnitude"):
        raise ValueError("kind must be 'complex' or 'magnitude'")
    if sigma_rel == 0.0 or not records:
        return list(records)
    rng = np.random.Generator(np.random.Philox(seed))
    if kind == "complex":
        sigma = sigma_rel * max(rec.magnitude for rec in records)
        draws = rng.normal(0.0, sigma, size=(len(records), 2))
        return [
            SweepRecord(rec.axes, rec.value + complex(dr, di), rec.annotation)
            for rec, (dr, di) in zip(records, draws)
        ]
    factors = 1.0 + rng.normal(0.0, sigma_rel, size=len(records))
    return [
        SweepRecord(rec.axes, rec.value * factor, rec.annotation)
        for rec, factor in zip(records, factors)
    ]


# ---------------------------------------------------------------------------
# Scheme runners
# ---------------------------------------------------------------------------


def simulate_control_row(
    atom: ThreeLevelAtom,
    omega_c: float,
    control_frequencies_hz: Sequence[float],
    probe_detuning_hz: float = 0.0,
) -> np.ndarray:
    """Weak-probe reflection across control frequencies at one control amplitude."""
    delta_p = hz_to_angular(probe_detuning_hz)
    delta_c = hz_to_angular(np.asarray(control_frequencies_hz, dtype=float)) - atom.omega21
    return reflection_coefficient(
        Gamma10=atom.Gamma10,
        gamma10=atom.gamma10,
        gamma20=atom.gamma20,
        Omega_c=omega_c,
        Delta_p=delta_p,
        Delta_c=delta_c,
    )


def _regime_value(atom: ThreeLevelAtom, omega_c: float) -> str:
    return classify_regime(atom.gamma10, atom.gamma20, omega_c).regime.value


def _threshold_summary(atom: ThreeLevelAtom, calibration: PowerCalibration | None) -> dict[str, Any]:
    threshold = max(atom.gamma10 - atom.gamma20, 0.0)
    out: dict[str, Any] = {"threshold_rabi_hz": angular_to_hz(threshold)}
    if calibration is not None and threshold > 0.0:
        out["threshold_power_dbm"] = calibration.power_dbm(threshold)
    else:
        out["threshold_power_dbm"] = None
    return out


def run_control_sweep(config: ExperimentConfig) -> RunResult:
    """2-D reflection map over (control power dBm, control frequency Hz)."""
    config.validate()
    _require(config.scheme == "control-sweep", "config scheme must be control-sweep")
    atom = config.atom.build()
    calibration = config.calibration.build()
    powers = config.power_grid.values()
    freqs = config.control_frequency_grid.values()
    records: list[SweepRecord] = []
    for power in powers:
        omega_c = calibration.omega_c(float(power))
        regime = _regime_value(atom, omega_c)
        row = simulate_control_row(atom, omega_c, freqs, config.probe_detuning_hz)
        for freq, value in zip(freqs, row):
            records.append(SweepRecord((float(power), float(freq)), complex(value), regime))
    if config.noise.sigma_rel > 0.0:
        records = synthesize_noise(records, config.noise.sigma_rel, config.noise.seed, config.noise.kind)
    summary = _threshold_summary(atom, calibration)
    summary["transition_frequency_hz"] = angular_to_hz(atom.omega21)
    return _sweep_result(config, ("control_power_dbm", "control_frequency_hz"), records, summary)


def run_power_sweep(config: ExperimentConfig) -> RunResult:
    """1-D reflection versus control power at a fixed control frequency."""
    config.validate()
    _require(config.scheme == "power-sweep", "config scheme must be power-sweep")
    atom = config.atom.build()
    calibration = config.calibration.build()
    powers = config.power_grid.values()
    if config.control_frequency_hz is None:
        delta_c = 0.0
    else:
        delta_c = hz_to_angular(config.control_frequency_hz) - atom.omega21
    delta_p = hz_to_angular(config.probe_detuning_hz)
    records: list[SweepRecord] = []
    for power in powers:
        omega_c = calibration.omega_c(float(power))
        value = reflection_coefficient(
            Gamma10=atom.Gamma10,
            gamma10=atom.gamma10,
            gamma20=atom.gamma20,
            Omega_c=omega_c,
            Delta_p=delta_p,
            Delta_c=delta_c,
        )
        records.append(SweepRecord((float(power),), complex(value), _regime_value(atom, omega_c)))
    if config.noise.sigma_rel > 0.0:
        records = synthesize_noise(records, config.noise.sigma_rel, config.noise.seed, config.noise.kind)
    summary = _threshold_summary(atom, calibration)
    return _sweep_result(config, ("control_power_dbm",), records, summary)


def run_flux_sweep(config: ExperimentConfig) -> RunResult:
    """Transmission curves versus probe detuning, one per control amplitude.

    Both detunings are swept together (transmon tuning), leaving the control
    offset at probe resonance as the residual detuning; a constant complex
    crosstalk background and a real scale multiply the model transmission.
    """
    config.validate()
    _require(config.scheme == "flux-sweep", "config scheme must be flux-sweep")
    atom = config.atom.build()
    detunings = config.probe_detuning_grid.values()
    delta = hz_to_angular(config.residual_detuning_hz)
    crosstalk = complex(config.crosstalk_re, config.crosstalk_im)
    records: list[SweepRecord] = []
    for rabi_hz in config.control_rabi_hz:
        omega_c = hz_to_angular(rabi_hz)
        regime = _regime_value(atom, omega_c)
        t = transmission_flux_coefficient(
            Gamma10=atom.Gamma10,
            gamma10=atom.gamma10,
            gamma20=atom.gamma20,
            Omega_c=omega_c,
            Delta_p=hz_to_angular(detunings),
            delta=delta,
        )
        values = config.scale * (t + crosstalk)
        for det, value in zip(detunings, values):
            records.append(SweepRecord((float(rabi_hz), float(det)), complex(value), regime))
    if config.noise.sigma_rel > 0.0:
        records = synthesize_noise(records, config.noise.sigma_rel, config.noise.seed, config.noise.kind)
    summary = _threshold_summary(atom, None)
    summary["residual_detuning_hz"] = config.residual_detuning_hz
    return _sweep_result(config, ("control_rabi_hz", "probe_detuning_hz"), records, summary)


def run_linewidth_pipeline(config: ExperimentConfig) -> RunResult:
    """Per-power dip fits, then the linewidth-versus-power line fit.

    For each power: simulate the control-frequency dip at probe resonance,
    optionally add seeded noise (one spawned child seed per power, so the
    draws are independent of row evaluation order), fit the squared-magnitude
    Lorentzian, and keep the half width as the transparency linewidth. The
    surviving rows feed the weighted line fit for the intrinsic rate and the
    power calibration constant, which in turn give a control Rabi frequency
    with error bars per point. Rows whose dip fit fails are kept with a
    status message and excluded from the line fit.
    """
    config.validate()
    _require(config.scheme == "linewidth-pipeline", "config scheme must be linewidth-pipeline")
    atom = config.atom.build()
    calibration = config.calibration.build()
    powers = config.power_grid.values()
    freqs = config.control_frequency_grid.values()
    delta_c = hz_to_angular(freqs) - atom.omega21
    noisy = config.noise.sigma_rel > 0.0
    children = np.random.SeedSequence(config.noise.seed).spawn(len(powers))

    statuses: list[str] = []
    regimes: list[str] = []
    omega_c_true: list[float] = []
    widths: list[float | None] = []
    width_sigmas: list[float | None] = []
    centers: list[float | None] = []
    for i, power in enumerate(powers):
        omega_c = calibration.omega_c(float(power))
        omega_c_true.append(omega_c)
        regimes.append(_regime_value(atom, omega_c))
        base = simulate_control_row(atom, omega_c, freqs, probe_detuning_hz=0.0)
        records = [SweepRecord((float(f),), complex(v)) for f, v in zip(freqs, base)]
        if noisy:
            records = synthesize_noise(records, config.noise.sigma_rel, children[i], config.noise.kind)
        values = np.array([rec.value for rec in records])
        y = np.abs(values) ** 2
        if noisy:
            # known per-quadrature sigma propagated to |r|^2
            sigma_q = config.noise.sigma_rel * float(np.max(np.abs(base)))
            sigma_y = 2.0 * np.abs(values) * sigma_q
            samples = samples_from_arrays(delta_c, y, sigma_y)
        else:
            samples = samples_from_arrays(delta_c, y)
        try:
            fit = fit_dip_lorentzian(samples)
            if "hwhm-unidentifiable" in fit.notes:
                raise ConvergenceError("dip is degenerate: width unidentifiable")
            width_sigma = fit.error("hwhm")
            if noisy and not (math.isfinite(width_sigma) and width_sigma > 0.0):
                raise ConvergenceError("dip width error is not a positive finite number")
            widths.append(fit.value("hwhm"))
            width_sigmas.append(width_sigma)
            centers.append(fit.value("center"))
            statuses.append("ok")
        except (ConvergenceError, ValueError) as exc:
            widths.append(None)
            width_sigmas.append(None)
            centers.append(None)
            statuses.append(f"dip-fit-failed: {exc}")

    good = [i for i, s in enumerate(statuses) if s == "ok"]
    if len(good) < 3:
        raise ConvergenceError(
            f"only {len(good)} of {len(powers)} dip fits usable; need at least 3 for the line fit"
        )
    powers_watts = np.array([dbm_to_watts(float(p)) for p in powers])
    line = fit_linewidth_line(
        powers_watts[good],
        [widths[i] for i in good],
        None if not noisy else [width_sigmas[i] for i in good],
        gamma10=atom.gamma10,
    )
    gamma20_fit = line.value("gamma20")
    k_fit = line.value("k")
    rabi = rabi_per_point(
        line,
        [widths[i] for i in good],
        None if not noisy else [width_sigmas[i] for i in good],
        gamma10=atom.gamma10,
    )
    rabi_by_row: dict[int, Any] = {row: point for row, point in zip(good, rabi)}

    table: list[dict[str, Any]] = []
    for i, power in enumerate(powers):
        point = rabi_by_row.get(i)
        row: dict[str, Any] = {
            "power_dbm": float(power),
            "power_watts": float(powers_watts[i]),
            "gamma_eit_hz": None if widths[i] is None else angular_to_hz(widths[i]),
            "gamma_eit_sigma_hz": None if width_sigmas[i] is None else angular_to_hz(width_sigmas[i]),
            "omega_c_hz": None if point is None else angular_to_hz(point.omega_c),
            "omega_c_sigma_hz": None if point is None else angular_to_hz(point.sigma),
            "one_sided": None if point is None else point.one_sided,
            "log10_power_watts": math.log10(float(powers_watts[i])),
            "log10_omega_c_hz": (
                None if point is None or point.omega_c <= 0.0
                else math.log10(angular_to_hz(point.omega_c))
            ),
            "dip_center_hz": (
                None if centers[i] is None
                else angular_to_hz(atom.omega21 + centers[i])
            ),
            "regime": regimes[i],
            "status": statuses[i],
        }
        table.append(row)

    threshold_rabi = max(atom.gamma10 - gamma20_fit, 0.0)
    summary: dict[str, Any] = {
        "line_fit": {
            "gamma20_hz": angular_to_hz(gamma20_fit),
            "gamma20_sigma_hz": angular_to_hz(line.error("gamma20")),
            "k_hz2_per_watt": k_fit / TWO_PI**2,
            "k_sigma_hz2_per_watt": line.error("k") / TWO_PI**2,
            "rss": line.rss,
            "converged": line.converged,
            "points_used": len(good),
        },
        "threshold_rabi_hz": angular_to_hz(threshold_rabi),
        "threshold_power_dbm": (
            watts_to_dbm(threshold_rabi**2 / k_fit) if threshold_rabi > 0.0 and k_fit > 0.0 else None
        ),
        "gamma10_hz": angular_to_hz(atom.gamma10),
    }
    return RunResult(
        config=config,
        columns=PIPELINE_COLUMNS,
        records=(),
        table=tuple(table),
        summary=summary,
    )


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Dispatch on the config's scheme."""
    runners = {
        "control-sweep": run_control_sweep,
        "power-sweep": run_power_sweep,
        "flux-sweep": run_flux_sweep,
        "linewidth-pipeline": run_linewidth_pipeline,
    }
    config.validate()
    return runners[config.scheme](config)


# ---------------------------------------------------------------------------
# Export / import
# ---------------------------------------------------------------------------


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _parse_cell(text: str) -> Any:
    if text == "":
        return None
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return float(text)
    except ValueError:
        return text


def csv_text(columns: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> str:
    """Header plus one line per row; floats at 17 significant digits."""
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_cell(row.get(col)) for col in columns))
    return "\n".join(lines) + "\n"


def export_csv(columns: Sequence[str], rows: Sequence[Mapping[str, Any]], path: str | Path) -> None:
    Path(path).write_text(csv_text(columns, rows), encoding="utf-8", newline="\n")


def import_csv(path: str | Path) -> tuple[tuple[str, ...], list[dict[str, Any]]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.split("\n") if line != ""]
    if not lines:
        raise ValueError(f"{path} is empty")
    columns = tuple(lines[0].split(","))
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(columns):
            raise ValueError(f"{path}: row has {len(cells)} cells, expected {len(columns)}")
        rows.append({col: _parse_cell(cell) for col, cell in zip(columns, cells)})
    return columns, rows


def _json_sanitize(value: Any) -> Any:
    """Replace non-finite floats with null so the JSON stays standard."""
    if isinstance(value, dict):
        return {k: _json_sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_sanitize(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def json_text(
    columns: Sequence[str],
    rows: Sequence[Mapping[str, Any]],
    *,
    config_echo: Mapping[str, Any] | None = None,
    summary: Mapping[str, Any] | None = None,
) -> str:
    """Schema-versioned envelope carrying the config for provenance."""
    envelope = {
        "schema_version": SCHEMA_VERSION,
        "config_echo": _json_sanitize(dict(config_echo) if config_echo else None),
        "columns": list(columns),
        "rows": _json_sanitize([dict(row) for row in rows]),
        "summary": _json_sanitize(dict(summary) if summary else {}),
    }
    return json.dumps(envelope, sort_keys=True, indent=2, allow_nan=False) + "\n"


def export_json(
    columns: Sequence[str],
    rows: Sequence[Mapping[str, Any]],
    path: str | Path,
    *,
    config_echo: Mapping[str, Any] | None = None,
    summary: Mapping[str, Any] | None = None,
) -> None:
    Path(path).write_text(
        json_text(columns, rows, config_echo=config_echo, summary=summary),
        encoding="utf-8",
        newline="\n",
    )


def import_json(path: str | Path) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as handle:
        envelope = json.load(handle)
    if not isinstance(envelope, dict) or envelope.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path} is not a schema-version-{SCHEMA_VERSION} export")
    return envelope


def result_text(result: RunResult, fmt: str | None = None) -> str:
    """Serialize a run in the requested (or config-default) format."""
    fmt = fmt or result.config.output_format
    if fmt == "csv":
        return csv_text(result.columns, result.table)
    if fmt == "json":
        return json_text(
            result.columns,
            result.table,
            config_echo=result.config.to_dict(),
            summary=result.summary,
        )
    raise ConfigError(f"unknown export format {fmt!r}; choose from {FORMATS}")


def export_result(result: RunResult, path: str | Path, fmt: str | None = None) -> None:
    """Write a run to disk in the requested (or config-default) format."""
    Path(path).write_text(result_text(result, fmt), encoding="utf-8", newline="\n")
