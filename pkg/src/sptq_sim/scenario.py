"""Scenario files: JSON schema, parsing into typed parameters, report schemas.

A scenario is a flat JSON object; angles are in degrees.  Example::

    {
      "source_coherence": 0.95,
      "gate_bs_coherence": 0.95,
      "gate_dove_coherence": 0.98,
      "circuit_variant": "full_swap",
      "measurement": "sweep",
      "experiment": {"pair_rate": 2000, "dwell_s": 1.0, "seed": 7}
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from ._validation import SptqError
from .gates import CIRCUIT_VARIANTS
from .noise import GateNoise
from .source import SourceParams

MEASUREMENTS = ("sweep", "chsh", "classical_visibility")

_unit = {"type": "number", "minimum": 0, "maximum": 1}
_nonneg = {"type": "number", "minimum": 0}

SCENARIO_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "sptq_sim scenario",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "source_coherence": _unit,
        "source_white_noise": _unit,
        "gate_bs_coherence": _unit,
        "gate_dove_coherence": _unit,
        "per_photon_gate_noise": {"type": "boolean"},
        "circuit_variant": {"enum": list(CIRCUIT_VARIANTS)},
        "circuit": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["gate"],
                "properties": {
                    "gate": {"type": "string"},
                    "photon": {"enum": ["signal", "idler", "both"]},
                },
            },
        },
        "measurement": {"enum": list(MEASUREMENTS)},
        "experiment": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "pair_rate": _nonneg,
                "singles_rate_1": _nonneg,
                "singles_rate_2": _nonneg,
                "window_s": _nonneg,
                "dwell_s": _nonneg,
                "seed": {"type": "integer", "minimum": 0},
                "include_accidentals": {"type": "boolean"},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "theta1_deg": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "theta2_start_deg": {"type": "number"},
                "theta2_stop_deg": {"type": "number"},
                "theta2_step_deg": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "chsh": {
            "type": "object",
            "additionalProperties": False,
            "required": ["a_deg", "a_prime_deg", "b_deg", "b_prime_deg"],
            "properties": {k: {"type": "number"} for k in ("a_deg", "a_prime_deg", "b_deg", "b_prime_deg")},
        },
        "output_dir": {"type": "string"},
    },
}


class ScenarioError(SptqError):
    """Schema violation; ``path`` locates the offending field."""

    code = "E_SCHEMA"

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


def _json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def validate(instance: dict, schema: dict) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(err.message, _json_path(err.absolute_path))


@dataclass(frozen=True)
class ExperimentConfig:
    pair_rate: float = 2000.0
    singles_rate_1: float = 1e5
    singles_rate_2: float = 1e5
    window: float = 1e-9
    dwell: float = 1.0
    seed: int = 0
    include_accidentals: bool = False

    def __post_init__(self):
        for name in ("pair_rate", "singles_rate_1", "singles_rate_2", "window", "dwell"):
            if getattr(self, name) < 0:
                raise SptqError(f"{name} must be >= 0")
        if self.include_accidentals and self.window <= 0:
            raise SptqError("window must be > 0 when accidentals are enabled")


@dataclass(frozen=True)
class SweepPlan:
    theta1_deg: tuple = (0.0, 45.0)
    theta2_start_deg: float = 0.0
    theta2_stop_deg: float = 180.0
    theta2_step_deg: float = 10.0

    def theta2_grid_deg(self) -> list[float]:
        n = int(round((self.theta2_stop_deg - self.theta2_start_deg) / self.theta2_step_deg))
        return [self.theta2_start_deg + i * self.theta2_step_deg for i in range(n + 1)]


@dataclass(frozen=True)
class Scenario:
    source: SourceParams = field(default_factory=SourceParams)
    gate: GateNoise = field(default_factory=GateNoise)
    per_photon_gate_noise: bool = False
    circuit_variant: str = "full_swap"
    circuit: tuple | None = None
    measurement: str = "sweep"
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    sweep: SweepPlan = field(default_factory=SweepPlan)
    chsh_deg: tuple | None = None
    output_dir: str | None = None
    name: str = "scenario"

    def to_json(self) -> dict:
        """Scenario in its file form (degrees, flat keys)."""
        out = {
            "name": self.name,
            "source_coherence": self.source.momentum_coherence,
            "source_white_noise": self.source.white_noise,
            "gate_bs_coherence": self.gate.bs_coherence,
            "gate_dove_coherence": self.gate.dove_coherence,
            "per_photon_gate_noise": self.per_photon_gate_noise,
            "circuit_variant": self.circuit_variant,
            "measurement": self.measurement,
            "experiment": {
                "pair_rate": self.experiment.pair_rate,
                "singles_rate_1": self.experiment.singles_rate_1,
                "singles_rate_2": self.experiment.singles_rate_2,
                "window_s": self.experiment.window,
                "dwell_s": self.experiment.dwell,
                "seed": self.experiment.seed,
                "include_accidentals": self.experiment.include_accidentals,
            },
            "sweep": {**asdict(self.sweep), "theta1_deg": list(self.sweep.theta1_deg)},
        }
        if self.circuit is not None:
            out["circuit"] = [dict(step) for step in self.circuit]
        if self.chsh_deg is not None:
            out["chsh"] = dict(zip(("a_deg", "a_prime_deg", "b_deg", "b_prime_deg"), self.chsh_deg))
        if self.output_dir is not None:
            out["output_dir"] = self.output_dir
        return out


def parse_scenario(data: dict) -> Scenario:
    validate(data, SCENARIO_SCHEMA)
    exp = data.get("experiment", {})
    sw = data.get("sweep", {})
    chsh = data.get("chsh")
    try:
        cfg = ExperimentConfig(
            pair_rate=float(exp.get("pair_rate", 2000.0)),
            singles_rate_1=float(exp.get("singles_rate_1", 1e5)),
            singles_rate_2=float(exp.get("singles_rate_2", 1e5)),
            window=float(exp.get("window_s", 1e-9)),
            dwell=float(exp.get("dwell_s", 1.0)),
            seed=int(exp.get("seed", 0)),
            include_accidentals=bool(exp.get("include_accidentals", False)),
        )
    except SptqError as exc:
        raise ScenarioError(str(exc), "$.experiment") from None
    return Scenario(
        source=SourceParams(data.get("source_coherence", 1.0), data.get("source_white_noise", 1.0)),
        gate=GateNoise(data.get("gate_bs_coherence", 1.0), data.get("gate_dove_coherence", 1.0)),
        per_photon_gate_noise=data.get("per_photon_gate_noise", False),
        circuit_variant=data.get("circuit_variant", "full_swap"),
        circuit=tuple(data["circuit"]) if "circuit" in data else None,
        measurement=data.get("measurement", "sweep"),
        experiment=cfg,
        sweep=SweepPlan(
            theta1_deg=tuple(sw.get("theta1_deg", (0.0, 45.0))),
            theta2_start_deg=sw.get("theta2_start_deg", 0.0),
            theta2_stop_deg=sw.get("theta2_stop_deg", 180.0),
            theta2_step_deg=sw.get("theta2_step_deg", 10.0),
        ),
        chsh_deg=None if chsh is None else tuple(
            chsh[k] for k in ("a_deg", "a_prime_deg", "b_deg", "b_prime_deg")),
        output_dir=data.get("output_dir"),
        name=data.get("name", "scenario"),
    )


def load_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from None
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc.strerror}") from None
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    return parse_scenario(data)


# Reports ---------------------------------------------------------------------

_num = {"type": "number"}
_num_or_null = {"type": ["number", "null"]}

_fit = {
    "type": "object",
    "required": ["offset", "amplitude", "phase_deg", "visibility", "sigma_visibility", "chi2"],
    "properties": {k: _num for k in ("offset", "amplitude", "phase_deg", "visibility",
                                      "sigma_visibility", "chi2")},
}

_point = {
    "type": "object",
    "required": ["theta2_deg", "counts", "dwell_s", "prob_exact"],
    "properties": {"theta2_deg": _num, "counts": _num, "dwell_s": _num,
                   "prob_exact": {"type": "number", "minimum": 0, "maximum": 1}},
}

_chsh_run = {
    "type": "object",
    "required": ["settings_deg", "S_exact", "S", "sigma_S", "significance", "total_counts"],
    "properties": {
        "settings_deg": {"type": "object"},
        "S_exact": _num, "S": _num, "sigma_S": _num, "significance": _num_or_null,
        "total_counts": _num,
        "E": {"type": "array", "items": _num},
        "sigma_E": {"type": "array", "items": _num},
    },
}

_common = {
    "kind": {"type": "string"},
    "scenario": SCENARIO_SCHEMA,
    "exact": {"type": "boolean"},
    "rng": {"type": "string"},
}

REPORT_SCHEMAS: dict[str, dict] = {
    "sweep": {
        "type": "object",
        "required": ["kind", "scenario", "exact", "rng", "curves", "derived"],
        "properties": {
            **_common,
            "kind": {"const": "sweep"},
            "curves": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["theta1_deg", "points", "fit", "visibility_exact"],
                    "properties": {"theta1_deg": _num, "points": {"type": "array", "items": _point},
                                   "fit": _fit, "visibility_exact": _num},
                },
            },
            "derived": {
                "type": "object",
                "required": ["V0", "V45", "V45_model", "V_C1_model", "source_coherence"],
                "properties": {"V0": _num_or_null, "V45": _num_or_null, "V45_model": _num,
                               "V_C1_model": _num, "source_coherence": _num_or_null},
            },
        },
    },
    "chsh": {
        "type": "object",
        "required": ["kind", "scenario", "exact", "rng", "standard", "optimized"],
        "properties": {**_common, "kind": {"const": "chsh"},
                       "standard": _chsh_run, "optimized": _chsh_run},
    },
    "classical_visibility": {
        "type": "object",
        "required": ["kind", "scenario", "V_C1", "V_C2"],
        "properties": {**_common, "kind": {"const": "classical_visibility"},
                       "V_C1": _num, "V_C2": _num, "dove_ratio": _num},
    },
    "state": {
        "type": "object",
        "required": ["kind", "scenario", "target", "fidelity", "purity"],
        "properties": {**_common, "kind": {"const": "state"}, "target": {"type": "string"},
                       "fidelity": _num, "purity": {"type": "object"}},
    },
}


def validate_report(report: dict) -> None:
    kind = report.get("kind")
    if kind not in REPORT_SCHEMAS:
        raise ScenarioError(f"unknown report kind {kind!r}", "$.kind")
    validate(report, REPORT_SCHEMAS[kind])
