"""Загрузка и проверка JSON-конфигурации эксперимента."""
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import jsonschema

from errors import ConfigError
from flow import FlowConfig
from geometry import Point2, QuadratureSpec
from hamiltonian import HamiltonianSpec, radial_spec
from oneform import PrimitiveOneForm

logger = logging.getLogger(__name__)

COMMANDS = ("flow", "action", "winding", "intersect", "asymptotic", "calabi", "verify-theorem", "verify-all")
SUITE_NAMES = ("trivial", "radial-0.5", "radial-1", "radial-2", "perturbed", "config")


def get_app_dir():
    """Получение директории приложения (для PyInstaller или разработки)."""
    if getattr(sys, 'frozen', False):
        return os.path.dirname(sys.executable)
    return os.path.dirname(os.path.abspath(__file__))


_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_POSITIVE = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {
        "hamiltonian": {
            "type": "object",
            "properties": {"terms": {"type": "array", "items": {"$ref": "#/$defs/term"}}},
            "required": ["terms"],
            "additionalProperties": False,
        },
        "term": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {
                        "type": {"const": "radial"},
                        "coeffs": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                        "amplitude": {"type": "number"},
                    },
                    "required": ["type", "coeffs"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "type": {"const": "perturbation"},
                        "k": _POSITIVE,
                        "tau": {"enum": ["1", "cos", "sin"]},
                        "amplitude": {"type": "number"},
                    },
                    "required": ["type", "k"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "type": {"const": "concatenation"},
                        "first": {"$ref": "#/$defs/hamiltonian"},
                        "second": {"$ref": "#/$defs/hamiltonian"},
                    },
                    "required": ["type", "first", "second"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {"type": {"const": "reversal"}, "inner": {"$ref": "#/$defs/hamiltonian"}},
                    "required": ["type", "inner"],
                    "additionalProperties": False,
                },
            ]
        },
        "primitive": {
            "type": "object",
            "properties": {
                "base": {"enum": ["radial", "vertical", "horizontal"]},
                "gauge": {
                    "type": "array",
                    "items": {"type": "array", "prefixItems": [{"type": "integer"}, {"type": "integer"},
                                                               {"type": "number"}],
                              "minItems": 3, "maxItems": 3},
                },
            },
            "additionalProperties": False,
        },
    },
    "type": "object",
    "properties": {
        "hamiltonian": {"$ref": "#/$defs/hamiltonian"},
        "primitives": {"type": "array", "items": {"$ref": "#/$defs/primitive"}, "minItems": 1},
        "flow": {
            "type": "object",
            "properties": {
                "steps_per_unit_time": {"type": "integer", "minimum": 16},
                "integrator": {"enum": ["rk4"]},
                "interpolation": {"enum": ["cubic-hermite"]},
            },
            "additionalProperties": False,
        },
        "quadrature": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["polar-grid", "monte-carlo"]},
                "n_r": _POSITIVE,
                "n_theta": _POSITIVE,
                "n_samples": _POSITIVE,
            },
            "additionalProperties": False,
        },
        "pair_samples": _POSITIVE,
        "n": _POSITIVE,
        "x": _POINT,
        "y": _POINT,
        "e": _POINT,
        "k": _POSITIVE,
        "min_separation": {"type": "number", "minimum": 0, "exclusiveMaximum": 1e-3},
        "points": _POSITIVE,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "acceptance": {
            "type": "object",
            "properties": {
                "suite": {"type": "array", "items": {"enum": list(SUITE_NAMES)}, "minItems": 1},
                "oracle_points": _POSITIVE,
                "bound_triples": _POSITIVE,
                "bound_iterations": {"type": "array", "items": _POSITIVE, "minItems": 1},
                "identity_points": _POSITIVE,
                "identity_samples": _POSITIVE,
                "theorem_points": _POSITIVE,
                "theorem_n": {"type": "integer", "minimum": 4},
                "theorem_samples": _POSITIVE,
                "calabi_pairs": _POSITIVE,
                "jacobian_points": _POSITIVE,
                "bookkeeping_n": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "cauchy_n": {"type": "integer", "minimum": 16},
                "cauchy_samples": _POSITIVE,
                "alternate_threads": _POSITIVE,
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class AcceptanceScale:
    """Размеры выборок приёмочного набора."""
    suite: Tuple[str, ...] = ("trivial", "radial-0.5", "radial-1", "radial-2", "perturbed")
    oracle_points: int = 50
    bound_triples: int = 2000
    bound_iterations: Tuple[int, ...] = (1, 8)
    identity_points: int = 20
    identity_samples: int = 8192
    theorem_points: int = 20
    theorem_n: int = 64
    theorem_samples: int = 4096
    calabi_pairs: int = 20000
    jacobian_points: int = 100
    bookkeeping_n: Tuple[int, ...] = (16, 64)
    cauchy_n: int = 64
    cauchy_samples: int = 64
    alternate_threads: int = 1

    @classmethod
    def from_config(cls, data):
        values = dict(data)
        for key in ("suite", "bound_iterations", "bookkeeping_n"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)


@dataclass(frozen=True)
class ExperimentConfig:
    hamiltonian: HamiltonianSpec = field(default_factory=lambda: radial_spec(1.0))
    primitives: Tuple[PrimitiveOneForm, ...] = (PrimitiveOneForm("radial"),)
    flow: FlowConfig = field(default_factory=FlowConfig)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    pair_samples: int = 20000
    n: int = 64
    x: Optional[Point2] = None
    y: Optional[Point2] = None
    e: Point2 = Point2(1.0, 0.0)
    k: Optional[int] = None
    min_separation: float = 1e-6
    points: int = 20
    seed: int = 0
    acceptance: AcceptanceScale = field(default_factory=AcceptanceScale)

    @property
    def form(self):
        return self.primitives[0]

    @property
    def second_form(self):
        """Второй примитив для перекрёстной проверки или None, если в конфигурации он один."""
        return self.primitives[1] if len(self.primitives) > 1 else None

    @property
    def pair_quadrature(self):
        return QuadratureSpec("monte-carlo", n_samples=self.pair_samples, seed=self.seed)

    def with_seed(self, seed):
        return replace(self, seed=seed, quadrature=self.quadrature.with_seed(seed))

    def to_config(self):
        data = {
            "hamiltonian": self.hamiltonian.to_config(),
            "primitives": [form.to_config() for form in self.primitives],
            "flow": self.flow.to_config(),
            "quadrature": {key: value for key, value in self.quadrature.to_config().items() if key != "seed"},
            "pair_samples": self.pair_samples,
            "n": self.n,
            "e": list(self.e),
            "min_separation": self.min_separation,
            "points": self.points,
            "seed": self.seed,
        }
        if self.x is not None:
            data["x"] = list(self.x)
        if self.y is not None:
            data["y"] = list(self.y)
        if self.k is not None:
            data["k"] = self.k
        return data


def _point(values):
    return Point2(float(values[0]), float(values[1])) if values is not None else None


def config_from_dict(data, seed_override=None):
    """Проверяет разобранный JSON по схеме и собирает конфигурацию эксперимента."""
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        location = "/".join(str(part) for part in e.absolute_path) or "<корень>"
        raise ConfigError(f"Ошибка схемы конфигурации в {location}: {e.message}") from e

    seed = seed_override if seed_override is not None else data.get("seed", 0)
    defaults = ExperimentConfig()
    config = ExperimentConfig(
        hamiltonian=HamiltonianSpec.from_config(data["hamiltonian"]) if "hamiltonian" in data else defaults.hamiltonian,
        primitives=tuple(PrimitiveOneForm.from_config(item) for item in data.get("primitives", [{"base": "radial"}])),
        flow=FlowConfig(**data.get("flow", {})),
        quadrature=QuadratureSpec(**data.get("quadrature", {}), seed=seed),
        pair_samples=data.get("pair_samples", defaults.pair_samples),
        n=data.get("n", defaults.n),
        x=_point(data.get("x")),
        y=_point(data.get("y")),
        e=_point(data.get("e", list(defaults.e))),
        k=data.get("k"),
        min_separation=float(data.get("min_separation", defaults.min_separation)),
        points=data.get("points", defaults.points),
        seed=seed,
        acceptance=AcceptanceScale.from_config(data.get("acceptance", {})),
    )
    return config


def load_config(path, seed_override=None):
    """Читает JSON-файл конфигурации; ошибки чтения файла пробрасываются как OSError."""
    logger.info(f"Загрузка конфигурации: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Некорректный JSON в {path}: {e}") from e
    return config_from_dict(data, seed_override)


def _require(condition, message):
    if not condition:
        logger.error(f"Нарушено предусловие: {message}")
        raise ConfigError(message)


def validate_for(command, config):
    """Предусловия команды, проверяются до любых вычислений."""
    if command not in COMMANDS:
        raise ConfigError(f"Неизвестная команда: {command}")
    needs_x = command in ("flow", "action", "winding", "intersect", "asymptotic", "verify-theorem")
    needs_y = command in ("winding", "intersect")
    if needs_x:
        _require(config.x is not None, f"Команде {command} нужна точка x")
        _require(config.x.in_disk(), f"Точка x={tuple(config.x)} вне диска")
    if needs_y:
        _require(config.y is not None, f"Команде {command} нужна точка y")
    if needs_x and config.y is not None:
        _require(config.y.in_disk(), f"Точка y={tuple(config.y)} вне диска")
        _require(math.dist(config.x, config.y) >= 1e-12, "Точки x и y должны различаться")
    if command in ("intersect", "verify-theorem"):
        _require(config.x.norm() < 1.0, "Точка x должна лежать внутри диска")
    if command == "intersect":
        _require(abs(config.e.norm() - 1.0) <= 1e-9, f"Якорь e={tuple(config.e)} должен лежать на окружности")
    if command in ("asymptotic", "verify-theorem"):
        _require(config.n >= 4, "Для асимптотических оценок нужно n >= 4")
