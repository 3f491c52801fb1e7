"""Семейство гамильтонианов с компактным носителем и точными градиентами."""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import simpson

from errors import ConfigError
from geometry import as_points

logger = logging.getLogger(__name__)

# Точки на таком расстоянии от граничной окружности считаются неподвижными
DELTA_SUPPORT = 1e-12
TAU_KINDS = ("1", "cos", "sin")
_CUTOFF = Polynomial([1.0, -2.0, 1.0])


def cutoff(s):
    """chi(s) = (1 - s)^2 на [0, 1], вне отрезка ноль."""
    s = np.asarray(s, dtype=float)
    return np.where(s < 1.0, (1.0 - s) ** 2, 0.0)


def cutoff_derivative(s):
    s = np.asarray(s, dtype=float)
    return np.where(s < 1.0, -2.0 * (1.0 - s), 0.0)


def reduce_time(t):
    t = np.asarray(t, dtype=float)
    return np.where((t < 0.0) | (t > 1.0), np.mod(t, 1.0), t)


def _squared_radius(z):
    return z[..., 0] ** 2 + z[..., 1] ** 2


@dataclass(frozen=True)
class RadialProfile:
    """H(z) = A p(s) chi(s), s = x^2 + y^2, коэффициенты p по возрастанию степени."""
    coeffs: Tuple[float, ...] = (1.0,)
    amplitude: float = 1.0

    @property
    def polynomial(self):
        return self.amplitude * Polynomial(self.coeffs) * _CUTOFF

    def h(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s < 1.0, self.polynomial(s), 0.0)

    def dh(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s < 1.0, self.polynomial.deriv()(s), 0.0)

    def value(self, z, t):
        return self.h(_squared_radius(z)) * np.ones_like(t)

    def gradient(self, z, t):
        factor = 2.0 * self.dh(_squared_radius(z)) * np.ones_like(t)
        return factor[..., None] * z

    def breakpoints(self):
        return ()

    def angular_velocity(self, r):
        """omega(r) = -2 h'(r^2): поток поворачивает окружность радиуса r на omega(r) за единицу времени."""
        return -2.0 * self.dh(np.asarray(r, dtype=float) ** 2)

    def radial_action(self, r):
        s = np.asarray(r, dtype=float) ** 2
        return self.h(s) - s * self.dh(s)

    def calabi_reference(self):
        """2 pi, умноженное на интеграл h по [0, 1]."""
        antiderivative = self.polynomial.integ()
        return float(2.0 * np.pi * (antiderivative(1.0) - antiderivative(0.0)))

    def to_config(self):
        return {"type": "radial", "coeffs": list(self.coeffs), "amplitude": self.amplitude}


@dataclass(frozen=True)
class Perturbation:
    """Возмущение A chi(s) Re((x + iy)^k) tau(t)."""
    k: int = 1
    tau: str = "1"
    amplitude: float = 0.1

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"Степень возмущения должна быть >= 1: {self.k}")
        if self.tau not in TAU_KINDS:
            raise ConfigError(f"Неизвестный временной множитель: {self.tau}")

    def _tau(self, t):
        if self.tau == "cos":
            return np.cos(2.0 * np.pi * t)
        if self.tau == "sin":
            return np.sin(2.0 * np.pi * t)
        return np.ones_like(t)

    def value(self, z, t):
        w = z[..., 0] + 1j * z[..., 1]
        return self.amplitude * cutoff(_squared_radius(z)) * (w ** self.k).real * self._tau(t)

    def gradient(self, z, t):
        w = z[..., 0] + 1j * z[..., 1]
        s = _squared_radius(z)
        re_power = (w ** self.k).real
        d_power = self.k * w ** (self.k - 1)
        radial = (2.0 * cutoff_derivative(s) * re_power)[..., None] * z
        angular = cutoff(s)[..., None] * np.stack([d_power.real, -d_power.imag], axis=-1)
        return (self.amplitude * self._tau(t))[..., None] * (radial + angular)

    def breakpoints(self):
        return ()

    def to_config(self):
        return {"type": "perturbation", "k": self.k, "tau": self.tau, "amplitude": self.amplitude}


@dataclass(frozen=True)
class Concatenation:
    """`first` на [0, 1/2] и `second` на [1/2, 1], оба с удвоенной скоростью.

    Отображение за единицу времени равно (second за единицу) o (first за единицу).
    """
    first: "HamiltonianSpec"
    second: "HamiltonianSpec"

    def _split(self, t):
        t = np.asarray(t, dtype=float)
        left = t < 0.5
        return left, np.clip(2.0 * t, 0.0, 1.0), np.clip(2.0 * t - 1.0, 0.0, 1.0)

    def value(self, z, t):
        left, t1, t2 = self._split(t)
        return 2.0 * np.where(left, self.first.eval_H(z, t1), self.second.eval_H(z, t2))

    def gradient(self, z, t):
        left, t1, t2 = self._split(t)
        return 2.0 * np.where(left[..., None], self.first.gradient(z, t1), self.second.gradient(z, t2))

    def breakpoints(self):
        points = {0.5}
        points.update(0.5 * b for b in self.first.breakpoints())
        points.update(0.5 + 0.5 * b for b in self.second.breakpoints())
        return tuple(sorted(points))

    def to_config(self):
        return {"type": "concatenation", "first": self.first.to_config(), "second": self.second.to_config()}


@dataclass(frozen=True)
class TimeReversal:
    """-H(z, 1 - t): порождает обратное к отображению за единицу времени для `inner`."""
    inner: "HamiltonianSpec"

    def value(self, z, t):
        return -self.inner.eval_H(z, 1.0 - np.asarray(t, dtype=float))

    def gradient(self, z, t):
        return -self.inner.gradient(z, 1.0 - np.asarray(t, dtype=float))

    def breakpoints(self):
        return tuple(sorted(1.0 - b for b in self.inner.breakpoints()))

    def to_config(self):
        return {"type": "reversal", "inner": self.inner.to_config()}


@dataclass(frozen=True)
class HamiltonianSpec:
    terms: Tuple = ()

    @classmethod
    def from_config(cls, data):
        if not isinstance(data, dict) or "terms" not in data:
            raise ConfigError("Гамильтониан должен задаваться объектом с ключом 'terms'")
        terms = []
        for term in data["terms"]:
            kind = term.get("type")
            if kind == "radial":
                terms.append(RadialProfile(tuple(float(c) for c in term["coeffs"]), float(term.get("amplitude", 1.0))))
            elif kind == "perturbation":
                terms.append(Perturbation(int(term["k"]), str(term.get("tau", "1")), float(term.get("amplitude", 1.0))))
            elif kind == "concatenation":
                terms.append(Concatenation(cls.from_config(term["first"]), cls.from_config(term["second"])))
            elif kind == "reversal":
                terms.append(TimeReversal(cls.from_config(term["inner"])))
            else:
                raise ConfigError(f"Неизвестный тип слагаемого гамильтониана: {kind}")
        return cls(tuple(terms))

    def to_config(self):
        return {"terms": [term.to_config() for term in self.terms]}

    @property
    def is_trivial(self):
        return not self.terms

    def eval_H(self, z, t):
        z = as_points(z)
        t = reduce_time(t)
        total = np.zeros(np.broadcast_shapes(z.shape[:-1], t.shape))
        for term in self.terms:
            total = total + term.value(z, t)
        return float(total) if total.ndim == 0 else total

    def gradient(self, z, t):
        z = as_points(z)
        t = reduce_time(t)
        total = np.zeros(np.broadcast_shapes(z.shape[:-1], t.shape) + (2,))
        for term in self.terms:
            total = total + term.gradient(z, t)
        return total

    def eval_X(self, z, t):
        """Гамильтоново поле X = (dH/dy, -dH/dx), то есть dx^dy(X, .) = dH."""
        g = self.gradient(z, t)
        return np.stack([g[..., 1], -g[..., 0]], axis=-1)

    def breakpoints(self):
        points = set()
        for term in self.terms:
            points.update(term.breakpoints())
        return tuple(sorted(b for b in points if 0.0 < b < 1.0))

    def radial_profile(self):
        """Суммарный RadialProfile, если все слагаемые радиальные (h = 0 при H = 0), иначе None."""
        if not all(isinstance(term, RadialProfile) for term in self.terms):
            return None
        size = max((len(term.coeffs) for term in self.terms), default=1)
        coeffs = np.zeros(size)
        for term in self.terms:
            coeffs[:len(term.coeffs)] += term.amplitude * np.asarray(term.coeffs)
        return RadialProfile(tuple(float(c) for c in coeffs), 1.0)

    def inverse(self):
        return HamiltonianSpec((TimeReversal(self),))

    def then(self, other):
        """Склейка изотопий: сначала self, затем other. Отображение за единицу времени = other o self."""
        return HamiltonianSpec((Concatenation(self, other),))

    def time_integral(self, z, steps=512):
        """Интеграл H(z, t) по t из [0, 1], Симпсон по кускам между точками разрыва."""
        z = as_points(z)
        bounds = (0.0,) + self.breakpoints() + (1.0,)
        total = np.zeros(z.shape[:-1])
        for t_start, t_end in zip(bounds[:-1], bounds[1:]):
            count = max(2, int(np.ceil((t_end - t_start) * steps / 2)) * 2)
            shift = 1e-9 * (t_end - t_start) / count
            times = np.linspace(t_start, t_end, count + 1)
            sample = times.copy()
            sample[0] += shift
            sample[-1] -= shift
            values = self.eval_H(z[None, ...], sample.reshape((-1,) + (1,) * (z.ndim - 1)))
            total = total + simpson(values, x=times, axis=0)
        return float(total) if total.ndim == 0 else total


def trivial_spec():
    return HamiltonianSpec(())


def radial_spec(amplitude=1.0, coeffs=(1.0,)):
    return HamiltonianSpec((RadialProfile(tuple(coeffs), amplitude),))


def perturbed_spec(amplitude=1.0, k=2, tau="cos", perturbation=0.1):
    return HamiltonianSpec((RadialProfile((1.0,), amplitude), Perturbation(k, tau, perturbation)))


def standard_suite():
    """H = 0; радиальные A (1 - s)^2 при A из {0.5, 1, 2}; радиальный с возмущением k = 2, cos."""
    return {
        "trivial": trivial_spec(),
        "radial-0.5": radial_spec(0.5),
        "radial-1": radial_spec(1.0),
        "radial-2": radial_spec(2.0),
        "perturbed": perturbed_spec(),
    }
