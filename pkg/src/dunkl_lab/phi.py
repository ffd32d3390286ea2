"""The admissible nonlinearities ``φ``.

``φ`` is drawn from a closed family so that its primitive, Lipschitz
constant and growth at infinity are known in closed form:

* ``power(c, p)``: ``c u^p`` with ``c > 0``, ``p >= 1``
* ``linear(c)``: ``c u``
* ``expm1(c)``: ``c (e^u - 1)``
* ``poly(c1, c2, ...)``: ``sum_i c_i u^i`` with ``c_i >= 0`` (no constant term)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

KINDS = ("power", "linear", "expm1", "poly")


@dataclass(frozen=True)
class PhiSpec:
    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown nonlinearity {self.kind!r}")
        p = self.params
        if any(not math.isfinite(v) for v in p):
            raise ValidationError("parameters must be finite")
        if self.kind == "power":
            if len(p) != 2 or p[0] <= 0 or p[1] < 1:
                raise ValidationError("power:c,p needs c > 0 and p >= 1")
        elif self.kind in ("linear", "expm1"):
            if len(p) != 1 or p[0] <= 0:
                raise ValidationError(f"{self.kind}:c needs c > 0")
        else:
            if not p or any(c < 0 for c in p) or not any(c > 0 for c in p):
                raise ValidationError("poly needs nonnegative coefficients, not all zero")

    # constructors ----------------------------------------------------------
    @classmethod
    def power(cls, c: float, p: float) -> "PhiSpec":
        return cls("power", (float(c), float(p)))

    @classmethod
    def linear(cls, c: float = 1.0) -> "PhiSpec":
        return cls("linear", (float(c),))

    @classmethod
    def expm1(cls, c: float = 1.0) -> "PhiSpec":
        return cls("expm1", (float(c),))

    @classmethod
    def poly(cls, *coeffs: float) -> "PhiSpec":
        return cls("poly", tuple(float(c) for c in coeffs))

    @classmethod
    def parse(cls, text: str) -> "PhiSpec":
        """Parse ``power:c,p | linear:c | expm1:c | poly:c1,c2,...``."""
        kind, sep, rest = text.strip().partition(":")
        kind = kind.strip().lower()
        if kind == "exp_minus_one":
            kind = "expm1"
        if kind not in KINDS or not sep:
            raise ValidationError(f"malformed nonlinearity {text!r}")
        try:
            vals = tuple(float(v) for v in rest.split(","))
        except ValueError as exc:
            raise ValidationError(f"malformed nonlinearity {text!r}") from exc
        return cls(kind, vals)

    @property
    def description(self) -> str:
        return f"{self.kind}:{','.join(f'{v:g}' for v in self.params)}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params), "description": self.description}

    # evaluation ------------------------------------------------------------
    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        p = self.params
        if self.kind == "power":
            out = p[0] * np.maximum(u, 0.0) ** p[1]
        elif self.kind == "linear":
            out = p[0] * u
        elif self.kind == "expm1":
            with np.errstate(over="ignore"):
                out = p[0] * np.expm1(u)
        else:
            out = np.polynomial.polynomial.polyval(u, (0.0,) + p)
        return float(out) if out.ndim == 0 else out

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        p = self.params
        if self.kind == "power":
            out = p[0] * p[1] * np.maximum(u, 0.0) ** (p[1] - 1.0)
        elif self.kind == "linear":
            out = np.full_like(u, p[0])
        elif self.kind == "expm1":
            with np.errstate(over="ignore"):
                out = p[0] * np.exp(u)
        else:
            out = np.polynomial.polynomial.polyval(u, [i * c for i, c in enumerate((0.0,) + p)][1:])
        return float(out) if out.ndim == 0 else out

    def primitive(self, t):
        """``Φ(t) = ∫_0^t φ(s) ds`` in closed form."""
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "power":
            out = p[0] * np.maximum(t, 0.0) ** (p[1] + 1.0) / (p[1] + 1.0)
        elif self.kind == "linear":
            out = 0.5 * p[0] * t * t
        elif self.kind == "expm1":
            with np.errstate(over="ignore"):
                out = p[0] * (np.expm1(t) - t)
        else:
            coeffs = [0.0, 0.0] + [c / (i + 2) for i, c in enumerate(p)]
            out = np.polynomial.polynomial.polyval(t, coeffs)
        return float(out) if out.ndim == 0 else out

    def primitive_between(self, a: float, t):
        """``∫_a^t φ(s) ds``, arranged to avoid cancellation and overflow where possible."""
        t = np.asarray(t, dtype=float)
        p = self.params
        s = t - a
        if self.kind == "expm1":
            with np.errstate(over="ignore"):
                out = p[0] * (math.exp(a) * np.expm1(s) - s)
        elif self.kind == "linear":
            out = 0.5 * p[0] * s * (t + a)
        elif self.kind == "power" and a > 0 and np.all(np.abs(s) <= a):
            # cancellation regime only; far from a the plain difference is exact enough
            q = p[1] + 1.0
            # t = 0 gives log1p(-1) = -inf and expm1(-inf) = -1, which is exact
            with np.errstate(divide="ignore"):
                out = p[0] * a**q / q * np.expm1(q * np.log1p(s / a))
        elif self.kind == "poly":
            # t^n - a^n = (t - a) * sum_j t^j a^(n-1-j)
            out = np.zeros_like(t)
            for i, c in enumerate(p, start=1):
                n = i + 1
                geo = sum(t**j * a ** (n - 1 - j) for j in range(n))
                out = out + c / n * s * geo
        else:
            out = self.primitive(t) - self.primitive(a)
        return float(out) if np.ndim(out) == 0 else out

    def lipschitz(self, c: float) -> float:
        """Lipschitz constant on ``[0, c]``; every member has nondecreasing ``φ'``."""
        return float(self.derivative(max(c, 0.0)))

    def superlinear(self) -> bool:
        """Structural Keller-Osserman verdict: ``True`` when the integral converges."""
        if self.kind == "power":
            return self.params[1] > 1.0
        if self.kind == "linear":
            return False
        if self.kind == "expm1":
            return True
        return any(c > 0 for c in self.params[1:])
