"""1-periodic multi-well potentials and periodic space-time forcings.

Potentials are finite cosine series

    W(v) = sum_k a_k (1 - cos(2 pi k v)),

so W(0) = 0 and W' is 1-periodic automatically; wells sit on the integers
when the curvature at zero is positive.  The "standard" choice
a_1 = 1/(4 pi^2) has W'(v) = sin(2 pi v)/(2 pi) and unit curvature at the
wells, which keeps the transition-layer mobility constants clean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "PeriodicPotential",
    "ForcingTerm",
    "Forcing",
    "eval_potential",
    "sup_norms",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PeriodicPotential:
    """W(v) = sum_k coeffs[k-1] * (1 - cos(2 pi k v))."""

    cosine_coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.cosine_coeffs)
        if len(coeffs) == 0:
            raise ValueError("potential needs at least one cosine coefficient")
        if not all(math.isfinite(a) for a in coeffs):
            raise ValueError("potential coefficients must be finite")
        if all(a == 0.0 for a in coeffs):
            raise ValueError("potential must not be identically zero")
        object.__setattr__(self, "cosine_coeffs", coeffs)

    @classmethod
    def standard(cls) -> "PeriodicPotential":
        return cls((1.0 / (4.0 * math.pi**2),))

    def value(self, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        for k, a in enumerate(self.cosine_coeffs, start=1):
            out += a * (1.0 - np.cos(_TWO_PI * k * v))
        return out

    def derivative(self, v, order: int = 1):
        return eval_potential(self, v, order)

    @property
    def curvature_at_zero(self) -> float:
        """W''(0) = sum_k a_k (2 pi k)^2; must be positive for layer work."""
        return sum(a * (_TWO_PI * k) ** 2 for k, a in enumerate(self.cosine_coeffs, start=1))

    def sup_derivative(self, order: int = 1) -> float:
        """sup over a period of |W^(order)|, by dense sampling plus
        golden-section refinement around the sampled peak."""
        vs = np.linspace(0.0, 1.0, 2**14, endpoint=False)
        vals = np.abs(eval_potential(self, vs, order))
        i = int(np.argmax(vals))
        v0 = vs[i]
        dh = vs[1] - vs[0]
        res = minimize_scalar(
            lambda v: -abs(float(eval_potential(self, v, order))),
            bracket=(v0 - dh, v0, v0 + dh),
            method="golden",
            options={"xtol": 1e-12},
        )
        return max(float(vals[i]), -float(res.fun))

    def derivative_bound(self, order: int = 1) -> float:
        """Cheap upper bound sum_k |a_k| (2 pi k)^order (used for CFL)."""
        return sum(abs(a) * (_TWO_PI * k) ** order for k, a in enumerate(self.cosine_coeffs, start=1))


def eval_potential(W: PeriodicPotential, v, order: int = 0):
    """Evaluate W or one of its first four derivatives."""
    if order not in (0, 1, 2, 3, 4):
        raise ValueError(f"derivative order must be in 0..4 (got {order})")
    v = np.asarray(v, dtype=float)
    if order == 0:
        return W.value(v)
    out = np.zeros_like(v)
    for k, a in enumerate(W.cosine_coeffs, start=1):
        w = _TWO_PI * k
        phase = w * v
        if order == 1:
            out += a * w * np.sin(phase)
        elif order == 2:
            out += a * w**2 * np.cos(phase)
        elif order == 3:
            out += -a * w**3 * np.sin(phase)
        else:
            out += -a * w**4 * np.cos(phase)
    return out


@dataclass(frozen=True)
class ForcingTerm:
    """amp * trig(2 pi mode_t * t) * trig(2 pi mode_x * y)."""

    amp: float
    mode_t: int = 0
    mode_x: int = 0
    kind_t: str = "cos"
    kind_x: str = "cos"

    def __post_init__(self):
        if self.kind_t not in ("cos", "sin") or self.kind_x not in ("cos", "sin"):
            raise ValueError("forcing factors must be 'cos' or 'sin'")
        if self.mode_t < 0 or self.mode_x < 0:
            raise ValueError("forcing modes must be nonnegative integers")

    def eval(self, t, y):
        ft = np.cos(_TWO_PI * self.mode_t * np.asarray(t, dtype=float)) if self.kind_t == "cos" \
            else np.sin(_TWO_PI * self.mode_t * np.asarray(t, dtype=float))
        fy = np.cos(_TWO_PI * self.mode_x * np.asarray(y, dtype=float)) if self.kind_x == "cos" \
            else np.sin(_TWO_PI * self.mode_x * np.asarray(y, dtype=float))
        return self.amp * ft * fy


@dataclass(frozen=True)
class Forcing:
    """Finite trigonometric forcing sigma(t, y), 1-periodic in both arguments."""

    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def zero(cls) -> "Forcing":
        return cls(())

    @property
    def is_zero(self) -> bool:
        return all(t.amp == 0.0 for t in self.terms)

    @property
    def even_in_y(self) -> bool:
        return all(t.kind_x == "cos" or t.amp == 0.0 for t in self.terms)

    @property
    def odd_in_y(self) -> bool:
        return all(t.kind_x == "sin" or t.amp == 0.0 for t in self.terms)

    def __call__(self, t, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast_shapes(np.shape(t), y.shape))
        for term in self.terms:
            out = out + term.eval(t, y)
        return out

    def sup_norm(self) -> float:
        """sup |sigma| over the (t, y) torus: dense sampling, then
        alternating golden-section refinement in each coordinate."""
        if self.is_zero:
            return 0.0
        ts = np.linspace(0.0, 1.0, 256, endpoint=False)
        ys = np.linspace(0.0, 1.0, 256, endpoint=False)
        grid = np.abs(self(ts[:, None], ys[None, :]))
        it, iy = np.unravel_index(np.argmax(grid), grid.shape)
        t0, y0 = float(ts[it]), float(ys[iy])
        best = float(grid[it, iy])
        dh = 1.0 / 256.0
        for _ in range(3):
            res = minimize_scalar(
                lambda t: -abs(float(self(t, y0))),
                bracket=(t0 - dh, t0, t0 + dh), method="golden", options={"xtol": 1e-12},
            )
            t0 = float(res.x)
            res = minimize_scalar(
                lambda y: -abs(float(self(t0, y))),
                bracket=(y0 - dh, y0, y0 + dh), method="golden", options={"xtol": 1e-12},
            )
            y0 = float(res.x)
            best = max(best, abs(float(self(t0, y0))))
        return best


def sup_norms(W: PeriodicPotential | None, sigma: Forcing | None):
    """(sup |W'|, sup |sigma|); None means the term is absent."""
    w1 = W.sup_derivative(1) if W is not None else 0.0
    s0 = sigma.sup_norm() if sigma is not None else 0.0
    return w1, s0
