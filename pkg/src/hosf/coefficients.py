"""Expansion coefficients and kinetic Fourier symbols.

The kinetic energy of order ``J`` is the truncated Taylor expansion of the
relativistic dispersion relation

    E_J(p) = m c^2 (1 + sum_{j=1}^{J} (-1)^{j+1} alpha(j) (p / m c)^{2j})

with ``alpha(j) = (2j-2)! / (j! (j-1)! 2^{2j-1})`` and ``alpha(0) = -1``.
Under ``p -> -i hbar grad`` the Laplacian power ``Delta^j`` becomes
``(-|k|^2)^j`` so ``E_J(hbar |k|)`` is the Fourier symbol of the operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from hosf.grid import GridSpec

MAX_EXACT_J = 30


@dataclass(frozen=True)
class PhysicalConstants:
    """Unit system for a run. Natural units (all ones) by default."""

    hbar: float = 1.0
    mass: float = 1.0
    c: float = 1.0
    kappa: float = 0.0
    alpha_coulomb: float = 0.0

    def __post_init__(self):
        for name in ("hbar", "mass", "c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        for name in ("kappa", "alpha_coulomb"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")

    @property
    def rest_energy(self) -> float:
        return self.mass * self.c**2

    @property
    def compton_momentum(self) -> float:
        """``m c``, the momentum scale of the expansion."""
        return self.mass * self.c


@lru_cache(maxsize=None)
def alpha_coeff(j: int) -> Fraction:
    """Exact expansion coefficient ``alpha(j)``.

    >>> alpha_coeff(0), alpha_coeff(1), alpha_coeff(2), alpha_coeff(3)
    (Fraction(-1, 1), Fraction(1, 2), Fraction(1, 8), Fraction(1, 16))
    """
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)):
        raise TypeError(f"j must be an integer, got {type(j).__name__}")
    j = int(j)
    if j < 0:
        raise ValueError(f"j must be >= 0, got {j}")
    if j == 0:
        return Fraction(-1)
    num = math.factorial(2 * j - 2)
    den = math.factorial(j) * math.factorial(j - 1) * 2 ** (2 * j - 1)
    return Fraction(num, den)


def _check_order(J: int) -> int:
    if isinstance(J, bool) or not isinstance(J, (int, np.integer)) or J < 1:
        raise ValueError(f"order J must be an integer >= 1, got {J!r}")
    return int(J)


def symbol_polynomial(J: int, p, consts: PhysicalConstants):
    """Truncated energy ``E_J(p)``; ``p`` may be a scalar or an array.

    Evaluated by Horner's rule in ``u^2 = (p / mc)^2`` with coefficients
    converted from exact rationals once.
    """
    J = _check_order(J)
    u2 = (np.asarray(p, dtype=float) / consts.compton_momentum) ** 2
    acc = np.zeros_like(u2)
    for j in range(J, 0, -1):
        coeff = float(alpha_coeff(j)) * (1.0 if j % 2 == 1 else -1.0)
        acc = (acc + coeff) * u2
    out = consts.rest_energy * (1.0 + acc)
    return out if out.ndim else float(out)


def symbol_relativistic(p, consts: PhysicalConstants):
    """Exact dispersion ``sqrt(p^2 c^2 + m^2 c^4)``.

    Written as ``mc^2 sqrt(1 + u^2)`` so small momenta keep full relative
    precision.
    """
    u = np.asarray(p, dtype=float) / consts.compton_momentum
    out = consts.rest_energy * np.hypot(1.0, u)
    return out if out.ndim else float(out)


def validity_speed_check(v: float, c: float = 1.0) -> bool:
    """True iff ``v < c / sqrt(2)``, the convergence region of the expansion."""
    if v < 0:
        raise ValueError("speed must be >= 0")
    # compared in the same float form callers use to pass the boundary speed
    return v < c / math.sqrt(2.0)


def admissible_pair_q(r: float, J: int) -> float:
    """Time exponent ``q`` of the admissible pair ``(q, r)``.

    Solves ``2/q = n (1/2 - 1/r)`` with effective dimension ``n = 3/J``.
    Returns ``math.inf`` for ``r = 2``.
    """
    if isinstance(J, bool) or int(J) != J or J < 2:
        raise ValueError(f"J must be an integer >= 2, got {J!r}")
    if math.isnan(r) or r < 2:
        raise ValueError(f"r must lie in [2, inf], got {r!r}")
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    rhs = (3.0 / J) * (0.5 - inv_r)
    if rhs == 0.0:
        return math.inf
    return 2.0 / rhs


@dataclass
class OperatorSpec:
    """Kinetic operator of order ``J`` sampled on a grid.

    ``symbol`` always includes the rest energy ``mc^2`` (zero for the
    monomial test symbol). ``propagation_symbol`` is what the propagators
    exponentiate; with ``subtract_rest_energy`` the constant global phase
    is removed.
    """

    J: int
    symbol: np.ndarray
    rest_energy: float
    kind: str = "polynomial"
    subtract_rest_energy: bool = True
    grid: "GridSpec | None" = field(default=None, repr=False)

    @property
    def propagation_symbol(self) -> np.ndarray:
        if self.subtract_rest_energy:
            return self.symbol - self.rest_energy
        return self.symbol

    def max_abs_symbol(self) -> float:
        return float(np.max(np.abs(self.propagation_symbol)))

    def suggested_dt(self, hbar: float) -> float:
        """Advisory step ``0.5 hbar / max|h_J|``; every substep is unitary anyway."""
        peak = self.max_abs_symbol()
        return math.inf if peak == 0 else 0.5 * hbar / peak


def make_operator(
    grid: "GridSpec",
    J: int,
    consts: PhysicalConstants,
    kind: str = "polynomial",
    subtract_rest_energy: bool = True,
    monomial_scale: float = 1.0,
) -> OperatorSpec:
    """Precompute the kinetic symbol on ``grid``.

    ``kind`` is one of ``polynomial`` (the order-J expansion),
    ``relativistic`` (exact square root, ``J`` kept only as a label) or
    ``monomial`` (``monomial_scale * |k|^{2J}``, a dispersion test instrument
    with no rest energy).
    """
    J = _check_order(J)
    p = consts.hbar * np.sqrt(grid.k2)
    if kind == "polynomial":
        symbol = symbol_polynomial(J, p, consts)
        rest = consts.rest_energy
    elif kind == "relativistic":
        symbol = symbol_relativistic(p, consts)
        rest = consts.rest_energy
    elif kind == "monomial":
        symbol = monomial_scale * grid.k2**J
        rest = 0.0
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    return OperatorSpec(
        J=J,
        symbol=np.asarray(symbol, dtype=float),
        rest_energy=rest,
        kind=kind,
        subtract_rest_energy=subtract_rest_energy,
        grid=grid,
    )


def coefficient_table(jmax: int) -> list[tuple[int, int, int, float]]:
    """Rows ``(j, numerator, denominator, float)`` for ``0 <= j <= jmax``."""
    if jmax < 0:
        raise ValueError("jmax must be >= 0")
    if jmax > MAX_EXACT_J:
        raise ValueError(f"jmax must be <= {MAX_EXACT_J}")
    rows = []
    for j in range(jmax + 1):
        a = alpha_coeff(j)
        rows.append((j, a.numerator, a.denominator, float(a)))
    return rows
