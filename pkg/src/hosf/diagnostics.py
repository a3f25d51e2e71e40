"""Conserved quantities, drift tables, dispersive decay fits and the
truncation-error report for the expanded dispersion relation."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import mpmath
import numpy as np

from hosf.coefficients import (
    OperatorSpec,
    PhysicalConstants,
    alpha_coeff,
    make_operator,
)
from hosf.grid import GridSpec, OrbitalSet, boundary_mass_fraction, fftn
from hosf.meanfield import CoulombKernel, density_matrix_diagonal, pair_products

WRAP_THRESHOLD = 1e-6
DRIFT_FLOOR = 1e-14


class WrapAroundError(ValueError):
    """Decay samples were contaminated by mass reaching the box edge."""


@dataclass
class EnergyComponents:
    kinetic: float = 0.0
    external: float = 0.0
    direct: float = 0.0
    exchange: float = 0.0
    total: float = 0.0


@dataclass
class DiagnosticsRecord:
    time: float
    norms: np.ndarray
    overlaps: np.ndarray
    energy: EnergyComponents = field(default_factory=EnergyComponents)
    sup_norm: float = 0.0


def kinetic_energy(orbitals: OrbitalSet, op: OperatorSpec, include_rest_energy: bool = True) -> float:
    """``sum_k <psi_k, h_J psi_k>`` evaluated mode by mode."""
    hat = fftn(orbitals.values, orbitals.grid.dim)
    symbol = op.symbol if include_rest_energy else op.symbol - op.rest_energy
    return float(np.sum(symbol * np.abs(hat) ** 2) * orbitals.grid.cell_volume)


def pair_energies(orbitals: OrbitalSet, kernel: CoulombKernel) -> tuple[float, float]:
    """``(<rho, v*rho>, sum_{l,k} <g_lk, v*g_lk>)``, without the kappa/2 factor."""
    dv = orbitals.grid.cell_volume
    rho = density_matrix_diagonal(orbitals).values
    direct = float(np.vdot(rho, kernel.convolve(rho)).real * dv)
    g = pair_products(orbitals)
    exchange = float(np.vdot(g, kernel.convolve(g)).real * dv)
    return direct, exchange


def total_energy(
    orbitals: OrbitalSet,
    op: OperatorSpec,
    potential: np.ndarray | None,
    kappa: float,
    kernel: CoulombKernel | None,
    model: str = "hartree_fock",
) -> EnergyComponents:
    """Energy functional split into its parts.

    ``exchange`` is reported as the positive quantity
    ``kappa/2 sum <g_lk, v*g_lk>``; it enters ``total`` with a minus sign
    for the Hartree-Fock model and not at all for the Hartree model.
    """
    kin = kinetic_energy(orbitals, op)
    ext = 0.0
    if potential is not None:
        rho = density_matrix_diagonal(orbitals).values
        ext = float(np.sum(np.asarray(potential) * rho) * orbitals.grid.cell_volume)
    direct = exchange = 0.0
    if kernel is not None and kappa != 0:
        d, x = pair_energies(orbitals, kernel)
        direct, exchange = 0.5 * kappa * d, 0.5 * kappa * x
    total = kin + ext + direct - (exchange if model == "hartree_fock" else 0.0)
    return EnergyComponents(kin, ext, direct, exchange, total)


def make_record(time: float, orbitals: OrbitalSet, problem, with_energy: bool = True) -> DiagnosticsRecord:
    energy = EnergyComponents()
    if with_energy:
        energy = total_energy(
            orbitals, problem.op, problem.potential, problem.consts.kappa, problem.kernel, problem.model
        )
    sup = float(np.max(np.sum(np.abs(orbitals.values), axis=0)))
    return DiagnosticsRecord(time, orbitals.norms(), orbitals.gram(), energy, sup)


def csv_header(n_orbitals: int) -> list[str]:
    cols = ["time"] + [f"norm_{k}" for k in range(n_orbitals)]
    for l in range(n_orbitals):
        for k in range(n_orbitals):
            cols += [f"overlap_{l}_{k}_re", f"overlap_{l}_{k}_im"]
    cols += ["kinetic", "external", "direct", "exchange", "total", "sup_norm"]
    return cols


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def record_row(rec: DiagnosticsRecord) -> list[str]:
    row = [_fmt(rec.time)] + [_fmt(v) for v in rec.norms]
    for z in rec.overlaps.ravel():
        row += [_fmt(z.real), _fmt(z.imag)]
    e = rec.energy
    row += [_fmt(v) for v in (e.kinetic, e.external, e.direct, e.exchange, e.total, rec.sup_norm)]
    return row


def write_records_csv(records: Sequence[DiagnosticsRecord], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(csv_header(len(records[0].norms) if records else 0))
    for rec in records:
        writer.writerow(record_row(rec))


def _drift(series: np.ndarray) -> float:
    ref = abs(series[0])
    dev = float(np.max(np.abs(series - series[0])))
    return dev / ref if ref >= DRIFT_FLOOR else dev


@dataclass
class DriftReport:
    norm_drift: np.ndarray
    overlap_drift: np.ndarray
    energy_drift: float

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(self.norm_drift))

    @property
    def max_overlap_drift(self) -> float:
        return float(np.max(self.overlap_drift))


def conservation_report(trajectory) -> DriftReport:
    """Maximum drift over the trajectory, relative to the first record
    (absolute when the starting magnitude is below 1e-14)."""
    records = getattr(trajectory, "records", trajectory)
    if len(records) < 2:
        raise ValueError("need at least two records")
    norms = np.array([r.norms for r in records])
    overlaps = np.array([r.overlaps for r in records])
    energy = np.array([r.energy.total for r in records])
    n = norms.shape[1]
    norm_drift = np.array([_drift(norms[:, k]) for k in range(n)])
    ovl = np.array([[_drift(overlaps[:, l, k]) for k in range(n)] for l in range(n)])
    return DriftReport(norm_drift, ovl, _drift(energy))


def decay_exponent_fit(
    samples: Sequence[tuple[float, float]],
    boundary_mass: Sequence[float] | None = None,
) -> tuple[float, float]:
    """Least-squares slope of ``log sup-norm`` against ``log t``.

    Returns ``(exponent, rms residual)``. Refuses to fit when any sample
    carries boundary mass of at least 1e-6.
    """
    if len(samples) < 5:
        raise ValueError("need at least 5 samples")
    t = np.array([s[0] for s in samples], dtype=float)
    y = np.array([s[1] for s in samples], dtype=float)
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be positive and strictly increasing")
    if np.any(y <= 0):
        raise ValueError("sup norms must be positive")
    if boundary_mass is not None:
        worst = float(np.max(boundary_mass))
        if worst >= WRAP_THRESHOLD:
            raise WrapAroundError(f"boundary mass {worst:.2e} >= {WRAP_THRESHOLD:g}; fit refused")
    lt, ly = np.log(t), np.log(y)
    design = np.vstack([lt, np.ones_like(lt)]).T
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - design @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


@dataclass
class DecayRun:
    J: int
    dimension: int
    times: np.ndarray
    sup_norms: np.ndarray
    boundary_mass: np.ndarray
    exponent: float
    residual: float

    @property
    def expected(self) -> float:
        return -self.dimension / (2 * self.J)


# Default decay setups keyed by (J, dimension), lengths in units of the
# packet width. The kernel sup-norm follows t^{-d/2J} once t >> width^{2J};
# boxes are sized so the fast spectral tail never reaches the edge.
_DECAY_DEFAULTS = {
    (1, 1): dict(n=16384, length=4096.0, width=1.0, t_min=20.0, t_max=200.0),
    (2, 1): dict(n=2**20, length=2.0**18, width=1.0, t_min=100.0, t_max=1000.0),
    (1, 2): dict(n=1024, length=640.0, width=1.0, t_min=4.0, t_max=40.0),
}


def decay_experiment(
    J: int,
    dimension: int = 1,
    n: int | None = None,
    length: float | None = None,
    width: float | None = None,
    t_min: float | None = None,
    t_max: float | None = None,
    samples: int = 12,
) -> DecayRun:
    """Measure the sup-norm decay of a narrow Gaussian under the monomial
    symbol ``|k|^{2J}`` and fit the exponent."""
    from hosf.propagation import free_propagate

    if (J, dimension) not in _DECAY_DEFAULTS:
        raise ValueError(
            f"no desk-scale decay setup for J={J}, dimension={dimension}; "
            f"available: {sorted(_DECAY_DEFAULTS)}"
        )
    d = _DECAY_DEFAULTS[(J, dimension)]
    n = n or d["n"]
    length = length or d["length"]
    width = width or d["width"]
    t_min = t_min or d["t_min"]
    t_max = t_max or d["t_max"]

    grid = GridSpec.cube(dimension, n, length)
    consts = PhysicalConstants()
    op = make_operator(grid, J, consts, kind="monomial")
    psi0 = np.exp(-grid.r**2 / (4 * width**2)).astype(complex)
    psi0 /= math.sqrt(float(np.sum(np.abs(psi0) ** 2)) * grid.cell_volume)
    times = np.geomspace(t_min, t_max, samples)
    sups, masses = [], []
    for t in times:
        psi = free_propagate(psi0, float(t), op, consts)
        sups.append(float(np.max(np.abs(psi))))
        masses.append(boundary_mass_fraction(psi, grid))
    exponent, resid = decay_exponent_fit(list(zip(times, sups)), masses)
    return DecayRun(J, dimension, times, np.array(sups), np.array(masses), exponent, resid)


def ej_truncation_report(
    J_max: int,
    speeds: Iterable[float],
    consts: PhysicalConstants | None = None,
    digits: int = 50,
) -> list[dict]:
    """Relative error ``|E_J(p) - E(p)| / E(p)`` at ``p = gamma m v``.

    Evaluated in ``digits``-digit arithmetic so errors far below double
    precision stay visible.
    """
    consts = consts or PhysicalConstants()
    if J_max < 1:
        raise ValueError("J_max must be >= 1")
    rows = []
    with mpmath.workdps(digits):
        c = mpmath.mpf(consts.c)
        m = mpmath.mpf(consts.mass)
        for v in speeds:
            if v < 0 or v >= consts.c:
                raise ValueError(f"speed {v} must lie in [0, c)")
            beta = mpmath.mpf(v) / c
            gamma = 1 / mpmath.sqrt(1 - beta**2)
            u = gamma * beta  # p / (m c)
            exact = mpmath.sqrt(1 + u**2)
            partial = mpmath.mpf(1)
            for J in range(1, J_max + 1):
                a = alpha_coeff(J)
                sign = 1 if J % 2 == 1 else -1
                partial += sign * mpmath.mpf(a.numerator) / a.denominator * u ** (2 * J)
                rel = abs(partial - exact) / exact
                rows.append(
                    dict(J=J, speed=float(v), momentum=float(gamma * m * mpmath.mpf(v)),
                         rel_error=float(rel))
                )
    return rows


def truncation_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["J", "speed", "momentum", "rel_error"])
    for r in rows:
        writer.writerow([r["J"], _fmt(r["speed"]), _fmt(r["momentum"]), _fmt(r["rel_error"])])
    return buf.getvalue()
