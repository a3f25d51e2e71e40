"""Time evolution for ``i hbar d/dt psi_k = h_J psi_k + V psi_k + H psi_k - F(psi_k)``.

Propagators follow ``psi(t) = exp(-i t H / hbar) psi(0)`` with hbar carried
explicitly. Two integrators are provided:

* ``strang``: mean-field half step, exact kinetic step, mean-field half step.
  The mean-field substep gives every orbital its own Hermitian operator
  (local potential plus exchange with the other orbitals), applied as an
  exact phase around a Cayley transform of the exchange part, so each
  orbital norm is preserved to solver precision.
* ``duhamel_picard``: fixed-point iteration on the integral (Duhamel) form
  over one step with trapezoidal quadrature. Used to cross-check ``strang``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from hosf.coefficients import OperatorSpec, PhysicalConstants, symbol_relativistic
from hosf.grid import Field, GridMismatchError, GridSpec, OrbitalSet, fftn, ifftn
from hosf.meanfield import MODELS, CoulombKernel, mean_field_action, pair_products

log = logging.getLogger(__name__)

METHODS = ("strang", "duhamel_picard")
UPDATES = ("frozen", "midpoint")


class NumericalError(RuntimeError):
    """Raised when a step produces non-finite data or fails to converge.

    ``last_good`` holds the orbital set before the failing step.
    """

    def __init__(self, message: str, last_good: OrbitalSet | None = None, time: float | None = None):
        super().__init__(message)
        self.last_good = last_good
        self.time = time


class PicardDivergenceError(NumericalError):
    pass


@dataclass
class IntegratorConfig:
    method: str = "strang"
    dt: float = 1e-2
    picard_tol: float = 1e-12
    picard_max_iter: int = 60
    nonlinear_update: str = "midpoint"
    solver_tol: float = 1e-15

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.nonlinear_update not in UPDATES:
            raise ValueError(f"unknown nonlinear_update {self.nonlinear_update!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if self.picard_tol < 1e-14:
            raise ValueError("picard_tol must be >= 1e-14")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be >= 1")


@dataclass
class EvolutionProblem:
    """Everything that defines the right-hand side of the equations."""

    op: OperatorSpec
    consts: PhysicalConstants
    potential: np.ndarray | None = None
    kernel: CoulombKernel | None = None
    model: str = "hartree_fock"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.potential is not None:
            self.potential = np.asarray(getattr(self.potential, "values", self.potential), dtype=float)
            if self.op.grid is not None and self.potential.shape != self.op.grid.shape:
                raise GridMismatchError("potential does not match the operator grid")
        if self.kernel is not None and self.op.grid is not None and self.kernel.grid != self.op.grid:
            raise GridMismatchError("kernel grid differs from operator grid")

    @property
    def grid(self) -> GridSpec:
        return self.op.grid

    @property
    def has_mean_field(self) -> bool:
        return self.kernel is not None and self.consts.kappa != 0

    def nonlinearity(self, psi: np.ndarray) -> np.ndarray:
        """``V psi_k + H psi_k - F(psi_k)`` for the stacked orbital array."""
        out = np.zeros_like(psi)
        if self.potential is not None:
            out += self.potential * psi
        if self.has_mean_field:
            out += mean_field_action(OrbitalSet(self.grid, psi), self.consts.kappa, self.kernel, self.model)
        return out


def _unwrap(psi):
    if isinstance(psi, (Field, OrbitalSet)):
        return psi.grid, psi.values
    return None, np.asarray(psi)


def _rewrap(like, grid, values):
    if isinstance(like, Field):
        return Field(grid, values)
    if isinstance(like, OrbitalSet):
        return OrbitalSet(grid, values)
    return values


def _spectral_multiply(psi, multiplier: np.ndarray, grid: GridSpec):
    g, values = _unwrap(psi)
    if g is not None and g != grid:
        raise GridMismatchError("field grid differs from the operator grid")
    if values.shape[-grid.dim:] != grid.shape:
        raise GridMismatchError("array does not match the operator grid")
    out = ifftn(multiplier * fftn(values, grid.dim), grid.dim)
    return _rewrap(psi, grid, out)


def free_propagate(psi, t: float, op: OperatorSpec, consts: PhysicalConstants):
    """Exact kinetic flow ``exp(-i t h_J(k) / hbar)`` applied mode by mode."""
    if op.grid is None:
        raise ValueError("operator has no grid attached")
    phase = np.exp(-1j * t / consts.hbar * op.propagation_symbol)
    return _spectral_multiply(psi, phase, op.grid)


def semirelativistic_propagate(psi, t: float, consts: PhysicalConstants,
                               subtract_rest_energy: bool = True):
    """Flow of ``sqrt(-c^2 hbar^2 Delta + m^2 c^4)``, diagonal in Fourier space."""
    grid, _ = _unwrap(psi)
    if grid is None:
        raise TypeError("semirelativistic_propagate needs a Field or OrbitalSet")
    energy = symbol_relativistic(consts.hbar * np.sqrt(grid.k2), consts)
    if subtract_rest_energy:
        energy = energy - consts.rest_energy
    return _spectral_multiply(psi, np.exp(-1j * t / consts.hbar * energy), grid)


def _cayley_exchange(phi: np.ndarray, others: np.ndarray, a: complex, problem: EvolutionProblem,
                     tol: float) -> np.ndarray:
    """Solve ``(I - a K) x = (I + a K) phi`` with ``K f = kappa sum_l (v*(conj o_l f)) o_l``."""
    kernel = problem.kernel
    kappa = problem.consts.kappa
    shape = phi.shape
    conj_others = others.conj()

    def apply_k(f: np.ndarray) -> np.ndarray:
        w = kernel.convolve(conj_others * f)
        return kappa * np.sum(w * others, axis=0)

    rhs = (phi + a * apply_k(phi)).ravel()

    def matvec(x):
        x = x.reshape(shape)
        return (x - a * apply_k(x)).ravel()

    op = LinearOperator((phi.size, phi.size), matvec=matvec, dtype=complex)
    x, info = gmres(op, rhs, x0=phi.ravel().copy(), rtol=tol, atol=0.0, restart=40, maxiter=50)
    if info != 0:
        raise NumericalError(f"exchange substep linear solve did not converge (info={info})")
    return x.reshape(shape)


def _mean_field_flow(psi: np.ndarray, tau: float, ref: np.ndarray, problem: EvolutionProblem,
                     tol: float) -> np.ndarray:
    """Apply ``exp(-i tau M_k / hbar)`` with operators frozen at ``ref``.

    ``M_k = V + kappa v*(rho - |ref_k|^2) - K_k`` where ``K_k`` is exchange
    with the orbitals ``l != k``; the local part is exact, the exchange part
    is a Cayley transform split symmetrically between two half phases.
    """
    hbar = problem.consts.hbar
    local = np.zeros(problem.grid.shape) if problem.potential is None else problem.potential
    if not problem.has_mean_field:
        return np.exp(-1j * tau / hbar * local) * psi
    kappa = problem.consts.kappa
    if problem.model == "hartree":
        rho = np.sum(np.abs(ref) ** 2, axis=0)
        u = local + kappa * problem.kernel.convolve(rho).real
        return np.exp(-1j * tau / hbar * u) * psi

    n = ref.shape[0]
    self_terms = problem.kernel.convolve(np.abs(ref) ** 2).real
    hart = self_terms.sum(axis=0)
    out = np.empty_like(psi)
    for k in range(n):
        u = local + kappa * (hart - self_terms[k])
        half = np.exp(-0.5j * tau / hbar * u)
        phi = half * psi[k]
        if n > 1:
            others = np.delete(ref, k, axis=0)
            phi = _cayley_exchange(phi, others, 0.5j * tau / hbar, problem, tol)
        out[k] = half * phi
    return out


def _mean_field_substep(psi: np.ndarray, tau: float, problem: EvolutionProblem,
                        cfg: IntegratorConfig) -> np.ndarray:
    ref = psi
    # the Hartree flow leaves rho unchanged, so freezing it is already exact
    exact_frozen = not problem.has_mean_field or problem.model == "hartree"
    if cfg.nonlinear_update == "midpoint" and not exact_frozen:
        ref = _mean_field_flow(psi, 0.5 * tau, psi, problem, cfg.solver_tol)
    return _mean_field_flow(psi, tau, ref, problem, cfg.solver_tol)


def _check_finite(values: np.ndarray, before: OrbitalSet, where: str):
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"non-finite values after {where}", last_good=before)


def strang_step(orbitals: OrbitalSet, dt: float, problem: EvolutionProblem,
                cfg: IntegratorConfig) -> OrbitalSet:
    """One second-order Strang step (mean field / kinetic / mean field)."""
    if orbitals.grid != problem.grid:
        raise GridMismatchError("orbitals and problem live on different grids")
    psi = _mean_field_substep(orbitals.values, 0.5 * dt, problem, cfg)
    psi = free_propagate(psi, dt, problem.op, problem.consts)
    psi = _mean_field_substep(psi, 0.5 * dt, problem, cfg)
    _check_finite(psi, orbitals, "strang step")
    return OrbitalSet(orbitals.grid, psi)


def duhamel_picard_step(orbitals: OrbitalSet, dt: float, problem: EvolutionProblem,
                        cfg: IntegratorConfig, history: list | None = None) -> OrbitalSet:
    """One step of Picard iteration on the Duhamel form.

    ``psi(dt) = U(dt) psi0 - (i dt / 2 hbar) [U(dt) N(psi0) + N(psi(dt))]``
    where ``N = V + H - F``. Iterates until successive iterates differ by
    less than ``picard_tol`` in the summed L2 norm. Increments are appended
    to ``history`` when given.
    """
    if orbitals.grid != problem.grid:
        raise GridMismatchError("orbitals and problem live on different grids")
    hbar = problem.consts.hbar
    dv = problem.grid.cell_volume
    psi0 = orbitals.values
    n0 = problem.nonlinearity(psi0)
    u_psi0 = free_propagate(psi0, dt, problem.op, problem.consts)
    u_n0 = free_propagate(n0, dt, problem.op, problem.consts)
    base = u_psi0 - 0.5j * dt / hbar * u_n0
    x = u_psi0 - 1j * dt / hbar * u_n0
    for it in range(cfg.picard_max_iter):
        x_new = base - 0.5j * dt / hbar * problem.nonlinearity(x)
        diff = math.sqrt(float(np.sum(np.abs(x_new - x) ** 2)) * dv)
        if history is not None:
            history.append(diff)
        if not math.isfinite(diff):
            raise NumericalError("non-finite Picard iterate", last_good=orbitals)
        x = x_new
        if diff < cfg.picard_tol:
            return OrbitalSet(orbitals.grid, x)
    raise PicardDivergenceError(
        f"Picard iteration did not converge in {cfg.picard_max_iter} iterations "
        f"(last increment {diff:.3e}); reduce dt",
        last_good=orbitals,
    )


def step(orbitals: OrbitalSet, dt: float, problem: EvolutionProblem, cfg: IntegratorConfig) -> OrbitalSet:
    if cfg.method == "strang":
        return strang_step(orbitals, dt, problem, cfg)
    return duhamel_picard_step(orbitals, dt, problem, cfg)


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    final: OrbitalSet | None = None
    dt: float = 0.0
    steps: int = 0


def step_count(horizon: float, dt: float) -> tuple[int, float]:
    """Number of steps reaching ``horizon`` and the step actually used."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    n = max(1, int(round(horizon / dt)))
    return n, horizon / n


def run_simulation(
    initial: OrbitalSet,
    horizon: float,
    cfg: IntegratorConfig,
    problem: EvolutionProblem,
    diagnostics_every: int = 1,
    snapshot_every: int | None = None,
    on_snapshot: Callable[[int, float, OrbitalSet], None] | None = None,
    with_energy: bool = True,
) -> Trajectory:
    """Step to ``horizon`` emitting a diagnostics record every
    ``diagnostics_every`` steps (and at both ends)."""
    from hosf.diagnostics import make_record

    n_steps, dt = step_count(horizon, cfg.dt)
    if abs(dt - cfg.dt) > 1e-12 * cfg.dt:
        log.info("dt adjusted from %g to %g to land on the horizon", cfg.dt, dt)
    traj = Trajectory(dt=dt, steps=n_steps)
    state = initial.copy()

    def record(i: int):
        traj.records.append(make_record(i * dt, state, problem, with_energy=with_energy))

    record(0)
    if on_snapshot is not None and snapshot_every:
        on_snapshot(0, 0.0, state)
    for i in range(1, n_steps + 1):
        try:
            state = step(state, dt, problem, cfg)
        except NumericalError as exc:
            exc.time = (i - 1) * dt
            if exc.last_good is None:
                exc.last_good = state
            raise
        if diagnostics_every and (i % diagnostics_every == 0 or i == n_steps):
            record(i)
        if on_snapshot is not None and snapshot_every and (i % snapshot_every == 0 or i == n_steps):
            on_snapshot(i, i * dt, state)
    traj.final = state
    return traj
