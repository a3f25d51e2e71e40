"""Coulomb convolution and the Hartree-Fock nonlinear terms.

All convolutions are periodic and evaluated spectrally:
``(v * f)(x) = sum_k vhat(k) c_k(f) e^{ikx}`` where ``vhat`` is the
continuous Fourier transform of the kernel and ``c_k`` the Fourier-series
coefficients of ``f``.

Orbital convention: the Hartree potential ``H = kappa v * rho`` sums over
every orbital, ``fock_apply`` excludes ``l = k``. In the equations of
motion the self-interaction is removed from both (see
:func:`mean_field_action`), which is the same as keeping ``l = k`` in both.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hosf.grid import Field, GridMismatchError, GridSpec, OrbitalSet, fftn, ifftn

ZERO_MODE_POLICIES = ("zero", "truncated")
MODELS = ("hartree", "hartree_fock")


@dataclass(frozen=True)
class CoulombKernel:
    """Fourier multiplier of the interaction kernel on a grid.

    In 3D this is ``4 pi / |k|^2`` with the k=0 mode set by ``policy``
    (``zero``, or ``truncated`` which cuts ``1/|x|`` at ``cutoff_radius``).
    In 1D and 2D the screened surrogate ``1 / (|k|^2 + mu^2)`` is used
    instead; it is a test kernel, not Coulomb.
    """

    grid: GridSpec
    multiplier: np.ndarray = field(repr=False)
    policy: str = "zero"
    cutoff_radius: float | None = None
    screening: float | None = None

    def convolve(self, values: np.ndarray) -> np.ndarray:
        """Convolve arrays whose trailing axes are the grid shape."""
        if values.shape[-self.grid.dim:] != self.grid.shape:
            raise GridMismatchError("array does not live on the kernel's grid")
        dim = self.grid.dim
        return ifftn(self.multiplier * fftn(values, dim), dim)


def coulomb_kernel(
    grid: GridSpec,
    policy: str = "zero",
    cutoff_radius: float | None = None,
    screening: float = 1.0,
) -> CoulombKernel:
    if grid.dim == 3:
        if policy not in ZERO_MODE_POLICIES:
            raise ValueError(f"unknown zero-mode policy {policy!r}")
        k2 = grid.k2
        safe = np.where(k2 == 0, 1.0, k2)
        if policy == "zero":
            mult = np.where(k2 == 0, 0.0, 4 * np.pi / safe)
        else:
            if cutoff_radius is None or cutoff_radius <= 0:
                raise ValueError("truncated policy needs cutoff_radius > 0")
            kr = np.sqrt(k2) * cutoff_radius
            mult = np.where(
                k2 == 0,
                2 * np.pi * cutoff_radius**2,
                4 * np.pi * (1 - np.cos(kr)) / safe,
            )
        return CoulombKernel(grid, mult, policy, cutoff_radius, None)
    if screening is None or screening <= 0:
        raise ValueError("the low-dimensional surrogate kernel needs screening > 0")
    mult = 1.0 / (grid.k2 + screening**2)
    return CoulombKernel(grid, mult, "screened", None, screening)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, (Field, OrbitalSet)) else np.asarray(f)


def _check_grid(kernel: CoulombKernel, *fields):
    for f in fields:
        if isinstance(f, (Field, OrbitalSet)) and f.grid != kernel.grid:
            raise GridMismatchError(f"field grid {f.grid} differs from kernel grid {kernel.grid}")


def coulomb_convolve(f: Field, kernel: CoulombKernel) -> Field:
    """``(1/|x|) * f`` (or the surrogate kernel in 1D/2D)."""
    _check_grid(kernel, f)
    out = kernel.convolve(_values(f))
    if np.isrealobj(_values(f)):
        out = out.real
    return Field(kernel.grid, out)


def trilinear_T(phi1: Field, phi2: Field, phi3: Field, kernel: CoulombKernel) -> Field:
    """``((1/|x|) * (phi1 phi2)) phi3``."""
    _check_grid(kernel, phi1, phi2, phi3)
    prod = _values(phi1) * _values(phi2)
    return Field(kernel.grid, kernel.convolve(prod) * _values(phi3))


def density_matrix_diagonal(orbitals: OrbitalSet) -> Field:
    """``rho(x) = sum_k |psi_k(x)|^2``."""
    return Field(orbitals.grid, np.sum(np.abs(orbitals.values) ** 2, axis=0))


def pair_products(orbitals: OrbitalSet) -> np.ndarray:
    """``g[l, k] = conj(psi_l) psi_k`` with shape ``(N, N, *grid)``."""
    v = orbitals.values
    return v.conj()[:, None] * v[None, :]


def hartree_potential(orbitals: OrbitalSet, kappa: float, kernel: CoulombKernel) -> Field:
    """``H = kappa (1/|x|) * rho``, shared by every orbital."""
    _check_grid(kernel, orbitals)
    rho = density_matrix_diagonal(orbitals).values
    return Field(kernel.grid, kappa * kernel.convolve(rho).real)


def fock_apply(
    k: int,
    orbitals: OrbitalSet,
    kappa: float,
    kernel: CoulombKernel,
    include_self: bool = False,
) -> Field:
    """Exchange term ``sum_{l != k} kappa ((1/|x|) * (conj(psi_l) psi_k)) psi_l``.

    ``include_self=True`` keeps the ``l = k`` term (full-sum form).
    """
    _check_grid(kernel, orbitals)
    n = len(orbitals)
    if not 0 <= k < n:
        raise IndexError(f"orbital index {k} out of range for {n} orbitals")
    others = [l for l in range(n) if include_self or l != k]
    v = orbitals.values
    if not others:
        return Field(kernel.grid, np.zeros(kernel.grid.shape, dtype=complex))
    g = v[others].conj() * v[k]
    w = kernel.convolve(g)
    return Field(kernel.grid, kappa * np.sum(w * v[others], axis=0))


def mean_field_action(
    orbitals: OrbitalSet,
    kappa: float,
    kernel: CoulombKernel,
    model: str = "hartree_fock",
) -> np.ndarray:
    """Nonlinear right-hand side ``H psi_k - F(psi_k)`` for every orbital.

    For ``hartree_fock`` the self-interaction is excluded from both the
    Hartree and the exchange sums; for ``hartree`` there is no exchange and
    the Hartree sum runs over every orbital.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    _check_grid(kernel, orbitals)
    v = orbitals.values
    if kappa == 0:
        return np.zeros_like(v)
    if model == "hartree":
        return hartree_potential(orbitals, kappa, kernel).values * v
    # sum over all (l, k) pairs; the l = k terms cancel between H and F
    w = kernel.convolve(pair_products(orbitals))
    hart = np.einsum("ll...->...", w).real
    exch = np.einsum("lk...,l...->k...", w, v)
    return kappa * (hart * v - exch)


def total_mean_field_pairing(orbitals: OrbitalSet, kappa: float, kernel: CoulombKernel,
                             model: str = "hartree_fock") -> complex:
    """``sum_k <psi_k, H psi_k - F(psi_k)>``; real for Hermitian mean fields."""
    act = mean_field_action(orbitals, kappa, kernel, model)
    return complex(np.vdot(orbitals.values, act) * orbitals.grid.cell_volume)
