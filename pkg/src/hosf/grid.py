"""Periodic grids, unitary transforms, quadrature and the snapshot format."""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np
import scipy.fft

SNAPSHOT_MAGIC = b"HOSF"
SNAPSHOT_VERSION = 1


class GridMismatchError(ValueError):
    pass


def fft_workers() -> int:
    """Worker count for transforms, capped by ``HOSF_THREADS`` when set."""
    raw = os.environ.get("HOSF_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``n`` points per axis.

    Physical coordinates run over the centered fundamental domain
    ``[-L/2, L/2)`` on each axis. Frequencies use FFT ordering.
    """

    dim: int
    n: int
    box_length: tuple[float, ...]

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim!r}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two >= 8, got {self.n!r}")
        lengths = self.box_length
        if np.isscalar(lengths):
            lengths = (float(lengths),) * self.dim
        lengths = tuple(float(v) for v in lengths)
        if len(lengths) != self.dim:
            raise ValueError("box_length needs one entry per axis")
        if any(not np.isfinite(v) or v <= 0 for v in lengths):
            raise ValueError("box lengths must be positive")
        object.__setattr__(self, "box_length", lengths)

    @classmethod
    def cube(cls, dim: int, n: int, length: float) -> "GridSpec":
        return cls(dim, n, (float(length),) * dim)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / self.n for L in self.box_length)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.box_length))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(-L / 2 + np.arange(self.n) * (L / self.n) for L in self.box_length)

    @cached_property
    def k_axes(self) -> tuple[np.ndarray, ...]:
        return tuple(2 * np.pi * np.fft.fftfreq(self.n, d=L / self.n) for L in self.box_length)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def kvec(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.k_axes, indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(k**2 for k in self.kvec)

    @cached_property
    def r(self) -> np.ndarray:
        """Distance from the box center (the origin)."""
        return np.sqrt(sum(x**2 for x in self.coords))

    def min_image(self, center: Sequence[float] | None = None) -> tuple[np.ndarray, ...]:
        """Displacements ``x - center`` wrapped onto ``[-L/2, L/2)``."""
        center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        if center.shape != (self.dim,):
            raise ValueError("center needs one coordinate per axis")
        out = []
        for x, c, L in zip(self.coords, center, self.box_length):
            out.append((x - c + L / 2) % L - L / 2)
        return tuple(out)

    def distance(self, center: Sequence[float] | None = None) -> np.ndarray:
        return np.sqrt(sum(d**2 for d in self.min_image(center)))

    def top_octave_mask(self) -> np.ndarray:
        """Modes with ``|k_i|`` above half the Nyquist frequency on any axis."""
        mask = np.zeros(self.shape, dtype=bool)
        for k, L in zip(self.kvec, self.box_length):
            kmax = np.pi * self.n / L
            mask |= np.abs(k) > 0.5 * kmax
        return mask

    def boundary_mask(self, fraction: float = 0.125) -> np.ndarray:
        """Nodes within ``fraction * L`` of the box edge on any axis."""
        mask = np.zeros(self.shape, dtype=bool)
        for x, L in zip(self.coords, self.box_length):
            mask |= np.abs(x) >= (0.5 - fraction) * L
        return mask


def _same_grid(a: GridSpec, b: GridSpec):
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


@dataclass
class Field:
    """Complex (or real) samples of a function on a grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise GridMismatchError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def to_spectral(self) -> "SpectralField":
        return to_spectral(self)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


@dataclass
class SpectralField:
    """Unitary DFT coefficients of a field, FFT ordering."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise GridMismatchError(
                f"spectral shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def to_physical(self) -> Field:
        return to_physical(self)


def fftn(a: np.ndarray, dim: int) -> np.ndarray:
    """Unitary forward transform over the trailing ``dim`` axes."""
    axes = tuple(range(-dim, 0))
    return scipy.fft.fftn(a, axes=axes, norm="ortho", workers=fft_workers())


def ifftn(a: np.ndarray, dim: int) -> np.ndarray:
    axes = tuple(range(-dim, 0))
    return scipy.fft.ifftn(a, axes=axes, norm="ortho", workers=fft_workers())


def to_spectral(f: Field) -> SpectralField:
    return SpectralField(f.grid, fftn(f.values, f.grid.dim))


def to_physical(g: SpectralField) -> Field:
    return Field(g.grid, ifftn(g.values, g.grid.dim))


def inner_product(f: Field | SpectralField, g: Field | SpectralField) -> complex:
    """``<f, g> = integral conj(f) g``, conjugate-linear in ``f``.

    Works on either side of the transform; the unitary normalization makes
    both sums agree with the same cell-volume weight.
    """
    if type(f) is not type(g):
        raise TypeError("inner_product needs two fields of the same kind")
    _same_grid(f.grid, g.grid)
    return complex(np.vdot(f.values, g.values) * f.grid.cell_volume)


def l2_norm(f: Field | SpectralField) -> float:
    return float(np.sqrt(max(inner_product(f, f).real, 0.0)))


class OrbitalSet:
    """``N`` orbitals on a shared grid, stored as one ``(N, *shape)`` array."""

    def __init__(self, grid: GridSpec, values: np.ndarray):
        values = np.asarray(values, dtype=complex)
        if values.ndim == grid.dim:
            values = values[None]
        if values.shape[1:] != grid.shape or values.shape[0] < 1:
            raise GridMismatchError(
                f"orbital array {values.shape} incompatible with grid {grid.shape}"
            )
        self.grid = grid
        self.values = values

    @classmethod
    def from_fields(cls, fields: Iterable[Field]) -> "OrbitalSet":
        fields = list(fields)
        if not fields:
            raise ValueError("an orbital set needs at least one field")
        grid = fields[0].grid
        for f in fields[1:]:
            _same_grid(grid, f.grid)
        return cls(grid, np.stack([f.values for f in fields]))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def copy(self) -> "OrbitalSet":
        return OrbitalSet(self.grid, self.values.copy())

    def norms(self) -> np.ndarray:
        axes = tuple(range(1, self.grid.dim + 1))
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=axes) * self.grid.cell_volume)

    def gram(self) -> np.ndarray:
        """Overlap matrix ``G[l, k] = <psi_l, psi_k>``."""
        flat = self.values.reshape(len(self), -1)
        return flat.conj() @ flat.T * self.grid.cell_volume


def gram_schmidt(orbitals: OrbitalSet) -> OrbitalSet:
    """Orthonormalize in order (modified Gram-Schmidt, two passes)."""
    dv = orbitals.grid.cell_volume
    vecs = [v.copy() for v in orbitals.values]
    out = []
    for v in vecs:
        for _ in range(2):
            for q in out:
                v = v - np.vdot(q, v) * dv * q
        nrm = np.sqrt(np.vdot(v, v).real * dv)
        if nrm < 1e-12:
            raise ValueError("orbitals are linearly dependent")
        out.append(v / nrm)
    return OrbitalSet(orbitals.grid, np.stack(out))


def spectral_top_octave_fraction(values: np.ndarray, grid: GridSpec) -> float:
    """Fraction of spectral mass in the top octave (aliasing indicator)."""
    hat = np.abs(fftn(values, grid.dim)) ** 2
    total = float(hat.sum())
    if total == 0:
        return 0.0
    mask = grid.top_octave_mask()
    return float(hat[..., mask].sum() / total)


def boundary_mass_fraction(values: np.ndarray, grid: GridSpec, fraction: float = 0.125) -> float:
    dens = np.abs(values) ** 2
    total = float(dens.sum())
    if total == 0:
        return 0.0
    return float(dens[..., grid.boundary_mask(fraction)].sum() / total)


# Snapshot stream: one record per field, each record is
#   b"HOSF" | u32 version | u32 dim | u32 n | f64 * dim box lengths | complex data
# all little-endian, data as (re, im) f64 pairs in row-major order.

def write_snapshot_records(fh: BinaryIO, fields: Iterable[Field] | OrbitalSet) -> None:
    """Append snapshot records to an open binary stream."""
    for f in fields:
        g = f.grid
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<III", SNAPSHOT_VERSION, g.dim, g.n))
        fh.write(struct.pack(f"<{g.dim}d", *g.box_length))
        data = np.ascontiguousarray(f.values, dtype="<c16")
        fh.write(data.tobytes(order="C"))


def write_snapshot(path: str | Path, fields: Iterable[Field] | OrbitalSet) -> None:
    with open(path, "wb") as fh:
        write_snapshot_records(fh, fields)


def read_snapshot(path: str | Path) -> list[Field]:
    raw = Path(path).read_bytes()
    pos = 0
    fields = []
    while pos < len(raw):
        if raw[pos:pos + 4] != SNAPSHOT_MAGIC:
            raise ValueError(f"bad snapshot magic at offset {pos}")
        version, dim, n = struct.unpack_from("<III", raw, pos + 4)
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        pos += 16
        lengths = struct.unpack_from(f"<{dim}d", raw, pos)
        pos += 8 * dim
        grid = GridSpec(dim, n, lengths)
        count = grid.size
        data = np.frombuffer(raw, dtype="<c16", count=count, offset=pos)
        pos += 16 * count
        fields.append(Field(grid, data.reshape(grid.shape).astype(complex)))
    return fields
