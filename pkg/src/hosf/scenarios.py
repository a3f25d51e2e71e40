"""Scenario presets, strict config parsing and order-comparison runs.

A scenario is a plain nested dict (the same shape as the JSON run config).
Presets are dicts too; a config names a preset under ``"scenario"`` and
overrides any part of it.

Units are natural (hbar = m = c = 1) unless the constants say otherwise.
For the alpha-particle presets the length unit is then the reduced Compton
wavelength of the alpha particle, hbar / (m_alpha c) = 0.0529 fm, and the
Coulomb strength 2 Z e^2 / (4 pi eps0) equals 2 Z alpha_fs in units of
hbar c. The ``alpha-nuclear`` preset uses MeV, fm and fm/c instead.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from hosf.coefficients import OperatorSpec, PhysicalConstants, make_operator
from hosf.grid import (
    GridSpec,
    OrbitalSet,
    boundary_mass_fraction,
    gram_schmidt,
    spectral_top_octave_fraction,
)
from hosf.meanfield import MODELS, CoulombKernel, coulomb_kernel
from hosf.potentials import PotentialSpec
from hosf.propagation import EvolutionProblem, IntegratorConfig, run_simulation

FINE_STRUCTURE = 1 / 137.035999084
HBAR_C_MEV_FM = 197.3269804
ALPHA_MASS_MEV = 3727.3794066
COULOMB_MEV_FM = HBAR_C_MEV_FM * FINE_STRUCTURE  # e^2 / (4 pi eps0)

INITIAL_BOUNDARY_MASS = 1e-8
TOP_OCTAVE_LIMIT = 1e-6


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


def alpha_coupling(Z: int, units: str = "natural") -> float:
    """``2 Z e^2 / (4 pi eps0)`` for a residual nucleus of charge ``Z``."""
    if units == "natural":
        return 2 * Z * FINE_STRUCTURE
    if units == "nuclear":
        return 2 * Z * COULOMB_MEV_FM
    raise ValueError(f"unknown unit system {units!r}")


def relativistic_momentum(beta: float, mass: float = 1.0, c: float = 1.0) -> float:
    """``gamma m v`` for ``v = beta c``."""
    return mass * beta * c / math.sqrt(1 - beta**2)


_ALPHA_Z = 82
_ALPHA_R = 132.0  # about 7 fm in units of hbar / (m_alpha c)

PRESETS: dict[str, dict] = {
    "free-gaussian": {
        "grid": {"dim": 1, "points": 1024, "box_length": 200.0},
        "J": 1,
        "orbitals": {"recipe": "gaussian", "centers": [[-20.0]], "widths": [2.0], "momenta": [[0.5]]},
        "integrator": {"dt": 0.05},
        "horizon": 40.0,
        "diagnostics_every": 20,
    },
    "free-relativistic": {
        "grid": {"dim": 1, "points": 2048, "box_length": 800.0},
        "J": 2,
        "orbitals": {
            "recipe": "gaussian",
            "centers": [[-100.0]],
            "widths": [20.0],
            "momenta": [[relativistic_momentum(0.1)]],
        },
        "integrator": {"dt": 1.0},
        "horizon": 1000.0,
        "diagnostics_every": 100,
    },
    "finite-well": {
        # coarse on purpose: the well edge excites the stiff top modes
        "grid": {"dim": 1, "points": 128, "box_length": 100.0},
        "J": 2,
        "potential": {"kind": "well", "depth": 0.5, "radius": 5.0},
        "orbitals": {"recipe": "gaussian", "centers": [[-15.0]], "widths": [3.0], "momenta": [[0.4]]},
        "integrator": {"dt": 0.05},
        "horizon": 40.0,
        "diagnostics_every": 20,
    },
    "linear-ramp": {
        "grid": {"dim": 1, "points": 512, "box_length": 100.0},
        "J": 2,
        "potential": {"kind": "linear", "gradient": [0.002]},
        "orbitals": {"recipe": "gaussian", "centers": [[0.0]], "widths": [3.0], "momenta": [[0.0]]},
        "integrator": {"dt": 0.05},
        "horizon": 40.0,
        "diagnostics_every": 20,
    },
    "alpha-1d": {
        "grid": {"dim": 1, "points": 2048, "box_length": 800.0},
        "constants": {"alpha_coulomb": alpha_coupling(_ALPHA_Z)},
        "J": 2,
        "potential": {"kind": "coulomb"},
        "orbitals": {
            "recipe": "gaussian",
            "centers": [[_ALPHA_R]],
            "widths": [10.0],
            "momenta": [[relativistic_momentum(0.1)]],
        },
        "integrator": {"dt": 0.5},
        "horizon": 400.0,
        "diagnostics_every": 40,
    },
    "alpha": {
        "grid": {"dim": 3, "points": 64, "box_length": 128.0},
        "constants": {"alpha_coulomb": alpha_coupling(_ALPHA_Z)},
        "J": 2,
        "potential": {"kind": "coulomb"},
        "orbitals": {
            "recipe": "gaussian",
            "centers": [[12.0, 0.0, 0.0]],
            "widths": [5.0],
            "momenta": [[relativistic_momentum(0.1), 0.0, 0.0]],
        },
        "integrator": {"dt": 0.5},
        "horizon": 40.0,
        "diagnostics_every": 10,
    },
    "alpha-nuclear": {
        # MeV, fm, fm/c; symbols are large so the rest energy is subtracted
        "grid": {"dim": 1, "points": 2048, "box_length": 80.0},
        "constants": {
            "hbar": HBAR_C_MEV_FM,
            "mass": ALPHA_MASS_MEV,
            "c": 1.0,
            "alpha_coulomb": alpha_coupling(_ALPHA_Z, "nuclear"),
        },
        "J": 2,
        "potential": {"kind": "coulomb"},
        "orbitals": {
            "recipe": "gaussian",
            "centers": [[7.0]],
            "widths": [0.5],
            "momenta": [[relativistic_momentum(0.1, ALPHA_MASS_MEV)]],
        },
        "integrator": {"dt": 0.05},
        "horizon": 20.0,
        "diagnostics_every": 40,
    },
    "hf-1d": {
        "grid": {"dim": 1, "points": 256, "box_length": 40.0},
        "constants": {"kappa": 1.0, "alpha_coulomb": 0.5},
        "J": 2,
        "potential": {"kind": "coulomb", "epsilon": 1.0},
        "kernel": {"screening": 1.0},
        "model": "hartree_fock",
        "orbitals": {
            "recipe": "gaussian_set",
            "centers": [[-2.0], [1.5]],
            "widths": [1.0, 0.8],
            "momenta": [[0.5], [-0.3]],
        },
        "integrator": {"dt": 0.005},
        "horizon": 1.0,
        "diagnostics_every": 20,
    },
    "hartree-1d": {
        "grid": {"dim": 1, "points": 256, "box_length": 40.0},
        "constants": {"kappa": 1.0},
        "J": 2,
        "kernel": {"screening": 1.0},
        "model": "hartree",
        "orbitals": {"recipe": "gaussian", "centers": [[0.0]], "widths": [1.5], "momenta": [[0.2]]},
        "integrator": {"dt": 0.01},
        "horizon": 2.0,
        "diagnostics_every": 20,
    },
}


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _reject_unknown(section: dict, allowed: Sequence[str], where: str):
    if not isinstance(section, dict):
        raise ConfigError(where, "expected an object")
    for key in section:
        if key not in allowed:
            name = f"{where}.{key}" if where else key
            raise ConfigError(name, f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _number(section: dict, key: str, where: str, default=None, positive=False, nonneg=False):
    value = section.get(key, default)
    name = f"{where}.{key}" if where else key
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(name, "must be finite")
    if positive and value <= 0:
        raise ConfigError(name, "must be > 0")
    if nonneg and value < 0:
        raise ConfigError(name, "must be >= 0")
    return value


def _integer(section: dict, key: str, where: str, default=None, minimum=None):
    value = section.get(key, default)
    name = f"{where}.{key}" if where else key
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(name, f"must be >= {minimum}")
    return value


def _vectors(raw, count: int, dim: int, name: str) -> list[tuple[float, ...]]:
    if raw is None:
        return [(0.0,) * dim] * count
    if not isinstance(raw, list) or len(raw) != count:
        raise ConfigError(name, f"expected a list of {count} vectors")
    out = []
    for i, v in enumerate(raw):
        if not isinstance(v, list) or len(v) != dim:
            raise ConfigError(f"{name}[{i}]", f"expected {dim} components")
        out.append(tuple(float(c) for c in v))
    return out


@dataclass
class OrbitalRecipe:
    """Initial orbitals.

    ``gaussian``/``gaussian_set``: packets
    ``exp(-|x - x0|^2 / (4 width^2) + i p0 . x / hbar)``; a set is
    orthonormalized in order. ``plane_wave``: the grid mode with integer
    indices ``modes``. ``random``: band-limited random orbitals from
    ``seed``, orthonormalized.
    """

    recipe: str = "gaussian"
    centers: list = field(default_factory=list)
    widths: list = field(default_factory=list)
    momenta: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    count: int = 1
    bandwidth: float = 1.0


@dataclass
class ScenarioSpec:
    name: str
    grid: GridSpec
    constants: PhysicalConstants
    J: int
    operator_kind: str
    subtract_rest_energy: bool
    potential: PotentialSpec
    kernel_policy: str
    cutoff_radius: float | None
    screening: float
    model: str
    orbitals: OrbitalRecipe
    integrator: IntegratorConfig
    horizon: float
    diagnostics_every: int
    seed: int

    @classmethod
    def from_dict(cls, raw: dict, name: str = "custom") -> "ScenarioSpec":
        return parse_scenario(raw, name)


SCENARIO_KEYS = (
    "scenario", "grid", "constants", "J", "operator", "potential", "kernel", "model",
    "orbitals", "integrator", "horizon", "diagnostics_every", "seed",
)


def resolve_config(raw: dict, extra_keys: Sequence[str] = ()) -> dict:
    """Merge a config onto its named preset, rejecting unknown keys."""
    _reject_unknown(raw, tuple(SCENARIO_KEYS) + tuple(extra_keys), "")
    name = raw.get("scenario")
    if name is None:
        return copy.deepcopy(raw)
    if name not in PRESETS:
        raise ConfigError("scenario", f"unknown preset {name!r} (available: {', '.join(sorted(PRESETS))})")
    return deep_merge(PRESETS[name], raw)


def parse_scenario(raw: dict, name: str | None = None) -> ScenarioSpec:
    """Validate a (resolved) scenario dict. Nothing large is allocated."""
    cfg = resolve_config(raw)
    name = name or cfg.get("scenario", "custom")

    g = cfg.get("grid")
    if g is None:
        raise ConfigError("grid", "missing")
    _reject_unknown(g, ("dim", "points", "box_length"), "grid")
    dim = _integer(g, "dim", "grid", 1)
    if dim not in (1, 2, 3):
        raise ConfigError("grid.dim", "must be 1, 2 or 3")
    points = _integer(g, "points", "grid", minimum=8)
    if points & (points - 1):
        raise ConfigError("grid.points", "must be a power of two")
    box = g.get("box_length")
    if isinstance(box, list):
        if len(box) != dim:
            raise ConfigError("grid.box_length", f"expected {dim} lengths")
        lengths = tuple(_number({"v": b}, "v", "grid.box_length", positive=True) for b in box)
    else:
        lengths = (_number(g, "box_length", "grid", positive=True),) * dim
        if lengths[0] is None:
            raise ConfigError("grid.box_length", "missing")
    grid = GridSpec(dim, points, lengths)

    c = cfg.get("constants", {})
    _reject_unknown(c, ("hbar", "mass", "c", "kappa", "alpha_coulomb"), "constants")
    consts = PhysicalConstants(
        hbar=_number(c, "hbar", "constants", 1.0, positive=True),
        mass=_number(c, "mass", "constants", 1.0, positive=True),
        c=_number(c, "c", "constants", 1.0, positive=True),
        kappa=_number(c, "kappa", "constants", 0.0, nonneg=True),
        alpha_coulomb=_number(c, "alpha_coulomb", "constants", 0.0, nonneg=True),
    )

    J = _integer(cfg, "J", "", None if "J" in cfg else 1, minimum=1)
    op_cfg = cfg.get("operator", {})
    _reject_unknown(op_cfg, ("kind", "subtract_rest_energy"), "operator")
    op_kind = op_cfg.get("kind", "polynomial")
    if op_kind not in ("polynomial", "relativistic", "monomial"):
        raise ConfigError("operator.kind", f"unknown kind {op_kind!r}")
    subtract = op_cfg.get("subtract_rest_energy", True)
    if not isinstance(subtract, bool):
        raise ConfigError("operator.subtract_rest_energy", "expected true/false")

    p = cfg.get("potential", {"kind": "none"})
    _reject_unknown(p, ("kind", "depth", "radius", "gradient", "alpha", "epsilon", "center", "cut_radius"),
                    "potential")
    kind = p.get("kind", "none")
    try:
        center = p.get("center")
        if center is not None:
            if not isinstance(center, list) or len(center) != dim:
                raise ConfigError("potential.center", f"expected {dim} coordinates")
            center = tuple(float(v) for v in center)
        gradient = p.get("gradient", [])
        if kind == "linear" and (not isinstance(gradient, list) or len(gradient) != dim):
            raise ConfigError("potential.gradient", f"expected {dim} components")
        alpha = _number(p, "alpha", "potential", consts.alpha_coulomb, nonneg=True)
        potential = PotentialSpec(
            kind=kind,
            depth=_number(p, "depth", "potential", 0.0, nonneg=True),
            radius=_number(p, "radius", "potential", 0.0, nonneg=True),
            gradient=tuple(float(v) for v in gradient),
            alpha=alpha,
            epsilon=_number(p, "epsilon", "potential", None, nonneg=True),
            center=center,
            cut_radius=_number(p, "cut_radius", "potential", 1.0, positive=True),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("potential", str(exc)) from None
    if kind == "well" and potential.radius >= 0.5 * min(lengths):
        raise ConfigError("potential.radius", "must be smaller than half the box")

    k = cfg.get("kernel", {})
    _reject_unknown(k, ("policy", "cutoff_radius", "screening"), "kernel")
    policy = k.get("policy", "zero")
    if policy not in ("zero", "truncated"):
        raise ConfigError("kernel.policy", f"unknown policy {policy!r}")
    cutoff = _number(k, "cutoff_radius", "kernel", None, positive=True)
    if policy == "truncated" and cutoff is None:
        raise ConfigError("kernel.cutoff_radius", "required for the truncated policy")
    screening = _number(k, "screening", "kernel", 1.0, positive=True)

    model = cfg.get("model", "hartree_fock")
    if model not in MODELS:
        raise ConfigError("model", f"unknown model {model!r}")

    orbitals = _parse_orbitals(cfg.get("orbitals"), dim)

    integ = cfg.get("integrator", {})
    _reject_unknown(integ, ("method", "dt", "picard_tol", "picard_max_iter", "nonlinear_update"), "integrator")
    try:
        integrator = IntegratorConfig(
            method=integ.get("method", "strang"),
            dt=_number(integ, "dt", "integrator", 0.01, positive=True),
            picard_tol=_number(integ, "picard_tol", "integrator", 1e-12, positive=True),
            picard_max_iter=_integer(integ, "picard_max_iter", "integrator", 60, minimum=1),
            nonlinear_update=integ.get("nonlinear_update", "midpoint"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("integrator", str(exc)) from None

    horizon = _number(cfg, "horizon", "", 1.0, positive=True)
    every = _integer(cfg, "diagnostics_every", "", 1, minimum=1)
    seed = _integer(cfg, "seed", "", 0, minimum=0)
    return ScenarioSpec(
        name=name, grid=grid, constants=consts, J=J, operator_kind=op_kind,
        subtract_rest_energy=subtract, potential=potential, kernel_policy=policy,
        cutoff_radius=cutoff, screening=screening, model=model, orbitals=orbitals,
        integrator=integrator, horizon=horizon, diagnostics_every=every, seed=seed,
    )


def _parse_orbitals(o: dict | None, dim: int) -> OrbitalRecipe:
    if o is None:
        raise ConfigError("orbitals", "missing")
    _reject_unknown(o, ("recipe", "centers", "widths", "momenta", "modes", "count", "bandwidth"), "orbitals")
    recipe = o.get("recipe", "gaussian")
    if recipe in ("gaussian", "gaussian_set"):
        widths = o.get("widths")
        if not isinstance(widths, list) or not widths:
            raise ConfigError("orbitals.widths", "expected a non-empty list of widths")
        n = len(widths)
        if recipe == "gaussian" and n != 1:
            raise ConfigError("orbitals.widths", "the gaussian recipe takes one orbital; use gaussian_set")
        for i, w in enumerate(widths):
            _number({"w": w}, "w", f"orbitals.widths[{i}]", positive=True)
        return OrbitalRecipe(
            recipe=recipe,
            centers=_vectors(o.get("centers"), n, dim, "orbitals.centers"),
            widths=[float(w) for w in widths],
            momenta=_vectors(o.get("momenta"), n, dim, "orbitals.momenta"),
            count=n,
        )
    if recipe == "plane_wave":
        modes = o.get("modes")
        if not isinstance(modes, list) or not modes:
            raise ConfigError("orbitals.modes", "expected a list of integer mode vectors")
        for i, m in enumerate(modes):
            if not isinstance(m, list) or len(m) != dim or not all(isinstance(v, int) for v in m):
                raise ConfigError(f"orbitals.modes[{i}]", f"expected {dim} integers")
        return OrbitalRecipe(recipe=recipe, modes=[tuple(m) for m in modes], count=len(modes))
    if recipe == "random":
        count = _integer(o, "count", "orbitals", 1, minimum=1)
        bw = _number(o, "bandwidth", "orbitals", 1.0, positive=True)
        return OrbitalRecipe(recipe=recipe, count=count, bandwidth=bw)
    raise ConfigError("orbitals.recipe", f"unknown recipe {recipe!r}")


def gaussian_packet(grid: GridSpec, center, width: float, momentum, hbar: float = 1.0) -> np.ndarray:
    """Normalized packet ``exp(-|x-x0|^2/(4 w^2) + i p0.x/hbar)`` on the grid."""
    disp = grid.min_image(center)
    phase = sum(p * x for p, x in zip(momentum, grid.coords)) / hbar
    psi = np.exp(-sum(d**2 for d in disp) / (4 * width**2) + 1j * phase)
    return psi / math.sqrt(float(np.sum(np.abs(psi) ** 2)) * grid.cell_volume)


def build_orbitals(recipe: OrbitalRecipe, grid: GridSpec, consts: PhysicalConstants,
                   seed: int = 0) -> OrbitalSet:
    if recipe.recipe in ("gaussian", "gaussian_set"):
        min_dx = min(grid.spacing)
        packets = []
        for i, (c, w, p) in enumerate(zip(recipe.centers, recipe.widths, recipe.momenta)):
            if w < 2 * min_dx:
                raise ConfigError(f"orbitals.widths[{i}]", f"packet width {w} is under-resolved (< 2 cells)")
            packets.append(gaussian_packet(grid, c, w, p, consts.hbar))
        orb = OrbitalSet(grid, np.stack(packets))
        if len(orb) > 1:
            orb = gram_schmidt(orb)
        return orb
    if recipe.recipe == "plane_wave":
        waves = []
        for m in recipe.modes:
            phase = sum(2 * np.pi * mi / L * x for mi, L, x in zip(m, grid.box_length, grid.coords))
            waves.append(np.exp(1j * phase) / math.sqrt(grid.volume))
        orb = OrbitalSet(grid, np.stack(waves))
        return gram_schmidt(orb) if len(orb) > 1 else orb
    rng = np.random.default_rng(seed)
    mask = grid.k2 <= recipe.bandwidth**2
    raw = []
    for _ in range(recipe.count):
        hat = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * mask
        raw.append(np.fft.ifftn(hat))
    return gram_schmidt(OrbitalSet(grid, np.stack(raw)))


@dataclass
class Scenario:
    spec: ScenarioSpec
    orbitals: OrbitalSet
    integrator: IntegratorConfig
    potential: PotentialSpec
    operator: OperatorSpec
    problem: EvolutionProblem
    warnings: list = field(default_factory=list)


def make_kernel(spec: ScenarioSpec) -> CoulombKernel | None:
    if spec.constants.kappa == 0:
        return None
    return coulomb_kernel(spec.grid, spec.kernel_policy, spec.cutoff_radius, spec.screening)


def build_scenario(spec: ScenarioSpec | dict, J: int | None = None, operator_kind: str | None = None) -> Scenario:
    """Deterministically build initial data, operator and problem.

    Packets that put more than 1e-8 of their mass near the box edge are
    rejected; top-octave spectral mass above 1e-6 is reported in
    ``warnings``.
    """
    if isinstance(spec, dict):
        spec = parse_scenario(spec)
    grid = spec.grid
    orbitals = build_orbitals(spec.orbitals, grid, spec.constants, spec.seed)
    warnings = []
    for k, psi in enumerate(orbitals.values):
        if spec.orbitals.recipe in ("gaussian", "gaussian_set"):
            mass = boundary_mass_fraction(psi, grid)
            if mass >= INITIAL_BOUNDARY_MASS:
                raise ConfigError("orbitals", f"orbital {k} has boundary mass {mass:.2e} >= 1e-8")
        top = spectral_top_octave_fraction(psi, grid)
        if top >= TOP_OCTAVE_LIMIT:
            warnings.append(f"orbital {k}: {top:.2e} of spectral mass in the top octave; refine the grid")
    order = J if J is not None else spec.J
    op = make_operator(
        grid, order, spec.constants,
        kind=operator_kind or spec.operator_kind,
        subtract_rest_energy=spec.subtract_rest_energy,
    )
    potential = None
    if spec.potential.kind != "none":
        potential = spec.potential.sample(grid).values
    problem = EvolutionProblem(op, spec.constants, potential, make_kernel(spec), spec.model)
    return Scenario(spec, orbitals, spec.integrator, spec.potential, op, problem, warnings)


def load_preset(name: str, **overrides) -> ScenarioSpec:
    if name not in PRESETS:
        raise ConfigError("scenario", f"unknown preset {name!r}")
    return parse_scenario(deep_merge(PRESETS[name], overrides), name)


@dataclass
class OrderComparison:
    """L2 deviations over time. ``deviations[(a, b)]`` compares run ``a``
    with run ``b``; the exact semi-relativistic run is keyed ``"exact"``."""

    times: np.ndarray
    labels: list
    deviations: dict

    def at_horizon(self, a, b) -> float:
        key = (a, b) if (a, b) in self.deviations else (b, a)
        return float(self.deviations[key][-1])

    def rows(self) -> list[dict]:
        out = []
        for i, t in enumerate(self.times):
            row = {"time": float(t)}
            for (a, b), series in self.deviations.items():
                row[f"dev_J{a}_vs_{'exact' if b == 'exact' else 'J' + str(b)}"] = float(series[i])
            out.append(row)
        return out


def compare_orders(spec: ScenarioSpec | dict, J_list: Sequence[int]) -> OrderComparison:
    """Run one scenario for several orders ``J`` (and, for linear problems,
    the exact square-root dispersion) from identical initial data."""
    if isinstance(spec, dict):
        spec = parse_scenario(spec)
    if not J_list:
        raise ValueError("J_list must not be empty")
    runs = {}
    for J in dict.fromkeys(J_list):
        runs[J] = _sampled_run(build_scenario(spec, J=J), spec)
    linear = spec.constants.kappa == 0
    if linear:
        runs["exact"] = _sampled_run(build_scenario(spec, operator_kind="relativistic"), spec)
    labels = list(runs)
    times = runs[labels[0]][0]
    dv = spec.grid.cell_volume
    deviations = {}
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            sa, sb = runs[a][1], runs[b][1]
            deviations[(a, b)] = np.array(
                [math.sqrt(float(np.sum(np.abs(x - y) ** 2)) * dv) for x, y in zip(sa, sb)]
            )
    for J in J_list:
        deviations.setdefault((J, J), np.zeros(len(times)))
    return OrderComparison(np.asarray(times), labels, deviations)


def _sampled_run(scenario: Scenario, spec: ScenarioSpec):
    times, states = [], []

    def grab(i, t, orb):
        times.append(t)
        states.append(orb.values.copy())

    run_simulation(
        scenario.orbitals, spec.horizon, scenario.integrator, scenario.problem,
        diagnostics_every=0, snapshot_every=spec.diagnostics_every, on_snapshot=grab, with_energy=False,
    )
    return times, states
