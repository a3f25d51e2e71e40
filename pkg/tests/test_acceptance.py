"""Acceptance criteria, one test each. Run with ``pytest tests/test_acceptance.py -s -v``
to see the PASS/FAIL line per criterion."""
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import erf

from hosf.coefficients import PhysicalConstants, coefficient_table, make_operator
from hosf.diagnostics import conservation_report, decay_experiment, ej_truncation_report, pair_energies
from hosf.grid import Field, GridSpec, OrbitalSet
from hosf.meanfield import coulomb_kernel, fock_apply, hartree_potential, mean_field_action
from hosf.potentials import sample_coulomb
from hosf.propagation import EvolutionProblem, IntegratorConfig, free_propagate, run_simulation

from conftest import random_orbitals, two_orbital_system
from test_diagnostics import brute_force_pair_sums
from test_propagation import gaussian_closed_form, l2

DT_LEVELS = (0.01, 0.005, 0.0025)


def verdict(number: int, ok: bool, detail: str, elapsed: float, limit: float):
    ok = ok and elapsed < limit
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail} ({elapsed:.2f} s, limit {limit:g} s)")
    assert ok, detail


def slope(dts, values) -> float:
    return float(np.polyfit(np.log(dts), np.log(values), 1)[0])


def hf_drifts(J: int):
    """Per-dt (norm drift, overlap drift, energy drift) for the two-orbital HF system at horizon 1."""
    out = []
    for dt in DT_LEVELS:
        orb, problem = two_orbital_system(J=J)
        rep = conservation_report(run_simulation(orb, 1.0, IntegratorConfig(dt=dt), problem, diagnostics_every=10))
        out.append((rep.max_norm_drift, rep.max_overlap_drift, rep.energy_drift))
    return np.array(out)


def test_criterion_1_coefficients():
    start = time.perf_counter()
    table = {j: Fraction(num, den) for j, num, den, _ in coefficient_table(4)}
    ok = table[1] == Fraction(1, 2) and table[2] == Fraction(1, 8)
    verdict(1, ok, f"alpha(1)={table[1]}, alpha(2)={table[2]}", time.perf_counter() - start, 1.0)


def test_criterion_2_conservation():
    start = time.perf_counter()
    g = GridSpec.cube(1, 512, 100.0)
    x = g.coords[0]
    worst_linear = 0.0
    for J in (1, 2, 3):
        consts = PhysicalConstants()
        problem = EvolutionProblem(make_operator(g, J, consts), consts, sample_coulomb(-1.0, 1.0, g).values)
        psi = np.exp(-((x + 10) ** 2) / 8 + 0.4j * x)
        orb = OrbitalSet(g, psi[None] / l2(psi, g))
        traj = run_simulation(orb, 10.0, IntegratorConfig(dt=0.01), problem, diagnostics_every=100, with_energy=False)
        assert traj.steps == 1000
        worst_linear = max(worst_linear, conservation_report(traj).max_norm_drift)
    drifts = hf_drifts(J=2)
    overlap_slope = slope(DT_LEVELS, drifts[:, 1])
    worst_hf = float(drifts[:, 0].max())
    ok = worst_linear <= 1e-10 and worst_hf <= 1e-10 and abs(overlap_slope - 2.0) <= 0.2
    detail = (f"linear norm drift {worst_linear:.2e}, HF orbital norm drift {worst_hf:.2e}, "
              f"overlap drifts {', '.join(f'{v:.2e}' for v in drifts[:, 1])} slope {overlap_slope:.3f}")
    verdict(2, ok, detail, time.perf_counter() - start, 120.0)


def test_criterion_3_energy():
    start = time.perf_counter()
    drifts = hf_drifts(J=2)[:, 2]
    s = slope(DT_LEVELS, drifts)
    detail = f"energy drifts {', '.join(f'{v:.2e}' for v in drifts)} slope {s:.3f}"
    verdict(3, abs(s - 2.0) <= 0.2, detail, time.perf_counter() - start, 120.0)


def test_criterion_4_free_propagator():
    start = time.perf_counter()
    g = GridSpec.cube(1, 1024, 200.0)
    x = g.coords[0]
    consts = PhysicalConstants()
    op = make_operator(g, 1, consts)
    psi0 = gaussian_closed_form(x, 0.0, 2.0, -20.0, 0.5)
    err = 0.0
    for t in (1.0, 10.0, 40.0):
        out = free_propagate(Field(g, psi0), t, op, consts).values
        err = max(err, float(np.max(np.abs(out - gaussian_closed_form(x, t, 2.0, -20.0, 0.5)))))
    back = free_propagate(free_propagate(psi0, 40.0, op, consts), -40.0, op, consts)
    reversal = float(np.max(np.abs(back - psi0)))
    ok = err <= 1e-8 and reversal <= 1e-12
    verdict(4, ok, f"closed-form max error {err:.2e}, round trip {reversal:.2e}", time.perf_counter() - start, 10.0)


def test_criterion_5_cross_integrator():
    start = time.perf_counter()
    gaps = []
    for dt, steps in ((0.005, 100), (0.0025, 200)):
        orb, problem = two_orbital_system(J=2)
        finals = [
            run_simulation(orb, dt * steps, IntegratorConfig(method=m, dt=dt), problem,
                           diagnostics_every=0, with_energy=False).final.values
            for m in ("strang", "duhamel_picard")
        ]
        gaps.append(l2(finals[0] - finals[1], problem.grid))
    shrink = gaps[0] / gaps[1]
    ok = gaps[0] <= 1e-6 and shrink >= 3.5
    verdict(5, ok, f"discrepancy {gaps[0]:.2e} -> {gaps[1]:.2e}, shrink {shrink:.2f}",
            time.perf_counter() - start, 60.0)


def test_criterion_6_dispersive_exponent():
    start = time.perf_counter()
    one = decay_experiment(1, 1)
    two = decay_experiment(2, 1)
    ok = abs(one.exponent + 0.5) <= 0.05 and abs(two.exponent + 0.25) <= 0.04
    detail = (f"J=1 exponent {one.exponent:.4f}, J=2 exponent {two.exponent:.4f}, "
              f"max boundary mass {max(one.boundary_mass.max(), two.boundary_mass.max()):.1e}")
    verdict(6, ok, detail, time.perf_counter() - start, 60.0)


def test_criterion_7_truncation_order():
    start = time.perf_counter()
    errors = [r["rel_error"] for r in ej_truncation_report(4, [0.1])]
    ratio = errors[0] / errors[1]
    ok = 100 <= ratio <= 400 and all(b < a for a, b in zip(errors, errors[1:]))
    detail = f"errors {', '.join(f'{e:.2e}' for e in errors)}, J=1/J=2 ratio {ratio:.1f}"
    verdict(7, ok, detail, time.perf_counter() - start, 1.0)


def test_criterion_8_mean_field_oracles():
    from test_meanfield import radial_potential

    start = time.perf_counter()
    rng = np.random.default_rng(8)

    # Gaussian Hartree potential against erf(r / sqrt 2) / r from radial quadrature
    g3 = GridSpec.cube(3, 64, 24.0)
    rho = (2 * math.pi) ** -1.5 * np.exp(-g3.r**2 / 2)
    phi = hartree_potential(OrbitalSet(g3, np.sqrt(rho)), 1.0, coulomb_kernel(g3, "truncated", cutoff_radius=12.0)).values
    mask = (g3.r > 0) & (g3.r <= 4.0)
    erf_err = float(np.max(np.abs(phi[mask] - erf(g3.r[mask] / math.sqrt(2)) / g3.r[mask])))
    for r in (0.5, 1.0, 3.0):
        assert radial_potential(r) == pytest.approx(erf(r / math.sqrt(2)) / r, rel=1e-10)

    g1 = GridSpec.cube(1, 16, 4.0)
    kern1 = coulomb_kernel(g1, screening=0.9)
    exchange_ok = True
    for _ in range(50):
        d, x = pair_energies(random_orbitals(g1, int(rng.integers(1, 5)), rng), kern1)
        exchange_ok &= x <= d * (1 + 1e-12)

    kappa = 0.8
    identity_err = 0.0
    for _ in range(10):
        orb = random_orbitals(g1, 3, rng)
        action = mean_field_action(orb, kappa, kern1)
        hart = hartree_potential(orb, kappa, kern1).values
        for k in range(3):
            full = hart * orb.values[k] - fock_apply(k, orb, kappa, kern1, include_self=True).values
            scale = np.max(np.abs(full)) + 1.0
            identity_err = max(identity_err, float(np.max(np.abs(full - action[k]))) / scale)

    brute_err = 0.0
    for _ in range(5):
        orb = random_orbitals(g1, 3, rng)
        d, x = pair_energies(orb, kern1)
        bd, bx = brute_force_pair_sums(orb, 0.9)
        brute_err = max(brute_err, abs(d - bd) / max(1.0, abs(bd)), abs(x - bx) / max(1.0, abs(bx)))

    ok = erf_err <= 1e-6 and exchange_ok and identity_err <= 1e-12 and brute_err <= 1e-8
    detail = (f"erf oracle {erf_err:.1e}, exchange<=direct on 50 sets {exchange_ok}, "
              f"self-interaction identity {identity_err:.1e}, brute force {brute_err:.1e}")
    verdict(8, ok, detail, time.perf_counter() - start, 60.0)
