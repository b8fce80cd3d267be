"""Tests for nldyn.dynamics: stepping, adaptive integration, trajectory audit."""

import dataclasses

import numpy as np
import pytest

from helpers import euler_orbit, euler_step
from nldyn import (
    AtomField,
    DenominatorVanishingError,
    IntegratorConfig,
    Termination,
    build_model,
    characteristic_flow,
    integrate,
    l1_distance,
    mass,
    profile_l1_distance,
    rearrange,
    step_rk4,
    verify_trajectory,
)

RNG = np.random.default_rng(11)


class TestStepRk4:
    def test_stationary_field_unchanged(self, logistic):
        """{(1, .5), (2, .5)} is an exact rest state: all stages vanish."""
        u = AtomField([1.0, 2.0], [0.5, 0.5], 1.0)
        out = step_rk4(u, 0.5, logistic)
        np.testing.assert_allclose(out.values, u.values, atol=1e-15)

    def test_constant_field_unchanged(self, logistic):
        u = AtomField([0.5], [1.0], 1.0)
        out = step_rk4(u, 1.0, logistic)
        assert out.values[0] == pytest.approx(0.5, abs=1e-15)

    def test_small_step_matches_euler_to_second_order(self, logistic):
        """One dt = 1e-6 step differs from explicit Euler by O(dt^2)."""
        u = AtomField([1.5, 2.0], [0.5, 0.5], 1.0)
        dt = 1e-6
        rk = step_rk4(u, dt, logistic).values
        eu = euler_step(u.values, u.weights, logistic.g, logistic.p, dt)
        assert float(np.max(np.abs(rk - eu))) <= 10.0 * dt**2

    def test_weights_preserved(self, logistic):
        u = AtomField([1.5, 2.0], [0.25, 0.75], 1.0)
        out = step_rk4(u, 0.01, logistic)
        assert np.array_equal(out.weights, u.weights)

    def test_guard_raises_at_stage(self, logistic):
        u = AtomField([0.0, 1.0], [0.5, 0.5], 1.0)
        with pytest.raises(DenominatorVanishingError):
            step_rk4(u, 0.1, logistic)

    def test_mass_conserved_per_step(self, logistic):
        u = AtomField([1.5, 2.0], [0.5, 0.5], 1.0)
        out = step_rk4(u, 0.1, logistic)
        assert mass(out) == pytest.approx(mass(u), abs=1e-14)


class TestIntegrate:
    def test_constant_state_stationary_at_zero(self, logistic):
        u = AtomField([0.5], [1.0], 1.0)
        tr = integrate(u, logistic, IntegratorConfig(t_max=10.0))
        assert tr.termination == Termination.STATIONARY
        assert tr.times.tolist() == [0.0]

    def test_h1_run_terminates_in_region(self, h1_run):
        assert h1_run.termination == Termination.STATIONARY
        for snap in h1_run.snapshots:
            assert np.all(snap.values >= 1.0 - 1e-9)
            assert np.all(snap.values <= 2.0 + 1e-9)

    def test_h1_mass_conserved(self, h1_run):
        np.testing.assert_allclose(h1_run.mass_series, 1.75, atol=1.75e-6)

    def test_h1_matches_euler_oracle_at_t1(self, h1_run, logistic):
        """Adaptive integrator vs fixed-step Euler (dt = 1e-5) at t = 1."""
        ref = euler_orbit(
            [2.0, 1.5], [0.5, 0.5], logistic.g, logistic.p, 1e-5, 100_000
        )
        k = int(np.searchsorted(h1_run.times, 1.0))
        assert h1_run.times[k] == 1.0
        assert float(np.max(np.abs(h1_run.snapshots[k].values - ref))) <= 1e-4

    def test_snapshot_weights_shared(self, h1_run):
        w0 = h1_run.snapshots[0].weights
        assert all(np.array_equal(s.weights, w0) for s in h1_run.snapshots)

    def test_records_on_uniform_grid(self, h1_run):
        diffs = np.diff(h1_run.times[:-1])
        np.testing.assert_allclose(diffs, 0.01, atol=1e-12)

    def test_mixed_sign_field_finds_rest_state(self, logistic):
        """{(.5, .5), (-.5, .5)}: the g-integral starts at -0.25 and never
        crosses zero (checked against a fine Euler oracle); the orbit
        settles on the stationary pair {1, -1}."""
        v = np.array([0.5, -0.5])
        w = np.array([0.5, 0.5])
        dens = []
        vv = v.copy()
        for _ in range(200):
            vv = euler_orbit(vv, w, logistic.g, logistic.p, 1e-3, 50)
            dens.append(0.5 * logistic.g(vv[0]) + 0.5 * logistic.g(vv[1]))
        assert np.all(np.sign(dens) == -1.0)

        tr = integrate(AtomField(v, w, 1.0), logistic, IntegratorConfig(t_max=50.0))
        assert tr.termination == Termination.STATIONARY
        np.testing.assert_allclose(tr.snapshots[-1].values, [1.0, -1.0], atol=1e-8)

    def test_denominator_crossing_terminates_with_guard(self):
        """A flattened-left-tail g makes the g-integral cross zero in finite
        time; the run must stop with the guard tag and finite values."""
        pair = build_model("u*(1-u)/(1+4*u^2)", "u", working_range=(-3.0, 3.0))
        u0 = AtomField([0.3, -1.0], [0.73, 0.27], 1.0)
        tr = integrate(u0, pair, IntegratorConfig(t_max=50.0, record_every=0.001))
        assert tr.termination == Termination.DENOMINATOR_VANISHING
        assert all(np.all(np.isfinite(s.values)) for s in tr.snapshots)
        final = tr.snapshots[-1]
        gv = np.array([pair.g(x) for x in final.values])
        den = float(np.dot(final.weights, gv))
        assert abs(den) < 1e-6 * np.max(np.abs(gv))

    def test_guard_at_start(self, logistic):
        u = AtomField([0.0, 1.0], [0.5, 0.5], 1.0)
        tr = integrate(u, logistic, IntegratorConfig(t_max=1.0))
        assert tr.termination == Termination.DENOMINATOR_VANISHING
        assert tr.times.tolist() == [0.0]

    def test_explicit_guard_threshold_holds_at_final_snapshot(self, logistic):
        """With a fixed eps_den, the H2 orbit (whose g-integral decays to 0
        without crossing) trips the guard cleanly: the final snapshot
        satisfies |integral of g| < eps_den."""
        u = AtomField([0.7, 0.3], [0.5, 0.5], 1.0)
        eps = 1e-4
        tr = integrate(
            u, logistic, IntegratorConfig(t_max=200.0, record_every=0.1, eps_den=eps)
        )
        assert tr.termination == Termination.DENOMINATOR_VANISHING
        final = tr.snapshots[-1]
        den = float(np.dot(final.weights, logistic.g(final.values)))
        assert abs(den) < eps
        assert np.all(np.isfinite(final.values))

    def test_many_atom_field_keeps_structure(self, logistic):
        """200 atoms sampled from a smooth profile: mass at roundoff,
        strict order preserved, energy nonincreasing."""
        xs = (np.arange(200) + 0.5) / 200
        u0 = AtomField((1.0 + xs**2)[::-1], np.full(200, 1.0 / 200), 1.0)
        tr = integrate(u0, logistic, IntegratorConfig(t_max=30.0, record_every=0.5))
        m0 = float(tr.mass_series[0])
        assert float(np.max(np.abs(tr.mass_series - m0))) <= 1e-6 * abs(m0)
        assert all(bool(np.all(np.diff(s.values) < 0.0)) for s in tr.snapshots)
        assert float(np.max(np.diff(tr.energy_series))) <= 1e-9

    def test_tied_atoms_stay_bitwise_equal(self, logistic):
        """Atoms sharing a value follow identical arithmetic forever, even
        with different weights."""
        u = AtomField([2.0, 2.0, 1.5], [0.25, 0.5, 0.25], 1.0)
        tr = integrate(u, logistic, IntegratorConfig(t_max=3.0, record_every=0.1))
        for snap in tr.snapshots:
            assert snap.values[0] == snap.values[1]

    def test_reaches_tmax_when_slow(self, logistic):
        u = AtomField([1.5, 2.0], [0.5, 0.5], 1.0)
        tr = integrate(u, logistic, IntegratorConfig(t_max=0.5, record_every=0.1))
        assert tr.termination == Termination.REACHED_TMAX
        assert tr.times[-1] == 0.5

    def test_lipschitz_cap_variant_agrees(self, logistic):
        """The cap only changes step sizes (conservatively), not the orbit."""
        u = AtomField([1.5, 2.0], [0.5, 0.5], 1.0)
        plain = integrate(u, logistic, IntegratorConfig(t_max=0.05, record_every=0.01))
        capped = integrate(
            u, logistic, IntegratorConfig(t_max=0.05, record_every=0.01, lipschitz_cap=True)
        )
        k = min(plain.times.size, capped.times.size)
        for i in range(k):
            np.testing.assert_allclose(
                plain.snapshots[i].values, capped.snapshots[i].values, atol=1e-7
            )

    def test_csv_layout(self, h3_run):
        text = h3_run.to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == "t,lambda,mass,energy,dissipation,v1,v2"
        first = [float(x) for x in lines[1].split(",")]
        assert first[0] == 0.0
        assert first[5] == -0.2 and first[6] == -1.0


class TestRearrangementAlongFlow:
    def test_commutation_exact(self, logistic):
        """Integrating the rearranged state and rearranging the integrated
        state produce the same staircases at the shared record times."""
        u0 = AtomField([1.5, 2.0], [0.5, 0.5], 1.0)  # deliberately unsorted
        cfg = IntegratorConfig(t_max=5.0, record_every=0.1)
        tr_orig = integrate(u0, logistic, cfg)
        tr_sorted = integrate(rearrange(u0).to_field(), logistic, cfg)
        k = min(tr_orig.times.size, tr_sorted.times.size)
        assert np.array_equal(tr_orig.times[:k], tr_sorted.times[:k])
        for i in range(0, k, max(1, k // 10)):
            d = profile_l1_distance(
                rearrange(tr_orig.snapshots[i]), rearrange(tr_sorted.snapshots[i])
            )
            assert d <= 1e-12

    def test_isometry_along_orbit(self, h1_run):
        rng = np.random.default_rng(3)
        for _ in range(20):
            i, j = rng.integers(0, h1_run.times.size, size=2)
            d_atoms = l1_distance(h1_run.snapshots[i], h1_run.snapshots[j])
            d_prof = profile_l1_distance(
                rearrange(h1_run.snapshots[i]), rearrange(h1_run.snapshots[j])
            )
            assert abs(d_atoms - d_prof) <= 1e-12


class TestCharacteristicFlow:
    def test_fixed_point_one(self, h1_run, logistic):
        y = characteristic_flow(1.0, h1_run, logistic)
        np.testing.assert_allclose(y, 1.0, atol=1e-14)

    def test_fixed_point_zero(self, h1_run, logistic):
        y = characteristic_flow(0.0, h1_run, logistic)
        np.testing.assert_allclose(y, 0.0, atol=1e-14)

    def test_reproduces_atom_series(self, h1_run, logistic):
        """A tracer seeded at an atom's initial value retraces that atom."""
        series = np.array([s.values[0] for s in h1_run.snapshots])
        y = characteristic_flow(2.0, h1_run, logistic)
        assert float(np.max(np.abs(y - series))) <= 1e-6

    def test_single_snapshot_trajectory(self, logistic):
        u = AtomField([0.5], [1.0], 1.0)
        tr = integrate(u, logistic, IntegratorConfig(t_max=1.0))
        y = characteristic_flow(0.3, tr, logistic)
        assert y.tolist() == [0.3]


class TestVerifyTrajectory:
    def test_h1_run_passes(self, h1_run, logistic):
        report = verify_trajectory(h1_run, logistic, h1_run.hypothesis)
        assert report.passed, "\n".join(report.lines())

    def test_h3_run_passes(self, h3_run, logistic):
        report = verify_trajectory(h3_run, logistic, h3_run.hypothesis)
        assert report.passed, "\n".join(report.lines())

    def test_corrupted_snapshot_detected(self, h1_run, logistic):
        """Perturbing one recorded state must trip mass or ordering."""
        snaps = list(h1_run.snapshots)
        mid = len(snaps) // 2
        bad = snaps[mid].values.copy()
        bad[0] += 0.01
        snaps[mid] = snaps[mid].with_values(bad)
        masses = h1_run.mass_series.copy()
        masses[mid] = mass(snaps[mid])
        corrupted = dataclasses.replace(
            h1_run, snapshots=tuple(snaps), mass_series=masses
        )
        report = verify_trajectory(corrupted, logistic, h1_run.hypothesis)
        assert not report.passed
        failed = {c.name for c in report.checks if not c.passed}
        assert "mass-conservation" in failed

    def test_constant_trajectory_trivially_passes(self, logistic):
        u = AtomField([0.5], [1.0], 1.0)
        tr = integrate(u, logistic, IntegratorConfig(t_max=5.0))
        report = verify_trajectory(tr, logistic, tr.hypothesis)
        assert report.passed


class TestIntegratorConfigValidation:
    def test_negative_tolerance(self):
        with pytest.raises(ValueError):
            IntegratorConfig(t_max=1.0, rtol=-1e-8)

    def test_dt_init_above_dt_max(self):
        with pytest.raises(ValueError):
            IntegratorConfig(t_max=1.0, dt_init=2.0, dt_max=1.0)

    def test_nonpositive_t_max(self):
        with pytest.raises(ValueError):
            IntegratorConfig(t_max=0.0)
