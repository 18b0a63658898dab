import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ancient_fbmcf import barriers as br
from ancient_fbmcf import flow_solver as fs
from ancient_fbmcf import kernels
from ancient_fbmcf.errors import CFLViolation, InsufficientData, InvariantBreach, OutOfRangeError
from ancient_fbmcf.heat_liouville import ground_mode

from conftest import flow_run


def eigen_state(gs, eps, M, n=None):
    """Small multiple of the ground mode with a self-consistent boundary radius."""
    n = n or gs.n
    xb = 1.0
    for _ in range(50):
        u = eps * ground_mode(gs)(np.linspace(0, 1, M + 1) * xb)
        xb = math.sqrt(1 - u[-1] ** 2)
    return fs.ProfileState(n, 0.0, xb, u)


class TestInitialProfile:
    @pytest.mark.parametrize("M", [100, 200, 400])
    def test_invariants(self, ground_states, M):
        state = fs.build_initial_profile(2, 0.05, M, ground_states[2])
        assert fs.check_state(state) == []
        assert state.u[-1] == math.sin(0.05)
        assert state.xb == math.cos(0.05)
        assert state.t == 0.0

    def test_axis_height(self, ground_states):
        gs = ground_states[3]
        state = fs.build_initial_profile(3, 0.2, 100, gs)
        lam, t = br.initial_time(3, 0.2, gs)
        assert state.u[0] == pytest.approx(math.asin(math.exp(lam * lam * t)) / lam, rel=1e-14)

    @pytest.mark.parametrize("rho,M", [(0.0, 100), (0.6, 100), (0.1, 49)])
    def test_ranges(self, rho, M):
        with pytest.raises(OutOfRangeError):
            fs.build_initial_profile(2, rho, M)

    def test_tangency_angle(self):
        rho = 0.1
        th = fs.tangency_angle(rho)
        cap = br.SphereBarrier(th).cap_height(0.0)
        assert cap == pytest.approx(math.sin(rho), rel=1e-13)


class TestVelocity:
    def test_flat_interior(self):
        state = fs.ProfileState(2, 0.0, math.sqrt(1 - 0.01), np.full(101, 0.1))
        np.testing.assert_allclose(fs.interior_velocity(state)[1:], 0.0, atol=1e-13)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_linearisation(self, ground_states, n):
        gs = ground_states[n]
        errs = []
        for M in (100, 200):
            state = eigen_state(gs, 1e-4, M)
            v = fs.interior_velocity(state)
            errs.append(np.max(np.abs(v - gs.lambda0 ** 2 * state.u[:-1])) / np.max(state.u))
        assert errs[1] < 1e-4
        assert 3.4 < errs[0] / errs[1] < 4.6

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_subsolution_ordering(self, ground_states, n):
        gs = ground_states[n]
        state = fs.build_initial_profile(n, 0.3, 400, gs)
        lam, t = br.initial_time(n, 0.3, gs)
        s = br.SigmaSurface(gs, lam, t)
        x = state.x[1:-1]
        dt = 1e-7
        yt = (br.sigma_height(br.SigmaSurface(gs, lam, t + dt), x)
              - br.sigma_height(br.SigmaSurface(gs, lam, t - dt), x)) / (2 * dt)
        ux = (state.u[2:] - state.u[:-2]) / (2 * state.dx)
        moving = state.xi[1:-1] * state.xbdot * ux
        fixed_x = fs.interior_velocity(state)[1:] - moving
        assert np.min(fixed_x - yt) >= -1e-4 * np.max(yt)
        if n == 1:
            np.testing.assert_allclose(fixed_x, yt, rtol=1e-4)


class TestBoundary:
    @pytest.mark.parametrize("M", [200, 400])
    def test_exact_data(self, ground_states, M):
        state = fs.build_initial_profile(2, 0.05, M, ground_states[2])
        ub, xb = fs.boundary_solve(state.u[-2], state.u[-3], M)
        assert ub == pytest.approx(math.sin(0.05), abs=1e-8)
        assert xb == pytest.approx(math.cos(0.05), abs=1e-8)

    def test_third_order(self, ground_states):
        errs = []
        for M in (100, 200, 400):
            state = fs.build_initial_profile(2, 0.05, M, ground_states[2])
            errs.append(abs(fs.boundary_solve(state.u[-2], state.u[-3], M)[0] - math.sin(0.05)))
        assert errs[0] / errs[1] > 6 and errs[1] / errs[2] > 6

    def test_flat_limit(self):
        assert fs.boundary_solve(0.0, 0.0, 100) == (0.0, 1.0)

    @given(st.floats(1e-6, 0.7), st.floats(0.0, 1.0), st.integers(50, 800))
    def test_discrete_orthogonality(self, um1, frac, M):
        um2 = um1 * frac
        ub, xb = fs.boundary_solve(um1, um2, M)
        dx = xb / M
        assert (3 * ub - 4 * um1 + um2) / (2 * dx) == pytest.approx(ub / xb, rel=1e-12)
        assert xb * xb + ub * ub == pytest.approx(1.0, rel=1e-15)

    def test_leaving_ball(self):
        with pytest.raises(InvariantBreach):
            fs.boundary_solve(0.99, 0.5, 60)


class TestStep:
    def test_zero_step(self, ground_states):
        state = fs.build_initial_profile(2, 0.05, 100, ground_states[2])
        new = fs.step(state, 0.0)
        assert new is not state
        np.testing.assert_array_equal(new.u, state.u)
        assert new.t == state.t and new.xb == state.xb

    def test_cfl(self, ground_states):
        state = fs.build_initial_profile(2, 0.05, 100, ground_states[2])
        with pytest.raises(CFLViolation):
            fs.step(state, 2 * fs.max_step(state))
        with pytest.raises(ValueError):
            fs.step(state, -1e-9)

    @pytest.mark.parametrize("n", [1, 2])
    def test_eigenmode_growth(self, ground_states, n):
        gs = ground_states[n]
        state = eigen_state(gs, 1e-8, 200)
        dt = fs.max_step(state)
        new = fs.step(state, dt)
        growth = new.u[:-1] / state.u[:-1]
        np.testing.assert_allclose(growth, math.exp(gs.lambda0 ** 2 * dt), rtol=1e-6)

    def test_second_order_in_time(self, ground_states):
        state = fs.build_initial_profile(2, 0.05, 100, ground_states[2])
        # start from a stepped state: the exact initial boundary value is
        # off the discrete closure by O(dx^3), which would show up as O(dt)
        state = fs.step(state, fs.max_step(state))
        diffs = []
        for dt in (fs.max_step(state), 0.5 * fs.max_step(state)):
            full = fs.step(state, dt)
            half = fs.step(fs.step(state, dt / 2), dt / 2)
            diffs.append(np.max(np.abs(full.u - half.u)))
        assert 6.5 < diffs[0] / diffs[1] < 9.5

    def test_step_keeps_invariants(self, ground_states):
        state = fs.build_initial_profile(2, 0.2, 100, ground_states[2])
        for _ in range(50):
            state = fs.step(state, fs.max_step(state))
        assert fs.check_state(state) == []


class TestCurvature:
    def test_flat(self):
        state = fs.ProfileState(2, 0.0, 1.0, np.zeros(101))
        np.testing.assert_array_equal(fs.mean_curvature_profile(state), 0.0)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_sphere_cap(self, n):
        sph = br.SphereBarrier(0.5, n)
        errs = []
        for M in (100, 200):
            xb = math.cos(0.5)
            state = fs.ProfileState(n, 0.0, xb, sph.cap_height(np.linspace(0, xb, M + 1)))
            errs.append(np.max(np.abs(fs.mean_curvature_profile(state) - sph.mean_curvature)))
        assert errs[1] < 1e-3 * sph.mean_curvature
        assert errs[0] / errs[1] > 3.4

    def test_matches_sigma_geometry(self, ground_states):
        gs = ground_states[2]
        lam, t = br.initial_time(2, 0.3, gs)
        s = br.SigmaSurface(gs, lam, t)
        errs = []
        for M in (400, 800):
            state = fs.build_initial_profile(2, 0.3, M, gs)
            H = fs.mean_curvature_profile(state)
            errs.append(np.max(np.abs(H - br.sigma_geometry(s, state.x).H)))
        assert errs[1] <= 1e-6
        assert 3.4 < errs[0] / errs[1] < 4.6

    def test_radial_derivative_sign_on_cap(self):
        sph = br.SphereBarrier(0.6, 2)
        xb = math.cos(0.6)
        state = fs.ProfileState(2, 0.0, xb, sph.cap_height(np.linspace(0, xb, 201)))
        g = fs.grad_H_dot_X(state) / sph.mean_curvature
        # one-sided differences of H at the last two nodes are the crudest part
        assert np.max(np.abs(g[:-2])) < 1e-5
        assert np.max(np.abs(g[-2:])) < 3e-3


class TestRun:
    def test_immediate_stop(self, ground_states):
        trace, snaps = fs.run(2, 0.05, M=100, stop_sin_theta=math.sin(0.05), gs=ground_states[2])
        assert len(trace) == 1
        assert len(snaps) == 1
        assert trace.status == "stop height"

    def test_validation(self):
        with pytest.raises(OutOfRangeError):
            fs.run(2, 0.05, M=100, cfl=0.6)
        with pytest.raises(OutOfRangeError):
            fs.run(2, 0.05, M=100, stop_sin_theta=1.0)
        with pytest.raises(OutOfRangeError):
            fs.run(2, 0.05, M=100, record_every=0)

    def test_snapshot_times_landed(self, ground_states):
        trace, snaps = fs.run(2, 0.1, M=100, snapshot_times=(0.1, 0.25), t_end=0.3,
                              gs=ground_states[2])
        times = [s.t for s in snaps]
        assert 0.1 in times and 0.25 in times
        assert times[-1] == pytest.approx(0.3)
        assert trace.status == "stop time"

    def test_deterministic(self, ground_states):
        a, sa = fs.run(2, 0.1, M=100, t_end=0.2, gs=ground_states[2])
        b, sb = fs.run(2, 0.1, M=100, t_end=0.2, gs=ground_states[2])
        assert a.rows == b.rows
        np.testing.assert_array_equal(sa[-1].u, sb[-1].u)

    def test_breach_carries_last_state(self, ground_states):
        state = fs.build_initial_profile(2, 0.05, 100, ground_states[2])
        state.u[40] += 0.01
        with pytest.raises(InvariantBreach) as info:
            fs.run(2, 0.05, M=100, state=state)
        assert info.value.state is not None
        assert len(info.value.trace) == 1

    def test_trace_invariants(self, run_n2):
        trace, snaps = run_n2
        t = trace.t
        assert np.all(np.diff(t) > 0)
        assert np.all(np.diff(trace.column("theta_bar")) > 0)
        assert np.all(np.diff(trace.column("y_min")) > 0)
        assert trace.status == "stop height"
        assert trace.column("y_max")[-1] >= 0.9

    def test_snapshot_invariants(self, run_n2):
        _, snaps = run_n2
        for s in snaps[::20]:
            r = fs.state_residuals(s)
            assert r["sphere"] < 1e-10
            assert r["monotone"] >= 0
            assert r["convexity"] >= -1e-6

    def test_curvature_grows_outward(self, run_n2):
        trace, _ = run_n2
        assert min(trace.gradHX) >= -1e-6

    def test_as_array(self, run_n2):
        trace, _ = run_n2
        arr = trace.as_array()
        assert arr.shape == (len(trace), len(fs.TRACE_FIELDS))


class TestExtinction:
    def test_exact_exponential(self):
        n, c = 2, 1.3
        trace = fs.FlowTrace(n)
        for t in np.linspace(0, 1.25, 60):
            s = math.exp(n * (t - c))
            trace.rows.append((t, s / 2, s, math.asin(s), 1.0, 2.0, math.sqrt(1 - s * s)))
        assert fs.estimate_extinction(trace) == pytest.approx(c, abs=1e-12)
        assert trace.t_ext == pytest.approx(c, abs=1e-12)

    def test_insufficient(self):
        trace = fs.FlowTrace(2)
        with pytest.raises(InsufficientData):
            fs.estimate_extinction(trace)
        trace.rows = [(t, 0.01, 0.1, 0.1, 1, 2, 0.99) for t in (0, 1, 2)]
        with pytest.raises(InsufficientData):
            fs.estimate_extinction(trace)

    def test_after_last_row(self, run_n2):
        trace, _ = run_n2
        t_ext = fs.estimate_extinction(trace)
        assert math.isfinite(t_ext) and t_ext > trace.t[-1]

    @pytest.mark.slow
    def test_grid_convergence(self, run_n2):
        ext = [fs.estimate_extinction(flow_run(2, 0.05, M=M, snapshot_every=None)[0])
               for M in (100, 200)]
        ext.append(fs.estimate_extinction(run_n2[0]))
        ratio = (ext[1] - ext[0]) / (ext[2] - ext[1])
        assert 2.5 < ratio < 5.0


class TestKernels:
    def test_pure_python_switch(self):
        env = dict(os.environ, ANCIENT_FBMCF_PURE_PYTHON="1")
        out = subprocess.run([sys.executable, "-c",
                              "from ancient_fbmcf import kernels; print(kernels.IMPLEMENTATION)"],
                             env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "python"

    @pytest.mark.skipif(kernels.compiled_impl is None, reason="compiled extension not built")
    @pytest.mark.parametrize("n", [1, 3])
    def test_flow_parity(self, ground_states, n):
        state = fs.build_initial_profile(n, 0.2, 100, ground_states[n])
        ua, ub = state.u.copy(), state.u.copy()
        ra = kernels.python_impl.flow_advance(ua, state.xb, 0.0, n, 0.2, 0.0, math.inf, 2.0, 0.0, 300)
        rb = kernels.compiled_impl.flow_advance(ub, state.xb, 0.0, n, 0.2, 0.0, math.inf, 2.0, 0.0, 300)
        np.testing.assert_allclose(ua, ub, rtol=1e-12)
        assert ra[3] == rb[3] and ra[4] == rb[4]
        assert ra[0] == pytest.approx(rb[0], rel=1e-14)
        assert ra[2] == pytest.approx(rb[2], rel=1e-9)

    @pytest.mark.skipif(kernels.compiled_impl is None, reason="compiled extension not built")
    def test_boundary_velocity_parity(self, ground_states):
        state = fs.build_initial_profile(2, 0.3, 100, ground_states[2])
        assert kernels.compiled_impl.boundary_velocity(state.u, state.xb, 2) == pytest.approx(
            kernels.python_impl.boundary_velocity(state.u, state.xb, 2), rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.01, 0.5), st.integers(1, 4))
    def test_closure(self, um1, n):
        um2 = 0.9 * um1
        M = 100
        ub = kernels.closure_height(um1, um2, M)
        assert ub == pytest.approx((4 * um1 - um2) / (3 - 2 / M), rel=1e-15)
