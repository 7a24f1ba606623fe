import numpy as np
import pytest

from beamsim import analysis, beamformers, channel, convex, modem


def make_program(seed, kind, N=4, K=3, order=8, sigma=0.1, k=0):
    rng = np.random.default_rng(seed)
    H = channel.sample_channel(N, K, rng)
    cs = [modem.unit_energy_pam(order)] * K
    return convex.ConvexProgram(kind, H, k, cs, sigma), H, cs


class TestProgramSetup:
    def test_dimension_and_tuple_counts(self):
        prog, _, _ = make_program(0, convex.MPE_FULL)
        assert prog.dimension == 8
        assert prog.G_objective.shape == (64, 8)
        assert prog.G_constraints.shape == (64, 8)

    def test_reduced_constraint_count(self):
        prog, _, _ = make_program(0, convex.MPE_REDUCED)
        # sign patterns over K-1 interferers
        assert prog.G_constraints.shape == (4, 8)

    def test_reduced_margin_matches_analysis(self):
        prog, H, cs = make_program(1, convex.MPE_REDUCED)
        rng = np.random.default_rng(2)
        for _ in range(20):
            w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            w_bar = beamformers.lift_weights(w)
            _, reduced = analysis.feasibility_margins(w, H, 0, cs)
            assert prog.reduced_margin(w_bar) == pytest.approx(reduced, rel=1e-12, abs=1e-14)

    def test_sign_pattern_rows_equal_extreme_tuples(self):
        # the reduced constraint rows are a subset of the full tuple rows
        prog_f, _, _ = make_program(3, convex.MPE_FULL, K=2, order=4)
        prog_r, _, _ = make_program(3, convex.MPE_REDUCED, K=2, order=4)
        full_rows = {tuple(np.round(g, 12)) for g in prog_f.G_objective}
        for g in prog_r.G_constraints:
            assert tuple(np.round(g, 12)) in full_rows


class TestObjective:
    def test_full_objective_equals_exact_pe(self):
        prog, H, cs = make_program(4, convex.MPE_FULL, sigma=0.2)
        rng = np.random.default_rng(5)
        for _ in range(10):
            w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            w /= np.linalg.norm(w)
            val, _ = convex.objective_and_gradient(prog, beamformers.lift_weights(w))
            assert val == pytest.approx(analysis.exact_pe(w, H, 0, cs, 0.2), rel=1e-12)

    def test_gradient_finite_difference(self):
        prog, _, _ = make_program(6, convex.MPE_FULL, N=3, K=2, order=4, sigma=0.3)
        rng = np.random.default_rng(7)
        for _ in range(10):
            x = rng.standard_normal(6)
            x /= np.linalg.norm(x)
            _, grad = convex.objective_and_gradient(prog, x)
            eps = 1e-6
            for i in range(6):
                e = np.zeros(6)
                e[i] = eps
                fp, _ = convex.objective_and_gradient(prog, x + e)
                fm, _ = convex.objective_and_gradient(prog, x - e)
                fd = (fp - fm) / (2 * eps)
                assert grad[i] == pytest.approx(fd, rel=2e-5, abs=1e-9)

    def test_convexity_along_segments(self):
        # midpoint value never exceeds chord average on feasible segments
        prog, _, _ = make_program(8, convex.MPE_FULL, sigma=0.15)
        margin, w_feas = convex.feasibility_phase(prog.H, prog.user, prog.constellations)
        assert margin > 0
        rng = np.random.default_rng(9)
        for _ in range(50):
            x = convex.random_feasible_start(prog, rng, w_feas=beamformers.lift_weights(w_feas))
            y = convex.random_feasible_start(prog, rng, w_feas=beamformers.lift_weights(w_feas))
            fx, _ = convex.objective_and_gradient(prog, x)
            fy, _ = convex.objective_and_gradient(prog, y)
            fm, _ = convex.objective_and_gradient(prog, (x + y) / 2)
            assert fm <= (fx + fy) / 2 + 1e-12


class TestSolve:
    def test_full_and_reduced_agree(self):
        for seed in range(6):
            prog_f, H, cs = make_program(seed, convex.MPE_FULL, sigma=0.1)
            prog_r = convex.ConvexProgram(convex.MPE_REDUCED, H, 0, cs, 0.1)
            rep_f = convex.solve(prog_f)
            rep_r = convex.solve(prog_r)
            assert rep_f.status == convex.OPTIMAL
            assert rep_r.status == convex.OPTIMAL
            assert rep_f.objective_value == pytest.approx(rep_r.objective_value, rel=1e-8, abs=1e-15)

    def test_solution_is_unit_norm_feasible_stationary(self):
        prog, H, cs = make_program(12, convex.MPE_FULL, sigma=0.1)
        rep = convex.solve(prog)
        assert rep.status == convex.OPTIMAL
        w_bar = beamformers.lift_weights(rep.weights)
        assert np.linalg.norm(w_bar) == pytest.approx(1.0, abs=1e-12)
        full, reduced = analysis.feasibility_margins(rep.weights, H, 0, cs)
        assert reduced > -1e-12
        assert rep.kkt_residual <= 1e-6

    def test_beats_closed_form_baselines_on_exact_pe(self):
        rng_seeds = range(20, 26)
        for seed in rng_seeds:
            prog, H, cs = make_program(seed, convex.MPE_FULL, sigma=0.15)
            rep = convex.solve(prog)
            assert rep.status == convex.OPTIMAL
            for w0 in (
                beamformers.zf(H, 0),
                beamformers.mmse(H, 0, 0.15, [c.average_energy for c in cs]),
                beamformers.sminr_closed_form(H, 0, cs),
            ):
                assert rep.objective_value <= analysis.exact_pe(w0, H, 0, cs, 0.15) + 1e-12

    def test_unique_minimizer_from_random_starts(self):
        prog, H, cs = make_program(30, convex.MPE_FULL, sigma=0.1)
        rng = np.random.default_rng(31)
        _, w_feas = convex.feasibility_phase(H, 0, cs)
        reps = [
            convex.solve(prog, start=convex.random_feasible_start(prog, rng, w_feas=beamformers.lift_weights(w_feas)))
            for _ in range(3)
        ]
        ws = [beamformers.align_phase(r.weights, H[:, 0]) for r in reps]
        for w in ws[1:]:
            assert np.linalg.norm(w - ws[0]) < 1e-7

    def test_sminr_amp_solution_matches_closed_form_metric(self):
        prog, H, cs = make_program(33, convex.SMINR_AMP, sigma=0.2)
        rep = convex.solve(prog)
        assert rep.status == convex.OPTIMAL
        amp_prog = analysis.sminr_amp(rep.weights, H, 0, cs, 0.2)
        # the amplitude maximizer dominates the power-form eigenvector on
        # amplitude (they optimize different scalarizations of the margin)
        w_cf = beamformers.sminr_closed_form(H, 0, cs)
        amp_cf = analysis.sminr_amp(w_cf, H, 0, cs, 0.2)
        assert amp_prog >= amp_cf - 1e-10
        # and equals the maximum feasibility margin scaled by the noise
        margin, _ = convex.feasibility_phase(H, 0, cs)
        assert amp_prog == pytest.approx(margin / prog.noise_scale, rel=1e-8)

    def test_infeasible_instance_reported(self):
        # more users than antennas with large constellations: no intersection
        rng = np.random.default_rng(34)
        H = channel.sample_channel(2, 4, rng)
        cs = [modem.unit_energy_pam(8)] * 4
        prog = convex.ConvexProgram(convex.MPE_FULL, H, 0, cs, 0.1)
        rep = convex.solve(prog)
        if rep.status == convex.INFEASIBLE:
            assert rep.weights is None
        else:
            # if a feasible point exists the solver must certify it
            _, reduced = analysis.feasibility_margins(rep.weights, H, 0, cs)
            assert reduced > 0

    def test_trace_file_written(self, tmp_path):
        prog, _, _ = make_program(35, convex.MPE_REDUCED, N=3, K=2, order=4)
        path = tmp_path / "trace.csv"
        convex.solve(prog, trace_path=str(path))
        lines = path.read_text().strip().splitlines()
        assert len(lines) >= 2
        assert "objective" in lines[0]


class TestFeasibility:
    def test_margin_positive_when_underloaded(self):
        rng = np.random.default_rng(36)
        for _ in range(10):
            H = channel.sample_channel(6, 2, rng)
            cs = [modem.unit_energy_pam(4)] * 2
            margin, w = convex.feasibility_phase(H, 0, cs)
            assert margin > 0
            _, reduced = analysis.feasibility_margins(w, H, 0, cs)
            assert reduced == pytest.approx(margin, rel=1e-8)

    def test_random_starts_are_feasible(self):
        prog, H, cs = make_program(37, convex.MPE_FULL)
        rng = np.random.default_rng(38)
        _, w_feas = convex.feasibility_phase(H, 0, cs)
        for _ in range(20):
            x = convex.random_feasible_start(prog, rng, w_feas=beamformers.lift_weights(w_feas))
            assert np.linalg.norm(x) <= 1 + 1e-12
            assert prog.reduced_margin(x) > 0
