"""Descent direction, step-size rules, the driver loop, and traces."""

import numpy as np
import pytest

from rankzo.objective import (MonotoneTransform, Objective, make_quadratic,
                              wrap_monotone)
from rankzo.optimizer import (AlphaPolicy, OptimizationError, RunConfig,
                              StepPolicy, StepRegimeError, descent_direction,
                              instrumented_alpha, instrumented_step_size,
                              practical_step, run)
from rankzo.sampling import (DirectionBatch, QueryLedger, new_generator,
                             rank_oracle, sample_directions)
from rankzo.theory import c_N_d_delta
from rankzo.weights import uniform_weights


def linear_1d():
    return Objective(dim=1, fn=lambda x: float(x[0]),
                     grad=lambda x: np.ones(1), L=1.0)


def rank_manual(obj, rows, x=None, alpha=1.0):
    u = np.asarray(rows, dtype=float)
    batch = DirectionBatch(u=u, n=u.shape[0], seed_state="manual")
    x = np.zeros(u.shape[1]) if x is None else x
    return rank_oracle(obj, x, alpha, batch, QueryLedger())


class TestDescentDirection:
    def test_hand_example_1d(self):
        # ranks for f(x)=x at 0 with u=(3,-1,2,-2): best u=-2, worst u=3;
        # uniform n=4 gives d = 1*(-2) + (-1)*3 = -5
        ranked = rank_manual(linear_1d(), [[3.0], [-1.0], [2.0], [-2.0]])
        d = descent_direction(ranked, uniform_weights(4))
        assert d == pytest.approx(np.array([-5.0]))

    def test_linearity_in_directions(self):
        obj = make_quadratic(3, 1.0, 10.0, seed=0)
        rows = new_generator(1).standard_normal((8, 3))
        r1 = rank_manual(obj, rows, x=obj.x_star + 1.0, alpha=1e-6)
        r2 = rank_manual(obj, 2.0 * rows, x=obj.x_star + 1.0, alpha=1e-6)
        w = uniform_weights(8)
        # tiny alpha keeps the ranking identical, so d scales linearly
        np.testing.assert_allclose(descent_direction(r2, w),
                                   2.0 * descent_direction(r1, w), rtol=1e-9)

    def test_size_mismatch(self):
        ranked = rank_manual(linear_1d(), [[1.0], [2.0], [3.0], [4.0]])
        with pytest.raises(ValueError):
            descent_direction(ranked, uniform_weights(8))

    def test_positive_only_uses_best_quartile(self):
        ranked = rank_manual(linear_1d(), [[3.0], [-1.0], [2.0], [-2.0]])
        d = descent_direction(ranked, uniform_weights(4), positive_only=True)
        assert d == pytest.approx(np.array([-2.0]))


class TestInstrumentedStepSize:
    def test_hand_example_zero_remainder(self):
        # linear objective: each term reduces to |u|/(2 L C w); with
        # boundary samples -2 and 3 and unit constants, eta = min(2,3)/2
        ranked = rank_manual(linear_1d(), [[3.0], [-1.0], [2.0], [-2.0]])
        eta = instrumented_step_size(0.0, np.ones(1), ranked,
                                     uniform_weights(4), alpha=1.0,
                                     L=1.0, c_nd=1.0)
        assert eta == pytest.approx(1.0, rel=1e-12)

    def test_inverse_scaling_in_L(self):
        ranked = rank_manual(linear_1d(), [[3.0], [-1.0], [2.0], [-2.0]])
        w = uniform_weights(4)
        eta1 = instrumented_step_size(0.0, np.ones(1), ranked, w, 1.0, 1.0, 1.0)
        eta10 = instrumented_step_size(0.0, np.ones(1), ranked, w, 1.0, 10.0, 1.0)
        assert eta10 == pytest.approx(eta1 / 10.0, rel=1e-12)

    def test_small_alpha_limit(self):
        # as alpha -> 0, (f(x)-f(x+alpha u))/alpha -> -<grad,u>, so eta
        # approaches min |<g,u>| / (2 L C w) over the selected set
        obj = make_quadratic(12, 1.0, 10.0, seed=4)
        x = obj.x_star + new_generator(2).standard_normal(12)
        g = obj.grad(x)
        batch = sample_directions(new_generator(3), 16, 12)
        alpha = 1e-8
        ranked = rank_oracle(obj, x, alpha, batch, QueryLedger())
        w = uniform_weights(16)
        c_nd = c_N_d_delta(16, 12, 0.1)
        eta = instrumented_step_size(obj.fn(x), g, ranked, w, alpha, obj.L, c_nd)
        from rankzo.sampling import selected_ranks
        ip = ranked.directions_at_ranks(selected_ranks(16)) @ g
        closed_form = np.min(np.abs(ip) / (2 * obj.L * c_nd * 0.25))
        assert eta == pytest.approx(closed_form, rel=0.01)

    def test_regime_violation_raises(self):
        # at the optimum every probe is worse than the center, so the
        # best-quartile f-differences have the wrong sign
        obj = make_quadratic(6, 1.0, 10.0, seed=5)
        batch = sample_directions(new_generator(6), 8, 6)
        ranked = rank_oracle(obj, obj.x_star, 0.5, batch, QueryLedger())
        with pytest.raises(StepRegimeError):
            instrumented_step_size(obj.fn(obj.x_star), obj.grad(obj.x_star),
                                   ranked, uniform_weights(8), 0.5, obj.L,
                                   c_N_d_delta(8, 6, 0.1))


class TestInstrumentedAlpha:
    def test_arithmetic(self):
        assert instrumented_alpha(1.0, 1.0, 10.0, c=1.0) == pytest.approx(0.025)

    def test_linearity_in_c(self):
        full = instrumented_alpha(2.0, 3.0, 7.0, c=1.0)
        assert instrumented_alpha(2.0, 3.0, 7.0, c=0.5) == pytest.approx(full / 2)

    def test_never_exceeds_weak_bound(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            gn, L, cd = rng.uniform(0.1, 10, size=3)
            assert instrumented_alpha(gn, L, cd) <= gn / (L * cd) + 1e-15

    def test_stationary_point_rejected(self):
        with pytest.raises(ValueError):
            instrumented_alpha(0.0, 1.0, 10.0)


class TestPracticalStep:
    def test_backtracking_hand_simulation(self):
        # f = x^2/2 at x=1 along d=-1: eta=10 overshoots (f=40.5),
        # eta=1 lands at the optimum; each comparison charges 2
        obj = Objective(dim=1, fn=lambda x: 0.5 * float(x[0] ** 2))
        ledger = QueryLedger()
        policy = StepPolicy.backtracking(eta0=10.0, shrink=0.1, max_tries=3)
        x_new, eta, extra = practical_step(obj, np.array([1.0]),
                                           np.array([-1.0]), policy, ledger)
        assert x_new == pytest.approx(np.array([0.0]))
        assert eta == pytest.approx(1.0)
        assert extra == 4
        assert ledger.total_queries == 4

    def test_fixed_policy_no_extra_queries(self):
        obj = Objective(dim=1, fn=lambda x: float(x[0]))
        ledger = QueryLedger()
        x_new, eta, extra = practical_step(obj, np.array([2.0]),
                                           np.array([1.5]),
                                           StepPolicy.fixed(0.5), ledger)
        assert extra == 0 and ledger.total_queries == 0
        assert x_new == pytest.approx(np.array([2.75]))
        assert eta == 0.5

    def test_rejected_move_keeps_x(self):
        # ascent direction: no eta improves, so the move is rejected
        obj = Objective(dim=1, fn=lambda x: 0.5 * float(x[0] ** 2))
        ledger = QueryLedger()
        policy = StepPolicy.backtracking(eta0=1.0, shrink=0.5, max_tries=4)
        x_new, eta, extra = practical_step(obj, np.array([1.0]),
                                           np.array([1.0]), policy, ledger)
        assert x_new == pytest.approx(np.array([1.0]))
        assert eta == 0.0
        assert extra == 8

    def test_instrumented_policy_rejected(self):
        obj = Objective(dim=1, fn=lambda x: float(x[0]))
        with pytest.raises(ValueError):
            practical_step(obj, np.zeros(1), np.ones(1),
                           StepPolicy.instrumented(), QueryLedger())


class TestRun:
    def test_zero_iterations(self):
        obj = make_quadratic(4, 1.0, 10.0, seed=0)
        x0 = np.arange(4.0)
        trace = run(obj, RunConfig(n=8, iterations=0, seed=1, x0=x0))
        assert len(trace) == 0
        np.testing.assert_array_equal(trace.final_x, x0)
        assert trace.total_queries == 0

    def test_same_seed_identical_traces(self):
        obj = make_quadratic(8, 1.0, 10.0, seed=2)
        cfg = RunConfig(n=16, iterations=40, seed=77)
        t1, t2 = run(obj, cfg), run(obj, cfg)
        assert t1.f == t2.f and t1.eta == t2.eta
        np.testing.assert_array_equal(t1.final_x, t2.final_x)

    def test_seed_changes_trace(self):
        obj = make_quadratic(8, 1.0, 10.0, seed=2)
        t1 = run(obj, RunConfig(n=16, iterations=20, seed=1))
        t2 = run(obj, RunConfig(n=16, iterations=20, seed=2))
        assert t1.f != t2.f

    def test_overall_decrease_instrumented(self):
        obj = make_quadratic(16, 1.0, 10.0, seed=7)
        trace = run(obj, RunConfig(n=16, iterations=300, seed=11))
        assert trace.final_gap < trace.fgap[0]

    def test_query_accounting_fixed_step(self):
        obj = make_quadratic(6, 1.0, 10.0, seed=3)
        cfg = RunConfig(n=16, iterations=10, seed=5,
                        step=StepPolicy.fixed(1e-3),
                        alpha=AlphaPolicy.fixed(1e-2))
        trace = run(obj, cfg)
        assert trace.total_queries == 160
        assert trace.queries_cum[-1] == 160
        assert np.all(np.diff(trace.queries_cum) > 0)

    def test_query_accounting_backtracking(self):
        obj = make_quadratic(6, 1.0, 10.0, seed=3)
        cfg = RunConfig(n=16, iterations=10, seed=5,
                        step=StepPolicy.backtracking(1.0, 0.5, 10),
                        alpha=AlphaPolicy.fixed(1e-2))
        trace = run(obj, cfg)
        assert trace.total_queries > 160  # comparisons charged on top
        assert trace.total_queries == trace.queries_cum[-1]

    def test_instrumented_needs_instrumentation(self):
        bare = Objective(dim=2, fn=lambda x: float(x @ x))
        with pytest.raises(ValueError):
            run(bare, RunConfig(n=8, iterations=5, seed=0))

    def test_stationary_start_raises_with_trace(self):
        obj = make_quadratic(5, 1.0, 10.0, seed=9)
        cfg = RunConfig(n=8, iterations=5, seed=0, x0=obj.x_star.copy())
        with pytest.raises(OptimizationError) as err:
            run(obj, cfg)
        assert len(err.value.trace) == 0

    def test_descent_fraction_and_direction_correlation(self):
        # before the floor, most instrumented iterations decrease f and
        # correlate negatively with the gradient
        obj = make_quadratic(16, 1.0, 10.0, seed=7)
        cfg = RunConfig(n=16, iterations=300, seed=13, record_iterates=True)
        trace = run(obj, cfg)
        f = np.array(trace.f + [trace.final_f])
        decreases = np.mean(np.diff(f) < 0)
        assert decreases > 0.9
        neg_corr = 0
        stepped = 0
        for t in range(len(trace.t)):
            if trace.eta[t] <= 0:
                continue
            g = obj.grad(trace.iterates[t])
            step = trace.iterates[t + 1] - trace.iterates[t]
            stepped += 1
            if float(g @ step) < 0:
                neg_corr += 1
        assert stepped > 0 and neg_corr / stepped >= 0.95

    def test_monotone_invariance_fixed_and_backtracking(self):
        obj = make_quadratic(8, 1.0, 10.0, seed=2)
        transforms = [MonotoneTransform("affine", a=3.0, b=7.0),
                      MonotoneTransform("exponential")]
        for step in (StepPolicy.fixed(0.05),
                     StepPolicy.backtracking(1.0, 0.5, 20)):
            cfg = RunConfig(n=16, iterations=25, seed=31, step=step,
                            alpha=AlphaPolicy.fixed(1e-2),
                            record_iterates=True)
            base = run(obj, cfg)
            for tr in transforms:
                other = run(wrap_monotone(obj, tr), cfg)
                np.testing.assert_array_equal(base.iterates, other.iterates)

    def test_trace_csv_roundtrip(self, tmp_path):
        obj = make_quadratic(4, 1.0, 10.0, seed=1)
        trace = run(obj, RunConfig(n=8, iterations=6, seed=3))
        path = tmp_path / "trace.csv"
        trace.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,f,fgap,gradnorm,alpha,eta,queries_cum"
        assert len(lines) == 7
        back = np.genfromtxt(path, delimiter=",", names=True)
        np.testing.assert_allclose(back["f"], trace.f, rtol=1e-15)

    def test_scheme_selection(self):
        obj = make_quadratic(8, 1.0, 10.0, seed=2)
        for scheme in ("uniform", "log", "blom"):
            trace = run(obj, RunConfig(n=16, iterations=30, seed=5, scheme=scheme))
            assert trace.scheme == scheme
            assert trace.final_gap < trace.fgap[0]

    def test_fixed_alpha_floor_null_steps(self):
        # with a large fixed alpha near the optimum the regime check
        # fails and the iteration records eta = 0 without moving
        obj = make_quadratic(6, 1.0, 10.0, seed=4)
        x0 = obj.x_star + 1e-8 * np.ones(6)
        cfg = RunConfig(n=8, iterations=5, seed=9,
                        alpha=AlphaPolicy.fixed(0.5),
                        step=StepPolicy.instrumented(), x0=x0)
        trace = run(obj, cfg)
        assert all(e == 0.0 for e in trace.eta)
        np.testing.assert_array_equal(trace.final_x, x0)
        # every iteration still pays for its batch exactly once
        assert trace.total_queries == 5 * 8
