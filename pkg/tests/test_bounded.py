import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from worcs import (
    BoundedCsState,
    DomainError,
    LambdaSchedule,
    PopulationSpec,
    ScheduleError,
    StateError,
    advantage,
    bm_cs,
    bm_halfwidth,
    eb_ci,
    enumerate_orderings,
    hoeffding_ci,
    next_lambda,
    psi_e,
    psi_h,
    wor_mean_trace,
)
from conftest import replay_bounded, walk_bounded_prefixes

LOG40 = math.log(40.0)  # log(2/alpha) at alpha = 0.05


class TestAdvantage:
    def test_first_term_vanishes(self):
        for n in (1, 5, 1000):
            assert advantage(1, n) == 0.0

    def test_direct_summation(self):
        assert advantage(3, 10) == pytest.approx(0 + 1 / 9 + 2 / 8, abs=1e-15)
        assert advantage(3, 10) == pytest.approx(13 / 36, abs=1e-12)

    def test_harmonic_oracle_at_exhaustion(self):
        # A_N = N * H_{N-1} - (N-1)
        n = 1000
        harmonic = float(np.sum(1.0 / np.arange(1, n)))
        expected = n * harmonic - (n - 1)
        got = advantage(n, n)
        assert got == pytest.approx(expected, rel=1e-6)
        assert got == pytest.approx(6485.47, abs=0.01)

    def test_strictly_increasing(self):
        vals = [advantage(t, 50) for t in range(1, 51)]
        assert all(b > a for a, b in zip(vals[1:], vals[2:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            advantage(11, 10)
        with pytest.raises(DomainError):
            advantage(0, 10)


class TestPsi:
    def test_psi_h_values(self):
        assert psi_h(0.0, 0, 1) == 0.0
        assert psi_h(1.0, 0, 1) == pytest.approx(0.125)
        assert psi_h(0.5, -1, 1) == pytest.approx(0.125)
        assert psi_h(-0.5, -1, 1) == pytest.approx(0.125)  # even in lambda

    def test_psi_h_domain(self):
        with pytest.raises(DomainError):
            psi_h(0.1, 1, 0)

    def test_psi_e_values(self):
        assert psi_e(0.0, 1.0) == 0.0
        assert psi_e(0.5, 1.0) == pytest.approx((-math.log(0.5) - 0.5) / 4,
                                                abs=1e-12)
        assert psi_e(0.5, 1.0) == pytest.approx(0.048286, abs=1e-6)

    def test_psi_e_small_lambda_matches_quadratic(self):
        lam, c = 1e-4, 1.0
        ratio = psi_e(lam, c) / psi_h(lam, 0, 1)
        assert 1.0 <= ratio <= 1.001

    def test_psi_e_increasing(self):
        vals = [psi_e(l, 2.0) for l in np.linspace(0, 0.49, 50)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_psi_e_domain(self):
        with pytest.raises(DomainError):
            psi_e(1.0, 1.0)
        with pytest.raises(DomainError):
            psi_e(-0.1, 1.0)


class _StubState:
    lower, upper = 0.0, 1.0

    def __init__(self, t, sig2):
        self.t = t - 1
        self._sig2 = sig2

    def sigma2_prev(self):
        return self._sig2


class TestNextLambda:
    def test_fixed_opt_value(self):
        sched = LambdaSchedule.fixed_opt(100, 0.05)
        lam = next_lambda(sched, 1, _StubState(1, 0.25))
        assert lam == pytest.approx(math.sqrt(8 * LOG40 / 100), abs=1e-12)
        assert lam == pytest.approx(0.54324, abs=1e-4)

    def test_spread_cap_binds_at_t1(self):
        sched = LambdaSchedule.hoeffding_spread(0.05)
        raw = math.sqrt(8 * LOG40 / (1 * math.log(2)))
        assert raw > 6.5  # inner value before the cap
        assert next_lambda(sched, 1, _StubState(1, 0.25)) == 1.0

    def test_eb_spread_cap_binds(self):
        sched = LambdaSchedule.eb_spread(0.05)
        inner = math.sqrt(2 * LOG40 / (0.25 * 4 * math.log(5)))
        assert inner > 2.1
        assert next_lambda(sched, 4, _StubState(4, 0.25)) == 0.5

    def test_constant_and_custom(self):
        assert next_lambda(LambdaSchedule.constant(0.3, 0.05), 7) == 0.3
        sched = LambdaSchedule.custom([0.1, 0.2], 0.05)
        assert next_lambda(sched, 2) == 0.2
        with pytest.raises(ScheduleError):
            next_lambda(sched, 3)

    def test_schedule_validation(self):
        with pytest.raises(Exception):
            LambdaSchedule.fixed_opt(0, 0.05)
        with pytest.raises(DomainError):
            LambdaSchedule.hoeffding_spread(1.5)


def _replay(values, n_pop, schedule, method="hoeffding", lower=0.0, upper=1.0,
            alpha=0.05):
    st_ = BoundedCsState(n_pop, lower, upper, alpha, schedule, method=method)
    snaps = [st_.update(v) for v in values]
    return st_, snaps


class TestEstimators:
    def test_constant_lambda_recovers_unweighted(self):
        x = np.random.default_rng(0).random(40)
        st_ = BoundedCsState(60, 0, 1, 0.05, LambdaSchedule.constant(0.37, 0.05))
        for v in x:
            st_.update(v)
            assert st_.mu_hat_weighted() == pytest.approx(
                st_.mu_hat_plain(), abs=1e-12)

    def test_all_equal_population_centers_exactly(self):
        for sched in (LambdaSchedule.hoeffding_spread(0.05),
                      LambdaSchedule.eb_spread(0.05),
                      LambdaSchedule.fixed_opt(10, 0.05)):
            st_ = BoundedCsState(20, 0.0, 1.0, 0.05, sched)
            for _ in range(20):
                snap = st_.update(0.7)
                assert snap.mu_hat_weighted == pytest.approx(0.7, abs=1e-12)
                assert snap.mu_hat_plain == pytest.approx(0.7, abs=1e-12)

    def test_wor_mean_trace_matches_state(self):
        x = np.random.default_rng(1).random(30)
        trace = wor_mean_trace(x, 50)
        st_ = BoundedCsState(50, 0, 1, 0.05)
        for i, v in enumerate(x):
            st_.update(v)
            assert st_.mu_hat_plain() == pytest.approx(trace[i], abs=1e-12)

    def test_unbiasedness_exact_small(self):
        # E[mu_hat_t] over all orderings equals the population mean, every t
        values = (0.0, 0.4, 1.0)
        spec = PopulationSpec.bounded(values, 0, 1)
        mu = sum(values) / 3
        for t in (1, 2, 3):
            exp = sum(float(p) * wor_mean_trace(np.asarray(seq), 3)[t - 1]
                      for seq, p in enumerate_orderings(spec))
            assert exp == pytest.approx(mu, abs=1e-10)


class TestHoeffdingCs:
    def test_classical_width_recovered_without_advantage(self):
        # constant tuned weight, advantage terms dropped: the width at the
        # tuned time is the classical two-sided bound, constants included
        n, c, alpha = 100, 1.0, 0.05
        lam = math.sqrt(8 * math.log(2 / alpha) / (n * c * c))
        width = (n * psi_h(lam, 0, 1) + math.log(2 / alpha)) / (lam * n)
        classical = math.sqrt(c * c * math.log(2 / alpha) / (2 * n))
        assert width == pytest.approx(classical, abs=1e-12)
        assert classical == pytest.approx(0.13581, abs=1e-5)

    def test_snapshot_fields_and_intersection(self):
        x = np.random.default_rng(3).random(25)
        st_, snaps = _replay(x, 40, LambdaSchedule.hoeffding_spread(0.05))
        los = [s.lo_intersected for s in snaps]
        his = [s.hi_intersected for s in snaps]
        assert all(b >= a for a, b in zip(los, los[1:]))
        assert all(b <= a for a, b in zip(his, his[1:]))
        assert all(s.lo_intersected >= s.lo - 1e-12 for s in snaps)
        assert all(s.lambda_t > 0 for s in snaps)

    def test_width_monotone_in_alpha(self):
        x = np.random.default_rng(4).random(30)
        st_, _ = _replay(x, 50, LambdaSchedule.hoeffding_spread(0.05))
        assert st_.halfwidth(0.10) < st_.halfwidth(0.05) < st_.halfwidth(0.01)

    def test_one_sided_narrower(self):
        x = np.random.default_rng(5).random(30)
        st_, _ = _replay(x, 50, LambdaSchedule.hoeffding_spread(0.05))
        assert st_.halfwidth(one_sided=True) < st_.halfwidth(one_sided=False)

    def test_exhaustion_snapshot(self):
        values = [0.1, 0.5, 0.9, 0.3]
        st_, snaps = _replay(values, 4, LambdaSchedule.hoeffding_spread(0.05))
        assert snaps[-1].exact_mean == pytest.approx(np.mean(values))
        assert st_.t == 4
        with pytest.raises(StateError):
            st_.update(0.5)

    def test_out_of_bounds_rejected(self):
        st_ = BoundedCsState(10, 0, 1, 0.05)
        with pytest.raises(DomainError):
            st_.update(1.5)

    def test_predictability(self):
        # permuting future observations never changes earlier weights
        rng = np.random.default_rng(6)
        x = rng.random(30)
        st1, _ = _replay(x, 30, LambdaSchedule.eb_spread(0.05), method="eb")
        for cut in (5, 17):
            y = np.concatenate([x[:cut], rng.permutation(x[cut:])])
            st2, _ = _replay(y, 30, LambdaSchedule.eb_spread(0.05),
                             method="eb")
            assert st1.lambda_history[:cut] == st2.lambda_history[:cut]

    def test_m_process_starts_at_one(self):
        st_ = BoundedCsState(10, 0, 1, 0.05)
        assert st_.log_m(0.3) == 0.0
        assert st_.log_m(0.9, side="geq") == 0.0


class TestSupermartingales:
    @pytest.mark.parametrize("lam", [0.1, 0.5])
    @pytest.mark.parametrize("values", [(0.0, 0.4, 1.0), (0.0, 0.0, 1.0, 1.0)])
    def test_exact_supermartingale(self, lam, values):
        mu = sum(values) / len(values)
        n = len(values)
        sched = LambdaSchedule.constant(lam, 0.05)
        for method in ("hoeffding", "eb"):
            for prefix, remaining in walk_bounded_prefixes(values):
                if not remaining:
                    continue
                st_ = replay_bounded(prefix, n, 0, 1, 0.05, sched,
                                     method=method)
                m_now = math.exp(st_.log_m(mu, method=method))
                exp_next = 0.0
                for v in set(remaining):
                    p = remaining.count(v) / len(remaining)
                    st2 = replay_bounded(prefix + (v,), n, 0, 1, 0.05, sched,
                                         method=method)
                    exp_next += p * math.exp(st2.log_m(mu, method=method))
                assert exp_next <= m_now + 1e-10

    def test_predictable_schedule_supermartingale(self):
        values = (0.0, 0.4, 1.0)
        mu = sum(values) / 3
        sched = LambdaSchedule.eb_spread(0.05)
        for prefix, remaining in walk_bounded_prefixes(values):
            if not remaining:
                continue
            st_ = replay_bounded(prefix, 3, 0, 1, 0.05, sched, method="eb")
            m_now = math.exp(st_.log_m(mu))
            exp_next = sum(
                remaining.count(v) / len(remaining)
                * math.exp(replay_bounded(prefix + (v,), 3, 0, 1, 0.05, sched,
                                          method="eb").log_m(mu))
                for v in set(remaining))
            assert exp_next <= m_now + 1e-10


class TestHoeffdingCi:
    def test_n1_reduces_to_classical(self):
        iv = hoeffding_ci([0.5], 10, 0, 1, 0.05)
        assert iv.halfwidth == pytest.approx(math.sqrt(0.5 * LOG40), abs=1e-12)

    def test_value_from_direct_summation_oracle(self):
        n, n_pop = 100, 1000
        adv = sum((i - 1) / (n_pop - i + 1) for i in range(1, n + 1))
        oracle = math.sqrt(0.5 * LOG40) / (math.sqrt(n) + adv / math.sqrt(n))
        iv = hoeffding_ci(np.full(n, 0.5), n_pop, 0, 1, 0.05)
        assert iv.halfwidth == pytest.approx(oracle, abs=1e-12)
        assert iv.halfwidth == pytest.approx(0.128968, abs=1e-4)

    def test_strict_dominance_over_classical(self):
        n_pop = 1000
        for n in [2, 3, 10, 50, 100, 500, 999, 1000]:
            hw = hoeffding_ci(np.full(n, 0.5), n_pop, 0, 1, 0.05).halfwidth
            classical = math.sqrt(LOG40 / (2 * n))
            assert hw < classical

    def test_domain(self):
        with pytest.raises(DomainError):
            hoeffding_ci([0.5] * 11, 10, 0, 1, 0.05)
        with pytest.raises(DomainError):
            hoeffding_ci([2.0], 10, 0, 1, 0.05)


class TestEbCi:
    def test_initial_variance_estimate(self):
        st_ = BoundedCsState(10, 0, 1, 0.05)
        assert st_.sigma2_prev() == pytest.approx(0.25)  # c^2/4 at t=0
        st_ = BoundedCsState(10, -2, 2, 0.05)
        assert st_.sigma2_prev() == pytest.approx(4.0)

    def test_all_equal_sample_centered(self):
        iv = eb_ci(np.full(50, 0.3), 100, 0, 1, 0.05, permutation_seed=4)
        assert iv.center == pytest.approx(0.3, abs=1e-12)

    def test_permutation_seed_determines_interval(self):
        x = np.random.default_rng(8).random(60)
        a = eb_ci(x, 200, 0, 1, 0.05, permutation_seed=1)
        b = eb_ci(x, 200, 0, 1, 0.05, permutation_seed=1)
        c = eb_ci(x, 200, 0, 1, 0.05, permutation_seed=2)
        assert a == b
        assert a != c

    def test_coverage_monte_carlo(self):
        # fresh population and sample per replication
        reps = 10**4
        n, n_pop = 200, 1000
        misses = 0
        root = np.random.SeedSequence(314)
        for child in root.spawn(reps):
            g = np.random.Generator(np.random.Philox(child))
            pop = g.random(n_pop)
            sample = pop[g.choice(n_pop, size=n, replace=False)]
            seed = int(child.generate_state(1, dtype=np.uint64)[0])
            iv = eb_ci(sample, n_pop, 0, 1, 0.05, permutation_seed=seed)
            mu = pop.mean()
            misses += not (iv.lo <= mu <= iv.hi)
        assert misses / reps <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / reps)


class TestBaselineBand:
    def test_value_at_tuning_time(self):
        hw = bm_halfwidth(500, 500, 1000, 0, 1, 0.05)
        expected = math.sqrt(math.log(80) * 0.5 * 1.002 / 1000)
        assert hw == pytest.approx(expected, abs=1e-12)
        assert hw == pytest.approx(0.046855, abs=1e-5)

    def test_branch_continuity_at_tune(self):
        n, n_pop = 500, 1000
        pre = bm_halfwidth(n, n, n_pop, 0, 1, 0.05, branch="pre")
        post = bm_halfwidth(n, n, n_pop, 0, 1, 0.05, branch="post")
        # branches differ only through the (n-1 vs n) population factor
        factor = math.sqrt((1 - n / n_pop) * (1 + 1 / n)
                           / (1 - (n - 1) / n_pop))
        assert post == pytest.approx(pre * factor, rel=1e-12)
        assert abs(pre - post) / pre < 0.01

    def test_domain(self):
        with pytest.raises(DomainError):
            bm_halfwidth(0, 5, 10, 0, 1, 0.05)
        with pytest.raises(DomainError):
            bm_halfwidth(10, 5, 10, 0, 1, 0.05)

    def test_band_clipped(self):
        band = bm_cs(1, 500, 1000, 0.5, 0, 1, 0.05)
        assert band.lo >= 0 and band.hi <= 1

    def test_tuned_band_tighter_than_baseline(self):
        # our constant-weight band at the baseline's own tuning time, and
        # strictly tighter away from it
        n_pop, tune, alpha = 1000, 500, 0.05
        lam = math.sqrt(8 * math.log(2 / alpha) / tune)
        def ours(t):
            den = lam * sum(1 + (i - 1) / (n_pop - i + 1)
                            for i in range(1, t + 1))
            return (t * lam * lam / 8 + math.log(2 / alpha)) / den
        for t, strict in [(tune, False), (100, True), (900, True)]:
            bm = bm_halfwidth(t, tune, n_pop, 0, 1, alpha)
            assert ours(t) <= bm
            if strict:
                assert ours(t) < 0.9 * bm


class TestScheduleDomains:
    def test_eb_rejects_lambda_at_cap(self):
        st_ = BoundedCsState(10, 0, 1, 0.05,
                             LambdaSchedule.constant(1.0, 0.05), method="eb")
        with pytest.raises(ScheduleError):
            st_.update(0.5)

    def test_hoeffding_allows_large_lambda(self):
        st_ = BoundedCsState(10, 0, 1, 0.05,
                             LambdaSchedule.constant(2.5, 0.05))
        snap = st_.update(0.5)
        assert math.isfinite(snap.lo)

    @given(st.floats(0.01, 0.45), st.integers(2, 30))
    @settings(max_examples=25, deadline=None)
    def test_eb_band_contains_center(self, lam, n):
        st_ = BoundedCsState(n, 0, 1, 0.05,
                             LambdaSchedule.constant(lam, 0.05), method="eb")
        snap = st_.update(0.5)
        assert snap.lo <= snap.mu_hat_weighted <= snap.hi
