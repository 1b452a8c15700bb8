import numpy as np
import pytest

from opscal.calibeating import (
    CalibeatingInvariantError,
    F99State,
    HedgeDistribution,
    HopsState,
    TrackingState,
    climatology_run,
    f99_distribution,
    f99_forecast,
    f99_update,
    f99_run,
    hops_run,
    hops_step,
    tracking_forecast,
    tracking_run,
    tracking_update,
)
from opscal.core import BinningScheme
from opscal.metrics import calibration_error, sharpness
from opscal.metrics import hedging_sharpness_slack, tracking_sharpness_slack


def scheme10():
    return BinningScheme(0.1)


class TestHedgeDistribution:
    def test_point_mass(self):
        d = HedgeDistribution(support=(0.35,), probs=(1.0,))
        assert d.mean() == 0.35
        assert d.sample(0.9999) == 0.35

    def test_two_point(self):
        d = HedgeDistribution(support=(0.25, 0.35), probs=(0.5, 0.5))
        assert d.mean() == pytest.approx(0.3)
        assert d.sample(0.49) == 0.25
        assert d.sample(0.51) == 0.35

    def test_validation(self):
        with pytest.raises(ValueError):
            HedgeDistribution(support=(0.1, 0.2), probs=(0.7, 0.7))
        with pytest.raises(ValueError):
            HedgeDistribution(support=(0.1, 0.2, 0.3), probs=(0.3, 0.3, 0.4))


class TestTracking:
    def test_empty_bin_returns_midpoint(self):
        st = TrackingState(scheme10())
        # 0.33 falls in [0.3, 0.4) whose midpoint is 0.35
        assert tracking_forecast(st, 0.33) == pytest.approx(0.35)

    def test_bin_history_average(self):
        st = TrackingState(scheme10())
        for y in (1.0, 1.0, 0.0):
            st = tracking_update(st, 0.72, y)
        assert tracking_forecast(st, 0.79) == pytest.approx(2.0 / 3.0)

    def test_reforecasting_above_expert(self):
        st = TrackingState(scheme10())
        # past average 0.85 in the expert's [0.7, 0.8) bin
        for y in (1.0, 1.0, 1.0, 1.0, 0.0) * 4:
            st = tracking_update(st, 0.75, y)
        assert tracking_forecast(st, 0.75) == pytest.approx(0.85, abs=0.051)

    def test_update_increments_only_expert_bin(self):
        st = TrackingState(scheme10())
        st2 = tracking_update(st, 0.75, 1.0)
        assert st2.counts[7] == 1.0 and st2.outcome_sums[7] == 1.0
        others = np.delete(np.arange(10), 7)
        assert np.all(st2.counts[others] == 0.0)
        st3 = tracking_update(st2, 0.72, 0.0)
        assert st3.counts[7] == 2.0 and st3.outcome_sums[7] == 1.0

    def test_run_matches_stepwise(self):
        rng = np.random.default_rng(0)
        expert = rng.random(400)
        ys = (rng.random(400) < expert).astype(float)
        batch = tracking_run(expert, ys, scheme10())
        st = TrackingState(scheme10())
        step = np.zeros(400)
        for t in range(400):
            step[t] = tracking_forecast(st, expert[t])
            st = tracking_update(st, expert[t], ys[t])
        assert np.array_equal(batch, step)


class TestF99:
    def test_fresh_state_forecasts_first_midpoint(self):
        st = F99State(scheme10())
        dist = f99_distribution(st)
        assert dist.support == (0.05,)
        assert dist.probs == (1.0,)

    def test_untouched_bins_satisfy_condition_a(self):
        # any bin initialized at its midpoint is inside [l_b, r_b]
        st = F99State(scheme10())
        st = f99_update(st, 0.05, 1.0)  # p_1 = 1 now; bin 2 untouched
        dist = f99_distribution(st)
        assert len(dist.support) == 1
        assert dist.support[0] == pytest.approx(0.15, abs=1e-12)

    def test_hand_built_hedge_case(self):
        # no bin satisfies condition A; bins 3/4 are the smallest
        # (excess, deficit) pair: p_3 = 0.35 (e=0.05), p_4 = 0.25 (d=0.05)
        st = F99State(scheme10())
        averages = [0.15, 0.25, 0.35, 0.25, 0.55, 0.65, 0.75, 0.85, 0.95, 0.8]
        st.counts[:] = 1.0
        st.outcome_sums[:] = averages
        dist = f99_distribution(st)
        assert dist.support == (pytest.approx(0.25), pytest.approx(0.35))
        assert dist.probs[0] == pytest.approx(0.5)
        assert dist.probs[1] == pytest.approx(0.5)

    def test_update_examples(self):
        st = F99State(scheme10())
        st = f99_update(st, 0.05, 1.0)
        assert st.observed_averages()[0] == 1.0
        assert st.deficits()[0] == pytest.approx(-1.0)
        assert st.excesses()[0] == pytest.approx(0.9)

    def test_update_running_mean(self):
        st = F99State(scheme10())
        st.counts[3] = 3.0
        st.outcome_sums[3] = 1.0  # mean 1/3
        st = f99_update(st, 0.35, 1.0)
        assert st.observed_averages()[3] == pytest.approx(0.5)

    def test_update_isolation(self):
        st = F99State(scheme10())
        st = f99_update(st, 0.45, 1.0)
        before = st.observed_averages().copy()
        st = f99_update(st, 0.45, 0.0)
        after = st.observed_averages()
        assert after[4] != before[4]
        mask = np.arange(10) != 4
        assert np.array_equal(after[mask], before[mask])

    def test_update_rejects_non_midpoint(self):
        with pytest.raises(ValueError):
            f99_update(F99State(scheme10()), 0.12, 1.0)

    def test_invariant_violation_raises(self):
        # corrupted state: every observed average above its right endpoint,
        # so no condition-A bin and no deficit to pair for condition B
        st = F99State(scheme10())
        st.counts[:] = 1.0
        st.outcome_sums[:] = st.scheme.right_edges() + 0.5
        with pytest.raises(CalibeatingInvariantError):
            f99_distribution(st)

    def test_forecast_consumes_one_uniform(self):
        st = F99State(scheme10())
        rng1 = np.random.default_rng(7)
        rng2 = np.random.default_rng(7)
        _, chosen = f99_forecast(st, rng1)
        assert chosen == 0.05
        rng2.random()
        # both generators advanced equally
        assert rng1.random() == rng2.random()

    def test_distribution_probs_valid_over_random_runs(self):
        rng = np.random.default_rng(11)
        st = F99State(scheme10())
        for _ in range(500):
            dist, chosen = f99_forecast(st, rng)
            assert all(p >= 0.0 for p in dist.probs)
            assert sum(dist.probs) == pytest.approx(1.0, abs=1e-12)
            st = f99_update(st, chosen, float(rng.integers(0, 2)))


class TestHops:
    def test_single_bin_expert_equals_standalone_f99(self):
        rng = np.random.default_rng(3)
        ys = (rng.random(300) < 0.4).astype(float)
        expert = np.full(300, 0.42)  # always bin 5
        h = hops_run(expert, ys, scheme10(), np.random.default_rng(9))
        f = f99_run(ys, scheme10(), np.random.default_rng(9))
        assert np.array_equal(h, f)

    def test_two_bin_partition(self):
        rng = np.random.default_rng(4)
        ys = (rng.random(400) < 0.5).astype(float)
        expert = np.where(np.arange(400) % 2 == 0, 0.25, 0.75)
        h = hops_run(expert, ys, scheme10(), np.random.default_rng(5))
        # each instance sees its own outcome subsequence: replaying the even
        # steps alone with the same uniforms reproduces the even forecasts
        us = np.random.default_rng(5).random(400)
        even = np.arange(400) % 2 == 0
        from opscal import kernels

        h_even = kernels.hops_pass(
            np.full(200, 0.25), ys[even], np.ascontiguousarray(us[even]), 0.1, 10
        )
        assert np.array_equal(h[even], h_even)

    def test_stepwise_matches_batched(self):
        rng = np.random.default_rng(6)
        expert = rng.random(300)
        ys = (rng.random(300) < expert).astype(float)
        batch = hops_run(expert, ys, scheme10(), np.random.default_rng(8))
        st = HopsState(scheme10())
        draw = np.random.default_rng(8)
        step = np.zeros(300)
        for t in range(300):
            step[t], st = hops_step(st, expert[t], ys[t], draw)
        assert np.array_equal(batch, step)

    def test_seeded_replay_is_bit_identical(self):
        rng = np.random.default_rng(10)
        expert = rng.random(500)
        ys = (rng.random(500) < 0.5).astype(float)
        a = hops_run(expert, ys, scheme10(), np.random.default_rng(123))
        b = hops_run(expert, ys, scheme10(), np.random.default_rng(123))
        assert np.array_equal(a, b)

    def test_forecasts_are_midpoints(self):
        rng = np.random.default_rng(12)
        expert = rng.random(400)
        ys = (rng.random(400) < expert).astype(float)
        h = hops_run(expert, ys, scheme10(), np.random.default_rng(1))
        mids = scheme10().midpoints()
        assert np.all(np.isin(h, mids))


class TestClimatology:
    def test_constant_ones_converges_to_top_midpoint(self):
        tr = climatology_run(np.ones(2000), 0.1, np.random.default_rng(0))
        assert float(np.mean(tr.forecasts["F99"][-200:])) == pytest.approx(0.95, abs=1e-9)

    def test_bernoulli_stream_tracks_base_rate(self):
        rng = np.random.default_rng(42)
        ys = (rng.random(5000) < 0.37).astype(float)
        tr = climatology_run(ys, 0.1, np.random.default_rng(1))
        assert abs(float(np.mean(tr.forecasts["F99"][-1000:])) - 0.37) <= 0.05

    def test_alternating_stream_settles_near_half(self):
        ys = np.tile([0.0, 1.0], 2500)
        tr = climatology_run(ys, 0.1, np.random.default_rng(2))
        assert abs(float(np.mean(tr.forecasts["F99"][-1000:])) - 0.5) <= 0.05

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            climatology_run(np.zeros(0), 0.1, np.random.default_rng(0))


class TestCalibeatingGuarantees:
    def _expert_stream(self, seed, T=4000):
        rng = np.random.default_rng(seed)
        from opscal.scalers import online_scaler_run

        scores = rng.uniform(0.01, 0.99, T)
        truth = np.clip(scores + 0.15 * np.sin(np.arange(T) / 200.0), 0.01, 0.99)
        ys = (rng.random(T) < truth).astype(float)
        expert, _ = online_scaler_run(scores, ys, "platt")
        return expert, ys

    def test_tracking_sharpness_bound_per_run(self):
        # deterministic per-run guarantee, all three tested bin widths
        for eps in (0.05, 0.1, 0.2):
            scheme = BinningScheme(eps)
            for seed in range(3):
                expert, ys = self._expert_stream(seed)
                tracked = tracking_run(expert, ys, scheme)
                T = len(ys)
                lhs = sharpness(tracked, ys, scheme)
                rhs = sharpness(expert, ys, scheme) - tracking_sharpness_slack(eps, T)
                assert lhs >= rhs - 1e-12

    def test_hedging_sharpness_bound_in_expectation(self):
        eps = 0.1
        scheme = BinningScheme(eps)
        expert, ys = self._expert_stream(100)
        T = len(ys)
        gaps = []
        for seed in range(40):
            hedged = hops_run(expert, ys, scheme, np.random.default_rng(seed))
            gaps.append(sharpness(hedged, ys, scheme))
        mean_shp = float(np.mean(gaps))
        bound = sharpness(expert, ys, scheme) - hedging_sharpness_slack(eps, T)
        assert mean_shp >= bound - 0.01

    def test_hedged_forecasts_calibrated_on_hostile_stream(self):
        # outcomes always opposite in sign to the expert keep the expert
        # miscalibrated; hedging still reaches low CE
        scheme = BinningScheme(0.1)
        rng = np.random.default_rng(0)
        expert = rng.uniform(0.6, 0.9, 6000)
        ys = np.zeros(6000)
        ces = []
        for seed in range(10):
            h = hops_run(expert, ys, scheme, np.random.default_rng(seed))
            ces.append(calibration_error(h, ys, scheme))
        assert float(np.mean(ces)) <= 0.1
        assert calibration_error(expert, ys, scheme) >= 0.6
