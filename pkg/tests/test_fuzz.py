import numpy as np
import pytest

from disorder.fuzz import (
    CampaignPlan,
    TrialConfig,
    evaluate_trial,
    percent_increase,
    run_campaign,
    run_trial,
    sample_params,
    trial_csv_row,
)
from disorder.runner import BasicParams
from disorder.simdevice import ConditionProfile, SimDevice, SimScript
from disorder.stress import LINE_SIZES, MemoryStressConfig, ThreadLaunchStressConfig


def sim_device(profiles, seed=0):
    script = SimScript(profiles={k: ConditionProfile(*v) for k, v in profiles.items()},
                       seed=seed)
    return SimDevice(script, seed=seed)


ARM_PROFILES = {"baseline": (437.5, 141.0), "memory": (5859.1, 1469.9)}


def sim_config(seed=0, stress=None, runs=10):
    return TrialConfig(framework="simulated", test="MP", listener=None,
                       stress=stress or MemoryStressConfig(),
                       runs_per_side=runs, seed=seed)


class TestConfig:
    def test_perpetual_test_compatibility(self):
        with pytest.raises(ValueError):
            TrialConfig(framework="perpetual", test="2+2W", listener=None,
                        stress=MemoryStressConfig())

    def test_runs_per_side_minimum(self):
        with pytest.raises(ValueError):
            sim_config(runs=1)

    def test_unknown_framework(self):
        with pytest.raises(ValueError):
            TrialConfig(framework="litmus7", test="MP", listener=None,
                        stress=MemoryStressConfig())


class TestStatsPlumbing:
    def test_percent_increase_zero_baseline_rule(self):
        assert percent_increase(0.0, 5.0) == 400.0

    def test_percent_increase_normal(self):
        assert percent_increase(10.0, 25.0) == 150.0

    def test_reliable_requires_full_separation(self):
        r = evaluate_trial(sim_config(runs=3), [1, 2, 3], [10, 20, 30])
        assert r.any_signal and r.reliable and r.cles == 1.0
        r2 = evaluate_trial(sim_config(runs=3), [1, 2, 30], [10, 20, 31])
        assert not r2.reliable
        assert r2.reliable <= r2.any_signal

    def test_signal_needs_the_right_direction(self):
        r = evaluate_trial(sim_config(runs=3), [10, 20, 30], [1, 2, 3])
        assert not r.any_signal

    def test_reliable_implies_any_signal_even_at_two_runs(self):
        r = evaluate_trial(sim_config(runs=2), [1, 2], [10, 20])
        assert r.reliable and r.any_signal


class TestSampling:
    def test_fixed_seed_reproduces_config(self):
        a = sample_params(np.random.default_rng(5), "basic", "memory", "MP")
        b = sample_params(np.random.default_rng(5), "basic", "memory", "MP")
        assert a == b

    def test_indices_always_differ(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            cfg = sample_params(rng, "basic", "memory", "SB")
            assert cfg.listener.index_x != cfg.listener.index_y

    def test_line_size_coverage(self):
        rng = np.random.default_rng(2)
        seen = {sample_params(rng, "simulated", "memory", "MP").stress.line_size
                for _ in range(10_000)}
        assert seen == set(LINE_SIZES)

    def test_thread_launch_ranges(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            cfg = sample_params(rng, "simulated", "thread-launch", "MP")
            assert isinstance(cfg.stress, ThreadLaunchStressConfig)
            assert 64 <= cfg.stress.loop_iterations <= 65536


class TestSimulatedTrials:
    def test_arm_profiles_give_reliable_signals(self):
        reliable = 0
        for seed in range(300):
            device = sim_device(ARM_PROFILES, seed=seed)
            r = run_trial(sim_config(seed=seed), device=device)
            reliable += r.reliable
        assert reliable / 300 >= 0.98

    def test_simulated_needs_device(self):
        with pytest.raises(ValueError):
            run_trial(sim_config())


class TestHardwareTrial:
    def test_basic_trial_with_live_stressor(self):
        from disorder.stress import live_stressor_count
        listener = BasicParams(index_x=0, index_y=512, iterations=150)
        cfg = TrialConfig(framework="basic", test="SB", listener=listener,
                          stress=MemoryStressConfig(num_threads=2),
                          runs_per_side=2, seed=9)
        result = run_trial(cfg)
        assert len(result.baseline) == 2 and len(result.stressed) == 2
        assert live_stressor_count() == 0


class TestCampaign:
    def plan(self, trials=3, **kwargs):
        defaults = dict(frameworks=["simulated"], stresses=["memory"],
                        tests=["MP"], trials=trials, seed=42, budget_s=300.0,
                        runs_per_side=10,
                        sim_profiles={k: {"mean": m, "std": s}
                                      for k, (m, s) in ARM_PROFILES.items()})
        defaults.update(kwargs)
        return CampaignPlan(**defaults)

    def test_empty_plan_empty_report(self):
        report = run_campaign(self.plan(trials=0))
        assert report.cells == [] and report.total_trials == 0

    def test_small_sim_campaign(self):
        report = run_campaign(self.plan(trials=20))
        assert report.total_trials == 20
        cell = report.cells[0]
        assert cell.trials == 20
        assert cell.reliable_pct <= cell.any_pct
        assert cell.reliable_pct >= 95.0

    def test_budget_truncation(self):
        report = run_campaign(self.plan(trials=50, budget_s=0.0))
        assert report.truncated and report.total_trials == 0

    def test_perpetual_cells_filter_tests(self):
        plan = self.plan(tests=["MP", "2+2W"])
        assert plan.applicable_tests("perpetual") == ["MP"]
        assert plan.applicable_tests("basic") == ["MP", "2+2W"]

    def test_plan_json_round_trip(self):
        plan = self.plan()
        text = (
            '{"frameworks": ["simulated"], "stresses": ["memory"], '
            '"tests": ["MP"], "trials": 3, "seed": 42, "budget_s": 300.0, '
            '"runs_per_side": 10, "sim_profiles": {"baseline": '
            '{"mean": 437.5, "std": 141.0}, "memory": '
            '{"mean": 5859.1, "std": 1469.9}}}'
        )
        assert CampaignPlan.from_json(text) == plan

    def test_trial_csv_row_field_count(self):
        device = sim_device(ARM_PROFILES)
        result = run_trial(sim_config(), device=device)
        row = trial_csv_row(0, result)
        import csv
        import io
        parsed = next(csv.reader(io.StringIO(row)))
        assert len(parsed) == 13
