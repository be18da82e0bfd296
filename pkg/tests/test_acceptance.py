"""Acceptance suite: one test per criterion, printing a PASS line each.

Hardware re-ordering observation is never asserted anywhere here; the
property-based and simulated-device checks are the gate, with hardware
mode exercised only as a non-gating smoke run.
"""

import itertools
import time
from pathlib import Path

import numpy as np
import pytest

from disorder import backends, channel, fingerprint, stats
from disorder.archaware import FrameLayout, SimChannel, send_message, verify_frame_eviction
from disorder.fuzz import CampaignPlan, TrialConfig, run_campaign, run_trial
from disorder.litmus import CONVENTIONS, TEST_NAMES, build_test, check_reorder, interleaving_outcomes
from disorder.report import ResultsStore, parse_report_csv
from disorder.runner import BasicParams, run_basic
from disorder.simdevice import ConditionProfile, SimDevice, SimScript
from disorder.stress import MemoryStressConfig


def announce(capsys, criterion, detail):
    with capsys.disabled():
        print(f"[acceptance] {criterion}: PASS ({detail})")


def sim_device(profiles, seed):
    script = SimScript(profiles={k: ConditionProfile(*v) for k, v in profiles.items()},
                       seed=seed)
    return SimDevice(script, seed=seed)


def test_criterion_1_litmus_soundness(capsys):
    started = time.monotonic()
    for name in TEST_NAMES:
        for convention in CONVENTIONS:
            test = build_test(name, convention)
            assert not any(check_reorder(test, s)
                           for s in interleaving_outcomes(test))
    params = BasicParams(index_x=0, index_y=1, iterations=1_000_000)
    for name in TEST_NAMES:
        result = run_basic(build_test(name), params,
                           backend=backends.SequentialShimBackend())
        assert result.reorders == 0
    elapsed = time.monotonic() - started
    assert elapsed < 10.0
    announce(capsys, "1 litmus soundness",
             f"6 tests x 2 conventions, 10^6 shim iterations each, {elapsed:.1f}s")


def test_criterion_2_stats_oracle_equivalence(capsys):
    values = 6  # observations drawn from {0..5}
    multisets = []
    for size in range(1, 7):
        multisets.extend(itertools.combinations_with_replacement(range(values), size))
    counts = np.zeros((len(multisets), values))
    for i, ms in enumerate(multisets):
        for v in ms:
            counts[i, v] += 1

    # pair-count route: U[i, j] = sum_u,v ca[u] cb[v] (u > v, ties half)
    grid = np.zeros((values, values))
    for u in range(values):
        for v in range(values):
            grid[u, v] = 1.0 if u > v else (0.5 if u == v else 0.0)
    u_pairs = counts @ grid @ counts.T

    # midrank route: R_a from cumulative counts, U = R_a - na(na+1)/2
    cum_excl = np.cumsum(counts, axis=1) - counts
    sizes = counts.sum(axis=1)
    self_term = (counts * cum_excl).sum(axis=1) + (counts * (counts + 1) / 2).sum(axis=1)
    weights = cum_excl + counts / 2
    rank_sums = self_term[:, None] + counts @ weights.T
    u_ranks = rank_sums - (sizes * (sizes + 1) / 2)[:, None]

    assert np.abs(u_pairs - u_ranks).max() < 1e-9

    lists = [list(ms) for ms in multisets]
    n = len(multisets)
    for i in range(n):
        a = lists[i]
        na = sizes[i]
        for j in range(n):
            b = lists[j]
            nm = na * sizes[j]
            u_impl, _ = stats.mann_whitney_u(a, b)
            cles_impl = stats.cles(a, b)
            assert abs(u_impl - u_pairs[i, j]) < 1e-9
            assert abs(cles_impl - u_ranks[i, j] / nm) < 1e-9
            assert abs(u_impl - cles_impl * nm) < 1e-9
    announce(capsys, "2 stats oracle equivalence",
             f"{n}x{n} multiset pairs from {{0..5}}, both routes to 1e-9")


def test_criterion_3_trial_calibration(capsys):
    started = time.monotonic()
    trials = 2000

    identical = {"baseline": (437.5, 141.0), "memory": (437.5, 141.0)}
    hits = 0
    for seed in range(trials):
        cfg = TrialConfig(framework="simulated", test="MP", listener=None,
                          stress=MemoryStressConfig(), seed=seed)
        result = run_trial(cfg, device=sim_device(identical, seed))
        hits += result.any_signal
    rate = hits / trials
    assert 0.03 <= rate <= 0.07

    arm = {"baseline": (437.5, 141.0), "memory": (5859.1, 1469.9)}
    reliable = 0
    for seed in range(trials):
        cfg = TrialConfig(framework="simulated", test="MP", listener=None,
                          stress=MemoryStressConfig(), seed=seed)
        reliable += run_trial(cfg, device=sim_device(arm, seed)).reliable
    reliable_rate = reliable / trials
    assert reliable_rate >= 0.99

    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    announce(capsys, "3 trial calibration",
             f"alpha rate {rate:.3f}, reliable rate {reliable_rate:.3f}, {elapsed:.1f}s")


def test_criterion_4_covert_channel_loopback(capsys):
    started = time.monotonic()
    floors = {"arm": 93.0, "m1": 94.0, "x86": 97.0, "m3gpu": 94.0}
    windows = {"arm": 5, "m1": 5, "x86": 5, "m3gpu": 3}
    summary = []
    for name, floor in floors.items():
        profile = channel.load_preset(name)
        assert profile.window_size == windows[name]
        rng = np.random.default_rng(20260801)
        accuracies = []
        for k in range(10):
            bits = channel.random_bits(104, rng)
            result = channel.loopback(bits, profile, seed=7000 + k)
            accuracies.append(channel.accuracy(bits, result.bits))
        mean_acc = float(np.mean(accuracies))
        assert mean_acc >= floor, f"{name}: {mean_acc:.2f} < {floor}"
        summary.append(f"{name} {mean_acc:.1f}%")
    elapsed = time.monotonic() - started
    assert elapsed < 300.0
    announce(capsys, "4 covert channel loopback",
             ", ".join(summary) + f", {elapsed:.1f}s")


def test_criterion_5_fingerprint_pipeline(capsys):
    rng = np.random.default_rng(17)
    std = 20.0
    means = {"alexnet": 100.0, "googlenet": 200.0, "mobilenet": 300.0,
             "resnet50": 400.0, "vgg16": 408.0}  # one deliberately close pair
    classes = {lab: np.rint(rng.normal(m, std, 4000)).clip(min=0)
               for lab, m in means.items()}
    ds = fingerprint.FingerprintDataset(classes=classes, n_train=2000)
    result = fingerprint.evaluate(ds, sizes=(30, 100), trials=1000, seed=5)

    separated = ("alexnet", "googlenet", "mobilenet")
    for lab in separated:
        assert result.accuracy[100][lab] >= 0.80
    assert result.overall[30] <= result.overall[100]

    flat = {lab: np.rint(rng.normal(250.0, std, 4000)).clip(min=0)
            for lab in means}
    chance = fingerprint.evaluate(
        fingerprint.FingerprintDataset(classes=flat, n_train=2000),
        sizes=(100,), trials=1000, seed=6)
    assert 0.15 <= chance.overall[100] <= 0.25

    announce(capsys, "5 fingerprint pipeline",
             f"z=100 separated accs "
             f"{[round(result.accuracy[100][lab], 2) for lab in separated]}, "
             f"z30 {result.overall[30]:.2f} <= z100 {result.overall[100]:.2f}, "
             f"chance {chance.overall[100]:.2f}")


def test_criterion_6_archaware_sim_loopback(capsys):
    layout = FrameLayout()  # 48KB / 12-way / 64B lines, 15-iteration frames
    assert layout.geo.sets == 64 and layout.channels == 63
    assert layout.frame_iterations == 15

    rng = np.random.default_rng(4242)
    for k in range(1000):
        bits = "".join(rng.choice(["0", "1"], size=62))
        assert verify_frame_eviction(bits, layout, k)

    accuracies = []
    for k in range(10):
        bits = "".join(rng.choice(["0", "1"], size=104))
        decoded = send_message(bits, SimChannel(layout, seed=900 + k))
        accuracies.append(stats.edit_accuracy(bits, decoded))
    mean_acc = float(np.mean(accuracies))
    assert mean_acc >= 94.0
    announce(capsys, "6 archaware sim loopback",
             f"1000 frames set-exact, 104-bit accuracy {mean_acc:.1f}%")


def test_criterion_7_reproducibility(capsys, tmp_path):
    plan_kwargs = dict(
        frameworks=["simulated"], stresses=["memory", "thread-launch"],
        tests=["MP", "SB"], trials=5, seed=31337, budget_s=300.0,
        sim_profiles={"baseline": {"mean": 437.5, "std": 141.0},
                      "memory": {"mean": 5859.1, "std": 1469.9},
                      "thread-launch": {"mean": 800.0, "std": 90.0}})
    digests = []
    for run in ("a", "b"):
        store = ResultsStore(tmp_path / run, seed=31337, device="sim")
        run_campaign(CampaignPlan(**plan_kwargs), store=store)
        artifacts = sorted(p for p in (tmp_path / run).iterdir()
                           if p.name != "manifest.json")
        digests.append([(p.name, p.read_bytes()) for p in artifacts])
    assert digests[0] == digests[1]
    names = [name for name, _ in digests[0]]
    announce(capsys, "7 reproducibility",
             f"byte-identical artifacts across runs: {names}")


def test_criterion_8_hardware_smoke_non_gating(capsys, tmp_path):
    # Scaled-down stand-in for the 30-minute mini-campaign: same pipeline,
    # real threads and a live stressor process, tiny trial counts.  Observed
    # re-ordering counts are recorded, never asserted.
    started = time.monotonic()
    iterations = 150 if backends.HAVE_COMPILED else 30
    plan = CampaignPlan(
        frameworks=["basic"], stresses=["memory", "thread-launch"],
        tests=["SB", "R"], trials=1, seed=8, budget_s=600.0,
        runs_per_side=3, iterations=iterations)
    store = ResultsStore(tmp_path / "hw", seed=8, device="hw")
    report = run_campaign(plan, store=store)
    assert report.total_trials == 4 and not report.truncated
    cells = parse_report_csv((tmp_path / "hw" / "report.csv").read_text())
    assert len(cells) == 2  # one row per stress kind
    for cell in cells:
        assert cell.trials == 2
        assert cell.reliable_pct <= cell.any_pct
    rows = (tmp_path / "hw" / "trials.csv").read_text().strip().splitlines()
    assert len(rows) == 5  # header + 4 recorded trials
    elapsed = time.monotonic() - started
    announce(capsys, "8 hardware smoke (non-gating)",
             f"4 trials with live stressors in {elapsed:.1f}s, counts recorded")
