"""Campaign orchestrator: seeded parameter sampling, trials, aggregation.

A trial is X baseline runs, then X runs with a live stressor, compared
with the Mann-Whitney U test.  `any_signal` means the one-sided p (stress
increases re-orderings) cleared alpha with the stressed mean above the
baseline mean; a signal is `reliable` when the CLES is 1.0, i.e. every
stressed sample exceeded every baseline sample.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from . import stats
from .backends import default_backend
from .litmus import build_test, canonical_name
from .perpetual import PERPETUAL_TESTS, PerpetualParams, run_perpetual
from .runner import BasicParams, run_basic
from .simdevice import ConditionProfile, SimDevice, SimScript
from .stress import (
    LINE_SIZES,
    MAX_PATTERN_LEN,
    MemoryStressConfig,
    StressProcess,
    ThreadLaunchStressConfig,
    config_from_dict,
)

FRAMEWORKS = ("basic", "perpetual", "simulated")
STRESS_KINDS = ("memory", "thread-launch")
DEFAULT_ALPHA = 0.05
DEFAULT_RUNS_PER_SIDE = 10
DEFAULT_BUDGET_S = 8 * 3600.0


class TrialInvalidError(RuntimeError):
    """The trial could not run (e.g. the stressor failed to start)."""


@dataclass(frozen=True)
class TrialConfig:
    framework: str
    test: str
    listener: BasicParams | PerpetualParams | None
    stress: MemoryStressConfig | ThreadLaunchStressConfig
    runs_per_side: int = DEFAULT_RUNS_PER_SIDE
    pinning: tuple[int, int] | None = None
    seed: int = 0
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if self.framework not in FRAMEWORKS:
            raise ValueError(f"framework must be one of {FRAMEWORKS}")
        name = canonical_name(self.test)
        if self.framework == "perpetual" and name not in PERPETUAL_TESTS:
            raise ValueError(f"perpetual framework supports {PERPETUAL_TESTS}, not {name}")
        if self.runs_per_side < 2:
            raise ValueError("runs_per_side must be at least 2")
        object.__setattr__(self, "test", name)

    @property
    def stress_kind(self) -> str:
        return self.stress.kind

    def params_json(self) -> str:
        listener = None
        if isinstance(self.listener, BasicParams):
            listener = {"index_x": self.listener.index_x, "index_y": self.listener.index_y,
                        "buffer_len": self.listener.buffer_len,
                        "iterations": self.listener.iterations}
        elif isinstance(self.listener, PerpetualParams):
            listener = {"index_x": self.listener.index_x, "index_y": self.listener.index_y,
                        "rounds": self.listener.rounds,
                        "log_capacity": self.listener.log_capacity}
        return json.dumps({"listener": listener, "stress": self.stress.to_dict(),
                           "pinning": list(self.pinning) if self.pinning else None,
                           "seed": self.seed}, sort_keys=True)


@dataclass(frozen=True)
class TrialResult:
    config: TrialConfig
    baseline: tuple[float, ...]
    stressed: tuple[float, ...]
    u: float
    p: float  # one-sided: stressed > baseline
    cles: float
    any_signal: bool
    reliable: bool
    pct_increase: float


def percent_increase(baseline_mean: float, stressed_mean: float) -> float:
    """Percent increase with the zero-baseline rule: a baseline mean below
    one observation is treated as 1 to avoid infinite percentages."""
    base = baseline_mean if baseline_mean >= 1.0 else 1.0
    return 100.0 * (stressed_mean - base) / base


def evaluate_trial(config: TrialConfig, baseline, stressed) -> TrialResult:
    """Apply the trial statistics to collected sample sets."""
    b = [float(v) for v in baseline]
    s = [float(v) for v in stressed]
    u, p = stats.mann_whitney_u(s, b, alternative="greater")
    effect = stats.cles(s, b)
    reliable = effect == 1.0
    # a reliable signal counts as a signal even when the sample sets are
    # too small for the rank test to clear alpha (only possible at X = 2)
    any_signal = (p < config.alpha and (np.mean(s) > np.mean(b))) or reliable
    return TrialResult(
        config=config,
        baseline=tuple(b),
        stressed=tuple(s),
        u=u,
        p=p,
        cles=effect,
        any_signal=bool(any_signal),
        reliable=bool(reliable),
        pct_increase=percent_increase(float(np.mean(b)), float(np.mean(s))),
    )


def _listener_run(config: TrialConfig, backend) -> float:
    test = build_test(config.test)
    if config.framework == "basic":
        return float(run_basic(test, config.listener, backend=backend).reorders)
    result, _ = run_perpetual(config.test, config.listener, backend=backend)
    return float(result.reorders)


def run_trial(config: TrialConfig, device: SimDevice | None = None,
              backend=None, stressor_backend: str = "auto") -> TrialResult:
    """Run one trial: X baseline runs, spawn the stressor, X stressed runs.

    Simulated trials draw both sides from the device's condition profiles
    ('baseline' and the stress kind) and involve no processes.
    """
    if config.framework == "simulated":
        if device is None:
            raise ValueError("simulated trials need a sim device")
        baseline = device.sample_condition("baseline", config.runs_per_side)
        stressed = device.sample_condition(config.stress_kind, config.runs_per_side)
        return evaluate_trial(config, baseline, stressed)

    if backend is None:
        backend = default_backend()
    listener = config.listener
    if config.pinning is not None:
        listener = replace(listener, affinity=config.pinning)
        config = replace(config, listener=listener)

    baseline = [_listener_run(config, backend) for _ in range(config.runs_per_side)]
    try:
        stressor = StressProcess(config.stress, backend_name=stressor_backend).start()
    except OSError as exc:
        raise TrialInvalidError(str(exc)) from exc
    try:
        stressed = [_listener_run(config, backend) for _ in range(config.runs_per_side)]
    finally:
        stressor.stop()
    return evaluate_trial(config, baseline, stressed)


# ---------------------------------------------------------------------
# parameter sampling
# ---------------------------------------------------------------------

ITERS_PER_LINE_RANGE = (1, 1024)
STRIDE_RANGE = (1, 61)
LOOP_ITER_RANGE = (64, 65536)


def sample_stress(rng: np.random.Generator, stress_kind: str, cores: int | None = None):
    cores = cores or os.cpu_count() or 4
    if stress_kind == "memory":
        line_size = int(rng.choice(LINE_SIZES))
        # odd strides favored: they walk the whole line partition
        stride = int(rng.integers(STRIDE_RANGE[0], STRIDE_RANGE[1] + 1))
        if stride % 2 == 0 and rng.random() < 0.75:
            stride = max(1, stride - 1)
        pattern_len = int(rng.integers(1, MAX_PATTERN_LEN + 1))
        return MemoryStressConfig(
            line_size=line_size,
            thread_offset=int(rng.integers(0, line_size // 4)) * 4,
            iterations_per_line=int(rng.integers(*ITERS_PER_LINE_RANGE)),
            stride=stride,
            pattern=tuple(int(rng.integers(0, 2)) for _ in range(pattern_len)),
            num_threads=int(rng.integers(1, cores + 1)),
        )
    if stress_kind == "thread-launch":
        return ThreadLaunchStressConfig(
            num_threads=int(rng.integers(1, cores + 1)),
            loop_iterations=int(rng.integers(*LOOP_ITER_RANGE)),
        )
    raise ValueError(f"unknown stress kind {stress_kind!r}")


def sample_params(rng: np.random.Generator, framework: str, stress_kind: str,
                  test: str, iterations: int = 100_000,
                  buffer_len: int = 16384, pinning=None, cores=None,
                  runs_per_side: int = DEFAULT_RUNS_PER_SIDE,
                  alpha: float = DEFAULT_ALPHA) -> TrialConfig:
    """Draw one trial configuration; reproducible for a given generator state."""
    idx_x = int(rng.integers(0, buffer_len))
    idx_y = int(rng.integers(0, buffer_len - 1))
    if idx_y >= idx_x:
        idx_y += 1  # uniform over pairs with x != y
    stress_cfg = sample_stress(rng, stress_kind, cores=cores)
    seed = int(rng.integers(0, 2 ** 63))
    if framework == "basic":
        listener = BasicParams(index_x=idx_x, index_y=idx_y, buffer_len=buffer_len,
                               iterations=iterations)
    elif framework == "perpetual":
        listener = PerpetualParams(index_x=idx_x, index_y=idx_y,
                                   rounds=iterations, buffer_len=buffer_len)
    else:
        listener = None
    return TrialConfig(framework=framework, test=test, listener=listener,
                       stress=stress_cfg, runs_per_side=runs_per_side,
                       pinning=pinning, seed=seed, alpha=alpha)


# ---------------------------------------------------------------------
# campaign
# ---------------------------------------------------------------------

@dataclass
class CampaignPlan:
    frameworks: list[str]
    stresses: list[str]
    tests: list[str]
    trials: int  # per (framework, stress, test) cell
    seed: int = 0
    budget_s: float = DEFAULT_BUDGET_S
    runs_per_side: int = DEFAULT_RUNS_PER_SIDE
    iterations: int = 100_000
    pinning: tuple[int, int] | None = None
    alpha: float = DEFAULT_ALPHA
    sim_profiles: dict | None = None  # used when no sim script is given

    @classmethod
    def from_json(cls, text: str) -> "CampaignPlan":
        d = json.loads(text)
        return cls(
            frameworks=[f for f in d["frameworks"]],
            stresses=[s for s in d["stresses"]],
            tests=[canonical_name(t) for t in d["tests"]],
            trials=int(d["trials"]),
            seed=int(d.get("seed", 0)),
            budget_s=float(d.get("budget_s", DEFAULT_BUDGET_S)),
            runs_per_side=int(d.get("runs_per_side", DEFAULT_RUNS_PER_SIDE)),
            iterations=int(d.get("iterations", 100_000)),
            pinning=tuple(d["pinning"]) if d.get("pinning") else None,
            alpha=float(d.get("alpha", DEFAULT_ALPHA)),
            sim_profiles=d.get("sim_profiles"),
        )

    def applicable_tests(self, framework: str) -> list[str]:
        if framework == "perpetual":
            return [t for t in self.tests if t in PERPETUAL_TESTS]
        return list(self.tests)


TRIAL_CSV_HEADER = ("trial_id,framework,test,stress_kind,params_json,"
                    "b_samples,s_samples,u,p,cles,any,reliable,pct_increase")


def trial_csv_row(trial_id: int, r: TrialResult) -> str:
    b = ";".join(repr(v) for v in r.baseline)
    s = ";".join(repr(v) for v in r.stressed)
    params = r.config.params_json().replace('"', "'")
    return (f"{trial_id},{r.config.framework},{r.config.test},{r.config.stress_kind},"
            f"\"{params}\",{b},{s},{r.u!r},{r.p!r},{r.cles!r},"
            f"{int(r.any_signal)},{int(r.reliable)},{r.pct_increase!r}")


@dataclass(frozen=True)
class CellReport:
    framework: str
    stress: str
    pinning: str
    any_pct: float
    reliable_pct: float
    avg_increase: float
    max_increase: float
    avg_cles: float
    trials: int


@dataclass
class CampaignReport:
    cells: list[CellReport]
    total_trials: int
    invalid_trials: int = 0
    truncated: bool = False


def aggregate(rows: list[dict]) -> list[CellReport]:
    """Fold per-trial rows into per-(framework, stress, pinning) cells.

    Increase and CLES averages cover only the trials that showed a
    signal; cells without any signal report 0.
    """
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row["framework"], row["stress_kind"], row.get("pinning", "no"))
        groups.setdefault(key, []).append(row)
    cells = []
    for key in sorted(groups):
        members = groups[key]
        n = len(members)
        signals = [m for m in members if m["any"]]
        reliable = [m for m in members if m["reliable"]]
        increases = [m["pct_increase"] for m in signals]
        cells.append(CellReport(
            framework=key[0],
            stress=key[1],
            pinning=key[2],
            any_pct=100.0 * len(signals) / n,
            reliable_pct=100.0 * len(reliable) / n,
            avg_increase=float(np.mean(increases)) if increases else 0.0,
            max_increase=max(increases) if increases else 0.0,
            avg_cles=float(np.mean([m["cles"] for m in signals])) if signals else 0.0,
            trials=n,
        ))
    return cells


def _trial_row(trial_result: TrialResult, pinning_label: str) -> dict:
    return {
        "framework": trial_result.config.framework,
        "test": trial_result.config.test,
        "stress_kind": trial_result.config.stress_kind,
        "pinning": pinning_label,
        "any": trial_result.any_signal,
        "reliable": trial_result.reliable,
        "cles": trial_result.cles,
        "pct_increase": trial_result.pct_increase,
    }


def run_campaign(plan: CampaignPlan, store=None, device: SimDevice | None = None,
                 backend=None, stressor_backend: str = "auto",
                 progress=None) -> CampaignReport:
    """Execute the plan cell by cell, serially, honouring the time budget.

    Trials never run concurrently: stress isolation requires at most one
    stressor process alive at any time.  `store` (a report.ResultsStore)
    receives the per-trial CSV and the aggregate report.
    """
    rng = np.random.default_rng(plan.seed)
    if device is None and plan.sim_profiles is not None:
        script = SimScript(profiles={
            k: ConditionProfile.from_dict(v) for k, v in plan.sim_profiles.items()},
            seed=plan.seed)
        device = SimDevice(script, seed=plan.seed)

    pinning_label = "yes" if plan.pinning else "no"
    started = time.monotonic()
    rows: list[dict] = []
    results: list[TrialResult] = []
    invalid = 0
    truncated = False
    trial_id = 0

    for framework in plan.frameworks:
        for stress_kind in plan.stresses:
            for test in plan.applicable_tests(framework):
                for _ in range(plan.trials):
                    if time.monotonic() - started > plan.budget_s:
                        truncated = True
                        break
                    cfg = sample_params(
                        rng, framework, stress_kind, test,
                        iterations=plan.iterations, pinning=plan.pinning,
                        runs_per_side=plan.runs_per_side, alpha=plan.alpha)
                    try:
                        result = run_trial(cfg, device=device, backend=backend,
                                           stressor_backend=stressor_backend)
                    except TrialInvalidError:
                        invalid += 1
                        continue
                    results.append(result)
                    rows.append(_trial_row(result, pinning_label))
                    if store is not None:
                        store.append_trial_row(trial_csv_row(trial_id, result))
                    if progress is not None:
                        progress(trial_id, result)
                    trial_id += 1
                if truncated:
                    break
            if truncated:
                break
        if truncated:
            break

    report = CampaignReport(cells=aggregate(rows), total_trials=len(results),
                            invalid_trials=invalid, truncated=truncated)
    if store is not None:
        store.write_report(report)
    return report
