"""Application fingerprinting over re-ordering observation streams.

Collect a few thousand observations per candidate application class, split
into train/test halves in collection order, then classify fresh samples by
the best Welch t-test fit against the training sets.  A time-series
capture mode records counts at a fixed iteration granularity for
launch-event detection.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .stats import t_test_independent

DEFAULT_OBSERVATIONS = 4000
DEFAULT_TRAIN = 2000


@dataclass
class FingerprintDataset:
    """Per-class observation lists; the first n_train form the training set."""

    classes: dict[str, np.ndarray]
    n_train: int = DEFAULT_TRAIN
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for label, obs in self.classes.items():
            self.classes[label] = np.asarray(obs, dtype=float)
            if len(self.classes[label]) <= self.n_train:
                raise ValueError(f"class {label!r} has no test observations "
                                 f"beyond the first {self.n_train}")

    @property
    def labels(self) -> list[str]:
        return sorted(self.classes)

    def train(self, label: str) -> np.ndarray:
        return self.classes[label][:self.n_train]

    def test(self, label: str) -> np.ndarray:
        return self.classes[label][self.n_train:]

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for label in self.labels:
            with open(directory / f"{label}.csv", "w", encoding="utf-8") as fh:
                fh.write("observation\n")
                for v in self.classes[label]:
                    fh.write(f"{float(v)!r}\n")
        manifest = {"n_train": self.n_train, "classes": self.labels, "meta": self.meta}
        with open(directory / "dataset.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, directory) -> "FingerprintDataset":
        directory = Path(directory)
        with open(directory / "dataset.json", "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        classes = {}
        for label in manifest["classes"]:
            with open(directory / f"{label}.csv", "r", encoding="utf-8") as fh:
                next(fh)
                classes[label] = np.asarray([float(line) for line in fh if line.strip()])
        return cls(classes=classes, n_train=int(manifest["n_train"]),
                   meta=manifest.get("meta", {}))


def collect_class(stream, n: int = DEFAULT_OBSERVATIONS) -> tuple[np.ndarray, bool]:
    """Pull n observations in collection order.

    Returns (observations, complete); a source that dries up mid-collection
    yields a flagged partial result instead of an error.
    """
    out = []
    complete = True
    it = iter(stream)
    for _ in range(n):
        try:
            out.append(float(next(it)))
        except StopIteration:
            complete = False
            break
    return np.asarray(out, dtype=float), complete


def classify(sample, training: dict[str, np.ndarray]) -> str:
    """Label whose training set fits the sample best (max Welch p).

    Ties go to the lexicographically smallest label; if every p underflows
    to zero the nearest training mean decides.
    """
    if len(sample) < 2:
        raise ValueError("samples need at least two observations")
    sample = np.asarray(sample, dtype=float)
    best_label = None
    best_p = -1.0
    for label in sorted(training):
        p = t_test_independent(sample, training[label])
        if p > best_p:
            best_label, best_p = label, p
    if best_p == 0.0:
        mean = float(np.mean(sample))
        return min(sorted(training),
                   key=lambda lab: abs(float(np.mean(training[lab])) - mean))
    return best_label


@dataclass
class EvalResult:
    accuracy: dict[int, dict[str, float]]  # size -> label -> per-class accuracy
    overall: dict[int, float]
    confusion: dict[int, dict[str, dict[str, int]]]
    trials: int


def evaluate(dataset: FingerprintDataset, sizes=(30, 100), trials: int = 1000,
             seed: int = 0) -> EvalResult:
    """Monte-Carlo classification accuracy per sample size.

    Each trial picks one class uniformly, draws z test observations
    without replacement from its held-out half, and classifies against
    every training set.
    """
    rng = np.random.default_rng(seed)
    labels = dataset.labels
    training = {lab: dataset.train(lab) for lab in labels}
    accuracy: dict[int, dict[str, float]] = {}
    overall: dict[int, float] = {}
    confusion: dict[int, dict[str, dict[str, int]]] = {}
    for z in sizes:
        for lab in labels:
            if z > len(dataset.test(lab)):
                raise ValueError(f"sample size {z} exceeds test set of {lab!r}")
        conf = {lab: {other: 0 for other in labels} for lab in labels}
        picks = {lab: 0 for lab in labels}
        correct = 0
        for _ in range(trials):
            lab = labels[int(rng.integers(len(labels)))]
            test_set = dataset.test(lab)
            idx = rng.choice(len(test_set), size=z, replace=False)
            predicted = classify(test_set[idx], training)
            picks[lab] += 1
            conf[lab][predicted] += 1
            if predicted == lab:
                correct += 1
        accuracy[z] = {lab: (conf[lab][lab] / picks[lab] if picks[lab] else 0.0)
                       for lab in labels}
        overall[z] = correct / trials if trials else 0.0
        confusion[z] = conf
    return EvalResult(accuracy=accuracy, overall=overall, confusion=confusion,
                      trials=trials)


@dataclass
class TimeSeries:
    """Timestamped re-ordering counts sampled at a fixed iteration interval."""

    samples: list[tuple[float, float]]
    interval_iterations: int = 1000

    def __post_init__(self):
        stamps = [t for t, _ in self.samples]
        if any(b < a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("timestamps must be monotone")

    def to_csv(self) -> str:
        lines = ["timestamp,reorders"]
        for t, v in self.samples:
            lines.append(f"{float(t)!r},{float(v)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, interval_iterations: int = 1000) -> "TimeSeries":
        samples = []
        for line in text.splitlines()[1:]:
            if not line.strip():
                continue
            t, v = line.split(",")
            samples.append((float(t), float(v)))
        return cls(samples=samples, interval_iterations=interval_iterations)


def capture_timeseries(stream, n_samples: int, interval_iterations: int = 1000,
                       clock=None) -> TimeSeries:
    """Record (timestamp, count) pairs; sim streams get a synthetic clock."""
    samples = []
    it = iter(stream)
    synthetic = clock is None
    for k in range(n_samples):
        try:
            v = float(next(it))
        except StopIteration:
            break
        t = float(k) if synthetic else clock()
        samples.append((t, v))
    return TimeSeries(samples=samples, interval_iterations=interval_iterations)


def watch_clock():
    """Monotonic wall clock for hardware captures."""
    start = time.monotonic()
    return lambda: time.monotonic() - start
