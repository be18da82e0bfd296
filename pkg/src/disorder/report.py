"""Result persistence and report emission.

A results store is one directory with an append-only manifest plus CSV
artifacts.  Timestamps live only in the manifest so the data files stay
byte-reproducible for a fixed seed.
"""

from __future__ import annotations

import csv
import io
import json
import time
from pathlib import Path

import numpy as np

from .fuzz import TRIAL_CSV_HEADER, CampaignReport, CellReport, aggregate

REPORT_CSV_HEADER = ("framework,stress,pinning,any_pct,reliable_pct,"
                     "avg_increase,max_increase,avg_cles,trials")


class ResultsStore:
    """Directory-backed artifact store with an append-only manifest."""

    def __init__(self, root, seed: int | None = None, device: str = "hw"):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.root / "manifest.json"
        if self.manifest_path.exists():
            with open(self.manifest_path, "r", encoding="utf-8") as fh:
                self.manifest = json.load(fh)
        else:
            from . import __version__
            self.manifest = {
                "tool_version": __version__,
                "seed": seed,
                "device": device,
                "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                "events": [],
                "artifacts": [],
            }
            self._flush_manifest()
        self._trials_path = self.root / "trials.csv"

    def _flush_manifest(self):
        with open(self.manifest_path, "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def record_event(self, text: str):
        self.manifest["events"].append(
            {"at": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "event": text})
        self._flush_manifest()

    def add_artifact(self, name: str):
        if name not in self.manifest["artifacts"]:
            self.manifest["artifacts"].append(name)
            self._flush_manifest()

    def path(self, name: str) -> Path:
        return self.root / name

    def write_text(self, name: str, text: str):
        with open(self.root / name, "w", encoding="utf-8") as fh:
            fh.write(text)
        self.add_artifact(name)

    def append_trial_row(self, row: str):
        new = not self._trials_path.exists()
        with open(self._trials_path, "a", encoding="utf-8") as fh:
            if new:
                fh.write(TRIAL_CSV_HEADER + "\n")
            fh.write(row + "\n")
        if new:
            self.add_artifact("trials.csv")

    def write_report(self, report: CampaignReport):
        self.write_text("report.csv", report_csv(report))
        self.write_text("report.md", report_markdown(report))

    def verify(self) -> bool:
        """Every artifact referenced by the manifest exists on disk."""
        return all((self.root / name).exists() for name in self.manifest["artifacts"])


def report_csv(report: CampaignReport) -> str:
    lines = [REPORT_CSV_HEADER]
    for c in report.cells:
        lines.append(f"{c.framework},{c.stress},{c.pinning},{c.any_pct!r},"
                     f"{c.reliable_pct!r},{c.avg_increase!r},{c.max_increase!r},"
                     f"{c.avg_cles!r},{c.trials}")
    return "\n".join(lines) + "\n"


def report_markdown(report: CampaignReport) -> str:
    out = ["| Framework | Stress | Pinning | Any % | Reliable % | "
           "Avg. Increase % | Max Increase % | CLES (Avg.) | Trials |",
           "|---|---|---|---|---|---|---|---|---|"]
    for c in report.cells:
        out.append(f"| {c.framework} | {c.stress} | {c.pinning} | {c.any_pct:.2f} | "
                   f"{c.reliable_pct:.2f} | {c.avg_increase:.0f} | {c.max_increase:.0f} | "
                   f"{c.avg_cles:.2f} | {c.trials} |")
    if report.truncated:
        out.append("")
        out.append(f"Budget exhausted after {report.total_trials} trials (truncated).")
    if report.invalid_trials:
        out.append("")
        out.append(f"Invalid (aborted) trials: {report.invalid_trials}.")
    return "\n".join(out) + "\n"


def report_from_trials_csv(path) -> CampaignReport:
    """Recompute the aggregate report from the raw per-trial rows."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for record in csv.DictReader(fh):
            params = json.loads(record["params_json"].replace("'", '"'))
            rows.append({
                "framework": record["framework"],
                "test": record["test"],
                "stress_kind": record["stress_kind"],
                "pinning": "yes" if params.get("pinning") else "no",
                "any": record["any"] == "1",
                "reliable": record["reliable"] == "1",
                "cles": float(record["cles"]),
                "pct_increase": float(record["pct_increase"]),
            })
    return CampaignReport(cells=aggregate(rows), total_trials=len(rows))


def parse_report_csv(text: str) -> list[CellReport]:
    cells = []
    for record in csv.DictReader(io.StringIO(text)):
        cells.append(CellReport(
            framework=record["framework"],
            stress=record["stress"],
            pinning=record["pinning"],
            any_pct=float(record["any_pct"]),
            reliable_pct=float(record["reliable_pct"]),
            avg_increase=float(record["avg_increase"]),
            max_increase=float(record["max_increase"]),
            avg_cles=float(record["avg_cles"]),
            trials=int(record["trials"]),
        ))
    return cells


def histogram_csv(values, bins: int = 30) -> str:
    """Bin per-run re-ordering counts for external plotting."""
    counts, edges = np.histogram(np.asarray(list(values), dtype=float), bins=bins)
    lines = ["bin_left,bin_right,count"]
    for i, count in enumerate(counts):
        lines.append(f"{float(edges[i])!r},{float(edges[i + 1])!r},{int(count)}")
    return "\n".join(lines) + "\n"


def runs_csv_reorders(path) -> list[float]:
    """Read the `reorders` column from a runner CSV."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for record in csv.DictReader(fh):
            out.append(float(record["reorders"]))
    return out
