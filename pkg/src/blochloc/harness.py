"""Experiment matrix runner, outcome classification and statistics reports.

One trial = (program, input, fault-or-control, backend, approach).  The
measurement pass runs once per trial; verdicts for every threshold replay
the same recorded measurements, which is exactly equivalent to separate
runs because all sampling streams are derived per (segment, qubit, axis).

Classification is per executed segment: a positive is a segment-level
FAIL, the fault is present only at its own segment, and segments skipped
by Bloq's early exit contribute nothing.  Per-record F1 values are the
samples feeding the grouped statistics.

CSV rows are deterministic per root seed except for the wall-clock
``runtime_ms`` column.
"""

from __future__ import annotations

import io
import csv
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .assertions import (
    BloqTrace,
    LocalizationVerdict,
    ProqTrace,
    measure_bloq,
    measure_proq,
    validate_threshold,
)
from .circuits import Circuit, ProgramSpec
from .faults import FaultSpec, enumerate_faults, fault_observable, inject
from .schemes import build_program_circuit, build_scheme
from .simulator import BackendConfig
from .stats import bootstrap_ci, mann_whitney_u, vargha_delaney

APPROACHES = ("bloq", "proq")
DEFAULT_THRESHOLDS = tuple(range(26))
DEFAULT_GROUPINGS = ("program", "qubits", "fault_segment", "fault_category")

CSV_COLUMNS = [
    "program", "n", "input", "approach", "backend", "threshold",
    "fault_category", "fault_type", "fault_segment",
    "verdict", "verdict_segment", "verdict_qubit",
    "tp", "fp", "tn", "fn",
    "runtime_ms", "depth_executed", "shots_used", "seed",
]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def f1_score(counts: ConfusionCounts) -> float:
    """2TP / (2TP + FP + FN); defined as 0 when the denominator vanishes."""
    denom = 2 * counts.tp + counts.fp + counts.fn
    return 2.0 * counts.tp / denom if denom else 0.0


def classify(
    verdict: LocalizationVerdict, truth: FaultSpec | None, k_total: int
) -> ConfusionCounts:
    """Per-executed-segment confusion counts for one trial."""
    seg_failed: dict[int, bool] = {}
    for outcome in verdict.assertions:
        seg_failed[outcome.k] = seg_failed.get(outcome.k, False) or outcome.verdict == "fail"
    tp = fp = tn = fn = 0
    for k, failed in seg_failed.items():
        present = truth is not None and truth.segment == k
        if failed and present:
            tp += 1
        elif failed:
            fp += 1
        elif present:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, tn, fn)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment matrix: programs x inputs x faults x backends x
    approaches x thresholds, all seeded from ``root_seed``."""

    programs: tuple[tuple[str, int], ...]  # (kind, n) pairs
    inputs: tuple[str, ...] | None = None  # None -> all 2^n basis strings
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    shots: int = 8192
    backends: tuple[BackendConfig, ...] = (BackendConfig.ideal(),)
    approaches: tuple[str, ...] = APPROACHES
    root_seed: int = 0

    def __post_init__(self):
        if not self.programs or not self.backends or not self.approaches:
            raise ConfigError("programs, backends and approaches must be non-empty")
        for kind, n in self.programs:
            if kind not in ("qft", "grover"):
                raise ConfigError(f"unknown program kind {kind!r}")
            if n < 2:
                raise ConfigError(f"qubit count {n} too small")
        for t in self.thresholds:
            if not 0 <= t <= 100:
                raise ConfigError(f"threshold {t} outside [0, 100]")
        if not self.thresholds:
            raise ConfigError("thresholds must be non-empty")
        for a in self.approaches:
            if a not in APPROACHES:
                raise ConfigError(f"unknown approach {a!r}")
        if self.shots < 0:
            raise ConfigError("shots must be >= 0 (0 = analytic)")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            programs = []
            for p in d["programs"]:
                for n in p.get("n_values", [p.get("n")]):
                    programs.append((p["kind"], int(n)))
            backends = tuple(
                BackendConfig.from_dict(b) for b in d.get("backends", [{"mode": "ideal"}])
            )
            inputs = d.get("inputs")
            return cls(
                programs=tuple(programs),
                inputs=tuple(inputs) if inputs is not None else None,
                thresholds=tuple(d.get("thresholds", DEFAULT_THRESHOLDS)),
                shots=int(d.get("shots", 8192)),
                backends=backends,
                approaches=tuple(d.get("approaches", APPROACHES)),
                root_seed=int(d.get("root_seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid experiment config: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "programs": [{"kind": k, "n_values": [n]} for k, n in self.programs],
            "inputs": list(self.inputs) if self.inputs is not None else None,
            "thresholds": list(self.thresholds),
            "shots": self.shots,
            "backends": [b.to_dict() for b in self.backends],
            "approaches": list(self.approaches),
            "root_seed": self.root_seed,
        }


@dataclass
class TrialRecord:
    """One (trial, threshold) result row."""

    program: str
    n: int
    input: str
    approach: str
    backend: str
    threshold: float
    fault: FaultSpec | None
    observable: bool | None
    verdict: LocalizationVerdict | None
    counts: ConfusionCounts
    runtime_ms: float
    seed: int
    error: str | None = None

    def f1(self) -> float:
        return f1_score(self.counts)

    def to_row(self) -> dict:
        v = self.verdict
        return {
            "program": self.program,
            "n": self.n,
            "input": self.input,
            "approach": self.approach,
            "backend": self.backend,
            "threshold": self.threshold,
            "fault_category": self.fault.category if self.fault else "",
            "fault_type": (self.fault.gate or "") if self.fault else "",
            "fault_segment": self.fault.segment + 1 if self.fault else "",
            "verdict": "error" if self.error else v.result,
            "verdict_segment": "" if self.error or v.segment is None else v.segment + 1,
            "verdict_qubit": "" if self.error or v.qubit is None else v.qubit,
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "tn": self.counts.tn,
            "fn": self.counts.fn,
            "runtime_ms": f"{self.runtime_ms:.3f}",
            "depth_executed": "" if self.error else v.depth_executed,
            "shots_used": "" if self.error else v.shots_used,
            "seed": self.seed,
        }

    def to_dict(self) -> dict:
        d = self.to_row()
        d["observable"] = self.observable
        d["fault"] = self.fault.to_dict() if self.fault else None
        d["verdict_detail"] = self.verdict.to_dict() if self.verdict else None
        d["error"] = self.error
        return d


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint64)[0] >> 1)


def _iter_program_specs(cfg: ExperimentConfig):
    for kind, n in cfg.programs:
        if cfg.inputs is not None:
            inputs = [j for j in cfg.inputs if len(j) == n]
        else:
            inputs = [format(v, f"0{n}b") for v in range(1 << n)]
        for j in inputs:
            yield ProgramSpec(kind, n, j)


def run_matrix(cfg: ExperimentConfig, on_error: str = "record") -> list[TrialRecord]:
    """Run the full experiment matrix.

    Per trial the measurements are sampled once and assessed at every
    configured threshold; the control (no-fault) variant is always included
    for FP/TN accounting.  Per-trial errors are recorded, not fatal.
    """
    records: list[TrialRecord] = []
    for program in _iter_program_specs(cfg):
        base = build_program_circuit(program)
        kind_id = 0 if program.kind == "qft" else 1
        input_id = int(program.input, 2)
        fault_seed = _derive_seed(cfg.root_seed, 7, kind_id, program.n, input_id)
        variants: list[FaultSpec | None] = [None] + list(enumerate_faults(base, fault_seed))
        for fault_idx, fault in enumerate(variants):
            mutant = inject(base, fault) if fault else base
            observable = fault_observable(base, mutant) if fault else None
            for b_idx, backend_cfg in enumerate(cfg.backends):
                for a_idx, approach in enumerate(cfg.approaches):
                    seed = _derive_seed(
                        cfg.root_seed, kind_id, program.n, input_id, fault_idx, b_idx, a_idx
                    )
                    backend = backend_cfg.with_seed(seed)
                    try:
                        trace: BloqTrace | ProqTrace
                        if approach == "bloq":
                            trace = measure_bloq(
                                mutant, build_scheme(program), backend, cfg.shots
                            )
                        else:
                            trace = measure_proq(mutant, backend, cfg.shots)
                        for t in cfg.thresholds:
                            verdict = trace.verdict_at(t)
                            records.append(TrialRecord(
                                program.kind, program.n, program.input, approach,
                                backend.mode, t, fault, observable, verdict,
                                classify(verdict, fault, mutant.num_segments),
                                trace.runtime_ms_at(t), seed,
                            ))
                    except Exception as exc:  # per-trial isolation
                        if on_error == "raise":
                            raise
                        for t in cfg.thresholds:
                            records.append(TrialRecord(
                                program.kind, program.n, program.input, approach,
                                backend.mode, t, fault, observable, None,
                                ConfusionCounts(), 0.0, seed, error=str(exc),
                            ))
    return records


# ---------------------------------------------------------------------------
# CSV and reports
# ---------------------------------------------------------------------------


def rows_from_records(records) -> list[dict]:
    return [r.to_row() for r in records]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def rows_from_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def _row_f1(row: dict) -> float:
    tp, fp, fn = int(row["tp"]), int(row["fp"]), int(row["fn"])
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


_GROUP_KEYS = {
    "program": lambda r: r["program"],
    "qubits": lambda r: int(r["n"]),
    "fault_segment": lambda r: int(r["fault_segment"]) if r["fault_segment"] != "" else None,
    "fault_category": lambda r: r["fault_category"] or None,
}


@dataclass
class GroupStats:
    grouping: str
    value: object
    backend: str
    approach_stats: dict  # approach -> {mean_f1, ci_lo, ci_hi, ci_half_width, count}
    mwu_p: float | None = None
    a12: float | None = None
    magnitude: str | None = None
    better: str | None = None
    significant: bool | None = None

    def to_dict(self) -> dict:
        d = {
            "grouping": self.grouping,
            "value": self.value,
            "backend": self.backend,
            "mwu_p": self.mwu_p,
            "a12": self.a12,
            "magnitude": self.magnitude,
            "better": self.better,
            "significant": self.significant,
        }
        for approach, st in self.approach_stats.items():
            for key, val in st.items():
                d[f"{approach}_{key}"] = val
        return d


def _ci_seed(*parts) -> int:
    return zlib.crc32("|".join(str(p) for p in parts).encode())


def report(rows, groupings=DEFAULT_GROUPINGS, resamples: int = 2000) -> list[GroupStats]:
    """Grouped mean F1 with bootstrap CI plus Bloq-vs-Proq comparison.

    Significance requires both p <= 0.05 and a magnitude above negligible.
    Rows with errors are skipped; empty groupings are omitted.
    """
    rows = [r for r in rows if r.get("verdict") != "error"]
    if not rows:
        raise ValueError("report needs at least one successful record")
    out: list[GroupStats] = []
    for grouping in groupings:
        key_fn = _GROUP_KEYS[grouping]
        cells: dict[tuple, list[float]] = {}
        for r in rows:
            value = key_fn(r)
            if value is None:  # controls don't belong to fault groupings
                continue
            cells.setdefault((value, r["backend"], r["approach"]), []).append(_row_f1(r))
        seen = sorted({(value, backend) for value, backend, _ in cells})
        for value, backend in seen:
            stats: dict[str, dict] = {}
            for approach in APPROACHES:
                samples = cells.get((value, backend, approach))
                if not samples:
                    continue
                lo, hi = bootstrap_ci(
                    samples, resamples=resamples,
                    seed=_ci_seed(grouping, value, backend, approach),
                )
                stats[approach] = {
                    "mean_f1": float(np.mean(samples)),
                    "ci_lo": lo,
                    "ci_hi": hi,
                    "ci_half_width": (hi - lo) / 2.0,
                    "count": len(samples),
                }
            gs = GroupStats(grouping, value, backend, stats)
            if "bloq" in stats and "proq" in stats:
                a = cells[(value, backend, "bloq")]
                b = cells[(value, backend, "proq")]
                gs.mwu_p = mann_whitney_u(a, b)
                gs.a12, gs.magnitude = vargha_delaney(a, b)
                gs.better = "bloq" if gs.a12 > 0.5 else ("proq" if gs.a12 < 0.5 else None)
                gs.significant = bool(gs.mwu_p <= 0.05 and gs.magnitude != "N")
                if not gs.significant:
                    gs.better = None
            out.append(gs)
    return out


def threshold_sweep(rows, resamples: int = 2000) -> list[dict]:
    """Mean F1 per (approach, backend, threshold) with bootstrap CI."""
    rows = [r for r in rows if r.get("verdict") != "error"]
    cells: dict[tuple, list[float]] = {}
    for r in rows:
        cells.setdefault((r["approach"], r["backend"], float(r["threshold"])), []).append(
            _row_f1(r)
        )
    out = []
    for (approach, backend, t), samples in sorted(cells.items()):
        lo, hi = bootstrap_ci(
            samples, resamples=resamples, seed=_ci_seed("sweep", approach, backend, t)
        )
        out.append({
            "approach": approach,
            "backend": backend,
            "threshold": t,
            "mean_f1": float(np.mean(samples)),
            "ci_lo": lo,
            "ci_hi": hi,
            "count": len(samples),
        })
    return out


def _order_stats(values) -> dict:
    arr = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])  # linear interpolation
    return {
        "mean": float(arr.mean()),
        "median": float(med),
        "iqr": float(q3 - q1),
        "q1": float(q1),
        "q3": float(q3),
    }


def runtime_depth_stats(rows) -> list[dict]:
    """Runtime and executed-depth order statistics per approach/program/backend.

    Thresholds share one measurement pass, so each trial contributes a
    single runtime/depth observation (taken at the lowest threshold).
    """
    rows = [r for r in rows if r.get("verdict") != "error"]
    per_trial: dict[tuple, dict] = {}
    for r in rows:
        key = (
            r["program"], r["backend"], r["approach"], r["n"], r["input"],
            r["fault_category"], r["fault_type"], r["fault_segment"], r["seed"],
        )
        t = float(r["threshold"])
        if key not in per_trial or t < per_trial[key][0]:
            per_trial[key] = (
                t, float(r["runtime_ms"]), float(r["depth_executed"]),
            )
    cells: dict[tuple, list[tuple[float, float]]] = {}
    for key, (_, runtime, depth) in per_trial.items():
        program, backend, approach = key[0], key[1], key[2]
        cells.setdefault((program, backend, approach), []).append((runtime, depth))
    out = []
    for (program, backend, approach), vals in sorted(cells.items()):
        runtimes = [v[0] for v in vals]
        depths = [v[1] for v in vals]
        entry = {"program": program, "backend": backend, "approach": approach,
                 "trials": len(vals)}
        entry.update({f"runtime_{k}": v for k, v in _order_stats(runtimes).items()})
        entry.update({f"depth_{k}": v for k, v in _order_stats(depths).items()})
        out.append(entry)
    return out
