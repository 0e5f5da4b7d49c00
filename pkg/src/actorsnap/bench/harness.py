"""Iteration harness for the message-passing benchmarks.

Every iteration runs a benchmark to completion in a fresh actor system and
self-checks its result. With an every-k policy, every k-th iteration also
takes one snapshot, either right after setup (before the workload burst is
generated) or once a number of turns have run (during the burst), and the
iteration only ends once the snapshot is on disk.
"""

from __future__ import annotations

import csv
import os
import statistics
import time
from dataclasses import dataclass, field

from ..runtime import ActorSystem
from .programs import PROGRAMS, Program

PLACEMENTS = ("before", "during")


@dataclass
class BenchConfig:
    name: str
    iterations: int = 10
    warmup: int | None = None
    workers: int = 0
    every_k: int | None = None
    out: str | None = None
    seed: int | None = None
    scale: str = "full"
    params: dict = field(default_factory=dict)
    placement: str = "during"
    during_turns: int = 200
    batch: int | None = None

    def __post_init__(self) -> None:
        if self.name not in PROGRAMS:
            raise ValueError(f"unknown benchmark {self.name!r}; known: {', '.join(PROGRAMS)}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.warmup is None:
            self.warmup = self.iterations // 10
        if not 0 <= self.warmup < self.iterations:
            raise ValueError("warmup discard must be smaller than the iteration count")
        if self.every_k is not None and self.every_k < 1:
            raise ValueError("snapshot interval must be >= 1")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")
        if self.scale not in ("full", "small"):
            raise ValueError("scale must be 'full' or 'small'")

    @property
    def program(self) -> Program:
        return PROGRAMS[self.name]

    def program_params(self) -> dict:
        base = self.program.params if self.scale == "full" else self.program.small
        return {**base, **self.params}

    @property
    def policy(self) -> str:
        return f"every-k:{self.every_k}" if self.every_k else "none"


@dataclass
class IterationRow:
    iteration: int
    warmup: bool
    wall_ms: float
    result_ok: bool
    turns: int
    snapshot_id: int = 0
    snapshot_bytes: int = 0
    captured_messages: int = 0
    snapshot_ms: float = 0.0
    path: str = ""

    FIELDS = ("iteration", "warmup", "wall_ms", "result_ok", "turns", "snapshot_id",
              "snapshot_bytes", "captured_messages", "snapshot_ms")

    def row(self) -> list:
        return [self.iteration, int(self.warmup), f"{self.wall_ms:.3f}", int(self.result_ok), self.turns,
                self.snapshot_id, self.snapshot_bytes, self.captured_messages, f"{self.snapshot_ms:.3f}"]


@dataclass
class BenchResult:
    config: BenchConfig
    rows: list[IterationRow]

    @property
    def measured(self) -> list[IterationRow]:
        return self.rows[self.config.warmup:]

    @property
    def all_ok(self) -> bool:
        return all(r.result_ok for r in self.rows)

    @property
    def snapshot_paths(self) -> list[str]:
        return [r.path for r in self.rows if r.path]

    def summary(self) -> dict:
        ms = [r.wall_ms for r in self.measured]
        snaps = [r for r in self.rows if r.snapshot_id]
        return {
            "benchmark": self.config.name,
            "iterations": self.config.iterations,
            "warmup_discarded": self.config.warmup,
            "workers": self.config.workers,
            "snapshot_policy": self.config.policy,
            "placement": self.config.placement,
            "mean_ms": f"{statistics.fmean(ms):.3f}",
            "median_ms": f"{statistics.median(ms):.3f}",
            "min_ms": f"{min(ms):.3f}",
            "max_ms": f"{max(ms):.3f}",
            "snapshots": len(snaps),
            "snapshot_bytes_max": max((r.snapshot_bytes for r in snaps), default=0),
            "captured_messages_max": max((r.captured_messages for r in snaps), default=0),
            "self_check": "pass" if self.all_ok else "fail",
        }


def _run_iteration(cfg: BenchConfig, i: int, snap_path: str | None, snap_no: int) -> IterationRow:
    prog = cfg.program
    params = cfg.program_params()
    seed = None if cfg.seed is None else cfg.seed + i
    s = ActorSystem(cfg.workers, seed=seed, batch=cfg.batch)
    try:
        prog.define(s)
        take = snap_no > 0
        st_box: list = []

        def trigger(_actor=None) -> None:
            s.turn_end_hook = None
            st_box.append(s.trigger_snapshot(snap_path))

        if take and cfg.placement == "during":
            count = [0]

            def hook(_actor) -> None:
                count[0] += 1
                if count[0] == cfg.during_turns and not st_box:
                    trigger()

            s.turn_end_hook = hook
        t0 = time.perf_counter()
        handle = prog.setup(s, params)
        if take and cfg.placement == "before":
            trigger()
        s.run()
        if take and not st_box:
            # the workload finished before the turn threshold
            trigger()
        st = s.await_snapshot() if take else None
        s.wait_idle()
        wall = time.perf_counter() - t0
        ok, _, _ = prog.check(s, handle, params)
        if s.failures:
            ok = False
        turns = sum(a.turns for a in s.actors.values())
    finally:
        s.shutdown()
    row = IterationRow(i, i < cfg.warmup, wall * 1e3, ok, turns)
    if st is not None:
        row.snapshot_id = snap_no
        row.snapshot_bytes = st.size
        row.captured_messages = len(st.messages)
        row.snapshot_ms = (st.finished_at - st.triggered_at) * 1e3
        row.path = st.path or ""
    return row


def run_benchmark(cfg: BenchConfig) -> BenchResult:
    """Run all iterations and, with an output directory, write ``<name>.csv``,
    ``<name>-summary.txt`` and ``snap-<k>.asnp`` files."""
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
    rows = []
    snaps = 0
    for i in range(cfg.iterations):
        snap_no = 0
        path = None
        if cfg.every_k and (i + 1) % cfg.every_k == 0:
            snaps += 1
            snap_no = snaps
            if cfg.out:
                path = os.path.join(cfg.out, f"snap-{snaps}.asnp")
        rows.append(_run_iteration(cfg, i, path, snap_no))
    res = BenchResult(cfg, rows)
    if cfg.out:
        write_csv(os.path.join(cfg.out, f"{cfg.name}.csv"), IterationRow.FIELDS, [r.row() for r in rows])
        write_summary(os.path.join(cfg.out, f"{cfg.name}-summary.txt"), res.summary())
    return res


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def write_summary(path: str, summary: dict) -> None:
    with open(path, "w") as f:
        for k, v in summary.items():
            f.write(f"{k}={v}\n")


@dataclass
class OverheadRow:
    name: str
    base_ms: float
    snap_ms: float
    snapshots: int
    max_bytes: int
    max_captured: int
    ok: bool

    FIELDS = ("benchmark", "baseline_ms", "snapshot_ms", "ratio", "snapshots", "snapshot_bytes_max",
              "captured_messages_max", "self_check")

    @property
    def ratio(self) -> float:
        return self.snap_ms / self.base_ms if self.base_ms > 0 else float("nan")

    def row(self) -> list:
        return [self.name, f"{self.base_ms:.3f}", f"{self.snap_ms:.3f}", f"{self.ratio:.3f}", self.snapshots,
                self.max_bytes, self.max_captured, "pass" if self.ok else "fail"]


def overhead_table(names=None, iterations: int = 10, every_k: int = 2, out: str | None = None,
                   **kw) -> list[OverheadRow]:
    """Mean warmed-up iteration time without and with every-k snapshotting."""
    rows = []
    for name in names or PROGRAMS:
        base = run_benchmark(BenchConfig(name, iterations, every_k=None, **kw))
        snap_out = os.path.join(out, name) if out else None
        snap = run_benchmark(BenchConfig(name, iterations, every_k=every_k, out=snap_out, **kw))
        sm = snap.summary()
        rows.append(OverheadRow(
            name,
            statistics.fmean(r.wall_ms for r in base.measured),
            statistics.fmean(r.wall_ms for r in snap.measured),
            sm["snapshots"], sm["snapshot_bytes_max"], sm["captured_messages_max"],
            base.all_ok and snap.all_ok,
        ))
    if out:
        os.makedirs(out, exist_ok=True)
        write_csv(os.path.join(out, "overhead.csv"), OverheadRow.FIELDS, [r.row() for r in rows])
    return rows


def format_table(rows: list[OverheadRow]) -> str:
    head = f"{'benchmark':<14}{'base ms':>10}{'snap ms':>10}{'ratio':>8}{'snaps':>7}{'max bytes':>11}{'captured':>10}  check"
    lines = [head]
    for r in rows:
        lines.append(f"{r.name:<14}{r.base_ms:>10.2f}{r.snap_ms:>10.2f}{r.ratio:>8.2f}{r.snapshots:>7}"
                     f"{r.max_bytes:>11}{r.max_captured:>10}  {'pass' if r.ok else 'fail'}")
    return "\n".join(lines)
