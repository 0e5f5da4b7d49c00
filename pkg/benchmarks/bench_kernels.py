"""Compare the compiled codec kernels with the pure-Python fallback.

Micro-benchmarks call each kernel module directly; the end-to-end numbers
snapshot and restore a generated heap in a subprocess, once per
implementation, selected through ``ACTORSNAP_PURE``.

    python benchmarks/bench_kernels.py [--repeat 5] [--objects 10000]
"""

from __future__ import annotations

import argparse
import importlib
import json
import os
import random
import statistics
import subprocess
import sys
import time

IMPLS = ("actorsnap._kernels_py", "actorsnap._kernels")

LAYOUTS = bytes([0, 1, 2, 3, 4, 5, 7, 8, 9, 6])
ARITIES = (0, 0, 0, 0, 0, 0, 0, 0, 0, 2)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def micro(k, repeat: int) -> dict:
    rng = random.Random(1)
    pairs = [(rng.randrange(1 << 16), rng.randrange(1 << 48)) for _ in range(100_000)]
    words = [k.encode_ref(b, o) for b, o in pairs]

    def enc():
        e = k.encode_ref
        for b, o in pairs:
            e(b, o)

    def dec():
        d = k.decode_ref
        for w in words:
            d(w)

    def write():
        buf = k.ByteBuffer()
        for i in range(20_000):
            buf.rec_int(2, i)
            p = buf.rec_object(9, 2)
            buf.set_u64(p + 4, i)
            buf.rec_text(4, "flight")
        return buf

    data = write().getvalue()

    def scan():
        k.scan_records(data, 0, len(data), LAYOUTS, ARITIES)

    def parse():
        pos, end, parse_record = 0, len(data), k.parse_record
        while pos < end:
            pos = parse_record(data, pos, LAYOUTS, ARITIES)[3]

    return {name: best_of(fn, repeat) * 1e3 for name, fn in
            (("encode_ref_100k", enc), ("decode_ref_100k", dec), ("write_60k_records", write),
             ("scan_60k_records", scan), ("parse_60k_records", parse))}


END_TO_END = """
import json, time
from actorsnap import ActorSystem, kernels, snapfile
from actorsnap.bench import heapgen
from actorsnap.restore import load_snapshot
snap, rest = [], []
for i in range({repeat}):
    s = ActorSystem(); heapgen.define(s); heapgen.build_heap(s, 0, max_objects={objects})
    t0 = time.perf_counter(); s.trigger_snapshot(); data = s.await_snapshot().data
    snap.append(time.perf_counter() - t0)
    t = ActorSystem(); heapgen.define(t)
    t0 = time.perf_counter(); load_snapshot(data, t, validate=False); rest.append(time.perf_counter() - t0)
print(json.dumps({{"impl": kernels.IMPLEMENTATION, "bytes": len(data),
                  "snapshot_ms": min(snap) * 1e3, "restore_ms": min(rest) * 1e3}}))
"""


def end_to_end(pure: bool, repeat: int, objects: int) -> dict:
    env = dict(os.environ, ACTORSNAP_PURE="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(repeat=repeat, objects=objects)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--objects", type=int, default=10_000)
    a = ap.parse_args()

    results = {}
    for name in IMPLS:
        try:
            results[name.rsplit(".", 1)[1]] = micro(importlib.import_module(name), a.repeat)
        except ImportError:
            print(f"# {name} not built, skipped")
    names = list(results)
    print(f"{'kernel (ms, best of ' + str(a.repeat) + ')':<30}" + "".join(f"{n:>14}" for n in names)
          + (f"{'speedup':>10}" if len(names) == 2 else ""))
    for key in next(iter(results.values())):
        vals = [results[n][key] for n in names]
        line = f"{key:<30}" + "".join(f"{v:>14.2f}" for v in vals)
        if len(vals) == 2:
            line += f"{vals[0] / vals[1]:>9.2f}x"
        print(line)

    rows = [end_to_end(True, a.repeat, a.objects)]
    if "_kernels" in results:
        rows.append(end_to_end(False, a.repeat, a.objects))
    print()
    print(f"end to end, heap of up to {a.objects} objects")
    for r in rows:
        print(f"impl={r['impl']} bytes={r['bytes']} snapshot_ms={r['snapshot_ms']:.1f} "
              f"restore_ms={r['restore_ms']:.1f}")
    if len(rows) == 2:
        print(f"snapshot_speedup={rows[0]['snapshot_ms'] / rows[1]['snapshot_ms']:.2f} "
              f"restore_speedup={rows[0]['restore_ms'] / rows[1]['restore_ms']:.2f}")


if __name__ == "__main__":
    main()
