from __future__ import annotations

import time

import pytest

from actorsnap import snapfile
from actorsnap.bench.race import run_race


@pytest.mark.parametrize("threaded", [False, True])
def test_repair_on_reaches_continuation(threaded):
    out = run_race(repair=True, threaded=threaded)
    assert out.resolutions == 1
    assert out.promise_resolved
    assert out.reached == 2
    assert out.continued and not out.stalled


@pytest.mark.parametrize("threaded", [False, True])
def test_repair_off_stalls(threaded):
    out = run_race(repair=False, threaded=threaded)
    assert out.resolutions == 0
    assert not out.promise_resolved
    assert out.pending_continuations > 0
    assert out.stalled and not out.continued


def test_recorded_resolution_is_in_the_file():
    out = run_race(repair=True)
    sf = snapfile.read_snapshot(out.snapshot)
    assert len(sf.resolutions) == 1
    pref, vref, actor, state = sf.resolutions[0]
    assert state == 0
    assert sf.record(pref)[2][1] == 0          # promise serialized as unresolved
    assert sf.type_name(sf.record(vref)[0]) in ("RaceToken", "farref")
    assert snapfile.validate_snapshot(sf).ok


def test_race_is_fast_and_deterministic():
    t0 = time.perf_counter()
    a = run_race(repair=True)
    b = run_race(repair=True)
    assert time.perf_counter() - t0 < 1.0
    assert a.snapshot == b.snapshot
