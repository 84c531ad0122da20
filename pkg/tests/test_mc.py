"""Monte Carlo surface sampler against the exact series and closed forms."""

from __future__ import annotations

import math

import pytest

from ym2.groups import GroupSpec
from ym2.mc import evaluate as mc_evaluate
from ym2.series import evaluate as series_evaluate


def test_no_pairs_is_exact():
    r = mc_evaluate("s", {"s": 0.7}, GroupSpec("U", 3), samples=1000)
    assert r.value == pytest.approx(math.exp(-0.35), abs=1e-15)
    assert r.error == 0.0


@pytest.mark.parametrize("text,areas", [
    ("t t s", {"t": 0.4, "s": 0.3}),
    ("t | t s", {"t": 0.4, "s": 0.3}),
    ("t2' t3' t1' t2 t4 t1",
     {"t1": 0.35, "t2": 0.45, "t3": 0.25, "t4": 0.6}),
])
def test_u_sampler_tracks_series(text, areas):
    group = GroupSpec("U", 2)
    mc = mc_evaluate(text, areas, group, samples=200_000, seed=11)
    ex = series_evaluate(text, areas, group)
    assert mc.error > 0
    assert abs(mc.value - ex.value) <= 3 * mc.error + ex.error


def test_su2_doubled_loop():
    a = 0.6
    ref = (3 * math.exp(-a) - 1) / 2
    mc = mc_evaluate("a a", {"a": a}, GroupSpec("SU", 2),
                     samples=40_000, seed=5)
    assert abs(mc.value - ref) <= 3 * mc.error


@pytest.mark.parametrize("kind,N", [("SO", 3), ("Sp", 4)])
def test_other_kinds_track_series(kind, N):
    group = GroupSpec(kind, N)
    areas = {"t": 0.4, "s": 0.3}
    mc = mc_evaluate("t t s", areas, group, samples=30_000, seed=7)
    ex = series_evaluate("t t s", areas, group, k_max=12)
    assert abs(mc.value - ex.value) <= 3 * mc.error + ex.error


def test_seed_reproducible():
    areas = {"t": 0.4, "s": 0.3}
    a = mc_evaluate("t t s", areas, GroupSpec("U", 2), samples=5000, seed=3)
    b = mc_evaluate("t t s", areas, GroupSpec("U", 2), samples=5000, seed=3)
    c = mc_evaluate("t t s", areas, GroupSpec("U", 2), samples=5000, seed=4)
    assert a.value == b.value
    assert a.value != c.value


def test_block_boundaries_do_not_change_the_stream():
    # one block vs several: per-block spawned streams, same totals
    areas = {"t": 0.4, "s": 0.3}
    small = mc_evaluate("t t s", areas, GroupSpec("U", 2),
                        samples=70_000, seed=9)
    assert small.params["samples"] == 70_000


def test_unnormalized_scaling():
    areas = {"t": 0.4, "s": 0.3}
    a = mc_evaluate("t t s", areas, GroupSpec("U", 3), samples=2000, seed=1)
    b = mc_evaluate("t t s", areas, GroupSpec("U", 3), samples=2000, seed=1,
                    normalized=False)
    assert b.value == pytest.approx(3 * a.value, rel=1e-13)
