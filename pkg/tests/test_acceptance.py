"""Acceptance gate: the package's end-to-end promises, each with its
tolerance pinned.

Covers the closed-form regression table, four-engine agreement, the named
limit checks (N=1, planar), the SU transport, the area-derivative identity
at a crossing, the planar triple agreement, the forest-polynomial oracles,
the topology kernel, and the 1/N^2 convergence rate.  One test pins a
variant of the SU crossing identity that the engines contradict; it is
expected to fail (see /root/notes/decisions.md).

Runtime is dominated by the table sweep (~3 min) and the holonomy
simulations (~5 min).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from ym2.groups import REL_I, REL_II, GroupSpec
from ym2.masterfield import (ForestPolynomial, forest_polynomial,
                             master_field, master_field_nc_series,
                             poisson_forest_estimate)
from ym2.series import evaluate, makeenko_migdal_check, n1_value, su_from_u
from ym2.surfaces import Layout, chi_all_type_one, cycles_batch, glue
from ym2.tables import (ONE_CROSSING_WORD, TRIPLE_WIND_WORD, computed_rows,
                        one_crossing_value)
from ym2.words import parse_word
from ym2 import holonomy, mc, walk

GRID = (0.2, 0.5, 1.0)
N_VALUES = (2, 3)

ENGINE_SUITE = ("s", "t t s", ONE_CROSSING_WORD, TRIPLE_WIND_WORD,
                "u t u u t s")
SUITE_AREAS = {w: {l: 0.25 for l in parse_word(w).letters}
               for w in ENGINE_SUITE}


# -- closed-form table, full area grid ------------------------------------


@pytest.mark.parametrize("N", N_VALUES)
@pytest.mark.parametrize("row", computed_rows(), ids=lambda r: f"row{r.index}")
def test_table_reproduction(row, N):
    group = GroupSpec("U", N)
    for combo in itertools.product(GRID, repeat=len(row.variables)):
        areas = dict(zip(row.variables, combo))
        res = evaluate(row.word, areas, group, budget=12_000_000,
                       tail_target=1e-9)
        assert res.params["k_max"] <= 24
        ref = row.closed_form(areas, N)
        assert abs(res.value - ref) <= 1e-6 + res.error, (areas, res.value,
                                                          ref)


# -- four engines, one suite ----------------------------------------------


def _series_value(word, N):
    return evaluate(word, SUITE_AREAS[word], GroupSpec("U", N),
                    tail_target=1e-10).value


@pytest.mark.parametrize("N", N_VALUES)
@pytest.mark.parametrize("word",
                         [w for w in ENGINE_SUITE if "'" not in w])
def test_series_vs_walk(word, N):
    ref = _series_value(word, N)
    res = walk.evaluate(word, SUITE_AREAS[word], GroupSpec("U", N))
    assert abs(res.value - ref) <= 1e-8


@pytest.mark.parametrize("N", N_VALUES)
@pytest.mark.parametrize("word", ENGINE_SUITE)
def test_series_vs_mc(word, N):
    ref = _series_value(word, N)
    res = mc.evaluate(word, SUITE_AREAS[word], GroupSpec("U", N),
                      samples=1_000_000, seed=5)
    assert abs(res.value - ref) <= 3 * res.error + 1e-12


@pytest.mark.parametrize("N", N_VALUES)
@pytest.mark.parametrize("word", ENGINE_SUITE)
def test_series_vs_holonomy(word, N):
    ref = _series_value(word, N)
    res = holonomy.evaluate(word, SUITE_AREAS[word], GroupSpec("U", N),
                            J=200, samples=100_000, seed=5)
    assert abs(res.value - ref) <= 3 * res.error


# -- one-crossing closed form ----------------------------------------------

ONE_CROSSING_POINTS = (
    {"t1": 0.2, "t2": 0.2, "t3": 0.2, "t4": 0.2},
    {"t1": 0.5, "t2": 0.3, "t3": 0.1, "t4": 0.4},
    {"t1": 1.0, "t2": 0.2, "t3": 0.6, "t4": 0.3},
    {"t1": 0.7, "t2": 0.7, "t3": 0.7, "t4": 0.7},
    {"t1": 0.1, "t2": 1.2, "t3": 0.3, "t4": 0.2},
    {"t1": 0.9, "t2": 0.4, "t3": 1.0, "t4": 0.8},
)


@pytest.mark.parametrize("N", N_VALUES)
@pytest.mark.parametrize("areas", ONE_CROSSING_POINTS,
                         ids=lambda a: "-".join(str(v) for v in a.values()))
def test_one_crossing_closed_form(areas, N):
    res = evaluate(ONE_CROSSING_WORD, areas, GroupSpec("U", N),
                   tail_target=1e-10)
    assert abs(res.value - one_crossing_value(areas, N)) <= 1e-6


# -- N=1 exactness -----------------------------------------------------------


@pytest.mark.parametrize("row", computed_rows(), ids=lambda r: f"row{r.index}")
def test_n1_exactness(row):
    areas = {v: 0.4 for v in row.variables}
    res = evaluate(row.word, areas, GroupSpec("U", 1), tail_target=1e-10)
    assert abs(res.value - n1_value(row.word, areas)) <= 1e-8 + res.error


# -- area-derivative identity at the figure-eight crossing ------------------

FIG8_WORD = "t1 t2'"
FIG8_AREAS = {"t1": 0.5, "t2": 0.7}
FIG8_FACES = [(-1, "t1"), None, (-1, "t2"), None]
FIG8_SPLIT = "t1 | t2'"


@pytest.mark.parametrize("N", N_VALUES)
def test_mm_figure_eight_u(N):
    out = makeenko_migdal_check(FIG8_WORD, FIG8_AREAS, FIG8_FACES,
                                FIG8_SPLIT, GroupSpec("U", N), h=1e-3)
    assert out["residual"] <= 1e-4


@pytest.mark.xfail(strict=True,
                   reason="the (1+1/N^2) prefactor variant of the SU "
                          "crossing identity is contradicted by all engines; "
                          "see /root/notes/decisions.md")
def test_mm_figure_eight_su_naive_factor():
    out = makeenko_migdal_check(FIG8_WORD, FIG8_AREAS, FIG8_FACES,
                                FIG8_SPLIT, GroupSpec("SU", 2), h=1e-3)
    assert out["residual"] <= 1e-4


def test_mm_figure_eight_su_mirror():
    # the identity that does hold: subtract the re-crossed loop over N^2
    out = makeenko_migdal_check(FIG8_WORD, FIG8_AREAS, FIG8_FACES,
                                FIG8_SPLIT, GroupSpec("SU", 2), h=1e-3,
                                su_mirror=FIG8_WORD)
    assert out["residual"] <= 1e-4


# -- SU from U transport -----------------------------------------------------

SU_WORDS = ("a a'", "t t s", "t1 t2' t1 t2 s", ONE_CROSSING_WORD,
            "t1 t1 t2 s t2")


@pytest.mark.parametrize("N", N_VALUES)
@pytest.mark.parametrize("word", SU_WORDS)
def test_su_from_u_matches_su_series(word, N):
    areas = {l: 0.35 for l in parse_word(word).letters}
    lifted = su_from_u(word, areas, N, tail_target=1e-10)
    direct = evaluate(word, areas, GroupSpec("SU", N), tail_target=1e-10)
    assert abs(lifted.value - direct.value) <= (1e-6 + lifted.error
                                                + direct.error)


# -- planar limit: three routes ----------------------------------------------

WORKED_WORD = "s t u1 u2' t u1 u2' u1 u2"

PLANAR_WORDS = ("a a", "a a a", "a a a a", "a a' a a'", "a b a b",
                "a b a' b'", "t t s", "t1 t1 t2 s t2", "u t u u t s",
                "t1 t2' t1 t2 s", ONE_CROSSING_WORD, TRIPLE_WIND_WORD,
                "a b a b a b", WORKED_WORD)


@pytest.mark.parametrize("word", PLANAR_WORDS)
def test_planar_triple_agreement(word):
    areas = {l: 0.3 for l in parse_word(word).letters}
    exact = master_field(word, areas)
    series_route = master_field_nc_series(word, areas, tail_target=1e-10)
    assert abs(series_route.value - exact) <= 1e-8 + series_route.error
    if "'" not in word:
        mass = parse_word(word).position_mass(areas)
        forest = math.exp(-mass / 2) * float(
            forest_polynomial(word).evaluate(areas))
        assert abs(forest - exact) <= 1e-8


def test_planar_worked_word_closed_form():
    for areas in ({"s": 0.2, "t": 0.3, "u1": 0.25, "u2": 0.4},
                  {"s": 0.7, "t": 0.5, "u1": 0.6, "u2": 0.35},
                  {"s": 1.0, "t": 1.0, "u1": 1.0, "u2": 1.0}):
        t, u1, u2 = areas["t"], areas["u1"], areas["u2"]
        p = (u1 * (t + u2 - 1) + math.exp(u2) * (1 - 2 * u1 - t)
             + 1.5 * u1 * u1)
        mass = parse_word(WORKED_WORD).position_mass(areas)
        assert master_field(WORKED_WORD, areas) == pytest.approx(
            math.exp(-mass / 2) * p, abs=1e-12)


# -- forest-polynomial oracles ----------------------------------------------


def _set_partitions(n):
    if n == 0:
        yield []
        return
    for part in _set_partitions(n - 1):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [n - 1]] + part[i + 1:]
        yield part + [[n - 1]]


def _noncrossing(part):
    # blocks cross iff some gap (a, b) of one block holds part of the other
    for b1, b2 in itertools.combinations(part, 2):
        for a, b in itertools.combinations(b1, 2):
            if (any(a < c < b for c in b2)
                    and any(not a < c < b for c in b2)):
                return False
    return True


def _trees_by_enumeration(r):
    """Count spanning trees of the complete graph on r vertices by checking
    every (r-1)-edge subset with union-find."""
    if r == 1:
        return 1
    edges = list(itertools.combinations(range(r), 2))
    count = 0
    for sub in itertools.combinations(edges, r - 1):
        parent = list(range(r))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        merged = 0
        for a, b in sub:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
                merged += 1
        if merged == r - 1:
            count += 1
    return count


def _power_forest_brute(n):
    """Coefficients of the winding-n forest polynomial by direct enumeration
    of non-crossing partitions weighted with enumerated tree counts."""
    tree_counts = {r: _trees_by_enumeration(r) for r in range(1, n + 1)}
    coeffs = [Fraction(0)] * n
    for part in _set_partitions(n):
        if not _noncrossing(part):
            continue
        weight = Fraction(1)
        degree = 0
        for block in part:
            r = len(block)
            weight *= Fraction(tree_counts[r] * (-1) ** (r - 1),
                               math.factorial(r - 1))
            degree += r - 1
        coeffs[degree] += weight
    return coeffs


@pytest.mark.parametrize("n", range(1, 8))
def test_power_forest_matches_brute_force(n):
    brute = _power_forest_brute(n)
    # the winding closed form, coefficient by coefficient
    closed = [Fraction(math.comb(n, k + 1)) * Fraction(n) ** (k - 1)
              * Fraction((-1) ** k, math.factorial(k)) for k in range(n)]
    assert brute == closed
    poly = forest_polynomial(" ".join(["a"] * n))
    derived = [poly.coeffs.get((("a", k),) if k else (), Fraction(0))
               for k in range(n)]
    assert derived == closed


def test_quartic_forest_exact_rationals():
    poly = forest_polynomial("a a a a")
    assert poly == ForestPolynomial({
        (): Fraction(1),
        (("a", 1),): Fraction(-6),
        (("a", 2),): Fraction(8),
        (("a", 3),): Fraction(-8, 3),
    })


def test_poisson_forest_estimator_unbiased():
    areas = {"a": 0.5}
    ref = float(forest_polynomial("a a a a").evaluate(areas))
    res = poisson_forest_estimate("a a a a", areas, samples=100_000, seed=3)
    assert abs(res.value - ref) <= 3 * res.error


# -- topology kernel ---------------------------------------------------------

PAIRING_POOL = ("a a", "a a a a", "a b a b", "a a b b", "t t s | u u",
                "a b | b a", "a a | b b | c c", "u t u u t s")


def test_vertex_count_union_find_matches_cycles():
    rng = np.random.default_rng(4)
    words = [parse_word(w) for w in PAIRING_POOL]
    layouts = {}
    for _ in range(10_000):
        word = words[rng.integers(len(words))]
        k_total = int(rng.integers(1, 9))
        counts = tuple(int(c) for c in rng.multinomial(
            k_total, [1 / len(word.pairs)] * len(word.pairs)))
        key = (word.canonical(), counts)
        if key not in layouts:
            layouts[key] = Layout(word, counts)
        layout = layouts[key]
        perm = rng.permutation(layout.n_slots).astype(np.int32)
        point_slots = perm.reshape(-1, 2)
        partner = np.empty(layout.n_slots, dtype=np.int32)
        partner[point_slots[:, 0]] = point_slots[:, 1]
        partner[point_slots[:, 1]] = point_slots[:, 0]
        stats = glue(layout, point_slots, [REL_I] * layout.K)
        n_cycles = int(cycles_batch(layout.succ[partner[None, :]])[0])
        assert stats.V == n_cycles
        assert stats.chi == int(chi_all_type_one(layout,
                                                 partner[None, :])[0])


def test_bigon_same_orientation_gluing_is_projective_plane():
    layout = Layout(parse_word("a a"), (1,))
    stats = glue(layout, np.array([[0, 1]]), [REL_II])
    assert (stats.chi, stats.mu_total) == (1, 1)
    assert stats.components == ((1, False, 1),)


def test_octagon_pairing_has_genus_two():
    # pairing (1 6)(2 8)(3 5)(4 7) of the 8-cycle, drawn zero-indexed
    layout = Layout(parse_word("a a"), (4,))
    point_slots = np.array([[0, 5], [1, 7], [2, 4], [3, 6]])
    stats = glue(layout, point_slots, [REL_I] * 4)
    ((chi, orientable, _),) = stats.components
    assert orientable
    assert (2 - chi) // 2 == 2
    partner = np.array([5, 7, 4, 6, 2, 0, 3, 1], dtype=np.int32)
    assert int(chi_all_type_one(layout, partner[None, :])[0]) == chi


# -- 1/N^2 approach to the planar limit --------------------------------------

LARGE_N_WORDS = ("t t s", "t1 t1 t2 s t2", "t1 t2' t1 t2 s",
                 ONE_CROSSING_WORD, "u t u u t s")


@pytest.mark.parametrize("word", LARGE_N_WORDS)
def test_large_n_gap_shrinks_like_n_squared(word):
    areas = {l: 0.3 for l in parse_word(word).letters}
    planar = master_field(word, areas)
    ns = (2, 4, 8, 16)
    gaps = [abs(evaluate(word, areas, GroupSpec("U", n), tail_target=1e-10,
                         budget=20_000_000).value - planar) for n in ns]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    slope = np.polyfit(np.log(ns), np.log(gaps), 1)[0]
    assert -2.3 <= slope <= -1.7
