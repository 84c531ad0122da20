"""Permutation-walk engine: generator structure, closed forms, refusals."""

from __future__ import annotations

import math

import numpy as np
import pytest

import ym2.walk as walk_mod
from ym2.engine import BudgetExceeded, EngineRefusal
from ym2.groups import GroupSpec
from ym2.series import evaluate as series_evaluate
from ym2.walk import build_action_graph, deficit, evaluate, evaluate_walk
from ym2.words import parse_word


def g_factor(x, N):
    return math.cosh(x / N) - N * math.sinh(x / N)


def G0(x, y, N):
    return (-(N**2 - 1) / 3 * math.cosh(x / N)
            + (N**2 + 2) / 3 * math.cosh((3 * y + x) / N)
            - N * math.sinh((3 * y + x) / N))


def test_no_pairs_single_state():
    g = build_action_graph("s", {"s": 0.7}, N=2)
    assert len(g.states) == 1
    assert np.allclose(np.asarray(g.generator), [[0.0]])
    assert evaluate_walk(g, {"s": 0.7}) == pytest.approx(math.exp(-0.35))


def test_two_state_generator():
    A, N = 0.8, 3
    g = build_action_graph("a a", {"a": A}, N=N)
    assert len(g.states) == 2
    assert g.states[0] == (1, 0)          # the 2-cycle comes first
    Q = np.asarray(g.generator)
    assert np.allclose(Q, [[0.0, -A / N**2], [-A, 0.0]])


@pytest.mark.parametrize("N", [1, 2, 3])
def test_doubled_loop_closed_form(N):
    A = 0.8
    g = build_action_graph("a a", {"a": A}, N=N)
    val = evaluate_walk(g, {"a": A})
    assert val == pytest.approx(math.exp(-A) * g_factor(A, N), abs=1e-12)


@pytest.mark.parametrize("N", [2, 3])
def test_tripled_loop_closed_form(N):
    A = 0.6
    g = build_action_graph("a a a", {"a": A}, N=N)
    assert len(g.states) == 6
    val = evaluate_walk(g, {"a": A})
    ref = math.exp(-1.5 * A) * (
        1 + (N**2 + 2) / 3 * (math.cosh(3 * A / N) - 1)
        - N * math.sinh(3 * A / N))
    assert val == pytest.approx(ref, abs=1e-12)


def test_tripled_loop_generator_structure():
    A, N = 0.6, 2
    g = build_action_graph("a a a", {"a": A}, N=N)
    Q = np.asarray(g.generator)
    assert np.allclose(np.diag(Q), 0.0)
    off = Q[Q != 0]
    assert set(np.round(off, 12)) <= {-A, -A / N**2}
    # one contribution per matching pair in every column
    assert all(np.count_nonzero(Q[:, j]) == 3 for j in range(6))


def test_column_mass_undiscounted():
    # at N=1 the deficit discount disappears and every column's absolute sum
    # is the total pair mass
    areas = {"u": 0.3, "t": 0.45, "s": 0.2}
    g = build_action_graph("u t u u t s", areas, N=1)
    Q = np.asarray(g.generator)
    total = 3 * 0.3 + 0.45
    assert np.allclose(np.abs(Q).sum(axis=0), total)


def test_states_product_of_factorials():
    g = build_action_graph("u t1 u u t1 t2 s t2",
                           {"u": 0.1, "t1": 0.1, "t2": 0.1, "s": 0.1}, N=2)
    assert len(g.states) == math.factorial(3) * 2 * 2


@pytest.mark.parametrize("text,areas", [
    ("t t s", {"t": 0.4, "s": 0.3}),
    ("t1 t1 t2 s t2", {"t1": 0.3, "t2": 0.5, "s": 0.2}),
    ("u t u u t s", {"u": 0.3, "t": 0.45, "s": 0.2}),
    ("u t1 u u t1 t2 s t2", {"u": 0.25, "t1": 0.3, "t2": 0.4, "s": 0.2}),
    ("s1 t s2 t s3", {"t": 0.5, "s1": 0.2, "s2": 0.3, "s3": 0.4}),
])
@pytest.mark.parametrize("N", [2, 3])
def test_walk_matches_series(text, areas, N):
    w = evaluate(text, areas, GroupSpec("U", N))
    s = series_evaluate(text, areas, GroupSpec("U", N), tail_target=1e-11)
    assert abs(w.value - s.value) <= 1e-10 + s.error


@pytest.mark.parametrize("N", [2, 3])
def test_walk_hits_nested_curl_form(N):
    t, u, s = 0.45, 0.3, 0.2
    r = evaluate("u t u u t s", {"u": u, "t": t, "s": s}, GroupSpec("U", N))
    ref = math.exp(-(2 * t + 3 * u + s) / 2) * G0(t, u, N)
    assert r.value == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("N", [2, 3])
def test_walk_hits_double_curl_form(N):
    t1, t2, u, s = 0.3, 0.4, 0.25, 0.2
    r = evaluate("u t1 u u t1 t2 s t2",
                 {"u": u, "t1": t1, "t2": t2, "s": s}, GroupSpec("U", N))
    ref = (math.exp(-(2 * t1 + 2 * t2 + 3 * u + s) / 2)
           * G0(t1, u, N) * g_factor(t2, N))
    assert r.value == pytest.approx(ref, abs=1e-12)


def test_sparse_route_agrees_with_dense(monkeypatch):
    areas = {"u": 0.3, "t": 0.45, "s": 0.2}
    dense = evaluate("u t u u t s", areas, GroupSpec("U", 2)).value
    monkeypatch.setattr(walk_mod, "_DENSE_CUTOFF", 1)
    sparse = evaluate("u t u u t s", areas, GroupSpec("U", 2)).value
    assert sparse == pytest.approx(dense, abs=1e-12)


# -- path expansion ---------------------------------------------------------


def test_path_expansion_matches_taylor():
    # truncated sum over transposition paths with deficit discounts ==
    # truncated Taylor series of the generator exponential
    A, N, k_max = 0.7, 2, 5
    g = build_action_graph("a a a", {"a": A}, N=N)
    Q = np.asarray(g.generator)
    swaps = [(0, 1), (0, 2), (1, 2)]

    total = 0.0
    stack = [(g.states[0], 0, 0)]        # (perm, length, deficit so far)
    while stack:
        sigma, k, d = stack.pop()
        total += (-A) ** k * N ** (-2 * d) / math.factorial(k)
        if k == k_max:
            continue
        for a, b in swaps:
            lst = list(sigma)
            lst[a], lst[b] = lst[b], lst[a]
            tau = tuple(lst)
            step_def = deficit([sigma, tau])
            stack.append((tau, k + 1, d + step_def))

    delta = np.zeros(len(g.states))
    delta[0] = 1.0
    taylor = sum(np.linalg.matrix_power(Q, k) @ delta / math.factorial(k)
                 for k in range(k_max + 1)).sum()
    assert total == pytest.approx(taylor, rel=1e-12)


# -- deficit ------------------------------------------------------------


def test_deficit_examples():
    zeta = (1, 2, 0)
    split = (1, 0, 2)      # one transposition away, cycle count goes up
    other = (2, 0, 1)      # back down to a single cycle
    assert deficit([zeta, split]) == 0
    assert deficit([zeta, split, other]) == 1
    assert deficit([zeta, zeta, zeta]) == 0


def test_deficit_rejects_non_transposition_step():
    with pytest.raises(ValueError):
        deficit([(1, 2, 0), (0, 1, 2)])


# -- refusals ------------------------------------------------------------


def test_refuses_inverses():
    with pytest.raises(EngineRefusal):
        evaluate("t t' s", {"t": 0.4, "s": 0.3}, GroupSpec("U", 2))


def test_refuses_multiloop():
    with pytest.raises(EngineRefusal):
        evaluate("t | t s", {"t": 0.4, "s": 0.3}, GroupSpec("U", 2))


def test_refuses_non_unitary_kind():
    with pytest.raises(EngineRefusal):
        evaluate("t t s", {"t": 0.4, "s": 0.3}, GroupSpec("SO", 3))


def test_state_budget():
    word = " ".join(["a"] * 10)
    with pytest.raises(BudgetExceeded):
        evaluate(word, {"a": 0.1}, GroupSpec("U", 2))
