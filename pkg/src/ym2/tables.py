"""Closed-form benchmark table for loops with up to three crossings.

Each row pairs a face-labelled loop word with the normalized U(N)
expectation of its Wilson loop as an explicit function of the face areas
and N.  Face letters follow one convention throughout: ``s*`` faces are
traversed once, ``t*`` faces twice, ``u*`` faces three times.  Rows 13,
25 and 26 of the standard 28-row atlas carry no closed form here and are
listed with ``closed_form=None``.

The two named benchmark words at the bottom (a single transversal
crossing and a triple-wound variant) are the ones the cross-engine
checks lean on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable


def _g(x: float, N: int) -> float:
    """Weight of one curl: cosh(x/N) - N sinh(x/N)."""
    return math.cosh(x / N) - N * math.sinh(x / N)


def _g0(x: float, y: float, N: int) -> float:
    """Weight of a doubled curl over a triply-wound face."""
    n2 = N * N
    return (-(n2 - 1) / 3 * math.cosh(x / N)
            + (n2 + 2) / 3 * math.cosh((3 * y + x) / N)
            - N * math.sinh((3 * y + x) / N))


def _r6(t1: float, t2: float, N: int) -> float:
    """Weight of two interleaved curls sharing a winding."""
    return (math.exp(t2) * math.cosh(t1 / N)
            - math.exp(t2) / N * math.sinh(t1 / N)
            - (N * N - 1) / N * math.sinh(t1 / N))


def _mass(areas: dict[str, float], weights: dict[str, int]) -> float:
    return sum(areas[l] * w for l, w in weights.items())


@dataclass(frozen=True)
class TableRow:
    """One benchmark loop: word, area variables, closed form (or None)."""

    index: int
    word: str
    closed_form: Callable[[dict[str, float], int], float] | None
    note: str = ""

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted({t.rstrip("'") for t in self.word.split()
                             if t and t != "|"}))


def _simple(*letters: str) -> Callable:
    def f(a: dict[str, float], N: int) -> float:
        return math.exp(-sum(a[l] for l in letters) / 2)
    return f


def _row3(a, N):
    return math.exp(-(2 * a["t"] + a["s"]) / 2) * _g(a["t"], N)


def _row5(a, N):
    return (math.exp(-(2 * a["t1"] + 2 * a["t2"] + a["s"]) / 2)
            * _g(a["t1"], N) * _g(a["t2"], N))


def _row6(a, N):
    return (math.exp(-(2 * a["t1"] + 2 * a["t2"] + a["s"]) / 2)
            * _r6(a["t1"], a["t2"], N))


def _row7(a, N):
    return (math.exp(-(2 * a["t"] + a["s1"] + a["s2"]) / 2) * _g(a["t"], N))


def _row8(a, N):
    return (math.exp(-(2 * a["t"] + 3 * a["u"] + a["s"]) / 2)
            * _g0(a["t"], a["u"], N))


def _row10(a, N):
    return (math.exp(-(2 * a["t1"] + 2 * a["t2"] + 3 * a["u"] + a["s"]) / 2)
            * _g0(a["t1"], a["u"], N) * _g(a["t2"], N))


def _row11(a, N):
    # the e^u/N term is load-bearing: with plain e^u in its place the row
    # matches all four engines only at N = infinity, and the finite-N gap
    # is exactly (N-1)/N * e^u * sinh(t1/N) times the mass prefactor; the
    # full derivation lives in the decisions ledger, entry 33
    t1, t2, u, s = a["t1"], a["t2"], a["u"], a["s"]
    n2 = N * N
    inner = (math.sinh(t1 / N) * (math.exp(u) / N
                                  + (n2 - 2) * math.sinh(u / N)
                                  - N * math.cosh(u / N))
             + math.exp(t2 + u) * (math.cosh(t1 / N)
                                   - math.sinh(t1 / N) / N))
    return math.exp(-(2 * t1 + 2 * t2 + 3 * u + s) / 2) * inner


def _row12(a, N):
    return (math.exp(-(2 * a["t"] + 3 * a["u"] + a["s1"] + a["s2"]) / 2)
            * _g0(a["t"], a["u"], N))


def _row14(a, N):
    return (math.exp(-(2 * a["t1"] + 2 * a["t2"] + a["s1"] + a["s2"]) / 2)
            * _g(a["t1"], N) * _g(a["t2"], N))


def _row15(a, N):
    t1, t2, t3, s = a["t1"], a["t2"], a["t3"], a["s"]
    n2 = N * N
    inner = ((n2 - 1) / n2 * (math.exp(t2) - 1) * math.cosh(t1 / N)
             - (n2 - 1) / N * math.sinh(t1 / N)
             + (n2 + math.exp(t2) - 1) / n2 * math.exp(t3)
             * math.cosh(t1 / N)
             - math.exp(t2 + t3) / N * math.sinh(t1 / N))
    return math.exp(-(2 * t1 + 2 * t2 + 2 * t3 + s) / 2) * inner


def _row17(a, N):
    return (math.exp(-(2 * a["t"] + a["s1"] + a["s2"] + a["s3"]) / 2)
            * _g(a["t"], N))


def _row19(a, N):
    return (math.exp(-(2 * a["t1"] + 2 * a["t2"] + 2 * a["t3"] + a["s"]) / 2)
            * _g(a["t1"], N) * _g(a["t2"], N) * _g(a["t3"], N))


def _row20(a, N):
    return (math.exp(-(2 * a["t1"] + 2 * a["t2"] + a["s1"] + a["s2"]) / 2)
            * _r6(a["t1"], a["t2"], N))


def _row22(a, N):
    return (math.exp(
        -(2 * a["t1"] + 2 * a["t2"] + 2 * a["t3"] + a["s"]) / 2)
        * _r6(a["t1"], a["t2"], N) * _g(a["t3"], N))


def _row23(a, N):
    t1, t2, t3, s = a["t1"], a["t2"], a["t3"], a["s"]
    n2 = N * N
    inner = (math.exp(t2) * math.cosh(t1 / N) * math.cosh(t3 / N)
             - N * math.exp(t2) * math.cosh(t1 / N) * math.sinh(t3 / N)
             - (n2 + math.exp(t2) - 1) / N * math.sinh(t1 / N)
             * math.cosh(t3 / N)
             + math.exp(t2) * math.sinh(t1 / N) * math.sinh(t3 / N))
    return math.exp(-(2 * t1 + 2 * t2 + 2 * t3 + s) / 2) * inner


def _row24(a, N):
    t1, t2, u, s = a["t1"], a["t2"], a["u"], a["s"]
    n2 = N * N
    inner = (-(n2 - 1) / 3 * math.cosh(t1 / N)
             + (n2 - 1) / (3 * N) * (math.exp(t2) - 1) * math.sinh(t1 / N)
             + ((n2 - 1) / 3 + math.exp(t2)) * math.cosh((t1 + 3 * u) / N)
             - ((n2 + 2) * math.exp(t2) + 2 * (n2 - 1)) / (3 * N)
             * math.sinh((t1 + 3 * u) / N))
    return math.exp(-(2 * t1 + 2 * t2 + 3 * u + s) / 2) * inner


def _row28(a, N):
    t1, t2 = a["t1"], a["t2"]
    inner = (math.exp(t1) + math.exp(t2) - 1
             + (math.exp(t1) - 1) * (math.exp(t2) - 1) / (N * N))
    return math.exp(-(2 * t1 + 2 * t2 + a["s1"] + a["s2"]) / 2) * inner


ROWS: tuple[TableRow, ...] = (
    TableRow(1, "s", _simple("s")),
    TableRow(2, "s1 s2", _simple("s1", "s2")),
    TableRow(3, "t t s", _row3),
    TableRow(4, "s1 s3 s2'", _simple("s1", "s2", "s3")),
    TableRow(5, "t1 t1 t2 s t2", _row5),
    TableRow(6, "t1 t2' t1 t2 s", _row6),
    TableRow(7, "t t s1 s2'", _row7),
    TableRow(8, "u t u u t s", _row8),
    TableRow(9, "s1 s2' s3' s4'", _simple("s1", "s2", "s3", "s4")),
    TableRow(10, "u t1 u u t1 t2 s t2", _row10),
    TableRow(11, "t1 u t2 t1 s u' t2' u'", _row11,
             "closed form corrected, ledger entry 33"),
    TableRow(12, "u t u u t s1 s2'", _row12),
    TableRow(13, "", None, "not computed here"),
    TableRow(14, "t1 s1 t1 t2 t2 s2", _row14),
    TableRow(15, "t3 t1 t2 s t3' t1 t2'", _row15),
    TableRow(16, "s2 s3 s1' s4", _simple("s1", "s2", "s3", "s4")),
    TableRow(17, "t s3' t s1 s2'", _row17),
    TableRow(18, "t1 t2 t2 t1 s1 s2'", _row14),
    TableRow(19, "t1 t3 t3 t1 t2 s t2", _row19),
    TableRow(20, "t1 t2' t1 t2 s1 s2'", _row20),
    TableRow(21, "t s1 t s3 s2'", _row17),
    TableRow(22, "t1 t2' t1 t2 t3 s t3", _row22),
    TableRow(23, "t1 t2 t3 t1 s t3 t2'", _row23),
    TableRow(24, "t2 u t1 s t2' u t1 u", _row24),
    TableRow(25, "", None, "not computed here"),
    TableRow(26, "", None, "not computed here"),
    TableRow(27, "s1 t s2 t s3", _row17),
    TableRow(28, "t1 t2 s2 s1' t1' t2'", _row28),
)


def row(index: int) -> TableRow:
    r = ROWS[index - 1]
    assert r.index == index
    return r


def computed_rows() -> tuple[TableRow, ...]:
    return tuple(r for r in ROWS if r.closed_form is not None)


# -- named benchmark words used by the cross-engine checks ------------------

# single transversal self-crossing, all four faces labelled independently
ONE_CROSSING_WORD = "t2' t3' t1' t2 t4 t1"


def one_crossing_value(areas: dict[str, float], N: int) -> float:
    l1, l2 = areas["t1"], areas["t2"]
    return math.exp(
        -(2 * l1 + 2 * l2 + areas["t3"] + areas["t4"]) / 2) * (
        math.exp(l1) + math.exp(l2) - 1
        + (math.exp(l1) - 1) * (math.exp(l2) - 1) / (N * N))


# triply-wound face with a doubled curl hanging off it (table row 10)
TRIPLE_WIND_WORD = ROWS[9].word


def triple_wind_value(areas: dict[str, float], N: int) -> float:
    return _row10(areas, N)
