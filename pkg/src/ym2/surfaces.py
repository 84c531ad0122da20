"""Glued-surface topology of marked loop configurations.

Fix a loop word and put ``k_p`` marked points on each same-letter position
pair ``p``.  Every point owns two *legs*, one at each of its pair's word
positions, and every leg crosses the loop at a *slot*.  The slots at one
position are ordered along the loop by the points' heights in the shared
face: ascending when the occurrence sign is +1, descending when it is -1
(the strand runs through the face in the opposite direction).

Two fixed permutations act on the slots:

* ``succ`` — the along-the-loop successor (block-cyclic per loop), and
* the *partner* involution pairing the two legs of each point.

Gluing each point's two edge copies by one of the relations I-IV produces a
CW surface.  Vertices are counted by union-find over slot labels with merges

* I   : {v_p, v_succ(q)} and {v_succ(p), v_q}   (opposite-orientation gluing)
* II  : {v_p, v_q} and {v_succ(p), v_succ(q)}   (same-orientation gluing)
* III : {v_p, v_succ(p)} and {v_q, v_succ(q)}   (contraction; no edge survives)
* IV  : as II, with the symplectic sign tracked via orientability

Edges are the surviving (non-III) points, faces are the loops, and a loop
with no slots at all is a sphere component (Euler characteristic 2).  For
orientability, faces carry a parity: relation I identifies compatibly
oriented faces (equal parity), II/IV force opposite parity, and any
contradiction — including a II/IV point with both legs on one face — makes
the component non-orientable with cross-cap count mu = 2 - chi.

The all-relation-I case is vectorized: there the vertex count equals the
cycle count of succ composed with the partner involution, which doubles as an
independent cross-check of the union-find path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import REL_I, REL_II, REL_III, REL_IV, GroupSpec
from .words import Word


@dataclass(frozen=True)
class SurfaceStats:
    """Counts of a glued configuration: the topology and its weight data."""

    V: int
    E: int
    F: int
    chi: int                                 # total, spheres-by-fiat included
    components: tuple[tuple[int, bool, int], ...]   # (chi, orientable, mu)
    alpha: int                               # sign-carrying gluings (relation I)
    gamma: int                               # extra 1/N power from contractions (2 per III)
    sign_sp: int                             # (-1)**total cross-cap count

    @property
    def mu_total(self) -> int:
        return sum(mu for _, _, mu in self.components)


def surface_weight(stats: SurfaceStats, group: GroupSpec, n_loops: int,
                   normalized: bool = True) -> float:
    """N-weight of one glued configuration (without the height-sign factor).

    Normalized means one 1/N per loop on top of the N^(-n) of the raw
    functional, i.e. an exponent of chi - 2n rather than chi - n.
    """
    expo = stats.chi - (2 * n_loops if normalized else n_loops)
    if group.kind == "SU":
        expo -= stats.gamma
    w = (-1.0) ** stats.alpha * float(group.N) ** expo
    if group.kind == "Sp":
        w *= stats.sign_sp
    return w


# ---------------------------------------------------------------------------
# slot layout


@dataclass
class _LetterCtx:
    letter: str
    occ: list[int]               # global positions, ascending
    eps: list[int]               # signs at those positions
    pair_global: list[int]       # global pair index per local pair
    pair_ends: list[tuple[int, int]]   # local occurrence indices (i, j), i < j


class Layout:
    """Slot geometry of (word, per-pair point counts); everything downstream
    of the arrangement choice is fixed here."""

    def __init__(self, word: Word, counts: tuple[int, ...]):
        if len(counts) != len(word.pairs):
            raise ValueError("one count per matching pair required")
        self.word = word
        self.counts = tuple(int(c) for c in counts)
        self.K = sum(self.counts)

        # per-position leg counts
        n_pos = [0] * len(word.positions)
        for p, pair in enumerate(word.pairs):
            n_pos[pair.pos_a] += self.counts[p]
            n_pos[pair.pos_b] += self.counts[p]

        offsets = np.cumsum([0] + n_pos[:-1]).astype(np.int32)
        self.n_slots = int(sum(n_pos))
        self.slot_offset = offsets
        self.legs_at = np.asarray(n_pos, dtype=np.int32)

        # along-the-loop successor, block-cyclic per loop
        succ = np.empty(self.n_slots, dtype=np.int32)
        slot_loop = np.empty(self.n_slots, dtype=np.int32)
        empty = 0
        pos_index = 0
        for li, loop in enumerate(word.loops):
            loop_slots: list[int] = []
            for _ in loop:
                base = int(offsets[pos_index])
                loop_slots.extend(range(base, base + n_pos[pos_index]))
                pos_index += 1
            if not loop_slots:
                empty += 1
                continue
            arr = np.asarray(loop_slots, dtype=np.int32)
            succ[arr] = np.roll(arr, -1)
            slot_loop[arr] = li
        self.succ = succ
        self.slot_loop = slot_loop
        self.empty_loops = empty
        self.nonempty_loops = word.n_loops - empty
        # chi = V - E + F with E = K when nothing is contracted, plus a
        # sphere for every loop that carries no slots
        self.chi_offset = self.nonempty_loops + 2 * empty - self.K

        # letter contexts for letters that actually carry points
        self.letter_ctxs: list[_LetterCtx] = []
        by_letter: dict[str, list[int]] = {}
        for idx, (_, letter, _) in enumerate(word.positions):
            by_letter.setdefault(letter, []).append(idx)
        for letter in sorted(by_letter):
            occ = by_letter[letter]
            pair_global = [p for p, pair in enumerate(word.pairs)
                           if pair.letter == letter]
            if not pair_global or not any(self.counts[p] for p in pair_global):
                continue
            pos_of = {q: i for i, q in enumerate(occ)}
            ends = [(pos_of[word.pairs[p].pos_a], pos_of[word.pairs[p].pos_b])
                    for p in pair_global]
            self.letter_ctxs.append(_LetterCtx(
                letter=letter,
                occ=occ,
                eps=[word.positions[q][2] for q in occ],
                pair_global=pair_global,
                pair_ends=ends,
            ))

    def letter_counts(self, ctx: _LetterCtx) -> tuple[int, ...]:
        return tuple(self.counts[p] for p in ctx.pair_global)

    # -- legs from arrangements ------------------------------------------

    def letter_legs(self, ctx: _LetterCtx, order: np.ndarray
                    ) -> tuple[np.ndarray, np.ndarray]:
        """Slot ids of each point's two legs for a batch of height orders.

        ``order`` has shape (B, K_l); row ``b`` lists local pair indices in
        ascending height order.  Returns (legA, legB), each (B, K_l): the
        slot at the pair's first and second word position for the point at
        that height rank.
        """
        B, K_l = order.shape
        legA = np.empty((B, K_l), dtype=np.int32)
        legB = np.empty((B, K_l), dtype=np.int32)
        n_lp = len(ctx.pair_global)
        first_at = np.zeros((len(ctx.occ), n_lp), dtype=bool)
        second_at = np.zeros((len(ctx.occ), n_lp), dtype=bool)
        for lp, (i, j) in enumerate(ctx.pair_ends):
            first_at[i, lp] = True
            second_at[j, lp] = True
        for a, q in enumerate(ctx.occ):
            here = first_at[a] | second_at[a]
            mask = here[order]                       # (B, K_l)
            rank = np.cumsum(mask, axis=1) - 1
            n_a = int(self.legs_at[q])
            if ctx.eps[a] > 0:
                slot = self.slot_offset[q] + rank
            else:
                slot = self.slot_offset[q] + (n_a - 1 - rank)
            fa = first_at[a][order] & mask
            sb = second_at[a][order] & mask
            legA[fa] = slot[fa]
            legB[sb] = slot[sb]
        return legA, legB

    def assemble_partner(self, legs: list[tuple[np.ndarray, np.ndarray]],
                         out: np.ndarray | None = None) -> np.ndarray:
        """Partner involution over slots from aligned per-letter leg tables."""
        B = legs[0][0].shape[0] if legs else 1
        pi = out if out is not None else np.empty((B, self.n_slots), np.int32)
        for legA, legB in legs:
            np.put_along_axis(pi, legA, legB, axis=1)
            np.put_along_axis(pi, legB, legA, axis=1)
        return pi

    def point_slots_row(self, legs: list[tuple[np.ndarray, np.ndarray]],
                        row: int) -> np.ndarray:
        """(K, 2) slot ids per point for one batch row (letters concatenated
        in letter-context order, points in height-rank order per letter)."""
        if not legs:
            return np.empty((0, 2), dtype=np.int32)
        return np.concatenate(
            [np.stack([legA[row], legB[row]], axis=1) for legA, legB in legs],
            axis=0)


def multiset_permutations(counts: tuple[int, ...]) -> np.ndarray:
    """All distinct arrangements of the multiset {label p, counts[p] times},
    one row each, shape (n_arrangements, sum(counts))."""
    total = sum(counts)
    if total == 0:
        return np.zeros((1, 0), dtype=np.int8)
    rows: list[list[int]] = []
    cur = [0] * total

    def rec(depth: int, remaining: list[int]) -> None:
        if depth == total:
            rows.append(cur.copy())
            return
        for p, r in enumerate(remaining):
            if r:
                remaining[p] -= 1
                cur[depth] = p
                rec(depth + 1, remaining)
                remaining[p] += 1

    rec(0, list(counts))
    return np.asarray(rows, dtype=np.int8)


def n_multiset_permutations(counts) -> int:
    import math
    total = sum(counts)
    out = math.factorial(total)
    for c in counts:
        out //= math.factorial(c)
    return out


def cycles_batch(f: np.ndarray) -> np.ndarray:
    """Cycle counts of a batch of permutations, shape (B, n) -> (B,).

    Pointer doubling on the cycle-minimum label: O(log n) gather passes.
    """
    B, n = f.shape
    if n == 0:
        return np.zeros(B, dtype=np.int64)
    idx = np.arange(n, dtype=f.dtype)
    m = np.broadcast_to(idx, f.shape).copy()
    g = f.copy()
    steps = max(1, int(np.ceil(np.log2(n))))
    for _ in range(steps):
        m = np.minimum(m, np.take_along_axis(m, g, axis=1))
        g = np.take_along_axis(g, g, axis=1)
    return (m == idx).sum(axis=1)


def chi_all_type_one(layout: Layout, partner: np.ndarray) -> np.ndarray:
    """Euler characteristics for batches glued entirely by relation I."""
    f = layout.succ[partner]
    return cycles_batch(f) + layout.chi_offset


# ---------------------------------------------------------------------------
# general gluing (union-find), one configuration at a time


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


class _ParityUnionFind:
    """Union-find with an orientation parity per element and a poisoned flag
    per class (the class is non-orientable once any constraint conflicts)."""

    __slots__ = ("parent", "parity", "bad")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.parity = [0] * n
        self.bad = [False] * n

    def find(self, x: int) -> tuple[int, int]:
        # no path compression: the face forest is a handful of loops
        par = 0
        while self.parent[x] != x:
            par ^= self.parity[x]
            x = self.parent[x]
        return x, par

    def union(self, a: int, b: int, rel_parity: int) -> None:
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            if (pa ^ pb) != rel_parity:
                self.bad[ra] = True
            return
        # attach rb under ra
        self.parent[rb] = ra
        self.parity[rb] = pa ^ pb ^ rel_parity
        self.bad[ra] = self.bad[ra] or self.bad[rb]


def glue(layout: Layout, point_slots: np.ndarray, relations) -> SurfaceStats:
    """Glue one configuration; ``point_slots`` is (K, 2) slot ids and
    ``relations`` one tag per point."""
    succ = layout.succ
    n_slots = layout.n_slots
    uf = _UnionFind(n_slots)
    faces = _ParityUnionFind(layout.word.n_loops)
    alpha = 0
    n_iii = 0
    for (pa, pb), rel in zip(point_slots, relations):
        pa, pb = int(pa), int(pb)
        if rel == REL_I:
            alpha += 1
            uf.union(pa, int(succ[pb]))
            uf.union(int(succ[pa]), pb)
            faces.union(int(layout.slot_loop[pa]), int(layout.slot_loop[pb]), 0)
        elif rel in (REL_II, REL_IV):
            uf.union(pa, pb)
            uf.union(int(succ[pa]), int(succ[pb]))
            faces.union(int(layout.slot_loop[pa]), int(layout.slot_loop[pb]), 1)
        elif rel == REL_III:
            n_iii += 1
            uf.union(pa, int(succ[pa]))
            uf.union(pb, int(succ[pb]))
        else:
            raise ValueError(f"unknown relation {rel!r}")

    # component structure over nonempty loops
    loop_has_slots = [False] * layout.word.n_loops
    for s in range(n_slots):
        loop_has_slots[int(layout.slot_loop[s])] = True

    comp_of_loop: dict[int, int] = {}
    comp_faces: dict[int, int] = {}
    comp_orient: dict[int, bool] = {}
    for li in range(layout.word.n_loops):
        if not loop_has_slots[li]:
            continue
        root, _ = faces.find(li)
        comp_of_loop[li] = root
        comp_faces[root] = comp_faces.get(root, 0) + 1
        comp_orient[root] = not faces.bad[root]

    comp_V: dict[int, int] = {r: 0 for r in comp_faces}
    seen_vertex: set[int] = set()
    for s in range(n_slots):
        vr = uf.find(s)
        if vr in seen_vertex:
            continue
        seen_vertex.add(vr)
        comp = comp_of_loop[int(layout.slot_loop[s])]
        comp_V[comp] += 1

    comp_E: dict[int, int] = {r: 0 for r in comp_faces}
    for (pa, _), rel in zip(point_slots, relations):
        if rel != REL_III:
            comp = comp_of_loop[int(layout.slot_loop[int(pa)])]
            comp_E[comp] += 1

    components = []
    for r in comp_faces:
        chi_c = comp_V[r] - comp_E[r] + comp_faces[r]
        orient = comp_orient[r]
        mu = 0 if orient else 2 - chi_c
        components.append((chi_c, orient, mu))
    for _ in range(layout.empty_loops):
        components.append((2, True, 0))

    V = len(seen_vertex)
    E = sum(comp_E.values())
    F = layout.nonempty_loops
    chi_total = sum(c for c, _, _ in components)
    mu_total = sum(m for _, _, m in components)
    return SurfaceStats(
        V=V, E=E, F=F + layout.empty_loops, chi=chi_total,
        components=tuple(components),
        alpha=alpha, gamma=2 * n_iii, sign_sp=(-1) ** mu_total,
    )
