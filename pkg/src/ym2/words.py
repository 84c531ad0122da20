"""Loop words over lasso letters.

A family of loops in the plane is encoded as a word (one per loop) in *lasso
letters*: each letter names one bounded face, and an occurrence of the letter
means the loop runs out to that face, circles it once (sign +1 counter-
clockwise, -1 clockwise), and comes back.  Everything downstream — the surface
sums, the walk on permutations, the Brownian simulation, the master field —
consumes this combinatorial form plus a map from letters to face areas.

Text syntax::

    words  := loop ('|' loop)*
    loop   := term+
    term   := group | symbol
    group  := '(' symbol+ ')' inv?
    symbol := ident inv?
    inv    := "'" | "^-1"
    ident  := [A-Za-z][A-Za-z0-9_]*

A group inverse reverses the group and flips every sign, e.g. ``(a b)'``
parses as ``b' a'``.  Whitespace is optional between tokens, so ``(t)(t s)``
is the single loop ``t t s``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property


class WordParseError(ValueError):
    """Raised when loop-word text does not match the grammar."""


@dataclass(frozen=True)
class MatchPair:
    """Two positions of the same letter; insertion points live on pairs.

    ``sign`` is the product of the two occurrence signs and ``mass`` (set by
    the caller from the area map) is the letter's face area.
    """

    letter: str
    pos_a: int
    pos_b: int
    sign: int


@dataclass(frozen=True)
class Word:
    """An immutable tuple-of-loops word; positions are indexed globally."""

    loops: tuple[tuple[tuple[str, int], ...], ...]

    def __post_init__(self) -> None:
        if not self.loops:
            raise WordParseError("a word needs at least one loop")
        for loop in self.loops:
            if not loop:
                raise WordParseError("empty loop")
            for letter, sign in loop:
                if sign not in (-1, 1):
                    raise WordParseError(f"bad sign {sign!r} on {letter!r}")

    # -- basic shape ---------------------------------------------------

    @property
    def n_loops(self) -> int:
        return len(self.loops)

    def __len__(self) -> int:
        return sum(len(loop) for loop in self.loops)

    @cached_property
    def positions(self) -> tuple[tuple[int, str, int], ...]:
        """Flattened ``(loop_index, letter, sign)`` in reading order."""
        out = []
        for li, loop in enumerate(self.loops):
            for letter, sign in loop:
                out.append((li, letter, sign))
        return tuple(out)

    @cached_property
    def letters(self) -> tuple[str, ...]:
        return tuple(sorted({letter for _, letter, _ in self.positions}))

    @cached_property
    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for _, letter, _ in self.positions:
            out[letter] = out.get(letter, 0) + 1
        return out

    @cached_property
    def net_windings(self) -> dict[str, int]:
        """Signed occurrence count per letter (the letter's net winding)."""
        out: dict[str, int] = {}
        for _, letter, sign in self.positions:
            out[letter] = out.get(letter, 0) + sign
        return out

    @property
    def has_inverses(self) -> bool:
        return any(sign < 0 for _, _, sign in self.positions)

    @cached_property
    def pairs(self) -> tuple[MatchPair, ...]:
        """All same-letter position pairs (global indices, pos_a < pos_b)."""
        by_letter: dict[str, list[int]] = {}
        for idx, (_, letter, _) in enumerate(self.positions):
            by_letter.setdefault(letter, []).append(idx)
        out = []
        for letter in sorted(by_letter):
            occ = by_letter[letter]
            for i in range(len(occ)):
                for j in range(i + 1, len(occ)):
                    a, b = occ[i], occ[j]
                    sign = self.positions[a][2] * self.positions[b][2]
                    out.append(MatchPair(letter, a, b, sign))
        return tuple(out)

    # -- text form -----------------------------------------------------

    def canonical(self) -> str:
        parts = []
        for loop in self.loops:
            parts.append(" ".join(
                letter + ("'" if sign < 0 else "") for letter, sign in loop))
        return " | ".join(parts)

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.canonical()

    # -- area plumbing ---------------------------------------------------

    def check_areas(self, areas: dict[str, float]) -> None:
        missing = [l for l in self.letters if l not in areas]
        if missing:
            raise WordParseError(f"no area given for letter(s) {missing}")
        bad = [l for l in self.letters if not areas[l] > 0]
        if bad:
            raise WordParseError(f"areas must be positive, got {bad}")

    def position_mass(self, areas: dict[str, float]) -> float:
        """Sum of face areas over all positions (with multiplicity)."""
        return sum(areas[letter] for _, letter, _ in self.positions)

    def pair_mass(self, areas: dict[str, float]) -> float:
        """Total mass of the pair set: one area per matching pair."""
        return sum(areas[p.letter] for p in self.pairs)


_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<inv>'|\^-1)"
                    r"|(?P<open>\()|(?P<close>\))|(?P<bar>\|))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:].lstrip()
            if not rest:
                break
            raise WordParseError(f"unexpected input at {rest[:12]!r}")
        pos = m.end()
        for kind in ("ident", "inv", "open", "close", "bar"):
            val = m.group(kind)
            if val is not None:
                tokens.append((kind, val))
                break
    return tokens


def parse_word(text: str) -> Word:
    """Parse loop-word text into a :class:`Word`.

    Raises :class:`WordParseError` on anything outside the grammar.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise WordParseError("empty word")
    loops: list[list[tuple[str, int]]] = [[]]
    i = 0

    def peek_inv(j: int) -> tuple[bool, int]:
        if j < len(tokens) and tokens[j][0] == "inv":
            return True, j + 1
        return False, j

    while i < len(tokens):
        kind, val = tokens[i]
        if kind == "bar":
            if not loops[-1]:
                raise WordParseError("empty loop before '|'")
            loops.append([])
            i += 1
        elif kind == "ident":
            inv, i2 = peek_inv(i + 1)
            loops[-1].append((val, -1 if inv else 1))
            i = i2
        elif kind == "open":
            i += 1
            grp: list[tuple[str, int]] = []
            while i < len(tokens) and tokens[i][0] == "ident":
                inv, i2 = peek_inv(i + 1)
                grp.append((tokens[i][1], -1 if inv else 1))
                i = i2
            if i >= len(tokens) or tokens[i][0] != "close":
                raise WordParseError("unclosed '(' group")
            if not grp:
                raise WordParseError("empty '()' group")
            i += 1
            inv, i = peek_inv(i)
            if inv:
                grp = [(letter, -sign) for letter, sign in reversed(grp)]
            loops[-1].extend(grp)
        elif kind == "close":
            raise WordParseError("')' without matching '('")
        else:  # stray inverse
            raise WordParseError("inverse marker must follow a letter or group")
    if not loops[-1]:
        raise WordParseError("empty loop at end of word")
    return Word(tuple(tuple(loop) for loop in loops))


def parse_areas(text: str) -> dict[str, float]:
    """Parse ``"t=0.4,s=0.3"`` into an area map."""
    out: dict[str, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise WordParseError(f"bad area assignment {part!r}")
        key, _, val = part.partition("=")
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise WordParseError(f"bad area value in {part!r}") from exc
    return out
