"""Compact matrix groups the loop functionals are computed over.

The four families U(N), SO(N), SU(N), Sp(N/2) share one bookkeeping object.
``Sp(N/2)`` is presented as quaternionic N x N unitaries (N even).  Each group
carries its Casimir drift constant ``c_g`` (the scalar in E[dW^2] = c_g dt I
for the metric <X,Y> = (beta N / 2) Tr(X* Y)) and the set of gluing relations
its Casimir tensor generates on marked surfaces:

===== ========== ======== ===============
kind  c_g        beta     relations
===== ========== ======== ===============
U     -1         2        I
SO    -1 + 1/N   1        I, II
SU    -1 + 1/N^2 2        I, III
Sp    -1 - 1/N   4        I, IV
===== ========== ======== ===============
"""

from __future__ import annotations

from dataclasses import dataclass

KINDS = ("U", "SO", "SU", "Sp")

# gluing relation tags; see ym2.surfaces for their vertex-merge semantics
REL_I, REL_II, REL_III, REL_IV = "I", "II", "III", "IV"

_RELATIONS = {
    "U": (REL_I,),
    "SO": (REL_I, REL_II),
    "SU": (REL_I, REL_III),
    "Sp": (REL_I, REL_IV),
}

_BETA = {"U": 2, "SO": 1, "SU": 2, "Sp": 4}


@dataclass(frozen=True)
class GroupSpec:
    kind: str
    N: int

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}; pick from {KINDS}")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.kind == "Sp" and self.N % 2:
            raise ValueError("Sp needs even N (quaternionic presentation)")

    @property
    def c_g(self) -> float:
        N = self.N
        if self.kind == "U":
            return -1.0
        if self.kind == "SO":
            return -1.0 + 1.0 / N
        if self.kind == "SU":
            return -1.0 + 1.0 / N**2
        return -1.0 - 1.0 / N

    @property
    def beta(self) -> int:
        return _BETA[self.kind]

    @property
    def relations(self) -> tuple[str, ...]:
        return _RELATIONS[self.kind]

    def __str__(self) -> str:  # pragma: no cover - convenience
        return f"{self.kind}({self.N})"
