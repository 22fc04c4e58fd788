"""Pauli strings and their partition into mutually unbiased bases.

A string's letter ``k`` acts on qubit ``k`` (bit ``k`` of the basis index).
Internally a string is a symplectic pair of bitmasks ``(x, z)``: ``X=(1,0)``,
``Z=(0,1)``, ``Y=(1,1)``. Lexicographic order uses ``I < X < Y < Z`` on the
letters read from qubit 0 upward.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np

from .qsim import I2, X, Y, Z

LETTERS = "IXYZ"
_MATRICES = {"I": I2, "X": X, "Y": Y, "Z": Z}
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_FROM_BITS = {v: k for k, v in _BITS.items()}
MAX_MUB_QUBITS = 5


@dataclass(frozen=True, order=True)
class PauliString:
    letters: str

    def __post_init__(self):
        if not self.letters or any(c not in LETTERS for c in self.letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def symplectic(self) -> tuple[int, int]:
        x = z = 0
        for k, c in enumerate(self.letters):
            bx, bz = _BITS[c]
            x |= bx << k
            z |= bz << k
        return x, z

    @classmethod
    def from_symplectic(cls, x: int, z: int, n: int) -> "PauliString":
        return cls("".join(_FROM_BITS[((x >> k) & 1, (z >> k) & 1)] for k in range(n)))

    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    def support(self) -> tuple:
        return tuple(k for k, c in enumerate(self.letters) if c != "I")

    def commutes(self, other: "PauliString") -> bool:
        return commutes(self.symplectic, other.symplectic)

    def matrix(self) -> np.ndarray:
        # qubit 0 is the least-significant bit, so it is the last Kronecker factor
        out = np.ones((1, 1), dtype=complex)
        for c in self.letters:
            out = np.kron(_MATRICES[c], out)
        return out

    def sort_key(self) -> tuple:
        return tuple(LETTERS.index(c) for c in self.letters)

    def __str__(self):
        return self.letters


def commutes(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return bin((a[0] & b[1]) ^ (a[1] & b[0])).count("1") % 2 == 0


def all_strings(n: int, include_identity: bool = False) -> list:
    """All Pauli strings on ``n`` qubits in lexicographic order."""
    out = [PauliString("".join(w)) for w in itertools.product(LETTERS, repeat=n)]
    if not include_identity:
        out = out[1:]
    return out


@dataclass
class MubPartition:
    n: int
    groups: list  # list[list[PauliString]]
    separable_flags: list

    def to_text(self) -> str:
        """One ``group<TAB>word`` line per string."""
        return "".join(f"{g}\t{s.letters}\n" for g, group in enumerate(self.groups) for s in group)

    @classmethod
    def from_text(cls, text: str) -> "MubPartition":
        groups: dict[int, list] = {}
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            idx, word = line.split("\t")
            groups.setdefault(int(idx), []).append(PauliString(word.strip()))
        ordered = [groups[k] for k in sorted(groups)]
        n = ordered[0][0].n
        return cls(n, ordered, [is_separable_group(g) for g in ordered])


def is_separable_group(group) -> bool:
    """True when the group contains a weight-one string on every qubit,
    i.e. its joint eigenbasis is a product basis."""
    n = group[0].n
    covered = {s.support()[0] for s in group if len(s.support()) == 1}
    return covered == set(range(n))


def _qwc_family(n: int, letter: str) -> list:
    return [PauliString("".join(w)) for w in itertools.product("I" + letter, repeat=n)][1:]


def _parity(v: int) -> int:
    return bin(v).count("1") & 1


def _symmetric_matrices(n: int):
    """All symmetric n x n matrices over GF(2), as tuples of row bitmasks."""
    upper = [(i, j) for i in range(n) for j in range(i, n)]
    for bits in range(1 << len(upper)):
        rows = [0] * n
        for k, (i, j) in enumerate(upper):
            if bits >> k & 1:
                rows[i] |= 1 << j
                rows[j] |= 1 << i
        yield tuple(rows)


def _graph_mask(rows: tuple, n: int, rank: dict) -> int:
    """Bitmask (by lexicographic rank) of the strings ``(x, Mx)``, ``x != 0``."""
    mask = 0
    for x in range(1, 1 << n):
        z = 0
        for i, row in enumerate(rows):
            z |= _parity(row & x) << i
        mask |= 1 << rank[(x, z)]
    return mask


def _clique_search(uncovered: int, candidates: list) -> list | None:
    """Exact cover of ``uncovered`` by pairwise-disjoint candidate cliques.

    Seeds on the lexicographically smallest uncovered string, tries the cliques
    containing it in candidate order, and prunes when some uncovered string has
    no compatible clique left.
    """
    if not uncovered:
        return []
    lowest = uncovered & -uncovered
    for i, mask in enumerate(candidates):
        if not mask & lowest:
            continue
        rest_uncovered = uncovered & ~mask
        rest = [m for m in candidates[i + 1:] if not m & mask]
        rest = [m for m in candidates[:i] if not m & mask and not m & lowest] + rest
        reachable = 0
        for m in rest:
            reachable |= m
        if reachable & rest_uncovered != rest_uncovered:
            continue
        found = _clique_search(rest_uncovered, rest)
        if found is not None:
            return [mask] + found
    return None


@functools.lru_cache(maxsize=None)
def enumerate_mubs(n: int) -> MubPartition:
    """Partition the ``4^n - 1`` non-trivial strings into ``2^n + 1`` commuting groups.

    The three qubit-wise commuting families over ``{I,X}``, ``{I,Y}`` and
    ``{I,Z}`` are taken first. Any other maximal commuting group meeting the
    ``{I,Z}`` family only trivially is the set ``{(x, Mx)}`` for a symmetric
    binary matrix ``M``, so the remaining strings are covered by a backtracking
    exact-cover search over those cliques. The next clique is always seeded by
    the smallest uncovered string, and a branch is pruned as soon as some
    uncovered string has no compatible clique left.
    """
    if not 1 <= n <= MAX_MUB_QUBITS:
        raise ValueError(f"n must lie in [1, {MAX_MUB_QUBITS}]")
    families = [_qwc_family(n, c) for c in "XYZ"]
    strings = all_strings(n)
    rank = {s.symplectic: r for r, s in enumerate(strings)}
    family_mask = 0
    for fam in families:
        for s in fam:
            family_mask |= 1 << rank[s.symplectic]
    # every remaining group misses the Z family, so it is the graph of a
    # symmetric matrix; keep those disjoint from the three families
    candidates = sorted(
        m for m in (_graph_mask(rows, n, rank) for rows in _symmetric_matrices(n)) if not m & family_mask
    )
    rest = ((1 << len(strings)) - 1) & ~family_mask
    cover = _clique_search(rest, candidates)
    if cover is None:
        raise RuntimeError(f"no clique cover found for n={n}")
    groups = [sorted(f, key=PauliString.sort_key) for f in families]
    groups += [[strings[r] for r in range(len(strings)) if mask >> r & 1] for mask in cover]
    return MubPartition(n, groups, [is_separable_group(g) for g in groups])
