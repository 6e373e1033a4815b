"""Finite groups given by Cayley tables, their automorphisms and subgroups,
and element arithmetic in the semidirect product Z x_phi G.

Elements are the integers ``0 .. order-1``. Everything here is immutable
once built.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    NoIdentity,
    NoInverse,
    NotAssociative,
    NotBijective,
    NotHomomorphism,
    NotLatinSquare,
    ValidationError,
)

EXHAUSTIVE_ASSOCIATIVITY_BOUND = 512


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    order: int
    cayley: tuple[tuple[int, ...], ...]
    identity: int
    inverse: tuple[int, ...]
    name: str = "G"

    @property
    def elements(self) -> range:
        return range(self.order)

    def mul(self, a: int, b: int) -> int:
        return self.cayley[a][b]

    def inv(self, a: int) -> int:
        return self.inverse[a]

    def prod(self, xs: Iterable[int]) -> int:
        out = self.identity
        for x in xs:
            out = self.cayley[out][x]
        return out

    def power(self, a: int, n: int) -> int:
        if n < 0:
            a, n = self.inverse[a], -n
        out = self.identity
        for _ in range(n):
            out = self.cayley[out][a]
        return out

    def element_order(self, a: int) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.cayley[x][a]
            k += 1
        return k

    def same_as(self, other: "FiniteGroup") -> bool:
        return self is other or (self.identity == other.identity and self.cayley == other.cayley)

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name!r}, order={self.order})"


def _check_latin(table: np.ndarray) -> None:
    n = table.shape[0]
    full = np.arange(n)
    for i in range(n):
        if not np.array_equal(np.sort(table[i]), full):
            vals, counts = np.unique(table[i], return_counts=True)
            dup = int(vals[counts > 1][0]) if (counts > 1).any() else None
            raise NotLatinSquare(f"row {i} is not a permutation (repeated value {dup})")
        if not np.array_equal(np.sort(table[:, i]), full):
            vals, counts = np.unique(table[:, i], return_counts=True)
            dup = int(vals[counts > 1][0]) if (counts > 1).any() else None
            raise NotLatinSquare(f"column {i} is not a permutation (repeated value {dup})")


def _check_associative(table: np.ndarray, exhaustive: bool, seed: int = 0) -> None:
    n = table.shape[0]
    if exhaustive:
        # chunk over the first factor to keep memory at O(chunk * n^2)
        chunk = max(1, 2_000_000 // max(1, n * n))
        for start in range(0, n, chunk):
            xs = np.arange(start, min(n, start + chunk))
            left = table[table[xs, :], :]
            right = table[xs][:, table]
            bad = np.argwhere(left != right)
            if bad.size:
                i, y, z = (int(v) for v in bad[0])
                raise NotAssociative(f"(x*y)*z != x*(y*z) at x={int(xs[i])}, y={y}, z={z}")
        return
    rng = np.random.default_rng(seed)
    count = 10 * n * n
    x, y, z = rng.integers(0, n, size=(3, count))
    left = table[table[x, y], z]
    right = table[x, table[y, z]]
    bad = np.flatnonzero(left != right)
    if bad.size:
        k = int(bad[0])
        raise NotAssociative(f"(x*y)*z != x*(y*z) at x={int(x[k])}, y={int(y[k])}, z={int(z[k])}")


def build_group(
    cayley: Sequence[Sequence[int]],
    identity: int,
    name: str = "G",
    *,
    exhaustive: bool | None = None,
    exhaustive_bound: int = EXHAUSTIVE_ASSOCIATIVITY_BOUND,
) -> FiniteGroup:
    """Validate a Cayley table and return the group it defines.

    Associativity is checked over all triples when ``order <= exhaustive_bound``
    (or ``exhaustive=True``); otherwise ``10 * order**2`` seeded random triples
    are tested.
    """
    try:
        table = np.asarray(cayley, dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"cayley table is not a rectangular integer array: {exc}") from None
    if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
        raise ValidationError(f"cayley table must be a non-empty square table, got shape {table.shape}")
    n = table.shape[0]
    bad = np.argwhere((table < 0) | (table >= n))
    if bad.size:
        i, j = (int(v) for v in bad[0])
        raise ValidationError(f"cayley[{i}][{j}] = {int(table[i, j])} is out of range 0..{n - 1}")
    if not 0 <= identity < n:
        raise NoIdentity(f"identity index {identity} is out of range 0..{n - 1}")
    _check_latin(table)
    for x in range(n):
        if table[identity, x] != x or table[x, identity] != x:
            raise NoIdentity(f"{identity} is not an identity: fails at element {x}")
    inverse = []
    for x in range(n):
        right = int(np.flatnonzero(table[x] == identity)[0])
        if table[right, x] != identity:
            raise NoInverse(f"element {x} has right inverse {right} which is not a left inverse")
        inverse.append(right)
    if exhaustive is None:
        exhaustive = n <= exhaustive_bound
    _check_associative(table, exhaustive)
    return FiniteGroup(
        order=n,
        cayley=tuple(tuple(int(v) for v in row) for row in table),
        identity=int(identity),
        inverse=tuple(inverse),
        name=name,
    )


def _permutation_order(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    order = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length, x = 0, start
        while not seen[x]:
            seen[x] = True
            x = perm[x]
            length += 1
        order = order * length // math.gcd(order, length)
    return order


@dataclass(frozen=True, eq=False)
class Automorphism:
    group: FiniteGroup
    map: tuple[int, ...]
    inverse_map: tuple[int, ...]
    name: str = "phi"
    # _powers[k] is phi^k as a tuple, k = 0 .. order-1
    _powers: tuple[tuple[int, ...], ...] = field(repr=False, default=())

    @property
    def order(self) -> int:
        return len(self._powers)

    def __call__(self, g: int) -> int:
        return self.map[g]

    def power_map(self, n: int) -> tuple[int, ...]:
        return self._powers[n % len(self._powers)]

    def apply(self, g: int, n: int = 1) -> int:
        """phi^n(g) for any integer n."""
        return self._powers[n % len(self._powers)][g]

    def is_identity(self) -> bool:
        return len(self._powers) == 1

    def same_as(self, other: "Automorphism") -> bool:
        return self is other or (self.group.same_as(other.group) and self.map == other.map)

    def __repr__(self) -> str:
        return f"Automorphism({self.name!r}, map={list(self.map)})"


def build_automorphism(group: FiniteGroup, perm: Sequence[int], name: str = "phi") -> Automorphism:
    n = group.order
    if len(perm) != n:
        raise ValidationError(f"automorphism map has length {len(perm)}, expected {n}")
    perm = tuple(int(v) for v in perm)
    seen: dict[int, int] = {}
    for x, y in enumerate(perm):
        if not 0 <= y < n:
            raise ValidationError(f"map[{x}] = {y} is out of range 0..{n - 1}")
        if y in seen:
            raise NotBijective(f"map[{seen[y]}] = map[{x}] = {y}")
        seen[y] = x
    table = group.cayley
    for x in range(n):
        row = table[x]
        px = perm[x]
        prow = table[px]
        for y in range(n):
            if perm[row[y]] != prow[perm[y]]:
                raise NotHomomorphism(f"map(x*y) != map(x)*map(y) at x={x}, y={y}")
    inverse = [0] * n
    for x, y in enumerate(perm):
        inverse[y] = x
    k = _permutation_order(perm)
    powers = [tuple(range(n))]
    for _ in range(k - 1):
        last = powers[-1]
        powers.append(tuple(perm[v] for v in last))
    return Automorphism(group, perm, tuple(inverse), name, tuple(powers))


def identity_automorphism(group: FiniteGroup) -> Automorphism:
    return build_automorphism(group, range(group.order), name="id")


@dataclass(frozen=True)
class Subgroup:
    parent: FiniteGroup = field(compare=False, repr=False)
    members: tuple[int, ...]

    def __contains__(self, g: int) -> bool:
        return g in self._member_set

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def _member_set(self) -> frozenset[int]:
        return frozenset(self.members)

    @property
    def index(self) -> int:
        return self.parent.order // len(self.members)

    def image(self, phi: Automorphism, n: int = 1) -> frozenset[int]:
        return frozenset(phi.apply(k, n) for k in self.members)

    def conjugate(self, g: int) -> frozenset[int]:
        """The set g K g^-1."""
        G = self.parent
        gi = G.inverse[g]
        return frozenset(G.cayley[G.cayley[g][k]][gi] for k in self.members)


def subgroup_closure(group: FiniteGroup, generators: Iterable[int]) -> Subgroup:
    """Smallest subgroup containing ``generators`` (breadth-first closure)."""
    gens = sorted({int(g) for g in generators})
    for g in gens:
        if not 0 <= g < group.order:
            raise ValidationError(f"generator {g} is out of range 0..{group.order - 1}")
    members = {group.identity}
    queue = deque([group.identity])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = group.cayley[x][g]
            if y not in members:
                members.add(y)
                queue.append(y)
    # in a finite group the monoid generated is already closed under inverses
    return Subgroup(group, tuple(sorted(members)))


def subgroup_from_members(group: FiniteGroup, members: Iterable[int]) -> Subgroup:
    ms = tuple(sorted(set(members)))
    if group.identity not in ms:
        raise ValidationError("subgroup must contain the identity")
    mset = set(ms)
    for a in ms:
        if group.inverse[a] not in mset:
            raise ValidationError(f"not closed under inverse at {a}")
        for b in ms:
            if group.cayley[a][b] not in mset:
                raise ValidationError(f"not closed under product at ({a}, {b})")
    return Subgroup(group, ms)


def trivial_subgroup(group: FiniteGroup) -> Subgroup:
    return Subgroup(group, (group.identity,))


def whole_group(group: FiniteGroup) -> Subgroup:
    return Subgroup(group, tuple(group.elements))


def right_cosets(group: FiniteGroup, K: Subgroup) -> list[tuple[int, ...]]:
    """Partition of G into right cosets Kg, ordered by minimal representative."""
    seen: set[int] = set()
    cosets = []
    for g in group.elements:
        if g in seen:
            continue
        coset = tuple(sorted(group.cayley[k][g] for k in K.members))
        seen.update(coset)
        cosets.append(coset)
    return cosets


class SdElement(NamedTuple):
    """An element (n, g) of Z x_phi G."""

    n: int
    g: int


def semidirect_mul(phi: Automorphism, a: SdElement, b: SdElement) -> SdElement:
    """(n, g)(m, h) = (n + m, g phi^n(h))."""
    G = phi.group
    return SdElement(a.n + b.n, G.cayley[a.g][phi.apply(b.g, a.n)])


def semidirect_inv(phi: Automorphism, a: SdElement) -> SdElement:
    """(n, g)^-1 = (-n, phi^-n(g^-1))."""
    return SdElement(-a.n, phi.apply(phi.group.inverse[a.g], -a.n))


def semidirect_pow(phi: Automorphism, a: SdElement, k: int) -> SdElement:
    if k < 0:
        a, k = semidirect_inv(phi, a), -k
    out = SdElement(0, phi.group.identity)
    for _ in range(k):
        out = semidirect_mul(phi, out, a)
    return out


def distality_check(phi: Automorphism) -> bool:
    """True iff no orbit {phi^n(x)}, x != e, contains the identity.

    The orbit of a finite permutation is finite, so this is an exact check.
    """
    e = phi.group.identity
    for x in phi.group.elements:
        if x == e:
            continue
        if any(p[x] == e for p in phi._powers):
            return False
    return True


def pointwise_distal_check(group: FiniteGroup) -> bool:
    """True iff no conjugation orbit {g^n x g^-n}, x != e, contains the identity."""
    T, inv, e = group.cayley, group.inverse, group.identity
    for g in group.elements:
        gi = inv[g]
        for x in group.elements:
            if x == e:
                continue
            y = x
            while True:
                y = T[T[g][y]][gi]
                if y == e:
                    return False
                if y == x:
                    break
    return True

