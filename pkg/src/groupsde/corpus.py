"""Built-in groups, automorphism enumeration, and the seeded model corpus
used by ``groupsde corpus`` and the acceptance tests."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .errors import ValidationError
from .groups import (
    Automorphism,
    FiniteGroup,
    build_automorphism,
    build_group,
    subgroup_closure,
)
from .measures import RationalMeasure
from .sde import NoiseModel, make_model

CORPUS_VERSION = 1
DEFAULT_SEED = 20240611
DEFAULT_AUT_CAP = 24
DEFAULT_MEASURES = 10


def cyclic_group(n: int) -> FiniteGroup:
    return build_group([[(i + j) % n for j in range(n)] for i in range(n)], 0, name=f"Z{n}")


def dihedral_group(n: int) -> FiniteGroup:
    """D_n of order 2n; index a + n*b stands for r^a s^b."""

    def mul(x, y):
        a, b = x % n, x // n
        c, d = y % n, y // n
        return ((a + (-c if b else c)) % n) + n * ((b + d) % 2)

    size = 2 * n
    return build_group([[mul(x, y) for y in range(size)] for x in range(size)], 0, name=f"D{n}")


def symmetric_group(n: int) -> FiniteGroup:
    perms = sorted(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    # (p q)(i) = p(q(i))
    table = [[index[tuple(p[q[i]] for i in range(n))] for q in perms] for p in perms]
    return build_group(table, index[tuple(range(n))], name=f"S{n}")


def quaternion_group() -> FiniteGroup:
    """Q_8; index u + 4*s stands for (-1)^s u with u in (1, i, j, k)."""
    # unit products: (result unit, sign flip)
    units = {
        (0, 0): (0, 0), (0, 1): (1, 0), (0, 2): (2, 0), (0, 3): (3, 0),
        (1, 0): (1, 0), (1, 1): (0, 1), (1, 2): (3, 0), (1, 3): (2, 1),
        (2, 0): (2, 0), (2, 1): (3, 1), (2, 2): (0, 1), (2, 3): (1, 0),
        (3, 0): (3, 0), (3, 1): (2, 0), (3, 2): (1, 1), (3, 3): (0, 1),
    }

    def mul(x, y):
        u, s = units[(x % 4, y % 4)]
        return u + 4 * ((x // 4 + y // 4 + s) % 2)

    return build_group([[mul(x, y) for y in range(8)] for x in range(8)], 0, name="Q8")


def _generating_set(group: FiniteGroup) -> list[int]:
    gens: list[int] = []
    members = set(subgroup_closure(group, gens).members)
    # prefer high-order elements so that few generators suffice
    for g in sorted(group.elements, key=lambda x: (-group.element_order(x), x)):
        if g not in members:
            gens.append(g)
            members = set(subgroup_closure(group, gens).members)
        if len(members) == group.order:
            break
    return gens


def all_automorphisms(group: FiniteGroup, cap: int | None = None) -> list[Automorphism]:
    """Every automorphism, found by sending a generating set to tuples of
    elements of matching orders and extending along words. Ordered by map;
    at most ``cap`` are returned (identity always first)."""
    gens = _generating_set(group)
    T = group.cayley
    orders = [group.element_order(x) for x in group.elements]
    choices = [[y for y in group.elements if orders[y] == orders[g]] for g in gens]
    found = []
    for images in itertools.product(*choices):
        perm = {group.identity: group.identity}
        queue = [group.identity]
        ok = True
        for x in queue:
            for g, h in zip(gens, images):
                y, img = T[x][g], T[perm[x]][h]
                if y in perm:
                    if perm[y] != img:
                        ok = False
                        break
                else:
                    perm[y] = img
                    queue.append(y)
            if not ok:
                break
        if not ok or len(set(perm.values())) != group.order:
            continue
        try:
            found.append(build_automorphism(group, [perm[x] for x in group.elements]))
        except ValidationError:
            continue
    found.sort(key=lambda a: (not a.is_identity(), a.map))
    if cap is not None:
        found = found[:cap]
    return [
        build_automorphism(group, a.map, name="id" if a.is_identity() else f"aut{i}")
        for i, a in enumerate(found)
    ]


def builtin_groups() -> list[FiniteGroup]:
    groups = [cyclic_group(n) for n in range(1, 13)]
    groups += [dihedral_group(4), symmetric_group(3), quaternion_group()]
    return groups


def random_measure(group: FiniteGroup, rng: random.Random) -> RationalMeasure:
    """Random rational measure; supports are biased towards small sets and
    subsets of cosets so that K_mu ranges over proper subgroups too."""
    n = group.order
    style = rng.randrange(3)
    if style == 0:
        support = rng.sample(range(n), rng.randint(1, min(3, n)))
    elif style == 1:
        H = subgroup_closure(group, [rng.randrange(n)])
        g = rng.randrange(n)
        coset = [group.cayley[h][g] for h in H.members]
        support = rng.sample(coset, rng.randint(1, len(coset)))
    else:
        support = rng.sample(range(n), rng.randint(1, n))
    raw = {g: rng.randint(1, 9) for g in support}
    total = sum(raw.values())
    return RationalMeasure.from_dict(group, {g: Fraction(w, total) for g, w in raw.items()})


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    model: NoiseModel


def build_corpus(
    seed: int = DEFAULT_SEED,
    measures_per_model: int = DEFAULT_MEASURES,
    aut_cap: int = DEFAULT_AUT_CAP,
    group_filter: str | None = None,
) -> list[CorpusEntry]:
    """All (group, automorphism, random measure) triples, in a fixed order.

    Each random measure draws from ``random.Random(f"{seed}:{group}:{aut}:{i}")``
    so entries do not depend on which other groups are selected.
    """
    entries = []
    for group in builtin_groups():
        if group_filter and group_filter not in group.name:
            continue
        for phi in all_automorphisms(group, aut_cap):
            for i in range(measures_per_model):
                rng = random.Random(f"{seed}:{group.name}:{phi.name}:{i}")
                name = f"{group.name}/{phi.name}/mu{i}"
                entries.append(CorpusEntry(name, make_model(phi, random_measure(group, rng), name=name)))
    return entries


def iter_groups_with_automorphisms(aut_cap: int = DEFAULT_AUT_CAP) -> Iterator[tuple[FiniteGroup, list[Automorphism]]]:
    for group in builtin_groups():
        yield group, all_automorphisms(group, aut_cap)
