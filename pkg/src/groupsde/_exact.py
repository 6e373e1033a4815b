"""Exact linear algebra for rational stochastic matrices.

A stochastic matrix is carried as an integer matrix ``A`` and a common
denominator ``D`` (so P = A / D); all elimination is fraction-free on
integers. Column-stochastic convention: ``A[y][x] / D`` is the probability of
moving from state x to state y, so a measure evolves as ``v -> P v``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import Sequence

IntMatrix = list[list[int]]


def common_denominator(values: Sequence[Fraction]) -> int:
    return reduce(lambda a, q: a * q.denominator // math.gcd(a, q.denominator), values, 1)


def int_matmul(A: IntMatrix, B: IntMatrix) -> IntMatrix:
    Bt = list(zip(*B))
    out = []
    for row in A:
        nz = [(k, a) for k, a in enumerate(row) if a]
        out.append([sum(a * col[k] for k, a in nz) for col in Bt])
    return out


def int_matpow(A: IntMatrix, k: int) -> IntMatrix:
    n = len(A)
    out = [[int(i == j) for j in range(n)] for i in range(n)]
    base = A
    while k:
        if k & 1:
            out = int_matmul(out, base)
        k >>= 1
        if k:
            base = int_matmul(base, base)
    return out


def _row_gcd_normalize(row: list[int]) -> list[int]:
    g = reduce(math.gcd, row, 0)
    return [x // g for x in row] if g > 1 else row


def int_nullspace(A: IntMatrix) -> list[list[int]]:
    """Integer basis of {x : A x = 0} via fraction-free Gauss-Jordan."""
    rows = [list(r) for r in A if any(r)]
    if not rows:
        return [[int(i == j) for j in range(len(A[0]))] for i in range(len(A[0]))] if A else []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        p = rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                a, b = p[c], rows[i][c]
                rows[i] = _row_gcd_normalize([a * x - b * y for x, y in zip(rows[i], p)])
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    pv = [rows[i][c] for i, c in enumerate(pivots)]
    M = reduce(lambda a, b: a * abs(b) // math.gcd(a, abs(b)), pv, 1)
    basis = []
    for f in (c for c in range(ncols) if c not in set(pivots)):
        v = [0] * ncols
        v[f] = M
        for i, c in enumerate(pivots):
            v[c] = -rows[i][f] * M // pv[i]
        basis.append(_row_gcd_normalize(v))
    return basis


def solve(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Solve a small nonsingular system over the rationals."""
    n = len(A)
    aug = [list(map(Fraction, A[i])) + [Fraction(b[i])] for i in range(n)]
    for c in range(n):
        pivot = next((i for i in range(c, n) if aug[i][c]), None)
        if pivot is None:
            raise ZeroDivisionError("singular system")
        aug[c], aug[pivot] = aug[pivot], aug[c]
        p = aug[c][c]
        aug[c] = [x / p for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c]:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return [aug[i][n] for i in range(n)]


def cesaro_apply(A: IntMatrix, D: int, v: Sequence[Fraction]) -> list[Fraction]:
    """Pi v, where Pi = lim (1/N) sum_{k<N} P^k and P = A / D is stochastic.

    Eigenvalue 1 of a stochastic matrix is semisimple, so Pi is the projector
    onto ker(P - I) along range(P - I): Pi = R (L R)^-1 L with R, L bases of
    right and left fixed vectors.
    """
    n = len(A)
    M = [[A[i][j] - (D if i == j else 0) for j in range(n)] for i in range(n)]
    right = int_nullspace(M)
    left = int_nullspace([list(col) for col in zip(*M)])
    LR = [[sum(l[k] * r[k] for k in range(n)) for r in right] for l in left]
    Lv = [sum((l[k] * v[k] for k in range(n) if v[k]), Fraction(0)) for l in left]
    y = solve(LR, Lv)
    return [sum((r[k] * y[i] for i, r in enumerate(right)), Fraction(0)) for k in range(n)]


def int_matvec(A: IntMatrix, D: int, v: Sequence[Fraction]) -> list[Fraction]:
    nz = [(k, x) for k, x in enumerate(v) if x]
    return [sum((row[k] * x for k, x in nz), Fraction(0)) / D for row in A]


def _strongly_connected(adj: list[list[int]]) -> list[list[int]]:
    # state spaces here are tiny, so mutual reachability is simplest
    n = len(adj)
    reach = []
    for s in range(n):
        seen = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        reach.append(seen)
    comps, done = [], set()
    for s in range(n):
        if s in done:
            continue
        comp = sorted(t for t in reach[s] if s in reach[t])
        done.update(comp)
        comps.append(comp)
    return comps


def recurrent_periods(A: IntMatrix) -> list[tuple[list[int], int]]:
    """Closed communicating classes of the chain with transition support A
    (column x lists the successors of x), with their periods."""
    n = len(A)
    adj = [[y for y in range(n) if A[y][x]] for x in range(n)]
    out = []
    for comp in _strongly_connected(adj):
        cset = set(comp)
        if any(y not in cset for x in comp for y in adj[x]):
            continue
        level = {comp[0]: 0}
        queue = [comp[0]]
        for x in queue:
            for y in adj[x]:
                if y not in level:
                    level[y] = level[x] + 1
                    queue.append(y)
        d = 0
        for x in comp:
            for y in adj[x]:
                d = math.gcd(d, level[x] + 1 - level[y])
        out.append((comp, abs(d)))
    return out
