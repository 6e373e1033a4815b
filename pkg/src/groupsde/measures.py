"""Exact probability measures on finite groups and on Z x_phi G.

All weights are ``fractions.Fraction``; no operation here rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from . import _exact
from .errors import AutomorphismMismatch, GroupMismatch, InvalidMeasure, NotConverged
from .groups import Automorphism, FiniteGroup, Subgroup

_ZERO = Fraction(0)
_ONE = Fraction(1)


def parse_rational(value) -> Fraction:
    """Accept ints, Fractions and strings like "3/8"; reject floats."""
    if isinstance(value, float):
        raise InvalidMeasure(f"floating point weight {value!r} is not allowed; use 'p/q'")
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise InvalidMeasure(f"cannot parse {value!r} as a rational") from None


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, eq=False)
class RationalMeasure:
    group: FiniteGroup
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.weights) != self.group.order:
            raise InvalidMeasure(f"{len(self.weights)} weights for a group of order {self.group.order}")
        for g, w in enumerate(self.weights):
            if w < 0:
                raise InvalidMeasure(f"negative weight {w} at element {g}")
        total = sum(self.weights, _ZERO)
        if total != 1:
            raise InvalidMeasure(f"weights sum to {total}, not 1")

    @classmethod
    def from_dict(cls, group: FiniteGroup, weights: Mapping[int, object]) -> "RationalMeasure":
        dense = [_ZERO] * group.order
        for g, w in weights.items():
            g = int(g)
            if not 0 <= g < group.order:
                raise InvalidMeasure(f"element index {g} out of range 0..{group.order - 1}")
            dense[g] += parse_rational(w)
        return cls(group, tuple(dense))

    @classmethod
    def _trusted(cls, group: FiniteGroup, weights: Sequence[Fraction]) -> "RationalMeasure":
        # skips validation; only for outputs of exact operations on valid inputs
        obj = object.__new__(cls)
        object.__setattr__(obj, "group", group)
        object.__setattr__(obj, "weights", tuple(weights))
        return obj

    def __getitem__(self, g: int) -> Fraction:
        return self.weights[g]

    def support(self) -> tuple[int, ...]:
        return tuple(g for g, w in enumerate(self.weights) if w)

    def items(self) -> Iterator[tuple[int, Fraction]]:
        return ((g, w) for g, w in enumerate(self.weights) if w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMeasure):
            return NotImplemented
        return self.weights == other.weights and self.group.same_as(other.group)

    def __hash__(self) -> int:
        return hash(tuple((w.numerator, w.denominator) for w in self.weights))

    def __repr__(self) -> str:
        body = ", ".join(f"{g}: {format_rational(w)}" for g, w in self.items())
        return f"RationalMeasure({{{body}}})"

    def to_strings(self) -> dict[str, str]:
        return {str(g): format_rational(w) for g, w in self.items()}


def point_mass(group: FiniteGroup, g: int) -> RationalMeasure:
    w = [_ZERO] * group.order
    w[g] = _ONE
    return RationalMeasure._trusted(group, w)


def uniform(group: FiniteGroup, elements: Iterable[int]) -> RationalMeasure:
    els = set(elements)
    if not els:
        raise InvalidMeasure("uniform measure on an empty set")
    p = Fraction(1, len(els))
    return RationalMeasure(group, tuple(p if g in els else _ZERO for g in group.elements))


def mixture(measures: Sequence[RationalMeasure], coefficients: Sequence[object]) -> RationalMeasure:
    coefs = [parse_rational(c) for c in coefficients]
    group = measures[0].group
    out = [_ZERO] * group.order
    for m, c in zip(measures, coefs, strict=True):
        _same_group(group, m.group)
        for g, w in m.items():
            out[g] += c * w
    return RationalMeasure(group, tuple(out))


def _same_group(a: FiniteGroup, b: FiniteGroup) -> None:
    if not a.same_as(b):
        raise GroupMismatch(f"measures live on different groups ({a.name} vs {b.name})")


def convolve(mu: RationalMeasure, lam: RationalMeasure) -> RationalMeasure:
    """(mu * lam)(g) = sum_h mu(g h^-1) lam(h): the law of XY, X ~ mu, Y ~ lam."""
    _same_group(mu.group, lam.group)
    T = mu.group.cayley
    # integer numerators over a common denominator; one Fraction per output entry
    left, dl = _numerators(mu)
    right, dr = _numerators(lam)
    out = [0] * mu.group.order
    for a, wa in left:
        row = T[a]
        for b, wb in right:
            out[row[b]] += wa * wb
    den = dl * dr
    return RationalMeasure._trusted(mu.group, [Fraction(x, den) if x else _ZERO for x in out])


def _numerators(mu: RationalMeasure) -> tuple[list[tuple[int, int]], int]:
    items = list(mu.items())
    den = _exact.common_denominator([w for _, w in items])
    return [(g, w.numerator * (den // w.denominator)) for g, w in items], den


def convolve_all(measures: Iterable[RationalMeasure]) -> RationalMeasure:
    it = iter(measures)
    out = next(it)
    for m in it:
        out = convolve(out, m)
    return out


def convolution_power(mu: RationalMeasure, n: int) -> RationalMeasure:
    out = point_mass(mu.group, mu.group.identity)
    for _ in range(n):
        out = convolve(out, mu)
    return out


def reverse(mu: RationalMeasure) -> RationalMeasure:
    inv = mu.group.inverse
    out = [_ZERO] * mu.group.order
    for g, w in mu.items():
        out[inv[g]] = w
    return RationalMeasure._trusted(mu.group, out)


def pushforward(phi: Automorphism, mu: RationalMeasure, n: int = 1) -> RationalMeasure:
    """phi^n(mu): the law of phi^n(X) for X ~ mu."""
    _same_group(phi.group, mu.group)
    pm = phi.power_map(n)
    out = [_ZERO] * mu.group.order
    for g, w in mu.items():
        out[pm[g]] = w
    return RationalMeasure._trusted(mu.group, out)


def shift_left(x: int, mu: RationalMeasure) -> RationalMeasure:
    """x mu = delta_x * mu."""
    row = mu.group.cayley[x]
    out = [_ZERO] * mu.group.order
    for g, w in mu.items():
        out[row[g]] = w
    return RationalMeasure._trusted(mu.group, out)


def shift_right(mu: RationalMeasure, x: int) -> RationalMeasure:
    """mu x = mu * delta_x."""
    T = mu.group.cayley
    out = [_ZERO] * mu.group.order
    for g, w in mu.items():
        out[T[g][x]] = w
    return RationalMeasure._trusted(mu.group, out)


def haar(K: Subgroup) -> RationalMeasure:
    """Normalized Haar measure of a finite subgroup: uniform on its members."""
    return uniform(K.parent, K.members)


def is_left_invariant(mu: RationalMeasure, K: Subgroup, *, witness: bool = False):
    """True iff omega_K * mu == mu, cross-checked against x mu == mu for x in K.

    With ``witness=True`` returns ``(ok, x)`` where x is an element of K with
    x mu != mu (or None).
    """
    via_haar = convolve(haar(K), mu) == mu
    bad = next((x for x in K.members if shift_left(x, mu) != mu), None)
    if via_haar != (bad is None):
        raise AssertionError("left-invariance criteria disagree; convolution is broken")
    return (via_haar, bad) if witness else via_haar


def is_right_invariant(mu: RationalMeasure, K: Subgroup) -> bool:
    return all(shift_right(mu, x) == mu for x in K.members)


def tv_distance(mu: RationalMeasure, lam: RationalMeasure) -> Fraction:
    _same_group(mu.group, lam.group)
    return sum((abs(a - b) for a, b in zip(mu.weights, lam.weights)), _ZERO) / 2


def is_idempotent(mu: RationalMeasure) -> bool:
    return convolve(mu, mu) == mu


# ---------------------------------------------------------------- limits


@dataclass(frozen=True)
class LimitDiagnostics:
    converged: bool
    terms: int
    transient: int | None = None
    period: int | None = None
    oscillation: Fraction | None = None
    method: str = "recurrence"
    limit_points: tuple[RationalMeasure, ...] = field(default=(), compare=False, repr=False)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "converged": self.converged,
            "terms": self.terms,
            "transient": self.transient,
            "period": self.period,
            "oscillation": None if self.oscillation is None else format_rational(self.oscillation),
        }


def _average(measures: Sequence[RationalMeasure]) -> RationalMeasure:
    group = measures[0].group
    out = [_ZERO] * group.order
    for m in measures:
        for g, w in m.items():
            out[g] += w
    k = len(measures)
    return RationalMeasure._trusted(group, [w / k for w in out])


def cesaro_limit(
    seq: Iterable[RationalMeasure],
    max_terms: int = 64,
    window: int = 16,
    *,
    strict: bool = True,
) -> tuple[RationalMeasure, LimitDiagnostics]:
    """Limit of a measure sequence that is exactly eventually periodic.

    Terms are hashed exactly; the first recurrence ``m_j == m_i`` (i < j)
    fixes a period ``j - i`` and the average over one period is returned.
    Without a recurrence in ``max_terms`` terms this raises ``NotConverged``
    (``strict``) or returns the average of the last ``window`` terms with a
    non-converged diagnostic.
    """
    seen: dict[RationalMeasure, int] = {}
    history: list[RationalMeasure] = []
    for j, m in enumerate(seq):
        if j >= max_terms:
            break
        i = seen.get(m)
        if i is not None:
            cycle = history[i:]
            diag = LimitDiagnostics(True, j + 1, transient=i, period=j - i, limit_points=tuple(cycle))
            return _average(cycle), diag
        seen[m] = j
        history.append(m)
    if not history:
        raise ValueError("empty sequence")
    tail = history[-window:]
    avg = _average(tail)
    osc = max(tv_distance(m, avg) for m in tail)
    if strict:
        raise NotConverged(
            f"no exact recurrence within {len(history)} terms (oscillation {float(osc):.3g})",
            last=history[-1],
            oscillation=osc,
        )
    return avg, LimitDiagnostics(False, len(history), oscillation=osc)


def orbit_limit(
    kernel: Callable[[int], RationalMeasure],
    start: RationalMeasure,
    max_period: int = 64,
) -> tuple[RationalMeasure, LimitDiagnostics]:
    """Exact asymptotics of the orbit start, T start, T^2 start, ... of the
    Markov operator T(delta_x) = kernel(x).

    The states reachable from ``supp(start)`` are enumerated and T becomes a
    rational stochastic matrix P. With L the lcm of the periods of its closed
    classes, P^L is aperiodic there, so P^{jL + r} start converges for each
    residue r to Pi (P^r start), Pi the Cesaro projector of P^L. These L limit
    points are exact; the orbit converges iff they coincide. The returned
    measure is their average, which is the Cesaro limit of the orbit.
    """
    group = start.group
    states: list[int] = []
    pos: dict[int, int] = {}
    rows: dict[int, RationalMeasure] = {}
    frontier = list(start.support())
    while frontier:
        x = frontier.pop()
        if x in pos:
            continue
        pos[x] = len(states)
        states.append(x)
        rows[x] = kernel(x)
        frontier.extend(y for y in rows[x].support() if y not in pos)
    n = len(states)
    D = _exact.common_denominator([w for x in states for _, w in rows[x].items()])
    A = [[0] * n for _ in range(n)]
    for x in states:
        for y, w in rows[x].items():
            A[pos[y]][pos[x]] = w.numerator * (D // w.denominator)
    L = 1
    for _, d in _exact.recurrent_periods(A):
        L = L * d // math.gcd(L, d)
    if L > max_period:
        raise NotConverged(f"orbit period {L} exceeds bound {max_period}", last=start)
    AL = _exact.int_matpow(A, L)
    v = [start[x] for x in states]
    points = []
    for _ in range(L):
        lim = _exact.cesaro_apply(AL, D**L, v)
        dense = [_ZERO] * group.order
        for x, w in zip(states, lim):
            dense[x] = w
        points.append(RationalMeasure(group, tuple(dense)))
        v = _exact.int_matvec(A, D, v)
    # minimal period of the limit cycle
    period = next(p for p in range(1, L + 1) if L % p == 0 and points[p:] == points[:-p])
    cycle = points[:period]
    diag = LimitDiagnostics(
        converged=period == 1,
        terms=L,
        period=period,
        method="spectral",
        limit_points=tuple(cycle),
    )
    return _average(cycle), diag


# ------------------------------------------------------- semidirect measures


@dataclass(frozen=True, eq=False)
class SemidirectMeasure:
    """A probability measure on Z x_phi G stored by integer fiber.

    ``fibers`` maps n to (mass of {n} x G, conditional law on G).
    """

    phi: Automorphism
    fibers: Mapping[int, tuple[Fraction, RationalMeasure]]

    def __post_init__(self):
        total = sum((m for m, _ in self.fibers.values()), _ZERO)
        if total != 1:
            raise InvalidMeasure(f"fiber masses sum to {total}, not 1")
        for n, (m, _) in self.fibers.items():
            if m <= 0:
                raise InvalidMeasure(f"fiber {n} has non-positive mass {m}")

    def fiber_indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.fibers))

    def mass(self, n: int) -> Fraction:
        return self.fibers[n][0] if n in self.fibers else _ZERO

    def conditional(self, n: int) -> RationalMeasure:
        return self.fibers[n][1]

    def weight(self, n: int, g: int) -> Fraction:
        if n not in self.fibers:
            return _ZERO
        m, c = self.fibers[n]
        return m * c[g]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SemidirectMeasure):
            return NotImplemented
        return self.phi.same_as(other.phi) and dict(self.fibers) == dict(other.fibers)

    def __hash__(self):
        return hash(tuple(sorted((n, m, c.weights) for n, (m, c) in self.fibers.items())))


def _from_joint(phi: Automorphism, joint: Mapping[int, list[Fraction]]) -> SemidirectMeasure:
    fibers = {}
    for n in sorted(joint):
        w = joint[n]
        mass = sum(w, _ZERO)
        if mass:
            fibers[n] = (mass, RationalMeasure._trusted(phi.group, [x / mass for x in w]))
    return SemidirectMeasure(phi, fibers)


def sd_lift(mu: RationalMeasure, phi: Automorphism) -> SemidirectMeasure:
    """1 (x) mu: the point mass at 1 in Z times mu."""
    _same_group(phi.group, mu.group)
    return SemidirectMeasure(phi, {1: (_ONE, mu)})


def sd_point(phi: Automorphism, n: int, g: int) -> SemidirectMeasure:
    return SemidirectMeasure(phi, {n: (_ONE, point_mass(phi.group, g))})


def sd_convolve(a: SemidirectMeasure, b: SemidirectMeasure) -> SemidirectMeasure:
    """Fiber n + m collects mass_a(n) mass_b(m) [cond_a(n) * phi^n(cond_b(m))]."""
    if not a.phi.same_as(b.phi):
        raise AutomorphismMismatch("semidirect measures use different automorphisms")
    phi = a.phi
    order = phi.group.order
    joint: dict[int, list[Fraction]] = {}
    for n, (ma, ca) in a.fibers.items():
        for m, (mb, cb) in b.fibers.items():
            c = convolve(ca, pushforward(phi, cb, n))
            acc = joint.setdefault(n + m, [_ZERO] * order)
            coef = ma * mb
            for g, w in c.items():
                acc[g] += coef * w
    return _from_joint(phi, joint)


def sd_reverse(a: SemidirectMeasure) -> SemidirectMeasure:
    """Law of (n, g)^-1 = (-n, phi^-n(g^-1))."""
    fibers = {}
    for n, (m, c) in a.fibers.items():
        fibers[-n] = (m, pushforward(a.phi, reverse(c), -n))
    return SemidirectMeasure(a.phi, fibers)


def sd_power(a: SemidirectMeasure, j: int) -> SemidirectMeasure:
    if j < 1:
        raise ValueError("sd_power needs j >= 1")
    out = a
    for _ in range(j - 1):
        out = sd_convolve(out, a)
    return out
