"""The recursion eta_k = xi_k phi(eta_{k-1}) on a finite group, at the level
of laws: lambda_k = mu * phi(lambda_{k-1}).

Main entry points:

* ``compute_Kmu``  -- the compact subgroup carrying the noise, from the limit
  of rho^j * rho^j-reversed, cross-checked by an algebraic closure.
* ``solution_family`` / ``extremal_solutions`` -- every solution law built
  from a left K-invariant starting measure.
* ``solution_from_limit`` -- a solution assembled from the limit of the
  shifted noise products, the way the existence argument does it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import (
    HypothesisViolation,
    LimitNotConverged,
    LimitNotIdempotent,
    NotConverged,
    NotInvariant,
    TheoremViolation,
    ValidationError,
)
from .groups import (
    Automorphism,
    FiniteGroup,
    SdElement,
    Subgroup,
    right_cosets,
    semidirect_pow,
    subgroup_closure,
)
from .measures import (
    LimitDiagnostics,
    RationalMeasure,
    SemidirectMeasure,
    cesaro_limit,
    convolve,
    format_rational,
    haar,
    is_idempotent,
    is_left_invariant,
    mixture,
    orbit_limit,
    point_mass,
    pushforward,
    reverse,
    sd_convolve,
    sd_lift,
    shift_left,
    shift_right,
)

DEFAULT_N_MAX = 64
DEFAULT_WINDOW = (-8, 8)


@dataclass(frozen=True)
class NoiseModel:
    group: FiniteGroup = field(repr=False)
    phi: Automorphism
    mu: RationalMeasure
    z: int
    name: str = ""

    def with_z(self, z: int) -> "NoiseModel":
        return replace(self, z=z)


def make_model(phi: Automorphism, mu: RationalMeasure, z: int | None = None, name: str = "") -> NoiseModel:
    """Bundle (G, phi, mu); z defaults to the smallest support point of mu."""
    group = phi.group
    if not mu.group.same_as(group):
        raise ValidationError("noise measure and automorphism live on different groups")
    supp = mu.support()
    if z is None:
        z = supp[0]
    elif z not in supp:
        raise ValidationError(f"z = {z} is not in the support of mu {supp}")
    return NoiseModel(group, phi, mu, z, name)


# ----------------------------------------------------------- noise products


def noise_products(model: NoiseModel) -> Iterator[RationalMeasure]:
    """sigma_1, sigma_2, ... with sigma_j = mu * phi(mu) * ... * phi^{j-1}(mu)."""
    sigma = model.mu
    j = 1
    while True:
        yield sigma
        sigma = convolve(sigma, pushforward(model.phi, model.mu, j))
        j += 1


def noise_product(model: NoiseModel, j: int) -> RationalMeasure:
    if j < 1:
        raise ValueError("noise_product needs j >= 1")
    for i, sigma in enumerate(noise_products(model), start=1):
        if i == j:
            return sigma
    raise AssertionError  # unreachable


def shift_element(model: NoiseModel, i: int) -> int:
    """s_i = phi^{i-1}(z^-1) ... phi(z^-1) z^-1, read off from rho^i a^-i.

    With a = (1, z) we have a^-i = (-i, h) and (i, g)(-i, h) = (0, g phi^i(h)),
    so the G-shift is phi^i(h).
    """
    a_inv_i = semidirect_pow(model.phi, SdElement(1, model.z), -i)
    return model.phi.apply(a_inv_i.g, i)


def shifted_sequence(model: NoiseModel, n_max: int) -> Iterator[RationalMeasure]:
    """tau_i = sigma_i s_i for i = 1 .. n_max (the G-part of rho^i a^-i)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    G = model.group
    zi = G.inverse[model.z]
    s = G.identity
    for i, sigma in enumerate(noise_products(model), start=1):
        if i > n_max:
            return
        s = G.cayley[model.phi(s)][zi]  # s_i = phi(s_{i-1}) z^-1
        yield shift_right(sigma, s)


def _tau_kernel(model: NoiseModel):
    # tau_{j+1} = mu * phi(tau_j) * delta_{z^-1}; on a point mass delta_x this is mu (phi(x) z^-1)
    G, phi = model.group, model.phi
    zi = G.inverse[model.z]
    return lambda x: shift_right(model.mu, G.cayley[phi(x)][zi])


def tau_limit(model: NoiseModel, n_max: int = DEFAULT_N_MAX) -> tuple[RationalMeasure, LimitDiagnostics]:
    """Exact limit (or Cesaro limit, if the orbit cycles) of ``shifted_sequence``."""
    try:
        return orbit_limit(_tau_kernel(model), point_mass(model.group, model.group.identity), n_max)
    except NotConverged as exc:
        raise LimitNotConverged(str(exc), last=exc.last) from None


# ------------------------------------------------------------------- K_mu


def support_condition(model: NoiseModel, K: Subgroup, z: int) -> tuple[bool, bool]:
    """(supp(mu z^-1) is inside K, z phi(K) z^-1 == K)."""
    G = model.group
    zi = G.inverse[z]
    supp_ok = all(G.cayley[g][zi] in K for g in model.mu.support())
    conj = frozenset(G.cayley[G.cayley[z][model.phi(k)]][zi] for k in K.members)
    return supp_ok, conj == frozenset(K.members)


def algebraic_candidate(model: NoiseModel, z: int | None = None) -> Subgroup:
    """Smallest subgroup containing supp(mu z^-1) and stable under
    k -> z phi(k) z^-1 (hence under its inverse, the group being finite)."""
    G = model.group
    z = model.z if z is None else z
    zi = G.inverse[z]
    K = subgroup_closure(G, (G.cayley[g][zi] for g in model.mu.support()))
    while True:
        image = {G.cayley[G.cayley[z][model.phi(k)]][zi] for k in K.members}
        if image <= set(K.members):
            return K
        K = subgroup_closure(G, image | set(K.members))


def _limit_subgroup(model: NoiseModel, n_max: int) -> tuple[Subgroup, RationalMeasure, dict]:
    """K from the Cesaro limit of (tau_j)*(tau_j)-reversed = rho^j * rho^j-reversed on fiber 0."""
    G = model.group
    _, tdiag = tau_limit(model, n_max)
    points = tdiag.limit_points
    terms = [convolve(p, reverse(p)) for p in points]
    lam = terms[0] if len(terms) == 1 else mixture(terms, [Fraction(1, len(terms))] * len(terms))
    if not is_idempotent(lam):
        raise LimitNotIdempotent(f"limit {lam} is not idempotent")
    supp = lam.support()
    K = subgroup_closure(G, supp)
    if K.members != supp or haar(K) != lam:
        raise LimitNotIdempotent(f"limit {lam} is not the Haar measure of its support")
    diag = {"tau": tdiag.as_dict(), "tau_converges": tdiag.converged}
    return K, lam, diag


@dataclass(frozen=True)
class ZCheck:
    z: int
    support_in_K: bool
    conjugation_stable: bool
    same_K: bool

    @property
    def ok(self) -> bool:
        return self.support_in_K and self.conjugation_stable and self.same_K


@dataclass(frozen=True)
class KmuReport:
    model: NoiseModel = field(repr=False)
    K: Subgroup
    K_alt: Subgroup
    limit: RationalMeasure = field(repr=False)
    diagnostics: dict = field(repr=False)
    per_z: tuple[ZCheck, ...]

    @property
    def methods_agree(self) -> bool:
        return self.K.members == self.K_alt.members

    @property
    def verified(self) -> bool:
        return all(c.support_in_K and c.conjugation_stable for c in self.per_z)

    def as_dict(self) -> dict:
        G = self.model.group
        return {
            "K_mu": list(self.K.members),
            "K_closure": list(self.K_alt.members),
            "methods_agree": self.methods_agree,
            "cosets": [list(c) for c in right_cosets(G, self.K)],
            "limit": self.limit.to_strings(),
            "limit_diagnostics": self.diagnostics,
            "per_z": [
                {
                    "z": c.z,
                    "support_in_K": c.support_in_K,
                    "conjugation_stable": c.conjugation_stable,
                    "same_K_from_z": c.same_K,
                }
                for c in self.per_z
            ],
            "status": "VERIFIED" if self.verified else "FAILED",
        }


def compute_Kmu(model: NoiseModel, n_max: int = DEFAULT_N_MAX, *, check_all_z: bool = True) -> KmuReport:
    """K_mu from the limit of rho^j * rho^j-reversed, verified at every support point.

    The limit is computed exactly from the shifted orbit tau_j (see
    ``tau_limit``). When the raw sequence rho^j * rho^j-reversed recurs
    exactly within ``n_max`` terms, its period average is compared with the
    exact limit as well.

    Raises ``TheoremViolation`` if some z in supp(mu) fails
    supp(mu z^-1) in K or z phi(K) z^-1 == K.
    """
    K, lam, diag = _limit_subgroup(model, n_max)

    def raw_sequence():
        for t in shifted_sequence(model, n_max):
            yield convolve(t, reverse(t))

    raw, rdiag = cesaro_limit(raw_sequence(), max_terms=n_max, strict=False)
    diag["raw_recurrence"] = rdiag.as_dict()
    if rdiag.converged and raw != lam:
        raise TheoremViolation(
            "exact recurrence limit disagrees with spectral limit",
            {"recurrence": raw.to_strings(), "spectral": lam.to_strings()},
        )
    K_alt = algebraic_candidate(model)
    checks = []
    for z in model.mu.support():
        supp_ok, conj_ok = support_condition(model, K, z)
        if not check_all_z or z == model.z:
            same = True
        else:
            same = _limit_subgroup(model.with_z(z), n_max)[0].members == K.members
        checks.append(ZCheck(z, supp_ok, conj_ok, same))
    report = KmuReport(model, K, K_alt, lam, diag, tuple(checks))
    bad = [c for c in checks if not c.ok]
    if bad:
        raise TheoremViolation(
            f"structure check failed for z in {[c.z for c in bad]}",
            {"model": model.name, "K": list(K.members), "per_z": [c.__dict__ for c in bad]},
        )
    return report


# -------------------------------------------------------------- solutions


@dataclass(frozen=True)
class SolutionFamily:
    """Laws lambda_k cached for k in [lo - 1, hi], so that the recursion can
    be checked at every k in [lo, hi]."""

    model: NoiseModel = field(repr=False)
    K: Subgroup | None
    lam0: RationalMeasure
    window: tuple[int, int]
    laws: dict = field(repr=False, compare=False)
    origin: str = "closed-form"

    def law(self, k: int) -> RationalMeasure:
        return self.laws[k]

    def replace_law(self, k: int, measure: RationalMeasure) -> "SolutionFamily":
        laws = dict(self.laws)
        laws[k] = measure
        return replace(self, laws=laws)

    def table(self) -> dict[str, dict[str, str]]:
        lo, hi = self.window
        return {str(k): self.laws[k].to_strings() for k in range(lo, hi + 1)}


def _k_bounds(k_range) -> tuple[int, int]:
    if isinstance(k_range, range):
        return k_range.start, k_range.stop - 1
    lo, hi = k_range
    if lo > hi:
        raise ValueError(f"empty k window [{lo}, {hi}]")
    return int(lo), int(hi)


def closed_form_law(model: NoiseModel, lam: RationalMeasure, k: int) -> RationalMeasure:
    """z phi(z)...phi^{k-1}(z) phi^k(lam) for k >= 1; lam for k = 0;
    phi^-1(z^-1)...phi^k(z^-1) phi^k(lam) for k < 0."""
    G, phi, z = model.group, model.phi, model.z
    if k == 0:
        return lam
    if k > 0:
        prefix = G.prod(phi.apply(z, i) for i in range(k))
    else:
        zi = G.inverse[z]
        prefix = G.prod(phi.apply(zi, i) for i in range(-1, k - 1, -1))
    return shift_left(prefix, pushforward(phi, lam, k))


def check_hypothesis(model: NoiseModel, K: Subgroup) -> None:
    for z in model.mu.support():
        supp_ok, conj_ok = support_condition(model, K, z)
        if not (supp_ok and conj_ok):
            what = "supp(mu z^-1) not inside K" if not supp_ok else "z phi(K) z^-1 != K"
            raise HypothesisViolation(f"{what} at z = {z}", witness=z)


def solution_family(
    model: NoiseModel,
    K: Subgroup,
    lam: RationalMeasure,
    k_range=DEFAULT_WINDOW,
) -> SolutionFamily:
    """The solution with lambda_0 = lam, by the closed form, cross-checked
    against lambda_k = z phi(lambda_{k-1}) (k >= 1) and
    phi(lambda_k) = z^-1 lambda_{k+1} (k < 0)."""
    lo, hi = _k_bounds(k_range)
    ok, x = is_left_invariant(lam, K, witness=True)
    if not ok:
        raise NotInvariant(f"lambda is not left K-invariant: x lambda != lambda for x = {x}", witness=x)
    check_hypothesis(model, K)
    G, phi, z = model.group, model.phi, model.z
    zi = G.inverse[z]
    first = min(lo - 1, 0)
    last = max(hi, 0)
    laws = {k: closed_form_law(model, lam, k) for k in range(first, last + 1)}
    for k in range(1, last + 1):
        if laws[k] != shift_left(z, pushforward(phi, laws[k - 1])):
            raise TheoremViolation(f"forward recursion disagrees with closed form at k = {k}")
    for k in range(first, 0):
        if pushforward(phi, laws[k]) != shift_left(zi, laws[k + 1]):
            raise TheoremViolation(f"backward recursion disagrees with closed form at k = {k}")
    keep = {k: laws[k] for k in range(lo - 1, hi + 1)}
    return SolutionFamily(model, K, lam, (lo, hi), keep)


@dataclass(frozen=True)
class SolutionCheck:
    ok: bool
    witness: int | None = None
    checked: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def verify_solution(model: NoiseModel, family: SolutionFamily, k_range=None) -> SolutionCheck:
    """Exact check of lambda_k == mu * phi(lambda_{k-1}) over the window."""
    lo, hi = family.window if k_range is None else _k_bounds(k_range)
    checked = []
    for k in range(lo, hi + 1):
        checked.append(k)
        if family.law(k) != convolve(model.mu, pushforward(model.phi, family.law(k - 1))):
            return SolutionCheck(False, k, tuple(checked))
    return SolutionCheck(True, None, tuple(checked))


def coset_haar(K: Subgroup, g: int) -> RationalMeasure:
    """Uniform measure on the right coset K g."""
    return shift_right(haar(K), g)


def extremal_solutions(model: NoiseModel, report: KmuReport | None = None, k_range=DEFAULT_WINDOW) -> list[SolutionFamily]:
    """One solution per right coset K_mu g, started from the uniform law on K_mu g."""
    if report is None:
        report = compute_Kmu(model)
    K = report.K
    return [
        solution_family(model, K, coset_haar(K, coset[0]), k_range)
        for coset in right_cosets(model.group, K)
    ]


def support_cosets(lam: RationalMeasure, K: Subgroup) -> list[tuple[int, ...]]:
    """Right cosets of K meeting supp(lam)."""
    supp = set(lam.support())
    return [c for c in right_cosets(lam.group, K) if supp & set(c)]


def is_extremal(family: SolutionFamily) -> bool:
    """Extremal iff lambda_0 lives on a single right coset of K."""
    return len(support_cosets(family.lam0, family.K)) == 1


# ------------------------------------------------------------- existence


@dataclass(frozen=True)
class Existence:
    exists: bool
    rationale: str
    certificate: SolutionFamily | None = field(default=None, repr=False)
    probe: tuple = ()


def exists_solution(model: NoiseModel, probe_horizon: int = 4) -> Existence:
    """Finite groups always admit a solution.

    rho^n is carried by the single fiber {n} with conditional sigma_n, so for
    C = {0} x G the translate C (n, e) has rho^n-mass 1 for every n: rho does
    not dissipate. The certificate is the solution started from Haar on K_mu.
    """
    report = compute_Kmu(model)
    family = solution_family(model, report.K, haar(report.K))
    if not verify_solution(model, family):
        raise TheoremViolation("certificate solution fails the recursion")
    probe = tuple(dissipation_probe(sd_lift(model.mu, model.phi), probe_horizon, 0))
    rationale = (
        "compact fast path: rho^n = n (x) sigma_n sits on one fiber, so "
        "sup_a rho^n(C a) = 1 for C = {0} x G and rho is not dissipating"
    )
    return Existence(True, rationale, family, probe)


def dissipation_probe(rho: SemidirectMeasure, horizon: int, window_radius: int) -> list[tuple[int, Fraction]]:
    """For n = 1 .. horizon, the largest rho^n-mass of a translate of
    {-r .. r} x G. Translating by (m, g) on either side only moves the Z
    coordinate, so this is the largest mass of 2r + 1 consecutive fibers."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rows = []
    power = rho
    for n in range(1, horizon + 1):
        if n > 1:
            power = sd_convolve(power, rho)
        fibers = power.fiber_indices()
        best = Fraction(0)
        for m in range(fibers[0] - window_radius, fibers[-1] + window_radius + 1):
            mass = sum((power.mass(i) for i in range(m - window_radius, m + window_radius + 1)), Fraction(0))
            best = max(best, mass)
        rows.append((n, best))
    return rows


# --------------------------------------------------- limit-based solution


def _left_stabilizer(lam: RationalMeasure) -> Subgroup:
    G = lam.group
    return Subgroup(G, tuple(x for x in G.elements if shift_left(x, lam) == lam))


def solution_from_limit(model: NoiseModel, n_max: int = DEFAULT_N_MAX, k_range=DEFAULT_WINDOW) -> SolutionFamily:
    """A solution assembled from gamma = lim sigma_j x_j with x_j = s_j.

    x is the recurring value of phi(x_{j-1}^-1) x_j, and then
    lambda_0 = gamma, lambda_k = gamma x^-1 phi(x^-1) ... phi^{k-1}(x^-1) for
    k >= 1 and lambda_k = gamma phi^-1(x) ... phi^k(x) for k < 0.
    """
    G, phi = model.group, model.phi
    gamma, diag = tau_limit(model, n_max)
    if not diag.converged:
        raise LimitNotConverged(f"shifted products cycle with period {diag.period}; no limit")
    shifts = [shift_element(model, j) for j in range(1, n_max + 2)]
    ratios = [G.cayley[phi(G.inverse[shifts[j - 1]])][shifts[j]] for j in range(1, len(shifts))]
    seen: dict[int, int] = {}
    x = None
    for j, r in enumerate(ratios):
        if r in seen:
            x = r
            break
        seen[r] = j
    if x is None:
        raise LimitNotConverged("no recurring value of phi(x_{j-1}^-1) x_j within n_max")
    if shift_right(convolve(model.mu, pushforward(phi, gamma)), x) != gamma:
        raise TheoremViolation("gamma != mu * phi(gamma) x for the recovered x")
    lo, hi = _k_bounds(k_range)
    xi = G.inverse[x]
    laws = {0: gamma}
    prefix = G.identity
    for k in range(1, max(hi, 0) + 1):
        prefix = G.cayley[prefix][phi.apply(xi, k - 1)]
        laws[k] = shift_right(gamma, prefix)
    prefix = G.identity
    for k in range(-1, min(lo - 1, 0) - 1, -1):
        prefix = G.cayley[prefix][phi.apply(x, k)]
        laws[k] = shift_right(gamma, prefix)
    keep = {k: laws[k] for k in range(lo - 1, hi + 1)}
    return SolutionFamily(model, _left_stabilizer(gamma), gamma, (lo, hi), keep, origin="limit")
