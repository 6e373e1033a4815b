"""Per-model invariant suite run over the corpus."""

from __future__ import annotations

import itertools
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .corpus import CorpusEntry
from .errors import GroupSdeError
from .groups import distality_check, pointwise_distal_check, right_cosets
from .measures import (
    RationalMeasure,
    is_left_invariant,
    mixture,
    sd_convolve,
    sd_lift,
    sd_power,
)
from .sde import (
    NoiseModel,
    SolutionFamily,
    compute_Kmu,
    coset_haar,
    exists_solution,
    extremal_solutions,
    noise_product,
    solution_family,
    solution_from_limit,
    support_cosets,
    verify_solution,
)

WINDOW = (-8, 8)
RANDOM_MIXTURES = 5
FIBER_DEPTH = 8

CHECKS = (
    "distal",
    "kmu_verified",
    "kmu_same_for_all_z",
    "methods_agree",
    "correspondence",
    "injective",
    "extremal_count",
    "extremal_single_coset",
    "midpoint_mixtures",
    "limit_solution",
    "limit_solution_invariant",
    "single_fiber",
    "existence",
)


@dataclass
class ModelResult:
    name: str
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]


def random_invariant_measure(K, rng: random.Random) -> RationalMeasure:
    """A random mixture of uniform laws on right cosets of K; these are
    exactly the left K-invariant measures."""
    cosets = right_cosets(K.parent, K)
    chosen = rng.sample(cosets, rng.randint(1, len(cosets)))
    coefs = [rng.randint(1, 7) for _ in chosen]
    total = sum(coefs)
    return mixture([coset_haar(K, c[0]) for c in chosen], [Fraction(w, total) for w in coefs])


def perturb(family: SolutionFamily, k: int) -> SolutionFamily | None:
    """Swap two unequal weights of lambda_k; None if lambda_k is constant."""
    law = family.law(k)
    w = list(law.weights)
    pair = next(((i, j) for i, j in itertools.combinations(range(len(w)), 2) if w[i] != w[j]), None)
    if pair is None:
        return None
    i, j = pair
    w[i], w[j] = w[j], w[i]
    return family.replace_law(k, RationalMeasure(law.group, tuple(w)))


def check_model(entry: CorpusEntry, seed: int = 0, inject: bool = False) -> ModelResult:
    model: NoiseModel = entry.model
    res = ModelResult(entry.name)
    c = res.checks
    G = model.group
    c["distal"] = distality_check(model.phi) and pointwise_distal_check(G)
    try:
        report = compute_Kmu(model)
    except GroupSdeError as exc:
        c["kmu_verified"] = False
        res.details["error"] = f"{exc.reason}: {exc}"
        return res
    K = report.K
    c["kmu_verified"] = report.verified
    c["kmu_same_for_all_z"] = all(z.same_K for z in report.per_z)
    c["methods_agree"] = report.methods_agree
    res.details["kmu"] = report.as_dict()

    rng = random.Random(f"{seed}:{entry.name}:mixtures")
    starts = [coset_haar(K, coset[0]) for coset in right_cosets(G, K)]
    starts += [random_invariant_measure(K, rng) for _ in range(RANDOM_MIXTURES)]
    families = [solution_family(model, K, lam, WINDOW) for lam in starts]
    if inject:
        for i, fam in enumerate(families):
            bad = perturb(fam, 3)
            if bad is not None:
                families[i] = bad
                res.details["injected"] = f"lambda_3 perturbed in family {i}"
                break
    verdicts = [verify_solution(model, f) for f in families]
    c["correspondence"] = all(verdicts)
    if not c["correspondence"]:
        res.details["correspondence_witness"] = next(v.witness for v in verdicts if not v)
    distinct = {f.lam0 for f in families}
    distinct_inputs = set(starts)
    c["injective"] = len(distinct) == len(distinct_inputs)

    extremals = extremal_solutions(model, report, WINDOW)
    c["extremal_count"] = len(extremals) == G.order // len(K)
    c["extremal_single_coset"] = all(len(support_cosets(f.lam0, K)) == 1 for f in extremals)
    mids = []
    for a, b in zip(extremals, extremals[1:]):
        lam = mixture([a.lam0, b.lam0], [Fraction(1, 2), Fraction(1, 2)])
        fam = solution_family(model, K, lam, WINDOW)
        mids.append(bool(verify_solution(model, fam)) and len(support_cosets(lam, K)) == 2)
    c["midpoint_mixtures"] = all(mids)

    try:
        limit_family = solution_from_limit(model, k_range=WINDOW)
        c["limit_solution"] = bool(verify_solution(model, limit_family))
        c["limit_solution_invariant"] = is_left_invariant(limit_family.lam0, K)
        res.details["limit_lambda0"] = limit_family.lam0.to_strings()
    except GroupSdeError as exc:
        c["limit_solution"] = c["limit_solution_invariant"] = False
        res.details["limit_error"] = f"{exc.reason}: {exc}"

    c["single_fiber"] = single_fiber_law(model, FIBER_DEPTH)

    ex = exists_solution(model)
    c["existence"] = ex.exists and bool(verify_solution(model, ex.certificate)) and all(
        m == 1 for _, m in ex.probe
    )
    return res


def single_fiber_law(model: NoiseModel, depth: int = FIBER_DEPTH) -> bool:
    """rho^n sits on the single fiber n with G-part the n-th noise product."""
    rho = sd_lift(model.mu, model.phi)
    power = rho
    for n in range(1, depth + 1):
        if n > 1:
            power = sd_convolve(power, rho)
        if power.fiber_indices() != (n,) or power.conditional(n) != noise_product(model, n):
            return False
    return sd_power(rho, depth) == power


def _check_star(args):
    return check_model(*args)


def run_suite(
    entries: list[CorpusEntry],
    seed: int = 0,
    workers: int = 1,
    inject_failure: bool = False,
) -> list[ModelResult]:
    """Run ``check_model`` over ``entries``; results come back in entry order.

    With ``inject_failure`` the first model with K_mu != G (so that solution
    laws are not all uniform) gets a perturbed lambda_3, so exactly that model
    must fail.
    """
    inject_at = None
    if inject_failure:
        inject_at = next(
            (i for i, e in enumerate(entries) if len(compute_Kmu(e.model).K) < e.model.group.order),
            None,
        )
    jobs = [(e, seed, i == inject_at) for i, e in enumerate(entries)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_check_star, jobs, chunksize=8))
    return [check_model(*job) for job in jobs]


def digest(results: list[ModelResult]) -> str:
    """Canonical JSON of every check and exact intermediate; equal digests
    mean byte-identical runs."""
    return json.dumps(
        [{"model": r.name, "checks": r.checks, "details": r.details} for r in results],
        sort_keys=True,
    )


def summarize(results: list[ModelResult]) -> dict:
    counts = {name: sum(1 for r in results if r.checks.get(name)) for name in CHECKS}
    failed = [r for r in results if not r.passed]
    return {
        "models": len(results),
        "passed": len(results) - len(failed),
        "failed": len(failed),
        "check_pass_counts": counts,
        "failures": [
            {"model": r.name, "checks": r.failures(), "details": r.details} for r in failed
        ],
    }
