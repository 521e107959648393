"""Outer design search, brute-force oracle, non-joint baseline, and the
quasiconcavity probe.

The outer problem is a mixed-integer grid search: for every (local
false-alarm, vote threshold) pair on a grid, run the inner selection +
allocation and keep the best feasible result.  The exhaustive oracle
enumerates every candidate active set instead and is the correctness
reference.  The non-joint baseline designs detection first (feasible
minimum of the fused false alarm) and splits the time budget afterwards.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from scipy.special import digamma, gammaln

from .allocator import AllocationResult, greedy_topup, select_and_allocate
from .economics import (
    SecondaryUser,
    SystemParams,
    effective_rate,
    effective_time,
)
from .sensing import (
    SensingDesign,
    SensingGeometry,
    global_pd,
    global_pfa,
    local_pd,
)
from .units import db_to_linear


@dataclass(frozen=True)
class DesignGrid:
    """Search grid over local false-alarm probabilities and vote thresholds."""

    pfa_values: tuple
    k_values: tuple

    def __post_init__(self) -> None:
        pfas = self.pfa_values
        if not pfas:
            raise ValueError("pfa grid is empty")
        if any(not 0.0 < p < 1.0 for p in pfas):
            raise ValueError("pfa grid values must lie strictly inside (0,1)")
        if list(pfas) != sorted(set(pfas)):
            raise ValueError("pfa grid must be ascending with no duplicates")
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ValueError("k grid must contain integers >= 1")

    @classmethod
    def uniform(cls, m_users: int, levels: int = 10) -> "DesignGrid":
        """The default grid {i/levels} for i=1..levels-1, k=1..m_users."""
        return cls(
            pfa_values=tuple(i / levels for i in range(1, levels)),
            k_values=tuple(range(1, m_users + 1)),
        )


@dataclass(frozen=True)
class OptimizationOutcome:
    """Best design + allocation over a grid, with the search surface."""

    best_design: Optional[SensingDesign]
    best_allocation: AllocationResult
    utility_surface: Optional[dict]
    wall_time: float

    @property
    def feasible(self) -> bool:
        return self.best_allocation.feasible

    @property
    def fc_utility(self) -> float:
        return self.best_allocation.fc_utility if self.feasible else 0.0


def _infeasible_outcome(m: int, surface, elapsed: float) -> OptimizationOutcome:
    empty = AllocationResult(
        active=(False,) * m,
        times=(0.0,) * m,
        fc_utility=0.0,
        su_utilities=(0.0,) * m,
        case=None,
        feasible=False,
    )
    return OptimizationOutcome(None, empty, surface, elapsed)


def joint_optimize(
    all_sus: Sequence[SecondaryUser],
    geom: SensingGeometry,
    params: SystemParams,
    grid: DesignGrid,
    keep_surface: bool = False,
) -> OptimizationOutcome:
    """Grid search over designs, inner selection/allocation per point.

    Feasible ties break toward the smallest false-alarm value, then the
    smallest vote threshold. Returns an all-infeasible outcome when no
    grid point admits a feasible allocation.
    """
    start = time.perf_counter()
    surface: Optional[dict] = {} if keep_surface else None
    best_key = None
    best: Optional[tuple] = None
    for k in grid.k_values:
        for pfa in grid.pfa_values:
            design = SensingDesign(pfa_local=pfa, k_threshold=k)
            alloc = select_and_allocate(all_sus, design, geom, params)
            if surface is not None:
                surface[(pfa, k)] = alloc.fc_utility if alloc.feasible else None
            if not alloc.feasible:
                continue
            key = (alloc.fc_utility, -pfa, -k)
            if best_key is None or key > best_key:
                best_key = key
                best = (design, alloc)
    elapsed = time.perf_counter() - start
    if best is None:
        return _infeasible_outcome(len(all_sus), surface, elapsed)
    return OptimizationOutcome(best[0], best[1], surface, elapsed)


def exhaustive_oracle(
    all_sus: Sequence[SecondaryUser],
    geom: SensingGeometry,
    params: SystemParams,
    grid: DesignGrid,
    max_users: int = 12,
) -> OptimizationOutcome:
    """Reference search: every subset of the profitable users, every grid
    design with k <= |subset|, detection floor and box feasibility checked
    directly, inner linear program solved by the (provably optimal)
    greedy fill.

    Raises
    ------
    ValueError
        When the instance exceeds ``max_users`` (cost is O(2^M)).
    """
    if len(all_sus) > max_users:
        raise ValueError(
            f"exhaustive oracle capped at {max_users} users, got {len(all_sus)}"
        )
    start = time.perf_counter()
    cost = params.sensing_cost
    profitable = [su for su in all_sus if su.earn_rate > su.pay_rate]
    best_key = None
    best: Optional[tuple] = None
    for size in range(1, len(profitable) + 1):
        t_prime = effective_time(params, size)
        if t_prime <= 0.0:
            continue
        for subset in itertools.combinations(profitable, size):
            for k in grid.k_values:
                if k > size:
                    continue
                for pfa in grid.pfa_values:
                    design = SensingDesign(pfa_local=pfa, k_threshold=k)
                    if global_pd(design, geom, size) < params.zeta:
                        continue
                    rates = [
                        effective_rate(su, design, geom, params, size)
                        for su in subset
                    ]
                    lowers = [
                        cost / (r * (su.earn_rate - su.pay_rate))
                        for su, r in zip(subset, rates)
                    ]
                    uppers = [su.buffer_bits / r for su, r in zip(subset, rates)]
                    if any(lo > up for lo, up in zip(lowers, uppers)):
                        continue
                    if sum(lowers) > t_prime:
                        continue
                    prios = [r * su.pay_rate for su, r in zip(subset, rates)]
                    times = greedy_topup(lowers, uppers, prios, t_prime)
                    utility = sum(p * t for p, t in zip(prios, times))
                    key = (utility, -pfa, -k)
                    if best_key is None or key > best_key:
                        best_key = key
                        best = (design, subset, times, rates, prios, lowers)
    elapsed = time.perf_counter() - start
    if best is None:
        return _infeasible_outcome(len(all_sus), None, elapsed)
    design, subset, times, rates, prios, lowers = best
    index = {su.id: i for i, su in enumerate(all_sus)}
    m = len(all_sus)
    active = [False] * m
    t_full = [0.0] * m
    su_utils = [0.0] * m
    for su, t, r, lo in zip(subset, times, rates, lowers):
        i = index[su.id]
        active[i] = True
        t_full[i] = t
        su_utils[i] = r * (su.earn_rate - su.pay_rate) * (t - lo)
    alloc = AllocationResult(
        active=tuple(active),
        times=tuple(t_full),
        fc_utility=sum(p * t for p, t in zip(prios, times)),
        su_utilities=tuple(su_utils),
        case=None,
        feasible=True,
    )
    return OptimizationOutcome(design, alloc, None, elapsed)


@dataclass(frozen=True)
class NonJointOutcome:
    """Two-stage baseline result: detection-only design, then time split."""

    outcome: OptimizationOutcome
    su_utilities: tuple = field(default_factory=tuple)

    @property
    def feasible(self) -> bool:
        return self.outcome.feasible

    @property
    def fc_utility(self) -> float:
        return self.outcome.fc_utility


def nonjoint_baseline(
    all_sus: Sequence[SecondaryUser],
    geom: SensingGeometry,
    params: SystemParams,
    grid: DesignGrid,
) -> NonJointOutcome:
    """Detection-first baseline.

    Stage 1 keeps the users whose full buffer is worth more than the
    sensing cost, then picks the grid design minimizing the fused false
    alarm subject to the detection floor at that set size (ties: smaller
    false-alarm value, then larger vote threshold). Stage 2 activates the
    whole set and splits the budget greedily with all lower bounds forced
    to zero, so individual utilities may come out negative.
    """
    start = time.perf_counter()
    m = len(all_sus)
    cost = params.sensing_cost
    eligible = [
        su
        for su in all_sus
        if su.buffer_bits * (su.earn_rate - su.pay_rate) - cost >= 0.0
    ]
    size = len(eligible)
    if size == 0:
        return NonJointOutcome(
            _infeasible_outcome(m, None, time.perf_counter() - start), (0.0,) * m
        )

    best_key = None
    best_design = None
    for k in grid.k_values:
        if k > size:
            continue
        for pfa in grid.pfa_values:
            design = SensingDesign(pfa_local=pfa, k_threshold=k)
            if global_pd(design, geom, size) < params.zeta:
                continue
            key = (global_pfa(design, size), pfa, -k)
            if best_key is None or key < best_key:
                best_key = key
                best_design = design
    if best_design is None:
        return NonJointOutcome(
            _infeasible_outcome(m, None, time.perf_counter() - start), (0.0,) * m
        )

    rates = [effective_rate(su, best_design, geom, params, size) for su in eligible]
    uppers = [su.buffer_bits / r for su, r in zip(eligible, rates)]
    prios = [r * su.pay_rate for su, r in zip(eligible, rates)]
    times = greedy_topup([0.0] * size, uppers, prios, effective_time(params, size))

    index = {su.id: i for i, su in enumerate(all_sus)}
    active = [False] * m
    t_full = [0.0] * m
    su_utils = [0.0] * m
    for su, t, r in zip(eligible, times, rates):
        i = index[su.id]
        active[i] = True
        t_full[i] = t
        su_utils[i] = r * t * (su.earn_rate - su.pay_rate) - cost
    alloc = AllocationResult(
        active=tuple(active),
        times=tuple(t_full),
        fc_utility=sum(p * t for p, t in zip(prios, times)),
        su_utilities=tuple(su_utils),
        case=None,
        feasible=True,
    )
    outcome = OptimizationOutcome(
        best_design, alloc, None, time.perf_counter() - start
    )
    return NonJointOutcome(outcome, tuple(su_utils))


def count_negative_utility(report) -> int:
    """How many users ended a run with strictly negative utility.

    Accepts a :class:`NonJointOutcome`, an :class:`AllocationResult`, or
    a plain sequence of utilities.
    """
    utilities = getattr(report, "su_utilities", report)
    return sum(1 for u in utilities if u < 0.0)


# ---------------------------------------------------------------------------
# Quasiconcavity probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HessianProbeConfig:
    """Worked example for the bordered-Hessian probe.

    ``pay_times_t`` is the fixed product a_i * t_i shared by all users.
    Defaults reproduce the non-quasiconcavity demonstration instance.
    """

    m_users: int = 5
    p_h0: float = 0.6
    gamma_db: float = -7.5
    n_samples: int = 40
    r0: tuple = (7.4, 8.0, 8.2, 0.2, 9.5)
    r1: tuple = (2.3, 3.5, 2.7, 0.02, 3.3)
    pay_times_t: float = 0.1

    def geometry(self) -> SensingGeometry:
        return SensingGeometry(
            gamma=db_to_linear(self.gamma_db), n_samples=self.n_samples
        )


@dataclass(frozen=True)
class ProbePoint:
    pfa: float
    det_h: float
    det_ha: float


def _log_binom(m: int, k: float) -> float:
    return float(gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1))


def binom_term(p: float, k: float, m: int) -> float:
    """C(m,k) p^k (1-p)^(m-k) with the log-gamma binomial coefficient,
    defined for real k in [0, m+1] (zero at k = m+1)."""
    if k >= m + 1.0:
        return 0.0
    return math.exp(_log_binom(m, k) + k * math.log(p) + (m - k) * math.log1p(-p))


def _tail_knot(p: float, j: int, m: int) -> tuple:
    # (tail value, summand g, dg/dk) at integer knot j; the summand's
    # log-derivative is ln(p/q) - psi(j+1) + psi(m-j+1), with the j=m+1
    # endpoint handled by its limit g ~ (m+1-j) p^(m+1)/((m+1)q).
    if j <= 0:
        j = 0
    if j >= m + 1:
        return 0.0, 0.0, -(p ** (m + 1)) / ((m + 1) * (1.0 - p))
    value = sum(binom_term(p, l, m) for l in range(j, m + 1)) if j > 0 else 1.0
    g = binom_term(p, j, m)
    g_prime = g * (
        math.log(p) - math.log1p(-p) - float(digamma(j + 1)) + float(digamma(m - j + 1))
    )
    return value, g, g_prime


def smooth_binom_tail(p: float, k: float, m: int) -> float:
    """Continuous-k extension of the binomial upper tail.

    Piecewise quintic Hermite through the exact integer-k tails with knot
    slope -C(m,k)p^k(1-p)^(m-k) (log-gamma binomial) and matching knot
    curvature, so the extension is C^2, equals the discrete tail at
    integer k, and its k-derivative there equals the one-step difference
    the closed-form appendix derivatives describe.
    """
    if k < 0.0 or k > m + 1.0:
        raise ValueError(f"k must lie in [0, {m + 1}], got {k}")
    k0 = min(int(math.floor(k)), m)
    theta = k - k0
    f0, g0, gp0 = _tail_knot(p, k0, m)
    if theta == 0.0:
        return f0
    f1, g1, gp1 = _tail_knot(p, k0 + 1, m)
    t2, t3 = theta * theta, theta**3
    t4, t5 = theta**4, theta**5
    h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5
    h1 = theta - 6 * t3 + 8 * t4 - 3 * t5
    h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5
    h3 = 10 * t3 - 15 * t4 + 6 * t5
    h4 = -4 * t3 + 7 * t4 - 3 * t5
    h5 = 0.5 * t3 - t4 + 0.5 * t5
    return (
        h0 * f0
        + h1 * (-g0)
        + h2 * (-gp0)
        + h3 * f1
        + h4 * (-g1)
        + h5 * (-gp1)
    )


def probe_utility(cfg: HessianProbeConfig) -> Callable[[float, float], float]:
    """The probe's smooth objective U(pfa, k): opportunity-weighted revenue
    with the fused tails made continuous in k."""
    geom = cfg.geometry()
    a_coef = cfg.p_h0 * sum(r * cfg.pay_times_t for r in cfg.r0)
    b_coef = (1.0 - cfg.p_h0) * sum(r * cfg.pay_times_t for r in cfg.r1)
    m = cfg.m_users

    def utility(pfa: float, k: float) -> float:
        p_fa_tail = smooth_binom_tail(pfa, k, m)
        p_d_tail = smooth_binom_tail(local_pd(pfa, geom), k, m)
        return a_coef * (1.0 - p_fa_tail) + b_coef * (1.0 - p_d_tail)

    return utility


def quasiconcavity_probe(
    cfg: HessianProbeConfig = HessianProbeConfig(),
    pfa_grid: Optional[Sequence[float]] = None,
    k_value: Optional[float] = None,
    step_pfa: float = 1e-4,
    step_k: float = 1e-3,
) -> list:
    """Evaluate the bordered-Hessian determinants of the probe objective
    across a false-alarm grid, all partial derivatives by central finite
    differences.

    det_ha is the 2x2 bordered minor (identically -(dU/dpfa)^2, so never
    positive); quasiconcavity additionally needs det_h > 0, and the probe
    exists to exhibit grid points where that fails.
    """
    if pfa_grid is None:
        pfa_grid = [round(0.05 * i, 2) for i in range(1, 20)]
    if not len(pfa_grid):
        raise ValueError("pfa grid is empty")
    k = float(cfg.m_users if k_value is None else k_value)
    u = probe_utility(cfg)
    hp, hk = step_pfa, step_k
    points = []
    for pfa in pfa_grid:
        u_pp_ = u(pfa + hp, k)
        u_pm_ = u(pfa - hp, k)
        u_kp_ = u(pfa, k + hk)
        u_km_ = u(pfa, k - hk)
        u_0 = u(pfa, k)
        u_p = (u_pp_ - u_pm_) / (2 * hp)
        u_k = (u_kp_ - u_km_) / (2 * hk)
        u_pp = (u_pp_ - 2 * u_0 + u_pm_) / hp**2
        u_kk = (u_kp_ - 2 * u_0 + u_km_) / hk**2
        u_pk = (
            u(pfa + hp, k + hk)
            - u(pfa + hp, k - hk)
            - u(pfa - hp, k + hk)
            + u(pfa - hp, k - hk)
        ) / (4 * hp * hk)
        det_ha = -(u_p**2)
        det_h = 2 * u_p * u_k * u_pk - u_p**2 * u_kk - u_k**2 * u_pp
        points.append(ProbePoint(pfa=pfa, det_h=det_h, det_ha=det_ha))
    return points
