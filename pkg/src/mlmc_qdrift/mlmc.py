"""Multilevel Monte Carlo over qDRIFT depths: index-sharing coupling, optimal
sample allocation, the full estimator, and the gate-cost/crossover models.

Level ell uses depth N_ell = N0 * 2^ell and step tau_ell = lambda*t/N_ell.
A coupled correction sample at level ell >= 1 draws one sequence of N_ell
indices; the fine path applies all of them at step tau_ell while the coarse
path keeps the first index of each adjacent pair at the doubled step, which
preserves the coarse marginal exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import Hamiltonian, Observable, expectation
from .pauli import StateVector
from .qdrift import IndexSequence, run_trajectory, sample_sequence
from .rng import PURPOSE_MAIN, PURPOSE_PILOT, RngStream, indexed_map


@dataclass(frozen=True)
class LevelHierarchy:
    """Geometric depth hierarchy N_ell = n0 * 2^ell for ell = 0..max_level."""

    n0: int
    max_level: int
    lambda_t: float

    @classmethod
    def for_problem(cls, hamiltonian: Hamiltonian, t: float, n0: int, max_level: int) -> "LevelHierarchy":
        if n0 < 1 or max_level < 0:
            raise ValueError("need n0 >= 1 and max_level >= 0")
        return cls(n0=n0, max_level=max_level, lambda_t=hamiltonian.one_norm * t)

    def n_gates(self, level: int) -> int:
        return self.n0 << level

    def tau(self, level: int) -> float:
        return self.lambda_t / self.n_gates(level)

    def coarse_blocks(self, level: int) -> int:
        """Number of coarse steps K = N_{ell-1} paired under the coupling."""
        if level < 1:
            raise ValueError("coarse blocks are defined for level >= 1")
        return self.n_gates(level - 1)

    def cost_per_sample(self, level: int) -> int:
        """Gates per sample: N0 at level 0, fine plus coarse (3/2 N_ell) above."""
        if level == 0:
            return self.n0
        return 3 * self.n0 * (1 << (level - 1))


@dataclass
class LevelStats:
    """Per-level summary of an MLMC run (sample moments of Y_ell)."""

    level: int
    n_samples: int
    mean: float
    variance: float
    cost_per_sample: int


@dataclass
class AllocationPlan:
    """Sample counts n_ell minimizing expected gates under sum V_ell/n_ell <= eps^2/2."""

    eps: float
    n_per_level: list[int]
    giles_sum: float
    predicted_total_gates: int


@dataclass(frozen=True)
class ComplexityModel:
    """Rate exponents and constants of the cost model.

    alpha/beta/gamma are the bias-decay, variance-decay, and cost-growth
    exponents (all 1 for this coupling); bias |E[P_N] - P| <= B/N; correction
    variance V_ell <= A/N_ell with A = 8 t^2 lambda^2 (equivalently
    c1 * 2^-ell with c1 = A/N0); C1 is the constant of the total-cost bound.
    """

    bias_constant: float
    variance_constant: float
    sigma2: float
    c1: float
    theorem_constant: float
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    @classmethod
    def for_system(
        cls,
        t: float,
        one_norm: float,
        n0: int,
        sigma2: float,
        bias_constant: float | None = None,
    ) -> "ComplexityModel":
        a = 8.0 * (t * one_norm) ** 2
        return cls(
            bias_constant=bias_constant if bias_constant is not None else 2.0 * (one_norm * t) ** 2,
            variance_constant=a,
            sigma2=sigma2,
            c1=a / n0,
            theorem_constant=64.0 * (t * one_norm) ** 2,
        )


def split_coupled_sequence(seq: IndexSequence) -> IndexSequence:
    """Coarse subsequence of a coupled draw: the first index of each pair."""
    return seq[::2]


def coupled_sample(
    hamiltonian: Hamiltonian,
    hierarchy: LevelHierarchy,
    level: int,
    rng: RngStream,
    psi0: StateVector,
    observable: Observable,
) -> tuple[float, float, float]:
    """One index-sharing correction sample: (P_fine, P_coarse, Y = fine - coarse)."""
    if level < 1:
        raise ValueError("coupled samples are defined for level >= 1; use the single-level sampler at level 0")
    if level > hierarchy.max_level:
        raise ValueError(f"level {level} exceeds hierarchy max {hierarchy.max_level}")
    seq = sample_sequence(rng, hamiltonian, hierarchy.n_gates(level))
    tau = hierarchy.tau(level)
    psi_fine = run_trajectory(hamiltonian, seq, tau, psi0)
    psi_coarse = run_trajectory(hamiltonian, split_coupled_sequence(seq), 2.0 * tau, psi0)
    p_fine = expectation(observable, psi_fine)
    p_coarse = expectation(observable, psi_coarse)
    return p_fine, p_coarse, p_fine - p_coarse


def single_level_sample(
    hamiltonian: Hamiltonian,
    hierarchy: LevelHierarchy,
    rng: RngStream,
    psi0: StateVector,
    observable: Observable,
) -> float:
    """One base-level estimate P_0 from an independent depth-N0 trajectory."""
    seq = sample_sequence(rng, hamiltonian, hierarchy.n0)
    psi = run_trajectory(hamiltonian, seq, hierarchy.tau(0), psi0)
    return expectation(observable, psi)


def correction_variance_bound(level: int, t: float, one_norm: float, n0: int) -> float:
    """Index-sharing variance bound c1 * 2^-level with c1 = 8 t^2 lambda^2 / N0."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    c1 = 8.0 * (t * one_norm) ** 2 / n0
    return c1 * 2.0 ** (-level)


def giles_sum(variances, costs) -> float:
    """sum_ell sqrt(V_ell * C_ell), the constant of the optimal-allocation cost."""
    v = np.asarray(variances, dtype=float)
    c = np.asarray(costs, dtype=float)
    if v.shape != c.shape:
        raise ValueError("variance and cost lists must have equal length")
    return float(np.sum(np.sqrt(v * c)))


def optimal_allocation(variances, costs, eps: float) -> AllocationPlan:
    """Cauchy-Schwarz sample allocation n_ell = ceil((2/eps^2) sqrt(V/C) * S).

    Levels with zero variance get one sample.  The plan always satisfies
    sum V_ell/n_ell <= eps^2/2; a correction loop absorbs any floating-point
    slack so the budget holds exactly.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    v = np.asarray(variances, dtype=float)
    c = np.asarray(costs, dtype=float)
    if v.shape != c.shape:
        raise ValueError("variance and cost lists must have equal length")
    if np.any(v < 0) or np.any(c <= 0):
        raise ValueError("need V_ell >= 0 and C_ell > 0")
    s = giles_sum(v, c)
    n = np.ones(len(v), dtype=np.int64)
    positive = v > 0
    if s > 0:
        raw = (2.0 / eps**2) * np.sqrt(v[positive] / c[positive]) * s
        n[positive] = np.ceil(raw).astype(np.int64)
    budget = eps**2 / 2.0
    while float(np.sum(v[positive] / n[positive])) > budget:
        worst = np.argmax(np.where(positive, v / n, -np.inf))
        n[worst] += 1
    total = float(np.sum(n * c))
    return AllocationPlan(
        eps=eps,
        n_per_level=n.tolist(),
        giles_sum=s,
        predicted_total_gates=int(total) if total.is_integer() else math.ceil(total),
    )


def choose_finest_level(eps: float, bias_constant: float, n0: int) -> int:
    """Smallest L with B / (N0 * 2^L) <= eps / sqrt(2), clamped at 0."""
    if eps <= 0 or bias_constant <= 0 or n0 <= 0:
        raise ValueError("need positive eps, bias constant, and n0")
    return max(0, math.ceil(math.log2(math.sqrt(2.0) * bias_constant / (eps * n0))))


def pilot_variances(
    hamiltonian: Hamiltonian,
    observable: Observable,
    psi0: StateVector,
    hierarchy: LevelHierarchy,
    n_pilot: int,
    rng: RngStream,
    threads: int = 1,
) -> list[float]:
    """Pilot estimates of the per-level variances V_ell (samples are discarded).

    Level 0 draws one simulated +-1 measurement outcome per trajectory, so
    V_0 estimates the full single-shot variance 4 p_0 (1 - p_0); levels >= 1
    use the exact coupled corrections Y_ell.
    """
    if n_pilot < 2:
        raise ValueError("pilot needs at least 2 samples per level")
    out: list[float] = []

    def level0(i: int) -> float:
        stream = rng.substream(PURPOSE_PILOT, 0, i)
        p_path = single_level_sample(hamiltonian, hierarchy, stream, psi0, observable)
        u = stream.substream(1).generator().random()
        return 1.0 if u < 0.5 * (1.0 + p_path) else -1.0

    outcomes = np.array(indexed_map(level0, n_pilot, threads))
    out.append(float(np.var(outcomes, ddof=1)))
    for level in range(1, hierarchy.max_level + 1):

        def correction(i: int, level=level) -> float:
            stream = rng.substream(PURPOSE_PILOT, level, i)
            return coupled_sample(hamiltonian, hierarchy, level, stream, psi0, observable)[2]

        ys = np.array(indexed_map(correction, n_pilot, threads))
        out.append(float(np.var(ys, ddof=1)))
    return out


def run_mlmc(
    hamiltonian: Hamiltonian,
    observable: Observable,
    psi0: StateVector,
    hierarchy: LevelHierarchy,
    plan: AllocationPlan,
    rng: RngStream,
    threads: int = 1,
) -> tuple[float, list[LevelStats]]:
    """Full telescoping estimate: mean of P_0 plus the per-level correction means.

    Every (level, sample) pair owns an independent substream and the level
    reductions run in a fixed order, so the result is identical for any
    thread count.
    """
    if len(plan.n_per_level) != hierarchy.max_level + 1:
        raise ValueError("allocation plan does not match the hierarchy depth")
    stats: list[LevelStats] = []
    estimate = 0.0
    for level, n in enumerate(plan.n_per_level):
        if n < 1:
            raise ValueError("every level needs at least one sample")

        if level == 0:

            def sample(i: int) -> float:
                return single_level_sample(
                    hamiltonian, hierarchy, rng.substream(PURPOSE_MAIN, 0, i), psi0, observable
                )

        else:

            def sample(i: int, level=level) -> float:
                return coupled_sample(
                    hamiltonian, hierarchy, level, rng.substream(PURPOSE_MAIN, level, i), psi0, observable
                )[2]

        values = np.array(indexed_map(sample, n, threads))
        mean = float(np.mean(values))
        variance = float(np.var(values, ddof=1)) if n > 1 else 0.0
        stats.append(
            LevelStats(
                level=level,
                n_samples=n,
                mean=mean,
                variance=variance,
                cost_per_sample=hierarchy.cost_per_sample(level),
            )
        )
        estimate += mean
    return estimate, stats


def mlmc_cost(variances, costs, eps: float) -> float:
    """Predicted total gates 2 * S^2 / eps^2 of the optimally allocated estimator."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = giles_sum(variances, costs)
    return 2.0 * s * s / eps**2


def per_level_cost_bound(t: float, one_norm: float) -> float:
    """Uniform bound sqrt(V_ell * C_ell) <= sqrt(3A/2) with A = 8 t^2 lambda^2."""
    return math.sqrt(1.5 * 8.0 * (t * one_norm) ** 2)


def theorem_cost_bound(t: float, one_norm: float, eps: float) -> float:
    """Total-gate upper bound C1 * eps^-2 * log2(1/eps)^2, C1 = 64 t^2 lambda^2."""
    if eps >= 1.0 / math.e:
        raise ValueError("bound holds for eps < 1/e")
    c1 = 64.0 * (t * one_norm) ** 2
    return c1 * eps**-2 * math.log2(1.0 / eps) ** 2


@dataclass
class CrossoverResult:
    """Root of C_std(eps) = C_MLMC(eps) plus the two closed-form regime estimates."""

    eps_star: float | None
    regime: str
    eps_overhead: float
    eps_log_dominated: float | None
    bracket_found: bool


def _std_cost_model(eps: float, bias_constant: float, sigma2: float) -> float:
    return (math.sqrt(2.0) * bias_constant / eps) * (2.0 * sigma2 / eps**2)


def _mlmc_cost_model(
    eps: float, bias_constant: float, variance_constant: float, n0: int, v0: float
) -> float:
    level = choose_finest_level(eps, bias_constant, n0)
    s = math.sqrt(v0 * n0) + level * math.sqrt(1.5 * variance_constant)
    return 2.0 * s * s / eps**2


def crossover_solve(
    bias_constant: float,
    sigma2: float,
    variance_constant: float,
    n0: int,
    v0: float,
) -> CrossoverResult:
    """Precision at which the multilevel estimator becomes cheaper.

    The cost models are C_std = 2*sqrt(2)*B*sigma^2/eps^3 and
    C_MLMC = (2/eps^2) * (sqrt(V0*N0) + L(eps)*sqrt(3A/2))^2 with L from the
    bias condition.  The main root is found by bisection on log(eps) over
    [1e-8, 1]; the overhead-dominated estimate sqrt(2)*B*sigma^2/(V0*N0) and
    the scalar-equation root of sigma^2*N0*2^x = (3A/2)*x^2 are also reported.
    """
    if min(bias_constant, sigma2, variance_constant, n0, v0) <= 0:
        raise ValueError("all crossover constants must be positive")

    def gap(log_eps: float) -> float:
        eps = math.exp(log_eps)
        return _std_cost_model(eps, bias_constant, sigma2) - _mlmc_cost_model(
            eps, bias_constant, variance_constant, n0, v0
        )

    lo, hi = math.log(1e-8), math.log(1.0)
    eps_star: float | None = None
    bracket = gap(lo) > 0 and gap(hi) < 0
    if bracket:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if gap(mid) > 0:
                lo = mid
            else:
                hi = mid
        eps_star = math.exp(0.5 * (lo + hi))

    eps_overhead = math.sqrt(2.0) * bias_constant * sigma2 / (v0 * n0)
    eps_log = _solve_log_regime(bias_constant, sigma2, variance_constant, n0)

    if eps_star is None:
        regime = "no-crossover"
    else:
        level = choose_finest_level(eps_star, bias_constant, n0)
        overhead_term = math.sqrt(v0 * n0)
        log_term = level * math.sqrt(1.5 * variance_constant)
        if overhead_term > 2.0 * log_term:
            regime = "overhead-dominated"
        elif log_term > 2.0 * overhead_term:
            regime = "log-dominated"
        else:
            regime = "transition"
    return CrossoverResult(
        eps_star=eps_star,
        regime=regime,
        eps_overhead=eps_overhead,
        eps_log_dominated=eps_log,
        bracket_found=bracket,
    )


def _solve_log_regime(
    bias_constant: float, sigma2: float, variance_constant: float, n0: int
) -> float | None:
    """Largest root of sigma^2 * N0 * 2^x = (3A/2) x^2, mapped back to eps."""

    def f(x: float) -> float:
        return sigma2 * n0 * 2.0**x - 1.5 * variance_constant * x * x

    xs = np.linspace(1e-3, 80.0, 4000)
    vals = np.array([f(x) for x in xs])
    sign_changes = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
    if len(sign_changes) == 0:
        return None
    i = sign_changes[-1]
    lo, hi = xs[i], xs[i + 1]
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    x_root = 0.5 * (lo + hi)
    return math.sqrt(2.0) * bias_constant / (n0 * 2.0**x_root)
