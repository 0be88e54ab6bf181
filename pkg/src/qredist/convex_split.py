"""Convex-split mixtures: the state tau over P Q_1..Q_n in which one Q_j carries
the correlated partner of P and every other Q_l carries sigma, averaged over j.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .entropies import dmax_array, entropy_array, fidelity_array, rel_entropy_array
from .linalg import (
    DensityOperator,
    LayoutError,
    RegisterLayout,
    StateVector,
    eig_hermitian,
    hermitize,
    permute_array,
    ptrace_array,
)

DEFAULT_MEMORY_CAP = 2**10
STAGE_TOL = 1e-8


class MemoryCapError(ValueError):
    pass


def lemma_n(k: float, delta: float) -> int:
    """Number of Q registers for closeness 3*delta: 1 if k <= 3*delta, else
    ceil(8 * 2^k * log2(k/delta) / delta^3).
    """
    if not 0.0 < delta < 1.0 / 6.0:
        raise ValueError(f"delta must lie in (0, 1/6), got {delta}")
    if not (k >= 0 and math.isfinite(k)):
        raise ValueError(f"k must be finite and non-negative, got {k}")
    if k <= 3 * delta:
        return 1
    return int(math.ceil(8.0 * 2.0**k * math.log2(k / delta) / delta**3))


@dataclass(frozen=True)
class ConvexSplitInstance:
    rho_pq: DensityOperator
    sigma_q: DensityOperator
    delta: float
    k: float
    n: int
    n_overridden: bool = False

    @property
    def q_labels(self) -> tuple[str, ...]:
        return self.sigma_q.layout.labels

    @property
    def p_labels(self) -> tuple[str, ...]:
        return tuple(lab for lab in self.rho_pq.layout.labels if lab not in self.q_labels)

    @property
    def dp(self) -> int:
        return self.rho_pq.layout.dim_of(self.p_labels)

    @property
    def dq(self) -> int:
        return self.sigma_q.layout.total_dim

    def ordered_rho(self) -> np.ndarray:
        """rho_PQ as a matrix with all P registers first, then Q."""
        lay = self.rho_pq.layout
        order = [lay.index(lab) for lab in self.p_labels + self.q_labels]
        return permute_array(self.rho_pq.matrix, lay.dims, order)


def make_instance(rho_pq: DensityOperator, sigma_q: DensityOperator, delta: float,
                  n_override: int | None = None) -> ConvexSplitInstance:
    q = sigma_q.layout.labels
    for lab in q:
        if rho_pq.layout.dim_of(lab) != sigma_q.layout.dim_of(lab):
            raise LayoutError(f"register {lab!r} has different dimensions in rho_pq and sigma_q")
    if len(q) >= len(rho_pq.layout):
        raise LayoutError("rho_pq needs at least one register outside sigma_q")
    if not 0.0 < delta < 1.0 / 6.0:
        raise ValueError(f"delta must lie in (0, 1/6), got {delta}")
    tmp = ConvexSplitInstance(rho_pq, sigma_q, delta, 0.0, 1)
    rho = tmp.ordered_rho()
    dp, dq = tmp.dp, tmp.dq
    rho_p = ptrace_array(rho, [dp, dq], [0])
    k = dmax_array(rho, np.kron(rho_p, sigma_q.matrix))
    if not math.isfinite(k):
        raise ValueError("Dmax(rho_PQ || rho_P ⊗ sigma_Q) is infinite")
    k = max(k, 0.0)
    if n_override is not None:
        if int(n_override) < 1:
            raise ValueError("n_override must be a positive integer")
        return ConvexSplitInstance(rho_pq, sigma_q, delta, k, int(n_override), True)
    return ConvexSplitInstance(rho_pq, sigma_q, delta, k, lemma_n(k, delta), False)


def _kron_power(m: np.ndarray, p: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(p):
        out = np.kron(out, m)
    return out


def placed_term(rho: np.ndarray, sigma: np.ndarray, dp: int, dq: int, n: int, j: int) -> np.ndarray:
    """rho on P Q_j tensored with sigma on every other Q_l (j counts from 1)."""
    base = np.kron(rho, _kron_power(sigma, n - 1))
    order = [0]
    nxt = 2
    for pos in range(1, n + 1):
        if pos == j:
            order.append(1)
        else:
            order.append(nxt)
            nxt += 1
    return permute_array(base, [dp] + [dq] * n, order)


def tau_array(rho: np.ndarray, sigma: np.ndarray, dp: int, dq: int, n: int) -> np.ndarray:
    tau = sum(placed_term(rho, sigma, dp, dq, n, j) for j in range(1, n + 1)) / n
    return hermitize(tau)


def _check_cap(inst: ConvexSplitInstance, memory_cap: int):
    dim = inst.dp * inst.dq**inst.n
    if dim > memory_cap:
        raise MemoryCapError(
            f"dense convex split needs dimension {dim} > cap {memory_cap}; "
            "lower n with n_override or use derivation_diagnostics at a smaller n"
        )


def tau_layout(inst: ConvexSplitInstance, q_prefix: str = "Q") -> RegisterLayout:
    lay = inst.rho_pq.layout
    entries = [(lab, lay.dim_of(lab)) for lab in inst.p_labels]
    entries += [(f"{q_prefix}{j}", inst.dq) for j in range(1, inst.n + 1)]
    return RegisterLayout(tuple(entries))


def build_tau(inst: ConvexSplitInstance, memory_cap: int = DEFAULT_MEMORY_CAP,
              q_prefix: str = "Q") -> DensityOperator:
    _check_cap(inst, memory_cap)
    tau = tau_array(inst.ordered_rho(), inst.sigma_q.matrix, inst.dp, inst.dq, inst.n)
    return DensityOperator(tau_layout(inst, q_prefix), tau)


@dataclass(frozen=True)
class StageTerms:
    # I(P:Q^n)_tau <= D(rho_PQn ⊗ sigma^(n-1) || rho_P ⊗ tau_Q) - D(rho_PQn || tau_PQn)
    decomp_lhs: float
    decomp_rhs: float
    # D(rho_PQn || tau_PQn) >= D(rho_PQ || rho_P ⊗ sigma) - log(1 + 2^k/n)
    local_lhs: float
    local_rhs: float
    # D(rho_PQn ⊗ sigma^(n-1) || rho_P ⊗ tau_Q) <= D(rho || rho_P ⊗ sigma) + classical
    #          <= D(rho || rho_P ⊗ sigma) + log(1/(1-delta)) + log(n) exp(-delta^2 2^-k (n-1)/2)
    weight_lhs: float
    weight_mid: float
    weight_rhs: float
    classical_term: float
    tail_mass: float
    tail_bound: float
    assembled_bound: float
    mutual_info: float
    decomp_ok: bool
    local_ok: bool
    weight_ok: bool
    tail_ok: bool
    assembled_ok: bool

    def margins(self) -> dict[str, float]:
        return {
            "decomp": self.decomp_rhs - self.decomp_lhs,
            "local": self.local_lhs - self.local_rhs,
            "weight_first": self.weight_mid - self.weight_lhs,
            "weight": self.weight_rhs - self.weight_lhs,
            "tail": self.tail_bound - self.tail_mass,
            "assembled": self.assembled_bound - self.mutual_info,
        }

    @property
    def all_ok(self) -> bool:
        return self.decomp_ok and self.local_ok and self.weight_ok and self.tail_ok and self.assembled_ok


def binomial_terms(k: float, delta: float, n: int) -> tuple[float, float, float]:
    """(classical KL term, tail mass, Chernoff bound) for the weight distribution over |s|.

    sigma(s) = 2^{-k|s|}(1-2^{-k})^{n-1-|s|}, tau(s) = sigma(s)(|s| 2^k + 1)/n, so
    the weight |s| is Binomial(n-1, 2^{-k}).
    """
    p = 2.0**-k
    m = n - 1
    classical = 0.0
    tail = 0.0
    cut = m * p * (1.0 - delta)
    for w in range(m + 1):
        pmf = math.comb(m, w) * p**w * (1.0 - p) ** (m - w)
        if pmf == 0.0:
            continue
        classical += pmf * math.log2(n / (w * 2.0**k + 1.0))
        if w < cut:
            tail += pmf
    bound = math.exp(-(delta**2) * p * m / 2.0)
    return classical, tail, bound


def derivation_diagnostics(inst: ConvexSplitInstance,
                           memory_cap: int = DEFAULT_MEMORY_CAP) -> StageTerms:
    _check_cap(inst, memory_cap)
    dp, dq, n, k, delta = inst.dp, inst.dq, inst.n, inst.k, inst.delta
    rho = inst.ordered_rho()
    sigma = inst.sigma_q.matrix
    rho_p = ptrace_array(rho, [dp, dq], [0])
    tau = tau_array(rho, sigma, dp, dq, n)
    dims = [dp] + [dq] * n
    mi = _mutual_info_pq(tau, dp, dq**n)

    tau_q = ptrace_array(tau, dims, list(range(1, n + 1)))
    last = placed_term(rho, sigma, dp, dq, n, n)
    d_big = rel_entropy_array(last, np.kron(rho_p, tau_q))
    tau_pqn = ptrace_array(tau, dims, [0, n])
    d_small = rel_entropy_array(rho, tau_pqn)
    d_base = rel_entropy_array(rho, np.kron(rho_p, sigma))

    return _assemble(mi, d_big, d_small, d_base, k, delta, n)


def _assemble(mi, d_big, d_small, d_base, k, delta, n) -> StageTerms:
    classical, tail, bound = binomial_terms(k, delta, n)
    log_n = math.log2(n)
    local_rhs = d_base - math.log2(1.0 + 2.0**k / n)
    weight_rhs = d_base + math.log2(1.0 / (1.0 - delta)) + log_n * bound
    assembled = math.log2(1.0 / (1.0 - delta)) + log_n * bound + math.log2(1.0 + 2.0**k / n)
    decomp_rhs = d_big - d_small
    weight_mid = d_base + classical
    return StageTerms(
        decomp_lhs=mi, decomp_rhs=decomp_rhs,
        local_lhs=d_small, local_rhs=local_rhs,
        weight_lhs=d_big, weight_mid=weight_mid, weight_rhs=weight_rhs,
        classical_term=classical, tail_mass=tail, tail_bound=bound,
        assembled_bound=assembled, mutual_info=mi,
        decomp_ok=mi <= decomp_rhs + STAGE_TOL,
        local_ok=d_small >= local_rhs - STAGE_TOL,
        weight_ok=(d_big <= weight_mid + STAGE_TOL) and (weight_mid <= weight_rhs + STAGE_TOL),
        tail_ok=tail <= bound + STAGE_TOL,
        assembled_ok=mi <= assembled + STAGE_TOL,
    )


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    p = p.reshape(-1)
    q = q.reshape(-1)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def _shannon(p: np.ndarray) -> float:
    p = p.reshape(-1)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


COMMUTING_CAP = 2**22


def commuting_k(p_pq: np.ndarray, s_q: np.ndarray) -> float:
    p_p = p_pq.sum(axis=1)
    return max(math.log2(_ratio(p_pq, p_p, s_q).max()), 0.0)


def _ratio(p_pq, p_p, s_q):
    ref = np.outer(p_p, s_q)
    out = np.zeros_like(p_pq)
    pos = p_pq > 0
    if np.any(ref[pos] <= 0):
        raise ValueError("Dmax(rho_PQ || rho_P ⊗ sigma_Q) is infinite")
    out[pos] = p_pq[pos] / ref[pos]
    return out


def commuting_tau(p_pq: np.ndarray, s_q: np.ndarray, n: int) -> np.ndarray:
    """Diagonal of tau for diagonal rho_PQ and sigma, shape (dp, dq, ..., dq)."""
    dp, dq = p_pq.shape
    if dp * dq**n > COMMUTING_CAP:
        raise MemoryCapError(f"commuting convex split needs {dp * dq**n} entries > {COMMUTING_CAP}")
    tau = np.zeros((dp,) + (dq,) * n)
    for j in range(n):
        term = p_pq.reshape((dp,) + tuple(dq if a == j else 1 for a in range(n)))
        for l in range(n):
            if l != j:
                term = term * s_q.reshape((1,) + tuple(dq if a == l else 1 for a in range(n)))
        tau = tau + term
    return tau / n


def commuting_stage_terms(p_pq: np.ndarray, s_q: np.ndarray, delta: float, n: int) -> StageTerms:
    """Stage terms for rho_PQ and sigma diagonal in a common product basis.

    Every operator involved is then diagonal, so the relative entropies are
    exact classical divergences and n well beyond the dense cap is reachable.
    """
    p_pq = np.asarray(p_pq, dtype=float)
    s_q = np.asarray(s_q, dtype=float)
    dp, dq = p_pq.shape
    k = commuting_k(p_pq, s_q)
    p_p = p_pq.sum(axis=1)
    tau = commuting_tau(p_pq, s_q, n)
    tau_q = tau.sum(axis=0)
    mi = max(_shannon(p_p) + _shannon(tau_q) - _shannon(tau), 0.0)
    last = p_pq.reshape((dp,) + (1,) * (n - 1) + (dq,))
    for l in range(n - 1):
        last = last * s_q.reshape((1,) + tuple(dq if a == l else 1 for a in range(n)))
    d_big = _kl(last, p_p.reshape((dp,) + (1,) * n) * tau_q[None])
    tau_pqn = (p_pq + (n - 1) * np.outer(p_p, s_q)) / n
    d_small = _kl(p_pq, tau_pqn)
    d_base = _kl(p_pq, np.outer(p_p, s_q))
    return _assemble(mi, d_big, d_small, d_base, k, delta, n)


def _mutual_info_pq(tau: np.ndarray, dp: int, drest: int) -> float:
    tp = ptrace_array(tau, [dp, drest], [0])
    tq = ptrace_array(tau, [dp, drest], [1])
    return max(entropy_array(tp) + entropy_array(tq) - entropy_array(tau), 0.0)


@dataclass(frozen=True)
class SplitReport:
    mutual_info: float
    fidelity_sq: float
    bound_3delta_ok: bool
    bound_6delta_ok: bool
    stage_terms: StageTerms
    pinsker_chain_ok: bool
    k: float
    delta: float
    n: int
    n_overridden: bool
    rounding: str = "ceil"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stage_terms"]["margins"] = self.stage_terms.margins()
        return d


def verify_lemma(inst: ConvexSplitInstance, memory_cap: int = DEFAULT_MEMORY_CAP) -> SplitReport:
    """Mutual information and product-closeness of tau, with the proof stages attached."""
    _check_cap(inst, memory_cap)
    dp, dq, n = inst.dp, inst.dq, inst.n
    tau = tau_array(inst.ordered_rho(), inst.sigma_q.matrix, dp, dq, n)
    drest = dq**n
    mi = _mutual_info_pq(tau, dp, drest)
    prod = np.kron(ptrace_array(tau, [dp, drest], [0]), ptrace_array(tau, [dp, drest], [1]))
    f = fidelity_array(prod, tau)
    stages = derivation_diagnostics(inst, memory_cap)
    # F >= 2^{-D/2} >= 1 - D for D = I(P:Q^n)
    return SplitReport(
        mutual_info=mi,
        fidelity_sq=f * f,
        bound_3delta_ok=mi <= 3 * inst.delta + 1e-9,
        bound_6delta_ok=f * f >= 1 - 6 * inst.delta - 1e-9,
        stage_terms=stages,
        pinsker_chain_ok=f >= 1 - mi - 1e-9,
        k=inst.k,
        delta=inst.delta,
        n=n,
        n_overridden=inst.n_overridden,
    )


def purification_factors(rho: np.ndarray, sigma: np.ndarray, dp: int, dq: int):
    """Canonical purifications of rho (axes P, Q, S, E) and sigma (axes Q, E)."""
    wk, vk = eig_hermitian(rho)
    kap = (vk * np.sqrt(np.clip(wk, 0, None))).reshape(dp, dq, dp, dq)
    ws, vs = eig_hermitian(sigma)
    spur = vs * np.sqrt(np.clip(ws, 0, None))
    return kap, spur


def purification_branch(kap: np.ndarray, spur: np.ndarray, n: int, j: int) -> np.ndarray:
    """Branch j (from 1) of the purification, axes (S, E_1..E_n, P, Q_1..Q_n), unnormalized.

    The purification of rho sits on S E_j P Q_j and that of sigma on every
    E_l Q_l with l != j.
    """
    # sublist indices: S=0, E_l=1..n, P=n+1, Q_l=n+2..2n+1
    s_ax, p_ax = 0, n + 1
    out_axes = [s_ax] + list(range(1, n + 1)) + [p_ax] + list(range(n + 2, 2 * n + 2))
    ops = [kap, [p_ax, n + 1 + j, s_ax, j]]
    for l in range(1, n + 1):
        if l != j:
            ops += [spur, [n + 1 + l, l]]
    return np.einsum(*ops, out_axes)


def canonical_purification_vector(rho: np.ndarray, sigma: np.ndarray, dp: int, dq: int,
                                  n: int) -> np.ndarray:
    """Amplitude tensor with axes (M, S, E_1..E_n, P, Q_1..Q_n); M indexes the branch uniformly."""
    kap, spur = purification_factors(rho, sigma, dp, dq)
    branches = [purification_branch(kap, spur, n, j) for j in range(1, n + 1)]
    return np.stack(branches) / np.sqrt(n)


def canonical_purification_of_tau(inst: ConvexSplitInstance,
                                  memory_cap: int = DEFAULT_MEMORY_CAP,
                                  q_prefix: str = "Q") -> StateVector:
    _check_cap(inst, memory_cap)
    dp, dq, n = inst.dp, inst.dq, inst.n
    vec = canonical_purification_vector(inst.ordered_rho(), inst.sigma_q.matrix, dp, dq, n)
    lay = inst.rho_pq.layout
    entries = [("M", n), ("S", dp)] + [(f"E{j}", dq) for j in range(1, n + 1)]
    entries += [(lab, lay.dim_of(lab)) for lab in inst.p_labels]
    entries += [(f"{q_prefix}{j}", dq) for j in range(1, n + 1)]
    v = vec.reshape(-1)
    return StateVector(RegisterLayout(tuple(entries)), v / np.linalg.norm(v))
