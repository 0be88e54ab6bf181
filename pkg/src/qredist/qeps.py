"""Upper and lower estimates of the redistribution cost quantity Q^eps.

The upper estimate searches over a register T, a unitary U on B C T, a state
sigma' on T and a state kappa on R B C T such that U kappa U^dagger lies in
the eps-ball of Psi_RBC ⊗ sigma'_T and kappa_RB = Psi_RB.  Any such point
gives Imax(RB:CT)_kappa as an upper bound.

kappa is never free: for a candidate (U, sigma') it is obtained by applying
to the purifying registers A C of Psi_RB the isometry that best aligns Psi
with a purification of gamma = U^dagger (Psi_RBC ⊗ sigma') U.  The RB
marginal is untouched by construction and F(kappa, gamma) >= F(Psi_RB, gamma_RB).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.linalg import expm

from .entropies import (
    cond_mutual_info,
    dmax_array,
    entropy_array,
    fidelity_array,
    fidelity_of_recovery,
    imax_array,
    mutual_info_array,
    smooth,
)
from .linalg import (
    DensityOperator,
    IsometryMap,
    LayoutError,
    RegisterLayout,
    StateVector,
    eig_hermitian,
    hermitize,
    permute,
    ptrace_array,
)

T_DIM_CAP = 4
CONSTRAINT_TOL = 1e-6
MARGINAL_TOL = 1e-8


@dataclass(frozen=True)
class AchievingPoint:
    t_dim: int
    u_bct: IsometryMap
    sigma_prime: DensityOperator
    kappa: DensityOperator
    value: float | None = None
    sigma_ct: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class RecoveryBound:
    value: float  # from the optimized recovery channel
    petz: float
    fidelity_optimized: float
    fidelity_petz: float


@dataclass(frozen=True)
class QepsEstimate:
    upper: float
    lower: float | None
    feasible_point: AchievingPoint
    search_meta: dict[str, Any]
    lower_petz: float | None = None

    def csv_row(self, input_id: str, eps: float) -> dict[str, Any]:
        return {
            "input_id": input_id,
            "eps": eps,
            "t_dim": self.feasible_point.t_dim,
            "upper_bits": self.upper,
            "lower_bits": self.lower if self.lower is not None else float("nan"),
            "restarts": self.search_meta["restarts"],
            "converged": self.search_meta["converged"],
        }


QEPS_CSV_HEADER = ["input_id", "eps", "t_dim", "upper_bits", "lower_bits", "restarts", "converged"]


def psi_tensor(psi: StateVector) -> np.ndarray:
    """Amplitudes of Psi as a tensor with axes (R, A, B, C)."""
    labels = set(psi.layout.labels)
    if labels != {"R", "A", "B", "C"}:
        raise LayoutError(f"expected registers R, A, B, C; got {sorted(labels)}")
    p = permute(psi, ["R", "A", "B", "C"])
    return p.amplitudes.reshape(p.dims)


def with_trivial(psi: StateVector, label: str) -> StateVector:
    """Append a one-dimensional register."""
    lay = psi.layout.concat(RegisterLayout(((label, 1),)))
    return StateVector(lay, psi.amplitudes)


class _Problem:
    """Precomputed pieces of Psi shared by every candidate evaluation."""

    def __init__(self, psi: StateVector, t: int):
        amp = psi_tensor(psi)
        r, a, b, c = amp.shape
        self.r, self.a, self.b, self.c, self.t = r, a, b, c, t
        # Psi_RB purified by X = A C: rows (R, B), columns (A, C)
        self.p_rb = amp.transpose(0, 2, 1, 3).reshape(r * b, a * c)
        # Psi_RBC purified by A
        m = amp.transpose(0, 2, 3, 1).reshape(r * b * c, a)
        self.rho_rbc = m @ m.conj().T
        self.rho_rb = self.p_rb @ self.p_rb.conj().T

    def gamma(self, u: np.ndarray, sp: np.ndarray) -> np.ndarray:
        """U^dagger (Psi_RBC ⊗ sigma'_T) U with U acting on B C T."""
        full = np.kron(np.eye(self.r), u)
        return full.conj().T @ np.kron(self.rho_rbc, sp) @ full

    def kappa(self, gam: np.ndarray) -> np.ndarray:
        """Closest state to gamma (in the Uhlmann sense) with RB marginal Psi_RB."""
        r, b, c, t = self.r, self.b, self.c, self.t
        w, v = np.linalg.eigh(hermitize(gam))
        keep = w > 1e-14
        g = (v[:, keep] * np.sqrt(w[keep])).reshape(r * b, c * t * int(keep.sum()))
        x = g.conj().T @ self.p_rb
        uu, _, vh = np.linalg.svd(x, full_matrices=False)
        iso = uu @ vh  # X -> (C, T, purifier of gamma)
        out = self.p_rb @ iso.T
        out = out.reshape(r * b * c * t, -1)
        k = out @ out.conj().T
        return hermitize(k / np.trace(k).real)

    def target(self, sp: np.ndarray) -> np.ndarray:
        return np.kron(self.rho_rbc, sp)


def _unitary(h_params: np.ndarray, d: int) -> np.ndarray:
    h = h_params[: d * d].reshape(d, d)
    herm = np.triu(h, 1) + 1j * np.tril(h, -1).T
    herm = herm + herm.conj().T + np.diag(np.diag(h))
    return expm(1j * herm)


def _sigma_prime(s_params: np.ndarray, t: int) -> np.ndarray:
    z = s_params[: t * t] + 1j * s_params[t * t:]
    z = z.reshape(t, t)
    m = z @ z.conj().T
    tr = np.trace(m).real
    if tr < 1e-300:
        m = np.zeros((t, t), dtype=complex)
        m[0, 0] = 1.0
        return m
    return hermitize(m / tr)


def _evaluate(prob: _Problem, u: np.ndarray, sp: np.ndarray, eps: float | None = None):
    gam = prob.gamma(u, sp)
    kap = prob.kappa(gam)
    full = np.kron(np.eye(prob.r), u)
    target = prob.target(sp)

    def dist_of(k):
        f = fidelity_array(full @ k @ full.conj().T, target)
        return math.sqrt(max(0.0, 1.0 - f * f))

    dist = dist_of(kap)
    if eps is None or dist > eps:
        return kap, dist
    # mixing with Psi_RB ⊗ kappa_CT keeps the RB marginal; the feasible weights
    # form an interval (fidelity is concave), so bisect for its right end
    dims = [prob.r * prob.b, prob.c * prob.t]
    prod = np.kron(prob.rho_rb, ptrace_array(kap, dims, [1]))
    lo, hi = 0.0, 1.0
    if dist_of(prod) <= eps:
        lo = 1.0
    else:
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            if dist_of((1 - mid) * kap + mid * prod) <= eps:
                lo = mid
            else:
                hi = mid
    kap = hermitize((1 - lo) * kap + lo * prod)
    return kap, dist_of(kap)


def check_point(psi: StateVector, point: AchievingPoint) -> tuple[float, float]:
    """(purified distance of U kappa U^dagger to Psi_RBC ⊗ sigma', max |kappa_RB - Psi_RB|)."""
    prob = _Problem(psi, point.t_dim)
    kap = _ordered_kappa(point)
    u = _ordered_u(point)
    full = np.kron(np.eye(prob.r), u)
    moved = full @ kap @ full.conj().T
    f = fidelity_array(moved, prob.target(point.sigma_prime.matrix))
    rb = ptrace_array(kap, [prob.r * prob.b, prob.c * point.t_dim], [0])
    return math.sqrt(max(0.0, 1.0 - f * f)), float(np.max(np.abs(rb - prob.rho_rb)))


def _ordered_kappa(point: AchievingPoint) -> np.ndarray:
    k = point.kappa
    if set(k.layout.labels) != {"R", "B", "C", "T"}:
        raise LayoutError("kappa must live on R, B, C, T")
    return permute(k, ["R", "B", "C", "T"]).matrix


def _ordered_u(point: AchievingPoint) -> np.ndarray:
    if point.u_bct.input_layout.labels != ("B", "C", "T"):
        raise LayoutError("U must act on registers B, C, T in that order")
    return point.u_bct.matrix


def make_point(psi: StateVector, u: np.ndarray, sp: np.ndarray, kap: np.ndarray, t: int,
               value: float | None = None, sigma_ct: np.ndarray | None = None) -> AchievingPoint:
    amp = psi_tensor(psi)
    r, _, b, c = amp.shape
    bct = RegisterLayout.of(["B", "C", "T"], [b, c, t])
    return AchievingPoint(
        t_dim=t,
        u_bct=IsometryMap(bct, bct, u),
        sigma_prime=DensityOperator(RegisterLayout.of(["T"], [t]), sp),
        kappa=DensityOperator(RegisterLayout.of(["R", "B", "C", "T"], [r, b, c, t]), kap),
        value=value,
        sigma_ct=sigma_ct,
    )


def trivial_point(psi: StateVector, t_dim: int = 1) -> AchievingPoint:
    """T in |0>, U = identity, kappa = Psi_RBC ⊗ |0><0|_T."""
    prob = _Problem(psi, t_dim)
    sp = np.zeros((t_dim, t_dim), dtype=complex)
    sp[0, 0] = 1.0
    d = prob.b * prob.c * t_dim
    kap = np.kron(prob.rho_rbc, sp)
    val, y, _, _ = imax_array(kap, prob.r * prob.b, prob.c * t_dim)
    return make_point(psi, np.eye(d, dtype=complex), sp, kap, t_dim, val, y / np.trace(y).real)


def qeps_upper(psi: StateVector, eps: float, t_dim: int = 2, restarts: int = 4,
               iterations: int = 500, seed: int = 0, with_lower: bool = True,
               t_dim_cap: int = T_DIM_CAP) -> QepsEstimate:
    """Feasible-point search for an upper bound on Q^eps.

    Restart 0 starts at the identity unitary with sigma' = |0><0| (the point
    kappa = Psi ⊗ |0><0|, always feasible); later restarts start at small
    random perturbations of it.  Each iteration perturbs a few randomly chosen
    coordinates of the generator of U and of the parameters of sigma'; a
    candidate is kept only if it is feasible and lowers the value.  The step
    halves after 10 consecutive rejections.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 1 <= t_dim <= t_dim_cap:
        raise ValueError(f"t_dim must lie in [1, {t_dim_cap}], got {t_dim}")
    prob = _Problem(psi, t_dim)
    r, b, c, t = prob.r, prob.b, prob.c, t_dim
    d = b * c * t
    n_h, n_s = d * d, 2 * t * t
    rng = np.random.default_rng(seed)
    da, db = r * b, c * t

    sdp_solves = 0
    evaluations = 0

    def value_of(kap, bound):
        nonlocal sdp_solves
        # I(RB:CT) <= Imax(RB:CT): skip the SDP when it cannot improve
        if mutual_info_array(kap, da, db) >= bound - 1e-12:
            return None, None
        sdp_solves += 1
        val, y, sol, feas = imax_array(kap, da, db)
        if feas < -1e-8:
            return None, None
        return val, y

    base = trivial_point(psi, t)
    best_val = base.value
    best = (np.eye(d, dtype=complex), base.sigma_prime.matrix, base.kappa.matrix, base.sigma_ct)
    converged_any = False

    s0 = np.zeros(n_s)
    s0[0] = 1.0
    for rs in range(restarts):
        h = np.zeros(n_h)
        s = s0.copy()
        if rs > 0:
            h = 0.3 * rng.standard_normal(n_h)
            s = s0 + 0.3 * rng.standard_normal(n_s)
        u = _unitary(h, d)
        sp = _sigma_prime(s, t)
        kap, dist = _evaluate(prob, u, sp, eps)
        evaluations += 1
        cur_val = math.inf
        cur_y = None
        if dist <= eps:
            v, y = value_of(kap, math.inf)
            if v is not None:
                cur_val, cur_y = v, y
        step = 0.25
        stale = 0
        restart_converged = False
        for _ in range(iterations):
            h2, s2 = h.copy(), s.copy()
            idx = rng.choice(n_h + n_s, size=min(4, n_h + n_s), replace=False)
            delta = step * rng.standard_normal(idx.size)
            for i, dlt in zip(idx, delta):
                if i < n_h:
                    h2[i] += dlt
                else:
                    s2[i - n_h] += dlt
            u2 = _unitary(h2, d)
            sp2 = _sigma_prime(s2, t)
            kap2, dist2 = _evaluate(prob, u2, sp2, eps)
            evaluations += 1
            accepted = False
            if dist2 <= eps:
                v, y = value_of(kap2, cur_val)
                if v is not None and v < cur_val - 1e-10:
                    h, s, u, sp, kap, cur_val, cur_y = h2, s2, u2, sp2, kap2, v, y
                    accepted = True
            if accepted:
                stale = 0
            else:
                stale += 1
                if stale >= 10:
                    step *= 0.5
                    stale = 0
                    if step < 1e-4:
                        restart_converged = True
                        break
        if cur_y is not None and cur_val < best_val - 1e-12:
            best_val = cur_val
            best = (u, sp, kap, cur_y / np.trace(cur_y).real)
            converged_any = restart_converged
        elif rs == 0:
            converged_any = restart_converged

    u, sp, kap, sig = best
    point = make_point(psi, u, sp, kap, t, best_val, sig)
    dist, rb_err = check_point(psi, point)
    meta = {
        "restarts": restarts,
        "iterations": iterations,
        "seed": seed,
        "t_dim": t,
        "evaluations": evaluations,
        "sdp_solves": sdp_solves,
        "converged": bool(converged_any),
        "constraint_distance": dist,
        "marginal_error": rb_err,
        "feasible": dist <= eps + CONSTRAINT_TOL and rb_err <= MARGINAL_TOL,
    }
    lower = lower_petz = None
    if with_lower:
        lb = qeps_lower_recovery(psi, eps, seed=seed)
        lower, lower_petz = lb.value, lb.petz
    return QepsEstimate(best_val, lower, point, meta, lower_petz)


def _recovery_bits(f: float, eps: float) -> float:
    if f <= 0:
        return float("-inf")
    return -2.0 * math.log2(f) + math.log2(1.0 - eps * eps)


def qeps_lower_recovery(psi: StateVector, eps: float, restarts: int = 3, iterations: int = 200,
                        seed: int = 0) -> RecoveryBound:
    """-2 log2 F(R:C|B) + log2(1 - eps^2) from Petz and from the optimized recovery channel."""
    if not 0 <= eps < 1:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    rbc = _rbc_state(psi)
    fp = fidelity_of_recovery(rbc, ["R"], ["C"], ["B"], method="petz").value
    fo = fidelity_of_recovery(rbc, ["R"], ["C"], ["B"], method="optimize", restarts=restarts,
                              iterations=iterations, seed=seed).value
    return RecoveryBound(_recovery_bits(fo, eps), _recovery_bits(fp, eps), fo, fp)


def _rbc_state(psi: StateVector) -> DensityOperator:
    amp = psi_tensor(psi)
    r, a, b, c = amp.shape
    m = amp.transpose(0, 2, 3, 1).reshape(r * b * c, a)
    rho = m @ m.conj().T
    return DensityOperator(RegisterLayout.of(["R", "B", "C"], [r, b, c]), hermitize(rho))


def splitting_identity_check(psi: StateVector, eps: float, t_dim: int = 2, restarts: int = 2,
                             iterations: int = 150, smooth_restarts: int = 2,
                             smooth_iterations: int = 150, seed: int = 0) -> dict[str, Any]:
    """With B trivial, Q^eps equals the smooth max-information Imax^eps(R:C).

    Both sides are computed heuristically (each an upper bound on the same
    quantity); they are reported side by side and each is checked against the
    unsmoothed Imax(R:C).
    """
    if "B" in psi.layout.labels:
        raise LayoutError("splitting check expects a state on R, A, C without B")
    full = with_trivial(psi, "B")
    est = qeps_upper(full, eps, t_dim=t_dim, restarts=restarts, iterations=iterations,
                     seed=seed, with_lower=False)
    rc = _rbc_state(full)
    rc_m = ptrace_array(rc.matrix, [rc.dims[0], 1, rc.dims[2]], [0, 2])
    rc_op = DensityOperator(RegisterLayout.of(["R", "C"], [rc.dims[0], rc.dims[2]]), rc_m)
    unsmoothed = imax_array(rc_m, rc.dims[0], rc.dims[2])[0]
    sm = smooth("imax", rc_op, (["R"], ["C"]), eps, restarts=smooth_restarts,
                iterations=smooth_iterations, seed=seed)
    return {
        "qeps_upper": est.upper,
        "smooth_imax": sm.value,
        "imax_unsmoothed": unsmoothed,
        "difference": est.upper - sm.value,
        "qeps_below_unsmoothed": est.upper <= unsmoothed + 1e-6,
        "smooth_below_unsmoothed": sm.value <= unsmoothed + 1e-6,
        "estimate": est,
    }


def qprime_decomposition(psi: StateVector, t_dim: int = 2, seed: int = 0, restarts: int = 10,
                         iterations: int = 60, tol: float = 1e-5) -> dict[str, Any]:
    """Search the exact-marginal family gamma = U^dagger (Psi_RBC ⊗ sigma') U, gamma_RB = Psi_RB.

    Minimizes the decoupling term I(B:CT)_gamma and checks, for every accepted
    candidate, I(RB:CT)_gamma = I(R:C|B)_Psi + I(B:CT)_gamma.  Proposals mix
    unitaries on C T alone (always admissible) with small moves that also act
    on B; those breaking the RB marginal by more than ``tol`` are rejected.
    """
    prob = _Problem(psi, t_dim)
    r, b, c, t = prob.r, prob.b, prob.c, t_dim
    d = b * c * t
    rng = np.random.default_rng(seed)
    cmi = cond_mutual_info(_rbc_state(psi), ["R"], ["C"], ["B"])
    dims = [r, b, c * t]

    def terms(u, sp):
        gam = prob.gamma(u, sp)
        rb = ptrace_array(gam, dims, [0, 1])
        err = float(np.max(np.abs(rb - prob.rho_rb)))
        i_rb_ct = mutual_info_array(gam, r * b, c * t)
        g_bct = ptrace_array(gam, dims, [1, 2])
        i_b_ct = mutual_info_array(g_bct, b, c * t)
        return err, i_rb_ct, i_b_ct

    accepted = rejected = 0
    worst = 0.0
    best = None
    for rs in range(restarts):
        h_b = np.zeros(d * d)
        h_ct = np.zeros((c * t) ** 2) if rs == 0 else rng.standard_normal((c * t) ** 2)
        s = np.zeros(2 * t * t)
        s[0] = 1.0
        if rs > 0:
            s = s + 0.5 * rng.standard_normal(s.size)
        step = 0.3
        cur = None
        for it in range(iterations + 1):
            if it == 0:
                hb2, hct2, s2 = h_b, h_ct, s
            else:
                hb2 = h_b + (step * 0.05 * rng.standard_normal(h_b.size) if rng.random() < 0.5 else 0)
                hct2 = h_ct + step * rng.standard_normal(h_ct.size)
                s2 = s + step * rng.standard_normal(s.size)
            u = np.kron(np.eye(b), _unitary(hct2, c * t)) @ _unitary(hb2, d)
            sp = _sigma_prime(s2, t)
            err, i_rb_ct, i_b_ct = terms(u, sp)
            if err > tol:
                rejected += 1
                continue
            accepted += 1
            worst = max(worst, abs(i_rb_ct - cmi - i_b_ct))
            if cur is None or i_b_ct < cur[0] - 1e-12:
                cur = (i_b_ct, i_rb_ct, hb2, hct2, s2)
                h_b, h_ct, s = hb2, hct2, s2
            else:
                step *= 0.97
        if cur is not None and (best is None or cur[0] < best[0] - 1e-12):
            best = cur
    return {
        "cmi": cmi,
        "best_decoupling": best[0] if best else None,
        "best_i_rb_ct": best[1] if best else None,
        "accepted": accepted,
        "rejected": rejected,
        "max_identity_error": worst,
        "identity_ok": worst <= 1e-6,
    }


def cmi_budget(cmi: float, eps: float) -> float:
    return 49.0 / (2 * eps**2) * cmi + 98.0 / (2 * eps**2) + 15.0


def splitting_prior_bound(imax_eps: float, dim_c: int, eps: float) -> float:
    """Formula value 1/2 Imax^eps + loglog|C| + 4 + 2 log(1/eps) of the earlier splitting protocol."""
    ll = math.log2(math.log2(dim_c)) if dim_c > 2 else 0.0
    return 0.5 * imax_eps + ll + 4.0 + 2.0 * math.log2(1.0 / eps)


def recovery_dmax_witness(psi: StateVector, point: AchievingPoint) -> float:
    """Dmax(Tr_T U kappa U^dagger || Tr_T U (kappa_RB ⊗ sigma_CT) U^dagger) at a feasible point."""
    prob = _Problem(psi, point.t_dim)
    r, b, c, t = prob.r, prob.b, prob.c, point.t_dim
    kap = _ordered_kappa(point)
    u = _ordered_u(point)
    sig = point.sigma_ct
    if sig is None:
        _, y, _, _ = imax_array(kap, r * b, c * t)
        sig = y / np.trace(y).real
    full = np.kron(np.eye(r), u)
    kap_rb = ptrace_array(kap, [r * b, c * t], [0])
    left = ptrace_array(full @ kap @ full.conj().T, [r * b * c, t], [0])
    right = ptrace_array(full @ np.kron(kap_rb, sig) @ full.conj().T, [r * b * c, t], [0])
    return dmax_array(hermitize(left), hermitize(right))


def bound_suite(psi: StateVector, eps: float, estimate: QepsEstimate | None = None,
                two_copy: bool = False, t_dim: int = 1, restarts: int = 2, iterations: int = 100,
                seed: int = 0, two_copy_dim_cap: int = 64) -> dict[str, Any]:
    """Closed-form budgets checked against a Q^eps upper estimate (direction only)."""
    if estimate is None:
        estimate = qeps_upper(psi, eps, t_dim=t_dim, restarts=restarts, iterations=iterations,
                              seed=seed, with_lower=False)
    cmi = cond_mutual_info(_rbc_state(psi), ["R"], ["C"], ["B"])
    budget = cmi_budget(cmi, eps)
    witness = recovery_dmax_witness(psi, estimate.feasible_point)
    out: dict[str, Any] = {
        "cmi": cmi,
        "upper": estimate.upper,
        "cmi_budget": budget,
        "cmi_budget_ok": estimate.upper / 2 <= budget + 1e-6,
        "recovery_dmax_witness": witness,
        "witness_below_upper": witness <= estimate.upper + 1e-6,
        "recovery_ok": witness <= budget + 1e-6,
    }
    if two_copy:
        out["two_copy"] = asymptotic_row(psi, eps, t_dim=t_dim, restarts=restarts,
                                         iterations=iterations, seed=seed,
                                         dim_cap=two_copy_dim_cap, one_copy=estimate)
    return out


def tensor_copies(psi: StateVector, copies: int) -> StateVector:
    """Psi^{⊗copies} with matching registers merged: R = R1 R2 ..., and so on."""
    amp = psi_tensor(psi)
    out = amp
    for _ in range(copies - 1):
        out = np.multiply.outer(out, amp)
    k = copies
    axes = [i + 4 * j for i in range(4) for j in range(k)]
    out = out.transpose(axes)
    dims = [amp.shape[i] ** k for i in range(4)]
    lay = RegisterLayout.of(["R", "A", "B", "C"], dims)
    return StateVector(lay, out.reshape(-1))


def asymptotic_row(psi: StateVector, eps: float, t_dim: int = 1, restarts: int = 2,
                   iterations: int = 100, seed: int = 0, dim_cap: int = 64,
                   one_copy: QepsEstimate | None = None) -> dict[str, Any]:
    """Per-copy upper estimates for one and two copies next to I(R:C|B)."""
    cmi = cond_mutual_info(_rbc_state(psi), ["R"], ["C"], ["B"])
    if one_copy is None:
        one_copy = qeps_upper(psi, eps, t_dim=t_dim, restarts=restarts, iterations=iterations,
                              seed=seed, with_lower=False)
    row: dict[str, Any] = {"cmi": cmi, "per_copy_1": one_copy.upper, "per_copy_2": None,
                           "skipped": None}
    two = tensor_copies(psi, 2)
    _, _, b2, c2 = psi_tensor(two).shape
    r2 = two.layout.dim_of("R")
    if r2 * b2 * c2 * t_dim > dim_cap:
        row["skipped"] = f"two-copy dimension {r2 * b2 * c2 * t_dim} exceeds cap {dim_cap}"
        return row
    est2 = qeps_upper(two, eps, t_dim=t_dim, restarts=restarts, iterations=iterations,
                      seed=seed, with_lower=False)
    row["per_copy_2"] = est2.upper / 2
    return row


def entropy_rb_check(psi: StateVector) -> float:
    """S(RB) of Psi; used by callers that want to skip trivially decoupled inputs."""
    return entropy_array(_Problem(psi, 1).rho_rb)


def decoupled_c(psi: StateVector, tol: float = 1e-9) -> bool:
    """True when C is in a product state with R B (I(RB:C) = 0)."""
    prob = _Problem(psi, 1)
    return mutual_info_array(prob.rho_rbc, prob.r * prob.b, prob.c) <= tol


def eig_sigma(point: AchievingPoint):
    return eig_hermitian(point.sigma_prime.matrix)
