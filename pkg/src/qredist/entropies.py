"""Information quantities on density operators, in bits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .linalg import (
    DensityOperator,
    LayoutError,
    StateVector,
    haar_unitary_array,
    hermitize,
    pinv_sqrtm_psd,
    ptrace_array,
    permute_array,
    sqrtm_psd,
)
from .sdp import solve_trace_lmi

EXACT = "exact"
SDP_CERTIFIED = "sdp_certified"
HEURISTIC_UPPER = "heuristic_upper"
HEURISTIC_LOWER = "heuristic_lower"

SUPPORT_TOL = 1e-12
SDP_FEAS_TOL = 1e-8
FIDELITY_CUT = 1e-14


@dataclass(frozen=True)
class QuantityResult:
    value: float
    kind: str
    certificate: dict[str, Any] | None = field(default=None, repr=False)

    def __float__(self):
        return float(self.value)


# --- array level ----------------------------------------------------------

def _as_matrix(x) -> np.ndarray:
    if isinstance(x, StateVector):
        v = x.amplitudes
        return np.outer(v, v.conj())
    if isinstance(x, DensityOperator):
        return x.matrix
    return np.asarray(x, dtype=complex)


def _same_layout(a, b):
    la, lb = getattr(a, "layout", None), getattr(b, "layout", None)
    if la is not None and lb is not None and la != lb:
        raise LayoutError(f"layouts differ: {la.entries} vs {lb.entries}")


def _sqrt_on_support(m: np.ndarray) -> np.ndarray:
    # round-off eigenvalues (~1e-16) would add ~1e-8 each to the fidelity
    w, v = np.linalg.eigh(hermitize(m))
    w = np.where(w > FIDELITY_CUT * max(w[-1], 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity_array(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = _sqrt_on_support(a), _sqrt_on_support(b)
    f = np.linalg.svd(sa @ sb, compute_uv=False).sum()
    return float(min(max(f, 0.0), 1.0))


def fidelity_pure_array(psi: np.ndarray, b: np.ndarray) -> float:
    """F(|psi><psi|, b) = sqrt(<psi|b|psi>)."""
    val = np.vdot(psi, b @ psi).real
    return float(min(max(np.sqrt(max(val, 0.0)), 0.0), 1.0))


def purified_distance_array(a, b) -> float:
    f = fidelity_array(a, b)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


def entropy_array(m: np.ndarray) -> float:
    w = np.linalg.eigvalsh(hermitize(m))
    w = w[w > 1e-15]
    return float(-(w * np.log2(w)).sum())


def rel_entropy_array(rho: np.ndarray, sigma: np.ndarray) -> float:
    s, v = np.linalg.eigh(hermitize(sigma))
    weights = np.einsum("ij,ik,kj->j", v.conj(), rho, v).real
    ker = s <= SUPPORT_TOL
    if np.any(weights[ker] > 1e-10):
        return float("inf")
    cross = float((weights[~ker] * np.log2(s[~ker])).sum())
    return max(-entropy_array(rho) - cross, 0.0)


def dmax_array(rho: np.ndarray, sigma: np.ndarray) -> float:
    s, v = np.linalg.eigh(hermitize(sigma))
    ker = s <= 1e-10
    if np.any(ker):
        vk = v[:, ker]
        if np.trace(vk.conj().T @ rho @ vk).real > 1e-10:
            return float("inf")
    inv = np.zeros_like(s)
    inv[~ker] = 1.0 / np.sqrt(s[~ker])
    w = (v * inv) @ v.conj().T
    lam = np.linalg.eigvalsh(hermitize(w @ rho @ w))[-1]
    return float(np.log2(lam)) if lam > 0 else float("-inf")


def mutual_info_array(rho: np.ndarray, da: int, db: int) -> float:
    ra = ptrace_array(rho, [da, db], [0])
    rb = ptrace_array(rho, [da, db], [1])
    return max(entropy_array(ra) + entropy_array(rb) - entropy_array(rho), 0.0)


def _restrict_to_support(k: np.ndarray, rho: np.ndarray, db: int):
    w, v = np.linalg.eigh(hermitize(k))
    keep = w > SUPPORT_TOL * max(1.0, w[-1])
    vs = v[:, keep]
    iso = np.kron(vs, np.eye(db))
    return np.diag(w[keep]).astype(complex), iso.conj().T @ rho @ iso, vs


def trace_lmi_bits(k: np.ndarray, rho: np.ndarray, da: int, db: int, restrict: bool):
    """log2 of min Tr Y subject to K ⊗ Y ⪰ rho, with the optimal Y and solver record."""
    if restrict:
        kr, rr, vs = _restrict_to_support(k, rho, db)
    else:
        kr, rr, vs = k, rho, np.eye(da)
    sol = solve_trace_lmi(kr, rr, db)
    y = sol.y
    full_slack = np.kron(k, y) - rho
    feas = float(np.linalg.eigvalsh(hermitize(full_slack))[0])
    return float(np.log2(sol.primal)), y, sol, feas


def imax_array(rho: np.ndarray, da: int, db: int):
    ka = ptrace_array(rho, [da, db], [0])
    return trace_lmi_bits(ka, rho, da, db, restrict=True)


def hmin_array(rho: np.ndarray, da: int, db: int):
    val, y, sol, feas = trace_lmi_bits(np.eye(da, dtype=complex), rho, da, db, restrict=False)
    return -val, y, sol, feas


# --- label handling -------------------------------------------------------

def _bipartite(rho, part_a, part_b):
    """Marginal on part_a ∪ part_b, ordered A then B, with the two dimensions."""
    part_a, part_b = list(part_a), list(part_b)
    if set(part_a) & set(part_b):
        raise LayoutError(f"overlapping parts {part_a} and {part_b}")
    if not part_a or not part_b:
        raise LayoutError("both parts must be nonempty")
    return _ordered(rho, [part_a, part_b])


def _ordered(rho, parts: Sequence[Sequence[str]]):
    lay = rho.layout
    labels = [lab for p in parts for lab in p]
    if len(set(labels)) != len(labels):
        raise LayoutError(f"overlapping label sets {parts}")
    idx = [lay.index(lab) for lab in labels]
    mat = _as_matrix(rho)
    sub = ptrace_array(mat, lay.dims, idx) if len(idx) < len(lay) else mat
    kept = sorted(idx)
    order = [kept.index(i) for i in idx]
    sub = permute_array(sub, [lay.dims[i] for i in kept], order)
    dims = [lay.dim_of(list(p)) for p in parts]
    return sub, dims


# --- public API -----------------------------------------------------------

def fidelity(rho, sigma) -> float:
    """F = ||sqrt(rho) sqrt(sigma)||_1."""
    _same_layout(rho, sigma)
    return fidelity_array(_as_matrix(rho), _as_matrix(sigma))


def purified_distance(rho, sigma) -> float:
    _same_layout(rho, sigma)
    return purified_distance_array(_as_matrix(rho), _as_matrix(sigma))


def rel_entropy(rho, sigma) -> float:
    _same_layout(rho, sigma)
    return rel_entropy_array(_as_matrix(rho), _as_matrix(sigma))


def dmax(rho, sigma) -> float:
    _same_layout(rho, sigma)
    return dmax_array(_as_matrix(rho), _as_matrix(sigma))


def entropy(rho) -> float:
    return entropy_array(_as_matrix(rho))


def mutual_info(rho, part_a, part_b) -> float:
    sub, (da, db) = _bipartite(rho, part_a, part_b)
    return mutual_info_array(sub, da, db)


def cond_mutual_info(rho, a, b, c) -> float:
    """I(A:B|C) = S(AC) + S(BC) - S(C) - S(ABC)."""
    sub, (da, db, dc) = _ordered(rho, [list(a), list(b), list(c)])
    dims = [da, db, dc]
    s_ac = entropy_array(ptrace_array(sub, dims, [0, 2]))
    s_bc = entropy_array(ptrace_array(sub, dims, [1, 2]))
    s_c = entropy_array(ptrace_array(sub, dims, [2]))
    return s_ac + s_bc - s_c - entropy_array(sub)


def _sdp_result(value, y, sol, feas, sign=1.0):
    dual = sign * float(np.log2(sol.dual)) if sol.dual > 0 else sign * float("-inf")
    sigma = y / np.trace(y).real
    cert = {
        "sigma_b": sigma,
        "y": y,
        "dual_z": sol.z,
        "dual_bound": dual,
        "primal_min_eig": feas,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "feasible": feas >= -SDP_FEAS_TOL,
    }
    return QuantityResult(value, SDP_CERTIFIED, cert)


def imax(rho, part_a, part_b) -> QuantityResult:
    """Max-information Imax(A:B) from the trace-minimization SDP.

    The certificate holds the optimal ``sigma_b`` and the dual bound; the
    primal value is reported, so it is never below the true optimum by more
    than the solver's rounding.
    """
    sub, (da, db) = _bipartite(rho, part_a, part_b)
    return _sdp_result(*imax_array(sub, da, db))


def hmin(rho, part_a, part_b) -> QuantityResult:
    sub, (da, db) = _bipartite(rho, part_a, part_b)
    val, y, sol, feas = hmin_array(sub, da, db)
    return _sdp_result(val, y, sol, feas, sign=-1.0)


def hmax_array(rho_ab: np.ndarray, da: int, db: int) -> float:
    w, v = np.linalg.eigh(hermitize(rho_ab))
    keep = w > 1e-14
    # purification sum_i sqrt(w_i) |v_i>|i> on A B R with R of dimension rank
    amp = (v[:, keep] * np.sqrt(w[keep])).reshape(da, db, -1)
    dr = amp.shape[2]
    m = amp.transpose(0, 2, 1).reshape(da * dr, db)
    rho_ar = m @ m.conj().T
    val, _, _, _ = hmin_array(rho_ar, da, dr)
    return -val


def hmax(rho, part_a, part_b, purifying_label: str = "Rp") -> QuantityResult:
    """Hmax(A|B) = -Hmin(A|R) on the canonical purification of rho_AB.

    ``purifying_label`` only names the internal purifying register.
    """
    if purifying_label in list(part_a) + list(part_b):
        raise LayoutError(f"purifying label {purifying_label!r} clashes with the parts")
    sub, (da, db) = _bipartite(rho, part_a, part_b)
    return QuantityResult(hmax_array(sub, da, db), SDP_CERTIFIED, {"purifying_label": purifying_label})


# --- smoothing --------------------------------------------------------------

def _project_density(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(m))
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.conj().T
    return hermitize(out / w.sum())


def _pull_into_ball(center: np.ndarray, cand: np.ndarray, eps: float) -> np.ndarray:
    """Point on the segment cand -> center closest to cand with P(center, .) <= eps.

    Fidelity is concave along the segment and maximal at the center, so the
    distance is monotone and bisection is valid.
    """
    if purified_distance_array(center, cand) <= eps:
        return cand
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if purified_distance_array(center, (1 - mid) * cand + mid * center) <= eps:
            hi = mid
        else:
            lo = mid
    return hermitize((1 - hi) * cand + hi * center)


def smooth(quantity: str, rho, parts, eps: float, restarts: int = 8, iterations: int = 500,
           seed: int = 0) -> QuantityResult:
    """Heuristic smoothing over the normalized eps-ball in purified distance.

    ``parts`` is ``(part_a, part_b)``.  Imax and Hmax are minimized (the result
    is an upper bound on the smooth quantity); Hmin is maximized (lower bound).
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    part_a, part_b = parts
    center, (da, db) = _bipartite(rho, part_a, part_b)
    center = hermitize(center)

    if quantity == "imax":
        def value(m):
            return imax_array(m, da, db)[0]
        sign, kind = 1.0, HEURISTIC_UPPER
        target = np.kron(ptrace_array(center, [da, db], [0]), ptrace_array(center, [da, db], [1]))
    elif quantity == "hmin":
        def value(m):
            return -hmin_array(m, da, db)[0]
        sign, kind = -1.0, HEURISTIC_LOWER
        target = np.kron(np.eye(da) / da, ptrace_array(center, [da, db], [1]))
    elif quantity == "hmax":
        def value(m):
            return hmax_array(m, da, db)
        sign, kind = 1.0, HEURISTIC_UPPER
        w, v = np.linalg.eigh(center)
        target = np.outer(v[:, -1], v[:, -1].conj())
    else:
        raise ValueError(f"unknown quantity {quantity!r}")

    # internally everything is minimized; sign flips hmin
    best_state = center
    best = value(center)
    evaluations = 1
    if eps > 0:
        cand = _pull_into_ball(center, target, eps)
        v = value(cand)
        evaluations += 1
        if v < best:
            best, best_state = v, cand

        rng = np.random.default_rng(seed)
        dim = center.shape[0]
        for r in range(restarts):
            cur, cur_val = best_state, best
            step = 0.5 * eps
            stale = 0
            for _ in range(iterations):
                h = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
                h = hermitize(h)
                h /= np.linalg.norm(h)
                trial = _pull_into_ball(center, _project_density(cur + step * h), eps)
                tv = value(trial)
                evaluations += 1
                if tv < cur_val - 1e-12:
                    cur, cur_val = trial, tv
                    stale = 0
                else:
                    stale += 1
                    if stale >= 10:
                        step *= 0.5
                        stale = 0
                        if step < 1e-6:
                            break
            if cur_val < best:
                best, best_state = cur_val, cur

    state = best_state
    cert = {
        "state": state,
        "purified_distance": purified_distance_array(center, state),
        "evaluations": evaluations,
        "restarts": restarts,
        "iterations": iterations,
        "seed": seed,
    }
    return QuantityResult(sign * best, kind, cert)


# --- fidelity of recovery ---------------------------------------------------

def _recovery_output(rho_ab: np.ndarray, iso: np.ndarray, da: int, db: int, dc: int, de: int):
    """(id_A ⊗ Tr_E V .) applied to rho_AB for a Stinespring isometry V: B -> B C E."""
    full = np.kron(np.eye(da), iso)
    out = full @ rho_ab @ full.conj().T
    return ptrace_array(out, [da, db, dc, de], [0, 1, 2])


def petz_isometry(rho_bc: np.ndarray, db: int, dc: int, de: int) -> np.ndarray:
    """Stinespring isometry B -> B C E of the Petz map, completed on ker(rho_B)."""
    rho_b = ptrace_array(rho_bc, [db, dc], [0])
    half = sqrtm_psd(rho_bc)
    inv = pinv_sqrtm_psd(rho_b)
    kraus = []
    for j in range(dc):
        ej = np.zeros((dc, 1))
        ej[j] = 1.0
        kraus.append(half @ np.kron(inv, ej))
    proj = inv @ sqrtm_psd(rho_b)
    e0 = np.zeros((dc, 1))
    e0[0] = 1.0
    kraus.append(np.kron(np.eye(db) - proj, e0))
    v = np.zeros((db * dc, de, db), dtype=complex)
    for e, k in enumerate(kraus):
        v[:, e, :] = k
    iso = v.reshape(db * dc * de, db)
    return _polar(iso)


def _polar(g: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(g, full_matrices=False)
    return u @ vh


def fidelity_of_recovery(rho, a, c, b, method: str = "petz", restarts: int = 4,
                         iterations: int = 300, seed: int = 0) -> QuantityResult:
    """F(A:C|B): best fidelity of rebuilding rho_ABC from rho_AB with a channel on B.

    Both methods evaluate a concrete channel, so both are lower bounds.  The
    search starts from the Petz dilation, so it never reports less than Petz.
    """
    a, b, c = list(a), list(b), list(c)
    if not a or not b or not c:
        raise LayoutError("fidelity of recovery needs three nonempty parts")
    sub, (da, db, dc) = _ordered(rho, [a, b, c])
    sub = hermitize(sub)
    rho_ab = ptrace_array(sub, [da, db, dc], [0, 1])
    rho_bc = ptrace_array(sub, [da, db, dc], [1, 2])
    de = max(db * dc, dc + 1)

    w, v = np.linalg.eigh(sub)
    pure = w[-1] > 1 - 1e-12
    psi = v[:, -1]

    def score(iso):
        out = _recovery_output(rho_ab, iso, da, db, dc, de)
        if pure:
            return fidelity_pure_array(psi, out)
        return fidelity_array(sub, out)

    petz = petz_isometry(rho_bc, db, dc, de)
    best_iso, best = petz, score(petz)
    if method == "petz":
        return QuantityResult(best, HEURISTIC_LOWER, {"method": "petz"})
    if method != "optimize":
        raise ValueError(f"method must be 'petz' or 'optimize', got {method!r}")

    rng = np.random.default_rng(seed)
    shape = (db * dc * de, db)
    for r in range(restarts):
        if r == 0:
            cur = petz
        else:
            cur = haar_unitary_array(shape[0], rng)[:, :db]
        cur_val = score(cur)
        step = 0.3
        stale = 0
        for _ in range(iterations):
            g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            trial = _polar(cur + step * g / np.linalg.norm(g))
            tv = score(trial)
            if tv > cur_val + 1e-13:
                cur, cur_val = trial, tv
                stale = 0
            else:
                stale += 1
                if stale >= 10:
                    step *= 0.5
                    stale = 0
                    if step < 1e-7:
                        break
        if cur_val > best:
            best, best_iso = cur_val, cur
    return QuantityResult(best, HEURISTIC_LOWER, {"method": "optimize", "isometry": best_iso,
                                                  "env_dim": de, "petz_value": score(petz)})
