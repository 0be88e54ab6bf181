"""Primal-dual interior-point solver for the trace-minimization program

    minimize Tr Y  subject to  K ⊗ Y ⪰ rho,

with K positive definite on A and Y Hermitian on B.  The dual is

    maximize Tr(rho Z)  subject to  Tr_A[(K ⊗ I) Z] = I_B,  Z ⪰ 0.

Both max-information (K = rho_A restricted to its support) and min-entropy
(K = I_A) reduce to this form.  The loop uses Nesterov-Todd scaling with a
Mehrotra-style centering parameter and keeps both iterates strictly feasible,
so the primal value is always an upper bound and the dual value a lower bound
on the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import hermitize


@dataclass(frozen=True)
class SDPSolution:
    primal: float  # Tr Y, upper bound on the optimum
    dual: float  # Tr(rho Z), lower bound on the optimum
    y: np.ndarray
    z: np.ndarray
    slack_min_eig: float
    iterations: int
    converged: bool


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of d x d Hermitian matrices, shape (d*d, d, d)."""
    out = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1.0
        out.append(e)
    s = 1.0 / np.sqrt(2.0)
    for k in range(d):
        for l in range(k + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[k, l] = e[l, k] = s
            out.append(e)
            f = np.zeros((d, d), dtype=complex)
            f[k, l] = -1j * s
            f[l, k] = 1j * s
            out.append(f)
    return np.array(out)


def _psd_sqrt_and_inv(m):
    w, v = np.linalg.eigh(hermitize(m))
    w = np.clip(w, 1e-300, None)
    r = np.sqrt(w)
    return (v * r) @ v.conj().T, (v / r) @ v.conj().T


def _max_step(x, dx):
    """Largest alpha with x + alpha*dx PSD, for positive definite x."""
    try:
        lc = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    li = np.linalg.inv(lc)
    lo = np.linalg.eigvalsh(hermitize(li @ dx @ li.conj().T))[0]
    return np.inf if lo >= 0 else -1.0 / lo


def _step(k, rho, y, z, s, mu, a_ops, a_flat, basis, c, coords):
    """One predictor-corrector step; None when it cannot be taken in finite arithmetic."""
    n = s.shape[0]
    s_half, s_half_inv = _psd_sqrt_and_inv(s)
    mid, _ = _psd_sqrt_and_inv(s_half @ z @ s_half)
    w = hermitize(s_half_inv @ mid @ s_half_inv)
    if not np.all(np.isfinite(w)):
        return None
    wa = w @ a_ops @ w
    schur = (a_flat @ wa.transpose(0, 2, 1).reshape(a_flat.shape[0], -1).T).real
    schur = 0.5 * (schur + schur.T)
    r_p = c - coords(z)
    chol = np.linalg.cholesky(schur)
    s_inv = np.linalg.inv(s)

    def direction(sigma):
        rc = sigma * mu * s_inv - z
        rhs = coords(rc) - r_p
        dy = np.linalg.solve(chol.conj().T, np.linalg.solve(chol, rhs))
        ds = np.tensordot(dy, a_ops, axes=1)
        dz = hermitize(rc - w @ ds @ w)
        return dy, hermitize(ds), dz

    dy, ds, dz = direction(0.0)
    ap = min(1.0, _max_step(s, ds))
    ad = min(1.0, _max_step(z, dz))
    mu_aff = np.trace((s + ap * ds) @ (z + ad * dz)).real / n
    sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0))
    dy, ds, dz = direction(sigma)
    ap = min(1.0, 0.98 * _max_step(s, ds))
    ad = min(1.0, 0.98 * _max_step(z, dz))
    if (ap <= 0 and ad <= 0) or not (np.all(np.isfinite(dy)) and np.all(np.isfinite(dz))):
        return None
    y_new = hermitize(y + ap * np.tensordot(dy, basis, axes=1))
    z_new = hermitize(z + ad * dz)
    try:
        # both iterates must stay strictly feasible for the bounds to hold
        np.linalg.cholesky(np.kron(k, y_new) - rho)
        np.linalg.cholesky(z_new)
    except np.linalg.LinAlgError:
        return None
    return y_new, z_new


def solve_trace_lmi(k: np.ndarray, rho: np.ndarray, db: int, tol: float = 1e-10,
                    max_iter: int = 100) -> SDPSolution:
    k = hermitize(np.asarray(k, dtype=complex))
    rho = hermitize(np.asarray(rho, dtype=complex))
    da = k.shape[0]
    n = da * db
    basis = hermitian_basis(db)
    m = basis.shape[0]
    a_ops = np.einsum("ab,icd->iacbd", k, basis).reshape(m, n, n)
    c = np.einsum("ikk->i", basis).real

    kmin = np.linalg.eigvalsh(k)[0]
    if kmin <= 0:
        raise ValueError("weight operator must be positive definite")
    t0 = (np.linalg.eigvalsh(rho)[-1] + 1.0) / kmin
    y = t0 * np.eye(db, dtype=complex)
    z = np.kron(np.linalg.inv(k), np.eye(db)) / da

    def slack(y_):
        return np.kron(k, y_) - rho

    a_flat = a_ops.reshape(m, -1)

    def coords(mat):
        return (a_flat @ mat.T.reshape(-1)).real

    converged = False
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        s = slack(y)
        gap = np.trace(s @ z).real
        primal = np.trace(y).real
        scale = max(1.0, primal)
        history.append(gap)
        if gap <= tol * scale:
            converged = True
            break
        # rounding floor: the gap stopped shrinking while already tiny
        if len(history) > 5 and gap > 0.5 * history[-6] and gap <= 1e-8 * scale:
            converged = True
            break
        try:
            with np.errstate(all="ignore"):
                step = _step(k, rho, y, z, s, gap / n, a_ops, a_flat, basis, c, coords)
        except np.linalg.LinAlgError:
            step = None
        if step is None:
            # numerical breakdown near a degenerate optimum; keep the last iterate
            converged = gap <= 1e-7 * scale
            break
        y, z = step

    s = slack(y)
    return SDPSolution(
        primal=float(np.trace(y).real),
        dual=float(np.trace(rho @ z).real),
        y=y,
        z=z,
        slack_min_eig=float(np.linalg.eigvalsh(hermitize(s))[0]),
        iterations=it,
        converged=converged,
    )
