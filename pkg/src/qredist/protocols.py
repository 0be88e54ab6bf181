"""State redistribution, splitting and merging simulated on small dense spaces.

Registers.  The input Psi lives on R (referee), A C (Alice) and B (Bob).  An
achieving point supplies T, U on B C T, sigma' on T and kappa on R B C T.
The convex split runs with P = R B and Q = F = C T; Bob holds F_1..F_n, Alice
holds their purifications E_1..E_n, plus M (branch index) and S (purifier
of kappa) after her first isometry.

Two engines:
  channel   measurement of M expanded as the outcome mixture, only the
            registers that survive are kept per branch (default)
  coherent  the whole protocol as one pure state; the message is copied
            into a register J on Bob's side instead of measured.  Used by
            merge, which needs to run the steps backwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .convex_split import (
    DEFAULT_MEMORY_CAP,
    MemoryCapError,
    lemma_n,
    purification_branch,
    purification_factors,
    tau_array,
)
from .entropies import dmax_array, fidelity_array, smooth
from .linalg import (
    DensityOperator,
    IsometryMap,
    LayoutError,
    RegisterLayout,
    StateVector,
    hermitize,
    permute,
    permute_array,
    ptrace_array,
    svd,
    tensor,
)
from .qeps import (
    CONSTRAINT_TOL,
    MARGINAL_TOL,
    AchievingPoint,
    _ordered_kappa,
    _ordered_u,
    check_point,
    psi_tensor,
    qeps_upper,
    trivial_point,
)

COHERENT_CAP = 2**22
TRACE_TOL = 1e-10
BALL_TOL = 1e-6
MERGE_MEMORY_CAP = 2**8  # keeps the coherent run of the split under COHERENT_CAP
TRANSCRIPT_CSV_HEADER = ["input_id", "eps", "n", "comm_qubits", "operational_qubits",
                         "out_fidelity_sq", "in_ball"]


class ConstraintError(ValueError):
    pass


def cost_constant(eps: float) -> float:
    """Explicit stand-in for the unspecified O(log 1/eps) term."""
    return 2.0 * math.log2(1.0 / eps) + 4.0


def superdense_cost(n: int) -> tuple[float, int, int]:
    """(log2(n)/2, qubits actually sent, Bell pairs consumed) for a message j in [n]."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    if n == 1:
        return 0.0, 0, 0
    bits = (n - 1).bit_length()  # ceil(log2 n)
    q = (bits + 1) // 2
    return math.log2(n) / 2.0, q, q


# --- Uhlmann ---------------------------------------------------------------

def uhlmann_matrix(x_target: np.ndarray, x_source: np.ndarray) -> tuple[np.ndarray, float]:
    """Isometry V on the purifying index with x_source V^T closest to x_target.

    Rows index the shared system, columns the purifiers.  Returns V of shape
    (target columns, source columns) and the achieved overlap.
    """
    ct, cs = x_target.shape[1], x_source.shape[1]
    if ct < cs:
        raise LayoutError(f"target purifier dimension {ct} < source {cs}; pad the target first")
    w, s, zh = svd(x_target.conj().T @ x_source)
    return np.conj(w @ zh), float(s.sum())


def _split_fixed(state: StateVector, fixed) -> tuple[np.ndarray, RegisterLayout, RegisterLayout]:
    fixed = list(fixed)
    rest = [lab for lab in state.layout.labels if lab not in fixed]
    p = permute(state, fixed + rest)
    fl = p.layout.subset(fixed)
    rl = p.layout.subset(rest)
    return p.amplitudes.reshape(fl.total_dim, rl.total_dim), fl, rl


def uhlmann_isometry(pur1: StateVector, pur2: StateVector, fixed) -> IsometryMap:
    """Isometry on the complement of ``fixed`` taking pur2 as close as possible to pur1."""
    fixed = list(fixed)
    for lab in fixed:
        if lab not in pur1.layout.labels or lab not in pur2.layout.labels:
            raise LayoutError(f"fixed register {lab!r} missing from one of the states")
        if pur1.layout.dim_of(lab) != pur2.layout.dim_of(lab):
            raise LayoutError(f"fixed register {lab!r} has different dimensions")
    x1, _, rest1 = _split_fixed(pur1, fixed)
    x2, _, rest2 = _split_fixed(pur2, fixed)
    v, _ = uhlmann_matrix(x1, x2)
    return IsometryMap(rest2, rest1, v)


def pure_close_extension(psi_a: StateVector, rho_ab: DensityOperator) -> DensityOperator:
    """theta_B with F(psi ⊗ theta_B, rho_AB) >= F(psi_A, rho_A)."""
    a_labels = list(psi_a.layout.labels)
    b_labels = [lab for lab in rho_ab.layout.labels if lab not in a_labels]
    if not b_labels:
        raise LayoutError("rho_ab needs registers outside psi_a")
    for lab in a_labels:
        if rho_ab.layout.dim_of(lab) != psi_a.layout.dim_of(lab):
            raise LayoutError(f"register {lab!r} has different dimensions")
    rho = permute(rho_ab, a_labels + b_labels)
    da = psi_a.layout.total_dim
    db = rho.layout.total_dim // da
    w, v = np.linalg.eigh(hermitize(rho.matrix))
    w = np.clip(w, 0, None)
    pur = (v * np.sqrt(w)).reshape(da, db * v.shape[1])  # rows A, cols (B, purifier)
    source = np.zeros((da, db * v.shape[1]), dtype=complex)
    source[:, 0] = psi_a.amplitudes
    vmat, _ = uhlmann_matrix(pur, source)
    phi = vmat[:, 0].reshape(db, -1)
    theta = hermitize(phi @ phi.conj().T)
    lay = rho.layout.subset(b_labels)
    return DensityOperator(lay, theta / np.trace(theta).real)


# --- inputs and transcripts --------------------------------------------------

@dataclass(frozen=True)
class RedistributionInput:
    psi: StateVector
    eps: float
    achieving_point: AchievingPoint | None = None
    n_override: int | None = None
    n_policy: str = "auto"  # "auto" or "lemma"; ignored when n_override is set

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0 / 3.0:
            raise ValueError(f"eps must lie in (0, 1/3), got {self.eps}")
        psi_tensor(self.psi)
        if self.n_override is not None:
            if isinstance(self.n_override, bool) or int(self.n_override) != self.n_override \
                    or self.n_override < 1:
                raise ValueError(f"n_override must be a positive integer, got {self.n_override}")
        if self.n_policy not in ("auto", "lemma"):
            raise ValueError(f"n_policy must be 'auto' or 'lemma', got {self.n_policy!r}")
        if self.achieving_point is not None:
            dist, rb_err = check_point(self.psi, self.achieving_point)
            if dist > self.eps + CONSTRAINT_TOL:
                raise ConstraintError(
                    f"achieving point violates the ball constraint: distance {dist:.3g} > eps {self.eps}")
            if rb_err > MARGINAL_TOL:
                raise ConstraintError(f"achieving point changes the RB marginal by {rb_err:.3g}")


@dataclass(frozen=True)
class ProtocolTranscript:
    steps: list[tuple[str, str, tuple[str, ...]]]
    n: int
    n_source: str
    k: float
    eps: float
    comm_qubits: float
    comm_qubits_operational: int
    bell_pairs: int
    entanglement_dims: dict[str, int]
    output: DensityOperator
    output_fidelity_sq: float
    in_ball_2eps: bool
    in_ball_3eps: bool
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def output_distance(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.output_fidelity_sq))

    def csv_row(self, input_id: str) -> dict[str, Any]:
        return {
            "input_id": input_id,
            "eps": self.eps,
            "n": self.n,
            "comm_qubits": self.comm_qubits,
            "operational_qubits": self.comm_qubits_operational,
            "out_fidelity_sq": self.output_fidelity_sq,
            "in_ball": self.in_ball_2eps,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "steps": [{"name": s, "party": p, "registers": list(r)} for s, p, r in self.steps],
            "n": self.n,
            "n_source": self.n_source,
            "k": self.k,
            "eps": self.eps,
            "comm_qubits": self.comm_qubits,
            "comm_qubits_operational": self.comm_qubits_operational,
            "bell_pairs": self.bell_pairs,
            "entanglement_dims": dict(self.entanglement_dims),
            "output_fidelity_sq": self.output_fidelity_sq,
            "output_distance": self.output_distance,
            "in_ball_2eps": self.in_ball_2eps,
            "in_ball_3eps": self.in_ball_3eps,
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


# --- shared setup --------------------------------------------------------------

class _Setup:
    """Everything about (Psi, achieving point) that does not depend on n."""

    def __init__(self, psi: StateVector, point: AchievingPoint):
        amp = psi_tensor(psi)
        r, a, b, c = amp.shape
        t = point.t_dim
        self.amp = amp
        self.r, self.a, self.b, self.c, self.t = r, a, b, c, t
        self.dp, self.dq = r * b, c * t
        self.kappa = _ordered_kappa(point)
        self.u = _ordered_u(point)
        self.sp = point.sigma_prime.matrix
        kap_rb = ptrace_array(self.kappa, [self.dp, self.dq], [0])
        sig = point.sigma_ct
        if sig is None:
            from .entropies import imax_array
            _, y, _, _ = imax_array(self.kappa, self.dp, self.dq)
            sig = y / np.trace(y).real
        self.sigma_ct = hermitize(sig)
        self.k = max(0.0, dmax_array(self.kappa, np.kron(kap_rb, self.sigma_ct)))
        self.psi_rb_ac = amp.transpose(0, 2, 1, 3).reshape(self.dp, a * c)
        self.psi_rbc_a = amp.transpose(0, 2, 3, 1).reshape(r * b * c, a)
        self.kap_f, self.spur = purification_factors(self.kappa, self.sigma_ct, self.dp, self.dq)
        self.v_final, self.l_v, self.f_final = self._final_isometry()
        self.ideal, self.d_ideal = self._ideal()

    def _final_isometry(self):
        """Alice's last step: purification of (I ⊗ U) kappa on S E to Psi ⊗ sigma' on A T' L."""
        dp, dq, a, t = self.dp, self.dq, self.a, self.t
        kapm = self.kap_f.reshape(dp * dq, dp * dq)
        src = np.kron(np.eye(self.r), self.u) @ kapm
        w, v = np.linalg.eigh(hermitize(self.sp))
        spm = v * np.sqrt(np.clip(w, 0, None))
        tgt = np.kron(self.psi_rbc_a, spm)
        l_v = max(1, -(-dp * dq // (a * t)))
        pad = np.zeros((1, l_v))
        pad[0, 0] = 1.0
        vmat, f = uhlmann_matrix(np.kron(tgt, pad), src)
        return vmat, l_v, f

    def local_ops(self) -> np.ndarray:
        """Bob's U on B F_1 and Alice's V on S E_1, as one operator on (R, B, C, T, S, E)."""
        return np.kron(np.kron(np.eye(self.r), self.u), self.v_final)

    def finish(self, omega: np.ndarray) -> np.ndarray:
        """Apply U and V to a state on (R, B, C, T, S, E); return the state on R, A, B, C."""
        k = self.local_ops()
        out = k @ omega @ k.conj().T
        r, b, c, t, a, l_v = self.r, self.b, self.c, self.t, self.a, self.l_v
        red = ptrace_array(out, [r, b, c, t, a, t * l_v], [0, 1, 2, 4])
        return hermitize(permute_array(red, [r, b, c, a], [0, 3, 1, 2]))

    def psi_density(self) -> np.ndarray:
        v = self.amp.reshape(-1)
        return np.outer(v, v.conj())

    def _ideal(self):
        """Output when Alice's first isometry lands exactly on mu: U and V applied to kappa."""
        v = self.kap_f.reshape(-1)
        out = self.finish(np.outer(v, v.conj()))
        return out, _distance(out, self.psi_density())


class _SplitData:
    """Convex split of (kappa, sigma_CT) at a given n and the Uhlmann map onto it."""

    def __init__(self, st: _Setup, n: int):
        self.n = n
        dp, dq = st.dp, st.dq
        d = dp * dq**n
        self.d = d
        tau = tau_array(st.kappa, st.sigma_ct, dp, dq, n)
        w1, u1 = np.linalg.eigh(tau)
        keep = w1 > 1e-14 * max(1.0, w1[-1])
        w1, u1 = w1[keep], u1[:, keep]
        tau_f = ptrace_array(tau, [dp, dq**n], [1])
        wf, vf = np.linalg.eigh(hermitize(tau_f))
        kf = wf > 1e-14
        theta = vf[:, kf] * np.sqrt(wf[kf])  # F^n x purifier
        uu, ss, _ = svd(st.psi_rb_ac)
        kp = ss > 1e-12
        a2 = np.kron(uu[:, kp] * ss[kp], theta)  # rows (R B, F^n)
        a1 = u1 * np.sqrt(w1)
        w, s, zh = svd(a1.conj().T @ a2)
        self.fidelity = float(min(1.0, s.sum()))
        # xi' = bmat @ mu branch by branch; components outside the support of mu go to junk
        self.bmat = (a2 @ zh.conj().T @ w.conj().T / np.sqrt(w1)) @ u1.conj().T
        resid = a2 - a2 @ zh.conj().T @ zh
        self.junk = resid if np.linalg.norm(resid) > 1e-12 else None
        self.distance = math.sqrt(max(0.0, 1.0 - self.fidelity**2))
        # triangle bound on the final distance to Psi
        self.certified = self.distance + st.d_ideal

    @property
    def f2(self) -> float:
        return self.fidelity**2


def _n_max(st: _Setup, cap: int) -> int:
    n = 1
    while st.dp * st.dq ** (n + 1) <= cap:
        n += 1
    return n


def decoupled(st: _Setup, eps: float) -> bool:
    """Detector for the no-communication regime: k <= eps^2 / 2."""
    return st.k <= eps * eps / 2


def choose_n(st: _Setup, eps: float, n_override=None, n_policy="auto",
             memory_cap: int = DEFAULT_MEMORY_CAP) -> tuple[int, str, _SplitData]:
    """Number of convex-split copies.

    auto: smallest n whose certified bound (closeness of the split plus the
    distance of the ideal output) is within 2 eps, else the largest n under
    the memory cap.  lemma: the lemma's own formula, which usually exceeds
    the cap.
    """
    if decoupled(st, eps):
        return 1, "decoupled", _SplitData(st, 1)
    if n_override is not None:
        n, source = int(n_override), "override"
    elif n_policy == "lemma":
        n, source = lemma_n(st.k, eps * eps / 4), "lemma"
    else:
        sd = None
        for n in range(1, _n_max(st, memory_cap) + 1):
            sd = _SplitData(st, n)
            if sd.certified <= 2 * eps:
                break
        return sd.n, "auto", sd
    if st.dp * st.dq**n > memory_cap:
        raise MemoryCapError(
            f"n = {n} needs dimension {st.dp * st.dq**n} > cap {memory_cap}; "
            "lower n with n_override or raise the cap")
    return n, source, _SplitData(st, n)


# --- channel engine -------------------------------------------------------------

def _mu_branch(st: _Setup, n: int, j: int) -> np.ndarray:
    """Branch j of the purification of tau as a (P F^n) x (S E^n) matrix."""
    br = purification_branch(st.kap_f, st.spur, n, j)
    d = st.dp * st.dq**n
    axes = list(range(n + 1, 2 * n + 2)) + list(range(0, n + 1))
    return br.transpose(axes).reshape(d, d) / math.sqrt(n)


def _keep_branch(x: np.ndarray, st: _Setup, n: int, j: int) -> np.ndarray:
    """Reduce a (P F^n) x (S E^n) vector to P F_j S E_j (F_j and E_j play F_1, E_1 after the swaps)."""
    dp, dq = st.dp, st.dq
    t = x.reshape([dp] + [dq] * n + [dp] + [dq] * n)
    src = [0, j, n + 1, n + 1 + j]
    t = np.moveaxis(t, src, [0, 1, 2, 3]).reshape(dp * dq * dp * dq, -1)
    return t @ t.conj().T


def _channel(st: _Setup, sd: _SplitData, mode: str, rng):
    """State on (R, B, C, T, S, E) after Alice's isometry, the measurement and the swaps.

    Every branch leaves the same state after the swaps (tau, mu and the
    Uhlmann map are symmetric under permuting the copies), so the channel
    mode evaluates branch 1 and scales it; the sample mode draws j and
    evaluates that branch.
    """
    n = sd.n
    junk = None
    if sd.junk is not None:
        pad = np.zeros((sd.d, sd.d), dtype=complex)
        pad[:, : sd.junk.shape[1]] = sd.junk
        junk = _keep_branch(pad, st, n, 1)  # the junk sector is read as outcome 1
    junk_w = float(np.trace(junk).real) if junk is not None else 0.0
    b1 = _keep_branch(sd.bmat @ _mu_branch(st, n, 1), st, n, 1)
    w1 = float(np.trace(b1).real)
    weights = [w1] * n
    weights[0] += junk_w
    if mode == "sample":
        j = int(rng.choice(n, p=np.array(weights) / sum(weights))) + 1
        bj = b1 if j == 1 else _keep_branch(sd.bmat @ _mu_branch(st, n, j), st, n, j)
        if j == 1 and junk is not None:
            bj = bj + junk
        omega = bj / np.trace(bj).real
    else:
        omega = n * b1 + (junk if junk is not None else 0)
    return omega, weights, junk_w


def _steps(n: int) -> list[tuple[str, str, tuple[str, ...]]]:
    fs = tuple(f"F{i}" for i in range(1, n + 1))
    es = tuple(f"E{i}" for i in range(1, n + 1))
    steps = [
        ("share entanglement theta", "Alice,Bob", fs + es),
        ("isometry V' onto M S E", "Alice", ("A", "C") + es + ("M", "S")),
    ]
    if n > 1:
        steps += [
            ("measure M, outcome j", "Alice", ("M",)),
            ("send j by superdense coding", "Alice->Bob", ("M",)),
            ("swap E_j and E_1", "Alice", es),
            ("swap F_j and F_1", "Bob", fs),
        ]
    steps += [
        ("unitary U on B F_1", "Bob", ("B", "F1")),
        ("isometry V from S E_1 onto A T'", "Alice", ("S", "E1", "A", "T'")),
        ("discard T, T' and unused copies", "Alice,Bob", ("T", "T'") + fs[1:] + es[1:]),
    ]
    return steps


def _transcript(st: _Setup, eps: float, n: int, source: str, out: np.ndarray,
                steps, ent_dims, diag) -> ProtocolTranscript:
    tr = float(np.trace(out).real)
    out = hermitize(out / tr)
    f2 = float(np.real(st.amp.reshape(-1).conj() @ out @ st.amp.reshape(-1)))
    f2 = min(max(f2, 0.0), 1.0)
    dist = math.sqrt(max(0.0, 1.0 - f2))
    real, op, bell = superdense_cost(n)
    lay = RegisterLayout.of(["R", "A", "B", "C"], [st.r, st.a, st.b, st.c])
    return ProtocolTranscript(
        steps=steps,
        n=n,
        n_source=source,
        k=st.k,
        eps=eps,
        comm_qubits=real,
        comm_qubits_operational=op,
        bell_pairs=bell,
        entanglement_dims=ent_dims,
        output=DensityOperator(lay, out),
        output_fidelity_sq=f2,
        in_ball_2eps=dist <= 2 * eps + BALL_TOL,
        in_ball_3eps=dist <= 3 * eps + BALL_TOL,
        diagnostics=diag,
    )


def _distance(a: np.ndarray, b: np.ndarray) -> float:
    f = fidelity_array(a, b)
    return math.sqrt(max(0.0, 1.0 - f * f))


def candidate_points(psi: StateVector, eps: float, t_dim: int = 1, restarts: int = 1,
                     iterations: int = 100, seed: int = 0) -> list[AchievingPoint]:
    """The optimizer's best point and the exact point (T in |0>, U = I, kappa = Psi ⊗ |0><0|)."""
    est = qeps_upper(psi, eps, t_dim=t_dim, restarts=restarts, iterations=iterations,
                     seed=seed, with_lower=False)
    return [est.feasible_point, trivial_point(psi, t_dim)]


def _select(psi, points, eps, n_override, n_policy, memory_cap):
    """Pick the point with the smallest certified bound; the decoupled regime wins outright."""
    best = None
    for idx, pt in enumerate(points):
        st = _Setup(psi, pt)
        n, source, sd = choose_n(st, eps, n_override, n_policy, memory_cap)
        key = (0 if source == "decoupled" else 1, sd.certified > 2 * eps, n, sd.certified)
        if best is None or key < best[0]:
            best = (key, idx, st, n, source, sd)
        if source == "decoupled":
            break
    return best[1:]


def redistribute(inp: RedistributionInput, mode: str = "channel", seed: int = 0,
                 memory_cap: int = DEFAULT_MEMORY_CAP, t_dim: int = 1,
                 search_restarts: int = 1, search_iterations: int = 100) -> ProtocolTranscript:
    """Run the redistribution protocol and account for its communication.

    mode is "channel" (exact outcome mixture), "sample" (outcome drawn from
    the Born weights with ``seed``) or "coherent" (global pure-state
    simulation, small n only).  Without an achieving point the optimizer is
    run and its point is compared with the exact trivial point by the
    certified bound at the chosen n.
    """
    if mode not in ("channel", "sample", "coherent"):
        raise ValueError(f"unknown mode {mode!r}")
    if inp.achieving_point is not None:
        points = [inp.achieving_point]
    else:
        points = candidate_points(inp.psi, inp.eps, t_dim, search_restarts, search_iterations, seed)
        for pt in points:
            dist, rb_err = check_point(inp.psi, pt)
            if dist > inp.eps + CONSTRAINT_TOL or rb_err > MARGINAL_TOL:
                raise ConstraintError("optimizer returned a point outside the constraints")
    chosen, st, n, source, sd = _select(inp.psi, points, inp.eps, inp.n_override, inp.n_policy,
                                        memory_cap)
    if mode == "coherent":
        run = coherent_run(st, sd)
        out = run.output
        traces = run.traces
        weights, junk_w = [], 0.0
    else:
        rng = np.random.default_rng(seed)
        omega, weights, junk_w = _channel(st, sd, mode, rng)
        traces = {"after V'": sum(weights), "after measurement": float(np.trace(omega).real)}
        out = st.finish(omega)
        traces["after U and V"] = float(np.trace(out).real)
    if mode == "sample":
        traces = {k: v for k, v in traces.items() if k != "after V'"}
    outn = out / np.trace(out).real
    d_phi_psi = _distance(outn, st.psi_density())
    d_phi_phi1 = _distance(outn, st.ideal)
    f2_phi_phi1 = 1.0 - d_phi_phi1**2
    closeness = sd.f2 >= 1 - inp.eps**2
    diag: dict[str, Any] = {
        "point": ["optimizer", "trivial"][chosen] if inp.achieving_point is None else "given",
        "f2_xi_mu": sd.f2,
        "closeness_met": bool(closeness),
        "certified_distance": sd.certified,
        "distance_output_ideal": d_phi_phi1,
        "distance_ideal_target": st.d_ideal,
        "f2_output_ideal": f2_phi_phi1,
        "wrapper_ok": (not closeness) or f2_phi_phi1 >= 1 - inp.eps**2 - BALL_TOL,
        "triangle_ok": d_phi_psi <= d_phi_phi1 + st.d_ideal + 1e-8,
        "final_isometry_fidelity": st.f_final,
        "step_traces": traces,
        "trace_ok": all(abs(v - 1.0) <= TRACE_TOL for v in traces.values()),
        "branch_weights": weights,
        "junk_weight": junk_w,
        "t_dim": st.t,
        "mode": mode,
        "seed": seed,
    }
    _, _, bell = superdense_cost(n)
    ent = {"theta_F": st.dq**n, "theta_E": st.dq**n, "bell_pairs": bell}
    return _transcript(st, inp.eps, n, source, out, _steps(n), ent, diag)


# --- coherent engine --------------------------------------------------------------

@dataclass
class CoherentRun:
    """Global pure state after every protocol step and the isometries used."""
    output: np.ndarray
    final: np.ndarray  # axes (R, B, C, T, F_2..F_n, J, L', M, A, T'L, E_2..E_n)
    initial: np.ndarray  # (R B F^n) x (A C E'^n)
    v_prime: np.ndarray
    l_prime: int
    traces: dict[str, float]
    n: int


def _coherent_size(st: _Setup, n: int, l_prime: int) -> int:
    return (st.dp * st.dq**n * n) * (l_prime * n * st.dp * st.dq**n)


def _mu_full(st: _Setup, n: int) -> np.ndarray:
    """mu as (R B F^n) x (M S E^n)."""
    return np.concatenate([_mu_branch(st, n, j) for j in range(1, n + 1)], axis=1)


def coherent_run(st: _Setup, sd: _SplitData, cap: int = COHERENT_CAP) -> CoherentRun:
    n, dp, dq = sd.n, st.dp, st.dq
    d = sd.d
    ac = st.a * st.c
    l_prime = max(1, -(-ac // (n * dp)))
    if _coherent_size(st, n, l_prime) > cap:
        raise MemoryCapError(f"coherent simulation at n = {n} exceeds {cap} amplitudes; lower n with n_override or use mode 'channel'")
    wf, vf = np.linalg.eigh(hermitize(ptrace_array(tau_array(st.kappa, st.sigma_ct, dp, dq, n),
                                                     [dp, dq**n], [1])))
    theta = vf * np.sqrt(np.clip(wf, 0, None))
    init = np.kron(st.psi_rb_ac, theta)  # rows (R B, F^n), cols (A C, E'^n)
    mu = _mu_full(st, n)
    mu_pad = np.zeros((d, l_prime * n * d), dtype=complex)
    mu_pad[:, : n * d] = mu  # L' = 0 block first
    v_prime, _ = uhlmann_matrix(mu_pad, init)
    x = init @ v_prime.T  # cols (L', M, S, E^n)
    traces = {"after V'": float(np.vdot(x, x).real)}
    r, b, c, t = st.r, st.b, st.c, st.t
    g = x.reshape([r, b] + [dq] * n + [l_prime, n, dp] + [dq] * n)
    # copy M into J: axes (R, B, F_1..F_n, J, L', M, S, E_1..E_n)
    h = np.zeros([r, b] + [dq] * n + [n, l_prime, n, dp] + [dq] * n, dtype=complex)
    jax, max_ = 2 + n, 4 + n
    for m in range(n):
        idx = [slice(None)] * h.ndim
        idx[jax] = m
        idx[max_] = m
        src = [slice(None)] * g.ndim
        src[n + 3] = m  # g axes: R, B, F_1..F_n, L', M, ...
        h[tuple(idx)] = g[tuple(src)]
    traces["after copying M"] = float(np.vdot(h, h).real)
    h = _controlled_swaps(h, n)
    traces["after swaps"] = float(np.vdot(h, h).real)
    # U on (B, F_1)
    h = np.moveaxis(h, [1, 2], [0, 1])
    sh = h.shape
    h = (st.u.reshape(b * dq, b * dq) @ h.reshape(b * dq, -1)).reshape(sh)
    h = np.moveaxis(h, [0, 1], [1, 2])
    # V on (S, E_1) -> (A, T'L)
    s_ax = n + 5
    e1_ax = s_ax + 1
    h = np.moveaxis(h, [s_ax, e1_ax], [0, 1])
    sh = h.shape
    h = (st.v_final @ h.reshape(dp * dq, -1)).reshape((st.v_final.shape[0],) + sh[2:])
    h = np.moveaxis(h, 0, s_ax)  # now (R,B,F_1..F_n,J,L',M,AT'L,E_2..E_n)
    traces["after U and V"] = float(np.vdot(h, h).real)
    # split F_1 into C, T and A T'L into A, T'L
    shape = [r, b, c, t] + [dq] * (n - 1) + [n, l_prime, n, st.a, t * st.l_v] + [dq] * (n - 1)
    final = h.reshape(shape)
    a_ax = 4 + (n - 1) + 3
    keep = np.moveaxis(final, [0, a_ax, 1, 2], [0, 1, 2, 3])
    keep = keep.reshape(r * st.a * b * c, -1)
    out = hermitize(keep @ keep.conj().T)
    return CoherentRun(out, final, init, v_prime, l_prime, traces, n)


def _controlled_swaps(h: np.ndarray, n: int) -> np.ndarray:
    """Swap F_1 with F_J (Bob) and E_1 with E_M (Alice), each controlled by its own register.

    Axes: (R, B, F_1..F_n, J, L', M, S, E_1..E_n).  Self-inverse.
    """
    f1, jax = 2, 2 + n
    max_, e1 = 4 + n, 6 + n
    out = h.copy()
    for j in range(1, n):
        idx = [slice(None)] * h.ndim
        idx[jax] = j
        sub = out[tuple(idx)].copy()  # J axis removed; F axes unchanged
        out[tuple(idx)] = np.swapaxes(sub, f1, f1 + j)
    for m in range(1, n):
        idx = [slice(None)] * h.ndim
        idx[max_] = m
        sub = out[tuple(idx)].copy()  # M axis removed: E_1 shifts left by one
        out[tuple(idx)] = np.swapaxes(sub, e1 - 1, e1 - 1 + m)
    return out


def _reverse(st: _Setup, run: CoherentRun, start: np.ndarray) -> np.ndarray:
    """Apply the adjoints of the coherent steps in reverse order; returns an (R B F^n) x (A C E'^n) matrix."""
    n, dp, dq = run.n, st.dp, st.dq
    r, b, c, t, l_prime = st.r, st.b, st.c, st.t, run.l_prime
    h = start.reshape([r, b, c * t] + [dq] * (n - 1) + [n, l_prime, n, st.a * t * st.l_v]
                      + [dq] * (n - 1))
    s_ax = 3 + n + 2
    h = np.moveaxis(h, s_ax, 0)
    sh = h.shape
    h = (st.v_final.conj().T @ h.reshape(sh[0], -1)).reshape((dp, dq) + sh[1:])
    h = np.moveaxis(h, [0, 1], [s_ax, s_ax + 1])
    h = np.moveaxis(h, [1, 2], [0, 1])
    sh = h.shape
    h = (st.u.conj().T @ h.reshape(b * dq, -1)).reshape(sh)
    h = np.moveaxis(h, [0, 1], [1, 2])
    h = _controlled_swaps(h, n)
    jax, max_ = 2 + n, 4 + n
    # adjoint of the copy: keep J = M and drop J
    g = np.zeros([r, b] + [dq] * n + [l_prime, n, dp] + [dq] * n, dtype=complex)
    for m in range(n):
        idx = [slice(None)] * h.ndim
        idx[jax] = m
        idx[max_] = m
        sub = h[tuple(idx)]
        gi = [slice(None)] * g.ndim
        gi[3 + n] = m
        g[tuple(gi)] = sub
    x = g.reshape(st.dp * st.dq**n, -1)
    return x @ run.v_prime.conj()


# --- splitting and merging -----------------------------------------------------------

def _add_trivial_b(psi: StateVector) -> StateVector:
    labels = set(psi.layout.labels)
    if labels != {"R", "A", "C"}:
        raise LayoutError(f"expected registers R, A, C; got {sorted(labels)}")
    return tensor(psi, StateVector(RegisterLayout.of(["B"], [1]), np.ones(1, dtype=complex)))


def split_budget(psi: StateVector, eps: float, smooth_restarts: int = 2,
                 smooth_iterations: int = 100, seed: int = 0) -> dict[str, float]:
    """Cost budget 1/2 Imax^eps(R:C) + loglog((4/eps^2) Imax^eps) + 2 log(1/eps) + 4."""
    rc = psi.to_density()
    from .linalg import partial_trace
    rc = partial_trace(rc, ["R", "C"])
    sm = smooth("imax", rc, (["R"], ["C"]), eps, restarts=smooth_restarts,
                iterations=smooth_iterations, seed=seed)
    i_eps = max(0.0, sm.value)
    x = 4.0 / eps**2 * i_eps
    loglog = math.log2(math.log2(x)) if x > 2 else 0.0
    const = cost_constant(eps)
    return {"smooth_imax": i_eps, "loglog": loglog, "constant": const,
            "budget": 0.5 * i_eps + loglog + const}


def split(psi: StateVector, eps: float, seed: int = 0, n_override: int | None = None,
          mode: str = "channel", budget: bool = True, memory_cap: int = DEFAULT_MEMORY_CAP,
          **kwargs) -> ProtocolTranscript:
    """Redistribution with B trivial: Alice holding A C hands C to Bob."""
    full = _add_trivial_b(psi)
    inp = RedistributionInput(full, eps, n_override=n_override)
    tr = redistribute(inp, mode=mode, seed=seed, memory_cap=memory_cap, **kwargs)
    if budget:
        b = split_budget(psi, eps, seed=seed)
        tr.diagnostics["budget"] = b
        tr.diagnostics["within_budget"] = tr.comm_qubits <= b["budget"] + 1e-9
    return tr


@dataclass(frozen=True)
class MergeReport:
    transcript: ProtocolTranscript  # communication and the reduced output on R, B, C
    split_fidelity_sq: float
    global_fidelity_sq: float
    success_weight: float
    in_ball_3eps: bool


def merge(psi: StateVector, eps: float, seed: int = 0, n_override: int | None = None,
          memory_cap: int = MERGE_MEMORY_CAP, t_dim: int = 1, search_restarts: int = 1,
          search_iterations: int = 100) -> MergeReport:
    """Merge C into Bob's B by running splitting backwards.

    The input on R, B, C is read as a splitting instance with Bob's B in the
    role of Alice's leftover A.  The split is run coherently; the leftover
    resource state is what remains after projecting its final global state on
    Psi.  Starting from Psi ⊗ that resource, the adjoints of the splitting
    steps are applied in reverse order.
    """
    if set(psi.layout.labels) != {"R", "B", "C"}:
        raise LayoutError(f"expected registers R, B, C; got {sorted(psi.layout.labels)}")
    from .linalg import relabel
    as_split = _add_trivial_b(relabel(psi, {"B": "A"}))
    inp = RedistributionInput(as_split, eps, n_override=n_override)
    points = candidate_points(as_split, eps, t_dim, search_restarts, search_iterations, seed)
    _, st, n, source, sd = _select(as_split, points, eps, n_override, inp.n_policy, memory_cap)
    closeness = sd.f2 >= 1 - eps**2
    run = coherent_run(st, sd)
    psi_vec = st.amp.reshape(-1)
    r, a, b, c = st.r, st.a, st.b, st.c
    fin = run.final
    n_ax = fin.ndim
    a_ax = 4 + (n - 1) + 3
    moved = np.moveaxis(fin, [0, a_ax, 1, 2], [0, 1, 2, 3])
    rest_shape = moved.shape[4:]
    moved = moved.reshape(r * a * b * c, -1)
    resource = psi_vec.conj() @ moved
    split_f2 = float(np.vdot(resource, resource).real)
    norm = math.sqrt(split_f2)
    if norm < 1e-12:
        raise ValueError("split output is orthogonal to the input; no resource state to reverse")
    resource = resource / norm
    start = np.multiply.outer(psi_vec.reshape(r, a, b, c), resource.reshape(rest_shape))
    start = np.moveaxis(start, [0, 1, 2, 3], [0, a_ax, 1, 2])
    back = _reverse(st, run, start)
    weight = float(np.vdot(back, back).real)
    global_f2 = float(abs(np.vdot(run.initial.reshape(-1), back.reshape(-1))) ** 2)
    # reduced output on R, A(=B), C; missing weight goes to a fixed |0> state
    t = back.reshape(r, b, st.dq**n, a, c, -1)
    t = np.moveaxis(t, [0, 3, 1, 4], [0, 1, 2, 3]).reshape(r * a * b * c, -1)
    out = t @ t.conj().T
    out[0, 0] += max(0.0, 1.0 - weight)
    out = hermitize(out)
    f2 = float(np.real(psi_vec.conj() @ out @ psi_vec))
    lay = RegisterLayout.of(["R", "B", "C"], [r, a, c])
    out_rbc = DensityOperator(lay, out.reshape(r * a * c, r * a * c) / np.trace(out).real)
    real, op, bell = superdense_cost(n)
    dist = math.sqrt(max(0.0, 1.0 - f2))
    steps = [(f"inverse of: {s}", p, regs) for s, p, regs in reversed(_steps(n))]
    tr = ProtocolTranscript(
        steps=steps, n=n, n_source=source, k=st.k, eps=eps, comm_qubits=real,
        comm_qubits_operational=op, bell_pairs=bell,
        entanglement_dims={"resource": int(resource.size), "bell_pairs": bell},
        output=out_rbc, output_fidelity_sq=f2, in_ball_2eps=dist <= 2 * eps + BALL_TOL,
        in_ball_3eps=dist <= 3 * eps + BALL_TOL,
        diagnostics={"success_weight": weight, "global_fidelity_sq": global_f2,
                     "split_fidelity_sq": split_f2, "closeness_met": bool(closeness),
                     "step_traces": run.traces, "seed": seed},
    )
    return MergeReport(tr, split_f2, global_f2, weight,
                       global_f2 >= 1 - (3 * eps) ** 2 - BALL_TOL)
