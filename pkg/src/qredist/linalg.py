"""Dense complex linear algebra over labelled multipartite registers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

TOL_HERM = 1e-10
TOL_PSD = 1e-9
TOL_TRACE = 1e-9
TOL_NORM = 1e-10
TOL_ISOMETRY = 1e-9
RANK_TOL = 1e-10


class LayoutError(ValueError):
    """Raised when register labels or dimensions do not line up."""


class InvalidStateError(ValueError):
    """Raised when a matrix or vector violates a state invariant."""


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered list of (label, dim) pairs."""

    entries: tuple[tuple[str, int], ...]

    def __post_init__(self):
        entries = tuple((str(lab), int(d)) for lab, d in self.entries)
        object.__setattr__(self, "entries", entries)
        labels = [lab for lab, _ in entries]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate labels in layout: {labels}")
        for lab, d in entries:
            if d < 1:
                raise LayoutError(f"register {lab!r} has dimension {d}")

    @classmethod
    def of(cls, labels: Sequence[str], dims: Sequence[int]) -> RegisterLayout:
        if len(labels) != len(dims):
            raise LayoutError("labels and dims differ in length")
        return cls(tuple(zip(labels, dims)))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.entries)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.entries)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.entries else 1

    def __len__(self):
        return len(self.entries)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown label {label!r}; layout has {list(self.labels)}") from None

    def dim_of(self, labels: str | Iterable[str]) -> int:
        if isinstance(labels, str):
            labels = [labels]
        return int(np.prod([self.dims[self.index(lab)] for lab in labels], dtype=np.int64))

    def concat(self, other: RegisterLayout) -> RegisterLayout:
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LayoutError(f"label collision: {sorted(clash)}")
        return RegisterLayout(self.entries + other.entries)

    def subset(self, labels: Iterable[str]) -> RegisterLayout:
        """Sub-layout keeping the given labels in this layout's order."""
        keep = set(labels)
        for lab in keep:
            self.index(lab)
        return RegisterLayout(tuple(e for e in self.entries if e[0] in keep))

    def reordered(self, labels: Sequence[str]) -> RegisterLayout:
        return RegisterLayout(tuple((lab, self.dims[self.index(lab)]) for lab in labels))

    def relabel(self, mapping: dict[str, str]) -> RegisterLayout:
        return RegisterLayout(tuple((mapping.get(lab, lab), d) for lab, d in self.entries))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DensityOperator:
    layout: RegisterLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.layout.total_dim
        if m.shape != (d, d):
            raise LayoutError(f"matrix shape {m.shape} does not match layout dimension {d}")
        object.__setattr__(self, "matrix", m)
        check_density(m)

    @property
    def labels(self):
        return self.layout.labels

    @property
    def dims(self):
        return self.layout.dims


@dataclass(frozen=True)
class StateVector:
    layout: RegisterLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _frozen(np.ravel(self.amplitudes))
        if v.shape != (self.layout.total_dim,):
            raise LayoutError(f"vector length {v.size} does not match layout dimension {self.layout.total_dim}")
        object.__setattr__(self, "amplitudes", v)
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > TOL_NORM:
            raise InvalidStateError(f"state vector norm {float(norm):.12g} differs from 1 by more than {TOL_NORM}")

    @property
    def labels(self):
        return self.layout.labels

    @property
    def dims(self):
        return self.layout.dims

    def to_density(self) -> DensityOperator:
        v = self.amplitudes
        return DensityOperator(self.layout, np.outer(v, v.conj()))


@dataclass(frozen=True)
class IsometryMap:
    input_layout: RegisterLayout
    output_layout: RegisterLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        din, dout = self.input_layout.total_dim, self.output_layout.total_dim
        if m.shape != (dout, din):
            raise LayoutError(f"isometry shape {m.shape} does not match layouts ({dout}, {din})")
        if dout < din:
            raise LayoutError(f"isometry output dimension {dout} below input dimension {din}")
        err = np.max(np.abs(m.conj().T @ m - np.eye(din))) if din else 0.0
        if err > TOL_ISOMETRY:
            raise InvalidStateError(f"M^dagger M deviates from identity by {err:.3e}")
        object.__setattr__(self, "matrix", m)

    def adjoint_matrix(self) -> np.ndarray:
        return self.matrix.conj().T


def check_density(m: np.ndarray) -> None:
    """Raise InvalidStateError naming the first failing invariant."""
    herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if herm > TOL_HERM:
        raise InvalidStateError(f"not Hermitian: max |M - M^dagger| = {herm:.3e}")
    tr = np.trace(m).real
    if abs(tr - 1.0) > TOL_TRACE:
        raise InvalidStateError(f"trace {float(tr):.12g} differs from 1 by {abs(tr - 1):.3e}")
    lo = np.linalg.eigvalsh(hermitize(m))[0]
    if lo < -TOL_PSD:
        raise InvalidStateError(f"not positive semidefinite: min eigenvalue {lo:.3e}")


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


# --- array level helpers, shared by every module ---------------------------

def ptrace_array(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a dense operator, keeping axes ``keep`` in their original order."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    drop = [i for i in range(n) if i not in keep]
    t = np.asarray(mat).reshape(dims + dims)
    perm = keep + drop + [n + i for i in keep] + [n + i for i in drop]
    t = t.transpose(perm)
    dk = int(np.prod([dims[i] for i in keep], dtype=np.int64))
    dd = int(np.prod([dims[i] for i in drop], dtype=np.int64))
    t = t.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def reduce_vector(vec: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density operator of a (possibly subnormalized) pure vector."""
    dims = list(dims)
    keep = sorted(keep)
    drop = [i for i in range(len(dims)) if i not in keep]
    t = np.asarray(vec).reshape(dims).transpose(keep + drop)
    dk = int(np.prod([dims[i] for i in keep], dtype=np.int64))
    m = t.reshape(dk, -1)
    return m @ m.conj().T


def permute_array(mat: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of an operator; ``order[i]`` is the old axis placed at i."""
    dims = list(dims)
    n = len(dims)
    t = np.asarray(mat).reshape(dims + dims)
    t = t.transpose(list(order) + [n + i for i in order])
    d = int(np.prod(dims, dtype=np.int64))
    return t.reshape(d, d)


def apply_on_axes(vec: np.ndarray, dims: Sequence[int], axes: Sequence[int],
                  op: np.ndarray, out_dims: Sequence[int]) -> tuple[np.ndarray, list[int]]:
    """Apply ``op`` to the tensor factors ``axes`` of a vector.

    The output factors replace the acted-on ones at the position of the first of them.
    Returns the new flat vector and its dims.
    """
    dims = list(dims)
    axes = list(axes)
    rest = [i for i in range(len(dims)) if i not in axes]
    t = np.asarray(vec).reshape(dims).transpose(axes + rest)
    din = int(np.prod([dims[i] for i in axes], dtype=np.int64))
    t = op @ t.reshape(din, -1)
    pos = min(axes)
    before = [i for i in rest if i < pos]
    after = [i for i in rest if i > pos]
    new_dims = [dims[i] for i in before] + list(out_dims) + [dims[i] for i in after]
    t = t.reshape(list(out_dims) + [dims[i] for i in rest])
    k = len(out_dims)
    nb = len(before)
    perm = list(range(k, k + nb)) + list(range(k)) + list(range(k + nb, k + len(rest)))
    return t.transpose(perm).reshape(-1), new_dims


def svd(m: np.ndarray):
    """Thin SVD; falls back to the slower QR-iteration driver when divide and conquer fails."""
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(m))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def pinv_sqrtm_psd(m: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(m))
    inv = np.zeros_like(w)
    big = w > rank_tol
    inv[big] = 1.0 / np.sqrt(w[big])
    return (v * inv) @ v.conj().T


def _check_psd_input(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if herm > TOL_HERM:
        raise InvalidStateError(f"not Hermitian: max |M - M^dagger| = {herm:.3e}")
    lo = np.linalg.eigvalsh(hermitize(m))[0]
    if lo < -TOL_PSD:
        raise InvalidStateError(f"negative eigenvalue {lo:.3e}")
    return m


def mat_sqrt(m: np.ndarray) -> np.ndarray:
    """Principal square root of a PSD matrix."""
    return sqrtm_psd(_check_psd_input(m))


def mat_pinv_sqrt(m: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Inverse square root on the support; eigenvalues at or below ``rank_tol`` map to zero."""
    return pinv_sqrtm_psd(_check_psd_input(m), rank_tol)


def eig_hermitian(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with a fixed ordering and phase convention.

    Eigenvalues come back in descending order, ties keep the order LAPACK
    returned them in, and each eigenvector is rotated so its largest-magnitude
    entry (first one on ties) is real and positive.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if herm > TOL_HERM * max(1.0, np.max(np.abs(m))):
        raise InvalidStateError(f"not Hermitian: max |M - M^dagger| = {herm:.3e}")
    w, v = np.linalg.eigh(hermitize(m))
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    lead = np.argmax(np.abs(v), axis=0)
    ph = v[lead, np.arange(v.shape[1])]
    v = v * (np.abs(ph) / ph)
    return w, v


# --- typed operations -------------------------------------------------------

def tensor(a, b):
    """Kronecker product of two states of the same kind, layouts concatenated."""
    layout = a.layout.concat(b.layout)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(layout, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(layout, np.kron(a.matrix, b.matrix))
    raise TypeError("tensor needs two StateVector or two DensityOperator values")


def partial_trace(op, keep: Iterable[str]) -> DensityOperator:
    keep = list(keep)
    if not keep:
        raise LayoutError("keep set is empty")
    idx = [op.layout.index(lab) for lab in keep]
    if isinstance(op, StateVector):
        m = reduce_vector(op.amplitudes, op.dims, idx)
    else:
        m = ptrace_array(op.matrix, op.dims, idx)
    return DensityOperator(op.layout.subset(keep), m)


def permute(op, new_order: Sequence[str]):
    labels = list(new_order)
    if sorted(labels) != sorted(op.layout.labels) or len(set(labels)) != len(labels):
        raise LayoutError(f"{labels} is not a permutation of {list(op.layout.labels)}")
    order = [op.layout.index(lab) for lab in labels]
    layout = op.layout.reordered(labels)
    if isinstance(op, StateVector):
        v = op.amplitudes.reshape(op.dims).transpose(order).reshape(-1)
        return StateVector(layout, v)
    return DensityOperator(layout, permute_array(op.matrix, op.dims, order))


def relabel(op, mapping: dict[str, str]):
    layout = op.layout.relabel(mapping)
    if isinstance(op, StateVector):
        return StateVector(layout, op.amplitudes)
    return DensityOperator(layout, op.matrix)


def purify(rho: DensityOperator, anc_label: str) -> StateVector:
    """Canonical purification sum_i sqrt(l_i) |v_i>|i> with an ancilla as large as the system."""
    if anc_label in rho.layout:
        raise LayoutError(f"ancilla label {anc_label!r} already in use")
    d = rho.layout.total_dim
    w, v = eig_hermitian(rho.matrix)
    amp = v * np.sqrt(np.clip(w, 0.0, None))
    layout = rho.layout.concat(RegisterLayout(((anc_label, d),)))
    vec = amp.reshape(-1)
    return StateVector(layout, vec / np.linalg.norm(vec))


def apply_isometry(v: IsometryMap, s, on: Sequence[str] | None = None):
    """Apply ``v`` to the registers ``on`` (default: the isometry's input labels).

    ``on`` may name different labels than the isometry's input layout as long
    as the dimensions agree; the outputs take the isometry's output labels and
    sit where the first acted-on register was.
    """
    on = list(on) if on is not None else list(v.input_layout.labels)
    dims_on = [s.layout.dims[s.layout.index(lab)] for lab in on]
    if tuple(dims_on) != v.input_layout.dims:
        raise LayoutError(f"isometry expects dims {v.input_layout.dims} on {on}, got {tuple(dims_on)}")
    axes = [s.layout.index(lab) for lab in on]
    rest = [lab for lab in s.layout.labels if lab not in on]
    pos = min(axes)
    out_entries = list(v.output_layout.entries)
    clash = set(v.output_layout.labels) & set(rest)
    if clash:
        raise LayoutError(f"output labels collide with untouched registers: {sorted(clash)}")
    before = [e for e in s.layout.entries if e[0] in rest and s.layout.index(e[0]) < pos]
    after = [e for e in s.layout.entries if e[0] in rest and s.layout.index(e[0]) > pos]
    layout = RegisterLayout(tuple(before + out_entries + after))
    if isinstance(s, StateVector):
        vec, _ = apply_on_axes(s.amplitudes, s.dims, axes, v.matrix, v.output_layout.dims)
        vec = vec / np.linalg.norm(vec)
        return StateVector(layout, vec)
    m = apply_channel_isometry(s.matrix, s.dims, axes, v.matrix, v.output_layout.dims)
    return DensityOperator(layout, hermitize(m))


def apply_channel_isometry(mat, dims, axes, op, out_dims):
    """Conjugate a dense operator by ``op`` acting on ``axes``."""
    dims = list(dims)
    n = len(dims)
    vec, left_dims = apply_on_axes(np.asarray(mat).reshape(-1), dims + dims, axes, op, out_dims)
    nl = n - len(axes) + len(out_dims)
    vec, _ = apply_on_axes(vec, left_dims, [nl + a for a in axes], op.conj(), out_dims)
    dn = int(np.prod(left_dims[:nl], dtype=np.int64))
    return vec.reshape(dn, dn)


# --- random generation -----------------------------------------------------

def _rng(seed) -> np.random.Generator:
    seed = int(seed)
    if not -(2**63) <= seed < 2**64:
        raise ValueError(f"seed {seed} is not a 64-bit integer")
    return np.random.default_rng(seed % 2**64)


def haar_unitary_array(dim: int, rng: np.random.Generator) -> np.ndarray:
    if dim < 1:
        raise ValueError("dimension must be positive")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_vector_array(dim: int, rng: np.random.Generator) -> np.ndarray:
    if dim < 1:
        raise ValueError("dimension must be positive")
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def random_density_array(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Reduced state of a Haar pure state on a doubled space."""
    psi = haar_vector_array(dim * dim, rng).reshape(dim, dim)
    return hermitize(psi @ psi.conj().T)


def random_state(kind: str, layout: RegisterLayout, seed: int):
    rng = _rng(seed)
    d = layout.total_dim
    if kind == "pure":
        return StateVector(layout, haar_vector_array(d, rng))
    if kind == "density":
        return DensityOperator(layout, random_density_array(d, rng))
    raise ValueError(f"kind must be 'pure' or 'density', got {kind!r}")


def random_unitary(dim: int, seed: int, label: str = "X") -> IsometryMap:
    rng = _rng(seed)
    lay = RegisterLayout(((label, dim),))
    return IsometryMap(lay, lay, haar_unitary_array(dim, rng))


def basis_vector(dim: int, index: int = 0) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v
