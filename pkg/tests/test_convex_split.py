import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qredist.acceptance import commuting_stage_pair, small_k_pair, stage_pair
from qredist.convex_split import (
    MemoryCapError,
    binomial_terms,
    build_tau,
    canonical_purification_of_tau,
    commuting_stage_terms,
    derivation_diagnostics,
    lemma_n,
    make_instance,
    tau_array,
    verify_lemma,
)
from qredist.entropies import mutual_info_array
from qredist.linalg import (
    DensityOperator,
    RegisterLayout,
    partial_trace,
    permute,
    ptrace_array,
    random_density_array,
)

seeds = st.integers(0, 2**32 - 1)


def pq(rho, sigma, dp=2, dq=2):
    return (DensityOperator(RegisterLayout.of(["P", "Q"], [dp, dq]), rho),
            DensityOperator(RegisterLayout.of(["Q"], [dq]), sigma))


CLASSICAL = np.diag([0.5, 0, 0, 0.5]).astype(complex)
HALF = np.eye(2, dtype=complex) / 2


# --- copy count ------------------------------------------------------------------------------

def test_lemma_n_small_k():
    assert lemma_n(0.1, 0.05) == 1
    assert lemma_n(0.3, 0.1) == 1


def test_lemma_n_formula():
    assert lemma_n(1.0, 0.1) == 53151
    assert lemma_n(1.0, 0.1) == math.ceil(8 * 2 * math.log2(10) / 0.001)


@pytest.mark.parametrize("k, delta", [(1.0, 0.0), (1.0, 0.2), (-1.0, 0.1), (math.inf, 0.1)])
def test_lemma_n_rejects_bad_arguments(k, delta):
    with pytest.raises(ValueError):
        lemma_n(k, delta)


# --- the mixture itself -------------------------------------------------------------------------------

def test_single_copy_is_the_input():
    rho = random_density_array(4, np.random.default_rng(0))
    assert np.allclose(tau_array(rho, HALF, 2, 2, 1), rho)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_product_input_gives_product_mixture(n):
    rng = np.random.default_rng(n)
    rp, sig = random_density_array(2, rng), random_density_array(2, rng)
    expect = rp
    for _ in range(n):
        expect = np.kron(expect, sig)
    assert np.allclose(tau_array(np.kron(rp, sig), sig, 2, 2, n), expect, atol=1e-14)


def test_classical_instance_by_hand():
    # 1/2 (rho_{P Q1} ⊗ I/2_{Q2} + rho_{P Q2} ⊗ I/2_{Q1}) built entry by entry
    expect = np.zeros((8, 8))
    for p, q1, q2 in itertools.product(range(2), repeat=3):
        i = 4 * p + 2 * q1 + q2
        expect[i, i] = 0.5 * (0.5 * (p == q1) * 0.5 + 0.5 * (p == q2) * 0.5)
    assert np.allclose(tau_array(CLASSICAL, HALF, 2, 2, 2), expect, atol=1e-15)


@given(seeds, st.integers(2, 4))
def test_mixture_is_symmetric_under_swapping_copies(seed, n):
    rng = np.random.default_rng(seed)
    rho, sig = random_density_array(4, rng), random_density_array(2, rng)
    inst = make_instance(*pq(rho, sig), 0.12, n_override=n)
    tau = build_tau(inst)
    labels = list(tau.layout.labels)
    i, j = sorted(rng.choice(np.arange(1, n + 1), size=2, replace=False))
    swapped = labels.copy()
    swapped[i], swapped[j] = swapped[j], swapped[i]
    moved = permute(tau, swapped)
    assert np.max(np.abs(moved.matrix - tau.matrix)) <= 1e-12


@given(seeds, st.integers(2, 4))
def test_last_pair_marginal_and_operator_bound(seed, n):
    rng = np.random.default_rng(seed)
    rho, sig = random_density_array(4, rng), 0.8 * random_density_array(2, rng) + 0.1 * np.eye(2)
    inst = make_instance(*pq(rho, sig), 0.12, n_override=n)
    tau = build_tau(inst)
    pair = partial_trace(tau, ["P", f"Q{n}"]).matrix
    rho_p = ptrace_array(rho, [2, 2], [0])
    expect = rho / n + (n - 1) / n * np.kron(rho_p, sig)
    assert np.max(np.abs(pair - expect)) <= 1e-12
    gap = (1 + 2**inst.k / n) * np.kron(rho_p, sig) - pair
    assert np.linalg.eigvalsh(gap)[0] >= -1e-9


def test_memory_cap():
    inst = make_instance(*pq(CLASSICAL, HALF), 0.12, n_override=12)
    with pytest.raises(MemoryCapError, match="cap"):
        build_tau(inst)
    with pytest.raises(MemoryCapError):
        verify_lemma(inst)


def test_instance_validation():
    with pytest.raises(ValueError, match="infinite"):
        make_instance(*pq(CLASSICAL, np.diag([1.0, 0.0]).astype(complex)), 0.12)
    with pytest.raises(ValueError):
        make_instance(*pq(CLASSICAL, HALF), 0.3)
    with pytest.raises(ValueError):
        make_instance(*pq(CLASSICAL, HALF), 0.12, n_override=0)


# --- closeness report -----------------------------------------------------------------------------------

def test_product_input_report():
    rng = np.random.default_rng(3)
    rp, sig = random_density_array(2, rng), random_density_array(2, rng)
    rep = verify_lemma(make_instance(*pq(np.kron(rp, sig), sig), 0.12, n_override=4))
    assert rep.mutual_info == pytest.approx(0, abs=1e-9)
    assert rep.fidelity_sq == pytest.approx(1, abs=1e-9)
    assert rep.bound_3delta_ok and rep.bound_6delta_ok and rep.pinsker_chain_ok
    assert rep.to_dict()["rounding"] == "ceil"


@pytest.mark.parametrize("seed", range(5))
def test_small_k_single_copy(seed):
    rho, sig = small_k_pair(seed)
    inst = make_instance(rho, sig, 0.12)
    rep = verify_lemma(inst)
    assert rep.n == 1 and not rep.n_overridden
    i_rho = mutual_info_array(rho.matrix, 2, 2)
    assert rep.mutual_info == pytest.approx(i_rho, abs=1e-12)
    assert rep.mutual_info <= inst.k + 1e-12 <= 3 * 0.12 + 1e-9


def test_mutual_information_decreases_with_copies():
    rho, sig = stage_pair(5, k_range=(0.25, 0.35))
    values = [verify_lemma(make_instance(rho, sig, 0.12, n_override=n)).mutual_info
              for n in (1, 2, 4, 8)]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    # commuting perturbed product reaches n = 16
    p = 0.85 * np.outer([0.3, 0.7], [0.6, 0.4]) + 0.15 * np.array([[0.4, 0.1], [0.1, 0.4]])
    s = np.array([0.6, 0.4])
    cvalues = [commuting_stage_terms(p, s, 0.12, n).mutual_info for n in (1, 2, 4, 8, 16)]
    assert all(b <= a + 1e-12 for a, b in zip(cvalues, cvalues[1:]))


# --- proof stages -------------------------------------------------------------------------------------------

def test_product_input_stage_terms_vanish():
    rng = np.random.default_rng(6)
    rp, sig = random_density_array(2, rng), random_density_array(2, rng)
    terms = derivation_diagnostics(make_instance(*pq(np.kron(rp, sig), sig), 0.12, n_override=4))
    # every entropic term is zero; only the additive slack terms remain
    for v in (terms.decomp_lhs, terms.decomp_rhs, terms.local_lhs, terms.weight_lhs):
        assert abs(v) <= 1e-9
    assert terms.weight_mid == pytest.approx(terms.classical_term, abs=1e-9)
    assert terms.all_ok


def test_classical_instance_local_stage():
    terms = derivation_diagnostics(make_instance(*pq(CLASSICAL, HALF), 0.12, n_override=4))
    assert terms.margins()["local"] >= 0
    assert terms.all_ok


def test_binomial_tail_by_enumeration():
    k, delta, n = 1.0, 0.12, 9
    p = 2.0**-k
    tail = 0.0
    for bits in itertools.product([0, 1], repeat=n - 1):
        w = sum(bits)
        if w < (n - 1) * p * (1 - delta):
            tail += p**w * (1 - p) ** (n - 1 - w)
    _, t, bound = binomial_terms(k, delta, n)
    assert t == pytest.approx(tail, abs=1e-15)
    assert t <= bound


@given(seeds, st.integers(2, 4))
def test_stages_hold_on_random_instances(seed, n):
    rho, sig = stage_pair(seed)
    terms = derivation_diagnostics(make_instance(rho, sig, 0.12, n_override=n))
    assert min(terms.margins().values()) >= -1e-8
    assert terms.all_ok


@given(seeds, st.integers(2, 4))
def test_commuting_path_matches_dense(seed, n):
    p, s = commuting_stage_pair(seed)
    rho = np.diag(p.reshape(-1)).astype(complex)
    sig = np.diag(s).astype(complex)
    dense = derivation_diagnostics(make_instance(*pq(rho, sig), 0.12, n_override=n))
    fast = commuting_stage_terms(p, s, 0.12, n)
    for key, val in dense.margins().items():
        assert fast.margins()[key] == pytest.approx(val, abs=1e-9)


# --- purification of the mixture -------------------------------------------------------------------------------

def test_single_copy_purification():
    rng = np.random.default_rng(7)
    rho, sig = pq(random_density_array(4, rng), random_density_array(2, rng))
    inst = make_instance(rho, sig, 0.12, n_override=1)
    mu = canonical_purification_of_tau(inst)
    assert mu.layout.dim_of("M") == 1
    back = partial_trace(mu, ["P", "Q1"]).matrix
    assert np.allclose(back, rho.matrix, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_purification_marginals(n):
    rng = np.random.default_rng(8)
    rho, sig = pq(random_density_array(4, rng), random_density_array(2, rng))
    inst = make_instance(rho, sig, 0.12, n_override=n)
    mu = canonical_purification_of_tau(inst)
    m = partial_trace(mu, ["M"]).matrix
    assert np.allclose(np.diag(m).real, 1 / n, atol=1e-12)
    keep = ["P"] + [f"Q{j}" for j in range(1, n + 1)]
    assert np.max(np.abs(partial_trace(mu, keep).matrix - build_tau(inst).matrix)) <= 1e-9
