import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import phi_plus
from qredist.acceptance import imax_grid
from qredist.entropies import (
    EXACT,
    HEURISTIC_LOWER,
    HEURISTIC_UPPER,
    SDP_CERTIFIED,
    cond_mutual_info,
    dmax,
    dmax_array,
    entropy,
    fidelity,
    fidelity_array,
    fidelity_of_recovery,
    fidelity_pure_array,
    hmax,
    hmin,
    imax,
    imax_array,
    mutual_info,
    mutual_info_array,
    purified_distance,
    purified_distance_array,
    rel_entropy,
    rel_entropy_array,
    smooth,
)
from qredist.linalg import (
    DensityOperator,
    LayoutError,
    RegisterLayout,
    haar_unitary_array,
    partial_trace,
    ptrace_array,
    random_density_array,
    random_state,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 4)


def dens(labels, dims_, m):
    return DensityOperator(RegisterLayout.of(labels, dims_), np.asarray(m, dtype=complex))


def proj(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def full_rank(d, rng):
    return 0.9 * random_density_array(d, rng) + 0.1 * np.eye(d) / d


PHI = proj(phi_plus())
ZERO, ONE, PLUS = proj([1, 0]), proj([0, 1]), proj([1, 1]) / 2


# --- fidelity and distance ----------------------------------------------------------------

def test_fidelity_values():
    rho = random_density_array(3, np.random.default_rng(0))
    assert fidelity_array(rho, rho) == pytest.approx(1, abs=1e-12)
    assert fidelity_array(ZERO, PLUS) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    mixed = np.eye(2) / 2
    assert fidelity_array(ZERO, mixed) == pytest.approx(fidelity_pure_array(np.array([1, 0]), mixed), abs=1e-12)
    assert fidelity_array(ZERO, mixed) == pytest.approx(math.sqrt(0.5), abs=1e-12)


def test_fidelity_checks_layouts():
    a = dens(["A"], [2], np.eye(2) / 2)
    b = dens(["B"], [2], np.eye(2) / 2)
    with pytest.raises(LayoutError):
        fidelity(a, b)


def test_purified_distance_values():
    assert purified_distance_array(PLUS, PLUS) == pytest.approx(0, abs=1e-7)
    assert purified_distance_array(ZERO, ONE) == pytest.approx(1, abs=1e-12)


@given(seeds, dims)
def test_purified_distance_triangle(seed, d):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density_array(d, rng) for _ in range(3))
    assert purified_distance_array(a, c) <= purified_distance_array(a, b) + purified_distance_array(b, c) + 1e-9


@given(seeds, dims)
def test_fidelity_is_symmetric_and_unitarily_invariant(seed, d):
    rng = np.random.default_rng(seed)
    a, b = random_density_array(d, rng), random_density_array(d, rng)
    u = haar_unitary_array(d, rng)
    f = fidelity_array(a, b)
    assert f == pytest.approx(fidelity_array(b, a), abs=1e-9)
    assert f == pytest.approx(fidelity_array(u @ a @ u.conj().T, u @ b @ u.conj().T), abs=1e-9)


# --- relative entropies ------------------------------------------------------------------------

def test_relative_entropy_values():
    rho = random_density_array(3, np.random.default_rng(1))
    assert rel_entropy_array(rho, rho) == pytest.approx(0, abs=1e-9)
    assert rel_entropy_array(ZERO, np.eye(2) / 2) == pytest.approx(1, abs=1e-12)
    assert rel_entropy_array(PLUS, ZERO) == math.inf


@given(seeds, dims)
def test_relative_entropy_dominates_log_fidelity(seed, d):
    rng = np.random.default_rng(seed)
    a, b = full_rank(d, rng), full_rank(d, rng)
    assert rel_entropy_array(a, b) >= -2 * math.log2(fidelity_array(a, b)) - 1e-9


def test_dmax_values():
    rho = full_rank(3, np.random.default_rng(2))
    assert dmax_array(rho, rho) == pytest.approx(0, abs=1e-9)
    assert dmax_array(PHI, np.eye(4) / 4) == pytest.approx(2, abs=1e-12)
    assert dmax_array(PLUS, ZERO) == math.inf
    assert dmax(dens(["A"], [2], ZERO), dens(["A"], [2], np.eye(2) / 2)) == pytest.approx(1)


@given(seeds, dims)
def test_dmax_is_tight(seed, d):
    rng = np.random.default_rng(seed)
    rho, sig = full_rank(d, rng), full_rank(d, rng)
    v = dmax_array(rho, sig)
    assert np.linalg.eigvalsh(2 ** (v + 1e-6) * sig - rho)[0] >= 0
    assert np.linalg.eigvalsh(2 ** (v - 1e-3) * sig - rho)[0] < 0
    assert v >= rel_entropy_array(rho, sig) - 1e-8


# --- mutual information -----------------------------------------------------------------------------

def test_mutual_information_values():
    prod = np.kron(random_density_array(2, np.random.default_rng(3)), np.eye(2) / 2)
    assert mutual_info_array(prod, 2, 2) == pytest.approx(0, abs=1e-9)
    assert mutual_info_array(PHI, 2, 2) == pytest.approx(2, abs=1e-9)


@given(seeds)
def test_conditional_mutual_information_chain_rule(seed):
    psi = random_state("pure", RegisterLayout.of(["A", "B", "C"], [2, 2, 2]), seed)
    rho = psi.to_density()
    lhs = cond_mutual_info(rho, ["A"], ["B"], ["C"])
    rhs = mutual_info(rho, ["B"], ["A", "C"]) - mutual_info(rho, ["B"], ["C"])
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_mutual_information_is_min_over_product_references(rng):
    for _ in range(5):
        rho = random_density_array(4, rng)
        i = mutual_info_array(rho, 2, 2)
        ra = ptrace_array(rho, [2, 2], [0])
        for _ in range(100):
            sig = random_density_array(2, rng)
            assert rel_entropy_array(rho, np.kron(ra, sig)) >= i - 1e-8


def test_entropy_of_labelled_state():
    assert entropy(dens(["A"], [2], np.eye(2) / 2)) == pytest.approx(1)


# --- SDP quantities ---------------------------------------------------------------------------------

def test_imax_product_is_zero():
    rng = np.random.default_rng(4)
    rho = dens(["A", "B"], [2, 2], np.kron(random_density_array(2, rng), random_density_array(2, rng)))
    res = imax(rho, ["A"], ["B"])
    assert res.kind == SDP_CERTIFIED
    assert res.value == pytest.approx(0, abs=1e-7)


def test_imax_phi_plus_matches_grid():
    val = imax_array(PHI, 2, 2)[0]
    assert val == pytest.approx(2, abs=1e-7)
    assert val == pytest.approx(imax_grid(PHI), abs=2e-2)


def test_imax_classical_bit_matches_diagonal_brute_force():
    rho = np.diag([0.5, 0, 0, 0.5]).astype(complex)
    s = np.linspace(0.001, 0.999, 999)
    # Dmax against (I/2) ⊗ diag(s, 1-s) is log max(1/(2 s)*... ) over the two diagonal ratios
    brute = np.min(np.log2(np.maximum(0.5 / (0.5 * s), 0.5 / (0.5 * (1 - s)))))
    assert imax_array(rho, 2, 2)[0] == pytest.approx(1, abs=1e-7)
    assert imax_array(rho, 2, 2)[0] <= brute + 1e-7


@given(seeds)
def test_imax_certificate(seed):
    rho = random_density_array(4, np.random.default_rng(seed))
    res = imax(dens(["A", "B"], [2, 2], rho), ["A"], ["B"])
    cert = res.certificate
    assert cert["feasible"]
    assert cert["dual_bound"] <= res.value + 1e-9
    ra = ptrace_array(rho, [2, 2], [0])
    # the returned sigma_B attains the value
    assert dmax_array(rho, np.kron(ra, cert["sigma_b"])) == pytest.approx(res.value, abs=1e-6)
    assert res.value <= 2 + 1e-7


def test_imax_respects_labels():
    rho = random_state("density", RegisterLayout.of(["A", "B", "C"], [2, 2, 2]), 8)
    direct = imax_array(partial_trace(rho, ["A", "C"]).matrix, 2, 2)[0]
    assert imax(rho, ["A"], ["C"]).value == pytest.approx(direct, abs=1e-9)
    with pytest.raises(LayoutError):
        imax(rho, ["A"], ["A"])


def test_hmin_values():
    rng = np.random.default_rng(5)
    unc = dens(["A", "B"], [2, 2], np.kron(np.eye(2) / 2, random_density_array(2, rng)))
    assert hmin(unc, ["A"], ["B"]).value == pytest.approx(1, abs=1e-7)
    assert hmin(dens(["A", "B"], [2, 2], PHI), ["A"], ["B"]).value == pytest.approx(-1, abs=1e-7)


@given(seeds)
def test_hmax_at_least_hmin(seed):
    rho = dens(["A", "B"], [2, 2], random_density_array(4, np.random.default_rng(seed)))
    assert hmax(rho, ["A"], ["B"]).value >= hmin(rho, ["A"], ["B"]).value - 1e-7


def test_hmax_rejects_clashing_purifier_label():
    rho = dens(["A", "B"], [2, 2], np.eye(4) / 4)
    with pytest.raises(LayoutError):
        hmax(rho, ["A"], ["B"], purifying_label="B")


# --- smoothing -----------------------------------------------------------------------------------------

def test_smoothing_with_zero_radius_is_unsmoothed():
    rho = dens(["A", "B"], [2, 2], random_density_array(4, np.random.default_rng(6)))
    sm = smooth("imax", rho, (["A"], ["B"]), 0.0, restarts=2, iterations=50)
    assert sm.value == pytest.approx(imax(rho, ["A"], ["B"]).value, abs=1e-6)


@pytest.mark.parametrize("quantity, sign", [("imax", 1), ("hmax", 1), ("hmin", -1)])
def test_smoothing_never_worse_than_center(quantity, sign):
    rho = dens(["A", "B"], [2, 2], random_density_array(4, np.random.default_rng(7)))
    base = {"imax": imax, "hmax": hmax, "hmin": hmin}[quantity](rho, ["A"], ["B"]).value
    sm = smooth(quantity, rho, (["A"], ["B"]), 0.1, restarts=2, iterations=60)
    assert sm.kind == (HEURISTIC_UPPER if sign > 0 else HEURISTIC_LOWER)
    assert sign * sm.value <= sign * base + 1e-7


def test_smoothing_pseudo_pure_pair_drops_imax():
    m = 0.99 * PHI + 0.01 * np.eye(4) / 4
    rho = dens(["A", "B"], [2, 2], m)
    base = imax(rho, ["A"], ["B"]).value
    sm = smooth("imax", rho, (["A"], ["B"]), 0.2, restarts=3, iterations=150)
    assert sm.value <= base - 0.05
    # explicit in-ball candidate: more white noise lowers Imax by about 0.1
    cand = 0.9 * PHI + 0.1 * np.eye(4) / 4
    assert purified_distance_array(m, cand) <= 0.2
    assert imax_array(cand, 2, 2)[0] < base - 0.05


def test_smoothing_rejects_bad_radius():
    rho = dens(["A", "B"], [2, 2], np.eye(4) / 4)
    with pytest.raises(ValueError):
        smooth("imax", rho, (["A"], ["B"]), 1.5)


# --- fidelity of recovery --------------------------------------------------------------------------------

def test_recovery_of_markov_state_is_perfect():
    rng = np.random.default_rng(8)
    rho_ab = random_density_array(4, rng)
    # appending an independent C is a channel B -> BC
    rho = dens(["A", "B", "C"], [2, 2, 2], np.kron(rho_ab, random_density_array(2, rng)))
    assert fidelity_of_recovery(rho, ["A"], ["C"], ["B"], method="petz").value == pytest.approx(1, abs=1e-6)


def test_recovery_through_a_copying_channel():
    # C is a classical copy of B's computational-basis value
    p = np.array([0.2, 0.3, 0.1, 0.4])
    m = np.zeros((8, 8))
    for a in range(2):
        for b in range(2):
            i = a * 4 + b * 2 + b
            m[i, i] = p[2 * a + b]
    rho = dens(["A", "B", "C"], [2, 2, 2], m)
    res = fidelity_of_recovery(rho, ["A"], ["C"], ["B"], method="optimize", restarts=2, iterations=100)
    assert res.value == pytest.approx(1, abs=1e-6)


def test_recovery_of_product_state():
    rng = np.random.default_rng(9)
    m = np.kron(np.kron(random_density_array(2, rng), random_density_array(2, rng)), random_density_array(2, rng))
    rho = dens(["A", "B", "C"], [2, 2, 2], m)
    assert fidelity_of_recovery(rho, ["A"], ["C"], ["B"]).value == pytest.approx(1, abs=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_optimized_recovery_dominates_petz(seed):
    rho = random_state("pure", RegisterLayout.of(["A", "B", "C"], [2, 2, 2]), seed).to_density()
    petz = fidelity_of_recovery(rho, ["A"], ["C"], ["B"], method="petz").value
    opt = fidelity_of_recovery(rho, ["A"], ["C"], ["B"], method="optimize", restarts=2, iterations=80, seed=seed)
    assert petz <= opt.value + 1e-6
    assert opt.kind == HEURISTIC_LOWER


def test_exact_kind_constant_is_distinct():
    assert len({EXACT, SDP_CERTIFIED, HEURISTIC_UPPER, HEURISTIC_LOWER}) == 4


def test_rel_entropy_labelled():
    a = dens(["A"], [2], ZERO)
    b = dens(["A"], [2], np.eye(2) / 2)
    assert rel_entropy(a, b) == pytest.approx(1)
    assert purified_distance(a, a) == pytest.approx(0, abs=1e-7)
