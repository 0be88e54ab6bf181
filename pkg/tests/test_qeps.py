import math

import numpy as np
import pytest

from conftest import phi_plus
from qredist.linalg import LayoutError, RegisterLayout, StateVector, haar_vector_array, tensor
from qredist.qeps import (
    MARGINAL_TOL,
    QEPS_CSV_HEADER,
    bound_suite,
    check_point,
    cmi_budget,
    decoupled_c,
    qeps_lower_recovery,
    qeps_upper,
    qprime_decomposition,
    splitting_identity_check,
    trivial_point,
)
from qredist.acceptance import pseudo_pure_family


def ket(labels, dims, amp):
    return StateVector(RegisterLayout.of(labels, dims), np.asarray(amp, dtype=complex))


def random_psi(seed, dims=(2, 2, 2, 2)):
    rng = np.random.default_rng(seed)
    return ket(["R", "A", "B", "C"], dims, haar_vector_array(int(np.prod(dims)), rng))


def phi_rc():
    # |Phi+>_RC with one-dimensional A and B
    return ket(["R", "A", "B", "C"], [2, 1, 1, 2], phi_plus())


def markov_psi(seed):
    # rho_RBC = rho_RB ⊗ rho_C, purified by A = A1 A2
    rng = np.random.default_rng(seed)
    rba = haar_vector_array(8, rng).reshape(2, 2, 2)  # R, B, A1
    ca = haar_vector_array(4, rng).reshape(2, 2)  # C, A2
    amp = np.einsum("rbx,cy->rxybc", rba, ca).reshape(-1)
    return ket(["R", "A", "B", "C"], [2, 4, 2, 2], amp)


def product_r_ac(seed):
    rng = np.random.default_rng(seed)
    r = ket(["R"], [2], haar_vector_array(2, rng))
    ac = ket(["A", "B", "C"], [2, 1, 2], haar_vector_array(4, rng))
    return tensor(r, ac)


def test_decoupled_c_gives_zero_upper():
    rng = np.random.default_rng(3)
    rab = ket(["R", "A", "B"], [2, 2, 2], haar_vector_array(8, rng))
    psi = tensor(rab, ket(["C"], [2], haar_vector_array(2, rng)))
    assert decoupled_c(psi)
    est = qeps_upper(psi, 0.1, t_dim=1, restarts=1, iterations=30, with_lower=False)
    assert est.upper <= 1e-6


def test_phi_rc_upper():
    est = qeps_upper(phi_rc(), 0.1, t_dim=2, restarts=2, iterations=150, with_lower=False)
    assert est.upper <= 2.1
    assert est.upper <= 2 * math.log2(2) + 2 * math.log2(2) + 1e-6


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("t_dim", [1, 2, 3])
def test_upper_below_dimension_bound(seed, t_dim):
    est = qeps_upper(random_psi(seed), 0.1, t_dim=t_dim, restarts=1, iterations=40, seed=seed,
                     with_lower=False)
    assert est.upper <= 2 * math.log2(2) + 2 * math.log2(t_dim) + 1e-6


def test_markov_lower_is_log_one_minus_eps_squared():
    psi = markov_psi(7)
    low = qeps_lower_recovery(psi, 0.1, restarts=1, iterations=50)
    assert low.fidelity_petz == pytest.approx(1.0, abs=1e-9)
    assert low.petz == pytest.approx(math.log2(1 - 0.01), abs=1e-6)
    assert low.petz <= 0
    at_zero = qeps_lower_recovery(psi, 0.0, restarts=1, iterations=50)
    assert at_zero.petz == pytest.approx(0.0, abs=1e-6)


def test_markov_budget_holds():
    psi = markov_psi(8)
    suite = bound_suite(psi, 0.1, restarts=1, iterations=40)
    assert suite["cmi"] == pytest.approx(0.0, abs=1e-9)
    assert suite["cmi_budget"] == pytest.approx(98 / (2 * 0.01) + 15, abs=1e-6)
    assert suite["cmi_budget_ok"] and suite["recovery_ok"]


def test_product_r_ac_both_zero():
    psi = product_r_ac(11)
    est = qeps_upper(psi, 0.1, t_dim=1, restarts=1, iterations=30, with_lower=False)
    assert est.upper == pytest.approx(0.0, abs=1e-6)
    low = qeps_lower_recovery(psi, 0.0, restarts=1, iterations=30)
    assert max(low.value, low.petz) == pytest.approx(0.0, abs=1e-6)


def test_phi_rc_both_at_most_two():
    est = qeps_upper(phi_rc(), 0.1, t_dim=1, restarts=1, iterations=60)
    assert est.upper <= 2 + 1e-6
    assert est.lower <= 2 + 1e-6
    assert est.lower_petz <= 2 + 1e-6


@pytest.mark.parametrize("seed", [21, 22])
def test_lower_below_upper(seed):
    psi = random_psi(seed)
    est = qeps_upper(psi, 0.1, t_dim=2, restarts=1, iterations=80, seed=seed)
    assert max(est.lower, est.lower_petz) <= est.upper + 1e-6


def test_pseudo_pure_stable_across_seeds():
    psi = pseudo_pure_family(0.99)
    values = [qeps_upper(psi, 0.2, t_dim=1, restarts=1, iterations=60, seed=s, with_lower=False).upper
              for s in range(20)]
    assert max(values) - min(values) <= 0.1


def test_returned_point_is_feasible():
    psi = random_psi(5)
    est = qeps_upper(psi, 0.1, t_dim=2, restarts=1, iterations=60, with_lower=False)
    dist, marg = check_point(psi, est.feasible_point)
    assert dist <= 0.1 + 1e-6
    assert marg <= MARGINAL_TOL


def test_trivial_point_sits_on_the_target():
    psi = random_psi(6)
    dist, marg = check_point(psi, trivial_point(psi, t_dim=2))
    assert dist <= 1e-6
    assert marg <= 1e-12


def test_qprime_decoupled_with_trivial_t():
    rng = np.random.default_rng(13)
    rab = ket(["R", "A", "B"], [2, 2, 2], haar_vector_array(8, rng))
    psi = tensor(rab, ket(["C"], [2], haar_vector_array(2, rng)))
    out = qprime_decomposition(psi, t_dim=1, restarts=1, iterations=10)
    assert out["cmi"] == pytest.approx(0.0, abs=1e-9)
    assert out["best_i_rb_ct"] == pytest.approx(0.0, abs=1e-9)
    assert out["best_decoupling"] == pytest.approx(0.0, abs=1e-9)


def test_qprime_identity_on_random_input():
    out = qprime_decomposition(random_psi(14), t_dim=2, restarts=10, iterations=30)
    assert out["accepted"] > 0
    assert out["identity_ok"]
    assert out["max_identity_error"] <= 1e-6


def test_cmi_budget_formula():
    assert cmi_budget(0.0, 0.3) == pytest.approx(559.4444, abs=1e-3)
    assert cmi_budget(1.0, 0.3) == pytest.approx(49 / 0.18 + 98 / 0.18 + 15)


def test_budget_holds_at_eps_03():
    psi = random_psi(15, dims=(2, 2, 1, 2))
    suite = bound_suite(psi, 0.3, restarts=1, iterations=40)
    assert suite["upper"] <= 4
    assert suite["cmi_budget_ok"]
    assert suite["witness_below_upper"]


def test_splitting_check_on_phi_rc():
    psi = ket(["R", "A", "C"], [2, 1, 2], phi_plus())
    out = splitting_identity_check(psi, 0.1, t_dim=1, restarts=1, iterations=40,
                                   smooth_restarts=1, smooth_iterations=60)
    assert out["imax_unsmoothed"] == pytest.approx(2.0, abs=1e-6)
    assert out["qeps_below_unsmoothed"] and out["smooth_below_unsmoothed"]


def test_splitting_check_rejects_b():
    with pytest.raises(LayoutError):
        splitting_identity_check(random_psi(0), 0.1)


def test_csv_row_columns():
    est = qeps_upper(random_psi(16), 0.1, t_dim=1, restarts=1, iterations=10, with_lower=False)
    row = est.csv_row("x", 0.1)
    assert list(row) == QEPS_CSV_HEADER
    assert math.isnan(row["lower_bits"])


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1])
def test_upper_rejects_bad_eps(eps):
    with pytest.raises(ValueError):
        qeps_upper(random_psi(0), eps)


def test_upper_rejects_large_t():
    with pytest.raises(ValueError):
        qeps_upper(random_psi(0), 0.1, t_dim=5)


def test_missing_register_is_a_layout_error():
    psi = ket(["R", "A", "C"], [2, 2, 2], haar_vector_array(8, np.random.default_rng(0)))
    with pytest.raises(LayoutError):
        qeps_upper(psi, 0.1)
