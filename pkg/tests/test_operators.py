import numpy as np
import pytest

from bec_linear import kernels, operators
from bec_linear.errors import ContractError
from bec_linear.kernels import Convention


def test_grid_nodes_and_weights():
    g = operators.make_grid(100, 6.0, 2.0)
    assert g.n == 100
    assert g.nodes[-1] == pytest.approx(6.0)
    assert np.all(np.diff(g.nodes) > 0) and g.nodes[0] > 0
    # no node at 0: the weights telescope to x_max - x_1/2
    assert g.weights.sum() == pytest.approx(6.0 - g.nodes[0] / 2, rel=1e-14)
    # trapezoid weights integrate x^2 to second order
    assert np.dot(g.weights, g.nodes ** 2) == pytest.approx(72.0, rel=1e-3)


def test_grid_rejects_small_n():
    with pytest.raises(ContractError):
        operators.make_grid(8)
    with pytest.raises(ContractError):
        operators.make_grid(64, -1.0)


def test_state_field_contract():
    with pytest.raises(ContractError):
        operators.StateField(np.array([1.0, np.nan]))
    with pytest.raises(ContractError):
        operators.StateField(np.ones(3), theta=1.0)


def test_kernel_matrix_symmetric_bitwise(small_generator):
    K = small_generator.sym
    assert np.array_equal(K, K.T)
    assert np.all(np.diag(K) == 0)
    assert np.all(K >= 0)


def test_constants_annihilated(small_generator):
    A = small_generator
    out = operators.apply_calL(np.full(A.grid.n, 3.7), A).values
    assert np.max(np.abs(out)) < 1e-10


def test_self_adjoint_in_energy_measure(small_generator, rng):
    A = small_generator
    e = A.energy_vector
    f, g = rng.standard_normal((2, A.grid.n))
    lhs = np.dot(e * g, A.matvec(f))
    rhs = np.dot(e * f, A.matvec(g))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


def test_energy_conserved_by_generator(small_generator, rng):
    A = small_generator
    f = rng.standard_normal(A.grid.n)
    rate = np.dot(A.energy_vector, A.matvec(f))
    assert abs(rate) < 1e-12 * np.dot(A.energy_vector, np.abs(A.matvec(f)))


def test_quadratic_form_nonpositive(small_generator, rng):
    for _ in range(5):
        f = rng.standard_normal(small_generator.grid.n)
        assert operators.quadratic_form(f, small_generator) <= 1e-14


def test_off_diagonal_nonnegative(small_generator):
    A = small_generator.entries
    off = A[~np.eye(A.shape[0], dtype=bool)]
    assert np.all(off >= 0)
    assert np.allclose(A.sum(axis=1), 0.0, atol=1e-10 * np.abs(np.diag(A)).max())


def test_shape_mismatch_raises(small_generator):
    with pytest.raises(ContractError):
        operators.apply_calL(np.ones(5), small_generator)
    g = operators.make_grid(32)
    w = kernels.equilibrium_weights(operators.make_grid(40).nodes)
    with pytest.raises(ContractError):
        operators.assemble_generator(g, w)


def test_principal_plus_compact_equals_generator():
    grid = operators.make_grid(120, 6.0, 2.0)
    w = kernels.equilibrium_weights(grid.nodes, Convention.SINH_X2)
    A = operators.assemble_generator(grid, w)
    f = np.exp(-((grid.nodes - 1.5) / 0.5) ** 2)
    full = operators.apply_calL(f, A).values
    split = operators.apply_L(f, grid).values + operators.apply_F(f, grid).values
    assert np.allclose(split, full, rtol=1e-9, atol=1e-9 * np.abs(full).max())


@pytest.mark.parametrize("conv", list(Convention))
def test_generator_matches_quadrature_oracle(conv):
    def bump(x):
        return np.exp(-((x - 1.0) / 0.3) ** 2)

    grid = operators.make_grid(400, 6.0, 2.0)
    A = operators.assemble_generator(grid, kernels.equilibrium_weights(grid.nodes, conv))
    out = A.matvec(bump(grid.nodes))
    for i in (150, 200, 260):
        x = grid.nodes[i]
        ref = operators.generator_reference(bump, x, conv, upper=12.0, points=[1.0])
        assert out[i] == pytest.approx(ref, rel=5e-3, abs=1e-4 * abs(out).max())


def test_scaled_convention_conserves_half_energy(half_generator, rng):
    A = half_generator
    x = A.grid.nodes
    # w6 for the half convention is x^6 / (4 sinh^2(x^2/2))
    assert np.allclose(A.weights.w6[:50], x[:50] ** 6 / (4 * np.sinh(x[:50] ** 2 / 2) ** 2),
                       rtol=1e-12)
    f = rng.standard_normal(A.grid.n)
    rate = np.dot(A.energy_vector, A.matvec(f))
    assert abs(rate) < 1e-12 * np.dot(A.energy_vector, np.abs(A.matvec(f)))
