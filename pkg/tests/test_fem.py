import numpy as np
import pytest

from sav_nls.errors import ConfigurationError, InputError
from sav_nls.fem import (DIRICHLET, PERIODIC, assemble_mass, assemble_stiffness,
                         build_space, error_norms, evaluate, integrate_density,
                         interpolate)


def sech(x):
    return 1.0 / np.cosh(x)


def test_build_space_dof_counts():
    assert build_space(0, 1, 10, 1, DIRICHLET).num_dofs == 9
    assert build_space(0, 1, 10, 1, PERIODIC).num_dofs == 10
    assert build_space(-20, 20, 5000, 3, PERIODIC).num_dofs == 15000


def test_build_space_shared_nodes():
    space = build_space(0, 1, 5, 3, PERIODIC)
    for e in range(4):
        assert space.dof_map[e, -1] == space.dof_map[e + 1, 0]
    assert space.dof_map[4, -1] == space.dof_map[0, 0]  # wraparound


@pytest.mark.parametrize("kwargs,msg", [
    (dict(a=0, b=1, num_elements=1, degree=1, bc=PERIODIC), "num_elements"),
    (dict(a=0, b=1, num_elements=4, degree=0, bc=PERIODIC), "degree"),
    (dict(a=0, b=1, num_elements=4, degree=5, bc=PERIODIC), "degree"),
    (dict(a=1, b=0, num_elements=4, degree=1, bc=PERIODIC), "a="),
    (dict(a=0, b=1, num_elements=4, degree=1, bc="neumann"), "bc"),
])
def test_build_space_rejects_bad_input(kwargs, msg):
    with pytest.raises(ConfigurationError, match=msg):
        build_space(**kwargs)


def _exact_local_matrices(p, h):
    """Exact local mass/stiffness via polynomial integration (no quadrature)."""
    from numpy.polynomial import Polynomial
    nodes = np.arange(p + 1) / p
    basis = []
    for m in range(p + 1):
        poly = Polynomial([1.0])
        for j in range(p + 1):
            if j != m:
                poly *= Polynomial([-nodes[j], 1.0]) / (nodes[m] - nodes[j])
        basis.append(poly)
    mass = np.zeros((p + 1, p + 1))
    stiff = np.zeros((p + 1, p + 1))
    for l in range(p + 1):
        for m in range(p + 1):
            mass[l, m] = h * (basis[l] * basis[m]).integ()(1.0)
            stiff[l, m] = (basis[l].deriv() * basis[m].deriv()).integ()(1.0) / h
    return mass, stiff


@pytest.mark.parametrize("p", [1, 2])
def test_local_matrices_match_exact_integration(p):
    space = build_space(0.0, 1.2, 4, p, DIRICHLET)
    h = space.mesh.h
    mass_exact, stiff_exact = _exact_local_matrices(p, h)
    if p == 1:
        np.testing.assert_allclose(mass_exact, h / 6.0 * np.array([[2, 1], [1, 2]]),
                                   atol=1e-15)
        np.testing.assert_allclose(stiff_exact, np.array([[1, -1], [-1, 1]]) / h,
                                   atol=1e-15)
    # assemble a single-element contribution by hand and compare globals
    M = assemble_mass(space).toarray()
    A = assemble_stiffness(space).toarray()
    Mh = np.zeros_like(M)
    Ah = np.zeros_like(A)
    for e in range(space.mesh.num_elements):
        dofs = space.dof_map[e]
        for l, gl in enumerate(dofs):
            for m, gm in enumerate(dofs):
                if gl >= 0 and gm >= 0:
                    Mh[gl, gm] += mass_exact[l, m]
                    Ah[gl, gm] += stiff_exact[l, m]
    np.testing.assert_allclose(M, Mh, atol=1e-13)
    np.testing.assert_allclose(A, Ah, atol=1e-13)


def test_dirichlet_two_element_stiffness():
    space = build_space(0.0, 1.0, 2, 1, DIRICHLET)
    A = assemble_stiffness(space).toarray()
    np.testing.assert_allclose(A, [[4.0]], atol=1e-13)


def test_mass_is_hermitian_positive_definite():
    space = build_space(-3.0, 2.0, 7, 3, PERIODIC)
    M = assemble_mass(space)
    np.testing.assert_allclose((M - M.conj().T).toarray(), 0.0, atol=1e-15)
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.standard_normal(space.num_dofs) + 1j * rng.standard_normal(space.num_dofs)
        assert np.real(np.vdot(v, M @ v)) > 0.0


def test_periodic_mass_row_sums():
    space = build_space(0.0, 1.0, 10, 1, PERIODIC)
    sums = np.asarray(assemble_mass(space).sum(axis=1)).ravel()
    np.testing.assert_allclose(sums, space.mesh.h, rtol=1e-13)


def test_periodic_stiffness_annihilates_constants():
    space = build_space(-1.0, 4.0, 9, 2, PERIODIC)
    A = assemble_stiffness(space)
    ones = np.ones(space.num_dofs, dtype=complex)
    norm = np.abs(A.toarray()).max()
    assert np.abs(A @ ones).max() <= 1e-13 * norm
    rng = np.random.default_rng(1)
    for _ in range(20):
        v = rng.standard_normal(space.num_dofs) + 1j * rng.standard_normal(space.num_dofs)
        assert np.real(np.vdot(v, A @ v)) >= -1e-12


def test_interpolate_zero_and_identity():
    space = build_space(0.0, 1.0, 8, 2, PERIODIC)
    np.testing.assert_array_equal(interpolate(space, lambda x: 0.0), 0.0)
    coeffs = interpolate(space, lambda x: x)
    np.testing.assert_array_equal(coeffs, space.dof_coords)
    assert coeffs[0] == 0.0  # identified seam dof takes fn(a)


def test_interpolate_soliton_profile_at_origin():
    space = build_space(-20.0, 20.0, 40, 1, PERIODIC)
    coeffs = interpolate(space, lambda x: sech(x) * np.exp(2j * x))
    i0 = np.argmin(np.abs(space.dof_coords))
    assert space.dof_coords[i0] == 0.0
    assert coeffs[i0] == 1.0 + 0.0j


def test_interpolate_rejects_non_finite():
    space = build_space(0.0, 1.0, 4, 1, PERIODIC)
    with pytest.raises(InputError, match="0.25"):
        interpolate(space, lambda x: np.nan if x == 0.25 else 1.0)


def test_periodic_translation_equivariance():
    # power-of-two grid so shifted sample points are bitwise identical
    a, b, M, p = 0.0, 1.0, 8, 2
    space = build_space(a, b, M, p, PERIODIC)
    h = space.mesh.h
    L = b - a
    rng = np.random.default_rng(5)
    table = rng.standard_normal(64)
    fn = lambda x: table[int(round((x - a) / (L / 64))) % 64]
    shifted = lambda x: fn(a + (x - a + h) % L)
    c1 = interpolate(space, fn)
    c2 = interpolate(space, shifted)
    np.testing.assert_array_equal(c2, np.roll(c1, -p))


def test_evaluate_constant_and_linear():
    space = build_space(0.0, 2.0, 4, 1, PERIODIC)
    v = interpolate(space, lambda x: 3.0 - 1.0j)
    val, der = evaluate(space, v, 0.77)
    np.testing.assert_allclose(val, 3.0 - 1.0j, rtol=1e-14)
    np.testing.assert_allclose(der, 0.0, atol=1e-13)

    # p=1 nodal values {0, 1} on the first element
    space = build_space(0.0, 1.0, 2, 1, DIRICHLET)
    v = np.array([1.0 + 0j])  # single interior dof at x=0.5
    h = space.mesh.h
    val, der = evaluate(space, v, 0.25)
    np.testing.assert_allclose(val, 0.5, rtol=1e-14)
    np.testing.assert_allclose(der, 1.0 / h, rtol=1e-14)


def test_evaluate_continuity_across_element_boundary():
    space = build_space(0.0, 1.0, 5, 3, PERIODIC)
    rng = np.random.default_rng(2)
    v = rng.standard_normal(space.num_dofs) + 1j * rng.standard_normal(space.num_dofs)
    x = 0.4  # element boundary
    left, _ = evaluate(space, v, x - 1e-14)
    right, _ = evaluate(space, v, x + 1e-14)
    at, _ = evaluate(space, v, x)
    assert abs(left - at) <= 1e-12 * max(1.0, abs(at))
    assert abs(right - at) <= 1e-12 * max(1.0, abs(at))


def test_evaluate_outside_domain():
    space = build_space(0.0, 1.0, 4, 1, PERIODIC)
    v = interpolate(space, lambda x: 1.0)
    with pytest.raises(InputError):
        evaluate(space, v, 1.5)


def test_integrate_density_basics():
    space = build_space(0.0, 1.0, 6, 2, PERIODIC)
    v = interpolate(space, lambda x: 1.0)
    val = integrate_density(space, v, lambda u, du, x: np.abs(u) ** 2, 4)
    np.testing.assert_allclose(val, 1.0, rtol=1e-13)

    # tent profile has |u'| = 1 everywhere and satisfies the Dirichlet BC
    space_d = build_space(0.0, 1.0, 6, 2, DIRICHLET)
    v = interpolate(space_d, lambda x: min(x, 1.0 - x))
    val = integrate_density(space_d, v, lambda u, du, x: np.abs(du) ** 2, 4)
    np.testing.assert_allclose(val, 1.0, rtol=1e-13)

    with pytest.raises(ConfigurationError):
        integrate_density(space, v, lambda u, du, x: np.abs(u) ** 2, 0)


def test_integrate_density_sech_fourth_power():
    # int sech(x)^4 dx = 4/3; tails beyond [-20, 20] are ~1e-17
    space = build_space(-20.0, 20.0, 2000, 3, PERIODIC)
    v = interpolate(space, sech)
    val = integrate_density(space, v, lambda u, du, x: np.abs(u) ** 4, 5)
    np.testing.assert_allclose(val, 4.0 / 3.0, atol=1e-6)


def test_integrate_density_matches_mass_quadratic_form():
    space = build_space(-2.0, 3.0, 9, 3, PERIODIC)
    M = assemble_mass(space)
    rng = np.random.default_rng(3)
    for _ in range(10):
        v = rng.standard_normal(space.num_dofs) + 1j * rng.standard_normal(space.num_dofs)
        by_quad = integrate_density(space, v, lambda u, du, x: np.abs(u) ** 2,
                                    space.degree + 2)
        by_form = np.real(np.vdot(v, M @ v))
        np.testing.assert_allclose(by_quad, by_form, rtol=1e-12)


def test_error_norms_exact_reproduction_and_trivial_cases():
    space = build_space(0.0, 1.0, 6, 2, DIRICHLET)
    exact = lambda x: x * (1.0 - x)
    grad = lambda x: 1.0 - 2.0 * x
    v = interpolate(space, exact)
    l2, h1 = error_norms(space, v, exact, grad)
    assert h1 <= 1e-12

    space_p = build_space(0.0, 1.0, 6, 1, PERIODIC)
    l2, h1 = error_norms(space_p, np.zeros(space_p.num_dofs, dtype=complex),
                         lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
    np.testing.assert_allclose(l2, 1.0, rtol=1e-13)


def test_error_norms_first_order_rate_for_p1():
    exact = lambda x: np.sin(2 * np.pi * x)
    grad = lambda x: 2 * np.pi * np.cos(2 * np.pi * x)
    h1 = []
    for M in (32, 64):
        space = build_space(0.0, 1.0, M, 1, PERIODIC)
        v = interpolate(space, exact)
        h1.append(error_norms(space, v, exact, grad)[1])
    ratio = h1[0] / h1[1]
    assert 1.9 <= ratio <= 2.1
