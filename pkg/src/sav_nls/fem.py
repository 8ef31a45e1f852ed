"""1D complex Lagrange finite elements on a uniform mesh.

Degrees 1..4 with equispaced nodes per element; periodic or homogeneous
Dirichlet boundary conditions.  FE functions are plain complex coefficient
arrays of length num_dofs.  Mass/stiffness operators are assembled with
exact Gauss quadrature; nonlinear functionals use a per-element rule chosen
by the caller.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .collocation import gauss_rule, lagrange_basis, lagrange_basis_deriv
from .errors import ConfigurationError, InputError

PERIODIC = "periodic"
DIRICHLET = "dirichlet"

MAX_DEGREE = 4


@dataclass(frozen=True)
class Mesh1D:
    """Uniform mesh of [a, b] with M elements."""

    a: float
    b: float
    num_elements: int
    h: float
    bc: str


@dataclass(frozen=True)
class FemSpace:
    """Complex Lagrange space of degree p on a Mesh1D.

    dof_map[e, j] is the global dof of local node j of element e; -1 marks a
    constrained (Dirichlet boundary) node whose coefficient is implicitly 0.
    dof_coords holds the physical coordinate of every global dof.
    """

    mesh: Mesh1D
    degree: int
    num_dofs: int
    dof_map: np.ndarray
    dof_coords: np.ndarray
    ref_nodes: np.ndarray  # equispaced Lagrange nodes on [0, 1]


def build_space(a, b, num_elements, degree, bc):
    """Construct the degree-`degree` FE space on [a, b] with `num_elements` cells."""
    if not a < b:
        raise ConfigurationError(f"domain endpoints invalid: a={a} must be < b={b}")
    if num_elements < 2:
        raise ConfigurationError(f"num_elements={num_elements} must be >= 2")
    if not 1 <= degree <= MAX_DEGREE:
        raise ConfigurationError(f"degree={degree} outside supported range [1, {MAX_DEGREE}]")
    if bc not in (PERIODIC, DIRICHLET):
        raise ConfigurationError(f"bc={bc!r} must be {PERIODIC!r} or {DIRICHLET!r}")

    M, p = num_elements, degree
    h = (b - a) / M
    mesh = Mesh1D(a=a, b=b, num_elements=M, h=h, bc=bc)

    raw = np.arange(M)[:, None] * p + np.arange(p + 1)[None, :]  # global node index
    n_nodes = p * M
    if bc == PERIODIC:
        dof_map = raw % n_nodes
        num_dofs = n_nodes
        dof_coords = a + np.arange(n_nodes) * (h / p)
    else:
        dof_map = raw - 1
        dof_map[raw == n_nodes] = -1  # right boundary node
        num_dofs = n_nodes - 1
        dof_coords = a + np.arange(1, n_nodes) * (h / p)

    return FemSpace(mesh=mesh, degree=p, num_dofs=num_dofs,
                    dof_map=dof_map.astype(np.int64), dof_coords=dof_coords,
                    ref_nodes=np.arange(p + 1) / p)


def reference_quadrature(nq):
    """nq-point Gauss rule mapped to the reference element [0, 1]."""
    if nq < 1:
        raise ConfigurationError(f"quadrature point count nq={nq} must be >= 1")
    rule = gauss_rule(nq)
    return 0.5 * (rule.nodes + 1.0), 0.5 * rule.weights


def basis_tables(space, nq):
    """(points, weights, phi, dphi) on [0, 1]; phi/dphi have shape (nq, p+1)."""
    pts, wts = reference_quadrature(nq)
    phi = lagrange_basis(space.ref_nodes, pts)
    dphi = lagrange_basis_deriv(space.ref_nodes, pts)
    return pts, wts, phi, dphi


def scatter_matrix(space, local):
    """Assemble local (p+1)x(p+1) element matrices into a global CSR.

    `local` is a single matrix shared by all elements or a stacked
    (num_elements, p+1, p+1) array.
    """
    dm = space.dof_map
    M, nloc = dm.shape
    rows = np.broadcast_to(dm[:, :, None], (M, nloc, nloc)).ravel()
    cols = np.broadcast_to(dm[:, None, :], (M, nloc, nloc)).ravel()
    data = np.broadcast_to(local, (M, nloc, nloc)).ravel()
    keep = (rows >= 0) & (cols >= 0)
    mat = sp.coo_matrix((data[keep], (rows[keep], cols[keep])),
                        shape=(space.num_dofs, space.num_dofs))
    return mat.tocsr()


def scatter_vector(space, local_loads):
    """Accumulate per-element (p+1,) local load vectors into a global vector."""
    dm = space.dof_map.ravel()
    keep = dm >= 0
    idx = dm[keep]
    vals = np.asarray(local_loads).reshape(-1)[keep]
    out = np.bincount(idx, weights=vals.real, minlength=space.num_dofs).astype(np.complex128)
    if np.iscomplexobj(vals):
        out += 1j * np.bincount(idx, weights=vals.imag, minlength=space.num_dofs)
    return out


def assemble_mass(space):
    """Mass operator M_ij = int phi_i phi_j dx (Hermitian positive definite)."""
    h = space.mesh.h
    _, wts, phi, _ = basis_tables(space, space.degree + 1)
    local = h * np.einsum("q,ql,qm->lm", wts, phi, phi)
    return scatter_matrix(space, local).astype(np.complex128)


def assemble_stiffness(space):
    """Stiffness operator A_ij = int phi_i' phi_j' dx (Hermitian PSD)."""
    h = space.mesh.h
    _, wts, _, dphi = basis_tables(space, space.degree + 1)
    local = (1.0 / h) * np.einsum("q,ql,qm->lm", wts, dphi, dphi)
    return scatter_matrix(space, local).astype(np.complex128)


def interpolate(space, fn):
    """Nodal interpolant of fn; Dirichlet boundary values are implicitly zero."""
    vals = np.asarray([fn(x) for x in space.dof_coords], dtype=np.complex128)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        x = space.dof_coords[np.argmax(bad)]
        raise InputError(f"non-finite sample fn({x}) during interpolation")
    return vals


def element_values(space, v, ref_pts):
    """Values and derivatives of the FE function on every element.

    ref_pts are reference coordinates in [0, 1]; returns (u, du) arrays of
    shape (num_elements, len(ref_pts)).
    """
    phi = lagrange_basis(space.ref_nodes, ref_pts)
    dphi = lagrange_basis_deriv(space.ref_nodes, ref_pts)
    v_ext = np.concatenate([np.asarray(v, dtype=np.complex128), [0.0]])
    local = v_ext[space.dof_map]  # -1 picks up the trailing zero
    return local @ phi.T, (local @ dphi.T) / space.mesh.h


def evaluate(space, v, x):
    """(value, derivative) of the FE function at a point x in [a, b]."""
    mesh = space.mesh
    if not mesh.a <= x <= mesh.b:
        raise InputError(f"evaluation point x={x} outside [{mesh.a}, {mesh.b}]")
    e = min(int((x - mesh.a) / mesh.h), mesh.num_elements - 1)
    xi = (x - mesh.a) / mesh.h - e
    phi = lagrange_basis(space.ref_nodes, np.array([xi]))[0]
    dphi = lagrange_basis_deriv(space.ref_nodes, np.array([xi]))[0]
    v_ext = np.concatenate([np.asarray(v, dtype=np.complex128), [0.0]])
    local = v_ext[space.dof_map[e]]
    return local @ phi, (local @ dphi) / mesh.h


def quadrature_coords(space, ref_pts):
    """Physical coordinates of the per-element reference points; shape (M, nq)."""
    mesh = space.mesh
    return mesh.a + (np.arange(mesh.num_elements)[:, None] + ref_pts[None, :]) * mesh.h


def integrate_density(space, v, density, nq):
    """Integrate density(u, u', x) over the domain with nq Gauss points per element."""
    pts, wts = reference_quadrature(nq)
    u, du = element_values(space, v, pts)
    x = quadrature_coords(space, pts)
    vals = density(u, du, x)
    return float(space.mesh.h * np.sum(wts[None, :] * vals))


def error_norms(space, v, exact, exact_grad, nq=None):
    """(L2, H1) errors of the FE function against exact/exact_grad callables."""
    nq = space.degree + 3 if nq is None else nq
    pts, wts = reference_quadrature(nq)
    u, du = element_values(space, v, pts)
    x = quadrature_coords(space, pts)
    ue = np.asarray(exact(x), dtype=np.complex128)
    ge = np.asarray(exact_grad(x), dtype=np.complex128)
    l2_sq = space.mesh.h * np.sum(wts[None, :] * np.abs(u - ue) ** 2)
    grad_sq = space.mesh.h * np.sum(wts[None, :] * np.abs(du - ge) ** 2)
    return float(np.sqrt(l2_sq)), float(np.sqrt(l2_sq + grad_sq))
