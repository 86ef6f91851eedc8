"""Finite-element mean exit time for the two-stage (k = 2) diffusion.

The domain is the simplex {y1 + y2 <= N, y >= 0} with the corner square
[0, eps]^2 removed; the two short segments closing the corner are the
absorbing boundary, the rest is reflecting.  Quadratic triangular elements,
degree-4 quadrature, sparse direct solve of the nonsymmetric system.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import Delaunay, cKDTree

from .errors import MeshFailureError, NumericalFailureError, OutOfDomainError
from .model import ModelParams

log = logging.getLogger(__name__)

DEFAULT_DENSITIES = (10, 10, 100, 100, 100)  # B1a, B1b, B2, B3, B4


@dataclass(frozen=True)
class Domain2D:
    """Truncated-simplex domain with absorbing level ``epsilon``."""

    n_pop: float
    epsilon: float = 0.5

    def __post_init__(self):
        if not 0 < self.epsilon < self.n_pop:
            raise OutOfDomainError("epsilon must lie in (0, N)")

    def segments(self):
        """The five analytic boundary segments, absorbing ones first."""
        n, e = float(self.n_pop), self.epsilon
        return [
            ("B1a", (0.0, e), (e, e), True),
            ("B1b", (e, e), (e, 0.0), True),
            ("B2", (e, 0.0), (n, 0.0), False),
            ("B3", (n, 0.0), (0.0, n), False),
            ("B4", (0.0, n), (0.0, e), False),
        ]

    def area(self) -> float:
        return 0.5 * self.n_pop ** 2 - self.epsilon ** 2

    def contains(self, x, y, slack=0.0):
        inside = (x >= -slack) & (y >= -slack) \
            & (x + y <= self.n_pop + slack) \
            & ((x >= self.epsilon - slack) | (y >= self.epsilon - slack))
        return inside


@dataclass
class Mesh:
    """Conforming triangulation plus the quadratic-element node layout."""

    vertices: np.ndarray          # (nv, 2)
    triangles: np.ndarray         # (nt, 3) CCW vertex indices
    nodes: np.ndarray = field(init=False)      # (nn, 2) vertices + midpoints
    tri_nodes: np.ndarray = field(init=False)  # (nt, 6) dof map
    domain: Domain2D | None = None

    def __post_init__(self):
        nv = len(self.vertices)
        edge_ids: dict[tuple[int, int], int] = {}
        mids = []
        tri_nodes = np.empty((len(self.triangles), 6), dtype=np.int64)
        for t, tri in enumerate(self.triangles):
            tri_nodes[t, :3] = tri
            # local edges opposite each vertex order: (1,2), (2,0), (0,1)
            for loc, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
                key = tuple(sorted((tri[a], tri[b])))
                if key not in edge_ids:
                    edge_ids[key] = nv + len(mids)
                    mids.append(0.5 * (self.vertices[key[0]]
                                       + self.vertices[key[1]]))
                tri_nodes[t, 3 + loc] = edge_ids[key]
        self.nodes = np.vstack([self.vertices, np.array(mids)])
        self.tri_nodes = tri_nodes

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))

    def typical_edge_length(self) -> float:
        return float(np.median(np.sqrt(2.0 * self.triangle_areas())))


def _segment_points(p0, p1, n_seg):
    t = np.linspace(0.0, 1.0, n_seg + 1)[:, None]
    return (1.0 - t) * np.asarray(p0) + t * np.asarray(p1)


def build_mesh(domain: Domain2D,
               boundary_densities=DEFAULT_DENSITIES) -> Mesh:
    """Triangulate the domain with boundary nodes exactly on the five
    analytic segments; interior nodes on a graded lattice (fine near the
    absorbing corner), Delaunay-connected, corner square removed."""
    if len(boundary_densities) != 5:
        raise OutOfDomainError("expected one density per boundary segment")
    if min(boundary_densities) < 4:
        raise OutOfDomainError("boundary densities must be >= 4")
    n, eps = float(domain.n_pop), domain.epsilon
    pts = []
    for (name, p0, p1, _), dens in zip(domain.segments(), boundary_densities):
        pts.append(_segment_points(p0, p1, dens)[:-1])  # drop shared endpoint
    boundary = np.vstack(pts)

    h = (n - eps) / boundary_densities[2]       # coarse interior spacing
    hf = 2.0 * eps / boundary_densities[0]      # fine spacing near the corner
    fine_extent = min(6.0 * eps, 0.25 * n)

    def lattice(spacing, x_max, y_max):
        rows = int(np.ceil(y_max / (spacing * np.sqrt(3) / 2))) + 1
        cols = int(np.ceil(x_max / spacing)) + 1
        jj, ii = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
        x = ii * spacing + (jj % 2) * spacing / 2.0
        y = jj * spacing * np.sqrt(3) / 2.0
        return np.column_stack([x.ravel(), y.ravel()])

    def keep(p, spacing):
        x, y = p[:, 0], p[:, 1]
        m = (x >= 0.55 * spacing) & (y >= 0.55 * spacing)
        m &= (n - x - y) >= 0.55 * spacing
        # stay clear of the absorbing corner square by the local spacing
        m &= (x >= eps + 0.55 * spacing) | (y >= eps + 0.55 * spacing)
        return p[m]

    coarse = keep(lattice(h, n, n), h)
    coarse = coarse[coarse[:, 0] + coarse[:, 1] <= n]
    coarse = coarse[np.maximum(coarse[:, 0], coarse[:, 1]) > fine_extent]
    fine = keep(lattice(hf, fine_extent, fine_extent), hf)
    fine = fine[np.maximum(fine[:, 0], fine[:, 1]) <= fine_extent - 0.5 * hf]
    points = np.vstack([boundary, coarse, fine])

    tri = Delaunay(points)
    simplices = tri.simplices
    cent = points[simplices].mean(axis=1)
    good = domain.contains(cent[:, 0], cent[:, 1], slack=-1e-12)
    # drop slivers the hull may create along collinear boundary points
    p = points[simplices]
    areas = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                   - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    good &= np.abs(areas) > 1e-10 * h * h
    simplices = simplices[good]
    areas = areas[good]
    flip = areas < 0
    simplices[flip] = simplices[flip][:, ::-1]

    used = np.unique(simplices)
    remap = -np.ones(len(points), dtype=np.int64)
    remap[used] = np.arange(len(used))
    mesh = Mesh(vertices=points[used], triangles=remap[simplices],
                domain=domain)

    areas = mesh.triangle_areas()
    if (areas <= 0).any():
        raise MeshFailureError("triangulation contains degenerate triangles",
                               n_bad=int((areas <= 0).sum()))
    total = float(areas.sum())
    if abs(total - domain.area()) > 1e-3 * domain.area():
        raise MeshFailureError(
            "mesh does not tile the domain",
            mesh_area=total, domain_area=domain.area(),
        )
    return mesh


def boundary_nodes(mesh: Mesh, absorbing_only=True) -> np.ndarray:
    """Indices of quadratic nodes on the absorbing segments."""
    dom = mesh.domain
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    tol = 1e-9 * max(1.0, dom.n_pop)
    eps = dom.epsilon
    on_b1a = (np.abs(y - eps) <= tol) & (x <= eps + tol)
    on_b1b = (np.abs(x - eps) <= tol) & (y <= eps + tol)
    mask = on_b1a | on_b1b
    if not absorbing_only:
        mask |= (np.abs(x) <= tol) | (np.abs(y) <= tol) \
            | (np.abs(x + y - dom.n_pop) <= tol)
    return np.nonzero(mask)[0]


# quadratic basis on the reference triangle (barycentric l0, l1, l2)
def _p2_basis(l0, l1, l2):
    return np.array([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l1 * l2, 4 * l2 * l0, 4 * l0 * l1,
    ])


def _p2_grad_bary(l0, l1, l2):
    """d(phi)/d(l0,l1,l2) at a barycentric point, shape (6, 3)."""
    g = np.zeros((6, 3))
    g[0, 0] = 4 * l0 - 1
    g[1, 1] = 4 * l1 - 1
    g[2, 2] = 4 * l2 - 1
    g[3, 1] = 4 * l2
    g[3, 2] = 4 * l1
    g[4, 2] = 4 * l0
    g[4, 0] = 4 * l2
    g[5, 0] = 4 * l1
    g[5, 1] = 4 * l0
    return g


# 6-point degree-4 quadrature (barycentric coordinates and weights summing 1)
_QP = np.array([
    [0.108103018168070, 0.445948490915965, 0.445948490915965],
    [0.445948490915965, 0.108103018168070, 0.445948490915965],
    [0.445948490915965, 0.445948490915965, 0.108103018168070],
    [0.816847572980459, 0.091576213509771, 0.091576213509771],
    [0.091576213509771, 0.816847572980459, 0.091576213509771],
    [0.091576213509771, 0.091576213509771, 0.816847572980459],
])
_QW = np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)


def erlang2_coefficients(params: ModelParams):
    """Drift/diffusion coefficient functions of the k = 2 backward equation.

    Returns a callable mapping point arrays (x, y) to
    (A1, A2, B11, B12, B22, D1, D2) where D_i = sum_j dB_ij/dy_j.
    """
    if params.k_stages != 2:
        raise OutOfDomainError("these coefficients are for k_stages == 2")
    beta, gamma, n = params.beta, params.gamma, params.n_pop

    def coeff(x, y):
        s = x + y
        f = (beta / n) * s * (n - s)
        a1 = f - 2.0 * gamma * x
        a2 = 2.0 * gamma * (x - y)
        b11 = f + 2.0 * gamma * x
        b12 = -2.0 * gamma * x
        b22 = 2.0 * gamma * s
        d1 = (beta / n) * (n - 2.0 * s) + 2.0 * gamma
        d2 = np.zeros_like(np.asarray(x, dtype=float))
        return a1, a2, b11, b12, b22, d1, d2

    return coeff


@dataclass
class MeshSolution:
    """Nodal mean exit times on the quadratic mesh."""

    mesh: Mesh
    tau: np.ndarray
    negative_overshoot: bool = False

    def evaluate(self, points) -> np.ndarray:
        """Quadratic interpolation at arbitrary points inside the domain."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        mesh = self.mesh
        verts = mesh.vertices[mesh.triangles]
        cent = verts.mean(axis=1)
        tree = cKDTree(cent)
        out = np.empty(len(points))
        n_cand = min(40, len(cent))
        for i, pt in enumerate(points):
            _, cand = tree.query(pt, k=n_cand)
            cand = np.atleast_1d(cand)
            found = False
            for t in cand:
                p0, p1, p2 = verts[t]
                mat = np.array([[p1[0] - p0[0], p2[0] - p0[0]],
                                [p1[1] - p0[1], p2[1] - p0[1]]])
                r = np.linalg.solve(mat, pt - p0)
                l1, l2 = r
                l0 = 1.0 - l1 - l2
                if min(l0, l1, l2) >= -1e-9:
                    phi = _p2_basis(l0, l1, l2)
                    out[i] = float(phi @ self.tau[mesh.tri_nodes[t]])
                    found = True
                    break
            if not found:
                raise OutOfDomainError(f"point {pt} not inside the mesh")
        return out

    def dump_text(self, path):
        """Plain-text (x, y, tau) triplets written triangle-wise: three
        corners, the first corner repeated, then a blank block."""
        mesh = self.mesh
        with open(path, "w") as fh:
            for tri in mesh.triangles:
                for v in tri:
                    fh.write(f"{mesh.vertices[v, 0]} {mesh.vertices[v, 1]} "
                             f"{self.tau[v]}\n")
                v = tri[0]
                fh.write(f"{mesh.vertices[v, 0]} {mesh.vertices[v, 1]} "
                         f"{self.tau[v]}\n\n\n")


def assemble(mesh: Mesh, coeff, dirichlet: np.ndarray):
    """Assemble the variational form

        1/2 int [ B_ij dTau_i dW_j + W (dB_ij/dy_j) dTau_i ]
        - int A_i W dTau_i  =  int W

    with essential conditions tau = 0 on the given nodes."""
    verts = mesh.vertices[mesh.triangles]
    nt = len(mesh.triangles)
    # affine maps
    j11 = verts[:, 1, 0] - verts[:, 0, 0]
    j12 = verts[:, 2, 0] - verts[:, 0, 0]
    j21 = verts[:, 1, 1] - verts[:, 0, 1]
    j22 = verts[:, 2, 1] - verts[:, 0, 1]
    det = j11 * j22 - j12 * j21
    # gradients of barycentric coords: l1 = r, l2 = s, l0 = 1 - r - s, and
    # grad_xy = invJ^T @ grad_rs
    inv11 = j22 / det
    inv12 = -j12 / det
    inv21 = -j21 / det
    inv22 = j11 / det

    k_local = np.zeros((nt, 6, 6))
    f_local = np.zeros((nt, 6))
    for (l0, l1, l2), w in zip(_QP, _QW):
        xq = l0 * verts[:, 0, 0] + l1 * verts[:, 1, 0] + l2 * verts[:, 2, 0]
        yq = l0 * verts[:, 0, 1] + l1 * verts[:, 1, 1] + l2 * verts[:, 2, 1]
        a1, a2, b11, b12, b22, d1, d2 = coeff(xq, yq)
        phi = _p2_basis(l0, l1, l2)               # (6,)
        gb = _p2_grad_bary(l0, l1, l2)            # (6, 3)
        # reference (r, s) gradients: d/dr = d/dl1 - d/dl0, d/ds = d/dl2 - d/dl0
        gr = gb[:, 1] - gb[:, 0]
        gs = gb[:, 2] - gb[:, 0]
        gx = np.einsum("t,i->ti", inv11, gr) + np.einsum("t,i->ti", inv21, gs)
        gy = np.einsum("t,i->ti", inv12, gr) + np.einsum("t,i->ti", inv22, gs)
        scale = w * 0.5 * det                      # quadrature x area element
        # diffusion part: 1/2 B_ij dTau/dy_i dW/dy_j  (test index a = rows)
        k_local += 0.5 * np.einsum("t,ta,tb->tab", scale * b11, gx, gx)
        k_local += 0.5 * np.einsum("t,ta,tb->tab", scale * b12, gy, gx)
        k_local += 0.5 * np.einsum("t,ta,tb->tab", scale * b12, gx, gy)
        k_local += 0.5 * np.einsum("t,ta,tb->tab", scale * b22, gy, gy)
        # 1/2 W (dB_ij/dy_j) dTau/dy_i  and  - A_i W dTau/dy_i
        cx = 0.5 * d1 - a1
        cy = 0.5 * d2 - a2
        k_local += np.einsum("t,a,tb->tab", scale * cx, phi, gx)
        k_local += np.einsum("t,a,tb->tab", scale * cy, phi, gy)
        f_local += np.einsum("t,a->ta", scale, phi)

    dofs = mesh.tri_nodes
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    mat = sp.coo_matrix((k_local.ravel(), (rows, cols)),
                        shape=(mesh.n_nodes, mesh.n_nodes)).tocsr()
    rhs = np.zeros(mesh.n_nodes)
    np.add.at(rhs, dofs.ravel(), f_local.ravel())

    # essential boundary conditions by row replacement
    mask = np.zeros(mesh.n_nodes, dtype=bool)
    mask[dirichlet] = True
    mat = mat.tolil()
    for i in dirichlet:
        mat.rows[i] = [int(i)]
        mat.data[i] = [1.0]
    rhs[mask] = 0.0
    return mat.tocsr(), rhs


def solve_backward(params: ModelParams, mesh: Mesh,
                   regularize: bool = False) -> MeshSolution:
    """Solve the k = 2 backward equation on the mesh (quadratic elements,
    sparse LU, relative residual < 1e-10).

    The operator loses ellipticity on parts of the boundary; a singular
    factorization is reported, not silently regularized (pass
    ``regularize=True`` for a 1e-12 diagonal shift).
    """
    coeff = erlang2_coefficients(params)
    dirichlet = boundary_nodes(mesh)
    mat, rhs = assemble(mesh, coeff, dirichlet)
    if regularize:
        mat = mat + 1e-12 * sp.eye(mesh.n_nodes, format="csr")
    try:
        lu = spla.splu(mat.tocsc())
        tau = lu.solve(rhs)
    except RuntimeError as exc:
        raise NumericalFailureError(
            f"sparse factorization failed: {exc}; the operator is not "
            "uniformly elliptic on this domain"
        ) from exc
    tau = tau + lu.solve(rhs - mat @ tau)  # one step of iterative refinement
    # normwise backward error: ||r|| / (||A|| ||tau|| + ||b||)
    r = mat @ tau - rhs
    scale = (sp.linalg.norm(mat, np.inf) * np.linalg.norm(tau, np.inf)
             + np.linalg.norm(rhs, np.inf))
    resid = np.linalg.norm(r, np.inf) / scale
    if not np.isfinite(tau).all() or resid > 1e-10:
        raise NumericalFailureError("FEM solve missed the residual contract",
                                    residual=float(resid))
    overshoot = float(-min(tau.min(), 0.0))
    flagged = overshoot > 1e-6 * tau.max()
    if flagged:
        log.warning("FEM solution has negative overshoot %.3e (max tau %.3e)",
                    overshoot, tau.max())
    return MeshSolution(mesh=mesh, tau=tau, negative_overshoot=flagged)


def query_at_endemic(solution: MeshSolution, params: ModelParams):
    """Nodal value nearest to the endemic point N y*, plus diagnostics:
    distance to that node and the relative spread of tau over nodes within
    two typical edge lengths (the surface is expected to be flat there)."""
    target = params.n_pop * params.endemic_fraction_vector()
    if len(target) != 2:
        raise OutOfDomainError("endemic query requires k_stages == 2")
    mesh = solution.mesh
    d = np.linalg.norm(mesh.nodes - target, axis=1)
    idx = int(np.argmin(d))
    edge = mesh.typical_edge_length()
    near = d <= 2.0 * edge
    vals = solution.tau[near]
    spread = float((vals.max() - vals.min()) / max(abs(solution.tau[idx]),
                                                   1e-300))
    return {
        "tau": float(solution.tau[idx]),
        "node": idx,
        "distance": float(d[idx]),
        "local_spread": spread,
    }
