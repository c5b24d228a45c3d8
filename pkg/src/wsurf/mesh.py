"""Oriented triangle meshes with boundary and cotan-based discrete curvature.

Face orientation follows the patch normal: a face ``(a, b, c)`` has normal
along ``(b - a) x (c - a)``, which matches ``n`` of the tessellated patch.
Discrete mean curvature uses the same sign convention as the smooth code
(the unit sphere with inward normal has ``H = 2``): the cotan Laplacian of
the position is ``H n``.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay

from . import _kernels
from .errors import ClosedSurface, DegenerateTriangle, InvalidParams, NonManifold, ParseError


# ---------------------------------------------------------------------------
# the mesh type
# ---------------------------------------------------------------------------
class TriMesh:
    """Vertices, oriented faces, boundary loops and a curvature cache."""

    def __init__(self, vertices, faces, check=True):
        V = np.array(vertices, dtype=float)
        Fc = np.array(faces, dtype=np.int64)
        if V.ndim != 2 or V.shape[1] != 3:
            raise InvalidParams("vertices must have shape (n, 3)")
        if Fc.size == 0:
            Fc = Fc.reshape(0, 3)
        if Fc.ndim != 2 or Fc.shape[1] != 3:
            raise InvalidParams("faces must have shape (m, 3)")
        if Fc.size and (Fc.min() < 0 or Fc.max() >= len(V)):
            raise InvalidParams("face index out of range")
        if np.any((Fc[:, 0] == Fc[:, 1]) | (Fc[:, 1] == Fc[:, 2]) | (Fc[:, 0] == Fc[:, 2])):
            raise InvalidParams("face with repeated vertex")
        self._V = V
        self.faces = Fc
        self._version = 0
        self._cache = {}
        self._topology(check)

    # -- topology ---------------------------------------------------------
    def _topology(self, check):
        F = self.faces
        he = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
        und = np.sort(he, axis=1)
        keys, counts = np.unique(und, axis=0, return_counts=True)
        if check and len(counts) and counts.max() > 2:
            e = keys[np.argmax(counts > 2)]
            raise NonManifold(f"edge ({e[0]}, {e[1]}) is shared by more than two faces", edge=(int(e[0]), int(e[1])))
        dkeys, dcounts = np.unique(he, axis=0, return_counts=True)
        if check and len(dcounts) and dcounts.max() > 1:
            e = dkeys[np.argmax(dcounts > 1)]
            raise NonManifold(f"inconsistent face orientation at edge ({e[0]}, {e[1]})", edge=(int(e[0]), int(e[1])))
        self.edges = keys
        # boundary half-edges: those whose reverse is absent
        nv = len(self._V)
        code = he[:, 0] * nv + he[:, 1]
        rev = he[:, 1] * nv + he[:, 0]
        bmask = ~np.isin(code, rev)
        bhe = he[bmask]
        nxt = {}
        for a, b in bhe:
            if a in nxt:
                if check:
                    raise NonManifold(f"vertex {a} has more than one outgoing boundary edge", edge=(int(a), int(b)))
            nxt[int(a)] = int(b)
        loops, seen = [], set()
        for start in sorted(nxt):
            if start in seen:
                continue
            loop, v = [], start
            while v not in seen:
                seen.add(v)
                loop.append(v)
                v = nxt.get(v)
                if v is None:
                    raise NonManifold("open boundary chain", edge=(loop[-1], -1))
            loops.append(np.array(loop, dtype=np.int64))
        self.boundary_loops = loops
        self.boundary_mask = np.zeros(nv, dtype=bool)
        for lp in loops:
            self.boundary_mask[lp] = True
        self.used = np.zeros(nv, dtype=bool)
        self.used[F.ravel()] = True

    # -- vertex data --------------------------------------------------------
    @property
    def vertices(self):
        return self._V

    @vertices.setter
    def vertices(self, V):
        V = np.array(V, dtype=float)
        if V.shape != self._V.shape:
            raise InvalidParams("vertex array shape cannot change")
        self._V = V
        self._version += 1
        self._cache.clear()

    @property
    def n_vertices(self):
        return len(self._V)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def interior_mask(self):
        return self.used & ~self.boundary_mask

    def copy(self):
        m = TriMesh.__new__(TriMesh)
        m.__dict__.update(self.__dict__)
        m._V = self._V.copy()
        m._cache = {}
        return m

    def with_vertices(self, V):
        m = self.copy()
        m.vertices = V
        return m

    def euler_characteristic(self):
        return int(np.count_nonzero(self.used)) - len(self.edges) + self.n_faces

    def bbox_diagonal(self):
        V = self._V[self.used]
        return float(np.linalg.norm(V.max(axis=0) - V.min(axis=0))) if len(V) else 0.0

    def neighbor_pairs(self):
        """Directed vertex pairs ``(i, j)`` over all mesh edges, both ways."""
        p = self._cache.get("pairs")
        if p is None:
            e = self.edges
            p = np.concatenate([e, e[:, ::-1]])
            self._cache["pairs"] = p
        return p


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------
def tessellate(patch, n_s: int, n_t: int) -> TriMesh:
    """Regular parameter grid split along the ``(i, j)-(i+1, j+1)`` diagonal.

    Periodic axes are stitched and edges that collapse to a point (poles,
    disk centres) become a single vertex.
    """
    if n_s < 2 or n_t < 2:
        raise InvalidParams("tessellate needs n_s, n_t >= 2")
    ps, pt = patch.periodic
    s = np.linspace(*patch.s_range, n_s + 1)
    t = np.linspace(*patch.t_range, n_t + 1)
    ns, nt = (n_s if ps else n_s + 1), (n_t if pt else n_t + 1)
    S, T = np.meshgrid(s[:ns], t[:nt], indexing="ij")
    idx = np.arange(ns * nt).reshape(ns, nt)
    # collapse degenerate edges onto their first vertex
    deg = patch.degenerate
    if "s0" in deg:
        idx[0, :] = idx[0, 0]
    if "s1" in deg:
        idx[-1, :] = idx[-1, 0]
    if "t0" in deg:
        idx[:, 0] = idx[0, 0]
    if "t1" in deg:
        idx[:, -1] = idx[0, -1]
    V = patch.position(S.ravel(), T.ravel())
    faces = []
    for i in range(n_s):
        i1 = (i + 1) % ns
        for j in range(n_t):
            j1 = (j + 1) % nt
            a, b, c, d = idx[i, j], idx[i1, j], idx[i1, j1], idx[i, j1]
            faces.append((a, b, c))
            faces.append((a, c, d))
    F = np.array(faces, dtype=np.int64)
    F = F[(F[:, 0] != F[:, 1]) & (F[:, 1] != F[:, 2]) & (F[:, 0] != F[:, 2])]
    if patch.sign < 0:
        F = F[:, [0, 2, 1]]
    # drop unreferenced vertices and renumber
    used = np.unique(F)
    remap = np.full(len(V), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriMesh(V[used], remap[F])


def disk_mesh(resolution=48, radius=1.0, height=None, orientation=1):
    """Disk from concentric rings, Delaunay-triangulated in the plane.

    Ring ``k`` (``k = 1..resolution``) has ``6 k`` vertices at radius
    ``k / resolution * radius``, which keeps triangles close to equilateral.
    ``height(x, y)`` lifts the vertices to a graph.
    """
    if resolution < 1 or not radius > 0:
        raise InvalidParams("disk_mesh needs resolution >= 1 and radius > 0")
    pts = [np.zeros((1, 2))]
    for k in range(1, resolution + 1):
        a = 2 * np.pi * np.arange(6 * k) / (6 * k)
        pts.append(radius * k / resolution * np.stack([np.cos(a), np.sin(a)], -1))
    P = np.concatenate(pts)
    F = Delaunay(P).simplices.astype(np.int64)
    # counter-clockwise in the plane gives the +z normal
    e1, e2 = P[F[:, 1]] - P[F[:, 0]], P[F[:, 2]] - P[F[:, 0]]
    cw = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    F[cw] = F[cw][:, [0, 2, 1]]
    if orientation == -1:
        F = F[:, [0, 2, 1]]
    z = np.zeros(len(P)) if height is None else np.asarray(height(P[:, 0], P[:, 1]), dtype=float)
    return TriMesh(np.column_stack([P, z]), F)


# ---------------------------------------------------------------------------
# discrete curvature
# ---------------------------------------------------------------------------
@dataclass
class VertexCurvatures:
    n: np.ndarray
    H: np.ndarray
    K: np.ndarray
    area: np.ndarray
    Hvec: np.ndarray
    boundary: np.ndarray
    mesh: "TriMesh" = None

    @property
    def S(self):
        """Fitted shape operators, computed on first use."""
        S = self.mesh._cache.get("S")
        if S is None:
            S = fit_shape_operator(self.mesh, self.n)
            self.mesh._cache["S"] = S
        return S

    def interior(self):
        return ~self.boundary


def _face_data(mesh):
    fd = mesh._cache.get("face")
    if fd is None:
        ang, cot, area = _kernels.face_data(mesh.vertices, mesh.faces)
        bad = area < 1e-14 * mesh.bbox_diagonal() ** 2
        if np.any(bad):
            f = int(np.argmax(bad))
            raise DegenerateTriangle(f"face {f} has area {area[f]:.3g}", face=f)
        fd = (ang, cot, area)
        mesh._cache["face"] = fd
    return fd


def mixed_areas(mesh):
    """Mixed Voronoi area and interior-angle sum at every vertex."""
    va = mesh._cache.get("varea")
    if va is None:
        ang, cot, area = _face_data(mesh)
        va = _kernels.vertex_accumulate(mesh.vertices, mesh.faces, ang, cot, area, mesh.n_vertices)
        mesh._cache["varea"] = va
    return va


def vertex_normals(mesh):
    V, F = mesh.vertices, mesh.faces
    fn = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
    n = np.zeros_like(V)
    for k in range(3):
        np.add.at(n, F[:, k], fn)
    nn = np.linalg.norm(n, axis=1)
    nn[nn == 0] = 1.0
    return n / nn[:, None]


def _tangent_basis(n):
    a = np.where(np.abs(n[:, :1]) < 0.9, np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]))
    e1 = np.cross(n, a)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(n, e1)
    return e1, e2


def fit_shape_operator(mesh, n):
    """Per-vertex shape operator from a least-squares fit of the normal field.

    On the 1-ring, ``n_j - n_i = -S (r_j - r_i) + c`` is fitted in the
    tangent plane with ``S`` symmetric.  The constant ``c`` absorbs a tilt of
    the vertex normal itself, which one-sided rings at the boundary would
    otherwise turn into an O(1) curvature error.  Returned as ambient 3x3
    matrices.
    """
    V = mesh.vertices
    i, j = mesh.neighbor_pairs().T
    e1, e2 = _tangent_basis(n)
    d = V[j] - V[i]
    dn = n[j] - n[i]
    x = np.einsum("ij,ij->i", d, e1[i])
    y = np.einsum("ij,ij->i", d, e2[i])
    p = -np.einsum("ij,ij->i", dn, e1[i])
    q = -np.einsum("ij,ij->i", dn, e2[i])
    # p = a x + b y + c1 ;  q = b x + c y + c2
    z, o = np.zeros_like(x), np.ones_like(x)
    rows = np.stack([np.stack([x, y, z, o, z], -1), np.stack([z, x, y, z, o], -1)], 1)
    rhs = np.stack([p, q], -1)
    nv = len(V)
    AtA = np.zeros((nv, 5, 5))
    Atb = np.zeros((nv, 5))
    np.add.at(AtA, i, np.einsum("kri,krj->kij", rows, rows))
    np.add.at(Atb, i, np.einsum("kri,kr->ki", rows, rhs))
    AtA += 1e-14 * np.eye(5) * (np.trace(AtA, axis1=1, axis2=2)[:, None, None] + 1e-300)
    sol = np.linalg.solve(AtA, Atb[..., None])[..., 0]
    a, b, c = sol[:, 0], sol[:, 1], sol[:, 2]
    S = (
        a[:, None, None] * np.einsum("ni,nj->nij", e1, e1)
        + b[:, None, None] * (np.einsum("ni,nj->nij", e1, e2) + np.einsum("ni,nj->nij", e2, e1))
        + c[:, None, None] * np.einsum("ni,nj->nij", e2, e2)
    )
    return S


def vertex_curvatures(mesh: TriMesh) -> VertexCurvatures:
    """Discrete n, H, K, S and mixed areas per vertex.

    Interior vertices: ``H = sign(<L r, n>) |L r|`` and ``K`` from the angle
    defect.  Boundary vertices (flagged) get the normal projection
    ``<L r, n>`` and the boundary angle defect ``pi - sum``, both one-sided.
    """
    vc = mesh._cache.get("curv")
    if vc is not None:
        return vc
    _, cot, _ = _face_data(mesh)
    A, angsum = mixed_areas(mesh)
    Asafe = np.where(A > 0, A, 1.0)
    Hvec = _kernels.cotan_apply(mesh.faces, cot, mesh.vertices) / Asafe[:, None]
    n = vertex_normals(mesh)
    proj = np.einsum("ij,ij->i", Hvec, n)
    b = mesh.boundary_mask
    H = np.where(b, proj, np.sign(proj) * np.linalg.norm(Hvec, axis=1))
    K = np.where(b, np.pi - angsum, 2 * np.pi - angsum) / Asafe
    unused = ~mesh.used
    H[unused] = 0.0
    K[unused] = 0.0
    vc = VertexCurvatures(n, H, K, A, Hvec, b.copy(), mesh)
    mesh._cache["curv"] = vc
    return vc


def cotan_laplacian(mesh: TriMesh, phi, normalized=True):
    """Cotan Laplace-Beltrami of a vertex field.

    Returns ``(values, boundary_flags)``.  With ``normalized`` the cotan sum
    is divided by the mixed area; boundary rows are the one-sided operator.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape[0] != mesh.n_vertices:
        raise InvalidParams("field must have one value per vertex")
    _, cot, _ = _face_data(mesh)
    out = _kernels.cotan_apply(mesh.faces, cot, phi)
    if normalized:
        A, _ = mixed_areas(mesh)
        A = np.where(A > 0, A, 1.0)
        out = out / (A if out.ndim == 1 else A[:, None])
    return out, mesh.boundary_mask.copy()


def cotan_matrix(mesh: TriMesh):
    """Sparse symmetric cotan stiffness ``L`` with ``(L phi)_i = 0.5 sum cot (phi_j - phi_i)``."""
    from scipy.sparse import coo_matrix

    _, cot, _ = _face_data(mesh)
    F = mesh.faces
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j = F[:, (k + 1) % 3], F[:, (k + 2) % 3]
        w = 0.5 * cot[:, k]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [w, w, -w, -w]
    nv = mesh.n_vertices
    L = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nv, nv))
    return L.tocsr()


def ring_gradient_hessian(mesh: TriMesh, phi, n=None):
    """Least-squares quadratic fit of a vertex field over the 1-ring.

    Returns ambient gradients (nv, 3) and tangent Hessians as ambient 3x3
    matrices.  First-order accurate; used for the ``<h, Hess F_K>`` term.
    """
    V = mesh.vertices
    if n is None:
        n = vertex_normals(mesh)
    i, j = mesh.neighbor_pairs().T
    e1, e2 = _tangent_basis(n)
    d = V[j] - V[i]
    x = np.einsum("ij,ij->i", d, e1[i])
    y = np.einsum("ij,ij->i", d, e2[i])
    rows = np.stack([x, y, 0.5 * x * x, x * y, 0.5 * y * y], -1)
    rhs = phi[j] - phi[i]
    nv = len(V)
    AtA = np.zeros((nv, 5, 5))
    Atb = np.zeros((nv, 5))
    np.add.at(AtA, i, np.einsum("ki,kj->kij", rows, rows))
    np.add.at(Atb, i, rows * rhs[:, None])
    AtA += 1e-12 * np.eye(5) * (np.trace(AtA, axis1=1, axis2=2)[:, None, None] + 1e-300)
    c = np.linalg.solve(AtA, Atb[..., None])[..., 0]
    grad = c[:, :1] * e1 + c[:, 1:2] * e2
    E11, E12, E22 = (np.einsum("ni,nj->nij", a, b) for a, b in ((e1, e1), (e1, e2), (e2, e2)))
    hess = c[:, 2, None, None] * E11 + c[:, 3, None, None] * (E12 + E12.transpose(0, 2, 1)) + c[:, 4, None, None] * E22
    return grad, hess


# ---------------------------------------------------------------------------
# boundary frames
# ---------------------------------------------------------------------------
@dataclass
class DiscreteBoundary:
    vertex: np.ndarray
    loop: np.ndarray
    r: np.ndarray
    T: np.ndarray
    n: np.ndarray
    eta: np.ndarray
    kappa_n: np.ndarray
    tau_g: np.ndarray
    h_etaeta: np.ndarray
    arc_weight: np.ndarray
    loop_length: np.ndarray


def boundary_frames(mesh: TriMesh) -> DiscreteBoundary:
    """Frame ``{T, n, eta = T x n}`` at boundary vertices, eta pointing outward.

    If a loop's traversal would give an inward ``eta`` the loop direction is
    reversed, so ``eta = T x n`` holds everywhere.
    """
    if not mesh.boundary_loops:
        raise ClosedSurface("mesh has no boundary")
    vc = vertex_curvatures(mesh)
    V = mesh.vertices
    pairs = mesh.neighbor_pairs()
    nbr_sum = np.zeros_like(V)
    nbr_cnt = np.zeros(len(V))
    np.add.at(nbr_sum, pairs[:, 0], V[pairs[:, 1]])
    np.add.at(nbr_cnt, pairs[:, 0], 1.0)
    out = {k: [] for k in ("vertex", "loop", "r", "T", "n", "eta", "kn", "tg", "hee", "w", "len")}
    for li, lp in enumerate(mesh.boundary_loops):
        P = V[lp]
        Tv = np.roll(P, -1, axis=0) - np.roll(P, 1, axis=0)
        Tv /= np.linalg.norm(Tv, axis=1)[:, None]
        n = vc.n[lp]
        eta = np.cross(Tv, n)
        toward = nbr_sum[lp] / nbr_cnt[lp][:, None] - P
        if np.sum(np.einsum("ij,ij->i", eta, toward)) > 0:
            Tv, eta = -Tv, -eta
        seg = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)
        w = 0.5 * (seg + np.roll(seg, 1))
        S = vc.S[lp]
        out["vertex"].append(lp)
        out["loop"].append(np.full(len(lp), li))
        out["r"].append(P)
        out["T"].append(Tv)
        out["n"].append(n)
        out["eta"].append(eta)
        out["kn"].append(np.einsum("ni,nij,nj->n", Tv, S, Tv))
        out["tg"].append(np.einsum("ni,nij,nj->n", Tv, S, eta))
        out["hee"].append(np.einsum("ni,nij,nj->n", eta, S, eta))
        out["w"].append(w)
        out["len"].append(np.full(len(lp), seg.sum()))
    c = {k: np.concatenate(v) for k, v in out.items()}
    return DiscreteBoundary(
        c["vertex"], c["loop"], c["r"], c["T"], c["n"], c["eta"], c["kn"], c["tg"], c["hee"], c["w"], c["len"]
    )


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------
def _tokens(text):
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield ln, line.split()


def _fan(poly):
    return [(poly[0], poly[k], poly[k + 1]) for k in range(1, len(poly) - 1)]


def _parse_off(text):
    it = _tokens(text)
    try:
        ln, tok = next(it)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    if not tok[0].upper().endswith("OFF"):
        raise ParseError("missing OFF header", ln)
    tok = tok[1:]
    if not tok:
        try:
            ln, tok = next(it)
        except StopIteration:
            raise ParseError("missing counts line", ln) from None
    try:
        nv, nf = int(tok[0]), int(tok[1])
    except (ValueError, IndexError):
        raise ParseError("bad counts line", ln) from None
    V, F = [], []
    for _ in range(nv):
        try:
            ln, tok = next(it)
            V.append([float(x) for x in tok[:3]])
        except StopIteration:
            raise ParseError("unexpected end of file in vertex block", ln) from None
        except ValueError:
            raise ParseError("bad vertex line", ln) from None
        if len(V[-1]) != 3:
            raise ParseError("vertex needs three coordinates", ln)
    for _ in range(nf):
        try:
            ln, tok = next(it)
            k = int(tok[0])
            poly = [int(x) for x in tok[1 : 1 + k]]
        except StopIteration:
            raise ParseError("unexpected end of file in face block", ln) from None
        except ValueError:
            raise ParseError("bad face line", ln) from None
        if k < 3 or len(poly) != k:
            raise ParseError("face needs at least three vertex indices", ln)
        if min(poly) < 0 or max(poly) >= nv:
            raise ParseError("face index out of range", ln)
        F += _fan(poly)
    return V, F


def _parse_obj(text):
    V, F = [], []
    for ln, tok in _tokens(text):
        if tok[0] == "v":
            try:
                V.append([float(x) for x in tok[1:4]])
            except ValueError:
                raise ParseError("bad vertex line", ln) from None
            if len(V[-1]) != 3:
                raise ParseError("vertex needs three coordinates", ln)
        elif tok[0] == "f":
            poly = []
            for x in tok[1:]:
                try:
                    k = int(x.split("/")[0])
                except ValueError:
                    raise ParseError("bad face index", ln) from None
                k = k - 1 if k > 0 else len(V) + k
                if not 0 <= k < len(V):
                    raise ParseError("face index out of range", ln)
                poly.append(k)
            if len(poly) < 3:
                raise ParseError("face needs at least three vertex indices", ln)
            F += _fan(poly)
    return V, F


def load_mesh(path) -> TriMesh:
    """Read an OFF or OBJ file (positions and faces only)."""
    with open(path) as fh:
        text = fh.read()
    ext = os.path.splitext(str(path))[1].lower()
    V, F = _parse_obj(text) if ext == ".obj" else _parse_off(text)
    return TriMesh(np.array(V, dtype=float).reshape(-1, 3), np.array(F, dtype=np.int64).reshape(-1, 3))


def mesh_to_text(mesh: TriMesh, fmt="off"):
    buf = io.StringIO()
    V, F = mesh.vertices, mesh.faces
    if fmt == "off":
        buf.write(f"OFF\n{len(V)} {len(F)} 0\n")
        for v in V:
            buf.write("%.17g %.17g %.17g\n" % tuple(v))
        for f in F:
            buf.write("3 %d %d %d\n" % tuple(f))
    elif fmt == "obj":
        for v in V:
            buf.write("v %.17g %.17g %.17g\n" % tuple(v))
        for f in F:
            buf.write("f %d %d %d\n" % tuple(f + 1))
    else:
        raise InvalidParams(f"unknown mesh format {fmt!r}")
    return buf.getvalue()


def save_mesh(mesh: TriMesh, path):
    ext = os.path.splitext(str(path))[1].lower()
    with open(path, "w") as fh:
        fh.write(mesh_to_text(mesh, "obj" if ext == ".obj" else "off"))


def export_vertex_csv(mesh: TriMesh, path=None):
    """One row per vertex: index, position, H, K and a boundary flag."""
    vc = vertex_curvatures(mesh)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["vertex", "x", "y", "z", "H", "K", "boundary"])
    for i, (p, H, K, b) in enumerate(zip(mesh.vertices, vc.H, vc.K, vc.boundary)):
        w.writerow([i, repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), repr(float(H)), repr(float(K)), int(b)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def angle_defect_total(mesh: TriMesh):
    """Sum of interior angle defects plus boundary turning defects."""
    _, angsum = mixed_areas(mesh)
    b = mesh.boundary_mask
    used = mesh.used
    return float(np.sum(2 * math.pi - angsum[used & ~b]) + np.sum(math.pi - angsum[used & b]))


__all__ = [
    "DiscreteBoundary",
    "TriMesh",
    "VertexCurvatures",
    "angle_defect_total",
    "boundary_frames",
    "cotan_laplacian",
    "cotan_matrix",
    "disk_mesh",
    "export_vertex_csv",
    "fit_shape_operator",
    "load_mesh",
    "mesh_to_text",
    "mixed_areas",
    "ring_gradient_hessian",
    "save_mesh",
    "tessellate",
    "vertex_curvatures",
    "vertex_normals",
]
