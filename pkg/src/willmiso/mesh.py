"""Triangle-mesh representation, validation, combinatorics and elementary integrals.

Meshes are immutable after construction. Combinatorial data (edges, adjacency)
depends only on the face array and is shared between meshes with identical
topology via ``replace_vertices``, which keeps per-iteration rebuild cost low
inside the optimizer.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateNormal, MeshValidationError

DEGENERACY_REL_AREA = 1e-14  # face area threshold relative to bbox-diag^2


class _Topology:
    """Face-derived combinatorics, shared across meshes with the same faces."""

    def __init__(self, faces):
        self.faces = faces
        nf = len(faces)
        # directed edges in winding order, 3 per face
        de = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        self.directed_edges = de
        und = np.sort(de, axis=1)
        self.edges, self.edge_inverse, self.edge_counts = np.unique(
            und, axis=0, return_inverse=True, return_counts=True
        )
        self.n_vertices = int(faces.max()) + 1 if nf else 0
        self.n_faces = nf
        self.n_edges = len(self.edges)

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces


class TriMesh:
    """Closed oriented genus-0 triangle mesh candidate.

    Parameters
    ----------
    vertices : (n, 3) float array
    faces : (m, 3) int array, outward (counter-clockwise from outside) winding
    """

    def __init__(self, vertices, faces, _topology=None):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshValidationError("vertices must be (n, 3)")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshValidationError("faces must be (m, 3)")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshValidationError("face index out of range")
        v.setflags(write=False)
        f.setflags(write=False)
        self.vertices = v
        self.faces = f
        self._topology = _topology if _topology is not None else _Topology(f)
        self._cache = {}

    # -- construction helpers -------------------------------------------------

    def replace_vertices(self, vertices):
        """New mesh with the same faces; combinatorial caches are shared."""
        return TriMesh(vertices, self.faces, _topology=self._topology)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def topology(self):
        return self._topology

    # -- cached per-vertex/per-face geometry ----------------------------------

    def _corners(self):
        v, f = self.vertices, self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    def face_cross(self):
        """Unnormalized face normals (p1-p0) x (p2-p0); |.| = 2 * face area."""
        if "face_cross" not in self._cache:
            p0, p1, p2 = self._corners()
            self._cache["face_cross"] = np.cross(p1 - p0, p2 - p0)
        return self._cache["face_cross"]

    def face_areas(self):
        if "face_areas" not in self._cache:
            self._cache["face_areas"] = 0.5 * np.linalg.norm(self.face_cross(), axis=1)
        return self._cache["face_areas"]

    def bbox_diagonal(self):
        v = self.vertices
        return float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))

    def mean_edge_length(self):
        e = self._topology.edges
        d = self.vertices[e[:, 0]] - self.vertices[e[:, 1]]
        return float(np.mean(np.linalg.norm(d, axis=1)))

    def face_quality(self):
        """Per-face quality 4*sqrt(3)*area / sum of squared edge lengths, in (0, 1]."""
        p0, p1, p2 = self._corners()
        ssq = (
            np.sum((p1 - p0) ** 2, axis=1)
            + np.sum((p2 - p1) ** 2, axis=1)
            + np.sum((p0 - p2) ** 2, axis=1)
        )
        return 4.0 * np.sqrt(3.0) * self.face_areas() / np.maximum(ssq, 1e-300)


@dataclass
class ValidationReport:
    closed: bool
    oriented: bool
    euler_characteristic: int
    genus_zero: bool
    degenerate_faces: list = field(default_factory=list)
    boundary_edges: int = 0
    nonmanifold_edges: int = 0

    @property
    def passed(self):
        return (
            self.closed
            and self.oriented
            and self.genus_zero
            and not self.degenerate_faces
        )

    def summary(self):
        parts = [
            f"closed={self.closed}",
            f"oriented={self.oriented}",
            f"chi={self.euler_characteristic}",
            f"degenerate_faces={len(self.degenerate_faces)}",
        ]
        return ("PASS " if self.passed else "FAIL ") + " ".join(parts)


def validate(mesh: TriMesh) -> ValidationReport:
    """Check closedness, orientation, Euler characteristic and face degeneracy.

    Failures are reported, never repaired: a generator that produces a bad
    mesh must be fixed at the source.
    """
    topo = mesh.topology
    boundary = int(np.sum(topo.edge_counts == 1))
    nonmanifold = int(np.sum(topo.edge_counts > 2))
    closed = boundary == 0 and nonmanifold == 0

    # consistent orientation: each undirected edge traversed once per direction
    de = topo.directed_edges
    if len(de):
        _, dir_counts = np.unique(de, axis=0, return_counts=True)
        oriented = closed and bool(np.all(dir_counts == 1))
    else:
        oriented = False

    chi = topo.euler_characteristic()
    thresh = DEGENERACY_REL_AREA * mesh.bbox_diagonal() ** 2
    degenerate = np.nonzero(mesh.face_areas() <= thresh)[0].tolist()

    return ValidationReport(
        closed=closed,
        oriented=oriented,
        euler_characteristic=chi,
        genus_zero=(chi == 2),
        degenerate_faces=degenerate,
        boundary_edges=boundary,
        nonmanifold_edges=nonmanifold,
    )


def require_valid(mesh: TriMesh) -> None:
    report = validate(mesh)
    if not report.passed:
        raise MeshValidationError(report.summary())


def total_area(mesh: TriMesh) -> float:
    return float(np.sum(mesh.face_areas()))


def enclosed_volume(mesh: TriMesh) -> float:
    """Signed volume (1/6) sum det(p0, p1, p2); positive for outward winding."""
    p0, p1, p2 = mesh._corners()
    return float(np.sum(np.einsum("ij,ij->i", p0, np.cross(p1, p2)))) / 6.0


def _corner_cotangents(mesh: TriMesh):
    """Cotangents of the three corner angles of every face, shape (m, 3)."""
    p0, p1, p2 = mesh._corners()
    double_area = 2.0 * mesh.face_areas()
    double_area = np.maximum(double_area, 1e-300)
    cots = np.empty((mesh.n_faces, 3))
    cots[:, 0] = np.einsum("ij,ij->i", p1 - p0, p2 - p0) / double_area
    cots[:, 1] = np.einsum("ij,ij->i", p2 - p1, p0 - p1) / double_area
    cots[:, 2] = np.einsum("ij,ij->i", p0 - p2, p1 - p2) / double_area
    return cots


def vertex_areas(mesh: TriMesh):
    """Mixed Voronoi vertex areas (obtuse-safe); sums to total_area exactly."""
    f = mesh.faces
    areas = mesh.face_areas()
    cots = _corner_cotangents(mesh)
    p0, p1, p2 = mesh._corners()
    # squared lengths of the edge opposite each corner
    lsq = np.empty((mesh.n_faces, 3))
    lsq[:, 0] = np.sum((p1 - p2) ** 2, axis=1)
    lsq[:, 1] = np.sum((p2 - p0) ** 2, axis=1)
    lsq[:, 2] = np.sum((p0 - p1) ** 2, axis=1)

    # Voronoi contribution at corner c uses the two adjacent edges, weighted
    # by the cotangents of the two other corners.
    contrib = np.empty((mesh.n_faces, 3))
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        contrib[:, c] = 0.125 * (lsq[:, b] * cots[:, b] + lsq[:, a] * cots[:, a])

    obtuse_corner = np.argmin(cots, axis=1)
    is_obtuse = cots[np.arange(mesh.n_faces), obtuse_corner] < 0.0
    if np.any(is_obtuse):
        quarter = 0.25 * areas[is_obtuse]
        patch = np.tile(quarter[:, None], (1, 3))
        patch[np.arange(len(quarter)), obtuse_corner[is_obtuse]] = 2.0 * quarter
        contrib[is_obtuse] = patch

    out = np.zeros(mesh.n_vertices)
    np.add.at(out, f.ravel(), contrib.ravel())
    return out


def outward_normals(mesh: TriMesh):
    """Unit vertex normals: area-weighted average of incident face normals."""
    weighted = np.zeros((mesh.n_vertices, 3))
    half_cross = 0.5 * mesh.face_cross()
    for c in range(3):
        np.add.at(weighted, mesh.faces[:, c], half_cross)
    norms = np.linalg.norm(weighted, axis=1)
    if np.any(norms < 1e-300):
        bad = int(np.argmin(norms))
        raise DegenerateNormal(f"zero normal average at vertex {bad}")
    return weighted / norms[:, None]


def vertex_normal_thirds(mesh: TriMesh):
    """Per-vertex (1/3) sum of incident area-weighted face normals.

    This is the exact gradient of the enclosed volume, so using it as the
    discrete ``nu * dmu`` makes the divergence-theorem flux identity exact.
    """
    out = np.zeros((mesh.n_vertices, 3))
    third_cross = mesh.face_cross() / 6.0  # cross/2 * 1/3
    for c in range(3):
        np.add.at(out, mesh.faces[:, c], third_cross)
    return out


# -- generators ---------------------------------------------------------------

_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0

_ICO_VERTS = np.array(
    [
        [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
        [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
        [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
    ],
    dtype=float,
)

_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def subdivide(mesh: TriMesh) -> TriMesh:
    """Topological 1-to-4 split with midpoint vertex placement."""
    v, f = mesh.vertices, mesh.faces
    topo = mesh.topology
    edges = topo.edges
    mid = 0.5 * (v[edges[:, 0]] + v[edges[:, 1]])
    new_v = np.vstack([v, mid])

    edge_idx = topo.edge_inverse.reshape(3, -1).T  # per-face (e01, e12, e20)
    m01 = len(v) + edge_idx[:, 0]
    m12 = len(v) + edge_idx[:, 1]
    m20 = len(v) + edge_idx[:, 2]
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    new_f = np.concatenate(
        [
            np.stack([a, m01, m20], axis=1),
            np.stack([b, m12, m01], axis=1),
            np.stack([c, m20, m12], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ]
    )
    return TriMesh(new_v, new_f)


def icosphere(radius: float, level: int) -> TriMesh:
    """Subdivided icosahedron with vertices projected onto the sphere."""
    if radius <= 0:
        raise MeshValidationError("radius must be positive")
    if level < 0:
        raise MeshValidationError("level must be >= 0")
    mesh = TriMesh(_ICO_VERTS.copy(), _ICO_FACES.copy())
    for _ in range(level):
        mesh = subdivide(mesh)
        # re-project after every split so midpoints stay well distributed
        v = mesh.vertices / np.linalg.norm(mesh.vertices, axis=1)[:, None]
        mesh = mesh.replace_vertices(v)
    v = mesh.vertices / np.linalg.norm(mesh.vertices, axis=1)[:, None]
    return mesh.replace_vertices(radius * v)


def cube_mesh() -> TriMesh:
    """Unit cube as 12 triangles.

    Face diagonals all point at an inscribed regular tetrahedron, which makes
    the three triangle areas incident to every corner equal.
    """
    v = np.array(
        [
            [0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0],
            [0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 1],
        ],
        dtype=float,
    )
    # tetrahedral vertex set: 0, 3, 5, 6
    f = np.array(
        [
            [0, 3, 1], [0, 2, 3],      # z=0, normal -z
            [4, 5, 6], [5, 7, 6],      # z=1, normal +z
            [0, 1, 5], [0, 5, 4],      # y=0, normal -y
            [2, 6, 3], [3, 6, 7],      # y=1, normal +y
            [0, 4, 6], [0, 6, 2],      # x=0, normal -x
            [1, 3, 5], [3, 7, 5],      # x=1, normal +x
        ],
        dtype=np.int64,
    )
    return TriMesh(v, f)


# -- file formats -------------------------------------------------------------


def write_obj(path, mesh: TriMesh) -> None:
    with open(path, "w") as fh:
        for p in mesh.vertices:
            fh.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def read_obj(path) -> TriMesh:
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) - 1 for tok in parts[1:]]
                if len(idx) != 3:
                    raise MeshValidationError("only triangle faces supported")
                faces.append(idx)
    if not verts or not faces:
        raise MeshValidationError(f"no mesh data in {path}")
    return TriMesh(np.array(verts), np.array(faces))


def write_ply(path, mesh: TriMesh) -> None:
    """Binary little-endian PLY, for large meshes."""
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {mesh.n_vertices}\n"
        "property double x\nproperty double y\nproperty double z\n"
        f"element face {mesh.n_faces}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
        for f in mesh.faces:
            fh.write(struct.pack("<Biii", 3, int(f[0]), int(f[1]), int(f[2])))
