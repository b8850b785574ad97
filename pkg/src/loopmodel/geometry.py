"""Discrete torus, continuous space-time torus, and the cube/reflection complex.

The spatial graph is a d-dimensional torus with side lengths 4*k_r (all sides
are multiples of 4 so that the block construction below tiles evenly).  On top
of it sits the continuous torus: space times a time circle of circumference
beta.  Link configurations live on (edge, time) pairs, where an edge is
identified with the midpoint of its two endpoints.

For the block (Peierls) machinery the continuous torus is tiled by closed
"big cubes" of spatial width 2 and temporal height R/n, and by "small cubes"
of width 1 and height R/(2n).  R is chosen as the smallest value above a
cutoff R0 such that beta*n/R is an even integer, so an integer number of big
cubes fits around the time circle.  Each big cube is the union of exactly
2^(d+1) small cubes.  The tiling has 2^(d+1) half-period translates, and any
big cube of the base tiling is the image of the reference cube (corner at the
origin) under a composition of reflections in the hyperplanes separating the
cubes.  Per axis that composition is a translation when the cube offset is an
even number of cubes and a point reflection when it is odd, which is how
`reflect_*` implements it.

Exactness conventions:
  * spatial coordinates are handled as doubled integers (vertex x -> 2x, edge
    midpoint -> 2x+1), so cube membership is exact modular-integer arithmetic;
  * cubes are closed sets; a point on a shared face belongs to every cube
    containing it.  Time membership is decided through small-cell indices,
    with exact float comparison (no tolerance) to detect boundary times.
"""

import math
from dataclasses import dataclass


class GeometryError(ValueError):
    pass


class TorusGeometry:
    """The discrete torus (vertices/edges) plus the time-circle length beta."""

    def __init__(self, d, k, beta):
        k = tuple(int(v) for v in k)
        if d < 1 or len(k) != d:
            raise GeometryError(f"need d >= 1 and len(k) == d, got d={d}, k={k}")
        if any(v < 1 for v in k):
            raise GeometryError(f"all torus sizes k_r must be >= 1, got {k}")
        if not (beta > 0):
            raise GeometryError(f"beta must be positive, got {beta}")
        self.d = int(d)
        self.k = k
        self.beta = float(beta)
        self.dims = tuple(4 * v for v in k)

        # vertex indexing is lexicographic in coordinates (row-major)
        self.n_vertices = 1
        for L in self.dims:
            self.n_vertices *= L
        self._strides = [1] * d
        for r in range(d - 2, -1, -1):
            self._strides[r] = self._strides[r + 1] * self.dims[r + 1]

        # one edge per vertex per axis (positive direction)
        self.n_edges = self.d * self.n_vertices
        self.edge_endpoints = []
        self.edge_axis = []
        self.incident_edges = [[] for _ in range(self.n_vertices)]
        for v in range(self.n_vertices):
            for r in range(d):
                w = self.shift_vertex(v, r, +1)
                eid = len(self.edge_endpoints)
                self.edge_endpoints.append((v, w))
                self.edge_axis.append(r)
                self.incident_edges[v].append(eid)
                self.incident_edges[w].append(eid)
        # canonical orientation: endpoints sorted by vertex index
        self.edge_canonical = [tuple(sorted(pair)) for pair in self.edge_endpoints]
        self._edge_by_pair = {}
        for eid, pair in enumerate(self.edge_canonical):
            self._edge_by_pair[pair] = eid
        # doubled midpoint coordinates, exact integers mod 2*dims
        self.edge_mid2 = []
        for eid, (v, w) in enumerate(self.edge_endpoints):
            cv = self.coords(v)
            m = [2 * c for c in cv]
            m[self.edge_axis[eid]] = (m[self.edge_axis[eid]] + 1) % (2 * self.dims[self.edge_axis[eid]])
            self.edge_mid2.append(tuple(m))

    def coords(self, v):
        out = []
        for r in range(self.d):
            out.append((v // self._strides[r]) % self.dims[r])
        return tuple(out)

    def vertex(self, coords):
        v = 0
        for r in range(self.d):
            v += (coords[r] % self.dims[r]) * self._strides[r]
        return v

    def shift_vertex(self, v, axis, step):
        c = list(self.coords(v))
        c[axis] = (c[axis] + step) % self.dims[axis]
        return self.vertex(c)

    def neighbors(self, v):
        out = []
        for r in range(self.d):
            out.append(self.shift_vertex(v, r, +1))
            out.append(self.shift_vertex(v, r, -1))
        return out

    def edge_between(self, v, w):
        pair = tuple(sorted((v, w)))
        eid = self._edge_by_pair.get(pair)
        if eid is None:
            raise GeometryError(f"vertices {v} and {w} are not nearest neighbours")
        return eid

    def other_endpoint(self, eid, v):
        a, b = self.edge_endpoints[eid]
        return b if v == a else a

    def are_adjacent(self, v, w):
        return tuple(sorted((v, w))) in self._edge_by_pair

    def wrap_time(self, t):
        return t % self.beta

    def describe(self):
        return {"d": self.d, "k": list(self.k), "beta": self.beta}

    def __eq__(self, other):
        return (isinstance(other, TorusGeometry)
                and self.d == other.d and self.k == other.k and self.beta == other.beta)

    def __repr__(self):
        return f"TorusGeometry(d={self.d}, k={self.k}, beta={self.beta})"


def build_geometry(d, k, beta):
    return TorusGeometry(d, k, beta)


def select_block_height(R0, beta, n):
    """Smallest R > R0 such that beta*n/R is an even (positive) integer.

    Returns (R, k_time) with 2*k_time = beta*n/R.  Infeasible when
    beta <= 2*R0/n, i.e. when not even the coarsest split (two rows of big
    cubes) fits above the cutoff.
    """
    if R0 <= 0 or beta <= 0 or n < 1:
        raise GeometryError("need R0 > 0, beta > 0, n >= 1")
    # largest even m with beta*n/m > R0, i.e. m*R0 < beta*n strictly
    m = int(math.floor(beta * n / R0))
    if m % 2 == 1:
        m -= 1
    while m >= 2 and not (m * R0 < beta * n):
        m -= 2
    if m < 2:
        raise GeometryError(
            f"no admissible block height: beta={beta} <= 2*R0/n = {2 * R0 / n}")
    return beta * n / m, m // 2


@dataclass(frozen=True)
class BigCube:
    """Closed block of spatial width 2 and height two small cells.

    `corner` is the lower column index per axis (columns corner, corner+1
    are covered); `cell0` is the lower small-cell index (cells cell0,
    cell0+1).  For the base tiling corners and cell0 are even; translates
    shift them by one.
    """
    corner: tuple
    cell0: int


@dataclass(frozen=True)
class SmallCube:
    column: tuple
    cell: int


class CubeComplex:
    """Big/small cube tiling of the continuous torus for a given (R0, n)."""

    def __init__(self, geom, R0, n):
        if n < 1:
            raise GeometryError("loop fugacity n must be >= 1")
        self.geom = geom
        self.R0 = float(R0)
        self.n = int(n)
        self.R, self.k_time = select_block_height(R0, geom.beta, n)
        self.n_rows = 2 * self.k_time          # big-cube rows around the time circle
        self.n_cells = 2 * self.n_rows         # small-cell rows
        self.cell_height = geom.beta / self.n_cells   # == R/(2n) exactly in law
        self.big_height = 2 * self.cell_height        # == R/n
        self.spatial_blocks = tuple(2 * v for v in geom.k)  # big columns per axis
        self.n_big = self.n_rows
        for b in self.spatial_blocks:
            self.n_big *= b                    # == prod(2 k_r) * 2 k_time
        self.n_small = self.n_cells
        for L in geom.dims:
            self.n_small *= L
        self.translates = [
            tau for tau in _bit_tuples(geom.d + 1)
        ]

    # ---- enumeration -------------------------------------------------

    def big_indices(self):
        """All (I, J) indices of the base tiling: corner = 2*I, cell0 = 2*J."""
        for I in _product_ranges(self.spatial_blocks):
            for J in range(self.n_rows):
                yield (I, J)

    def big_cube(self, I, J, translate=None):
        tau = translate if translate is not None else (0,) * (self.geom.d + 1)
        corner = tuple((2 * I[r] + tau[r]) % self.geom.dims[r] for r in range(self.geom.d))
        cell0 = (2 * J + tau[self.geom.d]) % self.n_cells
        return BigCube(corner, cell0)

    def small_cubes_of(self, big):
        out = []
        for offs in _bit_tuples(self.geom.d):
            col = tuple((big.corner[r] + offs[r]) % self.geom.dims[r] for r in range(self.geom.d))
            for dj in (0, 1):
                out.append(SmallCube(col, (big.cell0 + dj) % self.n_cells))
        return out

    def big_neighbors(self, I, J):
        """Neighbouring (I, J) indices: one row up/down, or one axis +-1 block."""
        out = []
        for r in range(self.geom.d):
            for step in (+1, -1):
                I2 = list(I)
                I2[r] = (I2[r] + step) % self.spatial_blocks[r]
                out.append((tuple(I2), J))
        for step in (+1, -1):
            out.append((I, (J + step) % self.n_rows))
        return out

    def big_containing_small(self, small, translate):
        """The unique big cube of the given translate containing `small`."""
        tau = translate
        corner = tuple(
            small.column[r] - ((small.column[r] - tau[r]) % 2)
            for r in range(self.geom.d))
        corner = tuple(c % self.geom.dims[r] for r, c in enumerate(corner))
        cell0 = (small.cell - ((small.cell - tau[self.geom.d]) % 2)) % self.n_cells
        return BigCube(corner, cell0)

    # ---- time membership ---------------------------------------------

    def time_cells_of(self, t):
        """Small-cell indices whose closed time range contains t (1 or 2)."""
        h = self.cell_height
        c = int(t // h)
        if c >= self.n_cells:
            c = self.n_cells - 1
        if c < 0:
            c = 0
        cells = [c]
        if t == c * h:
            cells.append((c - 1) % self.n_cells)
        elif t == (c + 1) * h:
            cells.append((c + 1) % self.n_cells)
        return cells

    def cell_of(self, t):
        """The unique cell containing t, raising if t sits exactly on a boundary."""
        cells = self.time_cells_of(t)
        if len(cells) != 1:
            raise GeometryError(f"time {t!r} lies exactly on a cell boundary")
        return cells[0]

    def time_on_cell_boundary(self, t):
        return len(self.time_cells_of(t)) == 2

    # ---- membership, closed-set convention -----------------------------

    def _spatial_offset_ok(self, mid2, corner, width2, strict):
        # width2: doubled width (4 for big cubes, 2 for small)
        for r in range(self.geom.d):
            L2 = 2 * self.geom.dims[r]
            off = (mid2[r] - (2 * corner[r] - 1)) % L2
            if strict:
                if not (0 < off < width2):
                    return False
            else:
                if off > width2:
                    return False
        return True

    def link_in_big(self, eid, t, big):
        if not self._spatial_offset_ok(self.geom.edge_mid2[eid], big.corner, 4, strict=False):
            return False
        cells = self.time_cells_of(t)
        allowed = {big.cell0, (big.cell0 + 1) % self.n_cells}
        return any(c in allowed for c in cells)

    def link_in_big_interior(self, eid, t, big):
        if not self._spatial_offset_ok(self.geom.edge_mid2[eid], big.corner, 4, strict=True):
            return False
        cells = set(self.time_cells_of(t))
        allowed = {big.cell0, (big.cell0 + 1) % self.n_cells}
        return cells <= allowed

    def link_in_small(self, eid, t, small):
        if not self._spatial_offset_ok(self.geom.edge_mid2[eid], small.column, 2, strict=False):
            return False
        return small.cell in self.time_cells_of(t)

    def point_in_big(self, vertex, t, big):
        # vertex membership per the closed-cube convention (spatial test only
        # decides column membership; time via the cell range)
        if not self.vertex_in_big(vertex, big):
            return False
        cells = self.time_cells_of(t)
        allowed = {big.cell0, (big.cell0 + 1) % self.n_cells}
        return any(c in allowed for c in cells)

    def point_in_small(self, vertex, t, small):
        return (self.vertex_in_small(vertex, small)
                and small.cell in self.time_cells_of(t))

    def vertex_in_big(self, vertex, big):
        c = self.geom.coords(vertex)
        for r in range(self.geom.d):
            if (c[r] - big.corner[r]) % self.geom.dims[r] not in (0, 1):
                return False
        return True

    def vertex_in_small(self, vertex, small):
        return self.geom.coords(vertex) == small.column

    def vertices_in_big(self, big):
        out = []
        for offs in _bit_tuples(self.geom.d):
            coords = tuple((big.corner[r] + offs[r]) % self.geom.dims[r]
                           for r in range(self.geom.d))
            out.append(self.geom.vertex(coords))
        return out

    def edges_in_big(self, big):
        """Edges lying in the cube: those with an endpoint among its vertices."""
        seen = []
        got = set()
        for v in self.vertices_in_big(big):
            for eid in self.geom.incident_edges[v]:
                if eid not in got:
                    got.add(eid)
                    seen.append(eid)
        return seen

    def edges_in_small(self, small):
        return list(self.geom.incident_edges[self.geom.vertex(small.column)])

    def small_adjacent(self, a, b):
        """Face adjacency of small cubes (one coordinate off by one)."""
        diff = 0
        for r in range(self.geom.d):
            step = (a.column[r] - b.column[r]) % self.geom.dims[r]
            if step == 0:
                continue
            if step in (1, self.geom.dims[r] - 1):
                diff += 1
            else:
                return False
        cstep = (a.cell - b.cell) % self.n_cells
        if cstep != 0:
            if cstep in (1, self.n_cells - 1):
                diff += 1
            else:
                return False
        return diff == 1

    # ---- reflections ----------------------------------------------------

    def reflect_vertex(self, I, J, v, inverse=False):
        c = list(self.geom.coords(v))
        for r in range(self.geom.d):
            L = self.geom.dims[r]
            if I[r] % 2 == 0:
                shift = 2 * I[r]
                c[r] = (c[r] - shift) % L if inverse else (c[r] + shift) % L
            else:
                c[r] = (2 * I[r] + 1 - c[r]) % L   # reflections are self-inverse
        return self.geom.vertex(c)

    def reflect_edge(self, I, J, eid, inverse=False):
        a, b = self.geom.edge_endpoints[eid]
        return self.geom.edge_between(self.reflect_vertex(I, J, a, inverse),
                                      self.reflect_vertex(I, J, b, inverse))

    def reflect_time(self, I, J, t, inverse=False):
        H = self.big_height
        if J % 2 == 0:
            shift = J * H
            out = (t - shift) if inverse else (t + shift)
        else:
            out = (J + 1) * H - t
        return out % self.geom.beta

    def reflect_point(self, I, J, point, inverse=False):
        v, t = point
        return (self.reflect_vertex(I, J, v, inverse), self.reflect_time(I, J, t, inverse))

    def reflect_link(self, I, J, eid, t, inverse=False):
        return (self.reflect_edge(I, J, eid, inverse), self.reflect_time(I, J, t, inverse))


def build_cube_complex(geom, R0, n):
    return CubeComplex(geom, R0, n)


def _bit_tuples(n):
    out = []
    for mask in range(1 << n):
        out.append(tuple((mask >> i) & 1 for i in range(n)))
    return out


def _product_ranges(sizes):
    if not sizes:
        yield ()
        return
    for head in range(sizes[0]):
        for tail in _product_ranges(sizes[1:]):
            yield (head,) + tail
