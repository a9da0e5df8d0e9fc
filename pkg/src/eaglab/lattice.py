"""Torus geometry: sites, edges, windows, block partitions, seams, translations.

Sites on the d-dimensional torus (d = 1 or 2, L sites per axis) are indexed
row-major: for d=2 site (row, col) has index row*L + col. Edges are stored
as (u, v) pairs with u < v, sorted lexicographically; this order is the
canonical edge order used by every coupling field and output file.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TorusLattice",
    "Window",
    "BlockPartition",
    "Seam",
    "build_torus",
    "make_window",
    "partition_blocks",
    "make_seam",
    "translate",
]


class TorusLattice:
    """Periodic hypercubic lattice [0, L)^d with d*L^d edges.

    L >= 3 is required: at L = 2 the wraparound produces parallel double
    edges and edge-indexed couplings would be ill-defined.
    """

    def __init__(self, L: int, d: int):
        if d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {d}")
        if L < 3:
            raise ValueError(f"side length must be >= 3, got {L} (L=2 gives a degenerate multigraph)")
        self.L = int(L)
        self.d = int(d)
        self.n_sites = L**d

        if d == 1:
            self.coords = np.arange(L, dtype=np.int64).reshape(L, 1)
            u = np.arange(L, dtype=np.int64)
            raw = np.stack([u, (u + 1) % L], axis=1)
        else:
            rows, cols = np.divmod(np.arange(L * L, dtype=np.int64), L)
            self.coords = np.stack([rows, cols], axis=1)
            s = np.arange(L * L, dtype=np.int64)
            right = rows * L + (cols + 1) % L
            down = ((rows + 1) % L) * L + cols
            raw = np.concatenate([np.stack([s, right], axis=1), np.stack([s, down], axis=1)])

        lo = np.minimum(raw[:, 0], raw[:, 1])
        hi = np.maximum(raw[:, 0], raw[:, 1])
        order = np.lexsort((hi, lo))
        self.edges = np.stack([lo[order], hi[order]], axis=1)
        self.n_edges = len(self.edges)
        self.edge_index = {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}

        # Per-site incidence tables: neighbor site and edge index, 2d entries each.
        nbr_site = [[] for _ in range(self.n_sites)]
        nbr_edge = [[] for _ in range(self.n_sites)]
        for i, (a, b) in enumerate(self.edges):
            nbr_site[a].append(b)
            nbr_edge[a].append(i)
            nbr_site[b].append(a)
            nbr_edge[b].append(i)
        self.nbr_site = np.array(nbr_site, dtype=np.int64)
        self.nbr_edge = np.array(nbr_edge, dtype=np.int64)

        if d == 2:
            # Edge-index tables feeding the row-sweep solver:
            #   vert_edge[k, i] = edge between (k-1 mod L, i) and (k, i)
            #   horiz_edge[k, i] = edge between (k, i) and (k, i+1 mod L)
            ve = np.empty((L, L), dtype=np.int64)
            he = np.empty((L, L), dtype=np.int64)
            for k in range(L):
                for i in range(L):
                    a = ((k - 1) % L) * L + i
                    b = k * L + i
                    ve[k, i] = self.edge_index[(min(a, b), max(a, b))]
                    a = k * L + i
                    b = k * L + (i + 1) % L
                    he[k, i] = self.edge_index[(min(a, b), max(a, b))]
            self.vert_edge = ve
            self.horiz_edge = he

        for arr in (self.coords, self.edges, self.nbr_site, self.nbr_edge):
            arr.setflags(write=False)
        if d == 2:
            self.vert_edge.setflags(write=False)
            self.horiz_edge.setflags(write=False)

    def site(self, *coord: int) -> int:
        """Site index from coordinates, with periodic wrap."""
        if len(coord) != self.d:
            raise ValueError(f"expected {self.d} coordinates, got {len(coord)}")
        if self.d == 1:
            return coord[0] % self.L
        return (coord[0] % self.L) * self.L + (coord[1] % self.L)

    def site_coord(self, idx: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.coords[idx])

    def site_permutation(self, t) -> np.ndarray:
        """perm[i] = index of site i shifted by t (cyclic)."""
        t = np.asarray(t, dtype=np.int64).reshape(self.d)
        shifted = (self.coords + t) % self.L
        if self.d == 1:
            return shifted[:, 0].copy()
        return shifted[:, 0] * self.L + shifted[:, 1]

    def edge_permutation(self, t) -> np.ndarray:
        """perm[e] = index of edge e shifted by t (cyclic)."""
        sp = self.site_permutation(t)
        a = sp[self.edges[:, 0]]
        b = sp[self.edges[:, 1]]
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        return np.array([self.edge_index[(int(x), int(y))] for x, y in zip(lo, hi)], dtype=np.int64)

    def __repr__(self):
        return f"TorusLattice(L={self.L}, d={self.d})"


@dataclass(frozen=True)
class Window:
    """Axis-aligned box inside a torus with its interior and boundary edge sets.

    interior_edges: indices of edges with both endpoints in the window.
    boundary_edges: indices of edges with exactly one endpoint in the window.
    """

    lattice: TorusLattice
    corner: tuple[int, ...]
    side: int
    sites: np.ndarray = field(repr=False)
    in_window: np.ndarray = field(repr=False)
    interior_edges: np.ndarray = field(repr=False)
    boundary_edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.sites, self.in_window, self.interior_edges, self.boundary_edges):
            arr.setflags(write=False)


@dataclass(frozen=True)
class Block:
    """One block of a partition: sites plus the edges internal to the block."""

    corner: tuple[int, ...]
    sites: np.ndarray = field(repr=False)
    interior_edges: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class BlockPartition:
    """Equal blocks tiling a window, ordered lexicographically by block corner.

    The order of `blocks` fixes the filtration used by the martingale
    experiments; it is part of the output contract.
    """

    window: Window
    block_side: int
    blocks: tuple[Block, ...]


@dataclass(frozen=True)
class Seam:
    """Torus-wrapping cut: all edges along `axis` between offset and offset+1.

    Negating the couplings on these edges imposes antiperiodic boundary
    conditions across the cut.
    """

    lattice: TorusLattice
    axis: int
    offset: int
    edge_indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.edge_indices.setflags(write=False)


def build_torus(L: int, d: int) -> TorusLattice:
    """Periodic lattice with L^d sites and d*L^d edges; rejects L < 3."""
    return TorusLattice(L, d)


def make_window(lat: TorusLattice, side: int, corner: tuple[int, ...] = None) -> Window:
    """Box window of the given side anchored at `corner` (default origin)."""
    if corner is None:
        corner = (0,) * lat.d
    if not (1 <= side <= lat.L):
        raise ValueError(f"window side must be in [1, {lat.L}], got {side}")
    if len(corner) != lat.d:
        raise ValueError(f"corner must have {lat.d} coordinates")

    in_w = np.zeros(lat.n_sites, dtype=bool)
    if lat.d == 1:
        for i in range(side):
            in_w[lat.site(corner[0] + i)] = True
    else:
        for i in range(side):
            for j in range(side):
                in_w[lat.site(corner[0] + i, corner[1] + j)] = True
    sites = np.flatnonzero(in_w)

    count = in_w[lat.edges[:, 0]].astype(np.int8) + in_w[lat.edges[:, 1]].astype(np.int8)
    interior = np.flatnonzero(count == 2)
    boundary = np.flatnonzero(count == 1)
    return Window(lat, tuple(int(c) for c in corner), int(side), sites, in_w, interior, boundary)


def partition_blocks(w: Window, b: int) -> BlockPartition:
    """Tile the window with b-sided blocks; b must divide the window side."""
    if b < 1 or w.side % b != 0:
        raise ValueError(f"block side {b} does not divide window side {w.side}")
    lat = w.lattice
    n_per_axis = w.side // b
    blocks = []
    if lat.d == 1:
        corners = [(w.corner[0] + i * b,) for i in range(n_per_axis)]
    else:
        corners = [
            (w.corner[0] + i * b, w.corner[1] + j * b)
            for i in range(n_per_axis)
            for j in range(n_per_axis)
        ]
    for c in corners:
        in_b = np.zeros(lat.n_sites, dtype=bool)
        if lat.d == 1:
            for i in range(b):
                in_b[lat.site(c[0] + i)] = True
        else:
            for i in range(b):
                for j in range(b):
                    in_b[lat.site(c[0] + i, c[1] + j)] = True
        sites = np.flatnonzero(in_b)
        inner = np.flatnonzero(in_b[lat.edges[:, 0]] & in_b[lat.edges[:, 1]])
        blocks.append(Block(tuple(x % lat.L for x in c), sites, inner))
    return BlockPartition(w, int(b), tuple(blocks))


def make_seam(lat: TorusLattice, axis: int, offset: int) -> Seam:
    """Cut edges along `axis` between coordinate `offset` and `offset`+1."""
    if lat.d != 2:
        raise ValueError("seams are defined for d=2 lattices only")
    if axis not in (0, 1):
        raise ValueError(f"axis must be 0 or 1, got {axis}")
    offset = offset % lat.L
    nxt = (offset + 1) % lat.L
    idx = []
    for j in range(lat.L):
        if axis == 0:
            a, b = lat.site(offset, j), lat.site(nxt, j)
        else:
            a, b = lat.site(j, offset), lat.site(j, nxt)
        idx.append(lat.edge_index[(min(a, b), max(a, b))])
    return Seam(lat, axis, offset, np.array(sorted(idx), dtype=np.int64))


def translate(lat: TorusLattice, t, x):
    """Cyclic shift by the lattice vector t, for spins or coupling fields.

    translate(t) o translate(-t) is the identity; on both types translate
    acts as a group action of the torus translation group.
    """
    return x.translated(t)
