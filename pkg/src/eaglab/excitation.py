"""Constrained ground-state tables, perturbed selection, and critical-coupling scans.

For a block B, the table holds every constrained minimizer sigma^eta
(eta ranging over {-1,+1}^B) with its energy, and the antisymmetric
energy-difference matrix. Selecting the row whose differences are all
negative recovers the unconstrained ground state; adding a block-supported
perturbation re-weights the selection without re-solving, which is the
coupling-covariance rule checked against direct re-solves in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .disorder import CouplingField
from .energy import SpinConfiguration, hamiltonian
from .lattice import TorusLattice
from .solver import TIE_TOL, TieDetected, constrained_gs, ground_state

__all__ = [
    "ExcitationTable",
    "BlockPerturbation",
    "ScanResult",
    "ScanError",
    "SandwichViolation",
    "build_excitation_table",
    "select_ground",
    "perturbed_ground",
    "critical_scan",
    "sandwich_check",
    "write_table",
    "MAX_BLOCK_SITES",
    "SANDWICH_SLACK",
]

MAX_BLOCK_SITES = 6
SANDWICH_SLACK = 1e-9


class ScanError(RuntimeError):
    """Scan found structure the exact solver forbids (e.g. two breakpoints)."""


class SandwichViolation(RuntimeError):
    """A ground-state sandwich inequality failed beyond slack."""


@dataclass(frozen=True)
class ExcitationTable:
    """All constrained ground states over a block and their energy differences.

    Row index i encodes eta by binary counting: bit j of i gives the spin at
    the j-th block site (sites sorted lexicographically), bit 0 -> +1,
    bit 1 -> -1.

    Every row is solved in the gauge sector with +1 at `anchor_site` (a site
    outside B). Without this pin the rows for eta and -eta are global-flip
    images with exactly equal energy, so no single row could ever be strictly
    selected; the pin picks one member of each spin-reversed pair and makes
    the selection row unique for almost every coupling realization.
    """

    lattice: TorusLattice
    J: CouplingField
    block_sites: np.ndarray = field(repr=False)
    anchor_site: int | None
    block_edges: np.ndarray = field(repr=False)  # E(B): both endpoints in B
    plus_edges: np.ndarray = field(repr=False)  # E+(B): at least one endpoint in B
    spins: np.ndarray = field(repr=False)  # (2^|B|, n_sites) int8
    energies: np.ndarray = field(repr=False)  # (2^|B|,)

    def __post_init__(self):
        for arr in (self.block_sites, self.block_edges, self.plus_edges, self.spins, self.energies):
            arr.setflags(write=False)

    @property
    def n_eta(self) -> int:
        return len(self.energies)

    def eta(self, i: int) -> np.ndarray:
        """Block spins of row i, ordered like block_sites."""
        bits = (i >> np.arange(len(self.block_sites))) & 1
        return (1 - 2 * bits).astype(np.int8)

    def eta_index(self, eta) -> int:
        eta = np.asarray(eta)
        bits = (1 - eta) // 2
        return int(np.sum(bits.astype(np.int64) << np.arange(len(self.block_sites))))

    def delta(self) -> np.ndarray:
        """Energy-difference matrix delta[i, j] = E(sigma^i) - E(sigma^j)."""
        return self.energies[:, None] - self.energies[None, :]

    def state(self, i: int) -> SpinConfiguration:
        anchor = self.anchor_site if self.anchor_site is not None else 0
        return SpinConfiguration(self.lattice, self.spins[i].copy(), anchor=anchor)

    def magnitude_bound(self) -> float:
        """2 * sum of |J_e| over E+(B), an exchange-argument bound on |delta|."""
        return float(2.0 * np.sum(np.abs(self.J.values[self.plus_edges])))

    def block_hamiltonians(self, values: np.ndarray = None) -> np.ndarray:
        """H restricted to E(B) for every eta; couplings default to J's."""
        vals = self.J.values[self.block_edges] if values is None else np.asarray(values, dtype=np.float64)
        u = self.lattice.edges[self.block_edges, 0]
        v = self.lattice.edges[self.block_edges, 1]
        pos = {int(s): j for j, s in enumerate(self.block_sites)}
        bu = np.array([pos[int(s)] for s in u], dtype=np.int64)
        bv = np.array([pos[int(s)] for s in v], dtype=np.int64)
        etas = self._eta_matrix()
        return -(etas[:, bu] * etas[:, bv]).astype(np.float64) @ vals

    def literal_decoupling_report(self) -> tuple[int, int]:
        """(violations, pairs) of |delta| <= |H_B(eta) - H_B(eta')| with H_B over E(B).

        Reported as data only; the provable invariant is magnitude_bound().
        """
        hb = self.block_hamiltonians()
        d = self.delta()
        lit = np.abs(hb[:, None] - hb[None, :])
        off = ~np.eye(self.n_eta, dtype=bool)
        viol = int(np.sum(np.abs(d)[off] > lit[off] + 1e-9))
        return viol, int(off.sum())

    def _eta_matrix(self) -> np.ndarray:
        idx = np.arange(self.n_eta)
        bits = (idx[:, None] >> np.arange(len(self.block_sites))[None, :]) & 1
        return (1 - 2 * bits).astype(np.int8)

    def translated(self, t) -> "ExcitationTable":
        """The table of the translated field over the translated block.

        The gauge anchor translates along: this table equals
        build_excitation_table(translate(J), translate(B), anchor=translate(a)).
        """
        lat = self.lattice
        sp = lat.site_permutation(t)
        new_sites = np.sort(sp[self.block_sites])
        new_anchor = int(sp[self.anchor_site]) if self.anchor_site is not None else None
        # Row i of the new table constrains new_sites to eta'; its preimage row
        # constrains block_sites to the pulled-back eta.
        order = np.argsort(sp[self.block_sites])  # rank m in new order -> old position
        nb = len(self.block_sites)
        n = self.n_eta
        tJ = self.J.translated(t)
        new_spins = np.empty_like(self.spins)
        new_energies = np.empty_like(self.energies)
        for i in range(n):
            bits_new = (i >> np.arange(nb)) & 1
            bits_old = np.empty(nb, dtype=np.int64)
            bits_old[order] = bits_new
            old_i = int(np.sum(bits_old << np.arange(nb)))
            tr = self.state(old_i).translated(t)
            new_spins[i] = tr.values
            new_energies[i] = hamiltonian(tJ, tr)
        ep = lat.edge_permutation(t)
        return ExcitationTable(
            lat,
            tJ,
            new_sites,
            new_anchor,
            np.sort(ep[self.block_edges]),
            np.sort(ep[self.plus_edges]),
            new_spins,
            new_energies,
        )


@dataclass(frozen=True)
class BlockPerturbation:
    """Couplings supported on E(B) only, implicitly zero elsewhere."""

    lattice: TorusLattice
    block_sites: np.ndarray = field(repr=False)
    edge_indices: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        in_b = np.zeros(self.lattice.n_sites, dtype=bool)
        in_b[self.block_sites] = True
        e = self.lattice.edges[self.edge_indices]
        if not np.all(in_b[e[:, 0]] & in_b[e[:, 1]]):
            raise ValueError("perturbation support must lie inside E(B)")
        for arr in (self.block_sites, self.edge_indices, self.values):
            arr.setflags(write=False)

    def as_field(self) -> CouplingField:
        vals = np.zeros(self.lattice.n_edges)
        vals[self.edge_indices] = self.values
        return CouplingField(self.lattice, vals)


def block_edge_sets(lat: TorusLattice, B) -> tuple[np.ndarray, np.ndarray]:
    """(E(B), E+(B)): edges with both / at least one endpoint in B."""
    in_b = np.zeros(lat.n_sites, dtype=bool)
    in_b[np.asarray(list(B), dtype=np.int64)] = True
    a = in_b[lat.edges[:, 0]]
    b = in_b[lat.edges[:, 1]]
    return np.flatnonzero(a & b), np.flatnonzero(a | b)


def build_excitation_table(J: CouplingField, B, anchor: int = None, solver: str = "auto",
                           allow_ties: bool = False) -> ExcitationTable:
    """Solve the 2^|B| constrained problems over the block B; |B| <= 6.

    Each row additionally pins the gauge anchor (default: the smallest site
    outside B) to +1, selecting one representative of every spin-reversed
    pair. When B covers the whole lattice no pin is applied (eta already
    determines the configuration).
    """
    lat = J.lattice
    sites = np.sort(np.asarray(list(B), dtype=np.int64))
    nb = len(sites)
    if nb == 0:
        raise ValueError("block must be nonempty")
    if nb > MAX_BLOCK_SITES:
        raise ValueError(f"block capped at {MAX_BLOCK_SITES} sites, got {nb}")
    in_b = np.zeros(lat.n_sites, dtype=bool)
    in_b[sites] = True
    if anchor is None:
        outside = np.flatnonzero(~in_b)
        anchor = int(outside[0]) if len(outside) else None
    elif in_b[anchor]:
        raise ValueError("anchor site must lie outside the block")
    block_edges, plus_edges = block_edge_sets(lat, sites)
    n = 1 << nb
    spins = np.empty((n, lat.n_sites), dtype=np.int8)
    energies = np.empty(n)
    shifts = np.arange(nb)
    if anchor is None:
        solve_sites, extra = sites, []
    else:
        solve_sites = np.concatenate([sites, [anchor]])
        extra = [1]
    for i in range(n):
        eta = (1 - 2 * ((i >> shifts) & 1)).astype(np.int8)
        full = np.concatenate([eta, np.asarray(extra, dtype=np.int8)])
        sigma, e = constrained_gs(J, solve_sites, full, allow_ties=allow_ties, solver=solver)
        spins[i] = sigma.values
        energies[i] = e
    return ExcitationTable(lat, J, sites, anchor, block_edges, plus_edges, spins, energies)


def select_ground(t: ExcitationTable) -> int:
    """Index of the unique eta whose energy differences are all negative.

    The selected constrained minimizer is the unconstrained ground state.
    """
    i = int(np.argmin(t.energies))
    gaps = np.delete(t.energies, i) - t.energies[i]
    if len(gaps) and float(np.min(gaps)) <= TIE_TOL:
        raise TieDetected(float(t.energies[i]), float(t.energies[i] + np.min(gaps)),
                          "no strictly negative selection row")
    return i


def perturbed_ground(t: ExcitationTable, p: BlockPerturbation) -> SpinConfiguration:
    """Ground state of J + p read off the table built at J.

    Selects the eta minimizing E(sigma^eta) + H_{B,p}(eta) and returns the
    stored constrained minimizer: spins outside B come from the solve at J,
    which is exact because p only touches edges inside B.
    """
    table_edges = set(int(e) for e in t.block_edges)
    if any(int(e) not in table_edges for e in p.edge_indices):
        raise ValueError("perturbation support must lie inside the table's block edges")
    lookup = {int(e): float(w) for e, w in zip(p.edge_indices, p.values)}
    vals = np.array([lookup.get(int(e), 0.0) for e in t.block_edges])
    scores = t.energies + t.block_hamiltonians(vals)
    i = int(np.argmin(scores))
    gaps = np.delete(scores, i) - scores[i]
    if len(gaps) and float(np.min(gaps)) <= TIE_TOL:
        raise TieDetected(float(scores[i]), float(scores[i] + np.min(gaps)),
                          "perturbation at a critical value")
    return t.state(i)


def _edge_id(lat: TorusLattice, edge) -> int:
    a, b = int(edge[0]), int(edge[1])
    key = (min(a, b), max(a, b))
    if key not in lat.edge_index:
        raise ValueError(f"{edge} is not a lattice edge")
    return lat.edge_index[key]


def _corr_at(J: CouplingField, eidx: int, value: float, solver: str):
    vals = J.values.copy()
    vals[eidx] = value
    sigma, e = ground_state(CouplingField(J.lattice, vals), solver=solver, allow_ties=True)
    u, v = J.lattice.edges[eidx]
    return int(sigma.values[u] * sigma.values[v]), e


@dataclass(frozen=True)
class ScanResult:
    """Ground-state energy as a function of one coupling over an interval.

    The energy is concave piecewise linear with slopes -+1 (slope equals
    minus the scanned edge's ground-state correlation), so it has at most
    one breakpoint; `breakpoint` is None when the correlation never flips.
    """

    edge: tuple[int, int]
    interval: tuple[float, float]
    breakpoint: float | None
    left_slope: int
    right_slope: int
    grid: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)
    correlations: np.ndarray = field(repr=False)


def critical_scan(J: CouplingField, edge, interval, resolution: int = 33,
                  solver: str = "auto", tol: float = 1e-9) -> ScanResult:
    """Locate the critical value of one coupling by correlation-sign bisection.

    Scans resolution grid points over the interval; more than one
    correlation flip means the solver violated concavity and is an error.
    Solves along the scan tolerate exact ties (a grid point can land on the
    breakpoint itself).
    """
    lat = J.lattice
    eidx = _edge_id(lat, edge)
    lo, hi = float(interval[0]), float(interval[1])
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError("interval must be a bounded (lo, hi) with lo < hi")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")

    grid = np.linspace(lo, hi, resolution)
    corrs = np.empty(resolution, dtype=np.int64)
    energies = np.empty(resolution)
    for i, tval in enumerate(grid):
        corrs[i], energies[i] = _corr_at(J, eidx, float(tval), solver)

    flips = np.flatnonzero(corrs[:-1] != corrs[1:])
    u, v = lat.edges[eidx]
    if len(flips) > 1:
        raise ScanError(
            f"correlation of edge {tuple(lat.site_coord(u))}-{tuple(lat.site_coord(v))} "
            f"changed sign {len(flips)} times; ground-state energy must be concave in one coupling"
        )
    if len(flips) == 0:
        s = -int(corrs[0])
        return ScanResult((int(u), int(v)), (lo, hi), None, s, s, grid, energies, corrs)

    a, b = float(grid[flips[0]]), float(grid[flips[0] + 1])
    ca = corrs[flips[0]]
    while b - a > tol:
        mid = 0.5 * (a + b)
        c, _ = _corr_at(J, eidx, mid, solver)
        if c == ca:
            a = mid
        else:
            b = mid
    return ScanResult(
        (int(u), int(v)), (lo, hi), 0.5 * (a + b),
        -int(corrs[0]), -int(corrs[-1]), grid, energies, corrs,
    )


def sandwich_check(J: CouplingField, B, edge, eps: float, solver: str = "auto") -> tuple[float, float]:
    """Ground-state sandwich residuals for a coupling step of size eps.

    With E(t) the ground energy after adding t to the edge coupling and
    c(t) the edge correlation of that ground state, minimality of each
    state in the other's field gives, for either sign of eps,

        E(eps) <= E(0) - eps*c(0)      (residual r1 >= 0)
        E(0)  <= E(eps) + eps*c(eps)   (residual r2 >= 0)

    Both residuals are returned; a residual below -1e-9 raises. Away from
    the breakpoint both residuals vanish and the difference quotient equals
    -c exactly.
    """
    if eps == 0:
        raise ValueError("eps must be nonzero")
    lat = J.lattice
    eidx = _edge_id(lat, edge)
    in_b = np.zeros(lat.n_sites, dtype=bool)
    in_b[np.asarray(list(B), dtype=np.int64)] = True
    u, v = lat.edges[eidx]
    if not (in_b[u] and in_b[v]):
        raise ValueError("edge must lie inside the block B")

    sigma0, e0 = ground_state(J, solver=solver)
    c0 = int(sigma0.values[u] * sigma0.values[v])
    vals = J.values.copy()
    vals[eidx] += eps
    sigma1, e1 = ground_state(CouplingField(lat, vals), solver=solver, allow_ties=True)
    c1 = int(sigma1.values[u] * sigma1.values[v])

    r1 = (e0 - eps * c0) - e1
    r2 = (e1 + eps * c1) - e0
    if min(r1, r2) < -SANDWICH_SLACK:
        raise SandwichViolation(
            f"sandwich inequality violated at eps={eps!r}: residuals ({r1!r}, {r2!r})"
        )
    return float(r1), float(r2)


def write_table(path, t: ExcitationTable) -> None:
    """Structured text export: header, one record per eta, then the delta matrix."""
    lat = t.lattice
    lines = [
        f"# lattice = L={lat.L} d={lat.d}",
        f"# model = {t.J.model.label() if t.J.model is not None else 'none'}",
        f"# block_sites = {' '.join(str(tuple(lat.site_coord(s))) for s in t.block_sites)}",
        f"# anchor_site = {tuple(lat.site_coord(t.anchor_site)) if t.anchor_site is not None else 'none'}",
        "# eta encoding: row i bit j -> site j; bit 0 -> +1, bit 1 -> -1",
    ]
    for i in range(t.n_eta):
        eta = "".join("+" if s == 1 else "-" for s in t.eta(i))
        spins = "".join("+" if s == 1 else "-" for s in t.spins[i])
        lines.append(f"eta {i} {eta} energy {t.energies[i]!r} spins {spins}")
    d = t.delta()
    lines.append("# delta matrix, row-major")
    for i in range(t.n_eta):
        lines.append(" ".join(repr(float(x)) for x in d[i]))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
