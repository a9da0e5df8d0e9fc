"""Exact ground states: exhaustive oracle, 2D row-sweep solver, constrained variants.

Every solver verifies uniqueness of the minimizer (up to global flip where
the problem has that symmetry) and raises TieDetected when the two best
distinct configurations are within 1e-12 in energy. Under a continuous
coupling law true ties have probability zero, so a tie signals numerical
degeneracy or an intentionally degenerate toy instance; pass
allow_ties=True to accept the deterministic tie-broken representative.
"""

from __future__ import annotations

import numpy as np

from ._dp_kernel import dp_solve
from .disorder import CouplingField
from .energy import SpinConfiguration, hamiltonian
from .lattice import Seam, TorusLattice

__all__ = [
    "TieDetected",
    "exhaustive_gs",
    "dp_gs_2d",
    "constrained_gs",
    "gs_with_bc",
    "ground_state",
    "antiperiodic_field",
    "TIE_TOL",
    "EXHAUSTIVE_MAX_SITES",
    "DP_MAX_SIDE",
]

TIE_TOL = 1e-12
EXHAUSTIVE_MAX_SITES = 25
DP_MAX_SIDE = 12

_CHUNK = 1 << 16


class TieDetected(RuntimeError):
    """Two distinct configurations within TIE_TOL of the minimum energy."""

    def __init__(self, e1: float, e2: float, context: str = ""):
        self.e1, self.e2 = e1, e2
        msg = f"degenerate minimum: best {e1!r}, runner-up {e2!r}"
        super().__init__(msg + (f" ({context})" if context else ""))


def _enumerate_min(J: CouplingField, template: np.ndarray, free_sites: np.ndarray):
    """Scan all +-1 assignments of free_sites over the template configuration.

    Returns (best spins, best energy, runner-up energy) tracking the two
    smallest energies over distinct configurations. Bit j of the scan code
    maps to free site j, code bit 0 -> spin +1; codes ascend, so ties break
    toward +1 spins at the earliest free site.
    """
    lat = J.lattice
    u, v = lat.edges[:, 0], lat.edges[:, 1]
    jvals = J.values
    m = len(free_sites)
    total = 1 << m
    e1 = np.inf
    e2 = np.inf
    best_code = 0
    codes0 = np.arange(_CHUNK, dtype=np.int64)
    shifts = np.arange(m, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        codes = codes0[: min(_CHUNK, total - start)] + start
        spins = np.tile(template, (len(codes), 1))
        if m:
            bits = (codes[:, None] >> shifts[None, :]) & 1
            spins[:, free_sites] = (1 - 2 * bits).astype(np.int8)
        energies = -(spins[:, u] * spins[:, v]).astype(np.float64) @ jvals
        i = int(np.argmin(energies))
        emin = float(energies[i])
        esec = float(np.partition(energies, 1)[1]) if len(energies) > 1 else np.inf
        if emin < e1:
            e2 = min(e1, esec)
            e1 = emin
            best_code = int(codes[i])
        else:
            e2 = min(e2, emin)
    spins = template.copy()
    if m:
        bits = (best_code >> shifts) & 1
        spins[free_sites] = (1 - 2 * bits).astype(np.int8)
    return spins, e1, e2


def exhaustive_gs(J: CouplingField, allow_ties: bool = False):
    """Global minimizer by enumeration, gauge-anchored; |sites| <= 25.

    The anchor spin is pinned to +1, so each flip pair is visited once and
    the runner-up energy certifies uniqueness up to global flip.
    """
    lat = J.lattice
    if lat.n_sites > EXHAUSTIVE_MAX_SITES:
        raise ValueError(f"exhaustive solver capped at {EXHAUSTIVE_MAX_SITES} sites, got {lat.n_sites}")
    template = np.ones(lat.n_sites, dtype=np.int8)
    free = np.arange(1, lat.n_sites, dtype=np.int64)
    spins, e1, e2 = _enumerate_min(J, template, free)
    if not allow_ties and e2 - e1 <= TIE_TOL:
        raise TieDetected(e1, e2, "exhaustive enumeration")
    sigma = SpinConfiguration(lat, spins)
    return sigma, hamiltonian(J, sigma)


def _anchor_mask(L: int) -> np.ndarray:
    mask = np.zeros((L, 1 << L))
    states = np.arange(1 << L)
    mask[0, (states & 1) == 1] = np.inf
    return mask


_MASK_CACHE: dict[int, np.ndarray] = {}


def _dp_run(J: CouplingField, mask: np.ndarray, allow_ties: bool, context: str):
    lat = J.lattice
    L = lat.L
    Jv = J.values[lat.vert_edge]
    Jh = J.values[lat.horiz_edge]
    e1, e2, rows = dp_solve(L, Jv, Jh, mask)
    if not np.isfinite(e1):
        raise ValueError("no admissible configuration under the given constraints")
    if not allow_ties and e2 - e1 <= TIE_TOL:
        raise TieDetected(e1, e2, context)
    cols = np.arange(L, dtype=np.int64)
    spins = (1 - 2 * ((rows[:, None] >> cols[None, :]) & 1)).astype(np.int8).reshape(-1)
    sigma = SpinConfiguration(lat, spins)
    return sigma, hamiltonian(J, sigma)


def dp_gs_2d(J: CouplingField, allow_ties: bool = False):
    """Row-sweep exact ground state on an LxL torus, L <= 12, gauge-anchored."""
    lat = J.lattice
    if lat.d != 2:
        raise ValueError("dp_gs_2d requires a 2D lattice")
    if lat.L > DP_MAX_SIDE:
        raise ValueError(f"row-sweep solver capped at L={DP_MAX_SIDE}, got {lat.L}")
    mask = _MASK_CACHE.get(lat.L)
    if mask is None:
        mask = _anchor_mask(lat.L)
        mask.setflags(write=False)
        _MASK_CACHE[lat.L] = mask
    return _dp_run(J, mask, allow_ties, "row-sweep solve")


def constrained_gs(J: CouplingField, B, eta, allow_ties: bool = False, solver: str = "auto"):
    """Minimizer over configurations equal to eta on the site set B.

    eta is indexed like B (any order); no gauge anchoring is applied, since
    the constraint breaks the flip symmetry. B empty falls back to the
    unconstrained anchored solve.
    """
    lat = J.lattice
    B = np.asarray(list(B), dtype=np.int64)
    eta = np.asarray(list(eta), dtype=np.int8)
    if len(B) != len(eta):
        raise ValueError("eta must assign one spin per constrained site")
    if len(B) == 0:
        return ground_state(J, solver=solver, allow_ties=allow_ties)
    if not np.all((eta == 1) | (eta == -1)):
        raise ValueError("eta entries must be +-1")

    use_dp = lat.d == 2 and lat.L <= DP_MAX_SIDE and solver in ("auto", "dp")
    if solver == "dp" and not use_dp:
        raise ValueError("dp solver unavailable for this lattice")
    if use_dp:
        L = lat.L
        mask = np.zeros((L, 1 << L))
        states = np.arange(1 << L)
        for site, s in zip(B, eta):
            r, c = lat.coords[site]
            bad = ((states >> c) & 1) != (0 if s == 1 else 1)
            mask[r, bad] = np.inf
        return _dp_run(J, mask, allow_ties, "constrained row-sweep solve")

    if lat.n_sites > EXHAUSTIVE_MAX_SITES:
        raise ValueError("lattice too large for the exhaustive constrained solver")
    template = np.ones(lat.n_sites, dtype=np.int8)
    template[B] = eta
    in_b = np.zeros(lat.n_sites, dtype=bool)
    in_b[B] = True
    free = np.flatnonzero(~in_b)
    spins, e1, e2 = _enumerate_min(J, template, free)
    if not allow_ties and e2 - e1 <= TIE_TOL:
        raise TieDetected(e1, e2, "constrained enumeration")
    sigma = SpinConfiguration(lat, spins)
    return sigma, hamiltonian(J, sigma)


def antiperiodic_field(J: CouplingField, seam: Seam) -> CouplingField:
    """The field with couplings negated on the seam edges."""
    vals = J.values.copy()
    vals[seam.edge_indices] = -vals[seam.edge_indices]
    return CouplingField(J.lattice, vals, J.model, J.seed)


def gs_with_bc(J: CouplingField, bc: str = "periodic", seam: Seam = None,
               solver: str = "auto", allow_ties: bool = False):
    """Ground state under periodic or antiperiodic boundary conditions.

    Antiperiodic negates the couplings across the seam and solves the
    modified field; the returned energy is the modified field's.
    """
    if bc == "periodic":
        return ground_state(J, solver=solver, allow_ties=allow_ties)
    if bc != "antiperiodic":
        raise ValueError(f"unknown boundary condition {bc!r}")
    if seam is None:
        raise ValueError("antiperiodic boundary conditions need a seam")
    return ground_state(antiperiodic_field(J, seam), solver=solver, allow_ties=allow_ties)


def ground_state(J: CouplingField, solver: str = "auto", allow_ties: bool = False):
    """Dispatch to the exact solver appropriate for the lattice.

    solver: "oracle" forces exhaustive enumeration, "dp" the 2D row sweep,
    "auto" picks the row sweep for d=2 (L <= 12) and enumeration otherwise.
    """
    lat = J.lattice
    if solver == "oracle":
        return exhaustive_gs(J, allow_ties=allow_ties)
    if solver == "dp":
        return dp_gs_2d(J, allow_ties=allow_ties)
    if solver != "auto":
        raise ValueError(f"unknown solver {solver!r}")
    if lat.d == 2 and lat.L <= DP_MAX_SIDE:
        return dp_gs_2d(J, allow_ties=allow_ties)
    if lat.n_sites <= EXHAUSTIVE_MAX_SITES:
        return exhaustive_gs(J, allow_ties=allow_ties)
    raise ValueError("no exact solver available for this lattice size")
