"""Coupling disorder: continuous symmetric distributions and reproducible sampling.

Every draw is a pure function of a (master seed, stream, purpose) triple,
realized through numpy's counter-based Philox generator, so partial
resampling for conditional Monte Carlo is reproducible regardless of
execution order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import TorusLattice

__all__ = [
    "DisorderModel",
    "SeedSpec",
    "CouplingField",
    "sample_couplings",
    "resample_outside",
    "zero_inside",
    "write_field",
    "read_field",
]

_PURPOSES = {"coupling": 0, "resample": 1, "perturbation": 2}

_CONTINUOUS_FAMILIES = ("gaussian", "uniform", "laplace")


@dataclass(frozen=True)
class SeedSpec:
    """Addressable random stream: (master, stream, purpose) -> sample.

    `stream` may be an int or a tuple of ints; tuples address nested loops
    (outer sample, block level, inner replicate) without collision.
    """

    master: int
    stream: int | tuple[int, ...] = 0
    purpose: str = "coupling"

    def __post_init__(self):
        if self.purpose not in _PURPOSES:
            raise ValueError(f"unknown purpose {self.purpose!r}, expected one of {sorted(_PURPOSES)}")
        if not 0 <= self.master < 2**64:
            raise ValueError("master seed must fit in 64 bits")

    def _stream_key(self) -> tuple[int, ...]:
        s = self.stream
        return (s,) if isinstance(s, int) else tuple(int(v) for v in s)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.master, spawn_key=(_PURPOSES[self.purpose],) + self._stream_key()
        )
        return np.random.Generator(np.random.Philox(ss))

    def with_stream(self, stream, purpose: str = None) -> "SeedSpec":
        return SeedSpec(self.master, stream, purpose if purpose is not None else self.purpose)


@dataclass(frozen=True)
class DisorderModel:
    """Edge-coupling law: continuous, symmetric under J -> -J, finite 4th moment.

    Families: "gaussian" (std = scale), "uniform" (on [-scale, scale]),
    "laplace" (symmetrized exponential, scale = b). Atomic laws such as +-J
    are rejected: uniqueness of the ground state pair needs a continuous
    distribution.
    """

    family: str
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in _CONTINUOUS_FAMILIES:
            raise ValueError(
                f"coupling family {self.family!r} is not a continuous symmetric law; "
                f"expected one of {_CONTINUOUS_FAMILIES} (discrete laws like +-J are not supported)"
            )
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")

    @property
    def variance(self) -> float:
        a = self.scale
        return {"gaussian": a * a, "uniform": a * a / 3.0, "laplace": 2.0 * a * a}[self.family]

    @property
    def fourth_moment(self) -> float:
        a4 = self.scale**4
        return {"gaussian": 3.0 * a4, "uniform": a4 / 5.0, "laplace": 24.0 * a4}[self.family]

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.family == "gaussian":
            return rng.normal(0.0, self.scale, n)
        if self.family == "uniform":
            return rng.uniform(-self.scale, self.scale, n)
        return rng.laplace(0.0, self.scale, n)

    def label(self) -> str:
        return f"{self.family}(scale={self.scale!r})"


@dataclass(frozen=True)
class CouplingField:
    """One disorder realization: a real coupling per edge, in canonical edge order."""

    lattice: TorusLattice
    values: np.ndarray = field(repr=False)
    model: DisorderModel = None
    seed: SeedSpec = None

    def __post_init__(self):
        if self.values.shape != (self.lattice.n_edges,):
            raise ValueError("coupling values must have one entry per edge")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("coupling values must be finite")
        self.values.setflags(write=False)

    def with_values(self, values: np.ndarray, model=None, seed=None) -> "CouplingField":
        return CouplingField(self.lattice, np.asarray(values, dtype=np.float64), model, seed)

    def __add__(self, other: "CouplingField") -> "CouplingField":
        if other.lattice is not self.lattice:
            raise ValueError("cannot add coupling fields on different lattices")
        return CouplingField(self.lattice, self.values + other.values)

    def translated(self, t) -> "CouplingField":
        perm = self.lattice.edge_permutation(t)
        out = np.empty_like(self.values)
        out[perm] = self.values
        return CouplingField(self.lattice, out, self.model, self.seed)


def sample_couplings(model: DisorderModel, lat: TorusLattice, seed: SeedSpec) -> CouplingField:
    """Draw an i.i.d. coupling field; deterministic in (model, lattice, seed)."""
    rng = seed.generator()
    return CouplingField(lat, model.draw(rng, lat.n_edges), model, seed)


def resample_outside(J: CouplingField, fixed: np.ndarray, seed: SeedSpec) -> CouplingField:
    """Redraw every coupling except those at the `fixed` edge indices.

    The fixed values are preserved bit-exactly; the rest are fresh i.i.d.
    draws from J's model. Stream consumption does not depend on `fixed`,
    so the same seed with different conditioning sets stays reproducible.
    """
    if J.model is None:
        raise ValueError("resample_outside needs a field with model provenance")
    fresh = J.model.draw(seed.generator(), J.lattice.n_edges)
    fixed = np.asarray(fixed, dtype=np.int64)
    fresh[fixed] = J.values[fixed]
    return CouplingField(J.lattice, fresh, J.model, seed)


def zero_inside(J: CouplingField, B) -> CouplingField:
    """Zero the couplings on edges with both endpoints in the site set B."""
    in_b = np.zeros(J.lattice.n_sites, dtype=bool)
    in_b[np.asarray(list(B), dtype=np.int64)] = True if len(B) else False
    out = J.values.copy()
    if len(B):
        mask = in_b[J.lattice.edges[:, 0]] & in_b[J.lattice.edges[:, 1]]
        out[mask] = 0.0
    return CouplingField(J.lattice, out, J.model, J.seed)


def write_field(path, J: CouplingField) -> None:
    """Text export: one '# key = value' header block, then one line per edge.

    Line format: x1 y1 x2 y2 value (d=1 sites carry a 0 second coordinate),
    value at full precision.
    """
    lat = J.lattice
    lines = [
        f"# lattice = L={lat.L} d={lat.d}",
        f"# model = {J.model.label() if J.model is not None else 'none'}",
        f"# seed = {_seed_label(J.seed)}",
    ]
    for e, (a, b) in enumerate(lat.edges):
        ca = _coord2(lat, a)
        cb = _coord2(lat, b)
        lines.append(f"{ca[0]} {ca[1]} {cb[0]} {cb[1]} {J.values[e]!r}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_field(path, lat: TorusLattice) -> CouplingField:
    """Read a field written by write_field back onto the given lattice."""
    values = np.empty(lat.n_edges, dtype=np.float64)
    seen = np.zeros(lat.n_edges, dtype=bool)
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            x1, y1, x2, y2, v = line.split()
            a = lat.site(int(x1), int(y1)) if lat.d == 2 else lat.site(int(x1))
            b = lat.site(int(x2), int(y2)) if lat.d == 2 else lat.site(int(x2))
            idx = lat.edge_index[(min(a, b), max(a, b))]
            values[idx] = float(v)
            seen[idx] = True
    if not seen.all():
        raise ValueError("field file does not cover every lattice edge")
    return CouplingField(lat, values)


def _coord2(lat: TorusLattice, idx: int) -> tuple[int, int]:
    c = lat.site_coord(idx)
    return (c[0], 0) if lat.d == 1 else (c[0], c[1])


def _seed_label(seed: SeedSpec) -> str:
    if seed is None:
        return "none"
    return f"master={seed.master} stream={seed.stream} purpose={seed.purpose}"
