"""Entangling-gate architectures and their combinatorial statistics.

An architecture is the random circuit left over once every parameterized
gate is stripped out: ``n`` qudits of local dimension ``q`` and an ordered
list of layers, each layer a set of parallel two-site gates. Parameterized
gates do not change second moments, so only their count ``p`` and generator
norms are carried along as metadata.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Gate = tuple[int, int]

DEFAULT_GENERATOR_NORM = 0.5
MAX_EXACT_CONNECTIVITY_N = 16


class ArchitectureError(ValueError):
    """Raised when an architecture is used in a way the model does not admit."""


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    layer: int | None = None
    site: int | None = None

    def __str__(self) -> str:
        return self.message


@dataclass(frozen=True)
class Architecture:
    """Layered two-qudit entangling gates on ``n`` sites of dimension ``q``.

    ``lenient`` switches off the rule that every site must be touched by at
    least one gate; it exists for degenerate test circuits.
    """

    n: int
    q: int
    layers: tuple[tuple[Gate, ...], ...]
    p: int | None = None
    generator_norms: tuple[float, ...] | None = None
    lenient: bool = False

    def __post_init__(self) -> None:
        if int(self.n) < 1:
            raise ArchitectureError(f"n must be a positive integer, got {self.n}")
        if int(self.q) < 2:
            raise ArchitectureError(f"q must be an integer >= 2, got {self.q}")
        layers = tuple(
            tuple((int(a), int(b)) for a, b in layer) for layer in self.layers
        )
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "layers", layers)
        if self.p is not None:
            if int(self.p) < 0:
                raise ArchitectureError("p must be nonnegative")
            object.__setattr__(self, "p", int(self.p))
        if self.generator_norms is not None:
            norms = tuple(float(v) for v in self.generator_norms)
            if any(v < 0 for v in norms):
                raise ArchitectureError("generator norms must be nonnegative")
            object.__setattr__(self, "generator_norms", norms)

    @property
    def gates(self) -> list[Gate]:
        """All gates in application order."""
        return [g for layer in self.layers for g in layer]

    @property
    def m(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def d(self) -> int:
        return len(self.layers)

    def norms(self) -> tuple[float, ...]:
        """Generator norms, defaulting to 1/2 for each of the ``p`` parameters."""
        if self.generator_norms is not None:
            return self.generator_norms
        return (DEFAULT_GENERATOR_NORM,) * (self.p or 0)

    def sum_generator_sq(self) -> float:
        return float(sum(v * v for v in self.norms()))

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        out: dict = {
            "n": self.n,
            "q": self.q,
            "layers": [[list(g) for g in layer] for layer in self.layers],
        }
        if self.p is not None:
            out["p"] = self.p
        if self.generator_norms is not None:
            out["generator_norms"] = list(self.generator_norms)
        return out

    @classmethod
    def from_dict(cls, data: dict, lenient: bool = False) -> "Architecture":
        try:
            n, q, layers = data["n"], data["q"], data["layers"]
        except (KeyError, TypeError) as exc:
            raise ArchitectureError(f"architecture JSON is missing field {exc}") from exc
        for layer in layers:
            for gate in layer:
                if len(gate) != 2:
                    raise ArchitectureError(f"gate {gate!r} is not a site pair")
        p = data.get("p")
        norms = data.get("generator_norms")
        if norms is not None and not isinstance(norms, (list, tuple)):
            # scalar shorthand: one value for every parameter
            if p is None:
                raise ArchitectureError("scalar generator_norms needs p")
            norms = [float(norms)] * int(p)
        return cls(n=n, q=q, layers=layers, p=p, generator_norms=norms, lenient=lenient)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def load(cls, path: str | Path, lenient: bool = False) -> "Architecture":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), lenient=lenient)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


@dataclass(frozen=True)
class CutStats:
    gates_crossing: int
    subset: frozenset[int] = field(default_factory=frozenset)


@dataclass(frozen=True)
class Lightcone:
    sites: frozenset[int]

    @property
    def n_prime(self) -> int:
        return len(self.sites)


def validate(arch: Architecture) -> list[Violation]:
    """Every way ``arch`` breaks the model's rules; empty means admissible."""
    out: list[Violation] = []
    touched: set[int] = set()
    for li, layer in enumerate(arch.layers):
        seen: set[int] = set()
        for a, b in layer:
            bad = False
            for s in (a, b):
                if not 0 <= s < arch.n:
                    out.append(Violation("range", f"site {s} out of range [0, {arch.n}) in layer {li}", li, s))
                    bad = True
            if a == b:
                out.append(Violation("self-loop", f"gate ({a},{b}) in layer {li} has equal endpoints", li, a))
                bad = True
            if bad:
                continue
            for s in (a, b):
                if s in seen:
                    out.append(Violation("parallelism", f"site {s} repeated in layer {li}", li, s))
                seen.add(s)
            touched.update((a, b))
    if not arch.lenient:
        for s in range(arch.n):
            if s not in touched:
                out.append(Violation("coverage", f"site {s} never entangled", None, s))
    if arch.generator_norms is not None and arch.p is not None:
        if len(arch.generator_norms) != arch.p:
            out.append(Violation("metadata", f"{len(arch.generator_norms)} generator norms for p={arch.p}"))
    return out


def check(arch: Architecture) -> Architecture:
    """Raise :class:`ArchitectureError` listing all violations, else return ``arch``."""
    problems = validate(arch)
    if problems:
        raise ArchitectureError("invalid architecture: " + "; ".join(map(str, problems)))
    return arch


def stats(arch: Architecture) -> tuple[int, int]:
    """Gate count ``m`` and depth ``d``."""
    check(arch)
    return arch.m, arch.d


def _as_site_set(arch: Architecture, support: Iterable[int]) -> frozenset[int]:
    sites = frozenset(int(s) for s in support)
    for s in sites:
        if not 0 <= s < arch.n:
            raise ArchitectureError(f"site {s} out of range [0, {arch.n})")
    return sites


def gates_crossing(arch: Architecture, support: Iterable[int]) -> CutStats:
    """Number of gates with exactly one endpoint inside ``support``."""
    sites = _as_site_set(arch, support)
    if not sites or len(sites) == arch.n:
        raise ArchitectureError("cut undefined for empty or full support")
    count = sum((a in sites) != (b in sites) for a, b in arch.gates)
    return CutStats(gates_crossing=count, subset=sites)


def _crossing_table(arch: Architecture) -> np.ndarray:
    """Boolean (d, 2**(n-1) - 1) table: does layer l cross cut s.

    Cuts are indexed by bitmasks with the top site cleared, since a cut and
    its complement are the same cut.
    """
    n = arch.n
    subsets = np.arange(1, 1 << (n - 1), dtype=np.int64)
    table = np.zeros((arch.d, subsets.size), dtype=bool)
    for li, layer in enumerate(arch.layers):
        for a, b in layer:
            table[li] |= (((subsets >> a) ^ (subsets >> b)) & 1).astype(bool)
    return table


def regular_connectivity(
    arch: Architecture, max_exact_n: int = MAX_EXACT_CONNECTIVITY_N
) -> int | None:
    """Smallest ``r`` such that every window of ``r`` consecutive layers
    contains a gate across every proper cut of the sites.

    Returns ``None`` when ``n`` exceeds ``max_exact_n`` (the caller must then
    supply ``r``) and also when no window length works, which happens iff the
    union of all gates leaves the sites disconnected.
    """
    check(arch)
    if arch.d == 0:
        raise ArchitectureError("regular connectivity undefined for depth 0")
    if arch.n > max_exact_n:
        return None
    if arch.n == 1:
        # no proper cuts at all
        return 1
    table = _crossing_table(arch)
    counts = np.vstack([np.zeros((1, table.shape[1]), dtype=np.int64), np.cumsum(table, axis=0)])
    for r in range(1, arch.d + 1):
        windows = counts[r:] - counts[:-r]
        if np.all(windows > 0):
            return r
    return None


def brickwork_1d(n: int, q: int, d: int, **meta) -> Architecture:
    """Periodic 1D brickwork of depth ``d``.

    Odd timesteps pair ``(2j, 2j+1)``; even timesteps pair
    ``(2j, 2j-1 mod n)``.
    """
    if n < 2 or n % 2:
        raise ArchitectureError(f"brickwork needs an even n >= 2, got {n}")
    if d < 1:
        raise ArchitectureError(f"brickwork needs d >= 1, got {d}")
    odd = tuple((2 * j, 2 * j + 1) for j in range(n // 2))
    even = tuple((2 * j, (2 * j - 1) % n) for j in range(n // 2))
    layers = tuple(odd if t % 2 == 1 else even for t in range(1, d + 1))
    return Architecture(n=n, q=q, layers=layers, **meta)


def backward_lightcone(arch: Architecture, support: Iterable[int]) -> Lightcone:
    """Sites that can influence ``support``, tracing gates from last to first."""
    cone = set(_as_site_set(arch, support))
    if not cone:
        raise ArchitectureError("lightcone of an empty support")
    for layer in reversed(arch.layers):
        for a, b in layer:
            if a in cone or b in cone:
                cone.update((a, b))
    return Lightcone(frozenset(cone))


def contiguous_block(n: int, start: int, k: int) -> list[int]:
    """``k`` adjacent sites on the ring of ``n`` sites starting at ``start``."""
    return [(start + i) % n for i in range(k)]


def fig1_architecture(q: int = 2) -> Architecture:
    """Six-site, three-layer, eight-gate layout with regular connectivity 2."""
    layers: Sequence[Sequence[Gate]] = (
        ((0, 1), (2, 3), (4, 5)),
        ((1, 2), (3, 4)),
        ((0, 1), (2, 3), (4, 5)),
    )
    return Architecture(n=6, q=q, layers=layers, p=36)
