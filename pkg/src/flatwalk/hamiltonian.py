"""Observables written as H = sum_x c_x M_x over a product operator basis.

A term index ``x`` is stored sparsely: only the sites carrying a non-identity
basis operator appear. For qubits the Pauli convention X=1, Y=2, Z=3 is used;
for clock/shift products the index of Sigma_1^a Sigma_3^b is ``a*q + b``.
Only ``|c_x|**2`` and ``supp(x)`` matter to the random walk, the operator
indices are consumed by the statevector oracle alone.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

PAULI_INDEX = {"X": 1, "Y": 2, "Z": 3}
PAULI_LETTER = {v: k for k, v in PAULI_INDEX.items()}

BASES = ("pauli", "clock_shift")


class HamiltonianError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class SupportPattern:
    """Sparse term index: sorted ``(site, basis index)`` pairs, no identities."""

    entries: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        entries = tuple(sorted((int(s), int(op)) for s, op in self.entries))
        sites = [s for s, _ in entries]
        if len(set(sites)) != len(sites):
            raise HamiltonianError(f"site listed twice in {entries}")
        for s, op in entries:
            if s < 0:
                raise HamiltonianError(f"negative site index {s}")
            if op == 0:
                raise HamiltonianError(f"identity factor on site {s}; leave it out instead")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_map(cls, mapping: Mapping[int, int]) -> "SupportPattern":
        return cls(tuple(mapping.items()))

    @classmethod
    def on_sites(cls, sites: Iterable[int], op: int = 1) -> "SupportPattern":
        """Pattern placing the same operator index on every site given."""
        return cls(tuple((s, op) for s in sites))

    @property
    def weight(self) -> int:
        return len(self.entries)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(s for s, _ in self.entries)

    @property
    def mask(self) -> int:
        out = 0
        for s, _ in self.entries:
            out |= 1 << s
        return out

    def ops(self) -> dict[int, int]:
        return dict(self.entries)

    def check_bounds(self, n: int, q: int) -> None:
        for s, op in self.entries:
            if s >= n:
                raise HamiltonianError(f"site {s} out of range for n={n}")
            if not 1 <= op < q * q:
                raise HamiltonianError(f"basis index {op} out of range [1, {q * q}) on site {s}")

    def pauli_string(self, n: int) -> str:
        letters = ["I"] * n
        for s, op in self.entries:
            letters[s] = PAULI_LETTER[op]
        return "".join(letters)


class TermDistribution:
    """Sampler for a term index with probability proportional to ``|c_x|**2``."""

    def __init__(self, weights: Iterable[float]):
        w = np.asarray(list(weights), dtype=float)
        if w.size == 0:
            raise HamiltonianError("cannot sample from an empty term list")
        if np.any(w <= 0):
            raise HamiltonianError("term weights must be positive")
        self.weights = w
        self.cumulative = np.cumsum(w)
        self.total = float(self.cumulative[-1])

    def __len__(self) -> int:
        return self.weights.size

    def probabilities(self) -> np.ndarray:
        return self.weights / self.total

    def sample_indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size) * self.total
        idx = np.searchsorted(self.cumulative, u, side="right")
        # u*total can round up onto the last edge
        return np.minimum(idx, self.weights.size - 1)

    def sample_index(self, rng: np.random.Generator) -> int:
        return int(self.sample_indices(rng, 1)[0])


@dataclass(frozen=True)
class HamiltonianSpec:
    n: int
    q: int
    terms: tuple[tuple[SupportPattern, complex], ...]
    basis: str = "pauli"

    def __post_init__(self) -> None:
        if self.basis not in BASES:
            raise HamiltonianError(f"unknown basis {self.basis!r}; expected one of {BASES}")
        if not self.terms:
            raise HamiltonianError("Hamiltonian has no terms")
        seen = set()
        for pattern, _ in self.terms:
            if pattern.weight == 0:
                raise HamiltonianError("identity term not allowed (H is taken traceless)")
            if pattern in seen:
                raise HamiltonianError(f"duplicate pattern {pattern.entries}")
            seen.add(pattern)
            pattern.check_bounds(self.n, self.q)
        if self.sum_c2 <= 0:
            raise HamiltonianError("all coefficients vanish")

    @classmethod
    def from_terms(
        cls,
        n: int,
        q: int,
        terms: Iterable[tuple[SupportPattern, complex]],
        basis: str | None = None,
    ) -> "HamiltonianSpec":
        """Build a spec, merging repeated patterns by adding their coefficients."""
        merged: dict[SupportPattern, complex] = {}
        for pattern, coeff in terms:
            if pattern in merged:
                warnings.warn(f"merging duplicate term {pattern.entries}", stacklevel=2)
                merged[pattern] += complex(coeff)
            else:
                merged[pattern] = complex(coeff)
        kept = [(p, c) for p, c in merged.items() if c != 0]
        if len(kept) < len(merged):
            warnings.warn("dropping terms with zero coefficient", stacklevel=2)
        if basis is None:
            basis = "pauli" if q == 2 else "clock_shift"
        return cls(n=n, q=q, terms=tuple(kept), basis=basis)

    @property
    def patterns(self) -> list[SupportPattern]:
        return [p for p, _ in self.terms]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.terms], dtype=complex)

    @property
    def weights(self) -> np.ndarray:
        """``|c_x|**2`` per term."""
        return np.abs(self.coefficients) ** 2

    @property
    def sum_c2(self) -> float:
        return float(np.sum(self.weights))

    def support_masks(self) -> np.ndarray:
        """Boolean (terms, n) array of supports."""
        out = np.zeros((len(self.terms), self.n), dtype=bool)
        for i, (pattern, _) in enumerate(self.terms):
            out[i, sorted(pattern.support)] = True
        return out

    def distribution(self) -> TermDistribution:
        return TermDistribution(self.weights)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "basis": self.basis,
            "terms": [
                {
                    "sites": [s for s, _ in p.entries],
                    "ops": [op for _, op in p.entries],
                    "coeff": [c.real, c.imag],
                }
                for p, c in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HamiltonianSpec":
        try:
            n, q = int(data["n"]), int(data["q"])
        except (KeyError, TypeError, ValueError) as exc:
            raise HamiltonianError(f"Hamiltonian JSON needs integer n and q ({exc})") from exc
        if "pauli_terms" in data:
            if q != 2:
                raise HamiltonianError("pauli_terms requires q=2")
            spec = parse_pauli([(s, _coeff(c)) for s, c in data["pauli_terms"]])
            if spec.n != n:
                raise HamiltonianError(f"Pauli strings have length {spec.n}, expected n={n}")
            return spec
        terms = []
        for t in data.get("terms", []):
            sites, ops = t["sites"], t["ops"]
            if len(sites) != len(ops):
                raise HamiltonianError("sites and ops differ in length")
            terms.append((SupportPattern(tuple(zip(sites, ops))), _coeff(t["coeff"])))
        return cls.from_terms(n, q, terms, basis=data.get("basis"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> "HamiltonianSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _coeff(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise HamiltonianError(f"complex coefficient must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    return complex(value)


def parse_pauli(strings: Iterable[tuple[str, complex]]) -> HamiltonianSpec:
    """Qubit Hamiltonian from ``(pauli string, coefficient)`` pairs, e.g. ``("ZZI", 1.0)``."""
    strings = list(strings)
    if not strings:
        raise HamiltonianError("no Pauli terms given")
    lengths = {len(s) for s, _ in strings}
    if len(lengths) != 1:
        raise HamiltonianError(f"Pauli strings of mixed lengths {sorted(lengths)}")
    n = lengths.pop()
    terms = []
    for s, coeff in strings:
        entries = []
        for site, letter in enumerate(s.upper()):
            if letter == "I":
                continue
            if letter not in PAULI_INDEX:
                raise HamiltonianError(f"unknown Pauli letter {letter!r} in {s!r}")
            entries.append((site, PAULI_INDEX[letter]))
        if not entries:
            raise HamiltonianError(f"identity string {s!r} not allowed (H is taken traceless)")
        terms.append((SupportPattern(tuple(entries)), coeff))
    return HamiltonianSpec.from_terms(n, 2, terms, basis="pauli")


def parse_clock_shift(
    terms: Iterable[tuple[Mapping[int, tuple[int, int]], complex]], n: int, q: int
) -> HamiltonianSpec:
    """Terms given as ``{site: (a, b)}`` exponents of Sigma_1^a Sigma_3^b."""
    parsed = []
    for exps, coeff in terms:
        entries = []
        for site, (a, b) in exps.items():
            if not (0 <= a < q and 0 <= b < q):
                raise HamiltonianError(f"exponents {(a, b)} out of range for q={q}")
            if (a, b) == (0, 0):
                raise HamiltonianError(f"identity factor (0,0) on site {site}")
            entries.append((site, a * q + b))
        parsed.append((SupportPattern(tuple(entries)), coeff))
    return HamiltonianSpec.from_terms(n, q, parsed, basis="clock_shift")


def sample_term(dist: TermDistribution, patterns: list[SupportPattern], rng: np.random.Generator) -> SupportPattern:
    return patterns[dist.sample_index(rng)]


def operator_norm_bound(spec: HamiltonianSpec) -> float:
    """Triangle-inequality bound sum |c_x| on ||H|| (basis operators are unitary)."""
    return float(np.sum(np.abs(spec.coefficients)))
