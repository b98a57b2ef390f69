"""Random walks on I/S site labels and the Monte Carlo flatness estimators.

Each site carries a label, ``I`` or ``S`` (``S`` stored as ``True``). Every
entangling gate leaves an ``(I, I)`` or ``(S, S)`` pair alone and resolves a
mixed pair to ``(S, S)`` or ``(I, I)``. In the biased walk the initial labels
are ``S`` with probability ``1/(q+1)`` and mixed pairs become ``(S, S)`` with
probability ``1/(q**2+1)``; then ``g_x`` is the probability that every site
of ``supp(x)`` ends with label ``S``. The unbiased walk flips fair coins
instead and corrects with an importance weight.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _rng
from .circuit import Architecture, ArchitectureError, check
from .hamiltonian import HamiltonianError, HamiltonianSpec, SupportPattern

METHODS = ("biased", "unbiased")


@dataclass(frozen=True)
class Configuration:
    """Site labels as a bitmask, bit ``s`` set when site ``s`` has label S."""

    n: int
    bits: int = 0

    @classmethod
    def from_labels(cls, labels: Sequence[bool] | str) -> "Configuration":
        if isinstance(labels, str):
            labels = [c == "S" for c in labels]
        bits = 0
        for s, lab in enumerate(labels):
            if lab:
                bits |= 1 << s
        return cls(len(labels), bits)

    @classmethod
    def all_s(cls, n: int) -> "Configuration":
        return cls(n, (1 << n) - 1)

    def __getitem__(self, site: int) -> bool:
        return bool(self.bits >> site & 1)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(s for s in range(self.n) if self[s])

    @property
    def count(self) -> int:
        return bin(self.bits).count("1")

    def labels(self) -> str:
        return "".join("S" if self[s] else "I" for s in range(self.n))

    def as_array(self) -> np.ndarray:
        return np.array([self[s] for s in range(self.n)], dtype=bool)

    def contains(self, support: Iterable[int]) -> bool:
        return all(self[s] for s in support)


@dataclass(frozen=True)
class Trajectory:
    final: Configuration
    flips: int
    history: tuple[Configuration, ...] | None = None


@dataclass(frozen=True)
class EstimatorConfig:
    epsilon: float = 0.05
    delta: float = 0.05
    seed: int = 0
    sample_override: int | None = None
    method: str = "biased"
    workers: int = 1
    reuse_trajectory: bool = False

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.sample_override is not None and self.sample_override < 1:
            raise ValueError("sample_override must be a positive integer")

    def n_samples(self, sum_c2: float = 1.0) -> int:
        if self.sample_override is not None:
            return int(self.sample_override)
        return chernoff_samples(self.epsilon, self.delta, sum_c2)


@dataclass
class EstimateReport:
    estimate: float
    std_error: float
    n_samples: int
    seed: int
    sum_c2: float
    method: str
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        if not out.pop("extra"):
            return out
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def chernoff_samples(epsilon: float, delta: float, sum_c2: float = 1.0) -> int:
    """``ceil(ln(2/delta)/2 * (sum_c2/epsilon)**2)``, at least one."""
    return max(1, math.ceil(0.5 * math.log(2.0 / delta) * (sum_c2 / epsilon) ** 2))


def s_probability(q: int) -> float:
    return 1.0 / (q + 1)


def merge_probability(q: int) -> float:
    """Chance that a mixed pair resolves to (S, S) in the biased walk."""
    return 1.0 / (q * q + 1)


# -- single trajectories ---------------------------------------------------


def sample_initial(n: int, q: int, rng: np.random.Generator) -> Configuration:
    return Configuration.from_labels(rng.random(n) < s_probability(q))


def step_biased(
    config: Configuration, gate: tuple[int, int], q: int, rng: np.random.Generator
) -> tuple[Configuration, int]:
    """Apply one gate; returns the new configuration and whether it flipped a label."""
    a, b = gate
    if a == b:
        raise ArchitectureError(f"gate endpoints must differ, got {gate}")
    la, lb = config[a], config[b]
    if la == lb:
        return config, 0
    pair = (1 << a) | (1 << b)
    if rng.random() < merge_probability(q):
        return Configuration(config.n, config.bits | pair), 1
    return Configuration(config.n, config.bits & ~pair), 1


def run_biased(
    arch: Architecture,
    rng: np.random.Generator,
    start: Configuration | None = None,
    record: bool = False,
) -> Trajectory:
    """One trajectory of the biased walk; ``start`` forces the initial labels."""
    check(arch)
    config = start if start is not None else sample_initial(arch.n, arch.q, rng)
    history = [config] if record else None
    flips = 0
    for gate in arch.gates:
        config, flipped = step_biased(config, gate, arch.q, rng)
        flips += flipped
        if record:
            history.append(config)
    return Trajectory(config, flips, tuple(history) if record else None)


# -- vectorized batches ----------------------------------------------------


def simulate_batch(
    arch: Architecture,
    rng: np.random.Generator,
    size: int,
    method: str = "biased",
    start: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Final labels ``(size, n)`` and flip counts ``(size,)`` for a batch of walks.

    One uniform draw per gate per walk is consumed whether or not the pair is
    mixed, so the stream position never depends on the trajectory.
    """
    n, q = arch.n, arch.q
    if method == "biased":
        p_init, p_merge = s_probability(q), merge_probability(q)
    elif method == "unbiased":
        p_init, p_merge = 0.5, 0.5
    else:
        raise ValueError(f"unknown walk {method!r}")
    if start is None:
        states = rng.random((size, n)) < p_init
    else:
        states = np.broadcast_to(np.asarray(start, dtype=bool), (size, n)).copy()
    flips = np.zeros(size, dtype=np.int64)
    for a, b in arch.gates:
        la, lb = states[:, a], states[:, b]
        mixed = la != lb
        merged = rng.random(size) < p_merge
        new = np.where(mixed, merged, la)
        states[:, a] = new
        states[:, b] = new
        flips += mixed
    return states, flips


def log_importance_weight(n: int, q: int, flips: np.ndarray, s_count: np.ndarray) -> np.ndarray:
    """log val = n log(2q/(q+1)) + flips log(2q/(q^2+1)) - |final| log q."""
    return (
        n * math.log(2 * q / (q + 1))
        + flips * math.log(2 * q / (q * q + 1))
        - s_count * math.log(q)
    )


def contained(states: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """``out[b, t]``: does the S-set of walk ``b`` contain support ``t``."""
    s = np.packbits(states, axis=-1)
    m = np.packbits(masks, axis=-1)
    return np.all((s[:, None, :] & m[None, :, :]) == m[None, :, :], axis=-1)


def _support_mask(arch: Architecture, x: SupportPattern | Iterable[int]) -> np.ndarray:
    support = x.support if isinstance(x, SupportPattern) else frozenset(int(s) for s in x)
    mask = np.zeros(arch.n, dtype=bool)
    for s in support:
        if not 0 <= s < arch.n:
            raise ArchitectureError(f"support site {s} out of range for n={arch.n}")
        mask[s] = True
    return mask


# -- estimators ------------------------------------------------------------


def _estimate_masks(
    arch: Architecture,
    masks: np.ndarray,
    weights: np.ndarray,
    config: EstimatorConfig,
    n_samples: int,
    method: str,
    reuse: bool,
) -> tuple[float, float]:
    """Mean and standard error of the per-sample indicator (or weighted indicator).

    Per sample one walk is drawn; either one term is drawn with probability
    proportional to its weight (``reuse=False``) or all terms are scored on the
    same walk (``reuse=True``).
    """
    total = float(np.sum(weights))
    cumulative = np.cumsum(weights)
    stream = _rng.STREAM_BIASED if method == "biased" else _rng.STREAM_UNBIASED

    def block(b: int, size: int):
        rng = _rng.block_rng(config.seed, stream, b)
        states, flips = simulate_batch(arch, rng, size, method=method)
        hits = contained(states, masks)
        if reuse:
            values = hits.astype(float) @ (weights / total)
        else:
            idx = np.searchsorted(cumulative, rng.random(size) * total, side="right")
            idx = np.minimum(idx, len(weights) - 1)
            values = hits[np.arange(size), idx].astype(float)
        if method == "unbiased":
            values = values * np.exp(log_importance_weight(arch.n, arch.q, flips, states.sum(axis=1)))
        return _rng.block_stats(values)

    acc = _rng.combine(_rng.map_blocks(block, n_samples, workers=config.workers))
    return acc.mean, acc.std_error


def estimate_gx(
    arch: Architecture, x: SupportPattern | Iterable[int], config: EstimatorConfig = EstimatorConfig()
) -> EstimateReport:
    """Monte Carlo estimate of ``g_x``, the chance that ``supp(x)`` ends all-S."""
    check(arch)
    mask = _support_mask(arch, x)
    n_samples = config.n_samples(1.0)
    if not mask.any():
        return EstimateReport(1.0, 0.0, n_samples, config.seed, 1.0, config.method)
    mean, se = _estimate_masks(arch, mask[None, :], np.ones(1), config, n_samples, config.method, False)
    return EstimateReport(mean, se, n_samples, config.seed, 1.0, config.method)


def estimate_gx_unbiased(
    arch: Architecture, x: SupportPattern | Iterable[int], config: EstimatorConfig = EstimatorConfig()
) -> EstimateReport:
    """Importance-weighted estimate of ``g_x`` from the fair-coin walk.

    The empty support is not short-circuited here: the weights average to one,
    which makes it a calibration check of the weighting.
    """
    check(arch)
    mask = _support_mask(arch, x)
    n_samples = config.n_samples(1.0)
    mean, se = _estimate_masks(arch, mask[None, :], np.ones(1), config, n_samples, "unbiased", False)
    return EstimateReport(mean, se, n_samples, config.seed, 1.0, "unbiased")


def estimate_second_moment(
    arch: Architecture, spec: HamiltonianSpec, config: EstimatorConfig = EstimatorConfig()
) -> EstimateReport:
    """Estimate of E_V E_theta f^2 = sum_x |c_x|^2 g_x by sampling walks and terms.

    Uses ``ceil(ln(2/delta)/2 * (sum_c2/epsilon)**2)`` samples unless overridden;
    with the biased walk the result is within ``epsilon`` of the truth with
    probability at least ``1 - delta``. Each sample costs O(n + m) for the
    walk plus O(log T) to draw one of T terms.
    """
    check(arch)
    if (spec.n, spec.q) != (arch.n, arch.q):
        raise HamiltonianError(
            f"Hamiltonian is on (n={spec.n}, q={spec.q}) but architecture on (n={arch.n}, q={arch.q})"
        )
    weights = spec.weights
    sum_c2 = float(np.sum(weights))
    n_samples = config.n_samples(sum_c2)
    mean, se = _estimate_masks(
        arch, spec.support_masks(), weights, config, n_samples, config.method, config.reuse_trajectory
    )
    method = config.method + ("+reuse" if config.reuse_trajectory else "")
    return EstimateReport(sum_c2 * mean, sum_c2 * se, n_samples, config.seed, sum_c2, method)
