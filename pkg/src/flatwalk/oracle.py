"""Reference computations at desk scale.

Three independent routes to ``g_x``:

* propagate the exact distribution of the biased walk over all ``2**n``
  label configurations, gate by gate;
* enumerate every valid trajectory and add up its closed-form weight;
* sample Haar-random entangling gates, simulate the statevector and average
  ``|<psi|M_x|psi>|**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from . import _rng
from .circuit import Architecture, ArchitectureError, check
from .hamiltonian import HamiltonianError, HamiltonianSpec, SupportPattern
from .walk import EstimateReport

MAX_EXACT_N = 20
MAX_ENUM_N = 8
MAX_ENUM_M = 12
MAX_STATEVECTOR_DIM = 1 << 20


class OracleCapError(ValueError):
    """Instance too large for a brute-force oracle."""


def _support_bits(x: SupportPattern | Iterable[int]) -> int:
    if isinstance(x, SupportPattern):
        return x.mask
    bits = 0
    for s in x:
        bits |= 1 << int(s)
    return bits


# -- transfer matrix -------------------------------------------------------


@dataclass(frozen=True)
class StateDistribution:
    """Probabilities of all label configurations, indexed by S-bitmask."""

    n: int
    probs: np.ndarray

    def total(self) -> float:
        return float(self.probs.sum())

    def containment_mass(self, mask: int) -> float:
        """Probability that every site in ``mask`` carries label S."""
        if mask == 0:
            return 1.0
        idx = _indices(self.n)
        return float(self.probs[(idx & mask) == mask].sum())

    def all_s(self) -> float:
        return float(self.probs[-1])


@lru_cache(maxsize=8)
def _indices(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    idx.flags.writeable = False
    return idx


def _initial_product(n: int, p_s) -> np.ndarray:
    # product measure, built one site at a time
    probs = np.ones(1, dtype=object if isinstance(p_s, Fraction) else float)
    for _ in range(n):
        probs = np.concatenate([probs * (1 - p_s), probs * p_s])
    return probs


def apply_gate(probs: np.ndarray, n: int, gate: tuple[int, int], p_merge: float) -> None:
    """Update ``probs`` in place for one gate acting on the pair of sites."""
    hi, lo = max(gate), min(gate)
    view = probs.reshape(1 << (n - hi - 1), 2, 1 << (hi - lo - 1), 2, 1 << lo)
    mixed = view[:, 1, :, 0, :] + view[:, 0, :, 1, :]
    view[:, 1, :, 1, :] += p_merge * mixed
    view[:, 0, :, 0, :] += (1 - p_merge) * mixed
    view[:, 1, :, 0, :] = 0
    view[:, 0, :, 1, :] = 0


def propagate(
    arch: Architecture,
    walk: str = "biased",
    max_n: int = MAX_EXACT_N,
    initial: np.ndarray | None = None,
    rational: bool = False,
) -> StateDistribution:
    """Exact distribution of the final labels of the biased or unbiased walk.

    ``rational=True`` carries :class:`fractions.Fraction` entries instead of
    floats; slow, meant for proving inequalities that are tight in the limit.
    """
    check(arch)
    if arch.n > max_n:
        raise OracleCapError(f"n={arch.n} exceeds the transfer-matrix cap {max_n}")
    q = arch.q
    if walk == "biased":
        p_s, p_merge = Fraction(1, q + 1), Fraction(1, q * q + 1)
    elif walk == "unbiased":
        p_s, p_merge = Fraction(1, 2), Fraction(1, 2)
    else:
        raise ValueError(f"unknown walk {walk!r}")
    if not rational:
        p_s, p_merge = float(p_s), float(p_merge)
    if initial is None:
        probs = _initial_product(arch.n, p_s)
    else:
        probs = np.array(initial, dtype=object if rational else float)
    for gate in arch.gates:
        apply_gate(probs, arch.n, gate, p_merge)
    return StateDistribution(arch.n, probs)


def exact_gx(arch: Architecture, x: SupportPattern | Iterable[int], max_n: int = MAX_EXACT_N) -> float:
    return propagate(arch, max_n=max_n).containment_mass(_support_bits(x))


def exact_second_moment(arch: Architecture, spec: HamiltonianSpec, max_n: int = MAX_EXACT_N) -> float:
    """sum_x |c_x|^2 g_x from a single propagation."""
    if (spec.n, spec.q) != (arch.n, arch.q):
        raise HamiltonianError("Hamiltonian and architecture disagree on (n, q)")
    dist = propagate(arch, max_n=max_n)
    return math.fsum(w * dist.containment_mass(p.mask) for p, w in zip(spec.patterns, spec.weights))


def exact_absorption_probability(arch: Architecture, max_n: int = MAX_EXACT_N, rational: bool = False):
    """Probability that the biased walk ends in the all-S configuration.

    A :class:`fractions.Fraction` when ``rational`` is set, else a float.
    """
    dist = propagate(arch, max_n=max_n, rational=rational)
    return dist.probs[-1] if rational else dist.all_s()


# -- trajectory enumeration ------------------------------------------------


def trajectory_weight(n: int, q: int, final_bits: int, flips: int, x_bits: int) -> float:
    """(q/(q+1))^n q^(-|final|) (q/(q^2+1))^flips, or zero unless supp(x) is all-S."""
    if final_bits & x_bits != x_bits:
        return 0.0
    s_count = bin(final_bits).count("1")
    return (q / (q + 1)) ** n * q ** (-s_count) * (q / (q * q + 1)) ** flips


def exact_gx_enumeration(
    arch: Architecture,
    x: SupportPattern | Iterable[int],
    max_n: int = MAX_ENUM_N,
    max_m: int = MAX_ENUM_M,
) -> float:
    """g_x as a sum of trajectory weights over every valid trajectory."""
    check(arch)
    if arch.n > max_n or arch.m > max_m:
        raise OracleCapError(f"enumeration capped at n<={max_n}, m<={max_m}; got n={arch.n}, m={arch.m}")
    n, q = arch.n, arch.q
    x_bits = _support_bits(x)
    gates = [((1 << a), (1 << b)) for a, b in arch.gates]
    m = len(gates)
    total = []

    def descend(t: int, bits: int, flips: int) -> None:
        if t == m:
            total.append(trajectory_weight(n, q, bits, flips, x_bits))
            return
        ba, bb = gates[t]
        sa, sb = bool(bits & ba), bool(bits & bb)
        if sa == sb:
            descend(t + 1, bits, flips)
        else:
            descend(t + 1, bits | ba | bb, flips + 1)
            descend(t + 1, bits & ~(ba | bb), flips + 1)

    for start in range(1 << n):
        descend(0, start, 0)
    return math.fsum(total)


# -- Haar statevector ------------------------------------------------------


@dataclass(frozen=True)
class OperatorBasis:
    """The q*q - 1 non-identity single-site basis operators (index 0 is I)."""

    q: int
    kind: str
    matrices: tuple[np.ndarray, ...]

    @classmethod
    def pauli(cls) -> "OperatorBasis":
        mats = (
            np.eye(2, dtype=complex),
            np.array([[0, 1], [1, 0]], dtype=complex),
            np.array([[0, -1j], [1j, 0]], dtype=complex),
            np.array([[1, 0], [0, -1]], dtype=complex),
        )
        return cls(2, "pauli", mats)

    @classmethod
    def clock_shift(cls, q: int) -> "OperatorBasis":
        shift = np.roll(np.eye(q, dtype=complex), 1, axis=0)  # <k|S1|l> = delta_{k-1,l}
        clock = np.diag(np.exp(2j * np.pi * np.arange(q) / q))
        mats = tuple(
            np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            for a in range(q)
            for b in range(q)
        )
        return cls(q, "clock_shift", mats)

    @classmethod
    def for_spec(cls, spec: HamiltonianSpec) -> "OperatorBasis":
        return cls.pauli() if spec.basis == "pauli" else cls.clock_shift(spec.q)

    @classmethod
    def default(cls, q: int) -> "OperatorBasis":
        return cls.pauli() if q == 2 else cls.clock_shift(q)

    def __getitem__(self, index: int) -> np.ndarray:
        return self.matrices[index]

    def gram(self) -> np.ndarray:
        """tr(M_i^dag M_j) for all pairs."""
        stack = np.stack(self.matrices)
        return np.einsum("iab,jab->ij", stack.conj(), stack)


def haar_unitaries(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    """``size`` Haar-random ``dim x dim`` unitaries (QR with the phase fix)."""
    z = (rng.standard_normal((size, dim, dim)) + 1j * rng.standard_normal((size, dim, dim))) / math.sqrt(2)
    qmat, rmat = np.linalg.qr(z)
    diag = np.diagonal(rmat, axis1=-2, axis2=-1)
    return qmat * (diag / np.abs(diag))[:, None, :]


def _apply_two_site(psi: np.ndarray, u: np.ndarray, a: int, b: int, q: int) -> np.ndarray:
    """psi has shape (batch, q, ..., q); u has shape (batch, q*q, q*q)."""
    moved = np.moveaxis(psi, (1 + a, 1 + b), (-2, -1))
    shape = moved.shape
    flat = moved.reshape(shape[0], -1, q * q)
    out = np.einsum("bkl,brl->brk", u, flat).reshape(shape)
    return np.moveaxis(out, (-2, -1), (1 + a, 1 + b))


def _apply_one_site(psi: np.ndarray, mat: np.ndarray, site: int) -> np.ndarray:
    """``mat`` is (q, q) shared, or (batch, q, q) per sample."""
    moved = np.moveaxis(psi, 1 + site, -1)
    if mat.ndim == 2:
        out = moved @ mat.T
    else:
        shape = moved.shape
        out = np.einsum("bkl,brl->brk", mat, moved.reshape(shape[0], -1, shape[-1])).reshape(shape)
    return np.moveaxis(out, -1, 1 + site)


def random_circuit_states(arch: Architecture, rng: np.random.Generator, size: int) -> np.ndarray:
    """V|0^n> for ``size`` independent draws of Haar entangling gates."""
    n, q = arch.n, arch.q
    psi = np.zeros((size,) + (q,) * n, dtype=complex)
    psi[(slice(None),) + (0,) * n] = 1.0
    for a, b in arch.gates:
        psi = _apply_two_site(psi, haar_unitaries(rng, size, q * q), a, b, q)
    return psi


def expectation(psi: np.ndarray, ops: dict[int, np.ndarray]) -> np.ndarray:
    """<psi|prod_s ops[s]|psi> for each batch entry."""
    phi = psi
    for site, mat in ops.items():
        phi = _apply_one_site(phi, mat, site)
    axes = tuple(range(1, psi.ndim))
    return np.sum(psi.conj() * phi, axis=axes)


def _check_dim(arch: Architecture, cap: int) -> None:
    if arch.q ** arch.n > cap:
        raise OracleCapError(f"statevector dimension q^n={arch.q ** arch.n} exceeds cap {cap}")


def _batch_size(arch: Architecture) -> int:
    return max(1, min(_rng.BLOCK_SIZE, (1 << 22) // arch.q ** arch.n))


def haar_gx(
    arch: Architecture,
    x: SupportPattern,
    basis: OperatorBasis | None = None,
    samples: int = 10_000,
    seed: int = 0,
    workers: int = 1,
    max_dim: int = MAX_STATEVECTOR_DIM,
) -> EstimateReport:
    """Average of |<0|V^dag M_x V|0>|^2 over Haar-random entangling gates."""
    check(arch)
    _check_dim(arch, max_dim)
    basis = basis or OperatorBasis.default(arch.q)
    if basis.q != arch.q:
        raise ValueError("basis and architecture disagree on q")
    x.check_bounds(arch.n, arch.q)
    if x.weight == 0:
        return EstimateReport(1.0, 0.0, samples, seed, 1.0, "haar")
    ops = {s: basis[op] for s, op in x.entries}

    def block(b: int, size: int):
        rng = _rng.block_rng(seed, _rng.STREAM_HAAR, b)
        psi = random_circuit_states(arch, rng, size)
        return _rng.block_stats(np.abs(expectation(psi, ops)) ** 2)

    acc = _rng.combine(_rng.map_blocks(block, samples, workers=workers, block_size=_batch_size(arch)))
    return EstimateReport(acc.mean, acc.std_error, samples, seed, 1.0, "haar")


def _hamiltonian_expectation(psi: np.ndarray, spec: HamiltonianSpec, basis: OperatorBasis) -> np.ndarray:
    out = np.zeros(psi.shape[0], dtype=complex)
    for pattern, coeff in spec.terms:
        out += coeff * expectation(psi, {s: basis[op] for s, op in pattern.entries})
    return out


def haar_first_moment(
    arch: Architecture,
    spec: HamiltonianSpec,
    basis: OperatorBasis | None = None,
    samples: int = 10_000,
    seed: int = 0,
    identity_shift: complex = 0.0,
    workers: int = 1,
    max_dim: int = MAX_STATEVECTOR_DIM,
) -> EstimateReport:
    """Average of <0|V^dag H V|0> over Haar entangling gates.

    ``identity_shift`` adds a multiple of the identity to H. The returned
    estimate is the real part; the mean imaginary part is reported in
    ``extra['imag_mean']``.
    """
    check(arch)
    _check_dim(arch, max_dim)
    basis = basis or OperatorBasis.for_spec(spec)

    def block(b: int, size: int):
        rng = _rng.block_rng(seed, _rng.STREAM_HAAR, b)
        psi = random_circuit_states(arch, rng, size)
        vals = _hamiltonian_expectation(psi, spec, basis) + identity_shift
        return _rng.block_stats(vals.real), _rng.block_stats(vals.imag)

    blocks = _rng.map_blocks(block, samples, workers=workers, block_size=_batch_size(arch))
    re = _rng.combine([r for r, _ in blocks])
    im = _rng.combine([i for _, i in blocks])
    return EstimateReport(
        re.mean, re.std_error, samples, seed, spec.sum_c2, "haar",
        extra={"imag_mean": im.mean, "imag_std_error": im.std_error},
    )


def _rotations(angles: np.ndarray, pauli: np.ndarray) -> np.ndarray:
    """exp(i angle P / 2) for a Pauli P, batched over angles."""
    c = np.cos(angles / 2)[:, None, None]
    s = np.sin(angles / 2)[:, None, None]
    return c * np.eye(2) + 1j * s * pauli


def hea_landscape_moments(
    arch: Architecture,
    spec: HamiltonianSpec,
    samples: int = 10_000,
    seed: int = 0,
    fd_step: float = 1e-4,
    workers: int = 1,
    max_dim: int = 1 << 12,
) -> tuple[EstimateReport, EstimateReport]:
    """Monte Carlo over (V, theta) of f^2 and of the squared gradient norm.

    Qubits only. The full ansatz is the random entangling circuit followed by
    exp(i alpha_s X/2) exp(i beta_s Z/2) on every site, so there are 2n
    parameters, each with generator norm 1/2. Gradients are central finite
    differences with step ``fd_step``.
    """
    check(arch)
    if arch.q != 2 or spec.basis != "pauli":
        raise ValueError("the Pauli-rotation ansatz is defined for qubits with a Pauli Hamiltonian")
    _check_dim(arch, max_dim)
    n = arch.n
    basis = OperatorBasis.pauli()
    xmat, zmat = basis[1], basis[3]

    def f(psi: np.ndarray, theta: np.ndarray) -> np.ndarray:
        phi = psi
        for s in range(n):
            rot = _rotations(theta[:, 2 * s], xmat) @ _rotations(theta[:, 2 * s + 1], zmat)
            phi = _apply_one_site(phi, rot, s)
        return _hamiltonian_expectation(phi, spec, basis).real

    def block(b: int, size: int):
        rng = _rng.block_rng(seed, _rng.STREAM_HEA, b)
        psi = random_circuit_states(arch, rng, size)
        theta = rng.uniform(0.0, 2 * np.pi, size=(size, 2 * n))
        f0 = f(psi, theta)
        grad_sq = np.zeros(size)
        for k in range(2 * n):
            step = np.zeros(2 * n)
            step[k] = fd_step
            diff = (f(psi, theta + step) - f(psi, theta - step)) / (2 * fd_step)
            grad_sq += diff**2
        return _rng.block_stats(f0**2), _rng.block_stats(grad_sq)

    blocks = _rng.map_blocks(block, samples, workers=workers, block_size=_batch_size(arch))
    f2 = _rng.combine([a for a, _ in blocks])
    g2 = _rng.combine([g for _, g in blocks])
    return (
        EstimateReport(f2.mean, f2.std_error, samples, seed, spec.sum_c2, "hea_f2"),
        EstimateReport(g2.mean, g2.std_error, samples, seed, spec.sum_c2, "hea_grad_sq"),
    )
