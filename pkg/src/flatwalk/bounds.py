"""Closed-form bounds on g_x and on the mean squared gradient norm.

Upper bounds larger than one carry no information (g_x is a probability);
they are capped at 1.0 and flagged as vacuous rather than silently clipped.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field


class BoundError(ValueError):
    pass


class BoundNotApplicable(BoundError):
    """The requested inequality does not cover these parameters."""


@dataclass(frozen=True)
class GradientBoundInputs:
    second_moment: float
    sum_generator_sq: float
    h_norm: float

    def __post_init__(self) -> None:
        for name in ("second_moment", "sum_generator_sq", "h_norm"):
            if getattr(self, name) < 0:
                raise BoundError(f"{name} must be nonnegative")


@dataclass
class BoundReport:
    lower: float
    upper: float
    lower_formula: str
    upper_formula: str
    vacuous_upper: bool = False
    inputs: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 <= self.lower <= self.upper:
            raise BoundError(f"inconsistent bounds [{self.lower}, {self.upper}]")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def gradient_interval(inp: GradientBoundInputs) -> BoundReport:
    """Interval [v, 4 * sum ||A_i||^2 * ||H|| * sqrt(v)] for E||grad f||^2, v = E f^2."""
    v = inp.second_moment
    upper = 4.0 * inp.sum_generator_sq * inp.h_norm * math.sqrt(v)
    return BoundReport(
        lower=v,
        upper=upper,
        lower_formula="second_moment",
        upper_formula="curvature_cauchy_schwarz",
        inputs=asdict(inp),
    )


def lower_general(q: int, n: int, abs_x: int, gates_x: int) -> float:
    if not 1 <= abs_x <= n:
        raise BoundError(f"need 1 <= |x| <= n, got |x|={abs_x}, n={n}")
    if gates_x < 0:
        raise BoundError("gates_x must be nonnegative")
    survive = (1 / (q + 1)) ** abs_x * (1 / (q * q + 1)) ** gates_x
    return max(survive, (1 / (q + 1)) ** n)


def absorption_bound(q: int, n: int) -> float:
    """Ceiling on the chance that the biased walk ends all-S: 1/(q^n + 1)."""
    if n < 1:
        raise BoundError("n must be positive")
    return 1.0 / (q**n + 1)


def upper_general_raw(q: int, n: int, abs_x: int, d: int, r: int | None) -> float:
    if r is None:
        raise BoundError("regular connectivity r is unknown; supply it explicitly")
    if r < 1 or d < 1 or abs_x < 1:
        raise BoundError(f"need r, d, |x| >= 1; got r={r}, d={d}, |x|={abs_x}")
    decay = (2 * q / (q + 1)) ** n * (2 * q / (q * q + 1)) ** (d // r) * float(q) ** (-abs_x)
    return decay + absorption_bound(q, n)


def upper_general(q: int, n: int, abs_x: int, d: int, r: int | None) -> float:
    return min(1.0, upper_general_raw(q, n, abs_x, d, r))


def lower_1d(q: int, n: int, k: int, d: int) -> float:
    """Lower bound for support inside ``k`` adjacent sites of the periodic brickwork."""
    if not 1 <= k <= n:
        raise BoundError(f"need 1 <= k <= n, got k={k}, n={n}")
    if d < 1:
        raise BoundError("d must be positive")
    survive = (1 / (q + 1)) ** k * (1 / (q * q + 1)) ** (d + 1)
    return max(survive, (1 / (q + 1)) ** n)


def lightcone_width(n: int, k: int, d: int) -> int:
    return min(n, k + 2 * d)


def upper_1d_raw(q: int, n: int, k: int, abs_x: int, d: int, n_prime: int | None = None) -> float:
    if d < 2:
        raise BoundNotApplicable("the brickwork upper bound needs d >= 2")
    if not 1 <= abs_x <= k <= n:
        raise BoundError(f"need 1 <= |x| <= k <= n, got |x|={abs_x}, k={k}, n={n}")
    npr = lightcone_width(n, k, d) if n_prime is None else n_prime
    rate = (2 * q / (q * q + 1)) ** (d - 1)
    # log space: (1 + rate)^n' overflows nothing here but n' * rate can be large
    log_tail = -abs_x * math.log(q) + math.log(rate) + math.log(npr) + npr * math.log1p(rate)
    return 1.0 / (float(q) ** npr + 1) + math.exp(min(log_tail, 700.0))


def upper_1d(q: int, n: int, k: int, abs_x: int, d: int, n_prime: int | None = None) -> float:
    return min(1.0, upper_1d_raw(q, n, k, abs_x, d, n_prime))


def general_report(q: int, n: int, abs_x: int, gates_x: int, d: int, r: int | None) -> BoundReport:
    raw = upper_general_raw(q, n, abs_x, d, r)
    return BoundReport(
        lower=lower_general(q, n, abs_x, gates_x),
        upper=min(1.0, raw),
        lower_formula="general_lower",
        upper_formula="general_upper",
        vacuous_upper=raw > 1.0,
        inputs={"q": q, "n": n, "abs_x": abs_x, "gates_x": gates_x, "d": d, "r": r},
    )


def brickwork_report(q: int, n: int, k: int, abs_x: int, d: int) -> BoundReport:
    lower = lower_1d(q, n, k, d)
    try:
        raw = upper_1d_raw(q, n, k, abs_x, d)
        formula = "brickwork_upper"
    except BoundNotApplicable:
        raw, formula = 1.0, "trivial"
    return BoundReport(
        lower=lower,
        upper=min(1.0, raw),
        lower_formula="brickwork_lower",
        upper_formula=formula,
        vacuous_upper=raw >= 1.0,
        inputs={"q": q, "n": n, "k": k, "abs_x": abs_x, "d": d},
    )
