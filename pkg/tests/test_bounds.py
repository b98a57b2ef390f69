import itertools

import numpy as np
import pytest

from conftest import random_architecture
from flatwalk.bounds import (
    BoundError,
    BoundNotApplicable,
    GradientBoundInputs,
    absorption_bound,
    brickwork_report,
    general_report,
    gradient_interval,
    lower_1d,
    lower_general,
    upper_1d,
    upper_1d_raw,
    upper_general,
)
from flatwalk.circuit import brickwork_1d, contiguous_block, gates_crossing, regular_connectivity
from flatwalk.oracle import propagate


class TestGradientInterval:
    def test_values(self):
        rep = gradient_interval(GradientBoundInputs(0.04, 9.0, 1.0))
        assert (rep.lower, rep.upper) == (pytest.approx(0.04), pytest.approx(7.2))

    def test_flat(self):
        rep = gradient_interval(GradientBoundInputs(0.0, 9.0, 1.0))
        assert (rep.lower, rep.upper) == (0.0, 0.0)

    def test_collapses(self):
        rep = gradient_interval(GradientBoundInputs(1.0, 0.25, 1.0))
        assert rep.lower == rep.upper == 1.0

    def test_negative_input(self):
        with pytest.raises(BoundError):
            GradientBoundInputs(-0.1, 1.0, 1.0)


class TestGeneral:
    def test_lower_small(self):
        assert lower_general(2, 2, 1, 1) == pytest.approx(1 / 9)

    def test_lower_saturated_branch(self):
        assert lower_general(2, 12, 1, 21) == pytest.approx(3.0**-12)
        assert lower_general(2, 12, 1, 21) == pytest.approx(1.882e-6, rel=1e-3)

    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_lower_isolated_site(self, q):
        assert lower_general(q, 5, 1, 0) == pytest.approx(1 / (q + 1))

    def test_upper_small(self):
        assert upper_general(2, 2, 1, 1, 1) == pytest.approx(16 / 9 * 4 / 5 / 2 + 1 / 5)
        assert upper_general(2, 2, 1, 1, 1) == pytest.approx(0.9111, abs=1e-4)

    def test_upper_deep(self):
        value = upper_general(2, 2, 1, 30, 1)
        assert value == pytest.approx(0.2 + 16 / 9 * 0.8**30 / 2)
        assert value == pytest.approx(0.2011, abs=1e-4)
        assert value >= 0.2

    def test_upper_approaches_absorption(self):
        values = [upper_general(2, 6, 2, d, 2) for d in range(2, 400, 10)]
        assert all(b <= a for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(absorption_bound(2, 6), rel=1e-9)

    def test_upper_needs_r(self):
        with pytest.raises(BoundError, match="supply"):
            upper_general(2, 4, 1, 3, None)

    def test_report_flags_vacuous(self):
        rep = general_report(2, 12, 1, 20, 20, 2)
        assert rep.vacuous_upper and rep.upper == 1.0


class TestOneD:
    def test_lower_deep(self):
        assert lower_1d(2, 12, 1, 20) == pytest.approx(3.0**-12)

    def test_lower_shallow(self):
        assert lower_1d(2, 12, 1, 1) == pytest.approx(1 / 75)

    def test_lower_full_block(self):
        q, n, d = 2, 4, 1
        expected = max((1 / 3) ** 4 * (1 / 5) ** 2, (1 / 3) ** 4)
        assert lower_1d(q, n, n, d) == expected

    def test_upper_deep(self):
        # n' = 12, rate = 0.8**19
        rate = 0.8**19
        expected = 1 / 4097 + 0.5 * rate * 12 * (1 + rate) ** 12
        assert upper_1d(2, 12, 1, 1, 20) == pytest.approx(expected)
        assert upper_1d(2, 12, 1, 1, 20) == pytest.approx(0.1029, abs=1e-4)

    def test_upper_shallow_vacuous(self):
        assert upper_1d_raw(2, 12, 1, 1, 5) > 1
        assert upper_1d(2, 12, 1, 1, 5) == 1.0
        assert brickwork_report(2, 12, 1, 1, 5).vacuous_upper

    def test_upper_limit(self):
        assert upper_1d(2, 10, 1, 1, 400) == pytest.approx(1 / (2**10 + 1), rel=1e-9)

    def test_depth_one_not_applicable(self):
        with pytest.raises(BoundNotApplicable):
            upper_1d(2, 8, 1, 1, 1)
        rep = brickwork_report(2, 8, 1, 1, 1)
        assert rep.upper == 1.0 and rep.upper_formula == "trivial"


@pytest.mark.parametrize("q,n,expected", [(2, 4, 1 / 17), (2, 1, 1 / 3), (3, 2, 1 / 10)])
def test_absorption_bound(q, n, expected):
    assert absorption_bound(q, n) == pytest.approx(expected)


def test_general_sandwich_random():
    rng = np.random.default_rng(21)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        q = int(rng.choice([2, 3]))
        arch = random_architecture(rng, n, q, int(rng.integers(-(-n // 2), 25)))
        r = regular_connectivity(arch)
        if r is None:
            continue
        dist = propagate(arch)
        for size in range(1, n + 1):
            for sup in itertools.combinations(range(n), size):
                g = dist.containment_mass(sum(1 << s for s in sup))
                gx = gates_crossing(arch, sup).gates_crossing if size < n else 0
                assert lower_general(q, n, size, gx) <= g <= upper_general(q, n, size, arch.d, r)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_brickwork_sandwich(n):
    for d in range(2, 16):
        dist = propagate(brickwork_1d(n, 2, d))
        for k in (1, 2, 3):
            block = contiguous_block(n, 1, k)
            for size in range(1, k + 1):
                for sup in itertools.combinations(block, size):
                    g = dist.containment_mass(sum(1 << s for s in sup))
                    assert lower_1d(2, n, k, d) <= g <= upper_1d(2, n, k, size, d)


def test_all_capped_outputs_in_unit_interval():
    for q in (2, 3):
        for n in (2, 6, 12):
            for d in (2, 5, 40):
                for ax in (1, 2):
                    for fn in (upper_general(q, n, ax, d, 2), upper_1d(q, n, 2, ax, d),
                               lower_general(q, n, ax, d), lower_1d(q, n, 2, d)):
                        assert 0.0 <= fn <= 1.0
