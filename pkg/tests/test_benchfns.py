import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.benchfns import (
    WONG_MINIMIZER,
    BenchmarkProblem,
    evaluate,
    evaluate_batch,
    fidelity_gap,
    get_problem,
    problem_names,
)
from artifact.designspace import Domain
from artifact.errors import NotMultifidelity, OutOfDomain

CONFIG_NAMES = ["schwefel1d", "ackley2d", "shc2d", "hartmann3", "trid5", "levy7", "forrester",
                "currin", "park4", "wong10", "borehole8", "schwefel_mod"]


def test_registry_names():
    names = problem_names()
    for n in CONFIG_NAMES + ["schwefel1d_35", "mob_lle_1d", "mob_lle_p1", "mob_sticking"]:
        assert n in names
    with pytest.raises(KeyError):
        get_problem("nope")


def test_trivial_values():
    assert evaluate(get_problem("schwefel1d"), [0.0]) == 0.0
    assert evaluate(get_problem("shc2d"), [0.0, 0.0]) == 0.0
    assert evaluate(get_problem("ackley2d"), [0.0, 0.0]) == pytest.approx(0.0, abs=1e-14)
    # mpmath: 16 sin 8
    assert evaluate(get_problem("forrester"), [1.0]) == pytest.approx(15.829731945974108, rel=1e-14)


def test_known_optima():
    assert evaluate(get_problem("hartmann3"), [0.1146, 0.5556, 0.8525]) == pytest.approx(-3.8627, abs=5e-4)
    assert evaluate(get_problem("trid5"), [5, 8, 9, 8, 5]) == pytest.approx(-30.0, abs=1e-9)
    assert evaluate(get_problem("levy7"), [1.0] * 7) == pytest.approx(0.0, abs=1e-12)
    assert evaluate(get_problem("shc2d"), [0.0898, -0.7126]) == pytest.approx(-1.0316, abs=1e-3)
    assert evaluate(get_problem("wong10"), WONG_MINIMIZER) == pytest.approx(24.31, abs=0.02)


def test_schwefel_mod_pieces():
    p = get_problem("schwefel_mod")
    assert evaluate(p, [10.0]) == pytest.approx(10 * np.sin(10))
    assert evaluate(p, [12.0]) == pytest.approx(-12 * np.cos(12))


def test_domain_handling():
    p = get_problem("currin")
    assert np.isfinite(evaluate(p, [0.0, 0.0]))
    with pytest.raises(OutOfDomain):
        evaluate(p, [0.5, 1.1])
    assert evaluate(p, [0.3, 1.0 + 1e-12]) == evaluate(p, [0.3, 1.0])


def test_fidelity_gap_contract():
    p = get_problem("forrester")
    twin = BenchmarkProblem("twin", p.domain, p.hf, p.hf)
    assert fidelity_gap(twin) == (0.0, 0.0, 0.0)
    with pytest.raises(NotMultifidelity):
        fidelity_gap(get_problem("schwefel1d"))
    with pytest.raises(NotMultifidelity):
        evaluate_batch(get_problem("ackley2d"), [[0, 0]], "lf")


def test_currin_lf_guard():
    p = get_problem("currin")
    # at x2 <= 0.05 two of the four LF stencil points sit on the clamped x2 = 0 edge
    v = evaluate(p, [0.4, 0.03], "lf")
    assert np.isfinite(v)


@pytest.mark.parametrize("name", CONFIG_NAMES)
def test_finite_on_domain(name):
    p = get_problem(name)
    Z = np.random.default_rng(1).random((200, p.dim))
    X = p.domain.lower + Z * p.domain.width
    assert np.all(np.isfinite(evaluate_batch(p, X)))
    if p.multifidelity:
        assert np.all(np.isfinite(evaluate_batch(p, X, "lf")))


@given(st.lists(st.floats(-25, 25), min_size=5, max_size=5))
def test_trid_lower_bound(x):
    assert evaluate(get_problem("trid5"), x) >= -30.0 - 1e-9


@given(st.lists(st.floats(-2, 2), min_size=7, max_size=7))
def test_levy_nonnegative(x):
    assert evaluate(get_problem("levy7"), x) >= 0.0
