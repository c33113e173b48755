import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dwelljsr.dwell import (
    DwellSystem, DwellViolation, SignalSpec, as_fraction, build_dwell_graph, build_grid_graph,
    default_schedule, dwell_bounds, dwell_bounds_one, extract_signal, is_compatible, signal_law,
)
from dwelljsr.graph import GraphPath
from dwelljsr.linalg import expm
from dwelljsr.mixed import simulate

from conftest import dwell_two_modes

F = Fraction


def random_dwell(seed, m=2):
    rng = np.random.default_rng(seed)
    gens = tuple(rng.standard_normal((2, 2)) for _ in range(m))
    alphas = tuple(F(int(rng.integers(1, 5)), int(rng.integers(1, 5))) for _ in range(m))
    return DwellSystem(gens, alphas)


def test_as_fraction():
    assert as_fraction("2/5") == F(2, 5)
    assert as_fraction(0.1) == F(1, 10)
    assert as_fraction(3) == F(3)


def test_validation():
    with pytest.raises(ValueError):
        DwellSystem((), ())
    with pytest.raises(ValueError):
        DwellSystem((np.eye(2),), (0,))
    with pytest.raises(ValueError):
        DwellSystem((np.eye(2), np.eye(3)), (1, 1))


def test_two_mode_graph_shape(dwell_sys):
    gs = build_dwell_graph(dwell_sys, F(2, 5))
    assert gs.n == 2 and len(gs.edges) == 4
    loops = [e for e in gs.edges if e.tail == e.head]
    assert [e.label for e in loops] == ["~B1", "~B2"]
    assert all(e.alpha == 0.4 for e in loops)
    cross = {(e.tail, e.head): e for e in gs.edges if e.tail != e.head}
    assert cross[(0, 1)].label == "A2" and cross[(0, 1)].alpha == 1.0
    assert cross[(1, 0)].label == "A1" and cross[(1, 0)].alpha == 0.5
    np.testing.assert_allclose(cross[(1, 0)].A, expm(dwell_sys.generators[0], 0.5))


def test_three_mode_graph_shape():
    ds = random_dwell(0, m=3)
    gs = build_dwell_graph(ds, F(1, 3))
    assert gs.n == 3 and len(gs.edges) == 9
    assert sum(e.tail == e.head for e in gs.edges) == 3


def test_one_mode_graph():
    B = np.array([[-0.3, 1.0], [0.0, -0.5]])
    ds = DwellSystem((B,), (F(1),))
    gs = build_dwell_graph(ds, F(1, 2))
    assert gs.n == 1 and len(gs.edges) == 1
    # a single mode grows at its spectral abscissa
    for r in dwell_bounds(ds, [F(1, 2), F(1, 10)]):
        assert r.beta == pytest.approx(-0.3, abs=1e-9)
        assert r.mu == pytest.approx(-0.3, abs=1e-9)


def test_grid_graph_compatibility(dwell_sys):
    assert is_compatible(dwell_sys, 1)
    assert not is_compatible(dwell_sys, F(2, 5))
    gs = build_grid_graph(dwell_sys, 1)
    assert gs.n == 1 and len(gs.edges) == 2


def test_extract_signal_two_fifths(dwell_sys):
    tau = F(2, 5)
    gs = build_dwell_graph(dwell_sys, tau)
    # five loops at g1, then A2 (g1 -> g2), then A1 (g2 -> g1)
    spec = extract_signal([0] * 5 + [2, 3], dwell_sys, tau, gs)
    assert spec.segments == ((0, F(5, 2)), (1, F(1)))
    assert spec.cell == F(1, 2)
    assert spec.word == "1111122"
    assert spec.period == F(7, 2)


def test_extract_signal_grid(dwell_sys):
    gs = build_grid_graph(dwell_sys, 1)
    spec = extract_signal([0, 0, 0, 1], dwell_sys, 1, gs)
    assert spec.word == "1112"
    assert spec.cell == 1


def test_extract_signal_single_loop(dwell_sys):
    gs = build_dwell_graph(dwell_sys, F(2, 5))
    spec = extract_signal([1] * 4, dwell_sys, F(2, 5), gs)
    assert spec.segments == ((1, F(8, 5)),)


def test_extract_signal_rejects_short_dwell(dwell_sys):
    gs = build_grid_graph(dwell_sys, F(1, 5))
    with pytest.raises(DwellViolation):
        extract_signal([0, 1], dwell_sys, F(1, 5), gs)


@pytest.mark.parametrize("tau,beta,witness,word", [
    (F(1), 0.329239474231204, "~B1^3 ~B2", "1112"),
    (F(2, 5), 0.331088674408556, "~B1^5 A1 A2", "1111122"),
])
def test_section_example(dwell_sys, tau, beta, witness, word):
    rep = dwell_bounds_one(dwell_sys, tau)
    assert rep.status == "converged"
    assert rep.beta == pytest.approx(beta, abs=1e-9)
    assert rep.witness_label == witness
    assert rep.extra["signal"].word == word
    assert rep.beta <= rep.mu


def test_signal_simulation_within_bracket(dwell_sys):
    rep = dwell_bounds_one(dwell_sys, F(2, 5))
    spec = rep.extra["signal"]
    ms, law = signal_law(spec, dwell_sys, repeats=30)
    tr = simulate(ms, law, [1.0, 0.3], 0.5)
    assert rep.beta - 0.02 <= tr.growth_rate() <= rep.mu


def test_schedule_isolates_failures(dwell_sys):
    reps = dwell_bounds(dwell_sys, [F(1), F(-1)])
    assert reps[0].status == "converged"
    assert isinstance(reps[1], ValueError)


def test_default_schedule(dwell_sys):
    assert default_schedule(dwell_sys) == [F(1, 2), F(1, 4), F(1, 10), F(1, 20)]


@settings(max_examples=12)
@given(st.integers(0, 10**6))
def test_extracted_signals_respect_dwell(seed):
    ds = random_dwell(seed)
    tau = min(ds.dwell_times) / 2
    rep = dwell_bounds_one(ds, tau, k_max=60)
    spec = rep.extra["signal"]
    assert isinstance(spec.cell, Fraction)
    if len(spec.segments) > 1:
        for k, d in spec.segments:
            assert isinstance(d, Fraction) and d >= ds.dwell_times[k]
    assert rep.beta <= (rep.mu if rep.mu is not None else math.inf)
