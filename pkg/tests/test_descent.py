import numpy as np
import pytest

from softmax_spectra.descent import (
    DescentConfig, DescentTrace, choose_eta, eta_interval, lipschitz_bound,
    measured_contraction, reference_minimum, run,
)
from softmax_spectra.errors import BadSpectrum, BadTheta, Diverged, InsufficientTrace
from softmax_spectra.existence import closed_form_minimum
from softmax_spectra.hessian import build_hessian
from softmax_spectra.matcore import sym_eig
from softmax_spectra.model import Dataset, softmax
from softmax_spectra.reduction import ReducedWeights, build_kmap, reduce_weights
from worked_examples import DESK, EX2, random_dataset

ISO3 = build_kmap("isometric", 3)


def _spectrum_at(w, d, kmap):
    v = sym_eig(build_hessian(reduce_weights(w, kmap), d).dense).values
    return v[-1], v[0]


def _desk_instances():
    """Seeded closed-form instances whose Hessian at the minimum admits theta = 1/2."""
    out = []
    seed = 0
    while len(out) < 5:
        rng = np.random.default_rng(seed)
        seed += 1
        c, dim = int(rng.integers(2, 5)), int(rng.integers(1, 4))
        x = np.eye(dim) + 0.3 * rng.standard_normal((dim, dim))
        w0 = 0.5 * rng.standard_normal((c, dim))
        d = Dataset(x, softmax(w0 @ x))
        kmap = build_kmap("isometric", c)
        wmin = closed_form_minimum(d)
        lmin, lmax = _spectrum_at(wmin, d, kmap)
        if eta_interval(lmin, lmax, 0.5) is not None:
            out.append((rng, d, kmap, wmin, lmin, lmax))
    return out


# eta_interval

def test_interval_kappa_one():
    assert eta_interval(1.0, 1.0, 0.5) == pytest.approx((0.5, 1.5))


def test_interval_collapses_at_threshold():
    lo, hi = eta_interval(1.0, 3.0, 0.5)
    assert lo == pytest.approx(hi) == pytest.approx(0.5)


def test_interval_empty_beyond_threshold():
    assert eta_interval(1.0, 4.0, 0.5) is None


def test_interval_errors():
    with pytest.raises(BadTheta):
        eta_interval(1.0, 2.0, 1.0)
    with pytest.raises(BadSpectrum):
        eta_interval(0.0, 2.0, 0.5)
    with pytest.raises(BadSpectrum):
        eta_interval(3.0, 2.0, 0.5)


def test_interval_contracts_every_mode(rng):
    for _ in range(50):
        lmin = rng.uniform(0.1, 1)
        lmax = lmin * rng.uniform(1, 2.9)
        theta = 0.5
        lo, hi = eta_interval(lmin, lmax, theta)
        for eta in np.linspace(lo, hi, 5):
            assert np.all(np.abs(1 - eta * np.array([lmin, lmax])) <= theta + 1e-12)


# config

def test_config_validation():
    with pytest.raises(ValueError):
        DescentConfig(eta=0.0)
    with pytest.raises(BadTheta):
        DescentConfig(eta=1.0, theta=0.0)
    with pytest.raises(ValueError):
        DescentConfig(eta=1.0, space="bogus")


# run

def test_start_at_minimum_converges_immediately():
    wmin = closed_form_minimum(DESK)
    tr = run(reduce_weights(wmin, ISO3), DESK, DescentConfig(eta=1.0, grad_tol=1e-10), reference=wmin)
    assert tr.converged and tr.iterations == 0


def test_desk_instance_contraction():
    wmin = closed_form_minimum(DESK)
    lmin, lmax = _spectrum_at(wmin, DESK, ISO3)
    lo, hi = eta_interval(lmin, lmax, 0.5)
    rng = np.random.default_rng(0)
    s0 = reduce_weights(wmin, ISO3).S
    p = rng.standard_normal(s0.shape)
    start = ReducedWeights(s0 + 0.1 * p / np.linalg.norm(p), ISO3)
    tr = run(start, DESK, DescentConfig(eta=0.5 * (lo + hi), max_iters=200), reference=wmin)
    assert max(tr.error_ratios[-10:]) <= 0.55
    assert measured_contraction(tr) <= 0.55


def test_ill_conditioned_large_step_diverges_or_oscillates():
    x = np.array([[1.0, 0.0], [0.0, 0.05]])
    d = Dataset(x, np.array([[0.7, 0.4], [0.3, 0.6]]))
    kmap = build_kmap("isometric", 2)
    wmin = closed_form_minimum(d)
    lmin, lmax = _spectrum_at(wmin, d, kmap)
    hi = 1.5 / lmax
    start = ReducedWeights(reduce_weights(wmin, kmap).S + 0.1, kmap)
    try:
        tr = run(start, d, DescentConfig(eta=10 * hi, max_iters=200), reference=wmin)
    except Diverged as exc:
        assert exc.trace is not None
    else:
        assert max(tr.error_ratios) > 1


def test_diverged_carries_trace():
    with pytest.raises(Diverged) as info:
        run(ReducedWeights(np.zeros((2, 2)), ISO3), DESK, DescentConfig(eta=1e6))
    assert len(info.value.trace.losses) >= 1


def test_max_iters_zero():
    tr = run(ReducedWeights(np.zeros((2, 2)), ISO3), DESK, DescentConfig(eta=1.0, max_iters=0))
    assert len(tr.losses) == 1 and not tr.converged


# measured contraction

def test_contraction_constant():
    assert measured_contraction(DescentTrace(error_ratios=[0.5] * 12)) == pytest.approx(0.5)


def test_contraction_geometric_mean():
    assert measured_contraction(DescentTrace(error_ratios=[0.25, 1.0]), tail=2) == pytest.approx(0.5)


def test_contraction_needs_tail():
    with pytest.raises(InsufficientTrace):
        measured_contraction(DescentTrace(error_ratios=[0.5] * 3))


# invariants

def test_tail_ratios_near_minimum():
    for rng, d, kmap, wmin, lmin, lmax in _desk_instances():
        lo, hi = eta_interval(lmin, lmax, 0.5)
        s0 = reduce_weights(wmin, kmap).S
        for eta in (lo, 0.5 * (lo + hi), hi):
            p = rng.standard_normal(s0.shape)
            start = ReducedWeights(s0 + 0.1 * p / np.linalg.norm(p), kmap)
            tr = run(start, d, DescentConfig(eta=eta, max_iters=60, grad_tol=1e-13), reference=wmin)
            tail = tr.error_ratios[-10:]
            assert tail and max(tail) <= 0.5 + 0.05


def test_loss_monotone_with_small_step():
    for rng, d, kmap, wmin, lmin, lmax in _desk_instances():
        start = ReducedWeights(rng.standard_normal((d.C - 1, d.D)), kmap)
        eta = 1.0 / lipschitz_bound(d, kmap)
        tr = run(start, d, DescentConfig(eta=eta, max_iters=200))
        assert all(b <= a + 1e-12 for a, b in zip(tr.losses, tr.losses[1:]))


def test_reduced_and_full_z_agree(rng):
    d = random_dataset(rng, 4, 3, 5)
    kmap = build_kmap("isometric", 4)
    start = ReducedWeights(rng.standard_normal((3, 3)), kmap)
    a = run(start, d, DescentConfig(eta=0.3, max_iters=100, space="reduced"))
    b = run(start, d, DescentConfig(eta=0.3, max_iters=100, space="full_Z"))
    assert np.allclose(a.losses, b.losses, atol=1e-9)


def test_lipschitz_bound_dominates(rng):
    for _ in range(20):
        d = random_dataset(rng, 3, 2, 4)
        for kind in ("canonical", "isometric"):
            kmap = build_kmap(kind, 3)
            _, lmax = _spectrum_at(rng.standard_normal((3, 2)), d, kmap)
            assert lmax <= lipschitz_bound(d, kmap) + 1e-12


# eta choice

def test_choose_eta_desk():
    ch = choose_eta(DESK, ISO3)
    assert ch.source == "exact" and ch.reference_source == "closed_form"
    lo, hi = ch.interval
    assert ch.eta == pytest.approx(0.5 * (lo + hi))


def test_reference_minimum_long_run():
    ref, src = reference_minimum(EX2, build_kmap("isometric", 2))
    assert src == "long_run"
    ch = choose_eta(EX2, build_kmap("isometric", 2), reference=ref)
    assert ch.eta > 0
