import numpy as np
import pytest

from conftest import grid_min_1d
from sqopt.functions import (
    CATALOG_NAMES,
    Objective,
    bifunction_catalog,
    bregman_catalog,
    catalog,
    combine_linear,
    combine_max,
    combine_scale,
    glt_example,
    value_gap,
)
from sqopt.geometry import Box, box1d
from sqopt import verify

QUAD_FRACTIONAL_KW = dict(
    A=np.eye(2), a=np.zeros(2), alpha=0.0,
    B=np.zeros((2, 2)), b=np.zeros(2), beta=1.0,
    K=Box(-np.ones(2), np.ones(2)), m=0.5, M=1.5,
)


def all_catalog_entries():
    return [
        catalog("abs_shift", a=-0.3, gamma=2.0),
        catalog("euclid_norm", n=2, gamma=1.0),
        catalog("neg_quad"),
        catalog("gauss_well", c=1.0, d=1.0, delta=1.0),
        catalog("sin_quad"),
        catalog("inv_gap"),
        catalog("root_quartic", k=1.0, c=2.0),
        catalog("power_norm", n=2, halfwidth=1.0),
        catalog("quad_fractional", **QUAD_FRACTIONAL_KW),
    ]


def test_catalog_names_complete():
    assert len(CATALOG_NAMES) == 9
    with pytest.raises(ValueError, match="unknown catalog"):
        catalog("nope")


def test_gauss_well_declared_modulus():
    h = catalog("gauss_well", c=1.0, d=1.0, delta=1.0)
    assert h.modulus == pytest.approx(np.exp(-1.0))
    assert h.domain.lo[0] == -1.0 and h.domain.hi[0] == 1.0
    assert h.value([0.0]) == pytest.approx(0.0)
    h2 = catalog("gauss_well", c=0.0, d=2.0, delta=0.5)
    assert h2.modulus == pytest.approx(2.0 * np.exp(-0.25))


def test_euclid_norm_domain_inside_ball():
    h = catalog("euclid_norm", n=2, gamma=1.0)
    corner = np.array([h.domain.hi[0], h.domain.hi[1]])
    assert np.linalg.norm(corner) <= 1.0 + 1e-12
    assert h.known_min[1] == 0.0
    with pytest.raises(ValueError, match="inside the ball"):
        catalog("euclid_norm", n=2, gamma=1.0, halfwidth=0.9)


def test_sin_quad_entry():
    h = catalog("sin_quad")
    assert h.value([0.0]) == 0.0
    assert h.lip_grad == 8.0
    # certified frozen bound sits below the analytic infimum 2 + 6 min(sin u / u)
    assert h.modulus == pytest.approx(0.6965)
    assert h.modulus < 2.0 - 6.0 * 0.21723362821122166


def test_root_quartic_modulus_formula():
    h = catalog("root_quartic", k=1.0, c=2.0)
    assert h.modulus == pytest.approx(1.0 / (2.0 * 5.0**0.75))
    assert h.known_min[1] == pytest.approx(1.0)
    nod = catalog("root_quartic", k=0.0, c=1.0)
    assert nod.grad is None and nod.modulus == pytest.approx(0.5)


def test_power_norm_modulus_scales_with_radius():
    h1 = catalog("power_norm", n=2, halfwidth=1.0)
    h10 = catalog("power_norm", n=2, halfwidth=10.0)
    assert h1.modulus == pytest.approx(80.0**-0.25 * 2.0**-0.75)
    assert h10.modulus == pytest.approx(h1.modulus / 10.0**1.5)
    assert catalog("power_norm", n=2, halfwidth=1.0, alpha=0.3).modulus == 0.0


def test_inv_gap_shape():
    h = catalog("inv_gap")
    assert h.value([0.0]) == 0.0
    assert h.value([0.5]) == -2.0
    assert not h.lower_semicontinuous
    assert h.known_min is None


def test_quad_fractional_constructor_checks():
    h = catalog("quad_fractional", **QUAD_FRACTIONAL_KW)
    assert h.modulus == pytest.approx(1.0 / 1.5)
    assert h.value([1.0, 1.0]) == pytest.approx(1.0)
    bad = dict(QUAD_FRACTIONAL_KW, A=-np.eye(2))
    with pytest.raises(ValueError, match="positive definite"):
        catalog("quad_fractional", **bad)
    bad = dict(QUAD_FRACTIONAL_KW, m=2.0, M=3.0)
    with pytest.raises(ValueError):
        catalog("quad_fractional", **bad)


@pytest.mark.parametrize("h", all_catalog_entries(), ids=lambda h: h.name.split("(")[0])
def test_gradients_match_finite_differences(h):
    if h.grad is None:
        pytest.skip("no analytic gradient")
    lo, hi = h.domain.bounding_box(radius=3.0)
    pts = lo + 0.1 * (hi - lo) + np.random.Generator(np.random.Philox(key=3)).random((100, h.dim)) * 0.8 * (hi - lo)
    rep = verify.grad_check(h, pts)
    assert rep.passed, rep.witnesses[:1]


@pytest.mark.parametrize("h", all_catalog_entries(), ids=lambda h: h.name.split("(")[0])
def test_known_min_is_sampled_minimum(h):
    if h.known_min is None:
        pytest.skip("no known minimizer")
    xbar, vbar = h.known_min
    S = h.domain.sample(seed=21, m=1000, radius=5.0 if not h.domain.is_bounded else None)
    assert h.value(xbar) == pytest.approx(vbar, abs=1e-12)
    assert np.all(h.value_many(S) >= vbar - 1e-10)


def test_combine_scale():
    h = catalog("gauss_well", c=1.0, d=1.0, delta=1.0)
    same = combine_scale(h, 1.0)
    assert same.modulus == h.modulus
    two = combine_scale(h, 2.0)
    assert two.modulus == pytest.approx(2.0 * np.exp(-1.0))
    assert two.value([0.3]) == pytest.approx(2.0 * h.value([0.3]))
    rep = verify.check_sqc_sampled(two, n_triples=4000, seed=5)
    assert rep.passed
    est = verify.estimate_modulus(two, n_triples=4000, seed=6)
    assert est.estimate >= two.modulus - 1e-8
    with pytest.raises(ValueError):
        combine_scale(h, 0.0)


def test_combine_linear_identity_and_scaling():
    h = catalog("euclid_norm", n=2, gamma=1.0)
    ident = combine_linear(h, np.eye(2), h.domain)
    assert ident.modulus == pytest.approx(h.modulus)
    # A = 2 I on a domain shrunk so the range stays feasible: modulus 4 gamma,
    # matching the quadratic-form expansion <A^T A d, d> = 4 ||d||^2
    w = h.domain.hi[0] / 2.0
    small = Box(-w * np.ones(2), w * np.ones(2))
    scaled = combine_linear(h, 2.0 * np.eye(2), small)
    assert scaled.modulus == pytest.approx(4.0 * h.modulus)
    assert scaled.value([0.1, 0.2]) == pytest.approx(h.value([0.2, 0.4]))
    rep = verify.check_sqc_sampled(scaled, n_triples=4000, seed=7)
    assert rep.passed
    est = verify.estimate_modulus(scaled, n_triples=4000, seed=8)
    assert est.estimate >= scaled.modulus - 1e-8
    with pytest.raises(ValueError, match="sigma_min"):
        combine_linear(h, np.array([[1.0, 0.0], [1.0, 0.0]]), small)
    with pytest.raises(ValueError, match="does not map"):
        combine_linear(h, 10.0 * np.eye(2), h.domain)


def test_combine_max():
    g = catalog("gauss_well", c=1.0, d=1.0, delta=1.0)
    s = Objective(name="sq", dim=1, domain=g.domain, modulus=2.0,
                  fn=lambda X: X[..., 0] ** 2)
    assert combine_max([g]) is g
    m = combine_max([g, s])
    assert m.modulus == pytest.approx(min(g.modulus, 2.0))
    assert m.value([0.9]) == pytest.approx(max(g.value([0.9]), 0.81))
    rep = verify.check_sqc_sampled(m, n_triples=4000, seed=9)
    assert rep.passed
    with pytest.raises(ValueError):
        combine_max([])
    with pytest.raises(ValueError, match="share"):
        combine_max([g, catalog("euclid_norm", n=2, gamma=1.0)])


def test_value_gap_bifunction():
    h = catalog("gauss_well", c=1.0, d=1.0, delta=1.0)
    f = value_gap(h)
    assert f.gamma == h.modulus and f.eta == 0.0
    xs = h.domain.sample(seed=13, m=200)
    assert np.max(np.abs(f.fn(xs, xs))) == 0.0  # identical terms cancel exactly
    # telescoping: estimated eta is exactly zero
    rep = verify.estimate_eta(f, n_triples=3000, seed=14)
    assert rep.estimate == 0.0
    fy, gy = f.y_objective(xs[0])
    assert fy is h.fn and gy is h.grad  # shared callables keep prox steps identical


def test_glt_example_basics():
    f = glt_example(2, 2)
    assert f.value([1.0], [1.0]) == 0.0
    assert f.gamma > 0.1 and 0.45 <= f.eta <= 0.6
    with pytest.raises(ValueError):
        glt_example(1, 2)
    rep = verify.check_a0(f, n_samples=300, seed=1)
    assert rep.passed
    a4 = verify.check_a4_sampled(f, n_triples=1500, seed=2)
    assert a4.passed
    mono = verify.check_pseudomonotone(f, n_pairs=1500, seed=3)
    assert mono.passed


def test_bifunction_catalog_dispatch():
    h = catalog("sin_quad")
    f = bifunction_catalog("value_gap", h=h)
    assert f.gamma == h.modulus
    g = bifunction_catalog("glt_example", p=2, q=2)
    assert g.dim == 1
    with pytest.raises(ValueError, match="unknown bifunction"):
        bifunction_catalog("mystery")


def test_bregman_half_sq_norm():
    phi = bregman_catalog("half_sq_norm", dim=2)
    x = np.array([0.3, -0.5])
    y = np.array([1.0, 0.25])
    assert phi.divergence(x, y) == pytest.approx(0.5 * np.sum((x - y) ** 2))
    assert phi.divergence(x, x) == 0.0


def test_bregman_neg_entropy():
    phi = bregman_catalog("neg_entropy", dim=1)
    # frozen from the formula: D(1, e) = 1 ln(1/e) - 1 + e = e - 2
    assert phi.divergence(np.array([1.0]), np.array([np.e])) == pytest.approx(np.e - 2.0)
    assert phi.divergence(np.array([0.7]), np.array([0.7])) == pytest.approx(0.0, abs=1e-15)
    assert not phi.zone_contains(np.array([-0.1]))
    shifted = bregman_catalog("neg_entropy", dim=1, shift=1.5)
    assert shifted.zone_contains(np.array([-1.0]))


def test_bregman_divergence_nonneg_zero_iff_equal():
    for name, shift in (("half_sq_norm", 0.0), ("neg_entropy", 0.0)):
        phi = bregman_catalog(name, dim=1, shift=shift)
        rng = np.random.Generator(np.random.Philox(key=17))
        X = 0.05 + rng.random((200, 1)) * 3.0
        y = np.array([1.3])
        D = phi.divergence_many(X, y)
        assert np.all(D >= -1e-12)
        far = np.linalg.norm(X - y, axis=-1) > 1e-6
        assert np.all(D[far] > 0.0)
