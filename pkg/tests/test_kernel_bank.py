import math

import numpy as np
import pytest

from src.errors import InvalidParameterError, KernelInadmissibleError
from src.kernel_bank import (
    CATALOG,
    KernelProfile,
    algebraic_sup_moment,
    jackson_normalization,
    kernel_zeta,
    make_bspline,
    make_fejer,
    make_jackson,
    parse_id,
    resolve_kernel,
    sup_moment,
    tail_remainder,
)

B3 = make_bspline(3)


def _box(level: float) -> KernelProfile:
    return KernelProfile(
        name='box',
        profile=lambda x: np.where(np.abs(x) <= 2.0, level, 0.0),
        support_radius=2.0,
    )


@pytest.mark.parametrize(
    'x,expected',
    [(0.0, 0.75), (0.5, 0.5), (-0.5, 0.5), (1.0, 0.125), (1.5, 0.0), (-2.0, 0.0), (7.0, 0.0)],
)
def test_bspline3_values(x, expected):
    assert float(B3(x)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize('n', [2, 3, 4, 5])
def test_bspline_partition_of_unity(n):
    k = make_bspline(n)
    xs = np.linspace(-3.0, 3.0, 241)
    total = sum(k(xs - j) for j in range(-10, 11))
    assert np.allclose(total, 1.0, atol=1e-11)
    assert np.all(k(xs) >= 0.0)


@pytest.mark.parametrize('factory', [lambda: make_bspline(1), lambda: make_bspline(2.5)])
def test_bspline_rejects_bad_order(factory):
    with pytest.raises(InvalidParameterError):
        factory()


def test_fejer_and_jackson_parameter_checks():
    with pytest.raises(InvalidParameterError):
        make_fejer(0.5)
    with pytest.raises(InvalidParameterError):
        make_jackson(0.9, 3)
    with pytest.raises(InvalidParameterError):
        make_jackson(1.0, 0)


def test_fejer_profile_peak_and_zeros():
    k = make_fejer(1.0)
    assert float(k(0.0)) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-15)
    # sinc²(x/2π) vanishes at x = 2π·(nonzero integer)
    assert float(k(2.0 * math.pi)) == pytest.approx(0.0, abs=1e-30)
    assert k.decay_exponent == 2.0
    assert k.support_radius is None


def test_jackson_normalization_closed_form():
    # ∫ sinc⁶ = 11/20 and ∫ sinc² = 1
    assert jackson_normalization(1.0, 3) == pytest.approx(6.0 * math.pi * 11.0 / 20.0, rel=1e-9)
    assert jackson_normalization(1.0, 1) == pytest.approx(2.0 * math.pi, rel=1e-6)


def test_jackson_normalization_matches_band_limited_trapezoid():
    beta, n = 1.0, 3
    width = 2.0 * beta * math.pi * n
    step = width / 4.0
    # the integrand is band-limited, so the trapezoid sum is exact once steps are fine enough
    xs = step * np.arange(-int(1e4 / step), int(1e4 / step) + 1)
    oracle = step * float(np.sum(np.sinc(xs / width) ** (2 * n)))
    assert jackson_normalization(beta, n) == pytest.approx(oracle, rel=1e-8)


def test_jackson_profile_integrates_to_one():
    k = make_jackson(1.0, 3)
    xs = np.linspace(-2000.0, 2000.0, 400_001)
    integral = float(np.sum(k(xs))) * (xs[1] - xs[0])
    assert integral == pytest.approx(1.0, rel=1e-6)
    assert k.decay_exponent == 6.0
    assert k.constants['normalization'] == pytest.approx(1.0 / jackson_normalization(1.0, 3))


def test_zeta_of_bspline3():
    assert kernel_zeta(B3) == pytest.approx(0.125, abs=1e-10)


@pytest.mark.parametrize('level', [0.3, 1.0, 2.5])
def test_zeta_of_constant_profile(level):
    assert kernel_zeta(_box(level)) == pytest.approx(level, rel=1e-12)


def test_zeta_inadmissible_kernel():
    # the hat function vanishes at x = 1
    hat = make_bspline(2)
    assert 'zeta' not in hat.constants
    with pytest.raises(KernelInadmissibleError):
        kernel_zeta(hat)


@pytest.mark.parametrize('kernel_id', CATALOG)
def test_catalog_kernels_are_admissible(kernel_id):
    k = resolve_kernel(kernel_id)
    assert kernel_zeta(k) > 0.0
    assert k.kernel_id == kernel_id


@pytest.mark.parametrize('nu,expected', [(0, 0.75), (1, 0.25), (2, 0.158203125)])
def test_bspline3_moments(nu, expected):
    estimate = sup_moment(B3, nu)
    assert not estimate.diverged
    assert estimate.value == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize('nu', [0, 1, 2])
def test_bspline3_moments_match_dense_oracle(nu):
    xs = np.linspace(-1.5, 1.5, 1_000_001)
    oracle = float(np.max(np.abs(B3(xs)) * np.abs(xs) ** nu))
    assert sup_moment(B3, nu).value == pytest.approx(oracle, abs=1e-6)


def test_moment_nondecreasing_in_radius():
    k = make_jackson(1.0, 3)
    values = [sup_moment(k, 3, radius=r).value for r in (4.0, 16.0, 64.0, 256.0)]
    assert values == sorted(values)


def test_moment_divergence_flags():
    fejer = make_fejer(1.0)
    assert not sup_moment(fejer, 2).diverged
    assert sup_moment(fejer, 2).value == pytest.approx(2.0 / math.pi, rel=1e-3)
    assert sup_moment(fejer, 3).diverged
    assert math.isinf(sup_moment(fejer, 5).value)
    assert sup_moment(make_fejer(1.0, t=0.5), 0).diverged


def test_moment_argument_checks():
    with pytest.raises(InvalidParameterError):
        sup_moment(B3, -1)
    with pytest.raises(InvalidParameterError):
        sup_moment(B3, 1, resolution=16)


def test_tilted_kernels_carry_no_decay_metadata():
    k = make_jackson(1.0, 2, t=0.3)
    assert k.support_radius is None and k.decay_exponent is None
    assert k.tilt == 0.3
    assert math.isinf(tail_remainder(k, 10, 1.0))
    with pytest.raises(InvalidParameterError):
        KernelProfile(name='bad', profile=np.abs)


def test_algebraic_moments_at_half_shift():
    s = math.exp(0.5)
    assert algebraic_sup_moment(B3, 0, s) == pytest.approx(0.5, abs=1e-12)
    assert algebraic_sup_moment(B3, 1, s) == pytest.approx(0.25, abs=1e-12)
    assert algebraic_sup_moment(B3, 2, s) == pytest.approx(0.125, abs=1e-12)
    assert algebraic_sup_moment(B3, 1, log_s=0.5) == pytest.approx(0.25, abs=1e-12)


def test_algebraic_moment_empty_window():
    with pytest.raises(InvalidParameterError):
        algebraic_sup_moment(B3, 0, math.exp(0.5), radius=0.25)


@pytest.mark.parametrize('m,rho', [(1.0, 1.5), (2.0, 1.0), (10.0, 0.5)])
def test_compact_tail_vanishes_beyond_support(m, rho):
    assert tail_remainder(B3, m, rho) == 0.0


@pytest.mark.parametrize('nu', [0, 1, 2])
@pytest.mark.parametrize('cut', [0.2, 0.7, 1.1])
def test_tail_times_cut_bounded_by_moment(nu, cut):
    for k in (B3, make_jackson(1.0, 3)):
        tail = tail_remainder(k, 1.0, cut)
        assert tail * cut**nu <= sup_moment(k, nu).value * (1.0 + 1e-6)


@pytest.mark.parametrize('m', [5.0, 10.0, 20.0, 40.0])
def test_fejer_tail_decays_like_m_squared(m):
    k = make_fejer(1.0)
    assert tail_remainder(k, m, 1.0) * m**2 <= sup_moment(k, 2).value + 1e-12


def test_jackson_tail_decay_rate():
    k = make_jackson(1.0, 3)
    ms = np.array([4.0, 8.0, 16.0, 32.0, 64.0])
    tails = np.array([tail_remainder(k, m, 1.0) for m in ms])
    slope, _ = np.polyfit(np.log(ms), np.log(tails), 1)
    assert slope <= -5.0


@pytest.mark.parametrize(
    'text,name,params',
    [
        ('bspline:n=3', 'bspline', {'n': 3.0}),
        ('fejer:beta=1,t=0', 'fejer', {'beta': 1.0, 't': 0.0}),
        ('jackson:beta=1.5,n=2,t=-0.25', 'jackson', {'beta': 1.5, 'n': 2.0, 't': -0.25}),
    ],
)
def test_parse_id(text, name, params):
    assert parse_id(text) == (name, params)


@pytest.mark.parametrize(
    'text',
    [
        'bspline',
        'bspline:n=1',
        'bspline:n=2.5',
        'bspline:n=3,beta=1',
        'gauss:sigma=1',
        'fejer:t=0',
        'fejer:beta=1,beta=2',
        'jackson:beta=1;n=3',
        '',
    ],
)
def test_resolve_kernel_rejects(text):
    with pytest.raises(InvalidParameterError):
        resolve_kernel(text)


def test_resolve_kernel_defaults_and_cache():
    assert resolve_kernel('fejer:beta=1').kernel_id == 'fejer:beta=1,t=0'
    assert resolve_kernel('bspline:n=3') is resolve_kernel('bspline:n=3')


def test_fejer_is_even_and_zeta_at_endpoint():
    k = make_fejer(1.0)
    xs = np.linspace(0.0, 40.0, 401)
    assert np.array_equal(k(xs), k(-xs))
    assert kernel_zeta(k) == pytest.approx(float(k(1.0)), rel=1e-10)


@pytest.mark.parametrize('kernel_id', CATALOG)
def test_algebraic_zero_moment_dominates_zeta(kernel_id):
    k = resolve_kernel(kernel_id)
    zeta = kernel_zeta(k)
    for s in np.exp(np.linspace(-3.0, 3.0, 25)):
        assert algebraic_sup_moment(k, 0, s) >= zeta - 1e-12


@pytest.mark.parametrize('nu', [0, 1, 2, 2.5, 6, 7])
@pytest.mark.parametrize(
    'build', [lambda: make_bspline(3), lambda: make_fejer(1.0), lambda: make_jackson(1.0, 3)]
)
def test_moment_estimate_is_reproducible(build, nu):
    assert sup_moment(build(), nu) == sup_moment(build(), nu)


@pytest.mark.parametrize(
    'k',
    [make_fejer(1.0), make_fejer(2.5, t=0.3), make_jackson(1.0, 3), make_jackson(2.0, 2, t=-0.2)],
    ids=['fejer', 'fejer-tilted', 'jackson', 'jackson-tilted'],
)
def test_fejer_and_jackson_are_nonnegative(k):
    xs = np.linspace(-60.0, 60.0, 4801)
    assert np.all(k(xs) >= 0.0)


@pytest.mark.parametrize(
    'k', [B3, make_fejer(1.0), make_jackson(1.0, 2), make_jackson(1.0, 3), make_fejer(1.0, t=0.5)]
)
def test_finite_moment_implies_finite_lower_moments(k):
    orders = [0, 0.5, 1, 1.5, 2, 3, 4, 5, 6, 7]
    finite = [not sup_moment(k, nu).diverged for nu in orders]
    for i, ok in enumerate(finite):
        if ok:
            assert all(finite[: i + 1])
            assert all(math.isfinite(sup_moment(k, mu).value) for mu in orders[: i + 1])


@pytest.mark.parametrize('k', [B3, make_fejer(1.0), make_jackson(1.0, 3)])
@pytest.mark.parametrize('rho', [0.05, 0.3, 1.0])
def test_tail_remainder_never_grows_with_m(k, rho):
    tails = [tail_remainder(k, m, rho) for m in (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)]
    assert all(later <= earlier for earlier, later in zip(tails, tails[1:]))


def test_fejer_second_moment_is_quiet(caplog):
    with caplog.at_level('WARNING', logger='src.kernel_bank'):
        estimate = sup_moment(make_fejer(1.0), 2)
    assert estimate.value == pytest.approx(2.0 / math.pi, rel=1e-3)
    assert not [r for r in caplog.records if r.levelname == 'WARNING']
