"""
Kernel profiles in the logarithmic domain.

A Mellin kernel κ on the positive half-line is stored through its log-domain
profile φ, with κ(z) = φ(log z). Sampling operators only ever need
κ(e^{-j} z^m) = φ(m·log z − j), which keeps every evaluation one-dimensional.

Kernels are addressable by string id, e.g. ``bspline:n=3``,
``fejer:beta=1,t=0`` and ``jackson:beta=1,n=3,t=0``.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, optimize
from scipy.special import comb

from .errors import InvalidParameterError, KernelInadmissibleError, NumericFailureError

logger = logging.getLogger(__name__)

Profile = Callable[[np.ndarray], np.ndarray]

ZETA_GRID_POINTS = 4097
ZETA_TOLERANCE = 1e-10
DEFAULT_MOMENT_RADIUS = 512.0
DEFAULT_MOMENT_RESOLUTION = 64
# grid maxima sit below the true sup by O(resolution^-2) relative
MOMENT_ENVELOPE_REL_TOL = 1e-4
TAIL_WINDOW = 1024.0
TAIL_RESOLUTION = 256
JACKSON_UNIT_INTERVALS = 256

CATALOG = ('bspline:n=3', 'fejer:beta=1,t=0', 'jackson:beta=1,n=3,t=0')


@dataclass(frozen=True, eq=False)
class KernelProfile:
    """Log-domain kernel φ with support/decay metadata and cached admissibility constants.

    Exactly one of `support_radius` / `decay_exponent` is set for untilted kernels.
    A nonzero `tilt` (the e^{-t·x} factor of the Fejér and Jackson families) makes φ grow
    without bound on one side; such kernels carry neither and are only usable on a
    compact sampling domain.
    """

    name: str
    profile: Profile
    support_radius: float | None = None
    decay_exponent: float | None = None
    params: Mapping[str, float] = field(default_factory=dict)
    tilt: float = 0.0
    envelope: Profile | None = None
    constants: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.support_radius is not None and self.support_radius < 0:
            raise InvalidParameterError('support_radius must be nonnegative')
        if self.decay_exponent is not None and self.decay_exponent <= 0:
            raise InvalidParameterError('decay_exponent must be positive')
        has_support = self.support_radius is not None
        has_decay = self.decay_exponent is not None
        if self.tilt == 0.0 and has_support == has_decay:
            raise InvalidParameterError(
                'exactly one of support_radius / decay_exponent must be given'
            )
        if self.tilt != 0.0 and (has_support or has_decay):
            raise InvalidParameterError('tilted kernels carry no support or decay metadata')
        object.__setattr__(self, 'params', MappingProxyType(dict(self.params)))
        object.__setattr__(self, 'constants', MappingProxyType(dict(self.constants)))

    def __call__(self, x) -> np.ndarray:
        return self.profile(np.asarray(x, dtype=float))

    @property
    def kernel_id(self) -> str:
        if not self.params:
            return self.name
        pairs = ','.join(f'{key}={_format_value(value)}' for key, value in self.params.items())
        return f'{self.name}:{pairs}'

    @property
    def is_compact(self) -> bool:
        return self.support_radius is not None

    @property
    def peak(self) -> float:
        """max |φ|; infinite for tilted kernels."""
        cached = self.constants.get('peak')
        if cached is not None:
            return cached
        return sup_moment(self, 0.0).value

    def with_constants(self, **constants: float) -> KernelProfile:
        merged = dict(self.constants)
        merged.update(constants)
        return replace(self, constants=merged)


@dataclass(frozen=True)
class MomentEstimate:
    order: float
    value: float
    truncation_radius: float
    grid_resolution: int
    diverged: bool


def _format_value(value: float) -> str:
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


# ---------------------------------------------------------------------------
# Catalog kernels
# ---------------------------------------------------------------------------


def make_bspline(n: int) -> KernelProfile:
    """Symmetric B-spline of order n on [-n/2, n/2] via the truncated-power sum."""
    if int(n) != n or n < 2:
        raise InvalidParameterError(f'B-spline order must be an integer >= 2, got {n}')
    n = int(n)
    half = n / 2.0
    scale = 1.0 / math.factorial(n - 1)
    coeffs = [(-1) ** k * int(comb(n, k, exact=True)) for k in range(n + 1)]

    def profile(x: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(x, dtype=float)
        for k, coeff in enumerate(coeffs):
            acc = acc + coeff * np.maximum(half + x - k, 0.0) ** (n - 1)
        # the sum vanishes identically outside the support; clear cancellation noise
        return np.where(np.abs(x) < half, np.maximum(scale * acc, 0.0), 0.0)

    kernel = KernelProfile(name='bspline', profile=profile, support_radius=half, params={'n': n})
    return _finalize(kernel, peak=float(kernel(0.0)))


def make_fejer(beta: float, t: float = 0.0) -> KernelProfile:
    """Mellin–Fejér profile (β/2π)·e^{-t·x}·sinc²(βx/2π)."""
    if beta < 1:
        raise InvalidParameterError(f'Fejér beta must be >= 1, got {beta}')
    beta = float(beta)
    t = float(t)
    amplitude = beta / (2.0 * math.pi)

    def profile(x: np.ndarray) -> np.ndarray:
        return amplitude * np.exp(-t * x) * np.sinc(beta * x / (2.0 * math.pi)) ** 2

    def envelope(x: np.ndarray) -> np.ndarray:
        ax = np.maximum(np.abs(x), np.finfo(float).tiny)
        return amplitude * np.minimum(1.0, (2.0 / (beta * ax)) ** 2)

    untilted = t == 0.0
    kernel = KernelProfile(
        name='fejer',
        profile=profile,
        decay_exponent=2.0 if untilted else None,
        params={'beta': beta, 't': t},
        tilt=t,
        envelope=envelope if untilted else None,
    )
    return _finalize(kernel, peak=amplitude if untilted else math.inf)


def make_jackson(beta: float, n: int, t: float = 0.0) -> KernelProfile:
    """Mellin–Jackson profile C·e^{-t·x}·sinc(x/(2βπn))^{2n}, normalized in the log domain."""
    if beta < 1:
        raise InvalidParameterError(f'Jackson beta must be >= 1, got {beta}')
    if int(n) != n or n < 1:
        raise InvalidParameterError(f'Jackson n must be an integer >= 1, got {n}')
    beta = float(beta)
    n = int(n)
    t = float(t)
    width = 2.0 * beta * math.pi * n
    norm = jackson_normalization(beta, n)
    constant = 1.0 / norm

    def profile(x: np.ndarray) -> np.ndarray:
        return constant * np.exp(-t * x) * np.sinc(x / width) ** (2 * n)

    def envelope(x: np.ndarray) -> np.ndarray:
        ax = np.maximum(np.abs(x), np.finfo(float).tiny)
        return constant * np.minimum(1.0, (2.0 * beta * n / ax) ** (2 * n))

    untilted = t == 0.0
    kernel = KernelProfile(
        name='jackson',
        profile=profile,
        decay_exponent=float(2 * n) if untilted else None,
        params={'beta': beta, 'n': n, 't': t},
        tilt=t,
        envelope=envelope if untilted else None,
        constants={'normalization': constant},
    )
    return _finalize(kernel, peak=constant if untilted else math.inf)


@lru_cache(maxsize=64)
def jackson_normalization(beta: float, n: int) -> float:
    """C_{β,n}^{-1} = ∫_ℝ sinc(x/(2βπn))^{2n} dx, by adaptive quadrature cell by cell."""
    width = 2.0 * beta * math.pi * n
    power = 2 * n

    def integrand(u: float) -> float:
        return float(np.sinc(u)) ** power

    total = 0.0
    for k in range(JACKSON_UNIT_INTERVALS):
        value, abserr = integrate.quad(integrand, k, k + 1, epsabs=1e-14, epsrel=1e-13)
        if not math.isfinite(value) or abserr > 1e-9:
            raise NumericFailureError(
                'Jackson normalization quadrature did not converge',
                detail={'beta': beta, 'n': n, 'cell': k, 'abserr': abserr},
            )
        total += value

    # beyond K the integrand averages sin^{2n} against (πu)^{-2n}
    K = float(JACKSON_UNIT_INTERVALS)
    mean_power = comb(power, n, exact=True) / 4.0**n
    total += mean_power * math.pi ** (-power) * K ** (1 - power) / (power - 1)

    norm = 2.0 * width * total
    logger.debug('jackson normalization beta=%s n=%s -> %.15g', beta, n, norm)
    return norm


def _finalize(kernel: KernelProfile, *, peak: float) -> KernelProfile:
    constants = {'peak': peak}
    try:
        constants['zeta'] = _estimate_zeta(kernel)
    except KernelInadmissibleError:
        logger.warning('kernel %s violates the positivity condition on [0, 1]', kernel.kernel_id)
    return kernel.with_constants(**constants)


# ---------------------------------------------------------------------------
# Admissibility constants
# ---------------------------------------------------------------------------


def kernel_zeta(k: KernelProfile) -> float:
    """ζ = inf over x in [0, 1] of φ(x) (z in [1, e]); must be positive."""
    cached = k.constants.get('zeta')
    if cached is not None:
        return cached
    return _estimate_zeta(k)


def _estimate_zeta(k: KernelProfile) -> float:
    xs = np.linspace(0.0, 1.0, ZETA_GRID_POINTS)
    values = k(xs)
    i = int(np.argmin(values))
    zeta = float(values[i])

    lo = float(xs[max(i - 1, 0)])
    hi = float(xs[min(i + 1, xs.size - 1)])
    result = optimize.minimize_scalar(
        lambda x: float(k(x)), bounds=(lo, hi), method='bounded', options={'xatol': 1e-12}
    )
    if result.success and math.isfinite(result.fun):
        zeta = min(zeta, float(result.fun))

    if not math.isfinite(zeta) or zeta <= ZETA_TOLERANCE:
        raise KernelInadmissibleError(
            f'kernel {k.kernel_id} has inf over [0, 1] = {zeta:.3g}; positivity condition fails',
            detail={'kernel': k.kernel_id, 'zeta': zeta},
        )
    return zeta


def sup_moment(
    k: KernelProfile,
    nu: float,
    radius: float | None = None,
    resolution: int = DEFAULT_MOMENT_RESOLUTION,
) -> MomentEstimate:
    """Discrete absolute sup-moment m_ν = sup_x |φ(x)|·|x|^ν on the grid x = i/resolution."""
    if nu < 0:
        raise InvalidParameterError(f'moment order must be nonnegative, got {nu}')
    if resolution < 64:
        raise InvalidParameterError(f'moment grid resolution must be >= 64, got {resolution}')
    if radius is None:
        radius = k.support_radius if k.is_compact else DEFAULT_MOMENT_RADIUS
    if radius <= 0:
        raise InvalidParameterError(f'moment radius must be positive, got {radius}')

    nu = float(nu)
    radius = float(radius)

    # |φ(x)||x|^ν is bounded iff ν does not exceed the decay exponent
    if k.tilt != 0.0 or (k.decay_exponent is not None and k.decay_exponent < nu):
        logger.debug('moment of order %s diverges for %s', nu, k.kernel_id)
        return MomentEstimate(nu, math.inf, radius, resolution, True)

    half = int(math.ceil(radius * resolution))
    xs = np.arange(-half, half + 1, dtype=float) / resolution
    values = np.abs(k(xs)) * np.abs(xs) ** nu
    if not np.all(np.isfinite(values)):
        raise NumericFailureError(
            'non-finite kernel values in moment grid', detail={'kernel': k.kernel_id, 'nu': nu}
        )
    value = float(values.max())

    if k.envelope is not None and k.decay_exponent is not None:
        tail = float(k.envelope(radius)) * radius**nu
        if tail > value * (1.0 + MOMENT_ENVELOPE_REL_TOL):
            logger.warning(
                'moment %s of %s: envelope beyond radius %.1f (%.3g) exceeds grid sup (%.3g)',
                nu,
                k.kernel_id,
                radius,
                tail,
                value,
            )
    return MomentEstimate(nu, value, radius, resolution, False)


def algebraic_sup_moment(
    k: KernelProfile,
    order: int,
    s: float | None = None,
    radius: float | None = None,
    *,
    log_s: float | None = None,
) -> float:
    """𝒜_order(κ, s) = max over |j − log s| ≤ radius of κ(e^{-j}s)·(j − log s)^order.

    Pass `log_s` directly when s = z^m would overflow.
    """
    if log_s is None:
        if s is None or not s > 0:
            raise InvalidParameterError(f's must be positive, got {s}')
        log_s = math.log(s)
    if radius is None:
        radius = k.support_radius if k.is_compact else DEFAULT_MOMENT_RADIUS
    js = np.arange(math.ceil(log_s - radius), math.floor(log_s + radius) + 1, dtype=float)
    if js.size == 0:
        raise InvalidParameterError(
            f'empty index window for log s={log_s}, radius={radius}',
            detail={'log_s': log_s, 'radius': radius},
        )
    offsets = js - log_s
    return float(np.max(k(-offsets) * offsets ** int(order)))


def tail_remainder(
    k: KernelProfile,
    m: float,
    rho: float,
    *,
    window: float = TAIL_WINDOW,
    resolution: int = TAIL_RESOLUTION,
) -> float:
    """sup over shifts of max |φ(j − log s)| with |j − log s| > m·ρ.

    Scans (mρ, mρ + window] on a grid of spacing 1/resolution; beyond the window the
    kernel's decreasing envelope bounds what is left.
    """
    if m <= 0 or rho <= 0:
        raise InvalidParameterError(f'm and rho must be positive, got m={m}, rho={rho}')
    cut = float(m) * float(rho)
    if k.tilt != 0.0:
        return math.inf
    if k.is_compact:
        if cut >= k.support_radius:
            return 0.0
        outer = k.support_radius
        beyond = 0.0
    else:
        outer = cut + window
        beyond = float(k.envelope(outer)) if k.envelope is not None else 0.0

    ks = np.arange(math.floor(cut * resolution), math.ceil(outer * resolution) + 1, dtype=float)
    xs = ks / resolution
    xs = xs[xs > cut]
    if xs.size == 0:
        return beyond
    values = np.maximum(np.abs(k(xs)), np.abs(k(-xs)))
    return max(float(values.max()), beyond)


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

_ID_PATTERN = re.compile(
    r'^(?P<name>[a-z]+):(?P<params>[a-z]+=[-+]?\d+(?:\.\d+)?(?:,[a-z]+=[-+]?\d+(?:\.\d+)?)*)$'
)

_KERNEL_KEYS = {
    'bspline': ({'n'}, {}),
    'fejer': ({'beta'}, {'t': 0.0}),
    'jackson': ({'beta', 'n'}, {'t': 0.0}),
}


def parse_id(text: str) -> tuple[str, dict[str, float]]:
    """Split ``name:key=value,...`` into its name and parameter dict."""
    match = _ID_PATTERN.match((text or '').strip())
    if not match:
        raise InvalidParameterError(
            f'malformed id {text!r}; expected name:key=value[,key=value...]'
        )
    params: dict[str, float] = {}
    for pair in match.group('params').split(','):
        key, raw = pair.split('=', 1)
        if key in params:
            raise InvalidParameterError(f'duplicate key {key!r} in {text!r}')
        params[key] = float(raw)
    return match.group('name'), params


def _integer_param(params: dict[str, float], key: str, kernel_id: str) -> int:
    value = params[key]
    if not float(value).is_integer():
        raise InvalidParameterError(f'{key} must be an integer in {kernel_id!r}')
    return int(value)


@lru_cache(maxsize=32)
def resolve_kernel(kernel_id: str) -> KernelProfile:
    """Build (and memoize) the kernel named by a catalog id."""
    name, params = parse_id(kernel_id)
    if name not in _KERNEL_KEYS:
        raise InvalidParameterError(
            f'unknown kernel {name!r}; known kernels: {", ".join(sorted(_KERNEL_KEYS))}'
        )
    required, optional = _KERNEL_KEYS[name]
    unknown = set(params) - required - set(optional)
    missing = required - set(params)
    if unknown or missing:
        raise InvalidParameterError(
            f'kernel {name!r} expects keys {sorted(required | set(optional))}, '
            f'got {sorted(params)}'
        )
    values = {**optional, **params}

    if name == 'bspline':
        return make_bspline(_integer_param(values, 'n', kernel_id))
    if name == 'fejer':
        return make_fejer(values['beta'], values['t'])
    return make_jackson(values['beta'], _integer_param(values, 'n', kernel_id), values['t'])
