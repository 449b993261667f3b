"""
Exponential sampling operators.

All operators act on samples indexed by j, placed at the exponential nodes e^{j/m},
and weight them with κ(e^{-j} z^m) = φ(m·log z − j):

* ``max_product``   M(h, z) = ⋁_j φ_j · avg_j(h) / ⋁_j φ_j
* ``kantorovich``   Σ_j φ_j · avg_j(h)
* ``generalized``   Σ_j φ_j · h(e^{j/m})

where avg_j(h) = m ∫_{j/m}^{(j+1)/m} h(e^v) dv. On a compact domain [a, b] the index set
is fixed by the domain; on the whole line it is the window |j − m·log z| ≤ R.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (
    DegenerateIntervalError,
    DomainError,
    InvalidParameterError,
    KernelInadmissibleError,
    NumericFailureError,
)
from .kernel_bank import KernelProfile, tail_remainder
from .settings import get_settings
from .test_functions import TestFunction

logger = logging.getLogger(__name__)

Operator = Literal['max_product', 'kantorovich', 'generalized']
OPERATORS: tuple[str, ...] = ('max_product', 'kantorovich', 'generalized')

TRUNCATION_REL_TOL = 1e-12
Z_CHUNK = 256
INDEX_BLOCK = 1 << 15


@dataclass(frozen=True)
class Compact:
    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.a < self.b) or not math.isfinite(self.b):
            raise InvalidParameterError(
                f'compact domain needs 0 < a < b, got ({self.a}, {self.b})',
                detail={'a': self.a, 'b': self.b},
            )

    def __contains__(self, z: float) -> bool:
        return self.a <= z <= self.b


@dataclass(frozen=True)
class WholeLine:
    pass


@dataclass(frozen=True)
class SamplingScheme:
    m: float
    domain: Compact | WholeLine
    truncation_radius: float | None = None
    quadrature_nodes: int = 8
    truncation_rel_tol: float = TRUNCATION_REL_TOL

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m > 0):
            raise InvalidParameterError(f'sampling rate m must be positive, got {self.m}')
        if int(self.quadrature_nodes) != self.quadrature_nodes or self.quadrature_nodes < 2:
            raise InvalidParameterError(
                f'quadrature_nodes must be an integer >= 2, got {self.quadrature_nodes}'
            )
        if not 0.0 < self.truncation_rel_tol < 1.0:
            raise InvalidParameterError(
                f'truncation_rel_tol must lie in (0, 1), got {self.truncation_rel_tol}'
            )
        if self.truncation_radius is not None and not self.truncation_radius > 0:
            raise InvalidParameterError(
                f'truncation_radius must be positive, got {self.truncation_radius}'
            )
        if isinstance(self.domain, Compact):
            index_set(self.m, self.domain.a, self.domain.b)
        elif self.truncation_radius is None:
            raise InvalidParameterError('whole-line sampling requires a truncation radius')

    @classmethod
    def compact(
        cls, m: float, a: float, b: float, *, quadrature_nodes: int | None = None
    ) -> SamplingScheme:
        nodes = quadrature_nodes or get_settings().quadrature_nodes
        return cls(m=m, domain=Compact(a, b), quadrature_nodes=nodes)

    @classmethod
    def whole_line(
        cls,
        k: KernelProfile,
        m: float,
        *,
        truncation_radius: float | None = None,
        quadrature_nodes: int | None = None,
        rel_tol: float = TRUNCATION_REL_TOL,
    ) -> SamplingScheme:
        """Whole-line scheme whose window keeps the discarded kernel mass below rel_tol·max|φ|."""
        if k.tilt != 0.0:
            raise InvalidParameterError(
                f'kernel {k.kernel_id} is unbounded on the whole line; use a compact domain'
            )
        if truncation_radius is None:
            truncation_radius = choose_truncation_radius(k, m, rel_tol=rel_tol)
        else:
            check_truncation(k, m, truncation_radius, rel_tol)
        nodes = quadrature_nodes or get_settings().quadrature_nodes
        return cls(
            m=m,
            domain=WholeLine(),
            truncation_radius=truncation_radius,
            quadrature_nodes=nodes,
            truncation_rel_tol=rel_tol,
        )


def index_set(m: float, a: float, b: float) -> range:
    """𝕀_m = {⌈m·ln a⌉, ..., ⌊m·ln b⌋ − 1}."""
    if not (0.0 < a < b):
        raise InvalidParameterError(f'index set needs 0 < a < b, got ({a}, {b})')
    first = math.ceil(m * math.log(a))
    last = math.floor(m * math.log(b)) - 1
    if last < first:
        raise DegenerateIntervalError(
            f'no sampling indices for m={m} on [{a}, {b}]', m=m, a=a, b=b
        )
    return range(first, last + 1)


def check_truncation(k: KernelProfile, m: float, radius: float, rel_tol: float) -> None:
    remainder = tail_remainder(k, m, radius / m)
    if remainder > rel_tol * k.peak:
        raise InvalidParameterError(
            f'truncation radius {radius} leaves tail {remainder:.3g} '
            f'> {rel_tol:g} of the maximum of {k.kernel_id}',
            detail={'radius': radius, 'tail': remainder},
        )


def choose_truncation_radius(
    k: KernelProfile, m: float, *, rel_tol: float = TRUNCATION_REL_TOL
) -> float:
    """Smallest window radius (up to bisection) with tail_remainder ≤ rel_tol·max|φ|."""
    if k.tilt != 0.0:
        raise InvalidParameterError(f'kernel {k.kernel_id} has no finite truncation radius')
    if k.is_compact:
        return float(k.support_radius)

    target = rel_tol * k.peak

    def too_short(radius: float) -> bool:
        return tail_remainder(k, m, radius / m) > target

    hi = 1.0
    while too_short(hi):
        hi *= 2.0
        if hi > 2.0**48:
            raise NumericFailureError(
                f'no truncation radius reaches tolerance {rel_tol:g} for {k.kernel_id}', m=m
            )
    lo = hi / 2.0
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if too_short(mid):
            lo = mid
        else:
            hi = mid
    radius = float(math.ceil(hi))
    logger.debug('truncation radius for %s at m=%s: %s', k.kernel_id, m, radius)
    return radius


# ---------------------------------------------------------------------------
# Cell averages
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _gauss_legendre(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    points, weights = leggauss(nodes)
    return points, weights


def cell_averages(h: TestFunction, js: np.ndarray, m: float, nodes: int) -> np.ndarray:
    """m·∫_{j/m}^{(j+1)/m} h(e^v) dv for every j, with `nodes` Gauss–Legendre points per cell."""
    if nodes < 2:
        raise InvalidParameterError(f'nodes must be >= 2, got {nodes}')
    points, weights = _gauss_legendre(int(nodes))
    js = np.asarray(js, dtype=float)
    v = (js[:, None] + 0.5 * (points[None, :] + 1.0)) / m
    with np.errstate(all='ignore'):
        values = np.asarray(h(np.exp(v)), dtype=float)
    finite = np.isfinite(values)
    if not finite.all():
        bad = int(js[np.argmin(finite.all(axis=1))])
        raise NumericFailureError(f'{h.name} is not finite on cell j={bad} (m={m})', j=bad, m=m)
    # normalizing by the weight sum keeps constants exact
    return (values * weights).sum(axis=1) / weights.sum()


def cell_average(h: TestFunction, j: int, m: float, nodes: int) -> float:
    return float(cell_averages(h, np.array([j]), m, nodes)[0])


def node_samples(h: TestFunction, js: np.ndarray, m: float) -> np.ndarray:
    js = np.asarray(js, dtype=float)
    with np.errstate(all='ignore'):
        values = np.asarray(h(np.exp(js / m)), dtype=float)
    if not np.isfinite(values).all():
        bad = int(js[np.argmin(np.isfinite(values))])
        raise NumericFailureError(f'{h.name} is not finite at node j={bad} (m={m})', j=bad, m=m)
    return values


def _coefficients(operator: str, h: TestFunction, js: np.ndarray, s: SamplingScheme) -> np.ndarray:
    if operator == 'generalized':
        return node_samples(h, js, s.m)
    return cell_averages(h, js, s.m, s.quadrature_nodes)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def _kernel_matrix(k: KernelProfile, x: np.ndarray, js: np.ndarray) -> np.ndarray:
    with np.errstate(over='ignore', invalid='ignore'):
        weights = k(x[:, None] - js[None, :])
    if not np.isfinite(weights).all():
        raise NumericFailureError(f'kernel {k.kernel_id} overflowed on the sampling window')
    return weights


def _reduce(
    operator: str, weights: np.ndarray, coeffs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(numerator, denominator) per row; the denominator is only meaningful for max_product."""
    terms = weights * coeffs[None, :]
    if operator == 'max_product':
        return terms.max(axis=1), weights.max(axis=1)
    return terms.sum(axis=1), np.ones(weights.shape[0])


def _finish(operator: str, k: KernelProfile, num: np.ndarray, den: np.ndarray, zs: np.ndarray):
    if operator != 'max_product':
        return num
    bad = ~(den > 0.0)
    if bad.any():
        z = float(zs[np.argmax(bad)])
        raise KernelInadmissibleError(
            f'kernel {k.kernel_id} vanishes on every sampling index at z={z:g}',
            detail={'kernel': k.kernel_id, 'z': z},
        )
    return num / den


def _check_points(s: SamplingScheme, zs: np.ndarray) -> None:
    if zs.size and not np.all(zs > 0):
        raise DomainError('evaluation points must be positive')
    if isinstance(s.domain, Compact):
        a, b = s.domain.a, s.domain.b
        outside = (zs < a) | (zs > b)
        if outside.any():
            z = float(zs[np.argmax(outside)])
            raise DomainError(
                f'z={z:g} lies outside the sampling domain [{a:g}, {b:g}]',
                detail={'z': z, 'a': a, 'b': b},
            )


def _compact_chunk(operator, k, js, coeffs, s, zs):
    x = s.m * np.log(zs)
    num, den = _reduce(operator, _kernel_matrix(k, x, js), coeffs)
    return _finish(operator, k, num, den, zs)


def _whole_line_point(operator, k, h, s, z):
    x = s.m * math.log(z)
    first = math.ceil(x - s.truncation_radius)
    last = math.floor(x + s.truncation_radius)
    xs = np.array([x])
    num = -math.inf if operator == 'max_product' else 0.0
    den = -math.inf if operator == 'max_product' else 1.0
    for start in range(first, last + 1, INDEX_BLOCK):
        js = np.arange(start, min(start + INDEX_BLOCK, last + 1), dtype=float)
        block_num, block_den = _reduce(
            operator, _kernel_matrix(k, xs, js), _coefficients(operator, h, js, s)
        )
        if operator == 'max_product':
            num = max(num, float(block_num[0]))
            den = max(den, float(block_den[0]))
        else:
            num += float(block_num[0])
    return float(_finish(operator, k, np.array([num]), np.array([den]), np.array([z]))[0])


def apply_operator(
    operator: Operator,
    k: KernelProfile,
    h: TestFunction,
    s: SamplingScheme,
    zs,
    *,
    max_workers: int | None = None,
) -> np.ndarray:
    """Evaluate one operator at many points.

    Points are split into fixed-size chunks so the per-point arithmetic is the same
    whether chunks run sequentially or on a thread pool.
    """
    if operator not in OPERATORS:
        raise InvalidParameterError(f'unknown operator {operator!r}; expected one of {OPERATORS}')
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    _check_points(s, zs)
    workers = max_workers if max_workers is not None else get_settings().max_workers

    if isinstance(s.domain, WholeLine):
        if k.tilt != 0.0:
            raise InvalidParameterError(
                f'kernel {k.kernel_id} is unbounded on the whole line; use a compact domain'
            )
        check_truncation(k, s.m, s.truncation_radius, s.truncation_rel_tol)

        def run(z: float) -> float:
            return _whole_line_point(operator, k, h, s, float(z))

        items = list(zs)
        collect = np.array
    else:
        indices = index_set(s.m, s.domain.a, s.domain.b)
        js = np.arange(indices.start, indices.stop, dtype=float)
        coeffs = _coefficients(operator, h, js, s)

        def run(chunk: np.ndarray) -> np.ndarray:
            return _compact_chunk(operator, k, js, coeffs, s, chunk)

        items = [zs[i : i + Z_CHUNK] for i in range(0, zs.size, Z_CHUNK)]

        def collect(parts):
            return np.concatenate(parts) if parts else np.empty(0)

    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]
    return collect(results)


def max_product_apply(k: KernelProfile, h: TestFunction, s: SamplingScheme, z: float) -> float:
    return float(apply_operator('max_product', k, h, s, z)[0])


def linear_kantorovich_apply(
    k: KernelProfile, h: TestFunction, s: SamplingScheme, z: float
) -> float:
    return float(apply_operator('kantorovich', k, h, s, z)[0])


def generalized_apply(k: KernelProfile, h: TestFunction, s: SamplingScheme, z: float) -> float:
    return float(apply_operator('generalized', k, h, s, z)[0])


# ---------------------------------------------------------------------------
# Classical exponential sampling
# ---------------------------------------------------------------------------


def lin_kernel(l: float, z) -> np.ndarray | float:
    """lin_l(z) = z^{-l}·sinc(ln z), equal to 1 at z = 1."""
    arr = np.asarray(z, dtype=float)
    if np.any(arr <= 0):
        raise DomainError('lin kernel is defined for z > 0 only')
    log_z = np.log(arr)
    value = np.exp(-l * log_z) * np.sinc(log_z)
    return float(value) if value.ndim == 0 else value


def classical_exp_sampling(
    l: float,
    P: float,
    samples: Callable[[np.ndarray], np.ndarray],
    z: float,
    window: int | None = None,
) -> float:
    """Σ_j lin_{l/P}(e^{-j} z^P)·h(e^{j/P}) over |j − P·ln z| ≤ window.

    `samples` maps an integer array of indices j to the values h(e^{j/P}).
    """
    if P <= 0:
        raise InvalidParameterError(f'P must be positive, got {P}')
    if z <= 0:
        raise DomainError(f'z must be positive, got {z}')
    window = window if window is not None else get_settings().classical_window
    if window < 1:
        raise InvalidParameterError(f'window must be >= 1, got {window}')
    center = P * math.log(z)
    js = np.arange(math.ceil(center - window), math.floor(center + window) + 1)
    shifts = center - js
    # lin_{l/P}(e^{-j} z^P) with log argument P·ln z − j
    weights = np.exp(-(l / P) * shifts) * np.sinc(shifts)
    values = np.asarray(samples(js), dtype=float)
    return float(np.dot(weights, values))
