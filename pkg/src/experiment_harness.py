"""
Numerical experiments: weighted error tables, convergence sweeps and operator
comparisons, plus their CSV / JSON emission.

Tables are reported on the weighted scale: the exact column is w(z)·h(z), the
approximation column is w(z)·M(h, z), and the error is their absolute difference.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from datetime import datetime, timezone
from decimal import ROUND_HALF_EVEN, Decimal
from typing import IO, Iterable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigurationError, InvalidParameterError
from .kernel_bank import KernelProfile, resolve_kernel
from .models import (
    ErrorCell,
    ErrorRow,
    ErrorTable,
    OperatorName,
    PrecisionMode,
    RunManifest,
    TableMetadata,
    ZGrid,
)
from .sampling_ops import OPERATORS, SamplingScheme, apply_operator
from .settings import get_settings
from .test_functions import TestFunction, parse_function_id
from .weighted_analysis import weight

logger = logging.getLogger(__name__)

TABLE_DOMAIN = (0.1, 10.0)
TABLE_M_VALUES = (20.0, 50.0, 100.0)
TABLE_Z_VALUES = (0.5, 1.0, 2.0, 4.0, 8.0)
_FOUR_PLACES = Decimal('0.0001')


def resolve(kernel_id: str, fn_name: str) -> tuple[KernelProfile, TestFunction]:
    try:
        return resolve_kernel(kernel_id), parse_function_id(fn_name)
    except InvalidParameterError as exc:
        raise ConfigurationError(str(exc), detail=exc.detail) from exc


def log_grid(grid: ZGrid | Sequence[float]) -> np.ndarray:
    if not isinstance(grid, ZGrid):
        z_min, z_max, count = grid
        grid = ZGrid(z_min=z_min, z_max=z_max, count=int(count))
    return np.exp(np.linspace(math.log(grid.z_min), math.log(grid.z_max), grid.count))


def _weighted_errors(
    k: KernelProfile,
    h: TestFunction,
    operator: str,
    m: float,
    domain: Sequence[float],
    zs: np.ndarray,
    nodes: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scheme = SamplingScheme.compact(m, domain[0], domain[1], quadrature_nodes=nodes)
    approx = apply_operator(operator, k, h, scheme, zs)
    w = weight(zs)
    exact_weighted = w * np.asarray(h(zs), dtype=float)
    approx_weighted = w * approx
    return approx, approx_weighted, np.abs(approx_weighted - exact_weighted)


def run_table(
    kernel_id: str,
    fn_name: str,
    ms: Sequence[float],
    zs: Sequence[float],
    domain: Sequence[float] = TABLE_DOMAIN,
    *,
    nodes: int | None = None,
    operator: str = 'max_product',
) -> ErrorTable:
    k, h = resolve(kernel_id, fn_name)
    nodes = nodes or get_settings().quadrature_nodes
    z_arr = np.asarray(zs, dtype=float)
    exact_raw = np.asarray(h(z_arr), dtype=float)
    exact_weighted = weight(z_arr) * exact_raw

    per_m = []
    for m in ms:
        logger.debug('table %s %s m=%s', kernel_id, fn_name, m)
        per_m.append(_weighted_errors(k, h, operator, m, domain, z_arr, nodes))

    rows = []
    for i, z in enumerate(z_arr):
        cells = [
            ErrorCell(
                m=float(m),
                approx_weighted=float(approx_w[i]),
                error_weighted=float(err[i]),
                approx_raw=float(approx[i]),
            )
            for m, (approx, approx_w, err) in zip(ms, per_m)
        ]
        rows.append(
            ErrorRow(
                z=float(z),
                exact_weighted=float(exact_weighted[i]),
                exact_raw=float(exact_raw[i]),
                cells=cells,
            )
        )

    return ErrorTable(
        kernel_id=k.kernel_id,
        function_name=h.name,
        m_values=[float(m) for m in ms],
        rows=rows,
        metadata=TableMetadata(
            domain=(float(domain[0]), float(domain[1])),
            quadrature_nodes=nodes,
            operator=OperatorName(operator),
            timestamp=datetime.now(timezone.utc).isoformat(),
        ),
    )


def convergence_sweep(
    kernel_id: str,
    fn_name: str,
    ms: Sequence[float],
    domain: Sequence[float],
    z_grid: ZGrid | Sequence[float],
    *,
    nodes: int | None = None,
    operator: str = 'max_product',
) -> list[tuple[float, float]]:
    """Grid supremum of w(z)·|op(h, z) − h(z)| for every m."""
    k, h = resolve(kernel_id, fn_name)
    nodes = nodes or get_settings().quadrature_nodes
    zs = log_grid(z_grid)
    result = []
    for m in ms:
        _, _, err = _weighted_errors(k, h, operator, m, domain, zs, nodes)
        sup_error = float(err.max())
        logger.debug('sweep %s %s %s m=%s sup=%.6g', operator, kernel_id, fn_name, m, sup_error)
        result.append((float(m), sup_error))
    return result


def compare_operators(
    kernel_id: str,
    fn_name: str,
    ms: Sequence[float],
    domain: Sequence[float],
    z_grid: ZGrid | Sequence[float],
    *,
    nodes: int | None = None,
) -> dict[str, list[tuple[float, float]]]:
    return {
        operator: convergence_sweep(
            kernel_id, fn_name, ms, domain, z_grid, nodes=nodes, operator=operator
        )
        for operator in OPERATORS
    }


def plot_data(
    kernel_id: str,
    fn_name: str,
    ms: Sequence[float],
    domain: Sequence[float],
    z_grid: ZGrid | Sequence[float],
    *,
    nodes: int | None = None,
    operator: str = 'max_product',
) -> list[dict[str, float]]:
    """Weighted (z, exact, approx per m) rows on a dense grid, for external plotting."""
    k, h = resolve(kernel_id, fn_name)
    nodes = nodes or get_settings().quadrature_nodes
    zs = log_grid(z_grid)
    exact = weight(zs) * np.asarray(h(zs), dtype=float)
    columns = {}
    for m in ms:
        _, approx_w, _ = _weighted_errors(k, h, operator, m, domain, zs, nodes)
        columns[f'approx_m{format_label(m)}'] = approx_w
    rows = []
    for i, z in enumerate(zs):
        row = {'z': float(z), 'exact': float(exact[i])}
        row.update({name: float(values[i]) for name, values in columns.items()})
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def paper4dp(value: float) -> str:
    """Round half-to-even to four decimals; negative zero prints as 0.0000."""
    if not math.isfinite(value):
        return repr(value)
    rounded = Decimal(repr(float(value))).quantize(_FOUR_PLACES, rounding=ROUND_HALF_EVEN)
    if rounded == 0:
        rounded = abs(rounded)
    return str(rounded)


def format_value(value: float, precision: PrecisionMode | str) -> str:
    if PrecisionMode(precision) is PrecisionMode.PAPER4DP:
        return paper4dp(value)
    return repr(float(value))


def format_label(m: float) -> str:
    m = float(m)
    return str(int(m)) if m.is_integer() else repr(m)


def _format_z(z: float, precision: PrecisionMode | str) -> str:
    if PrecisionMode(precision) is PrecisionMode.PAPER4DP:
        return f'{z:.2f}'
    return repr(float(z))


def _writer(stream: IO[str]):
    return csv.writer(stream, lineterminator='\n')


def write_table_csv(
    table: ErrorTable,
    stream: IO[str],
    *,
    precision: PrecisionMode | str = PrecisionMode.PAPER4DP,
    raw_column: bool = False,
) -> None:
    labels = [format_label(m) for m in table.m_values]
    header = ['z', 'exact']
    for label in labels:
        header += [f'approx_m{label}', f'err_m{label}']
    if raw_column:
        header += ['exact_raw'] + [f'approx_raw_m{label}' for label in labels]

    writer = _writer(stream)
    writer.writerow(header)
    for row in table.rows:
        line = [_format_z(row.z, precision), format_value(row.exact_weighted, precision)]
        for cell in row.cells:
            line += [
                format_value(cell.approx_weighted, precision),
                format_value(cell.error_weighted, precision),
            ]
        if raw_column:
            line.append(repr(row.exact_raw))
            line += [repr(cell.approx_raw) for cell in row.cells]
        writer.writerow(line)


def write_records_csv(
    records: Iterable[dict],
    stream: IO[str],
    *,
    precision: PrecisionMode | str = PrecisionMode.FULL,
    exact_keys: Sequence[str] = (),
) -> None:
    """Generic CSV of dict rows; float columns follow `precision` except `exact_keys`."""
    records = list(records)
    writer = _writer(stream)
    if not records:
        return
    header = list(records[0])
    writer.writerow(header)
    for record in records:
        line = []
        for key in header:
            value = record[key]
            if isinstance(value, bool) or not isinstance(value, (float, int)):
                line.append(str(value).lower() if isinstance(value, bool) else str(value))
            elif key in exact_keys:
                line.append(format_label(value))
            else:
                line.append(format_value(value, precision))
        writer.writerow(line)


def _finite_or_none(value):
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {key: _finite_or_none(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_none(item) for item in value]
    return value


def write_json(payload, stream: IO[str]) -> None:
    """Strict JSON: non-finite floats (diverged moments, missing constants) become null."""
    if hasattr(payload, 'model_dump'):
        payload = payload.model_dump(mode='json')
    json.dump(_finite_or_none(payload), stream, indent=2, allow_nan=False)
    stream.write('\n')


def build_manifest(
    config: dict, grids: dict, outputs: Sequence[str], started_at: str, wall_clock: float
) -> RunManifest:
    return RunManifest(
        library_version=__version__,
        config=config,
        grids=grids,
        outputs=list(outputs),
        started_at=started_at,
        wall_clock_seconds=wall_clock,
    )
