"""Command-line front end.

Usage:
  mpkes table --kernel fejer:beta=1,t=0 --fn h2 --m 20,50,100 --z 0.5,1,2,4,8
  mpkes sweep --kernel bspline:n=3 --fn h2 --m 20,50,100 --z-grid 0.5:8:257
  mpkes moments --kernel bspline:n=3 --nu 0,1,2
  mpkes bound --kernel jackson:beta=1,n=3,t=0 --fn h2 --m 50
  mpkes voronovskaja --kernel bspline:n=3 --fn h2 --m 25,50,100 --z 1 --order 1
  mpkes kernels

Exit codes:
  0: success
  2: usage or configuration error
  3: numeric failure or inadmissible kernel
  4: bound not applicable (a required kernel moment diverges)
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Sequence

from pydantic import ValidationError

from .errors import ConfigurationError, SamplingError
from .experiment_harness import (
    TABLE_Z_VALUES,
    build_manifest,
    compare_operators,
    convergence_sweep,
    format_label,
    log_grid,
    plot_data,
    resolve,
    run_table,
    write_json,
    write_records_csv,
    write_table_csv,
)
from .kernel_bank import CATALOG, resolve_kernel, sup_moment
from .models import OperatorName, OutputFormat, PrecisionMode, RunConfig, Subcommand, ZGrid
from .sampling_ops import SamplingScheme
from .settings import get_settings
from .test_functions import REGISTRY
from .weighted_analysis import (
    WeightContext,
    checked_rate_bound_thm3,
    op_norm_bound_thm1,
    pointwise_bound_thm2,
    voronovskaja_probe,
)

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_GRID = ZGrid(z_min=0.5, z_max=8.0, count=257)
PLOT_GRID_COUNT = 513

_EPILOG = f"""\
kernel ids:   name:key=value[,key=value...]
  bspline:n=<int >= 2>
  fejer:beta=<>= 1>[,t=<real>]
  jackson:beta=<>= 1>,n=<int >= 1>[,t=<real>]
  catalog: {', '.join(CATALOG)}
functions:    {', '.join(sorted(REGISTRY))}, const:c=<value>
"""

# flag dest -> RunConfig field
_FIELD_FOR_FLAG = {
    'kernel': 'kernel_id',
    'fn': 'function',
    'm': 'm_list',
    'z': 'z_list',
    'z_grid': 'z_grid',
    'domain': 'domain',
    'nodes': 'quadrature_nodes',
    'out': 'output_path',
    'format': 'format',
    'precision': 'precision_mode',
    'operator': 'operator',
    'compare': 'compare_operators',
    'nu': 'nu_list',
    'order': 'order',
    'raw': 'raw_column',
    'plot_data': 'plot_data',
}


def _float_list(raw: str) -> list[float]:
    try:
        values = [float(part) for part in raw.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma-separated numbers, got {raw!r}')
    if not values:
        raise argparse.ArgumentTypeError('expected at least one number')
    return values


def _domain(raw: str) -> list[float]:
    parts = raw.split(':')
    try:
        a, b = (float(part) for part in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected a:b, got {raw!r}')
    return [a, b]


def _z_grid(raw: str) -> dict:
    parts = raw.split(':')
    try:
        z_min, z_max, count = parts
        return {'z_min': float(z_min), 'z_max': float(z_max), 'count': int(count)}
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected min:max:count, got {raw!r}')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON file with RunConfig fields; flags override it')
    common.add_argument('--kernel', help='kernel id, e.g. bspline:n=3')
    common.add_argument('--fn', help='test function id, e.g. h2 or const:c=2')
    common.add_argument('--m', type=_float_list, help='sampling rates, e.g. 20,50,100')
    common.add_argument('--z', type=_float_list, help='evaluation points, e.g. 0.5,1,2')
    common.add_argument('--z-grid', dest='z_grid', type=_z_grid, help='log grid min:max:count')
    common.add_argument('--domain', type=_domain, help='sampling domain a:b (default 0.1:10)')
    common.add_argument('--nodes', type=int, help='Gauss-Legendre nodes per cell')
    common.add_argument('--out', help='output path (default: standard output)')
    common.add_argument('--format', choices=[f.value for f in OutputFormat])
    common.add_argument('--precision', choices=[p.value for p in PrecisionMode])
    common.add_argument('--operator', choices=[op.value for op in OperatorName])
    common.add_argument(
        '--compare', action='store_true', default=None, help='sweep all three operators'
    )
    common.add_argument('--nu', type=_float_list, help='moment orders, e.g. 0,1,2')
    common.add_argument('--order', type=int, help='expansion order n for voronovskaja')
    common.add_argument(
        '--raw', action='store_true', default=None, help='add unweighted columns to tables'
    )
    common.add_argument(
        '--plot-data',
        dest='plot_data',
        action='store_true',
        default=None,
        help='emit dense-grid plot rows instead of the table',
    )
    common.add_argument('--log-level', dest='log_level', help='DEBUG, INFO, WARNING, ...')

    parser = argparse.ArgumentParser(
        prog='mpkes',
        description='Max-product Kantorovich exponential sampling experiments',
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    choices = ','.join(command.value for command in Subcommand)
    sub = parser.add_subparsers(dest='subcommand', metavar=f'{{{choices}}}')
    sub.required = True
    for command in Subcommand:
        sub.add_parser(
            command.value,
            parents=[common],
            epilog=_EPILOG,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
    return parser


def _config_from_namespace(ns: argparse.Namespace, config_text: str | None) -> RunConfig:
    values: dict = {}
    if ns.config:
        try:
            config_text = Path(ns.config).read_text(encoding='utf-8')
        except OSError as exc:
            raise ConfigurationError(f'cannot read config file {ns.config}: {exc}') from exc
    if config_text:
        try:
            loaded = json.loads(config_text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f'config file is not valid JSON: {exc}') from exc
        if not isinstance(loaded, dict):
            raise ConfigurationError('config file must hold a JSON object')
        values.update(loaded)

    for flag, field in _FIELD_FOR_FLAG.items():
        value = getattr(ns, flag, None)
        if value is not None:
            values[field] = value
    values['subcommand'] = ns.subcommand
    values.setdefault('quadrature_nodes', get_settings().quadrature_nodes)

    try:
        return RunConfig(**values)
    except ValidationError as exc:
        raise ConfigurationError(f'invalid configuration:\n{exc}') from exc


def parse_config(args: Sequence[str], config_text: str | None = None) -> RunConfig:
    """Flags (over an optional JSON config) to a validated RunConfig.

    argparse usage errors raise SystemExit(2); validation failures raise ConfigurationError.
    """
    ns = build_parser().parse_args(list(args))
    return _config_from_namespace(ns, config_text)


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


@contextmanager
def _output(cfg: RunConfig, stdout: IO[str]):
    if cfg.output_path is None:
        yield stdout
        return
    path = Path(cfg.output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as handle:
        yield handle


def _emit_records(cfg: RunConfig, records: list[dict], stdout: IO[str], exact_keys=()) -> None:
    with _output(cfg, stdout) as stream:
        if cfg.format is OutputFormat.JSON:
            write_json(records, stream)
        else:
            write_records_csv(
                records, stream, precision=cfg.precision_mode, exact_keys=exact_keys
            )


def _table_points(cfg: RunConfig) -> list[float]:
    if cfg.z_list is not None:
        return list(cfg.z_list)
    if cfg.z_grid is not None:
        return [float(z) for z in log_grid(cfg.z_grid)]
    return list(TABLE_Z_VALUES)


def _run_table(cfg: RunConfig, stdout: IO[str]) -> dict:
    a, b = cfg.domain
    if cfg.plot_data:
        grid = cfg.z_grid or ZGrid(z_min=a, z_max=b, count=PLOT_GRID_COUNT)
        rows = plot_data(
            cfg.kernel_id,
            cfg.function,
            cfg.m_list,
            cfg.domain,
            grid,
            nodes=cfg.quadrature_nodes,
            operator=cfg.operator.value,
        )
        _emit_records(cfg, rows, stdout)
        return {'plot_grid': grid.model_dump()}

    zs = _table_points(cfg)
    table = run_table(
        cfg.kernel_id,
        cfg.function,
        cfg.m_list,
        zs,
        cfg.domain,
        nodes=cfg.quadrature_nodes,
        operator=cfg.operator.value,
    )
    with _output(cfg, stdout) as stream:
        if cfg.format is OutputFormat.JSON:
            write_json(table, stream)
        else:
            write_table_csv(
                table, stream, precision=cfg.precision_mode, raw_column=cfg.raw_column
            )
    return {'z_points': zs}


def _run_sweep(cfg: RunConfig, stdout: IO[str]) -> dict:
    grid = cfg.z_grid or DEFAULT_SWEEP_GRID
    if cfg.compare_operators:
        results = compare_operators(
            cfg.kernel_id, cfg.function, cfg.m_list, cfg.domain, grid, nodes=cfg.quadrature_nodes
        )
        records = []
        for i, m in enumerate(cfg.m_list):
            record = {'m': m}
            record.update({operator: sweep[i][1] for operator, sweep in results.items()})
            records.append(record)
    else:
        sweep = convergence_sweep(
            cfg.kernel_id,
            cfg.function,
            cfg.m_list,
            cfg.domain,
            grid,
            nodes=cfg.quadrature_nodes,
            operator=cfg.operator.value,
        )
        records = [{'m': m, 'sup_error': error} for m, error in sweep]
    _emit_records(cfg, records, stdout, exact_keys=('m',))
    return {'z_grid': grid.model_dump()}


def _run_moments(cfg: RunConfig, stdout: IO[str]) -> dict:
    k = resolve_kernel(cfg.kernel_id)
    records = []
    for nu in cfg.nu_list:
        estimate = sup_moment(k, nu)
        records.append(
            {
                'nu': nu,
                'value': estimate.value,
                'diverged': estimate.diverged,
                'radius': estimate.truncation_radius,
                'resolution': estimate.grid_resolution,
            }
        )
    _emit_records(cfg, records, stdout, exact_keys=('nu', 'radius', 'resolution'))
    return {}


def _run_bound(cfg: RunConfig, stdout: IO[str]) -> dict:
    k, h = resolve(cfg.kernel_id, cfg.function)
    ctx = WeightContext.from_settings()
    grid = cfg.z_grid or DEFAULT_SWEEP_GRID
    measured = dict(
        convergence_sweep(
            cfg.kernel_id, cfg.function, cfg.m_list, cfg.domain, grid, nodes=cfg.quadrature_nodes
        )
    )
    records = []
    refined = []
    for m in cfg.m_list:
        check = checked_rate_bound_thm3(h, m, k, ctx, measured[float(m)])
        if check.refined:
            refined.append({'m': m, 'weight_grid': check.weight_grid})
        record = {
            'm': m,
            'thm1': op_norm_bound_thm1(m, k),
            'thm1_zeta_squared': op_norm_bound_thm1(m, k, squared_zeta=True),
            'thm3': check.bound,
            'measured_sup_error': check.measured,
            'thm3_refined': check.refined,
            'thm3_dominated': check.dominated,
        }
        for z in cfg.z_list or ():
            record[f'thm2_z{format_label(z)}'] = pointwise_bound_thm2(h, m, k, z, ctx)
        records.append(record)
    _emit_records(cfg, records, stdout, exact_keys=('m',))
    return {
        'z_grid': grid.model_dump(),
        'weight_grid': ctx.describe(),
        'thm3_refinements': refined,
    }


def _run_voronovskaja(cfg: RunConfig, stdout: IO[str]) -> dict:
    k, h = resolve(cfg.kernel_id, cfg.function)
    ctx = WeightContext.from_settings()
    a, b = cfg.domain
    records = []
    for m in cfg.m_list:
        scheme = SamplingScheme.compact(m, a, b, quadrature_nodes=cfg.quadrature_nodes)
        for z in cfg.z_list or [1.0]:
            probe = voronovskaja_probe(h, k, m, z, cfg.order, scheme=scheme, ctx=ctx)
            records.append(
                {
                    'm': m,
                    'z': z,
                    'n': probe.n,
                    'lhs': probe.lhs,
                    'correction': probe.correction,
                    'residual': probe.residual,
                    'correction_index': probe.correction_index_normalized,
                    'residual_index': probe.residual_index_normalized,
                    'thm4_bound': probe.thm4_bound,
                    'pointwise_moments': probe.pointwise_moments,
                }
            )
    _emit_records(cfg, records, stdout, exact_keys=('m', 'z', 'n'))
    return {'weight_grid': ctx.describe()}


def _run_kernels(cfg: RunConfig, stdout: IO[str]) -> dict:
    records = []
    for kernel_id in CATALOG:
        k = resolve_kernel(kernel_id)
        record = {
            'kernel': k.kernel_id,
            'support_radius': '' if k.support_radius is None else k.support_radius,
            'decay_exponent': '' if k.decay_exponent is None else k.decay_exponent,
            'zeta': k.constants.get('zeta', float('nan')),
        }
        for nu in (0, 1, 2):
            record[f'm{nu}'] = sup_moment(k, nu).value
        records.append(record)
    _emit_records(cfg, records, stdout, exact_keys=('support_radius', 'decay_exponent'))
    return {}


_HANDLERS = {
    Subcommand.TABLE: _run_table,
    Subcommand.SWEEP: _run_sweep,
    Subcommand.MOMENTS: _run_moments,
    Subcommand.BOUND: _run_bound,
    Subcommand.VORONOVSKAJA: _run_voronovskaja,
    Subcommand.KERNELS: _run_kernels,
}


def execute(cfg: RunConfig, stdout: IO[str] | None = None) -> int:
    """Run one subcommand; writes the result and, with --out, a JSON manifest beside it."""
    stdout = stdout if stdout is not None else sys.stdout
    started_at = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()

    grids = _HANDLERS[cfg.subcommand](cfg, stdout)

    if cfg.output_path is not None:
        manifest = build_manifest(
            cfg.model_dump(mode='json'),
            grids,
            [cfg.output_path],
            started_at,
            time.perf_counter() - t0,
        )
        manifest_path = Path(f'{cfg.output_path}.manifest.json')
        with manifest_path.open('w', encoding='utf-8', newline='') as handle:
            write_json(manifest, handle)
        logger.info('wrote %s and %s', cfg.output_path, manifest_path)
    return 0


def _configure_logging(level: str | None) -> None:
    name = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, name, logging.WARNING),
        stream=sys.stderr,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )


def main(argv: Sequence[str] | None = None, stdout: IO[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors and --help
        return exc.code if isinstance(exc.code, int) else 2

    _configure_logging(ns.log_level)
    try:
        cfg = _config_from_namespace(ns, None)
        return execute(cfg, stdout)
    except SamplingError as exc:
        logger.debug('failed with %r', exc.detail)
        print(f'error: {exc}', file=sys.stderr)
        return exc.exit_code


def run_to_string(argv: Sequence[str]) -> tuple[int, str]:
    """main() with standard output captured; handy for scripting and tests."""
    buffer = io.StringIO()
    code = main(argv, stdout=buffer)
    return code, buffer.getvalue()
