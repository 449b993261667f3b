"""End-to-end smoke test for the mpkes command line.

This script does not re-test numerical internals. It drives every subcommand through
the real argument parser and checks that the wiring holds together:
- each subcommand exits with the documented code
- CSV headers have the documented layout
- the published Fejér / h2 table is reproduced to within a tolerance

Usage:
  python scripts/smoke_tables.py
  python scripts/smoke_tables.py --tolerance 0.01 --min-cells 13

Exit codes:
  0: all checks passed
  1: one or more checks failed
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parents[1]
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from src.cli import run_to_string  # noqa: E402
from src.errors import EXIT_BOUND, EXIT_CONFIG  # noqa: E402

# weighted errors at z = 0.5, 1, 2, 4, 8 for m = 20, 50, 100
FEJER_H2_ERRORS = (
    (0.0163, 0.0039, 0.0039),
    (0.0120, 0.0049, 0.0025),
    (0.0080, 0.0042, 0.0005),
    (0.0095, 0.0009, 0.0022),
    (0.0054, 0.0016, 0.0009),
)

# (argv, expected exit code, expected first CSV line or None)
SUBCOMMAND_CHECKS: list[tuple[list[str], int, str | None]] = [
    (['kernels'], 0, 'kernel,support_radius,decay_exponent,zeta,m0,m1,m2'),
    (['moments', '--nu', '0,1,2'], 0, 'nu,value,diverged,radius,resolution'),
    (['sweep', '--m', '20,50', '--z-grid', '0.5:8:17'], 0, 'm,sup_error'),
    (
        ['voronovskaja', '--m', '25', '--z', '1'],
        0,
        'm,z,n,lhs,correction,residual,correction_index,residual_index,thm4_bound,'
        'pointwise_moments',
    ),
    (['table', '--kernel', 'bspline:n=1'], EXIT_CONFIG, None),
    (
        ['bound', '--kernel', 'fejer:beta=1,t=0', '--m', '20', '--z-grid', '0.5:8:9'],
        EXIT_BOUND,
        None,
    ),
]


def check_subcommands() -> list[str]:
    failures: list[str] = []
    for argv, expected_code, expected_header in SUBCOMMAND_CHECKS:
        label = ' '.join(argv)
        code, out = run_to_string(argv)
        if code != expected_code:
            failures.append(f'{label}: exit {code}, expected {expected_code}')
            continue
        if expected_header is not None:
            header = out.splitlines()[0] if out else ''
            if header != expected_header:
                failures.append(f'{label}: header {header!r}')
    return failures


def check_fejer_table(tolerance: float, min_cells: int) -> list[str]:
    code, out = run_to_string(['table', '--kernel', 'fejer:beta=1,t=0', '--fn', 'h2'])
    if code != 0:
        return [f'fejer table: exit {code}']

    hits = 0
    for line, published in zip(out.splitlines()[1:], FEJER_H2_ERRORS):
        fields = line.split(',')
        errors = [float(fields[i]) for i in (3, 5, 7)]
        hits += sum(abs(e - p) <= tolerance for e, p in zip(errors, published))
    if hits < min_cells:
        return [f'fejer table: only {hits} of 15 cells within {tolerance}']
    return []


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description='End-to-end smoke tests for the mpkes CLI')
    parser.add_argument(
        '--tolerance',
        type=float,
        default=0.01,
        help='allowed absolute deviation from published errors (default: 0.01)',
    )
    parser.add_argument(
        '--min-cells',
        type=int,
        default=13,
        help='cells of the 15-cell table that must be within tolerance (default: 13)',
    )
    args = parser.parse_args(argv)

    failures = check_subcommands() + check_fejer_table(args.tolerance, args.min_cells)
    if failures:
        print('FAIL')
        for f in failures:
            print(f'- {f}')
        return 1

    print('OK: mpkes smoke test passed')
    return 0


if __name__ == '__main__':
    raise SystemExit(main())
