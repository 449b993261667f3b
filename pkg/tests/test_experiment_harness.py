import io
import json
import math

import numpy as np
import pytest

from src.errors import ConfigurationError
from src.experiment_harness import (
    TABLE_DOMAIN,
    TABLE_M_VALUES,
    TABLE_Z_VALUES,
    compare_operators,
    convergence_sweep,
    format_label,
    log_grid,
    paper4dp,
    plot_data,
    run_table,
    write_json,
    write_records_csv,
    write_table_csv,
)
from src.models import PrecisionMode, ZGrid
from src.sampling_ops import OPERATORS
from src.weighted_analysis import weight

# published weighted values, rows z = 0.5, 1, 2, 4, 8 and error columns m = 20, 50, 100
FEJER_H2 = {
    0.5: (0.2739, (0.0163, 0.0039, 0.0039)),
    1.0: (0.6931, (0.0120, 0.0049, 0.0025)),
    2.0: (0.7421, (0.0080, 0.0042, 0.0005)),
    4.0: (0.5508, (0.0095, 0.0009, 0.0022)),
    8.0: (0.4127, (0.0054, 0.0016, 0.0009)),
}
JACKSON_H3 = {
    0.5: (0.2591, (0.0203, 0.0064, 0.0031)),
    1.0: (0.4207, (0.0044, 0.0016, 0.0008)),
    2.0: (0.1228, (0.0179, 0.0006, 0.0008)),
    4.0: (-0.0152, (0.0186, 0.0152, 0.0152)),
    8.0: (0.0029, (0.0001, 0.0000, 0.0000)),
}


def _cells_within(table, published, tol):
    hits = 0
    for row in table.rows:
        _, errors = published[row.z]
        hits += sum(abs(cell.error_weighted - e) <= tol for cell, e in zip(row.cells, errors))
    return hits


@pytest.mark.parametrize(
    'kernel_id,fn,published',
    [('fejer:beta=1,t=0', 'h2', FEJER_H2), ('jackson:beta=1,n=3,t=0', 'h3', JACKSON_H3)],
)
def test_published_tables_are_reproduced(kernel_id, fn, published):
    table = run_table(kernel_id, fn, TABLE_M_VALUES, TABLE_Z_VALUES, TABLE_DOMAIN)
    for row in table.rows:
        assert row.exact_weighted == pytest.approx(published[row.z][0], abs=1e-4)
    assert _cells_within(table, published, 0.01) >= 13


def test_fejer_h2_cell_at_unit_point():
    table = run_table('fejer:beta=1,t=0', 'h2', [50.0], [1.0])
    assert table.rows[0].cells[0].error_weighted == pytest.approx(0.0049, abs=1e-3)


def test_bspline_h1_table_shape():
    table = run_table('bspline:n=3', 'h1', TABLE_M_VALUES, [0.5, 1.0, 2.0, 4.0])
    by_z = {row.z: [cell.error_weighted for cell in row.cells] for row in table.rows}
    # h1(0.5) < 0 while the max also sees vanishing kernel terms, so M stays at 0
    assert all(error >= 0.4 for error in by_z[0.5])
    for z in (1.0, 2.0):
        errors = by_z[z]
        assert errors[0] > errors[1] > errors[2]
    assert all(error <= 0.01 for error in by_z[4.0])


def test_constant_one_has_zero_error():
    table = run_table('jackson:beta=1,n=3,t=0', 'one', TABLE_M_VALUES, TABLE_Z_VALUES)
    for row in table.rows:
        assert all(cell.error_weighted <= 1e-12 for cell in row.cells)


def test_table_cells_follow_weighted_identity():
    table = run_table('bspline:n=3', 'h2', [20.0, 50.0], [0.5, 1.0, 3.0])
    for row in table.rows:
        w = weight(row.z)
        assert row.exact_weighted == pytest.approx(w * row.exact_raw, rel=1e-14)
        for cell in row.cells:
            assert cell.approx_weighted == pytest.approx(w * cell.approx_raw, rel=1e-14)
            assert cell.error_weighted == abs(cell.approx_weighted - row.exact_weighted)


def test_unknown_ids_are_configuration_errors():
    with pytest.raises(ConfigurationError):
        run_table('gauss:sigma=1', 'h2', [20.0], [1.0])
    with pytest.raises(ConfigurationError):
        convergence_sweep('bspline:n=3', 'h9', [20.0], TABLE_DOMAIN, (0.5, 8.0, 9))


def test_convergence_sweep_decreases():
    ms = [10.0, 20.0, 40.0, 80.0]
    sweep = convergence_sweep('bspline:n=3', 'h2', ms, TABLE_DOMAIN, (0.5, 8.0, 65))
    errors = [error for _, error in sweep]
    assert [m for m, _ in sweep] == ms
    assert all(b <= a for a, b in zip(errors, errors[1:]))
    assert errors[-1] < errors[0] / 2.0


def test_sweep_of_h1_keeps_the_negative_region_error():
    sweep = convergence_sweep('bspline:n=3', 'h1', TABLE_M_VALUES, TABLE_DOMAIN, (0.5, 8.0, 33))
    assert all(error >= 0.4 for _, error in sweep)


def test_compare_operators_shapes():
    ms = [20.0, 50.0]
    results = compare_operators('bspline:n=3', 'h2', ms, TABLE_DOMAIN, (0.5, 8.0, 33))
    assert tuple(results) == OPERATORS
    for sweep in results.values():
        assert [m for m, _ in sweep] == ms
        assert all(math.isfinite(error) and error >= 0.0 for _, error in sweep)


def test_plot_data_rows():
    rows = plot_data('bspline:n=3', 'h2', [20.0, 100.0], TABLE_DOMAIN, (0.2, 5.0, 17))
    assert len(rows) == 17
    assert list(rows[0]) == ['z', 'exact', 'approx_m20', 'approx_m100']
    for row in rows:
        assert row['exact'] == pytest.approx(weight(row['z']) * math.log1p(row['z']), rel=1e-14)
        assert row['approx_m100'] == pytest.approx(row['exact'], abs=0.02)


def test_log_grid_accepts_models_and_tuples():
    grid = log_grid(ZGrid(z_min=0.5, z_max=8.0, count=5))
    assert np.allclose(grid, [0.5, 1.0, 2.0, 4.0, 8.0], rtol=1e-14)
    assert np.array_equal(grid, log_grid((0.5, 8.0, 5)))


@pytest.mark.parametrize(
    'value,expected',
    [
        (0.27386, '0.2739'),
        (0.00015, '0.0002'),
        (0.00025, '0.0002'),
        (0.00005, '0.0000'),
        (-0.00001, '0.0000'),
        (-0.01524, '-0.0152'),
        (1.0, '1.0000'),
    ],
)
def test_paper4dp_rounding(value, expected):
    assert paper4dp(value) == expected


def test_format_label():
    assert format_label(20.0) == '20'
    assert format_label(12.5) == '12.5'


def _csv(table, **kwargs):
    buffer = io.StringIO()
    write_table_csv(table, buffer, **kwargs)
    return buffer.getvalue()


def test_table_csv_layout():
    table = run_table('fejer:beta=1,t=0', 'h2', TABLE_M_VALUES, TABLE_Z_VALUES)
    text = _csv(table)
    lines = text.split('\n')
    assert lines[0] == 'z,exact,approx_m20,err_m20,approx_m50,err_m50,approx_m100,err_m100'
    assert lines[1].startswith('0.50,0.2739,')
    assert '\r' not in text
    assert text.endswith('\n')
    assert len(lines) == len(TABLE_Z_VALUES) + 2


def test_table_csv_is_byte_reproducible():
    first = _csv(run_table('bspline:n=3', 'h2', TABLE_M_VALUES, TABLE_Z_VALUES))
    second = _csv(run_table('bspline:n=3', 'h2', TABLE_M_VALUES, TABLE_Z_VALUES))
    assert first == second


def test_table_csv_full_precision_and_raw_columns():
    table = run_table('bspline:n=3', 'h2', [20.0], [1.0])
    text = _csv(table, precision=PrecisionMode.FULL, raw_column=True)
    header, line = text.splitlines()
    assert header == 'z,exact,approx_m20,err_m20,exact_raw,approx_raw_m20'
    fields = line.split(',')
    assert float(fields[0]) == 1.0
    assert float(fields[4]) == pytest.approx(math.log(2.0), rel=1e-15)
    assert float(fields[1]) == table.rows[0].exact_weighted


def test_records_csv():
    buffer = io.StringIO()
    records = [{'m': 20.0, 'sup_error': 0.012345, 'diverged': False, 'kernel': 'bspline:n=3'}]
    write_records_csv(records, buffer, precision='paper4dp', exact_keys=('m',))
    assert buffer.getvalue() == 'm,sup_error,diverged,kernel\n20,0.0123,false,bspline:n=3\n'

    empty = io.StringIO()
    write_records_csv([], empty)
    assert empty.getvalue() == ''


def test_json_output():
    table = run_table('bspline:n=3', 'h2', [20.0], [1.0, 2.0])
    buffer = io.StringIO()
    write_json(table, buffer)
    payload = json.loads(buffer.getvalue())
    assert payload['kernel_id'] == 'bspline:n=3'
    assert payload['metadata']['operator'] == 'max_product'
    assert [row['z'] for row in payload['rows']] == [1.0, 2.0]


def test_json_output_maps_non_finite_values_to_null():
    records = [
        {'nu': 5, 'value': math.inf, 'diverged': True},
        {'nu': 1, 'value': 0.25, 'extra': [np.float64(np.nan), 1.5], 'nested': {'x': -math.inf}},
    ]
    buffer = io.StringIO()
    write_json(records, buffer)
    assert 'Infinity' not in buffer.getvalue()
    assert 'NaN' not in buffer.getvalue()
    payload = json.loads(buffer.getvalue())
    assert payload[0] == {'nu': 5, 'value': None, 'diverged': True}
    assert payload[1]['value'] == 0.25
    assert payload[1]['extra'] == [None, 1.5]
    assert payload[1]['nested'] == {'x': None}
