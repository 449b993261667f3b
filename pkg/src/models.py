"""
Validated records shared by the harness and the CLI.

RunConfig is the single description of a run: the CLI builds one from flags (and an
optional JSON file), the harness consumes it, and the manifest echoes it back.
"""

from __future__ import annotations

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import SamplingError
from .kernel_bank import resolve_kernel
from .test_functions import parse_function_id

# ============================================================================
# ENUMS
# ============================================================================


class Subcommand(str, Enum):
    TABLE = 'table'
    SWEEP = 'sweep'
    MOMENTS = 'moments'
    BOUND = 'bound'
    VORONOVSKAJA = 'voronovskaja'
    KERNELS = 'kernels'


class OutputFormat(str, Enum):
    CSV = 'csv'
    JSON = 'json'


class PrecisionMode(str, Enum):
    """paper4dp rounds emitted values half-to-even to 4 decimals; full keeps repr()."""

    PAPER4DP = 'paper4dp'
    FULL = 'full'


class OperatorName(str, Enum):
    MAX_PRODUCT = 'max_product'
    KANTOROVICH = 'kantorovich'
    GENERALIZED = 'generalized'


# ============================================================================
# RUN CONFIGURATION
# ============================================================================


class ZGrid(BaseModel):
    """Log-uniform grid of `count` points on [z_min, z_max]."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    z_min: float
    z_max: float
    count: int = Field(ge=2)

    @model_validator(mode='after')
    def check_order(self):
        if not (0.0 < self.z_min < self.z_max):
            raise ValueError(f'z grid needs 0 < min < max, got {self.z_min}:{self.z_max}')
        return self


class RunConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    subcommand: Subcommand
    kernel_id: str = 'bspline:n=3'
    function: str = 'h2'
    m_list: List[float] = Field(default_factory=lambda: [20.0, 50.0, 100.0])
    z_list: Optional[List[float]] = None
    z_grid: Optional[ZGrid] = None
    domain: Tuple[float, float] = (0.1, 10.0)
    quadrature_nodes: int = Field(default=8, ge=2)
    output_path: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV
    precision_mode: PrecisionMode = PrecisionMode.PAPER4DP
    operator: OperatorName = OperatorName.MAX_PRODUCT
    compare_operators: bool = False
    nu_list: List[float] = Field(default_factory=lambda: [0.0, 1.0, 2.0])
    order: int = Field(default=1, ge=1, le=3)
    raw_column: bool = False
    plot_data: bool = False

    @field_validator('kernel_id')
    @classmethod
    def validate_kernel_id(cls, v):
        try:
            resolve_kernel(v)
        except SamplingError as exc:
            raise ValueError(str(exc)) from exc
        return v.strip()

    @field_validator('function')
    @classmethod
    def validate_function(cls, v):
        try:
            parse_function_id(v)
        except SamplingError as exc:
            raise ValueError(str(exc)) from exc
        return v.strip()

    @field_validator('m_list')
    @classmethod
    def validate_m_list(cls, v):
        if not v:
            raise ValueError('m_list must not be empty')
        if any(not m > 0 for m in v):
            raise ValueError('every sampling rate m must be positive')
        return v

    @field_validator('z_list')
    @classmethod
    def validate_z_list(cls, v):
        if v is not None:
            if not v:
                raise ValueError('z_list must not be empty')
            if any(not z > 0 for z in v):
                raise ValueError('every evaluation point z must be positive')
        return v

    @field_validator('nu_list')
    @classmethod
    def validate_nu_list(cls, v):
        if not v or any(nu < 0 for nu in v):
            raise ValueError('moment orders must be a nonempty list of nonnegative values')
        return v

    @field_validator('domain')
    @classmethod
    def validate_domain(cls, v):
        a, b = v
        if not (0.0 < a < b):
            raise ValueError(f'domain needs 0 < a < b, got {a}:{b}')
        return v

    @model_validator(mode='after')
    def check_points_in_domain(self):
        a, b = self.domain
        if self.z_list is not None and any(not (a <= z <= b) for z in self.z_list):
            raise ValueError(f'every z must lie in the domain [{a}, {b}]')
        if self.z_grid is not None and self.subcommand in (Subcommand.TABLE, Subcommand.SWEEP):
            if not (a <= self.z_grid.z_min and self.z_grid.z_max <= b):
                raise ValueError(f'the z grid must lie in the domain [{a}, {b}]')
        return self


# ============================================================================
# RESULTS
# ============================================================================


class ErrorCell(BaseModel):
    m: float
    approx_weighted: float
    error_weighted: float
    approx_raw: float


class ErrorRow(BaseModel):
    z: float
    exact_weighted: float
    exact_raw: float
    cells: List[ErrorCell]


class TableMetadata(BaseModel):
    domain: Tuple[float, float]
    quadrature_nodes: int
    operator: OperatorName
    timestamp: str


class ErrorTable(BaseModel):
    kernel_id: str
    function_name: str
    m_values: List[float]
    rows: List[ErrorRow]
    metadata: TableMetadata


class RunManifest(BaseModel):
    library_version: str
    config: dict
    grids: dict
    outputs: List[str] = Field(default_factory=list)
    started_at: str
    wall_clock_seconds: float
