from __future__ import annotations

import os
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()


def _parse_int(raw: str | None, default: int) -> int:
    try:
        if raw is None:
            return default
        return int(raw)
    except Exception:
        return default


def _parse_float(raw: str | None, default: float) -> float:
    try:
        if raw is None:
            return default
        return float(raw)
    except Exception:
        return default


@dataclass(frozen=True)
class Settings:
    quadrature_nodes: int
    z_grid_min: float
    z_grid_max: float
    z_grid_count: int
    u_grid_count: int
    classical_window: int
    max_workers: int
    log_level: str


def get_settings() -> Settings:
    """Snapshot of the MPKES_* environment (an optional .env file is read on import)."""

    z_min = _parse_float(os.environ.get('MPKES_Z_GRID_MIN'), 1e-3)
    z_max = _parse_float(os.environ.get('MPKES_Z_GRID_MAX'), 1e3)
    if not (0.0 < z_min < z_max):
        z_min, z_max = 1e-3, 1e3

    return Settings(
        quadrature_nodes=max(2, _parse_int(os.environ.get('MPKES_QUADRATURE_NODES'), 8)),
        z_grid_min=z_min,
        z_grid_max=z_max,
        z_grid_count=max(3, _parse_int(os.environ.get('MPKES_Z_GRID_COUNT'), 2049)),
        u_grid_count=max(3, _parse_int(os.environ.get('MPKES_U_GRID_COUNT'), 129)),
        classical_window=max(1, _parse_int(os.environ.get('MPKES_CLASSICAL_WINDOW'), 100)),
        max_workers=max(1, _parse_int(os.environ.get('MPKES_MAX_WORKERS'), 1)),
        log_level=(os.environ.get('MPKES_LOG_LEVEL') or 'WARNING').strip().upper() or 'WARNING',
    )
