from __future__ import annotations

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_BOUND = 4


class SamplingError(RuntimeError):
    """Base error for the library; `exit_code` is what the CLI returns for it."""

    exit_code: int = EXIT_CONFIG

    def __init__(self, message: str, *, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


class InvalidParameterError(SamplingError):
    exit_code = EXIT_CONFIG


class DomainError(SamplingError):
    exit_code = EXIT_CONFIG


class DegenerateIntervalError(SamplingError):
    exit_code = EXIT_CONFIG

    def __init__(self, message: str, *, m: float, a: float, b: float):
        super().__init__(message, detail={'m': m, 'a': a, 'b': b})
        self.m = m
        self.a = a
        self.b = b


class ConfigurationError(SamplingError):
    exit_code = EXIT_CONFIG


class NumericFailureError(SamplingError):
    exit_code = EXIT_NUMERIC

    def __init__(
        self,
        message: str,
        *,
        j: int | None = None,
        m: float | None = None,
        detail: dict | None = None,
    ):
        merged = dict(detail or {})
        if j is not None:
            merged['j'] = j
        if m is not None:
            merged['m'] = m
        super().__init__(message, detail=merged)
        self.j = j
        self.m = m


class KernelInadmissibleError(SamplingError):
    exit_code = EXIT_NUMERIC


class BoundInapplicableError(SamplingError):
    exit_code = EXIT_BOUND

    def __init__(self, message: str, *, order: float | None = None, kernel: str | None = None):
        super().__init__(message, detail={'order': order, 'kernel': kernel})
        self.order = order
        self.kernel = kernel
