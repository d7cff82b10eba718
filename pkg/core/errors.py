# core/errors.py
"""
Errores del pipeline. Cada clase lleva su código de salida; main.py los
traduce a una línea en stderr + exit code.
"""


class AutoPlanError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(AutoPlanError):
    exit_code = 2


class ArgumentError(AutoPlanError, ValueError):
    exit_code = 2


class SceneParseError(AutoPlanError):
    exit_code = 3


class SceneValidationError(AutoPlanError):
    exit_code = 3


class MeasurementError(AutoPlanError):
    exit_code = 3


class PlanningError(AutoPlanError):
    exit_code = 3


class NumericalError(AutoPlanError):
    exit_code = 4


class GenerationError(AutoPlanError):
    exit_code = 3
