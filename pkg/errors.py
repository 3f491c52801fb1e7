"""Исключения вычислительного ядра."""


class DiskDynamicsError(Exception):
    """Базовый класс вычислительных ошибок."""


class ZeroVectorError(DiskDynamicsError):
    pass


class MissingVelocitiesError(DiskDynamicsError):
    pass


class EscapedDiskError(DiskDynamicsError):
    """Узел траектории вышел за пределы замкнутого единичного диска."""


class SeparationUnderflowError(DiskDynamicsError):
    pass


class SubstepLimitError(DiskDynamicsError):
    pass


class CrossCheckFailedError(DiskDynamicsError):
    """Два независимых вычисления одной величины расходятся."""


class TransversalityError(DiskDynamicsError):
    """Кривая касается поверхности или задевает её край."""

    def __init__(self, message, time=None, angle_rate=None):
        super().__init__(message)
        self.time = time
        self.angle_rate = angle_rate


class NotPeriodicError(DiskDynamicsError):
    pass


class ConfigError(DiskDynamicsError, ValueError):
    """Некорректная конфигурация эксперимента."""
