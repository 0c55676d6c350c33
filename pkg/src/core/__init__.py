from .errors import CrowdConfError, DomainError
from .model import Answer, GoldLabels, Interval, ResponseMatrix, WorkerEstimate, agreement_rate, restrict_to

__all__ = [
    "CrowdConfError",
    "DomainError",
    "Answer",
    "GoldLabels",
    "Interval",
    "ResponseMatrix",
    "WorkerEstimate",
    "agreement_rate",
    "restrict_to",
]
