"""Normal quantile and Wilson score intervals"""

import math

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.core.errors import DomainError
from src.core.model import Interval

# Rational approximation of the inverse normal CDF (Acklam); relative error
# below 1.2e-9 over the open unit interval.
_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_P_LOW = 0.02425
_P_HIGH = 1 - _P_LOW


def _tail(q: float) -> float:
    num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
    den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1
    return num / den


def inv_norm_quantile(t: float) -> float:
    """Return the t-th quantile of the standard normal distribution"""
    if not 0 < t < 1:
        raise DomainError(f"Quantile probability must lie in (0, 1), got {t}")

    if t < _P_LOW:
        return _tail(math.sqrt(-2 * math.log(t)))
    if t > _P_HIGH:
        return -_tail(math.sqrt(-2 * math.log(1 - t)))

    q = t - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1
    return num / den


class WilsonParams(BaseModel):
    """Inputs of a binomial interval with the quantile magnitude resolved"""

    model_config = ConfigDict(frozen=True)

    p_hat: float = Field(ge=0, le=1)
    c: float = Field(gt=0, lt=1)
    n: int = Field(ge=1)
    z: float = Field(ge=0)

    @field_validator("p_hat", "c", mode="before")
    @classmethod
    def _finite(cls, value):
        if not math.isfinite(float(value)):
            raise DomainError(f"Expected a finite number, got {value}")
        return value


def z_for(c: float) -> float:
    """Quantile magnitude |z| for a two-sided interval at level c"""
    if not 0 < c < 1:
        raise DomainError(f"Confidence must lie in (0, 1), got {c}")
    return abs(inv_norm_quantile((1 - c) / 2))


def wilson_params(p_hat: float, c: float, n: int) -> WilsonParams:
    if not 0 <= p_hat <= 1:
        raise DomainError(f"p_hat must lie in [0, 1], got {p_hat}")
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    return WilsonParams(p_hat=p_hat, c=c, n=n, z=z_for(c))



def wilson_bounds(p: float, z: float, n: int):
    """Wilson endpoints for a resolved quantile magnitude z, clamped to [0, 1]"""
    z2n = z * z / n
    denom = 1 + z2n
    center = (p + z2n / 2) / denom
    margin = z * math.sqrt(p * (1 - p) / n + z2n / (4 * n)) / denom
    lo = min(max(center - margin, 0.0), 1.0)
    hi = min(max(center + margin, 0.0), 1.0)
    return lo, hi


def wilson_interval(p_hat: float, c: float, n: int) -> Interval:
    """Wilson score interval; the estimate is the midpoint of the endpoints"""
    params = wilson_params(p_hat, c, n)
    lo, hi = wilson_bounds(params.p_hat, params.z, params.n)
    return Interval.from_endpoints(lo, hi, level=c)


def wilson_interval_approx(p_hat: float, c: float, n: int) -> Interval:
    """Large-n normal interval around p_hat; endpoints are not clamped"""
    params = wilson_params(p_hat, c, n)
    half = params.z * math.sqrt(params.p_hat * (1 - params.p_hat) / params.n)
    return Interval.symmetric(params.p_hat, half, level=c)


def binomial_half_size(p_hat: float, z: float, n: int, approx: bool = False) -> float:
    """Half-size of the binomial interval for an already resolved z.

    Skips model construction; used by the estimation hot loops.
    """
    if approx:
        return z * math.sqrt(p_hat * (1 - p_hat) / n)
    lo, hi = wilson_bounds(p_hat, z, n)
    return (hi - lo) / 2
