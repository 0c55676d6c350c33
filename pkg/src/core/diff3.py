"""Three-worker differences scheme: error rates and intervals from agreement rates"""

import logging
import math
from typing import List, Literal, NamedTuple, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from src.core.errors import DomainError
from src.core.model import (
    Interval,
    PairwiseAgreement,
    ResponseMatrix,
    WorkerEstimate,
)
from src.core.stats import binomial_half_size, wilson_interval, wilson_interval_approx, z_for

logger = logging.getLogger(__name__)

Mode = Literal["linearized", "conservative"]

DEGENERATE_DELTA = 1e-6

# Column pairs in q order: (0,1), (0,2), (1,2)
PAIRS = ((0, 1), (0, 2), (1, 2))
# Per worker: the two pairs it belongs to, then the opposite pair
ROLES = ((0, 1, 2), (0, 2, 1), (1, 2, 0))


class TripleCore(NamedTuple):
    """Plain-float result of one three-column evaluation"""

    n: int
    agree: Tuple[int, int, int]
    q_hats: Tuple[float, float, float]
    q_half: Tuple[float, float, float]
    p_hats: Tuple[float, float, float]
    lo: Tuple[float, float, float]
    hi: Tuple[float, float, float]
    degenerate: Tuple[bool, bool, bool]

    def half_size(self, k: int = 0) -> float:
        return (self.hi[k] - self.lo[k]) / 2


class TripleEstimate(BaseModel):
    """Estimates for three workers with the agreement statistics behind them"""

    model_config = ConfigDict(frozen=True)

    estimates: Tuple[WorkerEstimate, WorkerEstimate, WorkerEstimate]
    q_hats: Tuple[PairwiseAgreement, PairwiseAgreement, PairwiseAgreement]
    q_intervals: Tuple[Interval, Interval, Interval]
    c_nominal: float
    c_reported: float
    mode: Mode

    @model_validator(mode="after")
    def _check_mode(self):
        if self.mode == "conservative" and self.c_nominal < 2 / 3:
            raise DomainError("Conservative intervals need confidence of at least 2/3")
        return self


def invert_q(a: float, b: float, c: float) -> float:
    """Error rate of the worker shared by pairs a and b, given the opposite pair c"""
    if a <= 0.5 or b <= 0.5 or c <= 0.5:
        raise DomainError(f"Agreement rates must exceed 1/2, got ({a}, {b}, {c})")
    return 0.5 - math.sqrt((a - 0.5) * (b - 0.5) / (2 * (c - 0.5)))


def clamp_q(value: float) -> Tuple[float, bool]:
    """Lift an agreement rate at or below 1/2 to just above it"""
    if value <= 0.5:
        return 0.5 + DEGENERATE_DELTA, True
    return value, False


def _safe_invert(a: float, b: float, c: float) -> Tuple[float, bool]:
    a, da = clamp_q(a)
    b, db = clamp_q(b)
    c, dc = clamp_q(c)
    return invert_q(a, b, c), da or db or dc


def reported_level(c: float, mode: Mode) -> float:
    """Confidence attached to the corner interval"""
    if mode == "linearized":
        return c
    if mode != "conservative":
        raise DomainError(f"Unknown interval mode: {mode!r}")
    if c <= 2 / 3:
        raise DomainError(
            f"Conservative intervals need confidence above 2/3, got {c}: "
            f"the reported level 3c - 2 = {3 * c - 2:.4g} is not a usable confidence"
        )
    return 3 * c - 2


def estimate_columns(values: np.ndarray, z: float, approx: bool = False) -> TripleCore:
    """Run the scheme on an (n, 3) array of +1/-1 answers"""
    n = values.shape[0]
    cols = (values[:, 0], values[:, 1], values[:, 2])
    agree = tuple(int(np.count_nonzero(cols[i] == cols[j])) for i, j in PAIRS)
    q = tuple(k / n for k in agree)
    eps = tuple(binomial_half_size(qk, z, n, approx) for qk in q)

    p_hats: List[float] = []
    los: List[float] = []
    his: List[float] = []
    flags: List[bool] = []
    for x, y, w in ROLES:
        p_hat, point_clamped = _safe_invert(q[x], q[y], q[w])
        e_minus, minus_clamped = _safe_invert(q[x] - eps[x], q[y] - eps[y], q[w] + eps[w])
        e_plus, plus_clamped = _safe_invert(q[x] + eps[x], q[y] + eps[y], q[w] - eps[w])

        corner_clamped = minus_clamped or plus_clamped
        if not corner_clamped:
            # f falls in its first two arguments and rises in the third above 1/2
            assert e_minus >= e_plus - 1e-12, (e_minus, e_plus)

        p_hats.append(p_hat)
        los.append(min(e_minus, e_plus))
        his.append(max(e_minus, e_plus))
        flags.append(point_clamped or corner_clamped)

    return TripleCore(
        n=n,
        agree=agree,
        q_hats=q,
        q_half=eps,
        p_hats=tuple(p_hats),
        lo=tuple(los),
        hi=tuple(his),
        degenerate=tuple(flags),
    )


def core_interval(core: TripleCore, k: int, level: float) -> Interval:
    return Interval(
        estimate=core.p_hats[k],
        half_size=core.half_size(k),
        level=level,
        lo=core.lo[k],
        hi=core.hi[k],
    )


def estimate_three(
    matrix: ResponseMatrix,
    c: float,
    mode: Mode = "linearized",
    approx_intervals: bool = False,
) -> TripleEstimate:
    """Estimate the error rates of exactly three workers"""
    if matrix.m != 3:
        raise DomainError(f"The three-worker scheme needs exactly 3 workers, got {matrix.m}")
    matrix.require_complete()
    level = reported_level(c, mode)

    core = estimate_columns(matrix.values, z_for(c), approx_intervals)

    estimates = []
    for k, worker in enumerate(matrix.workers):
        if core.degenerate[k]:
            logger.warning(f"Degenerate estimate for worker {worker}: an agreement rate was at or below 1/2")
        estimates.append(
            WorkerEstimate(
                worker=worker,
                p_hat=core.p_hats[k],
                interval=core_interval(core, k, level),
                method="diff3",
                degenerate=core.degenerate[k],
            )
        )

    interval_fn = wilson_interval_approx if approx_intervals else wilson_interval
    q_hats = tuple(
        PairwiseAgreement(i=i, j=j, agree_count=core.agree[idx], n=core.n)
        for idx, (i, j) in enumerate(PAIRS)
    )
    q_intervals = tuple(interval_fn(qk, c, core.n) for qk in core.q_hats)

    return TripleEstimate(
        estimates=tuple(estimates),
        q_hats=q_hats,
        q_intervals=q_intervals,
        c_nominal=c,
        c_reported=level,
        mode=mode,
    )
