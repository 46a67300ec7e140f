"""
Segment Planner
Resource totals of the nested protocol, the Werner switcher threshold and its
optimized restriction, and M(L) sweeps with growth classification.
"""

import math
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from bell_state import DomainError, robustness_from_fidelity, werner_state_from_fidelity
from purify import (
    PurificationImpossible,
    effective_log2_pairs,
    purify_to_target,
    qnd_pair_ratio,
    qnd_pairs_bound,
    qnd_purify_closed,
)
from repeater_config import (
    GROWTH_MIN_POINTS,
    GROWTH_THRESHOLD,
    GROWTH_WINDOW,
    ONPP_MIN_FIDELITY,
    SWEEP_WORKERS,
)
from swap import ChainConvention, chain_robustness, chain_werner_fidelity

logger = logging.getLogger(__name__)

LN3 = math.log(3.0)


class Model(Enum):
    """Noise model of the elementary pairs"""
    QND = "qnd"
    WERNER = "werner"

    @classmethod
    def parse(cls, value: Union["Model", str]) -> "Model":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"Unknown model {value!r} (choose qnd or werner)")


class GrowthClass(Enum):
    EXPONENTIAL = "exponential"
    SUPER_EXPONENTIAL = "super_exponential"
    DIVERGED = "diverged"


class ClassificationUnavailable(ValueError):
    """Too few converged sweep points to classify growth"""


def _check_working_fidelity(working_b1: float, allow_one: bool = False) -> float:
    working_b1 = float(working_b1)
    upper_ok = working_b1 <= 1.0 if allow_one else working_b1 < 1.0
    if math.isnan(working_b1) or working_b1 <= 0.5 or not upper_ok:
        bound = "(1/2, 1]" if allow_one else "(1/2, 1)"
        raise DomainError(f"Working fidelity must lie in {bound}, got {working_b1!r}")
    return working_b1


def _check_count(name: str, value, minimum: int) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return value


# ============================================================================
# RESOURCES AND THRESHOLDS
# ============================================================================

def log_total_resources(N: int, L: int, M: int) -> float:
    """Natural log of N^(log_{L+1}(M) + 1)"""
    N = _check_count("Segment count N", N, 1)
    L = _check_count("Switcher count L", L, 1)
    M = _check_count("Pair count M", M, 1)
    return (math.log(M) / math.log(L + 1) + 1.0) * math.log(N)


def total_resources(N: int, L: int, M: int) -> float:
    """
    Elementary pairs consumed by the nested protocol over N segments.

    Computed in log space; a total beyond the float range is returned as inf.
    """
    log_total = log_total_resources(N, L, M)
    if M == 1:
        return float(N)
    try:
        return math.exp(log_total)
    except OverflowError:
        return math.inf


def elementary_pairs(L: int, M: int) -> int:
    """Elementary pairs per segment and nesting level, M * (L + 1)"""
    L = _check_count("Switcher count L", L, 0)
    M = _check_count("Pair count M", M, 1)
    return M * (L + 1)


def l_max_werner(working_b1: float) -> float:
    """
    Largest real L for which a Werner chain stays above fidelity 1/2.

    Args:
        working_b1: elementary-pair fidelity in (1/2, 1]

    Returns:
        float: ln 3 / (ln 3 - ln(4*B1 - 1)), inf for perfect pairs
    """
    working_b1 = _check_working_fidelity(working_b1, allow_one=True)
    denominator = LN3 - math.log(4.0 * working_b1 - 1.0)
    if denominator <= 0.0:
        return math.inf
    return LN3 / denominator


def onpp_restriction(working_b1: float) -> float:
    """Half of l_max_werner; only meaningful for B1 > 0.95"""
    working_b1 = float(working_b1)
    if not ONPP_MIN_FIDELITY < working_b1 < 1.0:
        raise DomainError(
            f"Switcher restriction holds only for working fidelity in "
            f"({ONPP_MIN_FIDELITY}, 1), got {working_b1!r}"
        )
    return l_max_werner(working_b1) / 2.0


def _largest_l_below(bound: float) -> int:
    return max(1, math.ceil(bound) - 1)


def onpp_switchers(working_b1: float) -> int:
    """Largest integer switcher count strictly below the restriction (at least 1)"""
    return _largest_l_below(onpp_restriction(working_b1))


# ============================================================================
# SWEEPS
# ============================================================================

@dataclass(frozen=True)
class SweepPoint:
    """One L of a sweep. m, M and log2_pairs are None when the point did not converge."""

    L: int
    chain_b1: float
    m: Optional[int]
    M: Optional[int]
    converged: bool
    growth_class: Optional[GrowthClass] = None  # classification of the curve up to this L
    pairs_bound: Optional[int] = None           # QND only
    log2_pairs: Optional[float] = None


@dataclass(frozen=True)
class SweepCurve:
    """
    Sweep points in strictly increasing L.

    M is expected to be non-decreasing over the converged points; a decrease
    is logged as a warning, not raised, and the points are kept as given.
    """

    model: Model
    working_fidelity: float
    convention: ChainConvention
    points: Tuple[SweepPoint, ...]
    input_name: str = "b1"
    input_value: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if self.input_value is None:
            object.__setattr__(self, "input_value", self.working_fidelity)
        ls = [point.L for point in self.points]
        if any(b <= a for a, b in zip(ls, ls[1:])):
            raise DomainError(f"Sweep L values must be strictly increasing, got {ls}")
        pairs = [point.M for point in self.points if point.converged]
        if any(b < a for a, b in zip(pairs, pairs[1:])):
            logger.warning(f"⚠️ M decreases along the {self.model.value} sweep: {pairs}")

    @property
    def converged_points(self) -> List[SweepPoint]:
        return [point for point in self.points if point.converged]

    def prefix(self, L: int) -> "SweepCurve":
        """Curve truncated after switcher count L"""
        return replace(self, points=tuple(p for p in self.points if p.L <= L))


def _qnd_point(working_b1: float, L: int, conv: ChainConvention) -> SweepPoint:
    R = robustness_from_fidelity(working_b1)
    long_R = chain_robustness(R, L, conv)
    bound = None
    log2_pairs = 0.0
    try:
        m = qnd_purify_closed(long_R, R)
        if R.r_param < 1.0:
            bound = qnd_pairs_bound(R, L, conv)
            log2_pairs = math.log2(qnd_pair_ratio(R, L, conv))
    except PurificationImpossible as e:
        logger.debug(f"⚠️ QND L={L}: {e}")
        return SweepPoint(L=L, chain_b1=long_R.fidelity, m=None, M=None, converged=False)

    return SweepPoint(
        L=L,
        chain_b1=long_R.fidelity,
        m=m,
        M=2 ** m,
        converged=True,
        pairs_bound=bound,
        log2_pairs=log2_pairs,
    )


def _werner_point(working_b1: float, L: int, conv: ChainConvention) -> SweepPoint:
    chain_b1 = chain_werner_fidelity(working_b1, L, conv)
    if chain_b1 >= working_b1:
        return SweepPoint(L=L, chain_b1=chain_b1, m=0, M=1, converged=True, log2_pairs=0.0)

    result = purify_to_target(werner_state_from_fidelity(chain_b1), working_b1)
    if not result.converged:
        logger.debug(f"⚠️ Werner L={L}: chain b1={chain_b1:.6f} does not purify to {working_b1}")
        return SweepPoint(L=L, chain_b1=chain_b1, m=None, M=None, converged=False)
    return SweepPoint(
        L=L,
        chain_b1=chain_b1,
        m=result.rounds_m,
        M=result.pairs_M,
        converged=True,
        log2_pairs=effective_log2_pairs(result, working_b1),
    )


def sweep_m_of_l(
    model: Union[Model, str],
    working_b1: float,
    l_range: Iterable[int],
    conv: Union[ChainConvention, str, None] = None,
    workers: int = SWEEP_WORKERS,
    input_name: str = "b1",
    input_value: Optional[float] = None,
) -> SweepCurve:
    """
    Pairs per segment M = 2^m needed to restore working_b1 after L switchers.

    Points are evaluated concurrently and returned in L order; points that
    cannot be purified back are flagged, never dropped. Each point carries
    the growth class of the curve up to and including it.
    """
    model = Model.parse(model)
    conv = ChainConvention.parse(conv)
    working_b1 = _check_working_fidelity(working_b1, allow_one=True)
    l_values = [int(L) for L in l_range]
    if not l_values:
        raise DomainError("L range is empty")
    if any(b <= a for a, b in zip(l_values, l_values[1:])):
        raise DomainError(f"L range must be strictly increasing, got {l_values}")

    evaluate = _qnd_point if model is Model.QND else _werner_point
    logger.info(
        f"📊 Sweeping {model.value} B1={working_b1} over L={l_values[0]}..{l_values[-1]} "
        f"({len(l_values)} points, {conv.value} convention)"
    )
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        points = list(executor.map(lambda L: evaluate(working_b1, L, conv), l_values))

    tracker = _GrowthTracker()
    classified = [replace(point, growth_class=tracker.push(point)) for point in points]

    curve = SweepCurve(
        model=model,
        working_fidelity=working_b1,
        convention=conv,
        points=tuple(classified),
        input_name=input_name,
        input_value=input_value,
    )
    failed = len(points) - len(curve.converged_points)
    if failed:
        logger.warning(f"⚠️ {failed} of {len(points)} points did not converge")
    logger.info(f"✅ Sweep finished, last converged L={last_converged_l(curve)}")
    return curve


# ============================================================================
# GROWTH CLASSIFICATION
# ============================================================================

def _second_differences(xs: Sequence[float], ys: Sequence[float]) -> List[float]:
    """Divided second differences, equal to y[i+1] - 2 y[i] + y[i-1] on a unit grid"""
    out = []
    for i in range(1, len(xs) - 1):
        left = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])
        right = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
        out.append(2.0 * (right - left) / (xs[i + 1] - xs[i - 1]))
    return out


class _GrowthTracker:
    """Running classification: only the last GROWTH_WINDOW converged points are kept."""

    def __init__(self):
        self.tail = deque(maxlen=GROWTH_WINDOW)
        self.converged = 0
        self.diverged = False

    def push(self, point: SweepPoint) -> Optional[GrowthClass]:
        self.diverged = not point.converged
        if point.converged:
            self.tail.append(point)
            self.converged += 1
        return self.current()

    def current(self) -> Optional[GrowthClass]:
        if self.diverged:
            return GrowthClass.DIVERGED
        if self.converged < GROWTH_MIN_POINTS:
            return None
        xs = [p.L for p in self.tail]
        ys = [p.log2_pairs for p in self.tail]
        curvature = float(np.mean(_second_differences(xs, ys)))
        if curvature > GROWTH_THRESHOLD:
            return GrowthClass.SUPER_EXPONENTIAL
        return GrowthClass.EXPONENTIAL


def _classify_points(points: Sequence[SweepPoint]) -> Optional[GrowthClass]:
    tracker = _GrowthTracker()
    for point in points:
        tracker.push(point)
    return tracker.current()


def classify_growth(curve: SweepCurve) -> GrowthClass:
    """
    Growth regime of log2 M over the tail of the curve.

    Diverged when the last point failed to converge; otherwise the mean
    second difference of log2 M over the last GROWTH_WINDOW converged points
    decides: above GROWTH_THRESHOLD is super-exponential, anything else
    (including negative curvature) exponential.

    Raises:
        ClassificationUnavailable: fewer than GROWTH_MIN_POINTS converged points
    """
    growth = _classify_points(curve.points)
    if growth is None:
        raise ClassificationUnavailable(
            f"Need at least {GROWTH_MIN_POINTS} converged points, got {len(curve.converged_points)}"
        )
    return growth


def fit_log_growth(curve: SweepCurve) -> float:
    """Least-squares slope of log2 M against L over the converged points"""
    converged = curve.converged_points
    if len(converged) < 2:
        raise ClassificationUnavailable("Need at least 2 converged points to fit a slope")
    xs = np.array([p.L for p in converged], dtype=np.float64)
    ys = np.array([p.log2_pairs for p in converged], dtype=np.float64)
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def last_converged_l(curve: SweepCurve) -> Optional[int]:
    converged = curve.converged_points
    return converged[-1].L if converged else None


# ============================================================================
# SEGMENT PLAN
# ============================================================================

@dataclass(frozen=True)
class SegmentPlan:
    """Switcher count, pair count and resource total for one repeater segment."""

    model: Model
    working_fidelity: float
    segments: int
    L: int
    M: Optional[int]
    growth_class: Optional[GrowthClass]
    l_max: float
    l_onpp: float
    total: Optional[float]
    within_validity: bool
    l_overridden: bool = False

    def __post_init__(self):
        if not math.isinf(self.l_max) and abs(self.l_onpp - self.l_max / 2.0) > 1e-12 * max(1.0, self.l_max):
            raise DomainError(f"l_onpp={self.l_onpp} must be half of l_max={self.l_max}")
        if self.growth_class is not GrowthClass.DIVERGED and (self.M is None or self.M < 1):
            raise DomainError(f"A converged plan needs M >= 1, got {self.M}")

    @property
    def elementary_pairs(self) -> Optional[int]:
        return None if self.M is None else elementary_pairs(self.L, self.M)


def plan_segment(
    N: int,
    working_b1: float,
    model: Union[Model, str] = Model.WERNER,
    conv: Union[ChainConvention, str, None] = None,
    L: Optional[int] = None,
) -> SegmentPlan:
    """
    Plan one segment: restricted switcher count (or the given L), the pair
    count M at that L and the total resources over N segments.

    Outside B1 > 0.95 the restriction is still evaluated as l_max / 2 but the
    plan is flagged and a warning logged.
    """
    N = _check_count("Segment count N", N, 1)
    model = Model.parse(model)
    working_b1 = _check_working_fidelity(working_b1)

    l_max = l_max_werner(working_b1)
    within_validity = working_b1 > ONPP_MIN_FIDELITY
    if within_validity:
        l_onpp = onpp_restriction(working_b1)
    else:
        logger.warning(
            f"⚠️ Working fidelity {working_b1} <= {ONPP_MIN_FIDELITY}: "
            f"switcher restriction is outside its validity range"
        )
        l_onpp = l_max / 2.0

    overridden = L is not None
    L = _check_count("Switcher count L", L, 1) if overridden else _largest_l_below(l_onpp)

    # every L below a converged point converges too, so the tail of the sweep
    # classifies the same as the full 1..L sweep
    span = max(GROWTH_WINDOW, GROWTH_MIN_POINTS)
    curve = sweep_m_of_l(model, working_b1, range(max(1, L - span + 1), L + 1), conv)
    point = curve.points[-1]
    total = total_resources(N, L, point.M) if point.converged else None

    plan = SegmentPlan(
        model=model,
        working_fidelity=working_b1,
        segments=N,
        L=L,
        M=point.M,
        growth_class=point.growth_class,
        l_max=l_max,
        l_onpp=l_onpp,
        total=total,
        within_validity=within_validity,
        l_overridden=overridden,
    )
    logger.info(f"✅ Plan: L={plan.L}, M={plan.M}, total={plan.total}")
    return plan
