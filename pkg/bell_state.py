"""
Bell-Diagonal States
State types shared by the swapping, purification and planning modules:
Bell-diagonal fidelity vectors, Werner mixing parameter and QND robustness,
plus the entanglement / nonlocality diagnostics of a Werner pair.

Bell labels follow the Pauli error on the sender qubit:
B1 = |00>+|11> (I), B2 = |00>-|11> (Z), B3 = |01>+|10> (X), B4 = |01>-|10> (XZ).
"""

import math
import sys
import logging
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple, Union

import numpy as np

from repeater_config import PROB_TOLERANCE

logger = logging.getLogger(__name__)

# Sums this close to 1 are rounding noise and are left untouched
_SUM_EXACT_SLACK = 4 * sys.float_info.epsilon

SQRT2 = math.sqrt(2.0)


class DomainError(ValueError):
    """Parameter or state outside its physical domain"""


def _check_unit_interval(name: str, value: float, upper_open: bool = False) -> float:
    value = float(value)
    if math.isnan(value):
        raise DomainError(f"{name} must be a number, got NaN")
    if value < 0.0 or value > 1.0 or (upper_open and value >= 1.0):
        bound = "[0, 1)" if upper_open else "[0, 1]"
        raise DomainError(f"{name} must lie in {bound}, got {value!r}")
    return value


@dataclass(frozen=True)
class BellDiagonal:
    """Fidelities (b1, b2, b3, b4) of one pair with the four Bell states."""

    b1: float
    b2: float
    b3: float
    b4: float

    def __post_init__(self):
        values = [float(v) for v in (self.b1, self.b2, self.b3, self.b4)]
        for index, value in enumerate(values, 1):
            if math.isnan(value):
                raise DomainError(f"b{index} is NaN")
            if value < -PROB_TOLERANCE:
                raise DomainError(f"b{index} must be non-negative, got {value!r}")
        # rounding can leave a tiny negative weight
        values = [max(v, 0.0) for v in values]

        total = math.fsum(values)
        deviation = abs(total - 1.0)
        if deviation > PROB_TOLERANCE:
            raise DomainError(
                f"Bell-diagonal weights must sum to 1 (tolerance {PROB_TOLERANCE}), got {total!r}"
            )
        if deviation > _SUM_EXACT_SLACK:
            values = [v / total for v in values]

        for name, value in zip(("b1", "b2", "b3", "b4"), values):
            object.__setattr__(self, name, value)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "BellDiagonal":
        if len(values) != 4:
            raise DomainError(f"A Bell-diagonal state needs 4 weights, got {len(values)}")
        return cls(*values)

    @classmethod
    def perfect(cls) -> "BellDiagonal":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def maximally_mixed(cls) -> "BellDiagonal":
        return cls(0.25, 0.25, 0.25, 0.25)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.b1, self.b2, self.b3, self.b4)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=np.float64)

    def __iter__(self) -> Iterator[float]:
        return iter(self.as_tuple())

    @property
    def fidelity(self) -> float:
        return self.b1

    def is_werner(self, tol: float = PROB_TOLERANCE) -> bool:
        """True when b2 = b3 = b4 (isotropic noise)"""
        return abs(self.b2 - self.b3) <= tol and abs(self.b3 - self.b4) <= tol

    def is_qnd(self, tol: float = PROB_TOLERANCE) -> bool:
        """True for the dephased family (b, 1-b, 0, 0)"""
        return self.b3 <= tol and self.b4 <= tol


@dataclass(frozen=True)
class WernerParam:
    """Werner mixing parameter p of p|B1><B1| + (1-p)/4 * identity."""

    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", _check_unit_interval("Werner parameter p", self.p))

    @property
    def fidelity(self) -> float:
        return (3.0 * self.p + 1.0) / 4.0


@dataclass(frozen=True)
class Robustness:
    """
    QND robustness R and its rapidity r = arctanh(R).

    R = 1 is accepted as the noiseless limit (infinite rapidity); the
    state constructors below still require R < 1.
    """

    r_param: float

    def __post_init__(self):
        object.__setattr__(self, "r_param", _check_unit_interval("Robustness R", self.r_param))

    @classmethod
    def from_rapidity(cls, rapidity: float) -> "Robustness":
        if rapidity < 0:
            raise DomainError(f"Rapidity must be non-negative, got {rapidity!r}")
        return cls(math.tanh(rapidity))

    @property
    def rapidity(self) -> float:
        if self.r_param >= 1.0:
            return math.inf
        return math.atanh(self.r_param)

    @property
    def fidelity(self) -> float:
        return (1.0 + self.r_param) / 2.0


WernerLike = Union[WernerParam, float]
RobustnessLike = Union[Robustness, float]
StateLike = Union[BellDiagonal, Sequence[float]]


def as_werner(p: WernerLike) -> WernerParam:
    return p if isinstance(p, WernerParam) else WernerParam(p)


def as_robustness(R: RobustnessLike) -> Robustness:
    return R if isinstance(R, Robustness) else Robustness(R)


def as_bell_diagonal(state: StateLike) -> BellDiagonal:
    if isinstance(state, BellDiagonal):
        return state
    return BellDiagonal.from_sequence(list(state))


# ============================================================================
# CONVERSIONS
# ============================================================================

def from_werner(p: WernerLike) -> BellDiagonal:
    """Werner state (p + (1-p)/4, (1-p)/4, (1-p)/4, (1-p)/4)."""
    p = as_werner(p).p
    noise = (1.0 - p) / 4.0
    return BellDiagonal(p + noise, noise, noise, noise)


def to_werner(state: StateLike) -> WernerParam:
    """Werner parameter p = (4*b1 - 1)/3 of a state (its isotropic twirl)."""
    state = as_bell_diagonal(state)
    p = (4.0 * state.b1 - 1.0) / 3.0
    if -PROB_TOLERANCE <= p < 0.0:
        p = 0.0
    elif 1.0 < p <= 1.0 + PROB_TOLERANCE:
        p = 1.0
    if p < 0.0:
        raise DomainError(f"b1={state.b1!r} is below 1/4, no Werner parameter in [0, 1]")
    return WernerParam(p)


def werner_from_fidelity(b1: float) -> WernerParam:
    b1 = float(b1)
    if not 0.25 <= b1 <= 1.0:
        raise DomainError(f"Werner fidelity must lie in [1/4, 1], got {b1!r}")
    return WernerParam(min(max((4.0 * b1 - 1.0) / 3.0, 0.0), 1.0))


def werner_state_from_fidelity(b1: float) -> BellDiagonal:
    """Werner state with the given b1, keeping b1 bit-exact."""
    werner_from_fidelity(b1)
    noise = (1.0 - b1) / 3.0
    return BellDiagonal(b1, noise, noise, noise)


def from_robustness(R: RobustnessLike) -> BellDiagonal:
    """QND-dephased pair ((1+R)/2, (1-R)/2, 0, 0)."""
    R = as_robustness(R).r_param
    if R >= 1.0:
        raise DomainError(f"Robustness R must lie in [0, 1), got {R!r}")
    return BellDiagonal((1.0 + R) / 2.0, (1.0 - R) / 2.0, 0.0, 0.0)


def robustness_from_fidelity(b1: float) -> Robustness:
    b1 = float(b1)
    if not 0.5 <= b1 <= 1.0:
        raise DomainError(f"QND fidelity must lie in [1/2, 1], got {b1!r}")
    return Robustness(2.0 * b1 - 1.0)


def infidelity(state: StateLike) -> float:
    """1 - b1, summed from the small weights so it keeps full relative precision"""
    state = as_bell_diagonal(state)
    return math.fsum((state.b2, state.b3, state.b4))


def robustness_of(state: StateLike) -> Robustness:
    """
    Robustness R = 2*b1 - 1 of a QND pair or of its purified descendants
    (after a purification round the residual error sits in b3 instead of b2).
    """
    state = as_bell_diagonal(state)
    if state.b1 < 0.5:
        raise DomainError(f"b1={state.b1!r} < 1/2 has no robustness")
    return Robustness(min(max(1.0 - 2.0 * infidelity(state), 0.0), 1.0))


def rapidity_of(state: StateLike) -> float:
    """
    Rapidity arctanh(2*b1 - 1) = ln(b1 / (1 - b1)) / 2, evaluated from the
    infidelity so that pairs close to b1 = 1 keep their precision.
    """
    state = as_bell_diagonal(state)
    if state.b1 < 0.5:
        raise DomainError(f"b1={state.b1!r} < 1/2 has no rapidity")
    eps = infidelity(state)
    if eps <= 0.0:
        return math.inf
    return 0.5 * (math.log1p(-eps) - math.log(eps))


# ============================================================================
# DIAGNOSTICS
# ============================================================================

def entanglement_factor(p: WernerLike) -> float:
    """Lambda = (1 - 3p)/2, negative for entangled Werner states"""
    return (1.0 - 3.0 * as_werner(p).p) / 2.0


def bell_chsh_factor(p: WernerLike) -> float:
    """Maximal CHSH value 2*sqrt(2)*p of a Werner state"""
    return 2.0 * SQRT2 * as_werner(p).p


def is_entangled(p: WernerLike) -> bool:
    return entanglement_factor(p) < 0.0


def is_nonlocal(p: WernerLike) -> bool:
    return bell_chsh_factor(p) > 2.0


def is_purifiable(state: StateLike) -> bool:
    """Symmetric purification converges only above b1 = 1/2"""
    return as_bell_diagonal(state).b1 > 0.5
