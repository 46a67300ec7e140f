"""
Deutsch Purification
Two-pair purification map (local rotations, bilateral C-NOT, coincidence
post-selection), its symmetric iteration to a working fidelity, and the
closed forms for QND-dephased chains where the rapidity doubles each round.
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from bell_state import (
    BellDiagonal,
    DomainError,
    Robustness,
    RobustnessLike,
    StateLike,
    as_bell_diagonal,
    as_robustness,
)
from repeater_config import MAX_PURIFICATION_ROUNDS, RAPIDITY_RTOL
from swap import ChainConvention, chain_exponent

logger = logging.getLogger(__name__)

# Rounds without a new best fidelity before the iteration is declared stalled
STALL_ROUNDS = 8


class PurificationImpossible(ValueError):
    """No purification round can succeed (zero normalization or zero robustness)"""


@dataclass(frozen=True)
class PurificationResult:
    """Outcome of symmetric purification from 2^m identical input pairs."""

    rounds_m: int
    pairs_M: int
    final_state: BellDiagonal
    converged: bool
    success_probs: Tuple[float, ...] = ()
    # b1 before the first round and after every round
    fidelity_history: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.rounds_m < 0:
            raise DomainError(f"rounds_m must be >= 0, got {self.rounds_m}")
        if self.pairs_M != 2 ** self.rounds_m:
            raise DomainError(f"pairs_M={self.pairs_M} must equal 2^{self.rounds_m}")

    @property
    def overall_success_prob(self) -> float:
        """Probability that every round of the tree post-selects successfully"""
        total = 1.0
        for depth, prob in enumerate(self.success_probs):
            # round k runs 2^(m-k-1) times in parallel
            total *= prob ** (2 ** (self.rounds_m - depth - 1))
        return total


def deutsch_step(a: StateLike, b: StateLike) -> Tuple[BellDiagonal, float]:
    """
    One purification round on two pairs.

    Args:
        a: control pair
        b: target pair (measured and discarded)

    Returns:
        (state, N): the kept pair given coincidence, and the coincidence
        probability N = (a1+a4)(b1+b4) + (a2+a3)(b2+b3)
    """
    a = as_bell_diagonal(a)
    b = as_bell_diagonal(b)
    a1, a2, a3, a4 = a
    b1, b2, b3, b4 = b
    norm = (a1 + a4) * (b1 + b4) + (a2 + a3) * (b2 + b3)
    if norm <= 0.0:
        raise PurificationImpossible(f"Coincidence probability is zero for {a} and {b}")
    state = BellDiagonal(
        (a1 * b1 + a4 * b4) / norm,
        (a1 * b4 + a4 * b1) / norm,
        (a2 * b2 + a3 * b3) / norm,
        (a2 * b3 + a3 * b2) / norm,
    )
    return state, norm


def purify_to_target(
    state: StateLike,
    target_b1: float,
    max_rounds: int = MAX_PURIFICATION_ROUNDS,
) -> PurificationResult:
    """
    Purify identical copies of state until b1 reaches target_b1.

    Each round pairs two copies of the current state. Non-convergence
    (b1 <= 1/2, a stall of STALL_ROUNDS rounds, or max_rounds) is reported
    in the result rather than raised.
    """
    state = as_bell_diagonal(state)
    target_b1 = float(target_b1)
    if not 0.5 < target_b1 < 1.0:
        raise DomainError(f"Target fidelity must lie in (1/2, 1), got {target_b1!r}")
    if max_rounds < 1:
        raise DomainError(f"max_rounds must be >= 1, got {max_rounds}")

    history = [state.b1]
    probs = []

    def _result(converged: bool) -> PurificationResult:
        rounds = len(probs)
        return PurificationResult(
            rounds_m=rounds,
            pairs_M=2 ** rounds,
            final_state=state,
            converged=converged,
            success_probs=tuple(probs),
            fidelity_history=tuple(history),
        )

    if state.b1 >= target_b1:
        return _result(True)
    if state.b1 <= 0.5:
        logger.debug(f"⚠️ b1={state.b1:.6f} <= 1/2, purification cannot converge")
        return _result(False)

    best = state.b1
    since_best = 0
    while len(probs) < max_rounds:
        state, norm = deutsch_step(state, state)
        probs.append(norm)
        history.append(state.b1)

        if state.b1 >= target_b1:
            return _result(True)
        if state.b1 <= 0.5:
            return _result(False)
        # b1 may dip for a round or two when b4 is large; only a stall counts
        if state.b1 > best:
            best = state.b1
            since_best = 0
        else:
            since_best += 1
            if since_best >= STALL_ROUNDS:
                logger.debug(f"⚠️ Purification stalled at b1={best:.6f} after {len(probs)} rounds")
                return _result(False)

    logger.debug(f"⚠️ Purification did not reach {target_b1} within {max_rounds} rounds")
    return _result(False)


def effective_log2_pairs(result: PurificationResult, target_b1: float) -> Optional[float]:
    """
    Continuous number of rounds: m - 1 plus the fraction of the last round,
    interpolated on log-infidelity. None when the result did not converge.
    """
    if not result.converged:
        return None
    m = result.rounds_m
    if m == 0:
        return 0.0
    eps_prev = 1.0 - result.fidelity_history[m - 1]
    eps_last = 1.0 - result.fidelity_history[m]
    eps_target = 1.0 - float(target_b1)
    if eps_last <= 0.0 or eps_target <= 0.0 or eps_prev <= eps_last:
        return float(m)
    fraction = math.log(eps_prev / eps_target) / math.log(eps_prev / eps_last)
    return (m - 1) + min(max(fraction, 0.0), 1.0)


# ============================================================================
# QND CLOSED FORMS
# ============================================================================

def qnd_pair_ratio(R: RobustnessLike, L: int, conv: Union[ChainConvention, str, None] = None) -> float:
    """Continuous pair multiplier arctanh(R) / arctanh(R^E)"""
    R = as_robustness(R).r_param
    if R <= 0.0:
        raise PurificationImpossible("Robustness R = 0: purification does not converge")
    if R >= 1.0:
        raise DomainError(f"Robustness R must lie in (0, 1), got {R!r}")
    long_R = R ** chain_exponent(L, conv)
    if long_R <= 0.0:
        raise PurificationImpossible(f"Chain robustness underflowed to zero for R={R!r}, L={L}")
    numerator = math.log1p(R) - math.log1p(-R)
    denominator = math.log1p(long_R) - math.log1p(-long_R)
    ratio = numerator / denominator
    if not math.isfinite(ratio):
        raise PurificationImpossible(f"Pair ratio overflows for R={R!r}, L={L}")
    return ratio


def qnd_pairs_bound(R: RobustnessLike, L: int, conv: Union[ChainConvention, str, None] = None) -> int:
    """
    Lower bound on the pair count M for a chain of QND pairs.

    Int(.) is floor; an exact integer ratio still gets the +1.
    """
    return int(math.floor(qnd_pair_ratio(R, L, conv))) + 1


def qnd_purify_closed(R_long: RobustnessLike, R_target: RobustnessLike) -> int:
    """Smallest m with tanh(2^m * arctanh(R_long)) >= R_target"""
    R_long = as_robustness(R_long)
    R_target = as_robustness(R_target)
    if R_long.r_param <= 0.0:
        raise PurificationImpossible("Long-distance robustness is zero: purification does not converge")
    if R_long.r_param >= R_target.r_param:
        return 0
    if R_target.r_param >= 1.0:
        raise DomainError("Target robustness R = 1 is never reached in finitely many rounds")

    r_long = R_long.rapidity
    r_target = R_target.rapidity * (1.0 - RAPIDITY_RTOL)
    m = 0
    while math.ldexp(r_long, m) < r_target:
        m += 1
    return m


def qnd_purified_robustness(R: RobustnessLike, m: int) -> Robustness:
    """Robustness after m symmetric rounds: tanh(2^m * arctanh(R))"""
    if m < 0:
        raise DomainError(f"Round count must be >= 0, got {m}")
    R = as_robustness(R)
    if R.r_param >= 1.0:
        return R
    return Robustness(math.tanh(math.ldexp(R.rapidity, m)))
