"""
Entanglement Swapping
Fidelity map of one switcher (Bell measurement on the middle qubits of two
neighbouring pairs) and its composition along a chain of switchers.
"""

import logging
from enum import Enum
from functools import reduce
from typing import Iterable, Union

import numpy as np

from bell_state import (
    BellDiagonal,
    DomainError,
    Robustness,
    RobustnessLike,
    StateLike,
    as_bell_diagonal,
    as_robustness,
)
from repeater_config import DEFAULT_CONVENTION

logger = logging.getLogger(__name__)


class ChainConvention(Enum):
    """How many elementary pairs L switchers merge"""
    PAPER_L = "paper"                      # R' = R^L, reproduces the published curves
    STRICT_CHAIN_L_PLUS_1 = "strict"       # L switchers join L+1 pairs

    @classmethod
    def parse(cls, value: Union["ChainConvention", str, None]) -> "ChainConvention":
        if value is None:
            value = DEFAULT_CONVENTION
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(c.value for c in cls)
            raise DomainError(f"Unknown chain convention {value!r} (choose {choices})")


def chain_exponent(L: int, conv: Union[ChainConvention, str, None] = None) -> int:
    """
    Number of identical pairs folded together for L switchers.

    Args:
        L: switcher count
        conv: chain convention (default from configuration)

    Returns:
        int: L under the paper convention, L+1 under the strict one
    """
    conv = ChainConvention.parse(conv)
    if isinstance(L, bool) or int(L) != L:
        raise DomainError(f"Switcher count must be an integer, got {L!r}")
    L = int(L)
    if conv is ChainConvention.PAPER_L:
        if L < 1:
            raise DomainError(f"Paper convention needs L >= 1 switchers, got {L}")
        return L
    if L < 0:
        raise DomainError(f"Switcher count must be non-negative, got {L}")
    return L + 1


def bell_transfer_matrix(state: StateLike) -> np.ndarray:
    """
    Matrix T(a) with swap_pair(a, b) = T(a) @ b.

    Rows/columns follow the Bell labels [I, Z, X, XZ]; composing two Pauli
    errors XORs their labels, so T(a) is the group-convolution matrix of a.
    """
    a1, a2, a3, a4 = as_bell_diagonal(state)
    return np.array(
        [
            [a1, a2, a3, a4],
            [a2, a1, a4, a3],
            [a3, a4, a1, a2],
            [a4, a3, a2, a1],
        ],
        dtype=np.float64,
    )


def swap_pair(a: StateLike, b: StateLike) -> BellDiagonal:
    """Swap pair (i, i+1) with pair (i+1, i+2) and return pair (i, i+2)"""
    b = as_bell_diagonal(b)
    return BellDiagonal.from_sequence(bell_transfer_matrix(a) @ b.as_array())


def swap_qnd(a: RobustnessLike, b: RobustnessLike) -> Robustness:
    """Robustness composes multiplicatively under swapping"""
    return Robustness(as_robustness(a).r_param * as_robustness(b).r_param)


def chain_robustness(R: RobustnessLike, L: int, conv: Union[ChainConvention, str, None] = None) -> Robustness:
    """Outgoing robustness R^E of a chain of QND pairs"""
    exponent = chain_exponent(L, conv)
    return Robustness(as_robustness(R).r_param ** exponent)


def chain_werner_fidelity(B1: float, L: int, conv: Union[ChainConvention, str, None] = None) -> float:
    """
    Fidelity 3/4 * p^E + 1/4 of the long-distance Werner state, p = (4*B1 - 1)/3.

    Evaluated as 1/4 + (B1 - 1/4) * p^(E-1), which returns B1 bit-exact for E = 1.
    """
    B1 = float(B1)
    if not 0.25 <= B1 <= 1.0:
        raise DomainError(f"Werner fidelity must lie in [1/4, 1], got {B1!r}")
    exponent = chain_exponent(L, conv)
    p = (4.0 * B1 - 1.0) / 3.0
    return 0.25 + (B1 - 0.25) * p ** (exponent - 1)


def swap_links(states: Iterable[StateLike]) -> BellDiagonal:
    """Left fold of swap_pair over per-link states, nearest link first"""
    states = [as_bell_diagonal(s) for s in states]
    if not states:
        raise DomainError("A chain needs at least one elementary pair")
    return reduce(swap_pair, states)


def swap_chain(state: StateLike, L: int, conv: Union[ChainConvention, str, None] = None) -> BellDiagonal:
    """Swap E identical copies of state along the chain (exact left fold)"""
    state = as_bell_diagonal(state)
    exponent = chain_exponent(L, conv)
    result = state
    for _ in range(exponent - 1):
        result = swap_pair(result, state)
    logger.debug(f"🔗 Swapped {exponent} pairs: b1 {state.b1:.6f} -> {result.b1:.6f}")
    return result
