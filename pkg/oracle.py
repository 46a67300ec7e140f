"""
Density-Matrix Oracle
Brute-force realisation of the physical protocols on dense complex matrices:
Bell basis, sender/receiver rotations, bilateral C-NOT with coincidence
post-selection, Bell-measurement swapping with Pauli corrections, the QND
monitoring channel and Werner depolarisation. Used to verify the closed-form
maps in swap.py and purify.py.

Qubit layout: within a pair the sender qubit comes first; for two pairs the
16-dim space is ordered (sender-a, receiver-a, sender-b, receiver-b).
Basis index of |q0 q1 ...> is big-endian.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from bell_state import BellDiagonal, DomainError, RobustnessLike, StateLike, as_bell_diagonal, as_robustness
from purify import deutsch_step
from repeater_config import HERMITIAN_TOLERANCE, PROB_TOLERANCE, PSD_TOLERANCE, VERIFY_TOLERANCE
from swap import swap_pair

logger = logging.getLogger(__name__)


class InvalidDensityMatrix(ValueError):
    """Matrix is not Hermitian, not unit-trace or not positive semidefinite"""


class PostSelectionImpossible(ValueError):
    """Coincidence outcome has zero probability"""


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated, read-only 4x4 (one pair) or 16x16 (two pairs) density matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (4, 16):
            raise InvalidDensityMatrix(f"Expected a 4x4 or 16x16 matrix, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOLERANCE:
            raise InvalidDensityMatrix("Density matrix is not Hermitian")
        trace = np.trace(rho)
        if abs(trace - 1.0) > PROB_TOLERANCE:
            raise InvalidDensityMatrix(f"Density matrix trace must be 1, got {trace}")
        min_eig = float(np.min(np.linalg.eigvalsh(rho)))
        if min_eig < -PSD_TOLERANCE:
            raise InvalidDensityMatrix(f"Density matrix has negative eigenvalue {min_eig:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def bell_fidelity(self, k: int) -> float:
        """<B_k| rho |B_k> for a single pair"""
        self._require_pair()
        vec = BELL_BASIS.vector(k)
        return float(np.real(vec.conj() @ self.matrix @ vec))

    def _require_pair(self):
        if self.dim != 4:
            raise InvalidDensityMatrix(f"Operation needs a two-qubit (4x4) state, got dim {self.dim}")


class BellBasis:
    """The four Bell vectors (|00>+|11>, |00>-|11>, |01>+|10>, |01>-|10>)/sqrt(2)."""

    def __init__(self):
        s = 1.0 / math.sqrt(2.0)
        self.vectors = np.array(
            [
                [s, 0, 0, s],
                [s, 0, 0, -s],
                [0, s, s, 0],
                [0, s, -s, 0],
            ],
            dtype=np.complex128,
        )
        gram = self.vectors.conj() @ self.vectors.T
        if np.max(np.abs(gram - np.eye(4))) > 1e-14:
            raise RuntimeError("Bell basis is not orthonormal")

    def vector(self, k: int) -> np.ndarray:
        if isinstance(k, bool) or k not in (1, 2, 3, 4):
            raise DomainError(f"Bell index must be 1..4, got {k!r}")
        return self.vectors[k - 1]


BELL_BASIS = BellBasis()

# ============================================================================
# GATES
# ============================================================================

I2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

# |0> -> (|0> - i|1>)/sqrt2, |1> -> (|1> - i|0>)/sqrt2 on the sender side,
# the conjugate rotation on the receiver side
SENDER_ROTATION = np.array([[1, -1j], [-1j, 1]], dtype=np.complex128) / math.sqrt(2.0)
RECEIVER_ROTATION = np.array([[1, 1j], [1j, 1]], dtype=np.complex128) / math.sqrt(2.0)

# Correction on the outer sender qubit after Bell outcome k maps outcome k back to B1
SWAP_CORRECTIONS = {1: I2, 2: PAULI_Z, 3: PAULI_X, 4: PAULI_X @ PAULI_Z}


def tensor(*ops: np.ndarray) -> np.ndarray:
    result = np.array([[1.0]], dtype=np.complex128)
    for op in ops:
        result = np.kron(result, op)
    return result


def cnot(control: int, target: int, n_qubits: int) -> np.ndarray:
    """C-NOT |a>_C |b>_T -> |a>_C |a xor b>_T as a permutation matrix"""
    dim = 2 ** n_qubits
    gate = np.zeros((dim, dim), dtype=np.complex128)
    for index in range(dim):
        bits = [(index >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
        if bits[control]:
            bits[target] ^= 1
        out = 0
        for bit in bits:
            out = (out << 1) | bit
        gate[out, index] = 1.0
    return gate


_ROTATIONS = tensor(SENDER_ROTATION, RECEIVER_ROTATION, SENDER_ROTATION, RECEIVER_ROTATION)
# pair a controls, pair b is the target on each side
_BILATERAL_CNOT = cnot(0, 2, 4) @ cnot(1, 3, 4)
_DEUTSCH_OPERATOR = _BILATERAL_CNOT @ _ROTATIONS

_KET0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
_KET1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)
_COINCIDENCE = tensor(I2, I2, _KET0, _KET0) + tensor(I2, I2, _KET1, _KET1)


def _hermitize(rho: np.ndarray) -> np.ndarray:
    return (rho + rho.conj().T) / 2.0


def _trace_out_pair_b(rho16: np.ndarray) -> np.ndarray:
    """Partial trace over qubits 2, 3 of a 16x16 matrix"""
    return np.einsum("ibjb->ij", rho16.reshape(4, 4, 4, 4))


def _trace_out_middle(rho16: np.ndarray) -> np.ndarray:
    """Partial trace over qubits 1, 2 of (A, B1, B2, C), returning the (A, C) state"""
    reduced = np.einsum("abcdebch->adeh", rho16.reshape((2,) * 8))
    return reduced.reshape(4, 4)


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return DensityMatrix(rho).matrix


# ============================================================================
# STATES AND CONVERSIONS
# ============================================================================

def bell_projector(k: int) -> DensityMatrix:
    """Rank-1 projector |B_k><B_k|"""
    vec = BELL_BASIS.vector(k)
    return DensityMatrix(np.outer(vec, vec.conj()))


def bell_diagonal_dm(state: StateLike) -> DensityMatrix:
    state = as_bell_diagonal(state)
    rho = sum(weight * bell_projector(k).matrix for k, weight in enumerate(state, 1))
    return DensityMatrix(rho)


def bell_diagonal_of(rho) -> BellDiagonal:
    """Diagonal of a pair state in the Bell basis (off-diagonals are dropped)"""
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    return BellDiagonal(*(rho.bell_fidelity(k) for k in (1, 2, 3, 4)))


def bell_coherences(rho) -> np.ndarray:
    """Full Bell-basis matrix B_kl of a pair state"""
    rho = _as_matrix(rho)
    basis = BELL_BASIS.vectors
    return basis.conj() @ rho @ basis.T


def werner_dm(p: float) -> DensityMatrix:
    """p |B1><B1| + (1-p)/4 * identity"""
    return depolarize_dm(bell_projector(1), p)


def depolarize_dm(rho, p: float) -> DensityMatrix:
    """Keep the pair with probability p, otherwise replace it by white noise"""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Depolarizing parameter must lie in [0, 1], got {p!r}")
    rho = _as_matrix(rho)
    dim = rho.shape[0]
    return DensityMatrix(p * rho + (1.0 - p) * np.eye(dim) / dim)


def random_bell_diagonal(rng: np.random.Generator) -> BellDiagonal:
    """Uniform sample from the probability simplex"""
    return BellDiagonal(*rng.dirichlet(np.ones(4)))


# ============================================================================
# PROTOCOLS
# ============================================================================

def deutsch_protocol_dm(rho_a, rho_b) -> Tuple[DensityMatrix, float]:
    """
    Full purification round on two pairs.

    Rotations on both sender and both receiver qubits, C-NOT on each side
    (pair a control, pair b target), keep the coinciding target outcomes
    00 and 11, trace pair b out.

    Returns:
        (control pair state, coincidence probability)
    """
    rho = tensor(_as_matrix(rho_a), _as_matrix(rho_b))
    rho = _DEUTSCH_OPERATOR @ rho @ _DEUTSCH_OPERATOR.conj().T
    rho = _COINCIDENCE @ rho @ _COINCIDENCE
    prob = float(np.real(np.trace(rho)))
    if prob <= PROB_TOLERANCE:
        raise PostSelectionImpossible("Target outcomes never coincide for these pairs")
    kept = _trace_out_pair_b(rho) / prob
    return DensityMatrix(_hermitize(kept)), prob


# Bell projectors on (B1, B2) inside the (A, B1, B2, C) space
_MIDDLE_BELL_PROJECTORS = {k: tensor(I2, bell_projector(k).matrix, I2) for k in (1, 2, 3, 4)}


def swap_dm(rho_ab, rho_bc) -> DensityMatrix:
    """
    Entanglement swapping over qubits (A, B1, B2, C): Bell measurement on
    (B1, B2), outcome-dependent Pauli correction on A, branches mixed with
    their probabilities.
    """
    rho = tensor(_as_matrix(rho_ab), _as_matrix(rho_bc))
    out = np.zeros((4, 4), dtype=np.complex128)
    for k, correction in SWAP_CORRECTIONS.items():
        projector = _MIDDLE_BELL_PROJECTORS[k]
        branch = _trace_out_middle(projector @ rho @ projector)
        fix = tensor(correction, I2)
        out += fix @ branch @ fix.conj().T
    return DensityMatrix(_hermitize(out))


def qnd_channel_dm(rho, R: RobustnessLike) -> DensityMatrix:
    """
    QND monitoring of |00>, |11>: the environment qubit stays |0> except on
    |11>, where it becomes R|0> + sqrt(1-R^2)|1>; the environment is traced out.
    |01>, |10> leave the environment untouched.
    """
    R = as_robustness(R).r_param
    k0 = np.diag([1.0, 1.0, 1.0, R]).astype(np.complex128)
    k1 = np.diag([0.0, 0.0, 0.0, math.sqrt(max(1.0 - R * R, 0.0))]).astype(np.complex128)
    rho = _as_matrix(rho)
    out = k0 @ rho @ k0.conj().T + k1 @ rho @ k1.conj().T
    return DensityMatrix(_hermitize(out))


# ============================================================================
# EQUIVALENCE SUITE
# ============================================================================

@dataclass
class OracleReport:
    """Worst deviations between the oracle and the closed-form maps"""

    trials: int
    seed: int
    tolerance: float
    max_swap_deviation: float = 0.0
    max_purify_deviation: float = 0.0
    max_prob_deviation: float = 0.0
    failures: List[Dict] = field(default_factory=list)

    @property
    def max_deviation(self) -> float:
        return max(self.max_swap_deviation, self.max_purify_deviation, self.max_prob_deviation)

    @property
    def passed(self) -> bool:
        return not self.failures


def run_equivalence_suite(trials: int, seed: int, tolerance: Optional[float] = None) -> OracleReport:
    """
    Compare swap_dm / deutsch_protocol_dm with swap_pair / deutsch_step on
    seeded random Bell-diagonal pairs.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    tolerance = VERIFY_TOLERANCE if tolerance is None else tolerance
    rng = np.random.default_rng(seed)
    report = OracleReport(trials=trials, seed=seed, tolerance=tolerance)

    for trial in range(trials):
        a = random_bell_diagonal(rng)
        b = random_bell_diagonal(rng)
        rho_a = bell_diagonal_dm(a)
        rho_b = bell_diagonal_dm(b)

        swapped = bell_diagonal_of(swap_dm(rho_a, rho_b)).as_array()
        swap_dev = float(np.max(np.abs(swapped - swap_pair(a, b).as_array())))

        kept, prob = deutsch_protocol_dm(rho_a, rho_b)
        fast_state, fast_prob = deutsch_step(a, b)
        purify_dev = float(np.max(np.abs(bell_diagonal_of(kept).as_array() - fast_state.as_array())))
        prob_dev = abs(prob - fast_prob)

        report.max_swap_deviation = max(report.max_swap_deviation, swap_dev)
        report.max_purify_deviation = max(report.max_purify_deviation, purify_dev)
        report.max_prob_deviation = max(report.max_prob_deviation, prob_dev)

        worst = max(swap_dev, purify_dev, prob_dev)
        if worst > tolerance:
            report.failures.append({"trial": trial, "a": a.as_tuple(), "b": b.as_tuple(), "deviation": worst})
            logger.warning(f"❌ Trial {trial}: deviation {worst:.3e} for a={a.as_tuple()} b={b.as_tuple()}")

    logger.info(f"📊 Oracle suite: {trials} trials, max deviation {report.max_deviation:.3e}")
    return report
