"""Two-qubit states, projective spin measurements and Born-rule tables.

Outcome index 0 is spin +1, index 1 is spin -1.  Measurement directions are
real Bloch vectors; :meth:`BlochSetting.from_angle` places them in the x-z
plane at a polar angle from the z axis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, EnsembleMismatch, InvalidState, OutcomeArityError
from .prob import HVModel, Phenomenon, Scenario

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
I2 = np.eye(2, dtype=complex)
SIGN = (1, -1)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGEN_FLOOR = -1e-10
ENSEMBLE_TOL = 1e-10


class TwoQubitState:
    """Density operator in the basis |00>, |01>, |10>, |11>."""

    __slots__ = ("rho",)

    def __init__(self, rho):
        rho = np.array(rho, dtype=complex)
        if rho.shape != (4, 4):
            raise InvalidState(f"density matrix must be 4x4, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            raise InvalidState(f"trace {np.trace(rho).real} != 1")
        if np.linalg.eigvalsh(rho).min() < EIGEN_FLOOR:
            raise InvalidState("density matrix is not positive semidefinite")
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)

    def __setattr__(self, name, value):
        raise AttributeError("TwoQubitState is immutable")

    @classmethod
    def from_vector(cls, psi) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)


@dataclass(frozen=True)
class BlochSetting:
    vector: tuple[float, float, float]

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        if v.shape != (3,) or abs(np.linalg.norm(v) - 1) > 1e-12:
            raise DomainError(f"measurement direction must be a unit 3-vector, got {self.vector}")
        object.__setattr__(self, "vector", tuple(float(x) for x in v))

    @classmethod
    def from_angle(cls, theta: float) -> "BlochSetting":
        return cls((float(np.sin(theta)), 0.0, float(np.cos(theta))))

    @classmethod
    def from_spherical(cls, theta: float, phi: float) -> "BlochSetting":
        return cls((
            float(np.sin(theta) * np.cos(phi)),
            float(np.sin(theta) * np.sin(phi)),
            float(np.cos(theta)),
        ))

    def projector(self, outcome: int) -> np.ndarray:
        n_sigma = sum(c * s for c, s in zip(self.vector, PAULI))
        return (I2 + SIGN[outcome] * n_sigma) / 2


def _as_settings(dirs) -> list[BlochSetting]:
    return [d if isinstance(d, BlochSetting) else BlochSetting.from_angle(float(d)) for d in dirs]


# -- named states ---------------------------------------------------------------

_S = 1 / np.sqrt(2)
SINGLET_VECTOR = np.array([0, _S, -_S, 0], dtype=complex)
BELL_VECTORS = {
    "phi_plus": np.array([_S, 0, 0, _S], dtype=complex),
    "phi_minus": np.array([_S, 0, 0, -_S], dtype=complex),
    "psi_plus": np.array([0, _S, _S, 0], dtype=complex),
    "psi_minus": SINGLET_VECTOR,
}


def singlet() -> TwoQubitState:
    return TwoQubitState.from_vector(SINGLET_VECTOR)


def maximally_mixed() -> TwoQubitState:
    return TwoQubitState(np.eye(4, dtype=complex) / 4)


def werner(visibility: float) -> TwoQubitState:
    """``v * singlet + (1 - v) * I/4``."""
    v = float(visibility)
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {visibility}")
    return TwoQubitState(v * singlet().rho + (1 - v) * np.eye(4) / 4)


# -- Born rule ----------------------------------------------------------------------


def born_phenomenon(state: TwoQubitState, alice_dirs: Sequence, bob_dirs: Sequence,
                    preparation_label: str = "c") -> Phenomenon:
    """``f(A,B|a,b) = tr[rho (P_A^a (x) P_B^b)]`` for spin projectors."""
    if not isinstance(state, TwoQubitState):
        raise InvalidState("expected a TwoQubitState")
    alice, bob = _as_settings(alice_dirs), _as_settings(bob_dirs)
    if not alice or not bob:
        raise DomainError("direction lists must be non-empty")
    table = np.empty((len(alice), len(bob), 2, 2))
    for (a, sa), (b, sb) in itertools.product(enumerate(alice), enumerate(bob)):
        for A, B in itertools.product(range(2), range(2)):
            op = np.kron(sa.projector(A), sb.projector(B))
            table[a, b, A, B] = np.trace(state.rho @ op).real
    # Born values are nonnegative; clip rounding residue of order 1e-17.
    table = np.clip(table, 0.0, 1.0)
    return Phenomenon(Scenario(len(alice), len(bob), 2, 2, preparation_label), table)


def correlator(phenomenon: Phenomenon, a: int, b: int):
    """``E(a,b) = sum A*B*f(A,B|a,b)`` with outcome 0 read as +1."""
    sc = phenomenon.scenario
    if sc.n_outcomes_alice != 2 or sc.n_outcomes_bob != 2:
        raise OutcomeArityError("correlators need two outcomes per side")
    t = phenomenon.table[a, b]
    return t[0, 0] - t[0, 1] - t[1, 0] + t[1, 1]


def chsh_value(phenomenon: Phenomenon, a1: int, a2: int, b1: int, b2: int):
    return (
        correlator(phenomenon, a1, b1)
        + correlator(phenomenon, a1, b2)
        + correlator(phenomenon, a2, b1)
        - correlator(phenomenon, a2, b2)
    )


def chsh_table(phenomenon: Phenomenon) -> list[tuple[tuple[int, int, int, int], object]]:
    """CHSH value for every ordered quadruple with ``a1 != a2`` and ``b1 != b2``."""
    sc = phenomenon.scenario
    rows = []
    for a1, a2 in itertools.permutations(range(sc.n_settings_alice), 2):
        for b1, b2 in itertools.permutations(range(sc.n_settings_bob), 2):
            rows.append(((a1, a2, b1, b2), chsh_value(phenomenon, a1, a2, b1, b2)))
    return rows


def max_abs_chsh(phenomenon: Phenomenon):
    rows = chsh_table(phenomenon)
    if not rows:
        raise OutcomeArityError("CHSH needs at least two settings per side")
    return max(abs(v) for _, v in rows)


TSIRELSON_ALICE = (0.0, np.pi / 2)
TSIRELSON_BOB = (np.pi / 4, 3 * np.pi / 4)


def tsirelson_phenomenon(state: TwoQubitState | None = None) -> Phenomenon:
    return born_phenomenon(state or singlet(), TSIRELSON_ALICE, TSIRELSON_BOB)


# -- pure-state ensembles ---------------------------------------------------------


class PureEnsemble:
    """Weighted pure states whose projector mixture equals ``state``."""

    __slots__ = ("weights", "vectors", "state")

    def __init__(self, weights, vectors, state: TwoQubitState | None = None):
        weights = np.array([float(w) for w in weights])
        vectors = [np.asarray(v, dtype=complex) for v in vectors]
        if len(weights) != len(vectors) or len(weights) == 0:
            raise EnsembleMismatch("need one weight per state vector")
        if np.any(weights < 0) or abs(weights.sum() - 1) > ENSEMBLE_TOL:
            raise EnsembleMismatch("weights must be a probability vector")
        for v in vectors:
            if v.shape != (4,) or abs(np.linalg.norm(v) - 1) > ENSEMBLE_TOL:
                raise EnsembleMismatch("each member must be a normalized 4-vector")
        mixture = sum(w * np.outer(v, v.conj()) for w, v in zip(weights, vectors))
        if state is None:
            state = TwoQubitState(mixture)
        elif np.max(np.abs(mixture - state.rho)) > ENSEMBLE_TOL:
            raise EnsembleMismatch("weighted projectors do not reproduce the stated mixture")
        object.__setattr__(self, "weights", tuple(weights))
        object.__setattr__(self, "vectors", tuple(vectors))
        object.__setattr__(self, "state", state)

    def __setattr__(self, name, value):
        raise AttributeError("PureEnsemble is immutable")

    def __len__(self):
        return len(self.weights)


def werner_bell_ensemble(visibility: float) -> PureEnsemble:
    """Werner state as singlet (weight v) plus the four Bell states at (1-v)/4 each."""
    v = float(visibility)
    weights = [v] + [(1 - v) / 4] * 4
    vectors = [SINGLET_VECTOR] + list(BELL_VECTORS.values())
    return PureEnsemble(weights, vectors, werner(v))


def pure_ensemble_model(ensemble: PureEnsemble, alice_dirs, bob_dirs) -> HVModel:
    """Hidden-variable model whose lambda labels ensemble members."""
    tables = [
        born_phenomenon(TwoQubitState.from_vector(v), alice_dirs, bob_dirs).table
        for v in ensemble.vectors
    ]
    scenario = Scenario(len(alice_dirs), len(bob_dirs), 2, 2)
    return HVModel(scenario, list(ensemble.weights), np.stack(tables))


def random_state(rng: np.random.Generator, rank: int | None = None) -> TwoQubitState:
    """Random density matrix from a Ginibre draw of the given rank (1..4)."""
    rank = rank or int(rng.integers(1, 5))
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return TwoQubitState(rho / np.trace(rho).real)


def random_direction(rng: np.random.Generator) -> BlochSetting:
    v = rng.normal(size=3)
    return BlochSetting(tuple(v / np.linalg.norm(v)))
