"""Dense density-matrix algebra for registers of one to three qubits.

Slots are addressed by label. Basis index ordering follows the label
order, first label most significant, so ``|n e b>`` on
``("N_A", "e_A", "e_B")`` sits at index ``4n + 2e + b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 3
ATOL = 1e-12
POSITIVITY_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}


class QuantumError(ValueError):
    """Raised on dimension, slot or parameter mismatches."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _nqubits(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim or n < 1:
        raise QuantumError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise QuantumError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit cap")
    return n


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(f"q{i}" for i in range(n))


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        n = _nqubits(amps.size)
        labels = tuple(self.labels) or _default_labels(n)
        if len(labels) != n:
            raise QuantumError(f"{len(labels)} labels for {n} qubits")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > ATOL:
            raise QuantumError(f"state norm {norm!r} is not 1")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def normalized(cls, amplitudes, labels: Sequence[str] = ()) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        return cls(amps / np.linalg.norm(amps), tuple(labels))

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def to_density(self) -> "DensityState":
        return DensityState(np.outer(self.amplitudes, self.amplitudes.conj()), self.labels)


@dataclass(frozen=True, eq=False)
class DensityState:
    matrix: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise QuantumError(f"density matrix must be square, got {m.shape}")
        n = _nqubits(m.shape[0])
        labels = tuple(self.labels) or _default_labels(n)
        if len(labels) != n or len(set(labels)) != n:
            raise QuantumError(f"bad slot labels {labels!r} for {n} qubits")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", labels)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def index(self, slot: str) -> int:
        try:
            return self.labels.index(slot)
        except ValueError:
            raise QuantumError(f"slot {slot!r} not in {self.labels}") from None

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def check(self, atol: float = ATOL) -> None:
        """Raise QuantumError unless Hermitian, unit trace and positive."""
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=atol, rtol=0):
            raise QuantumError("density matrix is not Hermitian")
        if abs(self.trace() - 1.0) > atol:
            raise QuantumError(f"trace {self.trace()!r} is not 1")
        lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
        if lo < -POSITIVITY_TOL:
            raise QuantumError(f"negative eigenvalue {lo!r}")

    def is_physical(self, atol: float = ATOL) -> bool:
        try:
            self.check(atol)
        except QuantumError:
            return False
        return True


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """A unitary matrix, optionally bound to target slots."""

    matrix: np.ndarray
    target_slots: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise QuantumError(f"operator must be square, got {m.shape}")
        n = _nqubits(m.shape[0])
        slots = tuple(self.target_slots)
        if slots and len(slots) != n:
            raise QuantumError(f"{len(slots)} target slots for a {n}-qubit operator")
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=ATOL, rtol=0):
            raise QuantumError("operator is not unitary")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "target_slots", slots)

    def on(self, *slots: str) -> "UnitaryOp":
        return UnitaryOp(self.matrix, tuple(slots), self.name)

    def __matmul__(self, other: "UnitaryOp") -> "UnitaryOp":
        if self.target_slots != other.target_slots:
            raise QuantumError("cannot compose operators on different slots")
        return UnitaryOp(self.matrix @ other.matrix, self.target_slots, f"{self.name}{other.name}")

    def dagger(self) -> "UnitaryOp":
        return UnitaryOp(self.matrix.conj().T, self.target_slots, f"{self.name}^-1")


@dataclass(frozen=True)
class MeasurementResult:
    """One branch of a measurement.

    ``conditional_state`` is None for a zero-probability branch; such a
    branch has no normalizable post-measurement state.
    """

    outcome: int
    probability: float
    conditional_state: DensityState | None

    @property
    def valid(self) -> bool:
        return self.conditional_state is not None


# --- construction helpers -------------------------------------------------

def ket(bits: str | Sequence[int], labels: Sequence[str] = ()) -> PureState:
    bits = [int(b) for b in bits]
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int("".join(map(str, bits)), 2)] = 1.0
    return PureState(amps, tuple(labels))


def maximally_mixed(labels: Sequence[str]) -> DensityState:
    d = 2 ** len(labels)
    return DensityState(np.eye(d, dtype=complex) / d, tuple(labels))


def bell_states(labels: Sequence[str] = ()) -> dict[str, PureState]:
    s = 1 / np.sqrt(2)
    return {
        "Phi+": PureState([s, 0, 0, s], tuple(labels)),
        "Phi-": PureState([s, 0, 0, -s], tuple(labels)),
        "Psi+": PureState([0, s, s, 0], tuple(labels)),
        "Psi-": PureState([0, s, -s, 0], tuple(labels)),
    }


# --- core operations --------------------------------------------------------

def tensor_product(a, b):
    """Kronecker product of two states or two operators; slots of ``a`` come first."""
    if type(a) is not type(b):
        raise QuantumError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), _join(a.labels, b.labels))
    if isinstance(a, DensityState):
        return DensityState(np.kron(a.matrix, b.matrix), _join(a.labels, b.labels))
    if isinstance(a, UnitaryOp):
        slots = a.target_slots + b.target_slots
        if bool(a.target_slots) != bool(b.target_slots):
            raise QuantumError("cannot tensor a bound operator with an unbound one")
        return UnitaryOp(np.kron(a.matrix, b.matrix), slots, f"{a.name}(x){b.name}")
    raise QuantumError(f"unsupported operand {type(a).__name__}")


def _join(la: tuple[str, ...], lb: tuple[str, ...]) -> tuple[str, ...]:
    if len(la) + len(lb) > MAX_QUBITS:
        raise QuantumError(f"{len(la) + len(lb)} qubits exceeds the {MAX_QUBITS}-qubit cap")
    if set(la) & set(lb):
        # auto labels collide when both factors are unlabeled
        return _default_labels(len(la) + len(lb))
    return la + lb


def embed(op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Lift an operator on qubit positions ``targets`` to the full n-qubit space."""
    k = len(targets)
    if sorted(set(targets)) != sorted(targets) or any(t >= n for t in targets):
        raise QuantumError(f"bad target positions {targets} for {n} qubits")
    rest = [q for q in range(n) if q not in targets]
    full = np.kron(op, np.eye(2 ** (n - k), dtype=complex))
    order = list(targets) + rest
    # axes of full are (out: order..., in: order...); move to natural order
    perm = np.argsort(order)
    t = full.reshape([2] * (2 * n))
    t = t.transpose(list(perm) + [n + p for p in perm])
    return t.reshape(2**n, 2**n)


def _positions(rho: DensityState, slots: Iterable[str]) -> list[int]:
    return [rho.index(s) for s in slots]


def embedded_operator(rho: DensityState, matrix: np.ndarray, slots: Sequence[str]) -> np.ndarray:
    return embed(np.asarray(matrix, dtype=complex), _positions(rho, slots), rho.num_qubits)


def apply_unitary(rho: DensityState, u: UnitaryOp) -> DensityState:
    if not u.target_slots:
        raise QuantumError("operator has no target slots; bind them with .on()")
    full = embedded_operator(rho, u.matrix, u.target_slots)
    return DensityState(full @ rho.matrix @ full.conj().T, rho.labels)


def apply_kraus(rho: DensityState, kraus: Iterable[np.ndarray], slots: Sequence[str]) -> DensityState:
    """Apply the channel ``sum_k K rho K^dagger`` with Kraus operators acting on ``slots``."""
    pos = _positions(rho, slots)
    out = np.zeros_like(rho.matrix)
    for k in kraus:
        full = embed(np.asarray(k, dtype=complex), pos, rho.num_qubits)
        out += full @ rho.matrix @ full.conj().T
    return DensityState(out, rho.labels)


def apply_diagonal_phases(rho: DensityState, phases: np.ndarray) -> DensityState:
    """Conjugate by ``diag(exp(i*phases))`` on the full register."""
    d = np.exp(1j * np.asarray(phases, dtype=float))
    return DensityState(d[:, None] * rho.matrix * d.conj()[None, :], rho.labels)


def rotation(axis: str, angle: float, sense: str = "positive") -> UnitaryOp:
    """``exp(-i angle sigma_axis / 2)``; ``sense="negative"`` flips the angle."""
    axis = axis.upper()
    if axis not in PAULI:
        raise QuantumError(f"unknown rotation axis {axis!r}")
    if sense not in ("positive", "negative"):
        raise QuantumError(f"unknown rotation sense {sense!r}")
    theta = angle if sense == "positive" else -angle
    m = np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * PAULI[axis]
    return UnitaryOp(m)


def driven_rotation(angle: float, drive_phase: float) -> UnitaryOp:
    """Rotation about an equatorial axis set by the drive phase.

    Phase 0 rotates about +Y and phase pi/2 about +X.
    """
    n = np.cos(drive_phase) * SIGMA_Y + np.sin(drive_phase) * SIGMA_X
    return UnitaryOp(np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * n)


def _named():
    h = np.pi / 2
    table = {
        "1": UnitaryOp(I2),
        "x": rotation("X", h),
        "xbar": rotation("X", h, "negative"),
        "y": rotation("Y", h),
        "ybar": rotation("Y", h, "negative"),
        "z": rotation("Z", h),
        "zbar": rotation("Z", h, "negative"),
        "X": rotation("X", np.pi),
        "Xbar": rotation("X", np.pi, "negative"),
        "Y": rotation("Y", np.pi),
        "Ybar": rotation("Y", np.pi, "negative"),
        "Z": rotation("Z", np.pi),
    }
    return {k: UnitaryOp(v.matrix, name=k) for k, v in table.items()}


#: Named pulses: lowercase pi/2, capitals pi, ``bar`` marks negative sense.
GATES: dict[str, UnitaryOp] = _named()


def gate(name: str) -> UnitaryOp:
    try:
        return GATES[name]
    except KeyError:
        raise QuantumError(f"unknown gate {name!r}") from None


def projector(rho: DensityState, slot: str, bit: int) -> np.ndarray:
    p = np.zeros((2, 2), dtype=complex)
    p[bit, bit] = 1.0
    return embedded_operator(rho, p, [slot])


def projective_measure(rho: DensityState, slot: str, basis: str = "Z") -> list[MeasurementResult]:
    if basis.upper() != "Z":
        raise QuantumError("only Z-basis measurement is supported; rotate first")
    results = []
    for bit in (0, 1):
        p = projector(rho, slot, bit)
        sub = p @ rho.matrix @ p
        prob = float(np.trace(sub).real)
        results.append(_branch(bit, sub, prob, rho.labels))
    return results


def _branch(outcome: int, sub: np.ndarray, prob: float, labels) -> MeasurementResult:
    if prob <= 1e-15:
        return MeasurementResult(outcome, max(prob, 0.0), None)
    return MeasurementResult(outcome, prob, DensityState(sub / prob, labels))


def dephase(rho: DensityState, slot: str) -> DensityState:
    z = embedded_operator(rho, SIGMA_Z, [slot])
    return DensityState(0.5 * (rho.matrix + z @ rho.matrix @ z), rho.labels)


def partial_trace(rho: DensityState, keep_slots: Sequence[str]) -> DensityState:
    keep = _positions(rho, keep_slots)
    if not keep:
        raise QuantumError("partial trace needs at least one kept slot")
    n = rho.num_qubits
    t = rho.matrix.reshape([2] * (2 * n))
    letters = "abcdefghijkl"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for q in range(n):
        if q not in keep:
            col[q] = row[q]
    out = "".join(row[q] for q in keep) + "".join(col[q] for q in keep)
    m = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = 2 ** len(keep)
    return DensityState(m.reshape(d, d), tuple(rho.labels[q] for q in keep))


def replace_slot(rho: DensityState, slot: str, state: DensityState) -> DensityState:
    """Discard ``slot`` and put it in the single-qubit ``state``, keeping slot order."""
    rho.index(slot)  # raises for an unknown slot
    rest = [s for s in rho.labels if s != slot]
    reduced = partial_trace(rho, rest).matrix if rest else np.ones((1, 1), dtype=complex)
    full = np.kron(state.matrix, reduced)
    order = [slot] + rest
    n = rho.num_qubits
    perm = [order.index(s) for s in rho.labels]
    t = full.reshape([2] * (2 * n)).transpose(perm + [n + p for p in perm])
    return DensityState(t.reshape(2**n, 2**n), rho.labels)


def depolarize(rho: DensityState, slot: str, keep_prob: float) -> DensityState:
    if not 0.0 <= keep_prob <= 1.0:
        raise QuantumError(f"keep_prob {keep_prob!r} outside [0, 1]")
    mixed = replace_slot(rho, slot, maximally_mixed([slot]))
    return DensityState(keep_prob * rho.matrix + (1 - keep_prob) * mixed.matrix, rho.labels)


def fidelity_to_pure(rho: DensityState, psi: PureState) -> float:
    if rho.dim != psi.amplitudes.size:
        raise QuantumError(f"dimension mismatch {rho.dim} vs {psi.amplitudes.size}")
    v = psi.amplitudes
    return float(np.vdot(v, rho.matrix @ v).real)


def expectation(rho: DensityState, matrix: np.ndarray, slots: Sequence[str]) -> float:
    full = embedded_operator(rho, matrix, slots)
    return float(np.trace(full @ rho.matrix).real)
