"""Dense pure/mixed state engine for few-qubit protocol simulation.

Conventions used throughout the package:

* Qubits are indexed 0..n-1 in registry order; qubit 0 is the *most
  significant* bit of a basis index, so the amplitude of |q0 q1 ... q_{n-1}>
  sits at index q0*2^(n-1) + ... + q_{n-1}.
* All operations are pure functions returning fresh values; states are never
  mutated in place.
* States equal up to a global phase are considered equal
  (see :func:`states_equal`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ATOL = 1e-10  # tolerance for amplitude / probability identities
RANK_CUTOFF = 1e-8  # singular values below this count as zero

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Bell pair amplitudes over (q1, q2), q1 the more significant qubit.
# Labels 1..4 encode (phase bit, parity bit): 1=(0,0), 2=(1,0), 3=(0,1), 4=(1,1).
BELL_AMPS = {
    1: np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2),
    2: np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2),
    3: np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2),
    4: np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2),
}


def bell_label(phase: int, parity: int) -> int:
    return 1 + phase + 2 * parity


def bell_bits(label: int) -> tuple[int, int]:
    """(phase, parity) bits of a Bell label."""
    return (label - 1) & 1, (label - 1) >> 1


@dataclass
class StateVector:
    """Normalized pure state over ``num_qubits`` qubits."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"state not normalized: |psi| = {norm}")

    @classmethod
    def from_amplitudes(cls, amps) -> "StateVector":
        amps = np.asarray(amps, dtype=complex)
        n = int(round(math.log2(amps.size)))
        if 2**n != amps.size:
            raise ValueError(f"amplitude count {amps.size} is not a power of two")
        return cls(n, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor_view(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit (registry order)."""
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def probability(self, index: int) -> float:
        return float(abs(self.amplitudes[index]) ** 2)

    def nonzero_terms(self, eps: float = 1e-9) -> list[tuple[str, complex]]:
        """(bitstring, amplitude) pairs with |amplitude| above ``eps``."""
        return [
            (format(i, f"0{self.num_qubits}b"), complex(a))
            for i, a in enumerate(self.amplitudes)
            if abs(a) > eps
        ]


@dataclass
class DensityMatrix:
    """Mixed state over ``num_qubits`` qubits."""

    num_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        dim = 2**self.num_qubits
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {self.matrix.shape}")

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        a = state.amplitudes
        return cls(state.num_qubits, np.outer(a, a.conj()))

    def validate(self, atol: float = ATOL, check_positivity: bool = True) -> None:
        """Raise if not Hermitian / unit trace / positive semidefinite."""
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=atol):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(self.matrix).real
        if abs(tr - 1.0) > atol:
            raise ValueError(f"density matrix trace {tr} != 1")
        if check_positivity:
            eigs = np.linalg.eigvalsh(self.matrix)
            if eigs.min() < -atol:
                raise ValueError(f"negative eigenvalue {eigs.min()}")

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


State = StateVector | DensityMatrix


@dataclass(frozen=True)
class MeasurementBasis:
    """Single-qubit projective basis.

    ``vectors[0]`` is the outcome-0 direction. Z is the computational basis
    {|0>, |1>}, X the diagonal basis {|+>, |->}, and bloch(theta, phi) the
    general direction (cos(t/2)|0> + e^{i phi} sin(t/2)|1>).
    """

    name: str
    v0: tuple[complex, complex]
    v1: tuple[complex, complex]

    @property
    def vectors(self) -> np.ndarray:
        return np.array([self.v0, self.v1], dtype=complex)

    @classmethod
    def bloch(cls, theta: float, phi: float) -> "MeasurementBasis":
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        ph = complex(math.cos(phi), math.sin(phi))
        return cls(
            f"bloch({theta:.6g},{phi:.6g})",
            (c, s * ph),
            (s, -c * ph),
        )


BASIS_Z = MeasurementBasis("Z", (1, 0), (0, 1))
BASIS_X = MeasurementBasis("X", (1 / math.sqrt(2), 1 / math.sqrt(2)),
                           (1 / math.sqrt(2), -1 / math.sqrt(2)))
BASIS_Y = MeasurementBasis("Y", (1 / math.sqrt(2), 1j / math.sqrt(2)),
                           (1 / math.sqrt(2), -1j / math.sqrt(2)))

BASES = {"Z": BASIS_Z, "X": BASIS_X, "Y": BASIS_Y}


@dataclass(frozen=True)
class PartyRegistry:
    """Ordered mapping of qubit index -> role label (T_i, A_i, B_i, C_j)."""

    roles: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.roles)) != len(self.roles):
            raise ValueError(f"duplicate roles in registry: {self.roles}")

    def __len__(self) -> int:
        return len(self.roles)

    def index(self, role: str) -> int:
        try:
            return self.roles.index(role)
        except ValueError:
            raise KeyError(f"role {role!r} not in registry {self.roles}") from None

    def with_prefix(self, prefix: str) -> list[int]:
        """Qubit indices whose role is ``prefix`` or ``prefix<number>``, in number order."""
        found = []
        for i, r in enumerate(self.roles):
            if r == prefix:
                found.append((0, i))
            elif r.startswith(prefix) and r[len(prefix):].isdigit():
                found.append((int(r[len(prefix):]), i))
        return [i for _, i in sorted(found)]

    @property
    def a_qubits(self) -> list[int]:
        return self.with_prefix("A")

    @property
    def b_qubits(self) -> list[int]:
        return self.with_prefix("B")

    @property
    def c_qubits(self) -> list[int]:
        return self.with_prefix("C")

    @property
    def t_qubits(self) -> list[int]:
        return self.with_prefix("T")

    def prepend(self, new_roles: tuple[str, ...]) -> "PartyRegistry":
        """Registry with ``new_roles`` inserted before the existing ones."""
        return PartyRegistry(tuple(new_roles) + self.roles)


# ---------------------------------------------------------------------------
# state construction helpers
# ---------------------------------------------------------------------------

_KET_CHARS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / math.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / math.sqrt(2),
}


def ket(symbols: str) -> StateVector:
    """Product state from a string of ket symbols, leftmost most significant.

    >>> ket("01").amplitudes
    array([0.+0.j, 1.+0.j, 0.+0.j, 0.+0.j])
    """
    if not symbols:
        raise ValueError("empty ket string")
    amps = np.array([1], dtype=complex)
    for ch in symbols:
        if ch not in _KET_CHARS:
            raise ValueError(f"unknown ket symbol {ch!r}")
        amps = np.kron(amps, _KET_CHARS[ch])
    return StateVector(len(symbols), amps)


def basis_state(num_qubits: int, index: int) -> StateVector:
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


def bell_state(label: int) -> StateVector:
    if label not in BELL_AMPS:
        raise ValueError(f"Bell label must be 1..4, got {label}")
    return StateVector(2, BELL_AMPS[label].copy())


def qubit_state(alpha: complex, beta: complex) -> StateVector:
    """alpha|0> + beta|1>, normalized on input check."""
    return StateVector(1, np.array([alpha, beta], dtype=complex))


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    z = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(num_qubits, z / np.linalg.norm(z))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def tensor(a: State, b: State) -> State:
    """Tensor product with ``a``'s qubits more significant."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(a.num_qubits + b.num_qubits,
                           np.kron(a.amplitudes, b.amplitudes))
    da = a if isinstance(a, DensityMatrix) else DensityMatrix.from_state(a)
    db = b if isinstance(b, DensityMatrix) else DensityMatrix.from_state(b)
    return DensityMatrix(da.num_qubits + db.num_qubits, np.kron(da.matrix, db.matrix))


def _check_qubit(state: State, qubit: int) -> None:
    if not 0 <= qubit < state.num_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.num_qubits} qubits")


def _apply_1q(amps: np.ndarray, num_qubits: int, qubit: int, op: np.ndarray) -> np.ndarray:
    """Apply a 2x2 operator on one qubit of a flat amplitude array."""
    left = 2**qubit
    right = 2 ** (num_qubits - qubit - 1)
    view = amps.reshape(left, 2, right)
    out = np.einsum("ab,ibj->iaj", op, view)
    return out.reshape(amps.shape)


def _embed_1q(num_qubits: int, qubit: int, op: np.ndarray) -> np.ndarray:
    """Full-space matrix of a single-qubit operator (used on density matrices)."""
    full = np.array([[1]], dtype=complex)
    for q in range(num_qubits):
        full = np.kron(full, op if q == qubit else PAULI["I"])
    return full


def apply_pauli(state: State, qubit: int, label: str) -> State:
    """Apply Pauli(s) to one qubit. ``label`` may be a product like "ZX",
    applied right-to-left as operator composition."""
    _check_qubit(state, qubit)
    if not label or any(ch not in PAULI for ch in label):
        raise ValueError(f"bad Pauli label {label!r}")
    op = np.eye(2, dtype=complex)
    for ch in label:  # label "ZX" means Z @ X
        op = op @ PAULI[ch]
    if isinstance(state, StateVector):
        return StateVector(state.num_qubits,
                           _apply_1q(state.amplitudes, state.num_qubits, qubit, op))
    full = _embed_1q(state.num_qubits, qubit, op)
    return DensityMatrix(state.num_qubits, full @ state.matrix @ full.conj().T)


def _resolve_outcome(probs: list[float], rng, force):
    """Pick an outcome either by Born sampling or by forcing."""
    if force is not None:
        if probs[force] <= 1e-12:
            raise ValueError(f"forced outcome {force} has probability {probs[force]}")
        return force
    if rng is None:
        raise ValueError("either rng or a forced outcome is required")
    return int(rng.choice(len(probs), p=np.array(probs) / sum(probs)))


def measure_qubit(
    state: State,
    qubit: int,
    basis: MeasurementBasis = BASIS_Z,
    rng: np.random.Generator | None = None,
    force: int | None = None,
) -> tuple[int, State, float]:
    """Projective single-qubit measurement.

    Returns (outcome bit, renormalized post-measurement state, branch
    probability). The measured qubit stays in the registry, collapsed onto
    the basis vector of the observed outcome.
    """
    _check_qubit(state, qubit)
    vecs = basis.vectors
    if isinstance(state, StateVector):
        left = 2**qubit
        right = 2 ** (state.num_qubits - qubit - 1)
        view = state.amplitudes.reshape(left, 2, right)
        branches = []
        probs = []
        for b in (0, 1):
            proj = vecs[b, 0].conjugate() * view[:, 0, :] + vecs[b, 1].conjugate() * view[:, 1, :]
            branches.append(proj)
            probs.append(float(np.sum(np.abs(proj) ** 2)))
        outcome = _resolve_outcome(probs, rng, force)
        p = probs[outcome]
        post = np.einsum("a,ij->iaj", vecs[outcome], branches[outcome] / math.sqrt(p))
        return outcome, StateVector(state.num_qubits, post.reshape(-1)), p

    # density matrix branch
    projs = [_embed_1q(state.num_qubits, qubit, np.outer(vecs[b], vecs[b].conj()))
             for b in (0, 1)]
    probs = [float(np.trace(P @ state.matrix).real) for P in projs]
    outcome = _resolve_outcome(probs, rng, force)
    p = probs[outcome]
    P = projs[outcome]
    return outcome, DensityMatrix(state.num_qubits, P @ state.matrix @ P / p), p


def bell_measure(
    state: State,
    pair: tuple[int, int],
    rng: np.random.Generator | None = None,
    force: int | None = None,
) -> tuple[int, State, float]:
    """Project a qubit pair onto the Bell basis.

    Returns (label in 1..4, post-measurement state with the pair collapsed
    onto that Bell state, branch probability).
    """
    qa, qb = pair
    if qa == qb:
        raise ValueError("bell_measure needs two distinct qubits")
    _check_qubit(state, qa)
    _check_qubit(state, qb)

    if isinstance(state, StateVector):
        n = state.num_qubits
        t = state.tensor_view()
        moved = np.moveaxis(t, (qa, qb), (n - 2, n - 1)).reshape(-1, 4)
        branches = {}
        probs = {}
        for label, bvec in BELL_AMPS.items():
            proj = moved @ bvec.conj()
            branches[label] = proj
            probs[label] = float(np.sum(np.abs(proj) ** 2))
        labels = sorted(probs)
        outcome = labels[_resolve_outcome([probs[l] for l in labels], rng,
                                          None if force is None else force - 1)]
        p = probs[outcome]
        post = np.outer(branches[outcome] / math.sqrt(p), BELL_AMPS[outcome])
        post = post.reshape([2] * (n - 2) + [2, 2])
        post = np.moveaxis(post, (n - 2, n - 1), (qa, qb))
        return outcome, StateVector(n, post.reshape(-1)), p

    n = state.num_qubits
    results = {}
    probs = {}
    for label, bvec in BELL_AMPS.items():
        P2 = np.outer(bvec, bvec.conj())
        P = _embed_2q(n, qa, qb, P2)
        results[label] = P
        probs[label] = float(np.trace(P @ state.matrix).real)
    labels = sorted(probs)
    outcome = labels[_resolve_outcome([probs[l] for l in labels], rng,
                                      None if force is None else force - 1)]
    P = results[outcome]
    p = probs[outcome]
    return outcome, DensityMatrix(n, P @ state.matrix @ P / p), p


def _embed_2q(num_qubits: int, qa: int, qb: int, op4: np.ndarray) -> np.ndarray:
    """Full-space matrix of a 2-qubit operator given on (qa, qb), qa more significant."""
    t = op4.reshape(2, 2, 2, 2)  # (a_out, b_out, a_in, b_in)
    full = np.zeros((2**num_qubits, 2**num_qubits), dtype=complex)
    for i in range(2**num_qubits):
        ai = (i >> (num_qubits - 1 - qa)) & 1
        bi = (i >> (num_qubits - 1 - qb)) & 1
        for ao in (0, 1):
            for bo in (0, 1):
                j = i & ~(1 << (num_qubits - 1 - qa)) & ~(1 << (num_qubits - 1 - qb))
                j |= ao << (num_qubits - 1 - qa)
                j |= bo << (num_qubits - 1 - qb)
                full[j, i] += t[ao, bo, ai, bi]
    return full


def partial_trace(state: State, keep: list[int]) -> DensityMatrix:
    """Reduced density matrix over ``keep`` (in registry order)."""
    n = state.num_qubits
    keep = list(keep)
    if not keep or any(not 0 <= q < n for q in keep) or len(set(keep)) != len(keep):
        raise ValueError(f"bad kept-qubit subset {keep} for {n} qubits")
    keep_sorted = sorted(keep)
    if keep != keep_sorted:
        raise ValueError("kept qubits must be given in registry order")
    traced = [q for q in range(n) if q not in keep]

    if isinstance(state, StateVector):
        t = state.tensor_view()
        red = np.tensordot(t, t.conj(), axes=(traced, traced))
    else:
        t = state.matrix.reshape((2,) * (2 * n))
        # contract bra/ket axes of every traced qubit
        red = t
        for q in sorted(traced, reverse=True):
            red = np.trace(red, axis1=q, axis2=q + (red.ndim // 2))
    k = len(keep)
    return DensityMatrix(k, red.reshape(2**k, 2**k))


def fidelity(target: StateVector, actual: State) -> float:
    """|<target|actual>|^2 for pure actual, <target|rho|target> for mixed."""
    if target.num_qubits != actual.num_qubits:
        raise ValueError("fidelity: qubit-count mismatch")
    if isinstance(actual, StateVector):
        return float(abs(np.vdot(target.amplitudes, actual.amplitudes)) ** 2)
    v = target.amplitudes
    return float((v.conj() @ actual.matrix @ v).real)


def schmidt_rank(state: StateVector, subset: list[int]) -> int:
    """Number of singular values above ``RANK_CUTOFF`` across the cut
    (subset | rest); 1 means product across the cut."""
    n = state.num_qubits
    subset = sorted(set(subset))
    if not subset or len(subset) >= n:
        raise ValueError("bipartition must be a nonempty proper subset")
    rest = [q for q in range(n) if q not in subset]
    t = state.tensor_view()
    mat = np.moveaxis(t, subset, range(len(subset))).reshape(2 ** len(subset), 2 ** len(rest))
    sv = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(sv > RANK_CUTOFF))


def states_equal(a: StateVector, b: StateVector, tol: float = ATOL) -> bool:
    """Equality up to global phase: 1 - |<a|b>| < tol."""
    if a.num_qubits != b.num_qubits:
        return False
    return 1.0 - abs(np.vdot(a.amplitudes, b.amplitudes)) < tol


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """(1/2)||a - b||_1."""
    eigs = np.linalg.eigvalsh(a.matrix - b.matrix)
    return float(0.5 * np.sum(np.abs(eigs)))


def is_ppt(dm: DensityMatrix, transpose_qubit: int = 1, tol: float = RANK_CUTOFF) -> bool:
    """Partial-transpose criterion for a two-qubit density matrix.

    Exact separability test for 2x2 systems: separable iff the partial
    transpose has no negative eigenvalue.
    """
    if dm.num_qubits != 2:
        raise ValueError("partial-transpose criterion implemented for 2 qubits")
    t = dm.matrix.reshape(2, 2, 2, 2)  # (i1 i2, j1 j2)
    if transpose_qubit == 1:
        pt = t.transpose(0, 3, 2, 1)  # swap second-qubit bra/ket
    else:
        pt = t.transpose(2, 1, 0, 3)
    eigs = np.linalg.eigvalsh(pt.reshape(4, 4))
    return bool(eigs.min() >= -tol)
