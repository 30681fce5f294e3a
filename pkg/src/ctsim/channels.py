"""Constructors for every entangled channel and reference state in the catalog.

Each builder returns ``(state, registry)`` where the registry fixes tensor
ordering. Role conventions: the sender holds A (or A1..An), the receiver B
(or B1..Bn), supervisor j holds Cj. Channel families:

================  ==========================================================
bell              one of the four Bell pairs
ghz / w / cluster / graph   reference multipartite states for comparisons
phik              two-branch threshold channel for one teleported qubit:
                  (B1_AB |0..0>_C + B2_AB |Dicke(k-1 zeros)>_C)/sqrt(2)
phik2n            n-pair version: products of B1's vs products of B2's
phiprime          n-pair version with per-pair secret Bell labels r_i / s_i
mes               maximally-entangled 2n-qubit resource (n = 2 or 3)
phi2prime         mes dressed with Pauli marks, threshold C-block attached
phi3prime         same with a 2n-qubit linear cluster as the resource
general           explicit four-branch pure channel sum_i x_i B^i (x) phi^i
mixed             classical mixture sum_i x_i |B^i><B^i| (x) |phi^i><phi^i|
================  ==========================================================
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .qcore import (
    BELL_AMPS,
    DensityMatrix,
    PartyRegistry,
    StateVector,
    apply_pauli,
    bell_state,
    ket,
    tensor,
)

_SQ2 = math.sqrt(2)


class ChannelSpecError(ValueError):
    """Invalid channel specification."""


@dataclass(frozen=True)
class DickePattern:
    """The set of m-bit strings with exactly ``zeros`` zeros."""

    m: int
    zeros: int

    def __post_init__(self):
        if not 0 <= self.zeros <= self.m:
            raise ChannelSpecError(f"need 0 <= zeros <= m, got zeros={self.zeros}, m={self.m}")

    @property
    def size(self) -> int:
        return math.comb(self.m, self.zeros)

    @property
    def support(self) -> tuple[str, ...]:
        """All member bitstrings, lexicographic order."""
        out = []
        for zero_positions in itertools.combinations(range(self.m), self.zeros):
            bits = ["1"] * self.m
            for p in zero_positions:
                bits[p] = "0"
            out.append("".join(bits))
        return tuple(sorted(out))

    def contains(self, bits: str) -> bool:
        return len(bits) == self.m and bits.count("0") == self.zeros

    def state(self) -> StateVector:
        """Equal superposition of all member strings (symmetric Dicke state)."""
        amps = np.zeros(2**self.m, dtype=complex)
        for s in self.support:
            amps[int(s, 2)] = 1.0
        return StateVector(self.m, amps / math.sqrt(self.size))


# ---------------------------------------------------------------------------
# reference states
# ---------------------------------------------------------------------------

def ghz_state(num_qubits: int) -> StateVector:
    """(|0..0> + |1..1>)/sqrt(2)."""
    if num_qubits < 1:
        raise ChannelSpecError("ghz needs at least one qubit")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = amps[-1] = 1 / _SQ2
    return StateVector(num_qubits, amps)


def w_state(num_qubits: int) -> StateVector:
    """Equal superposition of all single-excitation strings."""
    if num_qubits < 2:
        raise ChannelSpecError("w needs at least two qubits")
    amps = np.zeros(2**num_qubits, dtype=complex)
    for q in range(num_qubits):
        amps[1 << q] = 1 / math.sqrt(num_qubits)
    return StateVector(num_qubits, amps)


def linear_cluster_state(num_qubits: int) -> StateVector:
    """1D cluster state: amplitude 2^(-N/2) * (-1)^(sum of adjacent 1-pairs)."""
    if num_qubits < 2:
        raise ChannelSpecError("cluster needs at least two qubits")
    n = num_qubits
    amps = np.empty(2**n, dtype=complex)
    for i in range(2**n):
        bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        sign = sum(bits[q] * bits[q + 1] for q in range(n - 1))
        amps[i] = (-1) ** sign
    return StateVector(n, amps / 2 ** (n / 2))


def graph_state(num_qubits: int, edges: list[tuple[int, int]]) -> StateVector:
    """Graph state: controlled-Z along ``edges`` applied to |+>^N."""
    n = num_qubits
    amps = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    for i in range(2**n):
        bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        sign = sum(bits[a] * bits[b] for a, b in edges)
        amps[i] *= (-1) ** sign
    return StateVector(n, amps)


def star_graph_channel(m: int) -> StateVector:
    """Graph state on A,B,C1..Cm with edges A-B, B-C1, and C1-Cj for j >= 2."""
    if m < 1:
        raise ChannelSpecError("graph channel needs m >= 1")
    edges = [(0, 1), (1, 2)] + [(2, 2 + j) for j in range(1, m)]
    return graph_state(2 + m, edges)


def mes_state(n: int) -> StateVector:
    """Genuine 2n-qubit entangled teleportation resource, ordered A1..An B1..Bn.

    Only n = 2 and n = 3 have explicit constructions.
    """
    if n == 2:
        terms = {
            "0000": 1, "0011": -1, "0101": -1, "0110": 1,
            "1001": 1, "1010": 1, "1100": 1, "1111": 1,
        }
    elif n == 3:
        terms = {
            "000000": 1, "010110": 1, "110100": 1, "100010": 1,
            "011011": 1, "001101": 1, "101111": 1, "111001": 1,
        }
    else:
        raise ChannelSpecError(f"mes is only constructed for n in {{2, 3}}, got n={n}")
    amps = np.zeros(2 ** (2 * n), dtype=complex)
    for bits, sign in terms.items():
        amps[int(bits, 2)] = sign
    return StateVector(2 * n, amps / (2 * _SQ2))


# ---------------------------------------------------------------------------
# plus/minus basis helpers
# ---------------------------------------------------------------------------

def ghz_pm_decomposition(m: int) -> tuple[StateVector, StateVector]:
    """Split the GHZ C-block into its plus/minus-basis Dicke branches.

    Returns (phi1, phi2): the uniform superpositions of all m-qubit
    plus/minus strings with an even (resp. odd) number of |-> factors.
    In the computational basis these are (|0..0> +- |1..1>)/sqrt(2).
    Reassembling (B1 (x) phi1 + B2 (x) phi2)/sqrt(2) gives GHZ(2+m) exactly.
    """
    if m < 1:
        raise ChannelSpecError("need m >= 1")
    even = np.zeros(2**m, dtype=complex)
    even[0] = even[-1] = 1 / _SQ2
    odd = np.zeros(2**m, dtype=complex)
    odd[0], odd[-1] = 1 / _SQ2, -1 / _SQ2
    return StateVector(m, even), StateVector(m, odd)


def bell_in_pm_basis(label: int) -> StateVector:
    """Bell state re-expressed over the plus/minus basis.

    The returned StateVector's amplitudes are coefficients over
    {|++>, |+->, |-+>, |-->} (bit 0 = +, bit 1 = -). Labels 1 and 3 are
    correlated in this basis, labels 2 and 4 anticorrelated, which is what a
    two-party plus/minus probe can distinguish.
    """
    if label not in BELL_AMPS:
        raise ChannelSpecError(f"Bell label must be 1..4, got {label}")
    h = np.array([[1, 1], [1, -1]], dtype=complex) / _SQ2
    hh = np.kron(h, h)
    return StateVector(2, hh @ BELL_AMPS[label])


def pm_correlated(label: int) -> bool:
    """True if the Bell state shows equal outcomes under plus/minus probing."""
    return label in (1, 3)


# ---------------------------------------------------------------------------
# channel spec + build
# ---------------------------------------------------------------------------

# C-block catalog for the general/mixed families. Z-plan slots are told apart
# by counting zeros in computational-basis outcomes; the PM-plan pair by the
# parity of minus outcomes.
Z_PLAN = "z"
PM_PLAN = "pm"

FAMILIES = (
    "bell", "ghz", "w", "cluster", "graph",
    "phik", "phik2n", "phiprime", "mes", "phi2prime", "phi3prime",
    "general", "mixed",
)

_PAULI_MARKS = {"0": "I", "i": "I", "x": "X", "y": "Y", "z": "Z",
                "I": "I", "X": "X", "Y": "Y", "Z": "Z"}


@dataclass(frozen=True)
class ChannelSpec:
    """Declarative description of which channel to build.

    Parameters not used by a family are ignored. ``slots`` names the C-block
    state per branch for the general/mixed families: "zeros", "ones",
    "dicke:<z>" (z = number of zeros), "even_pm", "odd_pm".
    """

    family: str
    n: int = 1
    k: int = 1
    m: int = 1
    qubits: int = 0  # ghz / w / cluster total size
    bell_label: int = 1
    r: tuple[int, ...] = ()
    s: tuple[int, ...] = ()
    j: tuple[str, ...] = ()
    x: tuple[complex, ...] = ()
    slots: tuple[str, ...] = ()

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ChannelSpecError(f"unknown family {self.family!r}")
        f = self.family
        if f in ("phik", "phik2n", "phiprime", "phi2prime", "phi3prime"):
            if not 1 <= self.k <= self.m:
                raise ChannelSpecError(f"need 1 <= k <= m, got k={self.k}, m={self.m}")
        if f in ("phik2n", "phiprime", "phi2prime", "phi3prime") and self.n < 1:
            raise ChannelSpecError("need n >= 1")
        if f == "bell" and self.bell_label not in (1, 2, 3, 4):
            raise ChannelSpecError(f"bad Bell label {self.bell_label}")
        if f in ("ghz", "w", "cluster") and self.qubits < 2:
            raise ChannelSpecError(f"{f} needs qubits >= 2")
        if f == "phiprime":
            for name, seq in (("r", self.r), ("s", self.s)):
                if len(seq) != self.n or any(v not in (1, 2, 3, 4) for v in seq):
                    raise ChannelSpecError(
                        f"{name} must be {self.n} Bell labels in 1..4, got {seq}")
        if f in ("phi2prime", "phi3prime"):
            marks = [_PAULI_MARKS.get(str(v)) for v in self.j]
            if len(marks) != self.n or None in marks:
                raise ChannelSpecError(f"j must be {self.n} labels from {{0,x,y,z}}, got {self.j}")
            if all(mk == "I" for mk in marks):
                raise ChannelSpecError("Pauli marks j cannot all be the identity")
        if f == "phi2prime" and self.n not in (2, 3):
            raise ChannelSpecError(f"mes is only constructed for n in {{2, 3}}, got n={self.n}")
        if f in ("general", "mixed"):
            if len(self.x) != 4 or len(self.slots) != 4:
                raise ChannelSpecError("general/mixed need 4 weights and 4 slot names")
            if f == "general":
                total = sum(abs(c) ** 2 for c in self.x)
            else:
                if any(complex(c).imag != 0 or complex(c).real < 0 for c in self.x):
                    raise ChannelSpecError("mixed weights must be real and nonnegative")
                total = sum(complex(c).real for c in self.x)
            if abs(total - 1.0) > 1e-9:
                raise ChannelSpecError(f"weights must sum to 1, got {total}")
            _validate_slots(self.x, self.slots, self.m)

    def pauli_marks(self) -> tuple[str, ...]:
        return tuple(_PAULI_MARKS[str(v)] for v in self.j)


def _slot_state(name: str, m: int) -> StateVector:
    if name == "zeros":
        return ket("0" * m)
    if name == "ones":
        return ket("1" * m)
    if name.startswith("dicke:"):
        return DickePattern(m, int(name.split(":")[1])).state()
    if name == "even_pm":
        return ghz_pm_decomposition(m)[0]
    if name == "odd_pm":
        return ghz_pm_decomposition(m)[1]
    raise ChannelSpecError(f"unknown C-block slot {name!r}")


def slot_plan(name: str) -> str:
    return PM_PLAN if name.endswith("_pm") else Z_PLAN


def _validate_slots(x, slots, m) -> None:
    active = [s for c, s in zip(x, slots) if abs(complex(c)) > 0]
    if len({slot_plan(s) for s in active}) > 1:
        raise ChannelSpecError(
            "active slots mix measurement plans; supervisors need one shared basis")
    states = [_slot_state(s, m) for s in active]
    for i in range(len(states)):
        for jdx in range(i + 1, len(states)):
            ov = abs(np.vdot(states[i].amplitudes, states[jdx].amplitudes))
            if ov > 1e-10:
                raise ChannelSpecError(
                    f"slots {active[i]!r} and {active[jdx]!r} are not orthogonal (|<.|.>|={ov:.3g})")


def _pair_registry(n: int, m: int, interleaved: bool) -> PartyRegistry:
    if n == 1 and interleaved:
        roles: tuple[str, ...] = ("A", "B")
    elif interleaved:
        roles = tuple(r for i in range(1, n + 1) for r in (f"A{i}", f"B{i}"))
    else:
        roles = tuple(f"A{i}" for i in range(1, n + 1)) + tuple(f"B{i}" for i in range(1, n + 1))
    return PartyRegistry(roles + tuple(f"C{j}" for j in range(1, m + 1)))


def _two_branch(ab1: StateVector, c1: StateVector, ab2: StateVector, c2: StateVector) -> StateVector:
    amps = (np.kron(ab1.amplitudes, c1.amplitudes)
            + np.kron(ab2.amplitudes, c2.amplitudes)) / _SQ2
    return StateVector.from_amplitudes(amps)


def _bell_product(labels) -> StateVector:
    amps = np.array([1], dtype=complex)
    for lab in labels:
        amps = np.kron(amps, BELL_AMPS[lab])
    return StateVector.from_amplitudes(amps)


def threshold_channel(k: int, m: int) -> StateVector:
    """Two-branch channel: all-zeros C-block with B1, Dicke(k-1 zeros) with B2.

    Any k supervisors measuring in Z pin the branch; fewer cannot.
    """
    return _two_branch(bell_state(1), ket("0" * m),
                       bell_state(2), DickePattern(m, k - 1).state())


def multi_pair_threshold_channel(n: int, k: int, m: int,
                                 r: tuple[int, ...] | None = None,
                                 s: tuple[int, ...] | None = None) -> StateVector:
    """n-pair threshold channel; optional per-pair Bell labels (r_i, s_i)."""
    r = tuple(r) if r else (1,) * n
    s = tuple(s) if s else (2,) * n
    return _two_branch(_bell_product(r), ket("0" * m),
                       _bell_product(s), DickePattern(m, k - 1).state())


def _marked_resource(resource: StateVector, marks: tuple[str, ...],
                     a_positions: list[int]) -> StateVector:
    out = resource
    for pos, mark in zip(a_positions, marks):
        if mark != "I":
            out = apply_pauli(out, pos, mark)
    return out


def dressed_resource_channel(resource: StateVector, marks: tuple[str, ...],
                             a_positions: list[int], k: int, m: int) -> StateVector:
    """(resource (x) Dicke + marked-resource (x) |0..0>)/sqrt(2)."""
    marked = _marked_resource(resource, marks, a_positions)
    return _two_branch(resource, DickePattern(m, k - 1).state(),
                       marked, ket("0" * m))


def general_channel(x, slots, m: int) -> StateVector:
    amps = np.zeros(2 ** (2 + m), dtype=complex)
    for c, label, slot in zip(x, (1, 2, 3, 4), slots):
        if abs(complex(c)) > 0:
            amps += complex(c) * np.kron(BELL_AMPS[label], _slot_state(slot, m).amplitudes)
    return StateVector.from_amplitudes(amps)


def mixed_channel(x, slots, m: int) -> DensityMatrix:
    dim = 2 ** (2 + m)
    rho = np.zeros((dim, dim), dtype=complex)
    for c, label, slot in zip(x, (1, 2, 3, 4), slots):
        w = complex(c).real
        if w > 0:
            v = np.kron(BELL_AMPS[label], _slot_state(slot, m).amplitudes)
            rho += w * np.outer(v, v.conj())
    return DensityMatrix(2 + m, rho)


def build(spec: ChannelSpec) -> tuple[StateVector | DensityMatrix, PartyRegistry]:
    """Build the channel described by ``spec``; returns (state, registry)."""
    spec.validate()
    f = spec.family
    if f == "bell":
        return bell_state(spec.bell_label), PartyRegistry(("A", "B"))
    if f == "ghz":
        return ghz_state(spec.qubits), _pair_registry(1, spec.qubits - 2, True)
    if f == "w":
        return w_state(spec.qubits), _pair_registry(1, spec.qubits - 2, True)
    if f == "cluster":
        return linear_cluster_state(spec.qubits), _pair_registry(1, spec.qubits - 2, True)
    if f == "graph":
        return star_graph_channel(spec.m), _pair_registry(1, spec.m, True)
    if f == "phik":
        return threshold_channel(spec.k, spec.m), _pair_registry(1, spec.m, True)
    if f == "phik2n":
        return (multi_pair_threshold_channel(spec.n, spec.k, spec.m),
                _pair_registry(spec.n, spec.m, True))
    if f == "phiprime":
        return (multi_pair_threshold_channel(spec.n, spec.k, spec.m, spec.r, spec.s),
                _pair_registry(spec.n, spec.m, True))
    if f == "mes":
        if spec.n not in (2, 3):
            raise ChannelSpecError(f"mes is only constructed for n in {{2, 3}}, got n={spec.n}")
        return mes_state(spec.n), _pair_registry(spec.n, 0, False)
    if f == "phi2prime":
        reg = _pair_registry(spec.n, spec.m, False)
        a_pos = [reg.index(f"A{i}") for i in range(1, spec.n + 1)]
        state = dressed_resource_channel(mes_state(spec.n), spec.pauli_marks(),
                                         a_pos, spec.k, spec.m)
        return state, reg
    if f == "phi3prime":
        reg = _pair_registry(spec.n, spec.m, True)
        roles_a = ["A"] if spec.n == 1 else [f"A{i}" for i in range(1, spec.n + 1)]
        a_pos = [reg.index(r) for r in roles_a]
        state = dressed_resource_channel(linear_cluster_state(2 * spec.n),
                                         spec.pauli_marks(), a_pos, spec.k, spec.m)
        return state, reg
    if f == "general":
        return general_channel(spec.x, spec.slots, spec.m), _pair_registry(1, spec.m, True)
    if f == "mixed":
        return mixed_channel(spec.x, spec.slots, spec.m), _pair_registry(1, spec.m, True)
    raise ChannelSpecError(f"unknown family {f!r}")


def phik_spec(k: int, m: int) -> ChannelSpec:
    return ChannelSpec("phik", k=k, m=m)


def active_slots(spec: ChannelSpec) -> list[tuple[int, str]]:
    """(bell label, slot name) for every nonzero branch of a general/mixed spec."""
    return [(label, slot)
            for c, label, slot in zip(spec.x, (1, 2, 3, 4), spec.slots)
            if abs(complex(c)) > 0]
