"""End-to-end controlled-teleportation runs over the channel catalog.

A run: the sender Bell-measures each (T_i, A_i) pair and broadcasts the
labels; cooperating supervisors measure their C qubits (Z plan for the
threshold families, plus/minus plan for the GHZ scheme) and broadcast bits;
the receiver infers which channel branch the announcements pin down, applies
the matching Pauli corrections to his qubits, and we score the fidelity of
his reduced state against the input.

If fewer than k supervisors cooperate the branch is reported as
``undetermined`` and the receiver falls back to a fixed best-guess policy:
assume the first branch (the all-zeros one). That makes sub-threshold
fidelity a reproducible number instead of a coin flip over guesses.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import channels
from .qcore import (
    BASIS_X,
    BASIS_Z,
    DensityMatrix,
    PartyRegistry,
    StateVector,
    apply_pauli,
    bell_bits,
    bell_label,
    bell_measure,
    fidelity,
    measure_qubit,
    partial_trace,
    qubit_state,
    tensor,
)

BRANCH_ZEROS = "all-zeros"
BRANCH_DICKE = "dicke"
BRANCH_UNDETERMINED = "undetermined"
BRANCH_INVALID = "invalid"

# Pauli the receiver applies per Bell outcome when the pair sat in B1.
CORRECTIONS = {1: "I", 2: "Z", 3: "X", 4: "ZX"}

_LABEL_FOR_BITS = {(0, 0): "I", (1, 0): "Z", (0, 1): "X", (1, 1): "ZX"}

RUNNABLE_FAMILIES = ("phik", "phik2n", "phiprime", "ghz", "general", "mixed")


def correction_for(outcome_label: int, channel_label: int = 1) -> str:
    """Pauli restoring the receiver's qubit, given the Bell outcome on (T, A)
    and the Bell state the (A, B) pair actually sat in.

    Labels compose by XOR of their (phase, parity) bits; the all-zeros branch
    uses channel label 1, the Dicke branch label 2 (one extra Z).
    """
    po, qo = bell_bits(outcome_label)
    pc, qc = bell_bits(channel_label)
    return _LABEL_FOR_BITS[(po ^ pc, qo ^ qc)]


def correction_table() -> dict[tuple[int, str], str]:
    """(Bell outcome, branch) -> Pauli, for the two-branch threshold channels."""
    table = {}
    for lab in (1, 2, 3, 4):
        table[(lab, BRANCH_ZEROS)] = correction_for(lab, 1)
        table[(lab, BRANCH_DICKE)] = correction_for(lab, 2)
    return table


@dataclass
class ProtocolConfig:
    channel: channels.ChannelSpec
    input_state: StateVector
    cooperating: frozenset[int] = frozenset()
    seed: int = 0
    vote_fraction: float = 2.0 / 3.0
    votes: tuple[bool, ...] | None = None  # default: cooperating vote yes

    def __post_init__(self):
        if not isinstance(self.cooperating, frozenset):
            self.cooperating = frozenset(self.cooperating)
        bad = [i for i in self.cooperating if not 1 <= i <= self.channel.m]
        if bad:
            raise ValueError(f"cooperating supervisors {bad} outside 1..{self.channel.m}")


@dataclass
class Transcript:
    """Full record of one protocol run."""

    bell_outcomes: list[int]
    charlie_outcomes: list[tuple[int, int]]
    branch: str
    corrections: list[str]
    fidelity: float
    verdict: str | None = None
    vote_passed: bool | None = None
    probability: float | None = None  # branch weight when outcomes were forced

    def to_record(self) -> dict:
        return {
            "bell_outcomes": list(self.bell_outcomes),
            "charlie_outcomes": [list(t) for t in self.charlie_outcomes],
            "branch": self.branch,
            "corrections": list(self.corrections),
            "fidelity": self.fidelity,
            "verdict": self.verdict,
        }


def vote_passes(votes, fraction: float) -> bool:
    votes = list(votes)
    return bool(votes) and sum(bool(v) for v in votes) >= fraction * len(votes)


def branch_from_broadcast(broadcast, k: int, m: int) -> str:
    """Classify a full m-bit broadcast: all-zeros pattern, a valid Dicke
    pattern (exactly k-1 zeros), or an invalid pattern signalling a cheat."""
    bits = list(broadcast)
    if len(bits) != m or any(b not in (0, 1) for b in bits):
        raise ValueError(f"broadcast must be {m} bits, got {broadcast!r}")
    zeros = bits.count(0)
    if zeros == m:
        return BRANCH_ZEROS
    if zeros == k - 1:
        return BRANCH_DICKE
    return BRANCH_INVALID


def infer_branch_partial(announced: dict[int, int], k: int, m: int) -> str:
    """Branch inference from the cooperating supervisors' announcements only.

    With at least k announcements the branch is pinned (the all-zeros block
    never shows a 1; the Dicke block cannot hide all its ones from k
    observers). With fewer, the receiver learns nothing deterministic.
    """
    if len(announced) < k:
        return BRANCH_UNDETERMINED
    return BRANCH_DICKE if any(b == 1 for b in announced.values()) else BRANCH_ZEROS


def _n_pairs(spec: channels.ChannelSpec) -> int:
    return spec.n if spec.family in ("phik2n", "phiprime") else 1


def _branch_bell_labels(spec: channels.ChannelSpec, branch: str) -> list[int]:
    """Bell label of each (A_i, B_i) pair under the inferred/guessed branch."""
    n = _n_pairs(spec)
    if spec.family == "phiprime":
        seq = spec.r if branch != BRANCH_DICKE else spec.s
        return list(seq)
    if spec.family in ("general", "mixed"):
        for lab, slot in channels.active_slots(spec):
            if branch == slot:
                return [lab]
        lab, _ = channels.active_slots(spec)[0]  # best-guess: first branch
        return [lab]
    return [1 if branch != BRANCH_DICKE else 2] * n


def _classify_slots(spec: channels.ChannelSpec, announced: dict[int, int]) -> str:
    """Which C-block slot of a general/mixed channel fits the announcements."""
    m = spec.m
    slots = channels.active_slots(spec)
    plan = channels.slot_plan(slots[0][1])
    if plan == channels.PM_PLAN:
        if len(announced) < m:
            return BRANCH_UNDETERMINED
        parity = sum(announced.values()) % 2
        want = "even_pm" if parity == 0 else "odd_pm"
        for _, slot in slots:
            if slot == want:
                return slot
        return BRANCH_INVALID
    z0 = sum(1 for b in announced.values() if b == 0)
    z1 = len(announced) - z0
    fits = []
    for _, slot in slots:
        if slot == "zeros":
            ok = z1 == 0
        elif slot == "ones":
            ok = z0 == 0
        else:
            z = int(slot.split(":")[1])
            ok = z0 <= z and (z - z0) <= (m - len(announced)) and z1 <= m - z
        if ok:
            fits.append(slot)
    if not fits:
        return BRANCH_INVALID
    return fits[0] if len(fits) == 1 else BRANCH_UNDETERMINED


def _charlie_plan(spec: channels.ChannelSpec):
    if spec.family == "ghz":
        return BASIS_X
    if spec.family in ("general", "mixed"):
        plan = channels.slot_plan(channels.active_slots(spec)[0][1])
        return BASIS_X if plan == channels.PM_PLAN else BASIS_Z
    return BASIS_Z


def run_ct(
    config: ProtocolConfig,
    rng: np.random.Generator | None = None,
    forced_bell: tuple[int, ...] | None = None,
    forced_charlie: dict[int, int] | None = None,
) -> Transcript:
    """One controlled-teleportation run; see module docstring for the flow.

    Measurement outcomes are sampled from ``rng`` (seeded from the config by
    default) unless forced, which makes every stochastic path replayable.
    """
    spec = config.channel
    if spec.family not in RUNNABLE_FAMILIES:
        raise ValueError(
            f"family {spec.family!r} is built and analyzed but not run end to end")
    if spec.family == "ghz":
        return run_ghz_mm(spec.qubits - 2, config.input_state, config.cooperating,
                          rng=rng or np.random.default_rng(config.seed),
                          forced_bell=forced_bell, forced_charlie=forced_charlie)

    channel_state, registry = channels.build(spec)
    n = _n_pairs(spec)
    if config.input_state.num_qubits != n:
        raise ValueError(
            f"input has {config.input_state.num_qubits} qubits, channel teleports {n}")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    t_roles = ("T",) if n == 1 else tuple(f"T{i}" for i in range(1, n + 1))
    registry = registry.prepend(t_roles)
    state = tensor(config.input_state, channel_state)

    votes = config.votes
    if votes is None:
        votes = tuple(i in config.cooperating for i in range(1, spec.m + 1))
    passed = vote_passes(votes, config.vote_fraction)

    prob = 1.0
    bell_outcomes = []
    a_idx = registry.with_prefix("A")
    t_idx = registry.with_prefix("T")
    for i in range(n):
        force = forced_bell[i] if forced_bell else None
        label, state, p = bell_measure(state, (t_idx[i], a_idx[i]), rng=rng, force=force)
        bell_outcomes.append(label)
        prob *= p

    plan = _charlie_plan(spec)
    c_idx = registry.with_prefix("C")
    announced: dict[int, int] = {}
    charlie_outcomes = []
    for sup in sorted(config.cooperating):
        force = forced_charlie.get(sup) if forced_charlie else None
        bit, state, p = measure_qubit(state, c_idx[sup - 1], plan, rng=rng, force=force)
        announced[sup] = bit
        charlie_outcomes.append((sup, bit))
        prob *= p

    if spec.family in ("general", "mixed"):
        branch = _classify_slots(spec, announced)
    else:
        branch = infer_branch_partial(announced, spec.k, spec.m)

    pair_labels = _branch_bell_labels(spec, branch)
    b_idx = registry.with_prefix("B")
    corrections = []
    for i in range(n):
        pauli = correction_for(bell_outcomes[i], pair_labels[i])
        corrections.append(pauli)
        if pauli != "I":
            state = apply_pauli(state, b_idx[i], pauli)

    reduced = partial_trace(state, b_idx)
    fid = fidelity(config.input_state, reduced)
    return Transcript(bell_outcomes, charlie_outcomes, branch, corrections,
                      fid, vote_passed=passed, probability=prob)


def run_ghz_mm(
    m: int,
    input_state: StateVector,
    cooperating,
    rng: np.random.Generator | None = None,
    forced_bell: tuple[int, ...] | None = None,
    forced_charlie: dict[int, int] | None = None,
    announcement_flips: frozenset[int] = frozenset(),
) -> Transcript:
    """(m, m)-threshold run over GHZ(2+m): supervisors measure plus/minus and
    the parity of minus outcomes picks the branch (even -> B1, odd -> B2).

    ``announcement_flips`` lets supervisors lie: their measured bit is kept in
    the physics, the flipped bit enters the broadcast.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    cooperating = frozenset(cooperating)
    channel_state = channels.ghz_state(2 + m)
    registry = PartyRegistry(("T", "A", "B") + tuple(f"C{j}" for j in range(1, m + 1)))
    state = tensor(input_state, channel_state)

    label, state, p0 = bell_measure(state, (0, 1), rng=rng,
                                    force=forced_bell[0] if forced_bell else None)
    prob = p0

    announced: dict[int, int] = {}
    charlie_outcomes = []
    for sup in sorted(cooperating):
        force = forced_charlie.get(sup) if forced_charlie else None
        bit, state, p = measure_qubit(state, registry.index(f"C{sup}"), BASIS_X,
                                      rng=rng, force=force)
        prob *= p
        charlie_outcomes.append((sup, bit))
        announced[sup] = bit ^ (1 if sup in announcement_flips else 0)

    if len(announced) == m:
        parity = sum(announced.values()) % 2
        branch = BRANCH_ZEROS if parity == 0 else BRANCH_DICKE
    else:
        branch = BRANCH_UNDETERMINED  # best guess: even parity

    channel_label = 2 if branch == BRANCH_DICKE else 1
    pauli = correction_for(label, channel_label)
    b = registry.index("B")
    if pauli != "I":
        state = apply_pauli(state, b, pauli)

    reduced = partial_trace(state, [b])
    fid = fidelity(input_state, reduced)
    return Transcript([label], charlie_outcomes, branch, [pauli], fid,
                      probability=prob)


def enumerate_runs(config: ProtocolConfig):
    """Yield (probability, transcript) over every Bell x supervisor-outcome
    branch of a run. Probabilities sum to 1."""
    spec = config.channel
    n = _n_pairs(spec)
    coop = sorted(config.cooperating)
    for bells in itertools.product((1, 2, 3, 4), repeat=n):
        for bits in itertools.product((0, 1), repeat=len(coop)):
            forced_c = dict(zip(coop, bits))
            try:
                tr = run_ct(config, forced_bell=bells, forced_charlie=forced_c)
            except ValueError:
                continue  # zero-probability branch
            if tr.probability and tr.probability > 1e-15:
                yield tr.probability, tr


def average_fidelity(config: ProtocolConfig) -> float:
    """Exact outcome-averaged fidelity of a run."""
    return float(sum(p * tr.fidelity for p, tr in enumerate_runs(config)))


def threshold_sweep(k: int, m: int, alpha2: float = 0.3) -> list[dict]:
    """For each cooperation level l: is recovery deterministic, and what is
    the exact average fidelity for the fixed input sqrt(alpha2)|0> + ...|1>."""
    if not 1 <= k <= m <= 8:
        raise ValueError(f"need 1 <= k <= m <= 8, got k={k}, m={m}")
    psi = qubit_state(math.sqrt(alpha2), math.sqrt(1 - alpha2))
    rows = []
    for l in range(m + 1):
        config = ProtocolConfig(channels.phik_spec(k, m), psi,
                                cooperating=frozenset(range(1, l + 1)))
        avg = average_fidelity(config)
        rows.append({
            "cooperating": l,
            "deterministic": l >= k,
            "average_fidelity": avg,
        })
    return rows
