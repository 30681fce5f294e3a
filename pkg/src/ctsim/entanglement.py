"""Persistency of entanglement and reduced-state distinguishers.

Persistency P_e of an N-qubit pure state: the minimum number of local
measurements after which the state is completely disentangled for *every*
outcome. We report a constructive upper bound (an exhaustive search over
short measurement sequences drawn from a basis catalog, default {Z, X, Y})
plus sampled falsification evidence that no shorter sequence exists over
random Bloch bases. The upper bound is exact within the catalog;
the lower side is evidence, not proof.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import channels
from .qcore import (
    BASES,
    DensityMatrix,
    MeasurementBasis,
    PartyRegistry,
    StateVector,
    is_ppt,
    partial_trace,
    schmidt_rank,
    trace_distance,
)

_PRODUCT_TOL = 1e-9
_BRANCH_TOL = 1e-12


@dataclass
class PersistencyResult:
    upper_bound: int | None
    certified_sequence: list[tuple[int, str]] = field(default_factory=list)
    falsification_trials: int = 0
    lower_evidence: int = 0  # largest r where sampled strategies all failed

    def to_record(self) -> dict:
        return {
            "upper_bound": self.upper_bound,
            "certified_sequence": [list(t) for t in self.certified_sequence],
            "falsification_trials": self.falsification_trials,
            "lower_evidence": self.lower_evidence,
        }


def _purity_of_qubit(amps: np.ndarray, num_qubits: int, qubit: int) -> float:
    left = 2**qubit
    right = 2 ** (num_qubits - qubit - 1)
    view = amps.reshape(left, 2, right)
    g = np.einsum("iaj,ibj->ab", view, view.conj())
    return float(np.sum(np.abs(g) ** 2).real)


def is_fully_product(amps: np.ndarray, num_qubits: int, tol: float = _PRODUCT_TOL) -> bool:
    """Every single-qubit cut of a normalized pure state has purity 1."""
    for q in range(num_qubits - 1, 0, -1):
        if _purity_of_qubit(amps, num_qubits, q) < 1 - tol:
            return False
    if num_qubits >= 2 and _purity_of_qubit(amps, num_qubits, 0) < 1 - tol:
        return False
    return True


def _project_out(amps: np.ndarray, num_qubits: int, qubit: int, bra: np.ndarray) -> np.ndarray:
    """Contract <bra| on one qubit, removing it from the register."""
    left = 2**qubit
    right = 2 ** (num_qubits - qubit - 1)
    view = amps.reshape(left, 2, right)
    return (bra[0].conjugate() * view[:, 0, :] + bra[1].conjugate() * view[:, 1, :]).reshape(-1)


def sequence_disentangles(state: StateVector, sequence) -> bool:
    """True if measuring ``sequence`` = [(qubit, basis), ...] leaves a fully
    product state on every outcome branch. Qubits must be distinct."""
    seq = sorted(((q, b) for q, b in sequence), key=lambda t: -t[0])
    if len({q for q, _ in seq}) != len(seq):
        raise ValueError("sequence must measure distinct qubits")

    def walk(amps, n, rest) -> bool:
        if not rest:
            return is_fully_product(amps, n)
        (q, basis), tail = rest[0], rest[1:]
        vecs = basis.vectors if isinstance(basis, MeasurementBasis) else BASES[basis].vectors
        for b in (0, 1):
            branch = _project_out(amps, n, q, vecs[b])
            p = float(np.sum(np.abs(branch) ** 2))
            if p < _BRANCH_TOL:
                continue
            if not walk(branch / math.sqrt(p), n - 1, tail):
                return False
        return True

    return walk(state.amplitudes, state.num_qubits, seq)


def persistency_upper(state: StateVector, catalog=("Z", "X", "Y"),
                      max_depth: int | None = None) -> PersistencyResult:
    """Minimal r (within the catalog, up to ``max_depth``) such that some
    r-qubit measurement sequence disentangles every outcome branch.

    Searches sequences breadth-first over qubit subsets and basis
    assignments; measurement operators on distinct qubits commute, so subsets
    suffice. Returns upper_bound None if no certificate exists within depth.
    """
    n = state.num_qubits
    if max_depth is None:
        max_depth = n - 1
    max_depth = min(max_depth, n - 1)
    bases = [(name, BASES[name]) for name in catalog]
    if is_fully_product(state.amplitudes, n):
        return PersistencyResult(0, [])
    for r in range(1, max_depth + 1):
        for qubits in itertools.combinations(range(n), r):
            for assignment in itertools.product(bases, repeat=r):
                seq = [(q, basis) for q, (_, basis) in zip(qubits, assignment)]
                if sequence_disentangles(state, seq):
                    named = [(q, name) for q, (name, _) in zip(qubits, assignment)]
                    return PersistencyResult(r, named)
    return PersistencyResult(None)


def persistency_falsify(state: StateVector, r: int, trials: int,
                        seed: int = 0) -> PersistencyResult:
    """Sample random r-measurement strategies (distinct qubits, Haar-random
    Bloch bases); if none disentangles, that is evidence P_e > r."""
    if r < 0:
        raise ValueError("r must be >= 0")
    n = state.num_qubits
    rng = np.random.default_rng(seed)
    if r == 0:
        found = is_fully_product(state.amplitudes, n)
        return PersistencyResult(0 if found else None,
                                 falsification_trials=trials,
                                 lower_evidence=0 if found else r)
    for trial in range(trials):
        qubits = rng.choice(n, size=r, replace=False)
        seq = []
        for q in qubits:
            theta = math.acos(1 - 2 * rng.random())
            phi = 2 * math.pi * rng.random()
            seq.append((int(q), MeasurementBasis.bloch(theta, phi)))
        if sequence_disentangles(state, seq):
            named = [(q, b.name) for q, b in seq]
            return PersistencyResult(r, named, falsification_trials=trial + 1,
                                     lower_evidence=r - 1)
    return PersistencyResult(None, falsification_trials=trials, lower_evidence=r)


def reduced_compare(state_a, registry_a: PartyRegistry,
                    state_b, registry_b: PartyRegistry,
                    traced_roles) -> dict:
    """Trace the given roles out of both states and compare the reductions.

    Reports the trace distance, an equal/differ verdict at 1e-10, and (for
    two-qubit reductions) the partial-transpose separability verdict of each.
    """
    traced = list(traced_roles)
    keep_a = sorted(set(range(state_a.num_qubits)) - {registry_a.index(r) for r in traced})
    keep_b = sorted(set(range(state_b.num_qubits)) - {registry_b.index(r) for r in traced})
    if len(keep_a) != len(keep_b):
        raise ValueError("kept registers have different sizes")
    red_a = state_a if isinstance(state_a, DensityMatrix) and not traced else partial_trace(state_a, keep_a)
    red_b = state_b if isinstance(state_b, DensityMatrix) and not traced else partial_trace(state_b, keep_b)
    dist = trace_distance(red_a, red_b)
    out = {
        "verdict": "equal" if dist < 1e-10 else "differ",
        "distance": dist,
    }
    if red_a.num_qubits == 2:
        out["ppt_a"] = is_ppt(red_a)
        out["ppt_b"] = is_ppt(red_b)
    return out


# ---------------------------------------------------------------------------
# persistency comparison table
# ---------------------------------------------------------------------------

def default_pe_targets() -> list[dict]:
    """The published persistency values this package checks itself against."""
    targets = []
    for n in range(3, 9):
        targets.append({"state": f"ghz({n})", "claim": 1})
    for n in range(3, 7):
        targets.append({"state": f"w({n})", "claim": n - 1})
    for n in range(3, 9):
        targets.append({"state": f"cluster({n})", "claim": n // 2})
    for m in range(1, 8):
        for k in range(1, m + 1):
            targets.append({"state": f"phik({k},{m})", "claim": k + 1})
    targets.append({"state": "phi3prime(2,1,1)", "claim": 3})
    return targets


def build_named_state(name: str) -> StateVector:
    """Build a state from the compact names used in the persistency table."""
    kind, _, args = name.partition("(")
    nums = [int(x) for x in args.rstrip(")").split(",")] if args.rstrip(")") else []
    if kind == "ghz":
        return channels.ghz_state(nums[0])
    if kind == "w":
        return channels.w_state(nums[0])
    if kind == "cluster":
        return channels.linear_cluster_state(nums[0])
    if kind == "graph":
        return channels.star_graph_channel(nums[0])
    if kind == "phik":
        return channels.threshold_channel(nums[0], nums[1])
    if kind == "phik2n":
        return channels.multi_pair_threshold_channel(nums[0], nums[1], nums[2])
    if kind == "phi3prime":
        n, k, m = nums
        state, _ = channels.build(channels.ChannelSpec(
            "phi3prime", n=n, k=k, m=m, j=("z",) * n))
        return state
    raise ValueError(f"unknown state name {name!r}")


def pe_table(targets: list[dict] | None = None, falsify_trials: int = 10_000,
             seed: int = 0, max_depth_slack: int = 1) -> list[dict]:
    """Constructive upper bound vs published claim per target state, with
    sampled falsification at claim-1.

    ``agree`` requires the upper bound to equal the claim and the sampling to
    find no shorter disentangling sequence. The upper-bound search runs to
    claim + ``max_depth_slack`` so a genuinely larger value is reported
    rather than hidden.
    """
    rows = []
    for i, target in enumerate(targets if targets is not None else default_pe_targets()):
        name, claim = target["state"], target["claim"]
        state = build_named_state(name)
        t0 = time.perf_counter()
        upper = persistency_upper(state, max_depth=min(claim + max_depth_slack,
                                                       state.num_qubits - 1))
        falsify = persistency_falsify(state, claim - 1, falsify_trials, seed=seed + i)
        rows.append({
            "state": name,
            "claim": claim,
            "upper_bound": upper.upper_bound,
            "falsify_depth": claim - 1,
            "trials": falsify.falsification_trials,
            "shorter_found": falsify.upper_bound is not None,
            "agree": upper.upper_bound == claim and falsify.upper_bound is None,
            "seconds": round(time.perf_counter() - t0, 3),
        })
    return rows
