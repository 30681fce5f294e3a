"""Supervisors' cheating game and Nash-equilibrium checks.

The l potential traitors each choose honest or cheat. A sole cheater blocks
the recovery (every traitor values that at +G) but risks punishment -P,
weighted by the probability the detection machinery pins him; two or more
cheaters still block recovery and, in this stylized game, escape penalty
because no single culprit can be pinned; all-honest achieves nothing and
costs nothing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

HONEST = "honest"
CHEAT = "cheat"

PUNISH_ON_IDENTIFICATION = "on_identification"
PUNISH_ON_EXISTENCE_SHARED = "on_existence_shared"


@dataclass(frozen=True)
class PayoffParams:
    G: float = 1.0  # value of blocking the recovery, per traitor
    P: float = 4.0  # penalty when punished
    punish_mode: str = PUNISH_ON_IDENTIFICATION
    p_identify: float = 0.5  # culprit-identification probability (sole cheater)
    p_existence: float = 1.0  # existence-detection probability

    def __post_init__(self):
        if self.G <= 0 or self.P <= 0:
            raise ValueError("G and P must be positive")
        if self.punish_mode not in (PUNISH_ON_IDENTIFICATION, PUNISH_ON_EXISTENCE_SHARED):
            raise ValueError(f"unknown punish mode {self.punish_mode!r}")

    @property
    def p_punish(self) -> float:
        return (self.p_identify if self.punish_mode == PUNISH_ON_IDENTIFICATION
                else self.p_existence)


@dataclass(frozen=True)
class PDParams:
    """Classic multi-player prisoners-dilemma payoffs (years commuted)."""

    r: float = 3.0  # sole confessor's reward; deniers lose r
    s: float = 2.0  # all deny
    t: float = 1.0  # all confess

    def __post_init__(self):
        if not self.t < self.s < self.r:
            raise ValueError("need t < s < r")


def charlie_payoff(profile, params: PayoffParams) -> list[float]:
    """Payoff per traitor for a profile of 'honest'/'cheat' choices."""
    profile = list(profile)
    if not profile or any(a not in (HONEST, CHEAT) for a in profile):
        raise ValueError(f"profile must be nonempty over {{honest, cheat}}, got {profile}")
    cheaters = [i for i, a in enumerate(profile) if a == CHEAT]
    if not cheaters:
        return [0.0] * len(profile)
    payoffs = [params.G] * len(profile)
    if len(cheaters) == 1:
        payoffs[cheaters[0]] -= params.p_punish * params.P
    return payoffs


def pd_payoff(profile, params: PDParams) -> list[float]:
    """Prisoners-dilemma payoffs: confess = defect, deny = cooperate."""
    profile = list(profile)
    confessors = [a == CHEAT for a in profile]
    if all(confessors):
        return [params.t] * len(profile)
    if not any(confessors):
        return [params.s] * len(profile)
    return [params.r if c else -params.r for c in confessors]


def is_nash(profile, payoff_fn) -> tuple[bool, list[float]]:
    """True iff no player strictly gains by unilateral deviation.

    Also returns per-player margins: own payoff minus the best deviation
    payoff (nonnegative margins everywhere means Nash).
    """
    profile = list(profile)
    base = payoff_fn(profile)
    margins = []
    for i, action in enumerate(profile):
        other = CHEAT if action == HONEST else HONEST
        deviated = profile[:i] + [other] + profile[i + 1:]
        margins.append(base[i] - payoff_fn(deviated)[i])
    return all(mg >= 0 for mg in margins), margins


def enumerate_pure_nash(l: int, payoff_fn) -> list[tuple[str, ...]]:
    """All pure-strategy Nash profiles over l players, by exhaustive check."""
    if not 1 <= l <= 16:
        raise ValueError("l must be 1..16")
    found = []
    for profile in itertools.product((HONEST, CHEAT), repeat=l):
        ok, _ = is_nash(list(profile), payoff_fn)
        if ok:
            found.append(profile)
    return found


def honesty_threshold_sweep(l: int, params: PayoffParams, ratios) -> list[dict]:
    """Nash verdict for the all-honest profile as P/G sweeps through the
    p_punish * P = G boundary."""
    rows = []
    for ratio in ratios:
        p = PayoffParams(G=params.G, P=ratio * params.G,
                         punish_mode=params.punish_mode,
                         p_identify=params.p_identify,
                         p_existence=params.p_existence)
        ok, margins = is_nash([HONEST] * l, lambda prof: charlie_payoff(prof, p))
        rows.append({
            "P_over_G": ratio,
            "all_honest_nash": ok,
            "margin": margins[0],
        })
    return rows
