"""Batch experiment runner.

Every subcommand prints one JSON document to stdout:
{"command", "config", "seed", "versions", "results"}; identical config and
seed give byte-identical output. ``--out`` additionally writes the document
to a file, ``--csv`` exports tabular results. Exit codes: 0 success,
2 invalid configuration, 3 a requested check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__, adversary, channels, entanglement, gametheory, protocol
from .channels import ChannelSpec, ChannelSpecError
from .qcore import DensityMatrix, StateVector, qubit_state, random_state, schmidt_rank

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_CHECK_FAILED = 3


class CheckFailure(Exception):
    pass


def _csv_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _spec_from_args(args) -> ChannelSpec:
    kwargs = dict(family=args.family, n=args.n, k=args.k, m=args.m,
                  qubits=args.qubits, bell_label=args.bell_label)
    if args.r:
        kwargs["r"] = _csv_int_list(args.r)
    if args.s:
        kwargs["s"] = _csv_int_list(args.s)
    if args.j:
        kwargs["j"] = tuple(args.j.split(","))
    if args.x:
        kwargs["x"] = tuple(float(v) for v in args.x.split(","))
    if args.slots:
        kwargs["slots"] = tuple(args.slots.split(","))
    spec = ChannelSpec(**kwargs)
    spec.validate()
    return spec


def _add_channel_flags(p: argparse.ArgumentParser, default_family: str = "phik"):
    p.add_argument("--family", default=default_family, choices=channels.FAMILIES)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--qubits", type=int, default=0)
    p.add_argument("--bell-label", type=int, default=1, dest="bell_label")
    p.add_argument("--r", default="", help="comma list of Bell labels (phiprime)")
    p.add_argument("--s", default="", help="comma list of Bell labels (phiprime)")
    p.add_argument("--j", default="", help="comma list of Pauli marks (phi2prime/phi3prime)")
    p.add_argument("--x", default="", help="four branch weights (general/mixed)")
    p.add_argument("--slots", default="", help="four C-block slot names (general/mixed)")


def _input_state(args, n: int, rng) -> StateVector:
    if args.alpha2 is not None:
        if not 0 <= args.alpha2 <= 1:
            raise ChannelSpecError("--alpha2 must be in [0, 1]")
        one = qubit_state(math.sqrt(args.alpha2), math.sqrt(1 - args.alpha2))
        state = one
        for _ in range(n - 1):
            from .qcore import tensor
            state = tensor(state, one)
        return state
    return random_state(n, rng)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_channel(args) -> dict:
    spec = _spec_from_args(args)
    state, registry = channels.build(spec)
    results: dict = {"registry": list(registry.roles), "num_qubits": state.num_qubits}
    if isinstance(state, StateVector):
        results["amplitudes"] = [
            {"basis": bits, "re": amp.real, "im": amp.imag}
            for bits, amp in state.nonzero_terms()
        ]
        n = state.num_qubits
        if n <= 12:
            ranks = []
            for cut in range(1, 2 ** (n - 1)):
                subset = [q for q in range(n) if (cut >> q) & 1]
                ranks.append(schmidt_rank(state, subset))
            results["min_bipartition_rank"] = min(ranks)
        c_idx = registry.with_prefix("C")
        if len(c_idx) >= 2:
            results["c_permutation_symmetric"] = _c_permutation_symmetric(state, c_idx)
    else:
        results["trace"] = float(np.trace(state.matrix).real)
        results["purity"] = state.purity()
    return results


def _c_permutation_symmetric(state: StateVector, c_idx) -> bool:
    t = state.tensor_view()
    for i in range(len(c_idx) - 1):
        swapped = np.swapaxes(t, c_idx[i], c_idx[i + 1])
        if not np.allclose(t, swapped, atol=1e-10):
            return False
    return True


def cmd_teleport(args) -> dict:
    rng = np.random.default_rng(args.seed)
    if args.sweep:
        rows = protocol.threshold_sweep(args.k, args.m,
                                        alpha2=args.alpha2 if args.alpha2 is not None else 0.3)
        if args.check and any(r["deterministic"] and r["average_fidelity"] < 1 - 1e-9
                              for r in rows):
            raise CheckFailure("deterministic row below fidelity 1")
        return {"sweep": rows}
    spec = _spec_from_args(args)
    n = spec.n if spec.family in ("phik2n", "phiprime") else 1
    if spec.family == "ghz" and spec.qubits == 0:
        spec = ChannelSpec("ghz", qubits=2 + spec.m)
    psi = _input_state(args, n, rng)
    config = protocol.ProtocolConfig(spec, psi,
                                     cooperating=frozenset(_csv_int_list(args.cooperate)),
                                     seed=args.seed)
    tr = protocol.run_ct(config, rng=rng)
    if args.check and tr.fidelity < 1 - 1e-9:
        raise CheckFailure(f"fidelity {tr.fidelity} below 1")
    return {"transcript": tr.to_record()}


def cmd_cheat(args) -> dict:
    if args.ghz_fidelity:
        alpha2 = args.alpha2 if args.alpha2 is not None else 0.3
        fid = adversary.wrong_state_fidelity_ghz(
            args.m, args.liars, math.sqrt(alpha2), math.sqrt(1 - alpha2), seed=args.seed)
        return {"m": args.m, "liar_count": args.liars, "alpha2": alpha2, "fidelity": fid}
    if args.grid:
        rows = adversary.comparison_grid(args.max_m)
        if args.check and any(r["anchor"] and not r["match_corrected"] for r in rows):
            raise CheckFailure("anchor row disagrees with the oracle")
        return {"grid": rows}
    liar_ids = (_csv_int_list(args.liar_ids) if args.liar_ids
                else tuple(range(1, args.liars + 1)))
    report = adversary.cheat_monte_carlo(args.k, args.m, liar_ids, args.trials,
                                         seed=args.seed, policy=args.policy)
    report.p_analytic = adversary.cheat_detection_analytic(
        args.k, args.m, len(liar_ids)) if len(liar_ids) < args.m else None
    if args.check and not report.match:
        raise CheckFailure("Monte Carlo disagrees with the oracle beyond 3 sigma")
    return {"report": report.to_record()}


def cmd_attack(args) -> dict:
    spec = _spec_from_args(args)
    kind = args.kind.replace("-", "_")
    attack = None
    if kind != "none":
        attack = adversary.BobAttack(kind, t=args.t if args.t else args.k)
    post = adversary.bob_attack(spec, attack)
    authentic, _ = channels.build(spec)
    report_auth = adversary.correlation_check(authentic, spec,
                                              check_rounds=args.rounds, seed=args.seed)
    report_post = adversary.correlation_check(post, spec,
                                              check_rounds=args.rounds, seed=args.seed)
    if args.check:
        if report_auth.verdict != "pass":
            raise CheckFailure("authentic channel failed its own correlators")
        if attack is not None and report_post.verdict != "fail":
            raise CheckFailure("attack went undetected")
    return {"authentic": report_auth.to_record(), "attacked": report_post.to_record()}


def cmd_game(args) -> dict:
    if args.p_identify is not None:
        p_id = args.p_identify
        p_ex = 1.0
    else:
        oracle = adversary.cheat_detection_oracle(args.k, args.m, {1})
        p_id = oracle.p_identify
        p_ex = oracle.p_exact
    params = gametheory.PayoffParams(G=args.G, P=args.P, punish_mode=args.punish_mode,
                                     p_identify=p_id, p_existence=p_ex)
    payoff = lambda prof: gametheory.charlie_payoff(prof, params)
    honest = [gametheory.HONEST] * args.l
    nash, margins = gametheory.is_nash(honest, payoff)
    results = {
        "p_identify": p_id,
        "p_existence": p_ex,
        "all_honest_nash": nash,
        "all_honest_margins": margins,
        "pure_nash_profiles": ["".join("H" if a == gametheory.HONEST else "C" for a in prof)
                               for prof in gametheory.enumerate_pure_nash(args.l, payoff)],
    }
    if args.sweep:
        lo, hi, steps = (float(x) for x in args.sweep.split(":"))
        ratios = [lo + (hi - lo) * i / (int(steps) - 1) for i in range(int(steps))]
        results["threshold_sweep"] = gametheory.honesty_threshold_sweep(args.l, params, ratios)
    if args.pd:
        r, s, t = (float(x) for x in args.pd.split(","))
        pd = gametheory.PDParams(r, s, t)
        pd_payoff = lambda prof: gametheory.pd_payoff(prof, pd)
        defect = [gametheory.CHEAT] * args.l
        nash_d, margins_d = gametheory.is_nash(defect, pd_payoff)
        results["pd_mutual_defection_nash"] = nash_d
        results["pd_margins"] = margins_d
    if args.check and not results["all_honest_nash"]:
        raise CheckFailure("all-honest profile is not a Nash equilibrium")
    return results


def cmd_persistency(args) -> dict:
    if args.states:
        names = args.states.split(",")
        claims = [int(c) for c in args.claims.split(",")]
        targets = [{"state": n, "claim": c} for n, c in zip(names, claims)]
    else:
        targets = entanglement.default_pe_targets()
        if args.quick:
            targets = [t for t in targets
                       if entanglement.build_named_state(t["state"]).num_qubits <= 6]
    rows = entanglement.pe_table(targets, falsify_trials=args.trials, seed=args.seed)
    for row in rows:
        row.pop("seconds", None)  # keep output byte-stable across runs
    if args.check and not all(r["agree"] for r in rows):
        raise CheckFailure("persistency table disagrees with the targets")
    return {"table": rows}


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctsim",
        description="threshold controlled-teleportation experiments")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default flag values")
    common.add_argument("--out", help="also write the JSON document here")
    common.add_argument("--csv", help="export tabular results as CSV")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--check", action="store_true",
                        help="exit 3 unless the run meets its built-in assertion")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("channel", help="build and inspect a channel", parents=[common])
    _add_channel_flags(p)

    p = sub.add_parser("teleport", help="run the teleportation protocol", parents=[common])
    _add_channel_flags(p)
    p.add_argument("--cooperate", default="", help="comma list of supervisor ids")
    p.add_argument("--alpha2", type=float, default=None,
                   help="|alpha|^2 of the input (default: Haar-random input)")
    p.add_argument("--sweep", action="store_true", help="average fidelity per cooperation level")

    p = sub.add_parser("cheat", help="cheat-detection probabilities", parents=[common])
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--liars", type=int, default=1, help="number of liars (ids 1..l)")
    p.add_argument("--liar-ids", default="", dest="liar_ids")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--policy", default=adversary.POLICY_FLIP,
                   choices=(adversary.POLICY_FLIP, adversary.POLICY_RANDOM))
    p.add_argument("--grid", action="store_true", help="oracle vs closed forms over a grid")
    p.add_argument("--max-m", type=int, default=6, dest="max_m")
    p.add_argument("--ghz-fidelity", action="store_true", dest="ghz_fidelity",
                   help="wrong-state fidelity of the GHZ scheme under liars")
    p.add_argument("--alpha2", type=float, default=None)

    p = sub.add_parser("attack", help="receiver channel attacks and the correlation check",
                       parents=[common])
    _add_channel_flags(p)
    p.add_argument("--kind", default="measure-resend",
                   choices=("measure-resend", "ghz-substitute", "none"))
    p.add_argument("--t", type=int, default=0, help="intercepted particles (default k)")
    p.add_argument("--rounds", type=int, default=0, help="sampled check rounds (0 = exact only)")

    p = sub.add_parser("game", help="supervisors' game and Nash checks", parents=[common])
    p.add_argument("--l", type=int, default=2, help="number of potential traitors")
    p.add_argument("--G", type=float, default=1.0)
    p.add_argument("--P", type=float, default=4.0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--p-identify", type=float, default=None, dest="p_identify")
    p.add_argument("--punish-mode", default=gametheory.PUNISH_ON_IDENTIFICATION,
                   dest="punish_mode",
                   choices=(gametheory.PUNISH_ON_IDENTIFICATION,
                            gametheory.PUNISH_ON_EXISTENCE_SHARED))
    p.add_argument("--sweep", default="", help="P/G sweep as lo:hi:steps")
    p.add_argument("--pd", default="", help="classic dilemma payoffs r,s,t")

    p = sub.add_parser("persistency", help="persistency-of-entanglement table",
                       parents=[common])
    p.add_argument("--targets", default="published", choices=("published", "paper"),
                   help="check against the published reference values")
    p.add_argument("--states", default="", help="comma list like ghz(4),w(5)")
    p.add_argument("--claims", default="", help="comma list of expected values")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--quick", action="store_true", help="restrict to states of <= 6 qubits")

    return parser


_COMMANDS = {
    "channel": cmd_channel,
    "teleport": cmd_teleport,
    "cheat": cmd_cheat,
    "attack": cmd_attack,
    "game": cmd_game,
    "persistency": cmd_persistency,
}

_TABLE_KEYS = ("sweep", "grid", "table", "threshold_sweep")


def _apply_config_file(args, parser):
    if not args.config:
        return args
    with open(args.config) as fh:
        defaults = json.load(fh)
    if not isinstance(defaults, dict):
        raise ChannelSpecError("--config must hold a flat JSON object")
    argv = sys.argv[1:]
    for key, value in defaults.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ChannelSpecError(f"unknown config key {key!r}")
        flag = "--" + key.replace("_", "-")
        if flag not in argv:  # command-line flags win
            setattr(args, dest, value)
    return args


def _write_csv(path: str, results: dict) -> None:
    rows = None
    for key in _TABLE_KEYS:
        if isinstance(results.get(key), list):
            rows = results[key]
            break
    if not rows:
        raise ChannelSpecError("no tabular results to export as CSV")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config_file(args, parser)
        results = _COMMANDS[args.command](args)
    except CheckFailure as exc:
        print(json.dumps({"error": str(exc), "kind": "check_failed"}, sort_keys=True))
        return EXIT_CHECK_FAILED
    except (ChannelSpecError, ValueError, OSError, KeyError) as exc:
        print(json.dumps({"error": str(exc), "kind": "invalid_config"}, sort_keys=True))
        return EXIT_BAD_CONFIG

    document = {
        "command": args.command,
        "config": {k: v for k, v in sorted(vars(args).items())
                   if k not in ("config", "out", "csv") and not callable(v)},
        "seed": args.seed,
        "versions": {"ctsim": __version__, "numpy": np.__version__},
        "results": results,
    }
    text = json.dumps(document, indent=2, sort_keys=True, default=str)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if args.csv:
        _write_csv(args.csv, results)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
