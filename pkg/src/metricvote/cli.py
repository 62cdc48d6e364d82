"""Experiment harness: generation, mechanism runs, LP evaluation, sweeps.

Every output file embeds the resolved configuration and seeds in its
header and contains no timestamps, so a rerun with the same seed and
``--jobs 1`` is byte-identical.  Exit codes: 0 success, 2 configuration
error, 3 data error, 4 theorem-falsification (a guaranteed structure was
not found).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .core import (
    Election,
    election_from_text,
    election_to_text,
    mask_voters,
    realized_distortion,
    truncate_to_ktop,
)
from .dataio import EUROVISION_WEIGHTS, F1_WEIGHTS, ScoringRule, load_csv, parse_schema, positional_score, scores_to_election
from .errors import ConfigError, DataFormatError, PreferenceCycleError, TheoremFalsificationError
from .instances import GeneratedInstance, generate, instance_sidecar, witness_from_jsonable
from .lp import distortion_of, minimax
from .mechanisms import balanced_rule, conjecture_probe, copeland, ktop_rule, plurality_matching, run_dr
from .sampling import child_seed, make_plan, sample_voters, sampled_phi
from .mechanisms import ThresholdDigraph, comparison_graph, king_vertex

MISSING_ENVELOPE_BASE = 3  # full-ranking guarantee used for the envelope column


@dataclass
class ExperimentConfig:
    command: str
    options: dict

    def header_lines(self) -> list[str]:
        lines = [f"# metricvote {__version__}", f"# command={self.command}"]
        for key in sorted(self.options):
            lines.append(f"# {key}={self.options[key]}")
        return lines


def _write_csv(path, config: ExperimentConfig, columns: list[str], rows: list[list]) -> None:
    out = config.header_lines()
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join("" if v is None else str(v) for v in row))
    _write(path, "\n".join(out) + "\n")


def _write_json(path, config: ExperimentConfig, payload: dict) -> None:
    doc = {"toolkit": f"metricvote {__version__}", "config": {"command": config.command, **config.options}}
    doc.update(payload)
    _write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _parse_params(spec: str | None) -> dict:
    params = {}
    if not spec:
        return params
    for item in spec.split(","):
        if "=" not in item:
            raise ConfigError(f"bad --params entry {item!r} (expected key=value)")
        key, value = item.split("=", 1)
        params[key.strip()] = _parse_number(value.strip())
    return params


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    if "/" in text:
        return Fraction(text)
    try:
        return float(text)
    except ValueError:
        return text


def _load_instance(args) -> GeneratedInstance:
    if getattr(args, "infile", None):
        e = election_from_text(Path(args.infile).read_text(encoding="utf-8"))
        witness = None
        schedule = None
        sidecar = Path(args.infile).with_suffix(".json")
        if sidecar.exists():
            obj = json.loads(sidecar.read_text(encoding="utf-8"))
            if obj.get("witness"):
                witness = witness_from_jsonable(obj["witness"])
            if obj.get("schedule"):
                schedule = tuple(tuple(tuple(p) for p in rnd) for rnd in obj["schedule"])
        return GeneratedInstance(e, witness, "file", {"path": args.infile}, schedule=schedule)
    if getattr(args, "generator", None):
        return generate(args.generator, _parse_params(args.params), args.seed)
    raise ConfigError("provide an instance via --in or --generator")


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return repr(float(x))
    if isinstance(x, float):
        return "inf" if math.isinf(x) else repr(x)
    return str(x)


# -- subcommands ---------------------------------------------------------------


def cmd_gen(args) -> int:
    gi = generate(args.generator, _parse_params(args.params), args.seed)
    base = Path(args.out)
    _write(base.with_suffix(".elec"), election_to_text(gi.election))
    sidecar = instance_sidecar(gi)
    config = ExperimentConfig("gen", {"generator": args.generator, "params": args.params or "", "seed": args.seed})
    _write_json(base.with_suffix(".json"), config, sidecar)
    return 0


def cmd_run(args) -> int:
    gi = _load_instance(args)
    e = gi.election
    payload: dict = {}
    if args.mechanism == "dr":
        schedule = gi.schedule if args.pairing == "schedule" else None
        if args.pairing == "schedule" and schedule is None:
            raise ConfigError("--pairing schedule needs an instance that ships one")
        pairing = "input" if args.pairing == "schedule" else args.pairing
        winner, transcript = run_dr(e, pairing=pairing, seed=args.seed, schedule=schedule)
        payload["transcript"] = transcript.events
        payload["comparisons"] = transcript.comparisons
    elif args.mechanism == "copeland":
        winner = copeland(e)
    elif args.mechanism == "plurality-matching":
        winner, phis = plurality_matching(e)
        payload["phi"] = [_fmt(p) for p in phis]
    elif args.mechanism == "ktop":
        if args.k is None:
            raise ConfigError("--mechanism ktop needs --k")
        winner = ktop_rule(e, args.k)
    elif args.mechanism == "balanced":
        if args.alpha is None:
            raise ConfigError("--mechanism balanced needs --alpha")
        winner = balanced_rule(e, args.alpha)
    elif args.mechanism == "conjecture-probe":
        if args.k is None:
            raise ConfigError("--mechanism conjecture-probe needs --k")
        probe = conjecture_probe(e, args.k)
        winner = probe.best_candidate
        payload["best_fraction"] = _fmt(probe.best_fraction)
        payload["threshold"] = _fmt(probe.threshold)
        payload["holds"] = probe.holds
    else:
        raise ConfigError(f"unknown mechanism {args.mechanism!r}")
    payload["winner"] = winner
    if gi.witness is not None:
        payload["realized_distortion"] = _fmt(realized_distortion(gi.witness, winner))
    config = ExperimentConfig(
        "run",
        {
            "mechanism": args.mechanism,
            "instance": args.infile or f"{args.generator}({args.params or ''})",
            "seed": args.seed,
            "k": args.k,
            "alpha": args.alpha,
            "pairing": args.pairing,
        },
    )
    _write_json(args.out, config, payload)
    return 0


def cmd_eval(args) -> int:
    gi = _load_instance(args)
    report = minimax(gi.election, alpha=args.alpha)
    config = ExperimentConfig(
        "eval",
        {"instance": args.infile or f"{args.generator}({args.params or ''})", "seed": args.seed, "alpha": args.alpha},
    )
    if args.format == "json":
        _write_json(args.out, config, {"report": report.to_json_dict()})
    else:
        rows = [
            [c, _fmt(report.per_candidate[c]), report.worst_opponent[c], int(c == report.winner)]
            for c in range(gi.election.m)
        ]
        _write_csv(args.out, config, ["candidate", "distortion", "worst_opponent", "winner"], rows)
    return 0


def _sweep_k_row(task):
    e_bytes, k = task
    e = e_bytes
    trunc = truncate_to_ktop(e, k)
    report = minimax(trunc)
    return k, report.winner, report.per_candidate[report.winner]


def cmd_sweep_k(args) -> int:
    rows = []
    include_ktop = args.mechanism == "minimax+ktop"
    for real in range(args.trials):
        seed = args.seed + real
        gi = generate("impartial-culture", {"n": args.n, "m": args.m}, seed)
        tasks = [(gi.election, k) for k in range(1, args.m + 1)]
        results = _pmap(_sweep_k_row, tasks, args.jobs)
        for (k, winner, dist) in results:
            row = [real, seed, k, winner, _fmt(dist)]
            if include_ktop:
                trunc = truncate_to_ktop(gi.election, k)
                kw = ktop_rule(trunc, k)
                kd, _ = distortion_of(trunc, kw)
                row += [kw, _fmt(kd)]
            rows.append(row)
    columns = ["realization", "seed", "k", "winner", "distortion"]
    if include_ktop:
        columns += ["ktop_winner", "ktop_distortion"]
    config = ExperimentConfig(
        "sweep-k",
        {"n": args.n, "m": args.m, "trials": args.trials, "seed": args.seed, "mechanism": args.mechanism, "jobs": args.jobs},
    )
    _write_csv(args.out, config, columns, rows)
    return 0


def _sweep_missing_row(task):
    e, masked_idx, eps_req = task
    masked = mask_voters(e, masked_idx)
    report = minimax(masked)
    eff = Fraction(len(masked_idx), e.n)
    envelope = math.inf if eff == 1 else MISSING_ENVELOPE_BASE + eff / (1 - eff) * (MISSING_ENVELOPE_BASE + 1)
    return eps_req, len(masked_idx), float(eff), report.winner, report.per_candidate[report.winner], envelope


def cmd_sweep_missing(args) -> int:
    import numpy as np

    grid = [float(x) for x in args.epsilon_grid.split(",")]
    for eps in grid:
        if not 0 <= eps < 1:
            raise ConfigError(f"epsilon grid entries must be in [0, 1), got {eps}")
    rows = []
    for real in range(args.trials):
        seed = args.seed + real
        gi = generate("impartial-culture", {"n": args.n, "m": args.m}, seed)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 1))))
        tasks = []
        for eps in grid:
            masked_count = math.ceil(eps * args.n)
            masked_idx = sorted(int(i) for i in rng.choice(args.n, size=masked_count, replace=False))
            tasks.append((gi.election, tuple(masked_idx), eps))
        results = _pmap(_sweep_missing_row, tasks, args.jobs)
        for eps_req, masked, eff, winner, dist, envelope in results:
            rows.append([real, seed, eps_req, masked, eff, winner, _fmt(dist), _fmt(envelope)])
    config = ExperimentConfig(
        "sweep-missing",
        {
            "n": args.n,
            "m": args.m,
            "trials": args.trials,
            "seed": args.seed,
            "epsilon_grid": args.epsilon_grid,
            "jobs": args.jobs,
        },
    )
    _write_csv(
        args.out,
        config,
        ["realization", "seed", "epsilon", "masked", "effective_epsilon", "winner", "distortion", "envelope"],
        rows,
    )
    return 0


def cmd_sample(args) -> int:
    from .sampling import sampled_copeland, sampled_plurality_matching

    gi = _load_instance(args)
    e = gi.election
    plan = make_plan(args.epsilon, args.delta, e.m, args.mode, args.seed)
    rows = []
    for trial in range(args.trials):
        seed = child_seed(args.seed, trial)
        t0 = time.perf_counter()
        phi_hat_max = None
        if args.mode == "copeland":
            sub, _ = sample_voters(e, make_plan(args.epsilon, args.delta, e.m, "copeland", seed))
            g = comparison_graph(sub)
            edges = set()
            for a in range(e.m):
                for b in range(a + 1, e.m):
                    if g.counts[a][b] > g.counts[b][a]:
                        edges.add((a, b))
                    elif g.counts[b][a] > g.counts[a][b]:
                        edges.add((b, a))
                    else:
                        edges.add((max(a, b), min(a, b)))
            winner = king_vertex(ThresholdDigraph(e.m, Fraction(1, 2), frozenset(edges)))
        else:
            sub, _ = sample_voters(e, make_plan(args.epsilon, args.delta, e.m, "plurality-matching", seed))
            phis = sampled_phi(e, sub)
            phi_hat_max = float(max(phis))
            winner = phis.index(max(phis))
        elapsed = (time.perf_counter() - t0) * 1000.0
        if gi.witness is not None:
            rd = _fmt(realized_distortion(gi.witness, winner))
        else:
            rd = _fmt(distortion_of(e, winner)[0])
        rows.append(
            [
                trial,
                args.seed,
                plan.size,
                winner,
                rd,
                "" if phi_hat_max is None else repr(phi_hat_max),
                round(elapsed, 3) if args.timing else None,
            ]
        )
    config = ExperimentConfig(
        "sample",
        {
            "mode": args.mode,
            "epsilon": args.epsilon,
            "delta": args.delta,
            "trials": args.trials,
            "seed": args.seed,
            "instance": args.infile or f"{args.generator}({args.params or ''})",
            "c": plan.size,
            "jobs": args.jobs,
        },
    )
    _write_csv(
        args.out,
        config,
        ["trial", "seed", "c", "winner", "realized_distortion", "phi_hat_max", "elapsed_ms"],
        rows,
    )
    return 0


def cmd_ingest(args) -> int:
    table = load_csv(args.infile, parse_schema(args.schema))
    if args.drop:
        dropped = {name.strip() for name in args.drop.split(",")}
        unknown = dropped - set(table.candidates)
        if unknown:
            raise DataFormatError(f"--drop names not in the table: {sorted(unknown)}")
        from .dataio import ScoreTable

        table = ScoreTable(tuple(r for r in table.rows if r[1] not in dropped))
    e = scores_to_election(table)
    base = Path(args.out)
    _write(base.with_suffix(".elec"), election_to_text(e))
    payload = {
        "voters": list(table.voters),
        "candidates": list(table.candidates),
        "n": e.n,
        "m": e.m,
    }
    if args.scoring:
        weights = {"eurovision": EUROVISION_WEIGHTS, "f1": F1_WEIGHTS}.get(args.scoring)
        if weights is None:
            raise ConfigError(f"unknown scoring rule {args.scoring!r}")
        totals, winner = positional_score(e, ScoringRule(weights))
        payload["scoring_totals"] = list(totals)
        payload["scoring_winner"] = winner
        payload["scoring_winner_name"] = table.candidates[winner]
    config = ExperimentConfig("ingest", {"in": str(args.infile), "schema": args.schema, "scoring": args.scoring})
    _write_json(base.with_suffix(".json"), config, payload)
    return 0


# -- plumbing -------------------------------------------------------------------


def _pmap(fn, tasks, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metricvote", description=__doc__)
    parser.add_argument("--version", action="version", version=f"metricvote {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def instance_flags(p):
        p.add_argument("--in", dest="infile", help="election text file (.elec)")
        p.add_argument("--generator", help="named instance generator")
        p.add_argument("--params", help="generator parameters, key=value[,key=value...]")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gen", help="generate an instance: election file plus JSON sidecar")
    p.add_argument("--generator", required=True)
    p.add_argument("--params")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output basename")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run an ordinal mechanism on an instance")
    instance_flags(p)
    p.add_argument("--mechanism", required=True,
                   choices=["dr", "copeland", "plurality-matching", "ktop", "balanced", "conjecture-probe"])
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--pairing", default="input", choices=["input", "reversed", "shuffle", "schedule"])
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="instance-optimal LP evaluation (minimax)")
    instance_flags(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--format", default="json", choices=["csv", "json"])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-k", help="distortion of minimax as k-top information grows")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--trials", type=int, default=5, help="random realizations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mechanism", default="minimax", choices=["minimax", "minimax+ktop"])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("sweep-missing", help="distortion as voters go silent")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon-grid", default="0.8,0.6,0.4,0.2,0")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep_missing)

    p = sub.add_parser("sample", help="Monte Carlo study of the sampled mechanisms")
    instance_flags(p)
    p.add_argument("--mode", required=True, choices=["copeland", "plurality-matching"])
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--timing", action="store_true", help="fill the elapsed_ms column (breaks byte-identical reruns)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("ingest", help="CSV score table to election file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--schema", required=True, help="eurovision | f1 | generic:voter,candidate,score")
    p.add_argument("--scoring", help="also apply a positional rule: eurovision | f1")
    p.add_argument("--drop", help="comma-separated candidate names to drop (plots only; unused in tables)")
    p.add_argument("--out", required=True, help="output basename")
    p.set_defaults(func=cmd_ingest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args) or 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, PreferenceCycleError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except TheoremFalsificationError as exc:
        print(f"theorem falsification: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
