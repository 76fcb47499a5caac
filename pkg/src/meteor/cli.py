"""Command-line entry point: ``meteor run``, ``meteor list`` and ``meteor oracle``.

``meteor run`` takes flags, a JSON config file, or both (flags win).  It
prints the effective configuration, writes ``<experiment>.json`` plus any
CSV tables into ``--out`` and exits 0 exactly when every claim passes.
Exit status 1 means some claim failed, 2 a bad configuration, 3 a run
that hit its time budget (the partial report is flagged ``incomplete``).
"""

from __future__ import annotations

import argparse
import csv
import json
import multiprocessing as mp
import os
import sys
from dataclasses import dataclass, field

from .errors import ValidationError
from .experiments import DEFAULTS, REGISTRY, effective_config, run_experiment
from .experiments.exact import write_table_csv
from .experiments.report import Claim, Report
from .graph import parse_graph_spec
from .oracle import probability_table

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INCOMPLETE = 0, 1, 2, 3


class ConfigError(ValidationError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    overrides: dict = field(default_factory=dict)
    out: str | None = None
    budget: float | None = None

    def effective(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed,
                **effective_config(self.experiment, self.overrides)}


def _graph_string(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, dict):
        kind = value.get("kind")
        try:
            if kind in ("cycle", "complete"):
                return f"{kind}:{int(value['k'])}"
            if kind == "torus":
                return f"torus:{int(value['n'])}:{int(value['d'])}"
        except KeyError as e:
            raise ConfigError(f"graph: missing field {e.args[0]!r} for kind {kind!r}") from None
        raise ConfigError(f"graph.kind: expected cycle, torus or complete, got {kind!r}")
    raise ConfigError("graph: expected a spec string or an object with 'kind'")


def _positive(name: str, value):
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        if not value > 0:
            raise ConfigError(f"{name}: must be positive, got {value!r}")
    elif isinstance(value, list):
        for v in value:
            _positive(name, v)
    return value


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a config document (as loaded from JSON, or built from flags)."""
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    known = {"experiment", "seed", "graph", "reps", "burn_in", "horizon", "out", "budget", "params"}
    extra = sorted(set(doc) - known)
    if extra:
        raise ConfigError(f"config: unknown field(s) {extra}; valid: {sorted(known)}")
    name = doc.get("experiment")
    if name is None:
        raise ConfigError("experiment: required")
    if name not in REGISTRY:
        raise ConfigError(f"experiment: unknown name {name!r}; valid: {', '.join(sorted(REGISTRY))}")
    seed = doc.get("seed")
    if seed is None:
        raise ConfigError("seed: required for reproducibility")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed: expected a nonnegative integer, got {seed!r}")
    exp = REGISTRY[name]
    defaults = DEFAULTS[name]
    params = doc.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("params: expected an object")
    overrides = {}
    for key, val in params.items():
        if key not in defaults:
            raise ConfigError(f"params.{key}: unknown parameter for {name}; valid: {sorted(defaults)}")
        overrides[key] = _positive(f"params.{key}", val)

    if doc.get("graph") is not None:
        spec = _graph_string(doc["graph"])
        try:
            g = parse_graph_spec(spec)
        except ValidationError as e:
            raise ConfigError(f"graph: {e}") from None
        if exp.graph_key is None:
            raise ConfigError(f"graph: experiment {name} has a fixed graph family and takes no graph")
        if g.kind not in exp.graph_kinds:
            raise ConfigError(f"graph: {name} supports {', '.join(exp.graph_kinds)}, got {g.kind}")
        overrides[exp.graph_key] = g.vertex_count if exp.graph_key == "k" else spec
    if doc.get("reps") is not None:
        if exp.reps_key is None:
            raise ConfigError(f"reps: experiment {name} has no replication count")
        reps = doc["reps"]
        if isinstance(reps, bool) or not isinstance(reps, int):
            raise ConfigError(f"reps: expected an integer, got {reps!r}")
        overrides[exp.reps_key] = _positive("reps", reps)
    for key in ("burn_in", "horizon"):
        if doc.get(key) is not None:
            if key not in defaults:
                raise ConfigError(f"{key}: not a parameter of {name}")
            overrides[key] = _positive(key, doc[key])
    budget = doc.get("budget")
    if budget is not None:
        budget = float(_positive("budget", budget))
    return ExperimentConfig(name, seed, overrides, doc.get("out"), budget)


def _write_outputs(rep: Report, out: str | None) -> list[str]:
    if out is None:
        return []
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"{rep.experiment}.json")
    with open(path, "w") as fh:
        fh.write(rep.to_json() + "\n")
    return [path] + rep.write_files(out)


def _run_and_write(cfg: ExperimentConfig) -> Report:
    rep = run_experiment(cfg.experiment, cfg.seed, cfg.overrides)
    _write_outputs(rep, cfg.out)
    return rep


def _child(cfg: ExperimentConfig, conn) -> None:
    rep = _run_and_write(cfg)
    conn.send((rep.passed, rep.summary_lines()))
    conn.close()


def run(cfg: ExperimentConfig, stream=sys.stdout) -> int:
    """Run one experiment; returns the process exit status."""
    effective = cfg.effective()
    print("# effective config", file=stream)
    print(json.dumps(effective, sort_keys=True), file=stream)
    if cfg.out is not None:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, f"{cfg.experiment}.config.json"), "w") as fh:
            json.dump(effective, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if cfg.budget is None:
        rep = _run_and_write(cfg)
        passed, lines = rep.passed, rep.summary_lines()
    else:
        ctx = mp.get_context("fork")
        recv, send = ctx.Pipe(duplex=False)
        proc = ctx.Process(target=_child, args=(cfg, send))
        proc.start()
        send.close()
        got = recv.poll(cfg.budget)
        if not got:
            proc.terminate()
            proc.join()
            rep = Report(cfg.experiment, effective, incomplete=True)
            rep.add(Claim(f"finished within the {cfg.budget:g} s budget", "runtime budget", False, True,
                          None, False))
            _write_outputs(rep, cfg.out)
            for line in rep.summary_lines():
                print(line, file=stream)
            print("INCOMPLETE: time budget exceeded", file=stream)
            return EXIT_INCOMPLETE
        try:
            passed, lines = recv.recv()
        except EOFError:
            proc.join()
            print(f"meteor run: experiment process exited with status {proc.exitcode}", file=sys.stderr)
            return EXIT_FAIL
        proc.join()
    for line in lines:
        print(line, file=stream)
    print("PASS" if passed else "FAIL", file=stream)
    return EXIT_OK if passed else EXIT_FAIL


def _parse_range(text: str) -> list[int]:
    """``"1..20"`` or ``"3"`` or ``"1,4,9"``."""
    out: list[int] = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = part.split("..")
            lo_i, hi_i = int(lo), int(hi)
            if hi_i < lo_i:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(range(lo_i, hi_i + 1))
        else:
            out.append(int(part))
    if any(v < 0 for v in out):
        raise argparse.ArgumentTypeError("indices must be nonnegative")
    return out


def _parse_pairs(text: str) -> list[tuple[int, int]]:
    """``"1..6x1..6"``: the Cartesian product of two ranges."""
    if "x" not in text:
        raise argparse.ArgumentTypeError(f"expected I_RANGExJ_RANGE, got {text!r}")
    a, b = text.split("x", 1)
    return [(i, j) for i in _parse_range(a) for j in _parse_range(b)]


def _set_value(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    return key.replace("-", "_"), val


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="meteor", description="Meteor mass-redistribution experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one named experiment and write its report")
    r.add_argument("--experiment", help="experiment name (see `meteor list`)")
    r.add_argument("--graph", help="cycle:K, torus:N:D or complete:K")
    r.add_argument("--seed", type=int, help="master seed (required, here or in --config)")
    r.add_argument("--reps", type=int, help="replications")
    r.add_argument("--burn-in", type=int, help="burn-in events, where the experiment has one")
    r.add_argument("--horizon", type=float, help="integration horizon, where the experiment has one")
    r.add_argument("--set", action="append", type=_set_value, default=[], metavar="KEY=VALUE",
                   help="override any experiment parameter (VALUE parsed as JSON when possible)")
    r.add_argument("--budget", type=float, help="wall-clock budget in seconds")
    r.add_argument("--out", help="output directory for the JSON report and CSV tables")
    r.add_argument("--config", help="JSON config file; flags override its fields")

    ls = sub.add_parser("list", help="list experiments and their default parameters")
    ls.add_argument("--json", action="store_true")

    o = sub.add_parser("oracle", help="exact crater/mound probability tables")
    o.add_argument("--p", type=_parse_range, default=[], help="run lengths, e.g. 1..20")
    o.add_argument("--phat", type=_parse_range, default=[], help="e.g. 1..20")
    o.add_argument("--A", dest="A", type=_parse_pairs, default=[], help="e.g. 1..6x1..6")
    o.add_argument("--B", dest="B", type=_parse_pairs, default=[], help="e.g. 0..6x0..6")
    o.add_argument("--format", choices=["csv", "json"], default="csv")
    o.add_argument("--out", help="output file (default stdout)")
    return ap


def _config_from_args(args) -> ExperimentConfig:
    doc: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"--config: {e}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config: expected a JSON object")
    flags = {"experiment": args.experiment, "graph": args.graph, "seed": args.seed, "reps": args.reps,
             "burn_in": args.burn_in, "horizon": args.horizon, "out": args.out, "budget": args.budget}
    doc.update({k: v for k, v in flags.items() if v is not None})
    if args.set:
        doc["params"] = {**(doc.get("params") or {}), **dict(args.set)}
    return parse_config(doc)


def _oracle(args, stream) -> int:
    if not (args.p or args.phat or args.A or args.B):
        print("meteor oracle: nothing requested (use --p, --phat, --A or --B)", file=sys.stderr)
        return EXIT_CONFIG
    rows = probability_table(args.p, args.phat, args.A, args.B)
    if args.format == "json":
        text = json.dumps(rows, indent=2)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text, file=stream)
    elif args.out:
        write_table_csv(rows, args.out)
    else:
        w = csv.DictWriter(stream, fieldnames=["quantity", "i", "j", "fraction", "decimal"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "decimal": repr(r["decimal"])})
    return EXIT_OK


def main(argv=None, stream=None) -> int:
    stream = stream or sys.stdout
    args = build_parser().parse_args(argv)
    if args.command == "list":
        if args.json:
            print(json.dumps({n: {"summary": REGISTRY[n].summary, "defaults": DEFAULTS[n]}
                              for n in sorted(REGISTRY)}, indent=2), file=stream)
        else:
            for n in sorted(REGISTRY):
                print(f"{n:16s} {REGISTRY[n].summary}", file=stream)
                print(f"{'':16s} defaults: {json.dumps(DEFAULTS[n], sort_keys=True)}", file=stream)
        return EXIT_OK
    if args.command == "oracle":
        return _oracle(args, stream)
    try:
        cfg = _config_from_args(args)
    except ValidationError as e:
        print(f"meteor run: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, stream)


if __name__ == "__main__":
    sys.exit(main())
