"""Command-line front end.

Every command prints a report made of sections:

    [config]   one JSON line; feeding it to ``listpriv replay`` reruns the command
    [results]  CSV rows
    [witness]  optional JSON payload (trees, embeddings, generated classes)
    [summary]  key=value lines
    [meta]     wall clock and warnings; the only section allowed to differ between reruns

Exit codes: 0 ok, 2 parse, 3 budget, 4 realizability, 5 precondition, 6 replay mismatch.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .core import gen_branch_class, gen_full_class, gen_monotone_class, parse_class, serialize_class
from .dims import littlestone_dim, monotone_dim
from .errors import ListPrivError, ParseError, PreconditionError, RealizabilityError
from .learners import MonotoneOnlineLearner, SOAListLearner, PerfectBranchLearner, UniformListLearner
from .privacy import (IPPInstance, chernoff_envelope, ipp_reduction, spread_instance, window_length)
from .ramsey import (homogeneous_subset, pigeonhole_subtree, ramsey_subtree, random_chain_coloring,
                     required_depth, set_ramsey_threshold, tower, log_star)
from .rng import hash_unit
from .trees import ImplicitTree, embedded_tree, iter_paths, tree_to_dict

REPLAY_MISMATCH = 6
SECTION_ORDER = ("config", "results", "witness", "summary", "meta")


class Report:
    def __init__(self, config: dict):
        self.config = config
        self.header: list[str] = []
        self.rows: list[list] = []
        self.witness = None
        self.summary: list[tuple[str, object]] = []
        self.warnings: list[str] = []

    def render(self, wall: float) -> str:
        out = io.StringIO()
        out.write("[config]\n" + json.dumps(self.config, sort_keys=True) + "\n")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        out.write("[results]\n" + buf.getvalue())
        if self.witness is not None:
            out.write("[witness]\n" + json.dumps(self.witness, sort_keys=True) + "\n")
        out.write("[summary]\n")
        for key, val in self.summary:
            out.write(f"{key}={val}\n")
        out.write(f"[meta]\nwall_clock_s={wall:.3f}\n")
        out.write("warnings=" + json.dumps(self.warnings) + "\n")
        return out.getvalue()


def split_sections(text: str) -> dict[str, str]:
    sections, name = {}, None
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]") and stripped[1:-1] in SECTION_ORDER:
            name = stripped[1:-1]
            sections[name] = ""
        elif name is not None:
            sections[name] += line
    return sections


def comparable_part(text: str) -> str:
    """The report with its [meta] section removed."""
    parts = split_sections(text)
    return "".join(f"[{k}]\n{parts[k]}" for k in SECTION_ORDER if k in parts and k != "meta")


def _read_input(path: str) -> tuple[str, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return text, {"path": os.path.abspath(path), "sha256": hashlib.sha256(text.encode()).hexdigest()}


def _env_budget(flag):
    if flag is not None:
        return flag
    raw = os.environ.get("LISTPRIV_BUDGET")
    return int(raw) if raw else None


def _parse_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: {exc.msg}", exc.lineno, exc.colno) from None


# -- commands --------------------------------------------------------------------

def cmd_gen(a) -> Report:
    if a.family == "monotone":
        C = gen_monotone_class(a.n, a.labels)
    elif a.family == "branch":
        C = gen_branch_class(a.depth, a.k)
    else:
        C = gen_full_class(a.n, a.labels)
    text = serialize_class(C)
    rep = Report({})
    rep.header = ["family", "domain_size", "label_count", "concepts", "sha256"]
    rep.rows = [[a.family, C.domain_size, C.label_count, len(C),
                 hashlib.sha256(text.encode()).hexdigest()]]
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        rep.witness = json.loads(text)
    rep.summary = [("concepts", len(C))]
    return rep


def cmd_dim(a) -> Report:
    text, meta = _read_input(a.class_file)
    C = parse_class(text)
    budget = _env_budget(a.budget)
    res = littlestone_dim(C, a.k, budget) if a.kind == "littlestone" else monotone_dim(C, a.k, budget)
    rep = Report({"inputs": {"class_file": meta}})
    rep.header = ["kind", "k", "value"]
    rep.rows = [[res.kind, res.k, res.value]]
    rep.witness = res.to_dict()["witness"]
    rep.summary = [("value", res.value), ("concepts", len(C))]
    return rep


def parse_sequence(text: str) -> list[tuple[int, int]]:
    seq = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        fields = body.split()
        if len(fields) != 2:
            raise ParseError("expected `point label`", lineno, len(line) - len(line.lstrip()) + 1)
        vals = []
        for f in fields:
            try:
                vals.append(int(f))
            except ValueError:
                raise ParseError(f"not an integer: {f!r}", lineno, line.index(f) + 1) from None
        seq.append((vals[0], vals[1]))
    return seq


def cmd_learn(a) -> Report:
    config_inputs = {}
    if a.builtin_monotone is not None:
        C = gen_monotone_class(a.builtin_monotone, a.k + 1)
    else:
        if a.class_file is None:
            raise PreconditionError("give a class file or --builtin-monotone N")
        text, config_inputs["class_file"] = _read_input(a.class_file)
        C = parse_class(text)
    seq_text, config_inputs["sequence"] = _read_input(a.sequence)
    seq = parse_sequence(seq_text)
    kind = a.learner or ("monotone" if a.builtin_monotone is not None else "soa")
    learner = MonotoneOnlineLearner(a.k) if kind == "monotone" else SOAListLearner(C, a.k)
    alive = list(C.concepts)
    rep = Report({"inputs": config_inputs})
    rep.header = ["step", "point", "predicted", "label", "miss"]
    mistakes = 0
    for step, (x, y) in enumerate(seq):
        if not 0 <= x < C.domain_size:
            raise PreconditionError(f"step {step}: point {x} outside the domain")
        alive = [c for c in alive if c[x] == y]
        if not alive:
            raise RealizabilityError(f"step {step}: no concept agrees with ({x}, {y}) and the history")
        pred, miss = learner.step(x, y)
        mistakes += miss
        rep.rows.append([step, x, " ".join(map(str, sorted(pred))), y, int(miss)])
    rep.summary = [("learner", kind), ("steps", len(seq)), ("mistakes", mistakes)]
    return rep


def _load_coloring(path: str, key: str) -> tuple[dict, dict, dict]:
    text, meta = _read_input(path)
    data = _parse_json(text, "coloring file")
    try:
        table = {tuple(k): int(v) for k, v in data[key]}
    except (KeyError, TypeError, ValueError):
        raise ParseError(f"coloring file needs a `{key}` list of [path, color] pairs") from None
    return data, table, meta


def cmd_ramsey(a) -> Report:
    if a.mode == "bound":
        return _ramsey_bound(a)
    if a.mode == "set":
        return _ramsey_set(a)
    return _ramsey_tree(a)


def _ramsey_bound(a) -> Report:
    rep = Report({})
    need = required_depth(a.d, a.m, a.c, a.b)
    rep.header = ["d", "m", "c", "b", "required_depth", "bits", "power_of_two"]
    bits = need.bit_length()
    pow2 = f"2^{bits - 1}" if need & (need - 1) == 0 else ""
    shown = need if bits <= 4096 else f"<{bits} bits>"
    rep.rows = [[a.d, a.m, a.c, a.b, shown, bits, pow2]]
    if a.tower is not None:
        rep.summary.append(("tower", tower(*a.tower)))
    if a.log_star is not None:
        rep.summary.append(("log_star", log_star(a.log_star)))
    rep.summary.append(("required_depth", pow2 or shown))
    return rep


def _checked_seed(a):
    if a.seed is None:
        raise PreconditionError("randomized runs need --seed")
    return a.seed


def _ramsey_tree(a) -> Report:
    inputs = {}
    if a.coloring:
        data, table, inputs["coloring"] = _load_coloring(a.coloring, "colors")
        host = ImplicitTree(int(data["arity"]), int(data["depth"]))
        if a.m != 1:
            raise PreconditionError("coloring files describe vertex colorings; use m=1")
        missing = [v for v in _all_vertices(host) if v not in table]
        if missing:
            raise ParseError(f"coloring file has no color for vertex {list(missing[0])}")
        emb = pigeonhole_subtree(host, table, a.d)
        report = {"required_depth": a.d * len(set(table.values())), "consumed_depth":
                  max(len(v) for v in emb.image.values())}
    else:
        seed = _checked_seed(a)
        host = ImplicitTree(a.arity, None if a.host_depth in (None, "inf") else int(a.host_depth))
        coloring = random_chain_coloring(seed, a.colors)
        kwargs = {"cap": None} if a.no_cap else ({"cap": a.cap} if a.cap is not None else {})
        emb, report = ramsey_subtree(host, coloring, a.d, a.m, a.colors, **kwargs)
    rep = Report({"inputs": inputs})
    rep.header = ["position", "host_vertex"]
    rep.rows = [[_path(p), _path(emb.image[p])] for p in emb.positions()]
    rep.witness = tree_to_dict(embedded_tree(host, emb))
    rep.summary = [(k, report[k]) for k in sorted(report) if k != "cap"]
    return rep


def _all_vertices(host):
    return list(iter_paths(host.arity, host.depth))


def _path(p) -> str:
    return ".".join(map(str, p)) if p else "root"


def _ramsey_set(a) -> Report:
    inputs = {}
    if a.coloring:
        data, table, inputs["coloring"] = _load_coloring(a.coloring, "colors")
        coloring = lambda s: table[tuple(s)]
        q = len(set(table.values()))
    else:
        seed = _checked_seed(a)
        coloring = lambda s: hash_unit(seed, tuple(s)) % a.q
        q = a.q
    found = homogeneous_subset(a.N, a.t, coloring, a.s)
    rep = Report({"inputs": inputs})
    rep.header = ["found", "subset", "color"]
    if found is None:
        rep.rows = [[0, "", ""]]
        rep.warnings.append("no homogeneous subset; sufficient universe size is "
                            + set_ramsey_threshold(a.t, a.s, q))
    else:
        col = coloring(found[: a.t]) if len(found) >= a.t else ""
        rep.rows = [[1, " ".join(map(str, found)), col]]
    rep.summary = [("found", int(found is not None)), ("threshold", set_ramsey_threshold(a.t, a.s, q))]
    return rep


_LEARNERS = {"perfect": PerfectBranchLearner, "uniform": UniformListLearner}


def _ipp_trial(job):
    n, k, inputs, learner_id, seed, trial = job
    tree = ImplicitTree(k + 1, n)
    out = ipp_reduction(tree, _LEARNERS[learner_id](k), IPPInstance(n, inputs), seed, trial)
    return trial, out


def cmd_ipp(a) -> Report:
    text, meta = _read_input(a.config)
    cfg = _parse_json(text, "experiment config")
    try:
        n, k = int(cfg["n"]), int(cfg["k"])
        trials = int(cfg.get("trials", 100))
        learner_id = cfg.get("learner", {}).get("id", "perfect")
        inst_cfg = cfg.get("instance", {})
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"experiment config: missing or bad field {exc}") from None
    if learner_id not in _LEARNERS:
        raise ParseError(f"experiment config: unknown learner {learner_id!r}")
    seed = a.seed if a.seed is not None else cfg.get("seed")
    if seed is None:
        raise PreconditionError("randomized runs need a seed (config `seed` or --seed)")
    if "inputs" in inst_cfg:
        inputs = [int(d) for d in inst_cfg["inputs"]]
    else:
        m, gap, offset = int(inst_cfg.get("m", 0)), int(inst_cfg.get("gap", 0)), int(inst_cfg.get("offset", 0))
        inputs = [offset + i * gap for i in range(m)]
    rescale = bool(a.rescale or cfg.get("rescale", False))
    scale = 1
    if rescale:
        fine, scale = spread_instance(inputs, n)
        inputs = list(fine.inputs)
    jobs = [(n, k, tuple(inputs), learner_id, int(seed), t) for t in range(trials)]
    if a.workers > 1:
        with ProcessPoolExecutor(a.workers) as pool:
            results = sorted(pool.map(_ipp_trial, jobs))
    else:
        results = [_ipp_trial(j) for j in jobs]
    rep = Report({"inputs": {"config": meta}, "seed": int(seed)})
    rep.header = ["trial", "output", "interior", "below_sample", "within_sample", "intervals"]
    hit = below = within = 0
    lo, hi = (min(d // scale for d in inputs), max(d // scale for d in inputs)) if inputs else (0, -1)
    for t, out in results:
        o = out.output // scale if rescale else out.output
        inside = lo <= o <= hi if rescale else out.interior
        hit += inside
        below += out.below_sample
        within += out.within_sample
        rep.rows.append([t, o, int(inside), int(out.below_sample), int(out.within_sample), out.intervals])
    rate = below / trials if trials else 0.0
    sigma = math.sqrt(max(rate * (1 - rate), 1 / trials) / trials) if trials else 0.0
    rep.summary = [("trials", trials), ("learner", learner_id), ("window_length", window_length(n)),
                   ("hit_rate", f"{hit / trials:.6f}" if trials else "nan"),
                   ("below_rate", f"{rate:.6f}"), ("within_rate", f"{within / trials:.6f}" if trials else "nan"),
                   ("below_envelope", f"{chernoff_envelope(n, k):.6f}"),
                   ("below_envelope_plus_3sigma", f"{chernoff_envelope(n, k) + 3 * sigma:.6f}"),
                   ("scale", scale)]
    return rep


def cmd_replay(a) -> tuple[Report, str]:
    text, _ = _read_input(a.report)
    parts = split_sections(text)
    if "config" not in parts:
        raise ParseError("report has no [config] section")
    cfg = _parse_json(parts["config"], "report config")
    if cfg.get("version") != __version__:
        print(f"warning: report was produced by version {cfg.get('version')}", file=sys.stderr)
    for name, meta in cfg.get("inputs", {}).items():
        _, now = _read_input(meta["path"])
        if now["sha256"] != meta["sha256"]:
            raise PreconditionError(f"input {name} ({meta['path']}) changed since the report was made")
    ns = argparse.Namespace(**cfg["args"])
    return ns, text


COMMANDS = {"gen": cmd_gen, "dim": cmd_dim, "learn": cmd_learn, "ramsey": cmd_ramsey, "ipp": cmd_ipp}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="listpriv", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter,
                                epilog="Environment: LISTPRIV_MAX_CONCEPTS caps generated classes; "
                                       "LISTPRIV_BUDGET sets the default search budget; "
                                       "LISTPRIV_RAMSEY_CAP sets the Ramsey gate (an integer or `none`).")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a generated concept class")
    g.add_argument("--family", choices=["monotone", "branch", "full"], required=True)
    g.add_argument("--n", type=int, default=4, help="domain size (monotone, full)")
    g.add_argument("--labels", type=int, default=3, help="label count (monotone, full)")
    g.add_argument("--depth", type=int, default=2, help="tree depth (branch)")
    g.add_argument("--k", type=int, default=2, help="list size; the tree has arity k+1 (branch)")
    g.add_argument("--out", help="class file to write; without it the class goes to [witness]")

    d = sub.add_parser("dim", help="exact k-Littlestone or k-monotone dimension")
    d.add_argument("class_file")
    d.add_argument("--kind", choices=["littlestone", "monotone"], required=True)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--budget", type=int)

    l = sub.add_parser("learn", help="run an online k-list learner on a sequence file")
    l.add_argument("class_file", nargs="?")
    l.add_argument("--builtin-monotone", type=int, metavar="N",
                   help="use the monotone class on N points with labels 0..k")
    l.add_argument("--learner", choices=["soa", "monotone"])
    l.add_argument("--k", type=int, required=True)
    l.add_argument("--sequence", required=True, help="lines of `point label`")
    l.add_argument("--seed", type=int, help="echoed for bookkeeping; the learners are deterministic")

    r = sub.add_parser("ramsey", help="Ramsey extraction and bounds")
    r.add_argument("mode", choices=["tree", "set", "bound"])
    r.add_argument("--d", type=int, default=2, help="target subtree depth")
    r.add_argument("--m", type=int, default=2, help="chain length")
    r.add_argument("--c", type=int, default=2, help="colors (bound)")
    r.add_argument("--b", type=int, default=2, help="arity (bound)")
    r.add_argument("--tower", type=int, nargs=2, metavar=("T", "X"))
    r.add_argument("--log-star", type=int)
    r.add_argument("--arity", type=int, default=2)
    r.add_argument("--host-depth", default=None, help="host depth or `inf` (default)")
    r.add_argument("--colors", type=int, default=2)
    r.add_argument("--coloring", help="JSON coloring file")
    r.add_argument("--cap", type=int)
    r.add_argument("--no-cap", action="store_true", help="disable the host-depth gate")
    r.add_argument("--N", type=int, default=6)
    r.add_argument("--t", type=int, default=2)
    r.add_argument("--q", type=int, default=2)
    r.add_argument("--s", type=int, default=3)
    r.add_argument("--seed", type=int)

    i = sub.add_parser("ipp", help="interior-point reduction trials")
    i.add_argument("config", help="JSON experiment config")
    i.add_argument("--seed", type=int, help="overrides the config seed")
    i.add_argument("--rescale", action="store_true",
                   help="treat inputs as coarse points and spread them l+1 apart")
    i.add_argument("--workers", type=int, default=1)

    rp = sub.add_parser("replay", help="rerun the command echoed in a report")
    rp.add_argument("report")
    rp.add_argument("--check", action="store_true",
                    help=f"exit {REPLAY_MISMATCH} unless everything outside [meta] matches")
    return p


def _config_args(a) -> dict:
    args = {k: v for k, v in vars(a).items() if k not in ("workers",)}
    for key in ("class_file", "sequence", "config", "coloring", "out"):
        if args.get(key):
            args[key] = os.path.abspath(args[key])
    return args


def run(a) -> str:
    start = time.perf_counter()
    rep = COMMANDS[a.command](a)
    rep.config = dict(rep.config, command=a.command, args=_config_args(a), version=__version__)
    rep.config.setdefault("seed", getattr(a, "seed", None))
    return rep.render(time.perf_counter() - start)


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    try:
        if a.command == "replay":
            ns, original = cmd_replay(a)
            ns.workers = 1
            text = run(ns)
            sys.stdout.write(text)
            if a.check and comparable_part(text) != comparable_part(original):
                print("error: replay differs from the original report", file=sys.stderr)
                return REPLAY_MISMATCH
            return 0
        sys.stdout.write(run(a))
        return 0
    except ListPrivError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
