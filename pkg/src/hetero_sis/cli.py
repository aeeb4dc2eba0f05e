"""Command-line entry point: ``hetero-sis <gen|analyze|simulate|repro>``.

Exit codes: 0 success, 1 runtime failure (or a failed repro predicate),
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .clique import (CliqueError, CliqueSystem, CliqueState, analyze_at, analyze_full, analyze_mixed,
                     analyze_zero, derive_rates_full_infection, derive_rates_mixed)
from .graph import Graph, GraphError, degrees, gen_clique, gen_erdos_renyi, gen_powerlaw, load_edge_list
from .meanfield import (DENSE_LIMIT, BoundsQuery, fixed_point_residual, flood_bounds, flood_windows, mf_fixed_point,
                        mf_integrate, mf_jacobian, mixed_bounds, mixed_windows, pf_fixed_point, zero_stability)
from .profiles import (ProfileError, ProfileMap, ProfileParams, assign_by_attribute, assign_random_split,
                       build_matrices)
from .simulation import SeedSpec, SimConfig, SimResult, SimulationError, compare_to_meanfield, run

log = logging.getLogger("hetero_sis")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    """Invalid invocation; carries every violation found."""

    def __init__(self, problems):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        super().__init__("; ".join(self.problems))


# ---------------------------------------------------------------------------
# provenance and output
# ---------------------------------------------------------------------------

def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Provenance:
    config_hash: str
    rng_seed: Optional[int]
    version: str = __version__

    def to_dict(self) -> dict:
        return {"tool": "hetero-sis", "version": self.version, "config_hash": self.config_hash,
                "rng_seed": self.rng_seed}

    def header(self) -> list[str]:
        return [f"hetero-sis {self.version} config_hash={self.config_hash} rng_seed={self.rng_seed}"]


def write_csv(path: Path, header: list[str], rows, prov: Provenance) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for line in prov.header():
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_json(path: Path, obj: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o)}")


def emit(report: dict, args, name: str) -> None:
    """Write ``report`` to ``<out_dir>/<name>.json`` and echo it."""
    if args.out_dir:
        write_json(Path(args.out_dir) / f"{name}.json", report)
    if args.json:
        print(json.dumps(report, indent=2, default=_json_default))
    else:
        for k, v in report.items():
            if not isinstance(v, (dict, list)):
                print(f"{k}: {v}")


# ---------------------------------------------------------------------------
# graph / profile / parameter sources
# ---------------------------------------------------------------------------

GENERATORS = {
    "clique": (gen_clique, {"n": int}),
    "er": (gen_erdos_renyi, {"n": int, "p": float, "seed": int}),
    "powerlaw": (gen_powerlaw, {"n": int, "exponent": float, "scale": float, "seed": int}),
}


def parse_gen(text: str) -> tuple[str, dict]:
    """``kind:key=value,...`` e.g. ``powerlaw:n=1000,exponent=2.72,seed=7``."""
    kind, _, rest = text.partition(":")
    if kind not in GENERATORS:
        raise ConfigError(f"unknown generator {kind!r}; choose from {sorted(GENERATORS)}")
    types = GENERATORS[kind][1]
    kw, problems = {}, []
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        if key not in types:
            problems.append(f"generator {kind} has no parameter {key!r}")
            continue
        try:
            kw[key] = types[key](val)
        except ValueError:
            problems.append(f"bad value {val!r} for {key}")
    if "n" not in kw:
        problems.append(f"generator {kind} needs n=")
    if problems:
        raise ConfigError(problems)
    return kind, kw


def make_graph(kind: str, kw: dict) -> Graph:
    return GENERATORS[kind][0](**kw)


def load_graph(args) -> Graph:
    if bool(args.graph) == bool(args.gen):
        raise ConfigError("exactly one of --graph or --gen is required")
    if args.graph:
        path = Path(args.graph)
        if not path.is_file():
            raise ConfigError(f"graph file not found: {path}")
        return load_edge_list(path, args.format)
    return make_graph(*parse_gen(args.gen))


def make_profiles(g: Graph, spec: str) -> tuple[Graph, ProfileMap]:
    """``split:K[:seed]``, ``blocks:K``, ``attr:PATH:b1,b2,...`` or ``file:PATH``."""
    try:
        return _make_profiles(g, spec)
    except ValueError as exc:
        if isinstance(exc, (ConfigError, ProfileError)):
            raise
        raise ConfigError(f"bad profile spec {spec!r}: {exc}") from None


def _make_profiles(g: Graph, spec: str) -> tuple[Graph, ProfileMap]:
    kind, _, rest = spec.partition(":")
    if kind == "split":
        k, _, seed = rest.partition(":")
        return g, assign_random_split(g, int(k), int(seed) if seed else 0)
    if kind == "blocks":
        k = int(rest)
        if not 1 <= k <= g.node_count:
            raise ConfigError(f"blocks:{k} needs 1 <= k <= {g.node_count}")
        return g, ProfileMap((np.arange(g.node_count) * k) // g.node_count, k)
    if kind == "attr":
        path, _, bins = rest.rpartition(":")
        if not Path(path).is_file():
            raise ConfigError(f"attribute file not found: {path}")
        return assign_by_attribute(g, path, [float(b) for b in bins.split(",") if b])
    if kind == "file":
        if not Path(rest).is_file():
            raise ConfigError(f"profile file not found: {rest}")
        table = {}
        with open(rest, newline="") as fh:
            for row in csv.reader(fh):
                if len(row) >= 2 and row[0].strip().lstrip("-").isdigit():
                    table[int(row[0])] = int(row[1])
        orig = g.original_ids if g.original_ids is not None else np.arange(g.node_count)
        missing = [int(o) for o in orig if int(o) not in table]
        if missing:
            raise ConfigError(f"{len(missing)} nodes lack a profile (first: {missing[:5]})")
        a = np.array([table[int(o)] for o in orig])
        return g, ProfileMap(a, int(a.max()) + 1)
    raise ConfigError(f"unknown profile spec {spec!r}")


def load_params(args) -> ProfileParams:
    if args.params and args.rate:
        raise ConfigError("give either --params or --rate, not both")
    if args.params:
        if isinstance(args.params, dict):
            return ProfileParams.from_dict(args.params)
        if not Path(args.params).is_file():
            raise ConfigError(f"params file not found: {args.params}")
        return ProfileParams.from_json(args.params)
    if args.rate:
        pairs = []
        for r in args.rate:
            try:
                b, d = (float(x) for x in str(r).split(","))
            except ValueError:
                raise ConfigError(f"--rate expects BETA,DELTA, got {r!r}") from None
            pairs.append((b, d))
        return ProfileParams.from_pairs(pairs)
    raise ConfigError("rates required: --rate BETA,DELTA per profile or --params FILE")


def apply_config(args, parser: argparse.ArgumentParser) -> None:
    """Values from ``--config`` override flags; unknown keys are all reported.

    A ``profiles`` list is read as rate parameters; the assignment spec
    (``--profiles`` on the command line) goes under ``profile_spec``.
    """
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    problems = []
    for key, val in data.items():
        dest = key.replace("-", "_")
        if dest == "profiles" and isinstance(val, list):
            dest, val = "params", {"profiles": val}
        elif dest == "profile_spec":
            dest = "profiles"
        if not hasattr(args, dest) or dest in ("command", "func", "config"):
            problems.append(f"unknown config key {key!r}")
            continue
        setattr(args, dest, val)
    if problems:
        raise ConfigError(problems)


def effective_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "json", "verbose", "out_dir", "output")}


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    kw = {"n": args.n}
    if args.kind == "er":
        kw.update(p=args.p, seed=args.seed)
    elif args.kind == "powerlaw":
        kw.update(exponent=args.exponent, scale=args.scale, seed=args.seed)
    g = make_graph(args.kind, kw)
    out = Path(args.output or f"{args.kind}_{args.n}.txt")
    prov = Provenance(config_hash(effective_config(args)), args.seed)
    meta = {"generator": args.kind, "parameters": kw, "seed": args.seed, "nodes": g.node_count,
            "edges": g.edge_count, "path": str(out), "provenance": prov.to_dict()}
    out.parent.mkdir(parents=True, exist_ok=True)
    g.write_snap(out, prov.header() + [f"generator={args.kind} " + " ".join(f"{k}={v}" for k, v in kw.items())])
    write_json(out.with_name(out.name + ".meta.json"), meta)
    if args.json:
        print(json.dumps(meta, indent=2))
    else:
        print(f"wrote {out} ({g.node_count} nodes, {g.edge_count} edges)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _clique_system(args) -> tuple[CliqueSystem, str, Optional[float]]:
    fp = args.fixed_point
    kind, _, arg = fp.partition(":")
    problems = []
    if args.n is None:
        problems.append("--n is required")
    elif args.n < 1:
        problems.append(f"--n must be >= 1, got {args.n}")
    for name in ("delta_a", "delta_b"):
        if getattr(args, name) is None:
            problems.append(f"--{name.replace('_', '-')} is required")
    for name in ("beta_a", "beta_b", "delta_a", "delta_b"):
        v = getattr(args, name)
        if v is not None and not 0 < v <= 1:
            problems.append(f"--{name.replace('_', '-')}={v} outside (0, 1]")
    if kind not in ("zero", "full", "mixed", "at"):
        problems.append(f"--fixed-point must be zero, full:C, mixed:C or at:IA,IB; got {fp!r}")
    given = (args.beta_a is not None, args.beta_b is not None)
    if kind in ("zero", "at") and not all(given):
        problems.append(f"--beta-a and --beta-b are required for fixed point {kind}")
    if any(given) and not all(given):
        problems.append("give both --beta-a and --beta-b or neither")
    c = None
    if kind in ("full", "mixed"):
        try:
            c = float(arg)
        except ValueError:
            problems.append(f"{kind} needs a c value, e.g. {kind}:0.9")
        else:
            if not 0 < c < 1:
                problems.append(f"c={c} outside (0, 1)")
    if kind == "at":
        try:
            ia, ib = (float(x) for x in arg.split(","))
        except ValueError:
            problems.append(f"at needs two coordinates, e.g. at:10,20; got {arg!r}")
    if problems:
        raise ConfigError(problems)
    if kind in ("full", "mixed") and not all(given):
        derive = derive_rates_full_infection if kind == "full" else derive_rates_mixed
        ba, bb = derive(args.n, c, args.delta_a, args.delta_b)
    else:
        ba, bb = args.beta_a, args.beta_b
    return CliqueSystem(args.n, ba, bb, args.delta_a, args.delta_b), kind, c


def analyze_clique(args) -> dict:
    sys_, kind, c = _clique_system(args)
    if kind == "zero":
        v = analyze_zero(sys_)
    elif kind == "full":
        v = analyze_full(sys_, c)
    elif kind == "mixed":
        v = analyze_mixed(sys_, c)
    else:
        ia, ib = (float(x) for x in args.fixed_point.partition(":")[2].split(","))
        v = analyze_at(sys_, CliqueState(ia, ib))
    report = v.to_dict()
    report["system"] = {"N": sys_.N, "beta_a": sys_.beta_a, "beta_b": sys_.beta_b,
                        "delta_a": sys_.delta_a, "delta_b": sys_.delta_b}
    return report


def _graph_setup(args):
    g = load_graph(args)
    g, pm = make_profiles(g, args.profiles)
    params = load_params(args)
    if pm.k > params.k:
        raise ConfigError(f"profile spec yields {pm.k} profiles but only {params.k} rate pairs given")
    return g, pm, params


def analyze_zero_stability(args) -> dict:
    g, pm, params = _graph_setup(args)
    rep = zero_stability(g, build_matrices(pm, params), tol=args.tol)
    return rep.to_dict()


def analyze_pf(args) -> dict:
    g, pm, params = _graph_setup(args)
    sm = build_matrices(pm, params)
    st = pf_fixed_point(g, sm, tol=args.tol)
    absc = mf_jacobian(g, sm, st).abscissa()
    by_profile = [float(st.p[pm.assignment == k].mean()) for k in range(pm.k)]
    if args.out_dir:
        prov = Provenance(config_hash(effective_config(args)), None)
        orig = g.original_ids if g.original_ids is not None else np.arange(g.node_count)
        write_csv(Path(args.out_dir) / "pf_fixed_point.csv", ["node_id", "profile", "p"],
                  zip(orig.tolist(), pm.assignment.tolist(), st.p.tolist()), prov)
    return {"residual": fixed_point_residual(g, sm, st), "iterations": st.iterations,
            "jacobian_abscissa": absc, "stable": absc < 0, "mean_p": float(st.p.mean()),
            "mean_p_by_profile": by_profile, "min_p": float(st.p.min()), "max_p": float(st.p.max()),
            "formula": "p = inv(Delta) B (I - diag p) A p"}


def analyze_bounds(args) -> dict:
    if args.ratio and (args.rate or args.params):
        raise ConfigError("give --ratio or --rate/--params, not both")
    if args.ratio:
        params = ProfileParams.from_pairs([(min(1.0, r), min(1.0, 1.0 / r) if r > 1 else 1.0)
                                           for r in args.ratio])
    else:
        params = load_params(args)
    try:
        q = BoundsQuery(args.a, args.b, args.x)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.mode == "flood" and args.x is not None:
        raise ConfigError("--x applies to --mode mixed only")
    if args.mode == "mixed" and (args.x is None or args.x <= args.b):
        raise ConfigError("--mode mixed needs --x greater than --b")
    if params.k != 2:
        raise ConfigError(f"degree windows need exactly two profiles, got {params.k}")
    report: dict = {"mode": args.mode, "a": args.a, "b": args.b, "x": args.x,
                    "ratios": (params.beta / params.delta).tolist()}
    if args.mode == "flood":
        wins = flood_windows(params, q)
    else:
        wins = mixed_windows(params, q)
    report["windows"] = {str(k): {"lower": w.lower, "upper": w.upper, "quantity": w.quantity}
                         for k, w in wins.items()}
    if args.mode == "flood":
        ratio = params.beta / params.delta
        report["degree_windows"] = {name: {"lower": w.lower / ratio[k], "upper": w.upper / ratio[k]}
                                    for k, (name, w) in enumerate(wins.items())}
    if args.graph or args.gen:
        g = load_graph(args)
        g, pm = make_profiles(g, args.profiles)
        dp = degrees(g, pm)
        br = (flood_bounds if args.mode == "flood" else mixed_bounds)(dp, params, q)
        rep = br.to_dict()
        report.update(overall=rep["overall"], failing_count=rep["failing_count"], node_count=g.node_count)
    return report


def analyze_meanfield(args) -> dict:
    g, pm, params = _graph_setup(args)
    sm = build_matrices(pm, params)
    p0 = np.full(g.node_count, args.p0)
    tr = mf_integrate(g, sm, p0, args.t_end, record_every=args.record_every)
    fp = tr.final
    prov = Provenance(config_hash(effective_config(args)), None)
    if args.out_dir:
        if g.node_count <= DENSE_LIMIT:
            # small graphs get one column per node
            header = ["t"] + [f"p_{i}" for i in range(g.node_count)]
            rows = ([t] + row.tolist() for t, row in zip(tr.times, tr.states))
        else:
            header = ["t"] + [f"profile_{k}" for k in range(pm.k)] + ["total"]
            onehot = np.zeros((g.node_count, pm.k))
            onehot[np.arange(g.node_count), pm.assignment] = 1.0
            per = tr.states @ onehot / np.maximum(pm.sizes, 1)
            rows = (([t] + row.tolist() + [s]) for t, row, s in zip(tr.times, per, tr.states.mean(axis=1)))
        write_csv(Path(args.out_dir) / "meanfield_trajectory.csv", header, rows, prov)
    return {"t_final": tr.t_final, "steps": tr.steps, "clamp_count": tr.clamp_count,
            "residual": fixed_point_residual(g, sm, fp),
            "mean_p_by_profile": [float(fp.p[pm.assignment == k].mean()) for k in range(pm.k)],
            "mean_p": float(fp.p.mean())}


ANALYZERS: dict[str, Callable] = {
    "clique": analyze_clique,
    "zero-stability": analyze_zero_stability,
    "pf-fixed-point": analyze_pf,
    "bounds": analyze_bounds,
    "meanfield": analyze_meanfield,
}


def cmd_analyze(args) -> int:
    report = ANALYZERS[args.target](args)
    report["provenance"] = Provenance(config_hash(effective_config(args)), None).to_dict()
    emit(report, args, f"analyze_{args.target}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def write_sim_outputs(out: Path, g: Graph, pm: ProfileMap, res: SimResult, prov: Provenance,
                      traces: bool = True) -> None:
    k = pm.k
    agg = res.aggregate
    header = ["round"] + [f"profile_{i}" for i in range(k)] + ["total"]
    if traces:
        for t in res.traces:
            rows = ([r] + c.tolist() + [int(c.sum())] for r, c in zip(t.rounds.tolist(), t.counts))
            write_csv(out / "traces" / f"rep_{t.replication:04d}.csv", header, rows, prov)
    agg_header = (["round"] + [f"mean_profile_{i}" for i in range(k)] + [f"std_profile_{i}" for i in range(k)]
                  + ["mean_total", "std_total"])
    rows = ([r] + m.tolist() + s.tolist() + [tm, ts] for r, m, s, tm, ts in
            zip(agg.rounds.tolist(), agg.mean, agg.std, agg.total_mean.tolist(), agg.total_std.tolist()))
    write_csv(out / "aggregate.csv", agg_header, rows, prov)
    if g.original_ids is not None:
        g.write_remap_csv(out / "remap.csv")
    orig = g.original_ids if g.original_ids is not None else np.arange(g.node_count)
    final = res.traces[0].final_state.astype(int)
    write_csv(out / "final_state.csv", ["node_id", "profile", "state"],
              zip(orig.tolist(), pm.assignment.tolist(), final.tolist()), prov)


def sim_summary(res: SimResult, pm: ProfileMap, wall: float) -> dict:
    agg = res.aggregate
    return {
        "steady": agg.steady,
        "steady_fraction_by_profile": agg.steady_fraction().tolist(),
        "final_mean_by_profile": agg.mean[-1].tolist(),
        "final_fraction_by_profile": (agg.mean[-1] / np.maximum(pm.sizes, 1)).tolist(),
        "profile_sizes": pm.sizes.tolist(),
        "extinction_rate": res.extinction_rate(),
        "replications": agg.replications,
        "initially_infected": int(len(res.seeds)),
        "wall_time_s": wall,
    }


def cmd_simulate(args) -> int:
    g, pm, params = _graph_setup(args)
    cfg = SimConfig(rounds=args.rounds, seeding=SeedSpec.parse(args.seeding), replications=args.replications,
                    rng_seed=args.rng_seed, record_every=args.record_every, steady_window=args.steady_window,
                    steady_tolerance=args.steady_tolerance)
    prov = Provenance(config_hash(effective_config(args)), args.rng_seed)
    t0 = time.perf_counter()
    res = run(g, pm, params, cfg)
    summary = sim_summary(res, pm, time.perf_counter() - t0)
    if args.compare_meanfield:
        sm = build_matrices(pm, params)
        mf = mf_fixed_point(g, sm, np.full(g.node_count, 0.5))
        try:
            summary["meanfield"] = compare_to_meanfield(res.aggregate, mf, pm).to_dict()
        except SimulationError as exc:
            summary["meanfield"] = {"error": str(exc)}
    summary["provenance"] = prov.to_dict()
    out = Path(args.out_dir or "hetero-sis-out")
    write_sim_outputs(out, g, pm, res, prov, traces=not args.no_traces)
    args.out_dir = str(out)
    emit(summary, args, "summary")
    return EXIT_OK


# ---------------------------------------------------------------------------
# repro
# ---------------------------------------------------------------------------

@dataclass
class Bundle:
    """Outcome of one scripted scenario."""

    name: str
    passed: bool
    predicate: str
    parameter_source: str
    scale: str
    details: dict = field(default_factory=dict)
    result: Optional[SimResult] = None

    def manifest(self, prov: Provenance) -> dict:
        return {"scenario": self.name, "passed": self.passed, "predicate": self.predicate,
                "parameter_source": self.parameter_source, "scale": self.scale,
                "details": self.details, "provenance": prov.to_dict()}


def _clique_setup(N: int):
    return gen_clique(2 * N), ProfileMap(np.repeat([0, 1], N), 2)


def _sim(g, pm, params, rounds, seeding, opts, default_reps):
    cfg = SimConfig(rounds=rounds, seeding=seeding, replications=opts.get("replications") or default_reps,
                    rng_seed=opts.get("rng_seed", 0))
    return run(g, pm, params, cfg)


def repro_clique_die_out(full: bool, opts: dict) -> Bundle:
    # published rates at N=1000; at desk scale beta is rescaled so N*beta/delta is unchanged
    N = 1000 if full else 100
    scale = 1000 / N
    ba, bb, d = 5e-7 * scale, 9e-7 * scale, 0.01
    g, pm = _clique_setup(N)
    v = analyze_zero(CliqueSystem(N, ba, bb, d, d))
    res = _sim(g, pm, ProfileParams.from_pairs([(ba, d), (bb, d)]), 2000, SeedSpec(fixed_per_profile=10), opts, 32)
    rate = res.extinction_rate(by_round=2000)
    return Bundle("clique-die-out", v.stable and v.condition_value < 1 and rate >= 0.95,
                  "condition_value < 1 and extinction by round 2000 in >= 95% of replications",
                  "published" if full else "published (beta rescaled to keep the condition value)",
                  "full" if full else "desk",
                  {"N": N, "rates": [[ba, d], [bb, d]], "condition_value": v.condition_value,
                   "extinction_rate": rate,
                   "median_extinction_round": float(np.median([t.extinction_round or 2000 for t in res.traces]))},
                  res)


def repro_clique_full(full: bool, opts: dict) -> Bundle:
    N = 1000 if full else 100
    pairs = [(0.01, 0.0005), (0.03, 0.0006)]
    g, pm = _clique_setup(N)
    res = _sim(g, pm, ProfileParams.from_pairs(pairs), 2000, SeedSpec(fixed_per_profile=10), opts, 32)
    frac = res.aggregate.steady_fraction()
    return Bundle("clique-full", bool(res.aggregate.steady and np.all(frac >= 0.95)),
                  "steady state with both profiles >= 95% infected", "published", "full" if full else "desk",
                  {"N": N, "rates": pairs, "steady_fraction_by_profile": frac.tolist(),
                   "steady": res.aggregate.steady}, res)


def repro_clique_mixed(full: bool, opts: dict) -> Bundle:
    # rates derived from the mixed fixed-point conditions; the quoted experimental
    # rates do not satisfy them
    N, c, da, db = (1000, 0.99, 0.1, 0.01) if full else (100, 0.9, 0.5, 0.1)
    ba, bb = derive_rates_mixed(N, c, da, db)
    g, pm = _clique_setup(N)
    res = _sim(g, pm, ProfileParams.from_pairs([(ba, da), (bb, db)]), 2000, SeedSpec(fixed_per_profile=10), opts, 32)
    fr = np.array([t.steady_fraction() for t in res.traces])
    ok = (fr[:, 1] >= 0.8) & (fr[:, 1] <= 1.0) & (fr[:, 0] <= 0.1)
    return Bundle("clique-mixed", bool(ok.mean() >= 0.9),
                  "profile B fraction in [0.8, 1] and profile A <= 0.1 in >= 90% of replications",
                  "derived from mixed fixed-point conditions", "full" if full else "desk",
                  {"N": N, "c": c, "rates": [[ba, da], [bb, db]], "pass_rate": float(ok.mean()),
                   "mean_fraction_by_profile": fr.mean(axis=0).tolist()}, res)


def contact_graph(full: bool, opts: dict) -> Graph:
    """User-supplied contact network, or a synthetic heavy-tailed stand-in."""
    if opts.get("graph"):
        path = Path(opts["graph"])
        if not path.is_file():
            raise ConfigError(f"graph file not found: {path}")
        return load_edge_list(path, opts.get("format", "snap"))
    if full:
        raise ConfigError("full-scale contact-network scenarios need --graph (e.g. the Enron email edge list)")
    g = gen_powerlaw(1000, 2.0, seed=opts.get("graph_seed", 7))
    return g.subgraph(g.largest_component())


def _contact_run(name, pairs, k, full, opts):
    g = contact_graph(full, opts)
    pm = assign_random_split(g, k, opts.get("rng_seed", 0))
    params = ProfileParams.from_pairs(pairs)
    res = _sim(g, pm, params, 5000 if full else 2000, SeedSpec(top_degree_fraction=0.05), opts, 8)
    return g, pm, params, res


def repro_arbitrary_die_out(full: bool, opts: dict) -> Bundle:
    pairs = [(0.0009, 0.5), (0.0005, 0.7)]
    g, pm, params, res = _contact_run("arbitrary-die-out", pairs, 2, full, opts)
    zs = zero_stability(g, build_matrices(pm, params))
    rate = res.extinction_rate()
    return Bundle("arbitrary-die-out", bool(zs.stable and rate >= 0.95),
                  "rho(inv(Delta) B A) < 1 and extinction in >= 95% of replications", "published",
                  "full" if full else "desk",
                  {"nodes": g.node_count, "rates": pairs, "rho": zs.rho, "extinction_rate": rate,
                   "initially_infected": int(len(res.seeds)),
                   "median_extinction_round": float(np.median([t.extinction_round or -1 for t in res.traces]))},
                  res)


def repro_arbitrary_flood(full: bool, opts: dict) -> Bundle:
    pairs = [(0.006, 0.0001)] * 2
    g, pm, params, res = _contact_run("arbitrary-flood", pairs, 2, full, opts)
    frac = res.aggregate.steady_fraction()
    br = flood_bounds(degrees(g, pm), params, BoundsQuery(0.001, 0.99))
    wins = flood_windows(params, BoundsQuery(0.001, 0.99))
    return Bundle("arbitrary-flood", bool(np.all(frac >= 0.5)), "every profile majority-infected", "published",
                  "full" if full else "desk",
                  {"nodes": g.node_count, "rates": pairs, "steady_fraction_by_profile": frac.tolist(),
                   "steady": res.aggregate.steady, "initially_infected": int(len(res.seeds)),
                   "degree_windows": {str(k): [w.lower, w.upper] for k, w in wins.items()},
                   "nodes_within_bounds": float(br.node_pass.all(axis=1).mean())}, res)


def repro_arbitrary_mixed(full: bool, opts: dict) -> Bundle:
    pairs = [(0.006, 0.0001), (0.009, 0.1)]
    g, pm, params, res = _contact_run("arbitrary-mixed", pairs, 2, full, opts)
    frac = res.aggregate.steady_fraction()
    return Bundle("arbitrary-mixed", bool(frac[0] >= 0.5 and frac[1] <= 0.5),
                  "profile A majority-infected, profile B at most half infected", "published",
                  "full" if full else "desk",
                  {"nodes": g.node_count, "rates": pairs, "steady_fraction_by_profile": frac.tolist(),
                   "steady": res.aggregate.steady}, res)


def repro_five_profile(full: bool, opts: dict) -> Bundle:
    hi, lo = (0.006, 0.0001), (0.009, 0.1)
    pairs = [hi, lo, hi, lo, hi]
    g, pm, params, res = _contact_run("five-profile", pairs, 5, full, opts)
    frac = res.aggregate.steady_fraction()
    high = frac[[0, 2, 4]]
    low = frac[[1, 3]]
    return Bundle("five-profile", bool(high.min() >= 0.5 and low.max() <= 0.5),
                  "high beta/delta profiles (0, 2, 4) majority-infected, low ones (1, 3) at most half",
                  "published", "full" if full else "desk",
                  {"nodes": g.node_count, "rates": pairs, "steady_fraction_by_profile": frac.tolist()}, res)


def repro_powerlaw(full: bool, opts: dict) -> Bundle:
    n = 5000 if full else 1000
    g = gen_powerlaw(n, 2.72, scale=3000, seed=opts.get("graph_seed", 7))
    pm = assign_random_split(g, 2, opts.get("rng_seed", 0))
    pairs = [(0.5, 0.0001), (0.7, 0.001)]
    res = _sim(g, pm, ProfileParams.from_pairs(pairs), 5000 if full else 500,
               SeedSpec(bottom_degree_fraction=0.05), opts, 8)
    total = float(res.aggregate.steady_fraction() @ pm.sizes / g.node_count)
    return Bundle("powerlaw", bool(res.aggregate.steady and total < 0.9),
                  "steady state reached without flooding the graph", "published", "full" if full else "desk",
                  {"nodes": n, "edges": g.edge_count, "exponent": 2.72, "scale": 3000, "rates": pairs,
                   "steady": res.aggregate.steady, "total_fraction": total,
                   "components": g.components()[0]}, res)


SCENARIOS: dict[str, Callable[[bool, dict], Bundle]] = {
    "clique-die-out": repro_clique_die_out,
    "clique-full": repro_clique_full,
    "clique-mixed": repro_clique_mixed,
    "arbitrary-die-out": repro_arbitrary_die_out,
    "arbitrary-flood": repro_arbitrary_flood,
    "arbitrary-mixed": repro_arbitrary_mixed,
    "five-profile": repro_five_profile,
    "powerlaw": repro_powerlaw,
}


def run_scenario(name: str, full: bool = False, **opts) -> Bundle:
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; valid: {', '.join(SCENARIOS)}")
    return SCENARIOS[name](full, opts)


def cmd_repro(args) -> int:
    opts = {k: getattr(args, k) for k in ("replications", "rng_seed", "graph", "format")}
    bundle = run_scenario(args.name, args.full_scale, **opts)
    prov = Provenance(config_hash(effective_config(args)), args.rng_seed)
    out = Path(args.out_dir or "repro") / args.name
    if bundle.result is not None:
        res = bundle.result
        k = res.aggregate.mean.shape[1]
        agg = res.aggregate
        header = ["round"] + [f"mean_profile_{i}" for i in range(k)] + [f"std_profile_{i}" for i in range(k)] + \
                 ["mean_total", "std_total"]
        rows = ([r] + m.tolist() + s.tolist() + [tm, ts] for r, m, s, tm, ts in
                zip(agg.rounds.tolist(), agg.mean, agg.std, agg.total_mean.tolist(), agg.total_std.tolist()))
        write_csv(out / "aggregate.csv", header, rows, prov)
    manifest = bundle.manifest(prov)
    write_json(out / "manifest.json", manifest)
    if args.json:
        print(json.dumps(manifest, indent=2, default=_json_default))
    else:
        print(f"{bundle.name}: {'PASS' if bundle.passed else 'FAIL'} ({bundle.predicate})")
    return EXIT_OK if bundle.passed else EXIT_RUNTIME


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON file whose keys override flags")
    p.add_argument("-o", "--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _graph_opts() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--graph", help="edge-list file")
    p.add_argument("--format", choices=("snap", "csv"), default="snap")
    p.add_argument("--gen", help="generator spec, e.g. powerlaw:n=1000,exponent=2.72,seed=7")
    p.add_argument("--profiles", default="split:2", help="split:K[:SEED], blocks:K, attr:PATH:BINS or file:PATH")
    p.add_argument("--rate", action="append", help="BETA,DELTA for the next profile id (repeatable)")
    p.add_argument("--params", help="JSON file {\"profiles\": [{\"beta\": .., \"delta\": ..}, ...]}")
    return p


def build_parser() -> argparse.ArgumentParser:
    common, graph = _common(), _graph_opts()
    parser = argparse.ArgumentParser(prog="hetero-sis", description="Heterogeneous multi-profile SIS toolkit")
    parser.add_argument("--version", action="version", version=f"hetero-sis {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a synthetic graph")
    g.add_argument("kind", choices=sorted(GENERATORS))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=float, default=0.05, help="edge probability (er)")
    g.add_argument("--exponent", type=float, default=2.72, help="power-law exponent")
    g.add_argument("--scale", type=float, default=None, help="power-law maximum degree")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", help="edge-list path (default <kind>_<n>.txt)")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("analyze", help="fixed-point and threshold analysis")
    asub = a.add_subparsers(dest="target", required=True)
    c = asub.add_parser("clique", parents=[common], help="two-profile clique fixed points")
    c.add_argument("--n", type=int, help="nodes per profile")
    for name in ("beta-a", "beta-b", "delta-a", "delta-b"):
        c.add_argument(f"--{name}", type=float)
    c.add_argument("--fixed-point", default="zero", help="zero, full:C, mixed:C or at:IA,IB")
    for name, hlp in (("zero-stability", "spectral die-out test"), ("pf-fixed-point", "non-zero mean-field fixed point"),
                      ("meanfield", "integrate the mean-field ODE")):
        s = asub.add_parser(name, parents=[common, graph], help=hlp)
        s.add_argument("--tol", type=float, default=1e-10)
        if name == "meanfield":
            s.add_argument("--t-end", type=float, default=1000.0)
            s.add_argument("--p0", type=float, default=0.1)
            s.add_argument("--record-every", type=int, default=10)
    b = asub.add_parser("bounds", parents=[common, graph], help="degree windows for the flood/mixed regimes")
    b.add_argument("--mode", choices=("flood", "mixed"), required=True)
    b.add_argument("--a", type=float, required=True)
    b.add_argument("--b", type=float, required=True)
    b.add_argument("--x", type=float)
    b.add_argument("--ratio", type=float, action="append", help="beta/delta of the next profile (repeatable)")
    for s in (c, b, *[asub.choices[n] for n in ("zero-stability", "pf-fixed-point", "meanfield")]):
        s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", parents=[common, graph], help="stochastic SIS replications")
    s.add_argument("--rounds", type=int, default=2000)
    s.add_argument("--replications", type=int, default=8)
    s.add_argument("--rng-seed", type=int, default=0)
    s.add_argument("--seeding", default="top:0.05", help="top:F, bottom:F, per-profile:K or nodes:I,J,...")
    s.add_argument("--record-every", type=int, default=1)
    s.add_argument("--steady-window", type=float, default=0.2)
    s.add_argument("--steady-tolerance", type=float, default=0.02)
    s.add_argument("--compare-meanfield", action="store_true")
    s.add_argument("--no-traces", action="store_true", help="skip per-replication trace files")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("repro", parents=[common], help="scripted experiment bundles")
    r.add_argument("name", choices=list(SCENARIOS))
    r.add_argument("--full-scale", action="store_true")
    r.add_argument("--graph", help="contact-network edge list for the arbitrary/five-profile scenarios")
    r.add_argument("--format", choices=("snap", "csv"), default="snap")
    r.add_argument("--replications", type=int)
    r.add_argument("--rng-seed", type=int, default=0)
    r.set_defaults(func=cmd_repro)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        apply_config(args, parser)
        return args.func(args)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphError, ProfileError, CliqueError, SimulationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failure
        log.debug("failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
