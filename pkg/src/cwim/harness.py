"""Experiment harness: wire environment, oracle, and learner over T rounds.

A run plays the round loop (propose seeds, simulate one cascade, score an
independent comparator cascade, update the learner), records per-round
regret, and repeats R times with independent cascade randomness while graph,
model, and corruption schedule stay fixed. Results go to per-run CSVs plus
an aggregate CSV of mean curves with std/sqrt(R) error bars.

All randomness is derived from (master_seed, purpose tag, run id, round), so
results are bit-reproducible and independent of how runs are scheduled.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import environment as env
from .diffusion import simulate_cascade
from .graph import Graph, GraphStats, analyze, gen_erdos_renyi, load_edge_list
from .learner import (
    CucbLearner,
    CwImLinUcb,
    CwParams,
    EpsGreedyLearner,
    ImLinUcb,
    resolve_cw_params,
    resolve_imlinucb_params,
)
from .oracle import OracleSpec


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class HarnessError(RuntimeError):
    """Failure while running or aggregating an experiment."""


ALGORITHMS = ("cw", "imlinucb", "cucb", "eps_greedy", "replay")

# purpose tags for deriving independent RNG streams
_TAG_MODEL = 1
_TAG_USERS = 2
_TAG_COMPARATOR = 3
_TAG_PROPOSE = 4
_TAG_CASCADE = 5
_TAG_OPT = 6
_TAG_PAIR = 7


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(list(key))


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully-typed experiment description; see CONFIG_KEYS for file keys."""

    algorithm: str
    graph_kind: str
    dim: int
    budget_k: int
    horizon: int
    runs: int
    master_seed: int
    graph_n: Optional[int] = None
    graph_p_edge: Optional[float] = None
    graph_seed: Optional[int] = None
    graph_path: Optional[str] = None
    graph_node_limit: Optional[int] = None
    sigma: float = 1.0
    beta: Optional[float] = None  # None = auto
    lam: Optional[float] = None  # None = auto
    c_bar: str = "0"  # 'oracle' | 'sqrt_t' | numeric literal
    epsilon: float = 0.1
    oracle: str = "degree_discount"
    oracle_alpha: float = 1.0
    oracle_gamma: float = 1.0
    oracle_mc_samples: int = 1000
    corrupt_strategy: str = "none"
    corrupt_users: str = ""  # 'random' | ';'-joined ids | ''
    corrupt_count: int = 0
    corrupt_rounds: int = 0
    corrupt_floor: float = 0.05
    mean_prob: Optional[float] = None
    comparator: str = "oracle"
    paired_sampling: bool = False
    out_dir: Optional[str] = None


CONFIG_KEYS = {
    "algorithm": str,
    "graph_kind": str,
    "graph_n": int,
    "graph_p_edge": float,
    "graph_seed": int,
    "graph_path": str,
    "graph_node_limit": int,
    "dim": int,
    "budget_k": int,
    "horizon": int,
    "runs": int,
    "master_seed": int,
    "sigma": float,
    "beta": "auto_or_float",
    "lam": "auto_or_float",
    "c_bar": str,
    "epsilon": float,
    "oracle": str,
    "oracle_alpha": float,
    "oracle_gamma": float,
    "oracle_mc_samples": int,
    "corrupt_strategy": str,
    "corrupt_users": str,
    "corrupt_count": int,
    "corrupt_rounds": int,
    "corrupt_floor": float,
    "mean_prob": float,
    "comparator": str,
    "paired_sampling": bool,
    "out_dir": str,
}

_REQUIRED = ("algorithm", "graph_kind", "dim", "budget_k", "horizon", "runs", "master_seed")


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse the flat key = value config format (``#`` starts a comment)."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        typ = CONFIG_KEYS[key]
        try:
            if typ == "auto_or_float":
                values[key] = None if val == "auto" else float(val)
            elif typ is bool:
                if val not in ("on", "off"):
                    raise ValueError(val)
                values[key] = val == "on"
            else:
                values[key] = typ(val)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value {val!r} for {key}")
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required keys: {', '.join(missing)}")
    return ExperimentConfig(**values)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read(), source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def resolved_config_text(cfg: ExperimentConfig) -> str:
    """All keys materialized (defaults included) in a re-parseable form."""
    lines = []
    for key in CONFIG_KEYS:
        val = getattr(cfg, key)
        if val is None:
            if CONFIG_KEYS[key] == "auto_or_float":
                lines.append(f"{key} = auto")
            continue
        if isinstance(val, bool):
            lines.append(f"{key} = {'on' if val else 'off'}")
        else:
            lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


@dataclass
class RoundRecord:
    run_id: int
    t: int
    seeds: tuple[int, ...]
    reward: int
    opt_reward: int
    inst_regret: float
    cum_regret: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    graph: Graph
    stats: GraphStats
    comparators: list[tuple[int, ...]]
    runs: list[list[RoundRecord]]
    aggregate_rows: list[tuple]
    budget: env.CorruptionBudget
    realized_budget: dict[int, float]
    resolved_params: dict


@dataclass
class _RunContext:
    """Everything a single run needs; picklable for process pools."""

    cfg: ExperimentConfig
    g: Graph
    stats: GraphStats
    model: env.LinearActivationModel
    schedule: env.CorruptionSchedule
    oracle_spec: OracleSpec
    lam: Optional[float]
    beta: Optional[float]


def build_graph(cfg: ExperimentConfig) -> Graph:
    if cfg.graph_kind == "er":
        if cfg.graph_n is None or cfg.graph_p_edge is None or cfg.graph_seed is None:
            raise ConfigError("graph_kind=er needs graph_n, graph_p_edge, graph_seed")
        return gen_erdos_renyi(cfg.graph_n, cfg.graph_p_edge, cfg.graph_seed)
    if cfg.graph_kind == "file":
        if not cfg.graph_path:
            raise ConfigError("graph_kind=file needs graph_path")
        return load_edge_list(cfg.graph_path, cfg.graph_node_limit)
    raise ConfigError(f"unknown graph_kind {cfg.graph_kind!r}")


def _corrupted_user_set(cfg: ExperimentConfig, g: Graph) -> frozenset[int]:
    if cfg.corrupt_strategy == "none" or not cfg.corrupt_users:
        return frozenset()
    if cfg.corrupt_users == "random":
        if cfg.corrupt_count < 1:
            raise ConfigError("corrupt_users=random needs corrupt_count >= 1")
        eligible = [u for u in range(g.n) if g.out_degree(u) > 0]
        if cfg.corrupt_count > len(eligible):
            raise ConfigError(
                f"corrupt_count={cfg.corrupt_count} exceeds {len(eligible)} nodes with out-edges"
            )
        perm = _rng(cfg.master_seed, _TAG_USERS).permutation(len(eligible))
        return frozenset(eligible[i] for i in perm[: cfg.corrupt_count])
    try:
        users = frozenset(int(tok) for tok in cfg.corrupt_users.split(";") if tok)
    except ValueError:
        raise ConfigError(f"bad corrupt_users value {cfg.corrupt_users!r}")
    for u in users:
        if not (0 <= u < g.n):
            raise ConfigError(f"corrupted user {u} out of range for n={g.n}")
    return users


def _resolve_c_bar(
    cfg: ExperimentConfig,
    model: env.LinearActivationModel,
    schedule: env.CorruptionSchedule,
    g: Graph,
) -> float:
    if cfg.c_bar == "oracle":
        return env.total_budget(model, schedule, g, cfg.horizon).max_budget
    if cfg.c_bar == "sqrt_t":
        return math.sqrt(cfg.horizon)
    try:
        value = float(cfg.c_bar)
    except ValueError:
        raise ConfigError(f"c_bar must be 'oracle', 'sqrt_t', or a number, got {cfg.c_bar!r}")
    if value < 0:
        raise ConfigError(f"c_bar must be >= 0, got {value}")
    return value


class _ReplayComparator:
    """Degenerate policy that always plays a fixed seed set (testing aid)."""

    kind = "replay"

    def __init__(self, seeds: tuple[int, ...]):
        self.seeds = tuple(seeds)

    def propose_seeds(self, g, k, oracle, rng=None):
        return self.seeds

    def update(self, feedback, t):
        pass


def _make_learner(ctx: _RunContext, comparator: tuple[int, ...]):
    cfg = ctx.cfg
    if cfg.algorithm == "cw":
        return CwImLinUcb(ctx.model.x, cfg.sigma, ctx.lam, ctx.beta)
    if cfg.algorithm == "imlinucb":
        return ImLinUcb(ctx.model.x, cfg.sigma, ctx.beta)
    if cfg.algorithm == "cucb":
        return CucbLearner(ctx.g.m)
    if cfg.algorithm == "eps_greedy":
        return EpsGreedyLearner(ctx.g.m, cfg.epsilon)
    if cfg.algorithm == "replay":
        return _ReplayComparator(comparator)
    raise ConfigError(f"unknown algorithm {cfg.algorithm!r}")


def comparator_set(
    g: Graph,
    k: int,
    model: env.LinearActivationModel,
    oracle_spec: OracleSpec,
    rng: Optional[np.random.Generator] = None,
) -> tuple[int, ...]:
    """Oracle solution on the uncorrupted true probabilities."""
    return oracle_spec.select(g, k, model.true_probs(), rng)


def _run_one(ctx: _RunContext, run_id: int) -> tuple[list[RoundRecord], tuple[int, ...], dict[int, float]]:
    cfg = ctx.cfg
    g, model, schedule = ctx.g, ctx.model, ctx.schedule
    ms = cfg.master_seed
    comparator = comparator_set(
        g, cfg.budget_k, model, ctx.oracle_spec, _rng(ms, _TAG_COMPARATOR, run_id)
    )
    learner = _make_learner(ctx, comparator)
    scale = cfg.oracle_alpha * cfg.oracle_gamma
    base_probs = model.true_probs()
    realized = {u: 0.0 for u in schedule.corrupted_users}
    records: list[RoundRecord] = []
    cum = 0.0
    for t in range(1, cfg.horizon + 1):
        probs_t = env.probs_at_round(model, schedule, g, t)
        seeds = learner.propose_seeds(
            g, cfg.budget_k, ctx.oracle_spec, _rng(ms, _TAG_PROPOSE, run_id, t)
        )
        coupling = None
        if cfg.paired_sampling:
            coupling = _rng(ms, _TAG_PAIR, run_id, t).random(g.m)
        fb = simulate_cascade(g, probs_t, seeds, _rng(ms, _TAG_CASCADE, run_id, t), coupling)
        fb_opt = simulate_cascade(
            g, probs_t, comparator, _rng(ms, _TAG_OPT, run_id, t), coupling
        )
        reward = len(fb.activated)
        opt_reward = len(fb_opt.activated)
        inst = opt_reward - reward / scale
        cum += inst
        records.append(
            RoundRecord(
                run_id=run_id,
                t=t,
                seeds=tuple(sorted(seeds)),
                reward=reward,
                opt_reward=opt_reward,
                inst_regret=inst,
                cum_regret=cum,
            )
        )
        for u in realized:
            eids = g.out_adj[u]
            if eids:
                realized[u] += float(np.abs(probs_t[eids] - base_probs[eids]).max())
        learner.update(fb, t)
    return records, comparator, realized


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Execute all runs of an experiment and aggregate the regret curves."""
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {cfg.algorithm!r}")
    if cfg.horizon < 1 or cfg.runs < 1:
        raise ConfigError("horizon and runs must be >= 1")
    if cfg.comparator != "oracle":
        raise ConfigError(f"unknown comparator mode {cfg.comparator!r}")
    g = build_graph(cfg)
    if not (1 <= cfg.budget_k <= g.n):
        raise ConfigError(f"budget_k={cfg.budget_k} out of range for n={g.n}")
    stats = analyze(g, cfg.budget_k)
    # model randomness is pinned to (master_seed, model tag)
    model = env.gen_model(
        g, cfg.dim, rng_seed=[cfg.master_seed, _TAG_MODEL], mean_prob=cfg.mean_prob
    )
    users = _corrupted_user_set(cfg, g)
    schedule = env.CorruptionSchedule(
        corrupted_users=users,
        strategy=cfg.corrupt_strategy,
        rounds=cfg.corrupt_rounds,
        floor=cfg.corrupt_floor,
    )
    oracle_spec = OracleSpec(
        kind=cfg.oracle,
        alpha=cfg.oracle_alpha,
        gamma=cfg.oracle_gamma,
        mc_samples=cfg.oracle_mc_samples,
    )
    c_bar_value = _resolve_c_bar(cfg, model, schedule, g)
    params = CwParams(sigma=cfg.sigma, lam=cfg.lam, beta=cfg.beta, c_bar=c_bar_value)
    if cfg.algorithm == "cw":
        lam, beta = resolve_cw_params(
            params, stats, cfg.dim, g.n, cfg.horizon, model.theta_bound
        )
    else:
        lam, beta = resolve_imlinucb_params(
            params, stats, cfg.dim, g.n, cfg.horizon, model.theta_bound
        )
    ctx = _RunContext(
        cfg=cfg,
        g=g,
        stats=stats,
        model=model,
        schedule=schedule,
        oracle_spec=oracle_spec,
        lam=lam,
        beta=beta,
    )

    run_ids = list(range(cfg.runs))
    if jobs > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_one_star, [(ctx, r) for r in run_ids]))
    else:
        outputs = [_run_one(ctx, r) for r in run_ids]

    runs = [out[0] for out in outputs]
    comparators = [out[1] for out in outputs]
    realized = outputs[0][2]
    budget = env.total_budget(model, schedule, g, cfg.horizon) if users else env.CorruptionBudget({}, 0.0)
    for u, total in realized.items():
        if budget.per_user.get(u, 0.0) != total:
            raise HarnessError(
                f"budget audit failed for user {u}: realized {total} vs {budget.per_user.get(u)}"
            )
    rows = aggregate(runs, cfg.algorithm)
    return ExperimentResult(
        config=cfg,
        graph=g,
        stats=stats,
        comparators=comparators,
        runs=runs,
        aggregate_rows=rows,
        budget=budget,
        realized_budget=realized,
        resolved_params={
            "lam": lam,
            "beta": beta,
            "c_bar": c_bar_value,
            "e_star": stats.e_star,
            "e_c": stats.e_c,
            "n_tilde": stats.n_tilde,
            "theta_bound": model.theta_bound,
            "m": g.m,
        },
    )


def _run_one_star(args):
    return _run_one(*args)


def aggregate(runs: Sequence[Sequence[RoundRecord]], algorithm: str) -> list[tuple]:
    """Per-round mean curves with std/sqrt(R) error bars across runs."""
    if not runs:
        raise HarnessError("need at least one complete run")
    horizon = len(runs[0])
    for records in runs:
        if len(records) != horizon:
            raise HarnessError("ragged runs: differing horizons")
    ordered = sorted(runs, key=lambda records: records[0].run_id)
    r_count = len(ordered)
    rows = []
    for i in range(horizon):
        t = ordered[0][i].t
        cums = np.array([records[i].cum_regret for records in ordered])
        rewards = np.array([float(records[i].reward) for records in ordered])
        if r_count > 1:
            stderr = float(cums.std(ddof=1) / math.sqrt(r_count))
            reward_stderr = float(rewards.std(ddof=1) / math.sqrt(r_count))
        else:
            stderr = 0.0
            reward_stderr = 0.0
        rows.append(
            (t, algorithm, float(cums.mean()), stderr, float(rewards.mean()), reward_stderr)
        )
    return rows


RUN_CSV_HEADER = "run_id,t,seeds,reward,opt_reward,inst_regret,cum_regret"
AGG_CSV_HEADER = "t,algorithm,mean_cum_regret,stderr,mean_reward,reward_stderr"


def write_run_csv(path: str, records: Sequence[RoundRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(RUN_CSV_HEADER + "\n")
        for rec in records:
            seeds = ";".join(str(s) for s in rec.seeds)
            fh.write(
                f"{rec.run_id},{rec.t},{seeds},{rec.reward},{rec.opt_reward},"
                f"{rec.inst_regret!r},{rec.cum_regret!r}\n"
            )


def read_run_csv(path: str) -> list[RoundRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != RUN_CSV_HEADER:
            raise HarnessError(f"{path}: unexpected header {header!r}")
        records = []
        for line in fh:
            run_id, t, seeds, reward, opt_reward, inst, cum = line.rstrip("\n").split(",")
            records.append(
                RoundRecord(
                    run_id=int(run_id),
                    t=int(t),
                    seeds=tuple(int(s) for s in seeds.split(";") if s),
                    reward=int(reward),
                    opt_reward=int(opt_reward),
                    inst_regret=float(inst),
                    cum_regret=float(cum),
                )
            )
    return records


def write_aggregate_csv(path: str, rows: Sequence[tuple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(AGG_CSV_HEADER + "\n")
        for t, algorithm, mean_cum, stderr, mean_reward, reward_stderr in rows:
            fh.write(
                f"{t},{algorithm},{mean_cum!r},{stderr!r},{mean_reward!r},{reward_stderr!r}\n"
            )


def read_aggregate_csv(path: str) -> list[tuple]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != AGG_CSV_HEADER:
            raise HarnessError(f"{path}: unexpected header {header!r}")
        rows = []
        for line in fh:
            t, algorithm, mean_cum, stderr, mean_reward, reward_stderr = line.rstrip("\n").split(",")
            rows.append(
                (int(t), algorithm, float(mean_cum), float(stderr), float(mean_reward), float(reward_stderr))
            )
    return rows


def run_to_dir(cfg: ExperimentConfig, out_dir: str, force: bool = False, jobs: int = 1) -> ExperimentResult:
    """Run an experiment and persist resolved config, per-run CSVs, aggregate CSV."""
    if os.path.exists(out_dir):
        if not force:
            raise ConfigError(f"output directory {out_dir} exists (use force to overwrite)")
    else:
        os.makedirs(out_dir)
    result = run_experiment(cfg, jobs=jobs)
    with open(os.path.join(out_dir, "resolved.cfg"), "w", encoding="utf-8") as fh:
        fh.write(resolved_config_text(cfg))
        fh.write("# resolved values\n")
        for key, val in result.resolved_params.items():
            fh.write(f"# {key} = {val}\n")
        for u in sorted(result.realized_budget):
            fh.write(f"# realized_budget[{u}] = {result.realized_budget[u]!r}\n")
    for run_id, records in enumerate(result.runs):
        write_run_csv(os.path.join(out_dir, f"run_{run_id:03d}.csv"), records)
    write_aggregate_csv(os.path.join(out_dir, "aggregate.csv"), result.aggregate_rows)
    return result


def aggregate_dir(in_dir: str) -> list[tuple]:
    """Re-aggregate the per-run CSVs found in a run output directory."""
    runs = []
    algorithm = None
    cfg_path = os.path.join(in_dir, "resolved.cfg")
    if os.path.exists(cfg_path):
        algorithm = load_config(cfg_path).algorithm
    names = sorted(
        name for name in os.listdir(in_dir) if name.startswith("run_") and name.endswith(".csv")
    )
    if not names:
        raise HarnessError(f"no run_*.csv files in {in_dir}")
    for name in names:
        runs.append(read_run_csv(os.path.join(in_dir, name)))
    if algorithm is None:
        algorithm = "unknown"
    return aggregate(runs, algorithm)
