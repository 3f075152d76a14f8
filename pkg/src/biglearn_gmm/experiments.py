"""Experiment drivers behind the command-line interface.

Each driver is a deterministic function of its :class:`ExperimentSpec`: every
seed gets independent random streams spawned from ``SeedSequence(seed)``, so
results do not depend on the order (or process) in which seeds are run.
"""

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .data import apply_minmax, load_dataset, make_grid_gmm, minmax_scale, subsample, train_test_split
from .em import BigLearnConfig, run_biglearn_em
from .gmm import GmmParams, mc_kl, sample
from .metrics import MetricsReport, evaluate

log = logging.getLogger(__name__)

METHODS = ("joint-em", "biglearn-em")
COMMANDS = ("simulate", "train", "evaluate", "ablate", "scarcity")
SCARCITY_FRACTIONS = (0.8, 0.6, 0.4, 0.2, 0.1, 0.05)

# stream slots spawned from each seed
_DATA, _SPLIT, _TRAIN, _KL, _SUBSAMPLE = range(5)


@dataclass(frozen=True)
class GridSpec:
    side: int = 5
    spacing: float = 2.0
    sigma: float = 0.1
    n_train: int = 10000
    kl_samples: int = 100000


@dataclass
class ExperimentSpec:
    command: str = "train"
    dataset: Optional[str] = None
    test_dataset: Optional[str] = None
    test_fraction: float = 0.2
    synthetic: GridSpec = field(default_factory=GridSpec)
    config: BigLearnConfig = field(default_factory=BigLearnConfig)
    seeds: List[int] = field(default_factory=lambda: [0])
    out: str = "runs/latest"
    method: str = "biglearn-em"
    fractions: List[float] = field(default_factory=lambda: list(SCARCITY_FRACTIONS))
    model: Optional[str] = None
    scaling: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        if "synthetic" in doc:
            doc["synthetic"] = GridSpec(**doc["synthetic"])
        if "config" in doc:
            doc["config"] = BigLearnConfig.from_dict(doc["config"])
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self):
        return asdict(self)


def streams(seed, n=5):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def method_config(cfg, method):
    return cfg.joint_only() if method == "joint-em" else cfg


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_csv_rows(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path, doc):
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def summarize(values):
    a = np.asarray([v for v in values if v is not None], dtype=float)
    if a.size == 0:
        return {"mean": None, "std": None, "stderr": None, "n": 0}
    std = float(a.std(ddof=1)) if a.size > 1 else 0.0
    return {"mean": float(a.mean()), "std": std, "stderr": std / np.sqrt(a.size), "n": int(a.size)}


# --- simulation ------------------------------------------------------------

def simulate_run(grid, cfg, seed, init=None):
    """Train one configuration on the grid data of ``seed``; return (KL, model, trace)."""
    data_rng, _, train_rng, kl_rng, _ = streams(seed)
    truth = make_grid_gmm(grid.side, grid.spacing, grid.sigma)
    X = sample(truth, grid.n_train, data_rng)
    model, trace = run_biglearn_em(X, cfg, train_rng, init=init)
    return mc_kl(truth, model, grid.kl_samples, kl_rng), model, trace


def _simulate_task(args):
    grid, cfg, seed, method = args
    kl, model, _ = simulate_run(grid, method_config(cfg, method), seed)
    return seed, method, kl, model


def cmd_simulate(spec):
    out = Path(spec.out)
    (out / "models").mkdir(parents=True, exist_ok=True)
    tasks = [(spec.synthetic, spec.config, s, m) for s in spec.seeds for m in METHODS]
    results = _map(_simulate_task, tasks, spec.jobs)
    rows = []
    for seed, method, kl, model in results:
        model.save(out / "models" / f"seed{seed}_{method}.json")
        rows.append((seed, method, kl))
        log.info("seed %d %s: KL %.4f", seed, method, kl)
    write_csv_rows(out / "per_seed.csv", ["seed", "method", "kl"], rows)
    aggregate = {m: summarize([kl for _, mm, kl in rows if mm == m]) for m in METHODS}
    write_json(out / "aggregate.json", aggregate)
    return aggregate


# --- ablation --------------------------------------------------------------

def ablation_lattice(cfg):
    """The six configurations of the ablation table, as (name, config) pairs."""
    marginal_share = cfg.p_joint + cfg.p_marginal
    p1 = cfg.p_joint / marginal_share if marginal_share > 0 else 0.5
    return [
        ("Joint-EM", cfg.replace(eta=0.0, p_joint=1.0, p_marginal=0.0)),
        ("+Pr", cfg.replace(p_joint=1.0, p_marginal=0.0)),
        ("+Pr+MM", cfg.replace(p_joint=p1, p_marginal=1.0 - p1)),
        ("+Pr+MM+RTMM+W1", cfg.replace(local_updates=1)),
        ("+Pr+MM+RTMM+W5", cfg.replace(local_updates=5)),
        ("+Pr+MM+RTMM+W10", cfg.replace(local_updates=10)),
    ]


class DeadComponentCheck:
    """Evaluator asserting that a zero mixture weight stays exactly zero."""

    def __init__(self):
        self.dead = np.zeros(0, dtype=bool)

    def __call__(self, model, it):
        zero = model.weights == 0.0
        if self.dead.size and np.any(self.dead & ~zero):
            raise AssertionError(f"a dead component was revived at outer iteration {it}")
        self.dead = zero
        return {"dead_components": int(zero.sum())}


def _ablation_task(args):
    grid, name, cfg, seed = args
    data_rng, _, train_rng, kl_rng, _ = streams(seed)
    truth = make_grid_gmm(grid.side, grid.spacing, grid.sigma)
    X = sample(truth, grid.n_train, data_rng)
    check = DeadComponentCheck() if cfg.eta == 0 else None
    model, _ = run_biglearn_em(X, cfg, train_rng, evaluator=check)
    return name, seed, mc_kl(truth, model, grid.kl_samples, kl_rng)


def run_ablation(grid, cfg, seeds, jobs=1, names=None):
    lattice = [(n, c) for n, c in ablation_lattice(cfg) if names is None or n in names]
    tasks = [(grid, n, c, s) for n, c in lattice for s in seeds]
    runs = _map(_ablation_task, tasks, jobs)
    table = []
    for name, c in lattice:
        stats = summarize([kl for n, _, kl in runs if n == name])
        table.append({"method": name, "eta": c.eta, "p_joint": c.p_joint,
                      "p_marginal": c.p_marginal, "local_updates": c.local_updates,
                      "outer_iters": c.outer_iters, "kl_mean": stats["mean"],
                      "kl_std": stats["std"], "kl_stderr": stats["stderr"], "n_seeds": stats["n"]})
    return table, runs


ABLATION_COLUMNS = ["method", "eta", "p_joint", "p_marginal", "local_updates", "outer_iters",
                    "kl_mean", "kl_std", "kl_stderr", "n_seeds"]


def cmd_ablate(spec):
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    table, runs = run_ablation(spec.synthetic, spec.config, spec.seeds, spec.jobs)
    write_csv_rows(out / "ablation.csv", ABLATION_COLUMNS,
                   [[row[c] for c in ABLATION_COLUMNS] for row in table])
    write_csv_rows(out / "ablation_runs.csv", ["method", "seed", "kl"], runs)
    return table


# --- real datasets ---------------------------------------------------------

def prepare_split(spec, seed):
    """Load, split (official test file if given) and min-max scale with train statistics."""
    data = load_dataset(spec.dataset)
    if spec.test_dataset:
        train, test = data, load_dataset(spec.test_dataset, dim=data.dim)
    else:
        train, test = train_test_split(data, spec.test_fraction, streams(seed)[_SPLIT])
    train, ranges = minmax_scale(train)
    return train, apply_minmax(test, ranges), ranges


class TestMetrics:
    """Evaluator recording NMI, ARI and mean log-likelihood on a held-out set."""

    def __init__(self, test):
        self.test = test

    def __call__(self, model, it):
        report = evaluate(model, self.test.X, self.test.labels)
        return {"nmi": report.nmi, "ari": report.ari, "joint_ll": report.joint_ll}


def tail_report(trace, window, model, test):
    """Metrics averaged over the last ``window`` outer iterations."""
    if len(trace) == 0:
        return evaluate(model, test.X, test.labels)
    return MetricsReport(nmi=trace.tail_mean("nmi", window), ari=trace.tail_mean("ari", window),
                         joint_ll=trace.tail_mean("joint_ll", window))


def train_run(train, test, cfg, seed):
    """Train on ``train`` with the seed's training stream; evaluate on ``test``."""
    train_rng = streams(seed)[_TRAIN]
    model, trace = run_biglearn_em(train.X, cfg, train_rng, evaluator=TestMetrics(test))
    return model, trace, tail_report(trace, cfg.tail_window, model, test)


def _train_task(args):
    spec, seed, method = args
    train, test, ranges = prepare_split(spec, seed)
    model, trace, report = train_run(train, test, method_config(spec.config, method), seed)
    return seed, model, trace, report, ranges


def cmd_train(spec):
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    results = _map(_train_task, [(spec, s, spec.method) for s in spec.seeds], spec.jobs)
    multi = len(results) > 1
    for seed, model, trace, report, ranges in results:
        where = out / f"seed{seed}" if multi else out
        where.mkdir(exist_ok=True)
        model.save(where / "model.json")
        trace.to_csv(where / "trace.csv")
        write_json(where / "metrics.json", report.to_dict())
        write_json(where / "scaling.json", {"min": ranges[:, 0].tolist(), "max": ranges[:, 1].tolist()})
        log.info("seed %d: NMI %s ARI %s LL %s", seed, report.nmi, report.ari, report.joint_ll)
    if multi:
        write_json(out / "aggregate.json", {
            key: summarize([getattr(r[3], key) for r in results]) for key in ("nmi", "ari", "joint_ll")
        })
    return [r[3] for r in results]


def cmd_evaluate(spec):
    if not spec.model:
        raise ValueError("evaluate needs a model file (--model)")
    model = GmmParams.load(spec.model)
    data = load_dataset(spec.dataset, dim=model.dim)
    if spec.scaling:
        with open(spec.scaling) as f:
            doc = json.load(f)
        data = apply_minmax(data, np.stack([doc["min"], doc["max"]], axis=1))
    else:
        data, _ = minmax_scale(data)
    report = evaluate(model, data.X, data.labels)
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "metrics.json", report.to_dict())
    return report


def _scarcity_task(args):
    spec, seed, fraction_index, fraction = args
    train, test, _ = prepare_split(spec, seed)
    sub_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(5)[_SUBSAMPLE].spawn(fraction_index + 1)[-1])
    part = subsample(train, fraction, sub_rng)
    rows = []
    for method in METHODS:
        _, _, report = train_run(part, test, method_config(spec.config, method), seed)
        rows.append((fraction, seed, method, report.nmi, report.ari))
    return rows


def cmd_scarcity(spec):
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(spec, s, i, f) for i, f in enumerate(spec.fractions) for s in spec.seeds]
    rows = [row for chunk in _map(_scarcity_task, tasks, spec.jobs) for row in chunk]
    write_csv_rows(out / "scarcity.csv", ["fraction", "seed", "method", "nmi", "ari"], rows)
    return rows


DISPATCH = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "scarcity": cmd_scarcity,
}


def run(spec):
    return DISPATCH[spec.command](spec)
