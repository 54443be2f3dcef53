#!/usr/bin/env python3
"""
Experiment Harness
Config-driven experiments built from the library modules: single training
runs, parameter sweeps on a process pool, counterexample reports and
summary tables pivoted by optimizer. Every artifact is written atomically and
re-running a config with the same seed reproduces it byte for byte.
"""

import copy
import hashlib
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from datasets import save_dataset
from errors import ConfigInvalid, DivergenceDetected, InsufficientTrace
from fileio import read_csv, write_csv, write_json, write_matrix_csv
from initialization import build_network
from linalg import cosine_similarity, make_rng, matrix_power
from network import agop_empirical, agop_linear, neural_feature_matrix, save_checkpoint
from nfa import alpha_sweep, best_alpha_tilde, defect_decay_rates
from optim import OptimizerConfig, Schedule, train
from targets import (
    COUNTEREXAMPLE_SAMPLES,
    make_multiindex_target,
    network_dataset,
    oscillation_counterexample,
    relu_sum_counterexample,
    sample_multiindex,
    sample_square,
    shift_counterexample,
    singular_value_profile,
)

HEAD_KINDS = ("none", "relu", "generic")
TARGET_KINDS = ("multiindex", "network")

OPTIMIZER_PRESETS = {
    "gd": {"kind": "gd", "momentum": 0.0},
    "gdm": {"kind": "gd", "momentum": 0.9},
    "sgd": {"kind": "sgd", "momentum": 0.0},
    "sgdm": {"kind": "sgd", "momentum": 0.9},
    "adam": {"kind": "adam", "momentum": 0.0},
}
TABLE_OPTIMIZERS = ("adam", "gd", "gdm", "sgd", "sgdm")

AXIS_ALIASES = {
    "L": "architecture.depth",
    "lambda": "optimizer.weight_decay",
    "optimizer": "optimizer.label",
    "rank": "target.rank",
    "sigma": "target.noise_sigma",
    "width": "architecture.width",
}

SUMMARY_COLUMNS = [
    "run", "status", "sigma", "depth", "weight_decay", "optimizer", "rank", "width",
    "balanced", "seed", "final_loss", "cos_inv_L", "best_alpha_tilde", "defect_rate",
]

PAPER_SCALE = {"width": 64, "n": 2048, "main_epochs": 60000}
SEED_ENV = "NFA_LAB_SEED"
OSCILLATION_NS = (1, 2, 5, 10)
SHIFTS = (0.1, 0.5, 1.0)


@dataclass
class ArchitectureConfig:
    depth: int = 2
    width: int = 32
    head: str = "relu"
    balanced: bool = False
    bias: bool = True


@dataclass
class TargetConfig:
    """`multiindex` draws a random low-rank target; `network` labels the data
    with the freshly initialized network itself."""
    kind: str = "multiindex"
    d: int = 20
    rank: int = 5
    link: str = "relu"
    output: str = "scalar"
    output_dim: Optional[int] = None
    noise_sigma: float = 0.0


@dataclass
class DataConfig:
    n: int = 512
    seed: int = 0


@dataclass
class AlphaGridConfig:
    """α̃ = Lα grid; record_alpha also sweeps it at every recorded epoch."""
    start: float = 0.1
    stop: float = 3.0
    step: float = 0.05
    record_alpha: bool = False

    def tildes(self) -> np.ndarray:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(count), 10)


@dataclass
class ExperimentConfig:
    architecture: ArchitectureConfig = field(default_factory=ArchitectureConfig)
    target: TargetConfig = field(default_factory=TargetConfig)
    data: DataConfig = field(default_factory=DataConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    schedule: Schedule = field(default_factory=Schedule)
    alpha_grid: AlphaGridConfig = field(default_factory=AlphaGridConfig)
    output_dir: str = "runs/default"
    name: str = "run"


SECTIONS = {
    "architecture": ArchitectureConfig,
    "target": TargetConfig,
    "data": DataConfig,
    "optimizer": OptimizerConfig,
    "schedule": Schedule,
    "alpha_grid": AlphaGridConfig,
}


def _section(cls, doc, path: str):
    if not isinstance(doc, dict):
        raise ConfigInvalid(f"{path} must be a JSON object")
    known = {f.name for f in fields(cls)}
    for key in doc:
        if key not in known:
            raise ConfigInvalid(f"unknown key {path}.{key}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc


def config_from_dict(doc: Dict) -> ExperimentConfig:
    """Strict mapping of a JSON document onto ExperimentConfig."""
    if not isinstance(doc, dict):
        raise ConfigInvalid("the config must be a JSON object")
    doc = dict(doc)
    optimizer = doc.get("optimizer")
    if isinstance(optimizer, dict) and "label" in optimizer:
        optimizer = dict(optimizer)
        label = optimizer.pop("label")
        if label not in OPTIMIZER_PRESETS:
            raise ConfigInvalid(f"unknown optimizer label {label!r}")
        optimizer.update(OPTIMIZER_PRESETS[label])
        doc["optimizer"] = optimizer

    kwargs = {}
    for key, value in doc.items():
        if key in SECTIONS:
            kwargs[key] = _section(SECTIONS[key], value, key)
        elif key in ("output_dir", "name"):
            kwargs[key] = str(value)
        else:
            raise ConfigInvalid(f"unknown key {key}")
    cfg = ExperimentConfig(**kwargs)
    validate_config(cfg)
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> Dict:
    doc = asdict(cfg)
    doc["optimizer"]["adam_betas"] = list(doc["optimizer"]["adam_betas"])
    return doc


def network_widths(cfg: ExperimentConfig) -> List[int]:
    arch, target = cfg.architecture, cfg.target
    if arch.head == "none":
        output_dim = target.output_dim or target.d + 1
        return [target.d] + [arch.width] * (arch.depth - 1) + [output_dim]
    return [target.d] + [arch.width] * arch.depth


def validate_config(cfg: ExperimentConfig) -> None:
    arch, target = cfg.architecture, cfg.target
    for path, value in (("architecture.depth", arch.depth), ("architecture.width", arch.width),
                        ("target.d", target.d), ("data.n", cfg.data.n)):
        if not isinstance(value, int) or value < 1:
            raise ConfigInvalid(f"{path} must be a positive integer, got {value!r}")
    if arch.head not in HEAD_KINDS:
        raise ConfigInvalid(f"architecture.head must be one of {HEAD_KINDS}, got {arch.head!r}")
    if target.kind not in TARGET_KINDS:
        raise ConfigInvalid(f"target.kind must be one of {TARGET_KINDS}, got {target.kind!r}")
    if target.kind == "multiindex":
        if not 1 <= target.rank <= target.d:
            raise ConfigInvalid(f"target.rank must lie in [1, {target.d}], got {target.rank}")
        if target.link not in ("relu", "gauss", "identity"):
            raise ConfigInvalid(f"unknown target.link {target.link!r}")
        if (arch.head == "none") != (target.output == "vector"):
            raise ConfigInvalid("head 'none' pairs with vector targets, other heads with scalar ones")
        if target.output_dim is not None and target.output_dim < target.rank:
            raise ConfigInvalid("target.output_dim must be at least target.rank")
    if target.noise_sigma < 0:
        raise ConfigInvalid("target.noise_sigma must be non-negative")
    if arch.balanced and min(network_widths(cfg)[1:]) < target.d:
        raise ConfigInvalid(f"balanced init needs every layer width >= d={target.d}")
    grid = cfg.alpha_grid
    if not (grid.start > 0 and grid.step > 0 and grid.stop >= grid.start):
        raise ConfigInvalid("alpha_grid needs 0 < start <= stop and step > 0")


def apply_paper_scale(cfg: ExperimentConfig) -> ExperimentConfig:
    doc = config_to_dict(cfg)
    doc["architecture"]["width"] = PAPER_SCALE["width"]
    doc["data"]["n"] = PAPER_SCALE["n"]
    doc["schedule"]["main_epochs"] = PAPER_SCALE["main_epochs"]
    return config_from_dict(doc)


def load_config(path: str, paper_scale: bool = False,
                environ: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """Read a JSON config; NFA_LAB_SEED overrides data.seed."""
    environ = os.environ if environ is None else environ
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    if environ.get(SEED_ENV):
        try:
            seed = int(environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigInvalid(f"{SEED_ENV} must be an integer") from exc
        doc.setdefault("data", {})["seed"] = seed
    cfg = config_from_dict(doc)
    return apply_paper_scale(cfg) if paper_scale else cfg


def optimizer_label(cfg: OptimizerConfig) -> str:
    if cfg.kind == "adam":
        return "adam"
    return cfg.kind + ("m" if cfg.momentum > 0 else "")


@dataclass
class RunSummary:
    run: str
    status: str
    sigma: float
    depth: int
    weight_decay: float
    optimizer: str
    rank: Optional[int]
    width: int
    balanced: bool
    seed: int
    final_loss: Optional[float] = None
    cos_inv_L: Optional[float] = None
    best_alpha_tilde: Optional[float] = None
    defect_rate: Optional[float] = None
    failed_at: Optional[int] = None
    singular_values: List[float] = field(default_factory=list)
    error: Optional[str] = None

    def to_row(self) -> list:
        values = asdict(self)
        return [values[column] for column in SUMMARY_COLUMNS]


def _base_summary(cfg: ExperimentConfig, status: str) -> RunSummary:
    return RunSummary(
        run=cfg.name,
        status=status,
        sigma=cfg.target.noise_sigma,
        depth=cfg.architecture.depth,
        weight_decay=cfg.optimizer.weight_decay,
        optimizer=optimizer_label(cfg.optimizer),
        rank=cfg.target.rank if cfg.target.kind == "multiindex" else None,
        width=cfg.architecture.width,
        balanced=cfg.architecture.balanced,
        seed=cfg.data.seed,
    )


def _feature_snapshots(stack, out_dir: str, suffix: str) -> None:
    write_matrix_csv(os.path.join(out_dir, f"features_{suffix}.csv"), neural_feature_matrix(stack))
    write_matrix_csv(os.path.join(out_dir, f"agop_root_{suffix}.csv"),
                     matrix_power(agop_linear(stack), 1.0 / stack.depth))


def run(config: ExperimentConfig, verbose: bool = False) -> RunSummary:
    """Train one configuration and write its artifacts into config.output_dir.

    Divergence does not raise: the summary comes back with status "nan".
    """
    validate_config(config)
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    target_seq, data_seq, init_seq, train_seq = np.random.SeedSequence(config.data.seed).spawn(4)
    arch, tcfg = config.architecture, config.target

    net = build_network(network_widths(config), arch.head, make_rng(init_seq),
                        balanced=arch.balanced, bias=arch.bias)
    if tcfg.kind == "network":
        target = net
        data = network_dataset(net, config.data.n, make_rng(data_seq), tcfg.noise_sigma, config.data.seed)
    else:
        target = make_multiindex_target(tcfg.d, tcfg.rank, tcfg.link, tcfg.output,
                                        make_rng(target_seq), tcfg.output_dim)
        data = sample_multiindex(target, config.data.n, tcfg.noise_sigma, make_rng(data_seq), config.data.seed)

    write_json(os.path.join(out_dir, "config.json"), config_to_dict(config))
    save_dataset(data, os.path.join(out_dir, "data.csv"))
    _feature_snapshots(net.stack, out_dir, "before")
    tildes = config.alpha_grid.tildes()

    summary = _base_summary(config, "ok")
    try:
        final, trace = train(net, data, config.optimizer, config.schedule, rng=make_rng(train_seq),
                             alpha_tildes=tildes if config.alpha_grid.record_alpha else None)
    except DivergenceDetected as exc:
        trace = exc.trace
        final = None
        summary.status = "nan"
        summary.failed_at = exc.epoch
        summary.error = str(exc)

    write_csv(os.path.join(out_dir, "trace.csv"), trace.header(), trace.rows())
    if config.alpha_grid.record_alpha:
        write_csv(os.path.join(out_dir, "alpha_trace.csv"), ["epoch", "alpha_tilde", "cosine"], trace.alpha_rows())

    if final is not None:
        cosines = alpha_sweep(final.stack, tildes / final.depth)
        write_csv(os.path.join(out_dir, "alpha_sweep.csv"), ["alpha_tilde", "cosine"], zip(tildes, cosines))
        save_checkpoint(final, os.path.join(out_dir, "checkpoint.json"))
        _feature_snapshots(final.stack, out_dir, "after")

        w1_profile = singular_value_profile(final.stack.weights[0])
        target_profile = singular_value_profile(agop_empirical(target, data.inputs))
        write_csv(os.path.join(out_dir, "profile.csv"), ["index", "w1", "target_agop"],
                  ([i + 1, w, t] for i, (w, t) in enumerate(zip(w1_profile, target_profile))))

        summary.final_loss = trace.loss[-1]
        summary.cos_inv_L = trace.cos_at_inv_L[-1]
        summary.best_alpha_tilde = best_alpha_tilde(tildes, cosines)
        summary.singular_values = [float(s) for s in w1_profile]
        if final.depth >= 2:
            try:
                summary.defect_rate = max(defect_decay_rates(trace))
            except InsufficientTrace:
                summary.defect_rate = None

    write_json(os.path.join(out_dir, "summary.json"), asdict(summary))
    if verbose:
        if summary.status == "ok":
            print(f"✓ {config.name}: loss={summary.final_loss:.3e} cos(1/L)={summary.cos_inv_L:.4f} "
                  f"best α̃={summary.best_alpha_tilde:.2f}")
        else:
            print(f"✗ {config.name}: training failed at epoch {summary.failed_at} (nan)")
    return summary


def resolve_axis(key: str) -> str:
    path = AXIS_ALIASES.get(key, key)
    section, _, name = path.partition(".")
    if section not in SECTIONS or not name:
        raise ConfigInvalid(f"unknown sweep axis {key!r}")
    if path != "optimizer.label" and name not in {f.name for f in fields(SECTIONS[section])}:
        raise ConfigInvalid(f"unknown sweep axis {key!r}")
    return path


def derive_seed(base_seed: int, coordinates: Sequence[Tuple[str, object]]) -> int:
    """Stable per-run seed from the base seed and the run's axis values."""
    blob = json.dumps([base_seed, [[k, v] for k, v in coordinates]], sort_keys=True)
    return int(hashlib.sha256(blob.encode("utf-8")).hexdigest()[:8], 16)


def _run_name(coordinates: Sequence[Tuple[str, object]]) -> str:
    parts = [f"{key.split('.')[-1]}={value}" for key, value in coordinates]
    return "_".join(parts).replace(os.sep, "-")


def expand_axes(base: ExperimentConfig, axes: Dict[str, Sequence]) -> List[Tuple[List, Optional[ExperimentConfig], Optional[str]]]:
    """One (coordinates, config, error) entry per point of the Cartesian product."""
    if not axes:
        raise ConfigInvalid("a sweep needs at least one axis")
    paths = []
    for key, values in axes.items():
        if not isinstance(values, (list, tuple)) or not values:
            raise ConfigInvalid(f"sweep axis {key!r} needs a nonempty list of values")
        paths.append(resolve_axis(key))

    base_doc = config_to_dict(base)
    points = []
    for combo in itertools.product(*axes.values()):
        coordinates = list(zip(axes.keys(), combo))
        doc = copy.deepcopy(base_doc)
        for path, value in zip(paths, combo):
            section, _, name = path.partition(".")
            doc[section][name] = value
        name = _run_name(coordinates)
        doc["name"] = name
        doc["output_dir"] = os.path.join(base.output_dir, name)
        doc["data"]["seed"] = derive_seed(base.data.seed, coordinates)
        try:
            points.append((coordinates, config_from_dict(doc), None))
        except ConfigInvalid as exc:
            points.append((coordinates, None, str(exc)))
    return points


def _failed_summary(coordinates, base: ExperimentConfig, message: str) -> RunSummary:
    summary = _base_summary(base, "nan")
    summary.run = _run_name(coordinates)
    summary.error = message
    return summary


def sweep(base: ExperimentConfig, axes: Dict[str, Sequence], jobs: int = 1,
          verbose: bool = False) -> List[RunSummary]:
    """Run the Cartesian product of `axes` over base and write sweep_summary.csv.

    Runs execute in a pool of `jobs` worker processes; a failing run becomes a
    nan row and the sweep carries on. Rows keep the product order.
    """
    points = expand_axes(base, axes)
    summaries: List[Optional[RunSummary]] = [None] * len(points)
    with ProcessPoolExecutor(max_workers=max(1, jobs)) as executor:
        future_to_index = {}
        for index, (coordinates, cfg, error) in enumerate(points):
            if cfg is None:
                summaries[index] = _failed_summary(coordinates, base, error)
                if verbose:
                    print(f"✗ {summaries[index].run}: {error}")
                continue
            future_to_index[executor.submit(run, cfg)] = index

        for future in as_completed(future_to_index):
            index = future_to_index[future]
            coordinates, cfg, _ = points[index]
            try:
                summary = future.result()
                if verbose:
                    mark = "✓" if summary.status == "ok" else "✗"
                    print(f"{mark} {summary.run} ({summary.status})")
            except Exception as exc:
                summary = _base_summary(cfg, "nan")
                summary.error = str(exc)
                if verbose:
                    print(f"✗ {cfg.name}: {exc}")
            summaries[index] = summary

    os.makedirs(base.output_dir, exist_ok=True)
    write_csv(os.path.join(base.output_dir, "sweep_summary.csv"), SUMMARY_COLUMNS,
              (s.to_row() for s in summaries))
    return summaries


def _as_float(value) -> float:
    if value is None or value == "":
        return float("nan")
    return float(value)


def _cell(values: List[float]) -> str:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return "nan"
    return f"{sum(finite) / len(finite):.2f}"


def render_table(rows: Sequence[Dict], value: str = "cos_inv_L") -> Tuple[List[str], List[List[str]]]:
    """Pivot summary rows into the `sigma, Linear Layers, lambda, <optimizer>…` layout.

    Cells are means over repeated runs rounded to two decimals; failed runs
    and missing cells read `nan`.
    """
    cells: Dict[Tuple[float, int, float], Dict[str, List[float]]] = {}
    present = set()
    for row in rows:
        key = (_as_float(row["sigma"]), int(float(row["depth"])), _as_float(row["weight_decay"]))
        label = str(row["optimizer"])
        present.add(label)
        status_ok = str(row.get("status", "ok")) == "ok"
        cells.setdefault(key, {}).setdefault(label, []).append(
            _as_float(row[value]) if status_ok else float("nan"))

    optimizers = [o for o in TABLE_OPTIMIZERS if o in present] + sorted(present - set(TABLE_OPTIMIZERS))
    header = ["sigma", "Linear Layers", "lambda"] + optimizers
    table = []
    for sigma, depth, lam in sorted(cells):
        entry = cells[(sigma, depth, lam)]
        table.append([f"{sigma:g}", str(depth), f"{lam:g}"]
                     + [_cell(entry.get(o, [])) for o in optimizers])
    return header, table


def report(directory: str, verbose: bool = False) -> Dict[str, str]:
    """Render sweep_summary.csv in `directory` as one table per target rank."""
    header, raw = read_csv(os.path.join(directory, "sweep_summary.csv"))
    rows = [dict(zip(header, r)) for r in raw]
    by_rank: Dict[str, List[Dict]] = {}
    for row in rows:
        by_rank.setdefault(row.get("rank") or "na", []).append(row)

    outputs = {}
    for rank in sorted(by_rank, key=lambda r: (r == "na", int(r) if r.isdigit() else 0)):
        table_header, table = render_table(by_rank[rank])
        path = os.path.join(directory, f"table_rank_{rank}.csv")
        write_csv(path, table_header, table)
        outputs[rank] = path
        if verbose:
            print(f"\n=== Rank {rank} ===")
            print(",".join(table_header))
            for line in table:
                print(",".join(line))
    return outputs


def counterexample_report(which: str, n: Optional[int] = None, output_dir: str = "runs/counterexamples",
                          samples: int = COUNTEREXAMPLE_SAMPLES, seed: int = 0,
                          verbose: bool = False) -> Dict:
    """Write the closed-form vs empirical comparison for one counterexample."""
    os.makedirs(output_dir, exist_ok=True)
    rng = make_rng(seed)
    if which == "relu_sum":
        return _relu_sum_report(output_dir, samples, rng, verbose)
    if which == "oscillation":
        ns = [n] if n is not None else list(OSCILLATION_NS)
        return _oscillation_report(output_dir, ns, samples, rng, verbose)
    raise ConfigInvalid(f"unknown counterexample {which!r}; expected relu_sum or oscillation")


def _relu_sum_report(output_dir: str, samples: int, rng: np.random.Generator, verbose: bool) -> Dict:
    example = relu_sum_counterexample()
    xs = sample_square(samples, rng)
    empirical = agop_empirical(example.target, xs)
    network_agop = agop_empirical(example.narrow_net, xs)
    write_matrix_csv(os.path.join(output_dir, "relu_sum_agop_empirical.csv"), empirical)
    write_matrix_csv(os.path.join(output_dir, "relu_sum_agop_exact.csv"), example.exact_agop)

    narrow = neural_feature_matrix(example.narrow_net.stack)
    wide = neural_feature_matrix(example.wide_net.stack)
    alphas = AlphaGridConfig().tildes()
    rows = [[alpha, cosine_similarity(narrow, matrix_power(example.exact_agop, alpha)),
             cosine_similarity(wide, matrix_power(example.exact_agop, alpha))] for alpha in alphas]
    write_csv(os.path.join(output_dir, "relu_sum_alpha.csv"), ["alpha", "narrow_cosine", "wide_cosine"], rows)

    result = {
        "which": "relu_sum",
        "samples": samples,
        "max_entry_error": float(np.max(np.abs(empirical - example.exact_agop))),
        "network_entry_error": float(np.max(np.abs(network_agop - example.exact_agop))),
        "narrow_max_cosine": max(r[1] for r in rows),
        "wide_cosine_at_1": cosine_similarity(wide, example.exact_agop),
    }
    write_json(os.path.join(output_dir, "relu_sum.json"), result)
    if verbose:
        print(f"✓ relu_sum: AGOP error {result['max_entry_error']:.2e}, "
              f"narrow max cos {result['narrow_max_cosine']:.5f}, wide cos {result['wide_cosine_at_1']:.6f}")
    return result


def _oscillation_report(output_dir: str, ns: Sequence[int], samples: int,
                        rng: np.random.Generator, verbose: bool) -> Dict:
    rows = []
    for n in ns:
        osc = oscillation_counterexample(n, samples, rng)
        rows.append([n, osc.cosine, osc.cosine_closed_form, osc.l1_gap, osc.l1_gap_closed_form,
                     float(osc.empirical_agop[0, 1]), osc.offdiag_stderr])
        if verbose:
            print(f"✓ n={n}: cos={osc.cosine:.5f} (closed form {osc.cosine_closed_form:.5f}), "
                  f"L1 gap={osc.l1_gap:.5f} (closed form {osc.l1_gap_closed_form:.5f})")
    write_csv(os.path.join(output_dir, "oscillation.csv"),
              ["n", "cosine", "cosine_closed_form", "l1_gap", "l1_gap_closed_form", "offdiag", "offdiag_stderr"],
              rows)

    shifts = [shift_counterexample(c, samples, rng) for c in SHIFTS]
    write_csv(os.path.join(output_dir, "shift.csv"), ["shift", "cosine", "l1_gap"],
              ([s.shift, s.cosine, s.l1_gap] for s in shifts))

    result = {
        "which": "oscillation",
        "samples": samples,
        "n": [r[0] for r in rows],
        "cosine": [r[1] for r in rows],
        "cosine_closed_form": [r[2] for r in rows],
        "l1_gap": [r[3] for r in rows],
        "l1_gap_closed_form": [r[4] for r in rows],
        "shift_cosine": [s.cosine for s in shifts],
        "shift_l1_gap": [s.l1_gap for s in shifts],
    }
    write_json(os.path.join(output_dir, "oscillation.json"), result)
    return result
