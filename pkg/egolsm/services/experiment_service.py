"""Simulate / fit / analyze / experiment pipelines behind the CLI."""
from __future__ import annotations

import asyncio
import json
import logging
import platform
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
import scipy
import sklearn
from scipy.stats import wilcoxon
from tabulate import tabulate
from tqdm import tqdm

from egolsm import __version__
from egolsm.constants import BETWEENNESS_PIVOTS
from egolsm.core.model import AdjacencyMatrix
from egolsm.core.partial_view import build_partial_view, full_view
from egolsm.models.config import ExperimentConfig, ProjectionMode, Scenario
from egolsm.services.analysis import (
    attribute_correlations,
    centralities,
    clustering_accuracy,
    correlation_table,
    kmeans_cluster,
)
from egolsm.services.initializer import initialize
from egolsm.services.metrics import imbalance, gram_bound_violations, neighborhood_diagnostics
from egolsm.services.simulation import (
    GroundTruth,
    RngSpec,
    apply_scenario,
    draw_covariates,
    gen_dcsbm,
    gen_simulation1,
    sample_adjacency,
)
from egolsm.services.solver import FitResult, fit
from egolsm.utils.io import (
    emit_positions,
    load_network,
    read_covariates,
    read_labels,
    write_adjacency,
    write_covariates,
    write_positions,
)

logger = logging.getLogger(__name__)

SCENARIO_ORDER = list(Scenario)

RESULT_COLUMNS = [
    "replicate", "scenario", "seed", "stream", "center", "status", "error",
    "n", "k", "n_S", "r_S", "iterations", "objective_final",
    "e_t", "delta_Z_F", "delta_G_F_sq", "delta_G_raw_F_sq",
    "delta_Theta_F_sq", "delta_S_Theta_F_sq", "relative_error_Theta",
    "U_S", "U_S_normalized", "gamma_S", "kappa_prime", "p_S", "delta_n_sq",
    "covariate_stable_rank", "centering_gap_F_sq", "bias_bound_ratio",
    "degree", "fraction_observed", "betweenness", "closeness", "eigenvector",
    "accuracy", "gram_bound_violations",
]

# Center attributes correlated with the relative error in summary.md
CENTER_ATTRIBUTES = ["degree", "fraction_observed", "betweenness", "closeness", "eigenvector", "U_S_normalized"]

ANALYSIS_COLUMNS = [
    "node_id", "degree", "fraction_observed", "betweenness", "closeness",
    "eigenvector", "imbalance", "accuracy",
]


@dataclass
class ExperimentOutcome:
    rows: List[dict]
    results_path: Path
    manifest_path: Path
    summary_path: Path

    @property
    def failures(self) -> int:
        return sum(1 for r in self.rows if r["status"] != "success")


@dataclass
class AnalysisOutcome:
    table: pd.DataFrame
    correlations: pd.DataFrame
    table_path: Path
    correlations_path: Optional[Path] = None
    positions: Dict[int, Path] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Truth generation
# ---------------------------------------------------------------------------

def generate_truth(config: ExperimentConfig, gen: np.random.Generator) -> GroundTruth:
    """Draw the ground truth named by ``config.generator``."""
    if config.generator == "simulation1":
        return gen_simulation1(config.n, config.k, gen)

    K = config.blocks
    X = draw_covariates(config.n, gen)
    return gen_dcsbm(config.n, K, 2.0 * np.eye(K), alpha=None, beta=-0.5, X=X, rng=gen)


def _center(config: ExperimentConfig, n: int, base: int = 0) -> int:
    center = config.centers[0] - base
    if not 0 <= center < n:
        raise IndexError(f"center {config.centers[0]} out of range for {n} nodes")
    return center


# ---------------------------------------------------------------------------
# Experiment
# ---------------------------------------------------------------------------

def _empty_row(config: ExperimentConfig, replicate: int, scenario: Scenario, center: int) -> dict:
    row = {c: None for c in RESULT_COLUMNS}
    row.update(
        replicate=replicate, scenario=scenario.value, seed=config.seed, stream=replicate,
        center=center, status="pending", error="", n=config.n, k=config.k,
    )
    return row


def _evaluate_scenario(
    config: ExperimentConfig,
    truth: GroundTruth,
    A: AdjacencyMatrix,
    center: int,
    scenario: Scenario,
    spec: RngSpec,
    row: dict,
) -> None:
    sub = SCENARIO_ORDER.index(scenario)
    A_s = apply_scenario(A, center, scenario, spec.generator(1, sub))
    view = build_partial_view(A_s, center)
    X = truth.model.X

    init = initialize(view, X, config.init_config())
    result = fit(view, X, init, config.solver_config(), truth=truth)
    report = result.error_reports[-1]
    diag = neighborhood_diagnostics(truth, view)

    row.update(report.to_dict())
    row.update(diag.to_dict())
    row.pop("c", None)
    row.update(
        iterations=result.iterations_run,
        objective_final=float(result.objective_trace[-1]),
        gram_bound_violations=gram_bound_violations(result),
    )
    profile = centralities(A_s, [center], betweenness_pivots=BETWEENNESS_PIVOTS, rng=spec.generator(3, sub))[0]
    row.update(
        degree=profile.degree,
        fraction_observed=profile.fraction_observed,
        betweenness=profile.betweenness,
        closeness=profile.closeness,
        eigenvector=profile.eigenvector,
    )
    if truth.labels is not None:
        K = config.clusters or len(np.unique(truth.labels))
        labels = kmeans_cluster(result.Z_hat, K, config.restarts, spec.generator(2, sub))
        row["accuracy"] = clustering_accuracy(labels, truth.labels)
    row["status"] = "success"


def run_replicate(config: ExperimentConfig, replicate: int) -> List[dict]:
    """One truth and one base network, evaluated under every listed scenario (paired)."""
    spec = RngSpec(config.seed, replicate)
    center = config.centers[0]
    rows = [_empty_row(config, replicate, s, center) for s in config.scenarios]

    try:
        gen = spec.generator(0)
        truth = generate_truth(config, gen)
        A = sample_adjacency(truth.theta_star, gen)
        _center(config, truth.n)
    except Exception as e:
        logger.exception(f"[replicate {replicate}] generation failed")
        for row in rows:
            row.update(status="error", error=str(e))
        return rows

    for scenario, row in zip(config.scenarios, rows):
        try:
            _evaluate_scenario(config, replace(truth, scenario=scenario), A, center, scenario, spec, row)
            logger.info(
                f"[replicate {replicate}] {scenario.value}: r_S={row['r_S']:.3f}, "
                f"relative error={row['relative_error_Theta']:.4f}"
            )
        except Exception as e:
            logger.exception(f"[replicate {replicate}] {scenario.value} failed")
            row.update(status="error", error=str(e))
    return rows


class ResultWriter:
    """Single writer for results.csv; rows are kept sorted so output does not depend on scheduling."""

    def __init__(self, path: Path):
        self.path = path
        self._rows: List[dict] = []
        self._lock = asyncio.Lock()

    @staticmethod
    def _key(row: dict) -> Tuple[int, int]:
        return row["replicate"], SCENARIO_ORDER.index(Scenario(row["scenario"]))

    async def append(self, rows: Sequence[dict]) -> None:
        async with self._lock:
            self._rows.extend(rows)
            self._rows.sort(key=self._key)
            self._flush()

    def _flush(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        # object dtype keeps integer columns with gaps from turning into floats
        cells = [{k: _format_cell(row.get(k)) for k in RESULT_COLUMNS} for row in self._rows]
        pd.DataFrame(cells, columns=RESULT_COLUMNS, dtype=object).to_csv(self.path, index=False, encoding="utf-8")

    @property
    def rows(self) -> List[dict]:
        return list(self._rows)


def _format_cell(value):
    """Shortest round-trip text for floats, empty for missing values."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return "" if value is None else value


async def _run_replicates(config: ExperimentConfig, writer: ResultWriter, progress: bool) -> None:
    semaphore = asyncio.Semaphore(config.workers)
    bar = tqdm(total=config.replicates, desc="replicates", unit="rep", disable=not progress)

    async def run_with_semaphore(replicate: int) -> None:
        async with semaphore:
            rows = await asyncio.to_thread(run_replicate, config, replicate)
        await writer.append(rows)
        bar.update(1)

    completed = await asyncio.gather(
        *(run_with_semaphore(r) for r in range(config.replicates)), return_exceptions=True
    )
    bar.close()
    for item in completed:
        if isinstance(item, Exception):
            logger.error(f"Gather exception: {item}")


def write_manifest(config: ExperimentConfig, path: Path) -> Path:
    """Config, per-replicate seeds and library versions needed to replay a run."""
    manifest = {
        "created": datetime.now().isoformat(timespec="seconds"),
        "config": config.model_dump(mode="json"),
        "seeds": [
            {"replicate": r, "seed": config.seed, "stream": r} for r in range(config.replicates)
        ],
        "versions": {
            "egolsm": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "networkx": nx.__version__,
            "scikit-learn": sklearn.__version__,
            "pandas": pd.__version__,
        },
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    logger.info(f"Saved manifest to: {path}")
    return path


def compare_scenarios(
    rows: Sequence[dict],
    better: Scenario,
    worse: Scenario,
    metric: str = "relative_error_Theta",
) -> Optional[float]:
    """One-sided Wilcoxon signed-rank p-value for ``better`` < ``worse``, paired by replicate."""
    by_rep: Dict[int, Dict[str, float]] = {}
    for row in rows:
        if row["status"] == "success" and row.get(metric) is not None:
            by_rep.setdefault(row["replicate"], {})[row["scenario"]] = float(row[metric])
    pairs = [
        (v[Scenario(better).value], v[Scenario(worse).value])
        for v in by_rep.values()
        if Scenario(better).value in v and Scenario(worse).value in v
    ]
    if len(pairs) < 2:
        return None
    x, y = np.array(pairs).T
    try:
        return float(wilcoxon(x, y, alternative="less").pvalue)
    except ValueError:
        # all differences zero
        return None


def summarize(rows: Sequence[dict]) -> Tuple[List[dict], Dict[str, Optional[float]]]:
    """Per-scenario means and the paired comparisons between scenarios."""
    df = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    ok = df[df["status"] == "success"]
    table = []
    for scenario in SCENARIO_ORDER:
        sub = ok[ok["scenario"] == scenario.value]
        total = int((df["scenario"] == scenario.value).sum())
        if total == 0:
            continue
        entry = {"scenario": scenario.value, "replicates": total, "failed": total - len(sub)}
        for col in ("r_S", "U_S_normalized", "relative_error_Theta", "accuracy"):
            values = pd.to_numeric(sub[col], errors="coerce").dropna()
            entry[col] = float(values.mean()) if len(values) else None
        table.append(entry)

    stats: Dict[str, Optional[float]] = {
        "p(balanced < imbalanced)": compare_scenarios(rows, Scenario.BALANCED, Scenario.IMBALANCED),
        "p(full < balanced)": compare_scenarios(rows, Scenario.FULL, Scenario.BALANCED),
    }
    pooled = ok[ok["scenario"].isin([Scenario.BALANCED.value, Scenario.IMBALANCED.value])]
    if len(pooled) >= 3:
        _, rho = correlation_table(
            pd.to_numeric(pooled["relative_error_Theta"]), pd.to_numeric(pooled["U_S_normalized"])
        )
        stats["spearman(relative error, U_S/||G*||)"] = rho
    stats["gram bound violations"] = float(pd.to_numeric(ok["gram_bound_violations"]).sum()) if len(ok) else None
    return table, stats


def centrality_correlations(rows: Sequence[dict]) -> pd.DataFrame:
    """Correlation of the relative Theta error with the center's attributes, pooled over successful rows."""
    df = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    ok = df[df["status"] == "success"]
    attributes = ok[CENTER_ATTRIBUTES + ["relative_error_Theta"]].apply(pd.to_numeric, errors="coerce")
    return attribute_correlations(
        attributes.rename(columns={"U_S_normalized": "imbalance"}), target="relative_error_Theta", min_degree=-1,
    )


def write_summary(config: ExperimentConfig, rows: Sequence[dict], path: Path) -> Path:
    table, stats = summarize(rows)
    lines = [
        f"# Experiment summary ({config.generator}, n={config.n}, k={config.k})",
        "",
        tabulate(table, headers="keys", tablefmt="github", floatfmt=".4f", missingval="-"),
        "",
        tabulate(
            [{"statistic": k, "value": v} for k, v in stats.items()],
            headers="keys", tablefmt="github", floatfmt=".4g", missingval="-",
        ),
        "",
    ]
    correlations = centrality_correlations(rows)
    if not correlations.empty:
        lines += [
            "## Relative error vs center attributes",
            "",
            tabulate(correlations, headers="keys", tablefmt="github", floatfmt=".4f", showindex=False, missingval="-"),
            "",
        ]
    path.write_text("\n".join(lines), encoding="utf-8")
    logger.info(f"Saved summary to: {path}")
    return path


def run_experiment(config: ExperimentConfig, progress: bool = False) -> ExperimentOutcome:
    """Replicated study: results.csv, manifest.json and summary.md under ``config.out``."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    logger.info(
        f"Experiment: {config.replicates} replicates x {[s.value for s in config.scenarios]}, "
        f"generator={config.generator}, n={config.n}, workers={config.workers}"
    )

    writer = ResultWriter(out / "results.csv")
    manifest_path = write_manifest(config, out / "manifest.json")
    asyncio.run(_run_replicates(config, writer, progress))

    rows = writer.rows
    summary_path = write_summary(config, rows, out / "summary.md")
    outcome = ExperimentOutcome(rows, writer.path, manifest_path, summary_path)
    if outcome.failures:
        logger.error(f"{outcome.failures} replicate row(s) failed; see {writer.path}")
    return outcome


# ---------------------------------------------------------------------------
# simulate / fit / analyze
# ---------------------------------------------------------------------------

def simulate_network(config: ExperimentConfig) -> Dict[str, Path]:
    """Generate a truth and a sample, apply the first scenario, save everything under ``config.out``."""
    out = Path(config.out)
    spec = RngSpec(config.seed, 0)
    gen = spec.generator(0)
    truth = generate_truth(config, gen)
    A = sample_adjacency(truth.theta_star, gen)
    center = _center(config, truth.n)
    scenario = config.scenarios[0]
    A = apply_scenario(A, center, scenario, spec.generator(1, SCENARIO_ORDER.index(scenario)))

    paths = {
        "network": write_adjacency(A, out / "network.txt", base=1),
        "covariates": write_covariates(truth.model.X, out / "covariates.csv"),
        "truth": write_positions(
            truth.model.Z, truth.model.alpha, truth.model.beta, out / "truth_positions.csv",
            labels=truth.labels, base=1, meta={"generator": config.generator, "seed": config.seed},
        ),
    }
    logger.info(f"Simulated {config.generator} network: n={truth.n}, edges={A.edge_count}")
    return paths


def _load_inputs(config: ExperimentConfig) -> Tuple[AdjacencyMatrix, int, np.ndarray, Optional[np.ndarray]]:
    A, base = load_network(config.network, config.index_base)
    if config.covariates is not None and not config.no_covariates:
        X = read_covariates(config.covariates, A.n, index_base=base)
    else:
        X = np.zeros((A.n, A.n))
    labels = read_labels(config.labels, A.n, base) if config.labels is not None else None
    return A, base, X, labels


def fit_network(config: ExperimentConfig) -> Tuple[FitResult, Path]:
    """Fit one center's partial view of an edge-list network and emit positions."""
    A, base, X, labels = _load_inputs(config)
    center = _center(config, A.n, base)
    scenario = config.scenarios[0]
    A = apply_scenario(A, center, scenario, RngSpec(config.seed).generator(1, SCENARIO_ORDER.index(scenario)))
    view = build_partial_view(A, center)

    init = initialize(view, X, config.init_config())
    result = fit(view, X, init, config.solver_config())
    path = emit_positions(result, Path(config.out) / f"positions_center{config.centers[0]}.csv", labels, base)
    return result, path


def analyze_network(config: ExperimentConfig) -> AnalysisOutcome:
    """Per-center attribute table (centralities, empirical imbalance, clustering accuracy) plus correlations."""
    A, base, X, labels = _load_inputs(config)
    out = Path(config.out)
    solver_config = config.solver_config()
    init_config = config.init_config()

    # empirical imbalance uses positions fitted on the whole network, always with the practical projection
    whole = full_view(A)
    reference_config = solver_config.model_copy(update={"projection_mode": ProjectionMode.PRACTICAL})
    Z_full = fit(whole, X, initialize(whole, X, init_config), reference_config).Z_hat

    centers = [c - base for c in config.centers]
    for c, original in zip(centers, config.centers):
        if not 0 <= c < A.n:
            raise IndexError(f"center {original} out of range for {A.n} nodes")
    profiles = {p.node: p for p in centralities(A, centers)}

    K = config.clusters or (len(np.unique(labels)) if labels is not None else None)
    records, positions = [], {}
    for c, original in zip(centers, config.centers):
        view = build_partial_view(A, c)
        profile = profiles[c]
        profile.imbalance = imbalance(Z_full, view)[1]

        result = fit(view, X, initialize(view, X, init_config), solver_config)
        positions[original] = emit_positions(result, out / f"positions_center{original}.csv", labels, base)

        accuracy = None
        if labels is not None and K is not None:
            predicted = kmeans_cluster(result.Z_hat, K, config.restarts, RngSpec(config.seed, c).generator(2))
            accuracy = clustering_accuracy(predicted, labels)

        record = profile.to_dict()
        record["node_id"] = record.pop("node") + base
        record["accuracy"] = accuracy
        records.append(record)
        logger.info(f"Center {original}: degree={profile.degree}, imbalance={profile.imbalance:.3f}, accuracy={accuracy}")

    table = pd.DataFrame(records, columns=ANALYSIS_COLUMNS)
    out.mkdir(parents=True, exist_ok=True)
    table_path = out / "analysis.csv"
    table.to_csv(table_path, index=False, float_format="%.6g")

    correlations = attribute_correlations(table) if labels is not None else pd.DataFrame()
    correlations_path = None
    if not correlations.empty:
        correlations_path = out / "correlations.csv"
        correlations.to_csv(correlations_path, index=False, float_format="%.4f")
    logger.info(f"Saved analysis table to: {table_path}")
    return AnalysisOutcome(table, correlations, table_path, correlations_path, positions)
