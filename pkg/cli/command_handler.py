"""Command handler with command pattern."""

import argparse
import logging
import math
from typing import Any, Callable, Dict, Optional

from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from egolsm.exceptions import EgoLSMError
from egolsm.models.config import ExperimentConfig
from egolsm.services.config_service import ConfigService
from egolsm.services.experiment_service import (
    analyze_network,
    fit_network,
    run_experiment,
    simulate_network,
    summarize,
)

logger = logging.getLogger(__name__)

console = Console(
    legacy_windows=False,
    force_interactive=False,
    tab_size=4
)

# argparse dest -> ExperimentConfig field
FLAG_FIELDS = [
    "network", "covariates", "no_covariates", "labels", "index_base", "generator", "n", "blocks",
    "k", "eta", "iters", "projection", "conditional", "stop_tol",
    "replicates", "workers", "restarts", "clusters", "seed", "out",
]


def _fmt(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else f"{value:.4g}"
    return str(value)


class CommandHandler:
    """命令处理器

    每个子命令对应一个 _cmd_* 方法，返回进程退出码。
    """

    def __init__(self, config_service: Optional[ConfigService] = None):
        self.config_service = config_service or ConfigService()
        self.commands = self._register_commands()

    def _register_commands(self) -> Dict[str, Callable[[argparse.Namespace], int]]:
        """注册子命令映射"""
        return {
            "simulate": self._cmd_simulate,
            "fit": self._cmd_fit,
            "analyze": self._cmd_analyze,
            "experiment": self._cmd_experiment,
            "presets": self._cmd_presets,
        }

    def handle(self, args: argparse.Namespace) -> int:
        """分发子命令；配置或数据错误以退出码 2 返回"""
        handler = self.commands.get(args.command)
        if handler is None:
            console.print(f"[red]未知命令: {args.command}[/red]")
            return 2
        try:
            return handler(args)
        except (ValidationError, EgoLSMError, KeyError, IndexError, ValueError) as e:
            logger.error(f"{args.command} failed: {e}")
            console.print(Panel(str(e), title=f"{args.command} failed", border_style="red"))
            return 2

    def build_config(self, args: argparse.Namespace) -> ExperimentConfig:
        """preset < config file < flags"""
        overrides: Dict[str, Any] = {"mode": args.command}
        for name in FLAG_FIELDS:
            overrides[name] = getattr(args, name, None)
        if getattr(args, "centers", None):
            overrides["centers"] = args.centers
        elif getattr(args, "center", None) is not None:
            overrides["centers"] = [args.center]
        if getattr(args, "scenario", None):
            overrides["scenarios"] = args.scenario
        return self.config_service.build(args.preset, args.config, overrides)

    def _cmd_presets(self, args: argparse.Namespace) -> int:
        table = Table(title="Presets")
        table.add_column("Name", style="cyan")
        table.add_column("Description")
        for preset in self.config_service.list_presets():
            table.add_row(preset["name"], preset["description"])
        console.print(table)
        return 0

    def _cmd_simulate(self, args: argparse.Namespace) -> int:
        config = self.build_config(args)
        paths = simulate_network(config)
        table = Table(title=f"Simulated {config.generator} (n={config.n}, seed={config.seed})")
        table.add_column("Artifact", style="cyan")
        table.add_column("Path")
        for name, path in paths.items():
            table.add_row(name, str(path))
        console.print(table)
        return 0

    def _cmd_fit(self, args: argparse.Namespace) -> int:
        config = self.build_config(args)
        result, path = fit_network(config)
        table = Table(title=f"Fit: center {config.centers[0]}, k={config.k}")
        table.add_column("Quantity", style="cyan")
        table.add_column("Value", justify="right")
        table.add_row("iterations", str(result.iterations_run))
        table.add_row("objective (initial)", _fmt(float(result.objective_trace[0])))
        table.add_row("objective (final)", _fmt(float(result.objective_trace[-1])))
        table.add_row("beta_hat", _fmt(result.beta_hat))
        table.add_row("mean alpha_hat", _fmt(float(result.alpha_hat.mean())))
        table.add_row("positions", str(path))
        console.print(table)
        return 0

    def _cmd_analyze(self, args: argparse.Namespace) -> int:
        config = self.build_config(args)
        outcome = analyze_network(config)

        table = Table(title="Center attributes")
        for column in outcome.table.columns:
            table.add_column(column, justify="right", style="cyan" if column == "node_id" else None)
        for record in outcome.table.to_dict(orient="records"):
            table.add_row(*(_fmt(v) for v in record.values()))
        console.print(table)

        if not outcome.correlations.empty:
            corr = Table(title="Correlation with accuracy")
            for column in outcome.correlations.columns:
                corr.add_column(column, justify="right")
            for record in outcome.correlations.to_dict(orient="records"):
                corr.add_row(*(_fmt(v) for v in record.values()))
            console.print(corr)
        console.print(f"[dim]written: {outcome.table_path}[/dim]")
        return 0

    def _cmd_experiment(self, args: argparse.Namespace) -> int:
        config = self.build_config(args)
        outcome = run_experiment(config, progress=True)
        rows, stats = summarize(outcome.rows)

        table = Table(title=f"Experiment: {config.replicates} replicates, n={config.n}")
        columns = ["scenario", "replicates", "failed", "r_S", "U_S_normalized", "relative_error_Theta", "accuracy"]
        for column in columns:
            table.add_column(column, justify="right", style="cyan" if column == "scenario" else None)
        for row in rows:
            table.add_row(*(_fmt(row.get(c)) for c in columns))
        console.print(table)
        for name, value in stats.items():
            console.print(f"  {name}: {_fmt(value)}")
        console.print(f"[dim]written: {outcome.results_path}, {outcome.summary_path}[/dim]")

        if outcome.failures:
            console.print(f"[red]{outcome.failures} row(s) failed[/red]")
            return 1
        return 0
