"""
Experiment Engine - resolves sweep points and runs every (point, method, seed)
"""

import sys
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from reporters.csv_reporter import CSVReporter, RunContext, write_manifest
from .config import ConfigManager, ExperimentConfig, planned_iterations
from .data import (
    Dataset,
    Sharding,
    max_row_norm,
    normalize_max_norm,
    parse_libsvm,
    shard,
    synth_binary,
    train_test_split,
)
from .exceptions import DPMixError, wrap_exception
from .metrics import auroc
from .models import HyperParams, Method, PrivacyBudget, RunRecord, RunRow
from .objective import RobustLogisticRegression, estimate_gradient_variance
from .optimizer import RUNNERS, initial_point, resolve_clip_quantile
from .privacy import calibrate_sigma, check_theta_regime, speedup_schedule, theorem1_schedule
from .progress import SweepProgress
from .topology import MixingMatrix, build_topology


@dataclass
class ResolvedPoint:
    """Everything a run at one sweep point needs"""
    axis: str
    value: float
    config: ExperimentConfig
    mixing: MixingMatrix
    sharding: Sharding
    problem: RobustLogisticRegression
    hp: HyperParams
    per_epoch: int
    notes: List[str] = field(default_factory=list)

    def topology_entry(self) -> Dict:
        graph = self.mixing.graph
        topo = self.config.topology
        return {
            'm': topo.m,
            'p': topo.p,
            'seed': topo.seed,
            'edges': [list(e) for e in sorted(graph.edges)],
            'lambda': float(self.mixing.lam),
            'repaired': graph.repaired,
            'repair_edges': [list(e) for e in graph.repair_edges],
        }


@dataclass
class ExperimentResult:
    """Output locations and counts of a finished experiment"""
    csv_path: str
    manifest_path: str
    runs: int
    rows: int
    records: List[Tuple[RunContext, RunRecord]] = field(default_factory=list)


class _RowLogger:
    """Forwards RunRecord rows to loguru"""

    def __init__(self, log_every: int, label: str):
        self.log_every = log_every
        self.label = label

    def log(self, row: RunRow) -> None:
        auc = "-" if row.auroc_test is None else f"{row.auroc_test:.4f}"
        logger.debug(
            f"{self.label} iter={row.iteration} epoch={row.epoch:.2f} auroc={auc} "
            f"grad_norm={row.grad_norm:.4g} cx={row.consensus_x:.3g}"
        )


class ExperimentEngine:
    """
    Experiment Engine
    Loads data, resolves each sweep point, runs the job pool and writes results
    """

    def __init__(self, config: ConfigManager, enable_progress_display: bool = True):
        """
        Initialize Experiment Engine

        Args:
            config: Configuration manager
            enable_progress_display: Enable live progress display (disable for CI/CD)
        """
        self.config = config
        self.enable_progress_display = enable_progress_display
        self.train: Optional[Dataset] = None
        self.test: Optional[Dataset] = None

        self._setup_logging()

    def _setup_logging(self) -> None:
        """Setup logging configuration"""
        log_cfg = self.config.config.logging

        logger.remove()

        if log_cfg.console:
            logger.add(
                sys.stderr,
                format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>",
                level=log_cfg.level,
                colorize=True,
            )

        if log_cfg.file:
            Path(log_cfg.file).parent.mkdir(parents=True, exist_ok=True)
            logger.add(
                log_cfg.file,
                format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function} - {message}",
                level=log_cfg.level,
                rotation=log_cfg.rotation,
                retention=log_cfg.retention,
            )

    def load_data(self) -> Tuple[Dataset, Dataset]:
        """Training and held-out sets, normalized with the training scale"""
        ds_cfg = self.config.config.dataset

        if ds_cfg.kind == 'synthetic':
            syn = ds_cfg.synthetic
            full = synth_binary(syn.n, syn.d, syn.margin, syn.seed, syn.flip_rate)
        else:
            full = parse_libsvm(ds_cfg.path, ds_cfg.n_features, ds_cfg.expect_n)

        if ds_cfg.test_path:
            train = full
            test = parse_libsvm(ds_cfg.test_path, ds_cfg.n_features or train.d)
        else:
            train, test = train_test_split(full, ds_cfg.test_fraction, ds_cfg.split_seed)

        if ds_cfg.normalize:
            scale = max_row_norm(train)
            train, test = normalize_max_norm(train, scale), normalize_max_norm(test, scale)

        logger.info(f"Data: train n={train.n} test n={test.n} d={train.d}")
        self.train, self.test = train, test
        return train, test

    def resolve_point(self, axis: str, value: float) -> ResolvedPoint:
        """
        Topology, shards, problem constants, T and sigma for one sweep point

        The planned T and the data-dependent L_g are only known here, so the noise
        level is calibrated here as well. A clipping threshold bounds the shared
        gradient norm and replaces the estimated L_g in the calibration.
        """
        base = self.config.config
        cfg = base.at_point(axis, value) if base.sweep is not None else base
        if self.train is None:
            self.load_data()

        topo = cfg.topology
        mixing = build_topology(topo.m, topo.p, topo.seed)
        sharding = shard(self.train, topo.m, cfg.dataset.shard_mode, topo.seed)
        problem = RobustLogisticRegression.from_dataset(self.train, sharding, cfg.objective)
        T, per_epoch = planned_iterations(cfg, problem.shard_sizes())

        notes: List[str] = []
        opt = cfg.optimizer
        meta = problem.meta
        if opt.preset == 'explicit':
            hp = HyperParams(
                eta_x=opt.eta_x, eta_y=opt.eta_y, beta_x=opt.beta_x, beta_y=opt.beta_y,
                b0=opt.b0, batch=opt.batch, T=T,
            )
        else:
            smallest = min(problem.shard_sizes())
            if opt.preset == 'theorem1':
                preset = theorem1_schedule(opt.epsilon, meta.kappa, mixing.lam, topo.m, meta.L, smallest)
            else:
                preset = speedup_schedule(opt.T0, opt.epsilon, meta.kappa, mixing.lam, topo.m, meta.L, smallest)
            notes.append(f"{opt.preset} preset horizon T={preset.T}; run uses T={T}")
            hp = preset.model_copy(update={'batch': opt.batch, 'T': T})

        clip = opt.clip
        if clip is None and opt.clip_quantile is not None:
            clip = resolve_clip_quantile(problem, hp, topo.seed, opt.clip_quantile)
            notes.append(f"clip_quantile={opt.clip_quantile:g} resolved to clip={clip:.6g}")
        L_g = clip if clip is not None else meta.L_g

        budget = PrivacyBudget(
            theta=cfg.privacy.theta, gamma=cfg.privacy.gamma, c=cfg.privacy.c, L_g=L_g,
        )
        if cfg.privacy.sigma_override is not None:
            sigma = cfg.privacy.sigma_override
        else:
            sigma, _ = calibrate_sigma(budget, T, topo.m)
        hp = hp.model_copy(update={'sigma_x': sigma, 'sigma_y': sigma, 'clip': clip})

        if opt.epsilon is not None:
            warning = check_theta_regime(budget, problem.d1, topo.m, opt.epsilon)
            if warning:
                notes.append(warning)

        if cfg.advanced.estimate_variance:
            x0, y0 = initial_point(problem, topo.seed)
            sigma_var = estimate_gradient_variance(problem, x0, y0, seed=topo.seed)
            problem.meta = meta.model_copy(update={'sigma_var': sigma_var})
            notes.append(f"gradient variance at the initial point ({axis}={value}): {sigma_var:.6g}")

        logger.info(
            f"Point {axis}={value}: m={topo.m} p={topo.p} lambda={mixing.lam:.4f} "
            f"L_g={L_g:.4g} T={T} sigma={sigma:.6g}"
        )
        return ResolvedPoint(axis, value, cfg, mixing, sharding, problem, hp, per_epoch, notes)

    def _evaluator(self, problem: RobustLogisticRegression) -> Optional[Callable[[np.ndarray], float]]:
        test = self.test
        if test is None or len(np.unique(test.labels)) < 2:
            logger.warning("Held-out set has a single class; auroc_test left empty")
            return None
        return lambda x: auroc(problem.scores(test.features, x), test.labels)

    def run_one(self, point: ResolvedPoint, method: Method, seed: int) -> Tuple[RunContext, RunRecord]:
        """One optimization run at a resolved point"""
        cfg = point.config
        label = f"{method.value} {point.axis}={point.value} seed={seed}"
        run_logger = _RowLogger(cfg.schedule.log_every or point.per_epoch, label)
        record = RUNNERS[method](
            point.problem, point.hp, point.mixing, seed,
            run_logger=run_logger,
            evaluate=self._evaluator(point.problem),
            stationarity=cfg.metrics,
            iters_per_epoch=point.per_epoch,
        )
        ctx = RunContext(
            method=method.value,
            seed=seed,
            m=cfg.topology.m,
            p=cfg.topology.p,
            theta=cfg.privacy.theta,
            gamma=cfg.privacy.gamma,
            sigma=record.sigma_x,
            sweep_value=float(point.value),
        )
        return ctx, record

    def run(self) -> ExperimentResult:
        """
        Run the complete sweep

        Returns:
            ExperimentResult with the CSV and manifest paths
        """
        cfg = self.config.config
        _, warnings = self.config.validate()
        for warning in warnings:
            logger.warning(warning)

        logger.info("=" * 60)
        logger.info("dpmixsgd experiment")
        logger.info("=" * 60)

        self.load_data()
        points = [self.resolve_point(axis, value) for axis, value in cfg.sweep_points()]
        jobs = list(product(points, cfg.methods, cfg.seeds))

        reporter = CSVReporter(cfg.output.path, wall_clock=cfg.output.wall_clock)
        progress = SweepProgress(len(jobs), enabled=self.enable_progress_display)
        workers = cfg.advanced.max_workers if cfg.advanced.parallel_execution else 1
        records: List[Tuple[RunContext, RunRecord]] = []
        failure: Optional[Tuple[Exception, ResolvedPoint, Method, int]] = None

        progress.start()
        try:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(self.run_one, *job): job for job in jobs}
                done, pending = wait(futures, return_when=FIRST_EXCEPTION)
                for future in pending:
                    future.cancel()
                for future in futures:
                    if future.cancelled():
                        continue
                    point, method, seed = futures[future]
                    label = f"{method.value} {point.axis}={point.value} seed={seed}"
                    error = future.exception()
                    if error is not None:
                        progress.run_finished(label, failed=True)
                        if failure is None:
                            failure = (error, point, method, seed)
                        continue
                    ctx, record = future.result()
                    reporter.add_record(ctx, record)
                    records.append((ctx, record))
                    progress.run_finished(label, rows=len(record.rows))
        finally:
            progress.stop()
            csv_path = reporter.flush()
            manifest_path = write_manifest(
                cfg.output.manifest_path,
                cfg.model_dump(mode='json'),
                [p.topology_entry() for p in points],
                [note for p in points for note in p.notes],
            )

        if failure is not None:
            raise self._with_context(*failure)

        if self.enable_progress_display:
            progress.print_summary()
        logger.success(f"Finished {len(records)} runs; results in {csv_path}")
        return ExperimentResult(csv_path, manifest_path, len(records), reporter.row_count, records)

    @staticmethod
    def _with_context(error: Exception, point: ResolvedPoint, method: Method, seed: int) -> DPMixError:
        context = {'method': method.value, 'seed': seed, point.axis: point.value}
        if isinstance(error, DPMixError):
            error.details.update(context)
            return error
        return wrap_exception(error, f"Run failed: {error}", details=context)


def run_experiment(config: ConfigManager, enable_progress_display: bool = False) -> ExperimentResult:
    """Build an engine for `config` and run it"""
    return ExperimentEngine(config, enable_progress_display).run()
