"""Command-line surface: simulate, estimate, ensemble, evaluate, study.

Exit codes: 0 success, 1 domain error (bad data, estimator failure),
2 usage or config error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import ensemble as ens
from .errors import ConfigError, GlaError, InvalidInput
from .evaluation import breakdown_report, run_convergence_study
from .io_formats import (
    PriorDocument,
    RunConfig,
    load_logits,
    load_prior,
    load_run_config,
    save_logits,
    save_prior,
    save_report,
    save_study_csv,
)
from .numerics import DEFAULT_LOG_FLOOR, LabelledLogits, log_prior
from .prior_estimation import (
    build_transition_matrix,
    estimate_prior_m1,
    estimate_prior_naive,
    power_iterate,
)
from .synthlab import make_task, sample_batch

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _resolve_floor(flag_value: float | None, config: RunConfig | None) -> float:
    """Flag wins over GLA_DEFAULT_FLOOR env var over config over built-in."""
    if flag_value is not None:
        if not flag_value > 0:
            raise ConfigError("--floor must be positive")
        return flag_value
    env = os.environ.get("GLA_DEFAULT_FLOOR")
    if env is not None:
        try:
            value = float(env)
        except ValueError:
            raise ConfigError(f"GLA_DEFAULT_FLOOR is not a number: {env!r}") from None
        if not value > 0:
            raise ConfigError("GLA_DEFAULT_FLOOR must be positive")
        return value
    if config is not None and config.floor is not None:
        return config.floor
    return DEFAULT_LOG_FLOOR


def _load_config(path: str | None) -> RunConfig:
    return load_run_config(path) if path else RunConfig()


def _cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    floor = _resolve_floor(args.floor, cfg)
    data = load_logits(args.logits)
    if args.method in ("m1", "m2") and not isinstance(data, LabelledLogits):
        raise InvalidInput(f"labels required for method {args.method}")
    if args.method == "m1":
        m1_cfg = cfg.method1
        if floor != m1_cfg.floor:
            m1_cfg = type(m1_cfg)(
                steps=m1_cfg.steps,
                primal_lr=m1_cfg.primal_lr,
                dual_lr=m1_cfg.dual_lr,
                floor=floor,
                surrogate=m1_cfg.surrogate,
            )
        prior = estimate_prior_m1(data, m1_cfg)
    elif args.method == "m2":
        q, iters, residual = power_iterate(build_transition_matrix(data), cfg.power_iter)
        prior = q
        print(f"power iteration: {iters} iterations, residual {residual:.3e}")
    else:
        table = data.logits if isinstance(data, LabelledLogits) else data
        prior = estimate_prior_naive(table)
    print("estimated prior:", " ".join(f"{p:.6f}" for p in prior.probs))
    save_prior(
        args.out,
        PriorDocument(
            prior=prior,
            estimator=args.method,
            source_split=args.split or os.path.basename(args.logits),
            seed=args.seed,
        ),
    )
    return EXIT_OK


def _cmd_ensemble(args) -> int:
    floor = _resolve_floor(args.floor, None)
    ft = load_logits(args.ft)
    zs = load_logits(args.zs)
    labels = None
    if isinstance(ft, LabelledLogits) and isinstance(zs, LabelledLogits):
        if not np.array_equal(ft.labels, zs.labels):
            raise InvalidInput("ft and zs files disagree on labels")
        labels = ft.labels
    ft_table = ft.logits if isinstance(ft, LabelledLogits) else ft
    zs_table = zs.logits if isinstance(zs, LabelledLogits) else zs
    pi_p = log_prior(load_prior(args.prior_p).prior, floor)
    pi_s = log_prior(load_prior(args.prior_s).prior, floor)
    pi_t = log_prior(load_prior(args.prior_t).prior, floor) if args.prior_t else None
    adj = ens.AdjustmentSpec(pi_s=pi_s, pi_p=pi_p, pi_t=pi_t)
    if args.alpha is not None:
        combined = ens.alpha_mix(ft_table, zs_table, adj, ens.MixSpec(args.alpha))
    else:
        combined = ens.gla_combine(ft_table, zs_table, adj)
    save_logits(args.out, combined, labels)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    floor = _resolve_floor(args.floor, None)
    data = load_logits(args.logits)
    if not isinstance(data, LabelledLogits):
        raise InvalidInput("evaluation requires a fully labelled logit file")
    metadata = {"split": os.path.basename(args.logits)}
    if args.prior_p:
        doc = load_prior(args.prior_p)
        pi_p = log_prior(doc.prior, floor)
        metadata["breakdown_prior"] = f"{doc.estimator}:{args.prior_p}"
    else:
        pi_p = np.full(data.n_classes, -np.log(data.n_classes))
        metadata["breakdown_prior"] = "uniform"
    report = breakdown_report(data.logits, data.labels, pi_p, metadata)
    print(f"top1_accuracy: {report.top1_accuracy:.6f}")
    if args.balanced:
        print(f"balanced_accuracy: {report.balanced_accuracy:.6f}")
    if args.prior_p:
        b = report.breakdown
        print(
            f"head: {b['head']:.6f}  medium: {b['medium']:.6f}  tail: {b['tail']:.6f}"
        )
    save_report(args.report, report)
    return EXIT_OK


def _cmd_study(args) -> int:
    cfg = load_run_config(args.config)
    if cfg.task is None:
        raise ConfigError("study requires a 'task' section in the config")
    study = run_convergence_study(
        cfg.task,
        args.estimator,
        cfg.study.shots,
        cfg.study.trials,
        delta=cfg.study.delta,
        base_seed=cfg.study.base_seed,
        m1_cfg=cfg.method1,
        m2_cfg=cfg.power_iter,
    )
    save_study_csv(args.out, study)
    for row in study.rows:
        print(f"N={row.n}: mean_l1={row.mean_l1:.5f} std={row.std:.5f} bound={row.bound:.5f}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = load_run_config(args.config)
    if cfg.task is None:
        raise ConfigError("simulate requires a 'task' section in the config")
    task = make_task(cfg.task)
    from .numerics import ProbabilitySimplex

    priors = {
        "balanced": ProbabilitySimplex.uniform(cfg.task.k),
        "pretrain": cfg.task.pretrain_prior,
        "source": cfg.task.source_prior,
    }
    batch = sample_batch(task, priors[args.prior], args.n, args.seed)
    save_logits(args.out_zs, batch.zs_logits, batch.labels)
    save_logits(args.out_ft, batch.ft_logits, batch.labels)
    print(f"wrote {args.n} examples (labels ~ {args.prior}) to {args.out_zs}, {args.out_ft}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gla",
        description="Label-prior estimation, logit debiasing and ensembling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the pre-training label prior")
    p.add_argument("--logits", required=True)
    p.add_argument("--method", required=True, choices=["m1", "m2", "naive"])
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--floor", type=float)
    p.add_argument("--split", help="name of the split recorded in the prior file")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("ensemble", help="combine fine-tuned and zero-shot logits")
    p.add_argument("--ft", required=True)
    p.add_argument("--zs", required=True)
    p.add_argument("--prior-p", required=True)
    p.add_argument("--prior-s", required=True)
    p.add_argument("--prior-t")
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--floor", type=float)
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("evaluate", help="score a labelled logit file")
    p.add_argument("--logits", required=True)
    p.add_argument("--prior-p")
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--report", required=True)
    p.add_argument("--floor", type=float)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("study", help="run an estimation-convergence study")
    p.add_argument("--config", required=True)
    p.add_argument("--estimator", required=True, choices=["m1", "m2", "naive"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_study)

    p = sub.add_parser("simulate", help="sample a synthetic task into logit files")
    p.add_argument("--config", required=True)
    p.add_argument("--out-zs", required=True)
    p.add_argument("--out-ft", required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--prior", choices=["balanced", "pretrain", "source"], default="balanced"
    )
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GlaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
