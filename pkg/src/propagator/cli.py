"""Command-line interface: train and evaluate models, select features, build
synthetic populations, run strategy experiments, rank candidates, and serve
the campaign API.

Stochastic subcommands require an explicit --seed so repeated runs with the
same flags produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import classify, metrics, preprocess, simulate
from .corpus import NON_RETWEETER, RETWEETER, dumps_user_line, load_dataset, load_user_records
from .errors import PropagatorError
from .features import FeatureExtractor
from .recommend import ScoredCandidate, rank_candidates
from .waittime import fit_wait_time, population_fallback


def parse_duration(text: str) -> float:
    """Seconds from '24h' / '90m' / '300s' / bare seconds."""
    text = text.strip().lower()
    try:
        if text.endswith("h"):
            return float(text[:-1]) * 3600.0
        if text.endswith("m"):
            return float(text[:-1]) * 60.0
        if text.endswith("s"):
            return float(text[:-1])
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}") from None


def _atomic_write(path: str | Path, content: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_strategies(text: str, budget: int) -> list[simulate.StrategySpec]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        kind = bits[0]
        if kind == "popular":
            threshold = int(bits[1]) if len(bits) > 1 else 100
            out.append(simulate.StrategySpec(kind="popular", budget=budget, threshold=threshold))
        elif kind == "predicted_waittime":
            if len(bits) != 3:
                raise argparse.ArgumentTypeError(
                    "predicted_waittime needs deadline and cutoff, e.g. predicted_waittime:24h:0.7"
                )
            out.append(
                simulate.StrategySpec(
                    kind=kind,
                    budget=budget,
                    deadline=parse_duration(bits[1]),
                    cutoff=float(bits[2]),
                )
            )
        else:
            out.append(simulate.StrategySpec(kind=kind, budget=budget))
    if not out:
        raise argparse.ArgumentTypeError("no strategies given")
    return out


def _model_spec_from_args(args) -> classify.ModelSpec:
    kwargs: dict = {}
    if args.trees is not None:
        kwargs["trees"] = args.trees
    if args.max_depth is not None:
        kwargs["max_depth"] = args.max_depth
    return classify.ModelSpec(
        kind=args.model_kind, imbalance=args.imbalance, seed=args.seed, **kwargs
    )


def _cmd_train(args) -> int:
    ds = load_dataset(args.data)
    extractor = FeatureExtractor()
    X, y = extractor.matrix(ds)
    selected = None
    if args.select_features:
        scores = preprocess.chi_squared_scores(X, y, extractor.names, bins=args.bins)
        selected = preprocess.selected_features(scores)
    spec = _model_spec_from_args(args)
    model = classify.train(spec, X, y, extractor.names, selected=selected, dataset_name=ds.name)
    _atomic_write(args.out, model.to_json() + "\n")
    print(f"wrote model {model.model_id} ({spec.kind}, {spec.imbalance}) to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    model = classify.load_model(args.model)
    ds = load_dataset(args.data)
    extractor = FeatureExtractor()
    X, y = extractor.matrix(ds)
    report = metrics.evaluate(model, X, y)
    sys.stdout.write(metrics.render_text([report], title=f"dataset: {ds.name} (n={len(ds)})"))
    if args.out:
        _atomic_write(args.out, metrics.render_csv([report]))
    return 0


def _cmd_select_features(args) -> int:
    ds = load_dataset(args.data)
    extractor = FeatureExtractor()
    X, y = extractor.matrix(ds)
    scores = preprocess.chi_squared_scores(X, y, extractor.names, bins=args.bins)
    n_sel = sum(1 for s in scores if s.selected)
    if args.out:
        _atomic_write(args.out, preprocess.score_report_csv(scores))
    print(f"{n_sel} of {len(scores)} features selected (p < 0.05, {args.bins} bins)")
    return 0


def _cmd_simulate(args) -> int:
    config = simulate.PopulationConfig.from_json(args.config)
    if args.seed is not None:
        config = simulate.PopulationConfig(**{**config.__dict__, "seed": args.seed})
    population = simulate.generate_population(config)
    labels = simulate.probe_labels(population, config.request_time, config.seed)
    lines = []
    for u in population:
        label = RETWEETER if labels[u.record.user_id] else NON_RETWEETER
        lines.append(dumps_user_line(u.record, label, config.request_time))
    _atomic_write(args.out, "\n".join(lines) + "\n")
    pos = sum(labels.values())
    print(f"wrote {len(population)} users ({pos} positive) to {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    config = simulate.PopulationConfig.from_json(args.config)
    if args.seed is not None:
        config = simulate.PopulationConfig(**{**config.__dict__, "seed": args.seed})
    strategies = _parse_strategies(args.strategies, args.budget)
    window = parse_duration(args.window) if args.window else None
    if window is None:
        deadlines = [s.deadline for s in strategies if s.deadline]
        window = deadlines[0] if deadlines else None
    results = simulate.run_experiment(config, strategies, window=window)
    sys.stdout.write(simulate.experiment_report(results, window=window))
    if args.out:
        _atomic_write(args.out, simulate.experiment_csv(results))
    return 0


def _cmd_recommend(args) -> int:
    model = classify.load_model(args.model)
    records = load_user_records(args.data)
    extractor = FeatureExtractor()
    fallback = population_fallback([r for r, _ in records])
    candidates = []
    for record, request_time in records:
        rt = request_time if request_time is not None else (
            record.timeline[-1].timestamp if record.timeline else record.created_at
        )
        fv = extractor.extract(record, rt)
        wait = fit_wait_time(record, fallback)
        candidates.append(
            ScoredCandidate(
                user_id=record.user_id,
                retweet_probability=float(model.predict_proba(fv.values)),
                followers_count=record.followers_count,
                mean_wait=wait.mean_wait,
            )
        )
    ranked = rank_candidates(candidates, args.deadline, args.cutoff, args.top_n)
    payload = json.dumps([c.to_obj() for c in ranked], indent=2, sort_keys=True)
    if args.out:
        _atomic_write(args.out, payload + "\n")
    print(f"{'user':<12} {'p(repost)':>9}  {'p(within t)':>11}  {'followers':>9}  {'mean wait (h)':>13}")
    for c in ranked:
        print(
            f"{c.user_id:<12} {c.retweet_probability:>9.3f}  {c.prob_within_deadline:>11.3f}"
            f"  {c.followers_count:>9}  {c.mean_wait / 3600.0:>13.1f}"
        )
    return 0


def _cmd_serve(args) -> int:
    from .service import CampaignStore, create_app

    store = CampaignStore(args.log_dir)
    if args.model:
        store.publish_model(classify.load_model(args.model))
    app = create_app(store)
    if args.console:
        from fastapi.staticfiles import StaticFiles

        console_dir = Path(args.console)
        if not console_dir.is_dir():
            raise FileNotFoundError(f"console directory {console_dir} not found")
        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="propagator",
        description="Predict, rank, and engage likely reposters of a requested message.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a prediction model from a labeled dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model-kind", required=True, choices=classify.KINDS)
    p.add_argument("--imbalance", default="basic", help="basic | smote | weighted:R")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--select-features", action="store_true",
                   help="restrict the model to chi-squared-selected features")
    p.add_argument("--bins", type=int, default=preprocess.DEFAULT_BINS)
    p.add_argument("--trees", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score a model on a labeled dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="also write a CSV report here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("select-features", help="chi-squared feature report")
    p.add_argument("--data", required=True)
    p.add_argument("--bins", type=int, default=preprocess.DEFAULT_BINS)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_select_features)

    p = sub.add_parser("simulate", help="generate a labeled synthetic population")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("experiment", help="population-level strategy comparison")
    p.add_argument("--config", required=True)
    p.add_argument("--strategies",
                   default="random,popular:100,predicted,predicted_waittime:24h:0.7")
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--window", default=None, help="rate window, e.g. 24h")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="also write CSV here")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("recommend", help="rank candidates from a file, offline")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--deadline", type=parse_duration, required=True)
    p.add_argument("--cutoff", type=float, default=0.7)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_recommend)

    p = sub.add_parser("serve", help="run the campaign HTTP service")
    p.add_argument("--log-dir", required=True)
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--model", default=None, help="publish this model file at startup")
    p.add_argument("--console", default=None,
                   help="serve this directory (the built operator console) at /console")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PropagatorError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
