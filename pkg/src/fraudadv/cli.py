"""Command-line entry point: ``fraudadv {train,tune-threshold,encode,attack,experiment}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import harness, ingest
from .attacks import KINDS, AttackConfig, AttackError, Scaler, generic_attack
from .model import TrainParams, dump_model, load_model, precision_recall, train, tune_threshold
from .norms import NormWeights, parse_gamma
from .schema import checked_vector, load_schema

log = logging.getLogger("fraudadv")

TOGGLE_NAMES = ("threshold", "realistic", "custom-norm", "editability")

DEFAULT_EXPERIMENT = {
    "experiments": [1, 2, 3, 4, 5],
    "kinds": list(KINDS),
    "alpha": 0.5,
    "beta": 0.5,
    "gamma": 2,
    "overrides": {},
    "split_seed": 0,
    "jobs": 1,
}


def _read_json(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        body = json.load(fh)
    if not isinstance(body, dict):
        raise SystemExit(f"{path}: expected a JSON object")
    return body


def _load(args):
    schema = load_schema(args.schema)
    records = ingest.read_records(args.data, schema, space_separated=args.space_separated)
    return schema, records


def parse_toggles(text: str) -> dict[str, bool]:
    """``"threshold,realistic"`` -> toggle dict; ``"none"`` or empty turns all off."""
    chosen = {t.strip() for t in text.split(",") if t.strip() and t.strip() != "none"}
    if "all" in chosen:
        chosen = set(TOGGLE_NAMES)
    bad = chosen - set(TOGGLE_NAMES)
    if bad:
        raise SystemExit(f"unknown toggle(s): {', '.join(sorted(bad))}")
    return {t: t in chosen for t in TOGGLE_NAMES}


def _json_float(x: float) -> float | str:
    return "inf" if math.isinf(x) else x


# --------------------------------------------------------------------------
# subcommands

def cmd_train(args) -> int:
    schema, records = _load(args)
    params = TrainParams.from_dict(_read_json(args.params))
    parts = ingest.split(records, schema, seed=args.split_seed)
    model = train(parts.train.X, parts.train.y, params)
    tau = tune_threshold(model, parts.validation.X, parts.validation.y, args.beta)
    dump_model(model, args.out, tau=tau)
    p = model.predict_p1(parts.validation.X)
    acc = float(np.mean((p > 0.5) == (parts.validation.y == 1)))
    print(f"trained {len(model.trees)} trees on {len(parts.train)} rows; "
          f"validation accuracy {acc:.3f}; tau {tau:.4f}; wrote {args.out}")
    return 0


def cmd_tune(args) -> int:
    model, _ = load_model(args.model)
    schema, records = _load(args)
    val = ingest.split(records, schema, seed=args.split_seed).validation
    tau = tune_threshold(model, val.X, val.y, args.beta)
    scores = model.predict_p1(val.X)
    _, r_half = precision_recall(scores, val.y, 0.5)
    prec, rec = precision_recall(scores, val.y, tau)
    print(json.dumps({"tau": tau, "precision": prec, "recall": rec, "recall_at_0.5": r_half,
                      "beta": args.beta}, sort_keys=True))
    if args.write:
        dump_model(model, args.model, tau=tau)
    return 0


def cmd_encode(args) -> int:
    schema, records = _load(args)
    X, y = ingest.encode_many(records, schema)
    if args.dump_encoded:
        ingest.write_encoded(args.dump_encoded, X, schema, y)
    print(f"encoded {X.shape[0]} records into {X.shape[1]} columns")
    return 0


def _tau(args, stored: float | None) -> float:
    if args.tau is not None:
        return float(args.tau)
    if stored is None:
        raise SystemExit("model file has no threshold; pass --tau")
    return stored


def cmd_attack(args) -> int:
    model, stored = load_model(args.model)
    tau = _tau(args, stored)
    schema, records = _load(args)
    setup = harness.build_setup(records, schema, split_seed=args.split_seed, model=model, tau=tau)
    toggles = parse_toggles(args.toggles)
    norm = "custom" if toggles["custom-norm"] else args.norm
    weights = NormWeights(checked_vector(schema).astype(float), setup.importance,
                          args.alpha, args.beta, parse_gamma(args.gamma))
    overrides = json.loads(args.overrides) if args.overrides else {}
    clf = setup.clf
    scaler = Scaler.fit(setup.pool)
    targets = harness.select_targets(clf, setup.X_test, setup.y_test)
    if args.limit is not None:
        targets = targets[:args.limit]
    out = []
    for i in targets:
        i = int(i)
        x = setup.X_test[i]
        cfg = AttackConfig(**{**overrides, "kind": args.kind, "tau": tau, "norm": norm,
                              "norm_weights": weights, "use_threshold": toggles["threshold"],
                              "use_realistic": toggles["realistic"],
                              "use_editability": toggles["editability"],
                              "seed": harness.sample_seed(args.seed, 0, args.kind, i)})
        try:
            res = generic_attack(clf, x, cfg, setup.pool, schema, scaler)
            adv, queries, err = res.adversarial, res.queries_used, None
        except AttackError as exc:
            adv, queries, err = x.copy(), 0, str(exc)
        ok = bool(clf.classify(adv[None, :])[0] == 0)
        diff = harness.perturbation_diff(i, args.kind, 0, ok, x, adv, schema, model)
        out.append({"sample_id": i, "success": ok, "queries": int(queries),
                    "distance": float(np.linalg.norm(scaler.scale(adv) - scaler.scale(x))),
                    "original": x.tolist(), "adversarial": adv.tolist(),
                    "original_score": diff.original_score, "adversarial_score": diff.adversarial_score,
                    "fields": [asdict(f) for f in diff.fields], "error": err})
    body = {"kind": args.kind, "tau": tau, "norm": norm, "toggles": toggles, "seed": args.seed,
            "alpha": args.alpha, "beta": args.beta, "gamma": _json_float(parse_gamma(args.gamma)),
            "results": out}
    Path(args.out).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    n_ok = sum(r["success"] for r in out)
    print(f"{args.kind}: {n_ok}/{len(out)} successful; wrote {args.out}")
    return 0


def experiment_settings(path: str | None) -> dict:
    conf = dict(DEFAULT_EXPERIMENT)
    extra = _read_json(path)
    unknown = set(extra) - set(conf)
    if unknown:
        raise SystemExit(f"unknown experiment setting(s): {', '.join(sorted(unknown))}")
    conf.update(extra)
    return conf


def cmd_experiment(args) -> int:
    conf = experiment_settings(args.config)
    schema, records = _load(args)
    if args.model:
        model, stored = load_model(args.model)
        tau = _tau(args, stored)
        setup = harness.build_setup(records, schema, split_seed=conf["split_seed"], model=model, tau=tau)
    else:
        setup = harness.build_setup(records, schema, split_seed=conf["split_seed"])
    jobs = args.jobs if args.jobs is not None else conf["jobs"]
    report, diffs = harness.run_sweep(setup, conf["experiments"], conf["kinds"], conf["overrides"],
                                      seed=args.seed, jobs=jobs, alpha=conf["alpha"],
                                      beta=conf["beta"], gamma=parse_gamma(conf["gamma"]))
    harness.emit_report(report, diffs, args.out)
    print(harness.render_tables(report))
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraudadv", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp, schema=True):
        sp.add_argument("--data", required=True, help="CSV with header, or see --space-separated")
        if schema:
            sp.add_argument("--schema", required=True)
        sp.add_argument("--space-separated", action="store_true",
                        help="headerless whitespace-separated rows, label last")

    sp = sub.add_parser("train", help="train the GBDT and tune its threshold")
    data_args(sp)
    sp.add_argument("--params", help="JSON object of training parameters")
    sp.add_argument("--out", required=True)
    sp.add_argument("--beta", type=float, default=2.0)
    sp.add_argument("--split-seed", type=int, default=0)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("tune-threshold", help="F-beta threshold on the validation split")
    sp.add_argument("--model", required=True)
    data_args(sp)
    sp.add_argument("--beta", type=float, default=2.0)
    sp.add_argument("--split-seed", type=int, default=0)
    sp.add_argument("--write", action="store_true", help="store the tuned threshold in the model file")
    sp.set_defaults(func=cmd_tune)

    sp = sub.add_parser("encode", help="validate and one-hot encode a data file")
    data_args(sp)
    sp.add_argument("--dump-encoded", metavar="PATH")
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("attack", help="attack every detected fraud in the test split")
    sp.add_argument("--model", required=True)
    sp.add_argument("--tau", type=float)
    data_args(sp)
    sp.add_argument("--kind", choices=KINDS, required=True)
    sp.add_argument("--norm", choices=("l2", "linf", "custom"), default="l2")
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--beta", type=float, default=0.5)
    sp.add_argument("--gamma", default="2")
    sp.add_argument("--toggles", default="all", help=f"comma list of {','.join(TOGGLE_NAMES)}")
    sp.add_argument("--overrides", help="JSON object of attack settings")
    sp.add_argument("--limit", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--split-seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("experiment", help="run the five-configuration ablation")
    sp.add_argument("--config", help="JSON experiment settings")
    sp.add_argument("--model", help="model file; trained from the data when omitted")
    sp.add_argument("--tau", type=float)
    data_args(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
