"""Ablation harness: five toggle configurations x three attacks over every
correctly detected fraud, with aggregate metrics and per-sample diffs."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import constraints, ingest
from .attacks import KINDS, AttackConfig, AttackError, Scaler, generic_attack
from .model import GbdtModel, ThresholdedClassifier, feature_importance
from .norms import NormWeights
from .schema import FeatureType, Schema, checked_vector

log = logging.getLogger(__name__)

# threshold, realistic, custom norm, editability
TOGGLES = {
    1: (False, False, False, False),
    2: (True, False, False, False),
    3: (True, True, False, False),
    4: (True, True, True, False),
    5: (True, True, True, True),
}

FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class ExperimentConfig:
    id: int
    kinds: tuple[str, ...] = KINDS
    overrides: dict = field(default_factory=dict)
    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 2.0

    def __post_init__(self):
        if self.id not in TOGGLES:
            raise ValueError(f"experiment id must be 1..5, got {self.id}")
        bad = [k for k in self.kinds if k not in KINDS]
        if bad:
            raise ValueError(f"unknown attack kind(s): {bad}")

    @property
    def threshold(self) -> bool:
        return TOGGLES[self.id][0]

    @property
    def realistic(self) -> bool:
        return TOGGLES[self.id][1]

    @property
    def custom_norm(self) -> bool:
        return TOGGLES[self.id][2]

    @property
    def editability(self) -> bool:
        return TOGGLES[self.id][3]

    def attack_config(self, kind: str, tau: float, weights: NormWeights, seed: int) -> AttackConfig:
        base = dict(self.overrides)
        base.update(kind=kind, tau=tau, seed=seed,
                    use_threshold=self.threshold, use_realistic=self.realistic,
                    use_editability=self.editability,
                    norm="custom" if self.custom_norm else base.get("norm", "l2"),
                    norm_weights=weights)
        return AttackConfig(**base)


@dataclass
class Metrics:
    kind: str
    experiment: int
    n_targets: int
    n_success: int
    success_rate: float
    unrealistic_rate: float | None
    checked_fields_perturbed: int
    noneditable_fields_perturbed: int
    mean_queries: float
    mean_distance: float | None
    n_errors: int = 0


@dataclass
class MetricsReport:
    metrics: list[Metrics]
    meta: dict = field(default_factory=dict)

    def get(self, kind: str, experiment: int) -> Metrics:
        for m in self.metrics:
            if m.kind == kind and m.experiment == experiment:
                return m
        raise KeyError((kind, experiment))

    def to_json(self) -> str:
        body = {"meta": self.meta, "metrics": [asdict(m) for m in self.metrics]}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        body = json.loads(text)
        return cls([Metrics(**m) for m in body["metrics"]], body.get("meta", {}))


@dataclass
class FieldDiff:
    feature: str
    original: str
    adversarial: str
    changed: bool


@dataclass
class PerturbationDiff:
    sample_id: int
    kind: str
    experiment: int
    success: bool
    fields: list[FieldDiff]
    original_score: float
    adversarial_score: float

    @property
    def changed_features(self) -> list[str]:
        return [f.feature for f in self.fields if f.changed]


def select_targets(clf: ThresholdedClassifier, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of true positives: labelled fraud and flagged by the classifier."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if len(X) == 0 or X.shape[1] == 0:
        return np.zeros(0, dtype=np.int64)
    flagged = clf.classify(X) == 1
    return np.flatnonzero(flagged & (np.asarray(y) == 1))


def changed_features(original: np.ndarray, adversarial: np.ndarray, schema: Schema) -> np.ndarray:
    """Boolean per raw feature (schema order): did its value change."""
    out = []
    for raw in schema.raw_features:
        cols = schema.raw_columns[raw.name]
        a, b = original[cols], adversarial[cols]
        if raw.ftype in (FeatureType.FLOAT, FeatureType.POSITIVE_FLOAT):
            out.append(bool(np.any(np.abs(a - b) > FLOAT_TOL)))
        else:
            out.append(bool(np.any(a != b)))
    return np.asarray(out, dtype=bool)


def perturbation_diff(sample_id: int, kind: str, experiment: int, success: bool,
                      original: np.ndarray, adversarial: np.ndarray, schema: Schema,
                      model: GbdtModel) -> PerturbationDiff:
    before = ingest.decode(original, schema, strict=False)
    after = ingest.decode(adversarial, schema, strict=False)
    changed = changed_features(original, adversarial, schema)
    fields = [FieldDiff(raw.name, before[raw.name], after[raw.name], bool(c))
              for raw, c in zip(schema.raw_features, changed)]
    p = model.predict_p1(np.vstack([original, adversarial]))
    return PerturbationDiff(sample_id, kind, experiment, success, fields, float(p[0]), float(p[1]))


def raw_flags(schema: Schema, flag: str) -> dict[str, bool]:
    if flag == "checked":
        return {r.name: r.checked for r in schema.raw_features}
    if flag == "noneditable":
        return {r.name: not r.editable for r in schema.raw_features}
    raise ValueError(f"unknown flag {flag!r}")


def count_perturbed(diff: PerturbationDiff, flags: dict[str, bool]) -> int:
    return sum(1 for f in diff.fields if f.changed and flags.get(f.feature, False))


def sample_seed(master: int, experiment: int, kind: str, sample_id: int) -> int:
    ss = np.random.SeedSequence([int(master), int(experiment), KINDS.index(kind), int(sample_id)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class Setup:
    """Everything an experiment needs: model, threshold, data, norm inputs."""

    schema: Schema
    model: GbdtModel
    tau: float
    pool: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    importance: np.ndarray | None = None

    def __post_init__(self):
        if self.importance is None:
            self.importance = feature_importance(self.model)

    @property
    def clf(self) -> ThresholdedClassifier:
        return ThresholdedClassifier(self.model, self.tau)

    def weights(self, cfg: ExperimentConfig) -> NormWeights:
        return NormWeights(checked_vector(self.schema).astype(float), self.importance,
                           cfg.alpha, cfg.beta, cfg.gamma)


def _attack_one(args):
    setup, scaler, cfg, kind, sample_id, seed, x = args
    clf = setup.clf
    acfg = cfg.attack_config(kind, setup.tau, setup.weights(cfg), seed)
    try:
        res = generic_attack(clf, x, acfg, setup.pool, setup.schema, scaler)
        adv, queries, err = res.adversarial, res.queries_used, None
    except AttackError as exc:
        adv, queries, err = x.copy(), 0, str(exc)
    # success is always judged by the true thresholded model
    success = bool(clf.classify(adv[None, :])[0] == 0)
    return sample_id, adv, queries, success, err


def run_experiment(cfg: ExperimentConfig, setup: Setup, seed: int = 0, jobs: int = 1,
                   targets: np.ndarray | None = None) -> tuple[list[Metrics], list[PerturbationDiff]]:
    schema = setup.schema
    if targets is None:
        targets = select_targets(setup.clf, setup.X_test, setup.y_test)
    if len(targets) == 0:
        raise ValueError("no correctly detected frauds to attack")
    scaler = Scaler.fit(setup.pool)
    checked = raw_flags(schema, "checked")
    noneditable = raw_flags(schema, "noneditable")
    metrics: list[Metrics] = []
    diffs: list[PerturbationDiff] = []
    for kind in cfg.kinds:
        tasks = [(setup, scaler, cfg, kind, int(i), sample_seed(seed, cfg.id, kind, int(i)), setup.X_test[i])
                 for i in targets]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                outcomes = list(ex.map(_attack_one, tasks, chunksize=4))
        else:
            outcomes = [_attack_one(t) for t in tasks]
        n_ok = n_err = n_checked = n_nonedit = unreal = 0
        queries, dists = [], []
        for sample_id, adv, q, ok, err in outcomes:
            x = setup.X_test[sample_id]
            diff = perturbation_diff(sample_id, kind, cfg.id, ok, x, adv, schema, setup.model)
            diffs.append(diff)
            queries.append(q)
            if err is not None:
                n_err += 1
                log.debug("exp %d %s sample %d: %s", cfg.id, kind, sample_id, err)
            if not ok:
                continue
            n_ok += 1
            unreal += constraints.count_unrealistic(adv, schema)
            n_checked += count_perturbed(diff, checked)
            n_nonedit += count_perturbed(diff, noneditable)
            dists.append(float(np.linalg.norm((adv - x) / scaler.span)))
        n = len(targets)
        metrics.append(Metrics(
            kind=kind, experiment=cfg.id, n_targets=n, n_success=n_ok,
            success_rate=100.0 * n_ok / n,
            unrealistic_rate=(100.0 * unreal / (n_ok * schema.n_slots)) if n_ok else None,
            checked_fields_perturbed=n_checked, noneditable_fields_perturbed=n_nonedit,
            mean_queries=float(np.mean(queries)), mean_distance=float(np.mean(dists)) if dists else None,
            n_errors=n_err))
        log.info("exp %d %-11s success %5.1f%%", cfg.id, kind, metrics[-1].success_rate)
    return metrics, diffs


def run_sweep(setup: Setup, experiments=(1, 2, 3, 4, 5), kinds=KINDS, overrides: dict | None = None,
              seed: int = 0, jobs: int = 1, alpha: float = 0.5, beta: float = 0.5,
              gamma: float = 2.0) -> tuple[MetricsReport, list[PerturbationDiff]]:
    targets = select_targets(setup.clf, setup.X_test, setup.y_test)
    all_metrics, all_diffs = [], []
    for eid in experiments:
        cfg = ExperimentConfig(int(eid), tuple(kinds), dict(overrides or {}), alpha, beta, gamma)
        m, d = run_experiment(cfg, setup, seed, jobs, targets)
        all_metrics += m
        all_diffs += d
    meta = {"seed": int(seed), "tau": setup.tau, "n_targets": int(len(targets)),
            "experiments": [int(e) for e in experiments], "kinds": list(kinds),
            "alpha": alpha, "beta": beta, "gamma": "inf" if math.isinf(gamma) else gamma,
            "overrides": {k: v for k, v in sorted((overrides or {}).items())}}
    return MetricsReport(all_metrics, meta), all_diffs


# --------------------------------------------------------------------------
# reporting

_ROWS = [("Success Rate (%)", "success_rate"), ("% of Unrealistic Values", "unrealistic_rate"),
         ("# Checked Fields", "checked_fields_perturbed"),
         ("# Non-Editable Fields", "noneditable_fields_perturbed")]

_KIND_TITLES = {"zoo": "ZOO", "boundary": "Boundary", "hopskipjump": "HopSkipJump"}


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.1f}"
    return str(value)


def render_tables(report: MetricsReport) -> str:
    out = []
    kinds = list(dict.fromkeys(m.kind for m in report.metrics))
    exps = sorted({m.experiment for m in report.metrics})
    for kind in kinds:
        header = [_KIND_TITLES.get(kind, kind)] + [str(e) for e in exps]
        rows = [header]
        for title, attr in _ROWS:
            rows.append([title] + [_cell(getattr(report.get(kind, e), attr)) for e in exps])
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        sep = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
        out.append(sep)
        for k, r in enumerate(rows):
            out.append("| " + " | ".join(c.ljust(widths[i]) if i == 0 else c.rjust(widths[i])
                                         for i, c in enumerate(r)) + " |")
            if k == 0:
                out.append(sep)
        out.append(sep)
        out.append("")
    return "\n".join(out)


def render_diff(diff: PerturbationDiff) -> str:
    title = f"{_KIND_TITLES.get(diff.kind, diff.kind)} (experiment {diff.experiment}, sample {diff.sample_id})"
    rows = [[title, "Original", "Adversarial"]]
    rows += [[f.feature, f.original, f.adversarial] for f in diff.fields if f.changed]
    rows.append(["Model's Risk Score", f"{diff.original_score:.3f}", f"{diff.adversarial_score:.3f}"])
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    sep = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    lines = [sep]
    for k, r in enumerate(rows):
        lines.append("| " + " | ".join(c.ljust(widths[i]) for i, c in enumerate(r)) + " |")
        if k == 0 or k == len(rows) - 2:
            lines.append(sep)
    lines.append(sep)
    return "\n".join(lines)


def sparsest_success(diffs: list[PerturbationDiff]) -> PerturbationDiff | None:
    """Successful example with the fewest changed fields, realistic runs first."""
    ok = [d for d in diffs if d.success]
    if not ok:
        return None
    return min(ok, key=lambda d: (not TOGGLES[d.experiment][1], len(d.changed_features),
                                  d.experiment, d.kind, d.sample_id))


def diff_to_dict(d: PerturbationDiff) -> dict:
    return asdict(d)


def diff_from_dict(d: dict) -> PerturbationDiff:
    fields = [FieldDiff(**f) for f in d["fields"]]
    return PerturbationDiff(d["sample_id"], d["kind"], d["experiment"], d["success"], fields,
                            d["original_score"], d["adversarial_score"])


def emit_report(report: MetricsReport, diffs: list[PerturbationDiff], out_dir: str | Path) -> Path:
    """Write ``metrics.json``, ``tables.txt`` and ``diffs/<sample_id>.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(report.to_json(), encoding="utf-8")
    text = render_tables(report)
    best = sparsest_success(diffs)
    if best is not None:
        text += "\nSparsest successful adversarial example\n" + render_diff(best) + "\n"
    (out / "tables.txt").write_text(text, encoding="utf-8")
    if diffs:
        ddir = out / "diffs"
        ddir.mkdir(exist_ok=True)
        by_sample: dict[int, list[dict]] = {}
        for d in diffs:
            by_sample.setdefault(d.sample_id, []).append(diff_to_dict(d))
        for sid, items in sorted(by_sample.items()):
            items.sort(key=lambda d: (d["experiment"], d["kind"]))
            (ddir / f"{sid}.json").write_text(json.dumps(items, indent=2, sort_keys=True) + "\n",
                                              encoding="utf-8")
    return out


def parse_report(out_dir: str | Path) -> tuple[MetricsReport, list[PerturbationDiff]]:
    out = Path(out_dir)
    report = MetricsReport.from_json((out / "metrics.json").read_text(encoding="utf-8"))
    diffs: list[PerturbationDiff] = []
    ddir = out / "diffs"
    if ddir.is_dir():
        for p in sorted(ddir.glob("*.json"), key=lambda p: int(p.stem)):
            diffs += [diff_from_dict(d) for d in json.loads(p.read_text(encoding="utf-8"))]
    return report, diffs


def build_setup(records: list[ingest.RawRecord], schema: Schema, params=None,
                ratios=(0.56, 0.14, 0.30), split_seed: int = 0, beta: float = 2.0,
                model: GbdtModel | None = None, tau: float | None = None) -> Setup:
    """Split, train (unless ``model`` is given) and tune the threshold (unless ``tau`` is)."""
    from .model import TrainParams, train, tune_threshold

    parts = ingest.split(records, schema, ratios, split_seed)
    if model is None:
        model = train(parts.train.X, parts.train.y, params or TrainParams())
    if tau is None:
        tau = tune_threshold(model, parts.validation.X, parts.validation.y, beta)
    return Setup(schema, model, float(tau), parts.train.X, parts.test.X, parts.test.y)
