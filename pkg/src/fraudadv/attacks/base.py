"""Shared attack machinery: configuration, the query-counting oracle and the
scaled search space every attack works in."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .. import constraints, norms
from ..model import ThresholdedClassifier
from ..schema import Schema, editability_vector

KINDS = ("zoo", "boundary", "hopskipjump")
NORMS = ("l2", "linf", "custom")

# Geometry floor for zero-weight coordinates under the weighted norm; only
# used to map steps between weighted and scaled space, never for distances.
_WEIGHT_FLOOR = 1e-2


class AttackError(RuntimeError):
    pass


class NotFraudError(AttackError):
    """The target is not flagged as fraud under the attack's decision rule."""


class NoInitError(AttackError):
    """No starting point classified as non-fraud was found."""


class BudgetExhausted(Exception):
    """Raised by the oracle when a query would exceed ``max_queries``."""


@dataclass(frozen=True)
class AttackConfig:
    kind: str = "zoo"
    tau: float = 0.5
    nu: float = 0.0
    r: float = 10.0
    rho: float = -math.inf  # similarity target; -inf disables early exit
    max_iters: int = 1000
    max_queries: int = 100_000
    norm: str = "l2"
    norm_weights: norms.NormWeights | None = None
    use_threshold: bool = True
    use_realistic: bool = True
    use_editability: bool = True
    seed: int = 0
    # zoo
    zoo_batch: int = 16
    zoo_delta: float = 1e-3
    zoo_delta_growth: float = 4.0
    zoo_delta_max: float = 2.0
    zoo_lr: float = 0.01
    zoo_beta1: float = 0.9
    zoo_beta2: float = 0.999
    zoo_patience: int = 20
    zoo_tol: float = 1e-6
    # boundary
    boundary_candidates: int = 8
    spherical_step: float = 0.1
    source_step: float = 0.1
    step_adapt: float = 1.1
    step_shrink: float = 0.9
    adapt_window: int = 20
    min_source_step: float = 1e-7
    # hopskipjump
    hsj_init_evals: int = 100
    hsj_max_evals: int = 10_000
    hsj_theta: float = 1e-3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}")
        if self.norm == "custom" and self.norm_weights is None:
            raise ValueError("custom norm needs norm_weights")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.max_iters < 0 or self.max_queries <= 0:
            raise ValueError("budgets must be positive")
        if self.r <= 0 or self.nu < 0:
            raise ValueError("r must be > 0 and nu >= 0")

    def replace(self, **kw) -> "AttackConfig":
        return replace(self, **kw)

    @property
    def decision_threshold(self) -> float:
        return self.tau if self.use_threshold else 0.5


@dataclass
class AttackResult:
    adversarial: np.ndarray
    success: bool
    queries_used: int
    iterations: int
    final_p1: float
    distance: float
    kind: str = ""


@dataclass(frozen=True)
class Scaler:
    """Per-feature min-max scaling; constant columns keep unit span."""

    lo: np.ndarray
    span: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        span[span <= 0] = 1.0
        return cls(lo, span)

    @classmethod
    def identity(cls, m: int) -> "Scaler":
        return cls(np.zeros(m), np.ones(m))

    def scale(self, X):
        return (np.asarray(X, dtype=np.float64) - self.lo) / self.span

    def unscale(self, Z):
        return self.lo + np.asarray(Z, dtype=np.float64) * self.span


class Oracle:
    """Black-box access to the model with a hard query budget."""

    def __init__(self, clf: ThresholdedClassifier, threshold: float, max_queries: int):
        self.clf = clf
        self.threshold = threshold
        self.max_queries = max_queries
        self.used = 0

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.used + len(X) > self.max_queries:
            raise BudgetExhausted
        self.used += len(X)
        return self.clf.model.predict_p1(X)

    def is_fraud(self, p1) -> np.ndarray:
        return np.asarray(p1) > self.threshold


def decision_oracle(clf: ThresholdedClassifier, x: np.ndarray, cfg: AttackConfig) -> int:
    """The attack's view of the model: threshold ``tau`` or the naive 0.5."""
    p1 = clf.model.predict_p1(np.asarray(x, dtype=np.float64)[None, :])[0]
    return int(p1 > cfg.decision_threshold)


class Problem:
    """One attack instance: target, constraints, distance and bookkeeping.

    Attacks move a latent point ``z`` in min-max scaled space. Every candidate
    is unscaled and sanitized (per the config toggles) before the oracle sees
    it, and the best non-fraud sanitized candidate is remembered.
    """

    def __init__(self, clf: ThresholdedClassifier, t_f: np.ndarray, cfg: AttackConfig,
                 schema: Schema, scaler: Scaler | None = None):
        self.clf = clf
        self.cfg = cfg
        self.schema = schema
        self.t_f = np.asarray(t_f, dtype=np.float64)
        if self.t_f.shape != (schema.m,):
            raise ValueError(f"target must have length {schema.m}")
        self.scaler = scaler or Scaler.identity(schema.m)
        self.z_f = self.scaler.scale(self.t_f)
        self.oracle = Oracle(clf, cfg.decision_threshold, cfg.max_queries)
        self.e = editability_vector(schema)
        self.movable = self.e if cfg.use_editability else np.ones(schema.m, dtype=bool)
        if cfg.norm == "custom":
            self.weights = norms.weight_vector(cfg.norm_weights)
            self.gamma = cfg.norm_weights.gamma
        else:
            self.weights = np.ones(schema.m)
            self.gamma = np.inf if cfg.norm == "linf" else 2.0
        self.geom = np.maximum(self.weights, _WEIGHT_FLOOR)
        self.rng = np.random.default_rng(cfg.seed)
        self.best_x: np.ndarray | None = None
        self.best_dist = math.inf
        self.best_p1 = math.nan
        self.iterations = 0

    # candidates -------------------------------------------------------

    def sanitize(self, Z: np.ndarray) -> np.ndarray:
        """Latent scaled rows -> sanitized rows in the model's input space."""
        X = self.scaler.unscale(np.atleast_2d(Z))
        return constraints.sanitize_rows(X, self.t_f, self.schema,
                                         editability=self.cfg.use_editability,
                                         realistic=self.cfg.use_realistic, e=self.e)

    def distance(self, X: np.ndarray) -> np.ndarray:
        """Configured norm of the scaled perturbation for each row of ``X``."""
        d = (np.atleast_2d(X) - self.t_f) / self.scaler.span * self.weights
        return norms.linf(d) if np.isinf(self.gamma) else norms.l2(d)

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Query sanitized rows; returns (p1, is_fraud) and updates the best."""
        p1 = self.oracle.scores(X)
        fraud = self.oracle.is_fraud(p1)
        if not fraud.all():
            ok = np.flatnonzero(~fraud)
            dist = self.distance(X[ok])
            k = int(np.argmin(dist))
            if dist[k] < self.best_dist:
                self.best_dist = float(dist[k])
                self.best_x = X[ok[k]].copy()
                self.best_p1 = float(p1[ok[k]])
        return p1, fraud

    def similar_enough(self) -> bool:
        return self.cfg.rho > -math.inf and -self.best_dist >= self.cfg.rho

    # weighted geometry ------------------------------------------------

    def to_u(self, Z: np.ndarray) -> np.ndarray:
        return (np.asarray(Z) - self.z_f) * self.geom

    def from_u(self, U: np.ndarray) -> np.ndarray:
        return self.z_f + np.asarray(U) / self.geom

    def random_directions(self, n: int) -> np.ndarray:
        """Gaussian directions restricted to movable coordinates."""
        eta = self.rng.standard_normal((n, self.schema.m))
        eta[:, ~self.movable] = 0.0
        return eta

    # results ----------------------------------------------------------

    def check_target(self) -> None:
        p1, fraud = self.evaluate(self.t_f[None, :])
        if not fraud[0]:
            raise NotFraudError(f"target scores {p1[0]:.4f}, not above {self.oracle.threshold:.4f}")

    def result(self, fallback: np.ndarray | None = None, fallback_p1: float = math.nan) -> AttackResult:
        if self.best_x is not None:
            x, p1, ok = self.best_x, self.best_p1, True
        else:
            x = self.t_f if fallback is None else fallback
            p1, ok = fallback_p1, False
        return AttackResult(x.copy(), ok, self.oracle.used, self.iterations, float(p1),
                            float(self.distance(x[None, :])[0]), self.cfg.kind)


def bisect_to_boundary(prob: Problem, z_adv: np.ndarray, tol: float) -> tuple[np.ndarray, float]:
    """Shrink ``z_adv`` toward the target along the segment to the boundary.

    Returns the blended latent point on the non-fraud side and its blend
    factor (1 = unchanged). ``z_adv`` must sanitize to a non-fraud point.
    """
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        z = prob.z_f + mid * (z_adv - prob.z_f)
        _, fraud = prob.evaluate(prob.sanitize(z))
        if fraud[0]:
            lo = mid
        else:
            hi = mid
    return prob.z_f + hi * (z_adv - prob.z_f), hi


def init_adversarial(clf: ThresholdedClassifier, t_f: np.ndarray, pool: np.ndarray,
                     cfg: AttackConfig, schema: Schema, scaler: Scaler | None = None,
                     problem: Problem | None = None) -> np.ndarray:
    """Nearest pool sample (after sanitizing) that the oracle calls non-fraud."""
    prob = problem or Problem(clf, t_f, cfg, schema, scaler)
    pool = np.atleast_2d(np.asarray(pool, dtype=np.float64))
    if len(pool) == 0:
        raise NoInitError("empty initialisation pool")
    cand = prob.sanitize(prob.scaler.scale(pool))
    dist = prob.distance(cand)
    order = np.argsort(dist, kind="stable")
    chunk = 32
    for start in range(0, len(order), chunk):
        idx = order[start:start + chunk]
        p1 = prob.oracle.scores(cand[idx])
        ok = np.flatnonzero(~prob.oracle.is_fraud(p1))
        if len(ok):
            k = idx[ok[0]]
            if dist[k] < prob.best_dist:
                prob.best_dist, prob.best_x, prob.best_p1 = float(dist[k]), cand[k].copy(), float(p1[ok[0]])
            return cand[k].copy()
    raise NoInitError("no pool sample is classified as non-fraud")
