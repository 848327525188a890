"""HopSkipJump: boundary search, Monte-Carlo estimate of the boundary normal,
geometric step along it, repeat."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .base import (AttackConfig, AttackResult, BudgetExhausted, Problem, Scaler,
                   bisect_to_boundary, init_adversarial)
from ..model import ThresholdedClassifier
from ..schema import Schema


def _estimate_direction(prob: Problem, u: np.ndarray, n_evals: int, delta: float) -> np.ndarray | None:
    rv = prob.random_directions(n_evals)
    norms = np.linalg.norm(rv, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    rv /= norms
    _, fraud = prob.evaluate(prob.sanitize(prob.from_u(u + delta * rv)))
    fval = np.where(fraud, -1.0, 1.0)
    mean = fval.mean()
    if mean == 1.0:
        grad = rv.mean(axis=0)
    elif mean == -1.0:
        grad = -rv.mean(axis=0)
    else:
        grad = ((fval - mean)[:, None] * rv).mean(axis=0)
    n = np.linalg.norm(grad)
    return grad / n if n > 0 else None


def hopskipjump_attack(clf: ThresholdedClassifier, t_f: np.ndarray, pool: np.ndarray,
                       cfg: AttackConfig, schema: Schema, scaler: Scaler | None = None) -> AttackResult:
    prob = Problem(clf, t_f, cfg, schema, scaler)
    prob.check_target()
    x0 = init_adversarial(clf, t_f, pool, cfg, schema, problem=prob)
    z = prob.scaler.scale(x0)
    if prob.similar_enough():
        return prob.result()
    if cfg.max_iters == 0:
        # no iteration ran: hand back the starting point, unclaimed
        return replace(prob.result(), success=False)

    d = max(int(prob.movable.sum()), 1)
    theta = cfg.hsj_theta
    try:
        z, _ = bisect_to_boundary(prob, z, theta)
        for it in range(1, cfg.max_iters + 1):
            prob.iterations = it
            u = prob.to_u(z)
            dist = float(np.linalg.norm(u))
            if dist == 0.0:
                break
            delta = 0.1 if it == 1 else math.sqrt(d) * theta * dist
            n_evals = int(min(cfg.hsj_init_evals * math.sqrt(it), cfg.hsj_max_evals))
            grad = _estimate_direction(prob, u, n_evals, delta)
            if grad is None:
                continue
            eps = dist / math.sqrt(it)
            stepped = None
            for _ in range(30):
                cand = prob.from_u(u + eps * grad)
                _, fraud = prob.evaluate(prob.sanitize(cand))
                if not fraud[0]:
                    stepped = cand
                    break
                eps /= 2.0
            if stepped is None:
                continue
            z, _ = bisect_to_boundary(prob, stepped, theta)
            if prob.similar_enough():
                break
    except BudgetExhausted:
        pass
    return prob.result()
