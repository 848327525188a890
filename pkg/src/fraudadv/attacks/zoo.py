"""Zeroth-order optimisation attack (coordinate-wise Adam on a query-only
objective).

The objective is ``dist(x, t_f)**2 + r * loss(p1(x))``. With the threshold
toggle on, ``loss`` is ``max(p1 - tau, -nu)``, which only reaches its floor on
points the thresholded model accepts. The classic log-odds loss (threshold
off) is minimal for every point with ``p1 <= 0.5``, whatever ``tau`` is.
"""

from __future__ import annotations

import math

import numpy as np

from .base import (AttackConfig, AttackResult, BudgetExhausted, Problem, Scaler,
                   bisect_to_boundary)
from ..model import ThresholdedClassifier
from ..schema import Schema

_EPS = np.finfo(np.float64).eps


def zoo_loss(p1, tau: float, nu: float = 0.0):
    return np.maximum(np.asarray(p1, dtype=np.float64) - tau, -nu)


def zoo_loss_original(p1, nu: float = 0.0):
    p1 = np.clip(np.asarray(p1, dtype=np.float64), _EPS, 1.0 - _EPS)
    return np.maximum(np.log(p1) - np.log1p(-p1), -nu)


def _delta_ladder(cfg: AttackConfig) -> np.ndarray:
    deltas = [cfg.zoo_delta]
    while deltas[-1] * cfg.zoo_delta_growth <= cfg.zoo_delta_max:
        deltas.append(deltas[-1] * cfg.zoo_delta_growth)
    return np.asarray(deltas)


def zoo_attack(clf: ThresholdedClassifier, t_f: np.ndarray, cfg: AttackConfig, schema: Schema,
               scaler: Scaler | None = None) -> AttackResult:
    """Stochastic coordinate descent from the target itself.

    Partial derivatives are symmetric differences of the objective at
    sanitized probes ``z +- delta * e_i``. Tree ensembles are piecewise
    constant, so for the loss term the step grows geometrically (up to
    ``zoo_delta_max`` in scaled units) until the score changes; the distance
    term always uses the base step.
    """
    prob = Problem(clf, t_f, cfg, schema, scaler)
    prob.check_target()

    def loss(p1):
        return zoo_loss(p1, cfg.tau, cfg.nu) if cfg.use_threshold else zoo_loss_original(p1, cfg.nu)

    def objective(X, p1):
        return prob.distance(X) ** 2 + cfg.r * loss(p1)

    coords = np.flatnonzero(prob.movable)
    deltas = _delta_ladder(cfg)
    n_d = len(deltas)
    m = schema.m
    z = prob.z_f.copy()
    adam_m = np.zeros(m)
    adam_v = np.zeros(m)
    adam_t = np.zeros(m)
    x_cur = prob.t_f.copy()
    p1_cur = math.nan
    history: list[float] = []
    best_obj = math.inf

    try:
        for it in range(cfg.max_iters):
            if len(coords) == 0:
                break
            prob.iterations = it + 1
            batch = prob.rng.choice(coords, size=min(cfg.zoo_batch, len(coords)), replace=False)
            k = len(batch)
            # probes laid out as [coord, delta, sign]
            steps = np.repeat(deltas[None, :], k, axis=0)
            Z = np.repeat(z[None, :], 2 * k * n_d, axis=0).reshape(k, n_d, 2, m)
            Z[np.arange(k), :, 0, batch] += steps
            Z[np.arange(k), :, 1, batch] -= steps
            X = prob.sanitize(Z.reshape(-1, m))
            p1, _ = prob.evaluate(X)
            dist2 = (prob.distance(X) ** 2).reshape(k, n_d, 2)
            score = (cfg.r * loss(p1)).reshape(k, n_d, 2)
            # distance is smooth: difference it at the base step; the loss
            # term is piecewise constant, so use the first step that moves it
            grad = (dist2[:, 0, 0] - dist2[:, 0, 1]) / (2.0 * deltas[0])
            diff = score[:, :, 0] - score[:, :, 1]
            moved = diff != 0.0
            hit = moved.any(axis=1)
            first = np.argmax(moved, axis=1)
            grad[hit] += diff[hit, first[hit]] / (2.0 * deltas[first[hit]])

            adam_t[batch] += 1
            adam_m[batch] = cfg.zoo_beta1 * adam_m[batch] + (1 - cfg.zoo_beta1) * grad
            adam_v[batch] = cfg.zoo_beta2 * adam_v[batch] + (1 - cfg.zoo_beta2) * grad * grad
            m_hat = adam_m[batch] / (1 - cfg.zoo_beta1 ** adam_t[batch])
            v_hat = adam_v[batch] / (1 - cfg.zoo_beta2 ** adam_t[batch])
            z[batch] -= cfg.zoo_lr * m_hat / (np.sqrt(v_hat) + 1e-8)

            x_cur = prob.sanitize(z)
            p1_arr, _ = prob.evaluate(x_cur)
            x_cur, p1_cur = x_cur[0], float(p1_arr[0])
            if prob.best_x is not None:
                best_obj = min(best_obj, float(objective(prob.best_x[None, :], [prob.best_p1])[0]))
                history.append(best_obj)
                if prob.similar_enough():
                    break
                if len(history) > cfg.zoo_patience and history[-cfg.zoo_patience - 1] - best_obj < cfg.zoo_tol:
                    break
        if prob.best_x is not None:
            # pull the best point back toward the target along the segment
            bisect_to_boundary(prob, prob.scaler.scale(prob.best_x), cfg.hsj_theta)
    except BudgetExhausted:
        pass
    return prob.result(fallback=x_cur, fallback_p1=p1_cur)
