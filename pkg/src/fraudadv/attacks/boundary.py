"""Decision-based Boundary attack: a rejection-sampled random walk along the
decision boundary that slowly contracts toward the target."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .base import (AttackConfig, AttackResult, BudgetExhausted, Problem, Scaler,
                   init_adversarial)
from ..model import ThresholdedClassifier
from ..schema import Schema


def boundary_attack(clf: ThresholdedClassifier, t_f: np.ndarray, pool: np.ndarray,
                    cfg: AttackConfig, schema: Schema, scaler: Scaler | None = None) -> AttackResult:
    """Random walk on the non-fraud side, contracting toward ``t_f``.

    Each iteration draws ``boundary_candidates`` orthogonal perturbations of
    relative size ``delta`` on the sphere of the current (weighted) distance,
    then shrinks them toward the target by ``eps``. The spherical step adapts
    to the share of spherical candidates that stay non-fraud, the source step
    to the share of full candidates that do, over windows of
    ``adapt_window`` iterations.
    """
    prob = Problem(clf, t_f, cfg, schema, scaler)
    prob.check_target()
    x0 = init_adversarial(clf, t_f, pool, cfg, schema, problem=prob)
    z = prob.scaler.scale(x0)
    if prob.similar_enough():
        return prob.result()
    if cfg.max_iters == 0:
        # no iteration ran: hand back the starting point, unclaimed
        return replace(prob.result(), success=False)

    delta, eps = cfg.spherical_step, cfg.source_step
    k = cfg.boundary_candidates
    sph_ok = step_ok = trials = 0
    try:
        for it in range(cfg.max_iters):
            prob.iterations = it + 1
            u = prob.to_u(z)
            radius = float(np.linalg.norm(u))
            if radius == 0.0:
                break
            eta = prob.random_directions(k)
            eta -= np.outer(eta @ u / (u @ u), u)
            n_eta = np.linalg.norm(eta, axis=1, keepdims=True)
            n_eta[n_eta == 0] = 1.0
            u1 = u + eta * (delta * radius / n_eta)
            u1 *= radius / np.linalg.norm(u1, axis=1, keepdims=True)
            u2 = (1.0 - eps) * u1
            Z1, Z2 = prob.from_u(u1), prob.from_u(u2)
            X = prob.sanitize(np.vstack([Z1, Z2]))
            _, fraud = prob.evaluate(X)
            sph, step = ~fraud[:k], ~fraud[k:]
            sph_ok += int(sph.sum())
            step_ok += int(step.sum())
            trials += k
            if step.any():
                z = Z2[np.flatnonzero(step)[0]]
            if (it + 1) % cfg.adapt_window == 0:
                delta *= cfg.step_adapt if sph_ok / trials > 0.5 else cfg.step_shrink
                eps *= cfg.step_adapt if step_ok / trials > 0.5 else cfg.step_shrink
                sph_ok = step_ok = trials = 0
                if eps < cfg.min_source_step:
                    break
            if prob.similar_enough():
                break
    except BudgetExhausted:
        pass
    return prob.result()
