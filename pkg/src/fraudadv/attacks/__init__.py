"""Threshold-aware black-box attacks on a thresholded tabular classifier."""

from __future__ import annotations

import numpy as np

from .base import (KINDS, AttackConfig, AttackError, AttackResult, BudgetExhausted, NoInitError,
                   NotFraudError, Oracle, Problem, Scaler, decision_oracle, init_adversarial)
from .boundary import boundary_attack
from .hopskipjump import hopskipjump_attack
from .zoo import zoo_attack, zoo_loss, zoo_loss_original
from ..model import ThresholdedClassifier
from ..schema import Schema

__all__ = [
    "KINDS", "AttackConfig", "AttackError", "AttackResult", "BudgetExhausted", "NoInitError",
    "NotFraudError", "Oracle", "Problem", "Scaler", "boundary_attack", "decision_oracle",
    "generic_attack", "hopskipjump_attack", "init_adversarial", "zoo_attack", "zoo_loss",
    "zoo_loss_original",
]


def generic_attack(clf: ThresholdedClassifier, t_f: np.ndarray, cfg: AttackConfig,
                   pool: np.ndarray, schema: Schema, scaler: Scaler | None = None) -> AttackResult:
    """Run the attack named by ``cfg.kind``; the scaler defaults to the pool's range."""
    if scaler is None:
        scaler = Scaler.fit(pool) if len(pool) else Scaler.identity(schema.m)
    if cfg.kind == "zoo":
        return zoo_attack(clf, t_f, cfg, schema, scaler)
    if cfg.kind == "boundary":
        return boundary_attack(clf, t_f, pool, cfg, schema, scaler)
    if cfg.kind == "hopskipjump":
        return hopskipjump_attack(clf, t_f, pool, cfg, schema, scaler)
    raise ValueError(f"unknown attack kind {cfg.kind!r}")
