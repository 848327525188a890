"""Distances between an original vector and its adversarial counterpart.

The weighted norm scales each perturbation component by
``alpha*h + beta*((1-h)*(1-v) + h*v)`` where ``h`` flags human-checked
features and ``v`` is feature importance in [0, 1]. Checked and important
features become expensive to touch; unchecked but important ones are nearly
free. Zero weights make it a seminorm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NormWeights:
    h: np.ndarray
    v: np.ndarray
    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 2.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if h.shape != v.shape or h.ndim != 1:
            raise ValueError("h and v must be vectors of equal length")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("alpha and beta must lie in [0, 1]")
        if np.any((v < 0) | (v > 1)):
            raise ValueError("importance components must lie in [0, 1]")
        if self.gamma not in (2.0, np.inf):
            raise ValueError("gamma must be 2 or inf")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "v", v)


def parse_gamma(text) -> float:
    if str(text).strip().lower() in ("inf", "linf", "infinity"):
        return np.inf
    g = float(text)
    if g != 2.0:
        raise ValueError(f"unsupported norm order {text!r}; use 2 or inf")
    return g


def weight_vector(w: NormWeights) -> np.ndarray:
    h, v = w.h, w.v
    return w.alpha * h + w.beta * ((1.0 - h) * (1.0 - v) + h * v)


def l2(p) -> float | np.ndarray:
    return np.sqrt(np.sum(np.square(p), axis=-1))


def linf(p) -> float | np.ndarray:
    p = np.abs(np.asarray(p, dtype=np.float64))
    return np.max(p, axis=-1, initial=0.0)


def custom_norm(p, w: NormWeights) -> float | np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1] != w.h.shape[0]:
        raise ValueError(f"perturbation has length {p.shape[-1]}, weights have {w.h.shape[0]}")
    q = p * weight_vector(w)
    return linf(q) if np.isinf(w.gamma) else l2(q)
