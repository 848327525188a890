"""Threshold-aware black-box adversarial attacks for imbalanced tabular classifiers."""

__version__ = "0.1.0"
