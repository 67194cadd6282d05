"""Adaptive-moment gradient optimizer (bias-corrected first/second moments)."""

from __future__ import annotations

import numpy as np

from .params import GradientSet, ParameterSet

DEFAULT_LEARNING_RATE = 3e-4
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8


def optimizer_step(
    params: ParameterSet,
    grads: GradientSet,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    beta1: float = DEFAULT_BETA1,
    beta2: float = DEFAULT_BETA2,
    epsilon: float = DEFAULT_EPSILON,
) -> ParameterSet:
    """Update params in place; a non-finite gradient skips the update and
    increments the skip counter."""
    g = grads.values
    if g.shape != params.values.shape:
        raise ValueError("gradient shape does not match parameters")
    if not np.all(np.isfinite(g)):
        params.skipped_updates += 1
        return params
    params.step_count += 1
    t = params.step_count
    params.m = beta1 * params.m + (1.0 - beta1) * g
    params.v = beta2 * params.v + (1.0 - beta2) * g * g
    m_hat = params.m / (1.0 - beta1**t)
    v_hat = params.v / (1.0 - beta2**t)
    params.values -= learning_rate * m_hat / (np.sqrt(v_hat) + epsilon)
    return params
