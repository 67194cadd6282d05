"""Central finite-difference verification of the analytic gradients.

The probe loss is c . log_softmax(logits) + c_v * value for fixed random c,
so the check exercises the softmax jacobian as well as every trunk layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import NetworkConfig, backward_batch, forward_batch, init_params
from .params import ParameterSet

FD_STEP = 1e-4


def _layer_type(name: str) -> str:
    if name.startswith("conv"):
        return "conv"
    if name.startswith("rec"):
        return "recurrent"
    if name.startswith("dense"):
        return "dense"
    if name.startswith("policy"):
        return "softmax"
    return "value"


@dataclass(frozen=True)
class GradCheckReport:
    per_layer: dict[str, float]

    @property
    def max_rel_error(self) -> float:
        return max(self.per_layer.values())

    def __str__(self) -> str:
        lines = [
            f"{layer:>10s}: max relative error {err:.3e}"
            for layer, err in sorted(self.per_layer.items())
        ]
        return "\n".join(lines)


def _probe_loss(params: ParameterSet, config: NetworkConfig, obs, c, cv) -> float:
    probs, values, cache = forward_batch(params, config, obs)
    log_probs = np.log(probs[0])
    return float(c @ log_probs + cv * values[0])


def grad_check(
    config: NetworkConfig,
    seed: int = 0,
    coords_per_layer: int = 100,
    step: float = FD_STEP,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences on up
    to ``coords_per_layer`` random coordinates per layer type."""
    rng = np.random.default_rng(seed)
    params = init_params(config, seed=seed + 1)
    obs = rng.uniform(0.0, 1.0, size=(config.window, config.features))
    c = rng.normal(size=config.actions)
    cv = float(rng.normal())

    probs, values, cache = forward_batch(params, config, obs)
    # d/dlogits of c . log_softmax(logits) = c - sum(c) * probs
    d_logits = c - c.sum() * probs[0]
    grads = backward_batch(params, config, cache, d_logits[None, :], np.array([cv]))

    coords_by_type: dict[str, list[int]] = {}
    for name, _ in params.layout:
        kind = _layer_type(name)
        offset, shape = params._offsets[name]
        size = int(np.prod(shape)) if shape else 1
        coords_by_type.setdefault(kind, []).extend(range(offset, offset + size))

    per_layer: dict[str, float] = {}
    for kind, coords in coords_by_type.items():
        if len(coords) > coords_per_layer:
            chosen = rng.choice(len(coords), size=coords_per_layer, replace=False)
            coords = [coords[i] for i in chosen]
        worst = 0.0
        for idx in coords:
            original = params.values[idx]
            params.values[idx] = original + step
            plus = _probe_loss(params, config, obs, c, cv)
            params.values[idx] = original - step
            minus = _probe_loss(params, config, obs, c, cv)
            params.values[idx] = original
            numeric = (plus - minus) / (2.0 * step)
            analytic = grads.values[idx]
            denom = max(abs(numeric) + abs(analytic), 1e-10)
            worst = max(worst, abs(numeric - analytic) / denom)
        per_layer[kind] = worst
    return GradCheckReport(per_layer=per_layer)
