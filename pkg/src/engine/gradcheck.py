"""Central finite-difference gradient checker."""

from typing import Callable, Mapping

import numpy as np

from src.core.errors import NumericError
from src.engine.tensor import Tensor, no_grad


def grad_check(
    forward: Callable[[Mapping[str, Tensor]], Tensor],
    point: Mapping[str, np.ndarray],
    eps: float = 1e-6,
    seed: int = 0,
) -> float:
    """Compare analytic gradients against central finite differences.

    ``forward`` receives a mapping of name -> ``Tensor`` and returns a tensor. Outputs
    with more than one element are reduced to a scalar by a fixed random projection so
    every output element contributes.

    Args:
        forward: Differentiable map under test
        point: Evaluation point, one float64 array per named input or parameter
        eps: Finite-difference step, in (0, 1e-2]
        seed: Seed of the output projection

    Returns:
        Max over inputs of ``|analytic - numeric|_inf / max(|analytic|_inf, |numeric|_inf)``

    Raises:
        ValueError: If ``eps`` is outside (0, 1e-2]
        NumericError: If the forward pass produces non-finite values
    """
    if not 0.0 < eps <= 1e-2:
        raise ValueError(f"eps must be in (0, 1e-2], got {eps}")

    base = {name: np.array(value, dtype=np.float64) for name, value in point.items()}
    projection: dict[str, np.ndarray] = {}

    def scalar(values: Mapping[str, np.ndarray], track: bool):
        tensors = {name: Tensor(v, requires_grad=track, name=name) for name, v in values.items()}
        out = forward(tensors)
        if not np.all(np.isfinite(out.data)):
            raise NumericError("grad_check aborted: forward pass produced non-finite values")
        if "w" not in projection:
            rng = np.random.default_rng(seed)
            projection["w"] = (
                np.ones_like(out.data) if out.size == 1 else rng.standard_normal(out.shape)
            )
        total = (out * projection["w"]).data.sum() if not track else None
        return tensors, out, total

    tensors, out, _ = scalar(base, track=True)
    out.backward(projection["w"].astype(out.dtype))
    analytic = {
        name: (t.grad if t.grad is not None else np.zeros_like(t.data))
        for name, t in tensors.items()
    }

    worst = 0.0
    with no_grad():
        for name, value in base.items():
            numeric = np.zeros_like(value)
            flat = value.reshape(-1)
            grad_flat = numeric.reshape(-1)
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + eps
                _, _, plus = scalar(base, track=False)
                flat[i] = original - eps
                _, _, minus = scalar(base, track=False)
                flat[i] = original
                grad_flat[i] = (plus - minus) / (2.0 * eps)
            diff = np.max(np.abs(analytic[name] - numeric), initial=0.0)
            scale = max(
                np.max(np.abs(analytic[name]), initial=0.0),
                np.max(np.abs(numeric), initial=0.0),
                1e-12,
            )
            worst = max(worst, float(diff / scale))
    return worst
