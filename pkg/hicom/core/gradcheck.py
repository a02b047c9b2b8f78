"""Directional finite-difference check of autograd gradients."""

from typing import Callable, List, Sequence

import torch


def directional_grad_check(
    loss_fn: Callable[[], torch.Tensor],
    parameters: Sequence[torch.nn.Parameter],
    n_directions: int = 100,
    eps: float = 1e-4,
    seed: int = 0,
) -> List[float]:
    """Relative errors between autograd and central differences along random directions.

    `loss_fn` must be a deterministic closure over `parameters`; run it in
    float64 for meaningful results.
    """
    params = [p for p in parameters if p.requires_grad]
    for p in params:
        p.grad = None
    loss = loss_fn()
    grads = torch.autograd.grad(loss, params)

    generator = torch.Generator().manual_seed(seed)
    errors = []
    with torch.no_grad():
        originals = [p.detach().clone() for p in params]
        for _ in range(n_directions):
            directions = [torch.randn(p.shape, generator=generator, dtype=p.dtype) for p in params]
            analytic = sum(float((g * d).sum()) for g, d in zip(grads, directions))

            for p, p0, d in zip(params, originals, directions):
                p.copy_(p0 + eps * d)
            plus = float(loss_fn())
            for p, p0, d in zip(params, originals, directions):
                p.copy_(p0 - eps * d)
            minus = float(loss_fn())
            for p, p0 in zip(params, originals):
                p.copy_(p0)

            numeric = (plus - minus) / (2.0 * eps)
            scale = max(abs(analytic), abs(numeric), 1e-8)
            errors.append(abs(analytic - numeric) / scale)
    return errors
