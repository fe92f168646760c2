"""Central finite-difference oracle for parameter gradients."""

import numpy as np

from emrestore.models import AutoencoderParams, run_layers
from emrestore.training import backward


def rel_error(analytic, numeric, floor=1e-7):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def relu_pattern(model, inputs):
    """Which ReLUs are active; central differences are only valid if this is unchanged."""
    if not isinstance(model, AutoencoderParams):
        return None
    tape = []
    run_layers(model.layers, np.asarray(inputs, dtype=model.dtype)[..., None], "train", tape=tape,
               update_stats=False)
    return np.concatenate([r["relu"].ravel() for r in tape if "relu" in r])


def fd_check(model, inputs, targets, h=1e-4, sample=None, rng=None, **kw):
    """Worst relative error over all (or ``sample`` random) parameter entries.

    Entries whose +-h perturbation flips any ReLU are skipped (the loss is
    not differentiable across the kink) and replaced by further samples.
    Returns ``(worst, checked, skipped)``.
    """
    lg = backward(model, inputs, targets, **kw)
    params = model.parameters()
    entries = [(name, idx) for name, p in params.items() for idx in np.ndindex(p.shape)]
    if sample is not None:
        entries = [entries[i] for i in rng.permutation(len(entries))]
    worst, checked, skipped = 0.0, 0, 0
    for name, idx in entries:
        if sample is not None and checked == sample:
            break
        p = params[name]
        old = p[idx]
        p[idx] = old + h
        up = backward(model, inputs, targets, **kw).loss
        up_pattern = relu_pattern(model, inputs)
        p[idx] = old - h
        down = backward(model, inputs, targets, **kw).loss
        down_pattern = relu_pattern(model, inputs)
        p[idx] = old
        if up_pattern is not None and not np.array_equal(up_pattern, down_pattern):
            skipped += 1
            continue
        numeric = (up - down) / (2 * h)
        worst = max(worst, rel_error(lg.grads[name][idx], numeric))
        checked += 1
    return worst, checked, skipped
