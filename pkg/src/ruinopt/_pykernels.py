"""Pure numpy implementation of the per-scenario reduction kernels.

Scenarios are stored ragged: claims of scenario ``i`` live in
``times[offsets[i]:offsets[i+1]]`` (sorted) and the matching ``sizes`` slice.
Sums use Neumaier compensation, accumulated claim by claim in time order, so
the result matches the compiled kernels up to libm rounding.
"""

import numpy as np

NAME = "python"


def _padded(offsets, values):
    counts = np.diff(offsets)
    width = int(counts.max()) if counts.size else 0
    out = np.zeros((counts.size, width))
    mask = np.arange(width)[None, :] < counts[:, None]
    out[mask] = values
    return out, mask


def _neumaier_rows(table):
    total = np.zeros(table.shape[0])
    comp = np.zeros(table.shape[0])
    for j in range(table.shape[1]):
        x = table[:, j]
        t = total + x
        big = np.abs(total) >= np.abs(x)
        comp += np.where(big, (total - t) + x, (x - t) + total)
        total = t
    return total + comp


def _check_times(times, horizon):
    if times.size and not (np.all(times > 0.0) and np.all(times < horizon)):
        raise ValueError("jump time outside the open interval (0, T)")


def inflated_totals(offsets, times, sizes, r):
    """Per-scenario sum of exp(r*T_i)*X_i."""
    infl = np.exp(r * times) * sizes
    table, _ = _padded(offsets, infl)
    return _neumaier_rows(table)


def malliavin_sums(offsets, times, sizes, r, a, horizon):
    """Per-scenario sums needed by the gradient weights.

    Columns: sum e*X, sum w*e*X, sum w', sum w^2*e*X, sum w*w'*e*X
    with e = exp(r*T_i), w the weight function and w' its derivative.
    """
    _check_times(times, horizon)
    e_x = np.exp(r * times) * sizes
    w = times ** a * (horizon - times) ** a
    wp = a * w * (1.0 / times - 1.0 / (horizon - times))
    out = np.empty((offsets.size - 1, 5))
    for col, vals in enumerate((e_x, w * e_x, wp, w * w * e_x, w * wp * e_x)):
        table, _ = _padded(offsets, vals)
        out[:, col] = _neumaier_rows(table)
    return out


def path_ruin(offsets, times, sizes, r, u, drift, b):
    """1 where u + drift*T_k - sum_{i<=k} b*e^{rT_i}X_i < 0 for some claim k."""
    inc = b * (np.exp(r * times) * sizes)
    table, mask = _padded(offsets, inc)
    t_table, _ = _padded(offsets, times)
    level = u + drift * t_table - np.cumsum(table, axis=1)
    return np.any((level < 0.0) & mask, axis=1).astype(np.int8)


def inverse_w4_sums(offsets, times, a, horizon):
    """Per-scenario sum of w(T_i)**-4."""
    _check_times(times, horizon)
    w = times ** a * (horizon - times) ** a
    table, _ = _padded(offsets, 1.0 / (w * w * w * w))
    return _neumaier_rows(table)
