"""Formatting utilities for reports, logs and CSV cells."""

import math
from typing import Mapping, Optional


def fmt_float(x) -> str:
    """Full round-trip decimal form of a float (CSV/JSON cells)."""
    if x is None:
        return ""
    return repr(float(x))


def fmt_percent(fraction, digits: int = 1) -> str:
    """Format a fraction (0.008) as a percentage ("0.8%")."""
    if fraction is None:
        return "N/A"
    try:
        f = float(fraction)
    except (TypeError, ValueError):
        return "N/A"
    if not math.isfinite(f):
        return "N/A"
    return f"{100.0 * f:.{digits}f}%"


def fmt_time(seconds):
    """Format seconds as human readable time."""
    if seconds is None:
        return "N/A"

    s = int(seconds)
    m, s = divmod(s, 60)
    h, m = divmod(m, 60)
    d, h = divmod(h, 24)

    if d > 0:
        return f"{d}d {h}h"
    elif h > 0:
        return f"{h}h {m}m"
    elif m > 0:
        return f"{m}m {s}s"
    else:
        return f"{seconds:.1f}s"


def fmt_param_table(
    estimated: Mapping[str, float],
    truth: Optional[Mapping[str, float]] = None,
    rel_errors: Optional[Mapping[str, float]] = None,
    *,
    body_cols: int = 24,
) -> str:
    """
    Multi-line parameter report: one "name   value (err%)" row per parameter.

    Args:
        estimated: Estimated values by name
        truth: Optional ground truth, printed next to the estimate
        rel_errors: Optional relative errors (fractions)
        body_cols: Width of the name/value column

    Returns:
        The table as a single string
    """
    rows = []
    for name, value in estimated.items():
        cell = f"{value:.4g}"
        if truth is not None and name in truth:
            cell += f" / {truth[name]:.4g}"
        # value right-aligned to body_cols; at least one space after the name
        row = f"{name} {cell:>{max(body_cols - len(name) - 1, 1)}}"
        if rel_errors is not None and name in rel_errors:
            row += f"  ({fmt_percent(rel_errors[name])})"
        rows.append(row)
    return "\n".join(rows)
