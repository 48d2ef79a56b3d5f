"""Plain-text summaries printed by the commands."""

import math
from typing import Any, Iterable

import numpy as np

RULE = "=" * 60


def fmt_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, complex):
        if value.imag == 0:
            return f"{value.real:.6g}"
        return f"{value.real:.6g}{value.imag:+.6g}j"
    if isinstance(value, (float, np.floating)):
        if math.isinf(value):
            return "inf"
        return f"{value:.6g}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(fmt_value(v) for v in value) + "]"
    return str(value)


def print_header(title: str) -> None:
    print(f"\n{title}")
    print(RULE)


def print_pairs(pairs: Iterable[tuple[str, Any]]) -> None:
    """Aligned `key : value` lines."""
    pairs = list(pairs)
    if not pairs:
        return
    width = max(len(k) for k, _ in pairs)
    for key, value in pairs:
        print(f"{key:<{width}} : {fmt_value(value)}")


def print_status(ok: bool, message: str) -> None:
    print(f"{'✅' if ok else '❌'} {message}")


def print_warning(message: str) -> None:
    print(f"⚠️  {message}")


def print_table(headers: list[str], rows: Iterable[Iterable[Any]]) -> None:
    rows = [[fmt_value(v) for v in row] for row in rows]
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(headers)]
    print("  ".join(h.rjust(w) for h, w in zip(headers, widths)))
    for row in rows:
        print("  ".join(v.rjust(w) for v, w in zip(row, widths)))
