"""Small formatting helpers shared by the CLI and the report writers.

Floating-point output is pinned to 17 significant digits everywhere, which
round-trips IEEE doubles exactly and makes output files byte-identical
across runs and platforms for a fixed seed.
"""

from __future__ import annotations

import json


def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def csv_text(header: str, rows: list[str]) -> str:
    return "\n".join([header, *rows]) + "\n"


def json_text(obj, indent: int = 0) -> str:
    """JSON with floats rendered at 17 significant digits.

    Hand-rolled because the stdlib C encoder pins its own float repr.  Only
    the types our reports contain are supported.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt17(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f"{inner}{json.dumps(str(k))}: {json_text(v, indent + 1)}" for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = ",\n".join(f"{inner}{json_text(v, indent + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    raise TypeError(f"not JSON-serializable: {obj!r}")


def json_document(obj) -> str:
    return json_text(obj) + "\n"
