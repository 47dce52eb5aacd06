# utils.py
import math
import os
import re
from typing import List, Optional, Union

SIG_DIGITS = 12
NA = "NA"

_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def parse_int_strict(raw: str) -> Optional[int]:
    """
    Strict integer parsing:
    Accepts optional sign and digits, with '_' or ',' as thousands separators.
    Rejects anything else (no '1e3', no '4.0').
    """
    if raw is None:
        return None
    s = raw.strip().replace(",", "").replace("_", "")
    if not s or not _INT_RE.match(s):
        return None
    if len(s) > 20:
        return None
    return int(s)


def parse_float_strict(raw: str) -> Optional[float]:
    """
    Strict real parsing: plain decimal or scientific notation only.
    'inf', 'nan' and friends are rejected.
    """
    if raw is None:
        return None
    s = raw.strip().replace("_", "")
    if not s or not _FLOAT_RE.match(s):
        return None
    value = float(s)
    if not math.isfinite(value):
        return None
    return value


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    """Round to `digits` significant digits; the result prints back identically."""
    if x is None or not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


def format_cell(value) -> str:
    if value is None:
        return NA
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return NA
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def parse_cell(raw: str):
    """Inverse of format_cell: NA -> None, numbers -> int/float, else the string."""
    s = (raw or "").strip()
    if not s or s == NA:
        return None
    if s in ("inf", "-inf"):
        return float(s)
    as_int = parse_int_strict(s)
    if as_int is not None:
        return as_int
    as_float = parse_float_strict(s)
    if as_float is not None:
        return as_float
    return s


def worker_count() -> int:
    """Threads allowed for inner parallel loops; AOI_MIMO_THREADS caps it."""
    default = os.cpu_count() or 1
    raw = os.environ.get("AOI_MIMO_THREADS")
    capped = parse_int_strict(raw) if raw else None
    if capped is None or capped < 1:
        return default
    return min(capped, default)


def parse_number_list(raw: str, integer: bool = False, allow_inf: bool = False) -> List[Union[int, float]]:
    """
    Comma-separated numbers, or 'start:stop:num' for num evenly spaced reals.

    With allow_inf the entry 'inf' becomes math.inf. Raises ValueError naming the
    offending entry.
    """
    s = (raw or "").strip()
    if not s:
        raise ValueError("empty list")

    if ":" in s:
        parts = s.split(":")
        if integer or len(parts) != 3:
            raise ValueError(f"expected start:stop:num, got '{raw}'")
        start, stop = parse_float_strict(parts[0]), parse_float_strict(parts[1])
        num = parse_int_strict(parts[2])
        if start is None or stop is None or num is None or num < 1:
            raise ValueError(f"expected start:stop:num, got '{raw}'")
        if num == 1:
            return [start]
        step = (stop - start) / (num - 1)
        return [round_sig(start + i * step) for i in range(num)]

    values: List[Union[int, float]] = []
    for item in s.split(","):
        item = item.strip()
        if allow_inf and item.lower() == "inf":
            values.append(math.inf)
            continue
        value = parse_int_strict(item) if integer else parse_float_strict(item)
        if value is None:
            raise ValueError(f"cannot parse '{item}'")
        values.append(value)
    return values
