"""Table, record-stream and summary output."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable

from .driver import IterationRecord

HEADER = "k,rel_dy,rel_df,norm_y,norm_f,sqrt2E,lambda"
FIELDS = ("rel_dy", "rel_df", "norm_y", "norm_f", "sqrt2E", "lambda_k")


def fmt(v: float) -> str:
    """Scientific notation with six mantissa decimals and a bare exponent, e.g. ``5.580000e-1``."""
    if not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    mant, exp = f"{v:.6e}".split("e")
    return f"{mant}e{int(exp)}"


def emit_table(records: Iterable[IterationRecord]) -> str:
    records = list(records)
    if not records:
        raise ValueError("no records to emit")
    lines = [HEADER]
    for r in records:
        lines.append(",".join([str(r.k)] + [fmt(getattr(r, f)) for f in FIELDS]))
    return "\n".join(lines) + "\n"


def records_to_jsonl(records: Iterable[IterationRecord]) -> str:
    """One JSON object per line with keys k, rel_dy, rel_df, norm_y, norm_f, sqrt2E, lambda."""
    return "".join(json.dumps(r.as_dict(), sort_keys=False) + "\n" for r in records)


def records_from_jsonl(text: str) -> list[IterationRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            out.append(IterationRecord(int(d["k"]), float(d["rel_dy"]), float(d["rel_df"]),
                                       float(d["norm_y"]), float(d["norm_f"]),
                                       float(d["sqrt2E"]), float(d["lambda"])))
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"line {lineno}: malformed record ({exc})") from None
    return out


def write_outputs(out_dir: str | Path, records: list[IterationRecord], summary: dict) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.csv").write_text(emit_table(records))
    (out / "records.jsonl").write_text(records_to_jsonl(records))
    (out / "report.txt").write_text(format_summary(summary))
    return out


def format_summary(summary: dict) -> str:
    width = max(len(k) for k in summary) if summary else 0
    lines = []
    for k, v in summary.items():
        if isinstance(v, float):
            v = f"{v:.6g}"
        elif isinstance(v, (list, tuple)):
            v = "; ".join(str(x) for x in v) if v else "-"
        lines.append(f"{k:<{width}}  {v}")
    return "\n".join(lines) + "\n"
