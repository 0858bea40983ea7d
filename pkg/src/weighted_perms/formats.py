"""CSV/JSON emitters.  Floats are written with 17 significant digits."""
from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import gmpy2
import numpy as np


def fmt(x) -> str:
    """Round-trippable text for exact and floating scalars."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, type(gmpy2.mpq())):
        return str(Fraction(int(x.numerator), int(x.denominator)))
    if isinstance(x, type(gmpy2.mpfr())):
        return gmpy2.mpfr(x).__format__(".17g")
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, tuple):
        return " ".join(fmt(v) for v in x)
    return str(x)


def to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if x is None or isinstance(x, str):
        return x
    return fmt(x)


def dump_json(obj, path: str | Path | None = None) -> str:
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def write_csv(rows: Iterable[Sequence], header: Sequence[str], path: str | Path | None = None,
              stream=None) -> None:
    """Write rows to ``path`` (or an open text ``stream``)."""
    if path is not None:
        with open(path, "w", newline="") as fh:
            write_csv(rows, header, stream=fh)
        return
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
