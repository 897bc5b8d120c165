"""Result persistence: CSV curves, plot-data series and run metadata."""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from .montecarlo import SerCurve

CSV_COLUMNS = ("snr_db", "ser", "ci_low", "ci_high", "symbols", "errors", "label")


def _fmt(x: float) -> str:
    # shortest repr that round-trips exactly
    return repr(float(x))


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", label).strip("_") or "curve"


def write_csv(curves, path) -> Path:
    curves = list(curves)
    if not curves:
        raise ValueError("no curves to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in curves:
            lo, hi = c.interval
            ser = c.ser
            for i in range(c.snr_db.size):
                w.writerow([_fmt(c.snr_db[i]), _fmt(ser[i]), _fmt(lo[i]), _fmt(hi[i]),
                            int(c.symbols[i]), int(c.errors[i]), c.label])
    return path


def read_csv(path) -> list:
    """Parse a curves CSV back into SerCurve objects, in file order."""
    rows = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if tuple(header or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected header {header}")
        for row in r:
            snr, ser, _, _, sym, err, label = row
            rows.setdefault(label, []).append((float(snr), float(ser), int(sym), int(err)))
    curves = []
    for label, pts in rows.items():
        snr, ser, sym, err = (np.array(v) for v in zip(*pts))
        if np.all(sym == 0):
            curves.append(SerCurve.computed(label, snr, ser))
        else:
            curves.append(SerCurve(label, snr, err, sym))
    return curves


def write_plotdata(curves, directory, config_hash: str) -> list:
    """One whitespace-separated series per file: ``snr ser ci_low ci_high``."""
    curves = list(curves)
    if not curves:
        raise ValueError("no curves to write")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for c in curves:
        path = directory / f"{_slug(c.label)}.dat"
        lo, hi = c.interval
        ser = c.ser
        lines = [f"# config_hash {config_hash}", f"# label {c.label}", "# snr_db ser ci_low ci_high"]
        lines += [" ".join(_fmt(v) for v in (c.snr_db[i], ser[i], lo[i], hi[i]))
                  for i in range(c.snr_db.size)]
        path.write_text("\n".join(lines) + "\n")
        out.append(path)
    return out


def write_meta(path, meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{k}: {meta[k]}\n" for k in sorted(meta)))
    return path


def emit_results(curves, directory, config_hash: str, meta: dict | None = None,
                 formats=("csv", "text", "plot")) -> dict:
    """Write ``curves.csv``, ``meta.txt`` and ``plotdata/*.dat`` under ``directory``."""
    curves = list(curves)
    if not curves:
        raise ValueError("no curves to write")
    directory = Path(directory)
    written = {}
    if "csv" in formats:
        written["csv"] = write_csv(curves, directory / "curves.csv")
    if "text" in formats:
        m = {"config_hash": config_hash, "curves": ",".join(c.label for c in curves)}
        m.update(meta or {})
        written["text"] = write_meta(directory / "meta.txt", m)
    if "plot" in formats:
        written["plot"] = write_plotdata(curves, directory / "plotdata", config_hash)
    return written
