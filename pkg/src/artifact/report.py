"""JSON/CSV writers with 17 significant digits, and the figures placed next to them."""

from __future__ import annotations

import csv
import io
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def fmt(x):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return '"%s"' % x
    return "%.17g" % x


def dumps(obj, indent=0):
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {dumps(obj[k], indent + 1)}' for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(x, (int, float, np.floating, np.integer)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(dumps(x) for x in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(x, indent + 1) for x in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return "[" + fmt(obj.real) + ", " + fmt(obj.imag) + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent)
    s = str(obj).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n")
    return path


TABLE_HEADER = ["m", "component", "re", "im", "error"]


def table_text(rows, header=TABLE_HEADER):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else str(x) for x in r])
    return buf.getvalue()


def write_csv(path, rows, header=TABLE_HEADER):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table_text(rows, header))
    return path


def _figure_path(path):
    return Path(path).with_suffix(".png")


def plot_checks(checks, path):
    """Bar chart of log10(residual / tolerance) per check."""
    out = _figure_path(path)
    names = [c["test"] for c in checks]
    ratio = []
    for c in checks:
        tol = c["tolerance"] or 1.0
        ratio.append(math.log10(max(float(c["residual"]), 1e-300) / tol))
    fig, ax = plt.subplots(figsize=(8, 0.28 * len(names) + 1.2))
    colors = ["tab:green" if c["pass"] else "tab:red" for c in checks]
    ax.barh(range(len(names)), np.maximum(ratio, -20), color=colors)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=6)
    ax.invert_yaxis()
    ax.set_xlabel("log10(residual / tolerance)")
    fig.tight_layout()
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return out


def plot_table(rows, path, title=""):
    """|coefficient| against m, one series per component (and per v when present)."""
    out = _figure_path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    series = {}
    for r in rows:
        key = tuple(r[1:-3]) if len(r) > 5 else (r[1],)
        series.setdefault(key, []).append((float(Fraction(str(r[0]))), math.hypot(float(r[-3]), float(r[-2]))))
    for key, pts in sorted(series.items()):
        pts.sort()
        xs, ys = zip(*pts) if pts else ((), ())
        ax.semilogy(xs, np.maximum(ys, 1e-300), "o-", ms=3, label=" ".join(map(str, key)))
    if series:
        ax.legend(fontsize=6)
    ax.set_xlabel("m")
    ax.set_ylabel("|c(m)|")
    ax.set_title(title, fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return out
