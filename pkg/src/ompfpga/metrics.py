"""Speedup and GFLOPS bookkeeping, CSV output and small SVG line charts."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from xml.sax.saxutils import escape

from .stencil import KernelKind, StencilKernel, flops_per_cell, interior_cells


class ReportError(ValueError):
    pass


CSV_COLUMNS = ["kernel", "h", "w", "d", "iterations", "fpgas", "ips_per_fpga",
               "elapsed_s", "gflops", "speedup", "compute_s", "gflops_compute"]


@dataclass(frozen=True)
class ExperimentRecord:
    kernel: KernelKind
    dims: tuple          # memory order: (h, w) or (d, h, w)
    iterations: int
    fpgas: int
    ips_per_fpga: int
    elapsed_s: float
    gflops: float
    speedup: float = 1.0
    compute_s: float = 0.0
    gflops_compute: float = 0.0

    @property
    def hwd(self) -> tuple:
        if len(self.dims) == 2:
            return self.dims[0], self.dims[1], 0
        d, h, w = self.dims
        return h, w, d

    def row(self) -> list:
        h, w, d = self.hwd
        return [self.kernel.value, h, w, d, self.iterations, self.fpgas, self.ips_per_fpga,
                repr(float(self.elapsed_s)), repr(float(self.gflops)), repr(float(self.speedup)),
                repr(float(self.compute_s)), repr(float(self.gflops_compute))]


def compute_gflops(kernel, dims, iterations: int, elapsed: float, interior_only: bool = True) -> float:
    """Floating-point rate of ``iterations`` sweeps over ``dims``.

    Only interior cells are counted by default since boundary cells are copied,
    not computed.
    """
    if iterations == 0:
        return 0.0
    if elapsed <= 0:
        raise ReportError("elapsed time must be positive")
    if not isinstance(kernel, StencilKernel):
        kernel = StencilKernel.default(kernel)
    cells = interior_cells(dims) if interior_only else _prod(dims)
    return flops_per_cell(kernel) * cells * iterations / elapsed / 1e9


def _prod(xs):
    out = 1
    for x in xs:
        out *= x
    return out


def compute_speedup(records, baseline=None) -> list:
    """Set ``speedup = baseline elapsed / elapsed`` on every record.

    ``baseline`` picks the reference row; by default the single-FPGA run of
    the same kernel, grid and iteration count.
    """
    records = list(records)
    if baseline is None:
        def baseline(r, cand):
            return (cand.fpgas == 1 and cand.kernel == r.kernel and cand.dims == r.dims
                    and cand.iterations == r.iterations and cand.ips_per_fpga == r.ips_per_fpga)
    out = []
    for r in records:
        base = next((c for c in records if baseline(r, c)), None)
        if base is None:
            raise ReportError(f"no baseline for {r.kernel.value} at {r.fpgas} FPGAs")
        out.append(replace(r, speedup=base.elapsed_s / r.elapsed_s))
    return out


def emit_csv(records) -> str:
    records = list(records)
    if not records:
        raise ReportError("no records to report")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def load_csv(text: str) -> list:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        h, w, d = int(row["h"]), int(row["w"]), int(row["d"])
        dims = (h, w) if d == 0 else (d, h, w)
        out.append(ExperimentRecord(
            KernelKind(row["kernel"]), dims, int(row["iterations"]), int(row["fpgas"]),
            int(row["ips_per_fpga"]), float(row["elapsed_s"]), float(row["gflops"]),
            float(row["speedup"]), float(row.get("compute_s") or 0.0),
            float(row.get("gflops_compute") or 0.0)))
    return out


# SVG ------------------------------------------------------------------------

_PALETTE = ["#d4a017", "#1f77b4", "#e36c0a", "#2ca02c", "#c0392b", "#7f3fbf", "#555555"]
_W, _H = 640, 400
_L, _R, _T, _B = 70, 170, 40, 55


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / n
    return [lo + i * step for i in range(n + 1)]


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e6:
        return str(int(v))
    return f"{v:.3g}"


def line_chart(series: dict, title: str, xlabel: str, ylabel: str) -> str:
    """Standalone SVG; ``series`` maps a label to ``[(x, y), ...]``."""
    if not series or not any(series.values()):
        raise ReportError("nothing to plot")
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    if x0 == x1:
        x0, x1 = x0 - 1, x1 + 1
    y0, y1 = 0.0, max(ys) * 1.1 if max(ys) > 0 else 1.0
    pw, ph = _W - _L - _R, _H - _T - _B

    def px(x):
        return _L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return _T + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" style="font-family:sans-serif;font-size:12px">',
           f'<rect x="0" y="0" width="{_W}" height="{_H}" style="fill:#ffffff"/>',
           f'<text x="{_W / 2 - _R / 2:.1f}" y="22" style="font-size:15px;text-anchor:middle">{escape(title)}</text>']
    for v in _ticks(y0, y1):
        y = py(v)
        out.append(f'<line x1="{_L}" y1="{y:.1f}" x2="{_L + pw}" y2="{y:.1f}" style="stroke:#dddddd"/>')
        out.append(f'<text x="{_L - 6}" y="{y + 4:.1f}" style="text-anchor:end">{_fmt(round(v, 3))}</text>')
    for v in sorted(set(xs)):
        x = px(v)
        out.append(f'<text x="{x:.1f}" y="{_T + ph + 18}" style="text-anchor:middle">{_fmt(v)}</text>')
    out.append(f'<line x1="{_L}" y1="{_T + ph}" x2="{_L + pw}" y2="{_T + ph}" style="stroke:#000000"/>')
    out.append(f'<line x1="{_L}" y1="{_T}" x2="{_L}" y2="{_T + ph}" style="stroke:#000000"/>')
    out.append(f'<text x="{_L + pw / 2:.1f}" y="{_H - 12}" style="text-anchor:middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{_T + ph / 2:.1f}" transform="rotate(-90 18 {_T + ph / 2:.1f})" '
               f'style="text-anchor:middle">{escape(ylabel)}</text>')
    for i, (label, pts) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        pts = sorted(pts)
        path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
        if len(pts) > 1:
            out.append(f'<polyline points="{path}" style="fill:none;stroke:{color};stroke-width:2"/>')
        for x, y in pts:
            out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" style="fill:{color}"/>')
        ly = _T + 10 + 18 * i
        out.append(f'<rect x="{_W - _R + 15}" y="{ly - 9}" width="12" height="12" style="fill:{color}"/>')
        out.append(f'<text x="{_W - _R + 32}" y="{ly + 1}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


_AXES = {"fpgas": "FPGAs", "iterations": "iterations", "ips": "IPs per FPGA"}


def _x_of(r: ExperimentRecord, axis: str):
    return {"fpgas": r.fpgas, "iterations": r.iterations, "ips": r.ips_per_fpga}[axis]


def emit_svg(records, metric: str = "speedup", axis: str = "fpgas") -> str:
    """One line per kernel (or per IP count when sweeping iterations)."""
    records = list(records)
    if not records:
        raise ReportError("no records to report")
    if metric not in ("speedup", "gflops"):
        raise ReportError(f"unknown metric {metric!r}")
    if axis not in _AXES:
        raise ReportError(f"unknown axis {axis!r}")
    series: dict[str, list] = {}
    for r in records:
        if axis == "iterations":
            label = f"{r.kernel.value} {r.ips_per_fpga} IP"
        else:
            label = r.kernel.value
        series.setdefault(label, []).append((_x_of(r, axis), getattr(r, metric)))
    ylabel = "speedup" if metric == "speedup" else "GFLOPS"
    return line_chart(series, f"{ylabel} vs {_AXES[axis]}", _AXES[axis], ylabel)


def emit_report(records, fmt: str = "csv", **kw) -> str:
    if fmt == "csv":
        return emit_csv(records)
    if fmt == "svg":
        return emit_svg(records, **kw)
    raise ReportError(f"unknown format {fmt!r}")


__all__ = ["ExperimentRecord", "ReportError", "CSV_COLUMNS", "compute_gflops", "compute_speedup",
           "emit_csv", "load_csv", "emit_svg", "emit_report", "line_chart"]
