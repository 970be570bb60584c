"""Run configuration files, CSV output and a minimal SVG line chart.

Config files are ``key = value`` lines with ``#`` comments.  Keys are case
sensitive (``L`` is the interval length, ``l`` the half order).
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field, fields
from html import escape
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .evolution import Trajectory
from .forcing import ForcingDescriptor
from .grid import Grid, GridFunction
from .nonlinear import NEWTON_MAX_ITER, PICARD_MAX_ITER
from .operator import ProblemSpec, min_intervals

SOLVERS = ("picard", "newton", "continuation")
REQUIRED_KEYS = ("L", "l", "k", "a")
OPTIONAL_KEYS = ("N", "solver", "tol", "max_iter", "forcing", "seed")


class ConfigError(ValueError):
    """Invalid configuration text or values."""


@dataclass(frozen=True)
class RunConfig:
    L: float
    l: int
    k: int
    a: float
    N: int = 256
    solver: str = "newton"
    tol: float = 1e-10
    max_iter: int | None = None
    forcing: ForcingDescriptor = field(default_factory=lambda: ForcingDescriptor("zero"))
    seed: int = 0
    out: str | None = None
    svg: str | None = None
    report: str | None = None

    def __post_init__(self) -> None:
        try:
            self.spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if not np.isfinite(self.tol) or self.tol <= 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        need = min_intervals(self.l)
        if self.N < need:
            raise ConfigError(f"N must be >= {need} for l={self.l}, got {self.N}")

    @property
    def effective_max_iter(self) -> int:
        """``max_iter`` or the solver's own default when unset."""
        if self.max_iter is not None:
            return self.max_iter
        return PICARD_MAX_ITER if self.solver == "picard" else NEWTON_MAX_ITER

    def spec(self) -> ProblemSpec:
        return ProblemSpec(self.L, self.l, self.k, self.a, self.forcing)

    def grid(self) -> Grid:
        return Grid(self.L, self.N)

    def with_(self, **changes) -> RunConfig:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return RunConfig(**data)


def _convert(key: str, raw: str):
    try:
        if key in ("L", "a", "tol"):
            return float(raw)
        if key in ("l", "k", "N", "max_iter", "seed"):
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if key == "solver":
            return raw.lower()
        return ForcingDescriptor.parse(raw)
    except ValueError as exc:
        detail = f": {exc}" if str(exc) else ""
        raise ConfigError(f"malformed value for {key!r}: {raw!r}{detail}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate ``key = value`` text."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in REQUIRED_KEYS + OPTIONAL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    return RunConfig(**values)


def config_to_text(cfg: RunConfig) -> str:
    lines = [
        f"L = {cfg.L!r}",
        f"l = {cfg.l}",
        f"k = {cfg.k}",
        f"a = {cfg.a!r}",
        f"N = {cfg.N}",
        f"solver = {cfg.solver}",
        f"tol = {cfg.tol!r}",
    ]
    if cfg.max_iter is not None:
        lines.append(f"max_iter = {cfg.max_iter}")
    lines += [f"forcing = {cfg.forcing.to_text()}", f"seed = {cfg.seed}"]
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    if not path.parent.is_dir():
        raise FileNotFoundError(f"cannot write {path}: directory {path.parent} does not exist")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(v: float) -> str:
    return "%.17g" % v


def write_csv(data: GridFunction | Trajectory, path) -> None:
    """Solution as ``x,u`` or trajectory as ``t,x,u`` (state-major)."""
    if isinstance(data, GridFunction):
        rows = ["x,u"]
        rows += [f"{_num(x)},{_num(u)}" for x, u in zip(data.grid.nodes, data.values)]
    elif isinstance(data, Trajectory):
        rows = ["t,x,u"]
        for t, state in zip(data.times, data.states):
            tt = _num(t)
            rows += [f"{tt},{_num(x)},{_num(u)}" for x, u in zip(state.grid.nodes, state.values)]
    else:
        raise TypeError(f"cannot write {type(data).__name__} as CSV")
    atomic_write_text(path, "\n".join(rows) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header names and the data as a float array (one row per line)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path} is empty")
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln], dtype=float)
    return header, data.reshape(-1, len(header))


SVG_WIDTH, SVG_HEIGHT = 640, 400
MARGIN = dict(left=70, right=150, top=30, bottom=50)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def write_svg_plot(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    path,
    title: str = "",
    xlabel: str = "x",
    ylabel: str = "",
) -> None:
    """Line chart with one polyline per named ``(x, y)`` series.

    Output depends only on the input, so identical calls give identical bytes.
    """
    if not series:
        raise ValueError("no series to plot")
    arrays = {}
    for name, (x, y) in series.items():
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if x.size == 0 or x.shape != y.shape:
            raise ValueError(f"series {name!r} is empty or has mismatched x/y lengths")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError(f"series {name!r} contains non-finite values")
        arrays[name] = (x, y)
    xs = np.concatenate([v[0] for v in arrays.values()])
    ys = np.concatenate([v[1] for v in arrays.values()])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = SVG_WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = SVG_HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{SVG_WIDTH / 2:.1f}" y="18" text-anchor="middle" '
                   f'font-size="13">{escape(title)}</text>')
    left, bottom = MARGIN["left"], MARGIN["top"] + ph
    out.append(f'<line x1="{left}" y1="{bottom}" x2="{left + pw}" y2="{bottom}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{MARGIN["top"]}" x2="{left}" y2="{bottom}" stroke="black"/>')
    for t in _ticks(x0, x1):
        px = sx(t)
        out.append(f'<line x1="{px:.2f}" y1="{bottom}" x2="{px:.2f}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{bottom + 18}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        py = sy(t)
        out.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{SVG_HEIGHT - 10}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    for n, (name, (x, y)) in enumerate(arrays.items()):
        color = PALETTE[n % len(PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 10 + 18 * n
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(str(name))}</text>')
    out.append("</svg>")
    atomic_write_text(path, "\n".join(out) + "\n")
