"""Gaussian kernel density estimates over score axes and threshold inference.

Thresholds come from the 1D marginal of each axis: the density valley between
the two dominant modes separates the human cluster from the automated one. The
2D pairwise grids are kept for figures and diagnostics.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from boostnet.graph import NetworkSnapshot, ScoreTriple

BANDWIDTH_FLOOR = 1e-3
SQRT_2PI = math.sqrt(2.0 * math.pi)


class Axis(str, Enum):
    TEMPORAL = "temporal"
    NETWORK = "network"
    FRIEND = "friend"

    def __str__(self):
        return self.value


AXES = (Axis.TEMPORAL, Axis.NETWORK, Axis.FRIEND)
AXIS_PAIRS = ((Axis.NETWORK, Axis.FRIEND), (Axis.NETWORK, Axis.TEMPORAL), (Axis.TEMPORAL, Axis.FRIEND))
RULES = {"all": 3, "two-of-three": 2}


class InsufficientDataError(ValueError):
    pass


class DegenerateSampleWarning(UserWarning):
    """Sample spread is zero (or tiny); the bandwidth floor was applied."""


def bandwidth_scott(samples, dimensionality: int = 1) -> float:
    """Scott's rule ``sd * n ** (-1 / (d + 4))`` with ``ddof=1``, floored at 1e-3."""
    if dimensionality not in (1, 2):
        raise ValueError("dimensionality must be 1 or 2")
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples for a bandwidth, got {n}")
    h = float(np.std(x, ddof=1)) * n ** (-1.0 / (dimensionality + 4))
    if h < BANDWIDTH_FLOOR:
        warnings.warn(f"bandwidth {h:.3g} below floor, using {BANDWIDTH_FLOOR}", DegenerateSampleWarning, stacklevel=2)
        h = BANDWIDTH_FLOOR
    return h


def _kernel(u):
    return np.exp(-0.5 * u * u) / SQRT_2PI


def evaluate_kde1d(samples, bandwidth: float, points) -> np.ndarray:
    """Density of the 1D Gaussian KDE at arbitrary ``points``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("empty sample")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    pts = np.asarray(points, dtype=float)
    u = (pts.reshape(-1, 1) - x.reshape(1, -1)) / bandwidth
    return (_kernel(u).sum(axis=1) / (x.size * bandwidth)).reshape(pts.shape)


def evaluate_kde2d(samples, bandwidths: tuple[float, float], points) -> np.ndarray:
    """Density of the product-kernel 2D KDE at ``points`` of shape (m, 2)."""
    xy = np.asarray(samples, dtype=float).reshape(-1, 2)
    if xy.shape[0] == 0:
        raise InsufficientDataError("empty sample")
    hx, hy = bandwidths
    if not (hx > 0 and hy > 0):
        raise ValueError("bandwidths must be positive")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    kx = _kernel((pts[:, :1] - xy[:, 0]) / hx)
    ky = _kernel((pts[:, 1:] - xy[:, 1]) / hy)
    return (kx * ky).sum(axis=1) / (xy.shape[0] * hx * hy)


@dataclass(frozen=True)
class KdeGrid:
    """Density evaluated on an inclusive, evenly spaced grid.

    For 2D grids ``density[i, j]`` is the density at ``(coords(0)[i], coords(1)[j])``.
    """

    axes: tuple[Axis | str | None, ...]
    ranges: tuple[tuple[float, float], ...]
    resolution: int
    bandwidths: tuple[float, ...]
    density: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = len(self.ranges)
        if self.density.shape != (self.resolution,) * d:
            raise ValueError(f"density shape {self.density.shape} does not match resolution {self.resolution}")
        if not np.all(np.isfinite(self.density)) or np.any(self.density < 0):
            raise ValueError("density must be finite and non-negative")

    @property
    def ndim(self) -> int:
        return len(self.ranges)

    def coords(self, k: int = 0) -> np.ndarray:
        lo, hi = self.ranges[k]
        return np.linspace(lo, hi, self.resolution)

    def scaled(self, factor: float) -> "KdeGrid":
        return replace(self, density=self.density * factor)


def _check_grid(lo, hi, resolution):
    if not hi > lo:
        raise ValueError(f"empty grid range [{lo}, {hi}]")
    if resolution < 16:
        raise ValueError("resolution must be at least 16")


def kde1d(samples, bandwidth: float, grid: tuple[float, float] = (0.0, 1.0), resolution: int = 512,
          axis: Axis | None = None) -> KdeGrid:
    lo, hi = grid
    _check_grid(lo, hi, resolution)
    xs = np.linspace(lo, hi, resolution)
    dens = evaluate_kde1d(samples, bandwidth, xs)
    return KdeGrid((axis,), ((float(lo), float(hi)),), resolution, (float(bandwidth),), dens)


def kde2d(samples, bandwidths: tuple[float, float], ranges=((0.0, 1.0), (0.0, 1.0)), resolution: int = 256,
          axes: tuple[Axis | None, Axis | None] = (None, None)) -> KdeGrid:
    xy = np.asarray(samples, dtype=float).reshape(-1, 2)
    if xy.shape[0] == 0:
        raise InsufficientDataError("empty sample")
    hx, hy = bandwidths
    if not (hx > 0 and hy > 0):
        raise ValueError("bandwidths must be positive")
    for lo, hi in ranges:
        _check_grid(lo, hi, resolution)
    gx = np.linspace(*ranges[0], resolution)
    gy = np.linspace(*ranges[1], resolution)
    kx = _kernel((gx[:, None] - xy[:, 0]) / hx)
    ky = _kernel((gy[:, None] - xy[:, 1]) / hy)
    dens = kx @ ky.T / (xy.shape[0] * hx * hy)
    ranges = tuple((float(lo), float(hi)) for lo, hi in ranges)
    return KdeGrid(tuple(axes), ranges, resolution, (float(hx), float(hy)), dens)


@dataclass(frozen=True)
class Mode:
    location: float | tuple[float, float]
    density: float
    prominence: float | None
    index: int | tuple[int, int]


def find_modes(grid: KdeGrid, min_prominence_fraction: float = 0.05, include_endpoints: bool = True) -> list[Mode]:
    """Prominent local maxima of a 1D grid, highest density first.

    A point is a maximum when it is strictly above both neighbours; on a plateau
    the leftmost point stands for it. Prominence is the height above the highest
    valley that separates the mode from any higher one (the global maximum's
    prominence is its own height).
    """
    if grid.ndim != 1:
        raise ValueError("find_modes expects a 1D grid")
    if not 0 < min_prominence_fraction < 1:
        raise ValueError("min_prominence_fraction must lie in (0, 1)")
    y = grid.density
    n = y.size
    # collapse equal runs so plateaus behave like single points
    starts = np.flatnonzero(np.r_[True, y[1:] != y[:-1]])
    ends = np.r_[starts[1:], n] - 1
    vals = y[starts]
    peaks = []
    for k, (s, e) in enumerate(zip(starts, ends)):
        if vals[k] <= 0:
            continue
        left_ok = k == 0 or vals[k - 1] < vals[k]
        right_ok = k == len(vals) - 1 or vals[k + 1] < vals[k]
        if not (left_ok and right_ok):
            continue
        if not include_endpoints and (s == 0 or e == n - 1):
            continue
        peaks.append(int(s))

    def higher(a, b):
        return y[a] > y[b] or (y[a] == y[b] and a < b)

    modes = []
    xs = grid.coords(0)
    for p in peaks:
        cols = []
        left = [q for q in peaks if q < p and higher(q, p)]
        right = [q for q in peaks if q > p and higher(q, p)]
        if left:
            cols.append(y[max(left):p + 1].min())
        if right:
            cols.append(y[p:min(right) + 1].min())
        prom = float(y[p] - max(cols)) if cols else float(y[p])
        modes.append(Mode(float(xs[p]), float(y[p]), prom, p))
    top = float(y.max()) if n else 0.0
    kept = [m for m in modes if m.prominence > 0 and m.prominence >= min_prominence_fraction * top]
    kept.sort(key=lambda m: (-m.density, m.index))
    return kept


def valley_threshold(grid: KdeGrid, modes: Sequence[Mode], fallback: float = 0.5) -> tuple[float, str]:
    """Location of the density minimum between the two highest modes.

    Returns ``(threshold, "bimodal")``, or ``(fallback, "fallback_unimodal")`` when
    fewer than two modes are present.
    """
    if len(modes) < 2:
        return float(fallback), "fallback_unimodal"
    i, j = sorted((modes[0].index, modes[1].index))
    between = grid.density[i + 1:j]
    k = i + 1 + int(np.argmin(between))
    return float(grid.coords(0)[k]), "bimodal"


def grid_modes_2d(grid: KdeGrid) -> list[Mode]:
    """Strict 8-neighbour local maxima of a 2D grid, highest density first."""
    if grid.ndim != 2:
        raise ValueError("grid_modes_2d expects a 2D grid")
    d = grid.density
    padded = np.pad(d, 1, constant_values=-np.inf)
    is_max = d > 0
    r, c = d.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_max &= d > padded[1 + di:1 + di + r, 1 + dj:1 + dj + c]
    xs, ys = grid.coords(0), grid.coords(1)
    out = [Mode((float(xs[i]), float(ys[j])), float(d[i, j]), None, (int(i), int(j)))
           for i, j in zip(*np.nonzero(is_max))]
    out.sort(key=lambda m: (-m.density, m.index))
    return out


@dataclass(frozen=True)
class DetectionConfig:
    resolution_1d: int = 512
    resolution_2d: int = 256
    prominence_fraction: float = 0.05
    fallback_threshold: float = 0.5
    score_range: tuple[float, float] = (0.0, 1.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["score_range"] = list(self.score_range)
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ThresholdModel:
    thresholds: dict[str, float]
    mode_locations: dict[str, list[float]]
    confidence: dict[str, str]
    config_fingerprint: str

    def __post_init__(self):
        for ax in AXES:
            t = self.thresholds[ax.value]
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"{ax} threshold {t} outside [0, 1]")
            if self.confidence[ax.value] == "bimodal":
                a, b = sorted(self.mode_locations[ax.value][:2])
                if not a < t < b:
                    raise ValueError(f"{ax} threshold {t} not between modes {a} and {b}")

    def threshold(self, axis: Axis | str) -> float:
        return self.thresholds[str(axis)]

    def to_dict(self) -> dict:
        names = [a.value for a in AXES]
        return {
            "thresholds": {k: self.thresholds[k] for k in names},
            "modes": {k: list(self.mode_locations[k]) for k in names},
            "confidence": {k: self.confidence[k] for k in names},
            "config_fingerprint": self.config_fingerprint,
        }

    def to_json(self, **extra) -> str:
        doc = self.to_dict()
        doc.update(extra)
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdModel":
        return cls(dict(d["thresholds"]), {k: list(v) for k, v in d["modes"].items()},
                   dict(d["confidence"]), d["config_fingerprint"])

    @classmethod
    def from_json(cls, text: str) -> "ThresholdModel":
        return cls.from_dict(json.loads(text))


def _score_matrix(scored: Iterable[ScoreTriple | Sequence[float]]) -> np.ndarray:
    rows = [s.as_tuple() if isinstance(s, ScoreTriple) else tuple(s) for s in scored]
    m = np.asarray(rows, dtype=float).reshape(-1, 3)
    if m.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 scored accounts, got {m.shape[0]}")
    return m


def derive_threshold_model(scored_accounts, config: DetectionConfig = DetectionConfig()) -> ThresholdModel:
    """Infer one threshold per axis from the valley of its marginal density."""
    m = _score_matrix(scored_accounts)
    thresholds, locations, confidence = {}, {}, {}
    for k, ax in enumerate(AXES):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateSampleWarning)
            h = bandwidth_scott(m[:, k], 1)
        grid = kde1d(m[:, k], h, config.score_range, config.resolution_1d, axis=ax)
        modes = find_modes(grid, config.prominence_fraction)
        t, conf = valley_threshold(grid, modes, config.fallback_threshold)
        thresholds[ax.value] = t
        locations[ax.value] = [md.location for md in modes]
        confidence[ax.value] = conf
    return ThresholdModel(thresholds, locations, confidence, config.fingerprint())


def is_socialbot(scores: ScoreTriple, model: ThresholdModel, rule: str = "all") -> bool:
    """Upper-right-region test; a score equal to its threshold counts as above it."""
    need = RULES[rule]
    above = sum(getattr(scores, ax.value) >= model.threshold(ax) for ax in AXES)
    return above >= need


def classify_accounts(snapshot: NetworkSnapshot, model: ThresholdModel, rule: str = "all") -> NetworkSnapshot:
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; choose from {sorted(RULES)}")
    updated = []
    for rec in snapshot.accounts.values():
        if rec.scores is None:
            label = "unknown"
        else:
            label = "socialbot" if is_socialbot(rec.scores, model, rule) else "human"
        if label != rec.label:
            updated.append(replace(rec, label=label))
    return snapshot.with_accounts(updated)


def pairwise_density_grids(scored_accounts, config: DetectionConfig = DetectionConfig()) -> dict[tuple[Axis, Axis], KdeGrid]:
    m = _score_matrix(scored_accounts)
    col = {ax: k for k, ax in enumerate(AXES)}
    out = {}
    for a, b in AXIS_PAIRS:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateSampleWarning)
            hx = bandwidth_scott(m[:, col[a]], 2)
            hy = bandwidth_scott(m[:, col[b]], 2)
        out[(a, b)] = kde2d(m[:, [col[a], col[b]]], (hx, hy), (config.score_range,) * 2,
                            config.resolution_2d, axes=(a, b))
    return out


def scored_triples(snapshot: NetworkSnapshot) -> list[ScoreTriple]:
    return [snapshot.accounts[k].scores for k in sorted(snapshot.accounts) if snapshot.accounts[k].scores is not None]
