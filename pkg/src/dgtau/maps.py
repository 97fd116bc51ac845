"""Truncation error maps over (N1, N2) and their extrapolation beyond P.

Two extrapolations are provided. The high-order one fits each directional
component separately and adds the two; the low-order one fits the total
error along the iso-lines ``N_j = P_j - 1`` of a full inner map, which
amounts to assuming the map is a plane in log space.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .estimation import DirectionalSeries, TauSample, exact_tau
from .mesh import Mesh, Orders
from .operator import NON_ISOLATED, Flavor
from .physics import AIR, GasParameters

DEFAULT_MAP_MAX = 10
CSV_HEADER = ["element_id", "N1", "N2", "tau", "flavor", "method", "provenance"]


class Provenance(enum.Enum):
    ESTIMATED = "estimated"
    EXTRAPOLATED = "extrapolated"
    EXACT = "exact"


class MapMethod(enum.Enum):
    HIGH_ORDER = "high_order"
    LOW_ORDER = "low_order"
    FULL_PRODUCT = "full_product"
    EXACT = "exact"


class DegenerateFitError(ValueError):
    pass


@dataclass(frozen=True)
class RegressionFit:
    """``log10(tau) = intercept + slope * N``."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def log10(self, n) -> np.ndarray | float:
        return self.intercept + self.slope * np.asarray(n, dtype=float)

    def predict(self, n) -> np.ndarray | float:
        return 10.0 ** self.log10(n)


def fit_loglinear(points: Iterable[tuple[int, float]]) -> RegressionFit:
    """Least-squares line through ``(N, log10 value)``."""
    pts = list(points)
    if len(pts) < 2:
        raise DegenerateFitError(f"need at least 2 points, got {len(pts)}")
    n = np.array([p[0] for p in pts], dtype=float)
    v = np.array([p[1] for p in pts], dtype=float)
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise DegenerateFitError("values must be positive and finite")
    if np.ptp(n) == 0:
        raise DegenerateFitError("need at least two distinct orders")
    y = np.log10(v)
    slope, intercept = np.polyfit(n, y, 1)
    resid = y - (intercept + slope * n)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)
    return RegressionFit(float(slope), float(intercept), min(r2, 1.0), len(pts))


def _fit_window(points, reference: int, min_order: int | None):
    # drop the pre-asymptotic N = 1 point unless the series is too short
    if min_order is None:
        min_order = 2 if reference >= 4 else 1
    return [(n, v) for n, v in points if n >= min_order]


def fit_series(series: DirectionalSeries, min_order: int | None = None) -> RegressionFit:
    ref = series.reference[series.direction - 1]
    return fit_loglinear(_fit_window(series.points(), ref, min_order))


@dataclass
class TauMap:
    """Values of ``||tau||`` indexed by ``(N1, N2)`` for ``1 <= N_i <= n_max``.

    Missing cells are NaN and have provenance ``None``.
    """

    element_id: int
    n_max: int
    method: MapMethod
    flavor: Flavor = NON_ISOLATED
    values: np.ndarray = field(default=None, repr=False)
    provenance: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.values is None:
            self.values = np.full((self.n_max, self.n_max), np.nan)
        if self.provenance is None:
            self.provenance = np.full((self.n_max, self.n_max), None, dtype=object)
        if self.values.shape != (self.n_max, self.n_max):
            raise ValueError("values shape does not match n_max")

    def _check(self, n1, n2):
        if not (1 <= n1 <= self.n_max and 1 <= n2 <= self.n_max):
            raise KeyError(f"({n1}, {n2}) outside map range 1..{self.n_max}")

    def __getitem__(self, orders: Orders) -> float:
        n1, n2 = orders
        self._check(n1, n2)
        return float(self.values[n1 - 1, n2 - 1])

    def set(self, orders: Orders, value: float, provenance: Provenance) -> None:
        n1, n2 = orders
        self._check(n1, n2)
        if not value >= 0:
            raise ValueError(f"map values must be non-negative, got {value}")
        self.values[n1 - 1, n2 - 1] = value
        self.provenance[n1 - 1, n2 - 1] = provenance

    def provenance_at(self, orders: Orders) -> Provenance | None:
        n1, n2 = orders
        self._check(n1, n2)
        return self.provenance[n1 - 1, n2 - 1]

    def cells(self):
        """``((N1, N2), value, provenance)`` for every filled cell."""
        for i in range(self.n_max):
            for j in range(self.n_max):
                if self.provenance[i, j] is not None:
                    yield (i + 1, j + 1), float(self.values[i, j]), self.provenance[i, j]

    def covers(self, n_min: int, n_max: int) -> bool:
        if n_min < 1 or n_max > self.n_max:
            return False
        block = self.values[n_min - 1:n_max, n_min - 1:n_max]
        return bool(np.all(np.isfinite(block)))

    def row(self, n1: int) -> np.ndarray:
        """Values along fixed ``N1`` for ``N2 = 1..n_max``."""
        return self.values[n1 - 1].copy()

    def column(self, n2: int) -> np.ndarray:
        return self.values[:, n2 - 1].copy()


def extend_series(series: DirectionalSeries, n_max: int, fit: RegressionFit | None = None,
                  min_order: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Series values for ``N = 1..n_max``; orders past the series come from the fit.

    Returns ``(values, extrapolated_mask)``.
    """
    fit = fit or fit_series(series, min_order)
    ns = np.arange(1, n_max + 1)
    known = dict(series.points())
    vals = np.array([known[n] if n in known else fit.predict(n) for n in ns], dtype=float)
    return vals, np.array([n not in known for n in ns])


def build_map_high_order(series1: DirectionalSeries, series2: DirectionalSeries,
                         n_max: int = DEFAULT_MAP_MAX, min_order: int | None = None) -> TauMap:
    """Map of ``tau_1(N1) + tau_2(N2)`` with log-linear extension of each component."""
    if series1.direction == 2 and series2.direction == 1:
        series1, series2 = series2, series1
    if (series1.direction, series2.direction) != (1, 2):
        raise ValueError("need one series per direction")
    t1, x1 = extend_series(series1, n_max, min_order=min_order)
    t2, x2 = extend_series(series2, n_max, min_order=min_order)
    m = TauMap(series1.element_id, n_max, MapMethod.HIGH_ORDER, series1.flavor)
    for i in range(n_max):
        for j in range(n_max):
            prov = Provenance.EXTRAPOLATED if (x1[i] or x2[j]) else Provenance.ESTIMATED
            m.set((i + 1, j + 1), t1[i] + t2[j], prov)
    return m


def build_map_full_product(estimates: dict[Orders, TauSample], n_max: int = DEFAULT_MAP_MAX,
                           norm: str = "inf") -> TauMap:
    """Inner map from direct estimates at every ``N_i < P_i``."""
    if not estimates:
        raise ValueError("no estimates given")
    first = next(iter(estimates.values()))
    m = TauMap(first.element_id, n_max, MapMethod.FULL_PRODUCT, first.flavor)
    for orders, s in estimates.items():
        m.set(orders, s.value(norm), Provenance.ESTIMATED)
    return m


def build_map_exact(mesh: Mesh, element_id: int, flavor: Flavor = NON_ISOLATED,
                    n_max: int = DEFAULT_MAP_MAX, gas: GasParameters = AIR,
                    norm: str = "inf", orders: Sequence[Orders] | None = None) -> TauMap:
    """Exact truncation error at each requested cell (all cells by default)."""
    m = TauMap(element_id, n_max, MapMethod.EXACT, flavor)
    cells = orders or [(a, b) for a in range(1, n_max + 1) for b in range(1, n_max + 1)]
    for o in cells:
        m.set(o, exact_tau(mesh, element_id, o, flavor, gas).value(norm), Provenance.EXACT)
    return m


@dataclass(frozen=True)
class IsoLineFits:
    """Regressions of the total error along ``N2 = P2 - 1`` (``fit1``) and ``N1 = P1 - 1`` (``fit2``)."""

    reference: Orders
    fit1: RegressionFit
    fit2: RegressionFit
    line1: np.ndarray  # tau(N1, P2 - 1) for N1 = 1..n_max
    line2: np.ndarray  # tau(P1 - 1, N2) for N2 = 1..n_max


def iso_line_fits(inner: TauMap, reference: Orders, n_max: int = DEFAULT_MAP_MAX,
                  min_order: int | None = None) -> IsoLineFits:
    P1, P2 = reference
    if P1 < 3 or P2 < 3:
        raise DegenerateFitError("iso-line regression needs P_i >= 3")
    pts1 = [(n, inner[(n, P2 - 1)]) for n in range(1, P1)]
    pts2 = [(n, inner[(P1 - 1, n)]) for n in range(1, P2)]
    fit1 = fit_loglinear(_fit_window(pts1, P1, min_order))
    fit2 = fit_loglinear(_fit_window(pts2, P2, min_order))
    ns = np.arange(1, n_max + 1)
    line1 = np.array([inner[(n, P2 - 1)] if n < P1 else fit1.predict(n) for n in ns])
    line2 = np.array([inner[(P1 - 1, n)] if n < P2 else fit2.predict(n) for n in ns])
    return IsoLineFits((P1, P2), fit1, fit2, line1, line2)


def build_map_low_order(inner: TauMap, reference: Orders, n_max: int = DEFAULT_MAP_MAX,
                        min_order: int | None = None) -> TauMap:
    """Plane-model completion of a full-product inner map.

    Inner cells are copied. The two iso-lines are extended by their
    regressions; every other outer cell is placed on the plane through the
    nearest inner value with the fitted slopes.
    """
    P1, P2 = reference
    fits = iso_line_fits(inner, reference, n_max, min_order)
    s1, s2 = fits.fit1.slope, fits.fit2.slope
    out = TauMap(inner.element_id, n_max, MapMethod.LOW_ORDER, inner.flavor)
    for n1 in range(1, n_max + 1):
        for n2 in range(1, n_max + 1):
            if n1 < P1 and n2 < P2:
                out.set((n1, n2), inner[(n1, n2)], Provenance.ESTIMATED)
                continue
            if n1 < P1:
                # along N2 from the inner edge value of this row
                base = np.log10(inner[(n1, P2 - 1)])
                val = base + s2 * (n2 - (P2 - 1)) if n1 != P1 - 1 else np.log10(fits.line2[n2 - 1])
            elif n2 < P2:
                base = np.log10(inner[(P1 - 1, n2)])
                val = base + s1 * (n1 - (P1 - 1)) if n2 != P2 - 1 else np.log10(fits.line1[n1 - 1])
            else:
                val = np.log10(fits.line1[n1 - 1]) + s2 * (n2 - (P2 - 1))
            out.set((n1, n2), 10.0 ** val, Provenance.EXTRAPOLATED)
    return out


def write_maps_csv(path, maps: Iterable[TauMap]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for m in maps:
            for (n1, n2), v, prov in m.cells():
                w.writerow([m.element_id, n1, n2, f"{v:.9e}", m.flavor.name.lower(),
                            m.method.value, prov.value])


def read_maps_csv(path) -> list[TauMap]:
    """Inverse of :func:`write_maps_csv`; map size is taken from the largest order."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        rows = list(reader)
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((int(r["element_id"]), r["flavor"], r["method"]), []).append(r)
    out = []
    for (eid, flavor, method), rs in groups.items():
        n_max = max(max(int(r["N1"]), int(r["N2"])) for r in rs)
        m = TauMap(eid, n_max, MapMethod(method), Flavor[flavor.upper()])
        for r in rs:
            m.set((int(r["N1"]), int(r["N2"])), float(r["tau"]), Provenance(r["provenance"]))
        out.append(m)
    return out
