"""Norm diagnostics, truncation thresholds, boundary-layer checks, stability.

Everything here consumes solved densities or velocity fields and reduces
them to the handful of numbers the transport theory says must behave:
conserved L^p norms, uniformly small super-level tails, vanishing
boundary-layer flux, and perturbation distances that shrink together.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from transportlab.characteristics import solve_classical
from transportlab.fields import AdmissibleBeta, ScalarField, StreamFunction, VelocityField
from transportlab.geometry import (
    Grid,
    GeometryError,
    TimePartition,
    integrate,
    shrink,
)


class AnalysisError(ValueError):
    """Raised when a diagnostic is asked for inadmissible inputs or when an
    enforced convergence property fails on the data."""


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


def lp_norm(values: np.ndarray, grid: Grid, p: float) -> float:
    """L^p norm of one nodal layer; p = inf is the nodal sup."""
    if p < 1.0:
        raise AnalysisError(f"p must be >= 1, got {p}")
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise AnalysisError(f"layer shape {values.shape} does not match grid")
    if np.isinf(p):
        return float(np.max(np.abs(values)))
    return float(integrate(np.abs(values) ** p, grid) ** (1.0 / p))


def bochner_norm_u(
    u: VelocityField,
    grid: Grid,
    times: TimePartition,
    p_space: float = 2.0,
    include_gradient: bool = False,
) -> float:
    """int_0^T ||u(t)|| dt with an L^p or W^{1,p} spatial norm.

    The W^{1,p} norm is the sum of the L^p norms of |u| and of the
    Frobenius norm of the Jacobian, both in closed form from the stream
    functions. Autonomous fields shortcut to T times one spatial norm.
    """
    X, Y = grid.meshes()

    def spatial(t: float) -> float:
        sp = u.speed(X, Y, t)
        total = lp_norm(sp, grid, p_space)
        if include_gradient:
            u1x, u1y, u2x, u2y = u.eval_gradient(X, Y, t)
            jac = np.sqrt(u1x**2 + u1y**2 + u2x**2 + u2y**2)
            total += lp_norm(jac, grid, p_space)
        return total

    if u.autonomous:
        return times.T * spatial(0.0)
    return float(np.sum(times.weights * np.array([spatial(t) for t in times.times])))


# ---------------------------------------------------------------------------
# Conservation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormReport:
    """Per-time-node L^p norms of a solved density against the t=0 value.

    drift is the two-sided relative excursion; growth keeps only the
    positive side. Backward semi-Lagrangian evaluation averages nodal
    values, so it can lose extrema to smoothing but never create them:
    for p = inf the meaningful conservation statistic is growth, while
    finite p sees both sides of the quadrature wobble.
    """

    p: float
    times: np.ndarray
    values: np.ndarray
    reference: float
    tol: float
    flagged: tuple[int, ...]

    @property
    def _scale(self) -> float:
        return self.reference if self.reference > 0.0 else 1.0

    @property
    def drift(self) -> float:
        return float(np.max(np.abs(self.values - self.reference)) / self._scale)

    @property
    def growth(self) -> float:
        return float(max(np.max(self.values - self.reference) / self._scale, 0.0))

    @property
    def statistic(self) -> float:
        """The gate value: growth for p = inf, two-sided drift otherwise."""
        return self.growth if np.isinf(self.p) else self.drift

    @property
    def passed(self) -> bool:
        return not self.flagged

    CSV_HEADER = ("t", "p", "norm", "drift")

    def csv_rows(self) -> list[list[str]]:
        devs = self._deviations()
        return [
            [repr(float(t)), repr(float(self.p)), repr(float(v)), repr(float(d))]
            for t, v, d in zip(self.times, self.values, devs)
        ]

    def _deviations(self) -> np.ndarray:
        if np.isinf(self.p):
            return np.maximum(self.values - self.reference, 0.0) / self._scale
        return np.abs(self.values - self.reference) / self._scale


def conservation_report(
    rho: ScalarField,
    p_list: Sequence[float] = (1.0, 2.0, 3.0, np.inf),
    tol: float = 1e-3,
    tol_sup: float = 1e-6,
) -> dict[float, NormReport]:
    """Norm history per exponent, with nodes breaching tolerance flagged.

    The flag statistic matches the gate: one-sided for p = inf (see
    NormReport), two-sided otherwise, against tol_sup and tol respectively.
    """
    reports: dict[float, NormReport] = {}
    for p in p_list:
        norms = np.array([lp_norm(rho.layer(j), rho.grid, p) for j in range(rho.n_layers)])
        ref = float(norms[0])
        gate = tol_sup if np.isinf(p) else tol
        scale = ref if ref > 0.0 else 1.0
        if np.isinf(p):
            devs = np.maximum(norms - ref, 0.0) / scale
        else:
            devs = np.abs(norms - ref) / scale
        flagged = tuple(int(j) for j in np.nonzero(devs > gate)[0])
        reports[float(p)] = NormReport(float(p), rho.times, norms, ref, gate, flagged)
    return reports


# ---------------------------------------------------------------------------
# Uniform integrability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationProfile:
    """Smallest nodal-value thresholds M with uniform tail mass below eps."""

    eps: tuple[float, ...]
    thresholds: tuple[float, ...]
    tails: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(t >= e for t, e in zip(self.tails, self.eps)):
            raise AnalysisError("tail integral must stay below its eps")


class _TailCurve:
    """Super-level tail integrals of one layer as a function of the cut.

    Sorting the weighted nodal contributions by magnitude turns
    tail(M) = quadrature of |rho| over {|rho| > M} into a suffix sum looked
    up by binary search; ties are handled by cutting after the whole run.
    """

    def __init__(self, layer: np.ndarray, grid: Grid):
        mags = np.abs(np.asarray(layer, dtype=float)).reshape(-1)
        contrib = mags * grid.quadrature_weights.reshape(-1)
        order = np.argsort(mags, kind="stable")
        self.mags = mags[order]
        self.csum = np.concatenate([np.cumsum(contrib[order][::-1])[::-1], [0.0]])

    def tail(self, M: float) -> float:
        return float(self.csum[np.searchsorted(self.mags, M, side="right")])

    def smallest_threshold(self, eps: float) -> float:
        # tails evaluated at each nodal value are nonincreasing, so the
        # first one below eps marks the smallest admissible cut
        per_node = self.csum[np.searchsorted(self.mags, self.mags, side="right")]
        return float(self.mags[int(np.argmax(per_node < eps))])


def truncation_thresholds(
    layers: Sequence[np.ndarray], grid: Grid, eps_list: Sequence[float]
) -> TruncationProfile:
    """For each eps, the smallest nodal threshold M with every member's
    super-level tail integral below eps."""
    if not layers:
        raise AnalysisError("need at least one layer")
    for layer in layers:
        if np.asarray(layer).shape != grid.shape:
            raise AnalysisError("all layers must share the grid")
    eps_vals = [float(e) for e in eps_list]
    if any(e <= 0.0 for e in eps_vals):
        raise AnalysisError("eps values must be positive")
    curves = [_TailCurve(layer, grid) for layer in layers]
    thresholds, tails = [], []
    for e in eps_vals:
        m_family = max(c.smallest_threshold(e) for c in curves)
        thresholds.append(m_family)
        tails.append(max(c.tail(m_family) for c in curves))
    return TruncationProfile(tuple(eps_vals), tuple(thresholds), tuple(tails))


# ---------------------------------------------------------------------------
# Boundary layer flux
# ---------------------------------------------------------------------------


def _frame_integral(values: np.ndarray, grid: Grid, width: float) -> float:
    """Quadrature of values over the boundary frame of the given width.

    Per cell: corner mean times the cell area left outside the shrunk
    region. Cells with all-zero corners contribute an exact 0.0, so a
    compactly supported integrand clears this function without roundoff.
    """
    d = grid.domain
    cell = grid.hx * grid.hy
    try:
        inner = shrink(d, width)
    except GeometryError:
        inner = None  # frame swallows the whole domain
    v = np.asarray(values, dtype=float)
    mean = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
    if inner is None:
        return float(np.sum(mean) * cell)
    ox = np.clip(
        np.minimum(grid.xs[1:], inner.x_hi) - np.maximum(grid.xs[:-1], inner.x_lo),
        0.0,
        None,
    )
    oy = np.clip(
        np.minimum(grid.ys[1:], inner.y_hi) - np.maximum(grid.ys[:-1], inner.y_lo),
        0.0,
        None,
    )
    comp = cell - ox[:, None] * oy[None, :]
    return float(np.einsum("ij,ij->", mean, comp))


def boundary_flux_decay(u, h_list: Sequence[float], grid: Grid, t: float = 0.0):
    """Pairs (h, 2h * integral of |u| over the frame of width 1/h).

    For continuous boundary-vanishing fields this tends to 0 and hits it
    exactly once 1/h clears the support margin; a field violating the
    boundary condition saturates near 2 * perimeter instead.
    """
    hs = [float(h) for h in h_list]
    if any(h <= 0.0 for h in hs) or any(b <= a for a, b in zip(hs, hs[1:])):
        raise AnalysisError("h_list must be positive and strictly increasing")
    X, Y = grid.meshes()
    ux, uy = u.eval(X, Y, t)
    speed = np.hypot(ux, uy)
    return [(h, 2.0 * h * _frame_integral(speed, grid, 1.0 / h)) for h in hs]


# ---------------------------------------------------------------------------
# Stability experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    """Velocity and solution distances for a family of perturbed problems."""

    n: tuple[int, ...]
    d: tuple[float, ...]
    e: tuple[float, ...]
    p: float
    monotone: bool

    def __post_init__(self) -> None:
        if len(self.n) != len(self.d) or len(self.n) != len(self.e):
            raise AnalysisError("n, d, e must align")
        if any(v < 0 for v in self.d) or any(v < 0 for v in self.e):
            raise AnalysisError("distances cannot be negative")

    CSV_HEADER = ("n", "d_n", "e_n")

    def csv_rows(self) -> list[list[str]]:
        return [
            [str(n), repr(d), repr(e)] for n, d, e in zip(self.n, self.d, self.e)
        ]


def amplitude_family(u: VelocityField, rho0: ScalarField) -> Callable:
    """Perturbation n -> ((1 + 1/n) u, rho0): shrinking amplitude excess."""

    def member(n: int):
        return u.scaled(1.0 + 1.0 / n), rho0

    return member


def initial_data_family(
    u: VelocityField,
    rho0: ScalarField,
    center: tuple[float, float] = (0.4, 0.6),
    radius: float = 0.15,
    amplitude: float = 1.0,
) -> Callable:
    """Perturbation n -> (u, rho0 + (1/n) * smooth bump): fixed field."""
    bump = StreamFunction(center, radius, amplitude)
    X, Y = rho0.grid.meshes()
    layer = bump.value(X, Y, 0.0)

    def member(n: int):
        values = rho0.values + layer[None, :, :] / n
        return u, ScalarField(rho0.grid, rho0.times, values)

    return member


def _velocity_distance(
    u_n: VelocityField, u: VelocityField, grid: Grid, times: TimePartition
) -> float:
    X, Y = grid.meshes()

    def at(t: float) -> float:
        ax, ay = u_n.eval(X, Y, t)
        bx, by = u.eval(X, Y, t)
        return integrate(np.hypot(ax - bx, ay - by), grid)

    if u_n.autonomous and u.autonomous:
        return times.T * at(0.0)
    return float(np.sum(times.weights * np.array([at(t) for t in times.times])))


def stability_experiment(
    u: VelocityField,
    rho0: ScalarField,
    times: TimePartition,
    family: Callable,
    n_list: Sequence[int],
    p: float = 2.0,
    workers: int | None = None,
    enforce: bool = True,
) -> StabilityReport:
    """Solve the reference and each perturbed problem; report d_n and e_n.

    d_n = ||u_n - u|| in L1 of time and space; e_n = max over time nodes of
    ||rho_n(t_j) - rho(t_j)||_p, the discrete stand-in for the uniform-in-
    time L^p distance. With enforce on, e_n failing to be nonincreasing
    (5 percent slack) or to at least halve across the sweep is an error;
    an identically zero sequence (unperturbed family) is exempt.
    """
    ns = [int(n) for n in n_list]
    if not ns or any(n <= 0 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise AnalysisError("n_list must be positive and strictly increasing")
    grid = rho0.grid
    reference = solve_classical(rho0, u, times)

    def run(n: int):
        u_n, rho0_n = family(n)
        sol = solve_classical(rho0_n, u_n, times)
        e_n = max(
            lp_norm(sol.layer(j) - reference.layer(j), grid, p)
            for j in range(sol.n_layers)
        )
        return _velocity_distance(u_n, u, grid, times), e_n

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, ns))
    else:
        results = [run(n) for n in ns]
    d = tuple(r[0] for r in results)
    e = tuple(r[1] for r in results)
    monotone = all(b <= 1.05 * a for a, b in zip(e, e[1:]))
    report = StabilityReport(tuple(ns), d, e, float(p), monotone)
    if enforce and any(v > 0.0 for v in e):
        if not monotone:
            raise AnalysisError(f"solution distances not nonincreasing: {e}")
        if e[-1] >= e[0] / 2.0:
            raise AnalysisError(
                f"solution distances failed to halve: first {e[0]:.3e}, last {e[-1]:.3e}"
            )
    return report


# ---------------------------------------------------------------------------
# Renormalized convergence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RenormalizationTrend:
    """L2 space-time distances ||beta(rho_n) - beta(rho)|| per beta."""

    labels: tuple[str, ...]
    distances: tuple[tuple[float, ...], ...]
    decreasing: tuple[bool, ...]


def renormalization_convergence_check(
    rho_list: Sequence[ScalarField],
    rho: ScalarField,
    betas: Sequence[AdmissibleBeta],
) -> RenormalizationTrend:
    """Per beta, the trend of ||beta(rho_n) - beta(rho)||_{L2((0,T) x Omega)}."""
    for r in rho_list:
        if r.grid != rho.grid or r.n_layers != rho.n_layers:
            raise AnalysisError("all densities must share grid and time layout")
    t = rho.times
    if t.size > 1:
        tw = np.empty(t.size)
        tw[1:-1] = 0.5 * (t[2:] - t[:-2])
        tw[0] = 0.5 * (t[1] - t[0])
        tw[-1] = 0.5 * (t[-1] - t[-2])
    else:
        tw = np.array([1.0])
    labels, rows, trends = [], [], []
    for beta in betas:
        base = [beta(rho.layer(j)) for j in range(rho.n_layers)]
        dists = []
        for r in rho_list:
            sq = sum(
                tw[j] * integrate((beta(r.layer(j)) - base[j]) ** 2, rho.grid)
                for j in range(rho.n_layers)
            )
            dists.append(float(np.sqrt(sq)))
        labels.append(beta.label)
        rows.append(tuple(dists))
        trends.append(all(b <= a for a, b in zip(dists, dists[1:])))
    return RenormalizationTrend(tuple(labels), tuple(rows), tuple(trends))
