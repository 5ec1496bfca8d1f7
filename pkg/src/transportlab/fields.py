"""Concrete function objects used throughout the laboratory.

Velocity fields are built from compactly supported stream functions, so
incompressibility and boundary vanishing hold by construction instead of by
projection. Densities are nodal layers with bilinear point evaluation.
Mollifier kernels, admissible renormalization functions, and space-time
test functions are all closed form, with derivatives written out by hand;
every finite-difference check downstream compares against these forms.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from transportlab.geometry import Domain, Grid, dist_to_boundary


class FieldError(ValueError):
    """Raised for invalid field constructions or out-of-domain evaluation."""


# ---------------------------------------------------------------------------
# Smooth bump building blocks.
#
# _bump(q) = exp(-1/(1-q)) for q < 1 (q is the squared relative radius), with
# value 0 at q >= 1; _bump_dq is its q-derivative, and _bump_d2q the second.
# All three vanish with all derivatives at q = 1, which is what makes every
# construction here genuinely smooth across its support edge.
# ---------------------------------------------------------------------------


def _bump(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    m = q < 1.0
    t = 1.0 - q[m]
    out[m] = np.exp(-1.0 / t)
    return out


def _bump_dq(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    m = q < 1.0
    t = 1.0 - q[m]
    out[m] = -np.exp(-1.0 / t) / (t * t)
    return out


def _bump_d2q(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    m = q < 1.0
    t = 1.0 - q[m]
    out[m] = np.exp(-1.0 / t) * (1.0 - 2.0 * t) / t**4
    return out


# ---------------------------------------------------------------------------
# Time modulation of stream functions.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeModulation:
    """Scalar factor a(t) applied to a stream function."""

    label: str
    value: Callable[[float], float]


def _inverse_sqrt(t: float) -> float:
    # Integrable in time but unbounded at t = 0; the clip keeps evaluation
    # finite without affecting integrals at observable tolerances.
    return float(max(t, 1e-6)) ** -0.5


_MODULATIONS = {
    "none": TimeModulation("none", lambda t: 1.0),
    "linear": TimeModulation("linear", lambda t: float(t)),
    "inverse_sqrt": TimeModulation("inverse_sqrt", _inverse_sqrt),
}


def time_modulation(label: str) -> TimeModulation:
    try:
        return _MODULATIONS[label]
    except KeyError:
        raise FieldError(
            f"unknown time modulation {label!r}; have {sorted(_MODULATIONS)}"
        ) from None


# ---------------------------------------------------------------------------
# Stream functions and velocity fields.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StreamFunction:
    """Radial bump stream function A * a(t) * exp(-1/(1 - (r/R)^2)).

    The perpendicular gradient of psi gives one vortex of the velocity
    field. Value, gradient and second partials are closed form; everything
    vanishes identically at distance >= R from the center.
    """

    center: tuple[float, float]
    radius: float
    amplitude: float
    modulation: TimeModulation | None = None

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise FieldError(f"support radius must be positive, got {self.radius}")

    def factor(self, t: float) -> float:
        if self.modulation is None:
            return 1.0
        return self.modulation.value(t)

    def _rel(self, x, y):
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        q = (dx * dx + dy * dy) / self.radius**2
        return dx, dy, q

    def value(self, x, y, t: float = 0.0) -> np.ndarray:
        _, _, q = self._rel(x, y)
        return self.amplitude * self.factor(t) * _bump(q)

    def gradient(self, x, y, t: float = 0.0):
        """(psi_x, psi_y) in closed form."""
        dx, dy, q = self._rel(x, y)
        g = _bump_dq(q) * (2.0 * self.amplitude * self.factor(t) / self.radius**2)
        return g * dx, g * dy

    def second_partials(self, x, y, t: float = 0.0):
        """(psi_xx, psi_xy, psi_yy) in closed form."""
        dx, dy, q = self._rel(x, y)
        c = 2.0 * self.amplitude * self.factor(t) / self.radius**2
        g = _bump_dq(q) * c
        gp = _bump_d2q(q) * (2.0 * c / self.radius**2)
        return g + dx * dx * gp, dx * dy * gp, g + dy * dy * gp


@dataclass(frozen=True)
class VelocityField:
    """Superposition of perpendicular stream-function gradients.

    u = (psi_y, -psi_x) summed over components, hence divergence free
    analytically and identically zero within the support margin of the
    boundary.
    """

    components: tuple[StreamFunction, ...]
    domain: Domain

    @property
    def support_margin(self) -> float:
        """Distance from the union of supports to the boundary."""
        margins = []
        for c in self.components:
            cx, cy = c.center
            margins.append(dist_to_boundary(self.domain, cx, cy) - c.radius)
        return min(margins) if margins else float("inf")

    @property
    def autonomous(self) -> bool:
        return all(
            c.modulation is None or c.modulation.label == "none"
            for c in self.components
        )

    def eval(self, x, y, t: float = 0.0, checked: bool = True):
        """Velocity components at points; arrays in, arrays out.

        checked=True enforces the closure-of-domain precondition; the
        characteristics integrator turns it off on its clamped internal
        points to avoid re-verifying what it just clamped.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if checked and not np.all(self.domain.contains_closure(x, y)):
            raise FieldError("velocity evaluation outside the closed domain")
        ux = np.zeros(np.broadcast(x, y).shape)
        uy = np.zeros_like(ux)
        for c in self.components:
            px, py = c.gradient(x, y, t)
            ux += py
            uy -= px
        if ux.ndim == 0:
            return float(ux), float(uy)
        return ux, uy

    def eval_gradient(self, x, y, t: float = 0.0):
        """Entries (u1_x, u1_y, u2_x, u2_y) of the velocity Jacobian."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        u1x = np.zeros(shape)
        u1y = np.zeros(shape)
        u2x = np.zeros(shape)
        u2y = np.zeros(shape)
        for c in self.components:
            pxx, pxy, pyy = c.second_partials(x, y, t)
            u1x += pxy
            u1y += pyy
            u2x -= pxx
            u2y -= pxy
        return u1x, u1y, u2x, u2y

    def speed(self, x, y, t: float = 0.0, checked: bool = True):
        ux, uy = self.eval(x, y, t, checked=checked)
        return np.hypot(ux, uy)

    def max_speed(self, grid: Grid, times: Sequence[float] = (0.0,)) -> float:
        """Nodal sup of |u| over the given times (one sample if autonomous)."""
        X, Y = grid.meshes()
        if self.autonomous:
            times = (0.0,)
        return float(max(np.max(self.speed(X, Y, t)) for t in times))

    def scaled(self, factor: float) -> VelocityField:
        comps = tuple(replace(c, amplitude=factor * c.amplitude) for c in self.components)
        return VelocityField(comps, self.domain)


def from_stream_function(
    psi: StreamFunction | Sequence[StreamFunction], domain: Domain
) -> VelocityField:
    """Build the divergence-free field u = (psi_y, -psi_x) on a domain.

    Each component's support ball must stay strictly inside the domain;
    a support touching the boundary would break the boundary-vanishing
    hypothesis the transport theory rests on, so it is a construction error.
    """
    comps = (psi,) if isinstance(psi, StreamFunction) else tuple(psi)
    for c in comps:
        cx, cy = c.center
        if domain.locate(cx, cy) != "interior":
            raise FieldError(f"stream function center {c.center} not interior")
        margin = dist_to_boundary(domain, cx, cy) - c.radius
        if margin <= 0.0:
            raise FieldError(
                f"stream function support (center {c.center}, radius {c.radius}) "
                f"touches the boundary (margin {margin:.3g})"
            )
    return VelocityField(comps, domain)


def eval_velocity(u: VelocityField, x, y=None, t: float = 0.0):
    """Closed-form velocity at a point of the closed domain."""
    if y is None:
        (x, y) = x
    return u.eval(x, y, t)


def vortex_field(
    domain: Domain,
    center: tuple[float, float] = (0.5, 0.5),
    radius: float = 0.3,
    amplitude: float = 0.5,
    modulation: str = "none",
) -> VelocityField:
    """The workhorse single-vortex field used by studies and tests."""
    mod = None if modulation == "none" else time_modulation(modulation)
    return from_stream_function(
        StreamFunction(center, radius, amplitude, mod), domain
    )


# ---------------------------------------------------------------------------
# Mollifier kernels.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _bump_profile_constant() -> float:
    # Unit mass in the plane: Z * 2*pi * int_0^1 r exp(-1/(1-r^2)) dr = 1.
    # Computed once by adaptive quadrature of the radial profile and shared
    # by every scale (mass is invariant under the eps^{-2} rescaling).
    integral, err = quad(lambda r: r * np.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0)
    if err > 1e-9:
        raise FieldError(f"kernel normalization quadrature too loose: {err}")
    return 1.0 / (2.0 * np.pi * integral)


@dataclass(frozen=True)
class Kernel:
    """Scaled mollifier eta_eps(x) = eps^{-2} eta(x/eps), supp in B(0, eps)."""

    profile: str
    eps: float
    normalization: float

    def value(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        q = (x * x + y * y) / self.eps**2
        return (self.normalization / self.eps**2) * _bump(q)

    def grad(self, x, y):
        """grad eta_eps = eps^{-3} (grad eta)(x/eps), componentwise."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        q = (x * x + y * y) / self.eps**2
        g = _bump_dq(q) * (2.0 * self.normalization / self.eps**4)
        return g * x, g * y


def make_kernel(profile: str = "bump", eps: float = 0.1) -> Kernel:
    if eps <= 0.0:
        raise FieldError(f"kernel scale must be positive, got {eps}")
    if profile != "bump":
        raise FieldError(f"unknown kernel profile {profile!r}")
    return Kernel(profile, float(eps), _bump_profile_constant())


# ---------------------------------------------------------------------------
# Admissible renormalization functions.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibleBeta:
    """A renormalization function with its derivative and a joint bound.

    bound dominates sup|beta| + sup|beta'|. c1 records whether the function
    is continuously differentiable; the plain truncation is not, and is
    kept only as a smoothing target.
    """

    label: str
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    bound: float
    c1: bool = True

    def __call__(self, s) -> np.ndarray:
        return self.value(np.asarray(s, dtype=float))


def beta_truncation(M: float) -> AdmissibleBeta:
    """Clip to [-M, M]. Not C1 (corners at +-M); flagged accordingly."""
    if M <= 0.0:
        raise FieldError(f"truncation level must be positive, got {M}")

    def val(s):
        return np.clip(np.asarray(s, dtype=float), -M, M)

    def der(s):
        s = np.asarray(s, dtype=float)
        return (np.abs(s) < M).astype(float)

    return AdmissibleBeta(f"clip[{M:g}]", val, der, bound=M + 1.0, c1=False)


def _rounded_min(sigma: np.ndarray, M: float, k: int):
    """min(sigma, M) for sigma >= 0 with the corner at M rounded on width 2/k.

    The replacement arc is the unique parabola matching value and slope of
    the clip at both window ends; it stays below min(sigma, M) (equality
    only at the left joint) and deviates by at most 1/(4k), attained at M.
    Returns (value, derivative).
    """
    sigma = np.asarray(sigma, dtype=float)
    lo = M - 1.0 / k
    hi = M + 1.0 / k
    val = np.where(sigma <= lo, sigma, np.minimum(sigma, M))
    der = np.where(sigma <= lo, 1.0, 0.0)
    win = (sigma > lo) & (sigma < hi)
    tau = sigma[win] - hi
    val = np.array(val, dtype=float)
    val[win] = M - 0.25 * k * tau * tau
    der[win] = -0.5 * k * tau
    return val, der


def beta_smooth_approx(M: float, k: int) -> AdmissibleBeta:
    """C1 approximation of the clip, exact outside 1/k-windows around +-M.

    Odd in s, below the clip in absolute value, and within 1/k of it
    everywhere (the actual gap is 1/(4k)). The rounding window must not
    reach the origin, so k must exceed 1/M.
    """
    if M <= 0.0:
        raise FieldError(f"truncation level must be positive, got {M}")
    if k < 1 or 1.0 / k >= M:
        raise FieldError(
            f"rounding width 1/k must stay below M (got M={M}, k={k}); "
            "otherwise the corner windows reach the origin"
        )

    def val(s):
        s = np.asarray(s, dtype=float)
        v, _ = _rounded_min(np.abs(s), M, k)
        return np.sign(s) * v

    def der(s):
        s = np.asarray(s, dtype=float)
        _, d = _rounded_min(np.abs(s), M, k)
        return d  # derivative of an odd function is even

    return AdmissibleBeta(f"clip[{M:g}]~k{k}", val, der, bound=M + 1.0, c1=True)


def beta_bounded_power(p: float, M: float, k: int) -> AdmissibleBeta:
    """C1 version of t -> min(|t|^p, M), smoothed from below near level M.

    Increasing in k pointwise toward the unsmoothed function. p > 1 keeps
    the derivative p |t|^{p-1} sgn(t) continuous through 0.
    """
    if not 1.0 < p < np.inf:
        raise FieldError(f"exponent must lie in (1, inf), got {p}")
    if M <= 0.0:
        raise FieldError(f"saturation level must be positive, got {M}")
    if k < 1 or 1.0 / k >= M:
        raise FieldError(
            f"rounding width 1/k must stay below M (got M={M}, k={k})"
        )

    def val(t):
        t = np.asarray(t, dtype=float)
        v, _ = _rounded_min(np.abs(t) ** p, M, k)
        return v

    def der(t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        _, d = _rounded_min(a**p, M, k)
        return d * p * a ** (p - 1.0) * np.sign(t)

    # Derivative support ends where |t|^p reaches M + 1/k.
    dmax = p * (M + 1.0 / k) ** ((p - 1.0) / p)
    return AdmissibleBeta(
        f"pow[{p:g}|{M:g}]~k{k}", val, der, bound=M + dmax, c1=True
    )


# ---------------------------------------------------------------------------
# Test functions.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeProfile:
    """Temporal factor of a product test function; vanishes at t = T."""

    label: str
    T: float
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]


def quadratic_decay_profile(T: float) -> TimeProfile:
    """(1 - t/T)^2: value 1 at t = 0, vanishing at t = T."""

    def val(t):
        return (1.0 - np.asarray(t, dtype=float) / T) ** 2

    def der(t):
        return -2.0 * (1.0 - np.asarray(t, dtype=float) / T) / T

    return TimeProfile("quadratic", T, val, der)


def cosine_decay_profile(T: float) -> TimeProfile:
    """cos(pi t / 2T)^2: like the quadratic but with flat slope at t = 0."""

    def val(t):
        return np.cos(0.5 * np.pi * np.asarray(t, dtype=float) / T) ** 2

    def der(t):
        t = np.asarray(t, dtype=float)
        return -0.5 * np.pi / T * np.sin(np.pi * t / T)

    return TimeProfile("cosine", T, val, der)


TIME_PROFILES = {
    "quadratic": quadratic_decay_profile,
    "cosine": cosine_decay_profile,
}


@dataclass(frozen=True)
class TestFunction:
    """Product test function psi(t) * phi(x, y) with closed-form derivatives.

    phi is a unit-peak radial bump scaled by the amplitude; compact support
    in space (ball strictly inside the domain) and in time (profile
    vanishing at T) make it admissible for every weak-form pairing here.
    """

    center: tuple[float, float]
    radius: float
    amplitude: float
    time_profile: TimeProfile
    domain: Domain

    @property
    def label(self) -> str:
        cx, cy = self.center
        return (
            f"bump[{cx:g},{cy:g};r={self.radius:g};A={self.amplitude:g}]"
            f"*{self.time_profile.label}"
        )

    def _rel(self, x, y):
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        return dx, dy, (dx * dx + dy * dy) / self.radius**2

    def spatial(self, x, y) -> np.ndarray:
        # exp(1 - 1/(1-q)) peaks at exactly `amplitude` in the center.
        _, _, q = self._rel(x, y)
        return self.amplitude * np.e * _bump(q)

    def spatial_gradient(self, x, y):
        dx, dy, q = self._rel(x, y)
        g = _bump_dq(q) * (2.0 * self.amplitude * np.e / self.radius**2)
        return g * dx, g * dy

    def value(self, x, y, t) -> np.ndarray:
        return self.time_profile.value(t) * self.spatial(x, y)

    def dt(self, x, y, t) -> np.ndarray:
        return self.time_profile.derivative(t) * self.spatial(x, y)


def make_test_function(
    center: tuple[float, float],
    radius: float,
    time_profile: TimeProfile,
    domain: Domain,
    amplitude: float = 1.0,
) -> TestFunction:
    cx, cy = center
    if (
        domain.locate(cx, cy) != "interior"
        or dist_to_boundary(domain, cx, cy) <= radius
    ):
        raise FieldError(
            f"test function ball (center {center}, radius {radius}) "
            "is not strictly interior to the domain"
        )
    tv = float(np.asarray(time_profile.value(time_profile.T)))
    if abs(tv) > 1e-12:
        raise FieldError(f"time profile must vanish at T, got {tv}")
    return TestFunction((cx, cy), float(radius), float(amplitude), time_profile, domain)


# ---------------------------------------------------------------------------
# Dirac-like temporal families.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _time_bump_mass() -> float:
    integral, err = quad(lambda s: np.exp(-1.0 / (1.0 - s * s)), -1.0, 1.0)
    if err > 1e-9:
        raise FieldError(f"time bump normalization quadrature too loose: {err}")
    return float(integral)


@dataclass(frozen=True)
class TimeBump:
    """Unit-mass bump in time, supported on [t0 - w, t0 + w]."""

    t0: float
    w: float

    def value(self, t) -> np.ndarray:
        tau = (np.asarray(t, dtype=float) - self.t0) / self.w
        return _bump(tau * tau) / (self.w * _time_bump_mass())

    def smear(self, fn: Callable[[np.ndarray], np.ndarray], samples: int = 4097):
        """Trapezoid quadrature of profile * fn over the support window."""
        ts = np.linspace(self.t0 - self.w, self.t0 + self.w, samples)
        vals = self.value(ts) * np.asarray(fn(ts), dtype=float)
        return float(np.trapezoid(vals, ts))


def dirac_time_family(
    t0: float, w: float, T: float, count: int = 4
) -> list[TimeBump]:
    """Bumps concentrating at t0: widths w, w/2, ..., w / 2^(count-1).

    Smeared averages against continuous integrands converge to the point
    value at t0 as the width shrinks.
    """
    if not 0.0 < t0 < T:
        raise FieldError(f"t0 must lie strictly inside (0, {T}), got {t0}")
    if w <= 0.0 or t0 - w <= 0.0 or t0 + w >= T:
        raise FieldError(
            f"window [t0-w, t0+w] = [{t0 - w}, {t0 + w}] must stay inside (0, {T})"
        )
    return [TimeBump(t0, w / 2**i) for i in range(count)]


# ---------------------------------------------------------------------------
# Densities on grids.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarField:
    """Time-indexed nodal density layers with bilinear point evaluation."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray  # shape (len(times), nx+1, ny+1)
    interpolation: str = "bilinear"

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if values.ndim != 3 or values.shape[0] != times.size:
            raise FieldError(
                f"expected (nt+1, nx+1, ny+1) layers, got {values.shape} "
                f"for {times.size} times"
            )
        if values.shape[1:] != self.grid.shape:
            raise FieldError(
                f"layer shape {values.shape[1:]} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise FieldError("density layers contain non-finite values")

    @property
    def n_layers(self) -> int:
        return int(self.times.size)

    def layer(self, j: int) -> np.ndarray:
        return self.values[j]

    def eval(self, x, y, t_index: int = 0):
        """Bilinear evaluation of one layer; exterior points are an error."""
        return self.grid.interpolate(self.values[t_index], x, y)


def static_field(grid: Grid, f: Callable, t: float = 0.0) -> ScalarField:
    """Single-layer field sampled from f(x, y) at time t."""
    return ScalarField(grid, np.array([t]), grid.sample(f)[None, :, :])


def gaussian_blob(
    center: tuple[float, float] = (0.6, 0.5), sigma: float = 0.08, amplitude: float = 1.0
) -> Callable:
    def f(x, y):
        return amplitude * np.exp(
            -((x - center[0]) ** 2 + (y - center[1]) ** 2) / (2.0 * sigma**2)
        )

    return f


# ---------------------------------------------------------------------------
# Snapshot serialization: CSV of nodes plus a JSON header.
# ---------------------------------------------------------------------------


def save_snapshot(field: ScalarField, t_index: int, basename: str | Path) -> tuple[Path, Path]:
    """Write one layer as basename.csv (x, y, value rows) + basename.json.

    Floats go through repr, so a round trip preserves values to full
    precision and repeated writes are byte identical.
    """
    base = Path(basename)
    csv_path = base.with_suffix(".csv")
    json_path = base.with_suffix(".json")
    g = field.grid
    layer = field.values[t_index]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "value"])
        for i, x in enumerate(g.xs):
            for j, y in enumerate(g.ys):
                writer.writerow([repr(float(x)), repr(float(y)), repr(float(layer[i, j]))])
    header = {
        "domain": [g.domain.x_lo, g.domain.y_lo, g.domain.x_hi, g.domain.y_hi],
        "nx": g.nx,
        "ny": g.ny,
        "time": float(field.times[t_index]),
        "interpolation": field.interpolation,
    }
    with open(json_path, "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def load_snapshot(basename: str | Path) -> ScalarField:
    base = Path(basename)
    with open(base.with_suffix(".json")) as fh:
        header = json.load(fh)
    x_lo, y_lo, x_hi, y_hi = header["domain"]
    grid = Grid(Domain(x_lo, y_lo, x_hi, y_hi), int(header["nx"]), int(header["ny"]))
    values = np.empty(grid.shape)
    with open(base.with_suffix(".csv"), newline="") as fh:
        reader = csv.reader(fh)
        next(reader)  # header row
        flat = [float(row[2]) for row in reader]
    values[:] = np.reshape(flat, grid.shape)
    return ScalarField(grid, np.array([header["time"]]), values[None, :, :])
