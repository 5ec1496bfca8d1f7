"""Distributional residuals, density mollification, and the commutator.

The weak form pairs a density with a product test function:

    -int int rho phi_t  -  int rho0 phi(0)  +  int int rho (u . grad phi)

vanishes for weak solutions. Mollifying a solution against a scaled kernel
leaves a commutator remainder

    r_eps(x) = int rho(y) (u(x) - u(y)) . grad(eta_eps)(y - x) dy

and the central quantitative check here is that the weak residual of the
mollified density equals the space-time pairing of r_eps with the test
function, each side computed by its own quadrature path. Norms of r_eps
over shrunk regions decay as eps -> 0; the study operation measures that
curve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from transportlab.characteristics import iter_solution_layers
from transportlab.fields import (
    AdmissibleBeta,
    Kernel,
    ScalarField,
    TestFunction,
    VelocityField,
    make_kernel,
)
from transportlab.geometry import (
    Domain,
    Grid,
    TimePartition,
    dist_to_boundary,
    integrate,
    shrink,
)


class WeakformError(ValueError):
    """Raised for inadmissible residual or mollification inputs."""


# ---------------------------------------------------------------------------
# Weak-form residuals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    """Signed weak-form terms and their absolute sum for one pairing."""

    term_time: float
    term_initial: float
    term_advective: float
    phi: str
    nx: int
    ny: int
    nt: int
    beta: str | None = None

    @property
    def residual(self) -> float:
        return abs(self.term_time + self.term_initial + self.term_advective)

    def to_json(self) -> dict:
        return {
            "residual": self.residual,
            "term_time": self.term_time,
            "term_initial": self.term_initial,
            "term_advective": self.term_advective,
            "phi": self.phi,
            "beta": self.beta,
            "grid": [self.nx, self.ny],
            "nt": self.nt,
        }

    CSV_HEADER = (
        "phi",
        "beta",
        "residual",
        "term_time",
        "term_initial",
        "term_advective",
        "nx",
        "ny",
        "nt",
    )

    def csv_row(self) -> list[str]:
        return [
            self.phi,
            self.beta or "",
            repr(self.residual),
            repr(self.term_time),
            repr(self.term_initial),
            repr(self.term_advective),
            str(self.nx),
            str(self.ny),
            str(self.nt),
        ]


def _time_weights(times: np.ndarray) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.size < 2:
        raise WeakformError("need at least two time layers for a residual")
    w = np.empty_like(t)
    w[1:-1] = 0.5 * (t[2:] - t[:-2])
    w[0] = 0.5 * (t[1] - t[0])
    w[-1] = 0.5 * (t[-1] - t[-2])
    return w


class ResidualAccumulator:
    """Streaming evaluation of the three weak-form terms, layer by layer.

    Feeding layers as they are produced keeps refined solves at constant
    memory; weak_residual on a stored field is the same accumulator run
    over its layers. An optional renormalization is applied to every layer
    (and to rho0) before pairing.
    """

    def __init__(
        self,
        grid: Grid,
        times: np.ndarray,
        u: VelocityField,
        phi: TestFunction,
        beta: AdmissibleBeta | None = None,
    ):
        if phi.domain != grid.domain:
            raise WeakformError("test function lives on a different domain")
        cx, cy = phi.center
        if dist_to_boundary(grid.domain, cx, cy) <= phi.radius:
            raise WeakformError("test function support is not strictly interior")
        self.times = np.asarray(times, dtype=float)
        T = float(self.times[-1])
        if abs(float(np.asarray(phi.time_profile.value(T)))) > 1e-12:
            raise WeakformError(
                "test function time profile does not vanish at the final time"
            )
        self.grid = grid
        self.u = u
        self.phi = phi
        self.beta = beta
        self.tw = _time_weights(self.times)
        X, Y = grid.meshes()
        w = grid.quadrature_weights
        self.phi_w = phi.spatial(X, Y) * w
        gx, gy = phi.spatial_gradient(X, Y)
        self._gx_w, self._gy_w = gx * w, gy * w
        if u.autonomous:
            ux, uy = u.eval(X, Y, 0.0)
            self._adv_w = ux * self._gx_w + uy * self._gy_w
        else:
            self._adv_w = None
            self._X, self._Y = X, Y
        self.term_time = 0.0
        self.term_advective = 0.0
        self._seen = 0

    def _advection_weights(self, t: float) -> np.ndarray:
        if self._adv_w is not None:
            return self._adv_w
        ux, uy = self.u.eval(self._X, self._Y, t)
        return ux * self._gx_w + uy * self._gy_w

    def add_layer(self, j: int, layer: np.ndarray) -> None:
        if j != self._seen:
            raise WeakformError(f"layers must arrive in order, expected {self._seen}")
        vals = layer if self.beta is None else self.beta(layer)
        t = float(self.times[j])
        psi = float(np.asarray(self.phi.time_profile.value(t)))
        dpsi = float(np.asarray(self.phi.time_profile.derivative(t)))
        self.term_time -= self.tw[j] * dpsi * float(np.sum(vals * self.phi_w))
        self.term_advective += self.tw[j] * psi * float(
            np.sum(vals * self._advection_weights(t))
        )
        self._seen += 1

    def report(self, rho0_layer: np.ndarray) -> ResidualReport:
        if self._seen != self.times.size:
            raise WeakformError(
                f"saw {self._seen} layers, expected {self.times.size}"
            )
        vals0 = rho0_layer if self.beta is None else self.beta(rho0_layer)
        psi0 = float(np.asarray(self.phi.time_profile.value(self.times[0])))
        term_initial = -psi0 * float(np.sum(vals0 * self.phi_w))
        return ResidualReport(
            term_time=self.term_time,
            term_initial=term_initial,
            term_advective=self.term_advective,
            phi=self.phi.label,
            nx=self.grid.nx,
            ny=self.grid.ny,
            nt=self.times.size - 1,
            beta=self.beta.label if self.beta is not None else None,
        )


def weak_residual(
    rho: ScalarField,
    rho0: ScalarField,
    u: VelocityField,
    phi: TestFunction,
    beta: AdmissibleBeta | None = None,
) -> ResidualReport:
    """Three-term weak-form pairing of a stored solution with phi."""
    acc = ResidualAccumulator(rho.grid, rho.times, u, phi, beta=beta)
    for j in range(rho.n_layers):
        acc.add_layer(j, rho.layer(j))
    return acc.report(rho0.layer(0))


def renormalized_residual(
    rho: ScalarField,
    rho0: ScalarField,
    u: VelocityField,
    beta: AdmissibleBeta,
    phi: TestFunction,
) -> ResidualReport:
    """Weak residual of beta(rho) against phi, with beta(rho0) initial data."""
    return weak_residual(rho, rho0, u, phi, beta=beta)


def streamed_weak_residuals(
    rho0: ScalarField,
    u: VelocityField,
    times: TimePartition,
    phis: Sequence[TestFunction],
    betas: Sequence[AdmissibleBeta | None] | None = None,
) -> list[ResidualReport]:
    """Solve and accumulate residuals for a whole test-function bank.

    One transport sweep feeds every accumulator, so memory stays at a few
    layers no matter how fine the solve is.
    """
    if betas is None:
        betas = [None] * len(phis)
    if len(betas) != len(phis):
        raise WeakformError("betas and phis must align")
    accs = [
        ResidualAccumulator(rho0.grid, times.times, u, phi, beta=b)
        for phi, b in zip(phis, betas)
    ]
    for j, _, layer in iter_solution_layers(rho0, u, times):
        for acc in accs:
            acc.add_layer(j, layer)
    base = rho0.layer(0)
    return [acc.report(base) for acc in accs]


# ---------------------------------------------------------------------------
# Windowed convolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InnerLayer:
    """One nodal layer defined on an interior shrinkage of the domain.

    values covers the whole grid so that region-weighted quadrature has all
    cell corners it needs; only nodes inside `region` carry the advertised
    meaning (outside it the window was truncated at the boundary).
    """

    grid: Grid
    region: Domain
    eps: float
    time: float
    values: np.ndarray
    kind: str


def _stencil(kernel: Kernel, grid: Grid):
    Kx = int(np.floor(kernel.eps / grid.hx))
    Ky = int(np.floor(kernel.eps / grid.hy))
    ox = grid.hx * np.arange(-Kx, Kx + 1)
    oy = grid.hy * np.arange(-Ky, Ky + 1)
    return Kx, Ky, np.meshgrid(ox, oy, indexing="ij")


def _window_convolve(F: np.ndarray, stencil: np.ndarray, Kx: int, Ky: int) -> np.ndarray:
    """out[m] = sum_o stencil[o] F[m + o], F zero-padded outside the grid."""
    n1, n2 = F.shape
    P = np.zeros((n1 + 2 * Kx, n2 + 2 * Ky))
    P[Kx : Kx + n1, Ky : Ky + n2] = F
    out = np.zeros_like(F)
    for a in range(2 * Kx + 1):
        row = stencil[a]
        for b in range(2 * Ky + 1):
            wgt = row[b]
            if wgt != 0.0:
                out += wgt * P[a : a + n1, b : b + n2]
    return out


def _inner_region(grid: Grid, eps: float) -> Domain:
    try:
        return shrink(grid.domain, eps)
    except Exception as exc:
        raise WeakformError(f"kernel scale {eps} leaves no interior region") from exc


def mollify_density(rho: ScalarField, kernel: Kernel, t_index: int = 0) -> InnerLayer:
    """Convolve one density layer with the kernel: the layer of rho_eps.

    Nodal quadrature of int rho(y) eta_eps(x - y) dy over the grid; exact
    unit kernel mass makes this a local average, so values contract every
    Lp norm on the shrunk region.
    """
    grid = rho.grid
    region = _inner_region(grid, kernel.eps)
    Kx, Ky, (OX, OY) = _stencil(kernel, grid)
    H = kernel.value(OX, OY)
    F = rho.layer(t_index) * grid.quadrature_weights
    vals = _window_convolve(F, H, Kx, Ky)
    return InnerLayer(grid, region, kernel.eps, float(rho.times[t_index]), vals, "mollified")


def commutator_remainder(
    rho: ScalarField, u: VelocityField, kernel: Kernel, t_index: int = 0
) -> InnerLayer:
    """Nodal layer of r_eps = int rho(y) (u(x) - u(y)) . grad(eta_eps)(y - x) dy.

    Splitting the parenthesis turns the integral into four windowed
    convolutions (two gradient components over rho and over rho u), plus a
    pointwise multiplication by u at the evaluation nodes.
    """
    grid = rho.grid
    region = _inner_region(grid, kernel.eps)
    t = float(rho.times[t_index])
    Kx, Ky, (OX, OY) = _stencil(kernel, grid)
    G1, G2 = kernel.grad(OX, OY)
    X, Y = grid.meshes()
    ux, uy = u.eval(X, Y, t)
    w = grid.quadrature_weights
    F = rho.layer(t_index) * w
    conv_b1 = _window_convolve(F, G1, Kx, Ky)
    conv_b2 = _window_convolve(F, G2, Kx, Ky)
    conv_u = _window_convolve(F * ux, G1, Kx, Ky) + _window_convolve(F * uy, G2, Kx, Ky)
    vals = ux * conv_b1 + uy * conv_b2 - conv_u
    return InnerLayer(grid, region, kernel.eps, t, vals, "remainder")


def _window_indices(grid: Grid, x0: float, y0: float, eps: float):
    i0 = max(0, int(np.ceil((x0 - eps - grid.domain.x_lo) / grid.hx - 1e-12)))
    i1 = min(grid.nx, int(np.floor((x0 + eps - grid.domain.x_lo) / grid.hx + 1e-12)))
    j0 = max(0, int(np.ceil((y0 - eps - grid.domain.y_lo) / grid.hy - 1e-12)))
    j1 = min(grid.ny, int(np.floor((y0 + eps - grid.domain.y_lo) / grid.hy + 1e-12)))
    return i0, i1, j0, j1


def mollify_at_points(
    rho: ScalarField, kernel: Kernel, t_index: int, xs, ys
) -> np.ndarray:
    """rho_eps at arbitrary interior points (same quadrature as the layer)."""
    grid = rho.grid
    F = rho.layer(t_index) * grid.quadrature_weights
    out = np.empty(np.asarray(xs, dtype=float).shape)
    flat = out.reshape(-1)
    for idx, (x0, y0) in enumerate(
        zip(np.asarray(xs, dtype=float).reshape(-1), np.asarray(ys, dtype=float).reshape(-1))
    ):
        i0, i1, j0, j1 = _window_indices(grid, x0, y0, kernel.eps)
        H = kernel.value(x0 - grid.xs[i0 : i1 + 1, None], y0 - grid.ys[None, j0 : j1 + 1])
        flat[idx] = np.sum(H * F[i0 : i1 + 1, j0 : j1 + 1])
    return out


def commutator_at_points(
    rho: ScalarField, u: VelocityField, kernel: Kernel, t_index: int, xs, ys
) -> np.ndarray:
    """r_eps at arbitrary interior points (same quadrature as the layer)."""
    grid = rho.grid
    t = float(rho.times[t_index])
    F = rho.layer(t_index) * grid.quadrature_weights
    X, Y = grid.meshes()
    u1, u2 = u.eval(X, Y, t)
    out = np.empty(np.asarray(xs, dtype=float).shape)
    flat = out.reshape(-1)
    for idx, (x0, y0) in enumerate(
        zip(np.asarray(xs, dtype=float).reshape(-1), np.asarray(ys, dtype=float).reshape(-1))
    ):
        i0, i1, j0, j1 = _window_indices(grid, x0, y0, kernel.eps)
        sl = np.s_[i0 : i1 + 1, j0 : j1 + 1]
        G1, G2 = kernel.grad(
            grid.xs[i0 : i1 + 1, None] - x0, grid.ys[None, j0 : j1 + 1] - y0
        )
        ux0, uy0 = u.eval(x0, y0, t)
        flat[idx] = np.sum(
            F[sl] * ((ux0 - u1[sl]) * G1 + (uy0 - u2[sl]) * G2)
        )
    return out


# ---------------------------------------------------------------------------
# Remainder decay study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RemainderCurve:
    """Decay of ||r_eps|| in L1 over time of L^gamma over an inner region."""

    eps: tuple[float, ...]
    norms: tuple[float, ...]
    gamma: float
    inner: Domain
    margin: float

    def __post_init__(self) -> None:
        e = np.asarray(self.eps)
        if e.size == 0 or np.any(np.diff(e) >= 0):
            raise WeakformError("eps values must be strictly decreasing")
        if any(n < 0 for n in self.norms):
            raise WeakformError("remainder norms cannot be negative")

    def to_json(self) -> dict:
        return {
            "eps": list(self.eps),
            "norms": list(self.norms),
            "gamma": self.gamma,
            "inner": [self.inner.x_lo, self.inner.y_lo, self.inner.x_hi, self.inner.y_hi],
            "margin": self.margin,
        }

    CSV_HEADER = ("eps", "norm", "gamma", "region_margin")

    def csv_rows(self) -> list[list[str]]:
        return [
            [repr(e), repr(n), repr(self.gamma), repr(self.margin)]
            for e, n in zip(self.eps, self.norms)
        ]


def _region_margin(inner: Domain, outer: Domain) -> float:
    return min(
        inner.x_lo - outer.x_lo,
        outer.x_hi - inner.x_hi,
        inner.y_lo - outer.y_lo,
        outer.y_hi - inner.y_hi,
    )


def gamma_exponent(alpha: float, p: float) -> float:
    """1/gamma = 1/alpha + 1/p (harmonic pairing of field and density)."""
    if alpha < 1.0 or p < 1.0:
        raise WeakformError(f"exponents must be >= 1, got alpha={alpha}, p={p}")
    inv = (0.0 if np.isinf(alpha) else 1.0 / alpha) + (0.0 if np.isinf(p) else 1.0 / p)
    if inv == 0.0:
        return np.inf
    gamma = 1.0 / inv
    if gamma < 1.0:
        raise WeakformError(
            f"1/gamma = 1/alpha + 1/p gives gamma = {gamma:.3g} < 1, "
            "not a norm exponent"
        )
    return gamma


def _lgamma_norm(values: np.ndarray, gamma: float, grid: Grid, region: Domain) -> float:
    if np.isinf(gamma):
        mask_x = (grid.xs >= region.x_lo) & (grid.xs <= region.x_hi)
        mask_y = (grid.ys >= region.y_lo) & (grid.ys <= region.y_hi)
        return float(np.max(np.abs(values[np.ix_(mask_x, mask_y)])))
    return float(integrate(np.abs(values) ** gamma, grid, region) ** (1.0 / gamma))


def remainder_decay_study(
    rho: ScalarField,
    u: VelocityField,
    eps_list: Sequence[float],
    alpha: float,
    p: float,
    inner: Domain,
    enforce: bool = True,
) -> RemainderCurve:
    """Measure ||r_eps||_{L1(time; L^gamma(inner))} along a decreasing sweep.

    The inner region must clear the boundary by more than the largest eps,
    so every remainder layer is genuinely a mollification statement there.
    The final norm must come out below the first (the decay the commutator
    estimate promises); anything else raises. Callers that want to report a
    failed decay rather than die on it pass enforce=False and inspect the
    curve themselves.
    """
    eps = [float(e) for e in eps_list]
    if len(eps) < 2 or any(b >= a for a, b in zip(eps, eps[1:])):
        raise WeakformError("eps_list must be strictly decreasing with >= 2 entries")
    gamma = gamma_exponent(alpha, p)
    margin = _region_margin(inner, rho.grid.domain)
    if margin <= max(eps):
        raise WeakformError(
            f"inner region margin {margin:.3g} must exceed the largest eps {max(eps):.3g}"
        )
    tw = _time_weights(rho.times) if rho.n_layers > 1 else np.array([1.0])
    norms = []
    for e in eps:
        kern = make_kernel(eps=e)
        total = 0.0
        for j in range(rho.n_layers):
            layer = commutator_remainder(rho, u, kern, j)
            total += float(tw[j]) * _lgamma_norm(layer.values, gamma, rho.grid, inner)
        norms.append(total)
    # a transport-free density has an identically zero remainder: that is
    # decay in the degenerate sense, not a failure
    if enforce and norms[-1] >= norms[0] and norms[-1] > 0.0:
        raise WeakformError(
            f"remainder norms failed to decay: first {norms[0]:.3e}, last {norms[-1]:.3e}"
        )
    return RemainderCurve(tuple(eps), tuple(norms), gamma, inner, margin)
