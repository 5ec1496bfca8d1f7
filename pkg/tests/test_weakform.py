"""Weak-form residuals, mollification, and commutator remainder checks."""

import numpy as np
import pytest

from transportlab.characteristics import solve_classical
from transportlab.fields import (
    AdmissibleBeta,
    ScalarField,
    TestFunction as SpaceTimeBump,
    VelocityField,
    beta_smooth_approx,
    beta_truncation,
    gaussian_blob,
    make_kernel,
    make_test_function,
    quadratic_decay_profile,
    static_field,
    vortex_field,
)
from transportlab.geometry import Grid, TimePartition, integrate, shrink, unit_square
from transportlab.weakform import (
    RemainderCurve,
    ResidualAccumulator,
    WeakformError,
    commutator_at_points,
    commutator_remainder,
    gamma_exponent,
    mollify_at_points,
    mollify_density,
    remainder_decay_study,
    renormalized_residual,
    streamed_weak_residuals,
    weak_residual,
)

DOM = unit_square()

# Probe points kept off the y = 0.5 symmetry line of the standard vortex,
# where the remainder vanishes identically and relative errors lose meaning.
PROBES_X = np.array([0.55, 0.68, 0.52])
PROBES_Y = np.array([0.45, 0.54, 0.61])

# Windowed trapezoid quadrature of int rho(y) eta_eps(x - y) dy for the
# standard Gaussian blob, eps = 0.05, on a 1024^2 grid (4x the test grid;
# a further doubling moves these by ~1e-10).
MOLL_ORACLE = np.array([0.655976986899, 0.524970173624, 0.240649831466])

# Same quadrature for int rho(y) (u(x)-u(y)) . grad(eta_eps)(y-x) dy with
# the standard vortex, eps = 0.05, on a 2560^2 grid (stable to ~2e-7
# relative against the 1280^2 pass).
COMM_ORACLE = np.array([0.031028790616, 0.018246945954, -0.006040439906])


def off_center_phi(T: float = 1.0) -> SpaceTimeBump:
    return make_test_function((0.62, 0.44), 0.22, quadratic_decay_profile(T), DOM)


def constant_beta(c: float = 0.7) -> AdmissibleBeta:
    return AdmissibleBeta(
        f"const[{c:g}]",
        lambda s: np.full_like(np.asarray(s, dtype=float), c),
        lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        c,
        True,
    )


def small_solution(n=64, nt=50, field=None):
    grid = Grid(DOM, n, n)
    times = TimePartition(1.0, nt)
    u = vortex_field(DOM) if field is None else field
    rho0 = static_field(grid, gaussian_blob())
    return grid, times, u, rho0, solve_classical(rho0, u, times)


# ---------------------------------------------------------------------------
# Weak residuals
# ---------------------------------------------------------------------------


def test_still_field_residual_telescopes():
    # u = 0 freezes the density, the advective term vanishes, and the time
    # trapezoid integrates the linear psi' exactly, so the time and initial
    # terms cancel to machine precision.
    _, _, u, rho0, sol = small_solution(64, 20, field=VelocityField((), DOM))
    rep = weak_residual(sol, rho0, u, off_center_phi())
    assert rep.residual < 1e-14
    assert abs(rep.term_time) > 1e-3
    assert abs(rep.term_initial) > 1e-3
    assert rep.term_advective == 0.0


def test_classical_solution_residual_small_and_refines(half_case):
    grid, times, u, rho0, sol = small_solution(64, 250)
    phi = off_center_phi()
    coarse = weak_residual(sol, rho0, u, phi).residual
    r0_half = ScalarField(half_case.grid, half_case.times.times[:1], half_case.rho.values[:1])
    fine = weak_residual(half_case.rho, r0_half, half_case.u, phi).residual
    assert coarse < 1e-3
    assert fine < 1e-4
    assert fine < coarse / 2.5


def test_scaled_solution_residual_large(half_case):
    # Multiplying the solution while keeping rho0 breaks the identity by an
    # O(1) margin: the initial term no longer cancels the time term.
    rho = half_case.rho
    scaled = ScalarField(rho.grid, rho.times, 1.5 * rho.values)
    r0 = ScalarField(rho.grid, rho.times[:1], rho.values[:1])
    rep = weak_residual(scaled, r0, half_case.u, off_center_phi())
    assert rep.residual > 1e-2


def test_report_metadata_and_invariant():
    _, _, u, rho0, sol = small_solution(48, 20)
    rep = weak_residual(sol, rho0, u, off_center_phi())
    assert rep.residual == abs(rep.term_time + rep.term_initial + rep.term_advective)
    assert (rep.nx, rep.ny, rep.nt) == (48, 48, 20)
    assert rep.phi.startswith("bump[0.62,0.44")
    assert rep.beta is None
    blob = rep.to_json()
    assert blob["grid"] == [48, 48] and blob["nt"] == 20
    assert blob["residual"] == rep.residual
    assert len(rep.csv_row()) == len(rep.CSV_HEADER)


def test_residual_terms_are_linear():
    grid = Grid(DOM, 32, 32)
    times = np.linspace(0.0, 1.0, 4)
    X, Y = grid.meshes()
    layers_a = np.stack([(1 + t) * np.sin(np.pi * X) * np.sin(np.pi * Y) for t in times])
    layers_b = np.stack([np.exp(-t) * X * (1 - Y) for t in times])
    fa = ScalarField(grid, times, layers_a)
    fb = ScalarField(grid, times, layers_b)
    fab = ScalarField(grid, times, layers_a + layers_b)
    u = vortex_field(DOM)
    phi = off_center_phi()
    ra = weak_residual(fa, ScalarField(grid, times[:1], layers_a[:1]), u, phi)
    rb = weak_residual(fb, ScalarField(grid, times[:1], layers_b[:1]), u, phi)
    rab = weak_residual(fab, ScalarField(grid, times[:1], (layers_a + layers_b)[:1]), u, phi)
    assert rab.term_time == pytest.approx(ra.term_time + rb.term_time, abs=1e-13)
    assert rab.term_initial == pytest.approx(ra.term_initial + rb.term_initial, abs=1e-13)
    assert rab.term_advective == pytest.approx(
        ra.term_advective + rb.term_advective, abs=1e-13
    )


def test_residual_validation():
    grid, times, u, rho0, sol = small_solution(32, 10)
    other = make_test_function(
        (0.5, 0.5), 0.2, quadratic_decay_profile(1.0), shrink(DOM, 0.01)
    )
    with pytest.raises(WeakformError):
        weak_residual(sol, rho0, u, other)
    touching = SpaceTimeBump((0.9, 0.5), 0.3, 1.0, quadratic_decay_profile(1.0), DOM)
    with pytest.raises(WeakformError):
        weak_residual(sol, rho0, u, touching)
    late = make_test_function((0.5, 0.5), 0.2, quadratic_decay_profile(2.0), DOM)
    with pytest.raises(WeakformError):
        weak_residual(sol, rho0, u, late)
    single = ScalarField(grid, sol.times[:1], sol.values[:1])
    with pytest.raises(WeakformError):
        weak_residual(single, rho0, u, off_center_phi())


def test_accumulator_requires_ordered_complete_layers():
    grid, times, u, rho0, sol = small_solution(32, 5)
    acc = ResidualAccumulator(grid, sol.times, u, off_center_phi())
    with pytest.raises(WeakformError):
        acc.add_layer(1, sol.layer(1))
    acc.add_layer(0, sol.layer(0))
    with pytest.raises(WeakformError):
        acc.report(rho0.layer(0))


def test_streamed_matches_stored():
    grid, times, u, rho0, sol = small_solution(64, 50)
    phis = [off_center_phi(), make_test_function((0.4, 0.58), 0.18, quadratic_decay_profile(1.0), DOM)]
    betas = [None, beta_smooth_approx(1.0, 10)]
    streamed = streamed_weak_residuals(rho0, u, times, phis, betas)
    for rep, phi, beta in zip(streamed, phis, betas):
        ref = weak_residual(sol, rho0, u, phi, beta=beta)
        assert rep.term_time == ref.term_time
        assert rep.term_initial == ref.term_initial
        assert rep.term_advective == ref.term_advective


# ---------------------------------------------------------------------------
# Renormalized residuals
# ---------------------------------------------------------------------------


def test_identity_clip_renormalization_matches_plain(half_case):
    r0 = ScalarField(half_case.grid, half_case.rho.times[:1], half_case.rho.values[:1])
    phi = off_center_phi()
    plain = weak_residual(half_case.rho, r0, half_case.u, phi)
    clipped = renormalized_residual(
        half_case.rho, r0, half_case.u, beta_truncation(10.0), phi
    )
    # clipping at a level above max|rho| is the identity on every layer
    assert clipped.term_time == plain.term_time
    assert clipped.term_initial == plain.term_initial
    assert clipped.term_advective == plain.term_advective
    assert clipped.beta is not None


def test_smooth_clip_renormalization_small(half_case):
    r0 = ScalarField(half_case.grid, half_case.rho.times[:1], half_case.rho.values[:1])
    rep = renormalized_residual(
        half_case.rho, r0, half_case.u, beta_smooth_approx(1.0, 10), off_center_phi()
    )
    assert rep.residual < 1e-3


def test_constant_beta_residual_vanishes(half_case):
    # beta(rho) constant in space and time: the time and initial terms
    # telescope and the advective term is the integral of a divergence.
    r0 = ScalarField(half_case.grid, half_case.rho.times[:1], half_case.rho.values[:1])
    rep = renormalized_residual(
        half_case.rho, r0, half_case.u, constant_beta(), off_center_phi()
    )
    assert rep.residual < 1e-6


# ---------------------------------------------------------------------------
# Mollification
# ---------------------------------------------------------------------------


def test_mollify_reproduces_constants_and_linears():
    grid = Grid(DOM, 256, 256)
    kern = make_kernel(eps=0.1)
    const = mollify_density(static_field(grid, lambda x, y: 3.0 + 0.0 * x), kern)
    assert const.kind == "mollified"
    assert const.eps == 0.1
    assert const.region == shrink(DOM, 0.1)
    in_x = (grid.xs >= const.region.x_lo) & (grid.xs <= const.region.x_hi)
    in_y = (grid.ys >= const.region.y_lo) & (grid.ys <= const.region.y_hi)
    box = np.ix_(in_x, in_y)
    assert np.max(np.abs(const.values[box] - 3.0)) < 1e-6
    linear = mollify_density(static_field(grid, lambda x, y: x + 0.0 * y), kern)
    X, Y = grid.meshes()
    assert np.max(np.abs(linear.values - X)[box]) < 1e-6


def test_mollify_gaussian_matches_refined_quadrature():
    grid = Grid(DOM, 256, 256)
    rho = static_field(grid, gaussian_blob())
    got = mollify_at_points(rho, make_kernel(eps=0.05), 0, PROBES_X, PROBES_Y)
    assert np.max(np.abs(got - MOLL_ORACLE)) < 1e-4


def test_mollify_at_points_matches_layer_nodes():
    grid = Grid(DOM, 64, 64)
    rho = static_field(grid, gaussian_blob())
    kern = make_kernel(eps=0.1)
    layer = mollify_density(rho, kern)
    i = [19, 32, 40]
    j = [26, 32, 49]
    pts = mollify_at_points(rho, kern, 0, grid.xs[i], grid.ys[j])
    assert np.max(np.abs(pts - layer.values[i, j])) < 1e-14


def test_mollify_scale_must_leave_interior():
    grid = Grid(DOM, 32, 32)
    rho = static_field(grid, gaussian_blob())
    with pytest.raises(WeakformError):
        mollify_density(rho, make_kernel(eps=0.5))


def test_mollification_contracts_lp_norms():
    grid = Grid(DOM, 128, 128)
    rho = static_field(grid, gaussian_blob())
    layer = mollify_density(rho, make_kernel(eps=0.1))
    base = rho.layer(0)
    for p in (1.0, 2.0):
        inner = integrate(np.abs(layer.values) ** p, grid, layer.region) ** (1 / p)
        full = integrate(np.abs(base) ** p, grid) ** (1 / p)
        assert inner <= full
    in_x = (grid.xs >= layer.region.x_lo) & (grid.xs <= layer.region.x_hi)
    in_y = (grid.ys >= layer.region.y_lo) & (grid.ys <= layer.region.y_hi)
    assert np.max(np.abs(layer.values[np.ix_(in_x, in_y)])) <= np.max(np.abs(base))


def test_mollified_density_converges_as_eps_shrinks():
    grid = Grid(DOM, 256, 256)
    rho = static_field(grid, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    base = rho.layer(0)
    omega0 = shrink(DOM, 0.2)
    for p in (1.0, 2.0):
        diffs = []
        for eps in (0.16, 0.08, 0.04, 0.02):
            layer = mollify_density(rho, make_kernel(eps=eps))
            diffs.append(
                integrate(np.abs(layer.values - base) ** p, grid, omega0) ** (1 / p)
            )
        assert all(b < a for a, b in zip(diffs, diffs[1:]))
        assert diffs[-1] < 1e-3


# ---------------------------------------------------------------------------
# Commutator remainder
# ---------------------------------------------------------------------------


def test_commutator_vanishes_for_degenerate_inputs():
    grid = Grid(DOM, 64, 64)
    kern = make_kernel(eps=0.1)
    zero_rho = static_field(grid, lambda x, y: 0.0 * x)
    rem = commutator_remainder(zero_rho, vortex_field(DOM), kern)
    assert np.max(np.abs(rem.values)) == 0.0
    rho = static_field(grid, gaussian_blob())
    rem = commutator_remainder(rho, VelocityField((), DOM), kern)
    assert np.max(np.abs(rem.values)) == 0.0
    assert rem.kind == "remainder"


def test_commutator_matches_refined_quadrature():
    grid = Grid(DOM, 1280, 1280)
    rho = static_field(grid, gaussian_blob())
    got = commutator_at_points(
        rho, vortex_field(DOM), make_kernel(eps=0.05), 0, PROBES_X, PROBES_Y
    )
    assert np.max(np.abs(got - COMM_ORACLE) / np.abs(COMM_ORACLE)) < 1e-4


def test_commutator_at_points_matches_layer_nodes():
    grid = Grid(DOM, 64, 64)
    rho = static_field(grid, gaussian_blob())
    u = vortex_field(DOM)
    kern = make_kernel(eps=0.1)
    layer = commutator_remainder(rho, u, kern)
    i = [19, 32, 40]
    j = [26, 32, 49]
    pts = commutator_at_points(rho, u, kern, 0, grid.xs[i], grid.ys[j])
    assert np.max(np.abs(pts - layer.values[i, j])) < 1e-14


def test_weak_residual_of_mollified_equals_remainder_pairing():
    # Mollifying a transport solution leaves exactly the commutator as a
    # source: the weak residual of rho_eps and the space-time pairing of
    # r_eps with phi are two independently computed routes to one number.
    n, nt, eps = 128, 80, 0.1
    grid, times, u, rho0, sol = small_solution(n, nt)
    kern = make_kernel(eps=eps)
    phi = off_center_phi()
    moll = np.stack([mollify_density(sol, kern, j).values for j in range(sol.n_layers)])
    moll_field = ScalarField(grid, sol.times, moll)
    moll0 = ScalarField(grid, sol.times[:1], moll[:1])
    rep = weak_residual(moll_field, moll0, u, phi)
    lhs = rep.term_time + rep.term_initial + rep.term_advective

    X, Y = grid.meshes()
    phi_sp = phi.spatial(X, Y)
    tw = np.empty(sol.n_layers)
    tw[1:-1] = 0.5 * (sol.times[2:] - sol.times[:-2])
    tw[0] = 0.5 * (sol.times[1] - sol.times[0])
    tw[-1] = 0.5 * (sol.times[-1] - sol.times[-2])
    rhs = 0.0
    for j in range(sol.n_layers):
        rem = commutator_remainder(sol, u, kern, j)
        psi = float(phi.time_profile.value(sol.times[j]))
        rhs += tw[j] * psi * integrate(rem.values * phi_sp, grid)

    # magnitudes large enough for the comparison to carry information; a
    # sign error in either route would show up as a gap of ~2|rhs|
    assert abs(lhs) > 1e-4 and abs(rhs) > 1e-4
    assert lhs < 0.0 and rhs < 0.0
    assert abs(lhs - rhs) < 5e-5


# ---------------------------------------------------------------------------
# Remainder decay
# ---------------------------------------------------------------------------


def test_remainder_decay_for_classical_solution():
    grid, times, u, rho0, sol = small_solution(128, 10)
    inner = shrink(DOM, 0.12)
    curve = remainder_decay_study(sol, u, [0.1, 0.05, 0.025], 2.0, 2.0, inner)
    assert curve.gamma == 1.0
    assert curve.inner == inner
    assert curve.margin == pytest.approx(0.12)
    assert all(b < a for a, b in zip(curve.norms, curve.norms[1:]))
    assert curve.norms[-1] / curve.norms[0] < 0.5
    slope = np.polyfit(np.log(curve.eps), np.log(curve.norms), 1)[0]
    assert slope >= 1.0
    rows = curve.csv_rows()
    assert len(rows) == 3 and all(len(r) == len(curve.CSV_HEADER) for r in rows)
    blob = curve.to_json()
    assert blob["gamma"] == 1.0 and len(blob["eps"]) == 3


def test_remainder_decay_still_field_is_identically_zero():
    grid = Grid(DOM, 64, 64)
    rho = static_field(grid, gaussian_blob())
    curve = remainder_decay_study(
        rho, VelocityField((), DOM), [0.1, 0.05], 2.0, 2.0, shrink(DOM, 0.15)
    )
    assert curve.norms == (0.0, 0.0)


def test_remainder_decay_rejects_rough_density():
    # White noise is the regime where the commutator estimate has no
    # business holding; the measured norms grow as eps shrinks.
    grid = Grid(DOM, 64, 64)
    rng = np.random.default_rng(7)
    rho = ScalarField(grid, np.array([0.0]), rng.standard_normal(grid.shape)[None])
    with pytest.raises(WeakformError, match="decay"):
        remainder_decay_study(
            rho, vortex_field(DOM), [0.2, 0.1, 0.05], 2.0, 2.0, shrink(DOM, 0.25)
        )


def test_remainder_decay_validation():
    grid = Grid(DOM, 32, 32)
    rho = static_field(grid, gaussian_blob())
    u = vortex_field(DOM)
    inner = shrink(DOM, 0.2)
    with pytest.raises(WeakformError):
        remainder_decay_study(rho, u, [0.05, 0.1], 2.0, 2.0, inner)
    with pytest.raises(WeakformError):
        remainder_decay_study(rho, u, [0.3, 0.1], 2.0, 2.0, inner)
    with pytest.raises(WeakformError):
        remainder_decay_study(rho, u, [0.1, 0.05], 1.0, 2.0, inner)


def test_gamma_exponent_pairing():
    assert gamma_exponent(2.0, 2.0) == 1.0
    assert gamma_exponent(np.inf, 2.0) == 2.0
    assert gamma_exponent(2.0, np.inf) == 2.0
    assert gamma_exponent(np.inf, np.inf) == np.inf
    with pytest.raises(WeakformError):
        gamma_exponent(1.0, 2.0)
    with pytest.raises(WeakformError):
        gamma_exponent(0.5, 2.0)


def test_remainder_curve_validation():
    inner = shrink(DOM, 0.2)
    with pytest.raises(WeakformError):
        RemainderCurve((0.1, 0.1), (1.0, 0.5), 1.0, inner, 0.2)
    with pytest.raises(WeakformError):
        RemainderCurve((0.1, 0.05), (1.0, -0.5), 1.0, inner, 0.2)
