import math

import numpy as np
import pytest

from magrod.analytic import hyperbolic_equilibria
from magrod.errors import NoEquilibrium, TangencyDetected
from magrod.flow import PSI, RodFlow, Section
from magrod.manifolds import (
    STABLE,
    UNSTABLE,
    BvpSetup,
    ManifoldOrbit,
    ManifoldSheet,
    complete_seed,
    detect_homoclinic,
    hausdorff_distance,
    hull_area,
    invariant_curve_residual,
    poincare_map,
    refine_equilibrium,
    solve_manifold_bvp,
    slice_sheet,
    splitting_gap,
)
from magrod.model import Params, first_integral, hamiltonian, vector_field

from conftest import REFERENCE, manifold_pair

REVERSAL = np.array([1.0, -1.0, -1.0, 1.0])


def test_refined_equilibrium_sits_on_symmetry_line():
    eq = refine_equilibrium(REFERENCE)
    assert eq.state[PSI] == 0.0 and eq.state[2] == 0.0
    assert np.max(np.abs(vector_field(eq.state, REFERENCE))) < 1e-12
    re = np.sort(eq.eigenvalues.real)
    assert re[0] == pytest.approx(-re[3], rel=1e-8)


def test_refinement_reproduces_closed_form_when_unperturbed():
    p = Params(0.5, 0.1)
    for which in (1, 2):
        eq = refine_equilibrium(p, which=which)
        ref = hyperbolic_equilibria(0.5, 0.1)[which - 1]
        np.testing.assert_allclose(eq.state, ref.state, atol=1e-10)
        np.testing.assert_allclose(np.sort_complex(eq.eigenvalues), np.sort_complex(ref.eigenvalues), atol=1e-8)


@pytest.mark.parametrize("mu", [0.019, 0.02, 0.0])
def test_no_equilibrium_below_threshold(mu):
    with pytest.raises(NoEquilibrium):
        refine_equilibrium(Params.scaled(0.5, mu, 0.01, 0.01))


def test_frames_annihilate_opposite_eigenvectors():
    eq = refine_equilibrium(REFERENCE)
    vals = eq.eigenvalues
    # right eigenvectors from the Jacobian, independent of the stored frames
    w, v = np.linalg.eig(eq.jacobian)
    for k in range(4):
        frame = eq.stable_frame if w[k].real > 0 else eq.unstable_frame
        assert np.max(np.abs(frame @ v[:, k])) < 1e-8
    assert np.all(np.abs(np.sort(np.abs(vals.real)) - np.abs(vals.real).max()) < 1e-8)


def test_bvp_at_equilibrium_is_constant():
    eq = refine_equilibrium(REFERENCE)
    orb = solve_manifold_bvp(BvpSetup(eq, UNSTABLE, 5.0, eq.state.copy(), free_time=False))
    assert np.max(np.abs(orb.nodes - eq.state)) < 1e-14


@pytest.mark.parametrize("side", [UNSTABLE, STABLE])
def test_bvp_matches_linear_manifold_to_second_order(side):
    eq = refine_equilibrium(REFERENCE)
    plane = eq.unstable_plane if side == UNSTABLE else eq.stable_plane
    errs = []
    for r in (1e-3, 5e-4):
        d = r * plane[0]
        setup = BvpSetup(eq, side, 10.0, eq.state + d)
        orb = solve_manifold_bvp(setup)
        errs.append(np.max(np.abs(orb.endpoint - eq.state - d)))
        frame_res, radius = orb.boundary_residuals(setup.frame)
        assert frame_res < 1e-12 and radius == pytest.approx(1e-5, rel=1e-6)
    # halving the radius quarters the deviation from the eigenplane
    assert errs[1] / errs[0] == pytest.approx(0.25, abs=0.03)


def test_sheets_continue_far_and_stay_on_energy_level(perturbed_manifolds):
    p, eq, sheets, _ = perturbed_manifolds
    h0 = hamiltonian(eq.state, p)
    for side, sheet in sheets.items():
        assert len(sheet.orbits) > 100, sheet.stall_reason
        assert np.max(np.abs(sheet.energies() - h0)) < 1e-8
        for orb in sheet.orbits[::20]:
            frame = eq.stable_frame if side == UNSTABLE else eq.unstable_frame
            frame_res, radius = orb.boundary_residuals(frame)
            assert frame_res < 1e-9 and radius == pytest.approx(sheet.seed_radius, rel=1e-6)
            assert orb.residual < 1e-9
            assert Section.psi().on_section(orb.endpoint, 1e-9)


def test_integrable_sheets_conserve_first_integral(integrable_manifolds):
    p, eq, sheets, _ = integrable_manifolds
    f0 = first_integral(eq.state, p)
    for sheet in sheets.values():
        values = np.array([first_integral(o.endpoint, p) for o in sheet.orbits])
        assert np.max(np.abs(values - f0)) < 1e-6


def test_stable_slice_is_reversal_of_unstable(perturbed_manifolds):
    # R(theta, psi, p_theta, p_psi) = (theta, -psi, -p_theta, p_psi) maps W^u onto W^s
    _, _, _, slices = perturbed_manifolds
    wu, ws = slices[UNSTABLE].curve(), slices[STABLE].curve()
    n = min(len(wu), len(ws), 100)
    mirrored = wu[:n] * REVERSAL
    mirrored[:, PSI] = np.remainder(mirrored[:, PSI] + math.pi, 2 * math.pi) - math.pi
    ws_wrapped = ws[:n].copy()
    ws_wrapped[:, PSI] = np.remainder(ws_wrapped[:, PSI] + math.pi, 2 * math.pi) - math.pi
    np.testing.assert_allclose(mirrored, ws_wrapped, atol=1e-7)


def test_slices_record_end_points_and_crossings(perturbed_manifolds):
    _, _, _, slices = perturbed_manifolds
    sl = slices[UNSTABLE]
    sec = sl.section
    sheet = sl.sheet
    assert sl.terminal.sum() == len(sheet.orbits)
    ends = np.array([o.T for o in sheet.orbits])
    np.testing.assert_allclose(sl.t_cross[sl.terminal], ends[sl.orbit_id[sl.terminal]])
    # long orbits wind around and cross the section before their end point
    assert np.any(~sl.terminal)
    for y in sl.states[::25]:
        assert sec.on_section(y, 1e-9)
    assert np.all(np.diff(sl.curve()[:, 0]) != 0)


def test_slice_keeps_start_point_on_section():
    eq = refine_equilibrium(REFERENCE)
    x0 = np.array([1.2, 0.0, 0.1, 0.9])
    assert vector_field(x0, REFERENCE)[PSI] > 0
    end = RodFlow(REFERENCE)(x0, 0.0, 2.0)
    orb = ManifoldOrbit(UNSTABLE, x0[None, :], 2.0, end, 0.0, eq)
    sl = slice_sheet(ManifoldSheet(UNSTABLE, eq, Section.psi(), [orb]))
    k = np.nonzero(sl.t_cross == 0.0)[0]
    assert len(k) == 1 and np.array_equal(sl.states[k[0]], x0)


def test_transverse_homoclinic_at_reference_parameters(perturbed_manifolds):
    p, eq, sheets, slices = perturbed_manifolds
    hom = detect_homoclinic(slices[STABLE], slices[UNSTABLE], p)
    assert hom.transverse and hom.angle > 1e-3
    assert max(hom.end_residuals) < 1e-4
    # the symmetric homoclinic crosses psi = 0 with p_theta = 0
    assert hom.crossing[2] == pytest.approx(0.0, abs=1e-6)
    assert hom.T_u == pytest.approx(hom.T_s, rel=1e-6)
    assert hom.time[0] == pytest.approx(-hom.T_u) and hom.time[-1] == pytest.approx(hom.T_s)
    # the glued states follow the flow
    flow = RodFlow(p)
    k = len(hom.time) // 3
    np.testing.assert_allclose(flow(hom.states[k], hom.time[k], hom.time[k + 50]), hom.states[k + 50],
                               atol=1e-6)


def test_integrable_slices_coincide(integrable_manifolds):
    p, eq, sheets, slices = integrable_manifolds
    with pytest.raises(TangencyDetected):
        detect_homoclinic(slices[STABLE], slices[UNSTABLE], p)
    assert hausdorff_distance(slices[STABLE], slices[UNSTABLE]) < 1e-5


def test_perturbation_separates_slices(perturbed_manifolds, integrable_manifolds):
    gap = splitting_gap(perturbed_manifolds[3][STABLE], perturbed_manifolds[3][UNSTABLE])
    flat = splitting_gap(integrable_manifolds[3][STABLE], integrable_manifolds[3][UNSTABLE])
    assert gap > 1e-3 > 1e-5 > flat


def test_gap_linear_in_eps_without_extensibility_coupling():
    eps = np.array([0.0025, 0.005, 0.01])
    gaps = []
    for e in eps:
        _, _, _, slices = manifold_pair(float(e), 0.0)
        gaps.append(splitting_gap(slices[STABLE], slices[UNSTABLE]))
    gaps = np.array(gaps)
    slope = eps @ gaps / (eps @ eps)
    r2 = 1 - np.sum((gaps - slope * eps) ** 2) / np.sum((gaps - gaps.mean()) ** 2)
    assert r2 > 0.95


def test_complete_seed_lands_on_level():
    p = REFERENCE
    eq = refine_equilibrium(p)
    h = hamiltonian(eq.state, p)
    x = complete_seed(1.5, 0.0, h, p)
    assert hamiltonian(x, p) == pytest.approx(h, abs=1e-12)
    assert vector_field(x, p)[PSI] > 0


def test_poincare_integrable_orbits_trace_curves():
    p = Params(0.5, 0.1, 0.01)
    eq = refine_equilibrium(p)
    h = hamiltonian(eq.state, p)
    for seed in ((1.5, 0.0), (2.0, 0.0)):
        pts = poincare_map(p, h, Section.psi(), [seed], 300)
        assert len(pts) == 300
        xy = pts.states[:, [0, 2]]
        assert invariant_curve_residual(xy) < 1e-5
        assert np.max(np.abs([first_integral(y, p) - first_integral(pts.states[0], p) for y in pts.states])) < 1e-8


def test_poincare_chaotic_orbit_fills_area():
    p = REFERENCE
    eq = refine_equilibrium(p)
    h = hamiltonian(eq.state, p)
    pts = poincare_map(p, h, Section.psi(), [(2.25, 0.0)], 500)
    xy = pts.states[:, [0, 2]]
    assert hull_area(xy) > 1e-2
    assert invariant_curve_residual(xy) > 1e-3


def test_poincare_equilibrium_is_fixed():
    eq = refine_equilibrium(REFERENCE)
    pts = poincare_map(REFERENCE, hamiltonian(eq.state, REFERENCE), Section.psi(), [eq.state], 5)
    np.testing.assert_array_equal(pts.states, np.tile(eq.state, (5, 1)))
