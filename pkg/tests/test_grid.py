import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chemotaxis.grid import (
    FaceFluxField,
    GridSpec,
    ScalarField,
    divergence,
    field_stats,
    gradient_energy,
    gradient_faces,
    inner,
    integrate,
    laplacian_neumann,
    read_field,
    write_field,
)

DOMAIN_GRID = GridSpec(64, 64, 0.1, 0.1)


def test_gridspec_derived_sizes():
    g = GridSpec(8, 4, 0.1, 0.2)
    assert g.hx == pytest.approx(0.0125)
    assert g.hy == pytest.approx(0.05)
    assert g.area == pytest.approx(0.02)
    assert g.shape == (4, 8)


@pytest.mark.parametrize("nx,ny,lx", [(1, 4, 1.0), (4, 1, 1.0), (4, 4, 0.0), (4, 4, -1.0)])
def test_gridspec_rejects_invalid(nx, ny, lx):
    with pytest.raises(ValueError):
        GridSpec(nx, ny, lx, 1.0)


def test_scalarfield_row_major_layout():
    g = GridSpec(3, 2, 1.0, 1.0)
    f = ScalarField(g, np.arange(6.0))
    # cell (i=2, j=1) is flat index j*nx + i = 5
    assert f.values[1, 2] == 5.0
    assert f.flat()[1 * 3 + 2] == 5.0


def test_scalarfield_wrong_length():
    with pytest.raises(ValueError):
        ScalarField(GridSpec(3, 3), np.zeros(8))


class TestIntegrate:
    def test_constant_on_reference_domain(self):
        assert integrate(ScalarField.constant(DOMAIN_GRID, 7.0)) == pytest.approx(0.07, rel=1e-14)

    def test_zero(self):
        assert integrate(ScalarField.constant(DOMAIN_GRID, 0.0)) == 0.0

    def test_two_by_two_hand_sum(self):
        f = ScalarField(GridSpec(2, 2, 1.0, 1.0), [1.0, 2.0, 3.0, 4.0])
        assert integrate(f) == pytest.approx(2.5, rel=1e-15)


class TestLaplacian:
    def test_constant_is_annihilated(self):
        lap = laplacian_neumann(ScalarField.constant(DOMAIN_GRID, 3.7))
        assert np.all(lap.values == 0.0)

    def test_center_spike_hand_stencil(self):
        g = GridSpec(3, 3, 3.0, 3.0)
        f = np.zeros((3, 3))
        f[1, 1] = 1.0
        lap = laplacian_neumann(ScalarField(g, f)).values
        expected = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=float)
        np.testing.assert_array_equal(lap, expected)

    def test_corner_spike_mirror_ghosts(self):
        # mirror ghost = own value, so a corner cell only loses to its two neighbours
        g = GridSpec(3, 3, 3.0, 3.0)
        f = np.zeros((3, 3))
        f[0, 0] = 1.0
        lap = laplacian_neumann(ScalarField(g, f)).values
        assert lap[0, 0] == -2.0
        assert lap[0, 1] == 1.0 and lap[1, 0] == 1.0

    def test_matches_explicit_ghost_stencil(self):
        rng = np.random.default_rng(3)
        g = GridSpec(7, 5, 0.7, 0.3)
        a = rng.normal(size=g.shape)
        p = np.pad(a, 1, mode="edge")  # ghost = adjacent interior value
        ref = (p[1:-1, 2:] - 2 * a + p[1:-1, :-2]) / g.hx**2 + (p[2:, 1:-1] - 2 * a + p[:-2, 1:-1]) / g.hy**2
        np.testing.assert_allclose(laplacian_neumann(ScalarField(g, a)).values, ref, rtol=1e-12, atol=1e-9)

    def test_is_divergence_of_gradient(self):
        rng = np.random.default_rng(0)
        f = ScalarField(DOMAIN_GRID, rng.random(DOMAIN_GRID.shape))
        np.testing.assert_array_equal(
            laplacian_neumann(f).values, divergence(gradient_faces(f)).values
        )

    def test_second_order_on_smooth_neumann_data(self):
        errs = []
        for n in (16, 32, 64):
            g = GridSpec(n, n, 1.0, 1.0)
            f = ScalarField.from_function(g, lambda x, y: np.cos(np.pi * x) * np.cos(2 * np.pi * y))
            exact = -5 * np.pi**2 * f.values
            errs.append(np.abs(laplacian_neumann(f).values - exact).max())
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders > 1.9)


class TestGradientDivergence:
    def test_constant_gradient_zero(self):
        F = gradient_faces(ScalarField.constant(DOMAIN_GRID, 2.0))
        assert F.max_abs() == 0.0

    def test_single_interior_face(self):
        # two identical rows of {0, 3} with hx = 1
        g = GridSpec(2, 2, 2.0, 2.0)
        F = gradient_faces(ScalarField(g, [0.0, 3.0, 0.0, 3.0]))
        np.testing.assert_array_equal(F.fx, [[0.0, 3.0, 0.0], [0.0, 3.0, 0.0]])
        assert np.all(F.fy == 0.0)

    def test_divergence_telescopes_by_hand(self):
        g = GridSpec(2, 2, 2.0, 2.0)
        F = FaceFluxField(g, [[0, 3, 0], [0, 3, 0]], np.zeros((3, 2)))
        np.testing.assert_array_equal(divergence(F).values, [[3.0, -3.0], [3.0, -3.0]])

    def test_zero_flux_divergence(self):
        assert np.all(divergence(FaceFluxField.zeros(DOMAIN_GRID)).values == 0.0)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (9, 6), elements=st.floats(-1e3, 1e3)))
    def test_gradient_boundary_faces_vanish(self, a):
        F = gradient_faces(ScalarField(GridSpec(6, 9, 0.3, 0.2), a))
        assert F.boundary_is_zero()


@settings(max_examples=100, deadline=None)
@given(
    nx=st.integers(2, 20),
    ny=st.integers(2, 20),
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(1e-3, 1e6),
)
def test_divergence_conservative(nx, ny, seed, scale):
    rng = np.random.default_rng(seed)
    g = GridSpec(nx, ny, 0.1, 0.1)
    fx = rng.normal(size=(ny, nx + 1)) * scale
    fy = rng.normal(size=(ny + 1, nx)) * scale
    fx[:, [0, -1]] = 0.0
    fy[[0, -1], :] = 0.0
    F = FaceFluxField(g, fx, fy)
    bound = 1e-12 * F.max_abs() * 2 * (g.lx + g.ly)
    assert abs(integrate(divergence(F))) <= bound


@settings(max_examples=100, deadline=None)
@given(nx=st.integers(2, 16), ny=st.integers(2, 16), seed=st.integers(0, 2**32 - 1))
def test_laplacian_self_adjoint(nx, ny, seed):
    rng = np.random.default_rng(seed)
    g = GridSpec(nx, ny, 0.1, 0.05)
    f = ScalarField(g, rng.normal(size=g.shape))
    h = ScalarField(g, rng.normal(size=g.shape))
    lhs = inner(laplacian_neumann(f), h)
    rhs = inner(f, laplacian_neumann(h))
    scale = np.sqrt(abs(inner(laplacian_neumann(f), laplacian_neumann(f))) * inner(h, h))
    assert abs(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_integral_of_laplacian_vanishes(seed):
    rng = np.random.default_rng(seed)
    f = ScalarField(DOMAIN_GRID, rng.normal(size=DOMAIN_GRID.shape))
    lap = laplacian_neumann(f)
    assert abs(integrate(lap)) <= 1e-12 * np.abs(lap.values).sum() * DOMAIN_GRID.cell_area


def test_gradient_energy_is_minus_inner_with_laplacian():
    rng = np.random.default_rng(11)
    f = ScalarField(GridSpec(12, 9, 0.1, 0.1), rng.random((9, 12)))
    assert gradient_energy(f) == pytest.approx(-inner(f, laplacian_neumann(f)), rel=1e-12)


class TestFieldStats:
    def test_constant(self):
        s = field_stats(ScalarField.constant(DOMAIN_GRID, 4.5))
        assert s.min == s.max == s.mean == 4.5

    def test_l1_of_plus_minus_one(self):
        g = GridSpec(2, 2, 1.0, 1.0)
        s = field_stats(ScalarField(g, [-1.0, 1.0, -1.0, 1.0]))
        assert s.l1 == pytest.approx(g.cell_area * 4)
        assert s.mean == 0.0

    def test_single_spike_linf(self):
        a = np.zeros(DOMAIN_GRID.shape)
        a[10, 20] = 1e6
        s = field_stats(ScalarField(DOMAIN_GRID, a))
        assert s.linf == 1e6
        assert s.l2 == pytest.approx(1e6 * np.sqrt(DOMAIN_GRID.cell_area))


def test_field_dump_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    g = GridSpec(5, 3, 0.1, 0.1)
    f = ScalarField(g, rng.random(g.shape) * 1e3)
    path = tmp_path / "f.dat"
    write_field(f, path)
    lines = path.read_text().splitlines()
    assert lines[0].split()[:2] == ["5", "3"]
    assert len(lines) == 1 + g.ny
    assert all(len(ln.split()) == g.nx for ln in lines[1:])
    back = read_field(path)
    assert back.grid == g
    np.testing.assert_array_equal(back.values, f.values)


def test_field_dump_rejects_truncated(tmp_path):
    path = tmp_path / "bad.dat"
    path.write_text("3 2 0.1 0.1\n1 2 3\n")
    with pytest.raises(ValueError):
        read_field(path)
