import numpy as np
import pytest
from scipy import ndimage

from cathsynth.profiles import (CrossSectionSpec, Normalization, ProjectionProfile,
                                TubeKind, dual_edge_profile, normalize_global_max,
                                project, render_cross_section, resample_profile,
                                sinogram)
from oracles import bin_average_resample, raymarch_profile


class TestCrossSectionSpec:
    def test_defaults_match_reference_parameters(self, default_spec):
        assert (default_spec.d1, default_spec.d2) == (160.0, 80.0)
        assert (default_spec.c1, default_spec.c2) == (0.1, 1.0)
        assert default_spec.t == 30.0

    @pytest.mark.parametrize("kwargs", [
        dict(d1=80, d2=160),          # inner wider than outer
        dict(t=0),                    # no strip thickness
        dict(t=100),                  # strip taller than lumen
        dict(c1=0.5, c2=0.2),         # strip less attenuating than wall
    ])
    def test_invalid_parameters_rejected(self, kwargs):
        with pytest.raises(ValueError):
            CrossSectionSpec(**kwargs)


class TestRenderCrossSection:
    def test_center_pixel_is_empty_lumen(self, default_field):
        c = default_field.side // 2
        assert default_field.grid[c, c] == 0.0

    def test_wall_pixel_outside_strip(self, default_field):
        c = (default_field.side - 1) / 2.0
        assert default_field.grid[int(c), int(c) + 60] == 0.1

    def test_strip_interior_pixel(self, default_field):
        c = (default_field.side - 1) / 2.0
        assert default_field.grid[int(c), int(c) - 60] == 1.0

    def test_grid_too_small_rejected(self, default_spec):
        with pytest.raises(ValueError, match="162"):
            render_cross_section(default_spec, grid_side=100)

    def test_deterministic(self, default_spec):
        a = render_cross_section(default_spec, 170)
        b = render_cross_section(default_spec, 170)
        assert np.array_equal(a.grid, b.grid)

    def test_interior_pixels_take_pure_values(self, default_field):
        side = default_field.side
        grid = default_field.grid
        # pixels whose 3x3 neighborhood is uniform are interior: pure values
        interior = np.ones_like(grid, dtype=bool)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                interior[1:-1, 1:-1] &= (grid[1:-1, 1:-1]
                                         == grid[1 + dy:side - 1 + dy,
                                                 1 + dx:side - 1 + dx])
        vals = np.unique(grid[1:-1, 1:-1][interior[1:-1, 1:-1]])
        assert set(vals).issubset({0.0, 0.1, 1.0})

    def test_zero_outside_outer_radius(self, default_field):
        c = (default_field.side - 1) / 2.0
        ys, xs = np.mgrid[0:default_field.side, 0:default_field.side]
        rr = np.hypot(xs - c, ys - c)
        assert np.all(default_field.grid[rr > 81.0] == 0.0)


class TestProject:
    def test_zero_field_any_angle(self, default_spec):
        field = render_cross_section(default_spec)
        field.grid[:] = 0.0
        for angle in (0.0, 41.5, 90.0, 179.0):
            assert np.all(project(field, angle).samples == 0.0)

    def test_annulus_rotational_symmetry(self, plain_field):
        p0 = project(plain_field, 0.0)
        p37 = project(plain_field, 37.0)
        scale = p0.samples.max()
        assert np.abs(p0.samples - p37.samples).max() / scale < 0.01

    def test_angle_domain(self, plain_field):
        with pytest.raises(ValueError):
            project(plain_field, 180.0)
        with pytest.raises(ValueError):
            project(plain_field, -1.0)

    def test_matches_raymarch_oracle_at_reference_angles(self, default_field):
        angles = [0.0, 30.0, 60.0, 90.0]
        mine = [project(default_field, a).samples for a in angles]
        oracle = [raymarch_profile(default_field.grid, a) for a in angles]
        gm = max(m.max() for m in mine)
        go = max(o.max() for o in oracle)
        for m, o in zip(mine, oracle):
            assert np.abs(m / gm - o / go).max() <= 0.02

    def test_mass_conservation(self, default_field):
        total = default_field.grid.sum()
        for angle in np.linspace(0.0, 179.0, 25):
            projected = project(default_field, angle).samples.sum()
            assert abs(projected - total) / total < 0.005

    def test_rotational_equivariance_plain(self, plain_field):
        rotated = ndimage.rotate(plain_field.grid, 25.0, reshape=False, order=1)
        field_r = render_cross_section(plain_field.spec)
        field_r.grid = rotated
        for theta in (40.0, 90.0):
            a = project(field_r, theta).samples
            b = project(plain_field, theta - 25.0).samples
            assert np.abs(a / b.max() - b / b.max()).max() <= 0.03

    def test_profiles_non_negative(self, default_field):
        for angle in (0.0, 13.7, 61.2, 120.0):
            assert project(default_field, angle).samples.min() >= 0.0


class TestSinogram:
    def test_single_angle(self, default_field):
        rows = sinogram(default_field, 1)
        assert len(rows) == 1
        assert np.array_equal(rows[0].samples, project(default_field, 0.0).samples)

    def test_zero_field_all_rows_zero(self, default_spec):
        field = render_cross_section(default_spec)
        field.grid[:] = 0.0
        rows = sinogram(field, 180)
        assert len(rows) == 180
        assert all(np.all(r.samples == 0.0) for r in rows)

    def test_angle_grid(self, plain_field):
        rows = sinogram(plain_field, 12)
        assert [r.angle for r in rows] == [i * 15.0 for i in range(12)]

    def test_rows_match_oracle_spot_checked(self, default_field):
        rows = sinogram(default_field, 180)
        spot = (0, 31, 59, 90, 150)
        mine = [rows[i].samples for i in spot]
        oracle = [raymarch_profile(default_field.grid, float(i)) for i in spot]
        gm = max(m.max() for m in mine)
        go = max(o.max() for o in oracle)
        for m, o in zip(mine, oracle):
            assert np.abs(m / gm - o / go).max() <= 0.02
        # and every row is exactly the single-angle projection
        for i in (7, 45, 123):
            assert np.array_equal(rows[i].samples,
                                  project(default_field, float(i)).samples)


class TestNormalizeGlobalMax:
    def test_single_profile(self):
        prof = ProjectionProfile(np.array([0.0, 2.0, 4.0]), 0.0)
        out = normalize_global_max([prof])[0]
        assert np.array_equal(out.samples, [0.0, 0.5, 1.0])
        assert out.normalization is Normalization.GLOBAL_MAX

    def test_shared_normalizer(self):
        a = ProjectionProfile(np.array([1.0, 2.0]), 0.0)
        b = ProjectionProfile(np.array([4.0, 0.0]), 90.0)
        na, nb = normalize_global_max([a, b])
        assert np.array_equal(na.samples, [0.25, 0.5])
        assert np.array_equal(nb.samples, [1.0, 0.0])

    def test_reference_four_angle_set_peaks_at_one(self, default_field):
        profs = [project(default_field, a) for a in (0.0, 30.0, 60.0, 90.0)]
        normed = normalize_global_max(profs)
        assert max(p.samples.max() for p in normed) == 1.0

    def test_idempotent(self, default_field):
        profs = normalize_global_max([project(default_field, 30.0)])
        again = normalize_global_max(profs)
        assert np.array_equal(profs[0].samples, again[0].samples)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            normalize_global_max([ProjectionProfile(np.zeros(5), 0.0)])


class TestResampleProfile:
    def test_identity_at_own_support_width(self, default_field):
        prof = normalize_global_max([project(default_field, 0.0)])[0]
        lo, hi = prof.support()
        out = resample_profile(prof, hi - lo + 1)
        assert np.abs(out.samples - prof.samples[lo:hi + 1]).max() < 1e-9

    def test_symmetry_preserved(self):
        prof = ProjectionProfile(np.array([0, 1, 3, 7, 9, 9, 7, 3, 1, 0.0]), 0.0)
        out = resample_profile(prof, 5).samples
        assert np.abs(out - out[::-1]).max() < 1e-9

    def test_matches_continuous_reconstruction_oracle(self, default_field):
        prof = normalize_global_max([project(default_field, 0.0)])[0]
        lo, hi = prof.support()
        expected = bin_average_resample(prof.samples[lo:hi + 1], 9)
        got = resample_profile(prof, 9).samples
        assert np.abs(got - expected).max() <= 0.05

    def test_empty_support_rejected(self):
        with pytest.raises(ValueError):
            resample_profile(ProjectionProfile(np.zeros(8), 0.0), 4)

    def test_width_validation(self, default_field):
        prof = project(default_field, 0.0)
        with pytest.raises(ValueError):
            resample_profile(prof, 1)


class TestDualEdgeProfile:
    def test_two_local_maxima_symmetric(self, plain_spec):
        prof = dual_edge_profile(plain_spec, 12)
        s = prof.samples
        maxima = [i for i in range(len(s))
                  if (i == 0 or s[i] > s[i - 1])
                  and (i == len(s) - 1 or s[i] > s[i + 1])]
        assert len(maxima) == 2
        assert np.abs(s - s[::-1]).max() < 1e-9

    def test_reference_width_six_full_support(self, plain_spec):
        prof = dual_edge_profile(plain_spec, 6)
        assert len(prof.samples) == 6
        assert np.all(prof.samples > 0.0)

    def test_equals_explicit_composition(self, plain_spec, plain_field):
        direct = dual_edge_profile(plain_spec, 6)
        composed = normalize_global_max(
            [resample_profile(project(plain_field, 0.0), 6)])[0]
        assert np.array_equal(direct.samples, composed.samples)

    def test_strip_tube_rejected(self, default_spec):
        with pytest.raises(ValueError):
            dual_edge_profile(default_spec, 6)
