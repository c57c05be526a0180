import math

import numpy as np
import pytest

import mixsum.projection as projection
from mixsum.errors import DegenerateFitError, DimensionError, TooManyFailuresError, ValidationError
from mixsum.kernels import RngStream
from mixsum.projection import (
    PosteriorSummarySet,
    align_labels,
    default_grid,
    density_ribbon,
    project_posterior,
    read_ribbon,
    read_summary_set,
    write_ribbon,
    write_summary_set,
)
from mixsum.reference_models import DpmConfig, DrawBundle, dpm_gibbs, generate_sim_univariate
from mixsum.summary_fit import EmConfig, GmmSummary

from conftest import gauss_draw


def two_bundle(m=2):
    draws = [gauss_draw([-3.0 + 0.1 * i, 4.0], [1.0, 0.5], [0.4, 0.6], m=i) for i in range(m)]
    return DrawBundle(draws)


class TestProjectPosterior:
    def test_recovers_the_draw_mixture(self):
        h = 4000
        draw = gauss_draw([4.0, -3.0], [0.5, 1.0], [0.6, 0.4])
        pset = project_posterior(DrawBundle([draw]), 2, h=h, rng=RngStream(3))
        s = pset.summaries[0]
        tol = 5.0 / math.sqrt(h)
        np.testing.assert_allclose(s.weights, [0.4, 0.6], atol=tol)
        np.testing.assert_allclose(s.means[:, 0], [-3.0, 4.0], atol=tol * 2)
        np.testing.assert_allclose(s.covariances[:, 0, 0], [1.0, 0.5], atol=tol * 2)

    def test_members_are_canonical(self):
        pset = project_posterior(two_bundle(4), 2, h=500, rng=RngStream(1))
        assert pset.M == 4 and pset.is_aligned()
        assert pset.draw_indices == [0, 1, 2, 3]

    def test_threads_do_not_change_results(self):
        b = two_bundle(6)
        a = project_posterior(b, 2, h=400, rng=RngStream(9), threads=1)
        c = project_posterior(b, 2, h=400, rng=RngStream(9), threads=3)
        assert all(x == y for x, y in zip(a.summaries, c.summaries))

    def test_warm_start_checked(self):
        b = two_bundle()
        with pytest.raises(ValidationError):
            project_posterior(b, 2, h=100, warm_start=GmmSummary([1.0], [[0.0]], [[[1.0]]]))
        with pytest.raises(DimensionError):
            project_posterior(b, 1, h=100, warm_start=GmmSummary([1.0], [[0.0, 0.0]], [np.eye(2)]))

    def test_bad_k_star(self):
        with pytest.raises(ValidationError):
            project_posterior(two_bundle(), 0, h=100)
        with pytest.raises(ValidationError):
            project_posterior(two_bundle(), 5, h=3)

    def _failing(self, monkeypatch, bad):
        real = projection._project_one

        def fake(draw, *args):
            if draw.draw_index in bad:
                raise DegenerateFitError("forced")
            return real(draw, *args)

        monkeypatch.setattr(projection, "_project_one", fake)

    def test_few_failures_skipped(self, monkeypatch):
        self._failing(monkeypatch, {3})
        pset = project_posterior(two_bundle(10), 2, h=200, rng=RngStream(0))
        assert pset.M == 9 and pset.failed == [3]
        assert 3 not in pset.draw_indices

    def test_too_many_failures_abort(self, monkeypatch):
        self._failing(monkeypatch, {3, 7})
        with pytest.raises(TooManyFailuresError):
            project_posterior(two_bundle(10), 2, h=200, rng=RngStream(0))


class TestAlignment:
    def test_reorders_by_location(self):
        s = GmmSummary([0.2, 0.5, 0.3], [[5.0], [2.0], [9.0]], [[[1.0]], [[2.0]], [[3.0]]])
        pset = align_labels(PosteriorSummarySet(3, [s]))
        a = pset.summaries[0]
        np.testing.assert_array_equal(a.means[:, 0], [2.0, 5.0, 9.0])
        np.testing.assert_array_equal(a.weights, [0.5, 0.2, 0.3])
        np.testing.assert_array_equal(a.covariances[:, 0, 0], [2.0, 1.0, 3.0])

    def test_idempotent_and_density_preserving(self):
        s = GmmSummary([0.2, 0.5, 0.3], [[5.0], [2.0], [9.0]], [[[1.0]], [[2.0]], [[3.0]]])
        once = align_labels(PosteriorSummarySet(3, [s]))
        twice = align_labels(once)
        assert once.summaries[0] == twice.summaries[0]
        x = np.linspace(-2, 12, 29)[:, None]
        np.testing.assert_allclose(once.summaries[0].logpdf(x), s.logpdf(x), rtol=0, atol=1e-12)

    def test_unaligned_detected(self):
        s = GmmSummary([0.5, 0.5], [[3.0], [1.0]], [[[1.0]], [[1.0]]])
        assert not PosteriorSummarySet(2, [s]).is_aligned()

    def test_member_k_checked(self):
        with pytest.raises(ValidationError):
            PosteriorSummarySet(2, [GmmSummary([1.0], [[0.0]], [[[1.0]]])])


class TestRibbon:
    def test_single_member_collapses(self):
        s = GmmSummary([0.5, 0.5], [[-1.0], [2.0]], [[[1.0]], [[0.5]]])
        grid = np.linspace(-4, 5, 40)
        r = density_ribbon(PosteriorSummarySet(2, [s]), grid)
        np.testing.assert_allclose(r.lower, r.upper, rtol=0, atol=0)
        np.testing.assert_allclose(r.mean, s.pdf(grid[:, None]), rtol=1e-14)

    def test_two_members_mean(self):
        p = GmmSummary([1.0], [[0.0]], [[[1.0]]])
        q = GmmSummary([1.0], [[1.0]], [[[2.0]]])
        grid = np.linspace(-3, 4, 15)[:, None]
        r = density_ribbon(PosteriorSummarySet(1, [p, q]), grid)
        np.testing.assert_allclose(r.mean, 0.5 * (p.pdf(grid) + q.pdf(grid)), rtol=1e-14)
        assert np.all(r.lower <= r.mean) and np.all(r.mean <= r.upper)

    def test_percentile_bounds(self):
        members = [GmmSummary([1.0], [[mu]], [[[1.0]]]) for mu in np.linspace(-1, 1, 41)]
        grid = np.array([[0.0]])
        r = density_ribbon(PosteriorSummarySet(1, members), grid)
        dens = np.array([m.pdf(grid)[0] for m in members])
        assert r.lower[0] == pytest.approx(np.percentile(dens, 2.5), rel=1e-12)
        assert r.upper[0] == pytest.approx(np.percentile(dens, 97.5), rel=1e-12)

    def test_grid_dimension_checked(self):
        s = GmmSummary([1.0], [[0.0]], [[[1.0]]])
        with pytest.raises(DimensionError):
            density_ribbon(PosteriorSummarySet(1, [s]), np.zeros((4, 2)))

    def test_default_grid(self):
        g = default_grid(np.array([0.0, 10.0]))
        assert g.shape == (512, 1)
        assert g[0, 0] == pytest.approx(-1.0) and g[-1, 0] == pytest.approx(11.0)


class TestFiles:
    def test_summary_set_round_trip(self, tmp_path):
        pset = project_posterior(two_bundle(3), 2, h=300, rng=RngStream(4))
        pset.failed = [7]
        write_summary_set(pset, tmp_path / "s.jsonl")
        back = read_summary_set(tmp_path / "s.jsonl")
        assert back.k_star == 2 and back.h_per_draw == 300 and back.failed == [7]
        assert back.draw_indices == pset.draw_indices
        assert all(a == b for a, b in zip(back.summaries, pset.summaries))

    def test_ribbon_round_trip(self, tmp_path):
        p = GmmSummary([1.0], [[0.0]], [[[1.0]]])
        q = GmmSummary([1.0], [[1.0]], [[[2.0]]])
        r = density_ribbon(PosteriorSummarySet(1, [p, q]), default_grid([0.0, 1.0], n=20))
        write_ribbon(r, tmp_path / "r.csv", reference=r.mean)
        back = read_ribbon(tmp_path / "r.csv")
        for name in ("grid", "lower", "mean", "upper"):
            np.testing.assert_array_equal(getattr(back, name), getattr(r, name))


@pytest.mark.slow
def test_ribbon_narrows_with_more_data():
    widths = {}
    grid = default_grid(generate_sim_univariate(1000, RngStream(5, 1000).spawn(0)))
    for n in (100, 1000):
        data = generate_sim_univariate(n, RngStream(5, n).spawn(0))
        bundle = dpm_gibbs(data, DpmConfig(thinning=50), RngStream(5, n).spawn(1))
        pset = project_posterior(bundle, 3, h=500, config=EmConfig(restarts=1), rng=RngStream(5, n).spawn(2))
        r = density_ribbon(pset, grid)
        widths[n] = float(np.trapezoid(r.width, r.grid[:, 0]))
    assert widths[1000] < widths[100]
