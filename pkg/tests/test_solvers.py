"""Minimal solvers: joint geometry + time-shift, and classical baselines."""

import numpy as np
import pytest

from camsync import (
    DegenerateInput,
    NoRealSolution,
    ImageSample,
    SceneSpec,
    Trajectory,
    TwoViewModel,
    generate_scene,
    model_distance,
    solve_4pt_h,
    solve_7pt_f,
    solve_gep_f_beta,
    solve_min_f_beta,
    solve_min_h_beta,
)
from camsync.geometry import FUNDAMENTAL, HOMOGRAPHY
from camsync.robust import build_correspondences
from camsync.solvers import CorrSet, build_f_pencil, raw_pencil_eigenvalues


def exact_corr(seed, beta_gt, d, n_pick, n_tracks=3, exact_model="F"):
    """Sample n_pick correspondences from exact constant-velocity image tracks.

    Picks cycle across tracks with spread frame indices: consecutive samples
    of a single track are collinear and make every minimal problem degenerate.
    """
    spec = SceneSpec(
        seed=seed,
        beta_gt=float(beta_gt),
        noise_sigma=0.0,
        motion="exact-linear",
        n_tracks=n_tracks,
        exact_model=exact_model,
        n_frames=60,
    )
    t1, t2, gt = generate_scene(spec)
    corr, keys = build_correspondences(t1, t2, 0.0, 1.0, d)
    by_track = {}
    for row, (track, _frame) in enumerate(keys):
        by_track.setdefault(track, []).append(row)
    tracks = sorted(by_track)
    counters = dict.fromkeys(tracks, 0)
    idx = []
    k = 0
    while len(idx) < n_pick:
        rows = by_track[tracks[k % len(tracks)]]
        idx.append(rows[counters[tracks[k % len(tracks)]] * 9 % len(rows)])
        counters[tracks[k % len(tracks)]] += 1
        k += 1
    return corr.take(np.array(idx)), gt


def best_beta_match(cands, beta_gt):
    return min(cands, key=lambda c: abs(c.beta - beta_gt))


class TestGepFBeta:
    def test_synchronized_exact_data(self):
        corr, gt = exact_corr(seed=0, beta_gt=0.0, d=1, n_pick=9)
        cands = solve_gep_f_beta(corr)
        best = best_beta_match(cands, 0.0)
        assert abs(best.beta) < 1e-8
        assert best.algebraic_residual < 1e-10

    def test_shifted_exact_data_identifiable(self):
        for beta_gt, d in [(3.0, 1), (-2.0, 2), (4.0, 4)]:
            corr, gt = exact_corr(seed=1, beta_gt=beta_gt, d=d, n_pick=9)
            cands = solve_gep_f_beta(corr)
            best = best_beta_match(cands, beta_gt)
            assert abs(best.beta - beta_gt) < 1e-6
            assert model_distance(best.model, gt.f) < 1e-6

    def test_candidate_count_bounded_by_six(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            corr = CorrSet(
                s1=np.column_stack([rng.uniform(0, 1000, (9, 2)), np.ones(9)]),
                u=np.column_stack([rng.uniform(0, 1000, (9, 2)), np.ones(9)]),
                v=np.column_stack([rng.uniform(-10, 10, (9, 2)), np.zeros(9)]),
            )
            try:
                cands = solve_gep_f_beta(corr)
            except (DegenerateInput, NoRealSolution):
                continue
            assert len(cands) <= 6

    def test_second_pencil_matrix_rank_six(self):
        rng = np.random.default_rng(3)
        corr = CorrSet(
            s1=np.column_stack([rng.uniform(0, 1000, (9, 2)), np.ones(9)]),
            u=np.column_stack([rng.uniform(0, 1000, (9, 2)), np.ones(9)]),
            v=np.column_stack([rng.uniform(-10, 10, (9, 2)), np.zeros(9)]),
        )
        _, m2 = build_f_pencil(corr)
        assert np.linalg.matrix_rank(m2, tol=1e-8) == 6

    def test_raw_pencil_has_three_infinite_eigenvalues(self):
        rng = np.random.default_rng(4)
        corr = CorrSet(
            s1=np.column_stack([rng.uniform(0, 1000, (9, 2)), np.ones(9)]),
            u=np.column_stack([rng.uniform(0, 1000, (9, 2)), np.ones(9)]),
            v=np.column_stack([rng.uniform(-10, 10, (9, 2)), np.zeros(9)]),
        )
        vals = raw_pencil_eigenvalues(corr)
        n_inf = np.sum(~np.isfinite(vals))
        assert n_inf >= 3

    def test_compressed_matches_raw_pencil(self):
        sub, _ = exact_corr(seed=5, beta_gt=2.0, d=1, n_pick=9)
        raw = raw_pencil_eigenvalues(sub)
        finite = np.sort(raw[np.isfinite(raw) & (np.abs(raw.imag) < 1e-6)].real)
        cands = solve_gep_f_beta(sub)
        betas = np.sort([c.beta for c in cands])
        # every reported beta appears among the raw pencil's finite eigenvalues
        for b in betas:
            assert np.min(np.abs(finite - b)) < 1e-6

    def test_beta_invariant_to_image_similarity(self):
        sub, _ = exact_corr(seed=6, beta_gt=3.0, d=1, n_pick=9)
        t_shift = np.array([123.0, -45.0])
        scale = 2.5
        moved = CorrSet(
            s1=np.column_stack(
                [scale * sub.s1[:, :2] + t_shift, np.ones(len(sub))]
            ),
            u=np.column_stack([scale * sub.u[:, :2] + t_shift, np.ones(len(sub))]),
            v=np.column_stack([scale * sub.v[:, :2], np.zeros(len(sub))]),
        )
        b0 = best_beta_match(solve_gep_f_beta(sub), 3.0).beta
        b1 = best_beta_match(solve_gep_f_beta(moved), 3.0).beta
        assert abs(b0 - b1) < 1e-9


class TestMinFBeta:
    def test_synchronized_exact_data(self):
        corr, gt = exact_corr(seed=10, beta_gt=0.0, d=1, n_pick=8)
        cands = solve_min_f_beta(corr)
        best = best_beta_match(cands, 0.0)
        assert abs(best.beta) < 1e-6
        # returned models satisfy the rank-2 constraint by construction
        assert abs(np.linalg.det(best.model.m)) < 1e-8

    def test_shifted_exact_data_identifiable(self):
        corr, gt = exact_corr(seed=11, beta_gt=1.0, d=1, n_pick=8)
        cands = solve_min_f_beta(corr)
        best = best_beta_match(cands, 1.0)
        assert abs(best.beta - 1.0) < 1e-5

    def test_candidate_count_bounded(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            corr = CorrSet(
                s1=np.column_stack([rng.uniform(0, 1000, (8, 2)), np.ones(8)]),
                u=np.column_stack([rng.uniform(0, 1000, (8, 2)), np.ones(8)]),
                v=np.column_stack([rng.uniform(-10, 10, (8, 2)), np.zeros(8)]),
            )
            try:
                cands = solve_min_f_beta(corr)
            except DegenerateInput:
                continue
            assert len(cands) <= 16

    def test_candidates_sorted_by_residual(self):
        corr, _ = exact_corr(seed=13, beta_gt=2.0, d=2, n_pick=8)
        cands = solve_min_f_beta(corr)
        residuals = [c.algebraic_residual for c in cands]
        assert residuals == sorted(residuals)


class TestMinHBeta:
    def test_synchronized_planar_exact(self):
        corr, gt = exact_corr(
            seed=20, beta_gt=0.0, d=1, n_pick=5, n_tracks=5, exact_model="H"
        )
        cands = solve_min_h_beta(corr)
        best = best_beta_match(cands, 0.0)
        assert abs(best.beta) < 1e-8
        assert model_distance(best.model, gt.h) < 1e-8

    def test_shifted_planar_exact(self):
        corr, gt = exact_corr(
            seed=21, beta_gt=2.0, d=4, n_pick=5, n_tracks=5, exact_model="H"
        )
        cands = solve_min_h_beta(corr)
        best = best_beta_match(cands, 2.0)
        assert abs(best.beta - 2.0) < 1e-6
        assert model_distance(best.model, gt.h) < 1e-6

    def test_fifth_row_choice_consistent(self):
        corr, gt = exact_corr(
            seed=22, beta_gt=1.0, d=2, n_pick=5, n_tracks=5, exact_model="H"
        )
        b0 = best_beta_match(solve_min_h_beta(corr, fifth_row=0), 1.0).beta
        b1 = best_beta_match(solve_min_h_beta(corr, fifth_row=1), 1.0).beta
        assert abs(b0 - 1.0) < 1e-6
        assert abs(b1 - 1.0) < 1e-6

    def test_real_solution_count_bounded_by_three(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            corr = CorrSet(
                s1=np.column_stack([rng.uniform(0, 1000, (5, 2)), np.ones(5)]),
                u=np.column_stack([rng.uniform(0, 1000, (5, 2)), np.ones(5)]),
                v=np.column_stack([rng.uniform(-10, 10, (5, 2)), np.zeros(5)]),
            )
            try:
                cands = solve_min_h_beta(corr)
            except DegenerateInput:
                continue
            assert len(cands) <= 3


class TestSevenPointF:
    def test_synchronized_exact_data(self):
        corr, gt = exact_corr(seed=30, beta_gt=0.0, d=1, n_pick=7)
        models = solve_7pt_f(corr)
        best = min(models, key=lambda m: model_distance(m, gt.f))
        assert model_distance(best, gt.f) < 1e-6

    def test_root_count_one_or_three(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            corr = CorrSet(
                s1=np.column_stack([rng.uniform(0, 1000, (7, 2)), np.ones(7)]),
                u=np.column_stack([rng.uniform(0, 1000, (7, 2)), np.ones(7)]),
                v=np.zeros((7, 3)),
            )
            try:
                models = solve_7pt_f(corr)
            except DegenerateInput:
                continue
            assert len(models) in (1, 3)
            for m in models:
                assert abs(np.linalg.det(m.m)) < 1e-8


class TestFourPointH:
    def test_identity_data(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        corr = CorrSet(
            s1=np.column_stack([pts, np.ones(4)]),
            u=np.column_stack([pts, np.ones(4)]),
            v=np.zeros((4, 3)),
        )
        h = solve_4pt_h(corr)
        assert model_distance(h, TwoViewModel.normalized(HOMOGRAPHY, np.eye(3))) < 1e-10

    def test_unit_square_to_quadrilateral_oracle(self):
        src = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        dst = np.array([[10.0, 20.0], [110.0, 15.0], [130.0, 140.0], [5.0, 120.0]])
        # independent 8x8 elimination with h33 pinned to 1
        a = np.zeros((8, 8))
        b = np.zeros(8)
        for k, ((x, y), (xp, yp)) in enumerate(zip(src, dst)):
            a[2 * k] = [x, y, 1, 0, 0, 0, -xp * x, -xp * y]
            b[2 * k] = xp
            a[2 * k + 1] = [0, 0, 0, x, y, 1, -yp * x, -yp * y]
            b[2 * k + 1] = yp
        h_ref = np.append(np.linalg.solve(a, b), 1.0).reshape(3, 3)
        corr = CorrSet(
            s1=np.column_stack([src, np.ones(4)]),
            u=np.column_stack([dst, np.ones(4)]),
            v=np.zeros((4, 3)),
        )
        h = solve_4pt_h(corr)
        assert model_distance(h, TwoViewModel.normalized(HOMOGRAPHY, h_ref)) < 1e-9

    def test_collinear_points_rejected(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 1.0]])
        corr = CorrSet(
            s1=np.column_stack([pts, np.ones(4)]),
            u=np.column_stack([pts + 1.0, np.ones(4)]),
            v=np.zeros((4, 3)),
        )
        with pytest.raises(DegenerateInput):
            solve_4pt_h(corr)

    def test_planar_exact_scene(self):
        corr, gt = exact_corr(
            seed=32, beta_gt=0.0, d=1, n_pick=4, n_tracks=4, exact_model="H"
        )
        h = solve_4pt_h(corr)
        assert model_distance(h, gt.h) < 1e-8


class TestBacksubstitution:
    def test_f_solvers_satisfy_their_constraints(self):
        for solver, size in ((solve_gep_f_beta, 9), (solve_min_f_beta, 8)):
            sub, _ = exact_corr(seed=40, beta_gt=2.0, d=2, n_pick=size)
            checked = 0
            for cand in solver(sub):
                if cand.algebraic_residual > 1e-8:
                    continue
                pred = sub.u + cand.beta * sub.v
                res = np.abs(np.einsum("ij,jk,ik->i", pred, cand.model.m, sub.s1))
                scale = np.linalg.norm(pred, axis=1) * np.linalg.norm(sub.s1, axis=1)
                assert np.max(res / scale) < 1e-6
                checked += 1
            assert checked >= 1

    def test_h_solver_satisfies_its_constraints(self):
        corr, _ = exact_corr(
            seed=41, beta_gt=1.0, d=2, n_pick=5, n_tracks=5, exact_model="H"
        )
        checked = 0
        for cand in solve_min_h_beta(corr):
            if cand.algebraic_residual > 1e-8:
                continue
            pred = corr.u + cand.beta * corr.v
            mapped = corr.s1 @ cand.model.m.T
            cross = np.cross(pred, mapped)
            scale = np.linalg.norm(pred, axis=1) * np.linalg.norm(mapped, axis=1)
            assert np.max(np.linalg.norm(cross, axis=1) / scale) < 1e-6
            checked += 1
        assert checked >= 1
