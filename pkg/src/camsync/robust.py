"""Seeded RANSAC over the time-shift solvers.

Hypotheses are scored against every valid correspondence using the same
linearized prediction ``u + beta * v`` the solvers fit, with the Sampson
distance for fundamental matrices and the symmetric transfer error for
homographies. Per-iteration RNG streams are derived as ``seed XOR iteration``
so results are deterministic and independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    AllDegenerate,
    DegenerateInput,
    MissingFrame,
    NoRealSolution,
    NotEnoughCorrespondences,
    SingularModel,
)
from .geometry import (
    ImageSample,
    LinearizedCorrespondence,
    Trajectory,
    linearize,
    sampson_distances,
    transfer_distances,
)
from .solvers import (
    CorrSet,
    SolverCandidate,
    _kron_rows,
    _normalize_corr,
    solve_4pt_h,
    solve_7pt_f,
    solve_gep_f_beta,
    solve_min_f_beta,
    solve_min_h_beta,
)
from .geometry import FUNDAMENTAL, HOMOGRAPHY, TwoViewModel

KIND_F_GEP = "f-gep"
KIND_F_MIN = "f-min"
KIND_H_MIN = "h-min"
KIND_F_7PT = "f-7pt"
KIND_H_4PT = "h-4pt"

SAMPLE_SIZES = {
    KIND_F_GEP: 9,
    KIND_F_MIN: 8,
    KIND_H_MIN: 5,
    KIND_F_7PT: 7,
    KIND_H_4PT: 4,
}

_F_KINDS = (KIND_F_GEP, KIND_F_MIN, KIND_F_7PT)


@dataclass(frozen=True)
class RansacParams:
    threshold: float = 1.0
    max_iterations: int = 1000
    confidence: float = 0.995
    seed: int = 0
    d: int = 1
    beta0: float = 0.0
    rho: float = 1.0
    beta_max: float | None = None  # window around beta0; default 10 * max(|d|, 1)
    refine_rounds: int = 2  # post-consensus least-squares rounds; 0 disables

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if not (0.0 < self.confidence < 1.0):
            raise ValueError("confidence must be in (0, 1)")
        if self.d == 0:
            raise ValueError("d must be nonzero")

    @property
    def beta_window(self) -> float:
        if self.beta_max is not None:
            return self.beta_max
        return 10.0 * max(abs(self.d), 1)


@dataclass
class RansacResult:
    best: SolverCandidate
    inlier_mask: np.ndarray
    inlier_count: int
    iterations_run: int
    total_correspondences: int = 0
    keys: list = field(default_factory=list)  # (track_id, frame) per correspondence


def build_correspondences(
    traj1: list[Trajectory],
    traj2: list[Trajectory],
    beta0: float,
    rho: float,
    d: int,
) -> tuple[CorrSet, list[tuple[str, int]]]:
    """Pair camera-1 samples with camera-2 linearizations by shared track id.

    Camera-1 frames whose linearization fails (gap or boundary) are dropped.
    Returns the stacked arrays plus (track_id, frame) keys aligned with rows.
    """
    by_id2 = {t.track_id: t for t in traj2}
    pairs: list[tuple[ImageSample, LinearizedCorrespondence]] = []
    keys: list[tuple[str, int]] = []
    for t1 in traj1:
        t2 = by_id2.get(t1.track_id)
        if t2 is None:
            continue
        for s in t1.samples:
            try:
                lin = linearize(t2, s.frame, beta0, rho, d)
            except MissingFrame:
                continue
            pairs.append((s, lin))
            keys.append((t1.track_id, s.frame))
    if not pairs:
        return CorrSet(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3))), keys
    return CorrSet.from_pairs(pairs), keys


def _generate(kind: str, sub: CorrSet, beta0: float) -> list[SolverCandidate]:
    if kind == KIND_F_GEP:
        return solve_gep_f_beta(sub)
    if kind == KIND_F_MIN:
        return solve_min_f_beta(sub)
    if kind == KIND_H_MIN:
        return solve_min_h_beta(sub)
    if kind == KIND_F_7PT:
        return [
            SolverCandidate(beta=beta0, model=m, algebraic_residual=0.0)
            for m in solve_7pt_f(sub)
        ]
    if kind == KIND_H_4PT:
        return [
            SolverCandidate(beta=beta0, model=solve_4pt_h(sub), algebraic_residual=0.0)
        ]
    raise ValueError(f"unknown solver kind {kind!r}")


def score_candidate(
    kind: str, cand: SolverCandidate, corr: CorrSet, threshold: float
) -> tuple[np.ndarray, float]:
    """Inlier mask and summed inlier residual of one hypothesis over all rows."""
    pred = corr.u + cand.beta * corr.v
    if kind in _F_KINDS:
        res = sampson_distances(cand.model.m, corr.s1, pred)
    else:
        res = transfer_distances(cand.model.m, corr.s1, pred)
    mask = res <= threshold
    return mask, float(res[mask].sum())


def _smallest_right_singular(rows: np.ndarray) -> np.ndarray:
    # eigenvector of the 9x9 normal matrix: O(n) instead of a full n x 9 SVD
    _, vecs = np.linalg.eigh(rows.T @ rows)
    return vecs[:, 0]


def _fit_model_at_beta(kind: str, sub: CorrSet, beta: float) -> TwoViewModel:
    """Least-squares model over a consensus set with the shift held fixed."""
    sub_n, t1, t2 = _normalize_corr(sub)
    pred = sub_n.u + beta * sub_n.v
    if kind in _F_KINDS:
        fn = _smallest_right_singular(_kron_rows(pred, sub_n.s1)).reshape(3, 3)
        return TwoViewModel.normalized(FUNDAMENTAL, t2.T @ fn @ t1)
    rows = []
    for s, p in zip(sub_n.s1, pred):
        z = np.zeros(3)
        rows.append(np.concatenate([z, -s, p[1] * s]))
        rows.append(np.concatenate([s, z, -p[0] * s]))
    hn = _smallest_right_singular(np.asarray(rows)).reshape(3, 3)
    return TwoViewModel.normalized(HOMOGRAPHY, np.linalg.inv(t2) @ hn @ t1)


def _fit_beta_at_model(kind: str, sub: CorrSet, model: TwoViewModel) -> float:
    """Closed-form least-squares shift with the model held fixed."""
    if kind in _F_KINDS:
        a = np.einsum("ij,ij->i", sub.u @ model.m, sub.s1)
        b = np.einsum("ij,ij->i", sub.v @ model.m, sub.s1)
        denom = float(b @ b)
        if denom < 1e-18:
            raise DegenerateInput("shift unobservable on this consensus set")
        return float(-(a @ b) / denom)
    hx = sub.s1 @ model.m.T
    if np.any(np.abs(hx[:, 2]) < 1e-12):
        raise DegenerateInput("mapped point at infinity")
    hx = hx[:, :2] / hx[:, 2:3]
    diff = (hx - sub.u[:, :2]).ravel()
    v2 = sub.v[:, :2].ravel()
    denom = float(v2 @ v2)
    if denom < 1e-18:
        raise DegenerateInput("shift unobservable on this consensus set")
    return float((v2 @ diff) / denom)


def refine_candidate(
    kind: str,
    cand: SolverCandidate,
    mask: np.ndarray,
    corr: CorrSet,
    params: RansacParams,
    rounds: int = 2,
) -> tuple[SolverCandidate, np.ndarray, int, float]:
    """Alternate model/shift least squares over the consensus set.

    Classical baselines keep their shift fixed at beta0. Each round is kept
    only if it does not lose inliers; the incumbent wins ties.
    """
    best = cand
    best_mask, best_res = score_candidate(kind, cand, corr, params.threshold)
    best_count = int(best_mask.sum())
    lo = params.beta0 - params.beta_window
    hi = params.beta0 + params.beta_window
    fixed_beta = kind in (KIND_F_7PT, KIND_H_4PT)
    for _ in range(rounds):
        idx = np.flatnonzero(best_mask)
        if len(idx) < SAMPLE_SIZES[kind]:
            break
        sub = corr.take(idx)
        try:
            model = _fit_model_at_beta(kind, sub, best.beta)
            beta = best.beta if fixed_beta else _fit_beta_at_model(kind, sub, model)
        except (DegenerateInput, np.linalg.LinAlgError):
            break
        beta = min(max(beta, lo), hi)
        trial = SolverCandidate(
            beta=beta, model=model, algebraic_residual=best.algebraic_residual
        )
        try:
            mask_t, res_t = score_candidate(kind, trial, corr, params.threshold)
        except SingularModel:
            break
        count_t = int(mask_t.sum())
        if count_t < best_count or (count_t == best_count and res_t >= best_res):
            break
        best, best_mask, best_count, best_res = trial, mask_t, count_t, res_t
    return best, best_mask, best_count, best_res


def ransac_estimate(
    traj1: list[Trajectory],
    traj2: list[Trajectory],
    kind: str,
    params: RansacParams,
) -> RansacResult:
    """Hypothesize-and-verify estimation of (beta, model) over full trajectories.

    Deterministic for fixed seed and inputs. Sampled sets rejected by the
    solver do not count toward the adaptive termination rule.
    """
    m = SAMPLE_SIZES[kind]
    corr, keys = build_correspondences(traj1, traj2, params.beta0, params.rho, params.d)
    n = len(corr)
    if n < m:
        raise NotEnoughCorrespondences(
            f"{n} valid correspondences, solver {kind} needs {m}"
        )
    best = None
    best_mask = None
    best_count = -1
    best_res = math.inf
    needed = params.max_iterations
    valid_draws = 0
    iterations = 0
    lo = params.beta0 - params.beta_window
    hi = params.beta0 + params.beta_window
    for it in range(params.max_iterations):
        if valid_draws >= needed:
            break
        iterations = it + 1
        rng = np.random.default_rng(np.uint64(params.seed) ^ np.uint64(it))
        idx = rng.choice(n, size=m, replace=False)
        try:
            cands = _generate(kind, corr.take(idx), params.beta0)
        except (DegenerateInput, NoRealSolution):
            continue
        valid_draws += 1
        for cand in cands:
            if not (lo <= cand.beta <= hi):
                continue
            try:
                mask, res = score_candidate(kind, cand, corr, params.threshold)
            except SingularModel:
                continue
            count = int(mask.sum())
            if count > best_count or (count == best_count and res < best_res):
                best, best_mask, best_count, best_res = cand, mask, count, res
        if best_count > 0:
            w = best_count / n
            if w >= 1.0:
                needed = valid_draws
            else:
                denom = math.log1p(-min(w**m, 1.0 - 1e-15))
                if denom == 0.0:  # w**m underflowed; no early stop
                    needed = params.max_iterations
                else:
                    needed = min(
                        params.max_iterations,
                        math.ceil(math.log(1.0 - params.confidence) / denom),
                    )
    if best is None:
        raise AllDegenerate(
            f"no usable hypothesis in {iterations} iterations ({valid_draws} valid draws)"
        )
    if params.refine_rounds > 0:
        best, best_mask, best_count, _ = refine_candidate(
            kind, best, best_mask, corr, params, params.refine_rounds
        )
    return RansacResult(
        best=best,
        inlier_mask=best_mask,
        inlier_count=best_count,
        iterations_run=iterations,
        total_correspondences=n,
        keys=keys,
    )


def with_seed(params: RansacParams, seed: int, d: int, beta0: float) -> RansacParams:
    """Derive a parameter set for one directional call of the iterative loop."""
    return replace(params, seed=int(seed), d=d, beta0=beta0)
