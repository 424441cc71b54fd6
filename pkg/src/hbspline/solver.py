"""Penalized least squares on the selected basis, with GCV tuning.

With unpenalized design S (n x m), kernel design R* (n x q) on the
basis points, and penalty Gram R** (q x q), the fit minimizes

    (1/n) * ||y - S a - R* b||^2 + lam * b' R** b

whose stationary conditions are the symmetric normal equations

    [ S'S      S'R*            ] [a]   [S'y ]
    [ R*'S     R*'R* + n lam R** ] [b] = [R*'y]

solved by Cholesky factorization with an escalating diagonal jitter
fallback.  The smoothing parameter is chosen by generalized
cross-validation over a log-spaced grid followed by a short
golden-section refinement between the winning grid point's neighbors.

Everything the per-lambda search needs (B'B, B'y, y'y with
B = [S, R*]) is precomputed once, so scanning the grid costs no
additional passes over the n rows: total fitting cost is one O(n*q^2)
assembly plus grid work independent of n.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, get_lapack_funcs

from .errors import (
    InvalidConfigError,
    InvalidInputError,
    SingularSystemError,
)
from .kernels import AnovaSpec, gram_matrix, null_space_eval, rescale_term_weights
from .selection import apply_scaler

__all__ = [
    "LambdaGrid",
    "FittedModel",
    "solve_coefficients",
    "smoother_diag",
    "gcv_select",
    "fit_fixed_lambda",
    "predict",
    "predict_with_diagnostics",
    "mse",
    "penalized_objective",
    "save_model",
    "load_model",
    "MODEL_FORMAT_VERSION",
]

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

# Relative diagonal jitter ladder tried when a factorization fails.
_JITTER_LADDER = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True)
class LambdaGrid:
    """Log-spaced smoothing-parameter search grid."""

    log10_lo: float = -9.0
    log10_hi: float = 1.0
    count: int = 40

    def __post_init__(self):
        if not self.log10_lo < self.log10_hi:
            raise InvalidConfigError("lambda grid needs log10_lo < log10_hi")
        if self.count < 2:
            raise InvalidConfigError("lambda grid needs at least 2 points")

    def values(self) -> np.ndarray:
        return np.logspace(self.log10_lo, self.log10_hi, self.count)


@dataclass(frozen=True)
class FittedModel:
    """A fitted expansion: prediction = S(x) alpha + R(x, basis) beta."""

    spec: AnovaSpec
    basis_points: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    lam: float
    gcv_score: float
    scaler: np.ndarray
    diagnostics: dict

    def __post_init__(self):
        self.basis_points.setflags(write=False)
        self.alpha.setflags(write=False)
        self.beta.setflags(write=False)
        self.scaler.setflags(write=False)


class _PenalizedSystem:
    """Cached quadratic forms; per-lambda work is free of the n rows."""

    def __init__(self, S, Rstar, Rstarstar, y):
        S = np.asarray(S, dtype=np.float64)
        Rstar = np.asarray(Rstar, dtype=np.float64)
        Rss = np.asarray(Rstarstar, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        n, m = S.shape
        q = Rstar.shape[1]
        if Rstar.shape[0] != n or Rss.shape != (q, q) or y.shape[0] != n:
            raise InvalidInputError("fitting matrices are not conformal")
        if n < m + 1:
            raise InvalidConfigError(
                f"need at least m+1={m + 1} rows to fit, got {n}"
            )
        self.n, self.m, self.q = n, m, q
        self.B = np.hstack([S, Rstar])
        self.G = self.B.T @ self.B
        self.b = self.B.T @ y
        self.yty = float(y @ y)
        self.y = y
        self.Rss = Rss

    def _factor(self, lam: float):
        """Cholesky of the normal matrix, escalating jitter on failure."""
        M = self.G.copy()
        M[self.m :, self.m :] += (self.n * lam) * self.Rss
        scale = float(np.trace(M)) / M.shape[0]
        for rel in _JITTER_LADDER:
            jitter = rel * scale
            try:
                Mj = M if jitter == 0.0 else M + jitter * np.eye(M.shape[0])
                c = cho_factor(Mj, lower=True, check_finite=False)
                return c, Mj, jitter
            except np.linalg.LinAlgError:
                continue
        cond = float(np.linalg.cond(M))
        raise SingularSystemError(
            f"normal equations not factorizable at lambda={lam:g} "
            f"(condition estimate {cond:.3e})",
            condition_estimate=cond,
        )

    def _theta(self, c) -> np.ndarray:
        return cho_solve(c, self.b, check_finite=False)

    def _trace_A(self, c) -> float:
        return float(np.trace(cho_solve(c, self.G, check_finite=False)))

    def _rss_quadform(self, theta: np.ndarray) -> float:
        rss = self.yty - 2.0 * float(theta @ self.b) + float(theta @ (self.G @ theta))
        return max(rss, 0.0)

    def gcv(self, lam: float) -> tuple[float, float, np.ndarray, float]:
        """V(lambda) plus trace, coefficients, and jitter used."""
        c, _, jitter = self._factor(lam)
        theta = self._theta(c)
        tr = self._trace_A(c)
        rss = self._rss_quadform(theta)
        denom = (1.0 - tr / self.n) ** 2
        if denom <= 0.0:
            return np.inf, tr, theta, jitter
        return (rss / self.n) / denom, tr, theta, jitter


def _condition_estimate(Mj: np.ndarray, c) -> float:
    """1-norm condition estimate from the Cholesky factor."""
    (pocon,) = get_lapack_funcs(("pocon",), (Mj,))
    anorm = float(np.linalg.norm(Mj, 1))
    rcond, info = pocon(c[0], anorm, uplo="L")
    if info != 0 or rcond <= 0.0:
        return float("inf")
    return 1.0 / float(rcond)


def solve_coefficients(S, Rstar, Rstarstar, y, lam: float):
    """Solve the penalized normal equations at a fixed lambda.

    Parameters
    ----------
    S, Rstar, Rstarstar : ndarray
        Unpenalized design (n x m), kernel design (n x q), penalty
        Gram (q x q).
    y : ndarray
        Responses, length n.
    lam : float
        Positive smoothing parameter.

    Returns
    -------
    (alpha, beta) : tuple of ndarray
        Coefficients of the unpenalized and kernel parts.

    Raises
    ------
    SingularSystemError
        If Cholesky fails after the full jitter ladder; carries the
        condition estimate of the unjittered matrix.
    """
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidConfigError(f"lambda must be positive, got {lam!r}")
    sys_ = _PenalizedSystem(S, Rstar, Rstarstar, y)
    c, _, jitter = sys_._factor(lam)
    if jitter:
        logger.debug("jitter %.3e applied at lambda=%g", jitter, lam)
    theta = sys_._theta(c)
    return theta[: sys_.m], theta[sys_.m :]


def smoother_diag(S, Rstar, Rstarstar, y, lam: float):
    """Influence-matrix trace and smoothed values at one lambda.

    Returns (trace_A, yhat) where yhat = A(lambda) y and trace(A) is
    computed exactly as trace(M^-1 B'B); the trace lies in [m, m+q].
    """
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidConfigError(f"lambda must be positive, got {lam!r}")
    sys_ = _PenalizedSystem(S, Rstar, Rstarstar, y)
    c, _, _ = sys_._factor(lam)
    theta = sys_._theta(c)
    return sys_._trace_A(c), sys_.B @ theta


def penalized_objective(S, Rstar, Rstarstar, y, alpha, beta, lam: float) -> float:
    """Value of the fitting objective at given coefficients."""
    r = y - S @ alpha - Rstar @ beta
    return float(r @ r) / len(y) + lam * float(beta @ (Rstarstar @ beta))


_INVGR = (np.sqrt(5.0) - 1.0) / 2.0


def gcv_select(
    data,
    sel,
    spec: AnovaSpec,
    grid: LambdaGrid | None = None,
    rescale: bool = True,
) -> FittedModel:
    """Fit on a basis selection, choosing lambda by GCV.

    Scans the grid, then refines with three golden-section steps in
    log-lambda between the winning point's grid neighbors.  Ties in
    the score go to the smaller lambda.

    Parameters
    ----------
    data : Dataset
    sel : BasisSelection
    spec : AnovaSpec
        Term structure; term scales are re-normalized on the selected
        basis points unless rescale is False.
    grid : LambdaGrid, optional

    Returns
    -------
    FittedModel
        Model at the best lambda; diagnostics carry the influence
        trace, a condition estimate, and any jitter applied.
    """
    grid = grid or LambdaGrid()
    basis_points = np.array(data.X[sel.indices], dtype=np.float64)
    if rescale:
        spec = rescale_term_weights(data, spec, basis_points)
    S = null_space_eval(data.X, spec)
    Rstar = gram_matrix(data.X, basis_points, spec)
    Rstarstar = Rstar[sel.indices]
    sys_ = _PenalizedSystem(S, Rstar, Rstarstar, data.y)

    lams = grid.values()
    scores = np.empty(lams.shape[0])
    n_fail = 0
    for i, lam in enumerate(lams):
        try:
            scores[i], _, _, _ = sys_.gcv(lam)
        except SingularSystemError:
            scores[i] = np.inf
            n_fail += 1
    if n_fail == lams.shape[0]:
        raise SingularSystemError("every lambda grid point failed to factorize")

    best_i = int(np.argmin(scores))  # argmin takes the first, smallest lambda
    best_lam = float(lams[best_i])
    best_V = float(scores[best_i])

    # Golden-section refinement in log-lambda between the neighbors.
    lo = np.log(lams[max(best_i - 1, 0)])
    hi = np.log(lams[min(best_i + 1, lams.shape[0] - 1)])
    if hi > lo:
        x1 = hi - _INVGR * (hi - lo)
        x2 = lo + _INVGR * (hi - lo)
        f1 = _safe_gcv(sys_, np.exp(x1))
        f2 = _safe_gcv(sys_, np.exp(x2))
        for _ in range(3):
            if f1 <= f2:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - _INVGR * (hi - lo)
                f1 = _safe_gcv(sys_, np.exp(x1))
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + _INVGR * (hi - lo)
                f2 = _safe_gcv(sys_, np.exp(x2))
        for xv, fv in ((x1, f1), (x2, f2)):
            lv = float(np.exp(xv))
            if fv < best_V or (fv == best_V and lv < best_lam):
                best_V, best_lam = float(fv), lv

    # Final solve at the winner, scoring from actual residuals.
    c, Mj, jitter = sys_._factor(best_lam)
    theta = sys_._theta(c)
    trace_A = sys_._trace_A(c)
    fitted = sys_.B @ theta
    resid = data.y - fitted
    rss = float(resid @ resid)
    gcv_score = (rss / sys_.n) / (1.0 - trace_A / sys_.n) ** 2
    diagnostics = {
        "trace_A": float(trace_A),
        "condition_estimate": _condition_estimate(Mj, c),
        "jitter": float(jitter),
        "n": sys_.n,
        "q": sys_.q,
        "m": sys_.m,
        "grid_failures": n_fail,
    }
    return FittedModel(
        spec=spec,
        basis_points=basis_points,
        alpha=np.array(theta[: sys_.m]),
        beta=np.array(theta[sys_.m :]),
        lam=best_lam,
        gcv_score=float(gcv_score),
        scaler=np.array(data.scaler),
        diagnostics=diagnostics,
    )


def _safe_gcv(sys_: _PenalizedSystem, lam: float) -> float:
    try:
        return sys_.gcv(lam)[0]
    except SingularSystemError:
        return np.inf


def fit_fixed_lambda(data, sel, spec: AnovaSpec, lam: float, rescale: bool = True) -> FittedModel:
    """Fit on a basis selection at a caller-chosen lambda."""
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidConfigError(f"lambda must be positive, got {lam!r}")
    basis_points = np.array(data.X[sel.indices], dtype=np.float64)
    if rescale:
        spec = rescale_term_weights(data, spec, basis_points)
    S = null_space_eval(data.X, spec)
    Rstar = gram_matrix(data.X, basis_points, spec)
    Rstarstar = Rstar[sel.indices]
    sys_ = _PenalizedSystem(S, Rstar, Rstarstar, data.y)
    c, Mj, jitter = sys_._factor(lam)
    theta = sys_._theta(c)
    trace_A = sys_._trace_A(c)
    resid = data.y - sys_.B @ theta
    rss = float(resid @ resid)
    gcv_score = (rss / sys_.n) / (1.0 - trace_A / sys_.n) ** 2
    return FittedModel(
        spec=spec,
        basis_points=basis_points,
        alpha=np.array(theta[: sys_.m]),
        beta=np.array(theta[sys_.m :]),
        lam=float(lam),
        gcv_score=float(gcv_score),
        scaler=np.array(data.scaler),
        diagnostics={
            "trace_A": float(trace_A),
            "condition_estimate": _condition_estimate(Mj, c),
            "jitter": float(jitter),
            "n": sys_.n,
            "q": sys_.q,
            "m": sys_.m,
        },
    )


def predict(model: FittedModel, Xnew) -> np.ndarray:
    """Evaluate the fitted expansion at raw (unscaled) inputs.

    The stored scaler is applied first; coordinates landing outside
    [0,1] are clamped (see predict_with_diagnostics for the count).
    """
    return predict_with_diagnostics(model, Xnew)[0]


def predict_with_diagnostics(model: FittedModel, Xnew) -> tuple[np.ndarray, int]:
    """Predictions plus the number of clamped out-of-range coordinates."""
    X = np.asarray(Xnew, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    d = model.scaler.shape[1]
    if X.shape[0] and X.shape[1] != d:
        raise InvalidInputError(
            f"prediction input has {X.shape[1]} columns, model expects {d}"
        )
    if X.shape[0] == 0:
        return np.empty(0), 0
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise InvalidInputError(
            f"non-finite prediction input at row {bad[0]}, column {bad[1]}"
        )
    scaled, clamped = apply_scaler(X, model.scaler)
    if clamped:
        logger.debug("%d coordinates clamped into the unit cube", clamped)
    pred = null_space_eval(scaled, model.spec) @ model.alpha
    if model.beta.size:
        pred = pred + gram_matrix(scaled, model.basis_points, model.spec) @ model.beta
    return pred, clamped


def mse(pred, truth) -> float:
    """Mean squared difference of two equal-length vectors."""
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(truth, dtype=np.float64).ravel()
    if p.shape[0] != t.shape[0]:
        raise InvalidInputError(f"length mismatch: {p.shape[0]} vs {t.shape[0]}")
    if p.shape[0] == 0:
        raise InvalidInputError("mse of empty vectors")
    diff = p - t
    return float(diff @ diff) / p.shape[0]


def save_model(model: FittedModel, path, predictors=None):
    """Write a model as versioned JSON; floats round-trip exactly."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "spec": {
            "d": model.spec.d,
            "main_effects": list(model.spec.main_effects),
            "interactions": [list(p) for p in model.spec.interactions],
            "term_scales": list(model.spec.term_scales),
        },
        "scaler": model.scaler.tolist(),
        "basis_points": model.basis_points.tolist(),
        "alpha": model.alpha.tolist(),
        "beta": model.beta.tolist(),
        "lambda": model.lam,
        "gcv_score": model.gcv_score,
        "diagnostics": model.diagnostics,
    }
    if predictors is not None:
        payload["predictors"] = list(predictors)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> FittedModel:
    """Read a model written by save_model; rejects unknown versions."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    version = obj.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise InvalidInputError(
            f"unsupported model format_version {version!r}; "
            f"this reader handles {MODEL_FORMAT_VERSION}"
        )
    spec = AnovaSpec(
        d=int(obj["spec"]["d"]),
        main_effects=tuple(obj["spec"]["main_effects"]),
        interactions=tuple(tuple(p) for p in obj["spec"]["interactions"]),
        term_scales=tuple(obj["spec"]["term_scales"]),
    )
    model = FittedModel(
        spec=spec,
        basis_points=np.asarray(obj["basis_points"], dtype=np.float64),
        alpha=np.asarray(obj["alpha"], dtype=np.float64),
        beta=np.asarray(obj["beta"], dtype=np.float64),
        lam=float(obj["lambda"]),
        gcv_score=float(obj["gcv_score"]),
        scaler=np.asarray(obj["scaler"], dtype=np.float64),
        diagnostics=dict(obj.get("diagnostics", {})),
    )
    return model


def model_predictor_names(path) -> list | None:
    """Predictor column names stored with a model file, if any."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    names = obj.get("predictors")
    return list(names) if names is not None else None
