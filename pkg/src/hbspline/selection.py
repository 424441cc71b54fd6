"""Basis-point selection for large-sample smoothing splines.

Fitting cost is controlled by restricting the kernel expansion to q
selected observations.  The main selector stratifies along a Hilbert
curve: every point is mapped to the center of its curve interval, the
centers are histogrammed into C equal-width bins of [0,1], and roughly
q/C' points are sampled from each of the C' non-empty bins.  Because
curve intervals with equal length cover equal volumes, the bins
partition space into equal-volume tubes along the curve, so the
selected points track the data density while spreading through its
support.

Three baselines share the interface: uniform random sampling, a
response-stratified variant (equal-width response slices), and a
space-filling variant (greedy nearest data point to a scrambled Sobol
target sequence).

All selectors are deterministic functions of (data, config): random
draws come from a counter-based generator seeded with the config seed.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import InvalidConfigError, InvalidInputError
from .hilbert import CurveOrder, index_to_center, point_to_index

__all__ = [
    "Dataset",
    "SelectionConfig",
    "BasisSelection",
    "METHODS",
    "scale_to_unit_cube",
    "apply_scaler",
    "dataset_from_unit_cube",
    "hilbert_bins",
    "hbs_select",
    "ubs_select",
    "abs_select",
    "sbs_select",
    "select",
    "condition5_diagnostic",
    "selection_to_json",
    "selection_from_json",
]

logger = logging.getLogger(__name__)

METHODS = ("hbs", "ubs", "abs", "sbs")

# Above this bin-balance value the stratification guarantee degrades;
# see condition5_diagnostic.
BALANCE_WARN_THRESHOLD = 10.0


@dataclass(frozen=True)
class Dataset:
    """Predictors scaled to the unit cube plus responses.

    Attributes
    ----------
    X : ndarray
        (n, d) matrix with every entry in [0, 1].
    y : ndarray
        Length-n response vector.
    scaler : ndarray
        (2, d) array holding the per-column (min, max) of the raw data;
        columns with min == max were constant and scale to 0.5.
    """

    X: np.ndarray
    y: np.ndarray
    scaler: np.ndarray

    def __post_init__(self):
        self.X.setflags(write=False)
        self.y.setflags(write=False)
        self.scaler.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def scale_to_unit_cube(raw, y) -> Dataset:
    """Min-max scale raw predictors columnwise onto [0,1]^d.

    Parameters
    ----------
    raw : array_like
        (n, d) predictor matrix, finite entries.
    y : array_like
        Length-n response vector, finite entries.

    Returns
    -------
    Dataset
        Scaled predictors, responses, and the per-column (min, max)
        scaler.  Constant columns map to 0.5 everywhere.

    Raises
    ------
    InvalidInputError
        On any non-finite entry; message carries row and column.
    """
    X = np.array(raw, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    yv = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] < 1:
        raise InvalidInputError("empty dataset")
    if yv.shape[0] != X.shape[0]:
        raise InvalidInputError(
            f"{X.shape[0]} predictor rows but {yv.shape[0]} responses"
        )
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        r, c = bad[0]
        raise InvalidInputError(f"non-finite predictor at row {r}, column {c}")
    if not np.all(np.isfinite(yv)):
        r = int(np.flatnonzero(~np.isfinite(yv))[0])
        raise InvalidInputError(f"non-finite response at row {r}")
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    scaler = np.vstack([lo, hi])
    scaled, _ = apply_scaler(X, scaler)
    return Dataset(X=scaled, y=yv.copy(), scaler=scaler)


def apply_scaler(raw, scaler) -> tuple[np.ndarray, int]:
    """Apply a stored (min, max) scaler; clamp out-of-range results.

    Returns the scaled matrix and how many entries had to be clamped
    into [0, 1].  Constant columns (min == max) map to 0.5.
    """
    X = np.atleast_2d(np.asarray(raw, dtype=np.float64))
    lo, hi = scaler[0], scaler[1]
    span = hi - lo
    const = span <= 0
    safe_span = np.where(const, 1.0, span)
    scaled = (X - lo) / safe_span
    scaled[:, const] = 0.5
    clamp = int(np.count_nonzero((scaled < 0.0) | (scaled > 1.0)))
    if clamp:
        scaled = np.clip(scaled, 0.0, 1.0)
    return scaled, clamp


def dataset_from_unit_cube(X, y=None) -> Dataset:
    """Wrap already-scaled predictors as a Dataset (identity scaler)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.min(initial=0.0) < 0.0 or X.max(initial=0.0) > 1.0:
        raise InvalidInputError("predictors not inside the unit cube")
    if y is None:
        y = np.zeros(X.shape[0])
    yv = np.asarray(y, dtype=np.float64).ravel()
    scaler = np.vstack([np.zeros(X.shape[1]), np.ones(X.shape[1])])
    return Dataset(X=X.copy(), y=yv.copy(), scaler=scaler)


@dataclass(frozen=True)
class SelectionConfig:
    """How many basis points to pick and how.

    Attributes
    ----------
    q : int
        Number of basis points, 1 <= q <= n.
    method : str
        One of 'hbs', 'ubs', 'abs', 'sbs'.
    seed : int
        64-bit seed; identical (data, config) pairs give identical
        selections.
    C : int or None
        Histogram bin count for 'hbs'; defaults to q.
    k : int or None
        Curve order for 'hbs'; defaults to max(ceil(log2(C)/d) + 2, 4),
        capped so that d*k <= 62.
    """

    q: int
    method: str = "hbs"
    seed: int = 0
    C: int | None = None
    k: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidConfigError(
                f"unknown method {self.method!r}; expected one of {METHODS}"
            )
        if self.q < 1:
            raise InvalidConfigError(f"q={self.q} must be >= 1")
        if self.C is not None and self.C < 1:
            raise InvalidConfigError(f"C={self.C} must be >= 1")
        if self.k is not None and self.k < 1:
            raise InvalidConfigError(f"k={self.k} must be >= 1")

    def resolved_C(self) -> int:
        return self.q if self.C is None else self.C

    def resolved_k(self, d: int) -> int:
        if self.k is not None:
            return self.k
        C = self.resolved_C()
        k = max(math.ceil(math.log2(max(C, 2)) / d) + 2, 4)
        return min(k, 62 // d)


@dataclass(frozen=True)
class BasisSelection:
    """The q selected rows plus stratification metadata.

    bin_weight[j] is the fraction of the sample represented by selected
    point j: (points in j's bin) / (n * points selected from that bin)
    for the Hilbert selector, and 1/q for the baselines.  Weights of a
    selection sum to (points falling in non-empty bins)/n, which is 1
    whenever every point is binned.
    """

    indices: np.ndarray
    bin_weight: np.ndarray
    nonempty_bins: int
    method: str
    seed: int
    C: int | None = None
    k: int | None = None
    shortfall_moved: int = 0

    def __post_init__(self):
        self.indices.setflags(write=False)
        self.bin_weight.setflags(write=False)

    @property
    def q(self) -> int:
        return int(self.indices.shape[0])


def _check_q(data: Dataset, cfg: SelectionConfig):
    if data.n < 1:
        raise InvalidInputError("empty dataset")
    if cfg.q > data.n:
        raise InvalidConfigError(f"q={cfg.q} exceeds sample size n={data.n}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def hilbert_bins(data: Dataset, C: int, k: int) -> np.ndarray:
    """Assign every row its histogram bin along the Hilbert curve.

    Maps each point to the center of its curve interval at order k and
    bins the centers into C equal-width bins of [0,1].  Returns the
    length-n int64 bin array with values in [0, C).
    """
    order = CurveOrder(k=k, d=data.d)
    if C > order.total_cells:
        raise InvalidConfigError(
            f"C={C} exceeds the {order.total_cells} curve cells at k={k}"
        )
    idx = point_to_index(data.X, order)
    centers = index_to_center(idx, order)
    return np.minimum((centers * C).astype(np.int64), C - 1)


def _allocate_quotas(pops: np.ndarray, q: int) -> tuple[np.ndarray, int]:
    """Split q draws across groups with populations pops (> 0 each).

    Base quota is floor(q / groups); the remainder goes one-each to the
    groups with the largest populations, ties to the lower group index.
    Groups smaller than their quota contribute everything and the
    shortfall is re-spread by the same largest-population rule over
    groups still below capacity.  Returns the per-group counts and how
    many draws had to be moved by shortfall handling.
    """
    g = len(pops)
    base, rem = divmod(q, g)
    quota = np.full(g, base, dtype=np.int64)
    if rem:
        order = np.lexsort((np.arange(g), -pops))
        quota[order[:rem]] += 1
    moved = 0
    while True:
        over = quota > pops
        if not over.any():
            break
        deficit = int((quota[over] - pops[over]).sum())
        moved += deficit
        quota[over] = pops[over]
        capacity = pops - quota
        while deficit > 0:
            eligible = np.flatnonzero(capacity > 0)
            take = eligible[np.lexsort((eligible, -pops[eligible]))]
            take = take[: min(deficit, len(take))]
            quota[take] += 1
            capacity[take] -= 1
            deficit -= len(take)
    return quota, moved


def _stratified_draw(
    groups: np.ndarray, q: int, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Sample q rows stratified by a group label per row.

    Returns (indices, weights, nonempty_groups, shortfall_moved); the
    weight of a selected row is pop(group) / (n * drawn(group)).
    """
    # One stable sort gives every group's member list in row order.
    row_order = np.argsort(groups, kind="stable")
    labels, starts = np.unique(groups[row_order], return_index=True)
    pops = np.diff(np.append(starts, groups.size))
    quota, moved = _allocate_quotas(pops, q)
    picked = []
    weights = []
    for gi in range(labels.size):
        s = int(quota[gi])
        if s == 0:
            continue
        members = row_order[starts[gi] : starts[gi] + pops[gi]]
        if s >= members.size:
            chosen = members
        else:
            chosen = np.sort(rng.choice(members, size=s, replace=False))
        picked.append(chosen)
        weights.append(np.full(chosen.size, pops[gi] / (n * s)))
    indices = np.concatenate(picked)
    w = np.concatenate(weights)
    return indices, w, int(labels.size), moved


def hbs_select(data: Dataset, cfg: SelectionConfig) -> BasisSelection:
    """Select q rows stratified along the Hilbert curve.

    Parameters
    ----------
    data : Dataset
        Scaled sample.
    cfg : SelectionConfig
        Must have method 'hbs'; C defaults to q and k to the rule in
        SelectionConfig.resolved_k.

    Returns
    -------
    BasisSelection
        q distinct row indices with per-bin weights; at most
        ceil(q/C') rows come from any non-empty bin unless shortfall
        redistribution was required (recorded in shortfall_moved).
    """
    if cfg.method != "hbs":
        raise InvalidConfigError(f"hbs_select got method {cfg.method!r}")
    _check_q(data, cfg)
    C = cfg.resolved_C()
    k = cfg.resolved_k(data.d)
    bins = hilbert_bins(data, C, k)
    rng = _rng(cfg.seed)
    indices, w, nonempty, moved = _stratified_draw(bins, cfg.q, data.n, rng)
    if moved:
        logger.info(
            "hbs: %d draws moved between bins (some bins smaller than quota)",
            moved,
        )
    return BasisSelection(
        indices=indices,
        bin_weight=w,
        nonempty_bins=nonempty,
        method="hbs",
        seed=cfg.seed,
        C=C,
        k=k,
        shortfall_moved=moved,
    )


def ubs_select(data: Dataset, cfg: SelectionConfig) -> BasisSelection:
    """Select q rows by simple random sampling without replacement."""
    if cfg.method != "ubs":
        raise InvalidConfigError(f"ubs_select got method {cfg.method!r}")
    _check_q(data, cfg)
    rng = _rng(cfg.seed)
    indices = np.sort(rng.choice(data.n, size=cfg.q, replace=False))
    return BasisSelection(
        indices=indices.astype(np.int64),
        bin_weight=np.full(cfg.q, 1.0 / cfg.q),
        nonempty_bins=cfg.q,
        method="ubs",
        seed=cfg.seed,
    )


def abs_select(data: Dataset, cfg: SelectionConfig) -> BasisSelection:
    """Select q rows stratified by response value.

    The response range is split into ceil(sqrt(q)) equal-width slices
    and rows are drawn evenly across the non-empty slices with the same
    quota rule as the Hilbert selector.  With a constant response there
    is a single slice and this reduces to uniform sampling.
    """
    if cfg.method != "abs":
        raise InvalidConfigError(f"abs_select got method {cfg.method!r}")
    _check_q(data, cfg)
    K = math.ceil(math.sqrt(cfg.q))
    y = data.y
    lo, hi = float(y.min()), float(y.max())
    if hi > lo:
        slices = np.minimum(((y - lo) / (hi - lo) * K).astype(np.int64), K - 1)
    else:
        slices = np.zeros(data.n, dtype=np.int64)
    rng = _rng(cfg.seed)
    indices, _, nonempty, moved = _stratified_draw(slices, cfg.q, data.n, rng)
    return BasisSelection(
        indices=indices,
        bin_weight=np.full(cfg.q, 1.0 / cfg.q),
        nonempty_bins=nonempty,
        method="abs",
        seed=cfg.seed,
        shortfall_moved=moved,
    )


def sbs_select(data: Dataset, cfg: SelectionConfig) -> BasisSelection:
    """Select the q data points greedily nearest a low-discrepancy set.

    Generates q scrambled Sobol targets in the unit cube and, in
    sequence order, matches each target with its nearest not yet
    selected row in Euclidean distance.
    """
    if cfg.method != "sbs":
        raise InvalidConfigError(f"sbs_select got method {cfg.method!r}")
    _check_q(data, cfg)
    sob = qmc.Sobol(d=data.d, scramble=True, seed=int(cfg.seed) & (2**63 - 1))
    m = max(1, math.ceil(math.log2(cfg.q))) if cfg.q > 1 else 0
    targets = sob.random_base2(m)[: cfg.q]
    X = data.X
    taken = np.zeros(data.n, dtype=bool)
    picked = np.empty(cfg.q, dtype=np.int64)
    for t in range(cfg.q):
        diff = X - targets[t]
        dist = np.einsum("ij,ij->i", diff, diff)
        dist[taken] = np.inf
        j = int(np.argmin(dist))
        picked[t] = j
        taken[j] = True
    picked = np.sort(picked)
    return BasisSelection(
        indices=picked,
        bin_weight=np.full(cfg.q, 1.0 / cfg.q),
        nonempty_bins=cfg.q,
        method="sbs",
        seed=cfg.seed,
    )


_SELECTORS = {
    "hbs": hbs_select,
    "ubs": ubs_select,
    "abs": abs_select,
    "sbs": sbs_select,
}


def select(data: Dataset, cfg: SelectionConfig) -> BasisSelection:
    """Dispatch to the selector named by cfg.method."""
    return _SELECTORS[cfg.method](data, cfg)


def condition5_diagnostic(data: Dataset, cfg: SelectionConfig, warn: bool = True) -> float:
    """Bin-balance diagnostic max_i q*n_i/n over the histogram bins.

    Values near 1 mean the bins split the sample evenly (the regime in
    which stratified selection provably helps); large values flag a
    near-degenerate density piling into few bins.  Logged as a warning
    above BALANCE_WARN_THRESHOLD unless warn=False (for callers that
    record the value themselves).
    """
    C = cfg.resolved_C()
    k = cfg.resolved_k(data.d)
    bins = hilbert_bins(data, C, k)
    counts = np.bincount(bins, minlength=C)
    value = float(cfg.q * counts.max() / data.n)
    if warn and value > BALANCE_WARN_THRESHOLD:
        logger.warning(
            "bin balance %.2f exceeds %.1f: density concentrates in few bins",
            value,
            BALANCE_WARN_THRESHOLD,
        )
    return value


def selection_to_json(sel: BasisSelection) -> str:
    """Serialize a selection for audit and replay."""
    return json.dumps(
        {
            "indices": sel.indices.tolist(),
            "bin_weight": sel.bin_weight.tolist(),
            "nonempty_bins": sel.nonempty_bins,
            "method": sel.method,
            "seed": sel.seed,
            "C": sel.C,
            "k": sel.k,
            "shortfall_moved": sel.shortfall_moved,
        }
    )


def selection_from_json(text: str) -> BasisSelection:
    obj = json.loads(text)
    return BasisSelection(
        indices=np.asarray(obj["indices"], dtype=np.int64),
        bin_weight=np.asarray(obj["bin_weight"], dtype=np.float64),
        nonempty_bins=int(obj["nonempty_bins"]),
        method=obj["method"],
        seed=int(obj["seed"]),
        C=obj.get("C"),
        k=obj.get("k"),
        shortfall_moved=int(obj.get("shortfall_moved", 0)),
    )
