"""Reproducing-kernel machinery for tensor-product ANOVA splines.

The regression function is decomposed into a constant, one smooth main
effect per selected dimension, and optional smooth two-way interaction
surfaces.  Each one-dimensional component uses the cubic-spline kernel
on [0,1] built from scaled Bernoulli polynomials:

    k1(t) = t - 1/2
    k2(t) = (k1(t)^2 - 1/12) / 2
    k4(t) = (k1(t)^4 - k1(t)^2/2 + 7/240) / 24
    R1(s, t) = k2(s) * k2(t) - k4(|s - t|)

The unpenalized (null) space contains the constant and the linear
score k1 of every main effect, so its dimension is 1 + #mains.  An
interaction term combines the smooth x smooth, smooth x linear, and
linear x smooth products of its pair; the linear x linear product is
kept inside the penalized term rather than enlarging the null space,
which leaves the parametric design matrix small and well conditioned
at the price of a (tiny) penalty on that one cross term.

Every term carries a positive scale factor; rescale_term_weights sets
the scales so each term's Gram matrix on the basis points has average
diagonal 1, making the single smoothing parameter comparable across
terms.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidConfigError, InvalidInputError

__all__ = [
    "AnovaSpec",
    "default_spec",
    "bernoulli_k",
    "kernel_main",
    "kernel_term",
    "kernel_full",
    "null_space_eval",
    "gram_matrix",
    "assemble_matrices",
    "rescale_term_weights",
]


def _check_unit(t, what="argument"):
    arr = np.asarray(t, dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise InvalidInputError(f"{what} outside [0, 1]")
    return arr


def _k1(t):
    return t - 0.5


def _k2(t):
    a = _k1(t)
    return (a * a - 1.0 / 12.0) / 2.0


def _k4(t):
    a = _k1(t)
    a2 = a * a
    return (a2 * a2 - a2 / 2.0 + 7.0 / 240.0) / 24.0


def bernoulli_k(level: int, t):
    """Scaled Bernoulli polynomial of level 1, 2, or 4 on [0,1].

    Parameters
    ----------
    level : int
        1, 2, or 4.
    t : array_like
        Points in [0,1]; evaluated elementwise.

    Returns
    -------
    float or ndarray
        k1(t) = t - 0.5, k2(t) = (k1^2 - 1/12)/2, or
        k4(t) = (k1^4 - k1^2/2 + 7/240)/24.
    """
    arr = _check_unit(t)
    if level == 1:
        out = _k1(arr)
    elif level == 2:
        out = _k2(arr)
    elif level == 4:
        out = _k4(arr)
    else:
        raise InvalidInputError(f"level must be 1, 2, or 4, got {level}")
    return float(out) if np.isscalar(t) else out


def kernel_main(s, t):
    """Cubic-spline kernel R1(s, t) on [0,1], elementwise.

    Symmetric and positive semi-definite; R1(0,0) = 1/120.
    """
    a = _check_unit(s)
    b = _check_unit(t)
    out = _k2(a) * _k2(b) - _k4(np.abs(a - b))
    if np.isscalar(s) and np.isscalar(t):
        return float(out)
    return out


def _r1_cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """R1 on the product grid of two coordinate vectors: (len u, len v)."""
    return np.outer(_k2(u), _k2(v)) - _k4(np.abs(u[:, None] - v[None, :]))


@dataclass(frozen=True)
class AnovaSpec:
    """Term structure of the ANOVA decomposition.

    Attributes
    ----------
    d : int
        Ambient dimension of the predictors.
    main_effects : tuple of int
        Zero-based dimensions with a smooth main effect.
    interactions : tuple of (int, int)
        Dimension pairs (j, j') with j < j'; both members must appear
        in main_effects.
    term_scales : tuple of float
        One positive scale per term, mains first then interactions in
        declaration order.
    """

    d: int
    main_effects: tuple
    interactions: tuple = ()
    term_scales: tuple | None = None

    def __post_init__(self):
        mains = tuple(int(j) for j in self.main_effects)
        inters = tuple((int(a), int(b)) for a, b in self.interactions)
        object.__setattr__(self, "main_effects", mains)
        object.__setattr__(self, "interactions", inters)
        if len(set(mains)) != len(mains):
            raise InvalidConfigError("duplicate main effect")
        for j in mains:
            if not (0 <= j < self.d):
                raise InvalidConfigError(f"main effect {j} outside [0, {self.d})")
        seen = set()
        for a, b in inters:
            if a >= b:
                raise InvalidConfigError(f"interaction ({a},{b}) must have a < b")
            if a not in mains or b not in mains:
                raise InvalidConfigError(
                    f"interaction ({a},{b}) references a missing main effect"
                )
            if (a, b) in seen:
                raise InvalidConfigError(f"duplicate interaction ({a},{b})")
            seen.add((a, b))
        if self.term_scales is None:
            object.__setattr__(
                self, "term_scales", tuple(1.0 for _ in range(self.n_terms))
            )
        else:
            scales = tuple(float(s) for s in self.term_scales)
            if len(scales) != self.n_terms:
                raise InvalidConfigError(
                    f"{len(scales)} term scales for {self.n_terms} terms"
                )
            if any(not np.isfinite(s) or s <= 0 for s in scales):
                raise InvalidConfigError("term scales must be finite and > 0")
            object.__setattr__(self, "term_scales", scales)

    @property
    def n_terms(self) -> int:
        return len(self.main_effects) + len(self.interactions)

    @property
    def m(self) -> int:
        """Null-space dimension: constant plus one linear score per main."""
        return 1 + len(self.main_effects)

    def terms(self) -> list:
        """Terms in canonical order: ('main', j) then ('inter', (j, j'))."""
        out = [("main", j) for j in self.main_effects]
        out += [("inter", pair) for pair in self.interactions]
        return out

    def term_names(self) -> list:
        return [
            f"x{ref}" if kind == "main" else f"x{ref[0]}:x{ref[1]}"
            for kind, ref in self.terms()
        ]


def default_spec(d: int, with_interactions: bool = True) -> AnovaSpec:
    """All main effects, plus all two-way interactions when requested."""
    mains = tuple(range(d))
    inters = ()
    if with_interactions and d >= 2:
        inters = tuple((a, b) for a in range(d) for b in range(a + 1, d))
    return AnovaSpec(d=d, main_effects=mains, interactions=inters)


def _term_block(Xa: np.ndarray, Xb: np.ndarray, kind: str, ref) -> np.ndarray:
    """Unscaled Gram block of one term between two point sets."""
    if kind == "main":
        return _r1_cross(Xa[:, ref], Xb[:, ref])
    a, b = ref
    r1a = _r1_cross(Xa[:, a], Xb[:, a])
    r1b = _r1_cross(Xa[:, b], Xb[:, b])
    lina = np.outer(_k1(Xa[:, a]), _k1(Xb[:, a]))
    linb = np.outer(_k1(Xa[:, b]), _k1(Xb[:, b]))
    return r1a * r1b + r1a * linb + lina * r1b


def kernel_term(x, z, term, theta: float = 1.0):
    """Evaluate one ANOVA term's kernel between two points.

    term is ('main', j) or ('inter', (j, j')); theta scales the value.
    """
    kind, ref = term
    xa = np.atleast_2d(_check_unit(x, "x"))
    za = np.atleast_2d(_check_unit(z, "z"))
    val = theta * _term_block(xa, za, kind, ref)
    return float(val[0, 0]) if val.size == 1 else val


def kernel_full(x, z, spec: AnovaSpec):
    """Full penalized kernel: scale-weighted sum of the spec's terms."""
    xa = np.atleast_2d(_check_unit(x, "x"))
    za = np.atleast_2d(_check_unit(z, "z"))
    out = np.zeros((xa.shape[0], za.shape[0]))
    for theta, (kind, ref) in zip(spec.term_scales, spec.terms()):
        out += theta * _term_block(xa, za, kind, ref)
    return float(out[0, 0]) if out.size == 1 else out


def null_space_eval(x, spec: AnovaSpec):
    """Evaluate the unpenalized basis: 1, then k1(x_j) per main effect.

    Parameters
    ----------
    x : array_like
        A point (d,) or matrix (n, d) inside the unit cube.
    spec : AnovaSpec

    Returns
    -------
    ndarray
        Shape (m,) for a single point, else (n, m).
    """
    arr = _check_unit(x, "x")
    single = arr.ndim == 1
    X = np.atleast_2d(arr)
    if X.shape[1] != spec.d:
        raise InvalidInputError(f"point has {X.shape[1]} coordinates, expected {spec.d}")
    S = np.empty((X.shape[0], spec.m))
    S[:, 0] = 1.0
    for i, j in enumerate(spec.main_effects):
        S[:, 1 + i] = _k1(X[:, j])
    return S[0] if single else S


def gram_matrix(Xa, Xb, spec: AnovaSpec) -> np.ndarray:
    """Kernel matrix of the full penalized kernel between two point sets."""
    Xa = np.atleast_2d(np.asarray(Xa, dtype=np.float64))
    Xb = np.atleast_2d(np.asarray(Xb, dtype=np.float64))
    out = np.zeros((Xa.shape[0], Xb.shape[0]))
    for theta, (kind, ref) in zip(spec.term_scales, spec.terms()):
        out += theta * _term_block(Xa, Xb, kind, ref)
    return out


def _term_diag(X: np.ndarray, kind: str, ref) -> np.ndarray:
    """Diagonal of one term's unscaled Gram on a point set."""
    if kind == "main":
        t = X[:, ref]
        k2t = _k2(t)
        return k2t * k2t - _k4(np.zeros_like(t))
    a, b = ref
    ta, tb = X[:, a], X[:, b]
    r1a = _k2(ta) ** 2 - _k4(np.zeros_like(ta))
    r1b = _k2(tb) ** 2 - _k4(np.zeros_like(tb))
    la = _k1(ta) ** 2
    lb = _k1(tb) ** 2
    return r1a * r1b + r1a * lb + la * r1b


def rescale_term_weights(data, spec: AnovaSpec, basis_points=None) -> AnovaSpec:
    """Set each term scale to q / trace(term Gram on the basis points).

    After rescaling, every term's Gram on the basis points has average
    diagonal exactly 1, so a single smoothing parameter penalizes all
    terms on a comparable scale.  When basis_points is omitted the full
    design is used.

    Raises
    ------
    InvalidConfigError
        If a term's Gram trace is zero (degenerate data), naming the
        term.
    """
    pts = data.X if basis_points is None else np.atleast_2d(basis_points)
    q = pts.shape[0]
    scales = []
    for (kind, ref), name in zip(spec.terms(), spec.term_names()):
        tr = float(_term_diag(pts, kind, ref).sum())
        if tr <= 0.0 or not np.isfinite(tr):
            raise InvalidConfigError(
                f"term {name} has zero Gram trace on the basis points"
            )
        scales.append(q / tr)
    return replace(spec, term_scales=tuple(scales))


def assemble_matrices(data, sel, spec: AnovaSpec):
    """Build the fitting matrices for a basis selection.

    Returns
    -------
    (S, Rstar, Rstarstar) : tuple of ndarray
        S is n x m with columns the unpenalized basis at the data;
        Rstar is n x q with entries kernel(data row i, basis point j);
        Rstarstar is the q x q block of Rstar on the selected rows
        (bitwise identical floats by construction).
    """
    if sel.indices.max(initial=-1) >= data.n or sel.indices.min(initial=0) < 0:
        raise InvalidInputError("selection indices out of range for dataset")
    S = null_space_eval(data.X, spec)
    basis = data.X[sel.indices]
    Rstar = gram_matrix(data.X, basis, spec)
    Rstarstar = Rstar[sel.indices]
    return S, Rstar, Rstarstar
