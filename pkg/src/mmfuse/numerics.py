"""Matrix-level motifs: PCA, regularized CCA, and residual extraction.

The CCA solver whitens both covariance matrices (with additive ridge
loading on the diagonal) and takes the SVD of the whitened cross
covariance. This stays stable when one modality has far more dimensions
than samples, where plain covariance inversion is ill-posed; the ridge
default below exists for exactly that case and can be set to 0 on
full-rank inputs.

All fits are deterministic: no randomized initialization, and component
signs are pinned (largest-magnitude entry positive; the CCA pair is
flipped jointly so the pinned sign never negates a correlation).
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    AlignmentError,
    DimensionError,
    MissingReductionError,
    NumericalError,
)

DEFAULT_RIDGE = 1e-3

SIDE_TEXTUAL = "textual"
SIDE_VISUAL = "visual"

_SAVE_FMT = "%.6f"  # model dumps follow the embedding-file precision rule


@dataclass(frozen=True)
class PcaModel:
    """Column mean, orthonormal components (dim_in x k), variances."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def __post_init__(self):
        for name in ("mean", "components", "explained_variance"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dim_in(self):
        return self.components.shape[0]

    @property
    def k(self):
        return self.components.shape[1]


@dataclass(frozen=True)
class CcaModel:
    """Paired projections maximizing per-component correlation.

    ``proj_x`` maps the first (textual) input, ``proj_y`` the second
    (visual). ``correlations`` holds the per-component sample correlation
    of the projected fit data, clamped to [0, 1].
    """

    mean_x: np.ndarray
    mean_y: np.ndarray
    proj_x: np.ndarray
    proj_y: np.ndarray
    correlations: np.ndarray
    ridge: float

    def __post_init__(self):
        for name in ("mean_x", "mean_y", "proj_x", "proj_y", "correlations"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def k(self):
        return self.proj_x.shape[1]

    @property
    def dim_x(self):
        return self.proj_x.shape[0]

    @property
    def dim_y(self):
        return self.proj_y.shape[0]


def _check_matrix(X, what):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"{what} must be a 2-d matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{what} contains non-finite values")
    return X


def _fix_signs(components):
    """Flip columns so each component's largest-magnitude entry is positive."""
    flips = np.ones(components.shape[1])
    for j in range(components.shape[1]):
        i = int(np.argmax(np.abs(components[:, j])))
        if components[i, j] < 0:
            flips[j] = -1.0
    return components * flips, flips


def pca_fit(X, k):
    """Top-k principal directions of column-centered ``X``.

    Rank-deficient input is not an error: trailing components span the
    null space and carry zero explained variance.
    """
    X = _check_matrix(X, "X")
    n, d = X.shape
    if n < 2:
        raise DimensionError("PCA needs at least 2 rows")
    if not 1 <= k <= min(n - 1, d):
        raise DimensionError(
            f"PCA dimension k={k} outside [1, min(n-1={n - 1}, d={d})]"
        )
    mean = X.mean(axis=0)
    Xc = X - mean
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    components = vt[:k].T
    variance = np.maximum(s[:k] ** 2 / (n - 1), 0.0)
    components, _ = _fix_signs(components)
    return PcaModel(mean=mean, components=components, explained_variance=variance)


def pca_transform(model, X):
    """Project rows of ``X``: ``(X - mean) @ components``."""
    X = _check_matrix(X, "X")
    if X.shape[1] != model.dim_in:
        raise DimensionError(
            f"input dim {X.shape[1]} != model dim_in {model.dim_in}"
        )
    return (X - model.mean) @ model.components


def _inv_sqrt_psd(C, ridge, what):
    d = C.shape[0]
    evals, evecs = np.linalg.eigh(C + ridge * np.eye(d))
    tol = d * np.finfo(np.float64).eps * max(float(evals.max()), 0.0)
    if evals.min() <= tol:
        raise NumericalError(
            f"{what} covariance is singular; refit with a positive ridge"
        )
    return (evecs / np.sqrt(evals)) @ evecs.T


def cca_fit(X, Y, k, ridge=DEFAULT_RIDGE):
    """Regularized CCA of co-indexed ``X`` (n x d1) and ``Y`` (n x d2).

    Components are ordered by non-increasing whitened singular value; the
    stored correlations are the sample correlations of the projected fit
    data, which coincide with those singular values as ridge -> 0.
    """
    X = _check_matrix(X, "X")
    Y = _check_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise AlignmentError(
            f"row counts differ: X has {X.shape[0]}, Y has {Y.shape[0]}"
        )
    n, d1 = X.shape
    d2 = Y.shape[1]
    if n < 3:
        raise DimensionError("CCA needs at least 3 rows")
    if not 1 <= k <= min(d1, d2, n - 1):
        raise DimensionError(
            f"CCA dimension k={k} outside [1, min(d1={d1}, d2={d2}, n-1={n - 1})]"
        )
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    mean_x = X.mean(axis=0)
    mean_y = Y.mean(axis=0)
    Xc = X - mean_x
    Yc = Y - mean_y
    cxx = Xc.T @ Xc / (n - 1)
    cyy = Yc.T @ Yc / (n - 1)
    cxy = Xc.T @ Yc / (n - 1)
    isqrt_x = _inv_sqrt_psd(cxx, ridge, "first-view")
    isqrt_y = _inv_sqrt_psd(cyy, ridge, "second-view")
    u, _, vt = np.linalg.svd(isqrt_x @ cxy @ isqrt_y, full_matrices=False)
    proj_x = isqrt_x @ u[:, :k]
    proj_y = isqrt_y @ vt[:k].T
    # joint sign fix: the flip is decided on the stacked component so that
    # swapping (X, Y) yields exactly swapped projections
    stacked, flips = _fix_signs(np.vstack([proj_x, proj_y]))
    proj_x = proj_x * flips
    proj_y = proj_y * flips
    correlations = _sample_correlations(Xc @ proj_x, Yc @ proj_y)
    return CcaModel(
        mean_x=mean_x,
        mean_y=mean_y,
        proj_x=proj_x,
        proj_y=proj_y,
        correlations=np.clip(correlations, 0.0, 1.0),
        ridge=float(ridge),
    )


def _sample_correlations(A, B):
    A = A - A.mean(axis=0)
    B = B - B.mean(axis=0)
    num = np.einsum("ij,ij->j", A, B)
    den = np.sqrt(np.einsum("ij,ij->j", A, A) * np.einsum("ij,ij->j", B, B))
    out = np.zeros(A.shape[1])
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def cca_transform(model, X, side):
    """Project ``X`` with the chosen side's mean and projection matrix."""
    X = _check_matrix(X, "X")
    if side == SIDE_TEXTUAL:
        mean, proj, dim = model.mean_x, model.proj_x, model.dim_x
    elif side == SIDE_VISUAL:
        mean, proj, dim = model.mean_y, model.proj_y, model.dim_y
    else:
        raise ValueError(f"side must be {SIDE_TEXTUAL!r} or {SIDE_VISUAL!r}, got {side!r}")
    if X.shape[1] != dim:
        raise DimensionError(f"input dim {X.shape[1]} != model {side} dim {dim}")
    return (X - mean) @ proj


def rcca_residual(original, projected, pca=None):
    """Difference between a signal and its shared-space projection.

    With equal dimensions this is plain elementwise subtraction. When the
    original is wider than the projection it must first be reduced to the
    projection's dimensionality; ``pca`` supplies that reduction and must
    have been fit on the original signal.
    """
    original = _check_matrix(original, "original")
    projected = _check_matrix(projected, "projected")
    if original.shape[0] != projected.shape[0]:
        raise DimensionError(
            f"row counts differ: original {original.shape[0]}, "
            f"projected {projected.shape[0]}"
        )
    d = original.shape[1]
    k = projected.shape[1]
    if d == k:
        return original - projected
    if pca is None:
        raise MissingReductionError(
            f"original dim {d} != projected dim {k}: a PCA reduction "
            "of the original signal is required"
        )
    if pca.dim_in != d or pca.k != k:
        raise DimensionError(
            f"reducer maps {pca.dim_in} -> {pca.k}, need {d} -> {k}"
        )
    return pca_transform(pca, original) - projected


# --- text serialization (embedding-style precision rules) -----------------

def _dump_array(fh, name, arr):
    arr = np.atleast_2d(arr)
    fh.write(f"{name} {arr.shape[0]} {arr.shape[1]}\n")
    for row in arr:
        fh.write(" ".join(_SAVE_FMT % v for v in row) + "\n")


def _parse_arrays(lines):
    arrays = {}
    i = 0
    while i < len(lines):
        name, rows, cols = lines[i].split()
        rows, cols = int(rows), int(cols)
        block = [
            [float(t) for t in lines[i + 1 + r].split()] for r in range(rows)
        ]
        arrays[name] = np.array(block, dtype=np.float64).reshape(rows, cols)
        i += 1 + rows
    return arrays


def save_pca_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("pca\n")
        _dump_array(fh, "mean", model.mean)
        _dump_array(fh, "components", model.components)
        _dump_array(fh, "explained_variance", model.explained_variance)


def load_pca_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "pca":
        raise ValueError(f"{path}: not a PCA model dump")
    arrays = _parse_arrays(lines[1:])
    return PcaModel(
        mean=arrays["mean"][0],
        components=arrays["components"],
        explained_variance=arrays["explained_variance"][0],
    )


def save_cca_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"cca ridge={model.ridge!r}\n")
        _dump_array(fh, "mean_x", model.mean_x)
        _dump_array(fh, "mean_y", model.mean_y)
        _dump_array(fh, "proj_x", model.proj_x)
        _dump_array(fh, "proj_y", model.proj_y)
        _dump_array(fh, "correlations", model.correlations)


def load_cca_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("cca ridge="):
        raise ValueError(f"{path}: not a CCA model dump")
    ridge = float(lines[0].split("=", 1)[1])
    arrays = _parse_arrays(lines[1:])
    return CcaModel(
        mean_x=arrays["mean_x"][0],
        mean_y=arrays["mean_y"][0],
        proj_x=arrays["proj_x"],
        proj_y=arrays["proj_y"],
        correlations=arrays["correlations"][0],
        ridge=ridge,
    )
