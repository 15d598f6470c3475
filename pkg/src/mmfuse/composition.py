"""Layered fusion configurations and their application to table pairs.

A configuration picks at most one motif per layer:

* layer a (data): nothing, or PCA of both modalities to one shared dim;
* layer b (fusion): nothing, CCA, residual CCA, or the sanctioned mixed
  pair (one CCA projection plus one residual) that must feed layer c;
* layer c (combination): nothing, vector concatenation, or linear
  interpolation of the two models' pair scores with weight ``alpha`` on
  the first model.

Fusion motifs require their two inputs to share a dimensionality, and the
two inputs of layer c always come from the same layer-b method except for
the explicit CCA-plus-residual mix. A configuration with no motifs at all
must name the modality it scores with (``output_side``), so unimodal
baselines are first-class.
"""

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingTable
from .errors import AlignmentError, ConfigurationError, ParseError
from .numerics import (
    DEFAULT_RIDGE,
    SIDE_TEXTUAL,
    SIDE_VISUAL,
    cca_fit,
    cca_transform,
    pca_fit,
    pca_transform,
    rcca_residual,
)

SIDE_BOTH = "both"

_SIDE_LETTER = {SIDE_TEXTUAL: "T", SIDE_VISUAL: "V", SIDE_BOTH: "both"}
_LETTER_SIDE = {v: k for k, v in _SIDE_LETTER.items()}

_B_ORDER = {"none": 0, "cca": 1, "rcca": 2, "cca_plus_rcca": 3}
_C_ORDER = {"none": 0, "concat": 1, "li": 2}
_SIDE_ORDER = {SIDE_TEXTUAL: 0, SIDE_VISUAL: 1, SIDE_BOTH: 2, None: 3}

MOTIFS = ("pca", "cca", "rcca", "concat", "li")


@dataclass(frozen=True)
class Configuration:
    """One choice per layer plus all numeric parameters."""

    layer_a: str = "none"            # "none" | "pca"
    pca_dim: int = None
    layer_b: str = "none"            # "none" | "cca" | "rcca" | "cca_plus_rcca"
    fusion_dim: int = None
    output_side: str = None          # textual | visual | both (cca / rcca);
                                     # textual | visual when no motifs at all
    cca_side: str = None             # cca_plus_rcca only
    rcca_side: str = None
    layer_c: str = "none"            # "none" | "concat" | "li"
    alpha: float = None
    ridge: float = DEFAULT_RIDGE


@dataclass(frozen=True)
class ScoringModel:
    """Executable result of a configuration: one table, or two plus alpha.

    For a pair, ``alpha`` weights the first table's pair score and both
    tables share one ordered vocabulary.
    """

    first: EmbeddingTable
    second: EmbeddingTable = None
    alpha: float = None

    def __post_init__(self):
        if self.second is not None:
            if self.second.vocab != self.first.vocab:
                raise AlignmentError("paired tables must share a vocabulary")
            if self.alpha is None or not 0.0 <= self.alpha <= 1.0:
                raise ValueError("pair models need alpha in [0, 1]")
        elif self.alpha is not None:
            raise ValueError("alpha is only meaningful for pair models")

    @property
    def is_pair(self):
        return self.second is not None

    @property
    def vocab(self):
        return self.first.vocab


def validate_configuration(config, dim_t, dim_v):
    """Return the list of violated composition constraints (empty = valid)."""
    v = []
    c = config

    if c.layer_a not in ("none", "pca"):
        v.append(f"unknown layer-a motif {c.layer_a!r}")
        return v
    if c.layer_b not in _B_ORDER:
        v.append(f"unknown layer-b motif {c.layer_b!r}")
        return v
    if c.layer_c not in _C_ORDER:
        v.append(f"unknown layer-c motif {c.layer_c!r}")
        return v

    if c.layer_a == "pca":
        if c.pca_dim is None or c.pca_dim < 1:
            v.append("layer-a PCA requires a positive dimension")
        elif c.pca_dim > min(dim_t, dim_v):
            v.append(
                f"layer-a PCA dimension {c.pca_dim} exceeds the smaller "
                f"input dimensionality {min(dim_t, dim_v)}"
            )
    elif c.pca_dim is not None:
        v.append("pca_dim set although layer a is none")

    ta = c.pca_dim if c.layer_a == "pca" and c.pca_dim else dim_t
    va = c.pca_dim if c.layer_a == "pca" and c.pca_dim else dim_v

    if c.layer_b == "none":
        if c.fusion_dim is not None:
            v.append("fusion_dim set although layer b is none")
        if c.cca_side is not None or c.rcca_side is not None:
            v.append("cca_side/rcca_side are only meaningful for cca_plus_rcca")
        if c.layer_c == "none":
            if c.output_side not in (SIDE_TEXTUAL, SIDE_VISUAL):
                v.append(
                    "a configuration with no fusion and no combination must "
                    "select output_side textual or visual"
                )
        elif c.output_side is not None:
            v.append("output_side set although layer b is none and layer c combines")
    else:
        if ta != va:
            v.append(
                f"fusion requires inputs of the same dimensionality, got "
                f"{ta} and {va}"
            )
        if c.fusion_dim is None or c.fusion_dim < 1:
            v.append(f"{c.layer_b} requires a positive dimension")
        elif c.fusion_dim > min(ta, va):
            v.append(
                f"{c.layer_b} dimension {c.fusion_dim} exceeds its input "
                f"dimensionality {min(ta, va)}"
            )
        if c.layer_b in ("cca", "rcca"):
            if c.output_side not in (SIDE_TEXTUAL, SIDE_VISUAL, SIDE_BOTH):
                v.append(f"{c.layer_b} requires output_side textual, visual or both")
            if c.cca_side is not None or c.rcca_side is not None:
                v.append("cca_side/rcca_side are only meaningful for cca_plus_rcca")
        else:  # cca_plus_rcca
            if c.cca_side not in (SIDE_TEXTUAL, SIDE_VISUAL):
                v.append("cca_plus_rcca requires cca_side textual or visual")
            if c.rcca_side not in (SIDE_TEXTUAL, SIDE_VISUAL):
                v.append("cca_plus_rcca requires rcca_side textual or visual")
            if c.output_side is not None:
                v.append("cca_plus_rcca output is its two vectors; output_side must be unset")
            if c.layer_c == "none":
                v.append("cca_plus_rcca must feed a layer-c combination")

    two_inputs = (
        c.layer_b == "none"
        or c.layer_b == "cca_plus_rcca"
        or (c.layer_b in ("cca", "rcca") and c.output_side == SIDE_BOTH)
    )
    if c.layer_c == "none":
        if c.alpha is not None:
            v.append("alpha set although layer c is none")
        if c.layer_b in ("cca", "rcca") and c.output_side == SIDE_BOTH:
            v.append(
                f"{c.layer_b} with output_side both produces two vectors and "
                "needs a layer-c combination"
            )
    else:
        if not two_inputs:
            v.append(
                f"{c.layer_c} needs two input vector tables but layer b "
                "yields a single one"
            )
        if c.layer_c == "li":
            if c.alpha is None or not 0.0 <= c.alpha <= 1.0:
                v.append("li requires alpha in [0, 1]")
        elif c.alpha is not None:
            v.append("alpha is only meaningful for li")

    if c.ridge < 0:
        v.append("ridge must be >= 0")
    return v


class FitProvider:
    """Computes layer fits on demand.

    ``apply_configuration`` routes every PCA/CCA fit through one of these;
    sweeps substitute a memoizing subclass so repeated configurations
    share work without changing any result.
    """

    def __init__(self, textual_matrix, visual_matrix):
        self._raw = {SIDE_TEXTUAL: textual_matrix, SIDE_VISUAL: visual_matrix}

    def reduced(self, side, a_dim):
        """Layer-a output for one modality (``a_dim`` None means raw)."""
        if a_dim is None:
            return self._raw[side]
        model = self.reducer(side, None, a_dim)
        return pca_transform(model, self._raw[side])

    def reducer(self, side, a_dim, dim):
        """PCA fit of the layer-a output of ``side`` down to ``dim``."""
        return pca_fit(self.reduced(side, a_dim), dim)

    def fusion(self, a_dim, dim, ridge):
        """CCA fit between the two layer-a outputs."""
        return cca_fit(
            self.reduced(SIDE_TEXTUAL, a_dim),
            self.reduced(SIDE_VISUAL, a_dim),
            dim,
            ridge=ridge,
        )


def _residual(fits, cca_model, side, a_dim):
    mat = fits.reduced(side, a_dim)
    projected = cca_transform(cca_model, mat, side)
    reducer = None
    if mat.shape[1] != projected.shape[1]:
        # the fallback reduction is fit on this signal itself
        reducer = fits.reducer(side, a_dim, projected.shape[1])
    return rcca_residual(mat, projected, pca=reducer)


def _row_normalize(matrix):
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    safe = np.where(norms > 1e-12, norms, 1.0)
    return matrix / safe[:, None]


def apply_configuration(config, textual, visual, fits=None, normalize_concat=False):
    """Execute a configuration on an aligned table pair.

    Returns a :class:`ScoringModel`; deterministic for identical inputs.
    ``normalize_concat`` row-normalizes each block before concatenation
    (cosine scoring is scale-sensitive per block); it defaults to off and
    has no effect on the other combination modes.
    """
    if textual.vocab != visual.vocab:
        raise AlignmentError("tables must be vocabulary-aligned before applying")
    violations = validate_configuration(config, textual.dim, visual.dim)
    if violations:
        raise ConfigurationError(violations)
    if fits is None:
        fits = FitProvider(textual.matrix, visual.matrix)

    a_dim = config.pca_dim if config.layer_a == "pca" else None
    vocab = textual.vocab

    def table(matrix, label):
        return EmbeddingTable(vocab, matrix, name=label)

    def label(side, origin):
        base = textual.name if side == SIDE_TEXTUAL else visual.name
        prefix = f"pca{a_dim}({base})" if a_dim else base
        return f"{origin}({prefix})" if origin else prefix

    # layer b: derive (matrix, modality, origin) entries
    if config.layer_b == "none":
        entries = [
            (fits.reduced(SIDE_TEXTUAL, a_dim), SIDE_TEXTUAL, ""),
            (fits.reduced(SIDE_VISUAL, a_dim), SIDE_VISUAL, ""),
        ]
    else:
        model = fits.fusion(a_dim, config.fusion_dim, config.ridge)
        if config.layer_b == "cca":
            entries = [
                (cca_transform(model, fits.reduced(s, a_dim), s), s, "cca")
                for s in (SIDE_TEXTUAL, SIDE_VISUAL)
            ]
        elif config.layer_b == "rcca":
            entries = [
                (_residual(fits, model, s, a_dim), s, "rcca")
                for s in (SIDE_TEXTUAL, SIDE_VISUAL)
            ]
        else:  # cca_plus_rcca: projection of one side, residual of the other
            s_c, s_r = config.cca_side, config.rcca_side
            entries = [
                (cca_transform(model, fits.reduced(s_c, a_dim), s_c), s_c, "cca"),
                (_residual(fits, model, s_r, a_dim), s_r, "rcca"),
            ]

    if config.layer_b in ("cca", "rcca") and config.output_side != SIDE_BOTH:
        entries = [e for e in entries if e[1] == config.output_side]
    if config.layer_b == "none" and config.layer_c == "none":
        entries = [e for e in entries if e[1] == config.output_side]

    # layer c ordering: the textual-derived input comes first; when both
    # inputs share a modality the CCA-derived one comes first
    if len(entries) == 2:
        first, second = entries
        if first[1] != second[1]:
            if second[1] == SIDE_TEXTUAL:
                first, second = second, first
        entries = [first, second]

    if config.layer_c == "none":
        mat, side, origin = entries[0]
        return ScoringModel(table(mat, label(side, origin)))
    if config.layer_c == "concat":
        (m1, s1, o1), (m2, s2, o2) = entries
        if normalize_concat:
            m1 = _row_normalize(m1)
            m2 = _row_normalize(m2)
        name = f"concat[{label(s1, o1)};{label(s2, o2)}]"
        return ScoringModel(table(np.hstack([m1, m2]), name))
    (m1, s1, o1), (m2, s2, o2) = entries
    return ScoringModel(
        table(m1, label(s1, o1)), table(m2, label(s2, o2)), alpha=config.alpha
    )


def used_motifs(config):
    """Set of motif names a configuration actually applies."""
    used = set()
    if config.layer_a == "pca":
        used.add("pca")
    if config.layer_b in ("cca", "cca_plus_rcca"):
        used.add("cca")
    if config.layer_b in ("rcca", "cca_plus_rcca"):
        used.add("rcca")
    if config.layer_c in ("concat", "li"):
        used.add(config.layer_c)
    return frozenset(used)


def canonical_key(config):
    """Total, deterministic sort key over configurations."""
    c = config
    return (
        0 if c.layer_a == "none" else 1,
        c.pca_dim or 0,
        _B_ORDER[c.layer_b],
        c.fusion_dim or 0,
        _SIDE_ORDER[c.output_side],
        _SIDE_ORDER[c.cca_side],
        _SIDE_ORDER[c.rcca_side],
        _C_ORDER[c.layer_c],
        c.alpha if c.alpha is not None else -1.0,
    )


def enumerate_configurations(dim_t, dim_v, grid):
    """Every valid configuration for the given input dims under ``grid``.

    Deterministic, duplicate-free, emitted in canonical order: layer-a
    dim ascending, then layer-b variant, layer-b dim, sides, layer-c
    variant, alpha. ``grid.motif_filter``, when set, keeps only
    configurations whose motifs all belong to the filter.
    """
    dims = grid.dims_up_to(min(dim_t, dim_v))
    alphas = grid.alphas()
    ridge = grid.ridge
    out = []

    def emit(**kw):
        cfg = Configuration(ridge=ridge, **kw)
        if grid.motif_filter is None or used_motifs(cfg) <= grid.motif_filter:
            out.append(cfg)

    for a_dim in [None] + dims:
        a = {} if a_dim is None else {"layer_a": "pca", "pca_dim": a_dim}
        ta = a_dim if a_dim is not None else dim_t
        va = a_dim if a_dim is not None else dim_v
        # no fusion: unimodal picks, then raw-pair combinations
        emit(**a, output_side=SIDE_TEXTUAL)
        emit(**a, output_side=SIDE_VISUAL)
        emit(**a, layer_c="concat")
        for alpha in alphas:
            emit(**a, layer_c="li", alpha=alpha)
        if ta != va:
            continue
        f_dims = grid.dims_up_to(min(ta, va))
        for variant in ("cca", "rcca"):
            for f_dim in f_dims:
                b = {"layer_b": variant, "fusion_dim": f_dim}
                emit(**a, **b, output_side=SIDE_TEXTUAL)
                emit(**a, **b, output_side=SIDE_VISUAL)
                emit(**a, **b, output_side=SIDE_BOTH, layer_c="concat")
                for alpha in alphas:
                    emit(**a, **b, output_side=SIDE_BOTH, layer_c="li", alpha=alpha)
        for f_dim in f_dims:
            for s_c in (SIDE_TEXTUAL, SIDE_VISUAL):
                for s_r in (SIDE_TEXTUAL, SIDE_VISUAL):
                    b = {
                        "layer_b": "cca_plus_rcca",
                        "fusion_dim": f_dim,
                        "cca_side": s_c,
                        "rcca_side": s_r,
                    }
                    emit(**a, **b, layer_c="concat")
                    for alpha in alphas:
                        emit(**a, **b, layer_c="li", alpha=alpha)
    return out


def output_dimension(config, dim_t, dim_v):
    """Dimensionality measure used for lowest-dimension tie-breaking.

    Single table: its dim. Concatenation: sum of the two input dims.
    Score interpolation keeps two tables, measured as the larger dim.
    """
    ta = config.pca_dim if config.layer_a == "pca" else dim_t
    va = config.pca_dim if config.layer_a == "pca" else dim_v
    if config.layer_b == "none":
        in_t, in_v = ta, va
    else:
        in_t = in_v = config.fusion_dim
    if config.layer_c == "none":
        if config.layer_b == "none":
            return in_t if config.output_side == SIDE_TEXTUAL else in_v
        return config.fusion_dim
    if config.layer_c == "concat":
        return in_t + in_v
    return max(in_t, in_v)


# --- flat text serialization ----------------------------------------------

def _format_side(side):
    return _SIDE_LETTER[side]


def format_configuration(config, sep="\n"):
    """Flat ``key=value`` form; exact round-trip through ``parse_configuration``."""
    c = config
    if c.layer_a == "pca":
        a = f"pca:{c.pca_dim}"
    else:
        a = "none"
    if c.layer_b == "none":
        b = "none"
        if c.output_side is not None and c.layer_c == "none":
            b = f"none:side={_format_side(c.output_side)}"
    elif c.layer_b == "cca_plus_rcca":
        b = (
            f"cca_plus_rcca:{c.fusion_dim}:cca={_format_side(c.cca_side)}"
            f":rcca={_format_side(c.rcca_side)}"
        )
    else:
        b = f"{c.layer_b}:{c.fusion_dim}:out={_format_side(c.output_side)}"
    if c.layer_c == "li":
        cc = f"li:{c.alpha!r}"
    else:
        cc = c.layer_c
    return sep.join(
        [f"layer_a={a}", f"layer_b={b}", f"layer_c={cc}", f"ridge={c.ridge!r}"]
    )


def _parse_side(token, what):
    if token not in _LETTER_SIDE:
        raise ValueError(f"bad {what} {token!r} (expected T, V or both)")
    return _LETTER_SIDE[token]


def _parse_kv(token, key, what):
    prefix = key + "="
    if not token.startswith(prefix):
        raise ValueError(f"expected {prefix}... in {what}, got {token!r}")
    return token[len(prefix):]


def parse_configuration(text):
    """Parse the flat ``key=value`` form (newline- or space-separated)."""
    fields = {}
    for token in text.split():
        if "=" not in token:
            raise ValueError(f"malformed configuration token {token!r}")
        key, value = token.split("=", 1)
        if key in fields:
            raise ValueError(f"duplicate configuration key {key!r}")
        fields[key] = value
    missing = {"layer_a", "layer_b", "layer_c"} - fields.keys()
    if missing:
        raise ValueError(f"missing configuration keys: {sorted(missing)}")
    kw = {}
    a = fields["layer_a"].split(":")
    if a[0] == "pca":
        if len(a) != 2:
            raise ValueError(f"bad layer_a {fields['layer_a']!r}")
        kw["layer_a"] = "pca"
        kw["pca_dim"] = int(a[1])
    elif a != ["none"]:
        raise ValueError(f"bad layer_a {fields['layer_a']!r}")
    b = fields["layer_b"].split(":")
    if b[0] == "none":
        if len(b) == 2:
            kw["output_side"] = _parse_side(_parse_kv(b[1], "side", "layer_b"), "side")
        elif len(b) != 1:
            raise ValueError(f"bad layer_b {fields['layer_b']!r}")
    elif b[0] in ("cca", "rcca"):
        if len(b) != 3:
            raise ValueError(f"bad layer_b {fields['layer_b']!r}")
        kw["layer_b"] = b[0]
        kw["fusion_dim"] = int(b[1])
        kw["output_side"] = _parse_side(_parse_kv(b[2], "out", "layer_b"), "out")
    elif b[0] == "cca_plus_rcca":
        if len(b) != 4:
            raise ValueError(f"bad layer_b {fields['layer_b']!r}")
        kw["layer_b"] = b[0]
        kw["fusion_dim"] = int(b[1])
        kw["cca_side"] = _parse_side(_parse_kv(b[2], "cca", "layer_b"), "cca side")
        kw["rcca_side"] = _parse_side(_parse_kv(b[3], "rcca", "layer_b"), "rcca side")
    else:
        raise ValueError(f"bad layer_b {fields['layer_b']!r}")
    cc = fields["layer_c"].split(":")
    if cc[0] == "li":
        if len(cc) != 2:
            raise ValueError(f"bad layer_c {fields['layer_c']!r}")
        kw["layer_c"] = "li"
        kw["alpha"] = float(cc[1])
    elif cc == ["concat"]:
        kw["layer_c"] = "concat"
    elif cc != ["none"]:
        raise ValueError(f"bad layer_c {fields['layer_c']!r}")
    if "ridge" in fields:
        kw["ridge"] = float(fields["ridge"])
    return Configuration(**kw)


def load_configuration(path):
    """Read a configuration file (one ``key=value`` per line)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(path, 0, str(exc)) from exc
    try:
        return parse_configuration(text)
    except ValueError as exc:
        raise ParseError(path, 0, str(exc)) from None


def describe_configuration(config):
    """Compact human-readable form used in report tables."""
    c = config
    parts = []
    if c.layer_a == "pca":
        parts.append(f"PCA({c.pca_dim})")
    if c.layer_b == "cca":
        parts.append(f"CCA({_format_side(c.output_side)},{c.fusion_dim})")
    elif c.layer_b == "rcca":
        parts.append(f"R-CCA({_format_side(c.output_side)},{c.fusion_dim})")
    elif c.layer_b == "cca_plus_rcca":
        parts.append(
            f"CCA({_format_side(c.cca_side)},{c.fusion_dim})"
            f"+R-CCA({_format_side(c.rcca_side)},{c.fusion_dim})"
        )
    elif c.layer_c == "none":
        parts.append(f"RAW({_format_side(c.output_side)})")
    if c.layer_c == "concat":
        parts.append("CONCAT")
    elif c.layer_c == "li":
        parts.append(f"LI({c.alpha:g})")
    return " / ".join(parts)
