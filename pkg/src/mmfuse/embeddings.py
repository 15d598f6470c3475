"""Word-embedding tables: text-format I/O and vocabulary alignment.

File format is word2vec-style text: an optional first header line
``"<n_words> <dim>"`` followed by one line per word, the word first and
then ``dim`` whitespace-separated decimal numbers. Encoding is UTF-8 and
numbers are written with 6 decimal digits. Words are compared byte-exact;
no case folding is applied anywhere.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    AlignmentError,
    DuplicateEntryError,
    EmptyInputError,
    ParseError,
    WriteError,
)

SAVE_DECIMALS = 6


@dataclass(frozen=True)
class EmbeddingTable:
    """Immutable vocabulary plus a row-per-word matrix of vectors."""

    vocab: tuple
    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        vocab = tuple(self.vocab)
        matrix = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2-dimensional")
        if matrix.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")
        if len(vocab) != matrix.shape[0]:
            raise ValueError(
                f"vocabulary size {len(vocab)} != matrix rows {matrix.shape[0]}"
            )
        if len(set(vocab)) != len(vocab):
            raise DuplicateEntryError(f"duplicate words in vocabulary of {self.name!r}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError(f"non-finite values in embedding matrix of {self.name!r}")
        matrix.flags.writeable = False
        object.__setattr__(self, "vocab", vocab)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self):
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.vocab)

    def __contains__(self, word):
        return word in self.index

    @cached_property
    def index(self):
        """word -> row number."""
        return {w: i for i, w in enumerate(self.vocab)}

    def row(self, word):
        try:
            return self.matrix[self.index[word]]
        except KeyError:
            raise KeyError(f"word {word!r} not in table {self.name!r}") from None


def load_embeddings(path, name=""):
    """Parse a text embedding file into a validated :class:`EmbeddingTable`.

    An optional ``"n dim"`` header is accepted and checked against the
    content. Malformed lines, duplicate words and empty files raise.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    words = []
    seen = set()
    vectors = []
    declared = None
    dim = None
    start_line = 1
    if lines:
        tokens = lines[0].split()
        if len(tokens) == 2:
            try:
                declared = (int(tokens[0]), int(tokens[1]))
                start_line = 2
            except ValueError:
                declared = None
    for line_no, line in enumerate(lines[start_line - 1:], start=start_line):
        tokens = line.split()
        if not tokens:
            raise ParseError(path, line_no, "blank line")
        word = tokens[0]
        if dim is None:
            dim = len(tokens) - 1
            if declared is not None and dim != declared[1]:
                raise ParseError(
                    path, line_no,
                    f"row has {dim} values but header declares dim {declared[1]}",
                )
            if dim < 1:
                raise ParseError(path, line_no, "row has a word but no values")
        if len(tokens) - 1 != dim:
            raise ParseError(
                path, line_no, f"expected {dim} values, found {len(tokens) - 1}"
            )
        try:
            vec = [float(t) for t in tokens[1:]]
        except ValueError as exc:
            raise ParseError(path, line_no, f"non-numeric value ({exc})") from None
        if not all(np.isfinite(vec)):
            raise ParseError(path, line_no, "non-finite value")
        if word in seen:
            raise DuplicateEntryError(f"{path}:{line_no}: duplicate word {word!r}")
        seen.add(word)
        words.append(word)
        vectors.append(vec)
    if not words:
        raise EmptyInputError(f"{path}: no embedding rows")
    if declared is not None and declared[0] != len(words):
        raise ParseError(
            path, len(lines),
            f"header declares {declared[0]} words, file has {len(words)}",
        )
    return EmbeddingTable(tuple(words), np.array(vectors, dtype=np.float64), name=name)


def save_embeddings(table, path):
    """Write ``table`` as header plus one row per word, 6 decimal digits."""
    fmt = f"%.{SAVE_DECIMALS}f"
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(table)} {table.dim}\n")
            for word, row in zip(table.vocab, table.matrix):
                fh.write(word + " " + " ".join(fmt % v for v in row) + "\n")
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc


def align_vocabularies(a, b):
    """Restrict both tables to their shared vocabulary, rows sorted by word.

    Vector values are never altered; rows are only selected and reordered,
    so alignment is idempotent.
    """
    common = sorted(set(a.vocab) & set(b.vocab))
    if not common:
        raise AlignmentError(
            f"no shared vocabulary between {a.name!r} and {b.name!r}"
        )
    idx_a = np.array([a.index[w] for w in common], dtype=np.intp)
    idx_b = np.array([b.index[w] for w in common], dtype=np.intp)
    vocab = tuple(common)
    return (
        EmbeddingTable(vocab, a.matrix[idx_a], name=a.name),
        EmbeddingTable(vocab, b.matrix[idx_b], name=b.name),
    )
