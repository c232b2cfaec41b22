"""Sparse labeled datasets: LIBSVM/IDX ingestion, seeded shuffling and
nested prefix views.

Subsets used by the adaptive solver are always prefixes of a dataset that
was shuffled once, so a view of size m is contained in every view of size
n >= m.
"""
import hashlib
import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ParseError",
    "SparseDataset",
    "SampleView",
    "parse_libsvm",
    "load_libsvm",
    "dump_libsvm",
    "convert_mnist_idx",
    "shuffle",
    "make_synthetic",
]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class ParseError(ValueError):
    """Raised on malformed input files. ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"{message} at line {lineno}"
        super().__init__(message)
        self.lineno = lineno


def _freeze(a):
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SparseDataset:
    """Immutable binary-labeled sparse design matrix.

    Parameters
    ----------
    X : scipy.sparse.csr_matrix, shape (n_samples, n_features)
        Rows with strictly increasing column indices.
    y : ndarray of shape (n_samples,)
        Labels, each exactly -1.0 or +1.0.
    """

    X: sp.csr_matrix
    y: np.ndarray

    def __post_init__(self):
        X = self.X
        if not sp.issparse(X) or X.format != "csr":
            X = sp.csr_matrix(X)
        X = X.astype(np.float64, copy=False)
        if not X.has_canonical_format:
            raise ValueError("row indices must be strictly increasing")
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if y.shape[0] != X.shape[0]:
            raise ValueError(
                f"labels length {y.shape[0]} != number of rows {X.shape[0]}")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise ValueError("labels must be -1.0 or +1.0")
        for arr in (X.data, X.indices, X.indptr, y):
            _freeze(arr)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def size(self):
        return self.n_samples

    def row(self, i):
        """Stored ``(feature_index, value)`` pairs of row ``i``."""
        lo, hi = self.X.indptr[i], self.X.indptr[i + 1]
        return list(zip(self.X.indices[lo:hi].tolist(),
                        self.X.data[lo:hi].tolist()))

    def view(self, size):
        return SampleView(self, size)

    def row_fingerprints(self):
        """SHA-256 digest of each (label, indices, values) row, in row order."""
        X = self.X
        out = []
        for i in range(self.n_samples):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            h = hashlib.sha256(self.y[i:i + 1].tobytes())
            h.update(X.indices[lo:hi].astype(np.int64).tobytes())
            h.update(X.data[lo:hi].tobytes())
            out.append(h.digest())
        return out

    def fingerprint(self):
        """Order-independent digest: equal for any row permutation."""
        h = hashlib.sha256(np.asarray(self.X.shape, dtype=np.int64).tobytes())
        for digest in sorted(self.row_fingerprints()):
            h.update(digest)
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, SparseDataset):
            return NotImplemented
        return (self.X.shape == other.X.shape
                and np.array_equal(self.X.indptr, other.X.indptr)
                and np.array_equal(self.X.indices, other.X.indices)
                and np.array_equal(self.X.data, other.X.data)
                and np.array_equal(self.y, other.y))

    __hash__ = None

    def __repr__(self):
        return (f"SparseDataset(n_samples={self.n_samples}, "
                f"n_features={self.n_features}, nnz={self.X.nnz})")


@dataclass(frozen=True)
class SampleView:
    """The first ``size`` rows of ``dataset``."""

    dataset: SparseDataset
    size: int

    def __post_init__(self):
        if not 1 <= self.size <= self.dataset.n_samples:
            raise ValueError(
                f"view size must be in [1, {self.dataset.n_samples}], "
                f"got {self.size}")

    @cached_property
    def X(self):
        if self.size == self.dataset.n_samples:
            return self.dataset.X
        return self.dataset.X[:self.size]

    @cached_property
    def y(self):
        return self.dataset.y[:self.size]

    @property
    def n_features(self):
        return self.dataset.n_features


def _label_to_sign(value):
    return 1.0 if value > 0 else -1.0


def parse_libsvm(stream, n_features=None):
    """Parse LIBSVM text (``<label> <idx>:<val> ...``, 1-based indices).

    Labels are mapped by sign (``> 0`` to +1, otherwise -1). Blank lines and
    ``#`` comments are skipped. ``n_features`` overrides the inferred width
    ``1 + max index``.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels, indices, values, indptr = [], [], [], [0]
    max_index = -1
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode("ascii")
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", lineno) from None
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            try:
                if not sep:
                    raise ValueError
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"malformed pair {tok!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"index {idx} is not 1-based", lineno)
            if idx <= prev:
                raise ParseError("non-ascending index", lineno)
            prev = idx
            indices.append(idx - 1)
            values.append(val)
        labels.append(_label_to_sign(label))
        indptr.append(len(indices))
        if prev:
            max_index = max(max_index, prev - 1)
    if not labels:
        raise ParseError("empty file")
    width = max_index + 1
    if n_features is not None:
        if n_features < width:
            raise ParseError(
                f"feature index {max_index + 1} exceeds n_features={n_features}")
        width = n_features
    X = sp.csr_matrix(
        (np.asarray(values, dtype=np.float64),
         np.asarray(indices, dtype=np.int32),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(labels), width))
    return SparseDataset(X, np.asarray(labels))


def load_libsvm(path, n_features=None):
    with open(path) as f:
        return parse_libsvm(f, n_features=n_features)


def dump_libsvm(dataset, stream):
    """Write ``dataset`` as LIBSVM text; values round-trip bit-exactly."""
    X = dataset.X
    for i in range(dataset.n_samples):
        lo, hi = X.indptr[i], X.indptr[i + 1]
        parts = ["+1" if dataset.y[i] > 0 else "-1"]
        parts.extend(f"{j + 1}:{v!r}"
                     for j, v in zip(X.indices[lo:hi].tolist(),
                                     X.data[lo:hi].tolist()))
        stream.write(" ".join(parts) + "\n")


def _read_idx(stream, magic, what):
    header = stream.read(4)
    if len(header) < 4:
        raise ParseError(f"truncated {what} header")
    got = int.from_bytes(header, "big")
    if got != magic:
        raise ParseError(f"bad magic number 0x{got:08x} in {what} "
                         f"(expected 0x{magic:08x})")
    ndim = magic & 0xFF
    dims = np.frombuffer(stream.read(4 * ndim), dtype=">u4").astype(np.int64)
    if dims.size != ndim:
        raise ParseError(f"truncated {what} header")
    count = int(np.prod(dims))
    payload = np.frombuffer(stream.read(count), dtype=np.uint8)
    if payload.size != count:
        raise ParseError(f"{what} payload shorter than header declares")
    return payload.reshape(tuple(dims))


def convert_mnist_idx(images_stream, labels_stream, digit_pos=0, digit_neg=8):
    """Build a binary task from MNIST IDX streams.

    Keeps samples labelled ``digit_pos`` (as +1) or ``digit_neg`` (as -1),
    scales pixels to [0, 1] and drops zero pixels.
    """
    images = _read_idx(images_stream, IDX_IMAGES_MAGIC, "images")
    labels = _read_idx(labels_stream, IDX_LABELS_MAGIC, "labels")
    if images.shape[0] != labels.shape[0]:
        raise ParseError(f"{images.shape[0]} images but "
                         f"{labels.shape[0]} labels")
    keep = (labels == digit_pos) | (labels == digit_neg)
    pixels = images[keep].reshape(int(keep.sum()), -1).astype(np.float64)
    X = sp.csr_matrix(pixels / 255.0)
    X.eliminate_zeros()
    y = np.where(labels[keep] == digit_pos, 1.0, -1.0)
    return SparseDataset(X, y)


def shuffle(dataset, seed):
    """Seeded row permutation; the same seed gives a bit-identical result."""
    perm = np.random.default_rng(seed).permutation(dataset.n_samples)
    return SparseDataset(dataset.X[perm], dataset.y[perm])


def make_synthetic(n_samples, n_features, seed, noise=1.0, weight_seed=None):
    """Gaussian features with labels ``sign(<x, w_true> + noise * eps)``.

    ``w_true`` has norm 2. It is drawn from ``weight_seed`` when given, so
    several datasets can share one ground truth; otherwise from ``seed``.
    """
    rng = np.random.default_rng(seed)
    wrng = rng if weight_seed is None else np.random.default_rng(weight_seed)
    w_true = wrng.standard_normal(n_features)
    w_true *= 2.0 / np.linalg.norm(w_true)
    X = rng.standard_normal((n_samples, n_features))
    score = X @ w_true + noise * rng.standard_normal(n_samples)
    y = np.where(score >= 0, 1.0, -1.0)
    return SparseDataset(sp.csr_matrix(X), y)
