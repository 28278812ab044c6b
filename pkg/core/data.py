"""
Datasets: LIBSVM ingestion, sharding across agents, synthetic binary data
"""

from dataclasses import dataclass
from pathlib import Path
from typing import IO, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from loguru import logger

from utils.rng import RUN_SCOPE, Purpose, stream
from .exceptions import DataFormatError, ValidationError
from .models import ShardMode

Source = Union[str, Path, bytes, IO]


@dataclass(frozen=True)
class Dataset:
    """Dense features with labels in {-1, +1}"""
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise DataFormatError(
                "features and labels disagree",
                details={'features': self.features.shape, 'labels': self.labels.shape},
            )
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise DataFormatError("labels must be -1 or +1")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.features[idx], self.labels[idx])

    def positive_rate(self) -> float:
        return float(np.mean(self.labels > 0))


@dataclass(frozen=True)
class Sharding:
    """Assignment of every sample to exactly one agent"""
    assignment: np.ndarray
    m: int
    mode: ShardMode

    def indices(self, agent: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == agent)

    def sizes(self) -> List[int]:
        return np.bincount(self.assignment, minlength=self.m).tolist()


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode('utf-8')
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise DataFormatError(f"dataset file not found: {path}")
        return path.read_text(encoding='utf-8')
    content = source.read()
    return content.decode('utf-8') if isinstance(content, bytes) else content


def _parse_label(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DataFormatError(f"bad label {token!r}", line_number=lineno)
    if value == 0.0:
        return -1.0
    if value in (-1.0, 1.0):
        return value
    raise DataFormatError(
        f"label {token!r} is not binary",
        line_number=lineno,
        suggestion="Only -1, 0 and +1 labels are accepted",
    )


def parse_libsvm(
    source: Source,
    n_features: Optional[int] = None,
    expect_n: Optional[int] = None,
) -> Dataset:
    """
    Parse "<label> <idx>:<val> ..." lines with 1-based indices

    Args:
        source: File path, raw bytes or an open text/binary stream
        n_features: Feature dimension override (default: max index)
        expect_n: Known sample count of the source (a8a: 22696); checked when given

    Returns:
        Dense Dataset
    """
    labels: List[float] = []
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []

    for lineno, raw in enumerate(_read_text(source).splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        tokens = line.split()
        labels.append(_parse_label(tokens[0], lineno))
        row = len(labels) - 1
        for token in tokens[1:]:
            idx, sep, val = token.partition(':')
            try:
                col = int(idx)
                value = float(val)
            except ValueError:
                raise DataFormatError(f"malformed feature {token!r}", line_number=lineno)
            if not sep or col < 1:
                raise DataFormatError(f"malformed feature {token!r}", line_number=lineno)
            rows.append(row)
            cols.append(col - 1)
            vals.append(value)

    if not labels:
        raise DataFormatError("no samples found")
    if expect_n is not None and len(labels) != expect_n:
        raise DataFormatError(
            f"expected {expect_n} samples, found {len(labels)}",
            details={'expected': expect_n, 'found': len(labels)},
            suggestion="The file may be truncated or a different LIBSVM split",
        )

    d = max(cols) + 1 if cols else 0
    if n_features is not None:
        if n_features < d:
            raise DataFormatError(
                "feature index exceeds n_features",
                details={'max_index': d, 'n_features': n_features},
            )
        d = n_features

    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(len(labels), d))
    dataset = Dataset(matrix.toarray(), np.asarray(labels))
    logger.debug(f"parsed LIBSVM data: n={dataset.n} d={dataset.d}")
    return dataset


def to_libsvm(ds: Dataset) -> str:
    """Serialize with 1-based indices, nonzeros only, repr floats"""
    lines = []
    for row, label in zip(ds.features, ds.labels):
        nz = np.flatnonzero(row)
        feats = " ".join(f"{j + 1}:{float(row[j])!r}" for j in nz)
        head = "+1" if label > 0 else "-1"
        lines.append(f"{head} {feats}".rstrip())
    return "\n".join(lines) + "\n"


def max_row_norm(ds: Dataset) -> float:
    return float(np.max(np.linalg.norm(ds.features, axis=1))) if ds.n else 0.0


def normalize_max_norm(ds: Dataset, scale: Optional[float] = None) -> Dataset:
    """Divide every row by `scale` (default: the largest row norm of ds)"""
    scale = max_row_norm(ds) if scale is None else scale
    if scale == 0.0:
        return ds
    return Dataset(ds.features / scale, ds.labels)


def shard(ds: Dataset, m: int, mode: ShardMode, seed: int) -> Sharding:
    """
    Partition samples into m nonempty contiguous blocks

    iid shuffles first; label-sorted shuffles and then stable-sorts by label so
    that agents see heterogeneous class mixes.
    """
    mode = ShardMode(mode)
    if m < 1:
        raise ValidationError("m must be at least 1", field="m", value=m)
    if m > ds.n:
        raise DataFormatError(
            "more agents than samples",
            details={'m': m, 'n': ds.n},
        )

    order = stream(seed, RUN_SCOPE, 0, Purpose.SHARD).permutation(ds.n)
    if mode is ShardMode.LABEL_SORTED:
        order = order[np.argsort(ds.labels[order], kind='stable')]

    assignment = np.empty(ds.n, dtype=int)
    for agent, block in enumerate(np.array_split(order, m)):
        assignment[block] = agent
    return Sharding(assignment=assignment, m=m, mode=mode)


def synth_binary(
    n: int,
    d: int,
    margin: float,
    seed: int,
    flip_rate: float = 0.05,
) -> Dataset:
    """
    Gaussian features labelled by a random unit separator

    Points are pushed away from the hyperplane by `margin`, then a fraction
    `flip_rate` of labels is flipped.
    """
    if n < 1 or d < 1:
        raise ValidationError("n and d must be at least 1")
    rng = stream(seed, RUN_SCOPE, 0, Purpose.DATA)

    w = rng.standard_normal(d)
    w /= np.linalg.norm(w)
    a = rng.standard_normal((n, d))
    labels = np.where(a @ w >= 0.0, 1.0, -1.0)
    a += margin * labels[:, None] * w

    flips = rng.random(n) < flip_rate
    labels[flips] *= -1.0
    return Dataset(a, labels)


def train_test_split(ds: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Deterministic shuffled split"""
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError("test_fraction must lie in (0, 1)", field="test_fraction")
    order = np.random.default_rng(seed).permutation(ds.n)
    n_test = max(1, int(round(ds.n * test_fraction)))
    if n_test >= ds.n:
        raise DataFormatError("dataset too small to split", details={'n': ds.n})
    return ds.subset(order[n_test:]), ds.subset(order[:n_test])
