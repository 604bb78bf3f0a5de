"""Tabular dataset loading, validation, partitioning, and label masking.

CSV files are comma-delimited UTF-8 with a header row.  Column roles
(label, protected attribute, ignored columns) come from a ColumnSchema.
Non-numeric feature columns are one-hot encoded with lexicographically
sorted category order; missing numeric cells are imputed with the column
median.  Loaded datasets are immutable and safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetTooSmallError, DataError, StratificationError


def round_half_up(x: float) -> int:
    """Round to the nearest integer with halves rounding up."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ColumnSchema:
    """Column roles for load_csv.

    Cells of the label column must equal positive_value or
    negative_value; when negative_value is omitted it is inferred as the
    single remaining distinct value.  Cells of the protected column equal
    to privileged_value map to group 1, everything else to group 0.
    """

    label_column: str | None = None
    positive_value: str | None = None
    negative_value: str | None = None
    protected_column: str | None = None
    privileged_value: str | None = None
    ignore_columns: tuple[str, ...] = ()


@dataclass(frozen=True)
class Dataset:
    """Immutable numeric feature matrix with optional labels and groups."""

    features: np.ndarray
    feature_names: tuple[str, ...]
    labels: np.ndarray | None = None
    protected: np.ndarray | None = None
    positive_label_name: str = ""
    privileged_value_name: str = ""

    def __post_init__(self) -> None:
        n, f = self.features.shape
        if n < 2 or f < 1:
            raise DataError(
                f"dataset needs at least 2 rows and 1 feature, got {n}x{f}"
            )
        if len(self.feature_names) != f:
            raise DataError("feature_names length does not match column count")
        if not np.all(np.isfinite(self.features)):
            raise DataError("feature matrix contains non-finite values")
        for name, vec in (("labels", self.labels), ("protected", self.protected)):
            if vec is not None and len(vec) != n:
                raise DataError(f"{name} length {len(vec)} != row count {n}")
        self.features.setflags(write=False)
        if self.labels is not None:
            self.labels.setflags(write=False)
        if self.protected is not None:
            self.protected.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class PartitionPlan:
    """Five-ish disjoint test bins plus stratified train resamples.

    test_bins[b] holds the row indices of test bin b.  train_samples[b][s]
    is a stratified shuffle of the rows outside bin b, and
    validation_indices[b][s] is its labeled slice (a stratified subset of
    the train sample).
    """

    test_bins: tuple[np.ndarray, ...]
    train_samples: tuple[tuple[np.ndarray, ...], ...]
    validation_indices: tuple[tuple[np.ndarray, ...], ...]
    seed: int


@dataclass(frozen=True)
class LabelBudget:
    """The indices whose true labels a learner may read."""

    fraction: float
    labeled_indices: np.ndarray
    seed: int


def _parse_rows(path: str) -> tuple[list[str], list[list[str]]]:
    import csv

    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open dataset file {path!r}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"dataset file {path!r} is empty") from None
        rows = [row for row in reader if row]
    if not rows:
        raise DataError(f"dataset file {path!r} has a header but no data rows")
    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"row {i + 2} of {path!r} has {len(row)} cells, expected {width}"
            )
    return header, rows


def _map_binary_column(
    cells: list[str], one_value: str, other_value: str | None, what: str
) -> np.ndarray:
    values = np.zeros(len(cells), dtype=np.int8)
    observed_others: set[str] = set()
    for i, cell in enumerate(cells):
        if cell == one_value:
            values[i] = 1
        else:
            observed_others.add(cell)
            values[i] = 0
    if other_value is not None:
        bad = observed_others - {other_value}
        if bad:
            raise DataError(
                f"{what} cells {sorted(bad)!r} match neither "
                f"{one_value!r} nor {other_value!r}"
            )
    elif len(observed_others) > 1:
        raise DataError(
            f"{what} column has more than two distinct values: "
            f"{one_value!r} plus {sorted(observed_others)!r}"
        )
    return values


def _numeric_or_none(cells: list[str]) -> np.ndarray | None:
    """Parse a column as floats; None when any non-blank cell fails."""
    out = np.full(len(cells), np.nan)
    for i, cell in enumerate(cells):
        text = cell.strip()
        if text == "":
            continue
        try:
            out[i] = float(text)
        except ValueError:
            return None
    return out


def load_csv(path: str, schema: ColumnSchema | None = None) -> Dataset:
    """Load a CSV file into an immutable Dataset.

    Numeric columns have blank cells imputed with the column median;
    other columns are one-hot encoded with categories in sorted order
    (blank cells encode as all zeros).  Row order is preserved.
    """
    schema = schema or ColumnSchema()
    header, rows = _parse_rows(path)

    def column_index(name: str, role: str) -> int:
        try:
            return header.index(name)
        except ValueError:
            raise DataError(
                f"declared {role} column {name!r} not in header {header!r}"
            ) from None

    role_indices: set[int] = set()
    labels = None
    if schema.label_column is not None:
        li = column_index(schema.label_column, "label")
        role_indices.add(li)
        if schema.positive_value is None:
            raise DataError("schema declares a label column but no positive value")
        labels = _map_binary_column(
            [row[li] for row in rows],
            schema.positive_value,
            schema.negative_value,
            "label",
        )
    protected = None
    if schema.protected_column is not None:
        pi = column_index(schema.protected_column, "protected")
        role_indices.add(pi)
        if schema.privileged_value is None:
            raise DataError(
                "schema declares a protected column but no privileged value"
            )
        cells = [row[pi] for row in rows]
        if any(cell.strip() == "" for cell in cells):
            raise DataError("protected column contains blank cells")
        protected = np.array(
            [1 if cell == schema.privileged_value else 0 for cell in cells],
            dtype=np.int8,
        )
    for name in schema.ignore_columns:
        role_indices.add(column_index(name, "ignored"))

    columns: list[np.ndarray] = []
    names: list[str] = []
    for j, name in enumerate(header):
        if j in role_indices:
            continue
        cells = [row[j] for row in rows]
        numeric = _numeric_or_none(cells)
        if numeric is not None:
            observed = numeric[~np.isnan(numeric)]
            if observed.size == 0:
                raise DataError(f"feature column {name!r} has no observed values")
            numeric = np.where(np.isnan(numeric), np.median(observed), numeric)
            columns.append(numeric)
            names.append(name)
        else:
            categories = sorted({c.strip() for c in cells if c.strip() != ""})
            for cat in categories:
                columns.append(
                    np.array([1.0 if c.strip() == cat else 0.0 for c in cells])
                )
                names.append(f"{name}={cat}")
    if not columns:
        raise DataError(f"no feature columns remain in {path!r}")

    return Dataset(
        features=np.column_stack(columns),
        feature_names=tuple(names),
        labels=labels,
        protected=protected,
        positive_label_name=schema.positive_value or "",
        privileged_value_name=schema.privileged_value or "",
    )


def _allocate_per_class(total: int, class_sizes: list[int]) -> list[int]:
    """Largest-remainder allocation of `total` slots across classes.

    Every non-empty class receives at least one slot when total allows.
    """
    n = sum(class_sizes)
    raw = [total * s / n for s in class_sizes]
    alloc = [int(math.floor(r)) for r in raw]
    remainders = [r - a for r, a in zip(raw, alloc)]
    short = total - sum(alloc)
    for k in sorted(range(len(alloc)), key=lambda k: (-remainders[k], k))[:short]:
        alloc[k] += 1
    nonempty = [k for k, s in enumerate(class_sizes) if s > 0]
    if total >= len(nonempty):
        for k in nonempty:
            if alloc[k] == 0:
                donor = max(
                    (d for d in nonempty if alloc[d] > 1),
                    key=lambda d: alloc[d],
                    default=None,
                )
                if donor is not None:
                    alloc[donor] -= 1
                    alloc[k] += 1
    for k, s in enumerate(class_sizes):
        if alloc[k] > s:
            spill = alloc[k] - s
            alloc[k] = s
            for d in nonempty:
                room = class_sizes[d] - alloc[d]
                take = min(room, spill)
                alloc[d] += take
                spill -= take
                if spill == 0:
                    break
    return alloc


def stratified_folds(
    d: Dataset,
    bins: int = 5,
    resamples: int = 5,
    validation_fraction: float = 0.025,
    seed: int = 0,
) -> PartitionPlan:
    """Build disjoint stratified test bins and per-bin train resamples.

    Each test bin holds n/bins rows within one; class proportions in every
    bin match the whole dataset within one instance per class.  Each train
    sample is a stratified shuffle of the complementary rows with a
    stratified labeled slice of round(validation_fraction * len) rows
    (minimum 2).  Deterministic for a fixed seed.
    """
    if d.labels is None:
        raise DataError("stratified_folds requires labels")
    if bins < 2:
        raise StratificationError(f"need at least 2 bins, got {bins}")
    labels = d.labels
    n = d.n_rows
    class_indices = [np.flatnonzero(labels == c) for c in (0, 1)]
    for c, idx in enumerate(class_indices):
        if 0 < len(idx) < bins:
            raise StratificationError(
                f"class {c} has {len(idx)} members, fewer than {bins} bins"
            )
    rng = np.random.default_rng(seed)

    # Deal each class into bins, steering remainder rows toward the
    # currently smallest bins so total bin sizes stay within one row.
    bin_members: list[list[np.ndarray]] = [[] for _ in range(bins)]
    bin_totals = [0] * bins
    for idx in class_indices:
        if len(idx) == 0:
            continue
        shuffled = rng.permutation(idx)
        base, rem = divmod(len(shuffled), bins)
        order = sorted(range(bins), key=lambda b: (bin_totals[b], b))
        sizes = [base] * bins
        for b in order[:rem]:
            sizes[b] += 1
        start = 0
        for b in range(bins):
            bin_members[b].append(shuffled[start : start + sizes[b]])
            bin_totals[b] += sizes[b]
            start += sizes[b]
    test_bins = tuple(
        np.sort(np.concatenate(parts)) for parts in bin_members
    )

    all_rows = np.arange(n)
    train_samples: list[tuple[np.ndarray, ...]] = []
    validation: list[tuple[np.ndarray, ...]] = []
    for b in range(bins):
        in_bin = np.zeros(n, dtype=bool)
        in_bin[test_bins[b]] = True
        pool = all_rows[~in_bin]
        samples = []
        vals = []
        for _ in range(resamples):
            sample = rng.permutation(pool)
            vals.append(_validation_slice(sample, labels, validation_fraction))
            samples.append(sample)
        train_samples.append(tuple(samples))
        validation.append(tuple(vals))
    return PartitionPlan(
        test_bins=test_bins,
        train_samples=tuple(train_samples),
        validation_indices=tuple(validation),
        seed=seed,
    )


def _validation_slice(
    sample: np.ndarray, labels: np.ndarray, fraction: float
) -> np.ndarray:
    """Stratified labeled slice of a shuffled train sample, minimum 2 rows."""
    v = max(2, round_half_up(fraction * len(sample)))
    v = min(v, len(sample))
    sizes = [int(np.sum(labels[sample] == c)) for c in (0, 1)]
    alloc = _allocate_per_class(v, sizes)
    picked = []
    for c in (0, 1):
        of_class = sample[labels[sample] == c]
        picked.append(of_class[: alloc[c]])
    return np.sort(np.concatenate(picked))


def sample_labels(d: Dataset, fraction: float, seed: int = 0) -> LabelBudget:
    """Draw a stratified uniform label budget of round(fraction * n) rows."""
    if d.labels is None:
        raise DataError("sample_labels requires labels")
    if not 0 < fraction <= 1:
        raise DataError(f"label fraction must be in (0, 1], got {fraction}")
    n = d.n_rows
    k = round_half_up(fraction * n)
    if k == 0:
        raise BudgetTooSmallError(
            f"budget {fraction} of {n} rows rounds to zero labels"
        )
    rng = np.random.default_rng(seed)
    labels = d.labels
    class_indices = [np.flatnonzero(labels == c) for c in (0, 1)]
    sizes = [len(idx) for idx in class_indices]
    if k >= 2 and all(s > 0 for s in sizes):
        alloc = _allocate_per_class(k, sizes)
        parts = [
            rng.choice(idx, size=a, replace=False)
            for idx, a in zip(class_indices, alloc)
        ]
        chosen = np.concatenate(parts)
    else:
        chosen = rng.choice(n, size=k, replace=False)
    return LabelBudget(
        fraction=fraction, labeled_indices=np.sort(chosen), seed=seed
    )
