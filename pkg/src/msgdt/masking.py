"""Missing-data models, binary masks, and the matching correction tensors.

Three models for how entries of the data tensor A go missing, each with
observation probability p:

* uniform       - every entry kept independently,
* column block  - per row slice, blocks of b consecutive column slices are
                  kept or dropped together (b must divide l),
* frontal slice - per row slice, each frontal slice is kept or dropped whole.

A mask D is a 0/1 tensor; the observed data is Atilde = D o A.  Each model
has a Hermitian 0/1 correction tensor C marking the entries of
Atilde* * Atilde whose expectation carries a factor p instead of p^2:

    E_D[Atilde* * Atilde] = p^2 (A* * A) + (p - p^2) C o (A* * A).

Masks are drawn from a seeded NumPy PCG64 generator; with a fixed seed the
draw is bit-reproducible.  Per-row draws consume generator state in
row-major order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .tensor import Tensor3

__all__ = [
    "UniformMissing",
    "ColumnBlockMissing",
    "FrontalSliceMissing",
    "MissingModel",
    "parse_model",
    "format_model",
    "draw_mask",
    "correction_tensor",
    "enumerate_row_masks",
    "ExpectationReport",
    "verify_expectation_identity",
]


def _check_p(p: float) -> None:
    if not 0.0 < p <= 1.0:
        raise ValueError(f"observation probability must be in (0, 1], got {p}")


@dataclass(frozen=True)
class UniformMissing:
    """Every entry observed independently with probability p."""

    p: float

    def __post_init__(self):
        _check_p(self.p)


@dataclass(frozen=True)
class ColumnBlockMissing:
    """Per row slice, column blocks of size b observed together with probability p."""

    p: float
    b: int

    def __post_init__(self):
        _check_p(self.p)
        if self.b < 1:
            raise ValueError(f"block size must be positive, got {self.b}")


@dataclass(frozen=True)
class FrontalSliceMissing:
    """Per row slice, each frontal slice observed whole with probability p."""

    p: float

    def __post_init__(self):
        _check_p(self.p)


MissingModel = Union[UniformMissing, ColumnBlockMissing, FrontalSliceMissing]


def parse_model(line: str) -> MissingModel:
    """Parse the one-line text form, e.g. ``uniform p=0.5`` or ``colblock p=0.5 b=4``."""
    parts = line.split()
    if not parts:
        raise ValueError("empty missing-model spec")
    try:
        kind, kv = parts[0], dict(tok.split("=", 1) for tok in parts[1:])
        if kind == "uniform":
            return UniformMissing(p=float(kv["p"]))
        if kind == "colblock":
            return ColumnBlockMissing(p=float(kv["p"]), b=int(kv["b"]))
        if kind == "frontal":
            return FrontalSliceMissing(p=float(kv["p"]))
    except (KeyError, IndexError) as exc:
        raise ValueError(f"malformed missing-model spec {line!r}: missing {exc}") from None
    raise ValueError(f"unknown missing-model kind {kind!r}")


def format_model(model: MissingModel) -> str:
    if isinstance(model, UniformMissing):
        return f"uniform p={model.p:g}"
    if isinstance(model, ColumnBlockMissing):
        return f"colblock p={model.p:g} b={model.b}"
    if isinstance(model, FrontalSliceMissing):
        return f"frontal p={model.p:g}"
    raise TypeError(f"not a missing model: {model!r}")


def _check_block(model: MissingModel, l: int) -> None:
    if isinstance(model, ColumnBlockMissing) and l % model.b != 0:
        raise ValueError(f"block size {model.b} does not divide column count {l}")


def row_mask_batch(model: MissingModel, l: int, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent row-slice masks, stacked as a (count, n, l) 0/1 array."""
    _check_block(model, l)
    if isinstance(model, UniformMissing):
        # one uniform per entry, consumed in (row, column, slice) order
        keep = rng.random((count, l, n)) < model.p
        return keep.transpose(0, 2, 1).astype(np.float64)
    if isinstance(model, ColumnBlockMissing):
        keep = rng.random((count, l // model.b)) < model.p
        cols = np.repeat(keep, model.b, axis=1)  # (count, l)
        return np.broadcast_to(cols[:, None, :], (count, n, l)).astype(np.float64)
    keep = rng.random((count, n)) < model.p
    return np.broadcast_to(keep[:, :, None], (count, n, l)).astype(np.float64)


def draw_mask(model: MissingModel, m: int, l: int, n: int, rng: np.random.Generator) -> Tensor3:
    """Binary mask D of dims m x l x n drawn from the model."""
    rows = row_mask_batch(model, l, n, m, rng)  # (m, n, l)
    return Tensor3(np.ascontiguousarray(rows.transpose(1, 0, 2)))


def correction_tensor(model: MissingModel, l: int, n: int) -> Tensor3:
    """The model's l x l x n correction tensor C (Hermitian, entries 0/1).

    uniform: ones on the diagonal of frontal slice 0.
    column block: every frontal slice block-diagonal with b x b all-ones blocks.
    frontal slice: frontal slice 0 all ones, other slices zero.
    """
    _check_block(model, l)
    data = np.zeros((n, l, l))
    if isinstance(model, UniformMissing):
        data[0] = np.eye(l)
    elif isinstance(model, ColumnBlockMissing):
        block = np.ones((model.b, model.b))
        slice0 = np.kron(np.eye(l // model.b), block)
        data[:] = slice0
    else:
        data[0] = np.ones((l, l))
    return Tensor3(data)


def enumerate_row_masks(model: MissingModel, l: int, n: int) -> Iterator[tuple[np.ndarray, float]]:
    """All possible masks of a single row slice with their probabilities.

    Yields (mask, prob) with mask of shape (n, l).  The number of
    configurations is 2^(l*n) for the uniform model, 2^(l/b) for column
    blocks, and 2^n for frontal slices, so keep the dims tiny.
    """
    _check_block(model, l)
    p = model.p
    if isinstance(model, UniformMissing):
        units = l * n

        def build(bits):
            return np.array(bits, dtype=np.float64).reshape(l, n).T.copy()

    elif isinstance(model, ColumnBlockMissing):
        units = l // model.b

        def build(bits):
            cols = np.repeat(np.array(bits, dtype=np.float64), model.b)
            return np.tile(cols, (n, 1))

    else:
        units = n

        def build(bits):
            return np.tile(np.array(bits, dtype=np.float64)[:, None], (1, l))

    for config in range(2**units):
        bits = [(config >> u) & 1 for u in range(units)]
        ones = sum(bits)
        prob = p**ones * (1.0 - p) ** (units - ones)
        if prob == 0.0:
            continue
        yield build(bits), prob


def _gram_slices(rows: np.ndarray) -> np.ndarray:
    """Atilde* * Atilde for a batch of row slices, shapes (t, n, l) -> (t, n, l, l).

    Slice k of the product is sum_j outer(a_{(j-k) mod n}, a_j).
    """
    t, n, l = rows.shape
    out = np.empty((t, n, l, l))
    for k in range(n):
        shifted = np.roll(rows, k, axis=1)  # shifted[:, j] = rows[:, (j - k) mod n]
        out[:, k] = np.einsum("tjx,tjy->txy", shifted, rows)
    return out


def exact_row_gram_expectation(a_row: Tensor3, model: MissingModel) -> Tensor3:
    """E_D[Atilde* * Atilde] for one 1 x l x n row slice, by exhaustive enumeration."""
    if a_row.m != 1:
        raise ValueError(f"expected a 1 x l x n row slice, got dims {a_row.dims}")
    row = a_row.data[:, 0, :]  # (n, l)
    acc = np.zeros((a_row.n, a_row.l, a_row.l))
    for mask, prob in enumerate_row_masks(model, a_row.l, a_row.n):
        masked = (mask * row)[None]
        acc += prob * _gram_slices(masked)[0]
    return Tensor3(acc)


@dataclass(frozen=True)
class ExpectationReport:
    """Max relative deviations of the two correction identities, Monte Carlo."""

    max_rel_err_c1: float
    max_rel_err_c2: float
    trials: int


def verify_expectation_identity(
    a_row: Tensor3, model: MissingModel, trials: int, rng: np.random.Generator
) -> ExpectationReport:
    """Monte Carlo check of the two defining identities of C.

    Estimates E_D[Atilde* * Atilde] over ``trials`` fresh masks of the given
    row slice and reports the max entrywise deviation of

        C o estimate        from  p   * C o (A* * A)   (c1), and
        (1 - C) o estimate  from  p^2 * (1 - C) o (A* * A)   (c2),

    relative to the largest entry magnitude of A* * A.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if a_row.m != 1:
        raise ValueError(f"expected a 1 x l x n row slice, got dims {a_row.dims}")
    l, n, p = a_row.l, a_row.n, model.p
    row = a_row.data[:, 0, :]  # (n, l)

    estimate = np.zeros((n, l, l))
    remaining = trials
    chunk = max(1, min(trials, 8192))
    while remaining:
        take = min(chunk, remaining)
        masks = row_mask_batch(model, l, n, take, rng)
        estimate += _gram_slices(masks * row[None]).sum(axis=0)
        remaining -= take
    estimate /= trials

    exact = _gram_slices(row[None])[0]
    c = correction_tensor(model, l, n).data
    scale = float(np.max(np.abs(exact)))
    if scale == 0.0:
        dev1 = float(np.max(np.abs(c * estimate)))
        dev2 = float(np.max(np.abs((1.0 - c) * estimate)))
        return ExpectationReport(dev1, dev2, trials)
    err1 = np.max(np.abs(c * estimate - p * c * exact)) / scale
    err2 = np.max(np.abs((1.0 - c) * estimate - p * p * (1.0 - c) * exact)) / scale
    return ExpectationReport(float(err1), float(err2), trials)
