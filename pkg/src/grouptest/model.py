"""Group-testing instances: pooling designs, defective sets, outcomes, per-item counts.

A design is a binary T x N incidence structure stored column-wise: for each
item, the sorted set of tests that contain it. Three random constructions are
provided:

* ``bernoulli``       -- every (test, item) cell is included independently
                         with probability p.
* ``near_constant``   -- per item, L tests drawn uniformly *with* replacement;
                         duplicate draws collapse, so column weights may fall
                         slightly below L.
* ``exact_constant``  -- per item, a uniform L-subset of tests (without
                         replacement), so every column weighs exactly L.

All randomness is counter-based (see :mod:`grouptest.rng`): column i of a
design depends only on (seed, kind, i), so columns can be generated in any
order or concurrently with identical results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import rng

KIND_BERNOULLI = "bernoulli"
KIND_NEAR_CONSTANT = "near_constant"
KIND_EXACT_CONSTANT = "exact_constant"
DESIGN_KINDS = (KIND_BERNOULLI, KIND_NEAR_CONSTANT, KIND_EXACT_CONSTANT)

# Bernoulli inclusion probabilities derived from nu are clamped below 1 so a
# float rounding artifact can never produce degenerate all-ones columns.
P_MAX = 1.0 - 1e-12

# Stream tags separating the independent randomness consumers of one seed.
_STREAM_COLUMNS = {KIND_BERNOULLI: 1, KIND_NEAR_CONSTANT: 2, KIND_EXACT_CONSTANT: 3}
_STREAM_DEFECTIVE = 4

_SEED_LIMIT = 1 << 64


def _check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or not 0 <= seed < _SEED_LIMIT:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    return int(seed)


@dataclass(frozen=True)
class DesignParams:
    """Construction parameters: p for Bernoulli, draws (L) for weight designs.

    ``nu`` records the density parameter the values were derived from, when
    known (L = nu*T/K, p = nu/K); it is carried for diagnostics only.
    """

    p: float | None = None
    draws: int | None = None
    nu: float | None = None


@dataclass
class TestDesign:
    """A pooling design stored as per-item sorted test-index sets."""

    __test__ = False  # the name matches pytest's collector; this is not a test

    kind: str
    n_items: int
    n_tests: int
    params: DesignParams
    seed: int
    columns: tuple[tuple[int, ...], ...]
    _masks: tuple[int, ...] | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.kind not in DESIGN_KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}")
        if self.n_items < 1 or self.n_tests < 1:
            raise ValueError("n_items and n_tests must be positive")
        _check_seed(self.seed)
        if len(self.columns) != self.n_items:
            raise ValueError("one column required per item")
        for col in self.columns:
            if any(t < 0 or t >= self.n_tests for t in col):
                raise ValueError("test index out of range")
            if any(a >= b for a, b in zip(col, col[1:])):
                raise ValueError("columns must be strictly sorted")

    @property
    def item_masks(self) -> tuple[int, ...]:
        """Per-item bitmask of tests (bit t set iff test t contains the item)."""
        if self._masks is None:
            masks = []
            for col in self.columns:
                m = 0
                for t in col:
                    m |= 1 << t
                masks.append(m)
            self._masks = tuple(masks)
        return self._masks

    @property
    def all_tests_mask(self) -> int:
        return (1 << self.n_tests) - 1


@dataclass(frozen=True)
class DefectiveSet:
    """The hidden set of defective items, as a sorted tuple of indices."""

    items: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(a >= b for a, b in zip(self.items, self.items[1:])):
            raise ValueError("items must be strictly sorted")
        if any(i < 0 for i in self.items):
            raise ValueError("item indices must be nonnegative")

    @property
    def k(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class OutcomeVector:
    """The T boolean test results."""

    bits: tuple[bool, ...]
    positive_mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        m = 0
        for t, bit in enumerate(self.bits):
            if bit:
                m |= 1 << t
        object.__setattr__(self, "positive_mask", m)

    @property
    def n_tests(self) -> int:
        return len(self.bits)

    def negative_mask(self, n_tests: int | None = None) -> int:
        n = len(self.bits) if n_tests is None else n_tests
        return ((1 << n) - 1) ^ self.positive_mask


@dataclass(frozen=True)
class ItemStats:
    """Exact per-instance counts driving the COMP/DD success conditions.

    ``covered_tests`` is the number of tests containing at least one
    defective; the three per-defective tuples are aligned with
    ``truth.items``. ``masked_nondefectives`` counts nondefective items that
    appear in no negative test (COMP succeeds iff it is zero).
    """

    covered_tests: int
    covered_without: tuple[int, ...]
    solo_defective_tests: tuple[int, ...]
    solo_pd_tests: tuple[int, ...]
    masked_nondefectives: int
    pd_set: tuple[int, ...]


def sample_defective_set(n_items: int, k: int, seed: int) -> DefectiveSet:
    """Uniform K-subset of [0, n_items), by partial Fisher-Yates.

    Exactly uniform over all C(n_items, k) subsets and O(k) in time and
    memory, so large item counts are fine.
    """
    if n_items < 0 or k < 0 or k > n_items:
        raise ValueError(f"need 0 <= k <= n_items, got k={k}, n_items={n_items}")
    seed = _check_seed(seed)
    key = rng.mix64(seed, _STREAM_DEFECTIVE)
    perm: dict[int, int] = {}
    chosen = []
    for r in range(k):
        j = r + rng.bounded_at(key, r, n_items - r)
        vr = perm.get(r, r)
        vj = perm.get(j, j)
        perm[r], perm[j] = vj, vr
        chosen.append(vj)
    return DefectiveSet(tuple(sorted(chosen)))


def gen_bernoulli(
    n_items: int, n_tests: int, p: float, seed: int, *, nu: float | None = None
) -> TestDesign:
    """Design with every cell included independently with probability p."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly inside (0, 1), got {p}")
    if n_items < 1 or n_tests < 1:
        raise ValueError("n_items and n_tests must be positive")
    seed = _check_seed(seed)
    keys = rng.mix64_np(seed, _STREAM_COLUMNS[KIND_BERNOULLI], np.arange(n_items, dtype=np.uint64))
    counters = np.arange(n_tests, dtype=np.uint64)
    columns: list[tuple[int, ...]] = []
    # chunk rows to bound the (items x tests) buffer at ~32 MB
    chunk = max(1, (4 << 20) // max(1, n_tests))
    for lo in range(0, n_items, chunk):
        block = rng.unit_np(keys[lo : lo + chunk, None], counters[None, :]) < p
        rows, cols = np.nonzero(block)
        splits = np.searchsorted(rows, np.arange(1, block.shape[0]))
        for part in np.split(cols, splits):
            columns.append(tuple(int(t) for t in part))
    return TestDesign(
        KIND_BERNOULLI, n_items, n_tests, DesignParams(p=p, nu=nu), seed, tuple(columns)
    )


def gen_near_constant(
    n_items: int, n_tests: int, draws: int, seed: int, *, nu: float | None = None
) -> TestDesign:
    """Design with L uniform draws per item, with replacement (duplicates collapse)."""
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    if n_tests < 1:
        raise ValueError(f"n_tests must be >= 1, got {n_tests}")
    if n_items < 1:
        raise ValueError(f"n_items must be >= 1, got {n_items}")
    seed = _check_seed(seed)
    keys = rng.mix64_np(seed, _STREAM_COLUMNS[KIND_NEAR_CONSTANT], np.arange(n_items, dtype=np.uint64))
    picks = rng.bounded_np(keys[:, None], np.arange(draws, dtype=np.uint64)[None, :], n_tests)
    picks = np.sort(picks, axis=1)
    columns = []
    for row in picks:
        prev = -1
        col = []
        for t in row:
            if t != prev:
                col.append(int(t))
                prev = t
        columns.append(tuple(col))
    return TestDesign(
        KIND_NEAR_CONSTANT,
        n_items,
        n_tests,
        DesignParams(draws=draws, nu=nu),
        seed,
        tuple(columns),
    )


def gen_exact_constant(
    n_items: int, n_tests: int, draws: int, seed: int, *, nu: float | None = None
) -> TestDesign:
    """Design with a uniform L-subset of tests per item (without replacement)."""
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    if draws > n_tests:
        raise ValueError(f"draws must not exceed n_tests ({n_tests}), got {draws}")
    if n_items < 1:
        raise ValueError(f"n_items must be >= 1, got {n_items}")
    seed = _check_seed(seed)
    tag = _STREAM_COLUMNS[KIND_EXACT_CONSTANT]
    columns = []
    for i in range(n_items):
        key = rng.mix64(seed, tag, i)
        perm: dict[int, int] = {}
        chosen = []
        for r in range(draws):
            j = r + rng.bounded_at(key, r, n_tests - r)
            vr = perm.get(r, r)
            vj = perm.get(j, j)
            perm[r], perm[j] = vj, vr
            chosen.append(vj)
        columns.append(tuple(sorted(chosen)))
    return TestDesign(
        KIND_EXACT_CONSTANT,
        n_items,
        n_tests,
        DesignParams(draws=draws, nu=nu),
        seed,
        tuple(columns),
    )


def generate_design(
    kind: str,
    n_items: int,
    n_tests: int,
    seed: int,
    *,
    p: float | None = None,
    draws: int | None = None,
    nu: float | None = None,
) -> TestDesign:
    """Dispatch to the generator for `kind` (p for Bernoulli, draws otherwise)."""
    if kind == KIND_BERNOULLI:
        if p is None:
            raise ValueError("bernoulli designs require p")
        return gen_bernoulli(n_items, n_tests, p, seed, nu=nu)
    if kind == KIND_NEAR_CONSTANT:
        if draws is None:
            raise ValueError("near_constant designs require draws")
        return gen_near_constant(n_items, n_tests, draws, seed, nu=nu)
    if kind == KIND_EXACT_CONSTANT:
        if draws is None:
            raise ValueError("exact_constant designs require draws")
        return gen_exact_constant(n_items, n_tests, draws, seed, nu=nu)
    raise ValueError(f"unknown design kind {kind!r}")


def regenerate_design(design: TestDesign) -> TestDesign:
    """Rebuild a design from its (kind, sizes, params, seed) metadata."""
    return generate_design(
        design.kind,
        design.n_items,
        design.n_tests,
        design.seed,
        p=design.params.p,
        draws=design.params.draws,
        nu=design.params.nu,
    )


@dataclass(frozen=True)
class NuParams:
    """Finite-size parameters realized from the density parameter nu.

    The analysis treats L = nu*T/K as a real number; ``draws`` rounds it to
    the nearest integer (ties to even, floored at 1) and ``draws_exact``
    retains the real value for diagnostics.
    """

    draws: int
    p: float
    draws_exact: float
    nu: float


def params_from_nu(nu: float, n_tests: int, k: int) -> NuParams:
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    if k < 1 or n_tests < 1:
        raise ValueError("k and n_tests must be >= 1")
    exact = nu * n_tests / k
    return NuParams(
        draws=max(1, round(exact)),
        p=min(P_MAX, nu / k),
        draws_exact=exact,
        nu=nu,
    )


def run_tests(design: TestDesign, truth: DefectiveSet) -> OutcomeVector:
    """Noiseless outcomes: test t is positive iff it contains a defective."""
    masks = design.item_masks
    m = 0
    for i in truth.items:
        if i >= design.n_items:
            raise ValueError(f"defective index {i} out of range for {design.n_items} items")
        m |= masks[i]
    return OutcomeVector(tuple(bool((m >> t) & 1) for t in range(design.n_tests)))


def possible_defectives(design: TestDesign, outcome: OutcomeVector) -> list[int]:
    """Items appearing in no negative test (the PD set of COMP step 1)."""
    neg = outcome.negative_mask(design.n_tests)
    masks = design.item_masks
    return [i for i in range(design.n_items) if masks[i] & neg == 0]


def compute_item_stats(
    design: TestDesign, truth: DefectiveSet, outcome: OutcomeVector
) -> ItemStats:
    """Exact counts of the quantities governing COMP/DD success."""
    if outcome.n_tests != design.n_tests:
        raise ValueError("outcome length does not match design")
    masks = design.item_masks
    union = 0
    for i in truth.items:
        if i >= design.n_items:
            raise ValueError(f"defective index {i} out of range")
        union |= masks[i]
    if union != outcome.positive_mask:
        raise ValueError("outcome is inconsistent with (design, truth)")

    k = truth.k
    # union of the other defectives' columns, via prefix/suffix ORs
    prefix = [0] * (k + 1)
    for idx, i in enumerate(truth.items):
        prefix[idx + 1] = prefix[idx] | masks[i]
    suffix = [0] * (k + 1)
    for idx in range(k - 1, -1, -1):
        suffix[idx] = suffix[idx + 1] | masks[truth.items[idx]]

    covered = union.bit_count()
    covered_without = []
    solo_defective = []
    for idx, i in enumerate(truth.items):
        others = prefix[idx] | suffix[idx + 1]
        covered_without.append(others.bit_count())
        solo_defective.append((masks[i] & ~others).bit_count())

    pd = possible_defectives(design, outcome)
    pd_counts = [0] * design.n_tests
    for j in pd:
        for t in design.columns[j]:
            pd_counts[t] += 1
    truth_set = set(truth.items)
    solo_pd = [
        sum(1 for t in design.columns[i] if pd_counts[t] == 1) for i in truth.items
    ]
    intruders = sum(1 for j in pd if j not in truth_set)
    return ItemStats(
        covered_tests=covered,
        covered_without=tuple(covered_without),
        solo_defective_tests=tuple(solo_defective),
        solo_pd_tests=tuple(solo_pd),
        masked_nondefectives=intruders,
        pd_set=tuple(pd),
    )


# -- JSON serialization (the CLI's design export/import format) --


def design_to_json_dict(design: TestDesign) -> dict:
    params: dict[str, object] = {"nu": design.params.nu}
    if design.kind == KIND_BERNOULLI:
        params["p"] = design.params.p
    else:
        params["L"] = design.params.draws
    return {
        "kind": design.kind,
        "N": design.n_items,
        "T": design.n_tests,
        "params": params,
        "seed": design.seed,
        "columns": [list(col) for col in design.columns],
    }


def design_to_json(design: TestDesign, indent: int | None = None) -> str:
    return json.dumps(design_to_json_dict(design), indent=indent)


def design_from_json_dict(obj: dict) -> TestDesign:
    try:
        kind = obj["kind"]
        n_items = obj["N"]
        n_tests = obj["T"]
        raw_params = obj["params"]
        seed = obj["seed"]
        columns = tuple(tuple(int(t) for t in col) for col in obj["columns"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed design object: {exc}") from exc
    params = DesignParams(
        p=raw_params.get("p"),
        draws=raw_params.get("L"),
        nu=raw_params.get("nu"),
    )
    return TestDesign(kind, n_items, n_tests, params, seed, columns)


def design_from_json(text: str) -> TestDesign:
    return design_from_json_dict(json.loads(text))
