"""Monte Carlo lab: success curves over test-count grids, empirical laws, CIs.

Determinism contract: trial r of design arm a at grid point T runs with seed
``mix64(master_seed, a, T, r)`` (splitmix64-based, see :mod:`grouptest.rng`),
and every decoder in the experiment decodes the *same* instance of that
trial. Results are therefore bitwise reproducible across machines, execution
orders, and thread counts; the implementation here is sequential.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass
from typing import IO

import numpy as np

from . import decoders as dec
from . import model
from .rng import mix64

DESIGN_ALIASES = {
    "bernoulli": model.KIND_BERNOULLI,
    "ncc": model.KIND_NEAR_CONSTANT,
    "near_constant": model.KIND_NEAR_CONSTANT,
    "ccw": model.KIND_EXACT_CONSTANT,
    "exact_constant": model.KIND_EXACT_CONSTANT,
}

CSV_COLUMNS = (
    "design",
    "decoder",
    "nu",
    "N",
    "K",
    "T",
    "trials",
    "successes",
    "unresolved",
    "p_hat",
    "ci_lo",
    "ci_hi",
)


def wilson_interval(
    successes: int, trials: int, confidence: float = 0.95
) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion; always within [0, 1]."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    z = statistics.NormalDist().inv_cdf((1.0 + confidence) / 2.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    margin = (z / denom) * ((p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) ** 0.5)
    # the interval endpoints are exactly 0 / 1 at the extremes; keep them so
    lo = 0.0 if successes == 0 else max(0.0, center - margin)
    hi = 1.0 if successes == trials else min(1.0, center + margin)
    return (lo, hi)


@dataclass(frozen=True)
class DesignArm:
    """One design under test: a kind plus the density parameter nu."""

    kind: str
    nu: float

    def __post_init__(self) -> None:
        kind = DESIGN_ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown design kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")


@dataclass
class ExperimentConfig:
    n_items: int
    k: int
    t_grid: tuple[int, ...]
    designs: tuple[DesignArm, ...]
    decoders: tuple[str, ...]
    trials: int
    master_seed: int
    sss_node_budget: int = dec.DEFAULT_NODE_BUDGET

    def __post_init__(self) -> None:
        self.t_grid = tuple(int(t) for t in self.t_grid)
        self.designs = tuple(
            arm if isinstance(arm, DesignArm) else DesignArm(*arm) for arm in self.designs
        )
        self.decoders = tuple(self.decoders)
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.t_grid or any(
            a >= b for a, b in zip(self.t_grid, self.t_grid[1:])
        ):
            raise ValueError("t_grid must be nonempty and strictly increasing")
        if any(t < 1 for t in self.t_grid):
            raise ValueError("t_grid entries must be >= 1")
        if not 0 <= self.k < self.n_items:
            raise ValueError(f"need 0 <= k < n_items, got k={self.k}, N={self.n_items}")
        if not self.designs:
            raise ValueError("at least one design arm required")
        for alg in self.decoders:
            if alg not in dec.ALGORITHMS:
                raise ValueError(f"unknown decoder {alg!r}; expected one of {dec.ALGORITHMS}")
        if not self.decoders:
            raise ValueError("at least one decoder required")
        if self.sss_node_budget < 1:
            raise ValueError("sss_node_budget must be >= 1")
        if not 0 <= self.master_seed < 1 << 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {
            "n_items",
            "k",
            "t_grid",
            "designs",
            "decoders",
            "trials",
            "master_seed",
            "sss_node_budget",
        }
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        missing = {"n_items", "k", "t_grid", "designs", "decoders", "trials"} - set(obj)
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        designs = []
        for entry in obj["designs"]:
            if isinstance(entry, dict):
                designs.append(DesignArm(entry["kind"], entry["nu"]))
            else:
                kind, nu = entry
                designs.append(DesignArm(kind, nu))
        return cls(
            n_items=int(obj["n_items"]),
            k=int(obj["k"]),
            t_grid=tuple(obj["t_grid"]),
            designs=tuple(designs),
            decoders=tuple(obj["decoders"]),
            trials=int(obj["trials"]),
            master_seed=int(obj.get("master_seed", 0)),
            sss_node_budget=int(obj.get("sss_node_budget", dec.DEFAULT_NODE_BUDGET)),
        )

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "k": self.k,
            "t_grid": list(self.t_grid),
            "designs": [{"kind": a.kind, "nu": a.nu} for a in self.designs],
            "decoders": list(self.decoders),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "sss_node_budget": self.sss_node_budget,
        }


@dataclass(frozen=True)
class SuccessPoint:
    design: str
    nu: float
    decoder: str
    n_tests: int
    trials: int
    successes: int
    unresolved: int
    p_hat: float
    ci_lo: float
    ci_hi: float


@dataclass
class SuccessCurve:
    config: ExperimentConfig
    points: tuple[SuccessPoint, ...]

    def point(self, design: str, decoder: str, n_tests: int) -> SuccessPoint:
        kind = DESIGN_ALIASES.get(design, design)
        for pt in self.points:
            if pt.design == kind and pt.decoder == decoder and pt.n_tests == n_tests:
                return pt
        raise KeyError((design, decoder, n_tests))

    def write_csv(self, stream: IO[str]) -> None:
        writer = csv.writer(stream)
        writer.writerow(CSV_COLUMNS)
        for pt in self.points:
            writer.writerow(
                [
                    pt.design,
                    pt.decoder,
                    f"{pt.nu:.6f}",
                    self.config.n_items,
                    self.config.k,
                    pt.n_tests,
                    pt.trials,
                    pt.successes,
                    pt.unresolved,
                    f"{pt.p_hat:.6f}",
                    f"{pt.ci_lo:.6f}",
                    f"{pt.ci_hi:.6f}",
                ]
            )


def trial_seed(master_seed: int, arm_id: int, n_tests: int, trial: int) -> int:
    """Seed for one (design arm, grid point, trial) cell."""
    return mix64(master_seed, arm_id, n_tests, trial)


def build_design(
    arm: DesignArm, n_items: int, k: int, n_tests: int, seed: int
) -> model.TestDesign:
    """Realize a design arm at a grid point: nu fixes p or the draw count."""
    params = model.params_from_nu(arm.nu, n_tests, max(1, k))
    if arm.kind == model.KIND_BERNOULLI:
        return model.gen_bernoulli(n_items, n_tests, params.p, seed, nu=arm.nu)
    draws = params.draws
    if arm.kind == model.KIND_EXACT_CONSTANT:
        draws = min(draws, n_tests)
    return model.generate_design(arm.kind, n_items, n_tests, seed, draws=draws, nu=arm.nu)


def _assert_trial_invariants(
    design: model.TestDesign,
    truth: model.DefectiveSet,
    outcome: model.OutcomeVector,
    results: dict[str, dec.DecodeResult | None],
) -> None:
    stats = model.compute_item_stats(design, truth, outcome)
    truth_set = set(truth.items)
    comp_res = results.get("comp")
    if comp_res is not None:
        exact = set(comp_res.estimate) == truth_set
        assert exact == (stats.masked_nondefectives == 0), "COMP exact <=> G == 0"
        assert truth_set <= set(comp_res.estimate), "truth must be inside COMP estimate"
    dd_res = results.get("dd")
    if dd_res is not None:
        exact = set(dd_res.estimate) == truth_set
        all_solo = all(l > 0 for l in stats.solo_pd_tests)
        assert exact == all_solo, "DD exact <=> min L_i > 0"
        assert set(dd_res.estimate) <= truth_set, "DD estimate must be inside truth"
    scomp_res = results.get("scomp")
    if scomp_res is not None:
        assert dec.is_satisfying(design, outcome, scomp_res.estimate)
        if dd_res is not None and set(dd_res.estimate) == truth_set:
            assert set(scomp_res.estimate) == truth_set, "DD exact => SCOMP exact"
    sss_res = results.get("sss")
    if sss_res is not None:
        assert len(sss_res.estimate) <= truth.k, "|SSS estimate| <= K"
        assert dec.is_satisfying(design, outcome, sss_res.estimate)


def run_success_curve(
    config: ExperimentConfig, *, check_invariants: bool = False
) -> SuccessCurve:
    """Empirical exact-recovery probability per (design, decoder, T).

    SSS trials that exhaust the node budget are counted as failures in the
    estimate and reported in the ``unresolved`` column. With
    ``check_invariants`` every trial additionally asserts the decoder
    containment and success-condition identities (test mode).
    """
    counts: dict[tuple[int, str, int], list[int]] = {}
    for arm_id, arm in enumerate(config.designs):
        for n_tests in config.t_grid:
            for alg in config.decoders:
                counts[(arm_id, alg, n_tests)] = [0, 0]  # successes, unresolved
            for trial in range(config.trials):
                seed = trial_seed(config.master_seed, arm_id, n_tests, trial)
                design = build_design(arm, config.n_items, config.k, n_tests, seed)
                truth = model.sample_defective_set(config.n_items, config.k, seed)
                outcome = model.run_tests(design, truth)
                results: dict[str, dec.DecodeResult | None] = {}
                for alg in config.decoders:
                    cell = counts[(arm_id, alg, n_tests)]
                    if alg == "sss":
                        try:
                            res = dec.sss(design, outcome, config.sss_node_budget)
                        except dec.UnresolvedSearchError:
                            cell[1] += 1
                            results[alg] = None
                            continue
                    elif alg == "comp":
                        res = dec.comp(design, outcome)
                    elif alg == "dd":
                        res = dec.dd(design, outcome)
                    else:
                        res = dec.scomp(design, outcome)
                    results[alg] = res
                    if dec.evaluate(res, truth).exact:
                        cell[0] += 1
                if check_invariants:
                    _assert_trial_invariants(design, truth, outcome, results)
    points = []
    for arm_id, arm in enumerate(config.designs):
        for alg in config.decoders:
            for n_tests in config.t_grid:
                successes, unresolved = counts[(arm_id, alg, n_tests)]
                lo, hi = wilson_interval(successes, config.trials)
                points.append(
                    SuccessPoint(
                        design=arm.kind,
                        nu=arm.nu,
                        decoder=alg,
                        n_tests=n_tests,
                        trials=config.trials,
                        successes=successes,
                        unresolved=unresolved,
                        p_hat=successes / config.trials,
                        ci_lo=lo,
                        ci_hi=hi,
                    )
                )
    return SuccessCurve(config, tuple(points))


@dataclass
class ItemStatsSample:
    """Joint empirical records of the per-instance counts across trials.

    Per-defective arrays have shape (trials, K) and stay aligned, so
    conditional laws can be extracted by boolean indexing.
    """

    n_items: int
    k: int
    n_tests: int
    draws: int
    trials: int
    covered: np.ndarray
    intruders: np.ndarray
    covered_without: np.ndarray
    solo_defective: np.ndarray
    solo_pd: np.ndarray

    def mi_given_covered_without(self, w: int) -> np.ndarray:
        """All M_i observations where that defective's W_{K\\i} equals w."""
        return self.solo_defective[self.covered_without == w]

    def intruders_given_covered(self, x: int) -> np.ndarray:
        return self.intruders[self.covered == x]

    def li_zero_rate(self, g: int, w: int, j: int) -> tuple[int, int]:
        """(count of L_i == 0, matching observations) at fixed (g, w, j)."""
        match = (
            (self.covered_without == w)
            & (self.solo_defective == j)
            & (self.intruders[:, None] == g)
        )
        sel = self.solo_pd[match]
        return int((sel == 0).sum()), int(sel.size)


def collect_item_stats(
    arm: DesignArm,
    n_items: int,
    k: int,
    n_tests: int,
    trials: int,
    master_seed: int,
) -> ItemStatsSample:
    """Sample the joint law of the per-instance counts for one design arm."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if k < 1:
        raise ValueError("collect_item_stats requires k >= 1")
    covered = np.zeros(trials, dtype=np.int64)
    intruders = np.zeros(trials, dtype=np.int64)
    covered_without = np.zeros((trials, k), dtype=np.int64)
    solo_defective = np.zeros((trials, k), dtype=np.int64)
    solo_pd = np.zeros((trials, k), dtype=np.int64)
    params = model.params_from_nu(arm.nu, n_tests, k)
    for trial in range(trials):
        seed = trial_seed(master_seed, 0, n_tests, trial)
        design = build_design(arm, n_items, k, n_tests, seed)
        truth = model.sample_defective_set(n_items, k, seed)
        outcome = model.run_tests(design, truth)
        st = model.compute_item_stats(design, truth, outcome)
        covered[trial] = st.covered_tests
        intruders[trial] = st.masked_nondefectives
        covered_without[trial] = st.covered_without
        solo_defective[trial] = st.solo_defective_tests
        solo_pd[trial] = st.solo_pd_tests
    return ItemStatsSample(
        n_items=n_items,
        k=k,
        n_tests=n_tests,
        draws=params.draws,
        trials=trials,
        covered=covered,
        intruders=intruders,
        covered_without=covered_without,
        solo_defective=solo_defective,
        solo_pd=solo_pd,
    )


@dataclass(frozen=True)
class MaskingEstimate:
    """Monte Carlo lower bound on SSS error via defective-masking events."""

    probability: float
    ci_lo: float
    ci_hi: float
    hits: int
    trials: int


def estimate_sss_masking_lb(
    arm: DesignArm,
    n_items: int,
    k: int,
    n_tests: int,
    trials: int,
    master_seed: int,
) -> MaskingEstimate:
    """Estimate P(some defective is masked by the other defectives).

    Whenever the event occurs the true set is not the smallest satisfying
    set, so this estimates a lower bound on the SSS error probability.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits = 0
    for trial in range(trials):
        seed = trial_seed(master_seed, 0, n_tests, trial)
        design = build_design(arm, n_items, k, n_tests, seed)
        truth = model.sample_defective_set(n_items, k, seed)
        items = truth.items
        if any(
            dec.is_masked(design, i, [j for j in items if j != i]) for i in items
        ):
            hits += 1
    lo, hi = wilson_interval(hits, trials)
    return MaskingEstimate(hits / trials, lo, hi, hits, trials)
