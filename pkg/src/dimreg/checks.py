"""Named pass/fail checks over :mod:`dimreg.theory`, as run by ``dimreg validate``.

Each check takes keyword parameters and returns a :class:`CheckResult`
with plot-ready rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import theory
from .graph import connected_erdos_renyi
from .rng import substream
from .trainer import dimreg_update


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def __post_init__(self):
        self.passed = bool(self.passed)


def check_frobenius(count: int = 1000, max_n: int = 50, max_d: int = 16, rtol: float = 1e-9, seed=0) -> CheckResult:
    rng = substream(seed, "frobenius")
    rows = []
    for i in range(count):
        n, d = int(rng.integers(1, max_n + 1)), int(rng.integers(1, max_d + 1))
        r = theory.check_frobenius_identity(rng.standard_normal((n, d)))
        rows.append({"case": i, "n": n, "d": d, "lhs": r.lhs, "rhs": r.rhs, "relative_error": r.relative_error})
    worst = max(r["relative_error"] for r in rows)
    return CheckResult("frobenius", worst <= rtol, {"cases": count, "max_relative_error": worst}, rows)


def check_gradients(count: int = 50, max_n: int = 10, max_d: int = 4, rtol: float = 1e-4, seed=0) -> CheckResult:
    rng = substream(seed, "gradients")
    rows = []
    for i in range(count):
        n, d = int(rng.integers(2, max_n + 1)), int(rng.integers(1, max_d + 1))
        X = rng.normal(0.0, 0.5, (n, d))
        S = (rng.random((n, n)) < 0.3).astype(np.float64)
        rows.append({"case": i, "n": n, "d": d, **theory.gradient_oracle_errors(X, S)})
    worst = {k: max(r[k] for r in rows) for k in ("positive", "negative", "all_to_all", "dimension_mean")}
    return CheckResult("gradients", max(worst.values()) < rtol, {"cases": count, "max_relative_error": worst}, rows)


def check_sparsity(avg_degree: float = 10.0, n_list=(100, 200, 400, 800), c_floor: float = 0.5,
                seeds=(0, 1, 2, 3, 4)) -> CheckResult:
    rows = theory.sparsity_sweep(avg_degree, n_list, c_floor, seeds)
    under = all(r["repulsion_ratio"] <= r["ratio_bound"] for r in rows)
    floor = all(r["constriction"] >= c_floor * (1 - 1e-9) for r in rows)
    med = [float(np.median([r["repulsion_ratio"] for r in rows if r["n"] == n])) for n in n_list]
    decreasing = all(b < a for a, b in zip(med, med[1:]))
    return CheckResult("sparsity", under and floor and decreasing,
                       {"all_below_bound": under, "constriction_floor_met": floor,
                        "median_ratio_by_n": dict(zip(map(int, n_list), med)), "median_decreasing": decreasing},
                       rows)


def check_constriction(n: int = 200, d: int = 16, c_list=(0.5, 1.0, 2.0, 5.0, 10.0), seed=0) -> CheckResult:
    rows = theory.constriction_sweep(n, d, c_list, seed)
    diffs = [r["regularizer_gap"] for r in rows]
    decreasing = all(b < a for a, b in zip(diffs, diffs[1:]))
    under = all(r["regularizer_gap"] <= r["gap_bound"] for r in rows)
    return CheckResult("constriction", decreasing and under,
                       {"strictly_decreasing": decreasing, "all_below_bound": under, "diffs": diffs}, rows)


def check_tails(points: int = 10_000, lo: float = 0.0, hi: float = 40.0) -> CheckResult:
    x = np.linspace(lo, hi, points)
    r = theory.exponential_tail_check(x)
    # 4 ulps of slack for points where both sides round to the same double
    tol = 1.0 + 4 * np.finfo(np.float64).eps
    return CheckResult("tails", r["softplus"] <= tol and r["sigmoid"] <= tol, {"points": points, "worst_ratio": r})


def check_collapse(p_list=(0.05, 0.1, 0.2, 0.5), n: int = 100, steps: int = 1500, seed=0, d: int = 128,
                   init_scale: float = 1e-2, eta: float = 1e-2) -> CheckResult:
    traces = theory.collapse_experiment(p_list, n, steps, seed, d, init_scale, eta)
    rows, summary, ok = [], {}, True
    for tr in traces:
        cert = theory.certify_collapse(tr)
        p = tr.graph["p"]
        summary[str(p)] = {"certified": cert.certified, "inconclusive": cert.inconclusive, "t0": cert.t0,
                           "dipped": cert.dipped, "final_constriction": cert.final_constriction}
        ok &= cert.certified
        rows.extend({"p": p, **row} for row in tr.rows())
    # the sparsest graph should first dip below its starting constriction
    sparsest = str(min(p_list))
    ok &= summary[sparsest]["dipped"]
    return CheckResult("collapse", bool(ok), summary, rows)


def check_taylor(n: int = 20, d: int = 4, eta: float = 1e-2, seed=0) -> CheckResult:
    g, _ = connected_erdos_renyi(n, 0.3, seed)
    S = g.adjacency().toarray()
    G = substream(seed, "taylor").standard_normal((n, d))
    rows = []
    for max_dot in (1e-1, 3e-2, 1e-2, 1e-3, 1e-4):
        X = G * np.sqrt(max_dot / np.abs(G @ G.T)[S > 0].max())
        dev = theory.taylor_surrogate_check(X, S, eta)
        rows.append({"max_dot": max_dot, "deviation": dev, "bound": max_dot ** 2 * eta})
    ok = all(r["deviation"] <= r["bound"] for r in rows)
    ok &= theory.taylor_surrogate_check(np.zeros((n, d)), S, eta) == 0.0
    return CheckResult("taylor", bool(ok), {"worst_fraction_of_bound": max(r["deviation"] / r["bound"] for r in rows)},
                       rows)


def check_sgns(draws: int = 10_000, k: int = 3, seed=0, z_max: float = 3.0) -> CheckResult:
    r = theory.sgns_expectation_check(draws=draws, k=k, seed=seed)
    return CheckResult("sgns", r.max_z <= z_max, {"draws": draws, "k": k, "max_standard_errors": r.max_z})


def check_centering(count: int = 100, atol: float = 1e-12, seed=0) -> CheckResult:
    rng = substream(seed, "centering")
    worst = 0.0
    for _ in range(count):
        X = rng.normal(rng.normal(), 1.0, (int(rng.integers(1, 60)), int(rng.integers(1, 20))))
        dimreg_update(X, 1.0)
        worst = max(worst, float(np.abs(X.mean(axis=0)).max()))
    return CheckResult("centering", worst <= atol, {"cases": count, "max_abs_column_mean": worst})


CHECKS = {
    "frobenius": check_frobenius,
    "gradients": check_gradients,
    "sparsity": check_sparsity,
    "constriction": check_constriction,
    "tails": check_tails,
    "collapse": check_collapse,
    "taylor": check_taylor,
    "sgns": check_sgns,
    "centering": check_centering,
}
