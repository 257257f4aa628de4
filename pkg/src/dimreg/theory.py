"""Numerical checks of the collapse and repulsion-vs-regularisation results.

Everything here is dense and exact, meant for graphs of a few thousand
nodes at most.  Two scaling conventions meet in this module:

* :mod:`dimreg.objectives` returns true gradients, e.g. the all-to-all
  repulsion gradient ``2 K X`` with ``K = sigmoid(X X^T)`` and the
  dimension-mean gradient ``2 * 1 X`` (``1`` the all-ones matrix);
* the regulariser-vs-repulsion bound compares ``0.5 * 2 K X`` against
  ``1 X``, i.e. the regulariser gradient with the factor 2 dropped.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from . import objectives as obj
from .graph import Graph, connected_erdos_renyi, generate_erdos_renyi
from .rng import substream
from .trainer import NegativeSampler, constriction, init_embeddings, positive_update, sgns_update
from .walks import pairs_from_edges

MAX_DENSE_N = 5000


# ---------------------------------------------------------------------------
# Frobenius identity ||X X^T||_F^2 = ||X^T X||_F^2
# ---------------------------------------------------------------------------

@dataclass
class FrobeniusCheck:
    lhs: float
    rhs: float
    abs_diff: float

    @property
    def relative_error(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return self.abs_diff / scale if scale > 0 else 0.0

    def holds(self, rtol: float = 1e-9) -> bool:
        return self.relative_error <= rtol


def check_frobenius_identity(X) -> FrobeniusCheck:
    X = np.asarray(X, dtype=np.float64)
    lhs = float(np.sum((X @ X.T) ** 2))
    rhs = float(np.sum((X.T @ X) ** 2))
    return FrobeniusCheck(lhs, rhs, abs(lhs - rhs))


# ---------------------------------------------------------------------------
# exact gradients
# ---------------------------------------------------------------------------

@dataclass
class Gradients:
    positive: np.ndarray
    negative: np.ndarray
    all_to_all: np.ndarray
    dimension_mean: np.ndarray


def exact_gradients(X, S, weights=None) -> Gradients:
    X = np.asarray(X, dtype=np.float64)
    if len(X) > MAX_DENSE_N:
        raise ValueError(f"dense gradients limited to n <= {MAX_DENSE_N}")
    return Gradients(obj.positive_grad(X, S), obj.negative_grad(X, S),
                     obj.all_to_all_grad(X), obj.dimension_mean_grad(X, weights))


def finite_difference_gradient(f, X, eps: float = 1e-6) -> np.ndarray:
    """Central differences of scalar ``f`` with respect to every entry of ``X``."""
    X = np.array(X, dtype=np.float64)
    G = np.empty_like(X)
    for idx in np.ndindex(X.shape):
        old = X[idx]
        X[idx] = old + eps
        fp = f(X)
        X[idx] = old - eps
        fm = f(X)
        X[idx] = old
        G[idx] = (fp - fm) / (2 * eps)
    return G


def relative_error(analytic, numeric) -> float:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    return float(np.linalg.norm(analytic - numeric) / scale) if scale > 0 else 0.0


def gradient_oracle_errors(X, S, eps: float = 1e-6) -> dict:
    """Relative error of every analytic gradient against central differences."""
    g = exact_gradients(X, S)
    return {
        "positive": relative_error(g.positive, finite_difference_gradient(lambda Y: obj.positive_loss(Y, S), X, eps)),
        "negative": relative_error(g.negative, finite_difference_gradient(lambda Y: obj.negative_loss(Y, S), X, eps)),
        "all_to_all": relative_error(g.all_to_all, finite_difference_gradient(obj.all_to_all_loss, X, eps)),
        "dimension_mean": relative_error(g.dimension_mean,
                                         finite_difference_gradient(obj.dimension_mean_loss, X, eps)),
    }


# ---------------------------------------------------------------------------
# repulsion approximations
# ---------------------------------------------------------------------------

@dataclass
class GradientReport:
    n: int
    d: int
    m: int
    sparsity: float
    constriction: float
    beta_max: float
    k_min: float
    k_max: float
    norm_negative: float
    norm_all_to_all: float
    norm_regularizer: float
    repulsion_ratio: float
    ratio_bound: float
    regularizer_gap: float
    gap_bound: float
    gap_bound_triangle: float

    def as_row(self) -> dict:
        return asdict(self)


def gradient_report(X, S) -> GradientReport:
    """Compare the exact repulsion gradients on ``X`` for similarity ``S``.

    ``m`` is the number of non-zero entries of ``S``.  ``repulsion_ratio`` is
    ``||g_all - g_neg||^2 / ||g_neg||^2`` with ``g_all`` the all-to-all and
    ``g_neg`` the non-edge repulsion gradient; ``regularizer_gap`` is
    ``||(K - 1) X||^2``, the squared gap between half the all-to-all gradient
    and the regulariser gradient without its factor 2.  ``gap_bound_triangle``
    is the bound that follows from the triangle inequality alone,
    ``n * (n e^-C)^2 * beta_max``.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n > MAX_DENSE_N:
        raise ValueError(f"dense report limited to n <= {MAX_DENSE_N}")
    Z = X @ X.T
    K = expit(Z)
    C = float(Z.min())
    beta = float(np.max(np.einsum("ij,ij->i", X, X)))
    m = int(np.count_nonzero(S))
    g_all = 2.0 * K @ X
    g_neg = obj.negative_grad(X, S)
    g_reg = X.sum(axis=0)[None, :].repeat(n, axis=0)  # 1 X
    num = float(np.sum((g_all - g_neg) ** 2))
    den = float(np.sum(g_neg ** 2))
    ratio = num / den if den > 0 else float("inf")
    diff = float(np.sum(((-expit(-Z)) @ X) ** 2))  # sigma(z) - 1 = -sigma(-z), exact in floating point
    ratio_cap = beta ** 3 / C ** 4 * m / (n * n - m) if C > 0 else float("inf")
    gap_cap = (n * np.exp(-C)) ** 2 * beta
    return GradientReport(n=n, d=d, m=m, sparsity=m / n ** 2, constriction=C, beta_max=beta,
                          k_min=float(K.min()), k_max=float(K.max()),
                          norm_negative=float(np.sqrt(den)), norm_all_to_all=float(np.linalg.norm(g_all)),
                          norm_regularizer=float(np.linalg.norm(2.0 * g_reg)), repulsion_ratio=ratio,
                          ratio_bound=ratio_cap, regularizer_gap=diff, gap_bound=gap_cap, gap_bound_triangle=n * gap_cap)


def shift_for_constriction(base, direction, target: float, tol: float = 1e-12) -> float:
    """Smallest ``a >= 0`` with ``min Gram(base + a * direction) >= target`` (bisection)."""
    u = direction / np.linalg.norm(direction)
    bu = base @ u
    G0 = base @ base.T

    def cmin(a):
        return float(np.min(G0 + a * (bu[:, None] + bu[None, :]) + a * a))

    if cmin(0.0) >= target:
        return 0.0
    hi = 1.0
    while cmin(hi) < target:
        hi *= 2.0
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if cmin(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def constricted_embeddings(n: int, d: int, target: float, seed, noise: float = 1.0, base=None):
    """Rows ``a * u + noise * g_i`` with ``g_i`` standard normal and ``a`` set so
    the constriction equals ``target`` (up to bisection tolerance).

    Pass ``base`` (an ``(n, d)`` array of ``noise * g_i``) to reuse the same
    noise across targets; ``u`` is the first coordinate axis.
    """
    if base is None:
        base = noise * substream(seed, "constricted").standard_normal((n, d))
    u = np.zeros(d)
    u[0] = 1.0
    a = shift_for_constriction(base, u, target)
    X = base.copy()
    X[:, 0] += a
    return X


def sparsity_sweep(avg_degree: float = 10.0, n_list=(100, 200, 400, 800), c_floor: float = 0.5,
                seeds=range(5), d: int = 16, noise: float = 1.0, max_tries: int = 20) -> list[dict]:
    """All-to-all vs. non-edge repulsion on sparse G(n, avg_degree / (n - 1))."""
    rows = []
    for n in n_list:
        for seed in seeds:
            g = generate_erdos_renyi(n, avg_degree / (n - 1), (seed, n))
            S = g.adjacency().toarray()
            for attempt in range(max_tries):
                X = constricted_embeddings(n, d, c_floor, (seed, n, attempt), noise)
                if np.min(X @ X.T) >= c_floor * (1 - 1e-9):
                    break
            else:
                raise RuntimeError("could not construct embeddings above the constriction floor")
            rows.append({"seed": seed, **gradient_report(X, S).as_row()})
    return rows


def constriction_sweep(n: int = 200, d: int = 16, c_list=(0.5, 1.0, 2.0, 5.0, 10.0), seed=0,
                noise: float = 1.0, avg_degree: float = 10.0) -> list[dict]:
    """Regulariser vs. all-to-all repulsion on one noise matrix pushed to each constriction."""
    base = noise * substream(seed, "constricted").standard_normal((n, d))
    g = generate_erdos_renyi(n, avg_degree / (n - 1), seed)
    S = g.adjacency().toarray()
    rows = []
    for C in c_list:
        X = constricted_embeddings(n, d, C, seed, base=base)
        rows.append({"target_c": C, "n_over_d": n / d, **gradient_report(X, S).as_row()})
    return rows


def exponential_tail_check(x) -> dict:
    """Worst ratios ``(log(1+e^x) - x) / e^-x`` and ``(1 - sigmoid(x)) / e^-x``.

    Both inequalities hold iff the ratio is at most 1.  ``log(1+e^x) - x`` is
    evaluated as ``log1p(e^-x)``, the same quantity without cancellation.
    Where both sides agree to machine precision the computed ratio may
    exceed 1 by an ulp or two.
    """
    x = np.asarray(x, dtype=np.float64)
    bound = np.exp(-x)
    return {"softplus": float(np.max(np.log1p(bound) / bound)), "sigmoid": float(np.max(expit(-x) / bound))}


# ---------------------------------------------------------------------------
# collapse under attraction only
# ---------------------------------------------------------------------------

@dataclass
class CollapseTrace:
    steps: np.ndarray
    constriction: np.ndarray
    min_row_norm: np.ndarray
    max_row_norm: np.ndarray
    graph: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.steps) <= 0):
            raise ValueError("trace steps must be strictly increasing")

    def rows(self):
        for s, c, lo, hi in zip(self.steps, self.constriction, self.min_row_norm, self.max_row_norm):
            yield {"step": int(s), "constriction": float(c), "min_row_norm": float(lo), "max_row_norm": float(hi)}


@dataclass
class CollapseCertificate:
    certified: bool
    inconclusive: bool
    t0: int | None
    dipped: bool
    final_constriction: float


def certify_collapse(trace: CollapseTrace, tol: float = 1e-9, min_tail: float = 0.1) -> CollapseCertificate:
    """Find the first recorded step after which constriction is positive and
    non-decreasing (each step may drop by at most ``tol``).

    The certificate is inconclusive when no such step exists or when the
    certified tail covers less than ``min_tail`` of the recorded horizon.
    """
    c = trace.constriction
    ok_step = np.diff(c) >= -tol
    # t0: smallest index such that c[t:] > 0 and every later step is non-decreasing
    bad = np.flatnonzero(~np.concatenate([ok_step, [True]]) | (c <= 0))
    t0 = int(bad[-1]) + 1 if len(bad) else 0
    if t0 < len(c) and c[t0] <= 0:
        t0 += 1
    tail = len(c) - t0
    found = tail > 0
    enough = tail >= max(2, int(np.ceil(min_tail * len(c))))
    dipped = bool(np.min(c) < c[0])
    return CollapseCertificate(certified=bool(found and enough), inconclusive=not (found and enough),
                               t0=int(trace.steps[t0]) if found else None, dipped=dipped,
                               final_constriction=float(c[-1]))


def collapse_experiment(p_list=(0.05, 0.1, 0.2, 0.5), n: int = 100, steps: int = 1500, seed=0,
                        d: int = 128, init_scale: float = 1e-2, eta: float = 1e-2,
                        record_every: int = 1) -> list[CollapseTrace]:
    """Full-batch attraction-only gradient descent on connected G(n, p).

    Each step applies the positive update to every edge in both
    orientations against the same snapshot.
    """
    traces = []
    for p in p_list:
        g, attempt = connected_erdos_renyi(n, p, seed)
        batch = pairs_from_edges(g).pairs
        X = init_embeddings(n, d, init_scale, (seed, int(round(p * 1e6))))
        rec_s, rec_c, rec_lo, rec_hi = [], [], [], []

        def record(t):
            norms = np.linalg.norm(X, axis=1)
            rec_s.append(t)
            rec_c.append(constriction(X))
            rec_lo.append(norms.min())
            rec_hi.append(norms.max())

        record(0)
        for t in range(1, steps + 1):
            positive_update(X, batch, eta)
            if t % record_every == 0:
                record(t)
        traces.append(CollapseTrace(np.array(rec_s), np.array(rec_c), np.array(rec_lo), np.array(rec_hi),
                                    graph={"n": n, "p": p, "m": g.m, "resample_attempt": attempt},
                                    config={"d": d, "init_scale": init_scale, "eta": eta, "steps": steps,
                                            "seed": seed}))
    return traces


def linearised_step(X, S, eta):
    """Gradient step of size ``eta / 2`` on ``||1_{S>0} * (1 - X X^T / 2)||_F^2``.

    This is what the attraction update becomes when ``sigmoid(z)`` is replaced
    by ``1/2 + z/4``: ``X + eta * (1_{S>0} * (1 - X X^T / 2)) X``.
    """
    E = (S > 0) * (1.0 - 0.5 * (X @ X.T))
    return X + eta * E @ X


def taylor_surrogate_check(X, S, eta: float = 1e-2, max_dot: float = 0.1) -> float:
    """Largest entry gap between one attraction step and its linearisation.

    ``S`` must be symmetric; each non-zero is one ordered positive pair.
    """
    X = np.asarray(X, dtype=np.float64)
    z = np.abs(X @ X.T)[S > 0]
    if z.size and z.max() > max_dot * (1 + 1e-12):
        raise ValueError(f"linearisation needs |<x_i, x_j>| <= {max_dot}, got {z.max():.3g}")
    pairs = np.argwhere(S > 0)
    exact = positive_update(X.copy(), pairs, eta / 2.0) if len(pairs) else X.copy()
    return float(np.max(np.abs(exact - linearised_step(X, S, eta / 2.0))))


# ---------------------------------------------------------------------------
# negative sampling in expectation
# ---------------------------------------------------------------------------

@dataclass
class SgnsExpectation:
    mean_update: np.ndarray
    exact_update: np.ndarray
    standard_error: np.ndarray

    @property
    def max_z(self) -> float:
        se = np.where(self.standard_error > 0, self.standard_error, np.inf)
        return float(np.max(np.abs(self.mean_update - self.exact_update) / se))


def sgns_expected_update(X, batch, k: int, eta: float) -> np.ndarray:
    """Exact expectation of one uniform (alpha = 0) negative-sampling update.

    Each source ``i`` of the batch meets every node ``r`` with probability
    ``k / n``; row ``i`` moves by ``-eta * sigmoid(<x_i, x_r>) x_r`` and row
    ``r`` by ``-eta * sigmoid(<x_i, x_r>) x_i``.  Summed, this is
    ``-eta * k / n * (D K X + K D X)`` with ``D`` the source counts on the
    diagonal: the all-to-all repulsion of the batch's sources, scaled by ``k / n``.
    """
    n = len(X)
    c = np.bincount(np.asarray(batch)[:, 0], minlength=n).astype(np.float64)
    K = expit(X @ X.T)
    return -eta * k / n * (c[:, None] * (K @ X) + K @ (c[:, None] * X))


def sgns_expectation_check(g: Graph | None = None, d: int = 4, k: int = 3, eta: float = 0.1,
                           draws: int = 10_000, seed=0) -> SgnsExpectation:
    if g is None:
        g, _ = connected_erdos_renyi(10, 0.4, seed)
    rng = substream(seed, "sgns-check")
    X = rng.normal(0.0, 0.5, size=(g.n, d))
    batch = pairs_from_edges(g).pairs
    sampler = NegativeSampler(g.degrees, alpha=0.0)
    acc = np.zeros_like(X)
    acc2 = np.zeros_like(X)
    for _ in range(draws):
        delta = sgns_update(X.copy(), batch, sampler, k, eta, rng) - X
        acc += delta
        acc2 += delta * delta
    mean = acc / draws
    var = np.maximum(acc2 / draws - mean * mean, 0.0) * draws / (draws - 1)
    return SgnsExpectation(mean, sgns_expected_update(X, batch, k, eta), np.sqrt(var / draws))
