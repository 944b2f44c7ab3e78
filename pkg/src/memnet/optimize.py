"""Search over the 3*n_d-dimensional parameter space: a seeded
(mu, lambda) evolution strategy with self-adaptive step sizes for the global
stage, then resampling to a finer point count and a deterministic
Hooke-Jeeves pattern search for local refinement.

Every candidate is made admissible by projection inside the cost evaluation,
so ranking is by plain objective value and infeasibility never aborts a
generation (degenerate candidates cost -inf).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .network import NetworkParams, WeightedNetwork, resample_network
from .solver import Evaluator

__all__ = [
    "OptimConfig",
    "OptimResult",
    "ConfigError",
    "encode",
    "decode",
    "default_bounds",
    "global_search",
    "local_refine",
    "optimize",
    "save_result",
]


class ConfigError(ValueError):
    """Inconsistent optimizer configuration."""


@dataclass
class OptimConfig:
    """Knobs of the two-stage search."""

    L: float = 1.0
    m: float = 0.5
    n_d: int = 20
    budget: int = 20000
    seed: int = 0
    population: int | None = None  # default 20 * (3 n_d + 1)
    local_budget: int = 5000
    refine_nd: int = 50
    threads: int = 1
    scale_bounds: tuple[float, float] = (1e-3, 1.0 - 1e-3)

    def __post_init__(self):
        if self.L <= 0:
            raise ConfigError("L must be positive")
        if self.n_d < 2:
            raise ConfigError("n_d must be at least 2")
        if self.budget < 1:
            raise ConfigError("budget must be positive")
        if self.refine_nd < self.n_d:
            raise ConfigError("refine_nd must be >= n_d")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @property
    def dim(self) -> int:
        return 3 * self.n_d

    def population_size(self) -> int:
        return self.population if self.population else 20 * (self.dim + 1)


@dataclass
class OptimResult:
    """Best candidate found, its admissible network and energy, and the
    best-so-far trace (evaluation index, energy).

    ``best_params`` is None for searches over generic boxes whose best vector
    does not decode to a valid parameter triplet; ``best_vector`` always
    holds the raw optimum."""

    best_params: NetworkParams | None
    best_network: WeightedNetwork | None
    best_energy: float
    history: list[tuple[int, float]]
    evaluations_used: int
    best_vector: np.ndarray | None = None
    stages: dict = field(default_factory=dict)


def encode(params: NetworkParams) -> np.ndarray:
    """Flatten to [x1, y1, ..., x_nd, y_nd, w_1, ..., w_{nd-1}, scale]."""
    return np.concatenate([params.points.ravel(), params.weights, [params.scale]])


def decode(vector, n_d: int) -> NetworkParams:
    """Inverse of :func:`encode` for a given point count."""
    v = np.asarray(vector, dtype=float)
    if v.shape != (3 * n_d,):
        raise ValueError(f"expected vector of length {3 * n_d}, got {v.shape}")
    pts = v[: 2 * n_d].reshape(n_d, 2)
    weights = v[2 * n_d : 3 * n_d - 1]
    return NetworkParams(points=pts.copy(), weights=weights.copy(), scale=float(v[-1]))


def default_bounds(cfg: OptimConfig, domain, n_d: int | None = None):
    """Per-coordinate box: points in the domain bounding box, raw weights in
    [1, L], scale in the open unit interval (shaved by cfg.scale_bounds)."""
    n_d = n_d if n_d is not None else cfg.n_d
    x0, y0, x1, y1 = domain.bbox
    lo = np.empty(3 * n_d)
    hi = np.empty(3 * n_d)
    lo[: 2 * n_d : 2] = x0
    hi[: 2 * n_d : 2] = x1
    lo[1 : 2 * n_d : 2] = y0
    hi[1 : 2 * n_d : 2] = y1
    lo[2 * n_d : 3 * n_d - 1] = 1.0
    hi[2 * n_d : 3 * n_d - 1] = max(cfg.L, 1.0 + 1e-9)
    lo[-1], hi[-1] = cfg.scale_bounds
    return lo, hi


def _reflect(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Fold out-of-box coordinates back inside (reflection at the faces)."""
    span = hi - lo
    y = (x - lo) % (2.0 * span)
    y = np.where(y > span, 2.0 * span - y, y)
    return lo + y


def _evaluate_population(cost, vectors, threads):
    if threads > 1 and len(vectors) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(cost, vectors))
    return [cost(v) for v in vectors]


def global_search(cfg: OptimConfig, cost, bounds=None, domain=None) -> OptimResult:
    """Seeded (mu, lambda) evolution strategy with log-normal self-adaptive
    per-coordinate step sizes, reflection into the bound box, and plain
    objective ranking (maximization). Terminates at the evaluation budget.

    ``cost`` maps a raw parameter vector (the encode layout) to the value to
    maximize; :func:`optimize` supplies the decoding glue."""
    if bounds is None:
        if domain is None:
            raise ConfigError("global_search needs bounds or a domain")
        bounds = default_bounds(cfg, domain)
    lo, hi = np.asarray(bounds[0], dtype=float), np.asarray(bounds[1], dtype=float)
    dim = len(lo)
    if dim != cfg.dim:
        raise ConfigError(f"bounds have dimension {dim}, config expects {cfg.dim}")
    lam = cfg.population_size()
    if cfg.budget < lam:
        raise ConfigError(f"budget {cfg.budget} below population size {lam}")
    mu = max(1, lam // 7)
    rng = np.random.default_rng(cfg.seed)
    tau = 1.0 / np.sqrt(2.0 * np.sqrt(dim))
    tau_prime = 1.0 / np.sqrt(2.0 * dim)
    span = hi - lo

    X = lo + rng.random((lam, dim)) * span
    S = np.full((lam, dim), span / np.sqrt(dim))

    evals = 0
    history: list[tuple[int, float]] = []
    best_f = -np.inf
    best_x = X[0].copy()

    def run_generation(Xg, Sg):
        nonlocal evals, best_f, best_x
        k = min(len(Xg), cfg.budget - evals)
        f = np.asarray(_evaluate_population(cost, Xg[:k], cfg.threads), dtype=float)
        for i in range(k):
            evals += 1
            if f[i] > best_f:
                best_f = float(f[i])
                best_x = Xg[i].copy()
            history.append((evals, best_f))
        return f, Xg[:k], Sg[:k]

    f, Xe, Se = run_generation(X, S)
    while evals < cfg.budget:
        order = np.argsort(-f, kind="stable")[:mu]
        parents_x = Xe[order]
        parents_s = Se[order]
        pick = rng.integers(0, len(order), size=lam)
        g_step = rng.standard_normal(lam)
        noise = rng.standard_normal((lam, dim))
        moves = rng.standard_normal((lam, dim))
        S_new = parents_s[pick] * np.exp(tau_prime * g_step[:, None] + tau * noise)
        S_new = np.minimum(S_new, span)
        X_new = _reflect(parents_x[pick] + S_new * moves, lo, hi)
        # elitism: re-inject the best-so-far genotype
        X_new[0] = best_x
        f, Xe, Se = run_generation(X_new, S_new)

    try:
        params = decode(best_x, cfg.n_d)
    except ValueError:
        params = None
    return OptimResult(
        best_params=params,
        best_network=None,
        best_energy=best_f,
        history=history,
        evaluations_used=evals,
        best_vector=best_x,
    )


def local_refine(start, cfg: OptimConfig, cost, bounds=None, domain=None) -> OptimResult:
    """Derivative-free bound-constrained refinement (Hooke-Jeeves pattern
    search): coordinate polls with step halving plus pattern moves. Never
    returns a candidate worse than the start; stops at the local budget or
    when every step drops below 1e-6 of its bound range."""
    if isinstance(start, NetworkParams):
        n_d = start.n_points
        x0 = encode(start)
    else:
        x0 = np.asarray(start, dtype=float)
        if len(x0) % 3:
            raise ConfigError("raw start vector length must be a multiple of 3")
        n_d = len(x0) // 3
    if bounds is None:
        if domain is None:
            raise ConfigError("local_refine needs bounds or a domain")
        bounds = default_bounds(cfg, domain, n_d=n_d)
    lo, hi = np.asarray(bounds[0], dtype=float), np.asarray(bounds[1], dtype=float)
    x = np.clip(x0, lo, hi)
    span = hi - lo
    step = 0.1 * span
    dim = len(x)

    evals = 0
    history: list[tuple[int, float]] = []
    budget = max(1, cfg.local_budget)

    def f_of(v):
        nonlocal evals
        evals += 1
        return cost(v)

    fx = f_of(x)
    history.append((evals, fx))

    def poll(xc, fc):
        """One exploratory sweep; first improvement per coordinate."""
        xc = xc.copy()
        for i in range(dim):
            if evals >= budget:
                break
            for sgn in (1.0, -1.0):
                trial = xc.copy()
                trial[i] = min(hi[i], max(lo[i], trial[i] + sgn * step[i]))
                if trial[i] == xc[i]:
                    continue
                ft = f_of(trial)
                if ft > fc:
                    xc, fc = trial, ft
                    break
                if evals >= budget:
                    break
        return xc, fc

    while evals < budget and np.max(step / span) >= 1e-6:
        x_new, f_new = poll(x, fx)
        if f_new <= fx:
            step *= 0.5
            continue
        # accepted move; chase it with pattern moves while they keep paying off
        while evals < budget:
            direction = x_new - x
            x, fx = x_new, f_new
            history.append((evals, fx))
            pattern = np.clip(x + direction, lo, hi)
            if np.array_equal(pattern, x):
                break
            f_pat = f_of(pattern)
            x_try, f_try = poll(pattern, f_pat)
            if f_try > fx:
                x_new, f_new = x_try, f_try
            else:
                break
    history.append((evals, fx))

    try:
        params = decode(x, n_d)
    except ValueError:
        params = None
    return OptimResult(
        best_params=params,
        best_network=None,
        best_energy=fx,
        history=history,
        evaluations_used=evals,
        best_vector=x,
    )


def optimize(cfg: OptimConfig, evaluator: Evaluator) -> OptimResult:
    """Full pipeline: global evolution strategy at n_d points, resample the
    best network to refine_nd points, local pattern search. Reports the
    better of the two stages with a concatenated best-so-far history."""
    domain = evaluator.domain

    def cost_global(v):
        return evaluator.cost(decode(v, cfg.n_d))

    global_result = global_search(cfg, cost_global, domain=domain)

    best_params = global_result.best_params
    best_energy = global_result.best_energy
    history = list(global_result.history)
    evals = global_result.evaluations_used
    local_result = None

    if cfg.local_budget > 0 and np.isfinite(best_energy):
        net = evaluator.admissible(best_params)
        try:
            start = resample_network(net, cfg.refine_nd)
        except ValueError:
            start = best_params  # refine at the original point count
        lo, hi = default_bounds(cfg, domain, n_d=start.n_points)
        wmax = float(start.weights.max(initial=1.0))
        if wmax > hi[2 * start.n_points]:
            hi[2 * start.n_points : 3 * start.n_points - 1] = 1.05 * wmax

        def cost_local(v, _nd=start.n_points):
            return evaluator.cost(decode(v, _nd))

        local_result = local_refine(start, cfg, cost_local, bounds=(lo, hi))
        for e, fbest in local_result.history:
            best_energy = max(best_energy, fbest)
            history.append((evals + e, best_energy))
        evals += local_result.evaluations_used
        if local_result.best_energy > global_result.best_energy:
            best_params = local_result.best_params

    best_network = evaluator.admissible(best_params)
    result = OptimResult(
        best_params=best_params,
        best_network=best_network,
        best_energy=best_energy,
        history=history,
        evaluations_used=evals,
        stages={"global": global_result, "local": local_result},
    )
    return result


def save_result(result: OptimResult, cfg: OptimConfig, path) -> None:
    """Write the optimization result file: config echo, best network in the
    network JSON layout, best energy, best-so-far history."""
    net = result.best_network
    payload = {
        "config": {
            "L": cfg.L,
            "m": cfg.m,
            "n_d": cfg.n_d,
            "budget": cfg.budget,
            "seed": cfg.seed,
            "population": cfg.population_size(),
            "local_budget": cfg.local_budget,
            "refine_nd": cfg.refine_nd,
        },
        "best_energy": result.best_energy,
        "evaluations_used": result.evaluations_used,
        "best_network": {
            "points": [[float(x), float(y)] for x, y in net.points],
            "edges": [[int(i), int(j)] for i, j in net.edges],
            "theta": [float(t) for t in net.theta],
        },
        "history": [[int(e), float(v)] for e, v in result.history],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
