"""Monte Carlo policy evaluation and an exact small-horizon oracle.

The oracle enumerates the full outcome tree of a finite-outcome model and
backward-inducts the recursion with no grid and no interpolation, which
makes it an independent reference for the grid solver.  The simulator draws
the parameter from the prior's atoms (so the estimated quantity is exactly
the Bayes risk: misclassification probability plus cost times expected
stopping time), replays the optimal or an alternative stopping rule, and
reports replicate-level aggregates.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .families import NaturalFamily
from .priors import Prior, _Ctx, _log_odds, validate_prior_for_family
from .solver import ValueSurface

__all__ = [
    "SimulationReport",
    "brute_force_value",
    "enumerate_reachable_pis",
    "FixedSampleRule",
    "ThresholdRule",
    "simulate_policy",
    "simulate_alternative",
]

_MAX_TREE = 10**7


@dataclass(frozen=True)
class SimulationReport:
    """Replicate-level summary of one simulation run.

    ``mean_cost`` is the average of 1{wrong decision} + c * tau over
    replicates and ``std_error`` its sample standard error.  ``error_rates``
    are the joint frequencies (accept upper & parameter below threshold,
    accept lower & parameter above threshold).  ``capped`` counts replicates
    that were still running when they hit the horizon cap.
    """

    replicates: int
    mean_cost: float
    std_error: float
    mean_stopping_time: float
    error_rates: tuple
    seed: int
    capped: int

    def to_json(self) -> str:
        d = asdict(self)
        d["error_rates"] = list(d["error_rates"])
        return json.dumps(d)


def brute_force_value(prior: Prior, family: NaturalFamily, cost: float, horizon: int) -> float:
    """Exact truncated value at the root (0, prior mass above threshold).

    Builds the exact tree of reachable (n, y) nodes and applies the
    dynamic-programming recursion on it directly, so the only numerical
    error is log-sum-exp roundoff.  Requires a finite observation scheme.
    """
    if family.scheme.kind != "finite":
        raise ValueError("oracle requires finite outcomes")
    if cost <= 0:
        raise ValueError("cost must be positive")
    horizon = int(horizon)
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    n_outcomes = family.scheme.n_points
    if n_outcomes**horizon > _MAX_TREE:
        raise ValueError("oracle tree too large for this horizon")
    validate_prior_for_family(prior, family)

    ctx = _Ctx(prior, family)
    x = ctx.points
    memo: dict = {}

    def node_value(n: int, counts: tuple) -> float:
        key = (n, counts)
        if key in memo:
            return memo[key]
        y = float(np.dot(counts, x))
        z = ctx.lw0 + ctx.atoms * y - n * ctx.B_atoms
        pi = float(expit(logsumexp(z[ctx.plus]) - logsumexp(z[ctx.minus])))
        g = min(pi, 1.0 - pi)
        if n == horizon:
            memo[key] = g
            return g
        lw = z - logsumexp(z)
        log_pred = logsumexp(lw[None, :] + ctx.ux, axis=1) + ctx.log_mass
        cont = cost
        for k in range(n_outcomes):
            child = list(counts)
            child[k] += 1
            cont += float(np.exp(log_pred[k])) * node_value(n + 1, tuple(child))
        val = min(g, cont)
        memo[key] = val
        return val

    return node_value(0, (0,) * n_outcomes)


def enumerate_reachable_pis(prior: Prior, family: NaturalFamily, horizon: int, eps: float = 1e-9):
    """All posterior probabilities reachable on the exact outcome tree.

    Useful for splicing into a solver grid so the oracle comparison is free
    of interpolation error.  Values within ``eps`` of 0 or 1 are dropped
    (they carry negligible value mass and cannot be inverted reliably).
    """
    if family.scheme.kind != "finite":
        raise ValueError("oracle requires finite outcomes")
    if family.scheme.n_points**horizon > _MAX_TREE:
        raise ValueError("oracle tree too large for this horizon")
    ctx = _Ctx(prior, family)
    x = ctx.points
    found = set()
    frontier = {(0,) * family.scheme.n_points}
    for n in range(horizon + 1):
        for counts in frontier:
            y = float(np.dot(counts, x))
            pi = float(expit(_log_odds(ctx, n, y)))
            if eps < pi < 1.0 - eps:
                found.add(pi)
        if n < horizon:
            nxt = set()
            for counts in frontier:
                for k in range(family.scheme.n_points):
                    child = list(counts)
                    child[k] += 1
                    nxt.add(tuple(child))
            frontier = nxt
    return np.asarray(sorted(found))


@dataclass(frozen=True)
class FixedSampleRule:
    """Observe exactly ``size`` samples, then decide by the 1/2 rule."""

    size: int

    @property
    def cap(self) -> int:
        return self.size

    def stop_mask(self, n, pi):
        return np.full(pi.shape, n >= self.size)


@dataclass(frozen=True)
class ThresholdRule:
    """Stop once the posterior probability leaves (low, high), capped."""

    low: float
    high: float
    max_steps: int

    @property
    def cap(self) -> int:
        return self.max_steps

    def stop_mask(self, n, pi):
        if n >= self.max_steps:
            return np.full(pi.shape, True)
        return (pi <= self.low) | (pi >= self.high)


def _run(stop_fn, cap, prior, family, cost, replicates, seed, trace_path=None):
    replicates = int(replicates)
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    validate_prior_for_family(prior, family)
    ctx = _Ctx(prior, family)
    rng = np.random.default_rng(seed)

    idx = rng.choice(prior.n_atoms, size=replicates, p=np.exp(prior.log_weights))
    thetas = prior.atoms[idx]
    # one observation matrix up front: row r is replicate r's stream, so a
    # replicate's trajectory depends only on (seed, r), not on the others
    obs = (
        family.sampler(thetas[:, None], rng, (replicates, cap))
        if cap > 0
        else np.zeros((replicates, 0))
    )

    y = np.zeros(replicates)
    tau = np.full(replicates, cap, dtype=int)
    accept = np.zeros(replicates, dtype=int)
    active = np.ones(replicates, dtype=bool)
    for n in range(cap + 1):
        if not active.any():
            break
        rows = np.nonzero(active)[0]
        pi_now = expit(_log_odds(ctx, n, y[rows]))
        stop_now = stop_fn(n, pi_now) if n < cap else np.full(pi_now.shape, True)
        stopping = rows[stop_now]
        tau[stopping] = n
        accept[stopping] = (pi_now[stop_now] > 0.5).astype(int)
        active[stopping] = False
        going = rows[~stop_now]
        if n < cap and going.size:
            y[going] += obs[going, n]

    false_upper = (accept == 1) & (thetas <= prior.theta0)
    false_lower = (accept == 0) & (thetas > prior.theta0)
    wrong = false_upper | false_lower
    loss = wrong.astype(float) + cost * tau

    mean_cost = float(np.mean(loss))
    std_error = float(np.std(loss, ddof=1) / np.sqrt(replicates)) if replicates > 1 else 0.0
    report = SimulationReport(
        replicates=replicates,
        mean_cost=mean_cost,
        std_error=std_error,
        mean_stopping_time=float(np.mean(tau)),
        error_rates=(float(np.mean(false_upper)), float(np.mean(false_lower))),
        seed=int(seed),
        capped=int(np.sum(tau == cap)),
    )
    if trace_path is not None:
        with open(trace_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("replicate,theta,tau,decision,loss\n")
            for r in range(replicates):
                fh.write(f"{r},{float(thetas[r])!r},{int(tau[r])},{int(accept[r])},{float(loss[r])!r}\n")
    return report


def simulate_policy(
    surface: ValueSurface,
    prior: Prior,
    family: NaturalFamily,
    replicates: int,
    seed: int,
    trace_path=None,
) -> SimulationReport:
    """Replay the solved stopping policy; deterministic given the seed."""
    b1, b2 = surface.b1, surface.b2

    def stop_fn(n, pi):
        return ~((b1[n] < pi) & (pi < b2[n]))

    return _run(stop_fn, surface.horizon, prior, family, surface.cost, replicates, seed, trace_path)


def simulate_alternative(
    rule,
    prior: Prior,
    family: NaturalFamily,
    cost: float,
    replicates: int,
    seed: int,
    trace_path=None,
) -> SimulationReport:
    """Replay a baseline rule (fixed sample size or probability thresholds).

    Optimality of the solved policy means any rule's mean cost should come
    out at or above the solved value, up to Monte Carlo error.
    """
    if cost <= 0:
        raise ValueError("cost must be positive")
    return _run(rule.stop_mask, rule.cap, prior, family, float(cost), replicates, seed, trace_path)
