"""Numerical certification of the structural properties of the problem.

Each check measures the worst violation of one claimed property on a
concrete model/prior instance and reports pass/fail against a tolerance:

* concavity of each value layer in the probability coordinate;
* concentration: posterior tail masses away from the threshold can only
  shrink along a level curve;
* level-curve spread: the horizontal distance between two level curves is
  non-decreasing in time;
* convex order: the one-step transition law from a fixed probability
  spreads out less at later times (stop-loss test with equal means);
* time monotonicity of the value surface and its boundaries;
* the binomial model solved per batch coincides with a Bernoulli model
  whose cost is charged once per batch and whose stopping is restricted to
  batch ends;
* a randomized probe hunting for time-monotonicity counterexamples, whose
  hits are findings to adjudicate, not assertion failures.

Checks are pure functions of their inputs (and seed) and may run
concurrently on independent instances.
"""

import json
import math
from dataclasses import asdict, dataclass
from itertools import product

import numpy as np
from scipy.special import expit, logit

from .families import NaturalFamily, family_for_prior, make_named_family
from .priors import (
    Prior,
    _Ctx,
    _log_odds,
    _lse_last,
    _unnorm_log_weights,
    _y_of_logit,
    make_prior,
    mass_below,
    posterior,
    transition_distribution,
    y_of_pi,
)
from .solver import ValueSurface, backward_induction, choose_horizon, gain, make_grid, solve

__all__ = [
    "CheckReport",
    "check_concavity",
    "check_concentration",
    "check_level_spread",
    "check_convex_order",
    "check_time_monotonicity",
    "check_binomial_reduction",
    "conjecture_probe",
    "sample_random_prior",
    "default_burn",
    "PROBE_WINDOWS",
]


@dataclass
class CheckReport:
    """Outcome of one check: pass iff worst_violation <= tolerance."""

    check: str
    instance: dict
    worst_violation: float
    tolerance: float
    passed: bool
    location: dict | None = None
    asserted: bool = True  # findings from the probe are informational

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _report(check, instance, worst, tol, location=None, asserted=True) -> CheckReport:
    worst = float(worst)
    return CheckReport(
        check=check,
        instance=instance,
        worst_violation=worst,
        tolerance=float(tol),
        passed=bool(worst <= tol),
        location=location if worst > tol else None,
        asserted=asserted,
    )


def check_concavity(surface: ValueSurface, tol: float = 1e-8, curvature_allowance: float = 1.0) -> CheckReport:
    """Worst convexity defect over all layers and interior grid triples.

    A layer is concave when every interior point sits on or above the chord
    of its neighbours; the tolerance gets an O(grid spacing^2) allowance for
    interpolation error.
    """
    grid = surface.pi_grid
    h = float(np.max(np.diff(grid)))
    eff_tol = tol + curvature_allowance * h * h
    worst = -math.inf
    loc = None
    for n, layer in enumerate(surface.values):
        span = grid[2:] - grid[:-2]
        lam = (grid[2:] - grid[1:-1]) / span
        chord = lam * layer[:-2] + (1.0 - lam) * layer[2:]
        defect = chord - layer[1:-1]
        j = int(np.argmax(defect))
        if defect[j] > worst:
            worst = float(defect[j])
            loc = {"n": n, "pi": float(grid[j + 1])}
    return _report(
        "concavity",
        {"horizon": surface.horizon, "grid_size": int(grid.size), "cost": surface.cost},
        worst,
        eff_tol,
        loc,
    )


def check_concentration(
    prior: Prior,
    family: NaturalFamily,
    pi: float,
    a: float,
    b: float,
    n_max: int,
    tol: float = 1e-8,
) -> CheckReport:
    """Along the pi-level curve, P(param <= a) and P(param > b) never grow."""
    if not a < prior.theta0 < b:
        raise ValueError("concentration check requires a < theta0 < b")
    below, above = [], []
    for n in range(n_max + 1):
        state = posterior(prior, family, n, y_of_pi(prior, family, n, pi))
        below.append(mass_below(state, a))
        above.append(1.0 - mass_below(state, b))
    below = np.asarray(below)
    above = np.asarray(above)
    worst = -math.inf
    loc = None
    for name, seq in (("below_a", below), ("above_b", above)):
        inc = np.diff(seq)
        j = int(np.argmax(inc))
        if inc[j] > worst:
            worst = float(inc[j])
            loc = {"n": j, "side": name, "pi": pi}
    return _report(
        "concentration",
        {"model": family.name, "pi": pi, "a": a, "b": b, "n_max": n_max},
        worst,
        tol,
        loc,
    )


def check_level_spread(
    prior: Prior,
    family: NaturalFamily,
    pi1: float,
    pi2: float,
    n_max: int,
    tol: float = 1e-8,
) -> CheckReport:
    """y(n, pi2) - y(n, pi1) is non-decreasing in n (curves spread out)."""
    if not 0.0 < pi1 <= pi2 < 1.0:
        raise ValueError("level spread check requires 0 < pi1 <= pi2 < 1")
    spreads = np.asarray(
        [y_of_pi(prior, family, n, pi2) - y_of_pi(prior, family, n, pi1) for n in range(n_max + 1)]
    )
    dec = -np.diff(spreads)
    j = int(np.argmax(dec)) if dec.size else 0
    worst = float(dec[j]) if dec.size else 0.0
    return _report(
        "level-spread",
        {"model": family.name, "pi1": pi1, "pi2": pi2, "n_max": n_max},
        worst,
        tol,
        {"n": j},
    )


def check_convex_order(
    prior: Prior,
    family: NaturalFamily,
    pi: float,
    m: int,
    n: int,
    t_grid=None,
    tol: float = 1e-8,
) -> CheckReport:
    """Stop-loss test: the step from time m spreads at least as much as from n >= m.

    With equal means (checked first; both transition laws are martingale
    steps from pi), stop-loss domination at every t is equivalent to convex
    order.  Finite supports make the stop-loss transform exact.
    """
    if m > n:
        raise ValueError("convex order check requires m <= n")
    if t_grid is None:
        t_grid = np.linspace(0.01, 0.99, 99)
    t_grid = np.asarray(t_grid, dtype=float)
    p_m, w_m = transition_distribution(prior, family, m, pi)
    p_n, w_n = transition_distribution(prior, family, n, pi)
    for label, p, w in (("m", p_m, w_m), ("n", p_n, w_n)):
        drift = abs(float(np.dot(w, p)) - pi)
        if drift > 1e-8:
            raise ValueError(
                f"transition mean at time {label} drifted by {drift:.2e} (> 1e-8); "
                "quadrature too coarse for the convex-order check"
            )
    sl_m = np.maximum(p_m[None, :] - t_grid[:, None], 0.0) @ w_m
    sl_n = np.maximum(p_n[None, :] - t_grid[:, None], 0.0) @ w_n
    excess = sl_n - sl_m
    j = int(np.argmax(excess))
    return _report(
        "convex-order",
        {"model": family.name, "pi": pi, "m": m, "n": n},
        float(excess[j]),
        tol,
        {"t": float(t_grid[j])},
    )


def default_burn(horizon: int) -> int:
    """Terminal layers excluded from time-monotonicity comparisons.

    The truncated terminal condition forces late layers up to the gain, so
    they say nothing about the untruncated surface.
    """
    return max(4, math.ceil(0.2 * horizon))


def check_time_monotonicity(surface: ValueSurface, tol: float = 1e-6, burn: int | None = None) -> CheckReport:
    """V non-decreasing in time; b1 non-decreasing and b2 non-increasing.

    Boundary moves within 1.5 grid cells are within reporting resolution
    and do not count as violations; only the excess beyond that enters the
    reported magnitude.
    """
    if burn is None:
        burn = default_burn(surface.horizon)
    limit = surface.horizon - burn
    instance = {
        "horizon": surface.horizon,
        "cost": surface.cost,
        "grid_size": int(surface.pi_grid.size),
        "burn": int(burn),
    }
    if limit < 1:
        return _report("time-monotonicity", {**instance, "note": "horizon too short for burn"}, 0.0, tol)
    worst = -math.inf
    loc = None
    for n in range(limit):
        drop = surface.values[n] - surface.values[n + 1]
        j = int(np.argmax(drop))
        if drop[j] > worst:
            worst = float(drop[j])
            loc = {"kind": "value", "n": n, "pi": float(surface.pi_grid[j])}
    cell = 1.5 * float(np.max(np.diff(surface.pi_grid)))
    b1_drop = surface.b1[:limit] - surface.b1[1 : limit + 1]
    b2_rise = surface.b2[1 : limit + 1] - surface.b2[:limit]
    for kind, move in (("b1", b1_drop), ("b2", b2_rise)):
        excess = move - cell
        j = int(np.argmax(excess))
        if excess[j] > worst:
            worst = float(excess[j])
            loc = {"kind": kind, "n": int(j)}
    return _report("time-monotonicity", instance, worst, tol, loc)


def _batched_bernoulli_layers(prior, family, grid, horizon, batch, cost):
    """Bernoulli model, cost charged once per batch, stopping at batch ends.

    Equivalent to backward induction over horizon * batch single-observation
    layers with cost on observation indices 1, batch+1, 2*batch+1, ... and
    stopping restricted to layers that are multiples of ``batch``; the
    no-stopping intermediate layers are composed exactly (enumerating the
    length-``batch`` observation paths and chaining the one-step predictive
    weights through the intermediate posterior states) so the comparison is
    not polluted by interpolation of intermediate layers near the value
    kinks.  Returns only the batch-end layers.
    """
    ctx = _Ctx(prior, family)
    x_vals = ctx.points  # (0, 1) for the Bernoulli scheme
    g = gain(grid)
    interior = grid[1:-1]
    paths = sorted(product(range(x_vals.size), repeat=batch))
    values = np.empty((horizon + 1, grid.size))
    values[horizon] = g
    for n in range(horizon - 1, -1, -1):
        m0 = n * batch
        y0 = _y_of_logit(ctx, m0, logit(interior))
        cont = np.zeros(interior.size)
        for path in paths:
            y = y0
            log_w = np.zeros(interior.size)
            for j, k in enumerate(path):
                z = _unnorm_log_weights(ctx, m0 + j, y)
                lw = z - _lse_last(z)[..., None]
                log_w = log_w + _lse_last(lw + ctx.ux[k]) + ctx.log_mass[k]
                y = y + x_vals[k]
            next_pi = expit(_log_odds(ctx, m0 + batch, y))
            cont += np.exp(log_w) * np.interp(next_pi, grid, values[n + 1])
        values[n, 1:-1] = np.minimum(g[1:-1], cost + cont)
        values[n, 0] = 0.0
        values[n, -1] = 0.0
    return values


def check_binomial_reduction(
    n_trials: int,
    prior: Prior,
    cost: float,
    grid_size: int = 2001,
    tol: float = 1e-6,
    horizon: int | None = None,
) -> CheckReport:
    """Batch equivalence of the binomial model with a batched Bernoulli model.

    Solves (a) the binomial(N) model charged c per observation and (b) the
    Bernoulli model charged c only on observations 1, N+1, 2N+1, ... with
    stopping restricted to multiples of N, then compares layer n of (a) with
    layer n*N of (b) across the whole grid.  The two routes share nothing
    but the grid: (a) weights outcome sums by the binomial predictive,
    (b) chains one-step Bernoulli predictives through every intermediate
    posterior state.
    """
    n_trials = int(n_trials)
    if n_trials < 1:
        raise ValueError("binomial reduction requires N >= 1")
    if horizon is None:
        horizon = choose_horizon(cost)
    binom = make_named_family(f"binomial({n_trials})")
    bern = make_named_family("bernoulli")
    grid = make_grid(grid_size)
    v_binom = backward_induction(
        prior, binom, grid, horizon, cost_at=lambda m: float(cost), can_stop_at=lambda m: True
    )
    v_bern = _batched_bernoulli_layers(prior, bern, grid, horizon, n_trials, float(cost))
    worst = -math.inf
    loc = None
    for n in range(horizon + 1):
        diff = np.abs(v_binom[n] - v_bern[n])
        j = int(np.argmax(diff))
        if diff[j] > worst:
            worst = float(diff[j])
            loc = {"n": n, "pi": float(grid[j])}
    return _report(
        "binomial-reduction",
        {"N": n_trials, "cost": cost, "grid_size": int(grid_size), "horizon": int(horizon)},
        worst,
        tol,
        loc,
    )


# ---------------------------------------------------------------------------
# randomized probe for the open time-monotonicity question
# ---------------------------------------------------------------------------

PROBE_WINDOWS = {
    "gaussian-mean": (-2.0, 2.0),
    "bernoulli": (-2.5, 2.5),
    "binomial(3)": (-2.0, 2.0),
    "exponential-rate": (0.3, 3.0),
    "gaussian-variance": (0.3, 3.0),
}


def sample_random_prior(rng, window, min_atoms: int = 2, max_atoms: int = 10) -> Prior:
    """Random two-sided prior: 2-10 atoms uniform in the window, Dirichlet weights."""
    lo, hi = window
    k = int(rng.integers(min_atoms, max_atoms + 1))
    for _ in range(200):
        atoms = np.sort(rng.uniform(lo, hi, size=k))
        if k == 1 or np.min(np.diff(atoms)) > 1e-3 * (hi - lo):
            break
    weights = rng.dirichlet(np.ones(k))
    weights = np.maximum(weights, 1e-12)
    theta0 = float(rng.uniform(atoms[0], atoms[-1]))
    if not np.any(atoms > theta0):  # guard against the measure-zero edge draw
        theta0 = float(0.5 * (atoms[0] + atoms[-1]))
    return make_prior(atoms, weights, theta0)


def conjecture_probe(
    models,
    cost: float = 0.05,
    trials: int = 100,
    seed: int = 0,
    grid_size: int = 501,
    tol: float = 1e-6,
    windows: dict | None = None,
    horizon: int | None = None,
) -> list:
    """Hunt for time-monotonicity violations over random priors.

    Per-trial randomness derives from (seed, trial index), so results are
    deterministic and independent of execution order; trials can be
    partitioned across workers.  A violation is a FINDING carrying full
    reproduction data, never an assertion failure: it may falsify the
    conjectured monotonicity or expose numerical error, and needs human
    adjudication either way.
    """
    models = list(models)
    if not models:
        raise ValueError("probe requires at least one model")
    windows = {**PROBE_WINDOWS, **(windows or {})}
    if horizon is None:
        horizon = choose_horizon(cost)
    reports = []
    for trial in range(int(trials)):
        rng = np.random.default_rng([int(seed), trial])
        model = models[trial % len(models)]
        prior = sample_random_prior(rng, windows[model])
        family = family_for_prior(model, prior)
        surface = solve(prior, family, cost, horizon, grid_size)
        rep = check_time_monotonicity(surface, tol)
        reports.append(
            CheckReport(
                check="conjecture-probe",
                instance={
                    "trial": trial,
                    "seed": int(seed),
                    "model": model,
                    "atoms": [float(v) for v in prior.atoms],
                    "weights": [float(v) for v in np.exp(prior.log_weights)],
                    "theta0": prior.theta0,
                    "cost": cost,
                    "grid_size": int(grid_size),
                    "horizon": int(horizon),
                },
                worst_violation=rep.worst_violation,
                tolerance=rep.tolerance,
                passed=rep.passed,
                location=rep.location,
                asserted=False,
            )
        )
    return reports
