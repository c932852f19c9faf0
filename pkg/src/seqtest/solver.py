"""Backward-induction solver for the sequential testing value function.

The value surface V[n][j] approximates the minimal expected remaining cost
(terminal misclassification loss pi ^ (1 - pi) plus a per-observation cost)
when the posterior probability of the upper hypothesis is pi_grid[j] at
time n.  The recursion is

    V[n] = min( pi ^ (1-pi),  c + E[ V[n+1](next pi) ] )

with the terminal layer of the truncated problem set to the gain.  The
expectation runs over the one-step posterior-probability transition law and
evaluates V[n+1] by piecewise-linear interpolation on the grid, which
preserves concavity of each layer.  Grid endpoints 0 and 1 are absorbing
with value 0; the expectation is never evaluated there.

Each layer's stopping set is an interval complement: the continuation
region is (b1[n], b2[n]) with b1 <= 1/2 <= b2.  Boundaries are reported as
grid values (one-cell uncertainty; no sub-grid polishing).
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .families import NaturalFamily
from .priors import (
    Prior,
    _Ctx,
    _log_odds,
    _lse_last,
    _unnorm_log_weights,
    _y_of_logit,
    validate_prior_for_family,
)

__all__ = [
    "ValueSurface",
    "PolicyDecision",
    "make_grid",
    "gain",
    "bellman_step",
    "backward_induction",
    "solve",
    "extract_boundaries",
    "policy_decide",
    "choose_horizon",
    "value_at",
    "write_surface_json",
    "read_surface_json",
    "write_boundaries_csv",
    "read_boundaries_csv",
    "write_value_layers_csv",
]

# points with V >= gain - STOP_TOL are classified as stopped
STOP_TOL = 1e-12


def gain(pi):
    """Cost of stopping immediately at posterior probability pi."""
    pi = np.asarray(pi, dtype=float)
    return np.minimum(pi, 1.0 - pi)


@dataclass(frozen=True)
class ValueSurface:
    """Solved value grid plus extracted stopping boundaries."""

    cost: float
    horizon: int
    pi_grid: np.ndarray
    values: np.ndarray  # shape (horizon + 1, len(pi_grid))
    b1: np.ndarray
    b2: np.ndarray


@dataclass(frozen=True)
class PolicyDecision:
    action: str  # "continue" | "stop"
    accept: int | None = None  # 1 accepts the upper hypothesis; set when stopping


def make_grid(size: int, kind: str = "uniform", include=()) -> np.ndarray:
    """Probability grid on [0, 1] including the endpoints.

    ``include`` splices extra interior points into the base grid (used to
    make specific starting probabilities exactly representable).
    """
    size = int(size)
    if size < 3:
        raise ValueError("grid size must be at least 3")
    if kind == "uniform":
        base = np.linspace(0.0, 1.0, size)
    elif kind == "cosine":
        base = 0.5 * (1.0 - np.cos(np.linspace(0.0, math.pi, size)))
        # symmetrize so the endpoints and (for odd sizes) the midpoint are exact
        base = 0.5 * (base + (1.0 - base[::-1]))
        base[0] = 0.0
        base[-1] = 1.0
        if size % 2 == 1:
            base[size // 2] = 0.5
    else:
        raise ValueError(f"unknown grid kind '{kind}'")
    extra = np.asarray(list(include), dtype=float)
    if extra.size:
        if np.any(extra <= 0.0) or np.any(extra >= 1.0):
            raise ValueError("include points must lie strictly inside (0, 1)")
        base = np.union1d(base, extra)
    return base


def _continuation(ctx: _Ctx, grid: np.ndarray, n: int, next_layer: np.ndarray) -> np.ndarray:
    """E[ interp(next_layer)(pi_{n+1}) | pi_n = grid interior ]."""
    interior = grid[1:-1]
    y = _y_of_logit(ctx, n, logit(interior))
    z = _unnorm_log_weights(ctx, n, y)
    lw = z - _lse_last(z)[..., None]
    cont = np.zeros(interior.size)
    for k in range(ctx.points.size):
        log_pred = _lse_last(lw + ctx.ux[k]) + ctx.log_mass[k]
        next_pi = expit(_log_odds(ctx, n + 1, y + ctx.points[k]))
        cont += np.exp(log_pred) * np.interp(next_pi, grid, next_layer)
    return cont


def _step(ctx, grid, n, next_layer, cost, allow_stop=True):
    g = gain(grid)
    out = np.empty_like(g)
    inner = cost + _continuation(ctx, grid, n, next_layer)
    out[1:-1] = np.minimum(g[1:-1], inner) if allow_stop else inner
    out[0] = 0.0
    out[-1] = 0.0
    return out


def bellman_step(next_layer, n: int, grid, prior: Prior, family: NaturalFamily, cost: float):
    """One backward step: layer at time n from the layer at time n + 1."""
    grid = np.asarray(grid, dtype=float)
    next_layer = np.asarray(next_layer, dtype=float)
    if next_layer.shape != grid.shape:
        raise ValueError("next_layer must be defined on the same grid")
    return _step(_Ctx(prior, family), grid, n, next_layer, float(cost))


def backward_induction(prior, family, grid, n_layers, cost_at, can_stop_at):
    """General backward induction with layer-dependent cost and stopping.

    ``cost_at(m)`` is the cost charged for observation m + 1; ``can_stop_at(m)``
    says whether stopping is allowed at layer m.  The terminal layer is the
    gain.  Returns the full (n_layers + 1, grid size) value matrix.
    """
    grid = np.asarray(grid, dtype=float)
    ctx = _Ctx(prior, family)
    values = np.empty((n_layers + 1, grid.size))
    values[n_layers] = gain(grid)
    for m in range(n_layers - 1, -1, -1):
        values[m] = _step(ctx, grid, m, values[m + 1], cost_at(m), can_stop_at(m))
    return values


def solve(
    prior: Prior,
    family: NaturalFamily,
    cost: float,
    horizon: int,
    grid_size: int = 2001,
    grid_kind: str = "uniform",
    include=(),
) -> ValueSurface:
    """Solve the truncated problem and extract per-layer stopping boundaries."""
    if cost <= 0:
        raise ValueError("cost must be positive")
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    validate_prior_for_family(prior, family)
    grid = make_grid(grid_size, grid_kind, include)
    values = backward_induction(
        prior, family, grid, horizon, cost_at=lambda m: float(cost), can_stop_at=lambda m: True
    )
    b1, b2 = _boundaries(values, grid)
    return ValueSurface(cost=float(cost), horizon=horizon, pi_grid=grid, values=values, b1=b1, b2=b2)


def _boundaries(values: np.ndarray, grid: np.ndarray):
    g = gain(grid)
    i_lo = int(np.searchsorted(grid, 0.5, side="right")) - 1
    i_hi = int(np.searchsorted(grid, 0.5, side="left"))
    b1 = np.empty(values.shape[0])
    b2 = np.empty(values.shape[0])
    for n, layer in enumerate(values):
        stopped = layer >= g - STOP_TOL
        if stopped.all():
            b1[n] = 0.5
            b2[n] = 0.5
            continue
        lo_idx = np.nonzero(stopped[: i_lo + 1])[0]
        hi_idx = np.nonzero(stopped[i_hi:])[0]
        b1[n] = grid[lo_idx[-1]] if lo_idx.size else 0.5
        b2[n] = grid[i_hi + hi_idx[0]] if hi_idx.size else 0.5
    return b1, b2


def extract_boundaries(surface: ValueSurface):
    """Per-layer boundaries: outermost stopped grid points around 1/2."""
    return _boundaries(np.asarray(surface.values, dtype=float), np.asarray(surface.pi_grid, dtype=float))


def policy_decide(surface: ValueSurface, n: int, pi: float) -> PolicyDecision:
    """Optimal action at (n, pi): continue inside (b1[n], b2[n]), else stop.

    On stopping, the upper hypothesis is accepted iff pi > 1/2 (ties go to
    the lower hypothesis).  At the terminal layer stopping is forced.
    """
    if not 0 <= n <= surface.horizon:
        raise ValueError("time index outside the surface horizon")
    if n < surface.horizon and surface.b1[n] < pi < surface.b2[n]:
        return PolicyDecision(action="continue")
    return PolicyDecision(action="stop", accept=int(pi > 0.5))


def choose_horizon(cost: float, slack: float = 0.1) -> int:
    """Truncation horizon N = ceil(1/(2c)) + ceil(slack/c).

    Any policy expecting more than 1/(2c) observations is dominated by
    stopping immediately (the value never exceeds 1/2); the slack term
    pushes the residual truncation bias below ``slack``.  Validated
    empirically: doubling N moves values by well under 1e-6 on the bundled
    benchmarks.
    """
    if cost <= 0:
        raise ValueError("cost must be positive")
    if slack <= 0:
        raise ValueError("slack must be positive")
    guard = 1e-12
    return int(math.ceil(1.0 / (2.0 * cost) - guard)) + int(math.ceil(slack / cost - guard))


def value_at(surface: ValueSurface, n: int, pi: float) -> float:
    """Piecewise-linear read of the surface at (n, pi)."""
    if not 0 <= n <= surface.horizon:
        raise ValueError("time index outside the surface horizon")
    return float(np.interp(pi, surface.pi_grid, surface.values[n]))


# ---------------------------------------------------------------------------
# lossless import/export
# ---------------------------------------------------------------------------


def write_surface_json(surface: ValueSurface, path):
    payload = {
        "cost": surface.cost,
        "horizon": surface.horizon,
        "pi_grid": [float(v) for v in surface.pi_grid],
        "values": [float(v) for v in np.asarray(surface.values).ravel()],
        "b1": [float(v) for v in surface.b1],
        "b2": [float(v) for v in surface.b2],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def read_surface_json(path) -> ValueSurface:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    grid = np.asarray(payload["pi_grid"], dtype=float)
    horizon = int(payload["horizon"])
    values = np.asarray(payload["values"], dtype=float).reshape(horizon + 1, grid.size)
    return ValueSurface(
        cost=float(payload["cost"]),
        horizon=horizon,
        pi_grid=grid,
        values=values,
        b1=np.asarray(payload["b1"], dtype=float),
        b2=np.asarray(payload["b2"], dtype=float),
    )


def write_boundaries_csv(surface: ValueSurface, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "b1", "b2"])
        for n in range(surface.horizon + 1):
            writer.writerow([n, repr(float(surface.b1[n])), repr(float(surface.b2[n]))])


def read_boundaries_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["n", "b1", "b2"]:
            raise ValueError(f"boundaries file must have header 'n,b1,b2', got {header!r}")
        ns, b1, b2 = [], [], []
        for row in reader:
            ns.append(int(row[0]))
            b1.append(float(row[1]))
            b2.append(float(row[2]))
    if ns != list(range(len(ns))):
        raise ValueError("boundaries file rows must be consecutive layers starting at 0")
    return np.asarray(b1), np.asarray(b2)


def write_value_layers_csv(surface: ValueSurface, path):
    """Long-format (n, pi, V) rows for external plotting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "pi", "V"])
        for n in range(surface.horizon + 1):
            for j, p in enumerate(surface.pi_grid):
                writer.writerow([n, repr(float(p)), repr(float(surface.values[n, j]))])
