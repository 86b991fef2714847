"""Closed-form NFD envelopes for a two-bin network with slow cruisers.

The network average density K relates to the bin densities through
k_1 + k_2 = 2K (equal bin lengths), so K is the mean of the two bins,
not their sum. All envelope formulas are expressed in K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import greenshields_speed


@dataclass(frozen=True)
class BinParams:
    v_f: float  # free-flow speed, km/hr
    v_c: float  # desired cruising speed, km/hr
    k_j: float  # jam density, veh/km

    def __post_init__(self):
        if not (0 < self.v_c <= self.v_f):
            raise ValueError("need 0 < v_c <= v_f")
        if self.k_j <= 0:
            raise ValueError("need k_j > 0")


def critical_density(params: BinParams) -> float:
    """Density below which the desired cruising speed is attainable."""
    return (params.v_f - params.v_c) * params.k_j / params.v_f


def two_bin_speed(k_1: float, k_2: float, params: BinParams, cruising_in_bin2: bool = False) -> float:
    """Space-mean speed of the two-bin system for a given density split.

    With cruising, every vehicle in bin 2 moves at min(v_c, Greenshields),
    the worst case for that bin.
    """
    if not (0 <= k_1 <= params.k_j and 0 <= k_2 <= params.k_j):
        raise ValueError("bin densities must lie in [0, k_j]")
    if k_1 + k_2 == 0:
        return params.v_f
    v_1 = greenshields_speed(k_1, params.v_f, params.k_j)
    v_2 = greenshields_speed(k_2, params.v_f, params.k_j)
    if cruising_in_bin2:
        v_2 = min(params.v_c, v_2)
    return (k_1 * v_1 + k_2 * v_2) / (k_1 + k_2)


def _check_K(K: float, params: BinParams) -> None:
    if not (0 <= K <= params.k_j):
        raise ValueError("K must lie in [0, k_j]")


def envelope_no_cruising(K: float, params: BinParams) -> tuple[float, float]:
    """Upper/lower space-mean speed over all feasible splits, no cruisers.

    The lower envelope hits zero already at K = k_j/2: one bin can gridlock
    while the other is empty.
    """
    _check_K(K, params)
    v_f, k_j = params.v_f, params.k_j
    v_max = v_f - v_f * K / k_j
    if K <= k_j / 2:
        v_min = v_f - 2 * v_f * K / k_j
    else:
        v_min = v_f * (3 - 2 * K / k_j - k_j / K)
    return v_max, v_min


def envelope_with_cruising(K: float, params: BinParams) -> tuple[float, float]:
    """Envelopes when all bin-2 vehicles cruise at v_c (worst case for bin 2)."""
    _check_K(K, params)
    v_f, v_c, k_j = params.v_f, params.v_c, params.k_j
    k_c = critical_density(params)

    if K <= k_c / 4:
        v_max = v_f - 2 * v_f * K / k_j
    elif K <= 3 * k_c / 4:
        v_max = v_c + (v_f - v_c) * k_c / (8 * K)
    elif K <= k_c:
        v_max = v_c + (v_f - v_c) * (2 - k_c / K) * (1 - K / k_c)
    else:
        v_max = v_f - v_f * K / k_j

    if K <= k_c / 2:
        v_min = v_c
    elif K <= k_j / 2:
        v_min = v_f - 2 * v_f * K / k_j
    elif K <= (k_c + k_j) / 2:
        v_min = v_c - v_c * k_j / (2 * K)
    else:
        v_min = v_f * (3 - 2 * K / k_j - k_j / K)
    return v_max, v_min


def brute_force_envelope(
    K: float, params: BinParams, cruising: bool, grid_step: float = 0.01
) -> tuple[float, float]:
    """Independent oracle: enumerate splits k_1 + k_2 = 2K on a density grid.

    At K=0 the single (0, 0) split is degenerate; the extrema are taken as the
    K->0 limit of the worst/best loading, so the oracle stays comparable with
    the piecewise envelopes there.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be > 0")
    _check_K(K, params)
    v_f, v_c, k_j = params.v_f, params.v_c, params.k_j
    lo = max(0.0, 2 * K - k_j)
    hi = min(k_j, 2 * K)
    if hi < lo:
        raise ValueError(f"no feasible split for K={K}")
    n = int(np.floor((hi - lo) / grid_step + 1e-9))
    k1 = lo + grid_step * np.arange(n + 1)
    if k1[-1] < hi - 1e-12:
        k1 = np.append(k1, hi)
    k2 = 2 * K - k1
    if K == 0:
        return v_f, (v_c if cruising else v_f)
    v1 = np.maximum(0.0, v_f * (1.0 - k1 / k_j))
    v2 = np.maximum(0.0, v_f * (1.0 - k2 / k_j))
    if cruising:
        v2 = np.minimum(v_c, v2)
    V = (k1 * v1 + k2 * v2) / (2 * K)
    return float(V.max()), float(V.min())


def unstable_area(params: BinParams, cruising: bool = True, n_grid: int = 2001) -> float:
    """Area between the envelopes over K in [0, k_j] (km/hr * veh/km)."""
    Ks = np.linspace(0.0, params.k_j, n_grid)
    env = envelope_with_cruising if cruising else envelope_no_cruising
    gap = np.array([vmax - vmin for vmax, vmin in (env(K, params) for K in Ks)])
    return float(np.trapezoid(gap, Ks))


def envelope_sweep(
    params: BinParams,
    K_grid,
    cruising: bool = True,
    brute_step: float | None = None,
):
    """Formula envelopes over a K grid, optionally with the brute-force check.

    Returns a dict of arrays: K, v_max, v_min and, when ``brute_step`` is
    given, v_max_brute / v_min_brute.
    """
    K_grid = np.asarray(K_grid, dtype=float)
    env = envelope_with_cruising if cruising else envelope_no_cruising
    vmax = np.empty_like(K_grid)
    vmin = np.empty_like(K_grid)
    for i, K in enumerate(K_grid):
        vmax[i], vmin[i] = env(float(K), params)
    out = {"K": K_grid, "v_max": vmax, "v_min": vmin}
    if brute_step is not None:
        bmax = np.empty_like(K_grid)
        bmin = np.empty_like(K_grid)
        for i, K in enumerate(K_grid):
            bmax[i], bmin[i] = brute_force_envelope(float(K), params, cruising, brute_step)
        out["v_max_brute"] = bmax
        out["v_min_brute"] = bmin
    return out
