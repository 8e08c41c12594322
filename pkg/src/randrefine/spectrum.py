"""Spectral solver: build the solution transform from the regime series.

The integrable solutions f of

    f(x) = sum_i p_i |l_i| f(l_i x - m_i) + g(x)

are characterized through their transforms.  With the n-step path average

    T_n[h](x) = E[ exp(i x sum_{k<=n} M_k/(L_1...L_k)) * hhat(x/(L_1...L_n)) ]

the transform of any solution satisfies, for every depth N,

    fhat(x) = T_N[f](x) + sum_{n<N} T_n[g](x) + ghat(x),

and letting N grow yields one closed formula per regime:

* contractive (E log|L| < 0):   fhat = sum_n T_n[g] + ghat, and fhat(0) = 0;
* expansive, shifts all zero:   fhat = fhat(0) + sum_n T_n[g] + ghat;
* expansive, nonzero shifts:    fhat = fhat(0) * E exp(i x Z) + sum_n T_n[g]
  + ghat, where Z is the forward-series limit.

``fhat(0)`` is the free mass parameter in the expansive cases.  The
critical regime (E log|L| = 0) has non-unique solution families and the
solver refuses it; the verifier still works there.

Exact evaluation of T_n walks atom paths.  Identical scales make the path
average factor exactly (the phase increments are then independent), which
is what keeps deep series affordable; otherwise states are merged and the
walk is capped.  A Monte Carlo strategy mirrors every exact computation for
cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._compat import trapezoid
from .closedform import ClosedFormFn, zero_mean_check
from .errors import (
    CriticalRegime,
    EnumerationTooLarge,
    ImaginaryResidueTooLarge,
    MassMustBeZero,
    NonzeroMeanInhomogeneity,
    RegimeMismatch,
    SpectralLeakage,
)
from .gridfn import GridFn
from .measure import RandomAffineMeasure, Regime, RegimeReport, classify_regime
from .perpetuity import ENUMERATION_CAP, estimate_charfn, generator


@dataclass(frozen=True)
class ExactStrategy:
    state_cap: int = ENUMERATION_CAP


@dataclass(frozen=True)
class MonteCarloStrategy:
    sample_count: int = 100_000
    seed: int = 0


Strategy = Union[ExactStrategy, MonteCarloStrategy]

EXACT = ExactStrategy()

#: Consecutive sub-threshold terms required before the series is declared done.
_CONSECUTIVE_SMALL = 3


@dataclass(frozen=True)
class TruncationReport:
    terms_used: int
    last_term_max_abs: float
    converged: bool


@dataclass(frozen=True)
class Spectrum:
    """Complex transform samples on a frequency grid plus the mass parameter."""

    x_grid: np.ndarray
    values: np.ndarray
    mass: float
    truncation: TruncationReport

    def value_at(self, x: float) -> complex:
        idx = int(np.argmin(np.abs(self.x_grid - x)))
        if abs(self.x_grid[idx] - x) > 1e-12 * max(1.0, abs(x)):
            raise ValueError(f"{x} is not a grid frequency")
        return complex(self.values[idx])


def symmetric_grid(x_max: float, points: int) -> np.ndarray:
    """Uniform grid on [-x_max, x_max] with exact mirror pairs and a 0 node."""
    if points % 2 == 0:
        raise ValueError("points must be odd so the grid contains 0")
    half = np.linspace(0.0, x_max, points // 2 + 1)
    return np.concatenate([-half[:0:-1], half])


# ---------------------------------------------------------------------------
# path-average terms
# ---------------------------------------------------------------------------

def _deterministic_scale(measure: RandomAffineMeasure) -> float | None:
    ls = measure.scales
    return float(ls[0]) if np.all(ls == ls[0]) else None


def _shift_charfn(measure: RandomAffineMeasure, u: np.ndarray) -> np.ndarray:
    """E exp(i u M) for the atom shifts, elementwise in u."""
    out = np.zeros(np.shape(u), dtype=complex)
    for _, m, p in measure.atoms:
        out += p * np.exp(1j * m * u)
    return out


def _state_walk(measure, cap: int):
    """Yield the exact joint law of (scale product, phase sum) per depth.

    States with identical float pairs are merged, so measures whose products
    collide (dyadic scales in particular) stay far below the raw atom**n
    count.  Raises EnumerationTooLarge beyond ``cap`` states.
    """
    ls, ms, ps = measure.scales, measure.shifts, measure.weights
    prods = np.ones(1)
    sums = np.zeros(1)
    weights = np.ones(1)
    depth = 0
    while True:
        depth += 1
        denom = prods[:, None] * ls[None, :]
        sums = (sums[:, None] + ms[None, :] / denom).ravel()
        prods = denom.ravel()
        weights = (weights[:, None] * ps[None, :]).ravel()
        key = prods + 1j * sums
        uniq, index, inverse = np.unique(key, return_index=True, return_inverse=True)
        if len(uniq) < len(key):
            prods = prods[index]
            sums = sums[index]
            weights = np.bincount(inverse, weights=weights)
        if len(prods) > cap:
            raise EnumerationTooLarge(
                f"{len(prods)} path states at depth {depth} exceed the cap {cap}"
            )
        yield prods, sums, weights


def _phase_states(measure, n: int, cap: int):
    walk = _state_walk(measure, cap)
    for _ in range(n - 1):
        next(walk)
    return next(walk)


def _term_from_states(h: ClosedFormFn, xs, prods, sums, weights) -> np.ndarray:
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    out = np.zeros(len(xs), dtype=complex)
    block = max(1, 4_000_000 // max(len(xs), 1))
    for start in range(0, len(prods), block):
        p = prods[start:start + block]
        s = sums[start:start + block]
        w = weights[start:start + block]
        phases = np.exp(1j * np.multiply.outer(xs, s))
        hh = h.fourier(np.multiply.outer(xs, 1.0 / p))
        out += (phases * hh) @ w
    return out


def series_term(
    measure: RandomAffineMeasure,
    h: ClosedFormFn,
    x: float,
    n: int,
    strategy: Strategy = EXACT,
) -> complex:
    """The depth-n path average T_n[h](x).

    Exact strategy: closed product when all scales coincide, otherwise a
    merged state walk.  Monte Carlo strategy: plain path sampling.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(strategy, MonteCarloStrategy):
        value, _ = series_term_mc(measure, h, x, n, strategy.sample_count, strategy.seed)
        return value
    l0 = _deterministic_scale(measure)
    if l0 is not None:
        xs = np.atleast_1d(float(x))
        c = np.ones(1, dtype=complex)
        pw = 1.0
        for _ in range(n):
            pw *= l0
            c = c * _shift_charfn(measure, xs / pw)
        return complex((c * h.fourier(xs / pw))[0])
    prods, sums, weights = _phase_states(measure, n, strategy.state_cap)
    return complex(_term_from_states(h, [x], prods, sums, weights)[0])


def series_term_mc(
    measure: RandomAffineMeasure,
    h: ClosedFormFn,
    x: float,
    n: int,
    sample_count: int,
    seed: int = 0,
) -> tuple[complex, float]:
    """Monte Carlo estimate of T_n[h](x) with its standard error."""
    rng = generator(seed)
    ls, ms = measure.scales, measure.shifts
    idx = rng.choice(len(ls), size=(sample_count, n), p=measure.weights)
    prods = np.cumprod(ls[idx], axis=1)
    sums = (ms[idx] / prods).sum(axis=1)
    vals = np.exp(1j * x * sums) * h.fourier(x / prods[:, -1])
    est = complex(vals.mean())
    stderr = math.sqrt((vals.real.var() + vals.imag.var()) / sample_count)
    return est, stderr


# ---------------------------------------------------------------------------
# series summation
# ---------------------------------------------------------------------------

def _series_grid_deterministic(measure, g, xs, eps, n_max, l0):
    total = np.zeros(len(xs), dtype=complex)
    cumulative = np.ones(len(xs), dtype=complex)
    pw = 1.0
    small_run = 0
    terms_used = 0
    last_max = math.inf
    for n in range(1, n_max + 1):
        pw *= l0
        cumulative *= _shift_charfn(measure, xs / pw)
        term = cumulative * g.fourier(xs / pw)
        total += term
        terms_used = n
        last_max = float(np.max(np.abs(term))) if len(term) else 0.0
        small_run = small_run + 1 if last_max < eps else 0
        if small_run >= _CONSECUTIVE_SMALL:
            return total, TruncationReport(terms_used, last_max, True)
    return total, TruncationReport(terms_used, last_max, False)


def _series_grid_states(measure, g, xs, eps, n_max, cap):
    walk = _state_walk(measure, cap)
    total = np.zeros(len(xs), dtype=complex)
    small_run = 0
    terms_used = 0
    last_max = math.inf
    for n in range(1, n_max + 1):
        prods, sums, weights = next(walk)
        term = _term_from_states(g, xs, prods, sums, weights)
        total += term
        terms_used = n
        last_max = float(np.max(np.abs(term))) if len(term) else 0.0
        small_run = small_run + 1 if last_max < eps else 0
        if small_run >= _CONSECUTIVE_SMALL:
            return total, TruncationReport(terms_used, last_max, True)
    return total, TruncationReport(terms_used, last_max, False)


def _series_grid_mc(measure, g, xs, eps, n_max, sample_count, seed):
    rng = generator(seed)
    ls, ms = measure.scales, measure.shifts
    terms = np.zeros((n_max, len(xs)), dtype=complex)
    rows = max(1, 2_000_000 // max(n_max, 1))
    done = 0
    while done < sample_count:
        take = min(rows, sample_count - done)
        idx = rng.choice(len(ls), size=(take, n_max), p=measure.weights)
        prods = np.cumprod(ls[idx], axis=1)
        sums = np.cumsum(ms[idx] / prods, axis=1)
        xblock = max(1, 2_000_000 // take)
        for n in range(n_max):
            for start in range(0, len(xs), xblock):
                xb = xs[start:start + xblock]
                phases = np.exp(1j * np.multiply.outer(xb, sums[:, n]))
                hh = g.fourier(np.multiply.outer(xb, 1.0 / prods[:, n]))
                terms[n, start:start + len(xb)] += (phases * hh).sum(axis=1)
        done += take
    terms /= sample_count

    total = np.zeros(len(xs), dtype=complex)
    small_run = 0
    terms_used = 0
    last_max = math.inf
    for n in range(n_max):
        total += terms[n]
        terms_used = n + 1
        last_max = float(np.max(np.abs(terms[n])))
        small_run = small_run + 1 if last_max < eps else 0
        if small_run >= _CONSECUTIVE_SMALL:
            return total, TruncationReport(terms_used, last_max, True)
    return total, TruncationReport(terms_used, last_max, False)


def sum_series_grid(
    measure: RandomAffineMeasure,
    g: ClosedFormFn,
    x_grid,
    strategy: Strategy = EXACT,
    eps: float = 1e-10,
    n_max: int = 60,
) -> tuple[np.ndarray, TruncationReport]:
    """Sum the path-average series over a frequency grid.

    Terms are added until the grid maximum of |T_n[g]| stays below ``eps``
    for three consecutive depths (robust against oscillatory terms), or
    ``n_max`` is reached, which is flagged as non-convergence in the report
    rather than raised.
    """
    xs = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if isinstance(strategy, MonteCarloStrategy):
        return _series_grid_mc(
            measure, g, xs, eps, n_max, strategy.sample_count, strategy.seed
        )
    l0 = _deterministic_scale(measure)
    if l0 is not None:
        return _series_grid_deterministic(measure, g, xs, eps, n_max, l0)
    return _series_grid_states(measure, g, xs, eps, n_max, strategy.state_cap)


def sum_series(
    measure: RandomAffineMeasure,
    g: ClosedFormFn,
    x: float,
    strategy: Strategy = EXACT,
    eps: float = 1e-10,
    n_max: int = 60,
) -> tuple[complex, TruncationReport]:
    """Scalar convenience wrapper around :func:`sum_series_grid`."""
    report = classify_regime(measure)
    if report.regime is Regime.CRITICAL:
        raise CriticalRegime("series summation is undefined in the critical regime")
    values, trunc = sum_series_grid(measure, g, [x], strategy, eps, n_max)
    return complex(values[0]), trunc


# ---------------------------------------------------------------------------
# forward-limit characteristic function, exact flavour
# ---------------------------------------------------------------------------

def forward_charfn_product(
    measure: RandomAffineMeasure, x_grid, tol: float = 1e-15, max_factors: int = 2000
) -> np.ndarray:
    """E exp(i x Z) for the forward-series limit, when all scales coincide.

    Identical scales make the series increments independent, so the
    characteristic function is the product of the shift characteristic
    function along the geometric argument sequence; the tail of the product
    is cut once its deviation from 1 is below ``tol``.
    """
    l0 = _deterministic_scale(measure)
    if l0 is None or abs(l0) <= 1.0:
        raise EnumerationTooLarge(
            "exact forward limit needs a single scale of modulus > 1; "
            "use the Monte Carlo strategy instead"
        )
    xs = np.atleast_1d(np.asarray(x_grid, dtype=float))
    out = np.ones(len(xs), dtype=complex)
    mmax = float(np.max(np.abs(measure.shifts)))
    if mmax == 0.0:
        return out
    xmax = float(np.max(np.abs(xs))) if len(xs) else 0.0
    pw = 1.0
    for _ in range(max_factors):
        pw *= l0
        out *= _shift_charfn(measure, xs / pw)
        if xmax * mmax / (abs(pw) * (abs(l0) - 1.0)) < tol:
            break
    return out


# ---------------------------------------------------------------------------
# the solver
# ---------------------------------------------------------------------------

def solve_spectrum(
    measure: RandomAffineMeasure,
    g: ClosedFormFn,
    mass: float,
    x_grid,
    strategy: Strategy = EXACT,
    *,
    eps: float = 1e-10,
    n_max: int = 60,
    charfn_depth: int | None = None,
    allow_unverified: bool = False,
    regime_report: RegimeReport | None = None,
) -> Spectrum:
    """Assemble the solution transform on ``x_grid`` for the given regime.

    ``mass`` is the free value of the transform at 0.  It must be 0 in the
    contractive regime (enforced); in the expansive regime with nonzero
    shifts the forward-limit factor comes from the exact product when the
    scale is deterministic (exact strategy) or from Monte Carlo estimation.

    Expansive measures with mixed scales lack a finite sufficient check for
    the forward series; they are refused unless ``allow_unverified`` is set.
    """
    report = regime_report or classify_regime(measure)
    if not zero_mean_check(g):
        raise NonzeroMeanInhomogeneity(
            f"g integrates to {g.mass()!r}; a solvable forcing term needs mass 0"
        )
    if report.regime is Regime.CRITICAL:
        raise CriticalRegime(
            "zero log-scale mean admits whole families of solutions; "
            "the solver refuses, the verifier still applies"
        )

    xs = np.atleast_1d(np.asarray(x_grid, dtype=float))
    series, trunc = sum_series_grid(measure, g, xs, strategy, eps, n_max)
    ghat = g.fourier(xs)

    if report.regime is Regime.LOG_CONTRACTIVE:
        if mass != 0.0:
            raise MassMustBeZero(
                "contractive regime forces the solution mass to 0"
            )
        values = series + ghat
    elif report.shift_degenerate:
        values = mass + series + ghat
    else:
        if not report.forward_series_condition and not allow_unverified:
            raise RegimeMismatch(
                "expansive regime with a common fixed point: the forward "
                "series is not known to converge; pass allow_unverified=True"
            )
        if isinstance(strategy, MonteCarloStrategy):
            est = estimate_charfn(
                measure, xs, strategy.sample_count,
                depth=charfn_depth, rng_seed=strategy.seed,
            )
            factor = est.charfn_values
        else:
            factor = forward_charfn_product(measure, xs)
        values = mass * factor + series + ghat

    return Spectrum(x_grid=xs, values=values, mass=mass, truncation=trunc)


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------

def _check_inversion_grids(xs: np.ndarray, ts: np.ndarray):
    if len(xs) < 2 or len(ts) < 2:
        raise ValueError("inversion needs at least two nodes per grid")
    span = xs[-1] - xs[0]
    if abs(xs[0] + xs[-1]) > 1e-9 * span:
        raise ValueError("frequency grid must be symmetric about 0")
    dx = span / (len(xs) - 1)
    if np.max(np.abs(np.diff(xs) - dx)) > 1e-9 * dx:
        raise ValueError("frequency grid must be uniform")
    dt = (ts[-1] - ts[0]) / (len(ts) - 1)
    if dt <= 0 or np.max(np.abs(np.diff(ts) - dt)) > 1e-9 * dt:
        raise ValueError("output grid must be uniform ascending")
    return dx, dt


def _inverse_direct(values_w, xs, ts):
    out = np.empty(len(ts), dtype=complex)
    block = max(1, 4_000_000 // max(len(xs), 1))
    for start in range(0, len(ts), block):
        tb = ts[start:start + block]
        out[start:start + len(tb)] = np.exp(-1j * np.multiply.outer(tb, xs)) @ values_w
    return out


def _inverse_recurrence(values_w, xs, ts, dt):
    # Same trapezoid sum, with the phase vector advanced by one twiddle
    # multiply per output node instead of a fresh exponential per matrix
    # entry.  Drift is one rounding per step, ~len(ts)*eps in the phase.
    phases = np.exp(-1j * ts[0] * xs)
    twiddle = np.exp(-1j * dt * xs)
    out = np.empty(len(ts), dtype=complex)
    for j in range(len(ts)):
        out[j] = phases @ values_w
        phases *= twiddle
    return out


def invert_spectrum(
    spec: Spectrum,
    t_grid,
    *,
    check_leakage: bool = True,
    method: str = "auto",
) -> GridFn:
    """Trapezoid inverse transform ``f(t) = (1/2 pi) int exp(-i t x) fhat``.

    The frequency grid must be symmetric and uniform and, unless
    ``check_leakage`` is disabled, carry edge magnitudes below 1e-3 of the
    peak so the cut tail is negligible.  The imaginary part left over after
    inversion must stay below 1e-3 of the recovered L1 scale.

    ``method`` is ``"direct"``, ``"recurrence"`` or ``"auto"``: both
    evaluate the same quadrature, the recurrence advancing the phase vector
    by one twiddle multiply per node (picked automatically for large grids;
    the two agree to well under 1e-9).
    """
    xs = np.asarray(spec.x_grid, dtype=float)
    vals = np.asarray(spec.values, dtype=complex)
    ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
    dx, dt = _check_inversion_grids(xs, ts)

    peak = float(np.max(np.abs(vals)))
    if peak == 0.0:
        return GridFn(ts[0], ts[-1], dt, np.zeros(len(ts)), 0.0, 0.0)
    edge = max(abs(vals[0]), abs(vals[-1]))
    if check_leakage and edge >= 1e-3 * peak:
        raise SpectralLeakage(
            f"edge magnitude {edge:.3e} vs peak {peak:.3e}: widen the frequency window"
        )

    weights = np.full(len(xs), dx)
    weights[0] = weights[-1] = 0.5 * dx
    values_w = vals * weights / (2.0 * math.pi)

    if method not in ("auto", "direct", "recurrence"):
        raise ValueError("method must be auto, direct or recurrence")
    use_recurrence = method == "recurrence" or (
        method == "auto" and len(xs) * len(ts) > 2 ** 21
    )
    raw = (
        _inverse_recurrence(values_w, xs, ts, dt)
        if use_recurrence
        else _inverse_direct(values_w, xs, ts)
    )

    real = raw.real
    residue = float(np.max(np.abs(raw.imag)))
    l1_scale = float(trapezoid(np.abs(real), dx=dt))
    if l1_scale > 0.0 and residue >= 1e-3 * l1_scale:
        raise ImaginaryResidueTooLarge(
            f"imaginary residue {residue:.3e} vs L1 scale {l1_scale:.3e}"
        )
    return GridFn(ts[0], ts[-1], dt, real, 0.0, 0.0)
