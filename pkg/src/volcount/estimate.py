"""Monte-Carlo volume estimation: ellipsoid rounding + multiphase sampling.

The pipeline per polytope is:

1. round_polytope: shrink a shallow-cut ellipsoid around the body until its
   scaled-down copy fits inside, then map the body into a coordinate frame
   where it contains the unit ball and sits inside a ball of radius 2n.
2. estimate_volume: walk hit-and-run chains through a telescoping sequence of
   ball intersections, reusing stored points across phases, and multiply the
   per-phase ratio estimates into a volume figure.

Randomness comes from a counter-based Philox generator so that a (seed,
stream) pair fully determines every draw, independent of scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BackendError, NumericalError, UnboundedError, check_deadline
from .lp import FLATNESS_TOL, LpStatus, chebyshev_center, lp_optimize
from .model import Polytope

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Ellipsoid:
    """Ellipsoid { x : (x-center)^T shape^{-1} (x-center) <= 1 }."""

    center: np.ndarray
    shape: np.ndarray


def shallow_cut_update(e: Ellipsoid, a: np.ndarray, cut_level: float) -> Ellipsoid:
    """One shallow-cut step: the smallest ellipsoid containing the part of
    ``e`` on the side ``a . x <= a . center + cut_level * sqrt(a^T E a)``.

    ``cut_level`` is the fraction beta in [0, 1/n); beta = 0 is the classic
    central cut.  Requires dimension >= 2.
    """
    center, shape = e.center, e.shape
    n = center.shape[0]
    if n < 2:
        raise ValueError("shallow-cut update needs dimension >= 2")
    ea = shape @ a
    denom = float(a @ ea)
    if denom <= 0:
        raise NumericalError("ellipsoid lost positive definiteness")
    g = ea / math.sqrt(denom)
    beta = cut_level
    gamma = (1.0 - n * beta) / (n + 1.0)
    new_center = center - gamma * g
    factor = (n * n * (1.0 - beta * beta)) / (n * n - 1.0)
    new_shape = factor * (shape - (2.0 * gamma / (1.0 - beta)) * np.outer(g, g))
    new_shape = 0.5 * (new_shape + new_shape.T)
    return Ellipsoid(new_center, new_shape)


@dataclass(frozen=True)
class RoundedPolytope:
    """A polytope mapped into sandwich position: unit ball inside, ball of
    radius ``r = 2n`` outside.  ``log_scale`` restores original volume:
    vol(original) = vol(this) * exp(log_scale)."""

    a: np.ndarray
    b: np.ndarray
    n: int
    r: float
    log_scale: float
    row_norms: np.ndarray = field(init=False)
    a_t: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "row_norms", np.linalg.norm(self.a, axis=1))
        object.__setattr__(self, "a_t", np.ascontiguousarray(self.a.T))

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(self.a @ x <= self.b + tol))


_MAX_CUT_ITERS = 200_000
_DET_CHECK_EVERY = 16


def round_polytope(p: Polytope, deadline: Optional[float] = None) -> Optional[RoundedPolytope]:
    """Sandwich a full-dimensional polytope between the unit ball and the
    ball of radius 2n.

    Returns None when the body has (numerically) no volume: empty, flat, or
    squeezed below the flatness threshold.  Raises UnboundedError when the
    body is unbounded, so callers must bound variables (word-length box)
    before estimating.
    """
    if p.contradictory or p.n == 0:
        return None
    a, b = p.inequality_arrays()
    n = p.n

    # Bounding box; detects emptiness and unboundedness up front.
    lo = np.empty(n)
    hi = np.empty(n)
    for j in range(n):
        c = np.zeros(n)
        c[j] = 1.0
        res_hi = lp_optimize(p, c, "max")
        if res_hi.status is LpStatus.INFEASIBLE:
            return None
        res_lo = lp_optimize(p, c, "min")
        if res_hi.status is LpStatus.UNBOUNDED or res_lo.status is LpStatus.UNBOUNDED:
            raise UnboundedError(f"solution space unbounded in x{j + 1}")
        hi[j] = res_hi.value
        lo[j] = res_lo.value

    _, rho = chebyshev_center(p)
    if rho <= FLATNESS_TOL:
        return None

    center = (lo + hi) / 2.0
    radius = float(np.linalg.norm(hi - lo)) / 2.0
    if radius <= 0.0:
        return None
    shape = np.eye(n) * radius * radius
    ell = Ellipsoid(center, shape)

    beta = 1.0 / (2.0 * n)
    log_det_floor = 2.0 * n * math.log(FLATNESS_TOL)
    norms2 = np.einsum("ij,ij->i", a, a)
    iters = 0
    while True:
        check_deadline(deadline)
        margins = a @ ell.center + beta * np.sqrt(
            np.maximum(np.einsum("ij,jk,ik->i", a, ell.shape, a), 0.0)
        )
        viol = margins - b
        worst = int(np.argmax(viol))
        if viol[worst] <= 1e-11 * max(1.0, float(np.sqrt(norms2[worst]))):
            break
        ell = shallow_cut_update(ell, a[worst], beta)
        iters += 1
        if iters % _DET_CHECK_EVERY == 0:
            sign, logdet = np.linalg.slogdet(ell.shape)
            if sign <= 0 or logdet < log_det_floor:
                return None
        if iters > _MAX_CUT_ITERS:
            raise NumericalError("ellipsoid rounding did not converge")

    try:
        chol = np.linalg.cholesky(ell.shape)
    except np.linalg.LinAlgError:
        sign, logdet = np.linalg.slogdet(ell.shape)
        if sign <= 0 or logdet < log_det_floor:
            return None
        raise NumericalError("rounding ellipsoid not positive definite") from None

    # Map x -> M^{-1}(x - center) with M = beta * chol; the shrunk ellipsoid
    # beta*E becomes the unit ball and the full ellipsoid the 2n-ball.
    mat = beta * chol
    a_new = a @ mat
    b_new = b - a @ ell.center
    log_scale = float(np.sum(np.log(np.diag(chol)))) + n * math.log(beta)

    # Exact unit-ball containment: scale the image up a hair if needed.
    new_norms = np.linalg.norm(a_new, axis=1)
    ratios = b_new / new_norms
    worst_ratio = float(ratios.min())
    if worst_ratio <= 0.0:
        return None
    if worst_ratio < 1.0:
        s = 1.0 / worst_ratio
        b_new = b_new * s
        log_scale -= n * math.log(s)
    return RoundedPolytope(a_new, b_new, n, 2.0 * n, log_scale)


def unit_ball_log_volume(n: int) -> float:
    """log of the volume of the n-dimensional unit ball."""
    return (n / 2.0) * math.log(math.pi) - math.lgamma(n / 2.0 + 1.0)


def unit_ball_volume(n: int) -> float:
    return math.exp(unit_ball_log_volume(n))


def phase_count(q: RoundedPolytope) -> int:
    """Number of telescoping phases: ceil(n * log2(r))."""
    return max(1, math.ceil(q.n * math.log2(q.r)))


def phase_index(x: np.ndarray, n: int, num_phases: int) -> int:
    """Smallest phase whose ball B(0, 2^(i/n)) contains x, capped at the
    outermost phase index."""
    norm = float(np.linalg.norm(x))
    if norm <= 1.0:
        return 0
    idx = math.ceil(n * math.log2(norm))
    return min(max(idx, 0), num_phases)


@dataclass
class PhaseLedger:
    """Bookkeeping of one estimation run: how many stored points fall in each
    phase shell, how many fresh walk points each phase generated, and the
    per-phase ratio estimates (innermost first)."""

    num_phases: int
    bucket_counts: list[int]
    fresh_per_phase: list[int]
    ratios: list[float]

    @property
    def fresh_total(self) -> int:
        return sum(self.fresh_per_phase)


@dataclass(frozen=True)
class EstimateResult:
    volume: float
    ledger: PhaseLedger
    seed: int
    stream: int


def _philox(seed: int, stream: int) -> np.random.Generator:
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def hit_and_run_step(
    x: np.ndarray,
    q: RoundedPolytope,
    radius: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One coordinate-direction hit-and-run step inside ``q`` intersected
    with the ball of the given radius.

    Draws the coordinate first, then the position on the chord; a chord
    shorter than 1e-14 returns ``x`` unchanged without consuming the second
    draw.  The caller guarantees ``x`` lies in the intersection.
    """
    slack = q.b - q.a @ x
    sq_norm = float(x @ x)
    k, t = _chord_step(x, q, radius, rng, slack, sq_norm)
    if k < 0:
        return x
    out = x.copy()
    out[k] += t
    return out


def _chord_step(
    x: np.ndarray,
    q: RoundedPolytope,
    radius: float,
    rng: np.random.Generator,
    slack: np.ndarray,
    sq_norm: float,
) -> tuple[int, float]:
    """Shared kernel: pick coordinate k, intersect the line with all
    halfspaces and the ball, draw uniformly on the chord.  Returns (-1, 0)
    for a degenerate chord (no second draw consumed)."""
    n = q.n
    k = int(rng.integers(n))
    col = q.a_t[k]
    t_lo = -math.inf
    t_hi = math.inf
    pos = col > 1e-300
    negm = col < -1e-300
    if pos.any():
        t_hi = float(np.min(slack[pos] / col[pos]))
    if negm.any():
        t_lo = float(np.max(slack[negm] / col[negm]))
    xk = float(x[k])
    disc = xk * xk - sq_norm + radius * radius
    if disc <= 0.0:
        disc = 0.0
    root = math.sqrt(disc)
    t_lo = max(t_lo, -xk - root)
    t_hi = min(t_hi, -xk + root)
    if not (t_hi - t_lo >= 1e-14):
        return -1, 0.0
    u = float(rng.random())
    return k, t_lo + u * (t_hi - t_lo)


def estimate_volume(
    q: RoundedPolytope,
    samples_per_phase: int,
    seed: int,
    stream: int = 0,
    burnin: int = 0,
    deadline: Optional[float] = None,
) -> EstimateResult:
    """Multiphase Monte-Carlo volume of a rounded polytope.

    Phases run outermost to innermost.  Phase i estimates
    vol(K_{i+1}) / vol(K_i) with K_i = B(0, 2^(i/n)) intersect q, reusing
    points stored by outer phases when they land inside the current ball and
    topping up with fresh hit-and-run points until ``samples_per_phase`` are
    available.  The product of the per-phase ratios times the unit-ball
    volume, rescaled by ``q.log_scale``, is the volume estimate.
    """
    if samples_per_phase < 1:
        raise ValueError("need at least one sample per phase")
    n = q.n
    num_phases = phase_count(q)
    rng = _philox(seed, stream)

    cap = 4 * samples_per_phase
    pts = np.empty((cap, n))
    pt_idx = np.empty(cap, dtype=np.int32)
    stored = 0
    bucket_counts = [0] * (num_phases + 1)
    fresh_per_phase = [0] * num_phases
    ratios = [0.0] * num_phases

    chain = np.zeros(n)
    chain_slack = q.b.copy()
    chain_sq = 0.0

    for i in range(num_phases - 1, -1, -1):
        check_deadline(deadline)
        radius = 2.0 ** ((i + 1) / n)
        radius_sq = radius * radius
        if chain_sq > radius_sq * (1.0 + 1e-12):
            hits = np.nonzero(pt_idx[:stored] <= i + 1)[0]
            chain = pts[hits[-1]].copy() if hits.size else np.zeros(n)
            chain_slack = q.b - q.a @ chain
            chain_sq = float(chain @ chain)

        steps_wanted = burnin + max(0, samples_per_phase - sum(bucket_counts[: i + 2]))
        fresh_here = steps_wanted - burnin
        if stored + fresh_here > cap:
            cap = max(2 * cap, stored + fresh_here)
            pts = np.vstack([pts[:stored], np.empty((cap - stored, n))])
            pt_idx = np.concatenate([pt_idx[:stored], np.empty(cap - stored, dtype=np.int32)])

        for step in range(steps_wanted):
            if step % 1024 == 0:
                check_deadline(deadline)
                chain_slack = q.b - q.a @ chain
                if __debug__:
                    assert float(chain_slack.min(initial=0.0)) >= -1e-7
            k, t = _chord_step(chain, q, radius, rng, chain_slack, chain_sq)
            if k >= 0:
                chain[k] += t
                chain_slack -= t * q.a_t[k]
            chain_sq = float(chain @ chain)
            if chain_sq > radius_sq * (1.0 + 1e-9):
                raise NumericalError("walk escaped its phase ball")
            if step < burnin:
                continue
            idx = min(phase_index(chain, n, num_phases), i + 1)
            pts[stored] = chain
            pt_idx[stored] = idx
            stored += 1
            bucket_counts[idx] += 1
            fresh_per_phase[i] += 1

        available = sum(bucket_counts[: i + 2])
        inside = sum(bucket_counts[: i + 1])
        if inside == 0:
            raise BackendError("estimation degenerate: no samples inside the phase ball")
        ratios[i] = available / inside

    log_vol = unit_ball_log_volume(n) + q.log_scale + sum(math.log(r) for r in ratios)
    ledger = PhaseLedger(num_phases, bucket_counts, fresh_per_phase, ratios)
    return EstimateResult(math.exp(log_vol), ledger, seed, stream)

