"""Component-tracked preimages of Jordan disks.

The engine lifts disk boundaries through inverse branches of f by
predictor-corrector continuation (the hot loop runs in the kernel backend),
counts local degrees by boundary-traversal closure, and audits them against
the critical points enclosed by the lifted boundary (Riemann-Hurwitz).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import LiftError
from .geometry import DEFAULT_BOUNDARY_POINTS, JordanDisk, winding_number
from .polynomials import Polynomial, critical_points, evaluate, preimages

DEDUPE_RADIUS = 1e-9
DEFAULT_BRANCH_CAP = 100_000
# adjacent boundary points vs component diameter; a uniform circle needs
# m ~ pi/0.04 ~ 80 samples to meet this, so the default resolutions pass
# without resampling and only pinched components trigger refinement
MAX_GAP_FRACTION = 0.04
MAX_RESOLUTION = 4096


@lru_cache(maxsize=64)
def cached_critical_points(poly: Polynomial) -> tuple:
    return tuple(critical_points(poly))


@dataclass(frozen=True)
class PullbackStep:
    component: JordanDisk
    local_degree: int
    contains_critical: tuple  # (point, order) pairs strictly inside


@dataclass(frozen=True)
class PullbackChain:
    target: JordanDisk
    steps: tuple  # PullbackStep; steps[k] is the depth-(k+1) component

    @property
    def depth(self) -> int:
        return len(self.steps)

    @property
    def total_degree(self) -> int:
        deg = 1
        for s in self.steps:
            deg *= s.local_degree
        return deg

    @property
    def final(self) -> PullbackStep:
        return self.steps[-1]

    def to_json(self, critical_values=None) -> dict:
        out = {"depth": self.depth, "total_degree": self.total_degree,
               "steps": []}
        for s in self.steps:
            entry = {
                "degree": s.local_degree,
                "diameter": s.component.diameter,
                "basepoint": [s.component.basepoint.real,
                              s.component.basepoint.imag],
            }
            if critical_values is not None:
                entry["dist_to_critical_values"] = dist_to_points(
                    s.component, critical_values)
            out["steps"].append(entry)
        return out


@dataclass(frozen=True)
class EnumerationResult:
    chains: tuple  # all components for every depth <= requested, BFS order
    complete: bool

    def at_depth(self, n: int) -> list:
        return [ch for ch in self.chains if ch.depth == n]


def dist_to_points(disk: JordanDisk, points) -> float:
    """Distance from the (closed) component to a point set.

    0 for points enclosed by the boundary, otherwise the min over boundary
    samples.
    """
    pts = np.asarray(points, dtype=complex)
    if len(pts) == 0:
        return math.inf
    d = np.abs(disk.boundary[:, None] - pts[None, :])
    best = float(d.min())
    if best > 0:
        # a point can only be inside if some boundary sample is within diam
        for k in np.nonzero(d.min(axis=0) <= disk.diameter)[0]:
            if winding_number(disk.boundary, complex(pts[k])) != 0:
                return 0.0
    return best


def _lift_open(poly: Polynomial, w0: complex, w1: complex, z0: complex,
               samples: int = 48) -> complex:
    """Lift the straight segment w0 -> w1 starting at z0 (f(z0)=w0).

    If z0 sits on a critical point the continuation cannot start there
    (Newton has no derivative to work with), so the first step is taken with
    the local model f(z) ~ f(c) + a (z-c)^ell; any local branch works because
    all sheets through c belong to the same component.  On failure the
    segment is retried along two slightly bowed arcs, which steps around
    isolated critical values sitting on the straight path.
    """
    t0 = 0.0
    for c, ell in cached_critical_points(poly):
        if abs(z0 - c) < 1e-8 * (1.0 + abs(z0)):
            a = _local_coefficient(poly, c, ell)
            t0 = 1.0 / samples
            ws = w0 + (w1 - w0) * t0
            z0 = c + ((ws - poly(c)) / a) ** (1.0 / ell)
            break
    for bow in (0.0, 0.15, -0.15):
        t = np.linspace(t0, 1.0, samples)
        seg = w0 + (w1 - w0) * t
        if bow:
            seg = seg + 1j * (w1 - w0) * bow * np.sin(np.pi * t)
        lifted, code, idx = _kernels.lift_path(poly.coeff_array, seg, z0,
                                               np.inf)
        if code == _kernels.LIFT_OK:
            return complex(lifted[-1])
    raise LiftError("segment lift failed (path may cross a critical value)",
                    index=idx)


def _lift_closed(poly: Polynomial, targets: np.ndarray, z_start: complex,
                 max_traversals: int):
    """Lift a closed target loop until the lifted curve closes up.

    Returns (polyline, traversals); traversals is the local degree of f on
    the enclosed component over the target disk.
    """
    pieces = []
    z = complex(z_start)
    loop = np.append(targets, targets[0])
    for trav in range(1, max_traversals + 1):
        lifted, code, idx = _kernels.lift_path(poly.coeff_array, loop, z,
                                               np.inf)
        if code != _kernels.LIFT_OK:
            raise LiftError(
                f"boundary lift rejected at arc {idx} (traversal {trav})",
                index=idx)
        pieces.append(lifted[:-1])
        z = complex(lifted[-1])
        curve = np.concatenate(pieces)
        ref = complex(curve[0])  # Newton-polished start, not the raw seed
        spread = float(np.abs(curve - curve.mean()).max()) or 1.0
        if abs(z - ref) < 1e-3 * spread + 1e-13:
            return curve, trav
    raise LiftError("boundary lift failed to close up")


def _enclosed_critical(boundary: np.ndarray, crit) -> tuple:
    inside = []
    for c, ell in crit:
        if winding_number(boundary, c) != 0:
            inside.append((c, ell))
    return tuple(inside)


def tilde_ball(poly: Polynomial, c: complex, delta: float,
               m: int = DEFAULT_BOUNDARY_POINTS, _retried: bool = False
               ) -> JordanDisk:
    """B~(c, delta): the component of f^-1(B(f(c), delta)) containing c.

    The boundary is obtained by lifting the circle about f(c) through the
    degree-l_c covering at c; the lift must close after exactly as many
    traversals as the enclosed critical mass dictates.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    c = complex(c)
    crit = cached_critical_points(poly)
    orders = [ell for p, ell in crit if abs(p - c) < 1e-7]
    if not orders:
        raise ValueError("c is not a critical point of f")
    ell = orders[0]
    fc = poly(c)
    for cv in {poly(p) for p, _ in crit}:
        if cv != fc and abs(cv - fc) < delta * (1 + 1e-3):
            warnings.warn("another critical value lies in/near the target "
                          "ball; the component may not be a disk")
    # local model f(z) ~ f(c) + a (z-c)^ell seeds the first boundary point
    a = _local_coefficient(poly, c, ell)
    z_guess = c + (delta / abs(a)) ** (1.0 / ell) * np.exp(-1j * np.angle(a) / ell)
    t = np.arange(m) / m
    circle = fc + delta * np.exp(2j * np.pi * t)
    d = poly.degree
    try:
        curve, trav = _lift_closed(poly, circle, z_guess, d)
    except LiftError:
        if _retried:
            raise
        return tilde_ball(poly, c, delta * (1 - 1e-6), m, _retried=True)
    disk = JordanDisk(curve, c)
    enclosed = _enclosed_critical(curve, crit)
    expect = 1 + sum(e - 1 for _, e in enclosed)
    if trav != expect:
        raise LiftError(
            f"traversal count {trav} disagrees with enclosed critical mass "
            f"{expect}")
    return disk


def _local_coefficient(poly: Polynomial, c: complex, ell: int) -> complex:
    coeffs = poly.coeff_array
    for _ in range(ell):
        coeffs = coeffs[1:] * np.arange(1, len(coeffs))
    val = _kernels.horner2(coeffs, c)[0]
    return val / math.factorial(ell)


def pull_back_step(poly: Polynomial, disk: JordanDisk, seed: complex,
                   resolution: int | None = None) -> PullbackStep:
    """The component of f^-1(disk) containing seed, with its local degree.

    The disk basepoint is lifted first (seed-side preimage becomes the new
    basepoint), then the boundary polyline is lifted by branch-following and
    closed over as many traversals as the local degree requires.  The degree
    is cross-audited against the critical points enclosed (Riemann-Hurwitz);
    disagreement raises, because it means a branch switch slipped through.
    """
    seed = complex(seed)
    fs, _ = evaluate(poly, seed)
    if not disk.contains(fs):
        raise LiftError("f(seed) is not inside the disk")
    crit = cached_critical_points(poly)
    cvs = np.array([poly(p) for p, _ in crit])
    scale = max(1.0, float(np.abs(disk.boundary).max()))
    if len(cvs) and np.min(np.abs(disk.boundary[:, None] - cvs[None, :])) \
            < 1e-12 * scale:
        raise LiftError("disk boundary passes through a critical value")

    b = disk.basepoint
    z_base = _lift_open(poly, fs, b, seed)
    targets = disk.boundary
    res = resolution or len(targets)
    while True:
        z_start = _lift_open(poly, b, targets[0], z_base)
        curve, trav = _lift_closed(poly, targets, z_start, poly.degree)
        comp = JordanDisk(curve, z_base)
        gap = float(np.abs(np.diff(np.append(curve, curve[0]))).max())
        if gap <= MAX_GAP_FRACTION * comp.diameter or res >= MAX_RESOLUTION:
            break
        res = min(2 * res, MAX_RESOLUTION)
        targets = disk.resample(res).boundary
    enclosed = _enclosed_critical(curve, crit)
    expect = 1 + sum(e - 1 for _, e in enclosed)
    if trav != expect:
        raise LiftError(
            f"local degree {trav} disagrees with Riemann-Hurwitz count "
            f"{expect}")
    return PullbackStep(component=comp, local_degree=trav,
                        contains_critical=enclosed)


def pull_back_chain(poly: Polynomial, disk: JordanDisk, backward_orbit,
                    resolution: int | None = None) -> PullbackChain:
    """Pull a disk back along a prescribed backward orbit.

    backward_orbit[k+1] must be a preimage of backward_orbit[k] (residual
    checked) and backward_orbit[0] must lie in the disk.
    """
    pts = [complex(z) for z in backward_orbit]
    if not disk.contains(pts[0]):
        raise LiftError("backward_orbit[0] is not inside the disk")
    for k in range(len(pts) - 1):
        fv, _ = evaluate(poly, pts[k + 1])
        if abs(fv - pts[k]) > 1e-9 * max(1.0, abs(pts[k])):
            raise LiftError(f"backward orbit residual too large at index {k+1}")
    steps = []
    current = disk
    for seed in pts[1:]:
        step = pull_back_step(poly, current, seed, resolution=resolution)
        steps.append(step)
        current = step.component
    return PullbackChain(target=disk, steps=tuple(steps))


def enumerate_pullbacks(poly: Polynomial, disk: JordanDisk, depth: int,
                        branch_cap: int = DEFAULT_BRANCH_CAP,
                        resolution: int | None = None) -> EnumerationResult:
    """Breadth-first enumeration of every component of f^-n(disk), n <= depth.

    Components are seeded from all d preimages of the parent basepoint;
    seeds landing in an already-built sibling are skipped (that is the
    dedupe of connected critical pullbacks).  If the component count would
    exceed branch_cap the result is returned partial with complete=False.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    chains: list[PullbackChain] = []
    frontier: list[PullbackChain] = [PullbackChain(target=disk, steps=())]
    complete = True
    for _ in range(depth):
        next_frontier = []
        for chain in frontier:
            parent = chain.steps[-1].component if chain.steps else disk
            built: list[JordanDisk] = []
            for seed in preimages(poly, parent.basepoint):
                if any(winding_number(comp.boundary, seed) != 0
                       for comp in built):
                    continue
                step = pull_back_step(poly, parent, seed,
                                      resolution=resolution)
                built.append(step.component)
                new_chain = PullbackChain(target=disk,
                                          steps=chain.steps + (step,))
                next_frontier.append(new_chain)
                chains.append(new_chain)
                if len(chains) >= branch_cap:
                    complete = False
                    return EnumerationResult(chains=tuple(chains),
                                             complete=complete)
        frontier = next_frontier
    return EnumerationResult(chains=tuple(chains), complete=complete)
