"""Dynamics of f(z) = z^d + c: Green potential, external rays, fixed points.

External rays are continued from the far field toward the Julia set by
dyadic descent of the Green potential with Newton correction against the
target Boettcher position. The potential of every accepted sample is the
exact descent level, so sample potentials are strictly decreasing by
construction and can be re-audited with `green_potential`.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .angles import ExternalAngle, angle_cycles_of_period, fixed_angles
from .errors import PreconditionError, RayTraceError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class UnicriticalMap:
    """z -> z^d + c with the single critical point at 0."""

    degree: int
    c: complex

    def __post_init__(self) -> None:
        if self.degree < 2:
            raise PreconditionError(f"degree must be >= 2, got {self.degree}")

    def __call__(self, z: complex) -> complex:
        return z**self.degree + self.c

    def derivative(self, z: complex) -> complex:
        return self.degree * z ** (self.degree - 1)

    def iterate(self, z: complex, n: int) -> complex:
        for _ in range(n):
            z = z**self.degree + self.c
        return z

    def orbit(self, z: complex, n: int) -> list[complex]:
        out = [z]
        for _ in range(n):
            z = z**self.degree + self.c
            out.append(z)
        return out

    def escape_radius(self) -> float:
        # any |z| beyond this grows monotonically to infinity
        return max(2.0, abs(self.c) + 2.0)

    def far_field_radius(self) -> float:
        # where the Boettcher coordinate is within ~1e-12 of its product form
        return max(8.0, 2.0 * (abs(self.c) + 2.0))


def green_potential(
    fmap: UnicriticalMap,
    z: complex,
    escape_radius: float | None = None,
    max_iter: int = 1000,
) -> float | None:
    """Green (escape-rate) potential G(z), or None when the orbit stays
    bounded for `max_iter` steps.

    G = d^-n log|z_n| + sum_{k>=n} d^-(k+1) log|1 + c z_k^-d| once the orbit
    has escaped; the tail is truncated when its terms fall below 1e-18.
    """
    d, c = fmap.degree, fmap.c
    radius = fmap.escape_radius() if escape_radius is None else escape_radius
    if radius < fmap.escape_radius():
        raise PreconditionError("escape_radius below the guaranteed escape bound")
    w = complex(z)
    n = 0
    while abs(w) <= radius:
        if n >= max_iter:
            return None
        w = w**d + c
        n += 1
    g = math.log(abs(w)) / d**n
    scale = 1.0 / d ** (n + 1)
    for _ in range(200):
        corr = c / w**d
        if abs(corr) < 1e-18 or abs(w) > 1e120:
            break
        g += scale * math.log(abs(1 + corr))
        w = w**d + c
        scale /= d
    return g


def boettcher_far(fmap: UnicriticalMap, z: complex) -> complex:
    """Boettcher coordinate B(z) for |z| above the far-field radius,
    by the convergent product B(z) = z * prod (1 + c/z_k^d)^(d^-(k+1))."""
    d, c = fmap.degree, fmap.c
    if abs(z) < 0.99 * fmap.far_field_radius():
        raise PreconditionError("boettcher_far called below the far-field radius")
    w = z
    acc = 0j
    scale = 1.0 / d
    for _ in range(80):
        t = c / w**d
        if abs(t) >= 0.5:
            raise PreconditionError("far-field product not in its convergence regime")
        acc += scale * cmath.log(1 + t)
        if abs(t) * scale < 1e-19 or abs(w) > 1e120:
            break
        w = w**d + c
        scale /= d
    return z * cmath.exp(acc)


def boettcher_inverse_far(fmap: UnicriticalMap, w: complex) -> complex:
    """Inverse Boettcher coordinate for |w| above the far-field radius."""
    if abs(w) < 0.99 * fmap.far_field_radius():
        raise PreconditionError("boettcher_inverse_far needs |w| in the far field")
    z = w
    for _ in range(60):
        b = boettcher_far(fmap, z)
        z_new = z * (w / b)
        if abs(z_new - z) <= 1e-14 * abs(z):
            return z_new
        z = z_new
    raise RayTraceError("far-field inversion did not converge")


def _iterate_with_derivative(fmap: UnicriticalMap, z: complex, n: int) -> tuple[complex, complex]:
    d, c = fmap.degree, fmap.c
    dz = 1.0 + 0j
    for _ in range(n):
        if abs(z) > 1e80 or abs(dz) > 1e200:
            raise RayTraceError("iterate escaped the representable range")
        dz *= d * z ** (d - 1)
        z = z**d + c
    return z, dz


def _ray_target(fmap: UnicriticalMap, potential: float, angle: Fraction) -> tuple[int, complex]:
    """Number of iterates n and far-field point zeta with G(zeta) = potential * d^n
    on the ray of angle d^n * angle."""
    d = fmap.degree
    # rim margin keeps the field inversion clear of its own distortion
    tau_lo = math.log(fmap.far_field_radius()) + 0.25
    n = 0
    tau = potential
    while tau < tau_lo:
        tau *= d
        n += 1
    theta_up = (angle * d**n) % 1  # exact, no float angle drift
    w = cmath.exp(complex(tau, TWO_PI * float(theta_up)))
    return n, boettcher_inverse_far(fmap, w)


def ray_point(
    fmap: UnicriticalMap,
    potential: float,
    angle: Fraction,
    seed: complex | None = None,
    newton_cap: int = 24,
    tol: float = 1e-13,
) -> tuple[complex, int]:
    """Point at the given Green potential on the external ray of `angle`.

    Solved as f^n(z) = zeta by Newton from `seed`; returns (point, iterations).
    Raises RayTraceError when Newton fails within the cap.
    """
    if potential <= 0:
        raise PreconditionError("potential must be positive")
    n, zeta = _ray_target(fmap, potential, angle)
    if n == 0:
        return zeta, 0
    if seed is None:
        raise RayTraceError("ray_point below the far field requires a seed")
    z = seed
    for it in range(1, newton_cap + 1):
        val, der = _iterate_with_derivative(fmap, z, n)
        if der == 0:
            raise RayTraceError("Newton hit a critical orbit")
        step = (val - zeta) / der
        z = z - step
        if abs(step) <= tol * max(1.0, abs(z)):
            # the error after this step is O(step^2), well inside tol
            return z, it
    raise RayTraceError(f"Newton did not converge at potential {potential:g}")


@dataclass
class StepControl:
    """Continuation policy for external rays.

    resolution bounds the spatial spacing of consecutive samples; the
    potential step halves whenever Newton needs more than newton_budget
    iterations or the spatial bound is violated.
    """

    resolution: float = 0.02
    newton_budget: int = 5
    landing_window: int = 20
    landing_tol: float = 1e-7
    min_step_exponent: float = 2.0**-16


@dataclass
class RayPolyline:
    """Sampled external ray: samples are (potential, point) with strictly
    decreasing potentials; landing_point is None when the trace reached its
    potential floor without tail convergence (status "floor") or could not
    continue at any permitted step size (status "stalled")."""

    angle: ExternalAngle
    samples: list[tuple[float, complex]]
    landing_point: complex | None
    status: str = "landed"

    def points(self) -> np.ndarray:
        pts = [z for (_, z) in self.samples]
        if self.landing_point is not None:
            pts.append(self.landing_point)
        return np.array(pts, dtype=complex)

    def to_json(self) -> dict:
        return {
            "angle": str(self.angle),
            "samples": [[t, z.real, z.imag] for (t, z) in self.samples],
            "landing": None
            if self.landing_point is None
            else [self.landing_point.real, self.landing_point.imag],
            "status": self.status,
        }


def trace_ray(
    fmap: UnicriticalMap,
    angle: ExternalAngle,
    from_potential: float = 1.0,
    to_potential: float = 1e-24,
    control: StepControl | None = None,
) -> RayPolyline:
    """Trace the external ray of `angle` from one potential level down to
    another, declaring a landing point when `landing_window` consecutive
    samples agree with their mean to within `landing_tol`."""
    if control is None:
        control = StepControl()
    if not (0 < to_potential < from_potential):
        raise PreconditionError("need 0 < to_potential < from_potential")
    frac = angle.value
    tau_lo = math.log(fmap.far_field_radius()) + 0.25
    t = max(from_potential, tau_lo)
    z, _ = ray_point(fmap, t, frac, seed=None)
    t_prev, z_prev = None, None

    samples: list[tuple[float, complex]] = []
    if t <= from_potential * (1 + 1e-12):
        samples.append((t, z))
    step = 1.0  # current descent exponent: next potential is t * 2^-step
    landing: complex | None = None
    tail_mode = False
    guard = 0
    while t > to_potential * (1 + 1e-12):
        guard += 1
        if guard > 200000:
            raise RayTraceError("ray trace exceeded its stage budget")
        if tail_mode:
            # gentle descent once the tail is plainly convergent, so the
            # landing window can tighten even for weak repelling multipliers
            step = min(step, 0.125)
        t_next = max(t * 2.0**-step, to_potential)
        # never skip over the recording threshold
        if t > from_potential and t_next < from_potential:
            t_next = from_potential
        seed = z
        if z_prev is not None and t_prev is not None:
            # linear extrapolation in log-potential sharpens the Newton seed
            ratio = math.log(t_next / t) / math.log(t / t_prev)
            seed = z + (z - z_prev) * ratio
        try:
            z_next, iters = ray_point(fmap, t_next, frac, seed=seed, tol=1e-12)
            ok = abs(z_next - z) <= control.resolution or t > from_potential
        except RayTraceError:
            z_next, iters, ok = z, control.newton_budget + 1, False
        if not ok or iters > control.newton_budget:
            step /= 2.0
            if step < control.min_step_exponent:
                # cannot continue at any permitted step; report how far we got
                return RayPolyline(
                    angle=angle, samples=samples, landing_point=None,
                    status="stalled",
                )
            continue
        t_prev, z_prev = t, z
        t, z = t_next, z_next
        step = min(1.0, step * 2.0)
        if t <= from_potential * (1 + 1e-12):
            samples.append((t, z))
            w = control.landing_window
            if len(samples) >= w:
                tail = np.array([p for (_, p) in samples[-w:]])
                mean = tail.mean()
                dev = float(np.max(np.abs(tail - mean)))
                if dev < control.landing_tol:
                    landing = complex(mean)
                    break
                tail_mode = dev < 2000.0 * control.landing_tol
    status = "landed" if landing is not None else "floor"
    return RayPolyline(angle=angle, samples=samples, landing_point=landing, status=status)


def equipotential_points(
    fmap: UnicriticalMap,
    level: float,
    angles: list[Fraction],
    seed: complex | None = None,
) -> list[complex]:
    """Points on the equipotential curve G = level at the given angles,
    continued sequentially so each point seeds its neighbor."""
    out: list[complex] = []
    z = seed
    for a in angles:
        z, _ = ray_point(fmap, level, a, seed=z)
        out.append(z)
    return out


@dataclass
class FixedPointData:
    """alpha/beta fixed point classification plus the cycle of external
    angles landing at alpha."""

    alpha: complex
    betas: list[complex]
    cycle: tuple[ExternalAngle, ...]
    cycle_landings: list[complex]
    rotation: Fraction

    @property
    def q(self) -> int:
        return len(self.cycle)


def _fixed_points(fmap: UnicriticalMap) -> np.ndarray:
    d = fmap.degree
    coeffs = np.zeros(d + 1, dtype=complex)
    coeffs[0] = 1.0
    coeffs[-2] += -1.0
    coeffs[-1] = fmap.c
    return np.roots(coeffs)


def _rotation_number(cycle: tuple[ExternalAngle, ...]) -> Fraction:
    """Combinatorial rotation number of the d-tupling on the cycle: the
    orbit advances by a constant step p in the circular order."""
    q = len(cycle)
    order = sorted(range(q), key=lambda i: cycle[i].value)
    pos = {i: r for r, i in enumerate(order)}
    p = (pos[1] - pos[0]) % q
    for i in range(q):
        if (pos[(i + 1) % q] - pos[i]) % q != p:
            raise PreconditionError("angle cycle is not combinatorially rotating")
    return Fraction(p, q)


def find_alpha_cycle(
    fmap: UnicriticalMap,
    period_bound: int = 8,
    match_tol: float = 1e-5,
    control: StepControl | None = None,
) -> FixedPointData:
    """Classify the fixed points of f and find the cycle of external angles
    landing at the dividing fixed point alpha.

    The d-1 fixed rays k/(d-1) are traced to identify the non-dividing
    beta fixed points; alpha is the remaining fixed point. Candidate cycles
    of each period q <= period_bound are traced until one lands at alpha.
    """
    d = fmap.degree
    roots = _fixed_points(fmap)
    mults = np.abs(d * roots ** (d - 1))
    if np.any(mults <= 1.0 + 1e-9):
        raise PreconditionError(
            "a fixed point is attracting, parabolic or indifferent; "
            "the puzzle construction requires all fixed points repelling"
        )
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) < 1e-8:
                raise PreconditionError("fixed points are not simple")

    taken: set[int] = set()
    betas: list[complex] = []
    for theta in fixed_angles(d):
        ray = trace_ray(fmap, theta, control=control)
        if ray.landing_point is None:
            raise RayTraceError(f"fixed ray {theta} did not land")
        dist = np.abs(roots - ray.landing_point)
        k = int(np.argmin(dist))
        if dist[k] > match_tol:
            raise RayTraceError(
                f"fixed ray {theta} landed {dist[k]:.2e} away from every fixed point"
            )
        if k in taken:
            raise RayTraceError("two fixed rays landed at the same fixed point")
        taken.add(k)
        betas.append(complex(roots[k]))
    rest = [i for i in range(len(roots)) if i not in taken]
    if len(rest) != 1:
        raise PreconditionError("could not isolate the dividing fixed point")
    alpha = complex(roots[rest[0]])

    for q in range(2, period_bound + 1):
        for cycle in angle_cycles_of_period(d, q):
            ray = trace_ray(fmap, cycle[0], control=control)
            if ray.landing_point is None or abs(ray.landing_point - alpha) > match_tol:
                continue
            landings = [ray.landing_point]
            good = True
            for theta in cycle[1:]:
                r2 = trace_ray(fmap, theta, control=control)
                if r2.landing_point is None or abs(r2.landing_point - alpha) > match_tol:
                    good = False
                    break
                landings.append(r2.landing_point)
            if good:
                return FixedPointData(
                    alpha=alpha,
                    betas=betas,
                    cycle=cycle,
                    cycle_landings=landings,
                    rotation=_rotation_number(cycle),
                )
    raise RayTraceError(
        f"no angle cycle of period <= {period_bound} lands at alpha; "
        "raise the period bound"
    )
