"""The billiard map, its symmetries and reversors, and the dual map.

Phase points are (q, p) with q an impact point on the ellipsoid and p the
unit velocity directed outward at q.  The map and all involutions are
closed-form:

    f(q, p)  = (q', p'),  p' = p + nu(q, p) Dq,   q' = q + mu(q, p') p'
    r~(q, p) = (q, -p - nu(q, p) Dq)              (velocity reversal)
    r^(q, p) = (q + mu(q, p) p, -p)               (previous impact)
    g(q, p)  = (C p', -C^{-1} q),  C = D^{-1/2}   (positions <-> velocities)

with nu = -2<Dq,p>/<Dq,Dq> and mu = -2<Dq,v>/<Dv,v>.  Composing r~ or r^
with a coordinate reflection sigma gives the 2^{n+2} reversors; g squares
to -f and exchanges tilde fixed sets with hat fixed sets of the opposite
reflection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import DegenerateImpact
from .geometry import Ellipsoid

_TANGENT_TOL = 1e-13


@dataclass(frozen=True)
class PhasePoint:
    """Impact point q on the ellipsoid plus outward unit velocity p."""

    q: tuple[float, ...]
    p: tuple[float, ...]

    @classmethod
    def make(cls, q, p, ell: Ellipsoid | None = None, *, renormalize: bool = False) -> "PhasePoint":
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        if renormalize:
            if ell is None:
                raise ValueError("renormalize requires the ellipsoid")
            q = ell.project(q)
            p = p / np.linalg.norm(p)
        return cls(tuple(q), tuple(p))

    @property
    def q_arr(self) -> np.ndarray:
        return np.array(self.q)

    @property
    def p_arr(self) -> np.ndarray:
        return np.array(self.p)


def phase_point_residuals(m: PhasePoint, ell: Ellipsoid) -> tuple[float, float, float]:
    """(surface residual, |p|-1, <Dq,p>); the last must be positive."""
    q, p = m.q_arr, m.p_arr
    return (abs(ell.constraint(q)),
            abs(float(np.linalg.norm(p)) - 1.0),
            float(ell.normal(q) @ p))


def is_valid_phase_point(m: PhasePoint, ell: Ellipsoid,
                         q_tol: float = 1e-12, p_tol: float = 1e-14) -> bool:
    rq, rp, outward = phase_point_residuals(m, ell)
    return rq <= q_tol and rp <= p_tol and outward > 0.0


@dataclass(frozen=True)
class Reflection:
    """Diagonal reflection sigma = diag(signs), signs in {-1, +1}."""

    signs: tuple[int, ...]

    def __post_init__(self):
        signs = tuple(1 if s > 0 else -1 for s in self.signs)
        object.__setattr__(self, "signs", signs)

    @classmethod
    def identity(cls, dim: int) -> "Reflection":
        return cls((1,) * dim)

    @classmethod
    def central(cls, dim: int) -> "Reflection":
        return cls((-1,) * dim)

    @classmethod
    def flipping(cls, flipped, dim: int) -> "Reflection":
        return cls(tuple(-1 if j in set(flipped) else 1 for j in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.signs)

    @property
    def flipped(self) -> tuple[int, ...]:
        """0-based indices of the coordinates the reflection negates."""
        return tuple(j for j, s in enumerate(self.signs) if s < 0)

    @property
    def arr(self) -> np.ndarray:
        return np.array(self.signs, dtype=float)

    def __neg__(self) -> "Reflection":
        return Reflection(tuple(-s for s in self.signs))

    def apply(self, v) -> np.ndarray:
        return self.arr * np.asarray(v, dtype=float)


def all_reflections(dim: int) -> list[Reflection]:
    return [Reflection(s) for s in product((1, -1), repeat=dim)]


_2D_NAMES = {(): "", (1,): "x", (0,): "y", (0, 1): "xy"}


@dataclass(frozen=True)
class Reversor:
    """One of the involutions factoring the billiard map.

    family "tilde" reverses the velocity at the same impact point, then
    reflects by sigma; family "hat" jumps to the previous impact, negates
    the velocity, then reflects.  hat(sigma) = f o tilde(sigma).
    """

    family: str
    sigma: Reflection

    def __post_init__(self):
        if self.family not in ("tilde", "hat"):
            raise ValueError(f"unknown reversor family {self.family!r}")

    @property
    def is_empty_set(self) -> bool:
        """True for the two reversors whose fixed set is empty."""
        flips = len(self.sigma.flipped)
        if self.family == "tilde":
            return flips == self.sigma.dim
        return flips == 0

    @property
    def label(self) -> str:
        """Display name, e.g. 'R_2', 'f.R_13' (2D: 'R_x', 'f.R_xy')."""
        flipped = self.sigma.flipped
        if self.sigma.dim == 2:
            base = "R" + ("_" + _2D_NAMES[flipped] if flipped else "")
        else:
            base = "R" + ("_" + "".join(str(j + 1) for j in flipped) if flipped else "")
        return base if self.family == "tilde" else "f." + base

    @property
    def key(self) -> str:
        """Compact ASCII identifier, e.g. 'R2', 'fR13', 'Rx', 'fRxy'."""
        flipped = self.sigma.flipped
        if self.sigma.dim == 2:
            base = "R" + _2D_NAMES[flipped]
        else:
            base = "R" + "".join(str(j + 1) for j in flipped)
        return base if self.family == "tilde" else "f" + base


def reversor_from_key(key: str, dim: int) -> Reversor:
    for fam in ("tilde", "hat"):
        for sigma in all_reflections(dim):
            r = Reversor(fam, sigma)
            if r.key == key:
                return r
    raise ValueError(f"unknown reversor key {key!r} for dim {dim}")


def all_reversors(dim: int) -> list[Reversor]:
    """All 2^{dim+1} reversors, the two with empty fixed sets included."""
    out = []
    for fam in ("tilde", "hat"):
        out.extend(Reversor(fam, s) for s in all_reflections(dim))
    return out


def nonempty_reversors(dim: int) -> list[Reversor]:
    return [r for r in all_reversors(dim) if not r.is_empty_set]


# --------------------------------------------------------------------------
# Maps (array-level kernels plus PhasePoint wrappers)
# --------------------------------------------------------------------------

def _step_arrays(q: np.ndarray, p: np.ndarray, a: np.ndarray,
                 project: bool = True) -> tuple[np.ndarray, np.ndarray]:
    g = q / a
    gp = float(g @ p)
    if abs(gp) < _TANGENT_TOL:
        raise DegenerateImpact(f"tangential impact at {q}")
    nu = -2.0 * gp / float(g @ g)
    p1 = p + nu * g
    mu = -2.0 * float(g @ p1) / float(p1 @ (p1 / a))
    q1 = q + mu * p1
    if project:
        q1 = _project(q1, a)
        p1 = p1 / np.linalg.norm(p1)
    return q1, p1


def _project(q: np.ndarray, a: np.ndarray) -> np.ndarray:
    g = q / a
    c2 = float(g @ (g / a))
    c1 = 2.0 * float(g @ g)
    c0 = float(q @ g) - 1.0
    disc = c1 * c1 - 4.0 * c2 * c0
    t = 2.0 * c0 / (c1 + math.sqrt(max(disc, 0.0)))
    return q - t * g


def billiard_map(m: PhasePoint, ell: Ellipsoid, *, project: bool = True) -> PhasePoint:
    """One bounce: reflect the velocity, advance to the next impact."""
    q1, p1 = _step_arrays(m.q_arr, m.p_arr, ell.a, project)
    return PhasePoint(tuple(q1), tuple(p1))


def billiard_map_inverse(m: PhasePoint, ell: Ellipsoid, *, project: bool = True) -> PhasePoint:
    """Inverse bounce, computed as r~ o f o r~."""
    r = Reversor("tilde", Reflection.identity(ell.dim))
    return apply_reversor(r, billiard_map(apply_reversor(r, m, ell), ell, project=project), ell)


def apply_symmetry(s: Reflection, m: PhasePoint) -> PhasePoint:
    return PhasePoint(tuple(s.apply(m.q_arr)), tuple(s.apply(m.p_arr)))


def apply_reversor(r: Reversor, m: PhasePoint, ell: Ellipsoid) -> PhasePoint:
    q, p = m.q_arr, m.p_arr
    a = ell.a
    g = q / a
    if r.family == "tilde":
        nu = -2.0 * float(g @ p) / float(g @ g)
        q2, p2 = q, -p - nu * g
    else:
        mu = -2.0 * float(g @ p) / float(p @ (p / a))
        q2, p2 = q + mu * p, -p
    sig = r.sigma.arr
    return PhasePoint(tuple(sig * q2), tuple(sig * p2))


def dual_map(m: PhasePoint, ell: Ellipsoid) -> PhasePoint:
    """The square root of -f; exchanges the roles of positions and velocities."""
    q, p = m.q_arr, m.p_arr
    a = ell.a
    c = np.sqrt(a)
    g = q / a
    nu = -2.0 * float(g @ p) / float(g @ g)
    p1 = p + nu * g
    return PhasePoint(tuple(c * p1), tuple(-q / c))


def iterate_orbit(m: PhasePoint, ell: Ellipsoid, steps: int,
                  *, project: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Impact and velocity sequences of f^0(m), ..., f^steps(m)."""
    a = ell.a
    qs = np.empty((steps + 1, ell.dim))
    ps = np.empty((steps + 1, ell.dim))
    q, p = m.q_arr, m.p_arr
    qs[0], ps[0] = q, p
    for k in range(1, steps + 1):
        q, p = _step_arrays(q, p, a, project)
        qs[k], ps[k] = q, p
    return qs, ps
