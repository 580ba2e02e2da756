"""Class catalogs, minimal-orbit construction, and full verification.

A class of symmetric periodic trajectories is a caustic type plus an
unordered pair of distinct cuboid vertexes.  That gives 2 x 6 = 12
classes in 2D and 4 x 28 = 112 in 3D; in general 2^{2n} (2^{n+1} - 1).

Construction follows the five-step recipe: pick the class's minimal
winding numbers, invert the frequency map inside the right component,
take the closed-form seed of one of the class's vertexes, iterate the
billiard map one period, and verify everything (closure, caustic
preservation, symmetry-set memberships and the two-point law, vertex
visits, exact winding counts, cuboid confinement).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .dynamics import PhasePoint, Reversor, iterate_orbit, nonempty_reversors
from .errors import (
    FeasibilityError,
    NoSolutionInComponent,
    UnsupportedDimension,
    VerificationFailed,
)
from .geometry import CausticParams, Ellipsoid, cartesian_to_elliptic, caustic_params_of_line, cuboid
from .spectral import (
    WindingNumbers,
    count_turning_events,
    even_required,
    invert_frequency,
    parity_violations,
    sample_elliptic_path,
)
from .symmetry import (
    CuboidVertex,
    all_vertexes,
    reversor_of_vertex,
    seed_point_at_vertex,
    symmetry_set_contains,
)

CTYPES_BY_DIM = {1: ("E", "H"), 2: ("EH1", "H1H1", "EH2", "H1H2")}

#: Ellipsoid shapes used throughout the published numeric examples.
STOCK_ELLIPSOIDS_3D = (
    Ellipsoid((0.05, 0.95, 1.0)),
    Ellipsoid((0.13, 0.8, 1.0)),
    Ellipsoid((0.13, 0.45, 1.0)),
    Ellipsoid((0.2, 0.3969, 1.0)),
    Ellipsoid((0.25, 0.49, 1.0)),
)
STOCK_ELLIPSOID_2D = Ellipsoid((0.16, 1.0))

#: Extra nearly-degenerate shapes: a few minimal winding targets fall
#: outside the frequency range of every stock shape, but flat or
#: segment-like ellipsoids stretch the reachable frequencies far enough.
ATLAS_FALLBACK_SHAPES = STOCK_ELLIPSOIDS_3D + (
    Ellipsoid((0.05, 0.2, 1.0)),
    Ellipsoid((0.1, 0.2, 1.0)),
    Ellipsoid((0.02, 0.1, 1.0)),
)


def class_count(n: int) -> int:
    """Number of classes for billiards in R^{n+1}: 2^{2n} (2^{n+1} - 1)."""
    if n < 1:
        raise UnsupportedDimension("need n >= 1")
    return 4 ** n * (2 ** (n + 1) - 1)


def kind_of_winding(w: WindingNumbers) -> tuple[str, ...]:
    return w.kind


def vertex_delta_of_kind(w: WindingNumbers) -> tuple[int, ...]:
    """Which vertex coordinates differ between the two connected vertexes.

    With some winding number odd, the vertexes differ exactly in the odd
    coordinates (half-period symmetry point); with all even, exactly in
    the twice-odd coordinates (quarter-period).  Never the zero mask.
    """
    if any(v % 2 for v in w.m):
        return tuple(v % 2 for v in w.m)
    return tuple(1 if v % 4 == 2 else 0 for v in w.m)


def _minimal_with_congruences(congruences) -> WindingNumbers:
    ms = [0] * len(congruences)
    prev = 1
    for i in reversed(range(len(congruences))):
        r, mod = congruences[i]
        v = max(2, prev + 1)
        while v % mod != r % mod:
            v += 1
        ms[i] = v
        prev = v
    return WindingNumbers(tuple(ms))


def minimal_winding_for_delta(ctype: str, delta: tuple[int, ...]) -> WindingNumbers:
    """Smallest winding numbers whose vertex delta matches, for this type."""
    if not any(delta):
        raise ValueError("vertex delta cannot be zero")
    need_even = even_required(ctype)
    candidates = []
    if all(not need_even[i] for i, d in enumerate(delta) if d):
        candidates.append(_minimal_with_congruences(
            [(1, 2) if d else (0, 2) for d in delta]))
    candidates.append(_minimal_with_congruences(
        [(2, 4) if d else (0, 4) for d in delta]))
    return min(candidates, key=lambda w: w.m)


@dataclass(frozen=True)
class SptClass:
    """Caustic type plus an unordered pair of cuboid vertexes."""

    ctype: str
    vertex_pair: tuple[CuboidVertex, CuboidVertex]

    @property
    def dim(self) -> int:
        return self.vertex_pair[0].dim

    @cached_property
    def delta(self) -> tuple[int, ...]:
        v1, v2 = self.vertex_pair
        return tuple(b1 ^ b2 for b1, b2 in zip(v1.mask, v2.mask))

    @cached_property
    def minimal_winding(self) -> WindingNumbers:
        return minimal_winding_for_delta(self.ctype, self.delta)

    @cached_property
    def reversors(self) -> tuple[tuple[Reversor, int | None], ...]:
        """(reversor, side) of each vertex; side tags H1H1 outer/inner."""
        return tuple(reversor_of_vertex(v, self.ctype) for v in self.vertex_pair)

    @cached_property
    def class_id(self) -> str:
        parts = []
        for r, side in self.reversors:
            tag = ""
            if self.ctype == "H1H1" and side is not None:
                tag = "o" if side == 1 else "i"
            parts.append(r.key + tag)
        return f"{self.ctype}:{'+'.join(sorted(parts))}"

    @cached_property
    def couple_label(self) -> str:
        """Reversor couple; H1H1 uses the outer|inner bar notation."""
        if self.ctype != "H1H1":
            return "{" + ", ".join(sorted(r.label for r, _ in self.reversors)) + "}"
        outer = sorted(r.label for r, side in self.reversors if side == 1)
        inner = sorted(r.label for r, side in self.reversors if side == 2)
        return "(" + ", ".join(outer) + " | " + ", ".join(inner) + ")"

    def compatible_winding(self, w: WindingNumbers) -> bool:
        return vertex_delta_of_kind(w) == self.delta and not parity_violations(w, self.ctype)


def enumerate_classes(n: int) -> list[SptClass]:
    """Every (caustic type, vertex pair) class; 12 for n=1, 112 for n=2."""
    if n not in CTYPES_BY_DIM:
        raise UnsupportedDimension(
            f"catalogs available for n in {sorted(CTYPES_BY_DIM)}; "
            f"class_count({n}) = {class_count(n)} still applies")
    verts = all_vertexes(n + 1)

    def mask_int(v: CuboidVertex) -> int:
        return sum(b << i for i, b in enumerate(v.mask))

    out = []
    for ctype in CTYPES_BY_DIM[n]:
        for v1, v2 in combinations(sorted(verts, key=mask_int), 2):
            out.append(SptClass(ctype, (v1, v2)))
    return out


def class_by_id(class_id: str, n: int) -> SptClass:
    for cls in enumerate_classes(n):
        if cls.class_id == class_id:
            return cls
    raise KeyError(f"unknown class id {class_id!r}")


# --------------------------------------------------------------------------
# Trajectories and verification
# --------------------------------------------------------------------------

@dataclass
class Trajectory:
    """A closed orbit with its provenance and raw data."""

    ellipsoid: Ellipsoid
    caustic: CausticParams
    winding: WindingNumbers
    impacts: np.ndarray          # (m_0 + 1, dim), last row closes the loop
    velocities: np.ndarray
    class_id: str | None = None
    branch: int = 0
    report: "VerificationReport | None" = None

    @property
    def period(self) -> int:
        return len(self.impacts) - 1

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.impacts, axis=0), axis=1)))

    @property
    def closure_residual(self) -> float:
        dq = float(np.max(np.abs(self.impacts[-1] - self.impacts[0])))
        dp = float(np.max(np.abs(self.velocities[-1] - self.velocities[0])))
        return max(dq, dp)


@dataclass
class VerificationReport:
    closure_residual: float
    caustic_deviation: float
    winding_counts: tuple[int, ...]
    winding_match: bool
    cuboid_excursion: float
    memberships: dict[str, list[int]]
    family_counts: dict[str, int]
    two_point_law_ok: bool
    doubly_symmetric: bool
    vertex_visits: list[dict]
    visited_masks: list[tuple[int, ...]]
    vertex_delta_ok: bool
    distinct_impacts: int
    event_counts: dict[str, int]
    monotone_conjecture_ok: bool
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "closure_residual": self.closure_residual,
            "caustic_deviation": self.caustic_deviation,
            "winding_counts": list(self.winding_counts),
            "winding_match": self.winding_match,
            "cuboid_excursion": self.cuboid_excursion,
            "memberships": self.memberships,
            "family_counts": self.family_counts,
            "two_point_law_ok": self.two_point_law_ok,
            "doubly_symmetric": self.doubly_symmetric,
            "vertex_visits": self.vertex_visits,
            "visited_masks": [list(m) for m in self.visited_masks],
            "vertex_delta_ok": self.vertex_delta_ok,
            "distinct_impacts": self.distinct_impacts,
            "event_counts": self.event_counts,
            "monotone_conjecture_ok": self.monotone_conjecture_ok,
            "failures": self.failures,
        }


def distinct_impact_count(impacts: np.ndarray, ell: Ellipsoid) -> int:
    """Distinct impact points of a closed sequence (first == last merged)."""
    tol = 1e-9 * math.sqrt(ell.axes[-1])
    pts: list[np.ndarray] = []
    for q in impacts[:-1]:
        if not any(np.max(np.abs(q - p)) <= tol for p in pts):
            pts.append(q)
    return len(pts)


def _match_vertex(coords, box, tol) -> tuple[int, ...] | None:
    mask = []
    for v, (lo, hi) in zip(coords, box.intervals):
        if abs(v - lo) <= tol:
            mask.append(0)
        elif abs(v - hi) <= tol:
            mask.append(1)
        else:
            return None
    return tuple(mask)


def _itemized_events(impacts, lam, ell, edge_frac=1e-6) -> dict[str, int]:
    counts = {}
    box = cuboid(lam, ell)
    a = ell.a
    lamset = set(lam.lambdas)
    impacts = impacts.copy()
    impacts[-1] = impacts[0]
    q0, q1 = impacts[:-1], impacts[1:]
    d = q1 - q0
    T = np.linalg.norm(d, axis=1)
    d = d / T[:, None]
    counts["face_0"] = len(q0)
    for v in box.breakpoints[1:]:
        if v in lamset:
            i = lam.lambdas.index(v)
            dv = a - v
            A = np.einsum("j,kj,kj->k", 1.0 / dv, d, d)
            A_abs = np.einsum("j,kj,kj->k", 1.0 / np.abs(dv), d, d)
            B = np.einsum("j,kj,kj->k", 1.0 / dv, q0, d)
            with np.errstate(divide="ignore", invalid="ignore"):
                tstar = np.where(np.abs(A) > 1e-9 * A_abs, -B / A, np.inf)
            key = f"caustic_{i + 1}"
        else:
            j = int(np.argmin(np.abs(a - v)))
            with np.errstate(divide="ignore", invalid="ignore"):
                tstar = np.where(np.abs(d[:, j]) > 1e-12, -q0[:, j] / d[:, j], np.inf)
            key = f"plane_{j + 1}"
        counts[key] = int(np.count_nonzero(
            (tstar >= -edge_frac * T) & (tstar < (1.0 - edge_frac) * T)))
    return counts


def verify_trajectory(t: Trajectory, ell: Ellipsoid | None = None, *,
                      closure_tol: float = 1e-8,
                      caustic_tol: float = 1e-9,
                      excursion_tol: float = 1e-9,
                      membership_tol: float = 1e-7,
                      vertex_tol: float = 1e-8,
                      samples_per_chord: int = 64) -> VerificationReport:
    """Run every check on a closed orbit and return a structured report."""
    ell = ell or t.ellipsoid
    lam = t.caustic
    m0 = t.period
    failures: list[str] = []

    closure = t.closure_residual
    if closure > closure_tol:
        failures.append(f"closure residual {closure:.3e} > {closure_tol:.0e}")

    dev = 0.0
    for q0, q1 in zip(t.impacts[:-1], t.impacts[1:]):
        got = caustic_params_of_line(q0, q1 - q0, ell)
        dev = max(dev, max(abs(a - b) for a, b in zip(got.lambdas, lam.lambdas)))
    if dev > caustic_tol:
        failures.append(f"caustic deviation {dev:.3e} > {caustic_tol:.0e}")

    counts = count_turning_events(t.impacts, lam, ell, closed=True)
    winding_counts = tuple(int(c) // 2 for c in counts)
    odd = bool(np.any(counts % 2))
    winding_match = (not odd) and winding_counts == t.winding.m
    if not winding_match:
        failures.append(f"winding counts {winding_counts} != prescribed {t.winding.m}")

    box = cuboid(lam, ell)
    path = sample_elliptic_path(t.impacts, ell, samples_per_chord)
    excursion = max((box.excursion(row) for row in path), default=0.0)
    if excursion > excursion_tol:
        failures.append(f"cuboid excursion {excursion:.3e} > {excursion_tol:.0e}")

    phase_points = [PhasePoint(tuple(q), tuple(p))
                    for q, p in zip(t.impacts[:-1], t.velocities[:-1])]
    memberships: dict[str, list[int]] = {}
    for r in nonempty_reversors(ell.dim):
        hits = [j for j, m in enumerate(phase_points)
                if symmetry_set_contains(r, m, ell, membership_tol)]
        if hits:
            memberships[r.key] = hits

    family_counts: dict[str, int] = {}
    two_point_ok = True
    for sigma_key in {r.key.removeprefix("f") for r in nonempty_reversors(ell.dim)}:
        tilde_hits = memberships.get(sigma_key, [])
        hat_hits = memberships.get("f" + sigma_key, [])
        total = len(tilde_hits) + len(hat_hits)
        if total:
            family_counts[sigma_key] = total
        if total == 0:
            continue
        if total != 2:
            two_point_ok = False
            failures.append(f"family {sigma_key}: {total} symmetry points (expected 2)")
        elif m0 % 2 == 1 and not (len(tilde_hits) == 1 and len(hat_hits) == 1):
            two_point_ok = False
            failures.append(f"family {sigma_key}: odd period needs one point per set")
        elif m0 % 2 == 0 and (len(tilde_hits) not in (0, 2)):
            two_point_ok = False
            failures.append(f"family {sigma_key}: even period needs both points on one set")

    doubly = len(memberships) >= 2

    vtol = vertex_tol * max(1.0, ell.axes[-1])
    vertex_visits: list[dict] = []
    seen_masks: set[tuple[int, ...]] = set()
    for j in range(m0):
        mask = _match_vertex(cartesian_to_elliptic(t.impacts[j], ell).coords, box, vtol)
        if mask is not None:
            vertex_visits.append({"at": "impact", "index": j, "mask": list(mask)})
            seen_masks.add(mask)
        mid = 0.5 * (t.impacts[j] + t.impacts[j + 1])
        mask = _match_vertex(cartesian_to_elliptic(mid, ell).coords, box, vtol)
        if mask is not None:
            vertex_visits.append({"at": "midpoint", "index": j, "mask": list(mask)})
            seen_masks.add(mask)

    delta = vertex_delta_of_kind(t.winding)
    masks = sorted(seen_masks)
    delta_ok = (len(masks) == 2
                and tuple(b1 ^ b2 for b1, b2 in zip(*masks)) == delta)
    if not delta_ok:
        failures.append(f"visited vertexes {masks} do not differ by delta {delta}")

    for msg in parity_violations(t.winding, lam.ctype):
        failures.append("parity: " + msg)

    report = VerificationReport(
        closure_residual=closure,
        caustic_deviation=dev,
        winding_counts=winding_counts,
        winding_match=winding_match,
        cuboid_excursion=excursion,
        memberships=memberships,
        family_counts=family_counts,
        two_point_law_ok=two_point_ok,
        doubly_symmetric=doubly,
        vertex_visits=vertex_visits,
        visited_masks=masks,
        vertex_delta_ok=delta_ok,
        distinct_impacts=distinct_impact_count(t.impacts, ell),
        event_counts=_itemized_events(t.impacts, lam, ell),
        monotone_conjecture_ok=t.winding.monotone,
        failures=failures,
    )
    return report


# --------------------------------------------------------------------------
# SPT construction
# --------------------------------------------------------------------------

def _seed_vertex_of(cls: SptClass) -> CuboidVertex:
    """Prefer a vertex whose reversor is tilde-family (impact seed)."""
    for v in cls.vertex_pair:
        if v.kinds(cls.ctype)[0] == "0":
            return v
    return cls.vertex_pair[0]


def _build_orbit(vertex: CuboidVertex, lam: CausticParams, ell: Ellipsoid,
                 m0: int, branch: int):
    seed = seed_point_at_vertex(vertex, lam, ell, branch)
    return iterate_orbit(seed, ell, m0)


def _polish_lambda(vertex: CuboidVertex, lam: CausticParams, ell: Ellipsoid,
                   m0: int, branch: int) -> CausticParams:
    """Gauss-Newton on the caustic parameters to shrink the closure defect."""
    n = len(lam.lambdas)

    def defect(vec) -> np.ndarray:
        lamP = CausticParams(tuple(vec), lam.ctype)
        qs, ps = _build_orbit(vertex, lamP, ell, m0, branch)
        return np.concatenate([qs[-1] - qs[0], ps[-1] - ps[0]])

    best = np.array(lam.lambdas)
    r = defect(best)
    best_norm = float(np.max(np.abs(r)))
    lamv = best.copy()
    for _ in range(4):
        if best_norm < 1e-13:
            break
        h = np.maximum(1e-9 * np.abs(lamv), 1e-13)
        jac = np.empty((len(r), n))
        for j in range(n):
            dp = np.zeros(n)
            dp[j] = h[j]
            jac[:, j] = (defect(lamv + dp) - defect(lamv - dp)) / (2.0 * h[j])
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        trial = lamv + step
        try:
            rt = defect(trial)
        except Exception:
            break
        if float(np.max(np.abs(rt))) >= best_norm:
            break
        lamv, r = trial, rt
        best_norm = float(np.max(np.abs(rt)))
        best = lamv.copy()
    return CausticParams(tuple(best), lam.ctype)


def find_spt(cls: SptClass, ell: Ellipsoid, w: WindingNumbers | None = None, *,
             branch: int = 0, lam: CausticParams | None = None,
             polish: bool = True, verify: bool = True) -> Trajectory:
    """Construct and verify a symmetric periodic trajectory of the class."""
    if ell.n != cls.dim - 1:
        raise ValueError("class dimension does not match the ellipsoid")
    w = w or cls.minimal_winding
    if not cls.compatible_winding(w):
        raise FeasibilityError(
            f"winding {w.m} (delta {vertex_delta_of_kind(w)}) incompatible "
            f"with class {cls.class_id} (delta {cls.delta})")
    if lam is None:
        lam = invert_frequency(w.target(), cls.ctype, ell)
    vertex = _seed_vertex_of(cls)
    if polish:
        lam = _polish_lambda(vertex, lam, ell, w.period, branch)
    qs, ps = _build_orbit(vertex, lam, ell, w.period, branch)
    traj = Trajectory(ellipsoid=ell, caustic=lam, winding=w,
                      impacts=qs, velocities=ps,
                      class_id=cls.class_id, branch=branch)
    if verify:
        report = verify_trajectory(traj)
        if not report.passed:
            raise VerificationFailed(
                f"class {cls.class_id}: " + "; ".join(report.failures), report)
        traj.report = report
    return traj


@dataclass
class AtlasResult:
    trajectories: list[Trajectory]
    failures: list[tuple[str, str]]

    @property
    def complete(self) -> bool:
        return not self.failures


def minimal_atlas(ell2d: Ellipsoid = STOCK_ELLIPSOID_2D,
                  ell_flat: Ellipsoid = STOCK_ELLIPSOIDS_3D[0],
                  ell_thin: Ellipsoid = STOCK_ELLIPSOIDS_3D[2], *,
                  extra_shapes: tuple[Ellipsoid, ...] = ATLAS_FALLBACK_SHAPES,
                  branch: int = 0) -> AtlasResult:
    """One verified minimal trajectory per class (12 in 2D, 112 in 3D).

    Flat shapes serve the EH1/H1H1 classes and thin ("segment-like")
    shapes the EH2/H1H2 ones; when the frequency map misses the target on
    the preferred shape, the other supplied shapes are tried in order.
    Per-class failures are collected, never raised.
    """
    trajectories: list[Trajectory] = []
    failures: list[tuple[str, str]] = []
    lam_cache: dict[tuple, CausticParams] = {}

    def shapes_for(cls: SptClass) -> list[Ellipsoid]:
        if cls.dim == 2:
            return [ell2d]
        primary = [ell_flat, ell_thin] if cls.ctype in ("EH1", "H1H1") else [ell_thin, ell_flat]
        rest = [e for e in extra_shapes if e not in primary]
        return primary + rest

    for n in (1, 2):
        for cls in enumerate_classes(n):
            w = cls.minimal_winding
            last_err = None
            for shape in shapes_for(cls):
                key = (shape.axes, cls.ctype, w.m)
                try:
                    if key in lam_cache:
                        lam = lam_cache[key]
                    else:
                        lam = invert_frequency(w.target(), cls.ctype, shape)
                        lam_cache[key] = lam
                    traj = find_spt(cls, shape, w, branch=branch, lam=lam)
                    trajectories.append(traj)
                    last_err = None
                    break
                except (NoSolutionInComponent, VerificationFailed, FeasibilityError) as exc:
                    last_err = exc
            if last_err is not None:
                failures.append((cls.class_id, str(last_err)))
    return AtlasResult(trajectories, failures)
