"""
Per-point geometry of a minimal surface g: L^2 -> S^{n+2} in R^{n+3}.

Frame matrices have columns [g, e1, e2, e3, ..., e_{n+2}], so frame index i
is also the column index of e_i and column 0 is the position vector.
Connection coefficients are stored as omega[i, j, k-1] = <D_{e_k} e_i, e_j>.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (
    DegenerateFirstNormalError,
    DegenerateMetricError,
    DomainError,
    NotMinimalError,
    RankDeficientError,
)
from .jets import JetTable, analytic_jet, multilinear


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Domain:
    """Coordinate rectangle, optionally periodic in either direction"""
    u_range: Tuple[float, float]
    v_range: Tuple[float, float]
    periodic: Tuple[bool, bool] = (False, False)

    def _ranges(self):
        return (self.u_range, self.v_range)

    def normalize(self, point) -> Tuple[float, float]:
        coords = []
        for x, (lo, hi), periodic in zip(point, self._ranges(), self.periodic):
            x = float(x)
            if periodic:
                x = lo + (x - lo) % (hi - lo)
            elif x < lo or x > hi:
                raise DomainError(f"coordinate {x} outside [{lo}, {hi}]")
            coords.append(x)
        return coords[0], coords[1]

    def contains_box(self, u: float, v: float, radius: float) -> bool:
        for x, (lo, hi), periodic in zip((u, v), self._ranges(), self.periodic):
            if not periodic and (x - radius < lo or x + radius > hi):
                return False
        return True

    def sample(self, rng: np.random.Generator, count: int, margin: float = 0.0) -> np.ndarray:
        columns = []
        for (lo, hi), periodic in zip(self._ranges(), self.periodic):
            pad = 0.0 if periodic else margin
            columns.append(rng.uniform(lo + pad, hi - pad, size=count))
        return np.column_stack(columns)


@dataclass(frozen=True)
class SurfaceModel:
    """Parametrized immersion of a 2-domain into the unit sphere of R^{ambient_dim}"""
    name: str
    ambient_dim: int
    domain: Domain
    jet_provider: Callable[[float, float, int], JetTable]
    orientation: int = 1
    normal_ranks: Optional[Tuple[int, ...]] = None

    @property
    def n(self) -> int:
        return self.ambient_dim - 3

    def flipped(self) -> "SurfaceModel":
        return replace(self, orientation=-self.orientation)

    def evaluate(self, point) -> np.ndarray:
        return analytic_jet(self, point, 0).value


@dataclass
class NormalSplit:
    """Orthonormal bases of N_1, N_2, ... at a point"""
    bases: List[np.ndarray] = field(default_factory=list)

    @property
    def ranks(self) -> Tuple[int, ...]:
        return tuple(len(b) for b in self.bases)

    def level(self, s: int) -> np.ndarray:
        return self.bases[s - 1]

    def project(self, vector: np.ndarray, s: int) -> np.ndarray:
        basis = self.level(s)
        return basis.T @ (basis @ vector)


@dataclass
class TangentFrame:
    e1: np.ndarray
    e2: np.ndarray
    coords: np.ndarray   # rows: coordinate vectors x1, x2 with g_* x_i = e_i


@dataclass
class SecondForm:
    """Spherical second fundamental form on a tangent frame"""
    frame: TangentFrame
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray

    @property
    def minimality_residual(self) -> float:
        return float(np.linalg.norm(self.a11 + self.a22))


@dataclass
class CurvatureEllipse:
    kappa: float
    mu: float
    e3: np.ndarray
    e4: Optional[np.ndarray]
    angle: float          # rotation of e1 that puts the major axis along alpha(e1, e1)
    isotropic: bool


@dataclass
class HigherForms:
    level: int
    values: List[np.ndarray]   # alpha^{s+1}(e1,...,e1) and alpha^{s+1}(e1,...,e1,e2)
    split: NormalSplit

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.values[0]))


@dataclass
class FrameCore:
    """Adapted frame without connection data"""
    point: Tuple[float, float]
    frame: np.ndarray
    coords: np.ndarray
    kappa: float
    mu: float
    gauge: float
    isotropic: bool
    split: NormalSplit
    level_radii: List[float]


@dataclass
class AdaptedFrameData:
    point: Tuple[float, float]
    frame: np.ndarray
    coords: np.ndarray
    kappa: float
    mu: float
    gauge: float
    isotropic: bool
    split: NormalSplit
    level_radii: List[float]
    omega: np.ndarray
    K: float

    @property
    def n(self) -> int:
        return self.frame.shape[0] - 3

    @property
    def lam(self) -> float:
        return self.mu / self.kappa

    @property
    def kappa1(self) -> Optional[float]:
        return self.level_radii[1] if len(self.level_radii) > 1 else None

    @property
    def g(self) -> np.ndarray:
        return self.frame[:, 0]

    def e(self, i: int) -> np.ndarray:
        return self.frame[:, i]

    def w(self, i: int, j: int, k: int) -> float:
        """omega_{ij}(e_k); indices beyond the frame are absent and read as zero"""
        size = self.frame.shape[1]
        if i >= size or j >= size:
            return 0.0
        return float(self.omega[i, j, k - 1])

    @property
    def a(self) -> np.ndarray:
        return np.array([self.w(3, 5, 1), self.w(3, 5, 2)])

    @property
    def b(self) -> np.ndarray:
        return np.array([self.w(3, 6, 1), self.w(3, 6, 2)])

    @property
    def c(self) -> np.ndarray:
        return np.array([self.w(4, 5, 1), self.w(4, 5, 2)])

    @property
    def d(self) -> np.ndarray:
        return np.array([self.w(4, 6, 1), self.w(4, 6, 2)])

    def tangent(self, components) -> np.ndarray:
        """Ambient vector of the tangent vector with e-frame components"""
        return components[0] * self.frame[:, 1] + components[1] * self.frame[:, 2]

    def orthonormality_residual(self) -> float:
        gram = self.frame.T @ self.frame
        return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


@dataclass
class DualFields:
    """e-frame components of V, W, Y, Z"""
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    omegas_residual: float


# ---------------------------------------------------------------------------
# metric and tangent frame

def metric_from_jet(jet: JetTable, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    gu, gv = jet[(1, 0)], jet[(0, 1)]
    metric = np.array([[gu @ gu, gu @ gv], [gu @ gv, gv @ gv]])
    if np.linalg.det(metric) <= tol.lin:
        raise DegenerateMetricError(f"metric determinant {np.linalg.det(metric):.3e} at {jet.point}")
    return metric


def induced_metric(surface: SurfaceModel, point, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    return metric_from_jet(analytic_jet(surface, point, 1, tol), tol)


def tangent_from_jet(jet: JetTable, orientation: int = 1, tol: Tolerances = DEFAULT_TOLERANCES) -> TangentFrame:
    """Gram-Schmidt on (g_u, g_v); e2 sign follows the orientation"""
    metric_from_jet(jet, tol)
    gu, gv = jet[(1, 0)], jet[(0, 1)]
    len_u = np.linalg.norm(gu)
    e1 = gu / len_u
    rest = gv - (gv @ e1) * e1
    len_rest = np.linalg.norm(rest)
    e2 = orientation * rest / len_rest
    coords = np.array([
        [1.0 / len_u, 0.0],
        [-orientation * (gv @ e1) / (len_u * len_rest), orientation / len_rest],
    ])
    return TangentFrame(e1=e1, e2=e2, coords=coords)


def tangent_frame(surface: SurfaceModel, point, tol: Tolerances = DEFAULT_TOLERANCES) -> TangentFrame:
    return tangent_from_jet(analytic_jet(surface, point, 1, tol), surface.orientation, tol)


def rotate_tangent(frame: TangentFrame, angle: float) -> TangentFrame:
    c, s = math.cos(angle), math.sin(angle)
    return TangentFrame(
        e1=c * frame.e1 + s * frame.e2,
        e2=-s * frame.e1 + c * frame.e2,
        coords=np.array([c * frame.coords[0] + s * frame.coords[1],
                         -s * frame.coords[0] + c * frame.coords[1]]),
    )


# ---------------------------------------------------------------------------
# second fundamental form and curvature ellipse

def _orthonormal_basis(vectors: Sequence[np.ndarray], threshold: float) -> np.ndarray:
    """Rows spanning the numerical column space of the given vectors"""
    matrix = np.column_stack(vectors)
    u, sigma, _ = np.linalg.svd(matrix, full_matrices=False)
    rank = int(np.sum(sigma > threshold))
    return u[:, :rank].T


def _project_off(vector: np.ndarray, orthonormal_rows: np.ndarray) -> np.ndarray:
    return vector - orthonormal_rows.T @ (orthonormal_rows @ vector)


def second_form_from_jet(jet: JetTable, frame: TangentFrame, tol: Tolerances = DEFAULT_TOLERANCES) -> SecondForm:
    g = jet.value
    osc1 = np.array([g, frame.e1, frame.e2])
    x1, x2 = frame.coords
    values = [_project_off(multilinear(jet, pair), osc1) for pair in ((x1, x1), (x1, x2), (x2, x2))]
    form = SecondForm(frame, *values)
    scale = max(1.0, float(np.linalg.norm(form.a11)))
    if form.minimality_residual > tol.minimal * scale:
        raise NotMinimalError(f"|alpha(e1,e1) + alpha(e2,e2)| = {form.minimality_residual:.3e} at {jet.point}")
    return form


def second_form(surface: SurfaceModel, point, tol: Tolerances = DEFAULT_TOLERANCES) -> SecondForm:
    jet = analytic_jet(surface, point, 2, tol)
    return second_form_from_jet(jet, tangent_from_jet(jet, surface.orientation, tol), tol)


def ellipse_from_form(form: SecondForm, tol: Tolerances = DEFAULT_TOLERANCES) -> CurvatureEllipse:
    a = form.a11 @ form.a11
    b = form.a12 @ form.a12
    c = form.a11 @ form.a12
    mean = 0.5 * (a + b)
    root = math.hypot(0.5 * (a - b), c)
    kappa = math.sqrt(mean + root)
    mu = math.sqrt(max(mean - root, 0.0))
    if kappa < tol.rank:
        raise DegenerateFirstNormalError(f"kappa = {kappa:.3e}, first normal space degenerate")

    isotropic = root <= tol.iso * max(a + b, tol.rank)
    angle = 0.0 if isotropic else 0.25 * math.atan2(2.0 * c, a - b)
    cos2, sin2 = math.cos(2 * angle), math.sin(2 * angle)
    major = cos2 * form.a11 + sin2 * form.a12
    minor = -sin2 * form.a11 + cos2 * form.a12
    e3 = major / np.linalg.norm(major)
    minor_len = np.linalg.norm(minor)
    e4 = minor / minor_len if mu >= tol.rank else None
    return CurvatureEllipse(kappa=kappa, mu=mu, e3=e3, e4=e4, angle=angle, isotropic=isotropic)


def ellipse_from_jet(jet: JetTable, orientation: int = 1, tol: Tolerances = DEFAULT_TOLERANCES) -> CurvatureEllipse:
    return ellipse_from_form(second_form_from_jet(jet, tangent_from_jet(jet, orientation, tol), tol), tol)


def curvature_ellipse(surface: SurfaceModel, point, tol: Tolerances = DEFAULT_TOLERANCES) -> CurvatureEllipse:
    return ellipse_from_form(second_form(surface, point, tol), tol)


def is_one_isotropic(surface: SurfaceModel, points, tol: Optional[float] = None,
                     tolerances: Tolerances = DEFAULT_TOLERANCES) -> Tuple[bool, List[Dict]]:
    """True iff the ellipse is a circle and g is minimal at every sampled point"""
    tol = tolerances.iso if tol is None else tol
    records = []
    verdict = True
    for point in points:
        record = {'point': [float(point[0]), float(point[1])]}
        try:
            form = second_form(surface, point, tolerances)
            ellipse = ellipse_from_form(form, tolerances)
        except (NotMinimalError, DegenerateFirstNormalError) as exc:
            record.update(error=exc.code, isotropic=False)
            verdict = False
            records.append(record)
            continue
        gap = abs(ellipse.kappa - ellipse.mu)
        ok = gap <= tol * max(ellipse.kappa, 1.0)
        record.update(kappa=ellipse.kappa, mu=ellipse.mu, gap=gap,
                      minimal_residual=form.minimality_residual, isotropic=ok)
        verdict = verdict and ok
        records.append(record)
    return verdict, records


# ---------------------------------------------------------------------------
# higher normal spaces

def normal_split_from_jet(jet: JetTable, frame: TangentFrame, tol: Tolerances = DEFAULT_TOLERANCES,
                          max_level: Optional[int] = None) -> NormalSplit:
    """N_s spanned by order-(s+1) partials projected off the osculating space of order s"""
    osc = np.array([jet.value, frame.e1, frame.e2])
    split = NormalSplit()
    top = jet.order - 1 if max_level is None else min(max_level, jet.order - 1)
    for level in range(1, top + 1):
        if osc.shape[0] >= jet.dim:
            break
        raw = jet.of_order(level + 1)
        scale = max(1.0, max(np.linalg.norm(r) for r in raw))
        projected = [_project_off(r, osc) for r in raw]
        basis = _orthonormal_basis(projected, tol.rank * scale)
        if basis.shape[0] == 0:
            break
        split.bases.append(basis)
        osc = np.vstack([osc, basis])
    return split


def _check_ranks(surface: SurfaceModel, split: NormalSplit, point, upto: Optional[int] = None):
    declared = surface.normal_ranks
    if declared is None:
        return
    for level, expected in enumerate(declared[:upto], start=1):
        observed = split.ranks[level - 1] if level <= len(split.ranks) else 0
        if observed != expected:
            raise RankDeficientError(f"{surface.name}: N_{level} has rank {observed}, "
                                     f"declared {expected} at {point}", level)


def _third_order_gauge(jet: JetTable, frame: TangentFrame, split: NormalSplit) -> float:
    """Rotation of e1 making alpha^3(e1,e1,e2) vanish on a rank-one N_2"""
    x1, x2 = frame.coords
    first = split.project(multilinear(jet, (x1, x1, x1)), 2)
    second = split.project(multilinear(jet, (x1, x1, x2)), 2)
    angle = math.atan2(2.0 * (first @ second), first @ first - second @ second)
    angle = (angle + math.pi / 2) % (2 * math.pi) - math.pi / 2
    return angle / 6.0


def _level_basis(jet: JetTable, frame: TangentFrame, split: NormalSplit, level: int, tol: Tolerances):
    """Frame vectors of N_level from alpha^{level+1}(e1,...,e1) and alpha^{level+1}(e1,...,e1,e2)"""
    x1, x2 = frame.coords
    head = [x1] * level
    candidates = [split.project(multilinear(jet, head + [x1]), level),
                  split.project(multilinear(jet, head + [x2]), level)]
    radius = float(np.linalg.norm(candidates[0]))
    vectors = []
    for candidate in candidates + list(split.level(level)):
        for vec in vectors:
            candidate = candidate - (candidate @ vec) * vec
        length = np.linalg.norm(candidate)
        if length > tol.rank:
            vectors.append(candidate / length)
        if len(vectors) == split.ranks[level - 1]:
            break
    return vectors, radius


def frame_core(surface: SurfaceModel, point, tol: Tolerances = DEFAULT_TOLERANCES) -> FrameCore:
    """Adapted frame {g, e1, ..., e_{n+2}} with the gauge fixed by the ellipse"""
    order = 3 if surface.n <= 4 else 4
    jet = analytic_jet(surface, point, order, tol)
    base = tangent_from_jet(jet, surface.orientation, tol)
    form = second_form_from_jet(jet, base, tol)
    ellipse = ellipse_from_form(form, tol)
    if ellipse.mu < tol.rank:
        raise DegenerateFirstNormalError(f"mu = {ellipse.mu:.3e} at {point}, e4 undefined")

    split = normal_split_from_jet(jet, base, tol)
    _check_ranks(surface, split, point)
    if sum(split.ranks) < surface.n:
        raise RankDeficientError(f"{surface.name} is not substantial at {point}: ranks {split.ranks}",
                                 len(split.ranks) + 1)

    gauge = ellipse.angle
    if ellipse.isotropic and len(split.ranks) > 1 and split.ranks[1] == 1:
        gauge = _third_order_gauge(jet, base, split)
    tangent = rotate_tangent(base, gauge)

    cos2, sin2 = math.cos(2 * gauge), math.sin(2 * gauge)
    a11 = cos2 * form.a11 + sin2 * form.a12
    a12 = -sin2 * form.a11 + cos2 * form.a12
    kappa, mu = float(np.linalg.norm(a11)), float(np.linalg.norm(a12))
    columns = [jet.value, tangent.e1, tangent.e2, a11 / kappa, a12 / mu]
    radii = [kappa]
    for level in range(2, len(split.ranks) + 1):
        vectors, radius = _level_basis(jet, tangent, split, level, tol)
        columns.extend(vectors)
        radii.append(radius)

    frame = np.column_stack(columns)
    logger.debug("frame at %s: kappa=%.6g mu=%.6g gauge=%.6g ranks=%s", point, kappa, mu, gauge, split.ranks)
    return FrameCore(point=tuple(point), frame=frame, coords=tangent.coords, kappa=kappa, mu=mu,
                     gauge=gauge, isotropic=ellipse.isotropic, split=split, level_radii=radii)


def higher_forms(surface: SurfaceModel, point, s: int, tol: Tolerances = DEFAULT_TOLERANCES) -> HigherForms:
    """alpha^{s+1}(e1,...,e1,e1) and alpha^{s+1}(e1,...,e1,e2) in the adapted tangent frame"""
    jet = analytic_jet(surface, point, s + 1, tol)
    base = tangent_from_jet(jet, surface.orientation, tol)
    split = normal_split_from_jet(jet, base, tol, max_level=s)
    _check_ranks(surface, split, point, upto=s)
    if len(split.ranks) < s:
        return HigherForms(level=s, values=[np.zeros(jet.dim), np.zeros(jet.dim)], split=split)

    gauge = 0.0
    try:
        ellipse = ellipse_from_form(second_form_from_jet(jet, base, tol), tol)
        gauge = ellipse.angle
        if ellipse.isotropic and s >= 2 and split.ranks[1] == 1:
            gauge = _third_order_gauge(jet, base, split)
    except DegenerateFirstNormalError:
        pass
    tangent = rotate_tangent(base, gauge)
    x1, x2 = tangent.coords
    head = [x1] * s
    values = [split.project(multilinear(jet, head + [x]), s) for x in (x1, x2)]
    return HigherForms(level=s, values=values, split=split)


# ---------------------------------------------------------------------------
# intrinsic curvature

def gauss_curvature_from_jet(jet: JetTable) -> float:
    """Brioschi formula from metric coefficients and their derivatives"""
    gu, gv = jet[(1, 0)], jet[(0, 1)]
    guu, guv, gvv = jet[(2, 0)], jet[(1, 1)], jet[(0, 2)]
    guuv, guvv = jet[(2, 1)], jet[(1, 2)]

    E, F, G = gu @ gu, gu @ gv, gv @ gv
    E_u, E_v = 2 * (guu @ gu), 2 * (guv @ gu)
    F_u = guu @ gv + gu @ guv
    F_v = guv @ gv + gu @ gvv
    G_u, G_v = 2 * (guv @ gv), 2 * (gvv @ gv)
    E_vv = 2 * (guvv @ gu + guv @ guv)
    G_uu = 2 * (guuv @ gv + guv @ guv)
    F_uv = guuv @ gv + guu @ gvv + guv @ guv + gu @ guvv

    m1 = np.array([
        [-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v],
        [F_v - 0.5 * G_u, E, F],
        [0.5 * G_v, F, G],
    ])
    m2 = np.array([
        [0.0, 0.5 * E_v, 0.5 * G_u],
        [0.5 * E_v, E, F],
        [0.5 * G_u, F, G],
    ])
    return float((np.linalg.det(m1) - np.linalg.det(m2)) / (E * G - F * F) ** 2)


def gauss_curvature(surface: SurfaceModel, point, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    return gauss_curvature_from_jet(analytic_jet(surface, point, 3, tol))


# ---------------------------------------------------------------------------
# connection forms

def _aligned(frame: np.ndarray, reference: np.ndarray) -> np.ndarray:
    signs = np.sign(np.sum(frame * reference, axis=0))
    signs[signs == 0] = 1.0
    return frame * signs


def _frame_partials(surface: SurfaceModel, point, center: np.ndarray, tol: Tolerances) -> List[np.ndarray]:
    """Richardson-extrapolated central differences of the frame matrix in u and v"""
    u, v = float(point[0]), float(point[1])
    h = tol.fd_step
    if not surface.domain.contains_box(u, v, h):
        raise DomainError(f"frame stencil of radius {h} escapes the domain at {point}")

    partials = []
    for direction in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        estimates = []
        for step in (h, 0.5 * h):
            plus = frame_core(surface, (u + step * direction[0], v + step * direction[1]), tol).frame
            minus = frame_core(surface, (u - step * direction[0], v - step * direction[1]), tol).frame
            estimates.append((_aligned(plus, center) - _aligned(minus, center)) / (2 * step))
        partials.append((4.0 * estimates[1] - estimates[0]) / 3.0)
    return partials


def connection_from_core(surface: SurfaceModel, core: FrameCore, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """omega[i, j, k-1] = <D_{e_k} f_i, f_j>, antisymmetric in (i, j)"""
    partials = _frame_partials(surface, core.point, core.frame, tol)
    mats = [core.frame.T @ p for p in partials]     # mats[c][i, j] = <f_i, d_c f_j>
    size = core.frame.shape[1]
    omega = np.zeros((size, size, 2))
    for k in range(2):
        raw = core.coords[k][0] * mats[0].T + core.coords[k][1] * mats[1].T
        omega[:, :, k] = 0.5 * (raw - raw.T)
    return omega


def adapted_frame(surface: SurfaceModel, point, tol: Tolerances = DEFAULT_TOLERANCES) -> AdaptedFrameData:
    core = frame_core(surface, point, tol)
    omega = connection_from_core(surface, core, tol)
    K = gauss_curvature(surface, point, tol)
    return AdaptedFrameData(point=core.point, frame=core.frame, coords=core.coords, kappa=core.kappa,
                            mu=core.mu, gauge=core.gauge, isotropic=core.isotropic, split=core.split,
                            level_radii=core.level_radii, omega=omega, K=K)


def dual_fields(frame: AdaptedFrameData) -> DualFields:
    lam = frame.lam
    a, b, c, d = frame.a, frame.b, frame.c, frame.d
    residual = max(abs(lam * c[0] - a[1]), abs(lam * c[1] + a[0]),
                   abs(lam * d[0] - b[1]), abs(lam * d[1] + b[0]))
    return DualFields(a=a, b=b, c=c, d=d, omegas_residual=float(residual))


def hodge(values: np.ndarray) -> np.ndarray:
    """*w on (e1, e2) with *w(e) = -w(Je), Je1 = e2, Je2 = -e1"""
    return np.array([-values[1], values[0]])


def conn_residual(frame: AdaptedFrameData) -> float:
    """max over k of |omega_45^k + (1/lam) (*omega_35)^k| and the same for omega_46"""
    lam = frame.lam
    worst = 0.0
    for top, bottom in (((4, 5), (3, 5)), ((4, 6), (3, 6))):
        lhs = np.array([frame.w(*top, k) for k in (1, 2)])
        rhs = -hodge(np.array([frame.w(*bottom, k) for k in (1, 2)])) / lam
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def gauss_equation_residual(frame: AdaptedFrameData) -> float:
    return abs(frame.K - (1.0 - frame.kappa ** 2 - frame.mu ** 2))


@dataclass
class FrameDerivatives:
    """domega[i, j, k-1, m-1] = e_m(omega_{ij}(e_k))"""
    domega: np.ndarray

    def d(self, m: int, i: int, j: int, k: int) -> float:
        size = self.domega.shape[0]
        if i >= size or j >= size:
            return 0.0
        return float(self.domega[i, j, k - 1, m - 1])


def frame_derivatives(surface: SurfaceModel, frame: AdaptedFrameData,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> FrameDerivatives:
    """Derivatives of connection coefficients along e1, e2 by outer central differences"""
    u, v = frame.point
    h = tol.fd_outer_step
    if not surface.domain.contains_box(u, v, h + tol.fd_step):
        raise DomainError(f"outer stencil of radius {h} escapes the domain at {frame.point}")

    def omega_at(du: float, dv: float) -> np.ndarray:
        core = frame_core(surface, (u + du, v + dv), tol)
        return connection_from_core(surface, core, tol)

    coordinate = []
    for direction in ((1.0, 0.0), (0.0, 1.0)):
        estimates = []
        for step in (h, 0.5 * h):
            plus = omega_at(step * direction[0], step * direction[1])
            minus = omega_at(-step * direction[0], -step * direction[1])
            estimates.append((plus - minus) / (2 * step))
        coordinate.append((4.0 * estimates[1] - estimates[0]) / 3.0)

    size = frame.frame.shape[1]
    domega = np.zeros((size, size, 2, 2))
    for m in range(2):
        domega[:, :, :, m] = frame.coords[m][0] * coordinate[0] + frame.coords[m][1] * coordinate[1]
    return FrameDerivatives(domega=domega)


def ricci_residuals(frame: AdaptedFrameData, derivs: FrameDerivatives) -> np.ndarray:
    """The eight flat-normal-curvature identities in a, b and the omega_{5j}, omega_{6j}"""
    a1, a2 = frame.a
    b1, b2 = frame.b
    B = [frame.w(1, 2, k) + frame.w(3, 4, k) for k in (1, 2)]
    w = frame.w

    def e(m: int, i: int, j: int, k: int) -> float:
        return derivs.d(m, i, j, k)

    residuals = [
        e(1, 3, 5, 2) - e(2, 3, 5, 1) + a1 * B[0] + a2 * B[1] - b2 * w(5, 6, 1) + b1 * w(5, 6, 2),
        e(1, 3, 6, 2) - e(2, 3, 6, 1) + b1 * B[0] + b2 * B[1] + a2 * w(5, 6, 1) - a1 * w(5, 6, 2),
        e(1, 3, 5, 1) + e(2, 3, 5, 2) - a2 * B[0] + a1 * B[1] - b1 * w(5, 6, 1) - b2 * w(5, 6, 2),
        e(1, 3, 6, 1) + e(2, 3, 6, 2) - b2 * B[0] + b1 * B[1] + a1 * w(5, 6, 1) + a2 * w(5, 6, 2),
        a2 * w(5, 7, 1) - a1 * w(5, 7, 2) + b2 * w(6, 7, 1) - b1 * w(6, 7, 2),
        a2 * w(5, 8, 1) - a1 * w(5, 8, 2) + b2 * w(6, 8, 1) - b1 * w(6, 8, 2),
        a1 * w(5, 7, 1) + a2 * w(5, 7, 2) + b1 * w(6, 7, 1) + b2 * w(6, 7, 2),
        a1 * w(5, 8, 1) + a2 * w(5, 8, 2) + b1 * w(6, 8, 1) + b2 * w(6, 8, 2),
    ]
    return np.array(residuals)


def sample_points(surface: SurfaceModel, count: int, seed: int, margin: float = 0.05) -> np.ndarray:
    """Seeded uniform sample of the domain, kept away from non-periodic edges"""
    rng = np.random.default_rng(seed)
    return surface.domain.sample(rng, count, margin)
