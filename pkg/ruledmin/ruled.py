"""
The cone G(s, p, v) = s g(p) + v over Lambda_g and its unit slice F_g.

Ruling coordinates t_j = <v, e_{j+4}(p)>. The tangent frame of the cone is
E_0 = d/ds, E_i = X_i / Omega (i = 1, 2), and G_* E_j = e_{j+2} for j >= 3.
Shape-operator entries pair with the non-unit normals xi, eta:
A_xi[i, j] = <alpha_G(E_i, E_j), xi>, so unit-normal components are entries / Omega.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DomainError, OracleUnavailableError, SingularPointError, SliceRequiredError
from .surface import (
    AdaptedFrameData,
    FrameCore,
    FrameDerivatives,
    SurfaceModel,
    adapted_frame,
    frame_core,
    frame_derivatives,
)


logger = logging.getLogger(__name__)

SLICE_TOL = 1e-10


@dataclass
class ConePoint:
    s: float
    p: tuple
    t: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.p = (float(self.p[0]), float(self.p[1]))

    def t_k(self, k: int) -> float:
        """t_k with absent ruling coordinates read as zero"""
        return float(self.t[k - 1]) if k <= len(self.t) else 0.0

    @property
    def radius_sq(self) -> float:
        return self.s ** 2 + float(self.t @ self.t)

    def on_slice(self, tol: float = SLICE_TOL) -> bool:
        return abs(self.radius_sq - 1.0) <= tol

    def scaled(self, r: float) -> "ConePoint":
        return ConePoint(self.s * r, self.p, self.t * r)


class PointGeometry:
    """Adapted frame at p with connection derivatives computed on first use"""

    def __init__(self, surface: SurfaceModel, point, tol: Tolerances = DEFAULT_TOLERANCES,
                 frame: Optional[AdaptedFrameData] = None):
        self.surface = surface
        self.tol = tol
        self.frame = frame if frame is not None else adapted_frame(surface, point, tol)
        self._derivs: Optional[FrameDerivatives] = None

    @property
    def derivs(self) -> FrameDerivatives:
        if self._derivs is None:
            self._derivs = frame_derivatives(self.surface, self.frame, self.tol)
        return self._derivs


@dataclass
class ConeScalars:
    """Quantities of the cone point depending only on (s, t) and the frame at p"""
    phi: np.ndarray        # phi_j = t1 a_j + t2 b_j
    psi: np.ndarray        # psi_j = t1 c_j + t2 d_j
    omega: float           # Omega
    G: np.ndarray          # G_i
    H: np.ndarray          # H_i


@dataclass
class HorizontalFrame:
    X: List[np.ndarray]    # G_* X_1, G_* X_2
    E: List[np.ndarray]    # G_* E_0, ..., G_* E_n
    omega: float


@dataclass
class ShapeData:
    A_xi: np.ndarray
    A_eta: np.ndarray
    phi_bar: np.ndarray
    h: np.ndarray
    r: np.ndarray
    s_coef: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    omega: float
    kappa: float

    def stacked(self) -> np.ndarray:
        return np.vstack([self.A_xi, self.A_eta])

    def along(self, angle: float) -> np.ndarray:
        return math.cos(angle) * self.A_xi + math.sin(angle) * self.A_eta


@dataclass
class OracleShape:
    A_xi: np.ndarray
    A_eta: np.ndarray
    tangent_residual: float


@dataclass
class SecondFormInvariants:
    norm_sq: float
    rank: int
    scalar: Optional[float] = None
    normalized_scalar: Optional[float] = None


def cone_scalars(frame: AdaptedFrameData, cp: ConePoint) -> ConeScalars:
    t1, t2, t3, t4 = (cp.t_k(k) for k in (1, 2, 3, 4))
    phi = t1 * frame.a + t2 * frame.b
    psi = t1 * frame.c + t2 * frame.d
    w = frame.w
    G = np.array([t2 * w(5, 6, i) + t3 * w(5, 7, i) + t4 * w(5, 8, i) for i in (1, 2)])
    H = np.array([-t1 * w(5, 6, i) + t3 * w(6, 7, i) + t4 * w(6, 8, i) for i in (1, 2)])
    omega = math.sqrt(cp.s ** 2 + float(phi @ phi))
    return ConeScalars(phi=phi, psi=psi, omega=omega, G=G, H=H)


def _geometry(surface, cp, geometry, tol) -> PointGeometry:
    return geometry if geometry is not None else PointGeometry(surface, cp.p, tol)


# ---------------------------------------------------------------------------
# cone map and singular set

def ruling_vector(frame, cp: ConePoint) -> np.ndarray:
    matrix = frame.frame
    v = np.zeros(matrix.shape[0])
    for k, tk in enumerate(cp.t, start=1):
        v = v + tk * matrix[:, k + 4]
    return v


def eval_G(surface: SurfaceModel, cp: ConePoint, core: Optional[FrameCore] = None,
           tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    core = core if core is not None else frame_core(surface, cp.p, tol)
    return cp.s * core.frame[:, 0] + ruling_vector(core, cp)


def is_singular(surface: Optional[SurfaceModel], cp: ConePoint, core: Optional[FrameCore] = None,
                tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """The vertex (0, p, 0), or s = 0 with v orthogonal to N_2"""
    if abs(cp.s) > tol.rank:
        return False
    if np.linalg.norm(cp.t) <= tol.rank:
        return True
    core = core if core is not None else frame_core(surface, cp.p, tol)
    v = ruling_vector(core, cp)
    return bool(np.linalg.norm(core.split.project(v, 2)) <= tol.rank)


def singular_scan(surface: SurfaceModel, points, seed: int, extra_directions: int = 4,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, int]:
    """
    Test is_singular on s = 0 at each base point: every unit ruling axis, then
    seeded random unit rulings. Random cone samples never land on s = 0.
    """
    rng = np.random.default_rng(seed)
    checked = singular = 0
    for point in points:
        core = frame_core(surface, point, tol)
        size = surface.n - 2
        rulings = list(np.eye(size)) + list(rng.normal(size=(extra_directions, size)))
        for t in rulings:
            checked += 1
            singular += is_singular(surface, ConePoint(0.0, point, t / np.linalg.norm(t)), core, tol)
    logger.debug("singular scan on %s: %d of %d rulings singular", surface.name, singular, checked)
    return {'checked': checked, 'singular': singular}


# ---------------------------------------------------------------------------
# frames of the cone

def horizontal_frame(surface: SurfaceModel, cp: ConePoint, geometry: Optional[PointGeometry] = None,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> HorizontalFrame:
    geo = _geometry(surface, cp, geometry, tol)
    frame = geo.frame
    sc = cone_scalars(frame, cp)
    if sc.omega <= tol.rank:
        raise SingularPointError(f"Omega = {sc.omega:.3e} at {cp}")

    X = [cp.s * frame.e(i) - sc.phi[i - 1] * frame.e(3) - sc.psi[i - 1] * frame.e(4) for i in (1, 2)]
    E = [frame.g, X[0] / sc.omega, X[1] / sc.omega]
    E.extend(frame.e(j + 2) for j in range(3, frame.n + 1))
    return HorizontalFrame(X=X, E=E, omega=sc.omega)


def normal_frame(surface: SurfaceModel, cp: ConePoint, geometry: Optional[PointGeometry] = None,
                 tol: Tolerances = DEFAULT_TOLERANCES):
    """xi = g_*(t1 V + t2 W) + s e3, eta = g_*(t1 Y + t2 Z) + s e4"""
    geo = _geometry(surface, cp, geometry, tol)
    frame = geo.frame
    sc = cone_scalars(frame, cp)
    if sc.omega <= tol.rank:
        raise SingularPointError(f"Omega = {sc.omega:.3e} at {cp}")
    xi = frame.tangent(sc.phi) + cp.s * frame.e(3)
    eta = frame.tangent(sc.psi) + cp.s * frame.e(4)
    return xi, eta


def horizontal_metric(surface: SurfaceModel, cp: ConePoint, geometry: Optional[PointGeometry] = None,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, np.ndarray]:
    """g_ij = <G_* X_i, G_* X_j> measured and from the closed form in phi and sigma = 1/lambda"""
    geo = _geometry(surface, cp, geometry, tol)
    hf = horizontal_frame(surface, cp, geo, tol)
    measured = np.array([[x @ y for y in hf.X] for x in hf.X])
    phi = cone_scalars(geo.frame, cp).phi
    sigma = 1.0 / geo.frame.lam
    s2 = cp.s ** 2
    closed = np.array([
        [s2 + phi[0] ** 2 + sigma ** 2 * phi[1] ** 2, (1 - sigma ** 2) * phi[0] * phi[1]],
        [(1 - sigma ** 2) * phi[0] * phi[1], s2 + phi[1] ** 2 + sigma ** 2 * phi[0] ** 2],
    ])
    return {'measured': measured, 'closed_form': closed}


# ---------------------------------------------------------------------------
# shape operators

def _h_coefficients(geo: PointGeometry, cp: ConePoint, sc: ConeScalars) -> np.ndarray:
    if cp.s == 0.0:
        return np.zeros(2)
    frame, derivs = geo.frame, geo.derivs
    a1, a2 = frame.a
    b1, b2 = frame.b
    t1, t2, t3, t4 = (cp.t_k(k) for k in (1, 2, 3, 4))
    w = frame.w
    h = []
    for i in (1, 2):
        B = w(1, 2, i) + w(3, 4, i)
        bracket = (t1 * (derivs.d(i, 3, 5, 1) - a2 * B - b1 * w(5, 6, i))
                   + t2 * (derivs.d(i, 3, 6, 1) - b2 * B + a1 * w(5, 6, i))
                   + t3 * (a1 * w(5, 7, i) + b1 * w(6, 7, i))
                   + t4 * (a1 * w(5, 8, i) + b1 * w(6, 8, i)))
        h.append(-cp.s / sc.omega ** 2 * bracket)
    return np.array(h)


def assemble_shape_matrices(n: int, kappa: float, phi_bar, h, r, s_coef):
    """Shape-operator pair in E_0, ..., E_n; rows and columns past E_4 stay zero"""
    size = n + 1
    A_xi = np.zeros((size, size))
    A_eta = np.zeros((size, size))

    def put(matrix, i, j, value):
        matrix[i, j] = value
        matrix[j, i] = value

    put(A_xi, 0, 1, phi_bar[0])
    put(A_xi, 0, 2, phi_bar[1])
    put(A_xi, 1, 1, h[0] + kappa)
    put(A_xi, 1, 2, h[1])
    put(A_xi, 2, 2, -h[0] - kappa)

    put(A_eta, 0, 1, phi_bar[1])
    put(A_eta, 0, 2, -phi_bar[0])
    put(A_eta, 1, 1, h[1])
    put(A_eta, 1, 2, kappa - h[0])
    put(A_eta, 2, 2, -h[1])

    for col, coef in ((3, r), (4, s_coef)):
        if col >= size:
            continue
        put(A_xi, 1, col, coef[0])
        put(A_xi, 2, col, coef[1])
        put(A_eta, 1, col, coef[1])
        put(A_eta, 2, col, -coef[0])
    return A_xi, A_eta


def shape_operators(surface: SurfaceModel, cp: ConePoint, geometry: Optional[PointGeometry] = None,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> ShapeData:
    geo = _geometry(surface, cp, geometry, tol)
    frame = geo.frame
    sc = cone_scalars(frame, cp)
    if sc.omega <= tol.rank:
        raise SingularPointError(f"Omega = {sc.omega:.3e} at {cp}")

    phi_bar = sc.phi / sc.omega
    r = -cp.s * frame.a / sc.omega
    s_coef = -cp.s * frame.b / sc.omega
    h = _h_coefficients(geo, cp, sc)
    A_xi, A_eta = assemble_shape_matrices(frame.n, frame.kappa, phi_bar, h, r, s_coef)
    xi, eta = normal_frame(surface, cp, geo, tol)
    return ShapeData(A_xi=A_xi, A_eta=A_eta, phi_bar=phi_bar, h=h, r=r, s_coef=s_coef,
                     xi=xi, eta=eta, omega=sc.omega, kappa=frame.kappa)


class _ConeSampler:
    """Evaluates G in coordinates (s, u, v, t_1, ...) with frames cached per base point"""

    def __init__(self, surface: SurfaceModel, tol: Tolerances):
        self.surface = surface
        self.tol = tol
        self._cores: Dict[tuple, FrameCore] = {}

    def __call__(self, q: np.ndarray) -> np.ndarray:
        key = (float(q[1]), float(q[2]))
        if key not in self._cores:
            self._cores[key] = frame_core(self.surface, key, self.tol)
        core = self._cores[key]
        return q[0] * core.frame[:, 0] + core.frame[:, 5:5 + len(q) - 3] @ q[3:]


def _fd_derivatives(func, q: np.ndarray, h: float):
    """Jacobian and Hessian tensor by Richardson-extrapolated central differences"""
    m = len(q)

    def estimate(step):
        center = func(q)
        jac = np.zeros((center.shape[0], m))
        hess = np.zeros((m, m, center.shape[0]))
        basis = np.eye(m) * step
        for a in range(m):
            plus, minus = func(q + basis[a]), func(q - basis[a])
            jac[:, a] = (plus - minus) / (2 * step)
            hess[a, a] = (plus - 2 * center + minus) / step ** 2
            for b in range(a + 1, m):
                mixed = (func(q + basis[a] + basis[b]) - func(q + basis[a] - basis[b])
                         - func(q - basis[a] + basis[b]) + func(q - basis[a] - basis[b])) / (4 * step ** 2)
                hess[a, b] = hess[b, a] = mixed
        return jac, hess

    jac_h, hess_h = estimate(h)
    jac_h2, hess_h2 = estimate(0.5 * h)
    return (4 * jac_h2 - jac_h) / 3, (4 * hess_h2 - hess_h) / 3


def shape_operators_fd(surface: SurfaceModel, cp: ConePoint, geometry: Optional[PointGeometry] = None,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> OracleShape:
    """Normal projections of second derivatives of eval_G, in the same E-frame and pairing"""
    geo = _geometry(surface, cp, geometry, tol)
    h = tol.oracle_step
    sc = cone_scalars(geo.frame, cp)
    if sc.omega <= 10.0 * h:
        raise OracleUnavailableError(f"stencil of radius {h} reaches the singular set (Omega = {sc.omega:.3e})")
    if not surface.domain.contains_box(cp.p[0], cp.p[1], h):
        raise OracleUnavailableError(f"stencil leaves the domain at {cp.p}")

    q = np.concatenate([[cp.s, cp.p[0], cp.p[1]], cp.t])
    try:
        jac, hess = _fd_derivatives(_ConeSampler(surface, tol), q, h)
    except DomainError as exc:
        raise OracleUnavailableError(str(exc))

    hf = horizontal_frame(surface, cp, geo, tol)
    targets = np.column_stack(hf.E)
    coords, *_ = np.linalg.lstsq(jac, targets, rcond=None)
    tangent_residual = float(np.max(np.abs(jac @ coords - targets)))
    logger.debug("oracle at s=%.4f p=%s: tangent residual %.3e", cp.s, cp.p, tangent_residual)

    xi, eta = normal_frame(surface, cp, geo, tol)
    matrices = []
    for normal in (xi, eta):
        pairing = hess @ normal
        matrices.append(coords.T @ pairing @ coords)
    return OracleShape(A_xi=matrices[0], A_eta=matrices[1], tangent_residual=tangent_residual)


# ---------------------------------------------------------------------------
# invariants

def stacked_rank(shape: ShapeData, tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    sigma = np.linalg.svd(shape.stacked() / shape.omega, compute_uv=False)
    if sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > tol.rank * sigma[0]))


def second_form_invariants(shape: ShapeData, cp: ConePoint, n: int, scalar: bool = True,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> SecondFormInvariants:
    norm_sq = float((np.sum(shape.A_xi ** 2) + np.sum(shape.A_eta ** 2)) / shape.omega ** 2)
    record = SecondFormInvariants(norm_sq=norm_sq, rank=stacked_rank(shape, tol))
    if scalar:
        if not cp.on_slice():
            raise SliceRequiredError(f"scalar curvature needs s^2 + |t|^2 = 1, got {cp.radius_sq}")
        record.scalar = n * (n - 1) - norm_sq
        record.normalized_scalar = record.scalar / (n * (n - 1))
    return record


def length_prediction(shape: ShapeData, frame: AdaptedFrameData, cp: ConePoint) -> Dict[str, float]:
    """|alpha_G|^2 from the printed length formula and from the matrix entries themselves"""
    omega2 = shape.omega ** 2
    K = frame.K
    h2 = float(shape.h @ shape.h)
    vw = float(frame.a @ frame.a + frame.b @ frame.b)
    printed = 4.0 / omega2 * (2.0 - K + h2 + cp.s ** 2 / omega2 * (vw - 1.0))
    phi2 = float(shape.phi_bar @ shape.phi_bar) * omega2
    rest = h2 + float(shape.r @ shape.r + shape.s_coef @ shape.s_coef)
    from_matrices = 4.0 / omega2 ** 2 * (0.5 * (1.0 - K) * omega2 + phi2 + omega2 * rest)
    return {'printed': printed, 'from_matrices': from_matrices}


def genuineness_ranks(shape: ShapeData, count: int = 36, tol: Tolerances = DEFAULT_TOLERANCES) -> List[int]:
    """Rank of cos(psi) A_xi + sin(psi) A_eta for psi on a uniform grid of the circle"""
    ranks = []
    for k in range(count):
        matrix = shape.along(2.0 * math.pi * k / count)
        sigma = np.linalg.svd(matrix, compute_uv=False)
        ranks.append(int(np.sum(sigma > tol.rank * max(sigma[0], 1e-300))))
    return ranks


def radial_vector(cp: ConePoint, n: int) -> np.ndarray:
    """s E_0 + sum_j t_j E_{j+2} in the E-frame"""
    vec = np.zeros(n + 1)
    vec[0] = cp.s
    for j, tj in enumerate(cp.t, start=1):
        vec[j + 2] = tj
    return vec


def nullity_residual(shape: ShapeData, cp: ConePoint, n: int) -> float:
    radial = radial_vector(cp, n)
    return float(max(np.max(np.abs(shape.A_xi @ radial)), np.max(np.abs(shape.A_eta @ radial))))


# ---------------------------------------------------------------------------
# derivatives of the normal fields

def _covariant_push(frame: AdaptedFrameData, derivs: FrameDerivatives, i: int, comps, dcomps) -> np.ndarray:
    """D_{e_i}(g_* U) for U = u1 e1 + u2 e2, given e_i(u_j)"""
    result = dcomps[0] * frame.e(1) + dcomps[1] * frame.e(2)
    for slot, u in ((1, comps[0]), (2, comps[1])):
        result = result + u * (frame.frame @ frame.omega[slot, :, i - 1])
    return result


def lift_coordinates(frame: AdaptedFrameData, cp: ConePoint, i: int) -> np.ndarray:
    """Coordinates of X_i in (s, u, v, t_1, ...), components along V^0 omitted"""
    sc = cone_scalars(frame, cp)
    q = np.zeros(3 + len(cp.t))
    q[1:3] = frame.coords[i - 1]
    if len(cp.t) >= 1:
        q[3] = sc.G[i - 1]
    if len(cp.t) >= 2:
        q[4] = sc.H[i - 1]
    return q


def normal_derivatives(surface: SurfaceModel, cp: ConePoint, geometry: Optional[PointGeometry] = None,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, np.ndarray]:
    """Derivatives of xi and eta along d/ds, E_3, E_4 and X_1, X_2"""
    geo = _geometry(surface, cp, geometry, tol)
    frame, derivs = geo.frame, geo.derivs
    sc = cone_scalars(frame, cp)
    t1, t2 = cp.t_k(1), cp.t_k(2)

    def field_derivative(pairs, e_index: int, i: int) -> np.ndarray:
        total = cp.s * (frame.frame @ frame.omega[e_index, :, i - 1])
        for tk, (top, bottom) in zip((t1, t2), pairs):
            comps = np.array([frame.w(top, bottom, 1), frame.w(top, bottom, 2)])
            dcomps = np.array([derivs.d(i, top, bottom, 1), derivs.d(i, top, bottom, 2)])
            total = total + tk * _covariant_push(frame, derivs, i, comps, dcomps)
        return total

    xi_pairs = ((3, 5), (3, 6))
    eta_pairs = ((4, 5), (4, 6))
    V, W, Y, Z = (frame.tangent(x) for x in (frame.a, frame.b, frame.c, frame.d))
    result = {
        'xi_s': frame.e(3), 'eta_s': frame.e(4),
        'xi_E3': V, 'xi_E4': W, 'eta_E3': Y, 'eta_E4': Z,
    }
    for i in (1, 2):
        result[f'xi_X{i}'] = field_derivative(xi_pairs, 3, i) + sc.G[i - 1] * V + sc.H[i - 1] * W
        result[f'eta_X{i}'] = field_derivative(eta_pairs, 4, i) + sc.G[i - 1] * Y + sc.H[i - 1] * Z
    return result


def normal_frame_derivative_fd(surface: SurfaceModel, cp: ConePoint, direction: np.ndarray,
                               step: float = 1e-3, tol: Tolerances = DEFAULT_TOLERANCES):
    """Central difference of (xi, eta) along a coordinate direction in (s, u, v, t_1, ...)"""

    def normals_at(offset: float):
        q = np.concatenate([[cp.s, cp.p[0], cp.p[1]], cp.t]) + offset * np.asarray(direction)
        moved = ConePoint(q[0], (q[1], q[2]), q[3:])
        return normal_frame(surface, moved, None, tol)

    estimates = []
    for h in (step, 0.5 * step):
        plus, minus = normals_at(h), normals_at(-h)
        estimates.append([(a - b) / (2 * h) for a, b in zip(plus, minus)])
    return [(4 * fine - coarse) / 3 for coarse, fine in zip(*estimates)]


# ---------------------------------------------------------------------------
# zero section and sampling

def cross_section_check(surface: SurfaceModel, points, tol: Tolerances = DEFAULT_TOLERANCES) -> List[Dict]:
    """Compare alpha_F on the zero sections s = +1, -1 with the second form of +g, -g"""
    records = []
    for point in points:
        geo = PointGeometry(surface, point, tol)
        frame = geo.frame
        t = np.zeros(frame.n - 2)
        for sign in (1.0, -1.0):
            cp = ConePoint(sign, point, t)
            shape = shape_operators(surface, cp, geo, tol)
            oracle = shape_operators_fd(surface, cp, geo, tol)
            omega2 = shape.omega ** 2
            expected = {(1, 1): frame.kappa * frame.e(3), (1, 2): frame.mu * frame.e(4),
                        (2, 2): -frame.kappa * frame.e(3)}
            tangent = 0.0
            for (i, j), alpha_g in expected.items():
                alpha_F = (shape.A_xi[i, j] * shape.xi + shape.A_eta[i, j] * shape.eta) / omega2
                tangent = max(tangent, float(np.max(np.abs(alpha_F - sign * alpha_g))))
            ruling = float(np.max(np.abs(oracle.A_xi[1:3, 3] - (-sign * frame.a))))
            if frame.n >= 4:
                ruling = max(ruling, float(np.max(np.abs(oracle.A_xi[1:3, 4] - (-sign * frame.b)))))
            records.append({
                'point': [float(point[0]), float(point[1])], 's': sign,
                'kappa': float(shape.A_xi[1, 1] / shape.omega),
                'tangent_residual': tangent, 'ruling_residual': ruling,
            })
    return records


def random_cone_points(surface: SurfaceModel, count: int, seed: int, on_slice: bool = True,
                       margin: float = 0.05) -> List[ConePoint]:
    """Seeded base points with directions (s, t) uniform on the unit sphere of R^{n-1}"""
    rng = np.random.default_rng(seed)
    points = surface.domain.sample(rng, count, margin)
    directions = rng.normal(size=(count, surface.n - 1))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    if not on_slice:
        directions *= rng.uniform(0.5, 2.0, size=(count, 1))
    return [ConePoint(d[0], p, d[1:]) for p, d in zip(points, directions)]


def sample_grid(surface: SurfaceModel, grid, seed: int, margin: float = 0.05) -> List[ConePoint]:
    """Regular grid of base points, row-major in u, each with one seeded on-slice direction"""
    nu, nv = grid
    axes = []
    for (lo, hi), periodic, count in zip((surface.domain.u_range, surface.domain.v_range),
                                         surface.domain.periodic, (nu, nv)):
        if periodic:
            axes.append(lo + (hi - lo) * np.arange(count) / count)
        else:
            axes.append(np.linspace(lo + margin, hi - margin, count))
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(nu * nv, surface.n - 1))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    points = [(u, v) for u in axes[0] for v in axes[1]]
    return [ConePoint(d[0], p, d[1:]) for p, d in zip(points, directions)]


def sample_row(surface: SurfaceModel, cp: ConePoint, tol: Tolerances = DEFAULT_TOLERANCES) -> Dict:
    """One CSV row: s, u, v, t1.., Omega, normSq, rank, singular"""
    row = {'s': cp.s, 'u': cp.p[0], 'v': cp.p[1]}
    for k, tk in enumerate(cp.t, start=1):
        row[f't{k}'] = float(tk)
    core = frame_core(surface, cp.p, tol)
    singular = is_singular(surface, cp, core, tol)
    row.update(Omega=None, normSq=None, rank=None, singular=singular)
    if singular:
        return row
    geo = PointGeometry(surface, cp.p, tol)
    shape = shape_operators(surface, cp, geo, tol)
    invariants = second_form_invariants(shape, cp, geo.frame.n, scalar=False, tol=tol)
    row.update(Omega=shape.omega, normSq=invariants.norm_sq, rank=invariants.rank)
    return row


def csv_columns(n: int) -> List[str]:
    return ['s', 'u', 'v'] + [f't{k}' for k in range(1, n - 1)] + ['Omega', 'normSq', 'rank', 'singular']
