"""
Associated family of the cone at the level of frame data, and the
moving-frame integration of the surface family g_theta.

Normal labels of g_theta use the parallel identification with the normal
bundle of g, so only the tangent-normal block of the structure matrices
changes: <D_X (g_theta* e_i), e_k> = <alpha_g(J_theta X, e_i), e_k>.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import orthogonal_procrustes

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DomainError, IntegrationDivergedError, IsotropyRequiredError, PreconditionViolation
from .jets import JetTable
from .report import parallel_map
from .ruled import ConePoint, ShapeData, assemble_shape_matrices, stacked_rank
from .surface import (
    SurfaceModel,
    connection_from_core,
    ellipse_from_jet,
    frame_core,
    induced_metric,
)


logger = logging.getLogger(__name__)


def planar(theta: float) -> np.ndarray:
    """[[cos, sin], [-sin, cos]]: a^theta = planar(theta) @ a"""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


@dataclass
class FamilyScalars:
    a: np.ndarray
    b: np.ndarray
    phi: np.ndarray
    h: np.ndarray
    kappa: float
    s: float
    omega: float
    n: int

    def rotated(self, theta: float) -> "FamilyScalars":
        rot = planar(theta)
        return replace(self, a=rot @ self.a, b=rot @ self.b, phi=rot @ self.phi, h=rot @ self.h)

    def matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        return assemble_shape_matrices(self.n, self.kappa, self.phi / self.omega, self.h,
                                       -self.s * self.a / self.omega, -self.s * self.b / self.omega)


@dataclass
class FamilyMember:
    theta: float
    scalars: FamilyScalars
    A_xi: np.ndarray
    A_eta: np.ndarray
    xi: np.ndarray      # components on (g_theta* e1, g_theta* e2, e3^theta, e4^theta)
    eta: np.ndarray

    def normal_residual(self) -> float:
        omega = self.scalars.omega
        return max(abs(np.linalg.norm(self.xi) - omega), abs(np.linalg.norm(self.eta) - omega),
                   abs(float(self.xi @ self.eta)))

    def coefficients(self, X, Y) -> np.ndarray:
        """alpha^theta(X, Y) as coefficients on (xi_theta, eta_theta), scaled by Omega^2"""
        return np.array([X @ self.A_xi @ Y, X @ self.A_eta @ Y])


def family_scalars(shape: ShapeData, frame, cp: ConePoint) -> FamilyScalars:
    return FamilyScalars(a=frame.a.copy(), b=frame.b.copy(), phi=shape.phi_bar * shape.omega,
                         h=shape.h.copy(), kappa=shape.kappa, s=cp.s, omega=shape.omega, n=frame.n)


def check_isotropic(frame, tol: Tolerances = DEFAULT_TOLERANCES):
    if abs(frame.kappa - frame.mu) > tol.iso * max(frame.kappa, 1.0):
        raise IsotropyRequiredError(f"kappa = {frame.kappa:.6g}, mu = {frame.mu:.6g}: associated family "
                                    f"needs a circular ellipse")


def member_from_scalars(scalars: FamilyScalars, theta: float) -> FamilyMember:
    A_xi, A_eta = scalars.matrices()
    u = scalars.phi      # e-frame components of J_{-theta}(t1 V + t2 W)
    xi = np.array([u[0], u[1], scalars.s, 0.0])
    eta = np.array([u[1], -u[0], 0.0, scalars.s])
    return FamilyMember(theta=theta, scalars=scalars, A_xi=A_xi, A_eta=A_eta, xi=xi, eta=eta)


def rotate_family(shape: ShapeData, frame, cp: ConePoint, theta: float,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> FamilyMember:
    """Member theta of the associated family at a non-singular cone point"""
    check_isotropic(frame, tol)
    base = family_scalars(shape, frame, cp)
    if theta == 0.0:
        member = member_from_scalars(base, 0.0)
        member.A_xi, member.A_eta = shape.A_xi.copy(), shape.A_eta.copy()
        return member
    return member_from_scalars(base.rotated(theta), theta)


# ---------------------------------------------------------------------------
# rotation operators and the forms relation

@dataclass
class RotationOperators:
    theta: float
    omega: float
    n: int

    def R(self, angle: float) -> np.ndarray:
        """Orientation-preserving rotation on normal coefficients (xi, eta)"""
        c, s = math.cos(angle), math.sin(angle)
        return np.array([[c, -s], [s, c]])

    def cal_J(self, angle: float, chirality: int = 1) -> np.ndarray:
        """cos I + sin J on the horizontal plane (J E1 = chirality E2), identity elsewhere"""
        matrix = np.eye(self.n + 1)
        c, s = math.cos(angle), math.sin(angle)
        matrix[1:3, 1:3] = [[c, -chirality * s], [chirality * s, c]]
        return matrix

    def L(self) -> np.ndarray:
        """Reflection on the horizontal plane, zero on d/ds and the rulings"""
        half = 0.5 * self.theta
        matrix = np.zeros((self.n + 1, self.n + 1))
        matrix[1:3, 1:3] = [[-math.sin(half), math.cos(half)], [math.cos(half), math.sin(half)]]
        return matrix

    def beta(self, X, Y, corrected: bool = False) -> np.ndarray:
        """Coefficients on (xi, eta) of the symmetric form beta, vanishing on the rulings"""
        inv = 1.0 / self.omega ** 2
        if corrected:
            b11, b12, b22 = (0.0, inv), (-inv, 0.0), (0.0, -inv)
        else:
            b11, b12, b22 = (inv, 0.0), (0.0, -inv), (-inv, 0.0)
        x1, x2, y1, y2 = X[1], X[2], Y[1], Y[2]
        return (x1 * y1 * np.array(b11) + (x1 * y2 + x2 * y1) * np.array(b12)
                + x2 * y2 * np.array(b22))


def verify_forms_relation(shape: ShapeData, frame, cp: ConePoint, theta: float, X, Y,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, float]:
    """
    Residuals of alpha_{G_theta}(X,Y) = Psi_theta(R_{-theta} alpha_G(X,Y)
    + 2 kappa sin(theta/2) beta(J_{-theta/2} X, Y)), compared on (xi, eta)
    coefficients scaled by Omega^2.

    'corrected' uses the beta whose chirality matches the rotated matrices,
    'printed' the beta with beta(E1,E1) along xi, and 'reflection' the
    intermediate form written with the reflection L_theta.
    """
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    member = rotate_family(shape, frame, cp, theta, tol)
    ops = RotationOperators(theta=theta, omega=shape.omega, n=frame.n)
    omega2 = shape.omega ** 2

    lhs = member.coefficients(X, Y)
    base = np.array([X @ shape.A_xi @ Y, X @ shape.A_eta @ Y])
    rotated = ops.R(-theta) @ base
    weight = 2.0 * shape.kappa * math.sin(0.5 * theta)
    turned = ops.cal_J(-0.5 * theta) @ X

    residuals = {}
    for label, corrected in (('corrected', True), ('printed', False)):
        rhs = rotated + weight * omega2 * ops.beta(turned, Y, corrected)
        residuals[label] = float(np.max(np.abs(lhs - rhs)))

    L = ops.L()
    JX = ops.cal_J(0.5 * math.pi, chirality=-1) @ X
    JX[0] = 0.0
    JX[3:] = 0.0
    reflection = rotated - weight * np.array([(L @ X) @ Y, (L @ JX) @ Y])
    residuals['reflection'] = float(np.max(np.abs(lhs - reflection)))
    return residuals


def gauss_tensor(A_xi: np.ndarray, A_eta: np.ndarray, omega: float) -> np.ndarray:
    """<alpha(X,W), alpha(Y,Z)> - <alpha(X,Z), alpha(Y,W)> on the E-frame"""
    scale = 1.0 / omega ** 2
    inner = scale * (np.einsum('ij,kl->ijkl', A_xi, A_xi) + np.einsum('ij,kl->ijkl', A_eta, A_eta))
    return np.einsum('iljk->ijkl', inner) - np.einsum('ikjl->ijkl', inner)


def gauss_compatibility(shape: ShapeData, frame, cp: ConePoint, theta: float,
                        kappa_override: Optional[float] = None,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Max difference of the Gauss-equation tensor between the base and member theta"""
    member = rotate_family(shape, frame, cp, theta, tol)
    A_xi, A_eta = member.A_xi, member.A_eta
    if kappa_override is not None:
        A_xi, A_eta = replace(member.scalars, kappa=kappa_override).matrices()
    base = gauss_tensor(shape.A_xi, shape.A_eta, shape.omega)
    other = gauss_tensor(A_xi, A_eta, shape.omega)
    return float(np.max(np.abs(base - other)))


def reflected_member(member: FamilyMember) -> Tuple[np.ndarray, np.ndarray]:
    """Matrices of the same member at the ruling -v, in a frame with the rulings reversed"""
    sc = member.scalars
    flipped = replace(sc, phi=-sc.phi, h=-sc.h)
    A_xi, A_eta = flipped.matrices()
    D = np.ones(sc.n + 1)
    D[3:] = -1.0
    return D[:, None] * A_xi * D[None, :], D[:, None] * A_eta * D[None, :]


def repetition_residuals(shape: ShapeData, frame, cp: ConePoint, theta: float,
                         tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, float]:
    """Compare member theta + pi with member theta directly and after v -> -v"""
    first = rotate_family(shape, frame, cp, theta, tol)
    second = rotate_family(shape, frame, cp, theta + math.pi, tol)
    direct = max(np.max(np.abs(second.A_xi - first.A_xi)), np.max(np.abs(second.A_eta - first.A_eta)))
    R_xi, R_eta = reflected_member(first)
    reflected = max(np.max(np.abs(second.A_xi - R_xi)), np.max(np.abs(second.A_eta - R_eta)))
    return {'direct': float(direct), 'ruling_reflection': float(reflected)}


def family_sweep(samples: Sequence[Tuple[ShapeData, object, ConePoint]], thetas: Sequence[float],
                 seed: int = 0, tol: Tolerances = DEFAULT_TOLERANCES) -> List[Dict]:
    """Per-theta residuals, norms and rank histograms over precomputed cone samples"""
    rng = np.random.default_rng(seed)
    records = []
    for theta in thetas:
        forms = {'corrected': 0.0, 'printed': 0.0, 'reflection': 0.0}
        gauss = normal = norm_gap = repeat_direct = repeat_reflected = 0.0
        ranks: Dict[int, int] = {}
        for shape, frame, cp in samples:
            size = frame.n + 1
            X, Y = rng.normal(size=size), rng.normal(size=size)
            for key, value in verify_forms_relation(shape, frame, cp, theta, X, Y, tol).items():
                forms[key] = max(forms[key], value)
            gauss = max(gauss, gauss_compatibility(shape, frame, cp, theta, tol=tol))
            member = rotate_family(shape, frame, cp, theta, tol)
            normal = max(normal, member.normal_residual())
            base_norm = np.sum(shape.A_xi ** 2) + np.sum(shape.A_eta ** 2)
            norm_gap = max(norm_gap, abs(np.sum(member.A_xi ** 2) + np.sum(member.A_eta ** 2) - base_norm))
            rank = stacked_rank(replace(shape, A_xi=member.A_xi, A_eta=member.A_eta), tol)
            ranks[rank] = ranks.get(rank, 0) + 1
            rep = repetition_residuals(shape, frame, cp, theta, tol)
            repeat_direct = max(repeat_direct, rep['direct'])
            repeat_reflected = max(repeat_reflected, rep['ruling_reflection'])
        records.append({
            'theta': float(theta),
            'forms_residual': forms['corrected'],
            'forms_residual_printed': forms['printed'],
            'reflection_form_residual': forms['reflection'],
            'gauss_residual': gauss,
            'normal_residual': normal,
            'norm_sq_gap': float(norm_gap),
            'rank_histogram': {str(k): v for k, v in sorted(ranks.items())},
            'repeat_after_pi_direct': repeat_direct,
            'repeat_after_pi_reflected': repeat_reflected,
        })
    return records


# ---------------------------------------------------------------------------
# moving-frame integration of g_theta

def _j_theta(theta: float) -> np.ndarray:
    """cos I + sin J on e-frame components, J e1 = e2"""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


HALO = 3
FIRST = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
SECOND = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0


@dataclass
class ConnectionField:
    """
    Frames, e-frame components of the coordinate fields and connection forms
    on the half-step refinement of a chart grid. Node (i, j) of the chart sits
    at index (2i, 2j); odd indices are the RK4 midpoints.
    """
    frames: np.ndarray            # (2Nu-1, 2Nv-1, N, N)
    components: np.ndarray        # (2Nu-1, 2Nv-1, 2, 2)
    omega: np.ndarray             # (2Nu-1, 2Nv-1, N, N, 2)

    def node_frames(self) -> np.ndarray:
        return self.frames[::2, ::2]


def _column_signs(frames: np.ndarray, reference: np.ndarray) -> np.ndarray:
    signs = np.sign(np.sum(frames * reference, axis=-2))
    signs[signs == 0] = 1.0
    return signs


def _align_signs(frames: np.ndarray, reference: np.ndarray) -> np.ndarray:
    return frames * _column_signs(frames, reference)[..., None, :]


def _window(values: np.ndarray, du: int, dv: int) -> np.ndarray:
    nu, nv = values.shape[:2]
    return values[HALO + du:nu - HALO + du, HALO + dv:nv - HALO + dv]


def connection_field(surface: SurfaceModel, us: np.ndarray, vs: np.ndarray, threads: int = 1,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> ConnectionField:
    """
    Evaluate frame_core once per node of the refined grid (halo included) and
    differentiate the frame matrix with 7-point stencils along the grid.
    """
    hu, hv = 0.5 * (us[1] - us[0]), 0.5 * (vs[1] - vs[0])
    fine_u = us[0] + hu * np.arange(-HALO, 2 * len(us) - 1 + HALO)
    fine_v = vs[0] + hv * np.arange(-HALO, 2 * len(vs) - 1 + HALO)
    ranges = (surface.domain.u_range, surface.domain.v_range)
    for axis, fine in ((0, fine_u), (1, fine_v)):
        lo, hi = ranges[axis]
        if not surface.domain.periodic[axis] and (fine[0] < lo or fine[-1] > hi):
            raise DomainError(f"chart [{fine[0]:.6g}, {fine[-1]:.6g}] with its stencil halo leaves [{lo}, {hi}]")

    points = [(u, v) for u in fine_u for v in fine_v]
    cores = parallel_map(lambda point: frame_core(surface, point, tol), points, threads)
    shape = (len(fine_u), len(fine_v))
    frames = np.array([core.frame for core in cores]).reshape(shape + cores[0].frame.shape)
    coords = np.array([core.coords for core in cores]).reshape(shape + (2, 2))

    # one sign convention across the grid, first along u, then every v-line at once;
    # rows of coords follow the signs of e1 and e2
    for i in range(1, shape[0]):
        signs = _column_signs(frames[i, 0], frames[i - 1, 0])
        frames[i, 0] *= signs[None, :]
        coords[i, 0] *= signs[1:3, None]
    for j in range(1, shape[1]):
        signs = _column_signs(frames[:, j], frames[:, j - 1])
        frames[:, j] *= signs[:, None, :]
        coords[:, j] *= signs[:, 1:3, None]

    center = _window(frames, 0, 0)
    partials = []
    for axis, step in ((0, hu), (1, hv)):
        total = np.zeros_like(center)
        for offset, weight in zip(range(-HALO, HALO + 1), FIRST):
            if weight != 0.0:
                shifted = _window(frames, offset, 0) if axis == 0 else _window(frames, 0, offset)
                total += weight * _align_signs(shifted, center)
        partials.append(total / step)

    # mats[c][..., i, j] = <f_i, d_c f_j>
    mats = [np.einsum('...ai,...aj->...ij', center, p) for p in partials]
    coords = _window(coords, 0, 0)
    omega = np.zeros(center.shape + (2,))
    for k in range(2):
        raw = (coords[..., k, 0, None, None] * np.swapaxes(mats[0], -1, -2)
               + coords[..., k, 1, None, None] * np.swapaxes(mats[1], -1, -2))
        omega[..., k] = 0.5 * (raw - np.swapaxes(raw, -1, -2))
    logger.debug("connection field for %s on %dx%d refined nodes", surface.name, *center.shape[:2])
    return ConnectionField(frames=center, components=np.linalg.inv(coords), omega=omega)


class ConnectionCache:
    """Connection forms per base point and per chart grid, shared across theta"""

    def __init__(self, surface: SurfaceModel, tol: Tolerances = DEFAULT_TOLERANCES, threads: int = 1):
        self.surface = surface
        self.tol = tol
        self.threads = threads
        self._store: Dict[Tuple[float, float], Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._fields: Dict[Tuple, ConnectionField] = {}

    def at(self, u: float, v: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(frame, components, omega); row c of components holds the e-frame components of d_c"""
        key = (round(float(u), 14), round(float(v), 14))
        if key not in self._store:
            core = frame_core(self.surface, (u, v), self.tol)
            omega = connection_from_core(self.surface, core, self.tol)
            self._store[key] = (core.frame, np.linalg.inv(core.coords), omega)
        return self._store[key]

    def field(self, us: np.ndarray, vs: np.ndarray) -> ConnectionField:
        key = (round(float(us[0]), 14), round(float(us[-1]), 14), len(us),
               round(float(vs[0]), 14), round(float(vs[-1]), 14), len(vs))
        if key not in self._fields:
            self._fields[key] = connection_field(self.surface, us, vs, self.threads, self.tol)
        return self._fields[key]


def structure_matrices(components: np.ndarray, omega: np.ndarray, theta: float) -> np.ndarray:
    """C[..., c, a, b] = <f_a, d_c f_b> of the frame of g_theta, c = u, v; leading axes broadcast"""
    rot = _j_theta(theta)
    size = omega.shape[-2]
    C = np.einsum('...cm,...bam->...cab', components, omega)
    bent = np.einsum('...cm,...bam->...cab', components @ rot.T, omega)
    C[..., 1:3, 3:size] = bent[..., 1:3, 3:size]
    C[..., 3:size, 1:3] = bent[..., 3:size, 1:3]
    return C


def _orthogonal_part(M: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def _rk4_step(F: np.ndarray, C0: np.ndarray, Cm: np.ndarray, C1: np.ndarray, h: float) -> np.ndarray:
    """One RK4 step of dF = F C, retracted onto O(N); stacks of frames step together"""
    k1 = F @ C0
    k2 = (F + 0.5 * h * k1) @ Cm
    k3 = (F + 0.5 * h * k2) @ Cm
    k4 = (F + h * k3) @ C1
    return _orthogonal_part(F + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


@dataclass
class IntegratedFamily:
    theta: float
    us: np.ndarray
    vs: np.ndarray
    frames: np.ndarray            # (Nu, Nv, N, N)
    closure_residual: float
    cell_residuals: np.ndarray = field(repr=False, default=None)

    @property
    def values(self) -> np.ndarray:
        return self.frames[:, :, :, 0]

    @property
    def step(self) -> Tuple[float, float]:
        return float(self.us[1] - self.us[0]), float(self.vs[1] - self.vs[0])


def chart_origin(surface: SurfaceModel, extent: float) -> Tuple[float, float]:
    origin = []
    for (lo, hi), periodic in zip((surface.domain.u_range, surface.domain.v_range), surface.domain.periodic):
        origin.append(lo if periodic else 0.5 * (lo + hi) - 0.5 * extent)
    return origin[0], origin[1]


def chart_grid(surface: SurfaceModel, grid: Tuple[int, int] = (64, 64), extent: float = 1.0,
               origin: Optional[Tuple[float, float]] = None) -> Tuple[np.ndarray, np.ndarray]:
    u0, v0 = origin if origin is not None else chart_origin(surface, extent)
    return u0 + np.linspace(0.0, extent, grid[0]), v0 + np.linspace(0.0, extent, grid[1])


# refined-grid slices: start, midpoint and end of every chart step
_LO, _MID, _HI = slice(0, -1, 2), slice(1, None, 2), slice(2, None, 2)


def integrate_surface_family(surface: SurfaceModel, theta: float, grid: Tuple[int, int] = (64, 64),
                             extent: float = 1.0, origin: Optional[Tuple[float, float]] = None,
                             connections: Optional[ConnectionCache] = None,
                             tol: Tolerances = DEFAULT_TOLERANCES) -> IntegratedFamily:
    """
    Solve dF = F C_theta on a rectangular chart starting from the frame of g at
    the origin; the first row along v = v0, then all columns together along v.
    Every cell is also closed the other way round and the mismatch reported.
    Pass one ConnectionCache to several calls to reuse the connection field
    across theta.
    """
    nu, nv = grid
    us, vs = chart_grid(surface, grid, extent, origin)
    hu, hv = us[1] - us[0], vs[1] - vs[0]

    connections = connections if connections is not None else ConnectionCache(surface, tol)
    conn = connections.field(us, vs)
    C = structure_matrices(conn.components, conn.omega, theta)
    Cu, Cv = C[:, :, 0], C[:, :, 1]

    size = surface.ambient_dim
    frames = np.zeros((nu, nv, size, size))
    frames[0, 0] = conn.frames[0, 0]
    for i in range(1, nu):
        a = 2 * i - 2
        frames[i, 0] = _rk4_step(frames[i - 1, 0], Cu[a, 0], Cu[a + 1, 0], Cu[a + 2, 0], hu)
    for j in range(1, nv):
        b = 2 * j - 2
        frames[:, j] = _rk4_step(frames[:, j - 1], Cv[::2, b], Cv[::2, b + 1], Cv[::2, b + 2], hv)

    corner = frames[:-1, :-1]
    across = _rk4_step(corner, Cu[_LO, _LO], Cu[_MID, _LO], Cu[_HI, _LO], hu)
    route_uv = _rk4_step(across, Cv[_HI, _LO], Cv[_HI, _MID], Cv[_HI, _HI], hv)
    up = _rk4_step(corner, Cv[_LO, _LO], Cv[_LO, _MID], Cv[_LO, _HI], hv)
    route_vu = _rk4_step(up, Cu[_LO, _HI], Cu[_MID, _HI], Cu[_HI, _HI], hu)
    cells = np.max(np.abs(route_uv - route_vu), axis=(-2, -1))

    closure = float(np.max(cells)) if cells.size else 0.0
    logger.debug("theta=%.4f grid=%dx%d closure=%.3e", theta, nu, nv, closure)
    if closure > 100.0 * tol.integration:
        raise IntegrationDivergedError(f"loop closure {closure:.3e} exceeds {100.0 * tol.integration:.1e}; "
                                       f"refine the grid")
    return IntegratedFamily(theta=theta, us=us, vs=vs, frames=frames, closure_residual=closure,
                            cell_residuals=cells)


def _stencil_jet(block: np.ndarray, point: Tuple[float, float], hu: float, hv: float) -> JetTable:
    mid = HALO
    jet = JetTable(point=point, order=2)
    jet.partials[(0, 0)] = block[mid, mid]
    jet.partials[(1, 0)] = np.tensordot(FIRST, block[:, mid], axes=1) / hu
    jet.partials[(0, 1)] = np.tensordot(FIRST, block[mid, :], axes=1) / hv
    jet.partials[(2, 0)] = np.tensordot(SECOND, block[:, mid], axes=1) / hu ** 2
    jet.partials[(0, 2)] = np.tensordot(SECOND, block[mid, :], axes=1) / hv ** 2
    jet.partials[(1, 1)] = np.einsum('a,b,abk->k', FIRST, FIRST, block) / (hu * hv)
    return jet


def grid_jet(family: IntegratedFamily, i: int, j: int) -> JetTable:
    """Order-2 jet of g_theta at an interior node from 7-point grid stencils"""
    hu, hv = family.step
    block = family.values[i - HALO:i + HALO + 1, j - HALO:j + HALO + 1]
    return _stencil_jet(block, (float(family.us[i]), float(family.vs[j])), hu, hv)


def _jet_metric(jet: JetTable) -> np.ndarray:
    du, dv = jet[(1, 0)], jet[(0, 1)]
    return np.array([[du @ du, du @ dv], [du @ dv, dv @ dv]])


def family_isometry_checks(surface: SurfaceModel, family: IntegratedFamily, stride: int = 8,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, float]:
    """
    Metric and curvature-ellipse comparison of integrated g_theta against g at
    interior nodes. 'metric' compares against the stencil metric of g sampled
    on the same nodes, so stencil truncation cancels; 'metric_analytic'
    compares against the exact metric of g.
    """
    loose = tol.override(minimal=1e-4, iso=1e-3)
    hu, hv = family.step
    metric_gap = analytic_gap = kappa_gap = circle_gap = 0.0
    nu, nv = family.values.shape[:2]
    for i in range(HALO, nu - HALO, stride):
        for j in range(HALO, nv - HALO, stride):
            jet = grid_jet(family, i, j)
            point = jet.point
            g_block = np.array([[surface.evaluate((u, v)) for v in family.vs[j - HALO:j + HALO + 1]]
                                for u in family.us[i - HALO:i + HALO + 1]])
            metric = _jet_metric(jet)
            reference = _jet_metric(_stencil_jet(g_block, point, hu, hv))
            metric_gap = max(metric_gap, float(np.max(np.abs(metric - reference))))
            analytic_gap = max(analytic_gap, float(np.max(np.abs(metric - induced_metric(surface, point, tol)))))
            ellipse = ellipse_from_jet(jet, surface.orientation, loose)
            kappa = frame_core(surface, point, tol).kappa
            kappa_gap = max(kappa_gap, abs(ellipse.kappa - kappa))
            circle_gap = max(circle_gap, abs(ellipse.kappa - ellipse.mu))
    return {'metric': metric_gap, 'metric_analytic': analytic_gap, 'kappa': kappa_gap, 'circle': circle_gap,
            'closure': family.closure_residual}


# ---------------------------------------------------------------------------
# equivariance of the ruled family

def ruling_rotation(t: np.ndarray, angle: float) -> np.ndarray:
    """Rotate ruling coordinates by angle inside each rank-two block (t1,t2), (t3,t4), ..."""
    out = np.array(t, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    for k in range(0, len(out) - 1, 2):
        x, y = out[k], out[k + 1]
        out[k], out[k + 1] = c * x - s * y, s * x + c * y
    return out


def procrustes_rms(source: np.ndarray, target: np.ndarray) -> float:
    rotation, _ = orthogonal_procrustes(source, target)
    return float(np.sqrt(np.mean(np.sum((source @ rotation - target) ** 2, axis=1))))


def equivariance_check(surface: SurfaceModel, theta: float, pseudoholomorphic: bool, samples: int = 500,
                       seed: int = 0, grid: Tuple[int, int] = (24, 24), extent: float = 1.0,
                       multipliers: Sequence[int] = (-3, -2, -1, 0, 1, 2, 3),
                       connections: Optional[ConnectionCache] = None, tol: Tolerances = DEFAULT_TOLERANCES) -> Dict:
    """
    Fit F_theta against F_g composed with the ruling rotation by -theta and
    return the Procrustes RMS, together with the RMS for rotations by m*theta.
    """
    if not pseudoholomorphic:
        raise PreconditionViolation(f"{surface.name} is not pseudoholomorphic")

    connections = connections if connections is not None else ConnectionCache(surface, tol)
    family = integrate_surface_family(surface, theta, grid, extent, connections=connections, tol=tol)
    rng = np.random.default_rng(seed)
    nu, nv = grid
    nodes = np.column_stack([rng.integers(0, nu, samples), rng.integers(0, nv, samples)])
    directions = rng.normal(size=(samples, surface.n - 1))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)

    base_frames = connections.field(family.us, family.vs).node_frames()

    def cloud(angle: Optional[float]) -> np.ndarray:
        rows = []
        for (i, j), d in zip(nodes, directions):
            s, t = d[0], d[1:]
            if angle is None:
                F = family.frames[i, j]
            else:
                F = base_frames[i, j]
                t = ruling_rotation(t, angle)
            rows.append(s * F[:, 0] + F[:, 5:5 + len(t)] @ t)
        return np.array(rows)

    member = cloud(None)
    fits = {int(m): procrustes_rms(member, cloud(m * theta)) for m in multipliers}
    best = min(fits, key=fits.get)
    return {'theta': float(theta), 'rms': fits[-1], 'fits': {str(k): v for k, v in fits.items()},
            'best_multiplier': best, 'closure': family.closure_residual}
