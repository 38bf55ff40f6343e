"""
Closed-form input surfaces with declared properties.
Declared flags are claims: load_entry() re-measures them on a seeded sample.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import CatalogError, GeometryError, InvalidParametersError, NotMinimalError
from .jets import JetTable, TaylorJet, analytic_jet, jet_table_from_taylor, multi_indices
from .surface import (
    Domain,
    SurfaceModel,
    gauss_curvature,
    higher_forms,
    is_one_isotropic,
    normal_split_from_jet,
    sample_points,
    second_form,
    tangent_from_jet,
)


logger = logging.getLogger(__name__)

FLAGS = ('minimal', 'substantial', 'one_isotropic', 'pseudoholomorphic', 'regular', 'flat')

TWO_PI = 2.0 * math.pi


@dataclass
class CatalogEntry:
    name: str
    surface: SurfaceModel
    declared: Dict[str, bool]
    provenance: str
    control: bool = False
    measured: Dict[str, bool] = field(default_factory=dict)
    residuals: Dict[str, float] = field(default_factory=dict)

    def manifest(self) -> Dict:
        return {
            'name': self.name,
            'ambient_dim': self.surface.ambient_dim,
            'control': self.control,
            'declared': dict(self.declared),
            'measured': dict(self.measured),
            'residuals': dict(self.residuals),
            'provenance': self.provenance,
        }


# ---------------------------------------------------------------------------
# exponential tori

def _exponential_provider(radii: np.ndarray, freqs: np.ndarray) -> Callable[[float, float, int], JetTable]:
    """Jets of (r_j exp(i w_j . x))_j packed as (x1, y1, x2, y2, ...)"""

    def provider(u: float, v: float, order: int) -> JetTable:
        table = JetTable(point=(u, v), order=order)
        base = radii * np.exp(1j * (freqs @ np.array([u, v])))
        for i, j in multi_indices(order):
            z = (1j) ** (i + j) * freqs[:, 0] ** i * freqs[:, 1] ** j * base
            table.partials[(i, j)] = np.column_stack([z.real, z.imag]).ravel()
        return table

    return provider


def exponential_harmonicity(radii: np.ndarray, freqs: np.ndarray) -> float:
    """max_j |w_j^T G^{-1} w_j - 2| over active components, G the flat induced metric"""
    metric = sum(r * r * np.outer(w, w) for r, w in zip(radii, freqs))
    inverse = np.linalg.inv(metric)
    active = [w for r, w in zip(radii, freqs) if r > 0.0]
    return max(abs(w @ inverse @ w - 2.0) for w in active)


def exponential_torus(radii: Sequence[float], freqs: Sequence[Sequence[float]], name: str = 'exponential-torus',
                      declared: Optional[Dict[str, bool]] = None, normal_ranks=None, control: bool = False,
                      provenance: str = 'user-parametrized exponential torus',
                      tol: Tolerances = DEFAULT_TOLERANCES) -> CatalogEntry:
    radii = np.asarray(radii, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    if radii.shape != (3,) or freqs.shape != (3, 2):
        raise InvalidParametersError("exponential torus takes 3 radii and 3 frequency 2-vectors")
    if abs(radii @ radii - 1.0) > tol.jet:
        raise InvalidParametersError(f"sum of squared radii is {radii @ radii}, must be 1")
    if np.any(radii < 0.0):
        raise InvalidParametersError("radii must be non-negative")
    try:
        balance = exponential_harmonicity(radii, freqs)
    except np.linalg.LinAlgError:
        raise InvalidParametersError("frequencies do not give an immersion")
    if balance > tol.minimal:
        raise NotMinimalError(f"{name}: harmonicity residual {balance:.3e}")

    surface = SurfaceModel(
        name=name,
        ambient_dim=6,
        domain=Domain((0.0, TWO_PI), (0.0, TWO_PI), (True, True)),
        jet_provider=_exponential_provider(radii, freqs),
        normal_ranks=normal_ranks,
    )
    return CatalogEntry(name=name, surface=surface, declared=dict(declared or {}),
                        provenance=provenance, control=control)


def equilateral_torus() -> CatalogEntry:
    """(1/sqrt3)(e^{iu}, e^{iv}, e^{-i(u+v)}): flat 1-isotropic torus in S^5"""
    third = 1.0 / math.sqrt(3.0)
    return exponential_torus(
        [third, third, third], [(1, 0), (0, 1), (-1, -1)],
        name='equilateral-torus',
        declared={'minimal': True, 'substantial': True, 'one_isotropic': True,
                  'pseudoholomorphic': False, 'regular': True, 'flat': True},
        normal_ranks=(2, 1),
        provenance='explicit flat 1-isotropic torus in S^5 (equilateral exponential torus)',
    )


def clifford_control() -> CatalogEntry:
    """Clifford torus in S^3 inside S^5; minimal but neither substantial nor isotropic"""
    half = 1.0 / math.sqrt(2.0)
    return exponential_torus(
        [half, half, 0.0], [(1, 0), (0, 1), (0, 0)],
        name='clifford-control',
        declared={'minimal': True, 'substantial': False, 'one_isotropic': False,
                  'pseudoholomorphic': False, 'regular': True, 'flat': True},
        control=True,
        provenance='negative control: Clifford torus, kappa = 1 and mu = 0',
    )


# ---------------------------------------------------------------------------
# degree-3 harmonic sphere

HARMONICS = (
    lambda x, y, z: z * (z * z * 5.0 - 3.0),
    lambda x, y, z: x * (z * z * 5.0 - 1.0),
    lambda x, y, z: y * (z * z * 5.0 - 1.0),
    lambda x, y, z: z * (x * x - y * y),
    lambda x, y, z: x * y * z,
    lambda x, y, z: x * (x * x - y * y * 3.0),
    lambda x, y, z: y * (x * x * 3.0 - y * y),
)


@lru_cache(maxsize=1)
def harmonic_normalization() -> np.ndarray:
    """Per-harmonic factors giving equal L^2 norms and a unit-norm image"""
    nodes, weights = np.polynomial.legendre.leggauss(8)
    phi = TWO_PI * np.arange(16) / 16.0
    z = np.repeat(nodes, 16)
    w = np.repeat(weights, 16) * (TWO_PI / 16.0)
    sin_t = np.sqrt(1.0 - z * z)
    x = sin_t * np.tile(np.cos(phi), 8)
    y = sin_t * np.tile(np.sin(phi), 8)

    norms = np.array([math.sqrt(np.sum(w * Y(x, y, z) ** 2)) for Y in HARMONICS])
    pole = np.array([Y(0.0, 0.0, 1.0) for Y in HARMONICS]) / norms
    return 1.0 / (norms * np.linalg.norm(pole))


def _boruvka_provider(u: float, v: float, order: int) -> JetTable:
    theta, phi = TaylorJet.variables(u, v, order)
    sin_t = theta.sin()
    x, y, z = sin_t * phi.cos(), sin_t * phi.sin(), theta.cos()
    factors = harmonic_normalization()
    components = [Y(x, y, z) * f for Y, f in zip(HARMONICS, factors)]
    return jet_table_from_taylor(components, (u, v), order)


def boruvka_sphere() -> CatalogEntry:
    """Minimal 2-sphere in S^6 built from the degree-3 harmonics; K = 1/6"""
    margin = 0.3
    surface = SurfaceModel(
        name='boruvka-sphere',
        ambient_dim=7,
        domain=Domain((margin, math.pi - margin), (0.0, TWO_PI), (False, True)),
        jet_provider=_boruvka_provider,
        normal_ranks=(2, 2),
    )
    return CatalogEntry(
        name='boruvka-sphere', surface=surface,
        declared={'minimal': True, 'substantial': True, 'one_isotropic': True,
                  'pseudoholomorphic': True, 'regular': True, 'flat': False},
        provenance='standard minimal immersion of S^2 by degree-3 spherical harmonics, '
                   'normalized at runtime by quadrature',
    )


def great_sphere() -> SurfaceModel:
    """Totally geodesic S^2 in S^5, chart away from the poles"""

    def provider(u: float, v: float, order: int) -> JetTable:
        ju, jv = TaylorJet.variables(u, v, order)
        cos_u = ju.cos()
        zero = TaylorJet.constant(0.0, order)
        return jet_table_from_taylor([cos_u * jv.cos(), cos_u * jv.sin(), ju.sin(), zero, zero, zero],
                                     (u, v), order)

    return SurfaceModel(name='great-sphere', ambient_dim=6,
                        domain=Domain((-1.2, 1.2), (0.0, TWO_PI), (False, True)),
                        jet_provider=provider)


# ---------------------------------------------------------------------------
# flag measurement

def _circle_defect(values: List[np.ndarray]) -> float:
    first, second = values
    scale = max(first @ first, second @ second, 1e-300)
    return max(abs(first @ first - second @ second), 2.0 * abs(first @ second)) / scale


def measure_flags(surface: SurfaceModel, points, tol: Tolerances = DEFAULT_TOLERANCES):
    """Re-derive every catalog flag at the given points; returns (flags, residuals)"""
    residuals = {'minimality': 0.0, 'max_abs_K': 0.0, 'ellipse_gap': 0.0, 'higher_circle_defect': 0.0}
    minimal = True
    ranks_seen = set()
    curvatures = []

    for point in points:
        try:
            form = second_form(surface, point, tol)
            residuals['minimality'] = max(residuals['minimality'], form.minimality_residual)
        except NotMinimalError as exc:
            logger.warning("%s", exc)
            minimal = False
        jet = analytic_jet(surface, point, 4, tol)
        split = normal_split_from_jet(jet, tangent_from_jet(jet, surface.orientation, tol), tol)
        ranks_seen.add(split.ranks)
        curvatures.append(gauss_curvature(surface, point, tol))

    isotropic, records = is_one_isotropic(surface, points, tolerances=tol)
    gaps = [r['gap'] for r in records if 'gap' in r]
    residuals['ellipse_gap'] = max(gaps) if gaps else float('inf')

    ranks = next(iter(ranks_seen)) if len(ranks_seen) == 1 else None
    substantial = ranks is not None and sum(ranks) == surface.n
    regular = len(ranks_seen) == 1 and all(r > 0 for r in next(iter(ranks_seen)))
    residuals['max_abs_K'] = float(np.max(np.abs(curvatures)))
    residuals['mean_K'] = float(np.mean(curvatures))
    flat = residuals['max_abs_K'] <= 1e-8

    pseudo = False
    if isotropic and substantial and surface.n % 2 == 0:
        defect = 0.0
        for point in points:
            for level in range(2, len(ranks) + 1):
                defect = max(defect, _circle_defect(higher_forms(surface, point, level, tol).values))
        residuals['higher_circle_defect'] = defect
        pseudo = defect <= 1e-6

    flags = {'minimal': minimal, 'substantial': substantial, 'one_isotropic': isotropic and minimal,
             'pseudoholomorphic': pseudo, 'regular': regular, 'flat': flat}
    return flags, residuals


def certify(entry: CatalogEntry, samples: int = 8, seed: int = 0,
            tol: Tolerances = DEFAULT_TOLERANCES) -> CatalogEntry:
    points = sample_points(entry.surface, samples, seed)
    entry.measured, entry.residuals = measure_flags(entry.surface, points, tol)
    return entry


CATALOG: Dict[str, Callable[[], CatalogEntry]] = {
    'equilateral-torus': equilateral_torus,
    'clifford-control': clifford_control,
    'boruvka-sphere': boruvka_sphere,
}


def catalog_names() -> List[str]:
    return sorted(CATALOG)


def load_entry(name: str, verify: bool = True, samples: int = 8, seed: int = 0,
               tol: Tolerances = DEFAULT_TOLERANCES) -> CatalogEntry:
    """Build a catalog entry and re-verify its declared flags"""
    from .validator import CatalogVerifier

    if name not in CATALOG:
        raise CatalogError(f"Unknown surface '{name}' (available: {', '.join(catalog_names())})")
    entry = CATALOG[name]()
    if not verify:
        return entry

    try:
        certify(entry, samples, seed, tol)
    except GeometryError as exc:
        raise CatalogError(f"{name}: verification failed: {exc}")
    result = CatalogVerifier(entry).verify()
    for warning in result['warnings']:
        logger.warning("%s: %s", name, warning)
    if result['errors']:
        raise CatalogError(f"{name}: " + "; ".join(result['errors']))
    return entry


def manifest(entries: Sequence[CatalogEntry]) -> Dict:
    return {'schema': '1', 'entries': [entry.manifest() for entry in entries]}
