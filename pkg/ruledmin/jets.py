"""
Jets of ambient-valued maps on a 2-domain.
Exact partials come from closed-form providers or from truncated Taylor
arithmetic; fd_jet is the finite-difference oracle used to check both.

Complex coordinates are packed as (x1, y1, x2, y2, ...) throughout.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DegenerateBasisError, DomainError, GeometryError, UnsupportedOrderError


MAX_ORDER = 4

MultiIndex = Tuple[int, int]


@dataclass
class JetTable:
    """Partials ∂_u^i ∂_v^j g at a base point, i + j <= order"""
    point: Tuple[float, float]
    order: int
    partials: Dict[MultiIndex, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, index: MultiIndex) -> np.ndarray:
        return self.partials[index]

    @property
    def value(self) -> np.ndarray:
        return self.partials[(0, 0)]

    @property
    def dim(self) -> int:
        return self.value.shape[0]

    def of_order(self, k: int) -> List[np.ndarray]:
        """Partials of total order k, ordered (k,0), (k-1,1), ..., (0,k)"""
        return [self.partials[(k - j, j)] for j in range(k + 1)]


def multi_indices(order: int) -> Iterable[MultiIndex]:
    for total in range(order + 1):
        for j in range(total + 1):
            yield (total - j, j)


def multilinear(jet: JetTable, vectors: Sequence[Sequence[float]]) -> np.ndarray:
    """
    Evaluate the order-k derivative tensor D^k g on coordinate vectors.
    With k = len(vectors), returns sum over slot assignments of
    x1[a1] ... xk[ak] ∂_{a1...ak} g.
    """
    k = len(vectors)
    if k > jet.order:
        raise UnsupportedOrderError(f"jet of order {jet.order} cannot evaluate order {k}")

    result = np.zeros(jet.dim)
    for slots in itertools.product((0, 1), repeat=k):
        weight = 1.0
        for vec, slot in zip(vectors, slots):
            weight *= vec[slot]
        if weight == 0.0:
            continue
        n_v = sum(slots)
        result = result + weight * jet.partials[(k - n_v, n_v)]
    return result


class TaylorJet:
    """
    Truncated bivariate Taylor polynomial: coef[i, j] multiplies du^i dv^j.
    Supports the arithmetic needed to push exact jets through trigonometric
    and polynomial surface formulas.
    """

    __slots__ = ('coef', 'order')

    def __init__(self, coef: np.ndarray, order: int = MAX_ORDER):
        self.coef = coef
        self.order = order

    @classmethod
    def constant(cls, value: float, order: int = MAX_ORDER) -> "TaylorJet":
        coef = np.zeros((order + 1, order + 1))
        coef[0, 0] = value
        return cls(coef, order)

    @classmethod
    def variables(cls, u: float, v: float, order: int = MAX_ORDER) -> Tuple["TaylorJet", "TaylorJet"]:
        ju = cls.constant(u, order)
        jv = cls.constant(v, order)
        if order >= 1:
            ju.coef[1, 0] = 1.0
            jv.coef[0, 1] = 1.0
        return ju, jv

    def _truncate(self, coef: np.ndarray) -> np.ndarray:
        i, j = np.indices(coef.shape)
        coef[i + j > self.order] = 0.0
        return coef

    def _lift(self, other) -> "TaylorJet":
        if isinstance(other, TaylorJet):
            return other
        return TaylorJet.constant(float(other), self.order)

    @property
    def value(self) -> float:
        return float(self.coef[0, 0])

    def __add__(self, other):
        other = self._lift(other)
        return TaylorJet(self.coef + other.coef, self.order)

    __radd__ = __add__

    def __neg__(self):
        return TaylorJet(-self.coef, self.order)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, TaylorJet):
            return TaylorJet(self.coef * float(other), self.order)
        n = self.order + 1
        out = np.zeros((n, n))
        a, b = self.coef, other.coef
        for i in range(n):
            for j in range(n - i):
                if a[i, j] == 0.0:
                    continue
                out[i:, j:] += a[i, j] * b[:n - i, :n - j]
        return TaylorJet(self._truncate(out), self.order)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if power < 0 or int(power) != power:
            raise GeometryError("TaylorJet supports non-negative integer powers only")
        result = TaylorJet.constant(1.0, self.order)
        for _ in range(int(power)):
            result = result * self
        return result

    def _nilpotent(self) -> "TaylorJet":
        coef = self.coef.copy()
        coef[0, 0] = 0.0
        return TaylorJet(coef, self.order)

    def _series(self, derivatives: Sequence[float]) -> "TaylorJet":
        """f(x0 + d) = sum_k f^(k)(x0) d^k / k!, d nilpotent of degree order+1"""
        d = self._nilpotent()
        result = TaylorJet.constant(derivatives[0], self.order)
        power = TaylorJet.constant(1.0, self.order)
        for k in range(1, self.order + 1):
            power = power * d
            result = result + power * (derivatives[k] / math.factorial(k))
        return result

    def sin(self) -> "TaylorJet":
        x0 = self.value
        cycle = [math.sin(x0), math.cos(x0), -math.sin(x0), -math.cos(x0)]
        return self._series([cycle[k % 4] for k in range(self.order + 1)])

    def cos(self) -> "TaylorJet":
        x0 = self.value
        cycle = [math.cos(x0), -math.sin(x0), -math.cos(x0), math.sin(x0)]
        return self._series([cycle[k % 4] for k in range(self.order + 1)])

    def partial(self, i: int, j: int) -> float:
        return float(self.coef[i, j] * math.factorial(i) * math.factorial(j))


def jet_table_from_taylor(components: Sequence[TaylorJet], point, order: int) -> JetTable:
    """Collect per-component Taylor jets into a JetTable"""
    table = JetTable(point=(float(point[0]), float(point[1])), order=order)
    for index in multi_indices(order):
        table.partials[index] = np.array([c.partial(*index) for c in components])
    return table


def analytic_jet(surface, point, order: int, tol: Tolerances = DEFAULT_TOLERANCES) -> JetTable:
    """Exact partials up to `order` from the surface's jet provider"""
    if order > MAX_ORDER or order < 0:
        raise UnsupportedOrderError(f"order {order} not in 0..{MAX_ORDER}")

    u, v = surface.domain.normalize(point)
    table = surface.jet_provider(u, v, order)
    norm = np.linalg.norm(table.value)
    if abs(norm - 1.0) > tol.jet:
        raise GeometryError(f"{surface.name}: image off the unit sphere at {point} (|g| = {norm})")
    return table


def central_weights(derivative: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the O(h^2) central stencil for a 1-D derivative"""
    half = (derivative + 1) // 2
    nodes = np.arange(-half, half + 1, dtype=float)
    size = len(nodes)
    vander = np.array([[node ** m / math.factorial(m) for node in nodes] for m in range(size)])
    rhs = np.zeros(size)
    rhs[derivative] = 1.0
    return nodes, np.linalg.solve(vander, rhs)


def fd_error_bound(step: float, k: int, scale: float = 1.0) -> float:
    """Documented error model of fd_jet: truncation O(step^2) plus roundoff eps/step^k"""
    if k == 0:
        return 1e-15 * scale
    return scale * (10.0 * step ** 2 + 64.0 * np.finfo(float).eps / step ** k)


def fd_jet(surface, point, order: int, step: float) -> JetTable:
    """Central-difference partials, O(step^2) per derivative order"""
    if step <= 0.0:
        raise GeometryError(f"finite-difference step must be positive, got {step}")
    if order > MAX_ORDER or order < 0:
        raise UnsupportedOrderError(f"order {order} not in 0..{MAX_ORDER}")

    u, v = float(point[0]), float(point[1])
    reach = (order + 1) // 2 * step
    if not surface.domain.contains_box(u, v, reach):
        raise DomainError(f"stencil of radius {reach} escapes the domain at {point}")

    cache: Dict[Tuple[float, float], np.ndarray] = {}

    def value_at(du: float, dv: float) -> np.ndarray:
        key = (du, dv)
        if key not in cache:
            cache[key] = surface.jet_provider(*surface.domain.normalize((u + du * step, v + dv * step)), 0).value
        return cache[key]

    table = JetTable(point=(u, v), order=order)
    for i, j in multi_indices(order):
        nodes_u, weights_u = central_weights(i)
        nodes_v, weights_v = central_weights(j)
        acc = 0.0
        for a, wa in zip(nodes_u, weights_u):
            for b, wb in zip(nodes_v, weights_v):
                if wa * wb != 0.0:
                    acc = acc + wa * wb * value_at(a, b)
        table.partials[(i, j)] = np.asarray(acc) / step ** (i + j)
    return table


def project_orthogonal(v, basis: Sequence[np.ndarray], tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Component of v orthogonal to span(basis)"""
    v = np.asarray(v, dtype=float)
    if len(basis) == 0:
        return v.copy()

    matrix = np.column_stack([np.asarray(b, dtype=float) for b in basis])
    q, r = np.linalg.qr(matrix)
    diag = np.abs(np.diag(r))
    scale = max(np.max(np.linalg.norm(matrix, axis=0)), 1.0)
    if np.min(diag) <= tol.lin * scale:
        raise DegenerateBasisError(f"basis of {matrix.shape[1]} vectors is rank deficient")
    return v - q @ (q.T @ v)
