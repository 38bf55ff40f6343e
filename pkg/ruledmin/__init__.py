"""
Ruled minimal submanifolds package
Cone construction over 1-isotropic minimal surfaces in spheres, its shape
operators, associated family and catalog of input surfaces
"""

from .catalog import CatalogEntry, catalog_names, load_entry
from .config import DEFAULT_TOLERANCES, RunConfig, Tolerances, load_config
from .errors import CatalogError, ConfigError, GeometryError
from .ruled import ConePoint, shape_operators, shape_operators_fd
from .surface import SurfaceModel, adapted_frame

__all__ = [
    'CatalogEntry',
    'CatalogError',
    'ConePoint',
    'ConfigError',
    'DEFAULT_TOLERANCES',
    'GeometryError',
    'RunConfig',
    'SurfaceModel',
    'Tolerances',
    'adapted_frame',
    'catalog_names',
    'load_config',
    'load_entry',
    'shape_operators',
    'shape_operators_fd',
]

__version__ = '1.0.0'
