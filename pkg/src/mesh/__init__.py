"""Oberflächennetze: Formfunktionen, Geometrie, DOFs, VTK-Ein-/Ausgabe"""

from .shapes import (REFERENCE_NODES, shape_values, shape_table, shape_gradient_table,
                     gauss_rule, gauss_line)
from .surface import (Region, ReferenceMesh, CurrentConfiguration, PanelGeometry,
                      panel_geometry, surface_gradient_basis, map_points,
                      basis_surface_gradients, cell_diameters, LOCAL_EDGES,
                      QuadratureData, quadrature_data)
from .dofs import DofHandler, HangingConstraints, duplicate_edge_nodes, constrain_hanging

__all__ = [
    'REFERENCE_NODES', 'shape_values', 'shape_table', 'shape_gradient_table',
    'gauss_rule', 'gauss_line',
    'Region', 'ReferenceMesh', 'CurrentConfiguration', 'PanelGeometry',
    'panel_geometry', 'surface_gradient_basis', 'map_points',
    'basis_surface_gradients', 'cell_diameters', 'LOCAL_EDGES',
    'QuadratureData', 'quadrature_data', 'DofHandler', 'HangingConstraints', 'duplicate_edge_nodes', 'constrain_hanging',
]
