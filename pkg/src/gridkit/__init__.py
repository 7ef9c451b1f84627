"""Grid-based PDE toolkit: geometry, refinable grids, dof mappers, grid
functions, VTK output, a type registry, simulated parallel communication,
and the P2 finite-element / upwind finite-volume demo schemes."""

from .errors import (CapabilityError, ConstructionError, ConvergenceError,
                     DomainError, FactoryLookupError, GridKitError,
                     IllegalPartitionError, InvalidationError, NumericError,
                     ProtocolError, ShapeError, StateError)
from .geometry import (AffineGeometry, GeometryType, ReferenceElement, Vector,
                       cube, line, quadrilateral, referenceElement, simplex,
                       triangle, vertex)
from .grid import (Entity, GridView, HierarchicalGrid, IndexSet, Intersection,
                   Marker, PartitionKind, PartitionType, PartitionView)
from .gridfunction import (GridFunction, LocalFunction, gridFunction,
                           gridFunctionFromGlobal, gridFunctionFromLocal,
                           integrate, interpolateP1, p1Function)
from .io import Triangulation, readGridJSON, triangulation, writeVTK
from .mapper import MCMGMapper, makeMapper
from .parcomm import (CommOp, RankView, SimPartition, buildRankViews,
                      communicate, communicateAdd, communicateSet,
                      partitionByCoordinate)
from .quadrature import (QuadraturePoint, QuadratureRule, Rules,
                         quadratureRule, quadratureRules)
from .registry import (Registry, TypeDescriptor, defaultRegistry, describe,
                       generateTypeName, insertClass, moduleKey,
                       resolveFactory)
from .schemes import (FVState, SparseMatrix, applyDirichlet, boundaryDofsP2,
                      cgSolve, femAssembleP2, fvInitialize, fvLayout, fvRun,
                      fvStep, l2Norm2, l2Norm2Loop, p2Function)
from .simplexgrid import SimplexGridData, conformGrid, simplexGrid
from .structured import CartesianDomain, cartesianDomain, structuredGrid

__version__ = "0.1.0"
