"""frontmesh: advancing-front triangle meshing of signed-distance fields."""

from ._kernels import BACKEND, backend_name
from .fields import (
    AnalyticField,
    Box,
    CountedField,
    CurvatureWalkError,
    Intersection,
    MlpWeights,
    NeuralField,
    Plane,
    QueryCounter,
    ScalarField,
    SmoothUnion,
    Sphere,
    Torus,
    TranslatedScaled,
    Union,
    directional_curvature,
    load_mlp_field,
    load_scene,
    project_to_surface,
)
from .halfedge import DegenerateTriangleError, HalfedgeMesh, NonManifoldError
from .kdtree import VertexKdTree
from .marching import GridSpec, extract, matched_resolution
from .mesher import Mesher, MeshingParams, RunReport, initialize, run, select_batch
from .overlap import OverlapParams, scan_candidate, select_existing_vertex, triangle_overlap
from .predictor import (
    AnalyticPredictor,
    BoundaryEdgeFrame,
    ConstantPredictor,
    MlpPredictor,
    Prediction,
    apply_prediction,
    build_embedding,
    build_frame,
    predict_analytic,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticField", "AnalyticPredictor", "BACKEND", "BoundaryEdgeFrame",
    "Box", "ConstantPredictor", "CountedField", "CurvatureWalkError",
    "DegenerateTriangleError", "GridSpec", "HalfedgeMesh", "Intersection",
    "Mesher", "MeshingParams", "MlpPredictor", "MlpWeights", "NeuralField",
    "NonManifoldError", "OverlapParams", "Plane", "Prediction",
    "QueryCounter", "RunReport", "ScalarField", "SmoothUnion", "Sphere",
    "Torus", "TranslatedScaled", "Union", "VertexKdTree",
    "apply_prediction", "backend_name", "build_embedding", "build_frame",
    "directional_curvature", "extract", "initialize", "load_mlp_field",
    "load_scene", "matched_resolution", "predict_analytic",
    "project_to_surface", "run", "scan_candidate", "select_batch",
    "select_existing_vertex", "triangle_overlap",
]
