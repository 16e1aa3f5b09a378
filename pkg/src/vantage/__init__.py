"""Viewpoint evaluation and recommendation for architecture photography.

Camera-frame registration between a mesh and an SfM point cloud,
Lie-group viewpoint clustering, 2D image and 3D geometric feature
extraction over a software rasterizer, a two-view max-margin learner, and
heat-map viewpoint recommendation over a 3D model.
"""

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    DegenerateLogarithmError,
    InvalidMeshError,
    ParseError,
    UnderdeterminedInputError,
    VantageError,
)
from .geometry import (
    Camera,
    RigidTransform,
    SimilarityTransform,
    SphericalCoord,
    se3_exp,
    se3_log,
    to_spherical,
    viewpoint_distance,
)
from .meshio import Mesh, load_mesh, save_obj, save_ply
from .primitives import make_box, make_building, make_icosphere
from .rasterize import FrameData, SilhouettePolygon, extract_silhouette, rasterize, render_shaded
from .registration import (
    CorrespondenceSet,
    RegistrationResult,
    estimate_similarity,
    ingest_sfm,
    transfer_camera,
)
from .clustering import ClusterAssignment, kmedoids, representative_views
from .features2d import Feature2D, FEATURE2D_COLUMNS, extract_2d
from .features3d import CurvatureField, Feature3D, FEATURE3D_COLUMNS, curvature_field, extract_3d
from .learning import (
    Dataset,
    KernelSpec,
    Svm2kModel,
    Svm2kParams,
    crossvalidate,
    decide,
    gram,
    load_model,
    save_model,
    score,
    train_svm,
    train_svm2k,
)
from .recommend import (
    HeatMap,
    ViewpointGrid,
    interpolate_heatmap,
    sample_viewpoints,
    score_viewpoints,
    top_k,
)

__version__ = "0.1.0"
