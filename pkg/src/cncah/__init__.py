"""Layout, boundary detection and benchmarking for non-convex ad hoc networks."""
__version__ = "0.1.0"

from .baselines import DHParams, FRParams, dh_layout, fr_layout
from .boundary import Face, PlanarSubdivision, boundary_nodes, split_crossings, traverse_faces
from .criteria import TerminationCriteria
from .errors import (
    CncahError,
    ConfigError,
    DegenerateGeometry,
    DegenerateGraph,
    DisconnectedGraph,
    FormatError,
    InfeasibleParams,
    InvalidParams,
    NonPositive,
    UnknownNode,
)
from .fspl import fspl_distance, fspl_rssi
from .graph import (
    Topology,
    VisualDrawing,
    fit_to_frame,
    hop_matrix,
    parse_graph,
    read_graph,
    serialize_graph,
    write_graph,
)
from .harness import ConfusionCounts, IterationLog, confusion, metrics, run_experiment
from .render import RenderOptions, render_svg
from .spring import (
    LayoutState,
    SpringModel,
    build_spring_model,
    delta,
    energy,
    kk_layout,
    newton_step,
)
from .topogen import GenParams, RegionMask, generate_topology, parse_shape_script, region_contains, synthesize_rssi
from .wkkms import (
    EmptyEdgeSet,
    FoldedRegionReport,
    WeightMap,
    WkkmsParams,
    approx_error,
    bwu,
    calweight,
    est_region,
    wkkms_layout,
)
