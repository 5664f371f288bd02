"""palpsim: deterministic visuo-haptic liver palpation trainer.

A deformable liver mesh carrying a disease-dependent stiffness field is
probed by a virtual instrument at a fixed 1 kHz step rate. The engine
renders spring-damper contact forces, enforces tissue-damage thresholds,
records force traces with peak reporting, scores timed diagnostic
questionnaires, and aggregates validity/reliability statistics. Everything
is a deterministic function of (configuration, mesh, seed, input tape), so
sessions replay byte-for-byte.
"""

from . import ctplane, geometry, haptics, session, tissue, validity
from .errors import (
    CalibrationError,
    ConfigurationError,
    MeshLoadError,
    PalpsimError,
    ProtocolError,
    SequencingError,
    TapeError,
)
from .geometry import (
    Bvh,
    DeformableMesh,
    build_bvh,
    closest_point,
    decimate,
    is_inside,
    load_mesh,
    load_mesh_file,
    save_obj,
)
from .haptics import (
    ContactResult,
    ForceClassification,
    HapticConfig,
    ProbeState,
    SimFrame,
    Simulation,
    ToolKind,
    classify_force,
    compute_force,
    resolve_contact,
)
from .session import (
    Phase,
    Session,
    SessionConfig,
    detect_peaks,
    read_tape,
    start_session,
    write_tape,
)
from .tissue import (
    Lesion,
    LesionShape,
    Material,
    ScenarioKind,
    TissueModel,
    calibrate_base_material,
    make_scenario,
    stiffness_at,
)

__version__ = "0.1.0"

__all__ = [
    "ctplane", "geometry", "haptics", "session", "tissue", "validity",
    "CalibrationError", "ConfigurationError", "MeshLoadError", "PalpsimError",
    "ProtocolError", "SequencingError", "TapeError",
    "Bvh", "DeformableMesh", "build_bvh", "closest_point", "decimate",
    "is_inside", "load_mesh", "load_mesh_file", "save_obj",
    "ContactResult", "ForceClassification", "HapticConfig", "ProbeState",
    "SimFrame", "Simulation", "ToolKind", "classify_force", "compute_force",
    "resolve_contact",
    "Phase", "Session", "SessionConfig", "detect_peaks", "read_tape",
    "start_session", "write_tape",
    "Lesion", "LesionShape", "Material", "ScenarioKind", "TissueModel",
    "calibrate_base_material", "make_scenario", "stiffness_at",
    "__version__",
]
