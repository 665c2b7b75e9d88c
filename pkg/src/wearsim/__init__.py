"""Virtual IMU synthesis on body-surface meshes and placement optimization.

The toolkit turns mesh sequences into per-patch 6-axis inertial traces,
degrades them with a configurable sensor model, scores candidate sensor
locations by activity-classification F1, and picks minimal sensor subsets
meeting a coverage threshold. See the README for the full workflow.
"""

__version__ = "0.1.0"

from .errors import (AllExcluded, BadCount, BadCutoff, BadMagic,
                     BadWorkspace, DegenerateLabels, DegenerateTriangle,
                     DisconnectedMesh, EmptyTestSet, EmptyTrace,
                     EmptyTrainingSet, InsufficientData, InvalidInput,
                     IoFailure, IsolatedVertex, LengthMismatch,
                     MalformedTable, NotARotation, PipelineError, PortInUse,
                     TooManyLocations, TooShortSequence, TopologyMismatch,
                     TruncatedFile, UnknownActivity, UnknownLocation,
                     UnreadablePath, WearsimError, ZeroVariance)
from .mesh import GravityConfig, MeshSequence, MeshTopology, SurfacePatch
from .kinematics import (ACCEL_FRAME_LOCAL, ACCEL_FRAME_MIXED, ImuSample,
                         ImuTrace, PatchFrame, angular_velocity, imu_accel,
                         linear_acceleration, patch_frame, rotation_log,
                         synthesize_imu)
from .sampling import (PatchSet, VertexGraph, build_adjacency,
                       farthest_point_sampling, geodesic_distances,
                       patch_from_center, sample_patches)
from .sensor import (SensorConfig, add_noise, apply_sensor_model,
                     lowpass_filter, resample, seeded_misalignment)
from .features import (FEATURE_DIM, FeatureVector, extract_features,
                       labeled_features, window_trace)
from .utility import (EvalConfig, F1Result, LabeledTraceSet, LogisticModel,
                      TraceEntry, UtilityMatrix, evaluate_f1, rank_locations,
                      rank_values, spearman, train_classifier, utility_matrix)
from .selection import (SelectionRequest, SelectionResult,
                        best_single_location, coverage_score,
                        exhaustive_select, greedy_select)
from .io import (DatasetManifest, ManifestEntry, RunConfig,
                 load_manifest, load_mesh_sequence, load_patch_set,
                 load_run_config, load_utility_matrix, override_seed,
                 save_patch_set, save_selection, write_mesh_sequence,
                 write_utility_matrix)
from .pipeline import PipelineResult, derive_sequence_seed, run_pipeline
