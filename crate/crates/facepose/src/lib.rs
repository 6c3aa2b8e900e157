//! # facepose
//!
//! Geometric core for landmark-free face alignment built around a 6DoF head
//! pose: rotation vector plus translation under a pinhole camera.
//!
//! What the crate provides:
//!
//! - **Pose geometry**: axis-angle/matrix/Euler conversions and pinhole
//!   projection ([`geometry`]).
//! - **Pose labels from landmarks**: a PnP solver (DLT initialization,
//!   Levenberg–Marquardt refinement) that turns detected 2D landmarks plus a
//!   generic 3D model into 6DoF training labels ([`pnp`]).
//! - **Training-set augmentation**: in-plane transforms sampled from fixed
//!   distributions, applied to boxes and landmarks, with labels recomputed
//!   from the transformed landmarks ([`augment`]).
//! - **2D alignment**: yaw-gated similarity warp of projected landmarks to a
//!   reference template ([`alignment`]).
//! - **Landmarks from pose**: projecting the fixed 68-point generic model
//!   through an estimated pose ([`face_model`]).
//! - **Benchmark metrics**: inter-ocular-normalized landmark error, mean
//!   error rate, threshold fractions, accumulative error curves and AUC
//!   ([`evaluation`]).
//! - **A small pose regressor**: a dense feed-forward network with manual
//!   backpropagation trained on synthetically rasterized views
//!   ([`regressor`]).
//!
//! Each capability has a runnable demo under `examples/`; the `facepose`
//! binary exposes the same operations as subcommands for file-based
//! pipelines.
//!
//! Everything here is a pure function over immutable values and safe to
//! call from any number of threads; seeded operations take an owned random
//! stream (see [`augment::worker_seed`] for splitting streams across
//! workers). Training runs single-threaded so a (dataset, hyperparameters,
//! seed) triple reproduces the model bitwise.

pub mod alignment;
pub mod augment;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod face_model;
pub mod geometry;
pub mod landmarks;
pub mod pnp;
pub mod regressor;
pub mod synth;

pub use error::{Error, Result};
pub use face_model::{predict_landmarks, GenericModel};
pub use geometry::{
    build_projection_matrix, euler_to_matrix, matrix_to_euler, matrix_to_rodrigues, project_points,
    rodrigues_to_matrix, rotation_geodesic, CameraIntrinsics, EulerAngles, EulerDecomposition,
    Pose6DoF, RotationMatrix, RotationVector,
};
pub use landmarks::{generic_68_scheme, LandmarkScheme, LandmarkSet2D, LandmarkSet3D, Role};
pub use pnp::{solve_pnp, synthesize_pose_label, Correspondences, PnPResult};
