//! The generic 3D face model and landmark prediction by projection.
//!
//! The model is a fixed, person-independent set of 68 3D landmark
//! coordinates. Predicting landmarks for a pose means projecting these
//! points through the pinhole camera, with no shape or expression fitting.
//!
//! The built-in model is procedurally generated, bilaterally symmetric, and
//! normalized so the outer eye corner distance is exactly 1.0 model units.
//! It ships as `data/generic_model_68.json` in the same JSON layout used by
//! all landmark documents.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project_points, CameraIntrinsics, Pose6DoF};
use crate::landmarks::{generic_68_scheme, LandmarkSet2D, LandmarkSet3D};

/// A generic 3D face model: 68 landmark coordinates plus a provenance note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericModel {
    pub landmarks: LandmarkSet3D,
    pub provenance: String,
}

impl GenericModel {
    pub fn new(landmarks: LandmarkSet3D, provenance: impl Into<String>) -> Result<Self> {
        let model = GenericModel {
            landmarks,
            provenance: provenance.into(),
        };
        let iod = model.inter_ocular()?;
        if (iod - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "model inter-ocular distance must be 1.0, got {iod}"
            )));
        }
        Ok(model)
    }

    /// Distance between the outer eye corners, in model units.
    pub fn inter_ocular(&self) -> Result<f64> {
        let left = self
            .landmarks
            .role_point(crate::landmarks::Role::OuterEyeCornerLeft)
            .ok_or_else(|| Error::invalid("model lacks outer_eye_corner_left"))?;
        let right = self
            .landmarks
            .role_point(crate::landmarks::Role::OuterEyeCornerRight)
            .ok_or_else(|| Error::invalid("model lacks outer_eye_corner_right"))?;
        Ok((left - right).norm())
    }

    /// The built-in procedurally generated model.
    pub fn synthetic() -> Self {
        let scheme = generic_68_scheme();
        let landmarks = LandmarkSet3D::new(scheme.id, synthetic_points(), scheme.roles)
            .expect("built-in model is valid");
        GenericModel::new(
            landmarks,
            "procedurally generated bilaterally symmetric 68-point face, \
             inter-ocular distance normalized to 1.0",
        )
        .expect("built-in model is normalized")
    }
}

/// Project the model's reference landmarks through an estimated pose.
///
/// This is exactly `project_points` on the model's 68 points: a single
/// unmodified rigid shape, so the prediction carries no expression or
/// identity variation.
pub fn predict_landmarks(
    pose: &Pose6DoF,
    model: &GenericModel,
    cam: &CameraIntrinsics,
) -> Result<LandmarkSet2D> {
    project_points(&model.landmarks, pose, cam)
}

/// Coordinates for the built-in model. Frame: x grows toward the image
/// right when frontal, y grows down (chin at positive y), z grows away from
/// the camera (the nose tip has the most negative z). The origin sits at the
/// midpoint between the outer eye corners.
fn synthetic_points() -> Vec<Vector3<f64>> {
    let mut pts = vec![Vector3::zeros(); 68];
    let mut set = |i: usize, x: f64, y: f64, z: f64| {
        pts[i] = Vector3::new(x, y, z);
    };
    // Right half of the jawline (9..=16) plus the chin (8); the left half
    // mirrors it exactly.
    set(8, 0.0, 1.00, -0.02);
    let jaw_right = [
        (0.145, 0.97, 0.00),
        (0.28, 0.89, 0.04),
        (0.40, 0.78, 0.10),
        (0.51, 0.65, 0.18),
        (0.60, 0.50, 0.26),
        (0.66, 0.34, 0.32),
        (0.70, 0.18, 0.38),
        (0.72, 0.02, 0.42),
    ];
    for (k, &(x, y, z)) in jaw_right.iter().enumerate() {
        set(9 + k, x, y, z);
        set(7 - k, -x, y, z);
    }
    // Brows: 17..=21 left, 22..=26 right.
    let brow_right = [
        (0.12, -0.18, -0.06),
        (0.22, -0.22, -0.07),
        (0.34, -0.24, -0.07),
        (0.46, -0.22, -0.05),
        (0.58, -0.18, -0.02),
    ];
    for (k, &(x, y, z)) in brow_right.iter().enumerate() {
        set(22 + k, x, y, z);
        set(21 - k, -x, y, z);
    }
    // Nose bridge down the midline, tip at 30.
    set(27, 0.0, -0.02, -0.10);
    set(28, 0.0, 0.10, -0.16);
    set(29, 0.0, 0.21, -0.22);
    set(30, 0.0, 0.30, -0.30);
    // Nose base.
    set(33, 0.0, 0.41, -0.22);
    set(34, 0.08, 0.40, -0.20);
    set(35, 0.16, 0.38, -0.16);
    set(32, -0.08, 0.40, -0.20);
    set(31, -0.16, 0.38, -0.16);
    // Left eye 36..=41: outer corner, upper-outer lid, upper-inner lid,
    // inner corner, lower lid, eye center. Right eye 42..=47 mirrored.
    let eye_left = [
        (-0.50, 0.00, 0.00),
        (-0.42, -0.05, -0.02),
        (-0.30, -0.05, -0.03),
        (-0.22, 0.00, -0.02),
        (-0.36, 0.045, -0.02),
        (-0.36, 0.00, -0.04),
    ];
    let eye_right_order = [45usize, 44, 43, 42, 46, 47];
    for (k, &(x, y, z)) in eye_left.iter().enumerate() {
        set(36 + k, x, y, z);
        set(eye_right_order[k], -x, y, z);
    }
    // Outer mouth ring.
    set(51, 0.0, 0.55, -0.15);
    set(57, 0.0, 0.745, -0.135);
    let mouth_outer_right = [
        (0.09, 0.545, -0.145), // 52
        (0.20, 0.57, -0.12),   // 53
        (0.30, 0.62, -0.08),   // 54 corner
        (0.20, 0.70, -0.11),   // 55
        (0.10, 0.735, -0.13),  // 56
    ];
    let mouth_outer_left = [50usize, 49, 48, 59, 58];
    for (k, &(x, y, z)) in mouth_outer_right.iter().enumerate() {
        set(52 + k, x, y, z);
        set(mouth_outer_left[k], -x, y, z);
    }
    // Inner mouth ring.
    set(62, 0.0, 0.605, -0.125);
    set(66, 0.0, 0.66, -0.125);
    let mouth_inner_right = [
        (0.10, 0.60, -0.12),  // 63
        (0.24, 0.62, -0.085), // 64 corner
        (0.10, 0.655, -0.12), // 65
    ];
    let mouth_inner_left = [61usize, 60, 67];
    for (k, &(x, y, z)) in mouth_inner_right.iter().enumerate() {
        set(63 + k, x, y, z);
        set(mouth_inner_left[k], -x, y, z);
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RotationVector;
    use crate::landmarks::Role;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector2;

    #[test]
    fn synthetic_model_is_normalized() {
        let model = GenericModel::synthetic();
        assert_eq!(model.landmarks.len(), 68);
        assert_abs_diff_eq!(model.inter_ocular().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn shipped_data_file_matches_builtin() {
        let text = include_str!("../data/generic_model_68.json");
        let value: serde_json::Value = serde_json::from_str(text).unwrap();
        let loaded = LandmarkSet3D::from_json(&value).unwrap();
        assert_eq!(loaded, GenericModel::synthetic().landmarks);
    }

    #[test]
    fn synthetic_model_is_mirror_symmetric() {
        let model = GenericModel::synthetic();
        let scheme = generic_68_scheme();
        let mirror = scheme.mirror.unwrap();
        let pts = model.landmarks.points();
        for i in 0..68 {
            let j = mirror[i];
            assert_eq!(pts[i].x, -pts[j].x, "x at {i}");
            assert_eq!(pts[i].y, pts[j].y, "y at {i}");
            assert_eq!(pts[i].z, pts[j].z, "z at {i}");
        }
    }

    #[test]
    fn all_depths_positive_at_working_distance() {
        let model = GenericModel::synthetic();
        // Nose tip sticks out toward the camera; at t_z = 1.0 every point
        // must still be in front of the camera.
        assert!(model.landmarks.points().iter().all(|p| p.z > -1.0));
    }

    #[test]
    fn frontal_projection_is_symmetric_about_midline() {
        let model = GenericModel::synthetic();
        let cam = CameraIntrinsics::for_crop(256.0).unwrap();
        let pose = Pose6DoF::identity_at(2.2);
        let lm = predict_landmarks(&pose, &model, &cam).unwrap();
        let scheme = generic_68_scheme();
        let mirror = scheme.mirror.unwrap();
        let cx = cam.principal_point.x;
        for (i, &j) in mirror.iter().enumerate() {
            let a = lm.points()[i];
            let b = lm.points()[j];
            assert_abs_diff_eq!(a.x - cx, -(b.x - cx), epsilon = 1e-9);
            assert_abs_diff_eq!(a.y, b.y, epsilon = 1e-9);
        }
    }

    #[test]
    fn positive_yaw_brings_right_eye_closer() {
        let model = GenericModel::synthetic();
        let pose = Pose6DoF::new(
            RotationVector::new(0.0, 45f64.to_radians(), 0.0).unwrap(),
            nalgebra::Vector3::new(0.0, 0.0, 2.2),
        )
        .unwrap();
        let r = crate::geometry::rodrigues_to_matrix(&pose.rotation);
        let depth = |role: Role| {
            let p = model.landmarks.role_point(role).unwrap();
            (r.matrix() * p + pose.translation).z
        };
        assert!(depth(Role::EyeCenterRight) < depth(Role::EyeCenterLeft));
    }

    #[test]
    fn rigidity_across_poses() {
        // Predicted sets at two poses differ by exactly the relative
        // projective motion: re-projecting with the second pose reproduces
        // the second prediction point for point.
        let model = GenericModel::synthetic();
        let cam = CameraIntrinsics::for_crop(128.0).unwrap();
        let a = Pose6DoF::identity_at(2.0);
        let b = Pose6DoF::new(
            RotationVector::new(0.1, 0.4, -0.05).unwrap(),
            nalgebra::Vector3::new(0.05, -0.02, 2.4),
        )
        .unwrap();
        let la = predict_landmarks(&a, &model, &cam).unwrap();
        let lb = predict_landmarks(&b, &model, &cam).unwrap();
        assert_eq!(la.len(), lb.len());
        // No per-point deformation: both are projections of the same rigid
        // point set.
        let mb = crate::geometry::build_projection_matrix(&b, &cam);
        for (i, p) in model.landmarks.points().iter().enumerate() {
            let q = mb * p.push(1.0);
            assert_abs_diff_eq!(
                lb.points()[i],
                Vector2::new(q.x / q.z, q.y / q.z),
                epsilon = 1e-12
            );
        }
    }
}
