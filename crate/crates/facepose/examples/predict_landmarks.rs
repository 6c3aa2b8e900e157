//! Landmarks from pose: project the generic model's fixed 3D landmarks
//! through an estimated pose, and close the loop against label synthesis.
//!
//!     cargo run --example predict_landmarks

use facepose::{
    predict_landmarks, project_points, synthesize_pose_label, CameraIntrinsics, GenericModel,
    Pose6DoF, Role, RotationVector,
};
use nalgebra::Vector3;

fn main() {
    let model = GenericModel::synthetic();
    let cam = CameraIntrinsics::for_crop(256.0).unwrap();
    let pose = Pose6DoF::new(
        RotationVector::new(-0.1, 0.4, 0.08).unwrap(),
        Vector3::new(0.05, 0.02, 2.3),
    )
    .unwrap();

    // Pretend these projections are detector output, recover the pose from
    // them, and predict landmarks back.
    let detected = project_points(&model.landmarks, &pose, &cam).unwrap();
    let estimated = synthesize_pose_label(&detected, &model.landmarks, &cam).unwrap();
    let predicted = predict_landmarks(&estimated, &model, &cam).unwrap();

    let max_err = detected
        .points()
        .iter()
        .zip(predicted.points())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    println!("closed loop: synthesize → predict");
    println!(
        "  max landmark deviation: {:.3e} px over {} points",
        max_err,
        predicted.len()
    );

    println!("\nselected predicted roles:");
    for role in [
        Role::OuterEyeCornerLeft,
        Role::EyeCenterLeft,
        Role::NoseTip,
        Role::EyeCenterRight,
        Role::OuterEyeCornerRight,
        Role::MouthCornerLeft,
        Role::MouthCornerRight,
    ] {
        let p = predicted.role_point(role).unwrap();
        println!("  {role:?}: ({:.2}, {:.2})", p.x, p.y);
    }
}
