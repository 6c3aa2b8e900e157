//! Pose-label synthesis: project the generic model at a known pose, then
//! recover that pose from the 2D landmarks with the PnP solver.
//!
//!     cargo run --example solve_pose

use facepose::{
    project_points, rodrigues_to_matrix, rotation_geodesic, solve_pnp, CameraIntrinsics,
    Correspondences, GenericModel, Pose6DoF, RotationVector,
};
use nalgebra::Vector3;

fn main() {
    let model = GenericModel::synthetic();
    let cam = CameraIntrinsics::for_crop(256.0).unwrap();
    let truth = Pose6DoF::new(
        RotationVector::new(0.1, 0.6, -0.05).unwrap(),
        Vector3::new(0.08, -0.03, 2.4),
    )
    .unwrap();

    let landmarks = project_points(&model.landmarks, &truth, &cam).unwrap();
    println!(
        "projected {} landmarks at a pose with yaw ≈ {:.1}°",
        landmarks.len(),
        0.6f64.to_degrees()
    );

    let c = Correspondences::from_landmarks(&model.landmarks, &landmarks).unwrap();
    let result = solve_pnp(&c, &cam).unwrap();

    println!("\nsolver result:");
    println!(
        "  converged: {} after {} iterations",
        result.converged, result.iterations
    );
    println!(
        "  rms reprojection error: {:.3e} px",
        result.rms_reprojection_error
    );
    let geo = rotation_geodesic(
        &rodrigues_to_matrix(&truth.rotation),
        &rodrigues_to_matrix(&result.pose.rotation),
    );
    println!("  rotation error: {:.3e} rad", geo);
    println!(
        "  translation error: {:.3e} model units",
        (truth.translation - result.pose.translation).norm()
    );
    println!(
        "  cost history: {:?}",
        result
            .cost_history
            .iter()
            .map(|c| format!("{c:.3e}"))
            .collect::<Vec<_>>()
    );
}
