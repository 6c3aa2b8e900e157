//! Yaw-gated 2D alignment: fit the similarity that warps projected
//! landmarks onto the reference template, frontal and profile.
//!
//!     cargo run --example align_crop

use facepose::alignment::{align_face, select_alignment_points, ReferenceTemplate};
use facepose::{
    euler_to_matrix, matrix_to_rodrigues, CameraIntrinsics, EulerAngles, GenericModel, Pose6DoF,
};
use nalgebra::Vector3;

fn main() {
    let model = GenericModel::synthetic();
    let cam = CameraIntrinsics::for_crop(256.0).unwrap();
    let template = ReferenceTemplate::default_for_crop(256.0).unwrap();

    for yaw_deg in [0.0f64, 20.0, 30.0, 45.0, -60.0] {
        let rotation = matrix_to_rodrigues(&euler_to_matrix(&EulerAngles::new(
            0.05,
            yaw_deg.to_radians(),
            -0.1,
        )));
        let pose = Pose6DoF::new(rotation, Vector3::new(0.0, 0.0, 2.3)).unwrap();
        let roles = select_alignment_points(&pose);
        let sim = align_face(&pose, &model, &cam, &template).unwrap();
        let m = sim.matrix();
        println!(
            "yaw {yaw_deg:+.0}°: {} alignment roles {:?}",
            roles.len(),
            roles
        );
        println!(
            "  similarity: scale {:.4}, rotation {:+.4} rad, translation ({:+.1}, {:+.1})",
            sim.scale, sim.rotation, sim.translation.x, sim.translation.y
        );
        println!(
            "  matrix: [{:+.4} {:+.4} {:+8.2}; {:+.4} {:+.4} {:+8.2}]\n",
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2]
        );
    }
}
