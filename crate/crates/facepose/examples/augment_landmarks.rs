//! Training-set augmentation: sample in-plane transforms of a detected
//! face, mirror, and recompute the 6DoF label from the transformed
//! landmarks.
//!
//!     cargo run --example augment_landmarks

use facepose::augment::{augment_dataset, BoundingBox};
use facepose::{matrix_to_euler, project_points, rodrigues_to_matrix, GenericModel, Pose6DoF};

fn main() {
    let model = GenericModel::synthetic();
    let bbox = BoundingBox::new(28.0, 36.0, 200.0, 200.0).unwrap();
    let pose = Pose6DoF::identity_at(2.2);
    let landmarks = project_points(&model.landmarks, &pose, &bbox.intrinsics()).unwrap();

    let samples = augment_dataset(&bbox, &landmarks, &model.landmarks, 4, 7).unwrap();
    println!(
        "generated {} samples (each transform plus its mirror)\n",
        samples.len()
    );
    println!(
        "{:>6} {:>7} {:>6} {:>8} {:>7}  {:>8} {:>8} {:>8}",
        "dx", "dy", "scale", "rot°", "mirror", "yaw°", "pitch°", "roll°"
    );
    for sample in &samples {
        let euler = matrix_to_euler(&rodrigues_to_matrix(&sample.pose_label.rotation)).angles;
        println!(
            "{:>6.1} {:>7.1} {:>6.3} {:>8.2} {:>7}  {:>8.2} {:>8.2} {:>8.2}",
            sample.params.dx,
            sample.params.dy,
            sample.params.scale,
            sample.params.rotation,
            sample.params.mirrored,
            euler.yaw.to_degrees(),
            euler.pitch.to_degrees(),
            euler.roll.to_degrees(),
        );
    }
    println!("\nnote: an in-plane rotation shows up as label roll, and");
    println!("mirroring negates yaw and roll, as the table shows.");
}
