//! Rotation representations: axis-angle → matrix → Euler and back.
//!
//!     cargo run --example pose_roundtrip

use facepose::{
    euler_to_matrix, matrix_to_euler, matrix_to_rodrigues, rodrigues_to_matrix, RotationVector,
};

fn main() {
    let r = RotationVector::new(0.2, -0.5, 0.1).unwrap();
    println!("rotation vector: {:?}", r.as_vector().as_slice());
    println!(
        "angle: {:.6} rad about {:?}",
        r.angle(),
        r.axis().unwrap().as_slice()
    );

    let m = rodrigues_to_matrix(&r);
    println!("\nrotation matrix (row major):");
    for row in 0..3 {
        let mr = m.matrix().row(row);
        println!("  [{:+.6} {:+.6} {:+.6}]", mr[0], mr[1], mr[2]);
    }
    println!("orthonormality residual: {:.2e}", m.residual());

    let back = matrix_to_rodrigues(&m);
    println!(
        "\nround trip residual: {:.2e}",
        (back.as_vector() - r.as_vector()).amax()
    );

    let euler = matrix_to_euler(&m);
    println!(
        "euler (pitch, yaw, roll): ({:+.4}, {:+.4}, {:+.4}) rad, gimbal lock: {}",
        euler.angles.pitch, euler.angles.yaw, euler.angles.roll, euler.gimbal_lock
    );
    let rebuilt = euler_to_matrix(&euler.angles);
    println!(
        "euler reconstruction residual: {:.2e}",
        (rebuilt.matrix() - m.matrix()).amax()
    );
}
