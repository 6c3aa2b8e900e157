//! Pose and rotation representations, conversions, and pinhole projection.
//!
//! Rotations are carried as axis-angle vectors (the canonical form); 3×3
//! matrices and Euler angles are derived views. Conventions used throughout
//! the crate:
//!
//! - Image x grows right, image y grows down, camera z grows away from the
//!   camera; a pose with `t_z > 0` places the object in front of the camera.
//! - Euler composition is `R = Rz(roll) · Ry(yaw) · Rx(pitch)`, i.e. pitch
//!   about x is applied first, then yaw about y, then roll about z. Under
//!   this convention yaw is the asin-extracted angle in [-π/2, π/2] and
//!   pitch/roll lie in [-π, π]. Positive yaw brings the image-right side of
//!   a frontal face closer to the camera.
//! - Model units are normalized so the generic face model has inter-ocular
//!   (outer eye corner) distance 1.0.

use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::{LandmarkSet2D, LandmarkSet3D};

/// Residual above which a matrix is rejected as a rotation.
pub const ROTATION_RESIDUAL_TOL: f64 = 1e-6;

/// Axis-angle rotation vector: direction is the axis, magnitude the angle in
/// radians. Always stored canonically with angle in [0, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct RotationVector(Vector3<f64>);

impl RotationVector {
    /// Build from components, canonicalizing so the angle lies in [0, π].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::invalid("rotation vector must be finite"));
        }
        Ok(Self::canonicalize(Vector3::new(x, y, z)))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        Self::new(v.x, v.y, v.z)
    }

    pub fn zero() -> Self {
        RotationVector(Vector3::zeros())
    }

    fn canonicalize(v: Vector3<f64>) -> Self {
        let theta = v.norm();
        if theta <= std::f64::consts::PI {
            return RotationVector(v);
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let reduced = theta.rem_euclid(two_pi);
        let factor = if reduced > std::f64::consts::PI {
            // Equivalent rotation about the flipped axis.
            (reduced - two_pi) / theta
        } else {
            reduced / theta
        };
        RotationVector(v * factor)
    }

    /// Rotation angle θ = ‖r‖₂, in [0, π].
    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    /// Unit rotation axis, or `None` for the identity rotation.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        let theta = self.angle();
        if theta < 1e-12 {
            None
        } else {
            Some(self.0 / theta)
        }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        self.0
    }
}

impl From<RotationVector> for [f64; 3] {
    fn from(r: RotationVector) -> Self {
        [r.0.x, r.0.y, r.0.z]
    }
}

impl TryFrom<[f64; 3]> for RotationVector {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        RotationVector::new(v[0], v[1], v[2])
    }
}

/// A validated 3×3 rotation matrix. Serializes row-major as 9 numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    /// Validate orthonormality (RᵀR = I) and det(R) = 1 to within
    /// [`ROTATION_RESIDUAL_TOL`] per entry.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let residual = rotation_residual(&m);
        if residual > ROTATION_RESIDUAL_TOL {
            return Err(Error::InvalidRotation {
                residual,
                tolerance: ROTATION_RESIDUAL_TOL,
            });
        }
        Ok(RotationMatrix(m))
    }

    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    /// For internal construction of matrices known to be rotations.
    pub(crate) fn from_orthonormal(m: Matrix3<f64>) -> Self {
        RotationMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// max(|RᵀR − I|, |det R − 1|) over entries.
    pub fn residual(&self) -> f64 {
        rotation_residual(&self.0)
    }
}

fn rotation_residual(m: &Matrix3<f64>) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let gram = m.transpose() * m - Matrix3::identity();
    let ortho = gram.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    ortho.max((m.determinant() - 1.0).abs())
}

impl From<RotationMatrix> for [f64; 9] {
    fn from(r: RotationMatrix) -> Self {
        let m = r.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }
}

impl TryFrom<[f64; 9]> for RotationMatrix {
    type Error = Error;
    fn try_from(v: [f64; 9]) -> Result<Self> {
        RotationMatrix::new(Matrix3::from_row_slice(&v))
    }
}

/// Euler angles in radians under the crate convention
/// `R = Rz(roll) · Ry(yaw) · Rx(pitch)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub fn new(pitch: f64, yaw: f64, roll: f64) -> Self {
        EulerAngles { pitch, yaw, roll }
    }
}

/// Result of an Euler extraction. `gimbal_lock` is set when |yaw| is within
/// 1e-6 of π/2; in that case roll is conventionally 0 and pitch carries the
/// combined angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerDecomposition {
    pub angles: EulerAngles,
    pub gimbal_lock: bool,
}

/// Six degrees of freedom: rotation vector plus translation in model units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose6DoF {
    pub rotation: RotationVector,
    #[serde(with = "vec3_array")]
    pub translation: Vector3<f64>,
}

impl Pose6DoF {
    pub fn new(rotation: RotationVector, translation: Vector3<f64>) -> Result<Self> {
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("translation must be finite"));
        }
        Ok(Pose6DoF {
            rotation,
            translation,
        })
    }

    pub fn identity_at(t_z: f64) -> Self {
        Pose6DoF {
            rotation: RotationVector::zero(),
            translation: Vector3::new(0.0, 0.0, t_z),
        }
    }

    /// (r_x, r_y, r_z, t_x, t_y, t_z), the regression target layout.
    pub fn to_array(&self) -> [f64; 6] {
        let r = self.rotation.as_vector();
        let t = self.translation;
        [r.x, r.y, r.z, t.x, t.y, t.z]
    }

    pub fn from_array(v: [f64; 6]) -> Result<Self> {
        Pose6DoF::new(
            RotationVector::new(v[0], v[1], v[2])?,
            Vector3::new(v[3], v[4], v[5]),
        )
    }
}

mod vec3_array {
    use nalgebra::Vector3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector3<f64>, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector3<f64>, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        Ok(Vector3::new(a[0], a[1], a[2]))
    }
}

/// Pinhole camera with a single focal length, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub focal: f64,
    #[serde(with = "vec2_array")]
    pub principal_point: Vector2<f64>,
}

impl CameraIntrinsics {
    pub fn new(focal: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(focal.is_finite() && focal > 0.0) {
            return Err(Error::invalid("focal length must be finite and positive"));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::invalid("principal point must be finite"));
        }
        Ok(CameraIntrinsics {
            focal,
            principal_point: Vector2::new(cx, cy),
        })
    }

    /// Shared convention for a square crop of `side` pixels: focal = side,
    /// principal point at the center pixel coordinate ((side-1)/2, (side-1)/2)
    /// with pixel centers at integer coordinates. Under this convention the
    /// horizontal mirror x ↦ side-1-x reflects exactly about the principal
    /// axis.
    pub fn for_crop(side: f64) -> Result<Self> {
        let c = (side - 1.0) / 2.0;
        CameraIntrinsics::new(side, c, c)
    }

    /// The 3×3 camera matrix.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.focal,
            0.0,
            self.principal_point.x,
            0.0,
            self.focal,
            self.principal_point.y,
            0.0,
            0.0,
            1.0,
        )
    }
}

mod vec2_array {
    use nalgebra::Vector2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector2<f64>, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector2<f64>, D::Error> {
        let a = <[f64; 2]>::deserialize(d)?;
        Ok(Vector2::new(a[0], a[1]))
    }
}

fn cross_matrix(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Axis-angle to rotation matrix.
///
/// Uses the unit axis u = r/θ: R = cosθ·I + (1−cosθ)·uuᵀ + sinθ·\[u\]ₓ.
/// Angles below 1e-12 return the identity; angles below 1e-6 use a
/// second-order series for sinθ/θ and (1−cosθ)/θ² for stability.
pub fn rodrigues_to_matrix(r: &RotationVector) -> RotationMatrix {
    let v = r.as_vector();
    let theta = v.norm();
    if theta < 1e-12 {
        return RotationMatrix::identity();
    }
    if theta < 1e-6 {
        let t2 = theta * theta;
        let a = 1.0 - t2 / 6.0; // sinθ/θ
        let b = 0.5 - t2 / 24.0; // (1−cosθ)/θ²
        let k = cross_matrix(&v);
        return RotationMatrix::from_orthonormal(Matrix3::identity() + k * a + k * k * b);
    }
    let u = v / theta;
    let (sin_t, cos_t) = theta.sin_cos();
    let m = Matrix3::identity() * cos_t
        + (u * u.transpose()) * (1.0 - cos_t)
        + cross_matrix(&u) * sin_t;
    RotationMatrix::from_orthonormal(m)
}

/// Rotation matrix to canonical axis-angle with θ ∈ [0, π].
///
/// Non-orthonormal input is rejected by [`RotationMatrix::new`]; this
/// conversion itself is total. Near θ = π the axis is recovered from the
/// symmetric part (R + Rᵀ)/2 − cosθ·I = (1−cosθ)·uuᵀ, taking the column
/// with the largest diagonal entry; at θ = π exactly, that entry fixes the
/// axis sign.
pub fn matrix_to_rodrigues(r: &RotationMatrix) -> RotationVector {
    let m = r.matrix();
    let c = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let vee = Vector3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    ) * 0.5;
    let s = vee.norm();
    let theta = s.atan2(c);

    if theta < 1e-6 {
        // r ≈ vee·(1 + θ²/6)
        let v = vee * (1.0 + theta * theta / 6.0);
        return RotationVector(v);
    }
    let axis = if theta < 2.8 {
        vee / s
    } else {
        // (R + Rᵀ)/2 − cI = (1−c)·uuᵀ, well conditioned near π.
        let sym = (m + m.transpose()) * 0.5 - Matrix3::identity() * c;
        let one_minus_c = 1.0 - c;
        let diag = sym.diagonal();
        let j = if diag.x >= diag.y && diag.x >= diag.z {
            0
        } else if diag.y >= diag.z {
            1
        } else {
            2
        };
        let uj = (diag[j].max(0.0) / one_minus_c).sqrt();
        let mut u = Vector3::from(sym.column(j)) / (one_minus_c * uj);
        u.normalize_mut();
        if s > 1e-12 && u.dot(&vee) < 0.0 {
            u = -u;
        }
        u
    };
    RotationVector(axis * theta)
}

/// Build `R = Rz(roll) · Ry(yaw) · Rx(pitch)`.
pub fn euler_to_matrix(e: &EulerAngles) -> RotationMatrix {
    let (sp, cp) = e.pitch.sin_cos();
    let (sy, cy) = e.yaw.sin_cos();
    let (sr, cr) = e.roll.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp);
    let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rz = Matrix3::new(cr, -sr, 0.0, sr, cr, 0.0, 0.0, 0.0, 1.0);
    RotationMatrix::from_orthonormal(rz * ry * rx)
}

/// Extract Euler angles under the crate convention.
///
/// Away from gimbal lock (|yaw| < π/2 − 1e-6) this inverts
/// [`euler_to_matrix`]. At lock, roll is set to 0, pitch carries the combined
/// rotation, and the `gimbal_lock` flag is raised.
pub fn matrix_to_euler(r: &RotationMatrix) -> EulerDecomposition {
    let m = r.matrix();
    let sy = (-m[(2, 0)]).clamp(-1.0, 1.0);
    let yaw = sy.asin();
    let locked = std::f64::consts::FRAC_PI_2 - yaw.abs() < 1e-6;
    if locked {
        // Only pitch ∓ roll is determined; put it all in pitch.
        let pitch = if sy > 0.0 {
            f64::atan2(m[(0, 1)], m[(0, 2)])
        } else {
            f64::atan2(-m[(0, 1)], -m[(0, 2)])
        };
        return EulerDecomposition {
            angles: EulerAngles::new(pitch, yaw, 0.0),
            gimbal_lock: true,
        };
    }
    let pitch = f64::atan2(m[(2, 1)], m[(2, 2)]);
    let roll = f64::atan2(m[(1, 0)], m[(0, 0)]);
    EulerDecomposition {
        angles: EulerAngles::new(pitch, yaw, roll),
        gimbal_lock: false,
    }
}

/// Geodesic angle between two rotations, in radians.
pub fn rotation_geodesic(a: &RotationMatrix, b: &RotationMatrix) -> f64 {
    let rel = a.matrix().transpose() * b.matrix();
    ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

/// Row-major layout of a 3×4 projection matrix, the serialization order
/// used for matrix artifacts.
pub fn projection_matrix_row_major(m: &Matrix3x4<f64>) -> [f64; 12] {
    std::array::from_fn(|i| m[(i / 4, i % 4)])
}

/// The 3×4 projection matrix A·[R|t].
pub fn build_projection_matrix(pose: &Pose6DoF, cam: &CameraIntrinsics) -> Matrix3x4<f64> {
    let r = rodrigues_to_matrix(&pose.rotation);
    let mut rt = Matrix3x4::zeros();
    rt.fixed_view_mut::<3, 3>(0, 0).copy_from(r.matrix());
    rt.set_column(3, &pose.translation);
    cam.matrix() * rt
}

/// Project 3D landmarks through a pose and camera.
///
/// Equivalent to applying [`build_projection_matrix`] and dehomogenizing, in
/// the same evaluation order. Points with nonpositive camera-frame depth
/// raise a degeneracy error naming the offending index.
pub fn project_points(
    points: &LandmarkSet3D,
    pose: &Pose6DoF,
    cam: &CameraIntrinsics,
) -> Result<LandmarkSet2D> {
    let m = build_projection_matrix(pose, cam);
    let projected = project_with_matrix(&m, points.points())?;
    LandmarkSet2D::new(points.scheme(), projected, points.roles().clone(), None)
}

pub(crate) fn project_with_matrix(
    m: &Matrix3x4<f64>,
    points: &[Vector3<f64>],
) -> Result<Vec<Vector2<f64>>> {
    points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let q = m * p.push(1.0);
            if q.z <= 0.0 {
                return Err(Error::ProjectionDegeneracy { index, depth: q.z });
            }
            Ok(Vector2::new(q.x / q.z, q.y / q.z))
        })
        .collect()
}
