//! 2D face alignment: estimate a similarity transform from projected
//! landmarks to reference template locations, gated by yaw.
//!
//! Frontal faces (|yaw| ≤ 30°, boundary inclusive) align on five roles —
//! both eye centers, the nose tip, and both mouth corners. Past 30° of yaw
//! only the visible eye center and the nose tip are used: the right eye for
//! positive yaw (which turns the image-right side of the face toward the
//! camera), the left eye for negative yaw.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::face_model::GenericModel;
use crate::geometry::{
    matrix_to_euler, project_points, rodrigues_to_matrix, CameraIntrinsics, Pose6DoF,
};
use crate::landmarks::{LandmarkSet2D, Role};

/// Yaw threshold separating the frontal and profile alignment rules.
pub const FRONTAL_YAW_LIMIT: f64 = std::f64::consts::PI / 6.0;

/// A 2D similarity: uniform scale, rotation, translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity2D {
    pub scale: f64,
    /// Rotation in radians, counter-clockwise in (x right, y down) pixel
    /// coordinates.
    pub rotation: f64,
    #[serde(with = "vec2_array")]
    pub translation: Vector2<f64>,
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

impl Similarity2D {
    pub fn identity() -> Self {
        Similarity2D {
            scale: 1.0,
            rotation: 0.0,
            translation: Vector2::zeros(),
        }
    }

    fn linear(&self) -> Matrix2<f64> {
        let (s, c) = self.rotation.sin_cos();
        Matrix2::new(c, -s, s, c) * self.scale
    }

    pub fn apply(&self, p: Vector2<f64>) -> Vector2<f64> {
        self.linear() * p + self.translation
    }

    /// The 2×3 matrix [sR | t], row-major rows.
    pub fn matrix(&self) -> [[f64; 3]; 2] {
        let l = self.linear();
        [
            [l[(0, 0)], l[(0, 1)], self.translation.x],
            [l[(1, 0)], l[(1, 1)], self.translation.y],
        ]
    }

    pub fn inverse(&self) -> Similarity2D {
        let inv_scale = 1.0 / self.scale;
        let inv = Similarity2D {
            scale: inv_scale,
            rotation: -self.rotation,
            translation: Vector2::zeros(),
        };
        Similarity2D {
            translation: -(inv.linear() * self.translation),
            ..inv
        }
    }
}

/// Reference landmark targets in output-crop pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTemplate {
    pub crop_size: f64,
    pub targets: BTreeMap<Role, [f64; 2]>,
}

impl ReferenceTemplate {
    const REQUIRED: [Role; 5] = [
        Role::EyeCenterLeft,
        Role::EyeCenterRight,
        Role::NoseTip,
        Role::MouthCornerLeft,
        Role::MouthCornerRight,
    ];

    pub fn new(crop_size: f64, targets: BTreeMap<Role, [f64; 2]>) -> Result<Self> {
        if !(crop_size.is_finite() && crop_size > 0.0) {
            return Err(Error::invalid("crop size must be positive"));
        }
        for role in Self::REQUIRED {
            if !targets.contains_key(&role) {
                return Err(Error::invalid(format!(
                    "template lacks target for {role:?}"
                )));
            }
        }
        Ok(ReferenceTemplate { crop_size, targets })
    }

    /// Default targets for a square crop: eye centers at (0.30, 0.35) and
    /// (0.70, 0.35), nose tip at (0.50, 0.55), mouth corners at (0.35, 0.72)
    /// and (0.65, 0.72), in crop fractions.
    pub fn default_for_crop(size: f64) -> Result<Self> {
        let mut targets = BTreeMap::new();
        targets.insert(Role::EyeCenterLeft, [0.30 * size, 0.35 * size]);
        targets.insert(Role::EyeCenterRight, [0.70 * size, 0.35 * size]);
        targets.insert(Role::NoseTip, [0.50 * size, 0.55 * size]);
        targets.insert(Role::MouthCornerLeft, [0.35 * size, 0.72 * size]);
        targets.insert(Role::MouthCornerRight, [0.65 * size, 0.72 * size]);
        ReferenceTemplate::new(size, targets)
    }

    pub fn target(&self, role: Role) -> Option<Vector2<f64>> {
        self.targets.get(&role).map(|t| Vector2::new(t[0], t[1]))
    }
}

/// Which roles align a face at this pose. A pure step function of yaw with
/// an inclusive boundary: |yaw| ≤ 30° selects the five frontal roles;
/// beyond that, the visible eye center and the nose tip.
pub fn select_alignment_points(pose: &Pose6DoF) -> Vec<Role> {
    let yaw = matrix_to_euler(&rodrigues_to_matrix(&pose.rotation))
        .angles
        .yaw;
    if yaw.abs() <= FRONTAL_YAW_LIMIT {
        vec![
            Role::EyeCenterLeft,
            Role::EyeCenterRight,
            Role::NoseTip,
            Role::MouthCornerLeft,
            Role::MouthCornerRight,
        ]
    } else if yaw > 0.0 {
        vec![Role::EyeCenterRight, Role::NoseTip]
    } else {
        vec![Role::EyeCenterLeft, Role::NoseTip]
    }
}

/// Closed-form least-squares similarity from `src` to `dst` (uniform scale,
/// no reflection). Exact for two pairs; least squares beyond.
pub fn estimate_similarity(src: &[Vector2<f64>], dst: &[Vector2<f64>]) -> Result<Similarity2D> {
    if src.len() != dst.len() {
        return Err(Error::invalid("point counts differ"));
    }
    if src.len() < 2 {
        return Err(Error::TooFewCorrespondences {
            found: src.len(),
            needed: 2,
        });
    }
    let n = src.len() as f64;
    let sc: Vector2<f64> = src.iter().sum::<Vector2<f64>>() / n;
    let dc: Vector2<f64> = dst.iter().sum::<Vector2<f64>>() / n;

    // Complex-number least squares: dst ≈ a·src + b with a = s·e^{iφ}.
    let mut num_re = 0.0;
    let mut num_im = 0.0;
    let mut den = 0.0;
    for (p, q) in src.iter().zip(dst) {
        let z = p - sc;
        let w = q - dc;
        num_re += w.x * z.x + w.y * z.y;
        num_im += w.y * z.x - w.x * z.y;
        den += z.norm_squared();
    }
    if den <= 1e-24 {
        return Err(Error::DegenerateSimilarity(
            "source points are coincident".to_string(),
        ));
    }
    let a_re = num_re / den;
    let a_im = num_im / den;
    let scale = (a_re * a_re + a_im * a_im).sqrt();
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateSimilarity(
            "estimated scale is not positive".to_string(),
        ));
    }
    let rotation = a_im.atan2(a_re);
    let sim = Similarity2D {
        scale,
        rotation,
        translation: Vector2::zeros(),
    };
    let translation = dc - sim.linear() * sc;
    Ok(Similarity2D { translation, ..sim })
}

/// Align a posed face: project the model's alignment roles, pick roles by
/// yaw, and fit the similarity onto the template targets.
pub fn align_face(
    pose: &Pose6DoF,
    model: &GenericModel,
    cam: &CameraIntrinsics,
    template: &ReferenceTemplate,
) -> Result<Similarity2D> {
    let projected = project_points(&model.landmarks, pose, cam)?;
    let roles = select_alignment_points(pose);
    let mut src = Vec::with_capacity(roles.len());
    let mut dst = Vec::with_capacity(roles.len());
    for role in roles {
        let s = projected
            .role_point(role)
            .ok_or_else(|| Error::invalid(format!("model lacks role {role:?}")))?;
        let d = template
            .target(role)
            .ok_or_else(|| Error::invalid(format!("template lacks role {role:?}")))?;
        src.push(s);
        dst.push(d);
    }
    // Guard against a uselessly small source span before fitting a scale.
    let span = src
        .iter()
        .flat_map(|a| src.iter().map(move |b| (a - b).norm()))
        .fold(0.0f64, f64::max);
    if span < 1e-6 * template.crop_size {
        return Err(Error::DegenerateSimilarity(format!(
            "projected roles span {span:.3e} px, below the 1e-6·crop guard"
        )));
    }
    estimate_similarity(&src, &dst)
}

/// Apply a similarity to every landmark, preserving scheme and roles.
pub fn warp_points(sim: &Similarity2D, pts: &LandmarkSet2D) -> LandmarkSet2D {
    let mapped: Vec<Vector2<f64>> = pts.points().iter().map(|p| sim.apply(*p)).collect();
    pts.with_points(mapped).expect("same point count")
}
