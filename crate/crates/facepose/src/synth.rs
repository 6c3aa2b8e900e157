//! Seeded synthesis of poses, landmark sets, and raster datasets from the
//! generic model.
//!
//! Poses combine uniform yaw/pitch sampling with the augmentation
//! distributions applied to a canonical frontal view: roll is 30·N(0,1)
//! degrees, scale U(0.75, 1.25) acts as a depth change, and in-plane
//! translations U(−0.1, 0.1)·side become t_x/t_y offsets.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::face_model::GenericModel;
use crate::geometry::{
    euler_to_matrix, matrix_to_rodrigues, project_points, CameraIntrinsics, EulerAngles, Pose6DoF,
};
use crate::landmarks::LandmarkSet2D;
use crate::regressor::{rasterize, Raster};

/// Ranges for the pose sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Square crop side in pixels; also the focal length.
    pub crop_size: f64,
    /// Yaw range, degrees.
    pub yaw_range: (f64, f64),
    /// Pitch range, degrees.
    pub pitch_range: (f64, f64),
    /// Roll stdev, degrees (zero-mean normal).
    pub roll_sigma: f64,
    /// Canonical depth in model units before the scale jitter.
    pub base_tz: f64,
    /// In-plane translation range as a fraction of the crop.
    pub translation_frac: f64,
    /// Scale jitter range (depth divides by the sampled scale).
    pub scale_range: (f64, f64),
}

impl SynthConfig {
    pub fn for_crop(crop_size: f64) -> Self {
        SynthConfig {
            crop_size,
            yaw_range: (-75.0, 75.0),
            pitch_range: (-30.0, 30.0),
            roll_sigma: 30.0,
            base_tz: 2.2,
            translation_frac: 0.1,
            scale_range: (0.75, 1.25),
        }
    }

    pub fn camera(&self) -> CameraIntrinsics {
        CameraIntrinsics::for_crop(self.crop_size).expect("valid crop")
    }
}

/// Draw one pose. Sampling order is fixed: yaw, pitch, roll, scale, dx, dy.
pub fn sample_pose(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Pose6DoF {
    let yaw = rng
        .random_range(cfg.yaw_range.0..cfg.yaw_range.1)
        .to_radians();
    let pitch = rng
        .random_range(cfg.pitch_range.0..cfg.pitch_range.1)
        .to_radians();
    let roll = (cfg.roll_sigma * rng.sample::<f64, _>(StandardNormal)).to_radians();
    let scale = rng.random_range(cfg.scale_range.0..cfg.scale_range.1);
    let dx = rng.random_range(-cfg.translation_frac..cfg.translation_frac) * cfg.crop_size;
    let dy = rng.random_range(-cfg.translation_frac..cfg.translation_frac) * cfg.crop_size;

    let t_z = cfg.base_tz / scale;
    let f = cfg.crop_size;
    let rotation = matrix_to_rodrigues(&euler_to_matrix(&EulerAngles::new(pitch, yaw, roll)));
    Pose6DoF::new(
        rotation,
        nalgebra::Vector3::new(dx * t_z / f, dy * t_z / f, t_z),
    )
    .expect("sampled pose is finite")
}

/// One synthesized example: a pose and the exact projection of the generic
/// model under it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSample {
    pub index: usize,
    pub pose: Pose6DoF,
    pub landmarks: LandmarkSet2D,
}

/// Generate `count` seeded (pose, landmarks) samples.
pub fn synth_samples(
    model: &GenericModel,
    cfg: &SynthConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<SynthSample>> {
    let cam = cfg.camera();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|index| {
            let pose = sample_pose(cfg, &mut rng);
            let landmarks = project_points(&model.landmarks, &pose, &cam)?;
            Ok(SynthSample {
                index,
                pose,
                landmarks,
            })
        })
        .collect()
}

/// Generate `count` seeded (raster, pose) training pairs.
pub fn synth_raster_dataset(
    model: &GenericModel,
    cfg: &SynthConfig,
    side: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<(Raster, Pose6DoF)>> {
    let cam = CameraIntrinsics::for_crop(side as f64)?;
    let cfg_at_side = SynthConfig {
        crop_size: side as f64,
        ..cfg.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let pose = sample_pose(&cfg_at_side, &mut rng);
            let raster = rasterize(&pose, model, &cam, side)?;
            Ok((raster, pose))
        })
        .collect()
}
