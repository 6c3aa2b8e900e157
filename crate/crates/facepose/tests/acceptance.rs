//! Acceptance suite: the crate's verification gate. Each test prints one
//! PASS/FAIL line; run with `cargo test --test acceptance -- --nocapture`
//! to see them.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use facepose::alignment::{estimate_similarity, select_alignment_points, Similarity2D};
use facepose::augment::{make_augmented_sample, sample_params, BoundingBox};
use facepose::evaluation::{aggregate, image_error, ImageError};
use facepose::regressor::{batch_gradients, batch_loss, predict_pose, train, Hyperparams};
use facepose::synth::{synth_raster_dataset, synth_samples, SynthConfig};
use facepose::{
    euler_to_matrix, matrix_to_euler, matrix_to_rodrigues, predict_landmarks, project_points,
    rodrigues_to_matrix, rotation_geodesic, solve_pnp, synthesize_pose_label, CameraIntrinsics,
    Correspondences, EulerAngles, GenericModel, Pose6DoF, RotationVector,
};

fn criterion(label: &str, body: impl FnOnce()) {
    let start = Instant::now();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("PASS {label} ({:.2}s)", start.elapsed().as_secs_f64()),
        Err(e) => {
            println!("FAIL {label} ({:.2}s)", start.elapsed().as_secs_f64());
            std::panic::resume_unwind(e);
        }
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> RotationVector {
    let axis = loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if v.norm() > 1e-6 {
            break v / v.norm();
        }
    };
    let theta: f64 = rng.random_range(1e-9..std::f64::consts::PI - 1e-9);
    RotationVector::from_vector(axis * theta).unwrap()
}

#[test]
fn criterion_1_rotation_round_trips() {
    criterion(
        "criterion 1: rotation round-trips at 1e-9 within 1s",
        || {
            let start = Instant::now();
            let mut rng = ChaCha8Rng::seed_from_u64(1001);
            for _ in 0..1000 {
                let r = random_rotation(&mut rng);
                let m = rodrigues_to_matrix(&r);
                assert!(
                    m.residual() < 1e-9,
                    "orthonormality/determinant residual {}",
                    m.residual()
                );
                let back = matrix_to_rodrigues(&m);
                let vec_err = (back.as_vector() - r.as_vector()).amax();
                assert!(vec_err < 1e-9, "vector round-trip residual {vec_err}");

                let euler = matrix_to_euler(&m);
                let rebuilt = euler_to_matrix(&euler.angles);
                let mat_err = (rebuilt.matrix() - m.matrix()).amax();
                assert!(mat_err < 1e-9, "euler round-trip residual {mat_err}");
            }
            let elapsed = start.elapsed().as_secs_f64();
            assert!(
                elapsed < 1.0,
                "rotation suite took {elapsed:.2}s (budget 1s)"
            );
        },
    );
}

#[test]
fn criterion_2_pnp_exactness() {
    criterion(
        "criterion 2: PnP exact recovery at 1e-6 over 1000 poses within 30s",
        || {
            let start = Instant::now();
            let model = GenericModel::synthetic();
            let cam = CameraIntrinsics::for_crop(256.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(2002);
            for trial in 0..1000 {
                let pose = Pose6DoF::new(
                    random_rotation_bounded(&mut rng, 1.2),
                    Vector3::new(
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-0.3..0.3),
                        rng.random_range(2.0..4.0),
                    ),
                )
                .unwrap();
                let lm = project_points(&model.landmarks, &pose, &cam).unwrap();
                let c = Correspondences::from_landmarks(&model.landmarks, &lm).unwrap();
                let result = solve_pnp(&c, &cam).unwrap();

                let geo = rotation_geodesic(
                    &rodrigues_to_matrix(&pose.rotation),
                    &rodrigues_to_matrix(&result.pose.rotation),
                );
                assert!(geo < 1e-6, "trial {trial}: rotation error {geo} rad");
                let t_err = (pose.translation - result.pose.translation).norm();
                assert!(t_err < 1e-6, "trial {trial}: translation error {t_err}");
                for pair in result.cost_history.windows(2) {
                    assert!(
                        pair[1] <= pair[0],
                        "trial {trial}: LM cost increased {pair:?}"
                    );
                }
            }
            let elapsed = start.elapsed().as_secs_f64();
            assert!(elapsed < 30.0, "PnP suite took {elapsed:.2}s (budget 30s)");
        },
    );
}

fn random_rotation_bounded(rng: &mut ChaCha8Rng, max_angle: f64) -> RotationVector {
    let axis = loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if v.norm() > 1e-6 {
            break v / v.norm();
        }
    };
    let theta: f64 = rng.random_range(0.0..max_angle);
    RotationVector::from_vector(axis * theta).unwrap()
}

#[test]
fn criterion_3_augmentation_consistency() {
    criterion(
        "criterion 3: 1000 augmented samples reproject at ≤1e-4 px rms; params match their distributions",
        || {
            let model = GenericModel::synthetic();
            let bbox = BoundingBox::new(28.0, 36.0, 200.0, 200.0).unwrap();
            let base = Pose6DoF::identity_at(2.2);
            let lm = project_points(&model.landmarks, &base, &bbox.intrinsics()).unwrap();

            let mut rng = ChaCha8Rng::seed_from_u64(3003);
            for trial in 0..1000 {
                let sample = make_augmented_sample(&bbox, &lm, &model.landmarks, &mut rng)
                    .unwrap_or_else(|e| panic!("trial {trial}: {e}"));
                let reproj = project_points(
                    &model.landmarks,
                    &sample.pose_label,
                    &sample.transformed_box.intrinsics(),
                )
                .unwrap();
                let rms = (reproj
                    .points()
                    .iter()
                    .zip(sample.transformed_landmarks.points())
                    .map(|(a, b)| (a - b).norm_squared())
                    .sum::<f64>()
                    / reproj.len() as f64)
                    .sqrt();
                assert!(rms <= 1e-4, "trial {trial}: reprojection rms {rms} px");
            }

            // Distribution conformance at a fixed test seed: KS p > 0.01.
            let mut rng = ChaCha8Rng::seed_from_u64(30031);
            let n = 10_000;
            let mut dx = Vec::with_capacity(n);
            let mut dy = Vec::with_capacity(n);
            let mut scale = Vec::with_capacity(n);
            let mut rotation = Vec::with_capacity(n);
            for _ in 0..n {
                let p = sample_params(&bbox, &mut rng);
                dx.push(p.dx);
                dy.push(p.dy);
                scale.push(p.scale);
                rotation.push(p.rotation);
            }
            #[allow(clippy::type_complexity)]
            let checks: [(&str, &mut Vec<f64>, Box<dyn Fn(f64) -> f64>); 4] = [
                ("dx", &mut dx, Box::new(common::uniform_cdf(-20.0, 20.0))),
                ("dy", &mut dy, Box::new(common::uniform_cdf(-20.0, 20.0))),
                ("scale", &mut scale, Box::new(common::uniform_cdf(0.75, 1.25))),
                (
                    "rotation",
                    &mut rotation,
                    Box::new(|x: f64| common::normal_cdf(x / 30.0)),
                ),
            ];
            for (name, samples, cdf) in checks {
                let d = common::ks_statistic(samples, cdf);
                let p = common::ks_p_value(d, n);
                assert!(p > 0.01, "{name}: KS D={d:.5}, p={p:.5} ≤ 0.01");
            }
        },
    );
}

#[test]
fn criterion_4_metric_oracle_equivalence() {
    criterion(
        "criterion 4: error metric matches the independent oracle at 1e-12; hand-computed aggregate exact",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(4004);
            let mut roles = std::collections::BTreeMap::new();
            roles.insert(facepose::Role::OuterEyeCornerLeft, 0);
            roles.insert(facepose::Role::OuterEyeCornerRight, 1);
            for trial in 0..100 {
                let m = rng.random_range(5..40usize);
                let gt_pts: Vec<Vector2<f64>> = (0..m)
                    .map(|_| {
                        Vector2::new(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0))
                    })
                    .collect();
                let pred_pts: Vec<Vector2<f64>> = gt_pts
                    .iter()
                    .map(|p| {
                        p + Vector2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0))
                    })
                    .collect();
                let gt = facepose::LandmarkSet2D::new("custom", gt_pts.clone(), roles.clone(), None)
                    .unwrap();
                let pred = facepose::LandmarkSet2D::new(
                    "custom",
                    pred_pts.clone(),
                    roles.clone(),
                    None,
                )
                .unwrap();
                let e = image_error(&pred, &gt).unwrap().error;
                // Independently coded single-expression evaluator.
                let oracle = pred_pts
                    .iter()
                    .zip(&gt_pts)
                    .map(|(p, q)| ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt())
                    .sum::<f64>()
                    / (m as f64
                        * ((gt_pts[0].x - gt_pts[1].x).powi(2)
                            + (gt_pts[0].y - gt_pts[1].y).powi(2))
                        .sqrt());
                assert!(
                    (e - oracle).abs() <= 1e-12,
                    "trial {trial}: {e} vs oracle {oracle}"
                );
            }

            let errors: Vec<ImageError> = [0.04, 0.08, 0.15, 0.50]
                .iter()
                .map(|&error| ImageError {
                    error,
                    landmark_count: 68,
                    inter_ocular: 100.0,
                })
                .collect();
            let report = aggregate(&errors, 0.10).unwrap();
            assert!((report.mer - 0.1925).abs() < 1e-15, "MER {}", report.mer);
            assert_eq!(report.frac_le_5, 0.25);
            assert_eq!(report.frac_le_10, 0.50);
            assert_eq!(report.frac_le_20, 0.75);
            assert_eq!(report.frac_gt_40, 0.25);
        },
    );
}

#[test]
fn criterion_5_closed_loop_pipeline() {
    criterion(
        "criterion 5: synth → solve-pose → predict-landmarks → eval gives MER < 1e-6",
        || {
            let model = GenericModel::synthetic();
            let cfg = SynthConfig::for_crop(256.0);
            let cam = cfg.camera();
            let samples = synth_samples(&model, &cfg, 100, 5005).unwrap();
            let mut errors = Vec::new();
            for sample in &samples {
                let pose =
                    synthesize_pose_label(&sample.landmarks, &model.landmarks, &cam).unwrap();
                let predicted = predict_landmarks(&pose, &model, &cam).unwrap();
                errors.push(image_error(&predicted, &sample.landmarks).unwrap());
            }
            let report = aggregate(&errors, 0.10).unwrap();
            assert!(report.mer < 1e-6, "closed-loop MER {}", report.mer);
        },
    );
}

#[test]
fn criterion_6_alignment_rules() {
    criterion(
        "criterion 6: yaw gating (5 roles ≤30°, 2 beyond, inclusive) and 1e-10 similarity recovery",
        || {
            let pose_with_yaw = |yaw: f64| {
                Pose6DoF::new(
                    matrix_to_rodrigues(&euler_to_matrix(&EulerAngles::new(0.0, yaw, 0.0))),
                    Vector3::new(0.0, 0.0, 2.2),
                )
                .unwrap()
            };
            for yaw_deg in [-29.9f64, -10.0, 0.0, 10.0, 29.9, 30.0, -30.0] {
                let roles = select_alignment_points(&pose_with_yaw(yaw_deg.to_radians()));
                assert_eq!(roles.len(), 5, "yaw {yaw_deg}° must use 5 roles");
            }
            for yaw_deg in [30.1f64, 45.0, 60.0, 85.0] {
                let pos = select_alignment_points(&pose_with_yaw(yaw_deg.to_radians()));
                assert_eq!(pos.len(), 2, "yaw {yaw_deg}° must use 2 roles");
                assert_eq!(pos[0], facepose::Role::EyeCenterRight);
                let neg = select_alignment_points(&pose_with_yaw((-yaw_deg).to_radians()));
                assert_eq!(neg.len(), 2);
                assert_eq!(neg[0], facepose::Role::EyeCenterLeft);
            }

            let mut rng = ChaCha8Rng::seed_from_u64(6006);
            for trial in 0..200 {
                let truth = Similarity2D {
                    scale: rng.random_range(0.5..2.0),
                    rotation: rng.random_range(-3.0..3.0),
                    translation: Vector2::new(
                        rng.random_range(-100.0..100.0),
                        rng.random_range(-100.0..100.0),
                    ),
                };
                let src: Vec<Vector2<f64>> = (0..6)
                    .map(|_| {
                        Vector2::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0))
                    })
                    .collect();
                let dst: Vec<Vector2<f64>> = src.iter().map(|p| truth.apply(*p)).collect();
                let fit = estimate_similarity(&src, &dst).unwrap();
                assert!(
                    (fit.scale - truth.scale).abs() < 1e-10,
                    "trial {trial}: scale"
                );
                assert!(
                    (fit.rotation - truth.rotation).abs() < 1e-10,
                    "trial {trial}: rotation"
                );
                assert!(
                    (fit.translation - truth.translation).norm() < 1e-10,
                    "trial {trial}: translation off by {:e}",
                    (fit.translation - truth.translation).norm()
                );
            }
        },
    );
}

#[test]
fn criterion_7_regressor() {
    criterion(
        "criterion 7: gradient check at 1e-4, memorization < 1e-6, seeded benchmark under the frozen bound, within 5min",
        || {
            let start = Instant::now();

            // Gradient check: every parameter of a 3-sample batch.
            let hyper_small = Hyperparams {
                hidden: vec![16, 8],
                ..Hyperparams::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(7007);
            let model = facepose::regressor::RegressorModel::init(6, &hyper_small, &mut rng);
            let inputs =
                nalgebra::DMatrix::from_fn(36, 3, |_, _| rng.random_range(0.05..1.0));
            let targets = nalgebra::DMatrix::from_fn(6, 3, |_, _| rng.random_range(-1.5..1.5));
            let grads = batch_gradients(&model, &inputs, &targets);
            let h = 1e-5;
            for (li, (dw, db)) in grads.iter().enumerate() {
                let check = |kind: &str, idx: usize, analytic: f64,
                             perturb: &dyn Fn(&mut facepose::regressor::RegressorModel, f64)| {
                    let mut plus = model.clone();
                    perturb(&mut plus, h);
                    let mut minus = model.clone();
                    perturb(&mut minus, -h);
                    let numeric = (batch_loss(&plus, &inputs, &targets)
                        - batch_loss(&minus, &inputs, &targets))
                        / (2.0 * h);
                    let rel = (analytic - numeric).abs()
                        / analytic.abs().max(numeric.abs()).max(1e-8);
                    assert!(
                        rel < 1e-4,
                        "layer {li} {kind}[{idx}]: analytic {analytic:e}, numeric {numeric:e}, rel {rel:e}"
                    );
                };
                for r in 0..dw.nrows() {
                    for c in 0..dw.ncols() {
                        check("W", r * dw.ncols() + c, dw[(r, c)], &|m, eps| {
                            m.layers[li].weights[(r, c)] += eps;
                        });
                    }
                }
                for r in 0..db.len() {
                    check("b", r, db[r], &|m, eps| {
                        m.layers[li].bias[r] += eps;
                    });
                }
            }

            // Single-sample memorization: loss < 1e-6 within 1e4 steps.
            let gm = GenericModel::synthetic();
            let cfg = SynthConfig::for_crop(8.0);
            let mem_data = synth_raster_dataset(&gm, &cfg, 8, 1, 70071).unwrap();
            let mem_hyper = Hyperparams {
                hidden: vec![16, 8],
                batch_size: 1,
                epochs: 10_000,
                lr_halve_every: None,
                ..Hyperparams::default()
            };
            let mem = train(&mem_data, &mem_hyper, 70072).unwrap();
            let final_loss = *mem.report.epoch_losses.last().unwrap();
            assert!(final_loss < 1e-6, "memorization loss {final_loss}");

            // Seeded 5000/500 benchmark at the default hyperparameters,
            // yaw ∈ [−75°, 75°]. The first run of this exact seeded
            // configuration measured a median rotation error of 8.43°; the
            // frozen regression bound is 9.0°. This is a regression value
            // for this synthetic setup, not a benchmark claim.
            let side = 32;
            let bench_cfg = SynthConfig::for_crop(side as f64);
            let train_set = synth_raster_dataset(&gm, &bench_cfg, side, 5000, 70073).unwrap();
            let test_set = synth_raster_dataset(&gm, &bench_cfg, side, 500, 70074).unwrap();
            let bench_hyper = Hyperparams::default();
            let trained = train(&train_set, &bench_hyper, 70075).unwrap();
            let mut rot_errors: Vec<f64> = test_set
                .iter()
                .map(|(raster, truth)| {
                    let predicted =
                        predict_pose(&trained.model, &trained.normalizer, raster).unwrap();
                    rotation_geodesic(
                        &rodrigues_to_matrix(&truth.rotation),
                        &rodrigues_to_matrix(&predicted.rotation),
                    )
                    .to_degrees()
                })
                .collect();
            rot_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = rot_errors[rot_errors.len() / 2];
            println!("  benchmark median rotation error: {median:.2}° (frozen bound 9.0°)");
            assert!(median < 9.0, "benchmark median {median:.2}° over frozen bound");

            // Mirror consistency, reported not asserted: yaw on a mirrored
            // raster vs the negated direct yaw, averaged over 20 probes.
            let yaw_of = |pose: &Pose6DoF| {
                matrix_to_euler(&rodrigues_to_matrix(&pose.rotation))
                    .angles
                    .yaw
                    .to_degrees()
            };
            let mut direct_sum = 0.0;
            let mut mirror_sum = 0.0;
            for (raster, _) in test_set.iter().take(20) {
                let d = predict_pose(&trained.model, &trained.normalizer, raster).unwrap();
                let m =
                    predict_pose(&trained.model, &trained.normalizer, &raster.mirrored()).unwrap();
                direct_sum += yaw_of(&d);
                mirror_sum += yaw_of(&m);
            }
            println!(
                "  mirror consistency (soft): mean yaw {:.2}° direct vs {:.2}° on mirrors",
                direct_sum / 20.0,
                mirror_sum / 20.0
            );

            let elapsed = start.elapsed().as_secs_f64();
            assert!(elapsed < 300.0, "regressor suite took {elapsed:.1}s (budget 300s)");
        },
    );
}

#[test]
fn criterion_8_inter_ocular_bias() {
    criterion(
        "criterion 8: identical pixel error scores strictly worse at yaw 60° than frontal",
        || {
            let model = GenericModel::synthetic();
            let cam = CameraIntrinsics::for_crop(256.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(8008);
            let offsets: Vec<Vector2<f64>> = (0..68)
                .map(|_| Vector2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect();
            let error_at = |yaw_deg: f64| {
                let pose = Pose6DoF::new(
                    matrix_to_rodrigues(&euler_to_matrix(&EulerAngles::new(
                        0.0,
                        yaw_deg.to_radians(),
                        0.0,
                    ))),
                    Vector3::new(0.0, 0.0, 2.2),
                )
                .unwrap();
                let gt = project_points(&model.landmarks, &pose, &cam).unwrap();
                let pred = gt
                    .with_points(
                        gt.points()
                            .iter()
                            .zip(&offsets)
                            .map(|(p, d)| p + d)
                            .collect(),
                    )
                    .unwrap();
                image_error(&pred, &gt).unwrap()
            };
            let frontal = error_at(0.0);
            let profile = error_at(60.0);
            let ratio = profile.error / frontal.error;
            println!(
                "  e(yaw 60°) / e(frontal) = {ratio:.3} (inter-ocular {:.1} px → {:.1} px)",
                frontal.inter_ocular, profile.inter_ocular
            );
            assert!(
                profile.error > frontal.error,
                "no inflation: frontal {}, profile {}",
                frontal.error,
                profile.error
            );
        },
    );
}
