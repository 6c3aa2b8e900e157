//! Perspective-n-point pose recovery from 2D–3D landmark correspondences.
//!
//! This is the pose-label synthesis engine: given detected 2D landmarks and
//! their reference 3D coordinates on the generic model, recover the 6DoF
//! pose whose projection best explains them, in weighted least squares.
//!
//! The solver initializes with a normalized 6-point DLT (falling back to a
//! frontal prior below 6 points) and refines with Levenberg–Marquardt over
//! the 6 pose parameters using analytic Jacobians. The LM schedule is fixed
//! for reproducibility: λ starts at 1e-3, ×10 on a rejected step, ÷10 on an
//! accepted one; iteration stops when the gradient ∞-norm drops below 1e-10,
//! the step norm below 1e-12, or after 100 iterations.

use nalgebra::{DMatrix, DVector, Matrix2x3, Matrix3, Matrix3x4, Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    matrix_to_rodrigues, CameraIntrinsics, Pose6DoF, RotationMatrix, RotationVector,
};
use crate::landmarks::{LandmarkSet2D, LandmarkSet3D};

const LAMBDA_INIT: f64 = 1e-3;
const GRADIENT_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 100;

/// Weighted (3D model point, 2D image point) pairs sharing one scheme.
#[derive(Debug, Clone)]
pub struct Correspondences {
    world: Vec<Vector3<f64>>,
    image: Vec<Vector2<f64>>,
    weights: Vec<f64>,
}

impl Correspondences {
    /// Pair up raw point lists. Weights default to 1 and must lie in [0, 1].
    pub fn new(
        world: Vec<Vector3<f64>>,
        image: Vec<Vector2<f64>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if world.len() != image.len() {
            return Err(Error::invalid(format!(
                "3D and 2D point counts differ: {} vs {}",
                world.len(),
                image.len()
            )));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; world.len()]);
        if weights.len() != world.len() {
            return Err(Error::invalid("weight count must match point count"));
        }
        if weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0 || *w > 1.0)
        {
            return Err(Error::invalid("weights must be finite and in [0, 1]"));
        }
        Ok(Correspondences {
            world,
            image,
            weights,
        })
    }

    /// Pair a 3D model with observed 2D landmarks of the same scheme.
    /// Invisible landmarks get weight 0.
    pub fn from_landmarks(model: &LandmarkSet3D, observed: &LandmarkSet2D) -> Result<Self> {
        if model.scheme() != observed.scheme() {
            return Err(Error::SchemeMismatch {
                expected: model.scheme().to_string(),
                found: observed.scheme().to_string(),
            });
        }
        if model.len() != observed.len() {
            return Err(Error::invalid("landmark counts differ"));
        }
        let weights = observed
            .visibility()
            .map(|vis| vis.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect());
        Correspondences::new(model.points().to_vec(), observed.points().to_vec(), weights)
    }

    pub fn len(&self) -> usize {
        self.world.len()
    }

    pub fn is_empty(&self) -> bool {
        self.world.is_empty()
    }

    /// Number of pairs with positive weight.
    pub fn active_count(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    fn active(&self) -> (Vec<Vector3<f64>>, Vec<Vector2<f64>>, Vec<f64>) {
        let mut world = Vec::new();
        let mut image = Vec::new();
        let mut weights = Vec::new();
        for i in 0..self.len() {
            if self.weights[i] > 0.0 {
                world.push(self.world[i]);
                image.push(self.image[i]);
                weights.push(self.weights[i]);
            }
        }
        (world, image, weights)
    }
}

/// Outcome of a PnP solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PnPResult {
    pub pose: Pose6DoF,
    /// Weighted rms reprojection error in pixels:
    /// sqrt(Σ wᵢ‖Δpᵢ‖² / Σ wᵢ).
    pub rms_reprojection_error: f64,
    /// Accepted LM iterations.
    pub iterations: usize,
    pub converged: bool,
    /// Cost ½Σ wᵢ‖Δpᵢ‖² at the initial iterate and after each accepted step.
    pub cost_history: Vec<f64>,
}

/// Recover the pose minimizing the weighted sum of squared reprojection
/// residuals.
pub fn solve_pnp(c: &Correspondences, cam: &CameraIntrinsics) -> Result<PnPResult> {
    let (world, image, weights) = c.active();
    let n = world.len();
    if n < 4 {
        return Err(Error::TooFewCorrespondences {
            found: n,
            needed: 4,
        });
    }
    check_not_collinear(&world)?;

    let initial = if n >= 6 {
        dlt_init(&world, &image, &weights, cam)
            .unwrap_or_else(|| frontal_prior(&world, &image, cam))
    } else {
        frontal_prior(&world, &image, cam)
    };

    let (params, iterations, converged, cost_history) =
        refine_lm(&world, &image, &weights, cam, initial);

    let rotation = RotationVector::new(params[0], params[1], params[2])?;
    let pose = Pose6DoF::new(rotation, Vector3::new(params[3], params[4], params[5]))?;

    let weight_sum: f64 = weights.iter().sum();
    let final_cost = cost_history.last().copied().unwrap_or(f64::INFINITY);
    let rms = (2.0 * final_cost / weight_sum).sqrt();

    Ok(PnPResult {
        pose,
        rms_reprojection_error: rms,
        iterations,
        converged,
        cost_history,
    })
}

/// Serialize a correspondence set as a document pairing the two landmark
/// sets plus a weights array.
pub fn correspondences_to_json(
    model: &LandmarkSet3D,
    observed: &LandmarkSet2D,
    weights: &[f64],
) -> serde_json::Value {
    serde_json::json!({
        "model": model.to_json(),
        "landmarks": observed.to_json(),
        "weights": weights,
    })
}

/// Parse the paired-document correspondence format back into a solvable
/// correspondence set.
pub fn correspondences_from_json(value: &serde_json::Value) -> Result<Correspondences> {
    let model = LandmarkSet3D::from_json(
        value
            .get("model")
            .ok_or_else(|| Error::invalid("correspondences lack 'model'"))?,
    )?;
    let observed = LandmarkSet2D::from_json(
        value
            .get("landmarks")
            .ok_or_else(|| Error::invalid("correspondences lack 'landmarks'"))?,
    )?;
    let weights: Option<Vec<f64>> = match value.get("weights") {
        None => None,
        Some(w) => Some(serde_json::from_value(w.clone())?),
    };
    if model.scheme() != observed.scheme() {
        return Err(Error::SchemeMismatch {
            expected: model.scheme().to_string(),
            found: observed.scheme().to_string(),
        });
    }
    Correspondences::new(model.points().to_vec(), observed.points().to_vec(), weights)
}

/// Compute a 6DoF pose label from detected landmarks, as used to build
/// training targets. Visibility flags become zero weights; the returned
/// rotation vector is canonical.
pub fn synthesize_pose_label(
    landmarks2d: &LandmarkSet2D,
    model: &LandmarkSet3D,
    cam: &CameraIntrinsics,
) -> Result<Pose6DoF> {
    let c = Correspondences::from_landmarks(model, landmarks2d)?;
    Ok(solve_pnp(&c, cam)?.pose)
}

fn check_not_collinear(world: &[Vector3<f64>]) -> Result<()> {
    let n = world.len() as f64;
    let centroid: Vector3<f64> = world.iter().sum::<Vector3<f64>>() / n;
    let mut centered = DMatrix::zeros(world.len(), 3);
    for (i, p) in world.iter().enumerate() {
        let d = p - centroid;
        centered[(i, 0)] = d.x;
        centered[(i, 1)] = d.y;
        centered[(i, 2)] = d.z;
    }
    let svd = centered.svd(false, false);
    let s = &svd.singular_values;
    if s[0] <= 0.0 || s[1] <= 1e-10 * s[0] {
        return Err(Error::DegenerateConfiguration(
            "3D points are collinear".to_string(),
        ));
    }
    Ok(())
}

/// Normalized DLT for the 3×4 projection matrix, decomposed into a pose by
/// peeling off the known intrinsics and polar-projecting the rotation block.
/// Returns `None` when the system is too ill-conditioned to be useful.
fn dlt_init(
    world: &[Vector3<f64>],
    image: &[Vector2<f64>],
    weights: &[f64],
    cam: &CameraIntrinsics,
) -> Option<Vector6<f64>> {
    let n = world.len();

    // Hartley normalization of both point sets.
    let c2: Vector2<f64> = image.iter().sum::<Vector2<f64>>() / n as f64;
    let c3: Vector3<f64> = world.iter().sum::<Vector3<f64>>() / n as f64;
    let rms2 = (image.iter().map(|p| (p - c2).norm_squared()).sum::<f64>() / n as f64).sqrt();
    let rms3 = (world.iter().map(|p| (p - c3).norm_squared()).sum::<f64>() / n as f64).sqrt();
    if rms2 < 1e-12 || rms3 < 1e-12 {
        return None;
    }
    let s2 = std::f64::consts::SQRT_2 / rms2;
    let s3 = 3f64.sqrt() / rms3;

    let mut a = DMatrix::zeros(2 * n, 12);
    for i in 0..n {
        let w = weights[i].sqrt();
        let p = (world[i] - c3) * s3;
        let q = (image[i] - c2) * s2;
        let row_x = 2 * i;
        let row_y = 2 * i + 1;
        for (k, &pk) in [p.x, p.y, p.z, 1.0].iter().enumerate() {
            a[(row_x, k)] = w * pk;
            a[(row_y, 4 + k)] = w * pk;
            a[(row_x, 8 + k)] = -w * q.x * pk;
            a[(row_y, 8 + k)] = -w * q.y * pk;
        }
    }

    let svd = a.svd(false, true);
    let vt = svd.v_t?;
    let h = vt.row(vt.nrows() - 1).transpose();
    let m_norm = Matrix3x4::from_fn(|r, c| h[4 * r + c]);

    // Undo normalization: p = T2⁻¹ · M̃ · T3.
    let t2_inv = Matrix3::new(1.0 / s2, 0.0, c2.x, 0.0, 1.0 / s2, c2.y, 0.0, 0.0, 1.0);
    let t3 = {
        let mut t = nalgebra::Matrix4::identity() * s3;
        t[(3, 3)] = 1.0;
        t[(0, 3)] = -s3 * c3.x;
        t[(1, 3)] = -s3 * c3.y;
        t[(2, 3)] = -s3 * c3.z;
        t
    };
    let m = t2_inv * m_norm * t3;

    // Peel intrinsics: B = A⁻¹M = s·[R|t].
    let f = cam.focal;
    let (cx, cy) = (cam.principal_point.x, cam.principal_point.y);
    let a_inv = Matrix3::new(1.0 / f, 0.0, -cx / f, 0.0, 1.0 / f, -cy / f, 0.0, 0.0, 1.0);
    let b = a_inv * m;
    let b3 = b.fixed_view::<3, 3>(0, 0).into_owned();
    let det = b3.determinant();
    if det.abs() < 1e-18 {
        return None;
    }
    let scale = det.signum() * det.abs().cbrt();
    let r0 = b3 / scale;
    let t = b.column(3) / scale;

    let r = nearest_rotation(&r0)?;
    let rvec = matrix_to_rodrigues(&r);
    let rv = rvec.as_vector();
    Some(Vector6::new(rv.x, rv.y, rv.z, t.x, t.y, t.z))
}

/// Polar projection onto SO(3) via SVD.
fn nearest_rotation(m: &Matrix3<f64>) -> Option<RotationMatrix> {
    let svd = m.svd(true, true);
    let u = svd.u?;
    let vt = svd.v_t?;
    let d = (u * vt).determinant();
    let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum()));
    Some(RotationMatrix::from_orthonormal(u * fix * vt))
}

/// Frontal initialization for small correspondence sets: identity rotation,
/// translation centered on the observations, depth chosen so the projected
/// rms spread matches the observed spread.
fn frontal_prior(
    world: &[Vector3<f64>],
    image: &[Vector2<f64>],
    cam: &CameraIntrinsics,
) -> Vector6<f64> {
    let n = world.len() as f64;
    let c3: Vector3<f64> = world.iter().sum::<Vector3<f64>>() / n;
    let c2: Vector2<f64> = image.iter().sum::<Vector2<f64>>() / n;
    let spread3 = (world
        .iter()
        .map(|p| (p.xy() - c3.xy()).norm_squared())
        .sum::<f64>()
        / n)
        .sqrt();
    let spread2 = (image.iter().map(|p| (p - c2).norm_squared()).sum::<f64>() / n).sqrt();
    let tz = if spread2 > 1e-9 && spread3 > 1e-12 {
        (cam.focal * spread3 / spread2).max(1e-3)
    } else {
        1.0
    };
    let tx = (c2.x - cam.principal_point.x) * tz / cam.focal - c3.x;
    let ty = (c2.y - cam.principal_point.y) * tz / cam.focal - c3.y;
    Vector6::new(0.0, 0.0, 0.0, tx, ty, tz - c3.z)
}

/// Residual vector (√w-scaled, 2 rows per point) and cost ½‖res‖² at the
/// given parameters. Returns cost = ∞ when a point falls behind the camera,
/// which makes LM reject the step.
fn residuals(
    params: &Vector6<f64>,
    world: &[Vector3<f64>],
    image: &[Vector2<f64>],
    weights: &[f64],
    cam: &CameraIntrinsics,
) -> (DVector<f64>, f64) {
    let r = rotation_from_params(params);
    let t = Vector3::new(params[3], params[4], params[5]);
    let mut res = DVector::zeros(2 * world.len());
    let mut behind = false;
    for i in 0..world.len() {
        let q = r * world[i] + t;
        if q.z <= 1e-12 {
            behind = true;
            break;
        }
        let u = cam.focal * q.x / q.z + cam.principal_point.x;
        let v = cam.focal * q.y / q.z + cam.principal_point.y;
        let w = weights[i].sqrt();
        res[2 * i] = w * (u - image[i].x);
        res[2 * i + 1] = w * (v - image[i].y);
    }
    if behind {
        (res, f64::INFINITY)
    } else {
        let cost = 0.5 * res.norm_squared();
        (res, cost)
    }
}

/// Rotation matrix for a raw (not yet canonicalized) parameter vector.
fn rotation_from_params(params: &Vector6<f64>) -> Matrix3<f64> {
    let v = Vector3::new(params[0], params[1], params[2]);
    rotation_matrix_raw(&v)
}

/// Rodrigues without canonicalization, for LM iterates whose angle may
/// wander past π.
fn rotation_matrix_raw(v: &Vector3<f64>) -> Matrix3<f64> {
    let theta = v.norm();
    if theta < 1e-12 {
        return Matrix3::identity();
    }
    if theta < 1e-6 {
        let t2 = theta * theta;
        let k = cross_matrix(v);
        return Matrix3::identity() + k * (1.0 - t2 / 6.0) + k * k * (0.5 - t2 / 24.0);
    }
    let u = v / theta;
    let (s, c) = theta.sin_cos();
    Matrix3::identity() * c + (u * u.transpose()) * (1.0 - c) + cross_matrix(&u) * s
}

fn cross_matrix(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Analytic Jacobian of the √w-scaled residuals with respect to the six
/// pose parameters. The rotation block follows the closed-form derivative
/// of R(r)·P with respect to the rotation vector r.
fn jacobian(
    params: &Vector6<f64>,
    world: &[Vector3<f64>],
    weights: &[f64],
    cam: &CameraIntrinsics,
) -> DMatrix<f64> {
    let rv = Vector3::new(params[0], params[1], params[2]);
    let r = rotation_matrix_raw(&rv);
    let t = Vector3::new(params[3], params[4], params[5]);
    let theta2 = rv.norm_squared();
    let f = cam.focal;

    let mut jac = DMatrix::zeros(2 * world.len(), 6);
    for i in 0..world.len() {
        let y = r * world[i]; // R·P
        let q = y + t;
        let w = weights[i].sqrt();
        let inv_z = 1.0 / q.z;
        // ∂(u,v)/∂q for the pinhole projection.
        let dproj = Matrix2x3::new(
            f * inv_z,
            0.0,
            -f * q.x * inv_z * inv_z,
            0.0,
            f * inv_z,
            -f * q.y * inv_z * inv_z,
        );

        // ∂(R·P)/∂r, column per rotation-vector component.
        let mut drot = Matrix3::zeros();
        if theta2 < 1e-16 {
            drot.copy_from(&(-cross_matrix(&y)));
        } else {
            let eye_minus_r = Matrix3::identity() - r;
            for k in 0..3 {
                let e_k = Vector3::from_fn(|j, _| if j == k { 1.0 } else { 0.0 });
                let col =
                    (rv[k] * rv.cross(&y) + rv.cross(&(eye_minus_r * e_k)).cross(&y)) / theta2;
                drot.set_column(k, &col);
            }
        }

        let j_rot = dproj * drot;
        let j_t = dproj;
        for row in 0..2 {
            for col in 0..3 {
                jac[(2 * i + row, col)] = w * j_rot[(row, col)];
                jac[(2 * i + row, 3 + col)] = w * j_t[(row, col)];
            }
        }
    }
    jac
}

/// Levenberg–Marquardt over (r, t). Returns the final parameters, the
/// accepted-iteration count, the convergence flag, and the cost history at
/// accepted iterates.
fn refine_lm(
    world: &[Vector3<f64>],
    image: &[Vector2<f64>],
    weights: &[f64],
    cam: &CameraIntrinsics,
    init: Vector6<f64>,
) -> (Vector6<f64>, usize, bool, Vec<f64>) {
    let mut params = init;
    let (_, mut cost) = residuals(&params, world, image, weights, cam);
    if !cost.is_finite() {
        // A prior that puts points behind the camera; push it out along z.
        params[5] = params[5].abs().max(1.0) * 4.0;
        let (_, c) = residuals(&params, world, image, weights, cam);
        cost = c;
    }
    let mut history = vec![cost];
    let mut lambda = LAMBDA_INIT;
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..MAX_ITERATIONS {
        let (res, _) = residuals(&params, world, image, weights, cam);
        let jac = jacobian(&params, world, weights, cam);
        let grad = jac.transpose() * &res;
        if grad.amax() < GRADIENT_TOL {
            converged = true;
            break;
        }
        let hess = jac.transpose() * &jac;

        let mut accepted = false;
        loop {
            let damped = &hess + DMatrix::identity(6, 6) * lambda;
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e12 {
                        break;
                    }
                    continue;
                }
            };
            let step_norm = step.norm();
            let candidate = params + Vector6::from_fn(|i, _| step[i]);
            let (_, new_cost) = residuals(&candidate, world, image, weights, cam);
            if new_cost < cost {
                params = candidate;
                cost = new_cost;
                history.push(cost);
                iterations += 1;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if step_norm < STEP_TOL {
                    converged = true;
                }
                break;
            }
            if step_norm < STEP_TOL {
                // No acceptable descent direction at the resolution limit.
                converged = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        if converged || !accepted {
            break;
        }
    }
    (params, iterations, converged, history)
}
