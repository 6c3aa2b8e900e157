//! Landmark error metrics: per-image inter-ocular-normalized error and its
//! aggregate statistics — mean error rate, threshold fractions, accumulative
//! error curve, and area under the curve.
//!
//! The per-image error is
//! `e = Σᵢ ‖pᵢ − p̂ᵢ‖ / (m · ‖p̂_left − p̂_right‖)`, where p̂ are the ground
//! truth landmarks and the normalizer is the ground-truth outer eye corner
//! distance. Threshold comparisons use ≤ for the 5/10/20% columns and
//! strict > for the 40% column. The mean error rate averages per-image
//! errors; aggregation is order-independent (statistics are computed from
//! the sorted error vector).
//!
//! Normalizing by inter-ocular distance biases against non-frontal views:
//! perspective foreshortening shrinks the projected eye distance, inflating
//! e for the same pixel-space error. `eval`'s report makes that bias easy to
//! demonstrate on synthetic data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::{LandmarkSet2D, Role};

/// One image's normalized landmark error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageError {
    /// Normalized error e, unitless.
    pub error: f64,
    /// Number of landmarks m.
    pub landmark_count: usize,
    /// Ground-truth inter-ocular distance, pixels.
    pub inter_ocular: f64,
}

/// Aggregate statistics over a set of per-image errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Per-image errors in input order.
    pub per_image: Vec<f64>,
    /// Mean error rate: the mean of per-image errors.
    pub mer: f64,
    pub frac_le_5: f64,
    pub frac_le_10: f64,
    pub frac_le_20: f64,
    pub frac_gt_40: f64,
    /// Accumulative curve: (sorted error, cumulative fraction of images).
    pub curve: Vec<[f64; 2]>,
    /// Area under the accumulative curve on [0, cutoff], normalized by the
    /// cutoff.
    pub auc: f64,
    pub cutoff: f64,
}

/// Normalized error of predicted landmarks against ground truth.
pub fn image_error(pred: &LandmarkSet2D, gt: &LandmarkSet2D) -> Result<ImageError> {
    if pred.scheme() != gt.scheme() {
        return Err(Error::SchemeMismatch {
            expected: gt.scheme().to_string(),
            found: pred.scheme().to_string(),
        });
    }
    if pred.len() != gt.len() {
        return Err(Error::invalid(format!(
            "landmark counts differ: {} vs {}",
            pred.len(),
            gt.len()
        )));
    }
    let left = gt
        .role_point(Role::OuterEyeCornerLeft)
        .ok_or_else(|| Error::invalid("ground truth lacks outer_eye_corner_left"))?;
    let right = gt
        .role_point(Role::OuterEyeCornerRight)
        .ok_or_else(|| Error::invalid("ground truth lacks outer_eye_corner_right"))?;
    let inter_ocular = (left - right).norm();
    if inter_ocular <= 0.0 {
        return Err(Error::ZeroInterOcular);
    }
    let m = pred.len();
    let sum: f64 = pred
        .points()
        .iter()
        .zip(gt.points())
        .map(|(p, q)| (p - q).norm())
        .sum();
    Ok(ImageError {
        error: sum / (m as f64 * inter_ocular),
        landmark_count: m,
        inter_ocular,
    })
}

/// Fraction of errors ≤ t. This is the accumulative curve as a function, so
/// the threshold columns agree with the curve exactly.
fn cumulative_fraction(sorted: &[f64], t: f64) -> f64 {
    let count = sorted.partition_point(|e| *e <= t);
    count as f64 / sorted.len() as f64
}

/// Aggregate per-image errors into a report. `cutoff` bounds the AUC
/// integral (0.10 is the conventional default).
pub fn aggregate(errors: &[ImageError], cutoff: f64) -> Result<ErrorReport> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("no per-image errors".to_string()));
    }
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::invalid("cutoff must be positive"));
    }
    let per_image: Vec<f64> = errors.iter().map(|e| e.error).collect();
    let mut sorted = per_image.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("errors are finite"));

    let n = sorted.len() as f64;
    let mer = sorted.iter().sum::<f64>() / n;
    let curve: Vec<[f64; 2]> = sorted
        .iter()
        .enumerate()
        .map(|(i, e)| [*e, (i + 1) as f64 / n])
        .collect();

    // Exact integral of the step curve on [0, cutoff]:
    // ∫₀ᶜ CDF(t) dt = mean_i max(0, c − eᵢ).
    let auc = sorted
        .iter()
        .map(|e| (cutoff - e.min(cutoff)).max(0.0))
        .sum::<f64>()
        / (n * cutoff);

    Ok(ErrorReport {
        mer,
        frac_le_5: cumulative_fraction(&sorted, 0.05),
        frac_le_10: cumulative_fraction(&sorted, 0.10),
        frac_le_20: cumulative_fraction(&sorted, 0.20),
        frac_gt_40: 1.0 - cumulative_fraction(&sorted, 0.40),
        curve,
        auc,
        cutoff,
        per_image,
    })
}

/// Render the accumulative curve as `error,fraction` CSV rows.
pub fn curve_to_csv(report: &ErrorReport) -> String {
    let mut out = String::from("error,fraction\n");
    for [e, f] in &report.curve {
        out.push_str(&format!("{e},{f}\n"));
    }
    out
}

/// Render the accumulative curve as a standalone SVG plot (polyline plus
/// axes; no plotting dependencies).
pub fn curve_to_svg(report: &ErrorReport) -> String {
    let width = 640.0;
    let height = 480.0;
    let margin = 60.0;
    let plot_w = width - 2.0 * margin;
    let plot_h = height - 2.0 * margin;
    let x_max = report
        .curve
        .last()
        .map(|p| p[0])
        .unwrap_or(report.cutoff)
        .max(report.cutoff)
        .max(1e-9);

    let sx = |e: f64| margin + (e / x_max).min(1.0) * plot_w;
    let sy = |f: f64| height - margin - f * plot_h;

    let mut points = String::new();
    let mut prev_f = 0.0;
    points.push_str(&format!("{:.2},{:.2} ", sx(0.0), sy(0.0)));
    for [e, f] in &report.curve {
        // Step curve: horizontal then vertical.
        points.push_str(&format!("{:.2},{:.2} ", sx(*e), sy(prev_f)));
        points.push_str(&format!("{:.2},{:.2} ", sx(*e), sy(*f)));
        prev_f = *f;
    }
    points.push_str(&format!("{:.2},{:.2}", sx(x_max), sy(prev_f)));

    let mut ticks = String::new();
    for i in 0..=5 {
        let e = x_max * i as f64 / 5.0;
        let x = sx(e);
        ticks.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#999\"/>\
             <text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{e:.3}</text>",
            height - margin,
            height - margin + 6.0,
            height - margin + 20.0,
        ));
        let f = i as f64 / 5.0;
        let y = sy(f);
        ticks.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#999\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{f:.1}</text>",
            margin - 6.0,
            margin,
            margin - 10.0,
            y + 4.0,
        ));
    }

    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\
         <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\
         {ticks}\
         <polyline points=\"{points}\" fill=\"none\" stroke=\"#c33\" stroke-width=\"2\"/>\
         <text x=\"{cx}\" y=\"{ly}\" font-size=\"14\" text-anchor=\"middle\">normalized error</text>\
         <text x=\"16\" y=\"{cy}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 {cy})\">fraction of images</text>\
         </svg>\n",
        m = margin,
        b = height - margin,
        r = width - margin,
        t = margin,
        cx = width / 2.0,
        ly = height - 16.0,
        cy = height / 2.0,
    )
}
