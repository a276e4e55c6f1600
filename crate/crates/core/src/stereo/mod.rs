//! Grid MRF for rectified stereo.
//!
//! The right image is the reference. A pixel `(r, c)` with disparity `x` is
//! expected to match the left image at `(r, c + x)`. Matching cost and
//! smoothness are both truncated-linear:
//!
//! * unary `g(x) = exp(-beta * min(|R(r, c) - L(r, c + x)|, t_u))`
//! * pairwise `f(x_i, x_j) = exp(-alpha * min(|x_i - x_j|, t_b))`
//!
//! Hypotheses that leave the frame (`c + x >= width`) get the full unary
//! penalty `exp(-beta * t_u)`.

pub mod synth;

use thiserror::Error;

use crate::bp::{labels, BpError, Domain, Engine, Kernel, SweepSchedule};
pub use crate::imageio::GrayImage;
use crate::mrf::{build_grid_mrf, MrfError, MrfModel, PairwiseTerm, UnaryPair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoParams {
    /// Disparity count; states are `0..num_disparities`.
    pub num_disparities: usize,
    pub alpha: f64,
    pub t_b: f64,
    pub beta: f64,
    pub t_u: f64,
    pub sweeps: usize,
}

impl Default for StereoParams {
    fn default() -> Self {
        Self {
            num_disparities: 16,
            alpha: 1.0,
            t_b: 2.0,
            beta: 0.05,
            t_u: 20.0,
            sweeps: 10,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StereoError {
    #[error("left image is {0}x{1} but right image is {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("invalid stereo parameter: {0}")]
    InvalidParams(&'static str),
    #[error("pixel ({0}, {1}) outside the image")]
    PixelOutOfRange(usize, usize),
    #[error("label {label} at pixel {index} outside [0, {num_labels})")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        num_labels: usize,
    },
    #[error("expected {expected} labels, got {found}")]
    LabelCount { expected: usize, found: usize },
    #[error(transparent)]
    Mrf(#[from] MrfError),
    #[error(transparent)]
    Bp(#[from] BpError),
}

impl StereoParams {
    pub fn validate(&self, width: usize) -> Result<(), StereoError> {
        if self.num_disparities == 0 {
            return Err(StereoError::InvalidParams("disparity count must be >= 1"));
        }
        if self.num_disparities > width {
            return Err(StereoError::InvalidParams(
                "disparity count exceeds image width",
            ));
        }
        for (v, what) in [
            (self.alpha, "alpha must be positive"),
            (self.t_b, "t_b must be positive"),
            (self.beta, "beta must be positive"),
            (self.t_u, "t_u must be positive"),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(StereoError::InvalidParams(what));
            }
        }
        if self.sweeps == 0 {
            return Err(StereoError::InvalidParams("sweep count must be >= 1"));
        }
        Ok(())
    }
}

fn check_pair(left: &GrayImage, right: &GrayImage) -> Result<(), StereoError> {
    if left.height() != right.height() || left.width() != right.width() {
        return Err(StereoError::SizeMismatch(
            left.height(),
            left.width(),
            right.height(),
            right.width(),
        ));
    }
    Ok(())
}

/// Unary tables of pixel `(r, c)` in both domains.
fn unary_pair(
    left: &GrayImage,
    right: &GrayImage,
    r: usize,
    c: usize,
    params: &StereoParams,
) -> UnaryPair {
    let reference = f64::from(right.get(r, c));
    let log: Vec<f64> = (0..params.num_disparities)
        .map(|x| {
            let cost = if c + x < left.width() {
                (reference - f64::from(left.get(r, c + x)))
                    .abs()
                    .min(params.t_u)
            } else {
                params.t_u
            };
            // 0.0 - keeps a perfect match at +0.0
            0.0 - params.beta * cost
        })
        .collect();
    UnaryPair {
        product: log.iter().map(|v| v.exp()).collect(),
        log,
    }
}

/// Matching likelihood of every disparity at right-image pixel `(r, c)`.
pub fn stereo_unary(
    left: &GrayImage,
    right: &GrayImage,
    r: usize,
    c: usize,
    params: &StereoParams,
) -> Result<Vec<f64>, StereoError> {
    check_pair(left, right)?;
    if r >= right.height() || c >= right.width() {
        return Err(StereoError::PixelOutOfRange(r, c));
    }
    Ok(unary_pair(left, right, r, c, params).product)
}

/// Grid MRF over the right image with one shared truncated-linear smoothness
/// term.
pub fn build_stereo_mrf(
    left: &GrayImage,
    right: &GrayImage,
    params: &StereoParams,
) -> Result<MrfModel, StereoError> {
    check_pair(left, right)?;
    params.validate(right.width())?;
    let term = PairwiseTerm::truncated_linear(params.num_disparities, params.alpha, params.t_b)?;
    Ok(build_grid_mrf(
        right.height(),
        right.width(),
        term,
        |r, c| unary_pair(left, right, r, c, params),
    )?)
}

/// Labels and per-sweep wall-clock time of one inference run.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityEstimate {
    pub labels: Vec<usize>,
    pub sweep_seconds: Vec<f64>,
}

/// Builds the stereo MRF, runs `params.sweeps` grid sweeps and extracts the
/// per-pixel MAP disparity.
pub fn estimate_disparity(
    left: &GrayImage,
    right: &GrayImage,
    params: &StereoParams,
    kernel: Kernel,
    domain: Domain,
    parallel: bool,
) -> Result<DisparityEstimate, StereoError> {
    let model = build_stereo_mrf(left, right, params)?;
    let engine = Engine::new(&model, kernel, domain)?.with_parallel(parallel);
    let schedule = SweepSchedule::grid();
    let mut store = engine.init_messages();
    let mut sweep_seconds = Vec::with_capacity(params.sweeps);
    for _ in 0..params.sweeps {
        let start = std::time::Instant::now();
        engine.sweep(&mut store, &schedule)?;
        sweep_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok(DisparityEstimate {
        labels: labels(&model, &store)?,
        sweep_seconds,
    })
}

/// Renders labels as intensities `round(label * 255 / max(M - 1, 1))`.
pub fn disparity_to_image(
    labels: &[usize],
    num_disparities: usize,
    height: usize,
    width: usize,
) -> Result<GrayImage, StereoError> {
    if labels.len() != height * width {
        return Err(StereoError::LabelCount {
            expected: height * width,
            found: labels.len(),
        });
    }
    let denom = num_disparities.saturating_sub(1).max(1);
    let mut pixels = Vec::with_capacity(labels.len());
    for (index, &label) in labels.iter().enumerate() {
        if label >= num_disparities {
            return Err(StereoError::LabelOutOfRange {
                index,
                label,
                num_labels: num_disparities,
            });
        }
        pixels.push(((2 * label * 255 + denom) / (2 * denom)) as u8);
    }
    GrayImage::new(height, width, pixels).map_err(|_| StereoError::LabelCount {
        expected: height * width,
        found: labels.len(),
    })
}

/// Fraction of pixels labeled `disparity`, ignoring the rightmost
/// `exclude_right` columns.
pub fn planted_accuracy(
    labels: &[usize],
    width: usize,
    disparity: usize,
    exclude_right: usize,
) -> f64 {
    let keep = width.saturating_sub(exclude_right);
    let (mut hit, mut total) = (0usize, 0usize);
    for row in labels.chunks_exact(width) {
        for &l in &row[..keep] {
            total += 1;
            hit += usize::from(l == disparity);
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}
