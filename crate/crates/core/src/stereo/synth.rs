//! Synthetic stereo pairs with known disparity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GrayImage, StereoParams};

/// A generated pair together with the disparity planted at every
/// right-image pixel, row-major.
#[derive(Debug, Clone)]
pub struct PlantedPair {
    pub left: GrayImage,
    pub right: GrayImage,
    pub truth: Vec<usize>,
}

/// Random texture in `[128 - amplitude, 128 + amplitude]` (clamped to 8 bits)
/// on the right image; the left image is the right one shifted by
/// `disparity(r, c)`, so `L(r, c + d) = R(r, c)`. Left pixels not covered by
/// the shift get fresh texture.
pub fn planted_stereogram(
    height: usize,
    width: usize,
    amplitude: u8,
    seed: u64,
    disparity: impl Fn(usize, usize) -> usize,
) -> PlantedPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = 128u16.saturating_sub(u16::from(amplitude)) as u8;
    let hi = (128u16 + u16::from(amplitude)).min(255) as u8;
    let right = GrayImage::from_fn(height, width, |_, _| rng.random_range(lo..=hi));
    let mut left_px: Vec<u8> = (0..height * width)
        .map(|_| rng.random_range(lo..=hi))
        .collect();
    let mut truth = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            let d = disparity(r, c);
            truth.push(d);
            if c + d < width {
                left_px[r * width + c + d] = right.get(r, c);
            }
        }
    }
    let left = GrayImage::new(height, width, left_px).expect("same dimensions");
    PlantedPair { left, right, truth }
}

/// Full-contrast random dots at one constant disparity.
pub fn random_dot_stereogram(
    height: usize,
    width: usize,
    disparity: usize,
    seed: u64,
) -> PlantedPair {
    planted_stereogram(height, width, 128, seed, |_, _| disparity)
}

/// A faint-texture scene with a large disparity step, paired with weak
/// matching costs. Forcing `fbar` to zero forbids any neighbor jump of `t_b`
/// or more, so the pruned model cannot represent the step and smears it.
pub fn pruning_fixture() -> (PlantedPair, StereoParams) {
    let (height, width) = (24, 48);
    let pair = planted_stereogram(
        height,
        width,
        12,
        0x5eed,
        |_, c| if c < width / 2 { 1 } else { 9 },
    );
    let params = StereoParams {
        num_disparities: 12,
        alpha: 1.0,
        t_b: 2.0,
        beta: 0.02,
        t_u: 20.0,
        sweeps: 10,
    };
    (pair, params)
}
