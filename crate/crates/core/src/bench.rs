//! Wall-clock comparison of the standard and fast sum-product kernels.
//!
//! Each configuration is timed `reps` times; the reported seconds per sweep is
//! the minimum over repetitions. Runs are single-threaded.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bp::{Domain, Engine, Kernel, SweepSchedule};
use crate::mrf::{build_grid_mrf, MrfModel, PairwiseTerm};
use crate::stereo::{build_stereo_mrf, GrayImage, StereoParams};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<usize>,
    pub truncations: Vec<f64>,
    pub alpha: f64,
    pub sweeps: usize,
    pub reps: usize,
    pub seed: u64,
    /// Image pair to drive the unaries instead of random values.
    pub images: Option<(GrayImage, GrayImage)>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            labels: vec![8, 16, 32, 64],
            truncations: vec![2.0],
            alpha: 1.0,
            sweeps: 2,
            reps: 3,
            seed: 0,
            images: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub num_labels: usize,
    /// Largest neighborhood size of the pairwise term.
    pub m: usize,
    pub truncation: f64,
    pub height: usize,
    pub width: usize,
    pub kernel: Kernel,
    pub sec_per_sweep: f64,
    pub madds_per_sweep: u64,
    /// Standard over fast seconds per sweep, for the same configuration.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("at least 3 repetitions are required, got {0}")]
    TooFewReps(usize),
    #[error("sweep count must be positive")]
    NoSweeps,
    #[error(transparent)]
    Mrf(#[from] crate::mrf::MrfError),
    #[error(transparent)]
    Stereo(#[from] crate::stereo::StereoError),
    #[error(transparent)]
    Bp(#[from] crate::bp::BpError),
}

fn synthetic_model(cfg: &BenchConfig, num_labels: usize, t: f64) -> Result<MrfModel, BenchError> {
    if let Some((left, right)) = &cfg.images {
        let params = StereoParams {
            num_disparities: num_labels,
            alpha: cfg.alpha,
            t_b: t,
            ..StereoParams::default()
        };
        return Ok(build_stereo_mrf(left, right, &params)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((num_labels as u64) << 32));
    let term = PairwiseTerm::truncated_linear(num_labels, cfg.alpha, t)?;
    Ok(build_grid_mrf(cfg.height, cfg.width, term, |_, _| {
        (0..num_labels)
            .map(|_| rng.random_range(0.05..1.0))
            .collect::<Vec<f64>>()
    })?)
}

/// Minimum seconds per sweep over `reps` runs of `sweeps` sweeps each, and
/// the kernel operation count of one sweep.
pub fn time_kernel(
    model: &MrfModel,
    kernel: Kernel,
    domain: Domain,
    sweeps: usize,
    reps: usize,
) -> Result<(f64, u64), BenchError> {
    let engine = Engine::new(model, kernel, domain)?;
    let schedule = SweepSchedule::for_model(model);
    let mut best = f64::INFINITY;
    let mut madds = 0;
    for _ in 0..reps {
        let (secs, m) = time_once(&engine, &schedule, sweeps)?;
        best = best.min(secs);
        madds = m;
    }
    Ok((best, madds))
}

/// Seconds and multiply-adds per sweep of one run from fresh messages.
fn time_once(
    engine: &Engine<'_>,
    schedule: &SweepSchedule,
    sweeps: usize,
) -> Result<(f64, u64), BenchError> {
    let mut store = engine.init_messages();
    let start = Instant::now();
    let stats = engine.run(&mut store, schedule, sweeps, None)?;
    let secs = start.elapsed().as_secs_f64() / sweeps as f64;
    Ok((secs, stats.madds / sweeps as u64))
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.reps < 3 {
        return Err(BenchError::TooFewReps(cfg.reps));
    }
    if cfg.sweeps == 0 {
        return Err(BenchError::NoSweeps);
    }
    let (height, width) = match &cfg.images {
        Some((_, right)) => (right.height(), right.width()),
        None => (cfg.height, cfg.width),
    };
    let mut models = Vec::new();
    for &t in &cfg.truncations {
        for &num_labels in &cfg.labels {
            let model = synthetic_model(cfg, num_labels, t)?;
            let m = model.terms()[0]
                .product()
                .as_sparse()
                .map_or(num_labels, |s| s.max_neighborhood());
            models.push((t, num_labels, m, model));
        }
    }
    let mut runs = Vec::new();
    for (_, _, _, model) in &models {
        for kernel in [Kernel::Standard, Kernel::Fast] {
            let engine = Engine::new(model, kernel, Domain::SumProduct)?;
            runs.push((engine, SweepSchedule::for_model(model), f64::INFINITY, 0u64));
        }
    }
    // Repetitions visit every configuration in turn so slow drift in machine
    // speed affects all of them alike.
    for _ in 0..cfg.reps {
        for (engine, schedule, best, madds) in runs.iter_mut() {
            let (secs, m) = time_once(engine, schedule, cfg.sweeps)?;
            *best = best.min(secs);
            *madds = m;
        }
    }
    let mut rows = Vec::new();
    for ((t, num_labels, m, _), pair) in models.iter().zip(runs.chunks_exact(2)) {
        let speedup = pair[0].2 / pair[1].2;
        for (kernel, run) in [Kernel::Standard, Kernel::Fast].into_iter().zip(pair) {
            rows.push(BenchRow {
                num_labels: *num_labels,
                m: *m,
                truncation: *t,
                height,
                width,
                kernel,
                sec_per_sweep: run.2,
                madds_per_sweep: run.3,
                speedup,
            });
        }
    }
    Ok(BenchReport { rows })
}

fn kernel_name(k: Kernel) -> &'static str {
    match k {
        Kernel::Standard => "standard",
        Kernel::Fast => "fast",
        Kernel::Pruned => "pruned",
    }
}

impl BenchReport {
    /// Whitespace-delimited table with a header line.
    pub fn to_table(&self) -> String {
        let mut out = String::from("M m grid kernel sec_per_sweep madds speedup\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{} {} {}x{} {} {:.6e} {} {:.3}",
                r.num_labels,
                r.m,
                r.height,
                r.width,
                kernel_name(r.kernel),
                r.sec_per_sweep,
                r.madds_per_sweep,
                r.speedup
            );
        }
        out
    }

    /// One line of `key=value` pairs per row.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "M={} m={} T={} grid={}x{} kernel={} sec_per_sweep={:e} madds={} speedup={}",
                r.num_labels,
                r.m,
                r.truncation,
                r.height,
                r.width,
                kernel_name(r.kernel),
                r.sec_per_sweep,
                r.madds_per_sweep,
                r.speedup
            );
        }
        out
    }

    /// Rows of one kernel at truncation `t`, ordered as measured.
    pub fn series(&self, kernel: Kernel, t: f64) -> Vec<&BenchRow> {
        self.rows
            .iter()
            .filter(|r| r.kernel == kernel && r.truncation == t)
            .collect()
    }

    /// Least-squares slope of `ln(sec_per_sweep)` against `ln(M)`.
    pub fn scaling_exponent(&self, kernel: Kernel, t: f64) -> Option<f64> {
        let rows = self.series(kernel, t);
        let xs: Vec<f64> = rows.iter().map(|r| (r.num_labels as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.sec_per_sweep.ln()).collect();
        loglog_slope_ln(&xs, &ys)
    }
}

/// Least-squares slope of `ln(y)` against `ln(x)`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    loglog_slope_ln(&lx, &ly)
}

fn loglog_slope_ln(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}
