//! Command-line front end: `stereo`, `verify`, `bench` and `synth`.
//!
//! Each command writes its report to the supplied writer and returns the
//! process exit code, so the commands can be driven from tests.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::bench::{run_bench, BenchConfig};
use crate::bp::{Domain, Kernel, SweepSchedule};
use crate::imageio::{read_pgm_file, write_pgm_file, PgmMode};
use crate::mrf::text::parse_model;
use crate::mrf::MrfModel;
use crate::stereo::synth::{pruning_fixture, random_dot_stereogram};
use crate::stereo::{build_stereo_mrf, disparity_to_image, estimate_disparity, StereoParams};
use crate::verify::{
    compare_fast_standard, oracle_check, pruned_disagreement, random_grid_model, random_tree_model,
    ComparisonReport,
};

#[derive(Debug, Parser)]
#[command(
    name = "fastbp",
    version,
    about = "Belief propagation with fast truncated-potential updates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a disparity map from a rectified PGM pair.
    Stereo(StereoArgs),
    /// Check that the fast kernels reproduce the standard ones.
    Verify(VerifyArgs),
    /// Time standard and fast sum-product sweeps.
    Bench(BenchArgs),
    /// Write a random-dot stereogram pair.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Standard,
    Fast,
    Pruned,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Standard => Kernel::Standard,
            KernelArg::Fast => Kernel::Fast,
            KernelArg::Pruned => Kernel::Pruned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Sum,
    Max,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Sum => Domain::SumProduct,
            DomainArg::Max => Domain::MaxSum,
        }
    }
}

#[derive(Debug, Args)]
pub struct StereoParamArgs {
    /// Number of disparities M.
    #[arg(long = "disparities", default_value_t = 16)]
    pub num_disparities: usize,
    /// Smoothness slope.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Smoothness truncation.
    #[arg(long = "t-b", default_value_t = 2.0)]
    pub t_b: f64,
    /// Matching-cost slope.
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    /// Matching-cost truncation.
    #[arg(long = "t-u", default_value_t = 20.0)]
    pub t_u: f64,
    #[arg(long, default_value_t = 10)]
    pub sweeps: usize,
}

impl From<&StereoParamArgs> for StereoParams {
    fn from(a: &StereoParamArgs) -> Self {
        StereoParams {
            num_disparities: a.num_disparities,
            alpha: a.alpha,
            t_b: a.t_b,
            beta: a.beta,
            t_u: a.t_u,
            sweeps: a.sweeps,
        }
    }
}

#[derive(Debug, Args)]
pub struct StereoArgs {
    /// Left image (PGM).
    #[arg(long)]
    pub left: PathBuf,
    /// Right image (PGM); disparities are measured on its pixel grid.
    #[arg(long)]
    pub right: PathBuf,
    /// Output disparity image (PGM).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = KernelArg::Fast)]
    pub kernel: KernelArg,
    #[arg(long, value_enum, default_value_t = DomainArg::Max)]
    pub domain: DomainArg,
    #[command(flatten)]
    pub params: StereoParamArgs,
    /// Update independent rows and columns on several threads.
    #[arg(long)]
    pub parallel: bool,
    /// Write the disparity image as plain (P2) PGM.
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Model in the plain-text MRF format.
    #[arg(long, conflicts_with = "random", required_unless_present_any = ["random", "pruned"])]
    pub model: Option<PathBuf>,
    /// Check randomly generated grids instead of a model file.
    #[arg(long)]
    pub random: bool,
    /// Number of random instances.
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    /// First seed; instance `k` uses `seed + k`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub max_side: usize,
    #[arg(long, default_value_t = 32)]
    pub max_labels: usize,
    #[arg(long, default_value_t = 10)]
    pub sweeps: usize,
    /// Also compare tree beliefs and MAP labels with exhaustive enumeration.
    #[arg(long)]
    pub oracle: bool,
    /// Report pruned-versus-fast label disagreement on the pruning fixture.
    #[arg(long)]
    pub pruned: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Grid size as HxW.
    #[arg(long, default_value = "64x64", value_parser = parse_grid)]
    pub grid: (usize, usize),
    /// Label counts, comma separated.
    #[arg(long = "M", value_delimiter = ',', default_values_t = [8usize, 16, 32, 64])]
    pub labels: Vec<usize>,
    /// Truncation thresholds, comma separated.
    #[arg(long = "T", value_delimiter = ',', default_values_t = [2.0f64])]
    pub truncations: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Key=value report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drive the unaries from an image pair instead of random values.
    #[arg(long, requires = "right")]
    pub left: Option<PathBuf>,
    #[arg(long, requires = "left")]
    pub right: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 48)]
    pub height: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 3)]
    pub disparity: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    #[arg(long)]
    pub ascii: bool,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let h: usize = h.trim().parse().map_err(|e| format!("bad height: {e}"))?;
    let w: usize = w.trim().parse().map_err(|e| format!("bad width: {e}"))?;
    if h == 0 || w == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((h, w))
}

fn pgm_mode(ascii: bool) -> PgmMode {
    if ascii {
        PgmMode::Ascii
    } else {
        PgmMode::Binary
    }
}

pub fn cmd_stereo(args: &StereoArgs, out: &mut impl Write) -> Result<i32> {
    let left =
        read_pgm_file(&args.left).with_context(|| format!("reading {}", args.left.display()))?;
    let right =
        read_pgm_file(&args.right).with_context(|| format!("reading {}", args.right.display()))?;
    let params = StereoParams::from(&args.params);
    let est = estimate_disparity(
        &left,
        &right,
        &params,
        args.kernel.into(),
        args.domain.into(),
        args.parallel,
    )?;
    for (n, secs) in est.sweep_seconds.iter().enumerate() {
        writeln!(out, "sweep {} {:.6}", n + 1, secs)?;
    }
    let img = disparity_to_image(
        &est.labels,
        params.num_disparities,
        right.height(),
        right.width(),
    )?;
    write_pgm_file(&args.out, &img, pgm_mode(args.ascii))
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(0)
}

fn print_comparison(out: &mut impl Write, name: &str, r: &ComparisonReport) -> std::io::Result<()> {
    write!(
        out,
        "{name} {} sum_msg_dev={:.3e} sum_belief_dev={:.3e} sum_labels={}/{} max_identical={} max_label_mismatches={}",
        if r.passed() { "PASS" } else { "FAIL" },
        r.sum_message_dev,
        r.sum_belief_dev,
        r.sum_labels_compared - r.sum_label_mismatches,
        r.sum_labels_compared,
        r.max_messages_identical,
        r.max_label_mismatches,
    )?;
    if let Some(o) = &r.oracle {
        write!(
            out,
            " oracle_belief_dev={:.3e} map_unique={} map_mismatches={}",
            o.belief_dev, o.map_unique, o.map_mismatches
        )?;
    }
    writeln!(out)
}

fn check_model(model: &MrfModel, sweeps: usize, oracle: bool) -> Result<ComparisonReport> {
    let mut report = compare_fast_standard(model, &SweepSchedule::for_model(model), sweeps)?;
    if oracle {
        if !model.is_tree() {
            bail!("--oracle requires a tree-structured model");
        }
        report.oracle = Some(oracle_check(model)?);
    }
    Ok(report)
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut impl Write) -> Result<i32> {
    let mut failures = 0usize;
    let mut checked = 0usize;
    if let Some(path) = &args.model {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let model = parse_model(&text).with_context(|| format!("parsing {}", path.display()))?;
        let report = check_model(&model, args.sweeps, args.oracle)?;
        print_comparison(out, &path.display().to_string(), &report)?;
        checked += 1;
        failures += usize::from(!report.passed());
    }
    if args.random {
        let seeds: Vec<u64> = (0..args.seeds).map(|k| args.seed.wrapping_add(k)).collect();
        let reports: Vec<Result<ComparisonReport>> = seeds
            .par_iter()
            .map(|&seed| {
                let model = random_grid_model(seed, args.max_side, args.max_labels);
                let mut report = check_model(&model, args.sweeps, false)?;
                if args.oracle {
                    report.oracle = Some(oracle_check(&random_tree_model(seed, 8, 5))?);
                }
                Ok(report)
            })
            .collect();
        let mut passed = 0usize;
        for (seed, report) in seeds.iter().zip(reports) {
            let report = report?;
            print_comparison(out, &format!("seed={seed}"), &report)?;
            passed += usize::from(report.passed());
        }
        writeln!(out, "random: {passed}/{} PASS", seeds.len())?;
        checked += seeds.len();
        failures += seeds.len() - passed;
    }
    if args.pruned {
        let (pair, params) = pruning_fixture();
        let model = build_stereo_mrf(&pair.left, &pair.right, &params)?;
        let frac = pruned_disagreement(&model, &SweepSchedule::grid(), params.sweeps)?;
        writeln!(
            out,
            "pruned-vs-fast label disagreement {:.2}% (expected-divergence)",
            100.0 * frac
        )?;
    }
    if checked > 0 {
        writeln!(
            out,
            "{}: {}/{} within tolerance",
            if failures == 0 { "PASS" } else { "FAIL" },
            checked - failures,
            checked
        )?;
    }
    Ok(i32::from(failures > 0))
}

pub fn cmd_bench(args: &BenchArgs, out: &mut impl Write) -> Result<i32> {
    let images = match (&args.left, &args.right) {
        (Some(l), Some(r)) => Some((
            read_pgm_file(l).with_context(|| format!("reading {}", l.display()))?,
            read_pgm_file(r).with_context(|| format!("reading {}", r.display()))?,
        )),
        _ => None,
    };
    let cfg = BenchConfig {
        height: args.grid.0,
        width: args.grid.1,
        labels: args.labels.clone(),
        truncations: args.truncations.clone(),
        alpha: args.alpha,
        sweeps: args.sweeps,
        reps: args.reps,
        seed: args.seed,
        images,
    };
    let report = run_bench(&cfg)?;
    out.write_all(report.to_table().as_bytes())?;
    if let Some(path) = &args.out {
        std::fs::write(path, report.to_key_values())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(0)
}

pub fn cmd_synth(args: &SynthArgs, out: &mut impl Write) -> Result<i32> {
    if args.disparity >= args.width {
        bail!(
            "disparity {} must be smaller than width {}",
            args.disparity,
            args.width
        );
    }
    let pair = random_dot_stereogram(args.height, args.width, args.disparity, args.seed);
    let mode = pgm_mode(args.ascii);
    write_pgm_file(&args.left, &pair.left, mode)
        .with_context(|| format!("writing {}", args.left.display()))?;
    write_pgm_file(&args.right, &pair.right, mode)
        .with_context(|| format!("writing {}", args.right.display()))?;
    writeln!(
        out,
        "wrote {}x{} pair at disparity {}",
        args.height, args.width, args.disparity
    )?;
    Ok(0)
}

pub fn run(cli: &Cli, out: &mut impl Write) -> Result<i32> {
    match &cli.command {
        Command::Stereo(a) => cmd_stereo(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Synth(a) => cmd_synth(a, out),
    }
}
