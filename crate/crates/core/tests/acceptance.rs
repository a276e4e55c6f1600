//! Acceptance suite. Runs every criterion in order, serially so the timing
//! criteria are not disturbed, and prints one PASS/FAIL line per criterion.
//! Exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use fastbp::bench::{run_bench, BenchConfig, BenchReport};
use fastbp::bp::kernels::{
    update_fast_max, update_fast_sum, update_standard_max, update_standard_sum,
};
use fastbp::bp::{Domain, Kernel, SweepSchedule};
use fastbp::imageio::{read_pgm, write_pgm, GrayImage, PgmMode};
use fastbp::mrf::SparseTruncatedPotential;
use fastbp::stereo::synth::{pruning_fixture, random_dot_stereogram};
use fastbp::stereo::{
    build_stereo_mrf, disparity_to_image, estimate_disparity, planted_accuracy, StereoParams,
};
use fastbp::verify::{
    compare_fast_standard, oracle_check, pruned_disagreement, random_sparse_potential,
    random_tree_model,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Reference message update straight from the definition, over the dense
/// table: `sum_i f(i, j) h(i)` or `max_i f(i, j) + h(i)`.
fn reference_update(h: &[f64], f: &SparseTruncatedPotential, max: bool) -> Vec<f64> {
    let m = h.len();
    (0..m)
        .map(|xj| {
            let terms = (0..m).map(|xi| {
                if max {
                    f.get(xi, xj) + h[xi]
                } else {
                    f.get(xi, xj) * h[xi]
                }
            });
            if max {
                terms.fold(f64::NEG_INFINITY, f64::max)
            } else {
                terms.sum()
            }
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Kernel cases shared by the first two criteria: (h, potential) pairs with
/// M cycling through 4, 16 and 64.
fn kernel_cases(count: usize) -> Vec<(Vec<f64>, SparseTruncatedPotential)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    (0..count)
        .map(|k| {
            let m = [4, 16, 64][k % 3];
            let nbd = rng.random_range(1..=m.min(7));
            let f = random_sparse_potential(&mut rng, m, nbd);
            let h: Vec<f64> = (0..m).map(|_| rng.random_range(1e-3..1.0)).collect();
            (h, f)
        })
        .collect()
}

fn kernel_exactness_sum() -> Outcome {
    let start = Instant::now();
    let cases = kernel_cases(1200);
    let (mut worst, mut worst_ref) = (0.0f64, 0.0f64);
    for (h, f) in &cases {
        let dense = f.densify();
        let mut std_out = vec![0.0; h.len()];
        let mut fast_out = vec![0.0; h.len()];
        update_standard_sum(h, &dense, &mut std_out);
        update_fast_sum(h, f, &mut fast_out);
        let reference = reference_update(h, f, false);
        for j in 0..h.len() {
            worst = worst.max(rel(std_out[j], fast_out[j]));
            worst_ref = worst_ref.max(rel(reference[j], fast_out[j]));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && worst_ref <= 1e-9 && secs < 10.0,
        format!(
            "{} cases, max rel dev fast/standard {worst:.2e}, fast/reference {worst_ref:.2e}, {secs:.2}s",
            cases.len()
        ),
    )
}

fn kernel_exactness_max() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3a5);
    let cases = kernel_cases(1200);
    let mut identical = 0;
    let mut reference_identical = 0;
    for (h, f) in &cases {
        let log_f = f.map_values(f64::ln);
        let log_h: Vec<f64> = h
            .iter()
            .map(|v| v.ln() - rng.random_range(0.0..3.0))
            .collect();
        let mut std_out = vec![0.0; h.len()];
        let mut fast_out = vec![0.0; h.len()];
        update_standard_max(&log_h, &log_f.densify(), &mut std_out);
        update_fast_max(&log_h, &log_f, &mut fast_out).expect("random potentials are max-sum safe");
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        identical += usize::from(bits(&std_out) == bits(&fast_out));
        reference_identical +=
            usize::from(bits(&reference_update(&log_h, &log_f, true)) == bits(&fast_out));
    }
    outcome(
        identical == cases.len() && reference_identical == cases.len(),
        format!(
            "{identical}/{} bitwise equal to standard, {reference_identical}/{} to reference",
            cases.len(),
            cases.len()
        ),
    )
}

fn end_to_end_exactness() -> Outcome {
    let (height, width, disparity) = (48, 64, 3);
    let pair = random_dot_stereogram(height, width, disparity, 64);
    let params = StereoParams::default();
    let render = |kernel| {
        let est = estimate_disparity(
            &pair.left,
            &pair.right,
            &params,
            kernel,
            Domain::MaxSum,
            false,
        )
        .expect("stereo run");
        let img =
            disparity_to_image(&est.labels, params.num_disparities, height, width).expect("render");
        (write_pgm(&img, PgmMode::Binary), est.labels)
    };
    let (fast_bytes, fast_labels) = render(Kernel::Fast);
    let (std_bytes, _) = render(Kernel::Standard);
    let model = build_stereo_mrf(&pair.left, &pair.right, &params).expect("model");
    let cmp =
        compare_fast_standard(&model, &SweepSchedule::grid(), params.sweeps).expect("comparison");
    let accuracy = planted_accuracy(&fast_labels, width, disparity, params.num_disparities);
    outcome(
        fast_bytes == std_bytes && cmp.max_messages_identical && cmp.sum_label_mismatches == 0,
        format!(
            "max-sum images identical: {}, sum-product labels agree on {}/{} gap-qualified pixels, planted accuracy {:.3}",
            fast_bytes == std_bytes,
            cmp.sum_labels_compared - cmp.sum_label_mismatches,
            cmp.sum_labels_compared,
            accuracy
        ),
    )
}

fn oracle_correctness() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut mismatches, mut unique) = (0.0f64, 0usize, 0usize);
    for seed in 0..50 {
        let tree = random_tree_model(1000 + seed, 8, 5);
        let r = oracle_check(&tree).expect("oracle check");
        worst = worst.max(r.belief_dev);
        mismatches += r.map_mismatches;
        unique += usize::from(r.map_unique);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && mismatches == 0 && secs < 5.0,
        format!("50 trees, max belief rel dev {worst:.2e}, MAP mismatches {mismatches} over {unique} unique MAPs, {secs:.2}s"),
    )
}

fn speed_bench() -> BenchReport {
    run_bench(&BenchConfig::default()).expect("benchmark")
}

fn speedup(report: &BenchReport, secs: f64) -> Outcome {
    let at = |m: usize| {
        report
            .rows
            .iter()
            .find(|r| r.num_labels == m && r.kernel == Kernel::Fast)
            .map(|r| (r.speedup, r.m))
            .expect("row present")
    };
    let ((s64, m64), (s16, _)) = (at(64), at(16));
    outcome(
        s64 >= 3.0 && s64 > s16 && secs < 120.0,
        format!("64x64 T=2 m={m64}: speedup {s64:.2} at M=64, {s16:.2} at M=16, {secs:.1}s"),
    )
}

fn scaling(report: &BenchReport) -> Outcome {
    let std = report
        .scaling_exponent(Kernel::Standard, 2.0)
        .expect("standard slope");
    let fast = report
        .scaling_exponent(Kernel::Fast, 2.0)
        .expect("fast slope");
    outcome(
        (1.7..=2.3).contains(&std) && (0.7..=1.4).contains(&fast),
        format!("log-log slope standard {std:.3}, fast {fast:.3}"),
    )
}

fn pruning_pitfall() -> Outcome {
    let (pair, params) = pruning_fixture();
    let model = build_stereo_mrf(&pair.left, &pair.right, &params).expect("fixture model");
    let frac =
        pruned_disagreement(&model, &SweepSchedule::grid(), params.sweeps).expect("pruned run");
    outcome(
        frac >= 0.05,
        format!("pruned vs fast label disagreement {:.2}%", 100.0 * frac),
    )
}

fn operation_counts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c);
    let (mut fast_ok, mut std_ok, mut total) = (0, 0, 0);
    let mut worst_ratio = 0.0f64;
    for k in 0..300 {
        let m = [4, 16, 64][k % 3];
        let f = if k % 2 == 0 {
            let nbd = rng.random_range(0..=m.min(9));
            random_sparse_potential(&mut rng, m, nbd)
        } else {
            SparseTruncatedPotential::truncated_linear(m, 1.0, rng.random_range(1.0..5.0))
                .expect("potential")
        };
        let h: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
        let mut out = vec![0.0; m];
        let fast = update_fast_sum(&h, &f, &mut out);
        let std = update_standard_sum(&h, &f.densify(), &mut out);
        let bound = 4 * (f.max_neighborhood() * m + m) as u64;
        worst_ratio = worst_ratio.max(fast as f64 / bound as f64);
        fast_ok += usize::from(fast <= bound);
        std_ok += usize::from(std >= (m * m) as u64);
        total += 1;
    }
    outcome(
        fast_ok == total && std_ok == total,
        format!("fast within 4(mM+M): {fast_ok}/{total} (worst {worst_ratio:.2} of bound), standard >= M^2: {std_ok}/{total}"),
    )
}

fn pgm_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x969);
    let mut ok = 0;
    for _ in 0..100 {
        let (h, w) = (rng.random_range(1..40), rng.random_range(1..40));
        let img = GrayImage::from_fn(h, w, |_, _| rng.random());
        let mut this_ok = true;
        for (mode, magic) in [(PgmMode::Ascii, "P2"), (PgmMode::Binary, "P5")] {
            let bytes = write_pgm(&img, mode);
            let header = format!("{magic}\n{w} {h}\n255\n");
            this_ok &= bytes.starts_with(header.as_bytes());
            this_ok &= read_pgm(&bytes).as_ref() == Ok(&img);
        }
        ok += usize::from(this_ok);
    }
    outcome(
        ok == 100,
        format!("{ok}/100 images round-trip in P2 and P5"),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report_line = |name: &str, run: &mut dyn FnMut() -> Outcome| {
        let result = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| outcome(false, "panicked".into()));
        println!(
            "{} {name}: {}",
            if result.passed { "PASS" } else { "FAIL" },
            result.detail
        );
        failed += usize::from(!result.passed);
    };
    report_line("1 kernel exactness, sum-product", &mut kernel_exactness_sum);
    report_line("2 kernel exactness, max-sum", &mut kernel_exactness_max);
    report_line(
        "3 end-to-end exactness on a random-dot stereogram",
        &mut end_to_end_exactness,
    );
    report_line(
        "4 tree beliefs and MAP against enumeration",
        &mut oracle_correctness,
    );
    let start = Instant::now();
    let bench = catch_unwind(speed_bench).ok();
    let bench_secs = start.elapsed().as_secs_f64();
    report_line("5 speedup at M=64", &mut || match &bench {
        Some(r) => speedup(r, bench_secs),
        None => outcome(false, "benchmark panicked".into()),
    });
    report_line("6 scaling exponents", &mut || match &bench {
        Some(r) => scaling(r),
        None => outcome(false, "benchmark panicked".into()),
    });
    report_line("7 pruning changes the labeling", &mut pruning_pitfall);
    report_line("8 operation-count bounds", &mut operation_counts);
    report_line("9 PGM round trip", &mut pgm_round_trip);
    if let Some(r) = &bench {
        print!("{}", r.to_table());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
