use fastbp::bp::{Domain, Kernel, SweepSchedule};
use fastbp::stereo::synth::{pruning_fixture, random_dot_stereogram};
use fastbp::stereo::{
    build_stereo_mrf, disparity_to_image, estimate_disparity, planted_accuracy, StereoParams,
};
use fastbp::verify::{compare_fast_standard, pruned_disagreement};

#[test]
fn random_dots_recover_planted_disparity() {
    let params = StereoParams::default();
    for (seed, disparity) in [(1, 3), (2, 0), (3, 7)] {
        let pair = random_dot_stereogram(48, 64, disparity, seed);
        for domain in [Domain::MaxSum, Domain::SumProduct] {
            let est = estimate_disparity(
                &pair.left,
                &pair.right,
                &params,
                Kernel::Fast,
                domain,
                false,
            )
            .unwrap();
            assert_eq!(est.sweep_seconds.len(), params.sweeps);
            let acc = planted_accuracy(&est.labels, 64, disparity, params.num_disparities);
            assert!(
                acc >= 0.98,
                "seed {seed} disparity {disparity} {domain:?}: {acc}"
            );
        }
    }
}

#[test]
fn parallel_sweeps_match_sequential() {
    let pair = random_dot_stereogram(20, 40, 2, 9);
    let params = StereoParams {
        num_disparities: 8,
        ..StereoParams::default()
    };
    for domain in [Domain::MaxSum, Domain::SumProduct] {
        let seq = estimate_disparity(
            &pair.left,
            &pair.right,
            &params,
            Kernel::Fast,
            domain,
            false,
        )
        .unwrap();
        let par = estimate_disparity(&pair.left, &pair.right, &params, Kernel::Fast, domain, true)
            .unwrap();
        assert_eq!(seq.labels, par.labels);
    }
}

#[test]
fn fast_and_standard_disparity_images_agree() {
    let pair = random_dot_stereogram(16, 32, 2, 11);
    let params = StereoParams {
        num_disparities: 8,
        ..StereoParams::default()
    };
    let images: Vec<_> = [Kernel::Fast, Kernel::Standard]
        .into_iter()
        .map(|k| {
            let est =
                estimate_disparity(&pair.left, &pair.right, &params, k, Domain::MaxSum, false)
                    .unwrap();
            disparity_to_image(&est.labels, 8, 16, 32).unwrap()
        })
        .collect();
    assert_eq!(images[0], images[1]);

    let model = build_stereo_mrf(&pair.left, &pair.right, &params).unwrap();
    let report = compare_fast_standard(&model, &SweepSchedule::grid(), params.sweeps).unwrap();
    assert!(report.passed(), "{report:?}");
}

#[test]
fn pruning_fixture_diverges() {
    let (pair, params) = pruning_fixture();
    let model = build_stereo_mrf(&pair.left, &pair.right, &params).unwrap();
    let frac = pruned_disagreement(&model, &SweepSchedule::grid(), params.sweeps).unwrap();
    assert!(frac >= 0.05, "{frac}");
}
