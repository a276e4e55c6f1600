//! Fast-versus-standard agreement checks, the tree oracle check, and random
//! model generators used by the `verify` command and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bp::{
    compute_beliefs, labels, run_sweeps, top2_gap, BpError, Domain, Kernel, MessageStore,
    SweepSchedule,
};
use crate::mrf::{
    build_grid_mrf, MrfBuilder, MrfError, MrfModel, PairwiseTerm, SparseTruncatedPotential,
};
use crate::oracle::{enumerate_exact, OracleError};

/// Largest tolerated relative deviation between sum-product runs.
pub const SUM_PRODUCT_REL_TOL: f64 = 1e-9;
/// Largest tolerated relative deviation of tree beliefs from exact marginals.
pub const ORACLE_REL_TOL: f64 = 1e-9;
/// Sum-product labels are only compared where the top-2 belief gap exceeds this.
pub const TIE_GAP: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Mrf(#[from] MrfError),
}

/// `|a - b| / max(|a|, |b|)`, zero when both are equal.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn max_rel_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| rel_dev(x, y))
        .fold(0.0, f64::max)
}

fn bitwise_equal(a: &MessageStore, b: &MessageStore) -> bool {
    a.as_slice().len() == b.as_slice().len()
        && a.as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub belief_dev: f64,
    /// Whether the exact MAP was unique, so that label comparison is meaningful.
    pub map_unique: bool,
    pub map_mismatches: usize,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.belief_dev <= ORACLE_REL_TOL && self.map_mismatches == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub sum_message_dev: f64,
    pub sum_belief_dev: f64,
    /// Nodes whose top-2 belief gap is large enough to compare labels.
    pub sum_labels_compared: usize,
    pub sum_label_mismatches: usize,
    pub max_messages_identical: bool,
    pub max_label_mismatches: usize,
    pub oracle: Option<OracleReport>,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.sum_message_dev <= SUM_PRODUCT_REL_TOL
            && self.sum_belief_dev <= SUM_PRODUCT_REL_TOL
            && self.sum_label_mismatches == 0
            && self.max_messages_identical
            && self.max_label_mismatches == 0
            && self.oracle.as_ref().is_none_or(OracleReport::passed)
    }
}

/// Runs the standard and fast kernels with the same schedule in both domains
/// and compares their messages, beliefs and labels.
pub fn compare_fast_standard(
    model: &MrfModel,
    schedule: &SweepSchedule,
    sweeps: usize,
) -> Result<ComparisonReport, VerifyError> {
    let std_sum = run_sweeps(
        model,
        schedule,
        sweeps,
        Kernel::Standard,
        Domain::SumProduct,
    )?;
    let fast_sum = run_sweeps(model, schedule, sweeps, Kernel::Fast, Domain::SumProduct)?;
    let bs = compute_beliefs(model, &std_sum)?;
    let bf = compute_beliefs(model, &fast_sum)?;
    let (mut compared, mut mismatches) = (0, 0);
    for node in 0..model.num_nodes() {
        let (a, b) = (bs.belief(node), bf.belief(node));
        if top2_gap(a) > TIE_GAP && top2_gap(b) > TIE_GAP {
            compared += 1;
            mismatches += usize::from(crate::bp::argmax(a) != crate::bp::argmax(b));
        }
    }

    let std_max = run_sweeps(model, schedule, sweeps, Kernel::Standard, Domain::MaxSum)?;
    let fast_max = run_sweeps(model, schedule, sweeps, Kernel::Fast, Domain::MaxSum)?;
    let ls = labels(model, &std_max)?;
    let lf = labels(model, &fast_max)?;

    Ok(ComparisonReport {
        sum_message_dev: max_rel_dev(std_sum.as_slice(), fast_sum.as_slice()),
        sum_belief_dev: max_rel_dev(bs.as_slice(), bf.as_slice()),
        sum_labels_compared: compared,
        sum_label_mismatches: mismatches,
        max_messages_identical: bitwise_equal(&std_max, &fast_max),
        max_label_mismatches: ls.iter().zip(&lf).filter(|(a, b)| a != b).count(),
        oracle: None,
    })
}

/// Compares BP on a tree against exhaustive enumeration. Runs `diameter`
/// sweeps of the edge-order schedule with the fast kernel.
pub fn oracle_check(model: &MrfModel) -> Result<OracleReport, VerifyError> {
    let exact = enumerate_exact(model)?;
    let sweeps = model.diameter().unwrap_or(0).max(1);
    let schedule = SweepSchedule::edge_order();
    let kernel = if model
        .terms()
        .iter()
        .all(|t| t.product().as_sparse().is_some())
    {
        Kernel::Fast
    } else {
        Kernel::Standard
    };
    let sum = run_sweeps(model, &schedule, sweeps, kernel, Domain::SumProduct)?;
    let beliefs = compute_beliefs(model, &sum)?;
    let belief_dev = max_rel_dev(beliefs.as_slice(), exact.marginals());

    let max = run_sweeps(model, &schedule, sweeps, kernel, Domain::MaxSum)?;
    let map = labels(model, &max)?;
    let map_mismatches = if exact.map_unique {
        map.iter()
            .zip(&exact.map_config)
            .filter(|(a, b)| a != b)
            .count()
    } else {
        0
    };
    Ok(OracleReport {
        belief_dev,
        map_unique: exact.map_unique,
        map_mismatches,
    })
}

/// Fraction of nodes whose sum-product labels differ between the pruned and
/// fast kernels.
pub fn pruned_disagreement(
    model: &MrfModel,
    schedule: &SweepSchedule,
    sweeps: usize,
) -> Result<f64, VerifyError> {
    let fast = run_sweeps(model, schedule, sweeps, Kernel::Fast, Domain::SumProduct)?;
    let pruned = run_sweeps(model, schedule, sweeps, Kernel::Pruned, Domain::SumProduct)?;
    let a = labels(model, &fast)?;
    let b = labels(model, &pruned)?;
    let differ = a.iter().zip(&b).filter(|(x, y)| x != y).count();
    Ok(differ as f64 / a.len().max(1) as f64)
}

/// Random sparse potential: random `fbar` in `[0.01, 0.5]`, each column gets a
/// random neighborhood of at most `max_nbd` states with values above `fbar`.
pub fn random_sparse_potential(
    rng: &mut impl Rng,
    num_labels: usize,
    max_nbd: usize,
) -> SparseTruncatedPotential {
    let fbar = rng.random_range(0.01..0.5);
    let columns: Vec<Vec<(usize, f64)>> = (0..num_labels)
        .map(|_| {
            let k = rng.random_range(0..=max_nbd.min(num_labels));
            let mut states: Vec<usize> = rand::seq::index::sample(rng, num_labels, k).into_vec();
            states.sort_unstable();
            states
                .into_iter()
                .map(|xi| (xi, fbar + rng.random_range(0.05..1.0)))
                .collect()
        })
        .collect();
    SparseTruncatedPotential::new(num_labels, fbar, &columns).expect("generated potential is valid")
}

fn random_unary(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(0.05..1.0)).collect()
}

/// Random grid up to `max_side x max_side` with `M` up to `max_labels`, one
/// random sparse term shared by all edges and random positive unaries.
pub fn random_grid_model(seed: u64, max_side: usize, max_labels: usize) -> MrfModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = rng.random_range(1..=max_side);
    let w = rng.random_range(1..=max_side);
    let m = rng.random_range(2..=max_labels.max(2));
    let nbd = rng.random_range(1..=m.min(5));
    let term =
        PairwiseTerm::from_sparse(random_sparse_potential(&mut rng, m, nbd)).expect("valid term");
    build_grid_mrf(h, w, term, |_, _| random_unary(&mut rng, m)).expect("valid grid")
}

/// Random tree with at most `max_nodes` nodes and `M <= max_labels`, each edge
/// carrying its own random sparse term.
pub fn random_tree_model(seed: u64, max_nodes: usize, max_labels: usize) -> MrfModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_nodes);
    let m = rng.random_range(2..=max_labels.max(2));
    let mut b = MrfBuilder::new(m).expect("m >= 2");
    for _ in 0..n {
        b.add_node(&random_unary(&mut rng, m)).expect("valid unary");
    }
    for node in 1..n {
        let parent = rng.random_range(0..node);
        let nbd = rng.random_range(0..=m);
        let term = b
            .add_term(
                PairwiseTerm::from_sparse(random_sparse_potential(&mut rng, m, nbd))
                    .expect("valid term"),
            )
            .expect("matching label count");
        // random orientation exercises both message directions of asymmetric terms
        let (a, c) = if rng.random_bool(0.5) {
            (parent, node)
        } else {
            (node, parent)
        };
        b.add_edge(a, c, term).expect("valid edge");
    }
    b.build().expect("tree is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_dev_basics() {
        assert_eq!(rel_dev(1.0, 1.0), 0.0);
        assert_eq!(rel_dev(0.0, 0.0), 0.0);
        assert_eq!(rel_dev(2.0, 1.0), 0.5);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_grid_model(3, 6, 10);
        let b = random_grid_model(3, 6, 10);
        assert_eq!(
            crate::mrf::text::write_model(&a),
            crate::mrf::text::write_model(&b)
        );
        let t = random_tree_model(9, 8, 5);
        assert!(t.is_tree());
    }

    #[test]
    fn random_potentials_are_maxsum_safe() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert!(random_sparse_potential(&mut rng, 12, 4).is_maxsum_safe());
        }
    }

    #[test]
    fn small_grid_comparison_passes() {
        let m = random_grid_model(42, 5, 8);
        let r = compare_fast_standard(&m, &SweepSchedule::for_model(&m), 5).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn oracle_agrees_on_small_tree() {
        let t = random_tree_model(5, 6, 4);
        let r = oracle_check(&t).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
