//! Exact inference by enumerating every joint configuration.
//!
//! Only usable on tiny models, which is all it is for: ground truth for the
//! message-passing engine. Scores are accumulated in the log domain so that
//! long products of small potentials do not underflow.

use thiserror::Error;

use crate::mrf::MrfModel;

/// Largest joint state space `M^N` that [`enumerate_exact`] will visit.
pub const MAX_CONFIGURATIONS: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(
        "state space of {num_labels}^{num_nodes} configurations exceeds the enumeration limit"
    )]
    TooLarge { num_labels: usize, num_nodes: usize },
    #[error("every configuration has zero probability")]
    ZeroPartition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    num_labels: usize,
    marginals: Vec<f64>,
    /// One maximizing configuration, lexicographically smallest among ties.
    pub map_config: Vec<usize>,
    /// Whether `map_config` is the only maximizer.
    pub map_unique: bool,
    pub log_z: f64,
}

impl ExactResult {
    pub fn marginal(&self, node: usize) -> &[f64] {
        let m = self.num_labels;
        &self.marginals[node * m..(node + 1) * m]
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }
}

fn log_score(model: &MrfModel, config: &[usize], log_f: &[Vec<f64>]) -> f64 {
    let m = model.num_labels();
    let mut s = 0.0;
    for (node, &x) in config.iter().enumerate() {
        s += model.unary(node)[x].ln();
    }
    for e in model.edges() {
        s += log_f[e.term.0][config[e.a] * m + config[e.b]];
    }
    s
}

/// Advances `config` to the next configuration in lexicographic order (node 0
/// most significant). Returns false after the last one.
fn next_config(config: &mut [usize], m: usize) -> bool {
    for x in config.iter_mut().rev() {
        *x += 1;
        if *x < m {
            return true;
        }
        *x = 0;
    }
    false
}

pub fn enumerate_exact(model: &MrfModel) -> Result<ExactResult, OracleError> {
    let m = model.num_labels();
    let n = model.num_nodes();
    let too_large = || OracleError::TooLarge {
        num_labels: m,
        num_nodes: n,
    };
    let total = (0..n).try_fold(1u64, |acc, _| {
        acc.checked_mul(m as u64)
            .filter(|&t| t <= MAX_CONFIGURATIONS)
    });
    total.ok_or_else(too_large)?;

    // ln f(x_a, x_b), row-major by x_a
    let log_f: Vec<Vec<f64>> = model
        .terms()
        .iter()
        .map(|t| {
            let mut v = Vec::with_capacity(m * m);
            for xa in 0..m {
                for xb in 0..m {
                    v.push(t.product().get(xa, xb).ln());
                }
            }
            v
        })
        .collect();

    // first pass: maximum score and the first configuration attaining it
    let mut config = vec![0; n];
    let mut best = f64::NEG_INFINITY;
    let mut map_config = config.clone();
    let mut map_count = 0usize;
    loop {
        let s = log_score(model, &config, &log_f);
        if s > best {
            best = s;
            map_config.copy_from_slice(&config);
            map_count = 1;
        } else if s == best {
            map_count += 1;
        }
        if !next_config(&mut config, m) {
            break;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(OracleError::ZeroPartition);
    }

    // second pass: sums of exp(score - best)
    let mut z = 0.0;
    let mut marginals = vec![0.0; n * m];
    config.iter_mut().for_each(|x| *x = 0);
    loop {
        let w = (log_score(model, &config, &log_f) - best).exp();
        z += w;
        for (node, &x) in config.iter().enumerate() {
            marginals[node * m + x] += w;
        }
        if !next_config(&mut config, m) {
            break;
        }
    }
    marginals.iter_mut().for_each(|v| *v /= z);

    Ok(ExactResult {
        num_labels: m,
        marginals,
        map_config,
        map_unique: map_count == 1,
        log_z: best + z.ln(),
    })
}
