use super::{BpError, Domain, MessageStore};
use crate::mrf::MrfModel;

/// Per-node marginal estimates `b_i(x) = g_i(x) prod_k m_ki(x) / Z_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTable {
    num_labels: usize,
    beliefs: Vec<f64>,
    normalizers: Vec<f64>,
}

impl BeliefTable {
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_nodes(&self) -> usize {
        self.normalizers.len()
    }

    pub fn belief(&self, node: usize) -> &[f64] {
        let m = self.num_labels;
        &self.beliefs[node * m..(node + 1) * m]
    }

    /// `Z_i`, the sum of the unnormalized belief of `node`.
    pub fn normalizer(&self, node: usize) -> f64 {
        self.normalizers[node]
    }

    /// All beliefs, node-major.
    pub fn as_slice(&self) -> &[f64] {
        &self.beliefs
    }
}

pub fn compute_beliefs(model: &MrfModel, msgs: &MessageStore) -> Result<BeliefTable, BpError> {
    if msgs.domain() != Domain::SumProduct {
        return Err(BpError::WrongDomain {
            expected: Domain::SumProduct,
            found: msgs.domain(),
        });
    }
    let m = model.num_labels();
    let n = model.num_nodes();
    let mut beliefs = Vec::with_capacity(n * m);
    let mut normalizers = Vec::with_capacity(n);
    let mut b = vec![0.0; m];
    for node in 0..n {
        b.copy_from_slice(model.unary(node));
        for inc in model.incoming(node) {
            for (bv, mv) in b.iter_mut().zip(msgs.message(inc.message)) {
                *bv *= mv;
            }
        }
        let z: f64 = b.iter().sum();
        if !(z > 0.0) || !z.is_finite() {
            return Err(BpError::DegenerateBelief { node });
        }
        beliefs.extend(b.iter().map(|v| v / z));
        normalizers.push(z);
    }
    Ok(BeliefTable {
        num_labels: m,
        beliefs,
        normalizers,
    })
}

/// Max-sum node scores `g_i(x) + sum_k m_ki(x)` (log domain), node-major.
pub fn max_marginals(model: &MrfModel, msgs: &MessageStore) -> Result<Vec<f64>, BpError> {
    if msgs.domain() != Domain::MaxSum {
        return Err(BpError::WrongDomain {
            expected: Domain::MaxSum,
            found: msgs.domain(),
        });
    }
    let m = model.num_labels();
    let mut scores = Vec::with_capacity(model.num_nodes() * m);
    for node in 0..model.num_nodes() {
        let start = scores.len();
        scores.extend_from_slice(model.log_unary(node));
        for inc in model.incoming(node) {
            for (s, mv) in scores[start..].iter_mut().zip(msgs.message(inc.message)) {
                *s += mv;
            }
        }
    }
    Ok(scores)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Per-node argmax over node-major score rows of length `num_labels`.
pub fn map_labels(scores: &[f64], num_labels: usize) -> Vec<usize> {
    scores.chunks_exact(num_labels).map(argmax).collect()
}

/// Difference between the largest and second-largest entries (0 for `M = 1`).
pub fn top2_gap(v: &[f64]) -> f64 {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &x in v {
        if x > first {
            second = first;
            first = x;
        } else if x > second {
            second = x;
        }
    }
    if second == f64::NEG_INFINITY {
        if v.len() <= 1 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        first - second
    }
}
