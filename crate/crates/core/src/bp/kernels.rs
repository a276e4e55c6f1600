//! Message-update kernels.
//!
//! Every kernel maps an aggregated vector `h` (see [`super::compute_h`]) and a
//! pairwise potential to an unnormalized outgoing message, and returns the
//! number of multiply-add (or add-compare) operations it performed.
//!
//! Inner sums always run over ascending sender state so repeated runs are
//! bit-for-bit reproducible.

use super::{BpError, Domain};
use crate::mrf::{DensePotential, SparseTruncatedPotential};

/// `out(x_j) = sum_{x_i} f(x_i, x_j) h(x_i)` with the full double loop.
pub fn update_standard_sum(h: &[f64], f: &DensePotential, out: &mut [f64]) -> u64 {
    let m = h.len();
    debug_assert_eq!(f.num_labels(), m);
    for (o, col) in out.iter_mut().zip(f.columns()) {
        let mut acc = 0.0;
        for (fv, hv) in col.iter().zip(h) {
            acc += fv * hv;
        }
        *o = acc;
    }
    (m * m) as u64
}

/// Sparse-compatibility update:
/// `out(x_j) = sum_{x_i in Nbd(x_j)} (f(x_i, x_j) - fbar) h(x_i) + fbar * sum_{x_i} h(x_i)`.
///
/// The second term is shared by all columns, so the cost is `O(mM)`.
pub fn update_fast_sum(h: &[f64], f: &SparseTruncatedPotential, out: &mut [f64]) -> u64 {
    let m = h.len();
    debug_assert_eq!(f.num_labels(), m);
    let total: f64 = h.iter().sum();
    let base = f.fbar() * total;
    for (o, col) in out.iter_mut().zip(f.columns()) {
        let mut acc = 0.0;
        for (&xi, &r) in col.rows.iter().zip(col.residuals) {
            acc += r * h[xi as usize];
        }
        *o = acc + base;
    }
    // sum of h, the shared product, then one add per listed entry and column
    (2 * m + 1 + f.nnz()) as u64
}

/// Pruned update: the neighborhood sum alone, as if `fbar` were zero.
///
/// This changes the model whenever `fbar > 0`. A result that is zero in every
/// column cannot be normalized and is reported as degenerate.
pub fn update_pruned_sum(
    h: &[f64],
    f: &SparseTruncatedPotential,
    out: &mut [f64],
) -> Result<u64, BpError> {
    let mut ops = 0u64;
    let mut any_positive = false;
    for (o, col) in out.iter_mut().zip(f.columns()) {
        let mut acc = 0.0;
        for (&xi, &v) in col.rows.iter().zip(col.values) {
            acc += v * h[xi as usize];
        }
        *o = acc;
        any_positive |= acc > 0.0;
        ops += col.len() as u64;
    }
    if any_positive {
        Ok(ops)
    } else {
        Err(BpError::DegenerateMessage { message: None })
    }
}

/// `out(x_j) = max_{x_i} [f(x_i, x_j) + h(x_i)]` over all sender states.
pub fn update_standard_max(h: &[f64], f: &DensePotential, out: &mut [f64]) -> u64 {
    let m = h.len();
    debug_assert_eq!(f.num_labels(), m);
    for (o, col) in out.iter_mut().zip(f.columns()) {
        let mut best = f64::NEG_INFINITY;
        for (fv, hv) in col.iter().zip(h) {
            let v = fv + hv;
            if v > best {
                best = v;
            }
        }
        *o = best;
    }
    (m * m) as u64
}

/// Sparse-compatibility max-sum update:
/// `out(x_j) = max( max_{x_i in Nbd(x_j)} [f(x_i, x_j) + h(x_i)], fbar + max_{x_i} h(x_i) )`.
///
/// Requires every listed value to be `>= fbar`; otherwise the widened second
/// branch could exceed the true maximum.
pub fn update_fast_max(
    h: &[f64],
    f: &SparseTruncatedPotential,
    out: &mut [f64],
) -> Result<u64, BpError> {
    if !f.is_maxsum_safe() {
        return Err(BpError::UnsafePotential { term: None });
    }
    let m = h.len();
    let hmax = max_entry(h);
    let base = f.fbar() + hmax;
    let mut ops = m as u64 + 1;
    for (o, col) in out.iter_mut().zip(f.columns()) {
        let mut best = base;
        for (&xi, &v) in col.rows.iter().zip(col.values) {
            let s = v + h[xi as usize];
            if s > best {
                best = s;
            }
        }
        *o = best;
        ops += col.len() as u64;
    }
    Ok(ops)
}

/// Max-sum analogue of [`update_pruned_sum`]: states outside the neighborhood
/// are treated as impossible.
pub fn update_pruned_max(
    h: &[f64],
    f: &SparseTruncatedPotential,
    out: &mut [f64],
) -> Result<u64, BpError> {
    let mut ops = 0u64;
    for (o, col) in out.iter_mut().zip(f.columns()) {
        let mut best = f64::NEG_INFINITY;
        for (&xi, &v) in col.rows.iter().zip(col.values) {
            let s = v + h[xi as usize];
            if s > best {
                best = s;
            }
        }
        *o = best;
        ops += col.len() as u64;
    }
    if out.iter().any(|v| v.is_finite()) {
        Ok(ops)
    } else {
        Err(BpError::DegenerateMessage { message: None })
    }
}

/// Sum-product: divide by the entry sum. Max-sum: subtract the largest entry.
pub fn normalize(msg: &mut [f64], domain: Domain) -> Result<(), BpError> {
    match domain {
        Domain::SumProduct => {
            let total = sum4(msg);
            if !(total > 0.0) || !total.is_finite() {
                return Err(BpError::DegenerateMessage { message: None });
            }
            let inv = total.recip();
            for v in msg.iter_mut() {
                *v *= inv;
            }
        }
        Domain::MaxSum => {
            let top = max_entry(msg);
            if !top.is_finite() {
                return Err(BpError::DegenerateMessage { message: None });
            }
            for v in msg.iter_mut() {
                *v -= top;
            }
        }
    }
    Ok(())
}

/// Sum with four interleaved accumulators, combined as `(a0 + a1) + (a2 + a3)`
/// after the remainder is added to `a0`.
#[inline]
pub(crate) fn sum4(v: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = v.chunks_exact(4);
    let rest = chunks.remainder();
    for c in chunks {
        for k in 0..4 {
            acc[k] += c[k];
        }
    }
    for &x in rest {
        acc[0] += x;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

#[inline]
pub(crate) fn max_entry(v: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for &x in v {
        if x > best {
            best = x;
        }
    }
    best
}
