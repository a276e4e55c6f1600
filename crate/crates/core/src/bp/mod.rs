//! Belief propagation over a [`MrfModel`].
//!
//! Messages are updated in place, one directional pass at a time. Each update
//! aggregates the sender's unary and the messages it received from everyone
//! except the receiver ([`compute_h`]), applies one of the kernels in
//! [`kernels`], and normalizes the result immediately.
//!
//! Three kernels are available in both domains:
//!
//! * `Standard`: the dense `O(M^2)` update.
//! * `Fast`: the sparse-compatibility update, `O(mM)` and exact.
//! * `Pruned`: the neighborhood sum alone, which silently drops `fbar`.

mod beliefs;
pub mod kernels;
mod schedule;

pub use beliefs::{argmax, compute_beliefs, map_labels, max_marginals, top2_gap, BeliefTable};
pub use schedule::{Pass, SweepSchedule};

use rayon::prelude::*;
use thiserror::Error;

use crate::mrf::{
    DensePotential, Incoming, MrfModel, Potential, SparseTruncatedPotential, Topology,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    Standard,
    Fast,
    Pruned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Probabilities; messages normalized to sum 1.
    SumProduct,
    /// Log-potentials; messages normalized to a maximum of 0.
    MaxSum,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BpError {
    #[error("message {} -> {} is zero in every state", .message.map_or(String::from("?"), |m| m.0.to_string()), .message.map_or(String::from("?"), |m| m.1.to_string()))]
    DegenerateMessage { message: Option<(usize, usize)> },
    #[error("belief of node {node} is zero in every state")]
    DegenerateBelief { node: usize },
    #[error("fast max-sum update needs every listed value >= fbar (term {term:?})")]
    UnsafePotential { term: Option<usize> },
    #[error("term {term} is dense; the {kernel:?} kernel needs a sparse truncated potential")]
    NotSparse { term: usize, kernel: Kernel },
    #[error("term {term} has a negative fbar, not allowed in sum-product")]
    NegativeFbar { term: usize },
    #[error("node {neighbor} is not a neighbor of node {node}")]
    NotNeighbor { node: usize, neighbor: usize },
    #[error("grid pass {0:?} on a model without grid topology")]
    ScheduleMismatch(Pass),
    #[error("operation needs {expected:?} messages, store holds {found:?}")]
    WrongDomain { expected: Domain, found: Domain },
}

impl BpError {
    fn at_message(self, from: usize, to: usize) -> Self {
        match self {
            BpError::DegenerateMessage { message: None } => BpError::DegenerateMessage {
                message: Some((from, to)),
            },
            other => other,
        }
    }
}

/// One length-`M` vector per directed message, stored contiguously by id.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageStore {
    domain: Domain,
    num_labels: usize,
    data: Vec<f64>,
}

impl MessageStore {
    /// Every message uniform: `1/M` in sum-product, `0` in max-sum.
    pub fn uniform(model: &MrfModel, domain: Domain) -> Self {
        let m = model.num_labels();
        let fill = match domain {
            Domain::SumProduct => 1.0 / m as f64,
            Domain::MaxSum => 0.0,
        };
        Self {
            domain,
            num_labels: m,
            data: vec![fill; model.num_messages() * m],
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_messages(&self) -> usize {
        self.data.len() / self.num_labels
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn message(&self, id: usize) -> &[f64] {
        let m = self.num_labels;
        &self.data[id * m..(id + 1) * m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Checks the domain's normalization invariant on every message.
    pub fn is_normalized(&self) -> bool {
        self.data
            .chunks_exact(self.num_labels)
            .all(|msg| match self.domain {
                Domain::SumProduct => {
                    msg.iter().all(|&v| v > 0.0) && (msg.iter().sum::<f64>() - 1.0).abs() <= 1e-12
                }
                Domain::MaxSum => kernels::max_entry(msg) == 0.0,
            })
    }
}

/// Aggregated incoming evidence at `node`, excluding the message from
/// `exclude`.
///
/// Sum-product: `h(x) = g(x) * prod_k m_k(x)`. Max-sum: `h(x) = g(x) + sum_k m_k(x)`
/// with `g` in the log domain.
pub fn compute_h(
    model: &MrfModel,
    msgs: &MessageStore,
    node: usize,
    exclude: usize,
) -> Result<Vec<f64>, BpError> {
    if !model.neighbors(node).any(|n| n == exclude) {
        return Err(BpError::NotNeighbor {
            node,
            neighbor: exclude,
        });
    }
    let mut h = vec![0.0; model.num_labels()];
    fill_h(
        model,
        msgs.domain,
        node,
        exclude,
        |id| msgs.message(id),
        &mut h,
    );
    Ok(h)
}

#[inline]
fn fill_h<'a>(
    model: &MrfModel,
    domain: Domain,
    node: usize,
    exclude: usize,
    fetch: impl Fn(usize) -> &'a [f64],
    h: &mut [f64],
) {
    match domain {
        Domain::SumProduct => combine(
            model.unary(node),
            model.incoming(node),
            exclude,
            fetch,
            h,
            |a, b| a * b,
        ),
        Domain::MaxSum => combine(
            model.log_unary(node),
            model.incoming(node),
            exclude,
            fetch,
            h,
            |a, b| a + b,
        ),
    }
}

/// `h = base (op) m_1 (op) m_2 ...` over the incoming messages except the one
/// from `exclude`, folded left to right in incoming order. Up to four messages
/// are combined in a single pass.
#[inline]
fn combine<'a>(
    base: &[f64],
    incoming: &[Incoming],
    exclude: usize,
    fetch: impl Fn(usize) -> &'a [f64],
    h: &mut [f64],
    op: impl Fn(f64, f64) -> f64 + Copy,
) {
    let m = h.len();
    let base = &base[..m];
    if incoming.len() > 5 {
        h.copy_from_slice(base);
        for inc in incoming.iter().filter(|inc| inc.from != exclude) {
            for (hv, &mv) in h.iter_mut().zip(&fetch(inc.message)[..m]) {
                *hv = op(*hv, mv);
            }
        }
        return;
    }
    let mut msgs: [&[f64]; 4] = [&[]; 4];
    let mut n = 0;
    for inc in incoming.iter().filter(|inc| inc.from != exclude) {
        msgs[n] = &fetch(inc.message)[..m];
        n += 1;
    }
    match n {
        0 => h.copy_from_slice(base),
        1 => {
            for k in 0..m {
                h[k] = op(base[k], msgs[0][k]);
            }
        }
        2 => {
            let (a, b) = (msgs[0], msgs[1]);
            for k in 0..m {
                h[k] = op(op(base[k], a[k]), b[k]);
            }
        }
        3 => {
            let (a, b, c) = (msgs[0], msgs[1], msgs[2]);
            for k in 0..m {
                h[k] = op(op(op(base[k], a[k]), b[k]), c[k]);
            }
        }
        _ => {
            let (a, b, c, d) = (msgs[0], msgs[1], msgs[2], msgs[3]);
            for k in 0..m {
                h[k] = op(op(op(op(base[k], a[k]), b[k]), c[k]), d[k]);
            }
        }
    }
}

/// Writes the normalized `msg` to `dst`. Same arithmetic as
/// [`kernels::normalize`], without the intermediate copy.
#[inline]
fn normalize_into(
    msg: &[f64],
    dst: &mut [f64],
    domain: Domain,
    model: &MrfModel,
    id: usize,
) -> Result<(), BpError> {
    let degenerate = || {
        let (from, to) = model.message_endpoints(id);
        BpError::DegenerateMessage { message: None }.at_message(from, to)
    };
    match domain {
        Domain::SumProduct => {
            let total = kernels::sum4(msg);
            if !(total > 0.0) || !total.is_finite() {
                return Err(degenerate());
            }
            let inv = total.recip();
            for (d, &v) in dst.iter_mut().zip(msg) {
                *d = v * inv;
            }
        }
        Domain::MaxSum => {
            let top = kernels::max_entry(msg);
            if !top.is_finite() {
                return Err(degenerate());
            }
            for (d, &v) in dst.iter_mut().zip(msg) {
                *d = v - top;
            }
        }
    }
    Ok(())
}

/// Potential prepared for one kernel, in the orientation of one message direction.
#[derive(Debug, Clone)]
enum Prepared {
    Dense(DensePotential),
    Sparse(SparseTruncatedPotential),
}

/// Per-sweep counters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SweepStats {
    /// Kernel multiply-adds (add-compares in max-sum), excluding aggregation.
    pub madds: u64,
    pub updates: u64,
    /// Largest change of any message entry, `|new - old| / max(|new|, |old|, 1)`.
    /// Only measured when requested.
    pub max_change: Option<f64>,
}

impl SweepStats {
    fn merge(mut self, other: SweepStats) -> Self {
        self.madds += other.madds;
        self.updates += other.updates;
        self.max_change = match (self.max_change, other.max_change) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunStats {
    pub sweeps: usize,
    pub madds: u64,
    pub updates: u64,
    pub converged: bool,
}

/// A message-passing engine bound to one model, kernel and domain.
#[derive(Debug, Clone)]
pub struct Engine<'m> {
    model: &'m MrfModel,
    kernel: Kernel,
    domain: Domain,
    parallel: bool,
    // indexed [term][direction]; direction 0 serves a -> b, 1 serves b -> a
    prepared: Vec<[Prepared; 2]>,
    routes: Vec<Route>,
}

/// Endpoints and term of one directed message, resolved once per engine.
#[derive(Debug, Clone, Copy)]
struct Route {
    from: usize,
    to: usize,
    term: usize,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m MrfModel, kernel: Kernel, domain: Domain) -> Result<Self, BpError> {
        let mut prepared = Vec::with_capacity(model.terms().len());
        for (t, term) in model.terms().iter().enumerate() {
            let pot = match domain {
                Domain::SumProduct => term.product(),
                Domain::MaxSum => term.log(),
            };
            let forward = match (kernel, pot) {
                (Kernel::Standard, p) => Prepared::Dense(p.to_dense()),
                (_, Potential::Sparse(s)) => {
                    if domain == Domain::SumProduct && s.fbar() < 0.0 {
                        return Err(BpError::NegativeFbar { term: t });
                    }
                    if kernel == Kernel::Fast && domain == Domain::MaxSum && !s.is_maxsum_safe() {
                        return Err(BpError::UnsafePotential { term: Some(t) });
                    }
                    Prepared::Sparse(s.clone())
                }
                (_, Potential::Dense(_)) => return Err(BpError::NotSparse { term: t, kernel }),
            };
            let backward = match &forward {
                Prepared::Dense(d) => Prepared::Dense(d.transpose()),
                Prepared::Sparse(s) => Prepared::Sparse(s.transpose()),
            };
            prepared.push([forward, backward]);
        }
        let routes = (0..model.num_messages())
            .map(|id| {
                let (from, to) = model.message_endpoints(id);
                Route {
                    from,
                    to,
                    term: model.edges()[id / 2].term.0,
                }
            })
            .collect();
        Ok(Self {
            model,
            kernel,
            domain,
            parallel: false,
            prepared,
            routes,
        })
    }

    /// Updates independent grid rows (horizontal passes) or columns
    /// (vertical passes) concurrently. Results are identical to sequential mode.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn model(&self) -> &'m MrfModel {
        self.model
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn init_messages(&self) -> MessageStore {
        MessageStore::uniform(self.model, self.domain)
    }

    /// Computes the unnormalized message `id` into `out`.
    #[inline]
    fn update_message<'a>(
        &self,
        id: usize,
        fetch: impl Fn(usize) -> &'a [f64],
        h: &mut [f64],
        out: &mut [f64],
    ) -> Result<u64, BpError> {
        let Route { from, to, term } = self.routes[id];
        fill_h(self.model, self.domain, from, to, fetch, h);
        let pot = &self.prepared[term][id % 2];
        let ops = match (self.domain, self.kernel, pot) {
            (Domain::SumProduct, _, Prepared::Dense(d)) => kernels::update_standard_sum(h, d, out),
            (Domain::SumProduct, Kernel::Fast, Prepared::Sparse(s)) => {
                kernels::update_fast_sum(h, s, out)
            }
            (Domain::SumProduct, _, Prepared::Sparse(s)) => {
                kernels::update_pruned_sum(h, s, out).map_err(|e| e.at_message(from, to))?
            }
            (Domain::MaxSum, _, Prepared::Dense(d)) => kernels::update_standard_max(h, d, out),
            (Domain::MaxSum, Kernel::Fast, Prepared::Sparse(s)) => {
                kernels::update_fast_max(h, s, out)
                    .map_err(|_| BpError::UnsafePotential { term: Some(term) })?
            }
            (Domain::MaxSum, _, Prepared::Sparse(s)) => {
                kernels::update_pruned_max(h, s, out).map_err(|e| e.at_message(from, to))?
            }
        };
        Ok(ops)
    }

    /// Updates `count` messages of one lane in place. The lane's ids start at
    /// `local_base`; forward passes visit ids `2k` in ascending order, backward
    /// passes ids `2k + 1` in descending order. `local` holds the lane's
    /// messages; every other message is read from `shared`, which starts at id
    /// `shared_base`.
    #[allow(clippy::too_many_arguments)]
    fn run_lane(
        &self,
        count: usize,
        forward: bool,
        local: &mut [f64],
        local_base: usize,
        shared: &[f64],
        shared_base: usize,
        track: bool,
    ) -> Result<SweepStats, BpError> {
        let m = self.model.num_labels();
        let local_len = local.len() / m;
        let mut h = vec![0.0; m];
        let mut out = vec![0.0; m];
        let mut old = if track { vec![0.0; m] } else { Vec::new() };
        let mut stats = SweepStats {
            max_change: track.then_some(0.0),
            ..SweepStats::default()
        };
        for k in 0..count {
            let id = local_base
                + if forward {
                    2 * k
                } else {
                    2 * (count - 1 - k) + 1
                };
            let local_ro: &[f64] = local;
            let fetch = |k: usize| -> &[f64] {
                if k >= local_base && k < local_base + local_len {
                    &local_ro[(k - local_base) * m..(k - local_base + 1) * m]
                } else {
                    &shared[(k - shared_base) * m..(k - shared_base + 1) * m]
                }
            };
            stats.madds += self.update_message(id, fetch, &mut h, &mut out)?;
            stats.updates += 1;
            let dst = &mut local[(id - local_base) * m..(id - local_base + 1) * m];
            if let Some(change) = stats.max_change.as_mut() {
                old.copy_from_slice(dst);
                normalize_into(&out, dst, self.domain, self.model, id)?;
                for (&new, &prev) in dst.iter().zip(&old) {
                    if new == prev {
                        continue;
                    }
                    let c = (new - prev).abs() / new.abs().max(prev.abs()).max(1.0);
                    if c > *change || c.is_nan() {
                        *change = if c.is_nan() { f64::INFINITY } else { c };
                    }
                }
            } else {
                normalize_into(&out, dst, self.domain, self.model, id)?;
            }
        }
        Ok(stats)
    }

    /// One sweep: every pass of `schedule` in order.
    pub fn sweep(
        &self,
        store: &mut MessageStore,
        schedule: &SweepSchedule,
    ) -> Result<SweepStats, BpError> {
        self.sweep_inner(store, schedule, false)
    }

    fn sweep_inner(
        &self,
        store: &mut MessageStore,
        schedule: &SweepSchedule,
        track: bool,
    ) -> Result<SweepStats, BpError> {
        if store.domain != self.domain {
            return Err(BpError::WrongDomain {
                expected: self.domain,
                found: store.domain,
            });
        }
        let mut total = SweepStats {
            max_change: track.then_some(0.0),
            ..SweepStats::default()
        };
        for &pass in schedule.passes() {
            let stats = self.run_pass(store, pass, track)?;
            total = total.merge(stats);
        }
        Ok(total)
    }

    fn run_pass(
        &self,
        store: &mut MessageStore,
        pass: Pass,
        track: bool,
    ) -> Result<SweepStats, BpError> {
        let m = self.model.num_labels();
        let n_edges = self.model.num_edges();
        let (height, width) = match (pass.is_grid_pass(), self.model.topology()) {
            (false, _) => {
                let forward = pass == Pass::EdgesForward;
                return self.run_lane(n_edges, forward, &mut store.data, 0, &[], 0, track);
            }
            (true, Topology::Grid { height, width }) => (height, width),
            (true, Topology::Generic) => return Err(BpError::ScheduleMismatch(pass)),
        };

        // horizontal messages occupy ids [0, split), grouped by row; vertical
        // ones follow, grouped by column
        let split = 2 * height * (width - 1);
        let (hreg, vreg) = store.data.split_at_mut(split * m);
        let horizontal = matches!(pass, Pass::LeftToRight | Pass::RightToLeft);
        let (region, region_base, other, other_base, lane_len) = if horizontal {
            (hreg, 0, &*vreg, split, 2 * (width - 1))
        } else {
            (vreg, split, &*hreg, 0, 2 * (height - 1))
        };
        if lane_len == 0 {
            return Ok(SweepStats {
                max_change: track.then_some(0.0),
                ..SweepStats::default()
            });
        }
        // within a lane, edge k has local ids 2k (forward) and 2k + 1 (backward)
        let count = lane_len / 2;
        let forward = matches!(pass, Pass::LeftToRight | Pass::TopToBottom);
        let lanes = region.chunks_mut(lane_len * m);
        let run = |(lane, chunk): (usize, &mut [f64])| {
            let base = region_base + lane * lane_len;
            self.run_lane(count, forward, chunk, base, other, other_base, track)
        };
        let results: Vec<Result<SweepStats, BpError>> = if self.parallel {
            lanes
                .enumerate()
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(run)
                .collect()
        } else {
            let mut v = Vec::new();
            for item in lanes.enumerate() {
                let r = run(item);
                let failed = r.is_err();
                v.push(r);
                if failed {
                    break;
                }
            }
            v
        };
        let mut total = SweepStats {
            max_change: track.then_some(0.0),
            ..SweepStats::default()
        };
        for r in results {
            total = total.merge(r?);
        }
        Ok(total)
    }

    /// Runs up to `n_sweeps` sweeps. With a tolerance, stops after the first
    /// sweep whose largest relative message change is below it.
    pub fn run(
        &self,
        store: &mut MessageStore,
        schedule: &SweepSchedule,
        n_sweeps: usize,
        tolerance: Option<f64>,
    ) -> Result<RunStats, BpError> {
        let mut stats = RunStats::default();
        for _ in 0..n_sweeps {
            let s = self.sweep_inner(store, schedule, tolerance.is_some())?;
            stats.sweeps += 1;
            stats.madds += s.madds;
            stats.updates += s.updates;
            if let (Some(tol), Some(change)) = (tolerance, s.max_change) {
                if change < tol {
                    stats.converged = true;
                    break;
                }
            }
        }
        Ok(stats)
    }
}

/// Initializes uniform messages and runs `n_sweeps` sweeps of `schedule`.
pub fn run_sweeps(
    model: &MrfModel,
    schedule: &SweepSchedule,
    n_sweeps: usize,
    kernel: Kernel,
    domain: Domain,
) -> Result<MessageStore, BpError> {
    let engine = Engine::new(model, kernel, domain)?;
    let mut store = engine.init_messages();
    engine.run(&mut store, schedule, n_sweeps, None)?;
    Ok(store)
}

/// MAP labels from a finished run: belief argmax in sum-product, max-marginal
/// argmax in max-sum.
pub fn labels(model: &MrfModel, msgs: &MessageStore) -> Result<Vec<usize>, BpError> {
    match msgs.domain() {
        Domain::SumProduct => Ok(map_labels(
            compute_beliefs(model, msgs)?.as_slice(),
            model.num_labels(),
        )),
        Domain::MaxSum => Ok(map_labels(&max_marginals(model, msgs)?, model.num_labels())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrf::{build_grid_mrf, MrfBuilder, PairwiseTerm};

    fn chain2() -> MrfModel {
        let mut b = MrfBuilder::new(2).unwrap();
        b.add_node(&[1.0, 1.0]).unwrap();
        b.add_node(&[2.0, 1.0]).unwrap();
        let d = DensePotential::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let t = b.add_term(PairwiseTerm::from_dense(d).unwrap()).unwrap();
        b.add_edge(0, 1, t).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn compute_h_examples() {
        let mut b = MrfBuilder::new(3).unwrap();
        b.add_node(&[1.0, 2.0, 3.0]).unwrap();
        b.add_node(&[1.0, 1.0, 1.0]).unwrap();
        let t = b
            .add_term(PairwiseTerm::truncated_linear(3, 1.0, 1.0).unwrap())
            .unwrap();
        b.add_edge(0, 1, t).unwrap();
        let m = b.build().unwrap();
        let store = MessageStore::uniform(&m, Domain::SumProduct);
        assert_eq!(compute_h(&m, &store, 0, 1).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            compute_h(&m, &store, 0, 0),
            Err(BpError::NotNeighbor { .. })
        ));

        // g = [1, 2] with one other incoming message [0.5, 0.5]
        let mut b = MrfBuilder::new(2).unwrap();
        b.add_node(&[1.0, 2.0]).unwrap();
        b.add_node(&[1.0, 1.0]).unwrap();
        b.add_node(&[1.0, 1.0]).unwrap();
        let t = b
            .add_term(PairwiseTerm::truncated_linear(2, 1.0, 1.0).unwrap())
            .unwrap();
        b.add_edge(0, 1, t).unwrap();
        b.add_edge(0, 2, t).unwrap();
        let m = b.build().unwrap();
        let store = MessageStore::uniform(&m, Domain::SumProduct);
        assert_eq!(compute_h(&m, &store, 0, 1).unwrap(), vec![0.5, 1.0]);

        // max-sum: g = [0, -1], other incoming [0, -2]
        let mut b = MrfBuilder::new(2).unwrap();
        b.add_node_with_log(&[1.0, 1.0], &[0.0, -1.0]).unwrap();
        b.add_node(&[1.0, 1.0]).unwrap();
        b.add_node(&[1.0, 1.0]).unwrap();
        b.add_term(PairwiseTerm::truncated_linear(2, 1.0, 1.0).unwrap())
            .unwrap();
        b.add_edge(0, 1, crate::mrf::TermId(0)).unwrap();
        b.add_edge(0, 2, crate::mrf::TermId(0)).unwrap();
        let m = b.build().unwrap();
        let mut store = MessageStore::uniform(&m, Domain::MaxSum);
        let id = m.message_id(2, 0).unwrap();
        store.data[id * 2..id * 2 + 2].copy_from_slice(&[0.0, -2.0]);
        assert_eq!(compute_h(&m, &store, 0, 1).unwrap(), vec![0.0, -3.0]);
    }

    #[test]
    fn zero_sweeps_leave_messages_uniform() {
        let term = PairwiseTerm::truncated_linear(4, 1.0, 2.0).unwrap();
        let g = build_grid_mrf(3, 3, term, |r, c| {
            vec![1.0 + r as f64, 1.0, 0.5, c as f64 + 0.1]
        })
        .unwrap();
        let store = run_sweeps(
            &g,
            &SweepSchedule::grid(),
            0,
            Kernel::Fast,
            Domain::SumProduct,
        )
        .unwrap();
        assert!(store.as_slice().iter().all(|&v| v == 0.25));
        let store =
            run_sweeps(&g, &SweepSchedule::grid(), 0, Kernel::Fast, Domain::MaxSum).unwrap();
        assert!(store.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_node_has_no_messages() {
        let term = PairwiseTerm::truncated_linear(3, 1.0, 2.0).unwrap();
        let g = build_grid_mrf(1, 1, term, |_, _| vec![1.0, 2.0, 3.0]).unwrap();
        let store = run_sweeps(
            &g,
            &SweepSchedule::grid(),
            5,
            Kernel::Fast,
            Domain::SumProduct,
        )
        .unwrap();
        assert!(store.is_empty());
    }

    #[test]
    fn chain_beliefs_match_enumeration() {
        let m = chain2();
        let store = run_sweeps(
            &m,
            &SweepSchedule::edge_order(),
            2,
            Kernel::Standard,
            Domain::SumProduct,
        )
        .unwrap();
        let b = compute_beliefs(&m, &store).unwrap();
        assert!((b.belief(0)[0] - 5.0 / 9.0).abs() < 1e-15);
        assert!((b.belief(0)[1] - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(labels(&m, &store).unwrap()[0], 0);
    }

    #[test]
    fn dense_terms_reject_sparse_kernels() {
        let m = chain2();
        assert!(matches!(
            Engine::new(&m, Kernel::Fast, Domain::SumProduct),
            Err(BpError::NotSparse { term: 0, .. })
        ));
    }

    #[test]
    fn unsafe_potential_rejected_for_fast_max_only() {
        let mut b = MrfBuilder::new(2).unwrap();
        b.add_node(&[1.0, 1.0]).unwrap();
        b.add_node(&[1.0, 1.0]).unwrap();
        let s = SparseTruncatedPotential::new(2, 0.5, &[vec![(0, 0.2)], vec![(1, 1.0)]]).unwrap();
        let t = b.add_term(PairwiseTerm::from_sparse(s).unwrap()).unwrap();
        b.add_edge(0, 1, t).unwrap();
        let m = b.build().unwrap();
        assert!(matches!(
            Engine::new(&m, Kernel::Fast, Domain::MaxSum),
            Err(BpError::UnsafePotential { term: Some(0) })
        ));
        assert!(Engine::new(&m, Kernel::Fast, Domain::SumProduct).is_ok());
        assert!(Engine::new(&m, Kernel::Standard, Domain::MaxSum).is_ok());
    }

    #[test]
    fn grid_pass_on_generic_model_is_rejected() {
        let m = chain2();
        let engine = Engine::new(&m, Kernel::Standard, Domain::SumProduct).unwrap();
        let mut store = engine.init_messages();
        assert_eq!(
            engine.sweep(&mut store, &SweepSchedule::grid()),
            Err(BpError::ScheduleMismatch(Pass::LeftToRight))
        );
    }

    #[test]
    fn pruned_degenerate_message_names_edge() {
        let mut b = MrfBuilder::new(2).unwrap();
        b.add_node(&[1.0, 0.0]).unwrap();
        b.add_node(&[1.0, 1.0]).unwrap();
        // only state 1 of the sender is compatible with anything
        let s = SparseTruncatedPotential::new(2, 0.1, &[vec![(1, 1.0)], vec![(1, 1.0)]]).unwrap();
        let t = b.add_term(PairwiseTerm::from_sparse(s).unwrap()).unwrap();
        b.add_edge(0, 1, t).unwrap();
        let m = b.build().unwrap();
        let err = run_sweeps(
            &m,
            &SweepSchedule::edge_order(),
            1,
            Kernel::Pruned,
            Domain::SumProduct,
        )
        .unwrap_err();
        assert_eq!(
            err,
            BpError::DegenerateMessage {
                message: Some((0, 1))
            }
        );
        // the exact kernel is fine on the same model
        assert!(run_sweeps(
            &m,
            &SweepSchedule::edge_order(),
            1,
            Kernel::Fast,
            Domain::SumProduct
        )
        .is_ok());
    }

    #[test]
    fn convergence_tolerance_stops_early() {
        let m = chain2();
        let engine = Engine::new(&m, Kernel::Standard, Domain::SumProduct).unwrap();
        let mut store = engine.init_messages();
        let stats = engine
            .run(&mut store, &SweepSchedule::edge_order(), 50, Some(1e-12))
            .unwrap();
        assert!(stats.converged);
        assert!(stats.sweeps < 50);
    }

    #[test]
    fn parallel_matches_sequential() {
        let term = PairwiseTerm::truncated_linear(6, 0.8, 2.0).unwrap();
        let g = build_grid_mrf(7, 9, term, |r, c| {
            (0..6)
                .map(|x| 0.1 + ((r * 31 + c * 17 + x * 7) % 11) as f64)
                .collect::<Vec<_>>()
        })
        .unwrap();
        for domain in [Domain::SumProduct, Domain::MaxSum] {
            for kernel in [Kernel::Standard, Kernel::Fast, Kernel::Pruned] {
                let seq = Engine::new(&g, kernel, domain).unwrap();
                let par = seq.clone().with_parallel(true);
                let mut a = seq.init_messages();
                let mut b = par.init_messages();
                let sa = seq.run(&mut a, &SweepSchedule::grid(), 4, None).unwrap();
                let sb = par.run(&mut b, &SweepSchedule::grid(), 4, None).unwrap();
                assert_eq!(a, b, "{kernel:?} {domain:?}");
                assert_eq!(sa, sb);
            }
        }
    }
}
