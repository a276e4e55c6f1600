//! Pairwise potentials.
//!
//! A pairwise potential `f(x_i, x_j)` is indexed by the sender state `x_i` (row)
//! and the receiver state `x_j` (column). Message updates walk one column per
//! receiver state, so both representations below are stored column-major.

use super::MrfError;

/// Full `M x M` table, stored column-major: `column(x_j)[x_i] = f(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePotential {
    num_labels: usize,
    data: Vec<f64>,
}

impl DensePotential {
    /// Builds a potential from row-major rows, `rows[x_i][x_j] = f(x_i, x_j)`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MrfError> {
        let num_labels = rows.len();
        if num_labels == 0 {
            return Err(MrfError::EmptyLabelSpace);
        }
        let mut data = vec![0.0; num_labels * num_labels];
        for (xi, row) in rows.iter().enumerate() {
            if row.len() != num_labels {
                return Err(MrfError::DimensionMismatch {
                    expected: num_labels,
                    found: row.len(),
                });
            }
            for (xj, &v) in row.iter().enumerate() {
                if v.is_nan() {
                    return Err(MrfError::NonFiniteValue);
                }
                data[xj * num_labels + xi] = v;
            }
        }
        Ok(Self { num_labels, data })
    }

    pub fn from_fn(num_labels: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(num_labels * num_labels);
        for xj in 0..num_labels {
            for xi in 0..num_labels {
                data.push(f(xi, xj));
            }
        }
        Self { num_labels, data }
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    #[inline]
    pub fn get(&self, xi: usize, xj: usize) -> f64 {
        self.data[xj * self.num_labels + xi]
    }

    /// All values `f(., x_j)`, indexed by `x_i`.
    #[inline]
    pub fn column(&self, xj: usize) -> &[f64] {
        let m = self.num_labels;
        &self.data[xj * m..(xj + 1) * m]
    }

    /// Columns in order of `x_j`.
    #[inline]
    pub fn columns(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.num_labels)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.num_labels, |xi, xj| self.get(xj, xi))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            num_labels: self.num_labels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }
}

/// A potential equal to the constant `fbar` everywhere except on short
/// per-column neighborhoods of compatible states.
///
/// Columns are stored in compressed form. For column `x_j` the compatible
/// sender states are strictly increasing, and each carries its value and its
/// residual `value - fbar`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTruncatedPotential {
    num_labels: usize,
    fbar: f64,
    col_start: Vec<usize>,
    rows: Vec<u32>,
    values: Vec<f64>,
    residuals: Vec<f64>,
    maxsum_safe: bool,
}

impl SparseTruncatedPotential {
    /// Builds a potential from explicit neighborhoods: `columns[x_j]` lists
    /// `(x_i, f(x_i, x_j))` with strictly increasing `x_i`.
    pub fn new(
        num_labels: usize,
        fbar: f64,
        columns: &[Vec<(usize, f64)>],
    ) -> Result<Self, MrfError> {
        if num_labels == 0 {
            return Err(MrfError::EmptyLabelSpace);
        }
        if columns.len() != num_labels {
            return Err(MrfError::DimensionMismatch {
                expected: num_labels,
                found: columns.len(),
            });
        }
        if fbar.is_nan() {
            return Err(MrfError::NonFiniteValue);
        }
        let nnz = columns.iter().map(Vec::len).sum();
        let mut col_start = Vec::with_capacity(num_labels + 1);
        let mut rows = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        let mut residuals = Vec::with_capacity(nnz);
        let mut maxsum_safe = true;
        col_start.push(0);
        for (xj, col) in columns.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(xi, v) in col {
                if xi >= num_labels {
                    return Err(MrfError::StateOutOfRange {
                        state: xi,
                        num_labels,
                    });
                }
                if prev.is_some_and(|p| p >= xi) {
                    return Err(MrfError::UnsortedNeighborhood { column: xj });
                }
                if v.is_nan() {
                    return Err(MrfError::NonFiniteValue);
                }
                prev = Some(xi);
                rows.push(xi as u32);
                values.push(v);
                residuals.push(v - fbar);
                if v < fbar {
                    maxsum_safe = false;
                }
            }
            col_start.push(rows.len());
        }
        Ok(Self {
            num_labels,
            fbar,
            col_start,
            rows,
            values,
            residuals,
            maxsum_safe,
        })
    }

    /// `f(x_i, x_j) = exp(-alpha * min(|x_i - x_j|, t))`.
    ///
    /// Pairs with `|x_i - x_j| >= t` equal `fbar = exp(-alpha * t)` and are left
    /// out of the neighborhoods.
    pub fn truncated_linear(num_labels: usize, alpha: f64, t: f64) -> Result<Self, MrfError> {
        check_truncated_params(num_labels, alpha, t)?;
        let fbar = (-alpha * t).exp();
        Self::truncated_linear_with(num_labels, t, fbar, |d| (-alpha * d).exp())
    }

    /// Log-domain counterpart of [`Self::truncated_linear`]: energies
    /// `-alpha * min(|x_i - x_j|, t)` evaluated directly, never through `ln`.
    pub fn truncated_linear_log(num_labels: usize, alpha: f64, t: f64) -> Result<Self, MrfError> {
        check_truncated_params(num_labels, alpha, t)?;
        // 0.0 - x keeps the zero-energy entry at +0.0; -0.0 would make ties in
        // max-sum depend on visiting order
        Self::truncated_linear_with(num_labels, t, 0.0 - alpha * t, |d| 0.0 - alpha * d)
    }

    fn truncated_linear_with(
        num_labels: usize,
        t: f64,
        fbar: f64,
        value: impl Fn(f64) -> f64,
    ) -> Result<Self, MrfError> {
        let columns: Vec<Vec<(usize, f64)>> = (0..num_labels)
            .map(|xj| {
                (0..num_labels)
                    .filter_map(|xi| {
                        let d = xi.abs_diff(xj) as f64;
                        if d >= t {
                            return None;
                        }
                        let v = value(d);
                        // rounding can land exactly on fbar; such entries are not compatible
                        (v > fbar).then_some((xi, v))
                    })
                    .collect()
            })
            .collect();
        Self::new(num_labels, fbar, &columns)
    }

    /// Extracts the sparse structure of an arbitrary table. Entries with
    /// `|v - fbar| <= tol * max(|fbar|, 1)` are treated as equal to `fbar`.
    pub fn from_dense(dense: &DensePotential, fbar: f64, tol: f64) -> Result<Self, MrfError> {
        if !(tol >= 0.0) {
            return Err(MrfError::InvalidParameter("tolerance must be >= 0"));
        }
        let n = dense.num_labels();
        let cutoff = tol * fbar.abs().max(1.0);
        let columns: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|xj| {
                dense
                    .column(xj)
                    .iter()
                    .enumerate()
                    .filter(|&(_, &v)| !((v - fbar).abs() <= cutoff))
                    .map(|(xi, &v)| (xi, v))
                    .collect()
            })
            .collect();
        Self::new(n, fbar, &columns)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn fbar(&self) -> f64 {
        self.fbar
    }

    /// True when every listed value is `>= fbar`, the condition under which
    /// the fast max-sum update is exact.
    pub fn is_maxsum_safe(&self) -> bool {
        self.maxsum_safe
    }

    /// Largest neighborhood size over all columns.
    pub fn max_neighborhood(&self) -> usize {
        self.col_start
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0)
    }

    /// Total number of listed entries.
    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    /// Compatible states of column `x_j` with their values and residuals.
    #[inline]
    pub fn column(&self, xj: usize) -> Column<'_> {
        let range = self.col_start[xj]..self.col_start[xj + 1];
        Column {
            rows: &self.rows[range.clone()],
            values: &self.values[range.clone()],
            residuals: &self.residuals[range],
        }
    }

    /// Columns in order of `x_j`.
    #[inline]
    pub fn columns(&self) -> impl Iterator<Item = Column<'_>> + '_ {
        self.col_start.windows(2).map(move |w| {
            let range = w[0]..w[1];
            Column {
                rows: &self.rows[range.clone()],
                values: &self.values[range.clone()],
                residuals: &self.residuals[range],
            }
        })
    }

    pub fn get(&self, xi: usize, xj: usize) -> f64 {
        let col = self.column(xj);
        match col.rows.binary_search(&(xi as u32)) {
            Ok(k) => col.values[k],
            Err(_) => self.fbar,
        }
    }

    pub fn densify(&self) -> DensePotential {
        let mut dense = DensePotential::from_fn(self.num_labels, |_, _| self.fbar);
        for xj in 0..self.num_labels {
            let col = self.column(xj);
            for (&xi, &v) in col.rows.iter().zip(col.values) {
                dense.data[xj * self.num_labels + xi as usize] = v;
            }
        }
        dense
    }

    /// The potential seen from the other end of the edge, `f^T(x_j, x_i)`.
    pub fn transpose(&self) -> Self {
        let mut columns = vec![Vec::new(); self.num_labels];
        // visiting source columns in ascending order keeps every target column sorted
        for xj in 0..self.num_labels {
            let col = self.column(xj);
            for (&xi, &v) in col.rows.iter().zip(col.values) {
                columns[xi as usize].push((xj, v));
            }
        }
        Self::new(self.num_labels, self.fbar, &columns).expect("transpose of a valid potential")
    }

    /// Applies `f` to `fbar` and every listed value, keeping the structure.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let columns: Vec<Vec<(usize, f64)>> = (0..self.num_labels)
            .map(|xj| {
                let col = self.column(xj);
                col.rows
                    .iter()
                    .zip(col.values)
                    .map(|(&xi, &v)| (xi as usize, f(v)))
                    .collect()
            })
            .collect();
        Self::new(self.num_labels, f(self.fbar), &columns).expect("mapped potential")
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.num_labels).all(|xj| {
            let col = self.column(xj);
            col.rows
                .iter()
                .zip(col.values)
                .all(|(&xi, &v)| self.get(xj, xi as usize) == v)
        })
    }
}

/// Borrowed view of one column of a [`SparseTruncatedPotential`].
#[derive(Debug, Clone, Copy)]
pub struct Column<'a> {
    pub rows: &'a [u32],
    pub values: &'a [f64],
    pub residuals: &'a [f64],
}

impl Column<'_> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn check_truncated_params(num_labels: usize, alpha: f64, t: f64) -> Result<(), MrfError> {
    if num_labels == 0 {
        return Err(MrfError::EmptyLabelSpace);
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(MrfError::InvalidParameter(
            "alpha must be positive and finite",
        ));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(MrfError::InvalidParameter(
            "truncation must be positive and finite",
        ));
    }
    Ok(())
}

/// Either representation of a pairwise potential.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Dense(DensePotential),
    Sparse(SparseTruncatedPotential),
}

impl Potential {
    pub fn num_labels(&self) -> usize {
        match self {
            Potential::Dense(d) => d.num_labels(),
            Potential::Sparse(s) => s.num_labels(),
        }
    }

    pub fn get(&self, xi: usize, xj: usize) -> f64 {
        match self {
            Potential::Dense(d) => d.get(xi, xj),
            Potential::Sparse(s) => s.get(xi, xj),
        }
    }

    pub fn to_dense(&self) -> DensePotential {
        match self {
            Potential::Dense(d) => d.clone(),
            Potential::Sparse(s) => s.densify(),
        }
    }

    pub fn as_sparse(&self) -> Option<&SparseTruncatedPotential> {
        match self {
            Potential::Sparse(s) => Some(s),
            Potential::Dense(_) => None,
        }
    }

    pub fn transpose(&self) -> Self {
        match self {
            Potential::Dense(d) => Potential::Dense(d.transpose()),
            Potential::Sparse(s) => Potential::Sparse(s.transpose()),
        }
    }
}

/// A pairwise term in both domains: probabilities for sum-product and
/// log-potentials for max-sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTerm {
    product: Potential,
    log: Potential,
}

impl PairwiseTerm {
    /// Truncated-linear term with the log domain built analytically.
    pub fn truncated_linear(num_labels: usize, alpha: f64, t: f64) -> Result<Self, MrfError> {
        Ok(Self {
            product: Potential::Sparse(SparseTruncatedPotential::truncated_linear(
                num_labels, alpha, t,
            )?),
            log: Potential::Sparse(SparseTruncatedPotential::truncated_linear_log(
                num_labels, alpha, t,
            )?),
        })
    }

    /// Sparse term whose log domain is obtained entrywise with `ln`.
    pub fn from_sparse(product: SparseTruncatedPotential) -> Result<Self, MrfError> {
        if !(product.fbar() >= 0.0)
            || (0..product.num_labels())
                .any(|j| product.column(j).values.iter().any(|&v| !(v >= 0.0)))
        {
            return Err(MrfError::NegativePotential);
        }
        let log = product.map_values(f64::ln);
        Ok(Self {
            product: Potential::Sparse(product),
            log: Potential::Sparse(log),
        })
    }

    pub fn from_dense(product: DensePotential) -> Result<Self, MrfError> {
        if !product.is_nonnegative() {
            return Err(MrfError::NegativePotential);
        }
        let log = product.map(f64::ln);
        Ok(Self {
            product: Potential::Dense(product),
            log: Potential::Dense(log),
        })
    }

    /// Pairs explicit product and log potentials. No consistency check
    /// between the two is made.
    pub fn from_parts(product: Potential, log: Potential) -> Result<Self, MrfError> {
        if product.num_labels() != log.num_labels() {
            return Err(MrfError::DimensionMismatch {
                expected: product.num_labels(),
                found: log.num_labels(),
            });
        }
        Ok(Self { product, log })
    }

    pub fn num_labels(&self) -> usize {
        self.product.num_labels()
    }

    pub fn product(&self) -> &Potential {
        &self.product
    }

    pub fn log(&self) -> &Potential {
        &self.log
    }
}
