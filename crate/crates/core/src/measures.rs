//! Discrete measures on the real line and ground costs.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Weighted atoms on the real line, sorted by location.
///
/// Construction sorts the points and merges duplicate locations by summing
/// their weights. Zero weights are kept; see [`DiscreteMeasure::prune_zeros`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("support points"));
        }
        check_weights(&weights)?;

        let mut atoms: Vec<(f64, f64)> = points.into_iter().zip(weights).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match points.last() {
                Some(&last) if last == x => *weights.last_mut().unwrap() += w,
                _ => {
                    points.push(x);
                    weights.push(w);
                }
            }
        }
        let m = Self { points, weights };
        if !(m.mass() > 0.0) || !m.mass().is_finite() {
            return Err(Error::ZeroMass);
        }
        Ok(m)
    }

    /// Empirical measure with weight `1/n` on each point.
    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        let n = points.len().max(1) as f64;
        let w = alloc::vec![1.0 / n; points.len()];
        Self::new(points, w)
    }

    /// Same support, new weights (used for reweighted marginals).
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                found: weights.len(),
            });
        }
        check_weights(&weights)?;
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::ZeroMass);
        }
        Ok(Self {
            points: self.points.clone(),
            weights,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total mass `m = Σ w_i`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Drop zero-weight atoms.
    pub fn prune_zeros(&self) -> Self {
        let (points, weights) = self
            .points
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&x, &w)| (x, w))
            .unzip();
        Self { points, weights }
    }

    /// The measure with all weights multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            points: self.points.clone(),
            weights: self.weights.iter().map(|w| w * s).collect(),
        }
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFinite("weights"));
        }
        if w < 0.0 {
            return Err(Error::NegativeWeight { index: i });
        }
    }
    Ok(())
}

/// Dense row-major `rows × cols` matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("cost matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::LengthMismatch {
                expected: c,
                found: bad.len(),
            });
        }
        Self::new(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Whether `C[i][j] + C[i+1][j+1] <= C[i][j+1] + C[i+1][j]` on every
    /// adjacent 2×2 block (up to `tol`), which makes north-west sweeps optimal.
    pub fn is_submodular(&self, tol: f64) -> bool {
        for i in 0..self.rows.saturating_sub(1) {
            for j in 0..self.cols.saturating_sub(1) {
                let lhs = self.get(i, j) + self.get(i + 1, j + 1);
                let rhs = self.get(i, j + 1) + self.get(i + 1, j);
                if lhs > rhs + tol * (1.0 + libm::fabs(rhs)) {
                    return false;
                }
            }
        }
        true
    }
}

/// Ground cost specification.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSpec {
    /// `c(x, y) = |x - y|^p` with `p ≥ 1`.
    Power(f64),
    /// Explicit matrix; dimensions must match the measures it is used with.
    Explicit(CostMatrix),
}

impl CostSpec {
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter("cost exponent p must be >= 1"));
        }
        Ok(CostSpec::Power(p))
    }

    pub fn squared_euclidean() -> Self {
        CostSpec::Power(2.0)
    }

    /// Check the spec against a pair of measures.
    pub fn validate(&self, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<()> {
        match self {
            CostSpec::Power(p) => {
                if !(*p >= 1.0) || !p.is_finite() {
                    return Err(Error::InvalidParameter("cost exponent p must be >= 1"));
                }
            }
            CostSpec::Explicit(m) => {
                if m.shape() != (a.len(), b.len()) {
                    return Err(Error::DimensionMismatch {
                        expected: (a.len(), b.len()),
                        found: m.shape(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `c(x_i, y_j)`; for explicit matrices the locations are ignored.
    #[inline]
    pub fn at(&self, a: &DiscreteMeasure, b: &DiscreteMeasure, i: usize, j: usize) -> f64 {
        match self {
            CostSpec::Power(p) => power_cost(*p, a.points[i], b.points[j]),
            CostSpec::Explicit(m) => m.get(i, j),
        }
    }
}

#[inline]
pub fn power_cost(p: f64, x: f64, y: f64) -> f64 {
    let d = libm::fabs(x - y);
    if p == 1.0 {
        d
    } else if p == 2.0 {
        d * d
    } else {
        libm::pow(d, p)
    }
}

/// Dense matrix with entry `(i, j) = c(x_i, y_j)`.
pub fn build_cost_matrix(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    cost: &CostSpec,
) -> Result<CostMatrix> {
    cost.validate(a, b)?;
    match cost {
        CostSpec::Explicit(m) => Ok(m.clone()),
        CostSpec::Power(_) => CostMatrix::from_fn(a.len(), b.len(), |i, j| cost.at(a, b, i, j)),
    }
}

/// `Δ = max_{i,j,k,l} C[j][k] + C[i][l] - C[j][l] - C[i][k]`.
///
/// For a fixed row pair `(i, j)` the expression is `max_k D_k - min_l D_l`
/// with `D_k = C[j][k] - C[i][k]`, so the maximum is exact in `O(N² M)`.
pub fn cost_quadruple_diameter(c: &CostMatrix) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..c.rows() {
        let ri = c.row(i);
        for j in 0..c.rows() {
            if i == j {
                continue;
            }
            let rj = c.row(j);
            let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
            for (x, y) in rj.iter().zip(ri) {
                let d = x - y;
                hi = hi.max(d);
                lo = lo.min(d);
            }
            best = best.max(hi - lo);
        }
    }
    best
}
