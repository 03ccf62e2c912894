//! Exact balanced optimal transport on the line in `O(N + M)`.
//!
//! For submodular costs (`|x - y|^p`, `p ≥ 1`) the monotone north-west plan
//! is optimal. The sweep also produces dual potentials that are tight on the
//! plan's support and feasible everywhere, so primal and dual values coincide.

use alloc::vec::Vec;

use crate::duality::DualPair;
use crate::measures::{CostMatrix, CostSpec, DiscreteMeasure};
use crate::{Error, Result};

/// Relative mass mismatch tolerated between the two inputs.
pub const MASS_BALANCE_TOL: f64 = 1e-9;
/// Tolerance used by [`check_complementary_slackness`].
pub const SLACKNESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
}

/// Transport plan stored as a monotone list of `(i, j, mass)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePlan {
    rows: usize,
    cols: usize,
    entries: Vec<PlanEntry>,
}

impl SparsePlan {
    pub fn new(rows: usize, cols: usize, entries: Vec<PlanEntry>) -> Result<Self> {
        for (k, e) in entries.iter().enumerate() {
            if e.i >= rows || e.j >= cols {
                return Err(Error::LengthMismatch {
                    expected: rows.max(cols),
                    found: e.i.max(e.j),
                });
            }
            if !e.mass.is_finite() {
                return Err(Error::NonFinite("plan"));
            }
            if e.mass < 0.0 {
                return Err(Error::NegativeWeight { index: k });
            }
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = alloc::vec![0.0; self.rows];
        for e in &self.entries {
            s[e.i] += e.mass;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = alloc::vec![0.0; self.cols];
        for e in &self.entries {
            s[e.j] += e.mass;
        }
        s
    }

    /// Both indices nondecreasing along the entries, with no repeated cell.
    pub fn is_monotone(&self) -> bool {
        self.entries.windows(2).all(|w| {
            let (a, b) = (w[0], w[1]);
            a.i <= b.i && a.j <= b.j && (a.i, a.j) != (b.i, b.j)
        })
    }

    /// `⟨π, C⟩` with `C` given entrywise.
    pub fn cost(&self, c: impl Fn(usize, usize) -> f64) -> f64 {
        self.entries.iter().map(|e| e.mass * c(e.i, e.j)).sum()
    }
}

/// Monotone north-west plan and dual potentials between equal-mass measures.
///
/// Each step assigns `min(remaining source, remaining target)` to the current
/// cell and advances the exhausted side (the source on ties, unless it is on
/// its last atom). Duals start at `f₀ = 0`, `g₀ = c(x₀, y₀)` and are extended
/// along the path so that `f_i + g_j = c(x_i, y_j)` on every visited cell.
pub fn solve_ot_1d(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    cost: &CostSpec,
) -> Result<(SparsePlan, DualPair)> {
    cost.validate(a, b)?;
    if let CostSpec::Explicit(m) = cost {
        if !m.is_submodular(1e-12) {
            return Err(Error::NonSubmodularCost);
        }
    }
    if !is_strictly_sorted(a.points()) || !is_strictly_sorted(b.points()) {
        return Err(Error::Unsorted);
    }
    let (ma, mb) = (a.mass(), b.mass());
    if libm::fabs(ma - mb) > MASS_BALANCE_TOL * ma.max(mb) {
        return Err(Error::UnbalancedMasses { left: ma, right: mb });
    }
    let c = |i: usize, j: usize| cost.at(a, b, i, j);
    Ok(north_west_sweep(a.weights(), b.weights(), c))
}

pub(crate) fn north_west_sweep(
    aw: &[f64],
    bw: &[f64],
    c: impl Fn(usize, usize) -> f64,
) -> (SparsePlan, DualPair) {
    let (n, m) = (aw.len(), bw.len());
    let mut f = alloc::vec![0.0; n];
    let mut g = alloc::vec![0.0; m];
    let mut entries = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ra, mut rb) = (aw[0], bw[0]);
    g[0] = c(0, 0);
    let mut push = |i: usize, j: usize, mass: f64| {
        if mass > 0.0 {
            entries.push(PlanEntry { i, j, mass });
        }
    };
    loop {
        if i == n - 1 && j == m - 1 {
            // any residual mismatch is absorbed here
            push(i, j, ra.max(0.0));
            break;
        }
        if (ra <= rb && i < n - 1) || j == m - 1 {
            push(i, j, ra);
            rb = (rb - ra).max(0.0);
            i += 1;
            ra = aw[i];
            f[i] = c(i, j) - g[j];
        } else {
            push(i, j, rb);
            ra = (ra - rb).max(0.0);
            j += 1;
            rb = bw[j];
            g[j] = c(i, j) - f[i];
        }
    }
    (
        SparsePlan {
            rows: n,
            cols: m,
            entries,
        },
        DualPair::new(f, g),
    )
}

fn is_strictly_sorted(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] < w[1])
}

/// `f_i + g_j = C_ij` (within 1e-9) on the plan's support and `f ⊕ g ≤ C + 1e-9` everywhere.
pub fn check_complementary_slackness(plan: &SparsePlan, d: &DualPair, c: &CostMatrix) -> bool {
    if d.f.len() != c.rows() || d.g.len() != c.cols() || plan.shape() != c.shape() {
        return false;
    }
    let tight = plan
        .entries()
        .iter()
        .all(|e| libm::fabs(d.f[e.i] + d.g[e.j] - c.get(e.i, e.j)) <= SLACKNESS_TOL);
    tight && max_dual_violation(d, c) <= SLACKNESS_TOL
}

/// `max_{i,j} f_i + g_j - C_ij`.
pub fn max_dual_violation(d: &DualPair, c: &CostMatrix) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (i, &fi) in d.f.iter().enumerate() {
        for (&gj, &cij) in d.g.iter().zip(c.row(i)) {
            worst = worst.max(fi + gj - cij);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::build_cost_matrix;
    use alloc::vec;
    use proptest::prelude::*;

    fn m(points: Vec<f64>, weights: Vec<f64>) -> DiscreteMeasure {
        DiscreteMeasure::new(points, weights).unwrap()
    }

    #[test]
    fn single_atoms() {
        let a = m(vec![0.0], vec![1.0]);
        let b = m(vec![1.0], vec![1.0]);
        let (plan, d) = solve_ot_1d(&a, &b, &CostSpec::Power(1.0)).unwrap();
        assert_eq!(plan.entries(), &[PlanEntry { i: 0, j: 0, mass: 1.0 }]);
        assert_eq!(d.f, vec![0.0]);
        assert_eq!(d.g, vec![1.0]);
    }

    #[test]
    fn identical_measures_give_identity_plan() {
        let a = m(vec![0.0, 0.5, 2.0], vec![0.2, 0.3, 0.5]);
        let (plan, d) = solve_ot_1d(&a, &a, &CostSpec::Power(2.0)).unwrap();
        let cells: Vec<(usize, usize)> = plan.entries().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(cells, vec![(0, 0), (1, 1), (2, 2)]);
        let c = build_cost_matrix(&a, &a, &CostSpec::Power(2.0)).unwrap();
        assert_eq!(plan.cost(|i, j| c.get(i, j)), 0.0);
        assert!(check_complementary_slackness(&plan, &d, &c));
    }

    #[test]
    fn hand_executed_two_by_two() {
        let a = m(vec![0.0, 1.0], vec![0.7, 0.3]);
        let b = m(vec![0.0, 1.0], vec![0.4, 0.6]);
        let (plan, d) = solve_ot_1d(&a, &b, &CostSpec::Power(1.0)).unwrap();
        let e = plan.entries();
        assert_eq!(e.len(), 3);
        assert_eq!((e[0].i, e[0].j), (0, 0));
        assert!((e[0].mass - 0.4).abs() < 1e-15);
        assert_eq!((e[1].i, e[1].j), (0, 1));
        assert!((e[1].mass - 0.3).abs() < 1e-15);
        assert_eq!((e[2].i, e[2].j), (1, 1));
        assert!((e[2].mass - 0.3).abs() < 1e-15);
        assert_eq!(d.f, vec![0.0, -1.0]);
        assert_eq!(d.g, vec![0.0, 1.0]);
        let c = build_cost_matrix(&a, &b, &CostSpec::Power(1.0)).unwrap();
        let primal = plan.cost(|i, j| c.get(i, j));
        let dual: f64 = 0.7 * 0.0 + 0.3 * -1.0 + 0.4 * 0.0 + 0.6 * 1.0;
        assert!((primal - 0.3).abs() < 1e-15 && (dual - 0.3).abs() < 1e-15);
    }

    #[test]
    fn slackness_detects_perturbations() {
        let a = m(vec![0.0, 1.0, 3.0], vec![0.2, 0.5, 0.3]);
        let b = m(vec![0.5, 2.0], vec![0.6, 0.4]);
        let (plan, d) = solve_ot_1d(&a, &b, &CostSpec::Power(2.0)).unwrap();
        let c = build_cost_matrix(&a, &b, &CostSpec::Power(2.0)).unwrap();
        assert!(check_complementary_slackness(&plan, &d, &c));
        let mut bad = d.clone();
        bad.f[plan.entries()[0].i] += 0.1;
        assert!(!check_complementary_slackness(&plan, &bad, &c));
        let zero = DualPair::zeros(3, 2);
        assert!(!check_complementary_slackness(&plan, &zero, &c));
    }

    #[test]
    fn errors() {
        let a = m(vec![0.0, 1.0], vec![0.5, 0.5]);
        let b = m(vec![0.0], vec![2.0]);
        assert!(matches!(
            solve_ot_1d(&a, &b, &CostSpec::Power(1.0)),
            Err(Error::UnbalancedMasses { .. })
        ));
        let anti = CostMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            solve_ot_1d(&a, &a, &CostSpec::Explicit(anti)),
            Err(Error::NonSubmodularCost)
        );
        // tiny mismatch is absorbed
        let b = m(vec![0.0, 1.0], vec![0.5, 0.5 + 1e-12]);
        assert!(solve_ot_1d(&a, &b, &CostSpec::Power(1.0)).is_ok());
    }

    #[test]
    fn zero_weight_atoms_keep_duals_feasible() {
        let a = m(vec![0.0, 0.4, 1.0, 1.5], vec![0.5, 0.0, 0.5, 0.0]);
        let b = m(vec![0.2, 0.3, 1.2], vec![0.0, 0.6, 0.4]);
        let (plan, d) = solve_ot_1d(&a, &b, &CostSpec::Power(2.0)).unwrap();
        let c = build_cost_matrix(&a, &b, &CostSpec::Power(2.0)).unwrap();
        assert!(check_complementary_slackness(&plan, &d, &c));
        assert!(plan.entries().iter().all(|e| e.mass > 0.0));
    }

    proptest! {
        #[test]
        fn certificates_hold(
            xs in proptest::collection::vec(-2.0f64..2.0, 1..20),
            ys in proptest::collection::vec(-2.0f64..2.0, 1..20),
            wa in proptest::collection::vec(0.0f64..1.0, 20),
            wb in proptest::collection::vec(0.0f64..1.0, 20),
            p in prop_oneof![Just(1.0), Just(2.0), 1.0f64..3.0],
        ) {
            let mut wa = wa[..xs.len()].to_vec();
            let mut wb = wb[..ys.len()].to_vec();
            wa[0] += 0.1;
            wb[0] += 0.1;
            let a = DiscreteMeasure::new(xs, wa).unwrap();
            let b0 = DiscreteMeasure::new(ys, wb).unwrap();
            let b = b0.scaled(a.mass() / b0.mass());
            let cost = CostSpec::Power(p);
            let (plan, d) = solve_ot_1d(&a, &b, &cost).unwrap();
            let c = build_cost_matrix(&a, &b, &cost).unwrap();
            let primal = plan.cost(|i, j| c.get(i, j));
            let dual: f64 = a.weights().iter().zip(&d.f).map(|(w, f)| w * f).sum::<f64>()
                + b.weights().iter().zip(&d.g).map(|(w, g)| w * g).sum::<f64>();
            prop_assert!((primal - dual).abs() <= 1e-9 * (1.0 + primal.abs()));
            prop_assert!(max_dual_violation(&d, &c) <= 1e-9);
            prop_assert!(plan.is_monotone());
            prop_assert!(plan.len() <= a.len() + b.len() - 1);
            for (s, w) in plan.row_sums().iter().zip(a.weights()) {
                prop_assert!((s - w).abs() <= 1e-12 * a.mass());
            }
            for (s, w) in plan.col_sums().iter().zip(b.weights()) {
                prop_assert!((s - w).abs() <= 1e-12 * a.mass());
            }

            // shifting all costs by a constant shifts the value, not the plan
            let shifted = CostMatrix::from_fn(c.rows(), c.cols(), |i, j| c.get(i, j) + 5.0).unwrap();
            let (plan2, _) = solve_ot_1d(&a, &b, &CostSpec::Explicit(shifted.clone())).unwrap();
            prop_assert_eq!(&plan2, &plan);
            let v2 = plan2.cost(|i, j| shifted.get(i, j));
            prop_assert!((v2 - primal - 5.0 * a.mass()).abs() <= 1e-9 * (1.0 + v2.abs()));
        }
    }
}
