//! Synthetic 1-D measures.

use anyhow::{ensure, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use uot_core::DiscreteMeasure;

/// `a·N(μ₁, σ) + b·N(μ₂, σ)`; unset fields are drawn from the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    pub sigma: f64,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

impl Default for MixtureParams {
    fn default() -> Self {
        Self {
            sigma: 0.03,
            mu1: None,
            mu2: None,
            a: None,
            b: None,
        }
    }
}

/// A generated measure plus the parameters it was drawn with.
#[derive(Debug, Clone)]
pub struct Generated {
    pub measure: DiscreteMeasure,
    pub meta: Vec<(String, String)>,
}

/// `n` samples of the mixture, each carrying mass `(a + b)/n`.
///
/// `μ₁ ~ U[0.1, 0.4]`, `μ₂ ~ U[0.6, 0.9]` and `a, b ~ U[0.1, 0.8]` unless fixed.
pub fn mixture(n: usize, seed: u64, p: &MixtureParams) -> Result<Generated> {
    ensure!(n >= 1, "n must be >= 1");
    ensure!(p.sigma > 0.0 && p.sigma.is_finite(), "sigma must be > 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu1 = p.mu1.unwrap_or_else(|| rng.gen_range(0.1..0.4));
    let mu2 = p.mu2.unwrap_or_else(|| rng.gen_range(0.6..0.9));
    let a = p.a.unwrap_or_else(|| rng.gen_range(0.1..0.8));
    let b = p.b.unwrap_or_else(|| rng.gen_range(0.1..0.8));
    ensure!(a >= 0.0 && b >= 0.0 && a + b > 0.0, "mixture weights must be >= 0 with a positive sum");
    let c1 = Normal::new(mu1, p.sigma)?;
    let c2 = Normal::new(mu2, p.sigma)?;
    let pts: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen::<f64>() * (a + b) < a {
                c1.sample(&mut rng)
            } else {
                c2.sample(&mut rng)
            }
        })
        .collect();
    let measure = DiscreteMeasure::new(pts, vec![(a + b) / n as f64; n])?;
    let meta = [
        ("kind", "mixture".to_string()),
        ("n", n.to_string()),
        ("seed", seed.to_string()),
        ("sigma", p.sigma.to_string()),
        ("mu1", mu1.to_string()),
        ("mu2", mu2.to_string()),
        ("a", a.to_string()),
        ("b", b.to_string()),
    ];
    Ok(Generated {
        measure,
        meta: meta.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    })
}

/// `n` points drawn uniformly on `[lo, hi)`, each with mass `mass / n`.
pub fn uniform(n: usize, seed: u64, lo: f64, hi: f64, mass: f64) -> Result<Generated> {
    ensure!(n >= 1, "n must be >= 1");
    ensure!(lo < hi && lo.is_finite() && hi.is_finite(), "need lo < hi");
    ensure!(mass > 0.0 && mass.is_finite(), "mass must be > 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    let measure = DiscreteMeasure::new(pts, vec![mass / n as f64; n])?;
    let meta = [
        ("kind", "uniform".to_string()),
        ("n", n.to_string()),
        ("seed", seed.to_string()),
        ("lo", lo.to_string()),
        ("hi", hi.to_string()),
        ("mass", mass.to_string()),
    ];
    Ok(Generated {
        measure,
        meta: meta.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_three_atoms() {
        let g = uniform(3, 1, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(g.measure.len(), 3);
        assert!(g.measure.points().windows(2).all(|w| w[0] < w[1]));
        assert!(g.measure.weights().iter().all(|&w| w == 1.0 / 3.0));
    }

    #[test]
    fn mixture_is_deterministic() {
        let p = MixtureParams::default();
        let x = mixture(200, 9, &p).unwrap();
        let y = mixture(200, 9, &p).unwrap();
        assert_eq!(x.measure, y.measure);
        assert_eq!(x.meta, y.meta);
        assert_ne!(mixture(200, 10, &p).unwrap().measure, x.measure);
        assert!(x.meta.contains(&("sigma".into(), "0.03".into())));
    }

    #[test]
    fn mixture_parameters_in_range() {
        for seed in 0..20 {
            let g = mixture(50, seed, &MixtureParams::default()).unwrap();
            let get = |k: &str| -> f64 { g.meta.iter().find(|(n, _)| n == k).unwrap().1.parse().unwrap() };
            assert!((0.1..0.4).contains(&get("mu1")));
            assert!((0.6..0.9).contains(&get("mu2")));
            let (a, b) = (get("a"), get("b"));
            assert!((g.measure.mass() - (a + b)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(uniform(0, 1, 0.0, 1.0, 1.0).is_err());
        assert!(uniform(3, 1, 1.0, 1.0, 1.0).is_err());
        let p = MixtureParams {
            sigma: -1.0,
            ..MixtureParams::default()
        };
        assert!(mixture(3, 1, &p).is_err());
    }
}
