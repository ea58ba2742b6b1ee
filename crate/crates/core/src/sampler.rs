//! Importance-weighted positive-P samples of the even cat input and thermal
//! initial states of the mechanical mode.
//!
//! The cat's positive-P distribution is a sum of four delta functions, two of
//! them suppressed by `exp(-2|alpha0|^2)`. Samples are drawn with equal
//! probability from the four branches and carry the weight `w = P / f`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Branch, CatParams, WeightedSample};
use crate::rng::{auxiliary_stream, complex_normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub cat: CatParams,
    pub n_samples: usize,
    pub master_seed: u64,
    /// Allocate exactly `n / 4` samples to each branch instead of drawing
    /// branches at random.
    pub stratified: bool,
}

impl SamplerConfig {
    pub fn new(cat: CatParams, n_samples: usize, master_seed: u64) -> Result<Self> {
        let c = Self {
            cat,
            n_samples,
            master_seed,
            stratified: true,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 4 {
            return Err(invalid("n_samples", format!("need at least 4, got {}", self.n_samples)));
        }
        if self.stratified && self.n_samples % 4 != 0 {
            return Err(invalid(
                "n_samples",
                format!("stratified sampling needs a multiple of 4, got {}", self.n_samples),
            ));
        }
        Ok(())
    }
}

/// Importance weight of a branch.
pub fn branch_weight(cat: &CatParams, branch: Branch) -> f64 {
    let overlap = cat.overlap();
    let diag = 2.0 / (1.0 + overlap);
    if branch.is_diagonal() {
        diag
    } else {
        diag * overlap
    }
}

pub fn branch_sample(cat: &CatParams, branch: Branch) -> WeightedSample {
    let (s, s_plus) = branch.signs();
    WeightedSample {
        alpha_in: cat.alpha0 * s,
        alpha_in_plus: cat.alpha0.conj() * s_plus,
        weight: branch_weight(cat, branch),
        branch,
    }
}

/// Stratified mode returns blocks `++, --, +-, -+` of `n / 4` samples each.
pub fn sample_cat(config: &SamplerConfig) -> Result<Vec<WeightedSample>> {
    config.validate()?;
    let n = config.n_samples;
    if config.stratified {
        let per = n / 4;
        Ok(Branch::ALL
            .iter()
            .flat_map(|&b| std::iter::repeat_n(branch_sample(&config.cat, b), per))
            .collect())
    } else {
        let mut rng = auxiliary_stream(config.master_seed, 0);
        Ok((0..n)
            .map(|_| branch_sample(&config.cat, Branch::ALL[rng.random_range(0..4)]))
            .collect())
    }
}

/// Normally-ordered thermal samples `(beta, conj(beta))` with `<|beta|^2> = n`.
pub fn sample_thermal<R: Rng + ?Sized>(
    n_occupation: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(Complex64, Complex64)>> {
    if !(n_occupation >= 0.0) || !n_occupation.is_finite() {
        return Err(invalid("n_occupation", format!("must be >= 0, got {n_occupation}")));
    }
    if n_occupation == 0.0 {
        return Ok(vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); count]);
    }
    let sd = n_occupation.sqrt();
    Ok((0..count)
        .map(|_| {
            let b = complex_normal(rng) * sd;
            (b, b.conj())
        })
        .collect())
}

/// Weighted normally-ordered moments of an input ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatMoments {
    /// `(1/N) sum w`, the estimate of `Tr rho`.
    pub trace: f64,
    pub mean_a: Complex64,
    pub mean_a2: Complex64,
    pub mean_n: Complex64,
}

pub fn verify_cat_moments(samples: &[WeightedSample]) -> Result<CatMoments> {
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let zero = Complex64::new(0.0, 0.0);
    let (mut tr, mut a, mut a2, mut n) = (0.0, zero, zero, zero);
    for s in samples {
        tr += s.weight;
        a += s.alpha_in * s.weight;
        a2 += s.alpha_in * s.alpha_in * s.weight;
        n += s.alpha_in_plus * s.alpha_in * s.weight;
    }
    let k = 1.0 / samples.len() as f64;
    Ok(CatMoments {
        trace: tr * k,
        mean_a: a * k,
        mean_a2: a2 * k,
        mean_n: n * k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{trajectory_stream, Purpose};

    fn config(alpha0: f64, n: usize) -> SamplerConfig {
        SamplerConfig::new(CatParams::real(alpha0).unwrap(), n, 11).unwrap()
    }

    #[test]
    fn config_validation() {
        let cat = CatParams::real(1.0).unwrap();
        assert!(SamplerConfig::new(cat, 0, 0).is_err());
        assert!(SamplerConfig::new(cat, 6, 0).is_err());
        let mut c = SamplerConfig::new(cat, 8, 0).unwrap();
        c.stratified = false;
        c.n_samples = 7;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn vacuum_cat_degenerates() {
        let s = sample_cat(&config(0.0, 8)).unwrap();
        for x in &s {
            assert_eq!(x.alpha_in, Complex64::new(0.0, 0.0));
            assert_eq!(x.alpha_in_plus, Complex64::new(0.0, 0.0));
            assert_eq!(x.weight, 1.0);
        }
    }

    #[test]
    fn weights_for_large_cats() {
        let c5 = CatParams::real(5.0).unwrap();
        assert!((branch_weight(&c5, Branch::PlusPlus) - 2.0).abs() < 1e-15);
        let off = branch_weight(&c5, Branch::PlusMinus);
        assert!((off / 3.857e-22 - 1.0).abs() < 1e-3, "{off}");
        let c2 = CatParams::real(2.0).unwrap();
        assert!((branch_weight(&c2, Branch::MinusMinus) - 1.99933).abs() < 5e-6);
        assert!((branch_weight(&c2, Branch::MinusPlus) - 6.7069e-4).abs() < 5e-8);
    }

    #[test]
    fn stratified_layout_and_invariants() {
        let cat = CatParams::new(Complex64::new(1.2, -0.7)).unwrap();
        let s = sample_cat(&SamplerConfig::new(cat, 12, 0).unwrap()).unwrap();
        let labels: Vec<&str> = s.iter().map(|x| x.branch.label()).collect();
        assert_eq!(&labels[..4], &["++", "++", "++", "--"]);
        assert_eq!(labels[6], "+-");
        assert_eq!(labels[9], "-+");
        for x in &s {
            let sign = if x.branch.is_diagonal() { 1.0 } else { -1.0 };
            assert_eq!(x.alpha_in_plus, x.alpha_in.conj() * sign);
        }
        let m = verify_cat_moments(&s).unwrap();
        assert!((m.trace - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moments_of_even_cat() {
        let m = verify_cat_moments(&sample_cat(&config(2.0, 4)).unwrap()).unwrap();
        assert_eq!(m.mean_a, Complex64::new(0.0, 0.0));
        assert!((m.mean_a2 - Complex64::new(4.0, 0.0)).norm() < 1e-14);
        assert!((m.mean_n.re - 3.99732).abs() < 5e-6, "{}", m.mean_n);
        assert!(m.mean_n.im.abs() < 1e-15);
    }

    #[test]
    fn random_branches_are_seeded() {
        let mut c = config(1.0, 400);
        c.stratified = false;
        let a = sample_cat(&c).unwrap();
        assert_eq!(a, sample_cat(&c).unwrap());
        let diag = a.iter().filter(|s| s.branch.is_diagonal()).count();
        assert!((150..250).contains(&diag));
    }

    #[test]
    fn thermal_zero_and_negative() {
        let mut rng = trajectory_stream(0, 0, Purpose::Initial);
        let z = sample_thermal(0.0, 5, &mut rng).unwrap();
        assert!(z.iter().all(|&(b, bp)| b.norm() == 0.0 && bp.norm() == 0.0));
        assert!(sample_thermal(-0.1, 5, &mut rng).is_err());
    }

    #[test]
    fn thermal_moments() {
        let mut rng = trajectory_stream(3, 0, Purpose::Initial);
        let s = sample_thermal(0.5, 1_000_000, &mut rng).unwrap();
        let n: f64 = s.iter().map(|(b, bp)| (bp * b).re).sum::<f64>() / s.len() as f64;
        assert!((n - 0.5).abs() < 0.002, "{n}");
        let s = sample_thermal(2.0, 1_000_000, &mut rng).unwrap();
        let b2: Complex64 = s.iter().map(|(b, _)| b * b).sum::<Complex64>() / s.len() as f64;
        assert!(b2.norm() < 0.006, "{b2}");
        assert!(s.iter().all(|(b, bp)| *bp == b.conj()));
    }
}
