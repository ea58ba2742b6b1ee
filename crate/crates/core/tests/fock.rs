//! Number-basis checks of the positive-P ensembles against directly
//! constructed cat density matrices.

use catmem::ensemble::{input_ensemble, simulate, EnsembleConfig};
use catmem::sampler::SamplerConfig;
use catmem::sde::StorageMode;
use catmem::{CatParams, ProtocolSchedule, SystemParams, TrajectoryResult};
use num_complex::Complex64;

type C = Complex64;

const DIM: usize = 41;

fn sqrt_factorials() -> Vec<f64> {
    let mut f = vec![1.0; DIM];
    for n in 1..DIM {
        f[n] = f[n - 1] * (n as f64).sqrt();
    }
    f
}

/// `rho_mn = (1/N) sum w alpha^m (alpha+)^n / sqrt(m! n!) e^{-alpha+ alpha}`.
fn positive_p_density(results: &[TrajectoryResult]) -> Vec<Vec<C>> {
    let sf = sqrt_factorials();
    let mut rho = vec![vec![C::default(); DIM]; DIM];
    for r in results {
        let (a, ap) = (r.alpha_out, r.alpha_out_plus);
        let pre = (-ap * a).exp() * r.weight;
        let pa: Vec<C> = (0..DIM).map(|m| a.powu(m as u32) / sf[m]).collect();
        let pp: Vec<C> = (0..DIM).map(|n| ap.powu(n as u32) / sf[n]).collect();
        for m in 0..DIM {
            for n in 0..DIM {
                rho[m][n] += pa[m] * pp[n] * pre;
            }
        }
    }
    let k = 1.0 / results.len() as f64;
    rho.iter_mut().flatten().for_each(|z| *z *= k);
    rho
}

/// Number-basis coefficients `<n|beta>`.
fn coherent(beta: f64) -> Vec<f64> {
    let sf = sqrt_factorials();
    (0..DIM)
        .map(|n| (-0.5 * beta * beta).exp() * beta.powi(n as i32) / sf[n])
        .collect()
}

/// `sum_± |±a><±a| + c (|a><-a| + |-a><a|)`, normalized.
fn direct_density(a: f64, c: f64) -> Vec<Vec<f64>> {
    let (p, m) = (coherent(a), coherent(-a));
    let mut rho = vec![vec![0.0; DIM]; DIM];
    let mut tr = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            rho[i][j] = p[i] * p[j] + m[i] * m[j] + c * (p[i] * m[j] + m[i] * p[j]);
        }
        tr += rho[i][i];
    }
    rho.iter_mut().flatten().for_each(|z| *z /= tr);
    rho
}

fn max_diff(a: &[Vec<C>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn input_ensemble_is_the_cat() {
    for a0 in [0.5, 1.0, 2.0, 3.0] {
        let s = SamplerConfig::new(CatParams::real(a0).unwrap(), 4, 0).unwrap();
        let rho = positive_p_density(&input_ensemble(&s).unwrap());
        let err = max_diff(&rho, &direct_density(a0, 1.0));
        assert!(err <= 1e-10, "{a0}: {err}");
        let n: f64 = (0..DIM).map(|k| k as f64 * rho[k][k].re).sum();
        let e = (-2.0 * a0 * a0).exp();
        let expect = a0 * a0 * (1.0 - e) / (1.0 + e);
        assert!((n - expect).abs() < 1e-9, "{a0}: {n} vs {expect}");
        let a2: C = (2..DIM).map(|k| rho[k][k - 2] * ((k * (k - 1)) as f64).sqrt()).sum();
        assert!((a2.re - a0 * a0).abs() < 1e-9 && a2.im.abs() < 1e-12);
    }
}

/// At zero temperature the whole write-store-read sequence is a pure-loss
/// channel with amplitude transmissivity `|gain|`.
#[test]
fn noiseless_memory_is_a_loss_channel() {
    let params = SystemParams {
        gamma_ext: 0.95,
        gamma_int: 0.05,
        ..SystemParams::reference()
    };
    for (a0, ts) in [(2.0, 500.0), (3.0, 3000.0)] {
        let cfg = EnsembleConfig {
            params,
            schedule: ProtocolSchedule::for_params(&params, ts, 0.1).unwrap(),
            sampler: SamplerConfig::new(CatParams::real(a0).unwrap(), 4, 0).unwrap(),
            storage: StorageMode::Exact,
            workers: 1,
            phase_correction: true,
            step_error: false,
        };
        let e = simulate(&cfg).unwrap();
        let eta = e.gain.norm();
        let rho = positive_p_density(&e.results);
        let c = (-2.0 * a0 * a0 * (1.0 - eta * eta)).exp();
        let err = max_diff(&rho, &direct_density(a0 * eta, c));
        assert!(err <= 1e-10, "{a0} {ts}: {err}");
    }
}
