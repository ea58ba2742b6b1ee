use catmem::model::Branch;
use catmem::rng::StreamKey;
use catmem::sde::{ProtocolRunner, StorageMode};
use catmem::{derive_rates, PhaseSpaceState, ProtocolSchedule, SystemParams, WeightedSample};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;
type M4 = [[C; 4]; 4];

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn matmul(a: &M4, b: &M4) -> M4 {
    let mut r = [[C::default(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                r[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    r
}

/// exp(A t) by scaling and squaring of a Taylor series.
fn expm(a: &M4, t: f64) -> M4 {
    let norm = a.iter().flatten().map(|z| z.norm()).sum::<f64>() * t.abs();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let s = t / 2f64.powi(squarings);
    let mut term = [[C::default(); 4]; 4];
    let mut sum = [[C::default(); 4]; 4];
    for i in 0..4 {
        term[i][i] = c(1.0, 0.0);
        sum[i][i] = c(1.0, 0.0);
    }
    let scaled: M4 = std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] * s));
    for k in 1..30 {
        term = matmul(&term, &scaled);
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z /= k as f64;
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// Noiseless write stage as an autonomous linear system in
/// `(alpha, beta, e^{(g+ + m) t}, e^{(g+ - m) t})`.
fn write_oracle(p: &SystemParams, alpha_in: C, beta0: C, t_write: f64, t: f64) -> (C, C) {
    let r = derive_rates(p);
    let (gp, m) = (c(r.gamma_plus, 0.0), r.m_rate);
    let amp = ((gp + m) * (gp - m) * gp).sqrt();
    let pref = c(0.0, -2.0) * amp / m;
    let k = alpha_in * pref * 0.5 * (2.0 * p.gamma_ext).sqrt();
    let ig = c(0.0, p.g_eff);
    let z = C::default();
    let a: M4 = [
        [c(-p.gamma_o(), 0.0), -ig, k, -k],
        [-ig, c(-p.gamma_m, 0.0), z, z],
        [z, z, gp + m, z],
        [z, z, z, gp - m],
    ];
    let e = expm(&a, t + t_write);
    let v0 = [z, beta0, ((gp + m) * -t_write).exp(), ((gp - m) * -t_write).exp()];
    let mut v = [z; 4];
    for i in 0..4 {
        for j in 0..4 {
            v[i] += e[i][j] * v0[j];
        }
    }
    (v[0], v[1])
}

fn coherent(a: C) -> WeightedSample {
    WeightedSample {
        alpha_in: a,
        alpha_in_plus: a.conj(),
        weight: 1.0,
        branch: Branch::PlusPlus,
    }
}

fn write_trace(p: &SystemParams, dt: f64, a: C, b: C) -> Vec<(f64, PhaseSpaceState)> {
    let s = ProtocolSchedule::for_params(p, 0.0, dt).unwrap();
    let runner = ProtocolRunner::new(p, &s, StorageMode::Exact).unwrap();
    let (_, trace) = runner
        .run_traced(&coherent(a), (b, b.conj()), None, false)
        .unwrap();
    trace.into_iter().filter(|(t, _)| *t <= 1e-12).collect()
}

#[test]
fn matrix_exponential_oracle_over_write_stage() {
    let p = SystemParams::reference();
    let (a, b) = (c(1.3, -0.4), c(0.2, 0.1));
    let tw = ProtocolSchedule::for_params(&p, 0.0, 0.1).unwrap().t_write;
    let mut worst: f64 = 0.0;
    for (t, y) in write_trace(&p, 0.1, a, b) {
        let (alpha, beta) = write_oracle(&p, a, b, tw, t);
        worst = worst.max((y.alpha - alpha).norm()).max((y.beta - beta).norm());
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn rk4_step_halving_is_fourth_order() {
    let p = SystemParams::reference();
    let (a, b) = (c(1.0, 0.0), c(0.0, 0.0));
    let tw = ProtocolSchedule::for_params(&p, 0.0, 0.1).unwrap().t_write;
    let (alpha, beta) = write_oracle(&p, a, b, tw, 0.0);
    let err = |dt: f64| {
        let y = write_trace(&p, dt, a, b).last().unwrap().1;
        (y.alpha - alpha).norm() + (y.beta - beta).norm()
    };
    let ratio = err(0.1) / err(0.05);
    assert!(ratio >= 14.0, "{ratio}");
}

#[test]
fn conjugacy_preserved_on_diagonal_branches() {
    let p = SystemParams::reference();
    let s = ProtocolSchedule::for_params(&p, 50.0, 0.1).unwrap();
    let runner = ProtocolRunner::new(&p, &s, StorageMode::Stepped).unwrap();
    for a in [c(2.0, 0.0), c(-2.0, 0.0), c(0.5, 1.5)] {
        let (d, trace) = runner.run_traced(&coherent(a), (C::default(), C::default()), None, false).unwrap();
        for (_, y) in &trace {
            assert!((y.alpha_plus - y.alpha.conj()).norm() < 1e-10);
            assert!((y.beta_plus - y.beta.conj()).norm() < 1e-10);
        }
        assert!((d.result.alpha_out_plus - d.result.alpha_out.conj()).norm() < 1e-10);
    }
}

#[test]
fn noiseless_runs_are_bitwise_deterministic() {
    let p = SystemParams::reference();
    let s = ProtocolSchedule::for_params(&p, 100.0, 0.1).unwrap();
    let runner = ProtocolRunner::new(&p, &s, StorageMode::Exact).unwrap();
    let smp = coherent(c(0.3, 0.9));
    let key = Some(StreamKey::new(1, 2));
    let a = runner.run(&smp, (C::default(), C::default()), key, false).unwrap();
    let b = runner.run(&smp, (C::default(), C::default()), key, false).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seeded_thermal_runs_reproduce() {
    let p = SystemParams {
        n_th_mech: 2.0,
        ..SystemParams::reference()
    };
    let s = ProtocolSchedule::for_params(&p, 100.0, 0.1).unwrap();
    let runner = ProtocolRunner::new(&p, &s, StorageMode::Exact).unwrap();
    let smp = coherent(c(1.0, 0.0));
    let run = |seed| runner.run(&smp, (C::default(), C::default()), Some(StreamKey::new(seed, 0)), false).unwrap();
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

#[test]
fn output_is_linear_in_inputs() {
    let p = SystemParams::reference();
    let s = ProtocolSchedule::for_params(&p, 20.0, 0.1).unwrap();
    let runner = ProtocolRunner::new(&p, &s, StorageMode::Exact).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut rc = || c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    for _ in 0..10 {
        let (x, y, bx, by, k1, k2) = (rc(), rc(), rc(), rc(), rc(), rc());
        let sample = |a: C, ap: C| WeightedSample {
            alpha_in: a,
            alpha_in_plus: ap,
            weight: 1.0,
            branch: Branch::PlusMinus,
        };
        let out = |a: C, ap: C, b: C, bp: C| runner.run(&sample(a, ap), (b, bp), None, false).unwrap().result;
        let r1 = out(x, y, bx, by);
        let r2 = out(y, x, by, bx);
        let rs = out(k1 * x + k2 * y, k1 * y + k2 * x, k1 * bx + k2 * by, k1 * by + k2 * bx);
        let lin = r1.alpha_out * k1 + r2.alpha_out * k2;
        let lin_p = r1.alpha_out_plus * k1 + r2.alpha_out_plus * k2;
        assert!((rs.alpha_out - lin).norm() <= 1e-8 * lin.norm().max(1.0));
        assert!((rs.alpha_out_plus - lin_p).norm() <= 1e-8 * lin_p.norm().max(1.0));
    }
}

#[test]
fn stored_amplitude_decays_at_mechanical_rate() {
    let p = SystemParams::reference();
    let gm = p.gamma_m;
    let out = |ts: f64| {
        let s = ProtocolSchedule::for_params(&p, ts, 0.1).unwrap();
        ProtocolRunner::new(&p, &s, StorageMode::Exact)
            .unwrap()
            .coherent_gain()
            .unwrap()
            .norm()
    };
    let g0 = out(0.0);
    for x in [0.02, 0.3466] {
        let ratio = out(x / gm) / g0;
        let expect = (-x).exp();
        assert!((ratio / expect - 1.0).abs() < 0.005, "{x}: {ratio} vs {expect}");
    }
}

#[test]
fn write_stage_stores_transfer_amplitude() {
    let p = SystemParams {
        gamma_ext: 0.95,
        gamma_int: 0.05,
        gamma_m: 1.03e-4,
        ..SystemParams::reference()
    };
    let s = ProtocolSchedule::for_params(&p, 0.0, 0.1).unwrap();
    let runner = ProtocolRunner::new(&p, &s, StorageMode::Exact).unwrap();
    let d = runner.run(&coherent(c(1.0, 0.0)), (C::default(), C::default()), None, false).unwrap();
    let stored = d.stored.beta.norm();
    let expect = catmem::mode::transfer_amplitude(&p).unwrap();
    assert!((stored - expect).abs() < 1e-4, "{stored} vs {expect}");
}
