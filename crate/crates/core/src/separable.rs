//! Sums of separable kernels `S(x, y) = sum_i F_i(x) G_i(y)` evaluated as real
//! matrix products, in sample chunks with a fixed reduction order.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;

const CHUNK: usize = 2048;
/// Chunks evaluated concurrently before their partial sums are folded.
const BATCH: usize = 8;

pub(crate) struct SeparableSum {
    pub re: Array2<f64>,
    pub im: Option<Array2<f64>>,
}

/// Fill `f` (len `nx`) and `g` (len `ny`) with the factors of sample `i`.
pub(crate) trait Factors: Sync {
    fn fill(&self, i: usize, f: &mut [Complex64], g: &mut [Complex64]);
}

impl<T: Fn(usize, &mut [Complex64], &mut [Complex64]) + Sync> Factors for T {
    fn fill(&self, i: usize, f: &mut [Complex64], g: &mut [Complex64]) {
        self(i, f, g)
    }
}

struct Chunk {
    /// `[Re F | Im F]`, `nx x 2c`
    f: Array2<f64>,
    /// `[Re G ; Im G]`, `2c x ny`
    g: Array2<f64>,
    c: usize,
}

fn build_chunk(lo: usize, hi: usize, nx: usize, ny: usize, factors: &impl Factors) -> Chunk {
    let c = hi - lo;
    let mut f = Array2::<f64>::zeros((nx, 2 * c));
    let mut g = Array2::<f64>::zeros((2 * c, ny));
    let mut fb = vec![Complex64::new(0.0, 0.0); nx];
    let mut gb = vec![Complex64::new(0.0, 0.0); ny];
    for (k, i) in (lo..hi).enumerate() {
        factors.fill(i, &mut fb, &mut gb);
        for (x, v) in fb.iter().enumerate() {
            f[[x, k]] = v.re;
            f[[x, c + k]] = v.im;
        }
        for (y, v) in gb.iter().enumerate() {
            g[[k, y]] = v.re;
            g[[c + k, y]] = v.im;
        }
    }
    Chunk { f, g, c }
}

fn chunk_sum(ch: &Chunk, want_imag: bool) -> (Array2<f64>, Option<Array2<f64>>) {
    let c = ch.c;
    let (fr, fi) = (ch.f.slice(s![.., ..c]), ch.f.slice(s![.., c..]));
    let (gr, gi) = (ch.g.slice(s![..c, ..]), ch.g.slice(s![c.., ..]));
    let shape = (ch.f.nrows(), ch.g.ncols());
    let mut re = Array2::<f64>::zeros(shape);
    general_mat_mul(1.0, &fr, &gr, 0.0, &mut re);
    general_mat_mul(-1.0, &fi, &gi, 1.0, &mut re);
    let im = want_imag.then(|| {
        let mut im = Array2::<f64>::zeros(shape);
        general_mat_mul(1.0, &fr, &gi, 0.0, &mut im);
        general_mat_mul(1.0, &fi, &gr, 1.0, &mut im);
        im
    });
    (re, im)
}

fn chunk_bounds(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(CHUNK))
        .map(|k| (k * CHUNK, ((k + 1) * CHUNK).min(n)))
        .collect()
}

pub(crate) fn separable_sum(
    n: usize,
    nx: usize,
    ny: usize,
    factors: &impl Factors,
    want_imag: bool,
) -> SeparableSum {
    let mut re = Array2::<f64>::zeros((nx, ny));
    let mut im = want_imag.then(|| Array2::<f64>::zeros((nx, ny)));
    for batch in chunk_bounds(n).chunks(BATCH) {
        let parts: Vec<_> = batch
            .par_iter()
            .map(|&(lo, hi)| chunk_sum(&build_chunk(lo, hi, nx, ny, factors), want_imag))
            .collect();
        for (r, i) in parts {
            re += &r;
            if let (Some(acc), Some(i)) = (im.as_mut(), i) {
                *acc += &i;
            }
        }
    }
    SeparableSum { re, im }
}

/// Per-sample projections `I_i = Re sum_{x,y} F_i(x) M(x, y) G_i(y)` for a
/// real mask `M`.
pub(crate) fn masked_projections(
    n: usize,
    mask: ArrayView2<f64>,
    factors: &impl Factors,
) -> Vec<f64> {
    let (nx, ny) = mask.dim();
    let bounds = chunk_bounds(n);
    let mut out = Vec::with_capacity(n);
    for batch in bounds.chunks(BATCH) {
        let parts: Vec<Vec<f64>> = batch
            .par_iter()
            .map(|&(lo, hi)| {
                let ch = build_chunk(lo, hi, nx, ny, factors);
                let c = ch.c;
                // H = M G^T, nx x 2c
                let mut h = Array2::<f64>::zeros((nx, 2 * c));
                general_mat_mul(1.0, &mask, &ch.g.t(), 0.0, &mut h);
                (0..c)
                    .map(|k| {
                        let mut acc = 0.0;
                        for x in 0..nx {
                            acc += ch.f[[x, k]] * h[[x, k]] - ch.f[[x, c + k]] * h[[x, c + k]];
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        for p in parts {
            out.extend(p);
        }
    }
    out
}
