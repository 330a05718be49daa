//! Vector kernels with a fixed reduction order.
//!
//! Dot products sum fixed-size chunks sequentially and then combine the
//! chunk partials in index order, so results are identical for any thread
//! count.

use rayon::prelude::*;

const CHUNK: usize = 8_192;
const PAR_LEN: usize = 32_768;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let partial = |(a, b): (&[f64], &[f64])| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    if x.len() >= PAR_LEN {
        let partials: Vec<f64> = x
            .par_chunks(CHUNK)
            .zip(y.par_chunks(CHUNK))
            .map(partial)
            .collect();
        partials.into_iter().sum()
    } else {
        x.chunks(CHUNK).zip(y.chunks(CHUNK)).map(partial).sum()
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha·x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if y.len() >= PAR_LEN {
        y.par_iter_mut()
            .zip(x.par_iter())
            .for_each(|(yi, xi)| *yi += alpha * xi);
    } else {
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
    }
}

/// `x *= alpha`
pub fn scale(alpha: f64, x: &mut [f64]) {
    if x.len() >= PAR_LEN {
        x.par_iter_mut().for_each(|v| *v *= alpha);
    } else {
        x.iter_mut().for_each(|v| *v *= alpha);
    }
}

/// `y[i] += w[i]·r[i]`
pub fn diag_update(w: &[f64], r: &[f64], y: &mut [f64]) {
    if y.len() >= PAR_LEN {
        y.par_iter_mut()
            .zip(w.par_iter().zip(r.par_iter()))
            .for_each(|(yi, (wi, ri))| *yi += wi * ri);
    } else {
        for ((yi, wi), ri) in y.iter_mut().zip(w).zip(r) {
            *yi += wi * ri;
        }
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}
