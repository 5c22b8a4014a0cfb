//! Reproducible random streams and deterministic parallel reduction.
//!
//! Sample `i` of a run with master seed `s` always draws from ChaCha8 stream
//! `i` of key `s`, whatever the number of worker threads. Samples are
//! reduced in fixed-size chunks whose partial sums are combined in index
//! order, so results are bit-identical across thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per parallel work unit.
pub const CHUNK: usize = 512;

/// Generator for sample `index` of a run keyed by `master`.
pub fn stream_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Running sums for sample means and standard errors of a fixed number of
/// observables.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    n: usize,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl Moments {
    pub fn new(width: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; width],
            sumsq: vec![0.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.sum.len()
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.sum.len(), "observable count");
        self.n += 1;
        for (k, x) in v.iter().enumerate() {
            self.sum[k] += x;
            self.sumsq[k] += x * x;
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        assert_eq!(other.width(), self.width(), "observable count");
        self.n += other.n;
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sumsq[k] += other.sumsq[k];
        }
    }

    pub fn mean(&self, k: usize) -> f64 {
        self.sum[k] / self.n as f64
    }

    /// Standard error of the mean (zero for fewer than two samples).
    pub fn stderr(&self, k: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.sum[k] / n;
        let var = ((self.sumsq[k] - n * m * m) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.width()).map(|k| self.mean(k)).collect()
    }

    pub fn stderrs(&self) -> Vec<f64> {
        (0..self.width()).map(|k| self.stderr(k)).collect()
    }
}

/// Accumulates `sample(rng_i, i, out)` over `i in 0..n` in parallel.
///
/// `sample` writes `width` observables into `out`.
pub fn parallel_moments<F>(master: u64, n: usize, width: usize, sample: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng, usize, &mut [f64]) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Moments::new(width);
            let mut out = vec![0.0; width];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = stream_rng(master, i as u64);
                out.iter_mut().for_each(|v| *v = 0.0);
                sample(&mut rng, i, &mut out);
                acc.push(&out);
            }
            acc
        })
        .collect();
    let mut total = Moments::new(width);
    for p in &partial {
        total.merge(p);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = stream_rng(7, 0).random();
        let b: u64 = stream_rng(7, 1).random();
        let c: u64 = stream_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn moments_of_uniform() {
        let m = parallel_moments(3, 100_000, 2, |rng, _, out| {
            let u: f64 = rng.random();
            out[0] = u;
            out[1] = u * u;
        });
        assert_eq!(m.count(), 100_000);
        assert!((m.mean(0) - 0.5).abs() < 4.0 * m.stderr(0));
        assert!((m.mean(1) - 1.0 / 3.0).abs() < 4.0 * m.stderr(1));
        let se = (1.0f64 / 12.0 / 100_000.0).sqrt();
        assert!((m.stderr(0) - se).abs() < 0.05 * se);
    }

    #[test]
    fn independent_of_thread_count() {
        let run = || {
            parallel_moments(11, 5000, 1, |rng, _, out| {
                out[0] = rng.random::<f64>().ln();
            })
        };
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(run);
        assert_eq!(a, b);
    }
}
