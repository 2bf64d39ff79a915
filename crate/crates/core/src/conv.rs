//! Multi-dimensional Toeplitz products through zero-padded FFTs.
//!
//! For a kernel `K(z)` defined on differences of points in a box of shape
//! `n`, `apply` computes `(K * ρ)(x) = Σ_y K(x - y) ρ(y)` over the box.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct ToeplitzConvolver {
    shape: Vec<usize>,
    padded: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    kernel_hat: Vec<Complex64>,
}

/// Smallest 2,3,5-smooth integer `>= n`.
pub fn fast_length(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl ToeplitzConvolver {
    /// `kernel(z)` is called for every difference `z` with `|z_i| < n_i`.
    pub fn new(shape: &[usize], kernel: impl Fn(&[i64]) -> f64) -> Self {
        let d = shape.len();
        let padded: Vec<usize> = shape.iter().map(|&n| fast_length(2 * n - 1)).collect();
        let mut planner = FftPlanner::new();
        let forward: Vec<_> = padded.iter().map(|&l| planner.plan_fft_forward(l)).collect();
        let inverse: Vec<_> = padded.iter().map(|&l| planner.plan_fft_inverse(l)).collect();
        let total: usize = padded.iter().product();
        let mut k = vec![Complex64::new(0.0, 0.0); total];
        let mut z = vec![0i64; d];
        let mut counter = vec![0usize; d];
        let spans: Vec<usize> = shape.iter().map(|&n| 2 * n - 1).collect();
        loop {
            let mut flat = 0usize;
            for i in 0..d {
                let n = shape[i] as i64;
                z[i] = counter[i] as i64 - (n - 1);
                let wrapped = z[i].rem_euclid(padded[i] as i64) as usize;
                flat = flat * padded[i] + wrapped;
            }
            k[flat] = Complex64::new(kernel(&z), 0.0);
            if !increment(&mut counter, &spans) {
                break;
            }
        }
        let mut conv = ToeplitzConvolver {
            shape: shape.to_vec(),
            padded,
            forward,
            inverse,
            kernel_hat: Vec::new(),
        };
        conv.transform(&mut k, false);
        conv.kernel_hat = k;
        conv
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// `x` is row-major over the box `shape`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.shape.len();
        let total: usize = self.padded.iter().product();
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        let mut counter = vec![0usize; d];
        let mut src = 0usize;
        loop {
            buf[self.padded_index(&counter)] = Complex64::new(x[src], 0.0);
            src += 1;
            if !increment(&mut counter, &self.shape) {
                break;
            }
        }
        self.transform(&mut buf, false);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.transform(&mut buf, true);
        let scale = 1.0 / total as f64;
        let mut out = Vec::with_capacity(x.len());
        counter.iter_mut().for_each(|c| *c = 0);
        loop {
            out.push(buf[self.padded_index(&counter)].re * scale);
            if !increment(&mut counter, &self.shape) {
                break;
            }
        }
        out
    }

    fn padded_index(&self, c: &[usize]) -> usize {
        c.iter().zip(&self.padded).fold(0, |acc, (&ci, &l)| acc * l + ci)
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let d = self.padded.len();
        for axis in 0..d {
            let len = self.padded[axis];
            let stride: usize = self.padded[axis + 1..].iter().product();
            let outer: usize = self.padded[..axis].iter().product();
            let plan = if inverse { &self.inverse[axis] } else { &self.forward[axis] };
            let mut line = vec![Complex64::new(0.0, 0.0); len];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * len * stride + s;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Odometer increment, last axis fastest; false after the final state.
pub(crate) fn increment(counter: &mut [usize], limits: &[usize]) -> bool {
    for i in (0..counter.len()).rev() {
        counter[i] += 1;
        if counter[i] < limits[i] {
            return true;
        }
        counter[i] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_convolution() {
        let shape = [4usize, 3, 5];
        let kernel = |z: &[i64]| 1.0 / (1.0 + (z[0] * z[0] + 2 * z[1] * z[1] + z[2] * z[2]) as f64) + 0.1 * z[0] as f64;
        let conv = ToeplitzConvolver::new(&shape, kernel);
        let n: usize = shape.iter().product();
        let x: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let y = conv.apply(&x);
        let coords = |i: usize| [(i / 15) as i64, ((i / 5) % 3) as i64, (i % 5) as i64];
        for i in 0..n {
            let a = coords(i);
            let direct: f64 = (0..n)
                .map(|j| {
                    let b = coords(j);
                    kernel(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]) * x[j]
                })
                .sum();
            assert!((direct - y[i]).abs() < 1e-12, "{i}");
        }
        assert_eq!(fast_length(7), 8);
        assert_eq!(fast_length(61), 64);
        assert_eq!(fast_length(31), 32);
        assert_eq!(fast_length(11), 12);
    }
}
