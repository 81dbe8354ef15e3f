use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform collocation grid on the periodic unit box `[0, 1)^dim`.
///
/// Samples are stored row-major with axis 0 slowest; sample `(i0, i1, i2)`
/// sits at `x = (i0, i1, i2) / n`. Spectral coefficients use the same layout
/// and the normalization `f(x) = sum_k fhat(k) exp(2 pi i k.x)`.
pub struct SpectralGrid {
    dim: usize,
    n: usize,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Signed integer wavenumber of every mode; unused axes hold 0.
    modes: Vec<[i64; 3]>,
    /// `2 pi k` with the Nyquist entry zeroed, for odd-order derivatives.
    deriv_k: Vec<[f64; 3]>,
    /// `|2 pi k|^2` including the Nyquist entry.
    k2: Vec<f64>,
    dealias: Vec<bool>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid").field("dim", &self.dim).field("n", &self.n).finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl SpectralGrid {
    /// `dim` must be 2 or 3; `n` a power of two no smaller than 8.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Parameter(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        let len = n.pow(dim as u32);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let signed = |j: usize| -> i64 {
            if j < n / 2 {
                j as i64
            } else {
                j as i64 - n as i64
            }
        };
        let half = (n / 2) as i64;
        let mut modes = Vec::with_capacity(len);
        let mut deriv_k = Vec::with_capacity(len);
        let mut k2 = Vec::with_capacity(len);
        let mut dealias = Vec::with_capacity(len);
        for idx in 0..len {
            let mut k = [0i64; 3];
            let mut rem = idx;
            for axis in (0..dim).rev() {
                k[axis] = signed(rem % n);
                rem /= n;
            }
            let mut dk = [0.0; 3];
            let mut sq = 0.0;
            for axis in 0..dim {
                let w = 2.0 * PI * k[axis] as f64;
                sq += w * w;
                if k[axis].abs() != half {
                    dk[axis] = w;
                }
            }
            modes.push(k);
            deriv_k.push(dk);
            k2.push(sq);
            dealias.push(k[..dim].iter().all(|&kj| 3 * kj.unsigned_abs() as usize <= n));
        }

        Ok(SpectralGrid { dim, n, len, forward, inverse, modes, deriv_k, k2, dealias })
    }

    /// Convenience constructor returning a shareable grid.
    pub fn shared(dim: usize, n: usize) -> Result<Arc<Self>> {
        Self::new(dim, n).map(Arc::new)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of collocation points (and of spectral modes).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Largest retained wavenumber per axis under the two-thirds rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    pub fn mode(&self, idx: usize) -> [i64; 3] {
        self.modes[idx]
    }

    pub fn deriv_wavenumber(&self, idx: usize) -> [f64; 3] {
        self.deriv_k[idx]
    }

    pub fn k_squared(&self, idx: usize) -> f64 {
        self.k2[idx]
    }

    pub fn k_squared_all(&self) -> &[f64] {
        &self.k2
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias
    }

    /// Physical coordinates of sample `idx`; unused axes are 0.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            x[axis] = (rem % self.n) as f64 / self.n as f64;
            rem /= self.n;
        }
        x
    }

    /// Forward transform of one real component, normalized by the number of
    /// points.
    pub fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.len, "sample count does not match grid");
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        let scale = 1.0 / self.len as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Inverse transform; the imaginary part (rounding residue for
    /// Hermitian input) is dropped.
    pub fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.len, "coefficient count does not match grid");
        self.transform(&mut coeffs, &self.inverse);
        coeffs.into_iter().map(|c| c.re).collect()
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // last axis: lines are contiguous
        plan.process_with_scratch(buf, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut lines = vec![Complex64::default(); self.len];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = self.len / (n * stride);
            // gather
            for o in 0..outer {
                for inner in 0..stride {
                    let line = o * stride + inner;
                    let base = o * n * stride + inner;
                    let dst = &mut lines[line * n..(line + 1) * n];
                    for (j, d) in dst.iter_mut().enumerate() {
                        *d = buf[base + j * stride];
                    }
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            // scatter
            for o in 0..outer {
                for inner in 0..stride {
                    let line = o * stride + inner;
                    let base = o * n * stride + inner;
                    let src = &lines[line * n..(line + 1) * n];
                    for (j, s) in src.iter().enumerate() {
                        buf[base + j * stride] = *s;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(SpectralGrid::new(1, 16).is_err());
        assert!(SpectralGrid::new(2, 4).is_err());
        assert!(SpectralGrid::new(2, 24).is_err());
        assert!(SpectralGrid::new(3, 8).is_ok());
    }

    #[test]
    fn dealias_mask_keeps_two_thirds() {
        let g = SpectralGrid::new(2, 32).unwrap();
        for idx in 0..g.len() {
            let k = g.mode(idx);
            let keep = k[0].abs() <= 10 && k[1].abs() <= 10;
            assert_eq!(g.dealias_mask()[idx], keep, "mode {k:?}");
        }
        assert_eq!(g.dealias_cutoff(), 10);
    }

    #[test]
    fn single_mode_coefficients() {
        let g = SpectralGrid::new(2, 16).unwrap();
        let samples: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.coords(i);
                (2.0 * PI * (3.0 * x[0] - 2.0 * x[1])).cos()
            })
            .collect();
        let hat = g.forward(&samples);
        for (idx, c) in hat.iter().enumerate() {
            let k = g.mode(idx);
            let expect = if (k[0], k[1]) == (3, -2) || (k[0], k[1]) == (-3, 2) { 0.5 } else { 0.0 };
            assert!((c.re - expect).abs() < 1e-14 && c.im.abs() < 1e-14, "mode {k:?}: {c}");
        }
        let back = g.inverse(hat);
        for (a, b) in back.iter().zip(&samples) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn three_dimensional_round_trip() {
        let g = SpectralGrid::new(3, 8).unwrap();
        let samples: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.coords(i);
                (2.0 * PI * x[0]).sin() * (4.0 * PI * x[2]).cos() + x[1]
            })
            .collect();
        let back = g.inverse(g.forward(&samples));
        let err = back.iter().zip(&samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }
}
