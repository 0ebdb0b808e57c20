//! Cubic 3D complex FFTs built from 1D `rustfft` plans.
//!
//! Axis 2 is contiguous and transformed in place. Axis 1 is handled one
//! `i0`-plane at a time and axis 0 one `i1`-slab at a time: each is
//! transposed into a plane-sized buffer, transformed as contiguous rows and
//! transposed back, so the working set stays in cache. Passes can be pruned
//! to a band of low wavenumbers, which is what the padded nonlinear
//! evaluation needs: inputs live in `|k_j| ≤ band` and only outputs in
//! `|k_j| ≤ band` are kept.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use crate::lattice::signed_wavenumber;
use crate::scalar::Real;

pub struct Fft3<T: Real> {
    m: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch_len: usize,
}

impl<T: Real> Fft3<T> {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Fft3 {
            m,
            forward,
            inverse,
            scratch_len,
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.m * self.m * self.m
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    fn active(&self, band: Option<usize>) -> Vec<bool> {
        let m = self.m;
        (0..m)
            .map(|i| match band {
                None => true,
                Some(b) => signed_wavenumber(i, m).unsigned_abs() as usize <= b,
            })
            .collect()
    }

    /// Unnormalized inverse transform `f(x) = Σ_k F(k) e^{ik·x}`.
    ///
    /// With `support = Some(b)` the input must vanish outside `|k_j| ≤ b`.
    pub fn inverse(
        &self,
        data: &mut [Complex<T>],
        tmp: &mut Vec<Complex<T>>,
        support: Option<usize>,
    ) {
        let act = self.active(support);
        let plan = &*self.inverse;
        let mut scratch = vec![Complex::zero(); self.scratch_len];
        tmp.resize(self.m * self.m, Complex::zero());
        self.axis2(data, &mut scratch, plan, |a, b| act[a] && act[b]);
        self.axis1(data, tmp, &mut scratch, plan, |a| act[a]);
        self.axis0(data, tmp, &mut scratch, plan);
    }

    /// Unnormalized forward transform `F(k) = Σ_x f(x) e^{-ik·x}`.
    ///
    /// With `keep = Some(b)` only outputs with `|k_j| ≤ b` are computed; all
    /// other entries are zeroed.
    pub fn forward(&self, data: &mut [Complex<T>], tmp: &mut Vec<Complex<T>>, keep: Option<usize>) {
        let act = self.active(keep);
        let plan = &*self.forward;
        let mut scratch = vec![Complex::zero(); self.scratch_len];
        tmp.resize(self.m * self.m, Complex::zero());
        self.axis0(data, tmp, &mut scratch, plan);
        self.axis1(data, tmp, &mut scratch, plan, |a| act[a]);
        self.axis2(data, &mut scratch, plan, |a, b| act[a] && act[b]);
        if keep.is_some() {
            let m = self.m;
            for (i0, plane) in data.chunks_exact_mut(m * m).enumerate() {
                if !act[i0] {
                    plane.fill(Complex::zero());
                    continue;
                }
                for (i1, row) in plane.chunks_exact_mut(m).enumerate() {
                    if !act[i1] {
                        row.fill(Complex::zero());
                        continue;
                    }
                    for (z, &a) in row.iter_mut().zip(&act) {
                        if !a {
                            *z = Complex::zero();
                        }
                    }
                }
            }
        }
    }

    /// Contiguous lines `(i0, i1)` selected by `select`.
    fn axis2<F>(
        &self,
        data: &mut [Complex<T>],
        scratch: &mut [Complex<T>],
        plan: &dyn Fft<T>,
        select: F,
    ) where
        F: Fn(usize, usize) -> bool,
    {
        let m = self.m;
        for (i0, plane) in data.chunks_exact_mut(m * m).enumerate() {
            for (i1, line) in plane.chunks_exact_mut(m).enumerate() {
                if select(i0, i1) {
                    plan.process_with_scratch(line, scratch);
                }
            }
        }
    }

    /// Axis 1 within every plane `i0` selected by `select`.
    fn axis1<F>(
        &self,
        data: &mut [Complex<T>],
        tmp: &mut [Complex<T>],
        scratch: &mut [Complex<T>],
        plan: &dyn Fft<T>,
        select: F,
    ) where
        F: Fn(usize) -> bool,
    {
        let m = self.m;
        for (i0, plane) in data.chunks_exact_mut(m * m).enumerate() {
            if select(i0) {
                transpose(plane, tmp, m);
                plan.process_with_scratch(tmp, scratch);
                transpose(tmp, plane, m);
            }
        }
    }

    /// Axis 0 over every slab of fixed `i1`.
    fn axis0(
        &self,
        data: &mut [Complex<T>],
        tmp: &mut [Complex<T>],
        scratch: &mut [Complex<T>],
        plan: &dyn Fft<T>,
    ) {
        let m = self.m;
        let mm = m * m;
        for i1 in 0..m {
            // tmp[i2][i0] = data[i0][i1][i2]
            for i0 in 0..m {
                let row = &data[i0 * mm + i1 * m..i0 * mm + i1 * m + m];
                for (i2, &z) in row.iter().enumerate() {
                    tmp[i2 * m + i0] = z;
                }
            }
            plan.process_with_scratch(tmp, scratch);
            for i0 in 0..m {
                let row = &mut data[i0 * mm + i1 * m..i0 * mm + i1 * m + m];
                for (i2, z) in row.iter_mut().enumerate() {
                    *z = tmp[i2 * m + i0];
                }
            }
        }
    }
}

const TILE: usize = 16;

/// `dst[b][a] = src[a][b]` for an `m×m` block.
fn transpose<T: Copy>(src: &[T], dst: &mut [T], m: usize) {
    for a0 in (0..m).step_by(TILE) {
        for b0 in (0..m).step_by(TILE) {
            for a in a0..(a0 + TILE).min(m) {
                for b in b0..(b0 + TILE).min(m) {
                    dst[b * m + a] = src[a * m + b];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[Complex<f64>], m: usize, sign: f64) -> Vec<Complex<f64>> {
        let mut out = vec![Complex::zero(); m * m * m];
        let w =
            |p: usize| Complex::from_polar(1.0, sign * std::f64::consts::TAU * p as f64 / m as f64);
        for k0 in 0..m {
            for k1 in 0..m {
                for k2 in 0..m {
                    let mut acc = Complex::zero();
                    for x0 in 0..m {
                        for x1 in 0..m {
                            for x2 in 0..m {
                                let p = (k0 * x0 + k1 * x1 + k2 * x2) % m;
                                acc += data[(x0 * m + x1) * m + x2] * w(p);
                            }
                        }
                    }
                    out[(k0 * m + k1) * m + k2] = acc;
                }
            }
        }
        out
    }

    fn sample(m: usize) -> Vec<Complex<f64>> {
        (0..m * m * m)
            .map(|i| {
                Complex::new(
                    ((i * 7919) % 101) as f64 / 50.0 - 1.0,
                    ((i * 104729) % 89) as f64 / 44.0 - 1.0,
                )
            })
            .collect()
    }

    #[test]
    fn transpose_swaps_indices() {
        let m = 20;
        let src: Vec<usize> = (0..m * m).collect();
        let mut dst = vec![0; m * m];
        transpose(&src, &mut dst, m);
        assert_eq!(dst[3 * m + 17], src[17 * m + 3]);
        let mut back = vec![0; m * m];
        transpose(&dst, &mut back, m);
        assert_eq!(back, src);
    }

    #[test]
    fn matches_naive_dft() {
        for m in [4usize, 6] {
            let f = Fft3::<f64>::new(m);
            let input = sample(m);
            let mut tmp = Vec::new();

            let mut fwd = input.clone();
            f.forward(&mut fwd, &mut tmp, None);
            let want = naive_dft(&input, m, -1.0);
            for (a, b) in fwd.iter().zip(&want) {
                assert!((a - b).norm() < 1e-10);
            }

            let mut inv = input.clone();
            f.inverse(&mut inv, &mut tmp, None);
            let want = naive_dft(&input, m, 1.0);
            for (a, b) in inv.iter().zip(&want) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn pruned_inverse_matches_full() {
        let m = 12;
        let band = 3;
        let f = Fft3::<f64>::new(m);
        let mut input = sample(m);
        for (idx, z) in input.iter_mut().enumerate() {
            let ks = [idx / (m * m), (idx / m) % m, idx % m].map(|i| signed_wavenumber(i, m).abs());
            if ks.iter().any(|&k| k > band as i64) {
                *z = Complex::zero();
            }
        }
        let mut tmp = Vec::new();
        let mut full = input.clone();
        f.inverse(&mut full, &mut tmp, None);
        let mut pruned = input;
        f.inverse(&mut pruned, &mut tmp, Some(band));
        for (a, b) in full.iter().zip(&pruned) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn pruned_forward_matches_full_on_band() {
        let m = 12;
        let band = 4;
        let f = Fft3::<f64>::new(m);
        let input = sample(m);
        let mut tmp = Vec::new();
        let mut full = input.clone();
        f.forward(&mut full, &mut tmp, None);
        let mut pruned = input;
        f.forward(&mut pruned, &mut tmp, Some(band));
        for idx in 0..full.len() {
            let ks = [idx / (m * m), (idx / m) % m, idx % m].map(|i| signed_wavenumber(i, m).abs());
            if ks.iter().all(|&k| k <= band as i64) {
                assert!((full[idx] - pruned[idx]).norm() < 1e-10);
            } else {
                assert_eq!(pruned[idx], Complex::zero());
            }
        }
    }
}
