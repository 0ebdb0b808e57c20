//! Spectral and physical vector fields, the Leray projector, spectral
//! derivatives, dealiasing and the Sobolev norms used by the energy audits.
//!
//! Forward transforms carry the `1/n³` factor, so the coefficient of mode
//! `k` is `(1/n³) Σ_x f(x) e^{-ik·x}` and `f(x) = Σ_k f̂(k) e^{ik·x}`.
//! All norms include the `(2π)³` volume of the box.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::lattice::Lattice;
use crate::scalar::Real;

/// Real samples of a scalar (1 component) or vector (3 components) field.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField<T> {
    lattice: Lattice,
    components: Vec<Vec<T>>,
}

impl<T: Real> PhysicalField<T> {
    pub fn new(lattice: Lattice, components: Vec<Vec<T>>) -> Result<Self> {
        if components.len() != 1 && components.len() != 3 {
            return Err(Error::param(
                "components",
                "physical fields carry 1 or 3 components",
            ));
        }
        if components.iter().any(|c| c.len() != lattice.len()) {
            return Err(Error::param("components", "component length must be n³"));
        }
        if components.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "physical field",
            });
        }
        Ok(PhysicalField {
            lattice,
            components,
        })
    }

    /// Samples a closure `f(x1, x2, x3) -> [T; 3]` on the grid.
    pub fn from_fn_vector<F>(lattice: Lattice, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> [f64; 3],
    {
        let n = lattice.n();
        let mut comps: Vec<Vec<T>> = (0..3).map(|_| Vec::with_capacity(lattice.len())).collect();
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    let v = f(
                        lattice.coordinate(i0),
                        lattice.coordinate(i1),
                        lattice.coordinate(i2),
                    );
                    for (c, x) in comps.iter_mut().zip(v) {
                        c.push(T::lit(x));
                    }
                }
            }
        }
        Self::new(lattice, comps)
    }

    pub fn from_fn_scalar<F>(lattice: Lattice, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> f64,
    {
        let n = lattice.n();
        let mut c = Vec::with_capacity(lattice.len());
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    c.push(T::lit(f(
                        lattice.coordinate(i0),
                        lattice.coordinate(i1),
                        lattice.coordinate(i2),
                    )));
                }
            }
        }
        Self::new(lattice, vec![c])
    }

    #[inline]
    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    #[inline]
    pub fn components(&self) -> &[Vec<T>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[T] {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<Vec<T>> {
        self.components
    }

    /// Pointwise Euclidean length of a vector field, maximized over the grid.
    pub fn max_magnitude(&self) -> T {
        match self.components.len() {
            3 => (0..self.lattice.len())
                .map(|p| {
                    crate::scalar::norm3(
                        self.components[0][p],
                        self.components[1][p],
                        self.components[2][p],
                    )
                })
                .fold(T::zero(), T::max),
            _ => self.components[0]
                .iter()
                .fold(T::zero(), |m, v| m.max(v.abs())),
        }
    }

    /// Grid quadrature of `∫|f|²`, exact for band-limited fields.
    pub fn l2_sq(&self) -> T {
        let w = T::volume() / T::lit(self.lattice.len() as f64);
        self.components
            .iter()
            .map(|c| c.iter().map(|&v| v * v).sum::<T>())
            .sum::<T>()
            * w
    }

    /// Forward transform of a 3-component field.
    pub fn to_spectral(&self) -> Result<SpectralField<T>> {
        if self.components.len() != 3 {
            return Err(Error::param(
                "components",
                "vector transform needs 3 components",
            ));
        }
        let fft = Fft3::new(self.lattice.n());
        let mut tmp = Vec::new();
        let comps = [0, 1, 2].map(|i| forward_real(&fft, &mut tmp, &self.components[i]));
        Ok(SpectralField::from_components(self.lattice, comps))
    }

    /// Forward transform of a 1-component field.
    pub fn to_spectral_scalar(&self) -> Result<SpectralScalar<T>> {
        if self.components.len() != 1 {
            return Err(Error::param(
                "components",
                "scalar transform needs 1 component",
            ));
        }
        let fft = Fft3::new(self.lattice.n());
        let mut tmp = Vec::new();
        Ok(SpectralScalar {
            lattice: self.lattice,
            coeffs: forward_real(&fft, &mut tmp, &self.components[0]),
        })
    }
}

fn forward_real<T: Real>(
    fft: &Fft3<T>,
    tmp: &mut Vec<Complex<T>>,
    samples: &[T],
) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = samples
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .collect();
    fft.forward(&mut buf, tmp, None);
    let scale = T::one() / T::lit(samples.len() as f64);
    for z in &mut buf {
        *z *= scale;
    }
    buf
}

/// Inverse-transforms two Hermitian spectra with one complex FFT: the real
/// part of the result is `a(x)`, the imaginary part `b(x)`.
fn inverse_pair<T: Real>(
    fft: &Fft3<T>,
    tmp: &mut Vec<Complex<T>>,
    a: &[Complex<T>],
    b: Option<&[Complex<T>]>,
) -> (Vec<T>, Vec<T>) {
    let i = Complex::new(T::zero(), T::one());
    let mut buf: Vec<Complex<T>> = match b {
        Some(b) => a.iter().zip(b).map(|(&x, &y)| x + i * y).collect(),
        None => a.to_vec(),
    };
    fft.inverse(&mut buf, tmp, None);
    buf.into_iter().map(|z| (z.re, z.im)).unzip()
}

/// Vector field as Fourier coefficients on a lattice.
#[derive(Clone, Debug)]
pub struct SpectralField<T> {
    lattice: Lattice,
    components: [Vec<Complex<T>>; 3],
    projected: bool,
}

/// Equality of coefficients; the cached projection flag is ignored.
impl<T: PartialEq> PartialEq for SpectralField<T> {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice && self.components == other.components
    }
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(lattice: Lattice) -> Self {
        let z = vec![Complex::zero(); lattice.len()];
        SpectralField {
            lattice,
            components: [z.clone(), z.clone(), z],
            projected: true,
        }
    }

    /// Wraps raw coefficients. The projected flag starts cleared.
    pub fn from_components(lattice: Lattice, components: [Vec<Complex<T>>; 3]) -> Self {
        assert!(components.iter().all(|c| c.len() == lattice.len()));
        SpectralField {
            lattice,
            components,
            projected: false,
        }
    }

    /// Field with a single Hermitian pair of modes: `amp·e^{ik·x} + conj(amp)·e^{-ik·x}`.
    pub fn single_mode(lattice: Lattice, k: [i64; 3], amp: [Complex<T>; 3]) -> Result<Self> {
        let mut f = Self::zeros(lattice);
        f.projected = false;
        let idx = lattice
            .index_of(k)
            .ok_or_else(|| Error::param("k", format!("{k:?} not on the lattice")))?;
        let neg = lattice.neg_index(idx);
        for (c, a) in f.components.iter_mut().zip(amp) {
            if neg == idx {
                c[idx] = Complex::new(a.re, T::zero());
            } else {
                c[idx] = a;
                c[neg] = a.conj();
            }
        }
        Ok(f)
    }

    #[inline]
    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    #[inline]
    pub fn components(&self) -> &[Vec<Complex<T>>; 3] {
        &self.components
    }

    #[inline]
    pub fn components_mut(&mut self) -> &mut [Vec<Complex<T>>; 3] {
        self.projected = false;
        &mut self.components
    }

    pub fn into_components(self) -> [Vec<Complex<T>>; 3] {
        self.components
    }

    #[inline]
    pub fn is_projected(&self) -> bool {
        self.projected
    }

    /// Marks the field as divergence-free after checking the invariant.
    pub fn mark_projected(&mut self) -> bool {
        self.projected = self.divergence_defect() <= T::lit(1e-12);
        self.projected
    }

    #[inline]
    pub fn coeff(&self, component: usize, k: [i64; 3]) -> Option<Complex<T>> {
        self.lattice
            .index_of(k)
            .map(|i| self.components[component][i])
    }

    pub fn to_physical(&self) -> PhysicalField<T> {
        let fft = Fft3::new(self.lattice.n());
        let mut tmp = Vec::new();
        let (u0, u1) = inverse_pair(
            &fft,
            &mut tmp,
            &self.components[0],
            Some(&self.components[1]),
        );
        let (u2, _) = inverse_pair(&fft, &mut tmp, &self.components[2], None);
        PhysicalField {
            lattice: self.lattice,
            components: vec![u0, u1, u2],
        }
    }

    /// Largest coefficient modulus over all components.
    pub fn max_abs(&self) -> T {
        self.components
            .iter()
            .flatten()
            .fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `max_k |c(-k) - conj c(k)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> T {
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for c in &self.components {
            for idx in 0..self.lattice.len() {
                let neg = self.lattice.neg_index(idx);
                worst = worst.max((c[neg] - c[idx].conj()).norm());
            }
        }
        worst / scale
    }

    /// `max_k |k·û(k)|/|k|` relative to the largest coefficient.
    pub fn divergence_defect(&self) -> T {
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for idx in 1..self.lattice.len() {
            let k = self.lattice.wavevector(idx).map(|v| T::lit(v as f64));
            let kmag = crate::scalar::norm3(k[0], k[1], k[2]);
            let dot = self.components[0][idx] * k[0]
                + self.components[1][idx] * k[1]
                + self.components[2][idx] * k[2];
            worst = worst.max(dot.norm() / kmag);
        }
        worst / scale
    }

    /// Discrete Leray projection `û ↦ û - k(k·û)/|k|²`; the mean mode is untouched.
    pub fn leray_project(&self) -> Self {
        let mut out = self.clone();
        out.project_in_place();
        out
    }

    pub fn project_in_place(&mut self) {
        let lat = self.lattice;
        let [c0, c1, c2] = &mut self.components;
        for idx in 1..lat.len() {
            let k = lat.wavevector(idx).map(|v| T::lit(v as f64));
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let dot = (c0[idx] * k[0] + c1[idx] * k[1] + c2[idx] * k[2]) / k2;
            c0[idx] -= dot * k[0];
            c1[idx] -= dot * k[1];
            c2[idx] -= dot * k[2];
        }
        self.projected = true;
    }

    /// Zeroes every coefficient with some `|k_j|` above the 2/3 cutoff.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let lat = self.lattice;
        for c in &mut self.components {
            for (idx, z) in c.iter_mut().enumerate() {
                if !lat.is_retained(idx) {
                    *z = Complex::zero();
                }
            }
        }
    }

    pub fn is_dealiased(&self) -> bool {
        let lat = self.lattice;
        self.components.iter().all(|c| {
            c.iter()
                .enumerate()
                .all(|(idx, z)| lat.is_retained(idx) || z.is_zero())
        })
    }

    /// Largest `|k_j|` carrying a nonzero coefficient.
    pub fn band(&self) -> usize {
        let lat = self.lattice;
        let mut band = 0;
        for c in &self.components {
            for (idx, z) in c.iter().enumerate() {
                if !z.is_zero() {
                    let k = lat.wavevector(idx);
                    band = band.max(
                        k.iter()
                            .map(|v| v.unsigned_abs() as usize)
                            .max()
                            .unwrap_or(0),
                    );
                }
            }
        }
        band
    }

    /// Spectral gradient `∂_j u_i`, i.e. `ik_j û_i(k)` per mode.
    pub fn gradient(&self) -> SpectralTensor<T> {
        let lat = self.lattice;
        let entries = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                self.components[i]
                    .iter()
                    .enumerate()
                    .map(|(idx, &z)| derivative(z, lat.wavevector(idx)[j], lat))
                    .collect()
            })
        });
        SpectralTensor {
            lattice: lat,
            entries,
        }
    }

    /// `Σ_k w(k) |û(k)|²` over every component, times `(2π)³`.
    fn weighted_sq<F: Fn(i64) -> T>(&self, weight: F) -> T {
        let lat = self.lattice;
        let mut total = T::zero();
        for idx in 0..lat.len() {
            let w = weight(lat.k_squared(idx));
            if w == T::zero() {
                continue;
            }
            let m: T = self.components.iter().map(|c| c[idx].norm_sqr()).sum();
            total += w * m;
        }
        total * T::volume()
    }

    pub fn l2_sq(&self) -> T {
        self.weighted_sq(|_| T::one())
    }

    pub fn h1_semi_sq(&self) -> T {
        self.weighted_sq(|k2| T::lit(k2 as f64))
    }

    pub fn h2_sq(&self) -> T {
        self.weighted_sq(|k2| {
            let s = T::lit(1.0 + k2 as f64);
            s * s
        })
    }

    /// Discrete `V'` norm squared: `(2π)³ Σ_{k≠0} |Pû(k)|²/|k|²`.
    pub fn v_dual_sq(&self) -> T {
        let p = if self.projected {
            None
        } else {
            Some(self.leray_project())
        };
        let f = p.as_ref().unwrap_or(self);
        f.weighted_sq(|k2| {
            if k2 == 0 {
                T::zero()
            } else {
                T::one() / T::lit(k2 as f64)
            }
        })
    }

    pub fn norms(&self) -> NormSet<T> {
        let l2_sq = self.l2_sq();
        let h1_semi_sq = self.h1_semi_sq();
        NormSet {
            l2: l2_sq.sqrt(),
            h1_semi: h1_semi_sq.sqrt(),
            h1: (l2_sq + h1_semi_sq).sqrt(),
            h2: self.h2_sq().sqrt(),
            v_dual: self.v_dual_sq().sqrt(),
        }
    }

    /// `L²` inner product `(u, w) = (2π)³ Σ_k Re(û·conj ŵ)`.
    pub fn inner(&self, other: &Self) -> T {
        let mut total = T::zero();
        for (a, b) in self.components.iter().zip(&other.components) {
            for (x, y) in a.iter().zip(b) {
                total += x.re * y.re + x.im * y.im;
            }
        }
        total * T::volume()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(&other.components) {
            for (x, y) in a.iter_mut().zip(b) {
                *x -= *y;
            }
        }
        out.projected = self.projected && other.projected;
        out
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(&other.components) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y * s;
            }
        }
        out.projected = self.projected && other.projected;
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        for c in &mut out.components {
            for z in c {
                *z *= s;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.components
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Coefficients of this field at the wavenumbers of `target` that this
    /// lattice can represent (zero elsewhere). Used to compare resolutions.
    pub fn resample(&self, target: Lattice) -> Self {
        let mut out = Self::zeros(target);
        out.projected = self.projected;
        let src = self.lattice;
        let lim = (src.n().min(target.n()) / 2) as i64;
        for idx in 0..target.len() {
            let k = target.wavevector(idx);
            if k.iter().any(|v| v.abs() >= lim) {
                continue;
            }
            if let Some(s) = src.index_of(k) {
                for c in 0..3 {
                    out.components[c][idx] = self.components[c][s];
                }
            }
        }
        out
    }

    /// Converts the scalar type (f32 ↔ f64).
    pub fn cast<U: Real>(&self) -> SpectralField<U> {
        let comps = self.components.clone().map(|c| {
            c.into_iter()
                .map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect()
        });
        SpectralField {
            lattice: self.lattice,
            components: comps,
            projected: self.projected,
        }
    }
}

#[inline]
pub(crate) fn derivative<T: Real>(z: Complex<T>, k: i64, lat: Lattice) -> Complex<T> {
    // the Nyquist wavenumber has no odd partner; its derivative is dropped
    if k == -((lat.n() / 2) as i64) {
        return Complex::zero();
    }
    Complex::new(-z.im, z.re) * T::lit(k as f64)
}

/// `∂_j u_i` in spectral space; `entries[i][j]`.
#[derive(Clone, Debug)]
pub struct SpectralTensor<T> {
    lattice: Lattice,
    entries: [[Vec<Complex<T>>; 3]; 3],
}

impl<T: Real> SpectralTensor<T> {
    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn entry(&self, i: usize, j: usize) -> &[Complex<T>] {
        &self.entries[i][j]
    }

    /// `Σ_ij ‖∂_j u_i‖²`, equal to the field's `h1_semi_sq`.
    pub fn frobenius_sq(&self) -> T {
        self.entries
            .iter()
            .flatten()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<T>()
            * T::volume()
    }

    /// Physical samples of `∂_j u_i`, `out[i][j]`.
    pub fn to_physical(&self) -> [[Vec<T>; 3]; 3] {
        let fft = Fft3::new(self.lattice.n());
        let mut tmp = Vec::new();
        std::array::from_fn(|i| {
            std::array::from_fn(|j| inverse_pair(&fft, &mut tmp, &self.entries[i][j], None).0)
        })
    }
}

/// Scalar field in spectral space (pressure).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalar<T> {
    pub(crate) lattice: Lattice,
    pub(crate) coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralScalar<T> {
    pub fn new(lattice: Lattice, coeffs: Vec<Complex<T>>) -> Self {
        assert_eq!(coeffs.len(), lattice.len());
        SpectralScalar { lattice, coeffs }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: [i64; 3]) -> Option<Complex<T>> {
        self.lattice.index_of(k).map(|i| self.coeffs[i])
    }

    pub fn to_physical(&self) -> PhysicalField<T> {
        let fft = Fft3::new(self.lattice.n());
        let mut tmp = Vec::new();
        let (p, _) = inverse_pair(&fft, &mut tmp, &self.coeffs, None);
        PhysicalField {
            lattice: self.lattice,
            components: vec![p],
        }
    }

    /// `∇p` as a (non-projected) spectral vector field.
    pub fn gradient(&self) -> SpectralField<T> {
        let lat = self.lattice;
        let comps = std::array::from_fn(|j| {
            self.coeffs
                .iter()
                .enumerate()
                .map(|(idx, &z)| derivative(z, lat.wavevector(idx)[j], lat))
                .collect()
        });
        SpectralField::from_components(lat, comps)
    }
}

/// Norms of a vector field. `h1² = l2² + h1_semi²` holds by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSet<T> {
    pub l2: T,
    pub h1_semi: T,
    pub h1: T,
    pub h2: T,
    pub v_dual: T,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn lat(n: usize) -> Lattice {
        Lattice::new(n).unwrap()
    }

    fn vol() -> f64 {
        TAU * TAU * TAU
    }

    #[test]
    fn sine_has_two_modes() {
        for n in [8, 16] {
            let f = PhysicalField::<f64>::from_fn_vector(lat(n), |x, _, _| [x.sin(), 0.0, 0.0])
                .unwrap();
            let s = f.to_spectral().unwrap();
            let plus = s.coeff(0, [1, 0, 0]).unwrap();
            let minus = s.coeff(0, [-1, 0, 0]).unwrap();
            assert!((plus - Complex::new(0.0, -0.5)).norm() < 1e-15);
            assert!((minus - Complex::new(0.0, 0.5)).norm() < 1e-15);
            let others = s.components()[0]
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    ![lat(n).index_of([1, 0, 0]), lat(n).index_of([-1, 0, 0])].contains(&Some(*i))
                })
                .map(|(_, z)| z.norm())
                .fold(0.0, f64::max);
            assert!(others < 1e-15);
        }
    }

    #[test]
    fn constant_is_mean_mode() {
        let f = PhysicalField::<f64>::from_fn_scalar(lat(8), |_, _, _| 1.0).unwrap();
        let s = f.to_spectral_scalar().unwrap();
        assert!((s.coeffs()[0] - Complex::new(1.0, 0.0)).norm() < 1e-15);
        assert!(s.coeffs()[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn rejects_non_finite() {
        let mut c = vec![0.0f64; 512];
        c[3] = f64::NAN;
        assert!(matches!(
            PhysicalField::new(lat(8), vec![c]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn gradient_of_sine() {
        let u = PhysicalField::<f64>::from_fn_vector(lat(16), |x, _, _| [x.sin(), 0.0, 0.0])
            .unwrap()
            .to_spectral()
            .unwrap();
        let g = u.gradient().to_physical();
        let l = lat(16);
        for (p, v) in g[0][0].iter().enumerate() {
            let (i0, _, _) = l.unflat(p);
            assert!((v - l.coordinate(i0).cos()).abs() < 1e-13);
        }
        for (i, row) in g.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if (i, j) != (0, 0) {
                    assert!(e.iter().all(|v| v.abs() < 1e-14));
                }
            }
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let u = PhysicalField::<f64>::from_fn_vector(lat(8), |_, _, _| [1.0, -2.0, 3.0])
            .unwrap()
            .to_spectral()
            .unwrap();
        assert_eq!(u.gradient().frobenius_sq(), 0.0);
    }

    #[test]
    fn shear_h1_semi() {
        let u = PhysicalField::<f64>::from_fn_vector(lat(16), |_, y, _| [y.sin(), 0.0, 0.0])
            .unwrap()
            .to_spectral()
            .unwrap();
        // ∫cos² over the box
        let want = vol() / 2.0;
        assert!((u.h1_semi_sq() - want).abs() < 1e-12 * want);
        assert!((u.gradient().frobenius_sq() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn sine_l2_and_zero_norms() {
        let u = PhysicalField::<f64>::from_fn_vector(lat(8), |x, _, _| [x.sin(), 0.0, 0.0])
            .unwrap()
            .to_spectral()
            .unwrap();
        assert!((u.l2_sq() - vol() / 2.0).abs() < 1e-12 * vol());
        let z = SpectralField::<f64>::zeros(lat(8)).norms();
        assert_eq!(
            z,
            NormSet {
                l2: 0.0,
                h1_semi: 0.0,
                h1: 0.0,
                h2: 0.0,
                v_dual: 0.0
            }
        );
    }

    #[test]
    fn v_dual_of_k2_mode() {
        // |k| = 2 and amplitude ⊥ k
        let u = SpectralField::<f64>::single_mode(
            lat(8),
            [2, 0, 0],
            [Complex::zero(), Complex::new(0.3, -0.4), Complex::zero()],
        )
        .unwrap()
        .leray_project();
        let ns = u.norms();
        assert!((ns.v_dual - ns.l2 / 2.0).abs() < 1e-14 * ns.l2);
    }

    #[test]
    fn leray_kills_gradients_and_keeps_solenoidal() {
        let l = lat(8);
        let k = [1i64, 2, -1];
        let grad = SpectralField::<f64>::single_mode(l, k, k.map(|v| Complex::new(v as f64, 0.0)))
            .unwrap();
        let p = grad.leray_project();
        assert!(p.max_abs() < 1e-15);

        let sol = SpectralField::<f64>::single_mode(
            l,
            k,
            [
                Complex::new(2.0, 1.0),
                Complex::new(-1.0, 0.0),
                Complex::new(0.0, 1.0),
            ],
        )
        .unwrap();
        let p = sol.leray_project();
        assert!(p.sub(&sol).max_abs() < 1e-14);

        let mean =
            SpectralField::<f64>::single_mode(l, [0, 0, 0], [Complex::new(1.0, 0.0); 3]).unwrap();
        assert_eq!(mean.leray_project().components(), mean.components());
    }

    #[test]
    fn dealias_examples() {
        let l = lat(8);
        let a = [Complex::new(1.0, 0.0); 3];
        let hi = SpectralField::<f64>::single_mode(l, [3, 0, 0], a).unwrap();
        assert_eq!(hi.dealias().max_abs(), 0.0);
        let keep = SpectralField::<f64>::single_mode(l, [2, 2, 2], a).unwrap();
        assert_eq!(keep.dealias(), keep);
        let once = hi.axpy(1.0, &keep).dealias();
        assert_eq!(once.dealias(), once);
    }

    #[test]
    fn resample_round_trip_on_shared_modes() {
        let u = SpectralField::<f64>::single_mode(lat(16), [3, -2, 1], [Complex::new(0.1, 0.2); 3])
            .unwrap();
        let up = u.resample(lat(32));
        assert_eq!(up.resample(lat(16)), u);
        assert_eq!(up.l2_sq(), u.l2_sq());
    }
}
