//! Nonlinear kernels of the model: the bounded advecting velocity
//! `v = c·u/√(c²+|u|²)`, the convection term `(w·∇)u`, the forms `A` and
//! `B`, Poisson pressure recovery and the Lipschitz bound on `y ↦ y/√(c²+|y|²)`.
//!
//! Products are formed pointwise on the 3/2-padded grid, then transformed
//! back and truncated to the 2/3 band.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::{derivative, PhysicalField, SpectralField, SpectralScalar};
use crate::lattice::Lattice;
use crate::scalar::{norm3, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConvectionMode {
    Classical,
    QuasiRelativistic,
}

impl ConvectionMode {
    pub const ALL: [ConvectionMode; 2] =
        [ConvectionMode::Classical, ConvectionMode::QuasiRelativistic];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConvectionMode::Classical => "classical",
            ConvectionMode::QuasiRelativistic => "quasi_relativistic",
        }
    }

    pub fn flag(&self) -> u8 {
        match self {
            ConvectionMode::Classical => 0,
            ConvectionMode::QuasiRelativistic => 1,
        }
    }

    pub fn from_flag(flag: u8) -> Option<Self> {
        match flag {
            0 => Some(ConvectionMode::Classical),
            1 => Some(ConvectionMode::QuasiRelativistic),
            _ => None,
        }
    }
}

impl fmt::Display for ConvectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConvectionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "classical" => Ok(ConvectionMode::Classical),
            "quasi_relativistic" => Ok(ConvectionMode::QuasiRelativistic),
            other => Err(format!(
                "unknown mode `{other}`; expected one of {{classical, quasi_relativistic}}"
            )),
        }
    }
}

/// Viscosity `alpha` and light-speed parameter `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub alpha: T,
    pub c: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(alpha: T, c: T) -> Result<Self> {
        if !(alpha.is_finite() && alpha > T::zero()) {
            return Err(Error::param(
                "alpha",
                format!("must be positive and finite, got {alpha}"),
            ));
        }
        if !(c.is_finite() && c > T::zero()) {
            return Err(Error::param(
                "c",
                format!("must be positive and finite, got {c}"),
            ));
        }
        Ok(ModelParams { alpha, c })
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            alpha: U::lit(self.alpha.as_f64()),
            c: U::lit(self.c.as_f64()),
        }
    }
}

/// `c·u/√(c²+|u|²)` for one vector.
///
/// In the common range `|u| < 10⁶c` this is a plain square root. Outside it
/// the result is evaluated as `u·(c/hypot(c,|u|))`, which cannot overflow,
/// and when rounding lands on `|v| ≥ c` (only for `|u|/c ≳ 1e8` in f64) the
/// vector is shrunk by one ulp at a time so the bound stays strict.
#[inline]
pub fn relativistic_map<T: Real>(u: [T; 3], c: T) -> [T; 3] {
    let s2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let c2 = c * c;
    if s2 == T::zero() {
        return u;
    }
    if s2.is_normal() && c2.is_normal() && s2 < c2 * T::lit(1e12) {
        let f = c / (c2 + s2).sqrt();
        return u.map(|x| x * f);
    }
    let s = norm3(u[0], u[1], u[2]);
    if s == T::zero() {
        return u;
    }
    let f = c / c.hypot(s);
    let mut v = u.map(|x| x * f);
    let shrink = T::one() - T::epsilon();
    while norm3(v[0], v[1], v[2]) >= c {
        v = v.map(|x| x * shrink);
    }
    v
}

/// Pointwise relativistic velocity of a physical vector field.
pub fn relativistic_velocity<T: Real>(u: &PhysicalField<T>, c: T) -> Result<PhysicalField<T>> {
    if u.components().len() != 3 {
        return Err(Error::param(
            "u",
            "relativistic velocity needs a vector field",
        ));
    }
    let len = u.lattice().len();
    let mut out: Vec<Vec<T>> = (0..3).map(|_| Vec::with_capacity(len)).collect();
    for p in 0..len {
        let v = relativistic_map([u.component(0)[p], u.component(1)[p], u.component(2)[p]], c);
        for (o, x) in out.iter_mut().zip(v) {
            o.push(x);
        }
    }
    PhysicalField::new(u.lattice(), out)
}

/// Advecting velocity `w` for the given mode at one point.
#[inline]
pub fn advecting<T: Real>(u: [T; 3], c: T, mode: ConvectionMode) -> [T; 3] {
    match mode {
        ConvectionMode::Classical => u,
        ConvectionMode::QuasiRelativistic => relativistic_map(u, c),
    }
}

/// A spectral component fed to the padded grid, optionally differentiated along an axis.
#[derive(Clone, Copy)]
enum Source<'a, T> {
    Plain(&'a [Complex<T>]),
    Deriv(&'a [Complex<T>], usize),
}

/// Padded-grid workspace for pointwise products of spectral fields.
pub struct Pseudospectral<T: Real> {
    lattice: Lattice,
    m: usize,
    fft: Fft3<T>,
    tmp: Vec<Complex<T>>,
    /// padded flat index of each lattice index, `usize::MAX` for Nyquist modes
    to_padded: Vec<usize>,
    /// `(lattice index, padded index, padded index of -k)` of every retained mode
    retained: Vec<(usize, usize, usize)>,
    /// padded-grid buffers kept between calls
    pool: Vec<Vec<Complex<T>>>,
}

/// Physical samples on the padded grid, two real fields per complex buffer.
struct Packed<T> {
    buffers: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Packed<T> {
    #[inline]
    fn get(&self, r: usize, p: usize) -> T {
        let z = self.buffers[r / 2][p];
        if r.is_multiple_of(2) {
            z.re
        } else {
            z.im
        }
    }
}

impl<T: Real> Pseudospectral<T> {
    pub fn new(lattice: Lattice) -> Self {
        let m = lattice.padded_n();
        let half = (lattice.n() / 2) as i64;
        let to_padded: Vec<usize> = (0..lattice.len())
            .map(|idx| {
                let k = lattice.wavevector(idx);
                if k.iter().any(|&v| v == -half) {
                    usize::MAX
                } else {
                    let [a, b, c] = k.map(|v| v.rem_euclid(m as i64) as usize);
                    (a * m + b) * m + c
                }
            })
            .collect();
        let neg = |p: usize| {
            let (p0, p1, p2) = (p / (m * m), (p / m) % m, p % m);
            (((m - p0) % m) * m + (m - p1) % m) * m + (m - p2) % m
        };
        let retained = (0..lattice.len())
            .filter(|&idx| lattice.is_retained(idx))
            .map(|idx| (idx, to_padded[idx], neg(to_padded[idx])))
            .collect();
        Pseudospectral {
            lattice,
            m,
            fft: Fft3::new(m),
            tmp: Vec::new(),
            retained,
            to_padded,
            pool: Vec::new(),
        }
    }

    #[inline]
    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    /// Padded grid size per axis.
    #[inline]
    pub fn padded_n(&self) -> usize {
        self.m
    }

    fn check(&self, f: &SpectralField<T>) -> Result<()> {
        if f.lattice() != self.lattice {
            return Err(Error::LatticeMismatch {
                expected: self.lattice.n(),
                found: f.lattice().n(),
            });
        }
        Ok(())
    }

    fn take(&mut self) -> Vec<Complex<T>> {
        match self.pool.pop() {
            Some(mut b) => {
                b.fill(Complex::zero());
                b
            }
            None => vec![Complex::zero(); self.fft.len()],
        }
    }

    fn give(&mut self, buffers: impl IntoIterator<Item = Vec<Complex<T>>>) {
        self.pool.extend(buffers);
    }

    fn source_value(&self, s: Source<'_, T>, idx: usize) -> Complex<T> {
        match s {
            Source::Plain(c) => c[idx],
            Source::Deriv(c, j) => {
                derivative(c[idx], self.lattice.wavevector(idx)[j], self.lattice)
            }
        }
    }

    /// Inverse-transforms `sources` onto the padded grid.
    fn pad_to_physical(&mut self, sources: &[Source<'_, T>], band: usize) -> Result<Packed<T>> {
        let i = Complex::new(T::zero(), T::one());
        let support = Some(band.min(self.lattice.n() / 2));
        let mut buffers = Vec::with_capacity(sources.len().div_ceil(2));
        // dealiased inputs only touch the retained modes
        let all: Vec<(usize, usize, usize)>;
        let modes = if band <= self.lattice.dealias_cutoff() {
            std::mem::take(&mut self.retained)
        } else {
            all = (0..self.lattice.len())
                .filter(|&idx| self.to_padded[idx] != usize::MAX)
                .map(|idx| (idx, self.to_padded[idx], 0))
                .collect();
            all
        };
        for pair in sources.chunks(2) {
            let mut buf = self.take();
            for &(idx, p, _) in &modes {
                let mut z = self.source_value(pair[0], idx);
                if let Some(&b) = pair.get(1) {
                    z += i * self.source_value(b, idx);
                }
                buf[p] = z;
            }
            self.fft.inverse(&mut buf, &mut self.tmp, support);
            buffers.push(buf);
        }
        if band <= self.lattice.dealias_cutoff() {
            self.retained = modes;
        }
        Ok(Packed { buffers })
    }

    /// Forward-transforms packed real pairs and unpacks the retained modes
    /// onto the lattice. `buffers[b]` holds fields `2b` (re) and `2b+1` (im).
    fn collect_from_padded(
        &mut self,
        buffers: Vec<Vec<Complex<T>>>,
        count: usize,
    ) -> Result<Vec<Vec<Complex<T>>>> {
        let mut buffers = buffers;
        let out = self.unpack(&mut buffers, count);
        self.give(buffers);
        out
    }

    fn unpack(
        &mut self,
        buffers: &mut [Vec<Complex<T>>],
        count: usize,
    ) -> Result<Vec<Vec<Complex<T>>>> {
        let cutoff = self.lattice.dealias_cutoff();
        let scale = T::one() / T::lit(self.fft.len() as f64);
        let half = T::lit(0.5);
        let mut out = Vec::with_capacity(count);
        for (b, buf) in buffers.iter_mut().enumerate() {
            self.fft.forward(buf, &mut self.tmp, Some(cutoff));
            let mut re = vec![Complex::zero(); self.lattice.len()];
            let mut im = vec![Complex::zero(); self.lattice.len()];
            for &(idx, p, q) in &self.retained {
                let z = buf[p] * scale;
                let zc = buf[q].conj() * scale;
                re[idx] = (z + zc) * half;
                // (z - zc)/(2i)
                let d = (z - zc) * half;
                im[idx] = Complex::new(d.im, -d.re);
            }
            let finite = |v: &[Complex<T>]| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
            if !(finite(&re) && finite(&im)) {
                return Err(Error::Overflow {
                    step: "forward transform",
                });
            }
            out.push(re);
            if 2 * b + 1 < count {
                out.push(im);
            }
        }
        Ok(out)
    }

    /// `(w(y)·∇)u` on the padded grid, packed as `[(N0, N1), (N2, 0)]`.
    fn advect_physical(
        &mut self,
        y: &SpectralField<T>,
        u: &SpectralField<T>,
        c: T,
        mode: ConvectionMode,
    ) -> Result<Vec<Vec<Complex<T>>>> {
        self.check(y)?;
        self.check(u)?;
        let band = y.band().max(u.band());
        let [y0, y1, y2] = y.components();
        let uc = u.components();
        let mut sources = vec![
            Source::Plain(&y0[..]),
            Source::Plain(&y1[..]),
            Source::Plain(&y2[..]),
        ];
        for ui in uc {
            for j in 0..3 {
                sources.push(Source::Deriv(&ui[..], j));
            }
        }
        let mut packed = self.pad_to_physical(&sources, band)?;
        let len = self.fft.len();
        for p in 0..len {
            let w = advecting(
                [packed.get(0, p), packed.get(1, p), packed.get(2, p)],
                c,
                mode,
            );
            let mut n = [T::zero(); 3];
            for (i, ni) in n.iter_mut().enumerate() {
                for (j, wj) in w.iter().enumerate() {
                    *ni += *wj * packed.get(3 + 3 * i + j, p);
                }
            }
            if !(n[0].is_finite() && n[1].is_finite() && n[2].is_finite()) {
                self.give(packed.buffers);
                return Err(Error::Overflow {
                    step: "pointwise product",
                });
            }
            // every value at p has been read; reuse the first two buffers
            packed.buffers[0][p] = Complex::new(n[0], n[1]);
            packed.buffers[1][p] = Complex::new(n[2], T::zero());
        }
        let rest = packed.buffers.split_off(2);
        self.give(rest);
        Ok(packed.buffers)
    }

    /// Dealiased, unprojected `(w(y)·∇)u`.
    pub fn advection(
        &mut self,
        y: &SpectralField<T>,
        u: &SpectralField<T>,
        c: T,
        mode: ConvectionMode,
    ) -> Result<SpectralField<T>> {
        let bufs = self.advect_physical(y, u, c, mode)?;
        let comps = self.collect_from_padded(bufs, 3)?;
        let mut it = comps.into_iter();
        let comps = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        Ok(SpectralField::from_components(self.lattice, comps))
    }

    /// Leray-projected, dealiased convection term for the given mode.
    pub fn convection(
        &mut self,
        u: &SpectralField<T>,
        params: &ModelParams<T>,
        mode: ConvectionMode,
    ) -> Result<SpectralField<T>> {
        let mut n = self.advection(u, u, params.c, mode)?;
        n.project_in_place();
        Ok(n)
    }

    /// `∫[(w(y)·∇)u]·w dx` by padded-grid quadrature.
    pub fn trilinear(
        &mut self,
        y: &SpectralField<T>,
        u: &SpectralField<T>,
        w: &SpectralField<T>,
        c: T,
        mode: ConvectionMode,
    ) -> Result<T> {
        self.check(y)?;
        self.check(u)?;
        self.check(w)?;
        let band = y.band().max(u.band()).max(w.band());
        let [y0, y1, y2] = y.components();
        let [w0, w1, w2] = w.components();
        let mut sources = vec![
            Source::Plain(&y0[..]),
            Source::Plain(&y1[..]),
            Source::Plain(&y2[..]),
        ];
        for ui in u.components() {
            for j in 0..3 {
                sources.push(Source::Deriv(&ui[..], j));
            }
        }
        sources.extend([
            Source::Plain(&w0[..]),
            Source::Plain(&w1[..]),
            Source::Plain(&w2[..]),
        ]);
        let packed = self.pad_to_physical(&sources, band)?;
        let mut total = T::zero();
        for p in 0..self.fft.len() {
            let a = advecting(
                [packed.get(0, p), packed.get(1, p), packed.get(2, p)],
                c,
                mode,
            );
            for i in 0..3 {
                let mut ni = T::zero();
                for (j, aj) in a.iter().enumerate() {
                    ni += *aj * packed.get(3 + 3 * i + j, p);
                }
                total += ni * packed.get(12 + i, p);
            }
        }
        self.give(packed.buffers);
        Ok(total * T::volume() / T::lit(self.fft.len() as f64))
    }

    /// Max of `|w(x)|` over the padded grid.
    pub fn max_advecting_speed(
        &mut self,
        u: &SpectralField<T>,
        c: T,
        mode: ConvectionMode,
    ) -> Result<T> {
        self.check(u)?;
        let [u0, u1, u2] = u.components();
        let packed = self.pad_to_physical(
            &[Source::Plain(u0), Source::Plain(u1), Source::Plain(u2)],
            u.band(),
        )?;
        let mut max = T::zero();
        for p in 0..self.fft.len() {
            let w = advecting(
                [packed.get(0, p), packed.get(1, p), packed.get(2, p)],
                c,
                mode,
            );
            max = max.max(norm3(w[0], w[1], w[2]));
        }
        self.give(packed.buffers);
        Ok(max)
    }
}

/// Convection term `P[(w·∇)u]`, dealiased, with `w = u` or `w = v(u)`.
pub fn convection_term<T: Real>(
    u: &SpectralField<T>,
    params: &ModelParams<T>,
    mode: ConvectionMode,
) -> Result<SpectralField<T>> {
    Pseudospectral::new(u.lattice()).convection(u, params, mode)
}

/// `A[u, w] = α Σ_i ∫ ∇u_i·∇w_i`.
pub fn bilinear_a<T: Real>(u: &SpectralField<T>, w: &SpectralField<T>, alpha: T) -> T {
    let lat = u.lattice();
    let mut total = T::zero();
    for (a, b) in u.components().iter().zip(w.components()) {
        for idx in 0..lat.len() {
            let k2 = T::lit(lat.k_squared(idx) as f64);
            total += k2 * (a[idx].re * b[idx].re + a[idx].im * b[idx].im);
        }
    }
    alpha * total * T::volume()
}

/// `B[y, u, w] = ∫[(v(y)·∇)u]·w` with `v(y) = c·y/√(c²+|y|²)`.
pub fn trilinear_b<T: Real>(
    y: &SpectralField<T>,
    u: &SpectralField<T>,
    w: &SpectralField<T>,
    c: T,
) -> Result<T> {
    Pseudospectral::new(y.lattice()).trilinear(y, u, w, c, ConvectionMode::QuasiRelativistic)
}

/// Pressure solving `-Δp = ∇·[(w·∇)u - f]`, mean zero.
pub fn recover_pressure<T: Real>(
    u: &SpectralField<T>,
    f: &SpectralField<T>,
    params: &ModelParams<T>,
    mode: ConvectionMode,
) -> Result<SpectralScalar<T>> {
    let lat = u.lattice();
    let n = Pseudospectral::new(lat).advection(u, u, params.c, mode)?;
    let r = n.sub(f);
    let mut p = vec![Complex::zero(); lat.len()];
    for (idx, out) in p.iter_mut().enumerate().skip(1) {
        let k = lat.wavevector(idx);
        let k2 = T::lit(lat.k_squared(idx) as f64);
        let mut dot: Complex<T> = Complex::zero();
        for (j, kj) in k.iter().enumerate() {
            dot += r.components()[j][idx] * T::lit(*kj as f64);
        }
        // i k·(N - f) / |k|²
        *out = Complex::new(-dot.im, dot.re) / k2;
    }
    Ok(SpectralScalar::new(lat, p))
}

/// Outcome of one Lipschitz comparison for `h(y) = y/√(c²+|y|²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzGap<T> {
    /// `|h(y1) - h(y2)|`
    pub lhs: T,
    /// `(12/c)|y1 - y2|`
    pub rhs_bound: T,
    /// `lhs/|y1 - y2|`, zero when the points coincide
    pub ratio: T,
}

#[inline]
fn unit_map<T: Real>(y: [T; 3], c: T) -> [T; 3] {
    let d = c.hypot(norm3(y[0], y[1], y[2]));
    y.map(|v| v / d)
}

pub fn lipschitz_gap<T: Real>(y1: [T; 3], y2: [T; 3], c: T) -> LipschitzGap<T> {
    let (a, b) = (unit_map(y1, c), unit_map(y2, c));
    let lhs = norm3(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    let dist = norm3(y1[0] - y2[0], y1[1] - y2[1], y1[2] - y2[2]);
    LipschitzGap {
        lhs,
        rhs_bound: T::lit(12.0) / c * dist,
        ratio: if dist == T::zero() {
            T::zero()
        } else {
            lhs / dist
        },
    }
}

/// Same comparison for the velocity map `g = c·h`, whose bound is `12|y1 - y2|`.
pub fn velocity_lipschitz_gap<T: Real>(y1: [T; 3], y2: [T; 3], c: T) -> LipschitzGap<T> {
    let (a, b) = (relativistic_map(y1, c), relativistic_map(y2, c));
    let lhs = norm3(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    let dist = norm3(y1[0] - y2[0], y1[1] - y2[1], y1[2] - y2[2]);
    LipschitzGap {
        lhs,
        rhs_bound: T::lit(12.0) * dist,
        ratio: if dist == T::zero() {
            T::zero()
        } else {
            lhs / dist
        },
    }
}

/// Summary of a random sweep of [`lipschitz_gap`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzSweep {
    pub c: f64,
    pub samples: u64,
    /// pairs with `lhs > rhs_bound`
    pub violations: u64,
    pub max_ratio: f64,
    /// `max c·ratio`; the map is a `1/c` contraction so this stays ≤ 1
    pub max_scaled_ratio: f64,
    /// pairs where the velocity map broke `|g(y1)-g(y2)| ≤ 12|y1-y2|`
    pub velocity_violations: u64,
}

impl LipschitzSweep {
    pub fn passed(&self) -> bool {
        self.violations == 0
            && self.velocity_violations == 0
            && self.max_scaled_ratio <= 1.0 + 1e-12
    }
}

/// Random pairs with magnitudes spread over six decades around `c`, half
/// of them near-coincident.
pub fn lipschitz_sweep(samples: u64, c: f64, seed: u64) -> LipschitzSweep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ c.to_bits());
    let draw = |rng: &mut ChaCha8Rng| -> [f64; 3] {
        let scale = c * 10f64.powf(rng.random_range(-3.0..3.0));
        [0; 3].map(|_| scale * rng.random_range(-1.0..1.0))
    };
    let mut out = LipschitzSweep {
        c,
        samples,
        violations: 0,
        max_ratio: 0.0,
        max_scaled_ratio: 0.0,
        velocity_violations: 0,
    };
    for s in 0..samples {
        let y1 = draw(&mut rng);
        let y2 = if s % 2 == 0 {
            draw(&mut rng)
        } else {
            let eps = c * 10f64.powf(rng.random_range(-6.0..0.0));
            let mut y2 = y1;
            for v in &mut y2 {
                *v += eps * rng.random_range(-1.0..1.0);
            }
            y2
        };
        let g = lipschitz_gap(y1, y2, c);
        if g.lhs > g.rhs_bound {
            out.violations += 1;
        }
        out.max_ratio = out.max_ratio.max(g.ratio);
        out.max_scaled_ratio = out.max_scaled_ratio.max(c * g.ratio);
        let v = velocity_lipschitz_gap(y1, y2, c);
        if v.lhs > v.rhs_bound {
            out.velocity_violations += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{SQRT_2, TAU};

    fn lat(n: usize) -> Lattice {
        Lattice::new(n).unwrap()
    }

    fn taylor_green_2d(n: usize) -> SpectralField<f64> {
        PhysicalField::from_fn_vector(lat(n), |x, y, _| {
            [x.sin() * y.cos(), -x.cos() * y.sin(), 0.0]
        })
        .unwrap()
        .to_spectral()
        .unwrap()
    }

    #[test]
    fn relativistic_examples() {
        assert_eq!(relativistic_map([0.0, 0.0, 0.0], 3.0), [0.0; 3]);
        let v = relativistic_map([3.0, 4.0, 0.0], 5.0);
        assert!((v[0] - 3.0 / SQRT_2).abs() < 1e-15);
        assert!((v[1] - 4.0 / SQRT_2).abs() < 1e-15);
        assert!((norm3(v[0], v[1], v[2]) - 5.0 / SQRT_2).abs() < 1e-14);
        let v = relativistic_map([1e6, 0.0, 0.0], 1.0);
        assert!(v[0] < 1.0 && 1.0 - v[0] < 1e-12);
    }

    #[test]
    fn speed_bound_is_strict_far_above_c() {
        for c in [1e-3f64, 1.0, 7.0, 1e3] {
            for ratio in [1e6, 1e8, 1e12, 1e300 / c.max(1.0)] {
                let u = [ratio * c, 0.3 * ratio * c, -0.1 * ratio * c];
                let v = relativistic_map(u, c);
                assert!(norm3(v[0], v[1], v[2]) < c, "c={c} ratio={ratio}");
                assert!(v.iter().all(|x| x.is_finite()));
                // same orientation
                assert!(v.iter().zip(u).all(|(a, b)| a * b >= 0.0));
            }
        }
    }

    #[test]
    fn constant_field_has_no_convection() {
        let u = PhysicalField::<f64>::from_fn_vector(lat(8), |_, _, _| [1.0, 2.0, -0.5])
            .unwrap()
            .to_spectral()
            .unwrap();
        let p = ModelParams::new(0.1, 1.0).unwrap();
        for mode in ConvectionMode::ALL {
            assert!(convection_term(&u, &p, mode).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn pressure_of_shear_is_zero() {
        let u = PhysicalField::<f64>::from_fn_vector(lat(16), |_, y, _| [y.sin(), 0.0, 0.0])
            .unwrap()
            .to_spectral()
            .unwrap();
        let f = SpectralField::zeros(lat(16));
        let p = recover_pressure(
            &u,
            &f,
            &ModelParams::new(0.1, 1.0).unwrap(),
            ConvectionMode::Classical,
        )
        .unwrap();
        assert!(p.coeffs().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn pressure_of_taylor_green_2d() {
        let u = taylor_green_2d(16);
        let f = SpectralField::zeros(lat(16));
        let p = recover_pressure(
            &u,
            &f,
            &ModelParams::new(0.1, 1.0).unwrap(),
            ConvectionMode::Classical,
        )
        .unwrap()
        .to_physical();
        let l = lat(16);
        for idx in 0..l.len() {
            let (i0, i1, _) = l.unflat(idx);
            let (x, y) = (l.coordinate(i0), l.coordinate(i1));
            let want = ((2.0 * x).cos() + (2.0 * y).cos()) / 4.0;
            assert!((p.component(0)[idx] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn pressure_inverts_gradient_forcing() {
        let l = lat(16);
        let phi = PhysicalField::<f64>::from_fn_scalar(l, |x, y, z| (x + 2.0 * y).sin() * z.cos())
            .unwrap()
            .to_spectral_scalar()
            .unwrap();
        let f = phi.gradient();
        let u = SpectralField::zeros(l);
        let p = recover_pressure(
            &u,
            &f,
            &ModelParams::new(1.0, 1.0).unwrap(),
            ConvectionMode::QuasiRelativistic,
        )
        .unwrap();
        assert!(p.gradient().sub(&f).max_abs() < 1e-14);
    }

    #[test]
    fn pressure_gradient_restores_residual() {
        let l = lat(16);
        let u = PhysicalField::<f64>::from_fn_vector(l, |x, y, z| {
            [
                x.sin() * y.cos() * z.cos(),
                -x.cos() * y.sin() * z.cos(),
                0.0,
            ]
        })
        .unwrap()
        .to_spectral()
        .unwrap()
        .leray_project();
        let f = PhysicalField::<f64>::from_fn_vector(l, |x, y, z| {
            [z.sin(), (x - y).cos(), 0.2 * x.sin()]
        })
        .unwrap()
        .to_spectral()
        .unwrap();
        let params = ModelParams::new(0.1, 0.7).unwrap();
        let mut ps = Pseudospectral::new(l);
        for mode in ConvectionMode::ALL {
            let n = ps.advection(&u, &u, params.c, mode).unwrap();
            let r = n.sub(&f);
            let gp = recover_pressure(&u, &f, &params, mode).unwrap().gradient();
            // ∇p + (N - f) is the solenoidal part of N - f
            let lhs = gp.axpy(1.0, &r);
            let mut rhs = r.leray_project();
            // mean mode is not a gradient
            for c in 0..3 {
                rhs.components_mut()[c][0] = r.components()[c][0];
            }
            assert!(lhs.sub(&rhs).max_abs() < 1e-10 * r.max_abs());
        }
    }

    #[test]
    fn lipschitz_examples() {
        let g = lipschitz_gap([2.0, -1.0, 0.5], [2.0, -1.0, 0.5], 3.0);
        assert_eq!((g.lhs, g.ratio), (0.0, 0.0));
        for c in [1e-3, 1.0, 1e3] {
            let g = lipschitz_gap([c, 0.0, 0.0], [-c, 0.0, 0.0], c);
            assert!((g.lhs - SQRT_2).abs() < 1e-14);
            assert!((g.rhs_bound - 24.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lipschitz_sweep_small() {
        for c in [1e-3, 1.0, 1e3] {
            let s = lipschitz_sweep(20_000, c, 7);
            assert!(s.passed(), "{s:?}");
            assert!(s.max_ratio <= 12.0 / c);
        }
    }

    #[test]
    fn bilinear_a_examples() {
        let l = lat(8);
        let a = 0.37;
        let alpha = 0.2;
        let u = SpectralField::<f64>::single_mode(
            l,
            [0, 1, 0],
            [Complex::new(a, 0.0), Complex::zero(), Complex::zero()],
        )
        .unwrap();
        let val = bilinear_a(&u, &u, alpha);
        assert!((val - alpha * u.h1_semi_sq()).abs() < 1e-14);
        // 2a² from the ± pair
        assert!((val - alpha * TAU.powi(3) * 2.0 * a * a).abs() < 1e-12);
        let w = SpectralField::<f64>::single_mode(
            l,
            [1, 1, 0],
            [Complex::new(a, 0.0), Complex::zero(), Complex::zero()],
        )
        .unwrap();
        assert_eq!(bilinear_a(&u, &w, alpha), 0.0);
    }

    #[test]
    fn trilinear_vanishes_for_constant_u() {
        let l = lat(8);
        let y = taylor_green_2d(8);
        let u = PhysicalField::<f64>::from_fn_vector(l, |_, _, _| [0.3, 0.1, 2.0])
            .unwrap()
            .to_spectral()
            .unwrap();
        assert_eq!(trilinear_b(&y, &u, &y, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn trilinear_vanishes_for_orthogonal_w() {
        // y = (0, 0, sin x1) advects u = (sin x3, 0, 0) giving (v3 cos x3, 0, 0); w ⟂ that pointwise
        let l = lat(16);
        let y = PhysicalField::<f64>::from_fn_vector(l, |x, _, _| [0.0, 0.0, x.sin()])
            .unwrap()
            .to_spectral()
            .unwrap();
        let u = PhysicalField::<f64>::from_fn_vector(l, |_, _, z| [z.sin(), 0.0, 0.0])
            .unwrap()
            .to_spectral()
            .unwrap();
        let w = PhysicalField::<f64>::from_fn_vector(l, |x, y, _| [0.0, (x + y).cos(), x.sin()])
            .unwrap()
            .to_spectral()
            .unwrap();
        assert!(trilinear_b(&y, &u, &w, 0.5).unwrap().abs() < 1e-13);
    }
}
