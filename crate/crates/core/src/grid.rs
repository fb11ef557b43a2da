//! Uniform periodic lattices standing in for `R^n` (n = 1, 2).
//!
//! The domain is the torus `[-L, L)^n` sampled at `M` points per axis with
//! spacing `h = 2L / M`. Lattice indices use FFT order on every axis: index
//! `i < M/2` sits at `x = i h`, index `i >= M/2` at `x = (i - M) h`, so index 0
//! is the origin. Multi-dimensional data is stored row-major (axis 0 slowest).
//!
//! Frequencies follow the same order, `xi = pi * kappa / L` with
//! `kappa` in `[-M/2, M/2)`. The transform pair is normalized as
//!
//! ```text
//! F(kappa) = (h^n / M^n)^{1/2} * sum_x f(x) exp(-i xi . x)
//! ```
//!
//! which makes `sum |f|^2 h^n = sum |F|^2` (Parseval) and sends constants to
//! `kappa = 0`. Fourier multipliers are applied with [`GridFunction::apply_multiplier`],
//! where `m(xi)` multiplies the continuous-transform symbol, so a kernel `K`
//! acts through `h^n * DFT(K)`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::Weight;

pub type Complex = Complex64;

/// Size of the binary header: `n` (u64), `M` (u64), `L` (f64), little endian.
pub const BINARY_HEADER_LEN: usize = 24;

/// Lattice description: dimension, points per axis and half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    half_width: f64,
}

/// Validating constructor, `make_grid(n, M, L)`.
pub fn make_grid(dim: usize, points: usize, half_width: f64) -> Result<GridSpec> {
    GridSpec::new(dim, points, half_width)
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidPoints(points));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidHalfWidth(half_width));
        }
        Ok(Self { dim, points, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Lattice spacing `h = 2L / M`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Number of lattice points, `M^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `(2L)^n`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Fundamental angular frequency `pi / L`.
    pub fn frequency_step(&self) -> f64 {
        PI / self.half_width
    }

    /// Signed lattice coordinate of an axis index.
    pub fn signed(&self, i: usize) -> i64 {
        let m = self.points as i64;
        let i = i as i64;
        if i < m / 2 {
            i
        } else {
            i - m
        }
    }

    /// Axis index of a signed coordinate, wrapped periodically.
    pub fn wrap(&self, s: i64) -> usize {
        s.rem_euclid(self.points as i64) as usize
    }

    /// Per-axis indices of a flat index (unused axes are 0).
    pub fn axis_indices(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.points, idx % self.points],
        }
    }

    /// Signed lattice multi-index of a flat index (unused axes are 0).
    pub fn signed_indices(&self, idx: usize) -> [i64; 2] {
        let [a, b] = self.axis_indices(idx);
        match self.dim {
            1 => [self.signed(a), 0],
            _ => [self.signed(a), self.signed(b)],
        }
    }

    /// Flat index of a signed multi-index, wrapped periodically.
    pub fn flat(&self, signed: [i64; 2]) -> usize {
        match self.dim {
            1 => self.wrap(signed[0]),
            _ => self.wrap(signed[0]) * self.points + self.wrap(signed[1]),
        }
    }

    /// Physical lattice point of a flat index (second entry 0 when n = 1).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let s = self.signed_indices(idx);
        [s[0] as f64 * h, s[1] as f64 * h]
    }

    /// Euclidean distance of the lattice point to the origin.
    pub fn radius(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        p[0].hypot(p[1])
    }

    /// Angular frequency vector at a flat index.
    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        FrequencyIndex::from_flat(self, idx).frequency(self)
    }

    /// `|xi|` at a flat index.
    pub fn frequency_norm(&self, idx: usize) -> f64 {
        let xi = self.frequency(idx);
        xi[0].hypot(xi[1])
    }

    /// Table of `|xi|` over the whole lattice.
    pub fn frequency_norms(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.frequency_norm(i)).collect()
    }

    /// Smallest nonzero and largest `|xi|` on the lattice.
    pub fn frequency_range(&self) -> (f64, f64) {
        let step = self.frequency_step();
        let top = step * (self.points / 2) as f64 * (self.dim as f64).sqrt();
        (step, top)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Integer frequency multi-index `kappa`, one entry per axis in `[-M/2, M/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FrequencyIndex {
    kappa: [i64; 2],
}

impl FrequencyIndex {
    pub fn new(spec: &GridSpec, kappa: &[i64]) -> Result<Self> {
        if kappa.len() != spec.dim() {
            return Err(Error::InvalidParameter(format!(
                "frequency index of length {} on a {}-dimensional grid",
                kappa.len(),
                spec.dim()
            )));
        }
        let half = (spec.points() / 2) as i64;
        let mut k = [0i64; 2];
        for (slot, &value) in k.iter_mut().zip(kappa) {
            if !(-half..half).contains(&value) {
                return Err(Error::InvalidParameter(format!(
                    "frequency index {value} outside [-{half}, {half})"
                )));
            }
            *slot = value;
        }
        Ok(Self { kappa: k })
    }

    pub fn from_flat(spec: &GridSpec, idx: usize) -> Self {
        Self { kappa: spec.signed_indices(idx) }
    }

    pub fn to_flat(&self, spec: &GridSpec) -> usize {
        spec.flat(self.kappa)
    }

    pub fn kappa(&self) -> [i64; 2] {
        self.kappa
    }

    /// Angular frequency `xi = pi * kappa / L`.
    pub fn frequency(&self, spec: &GridSpec) -> [f64; 2] {
        let step = spec.frequency_step();
        [self.kappa[0] as f64 * step, self.kappa[1] as f64 * step]
    }

    /// Inverse of [`FrequencyIndex::frequency`]; the frequency must lie on the lattice.
    pub fn from_frequency(spec: &GridSpec, xi: &[f64]) -> Result<Self> {
        let step = spec.frequency_step();
        let kappa: Vec<i64> = xi.iter().map(|&x| (x / step).round() as i64).collect();
        let out = Self::new(spec, &kappa)?;
        let back = out.frequency(spec);
        for (a, b) in back.iter().zip(xi) {
            if (a - b).abs() > 1e-9 * step {
                return Err(Error::InvalidParameter(format!("frequency {b} is off the lattice")));
            }
        }
        Ok(out)
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = planner().lock().unwrap_or_else(|e| e.into_inner());
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

fn transpose_square(data: &mut [Complex], m: usize) {
    for r in 0..m {
        for c in (r + 1)..m {
            data.swap(r * m + c, c * m + r);
        }
    }
}

/// Unnormalized in-place n-dimensional FFT.
pub(crate) fn fft_in_place(spec: &GridSpec, data: &mut [Complex], inverse: bool) {
    let m = spec.points();
    let fft = plan(m, inverse);
    fft.process(data);
    if spec.dim() == 2 {
        transpose_square(data, m);
        fft.process(data);
        transpose_square(data, m);
    }
}

/// Complex samples on a [`GridSpec`] lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<Complex>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<Complex>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite {
                point: spec.point(i)[..spec.dim()].to_vec(),
                value: values[i].to_string(),
            });
        }
        Ok(Self { spec, values })
    }

    pub fn from_real(spec: GridSpec, values: &[f64]) -> Result<Self> {
        Self::new(spec, values.iter().map(|&v| Complex::new(v, 0.0)).collect())
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![Complex::new(0.0, 0.0); spec.len()] }
    }

    pub fn constant(spec: GridSpec, c: Complex) -> Self {
        Self { spec, values: vec![c; spec.len()] }
    }

    /// Unit mass at the origin (value one at index 0).
    pub fn impulse(spec: GridSpec) -> Self {
        let mut out = Self::zeros(spec);
        out.values[0] = Complex::new(1.0, 0.0);
        out
    }

    /// `values[idx] = f(point(idx))`; NaN or infinite output is reported with its lattice point.
    pub fn sample<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex,
    {
        let mut values = Vec::with_capacity(spec.len());
        for idx in 0..spec.len() {
            let p = spec.point(idx);
            let v = f(&p[..spec.dim()]);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { point: p[..spec.dim()].to_vec(), value: v.to_string() });
            }
            values.push(v);
        }
        Ok(Self { spec, values })
    }

    pub fn sample_real<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        Self::sample(spec, |x| Complex::new(f(x), 0.0))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex> {
        self.values
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map<F: Fn(Complex) -> Complex>(&self, f: F) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, c: Complex) -> Self {
        self.map(|v| v * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    fn zip_with<F: Fn(Complex, Complex) -> Complex>(&self, other: &Self, f: F) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        Ok(Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Pointwise product with a real lattice array (same ordering).
    pub fn mul_real(&self, other: &[f64]) -> Self {
        debug_assert_eq!(other.len(), self.values.len());
        Self {
            spec: self.spec,
            values: self.values.iter().zip(other).map(|(&a, &b)| a * b).collect(),
        }
    }

    /// Cyclic shift by a signed number of lattice cells per axis: `out(x) = f(x - shift h)`.
    pub fn translate(&self, shift: [i64; 2]) -> Self {
        let mut values = vec![Complex::new(0.0, 0.0); self.values.len()];
        for (idx, v) in self.values.iter().enumerate() {
            let s = self.spec.signed_indices(idx);
            let target = self.spec.flat([s[0] + shift[0], s[1] + shift[1]]);
            values[target] = *v;
        }
        Self { spec: self.spec, values }
    }

    /// Normalized forward transform (see module docs).
    pub fn dft(&self) -> Self {
        let mut data = self.values.clone();
        fft_in_place(&self.spec, &mut data, false);
        let c = (self.spec.cell_volume() / self.spec.len() as f64).sqrt();
        data.iter_mut().for_each(|v| *v *= c);
        Self { spec: self.spec, values: data }
    }

    /// Inverse of [`GridFunction::dft`].
    pub fn idft(&self) -> Self {
        let mut data = self.values.clone();
        fft_in_place(&self.spec, &mut data, true);
        let c = 1.0 / (self.spec.cell_volume() * self.spec.len() as f64).sqrt();
        data.iter_mut().for_each(|v| *v *= c);
        Self { spec: self.spec, values: data }
    }

    /// Periodic Fourier multiplier: `out^ = m * f^` with `m` tabulated in lattice frequency order.
    pub fn apply_multiplier(&self, multiplier: &[Complex]) -> Self {
        debug_assert_eq!(multiplier.len(), self.values.len());
        let mut data = self.values.clone();
        fft_in_place(&self.spec, &mut data, false);
        let norm = 1.0 / self.spec.len() as f64;
        data.iter_mut().zip(multiplier).for_each(|(v, m)| *v *= m * norm);
        fft_in_place(&self.spec, &mut data, true);
        Self { spec: self.spec, values: data }
    }

    /// Same as [`GridFunction::apply_multiplier`] for a real symbol.
    pub fn apply_real_multiplier(&self, multiplier: &[f64]) -> Self {
        debug_assert_eq!(multiplier.len(), self.values.len());
        let mut data = self.values.clone();
        fft_in_place(&self.spec, &mut data, false);
        let norm = 1.0 / self.spec.len() as f64;
        data.iter_mut().zip(multiplier).for_each(|(v, m)| *v *= m * norm);
        fft_in_place(&self.spec, &mut data, true);
        Self { spec: self.spec, values: data }
    }

    /// Little-endian binary: 24-byte header (n, M, L) then interleaved (re, im) doubles.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BINARY_HEADER_LEN + 16 * self.values.len());
        out.extend_from_slice(&(self.spec.dim() as u64).to_le_bytes());
        out.extend_from_slice(&(self.spec.points() as u64).to_le_bytes());
        out.extend_from_slice(&self.spec.half_width().to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < BINARY_HEADER_LEN {
            return Err(Error::Format("truncated grid header".into()));
        }
        let word = |at: usize| -> [u8; 8] { bytes[at..at + 8].try_into().expect("8-byte slice") };
        let dim = u64::from_le_bytes(word(0)) as usize;
        let points = u64::from_le_bytes(word(8)) as usize;
        let half_width = f64::from_le_bytes(word(16));
        let spec = GridSpec::new(dim, points, half_width)?;
        let body = &bytes[BINARY_HEADER_LEN..];
        if body.len() != 16 * spec.len() {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                16 * spec.len(),
                body.len()
            )));
        }
        let values = body
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex::new(re, im)
            })
            .collect();
        Self::new(spec, values)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// CSV export with header `index,re,im` in lattice order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,re,im\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{},{}\n", v.re, v.im));
        }
        out
    }
}

/// `(sum |f|^p w h^n)^{1/p}`; `p = inf` is the sup norm and ignores `w`.
pub fn lp_norm(f: &GridFunction, p: f64, w: Option<&Weight>) -> Result<f64> {
    let values = match w {
        Some(w) if p.is_finite() => Some(w.values_on(f.spec())?),
        _ => None,
    };
    lp_norm_with(f, p, values.as_deref())
}

/// [`lp_norm`] against precomputed weight samples.
pub fn lp_norm_with(f: &GridFunction, p: f64, w: Option<&[f64]>) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("norm exponent p = {p} must be >= 1")));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    if let Some(w) = w {
        check_weight_samples(w, f.values.len())?;
    }
    let h = f.spec().cell_volume();
    let sum: f64 = match w {
        Some(w) => f.values.iter().zip(w).map(|(v, wi)| v.norm().powf(p) * wi).sum(),
        None if p == 2.0 => f.values.iter().map(|v| v.norm_sqr()).sum(),
        None => f.values.iter().map(|v| v.norm().powf(p)).sum(),
    };
    Ok((sum * h).powf(1.0 / p))
}

fn check_weight_samples(w: &[f64], len: usize) -> Result<()> {
    if w.len() != len {
        return Err(Error::GridMismatch(format!("weight has {} samples, grid {}", w.len(), len)));
    }
    if let Some(index) = w.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveWeight { index, value: w[index] });
    }
    Ok(())
}

/// `sum f conj(g) w h^n`.
pub fn weighted_inner_product(f: &GridFunction, g: &GridFunction, w: Option<&Weight>) -> Result<Complex> {
    let values = match w {
        Some(w) => Some(w.values_on(f.spec())?),
        None => None,
    };
    weighted_inner_product_with(f, g, values.as_deref())
}

/// [`weighted_inner_product`] against precomputed weight samples.
pub fn weighted_inner_product_with(f: &GridFunction, g: &GridFunction, w: Option<&[f64]>) -> Result<Complex> {
    f.spec().ensure_same(g.spec())?;
    if let Some(w) = w {
        check_weight_samples(w, f.values.len())?;
    }
    let h = f.spec().cell_volume();
    let sum: Complex = match w {
        Some(w) => f
            .values
            .iter()
            .zip(&g.values)
            .zip(w)
            .map(|((a, b), wi)| a * b.conj() * wi)
            .sum(),
        None => f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum(),
    };
    Ok(sum * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(spec: GridSpec, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..spec.len())
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        GridFunction::new(spec, values).unwrap()
    }

    #[test]
    fn make_grid_examples() {
        let g = make_grid(1, 1024, 16.0).unwrap();
        assert_eq!(g.spacing(), 1.0 / 32.0);
        let g = make_grid(2, 256, 8.0).unwrap();
        assert_eq!(g.len(), 65536);
        let err = make_grid(3, 256, 8.0).unwrap_err();
        assert!(err.to_string().contains("unsupported dimension"));
        assert!(matches!(make_grid(1, 100, 1.0), Err(Error::InvalidPoints(100))));
        assert!(matches!(make_grid(1, 8, 1.0), Err(Error::InvalidPoints(8))));
        assert!(make_grid(1, 64, 0.0).is_err());
    }

    #[test]
    fn sampling_constant_and_even_function() {
        let spec = make_grid(1, 1024, 16.0).unwrap();
        let one = GridFunction::sample_real(spec, |_| 1.0).unwrap();
        assert!(one.values().iter().all(|v| *v == Complex::new(1.0, 0.0)));
        let g = GridFunction::sample_real(spec, |x| (-x[0] * x[0]).exp()).unwrap();
        for i in 1..spec.points() / 2 {
            assert_eq!(g.values()[i], g.values()[spec.points() - i]);
        }
    }

    #[test]
    fn sampling_nan_reports_point() {
        let spec = make_grid(2, 16, 1.0).unwrap();
        let err = GridFunction::sample_real(spec, |x| if x[0] == 0.0 && x[1] == 0.0 { f64::NAN } else { 1.0 })
            .unwrap_err();
        match err {
            Error::NonFinite { point, .. } => assert_eq!(point, vec![0.0, 0.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let f = GridFunction::impulse(spec).dft();
        let first = f.values()[0].norm();
        assert!(f.values().iter().all(|v| (v.norm() - first).abs() < 1e-15));
    }

    #[test]
    fn constant_concentrates_at_zero_frequency() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let f = GridFunction::constant(spec, Complex::new(3.0, 0.0)).dft();
        assert!(f.values()[0].norm() > 1.0);
        assert!(f.values()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn inversion_and_parseval() {
        for spec in [make_grid(1, 256, 4.0).unwrap(), make_grid(2, 64, 3.0).unwrap()] {
            let f = random(spec, 7);
            let back = f.dft().idft();
            let err = back.sub(&f).unwrap().max_abs() / f.max_abs();
            assert!(err < 1e-12, "inversion error {err}");
            let lhs = lp_norm(&f, 2.0, None).unwrap().powi(2);
            let rhs: f64 = f.dft().values().iter().map(|v| v.norm_sqr()).sum();
            assert!((lhs - rhs).abs() / lhs < 1e-12);
        }
    }

    #[test]
    fn frequency_index_round_trip() {
        let spec = make_grid(2, 16, 3.0).unwrap();
        for idx in 0..spec.len() {
            let k = FrequencyIndex::from_flat(&spec, idx);
            assert_eq!(k.to_flat(&spec), idx);
            let xi = k.frequency(&spec);
            assert_eq!(FrequencyIndex::from_frequency(&spec, &xi).unwrap(), k);
        }
        assert!(FrequencyIndex::new(&spec, &[8, 0]).is_err());
    }

    #[test]
    fn norm_examples() {
        let spec = make_grid(1, 64, 2.0).unwrap();
        let one = GridFunction::constant(spec, Complex::new(1.0, 0.0));
        let unit = Weight::sampled(GridFunction::constant(spec, Complex::new(1.0, 0.0))).unwrap();
        let l2 = lp_norm(&one, 2.0, Some(&unit)).unwrap();
        assert!((l2 - 2.0f64.sqrt() * 2.0f64.sqrt()).abs() < 1e-12); // (2L)^{1/2} with L = 2
        assert_eq!(lp_norm(&one, f64::INFINITY, Some(&unit)).unwrap(), 1.0);
        assert!(lp_norm(&one, 0.5, None).is_err());
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let spec = make_grid(1, 16, 1.0).unwrap();
        let f = GridFunction::constant(spec, Complex::new(1.0, 0.0));
        let mut w = vec![1.0; 16];
        w[3] = 0.0;
        assert!(matches!(lp_norm_with(&f, 2.0, Some(&w)), Err(Error::NonPositiveWeight { index: 3, .. })));
    }

    #[test]
    fn inner_product_properties() {
        let spec = make_grid(2, 16, 1.0).unwrap();
        let f = random(spec, 1);
        let g = random(spec, 2);
        let w: Vec<f64> = (0..spec.len()).map(|i| 1.0 + (i % 7) as f64).collect();
        let ff = weighted_inner_product_with(&f, &f, None).unwrap();
        assert!((ff.re - lp_norm(&f, 2.0, None).unwrap().powi(2)).abs() < 1e-12);
        let a = weighted_inner_product_with(&f, &g, Some(&w)).unwrap();
        let b = weighted_inner_product_with(&g, &f, Some(&w)).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
        let nf = lp_norm_with(&f, 2.0, Some(&w)).unwrap();
        let ng = lp_norm_with(&g, 2.0, Some(&w)).unwrap();
        assert!(a.norm() <= nf * ng * (1.0 + 1e-12));
        let other = make_grid(2, 32, 1.0).unwrap();
        assert!(weighted_inner_product_with(&f, &random(other, 3), None).is_err());
    }

    #[test]
    fn binary_round_trip_and_header() {
        let spec = make_grid(2, 16, 1.5).unwrap();
        let f = random(spec, 4);
        let bytes = f.to_bytes();
        assert_eq!(bytes.len(), BINARY_HEADER_LEN + 16 * 256);
        assert_eq!(&bytes[..8], &2u64.to_le_bytes());
        assert_eq!(GridFunction::from_bytes(&bytes).unwrap(), f);
        assert!(GridFunction::from_bytes(&bytes[..30]).is_err());
        assert!(f.to_csv().starts_with("index,re,im\n0,"));
    }

    #[test]
    fn translation_commutes_with_multipliers() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let f = random(spec, 5);
        let m: Vec<f64> = spec.frequency_norms().iter().map(|r| (-r).exp()).collect();
        let a = f.apply_real_multiplier(&m).translate([1, -2]);
        let b = f.translate([1, -2]).apply_real_multiplier(&m);
        assert!(a.sub(&b).unwrap().max_abs() < 1e-12);
    }
}
