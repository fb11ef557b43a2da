//! Kernel bands, truncated singular integrals and Calderón commutators on the lattice.
//!
//! The band `K_k = Omega(x') / |x|^d` lives on the lattice points of the shell
//! `2^k < |x| <= 2^{k+1}` that also satisfy `|x| < L/2`, where `d` is `n + 1`
//! for commutator kernels and `n` for ordinary singular integrals. Bands act
//! as Fourier multipliers `K_k^(xi) = h^n DFT(K_k)`, so every operator here is
//! periodic and exact on the lattice. Commutators are always applied in the
//! two-term form `b T f - T(b f)`.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fft_in_place, lp_norm, Complex, GridFunction, GridSpec};
use crate::lp::{band_value, JumpSchedule, MollifierProfile, Side};
use crate::quad::gauss_legendre_on;
use crate::sphere::SphereSymbol;

/// Lipschitz multiplier `b` with an analytic bound on `||grad b||_inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzSymbol {
    values: GridFunction,
    grad_bound: f64,
}

/// `t` for `|t| <= L/2`, folded back to zero at `|t| = L`: a 1-Lipschitz periodic ramp.
pub fn triangle_wave(t: f64, half_width: f64) -> f64 {
    if t.abs() <= 0.5 * half_width {
        t
    } else {
        t.signum() * half_width - t
    }
}

impl LipschitzSymbol {
    pub fn new(values: GridFunction, grad_bound: f64) -> Result<Self> {
        if !values.is_real(0.0) {
            return Err(Error::InvalidParameter("Lipschitz symbol must be real valued".into()));
        }
        if !(grad_bound >= 0.0 && grad_bound.is_finite()) {
            return Err(Error::InvalidParameter(format!("gradient bound {grad_bound} must be finite and nonnegative")));
        }
        let out = Self { values, grad_bound };
        let g = out.discrete_gradient_max();
        if g > 1.05 * grad_bound + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "discrete gradient {g} exceeds 1.05 x the stated bound {grad_bound}"
            )));
        }
        Ok(out)
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self { values: GridFunction::constant(spec, Complex::new(c, 0.0)), grad_bound: 0.0 }
    }

    /// `b(x) = sum_d e_d tri(x_d)`: equal to `e . x` on `[-L/2, L/2]^n` and periodic.
    pub fn linear(spec: GridSpec, direction: &[f64]) -> Result<Self> {
        if direction.len() != spec.dim() {
            return Err(Error::InvalidParameter(format!(
                "direction has {} entries on a {}-d grid",
                direction.len(),
                spec.dim()
            )));
        }
        let l = spec.half_width();
        let e = direction.to_vec();
        let values = GridFunction::sample_real(spec, |x| x.iter().zip(&e).map(|(xi, ei)| ei * triangle_wave(*xi, l)).sum())?;
        let grad = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self::new(values, grad)
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { values: self.values.scale_real(c), grad_bound: self.grad_bound * c.abs() }
    }

    /// Largest Euclidean norm of the forward-difference gradient.
    pub fn discrete_gradient_max(&self) -> f64 {
        let spec = self.values.spec();
        let h = spec.spacing();
        let v = self.values.values();
        (0..spec.len())
            .map(|idx| {
                let s = spec.signed_indices(idx);
                let mut g2 = 0.0;
                for d in 0..spec.dim() {
                    let mut t = s;
                    t[d] += 1;
                    let diff = (v[spec.flat(t)].re - v[idx].re) / h;
                    g2 += diff * diff;
                }
                g2.sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// `b` description as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LipschitzSpec {
    Linear { direction: Vec<f64> },
    Constant { value: f64 },
    /// Binary grid-function file with its gradient bound.
    Sampled { path: String, grad_bound: f64 },
}

impl LipschitzSpec {
    pub fn build(&self, spec: &GridSpec) -> Result<LipschitzSymbol> {
        match self {
            LipschitzSpec::Linear { direction } => LipschitzSymbol::linear(*spec, direction),
            LipschitzSpec::Constant { value } => Ok(LipschitzSymbol::constant(*spec, *value)),
            LipschitzSpec::Sampled { path, grad_bound } => {
                let f = GridFunction::read_binary(Path::new(path))?;
                f.spec().ensure_same(spec)?;
                LipschitzSymbol::new(f, *grad_bound)
            }
        }
    }
}

/// `Omega(x') (e . x')`: the symbol of the degree-`n` kernel that a linear `b` turns a degree `n + 1` kernel into.
pub fn linear_reduction_symbol(omega: &SphereSymbol, direction: &[f64]) -> Result<SphereSymbol> {
    match omega.dim() {
        1 => SphereSymbol::line(omega.values()[0] * direction[0], -omega.values()[1] * direction[0]),
        _ => {
            let values = omega
                .directions()
                .iter()
                .map(|(d, v)| v * (d[0] * direction[0] + d[1] * direction[1]))
                .collect();
            SphereSymbol::circle_with(values, omega.interpolation())
        }
    }
}

/// Smallest and largest band index with lattice points: `2^{k+1} >= h` and `2^k < L/2`.
pub fn k_range(spec: &GridSpec) -> (i64, i64) {
    let h = spec.spacing();
    let mut kmin = h.log2().floor() as i64 - 2;
    while 2f64.powi(kmin as i32 + 1) < h * (1.0 - 1e-12) {
        kmin += 1;
    }
    let mut kmax = kmin;
    while 2f64.powi(kmax as i32 + 1) < 0.5 * spec.half_width() {
        kmax += 1;
    }
    (kmin, kmax)
}

/// Radius and `Omega(x')` at every lattice point.
#[derive(Clone, Debug)]
pub struct PolarField {
    spec: GridSpec,
    radius: Vec<f64>,
    omega: Vec<f64>,
    /// Mean-zero symbols get every shell's lattice mean removed.
    balanced: bool,
}

impl PolarField {
    pub fn new(spec: &GridSpec, omega: &SphereSymbol) -> Result<Self> {
        if omega.dim() != spec.dim() {
            return Err(Error::GridMismatch(format!(
                "symbol of dimension {} on a {}-d grid",
                omega.dim(),
                spec.dim()
            )));
        }
        let radius: Vec<f64> = (0..spec.len()).map(|i| spec.radius(i)).collect();
        let om = (0..spec.len())
            .into_par_iter()
            .map(|i| if i == 0 { 0.0 } else { omega.eval(&spec.point(i)[..spec.dim()]) })
            .collect();
        let balanced = omega.moments().zeroth.abs() <= 1e-10 * omega.max_abs().max(1.0);
        Ok(Self { spec: *spec, radius, omega: om, balanced })
    }

    /// Kernel samples `(Omega - c) / r^d` on `lo < r <= hi`, `r >= eps`, `r < L/2`, where `c`
    /// is zero unless `Omega` has mean zero, in which case it makes the lattice sum vanish.
    fn kernel(&self, lo: f64, hi: f64, eps: f64, degree: usize) -> Vec<f64> {
        let cap = 0.5 * self.spec.half_width();
        let inside = |r: f64| r > lo && r <= hi && r >= eps && r < cap && r > 0.0;
        let c = if self.balanced {
            let (mut num, mut den) = (0.0, 0.0);
            for (&r, &o) in self.radius.iter().zip(&self.omega) {
                if inside(r) {
                    let w = r.powi(-(degree as i32));
                    num += o * w;
                    den += w;
                }
            }
            if den > 0.0 {
                num / den
            } else {
                0.0
            }
        } else {
            0.0
        };
        self.radius
            .iter()
            .zip(&self.omega)
            .map(|(&r, &o)| if inside(r) { (o - c) / r.powi(degree as i32) } else { 0.0 })
            .collect()
    }
}

fn check_degree(spec: &GridSpec, degree: usize) -> Result<()> {
    if degree != spec.dim() && degree != spec.dim() + 1 {
        return Err(Error::InvalidParameter(format!("kernel degree must be n or n + 1, got {degree}")));
    }
    Ok(())
}

/// `h^n * DFT(kernel)` in lattice frequency order.
fn kernel_multiplier(spec: &GridSpec, kernel: &[f64]) -> Vec<Complex> {
    let mut data: Vec<Complex> = kernel.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_in_place(spec, &mut data, false);
    let h = spec.cell_volume();
    data.iter_mut().for_each(|v| *v *= h);
    data
}

/// One kernel band realized on a lattice.
#[derive(Clone, Debug)]
pub struct KernelBand {
    k: i64,
    degree: usize,
    spec: GridSpec,
    omega: SphereSymbol,
    kernel: Vec<f64>,
    multiplier: Vec<Complex>,
}

impl KernelBand {
    pub fn new(spec: &GridSpec, omega: &SphereSymbol, k: i64, degree: usize) -> Result<Self> {
        Self::clipped(spec, omega, k, degree, 0.0)
    }

    /// Band restricted to lattice points with `|x| >= eps`.
    pub fn clipped(spec: &GridSpec, omega: &SphereSymbol, k: i64, degree: usize, eps: f64) -> Result<Self> {
        let field = PolarField::new(spec, omega)?;
        Self::from_field(&field, omega, k, degree, eps)
    }

    pub fn from_field(field: &PolarField, omega: &SphereSymbol, k: i64, degree: usize, eps: f64) -> Result<Self> {
        check_degree(&field.spec, degree)?;
        let lo = 2f64.powi(k as i32);
        let kernel = field.kernel(lo, 2.0 * lo, eps, degree);
        let multiplier = kernel_multiplier(&field.spec, &kernel);
        Ok(Self { k, degree, spec: field.spec, omega: omega.clone(), kernel, multiplier })
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn omega(&self) -> &SphereSymbol {
        &self.omega
    }

    /// Kernel samples in lattice order.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// `K_k^` on the frequency lattice.
    pub fn multiplier(&self) -> &[Complex] {
        &self.multiplier
    }

    pub fn support_radius(&self) -> (f64, f64) {
        let lo = 2f64.powi(self.k as i32);
        (lo, 2.0 * lo)
    }
}

/// `K_k^(xi)` by quadrature: Gauss–Legendre in `r` times the trapezoid rule on the sphere.
pub fn khat_quadrature(omega: &SphereSymbol, k: i64, degree: usize, xi: &[f64]) -> Complex {
    let a = 2f64.powi(k as i32);
    let b = 2.0 * a;
    let xn = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rho = b * xn;
    let nr = (rho / 2.0).ceil() as usize + 20;
    let (rs, ws) = gauss_legendre_on(nr, a, b);
    let n = omega.dim();
    let power = n as i32 - 1 - degree as i32;
    match n {
        1 => {
            let (p, m) = (omega.values()[0], omega.values()[1]);
            rs.iter()
                .zip(&ws)
                .map(|(&r, &w)| {
                    let e = Complex::from_polar(1.0, -xi[0] * r);
                    (e * p + e.conj() * m) * (w * r.powi(power))
                })
                .sum()
        }
        _ => {
            let mut na = omega.nodes().max(2 * rho.ceil() as usize + 64);
            na += na % 2;
            let dirs: Vec<(f64, f64, f64)> = (0..na)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / na as f64;
                    let (s, c) = t.sin_cos();
                    (c, s, omega.at_angle(t))
                })
                .collect();
            let dw = 2.0 * PI / na as f64;
            rs.iter()
                .zip(&ws)
                .map(|(&r, &w)| {
                    let ang: Complex = dirs
                        .iter()
                        .map(|&(c, s, o)| Complex::from_polar(o, -r * (xi[0] * c + xi[1] * s)))
                        .sum();
                    ang * (dw * w * r.powi(power))
                })
                .sum()
        }
    }
}

/// `K_k^(xi)` for a realized band by quadrature (continuous shell, not the lattice).
pub fn khat(band: &KernelBand, xi: &[f64]) -> Complex {
    khat_quadrature(&band.omega, band.k, band.degree, xi)
}

/// `T_k f = K_k * f`.
pub fn apply_band(band: &KernelBand, f: &GridFunction) -> Result<GridFunction> {
    band.spec.ensure_same(f.spec())?;
    Ok(f.apply_multiplier(&band.multiplier))
}

/// `[b, T_k] f = b T_k f - T_k(b f)`.
pub fn commutator_band(b: &LipschitzSymbol, band: &KernelBand, f: &GridFunction) -> Result<GridFunction> {
    band.spec.ensure_same(f.spec())?;
    b.values.spec().ensure_same(f.spec())?;
    let bv = b.values.re();
    let tf = f.apply_multiplier(&band.multiplier).mul_real(&bv);
    let tbf = f.mul_real(&bv).apply_multiplier(&band.multiplier);
    tf.sub(&tbf)
}

/// Multiplier of the kernel `Omega / |x|^d` on `eps <= |x| < L/2`, assembled band by band.
pub fn truncated_multiplier(spec: &GridSpec, omega: &SphereSymbol, eps: f64, degree: usize) -> Result<Vec<Complex>> {
    check_degree(spec, degree)?;
    if eps < spec.spacing() * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!("truncation {eps} is below the grid spacing {}", spec.spacing())));
    }
    let field = PolarField::new(spec, omega)?;
    let (lo, hi) = k_range(spec);
    let mut kernel = vec![0.0; spec.len()];
    for k in lo..=hi {
        let a = 2f64.powi(k as i32);
        if 2.0 * a < eps {
            continue;
        }
        for (acc, v) in kernel.iter_mut().zip(field.kernel(a, 2.0 * a, eps, degree)) {
            *acc += v;
        }
    }
    Ok(kernel_multiplier(spec, &kernel))
}

/// Truncated singular integral `int_{|y| >= eps} K(y) f(x - y) dy` with `K = Omega / |y|^d`.
pub fn apply_t_eps(omega: &SphereSymbol, f: &GridFunction, eps: f64, degree: usize) -> Result<GridFunction> {
    let m = truncated_multiplier(f.spec(), omega, eps, degree)?;
    Ok(f.apply_multiplier(&m))
}

/// Every band of one kernel on one lattice, indexed by `k`.
#[derive(Clone, Debug)]
pub struct KernelBank {
    spec: GridSpec,
    omega: SphereSymbol,
    degree: usize,
    bands: Vec<KernelBand>,
}

impl KernelBank {
    /// Bands `k_min..=k_max` from [`k_range`].
    pub fn new(spec: &GridSpec, omega: &SphereSymbol, degree: usize) -> Result<Self> {
        let (lo, hi) = k_range(spec);
        Self::with_range(spec, omega, degree, lo, hi)
    }

    pub fn with_range(spec: &GridSpec, omega: &SphereSymbol, degree: usize, kmin: i64, kmax: i64) -> Result<Self> {
        check_degree(spec, degree)?;
        let field = PolarField::new(spec, omega)?;
        let bands = (kmin..=kmax)
            .into_par_iter()
            .map(|k| KernelBand::from_field(&field, omega, k, degree, 0.0))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec: *spec, omega: omega.clone(), degree, bands })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn omega(&self) -> &SphereSymbol {
        &self.omega
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn bands(&self) -> &[KernelBand] {
        &self.bands
    }

    pub fn k_bounds(&self) -> (i64, i64) {
        (self.bands.first().map_or(0, |b| b.k), self.bands.last().map_or(-1, |b| b.k))
    }

    /// `sum_k K_k^`.
    pub fn full_multiplier(&self) -> Vec<Complex> {
        let mut out = vec![Complex::new(0.0, 0.0); self.spec.len()];
        for b in &self.bands {
            out.iter_mut().zip(&b.multiplier).for_each(|(o, m)| *o += m);
        }
        out
    }

    /// `sum_k K_k^(xi) (phi(2^a xi) - phi(2^b xi))` for the band `(j, side)`.
    pub fn piece_multiplier(&self, j: u32, side: Side, schedule: &JumpSchedule, profile: &MollifierProfile) -> Vec<Complex> {
        let norms = self.spec.frequency_norms();
        let mut out = vec![Complex::new(0.0, 0.0); self.spec.len()];
        for b in &self.bands {
            for ((o, m), &r) in out.iter_mut().zip(&b.multiplier).zip(&norms) {
                let w = band_value(profile, b.k, j, side, schedule, r);
                if w != 0.0 {
                    *o += m * w;
                }
            }
        }
        out
    }
}

/// Anything with a matrix-free action and adjoint on one lattice.
pub trait LinearOperator: Sync {
    fn spec(&self) -> &GridSpec;
    fn apply(&self, f: &GridFunction) -> GridFunction;
    /// Adjoint with respect to the unweighted lattice inner product.
    fn apply_adjoint(&self, f: &GridFunction) -> GridFunction;
}

/// A Fourier multiplier `T`, optionally wrapped as the commutator `[b, T]`.
#[derive(Clone, Debug)]
pub struct BandOperator {
    spec: GridSpec,
    multiplier: Arc<Vec<Complex>>,
    b: Option<Arc<Vec<f64>>>,
    label: String,
}

impl BandOperator {
    pub fn multiplier(spec: GridSpec, multiplier: Vec<Complex>, label: impl Into<String>) -> Self {
        Self { spec, multiplier: Arc::new(multiplier), b: None, label: label.into() }
    }

    pub fn commutator(b: &LipschitzSymbol, multiplier: Vec<Complex>, label: impl Into<String>) -> Self {
        Self {
            spec: *b.values.spec(),
            multiplier: Arc::new(multiplier),
            b: Some(Arc::new(b.values.re())),
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn symbol(&self) -> &[Complex] {
        &self.multiplier
    }

    fn run(&self, f: &GridFunction, m: &[Complex]) -> GridFunction {
        match &self.b {
            None => f.apply_multiplier(m),
            Some(b) => {
                let tf = f.apply_multiplier(m).mul_real(b);
                let tbf = f.mul_real(b).apply_multiplier(m);
                tf.sub(&tbf).expect("same lattice")
            }
        }
    }
}

impl LinearOperator for BandOperator {
    fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn apply(&self, f: &GridFunction) -> GridFunction {
        self.run(f, &self.multiplier)
    }

    fn apply_adjoint(&self, f: &GridFunction) -> GridFunction {
        let conj: Vec<Complex> = self.multiplier.iter().map(|m| m.conj()).collect();
        let out = self.run(f, &conj);
        match self.b {
            // ([b, T])* = -[b, T*]
            Some(_) => out.scale_real(-1.0),
            None => out,
        }
    }
}

/// Output of [`apply_c`]: the commutator and the norm of every band's contribution.
#[derive(Clone, Debug)]
pub struct CommutatorOutput {
    pub value: GridFunction,
    /// `(k, ||[b, T_k] f||_{L^2})`.
    pub band_norms: Vec<(i64, f64)>,
}

/// `C_Omega f = sum_k [b, T_k] f` over `krange` (defaults to every lattice band).
pub fn apply_c(
    b: &LipschitzSymbol,
    omega: &SphereSymbol,
    f: &GridFunction,
    krange: Option<(i64, i64)>,
    require_cancellation: bool,
) -> Result<CommutatorOutput> {
    if require_cancellation {
        let m = omega.moments().max_abs();
        if m > 1e-10 {
            return Err(Error::CancellationViolated(m));
        }
    }
    let (lo, hi) = krange.unwrap_or_else(|| k_range(f.spec()));
    let bank = KernelBank::with_range(f.spec(), omega, f.spec().dim() + 1, lo, hi)?;
    let parts = bank
        .bands
        .par_iter()
        .map(|band| commutator_band(b, band, f).map(|g| (band.k, g)))
        .collect::<Result<Vec<_>>>()?;
    let mut value = GridFunction::zeros(*f.spec());
    let mut band_norms = Vec::with_capacity(parts.len());
    for (k, g) in parts {
        band_norms.push((k, lp_norm(&g, 2.0, None)?));
        value = value.add(&g)?;
    }
    Ok(CommutatorOutput { value, band_norms })
}

/// `[b, T_{1,j}^N] f` in two-term form.
pub fn apply_comm_t1jn(
    b: &LipschitzSymbol,
    bank: &KernelBank,
    f: &GridFunction,
    j: u32,
    schedule: &JumpSchedule,
    profile: &MollifierProfile,
) -> Result<GridFunction> {
    commutator_piece(b, bank, j, Side::Low, schedule, profile).map(|op| op.apply(f))
}

/// `[b, T_{2,j}^N] f` in two-term form; needs the cancellation condition.
pub fn apply_comm_t2jn(
    b: &LipschitzSymbol,
    bank: &KernelBank,
    f: &GridFunction,
    j: u32,
    schedule: &JumpSchedule,
    profile: &MollifierProfile,
) -> Result<GridFunction> {
    commutator_piece(b, bank, j, Side::High, schedule, profile).map(|op| op.apply(f))
}

/// `[b, T_{side,j}^N]` as a matrix-free operator.
pub fn commutator_piece(
    b: &LipschitzSymbol,
    bank: &KernelBank,
    j: u32,
    side: Side,
    schedule: &JumpSchedule,
    profile: &MollifierProfile,
) -> Result<BandOperator> {
    schedule.validate()?;
    if j == 0 {
        return Err(Error::InvalidParameter("band index j starts at 1".into()));
    }
    b.values.spec().ensure_same(&bank.spec)?;
    if side == Side::High {
        let m = bank.omega.moments().max_abs();
        if m > 1e-10 {
            return Err(Error::CancellationViolated(m));
        }
    }
    let m = bank.piece_multiplier(j, side, schedule, profile);
    Ok(BandOperator::commutator(b, m, format!("[b,T_{}{j}]", if side == Side::Low { 1 } else { 2 })))
}

/// Largest `j` for which the pieces of `bank` are not identically zero on the lattice.
pub fn last_live_piece(bank: &KernelBank, side: Side, schedule: &JumpSchedule, profile: &MollifierProfile) -> u32 {
    let mut j = 1;
    let mut last = 0;
    while j < 64 {
        let m = bank.piece_multiplier(j, side, schedule, profile);
        if m.iter().any(|v| v.norm() > 0.0) {
            last = j;
        } else if last > 0 {
            break;
        }
        j += 1;
        if schedule.n(j - 1) > 200 {
            break;
        }
    }
    last
}

/// `m_{i,k} = K_k^ psi(2^{k-i} xi)` (low) or `K_k^ psi(2^{k+i} xi)` (high) on the frequency lattice.
#[derive(Clone, Debug)]
pub struct MultiplierTable {
    pub i: i64,
    pub k: i64,
    pub side: Side,
    pub spec: GridSpec,
    pub values: Vec<Complex>,
}

impl MultiplierTable {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// CSV `index,kappa0,kappa1,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,kappa0,kappa1,re,im\n");
        for (idx, v) in self.values.iter().enumerate() {
            let k = self.spec.signed_indices(idx);
            out.push_str(&format!("{idx},{},{},{},{}\n", k[0], k[1], v.re, v.im));
        }
        out
    }
}

/// Scale index of `psi` in the multiplier `m_{i,k}`.
pub fn multiplier_scale(i: i64, k: i64, side: Side) -> i64 {
    match side {
        Side::Low => k - i,
        Side::High => k + i,
    }
}

pub fn multiplier_table(band: &KernelBand, i: i64, side: Side, profile: &MollifierProfile) -> MultiplierTable {
    let s = multiplier_scale(i, band.k, side);
    let norms = band.spec.frequency_norms();
    let values = band
        .multiplier
        .iter()
        .zip(&norms)
        .map(|(m, &r)| m * profile.psi_scaled(s, r))
        .collect();
    MultiplierTable { i, k: band.k, side, spec: band.spec, values }
}

/// `max |m_{i,k}|` over the continuous annulus, sampled in polar coordinates with quadrature `K_k^`.
pub fn annulus_max(
    omega: &SphereSymbol,
    k: i64,
    i: i64,
    side: Side,
    profile: &MollifierProfile,
    radial: usize,
    angular: usize,
) -> f64 {
    let s = multiplier_scale(i, k, side);
    let (lo, hi) = profile.psi_support();
    let scale = 2f64.powi(-s as i32);
    let dim = omega.dim();
    let mut pts = Vec::new();
    for a in 0..radial {
        let r = scale * (lo + (hi - lo) * (a as f64 + 0.5) / radial as f64);
        if dim == 1 {
            pts.push([r, 0.0]);
            pts.push([-r, 0.0]);
        } else {
            for t in 0..angular {
                let th = 2.0 * PI * t as f64 / angular as f64;
                pts.push([r * th.cos(), r * th.sin()]);
            }
        }
    }
    pts.par_iter()
        .map(|xi| {
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            khat_quadrature(omega, k, dim + 1, &xi[..dim]).norm() * profile.psi_scaled(s, r).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// `max |d^2 m_{i,k} / d xi_1^2| / 2^k` over the annulus, by central differences of quadrature `K_k^`.
pub fn second_derivative_ratio(
    omega: &SphereSymbol,
    k: i64,
    i: i64,
    side: Side,
    profile: &MollifierProfile,
    radial: usize,
    angular: usize,
) -> f64 {
    let s = multiplier_scale(i, k, side);
    let (lo, hi) = profile.psi_support();
    let scale = 2f64.powi(-s as i32);
    let delta = 1e-3 * scale;
    let dim = omega.dim();
    let m = |xi: [f64; 2]| -> Complex {
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        khat_quadrature(omega, k, dim + 1, &xi[..dim]) * profile.psi_scaled(s, r)
    };
    let mut pts = Vec::new();
    for a in 0..radial {
        let r = scale * (lo + (hi - lo) * (a as f64 + 0.5) / radial as f64);
        let count = if dim == 1 { 2 } else { angular };
        for t in 0..count {
            let th = 2.0 * PI * t as f64 / count as f64;
            pts.push([r * th.cos(), if dim == 1 { 0.0 } else { r * th.sin() }]);
        }
    }
    let worst = pts
        .par_iter()
        .map(|&xi| {
            let d2 = m([xi[0] + delta, xi[1]]) - m(xi) * 2.0 + m([xi[0] - delta, xi[1]]);
            d2.norm() / (delta * delta)
        })
        .reduce(|| 0.0, f64::max);
    worst / 2f64.powi(k as i32)
}

/// `||Omega||_1 (1 + 2 D1 + D2 + 4 D1)`, with `D1`, `D2` the largest `|psi'|`, `|psi''|`:
/// a bound for [`second_derivative_ratio`] on both sides for `i >= 0`.
pub fn second_derivative_constant(omega_l1: f64, profile: &MollifierProfile) -> f64 {
    let (lo, hi) = profile.psi_support();
    let n = 20_000;
    let d = (hi - lo) / n as f64;
    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    for a in 1..n {
        let r = lo + a as f64 * d;
        let (l, c, u) = (profile.psi_hat(r - d), profile.psi_hat(r), profile.psi_hat(r + d));
        d1 = d1.max((u - l).abs() / (2.0 * d));
        d2 = d2.max((u - 2.0 * c + l).abs() / (d * d));
    }
    omega_l1 * (1.0 + 2.0 * d1 + d2 + 4.0 * d1)
}

/// `t -> scale * min(1, 2^N t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiniModulus {
    pub n: u32,
    pub scale: f64,
}

impl DiniModulus {
    pub fn eval(&self, t: f64) -> f64 {
        self.scale * (2f64.powi(self.n as i32) * t).min(1.0)
    }

    /// `int_0^1 omega(t) dt / t = scale (1 + N ln 2)`.
    pub fn dini_norm(&self) -> f64 {
        self.scale * (1.0 + self.n as f64 * std::f64::consts::LN_2)
    }
}

pub fn dini_modulus(n: u32, omega_norm: f64, grad_norm: f64) -> DiniModulus {
    DiniModulus { n, scale: omega_norm * grad_norm }
}

/// Dini norm of `min(1, 2^N t)`.
pub fn dini_norm(n: u32) -> f64 {
    dini_modulus(n, 1.0, 1.0).dini_norm()
}

/// A kernel sample `(x, y, h)` in signed lattice units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSample {
    pub x: [i64; 2],
    pub y: [i64; 2],
    pub h: [i64; 2],
}

fn norm_cells(v: [i64; 2]) -> f64 {
    ((v[0] * v[0] + v[1] * v[1]) as f64).sqrt()
}

/// `count` samples with `4 <= |x - y| <= M/8` cells and `|h|` halving from `|x - y|/2` down to one cell.
pub fn sample_triples(spec: &GridSpec, count: usize, seed: u64) -> Vec<KernelSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = spec.points() as i64;
    let reach = (m / 8).max(5);
    let two_d = spec.dim() == 2;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = [rng.random_range(-m / 8..m / 8), if two_d { rng.random_range(-m / 8..m / 8) } else { 0 }];
        let d = [rng.random_range(-reach..=reach), if two_d { rng.random_range(-reach..=reach) } else { 0 }];
        let dist = norm_cells(d);
        if dist < 4.0 || dist > reach as f64 {
            continue;
        }
        let y = [x[0] - d[0], x[1] - d[1]];
        // direction of h, scaled so that 2|h| <= |x - y|
        let dir = [rng.random_range(-3i64..=3), if two_d { rng.random_range(-3i64..=3) } else { 0 }];
        if dir == [0, 0] {
            continue;
        }
        let mut h = dir;
        while 2.0 * norm_cells([2 * h[0], 2 * h[1]]) <= dist {
            h = [2 * h[0], 2 * h[1]];
        }
        if 2.0 * norm_cells(h) > dist {
            continue;
        }
        // halving sequence down to the smallest lattice step in that direction
        loop {
            out.push(KernelSample { x, y, h });
            if out.len() == count || (h[0] % 2 != 0 || h[1] % 2 != 0) {
                break;
            }
            h = [h[0] / 2, h[1] / 2];
        }
    }
    out
}

/// Size and smoothness ratios of the assembled kernel of `[b, T_{side,j}^N]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCheckReport {
    pub j: u32,
    pub side: Side,
    pub n_of_j: i64,
    pub samples: usize,
    /// `max |K(x,y)| |x-y|^n / (||Omega|| ||grad b||)`.
    pub size_ratio: f64,
    /// `max (|K(x,y+h) - K(x,y)| + |K(x,y) - K(x+h,y)|) |x-y|^n / omega_j(|h|/|x-y|)`.
    pub smooth_ratio: f64,
    /// Smoothness ratio restricted to the smallest `|h|` of each halving sequence.
    pub smooth_ratio_finest: f64,
}

/// Evaluates `(b(x) - b(y)) L_j(x - y)` with `L_j` the lattice kernel of the band.
pub fn kernel_estimate_check(
    b: &LipschitzSymbol,
    bank: &KernelBank,
    j: u32,
    side: Side,
    schedule: &JumpSchedule,
    profile: &MollifierProfile,
    samples: &[KernelSample],
) -> Result<KernelCheckReport> {
    let spec = *bank.spec();
    b.values.spec().ensure_same(&spec)?;
    for s in samples {
        let d = norm_cells([s.x[0] - s.y[0], s.x[1] - s.y[1]]);
        if 2.0 * norm_cells(s.h) > d || d == 0.0 {
            return Err(Error::InvalidSample(format!("{s:?} violates 2|h| <= |x - y|")));
        }
    }
    let m = bank.piece_multiplier(j, side, schedule, profile);
    let mut data = m;
    fft_in_place(&spec, &mut data, true);
    let scale = 1.0 / (spec.len() as f64 * spec.cell_volume());
    let kernel: Vec<f64> = data.iter().map(|v| v.re * scale).collect();
    let bv = b.values.re();
    let at = |x: [i64; 2], y: [i64; 2]| -> f64 {
        let z = [x[0] - y[0], x[1] - y[1]];
        (bv[spec.flat(x)] - bv[spec.flat(y)]) * kernel[spec.flat(z)]
    };
    let omega_norm = match side {
        Side::Low => bank.omega.lq_norm(f64::INFINITY)?,
        Side::High => bank.omega.lq_norm(1.0)?,
    };
    let modulus = dini_modulus(schedule.n(j) as u32, omega_norm, b.grad_bound);
    let h = spec.spacing();
    let n = spec.dim() as i32;
    let denom = omega_norm * b.grad_bound;
    let mut size_ratio = 0.0f64;
    let mut smooth_ratio = 0.0f64;
    let mut finest = 0.0f64;
    for (idx, s) in samples.iter().enumerate() {
        let dist = norm_cells([s.x[0] - s.y[0], s.x[1] - s.y[1]]) * h;
        let k0 = at(s.x, s.y);
        if denom > 0.0 {
            size_ratio = size_ratio.max(k0.abs() * dist.powi(n) / denom);
        }
        let ky = at(s.x, [s.y[0] + s.h[0], s.y[1] + s.h[1]]);
        let kx = at([s.x[0] + s.h[0], s.x[1] + s.h[1]], s.y);
        let diff = (ky - k0).abs() + (k0 - kx).abs();
        let w = modulus.eval(norm_cells(s.h) * h / dist);
        let r = if w > 0.0 { diff * dist.powi(n) / w } else { 0.0 };
        smooth_ratio = smooth_ratio.max(r);
        let last_of_run = samples.get(idx + 1).is_none_or(|t| t.x != s.x || t.y != s.y);
        if last_of_run {
            finest = finest.max(r);
        }
    }
    Ok(KernelCheckReport {
        j,
        side,
        n_of_j: schedule.n(j),
        samples: samples.len(),
        size_ratio,
        smooth_ratio,
        smooth_ratio_finest: finest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn gaussian(spec: GridSpec, center: f64, width: f64) -> GridFunction {
        GridFunction::sample_real(spec, |x| {
            let r2: f64 = x.iter().map(|v| (v - center).powi(2)).sum();
            (-r2 / (width * width)).exp()
        })
        .unwrap()
    }

    #[test]
    fn k_range_brackets_lattice() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let (lo, hi) = k_range(&spec);
        let h = spec.spacing();
        assert!(2f64.powi(lo as i32) < h && 2f64.powi(lo as i32 + 1) >= h);
        assert!(2f64.powi(hi as i32) < 2.0 && 2f64.powi(hi as i32 + 1) >= 2.0);
    }

    #[test]
    fn khat_at_zero() {
        let omega = SphereSymbol::from_harmonic(2, 2, 1.0).unwrap();
        for k in -3..3 {
            assert!(khat_quadrature(&omega, k, 3, &[0.0, 0.0]).norm() < 1e-12);
        }
        let one = SphereSymbol::from_harmonic(2, 0, 1.0).unwrap();
        for k in -3..3 {
            let v = khat_quadrature(&one, k, 3, &[0.0, 0.0]);
            let want = 2.0 * PI * 2f64.powi(-(k as i32) - 1);
            assert!((v.re - want).abs() < 1e-12 * want && v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn impulse_reproduces_kernel() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let omega = SphereSymbol::from_harmonic(2, 2, 1.0).unwrap();
        let band = KernelBand::new(&spec, &omega, -1, 3).unwrap();
        let imp = GridFunction::impulse(spec).scale_real(1.0 / spec.cell_volume());
        let out = apply_band(&band, &imp).unwrap();
        for (a, b) in out.values().iter().zip(band.kernel()) {
            assert!((a - b).norm() < 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn band_matches_direct_convolution_1d() {
        let spec = make_grid(1, 64, 4.0).unwrap();
        let omega = SphereSymbol::line(1.0, -0.5).unwrap();
        let band = KernelBand::new(&spec, &omega, -1, 2).unwrap();
        let f = gaussian(spec, 0.3, 0.7);
        let out = apply_band(&band, &f).unwrap();
        let h = spec.spacing();
        for x in 0..spec.len() {
            let sx = spec.signed_indices(x)[0];
            let mut s = Complex::new(0.0, 0.0);
            for y in 0..spec.len() {
                let sy = spec.signed_indices(y)[0];
                s += band.kernel()[spec.flat([sx - sy, 0])] * f.values()[y] * h;
            }
            assert!((s - out.values()[x]).norm() < 1e-10);
        }
    }

    #[test]
    fn t_eps_kills_constants_and_rejects_small_eps() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let omega = SphereSymbol::from_harmonic(2, 3, 1.0).unwrap();
        let c = GridFunction::constant(spec, Complex::new(1.0, 0.0));
        let out = apply_t_eps(&omega, &c, spec.spacing(), 2).unwrap();
        assert!(out.max_abs() < 1e-12);
        assert!(apply_t_eps(&omega, &c, 0.5 * spec.spacing(), 2).is_err());
    }

    #[test]
    fn t_eps_is_the_sum_of_bands() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let omega = SphereSymbol::from_fn(64, |t| (4.0 * t).cos() + 0.3 * (3.0 * t).sin()).unwrap();
        let f = gaussian(spec, 0.1, 0.5);
        let eps = 3.0 * spec.spacing();
        let direct = apply_t_eps(&omega, &f, eps, 2).unwrap();
        let (lo, hi) = k_range(&spec);
        let mut sum = GridFunction::zeros(spec);
        for k in lo..=hi {
            let band = KernelBand::clipped(&spec, &omega, k, 2, eps).unwrap();
            sum = sum.add(&apply_band(&band, &f).unwrap()).unwrap();
        }
        assert!(direct.sub(&sum).unwrap().max_abs() < 1e-12 * direct.max_abs().max(1.0));
        // doubling eps only touches the bands that meet eps <= |x| < 2 eps
        let doubled = apply_t_eps(&omega, &f, 2.0 * eps, 2).unwrap();
        let mut ring = GridFunction::zeros(spec);
        for k in lo..=hi {
            if 2f64.powi(k as i32) < 2.0 * eps {
                let near = KernelBand::clipped(&spec, &omega, k, 2, eps).unwrap();
                let far = KernelBand::clipped(&spec, &omega, k, 2, 2.0 * eps).unwrap();
                ring = ring.add(&apply_band(&near, &f).unwrap().sub(&apply_band(&far, &f).unwrap()).unwrap()).unwrap();
            }
        }
        assert!(direct.sub(&doubled).unwrap().sub(&ring).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn mean_zero_kernels_sum_to_zero_on_the_lattice() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let omega = SphereSymbol::from_fn(64, |t| (4.0 * t).cos() + 0.5 * (2.0 * t).sin().powi(2) - 0.25).unwrap();
        let c = GridFunction::constant(spec, Complex::new(1.0, 0.0));
        for eps in [spec.spacing(), 0.37] {
            assert!(apply_t_eps(&omega, &c, eps, 2).unwrap().max_abs() < 1e-12);
        }
        let (lo, hi) = k_range(&spec);
        for k in lo..=hi {
            let band = KernelBand::new(&spec, &omega, k, 3).unwrap();
            assert!(band.kernel().iter().sum::<f64>().abs() <= 1e-12 * band.kernel().iter().map(|v| v.abs()).sum::<f64>());
        }
        // symbols without cancellation keep their raw lattice values
        let one = SphereSymbol::from_fn(64, |_| 1.0).unwrap();
        let band = KernelBand::new(&spec, &one, 0, 2).unwrap();
        assert!(band.kernel().iter().all(|&v| v == 0.0 || v > 0.0));
    }

    #[test]
    fn commutator_with_constant_vanishes() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let omega = SphereSymbol::from_harmonic(2, 2, 1.0).unwrap();
        let band = KernelBand::new(&spec, &omega, -2, 3).unwrap();
        let f = gaussian(spec, 0.0, 0.4);
        let b = LipschitzSymbol::constant(spec, 3.0);
        assert!(commutator_band(&b, &band, &f).unwrap().max_abs() < 1e-13);
        let lin = LipschitzSymbol::linear(spec, &[1.0, 0.5]).unwrap();
        let s = commutator_band(&lin, &band, &f).unwrap().add(&commutator_band(&lin.scale(-1.0), &band, &f).unwrap()).unwrap();
        assert!(s.max_abs() < 1e-15);
    }

    #[test]
    fn linear_symbol_has_the_stated_gradient() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let b = LipschitzSymbol::linear(spec, &[0.6, -0.8]).unwrap();
        assert!((b.grad_bound() - 1.0).abs() < 1e-15);
        assert!(b.discrete_gradient_max() <= 1.0 + 1e-12);
        let p = spec.flat([3, -5]);
        let x = spec.point(p);
        assert!((b.values().values()[p].re - (0.6 * x[0] - 0.8 * x[1])).abs() < 1e-15);
        let bad = GridFunction::sample_real(spec, |x| 5.0 * x[0]).unwrap();
        assert!(LipschitzSymbol::new(bad, 1.0).is_err());
    }

    #[test]
    fn adjoint_is_consistent() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let omega = SphereSymbol::from_fn(32, |t| (2.0 * t).cos() + (3.0 * t).sin()).unwrap();
        let bank = KernelBank::new(&spec, &omega, 3).unwrap();
        let b = LipschitzSymbol::linear(spec, &[1.0, 0.3]).unwrap();
        let op = BandOperator::commutator(&b, bank.full_multiplier(), "C");
        let f = gaussian(spec, 0.2, 0.5);
        let g = gaussian(spec, -0.3, 0.6).map(|v| v * Complex::new(0.5, 1.0));
        let lhs = crate::grid::weighted_inner_product_with(&op.apply(&f), &g, None).unwrap();
        let rhs = crate::grid::weighted_inner_product_with(&f, &op.apply_adjoint(&g), None).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1e-3));
    }

    #[test]
    fn multiplier_table_support_and_values() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let omega = SphereSymbol::from_harmonic(2, 2, 1.0).unwrap();
        let band = KernelBand::new(&spec, &omega, -1, 3).unwrap();
        let prof = MollifierProfile::new();
        let norms = spec.frequency_norms();
        let kmax = band.multiplier().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for side in [Side::Low, Side::High] {
            let t = multiplier_table(&band, 1, side, &prof);
            let s = multiplier_scale(1, -1, side);
            for (idx, v) in t.values.iter().enumerate() {
                let r = norms[idx] * 2f64.powi(s as i32);
                if v.norm() > 0.0 {
                    assert!(r > 0.25 && r < 1.0);
                }
                assert!(v.norm() <= kmax);
                assert!((v - band.multiplier()[idx] * prof.psi_scaled(s, norms[idx])).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn dini_examples() {
        assert_eq!(dini_norm(0), 1.0);
        assert!((dini_norm(4) - 3.772588722239781).abs() < 1e-12);
        let m = dini_modulus(3, 2.0, 1.5);
        assert!((m.dini_norm() - 3.0 * dini_norm(3)).abs() < 1e-14);
        let numeric = crate::quad::integrate(|t| dini_modulus(3, 1.0, 1.0).eval(t) / t, 0.0, 0.125, 8)
            + crate::quad::integrate(|t| 1.0 / t, 0.125, 1.0, 40);
        assert!((numeric - dini_norm(3)).abs() < 1e-10);
    }

    #[test]
    fn kernel_check_rejects_bad_samples() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let omega = SphereSymbol::from_harmonic(2, 2, 1.0).unwrap();
        let bank = KernelBank::new(&spec, &omega, 3).unwrap();
        let b = LipschitzSymbol::linear(spec, &[1.0, 0.0]).unwrap();
        let bad = [KernelSample { x: [0, 0], y: [4, 0], h: [3, 0] }];
        let r = kernel_estimate_check(&b, &bank, 1, Side::Low, &JumpSchedule::Pow2, &MollifierProfile::new(), &bad);
        assert!(r.is_err());
        let c = LipschitzSymbol::constant(spec, 1.0);
        let ok = sample_triples(&spec, 20, 1);
        let r = kernel_estimate_check(&c, &bank, 1, Side::Low, &JumpSchedule::Pow2, &MollifierProfile::new(), &ok).unwrap();
        assert_eq!((r.size_ratio, r.smooth_ratio), (0.0, 0.0));
    }

    #[test]
    fn sample_triples_respect_the_separation() {
        let spec = make_grid(2, 128, 4.0).unwrap();
        for s in sample_triples(&spec, 200, 3) {
            let d = norm_cells([s.x[0] - s.y[0], s.x[1] - s.y[1]]);
            assert!(2.0 * norm_cells(s.h) <= d && norm_cells(s.h) >= 1.0);
        }
    }
}
