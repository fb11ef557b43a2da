//! Littlewood–Paley pieces on the lattice.
//!
//! `S_j` multiplies by `phi(2^j xi)` and `Delta_j` by `psi(2^j xi)^power`, where
//! `phi(xi) = eta(|xi|)` equals 1 for `|xi| <= 1/2` and 0 for `|xi| >= 1` and
//! `psi^3(xi) = phi(xi) - phi(2 xi)`. With this plateau and cutoff `psi` lives on
//! `1/4 < |xi| < 1`.
//!
//! The transition is the closed-form smoothstep
//! `eta(r) = 1 - s(2r - 1)`, `s(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`,
//! which is C-infinity and nonincreasing.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{lp_norm, GridFunction, GridSpec};
use crate::operators::LipschitzSymbol;

/// Radial profile `eta` and the derived `phi`, `psi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierProfile {
    psi_sign: f64,
}

impl Default for MollifierProfile {
    fn default() -> Self {
        Self { psi_sign: 1.0 }
    }
}

/// `s(t)` on `[0, 1]`, 0 below and 1 above.
fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// `r * 2^j` without overflow to infinity for the exponents in use.
fn dilate(j: i64, r: f64) -> f64 {
    r * 2f64.powi(j.clamp(-1000, 1000) as i32)
}

impl MollifierProfile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Profile whose `psi` has the wrong sign; used to exercise the self test.
    pub fn with_flipped_psi() -> Self {
        Self { psi_sign: -1.0 }
    }

    pub fn eta(&self, r: f64) -> f64 {
        1.0 - smoothstep(2.0 * r - 1.0)
    }

    /// `phi` at radius `r = |xi|`.
    pub fn phi_hat(&self, r: f64) -> f64 {
        self.eta(r)
    }

    /// `psi` at radius `r = |xi|`.
    pub fn psi_hat(&self, r: f64) -> f64 {
        let d = (self.eta(r) - self.eta(2.0 * r)).max(0.0);
        self.psi_sign * d.cbrt()
    }

    /// `phi(2^j xi)`.
    pub fn phi_scaled(&self, j: i64, r: f64) -> f64 {
        self.phi_hat(dilate(j, r))
    }

    /// `psi(2^j xi)`.
    pub fn psi_scaled(&self, j: i64, r: f64) -> f64 {
        self.psi_hat(dilate(j, r))
    }

    /// Inner and outer radius of the `psi` support.
    pub fn psi_support(&self) -> (f64, f64) {
        (0.25, 1.0)
    }
}

/// Strictly increasing `N(j)` with `N(0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpSchedule {
    /// `N(j) = 2^j` for `j >= 1`.
    Pow2,
    /// `N(j) = step * j`.
    Linear(u32),
    /// Explicit table starting at 0.
    Table(Vec<u32>),
}

impl Default for JumpSchedule {
    fn default() -> Self {
        JumpSchedule::Pow2
    }
}

impl JumpSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            JumpSchedule::Pow2 => Ok(()),
            JumpSchedule::Linear(0) => Err(Error::InvalidParameter("linear schedule needs a positive step".into())),
            JumpSchedule::Linear(_) => Ok(()),
            JumpSchedule::Table(t) => {
                if t.first() != Some(&0) {
                    return Err(Error::InvalidParameter("schedule table must start at N(0) = 0".into()));
                }
                if t.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParameter("schedule table must be strictly increasing".into()));
                }
                Ok(())
            }
        }
    }

    pub fn n(&self, j: u32) -> i64 {
        match self {
            JumpSchedule::Pow2 if j == 0 => 0,
            JumpSchedule::Pow2 => 1i64 << j.min(62),
            JumpSchedule::Linear(step) => *step as i64 * j as i64,
            JumpSchedule::Table(t) => match t.get(j as usize) {
                Some(v) => *v as i64,
                None => {
                    let last = *t.last().expect("validated table");
                    last as i64 + (j as i64 - t.len() as i64 + 1) * 1_000
                }
            },
        }
    }

    /// Short label for manifests.
    pub fn label(&self) -> String {
        match self {
            JumpSchedule::Pow2 => "pow2".into(),
            JumpSchedule::Linear(s) => format!("linear({s})"),
            JumpSchedule::Table(t) => format!("table{t:?}"),
        }
    }
}

/// Which group of annuli a band takes relative to the kernel scale `2^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `S_{k-N(j)} - S_{k-N(j-1)}`: frequencies above the kernel scale.
    Low,
    /// `S_{k+N(j-1)} - S_{k+N(j)}`: frequencies below the kernel scale.
    High,
}

impl Side {
    pub fn label(&self) -> &'static str {
        match self {
            Side::Low => "low",
            Side::High => "high",
        }
    }
}

/// `S_j` multiplier on the lattice.
pub fn partial_sum_multiplier(spec: &GridSpec, profile: &MollifierProfile, j: i64) -> Vec<f64> {
    spec.frequency_norms().iter().map(|&r| profile.phi_scaled(j, r)).collect()
}

/// Whether `phi(2^j xi)` is nontrivial on the nonzero lattice frequencies.
pub fn is_resolvable(spec: &GridSpec, j: i64) -> bool {
    let (lo, hi) = spec.frequency_range();
    dilate(j, hi) > 0.5 && dilate(j, lo) < 1.0
}

/// `j` values for which `Delta_j` is not identically zero on the lattice.
pub fn resolvable_delta_range(spec: &GridSpec) -> RangeInclusive<i64> {
    let (lo, hi) = spec.frequency_range();
    let jlo = (0.25 / hi).log2().floor() as i64 + 1;
    let jhi = (1.0 / lo).log2().ceil() as i64 - 1;
    jlo..=jhi
}

/// `S_j f = f * phi_j`.
pub fn partial_sum(f: &GridFunction, j: i64, profile: &MollifierProfile) -> GridFunction {
    f.apply_real_multiplier(&partial_sum_multiplier(f.spec(), profile, j))
}

/// `Delta_j` multiplier `psi(2^j xi)^power`.
pub fn delta_multiplier(spec: &GridSpec, profile: &MollifierProfile, j: i64, power: u32) -> Vec<f64> {
    spec.frequency_norms().iter().map(|&r| profile.psi_scaled(j, r).powi(power as i32)).collect()
}

pub fn delta_j(f: &GridFunction, j: i64, power: u32, profile: &MollifierProfile) -> Result<GridFunction> {
    if !(1..=3).contains(&power) {
        return Err(Error::InvalidParameter(format!("Delta_j power must be 1, 2 or 3, got {power}")));
    }
    Ok(f.apply_real_multiplier(&delta_multiplier(f.spec(), profile, j, power)))
}

/// The two partial-sum indices `(a, b)` with band `= S_a - S_b`.
pub fn band_indices(k: i64, j: u32, side: Side, schedule: &JumpSchedule) -> (i64, i64) {
    assert!(j >= 1, "bands start at j = 1");
    let (nj, nprev) = (schedule.n(j), schedule.n(j - 1));
    match side {
        Side::Low => (k - nj, k - nprev),
        Side::High => (k + nprev, k + nj),
    }
}

/// Multiplier of `band_sum` at radius `r`.
pub fn band_value(profile: &MollifierProfile, k: i64, j: u32, side: Side, schedule: &JumpSchedule, r: f64) -> f64 {
    let (a, b) = band_indices(k, j, side, schedule);
    profile.phi_scaled(a, r) - profile.phi_scaled(b, r)
}

pub fn band_multiplier(spec: &GridSpec, profile: &MollifierProfile, k: i64, j: u32, side: Side, schedule: &JumpSchedule) -> Vec<f64> {
    spec.frequency_norms().iter().map(|&r| band_value(profile, k, j, side, schedule, r)).collect()
}

/// `S_{k-N(j)} f - S_{k-N(j-1)} f` (low) or `S_{k+N(j-1)} f - S_{k+N(j)} f` (high).
pub fn band_sum(
    f: &GridFunction,
    k: i64,
    j: u32,
    side: Side,
    schedule: &JumpSchedule,
    profile: &MollifierProfile,
) -> Result<GridFunction> {
    schedule.validate()?;
    if j == 0 {
        return Err(Error::InvalidParameter("band index j starts at 1".into()));
    }
    Ok(f.apply_real_multiplier(&band_multiplier(f.spec(), profile, k, j, side, schedule)))
}

/// The same band as an explicit sum of `Delta^3` pieces, skipping pieces that vanish on the lattice.
pub fn band_sum_by_pieces(
    f: &GridFunction,
    k: i64,
    j: u32,
    side: Side,
    schedule: &JumpSchedule,
    profile: &MollifierProfile,
) -> Result<GridFunction> {
    let (a, b) = band_indices(k, j, side, schedule);
    let live = resolvable_delta_range(f.spec());
    let norms = f.spec().frequency_norms();
    let mut m = vec![0.0; norms.len()];
    for i in a..b {
        if !live.contains(&i) {
            continue;
        }
        for (mi, &r) in m.iter_mut().zip(&norms) {
            *mi += profile.psi_scaled(i, r).powi(3);
        }
    }
    Ok(f.apply_real_multiplier(&m))
}

/// Outcome of the Littlewood–Paley commutator square-function measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareFunctionReport {
    pub p: f64,
    pub j_min: i64,
    pub j_max: i64,
    /// `|| (sum_j 2^{-2j} |[b, Delta_j] f|^2)^{1/2} ||_{L^p}`.
    pub square_norm: f64,
    pub grad_bound: f64,
    pub f_norm: f64,
    /// `square_norm / (grad_bound * f_norm)`.
    pub ratio: f64,
}

/// Square function of the commutators `[b, Delta_j]` (single `psi`) over `jrange`.
pub fn square_function_commutator_check(
    b: &LipschitzSymbol,
    f: &GridFunction,
    p: f64,
    jrange: RangeInclusive<i64>,
    profile: &MollifierProfile,
) -> Result<SquareFunctionReport> {
    b.values().spec().ensure_same(f.spec())?;
    let bv = b.values().re();
    let bf = f.mul_real(&bv);
    let mut acc = vec![0.0; f.spec().len()];
    for j in jrange.clone() {
        let m = delta_multiplier(f.spec(), profile, j, 1);
        let c = f.apply_real_multiplier(&m).mul_real(&bv).sub(&bf.apply_real_multiplier(&m))?;
        let s = 2f64.powi(-2 * j as i32);
        for (a, v) in acc.iter_mut().zip(c.values()) {
            *a += s * v.norm_sqr();
        }
    }
    let sq = GridFunction::from_real(*f.spec(), &acc.iter().map(|v| v.sqrt()).collect::<Vec<_>>())?;
    let square_norm = lp_norm(&sq, p, None)?;
    let f_norm = lp_norm(f, p, None)?;
    let denom = b.grad_bound() * f_norm;
    Ok(SquareFunctionReport {
        p,
        j_min: *jrange.start(),
        j_max: *jrange.end(),
        square_norm,
        grad_bound: b.grad_bound(),
        f_norm,
        ratio: if denom > 0.0 { square_norm / denom } else { 0.0 },
    })
}

/// CSV of `|xi|, phi, psi` on a radial grid, for cross-checking the profile.
pub fn profile_csv(profile: &MollifierProfile, samples: usize) -> String {
    let mut out = String::from("r,phi,psi\n");
    for i in 0..=samples {
        let r = 1.25 * i as f64 / samples as f64;
        out.push_str(&format!("{r},{},{}\n", profile.phi_hat(r), profile.psi_hat(r)));
    }
    out
}

/// CSV `index,kappa0,kappa1,value` of a lattice multiplier.
pub fn multiplier_csv(spec: &GridSpec, values: &[f64]) -> String {
    let mut out = String::from("index,kappa0,kappa1,value\n");
    for (i, v) in values.iter().enumerate() {
        let k = spec.signed_indices(i);
        out.push_str(&format!("{i},{},{},{v}\n", k[0], k[1]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Complex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(spec: GridSpec, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..spec.len()).map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        GridFunction::new(spec, v).unwrap()
    }

    fn wave(spec: GridSpec, kappa: i64) -> GridFunction {
        let xi = kappa as f64 * spec.frequency_step();
        GridFunction::sample(spec, |x| Complex::from_polar(1.0, xi * x[0])).unwrap()
    }

    #[test]
    fn profile_examples() {
        let p = MollifierProfile::new();
        assert_eq!(p.phi_hat(0.25), 1.0);
        assert_eq!(p.phi_hat(0.5), 1.0);
        assert_eq!(p.phi_hat(1.0), 0.0);
        assert_eq!(p.psi_hat(0.25), 0.0);
        assert_eq!(p.psi_hat(3.0), 0.0);
        assert!(p.psi_hat(0.5) > 0.99);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let r = rng.random_range(0.0..3.0);
            assert!((p.psi_hat(r).powi(3) + p.phi_hat(2.0 * r) - p.phi_hat(r)).abs() < 1e-14);
        }
    }

    #[test]
    fn profile_is_monotone_and_bounded() {
        let p = MollifierProfile::new();
        let mut last = 1.0;
        for i in 0..=1000 {
            let v = p.phi_hat(i as f64 / 800.0);
            assert!((0.0..=1.0).contains(&v) && v <= last);
            last = v;
        }
    }

    #[test]
    fn flipped_profile_breaks_identity() {
        let p = MollifierProfile::with_flipped_psi();
        assert!((p.psi_hat(0.6).powi(3) + p.phi_hat(1.2) - p.phi_hat(0.6)).abs() > 0.1);
    }

    #[test]
    fn partial_sum_examples() {
        let spec = make_grid(1, 256, 8.0).unwrap();
        let prof = MollifierProfile::new();
        let c = GridFunction::constant(spec, Complex::new(2.0, 0.0));
        for j in -6..6 {
            assert!(partial_sum(&c, j, &prof).sub(&c).unwrap().max_abs() < 1e-13);
        }
        let f = random(spec, 1);
        assert!(partial_sum(&f, -20, &prof).sub(&f).unwrap().max_abs() < 1e-10);
        let w = wave(spec, 10);
        let xi = 10.0 * spec.frequency_step();
        let j = (1.0 / xi).log2().ceil() as i64;
        assert!(partial_sum(&w, j, &prof).max_abs() < 1e-13);
    }

    #[test]
    fn delta_examples() {
        let spec = make_grid(1, 256, 8.0).unwrap();
        let prof = MollifierProfile::new();
        let f = random(spec, 2);
        for j in -4..3 {
            let d = delta_j(&f, j, 3, &prof).unwrap();
            let s = partial_sum(&f, j, &prof).sub(&partial_sum(&f, j + 1, &prof)).unwrap();
            assert!(d.sub(&s).unwrap().max_abs() < 1e-12);
        }
        let c = GridFunction::constant(spec, Complex::new(1.0, 0.0));
        assert!(delta_j(&c, 0, 1, &prof).unwrap().max_abs() < 1e-14);
        // a wave with |2^j xi| = 0.7 scales by psi(0.7)^3 = phi(0.7)
        let kappa = 28;
        let xi = kappa as f64 * spec.frequency_step();
        let w = wave(spec, kappa);
        let j = 0;
        let scale = 2f64.powi(j as i32) * xi;
        let d = delta_j(&w, j, 3, &prof).unwrap();
        let want = prof.phi_hat(scale) - prof.phi_hat(2.0 * scale);
        assert!(d.sub(&w.scale_real(want)).unwrap().max_abs() < 1e-12);
        assert!(delta_j(&w, 0, 4, &prof).is_err());
    }

    #[test]
    fn telescoping() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let prof = MollifierProfile::new();
        let f = random(spec, 3);
        let big_j = 6;
        let mut sum = GridFunction::zeros(spec);
        for j in -big_j..=big_j {
            sum = sum.add(&delta_j(&f, j, 3, &prof).unwrap()).unwrap();
        }
        let want = partial_sum(&f, -big_j, &prof).sub(&partial_sum(&f, big_j + 1, &prof)).unwrap();
        assert!(sum.sub(&want).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn band_examples() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let prof = MollifierProfile::new();
        let sched = JumpSchedule::Pow2;
        let f = random(spec, 4);
        let b = band_sum(&f, 1, 1, Side::Low, &sched, &prof).unwrap();
        let want = partial_sum(&f, -1, &prof).sub(&partial_sum(&f, 1, &prof)).unwrap();
        assert!(b.sub(&want).unwrap().max_abs() < 1e-12);
        for side in [Side::Low, Side::High] {
            for k in -3..3 {
                for j in 1..4 {
                    let a = band_sum(&f, k, j, side, &sched, &prof).unwrap();
                    let p = band_sum_by_pieces(&f, k, j, side, &sched, &prof).unwrap();
                    assert!(a.sub(&p).unwrap().max_abs() < 1e-12, "side {side:?} k {k} j {j}");
                }
            }
        }
    }

    #[test]
    fn bands_recover_the_function() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let prof = MollifierProfile::new();
        let sched = JumpSchedule::Pow2;
        let f = random(spec, 5);
        // remove the zero frequency, which no band reaches
        let mean = f.values().iter().sum::<Complex>() / spec.len() as f64;
        let f = f.sub(&GridFunction::constant(spec, mean)).unwrap();
        let k = 0;
        let mut sum = GridFunction::zeros(spec);
        for j in 1..=5 {
            for side in [Side::Low, Side::High] {
                sum = sum.add(&band_sum(&f, k, j, side, &sched, &prof).unwrap()).unwrap();
            }
        }
        assert!(sum.sub(&f).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn distant_annuli_are_disjoint() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let prof = MollifierProfile::new();
        let f = random(spec, 6);
        for j in -4..2 {
            let a = delta_j(&delta_j(&f, j, 1, &prof).unwrap(), j + 2, 1, &prof).unwrap();
            assert!(a.max_abs() < 1e-13);
        }
    }

    #[test]
    fn operators_commute_with_translation() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let prof = MollifierProfile::new();
        let f = random(spec, 7);
        let a = partial_sum(&f, -1, &prof).translate([1, 0]);
        let b = partial_sum(&f.translate([1, 0]), -1, &prof);
        assert!(a.sub(&b).unwrap().max_abs() < 1e-13);
        let a = delta_j(&f, -2, 2, &prof).unwrap().translate([0, 1]);
        let b = delta_j(&f.translate([0, 1]), -2, 2, &prof).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn schedule_rules() {
        let s = JumpSchedule::Pow2;
        assert_eq!((0..5).map(|j| s.n(j)).collect::<Vec<_>>(), vec![0, 2, 4, 8, 16]);
        assert!(JumpSchedule::Table(vec![0, 1, 1]).validate().is_err());
        assert!(JumpSchedule::Table(vec![1, 2]).validate().is_err());
        assert_eq!(JumpSchedule::Linear(3).n(2), 6);
    }

    #[test]
    fn resolvable_range_brackets_nonzero_pieces() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let prof = MollifierProfile::new();
        let r = resolvable_delta_range(&spec);
        for j in (r.start() - 3)..=(r.end() + 3) {
            let live = delta_multiplier(&spec, &prof, j, 1).iter().any(|v| *v != 0.0);
            assert_eq!(live, r.contains(&j), "j = {j}");
        }
    }
}
