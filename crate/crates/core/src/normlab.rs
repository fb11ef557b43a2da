//! Operator-norm estimation and the experiment suite built on it.
//!
//! Every norm here is a lower bound: at `p = 2` it is the Rayleigh quotient of
//! the current power-iteration vector, otherwise the best ratio observed over
//! random probes.

use std::f64::consts::{LN_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_rate, FitScale, FittedRate};
use crate::grid::{lp_norm_with, weighted_inner_product_with, Complex, GridFunction, GridSpec};
use crate::lp::{JumpSchedule, MollifierProfile, Side};
use crate::operators::{commutator_piece, BandOperator, KernelBank, LinearOperator, LipschitzSymbol};
use crate::sphere::SphereSymbol;
use crate::weights::{epsilon_of, report_with, ApReport, CubeFamily, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    PowerIteration,
    RandomProbe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub p: f64,
    pub weight: String,
    pub trials: usize,
    pub method: NormMethod,
    /// Last relative change of the Rayleigh quotient (0 for random probing).
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Always true: the value is attained by an explicit vector.
    pub lower_bound: bool,
}

/// Stopping rule for the power iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormOptions {
    pub trials: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { trials: 2, max_iterations: 300, tolerance: 1e-6 }
    }
}

/// `f -> c f`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledIdentity {
    pub spec: GridSpec,
    pub c: f64,
}

impl LinearOperator for ScaledIdentity {
    fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn apply(&self, f: &GridFunction) -> GridFunction {
        f.scale_real(self.c)
    }

    fn apply_adjoint(&self, f: &GridFunction) -> GridFunction {
        f.scale_real(self.c)
    }
}

/// Smooth radial window equal to 1 near the origin and 0 for `|x| >= L/4`.
fn window(spec: &GridSpec) -> Vec<f64> {
    let r0 = 0.25 * spec.half_width();
    (0..spec.len())
        .map(|i| {
            let r = spec.radius(i) / r0;
            if r >= 1.0 {
                0.0
            } else {
                (0.5 * PI * r).cos().powi(2)
            }
        })
        .collect()
}

/// Complex Gaussian field band-limited to `|kappa| < M/4`, windowed to `|x| <= L/4`.
pub fn probe(spec: &GridSpec, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cut = (spec.points() / 4) as i64;
    let values: Vec<Complex> = (0..spec.len())
        .map(|i| {
            let k = spec.signed_indices(i);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if k[0].abs() < cut && k[1].abs() < cut {
                Complex::new(re, im)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    let f = GridFunction::new(*spec, values).expect("finite").idft();
    f.mul_real(&window(spec))
}

/// Norm of `op` on `L^p(w)`; `w` holds lattice weight values (`None` for Lebesgue measure).
pub fn opnorm(op: &dyn LinearOperator, p: f64, w: Option<&[f64]>, weight: &str, options: &NormOptions, seed: u64) -> Result<NormEstimate> {
    if !(p > 1.0 && p < f64::INFINITY) {
        return Err(Error::InvalidParameter(format!("operator norms need 1 < p < inf, got {p}")));
    }
    if options.trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let spec = *op.spec();
    if let Some(w) = w {
        if w.len() != spec.len() {
            return Err(Error::GridMismatch(format!("weight has {} samples, grid has {}", w.len(), spec.len())));
        }
        if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveWeight { index, value });
        }
    }
    if p == 2.0 {
        let runs = (0..options.trials)
            .into_par_iter()
            .map(|t| power_iteration(op, w, options, seed.wrapping_add(t as u64)))
            .collect::<Result<Vec<_>>>()?;
        let best = runs
            .iter()
            .fold(None::<&(f64, f64, bool, usize)>, |acc, r| match acc {
                Some(a) if a.0 >= r.0 => Some(a),
                _ => Some(r),
            })
            .expect("trials > 0");
        return Ok(NormEstimate {
            value: best.0,
            p,
            weight: weight.to_string(),
            trials: options.trials,
            method: NormMethod::PowerIteration,
            residual: best.1,
            converged: best.2,
            iterations: best.3,
            lower_bound: true,
        });
    }
    let ratios = (0..options.trials)
        .into_par_iter()
        .map(|t| {
            let f = probe(&spec, seed.wrapping_add(t as u64));
            let num = lp_norm_with(&op.apply(&f), p, w)?;
            let den = lp_norm_with(&f, p, w)?;
            Ok(if den > 0.0 { num / den } else { 0.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(NormEstimate {
        value: ratios.iter().cloned().fold(0.0, f64::max),
        p,
        weight: weight.to_string(),
        trials: options.trials,
        method: NormMethod::RandomProbe,
        residual: 0.0,
        converged: true,
        iterations: 1,
        lower_bound: true,
    })
}

/// Power iteration on `T* w T` in `L^2(w)`; returns `(norm, residual, converged, iterations)`.
fn power_iteration(op: &dyn LinearOperator, w: Option<&[f64]>, options: &NormOptions, seed: u64) -> Result<(f64, f64, bool, usize)> {
    let inv: Option<Vec<f64>> = w.map(|w| w.iter().map(|v| 1.0 / v).collect());
    let mut f = probe(op.spec(), seed);
    let mut best = 0.0f64;
    let mut last = 0.0f64;
    let mut residual = f64::INFINITY;
    for it in 1..=options.max_iterations {
        let ff = weighted_inner_product_with(&f, &f, w)?.re;
        if !(ff > 0.0) {
            return Ok((best, 0.0, true, it));
        }
        let u = op.apply(&f);
        let uu = weighted_inner_product_with(&u, &u, w)?.re;
        let q = (uu / ff).sqrt();
        best = best.max(q);
        if q == 0.0 {
            return Ok((0.0, 0.0, true, it));
        }
        residual = (q - last).abs() / q;
        if residual < options.tolerance {
            return Ok((best, residual, true, it));
        }
        last = q;
        // next iterate: W^{-1} T* W T f, the L^2(w) adjoint composition
        let wu = match w {
            Some(w) => u.mul_real(w),
            None => u,
        };
        let v = op.apply_adjoint(&wu);
        let next = match &inv {
            Some(inv) => v.mul_real(inv),
            None => v,
        };
        let scale = weighted_inner_product_with(&next, &next, w)?.re.sqrt();
        f = next.scale_real(1.0 / scale);
    }
    Ok((best, residual, false, options.max_iterations))
}

/// Shared inputs of the commutator experiments.
#[derive(Clone, Debug)]
pub struct CommutatorSetting {
    pub b: LipschitzSymbol,
    pub bank: KernelBank,
    pub schedule: JumpSchedule,
    pub profile: MollifierProfile,
    /// Exponent of the `L^q` norm of `Omega` used in the bound predictors.
    pub q: f64,
}

impl CommutatorSetting {
    pub fn new(b: LipschitzSymbol, omega: &SphereSymbol, schedule: JumpSchedule) -> Result<Self> {
        let spec = *b.values().spec();
        let bank = KernelBank::new(&spec, omega, spec.dim() + 1)?;
        Ok(Self { b, bank, schedule, profile: MollifierProfile::new(), q: f64::INFINITY })
    }

    pub fn spec(&self) -> &GridSpec {
        self.bank.spec()
    }

    pub fn omega(&self) -> &SphereSymbol {
        self.bank.omega()
    }

    pub fn omega_norm(&self) -> Result<f64> {
        self.omega().lq_norm(self.q)
    }

    /// `C_Omega = sum_k [b, T_k]` over every band of the bank.
    pub fn full(&self) -> BandOperator {
        BandOperator::commutator(&self.b, self.bank.full_multiplier(), "C")
    }

    pub fn piece(&self, j: u32, side: Side) -> Result<BandOperator> {
        commutator_piece(&self.b, &self.bank, j, side, &self.schedule, &self.profile)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub j: u32,
    pub n_j: i64,
    pub n_prev: i64,
    pub estimate: NormEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayResult {
    pub side: Side,
    pub rows: Vec<DecayRow>,
    /// `log2 norm` against `N(j-1)`; a negative slope is decay.
    pub fit: Option<FittedRate>,
    pub strictly_decreasing: bool,
}

impl DecayResult {
    /// `-slope`, the fitted decay rate per unit of `N(j-1)`.
    pub fn rate(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| -f.slope)
    }
}

fn weight_values(w: Option<&Weight>, spec: &GridSpec) -> Result<(Option<Vec<f64>>, String)> {
    match w {
        None => Ok((None, "unit".into())),
        Some(w) if w.is_unit() => Ok((None, w.descriptor())),
        Some(w) => Ok((Some(w.values_on(spec)?), w.descriptor())),
    }
}

/// Norms of `[b, T_{side,j}^N]` for `j = 1..=jmax` and their decay fit against `N(j-1)`.
pub fn decay_experiment(
    setting: &CommutatorSetting,
    side: Side,
    jmax: u32,
    p: f64,
    w: Option<&Weight>,
    options: &NormOptions,
    seed: u64,
) -> Result<DecayResult> {
    if jmax == 0 {
        return Err(Error::InvalidParameter("jmax must be at least 1".into()));
    }
    let (wv, label) = weight_values(w, setting.spec())?;
    let mut rows = Vec::new();
    for j in 1..=jmax {
        let op = setting.piece(j, side)?;
        let estimate = opnorm(&op, p, wv.as_deref(), &label, options, seed)?;
        rows.push(DecayRow { j, n_j: setting.schedule.n(j), n_prev: setting.schedule.n(j - 1), estimate });
    }
    let strictly_decreasing = rows.windows(2).all(|r| r[1].estimate.value < r[0].estimate.value);
    let x: Vec<f64> = rows.iter().map(|r| r.n_prev as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.estimate.value).collect();
    let fit = match fit_rate(&format!("decay_{}", side.label()), "N(j-1)", FitScale::LogLinear, &x, &y) {
        Ok(f) => Some(f),
        Err(Error::InsufficientSamples { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(DecayResult { side, rows, fit, strictly_decreasing })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub j: u32,
    pub n_j: i64,
    pub norm: f64,
    /// `norm / ((1 + N(j)) {w}_{A_p} ||Omega|| ||grad b||)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthResult {
    pub side: Side,
    pub report: ApReport,
    pub rows: Vec<GrowthRow>,
    pub max_ratio: f64,
    /// `log2 norm` against `log2 (1 + N(j))`; a slope at most 1 is at most linear growth.
    pub fit: Option<FittedRate>,
}

/// Weighted norms of the pieces normalized by the linear-in-`N(j)` bound.
pub fn growth_experiment(
    setting: &CommutatorSetting,
    side: Side,
    jmax: u32,
    p: f64,
    w: &Weight,
    report: &ApReport,
    options: &NormOptions,
    seed: u64,
) -> Result<GrowthResult> {
    let decay = decay_experiment(setting, side, jmax, p, Some(w), options, seed)?;
    let scale = report.curly * setting.omega_norm()? * setting.b.grad_bound();
    let rows: Vec<GrowthRow> = decay
        .rows
        .iter()
        .map(|r| {
            let denom = (1.0 + r.n_j as f64) * scale;
            GrowthRow {
                j: r.j,
                n_j: r.n_j,
                norm: r.estimate.value,
                ratio: if denom > 0.0 { r.estimate.value / denom } else { 0.0 },
            }
        })
        .collect();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let x: Vec<f64> = rows.iter().map(|r| 1.0 + r.n_j as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.norm).collect();
    let fit = fit_rate(&format!("growth_{}", side.label()), "1+N(j)", FitScale::LogLog, &x, &y).ok();
    Ok(GrowthResult { side, report: report.clone(), rows, max_ratio, fit })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub alpha: f64,
    pub report: ApReport,
    pub estimate: NormEstimate,
    pub predicted: f64,
    /// `estimate / predicted`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub p: f64,
    pub rows: Vec<ScalingRow>,
    /// `log2 ||C||` against `log2 [w]_{A_p}`.
    pub fit: FittedRate,
    /// `max ratio / min ratio` over the weights.
    pub ratio_spread: f64,
}

/// `||C_Omega||_{L^p(|x|^alpha)}` for each `alpha` with its weight report and predicted bound.
pub fn weight_scaling_experiment(
    setting: &CommutatorSetting,
    alphas: &[f64],
    p: f64,
    family: &CubeFamily,
    ainf_family: &CubeFamily,
    options: &NormOptions,
    seed: u64,
) -> Result<ScalingResult> {
    let spec = *setting.spec();
    let m = setting.omega().moments().max_abs();
    if m > 1e-10 {
        return Err(Error::CancellationViolated(m));
    }
    let op = setting.full();
    let omega_norm = setting.omega_norm()?;
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let w = Weight::power(alpha, spec.dim())?;
        w.check_admissible(p)?;
        let report = report_with(&w, p, family, ainf_family)?;
        let wv = w.values_on(&spec)?;
        let estimate = opnorm(&op, p, Some(&wv), &w.descriptor(), options, seed)?;
        let predicted = predicted_bound_thm11(&report, omega_norm, setting.b.grad_bound());
        let ratio = if predicted > 0.0 { estimate.value / predicted } else { 0.0 };
        rows.push(ScalingRow { alpha, report, estimate, predicted, ratio });
    }
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let x: Vec<f64> = rows.iter().map(|r| r.report.ap).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.estimate.value).collect();
    let fit = fit_rate("scaling", "[w]_A_p", FitScale::LogLog, &x, &y)?;
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
    Ok(ScalingResult { p, rows, fit, ratio_spread: hi / lo })
}

/// `||Omega||_{L^q} {w}_{A_p} (w)_{A_p} ||grad b||`, without absolute constants.
pub fn predicted_bound_thm11(report: &ApReport, omega_norm: f64, grad_norm: f64) -> f64 {
    omega_norm * report.curly * report.round * grad_norm
}

/// `(||T||_{L^2} + C_K + ||omega||_Dini) {w}_{A_p}`.
pub fn hrt_bound(l2norm: f64, c_k: f64, dini: f64, curly: f64) -> f64 {
    (l2norm + c_k + dini) * curly
}

/// `M0^lambda M1^{1 - lambda}`.
pub fn sw_combine(m0: f64, m1: f64, lambda: f64) -> f64 {
    m0.powf(lambda) * m1.powf(1.0 - lambda)
}

/// The two exponent assignments of the change-of-measure interpolation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sw1Variant {
    /// `k0^{1/(1+eps)} k1^{eps/(1+eps)}`.
    Statement,
    /// `k0^{eps/(1+eps)} k1^{1/(1+eps)}`.
    Proof,
}

pub fn sw1_combine(k0: f64, k1: f64, eps: f64, variant: Sw1Variant) -> f64 {
    let (a, b) = (1.0 / (1.0 + eps), eps / (1.0 + eps));
    match variant {
        Sw1Variant::Statement => k0.powf(a) * k1.powf(b),
        Sw1Variant::Proof => k0.powf(b) * k1.powf(a),
    }
}

/// `sum_{j >= 1} (1 + N(j)) 2^{-gamma N(j-1) / r}`, summed until the terms are negligible.
pub fn geometric_sum(gamma: f64, r: f64, schedule: &JumpSchedule) -> f64 {
    let mut total = 0.0;
    for j in 1..=4096u32 {
        let term = (1.0 + schedule.n(j) as f64) * (-gamma * schedule.n(j - 1) as f64 / r).exp2();
        total += term;
        if term < 1e-17 * total || schedule.n(j) > 1 << 52 {
            break;
        }
    }
    total
}

/// `C` with `geometric_sum(gamma, r, 2^j) <= C r` for all `r >= 1`.
pub fn geometric_sum_constant(gamma: f64) -> f64 {
    6.0 / (gamma * LN_2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricSumRow {
    pub r: f64,
    pub sum: f64,
    pub ratio: f64,
}

pub fn geometric_sum_table(gamma: f64, rs: &[f64], schedule: &JumpSchedule) -> Vec<GeometricSumRow> {
    rs.iter()
        .map(|&r| {
            let sum = geometric_sum(gamma, r, schedule);
            GeometricSumRow { r, sum, ratio: sum / r }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub j: u32,
    pub p: f64,
    pub weight: String,
    pub epsilon: f64,
    /// Unweighted norm of the piece.
    pub k0: f64,
    /// Norm in `L^p(w^{1+eps})`.
    pub k1: f64,
    /// Norm in `L^p(w)`.
    pub measured: f64,
    pub combined_proof: f64,
    pub combined_statement: f64,
    pub holds: bool,
    pub gamma: f64,
    pub geometric: Vec<GeometricSumRow>,
    pub geometric_constant: f64,
    pub geometric_holds: bool,
}

/// Compares the measured `L^p(w)` norm of `[b, T_{1,j}^N]` with the interpolation of its
/// unweighted and `w^{1+eps}` norms. The lattice weight `w^{1+eps}` is the pointwise power
/// of the lattice values of `w`, so the interpolation identity is exact on the grid.
#[allow(clippy::too_many_arguments)]
pub fn interpolation_consistency_experiment(
    setting: &CommutatorSetting,
    j: u32,
    p: f64,
    w: &Weight,
    report: &ApReport,
    c_n: f64,
    gamma: f64,
    tolerance: f64,
    options: &NormOptions,
    seed: u64,
) -> Result<InterpolationReport> {
    let spec = *setting.spec();
    let eps = epsilon_of(report, c_n)?;
    let op = setting.piece(j, Side::Low)?;
    let base = w.values_on(&spec)?;
    let over: Vec<f64> = base.iter().map(|v| v.powf(1.0 + eps)).collect();
    if over.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::WeightOverflow(format!("w^(1+{eps}) leaves the floating-point range")));
    }
    let k0 = opnorm(&op, p, None, "unit", options, seed)?.value;
    let k1 = opnorm(&op, p, Some(&over), &format!("{}^(1+eps)", w.descriptor()), options, seed)?.value;
    let measured = opnorm(&op, p, Some(&base), &w.descriptor(), options, seed)?.value;
    let combined_proof = sw1_combine(k0, k1, eps, Sw1Variant::Proof);
    let combined_statement = sw1_combine(k0, k1, eps, Sw1Variant::Statement);
    let geometric = geometric_sum_table(gamma, &[1.0, 2.0, 4.0, 8.0], &JumpSchedule::Pow2);
    let geometric_constant = geometric_sum_constant(gamma);
    let geometric_holds = geometric.iter().all(|g| g.ratio <= geometric_constant);
    Ok(InterpolationReport {
        j,
        p,
        weight: w.descriptor(),
        epsilon: eps,
        k0,
        k1,
        measured,
        combined_proof,
        combined_statement,
        holds: measured <= combined_proof * (1.0 + tolerance),
        gamma,
        geometric,
        geometric_constant,
        geometric_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::lp::delta_multiplier;

    #[test]
    fn identity_and_scalar() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let id = ScaledIdentity { spec, c: 1.0 };
        let w = Weight::power(0.5, 2).unwrap().values_on(&spec).unwrap();
        for p in [1.5, 2.0, 3.0] {
            for wv in [None, Some(&w[..])] {
                let e = opnorm(&id, p, wv, "w", &NormOptions::default(), 1).unwrap();
                assert!((e.value - 1.0).abs() < 1e-6, "{e:?}");
            }
        }
        let two = ScaledIdentity { spec, c: 2.0 };
        let e = opnorm(&two, 2.0, Some(&w), "w", &NormOptions::default(), 1).unwrap();
        assert!((e.value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn single_band_norm_is_the_multiplier_maximum() {
        let spec = make_grid(1, 64, 4.0).unwrap();
        let prof = MollifierProfile::new();
        let m = delta_multiplier(&spec, &prof, -1, 1);
        let top = m.iter().cloned().fold(0.0, f64::max);
        let op = BandOperator::multiplier(spec, m.iter().map(|&v| Complex::new(v, 0.0)).collect(), "delta");
        let opts = NormOptions { trials: 1, max_iterations: 5000, tolerance: 1e-12 };
        let e = opnorm(&op, 2.0, None, "unit", &opts, 7).unwrap();
        assert!(e.value <= top * (1.0 + 1e-12));
        assert!((e.value - top).abs() < 1e-6 * top, "{} vs {top}", e.value);
    }

    #[test]
    fn rejects_bad_exponent_and_weight() {
        let spec = make_grid(1, 16, 1.0).unwrap();
        let id = ScaledIdentity { spec, c: 1.0 };
        assert!(opnorm(&id, 1.0, None, "", &NormOptions::default(), 0).is_err());
        let mut w = vec![1.0; 16];
        w[3] = 0.0;
        assert!(matches!(
            opnorm(&id, 2.0, Some(&w), "", &NormOptions::default(), 0),
            Err(Error::NonPositiveWeight { index: 3, .. })
        ));
    }

    #[test]
    fn probes_are_windowed_and_deterministic() {
        let spec = make_grid(2, 64, 4.0).unwrap();
        let a = probe(&spec, 5);
        assert_eq!(a, probe(&spec, 5));
        assert_ne!(a, probe(&spec, 6));
        for (i, v) in a.values().iter().enumerate() {
            if spec.radius(i) >= 1.0 {
                assert_eq!(*v, Complex::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn combinator_examples() {
        assert_eq!(sw_combine(4.0, 9.0, 0.5), 6.0);
        assert!((sw1_combine(4.0, 9.0, 1.0, Sw1Variant::Proof) - 6.0).abs() < 1e-15);
        for v in [Sw1Variant::Proof, Sw1Variant::Statement] {
            assert!((sw1_combine(3.5, 3.5, 0.3, v) - 3.5).abs() < 1e-14);
        }
        assert_eq!(sw_combine(2.0, 5.0, 1.0), 2.0);
        assert_eq!(sw_combine(2.0, 5.0, 0.0), 5.0);
        assert!((sw1_combine(2.0, 5.0, 1e-12, Sw1Variant::Proof) - 5.0).abs() < 1e-10);
        assert!((sw1_combine(2.0, 5.0, 1e12, Sw1Variant::Proof) - 2.0).abs() < 1e-10);
        assert!(sw1_combine(2.0, 5.0, 0.4, Sw1Variant::Proof) <= sw1_combine(2.1, 5.0, 0.4, Sw1Variant::Proof));
        assert_eq!(hrt_bound(1.0, 0.0, 0.0, 1.0), 1.0);
        assert_eq!(hrt_bound(1.0, 2.0, 3.0, 2.0), 12.0);
    }

    #[test]
    fn geometric_sum_against_direct_summation() {
        let gamma = 0.5;
        let c = geometric_sum_constant(gamma);
        for r in [1.0, 2.0, 4.0, 8.0, 64.0] {
            let direct: f64 = (1..60).map(|j: i32| (1.0 + 2f64.powi(j)) * (-gamma * if j == 1 { 0.0 } else { 2f64.powi(j - 1) } / r).exp2()).sum();
            let s = geometric_sum(gamma, r, &JumpSchedule::Pow2);
            assert!((s - direct).abs() < 1e-12 * direct);
            assert!(s <= c * r);
        }
    }

    #[test]
    fn predicted_bound_composition() {
        let r = ApReport {
            p: 2.0,
            weight: "unit".into(),
            ap: 1.0,
            ainf_w: 1.0,
            ainf_sigma: 1.0,
            round: 1.0,
            curly: 1.0,
            family_hash: String::new(),
            family_size: 0,
        };
        assert_eq!(predicted_bound_thm11(&r, 1.0, 1.0), 1.0);
        assert_eq!(predicted_bound_thm11(&r, 3.0, 2.0), 2.0 * predicted_bound_thm11(&r, 3.0, 1.0));
    }
}
