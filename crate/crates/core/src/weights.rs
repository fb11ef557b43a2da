//! Muckenhoupt weight characteristics on the lattice.
//!
//! Cubes are unions of lattice cells `[x - h/2, x + h/2)^n` addressed in
//! *natural* order (cell `a` has signed coordinate `a - M/2`). Integrals over
//! cubes come from a summed-area table: prefix sums of `w h^n` for sampled
//! weights, and the exact integral of `|x|^alpha` from the origin to each cell
//! corner for power weights, so power-weight averages carry no quadrature
//! error beyond the corner integrals themselves.
//!
//! Every characteristic is a maximum over a finite [`CubeFamily`] and hence a
//! lower bound for the supremum over all cubes.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::quad::gauss_legendre_on;

/// A positive weight.
#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    /// Positive real samples on a lattice.
    Sampled(GridFunction),
    /// `|x|^alpha` in dimension `dim`.
    Power { alpha: f64, dim: usize },
}

impl Weight {
    /// Validates that every sample is real, finite and positive.
    pub fn sampled(f: GridFunction) -> Result<Self> {
        for (index, v) in f.values().iter().enumerate() {
            if v.im != 0.0 || !(v.re > 0.0) || !v.re.is_finite() {
                return Err(Error::NonPositiveWeight { index, value: v.re });
            }
        }
        Ok(Weight::Sampled(f))
    }

    pub fn power(alpha: f64, dim: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !alpha.is_finite() || alpha <= -(dim as f64) {
            return Err(Error::InadmissibleWeight { alpha, p: f64::NAN, dim });
        }
        Ok(Weight::Power { alpha, dim })
    }

    pub fn unit(spec: GridSpec) -> Self {
        Weight::Sampled(GridFunction::constant(spec, 1.0.into()))
    }

    pub fn is_unit(&self) -> bool {
        match self {
            Weight::Sampled(f) => f.values().iter().all(|v| v.re == 1.0),
            Weight::Power { alpha, .. } => *alpha == 0.0,
        }
    }

    /// Short human-readable descriptor.
    pub fn descriptor(&self) -> String {
        match self {
            Weight::Sampled(f) if self.is_unit() => format!("unit(n={})", f.spec().dim()),
            Weight::Sampled(f) => format!("sampled(n={},M={})", f.spec().dim(), f.spec().points()),
            Weight::Power { alpha, dim } => format!("power(alpha={alpha},n={dim})"),
        }
    }

    /// Checks `-n < alpha < n (p - 1)` for power weights.
    pub fn check_admissible(&self, p: f64) -> Result<()> {
        if let Weight::Power { alpha, dim } = *self {
            let n = dim as f64;
            if !(alpha > -n && alpha < n * (p - 1.0)) {
                return Err(Error::InadmissibleWeight { alpha, p, dim });
            }
        }
        Ok(())
    }

    /// Per-cell values on a lattice: the samples, or exact cell averages of `|x|^alpha`.
    pub fn values_on(&self, spec: &GridSpec) -> Result<Vec<f64>> {
        match self {
            Weight::Sampled(f) => {
                f.spec().ensure_same(spec)?;
                Ok(f.re())
            }
            Weight::Power { dim, .. } if *dim != spec.dim() => {
                Err(Error::GridMismatch(format!("power weight of dimension {dim} on a {}-d grid", spec.dim())))
            }
            Weight::Power { .. } => {
                let sat = SummedArea::new(self, spec)?;
                let h = spec.cell_volume();
                let half = (spec.points() / 2) as i64;
                Ok((0..spec.len())
                    .map(|idx| {
                        let s = spec.signed_indices(idx);
                        let a = (s[0] + half) as usize;
                        let b = if spec.dim() == 2 { (s[1] + half) as usize } else { 0 };
                        sat.rect(a, a + 1, b, b + 1) / h
                    })
                    .collect())
            }
        }
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        match self {
            Weight::Sampled(f) => Weight::sampled(f.scale_real(c)),
            Weight::Power { .. } => Err(Error::InvalidParameter("power weights are not rescaled; sample them first".into())),
        }
    }

    /// Samples the weight at cell averages on `spec`.
    pub fn to_sampled(&self, spec: &GridSpec) -> Result<Self> {
        let values = self.values_on(spec)?;
        Weight::sampled(GridFunction::from_real(*spec, &values)?)
    }
}

/// `w^{1 - p'}`.
pub fn dual_weight(w: &Weight, p: f64) -> Result<Weight> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("dual weight needs p > 1, got {p}")));
    }
    let e = 1.0 - conjugate_exponent(p);
    match w {
        Weight::Power { alpha, dim } => Ok(Weight::Power { alpha: alpha * e, dim: *dim }),
        Weight::Sampled(f) => {
            let mut out = Vec::with_capacity(f.values().len());
            for (i, v) in f.values().iter().enumerate() {
                let d = v.re.powf(e);
                if !(d.is_finite() && d > 0.0) {
                    return Err(Error::WeightOverflow(format!("w^(1-p') = {d} at lattice index {i} (w = {})", v.re)));
                }
                out.push(d);
            }
            Weight::sampled(GridFunction::from_real(*f.spec(), &out)?)
        }
    }
}

/// `p' = p / (p - 1)`.
pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `int_0^t (1 + u^2)^{alpha/2} du`.
fn ray_integral(alpha: f64, t: f64, nodes: &(Vec<f64>, Vec<f64>), log_nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    let f = |u: f64| (1.0 + u * u).powf(0.5 * alpha);
    let head = t.min(1.0);
    let (x, w) = nodes;
    let mut sum: f64 = x.iter().zip(w).map(|(x, w)| w * f(0.5 * head * (x + 1.0))).sum::<f64>() * 0.5 * head;
    if t > 1.0 {
        let top = t.ln();
        let (x, w) = log_nodes;
        sum += x
            .iter()
            .zip(w)
            .map(|(x, w)| {
                let s = 0.5 * top * (x + 1.0);
                let u = s.exp();
                w * f(u) * u
            })
            .sum::<f64>()
            * 0.5
            * top;
    }
    sum
}

/// `int_0^a int_0^b |(x, y)|^alpha dy dx` for `a, b >= 0`.
fn quadrant_integral(alpha: f64, a: f64, b: f64, nodes: &(Vec<f64>, Vec<f64>), log_nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let e = alpha + 2.0;
    (a.powf(e) * ray_integral(alpha, b / a, nodes, log_nodes) + b.powf(e) * ray_integral(alpha, a / b, nodes, log_nodes)) / e
}

/// Summed-area table of a weight over the lattice cells in natural order.
///
/// One-dimensional weights use a degenerate second axis with a single cell.
#[derive(Clone, Debug)]
pub struct SummedArea {
    m: usize,
    cols: usize,
    table: Vec<f64>,
    cell: f64,
}

impl SummedArea {
    pub fn new(w: &Weight, spec: &GridSpec) -> Result<Self> {
        let m = spec.points();
        let dim = spec.dim();
        let cols = if dim == 2 { m + 1 } else { 2 };
        let h = spec.spacing();
        let corner = |c: usize| (c as f64 - (m / 2) as f64 - 0.5) * h;
        let mut table = vec![0.0; (m + 1) * cols];
        match w {
            Weight::Power { alpha, dim: wd } => {
                if *wd != dim {
                    return Err(Error::GridMismatch(format!("power weight of dimension {wd} on a {dim}-d grid")));
                }
                let alpha = *alpha;
                if alpha <= -(dim as f64) {
                    return Err(Error::InadmissibleWeight { alpha, p: f64::NAN, dim });
                }
                if dim == 1 {
                    for c in 0..=m {
                        let x = corner(c);
                        table[c * cols + 1] = x.signum() * x.abs().powf(alpha + 1.0) / (alpha + 1.0);
                    }
                } else {
                    let nodes = gauss_legendre_on(24, -1.0, 1.0);
                    let log_nodes = gauss_legendre_on(48, -1.0, 1.0);
                    let q: Vec<Vec<f64>> = (0..=m)
                        .into_par_iter()
                        .map(|i| {
                            let x = corner(i);
                            (0..=m)
                                .map(|j| {
                                    let y = corner(j);
                                    x.signum() * y.signum() * quadrant_integral(alpha, x.abs(), y.abs(), &nodes, &log_nodes)
                                })
                                .collect()
                        })
                        .collect();
                    for (i, row) in q.into_iter().enumerate() {
                        table[i * cols..(i + 1) * cols].copy_from_slice(&row);
                    }
                }
            }
            Weight::Sampled(f) => {
                f.spec().ensure_same(spec)?;
                let hv = spec.cell_volume();
                let half = (m / 2) as i64;
                let rows = if dim == 2 { m } else { 1 };
                for a in 0..m {
                    for b in 0..rows {
                        let s = [a as i64 - half, if dim == 2 { b as i64 - half } else { 0 }];
                        let v = f.values()[spec.flat(s)].re;
                        if !(v > 0.0) {
                            return Err(Error::NonPositiveWeight { index: spec.flat(s), value: v });
                        }
                        table[(a + 1) * cols + b + 1] = v * hv;
                    }
                }
                for a in 1..=m {
                    for b in 1..cols {
                        table[a * cols + b] +=
                            table[(a - 1) * cols + b] + table[a * cols + b - 1] - table[(a - 1) * cols + b - 1];
                    }
                }
            }
        }
        Ok(Self { m, cols, table, cell: spec.cell_volume() })
    }

    /// Integral over natural cell ranges `[a0, a1) x [b0, b1)` (use `b = 0..1` in 1D).
    #[inline]
    pub fn rect(&self, a0: usize, a1: usize, b0: usize, b1: usize) -> f64 {
        let c = self.cols;
        let t = &self.table;
        t[a1 * c + b1] - t[a0 * c + b1] - t[a1 * c + b0] + t[a0 * c + b0]
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell
    }

    pub fn points(&self) -> usize {
        self.m
    }
}

/// Axis-parallel cube of `side` cells starting at natural cell `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub start: [usize; 2],
    pub side: usize,
}

impl Cube {
    /// Physical center and side length on `spec`.
    pub fn geometry(&self, spec: &GridSpec) -> ([f64; 2], f64) {
        let h = spec.spacing();
        let half = (spec.points() / 2) as f64;
        let c = |s: usize| (s as f64 + 0.5 * self.side as f64 - half - 0.5) * h;
        let center = [c(self.start[0]), if spec.dim() == 2 { c(self.start[1]) } else { 0.0 }];
        (center, self.side as f64 * h)
    }
}

/// Finite family of lattice-aligned cubes standing in for "all cubes".
#[derive(Clone, Debug, PartialEq)]
pub struct CubeFamily {
    spec: GridSpec,
    cubes: Vec<Cube>,
}

fn positions(m: usize, side: usize, step: usize) -> Vec<usize> {
    let last = m - side;
    let mut out: Vec<usize> = (0..=last).step_by(step).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

impl CubeFamily {
    pub fn from_cubes(spec: GridSpec, mut cubes: Vec<Cube>) -> Result<Self> {
        let m = spec.points();
        for c in &cubes {
            let inside = c.side >= 1
                && c.start[0] + c.side <= m
                && if spec.dim() == 2 { c.start[1] + c.side <= m } else { c.start[1] == 0 };
            if !inside {
                return Err(Error::CubeOutsideDomain(format!("{c:?} on M = {m}")));
            }
        }
        cubes.sort_unstable();
        cubes.dedup();
        if cubes.is_empty() {
            return Err(Error::InvalidParameter("empty cube family".into()));
        }
        Ok(Self { spec, cubes })
    }

    /// Sides `2^t` and `2^t + 1` cells translated by `max(1, side/3)`, plus the centered family.
    pub fn dyadic(spec: GridSpec) -> Self {
        Self::dyadic_up_to(spec, spec.points())
    }

    /// [`CubeFamily::dyadic`] restricted to sides of at most `max_side` cells.
    pub fn dyadic_up_to(spec: GridSpec, max_side: usize) -> Self {
        let m = spec.points();
        let max_side = max_side.clamp(1, m);
        let mut cubes = Vec::new();
        let mut sides = Vec::new();
        let mut s = 1;
        while s <= max_side {
            sides.push(s);
            if s + 1 <= max_side && s > 1 {
                sides.push(s + 1);
            }
            s *= 2;
        }
        for side in sides {
            let pos = positions(m, side, (side / 3).max(1));
            for &a in &pos {
                if spec.dim() == 1 {
                    cubes.push(Cube { start: [a, 0], side });
                } else {
                    for &b in &pos {
                        cubes.push(Cube { start: [a, b], side });
                    }
                }
            }
        }
        cubes.extend(Self::centered_cubes(&spec, max_side));
        Self::from_cubes(spec, cubes).expect("generated cubes lie in the domain")
    }

    /// Cubes of odd side `2r + 1` centered at the origin cell, radii roughly geometric.
    pub fn centered(spec: GridSpec) -> Self {
        Self::from_cubes(spec, Self::centered_cubes(&spec, spec.points())).expect("generated cubes lie in the domain")
    }

    fn centered_cubes(spec: &GridSpec, max_side: usize) -> Vec<Cube> {
        let m = spec.points();
        let o = m / 2;
        let mut radii = vec![0usize];
        let mut r = 1usize;
        while 2 * r + 1 <= max_side && r <= o - 1 {
            radii.push(r);
            let next = ((r as f64) * 1.25).ceil() as usize;
            r = next.max(r + 1);
        }
        radii
            .into_iter()
            .filter(|&r| 2 * r < m && 2 * r + 1 <= max_side)
            .map(|r| Cube { start: [o - r, if spec.dim() == 2 { o - r } else { 0 }], side: 2 * r + 1 })
            .collect()
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        let mut cubes = self.cubes.clone();
        cubes.extend_from_slice(&other.cubes);
        Self::from_cubes(self.spec, cubes)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// SHA-256 over the grid and the sorted cube list.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.spec.dim() as u64).to_le_bytes());
        h.update((self.spec.points() as u64).to_le_bytes());
        h.update(self.spec.half_width().to_le_bytes());
        for c in &self.cubes {
            h.update((c.start[0] as u64).to_le_bytes());
            h.update((c.start[1] as u64).to_le_bytes());
            h.update((c.side as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    fn b_range(&self, c: &Cube) -> (usize, usize) {
        if self.spec.dim() == 2 {
            (c.start[1], c.start[1] + c.side)
        } else {
            (0, 1)
        }
    }

    fn volume(&self, c: &Cube) -> f64 {
        (c.side as f64).powi(self.spec.dim() as i32) * self.spec.cell_volume()
    }
}

fn ap_over(w: &SummedArea, sigma: &SummedArea, family: &CubeFamily, p: f64) -> f64 {
    family
        .cubes
        .par_iter()
        .map(|c| {
            let (b0, b1) = family.b_range(c);
            let a1 = c.start[0] + c.side;
            let vol = family.volume(c);
            let aw = w.rect(c.start[0], a1, b0, b1) / vol;
            let asg = sigma.rect(c.start[0], a1, b0, b1) / vol;
            aw * asg.powf(p - 1.0)
        })
        .reduce(|| 0.0, f64::max)
}

/// `max_Q (avg_Q w)(avg_Q w^{1-p'})^{p-1}` over the family; a lower bound for `[w]_{A_p}`.
pub fn ap_characteristic(w: &Weight, p: f64, family: &CubeFamily) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("A_p needs p > 1, got {p}")));
    }
    w.check_admissible(p)?;
    let sigma = dual_weight(w, p)?;
    let sw = SummedArea::new(w, family.spec())?;
    let ss = SummedArea::new(&sigma, family.spec())?;
    Ok(ap_over(&sw, &ss, family, p))
}

/// `(1 / w(Q)) int_Q M(w 1_Q)` for one cube, with the centered maximal function over radii below the side.
fn fujii_wilson_cube(sat: &SummedArea, family: &CubeFamily, c: &Cube) -> f64 {
    let two_d = family.spec.dim() == 2;
    let (b0, b1) = family.b_range(c);
    let (a0, a1) = (c.start[0], c.start[0] + c.side);
    let wq = sat.rect(a0, a1, b0, b1);
    if wq <= 0.0 {
        return 1.0;
    }
    let cell = sat.cell_volume();
    let dim = if two_d { 2 } else { 1 };
    let mut total = 0.0;
    for x in a0..a1 {
        for y in b0..b1 {
            let reach = if two_d {
                (x - a0).max(a1 - 1 - x).max(y - b0).max(b1 - 1 - y)
            } else {
                (x - a0).max(a1 - 1 - x)
            };
            let mut best = 0.0f64;
            for r in 0..=reach.min(c.side - 1) {
                let (xa, xb) = (x.saturating_sub(r).max(a0), (x + r + 1).min(a1));
                let (ya, yb) = if two_d { (y.saturating_sub(r).max(b0), (y + r + 1).min(b1)) } else { (0, 1) };
                let v = sat.rect(xa, xb, ya, yb) / (((2 * r + 1) as f64).powi(dim) * cell);
                best = best.max(v);
            }
            total += best * cell;
        }
    }
    total / wq
}

/// Fujii–Wilson `[w]_{A_inf}` over the family; 1 for constant weights.
pub fn ainfty_fujii_wilson(w: &Weight, family: &CubeFamily) -> Result<f64> {
    let sat = SummedArea::new(w, family.spec())?;
    Ok(ainfty_from_table(&sat, family))
}

fn ainfty_from_table(sat: &SummedArea, family: &CubeFamily) -> f64 {
    family
        .cubes
        .par_iter()
        .map(|c| fujii_wilson_cube(sat, family, c))
        .reduce(|| 0.0, f64::max)
}

/// The five weight constants for one `(w, p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub p: f64,
    pub weight: String,
    pub ap: f64,
    pub ainf_w: f64,
    pub ainf_sigma: f64,
    /// `(w)_{A_p} = max(ainf_w, ainf_sigma)`.
    pub round: f64,
    /// `{w}_{A_p} = ap^{1/p} max(ainf_w^{1/p'}, ainf_sigma^{1/p})`.
    pub curly: f64,
    pub family_hash: String,
    pub family_size: usize,
}

/// `(round, curly)` from the three primary constants.
pub fn derived_constants(p: f64, ap: f64, ainf_w: f64, ainf_sigma: f64) -> (f64, f64) {
    let pp = conjugate_exponent(p);
    let round = ainf_w.max(ainf_sigma);
    let curly = ap.powf(1.0 / p) * ainf_w.powf(1.0 / pp).max(ainf_sigma.powf(1.0 / p));
    (round, curly)
}

pub fn report(w: &Weight, p: f64, family: &CubeFamily) -> Result<ApReport> {
    report_with(w, p, family, family)
}

/// [`report`] with a separate (usually smaller) family for the two A_inf constants.
pub fn report_with(w: &Weight, p: f64, family: &CubeFamily, ainf_family: &CubeFamily) -> Result<ApReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("A_p needs p > 1, got {p}")));
    }
    w.check_admissible(p)?;
    family.spec.ensure_same(&ainf_family.spec)?;
    let sigma = dual_weight(w, p)?;
    let sw = SummedArea::new(w, family.spec())?;
    let ss = SummedArea::new(&sigma, family.spec())?;
    let ap = ap_over(&sw, &ss, family, p);
    let ainf_w = ainfty_from_table(&sw, ainf_family);
    let ainf_sigma = ainfty_from_table(&ss, ainf_family);
    let (round, curly) = derived_constants(p, ap, ainf_w, ainf_sigma);
    let family_hash = if family == ainf_family {
        family.hash()
    } else {
        let mut h = Sha256::new();
        h.update(family.hash());
        h.update(ainf_family.hash());
        hex::encode(h.finalize())
    };
    Ok(ApReport {
        p,
        weight: w.descriptor(),
        ap,
        ainf_w,
        ainf_sigma,
        round,
        curly,
        family_hash,
        family_size: family.len() + if family == ainf_family { 0 } else { ainf_family.len() },
    })
}

/// `c_n / (2 (w)_{A_p})`, clamped into `(0, 1)`.
pub fn epsilon_of(report: &ApReport, c_n: f64) -> Result<f64> {
    if !(c_n > 0.0 && c_n.is_finite()) {
        return Err(Error::InvalidParameter(format!("c_n must be positive, got {c_n}")));
    }
    if !(report.round >= 1.0 - 1e-9) {
        return Err(Error::InvalidParameter(format!("(w)_(A_p) = {} is below 1", report.round)));
    }
    let eps = c_n / (2.0 * report.round);
    Ok(eps.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
}

/// Averages of `|x|^alpha` over the centered ball-cube `(-r, r)^n` via the corner integral.
pub fn centered_power_average(alpha: f64, dim: usize, r: f64) -> f64 {
    match dim {
        1 => r.powf(alpha) / (1.0 + alpha),
        _ => {
            let nodes = gauss_legendre_on(24, -1.0, 1.0);
            let log_nodes = gauss_legendre_on(48, -1.0, 1.0);
            quadrant_integral(alpha, r, r, &nodes, &log_nodes) / (r * r)
        }
    }
}

/// Centered-cube A_p value `(avg |x|^alpha)(avg |x|^{alpha(1-p')})^{p-1}`; scale free.
pub fn centered_power_ap(alpha: f64, p: f64, dim: usize) -> f64 {
    let e = alpha * (1.0 - conjugate_exponent(p));
    centered_power_average(alpha, dim, 1.0) * centered_power_average(e, dim, 1.0).powf(p - 1.0)
}

/// Weight description as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Unit,
    Power { alpha: f64 },
    /// Binary grid-function file.
    Sampled { path: String },
}

impl WeightSpec {
    pub fn build(&self, spec: &GridSpec) -> Result<Weight> {
        match self {
            WeightSpec::Unit => Ok(Weight::unit(*spec)),
            WeightSpec::Power { alpha } => Weight::power(*alpha, spec.dim()),
            WeightSpec::Sampled { path } => {
                let f = GridFunction::read_binary(Path::new(path))?;
                f.spec().ensure_same(spec)?;
                Weight::sampled(f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_weight(spec: GridSpec, seed: u64) -> Weight {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(-2.0f64..2.0).exp()).collect();
        Weight::sampled(GridFunction::from_real(spec, &v).unwrap()).unwrap()
    }

    #[test]
    fn unit_weight_is_exactly_one() {
        for spec in [make_grid(1, 64, 4.0).unwrap(), make_grid(2, 16, 1.0).unwrap()] {
            let fam = CubeFamily::dyadic(spec);
            for p in [1.5, 2.0, 3.0] {
                assert_eq!(ap_characteristic(&Weight::unit(spec), p, &fam).unwrap(), 1.0);
            }
            assert_eq!(ainfty_fujii_wilson(&Weight::unit(spec), &fam).unwrap(), 1.0);
        }
    }

    #[test]
    fn centered_interval_oracle_1d() {
        let spec = make_grid(1, 256, 8.0).unwrap();
        let centered = CubeFamily::centered(spec);
        let full = CubeFamily::dyadic(spec);
        for alpha in [0.3, 0.5, 0.8] {
            let oracle = 1.0 / ((1.0 + alpha) * (1.0 - alpha));
            assert!((centered_power_ap(alpha, 2.0, 1) - oracle).abs() < 1e-12 * oracle);
            let w = Weight::power(alpha, 1).unwrap();
            let c = ap_characteristic(&w, 2.0, &centered).unwrap();
            assert!((c - oracle).abs() < 1e-9 * oracle, "alpha {alpha}: {c} vs {oracle}");
            let f = ap_characteristic(&w, 2.0, &full).unwrap();
            assert!(f >= oracle * (1.0 - 1e-12));
        }
    }

    #[test]
    fn centered_power_average_2d_matches_quadrature() {
        // int over [-1,1]^2 of |x|^alpha / 4 by tensor Gauss–Legendre away from the origin singularity
        let alpha = 0.5;
        let (x, w) = gauss_legendre_on(200, 0.0, 1.0);
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            for (yj, wj) in x.iter().zip(&w) {
                s += wi * wj * (xi * xi + yj * yj).powf(alpha / 2.0);
            }
        }
        assert!((centered_power_average(alpha, 2, 1.0) - s).abs() < 1e-8);
    }

    #[test]
    fn blowup_as_alpha_approaches_one() {
        let spec = make_grid(1, 256, 8.0).unwrap();
        let fam = CubeFamily::dyadic(spec);
        let vals: Vec<f64> = [0.5, 0.8, 0.95]
            .iter()
            .map(|&a| ap_characteristic(&Weight::power(a, 1).unwrap(), 2.0, &fam).unwrap())
            .collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2]);
        assert!(vals[2] >= 1.0 / (1.0 - 0.95f64.powi(2)) * (1.0 - 1e-12));
    }

    #[test]
    fn scaling_invariance_and_duality() {
        let spec = make_grid(2, 16, 1.0).unwrap();
        let fam = CubeFamily::dyadic(spec);
        let w = random_weight(spec, 5);
        let a = ap_characteristic(&w, 2.0, &fam).unwrap();
        let b = ap_characteristic(&w.scale(7.5).unwrap(), 2.0, &fam).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        for p in [1.5, 2.0, 3.0] {
            let pp = conjugate_exponent(p);
            let lhs = ap_characteristic(&w, p, &fam).unwrap().powf(pp - 1.0);
            let rhs = ap_characteristic(&dual_weight(&w, p).unwrap(), pp, &fam).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * lhs, "p {p}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn family_enlargement_is_monotone() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let w = random_weight(spec, 9);
        let small = CubeFamily::centered(spec);
        let big = small.union(&CubeFamily::dyadic_up_to(spec, 8)).unwrap();
        assert!(ap_characteristic(&w, 2.0, &big).unwrap() >= ap_characteristic(&w, 2.0, &small).unwrap());
        assert!(ainfty_fujii_wilson(&w, &big).unwrap() >= ainfty_fujii_wilson(&w, &small).unwrap());
        assert_ne!(small.hash(), big.hash());
    }

    #[test]
    fn dual_weight_examples() {
        let spec = make_grid(1, 32, 1.0).unwrap();
        let one = dual_weight(&Weight::unit(spec), 2.0).unwrap();
        assert!(one.is_unit());
        assert_eq!(dual_weight(&Weight::power(0.5, 1).unwrap(), 2.0).unwrap(), Weight::Power { alpha: -0.5, dim: 1 });
        let w = random_weight(spec, 2);
        let back = dual_weight(&dual_weight(&w, 2.0).unwrap(), 2.0).unwrap();
        let (Weight::Sampled(a), Weight::Sampled(b)) = (&w, &back) else { unreachable!() };
        assert!(a.sub(b).unwrap().max_abs() < 1e-12 * a.max_abs());
        let huge = Weight::sampled(GridFunction::from_real(spec, &vec![1e-320; 32]).unwrap()).unwrap();
        assert!(matches!(dual_weight(&huge, 2.0), Err(Error::WeightOverflow(_))));
    }

    #[test]
    fn fujii_wilson_examples() {
        let spec = make_grid(1, 128, 4.0).unwrap();
        let fam = CubeFamily::dyadic(spec);
        let one = ainfty_fujii_wilson(&Weight::unit(spec), &fam).unwrap();
        let pw = ainfty_fujii_wilson(&Weight::power(0.5, 1).unwrap(), &fam).unwrap();
        assert!(pw >= one);
        let step: Vec<f64> = (0..spec.len()).map(|i| if spec.point(i)[0] < 0.0 { 0.25 } else { 4.0 }).collect();
        let step = Weight::sampled(GridFunction::from_real(spec, &step).unwrap()).unwrap();
        let v = ainfty_fujii_wilson(&step, &fam).unwrap();
        assert!(v.is_finite() && v >= 1.0);
        // brute force: direct maximal function on each cube without the summed-area table
        let vals = step.values_on(&spec).unwrap();
        let natural = |a: usize| vals[spec.flat([a as i64 - 64, 0])];
        let mut brute = 0.0f64;
        for c in fam.cubes() {
            let (a0, a1) = (c.start[0], c.start[0] + c.side);
            let wq: f64 = (a0..a1).map(natural).sum();
            let mut tot = 0.0;
            for x in a0..a1 {
                let mut best = 0.0f64;
                for r in 0..c.side {
                    let lo = x.saturating_sub(r).max(a0);
                    let hi = (x + r + 1).min(a1);
                    best = best.max((lo..hi).map(natural).sum::<f64>() / (2 * r + 1) as f64);
                }
                tot += best;
            }
            brute = brute.max(tot / wq);
        }
        assert!((v - brute).abs() < 1e-12 * brute);
    }

    #[test]
    fn report_invariants() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let fam = CubeFamily::dyadic(spec);
        let r = report(&Weight::unit(spec), 2.0, &fam).unwrap();
        assert_eq!(r.ap, 1.0);
        assert!(r.curly >= 1.0);
        let r = report(&Weight::power(0.5, 2).unwrap(), 2.0, &fam).unwrap();
        assert_eq!(r.round, r.ainf_w.max(r.ainf_sigma));
        assert!(r.ainf_w.is_finite() && r.ainf_sigma.is_finite());
        assert!(r.curly >= r.ap.sqrt());
        eprintln!("power 0.5: {r:?}");
        assert!(r.curly <= r.ap.powf(1.0f64.max(1.0 / (r.p - 1.0))));
    }

    #[test]
    fn epsilon_examples() {
        let mk = |round: f64| ApReport {
            p: 2.0,
            weight: String::new(),
            ap: 1.0,
            ainf_w: round,
            ainf_sigma: round,
            round,
            curly: 1.0,
            family_hash: String::new(),
            family_size: 0,
        };
        assert_eq!(epsilon_of(&mk(1.0), 1.0).unwrap(), 0.5);
        assert_eq!(epsilon_of(&mk(4.0), 1.0).unwrap(), 0.125);
        assert!(epsilon_of(&mk(0.5), 1.0).is_err());
        assert!(epsilon_of(&mk(1.0), 4.0).unwrap() < 1.0);
    }

    #[test]
    fn inadmissible_power_weight() {
        let spec = make_grid(1, 64, 1.0).unwrap();
        let fam = CubeFamily::centered(spec);
        assert!(matches!(
            ap_characteristic(&Weight::power(1.2, 1).unwrap(), 2.0, &fam),
            Err(Error::InadmissibleWeight { .. })
        ));
        assert!(Weight::power(-1.0, 1).is_err());
    }

    #[test]
    fn power_cell_averages_integrate_exactly() {
        let spec = make_grid(2, 32, 2.0).unwrap();
        let w = Weight::power(-0.6, 2).unwrap();
        let v = w.values_on(&spec).unwrap();
        let total: f64 = v.iter().sum::<f64>() * spec.cell_volume();
        // cells tile [-L - h/2, L - h/2)^2
        let h = spec.spacing();
        let (lo, hi) = (-2.0 - h / 2.0, 2.0 - h / 2.0);
        let nodes = gauss_legendre_on(24, -1.0, 1.0);
        let logn = gauss_legendre_on(48, -1.0, 1.0);
        let g = |x: f64, y: f64| x.signum() * y.signum() * quadrant_integral(-0.6, x.abs(), y.abs(), &nodes, &logn);
        let want = g(hi, hi) - g(lo, hi) - g(hi, lo) + g(lo, lo);
        assert!((total - want).abs() < 1e-12 * want);
        assert!(v.iter().all(|x| *x > 0.0));
    }
}
