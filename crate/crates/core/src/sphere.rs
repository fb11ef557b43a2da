//! The rough symbol `Omega` on the unit sphere `S^{n-1}` for n = 1, 2.
//!
//! In n = 2 a symbol is stored by its values at `S` equispaced angles
//! `theta_i = 2 pi i / S` with trapezoidal weights `2 pi / S`. Off-node
//! values come from trigonometric interpolation (exact for trigonometric
//! polynomials of degree `< S/2`) or from periodic linear interpolation for
//! piecewise data. In n = 1 the sphere is `{+1, -1}` with counting measure.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 256;

/// How a circle symbol is evaluated between nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Trigonometric,
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SphereSymbol {
    dim: usize,
    values: Vec<f64>,
    interpolation: Interpolation,
    /// `(m, a_m, b_m)` with `Omega(theta) = sum a_m cos(m theta) + b_m sin(m theta)`; n = 2 only.
    harmonics: Vec<(usize, f64, f64)>,
}

/// Zeroth moment plus the `n` first-order moments `int Omega x'_k dsigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub zeroth: f64,
    pub first: Vec<f64>,
}

impl MomentReport {
    pub fn max_abs(&self) -> f64 {
        self.first.iter().fold(self.zeroth.abs(), |m, v| m.max(v.abs()))
    }
}

fn harmonic_coefficients(values: &[f64]) -> Vec<(usize, f64, f64)> {
    let s = values.len();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::new();
    for m in 0..=s / 2 {
        let (mut a, mut b) = (0.0, 0.0);
        for (i, v) in values.iter().enumerate() {
            let t = 2.0 * PI * ((i * m) % s) as f64 / s as f64;
            a += v * t.cos();
            b += v * t.sin();
        }
        let norm = if m == 0 || 2 * m == s { 1.0 / s as f64 } else { 2.0 / s as f64 };
        a *= norm;
        b *= norm;
        if 2 * m == s {
            b = 0.0;
        }
        if a.abs().max(b.abs()) > 1e-15 * scale {
            out.push((m, a, b));
        }
    }
    out
}

impl SphereSymbol {
    /// n = 2 symbol from nodal values at `theta_i = 2 pi i / S`.
    pub fn circle(values: Vec<f64>) -> Result<Self> {
        Self::circle_with(values, Interpolation::Trigonometric)
    }

    pub fn circle_with(values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        let s = values.len();
        if s < 8 || s % 2 != 0 {
            return Err(Error::InvalidSymbol(format!("need an even node count >= 8, got {s}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSymbol(format!("non-finite value at node {i}")));
        }
        let harmonics = harmonic_coefficients(&values);
        Ok(Self { dim: 2, values, interpolation, harmonics })
    }

    /// n = 1 symbol `(Omega(+1), Omega(-1))`.
    pub fn line(plus: f64, minus: f64) -> Result<Self> {
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::InvalidSymbol("non-finite value".into()));
        }
        Ok(Self { dim: 1, values: vec![plus, minus], interpolation: Interpolation::Linear, harmonics: Vec::new() })
    }

    /// Samples `f(theta)` at `nodes` equispaced angles.
    pub fn from_fn<F: Fn(f64) -> f64>(nodes: usize, f: F) -> Result<Self> {
        Self::circle((0..nodes).map(|i| f(2.0 * PI * i as f64 / nodes as f64)).collect())
    }

    /// `amplitude * cos(m theta)` on [`DEFAULT_NODES`] nodes (enlarged for high `m`).
    pub fn from_harmonic(dim: usize, m: i64, amplitude: f64) -> Result<Self> {
        if dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let nodes = DEFAULT_NODES.max((4 * m.unsigned_abs() as usize + 8).next_power_of_two());
        Self::from_fn(nodes, |t| amplitude * (m as f64 * t).cos())
    }

    /// The zero symbol with the same layout.
    pub fn zero_like(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = 0.0);
        out.harmonics.clear();
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Node angles (n = 2) or `[0, pi]` standing for `+1, -1` (n = 1).
    pub fn angles(&self) -> Vec<f64> {
        let s = self.values.len() as f64;
        match self.dim {
            1 => vec![0.0, PI],
            _ => (0..self.values.len()).map(|i| 2.0 * PI * i as f64 / s).collect(),
        }
    }

    /// Quadrature weight of each node.
    pub fn node_weight(&self) -> f64 {
        match self.dim {
            1 => 1.0,
            _ => 2.0 * PI / self.values.len() as f64,
        }
    }

    /// Total measure of the sphere.
    pub fn measure(&self) -> f64 {
        match self.dim {
            1 => 2.0,
            _ => 2.0 * PI,
        }
    }

    /// Value at angle `theta` (n = 2).
    pub fn at_angle(&self, theta: f64) -> f64 {
        match self.interpolation {
            Interpolation::Trigonometric => self
                .harmonics
                .iter()
                .map(|&(m, a, b)| {
                    let t = m as f64 * theta;
                    a * t.cos() + b * t.sin()
                })
                .sum(),
            Interpolation::Linear => {
                let s = self.values.len();
                let u = (theta / (2.0 * PI)).rem_euclid(1.0) * s as f64;
                let i = (u.floor() as usize) % s;
                let frac = u - u.floor();
                self.values[i] * (1.0 - frac) + self.values[(i + 1) % s] * frac
            }
        }
    }

    /// `Omega(x / |x|)` for a nonzero point `x` of length `dim`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.dim {
            1 => {
                if x[0] >= 0.0 {
                    self.values[0]
                } else {
                    self.values[1]
                }
            }
            _ => self.at_angle(x[1].atan2(x[0])),
        }
    }

    /// Node directions as unit vectors, paired with values.
    pub fn directions(&self) -> Vec<([f64; 2], f64)> {
        match self.dim {
            1 => vec![([1.0, 0.0], self.values[0]), ([-1.0, 0.0], self.values[1])],
            _ => self
                .angles()
                .into_iter()
                .zip(&self.values)
                .map(|(t, &v)| ([t.cos(), t.sin()], v))
                .collect(),
        }
    }

    /// `(sum |Omega_i|^q w_i)^{1/q}`; `q = inf` is the nodal maximum.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("q = {q} must be >= 1")));
        }
        if q.is_infinite() {
            return Ok(self.max_abs());
        }
        let w = self.node_weight();
        Ok((self.values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * w).powf(1.0 / q))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn moments(&self) -> MomentReport {
        let w = self.node_weight();
        let dirs = self.directions();
        let zeroth = dirs.iter().map(|(_, v)| v * w).sum();
        let first = (0..self.dim)
            .map(|k| dirs.iter().map(|(d, v)| v * d[k] * w).sum())
            .collect();
        MomentReport { zeroth, first }
    }

    pub fn check_cancellation(&self, tol: f64) -> bool {
        self.moments().max_abs() <= tol
    }

    /// Removes the constant, `cos theta` and `sin theta` components.
    pub fn project_cancellation(&self) -> Result<Self> {
        if self.dim == 1 {
            return Err(Error::ProjectionInDimensionOne);
        }
        let m = self.moments();
        let c0 = m.zeroth / (2.0 * PI);
        let c1 = m.first[0] / PI;
        let s1 = m.first[1] / PI;
        let values = self
            .angles()
            .iter()
            .zip(&self.values)
            .map(|(t, v)| v - c0 - c1 * t.cos() - s1 * t.sin())
            .collect();
        Self::circle_with(values, self.interpolation)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.harmonics.iter_mut().for_each(|h| {
            h.1 *= c;
            h.2 *= c;
        });
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.values.len() != other.values.len() {
            return Err(Error::InvalidSymbol("symbols live on different node sets".into()));
        }
        let values: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        match self.dim {
            1 => Self::line(values[0], values[1]),
            _ => Self::circle_with(values, self.interpolation),
        }
    }

    /// CSV with header `theta,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,value\n");
        for (t, v) in self.angles().iter().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }

    /// Parses `theta,value` rows; two rows at angles 0 and pi give an n = 1 symbol.
    pub fn from_csv(text: &str, dim: usize, interpolation: Interpolation) -> Result<Self> {
        let mut values = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (line_no == 0 && line.starts_with("theta")) {
                continue;
            }
            let mut parts = line.split(',');
            let (Some(_), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Format(format!("symbol csv line {}: expected theta,value", line_no + 1)));
            };
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("symbol csv line {}: bad value", line_no + 1)))?;
            values.push(v);
        }
        match dim {
            1 if values.len() == 2 => Self::line(values[0], values[1]),
            1 => Err(Error::InvalidSymbol(format!("n = 1 symbol needs 2 rows, got {}", values.len()))),
            2 => Self::circle_with(values, interpolation),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn read_csv(path: &Path, dim: usize, interpolation: Interpolation) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?, dim, interpolation)
    }
}

/// Symbol description as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// `amp * cos(m theta)`.
    Harmonic {
        m: i64,
        #[serde(default = "one")]
        amp: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<usize>,
    },
    /// Sum of `(m, cos amplitude, sin amplitude)` terms.
    Trig {
        terms: Vec<(i64, f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<usize>,
    },
    /// n = 1 values at `+1` and `-1`.
    Line { plus: f64, minus: f64 },
    /// `theta,value` CSV file.
    Csv {
        path: String,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

fn one() -> f64 {
    1.0
}

impl SymbolSpec {
    pub fn build(&self, dim: usize) -> Result<SphereSymbol> {
        match self {
            SymbolSpec::Line { plus, minus } => {
                if dim != 1 {
                    return Err(Error::InvalidSymbol("line symbols need n = 1".into()));
                }
                SphereSymbol::line(*plus, *minus)
            }
            SymbolSpec::Harmonic { m, amp, nodes } => match nodes {
                Some(s) if dim == 2 => SphereSymbol::from_fn(*s, |t| amp * (*m as f64 * t).cos()),
                _ => SphereSymbol::from_harmonic(dim, *m, *amp),
            },
            SymbolSpec::Trig { terms, nodes } => {
                if dim != 2 {
                    return Err(Error::UnsupportedDimension(dim));
                }
                let top = terms.iter().map(|t| t.0.unsigned_abs() as usize).max().unwrap_or(0);
                let s = nodes.unwrap_or(DEFAULT_NODES.max((4 * top + 8).next_power_of_two()));
                SphereSymbol::from_fn(s, |t| {
                    terms.iter().map(|&(m, a, b)| a * (m as f64 * t).cos() + b * (m as f64 * t).sin()).sum()
                })
            }
            SymbolSpec::Csv { path, interpolation } => SphereSymbol::read_csv(Path::new(path), dim, *interpolation),
        }
    }
}
