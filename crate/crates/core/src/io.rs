//! Run configuration, result records and plot scripts.
//!
//! A run lives in `<out>/runs/<config-hash>/` as `manifest.json`, `results.csv`
//! and, when the experiment has a natural figure, `plot.gp`.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::{self, DeserializeSeed, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::FittedRate;
use crate::grid::{make_grid, GridSpec};
use crate::lp::{JumpSchedule, Side};
use crate::normlab::NormOptions;
use crate::operators::LipschitzSpec;
use crate::sphere::SymbolSpec;
use crate::weights::WeightSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        make_grid(self.n, self.m, self.l)
    }
}

/// Parameters shared by the experiments; each subcommand reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub p: f64,
    pub side: Side,
    pub jmax: u32,
    /// Band index for single-piece experiments.
    pub j: u32,
    pub alphas: Vec<f64>,
    /// Inclusive range of `i` for the multiplier tables.
    pub i_range: (i64, i64),
    pub k: i64,
    pub samples: usize,
    /// Largest cube side (in cells) of the A_p family; `None` uses every dyadic side.
    pub family_max_side: Option<usize>,
    /// Largest cube side of the A_inf family.
    pub ainf_max_side: Option<usize>,
    /// Truncation radius for `apply` with `operator = "t_eps"`; defaults to the spacing.
    pub eps: Option<f64>,
    /// `c` (commutator), `t_eps` or `piece`.
    pub operator: String,
    /// Decay exponent for the geometric-sum bound; `None` uses 0.5.
    pub gamma: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: None,
            p: 2.0,
            side: Side::Low,
            jmax: 4,
            j: 1,
            alphas: vec![0.0, 0.3, -0.3, 0.6, -0.6, 0.8, -0.8],
            i_range: (2, 6),
            k: 0,
            samples: 200,
            family_max_side: None,
            ainf_max_side: None,
            eps: None,
            operator: "c".into(),
            gamma: None,
        }
    }
}

/// Thresholds used by `--check`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub high_slope_min: f64,
    pub scaling_slope_max: f64,
    pub ratio_spread_max: f64,
    pub growth_ratio_max: f64,
    pub kernel_ratio_max: f64,
    pub interpolation: f64,
    pub decomposition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            high_slope_min: 1.9,
            scaling_slope_max: 2.3,
            ratio_spread_max: 10.0,
            growth_ratio_max: 10.0,
            kernel_ratio_max: 1.0e3,
            interpolation: 1e-6,
            decomposition: 1e-8,
        }
    }
}

fn default_c_n() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    #[serde(rename = "Omega")]
    pub omega: SymbolSpec,
    /// `None` means `b(x) = x_1` (folded periodically).
    #[serde(default)]
    pub b: Option<LipschitzSpec>,
    /// Empty means the unit weight.
    #[serde(default)]
    pub weights: Vec<WeightSpec>,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_c_n")]
    pub c_n: f64,
    /// Exponent of `||Omega||_{L^q}` in the predictors; `None` is `q = inf`.
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub schedule: JumpSchedule,
    #[serde(default)]
    pub krange: Option<(i64, i64)>,
    #[serde(default)]
    pub norm: NormOptions,
}

impl RunConfig {
    /// SHA-256 of the canonical (sorted-key, compact) JSON of the effective config.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn q(&self) -> f64 {
        self.q.unwrap_or(f64::INFINITY)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Rejects duplicate object keys anywhere in a JSON document.
struct DuplicateCheck<'a>(&'a mut Vec<String>);

impl<'de> DeserializeSeed<'de> for DuplicateCheck<'_> {
    type Value = ();

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> std::result::Result<(), D::Error> {
        d.deserialize_any(self)
    }
}

impl<'de> Visitor<'de> for DuplicateCheck<'_> {
    type Value = ();

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("any JSON value")
    }

    fn visit_bool<E>(self, _: bool) -> std::result::Result<(), E> {
        Ok(())
    }
    fn visit_i64<E>(self, _: i64) -> std::result::Result<(), E> {
        Ok(())
    }
    fn visit_u64<E>(self, _: u64) -> std::result::Result<(), E> {
        Ok(())
    }
    fn visit_f64<E>(self, _: f64) -> std::result::Result<(), E> {
        Ok(())
    }
    fn visit_str<E>(self, _: &str) -> std::result::Result<(), E> {
        Ok(())
    }
    fn visit_unit<E>(self) -> std::result::Result<(), E> {
        Ok(())
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<(), A::Error> {
        let mut i = 0;
        loop {
            self.0.push(format!("[{i}]"));
            let more = seq.next_element_seed(DuplicateCheck(self.0))?;
            self.0.pop();
            if more.is_none() {
                return Ok(());
            }
            i += 1;
        }
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<(), A::Error> {
        let mut seen = BTreeSet::new();
        while let Some(key) = map.next_key::<String>()? {
            if !seen.insert(key.clone()) {
                let path: String = self.0.concat();
                return Err(de::Error::custom(format!("duplicate key `{key}` at `{}`", if path.is_empty() { "." } else { &path })));
            }
            self.0.push(format!(".{key}"));
            map.next_value_seed(DuplicateCheck(self.0))?;
            self.0.pop();
        }
        Ok(())
    }
}

fn config_error(path: &str, message: impl fmt::Display) -> Error {
    Error::Config { path: if path.is_empty() { ".".into() } else { path.into() }, message: message.to_string() }
}

/// Parses and validates a config document, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut path = Vec::new();
    let mut d = serde_json::Deserializer::from_str(text);
    DuplicateCheck(&mut path).deserialize(&mut d).map_err(|e| config_error("", e))?;
    let mut d = serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(&mut d).map_err(|e| {
        let p = e.path().to_string();
        config_error(&p, e.into_inner())
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.grid.build().map_err(|e| config_error("grid", e))?;
    cfg.omega.build(spec.dim()).map_err(|e| config_error("Omega", e))?;
    cfg.schedule.validate().map_err(|e| config_error("schedule", e))?;
    if !(cfg.c_n > 0.0 && cfg.c_n.is_finite()) {
        return Err(config_error("c_n", "must be positive and finite"));
    }
    if let Some(q) = cfg.q {
        if !(q >= 1.0) {
            return Err(config_error("q", "must be at least 1"));
        }
    }
    if let Some((a, b)) = cfg.krange {
        if a > b {
            return Err(config_error("krange", "lower end exceeds upper end"));
        }
    }
    let e = &cfg.experiment;
    if !(e.p > 1.0 && e.p.is_finite()) {
        return Err(config_error("experiment.p", "must satisfy 1 < p < inf"));
    }
    if e.jmax == 0 || e.j == 0 {
        return Err(config_error("experiment", "j and jmax start at 1"));
    }
    if e.i_range.0 > e.i_range.1 {
        return Err(config_error("experiment.i_range", "lower end exceeds upper end"));
    }
    if !["c", "t_eps", "piece"].contains(&e.operator.as_str()) {
        return Err(config_error("experiment.operator", format!("unknown operator `{}`", e.operator)));
    }
    if cfg.norm.trials == 0 || cfg.norm.max_iterations == 0 {
        return Err(config_error("norm", "trials and max_iterations must be positive"));
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    /// Seconds since the Unix epoch; the only field that differs between identical reruns.
    pub timestamp: u64,
    pub code_version: String,
    pub config: RunConfig,
    pub fits: Vec<FittedRate>,
    pub summary: serde_json::Value,
}

/// Column-named rows plus the manifest. The first `key_columns` columns order the rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub manifest: Manifest,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub key_columns: usize,
    pub plot: Option<PlotKind>,
}

/// Formats a number in the shortest round-tripping form.
pub fn cell(v: f64) -> String {
    format!("{v}")
}

impl RunRecord {
    pub fn new(experiment: &str, config: &RunConfig, columns: &[&str]) -> Self {
        Self {
            manifest: Manifest {
                experiment: experiment.to_string(),
                config_hash: config.hash(),
                seed: config.seed,
                timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
                code_version: concat!("roughsing ", env!("CARGO_PKG_VERSION")).to_string(),
                config: config.clone(),
                fits: Vec::new(),
                summary: serde_json::Value::Null,
            },
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            key_columns: 1,
            plot: None,
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn sorted_rows(&self) -> Vec<Vec<String>> {
        let mut rows = self.rows.clone();
        let keys = self.key_columns.min(self.columns.len());
        rows.sort_by(|a, b| {
            for i in 0..keys {
                let o = match (a[i].parse::<f64>(), b[i].parse::<f64>()) {
                    (Ok(x), Ok(y)) => x.total_cmp(&y),
                    _ => a[i].cmp(&b[i]),
                };
                if o.is_ne() {
                    return o;
                }
            }
            std::cmp::Ordering::Equal
        });
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in self.sorted_rows() {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn manifest_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecordPaths {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub results: PathBuf,
    pub plot: Option<PathBuf>,
}

fn write_atomic(dir: &Path, target: &Path, contents: &str) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(target).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Writes `<root>/runs/<hash>/{manifest.json, results.csv, plot.gp}` under a directory lock.
pub fn write_record(record: &RunRecord, root: &Path) -> Result<RecordPaths> {
    let dir = root.join("runs").join(&record.manifest.config_hash);
    fs::create_dir_all(&dir)?;
    let _lock = DirLock::acquire(&dir)?;
    let results = dir.join("results.csv");
    let manifest = dir.join("manifest.json");
    write_atomic(&dir, &results, &record.to_csv())?;
    let plot = match record.plot {
        Some(kind) => {
            let p = dir.join("plot.gp");
            write_atomic(&dir, &p, &emit_plot_script(record, kind)?)?;
            Some(p)
        }
        None => None,
    };
    write_atomic(&dir, &manifest, &record.manifest_json())?;
    Ok(RecordPaths { dir, manifest, results, plot })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Decay,
    Scaling,
    Multiplier,
}

impl PlotKind {
    /// `(x column, y column, fitted-line column)`.
    pub fn columns(&self) -> (&'static str, &'static str, &'static str) {
        match self {
            PlotKind::Decay => ("n_prev", "norm", "fit_norm"),
            PlotKind::Scaling => ("ap", "norm", "fit_norm"),
            PlotKind::Multiplier => ("scale", "max_abs", "fit_max_abs"),
        }
    }
}

/// Gnuplot script reading `results.csv` from its own directory.
pub fn emit_plot_script(record: &RunRecord, kind: PlotKind) -> Result<String> {
    let (x, y, f) = kind.columns();
    let (cx, cy, cf) = (record.column(x)? + 1, record.column(y)? + 1, record.column(f)? + 1);
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key top right\n");
    s.push_str("set terminal pngcairo size 800,600\n");
    s.push_str(&format!("set output '{}.png'\n", record.manifest.experiment));
    s.push_str(&format!("set xlabel '{x}'\nset ylabel '{y}'\n"));
    match kind {
        PlotKind::Decay => {
            s.push_str("set logscale y 2\n");
            s.push_str(&format!(
                "plot 'results.csv' every ::1 using {cx}:{cy} with linespoints title 'measured', \\\n     '' every ::1 using {cx}:{cf} with lines dashtype 2 title 'fit'\n"
            ));
        }
        PlotKind::Scaling => {
            s.push_str("set logscale xy 2\n");
            s.push_str(&format!(
                "plot 'results.csv' every ::1 using {cx}:{cy} with points pt 7 title 'measured', \\\n     '' every ::1 using {cx}:{cf} with lines dashtype 2 title 'fit', \\\n     [1:*] x**2 with lines dashtype 3 title 'slope 2'\n"
            ));
        }
        PlotKind::Multiplier => {
            s.push_str("set logscale xy 2\n");
            s.push_str(&format!(
                "plot 'results.csv' every ::1 using {cx}:{cy} with linespoints title 'max |m|', \\\n     '' every ::1 using {cx}:{cf} with lines dashtype 2 title 'fit'\n"
            ));
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"grid": {"n": 2, "M": 32, "L": 2}, "Omega": {"type": "harmonic", "m": 2}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.c_n, 1.0);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.experiment.p, 2.0);
        assert_eq!(c.schedule, JumpSchedule::Pow2);
    }

    #[test]
    fn missing_omega_is_named() {
        let e = parse_config(r#"{"grid": {"n": 2, "M": 32, "L": 2}}"#).unwrap_err();
        assert!(e.to_string().contains("Omega"), "{e}");
    }

    #[test]
    fn duplicates_and_unknown_keys_are_rejected() {
        let dup = r#"{"grid": {"n": 2, "M": 32, "M": 64, "L": 2}, "Omega": {"type": "harmonic", "m": 2}}"#;
        let e = parse_config(dup).unwrap_err().to_string();
        assert!(e.contains("duplicate key `M`") && e.contains(".grid"), "{e}");
        let unknown = r#"{"grid": {"n": 2, "M": 32, "L": 2}, "Omega": {"type": "harmonic", "m": 2}, "colour": 1}"#;
        assert!(parse_config(unknown).unwrap_err().to_string().contains("colour"));
        let nested = r#"{"grid": {"n": 2, "M": 32, "L": 2}, "Omega": {"type": "harmonic", "m": 2}, "experiment": {"pp": 2}}"#;
        let e = parse_config(nested).unwrap_err().to_string();
        assert!(e.contains("experiment") && e.contains("pp"), "{e}");
    }

    #[test]
    fn invalid_grid_is_a_config_error() {
        let e = parse_config(r#"{"grid": {"n": 3, "M": 32, "L": 2}, "Omega": {"type": "harmonic", "m": 2}}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "grid"));
    }

    #[test]
    fn round_trip_and_hash() {
        let c = parse_config(MINIMAL).unwrap();
        let again = parse_config(&c.to_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        let spaced = MINIMAL.replace(' ', "\n  ");
        assert_eq!(parse_config(&spaced).unwrap().hash(), c.hash());
        let mut d = c.clone();
        d.seed = 1;
        assert_ne!(d.hash(), c.hash());
    }

    fn sample_record() -> RunRecord {
        let c = parse_config(MINIMAL).unwrap();
        let mut r = RunRecord::new("decay", &c, &["j", "n_prev", "norm", "fit_norm"]);
        r.push(vec!["2".into(), "2".into(), cell(0.5), cell(0.4)]);
        r.push(vec!["10".into(), "512".into(), cell(0.01), cell(0.02)]);
        r.push(vec!["1".into(), "0".into(), cell(1.0), cell(1.1)]);
        r.plot = Some(PlotKind::Decay);
        r
    }

    #[test]
    fn rows_sort_numerically() {
        let csv = sample_record().to_csv();
        let firsts: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(firsts, ["1", "2", "10"]);
    }

    #[test]
    fn empty_record_is_header_only() {
        let c = parse_config(MINIMAL).unwrap();
        let r = RunRecord::new("x", &c, &["a", "b"]);
        assert_eq!(r.to_csv(), "a,b\n");
    }

    #[test]
    fn write_is_reproducible_and_locked() {
        let root = tempfile::tempdir().unwrap();
        let r = sample_record();
        let p1 = write_record(&r, root.path()).unwrap();
        let first = (fs::read(&p1.results).unwrap(), fs::read(p1.plot.as_ref().unwrap()).unwrap());
        let p2 = write_record(&r, root.path()).unwrap();
        assert_eq!(first, (fs::read(&p2.results).unwrap(), fs::read(p2.plot.as_ref().unwrap()).unwrap()));
        assert!(!p1.dir.join(".lock").exists());
        let _held = DirLock::acquire(&p1.dir).unwrap();
        assert!(matches!(write_record(&r, root.path()), Err(Error::Locked(_))));
    }

    #[test]
    fn unwritable_root_fails() {
        let root = tempfile::tempdir().unwrap();
        let file = root.path().join("file");
        fs::write(&file, "x").unwrap();
        assert!(write_record(&sample_record(), &file).is_err());
    }

    #[test]
    fn plot_scripts() {
        let mut r = sample_record();
        let s = emit_plot_script(&r, PlotKind::Decay).unwrap();
        assert!(s.contains("results.csv") && s.contains("set logscale y"));
        assert!(matches!(emit_plot_script(&r, PlotKind::Scaling), Err(Error::MissingColumn(c)) if c == "ap"));
        r.columns[3] = "other".into();
        assert!(matches!(emit_plot_script(&r, PlotKind::Decay), Err(Error::MissingColumn(c)) if c == "fit_norm"));
    }
}
