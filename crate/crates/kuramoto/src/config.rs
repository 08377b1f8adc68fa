//! Run configuration: a strict TOML schema with defaults.
//!
//! ```toml
//! coupling = 3.0
//! output = "out"
//!
//! [marginal]
//! kind = "cauchy"        # cauchy | bi-cauchy | tri-cauchy | mixture | gaussian | tabulated
//! delta = 1.0
//! omega = 0.0
//! # alpha = 0.17                                   (tri-cauchy)
//! # components = [{ c = 0.5, omega = 0.55, delta = 0.1 }, ...]   (mixture)
//! # sigma = 1.0                                    (gaussian)
//! # file = "ghat.csv"                              (tabulated: tau, re, im rows)
//!
//! [grid]
//! modes = 32
//! nodes = 2048
//! tau_max = 40.0
//! ```
//!
//! Every section and key is listed in [`SCHEMA`]; anything else is rejected
//! with the nearest valid key as a suggestion.

use kuramoto_core::freqdist::{CauchyComponent, FrequencyMarginal};
use kuramoto_core::spectral::{Grid, GridSpec};
use kuramoto_core::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// (section, keys); "" is the top level.
pub const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["coupling", "output", "marginal", "grid", "run", "perturbation", "stability", "pls", "ensemble", "volterra", "oa", "bifurcate"]),
    ("marginal", &["kind", "delta", "omega", "alpha", "sigma", "components", "file"]),
    ("marginal.components", &["c", "omega", "delta"]),
    ("grid", &["modes", "nodes", "tau_max", "full_line"]),
    ("run", &["t_end", "dt", "sample_every", "norm_rate", "snapshot"]),
    ("perturbation", &["mode", "eps", "profile"]),
    ("stability", &["couplings"]),
    ("pls", &["seeds"]),
    ("ensemble", &["n", "seed", "init", "eps", "dt", "t_end", "sample_every"]),
    ("volterra", &["kernel", "h", "horizon", "eps", "laplace_check", "z"]),
    ("oa", &["a", "n_max", "eps", "nodes", "tau_max", "sample_dt", "amplitudes"]),
    ("bifurcate", &["k_min", "k_max", "step", "mode"]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub coupling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub marginal: MarginalConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub pls: PlsSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub volterra: VolterraSection,
    #[serde(default)]
    pub oa: OaSection,
    #[serde(default)]
    pub bifurcate: BifurcateSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalConfig {
    #[serde(default = "cauchy_kind")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<ComponentConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

impl Default for MarginalConfig {
    fn default() -> Self {
        MarginalConfig {
            kind: cauchy_kind(),
            delta: None,
            omega: None,
            alpha: None,
            sigma: None,
            components: None,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub c: f64,
    pub omega: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub modes: usize,
    pub nodes: usize,
    pub tau_max: f64,
    pub full_line: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        let d = GridSpec::default();
        GridConfig { modes: d.modes, nodes: d.nodes, tau_max: d.tau_max, full_line: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub t_end: f64,
    /// Defaults to dτ/2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub sample_every: usize,
    /// Rate a of the e^{aτ} weight; enables the norm column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_rate: Option<f64>,
    pub snapshot: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { t_end: 12.0, dt: None, sample_every: 20, norm_rate: None, snapshot: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    pub mode: usize,
    pub eps: f64,
    /// bump | harmonic
    pub profile: String,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig { mode: 1, eps: 1e-4, profile: "bump".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    /// Defaults to `[coupling]`.
    pub couplings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PlsSection {
    /// Extra (r, Ω) Newton seeds on top of the built-in grid.
    pub seeds: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub n: usize,
    pub seed: u64,
    /// uniform | bump
    pub init: String,
    pub eps: f64,
    /// Defaults to 0.01/max(1, K).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Defaults to run.t_end.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub sample_every: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection { n: 10_000, seed: 1, init: "bump".into(), eps: 0.1, dt: None, t_end: None, sample_every: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VolterraSection {
    /// hom | pls
    pub kernel: String,
    pub h: f64,
    pub horizon: f64,
    /// Amplitude of the bump forcing for the `hom` kernel.
    pub eps: f64,
    pub laplace_check: bool,
    pub z: Vec<[f64; 2]>,
}

impl Default for VolterraSection {
    fn default() -> Self {
        VolterraSection {
            kernel: "hom".into(),
            h: 1e-2,
            horizon: 20.0,
            eps: 1e-4,
            laplace_check: false,
            z: vec![[0.5, 0.0], [1.0, 0.0], [1.0, 1.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OaSection {
    pub a: f64,
    pub n_max: usize,
    /// Bump amplitude of the off-manifold initial state (oa-check).
    pub eps: f64,
    /// Full-line grid used by oa-check.
    pub nodes: usize,
    pub tau_max: f64,
    pub sample_dt: f64,
    /// Initial (Re, Im) amplitude per Cauchy component (oa-reduce); a single
    /// entry is shared by all components.
    pub amplitudes: Vec<[f64; 2]>,
}

impl Default for OaSection {
    fn default() -> Self {
        OaSection {
            a: 0.5,
            n_max: 2,
            eps: 0.2,
            nodes: 2001,
            tau_max: 30.0,
            sample_dt: 0.5,
            amplitudes: vec![[0.3, 0.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BifurcateSection {
    pub k_min: f64,
    pub k_max: f64,
    pub step: f64,
    /// continuation | multistart
    pub mode: String,
}

impl Default for BifurcateSection {
    fn default() -> Self {
        BifurcateSection { k_min: 1.0, k_max: 3.0, step: 0.02, mode: "continuation".into() }
    }
}

fn one() -> f64 {
    1.0
}

fn cauchy_kind() -> String {
    "cauchy".into()
}

fn keys_for(section: &str) -> Option<&'static [&'static str]> {
    SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, k)| *k)
}

fn suggest(key: &str, allowed: &[&str]) -> Option<String> {
    allowed
        .iter()
        .map(|a| (strsim::jaro_winkler(key, a), *a))
        .filter(|(s, _)| *s >= 0.75)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, a)| a.to_string())
}

fn check_keys(table: &toml::Table, section: &str, errors: &mut Vec<String>) {
    let Some(allowed) = keys_for(section) else { return };
    for (key, value) in table {
        let path = if section.is_empty() { key.clone() } else { format!("{section}.{key}") };
        if !allowed.contains(&key.as_str()) {
            let hint = suggest(key, allowed).map(|s| format!("; did you mean `{s}`?")).unwrap_or_default();
            let place = if section.is_empty() { "at top level".to_string() } else { format!("in [{section}]") };
            errors.push(format!("unknown key `{key}` {place}{hint}"));
            continue;
        }
        match value {
            toml::Value::Table(t) => check_keys(t, &path, errors),
            toml::Value::Array(items) => {
                for item in items {
                    if let toml::Value::Table(t) = item {
                        check_keys(t, &path, errors);
                    }
                }
            }
            _ => {}
        }
    }
}

/// Sets `a.b.c = value`; the value is read as TOML, falling back to a string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Validation(vec![format!("override `{assignment}` is not of the form key=value")]))?;
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = path.trim().split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(vec![format!("override `{path}`: `{p}` is not a section")]))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parses, applies `key=value` overrides, then checks keys and values.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Validation(vec![format!("config parse error: {e}")]))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut errors = Vec::new();
    check_keys(&table, "", &mut errors);
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Validation(vec![format!("config error: {e}")]))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io(anyhow::Error::new(e).context(format!("reading {}", p.display()))))?,
        None => String::new(),
    };
    let base = path.and_then(|p| p.parent()).map(Path::to_path_buf);
    Ok((parse_config(&text, overrides)?, base))
}

impl RunConfig {
    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            modes: self.grid.modes,
            nodes: self.grid.nodes,
            tau_max: self.grid.tau_max,
            grid: if self.grid.full_line { Grid::FullLine } else { Grid::HalfLine },
        }
    }

    /// run.dt, defaulting to dτ/2.
    pub fn spectral_dt(&self) -> f64 {
        self.run.dt.unwrap_or(0.5 * self.grid_spec().dtau())
    }

    pub fn ensemble_dt(&self) -> f64 {
        self.ensemble.dt.unwrap_or(0.01 / self.coupling.abs().max(1.0))
    }

    /// Fills derived defaults so the echoed config is fully explicit.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        c.run.dt = Some(self.spectral_dt());
        c.ensemble.dt = Some(self.ensemble_dt());
        c.ensemble.t_end = Some(self.ensemble.t_end.unwrap_or(self.run.t_end));
        if c.stability.couplings.is_empty() {
            c.stability.couplings = vec![self.coupling];
        }
        if c.marginal.kind != "mixture" && c.marginal.kind != "gaussian" && c.marginal.kind != "tabulated" {
            c.marginal.delta = Some(self.marginal.delta.unwrap_or(if c.marginal.kind == "cauchy" { 1.0 } else { 0.1 }));
            c.marginal.omega = Some(self.marginal.omega.unwrap_or(if c.marginal.kind == "cauchy" { 0.0 } else { 0.55 }));
            if c.marginal.kind == "tri-cauchy" {
                c.marginal.alpha = Some(self.marginal.alpha.unwrap_or(0.17));
            }
        }
        if c.marginal.kind == "gaussian" {
            c.marginal.sigma = Some(self.marginal.sigma.unwrap_or(1.0));
        }
        c
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.resolved()).expect("config serializes")
    }

    /// Lists every violated constraint (not just the first).
    pub fn validate(&self) -> Result<(), CliError> {
        let mut e = Vec::new();
        let pos = |e: &mut Vec<String>, name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                e.push(format!("`{name}` must be positive (got {v})"));
            }
        };
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            e.push(format!("`coupling` must be non-negative (got {})", self.coupling));
        }
        let m = &self.marginal;
        for (name, v) in [("marginal.delta", m.delta), ("marginal.sigma", m.sigma)] {
            if let Some(v) = v {
                pos(&mut e, name, v);
            }
        }
        if let Some(a) = m.alpha {
            if !(a > 0.0 && a < 1.0) {
                e.push(format!("`marginal.alpha` must lie in (0, 1) (got {a})"));
            }
        }
        match m.kind.as_str() {
            "cauchy" | "bi-cauchy" | "tri-cauchy" | "gaussian" => {}
            "mixture" => match &m.components {
                Some(cs) if !cs.is_empty() => {
                    for (i, c) in cs.iter().enumerate() {
                        pos(&mut e, &format!("marginal.components[{i}].delta"), c.delta);
                        pos(&mut e, &format!("marginal.components[{i}].c"), c.c);
                    }
                }
                _ => e.push("`marginal.components` is required for kind = \"mixture\"".into()),
            },
            "tabulated" => {
                if m.file.is_none() {
                    e.push("`marginal.file` is required for kind = \"tabulated\"".into());
                }
            }
            other => e.push(format!(
                "`marginal.kind` = \"{other}\" is not one of cauchy, bi-cauchy, tri-cauchy, mixture, gaussian, tabulated"
            )),
        }
        let g = &self.grid;
        if g.modes < 2 {
            e.push(format!("`grid.modes` must be at least 2 (got {})", g.modes));
        }
        if g.nodes < 64 {
            e.push(format!("`grid.nodes` must be at least 64 (got {})", g.nodes));
        }
        if g.full_line && g.nodes % 2 == 0 {
            e.push(format!("`grid.nodes` must be odd on a full-line grid (got {})", g.nodes));
        }
        if !(g.tau_max >= 10.0 && g.tau_max.is_finite()) {
            e.push(format!("`grid.tau_max` must be at least 10 (got {})", g.tau_max));
        }
        pos(&mut e, "run.t_end", self.run.t_end);
        if let Some(dt) = self.run.dt {
            pos(&mut e, "run.dt", dt);
            if g.nodes >= 2 && dt > self.grid_spec().dtau() {
                e.push(format!("`run.dt` = {dt} exceeds the grid spacing dτ = {}", self.grid_spec().dtau()));
            }
        }
        if self.run.sample_every == 0 {
            e.push("`run.sample_every` must be at least 1".into());
        }
        if let Some(a) = self.run.norm_rate {
            pos(&mut e, "run.norm_rate", a);
        }
        let p = &self.perturbation;
        if p.mode == 0 || p.mode > g.modes {
            e.push(format!("`perturbation.mode` must lie in 1..={} (got {})", g.modes, p.mode));
        }
        if !p.eps.is_finite() {
            e.push("`perturbation.eps` must be finite".into());
        }
        if p.profile != "bump" && p.profile != "harmonic" {
            e.push(format!("`perturbation.profile` = \"{}\" is not one of bump, harmonic", p.profile));
        }
        for k in &self.stability.couplings {
            pos(&mut e, "stability.couplings", *k);
        }
        let en = &self.ensemble;
        if en.n == 0 {
            e.push("`ensemble.n` must be at least 1".into());
        }
        if en.init != "uniform" && en.init != "bump" {
            e.push(format!("`ensemble.init` = \"{}\" is not one of uniform, bump", en.init));
        }
        if let Some(dt) = en.dt {
            pos(&mut e, "ensemble.dt", dt);
        }
        if let Some(t) = en.t_end {
            pos(&mut e, "ensemble.t_end", t);
        }
        if en.sample_every == 0 {
            e.push("`ensemble.sample_every` must be at least 1".into());
        }
        let v = &self.volterra;
        if v.kernel != "hom" && v.kernel != "pls" {
            e.push(format!("`volterra.kernel` = \"{}\" is not one of hom, pls", v.kernel));
        }
        pos(&mut e, "volterra.h", v.h);
        pos(&mut e, "volterra.horizon", v.horizon);
        let o = &self.oa;
        pos(&mut e, "oa.a", o.a);
        pos(&mut e, "oa.sample_dt", o.sample_dt);
        pos(&mut e, "oa.tau_max", o.tau_max);
        if o.n_max == 0 {
            e.push("`oa.n_max` must be at least 1".into());
        }
        if o.nodes < 64 || o.nodes % 2 == 0 {
            e.push(format!("`oa.nodes` must be odd and at least 64 (got {})", o.nodes));
        }
        if o.amplitudes.is_empty() {
            e.push("`oa.amplitudes` must not be empty".into());
        }
        let b = &self.bifurcate;
        pos(&mut e, "bifurcate.k_min", b.k_min);
        pos(&mut e, "bifurcate.step", b.step);
        if !(b.k_max >= b.k_min) {
            e.push(format!("`bifurcate.k_max` ({}) must be at least `bifurcate.k_min` ({})", b.k_max, b.k_min));
        }
        if b.mode != "continuation" && b.mode != "multistart" {
            e.push(format!("`bifurcate.mode` = \"{}\" is not one of continuation, multistart", b.mode));
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(e))
        }
    }

    /// Builds the frequency marginal; tabulated files resolve against `base`.
    pub fn marginal(&self, base: Option<&Path>) -> Result<FrequencyMarginal, CliError> {
        let r = self.resolved();
        let m = &r.marginal;
        let d = m.delta.unwrap_or(1.0);
        let om = m.omega.unwrap_or(0.0);
        let g = match m.kind.as_str() {
            "cauchy" => FrequencyMarginal::cauchy(d, om),
            "bi-cauchy" => FrequencyMarginal::bi_cauchy(d, om),
            "tri-cauchy" => FrequencyMarginal::tri_cauchy(d, om, m.alpha.unwrap_or(0.17)),
            "gaussian" => FrequencyMarginal::gaussian(m.sigma.unwrap_or(1.0)),
            "mixture" => FrequencyMarginal::cauchy_mixture(
                m.components
                    .iter()
                    .flatten()
                    .map(|c| CauchyComponent { weight: c.c, center: c.omega, width: c.delta })
                    .collect(),
            ),
            "tabulated" => {
                let file = PathBuf::from(m.file.as_deref().unwrap_or_default());
                let path = match base {
                    Some(b) if file.is_relative() => b.join(file),
                    _ => file,
                };
                let (dtau, values) = read_tabulated(&path)?;
                FrequencyMarginal::tabulated(dtau, values)
            }
            _ => unreachable!("validated"),
        };
        g.map_err(CliError::from)
    }
}

/// Reads (τ, Re ĝ, Im ĝ) rows on a uniform grid starting at τ = 0.
pub fn read_tabulated(path: &Path) -> Result<(f64, Vec<Complex64>), CliError> {
    let io = |e: anyhow::Error| CliError::Io(e.context(format!("reading {}", path.display())));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io(e.into()))?;
    let mut taus = Vec::new();
    let mut vals = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io(e.into()))?;
        let nums: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match nums {
            Ok(v) if v.len() == 3 => {
                taus.push(v[0]);
                vals.push(Complex64::new(v[1], v[2]));
            }
            // a header line
            Err(_) if i == 0 => continue,
            _ => {
                return Err(CliError::Validation(vec![format!(
                    "{}: row {} must hold three numbers (tau, re, im)",
                    path.display(),
                    i + 1
                )]))
            }
        }
    }
    if taus.len() < 2 || taus[0] != 0.0 {
        return Err(CliError::Validation(vec![format!("{}: need at least two rows starting at tau = 0", path.display())]));
    }
    let dtau = taus[1] - taus[0];
    if taus.windows(2).any(|w| ((w[1] - w[0]) - dtau).abs() > 1e-9 * dtau.abs().max(1.0)) {
        return Err(CliError::Validation(vec![format!("{}: tau must be uniformly spaced", path.display())]));
    }
    Ok((dtau, vals))
}
