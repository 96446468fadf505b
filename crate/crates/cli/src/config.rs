//! Flat `key = value` configuration text with repeated `[bump]` sections.
//!
//! ```text
//! op = double_divergence
//! dim = 2
//! weight = bogovskii
//!
//! [bump]
//! center = 0.2, 0.1
//! radius = 0.5
//! ```

use serde::Serialize;

use crate::CliError;

/// One `key = value` line with its position.
#[derive(Clone, Debug)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
    /// 1-based column where the value starts.
    pub col: usize,
}

impl Entry {
    pub fn error(&self, msg: impl Into<String>) -> CliError {
        CliError::Config { line: Some(self.line), col: Some(self.col), msg: msg.into() }
    }

    pub fn f64(&self) -> Result<f64, CliError> {
        self.value.parse().map_err(|_| self.error(format!("`{}` expects a number, got `{}`", self.key, self.value)))
    }

    pub fn usize(&self) -> Result<usize, CliError> {
        self.value
            .parse()
            .map_err(|_| self.error(format!("`{}` expects a non-negative integer, got `{}`", self.key, self.value)))
    }

    pub fn bool(&self) -> Result<bool, CliError> {
        match self.value.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(self.error(format!("`{}` expects true or false, got `{v}`", self.key))),
        }
    }

    pub fn vector(&self) -> Result<Vec<f64>, CliError> {
        parse_vector(&self.value).map_err(|m| self.error(format!("`{}`: {m}", self.key)))
    }
}

/// Top-level entries followed by named sections in file order.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    pub top: Vec<Entry>,
    pub sections: Vec<(String, Vec<Entry>)>,
}

pub fn parse(text: &str) -> Result<RawConfig, CliError> {
    let mut cfg = RawConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(CliError::Config {
                line: Some(line),
                col: Some(indent + 1),
                msg: "section header must end with `]`".into(),
            })?;
            cfg.sections.push((name.trim().to_string(), Vec::new()));
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(CliError::Config {
                line: Some(line),
                col: Some(indent + 1),
                msg: format!("expected `key = value`, found `{trimmed}`"),
            });
        };
        let key = content[..eq].trim().to_string();
        if key.is_empty() {
            return Err(CliError::Config { line: Some(line), col: Some(eq + 1), msg: "missing key before `=`".into() });
        }
        let after = &content[eq + 1..];
        let value = after.trim().to_string();
        let col = eq + 2 + (after.len() - after.trim_start().len());
        let e = Entry { line, key, value, col };
        match cfg.sections.last_mut() {
            Some((_, entries)) => entries.push(e),
            None => cfg.top.push(e),
        }
    }
    Ok(cfg)
}

/// Comma-separated numbers, optionally wrapped in parentheses.
pub fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    inner
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", t.trim())))
        .collect()
}

/// One bump term of the data `f`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub power: u32,
    pub amplitude: f64,
    /// 1-based data component.
    pub component: usize,
}

/// Everything `solve` needs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveConfig {
    pub op: String,
    pub dim: usize,
    pub weight: String,
    pub center: Option<Vec<f64>>,
    pub radius: f64,
    pub axis: Option<Vec<f64>>,
    pub aperture: f64,
    pub power: u32,
    pub source: String,
    /// Domain box `[lo, hi]^d` sampled with `n` points per axis.
    pub grid: (f64, f64, usize),
    pub fd_step: f64,
    pub residual_samples: usize,
    pub green_samples: usize,
    pub project_cokernel: bool,
    pub correction_center: Option<Vec<f64>>,
    pub correction_radius: Option<f64>,
    pub angular: usize,
    pub radial: usize,
    pub patch_radius: f64,
    pub residual_tol: f64,
    pub green_tol: Option<f64>,
    pub support_tol: f64,
    pub bumps: Vec<BumpSpec>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            op: String::new(),
            dim: 2,
            weight: "bogovskii".into(),
            center: None,
            radius: 1.0,
            axis: None,
            aperture: 1.0,
            power: 8,
            source: "auto".into(),
            grid: (-1.5, 1.5, 21),
            fd_step: 0.03,
            residual_samples: 8,
            green_samples: 3,
            project_cokernel: false,
            correction_center: None,
            correction_radius: None,
            angular: 32,
            radial: 16,
            patch_radius: 0.5,
            residual_tol: 1e-4,
            green_tol: None,
            support_tol: 1e-10,
            bumps: Vec::new(),
        }
    }
}

impl SolveConfig {
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let raw = parse(text)?;
        let mut c = SolveConfig::default();
        for e in &raw.top {
            match e.key.as_str() {
                "op" => c.op = e.value.clone(),
                "dim" => c.dim = e.usize()?,
                "weight" => c.weight = e.value.clone(),
                "center" => c.center = Some(e.vector()?),
                "radius" => c.radius = e.f64()?,
                "axis" => c.axis = Some(e.vector()?),
                "aperture" => c.aperture = e.f64()?,
                "power" => c.power = e.usize()? as u32,
                "source" => c.source = e.value.clone(),
                "grid" => {
                    let v = e.vector()?;
                    if v.len() != 3 || v[2] < 2.0 || v[2].fract() != 0.0 {
                        return Err(e.error("`grid` expects `lo, hi, n` with integer n >= 2"));
                    }
                    c.grid = (v[0], v[1], v[2] as usize);
                }
                "fd_step" => c.fd_step = e.f64()?,
                "residual_samples" => c.residual_samples = e.usize()?,
                "green_samples" => c.green_samples = e.usize()?,
                "project_cokernel" => c.project_cokernel = e.bool()?,
                "correction_center" => c.correction_center = Some(e.vector()?),
                "correction_radius" => c.correction_radius = Some(e.f64()?),
                "angular" => c.angular = e.usize()?,
                "radial" => c.radial = e.usize()?,
                "patch_radius" => c.patch_radius = e.f64()?,
                "residual_tol" => c.residual_tol = e.f64()?,
                "green_tol" => c.green_tol = Some(e.f64()?),
                "support_tol" => c.support_tol = e.f64()?,
                other => return Err(e.error(format!("unknown key `{other}`"))),
            }
        }
        for (name, entries) in &raw.sections {
            if name != "bump" {
                let line = entries.first().map(|e| e.line.saturating_sub(1));
                return Err(CliError::Config { line, col: None, msg: format!("unknown section `[{name}]`") });
            }
            let mut b = BumpSpec { center: Vec::new(), radius: 0.5, power: 8, amplitude: 1.0, component: 1 };
            for e in entries {
                match e.key.as_str() {
                    "center" => b.center = e.vector()?,
                    "radius" => b.radius = e.f64()?,
                    "power" => b.power = e.usize()? as u32,
                    "amplitude" => b.amplitude = e.f64()?,
                    "component" => b.component = e.usize()?,
                    other => return Err(e.error(format!("unknown bump key `{other}`"))),
                }
            }
            if b.center.len() != c.dim {
                let line = entries.first().map(|e| e.line);
                return Err(CliError::Config {
                    line,
                    col: None,
                    msg: format!("bump center must have {} coordinates", c.dim),
                });
            }
            c.bumps.push(b);
        }
        if c.op.is_empty() {
            return Err(CliError::Config { line: None, col: None, msg: "missing `op`".into() });
        }
        Ok(c)
    }
}
