//! Flat run configuration: a TOML file, then `--set key=value` pairs, then
//! the named flags, each layer overriding the previous one.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
    /// Wall-clock budget in seconds, recorded in the report header.
    pub budget_seconds: f64,
    /// Accept parameters outside `alpha/beta < d < alpha(1+beta)/beta`.
    pub allow_boundary: bool,
    /// Also emit sampled paths (simulate, limit).
    pub paths: bool,

    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub v: f64,

    pub phi_width: f64,
    pub phi_amplitude: f64,
    /// `constant` or `bump`.
    pub psi: String,
    pub psi_level: f64,
    pub psi_center: f64,
    pub psi_width: f64,

    // simulate / bridge
    pub t_scale: f64,
    pub horizon: f64,
    pub knots: usize,
    pub replicates: u64,
    /// Box half-width as a multiple of `T^(1/alpha)`, unless `box_half_width`
    /// is given.
    pub box_factor: f64,
    pub box_half_width: Option<f64>,
    /// `box` or `lebesgue`; defaults to `box` in d = 1.
    pub centering: Option<String>,
    pub cap: usize,
    pub offspring_cutoff: usize,

    // bridge
    pub bridge_eps: f64,
    pub bridge_sigmas: f64,
    pub vt_nx: usize,
    pub vt_nt: usize,

    // limit
    pub times: Vec<f64>,
    pub samples: u64,
    pub z_points: usize,

    // codiff
    pub query: [f64; 4],
    pub z1: f64,
    pub z2: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub r_nodes: usize,
    pub rho_panel: f64,
    pub rel_tol: f64,

    // regime
    pub d_grid: Option<Vec<f64>>,
    pub alpha_grid: Option<Vec<f64>>,
    pub beta_grid: Option<Vec<f64>>,
    pub gamma_grid: Vec<f64>,

    // verify
    pub criteria: Vec<u8>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: 0,
            budget_seconds: 7200.0,
            allow_boundary: false,
            paths: false,
            d: 5,
            alpha: 2.0,
            beta: 0.5,
            v: 1.0,
            phi_width: 1.0,
            phi_amplitude: 1.0,
            psi: "constant".into(),
            psi_level: 1.0,
            psi_center: 0.5,
            psi_width: 0.1,
            t_scale: 4.0,
            horizon: 1.0,
            knots: 100,
            replicates: 1000,
            box_factor: 4.0,
            box_half_width: None,
            centering: None,
            cap: 2_000_000,
            offspring_cutoff: 100_000,
            bridge_eps: 0.1,
            bridge_sigmas: 3.0,
            vt_nx: 2400,
            vt_nt: 80,
            times: vec![0.5, 1.0, 2.0],
            samples: 10_000,
            z_points: 17,
            query: [0.0, 1.0, 2.0, 3.0],
            z1: 1.0,
            z2: 1.0,
            t_min: 1e2,
            t_max: 1e4,
            t_points: 7,
            r_nodes: 16,
            rho_panel: 0.5,
            rel_tol: 1e-3,
            d_grid: None,
            alpha_grid: None,
            beta_grid: None,
            gamma_grid: Vec::new(),
            criteria: (1..=12).collect(),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn read_file(path: &Path) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    text.parse::<Table>().map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

/// `key=value`, the value read as a TOML value (bare words become strings).
pub fn parse_assignment(s: &str) -> Result<(String, Value), ConfigError> {
    let (k, v) = s.split_once('=').ok_or_else(|| ConfigError(format!("expected key=value, got `{s}`")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(ConfigError(format!("empty key in `{s}`")));
    }
    let v = v.trim();
    let value = format!("x = {v}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("x"))
        .unwrap_or_else(|| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

pub fn resolve(layers: Vec<(String, Value)>, base: Table) -> Result<RunConfig, ConfigError> {
    let mut table = base;
    for (k, v) in layers {
        table.insert(k, v);
    }
    let cfg: RunConfig = Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError(e.to_string()))?;
    cfg.check()?;
    Ok(cfg)
}

impl RunConfig {
    fn check(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(m));
        if !(self.budget_seconds > 0.0) {
            return bad(format!("budget_seconds must be positive, got {}", self.budget_seconds));
        }
        if self.knots < 2 {
            return bad("knots must be at least 2".into());
        }
        if self.z_points < 2 {
            return bad("z_points must be at least 2".into());
        }
        if self.t_points < 2 || !(self.t_min > 0.0 && self.t_max > self.t_min) {
            return bad(format!(
                "codifference T grid needs 0 < t_min < t_max and t_points >= 2, got [{}, {}] x {}",
                self.t_min, self.t_max, self.t_points
            ));
        }
        if let Some(c) = self.criteria.iter().find(|&&c| !(1..=12).contains(&c)) {
            return bad(format!("acceptance criteria are numbered 1..=12, got {c}"));
        }
        if !matches!(self.psi.as_str(), "constant" | "bump") {
            return bad(format!("psi must be `constant` or `bump`, got `{}`", self.psi));
        }
        if let Some(c) = &self.centering {
            if !matches!(c.as_str(), "box" | "lebesgue") {
                return bad(format!("centering must be `box` or `lebesgue`, got `{c}`"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("d=3").unwrap(), ("d".into(), Value::Integer(3)));
        assert_eq!(parse_assignment("psi = bump").unwrap().1, Value::String("bump".into()));
        let (_, v) = parse_assignment("times=[1.0, 2.0]").unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
        assert!(parse_assignment("nothing").is_err());
    }

    #[test]
    fn later_layers_win_and_unknown_keys_fail() {
        let base: Table = "alpha = 1.2\nd = 3".parse().unwrap();
        let cfg = resolve(vec![("d".into(), Value::Integer(4))], base.clone()).unwrap();
        assert_eq!((cfg.d, cfg.alpha), (4, 1.2));
        assert!(resolve(vec![("colour".into(), Value::Integer(1))], base).is_err());
        assert!(resolve(vec![("criteria".into(), Value::Array(vec![Value::Integer(13)]))], Table::new()).is_err());
    }
}
