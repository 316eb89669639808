//! Flat run configuration read from TOML.

use crate::discretization::GridKind;
use crate::dynamics::DynamicsConfig;
use crate::error::{Error, Result};
use crate::model::{ModelParams, SharpConstants};
use crate::solvers::{RadialGridConfig, SeedKind, SolverConfig};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::{Path, PathBuf};

/// Mass `a`, either absolute or as a multiple of the threshold `a₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassSpec {
    Absolute(f64),
    OfA0(f64),
}

impl MassSpec {
    pub fn resolve(&self, consts: &SharpConstants) -> f64 {
        match *self {
            MassSpec::Absolute(a) => a,
            MassSpec::OfA0(x) => x * consts.a0,
        }
    }
}

impl std::str::FromStr for MassSpec {
    type Err = Error;

    /// Accepts `12.5`, `a0`, `0.75a0` and `0.75*a0`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || {
            Error::Config(format!(
                "cannot read mass `{s}`; use a number, `a0` or `<x>a0`"
            ))
        };
        if let Some(head) = t.strip_suffix("a0") {
            let head = head.trim().trim_end_matches('*').trim();
            if head.is_empty() {
                return Ok(MassSpec::OfA0(1.0));
            }
            return head.parse().map(MassSpec::OfA0).map_err(|_| bad());
        }
        t.parse().map(MassSpec::Absolute).map_err(|_| bad())
    }
}

impl std::fmt::Display for MassSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MassSpec::Absolute(a) => write!(f, "{a}"),
            MassSpec::OfA0(x) => write!(f, "{x}a0"),
        }
    }
}

impl Serialize for MassSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MassSpec::Absolute(a) => s.serialize_f64(*a),
            MassSpec::OfA0(_) => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for MassSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(a) => Ok(MassSpec::Absolute(a)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKindName {
    Uniform,
    Graded,
}

/// Every key has a default; an empty file is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub mu: f64,
    pub q: f64,
    pub a: MassSpec,

    pub ground_nodes: usize,
    /// Outer radius of the ground-state grid; sized from the mass when absent.
    pub ground_radius: Option<f64>,
    pub ground_grid: GridKindName,
    pub ground_stretch: f64,
    pub excited_nodes: usize,
    pub excited_radius: f64,
    pub excited_grid: GridKindName,
    pub excited_stretch: f64,

    pub flow_dt: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub seed_kind: SeedKind,
    pub bubble_eps: f64,
    pub bubble_t: f64,
    pub newton_switch: f64,
    pub newton_max_iter: usize,

    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub delta: f64,
    pub scale_s: f64,
    pub box_n: usize,
    #[serde(rename = "box_L")]
    pub box_half_width: Option<f64>,
    pub sample_every: usize,
    pub tail_tol: f64,
    pub energy_tol: f64,
    #[serde(rename = "blowup_T")]
    pub blowup_t_final: f64,
    pub blowup_dt: f64,
    pub blowup_sample_every: usize,
    pub blowup_energy_tol: f64,
    pub save_final_state: bool,

    pub n_samples: usize,
    pub bubble_eps_list: Vec<f64>,
    pub sweep_fractions: Vec<f64>,
    pub seed: u64,

    pub output_dir: PathBuf,
    pub format: OutputFormat,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = ModelParams::default();
        let solver = SolverConfig::default();
        let dynamics = DynamicsConfig::default();
        RunConfig {
            n: model.n,
            alpha: model.alpha,
            mu: model.mu,
            q: model.q,
            a: MassSpec::OfA0(0.75),
            ground_nodes: 1024,
            ground_radius: None,
            ground_grid: GridKindName::Graded,
            ground_stretch: 2.0,
            excited_nodes: 1024,
            excited_radius: 60.0,
            excited_grid: GridKindName::Graded,
            excited_stretch: 4.0,
            flow_dt: solver.dt,
            grad_tol: solver.grad_tol,
            max_iter: solver.max_iter,
            seed_kind: solver.seed_kind,
            bubble_eps: solver.bubble_eps,
            bubble_t: solver.bubble_t,
            newton_switch: solver.newton_switch,
            newton_max_iter: solver.newton_max_iter,
            t_final: dynamics.t_final,
            dt: dynamics.dt,
            delta: dynamics.delta,
            scale_s: dynamics.scale_s,
            box_n: dynamics.box_n,
            box_half_width: dynamics.box_half_width,
            sample_every: dynamics.sample_every,
            tail_tol: dynamics.tail_tol,
            energy_tol: dynamics.energy_tol,
            blowup_t_final: dynamics.blowup_t_final,
            blowup_dt: dynamics.blowup_dt,
            blowup_sample_every: dynamics.blowup_sample_every,
            blowup_energy_tol: dynamics.blowup_energy_tol,
            save_final_state: false,
            n_samples: 20,
            bubble_eps_list: vec![0.2, 0.1, 0.05],
            sweep_fractions: vec![0.25, 0.5, 0.75, 1.0],
            seed: 1,
            output_dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
            threads: 1,
        }
    }
}

fn kind(name: GridKindName, stretch: f64) -> GridKind {
    match name {
        GridKindName::Uniform => GridKind::Uniform,
        GridKindName::Graded => GridKind::Graded { stretch },
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// `CHOQUARD_OUTPUT_DIR` and `CHOQUARD_THREADS`, the only keys the environment may set.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(dir) = get("CHOQUARD_OUTPUT_DIR") {
            self.output_dir = PathBuf::from(dir);
        }
        if let Some(t) = get("CHOQUARD_THREADS") {
            self.threads = t.trim().parse().ok().filter(|&t| t >= 1).ok_or_else(|| {
                Error::Config(format!(
                    "CHOQUARD_THREADS must be a positive integer, got `{t}`"
                ))
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.n, self.alpha, self.mu, 1.0, self.q)?;
        let (MassSpec::Absolute(a) | MassSpec::OfA0(a)) = self.a;
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Config(format!("a must be positive, got {}", self.a)));
        }
        self.solver().validate()?;
        if self.sample_every == 0 || self.blowup_sample_every == 0 {
            return Err(Error::Config("sample intervals must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.n_samples < 10 {
            return Err(Error::Config(format!(
                "n_samples must be at least 10, got {}",
                self.n_samples
            )));
        }
        if self.bubble_eps_list.len() < 3 || self.bubble_eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "bubble_eps_list needs at least three decreasing values".into(),
            ));
        }
        if self.sweep_fractions.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Config("sweep_fractions must be positive".into()));
        }
        for (name, v) in [
            ("T", self.t_final),
            ("dt", self.dt),
            ("blowup_T", self.blowup_t_final),
            ("blowup_dt", self.blowup_dt),
            ("scale_s", self.scale_s),
            ("tail_tol", self.tail_tol),
            ("energy_tol", self.energy_tol),
            ("blowup_energy_tol", self.blowup_energy_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.box_n.is_power_of_two() || self.box_n < 32 {
            return Err(Error::Config(format!(
                "box_n must be a power of two >= 32, got {}",
                self.box_n
            )));
        }
        Ok(())
    }

    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Canonical text of the keys that can change a result; feeds the provenance digest.
    pub fn digest_text(&self) -> String {
        let d = RunConfig::default();
        RunConfig {
            output_dir: d.output_dir,
            threads: d.threads,
            ..self.clone()
        }
        .canonical()
    }

    pub fn model(&self, consts: &SharpConstants) -> Result<ModelParams> {
        ModelParams::new(self.n, self.alpha, self.mu, self.a.resolve(consts), self.q)
    }

    /// Parameters with `a = 1`, enough to compute the sharp constants.
    pub fn base_model(&self) -> Result<ModelParams> {
        ModelParams::new(self.n, self.alpha, self.mu, 1.0, self.q)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            dt: self.flow_dt,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            seed_kind: self.seed_kind,
            bubble_eps: self.bubble_eps,
            bubble_t: self.bubble_t,
            newton_switch: self.newton_switch,
            newton_max_iter: self.newton_max_iter,
        }
    }

    pub fn ground_grid(&self) -> RadialGridConfig {
        RadialGridConfig {
            radius: self.ground_radius,
            n: self.ground_nodes,
            kind: kind(self.ground_grid, self.ground_stretch),
        }
    }

    pub fn excited_grid(&self) -> RadialGridConfig {
        RadialGridConfig {
            radius: Some(self.excited_radius),
            n: self.excited_nodes,
            kind: kind(self.excited_grid, self.excited_stretch),
        }
    }

    pub fn dynamics(&self) -> DynamicsConfig {
        DynamicsConfig {
            t_final: self.t_final,
            dt: self.dt,
            delta: self.delta,
            scale_s: self.scale_s,
            box_n: self.box_n,
            box_half_width: self.box_half_width,
            sample_every: self.sample_every,
            tail_tol: self.tail_tol,
            energy_tol: self.energy_tol,
            blowup_t_final: self.blowup_t_final,
            blowup_dt: self.blowup_dt,
            blowup_sample_every: self.blowup_sample_every,
            blowup_energy_tol: self.blowup_energy_tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("alpah = 2.0\n").unwrap_err().to_string();
        assert!(err.contains("alpah"), "{err}");
    }

    #[test]
    fn mass_forms() {
        assert_eq!("a0".parse::<MassSpec>().unwrap(), MassSpec::OfA0(1.0));
        assert_eq!("0.5a0".parse::<MassSpec>().unwrap(), MassSpec::OfA0(0.5));
        assert_eq!("0.5 * a0".parse::<MassSpec>().unwrap(), MassSpec::OfA0(0.5));
        assert_eq!("12".parse::<MassSpec>().unwrap(), MassSpec::Absolute(12.0));
        assert!("twelve".parse::<MassSpec>().is_err());
        assert_eq!(
            RunConfig::parse("a = 3.5").unwrap().a,
            MassSpec::Absolute(3.5)
        );
        assert_eq!(
            RunConfig::parse("a = \"a0\"").unwrap().a,
            MassSpec::OfA0(1.0)
        );
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(RunConfig::parse("q = 4.0").is_err());
        assert!(RunConfig::parse("box_n = 100").is_err());
        assert!(RunConfig::parse("n_samples = 3").is_err());
        assert!(RunConfig::parse("a = -1.0").is_err());
        assert!(RunConfig::parse("format = \"xml\"").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = RunConfig::parse("a = \"0.5a0\"\nT = 3.0\nbox_L = 20.0\n").unwrap();
        assert_eq!(RunConfig::parse(&cfg.canonical()).unwrap(), cfg);
        let moved = RunConfig {
            output_dir: "elsewhere".into(),
            threads: 4,
            ..cfg.clone()
        };
        assert_eq!(moved.digest_text(), cfg.digest_text());
    }

    #[test]
    fn environment_overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_env(|k| match k {
            "CHOQUARD_OUTPUT_DIR" => Some("/tmp/x".into()),
            "CHOQUARD_THREADS" => Some("3".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/x"));
        assert_eq!(cfg.threads, 3);
        assert!(cfg
            .apply_env(|k| (k == "CHOQUARD_THREADS").then(|| "0".to_string()))
            .is_err());
    }
}
