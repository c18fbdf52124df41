//! Experiment configuration: schema, defaults, validation and hashing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Occupation,
    Density,
    Regularity,
    Sewing,
    Young2d,
    Selfinteract,
    Stability,
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Occupation => "occupation",
            Command::Density => "density",
            Command::Regularity => "regularity",
            Command::Sewing => "sewing",
            Command::Young2d => "young2d",
            Command::Selfinteract => "selfinteract",
            Command::Stability => "stability",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub horizon: f64,
    pub n_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            horizon: 1.0,
            n_steps: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    /// "fbm", "brownian" or "volterra_power".
    pub kind: String,
    /// Hurst index for fbm and volterra_power.
    pub h: f64,
    pub dim: usize,
    /// volterra_power coefficients.
    pub x0: f64,
    pub b0: f64,
    pub beta: f64,
    pub theta: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            kind: "fbm".into(),
            h: 0.25,
            dim: 1,
            x0: 1.0,
            b0: 0.2,
            beta: -0.5,
            theta: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    pub xi_max: f64,
    /// Odd point count, so zero is a node.
    pub n_points: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            xi_max: 64.0,
            n_points: 257,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub m: usize,
    /// Paths simulated per batch when the ensemble is consumed streamily.
    pub batch: usize,
    /// Paths written out in full by the simulate command.
    pub max_paths_out: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            m: 1000,
            batch: 256,
            max_paths_out: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OccupationConfig {
    pub delta: f64,
    /// "one" or "gaussian_state" (rho(x) = exp(-|x|^2/2)).
    pub weight: String,
    /// Declared Holder exponent of the weight process.
    pub chi: f64,
    /// Time windows (t1, t2); empty means the full window [0, horizon].
    pub pairs: Vec<[f64; 2]>,
}

impl Default for OccupationConfig {
    fn default() -> Self {
        OccupationConfig {
            delta: 0.0,
            weight: "one".into(),
            chi: 1.0,
            pairs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityConfig {
    /// Index into occupation.pairs.
    pub pair: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            pair: 0,
            x_min: -2.0,
            x_max: 2.0,
            n_x: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularityConfig {
    /// Moment order of the ensemble curve.
    pub p: f64,
    /// Frequency-magnitude window for the decay fit.
    pub xi_fit: [f64; 2],
    /// Weight exponents eta scanned for the predicted decay target.
    pub etas: Vec<f64>,
    /// Optional time-regularity index for the two-sided prediction; must
    /// exceed the path's Hurst index when set.
    pub zeta: Option<f64>,
    pub delta: f64,
    pub chi: f64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        RegularityConfig {
            p: 2.0,
            xi_fit: [8.0, 64.0],
            etas: (1..=9).map(|k| 0.05 * k as f64).collect(),
            zeta: None,
            delta: 0.0,
            chi: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SewingConfig {
    /// Frequency of the frozen-phase germ.
    pub xi: f64,
    pub level_lo: u32,
    pub level_hi: u32,
}

impl Default for SewingConfig {
    fn default() -> Self {
        SewingConfig {
            xi: 8.0,
            level_lo: 6,
            level_hi: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Young2dConfig {
    /// Declared Holder exponent of the sampled path.
    pub beta: f64,
    pub level: u32,
    /// Dyadic-refinement study anchor and largest box side.
    pub corner: [f64; 2],
    pub delta0: f64,
    pub n_sizes: usize,
}

impl Default for Young2dConfig {
    fn default() -> Self {
        Young2dConfig {
            beta: 0.45,
            level: 8,
            corner: [0.25, 0.25],
            delta0: 0.25,
            n_sizes: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfinteractConfig {
    /// "skew_delta0", "edwards_grad_delta0", "edwards_fractional",
    /// "durrett_rogers" or "gaussian".
    pub preset: String,
    /// Fractional-preset singularity order.
    pub alpha: f64,
    pub u0: f64,
    pub gamma: f64,
    pub picard_tol: f64,
    pub max_iters: usize,
    /// Fixed Picard window length; absent selects it automatically.
    pub step_tau: Option<f64>,
}

impl Default for SelfinteractConfig {
    fn default() -> Self {
        SelfinteractConfig {
            preset: "skew_delta0".into(),
            alpha: 1.0,
            u0: 0.0,
            gamma: 0.75,
            picard_tol: 1e-8,
            max_iters: 64,
            step_tau: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub levels: Vec<f64>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            levels: vec![4.0, 8.0, 16.0, 32.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Command executed per grid entry.
    pub command: Command,
    /// Dotted path of the overridden scalar field, e.g. "path.h".
    pub field: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_prefix")]
    pub prefix: String,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub path: PathConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub occupation: OccupationConfig,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub regularity: RegularityConfig,
    #[serde(default)]
    pub sewing: SewingConfig,
    #[serde(default)]
    pub young2d: Young2dConfig,
    #[serde(default)]
    pub selfinteract: SelfinteractConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_seed() -> u64 {
    1
}

fn default_prefix() -> String {
    "run".into()
}

pub const PATH_KINDS: &[&str] = &["fbm", "brownian", "volterra_power"];
pub const WEIGHT_KINDS: &[&str] = &["one", "gaussian_state"];
pub const PRESETS: &[&str] = &[
    "skew_delta0",
    "edwards_grad_delta0",
    "edwards_fractional",
    "durrett_rogers",
    "gaussian",
];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical serialization of the fully resolved config.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        let g = &self.grid;
        if !(g.horizon > 0.0) || !g.horizon.is_finite() {
            return Err(format!("grid.horizon must be positive, got {}", g.horizon));
        }
        if g.n_steps == 0 {
            return Err("grid.n_steps must be at least 1".into());
        }
        let p = &self.path;
        if !PATH_KINDS.contains(&p.kind.as_str()) {
            return Err(format!(
                "path.kind must be one of {PATH_KINDS:?}, got \"{}\"",
                p.kind
            ));
        }
        if p.dim == 0 {
            return Err("path.dim must be at least 1".into());
        }
        if p.kind != "brownian" && !(p.h > 0.0 && p.h < 1.0) {
            return Err(format!("path.h must lie in (0, 1), got {}", p.h));
        }
        if p.kind == "volterra_power" {
            if !(0.5..=1.0).contains(&p.theta) {
                return Err(format!("path.theta must lie in [1/2, 1], got {}", p.theta));
            }
            if p.x0 < 0.0 || p.b0 < 0.0 {
                return Err("path.x0 and path.b0 must be nonnegative".into());
            }
            if p.dim != 1 {
                return Err("path.dim must be 1 for volterra_power".into());
            }
        }
        let s = &self.spectral;
        if !(s.xi_max > 0.0) || !s.xi_max.is_finite() {
            return Err(format!("spectral.xi_max must be positive, got {}", s.xi_max));
        }
        if s.n_points < 3 || s.n_points % 2 == 0 {
            return Err(format!(
                "spectral.n_points must be odd and at least 3, got {}",
                s.n_points
            ));
        }
        let e = &self.ensemble;
        if e.m == 0 || e.batch == 0 {
            return Err("ensemble.m and ensemble.batch must be at least 1".into());
        }
        let o = &self.occupation;
        if !(o.delta >= 0.0) || !o.delta.is_finite() {
            return Err(format!("occupation.delta must be nonnegative, got {}", o.delta));
        }
        if !WEIGHT_KINDS.contains(&o.weight.as_str()) {
            return Err(format!(
                "occupation.weight must be one of {WEIGHT_KINDS:?}, got \"{}\"",
                o.weight
            ));
        }
        if !(0.0..=1.0).contains(&o.chi) {
            return Err(format!("occupation.chi must lie in [0, 1], got {}", o.chi));
        }
        for (i, pair) in o.pairs.iter().enumerate() {
            for &t in pair {
                if !(0.0..=g.horizon + 1e-12).contains(&t) {
                    return Err(format!(
                        "occupation.pairs[{i}] contains time {t} outside [0, horizon]"
                    ));
                }
            }
        }
        let d = &self.density;
        let n_pairs = o.pairs.len().max(1);
        if d.pair >= n_pairs {
            return Err(format!(
                "density.pair index {} out of range for {n_pairs} occupation pairs",
                d.pair
            ));
        }
        if d.n_x < 2 || !(d.x_min < d.x_max) {
            return Err("density window needs x_min < x_max and n_x >= 2".into());
        }
        let r = &self.regularity;
        if !(r.p >= 1.0) || !r.p.is_finite() {
            return Err(format!("regularity.p must be at least 1, got {}", r.p));
        }
        if !(r.xi_fit[0] >= 0.0 && r.xi_fit[0] < r.xi_fit[1]) {
            return Err(format!(
                "regularity.xi_fit must be an increasing nonnegative window, got {:?}",
                r.xi_fit
            ));
        }
        if r.etas.is_empty() || r.etas.iter().any(|&eta| !(eta > 0.0 && eta < 0.5)) {
            return Err("regularity.etas must be a nonempty list inside (0, 1/2)".into());
        }
        if let Some(z) = r.zeta {
            if !(z > 0.0) || !z.is_finite() {
                return Err(format!("regularity.zeta must be positive, got {z}"));
            }
        }
        if !(r.delta >= 0.0) || !(0.0..=1.0).contains(&r.chi) {
            return Err("regularity.delta must be >= 0 and regularity.chi in [0, 1]".into());
        }
        let sw = &self.sewing;
        if sw.xi == 0.0 || !sw.xi.is_finite() {
            return Err(format!("sewing.xi must be a nonzero finite frequency, got {}", sw.xi));
        }
        if sw.level_hi <= sw.level_lo || sw.level_hi - sw.level_lo < 4 {
            return Err("sewing levels must span at least 4 dyadic levels".into());
        }
        let y = &self.young2d;
        if !(y.beta > 0.0 && y.beta <= 1.0) {
            return Err(format!("young2d.beta must lie in (0, 1], got {}", y.beta));
        }
        if y.level == 0 || y.level > 13 {
            return Err(format!("young2d.level must lie in 1..=13, got {}", y.level));
        }
        if !(y.delta0 > 0.0) || y.n_sizes < 5 {
            return Err("young2d needs delta0 > 0 and n_sizes >= 5".into());
        }
        for &c in &y.corner {
            if !(0.0..=g.horizon).contains(&c) {
                return Err(format!("young2d.corner entry {c} outside [0, horizon]"));
            }
        }
        let si = &self.selfinteract;
        if !PRESETS.contains(&si.preset.as_str()) {
            return Err(format!(
                "selfinteract.preset must be one of {PRESETS:?}, got \"{}\"",
                si.preset
            ));
        }
        if !(si.gamma > 0.5 && si.gamma < 1.0) {
            return Err(format!(
                "selfinteract.gamma must lie in (1/2, 1), got {}",
                si.gamma
            ));
        }
        if !(si.picard_tol > 0.0) || !si.picard_tol.is_finite() {
            return Err(format!(
                "selfinteract.picard_tol must be positive, got {}",
                si.picard_tol
            ));
        }
        if si.max_iters == 0 {
            return Err("selfinteract.max_iters must be at least 1".into());
        }
        if let Some(tau) = si.step_tau {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(format!("selfinteract.step_tau must be positive, got {tau}"));
            }
        }
        if !si.u0.is_finite() {
            return Err("selfinteract.u0 must be finite".into());
        }
        if self.stability.levels.is_empty()
            || self.stability.levels.iter().any(|&l| !(l > 0.0) || !l.is_finite())
        {
            return Err("stability.levels must be a nonempty list of positive levels".into());
        }
        match (&self.command, &self.sweep) {
            (Command::Sweep, None) => {
                return Err("command = \"sweep\" requires a [sweep] block".into())
            }
            (Command::Sweep, Some(sw)) => {
                if sw.command == Command::Sweep {
                    return Err("sweep.command must not itself be \"sweep\"".into());
                }
                if sw.field.is_empty() {
                    return Err("sweep.field must name a config field".into());
                }
                if sw.values.is_empty() {
                    return Err("sweep.values must not be empty".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Copy with one dotted scalar field replaced, revalidated.
    pub fn with_override(&self, field: &str, value: &toml::Value) -> Result<Self, String> {
        let mut tree = toml::Value::try_from(self).map_err(|e| e.to_string())?;
        let segments: Vec<&str> = field.split('.').collect();
        let (leaf, parents) = segments
            .split_last()
            .ok_or_else(|| "sweep.field must not be empty".to_string())?;
        let mut node = &mut tree;
        for seg in parents {
            node = node
                .as_table_mut()
                .ok_or_else(|| format!("sweep.field \"{field}\": \"{seg}\" is not a table"))?
                .get_mut(*seg)
                .ok_or_else(|| format!("sweep.field \"{field}\": unknown table \"{seg}\""))?;
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| format!("sweep.field \"{field}\": parent is not a table"))?;
        if !table.contains_key(*leaf) {
            return Err(format!("sweep.field \"{field}\": unknown field \"{leaf}\""));
        }
        table.insert(leaf.to_string(), value.clone());
        let cfg: ExperimentConfig = tree.try_into().map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = ExperimentConfig::parse("command = \"simulate\"").unwrap();
        assert_eq!(cfg.command, Command::Simulate);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.grid.n_steps, 1024);
        assert_eq!(cfg.path.kind, "fbm");
        assert_eq!(cfg.regularity.etas.len(), 9);
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"
            command = "regularity"
            seed = 42
            [grid]
            horizon = 0.5
            n_steps = 2048
            [path]
            kind = "fbm"
            h = 0.3
            [regularity]
            p = 2.0
            xi_fit = [4.0, 32.0]
        "#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let reparsed = ExperimentConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(cfg, reparsed);
        assert_eq!(cfg.hash(), reparsed.hash());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::parse("command = \"simulate\"").unwrap();
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn validation_reports_field_paths() {
        let bad = "command = \"simulate\"\n[grid]\nn_steps = 0";
        let err = ExperimentConfig::parse(bad).unwrap_err();
        assert!(err.contains("grid.n_steps"), "{err}");

        let bad = "command = \"simulate\"\n[path]\nkind = \"levy\"";
        let err = ExperimentConfig::parse(bad).unwrap_err();
        assert!(err.contains("path.kind"), "{err}");

        let bad = "command = \"sweep\"";
        let err = ExperimentConfig::parse(bad).unwrap_err();
        assert!(err.contains("[sweep]"), "{err}");

        let bad = "command = \"simulate\"\nunknown_key = 1";
        assert!(ExperimentConfig::parse(bad).is_err());
    }

    #[test]
    fn overrides_follow_dotted_paths() {
        let cfg = ExperimentConfig::parse("command = \"simulate\"").unwrap();
        let v = toml::Value::Float(0.4);
        let out = cfg.with_override("path.h", &v).unwrap();
        assert_eq!(out.path.h, 0.4);
        assert!(cfg.with_override("path.missing", &v).is_err());
        // Overrides revalidate.
        let bad = toml::Value::Float(3.0);
        assert!(cfg.with_override("path.h", &bad).is_err());
    }
}
