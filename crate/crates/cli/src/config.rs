use std::path::{Path, PathBuf};

use latspec_core::lattice::{sparse_support, SparseRule};
use latspec_core::{GreenConfig, Potential, Site};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GreenDecay,
    QDecay,
    WaveProbe,
    SimonWolff,
    Impurity,
    SpectrumFill,
    BumpMeasure,
    OnePlusGv,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GreenDecay => "green-decay",
            ExperimentKind::QDecay => "q-decay",
            ExperimentKind::WaveProbe => "wave-probe",
            ExperimentKind::SimonWolff => "simon-wolff",
            ExperimentKind::Impurity => "impurity",
            ExperimentKind::SpectrumFill => "spectrum-fill",
            ExperimentKind::BumpMeasure => "bump-measure",
            ExperimentKind::OnePlusGv => "one-plus-gv",
        }
    }

    fn needs_potential(self) -> bool {
        matches!(
            self,
            ExperimentKind::WaveProbe
                | ExperimentKind::SimonWolff
                | ExperimentKind::BumpMeasure
                | ExperimentKind::OnePlusGv
        )
    }
}

/// One experiment, as read from TOML. After [`ExperimentConfig::load`] every
/// optional tolerance has been resolved to a concrete value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub green: GreenSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green_decay: Option<GreenDecay>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_decay: Option<QDecay>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave_probe: Option<WaveProbeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simon_wolff: Option<SimonWolff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impurity: Option<Impurity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_fill: Option<SpectrumFill>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump_measure: Option<BumpMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_plus_gv: Option<OnePlusGv>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GreenSection {
    pub tolerance: Option<f64>,
    pub min_order: Option<usize>,
    pub max_order: Option<usize>,
    pub spectral_guard: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeProfile {
    /// The same amplitude at every site.
    #[default]
    Constant,
    /// `amplitude * (1 - 1/k)` on the k-th shell of distinct `|n|`.
    Converging,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PotentialSection {
    pub rule: SparseRule,
    /// Sites are generated inside the ℓ∞ ball of this radius.
    pub radius: i64,
    pub amplitude: f64,
    #[serde(default)]
    pub profile: AmplitudeProfile,
    /// Sparseness exponent checked by `validate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GreenDecay {
    pub lambda: f64,
    pub direction: Option<Vec<i64>>,
    pub n_max: Option<usize>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct QDecay {
    pub tau1: f64,
    pub bump: Option<latspec_core::scattering::BumpProfile>,
    pub sites: Option<Vec<Vec<i64>>>,
    pub half_width: Option<f64>,
    pub points_per_period: Option<usize>,
    pub refinement_tolerance: Option<f64>,
    pub max_panels: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct WaveProbeSection {
    pub box_radius: i64,
    pub times: Vec<f64>,
    pub tolerance: Option<f64>,
    pub margin: Option<i64>,
    pub width: Option<f64>,
    pub center: Option<Vec<i64>>,
    pub max_terms: Option<usize>,
    /// Convergence is declared when the last increment is below this
    /// fraction of the first.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimonWolff {
    pub lambda: f64,
    pub j: Vec<i64>,
    pub radii: Vec<i64>,
    pub near_eigenvalue: Option<f64>,
    pub summable: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Impurity {
    pub betas: Vec<f64>,
    /// Cross-check against the lowest Dirichlet eigenvalue on a box of this
    /// radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_radius: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SpectrumFill {
    pub lambda0: f64,
    pub radius: i64,
    pub rule: SparseRule,
    pub realizations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Sparseness exponent checked by `validate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BumpMeasure {
    pub beta: f64,
    pub far_sites: Vec<Vec<i64>>,
    /// Comparison points as `[re, im]` pairs.
    pub z: Vec<[f64; 2]>,
    pub local_radius: i64,
    pub global_radius: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OnePlusGv {
    pub epsilon: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    pub sites: Vec<Vec<i64>>,
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{key}`: {msg}"))
}

fn finite(key: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(bad(key, "must be finite"))
    }
}

fn positive(key: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(bad(key, format!("must be positive, got {x}")))
    }
}

fn site(key: &str, coords: &[i64], dim: usize) -> Result<Site, CliError> {
    if coords.len() != dim {
        return Err(bad(key, format!("expected {dim} coordinates, got {}", coords.len())));
    }
    Ok(Site::new(coords.to_vec()))
}

fn sites(key: &str, list: &[Vec<i64>], dim: usize) -> Result<Vec<Site>, CliError> {
    if list.is_empty() {
        return Err(bad(key, "must not be empty"));
    }
    list.iter().map(|c| site(key, c, dim)).collect()
}

impl ExperimentConfig {
    /// Reads, parses, validates and resolves defaults.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        config.validate()?;
        config.resolve();
        Ok(config)
    }

    fn sections(&self) -> [(ExperimentKind, bool); 8] {
        [
            (ExperimentKind::GreenDecay, self.green_decay.is_some()),
            (ExperimentKind::QDecay, self.q_decay.is_some()),
            (ExperimentKind::WaveProbe, self.wave_probe.is_some()),
            (ExperimentKind::SimonWolff, self.simon_wolff.is_some()),
            (ExperimentKind::Impurity, self.impurity.is_some()),
            (ExperimentKind::SpectrumFill, self.spectrum_fill.is_some()),
            (ExperimentKind::BumpMeasure, self.bump_measure.is_some()),
            (ExperimentKind::OnePlusGv, self.one_plus_gv.is_some()),
        ]
    }

    fn validate(&self) -> Result<(), CliError> {
        let dim = self.dimension;
        if !(1..=4).contains(&dim) {
            return Err(bad("dimension", format!("must be between 1 and 4, got {dim}")));
        }
        for (kind, present) in self.sections() {
            if kind == self.experiment && !present {
                return Err(bad(kind.name(), "missing table for the selected experiment"));
            }
            if kind != self.experiment && present {
                return Err(bad(
                    kind.name(),
                    format!("table does not belong to experiment {}", self.experiment.name()),
                ));
            }
        }
        self.validate_green()?;
        match (&self.potential, self.experiment.needs_potential()) {
            (None, true) => return Err(bad("potential", "missing table")),
            (Some(p), _) => self.validate_potential(p)?,
            _ => {}
        }

        if let Some(s) = &self.green_decay {
            finite("green-decay.lambda", s.lambda)?;
            if let Some(d) = &s.direction {
                let u = site("green-decay.direction", d, dim)?;
                if u.is_origin() {
                    return Err(bad("green-decay.direction", "must be nonzero"));
                }
            }
            if matches!(s.n_max, Some(n) if n < 3) {
                return Err(bad("green-decay.n-max", "needs at least 3 points"));
            }
            if let Some(e) = s.epsilon {
                positive("green-decay.epsilon", e)?;
            }
            let eps = s.epsilon.unwrap_or(1e-6);
            if s.lambda >= -eps && s.lambda <= 4.0 * dim as f64 + eps {
                return Err(bad(
                    "green-decay.lambda",
                    format!("must lie outside [-{eps}, {}]", 4.0 * dim as f64 + eps),
                ));
            }
        }
        if let Some(s) = &self.q_decay {
            if dim != 2 {
                return Err(bad("dimension", "q-decay is implemented for dimension 2 only"));
            }
            if !(s.tau1 > 0.0 && s.tau1 < 8.0) || (s.tau1 - 4.0).abs() < 1e-6 {
                return Err(bad("q-decay.tau1", "must lie in (0, 8) away from the critical level 4"));
            }
            if let Some(list) = &s.sites {
                if sites("q-decay.sites", list, 2)?.iter().any(Site::is_origin) {
                    return Err(bad("q-decay.sites", "must be nonzero"));
                }
            }
            if let Some(w) = s.half_width {
                positive("q-decay.half-width", w)?;
            }
            if matches!(s.points_per_period, Some(p) if p < 20) {
                return Err(bad("q-decay.points-per-period", "must be at least 20"));
            }
            if let Some(t) = s.refinement_tolerance {
                positive("q-decay.refinement-tolerance", t)?;
            }
        }
        if let Some(s) = &self.wave_probe {
            if s.box_radius < 1 {
                return Err(bad("wave-probe.box-radius", "must be at least 1"));
            }
            if s.times.is_empty() {
                return Err(bad("wave-probe.times", "must not be empty"));
            }
            if s.times.iter().any(|t| !(t.is_finite() && *t > 0.0))
                || s.times.windows(2).any(|w| w[1] <= w[0])
            {
                return Err(bad("wave-probe.times", "must be positive and strictly increasing"));
            }
            if let Some(t) = s.tolerance {
                if !(t > 0.0 && t <= 1e-4) {
                    return Err(bad("wave-probe.tolerance", "must lie in (0, 1e-4]"));
                }
            }
            if matches!(s.margin, Some(m) if m < 0) {
                return Err(bad("wave-probe.margin", "must be nonnegative"));
            }
            if let Some(w) = s.width {
                positive("wave-probe.width", w)?;
            }
            if let Some(c) = &s.center {
                site("wave-probe.center", c, dim)?;
            }
            if let Some(r) = s.ratio {
                positive("wave-probe.ratio", r)?;
            }
        }
        if let Some(s) = &self.simon_wolff {
            finite("simon-wolff.lambda", s.lambda)?;
            site("simon-wolff.j", &s.j, dim)?;
            if s.radii.is_empty() || s.radii.iter().any(|&r| r < 0) || s.radii.windows(2).any(|w| w[1] <= w[0]) {
                return Err(bad("simon-wolff.radii", "must be nonnegative and strictly increasing"));
            }
            if let Some(t) = s.near_eigenvalue {
                positive("simon-wolff.near-eigenvalue", t)?;
            }
            if let Some(t) = s.summable {
                positive("simon-wolff.summable", t)?;
            }
        }
        if let Some(s) = &self.impurity {
            if s.betas.is_empty() {
                return Err(bad("impurity.betas", "must not be empty"));
            }
            if s.betas.iter().any(|b| !(b.is_finite() && *b < 0.0)) {
                return Err(bad("impurity.betas", "every coupling must be negative"));
            }
            if matches!(s.box_radius, Some(r) if r < 1) {
                return Err(bad("impurity.box-radius", "must be at least 1"));
            }
        }
        if let Some(s) = &self.spectrum_fill {
            if !(s.lambda0.is_finite() && s.lambda0 < 0.0) {
                return Err(bad("spectrum-fill.lambda0", "must be negative"));
            }
            if s.radius < 1 {
                return Err(bad("spectrum-fill.radius", "must be at least 1"));
            }
            sparse_support(dim, &s.rule, s.radius).map_err(|e| bad("spectrum-fill.rule", e))?;
            if let Some(a) = s.a {
                positive("spectrum-fill.a", a)?;
            }
            if let Some(d) = s.delta {
                positive("spectrum-fill.delta", d)?;
            }
        }
        if let Some(s) = &self.bump_measure {
            finite("bump-measure.beta", s.beta)?;
            sites("bump-measure.far-sites", &s.far_sites, dim)?;
            if s.z.is_empty() || s.z.iter().any(|z| !(z[0].is_finite() && z[1] > 0.0)) {
                return Err(bad("bump-measure.z", "points must lie in the upper half-plane"));
            }
            if s.local_radius < 1 {
                return Err(bad("bump-measure.local-radius", "must be at least 1"));
            }
            if s.global_radius < s.local_radius {
                return Err(bad("bump-measure.global-radius", "must be at least local-radius"));
            }
        }
        if let Some(s) = &self.one_plus_gv {
            positive("one-plus-gv.epsilon", s.epsilon)?;
            finite("one-plus-gv.lambda-min", s.lambda_min)?;
            finite("one-plus-gv.lambda-max", s.lambda_max)?;
            if s.lambda_max <= s.lambda_min {
                return Err(bad("one-plus-gv.lambda-max", "must exceed lambda-min"));
            }
            if s.points < 3 {
                return Err(bad("one-plus-gv.points", "needs at least 3 grid points"));
            }
            sites("one-plus-gv.sites", &s.sites, dim)?;
        }
        Ok(())
    }

    fn validate_green(&self) -> Result<(), CliError> {
        let g = &self.green;
        if let Some(t) = g.tolerance {
            if !(t > 0.0 && t < 1e-2) {
                return Err(bad("green.tolerance", "must lie in (0, 1e-2)"));
            }
        }
        if let Some(t) = g.spectral_guard {
            positive("green.spectral-guard", t)?;
        }
        let min = g.min_order.unwrap_or(16);
        if min < 2 {
            return Err(bad("green.min-order", "must be at least 2"));
        }
        if matches!(g.max_order, Some(m) if m < min) {
            return Err(bad("green.max-order", "must be at least min-order"));
        }
        Ok(())
    }

    fn validate_potential(&self, p: &PotentialSection) -> Result<(), CliError> {
        finite("potential.amplitude", p.amplitude)?;
        if p.radius < 1 {
            return Err(bad("potential.radius", "must be at least 1"));
        }
        if let Some(d) = p.delta {
            positive("potential.delta", d)?;
        }
        sparse_support(self.dimension, &p.rule, p.radius).map_err(|e| bad("potential.rule", e))?;
        Ok(())
    }

    fn resolve(&mut self) {
        let defaults = GreenConfig::for_dim(self.dimension);
        let g = &mut self.green;
        g.tolerance.get_or_insert(defaults.tolerance);
        g.min_order.get_or_insert(defaults.min_order);
        g.max_order.get_or_insert(defaults.max_order);
        g.spectral_guard.get_or_insert(defaults.spectral_guard);

        let dim = self.dimension;
        if let Some(s) = &mut self.green_decay {
            s.direction.get_or_insert_with(|| Site::unit(dim, 0).coords().to_vec());
            s.n_max.get_or_insert(20);
            s.epsilon.get_or_insert(1e-6);
        }
        if let Some(s) = &mut self.q_decay {
            s.bump.get_or_insert(latspec_core::scattering::BumpProfile::Standard);
            s.sites
                .get_or_insert_with(|| [8, 16, 32, 64, 128].iter().map(|&m| vec![m, 0]).collect());
            s.half_width.get_or_insert(1.4);
            s.points_per_period.get_or_insert(20);
            s.refinement_tolerance.get_or_insert(1e-6);
            s.max_panels.get_or_insert(65_536);
        }
        if let Some(s) = &mut self.wave_probe {
            s.tolerance.get_or_insert(1e-8);
            s.margin.get_or_insert(4);
            s.width.get_or_insert(1.0);
            s.center.get_or_insert_with(|| vec![0; dim]);
            s.max_terms
                .get_or_insert(latspec_core::scattering::DEFAULT_MAX_TERMS);
            s.ratio.get_or_insert(0.1);
        }
        if let Some(s) = &mut self.simon_wolff {
            s.near_eigenvalue.get_or_insert(1e-6);
            s.summable.get_or_insert(1e-3);
        }
    }

    pub fn green_config(&self) -> GreenConfig {
        let g = &self.green;
        let d = GreenConfig::for_dim(self.dimension);
        GreenConfig {
            tolerance: g.tolerance.unwrap_or(d.tolerance),
            min_order: g.min_order.unwrap_or(d.min_order),
            max_order: g.max_order.unwrap_or(d.max_order),
            spectral_guard: g.spectral_guard.unwrap_or(d.spectral_guard),
        }
    }

    /// Builds the deterministic potential of the `[potential]` table.
    pub fn potential(&self) -> Result<Option<Potential>, CliError> {
        let Some(p) = &self.potential else {
            return Ok(None);
        };
        let support = sparse_support(self.dimension, &p.rule, p.radius)
            .map_err(|e| bad("potential.rule", e))?;
        let mut radii: Vec<f64> = support.sites.iter().map(Site::norm).collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let entries = support.sites.iter().map(|s| {
            let value = match p.profile {
                AmplitudeProfile::Constant => p.amplitude,
                AmplitudeProfile::Converging => {
                    let k = radii.partition_point(|&r| r < s.norm()) + 1;
                    p.amplitude * (1.0 - 1.0 / k as f64)
                }
            };
            (s.clone(), value)
        });
        Potential::from_entries(self.dimension, entries)
            .map(Some)
            .map_err(|e| bad("potential", e))
    }

    /// SHA-256 of the resolved configuration, output location excluded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(&canonical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GREEN: &str = r#"
experiment = "green-decay"
dimension = 1

[green-decay]
lambda = -1.0
"#;

    #[test]
    fn defaults_are_resolved() {
        let c = ExperimentConfig::parse(GREEN).unwrap();
        let s = c.green_decay.as_ref().unwrap();
        assert_eq!(s.direction.as_deref(), Some(&[1][..]));
        assert_eq!(s.n_max, Some(20));
        assert_eq!(c.green.tolerance, Some(1e-10));
        assert_eq!(c.green.max_order, Some(1 << 22));
    }

    #[test]
    fn missing_and_unknown_keys_are_named() {
        let err = ExperimentConfig::parse("experiment = \"impurity\"\n[impurity]\nbetas = [-1.0]\n")
            .unwrap_err();
        assert!(err.to_string().contains("dimension"), "{err}");
        let err = ExperimentConfig::parse(&format!("{GREEN}colour = 3\n")).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        let err = ExperimentConfig::parse(&GREEN.replace("-1.0", "1.0")).unwrap_err();
        assert!(err.to_string().contains("green-decay.lambda"), "{err}");
    }

    #[test]
    fn foreign_tables_are_rejected() {
        let text = format!("{GREEN}\n[impurity]\nbetas = [-1.0]\n");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("impurity"));
        let err = ExperimentConfig::parse("experiment = \"impurity\"\ndimension = 1\n").unwrap_err();
        assert!(err.to_string().contains("`impurity`"));
    }

    #[test]
    fn hash_tracks_semantic_fields_only() {
        let a = ExperimentConfig::parse(GREEN).unwrap();
        let mut b = a.clone();
        b.output = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 9;
        assert_ne!(a.hash(), b.hash());
        let c = ExperimentConfig::parse(&GREEN.replace("-1.0", "-1.5")).unwrap();
        assert_ne!(a.hash(), c.hash());
        // Spelling out a default leaves the hash unchanged.
        let d = ExperimentConfig::parse(&format!("{GREEN}n-max = 20\n")).unwrap();
        assert_eq!(a.hash(), d.hash());
    }

    #[test]
    fn converging_profile() {
        let text = r#"
experiment = "bump-measure"
dimension = 1

[potential]
rule = { kind = "power-law", p = 2.0 }
radius = 30
amplitude = -1.0
profile = "converging"

[bump-measure]
beta = -1.0
far-sites = [[9]]
z = [[0.0, 1.0]]
local-radius = 10
global-radius = 30
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        let v = c.potential().unwrap().unwrap();
        assert_eq!(v.get(&Site::from([1])), 0.0);
        assert_eq!(v.get(&Site::from([4])), -0.5);
        assert!((v.get(&Site::from([25])) + 0.8).abs() < 1e-15);
    }
}
