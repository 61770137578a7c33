//! Experiment configuration files (TOML, unknown keys rejected).
//!
//! ```toml
//! group = "Z^N:1"              # Z^N:<rank>, F:<rank> or H3
//! generators = ["1", "-1"]     # optional override of Omega
//! radius_cap = 64              # optional; defaults to FSM_RADIUS_CAP or the group default
//! seed = 7                     # optional
//! sections = "balls:40"        # or section_files = ["y0.txt", "y1.txt"]
//!
//! [operator]
//! preset = "2I+L1"             # shift, laplacian, 2I+L1
//! # terms = [{ shift = "1", re = 2.0, im = 0.0 }]
//!
//! [scan]
//! tau_stab = 1e-6
//!
//! [certify]
//! window = 30
//! period = 1
//! [[certify.paths]]
//! geodesic = ["1"]
//! repeat = 60
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::group::{GeneratorSet, GroupContext, GroupKind};
use crate::operator::{preset, BandOperator, C64};
use crate::sets::{BallCache, FiniteSubset};
use crate::spectral::ScanThresholds;

pub const DEFAULT_SEED: u64 = 20090309;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: Option<String>,
    pub generators: Option<Vec<String>>,
    pub radius_cap: Option<usize>,
    pub seed: Option<u64>,
    pub sections: Option<String>,
    pub section_files: Option<Vec<PathBuf>>,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub ball: BallConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub identities: IdentitiesConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub extract: ExtractConfig,
    #[serde(default)]
    pub inflate: InflateConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub preset: Option<String>,
    pub terms: Option<Vec<TermConfig>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub shift: String,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub radius: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub radius: Option<usize>,
    pub set_file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub tau_stab: Option<f64>,
    pub tau_unstab: Option<f64>,
    pub n0: Option<usize>,
    pub max_dim: Option<usize>,
    pub reference_norm: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitiesConfig {
    /// `A = Omega_radius` unless `set_file` is given.
    pub radius: Option<usize>,
    pub set_file: Option<PathBuf>,
    /// Random instances of the telescoping and quasicommutator checks.
    pub instances: Option<usize>,
    /// Adds an identity that is known to fail, to exercise the exit code.
    #[serde(default)]
    pub inject_fault: bool,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub window: Option<usize>,
    pub period: Option<usize>,
    pub tau: Option<f64>,
    pub paths: Option<Vec<PathConfig>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub geodesic: Vec<String>,
    /// Number of repetitions of the pattern; by default it is repeated to
    /// twice the window radius.
    pub repeat: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    /// `commutative` or `free`.
    pub mode: Option<String>,
    /// Sequence elements: `μ_n` for `commutative`, `η_k` for `free`.
    pub sequence: Option<Vec<String>>,
    pub horizon: Option<usize>,
    pub window: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflateConfig {
    pub blocks: Option<usize>,
    pub pool_limit: Option<usize>,
    #[serde(default)]
    pub enlarged: bool,
    pub window: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("scan.tau_stab", self.scan.tau_stab),
            ("scan.tau_unstab", self.scan.tau_unstab),
            ("scan.reference_norm", self.scan.reference_norm),
            ("certify.tau", self.certify.tau),
        ];
        for (key, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Parse(format!("{key} must be positive, got {v}")));
                }
            }
        }
        if self.sections.is_some() && self.section_files.is_some() {
            return Err(Error::Parse("give either sections or section_files, not both".into()));
        }
        if self.operator.preset.is_some() && self.operator.terms.is_some() {
            return Err(Error::Parse("give either operator.preset or operator.terms, not both".into()));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn context(&self) -> Result<Arc<GroupContext>> {
        let kind = GroupKind::parse(self.group.as_deref().unwrap_or("Z^N:1"))?;
        let base = GroupContext::new(kind);
        let ctx = match &self.generators {
            Some(list) => {
                let elems = list.iter().map(|s| base.parse_element(s)).collect::<Result<Vec<_>>>()?;
                GroupContext::with_generators(GeneratorSet::custom(kind, elems)?)
            }
            None => base,
        };
        Ok(match self.radius_cap {
            Some(cap) => ctx.with_radius_cap(cap),
            None => ctx,
        })
    }

    pub fn operator(&self, ctx: &Arc<GroupContext>) -> Result<BandOperator> {
        match (&self.operator.preset, &self.operator.terms) {
            (_, Some(terms)) => {
                let parsed = terms
                    .iter()
                    .map(|t| Ok((ctx.parse_element(&t.shift)?, C64::new(t.re, t.im))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(BandOperator::from_constants(parsed))
            }
            (Some(name), None) => preset(name, ctx),
            (None, None) => preset("2I+L1", ctx),
        }
    }

    pub fn thresholds(&self) -> Result<ScanThresholds> {
        let d = ScanThresholds::default();
        let th = ScanThresholds {
            tau_stab: self.scan.tau_stab.unwrap_or(d.tau_stab),
            tau_unstab: self.scan.tau_unstab.unwrap_or(d.tau_unstab),
            n0: self.scan.n0.unwrap_or(d.n0),
            max_dim: self.scan.max_dim.unwrap_or(d.max_dim),
        };
        th.validate()?;
        Ok(th)
    }

    /// Largest ball index of `sections = "balls:N"`, if ball sections are used.
    pub fn ball_sections(&self) -> Result<Option<usize>> {
        match (&self.sections, &self.section_files) {
            (Some(spec), _) => {
                let n = spec
                    .strip_prefix("balls:")
                    .and_then(|n| n.trim().parse().ok())
                    .ok_or_else(|| Error::Parse(format!("sections: expected `balls:<n_max>`, got `{spec}`")))?;
                Ok(Some(n))
            }
            (None, Some(_)) => Ok(None),
            (None, None) => Ok(Some(20)),
        }
    }

    /// `(n, Y_n)` pairs: balls `Ω_0..Ω_{n_max}` or the listed files in order.
    /// `nmax` overrides the configured largest ball index.
    pub fn section_list(
        &self,
        ctx: &Arc<GroupContext>,
        nmax: Option<usize>,
    ) -> Result<Vec<(usize, FiniteSubset)>> {
        match self.ball_sections()? {
            Some(n) => {
                let n = nmax.unwrap_or(n);
                let mut balls = BallCache::new(ctx);
                (0..=n).map(|k| Ok((k, balls.ball(k)?.clone()))).collect()
            }
            None => {
                let files = self.section_files.as_deref().unwrap_or_default();
                files
                    .iter()
                    .enumerate()
                    .map(|(k, path)| Ok((k, read_set(ctx, path)?)))
                    .collect()
            }
        }
    }
}

pub fn read_set(ctx: &Arc<GroupContext>, path: &Path) -> Result<FiniteSubset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    FiniteSubset::parse_text(ctx, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_keys() {
        let err = ExperimentConfig::parse("group = \"F:2\"\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = ExperimentConfig::parse("[scan]\ntau = 1\n").unwrap_err();
        assert!(err.to_string().contains("tau"), "{err}");
    }

    #[test]
    fn thresholds_must_be_positive() {
        assert!(ExperimentConfig::parse("[scan]\ntau_stab = -1.0\n").is_err());
        assert!(ExperimentConfig::parse("[certify]\ntau = 0.0\n").is_err());
    }

    #[test]
    fn full_config() {
        let cfg = ExperimentConfig::parse(
            r#"
group = "Z^N:1"
sections = "balls:5"
[operator]
terms = [{ shift = "1", re = 1.0 }, { shift = "0", re = 2.0, im = 0.5 }]
[[certify.paths]]
geodesic = ["1"]
repeat = 4
"#,
        )
        .unwrap();
        let ctx = cfg.context().unwrap();
        assert_eq!(cfg.operator(&ctx).unwrap().terms().len(), 2);
        assert_eq!(cfg.section_list(&ctx, None).unwrap().len(), 6);
        assert_eq!(cfg.section_list(&ctx, Some(2)).unwrap().len(), 3);
        assert_eq!(cfg.certify.paths.as_ref().unwrap()[0].repeat, Some(4));
        assert!(ExperimentConfig::parse("sections = \"cubes:3\"").unwrap().ball_sections().is_err());
    }
}
