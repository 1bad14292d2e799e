use anyhow::{bail, Context, Result};
use pauli_tomo::design::{OptimizerConfig, TwoStepConfig};
use pauli_tomo::{cp_check, AngleTriple, ChannelParams, ContractionTriple, ExperimentDesign};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything a run depends on. Angles are `[z, y, x]` in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelConfig,
    pub design: DesignConfig,
    /// Monte-Carlo trials (`risk`), simulated runs (`simulate`), or
    /// replications (`two-step`). Zero selects the analytic or single-run
    /// output.
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub emit_surface: bool,
    pub planar: bool,
    pub optimizer: OptimizerConfig,
    pub two_step: TwoStepSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Three contractions, or two for the planar problem (the third is 0).
    pub lambda: Vec<f64>,
    pub phi: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub input_angles: [f64; 3],
    pub meas_angles: [f64; 3],
    pub shots: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoStepSettings {
    pub budget: u64,
    pub split: f64,
    pub stage1_angles: [f64; 3],
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            channel: ChannelConfig::default(),
            design: DesignConfig::default(),
            trials: 0,
            seed: 0,
            out: None,
            format: Format::Csv,
            emit_surface: false,
            planar: false,
            optimizer: OptimizerConfig::default(),
            two_step: TwoStepSettings::default(),
        }
    }
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            lambda: vec![0.8, 0.65, 0.5],
            phi: [0.0; 3],
        }
    }
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            input_angles: [0.0; 3],
            meas_angles: [0.0; 3],
            shots: 1000,
        }
    }
}

impl Default for TwoStepSettings {
    fn default() -> Self {
        TwoStepSettings {
            budget: 90_000,
            split: 0.2,
            stage1_angles: [FRAC_PI_4, FRAC_PI_4, 0.0],
        }
    }
}

fn angles(a: [f64; 3]) -> AngleTriple<f64> {
    AngleTriple::new(a[0], a[1], a[2])
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn contraction(&self) -> Result<ContractionTriple<f64>> {
        match self.channel.lambda.as_slice() {
            &[l1, l2, l3] => Ok(ContractionTriple([l1, l2, l3])),
            other => bail!("channel.lambda needs 3 values, got {}", other.len()),
        }
    }

    pub fn params(&self) -> Result<ChannelParams<f64>> {
        let p = ChannelParams {
            contraction: self.contraction()?,
            angles: angles(self.channel.phi),
        };
        p.matrix()?;
        if !cp_check(&p.contraction) {
            bail!("channel.lambda {:?} violates complete positivity (1 ± λ₃ ≥ |λ₁ ± λ₂|)", p.contraction.0);
        }
        Ok(p)
    }

    /// `(λ₁, λ₂)` of the planar problem.
    pub fn planar_pair(&self) -> Result<(f64, f64)> {
        match self.channel.lambda.as_slice() {
            &[l1, l2] => Ok((l1, l2)),
            &[l1, l2, l3] if l3 == 0.0 => Ok((l1, l2)),
            &[_, _, _] => bail!("planar problem needs λ₃ = 0"),
            other => bail!("channel.lambda needs 2 or 3 values, got {}", other.len()),
        }
    }

    pub fn design(&self) -> Result<ExperimentDesign<f64>> {
        Ok(ExperimentDesign::new(
            angles(self.design.input_angles),
            angles(self.design.meas_angles),
            self.design.shots,
        )?)
    }

    pub fn two_step_config(&self) -> TwoStepConfig<f64> {
        TwoStepConfig {
            split: self.two_step.split,
            stage1_angles: angles(self.two_step.stage1_angles),
        }
    }
}
