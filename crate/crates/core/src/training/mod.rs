//! Loss terms, the alternating update schedule, ablations and checkpoints.

mod checkpoint;
mod data;
mod history;
pub mod losses;
mod trainer;

pub use checkpoint::{checkpoint_dtype, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use data::{Batch, Draws, TrainData};
pub use history::{median, LossHistory, LossRecord};
pub use losses::LossConfig;
pub use trainer::{train, RngState, TrainState, UpdateCounters, FORWARD_STREAM, INVERSE_STREAM};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datamodel::{holdout_seen, Dataset, Holdout, Split};
use crate::error::{Error, Result};
use crate::ndmath::AdamConfig;
use crate::networks::{CycleTarget, NetSpec};

/// Which inverse-network terms are kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Adversarial and classification terms in the inverse pair, plus the cycle loss.
    #[default]
    Full,
    /// Cycle loss only; the inverse discriminator is never trained.
    CycOnly,
    /// Inverse adversarial term and cycle loss.
    AdvCyc,
    /// Inverse classification term and cycle loss.
    ClaCyc,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::Full, Ablation::CycOnly, Ablation::AdvCyc, Ablation::ClaCyc];

    pub fn inverse_adversarial(self) -> bool {
        matches!(self, Ablation::Full | Ablation::AdvCyc)
    }

    pub fn inverse_classification(self) -> bool {
        matches!(self, Ablation::Full | Ablation::ClaCyc)
    }

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::CycOnly => "cyc_only",
            Ablation::AdvCyc => "adv_cyc",
            Ablation::ClaCyc => "cla_cyc",
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown ablation {s:?}")))
    }
}

/// How the critics are kept Lipschitz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LipschitzMode {
    GradientPenalty,
    WeightClip { c: f64 },
}

impl Default for LipschitzMode {
    fn default() -> Self {
        LipschitzMode::GradientPenalty
    }
}

/// Optimizer state used by the joint cycle update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleOptimizer {
    /// A dedicated Adam state over both generators.
    #[default]
    Separate,
    /// Reuse the Adam states of the G1 and G2 adversarial updates.
    Shared,
}

/// Network widths; the data dimensions come from the dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    /// Defaults to `min(1000, d_s)`.
    pub d_embed: Option<usize>,
    pub d_noise: usize,
    pub d_hidden: usize,
    pub d_hidden_disc: usize,
    pub attribute_mode: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            d_embed: None,
            d_noise: 100,
            d_hidden: 4096,
            d_hidden_disc: 1024,
            attribute_mode: false,
        }
    }
}

/// Every training hyperparameter. Missing keys in a config file take these defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Cycle-consistency weight (lambda).
    pub cyc_coeff: f64,
    /// Inverse classification weight (mu).
    pub cls_inverse_coeff: f64,
    pub gp_coeff: f64,
    pub pivot_coeff: f64,
    pub critic_steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub iterations: usize,
    pub seed: u64,
    pub cycle_target: CycleTarget,
    pub ablation: Ablation,
    pub lipschitz: LipschitzMode,
    /// Read the 1/2 in the discriminator classification terms as applying to fake samples only.
    pub half_on_fake_only: bool,
    /// Feed G2 the same noise as G1 inside the cycle.
    pub shared_cycle_noise: bool,
    /// With `false`, no inverse-pair or cycle updates run at all.
    pub inverse_enabled: bool,
    pub cycle_optimizer: CycleOptimizer,
    /// Fraction of each seen class held out from training for evaluation.
    pub seen_test_fraction: f64,
    pub arch: ArchConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            cyc_coeff: 10.0,
            cls_inverse_coeff: 12.0,
            gp_coeff: 10.0,
            pivot_coeff: 1.0,
            critic_steps: 5,
            batch_size: 1000,
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.9,
            iterations: 3000,
            seed: 0,
            cycle_target: CycleTarget::TextFeature,
            ablation: Ablation::Full,
            lipschitz: LipschitzMode::GradientPenalty,
            half_on_fake_only: false,
            shared_cycle_noise: false,
            inverse_enabled: true,
            cycle_optimizer: CycleOptimizer::Separate,
            seen_test_fraction: 0.2,
            arch: ArchConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Smaller widths, batch 64 and 500 iterations for synthetic runs on a CPU.
    pub fn desk_scale() -> Self {
        Self {
            batch_size: 64,
            iterations: 500,
            arch: ArchConfig {
                d_embed: None,
                d_noise: 100,
                d_hidden: 256,
                d_hidden_disc: 128,
                attribute_mode: false,
            },
            ..Self::default()
        }
    }

    /// The single-GAN reduction: no cycle, no inverse classification, no inverse pair.
    pub fn single_gan(mut self) -> Self {
        self.cyc_coeff = 0.0;
        self.cls_inverse_coeff = 0.0;
        self.inverse_enabled = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let coeffs = [
            ("cyc_coeff", self.cyc_coeff),
            ("cls_inverse_coeff", self.cls_inverse_coeff),
            ("gp_coeff", self.gp_coeff),
            ("pivot_coeff", self.pivot_coeff),
        ];
        for (name, v) in coeffs {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Usage(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.critic_steps == 0 || self.batch_size == 0 {
            return Err(Error::Usage("critic_steps and batch_size must be >= 1".into()));
        }
        if !(self.lr > 0.0 && (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::Usage("need lr > 0 and betas in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.seen_test_fraction) {
            return Err(Error::Usage(format!(
                "seen_test_fraction must be in [0, 1), got {}",
                self.seen_test_fraction
            )));
        }
        if let LipschitzMode::WeightClip { c } = self.lipschitz {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Usage(format!("clip bound must be > 0, got {c}")));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            ..AdamConfig::default()
        }
    }

    pub fn net_spec(&self, d_s: usize, d_v: usize, num_classes: usize) -> NetSpec {
        let a = &self.arch;
        NetSpec {
            d_s,
            d_embed: if a.attribute_mode { d_s } else { a.d_embed.unwrap_or(d_s.min(1000)) },
            d_noise: a.d_noise,
            d_hidden: a.d_hidden,
            d_v,
            num_classes,
            d_hidden_disc: a.d_hidden_disc,
            attribute_mode: a.attribute_mode,
            cycle_target: self.cycle_target,
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            gp_coeff: match self.lipschitz {
                LipschitzMode::GradientPenalty => self.gp_coeff,
                LipschitzMode::WeightClip { .. } => 0.0,
            },
            pivot_coeff: self.pivot_coeff,
            cls_inverse_coeff: self.cls_inverse_coeff,
            cyc_coeff: self.cyc_coeff,
            half_on_fake_only: self.half_on_fake_only,
            inverse_adversarial: self.ablation.inverse_adversarial(),
            inverse_classification: self.ablation.inverse_classification(),
            cycle_target: self.cycle_target,
        }
    }

    /// Seen-class holdout used for training and generalized evaluation,
    /// seeded by the training seed.
    pub fn holdout(&self, dataset: &Dataset, split: &Split) -> Result<Holdout> {
        holdout_seen(dataset, split, self.seen_test_fraction, self.seed)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("TrainConfig serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Usage(format!("config: {e}")))
    }
}
