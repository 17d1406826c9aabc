//! JSON experiment configuration.
//!
//! A document is parsed into [`RawConfig`] (unknown keys rejected), defaults
//! are filled in, and [`ExperimentConfig::validate`] checks every field,
//! reporting the first failure together with its field path.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ssotfs_core::analysis::DetPolicy;
use ssotfs_core::channel::{DelayDopplerPolicy, DopplerModel};
use ssotfs_core::comm::{Detector, MpOptions};
use ssotfs_core::constellation::Constellation;
use ssotfs_core::radar::AllocationPolicy;
use ssotfs_core::tx::VirtualIndexPolicy;
use ssotfs_core::FrameParams;

use crate::error::{HarnessError, Result};

/// Default trial budgets per experiment kind.
pub const DEFAULT_MISS_TRIALS: u64 = 10_000;
pub const DEFAULT_FER_TRIALS: u64 = 1_000;
pub const DEFAULT_DET_DRAWS: u64 = 1_000;
pub const DEFAULT_AOA_FRAMES: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    AoaDemo,
    MissDetection,
    Fer,
    DetEval,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::AoaDemo => "aoa-demo",
            ExperimentKind::MissDetection => "miss-detection",
            ExperimentKind::Fer => "fer",
            ExperimentKind::DetEval => "det-eval",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DopplerChoice {
    Integer,
    Fractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayDopplerChoice {
    Independent,
    DistinctPairs,
    DistinctDelays,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstellationChoice {
    Bpsk,
    Qpsk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecodingChoice {
    None,
    Distinct,
    Random,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationChoice {
    Equal,
    MaxminRadar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorChoice {
    Mp,
    MpTruncated,
    Lmmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetPolicyChoice {
    PrecodedDistinct,
    NonPrecodedRandom,
    NonPrecodedDistinctDelay,
}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// The document as written; every key is optional except `kind`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub n_bs: Option<usize>,
    pub alpha_total: Option<f64>,
    pub users: Option<usize>,
    pub paths: Option<usize>,
    pub l_max: Option<usize>,
    pub k_max: Option<usize>,
    pub doppler: Option<DopplerChoice>,
    pub delay_doppler_policy: Option<DelayDopplerChoice>,
    pub min_doppler_separation: Option<f64>,
    pub constellation: Option<ConstellationChoice>,
    pub precoding: Option<OneOrMany<PrecodingChoice>>,
    pub power_allocation: Option<OneOrMany<AllocationChoice>>,
    pub n_range: Option<OneOrMany<usize>>,
    pub snr_db: Option<OneOrMany<f64>>,
    pub trials: Option<u64>,
    pub coded: Option<bool>,
    pub detector: Option<DetectorChoice>,
    pub truncation_threshold: Option<f64>,
    pub mp_max_iterations: Option<usize>,
    pub mp_damping: Option<f64>,
    pub mp_tolerance: Option<f64>,
    pub path_counts: Option<Vec<usize>>,
    pub repeats: Option<Vec<usize>>,
    pub det_policies: Option<Vec<DetPolicyChoice>>,
}

/// A fully resolved configuration. Its JSON form is canonical and is what
/// the config hash is computed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub n_bs: usize,
    pub alpha_total: f64,
    pub users: usize,
    pub paths: usize,
    pub l_max: usize,
    pub k_max: usize,
    pub doppler: DopplerChoice,
    pub delay_doppler_policy: DelayDopplerChoice,
    pub min_doppler_separation: f64,
    pub constellation: ConstellationChoice,
    pub precoding: Vec<PrecodingChoice>,
    pub power_allocation: Vec<AllocationChoice>,
    pub n_range: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub coded: bool,
    pub detector: DetectorChoice,
    pub truncation_threshold: f64,
    pub mp_max_iterations: usize,
    pub mp_damping: f64,
    pub mp_tolerance: f64,
    pub path_counts: Vec<usize>,
    pub repeats: Vec<usize>,
    pub det_policies: Vec<DetPolicyChoice>,
}

/// Parses and validates a JSON document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = serde_json::from_str(text)?;
    let cfg = ExperimentConfig::from_raw(raw)?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(HarnessError::validation(field, "must be positive"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Fills defaults; the network-level defaults are `N_BS = 128`, `M = 32`,
    /// `N = 16`, `l_max = 10`, `k_max = 6`, `K = 4` users of `P = 2` paths.
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let kind = raw.kind.ok_or_else(|| HarnessError::validation("kind", "missing experiment kind"))?;
        let seed = raw
            .seed
            .ok_or_else(|| HarnessError::validation("seed", "a master seed is required for reproducibility"))?;
        let (default_trials, default_snr) = match kind {
            ExperimentKind::AoaDemo => (DEFAULT_AOA_FRAMES, vec![5.0]),
            ExperimentKind::MissDetection => (DEFAULT_MISS_TRIALS, vec![]),
            ExperimentKind::Fer => (DEFAULT_FER_TRIALS, vec![]),
            ExperimentKind::DetEval => (DEFAULT_DET_DRAWS, vec![]),
        };
        let mp = MpOptions::default();
        Ok(ExperimentConfig {
            kind,
            seed,
            m: raw.m.unwrap_or(32),
            n: raw.n.unwrap_or(16),
            n_bs: raw.n_bs.unwrap_or(128),
            alpha_total: raw.alpha_total.unwrap_or(1.0),
            users: raw.users.unwrap_or(4),
            paths: raw.paths.unwrap_or(2),
            l_max: raw.l_max.unwrap_or(10),
            k_max: raw.k_max.unwrap_or(6),
            doppler: raw.doppler.unwrap_or(DopplerChoice::Fractional),
            delay_doppler_policy: raw.delay_doppler_policy.unwrap_or(DelayDopplerChoice::Independent),
            min_doppler_separation: raw.min_doppler_separation.unwrap_or(0.0),
            constellation: raw.constellation.unwrap_or(ConstellationChoice::Bpsk),
            precoding: raw.precoding.map_or(vec![PrecodingChoice::None], |v| v.to_vec()),
            power_allocation: raw.power_allocation.map_or(vec![AllocationChoice::Equal], |v| v.to_vec()),
            n_range: raw.n_range.map_or(vec![0], |v| v.to_vec()),
            snr_db: raw.snr_db.map_or(default_snr, |v| v.to_vec()),
            trials: raw.trials.unwrap_or(default_trials),
            coded: raw.coded.unwrap_or(true),
            detector: raw.detector.unwrap_or(DetectorChoice::Mp),
            truncation_threshold: raw.truncation_threshold.unwrap_or(0.1),
            mp_max_iterations: raw.mp_max_iterations.unwrap_or(mp.max_iterations),
            mp_damping: raw.mp_damping.unwrap_or(mp.damping),
            mp_tolerance: raw.mp_tolerance.unwrap_or(mp.tolerance),
            path_counts: raw.path_counts.unwrap_or_else(|| vec![3, 4, 5]),
            repeats: raw.repeats.unwrap_or_else(|| vec![1, 2, 4, 8, 12, 16]),
            det_policies: raw.det_policies.unwrap_or_else(|| {
                vec![
                    DetPolicyChoice::PrecodedDistinct,
                    DetPolicyChoice::NonPrecodedRandom,
                    DetPolicyChoice::NonPrecodedDistinctDelay,
                ]
            }),
        })
    }

    /// Field-level checks; semantic checks that need the scenario sampler
    /// (beam packing, grid limits) are repeated by the core crate at run time.
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("m", self.m), ("n", self.n), ("n_bs", self.n_bs), ("users", self.users), ("paths", self.paths)] {
            positive(field, v)?;
        }
        if self.trials == 0 {
            return Err(HarnessError::validation("trials", "must be positive"));
        }
        if !(self.alpha_total > 0.0 && self.alpha_total.is_finite()) {
            return Err(HarnessError::validation("alpha_total", "must be positive and finite"));
        }
        if self.l_max >= self.m {
            return Err(HarnessError::validation("l_max", "must be smaller than m"));
        }
        if self.k_max >= self.n {
            return Err(HarnessError::validation("k_max", "must be smaller than n"));
        }
        if !(self.min_doppler_separation >= 0.0) {
            return Err(HarnessError::validation("min_doppler_separation", "must be non-negative"));
        }
        if let Some(i) = self.snr_db.iter().position(|v| !v.is_finite()) {
            return Err(HarnessError::validation(format!("snr_db[{i}]"), "must be finite"));
        }
        if let Some(i) = self.snr_db.windows(2).position(|w| w[1] <= w[0]) {
            return Err(HarnessError::validation(format!("snr_db[{}]", i + 1), "SNR grid must be strictly increasing"));
        }
        if let Some(i) = self.n_range.iter().position(|w| w % 2 != 0) {
            return Err(HarnessError::validation(format!("n_range[{i}]"), "beam width must be even"));
        }
        let single = |field: &str, len: usize| -> Result<()> {
            if len != 1 {
                return Err(HarnessError::validation(field, format!("{} expects exactly one value", self.kind.label())));
            }
            Ok(())
        };
        let non_empty = |field: &str, len: usize| -> Result<()> {
            if len == 0 {
                return Err(HarnessError::validation(field, "must not be empty"));
            }
            Ok(())
        };
        match self.kind {
            ExperimentKind::AoaDemo => {
                single("snr_db", self.snr_db.len())?;
                single("power_allocation", self.power_allocation.len())?;
                non_empty("n_range", self.n_range.len())?;
            }
            ExperimentKind::MissDetection => {
                non_empty("snr_db", self.snr_db.len())?;
                non_empty("power_allocation", self.power_allocation.len())?;
                single("precoding", self.precoding.len())?;
                single("n_range", self.n_range.len())?;
            }
            ExperimentKind::Fer => {
                non_empty("snr_db", self.snr_db.len())?;
                non_empty("power_allocation", self.power_allocation.len())?;
                non_empty("precoding", self.precoding.len())?;
                single("n_range", self.n_range.len())?;
                if !(0.0..1.0).contains(&self.truncation_threshold) {
                    return Err(HarnessError::validation("truncation_threshold", "must lie in [0, 1)"));
                }
                if !(self.mp_damping > 0.0 && self.mp_damping <= 1.0) {
                    return Err(HarnessError::validation("mp_damping", "must lie in (0, 1]"));
                }
                positive("mp_max_iterations", self.mp_max_iterations)?;
                if !(self.mp_tolerance >= 0.0) {
                    return Err(HarnessError::validation("mp_tolerance", "must be non-negative"));
                }
            }
            ExperimentKind::DetEval => {
                non_empty("path_counts", self.path_counts.len())?;
                non_empty("repeats", self.repeats.len())?;
                non_empty("det_policies", self.det_policies.len())?;
                if let Some(i) = self.path_counts.iter().position(|&p| p == 0) {
                    return Err(HarnessError::validation(format!("path_counts[{i}]"), "must be positive"));
                }
                if let Some(i) = self.repeats.iter().position(|&r| r == 0 || 3 * r > self.m * self.n) {
                    return Err(HarnessError::validation(format!("repeats[{i}]"), "error pattern must fit in the frame"));
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn frame_params(&self) -> Result<FrameParams> {
        let g = FrameParams::grid(self.m, self.n, self.n_bs)?;
        Ok(FrameParams::new(self.m, self.n, self.n_bs, g.delta_f, g.slot_duration, self.alpha_total)?)
    }

    pub fn doppler_model(&self) -> DopplerModel {
        match self.doppler {
            DopplerChoice::Integer => DopplerModel::Integer,
            DopplerChoice::Fractional => DopplerModel::Fractional,
        }
    }

    pub fn delay_doppler(&self) -> DelayDopplerPolicy {
        match self.delay_doppler_policy {
            DelayDopplerChoice::Independent => DelayDopplerPolicy::Independent,
            DelayDopplerChoice::DistinctPairs => DelayDopplerPolicy::DistinctPairs,
            DelayDopplerChoice::DistinctDelays => DelayDopplerPolicy::DistinctDelays,
        }
    }

    pub fn constellation_kind(&self) -> Constellation {
        match self.constellation {
            ConstellationChoice::Bpsk => Constellation::Bpsk,
            ConstellationChoice::Qpsk => Constellation::Qpsk,
        }
    }

    pub fn detector_kind(&self) -> Detector {
        match self.detector {
            DetectorChoice::Mp => Detector::MessagePassing,
            DetectorChoice::MpTruncated => Detector::TruncatedMessagePassing { rel_threshold: self.truncation_threshold },
            DetectorChoice::Lmmse => Detector::Lmmse,
        }
    }

    pub fn mp_options(&self) -> MpOptions {
        MpOptions { max_iterations: self.mp_max_iterations, damping: self.mp_damping, tolerance: self.mp_tolerance }
    }
}

impl PrecodingChoice {
    pub fn policy(self) -> Option<VirtualIndexPolicy> {
        match self {
            PrecodingChoice::None => None,
            PrecodingChoice::Distinct => Some(VirtualIndexPolicy::Distinct),
            PrecodingChoice::Random => Some(VirtualIndexPolicy::Random),
            PrecodingChoice::Zero => Some(VirtualIndexPolicy::Zero),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PrecodingChoice::None => "none",
            PrecodingChoice::Distinct => "distinct",
            PrecodingChoice::Random => "random",
            PrecodingChoice::Zero => "zero",
        }
    }
}

impl AllocationChoice {
    pub fn policy(self) -> AllocationPolicy {
        match self {
            AllocationChoice::Equal => AllocationPolicy::Equal,
            AllocationChoice::MaxminRadar => AllocationPolicy::MaxMinRadar,
        }
    }
}

impl DetPolicyChoice {
    pub fn policy(self) -> DetPolicy {
        match self {
            DetPolicyChoice::PrecodedDistinct => DetPolicy::PrecodedDistinct,
            DetPolicyChoice::NonPrecodedRandom => DetPolicy::NonPrecodedRandom,
            DetPolicyChoice::NonPrecodedDistinctDelay => DetPolicy::NonPrecodedDistinctDelays,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_fer_config_gets_network_defaults() {
        let cfg = parse_config(r#"{"kind": "fer", "seed": 1, "snr_db": [0, 2]}"#).unwrap();
        assert_eq!((cfg.m, cfg.n, cfg.n_bs), (32, 16, 128));
        assert_eq!((cfg.l_max, cfg.k_max), (10, 6));
        assert_eq!(cfg.trials, DEFAULT_FER_TRIALS);
    }

    #[test]
    fn missing_seed_is_a_validation_error() {
        let err = parse_config(r#"{"kind": "fer", "snr_db": [0]}"#).unwrap_err();
        assert!(matches!(err, HarnessError::Validation { ref field, .. } if field == "seed"), "{err}");
    }

    #[test]
    fn non_increasing_snr_grid_is_rejected() {
        let err = parse_config(r#"{"kind": "fer", "seed": 1, "snr_db": [5, 0]}"#).unwrap_err();
        assert!(matches!(err, HarnessError::Validation { ref field, .. } if field == "snr_db[1]"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config(r#"{"kind": "fer", "seed": 1, "snr_db": [0], "colour": 3}"#).unwrap_err();
        assert!(matches!(err, HarnessError::Parse(_)), "{err}");
    }

    #[test]
    fn scalar_or_list_fields() {
        let cfg = parse_config(
            r#"{"kind": "fer", "seed": 1, "snr_db": 3, "precoding": ["none", "random"], "power_allocation": "maxmin-radar"}"#,
        )
        .unwrap();
        assert_eq!(cfg.snr_db, vec![3.0]);
        assert_eq!(cfg.precoding, vec![PrecodingChoice::None, PrecodingChoice::Random]);
        assert_eq!(cfg.power_allocation, vec![AllocationChoice::MaxminRadar]);
    }

    #[test]
    fn field_paths_name_the_offender() {
        for (doc, field) in [
            (r#"{"kind": "fer", "seed": 1, "snr_db": [0], "m": 0}"#, "m"),
            (r#"{"kind": "fer", "seed": 1, "snr_db": [0], "k_max": 16}"#, "k_max"),
            (r#"{"kind": "miss-detection", "seed": 1, "snr_db": [0], "n_range": [0, 2]}"#, "n_range"),
            (r#"{"kind": "aoa-demo", "seed": 1, "n_range": [0, 3]}"#, "n_range[1]"),
            (r#"{"kind": "det-eval", "seed": 1, "m": 8, "n": 8, "l_max": 2, "k_max": 2, "repeats": [30]}"#, "repeats[0]"),
            (r#"{"seed": 1}"#, "kind"),
        ] {
            match parse_config(doc) {
                Err(HarnessError::Validation { field: f, .. }) => assert_eq!(f, field, "{doc}"),
                other => panic!("{doc}: {other:?}"),
            }
        }
    }

    #[test]
    fn canonical_hash_is_stable_under_formatting() {
        let a = parse_config(r#"{"kind":"fer","seed":1,"snr_db":[0,2]}"#).unwrap();
        let b = parse_config("{\n  \"snr_db\": [0.0, 2.0],\n  \"seed\": 1,\n  \"kind\": \"fer\"\n}").unwrap();
        assert_eq!(a.hash(), b.hash());
        let round: ExperimentConfig = serde_json::from_str(&a.canonical_json()).unwrap();
        assert_eq!(round, a);
    }
}
