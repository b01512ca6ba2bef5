//! Experiment specification and its provenance hash.

use sha2::{Digest, Sha256};
use vemstokes::system::Bc;

/// Fully resolved experiment parameters; the canonical string drives both
/// the run and the per-row provenance hash.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub test: String,
    pub families: Vec<String>,
    pub n: Vec<usize>,
    pub alpha: Vec<f64>,
    pub bc: Bc,
    pub k: usize,
    pub seed: u64,
    pub nu: f64,
    pub jump_nu: bool,
}

impl ExperimentSpec {
    pub fn canonical(&self) -> String {
        format!(
            "test={};families={};N={};alpha={};bc={:?};k={};seed={};nu={};jump_nu={}",
            self.test,
            self.families.join("+"),
            self.n
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join("+"),
            self.alpha
                .iter()
                .map(|a| format!("{a:e}"))
                .collect::<Vec<_>>()
                .join("+"),
            self.bc,
            self.k,
            self.seed,
            self.nu,
            self.jump_nu,
        )
    }

    /// Short content hash carried by every CSV row.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}
