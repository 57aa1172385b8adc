//! Full state machines for the three key-distribution protocols.
//!
//! Each `run_protocol*` function executes one seeded session end to end:
//! preparation, transmission through the adversary-tapped channel,
//! Hadamard rules, measurement schedules, public announcements, sifting,
//! the eavesdropping check with its abort decision, and classical
//! distillation of the final keys. Every random choice comes from the
//! session's [`Prng`], so a `SessionConfig` determines the entire
//! transcript.
//!
//! The module also carries [`exact_qber_oracle`], a sampling-free
//! enumeration of a single round's discrete branches that predicts the
//! error rates the Monte-Carlo runs must reproduce.

mod distill;
mod oracle;
mod p1;
mod p2;
mod p3;

pub use distill::hamming_distance;
pub use oracle::{exact_qber_oracle, OracleOptions, QberOracle};
pub use p1::run_protocol1;
pub use p2::run_protocol2;
pub use p3::{p3_extract_keys, P3Mode};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::adversary::{EveRecord, EveStrategy};
use crate::channel::{MessageLog, NoiseSpec, Party, TrafficCounters};
use crate::postprocess::PostprocessError;
use crate::quantum::{MeasurementBasis, QuantumError};
use crate::states::NamedState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("configuration does not fit the protocol: {0}")]
    ConfigMismatch(String),
    #[error("eavesdropping check sample is empty")]
    EmptySample,
    #[error("key round {0} has no matching announcement")]
    MissingAnnouncement(usize),
    #[error("unsupported protocol/attack combination: {0}")]
    UnsupportedCombination(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Postprocess(#[from] PostprocessError),
}

/// Which protocol a session runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Protocol {
    /// Block transmission of EPR halves with a random Hadamard subset.
    P1,
    /// Per-round EPR pairs with a published initial state.
    P2,
    /// Controller-mediated key between the two receivers.
    P3Controlled,
    /// Three-party key from the same triplet sessions.
    P3ThreeParty,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::P1 => "p1",
            Protocol::P2 => "p2",
            Protocol::P3Controlled => "p3-controlled",
            Protocol::P3ThreeParty => "p3-three-party",
        }
    }

    pub fn is_triplet(self) -> bool {
        matches!(self, Protocol::P3Controlled | Protocol::P3ThreeParty)
    }

    /// Qubits sent down the channel per round.
    pub fn qubits_per_round(self) -> u64 {
        if self.is_triplet() {
            2
        } else {
            1
        }
    }
}

/// All parameters of one seeded session.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SessionConfig {
    pub protocol: Protocol,
    /// Rounds per batch (`N`).
    pub rounds: usize,
    /// Fraction of rounds sacrificed to the eavesdropping check.
    pub check_fraction: f64,
    /// Abort when the estimated error rate exceeds this.
    pub abort_threshold: f64,
    pub attack: EveStrategy,
    /// Probability that the controller measures in Z (triplet protocols).
    pub epsilon: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Batches per session (triplet protocols run at least two).
    pub session_batches: usize,
    /// Fraction of block positions Hadamarded in the block protocol.
    pub hadamard_fraction: f64,
    /// Session-wide final measurement basis of the block protocol.
    pub session_basis: MeasurementBasis,
    /// Top-level block size for error correction.
    pub ec_block: usize,
    /// Privacy-amplification security margin in bits.
    pub security_param: usize,
}

impl SessionConfig {
    pub fn new(protocol: Protocol) -> SessionConfig {
        SessionConfig {
            protocol,
            rounds: 1000,
            check_fraction: 0.25,
            abort_threshold: 0.11,
            attack: EveStrategy::None,
            epsilon: 0.5,
            noise: NoiseSpec::noiseless(),
            seed: 7,
            session_batches: if protocol.is_triplet() { 2 } else { 1 },
            hadamard_fraction: 0.5,
            session_basis: MeasurementBasis::Z,
            ec_block: 16,
            security_param: 64,
        }
    }

    /// Rounds sacrificed to the check per batch.
    pub fn check_count(&self) -> usize {
        (self.rounds as f64 * self.check_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let fail = |msg: String| Err(ProtocolError::ConfigMismatch(msg));
        if self.rounds < 20 {
            return fail(format!("need at least 20 rounds, got {}", self.rounds));
        }
        if !(0.0 < self.check_fraction && self.check_fraction < 1.0) {
            return fail(format!("check fraction {} not in (0,1)", self.check_fraction));
        }
        if (self.rounds as f64 * self.check_fraction) < 10.0 {
            return fail("check sample below 10 rounds is meaningless".to_string());
        }
        if !(0.0 < self.abort_threshold && self.abort_threshold < 1.0) {
            return fail(format!("abort threshold {} not in (0,1)", self.abort_threshold));
        }
        if !(0.0 < self.epsilon && self.epsilon <= 1.0) {
            return fail(format!("epsilon {} not in (0,1]", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.noise.depolarizing_p) {
            return fail(format!("noise probability {} not in [0,1]", self.noise.depolarizing_p));
        }
        if self.session_batches < 1 {
            return fail("at least one batch required".to_string());
        }
        if !(0.0..=1.0).contains(&self.hadamard_fraction) {
            return fail(format!("hadamard fraction {} not in [0,1]", self.hadamard_fraction));
        }
        if self.ec_block < 2 {
            return fail("error-correction block must be at least 2".to_string());
        }
        if !attack_supported(self.protocol, &self.attack) {
            return fail(format!(
                "attack {} is not modeled for {}",
                self.attack.label(),
                self.protocol.label()
            ));
        }
        Ok(())
    }
}

/// Which attacks each protocol models. Bell interception needs the two
/// flying qubits of a triplet round; the single-qubit attacks apply to the
/// pair protocols.
pub fn attack_supported(protocol: Protocol, attack: &EveStrategy) -> bool {
    match attack {
        EveStrategy::None => true,
        EveStrategy::InterceptResend { .. } | EveStrategy::CollectiveCnot { .. } => {
            matches!(protocol, Protocol::P1 | Protocol::P2)
        }
        EveStrategy::BellIntercept => protocol.is_triplet(),
    }
}

/// Per-round record of everything observable in a session.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RoundTrace {
    pub round: usize,
    pub state_tag: NamedState,
    /// Hadamard applied, per party `[alice, bob, charlie]`.
    pub hadamard: [bool; 3],
    /// Measurement bases used, per party.
    pub bases: [Option<MeasurementBasis>; 3],
    /// Key-mapped outcome bits, per party (`|0>,|+> -> 0`).
    pub bits: [Option<bool>; 3],
    pub eve_summary: String,
    /// Contributes to the sifted key (never true for check rounds).
    pub sifted: bool,
    /// Sacrificed to the eavesdropping check.
    pub check: bool,
    /// Ground-truth correlation violation in this round.
    pub error: bool,
}

/// Outcome of one eavesdropping check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CheckDecision {
    pub sample_size: usize,
    pub disagreements: usize,
    pub qber: f64,
    pub proceed: bool,
}

/// Compare published sample outcomes and decide whether to continue.
pub fn check_eavesdropping(
    pairs: &[(bool, bool)],
    threshold: f64,
) -> Result<CheckDecision, ProtocolError> {
    if pairs.is_empty() {
        return Err(ProtocolError::EmptySample);
    }
    let disagreements = pairs.iter().filter(|(a, b)| a != b).count();
    let qber = disagreements as f64 / pairs.len() as f64;
    Ok(CheckDecision {
        sample_size: pairs.len(),
        disagreements,
        qber,
        proceed: qber <= threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RunStatus {
    Completed,
    Aborted,
}

/// Everything a finished session exposes.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunResult {
    pub protocol: Protocol,
    pub status: RunStatus,
    /// Pooled error rate over the published check comparisons.
    pub qber_estimate: f64,
    pub sifted_keys: BTreeMap<Party, Vec<bool>>,
    /// Distilled final keys; empty on abort.
    pub final_keys: BTreeMap<Party, Vec<bool>>,
    pub counters: TrafficCounters,
    pub traces: Vec<RoundTrace>,
    /// One decision per completed check (per batch for the triplet runs).
    pub checks: Vec<CheckDecision>,
    /// Error rate per controller-basis subset (triplet runs only).
    pub per_basis_qber: BTreeMap<String, f64>,
    pub eve: EveRecord,
    /// Eve's guess accuracy against the key-relevant bits, when she guessed.
    pub eve_guess_accuracy: Option<f64>,
    /// Parity bits leaked during error correction.
    pub leaked_bits: usize,
    /// Published universal-hash seed (empty when no key was distilled).
    pub toeplitz_seed: Vec<bool>,
    pub log: MessageLog,
}

impl RunResult {
    pub fn aborted(&self) -> bool {
        self.status == RunStatus::Aborted
    }

    /// Total check comparisons and disagreements across all checks.
    pub fn check_totals(&self) -> (usize, usize) {
        self.checks.iter().fold((0, 0), |(s, d), c| {
            (s + c.sample_size, d + c.disagreements)
        })
    }
}

/// Run the configured protocol.
pub fn run(cfg: &SessionConfig) -> Result<RunResult, ProtocolError> {
    match cfg.protocol {
        Protocol::P1 => run_protocol1(cfg),
        Protocol::P2 => run_protocol2(cfg),
        Protocol::P3Controlled | Protocol::P3ThreeParty => p3::run_protocol3(cfg),
    }
}
