//! Deterministic simulation and analysis of three entanglement-based
//! quantum key distribution protocols.
//!
//! The crate is organized around an exact state-vector engine for small
//! labeled-qubit registers ([`quantum`]), a catalogue of the protocols'
//! entangled states with an identity verifier ([`states`]), metered quantum
//! and classical channels with an adversary tap ([`channel`]), the
//! eavesdropping strategies the protocols are analyzed against
//! ([`adversary`]), full protocol state machines plus an exact error-rate
//! oracle ([`protocol`]), classical key distillation ([`postprocess`]),
//! efficiency metrics and summaries ([`analysis`]), and serialized run
//! reports ([`report`]).
//!
//! Every run is driven by a single seeded [`rng::Prng`] stream: identical
//! configurations produce identical transcripts, reports, and keys.

pub mod adversary;
pub mod analysis;
pub mod channel;
pub mod postprocess;
pub mod protocol;
pub mod quantum;
pub mod report;
pub mod rng;
pub mod states;

pub use adversary::{
    bell_intercept_demo, han_attack_demo, BasisPolicy, BellInterceptDemoReport, Eavesdropper,
    EveRecord, EveStrategy, HanDemoReport, ResendPolicy,
};
pub use analysis::{
    asymptotic_total_efficiency, asymptotic_total_efficiency_exact, efficiency_qubits,
    efficiency_total, summarize, Aggregate, EfficiencyInputs, RunReport,
};
pub use channel::{
    broadcast_classical, transmit_qubit, ClassicalMessage, MessageLog, NoiseSpec, Party,
    PayloadKind, TrafficCounters,
};
pub use postprocess::{
    binary_entropy, error_correct, pa_output_len, privacy_amplify, toeplitz_hash,
    CorrectionResult, ToeplitzSeed,
};
pub use protocol::{
    check_eavesdropping, exact_qber_oracle, p3_extract_keys, run, run_protocol1, run_protocol2,
    CheckDecision, OracleOptions, P3Mode, Protocol, ProtocolError, QberOracle, RoundTrace,
    RunResult, RunStatus, SessionConfig,
};
pub use quantum::{
    states_equal_up_to_phase, Amplitude, BellOutcome, MeasurementBasis, OutcomeDistribution,
    Pauli, QuantumError, Register,
};
pub use report::{bits_to_hex, parse_json, render_json, trace_csv, JsonRunReport};
pub use rng::Prng;
pub use states::{named_state, verify_identities, IdentityCheck, IdentityReport, NamedState};
