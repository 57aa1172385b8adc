//! Machine-readable run reports.
//!
//! The JSON schema is flat with fixed key names and field order, so two
//! identical runs serialize to byte-identical files and a report can be
//! parsed back to recompute everything it claims. Round traces render to a
//! fixed-column CSV.

use serde::{Deserialize, Serialize};

use crate::analysis::RunReport;
use crate::channel::TrafficCounters;
use crate::protocol::RoundTrace;

/// Hex rendering of a bit string: bits pack into nibbles most significant
/// first, with zero padding on the right when the length is not a multiple
/// of four.
pub fn bits_to_hex(bits: &[bool]) -> String {
    let mut out = String::with_capacity(bits.len().div_ceil(4));
    for chunk in bits.chunks(4) {
        let mut nibble = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            if b {
                nibble |= 1 << (3 - i);
            }
        }
        out.push(char::from_digit(u32::from(nibble), 16).expect("nibble"));
    }
    out
}

/// Serialized form of one run. Key names and order are part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonRunReport {
    pub protocol: String,
    pub attack: String,
    pub seed: u64,
    pub n_rounds: u64,
    pub check_fraction: f64,
    pub abort_threshold: f64,
    pub epsilon: f64,
    pub noise_p: f64,
    pub qber: f64,
    pub qber_oracle: Option<f64>,
    pub aborted: bool,
    pub key_len_sifted: u64,
    pub key_len_final: u64,
    pub counters: TrafficCounters,
    pub efficiency_total: f64,
    pub efficiency_qubits: f64,
    pub final_key_hex: String,
    pub toeplitz_seed_hex: String,
}

impl From<&RunReport> for JsonRunReport {
    fn from(r: &RunReport) -> JsonRunReport {
        JsonRunReport {
            protocol: r.protocol.label().to_string(),
            attack: r.attack.clone(),
            seed: r.seed,
            n_rounds: r.n_rounds,
            check_fraction: r.check_fraction,
            abort_threshold: r.abort_threshold,
            epsilon: r.epsilon,
            noise_p: r.noise_p,
            qber: r.qber,
            qber_oracle: r.qber_oracle,
            aborted: r.aborted,
            key_len_sifted: r.key_len_sifted,
            key_len_final: r.key_len_final,
            counters: r.counters,
            efficiency_total: r.efficiency_total,
            efficiency_qubits: r.efficiency_qubits,
            final_key_hex: bits_to_hex(&r.final_key),
            toeplitz_seed_hex: bits_to_hex(&r.toeplitz_seed),
        }
    }
}

/// Pretty JSON with a trailing newline; the canonical file form.
pub fn render_json(report: &JsonRunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_json(data: &str) -> serde_json::Result<JsonRunReport> {
    serde_json::from_str(data)
}

const TRACE_HEADER: &str =
    "round,state_tag,alice_basis,bob_basis,charlie_basis,a_bit,b_bit,c_bit,hadamard_flags,check,error";

/// Fixed-column CSV of the round traces.
pub fn trace_csv(traces: &[RoundTrace]) -> String {
    let mut out = String::with_capacity(traces.len() * 32 + TRACE_HEADER.len() + 1);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for t in traces {
        let basis = |i: usize| t.bases[i].map(|b| b.label()).unwrap_or("");
        let bit = |i: usize| {
            t.bits[i]
                .map(|b| if b { "1" } else { "0" })
                .unwrap_or("")
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}{}{},{},{}\n",
            t.round,
            t.state_tag.tag(),
            basis(0),
            basis(1),
            basis(2),
            bit(0),
            bit(1),
            bit(2),
            u8::from(t.hadamard[0]),
            u8::from(t.hadamard[1]),
            u8::from(t.hadamard[2]),
            u8::from(t.check),
            u8::from(t.error),
        ));
    }
    out
}
