//! Channel abstractions between the parties.
//!
//! The quantum channel carries one labeled qubit at a time, hands it to the
//! adversary's tap before any noise is applied, and meters every
//! transmission. The classical channel is a public, authenticated broadcast
//! log: the adversary reads it freely but cannot forge entries. Classical
//! traffic is only counted toward `b_t` when it is key-generation signaling;
//! eavesdrop-check traffic (position lists, check results) is metered as
//! zero by convention.

use thiserror::Error;

use crate::quantum::{Pauli, QuantumError, Register};
use crate::rng::Prng;

/// Tallies feeding the efficiency figures.
///
/// `q_t` counts transmitted qubits, `b_t` key-relevant classical bits,
/// `b_s` delivered secret bits, and `q_u` the transmitted qubits whose
/// outcomes enter the sifted key. All are monotone during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TrafficCounters {
    pub q_t: u64,
    pub b_t: u64,
    pub b_s: u64,
    pub q_u: u64,
}

/// A protocol participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

impl Party {
    pub fn label(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
            Party::Charlie => "charlie",
        }
    }
}

/// What a classical broadcast carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PayloadKind {
    /// Positions selected for some subset (Hadamard or check sampling).
    PositionList,
    /// Which basis a party measured in.
    BasisAnnouncement,
    /// Which state was prepared this round.
    InitialStateInfo,
    /// Published measurement outcomes for eavesdrop checking.
    CheckResults,
    /// The controller's published diagonal-basis outcomes.
    XResultPublication,
}

impl PayloadKind {
    /// Check traffic is excluded from the `b_t` meter by convention.
    fn counts_toward_b_t(self) -> bool {
        !matches!(self, PayloadKind::PositionList | PayloadKind::CheckResults)
    }

    pub fn label(self) -> &'static str {
        match self {
            PayloadKind::PositionList => "position-list",
            PayloadKind::BasisAnnouncement => "basis-announcement",
            PayloadKind::InitialStateInfo => "initial-state-info",
            PayloadKind::CheckResults => "check-results",
            PayloadKind::XResultPublication => "x-result-publication",
        }
    }
}

/// One authenticated broadcast.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClassicalMessage {
    pub sender: Party,
    pub kind: PayloadKind,
    pub bits: Vec<bool>,
    counts_toward_b_t: bool,
}

impl ClassicalMessage {
    /// The metering flag is derived from the payload kind, which keeps the
    /// exclusion of check traffic an invariant rather than a convention.
    pub fn new(sender: Party, kind: PayloadKind, bits: Vec<bool>) -> ClassicalMessage {
        ClassicalMessage {
            sender,
            kind,
            counts_toward_b_t: kind.counts_toward_b_t(),
            bits,
        }
    }

    pub fn counts_toward_b_t(&self) -> bool {
        self.counts_toward_b_t
    }
}

/// Public append-only broadcast log.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct MessageLog {
    messages: Vec<ClassicalMessage>,
}

impl MessageLog {
    pub fn new() -> MessageLog {
        MessageLog::default()
    }

    pub fn messages(&self) -> &[ClassicalMessage] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// CSV rendering: `index,sender,kind,bit_len,counted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,sender,kind,bit_len,counted\n");
        for (i, m) in self.messages.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i,
                m.sender.label(),
                m.kind.label(),
                m.bits.len(),
                u8::from(m.counts_toward_b_t)
            ));
        }
        out
    }
}

/// Depolarizing channel parameter. `p = 0` is the identity channel; with
/// probability `p` a uniformly random Pauli (X, Y, or Z) hits the qubit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NoiseSpec {
    pub depolarizing_p: f64,
}

impl NoiseSpec {
    pub fn noiseless() -> NoiseSpec {
        NoiseSpec { depolarizing_p: 0.0 }
    }

    pub fn depolarizing(p: f64) -> Result<NoiseSpec, ChannelError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ChannelError::InvalidProbability(p));
        }
        Ok(NoiseSpec { depolarizing_p: p })
    }
}

impl Default for NoiseSpec {
    fn default() -> NoiseSpec {
        NoiseSpec::noiseless()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("depolarizing probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
}

/// Interception point handed the in-flight register before channel noise.
pub trait ChannelTap {
    fn intercept(
        &mut self,
        reg: &mut Register,
        q: char,
        rng: &mut Prng,
    ) -> Result<(), QuantumError>;
}

/// Tap that does nothing; transmitting through it is bit-identical to
/// bypassing the channel.
pub struct NoTap;

impl ChannelTap for NoTap {
    fn intercept(&mut self, _: &mut Register, _: char, _: &mut Prng) -> Result<(), QuantumError> {
        Ok(())
    }
}

/// Send qubit `q` of `reg` down the quantum channel: meter it, give the
/// adversary its shot, then apply depolarizing noise.
///
/// With no adversary and `p = 0` this draws nothing from `rng` and leaves
/// the register untouched apart from the `q_t` increment.
pub fn transmit_qubit(
    reg: &mut Register,
    q: char,
    tap: &mut dyn ChannelTap,
    noise: &NoiseSpec,
    counters: &mut TrafficCounters,
    rng: &mut Prng,
) -> Result<(), QuantumError> {
    // Metering first: an intercepted qubit was still transmitted.
    counters.q_t += 1;
    tap.intercept(reg, q, rng)?;
    let p = noise.depolarizing_p;
    if p > 0.0 && rng.next_f64() < p {
        let pauli = match rng.below(3) {
            0 => Pauli::X,
            1 => Pauli::Y,
            _ => Pauli::Z,
        };
        reg.apply_pauli(q, pauli)?;
    }
    Ok(())
}

/// Append a broadcast to the public log, metering it if it is
/// key-generation traffic.
pub fn broadcast_classical(
    msg: ClassicalMessage,
    counters: &mut TrafficCounters,
    log: &mut MessageLog,
) {
    if msg.counts_toward_b_t {
        counters.b_t += msg.bits.len() as u64;
    }
    log.messages.push(msg);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::MeasurementBasis;
    use crate::states::{named_state, NamedState};

    #[test]
    fn identity_channel_touches_nothing_but_the_meter() {
        let mut reg = named_state(NamedState::PhiPlus);
        let before = reg.clone();
        let mut counters = TrafficCounters::default();
        let mut rng = Prng::new(1);
        transmit_qubit(
            &mut reg,
            'B',
            &mut NoTap,
            &NoiseSpec::noiseless(),
            &mut counters,
            &mut rng,
        )
        .unwrap();
        assert_eq!(reg, before);
        assert_eq!(counters.q_t, 1);
        assert_eq!(rng.position(), 0, "identity channel must not draw");
    }

    #[test]
    fn full_depolarizing_flips_zero_two_thirds() {
        // X and Y flip |0>, Z does not: flip frequency 2/3 at p = 1.
        let mut rng = Prng::new(77);
        let noise = NoiseSpec::depolarizing(1.0).unwrap();
        let trials = 100_000u32;
        let mut flips = 0u32;
        for _ in 0..trials {
            let mut reg = Register::basis_state(&['Q'], &[false]).unwrap();
            let mut counters = TrafficCounters::default();
            transmit_qubit(&mut reg, 'Q', &mut NoTap, &noise, &mut counters, &mut rng).unwrap();
            if reg.measure('Q', MeasurementBasis::Z, &mut rng).unwrap() {
                flips += 1;
            }
        }
        let freq = f64::from(flips) / f64::from(trials);
        let sigma = (2.0 / 3.0 * (1.0 / 3.0) / f64::from(trials)).sqrt();
        assert!(
            (freq - 2.0 / 3.0).abs() < 3.0 * sigma,
            "flip frequency {freq} too far from 2/3"
        );
    }

    #[test]
    fn noise_probability_validation() {
        assert!(NoiseSpec::depolarizing(1.5).is_err());
        assert!(NoiseSpec::depolarizing(-0.1).is_err());
        assert_eq!(
            NoiseSpec::depolarizing(0.0).unwrap(),
            NoiseSpec::noiseless()
        );
    }

    #[test]
    fn check_traffic_is_not_metered() {
        let mut counters = TrafficCounters::default();
        let mut log = MessageLog::new();
        broadcast_classical(
            ClassicalMessage::new(Party::Alice, PayloadKind::InitialStateInfo, vec![true]),
            &mut counters,
            &mut log,
        );
        assert_eq!(counters.b_t, 1);
        broadcast_classical(
            ClassicalMessage::new(Party::Bob, PayloadKind::CheckResults, vec![false; 500]),
            &mut counters,
            &mut log,
        );
        assert_eq!(counters.b_t, 1, "check results are excluded from b_t");
        broadcast_classical(
            ClassicalMessage::new(Party::Bob, PayloadKind::PositionList, vec![false; 64]),
            &mut counters,
            &mut log,
        );
        assert_eq!(counters.b_t, 1, "position lists are excluded from b_t");
        broadcast_classical(
            ClassicalMessage::new(Party::Alice, PayloadKind::BasisAnnouncement, vec![true]),
            &mut counters,
            &mut log,
        );
        assert_eq!(counters.b_t, 2);
        assert_eq!(log.len(), 4);
    }

    #[test]
    fn message_log_csv_shape() {
        let mut counters = TrafficCounters::default();
        let mut log = MessageLog::new();
        broadcast_classical(
            ClassicalMessage::new(Party::Alice, PayloadKind::InitialStateInfo, vec![true]),
            &mut counters,
            &mut log,
        );
        let csv = log.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "index,sender,kind,bit_len,counted");
        assert_eq!(lines.next().unwrap(), "0,alice,initial-state-info,1,1");
    }
}
