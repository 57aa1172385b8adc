//! Controller-mediated triplet protocol.
//!
//! Alice prepares one of two three-particle entangled states at random and
//! sends one particle each to Bob and Charlie. She measures her own
//! particle in Z with probability `epsilon` (X otherwise) and announces the
//! basis; the others' bases follow from hers: Alice-Z pairs with Bob-X and
//! Charlie-Z, Alice-X with Bob-Z and Charlie-X. Batches repeat until the
//! session has enough rounds, with an eavesdropping check after each batch
//! validated against the exact correlations of the two preparations.
//!
//! Two key modes share the same transcript. In controlled mode Alice
//! publishes her diagonal outcomes for the key rounds; Bob's Z outcome is
//! the key and Charlie recovers it by conditionally inverting his own
//! diagonal outcome. The published bit says nothing about the key itself.
//! In three-party mode Alice publishes the preparation tags of her Z
//! rounds, and Bob inverts his diagonal bit wherever the inverted triplet
//! was used.

use std::collections::BTreeMap;

use crate::adversary::{Announcement, Eavesdropper};
use crate::channel::{
    broadcast_classical, transmit_qubit, ClassicalMessage, MessageLog, Party, PayloadKind,
    TrafficCounters,
};
use crate::protocol::distill::distill_keys;
use crate::protocol::{
    CheckDecision, Protocol, ProtocolError, RoundTrace, RunResult, RunStatus, SessionConfig,
};
use crate::quantum::MeasurementBasis;
use crate::rng::Prng;
use crate::states::{named_state, NamedState};

/// How the final keys are extracted from a triplet session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum P3Mode {
    /// Bob and Charlie share a key that stays secret from Alice.
    Controlled,
    /// Alice, Bob and Charlie share one key.
    ThreeParty,
}

fn partner_bases(alice: MeasurementBasis) -> (MeasurementBasis, MeasurementBasis) {
    match alice {
        MeasurementBasis::Z => (MeasurementBasis::X, MeasurementBasis::Z),
        MeasurementBasis::X => (MeasurementBasis::Z, MeasurementBasis::X),
    }
}

/// Expected-correlation check for one round given the preparation record.
///
/// Alice-Z rounds carry two testable constraints: Charlie's Z bit equals
/// hers, and Bob's diagonal bit equals hers exactly when the aligned
/// triplet was prepared. Alice-X rounds carry one: Charlie's diagonal bit
/// is Bob's Z bit flipped by her own outcome.
fn round_violations(
    prep_inverted: bool,
    alice_basis: MeasurementBasis,
    a: bool,
    b: bool,
    c: bool,
) -> (usize, usize) {
    match alice_basis {
        MeasurementBasis::Z => {
            let expected_b = a ^ prep_inverted;
            (usize::from(c != a) + usize::from(b != expected_b), 2)
        }
        MeasurementBasis::X => {
            let expected_c = b ^ a;
            (usize::from(c != expected_c), 1)
        }
    }
}

struct P3Round {
    prep_inverted: bool,
    alice_basis: MeasurementBasis,
    a: bool,
    b: bool,
    c: bool,
}

pub(crate) fn run_protocol3(cfg: &SessionConfig) -> Result<RunResult, ProtocolError> {
    let mode = match cfg.protocol {
        Protocol::P3Controlled => P3Mode::Controlled,
        Protocol::P3ThreeParty => P3Mode::ThreeParty,
        other => {
            return Err(ProtocolError::ConfigMismatch(format!(
                "run_protocol3 got {}",
                other.label()
            )))
        }
    };
    cfg.validate()?;

    let n = cfg.rounds;
    let mut rng = Prng::new(cfg.seed);
    let mut counters = TrafficCounters::default();
    let mut log = MessageLog::new();
    let mut eve = Eavesdropper::new(cfg.attack);

    let mut rounds: Vec<P3Round> = Vec::with_capacity(n * cfg.session_batches);
    let mut is_check: Vec<bool> = Vec::with_capacity(n * cfg.session_batches);
    let mut checks: Vec<CheckDecision> = Vec::new();
    // Per controller-basis tallies of (violations, comparisons).
    let mut subset_tally: BTreeMap<&'static str, (usize, usize)> = BTreeMap::new();
    subset_tally.insert("alice-z", (0, 0));
    subset_tally.insert("alice-x", (0, 0));
    let mut aborted = false;

    'batches: for batch in 0..cfg.session_batches {
        let base = batch * n;
        for _ in 0..n {
            // Step 1: prepare a triplet and send B and C.
            let prep_inverted = rng.next_bool();
            let which = if prep_inverted {
                NamedState::TripletInverted
            } else {
                NamedState::TripletAligned
            };
            let mut reg = named_state(which);
            transmit_qubit(&mut reg, 'B', &mut eve, &cfg.noise, &mut counters, &mut rng)?;
            transmit_qubit(&mut reg, 'C', &mut eve, &cfg.noise, &mut counters, &mut rng)?;

            // Step 2: Alice measures and announces her basis; the others'
            // bases follow.
            let alice_z = rng.next_f64() < cfg.epsilon;
            let alice_basis = if alice_z {
                MeasurementBasis::Z
            } else {
                MeasurementBasis::X
            };
            let a = reg.measure('A', alice_basis, &mut rng)?;
            broadcast_classical(
                ClassicalMessage::new(Party::Alice, PayloadKind::BasisAnnouncement, vec![alice_z]),
                &mut counters,
                &mut log,
            );
            let (bob_basis, charlie_basis) = partner_bases(alice_basis);
            let b = reg.measure('B', bob_basis, &mut rng)?;
            let c = reg.measure('C', charlie_basis, &mut rng)?;

            eve.hear_announcement(&mut reg, Announcement::ControllerBasis { alice_basis }, &mut rng)?;
            eve.finish_round();

            rounds.push(P3Round {
                prep_inverted,
                alice_basis,
                a,
                b,
                c,
            });
            is_check.push(false);
        }

        // Step 4: batch check. Alice samples positions; everyone publishes
        // those outcomes and she validates them against the correlations
        // her preparation record predicts.
        let check_count = cfg.check_count();
        let picked = rng.sample_indices(n, check_count);
        let mut mask = vec![false; n];
        for &r in &picked {
            mask[r] = true;
        }
        broadcast_classical(
            ClassicalMessage::new(Party::Alice, PayloadKind::PositionList, mask),
            &mut counters,
            &mut log,
        );
        for (party, pick) in [
            (Party::Alice, 0usize),
            (Party::Bob, 1usize),
            (Party::Charlie, 2usize),
        ] {
            let bits: Vec<bool> = picked
                .iter()
                .map(|&r| {
                    let d = &rounds[base + r];
                    [d.a, d.b, d.c][pick]
                })
                .collect();
            broadcast_classical(
                ClassicalMessage::new(party, PayloadKind::CheckResults, bits),
                &mut counters,
                &mut log,
            );
        }

        for &r in &picked {
            let idx = base + r;
            is_check[idx] = true;
            let d = &rounds[idx];
            let (v, m) = round_violations(d.prep_inverted, d.alice_basis, d.a, d.b, d.c);
            total_violations += v;
            total_comparisons += m;
            let key = match d.alice_basis {
                MeasurementBasis::Z => "alice-z",
                MeasurementBasis::X => "alice-x",
            };
            let entry = subset_tally.get_mut(key).expect("preseeded");
            entry.0 += v;
            entry.1 += m;
        }
        // Each batch decision pools every comparison published so far, so
        // an abort always corresponds to the reported estimate itself
        // exceeding the threshold.
        let qber = total_violations as f64 / total_comparisons as f64;
        let decision = CheckDecision {
            sample_size: total_comparisons,
            disagreements: total_violations,
            qber,
            proceed: qber <= cfg.abort_threshold,
        };
        broadcast_classical(
            ClassicalMessage::new(Party::Alice, PayloadKind::CheckResults, vec![decision.proceed]),
            &mut counters,
            &mut log,
        );
        checks.push(decision);
        if !decision.proceed {
            aborted = true;
            break 'batches;
        }
    }

    let (total_samples, total_viol) = checks
        .iter()
        .fold((0usize, 0usize), |(s, v), c| (s + c.sample_size, v + c.disagreements));
    let qber_estimate = if total_samples > 0 {
        total_viol as f64 / total_samples as f64
    } else {
        0.0
    };
    let per_basis_qber: BTreeMap<String, f64> = subset_tally
        .iter()
        .map(|(k, (v, m))| {
            let q = if *m > 0 { *v as f64 / *m as f64 } else { 0.0 };
            (k.to_string(), q)
        })
        .collect();

    let key_basis = match mode {
        P3Mode::Controlled => MeasurementBasis::X,
        P3Mode::ThreeParty => MeasurementBasis::Z,
    };

    let eve_record = eve.into_record();
    let traces: Vec<RoundTrace> = rounds
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let (bob_basis, charlie_basis) = partner_bases(d.alice_basis);
            let (v, _) = round_violations(d.prep_inverted, d.alice_basis, d.a, d.b, d.c);
            RoundTrace {
                round: i,
                state_tag: if d.prep_inverted {
                    NamedState::TripletInverted
                } else {
                    NamedState::TripletAligned
                },
                hadamard: [false, false, false],
                bases: [Some(d.alice_basis), Some(bob_basis), Some(charlie_basis)],
                bits: [Some(d.a), Some(d.b), Some(d.c)],
                eve_summary: eve_record.rounds[i].summary(),
                sifted: !aborted && !is_check[i] && d.alice_basis == key_basis,
                check: is_check[i],
                error: v > 0,
            }
        })
        .collect();

    let key_rounds = traces.iter().filter(|t| t.sifted).count();
    counters.q_u = 2 * key_rounds as u64;

    // Eve only ever guesses the controller's diagonal outcome.
    let actual: Vec<Option<bool>> = rounds
        .iter()
        .map(|d| (d.alice_basis == MeasurementBasis::X).then_some(d.a))
        .collect();
    let eve_guess_accuracy = eve_record.guess_accuracy(&actual).map(|(acc, _)| acc);

    if aborted {
        return Ok(RunResult {
            protocol: cfg.protocol,
            status: RunStatus::Aborted,
            qber_estimate,
            sifted_keys: BTreeMap::new(),
            final_keys: BTreeMap::new(),
            counters,
            traces,
            checks,
            per_basis_qber,
            eve: eve_record,
            eve_guess_accuracy,
            leaked_bits: 0,
            toeplitz_seed: Vec::new(),
            log,
        });
    }

    // Step 5: Alice's per-round key announcements, then extraction.
    let mut announcements = Vec::with_capacity(key_rounds);
    for (i, t) in traces.iter().enumerate() {
        if !t.sifted {
            continue;
        }
        let d = &rounds[i];
        let msg = match mode {
            P3Mode::Controlled => {
                ClassicalMessage::new(Party::Alice, PayloadKind::XResultPublication, vec![d.a])
            }
            P3Mode::ThreeParty => ClassicalMessage::new(
                Party::Alice,
                PayloadKind::InitialStateInfo,
                vec![d.prep_inverted],
            ),
        };
        announcements.push(msg.clone());
        broadcast_classical(msg, &mut counters, &mut log);
    }
    let sifted_keys = p3_extract_keys(&traces, &announcements, mode)?;

    let distilled = match mode {
        P3Mode::Controlled => distill_keys(
            (Party::Bob, &sifted_keys[&Party::Bob]),
            &[(Party::Charlie, &sifted_keys[&Party::Charlie])],
            qber_estimate,
            cfg.ec_block,
            cfg.security_param,
            &mut rng,
        )?,
        P3Mode::ThreeParty => distill_keys(
            (Party::Alice, &sifted_keys[&Party::Alice]),
            &[
                (Party::Bob, &sifted_keys[&Party::Bob]),
                (Party::Charlie, &sifted_keys[&Party::Charlie]),
            ],
            qber_estimate,
            cfg.ec_block,
            cfg.security_param,
            &mut rng,
        )?,
    };
    counters.b_s = distilled.finals[&Party::Bob].len() as u64;

    Ok(RunResult {
        protocol: cfg.protocol,
        status: RunStatus::Completed,
        qber_estimate,
        sifted_keys,
        final_keys: distilled.finals,
        counters,
        traces,
        checks,
        per_basis_qber,
        eve: eve_record,
        eve_guess_accuracy,
        leaked_bits: distilled.leaked,
        toeplitz_seed: distilled.seed.bits,
        log,
    })
}

/// Recover the per-party raw keys from the key rounds of a transcript.
///
/// Controlled mode reads Alice's published diagonal outcome for each key
/// round: Bob's key bit is his Z outcome and Charlie inverts his diagonal
/// outcome wherever Alice announced `|->`. Three-party mode reads the
/// published preparation tag of each Alice-Z key round: her Z outcome and
/// Charlie's are already the key, and Bob inverts his diagonal bit for the
/// inverted triplet.
pub fn p3_extract_keys(
    traces: &[RoundTrace],
    announcements: &[ClassicalMessage],
    mode: P3Mode,
) -> Result<BTreeMap<Party, Vec<bool>>, ProtocolError> {
    let wanted = match mode {
        P3Mode::Controlled => PayloadKind::XResultPublication,
        P3Mode::ThreeParty => PayloadKind::InitialStateInfo,
    };
    let relevant: Vec<&ClassicalMessage> = announcements
        .iter()
        .filter(|m| m.kind == wanted && m.sender == Party::Alice)
        .collect();

    let mut alice = Vec::new();
    let mut bob = Vec::new();
    let mut charlie = Vec::new();
    for (next, t) in traces.iter().filter(|t| t.sifted).enumerate() {
        let msg = relevant
            .get(next)
            .ok_or(ProtocolError::MissingAnnouncement(t.round))?;
        let announced = *msg
            .bits
            .first()
            .ok_or(ProtocolError::MissingAnnouncement(t.round))?;
        let bit = |slot: usize| {
            t.bits[slot].ok_or_else(|| {
                ProtocolError::ConfigMismatch(format!("round {} lacks an outcome", t.round))
            })
        };
        match mode {
            P3Mode::Controlled => {
                bob.push(bit(1)?);
                charlie.push(bit(2)? ^ announced);
            }
            P3Mode::ThreeParty => {
                alice.push(bit(0)?);
                bob.push(bit(1)? ^ announced);
                charlie.push(bit(2)?);
            }
        }
    }

    let mut keys = BTreeMap::new();
    if mode == P3Mode::ThreeParty {
        keys.insert(Party::Alice, alice);
    }
    keys.insert(Party::Bob, bob);
    keys.insert(Party::Charlie, charlie);
    Ok(keys)
}
