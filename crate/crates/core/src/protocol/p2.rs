//! Memoryless per-round protocol.
//!
//! Each round Alice prepares `phi+` or `phi-` at random and sends the `B`
//! half. Once Bob confirms receipt (a zero-bit control signal) she
//! publishes which state it was: on `phi-` rounds both parties apply a
//! Hadamard, and everyone measures in X with `|+> -> 0`, `|-> -> 1`. One
//! published bit per round puts the total efficiency at 1/2, while every
//! non-check pair still yields a key bit. The check samples round outcomes
//! after the fact, exactly like the block protocol.

use std::collections::BTreeMap;

use crate::adversary::{Announcement, Eavesdropper};
use crate::channel::{
    broadcast_classical, transmit_qubit, ClassicalMessage, MessageLog, Party, PayloadKind,
    TrafficCounters,
};
use crate::protocol::distill::distill_keys;
use crate::protocol::{
    check_eavesdropping, Protocol, ProtocolError, RoundTrace, RunResult, RunStatus, SessionConfig,
};
use crate::quantum::MeasurementBasis;
use crate::rng::Prng;
use crate::states::{named_state, NamedState};

pub fn run_protocol2(cfg: &SessionConfig) -> Result<RunResult, ProtocolError> {
    if cfg.protocol != Protocol::P2 {
        return Err(ProtocolError::ConfigMismatch(format!(
            "run_protocol2 got {}",
            cfg.protocol.label()
        )));
    }
    cfg.validate()?;

    let n = cfg.rounds;
    let mut rng = Prng::new(cfg.seed);
    let mut counters = TrafficCounters::default();
    let mut log = MessageLog::new();
    let mut eve = Eavesdropper::new(cfg.attack);

    let mut alice_bits = Vec::with_capacity(n);
    let mut bob_bits = Vec::with_capacity(n);
    let mut prepared = Vec::with_capacity(n);

    for _ in 0..n {
        // Step 1: prepare one of the two pair states and send B.
        let phi_minus = rng.next_bool();
        let which = if phi_minus {
            NamedState::PhiMinus
        } else {
            NamedState::PhiPlus
        };
        let mut reg = named_state(which);
        transmit_qubit(&mut reg, 'B', &mut eve, &cfg.noise, &mut counters, &mut rng)?;

        // Step 2: after Bob's receipt signal, Alice publishes the state.
        broadcast_classical(
            ClassicalMessage::new(Party::Alice, PayloadKind::InitialStateInfo, vec![phi_minus]),
            &mut counters,
            &mut log,
        );
        if phi_minus {
            reg.apply_hadamard('A')?;
            reg.apply_hadamard('B')?;
        }

        // Step 3: both measure in X.
        let a = reg.measure('A', MeasurementBasis::X, &mut rng)?;
        let b = reg.measure('B', MeasurementBasis::X, &mut rng)?;

        // The adversary reads her probe now that the state is public.
        eve.hear_announcement(
            &mut reg,
            Announcement::StatePublished {
                hadamard_round: phi_minus,
            },
            &mut rng,
        )?;
        eve.finish_round();

        alice_bits.push(a);
        bob_bits.push(b);
        prepared.push(which);
    }

    // Step 5: Alice samples check rounds; both publish those outcomes.
    let check_count = cfg.check_count();
    let check_positions = rng.sample_indices(n, check_count);
    let mut is_check = vec![false; n];
    for &i in &check_positions {
        is_check[i] = true;
    }
    broadcast_classical(
        ClassicalMessage::new(Party::Alice, PayloadKind::PositionList, is_check.clone()),
        &mut counters,
        &mut log,
    );
    broadcast_classical(
        ClassicalMessage::new(
            Party::Alice,
            PayloadKind::CheckResults,
            check_positions.iter().map(|&i| alice_bits[i]).collect(),
        ),
        &mut counters,
        &mut log,
    );
    broadcast_classical(
        ClassicalMessage::new(
            Party::Bob,
            PayloadKind::CheckResults,
            check_positions.iter().map(|&i| bob_bits[i]).collect(),
        ),
        &mut counters,
        &mut log,
    );
    let pairs: Vec<(bool, bool)> = check_positions
        .iter()
        .map(|&i| (alice_bits[i], bob_bits[i]))
        .collect();
    let decision = check_eavesdropping(&pairs, cfg.abort_threshold)?;

    counters.q_u = (n - check_count) as u64;

    let eve_record = eve.into_record();
    let traces: Vec<RoundTrace> = (0..n)
        .map(|i| RoundTrace {
            round: i,
            state_tag: prepared[i],
            hadamard: [
                prepared[i] == NamedState::PhiMinus,
                prepared[i] == NamedState::PhiMinus,
                false,
            ],
            bases: [
                Some(MeasurementBasis::X),
                Some(MeasurementBasis::X),
                None,
            ],
            bits: [Some(alice_bits[i]), Some(bob_bits[i]), None],
            eve_summary: eve_record.rounds[i].summary(),
            sifted: decision.proceed && !is_check[i],
            check: is_check[i],
            error: alice_bits[i] != bob_bits[i],
        })
        .collect();

    let actual_bits: Vec<Option<bool>> = bob_bits.iter().map(|&b| Some(b)).collect();
    let eve_guess_accuracy = eve_record.guess_accuracy(&actual_bits).map(|(acc, _)| acc);

    let sift = |bits: &[bool]| -> Vec<bool> {
        bits.iter()
            .enumerate()
            .filter(|(i, _)| !is_check[*i])
            .map(|(_, &b)| b)
            .collect()
    };
    let mut sifted_keys = BTreeMap::new();
    sifted_keys.insert(Party::Alice, sift(&alice_bits));
    sifted_keys.insert(Party::Bob, sift(&bob_bits));

    if !decision.proceed {
        return Ok(RunResult {
            protocol: cfg.protocol,
            status: RunStatus::Aborted,
            qber_estimate: decision.qber,
            sifted_keys,
            final_keys: BTreeMap::new(),
            counters,
            traces,
            checks: vec![decision],
            per_basis_qber: BTreeMap::new(),
            eve: eve_record,
            eve_guess_accuracy,
            leaked_bits: 0,
            toeplitz_seed: Vec::new(),
            log,
        });
    }

    let distilled = distill_keys(
        (Party::Alice, &sifted_keys[&Party::Alice]),
        &[(Party::Bob, &sifted_keys[&Party::Bob])],
        decision.qber,
        cfg.ec_block,
        cfg.security_param,
        &mut rng,
    )?;
    counters.b_s = distilled.finals[&Party::Bob].len() as u64;

    Ok(RunResult {
        protocol: cfg.protocol,
        status: RunStatus::Completed,
        qber_estimate: decision.qber,
        sifted_keys,
        final_keys: distilled.finals,
        counters,
        traces,
        checks: vec![decision],
        per_basis_qber: BTreeMap::new(),
        eve: eve_record,
        eve_guess_accuracy,
        leaked_bits: distilled.leaked,
        toeplitz_seed: distilled.seed.bits,
        log,
    })
}
