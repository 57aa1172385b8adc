//! Block-transmission protocol.
//!
//! Alice prepares an ordered block of `phi+` pairs and transmits every `B`
//! half before anything else happens, so the whole block sits in quantum
//! memory. Bob then Hadamards a random subset of his halves and announces
//! the positions; Alice mirrors the transform on her halves. Both sides
//! measure everything in the session basis, Bob publishes a random check
//! subset of his outcomes, and Alice decides whether the disagreement rate
//! allows distillation. Position lists and check traffic stay off the
//! `b_t` meter, which is what drives the protocol's total efficiency
//! toward 1.

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
use crate::rng::Prng;
use crate::states::{named_state, NamedState};

pub fn run_protocol1(cfg: &SessionConfig) -> Result<RunResult, ProtocolError> {
    if cfg.protocol != Protocol::P1 {
        return Err(ProtocolError::ConfigMismatch(format!(
            "run_protocol1 got {}",
            cfg.protocol.label()
        )));
    }
    cfg.validate()?;

    let n = cfg.rounds;
    let mut rng = Prng::new(cfg.seed);
    let mut counters = TrafficCounters::default();
    let mut log = MessageLog::new();
    let mut eve = Eavesdropper::new(cfg.attack);

    // Step 1: prepare the ordered block and transmit every B half. The
    // adversary taps each transmission; nothing else has been announced yet.
    let mut regs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut reg = named_state(NamedState::PhiPlus);
        transmit_qubit(&mut reg, 'B', &mut eve, &cfg.noise, &mut counters, &mut rng)?;
        eve.finish_round();
        regs.push(reg);
    }

    // Step 2: Bob Hadamards a random subset and announces the positions.
    let h_count = (n as f64 * cfg.hadamard_fraction).round() as usize;
    let h_positions = rng.sample_indices(n, h_count);
    let mut hadamarded = vec![false; n];
    for &i in &h_positions {
        hadamarded[i] = true;
    }
    broadcast_classical(
        ClassicalMessage::new(Party::Bob, PayloadKind::PositionList, hadamarded.clone()),
        &mut counters,
        &mut log,
    );
    for &i in &h_positions {
        regs[i].apply_hadamard('B')?;
    }

    // Step 3: Alice mirrors the transform on her halves.
    for &i in &h_positions {
        regs[i].apply_hadamard('A')?;
    }

    // Step 4: both measure the whole block in the session basis. The
    // adversary reads her probes now that the position list is public.
    let mut alice_bits = Vec::with_capacity(n);
    let mut bob_bits = Vec::with_capacity(n);
    for (i, reg) in regs.iter_mut().enumerate() {
        let a = reg.measure('A', cfg.session_basis, &mut rng)?;
        let b = reg.measure('B', cfg.session_basis, &mut rng)?;
        eve.hear_announcement_for(
            i,
            reg,
            Announcement::BlockHadamard {
                applied: hadamarded[i],
            },
            &mut rng,
        )?;
        alice_bits.push(a);
        bob_bits.push(b);
    }

    // Step 5: Bob publishes a random check subset of his outcomes; Alice
    // compares and broadcasts the verdict. None of this traffic is metered.
    let check_count = cfg.check_count();
    let check_positions = rng.sample_indices(n, check_count);
    let mut is_check = vec![false; n];
    for &i in &check_positions {
        is_check[i] = true;
    }
    broadcast_classical(
        ClassicalMessage::new(Party::Bob, PayloadKind::PositionList, is_check.clone()),
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
    broadcast_classical(
        ClassicalMessage::new(Party::Alice, PayloadKind::CheckResults, vec![decision.proceed]),
        &mut counters,
        &mut log,
    );

    counters.q_u = (n - check_count) as u64;

    let eve_record = eve.into_record();
    let traces: Vec<RoundTrace> = (0..n)
        .map(|i| RoundTrace {
            round: i,
            state_tag: NamedState::PhiPlus,
            hadamard: [hadamarded[i], hadamarded[i], false],
            bases: [Some(cfg.session_basis), Some(cfg.session_basis), None],
            bits: [Some(alice_bits[i]), Some(bob_bits[i]), None],
            eve_summary: eve_record.rounds[i].summary(),
            sifted: decision.proceed && !is_check[i],
            check: is_check[i],
            error: alice_bits[i] != bob_bits[i],
        })
        .collect();

    let actual_bits: Vec<Option<bool>> = bob_bits.iter().map(|&b| Some(b)).collect();
    let eve_guess_accuracy = eve_record.guess_accuracy(&actual_bits).map(|(acc, _)| acc);

    let mut sifted_keys = BTreeMap::new();
    let sift = |bits: &[bool]| -> Vec<bool> {
        bits.iter()
            .enumerate()
            .filter(|(i, _)| !is_check[*i])
            .map(|(_, &b)| b)
            .collect()
    };
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::EveStrategy;
    use crate::quantum::MeasurementBasis;

    #[test]
    fn clean_run_completes_with_identical_keys() {
        let mut cfg = SessionConfig::new(Protocol::P1);
        cfg.seed = 41;
        let result = run_protocol1(&cfg).unwrap();
        assert_eq!(result.status, RunStatus::Completed);
        assert_eq!(result.qber_estimate, 0.0);
        assert_eq!(result.sifted_keys[&Party::Alice], result.sifted_keys[&Party::Bob]);
        assert_eq!(result.final_keys[&Party::Alice], result.final_keys[&Party::Bob]);
        assert!(!result.final_keys[&Party::Alice].is_empty());
        assert_eq!(result.counters.q_t, 1000);
        assert_eq!(result.counters.b_t, 0, "block protocol sends no metered bits");
        assert_eq!(result.counters.q_u, 1000 - cfg.check_count() as u64);
    }

    #[test]
    fn x_session_basis_also_agrees() {
        let mut cfg = SessionConfig::new(Protocol::P1);
        cfg.session_basis = MeasurementBasis::X;
        cfg.seed = 42;
        let result = run_protocol1(&cfg).unwrap();
        assert_eq!(result.status, RunStatus::Completed);
        assert_eq!(result.qber_estimate, 0.0);
    }

    #[test]
    fn intercept_resend_aborts() {
        let mut cfg = SessionConfig::new(Protocol::P1);
        cfg.attack = EveStrategy::intercept_resend_default();
        cfg.seed = 43;
        let result = run_protocol1(&cfg).unwrap();
        assert_eq!(result.status, RunStatus::Aborted);
        assert!(result.qber_estimate > cfg.abort_threshold);
        assert!(result.final_keys.is_empty());
    }

    #[test]
    fn rejects_wrong_protocol_tag() {
        let cfg = SessionConfig::new(Protocol::P2);
        assert!(matches!(
            run_protocol1(&cfg),
            Err(ProtocolError::ConfigMismatch(_))
        ));
    }

    #[test]
    fn check_and_sift_flags_are_exclusive() {
        let mut cfg = SessionConfig::new(Protocol::P1);
        cfg.seed = 44;
        let result = run_protocol1(&cfg).unwrap();
        for t in &result.traces {
            assert!(!(t.check && t.sifted));
        }
        let checks = result.traces.iter().filter(|t| t.check).count();
        assert_eq!(checks, cfg.check_count());
    }
}
