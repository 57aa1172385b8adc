//! Exact error-rate oracle.
//!
//! For each supported protocol/attack pair this enumerates every discrete
//! branch of a single round -- preparation choice, the adversary's random
//! choices and measurement outcomes, channel noise, and the basis schedule
//! -- with exact probability arithmetic. Outcome statistics come from
//! [`Register::distribution`] and the projection operators; nothing here
//! samples. The Monte-Carlo runs are validated against these figures.

use std::collections::BTreeMap;

use crate::adversary::{BasisPolicy, EveStrategy, ResendPolicy};
use crate::protocol::{attack_supported, Protocol, ProtocolError, SessionConfig};
use crate::quantum::{BellOutcome, MeasurementBasis, Pauli, Register};
use crate::states::{named_state, NamedState};

/// Knobs the oracle shares with the protocol runners.
#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Block protocol: fraction of Hadamarded positions.
    pub hadamard_fraction: f64,
    /// Block protocol: session-wide measurement basis.
    pub session_basis: MeasurementBasis,
    /// Triplet protocols: probability of a controller Z round.
    pub epsilon: f64,
    /// Depolarizing probability applied per transmitted qubit.
    pub noise_p: f64,
}

impl Default for OracleOptions {
    fn default() -> OracleOptions {
        OracleOptions {
            hadamard_fraction: 0.5,
            session_basis: MeasurementBasis::Z,
            epsilon: 0.5,
            noise_p: 0.0,
        }
    }
}

impl From<&SessionConfig> for OracleOptions {
    fn from(cfg: &SessionConfig) -> OracleOptions {
        OracleOptions {
            hadamard_fraction: cfg.hadamard_fraction,
            session_basis: cfg.session_basis,
            epsilon: cfg.epsilon,
            noise_p: cfg.noise.depolarizing_p,
        }
    }
}

/// Exact per-comparison error rates: overall and per condition cell.
#[derive(Debug, Clone, PartialEq)]
pub struct QberOracle {
    pub overall: f64,
    pub cells: BTreeMap<String, f64>,
}

impl QberOracle {
    pub fn cell(&self, key: &str) -> Option<f64> {
        self.cells.get(key).copied()
    }
}

#[derive(Default)]
struct Tally {
    violations: f64,
    comparisons: f64,
}

#[derive(Default)]
struct Accumulator {
    cells: BTreeMap<String, Tally>,
    total: Tally,
}

impl Accumulator {
    /// Record `weight` rounds' worth of a branch with `comparisons`
    /// comparisons per round and `expected_violations` expected violations.
    fn add(&mut self, cell: &str, weight: f64, expected_violations: f64, comparisons: f64) {
        let entry = self.cells.entry(cell.to_string()).or_default();
        entry.violations += weight * expected_violations;
        entry.comparisons += weight * comparisons;
        self.total.violations += weight * expected_violations;
        self.total.comparisons += weight * comparisons;
    }

    fn finish(self) -> QberOracle {
        QberOracle {
            overall: self.total.violations / self.total.comparisons,
            cells: self
                .cells
                .into_iter()
                .map(|(k, t)| (k, t.violations / t.comparisons))
                .collect(),
        }
    }
}

/// One weighted branch of the round enumeration.
struct Branch {
    weight: f64,
    cell: String,
    reg: Register,
}

/// Expand each branch over the depolarizing channel on one qubit.
fn depolarize(branches: Vec<Branch>, q: char, p: f64) -> Vec<Branch> {
    if p == 0.0 {
        return branches;
    }
    let mut out = Vec::with_capacity(branches.len() * 4);
    for b in branches {
        out.push(Branch {
            weight: b.weight * (1.0 - p),
            cell: b.cell.clone(),
            reg: b.reg.clone(),
        });
        for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
            let mut reg = b.reg.clone();
            reg.apply_pauli(q, pauli).expect("label exists");
            out.push(Branch {
                weight: b.weight * p / 3.0,
                cell: b.cell.clone(),
                reg,
            });
        }
    }
    out
}

/// Expand a branch over the adversary's action on one flying qubit.
fn attack_pair_qubit(
    branch: Branch,
    q: char,
    attack: &EveStrategy,
) -> Result<Vec<Branch>, ProtocolError> {
    match attack {
        EveStrategy::None => Ok(vec![branch]),
        EveStrategy::InterceptResend { basis, resend } => {
            let bases: &[(MeasurementBasis, f64)] = match basis {
                BasisPolicy::AlwaysZ => &[(MeasurementBasis::Z, 1.0)],
                BasisPolicy::AlwaysX => &[(MeasurementBasis::X, 1.0)],
                BasisPolicy::RandomZX => {
                    &[(MeasurementBasis::Z, 0.5), (MeasurementBasis::X, 0.5)]
                }
            };
            let mut out = Vec::new();
            for &(eve_basis, w) in bases {
                for outcome in [false, true] {
                    let (prob, collapsed) = branch.reg.project(q, eve_basis, outcome)?;
                    let Some(mut reg) = collapsed else { continue };
                    if *resend == ResendPolicy::RemapToDiagonal && eve_basis == MeasurementBasis::Z
                    {
                        reg.apply_hadamard(q)?;
                    }
                    out.push(Branch {
                        weight: branch.weight * w * prob,
                        cell: format!("{}/eve={}", branch.cell, eve_basis.label()),
                        reg,
                    });
                }
            }
            Ok(out)
        }
        EveStrategy::CollectiveCnot { control_basis } => {
            let mut reg = branch.reg;
            reg.adjoin_qubit('E', false)?;
            reg.apply_cnot(q, 'E', *control_basis)?;
            Ok(vec![Branch {
                weight: branch.weight,
                cell: branch.cell,
                reg,
            }])
        }
        EveStrategy::BellIntercept => Err(ProtocolError::UnsupportedCombination(
            "bell interception needs a triplet round".to_string(),
        )),
    }
}

fn pair_error_prob(reg: &Register, basis: MeasurementBasis) -> Result<f64, ProtocolError> {
    let dist = reg.distribution(&[('A', basis), ('B', basis)])?;
    Ok(dist.prob_where(|bits| bits[0] != bits[1]))
}

fn oracle_p1(attack: &EveStrategy, opts: &OracleOptions) -> Result<QberOracle, ProtocolError> {
    let mut acc = Accumulator::default();
    for (hadamarded, w_had) in [
        (false, 1.0 - opts.hadamard_fraction),
        (true, opts.hadamard_fraction),
    ] {
        if w_had == 0.0 {
            continue;
        }
        let base = Branch {
            weight: w_had,
            cell: format!("hadamard={}", u8::from(hadamarded)),
            reg: named_state(NamedState::PhiPlus),
        };
        // Transmission order: adversary first, then channel noise, and the
        // Hadamard subset is only chosen after the block has flown.
        let branches = attack_pair_qubit(base, 'B', attack)?;
        let branches = depolarize(branches, 'B', opts.noise_p);
        for mut branch in branches {
            if hadamarded {
                branch.reg.apply_hadamard('A')?;
                branch.reg.apply_hadamard('B')?;
            }
            let p_err = pair_error_prob(&branch.reg, opts.session_basis)?;
            acc.add(&branch.cell, branch.weight, p_err, 1.0);
        }
    }
    Ok(acc.finish())
}

fn oracle_p2(attack: &EveStrategy, opts: &OracleOptions) -> Result<QberOracle, ProtocolError> {
    let mut acc = Accumulator::default();
    for (which, tag) in [
        (NamedState::PhiPlus, "prep=phi+"),
        (NamedState::PhiMinus, "prep=phi-"),
    ] {
        let hadamard_round = which == NamedState::PhiMinus;
        let base = Branch {
            weight: 0.5,
            cell: tag.to_string(),
            reg: named_state(which),
        };
        let branches = attack_pair_qubit(base, 'B', attack)?;
        let branches = depolarize(branches, 'B', opts.noise_p);
        for mut branch in branches {
            if hadamard_round {
                branch.reg.apply_hadamard('A')?;
                branch.reg.apply_hadamard('B')?;
            }
            let p_err = pair_error_prob(&branch.reg, MeasurementBasis::X)?;
            acc.add(&branch.cell, branch.weight, p_err, 1.0);
        }
    }
    Ok(acc.finish())
}

fn oracle_p3(attack: &EveStrategy, opts: &OracleOptions) -> Result<QberOracle, ProtocolError> {
    let mut acc = Accumulator::default();
    for (which, inverted) in [
        (NamedState::TripletAligned, false),
        (NamedState::TripletInverted, true),
    ] {
        let base = Branch {
            weight: 0.5,
            cell: String::new(),
            reg: named_state(which),
        };
        // Channel order per round: B flies (tap, then noise), then C flies
        // (tap completes the pair measurement, then noise).
        let branches = depolarize(vec![base], 'B', opts.noise_p);
        let branches = match attack {
            EveStrategy::None => branches,
            EveStrategy::BellIntercept => {
                let mut out = Vec::new();
                for b in branches {
                    for outcome in BellOutcome::ALL {
                        let (prob, collapsed) = b.reg.project_bell('B', 'C', outcome)?;
                        let Some(reg) = collapsed else { continue };
                        out.push(Branch {
                            weight: b.weight * prob,
                            cell: b.cell.clone(),
                            reg,
                        });
                    }
                }
                out
            }
            other => {
                return Err(ProtocolError::UnsupportedCombination(format!(
                    "{} against a triplet round",
                    other.label()
                )))
            }
        };
        let branches = depolarize(branches, 'C', opts.noise_p);

        for branch in branches {
            // Controller Z rounds: Bob X, Charlie Z; two comparisons.
            if opts.epsilon > 0.0 {
                let dist = branch.reg.distribution(&[
                    ('A', MeasurementBasis::Z),
                    ('B', MeasurementBasis::X),
                    ('C', MeasurementBasis::Z),
                ])?;
                let mut expected = 0.0;
                for (outcome, p) in dist.iter() {
                    let bits: Vec<bool> = outcome.chars().map(|ch| ch == '1').collect();
                    let (a, b, c) = (bits[0], bits[1], bits[2]);
                    let mut v = 0.0;
                    if c != a {
                        v += 1.0;
                    }
                    if b != (a ^ inverted) {
                        v += 1.0;
                    }
                    expected += p * v;
                }
                acc.add("alice=Z", branch.weight * opts.epsilon, expected, 2.0);
            }
            // Controller X rounds: Bob Z, Charlie X; one comparison.
            if opts.epsilon < 1.0 {
                let dist = branch.reg.distribution(&[
                    ('A', MeasurementBasis::X),
                    ('B', MeasurementBasis::Z),
                    ('C', MeasurementBasis::X),
                ])?;
                let expected = dist.prob_where(|bits| bits[2] != (bits[1] ^ bits[0]));
                acc.add("alice=X", branch.weight * (1.0 - opts.epsilon), expected, 1.0);
            }
        }
    }
    Ok(acc.finish())
}

/// Exact error rate for one protocol/attack pair, overall and per
/// condition cell.
pub fn exact_qber_oracle(
    protocol: Protocol,
    attack: &EveStrategy,
    opts: &OracleOptions,
) -> Result<QberOracle, ProtocolError> {
    if !attack_supported(protocol, attack) {
        return Err(ProtocolError::UnsupportedCombination(format!(
            "{} / {}",
            protocol.label(),
            attack.label()
        )));
    }
    match protocol {
        Protocol::P1 => oracle_p1(attack, opts),
        Protocol::P2 => oracle_p2(attack, opts),
        Protocol::P3Controlled | Protocol::P3ThreeParty => oracle_p3(attack, opts),
    }
}
