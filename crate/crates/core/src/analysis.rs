//! Efficiency metrics and multi-run summaries.
//!
//! Total efficiency is `b_s / (q_t + b_t)` and qubit efficiency is
//! `q_u / q_t`, both straight off the traffic counters. Exact-rational
//! variants exist because the headline figures (1, 1/2, and the 25%, 50%,
//! 67% reference triple) are rational identities on small counters, not
//! floating-point approximations.

use std::collections::BTreeMap;

use num_rational::Ratio;
use thiserror::Error;

use crate::channel::TrafficCounters;
use crate::protocol::{Protocol, RunResult, SessionConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("efficiency denominator is zero")]
    DivisionByZero,
    #[error("cannot summarize an empty report list")]
    EmptyInput,
    #[error("summary cell mixes protocols or attacks: {0}")]
    HeterogeneousCell(String),
}

/// Counter snapshot feeding the efficiency formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EfficiencyInputs {
    pub b_s: u64,
    pub q_t: u64,
    pub b_t: u64,
    pub q_u: u64,
}

impl From<TrafficCounters> for EfficiencyInputs {
    fn from(c: TrafficCounters) -> EfficiencyInputs {
        EfficiencyInputs {
            b_s: c.b_s,
            q_t: c.q_t,
            b_t: c.b_t,
            q_u: c.q_u,
        }
    }
}

/// Total efficiency `b_s / (q_t + b_t)`.
pub fn efficiency_total(inputs: EfficiencyInputs) -> Result<f64, AnalysisError> {
    let ratio = efficiency_total_exact(inputs)?;
    Ok(*ratio.numer() as f64 / *ratio.denom() as f64)
}

/// Exact rational form of [`efficiency_total`].
pub fn efficiency_total_exact(inputs: EfficiencyInputs) -> Result<Ratio<u64>, AnalysisError> {
    let denom = inputs.q_t + inputs.b_t;
    if denom == 0 {
        return Err(AnalysisError::DivisionByZero);
    }
    Ok(Ratio::new(inputs.b_s, denom))
}

/// Qubit efficiency `q_u / q_t`.
pub fn efficiency_qubits(inputs: EfficiencyInputs) -> Result<f64, AnalysisError> {
    let ratio = efficiency_qubits_exact(inputs)?;
    Ok(*ratio.numer() as f64 / *ratio.denom() as f64)
}

/// Exact rational form of [`efficiency_qubits`].
pub fn efficiency_qubits_exact(inputs: EfficiencyInputs) -> Result<Ratio<u64>, AnalysisError> {
    if inputs.q_t == 0 {
        return Err(AnalysisError::DivisionByZero);
    }
    Ok(Ratio::new(inputs.q_u, inputs.q_t))
}

/// Per-round asymptotic total efficiency with the check fraction driven to
/// zero and no distillation losses: every transmitted qubit yields a key
/// bit against the protocol's per-round metered classical traffic.
///
/// The pair protocols have exact values (1 and 1/2). The triplet protocols
/// depend on the controller's basis bias: per round two qubits and one
/// basis bit always flow, a fraction of rounds becomes key, and each key
/// round costs one more published bit.
pub fn asymptotic_total_efficiency(protocol: Protocol, epsilon: f64) -> f64 {
    match protocol {
        Protocol::P1 => 1.0,
        Protocol::P2 => 0.5,
        Protocol::P3Controlled => {
            let key = 1.0 - epsilon;
            key / (3.0 + key)
        }
        Protocol::P3ThreeParty => epsilon / (3.0 + epsilon),
    }
}

/// Exact rational asymptotic efficiency where one exists independent of
/// the basis bias.
pub fn asymptotic_total_efficiency_exact(protocol: Protocol) -> Option<Ratio<u64>> {
    match protocol {
        Protocol::P1 => Some(Ratio::new(1, 1)),
        Protocol::P2 => Some(Ratio::new(1, 2)),
        _ => None,
    }
}

/// Flat per-run record feeding summaries and the serialized reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub protocol: Protocol,
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
    pub per_basis_qber: BTreeMap<String, f64>,
    pub check_samples: u64,
    pub check_disagreements: u64,
    pub final_key: Vec<bool>,
    pub toeplitz_seed: Vec<bool>,
}

impl RunReport {
    pub fn from_run(
        cfg: &SessionConfig,
        result: &RunResult,
        qber_oracle: Option<f64>,
    ) -> RunReport {
        let inputs = EfficiencyInputs::from(result.counters);
        let (samples, disagreements) = result.check_totals();
        let key_len_sifted = result
            .sifted_keys
            .values()
            .map(|k| k.len() as u64)
            .next_back()
            .unwrap_or(0);
        let (final_key, key_len_final) = result
            .final_keys
            .values()
            .next()
            .map(|k| (k.clone(), k.len() as u64))
            .unwrap_or_default();
        RunReport {
            protocol: cfg.protocol,
            attack: cfg.attack.label(),
            seed: cfg.seed,
            n_rounds: cfg.rounds as u64,
            check_fraction: cfg.check_fraction,
            abort_threshold: cfg.abort_threshold,
            epsilon: cfg.epsilon,
            noise_p: cfg.noise.depolarizing_p,
            qber: result.qber_estimate,
            qber_oracle,
            aborted: result.aborted(),
            key_len_sifted,
            key_len_final,
            counters: result.counters,
            efficiency_total: efficiency_total(inputs).unwrap_or(0.0),
            efficiency_qubits: efficiency_qubits(inputs).unwrap_or(0.0),
            per_basis_qber: result.per_basis_qber.clone(),
            check_samples: samples as u64,
            check_disagreements: disagreements as u64,
            final_key,
            toeplitz_seed: result.toeplitz_seed.clone(),
        }
    }
}

/// Aggregate of one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub protocol: Protocol,
    pub attack: String,
    /// Mean of the per-run error-rate estimates.
    pub mean_qber: f64,
    /// Error rate pooled over every check comparison in the cell.
    pub pooled_qber: f64,
    /// 99% binomial interval (normal approximation with continuity
    /// correction) around the pooled rate.
    pub qber_ci99: (f64, f64),
    pub abort_rate: f64,
    pub mean_efficiency_total: f64,
    pub mean_efficiency_qubits: f64,
    pub mean_key_len_final: f64,
}

/// Collapse a homogeneous cell of runs into one summary row.
pub fn summarize(reports: &[RunReport]) -> Result<Aggregate, AnalysisError> {
    let first = reports.first().ok_or(AnalysisError::EmptyInput)?;
    for r in reports {
        if r.protocol != first.protocol || r.attack != first.attack {
            return Err(AnalysisError::HeterogeneousCell(format!(
                "{}/{} vs {}/{}",
                first.protocol.label(),
                first.attack,
                r.protocol.label(),
                r.attack
            )));
        }
    }
    let n = reports.len();
    let mean = |f: &dyn Fn(&RunReport) -> f64| -> f64 {
        reports.iter().map(f).sum::<f64>() / n as f64
    };
    let samples: u64 = reports.iter().map(|r| r.check_samples).sum();
    let disagreements: u64 = reports.iter().map(|r| r.check_disagreements).sum();
    let pooled = if samples > 0 {
        disagreements as f64 / samples as f64
    } else {
        0.0
    };
    // 99% two-sided z with continuity correction.
    let ci = if samples > 0 {
        let z = 2.5758293035489004_f64;
        let s = samples as f64;
        let hw = z * (pooled * (1.0 - pooled) / s).sqrt() + 1.0 / (2.0 * s);
        ((pooled - hw).max(0.0), (pooled + hw).min(1.0))
    } else {
        (0.0, 1.0)
    };
    Ok(Aggregate {
        runs: n,
        protocol: first.protocol,
        attack: first.attack.clone(),
        mean_qber: mean(&|r| r.qber),
        pooled_qber: pooled,
        qber_ci99: ci,
        abort_rate: reports.iter().filter(|r| r.aborted).count() as f64 / n as f64,
        mean_efficiency_total: mean(&|r| r.efficiency_total),
        mean_efficiency_qubits: mean(&|r| r.efficiency_qubits),
        mean_key_len_final: mean(&|r| r.key_len_final as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::EveStrategy;
    use crate::protocol::run;

    fn inputs(b_s: u64, q_t: u64, b_t: u64, q_u: u64) -> EfficiencyInputs {
        EfficiencyInputs { b_s, q_t, b_t, q_u }
    }

    #[test]
    fn reference_efficiency_triple() {
        // The three published comparison figures.
        assert_eq!(
            efficiency_total_exact(inputs(1, 2, 2, 0)).unwrap(),
            Ratio::new(1, 4)
        );
        assert_eq!(
            efficiency_total_exact(inputs(1, 1, 1, 0)).unwrap(),
            Ratio::new(1, 2)
        );
        assert_eq!(
            efficiency_total_exact(inputs(2, 2, 1, 0)).unwrap(),
            Ratio::new(2, 3)
        );
        assert_eq!(
            efficiency_total_exact(inputs(1, 1, 0, 0)).unwrap(),
            Ratio::new(1, 1)
        );
    }

    #[test]
    fn qubit_efficiency_examples() {
        assert_eq!(
            efficiency_qubits_exact(inputs(0, 1000, 0, 750)).unwrap(),
            Ratio::new(3, 4)
        );
        assert_eq!(efficiency_qubits(inputs(0, 10, 0, 0)).unwrap(), 0.0);
        assert_eq!(
            efficiency_qubits_exact(inputs(0, 0, 0, 0)),
            Err(AnalysisError::DivisionByZero)
        );
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert_eq!(
            efficiency_total_exact(inputs(1, 0, 0, 0)),
            Err(AnalysisError::DivisionByZero)
        );
    }

    #[test]
    fn monotone_in_classical_traffic() {
        // More metered classical bits strictly lowers total efficiency.
        let mut last = f64::INFINITY;
        for b_t in [0u64, 1, 5, 50, 500] {
            let e = efficiency_total(inputs(100, 200, b_t, 0)).unwrap();
            assert!(e < last);
            last = e;
        }
    }

    #[test]
    fn asymptotic_reference_values() {
        assert_eq!(
            asymptotic_total_efficiency_exact(Protocol::P1).unwrap(),
            Ratio::new(1, 1)
        );
        assert_eq!(
            asymptotic_total_efficiency_exact(Protocol::P2).unwrap(),
            Ratio::new(1, 2)
        );
        assert!(asymptotic_total_efficiency_exact(Protocol::P3Controlled).is_none());
        let e = asymptotic_total_efficiency(Protocol::P3Controlled, 0.5);
        assert!((e - 0.5 / 3.5).abs() < 1e-12);
    }

    #[test]
    fn summarize_rejects_mixed_cells_and_empty_input() {
        assert_eq!(summarize(&[]), Err(AnalysisError::EmptyInput));

        let mut cfg = crate::protocol::SessionConfig::new(Protocol::P2);
        cfg.rounds = 100;
        cfg.seed = 1;
        let r1 = RunReport::from_run(&cfg, &run(&cfg).unwrap(), None);
        let mut cfg2 = cfg.clone();
        cfg2.attack = EveStrategy::collective_cnot_default();
        cfg2.seed = 2;
        let r2 = RunReport::from_run(&cfg2, &run(&cfg2).unwrap(), None);
        assert!(matches!(
            summarize(&[r1.clone(), r2]),
            Err(AnalysisError::HeterogeneousCell(_))
        ));

        let agg = summarize(&[r1.clone(), r1]).unwrap();
        assert_eq!(agg.runs, 2);
        assert_eq!(agg.mean_qber, 0.0);
        assert_eq!(agg.abort_rate, 0.0);
        assert!(agg.qber_ci99.0 <= agg.pooled_qber && agg.pooled_qber <= agg.qber_ci99.1);
    }

    #[test]
    fn collective_attack_cell_interval_contains_a_quarter() {
        let mut reports = Vec::new();
        for seed in 0..20u64 {
            let mut cfg = crate::protocol::SessionConfig::new(Protocol::P2);
            cfg.rounds = 2000;
            cfg.attack = EveStrategy::collective_cnot_default();
            cfg.abort_threshold = 0.99;
            cfg.seed = 300 + seed;
            reports.push(RunReport::from_run(&cfg, &run(&cfg).unwrap(), Some(0.25)));
        }
        let agg = summarize(&reports).unwrap();
        assert!(agg.qber_ci99.0 <= 0.25 && 0.25 <= agg.qber_ci99.1);
        assert_eq!(agg.abort_rate, 0.0, "threshold was lifted for rate measurement");
    }

    #[test]
    fn report_efficiencies_recompute_from_counters() {
        let mut cfg = crate::protocol::SessionConfig::new(Protocol::P2);
        cfg.rounds = 200;
        cfg.seed = 9;
        let result = run(&cfg).unwrap();
        let report = RunReport::from_run(&cfg, &result, None);
        let inputs = EfficiencyInputs::from(report.counters);
        assert_eq!(report.efficiency_total, efficiency_total(inputs).unwrap());
        assert_eq!(report.efficiency_qubits, efficiency_qubits(inputs).unwrap());
    }
}
