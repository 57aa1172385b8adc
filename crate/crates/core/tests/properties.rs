//! Engine-level invariants: norm preservation, gate involutions,
//! measurement-order independence, Bell completeness, and agreement
//! between the sampling and exact measurement paths.

use num_complex::Complex64;
use proptest::prelude::*;
use qkd_core::quantum::{BellOutcome, MeasurementBasis, Pauli, Register};
use qkd_core::rng::Prng;
use qkd_core::states::{named_state, NamedState};

const LABELS: [char; 4] = ['A', 'B', 'C', 'D'];

fn register_from_raw(n: usize, raw: &[(f64, f64)]) -> Option<Register> {
    let norm_sqr: f64 = raw.iter().map(|(re, im)| re * re + im * im).sum();
    if norm_sqr < 1e-6 {
        return None;
    }
    let scale = norm_sqr.sqrt();
    let amps: Vec<Complex64> = raw
        .iter()
        .map(|(re, im)| Complex64::new(re / scale, im / scale))
        .collect();
    Some(Register::new(&LABELS[..n], amps).expect("normalized by construction"))
}

#[derive(Debug, Clone)]
enum Gate {
    Hadamard(usize),
    Pauli(usize, u8),
    Cnot(usize, usize, bool),
}

fn arb_register(n: usize) -> impl Strategy<Value = Register> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
        .prop_filter_map("norm too small", move |raw| register_from_raw(n, &raw))
}

fn arb_gates(n: usize) -> impl Strategy<Value = Vec<Gate>> {
    let gate = (0..3u8, 0..n, 0..n, any::<u8>(), any::<bool>()).prop_filter_map(
        "same qubit",
        move |(kind, a, b, pauli, xctrl)| match kind {
            0 => Some(Gate::Hadamard(a)),
            1 => Some(Gate::Pauli(a, pauli % 3)),
            _ if a != b => Some(Gate::Cnot(a, b, xctrl)),
            _ => None,
        },
    );
    proptest::collection::vec(gate, 1..12)
}

fn apply(reg: &mut Register, gate: &Gate) {
    match gate {
        Gate::Hadamard(q) => reg.apply_hadamard(LABELS[*q]).unwrap(),
        Gate::Pauli(q, which) => {
            let p = [Pauli::X, Pauli::Y, Pauli::Z][*which as usize];
            reg.apply_pauli(LABELS[*q], p).unwrap();
        }
        Gate::Cnot(c, t, xctrl) => {
            let basis = if *xctrl {
                MeasurementBasis::X
            } else {
                MeasurementBasis::Z
            };
            reg.apply_cnot(LABELS[*c], LABELS[*t], basis).unwrap();
        }
    }
}

proptest! {
    #[test]
    fn gates_preserve_norm((reg, gates) in (2usize..=3).prop_flat_map(|n| (arb_register(n), arb_gates(n)))) {
        let mut reg = reg;
        for g in &gates {
            apply(&mut reg, g);
            prop_assert!((reg.norm_sqr() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn measurement_collapse_preserves_norm(
        (reg, qubit, basis_x, seed) in (2usize..=3).prop_flat_map(|n| {
            (arb_register(n), 0..n, any::<bool>(), any::<u64>())
        })
    ) {
        let mut reg = reg;
        let basis = if basis_x { MeasurementBasis::X } else { MeasurementBasis::Z };
        let mut rng = Prng::new(seed);
        reg.measure(LABELS[qubit], basis, &mut rng).unwrap();
        prop_assert!((reg.norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bell_probabilities_are_complete(
        (reg, pair) in (2usize..=3).prop_flat_map(|n| (arb_register(n), (0..n, 0..n)))
    ) {
        prop_assume!(pair.0 != pair.1);
        let probs = reg.bell_probabilities(LABELS[pair.0], LABELS[pair.1]).unwrap();
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        for p in probs {
            prop_assert!(p >= -1e-15);
        }
    }

    #[test]
    fn distribution_is_order_independent(
        (reg, swap_bases) in (2usize..=3).prop_flat_map(|n| (arb_register(n), proptest::collection::vec(any::<bool>(), n)))
    ) {
        let n = reg.qubit_count();
        let schedule: Vec<(char, MeasurementBasis)> = (0..n)
            .map(|i| {
                let b = if swap_bases[i] { MeasurementBasis::X } else { MeasurementBasis::Z };
                (LABELS[i], b)
            })
            .collect();
        let mut reversed = schedule.clone();
        reversed.reverse();
        let forward = reg.distribution(&schedule).unwrap();
        let backward = reg.distribution(&reversed).unwrap();
        // Outcome strings follow schedule order, so compare after
        // reversing the key of one side.
        for (outcome, p) in forward.iter() {
            let flipped: String = outcome.chars().rev().collect();
            prop_assert_eq!(p, backward.prob(&flipped));
        }
    }

    #[test]
    fn distribution_total_is_one(reg in (1usize..=3).prop_flat_map(arb_register)) {
        let n = reg.qubit_count();
        let schedule: Vec<(char, MeasurementBasis)> =
            (0..n).map(|i| (LABELS[i], MeasurementBasis::X)).collect();
        let dist = reg.distribution(&schedule).unwrap();
        prop_assert!((dist.total() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn hadamard_and_cnot_are_involutions_exhaustively() {
    for n in 1..=4usize {
        for index in 0..(1usize << n) {
            let bits: Vec<bool> = (0..n).map(|i| index >> (n - 1 - i) & 1 == 1).collect();
            let reference = Register::basis_state(&LABELS[..n], &bits).unwrap();
            for &q in &LABELS[..n] {
                let mut reg = reference.clone();
                reg.apply_hadamard(q).unwrap();
                reg.apply_hadamard(q).unwrap();
                assert!(reg.equal_up_to_phase(&reference, 1e-12).unwrap());
            }
            for &control in &LABELS[..n] {
                for &target in &LABELS[..n] {
                    if control == target {
                        continue;
                    }
                    for basis in [MeasurementBasis::Z, MeasurementBasis::X] {
                        let mut reg = reference.clone();
                        reg.apply_cnot(control, target, basis).unwrap();
                        reg.apply_cnot(control, target, basis).unwrap();
                        assert!(reg.equal_up_to_phase(&reference, 1e-12).unwrap());
                    }
                }
            }
        }
    }
}

/// Sampled `measure` frequencies match the exact `distribution` oracle
/// within 3-sigma binomial bounds per outcome.
#[test]
fn sampling_matches_exact_distribution() {
    let cases: Vec<(Register, Vec<(char, MeasurementBasis)>)> = vec![
        (
            named_state(NamedState::PhiPlus),
            vec![('A', MeasurementBasis::Z), ('B', MeasurementBasis::Z)],
        ),
        (
            named_state(NamedState::PhiMinus),
            vec![('A', MeasurementBasis::X), ('B', MeasurementBasis::X)],
        ),
        (
            named_state(NamedState::TripletAligned),
            vec![
                ('A', MeasurementBasis::X),
                ('B', MeasurementBasis::Z),
                ('C', MeasurementBasis::X),
            ],
        ),
        (
            named_state(NamedState::HanThreeParticle),
            vec![('1', MeasurementBasis::Z), ('2', MeasurementBasis::X)],
        ),
    ];
    let samples = 100_000usize;
    let mut rng = Prng::new(0xFEED);
    for (reg, schedule) in cases {
        let exact = reg.distribution(&schedule).unwrap();
        let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
        for _ in 0..samples {
            let mut copy = reg.clone();
            let outcome: String = schedule
                .iter()
                .map(|&(q, basis)| {
                    if copy.measure(q, basis, &mut rng).unwrap() {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            *counts.entry(outcome).or_default() += 1;
        }
        for (outcome, p) in exact.iter() {
            let freq = counts.get(outcome).copied().unwrap_or(0) as f64 / samples as f64;
            let sigma = (p * (1.0 - p) / samples as f64).sqrt();
            assert!(
                (freq - p).abs() <= 3.0 * sigma + 1e-9,
                "outcome {outcome}: freq {freq} vs exact {p}"
            );
        }
    }
}

/// Bell sampling agrees with the exact Bell projector probabilities.
#[test]
fn bell_sampling_matches_projectors() {
    let reg = named_state(NamedState::TripletAligned);
    let exact = reg.bell_probabilities('B', 'C').unwrap();
    let samples = 100_000usize;
    let mut rng = Prng::new(0xBEEF);
    let mut counts = [0usize; 4];
    for _ in 0..samples {
        let mut copy = reg.clone();
        let outcome = copy.measure_bell('B', 'C', &mut rng).unwrap();
        counts[outcome.index()] += 1;
    }
    for outcome in BellOutcome::ALL {
        let p = exact[outcome.index()];
        let freq = counts[outcome.index()] as f64 / samples as f64;
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * sigma + 1e-9);
    }
}
