//! Constructors for every entangled state the protocols use, plus a
//! one-shot verifier for the algebraic identities the security arguments
//! lean on.
//!
//! Each constructor is a direct transcription of the state's printed ket
//! form, so the identity checks compare two independently transcribed
//! expressions rather than one expression against itself.

use num_complex::Complex64;

use crate::quantum::{MeasurementBasis, Register, EXACT_TOL};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Catalogue of named states.
///
/// Registers over parties carry labels `A`, `B`, `C` and the eavesdropper's
/// ancilla is `E`. The three-photon state of the Han et al. controlled-QKD
/// scheme uses particle labels `1`, `2`, `3` with the polarization mapping
/// `H -> |0>`, `V -> |1>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum NamedState {
    /// `(|00> + |11>)/sqrt(2)` over `A,B` -- the pair both block-transmission
    /// protocols distribute.
    PhiPlus,
    /// `(|00> - |11>)/sqrt(2)` over `A,B`.
    PhiMinus,
    /// The Hadamard-pair image of `PhiMinus`: `(|++> - |-->)/sqrt(2)`.
    PhiMinusHadamard,
    /// `PhiMinus` written in diagonal kets: `(|+-> + |-+>)/sqrt(2)`.
    PhiMinusDiagonal,
    /// `PhiMinus` with a `|0>` probe attached by an X-controlled CNOT from
    /// `B`: `(|+-1> + |-+0>)/sqrt(2)` over `A,B,E`.
    ProbedPhiMinus,
    /// Hadamards on `A`,`B` of `ProbedPhiMinus`: `(|011> + |100>)/sqrt(2)`.
    ProbedPhiMinusHadamard,
    /// Three-photon state of the Han et al. scheme over particles `1,2,3`:
    /// `(|000> + |011> + |101> - |110>)/2`.
    HanThreeParticle,
    /// Controller triplet with aligned correlations:
    /// `(|0+0> + |1-1>)/sqrt(2)` over `A,B,C`.
    TripletAligned,
    /// Controller triplet with the `B` correlation inverted:
    /// `(|0-0> + |1+1>)/sqrt(2)` over `A,B,C`.
    TripletInverted,
    /// `(|000> + |111>)/sqrt(2)` over `A,B,C`; test plumbing only.
    GhzPlus,
}

impl NamedState {
    pub const ALL: [NamedState; 10] = [
        NamedState::PhiPlus,
        NamedState::PhiMinus,
        NamedState::PhiMinusHadamard,
        NamedState::PhiMinusDiagonal,
        NamedState::ProbedPhiMinus,
        NamedState::ProbedPhiMinusHadamard,
        NamedState::HanThreeParticle,
        NamedState::TripletAligned,
        NamedState::TripletInverted,
        NamedState::GhzPlus,
    ];

    /// Canonical labels of the state's register.
    pub fn labels(self) -> &'static [char] {
        match self {
            NamedState::PhiPlus
            | NamedState::PhiMinus
            | NamedState::PhiMinusHadamard
            | NamedState::PhiMinusDiagonal => &['A', 'B'],
            NamedState::ProbedPhiMinus | NamedState::ProbedPhiMinusHadamard => &['A', 'B', 'E'],
            NamedState::HanThreeParticle => &['1', '2', '3'],
            NamedState::TripletAligned | NamedState::TripletInverted | NamedState::GhzPlus => {
                &['A', 'B', 'C']
            }
        }
    }

    /// Printed ket expansion: coefficients on product kets of `0,1,+,-`.
    fn terms(self) -> Vec<(Complex64, &'static str)> {
        match self {
            NamedState::PhiPlus => vec![(re(SQRT_HALF), "00"), (re(SQRT_HALF), "11")],
            NamedState::PhiMinus => vec![(re(SQRT_HALF), "00"), (re(-SQRT_HALF), "11")],
            NamedState::PhiMinusHadamard => vec![(re(SQRT_HALF), "++"), (re(-SQRT_HALF), "--")],
            NamedState::PhiMinusDiagonal => vec![(re(SQRT_HALF), "+-"), (re(SQRT_HALF), "-+")],
            NamedState::ProbedPhiMinus => vec![(re(SQRT_HALF), "+-1"), (re(SQRT_HALF), "-+0")],
            NamedState::ProbedPhiMinusHadamard => {
                vec![(re(SQRT_HALF), "011"), (re(SQRT_HALF), "100")]
            }
            NamedState::HanThreeParticle => vec![
                (re(0.5), "000"),
                (re(0.5), "011"),
                (re(0.5), "101"),
                (re(-0.5), "110"),
            ],
            NamedState::TripletAligned => vec![(re(SQRT_HALF), "0+0"), (re(SQRT_HALF), "1-1")],
            NamedState::TripletInverted => vec![(re(SQRT_HALF), "0-0"), (re(SQRT_HALF), "1+1")],
            NamedState::GhzPlus => vec![(re(SQRT_HALF), "000"), (re(SQRT_HALF), "111")],
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            NamedState::PhiPlus => "phi+",
            NamedState::PhiMinus => "phi-",
            NamedState::PhiMinusHadamard => "phi-hadamard",
            NamedState::PhiMinusDiagonal => "phi-diagonal",
            NamedState::ProbedPhiMinus => "probed-phi-",
            NamedState::ProbedPhiMinusHadamard => "probed-phi-hadamard",
            NamedState::HanThreeParticle => "han",
            NamedState::TripletAligned => "triplet-aligned",
            NamedState::TripletInverted => "triplet-inverted",
            NamedState::GhzPlus => "ghz+",
        }
    }
}

/// Exact register for a named state, with its canonical labels.
pub fn named_state(which: NamedState) -> Register {
    Register::superposition(which.labels(), &which.terms())
        .expect("catalogued states are normalized by construction")
}

/// One verified identity: two constructions of what should be the same
/// state, and how far apart they landed.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub overlap_deficit: f64,
    pub pass: bool,
}

/// Result of running the whole identity catalogue.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&IdentityCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

fn check(name: &str, lhs_desc: &str, rhs_desc: &str, deficit: f64) -> IdentityCheck {
    IdentityCheck {
        name: name.to_string(),
        lhs: lhs_desc.to_string(),
        rhs: rhs_desc.to_string(),
        overlap_deficit: deficit,
        pass: deficit <= EXACT_TOL,
    }
}

fn hadamard_pair(mut reg: Register, a: char, b: char) -> Register {
    reg.apply_hadamard(a).unwrap();
    reg.apply_hadamard(b).unwrap();
    reg
}

/// Check every catalogued state identity and report per-identity overlap
/// deficits. Failures land in the report rather than erroring, so a corrupt
/// build still produces a full listing.
pub fn verify_identities() -> IdentityReport {
    let mut checks = Vec::new();

    // phi+ is fixed by a Hadamard on each half and equals its diagonal form.
    {
        let direct = named_state(NamedState::PhiPlus);
        let transformed = hadamard_pair(direct.clone(), 'A', 'B');
        let diagonal =
            Register::superposition(&['A', 'B'], &[(re(SQRT_HALF), "++"), (re(SQRT_HALF), "--")])
                .unwrap();
        let deficit = transformed
            .overlap_deficit(&direct)
            .unwrap()
            .max(diagonal.overlap_deficit(&direct).unwrap());
        checks.push(check(
            "hadamard-fixes-phi-plus",
            "H_A H_B (|00>+|11>)/sqrt2",
            "(|00>+|11>)/sqrt2 and (|++>+|-->)/sqrt2",
            deficit,
        ));
    }

    // The Hadamard image of phi- equals its printed diagonal expansion.
    {
        let transformed = hadamard_pair(named_state(NamedState::PhiMinus), 'A', 'B');
        let printed = named_state(NamedState::PhiMinusHadamard);
        checks.push(check(
            "hadamard-image-of-phi-minus",
            "H_A H_B (|00>-|11>)/sqrt2",
            "(|++>-|-->)/sqrt2",
            transformed.overlap_deficit(&printed).unwrap(),
        ));
    }

    // phi- rewritten in diagonal kets.
    {
        let direct = named_state(NamedState::PhiMinus);
        let diagonal = named_state(NamedState::PhiMinusDiagonal);
        checks.push(check(
            "phi-minus-diagonal-form",
            "(|00>-|11>)/sqrt2",
            "(|+->+|-+>)/sqrt2",
            direct.overlap_deficit(&diagonal).unwrap(),
        ));
    }

    // Attaching a |0> probe to B with an X-controlled CNOT.
    {
        let mut reg = named_state(NamedState::PhiMinus);
        reg.adjoin_qubit('E', false).unwrap();
        reg.apply_cnot('B', 'E', MeasurementBasis::X).unwrap();
        let printed = named_state(NamedState::ProbedPhiMinus);
        checks.push(check(
            "cnot-probe-on-phi-minus",
            "X-controlled CNOT(B->E) on phi- (x) |0>_E",
            "(|+-1>+|-+0>)/sqrt2",
            reg.overlap_deficit(&printed).unwrap(),
        ));
    }

    // Hadamards on the probed state.
    {
        let transformed = hadamard_pair(named_state(NamedState::ProbedPhiMinus), 'A', 'B');
        let printed = named_state(NamedState::ProbedPhiMinusHadamard);
        checks.push(check(
            "hadamard-on-probe",
            "H_A H_B (|+-1>+|-+0>)/sqrt2",
            "(|011>+|100>)/sqrt2",
            transformed.overlap_deficit(&printed).unwrap(),
        ));
    }

    // The Han three-photon state factors over particle 1 and a Bell pair.
    {
        let direct = named_state(NamedState::HanThreeParticle);
        let zero_branch = Register::basis_state(&['1'], &[false])
            .unwrap()
            .tensor(
                &Register::superposition(
                    &['2', '3'],
                    &[(re(SQRT_HALF), "00"), (re(SQRT_HALF), "11")],
                )
                .unwrap(),
            )
            .unwrap();
        let one_branch = Register::basis_state(&['1'], &[true])
            .unwrap()
            .tensor(
                &Register::superposition(
                    &['2', '3'],
                    &[(re(SQRT_HALF), "01"), (re(-SQRT_HALF), "10")],
                )
                .unwrap(),
            )
            .unwrap();
        let factored = Register::linear_combination(&[
            (re(SQRT_HALF), &zero_branch),
            (re(SQRT_HALF), &one_branch),
        ])
        .unwrap();
        checks.push(check(
            "three-photon-factored-form",
            "(|000>+|011>+|101>-|110>)/2",
            "(|0>phi+ + |1>psi-)/sqrt2",
            direct.overlap_deficit(&factored).unwrap(),
        ));
    }

    // Conditioning the aligned triplet on A's diagonal outcome.
    {
        let direct = named_state(NamedState::TripletAligned);
        let conditioned = Register::superposition(
            &['A', 'B', 'C'],
            &[
                (re(0.5), "+0+"),
                (re(0.5), "+1-"),
                (re(0.5), "-0-"),
                (re(0.5), "-1+"),
            ],
        )
        .unwrap();
        checks.push(check(
            "triplet-aligned-conditional",
            "(|0+0>+|1-1>)/sqrt2",
            "(|+>(|0+>+|1->) + |->(|0->+|1+>))/2",
            direct.overlap_deficit(&conditioned).unwrap(),
        ));
    }

    // Conditioning the inverted triplet on A's diagonal outcome.
    {
        let direct = named_state(NamedState::TripletInverted);
        let conditioned = Register::superposition(
            &['A', 'B', 'C'],
            &[
                (re(0.5), "+0+"),
                (re(-0.5), "+1-"),
                (re(0.5), "-0-"),
                (re(-0.5), "-1+"),
            ],
        )
        .unwrap();
        checks.push(check(
            "triplet-inverted-conditional",
            "(|0-0>+|1+1>)/sqrt2",
            "(|+>(|0+>-|1->) + |->(|0->-|1+>))/2",
            direct.overlap_deficit(&conditioned).unwrap(),
        ));
    }

    // The four Bell-basis expansions of the two-qubit conditional states.
    {
        type DiagonalForm = [(f64, &'static str); 2];
        type ComputationalForm = [(f64, &'static str); 4];
        let lines: [(&str, DiagonalForm, ComputationalForm); 4] = [
            (
                "(|0+>+|1->)/sqrt2",
                [(SQRT_HALF, "0+"), (SQRT_HALF, "1-")],
                [(0.5, "00"), (-0.5, "11"), (0.5, "01"), (0.5, "10")],
            ),
            (
                "(|0->+|1+>)/sqrt2",
                [(SQRT_HALF, "0-"), (SQRT_HALF, "1+")],
                [(0.5, "00"), (0.5, "11"), (-0.5, "01"), (0.5, "10")],
            ),
            (
                "(|0+>-|1->)/sqrt2",
                [(SQRT_HALF, "0+"), (-SQRT_HALF, "1-")],
                [(0.5, "00"), (0.5, "11"), (0.5, "01"), (-0.5, "10")],
            ),
            (
                "(|0->-|1+>)/sqrt2",
                [(SQRT_HALF, "0-"), (-SQRT_HALF, "1+")],
                [(0.5, "00"), (-0.5, "11"), (-0.5, "01"), (-0.5, "10")],
            ),
        ];
        let mut worst = 0.0f64;
        for (_, lhs_terms, rhs_terms) in &lines {
            let lhs: Vec<(Complex64, &str)> = lhs_terms.iter().map(|&(c0, k)| (re(c0), k)).collect();
            let rhs: Vec<(Complex64, &str)> = rhs_terms.iter().map(|&(c0, k)| (re(c0), k)).collect();
            let lhs = Register::superposition(&['B', 'C'], &lhs).unwrap();
            let rhs = Register::superposition(&['B', 'C'], &rhs).unwrap();
            worst = worst.max(lhs.overlap_deficit(&rhs).unwrap());
        }
        checks.push(check(
            "bell-expansions",
            "diagonal-conditioned pair states",
            "their computational-basis expansions",
            worst,
        ));
    }

    // Triplet cross-structure: the two controller states are exactly
    // orthogonal (independently hand-expanded below in the tests), and both
    // give perfect A-C agreement under Z measurements.
    {
        let aligned = named_state(NamedState::TripletAligned);
        let inverted = named_state(NamedState::TripletInverted);
        let overlap = aligned.overlap(&inverted).unwrap().norm();
        let mut worst = overlap; // expected exactly 0
        for reg in [&aligned, &inverted] {
            let dist = reg
                .distribution(&[('A', MeasurementBasis::Z), ('C', MeasurementBasis::Z)])
                .unwrap();
            worst = worst.max(dist.prob("01") + dist.prob("10"));
        }
        checks.push(check(
            "triplet-correlations",
            "<aligned|inverted> and P(a != c)",
            "0 exactly for both",
            worst,
        ));
    }

    IdentityReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::BellOutcome;

    #[test]
    fn all_named_states_are_normalized() {
        for which in NamedState::ALL {
            let reg = named_state(which);
            assert!(
                (reg.norm_sqr() - 1.0).abs() <= EXACT_TOL,
                "{:?} norm {}",
                which,
                reg.norm_sqr()
            );
            assert_eq!(reg.labels(), which.labels());
        }
    }

    #[test]
    fn printed_coefficients_use_only_catalogue_values() {
        // Every printed coefficient is one of 0, +-1/2, +-1/sqrt(2), 1.
        let allowed = [0.0, 0.5, SQRT_HALF, 1.0];
        for which in NamedState::ALL {
            for (coeff, _) in which.terms() {
                assert_eq!(coeff.im, 0.0);
                assert!(
                    allowed.iter().any(|&v| (coeff.re.abs() - v).abs() < 1e-15),
                    "{:?} has unexpected coefficient {}",
                    which,
                    coeff.re
                );
            }
        }
    }

    #[test]
    fn triplet_aligned_matches_hand_expansion() {
        // (|0+0>+|1-1>)/sqrt2 = (|000>+|010>+|101>-|111>)/2
        let reg = named_state(NamedState::TripletAligned);
        let amps = reg.amplitudes();
        let expect = [0.5, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, -0.5];
        for (a, e) in amps.iter().zip(expect) {
            assert!((a.re - e).abs() < EXACT_TOL && a.im == 0.0);
        }
    }

    #[test]
    fn triplet_overlap_matches_hand_expansion() {
        // Hand expansion oracle: write both states over the 8-dim
        // computational basis and take the inner product directly.
        let aligned = [0.5, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, -0.5];
        let inverted = [0.5, 0.0, -0.5, 0.0, 0.0, 0.5, 0.0, 0.5];
        let hand: f64 = aligned.iter().zip(inverted).map(|(a, b)| a * b).sum();
        assert_eq!(hand, 0.0);

        let computed = named_state(NamedState::TripletAligned)
            .overlap(&named_state(NamedState::TripletInverted))
            .unwrap();
        assert!((computed.norm() - hand.abs()) < EXACT_TOL);
    }

    #[test]
    fn han_state_matches_hand_expansion() {
        let reg = named_state(NamedState::HanThreeParticle);
        let expect = [0.5, 0.0, 0.0, 0.5, 0.0, 0.5, -0.5, 0.0];
        for (a, e) in reg.amplitudes().iter().zip(expect) {
            assert!((a.re - e).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn han_bell_split_is_half_half() {
        let reg = named_state(NamedState::HanThreeParticle);
        let probs = reg.bell_probabilities('2', '3').unwrap();
        assert!((probs[BellOutcome::PhiPlus.index()] - 0.5).abs() < EXACT_TOL);
        assert!((probs[BellOutcome::PsiMinus.index()] - 0.5).abs() < EXACT_TOL);
        assert!(probs[BellOutcome::PhiMinus.index()].abs() < EXACT_TOL);
        assert!(probs[BellOutcome::PsiPlus.index()].abs() < EXACT_TOL);
    }

    #[test]
    fn identity_suite_passes_clean() {
        let report = verify_identities();
        assert_eq!(report.checks.len(), 10);
        for c in &report.checks {
            assert!(c.pass, "{} failed with deficit {}", c.name, c.overlap_deficit);
            assert!(c.overlap_deficit <= EXACT_TOL);
        }
    }

    #[test]
    fn perturbed_han_state_fails_its_identity() {
        // Flip the sign of the |110> term; the factored form must then fail.
        let perturbed = Register::superposition(
            &['1', '2', '3'],
            &[
                (re(0.5), "000"),
                (re(0.5), "011"),
                (re(0.5), "101"),
                (re(0.5), "110"),
            ],
        )
        .unwrap();
        let factored = named_state(NamedState::HanThreeParticle);
        assert!(!perturbed.equal_up_to_phase(&factored, EXACT_TOL).unwrap());
    }

    #[test]
    fn triplet_distributions_match_printed_correlations() {
        let aligned = named_state(NamedState::TripletAligned);
        let dist = aligned
            .distribution(&[
                ('A', MeasurementBasis::Z),
                ('B', MeasurementBasis::X),
                ('C', MeasurementBasis::Z),
            ])
            .unwrap();
        assert!((dist.prob("000") - 0.5).abs() < EXACT_TOL);
        assert!((dist.prob("111") - 0.5).abs() < EXACT_TOL);
    }
}
