//! Exact state-vector engine for small labeled-qubit registers.
//!
//! A [`Register`] holds the full complex amplitude vector of a handful of
//! qubits identified by single-character labels. The first label is the
//! leftmost (most significant) position of the basis ket, so a register over
//! `[A, B, C]` indexes `|abc>` with `a` in the top bit. Rounds of the
//! protocols never need more than four qubits, so everything here is plain
//! dense arithmetic with no cleverness.
//!
//! Two access paths are provided for every measurement: a sampling path
//! (`measure`, `measure_bell`) that draws an outcome from a [`Prng`] and
//! collapses the state, and an exact path (`distribution`, `project`,
//! `project_bell`) that returns outcome probabilities by projector
//! arithmetic with no randomness. The exact path is the oracle that the
//! sampled statistics are validated against.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::rng::Prng;

/// Complex amplitude; finite by construction.
pub type Amplitude = Complex64;

/// Tolerance for identities that should hold exactly up to rounding.
pub const EXACT_TOL: f64 = 1e-12;
/// Largest norm deviation `make`/[`Register::new`] will silently repair.
pub const CONSTRUCT_TOL: f64 = 1e-9;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("{amps} amplitudes do not fit {labels} labels (need 2^{labels})")]
    DimensionMismatch { labels: usize, amps: usize },
    #[error("state norm^2 {norm_sqr} deviates from 1 beyond tolerance or is degenerate")]
    NotNormalizable { norm_sqr: f64 },
    #[error("label '{0}' is not in the register")]
    UnknownLabel(char),
    #[error("label '{0}' appears more than once")]
    DuplicateLabel(char),
    #[error("control and target are both '{0}'")]
    SameQubit(char),
    #[error("registers carry different label sets")]
    LabelMismatch,
}

/// Single-qubit measurement basis.
///
/// Z eigenstates map to bits as `|0> -> 0`, `|1> -> 1`; X eigenstates as
/// `|+> -> 0`, `|-> -> 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum MeasurementBasis {
    Z,
    X,
}

impl MeasurementBasis {
    pub fn label(self) -> &'static str {
        match self {
            MeasurementBasis::Z => "Z",
            MeasurementBasis::X => "X",
        }
    }
}

/// Outcome of a two-qubit Bell-basis measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BellOutcome::PhiPlus => "phi+",
            BellOutcome::PhiMinus => "phi-",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PsiMinus => "psi-",
        }
    }

    pub fn index(self) -> usize {
        match self {
            BellOutcome::PhiPlus => 0,
            BellOutcome::PhiMinus => 1,
            BellOutcome::PsiPlus => 2,
            BellOutcome::PsiMinus => 3,
        }
    }
}

/// Pauli operator applied by the depolarizing channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Exact joint outcome probabilities for a measurement schedule.
///
/// Keys are bit strings with one character per measured qubit, in schedule
/// order. Every outcome of the schedule is present, including zero-probability
/// ones, so two distributions over the same schedule compare key-for-key.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    probs: BTreeMap<String, f64>,
}

impl OutcomeDistribution {
    /// Probability of an outcome string (0 for unknown keys).
    pub fn prob(&self, outcome: &str) -> f64 {
        self.probs.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Probability mass where `predicate` holds on the outcome bits.
    pub fn prob_where<F: Fn(&[bool]) -> bool>(&self, predicate: F) -> f64 {
        self.probs
            .iter()
            .filter(|(k, _)| predicate(&parse_bits(k)))
            .map(|(_, p)| p)
            .sum()
    }
}

fn parse_bits(s: &str) -> Vec<bool> {
    s.chars().map(|c| c == '1').collect()
}

/// Pure state of a set of labeled qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Register {
    labels: Vec<char>,
    amps: Vec<Complex64>,
}

impl Register {
    /// Build a register from explicit amplitudes, renormalizing when the
    /// norm is within [`CONSTRUCT_TOL`] of 1 and rejecting it otherwise.
    pub fn new(labels: &[char], amps: Vec<Complex64>) -> Result<Register, QuantumError> {
        if amps.len() != 1usize << labels.len() {
            return Err(QuantumError::DimensionMismatch {
                labels: labels.len(),
                amps: amps.len(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(QuantumError::DuplicateLabel(*l));
            }
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QuantumError::NotNormalizable { norm_sqr: f64::NAN });
        }
        let mut reg = Register {
            labels: labels.to_vec(),
            amps,
        };
        let norm_sqr = reg.norm_sqr();
        if norm_sqr == 0.0 || (norm_sqr.sqrt() - 1.0).abs() > CONSTRUCT_TOL {
            return Err(QuantumError::NotNormalizable { norm_sqr });
        }
        reg.renormalize();
        Ok(reg)
    }

    /// Computational basis state `|bits>`.
    pub fn basis_state(labels: &[char], bits: &[bool]) -> Result<Register, QuantumError> {
        assert_eq!(labels.len(), bits.len());
        let n = labels.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        let mut index = 0usize;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                index |= 1 << (n - 1 - i);
            }
        }
        amps[index] = Complex64::new(1.0, 0.0);
        Register::new(labels, amps)
    }

    /// Superposition of product kets written with the characters `0`, `1`,
    /// `+`, `-`, one per label. This lets named states be transcribed
    /// directly from their printed form.
    pub fn superposition(
        labels: &[char],
        terms: &[(Complex64, &str)],
    ) -> Result<Register, QuantumError> {
        let n = labels.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (coeff, kets) in terms {
            let kets: Vec<char> = kets.chars().collect();
            assert_eq!(kets.len(), n, "ket string must cover every label");
            for (index, amp) in amps.iter_mut().enumerate() {
                let mut factor = 1.0_f64;
                for (i, ket) in kets.iter().enumerate() {
                    let bit = (index >> (n - 1 - i)) & 1 == 1;
                    factor *= match (ket, bit) {
                        ('0', false) | ('1', true) => 1.0,
                        ('0', true) | ('1', false) => 0.0,
                        ('+', _) => SQRT_HALF,
                        ('-', false) => SQRT_HALF,
                        ('-', true) => -SQRT_HALF,
                        _ => panic!("unsupported ket character {ket}"),
                    };
                    if factor == 0.0 {
                        break;
                    }
                }
                *amp += coeff * factor;
            }
        }
        Register::new(labels, amps)
    }

    /// Weighted sum of registers over identical label lists.
    pub fn linear_combination(parts: &[(Complex64, &Register)]) -> Result<Register, QuantumError> {
        let (_, first) = parts.first().expect("at least one part");
        let mut amps = vec![Complex64::new(0.0, 0.0); first.amps.len()];
        for (coeff, reg) in parts {
            if reg.labels != first.labels {
                return Err(QuantumError::LabelMismatch);
            }
            for (a, b) in amps.iter_mut().zip(&reg.amps) {
                *a += coeff * b;
            }
        }
        Register::new(&first.labels, amps)
    }

    pub fn labels(&self) -> &[char] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn qubit_count(&self) -> usize {
        self.labels.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn renormalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        for a in &mut self.amps {
            *a /= norm;
        }
    }

    fn position(&self, q: char) -> Result<usize, QuantumError> {
        self.labels
            .iter()
            .position(|&l| l == q)
            .ok_or(QuantumError::UnknownLabel(q))
    }

    fn bit_mask(&self, pos: usize) -> usize {
        1 << (self.labels.len() - 1 - pos)
    }

    /// Tensor product; label sets must be disjoint.
    pub fn tensor(&self, other: &Register) -> Result<Register, QuantumError> {
        for l in &other.labels {
            if self.labels.contains(l) {
                return Err(QuantumError::DuplicateLabel(*l));
            }
        }
        let labels: Vec<char> = self.labels.iter().chain(&other.labels).copied().collect();
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Register::new(&labels, amps)
    }

    /// Append a fresh qubit prepared in `|bit>` at the least significant
    /// position.
    pub fn adjoin_qubit(&mut self, label: char, bit: bool) -> Result<(), QuantumError> {
        if self.labels.contains(&label) {
            return Err(QuantumError::DuplicateLabel(label));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len() * 2];
        for (i, a) in self.amps.iter().enumerate() {
            amps[2 * i + usize::from(bit)] = *a;
        }
        self.labels.push(label);
        self.amps = amps;
        Ok(())
    }

    fn apply_single(&mut self, pos: usize, m: [[Complex64; 2]; 2]) {
        let mask = self.bit_mask(pos);
        for k in 0..self.amps.len() {
            if k & mask == 0 {
                let a0 = self.amps[k];
                let a1 = self.amps[k | mask];
                self.amps[k] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[k | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Hadamard on one qubit.
    pub fn apply_hadamard(&mut self, q: char) -> Result<(), QuantumError> {
        let pos = self.position(q)?;
        let h = Complex64::new(SQRT_HALF, 0.0);
        self.apply_single(pos, [[h, h], [h, -h]]);
        Ok(())
    }

    /// Pauli operator on one qubit (used by the depolarizing channel).
    pub fn apply_pauli(&mut self, q: char, p: Pauli) -> Result<(), QuantumError> {
        let pos = self.position(q)?;
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let m = match p {
            Pauli::X => [[zero, one], [one, zero]],
            Pauli::Y => [[zero, -i], [i, zero]],
            Pauli::Z => [[one, zero], [zero, -one]],
        };
        self.apply_single(pos, m);
        Ok(())
    }

    /// Controlled-NOT with the control read in `control_basis`.
    ///
    /// With `Z` this is the standard CNOT. With `X` the control qubit is
    /// conjugated by Hadamards, so the target flips when the control is
    /// `|->`.
    pub fn apply_cnot(
        &mut self,
        control: char,
        target: char,
        control_basis: MeasurementBasis,
    ) -> Result<(), QuantumError> {
        if control == target {
            return Err(QuantumError::SameQubit(control));
        }
        let c = self.position(control)?;
        let t = self.position(target)?;
        if control_basis == MeasurementBasis::X {
            self.apply_hadamard(control)?;
        }
        let cm = self.bit_mask(c);
        let tm = self.bit_mask(t);
        for k in 0..self.amps.len() {
            if k & cm != 0 && k & tm == 0 {
                self.amps.swap(k, k | tm);
            }
        }
        if control_basis == MeasurementBasis::X {
            self.apply_hadamard(control)?;
        }
        Ok(())
    }

    fn prob_one_z(&self, pos: usize) -> f64 {
        let mask = self.bit_mask(pos);
        self.amps
            .iter()
            .enumerate()
            .filter(|(k, _)| k & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    fn collapse_z(&mut self, pos: usize, outcome: bool, prob: f64) {
        let mask = self.bit_mask(pos);
        let scale = Complex64::new(1.0 / prob.sqrt(), 0.0);
        for (k, a) in self.amps.iter_mut().enumerate() {
            if (k & mask != 0) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Projective measurement of one qubit. The outcome is sampled from the
    /// exact marginal; the register collapses with the measured qubit kept
    /// in its post-measurement eigenstate.
    pub fn measure(
        &mut self,
        q: char,
        basis: MeasurementBasis,
        rng: &mut Prng,
    ) -> Result<bool, QuantumError> {
        let pos = self.position(q)?;
        if basis == MeasurementBasis::X {
            self.apply_hadamard(q)?;
        }
        let p_one = self.prob_one_z(pos).clamp(0.0, 1.0);
        let outcome = rng.next_f64() < p_one;
        let prob = if outcome { p_one } else { 1.0 - p_one };
        self.collapse_z(pos, outcome, prob);
        if basis == MeasurementBasis::X {
            self.apply_hadamard(q)?;
        }
        Ok(outcome)
    }

    /// Exact probability of `outcome` plus the collapsed register, with no
    /// sampling. Returns `None` for the register when the branch has
    /// (numerically) zero probability.
    pub fn project(
        &self,
        q: char,
        basis: MeasurementBasis,
        outcome: bool,
    ) -> Result<(f64, Option<Register>), QuantumError> {
        let mut reg = self.clone();
        let pos = reg.position(q)?;
        if basis == MeasurementBasis::X {
            reg.apply_hadamard(q)?;
        }
        let p_one = reg.prob_one_z(pos);
        let prob = if outcome { p_one } else { 1.0 - p_one };
        if prob < 1e-15 {
            return Ok((prob.max(0.0), None));
        }
        reg.collapse_z(pos, outcome, prob);
        if basis == MeasurementBasis::X {
            reg.apply_hadamard(q)?;
        }
        Ok((prob, Some(reg)))
    }

    fn bell_pairs(&self, q1: char, q2: char) -> Result<(usize, usize), QuantumError> {
        if q1 == q2 {
            return Err(QuantumError::SameQubit(q1));
        }
        Ok((self.position(q1)?, self.position(q2)?))
    }

    /// Probabilities of the four Bell outcomes on `(q1, q2)`, in
    /// [`BellOutcome::ALL`] order.
    pub fn bell_probabilities(&self, q1: char, q2: char) -> Result<[f64; 4], QuantumError> {
        let (p1, p2) = self.bell_pairs(q1, q2)?;
        let m1 = self.bit_mask(p1);
        let m2 = self.bit_mask(p2);
        let mut probs = [0.0f64; 4];
        for k in 0..self.amps.len() {
            if k & m1 != 0 || k & m2 != 0 {
                continue;
            }
            let a00 = self.amps[k];
            let a01 = self.amps[k | m2];
            let a10 = self.amps[k | m1];
            let a11 = self.amps[k | m1 | m2];
            probs[0] += ((a00 + a11) * SQRT_HALF).norm_sqr();
            probs[1] += ((a00 - a11) * SQRT_HALF).norm_sqr();
            probs[2] += ((a01 + a10) * SQRT_HALF).norm_sqr();
            probs[3] += ((a01 - a10) * SQRT_HALF).norm_sqr();
        }
        Ok(probs)
    }

    fn collapse_bell(&mut self, q1: char, q2: char, outcome: BellOutcome, prob: f64) {
        let p1 = self.position(q1).expect("checked");
        let p2 = self.position(q2).expect("checked");
        let m1 = self.bit_mask(p1);
        let m2 = self.bit_mask(p2);
        let scale = 1.0 / prob.sqrt();
        for k in 0..self.amps.len() {
            if k & m1 != 0 || k & m2 != 0 {
                continue;
            }
            let a00 = self.amps[k];
            let a01 = self.amps[k | m2];
            let a10 = self.amps[k | m1];
            let a11 = self.amps[k | m1 | m2];
            let half = Complex64::new(0.5 * scale, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            // Overlap with the Bell vector, re-expanded onto that vector.
            let (b00, b01, b10, b11) = match outcome {
                BellOutcome::PhiPlus => ((a00 + a11) * half, zero, zero, (a00 + a11) * half),
                BellOutcome::PhiMinus => ((a00 - a11) * half, zero, zero, -(a00 - a11) * half),
                BellOutcome::PsiPlus => (zero, (a01 + a10) * half, (a01 + a10) * half, zero),
                BellOutcome::PsiMinus => (zero, (a01 - a10) * half, -(a01 - a10) * half, zero),
            };
            self.amps[k] = b00;
            self.amps[k | m2] = b01;
            self.amps[k | m1] = b10;
            self.amps[k | m1 | m2] = b11;
        }
    }

    /// Bell-basis measurement of two qubits; the pair collapses onto the
    /// measured Bell state.
    pub fn measure_bell(
        &mut self,
        q1: char,
        q2: char,
        rng: &mut Prng,
    ) -> Result<BellOutcome, QuantumError> {
        let probs = self.bell_probabilities(q1, q2)?;
        let u = rng.next_f64();
        let mut acc = 0.0;
        let mut chosen = BellOutcome::PsiMinus;
        for outcome in BellOutcome::ALL {
            acc += probs[outcome.index()];
            if u < acc {
                chosen = outcome;
                break;
            }
        }
        let prob = probs[chosen.index()];
        self.collapse_bell(q1, q2, chosen, prob);
        Ok(chosen)
    }

    /// Exact Bell projection: probability of `outcome` plus the collapsed
    /// register.
    pub fn project_bell(
        &self,
        q1: char,
        q2: char,
        outcome: BellOutcome,
    ) -> Result<(f64, Option<Register>), QuantumError> {
        let probs = self.bell_probabilities(q1, q2)?;
        let prob = probs[outcome.index()];
        if prob < 1e-15 {
            return Ok((prob.max(0.0), None));
        }
        let mut reg = self.clone();
        reg.collapse_bell(q1, q2, outcome, prob);
        Ok((prob, Some(reg)))
    }

    /// Exact joint outcome distribution for a schedule of single-qubit
    /// measurements. Purely projector arithmetic; unmeasured qubits are
    /// marginalized.
    pub fn distribution(
        &self,
        schedule: &[(char, MeasurementBasis)],
    ) -> Result<OutcomeDistribution, QuantumError> {
        let mut reg = self.clone();
        let mut positions = Vec::with_capacity(schedule.len());
        for (i, (q, _)) in schedule.iter().enumerate() {
            if schedule[..i].iter().any(|(other, _)| other == q) {
                return Err(QuantumError::DuplicateLabel(*q));
            }
            positions.push(reg.position(*q)?);
        }
        // Basis rotations run in register order, not schedule order, so a
        // permuted schedule reproduces bit-identical probabilities.
        let mut rotate: Vec<(usize, char)> = schedule
            .iter()
            .zip(&positions)
            .filter(|((_, basis), _)| *basis == MeasurementBasis::X)
            .map(|((q, _), &p)| (p, *q))
            .collect();
        rotate.sort_unstable();
        for (_, q) in rotate {
            reg.apply_hadamard(q)?;
        }
        let masks: Vec<usize> = positions.iter().map(|&p| reg.bit_mask(p)).collect();
        let mut probs = BTreeMap::new();
        for bits in 0..(1usize << schedule.len()) {
            let key: String = (0..schedule.len())
                .map(|i| {
                    if bits >> (schedule.len() - 1 - i) & 1 == 1 {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            probs.insert(key, 0.0);
        }
        for (k, a) in reg.amps.iter().enumerate() {
            let key: String = masks
                .iter()
                .map(|&m| if k & m != 0 { '1' } else { '0' })
                .collect();
            *probs.get_mut(&key).expect("all outcomes preseeded") += a.norm_sqr();
        }
        Ok(OutcomeDistribution { probs })
    }

    /// Inner product `<self|other>` with the other register's qubits aligned
    /// by label.
    pub fn overlap(&self, other: &Register) -> Result<Complex64, QuantumError> {
        if self.labels.len() != other.labels.len() {
            return Err(QuantumError::LabelMismatch);
        }
        let n = self.labels.len();
        let mut other_pos = Vec::with_capacity(n);
        for l in &self.labels {
            let p = other
                .labels
                .iter()
                .position(|o| o == l)
                .ok_or(QuantumError::LabelMismatch)?;
            other_pos.push(p);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in self.amps.iter().enumerate() {
            let mut j = 0usize;
            for (i, &p) in other_pos.iter().enumerate() {
                if k >> (n - 1 - i) & 1 == 1 {
                    j |= 1 << (n - 1 - p);
                }
            }
            acc += a.conj() * other.amps[j];
        }
        Ok(acc)
    }

    /// `1 - |<self|other>|`, clamped at zero.
    pub fn overlap_deficit(&self, other: &Register) -> Result<f64, QuantumError> {
        Ok((1.0 - self.overlap(other)?.norm()).max(0.0))
    }

    /// True when the states agree up to a global phase: `|<a|b>| >= 1 - tol`.
    pub fn equal_up_to_phase(&self, other: &Register, tol: f64) -> Result<bool, QuantumError> {
        Ok(self.overlap_deficit(other)? <= tol)
    }
}

/// Free-function form of [`Register::equal_up_to_phase`].
pub fn states_equal_up_to_phase(
    a: &Register,
    b: &Register,
    tol: f64,
) -> Result<bool, QuantumError> {
    a.equal_up_to_phase(b, tol)
}
