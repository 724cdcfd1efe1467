//! Symbolic algebra of d-qubit Pauli strings.
//!
//! Every Pauli word is stored through its binary symplectic encoding: per qubit,
//! `I -> (0|0)`, `X -> (0|1)`, `Y -> (1|0)`, `Z -> (1|1)`, so a word maps to a
//! pair of d-bit vectors `(s0|s1)`. The label product `circ` is plain XOR of the
//! encodings, commutation is detected by the symplectic inner product `odot`,
//! and the signed product `circledast` carries the commutator sign.
//!
//! Phase bookkeeping is exact: `sigma^s sigma^r = i^k sigma^(s circ r)` with the
//! exponent `k` accumulated mod 4 over qubits (cyclic pairs XY, YZ, ZX contribute
//! `+1`, anti-cyclic pairs `-1`). Unit tests pin this against dense matrices with
//! zero tolerance.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Hard cap on the symbolic register width (bit-packed into u64 pairs).
pub const MAX_QUBITS: usize = 64;

/// Coefficients with magnitude below this are dropped after sum arithmetic.
pub const COEFF_EPS: f64 = 1e-14;

/// A d-qubit Pauli word together with its binary symplectic encoding.
///
/// Bit `j` of `sym0`/`sym1` holds the encoding of qubit `j`; the word symbol at
/// qubit `j` is recovered as `2*sym0_j + sym1_j` (0=I, 1=X, 2=Y, 3=Z).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliLabel {
    d: usize,
    sym0: u64,
    sym1: u64,
}

impl PauliLabel {
    pub fn identity(d: usize) -> Self {
        assert!(d >= 1 && d <= MAX_QUBITS, "qubit count {d} out of range");
        PauliLabel { d, sym0: 0, sym1: 0 }
    }

    /// Build from word symbols in {0,1,2,3}.
    pub fn from_word(word: &[u8]) -> Result<Self> {
        if word.is_empty() || word.len() > MAX_QUBITS {
            return Err(Error::structural(format!(
                "word length {} outside 1..={MAX_QUBITS}",
                word.len()
            )));
        }
        let mut sym0 = 0u64;
        let mut sym1 = 0u64;
        for (j, &w) in word.iter().enumerate() {
            if w > 3 {
                return Err(Error::parse(format!("symbol {w} at position {j} not in 0..=3")));
            }
            sym0 |= (((w >> 1) & 1) as u64) << j;
            sym1 |= ((w & 1) as u64) << j;
        }
        Ok(PauliLabel { d: word.len(), sym0, sym1 })
    }

    /// Parse an uppercase I/X/Y/Z string, e.g. `"XYX"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut word = Vec::with_capacity(text.len());
        for (pos, c) in text.chars().enumerate() {
            word.push(match c {
                'I' => 0,
                'X' => 1,
                'Y' => 2,
                'Z' => 3,
                other => {
                    return Err(Error::parse(format!(
                        "unknown Pauli character '{other}' at position {}",
                        pos + 1
                    )))
                }
            });
        }
        Self::from_word(&word)
    }

    pub fn num_qubits(&self) -> usize {
        self.d
    }

    pub fn is_identity(&self) -> bool {
        self.sym0 == 0 && self.sym1 == 0
    }

    /// Word symbol at qubit `j`.
    pub fn symbol(&self, j: usize) -> u8 {
        debug_assert!(j < self.d);
        ((((self.sym0 >> j) & 1) << 1) | ((self.sym1 >> j) & 1)) as u8
    }

    pub fn word(&self) -> Vec<u8> {
        (0..self.d).map(|j| self.symbol(j)).collect()
    }

    /// First half of the symplectic encoding as packed bits.
    pub fn sym0(&self) -> u64 {
        self.sym0
    }

    /// Second half of the symplectic encoding as packed bits.
    pub fn sym1(&self) -> u64 {
        self.sym1
    }

    /// Number of non-identity positions.
    pub fn weight(&self) -> usize {
        (self.sym0 | self.sym1).count_ones() as usize
    }

    fn assert_same_width(&self, other: &Self) {
        assert_eq!(
            self.d, other.d,
            "Pauli label width mismatch: {} vs {}",
            self.d, other.d
        );
    }

    /// Symplectic inner product mod 2: detects anticommutation.
    pub fn odot(&self, other: &Self) -> u8 {
        self.assert_same_width(other);
        let acc = (self.sym0 & other.sym1) ^ (self.sym1 & other.sym0);
        (acc.count_ones() & 1) as u8
    }

    /// True iff the two words commute as operators.
    pub fn commutes(&self, other: &Self) -> bool {
        self.odot(other) == 0
    }

    /// Klein four-group product of labels: XOR of the symplectic encodings.
    pub fn circ(&self, other: &Self) -> Self {
        self.assert_same_width(other);
        PauliLabel {
            d: self.d,
            sym0: self.sym0 ^ other.sym0,
            sym1: self.sym1 ^ other.sym1,
        }
    }

    /// Exponent `k` (mod 4) in `sigma^s sigma^r = i^k sigma^(s circ r)`.
    pub fn product_phase_exp(&self, other: &Self) -> u8 {
        self.assert_same_width(other);
        let nz = (self.sym0 | self.sym1) & (other.sym0 | other.sym1);
        let differ = (self.sym0 ^ other.sym0) | (self.sym1 ^ other.sym1);
        let mut anti = nz & differ;
        let mut k = 0u8;
        while anti != 0 {
            let j = anti.trailing_zeros() as usize;
            anti &= anti - 1;
            let a = self.symbol(j);
            let b = other.symbol(j);
            // XY, YZ, ZX pick up +i; the reversed pairs -i.
            k = (k + if (b + 3 - a) % 3 == 1 { 1 } else { 3 }) & 3;
        }
        k
    }

    /// Signed product in {-1, 0, +1}: zero iff the words commute, otherwise the
    /// sign in `[sigma^s, sigma^r] = 2i (s circledast r) sigma^(s circ r)`.
    pub fn circledast(&self, other: &Self) -> i8 {
        match self.product_phase_exp(other) {
            1 => 1,
            3 => -1,
            _ => 0,
        }
    }

    /// Full operator product with exact phase.
    pub fn product(&self, other: &Self) -> PhasedPauli {
        PhasedPauli {
            phase_exp: self.product_phase_exp(other),
            label: self.circ(other),
        }
    }

    /// Commutator `[sigma^s, sigma^r] = 2i * c * sigma^t`, returned as `(2c, t)`;
    /// `None` when the words commute.
    pub fn commutator(&self, other: &Self) -> Option<(f64, PauliLabel)> {
        match self.circledast(other) {
            0 => None,
            w => Some((2.0 * f64::from(w), self.circ(other))),
        }
    }
}

impl Ord for PauliLabel {
    /// Lexicographic order on the symplectic bit string `s0_1..s0_d s1_1..s1_d`.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        debug_assert_eq!(self.d, other.d);
        for j in 0..self.d {
            let a = (self.sym0 >> j) & 1;
            let b = (other.sym0 >> j) & 1;
            if a != b {
                return a.cmp(&b);
            }
        }
        for j in 0..self.d {
            let a = (self.sym1 >> j) & 1;
            let b = (other.sym1 >> j) & 1;
            if a != b {
                return a.cmp(&b);
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl PartialOrd for PauliLabel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.d {
            f.write_str(match self.symbol(j) {
                0 => "I",
                1 => "X",
                2 => "Y",
                3 => "Z",
                _ => unreachable!(),
            })?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for PauliLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// `i^phase_exp * sigma^label` with the exponent kept mod 4.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PhasedPauli {
    pub phase_exp: u8,
    pub label: PauliLabel,
}

impl PhasedPauli {
    pub fn new(phase_exp: u8, label: PauliLabel) -> Self {
        PhasedPauli { phase_exp: phase_exp & 3, label }
    }

    pub fn plus(label: PauliLabel) -> Self {
        PhasedPauli { phase_exp: 0, label }
    }

    /// Operator product, phases folded mod 4.
    pub fn times(&self, other: &Self) -> Self {
        let k = self.label.product_phase_exp(&other.label);
        PhasedPauli {
            phase_exp: (self.phase_exp + other.phase_exp + k) & 3,
            label: self.label.circ(&other.label),
        }
    }

    /// Sign of a Hermitian phased word; errors when the phase is imaginary.
    pub fn real_sign(&self) -> Result<f64> {
        match self.phase_exp {
            0 => Ok(1.0),
            2 => Ok(-1.0),
            _ => Err(Error::numerical(format!(
                "phased Pauli i^{} {} is not Hermitian",
                self.phase_exp, self.label
            ))),
        }
    }
}

/// Real linear combination of Pauli words; the representation for Hamiltonians,
/// observables in symbolic form, and Lie-algebra elements.
///
/// Terms are kept in the canonical label order so iteration is deterministic.
#[derive(Clone, PartialEq, Debug)]
pub struct PauliSum {
    d: usize,
    terms: BTreeMap<PauliLabel, f64>,
}

impl PauliSum {
    pub fn new(d: usize) -> Self {
        assert!(d >= 1 && d <= MAX_QUBITS);
        PauliSum { d, terms: BTreeMap::new() }
    }

    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (PauliLabel, f64)>) -> Result<Self> {
        let mut sum = PauliSum::new(d);
        for (label, coeff) in terms {
            if label.num_qubits() != d {
                return Err(Error::structural(format!(
                    "label {label} has width {} but the sum is on {d} qubits",
                    label.num_qubits()
                )));
            }
            sum.add_term(label, coeff);
        }
        Ok(sum)
    }

    pub fn single(label: PauliLabel, coeff: f64) -> Self {
        let mut sum = PauliSum::new(label.num_qubits());
        sum.add_term(label, coeff);
        sum
    }

    pub fn num_qubits(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, label: &PauliLabel) -> f64 {
        self.terms.get(label).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliLabel, &f64)> {
        self.terms.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = &PauliLabel> {
        self.terms.keys()
    }

    /// Accumulate a term, dropping it if the running coefficient underflows.
    pub fn add_term(&mut self, label: PauliLabel, coeff: f64) {
        assert_eq!(label.num_qubits(), self.d, "label width mismatch");
        let entry = self.terms.entry(label).or_insert(0.0);
        *entry += coeff;
        if entry.abs() < COEFF_EPS {
            self.terms.remove(&label);
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = PauliSum::new(self.d);
        for (label, coeff) in &self.terms {
            out.add_term(*label, coeff * factor);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        let mut out = self.clone();
        for (label, coeff) in &other.terms {
            out.add_term(*label, *coeff);
        }
        out
    }

    /// Sum of |coefficients|.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Coefficient-space inner product `sum_s a_s b_s` (= `tr(A B)/2^d`).
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.d, other.d);
        // iterate over the shorter sum
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small
            .terms
            .iter()
            .map(|(label, coeff)| coeff * big.coeff(label))
            .sum()
    }

    /// Coefficient-space norm.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Commutator action with the phase factored out: returns the real sum `C`
/// with `ad_A(B) = [A, B] = i * C`, i.e. `C = 2 sum a_s b_r (s circledast r)
/// sigma^(s circ r)`. Keeping the `1/i` inside means real-coefficient sums stay
/// real under repeated application.
pub fn apply_ad(a: &PauliSum, b: &PauliSum) -> PauliSum {
    assert_eq!(a.num_qubits(), b.num_qubits(), "qubit count mismatch");
    let mut out = PauliSum::new(a.num_qubits());
    for (s, &a_s) in a.terms() {
        for (r, &b_r) in b.terms() {
            let w = s.circledast(r);
            if w != 0 {
                out.add_term(s.circ(r), 2.0 * a_s * b_r * f64::from(w));
            }
        }
    }
    out
}
