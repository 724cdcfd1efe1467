//! Clifford group elements as sign-tracked symplectic tableaux, with exactly
//! uniform sampling and dense synthesis for simulation.
//!
//! A Clifford modulo global phase is the pair (symplectic image of the X/Z
//! generators, one sign bit per image). Sampling draws a uniformly random
//! symplectic basis by symplectic Gram-Schmidt — each stage picks a uniform
//! nonzero vector of the running complement and a uniform partner with unit
//! pairing — then attaches uniform sign bits. Stage counts multiply out to the
//! group order 2^(d^2+2d) prod_j (4^j - 1), so the draw is exact, not
//! approximate.

use crate::error::{Error, Result};
use crate::group::{gf2_independent, pack, unpack};
use crate::pauli::{PauliLabel, PhasedPauli};
use crate::sim::{apply_phased_pauli, DenseOperator, DEFAULT_MAX_DENSE_QUBITS};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

/// Symplectic pairing on packed encodings (low half paired against high half).
fn sympl(v: u128, w: u128) -> u8 {
    let v0 = v as u64;
    let v1 = (v >> 64) as u64;
    let w0 = w as u64;
    let w1 = (w >> 64) as u64;
    (((v0 & w1) ^ (v1 & w0)).count_ones() & 1) as u8
}

fn x_encoding(d: usize, j: usize) -> u128 {
    let label_bits = 1u128 << (64 + j); // symbol X = (0|1)
    debug_assert!(j < d);
    label_bits
}

fn z_encoding(_d: usize, j: usize) -> u128 {
    (1u128 << j) | (1u128 << (64 + j)) // symbol Z = (1|1)
}

/// A Clifford element modulo global phase: conjugation images of every X_j and
/// Z_j generator, each a Hermitian signed Pauli word.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordElement {
    d: usize,
    x_images: Vec<PhasedPauli>,
    z_images: Vec<PhasedPauli>,
}

impl CliffordElement {
    pub fn identity(d: usize) -> Self {
        let x_images = (0..d)
            .map(|j| PhasedPauli::plus(unpack(x_encoding(d, j), d)))
            .collect();
        let z_images = (0..d)
            .map(|j| PhasedPauli::plus(unpack(z_encoding(d, j), d)))
            .collect();
        CliffordElement { d, x_images, z_images }
    }

    pub fn from_images(x_images: Vec<PhasedPauli>, z_images: Vec<PhasedPauli>) -> Result<Self> {
        let d = x_images.len();
        if z_images.len() != d || d == 0 {
            return Err(Error::structural("tableau must have d X-images and d Z-images"));
        }
        let elem = CliffordElement { d, x_images, z_images };
        elem.check_valid()?;
        Ok(elem)
    }

    pub fn num_qubits(&self) -> usize {
        self.d
    }

    pub fn x_image(&self, j: usize) -> &PhasedPauli {
        &self.x_images[j]
    }

    pub fn z_image(&self, j: usize) -> &PhasedPauli {
        &self.z_images[j]
    }

    /// Verify Hermitian signs and the symplectic relations of the images.
    pub fn check_valid(&self) -> Result<()> {
        for img in self.x_images.iter().chain(self.z_images.iter()) {
            if img.phase_exp % 2 != 0 {
                return Err(Error::structural("tableau image carries an imaginary phase"));
            }
            if img.label.num_qubits() != self.d {
                return Err(Error::structural("tableau image width mismatch"));
            }
        }
        for i in 0..self.d {
            for j in 0..self.d {
                let xx = self.x_images[i].label.odot(&self.x_images[j].label);
                let zz = self.z_images[i].label.odot(&self.z_images[j].label);
                let xz = self.x_images[i].label.odot(&self.z_images[j].label);
                let want = u8::from(i == j);
                if xx != 0 || zz != 0 || xz != want {
                    return Err(Error::structural(
                        "tableau does not preserve the symplectic form",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Conjugation action on a phased Pauli word: decompose into X/Z generator
    /// factors and multiply their images in the same order.
    pub fn conjugate(&self, p: &PhasedPauli) -> PhasedPauli {
        assert_eq!(p.label.num_qubits(), self.d, "label width mismatch");
        // sigma^s = i^{#Y} prod_j X_j^{x_j} Z_j^{z_j}
        let mut y_count = 0u8;
        let mut acc = PhasedPauli::new(p.phase_exp, PauliLabel::identity(self.d));
        for j in 0..self.d {
            match p.label.symbol(j) {
                0 => {}
                1 => acc = acc.times(&self.x_images[j]),
                2 => {
                    y_count = (y_count + 1) & 3;
                    acc = acc.times(&self.x_images[j]);
                    acc = acc.times(&self.z_images[j]);
                }
                3 => acc = acc.times(&self.z_images[j]),
                _ => unreachable!(),
            }
        }
        let out = PhasedPauli::new((acc.phase_exp + y_count) & 3, acc.label);
        debug_assert!(out.phase_exp % 2 == 0 || p.phase_exp % 2 == 1);
        out
    }

    /// Canonical key for counting phase classes in uniformity tests.
    pub fn canonical_key(&self) -> Vec<u8> {
        let mut key = Vec::with_capacity(self.d * 34);
        for img in self.x_images.iter().chain(self.z_images.iter()) {
            let bits = pack(&img.label);
            key.extend_from_slice(&(bits as u64).to_le_bytes());
            key.extend_from_slice(&((bits >> 64) as u64).to_le_bytes());
            key.push(img.phase_exp);
        }
        key
    }
}

fn span_element<R: Rng + ?Sized>(rng: &mut R, basis: &[u128]) -> u128 {
    let mut acc = 0u128;
    for &b in basis {
        if rng.gen::<bool>() {
            acc ^= b;
        }
    }
    acc
}

/// Uniform draw from the Clifford group modulo global phase.
pub fn sample_clifford(d: usize, rng: &mut impl Rng) -> CliffordElement {
    assert!(
        d >= 1 && d <= crate::pauli::MAX_QUBITS,
        "qubit count {d} out of range for tableau sampling"
    );
    // complement basis starts as the full standard symplectic basis
    let mut complement: Vec<u128> = (0..d)
        .flat_map(|j| [x_encoding(d, j), z_encoding(d, j)])
        .collect();
    let mut x_images = Vec::with_capacity(d);
    let mut z_images = Vec::with_capacity(d);
    for _ in 0..d {
        let v = loop {
            let cand = span_element(rng, &complement);
            if cand != 0 {
                break cand;
            }
        };
        let u = loop {
            let cand = span_element(rng, &complement);
            if sympl(v, cand) == 1 {
                break cand;
            }
        };
        let sign_v: u8 = if rng.gen::<bool>() { 2 } else { 0 };
        let sign_u: u8 = if rng.gen::<bool>() { 2 } else { 0 };
        x_images.push(PhasedPauli::new(sign_v, unpack(v, d)));
        z_images.push(PhasedPauli::new(sign_u, unpack(u, d)));
        // symplectic Gram-Schmidt: project the remaining basis off (v, u)
        let corrected: Vec<u128> = complement
            .iter()
            .map(|&b| {
                let mut x = b;
                if sympl(b, u) == 1 {
                    x ^= v;
                }
                if sympl(b, v) == 1 {
                    x ^= u;
                }
                x
            })
            .collect();
        complement = gf2_independent(corrected);
    }
    CliffordElement { d, x_images, z_images }
}

/// All 24 single-qubit Clifford phase classes, in deterministic order.
pub fn enumerate_single_qubit() -> Vec<CliffordElement> {
    let d = 1usize;
    let nonzero: Vec<u128> = vec![
        x_encoding(d, 0),
        z_encoding(d, 0) ^ x_encoding(d, 0), // Y = (1|0)
        z_encoding(d, 0),
    ];
    let mut out = Vec::with_capacity(24);
    for &v in &nonzero {
        for &u in &nonzero {
            if sympl(v, u) != 1 {
                continue;
            }
            for signs in 0..4u8 {
                let x_img = PhasedPauli::new(if signs & 1 == 1 { 2 } else { 0 }, unpack(v, d));
                let z_img = PhasedPauli::new(if signs & 2 == 2 { 2 } else { 0 }, unpack(u, d));
                out.push(CliffordElement {
                    d,
                    x_images: vec![x_img],
                    z_images: vec![z_img],
                });
            }
        }
    }
    out
}

/// Synthesize the dense unitary realizing a tableau (up to global phase, which
/// is fixed deterministically). The state `U|0..0>` is the joint +1 eigenvector
/// of the signed Z-images; the remaining columns follow by applying X-images.
pub fn clifford_matrix(c: &CliffordElement) -> Result<DenseOperator> {
    let d = c.num_qubits();
    if d > DEFAULT_MAX_DENSE_QUBITS {
        return Err(Error::structural(format!(
            "dense synthesis of {d} qubits exceeds the {DEFAULT_MAX_DENSE_QUBITS}-qubit limit"
        )));
    }
    let n = 1usize << d;
    // stabilizer projector applied to the best-aligned basis vector
    let mut psi0: Option<DVector<Complex64>> = None;
    for k in 0..n {
        let mut v = DVector::<Complex64>::zeros(n);
        v[k] = Complex64::new(1.0, 0.0);
        for j in 0..d {
            let img = c.z_image(j);
            let pv = apply_phased_pauli(img, &v);
            v = (v + pv) * Complex64::new(0.5, 0.0);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            // fix the global phase: first sizeable component made real positive
            let pivot = v.iter().find(|z| z.norm() > 1e-9).copied().unwrap();
            let phase = pivot / pivot.norm();
            psi0 = Some(v.map(|z| z / phase) / Complex64::new(norm, 0.0));
            break;
        }
    }
    let psi0 = psi0.ok_or_else(|| {
        Error::numerical("stabilizer projector annihilated every basis vector")
    })?;

    let mut mat = DMatrix::<Complex64>::zeros(n, n);
    for b in 0..n {
        // W_b = product of X-images over the set bits of b (qubit 0 is the
        // most significant index bit)
        let mut w = PhasedPauli::plus(PauliLabel::identity(d));
        for j in 0..d {
            if (b >> (d - 1 - j)) & 1 == 1 {
                w = w.times(c.x_image(j));
            }
        }
        let col = apply_phased_pauli(&w, &psi0);
        mat.set_column(b, &col);
    }
    let op = DenseOperator::from_matrix(mat)?;
    if !op.is_unitary(1e-12) {
        return Err(Error::numerical("synthesized tableau matrix is not unitary"));
    }
    Ok(op)
}
