//! Dense 2^d-dimensional simulator: exact states, evolutions, losses,
//! Hadamard-test values, the derivative observables, Born-rule sampling, and
//! the finite-difference gradient oracle.
//!
//! Everything here is meant for desk-scale verification (d <= 8 by default),
//! so clarity wins over asymptotics. Hermitian eigendecompositions go through
//! the real 2n x 2n embedding `[[Re, -Im], [Im, Re]]`, which only needs the
//! real symmetric solver.

use crate::error::{Error, Result};
use crate::pauli::{PauliLabel, PauliSum, PhasedPauli};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

/// Dense materialization is refused above this register size unless the caller
/// raises the limit explicitly.
pub const DEFAULT_MAX_DENSE_QUBITS: usize = 8;

const HERM_TOL: f64 = 1e-9;
const DENSITY_TOL: f64 = 1e-10;

/// A 2^d x 2^d complex matrix indexed by computational basis states.
#[derive(Clone, PartialEq, Debug)]
pub struct DenseOperator {
    mat: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn from_matrix(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::structural(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if !mat.nrows().is_power_of_two() {
            return Err(Error::structural(format!(
                "operator dimension {} is not a power of two",
                mat.nrows()
            )));
        }
        Ok(DenseOperator { mat })
    }

    pub fn zeros(d: usize) -> Self {
        DenseOperator { mat: DMatrix::zeros(1 << d, 1 << d) }
    }

    pub fn identity(d: usize) -> Self {
        DenseOperator { mat: DMatrix::identity(1 << d, 1 << d) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.mat.nrows().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn frobenius(&self) -> f64 {
        self.mat.norm()
    }

    pub fn adjoint_residual(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.adjoint_residual() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let n = self.dim();
        (&self.mat * self.mat.adjoint() - DMatrix::<Complex64>::identity(n, n)).norm() <= tol
    }

    /// tr(self * other), computed without forming the product.
    pub fn trace_product(&self, other: &DenseOperator) -> Complex64 {
        let n = self.dim();
        assert_eq!(n, other.dim(), "operator dimension mismatch");
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                acc += self.mat[(j, k)] * other.mat[(k, j)];
            }
        }
        acc
    }
}

fn check_hermitian(op: &DenseOperator, what: &str) -> Result<()> {
    if !op.is_hermitian(HERM_TOL * (1.0 + op.frobenius())) {
        return Err(Error::numerical(format!(
            "{what} is not Hermitian (residual {:.3e})",
            op.adjoint_residual()
        )));
    }
    Ok(())
}

fn check_density(rho: &DenseOperator) -> Result<()> {
    check_hermitian(rho, "state")?;
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
        return Err(Error::numerical(format!("state trace {tr} is not 1")));
    }
    let eig = herm_eigen(rho)?;
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -DENSITY_TOL {
        return Err(Error::numerical(format!(
            "state has negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian operator, computed by cyclic complex
/// Jacobi rotations. Jacobi is slower than tridiagonalization but converges
/// unconditionally and keeps the eigenvector matrix unitary by construction,
/// which matters here: heavily degenerate spectra (anticommuting Pauli sums
/// have exactly two eigenvalues) are the common case, not the corner case.
pub struct HermEigen {
    pub eigenvalues: Vec<f64>,
    vecs: DMatrix<Complex64>,
}

impl HermEigen {
    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.vecs
    }

    /// Evaluate `f` on the operator: `f(H) = V f(Lambda) V^dag`.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> DMatrix<Complex64> {
        let n = self.eigenvalues.len();
        let mut scaled = self.vecs.clone();
        for (w, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.eigenvalues[w]);
        }
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        scaled.mul_to(&self.vecs.adjoint(), &mut out);
        out
    }

    /// Columns grouped into (representative eigenvalue, column list) clusters,
    /// split where consecutive sorted eigenvalues gap by more than `tol`.
    pub fn grouped(&self, tol: f64) -> Vec<(f64, Vec<usize>)> {
        let mut order: Vec<usize> = (0..self.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| self.eigenvalues[a].total_cmp(&self.eigenvalues[b]));
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for w in order {
            let lam = self.eigenvalues[w];
            match groups.last_mut() {
                Some((rep, members)) if (lam - *rep).abs() <= tol => {
                    members.push(w);
                }
                _ => groups.push((lam, vec![w])),
            }
        }
        groups
    }

    /// sum over the group of Re < v_w | rho | v_w >.
    pub fn group_probability(&self, members: &[usize], rho: &DenseOperator) -> f64 {
        let mut acc = 0.0;
        for &w in members {
            let v = self.vecs.column(w);
            let rv = rho.matrix() * v;
            acc += v.dotc(&rv).re;
        }
        acc
    }
}

/// Hermitian eigendecomposition; errors when the input is not Hermitian or
/// the rotation sweep fails to reduce the off-diagonal mass to rounding level.
pub fn herm_eigen(op: &DenseOperator) -> Result<HermEigen> {
    check_hermitian(op, "operator")?;
    let n = op.dim();
    let mut h = op.matrix().clone();
    let mut vecs = DMatrix::<Complex64>::identity(n, n);
    let scale = op.frobenius().max(1.0);
    let target = 1e-15 * scale;
    let mut converged = false;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += h[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let z = h[(p, q)];
                let abs = z.norm();
                if abs <= 1e-300 {
                    continue;
                }
                // phase out the off-diagonal entry, then a real rotation;
                // the small-angle root keeps |theta| <= pi/4, which is the
                // classical cyclic-convergence condition
                let phase = z / abs;
                let app = h[(p, p)].re;
                let aqq = h[(q, q)].re;
                let tau = (app - aqq) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;
                // U restricted to (p, q): [[c, -s*phase], [s*conj(phase)... ]]
                // chosen as U = D G with D = diag(1, conj(phase)), G the real
                // Givens rotation [[c, -s], [s, c]]
                let u00 = Complex64::new(cos, 0.0);
                let u01 = Complex64::new(-sin, 0.0);
                let u10 = phase.conj() * sin;
                let u11 = phase.conj() * cos;
                // H <- U^dag H U: columns then rows
                for k in 0..n {
                    let hp = h[(k, p)];
                    let hq = h[(k, q)];
                    h[(k, p)] = hp * u00 + hq * u10;
                    h[(k, q)] = hp * u01 + hq * u11;
                }
                for k in 0..n {
                    let hp = h[(p, k)];
                    let hq = h[(q, k)];
                    h[(p, k)] = u00.conj() * hp + u10.conj() * hq;
                    h[(q, k)] = u01.conj() * hp + u11.conj() * hq;
                }
                // exact Hermitian restoration of the zeroed pair
                h[(p, q)] = Complex64::new(0.0, 0.0);
                h[(q, p)] = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let vp = vecs[(k, p)];
                    let vq = vecs[(k, q)];
                    vecs[(k, p)] = vp * u00 + vq * u10;
                    vecs[(k, q)] = vp * u01 + vq * u11;
                }
            }
        }
    }
    if !converged {
        return Err(Error::numerical(
            "eigendecomposition failed to converge",
        ));
    }
    let eigenvalues: Vec<f64> = (0..n).map(|j| h[(j, j)].re).collect();
    Ok(HermEigen { eigenvalues, vecs })
}

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Basis-index bit of `qubit` under the tensor-order convention: qubit 0 is
/// the leftmost factor, hence the most significant bit of the index.
pub(crate) fn basis_bit(index: usize, qubit: usize, d: usize) -> u8 {
    ((index >> (d - 1 - qubit)) & 1) as u8
}

fn single_qubit(sym: u8) -> DMatrix<Complex64> {
    let entries: [Complex64; 4] = match sym {
        0 => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        1 => [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        2 => [c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        3 => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        _ => unreachable!(),
    };
    DMatrix::from_row_slice(2, 2, &entries)
}

fn check_dense_limit(d: usize, max_qubits: usize) -> Result<()> {
    if d > max_qubits {
        return Err(Error::structural(format!(
            "dense materialization of {d} qubits exceeds the {max_qubits}-qubit limit"
        )));
    }
    Ok(())
}

/// Dense matrix of a Pauli word (default size guard).
pub fn pauli_matrix(label: &PauliLabel) -> Result<DenseOperator> {
    pauli_matrix_with_limit(label, DEFAULT_MAX_DENSE_QUBITS)
}

pub fn pauli_matrix_with_limit(label: &PauliLabel, max_qubits: usize) -> Result<DenseOperator> {
    check_dense_limit(label.num_qubits(), max_qubits)?;
    let mut mat = single_qubit(label.symbol(0));
    for j in 1..label.num_qubits() {
        mat = mat.kronecker(&single_qubit(label.symbol(j)));
    }
    DenseOperator::from_matrix(mat)
}

/// Permutation-plus-phase action of a phased Pauli word on a state vector.
///
/// Pauli words have one nonzero per row, so this is O(2^d) instead of a matmul.
pub fn apply_phased_pauli(p: &PhasedPauli, v: &DVector<Complex64>) -> DVector<Complex64> {
    let d = p.label.num_qubits();
    let n = 1usize << d;
    assert_eq!(v.len(), n, "vector length mismatch");
    let global = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)][p.phase_exp as usize];
    let mut xmask = 0usize;
    for j in 0..d {
        if matches!(p.label.symbol(j), 1 | 2) {
            xmask |= 1 << (d - 1 - j);
        }
    }
    let mut out = DVector::<Complex64>::zeros(n);
    for b in 0..n {
        let mut phase = global;
        for j in 0..d {
            let bit = basis_bit(b, j, d);
            match p.label.symbol(j) {
                2 => phase *= if bit == 0 { c(0.0, 1.0) } else { c(0.0, -1.0) },
                3 => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
                _ => {}
            }
        }
        out[b ^ xmask] = phase * v[b];
    }
    out
}

/// Materialize a real Pauli sum as a dense Hermitian operator.
pub fn materialize(sum: &PauliSum) -> Result<DenseOperator> {
    materialize_with_limit(sum, DEFAULT_MAX_DENSE_QUBITS)
}

pub fn materialize_with_limit(sum: &PauliSum, max_qubits: usize) -> Result<DenseOperator> {
    check_dense_limit(sum.num_qubits(), max_qubits)?;
    let n = 1usize << sum.num_qubits();
    let mut mat = DMatrix::<Complex64>::zeros(n, n);
    for (label, &coeff) in sum.terms() {
        mat += pauli_matrix_with_limit(label, max_qubits)?.matrix() * c(coeff, 0.0);
    }
    DenseOperator::from_matrix(mat)
}

/// Conjugate a state by `exp(i A)` where `A` is given as a real Pauli sum.
pub fn evolve(a: &PauliSum, rho: &DenseOperator) -> Result<DenseOperator> {
    check_density(rho)?;
    if a.num_qubits() != rho.num_qubits() {
        return Err(Error::structural("Hamiltonian/state qubit count mismatch"));
    }
    let a_dense = materialize(a)?;
    let eig = herm_eigen(&a_dense)?;
    let u = eig.apply(|lam| Complex64::from_polar(1.0, lam));
    let rho_out = &u * rho.matrix() * u.adjoint();
    DenseOperator::from_matrix(rho_out)
}

/// Loss value tr(O rho_out); errors if `O` is not Hermitian or the trace picks
/// up an imaginary part beyond rounding.
pub fn loss(o: &DenseOperator, rho_out: &DenseOperator) -> Result<f64> {
    check_hermitian(o, "observable")?;
    let t = o.trace_product(rho_out);
    let scale = 1.0 + o.frobenius() * rho_out.frobenius();
    if t.im.abs() > 1e-12 * scale {
        return Err(Error::numerical(format!(
            "loss acquired imaginary part {:.3e}",
            t.im
        )));
    }
    Ok(t.re)
}

/// Hadamard-test value for one Pauli word.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HadamardTestValue {
    pub label: PauliLabel,
    pub value: f64,
}

/// D_s = i tr(O [sigma^s, rho_out]); identically zero for the identity label.
pub fn exact_d(o: &DenseOperator, s: &PauliLabel, rho_out: &DenseOperator) -> Result<HadamardTestValue> {
    check_hermitian(o, "observable")?;
    if 1usize << s.num_qubits() != rho_out.dim() {
        return Err(Error::structural("label width does not match state dimension"));
    }
    if s.is_identity() {
        return Ok(HadamardTestValue { label: *s, value: 0.0 });
    }
    let sigma = pauli_matrix(s)?;
    let comm = sigma.matrix() * rho_out.matrix() - rho_out.matrix() * sigma.matrix();
    let comm = DenseOperator::from_matrix(comm)?;
    let t = o.trace_product(&comm) * c(0.0, 1.0);
    let scale = 1.0 + o.frobenius() * rho_out.frobenius();
    if t.im.abs() > 1e-10 * scale {
        return Err(Error::numerical(format!(
            "Hadamard-test value acquired imaginary part {:.3e}",
            t.im
        )));
    }
    Ok(HadamardTestValue { label: *s, value: t.re })
}

/// The Hermitian, traceless observable whose expectation on any state equals
/// the Hadamard-test value for `s`: H_s = i [O, sigma^s].
///
/// This closed form is what the difference of the two +-pi/2 conjugated copies
/// of `O` collapses to; the sign is pinned by tr(H_s rho) = i tr(O [sigma^s, rho]).
pub fn observable_hs(o: &DenseOperator, s: &PauliLabel) -> Result<DenseOperator> {
    check_hermitian(o, "observable")?;
    if s.is_identity() {
        return Ok(DenseOperator::zeros(s.num_qubits()));
    }
    let sigma = pauli_matrix(s)?;
    let hs = (o.matrix() * sigma.matrix() - sigma.matrix() * o.matrix()) * c(0.0, 1.0);
    DenseOperator::from_matrix(hs)
}

/// Rotation `R_s(theta) = exp(-i theta/2 sigma^s)` as a dense unitary.
pub fn pauli_rotation(s: &PauliLabel, theta: f64) -> Result<DenseOperator> {
    let sigma = pauli_matrix(s)?;
    let n = sigma.dim();
    let half = theta / 2.0;
    let mat = DMatrix::<Complex64>::identity(n, n) * c(half.cos(), 0.0)
        - sigma.matrix() * c(0.0, half.sin());
    DenseOperator::from_matrix(mat)
}

/// Draw `shots` outcomes of measuring `m` on `state` via its spectral
/// decomposition. Outcomes are the (group-representative) eigenvalues.
pub fn sample_observable(
    m: &DenseOperator,
    state: &DenseOperator,
    shots: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let eig = herm_eigen(m)?;
    let spread = {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &l in &eig.eigenvalues {
            lo = lo.min(l);
            hi = hi.max(l);
        }
        (hi - lo).max(1.0)
    };
    let groups = eig.grouped(1e-9 * spread);
    let mut probs: Vec<f64> = groups
        .iter()
        .map(|(_, members)| eig.group_probability(members, state))
        .collect();
    let mut total = 0.0;
    for p in probs.iter_mut() {
        if *p < 0.0 {
            if *p < -1e-9 {
                return Err(Error::numerical(format!(
                    "negative measurement probability {:.3e}",
                    *p
                )));
            }
            *p = 0.0;
        }
        total += *p;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::numerical(format!(
            "measurement probabilities sum to {total}, expected 1"
        )));
    }
    let mut outcomes = Vec::with_capacity(shots);
    for _ in 0..shots {
        let mut u = rng.gen::<f64>() * total;
        let mut picked = groups.len() - 1;
        for (g, p) in probs.iter().enumerate() {
            if u < *p {
                picked = g;
                break;
            }
            u -= *p;
        }
        outcomes.push(groups[picked].0);
    }
    Ok(outcomes)
}

/// Pauli coefficients a_s = tr(M sigma^s) / 2^d for all 4^d labels.
///
/// Uses the one-nonzero-per-row structure of Pauli words, so each coefficient
/// costs O(2^d).
pub fn pauli_decompose(m: &DenseOperator) -> Result<Vec<(PauliLabel, Complex64)>> {
    let d = m.num_qubits();
    check_dense_limit(d, DEFAULT_MAX_DENSE_QUBITS)?;
    let n = m.dim();
    let scale = 1.0 / n as f64;
    let mut out = Vec::with_capacity(1 << (2 * d));
    let mut word = vec![0u8; d];
    loop {
        let label = PauliLabel::from_word(&word)?;
        // tr(M sigma) = sum_j M[j, j'] sigma[j', j] with j' = j ^ xmask
        let mut xmask = 0usize;
        for j in 0..d {
            if matches!(label.symbol(j), 1 | 2) {
                xmask |= 1 << (d - 1 - j);
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for b in 0..n {
            // phase of sigma |b> = phase * |b ^ xmask>; entry sigma[(b^xmask), b]
            let mut phase = c(1.0, 0.0);
            for j in 0..d {
                let bit = basis_bit(b, j, d);
                match label.symbol(j) {
                    2 => phase *= if bit == 0 { c(0.0, 1.0) } else { c(0.0, -1.0) },
                    3 => {
                        if bit == 1 {
                            phase = -phase;
                        }
                    }
                    _ => {}
                }
            }
            acc += m.matrix()[(b, b ^ xmask)] * phase;
        }
        out.push((label, acc * scale));
        // advance the word odometer
        let mut j = 0;
        loop {
            if j == d {
                return Ok(out);
            }
            word[j] += 1;
            if word[j] < 4 {
                break;
            }
            word[j] = 0;
            j += 1;
        }
    }
}

/// Pauli decomposition of a Hermitian operator as a real sum; errors if any
/// coefficient has an imaginary part beyond rounding.
pub fn pauli_decompose_hermitian(m: &DenseOperator) -> Result<PauliSum> {
    check_hermitian(m, "operator")?;
    let coeffs = pauli_decompose(m)?;
    let mut sum = PauliSum::new(m.num_qubits());
    for (label, coeff) in coeffs {
        if coeff.im.abs() > 1e-10 * (1.0 + m.frobenius()) {
            return Err(Error::numerical(format!(
                "coefficient of {label} has imaginary part {:.3e}",
                coeff.im
            )));
        }
        if coeff.re.abs() >= crate::pauli::COEFF_EPS {
            sum.add_term(label, coeff.re);
        }
    }
    Ok(sum)
}

/// Central-difference gradient of the loss, the ground-truth oracle for every
/// estimator in this crate.
pub fn finite_difference_gradient(
    o: &DenseOperator,
    rho: &DenseOperator,
    labels: &[PauliLabel],
    a: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    assert_eq!(labels.len(), a.len(), "label/coefficient length mismatch");
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::structural(format!("step size {h} outside [1e-7, 1e-3]")));
    }
    let d = labels
        .first()
        .map(|l| l.num_qubits())
        .ok_or_else(|| Error::structural("empty parameter list"))?;
    let eval = |coeffs: &[f64]| -> Result<f64> {
        let sum = PauliSum::from_terms(d, labels.iter().cloned().zip(coeffs.iter().cloned()))?;
        let rho_out = evolve(&sum, rho)?;
        loss(o, &rho_out)
    };
    let mut grad = Vec::with_capacity(a.len());
    for r in 0..a.len() {
        let mut plus = a.to_vec();
        let mut minus = a.to_vec();
        plus[r] += h;
        minus[r] -= h;
        grad.push((eval(&plus)? - eval(&minus)?) / (2.0 * h));
    }
    Ok(grad)
}

/// How the input state of a run is specified.
#[derive(Clone, Debug)]
pub enum StateSpec {
    /// Computational basis state from a bitstring like "0101".
    Basis(String),
    MaximallyMixed,
    Vector(DVector<Complex64>),
    Density(DMatrix<Complex64>),
}

impl StateSpec {
    pub fn to_density(&self, d: usize) -> Result<DenseOperator> {
        let n = 1usize << d;
        match self {
            StateSpec::Basis(bits) => {
                if bits.len() != d {
                    return Err(Error::parse(format!(
                        "basis string '{bits}' has length {}, expected {d}",
                        bits.len()
                    )));
                }
                let mut index = 0usize;
                for (j, ch) in bits.chars().enumerate() {
                    match ch {
                        '0' => {}
                        '1' => index |= 1 << (d - 1 - j),
                        other => {
                            return Err(Error::parse(format!(
                                "basis string character '{other}' at position {}",
                                j + 1
                            )))
                        }
                    }
                }
                let mut mat = DMatrix::<Complex64>::zeros(n, n);
                mat[(index, index)] = c(1.0, 0.0);
                DenseOperator::from_matrix(mat)
            }
            StateSpec::MaximallyMixed => {
                let mat = DMatrix::<Complex64>::identity(n, n) * c(1.0 / n as f64, 0.0);
                DenseOperator::from_matrix(mat)
            }
            StateSpec::Vector(v) => {
                if v.len() != n {
                    return Err(Error::structural(format!(
                        "state vector length {} does not match 2^{d}",
                        v.len()
                    )));
                }
                if (v.norm() - 1.0).abs() > 1e-12 {
                    return Err(Error::numerical(format!(
                        "state vector norm {} is not 1",
                        v.norm()
                    )));
                }
                let mat = v * v.adjoint();
                DenseOperator::from_matrix(mat)
            }
            StateSpec::Density(mat) => {
                if mat.nrows() != n {
                    return Err(Error::structural(format!(
                        "density dimension {} does not match 2^{d}",
                        mat.nrows()
                    )));
                }
                let op = DenseOperator::from_matrix(mat.clone())?;
                check_density(&op)?;
                Ok(op)
            }
        }
    }
}

/// Random Hermitian observable with i.i.d. Gaussian Pauli coefficients,
/// rescaled to unit Hilbert-Schmidt norm (tr O^2 = 1).
pub fn random_observable(d: usize, rng: &mut impl Rng) -> PauliSum {
    let mut terms: Vec<(PauliLabel, f64)> = Vec::new();
    let mut word = vec![0u8; d];
    loop {
        let g: f64 = gaussian(rng);
        terms.push((PauliLabel::from_word(&word).unwrap(), g));
        let mut j = 0;
        loop {
            if j == d {
                let sq: f64 = terms.iter().map(|(_, c)| c * c).sum();
                let scale = 1.0 / (sq * (1u64 << d) as f64).sqrt();
                let mut sum = PauliSum::new(d);
                for (label, coeff) in terms {
                    sum.add_term(label, coeff * scale);
                }
                return sum;
            }
            word[j] += 1;
            if word[j] < 4 {
                break;
            }
            word[j] = 0;
            j += 1;
        }
    }
}

/// Random density matrix (normalized Wishart).
pub fn random_density(d: usize, rng: &mut impl Rng) -> DenseOperator {
    let n = 1usize << d;
    let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| c(gaussian(rng), gaussian(rng)));
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    DenseOperator::from_matrix(w / c(tr, 0.0)).unwrap()
}

pub(crate) fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller; two uniform draws per call keeps the stream layout simple.
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
