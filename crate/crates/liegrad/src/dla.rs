//! Lie-closure construction by nested commutators, the adjoint matrix of the
//! Hamiltonian in the closure basis, and the gradient method built on it.
//!
//! All arithmetic stays in the real Pauli-coefficient space: elements are real
//! Pauli sums, the inner product is the coefficient dot product (tr(AB)/2^d),
//! and commutators go through `apply_ad`, which keeps the `1/i` folded in.

use crate::error::{Error, Result};
use crate::gradient::GradientReport;
use crate::matfun;
use crate::pauli::{apply_ad, PauliLabel, PauliSum};
use crate::sim::{evolve, materialize, DenseOperator};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Rank decision threshold for Gram-Schmidt residuals.
pub const RANK_TOL: f64 = 1e-9;
/// Default cap on the closure dimension.
pub const DEFAULT_MAX_DLA_DIM: usize = 512;

const CLOSURE_TOL: f64 = 1e-10;

/// Orthonormal basis of the Lie closure of a generator set.
#[derive(Clone, Debug)]
pub struct LieBasis {
    d: usize,
    elements: Vec<PauliSum>,
    growth: Vec<usize>,
}

impl LieBasis {
    pub fn num_qubits(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[PauliSum] {
        &self.elements
    }

    /// Dimension after each closure sweep; flat tail means a fixpoint.
    pub fn growth_trace(&self) -> &[usize] {
        &self.growth
    }

    /// Coefficient-space coordinates of `x`, plus the out-of-span residual.
    pub fn coordinates(&self, x: &PauliSum) -> (DVector<f64>, f64) {
        let mut coords = DVector::<f64>::zeros(self.elements.len());
        let mut remainder = x.clone();
        for (l, e) in self.elements.iter().enumerate() {
            let c = e.dot(&remainder);
            coords[l] = c;
            if c != 0.0 {
                remainder = remainder.add(&e.scaled(-c));
            }
        }
        (coords, remainder.norm())
    }
}

/// Project `candidate` against `basis` twice and return the orthogonal part.
fn orthogonal_part(basis: &[PauliSum], candidate: &PauliSum) -> PauliSum {
    let mut v = candidate.clone();
    for _ in 0..2 {
        for e in basis {
            let c = e.dot(&v);
            if c != 0.0 {
                v = v.add(&e.scaled(-c));
            }
        }
    }
    v
}

/// Build the Lie closure of `generators` by breadth-first commutation with the
/// generator set, orthonormalizing as elements are discovered.
pub fn build_dla(generators: &[PauliSum], max_dim: usize) -> Result<LieBasis> {
    let d = generators
        .first()
        .map(|g| g.num_qubits())
        .ok_or_else(|| Error::structural("empty generator set"))?;
    if generators.iter().any(|g| g.num_qubits() != d) {
        return Err(Error::structural("generators have mixed qubit counts"));
    }
    if generators.iter().any(|g| g.is_empty()) {
        return Err(Error::structural("zero generator in the input set"));
    }
    let normalized: Vec<PauliSum> = generators
        .iter()
        .map(|g| g.scaled(1.0 / g.norm()))
        .collect();

    let mut elements: Vec<PauliSum> = Vec::new();
    let try_add = |elements: &mut Vec<PauliSum>, candidate: &PauliSum| -> Result<bool> {
        let residual = orthogonal_part(elements, candidate);
        let norm = residual.norm();
        if norm <= RANK_TOL {
            return Ok(false);
        }
        if elements.len() + 1 > max_dim {
            return Err(Error::structural(format!(
                "Lie-closure blow-up: dimension exceeded {max_dim}"
            )));
        }
        elements.push(residual.scaled(1.0 / norm));
        Ok(true)
    };

    for g in &normalized {
        try_add(&mut elements, g)?;
    }
    let mut growth = vec![elements.len()];
    let mut processed = 0usize;
    while processed < elements.len() {
        let frontier_end = elements.len();
        for i in processed..frontier_end {
            for g in &normalized {
                let candidate = apply_ad(&elements[i], g);
                if !candidate.is_empty() {
                    try_add(&mut elements, &candidate)?;
                }
            }
        }
        processed = frontier_end;
        growth.push(elements.len());
    }

    let basis = LieBasis { d, elements, growth };
    verify_basis(&basis)?;
    Ok(basis)
}

fn verify_basis(basis: &LieBasis) -> Result<()> {
    let n = basis.dim();
    for i in 0..n {
        let ei = &basis.elements[i];
        if (ei.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::numerical(format!(
                "closure basis element {i} has norm {}",
                ei.norm()
            )));
        }
        for j in 0..i {
            let dot = ei.dot(&basis.elements[j]);
            if dot.abs() > 1e-10 {
                return Err(Error::numerical(format!(
                    "closure basis elements {i},{j} overlap by {dot:.3e}"
                )));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let comm = apply_ad(&basis.elements[i], &basis.elements[j]);
            if comm.is_empty() {
                continue;
            }
            let (_, residual) = basis.coordinates(&comm);
            if residual > CLOSURE_TOL * (1.0 + comm.norm()) {
                return Err(Error::numerical(format!(
                    "bracket of basis elements {i},{j} leaves the span (residual {residual:.3e})"
                )));
            }
        }
    }
    Ok(())
}

/// The adjoint action of a Hamiltonian, as a real matrix in the closure basis.
#[derive(Clone, Debug)]
pub struct AdjointMatrix {
    entries: DMatrix<f64>,
}

impl AdjointMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Column `j` holds the coordinates of `(1/i) ad_A(E_j)`.
pub fn adjoint_matrix(a: &PauliSum, basis: &LieBasis) -> Result<AdjointMatrix> {
    let (_, residual) = basis.coordinates(a);
    if residual > RANK_TOL * (1.0 + a.norm()) {
        return Err(Error::structural(format!(
            "Hamiltonian leaves the closure span (residual {residual:.3e})"
        )));
    }
    let n = basis.dim();
    let mut entries = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let image = apply_ad(a, &basis.elements[j]);
        let (coords, residual) = basis.coordinates(&image);
        if residual > RANK_TOL * (1.0 + image.norm()) {
            return Err(Error::structural(format!(
                "adjoint image of basis element {j} leaves the span (residual {residual:.3e})"
            )));
        }
        entries.set_column(j, &coords);
    }
    let skew = (&entries + entries.transpose()).norm();
    if skew > 1e-10 * (1.0 + entries.norm()) {
        return Err(Error::numerical(format!(
            "adjoint matrix is not antisymmetric (residual {skew:.3e})"
        )));
    }
    Ok(AdjointMatrix { entries })
}

/// R value of a Lie-basis element: `i tr(O [E, rho_out])`, the same sign
/// convention as the single-word Hadamard-test value.
pub fn exact_r(o: &DenseOperator, e: &PauliSum, rho_out: &DenseOperator) -> Result<f64> {
    let e_dense = materialize(e)?;
    let comm = e_dense.matrix() * rho_out.matrix() - rho_out.matrix() * e_dense.matrix();
    let comm = DenseOperator::from_matrix(comm)?;
    let t = o.trace_product(&comm) * Complex64::new(0.0, 1.0);
    let scale = 1.0 + o.frobenius() * rho_out.frobenius() * (1.0 + e_dense.frobenius());
    if t.im.abs() > 1e-10 * scale {
        return Err(Error::numerical(format!(
            "R value acquired imaginary part {:.3e}",
            t.im
        )));
    }
    Ok(t.re)
}

fn element_name(e: &PauliSum, index: usize) -> String {
    if e.len() == 1 {
        let (label, &coeff) = e.terms().next().unwrap();
        if (coeff - 1.0).abs() < 1e-12 {
            return label.to_string();
        }
    }
    format!("E{index}")
}

/// Gradient through the closure basis: estimate the R value of every basis
/// element on the evolved state, apply the phi1 kernel of the adjoint matrix,
/// and read each partial derivative off through the generator coordinates.
pub fn dla_gradient(
    o: &DenseOperator,
    rho: &DenseOperator,
    generators: &[PauliSum],
    a: &[f64],
    basis: &LieBasis,
) -> Result<GradientReport> {
    if generators.len() != a.len() {
        return Err(Error::structural("generator/coefficient length mismatch"));
    }
    let d = basis.num_qubits();
    let mut hamiltonian = PauliSum::new(d);
    for (g, &coeff) in generators.iter().zip(a.iter()) {
        hamiltonian = hamiltonian.add(&g.scaled(coeff));
    }
    let rho_out = if hamiltonian.is_empty() {
        rho.clone()
    } else {
        evolve(&hamiltonian, rho)?
    };

    let adj = adjoint_matrix(&hamiltonian, basis)?;
    let kernel = matfun::phi1(adj.entries());
    let mut r_vec = DVector::<f64>::zeros(basis.dim());
    for (l, e) in basis.elements().iter().enumerate() {
        r_vec[l] = exact_r(o, e, &rho_out)?;
    }
    let full = &kernel * &r_vec;

    let mut gradient = Vec::with_capacity(generators.len());
    for g in generators {
        let (coords, residual) = basis.coordinates(g);
        if residual > RANK_TOL * (1.0 + g.norm()) {
            return Err(Error::structural(
                "generator leaves the closure span",
            ));
        }
        gradient.push(coords.dot(&full));
    }

    let labels: Vec<String> = generators
        .iter()
        .enumerate()
        .map(|(i, g)| element_name(g, i))
        .collect();
    let mut report = GradientReport {
        method: "dla".into(),
        labels,
        gradient,
        d_values: basis
            .elements()
            .iter()
            .enumerate()
            .map(|(l, e)| (element_name(e, l), r_vec[l]))
            .collect(),
        diagnostics: Default::default(),
    };
    report.diagnostics.dla_dim = Some(basis.dim());
    report.diagnostics.dla_growth = Some(basis.growth_trace().to_vec());
    Ok(report)
}

/// Open-chain transverse-field Ising generators: ZZ on neighbouring pairs,
/// then X on every site. The workhorse example with quadratic closure growth.
pub fn tfim_generators(d: usize) -> Vec<PauliSum> {
    let mut gens = Vec::new();
    for i in 0..d.saturating_sub(1) {
        let mut word = vec![0u8; d];
        word[i] = 3;
        word[i + 1] = 3;
        gens.push(PauliSum::single(PauliLabel::from_word(&word).unwrap(), 1.0));
    }
    for i in 0..d {
        let mut word = vec![0u8; d];
        word[i] = 1;
        gens.push(PauliSum::single(PauliLabel::from_word(&word).unwrap(), 1.0));
    }
    gens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{finite_difference_gradient, random_density, random_observable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn lbl(text: &str) -> PauliLabel {
        PauliLabel::parse(text).unwrap()
    }

    fn word_gen(text: &str) -> PauliSum {
        PauliSum::single(lbl(text), 1.0)
    }

    #[test]
    fn single_qubit_closure_is_full() {
        let basis = build_dla(&[word_gen("X"), word_gen("Y")], 16).unwrap();
        assert_eq!(basis.dim(), 3);
    }

    #[test]
    fn commuting_family_stays_one_dimensional() {
        let basis = build_dla(&[word_gen("ZZ")], 16).unwrap();
        assert_eq!(basis.dim(), 1);
        let basis = build_dla(&[word_gen("ZZI"), word_gen("IZZ")], 16).unwrap();
        assert_eq!(basis.dim(), 2);
        assert_eq!(basis.growth_trace().last(), Some(&2));
    }

    #[test]
    fn tfim_two_site_closure_dim_six() {
        // hand enumeration: ZZ, X1, X2, YZ, ZY, YY close among themselves
        let basis = build_dla(&tfim_generators(2), 64).unwrap();
        assert_eq!(basis.dim(), 6);
    }

    #[test]
    fn blow_up_guard_fires() {
        let err = build_dla(&tfim_generators(4), 5).unwrap_err();
        assert!(err.to_string().contains("blow-up"), "{err}");
    }

    #[test]
    fn dimension_monotone_in_generators() {
        let small = build_dla(&[word_gen("ZZ"), word_gen("XI")], 64).unwrap();
        let large = build_dla(&[word_gen("ZZ"), word_gen("XI"), word_gen("IX")], 64).unwrap();
        assert!(large.dim() >= small.dim());
    }

    #[test]
    fn adjoint_matrix_single_qubit_frozen() {
        // A = a Y on the (X, Y, Z) word basis: X -> -2a Z, Z -> 2a X, Y -> 0
        let basis = build_dla(&[word_gen("X"), word_gen("Y"), word_gen("Z")], 8).unwrap();
        assert_eq!(basis.dim(), 3);
        let a_coeff = 0.61;
        let t = adjoint_matrix(&PauliSum::single(lbl("Y"), a_coeff), &basis).unwrap();
        // basis order follows insertion: X, Y, Z
        let e = t.entries();
        assert!((e[(2, 0)] + 2.0 * a_coeff).abs() < 1e-12);
        assert!((e[(0, 2)] - 2.0 * a_coeff).abs() < 1e-12);
        assert!(e.column(1).norm() < 1e-12);
    }

    #[test]
    fn adjoint_matrix_zero_hamiltonian() {
        let basis = build_dla(&tfim_generators(2), 64).unwrap();
        let t = adjoint_matrix(&PauliSum::new(2), &basis).unwrap();
        assert!(t.entries().norm() == 0.0);
    }

    #[test]
    fn adjoint_matrix_antisymmetric_on_random_input() {
        let mut rng = ChaCha20Rng::seed_from_u64(61);
        let gens = tfim_generators(3);
        let basis = build_dla(&gens, 64).unwrap();
        let mut a = PauliSum::new(3);
        for g in &gens {
            a = a.add(&g.scaled(rng.gen_range(-1.0..1.0)));
        }
        let t = adjoint_matrix(&a, &basis).unwrap();
        let skew = (t.entries() + t.entries().transpose()).norm();
        assert!(skew < 1e-10);
    }

    #[test]
    fn exact_r_reduces_to_hadamard_test_on_words() {
        let mut rng = ChaCha20Rng::seed_from_u64(62);
        let d = 2;
        let o = materialize(&random_observable(d, &mut rng)).unwrap();
        let rho = random_density(d, &mut rng);
        let s = lbl("XZ");
        let via_r = exact_r(&o, &PauliSum::single(s, 1.0), &rho).unwrap();
        let via_d = crate::sim::exact_d(&o, &s, &rho).unwrap().value;
        assert!((via_r - via_d).abs() < 1e-12);

        // linearity
        let e = PauliSum::from_terms(d, [(lbl("XZ"), 0.4), (lbl("YI"), -1.1)]).unwrap();
        let want = 0.4 * crate::sim::exact_d(&o, &lbl("XZ"), &rho).unwrap().value
            - 1.1 * crate::sim::exact_d(&o, &lbl("YI"), &rho).unwrap().value;
        assert!((exact_r(&o, &e, &rho).unwrap() - want).abs() < 1e-12);

        // element commuting with the state gives zero
        let diag = crate::sim::StateSpec::Basis("00".into()).to_density(2).unwrap();
        let z = PauliSum::single(lbl("ZI"), 1.0);
        assert!(exact_r(&o, &z, &diag).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dla_gradient_matches_finite_differences_on_tfim() {
        let mut rng = ChaCha20Rng::seed_from_u64(63);
        let d = 3;
        let gens = tfim_generators(d);
        let basis = build_dla(&gens, 128).unwrap();
        let o = materialize(&random_observable(d, &mut rng)).unwrap();
        let rho = random_density(d, &mut rng);
        let coeffs: Vec<f64> = (0..gens.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let report = dla_gradient(&o, &rho, &gens, &coeffs, &basis).unwrap();

        let labels: Vec<PauliLabel> = gens
            .iter()
            .map(|g| *g.labels().next().unwrap())
            .collect();
        let fd = finite_difference_gradient(&o, &rho, &labels, &coeffs, 1e-5).unwrap();
        let scale = fd.iter().map(|x| x.abs()).fold(1e-3, f64::max);
        for (got, want) in report.gradient.iter().zip(fd.iter()) {
            assert!(
                (got - want).abs() / scale < 1e-6,
                "dla {got} vs fd {want}"
            );
        }
    }

    #[test]
    fn dla_gradient_at_zero_is_bare_r() {
        let mut rng = ChaCha20Rng::seed_from_u64(64);
        let d = 2;
        let gens = tfim_generators(d);
        let basis = build_dla(&gens, 64).unwrap();
        let o = materialize(&random_observable(d, &mut rng)).unwrap();
        let rho = random_density(d, &mut rng);
        let zeros = vec![0.0; gens.len()];
        let report = dla_gradient(&o, &rho, &gens, &zeros, &basis).unwrap();
        for (g, got) in gens.iter().zip(report.gradient.iter()) {
            let want = exact_r(&o, g, &rho).unwrap();
            assert!((got - want).abs() < 1e-10);
        }
    }
}
