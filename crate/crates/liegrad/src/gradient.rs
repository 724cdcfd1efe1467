//! Gradient estimators over Hadamard-test values: the closed-form matrix
//! method on subgroup parameter sets, the nested-commutator series with
//! truncation control, the Poisson-randomized unbiased estimator, and the
//! short-horizon zero-order approximation.

use crate::error::{Error, Result};
use crate::group::SubgroupBasis;
use crate::matfun;
use crate::pauli::{apply_ad, PauliLabel, PauliSum};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Adjoint action of the Hamiltonian in subgroup-basis coordinates.
///
/// Column `i` holds the coefficients of `(1/i) ad_A(sigma^(s_i))` over the
/// basis elements; antisymmetry is structural and asserted exactly at build
/// time (every entry is a single `2 a (s circledast r)` product).
#[derive(Clone, Debug)]
pub struct VMatrix {
    basis: SubgroupBasis,
    entries: DMatrix<f64>,
}

impl VMatrix {
    pub fn basis(&self) -> &SubgroupBasis {
        &self.basis
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Build the adjoint-action matrix for coefficients `a` over `basis`.
pub fn build_v(basis: &SubgroupBasis, a: &PauliSum) -> Result<VMatrix> {
    for label in a.labels() {
        if !basis.contains(label) {
            return Err(Error::structural(format!(
                "coefficient label {label} is outside the subgroup basis"
            )));
        }
    }
    let q = basis.len();
    let mut entries = DMatrix::<f64>::zeros(q, q);
    for (i, s_i) in basis.elements().iter().enumerate() {
        for (s, &a_s) in a.terms() {
            let w = s.circledast(s_i);
            if w == 0 {
                continue;
            }
            let target = s.circ(s_i);
            let t = basis.position(&target).ok_or_else(|| {
                Error::structural(format!("product label {target} escaped the basis"))
            })?;
            entries[(t, i)] += 2.0 * a_s * f64::from(w);
        }
    }
    for i in 0..q {
        for j in 0..i {
            assert_eq!(
                entries[(i, j)],
                -entries[(j, i)],
                "adjoint matrix lost antisymmetry"
            );
        }
    }
    Ok(VMatrix { basis: basis.clone(), entries })
}

/// The gradient kernel `B = sum_k V^k / (k+1)!` applied to the adjoint matrix;
/// `B * D` maps the vector of Hadamard-test values to the full gradient over
/// the basis. `B(0) = I`, and for a single-parameter basis `B = [1]`.
pub fn phi1(v: &VMatrix) -> DMatrix<f64> {
    matfun::phi1(v.entries())
}

/// Per-run metadata attached to a gradient estimate. Methods fill the fields
/// they actually control; everything else stays `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subgroup_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expanded_to_generated_subgroup: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_k: Option<usize>,
    /// Truncation error bound; `None` when the bound formula is vacuous.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadow_records: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadow_group_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadow_groups: Option<usize>,
    /// Per-label spread of the shadow group means, as a scatter proxy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadow_stderr: Option<BTreeMap<String, f64>>,
    /// Variance bound 12 tr(O^2) / n for a single shadow group mean.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadow_variance_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dla_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dla_growth: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub short_term_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_held: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

/// Estimated gradient plus the evidence behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub method: String,
    /// Parameter labels in the caller's order; `gradient` is index-aligned.
    pub labels: Vec<String>,
    pub gradient: Vec<f64>,
    /// Hadamard-test (or Lie-basis) values consumed by the method.
    pub d_values: BTreeMap<String, f64>,
    pub diagnostics: Diagnostics,
}

impl GradientReport {
    pub fn new(method: &str, params: &[(PauliLabel, f64)], gradient: Vec<f64>) -> Self {
        GradientReport {
            method: method.to_string(),
            labels: params.iter().map(|(l, _)| l.to_string()).collect(),
            gradient,
            d_values: BTreeMap::new(),
            diagnostics: Diagnostics::default(),
        }
    }
}

fn d_vector(basis: &SubgroupBasis, d_values: &BTreeMap<PauliLabel, f64>) -> Result<DVector<f64>> {
    let mut vec = DVector::<f64>::zeros(basis.len());
    for (i, label) in basis.elements().iter().enumerate() {
        match d_values.get(label) {
            Some(&v) => vec[i] = v,
            None => {
                return Err(Error::structural(format!(
                    "missing Hadamard-test value for basis label {label}"
                )))
            }
        }
    }
    Ok(vec)
}

/// Closed-form gradient on a subgroup parameter set: `grad = B * D` restricted
/// to the requested parameters, with `B` from [`phi1`].
pub fn subgroup_gradient(
    basis: &SubgroupBasis,
    params: &[(PauliLabel, f64)],
    d_values: &BTreeMap<PauliLabel, f64>,
) -> Result<GradientReport> {
    let a = PauliSum::from_terms(basis.num_qubits(), params.iter().cloned())?;
    let v = build_v(basis, &a)?;
    let b = phi1(&v);
    let d = d_vector(basis, d_values)?;
    let full = &b * &d;
    let mut gradient = Vec::with_capacity(params.len());
    for (label, _) in params {
        let pos = basis.position(label).ok_or_else(|| {
            Error::structural(format!("parameter label {label} is not in the basis"))
        })?;
        gradient.push(full[pos]);
    }
    let mut report = GradientReport::new("subgroup", params, gradient);
    report.d_values = d_values.iter().map(|(l, v)| (l.to_string(), *v)).collect();
    report.diagnostics.subgroup_size = Some(basis.len());
    Ok(report)
}

/// Prefix sums of the commutator series for one parameter: entry `K` is the
/// series truncated after the order-`K` term. The walker state is a real Pauli
/// sum evolved by repeated `(1/i) ad_A`, so only labels that actually appear
/// are ever requested from the provider.
pub fn series_prefix_sums<F>(
    a: &PauliSum,
    r: &PauliLabel,
    k_max: usize,
    d_provider: &mut F,
) -> Result<Vec<f64>>
where
    F: FnMut(&PauliLabel) -> Result<f64>,
{
    let mut walker = PauliSum::single(*r, 1.0);
    let mut coef = 1.0; // (-1)^k / (k+1)!
    let mut acc = 0.0;
    let mut prefix = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut dotted = 0.0;
        for (label, &weight) in walker.terms() {
            dotted += weight * d_provider(label)?;
        }
        acc += coef * dotted;
        prefix.push(acc);
        if k < k_max {
            walker = apply_ad(a, &walker);
            coef *= -1.0 / (k as f64 + 2.0);
            if walker.is_empty() {
                // series terminated exactly; remaining prefixes are constant
                for _ in k + 1..k_max {
                    prefix.push(acc);
                }
                prefix.push(acc);
                break;
            }
        }
    }
    Ok(prefix)
}

/// Series truncated at order `k`.
pub fn series_partial<F>(a: &PauliSum, r: &PauliLabel, k: usize, d_provider: &mut F) -> Result<f64>
where
    F: FnMut(&PauliLabel) -> Result<f64>,
{
    Ok(*series_prefix_sums(a, r, k, d_provider)?.last().unwrap())
}

/// Truncation error bound `exp(-K log(K / (e pi p ||O||)))`; infinite when the
/// log argument is at or below 1, where the formula says nothing.
pub fn epsilon_k_bound(k: usize, p: usize, o_norm: f64) -> f64 {
    let threshold = std::f64::consts::E * std::f64::consts::PI * p as f64 * o_norm;
    let ratio = k as f64 / threshold;
    if ratio <= 1.0 {
        f64::INFINITY
    } else {
        (-(k as f64) * ratio.ln()).exp()
    }
}

/// Truncated series value together with its a-priori error bound.
pub fn truncated_gradient<F>(
    a: &PauliSum,
    r: &PauliLabel,
    k: usize,
    d_provider: &mut F,
    p: usize,
    o_norm: f64,
) -> Result<(f64, f64)>
where
    F: FnMut(&PauliLabel) -> Result<f64>,
{
    let value = series_partial(a, r, k, d_provider)?;
    Ok((value, epsilon_k_bound(k, p, o_norm)))
}

/// Knuth multiplication sampler; exact for small rates.
fn sample_poisson(rate: f64, rng: &mut impl Rng) -> usize {
    let limit = (-rate).exp();
    let mut k = 0usize;
    let mut product: f64 = rng.gen();
    while product > limit {
        k += 1;
        product *= rng.gen::<f64>();
    }
    k
}

/// Unbiased single-parameter estimator: draw `K ~ Poisson(2)` per sample and
/// average `e^2 * 2/(K+1) * X(K)`, where `X(K)` is the order-`K` series term
/// stripped of its `2^K/(K+1)!` weight. Returns `(mean, standard error)`.
pub fn poisson_gradient<F>(
    a: &PauliSum,
    r: &PauliLabel,
    d_provider: &mut F,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<(f64, f64)>
where
    F: FnMut(&PauliLabel) -> Result<f64>,
{
    if samples == 0 {
        return Err(Error::structural("poisson estimator needs at least one sample"));
    }
    // cache sum_t w_k[t] D_t per order; the walk is deterministic
    let mut walkers: Vec<PauliSum> = vec![PauliSum::single(*r, 1.0)];
    let mut dotted: Vec<f64> = Vec::new();
    let dot_at = |k: usize, walkers: &mut Vec<PauliSum>, dotted: &mut Vec<f64>, d: &mut F| -> Result<f64> {
        while walkers.len() <= k {
            let next = apply_ad(a, walkers.last().unwrap());
            walkers.push(next);
        }
        while dotted.len() <= k {
            let idx = dotted.len();
            let mut acc = 0.0;
            for (label, &weight) in walkers[idx].terms() {
                acc += weight * d(label)?;
            }
            dotted.push(acc);
        }
        Ok(dotted[k])
    };
    let e2 = std::f64::consts::E.powi(2);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let k = sample_poisson(2.0, rng);
        let base = dot_at(k, &mut walkers, &mut dotted, d_provider)?;
        // X(k) = (-1)^k / 2^(k+1) * sum_t w_k[t] D_t
        let x = if k % 2 == 0 { base } else { -base } / 2f64.powi(k as i32 + 1);
        let value = e2 * 2.0 / (k as f64 + 1.0) * x;
        sum += value;
        sum_sq += value * value;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    let stderr = (var / samples as f64).sqrt();
    Ok((mean, stderr))
}

/// Zero-order approximation: each partial derivative is the bare Hadamard-test
/// value. The report records whether the coefficient smallness condition for a
/// target additive error held; with no target, it records the error level the
/// coefficients imply (finite only when `2 p max|a| < 1`).
pub fn short_term_gradient(
    params: &[(PauliLabel, f64)],
    d_values: &BTreeMap<PauliLabel, f64>,
    eps_target: Option<f64>,
) -> Result<GradientReport> {
    let p = params.len();
    let mut gradient = Vec::with_capacity(p);
    for (label, _) in params {
        let v = d_values.get(label).ok_or_else(|| {
            Error::structural(format!("missing Hadamard-test value for parameter {label}"))
        })?;
        gradient.push(*v);
    }
    let max_abs = params.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
    let implied = {
        let denom = 1.0 - 2.0 * p as f64 * max_abs;
        if denom > 0.0 {
            Some(p as f64 * max_abs / denom)
        } else {
            None
        }
    };
    let (epsilon, held) = match eps_target {
        Some(eps) => (Some(eps), max_abs <= eps / (p as f64 * (1.0 + 2.0 * eps))),
        None => (implied, implied.is_some()),
    };
    let mut report = GradientReport::new("short-term", params, gradient);
    report.d_values = params
        .iter()
        .map(|(l, _)| (l.to_string(), *d_values.get(l).unwrap()))
        .collect();
    report.diagnostics.max_abs_coefficient = Some(max_abs);
    report.diagnostics.short_term_epsilon = epsilon;
    report.diagnostics.condition_held = Some(held);
    Ok(report)
}
