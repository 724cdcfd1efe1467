//! Command orchestration shared by the CLI binary and the integration tests:
//! gradient runs, structural analysis, and the truncation sweep.

use crate::dla::{build_dla, dla_gradient};
use crate::error::{Error, Result};
use crate::gradient::{
    epsilon_k_bound, poisson_gradient, series_partial, short_term_gradient, subgroup_gradient,
    GradientReport,
};
use crate::group::{
    compatibility_groups, generated_subgroup, index_complexity, is_subgroup, SubgroupBasis,
};
use crate::io;
use crate::pauli::{PauliLabel, PauliSum};
use crate::report::{AnalysisReport, ResultDocument, RunConfig};
use crate::shadow::{shadow_gradient, SecondStage};
use crate::sim::{
    evolve, exact_d, herm_eigen, materialize, random_observable, DenseOperator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeMap;
use std::time::Instant;

/// Default truncation order when `--K` is not given.
pub const DEFAULT_TRUNCATION_K: usize = 30;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_SHADOW_N: usize = 1000;
pub const DEFAULT_SHADOW_GROUPS: usize = 9;

fn read_to_string(path: &str) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::parse(format!("cannot read '{path}': {e}")))
}

fn load_hamiltonian(cfg: &RunConfig) -> Result<io::PauliSumFile> {
    let path = cfg
        .hamiltonian
        .as_ref()
        .ok_or_else(|| Error::parse("a Hamiltonian file is required"))?;
    io::parse_pauli_sum(&read_to_string(path)?)
}

fn load_observable(cfg: &RunConfig, d: usize) -> Result<(DenseOperator, Option<PauliSum>)> {
    match (&cfg.observable, cfg.random_obs_seed) {
        (Some(path), None) => {
            let text = read_to_string(path)?;
            let trimmed = text.trim_start();
            if trimmed.starts_with("dense") || trimmed.starts_with("vector") {
                match io::parse_dense(&text)? {
                    io::DenseFile::Matrix(m) => {
                        let op = DenseOperator::from_matrix(m)?;
                        if op.num_qubits() != d {
                            return Err(Error::structural(format!(
                                "observable acts on {} qubits, Hamiltonian on {d}",
                                op.num_qubits()
                            )));
                        }
                        Ok((op, None))
                    }
                    io::DenseFile::Vector(_) => {
                        Err(Error::parse("observable file holds a vector, not a matrix"))
                    }
                }
            } else {
                let parsed = io::parse_pauli_sum(&text)?;
                if parsed.sum.num_qubits() != d {
                    return Err(Error::structural(format!(
                        "observable acts on {} qubits, Hamiltonian on {d}",
                        parsed.sum.num_qubits()
                    )));
                }
                Ok((materialize(&parsed.sum)?, Some(parsed.sum)))
            }
        }
        (None, Some(seed)) => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let sum = random_observable(d, &mut rng);
            Ok((materialize(&sum)?, Some(sum)))
        }
        (Some(_), Some(_)) => {
            Err(Error::parse("give either an observable file or a random seed, not both"))
        }
        (None, None) => Err(Error::parse("an observable is required for gradient runs")),
    }
}

fn load_state(cfg: &RunConfig, d: usize) -> Result<DenseOperator> {
    let arg = cfg.state.as_deref().unwrap_or("mixed");
    let file_text = if arg != "mixed" && !arg.chars().all(|c| c == '0' || c == '1') {
        Some(read_to_string(arg)?)
    } else {
        None
    };
    let spec = io::parse_state_spec(arg, file_text.as_deref())?;
    spec.to_density(d)
}

/// Exact-simulator Hadamard-test provider with memoization.
struct DCache<'a> {
    o: &'a DenseOperator,
    rho_out: &'a DenseOperator,
    cache: BTreeMap<PauliLabel, f64>,
}

impl<'a> DCache<'a> {
    fn new(o: &'a DenseOperator, rho_out: &'a DenseOperator) -> Self {
        DCache { o, rho_out, cache: BTreeMap::new() }
    }

    fn get(&mut self, label: &PauliLabel) -> Result<f64> {
        if let Some(&v) = self.cache.get(label) {
            return Ok(v);
        }
        let v = exact_d(self.o, label, self.rho_out)?.value;
        self.cache.insert(*label, v);
        Ok(v)
    }

    fn into_string_map(self) -> BTreeMap<String, f64> {
        self.cache.into_iter().map(|(l, v)| (l.to_string(), v)).collect()
    }
}

fn operator_norm(o: &DenseOperator) -> Result<f64> {
    Ok(herm_eigen(o)?
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, &l| m.max(l.abs())))
}

/// Subgroup basis for the parameter labels, expanding to the generated
/// subgroup (with a warning flag) when the set is not already closed.
fn subgroup_for(
    labels: &[PauliLabel],
    max_size: usize,
) -> Result<(SubgroupBasis, bool)> {
    let closed = is_subgroup(labels)?;
    let basis = generated_subgroup(labels, max_size)?;
    if !closed {
        eprintln!(
            "note: parameter set is not closed under the label product; expanded to its generated subgroup ({} elements)",
            basis.len()
        );
    }
    Ok((basis, !closed))
}

fn split_identity(params: &[(PauliLabel, f64)]) -> (Vec<(PauliLabel, f64)>, Vec<usize>) {
    let mut non_identity = Vec::new();
    let mut identity_positions = Vec::new();
    for (i, (label, coeff)) in params.iter().enumerate() {
        if label.is_identity() {
            identity_positions.push(i);
        } else {
            non_identity.push((*label, *coeff));
        }
    }
    (non_identity, identity_positions)
}

/// Re-insert zero components for identity parameters, which never move the loss.
fn reassemble_gradient(report: &mut GradientReport, params: &[(PauliLabel, f64)], positions: &[usize]) {
    if positions.is_empty() {
        return;
    }
    let mut gradient = Vec::with_capacity(params.len());
    let mut labels = Vec::with_capacity(params.len());
    let mut inner = report.gradient.iter();
    for (i, (label, _)) in params.iter().enumerate() {
        if positions.contains(&i) {
            gradient.push(0.0);
        } else {
            gradient.push(*inner.next().unwrap());
        }
        labels.push(label.to_string());
    }
    report.gradient = gradient;
    report.labels = labels;
}

pub fn cmd_grad(cfg: &RunConfig) -> Result<ResultDocument> {
    let started = Instant::now();
    let ham = load_hamiltonian(cfg)?;
    let d = ham.sum.num_qubits();
    let (o, o_sum) = load_observable(cfg, d)?;
    let rho = load_state(cfg, d)?;
    let method = cfg
        .method
        .as_deref()
        .ok_or_else(|| Error::parse("a method is required"))?;
    let params = &ham.ordered_terms;
    let (non_identity, identity_positions) = split_identity(params);
    let max_subgroup = cfg.max_subgroup.unwrap_or(crate::group::DEFAULT_MAX_SUBGROUP);
    let max_dla = cfg.max_dla.unwrap_or(crate::dla::DEFAULT_MAX_DLA_DIM);
    let seed = cfg.seed;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let rho_out = if ham.sum.is_empty() { rho.clone() } else { evolve(&ham.sum, &rho)? };
    let mut d_cache = DCache::new(&o, &rho_out);

    let mut report: GradientReport = match method {
        "subgroup" | "shadow" => {
            if non_identity.is_empty() {
                GradientReport::new(method, &[], Vec::new())
            } else {
                let labels: Vec<PauliLabel> = non_identity.iter().map(|(l, _)| *l).collect();
                let (basis, expanded) = subgroup_for(&labels, max_subgroup)?;
                let mut rep = if method == "subgroup" {
                    let mut d_values = BTreeMap::new();
                    for label in basis.elements() {
                        d_values.insert(*label, d_cache.get(label)?);
                    }
                    subgroup_gradient(&basis, &non_identity, &d_values)?
                } else {
                    let n = cfg.shadow_n.unwrap_or(DEFAULT_SHADOW_N);
                    let groups = cfg.shadow_groups.unwrap_or(DEFAULT_SHADOW_GROUPS);
                    let stage = match cfg.shadow_shots {
                        Some(shots) => SecondStage::Shots(shots),
                        None => SecondStage::Exact,
                    };
                    let keep = cfg.dump_shadows.is_some();
                    let (rep, records) = shadow_gradient(
                        &o,
                        &rho,
                        &basis,
                        &non_identity,
                        n,
                        groups,
                        stage,
                        &mut rng,
                        keep,
                    )?;
                    if let (Some(path), Some(records)) = (&cfg.dump_shadows, records) {
                        let mut text = String::new();
                        for record in &records {
                            text.push_str(&io::shadow_record_to_line(record));
                            text.push('\n');
                        }
                        std::fs::write(path, text)?;
                    }
                    rep
                };
                rep.diagnostics.expanded_to_generated_subgroup = Some(expanded);
                rep
            }
        }
        "series" | "truncated" => {
            let k = cfg.truncation_k.unwrap_or(DEFAULT_TRUNCATION_K);
            let mut gradient = Vec::with_capacity(params.len());
            for (label, _) in params {
                let value = series_partial(&ham.sum, label, k, &mut |l: &PauliLabel| {
                    d_cache.get(l)
                })?;
                gradient.push(value);
            }
            let mut rep = GradientReport::new(method, params, gradient);
            rep.diagnostics.truncation_k = Some(k);
            if method == "truncated" {
                let bound = epsilon_k_bound(k, params.len(), operator_norm(&o)?);
                rep.diagnostics.epsilon_k = bound.is_finite().then_some(bound);
            }
            rep
        }
        "poisson" => {
            let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
            let mut gradient = Vec::with_capacity(params.len());
            let mut stderr = Vec::with_capacity(params.len());
            for (label, _) in params {
                let (mean, se) = poisson_gradient(
                    &ham.sum,
                    label,
                    &mut |l: &PauliLabel| d_cache.get(l),
                    samples,
                    &mut rng,
                )?;
                gradient.push(mean);
                stderr.push(se);
            }
            let mut rep = GradientReport::new("poisson", params, gradient);
            rep.diagnostics.samples = Some(samples);
            rep.diagnostics.stderr = Some(stderr);
            rep
        }
        "short-term" => {
            let mut d_values = BTreeMap::new();
            for (label, _) in params {
                d_values.insert(*label, d_cache.get(label)?);
            }
            short_term_gradient(params, &d_values, cfg.eps)?
        }
        "dla" => {
            let generators: Vec<PauliSum> = params
                .iter()
                .map(|(l, _)| PauliSum::single(*l, 1.0))
                .collect();
            let coeffs: Vec<f64> = params.iter().map(|(_, c)| *c).collect();
            let basis = build_dla(&generators, max_dla)?;
            dla_gradient(&o, &rho, &generators, &coeffs, &basis)?
        }
        other => {
            return Err(Error::parse(format!(
                "unknown method '{other}' (expected subgroup, dla, truncated, poisson, shadow, short-term, or series)"
            )))
        }
    };

    if matches!(method, "subgroup" | "shadow") {
        reassemble_gradient(&mut report, params, &identity_positions);
    }
    if matches!(method, "series" | "truncated" | "poisson" | "short-term") {
        report.d_values = d_cache.into_string_map();
    }
    report.diagnostics.seed = Some(seed);
    report.diagnostics.wall_time_ms = Some(started.elapsed().as_secs_f64() * 1e3);

    let mut doc = ResultDocument::new(cfg.clone());
    let _ = o_sum;
    doc.report = Some(report);
    doc.timing_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(doc)
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<ResultDocument> {
    let started = Instant::now();
    let ham = load_hamiltonian(cfg)?;
    let labels: Vec<PauliLabel> = ham.ordered_terms.iter().map(|(l, _)| *l).collect();
    let non_identity: Vec<PauliLabel> =
        labels.iter().filter(|l| !l.is_identity()).cloned().collect();
    let max_subgroup = cfg.max_subgroup.unwrap_or(crate::group::DEFAULT_MAX_SUBGROUP);
    let max_dla = cfg.max_dla.unwrap_or(crate::dla::DEFAULT_MAX_DLA_DIM);

    let closed = if non_identity.is_empty() { true } else { is_subgroup(&non_identity)? };
    let (generated_size, generated_blow_up) = if non_identity.is_empty() {
        (Some(0), None)
    } else {
        match generated_subgroup(&non_identity, max_subgroup) {
            Ok(basis) => (Some(basis.len()), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let (kappa, well_behaved) = index_complexity(&labels)?;
    let generators: Vec<PauliSum> = labels.iter().map(|l| PauliSum::single(*l, 1.0)).collect();
    let (dla_dim, dla_blow_up, dla_growth) = match build_dla(&generators, max_dla) {
        Ok(basis) => (Some(basis.dim()), None, basis.growth_trace().to_vec()),
        Err(e) => (None, Some(e.to_string()), Vec::new()),
    };
    let partition = compatibility_groups(&labels)?;
    let groups: Vec<Vec<String>> = partition
        .groups
        .iter()
        .map(|g| g.iter().map(|l| l.to_string()).collect())
        .collect();

    let mut doc = ResultDocument::new(cfg.clone());
    doc.analysis = Some(AnalysisReport {
        is_subgroup: closed,
        generated_size,
        generated_blow_up,
        index_complexity: kappa,
        well_behaved_indices: well_behaved,
        dla_dim,
        dla_blow_up,
        dla_growth,
        compatibility_group_count: groups.len(),
        compatibility_groups: groups,
    });
    doc.timing_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(doc)
}

/// Transverse-field-Ising parameter labels: nearest-neighbour ZZ pairs then
/// single-site X terms, on an open chain.
pub fn tfim_labels(d: usize) -> Vec<PauliLabel> {
    crate::dla::tfim_generators(d)
        .iter()
        .map(|g| *g.labels().next().unwrap())
        .collect()
}

/// One row of the truncation sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub d: usize,
    pub k: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Truncation-error sweep over TFIM-style Hamiltonians with random
/// coefficients and random unit-HS observables: for each qubit count and each
/// truncation order up to `k_max`, the norm distance between the truncated
/// gradient and the exact (matrix-method) gradient, averaged over trials.
pub fn truncation_sweep(
    d_values: &[usize],
    k_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if d_values.is_empty() || trials == 0 {
        return Err(Error::structural("sweep needs qubit counts and a positive trial count"));
    }
    let mut rows = Vec::new();
    for &d in d_values {
        let labels = tfim_labels(d);
        let p = labels.len();
        // errors[k][trial]
        let mut errors = vec![vec![0.0f64; trials]; k_max + 1];
        for trial in 0..trials {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(((d as u64) << 32) | trial as u64);
            let coeffs: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let params: Vec<(PauliLabel, f64)> =
                labels.iter().cloned().zip(coeffs.iter().cloned()).collect();
            let hamiltonian = PauliSum::from_terms(d, params.iter().cloned())?;
            let o = materialize(&random_observable(d, &mut rng))?;
            let rho = crate::sim::random_density(d, &mut rng);
            let rho_out = evolve(&hamiltonian, &rho)?;
            let mut d_cache = DCache::new(&o, &rho_out);

            // exact reference via the closed-form kernel on the generated subgroup
            let (basis, _) = subgroup_for(&labels, crate::group::DEFAULT_MAX_SUBGROUP)?;
            let mut d_map = BTreeMap::new();
            for label in basis.elements() {
                d_map.insert(*label, d_cache.get(label)?);
            }
            let exact = subgroup_gradient(&basis, &params, &d_map)?.gradient;

            // truncated estimates for every order in one pass per parameter
            let mut per_k = vec![vec![0.0f64; p]; k_max + 1];
            for (r, (label, _)) in params.iter().enumerate() {
                let prefix = crate::gradient::series_prefix_sums(
                    &hamiltonian,
                    label,
                    k_max,
                    &mut |l: &PauliLabel| d_cache.get(l),
                )?;
                for (k, value) in prefix.iter().enumerate() {
                    per_k[k][r] = *value;
                }
            }
            for k in 0..=k_max {
                let err: f64 = per_k[k]
                    .iter()
                    .zip(exact.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                errors[k][trial] = err;
            }
        }
        for (k, errs) in errors.iter().enumerate() {
            let mean: f64 = errs.iter().sum::<f64>() / trials as f64;
            let var: f64 =
                errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / trials as f64;
            rows.push(SweepRow { d, k, mean_error: mean, std_error: var.sqrt(), trials });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("d,K,mean_error,std_error,trials\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:.12e},{:.12e},{}\n",
            row.d, row.k, row.mean_error, row.std_error, row.trials
        ));
    }
    out
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    let d_values = cfg
        .sweep_d
        .clone()
        .ok_or_else(|| Error::parse("sweep needs a list of qubit counts"))?;
    let k_max = cfg.sweep_k_max.unwrap_or(40);
    let trials = cfg.trials.unwrap_or(10);
    let rows = truncation_sweep(&d_values, k_max, trials, cfg.seed)?;
    Ok(sweep_csv(&rows))
}
