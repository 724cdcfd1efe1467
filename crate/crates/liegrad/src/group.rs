//! Structural analysis of Pauli parameter sets: subgroup testing, generated
//! subgroups via GF(2) spans of the symplectic encodings, index complexity,
//! and commuting-group partitions for joint measurement.

use crate::error::{Error, Result};
use crate::pauli::PauliLabel;
use std::collections::HashMap;

/// Default guard against generated subgroups blowing up.
pub const DEFAULT_MAX_SUBGROUP: usize = 4096;

/// An ordered basis for the non-identity part of a subgroup of Pauli labels.
///
/// `elements` is sorted canonically (lexicographic on the symplectic bits) and
/// `index` inverts it; this ordering fixes the coordinate system of the
/// gradient-kernel matrix.
#[derive(Clone, Debug)]
pub struct SubgroupBasis {
    d: usize,
    generators: Vec<PauliLabel>,
    elements: Vec<PauliLabel>,
    index: HashMap<PauliLabel, usize>,
}

impl SubgroupBasis {
    pub fn num_qubits(&self) -> usize {
        self.d
    }

    /// GF(2)-independent generators extracted from the input set.
    pub fn generators(&self) -> &[PauliLabel] {
        &self.generators
    }

    /// All non-identity members of the generated subgroup, canonically ordered.
    pub fn elements(&self) -> &[PauliLabel] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, label: &PauliLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn contains(&self, label: &PauliLabel) -> bool {
        self.index.contains_key(label)
    }
}

fn check_uniform(labels: &[PauliLabel]) -> Result<usize> {
    let d = labels
        .first()
        .map(|l| l.num_qubits())
        .ok_or_else(|| Error::structural("empty label set"))?;
    if labels.iter().any(|l| l.num_qubits() != d) {
        return Err(Error::structural("labels have mixed qubit counts"));
    }
    Ok(d)
}

/// True iff `S` together with the identity is closed under the label product.
/// Labels are self-inverse, so pair closure is the whole subgroup test.
pub fn is_subgroup(labels: &[PauliLabel]) -> Result<bool> {
    check_uniform(labels)?;
    let set: std::collections::HashSet<PauliLabel> = labels.iter().cloned().collect();
    for a in &set {
        for b in &set {
            let p = a.circ(b);
            if !p.is_identity() && !set.contains(&p) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Pack the symplectic encoding into a single word (low half `sym0`).
pub(crate) fn pack(label: &PauliLabel) -> u128 {
    (label.sym0() as u128) | ((label.sym1() as u128) << 64)
}

pub(crate) fn unpack(bits: u128, d: usize) -> PauliLabel {
    let word: Vec<u8> = (0..d)
        .map(|j| {
            let s0 = ((bits >> j) & 1) as u8;
            let s1 = ((bits >> (64 + j)) & 1) as u8;
            (s0 << 1) | s1
        })
        .collect();
    PauliLabel::from_word(&word).unwrap()
}

/// GF(2) row reduction; returns an independent subset spanning the input.
pub(crate) fn gf2_independent(vectors: impl IntoIterator<Item = u128>) -> Vec<u128> {
    let mut pivots: Vec<u128> = Vec::new();
    for v in vectors {
        let mut x = v;
        for &p in &pivots {
            let lead = 127 - p.leading_zeros() as usize;
            if (x >> lead) & 1 == 1 {
                x ^= p;
            }
        }
        if x != 0 {
            pivots.push(x);
            // keep descending leading-bit order so reduction stays triangular
            pivots.sort_by_key(|p| p.leading_zeros());
        }
    }
    pivots
}

/// Smallest subgroup of labels containing `S`, computed as the GF(2) span of
/// the symplectic encodings. Errors with a blow-up diagnosis when the span
/// would exceed `max_size` non-identity elements.
pub fn generated_subgroup(labels: &[PauliLabel], max_size: usize) -> Result<SubgroupBasis> {
    let d = check_uniform(labels)?;
    let pivots = gf2_independent(labels.iter().map(pack));
    let rank = pivots.len();
    if rank >= 63 || (1u64 << rank) - 1 > max_size as u64 {
        return Err(Error::structural(format!(
            "subgroup blow-up: rank {rank} generates 2^{rank}-1 elements, limit {max_size}"
        )));
    }
    let generators: Vec<PauliLabel> = pivots.iter().map(|&p| unpack(p, d)).collect();
    let mut packed: Vec<u128> = Vec::with_capacity((1 << rank) - 1);
    for mask in 1u64..(1 << rank) {
        let mut acc = 0u128;
        for (i, &p) in pivots.iter().enumerate() {
            if (mask >> i) & 1 == 1 {
                acc ^= p;
            }
        }
        packed.push(acc);
    }
    let mut elements: Vec<PauliLabel> = packed.iter().map(|&p| unpack(p, d)).collect();
    elements.sort();
    elements.dedup();
    if elements.len() != (1usize << rank) - 1 {
        return Err(Error::structural(
            "subgroup enumeration produced duplicate elements",
        ));
    }
    let index: HashMap<PauliLabel, usize> =
        elements.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let basis = SubgroupBasis { d, generators, elements, index };
    verify_closure(&basis)?;
    Ok(basis)
}

/// Closure re-check on construction: full pairwise for small spans, element x
/// generator membership otherwise.
fn verify_closure(basis: &SubgroupBasis) -> Result<()> {
    let fail = |a: &PauliLabel, b: &PauliLabel| {
        Err(Error::structural(format!(
            "closure violation: {a} . {b} escaped the enumerated span"
        )))
    };
    if basis.len() <= 256 {
        for a in basis.elements() {
            for b in basis.elements() {
                let p = a.circ(b);
                if !p.is_identity() && !basis.contains(&p) {
                    return fail(a, b);
                }
            }
        }
    } else {
        for a in basis.elements() {
            for g in basis.generators() {
                let p = a.circ(g);
                if !p.is_identity() && !basis.contains(&p) {
                    return fail(a, g);
                }
            }
        }
    }
    Ok(())
}

/// Index complexity of a parameter set: position `j` is well behaved when all
/// non-identity symbols of `S` at `j` agree; kappa counts the rest.
pub fn index_complexity(labels: &[PauliLabel]) -> Result<(usize, Vec<usize>)> {
    let d = check_uniform(labels)?;
    let mut well_behaved = Vec::new();
    for j in 0..d {
        let mut seen: Option<u8> = None;
        let mut ok = true;
        for label in labels {
            let sym = label.symbol(j);
            if sym == 0 {
                continue;
            }
            match seen {
                None => seen = Some(sym),
                Some(prev) if prev == sym => {}
                Some(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            well_behaved.push(j);
        }
    }
    Ok((d - well_behaved.len(), well_behaved))
}

/// Partition of a label set into pairwise-commuting groups.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatibilityPartition {
    pub groups: Vec<Vec<PauliLabel>>,
}

impl CompatibilityPartition {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Greedy first-fit over the anticommutation graph, processed in canonical
/// label order; deterministic, not optimal.
pub fn compatibility_groups(labels: &[PauliLabel]) -> Result<CompatibilityPartition> {
    check_uniform(labels)?;
    let mut ordered: Vec<PauliLabel> = labels.to_vec();
    ordered.sort();
    ordered.dedup();
    let mut groups: Vec<Vec<PauliLabel>> = Vec::new();
    'outer: for label in ordered {
        for group in groups.iter_mut() {
            if group.iter().all(|member| member.commutes(&label)) {
                group.push(label);
                continue 'outer;
            }
        }
        groups.push(vec![label]);
    }
    Ok(CompatibilityPartition { groups })
}
