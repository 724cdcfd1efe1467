//! Text formats: Pauli-sum files, dense matrix/vector files, state specs, and
//! the shadow record dump.
//!
//! A Pauli-sum file has one `<coefficient> <word>` pair per line; `#` starts a
//! comment and blank lines are skipped. Dense files start with `dense <dim>`
//! (square matrix) or `vector <dim>`, followed by whitespace-separated `re,im`
//! entries, row by row.

use crate::clifford::CliffordElement;
use crate::error::{Error, Result};
use crate::pauli::{PauliLabel, PauliSum, PhasedPauli};
use crate::shadow::{ShadowKind, ShadowRecord};
use crate::sim::StateSpec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Parsed Pauli-sum file: the sum plus the terms in file order (the parameter
/// order every downstream report preserves).
#[derive(Clone, Debug)]
pub struct PauliSumFile {
    pub sum: PauliSum,
    pub ordered_terms: Vec<(PauliLabel, f64)>,
}

pub fn parse_pauli_sum(text: &str) -> Result<PauliSumFile> {
    let mut ordered: Vec<(PauliLabel, f64)> = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let coeff_text = parts.next().unwrap();
        let word_text = parts.next().ok_or_else(|| {
            Error::parse(format!("line {}: expected '<coefficient> <word>'", lineno + 1))
        })?;
        if parts.next().is_some() {
            return Err(Error::parse(format!(
                "line {}: trailing content after the Pauli word",
                lineno + 1
            )));
        }
        let coeff: f64 = coeff_text.parse().map_err(|_| {
            Error::parse(format!("line {}: bad coefficient '{coeff_text}'", lineno + 1))
        })?;
        if !coeff.is_finite() {
            return Err(Error::parse(format!(
                "line {}: coefficient must be finite",
                lineno + 1
            )));
        }
        let label = PauliLabel::parse(word_text)
            .map_err(|e| Error::parse(format!("line {}: {e}", lineno + 1)))?;
        match width {
            None => width = Some(label.num_qubits()),
            Some(w) if w == label.num_qubits() => {}
            Some(w) => {
                return Err(Error::parse(format!(
                    "line {}: word '{word_text}' has length {}, expected {w}",
                    lineno + 1,
                    label.num_qubits()
                )))
            }
        }
        if ordered.iter().any(|(l, _)| l == &label) {
            return Err(Error::parse(format!(
                "line {}: duplicate term '{word_text}'",
                lineno + 1
            )));
        }
        ordered.push((label, coeff));
    }
    let d = width.ok_or_else(|| Error::parse("file holds no terms"))?;
    let sum = PauliSum::from_terms(d, ordered.iter().cloned())?;
    Ok(PauliSumFile { sum, ordered_terms: ordered })
}

pub fn format_pauli_sum(terms: &[(PauliLabel, f64)]) -> String {
    let mut out = String::new();
    for (label, coeff) in terms {
        out.push_str(&format!("{coeff:.17} {label}\n"));
    }
    out
}

fn parse_complex(token: &str, lineno: usize) -> Result<Complex64> {
    let (re_text, im_text) = token.split_once(',').ok_or_else(|| {
        Error::parse(format!("line {lineno}: entry '{token}' is not 're,im'"))
    })?;
    let re: f64 = re_text
        .parse()
        .map_err(|_| Error::parse(format!("line {lineno}: bad real part '{re_text}'")))?;
    let im: f64 = im_text
        .parse()
        .map_err(|_| Error::parse(format!("line {lineno}: bad imaginary part '{im_text}'")))?;
    Ok(Complex64::new(re, im))
}

/// Contents of a dense-format file.
pub enum DenseFile {
    Matrix(DMatrix<Complex64>),
    Vector(DVector<Complex64>),
}

pub fn parse_dense(text: &str) -> Result<DenseFile> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse("empty dense file"))?;
    let mut head = header.split_whitespace();
    let kind = head.next().unwrap_or("");
    let dim: usize = head
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(format!("bad dense header '{header}'")))?;
    if head.next().is_some() {
        return Err(Error::parse(format!("bad dense header '{header}'")));
    }
    let mut entries: Vec<Complex64> = Vec::new();
    for (lineno, line) in lines {
        for token in line.split_whitespace() {
            entries.push(parse_complex(token, lineno + 1)?);
        }
    }
    match kind {
        "dense" => {
            if entries.len() != dim * dim {
                return Err(Error::parse(format!(
                    "dense matrix needs {} entries, found {}",
                    dim * dim,
                    entries.len()
                )));
            }
            Ok(DenseFile::Matrix(DMatrix::from_row_slice(dim, dim, &entries)))
        }
        "vector" => {
            if entries.len() != dim {
                return Err(Error::parse(format!(
                    "vector needs {dim} entries, found {}",
                    entries.len()
                )));
            }
            Ok(DenseFile::Vector(DVector::from_vec(entries)))
        }
        other => Err(Error::parse(format!("unknown dense header kind '{other}'"))),
    }
}

pub fn format_dense_matrix(mat: &DMatrix<Complex64>) -> String {
    let mut out = format!("dense {}\n", mat.nrows());
    for j in 0..mat.nrows() {
        let row: Vec<String> = (0..mat.ncols())
            .map(|k| format!("{:.17},{:.17}", mat[(j, k)].re, mat[(j, k)].im))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parse a `--state` argument: `mixed`, a bitstring, or a dense/vector file's
/// contents (the caller resolves paths to text).
pub fn parse_state_spec(arg: &str, file_text: Option<&str>) -> Result<StateSpec> {
    if arg == "mixed" {
        return Ok(StateSpec::MaximallyMixed);
    }
    if !arg.is_empty() && arg.chars().all(|c| c == '0' || c == '1') {
        return Ok(StateSpec::Basis(arg.to_string()));
    }
    let text = file_text.ok_or_else(|| {
        Error::parse(format!(
            "state '{arg}' is neither 'mixed' nor a bitstring and no file was readable"
        ))
    })?;
    match parse_dense(text)? {
        DenseFile::Matrix(m) => Ok(StateSpec::Density(m)),
        DenseFile::Vector(v) => Ok(StateSpec::Vector(v)),
    }
}

fn bits_to_hex(bits: &[bool]) -> String {
    let mut out = String::with_capacity(bits.len().div_ceil(4));
    for chunk in bits.chunks(4) {
        let mut nibble = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            if b {
                nibble |= 1 << (3 - i);
            }
        }
        out.push(char::from_digit(nibble as u32, 16).unwrap());
    }
    out
}

fn hex_to_bits(text: &str, want: usize) -> Result<Vec<bool>> {
    let mut bits = Vec::with_capacity(text.len() * 4);
    for c in text.chars() {
        let nibble = c
            .to_digit(16)
            .ok_or_else(|| Error::parse(format!("bad hex character '{c}'")))?;
        for i in 0..4 {
            bits.push((nibble >> (3 - i)) & 1 == 1);
        }
    }
    if bits.len() < want || bits.len() - want >= 4 {
        return Err(Error::parse(format!(
            "hex field holds {} bits, expected {want}",
            bits.len()
        )));
    }
    bits.truncate(want);
    Ok(bits)
}

/// Dump line: `tableau-hex phasebits-hex outcome-bits`. Tableau rows are the d
/// X-images then the d Z-images, each row 2d bits (sym0 then sym1).
pub fn shadow_record_to_line(record: &ShadowRecord) -> String {
    let d = record.num_qubits();
    let mut tableau_bits = Vec::with_capacity(4 * d * d);
    let mut phase_bits = Vec::with_capacity(2 * d);
    let images = (0..d)
        .map(|j| record.clifford.x_image(j))
        .chain((0..d).map(|j| record.clifford.z_image(j)));
    for img in images {
        for j in 0..d {
            tableau_bits.push((img.label.sym0() >> j) & 1 == 1);
        }
        for j in 0..d {
            tableau_bits.push((img.label.sym1() >> j) & 1 == 1);
        }
        phase_bits.push(img.phase_exp == 2);
    }
    format!(
        "{} {} {}",
        bits_to_hex(&tableau_bits),
        bits_to_hex(&phase_bits),
        record.outcome_string()
    )
}

pub fn shadow_record_from_line(line: &str, kind: ShadowKind) -> Result<ShadowRecord> {
    let mut parts = line.split_whitespace();
    let (tab, phase, outcome) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), Some(c), None) => (a, b, c),
        _ => return Err(Error::parse("shadow dump line needs three fields")),
    };
    let d = outcome.len();
    if d == 0 || d > 64 {
        return Err(Error::parse("bad outcome field"));
    }
    let tableau_bits = hex_to_bits(tab, 4 * d * d)?;
    let phase_bits = hex_to_bits(phase, 2 * d)?;
    let mut images = Vec::with_capacity(2 * d);
    for row in 0..2 * d {
        let bits = &tableau_bits[row * 2 * d..(row + 1) * 2 * d];
        let word: Vec<u8> = (0..d)
            .map(|j| {
                let s0 = u8::from(bits[j]);
                let s1 = u8::from(bits[d + j]);
                (s0 << 1) | s1
            })
            .collect();
        images.push(PhasedPauli::new(
            if phase_bits[row] { 2 } else { 0 },
            PauliLabel::from_word(&word)?,
        ));
    }
    let z_images = images.split_off(d);
    let clifford = CliffordElement::from_images(images, z_images)?;
    let mut bits = 0u64;
    for (j, c) in outcome.chars().enumerate() {
        match c {
            '0' => {}
            '1' => bits |= 1 << (d - 1 - j),
            other => return Err(Error::parse(format!("bad outcome character '{other}'"))),
        }
    }
    Ok(ShadowRecord { kind, clifford, outcome: bits })
}
