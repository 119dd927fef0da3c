//! The wedge-lifted code as a concrete linear code, and its binary trace code.
//!
//! Coordinates are points of `F_q²` in row-major order, `x·q + y`. The
//! parity checks are 0/1 indicator rows of wedge point sets, one per
//! (coset, apex) pair. Because every coset has odd size and the field has
//! characteristic 2, a wedge's line-sum collapses to its point-set sum, so
//! the same rows check the `F_q` code and its binary trace.

use std::fmt::Debug;
use std::io::Write;
use std::ops::{BitXor, BitXorAssign};
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{is_bad_coset_criterion, Monomial};
use crate::field::{CosetFamily, FieldElement, FieldSpec};
use crate::linalg::{BitBasis, BitMatrix, FqBasis, FqMatrix};

/// Largest `q` for which matrices are materialized at all.
pub const MAX_MATERIALIZED_Q: usize = 256;

/// Default cap on the bit-packed parity-check matrix.
pub const DEFAULT_MAX_MATRIX_BYTES: u128 = 1 << 30;

/// Above this `q` the `F_q` elimination cross-check of the rank is skipped.
const FQ_RANK_CROSSCHECK_MAX_Q: usize = 16;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("parity-check matrix needs {needed} bytes, over the {limit}-byte guard; use dimension-only mode")]
    ResourceGuard { needed: u128, limit: u128 },
    #[error("q = {q} is too large to materialize (max {MAX_MATERIALIZED_Q})")]
    TooLarge { q: usize },
    #[error("message length {got} does not match code dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("malformed matrix file: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A codeword symbol: anything that adds by XOR.
pub trait Symbol:
    Copy + Default + PartialEq + Debug + Send + Sync + BitXor<Output = Self> + BitXorAssign
{
}

impl Symbol for FieldElement {}
impl Symbol for bool {}

/// `x^a y^b` at every point, row-major, with `0^0 = 1`.
pub fn eval_monomial(field: &FieldSpec, m: Monomial) -> Vec<FieldElement> {
    let xs: Vec<FieldElement> = field.elements().map(|v| field.pow(v, m.a as u64)).collect();
    let ys: Vec<FieldElement> = field.elements().map(|v| field.pow(v, m.b as u64)).collect();
    xs.iter()
        .flat_map(|&xa| ys.iter().map(move |&yb| (xa, yb)))
        .map(|(xa, yb)| field.mul(xa, yb))
        .collect()
}

/// Coefficients `c[a·q + b]` of the unique polynomial of per-variable degree
/// below `q` whose evaluation is `word`.
pub fn interpolate(field: &FieldSpec, word: &[FieldElement]) -> Vec<FieldElement> {
    let q = field.q();
    assert_eq!(word.len(), q * q);
    // pow[v][e] = v^e, 0^0 = 1
    let pow: Vec<Vec<FieldElement>> = field
        .elements()
        .map(|v| (0..q as u64).map(|e| field.pow(v, e)).collect())
        .collect();
    // f(X) = f(0) + Σ_{k≥1} X^k Σ_v f(v) v^(q-1-k)
    let univariate = |f: &dyn Fn(usize) -> FieldElement| -> Vec<FieldElement> {
        let mut c = vec![FieldElement::ZERO; q];
        c[0] = f(0);
        for (k, ck) in c.iter_mut().enumerate().skip(1) {
            *ck = (0..q).fold(FieldElement::ZERO, |acc, v| {
                acc + field.mul(f(v), pow[v][q - 1 - k])
            });
        }
        c
    };
    // along y for each x, then along x for each b
    let by_x: Vec<Vec<FieldElement>> = (0..q).map(|x| univariate(&|y| word[x * q + y])).collect();
    let mut out = vec![FieldElement::ZERO; q * q];
    for b in 0..q {
        let col = univariate(&|x| by_x[x][b]);
        for (a, v) in col.into_iter().enumerate() {
            out[a * q + b] = v;
        }
    }
    out
}

/// Sorted coordinate indices of the wedge with apex `point` and `slopes`.
pub fn wedge_indices(field: &FieldSpec, slopes: &[FieldElement], point: usize) -> Vec<usize> {
    let q = field.q();
    let (x, y) = (FieldElement((point / q) as u32), FieldElement((point % q) as u32));
    let mut out = Vec::with_capacity(slopes.len() * (q - 1) + 1);
    out.push(point);
    for t in field.elements().filter(|&t| t != x) {
        let row = t.value() as usize * q;
        for &alpha in slopes {
            out.push(row + (field.mul(alpha, t + x) + y).value() as usize);
        }
    }
    out.sort_unstable();
    out
}

/// Every wedge parity check applied to `word`, ordered coset-major then by
/// apex coordinate. Computed from line sums: the line of slope `α` through
/// `(x, y)` is the line `Y = αT + (αx + y)`.
pub fn wedge_syndrome<S: Symbol>(family: &CosetFamily, word: &[S]) -> Vec<S> {
    let field = family.field();
    let q = field.q();
    assert_eq!(word.len(), q * q);
    // line_sums[(α-1)·q + β] = Σ_T word(T, αT + β)
    let line_sums: Vec<S> = (1..q as u32)
        .into_par_iter()
        .flat_map_iter(|alpha| {
            let alpha = FieldElement(alpha);
            let mut sums = vec![S::default(); q];
            for t in field.elements() {
                let at = field.mul(alpha, t);
                let row = &word[t.value() as usize * q..][..q];
                for (beta, s) in sums.iter_mut().enumerate() {
                    *s ^= row[(at.value() as usize) ^ beta];
                }
            }
            sums
        })
        .collect();
    family
        .cosets()
        .iter()
        .flat_map(|coset| {
            let line_sums = &line_sums;
            (0..q * q).into_par_iter().map(move |p| {
                let (x, y) = (FieldElement((p / q) as u32), FieldElement((p % q) as u32));
                coset.iter().fold(S::default(), |acc, &alpha| {
                    let beta = (field.mul(alpha, x) + y).value() as usize;
                    acc ^ line_sums[(alpha.value() as usize - 1) * q + beta]
                })
            })
            .collect::<Vec<S>>()
        })
        .collect()
}

/// The `(𝓗, q)` wedge-lifted code.
#[derive(Debug, Clone)]
pub struct WedgeLiftedCode {
    field: Arc<FieldSpec>,
    family: CosetFamily,
    good_monomials: Vec<Monomial>,
    bad_count: usize,
    parity_checks: BitMatrix,
    rank: usize,
    exact_dimension: usize,
    extension: OnceLock<Vec<Vec<FieldElement>>>,
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub max_matrix_bytes: u128,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_matrix_bytes: DEFAULT_MAX_MATRIX_BYTES,
        }
    }
}

pub fn build_code(family: &CosetFamily) -> Result<WedgeLiftedCode, CodeError> {
    build_code_with(family, BuildOptions::default())
}

fn parity_matrix_guard(family: &CosetFamily, limit: u128) -> Result<(), CodeError> {
    let q = family.field().q();
    if q > MAX_MATERIALIZED_Q {
        return Err(CodeError::TooLarge { q });
    }
    let needed = BitMatrix::footprint(family.count() * q * q, q * q);
    if needed > limit {
        return Err(CodeError::ResourceGuard { needed, limit });
    }
    Ok(())
}

pub fn build_code_with(
    family: &CosetFamily,
    opts: BuildOptions,
) -> Result<WedgeLiftedCode, CodeError> {
    parity_matrix_guard(family, opts.max_matrix_bytes)?;
    let field = Arc::clone(family.field());
    let q = field.q();
    let n = q * q;

    let parity_checks = BitMatrix::from_row_fn(family.count() * n, n, |r, row| {
        let coset = &family.cosets()[r / n];
        for c in wedge_indices(&field, coset, r % n) {
            row[c / 64] |= 1 << (c % 64);
        }
    });
    let rank = parity_checks.rank();
    if q <= FQ_RANK_CROSSCHECK_MAX_Q {
        let fq_rank = FqMatrix::from_bits(&parity_checks).rank(&field);
        if fq_rank != rank {
            return Err(CodeError::Invariant(format!(
                "F_q rank {fq_rank} differs from GF(2) rank {rank}"
            )));
        }
    }
    let exact_dimension = n - rank;

    let h = family.subgroup_order() as u64;
    let (good_monomials, bad): (Vec<Monomial>, Vec<Monomial>) = Monomial::all(q)
        .partition(|&m| !is_bad_coset_criterion(m, h, field.ell()));

    let violation = good_monomials.par_iter().find_any(|&&m| {
        let word = eval_monomial(&field, m);
        wedge_syndrome(family, &word).iter().any(|s| !s.is_zero())
    });
    if let Some(m) = violation {
        return Err(CodeError::Invariant(format!(
            "good monomial {m:?} is not in the kernel of the wedge checks"
        )));
    }
    if exact_dimension < good_monomials.len() {
        return Err(CodeError::Invariant(format!(
            "dimension {exact_dimension} below good-monomial count {}",
            good_monomials.len()
        )));
    }

    Ok(WedgeLiftedCode {
        field,
        family: family.clone(),
        good_monomials,
        bad_count: bad.len(),
        parity_checks,
        rank,
        exact_dimension,
        extension: OnceLock::new(),
    })
}

/// Dimension without keeping the parity-check matrix: rows are streamed
/// into an incremental GF(2) basis.
pub fn code_dimension(family: &CosetFamily) -> Result<usize, CodeError> {
    let field = family.field();
    let q = field.q();
    if q > MAX_MATERIALIZED_Q {
        return Err(CodeError::TooLarge { q });
    }
    let n = q * q;
    let mut basis = BitBasis::new(n);
    let words = n.div_ceil(64);
    for coset in family.cosets() {
        for p in 0..n {
            let mut row = vec![0u64; words];
            for c in wedge_indices(field, coset, p) {
                row[c / 64] |= 1 << (c % 64);
            }
            basis.insert(row);
        }
    }
    Ok(n - basis.rank())
}

impl WedgeLiftedCode {
    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn family(&self) -> &CosetFamily {
        &self.family
    }

    /// Block length `N = q²`.
    pub fn length(&self) -> usize {
        self.field.q() * self.field.q()
    }

    pub fn good_monomials(&self) -> &[Monomial] {
        &self.good_monomials
    }

    pub fn bad_count(&self) -> usize {
        self.bad_count
    }

    /// 0/1 indicator rows of every wedge point set.
    pub fn parity_checks(&self) -> &BitMatrix {
        &self.parity_checks
    }

    pub fn parity_rank(&self) -> usize {
        self.rank
    }

    pub fn exact_dimension(&self) -> usize {
        self.exact_dimension
    }

    /// `N - K`.
    pub fn redundancy(&self) -> usize {
        self.length() - self.exact_dimension
    }

    /// Number of disjoint repair groups, `|𝓗|`.
    pub fn t(&self) -> usize {
        self.family.count()
    }

    /// The rows of [`basis`](Self::basis).
    pub fn generator_matrix(&self) -> Result<FqMatrix, CodeError> {
        Ok(FqMatrix::from_rows(self.length(), self.basis()?))
    }

    /// Parity checks applied to `word`, via line sums.
    pub fn syndrome<S: Symbol>(&self, word: &[S]) -> Vec<S> {
        wedge_syndrome(&self.family, word)
    }

    pub fn is_codeword<S: Symbol>(&self, word: &[S]) -> bool {
        self.syndrome(word).iter().all(|s| *s == S::default())
    }

    /// `message · basis`: good monomials first, then the extension vectors.
    pub fn encode(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        if message.len() != self.exact_dimension {
            return Err(CodeError::LengthMismatch {
                expected: self.exact_dimension,
                got: message.len(),
            });
        }
        let f = &self.field;
        let q = f.q();
        let (head, tail) = message.split_at(self.good_monomials.len());
        let mut word = vec![FieldElement::ZERO; self.length()];
        for (&coef, v) in tail.iter().zip(self.extension()?) {
            if !coef.is_zero() {
                for (w, &x) in word.iter_mut().zip(v) {
                    *w += f.mul(coef, x);
                }
            }
        }
        for (&coef, &m) in head.iter().zip(&self.good_monomials) {
            if coef.is_zero() {
                continue;
            }
            let xs: Vec<FieldElement> = f.elements().map(|v| f.mul(coef, f.pow(v, m.a as u64))).collect();
            let ys: Vec<FieldElement> = f.elements().map(|v| f.pow(v, m.b as u64)).collect();
            for (x, &xa) in xs.iter().enumerate() {
                for (y, &yb) in ys.iter().enumerate() {
                    word[x * q + y] += f.mul(xa, yb);
                }
            }
        }
        Ok(word)
    }

    pub fn descriptor(&self) -> CodeDescriptor {
        CodeDescriptor {
            ell: self.field.ell(),
            modulus: self.field.modulus(),
            subgroup_order: self.family.subgroup_order(),
            coordinate_order: COORDINATE_ORDER.to_string(),
        }
    }

    /// Good-monomial evaluations extended to a basis of the whole code with
    /// kernel vectors, when the good monomials fall short of the dimension.
    ///
    /// A vector lies in the span of the good monomials iff its interpolation
    /// coefficients vanish on every bad monomial, so kernel vectors are
    /// added while their bad-monomial coefficients stay independent.
    pub fn basis(&self) -> Result<Vec<Vec<FieldElement>>, CodeError> {
        let mut basis: Vec<Vec<FieldElement>> = self
            .good_monomials
            .par_iter()
            .map(|&m| eval_monomial(&self.field, m))
            .collect();
        basis.extend(self.extension()?.iter().cloned());
        Ok(basis)
    }

    /// Kernel vectors completing the good monomials to a basis. Computed
    /// on first use.
    pub fn extension(&self) -> Result<&[Vec<FieldElement>], CodeError> {
        if let Some(ext) = self.extension.get() {
            return Ok(ext);
        }
        let ext = self.compute_extension()?;
        Ok(self.extension.get_or_init(|| ext))
    }

    fn compute_extension(&self) -> Result<Vec<Vec<FieldElement>>, CodeError> {
        let mut ext = Vec::new();
        let gap = self.exact_dimension - self.good_monomials.len();
        if gap == 0 {
            return Ok(ext);
        }
        let q = self.field.q();
        let h = self.family.subgroup_order() as u64;
        let bad: Vec<usize> = Monomial::all(q)
            .filter(|&m| is_bad_coset_criterion(m, h, self.field.ell()))
            .map(|m| m.a as usize * q + m.b as usize)
            .collect();
        let mut residuals = FqBasis::new(bad.len());
        let kernel = self.parity_checks.kernel_basis();
        let mut added = 0;
        for r in 0..kernel.rows() {
            let v: Vec<FieldElement> = kernel
                .row_bools(r)
                .into_iter()
                .map(|b| FieldElement(b as u32))
                .collect();
            let coeffs = interpolate(&self.field, &v);
            let residual = bad.iter().map(|&i| coeffs[i]).collect();
            if residuals.insert(&self.field, residual) {
                ext.push(v);
                added += 1;
                if added == gap {
                    return Ok(ext);
                }
            }
        }
        Err(CodeError::Invariant(format!(
            "kernel supplied only {added} of {gap} vectors beyond the good monomials"
        )))
    }
}

/// Binary code `tr₂(𝓒)`.
#[derive(Debug, Clone)]
pub struct BinaryTraceCode<'a> {
    parent: &'a WedgeLiftedCode,
    binary_generators: BitMatrix,
}

/// Spans `{tr₂(β·g)}` over a basis `g` of the code and the polynomial basis
/// `β` of `F_q`, then row-reduces over GF(2).
pub fn trace_code(code: &WedgeLiftedCode) -> Result<BinaryTraceCode<'_>, CodeError> {
    let field = code.field();
    let n = code.length();
    let trace = field.trace_table();
    let betas = field.polynomial_basis();
    let basis = code.basis()?;
    let rows: Vec<Vec<u64>> = basis
        .par_iter()
        .flat_map_iter(|g| {
            let trace = &trace;
            betas.iter().map(move |&beta| {
                let mut row = vec![0u64; n.div_ceil(64)];
                for (i, &v) in g.iter().enumerate() {
                    if trace[field.mul(beta, v).value() as usize] == 1 {
                        row[i / 64] |= 1 << (i % 64);
                    }
                }
                row
            })
        })
        .collect();
    let mut span = BitBasis::new(n);
    for row in rows {
        span.insert(row);
    }
    let (binary_generators, _) = span.into_rref();
    let tc = BinaryTraceCode {
        parent: code,
        binary_generators,
    };
    let (k, kb, ell) = (code.exact_dimension(), tc.binary_dimension(), field.ell() as usize);
    if !(k <= kb && kb <= ell * k) {
        return Err(CodeError::Invariant(format!(
            "Delsarte bounds fail: {k} <= {kb} <= {}",
            ell * k
        )));
    }
    let bad_row = (0..tc.binary_generators.rows())
        .into_par_iter()
        .find_any(|&r| !code.is_codeword(&tc.binary_generators.row_bools(r)));
    if let Some(r) = bad_row {
        return Err(CodeError::Invariant(format!(
            "binary generator {r} fails a wedge parity"
        )));
    }
    Ok(tc)
}

impl<'a> BinaryTraceCode<'a> {
    pub fn parent(&self) -> &'a WedgeLiftedCode {
        self.parent
    }

    /// Row-reduced GF(2) generators.
    pub fn generators(&self) -> &BitMatrix {
        &self.binary_generators
    }

    pub fn binary_dimension(&self) -> usize {
        self.binary_generators.rows()
    }

    pub fn redundancy(&self) -> usize {
        self.parent.length() - self.binary_dimension()
    }

    /// XOR of the generators selected by `message`.
    pub fn encode(&self, message: &[bool]) -> Result<Vec<bool>, CodeError> {
        if message.len() != self.binary_dimension() {
            return Err(CodeError::LengthMismatch {
                expected: self.binary_dimension(),
                got: message.len(),
            });
        }
        let n = self.parent.length();
        let mut acc = vec![0u64; n.div_ceil(64)];
        for (r, _) in message.iter().enumerate().filter(|(_, &b)| b) {
            for (a, w) in acc.iter_mut().zip(self.binary_generators.row(r)) {
                *a ^= *w;
            }
        }
        Ok((0..n).map(|i| (acc[i / 64] >> (i % 64)) & 1 == 1).collect())
    }
}

pub const COORDINATE_ORDER: &str = "row-major-poly-basis";

/// JSON descriptor sufficient to rebuild a code bit-for-bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeDescriptor {
    pub ell: u32,
    pub modulus: u32,
    pub subgroup_order: usize,
    pub coordinate_order: String,
}

fn write_header<W: Write>(out: &mut W, q: usize, rows: usize, cols: usize) -> std::io::Result<()> {
    writeln!(out, "# q={q} rows={rows} cols={cols}")
}

/// Text export: header line, then one row per line of space-separated
/// lowercase hex entries.
pub fn write_fq_matrix<W: Write>(out: &mut W, q: usize, m: &FqMatrix) -> std::io::Result<()> {
    write_header(out, q, m.rows(), m.cols())?;
    let mut line = String::new();
    for r in 0..m.rows() {
        line.clear();
        for (i, v) in m.row(r).iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:x}", v.value()));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Same format for a 0/1 matrix; `q` only labels the header.
pub fn write_bit_matrix<W: Write>(out: &mut W, q: usize, m: &BitMatrix) -> std::io::Result<()> {
    write_header(out, q, m.rows(), m.cols())?;
    let mut line = String::with_capacity(2 * m.cols());
    for r in 0..m.rows() {
        line.clear();
        for c in 0..m.cols() {
            if c > 0 {
                line.push(' ');
            }
            line.push(if m.get(r, c) { '1' } else { '0' });
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Parses the text export back into `(q, rows)`.
pub fn parse_matrix(text: &str) -> Result<(usize, Vec<Vec<u32>>), CodeError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CodeError::Parse("empty".into()))?;
    let field = |key: &str| -> Result<usize, CodeError> {
        header
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix(key))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CodeError::Parse(format!("header lacks {key}")))
    };
    let (q, rows, cols) = (field("q=")?, field("rows=")?, field("cols=")?);
    let data: Vec<Vec<u32>> = lines
        .map(|l| {
            l.split(' ')
                .map(|t| u32::from_str_radix(t, 16).map_err(|e| CodeError::Parse(e.to_string())))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    if data.len() != rows || data.iter().any(|r| r.len() != cols) {
        return Err(CodeError::Parse("shape does not match header".into()));
    }
    Ok((q, data))
}

/// Redundancy exponent of the `α = 1/(2d)` construction: `log_N` of
/// `t^{log₂(2 - 2^{-d})} √N` with `t = N^{1/(2d)}`.
pub fn redundancy_exponent(d: u32) -> f64 {
    0.5 + (2.0 - 0.5f64.powi(d as i32)).log2() / (2.0 * d as f64)
}
