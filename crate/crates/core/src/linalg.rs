//! Dense linear algebra over GF(2) (bit-packed) and over GF(2^ℓ).

use std::fmt;

use rayon::prelude::*;

use crate::field::{FieldElement, FieldSpec};

const WORD: usize = 64;

fn words_for(cols: usize) -> usize {
    cols.div_ceil(WORD)
}

/// Bit-packed GF(2) matrix, row major.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix({}x{})", self.rows, self.cols)
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = words_for(cols);
        BitMatrix {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    /// One row per support list; each list holds the column indices set to 1.
    pub fn from_supports<I, S>(cols: usize, supports: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[usize]>,
    {
        let mut m = BitMatrix::zeros(0, cols);
        for s in supports {
            let mut row = vec![0u64; m.words];
            for &c in s.as_ref() {
                row[c / WORD] |= 1 << (c % WORD);
            }
            m.push_row(&row);
        }
        m
    }

    /// Builds every row in parallel; `fill(r, words)` sets the bits of row `r`.
    pub fn from_row_fn<F>(rows: usize, cols: usize, fill: F) -> Self
    where
        F: Fn(usize, &mut [u64]) + Sync,
    {
        let mut m = BitMatrix::zeros(rows, cols);
        if m.words > 0 {
            m.data
                .par_chunks_mut(m.words)
                .enumerate()
                .for_each(|(r, row)| fill(r, row));
        }
        m
    }

    /// Bytes a `rows x cols` matrix occupies.
    pub fn footprint(rows: usize, cols: usize) -> u128 {
        rows as u128 * words_for(cols) as u128 * 8
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn push_row(&mut self, row: &[u64]) {
        assert_eq!(row.len(), self.words);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.row(r)[c / WORD] >> (c % WORD)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.row_mut(r)[c / WORD];
        if v {
            *w |= 1 << (c % WORD);
        } else {
            *w &= !(1 << (c % WORD));
        }
    }

    /// Column indices of the ones in row `r`, ascending.
    pub fn support(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(r).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD + b)
            })
        })
    }

    pub fn row_bools(&self, r: usize) -> Vec<bool> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn rank(&self) -> usize {
        let mut basis = BitBasis::new(self.cols);
        for r in 0..self.rows {
            basis.insert(self.row(r).to_vec());
        }
        basis.rank()
    }

    /// Reduced row echelon form: the nonzero rows only, plus pivot columns.
    pub fn rref(&self) -> (BitMatrix, Vec<usize>) {
        let mut basis = BitBasis::new(self.cols);
        for r in 0..self.rows {
            basis.insert(self.row(r).to_vec());
        }
        basis.into_rref()
    }

    /// Basis of `{v : M v = 0}`, one vector per row.
    pub fn kernel_basis(&self) -> BitMatrix {
        let (rref, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut out = BitMatrix::zeros(0, self.cols);
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u64; self.words];
            v[free / WORD] |= 1 << (free % WORD);
            for (r, &p) in pivots.iter().enumerate() {
                if rref.get(r, free) {
                    v[p / WORD] |= 1 << (p % WORD);
                }
            }
            out.push_row(&v);
        }
        out
    }
}

/// Incrementally built GF(2) row space. Each stored vector's lowest set bit
/// is its pivot, and no two vectors share a pivot.
#[derive(Debug, Clone)]
pub struct BitBasis {
    cols: usize,
    words: usize,
    by_pivot: Vec<Option<Vec<u64>>>,
    rank: usize,
}

impl BitBasis {
    pub fn new(cols: usize) -> Self {
        BitBasis {
            cols,
            words: words_for(cols),
            by_pivot: vec![None; cols],
            rank: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn lowest_bit(v: &[u64], from_word: usize) -> Option<(usize, usize)> {
        v.iter()
            .enumerate()
            .skip(from_word)
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| (i, i * WORD + w.trailing_zeros() as usize))
    }

    /// Reduces `v` against the basis; returns true if it was independent.
    pub fn insert(&mut self, mut v: Vec<u64>) -> bool {
        assert_eq!(v.len(), self.words);
        let mut from = 0;
        while let Some((wi, p)) = Self::lowest_bit(&v, from) {
            match &self.by_pivot[p] {
                Some(b) => {
                    for (x, y) in v[wi..].iter_mut().zip(&b[wi..]) {
                        *x ^= *y;
                    }
                    from = wi;
                }
                None => {
                    self.by_pivot[p] = Some(v);
                    self.rank += 1;
                    return true;
                }
            }
        }
        false
    }

    /// True if `v` lies in the span.
    pub fn contains(&self, v: &[u64]) -> bool {
        let mut v = v.to_vec();
        let mut from = 0;
        while let Some((wi, p)) = Self::lowest_bit(&v, from) {
            match &self.by_pivot[p] {
                Some(b) => {
                    for (x, y) in v[wi..].iter_mut().zip(&b[wi..]) {
                        *x ^= *y;
                    }
                    from = wi;
                }
                None => return false,
            }
        }
        true
    }

    pub fn into_rref(mut self) -> (BitMatrix, Vec<usize>) {
        let pivots: Vec<usize> = (0..self.cols).filter(|&p| self.by_pivot[p].is_some()).collect();
        // Clear every other pivot column, highest pivots first so each
        // reducer is already clean.
        for (k, &p) in pivots.iter().enumerate().rev() {
            let mut v = self.by_pivot[p].take().unwrap();
            for &p2 in &pivots[k + 1..] {
                if (v[p2 / WORD] >> (p2 % WORD)) & 1 == 1 {
                    let b = self.by_pivot[p2].as_ref().unwrap();
                    for (x, y) in v.iter_mut().zip(b) {
                        *x ^= *y;
                    }
                }
            }
            self.by_pivot[p] = Some(v);
        }
        let mut m = BitMatrix::zeros(0, self.cols);
        for &p in &pivots {
            m.push_row(self.by_pivot[p].as_ref().unwrap());
        }
        (m, pivots)
    }
}

/// Dense matrix over GF(2^ℓ).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FqMatrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl FqMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FqMatrix {
            rows,
            cols,
            data: vec![FieldElement::ZERO; rows * cols],
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<FieldElement>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols);
            data.extend(r);
        }
        FqMatrix {
            rows: n,
            cols,
            data,
        }
    }

    pub fn from_bits(m: &BitMatrix) -> Self {
        let mut out = FqMatrix::zeros(m.rows(), m.cols());
        for r in 0..m.rows() {
            for c in m.support(r) {
                out.data[r * m.cols() + c] = FieldElement::ONE;
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    /// Rank by Gaussian elimination, taking the first nonzero entry in each
    /// column as pivot.
    pub fn rank(&self, field: &FieldSpec) -> usize {
        let mut m = self.data.clone();
        let cols = self.cols;
        let mut rank = 0;
        for c in 0..cols {
            if rank == self.rows {
                break;
            }
            let Some(pr) = (rank..self.rows).find(|&r| !m[r * cols + c].is_zero()) else {
                continue;
            };
            if pr != rank {
                for k in 0..cols {
                    m.swap(pr * cols + k, rank * cols + k);
                }
            }
            let inv = field.inv(m[rank * cols + c]).expect("pivot is nonzero");
            for k in c..cols {
                m[rank * cols + k] = field.mul(m[rank * cols + k], inv);
            }
            for r in rank + 1..self.rows {
                let factor = m[r * cols + c];
                if factor.is_zero() {
                    continue;
                }
                for k in c..cols {
                    let sub = field.mul(factor, m[rank * cols + k]);
                    m[r * cols + k] += sub;
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Incremental row space over GF(2^ℓ); stored rows are monic at their pivot.
#[derive(Debug, Clone)]
pub struct FqBasis {
    by_pivot: Vec<Option<Vec<FieldElement>>>,
    rank: usize,
}

impl FqBasis {
    pub fn new(cols: usize) -> Self {
        FqBasis {
            by_pivot: vec![None; cols],
            rank: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn insert(&mut self, field: &FieldSpec, mut v: Vec<FieldElement>) -> bool {
        assert_eq!(v.len(), self.by_pivot.len());
        let mut start = 0;
        while let Some(p) = (start..v.len()).find(|&i| !v[i].is_zero()) {
            match &self.by_pivot[p] {
                Some(b) => {
                    let factor = v[p];
                    for (x, &y) in v[p..].iter_mut().zip(&b[p..]) {
                        *x += field.mul(factor, y);
                    }
                    start = p + 1;
                }
                None => {
                    let inv = field.inv(v[p]).expect("nonzero");
                    for x in v[p..].iter_mut() {
                        *x = field.mul(*x, inv);
                    }
                    self.by_pivot[p] = Some(v);
                    self.rank += 1;
                    return true;
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Rank by enumerating the whole row space (small matrices only).
    fn span_size_rank(m: &BitMatrix) -> usize {
        let mut span = std::collections::HashSet::new();
        span.insert(vec![0u64; words_for(m.cols())]);
        for r in 0..m.rows() {
            let row = m.row(r).to_vec();
            let new: Vec<_> = span
                .iter()
                .map(|v: &Vec<u64>| v.iter().zip(&row).map(|(a, b)| a ^ b).collect())
                .collect();
            span.extend(new);
        }
        span.len().trailing_zeros() as usize
    }

    fn random_bits(rows: usize, cols: usize, rng: &mut impl Rng) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, rng.gen_bool(0.3));
            }
        }
        m
    }

    #[test]
    fn identity_and_zero() {
        let id = BitMatrix::from_supports(70, (0..70).map(|i| vec![i]));
        assert_eq!(id.rank(), 70);
        assert_eq!(BitMatrix::zeros(5, 70).rank(), 0);
        assert_eq!(BitMatrix::zeros(5, 70).kernel_basis().rows(), 70);
    }

    #[test]
    fn support_roundtrip() {
        let m = BitMatrix::from_supports(130, [vec![0, 63, 64, 129]]);
        assert_eq!(m.support(0).collect::<Vec<_>>(), vec![0, 63, 64, 129]);
    }

    proptest! {
        #[test]
        fn rank_matches_span_enumeration(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..80) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_bits(rows, cols, &mut rng);
            prop_assert_eq!(m.rank(), span_size_rank(&m));
        }

        #[test]
        fn kernel_is_annihilated(seed in any::<u64>(), rows in 1usize..20, cols in 1usize..150) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_bits(rows, cols, &mut rng);
            let k = m.kernel_basis();
            prop_assert_eq!(k.rows() + m.rank(), cols);
            prop_assert_eq!(k.rank(), k.rows());
            for kr in 0..k.rows() {
                for r in 0..m.rows() {
                    let dot = m.row(r).iter().zip(k.row(kr)).map(|(a, b)| (a & b).count_ones()).sum::<u32>();
                    prop_assert_eq!(dot % 2, 0);
                }
            }
        }

        #[test]
        fn fq_rank_of_binary_matrix_equals_gf2_rank(seed in any::<u64>(), rows in 1usize..24, cols in 1usize..40) {
            let f = make_field(4).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_bits(rows, cols, &mut rng);
            prop_assert_eq!(FqMatrix::from_bits(&m).rank(&f), m.rank());
        }

        #[test]
        fn fq_basis_matches_elimination(seed in any::<u64>(), rows in 1usize..12, cols in 1usize..12) {
            let f = make_field(3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<Vec<FieldElement>> = (0..rows)
                .map(|_| (0..cols).map(|_| FieldElement(if rng.gen_bool(0.5) { 0 } else { rng.gen_range(0..8) })).collect())
                .collect();
            let mut basis = FqBasis::new(cols);
            for r in &data {
                basis.insert(&f, r.clone());
            }
            prop_assert_eq!(basis.rank(), FqMatrix::from_rows(cols, data).rank(&f));
        }
    }

    #[test]
    fn rref_rows_are_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_bits(30, 90, &mut rng);
        let (r, pivots) = m.rref();
        assert_eq!(r.rows(), m.rank());
        for (i, &p) in pivots.iter().enumerate() {
            for (j, _) in pivots.iter().enumerate() {
                assert_eq!(r.get(j, p), i == j);
            }
        }
        let mut basis = BitBasis::new(90);
        for i in 0..r.rows() {
            basis.insert(r.row(i).to_vec());
        }
        for i in 0..m.rows() {
            assert!(basis.contains(m.row(i)));
        }
    }

    #[test]
    fn fq_rank_small_cases() {
        let f = make_field(2).unwrap();
        let w = FieldElement(2);
        let w2 = f.mul(w, w);
        // [1 w; w w^2] has rank 1
        let m = FqMatrix::from_rows(2, vec![vec![FieldElement::ONE, w], vec![w, w2]]);
        assert_eq!(m.rank(&f), 1);
        let m = FqMatrix::from_rows(2, vec![vec![FieldElement::ONE, w], vec![w, FieldElement::ONE]]);
        assert_eq!(m.rank(&f), 2);
    }
}
