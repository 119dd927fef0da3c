//! Arithmetic in GF(2^ℓ), the absolute trace to GF(2), and the coset
//! decomposition of the multiplicative group by one of its subgroups.
//!
//! Elements are encoded as integers whose bit `i` is the coefficient of
//! `x^i` in the polynomial basis. That integer order is the fixed order used
//! for codeword coordinates and for canonical coset representatives.

use std::fmt;
use std::ops::{Add, AddAssign, BitXor, BitXorAssign};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest extension degree the log/antilog tables are built for.
pub const MAX_ELL: u32 = 24;

/// Canonical moduli. Degrees missing here fall back to the smallest
/// irreducible polynomial with a nonzero constant term.
pub const MODULUS_TABLE: &[(u32, u32)] = &[
    (2, 0b111),
    (3, 0b1011),
    (4, 0b10011),
    (6, 0b1000011),
    (8, 0b100011011),
    (10, 0b10000001001),
    (12, 0b1000001010011),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("extension degree {0} is outside 1..={MAX_ELL}")]
    DegreeOutOfRange(u32),
    #[error("modulus {modulus:#b} is not an irreducible polynomial of degree {ell}")]
    Reducible { ell: u32, modulus: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("subgroup order {order} does not divide q-1 = {group}")]
    NotADivisor { order: u64, group: u64 },
    #[error("invalid dyadic parameters: {0}")]
    BadDyadic(String),
}

/// An element of GF(2^ℓ) in polynomial-basis encoding.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct FieldElement(pub u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

// characteristic 2: addition is XOR
impl Add for FieldElement {
    type Output = FieldElement;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: FieldElement) -> FieldElement {
        FieldElement(self.0 ^ rhs.0)
    }
}

impl AddAssign for FieldElement {
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: FieldElement) {
        self.0 ^= rhs.0;
    }
}

impl BitXor for FieldElement {
    type Output = FieldElement;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn bitxor(self, rhs: FieldElement) -> FieldElement {
        self + rhs
    }
}

impl BitXorAssign for FieldElement {
    #[allow(clippy::suspicious_op_assign_impl)]
    fn bitxor_assign(&mut self, rhs: FieldElement) {
        *self += rhs;
    }
}

/// Carry-less multiply followed by reduction modulo `modulus` (degree `ell`).
fn clmul_mod(mut a: u64, mut b: u64, modulus: u64, ell: u32) -> u64 {
    let top = 1u64 << ell;
    let mut acc = 0u64;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= modulus;
        }
    }
    acc
}

fn poly_degree(p: u64) -> i32 {
    63 - p.leading_zeros() as i32
}

fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = poly_degree(b);
    while a != 0 && poly_degree(a) >= db {
        a ^= b << (poly_degree(a) - db);
    }
    a
}

/// Trial division by every polynomial of degree 1..=ℓ/2.
pub fn is_irreducible(modulus: u32, ell: u32) -> bool {
    let m = modulus as u64;
    if ell == 0 || poly_degree(m) != ell as i32 {
        return false;
    }
    for deg in 1..=ell / 2 {
        for low in 0..(1u64 << deg) {
            if poly_rem(m, (1u64 << deg) | low) == 0 {
                return false;
            }
        }
    }
    true
}

fn default_modulus(ell: u32) -> u32 {
    if let Some(&(_, m)) = MODULUS_TABLE.iter().find(|(e, _)| *e == ell) {
        return m;
    }
    let base = 1u32 << ell;
    (base + 1..base << 1)
        .step_by(2)
        .find(|&m| is_irreducible(m, ell))
        .expect("an irreducible polynomial exists in every degree")
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// A concrete GF(2^ℓ) with precomputed log/antilog tables.
#[derive(Clone)]
pub struct FieldSpec {
    ell: u32,
    modulus: u32,
    generator: FieldElement,
    /// `log[x]` for nonzero `x`; entry 0 is unused.
    log: Vec<u32>,
    /// `antilog[k] = generator^k`, `0 <= k < q-1`.
    antilog: Vec<u32>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("ell", &self.ell)
            .field("modulus", &format_args!("{:#b}", self.modulus))
            .field("generator", &self.generator)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.ell == other.ell && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

/// Builds GF(2^ℓ) with the canonical modulus and smallest full-order generator.
pub fn make_field(ell: u32) -> Result<Arc<FieldSpec>, FieldError> {
    if !(1..=MAX_ELL).contains(&ell) {
        return Err(FieldError::DegreeOutOfRange(ell));
    }
    FieldSpec::with_modulus(ell, default_modulus(ell)).map(Arc::new)
}

impl FieldSpec {
    pub fn with_modulus(ell: u32, modulus: u32) -> Result<Self, FieldError> {
        if !(1..=MAX_ELL).contains(&ell) {
            return Err(FieldError::DegreeOutOfRange(ell));
        }
        if !is_irreducible(modulus, ell) {
            return Err(FieldError::Reducible { ell, modulus });
        }
        let q = 1u64 << ell;
        let order = q - 1;
        let factors = prime_factors(order);
        let slow_pow = |base: u64, mut e: u64| {
            let (mut acc, mut b) = (1u64, base);
            while e > 0 {
                if e & 1 == 1 {
                    acc = clmul_mod(acc, b, modulus as u64, ell);
                }
                b = clmul_mod(b, b, modulus as u64, ell);
                e >>= 1;
            }
            acc
        };
        let generator = (1..q)
            .find(|&g| factors.iter().all(|p| slow_pow(g, order / p) != 1))
            .expect("the multiplicative group is cyclic");

        let mut log = vec![0u32; q as usize];
        let mut antilog = vec![0u32; order as usize];
        let mut x = 1u64;
        for k in 0..order {
            antilog[k as usize] = x as u32;
            log[x as usize] = k as u32;
            x = clmul_mod(x, generator, modulus as u64, ell);
        }
        debug_assert_eq!(x, 1);

        Ok(FieldSpec {
            ell,
            modulus,
            generator: FieldElement(generator as u32),
            log,
            antilog,
        })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn q(&self) -> usize {
        1usize << self.ell
    }

    /// Size of the multiplicative group, `q - 1`.
    pub fn order(&self) -> usize {
        self.q() - 1
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn generator(&self) -> FieldElement {
        self.generator
    }

    /// Element from its integer encoding; `None` if it is not below `q`.
    pub fn element(&self, value: u32) -> Option<FieldElement> {
        ((value as usize) < self.q()).then_some(FieldElement(value))
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q() as u32).map(FieldElement)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> {
        (1..self.q() as u32).map(FieldElement)
    }

    /// Discrete log base the generator. Panics on zero.
    #[inline]
    pub fn log(&self, x: FieldElement) -> u32 {
        assert!(!x.is_zero(), "log of zero");
        self.log[x.0 as usize]
    }

    /// `generator^k` for any `k`.
    #[inline]
    pub fn exp(&self, k: u64) -> FieldElement {
        FieldElement(self.antilog[(k % self.order() as u64) as usize])
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        a + b
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.is_zero() || b.is_zero() {
            return FieldElement::ZERO;
        }
        let s = self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize;
        let n = self.order();
        FieldElement(self.antilog[if s >= n { s - n } else { s }])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        let n = self.order();
        Ok(FieldElement(
            self.antilog[(n - self.log[a.0 as usize] as usize) % n],
        ))
    }

    /// `a^n` with the convention `0^0 = 1`.
    #[inline]
    pub fn pow(&self, a: FieldElement, n: u64) -> FieldElement {
        if n == 0 {
            return FieldElement::ONE;
        }
        if a.is_zero() {
            return FieldElement::ZERO;
        }
        let order = self.order() as u64;
        let e = (self.log[a.0 as usize] as u64 * (n % order)) % order;
        FieldElement(self.antilog[e as usize])
    }

    /// Absolute trace `Σ_{i<ℓ} a^(2^i)`, which always lands in GF(2).
    pub fn trace2(&self, a: FieldElement) -> u8 {
        let mut acc = FieldElement::ZERO;
        let mut frob = a;
        for _ in 0..self.ell {
            acc += frob;
            frob = self.mul(frob, frob);
        }
        debug_assert!(acc.0 <= 1, "trace left GF(2): {acc}");
        acc.0 as u8
    }

    /// Trace of every element, indexed by integer encoding.
    pub fn trace_table(&self) -> Vec<u8> {
        self.elements().map(|a| self.trace2(a)).collect()
    }

    /// Polynomial basis `{1, x, ..., x^(ℓ-1)}`.
    pub fn polynomial_basis(&self) -> Vec<FieldElement> {
        (0..self.ell).map(|i| FieldElement(1 << i)).collect()
    }
}

/// A subgroup `H ≤ F_q^×` together with all of its cosets.
#[derive(Debug, Clone)]
pub struct CosetFamily {
    field: Arc<FieldSpec>,
    subgroup_order: usize,
    subgroup: Vec<FieldElement>,
    cosets: Vec<Vec<FieldElement>>,
}

/// Builds `H = ⟨g^t⟩` of order `h` and its `t = (q-1)/h` cosets.
///
/// Each coset is sorted ascending, so its first element is its canonical
/// representative, and the cosets are ordered by representative.
pub fn make_coset_family(
    field: &Arc<FieldSpec>,
    subgroup_order: usize,
) -> Result<CosetFamily, FieldError> {
    let group = field.order();
    if subgroup_order == 0 || group % subgroup_order != 0 {
        return Err(FieldError::NotADivisor {
            order: subgroup_order as u64,
            group: group as u64,
        });
    }
    let t = group / subgroup_order;
    let mut subgroup: Vec<FieldElement> = (0..subgroup_order)
        .map(|k| field.exp((t * k) as u64))
        .collect();
    subgroup.sort_unstable();
    let mut cosets: Vec<Vec<FieldElement>> = (0..t)
        .map(|j| {
            let shift = field.exp(j as u64);
            let mut c: Vec<FieldElement> = subgroup.iter().map(|&h| field.mul(shift, h)).collect();
            c.sort_unstable();
            c
        })
        .collect();
    cosets.sort_unstable_by_key(|c| c[0]);
    Ok(CosetFamily {
        field: Arc::clone(field),
        subgroup_order,
        subgroup,
        cosets,
    })
}

impl CosetFamily {
    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    /// `|H|`.
    pub fn subgroup_order(&self) -> usize {
        self.subgroup_order
    }

    /// Number of cosets, `t = (q-1)/|H|`.
    pub fn count(&self) -> usize {
        self.cosets.len()
    }

    pub fn subgroup(&self) -> &[FieldElement] {
        &self.subgroup
    }

    pub fn cosets(&self) -> &[Vec<FieldElement>] {
        &self.cosets
    }

    pub fn representative(&self, index: usize) -> FieldElement {
        self.cosets[index][0]
    }
}

/// `Σ_{α∈H} α^n`, summed directly in the field.
pub fn subgroup_power_sum(field: &FieldSpec, subgroup: &[FieldElement], n: u64) -> FieldElement {
    subgroup
        .iter()
        .fold(FieldElement::ZERO, |acc, &a| acc + field.pow(a, n))
}

/// Parameters `(ℓ, h, t)` realising a dyadic repair-group exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DyadicPlan {
    pub ell: u32,
    pub subgroup_order: u64,
    pub t: u64,
}

impl DyadicPlan {
    pub fn q(&self) -> u64 {
        1 << self.ell
    }
}

/// For `1 - 2α = a_num / 2^b_exp` and a scale `n`, picks `ℓ = 2^b_exp · n`
/// and `h = ∏_{i : bit i of a_num set} (2^(2^i n) + 1)`, which divides
/// `2^ℓ - 1` because `2^(2^b n) - 1 = (2^n - 1) ∏_{i<b} (2^(2^i n) + 1)`.
pub fn plan_dyadic_parameters(a_num: u64, b_exp: u32, n: u32) -> Result<DyadicPlan, FieldError> {
    if b_exp >= 32 || a_num == 0 || a_num >= 1u64 << b_exp {
        return Err(FieldError::BadDyadic(format!(
            "need 0 < a_num < 2^b_exp, got a_num={a_num} b_exp={b_exp}"
        )));
    }
    if n == 0 {
        return Err(FieldError::BadDyadic("scale n must be positive".into()));
    }
    let ell = (1u64 << b_exp) * n as u64;
    if ell > MAX_ELL as u64 {
        return Err(FieldError::BadDyadic(format!(
            "extension degree {ell} exceeds {MAX_ELL}"
        )));
    }
    let ell = ell as u32;
    let h: u64 = (0..b_exp)
        .filter(|i| (a_num >> i) & 1 == 1)
        .map(|i| (1u64 << ((1u32 << i) * n)) + 1)
        .product();
    let group = (1u64 << ell) - 1;
    if group % h != 0 {
        return Err(FieldError::NotADivisor { order: h, group });
    }
    Ok(DyadicPlan {
        ell,
        subgroup_order: h,
        t: group / h,
    })
}
