//! Good/bad monomial classification.
//!
//! A monomial `X^a Y^b` is bad for a family of slope sets when its wedge
//! restriction is nonzero for some slope set and some point. Three routes
//! decide this and are cross-checked against each other:
//!
//! * [`is_good_oracle`] sums the monomial over every wedge by brute force;
//! * [`is_bad_coset_criterion`] is the bit-pattern test for coset families;
//! * [`is_bad_block_criterion`] is the block test valid when `q = 2^(ℓ'd)`
//!   and `|H| = (q-1)/(2^ℓ' - 1)`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bitlattice::{bit_and, bit_or, enumerate_2_shadow, BitVector};
use crate::field::{CosetFamily, FieldElement, FieldSpec};

/// Default ceiling on field evaluations for one oracle call.
pub const DEFAULT_ORACLE_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("oracle infeasible: {cost} evaluations exceed the budget of {budget}; sample wedges instead")]
    OracleInfeasible { cost: u64, budget: u64 },
    #[error("exponents ({a}, {b}) exceed q-1 = {max}")]
    ExponentRange { a: u32, b: u32, max: u32 },
    #[error("invalid block instantiation: {0}")]
    BadInstantiation(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// `X^a Y^b` with `0 <= a, b <= q-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Monomial {
    pub a: u32,
    pub b: u32,
}

impl Monomial {
    pub fn new(a: u32, b: u32) -> Self {
        Monomial { a, b }
    }

    pub fn checked(a: u32, b: u32, q: usize) -> Result<Self, ClassifyError> {
        let max = q as u32 - 1;
        if a > max || b > max {
            return Err(ClassifyError::ExponentRange { a, b, max });
        }
        Ok(Monomial { a, b })
    }

    /// Every monomial of per-variable degree below `q`, `a` major.
    pub fn all(q: usize) -> impl Iterator<Item = Monomial> {
        let q = q as u32;
        (0..q).flat_map(move |a| (0..q).map(move |b| Monomial { a, b }))
    }

    pub fn eval(self, field: &FieldSpec, x: FieldElement, y: FieldElement) -> FieldElement {
        field.mul(field.pow(x, self.a as u64), field.pow(y, self.b as u64))
    }
}

/// A point of `F_q²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: FieldElement,
    pub y: FieldElement,
}

impl Point {
    pub fn new(x: FieldElement, y: FieldElement) -> Self {
        Point { x, y }
    }

    /// Row-major coordinate, `x·q + y`.
    pub fn index(self, q: usize) -> usize {
        self.x.value() as usize * q + self.y.value() as usize
    }

    pub fn from_index(index: usize, q: usize) -> Self {
        Point {
            x: FieldElement((index / q) as u32),
            y: FieldElement((index % q) as u32),
        }
    }
}

/// The lines `T ↦ (T, α(T - x) + y)` through `point` for each slope `α`.
#[derive(Debug, Clone, Copy)]
pub struct Wedge<'a> {
    pub slopes: &'a [FieldElement],
    pub point: Point,
}

impl<'a> Wedge<'a> {
    pub fn new(slopes: &'a [FieldElement], point: Point) -> Self {
        Wedge { slopes, point }
    }

    /// Second coordinate of the line with slope `alpha` at parameter `t`.
    #[inline]
    fn line_y(&self, field: &FieldSpec, alpha: FieldElement, t: FieldElement) -> FieldElement {
        field.mul(alpha, t + self.point.x) + self.point.y
    }
}

/// Union of the wedge's lines as a sorted, duplicate-free point list.
///
/// Distinct slopes meet only at the apex, so with nonzero slopes the result
/// has `|slopes|·(q-1) + 1` points.
pub fn wedge_point_set(field: &FieldSpec, wedge: &Wedge<'_>) -> Vec<Point> {
    let mut pts: Vec<Point> = wedge
        .slopes
        .iter()
        .flat_map(|&alpha| {
            field
                .elements()
                .map(move |t| Point::new(t, wedge.line_y(field, alpha, t)))
        })
        .collect();
    pts.sort_unstable();
    pts.dedup();
    debug_assert!(
        wedge.slopes.is_empty()
            || wedge.slopes.iter().any(|s| s.is_zero())
            || pts.len() == wedge.slopes.len() * (field.q() - 1) + 1
    );
    pts
}

/// A bivariate polynomial as a list of monomial terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polynomial {
    pub terms: Vec<(Monomial, FieldElement)>,
}

impl Polynomial {
    pub fn monomial(m: Monomial) -> Self {
        Polynomial {
            terms: vec![(m, FieldElement::ONE)],
        }
    }

    pub fn constant(c: FieldElement) -> Self {
        Polynomial::from_terms(vec![(Monomial::new(0, 0), c)])
    }

    pub fn from_terms(terms: Vec<(Monomial, FieldElement)>) -> Self {
        Polynomial { terms }
    }

    pub fn eval(&self, field: &FieldSpec, p: Point) -> FieldElement {
        self.terms.iter().fold(FieldElement::ZERO, |acc, &(m, c)| {
            acc + field.mul(c, m.eval(field, p.x, p.y))
        })
    }
}

/// `Σ_{α ∈ slopes} Σ_{T ∈ F_q} P(T, α(T - x) + y)`.
pub fn wedge_restriction(field: &FieldSpec, poly: &Polynomial, wedge: &Wedge<'_>) -> FieldElement {
    let line_sum = wedge
        .slopes
        .iter()
        .flat_map(|&alpha| field.elements().map(move |t| (alpha, t)))
        .fold(FieldElement::ZERO, |acc, (alpha, t)| {
            acc + poly.eval(field, Point::new(t, wedge.line_y(field, alpha, t)))
        });
    if cfg!(debug_assertions) && wedge.slopes.len() % 2 == 1 {
        let point_sum = wedge_point_set(field, wedge)
            .into_iter()
            .fold(FieldElement::ZERO, |acc, p| acc + poly.eval(field, p));
        assert_eq!(line_sum, point_sum, "line and point forms disagree");
    }
    line_sum
}

/// Field evaluations the exhaustive oracle performs for one monomial.
pub fn oracle_cost(q: usize, slope_sets: &[Vec<FieldElement>]) -> u64 {
    let q = q as u64;
    slope_sets
        .iter()
        .map(|s| q * q * s.len() as u64 * q)
        .sum()
}

/// Wedge restriction of a single monomial using per-monomial power tables.
struct MonomialRestrictor<'f> {
    field: &'f FieldSpec,
    x_pow: Vec<FieldElement>,
    y_pow: Vec<FieldElement>,
}

impl<'f> MonomialRestrictor<'f> {
    fn new(field: &'f FieldSpec, m: Monomial) -> Self {
        MonomialRestrictor {
            field,
            x_pow: field.elements().map(|v| field.pow(v, m.a as u64)).collect(),
            y_pow: field.elements().map(|v| field.pow(v, m.b as u64)).collect(),
        }
    }

    fn eval(&self, p: Point) -> FieldElement {
        self.field
            .mul(self.x_pow[p.x.value() as usize], self.y_pow[p.y.value() as usize])
    }

    fn restrict(&self, wedge: &Wedge<'_>) -> FieldElement {
        let f = self.field;
        let mut acc = FieldElement::ZERO;
        for &alpha in wedge.slopes {
            for t in f.elements() {
                acc += self.eval(Point::new(t, wedge.line_y(f, alpha, t)));
            }
        }
        if cfg!(debug_assertions) && wedge.slopes.len() % 2 == 1 {
            let point_sum = wedge_point_set(f, wedge)
                .into_iter()
                .fold(FieldElement::ZERO, |s, p| s + self.eval(p));
            assert_eq!(acc, point_sum, "line and point forms disagree");
        }
        acc
    }
}

/// Brute force: good iff every wedge restriction vanishes.
///
/// `slope_sets` may be any family of disjoint odd-size slope sets; pass
/// `family.cosets()` for a coset family.
pub fn is_good_oracle(
    field: &FieldSpec,
    m: Monomial,
    slope_sets: &[Vec<FieldElement>],
    budget: u64,
) -> Result<bool, ClassifyError> {
    let cost = oracle_cost(field.q(), slope_sets);
    if cost > budget {
        return Err(ClassifyError::OracleInfeasible { cost, budget });
    }
    let r = MonomialRestrictor::new(field, m);
    for slopes in slope_sets {
        for x in field.elements() {
            for y in field.elements() {
                let wedge = Wedge::new(slopes, Point::new(x, y));
                if !r.restrict(&wedge).is_zero() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Checks `samples` uniformly random wedges of `family` and returns a
/// witness `(coset index, point)` with nonzero restriction, if one is hit.
pub fn sampled_bad_witness<R: Rng>(
    field: &FieldSpec,
    m: Monomial,
    family: &CosetFamily,
    samples: usize,
    rng: &mut R,
) -> Option<(usize, Point)> {
    let r = MonomialRestrictor::new(field, m);
    let q = field.q() as u32;
    (0..samples).find_map(|_| {
        let c = rng.gen_range(0..family.count());
        let p = Point::new(FieldElement(rng.gen_range(0..q)), FieldElement(rng.gen_range(0..q)));
        let wedge = Wedge::new(&family.cosets()[c], p);
        (!r.restrict(&wedge).is_zero()).then_some((c, p))
    })
}

/// Bad iff `a ∨ b = q-1` and some `i ≤₂ a ∧ b` has `i ≡ b (mod h)`.
pub fn is_bad_coset_criterion(m: Monomial, h: u64, ell: u32) -> bool {
    let a = BitVector::new(m.a as u64, ell).expect("exponent fits in ell bits");
    let b = BitVector::new(m.b as u64, ell).expect("exponent fits in ell bits");
    let full = (1u64 << ell) - 1;
    if bit_or(a, b).unwrap().value() as u64 != full {
        return false;
    }
    let target = m.b as u64 % h;
    enumerate_2_shadow(bit_and(a, b).unwrap()).any(|i| i.value() as u64 % h == target)
}

/// Bad iff `a ∨ b = q-1` and no block pair `(r, s)` and offset `j` has
/// `b[rℓ'+j] = a[sℓ'+j] = 1` with `a[rℓ'+j] = b[sℓ'+j] = 0`.
pub fn is_bad_block_criterion(m: Monomial, ell_prime: u32, d: u32) -> bool {
    let ell = ell_prime * d;
    let full = (1u64 << ell) - 1;
    if (m.a | m.b) as u64 != full {
        return false;
    }
    let bit = |v: u32, i: u32| (v >> i) & 1 == 1;
    for j in 0..ell_prime {
        for r in 0..d {
            let ir = r * ell_prime + j;
            if !(bit(m.b, ir) && !bit(m.a, ir)) {
                continue;
            }
            for s in 0..d {
                let is = s * ell_prime + j;
                if bit(m.a, is) && !bit(m.b, is) {
                    return false;
                }
            }
        }
    }
    true
}

/// The structured family with `q = 2^(ℓ'd)` and `|H| = (q-1)/(2^ℓ' - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockInstantiation {
    pub ell_prime: u32,
    pub d: u32,
}

impl BlockInstantiation {
    pub fn new(ell_prime: u32, d: u32) -> Result<Self, ClassifyError> {
        if ell_prime == 0 || d == 0 || ell_prime * d > crate::field::MAX_ELL {
            return Err(ClassifyError::BadInstantiation(format!(
                "need l' >= 1, d >= 1 and l'd <= {}, got l'={ell_prime} d={d}",
                crate::field::MAX_ELL
            )));
        }
        Ok(BlockInstantiation { ell_prime, d })
    }

    pub fn ell(&self) -> u32 {
        self.ell_prime * self.d
    }

    pub fn subgroup_order(&self) -> u64 {
        ((1u64 << self.ell()) - 1) / ((1u64 << self.ell_prime) - 1)
    }

    /// Number of repair groups, `2^ℓ' - 1`.
    pub fn t(&self) -> u64 {
        (1u64 << self.ell_prime) - 1
    }

    /// Matches this instantiation against an `(ℓ, h)` pair, if it is one.
    pub fn detect(ell: u32, h: u64) -> Option<Self> {
        (1..=ell)
            .filter(|lp| ell % lp == 0)
            .map(|lp| BlockInstantiation {
                ell_prime: lp,
                d: ell / lp,
            })
            .find(|inst| inst.subgroup_order() == h)
    }
}

/// Exhaustive bad count with the coset criterion.
pub fn count_bad(family: &CosetFamily) -> usize {
    let ell = family.field().ell();
    let h = family.subgroup_order() as u64;
    let q = family.field().q() as u32;
    (0..q)
        .into_par_iter()
        .map(|a| {
            (0..q)
                .filter(|&b| is_bad_coset_criterion(Monomial::new(a, b), h, ell))
                .count()
        })
        .sum()
}

/// `(2^(d+1) - 1)^ℓ'`.
pub fn count_bad_closed_form(ell_prime: u32, d: u32) -> u64 {
    ((1u64 << (d + 1)) - 1).pow(ell_prime)
}

/// The naive count `t·q`.
pub fn count_bad_naive_bound(family: &CosetFamily) -> u64 {
    (family.count() * family.field().q()) as u64
}

/// Which route produced a classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Coset,
    Block,
    Oracle,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Coset => "coset",
            Route::Block => "block",
            Route::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub monomial: Monomial,
    pub bad: bool,
    pub route: Route,
}

/// Classifies every monomial of `family` by the requested route. The block
/// route requires `family` to be a block instantiation.
pub fn classify_all(
    family: &CosetFamily,
    route: Route,
    budget: u64,
) -> Result<Vec<Classification>, ClassifyError> {
    let field = family.field();
    let (ell, h) = (field.ell(), family.subgroup_order() as u64);
    let inst = match route {
        Route::Block => Some(BlockInstantiation::detect(ell, h).ok_or_else(|| {
            ClassifyError::BadInstantiation(format!("h={h} is not (q-1)/(2^l'-1) for q=2^{ell}"))
        })?),
        _ => None,
    };
    if route == Route::Oracle {
        let cost = oracle_cost(field.q(), family.cosets());
        if cost > budget {
            return Err(ClassifyError::OracleInfeasible { cost, budget });
        }
    }
    let monomials: Vec<Monomial> = Monomial::all(field.q()).collect();
    monomials
        .par_iter()
        .map(|&m| {
            let bad = match route {
                Route::Coset => is_bad_coset_criterion(m, h, ell),
                Route::Block => {
                    let inst = inst.expect("checked above");
                    is_bad_block_criterion(m, inst.ell_prime, inst.d)
                }
                Route::Oracle => !is_good_oracle(field, m, family.cosets(), budget)?,
            };
            Ok(Classification {
                monomial: m,
                bad,
                route,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct CsvRow {
    a: u32,
    b: u32,
    bad: u8,
    criterion_used: &'static str,
}

/// Writes the `a,b,bad,criterion_used` report.
pub fn write_csv<W: Write>(out: W, rows: &[Classification]) -> Result<(), ClassifyError> {
    let mut w = csv::Writer::from_writer(out);
    for c in rows {
        w.serialize(CsvRow {
            a: c.monomial.a,
            b: c.monomial.b,
            bad: u8::from(c.bad),
            criterion_used: c.route.name(),
        })?;
    }
    w.flush()?;
    Ok(())
}
