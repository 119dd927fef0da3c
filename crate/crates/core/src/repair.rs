//! Disjoint repair groups and repair simulation.
//!
//! For coordinate `p` and coset `gH`, the repair group is the wedge point set
//! minus its apex; XOR-summing a codeword over it returns the erased symbol.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::code::{wedge_indices, BinaryTraceCode, Symbol, WedgeLiftedCode};
use crate::field::FieldElement;

/// Failures kept verbatim in a report; the rest are only counted.
pub const MAX_RECORDED_FAILURES: usize = 64;

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("repair groups {first} and {second} of coordinate {coordinate} intersect")]
    NotDisjoint {
        coordinate: usize,
        first: usize,
        second: usize,
    },
    #[error("repair group {group} of coordinate {coordinate} has size {size}, expected {expected}")]
    WrongSize {
        coordinate: usize,
        group: usize,
        size: usize,
        expected: usize,
    },
    #[error("requested {k} parallel reads but the code has only t = {t} repair groups")]
    TooManyReads { k: usize, t: usize },
    #[error("coordinate {coordinate} is outside 0..{n}")]
    BadCoordinate { coordinate: usize, n: usize },
    #[error("parallel reads of coordinate {coordinate} disagree")]
    Inconsistent { coordinate: usize },
    #[error("trials must be at least 1")]
    NoTrials,
}

/// Repair groups for every coordinate, stored flat: coordinate-major, then
/// coset, each group `group_size` indices long.
#[derive(Debug, Clone)]
pub struct RepairPlan {
    q: usize,
    subgroup_order: usize,
    t: usize,
    group_size: usize,
    groups: Vec<u32>,
}

pub fn build_repair_plan(code: &WedgeLiftedCode) -> Result<RepairPlan, RepairError> {
    let field = code.field();
    let family = code.family();
    let q = field.q();
    let n = q * q;
    let t = family.count();
    let h = family.subgroup_order();
    let group_size = h * (q - 1);

    let per_coord: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|p| {
            family
                .cosets()
                .iter()
                .flat_map(|coset| {
                    wedge_indices(field, coset, p)
                        .into_iter()
                        .filter(move |&i| i != p)
                        .map(|i| i as u32)
                })
                .collect()
        })
        .collect();

    let plan = RepairPlan {
        q,
        subgroup_order: h,
        t,
        group_size,
        groups: per_coord.concat(),
    };
    plan.check_disjoint()?;
    Ok(plan)
}

impl RepairPlan {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn subgroup_order(&self) -> usize {
        self.subgroup_order
    }

    /// Groups per coordinate.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.q * self.q
    }

    pub fn is_empty(&self) -> bool {
        self.q == 0
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn group(&self, coordinate: usize, j: usize) -> &[u32] {
        let start = (coordinate * self.t + j) * self.group_size;
        &self.groups[start..start + self.group_size]
    }

    pub fn groups(&self, coordinate: usize) -> impl Iterator<Item = &[u32]> {
        (0..self.t).map(move |j| self.group(coordinate, j))
    }

    /// Checks sizes, that no group contains its own coordinate, and pairwise
    /// disjointness, for every coordinate.
    pub fn check_disjoint(&self) -> Result<(), RepairError> {
        (0..self.len()).into_par_iter().try_for_each(|p| {
            let mut owner = vec![usize::MAX; self.len()];
            owner[p] = self.t;
            for j in 0..self.t {
                let g = self.group(p, j);
                if g.len() != self.group_size {
                    return Err(RepairError::WrongSize {
                        coordinate: p,
                        group: j,
                        size: g.len(),
                        expected: self.group_size,
                    });
                }
                for &i in g {
                    let slot = &mut owner[i as usize];
                    if *slot != usize::MAX {
                        return Err(RepairError::NotDisjoint {
                            coordinate: p,
                            first: (*slot).min(j),
                            second: j,
                        });
                    }
                    *slot = j;
                }
            }
            Ok(())
        })
    }

    /// Replaces one member of `(coordinate, group)` with a point of the
    /// vertical line through the coordinate, which no wedge contains. The
    /// plan stays disjoint but that group no longer repairs.
    pub fn inject_fault(&mut self, coordinate: usize, group: usize) {
        let q = self.q;
        let x = coordinate / q;
        let outsider = (0..q)
            .map(|y| x * q + y)
            .find(|&i| i != coordinate)
            .expect("q >= 2");
        let start = (coordinate * self.t + group) * self.group_size;
        self.groups[start] = outsider as u32;
    }
}

/// XOR of `word` over `group`.
pub fn repair_symbol<S: Symbol>(word: &[S], group: &[u32]) -> S {
    group.iter().fold(S::default(), |acc, &i| acc ^ word[i as usize])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairFailure {
    pub trial: usize,
    pub coordinate: usize,
    pub group: usize,
    pub expected: u32,
    pub got: u32,
}

/// Outcome of repeated encode-and-repair trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DrgpReport {
    pub alphabet: String,
    pub q: usize,
    pub h: usize,
    pub t: usize,
    pub trials: usize,
    pub seed: u64,
    pub checks: u64,
    pub failure_count: u64,
    pub failures: Vec<RepairFailure>,
}

impl DrgpReport {
    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }
}

trait SymbolValue {
    fn to_u32(self) -> u32;
}

impl SymbolValue for FieldElement {
    fn to_u32(self) -> u32 {
        self.value()
    }
}

impl SymbolValue for bool {
    fn to_u32(self) -> u32 {
        self as u32
    }
}

fn check_word<S: Symbol + SymbolValue>(
    plan: &RepairPlan,
    word: &[S],
    trial: usize,
) -> (u64, Vec<RepairFailure>) {
    let mut failures = Vec::new();
    let mut count = 0;
    for p in 0..plan.len() {
        for (j, g) in plan.groups(p).enumerate() {
            let got = repair_symbol(word, g);
            if got != word[p] {
                count += 1;
                if failures.len() < MAX_RECORDED_FAILURES {
                    failures.push(RepairFailure {
                        trial,
                        coordinate: p,
                        group: j,
                        expected: word[p].to_u32(),
                        got: got.to_u32(),
                    });
                }
            }
        }
    }
    (count, failures)
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_trials<S, F>(plan: &RepairPlan, alphabet: &str, trials: usize, seed: u64, make: F) -> Result<DrgpReport, RepairError>
where
    S: Symbol + SymbolValue,
    F: Fn(&mut ChaCha8Rng) -> Vec<S> + Sync,
{
    if trials == 0 {
        return Err(RepairError::NoTrials);
    }
    let results: Vec<(u64, Vec<RepairFailure>)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let word = make(&mut trial_rng(seed, trial));
            check_word(plan, &word, trial)
        })
        .collect();
    let failure_count = results.iter().map(|(c, _)| c).sum();
    let failures = results
        .into_iter()
        .flat_map(|(_, f)| f)
        .take(MAX_RECORDED_FAILURES)
        .collect();
    Ok(DrgpReport {
        alphabet: alphabet.to_string(),
        q: plan.q,
        h: plan.subgroup_order,
        t: plan.t,
        trials,
        seed,
        checks: (trials * plan.len() * plan.t) as u64,
        failure_count,
        failures,
    })
}

/// Encodes `trials` uniformly random messages and repairs every coordinate
/// from every group. Deterministic in `seed`.
pub fn verify_drgp(
    code: &WedgeLiftedCode,
    plan: &RepairPlan,
    trials: usize,
    seed: u64,
) -> Result<DrgpReport, RepairError> {
    let q = code.field().q() as u32;
    let k = code.exact_dimension();
    run_trials(plan, "fq", trials, seed, |rng| {
        let msg: Vec<FieldElement> = (0..k).map(|_| FieldElement(rng.gen_range(0..q))).collect();
        code.encode(&msg).expect("message length matches")
    })
}

/// Same as [`verify_drgp`] for random codewords of the binary trace code,
/// repaired by XOR.
pub fn verify_drgp_binary(
    code: &BinaryTraceCode<'_>,
    plan: &RepairPlan,
    trials: usize,
    seed: u64,
) -> Result<DrgpReport, RepairError> {
    let k = code.binary_dimension();
    run_trials(plan, "binary", trials, seed, |rng| {
        let msg: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
        code.encode(&msg).expect("message length matches")
    })
}

/// Repeats [`verify_drgp`] on a caller-supplied word.
pub fn verify_word<S: Symbol>(plan: &RepairPlan, word: &[S]) -> bool {
    (0..plan.len()).all(|p| plan.groups(p).all(|g| repair_symbol(word, g) == word[p]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelReads<S> {
    /// The symbol read directly from its own server.
    pub direct: S,
    /// One recovery per group, from pairwise disjoint index sets.
    pub recovered: Vec<S>,
}

/// Recovers `word[coordinate]` independently from the first `k` groups.
pub fn simulate_parallel_reads<S: Symbol>(
    plan: &RepairPlan,
    word: &[S],
    coordinate: usize,
    k: usize,
) -> Result<ParallelReads<S>, RepairError> {
    if coordinate >= plan.len() {
        return Err(RepairError::BadCoordinate {
            coordinate,
            n: plan.len(),
        });
    }
    if k > plan.t {
        return Err(RepairError::TooManyReads { k, t: plan.t });
    }
    let recovered: Vec<S> = (0..k).map(|j| repair_symbol(word, plan.group(coordinate, j))).collect();
    if recovered.iter().any(|&v| v != recovered[0]) {
        return Err(RepairError::Inconsistent { coordinate });
    }
    Ok(ParallelReads {
        direct: word[coordinate],
        recovered,
    })
}

/// Recovers an erased coordinate from every group left fully intact by the
/// erasure pattern (`None` marks an erased symbol). Returns `(group, value)`.
pub fn recover_with_erasures<S: Symbol>(
    plan: &RepairPlan,
    word: &[Option<S>],
    coordinate: usize,
) -> Vec<(usize, S)> {
    plan.groups(coordinate)
        .enumerate()
        .filter_map(|(j, g)| {
            g.iter()
                .try_fold(S::default(), |acc, &i| word[i as usize].map(|v| acc ^ v))
                .map(|v| (j, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_code, trace_code};
    use crate::field::{make_coset_family, make_field};

    fn code(ell: u32, h: usize) -> WedgeLiftedCode {
        build_code(&make_coset_family(&make_field(ell).unwrap(), h).unwrap()).unwrap()
    }

    #[test]
    fn plan_shapes() {
        let c = code(4, 5);
        let plan = build_repair_plan(&c).unwrap();
        assert_eq!((plan.t(), plan.group_size()), (3, 75));
        for p in 0..256 {
            let mut union: Vec<u32> = plan.groups(p).flatten().copied().collect();
            union.push(p as u32);
            union.sort_unstable();
            union.dedup();
            assert_eq!(union.len(), 3 * 75 + 1);
            assert_eq!(union.len(), 15 * 15 + 1);
        }
        let plan = build_repair_plan(&code(4, 15)).unwrap();
        assert_eq!((plan.t(), plan.group_size()), (1, 225));
    }

    #[test]
    fn plan_q64() {
        let plan = build_repair_plan(&code(6, 9)).unwrap();
        assert_eq!((plan.t(), plan.group_size()), (7, 567));
    }

    #[test]
    fn repairs_random_codewords() {
        let c = code(4, 5);
        let plan = build_repair_plan(&c).unwrap();
        let report = verify_drgp(&c, &plan, 100, 1).unwrap();
        assert!(report.passed());
        assert_eq!(report.checks, 100 * 256 * 3);
        assert_eq!(report, verify_drgp(&c, &plan, 100, 1).unwrap());

        let tc = trace_code(&c).unwrap();
        let report = verify_drgp_binary(&tc, &plan, 100, 1).unwrap();
        assert!(report.passed());
        assert!(matches!(verify_drgp(&c, &plan, 0, 1), Err(RepairError::NoTrials)));
    }

    #[test]
    fn zero_codeword_repairs() {
        let c = code(3, 7);
        let plan = build_repair_plan(&c).unwrap();
        assert!(verify_word(&plan, &vec![FieldElement::ZERO; 64]));
    }

    #[test]
    fn fault_injection_is_detected() {
        let c = code(4, 5);
        let mut plan = build_repair_plan(&c).unwrap();
        plan.inject_fault(0, 0);
        plan.check_disjoint().unwrap();
        let report = verify_drgp(&c, &plan, 20, 2).unwrap();
        assert!(!report.passed());
        assert!(report.failures.iter().all(|f| f.coordinate == 0 && f.group == 0));
    }

    #[test]
    fn parallel_reads() {
        let c = code(4, 5);
        let plan = build_repair_plan(&c).unwrap();
        let mut rng = trial_rng(4, 0);
        let msg: Vec<FieldElement> = (0..c.exact_dimension())
            .map(|_| FieldElement(rng.gen_range(0..16)))
            .collect();
        let word = c.encode(&msg).unwrap();
        for p in [0, 100, 255] {
            let reads = simulate_parallel_reads(&plan, &word, p, 3).unwrap();
            assert_eq!(reads.recovered, vec![word[p]; 3]);
            assert_eq!(reads.direct, word[p]);
            let one = simulate_parallel_reads(&plan, &word, p, 1).unwrap();
            assert_eq!(one.recovered, vec![word[p]]);
        }
        assert!(matches!(
            simulate_parallel_reads(&plan, &word, 0, 4),
            Err(RepairError::TooManyReads { k: 4, t: 3 })
        ));

        // erase the coordinate and all of group 1
        let p = 77;
        let mut erased: Vec<Option<FieldElement>> = word.iter().copied().map(Some).collect();
        erased[p] = None;
        for &i in plan.group(p, 1) {
            erased[i as usize] = None;
        }
        let rec = recover_with_erasures(&plan, &erased, p);
        assert_eq!(rec, vec![(0, word[p]), (2, word[p])]);
    }
}
