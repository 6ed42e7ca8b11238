//! Brute-force bijectivity and transitivity modulo `p^n`.
//!
//! A 1-Lipschitz map is measure-preserving iff it permutes `Z/p^n` for every
//! `n`, and ergodic iff each of those permutations is a single cycle. Results
//! here are always stated with the level they were checked to.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::ValueTable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("level {level} is outside 1..={n_cert}")]
    Level { level: u32, n_cert: u32 },
    #[error("f is not a permutation modulo p^{level}")]
    NotPermutation { level: u32 },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

fn check_level(values: &ValueTable, level: u32) -> Result<(), OracleError> {
    if level == 0 || level > values.n_cert() {
        return Err(OracleError::Level {
            level,
            n_cert: values.n_cert(),
        });
    }
    Ok(())
}

fn modulus(values: &ValueTable, level: u32) -> u64 {
    (values.p() as u64).pow(level)
}

/// `m ↦ V[m] mod p^n` on `0..p^n`.
fn level_map(values: &ValueTable, level: u32) -> impl Fn(u64) -> u64 + '_ {
    let md = modulus(values, level);
    let v = values.values();
    move |m| v[m as usize] % md
}

/// True iff `{V[m] mod p^n : m < p^n}` has `p^n` distinct elements.
pub fn permutation_check(values: &ValueTable, level: u32) -> Result<bool, OracleError> {
    check_level(values, level)?;
    let md = modulus(values, level);
    let f = level_map(values, level);
    let mut seen = vec![false; md as usize];
    for m in 0..md {
        let y = f(m) as usize;
        if seen[y] {
            return Ok(false);
        }
        seen[y] = true;
    }
    Ok(true)
}

/// Cycle lengths of `m ↦ V[m] mod p^n`, as length → count.
pub fn cycle_structure(values: &ValueTable, level: u32) -> Result<BTreeMap<u64, u64>, OracleError> {
    if !permutation_check(values, level)? {
        return Err(OracleError::NotPermutation { level });
    }
    let md = modulus(values, level);
    let f = level_map(values, level);
    let mut visited = vec![false; md as usize];
    let mut lengths = BTreeMap::new();
    for start in 0..md {
        if visited[start as usize] {
            continue;
        }
        let mut len = 0u64;
        let mut x = start;
        while !visited[x as usize] {
            visited[x as usize] = true;
            len += 1;
            x = f(x);
        }
        *lengths.entry(len).or_insert(0) += 1;
    }
    Ok(lengths)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelReport {
    pub level: u32,
    pub is_permutation: bool,
    pub is_single_cycle: bool,
    /// Cycle length → number of cycles; empty when not a permutation.
    pub cycle_lengths: BTreeMap<u64, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl LevelReport {
    pub fn at(values: &ValueTable, level: u32) -> Result<Self, OracleError> {
        match cycle_structure(values, level) {
            Ok(cycle_lengths) => {
                let single =
                    cycle_lengths.len() == 1 && cycle_lengths.contains_key(&modulus(values, level));
                let reason = (!single).then(|| {
                    let fixed = cycle_lengths.get(&1).copied().unwrap_or(0);
                    let cycles: u64 = cycle_lengths.values().sum();
                    format!("{cycles} cycles ({fixed} fixed points)")
                });
                Ok(Self {
                    level,
                    is_permutation: true,
                    is_single_cycle: single,
                    cycle_lengths,
                    reason,
                })
            }
            Err(OracleError::NotPermutation { .. }) => Ok(Self {
                level,
                is_permutation: false,
                is_single_cycle: false,
                cycle_lengths: BTreeMap::new(),
                reason: Some("not a permutation".into()),
            }),
            Err(e) => Err(e),
        }
    }
}

/// Ladder of per-level reports, stopped at the first level that is not a
/// single cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleReport {
    pub p: u32,
    /// Highest level examined or requested.
    pub max_level: u32,
    pub levels: Vec<LevelReport>,
    pub first_failure: Option<u32>,
}

impl CycleReport {
    /// Transitive at every level `1..=max_level`.
    pub fn all_single_cycle(&self) -> bool {
        self.first_failure.is_none()
    }

    /// Largest `n` such that levels `1..=n` are all single cycles.
    pub fn transitive_to(&self) -> u32 {
        self.first_failure.map_or(self.max_level, |n| n - 1)
    }

    pub fn level(&self, n: u32) -> Option<&LevelReport> {
        self.levels.iter().find(|l| l.level == n)
    }
}

pub fn transitivity_ladder(values: &ValueTable) -> CycleReport {
    transitivity_ladder_to(values, values.n_cert()).expect("n_cert is a valid level")
}

/// Checks levels `1..=max_level`, stopping after the first failure.
pub fn transitivity_ladder_to(
    values: &ValueTable,
    max_level: u32,
) -> Result<CycleReport, OracleError> {
    check_level(values, max_level)?;
    let mut levels = Vec::new();
    let mut first_failure = None;
    for n in 1..=max_level {
        let report = LevelReport::at(values, n)?;
        let single = report.is_single_cycle;
        levels.push(report);
        if !single {
            first_failure = Some(n);
            break;
        }
    }
    Ok(CycleReport {
        p: values.p(),
        max_level,
        levels,
        first_failure,
    })
}

/// First level in `1..=max_level` that is not a permutation.
pub fn first_non_permutation(
    values: &ValueTable,
    max_level: u32,
) -> Result<Option<u32>, OracleError> {
    check_level(values, max_level)?;
    for n in 1..=max_level {
        if !permutation_check(values, n)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// First level in `1..=max_level` that is not a single cycle.
pub fn first_non_transitive(
    values: &ValueTable,
    max_level: u32,
) -> Result<Option<u32>, OracleError> {
    Ok(transitivity_ladder_to(values, max_level)?.first_failure)
}

/// `S_n = Σ_{m<p^n} (digit n of V[m])`; needs `n < n_cert`.
pub fn digit_sum(values: &ValueTable, n: u32) -> u64 {
    let ring = values.ring();
    values.values()[..modulus(values, n) as usize]
        .iter()
        .map(|&v| ring.digit(v, n))
        .sum()
}

/// For `p = 2`: predicts transitivity modulo `2^{n+1}` from the parity of
/// `S_n`, given bijectivity up to `2^{n+1}` and transitivity modulo `2^n`.
pub fn sn_ladder_step(values: &ValueTable, n: u32) -> Result<bool, OracleError> {
    if values.p() != 2 {
        return Err(OracleError::Precondition(format!(
            "p = {} (needs p = 2)",
            values.p()
        )));
    }
    if n == 0 || n + 1 > values.n_cert() {
        return Err(OracleError::Precondition(format!(
            "level {} is beyond n_cert = {}",
            n + 1,
            values.n_cert()
        )));
    }
    if let Some(k) = first_non_permutation(values, n + 1)? {
        return Err(OracleError::Precondition(format!(
            "not a permutation modulo 2^{k}"
        )));
    }
    if let Some(k) = first_non_transitive(values, n)? {
        return Err(OracleError::Precondition(format!(
            "not transitive modulo 2^{k}"
        )));
    }
    Ok(digit_sum(values, n) % 2 == 1)
}

/// On a permutation modulo `p^n`, checks `ord_p(f(x) - f(y)) = ord_p(x - y)`
/// for every pair; returns the first offending pair.
pub fn isometry_violation(
    values: &ValueTable,
    level: u32,
) -> Result<Option<(u64, u64)>, OracleError> {
    check_level(values, level)?;
    let ring = values.ring().coarsen(level);
    let md = ring.modulus();
    let f = level_map(values, level);
    for x in 0..md {
        for y in x + 1..md {
            if ring.valuation(ring.sub(f(x), f(y))) != ring.valuation(y - x) {
                return Ok(Some((x, y)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrimeConfig;
    use proptest::prelude::*;

    fn table(p: u32, n: u32, f: impl Fn(u64) -> i128) -> ValueTable {
        ValueTable::from_fn(PrimeConfig::new(p, n).unwrap(), f).unwrap()
    }

    fn lengths(pairs: &[(u64, u64)]) -> BTreeMap<u64, u64> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn permutation_examples() {
        let shift = table(2, 5, |x| x as i128 + 1);
        assert!((1..=5).all(|n| permutation_check(&shift, n).unwrap()));
        let square = table(2, 2, |x| (x * x) as i128);
        assert!(!permutation_check(&square, 2).unwrap());
        let id = table(3, 3, |x| x as i128);
        assert!(permutation_check(&id, 3).unwrap());
        assert_eq!(
            permutation_check(&id, 4),
            Err(OracleError::Level {
                level: 4,
                n_cert: 3
            })
        );
    }

    #[test]
    fn cycle_examples() {
        assert_eq!(
            cycle_structure(&table(2, 2, |x| x as i128), 2).unwrap(),
            lengths(&[(1, 4)])
        );
        assert_eq!(
            cycle_structure(&table(2, 2, |x| x as i128 + 1), 2).unwrap(),
            lengths(&[(4, 1)])
        );
        let f = table(2, 3, |x| 1 + x as i128 + (x * x) as i128);
        assert_eq!(
            cycle_structure(&f, 2),
            Err(OracleError::NotPermutation { level: 2 })
        );
        // x ↦ 3x on Z/8: fixed 0 and 4, transpositions (1 3), (5 7), (2 6)
        assert_eq!(
            cycle_structure(&table(2, 3, |x| 3 * x as i128), 3).unwrap(),
            lengths(&[(1, 2), (2, 3)])
        );
    }

    #[test]
    fn ladder_examples() {
        let r = transitivity_ladder(&table(5, 4, |x| x as i128 + 1));
        assert!(r.all_single_cycle());
        assert_eq!(r.transitive_to(), 4);
        assert_eq!(r.levels.len(), 4);

        let r = transitivity_ladder(&table(3, 4, |x| x as i128));
        assert_eq!(r.first_failure, Some(1));
        assert_eq!(r.levels.len(), 1);
        assert_eq!(r.levels[0].cycle_lengths, lengths(&[(1, 3)]));

        let r = transitivity_ladder(&table(2, 12, |x| 1 + x as i128 + 4 * (x * x) as i128));
        assert!(r.all_single_cycle());

        let r = transitivity_ladder(&table(2, 6, |x| 1 + x as i128 + (x * x) as i128));
        assert_eq!(r.first_failure, Some(1));
        assert!(!r.levels[0].is_permutation);
    }

    #[test]
    fn digit_sums() {
        let f = table(2, 6, |x| x as i128 + 1);
        assert!((1..6).all(|n| digit_sum(&f, n) == 1));
        let f = table(2, 6, |x| x as i128);
        assert!((1..6).all(|n| digit_sum(&f, n) == 0));
        // f(0..4) = 1, 3, 7, 13 has bit 2 set on 7 and 13.
        let f = table(2, 6, |x| 1 + x as i128 + (x * x) as i128);
        assert_eq!(digit_sum(&f, 2), 2);
    }

    #[test]
    fn sn_ladder_examples() {
        let f = table(2, 8, |x| x as i128 + 1);
        assert!((1..8).all(|n| sn_ladder_step(&f, n).unwrap()));
        // 1 + x + x² is not bijective modulo 4, so the step is undefined.
        let f = table(2, 6, |x| 1 + x as i128 + (x * x) as i128);
        assert!(matches!(
            sn_ladder_step(&f, 2),
            Err(OracleError::Precondition(_))
        ));
        // 1 + 3x: transitive mod 2, S_1 = 0 predicts failure mod 4.
        let f = table(2, 6, |x| 1 + 3 * x as i128);
        assert!(!sn_ladder_step(&f, 1).unwrap());
        assert_eq!(transitivity_ladder(&f).first_failure, Some(2));
        assert!(matches!(
            sn_ladder_step(&f, 2),
            Err(OracleError::Precondition(_))
        ));
        assert!(matches!(
            sn_ladder_step(&f, 6),
            Err(OracleError::Precondition(_))
        ));
        assert!(matches!(
            sn_ladder_step(&table(3, 3, |x| x as i128 + 1), 1),
            Err(OracleError::Precondition(_))
        ));
    }

    #[test]
    fn isometry_examples() {
        assert_eq!(
            isometry_violation(&table(3, 4, |x| 2 + 4 * x as i128), 4).unwrap(),
            None
        );
        assert!(isometry_violation(&table(2, 4, |x| (x * x) as i128), 4)
            .unwrap()
            .is_some());
    }

    fn odd_poly() -> impl Strategy<Value = (i128, i128, i128, i128)> {
        (0i128..64, 0i128..64, 0i128..64, 0i128..64)
    }

    proptest! {
        #[test]
        fn failures_persist_upwards((a0, a1, a2, a3) in odd_poly()) {
            let f = table(2, 9, |x| {
                let x = x as i128;
                a0 + a1 * x + a2 * x * x + a3 * x * x * x
            });
            let first_perm = first_non_permutation(&f, 9).unwrap();
            for n in 1..=9 {
                let perm = permutation_check(&f, n).unwrap();
                prop_assert_eq!(perm, first_perm.is_none_or(|k| n < k));
            }
            if let Some(k) = transitivity_ladder(&f).first_failure {
                for n in k..=9 {
                    prop_assert!(!LevelReport::at(&f, n).unwrap().is_single_cycle);
                }
            }
        }

        #[test]
        fn cycle_lengths_cover_the_ring(a0 in 0i128..27, a1 in 0i128..27, p in prop::sample::select(vec![2u32, 3, 5])) {
            let f = table(p, 3, |x| a0 + (3 * a1 + 1) * x as i128);
            if permutation_check(&f, 3).unwrap() {
                let total: u64 = cycle_structure(&f, 3).unwrap().iter().map(|(l, c)| l * c).sum();
                prop_assert_eq!(total, (p as u64).pow(3));
            }
        }

        #[test]
        fn sn_parity_predicts_next_level(a0 in 0i128..256, a1 in 0i128..256, a2 in 0i128..256) {
            let f = table(2, 10, |x| {
                let x = x as i128;
                a0 + a1 * x + 2 * a2 * x * x
            });
            for n in 1..10 {
                if let Ok(pred) = sn_ladder_step(&f, n) {
                    prop_assert_eq!(pred, LevelReport::at(&f, n + 1).unwrap().is_single_cycle);
                }
            }
        }
    }
}
