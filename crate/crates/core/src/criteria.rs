//! Coefficient criteria for 1-Lipschitz, measure-preserving and ergodic maps.
//!
//! Each check returns a [`Verdict`] listing every condition with its first
//! violating index. Conditions quantified over all `m` or all levels are
//! checked on the finite table only, and a congruence modulo `p^e` is read
//! modulo `p^min(e, N)` when the table is known only to `N` digits.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::bases::{vdp_extract, BasesError, MahlerTable, NormalizedVdp, VdpTable};
use crate::model::ValueTable;
use crate::oracle::{self, OracleError};
use crate::padic::{decompose_index, floor_log, ResidueRing};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriteriaError {
    #[error("{criterion} needs p = {expected}, got p = {got}")]
    Prime {
        criterion: &'static str,
        expected: u32,
        got: u32,
    },
    #[error("{criterion} needs precision at least {needed}, got {got}")]
    Precision {
        criterion: &'static str,
        needed: u32,
        got: u32,
    },
    #[error("normalization unsupported: constant term is {0}, expected 1")]
    Normalization(BigInt),
    #[error(transparent)]
    Bases(#[from] BasesError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Coefficient index and its residue.
    Index { m: u64, value: u64 },
    /// Block level and the offending residue.
    Level { n: u32, value: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub label: String,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Condition {
    fn new(label: impl Into<String>, witness: Option<Witness>) -> Self {
        Self {
            label: label.into(),
            satisfied: witness.is_none(),
            witness,
            note: None,
        }
    }

    fn flag(label: impl Into<String>, satisfied: bool) -> Self {
        Self {
            label: label.into(),
            satisfied,
            witness: None,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub conditions: Vec<Condition>,
    /// Table precision the conditions were checked to; `None` for criteria
    /// on exact integers.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified_to: Option<u32>,
}

impl Verdict {
    fn new(criterion: &str, verified_to: Option<u32>, conditions: Vec<Condition>) -> Self {
        Self {
            criterion: criterion.to_string(),
            passed: conditions.iter().all(|c| c.satisfied),
            conditions,
            verified_to,
        }
    }

    /// First unsatisfied condition.
    pub fn first_failure(&self) -> Option<&Condition> {
        self.conditions.iter().find(|c| !c.satisfied)
    }

    pub fn condition(&self, label_prefix: &str) -> Option<&Condition> {
        self.conditions
            .iter()
            .find(|c| c.label.starts_with(label_prefix))
    }
}

/// `x ≡ 0 (mod p^min(e, N))`.
fn divisible(ring: &ResidueRing, x: u64, e: u32) -> bool {
    x.is_multiple_of(ring.p_pow(e.min(ring.precision())))
}

fn congruent(ring: &ResidueRing, x: u64, y: u64, e: u32) -> bool {
    divisible(ring, ring.sub(x, y), e)
}

fn first_index(
    coeffs: &[u64],
    range: std::ops::Range<u64>,
    ok: impl Fn(u64, u64) -> bool,
) -> Option<Witness> {
    range
        .map(|m| (m, coeffs[m as usize]))
        .find(|&(m, v)| !ok(m, v))
        .map(|(m, value)| Witness::Index { m, value })
}

fn require_p2(criterion: &'static str, p: u32) -> Result<(), CriteriaError> {
    if p != 2 {
        return Err(CriteriaError::Prime {
            criterion,
            expected: 2,
            got: p,
        });
    }
    Ok(())
}

/// Index of the first `m < p` whose residue mod `p` repeats an earlier one.
fn first_collision_mod_p(coeffs: &[u64], p: u64) -> Option<Witness> {
    let mut seen = vec![false; p as usize];
    for m in 0..p {
        let r = (coeffs[m as usize] % p) as usize;
        if seen[r] {
            return Some(Witness::Index {
                m,
                value: coeffs[m as usize],
            });
        }
        seen[r] = true;
    }
    None
}

/// `Σ_{m = p^{n-1}}^{p^n - 1} x_m` in the ring; block 1 is `0..p`.
fn block_sum(ring: &ResidueRing, coeffs: &[u64], n: u32) -> u64 {
    let (lo, hi) = block_range(ring.p(), n);
    ring.sum(coeffs[lo as usize..hi as usize].iter().copied())
}

fn block_range(p: u64, n: u32) -> (u64, u64) {
    if n <= 1 {
        (0, p)
    } else {
        (p.pow(n - 1), p.pow(n))
    }
}

/// `½ (p - 1) p^k mod p^e`, an integer for every prime.
fn half_term(p: u64, k: u32, e: u32) -> u64 {
    let md = p.pow(e);
    if p == 2 {
        if k == 0 {
            unreachable!("(p-1)p^k/2 is not an integer for p = 2, k = 0")
        }
        if k > e {
            0
        } else {
            1u64 << (k - 1)
        }
    } else if k >= e {
        0
    } else {
        ((p - 1) / 2 * p.pow(k)) % md
    }
}

pub fn mahler_lipschitz(t: &MahlerTable) -> Verdict {
    let ring = t.ring();
    let p = ring.p();
    let w = first_index(t.coeffs(), 0..t.len() as u64, |m, a| {
        ring.valuation(a).at_least(floor_log(m, p))
    });
    Verdict::new(
        "mahler_lipschitz",
        Some(t.precision()),
        vec![Condition::new("ord_p a_m >= floor(log_p m)", w)],
    )
}

pub fn mahler_mp_sufficient(t: &MahlerTable) -> Verdict {
    let ring = t.ring();
    let p = ring.p();
    let a = t.coeffs();
    let unit = first_index(a, 1..2, |_, a1| a1 % p != 0);
    let rest = first_index(a, 2..a.len() as u64, |m, am| {
        divisible(&ring, am, floor_log(m, p) + 1)
    });
    Verdict::new(
        "mahler_mp_sufficient",
        Some(t.precision()),
        vec![
            Condition::new("(1) a_1 is a unit", unit),
            Condition::new("(2) ord_p a_m >= floor(log_p m) + 1 for m >= 2", rest),
        ],
    )
}

pub fn mahler_ergodic_sufficient_p(t: &MahlerTable) -> Verdict {
    let ring = t.ring();
    let p = ring.p();
    let a = t.coeffs();
    Verdict::new(
        "mahler_ergodic_sufficient_p",
        Some(t.precision()),
        vec![
            Condition::new(
                "(1) a_0 != 0 mod p",
                first_index(a, 0..1, |_, v| v % p != 0),
            ),
            Condition::new("(2) a_1 = 1 mod p", first_index(a, 1..2, |_, v| v % p == 1)),
            Condition::new(
                "(3) a_m = 0 mod p^(floor(log_p(m+1)) + 1) for m >= 2",
                first_index(a, 2..a.len() as u64, |m, v| {
                    divisible(&ring, v, floor_log(m + 1, p) + 1)
                }),
            ),
        ],
    )
}

pub fn mahler_ergodic_exact_2(t: &MahlerTable) -> Result<Verdict, CriteriaError> {
    require_p2("mahler_ergodic_exact_2", t.cfg().p())?;
    let ring = t.ring();
    let a = t.coeffs();
    Ok(Verdict::new(
        "mahler_ergodic_exact_2",
        Some(t.precision()),
        vec![
            Condition::new("(1) a_0 = 1 mod 2", first_index(a, 0..1, |_, v| v % 2 == 1)),
            Condition::new(
                "(2) a_1 = 1 mod 4",
                first_index(a, 1..2, |_, v| congruent(&ring, v, 1, 2)),
            ),
            Condition::new(
                "(3) a_m = 0 mod 2^(floor(log_2(m+1)) + 1) for m >= 2",
                first_index(a, 2..a.len() as u64, |m, v| {
                    divisible(&ring, v, floor_log(m + 1, 2) + 1)
                }),
            ),
        ],
    ))
}

pub fn vdp_lipschitz(t: &VdpTable) -> Verdict {
    let ring = t.ring();
    let p = ring.p();
    let w = first_index(t.coeffs(), 0..t.len() as u64, |m, b| {
        ring.valuation(b).at_least(floor_log(m, p))
    });
    Verdict::new(
        "vdp_lipschitz",
        Some(t.precision()),
        vec![Condition::new("ord_p B_m >= floor(log_p m)", w)],
    )
}

pub fn vdp_mp_sufficient_p(t: &VdpTable) -> Verdict {
    let ring = t.ring();
    let p = ring.p();
    let b = t.coeffs();
    let q = first_index(b, p..b.len() as u64, |m, v| {
        let d = decompose_index(m, p as u32);
        congruent(&ring, v, d.q, d.s + 1)
    });
    Verdict::new(
        "vdp_mp_sufficient_p",
        Some(t.precision()),
        vec![
            Condition::new(
                "(1) B_0, ..., B_{p-1} distinct mod p",
                first_collision_mod_p(b, p),
            ),
            Condition::new("(2) B_m = q(m) mod p^(floor(log_p m) + 1)", q),
        ],
    )
}

pub fn vdp_mp_necessary(t: &VdpTable) -> Verdict {
    let ring = t.ring();
    let p = ring.p();
    let b = t.coeffs();
    let exact = first_index(b, p..b.len() as u64, |m, v| {
        ring.valuation(v).finite() == Some(floor_log(m, p))
    });
    Verdict::new(
        "vdp_mp_necessary",
        Some(t.precision()),
        vec![
            Condition::new(
                "(1) B_0, ..., B_{p-1} distinct mod p",
                first_collision_mod_p(b, p),
            ),
            Condition::new("(2) ord_p B_m = floor(log_p m) for m >= p", exact),
        ],
    )
}

pub fn vdp_mp_exact_2(t: &NormalizedVdp) -> Result<Verdict, CriteriaError> {
    require_p2("vdp_mp_exact_2", t.cfg().p())?;
    let b = t.values();
    let s01 = (b[0] + b[1]) % 2 == 1;
    Ok(Verdict::new(
        "vdp_mp_exact_2",
        Some(t.cfg().precision()),
        vec![
            Condition::new(
                "(1) b_0 + b_1 = 1 mod 2",
                (!s01).then_some(Witness::Index { m: 1, value: b[1] }),
            ),
            Condition::new(
                "(2) b_m odd for m >= 2",
                first_index(b, 2..b.len() as u64, |_, v| v % 2 == 1),
            ),
        ],
    ))
}

/// `Σ b_m` over block `n`, modulo `p^e`.
fn normalized_block_sum(t: &NormalizedVdp, n: u32, e: u32) -> u64 {
    let p = t.cfg().p() as u64;
    let md = p.pow(e) as u128;
    let (lo, hi) = block_range(p, n);
    (t.values()[lo as usize..hi as usize]
        .iter()
        .fold(0u128, |acc, &v| (acc + v as u128) % md)) as u64
}

pub fn vdp_ergodic_exact_2(t: &NormalizedVdp) -> Result<Verdict, CriteriaError> {
    require_p2("vdp_ergodic_exact_2", t.cfg().p())?;
    let n_cert = t.cfg().precision();
    let b = t.values();
    let mut conditions = vec![Condition::new(
        "(1) b_0 odd",
        b[0].is_multiple_of(2)
            .then_some(Witness::Index { m: 0, value: b[0] }),
    )];
    let m01 = 4u64.min(1 << n_cert);
    conditions.push(Condition::new(
        "(2) b_0 + b_1 = 3 mod 4",
        ((b[0] + b[1]) % m01 != 3 % m01).then_some(Witness::Index { m: 1, value: b[1] }),
    ));
    let c3 = if b.len() >= 4 {
        let m23 = 4u64.min(1 << t.b_precision(2));
        Condition::new(
            "(3) b_2 + b_3 = 2 mod 4",
            ((b[2] + b[3]) % m23 != 2 % m23).then_some(Witness::Index { m: 3, value: b[3] }),
        )
    } else {
        Condition::flag("(3) b_2 + b_3 = 2 mod 4", true)
            .with_note("no coefficients at this precision")
    };
    conditions.push(c3);
    conditions.push(Condition::new(
        "(4) b_m odd for m >= 2",
        first_index(b, 2..b.len() as u64, |_, v| v % 2 == 1),
    ));
    let block = (3..n_cert)
        .map(|n| (n, normalized_block_sum(t, n, 2)))
        .find(|&(_, s)| s != 0)
        .map(|(n, value)| Witness::Level { n, value });
    conditions.push(
        Condition::new("(5) sum of b_m over block n = 0 mod 4 for n >= 3", block)
            .with_note(format!("checked for 3 <= n < {n_cert}")),
    );
    Ok(Verdict::new(
        "vdp_ergodic_exact_2",
        Some(n_cert),
        conditions,
    ))
}

pub fn vdp_ergodic_sufficient_p(t: &VdpTable) -> Result<Verdict, CriteriaError> {
    let n_cert = t.precision();
    if n_cert < 3 {
        return Err(CriteriaError::Precision {
            criterion: "vdp_ergodic_sufficient_p",
            needed: 3,
            got: n_cert,
        });
    }
    let ring = t.ring();
    let p = ring.p();
    let b = t.coeffs();
    let s = b[0] % p;

    let c1 = Condition::new(
        "(1) B_0 = s mod p with 0 < s < p",
        (s == 0).then_some(Witness::Index { m: 0, value: b[0] }),
    )
    .with_note(format!("s = {s}"));

    let sum1 = block_sum(&ring, b, 1);
    let target1 = (p * s + (p - 1) * p / 2) % (p * p);
    let c2 = Condition::new(
        "(2) sum_{m<p} B_m = ps + (p-1)p/2 mod p^2",
        (sum1 % (p * p) != target1).then_some(Witness::Level { n: 1, value: sum1 }),
    );

    let sum2 = block_sum(&ring, b, 2);
    let p3 = p.pow(3);
    let c3 = Condition::new(
        "(3) sum_{m=p}^{p^2-1} B_m = (p-1)p^3/2 mod p^3",
        (sum2 % p3 != half_term(p, 3, 3)).then_some(Witness::Level { n: 2, value: sum2 }),
    );

    let c4 = Condition::new(
        "(4) B_m = q(m) mod p^(floor(log_p m) + 1)",
        first_index(b, p..b.len() as u64, |m, v| {
            let d = decompose_index(m, p as u32);
            congruent(&ring, v, d.q, d.s + 1)
        }),
    );

    let block = (3..n_cert)
        .map(|n| (n, block_sum(&ring, b, n)))
        .find(|&(n, v)| !divisible(&ring, v, n + 1))
        .map(|(n, value)| Witness::Level { n, value });
    let c5 = Condition::new(
        "(5) sum of B_m over block n = 0 mod p^(n+1) for n >= 3",
        block,
    )
    .with_note(format!("checked for 3 <= n < {n_cert}"));

    let c6 = Condition::new(
        "(6) B_m = B_0 + m mod p for 0 < m < p",
        first_index(b, 1..p, |m, v| (v + p - (b[0] + m) % p).is_multiple_of(p)),
    );

    Ok(Verdict::new(
        "vdp_ergodic_sufficient_p",
        Some(n_cert),
        vec![c1, c2, c3, c4, c5, c6],
    ))
}

/// Digit statistics of a value table and its normalised coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DigitStats {
    /// `S_n = Σ_{m<p^n} f_{mn}` for `1 <= n < n_cert`.
    pub s: BTreeMap<u32, u64>,
    /// `T_n = Σ_{block n} b_{m1}` for `2 <= n < n_cert`.
    pub t: BTreeMap<u32, u64>,
}

pub fn digit_stats(values: &ValueTable) -> Result<DigitStats, CriteriaError> {
    let n_cert = values.n_cert();
    let p = values.p() as u64;
    let s = (1..n_cert)
        .map(|n| (n, oracle::digit_sum(values, n)))
        .collect();
    let b = NormalizedVdp::from_vdp(&vdp_extract(values))?;
    let t = (2..n_cert)
        .map(|n| {
            let (lo, hi) = block_range(p, n);
            let total = (lo..hi)
                .map(|m| b.digit(m, 1).expect("b_m has two digits below n_cert"))
                .sum();
            (n, total)
        })
        .collect();
    Ok(DigitStats { s, t })
}

/// `Σ_{block n} B_m = Σ_{m<p^n} f(m) - p Σ_{m<p^{n-1}} f(m)` modulo `p^{n_cert}`.
pub fn block_sum_identity_check(values: &ValueTable) -> Verdict {
    let ring = values.ring();
    let p = ring.p();
    let v = values.values();
    let b = vdp_extract(values);
    let n_cert = values.n_cert();
    let prefix = |k: u32| ring.sum(v[..p.pow(k) as usize].iter().copied());
    let conditions = (2..n_cert)
        .map(|n| {
            let lhs = block_sum(&ring, b.coeffs(), n);
            let rhs = ring.sub(prefix(n), ring.mul(p, prefix(n - 1)));
            Condition::new(
                format!("n = {n}"),
                (lhs != rhs).then_some(Witness::Level { n, value: lhs }),
            )
        })
        .collect();
    Verdict::new("block_sum_identity", Some(n_cert), conditions)
}

fn require_measure_preserving(values: &ValueTable) -> Result<NormalizedVdp, CriteriaError> {
    if let Some(k) = oracle::first_non_permutation(values, values.n_cert())? {
        return Err(CriteriaError::Precondition(format!(
            "not a permutation modulo p^{k}"
        )));
    }
    NormalizedVdp::from_vdp(&vdp_extract(values))
        .map_err(|_| CriteriaError::Precondition("table is not 1-Lipschitz".into()))
}

/// `Σ_{block n} B_m ≡ ½(p-1)p^{2n-1} + T_n p^n (mod p^{n+1})` on a
/// measure-preserving table.
pub fn prop34_congruence_check(values: &ValueTable) -> Result<Verdict, CriteriaError> {
    require_measure_preserving(values)?;
    let stats = digit_stats(values)?;
    let ring = values.ring();
    let p = ring.p();
    let b = vdp_extract(values);
    let n_cert = values.n_cert();
    let conditions = (2..n_cert)
        .map(|n| {
            let md = p.pow(n + 1);
            let lhs = block_sum(&ring, b.coeffs(), n) % md;
            let t = stats.t[&n];
            let rhs = (half_term(p, 2 * n - 1, n + 1) + (t % p) * p.pow(n)) % md;
            Condition::new(
                format!("n = {n}"),
                (lhs != rhs).then_some(Witness::Level { n, value: lhs }),
            )
            .with_note(format!("T_n = {t}"))
        })
        .collect();
    Ok(Verdict::new("prop34_congruence", Some(n_cert), conditions))
}

/// The four residues tied together at one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EquivalenceLevel {
    pub n: u32,
    /// `Σ B_m / p^n mod p`, if `p^n` divides the block sum.
    pub r_b: Option<u64>,
    /// `Σ b_m / p mod p`, if `p` divides the normalised block sum.
    pub r_normalized: Option<u64>,
    /// `S_n - S_{n-1} mod p`.
    pub r_s: u64,
    /// `T_n mod p`.
    pub r_t: u64,
    /// `(p-1)p^{n-1}/2 mod p`; 1 only for `(p, n) = (2, 2)`.
    pub offset: u64,
    pub coherent: bool,
}

pub fn equivalence_levels(values: &ValueTable) -> Result<Vec<EquivalenceLevel>, CriteriaError> {
    let normalized = require_measure_preserving(values)?;
    let stats = digit_stats(values)?;
    let ring = values.ring();
    let p = ring.p();
    let b = vdp_extract(values);
    Ok((2..values.n_cert())
        .map(|n| {
            let pn = p.pow(n);
            let sum_b = block_sum(&ring, b.coeffs(), n) % (pn * p);
            let r_b = sum_b.is_multiple_of(pn).then_some(sum_b / pn);
            let sum_norm = normalized_block_sum(&normalized, n, 2);
            let r_normalized = sum_norm.is_multiple_of(p).then_some(sum_norm / p);
            let r_s = (stats.s[&n] % p + p - stats.s[&(n - 1)] % p) % p;
            let r_t = stats.t[&n] % p;
            let offset = half_term(p, n, 2) / p;
            let coherent = r_b.is_some()
                && r_b == r_normalized
                && r_s == r_t
                && r_b == Some((r_t + offset) % p);
            EquivalenceLevel {
                n,
                r_b,
                r_normalized,
                r_s,
                r_t,
                offset,
                coherent,
            }
        })
        .collect())
}

/// Checks that the block sum of `B`, the block sum of `b`, the step
/// `S_n - S_{n-1}` and `T_n` all determine the same residue `r`.
pub fn equivalence_chain_check(values: &ValueTable) -> Result<Verdict, CriteriaError> {
    let conditions = equivalence_levels(values)?
        .into_iter()
        .map(|l| {
            let c = Condition::new(
                format!("n = {}", l.n),
                (!l.coherent).then_some(Witness::Level {
                    n: l.n,
                    value: l.r_b.unwrap_or(u64::MAX),
                }),
            );
            match l.r_b {
                Some(r) if l.coherent => c.with_note(format!("r = {r}")),
                _ => c.with_note(format!(
                    "r_B = {:?}, r_b = {:?}, r_S = {}, r_T = {}",
                    l.r_b, l.r_normalized, l.r_s, l.r_t
                )),
            }
        })
        .collect();
    Ok(Verdict::new(
        "equivalence_chain",
        Some(values.n_cert()),
        conditions,
    ))
}

/// `A_0 = Σ_{i even, i>0} a_i`, `A_1 = Σ_{i odd} a_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyParitySums {
    pub a0: BigInt,
    pub a1: BigInt,
}

impl PolyParitySums {
    pub fn new(coeffs: &[BigInt]) -> Self {
        let mut a0 = BigInt::zero();
        let mut a1 = BigInt::zero();
        for (i, c) in coeffs.iter().enumerate().skip(1) {
            if i % 2 == 0 {
                a0 += c;
            } else {
                a1 += c;
            }
        }
        Self { a0, a1 }
    }
}

fn residue_is(x: &BigInt, modulus: u32, target: u32) -> bool {
    x.mod_floor(&BigInt::from(modulus)) == BigInt::from(target)
}

/// Ergodicity of an integer polynomial over `Z_2`, normalised to `f(0) = 1`.
pub fn poly_ergodic_z2(coeffs: &[BigInt]) -> Result<Verdict, CriteriaError> {
    let a0 = coeffs.first().cloned().unwrap_or_default();
    if !a0.is_one() {
        return Err(CriteriaError::Normalization(a0));
    }
    let coeff = |i: usize| coeffs.get(i).cloned().unwrap_or_default();
    let sums = PolyParitySums::new(coeffs);
    let a1 = coeff(1);
    let a2 = coeff(2);
    let deriv = &a1 + BigInt::from(2) * &a2 + &sums.a1;
    let both = &sums.a0 + &sums.a1;
    let conditions = vec![
        Condition::flag("(1) a_1 = 1 mod 2", residue_is(&a1, 2, 1)),
        Condition::flag("(2) A_1 = 1 mod 2", residue_is(&sums.a1, 2, 1))
            .with_note(format!("A_1 = {}", sums.a1)),
        Condition::flag("(3) A_0 + A_1 = 1 mod 4", residue_is(&both, 4, 1))
            .with_note(format!("A_0 = {}", sums.a0)),
        Condition::flag("(4) a_1 + 2a_2 + A_1 = 2 mod 4", residue_is(&deriv, 4, 2)),
    ];
    Ok(Verdict::new("poly_ergodic_z2", None, conditions))
}
