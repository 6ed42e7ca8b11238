//! Truncated p-adic integers.
//!
//! A [`PadicTrunc`] is a residue of `Z_p` modulo `p^N`, stored as its `N`
//! base-p digits in little-endian order. Coefficient and value tables use the
//! word-sized [`ResidueRing`] instead, since every table materialised by this
//! crate has at most `p^n` entries for a modest `n`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported precision, in base-p digits.
pub const MAX_PRECISION: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("precision {0} is outside 1..={MAX_PRECISION}")]
    Precision(u32),
    #[error(
        "operands live in different rings (p={left_p}, N={left_n} vs p={right_p}, N={right_n})"
    )]
    ConfigMismatch {
        left_p: u32,
        left_n: u32,
        right_p: u32,
        right_n: u32,
    },
    #[error("digit index {index} out of range for precision {precision}")]
    DigitIndex { index: usize, precision: u32 },
    #[error("digit {digit} is not below p={p}")]
    DigitRange { digit: u32, p: u32 },
    #[error("{p}^{n} does not fit in a 64-bit residue")]
    ModulusOverflow { p: u32, n: u32 },
}

/// Deterministic primality test by trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// A prime `p` together with a working precision `N` (residues mod `p^N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeConfig {
    p: u32,
    precision: u32,
}

impl PrimeConfig {
    pub fn new(p: u32, precision: u32) -> Result<Self, PadicError> {
        if !is_prime(p as u64) {
            return Err(PadicError::NotPrime(p as u64));
        }
        if precision == 0 || precision > MAX_PRECISION {
            return Err(PadicError::Precision(precision));
        }
        Ok(Self { p, precision })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Same prime, different precision.
    pub fn with_precision(&self, precision: u32) -> Result<Self, PadicError> {
        Self::new(self.p, precision)
    }

    /// Word-sized residue ring `Z / p^N`.
    pub fn ring(&self) -> Result<ResidueRing, PadicError> {
        ResidueRing::new(self.p, self.precision)
    }

    /// `p^k` if it fits in a `u64`.
    pub fn pow(&self, k: u32) -> Option<u64> {
        (self.p as u64).checked_pow(k)
    }
}

impl fmt::Display for PrimeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={}, N={}", self.p, self.precision)
    }
}

/// `⌊log_p m⌋`, with the convention `⌊log_p 0⌋ = 0`.
pub fn floor_log(m: u64, p: u64) -> u32 {
    let mut s = 0;
    let mut m = m / p;
    while m > 0 {
        s += 1;
        m /= p;
    }
    s
}

/// The split `m = tail + q` where `q = m_s p^s` is the leading base-p term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexDecomposition {
    pub m: u64,
    /// `⌊log_p m⌋`
    pub s: u32,
    /// `m_s`, the leading digit (0 only for `m = 0`).
    pub leading_digit: u64,
    /// `q(m) = m_s p^s`
    pub q: u64,
    /// `m_ = m - q(m)`
    pub tail: u64,
}

pub fn decompose_index(m: u64, p: u32) -> IndexDecomposition {
    let p = p as u64;
    let s = floor_log(m, p);
    let ps = p.pow(s);
    let leading_digit = m / ps;
    let q = leading_digit * ps;
    IndexDecomposition {
        m,
        s,
        leading_digit,
        q,
        tail: m - q,
    }
}

/// Additive valuation `ord_p` of a truncated value.
///
/// `Infinite` means the value is zero at the working precision; it compares
/// greater than every finite valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    /// True when the valuation is at least `k` (zero satisfies every bound).
    pub fn at_least(self, k: u32) -> bool {
        match self {
            Valuation::Finite(v) => v >= k,
            Valuation::Infinite => true,
        }
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

/// A p-adic integer known modulo `p^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PadicTrunc {
    p: u32,
    digits: Vec<u32>,
}

impl PadicTrunc {
    pub fn zero(cfg: PrimeConfig) -> Self {
        Self {
            p: cfg.p,
            digits: vec![0; cfg.precision as usize],
        }
    }

    pub fn one(cfg: PrimeConfig) -> Self {
        Self::from_u128(1, cfg)
    }

    pub fn from_digits(digits: Vec<u32>, p: u32) -> Result<Self, PadicError> {
        let cfg = PrimeConfig::new(p, digits.len() as u32)?;
        if let Some(&digit) = digits.iter().find(|&&d| d >= p) {
            return Err(PadicError::DigitRange { digit, p });
        }
        Ok(Self { p: cfg.p, digits })
    }

    pub fn from_u128(mut v: u128, cfg: PrimeConfig) -> Self {
        let p = cfg.p as u128;
        let digits = (0..cfg.precision)
            .map(|_| {
                let d = (v % p) as u32;
                v /= p;
                d
            })
            .collect();
        Self { p: cfg.p, digits }
    }

    pub fn from_u64(v: u64, cfg: PrimeConfig) -> Self {
        Self::from_u128(v as u128, cfg)
    }

    /// Base-p digits of `v mod p^N`; negative inputs wrap.
    pub fn from_integer(v: i128, cfg: PrimeConfig) -> Self {
        let magnitude = Self::from_u128(v.unsigned_abs(), cfg);
        if v < 0 {
            magnitude.neg()
        } else {
            magnitude
        }
    }

    pub fn from_bigint(v: &BigInt, cfg: PrimeConfig) -> Self {
        let p = BigInt::from(cfg.p);
        let mut rest = v.mod_floor(&BigInt::from(BigUint::from(cfg.p).pow(cfg.precision)));
        let digits = (0..cfg.precision)
            .map(|_| {
                let (q, r) = rest.div_rem(&p);
                rest = q;
                r.to_u32().expect("digit below p")
            })
            .collect();
        Self { p: cfg.p, digits }
    }

    pub fn cfg(&self) -> PrimeConfig {
        PrimeConfig {
            p: self.p,
            precision: self.digits.len() as u32,
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.digits.len() as u32
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn digit(&self, i: usize) -> Result<u32, PadicError> {
        self.digits.get(i).copied().ok_or(PadicError::DigitIndex {
            index: i,
            precision: self.precision(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    pub fn valuation(&self) -> Valuation {
        match self.digits.iter().position(|&d| d != 0) {
            Some(i) => Valuation::Finite(i as u32),
            None => Valuation::Infinite,
        }
    }

    /// Canonical representative in `[0, p^N)`.
    pub fn to_biguint(&self) -> BigUint {
        self.digits
            .iter()
            .rev()
            .fold(BigUint::zero(), |acc, &d| acc * self.p + d)
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.digits.iter().rev().try_fold(0u64, |acc, &d| {
            acc.checked_mul(self.p as u64)?.checked_add(d as u64)
        })
    }

    /// Residue modulo `p^k` for the ring's `k <= N`.
    pub fn to_residue(&self, ring: &ResidueRing) -> u64 {
        let k = (ring.precision() as usize).min(self.digits.len());
        self.digits[..k]
            .iter()
            .rev()
            .fold(0u64, |acc, &d| acc * ring.p() + d as u64)
    }

    /// Reduction to a lower precision `k <= N`.
    pub fn truncate(&self, k: u32) -> Result<Self, PadicError> {
        if k == 0 || k > self.precision() {
            return Err(PadicError::Precision(k));
        }
        Ok(Self {
            p: self.p,
            digits: self.digits[..k as usize].to_vec(),
        })
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut digits: Vec<u32> = self.digits.iter().map(|&d| self.p - 1 - d).collect();
        for d in digits.iter_mut() {
            if *d + 1 == self.p {
                *d = 0;
            } else {
                *d += 1;
                break;
            }
        }
        Self { p: self.p, digits }
    }

    fn check_same(&self, other: &Self) -> Result<(), PadicError> {
        if self.p != other.p || self.digits.len() != other.digits.len() {
            return Err(PadicError::ConfigMismatch {
                left_p: self.p,
                left_n: self.precision(),
                right_p: other.p,
                right_n: other.precision(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, PadicError> {
        self.check_same(other)?;
        let p = self.p as u64;
        let mut carry = 0u64;
        let digits = self
            .digits
            .iter()
            .zip(&other.digits)
            .map(|(&a, &b)| {
                let t = a as u64 + b as u64 + carry;
                carry = t / p;
                (t % p) as u32
            })
            .collect();
        Ok(Self { p: self.p, digits })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, PadicError> {
        self.check_same(other)?;
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, PadicError> {
        self.check_same(other)?;
        let n = self.digits.len();
        let p = self.p as u128;
        let mut digits = Vec::with_capacity(n);
        let mut carry = 0u128;
        for k in 0..n {
            let mut acc = carry;
            for i in 0..=k {
                acc += self.digits[i] as u128 * other.digits[k - i] as u128;
            }
            digits.push((acc % p) as u32);
            carry = acc / p;
        }
        Ok(Self { p: self.p, digits })
    }
}

impl fmt::Display for PadicTrunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_biguint())
    }
}

/// `Z / p^n` with residues held in a `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResidueRing {
    p: u64,
    n: u32,
    modulus: u64,
}

impl ResidueRing {
    pub fn new(p: u32, n: u32) -> Result<Self, PadicError> {
        let modulus = (p as u64)
            .checked_pow(n)
            .ok_or(PadicError::ModulusOverflow { p, n })?;
        Ok(Self {
            p: p as u64,
            n,
            modulus,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.n
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `p^k` for `k <= n`.
    pub fn p_pow(&self, k: u32) -> u64 {
        debug_assert!(k <= self.n);
        self.p.pow(k)
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.modulus
    }

    pub fn reduce_i128(&self, x: i128) -> u64 {
        x.rem_euclid(self.modulus as i128) as u64
    }

    pub fn reduce_bigint(&self, x: &BigInt) -> u64 {
        x.mod_floor(&BigInt::from(self.modulus))
            .to_u64()
            .expect("residue fits the modulus")
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.modulus as u128) as u64
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        let (a, b) = (a % self.modulus, b % self.modulus);
        if a >= b {
            a - b
        } else {
            self.modulus - (b - a)
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        self.sub(0, a)
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    pub fn sum<I: IntoIterator<Item = u64>>(&self, it: I) -> u64 {
        it.into_iter().fold(0, |acc, x| self.add(acc, x))
    }

    /// Valuation of a residue; `Infinite` for zero.
    pub fn valuation(&self, x: u64) -> Valuation {
        let mut x = x % self.modulus;
        if x == 0 {
            return Valuation::Infinite;
        }
        let mut v = 0;
        while x.is_multiple_of(self.p) {
            x /= self.p;
            v += 1;
        }
        Valuation::Finite(v)
    }

    /// Base-p digit `i` of the canonical representative.
    pub fn digit(&self, x: u64, i: u32) -> u64 {
        let x = x % self.modulus;
        match self.p.checked_pow(i) {
            Some(pi) => (x / pi) % self.p,
            None => 0,
        }
    }

    /// The same residue class read in a coarser ring `Z / p^k`, `k <= n`.
    pub fn coarsen(&self, k: u32) -> ResidueRing {
        debug_assert!(k <= self.n);
        ResidueRing {
            p: self.p,
            n: k,
            modulus: self.p.pow(k),
        }
    }

    pub fn to_padic(&self, x: u64, cfg: PrimeConfig) -> PadicTrunc {
        PadicTrunc::from_u64(x % self.modulus, cfg)
    }
}
