//! Van der Put and Mahler bases.
//!
//! Both coefficient tables hold `p^N` residues modulo `p^N`. A table is read
//! as the finite series whose higher coefficients are zero; for a
//! Lipschitz-admissible table this agrees modulo `p^N` with any function
//! sharing those coefficients.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::ValueTable;
use crate::padic::{decompose_index, floor_log, PadicError, PadicTrunc, PrimeConfig, ResidueRing};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BasesError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("table for p^{precision} needs {expected} entries, got {got}")]
    Length {
        precision: u32,
        expected: u64,
        got: usize,
    },
    #[error("entry {m} = {value} is not a residue modulo p^{precision}")]
    Residue { m: u64, value: u64, precision: u32 },
    #[error("index {m} is outside the table (p^N = {len})")]
    Index { m: u64, len: u64 },
    #[error("coefficient {m} violates the Lipschitz bound, truncation is not exact")]
    PrecisionUnsafe { m: u64 },
    #[error("coefficient {m} violates the Lipschitz bound, cannot normalise")]
    NotAdmissible { m: u64 },
}

fn validate_entries(cfg: PrimeConfig, entries: &[u64]) -> Result<ResidueRing, BasesError> {
    let ring = cfg.ring()?;
    let expected = ring.modulus();
    if entries.len() as u64 != expected {
        return Err(BasesError::Length {
            precision: cfg.precision(),
            expected,
            got: entries.len(),
        });
    }
    if let Some((m, &value)) = entries.iter().enumerate().find(|(_, &v)| v >= expected) {
        return Err(BasesError::Residue {
            m: m as u64,
            value,
            precision: cfg.precision(),
        });
    }
    Ok(ring)
}

/// Index of the first coefficient with valuation below `⌊log_p m⌋`.
fn first_below_lipschitz_bound(ring: &ResidueRing, coeffs: &[u64]) -> Option<u64> {
    let p = ring.p();
    (p..coeffs.len() as u64)
        .find(|&m| !ring.valuation(coeffs[m as usize]).at_least(floor_log(m, p)))
}

/// Van der Put coefficients `B_m`, `m < p^N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VdpTable {
    cfg: PrimeConfig,
    coeffs: Vec<u64>,
}

impl VdpTable {
    pub fn new(cfg: PrimeConfig, coeffs: Vec<u64>) -> Result<Self, BasesError> {
        validate_entries(cfg, &coeffs)?;
        Ok(Self { cfg, coeffs })
    }

    /// Coefficients of `f(x) = x`: `B_m = m` below `p`, `q(m)` above.
    pub fn identity(cfg: PrimeConfig) -> Result<Self, BasesError> {
        let len = cfg.ring()?.modulus();
        let coeffs = (0..len).map(|m| decompose_index(m, cfg.p()).q).collect();
        Ok(Self { cfg, coeffs })
    }

    /// Coefficients of the constant function `d`.
    pub fn constant(cfg: PrimeConfig, d: u64) -> Result<Self, BasesError> {
        let ring = cfg.ring()?;
        let mut coeffs = vec![0; ring.modulus() as usize];
        for c in coeffs.iter_mut().take(cfg.p() as usize) {
            *c = ring.reduce(d);
        }
        Ok(Self { cfg, coeffs })
    }

    pub fn cfg(&self) -> PrimeConfig {
        self.cfg
    }

    pub fn precision(&self) -> u32 {
        self.cfg.precision()
    }

    pub fn ring(&self) -> ResidueRing {
        self.cfg.ring().expect("validated at construction")
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, m: u64) -> Result<PadicTrunc, BasesError> {
        let v = *self.coeffs.get(m as usize).ok_or(BasesError::Index {
            m,
            len: self.coeffs.len() as u64,
        })?;
        Ok(PadicTrunc::from_u64(v, self.cfg))
    }

    /// First `m` with `ord_p B_m < ⌊log_p m⌋`, if any.
    pub fn lipschitz_violation(&self) -> Option<u64> {
        first_below_lipschitz_bound(&self.ring(), &self.coeffs)
    }

    pub fn is_admissible(&self) -> bool {
        self.lipschitz_violation().is_none()
    }

    /// The first `p^k` coefficients reduced modulo `p^k`.
    pub fn reduce(&self, k: u32) -> Result<Self, BasesError> {
        if k == 0 || k > self.precision() {
            return Err(PadicError::Precision(k).into());
        }
        let cfg = self.cfg.with_precision(k)?;
        let ring = cfg.ring()?;
        let coeffs = self.coeffs[..ring.modulus() as usize]
            .iter()
            .map(|&c| ring.reduce(c))
            .collect();
        Ok(Self { cfg, coeffs })
    }

    /// Values of the series on `0..p^n`, modulo `p^n`.
    ///
    /// `n` may exceed the table precision: the stored residues are then read
    /// as exact integers and every higher coefficient as zero.
    pub fn values_at(&self, n: u32) -> Result<ValueTable, BasesError> {
        let cfg = self.cfg.with_precision(n)?;
        let ring = cfg.ring()?;
        let p = self.cfg.p() as usize;
        let inner = self.coeffs.len().min(ring.modulus() as usize);
        let mut values = Vec::with_capacity(ring.modulus() as usize);
        for m in 0..inner {
            let b = ring.reduce(self.coeffs[m]);
            let v = if m < p {
                b
            } else {
                let tail = decompose_index(m as u64, self.cfg.p()).tail as usize;
                ring.add(values[tail], b)
            };
            values.push(v);
        }
        for x in inner..ring.modulus() as usize {
            values.push(values[x % inner]);
        }
        Ok(ValueTable::new(cfg, values).expect("well-formed by construction"))
    }
}

/// `B_m = p^{⌊log_p m⌋} b_m`; `b_m` is known modulo `p^{N - ⌊log_p m⌋}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedVdp {
    cfg: PrimeConfig,
    b: Vec<u64>,
}

impl NormalizedVdp {
    pub fn from_vdp(t: &VdpTable) -> Result<Self, BasesError> {
        if let Some(m) = t.lipschitz_violation() {
            return Err(BasesError::NotAdmissible { m });
        }
        let p = t.cfg.p() as u64;
        let b = t
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, &c)| c / p.pow(floor_log(m as u64, p)))
            .collect();
        Ok(Self { cfg: t.cfg, b })
    }

    pub fn cfg(&self) -> PrimeConfig {
        self.cfg
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn b(&self, m: u64) -> u64 {
        self.b[m as usize]
    }

    pub fn values(&self) -> &[u64] {
        &self.b
    }

    /// Number of base-p digits of `b_m` fixed by the table.
    pub fn b_precision(&self, m: u64) -> u32 {
        self.cfg.precision() - floor_log(m, self.cfg.p() as u64)
    }

    /// Digit `b_{mi}`, or `None` past the known precision.
    pub fn digit(&self, m: u64, i: u32) -> Option<u64> {
        if i >= self.b_precision(m) {
            return None;
        }
        let p = self.cfg.p() as u64;
        Some((self.b[m as usize] / p.pow(i)) % p)
    }

    pub fn denormalize(&self) -> VdpTable {
        let p = self.cfg.p() as u64;
        let coeffs = self
            .b
            .iter()
            .enumerate()
            .map(|(m, &b)| b * p.pow(floor_log(m as u64, p)))
            .collect();
        VdpTable {
            cfg: self.cfg,
            coeffs,
        }
    }
}

/// Mahler coefficients `a_m`, `m < p^N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MahlerTable {
    cfg: PrimeConfig,
    coeffs: Vec<u64>,
}

impl MahlerTable {
    pub fn new(cfg: PrimeConfig, coeffs: Vec<u64>) -> Result<Self, BasesError> {
        validate_entries(cfg, &coeffs)?;
        Ok(Self { cfg, coeffs })
    }

    /// Pads a short coefficient list with zeros.
    pub fn from_prefix(cfg: PrimeConfig, prefix: &[u64]) -> Result<Self, BasesError> {
        let ring = cfg.ring()?;
        let mut coeffs = vec![0; ring.modulus() as usize];
        for (c, &a) in coeffs.iter_mut().zip(prefix) {
            *c = ring.reduce(a);
        }
        Ok(Self { cfg, coeffs })
    }

    pub fn cfg(&self) -> PrimeConfig {
        self.cfg
    }

    pub fn precision(&self) -> u32 {
        self.cfg.precision()
    }

    pub fn ring(&self) -> ResidueRing {
        self.cfg.ring().expect("validated at construction")
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, m: u64) -> Result<PadicTrunc, BasesError> {
        let v = *self.coeffs.get(m as usize).ok_or(BasesError::Index {
            m,
            len: self.coeffs.len() as u64,
        })?;
        Ok(PadicTrunc::from_u64(v, self.cfg))
    }

    pub fn lipschitz_violation(&self) -> Option<u64> {
        first_below_lipschitz_bound(&self.ring(), &self.coeffs)
    }

    pub fn is_admissible(&self) -> bool {
        self.lipschitz_violation().is_none()
    }

    pub fn reduce(&self, k: u32) -> Result<Self, BasesError> {
        if k == 0 || k > self.precision() {
            return Err(PadicError::Precision(k).into());
        }
        let cfg = self.cfg.with_precision(k)?;
        let ring = cfg.ring()?;
        let coeffs = self.coeffs[..ring.modulus() as usize]
            .iter()
            .map(|&c| ring.reduce(c))
            .collect();
        Ok(Self { cfg, coeffs })
    }

    /// Values of `Σ a_m C(x, m)` on `0..p^n`, modulo `p^n`.
    ///
    /// Runs the difference triangle forward, so only ring additions are
    /// needed. As with [`VdpTable::values_at`], `n` may exceed the table
    /// precision (zero tail).
    pub fn values_at(&self, n: u32) -> Result<ValueTable, BasesError> {
        if let Some(m) = self.lipschitz_violation() {
            return Err(BasesError::PrecisionUnsafe { m });
        }
        let cfg = self.cfg.with_precision(n)?;
        let ring = cfg.ring()?;
        let len = ring.modulus() as usize;
        let degree = self
            .coeffs
            .iter()
            .rposition(|&a| a != 0)
            .map_or(0, |i| i + 1)
            .min(len);
        let mut diffs: Vec<u64> = self.coeffs[..degree]
            .iter()
            .map(|&a| ring.reduce(a))
            .collect();
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(diffs.first().copied().unwrap_or(0));
            for j in 0..diffs.len().saturating_sub(1) {
                diffs[j] = ring.add(diffs[j], diffs[j + 1]);
            }
        }
        Ok(ValueTable::new(cfg, values).expect("well-formed by construction"))
    }
}

/// `χ(m, x)`: 1 iff `x ≡ m (mod p^{⌊log_p m⌋ + 1})`.
pub fn chi(m: u64, x: &PadicTrunc) -> Result<bool, BasesError> {
    let cfg = x.cfg();
    let len = cfg.pow(cfg.precision()).unwrap_or(u64::MAX);
    if m >= len {
        return Err(BasesError::Index { m, len });
    }
    let p = cfg.p() as u64;
    let s = floor_log(m, p);
    let mut rest = m;
    for &d in &x.digits()[..=s as usize] {
        if d as u64 != rest % p {
            return Ok(false);
        }
        rest /= p;
    }
    Ok(true)
}

fn check_cfg(table: PrimeConfig, x: &PadicTrunc) -> Result<(), BasesError> {
    let xc = x.cfg();
    if xc != table {
        return Err(PadicError::ConfigMismatch {
            left_p: table.p(),
            left_n: table.precision(),
            right_p: xc.p(),
            right_n: xc.precision(),
        }
        .into());
    }
    Ok(())
}

/// `Σ_m B_m χ(m, x)`. Only the prefixes of `x` with a nonzero top digit (and
/// `x mod p`) select a coefficient.
pub fn vdp_evaluate(t: &VdpTable, x: &PadicTrunc) -> Result<PadicTrunc, BasesError> {
    check_cfg(t.cfg, x)?;
    let ring = t.ring();
    let p = t.cfg.p() as u64;
    let digits = x.digits();
    let mut index = digits[0] as u64;
    let mut acc = t.coeffs[index as usize];
    let mut scale = 1u64;
    for &d in &digits[1..] {
        scale *= p;
        if d != 0 {
            index += d as u64 * scale;
            acc = ring.add(acc, t.coeffs[index as usize]);
        }
    }
    Ok(PadicTrunc::from_u64(acc, t.cfg))
}

/// `B_m = f(m)` for `m < p`, `f(m) - f(m_)` otherwise.
pub fn vdp_extract(values: &ValueTable) -> VdpTable {
    let ring = values.ring();
    let p = values.cfg().p();
    let v = values.values();
    let coeffs = (0..v.len() as u64)
        .map(|m| {
            if m < p as u64 {
                v[m as usize]
            } else {
                let tail = decompose_index(m, p).tail;
                ring.sub(v[m as usize], v[tail as usize])
            }
        })
        .collect();
    VdpTable {
        cfg: values.cfg(),
        coeffs,
    }
}

/// Incremental `C(x, m)` for fixed integer `x`, tracking the p-part separately
/// so only units are ever inverted.
struct BinomialWalk {
    x: BigUint,
    p: BigUint,
    modulus: BigUint,
    precision: u64,
    m: u64,
    p_exponent: i64,
    numerator: BigUint,
    denominator: BigUint,
}

impl BinomialWalk {
    fn new(x: &PadicTrunc) -> Self {
        let cfg = x.cfg();
        Self {
            x: x.to_biguint(),
            p: BigUint::from(cfg.p()),
            modulus: BigUint::from(cfg.p()).pow(cfg.precision()),
            precision: cfg.precision() as u64,
            m: 0,
            p_exponent: 0,
            numerator: BigUint::one(),
            denominator: BigUint::one(),
        }
    }

    fn split(&self, mut v: BigUint) -> (i64, BigUint) {
        let mut e = 0;
        while (&v % &self.p).is_zero() {
            v /= &self.p;
            e += 1;
        }
        (e, v % &self.modulus)
    }

    /// Current `C(x, m)` modulo `p^N`.
    fn value(&self) -> BigUint {
        if BigUint::from(self.m) > self.x || self.p_exponent as u64 >= self.precision {
            return BigUint::zero();
        }
        let inv = self
            .denominator
            .modinv(&self.modulus)
            .expect("denominator is a unit");
        self.p.pow(self.p_exponent as u32) * &self.numerator * inv % &self.modulus
    }

    /// Advance from `C(x, m)` to `C(x, m + 1)`.
    fn step(&mut self) {
        if BigUint::from(self.m) < self.x {
            let (e, u) = self.split(&self.x - self.m);
            self.p_exponent += e;
            self.numerator = &self.numerator * u % &self.modulus;
            let (e, u) = self.split(BigUint::from(self.m + 1));
            self.p_exponent -= e;
            self.denominator = &self.denominator * u % &self.modulus;
        }
        self.m += 1;
    }
}

/// `C(x, m)` for the representative of `x` in `[0, p^N)`, reduced mod `p^N`.
pub fn binom_eval(x: &PadicTrunc, m: u64) -> PadicTrunc {
    let mut walk = BinomialWalk::new(x);
    if BigUint::from(m) > walk.x {
        return PadicTrunc::zero(x.cfg());
    }
    for _ in 0..m {
        walk.step();
    }
    PadicTrunc::from_bigint(&walk.value().into(), x.cfg())
}

pub fn mahler_evaluate(t: &MahlerTable, x: &PadicTrunc) -> Result<PadicTrunc, BasesError> {
    check_cfg(t.cfg, x)?;
    if let Some(m) = t.lipschitz_violation() {
        return Err(BasesError::PrecisionUnsafe { m });
    }
    let mut walk = BinomialWalk::new(x);
    let mut acc = BigUint::zero();
    for &a in &t.coeffs {
        if BigUint::from(walk.m) > walk.x {
            break;
        }
        if a != 0 {
            acc = (acc + walk.value() * a) % &walk.modulus;
        }
        walk.step();
    }
    Ok(PadicTrunc::from_bigint(&acc.into(), t.cfg))
}

/// `a_m = (Δ^m f)(0)` by the in-place difference triangle.
pub fn mahler_extract(values: &ValueTable) -> MahlerTable {
    let ring = values.ring();
    let mut d = values.values().to_vec();
    let len = d.len();
    for j in 1..len {
        for i in (j..len).rev() {
            d[i] = ring.sub(d[i], d[i - 1]);
        }
    }
    MahlerTable {
        cfg: values.cfg(),
        coeffs: d,
    }
}

/// `(Δf)(m) = f(m + 1) - f(m)`, wrapping `f(p^n)` to `f(0)`.
///
/// The wrap is exact for 1-Lipschitz tables, so the result keeps `n_cert`.
pub fn delta(values: &ValueTable) -> ValueTable {
    let ring = values.ring();
    let v = values.values();
    let len = v.len();
    let out = (0..len).map(|m| ring.sub(v[(m + 1) % len], v[m])).collect();
    ValueTable::new(values.cfg(), out).expect("same shape as input")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(p: u32, n: u32) -> PrimeConfig {
        PrimeConfig::new(p, n).unwrap()
    }

    fn table(p: u32, n: u32, f: impl Fn(u64) -> i128) -> ValueTable {
        ValueTable::from_fn(cfg(p, n), f).unwrap()
    }

    fn int(x: i128, c: PrimeConfig) -> PadicTrunc {
        PadicTrunc::from_integer(x, c)
    }

    #[test]
    fn chi_examples() {
        let c = cfg(2, 4);
        assert!(chi(0, &int(4, c)).unwrap());
        assert!(chi(3, &int(7, c)).unwrap());
        assert!(!chi(3, &int(5, c)).unwrap());
        assert!(chi(16, &int(0, c)).is_err());
    }

    #[test]
    fn chi_fires_once_per_nonzero_digit_level() {
        // One indicator for x mod p, plus one per higher level whose digit of x is nonzero.
        for (p, n) in [(2, 5), (3, 3), (5, 2)] {
            let c = cfg(p, n);
            let len = (p as u64).pow(n);
            for x in 0..len {
                let xv = PadicTrunc::from_u64(x, c);
                let fired = (0..len).filter(|&m| chi(m, &xv).unwrap()).count();
                let nonzero_high = xv.digits()[1..].iter().filter(|&&d| d != 0).count();
                assert_eq!(fired, 1 + nonzero_high, "p={p} x={x}");
            }
        }
    }

    #[test]
    fn vdp_evaluate_examples() {
        let c = cfg(2, 4);
        let id = VdpTable::identity(c).unwrap();
        assert_eq!(vdp_evaluate(&id, &int(13, c)).unwrap(), int(13, c));
        let k = VdpTable::constant(c, 9).unwrap();
        for x in 0..16 {
            assert_eq!(vdp_evaluate(&k, &int(x, c)).unwrap(), int(9, c));
        }
        let zero = VdpTable::new(c, vec![0; 16]).unwrap();
        assert!(vdp_evaluate(&zero, &int(11, c)).unwrap().is_zero());
    }

    #[test]
    fn vdp_extract_examples() {
        let t = vdp_extract(&table(2, 3, |x| x as i128 + 1));
        assert_eq!(t.coeffs(), &[1, 2, 2, 2, 4, 4, 4, 4]);
        let id = vdp_extract(&table(3, 3, |x| x as i128));
        assert_eq!(id, VdpTable::identity(cfg(3, 3)).unwrap());
        let k = vdp_extract(&table(5, 2, |_| 7));
        assert_eq!(k, VdpTable::constant(cfg(5, 2), 7).unwrap());
    }

    #[test]
    fn binom_examples() {
        let c = cfg(2, 6);
        assert_eq!(binom_eval(&int(5, c), 2), int(10, c));
        assert_eq!(binom_eval(&int(3, c), 5), int(0, c));
        for x in 0..64 {
            assert_eq!(binom_eval(&int(x, c), 0), int(1, c));
        }
        // p-divisible denominators: C(12, 4) = 495, C(40, 8) = 76904685.
        assert_eq!(binom_eval(&int(12, c), 4), int(495, c));
        let c3 = cfg(3, 10);
        assert_eq!(binom_eval(&int(40, c3), 8), int(76904685, c3));
    }

    #[test]
    fn mahler_evaluate_examples() {
        let c = cfg(2, 4);
        let constant = MahlerTable::from_prefix(c, &[7]).unwrap();
        let ident = MahlerTable::from_prefix(c, &[0, 1]).unwrap();
        let t = MahlerTable::from_prefix(c, &[1, 1, 2]).unwrap();
        for x in 0..16 {
            assert_eq!(mahler_evaluate(&constant, &int(x, c)).unwrap(), int(7, c));
            assert_eq!(mahler_evaluate(&ident, &int(x, c)).unwrap(), int(x, c));
        }
        assert_eq!(mahler_evaluate(&t, &int(2, c)).unwrap(), int(5, c));
        let bad = MahlerTable::from_prefix(c, &[0, 1, 1]).unwrap();
        assert_eq!(
            mahler_evaluate(&bad, &int(2, c)),
            Err(BasesError::PrecisionUnsafe { m: 2 })
        );
    }

    #[test]
    fn mahler_extract_examples() {
        let c = cfg(2, 4);
        let m = mahler_extract(&table(2, 4, |x| x as i128));
        assert_eq!(m, MahlerTable::from_prefix(c, &[0, 1]).unwrap());
        let m = mahler_extract(&table(2, 4, |_| 3));
        assert_eq!(m, MahlerTable::from_prefix(c, &[3]).unwrap());
        let m = mahler_extract(&table(2, 4, |x| (x * x) as i128));
        assert_eq!(m, MahlerTable::from_prefix(c, &[0, 1, 2]).unwrap());
    }

    #[test]
    fn delta_examples() {
        let d = delta(&table(2, 4, |x| x as i128));
        assert!(d.values().iter().all(|&v| v == 1));
        let d = delta(&table(3, 3, |_| 4));
        assert!(d.values().iter().all(|&v| v == 0));
        let d = delta(&table(2, 5, |x| (x * x) as i128));
        assert_eq!(d.values()[3], 7);
    }

    #[test]
    fn normalized_roundtrip_and_digits() {
        let t = vdp_extract(&table(2, 4, |x| x as i128 + 1));
        let n = NormalizedVdp::from_vdp(&t).unwrap();
        assert_eq!(&n.values()[..6], &[1, 2, 1, 1, 1, 1]);
        assert_eq!(n.b_precision(0), 4);
        assert_eq!(n.b_precision(9), 1);
        assert_eq!(n.digit(9, 1), None);
        assert_eq!(n.denormalize(), t);
        let bad = VdpTable::new(cfg(2, 2), vec![0, 1, 1, 2]).unwrap();
        assert_eq!(
            NormalizedVdp::from_vdp(&bad),
            Err(BasesError::NotAdmissible { m: 2 })
        );
    }

    #[test]
    fn values_beyond_table_precision_extend_by_zero_tail() {
        let id = VdpTable::identity(cfg(3, 2)).unwrap();
        let v = id.values_at(4).unwrap();
        // x -> x mod 9 read exactly
        for x in 0..81u64 {
            assert_eq!(v.values()[x as usize], x % 9);
        }
        let m = MahlerTable::from_prefix(cfg(3, 2), &[1, 1, 0, 0]).unwrap();
        let v = m.values_at(4).unwrap();
        for x in 0..81u64 {
            assert_eq!(v.values()[x as usize], (x + 1) % 81);
        }
    }

    fn lipschitz_table(p: u32, n: u32, raw: &[u64]) -> VdpTable {
        let c = cfg(p, n);
        let ring = c.ring().unwrap();
        let coeffs = (0..ring.modulus())
            .map(|m| {
                let s = floor_log(m, p as u64);
                let ps = (p as u64).pow(s);
                ring.reduce(raw[m as usize % raw.len()] % (ring.modulus() / ps) * ps)
            })
            .collect();
        VdpTable::new(c, coeffs).unwrap()
    }

    fn prime_and_level() -> impl Strategy<Value = (u32, u32)> {
        prop::sample::select(vec![(2u32, 6u32), (2, 4), (3, 3), (3, 4), (5, 2), (7, 2)])
    }

    proptest! {
        #[test]
        fn vdp_roundtrip((p, n) in prime_and_level(), raw in prop::collection::vec(any::<u64>(), 1..64)) {
            let t = lipschitz_table(p, n, &raw);
            let values = t.values_at(n).unwrap();
            prop_assert_eq!(vdp_extract(&values), t.clone());
            let c = t.cfg();
            for x in 0..values.len() as u64 {
                let direct = vdp_evaluate(&t, &PadicTrunc::from_u64(x, c)).unwrap();
                prop_assert_eq!(direct.to_u64().unwrap(), values.values()[x as usize]);
            }
        }

        #[test]
        fn mahler_roundtrip((p, n) in prime_and_level(), raw in prop::collection::vec(any::<u64>(), 1..64)) {
            let coeffs = lipschitz_table(p, n, &raw).coeffs().to_vec();
            let t = MahlerTable::new(cfg(p, n), coeffs).unwrap();
            let values = t.values_at(n).unwrap();
            prop_assert_eq!(mahler_extract(&values), t);
        }

        #[test]
        fn bases_agree_on_any_table((p, n) in prime_and_level(), raw in prop::collection::vec(any::<u64>(), 1..64)) {
            let c = cfg(p, n);
            let ring = c.ring().unwrap();
            let len = ring.modulus();
            let values = ValueTable::new(c, (0..len).map(|m| ring.reduce(raw[m as usize % raw.len()] ^ m)).collect()).unwrap();
            let vdp = vdp_extract(&values);
            let mahler = mahler_extract(&values);
            // The Mahler table of an arbitrary table need not be admissible, so
            // compare through the triangle rather than `mahler_evaluate`.
            let mut d = mahler.coeffs().to_vec();
            for x in 0..len {
                let xv = PadicTrunc::from_u64(x, c);
                prop_assert_eq!(vdp_evaluate(&vdp, &xv).unwrap().to_u64().unwrap(), values.values()[x as usize]);
                prop_assert_eq!(d[0], values.values()[x as usize]);
                for j in 0..d.len() - 1 {
                    d[j] = ring.add(d[j], d[j + 1]);
                }
            }
        }

        #[test]
        fn lipschitz_tables_match_both_coefficient_bounds((p, n) in prime_and_level(), raw in prop::collection::vec(any::<u64>(), 1..32), lipschitz in any::<bool>()) {
            let c = cfg(p, n);
            let ring = c.ring().unwrap();
            let values = if lipschitz {
                lipschitz_table(p, n, &raw).values_at(n).unwrap()
            } else {
                ValueTable::new(c, (0..ring.modulus()).map(|m| ring.reduce(raw[m as usize % raw.len()])).collect()).unwrap()
            };
            let is_lipschitz = values.check_lipschitz().is_ok();
            prop_assert_eq!(vdp_extract(&values).is_admissible(), is_lipschitz);
            prop_assert_eq!(mahler_extract(&values).is_admissible(), is_lipschitz);
        }
    }
}
