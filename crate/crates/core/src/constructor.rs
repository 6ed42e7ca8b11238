//! Building maps with prescribed dynamics.
//!
//! [`delta_vdp`] applies `Δ` directly to van der Put coefficients and
//! [`anti_delta`] inverts it. The factories wrap an admissible `g` into
//! `d + εx + pΔg` (ergodic) or `d + x + pg` (measure-preserving), and
//! [`random_admissible`] draws seeded coefficient tables inside the envelopes
//! of the sufficient criteria.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bases::{vdp_extract, BasesError, MahlerTable, VdpTable};
use crate::document::{GeneratorInfo, SpecDocument};
use crate::model::{
    compile, ConstructionForm, ConstructionParams, FunctionSpec, LipschitzWitness, ModelError,
    SpecKind, ValueTable,
};
use crate::padic::{decompose_index, floor_log, PadicTrunc, PrimeConfig};

/// Identifier written next to the seed of every generated document.
pub const ALGORITHM: &str = "chacha8-v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructorError {
    #[error(transparent)]
    Bases(#[from] BasesError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("needs precision at least {needed}, got {got}")]
    Precision { needed: u32, got: u32 },
    #[error("block sum at level {level} is not divisible by p^{level}")]
    Hypothesis { level: u32 },
    #[error("coefficient {m} violates the Lipschitz bound")]
    NotAdmissible { m: u64 },
    #[error("g is not 1-Lipschitz: {0}")]
    InnerNotLipschitz(LipschitzWitness),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

fn require_admissible(t: &VdpTable) -> Result<(), ConstructorError> {
    match t.lipschitz_violation() {
        Some(m) => Err(ConstructorError::NotAdmissible { m }),
        None => Ok(()),
    }
}

/// Coefficients of `Δg` from those of `g`, certified modulo `p^{N-1}`.
pub fn delta_vdp(g: &VdpTable) -> Result<VdpTable, ConstructorError> {
    let n = g.precision();
    if n < 2 {
        return Err(ConstructorError::Precision { needed: 2, got: n });
    }
    require_admissible(g)?;
    let cfg = g.cfg().with_precision(n - 1).map_err(BasesError::from)?;
    let ring = g.ring();
    let p = cfg.p() as u64;
    let bt = g.coeffs();
    let len = cfg.pow(n - 1).expect("fits below p^N") as usize;
    let coeffs = (0..len)
        .map(|m| {
            let mu = m as u64;
            let diff = ring.sub(bt[m + 1], bt[m]);
            let out = if mu + 1 < p {
                diff
            } else if mu + 1 == p {
                ring.add(diff, bt[0])
            } else {
                let sub_block = p.pow(floor_log(mu, p));
                if (mu + 1).is_multiple_of(sub_block) {
                    ring.sub(diff, bt[sub_block as usize])
                } else {
                    diff
                }
            };
            out % cfg.pow(n - 1).expect("fits")
        })
        .collect();
    Ok(VdpTable::new(cfg, coeffs)?)
}

/// Some `g` with `Δg = f` and `B̃_0 = b0`, at the precision of `f`.
///
/// Needs `Σ_{block k} B_m ≡ 0 (mod p^k)` for every level `k`, where block 1
/// is `0..p`; the first failing level is reported.
pub fn anti_delta(f: &VdpTable, b0: &PadicTrunc) -> Result<VdpTable, ConstructorError> {
    require_admissible(f)?;
    let ring = f.ring();
    let p = ring.p();
    let n = f.precision();
    let b = f.coeffs();
    for k in 1..=n {
        let (lo, hi) = if k == 1 {
            (0, p)
        } else {
            (p.pow(k - 1), p.pow(k))
        };
        let sum = ring.sum(b[lo as usize..hi as usize].iter().copied());
        if !sum.is_multiple_of(ring.p_pow(k)) {
            return Err(ConstructorError::Hypothesis { level: k });
        }
    }
    let mut g = vec![0u64; b.len()];
    g[0] = b0.to_residue(&ring);
    for m in 1..p as usize {
        g[m] = ring.add(g[m - 1], b[m - 1]);
    }
    // B̃_{p^{k-1}}, seeded by level 1 and advanced block by block.
    let mut anchor = ring.sum(b[..p as usize].iter().copied());
    for k in 2..=n {
        let lo = p.pow(k - 1);
        let mut running = 0u64;
        for m in lo..p.pow(k) {
            let i = m / lo;
            g[m as usize] = ring.add(ring.mul(i, anchor), running);
            running = ring.add(running, b[m as usize]);
        }
        anchor = ring.add(ring.mul(p, anchor), running);
    }
    let g = VdpTable::new(f.cfg(), g)?;
    require_admissible(&g)?;
    Ok(g)
}

/// Writes an ergodic `f` at `p = 2` as `1 + x + 2Δg`, returning `g` at
/// precision `N - 1`.
pub fn decompose_ergodic_2(f: &ValueTable) -> Result<VdpTable, ConstructorError> {
    let cfg = f.cfg();
    if cfg.p() != 2 {
        return Err(ConstructorError::InvalidParams(format!(
            "p = {} (needs p = 2)",
            cfg.p()
        )));
    }
    let n = cfg.precision();
    if n < 2 {
        return Err(ConstructorError::Precision { needed: 2, got: n });
    }
    let b = vdp_extract(f);
    let ring = b.ring();
    let hcfg = cfg.with_precision(n - 1).map_err(BasesError::from)?;
    let len = 1usize << (n - 1);
    let mut h = Vec::with_capacity(len);
    for m in 0..len as u64 {
        let c = match m {
            0 => 1,
            1 => 2,
            _ => decompose_index(m, 2).q,
        };
        let diff = ring.sub(b.coeffs()[m as usize], c);
        if !diff.is_multiple_of(2) {
            return Err(ConstructorError::InvalidParams(format!(
                "B_{m} - C_{m} is odd, so f - 1 - x is not divisible by 2"
            )));
        }
        h.push(diff / 2);
    }
    let h = VdpTable::new(hcfg, h)?;
    anti_delta(&h, &PadicTrunc::zero(hcfg))
}

fn inner_is_lipschitz(g: &FunctionSpec) -> Result<(), ConstructorError> {
    let table = compile(g, g.cfg().precision())?;
    table
        .check_lipschitz()
        .map_err(ConstructorError::InnerNotLipschitz)
}

/// `d + εx + pΔg`, using the plain `d + x + pΔg` form when `ε = 1`.
pub fn make_ergodic(
    cfg: PrimeConfig,
    d: &PadicTrunc,
    epsilon: &PadicTrunc,
    g: FunctionSpec,
) -> Result<FunctionSpec, ConstructorError> {
    if d.digits()[0] == 0 {
        return Err(ConstructorError::InvalidParams(format!(
            "d = {d} is not a unit"
        )));
    }
    if epsilon.digits()[0] != 1 {
        return Err(ConstructorError::InvalidParams(format!(
            "epsilon = {epsilon} is not 1 mod p"
        )));
    }
    inner_is_lipschitz(&g)?;
    let form = if *epsilon == PadicTrunc::one(cfg) {
        ConstructionForm::DPlusXPlusPDeltaG
    } else {
        ConstructionForm::DPlusEpsXPlusPDeltaG
    };
    let params = ConstructionParams {
        d: d.clone(),
        epsilon: epsilon.clone(),
        form,
    };
    Ok(FunctionSpec::new(
        cfg,
        SpecKind::Construction {
            params,
            g: Box::new(g),
        },
    )?)
}

/// `d + x + pg`.
pub fn make_mp(
    cfg: PrimeConfig,
    d: &PadicTrunc,
    g: FunctionSpec,
) -> Result<FunctionSpec, ConstructorError> {
    inner_is_lipschitz(&g)?;
    let params = ConstructionParams {
        d: d.clone(),
        epsilon: PadicTrunc::one(cfg),
        form: ConstructionForm::DPlusXPlusPG,
    };
    Ok(FunctionSpec::new(
        cfg,
        SpecKind::Construction {
            params,
            g: Box::new(g),
        },
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `ord_p B_m >= ⌊log_p m⌋`, otherwise uniform.
    Lipschitz,
    /// Distinct `B_m mod p` below `p`, `B_m ≡ q(m)` above.
    MpSufficient,
    /// `d + x + p h` with `h` satisfying the block-sum conditions.
    ErgodicCore,
}

impl Profile {
    pub const ALL: [Profile; 3] = [
        Profile::Lipschitz,
        Profile::MpSufficient,
        Profile::ErgodicCore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Lipschitz => "lipschitz",
            Profile::MpSufficient => "mp_sufficient",
            Profile::ErgodicCore => "ergodic_core",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSpec {
    pub seed: u64,
    pub cfg: PrimeConfig,
    pub profile: Profile,
}

fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    rng.gen_range(0..bound)
}

/// `p^s · r` with `r` uniform modulo `p^{N-s}`.
fn scaled(rng: &mut ChaCha8Rng, p: u64, n: u32, s: u32) -> u64 {
    if s >= n {
        return 0;
    }
    p.pow(s) * uniform_below(rng, p.pow(n - s))
}

pub fn random_admissible(r: &RandomSpec) -> VdpTable {
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let cfg = r.cfg;
    let ring = cfg.ring().expect("generated tables fit in 64 bits");
    let p = ring.p();
    let n = cfg.precision();
    let len = ring.modulus();
    let coeffs = match r.profile {
        Profile::Lipschitz => (0..len)
            .map(|m| scaled(&mut rng, p, n, floor_log(m, p)))
            .collect(),
        Profile::MpSufficient => {
            let mut perm: Vec<u64> = (0..p).collect();
            perm.shuffle(&mut rng);
            (0..len)
                .map(|m| {
                    if m < p {
                        ring.add(perm[m as usize], scaled(&mut rng, p, n, 1))
                    } else {
                        let d = decompose_index(m, cfg.p());
                        ring.add(d.q, scaled(&mut rng, p, n, d.s + 1))
                    }
                })
                .collect()
        }
        Profile::ErgodicCore => {
            let d = loop {
                let d = uniform_below(&mut rng, len);
                if !d.is_multiple_of(p) {
                    break d;
                }
            };
            let h = block_balanced(&mut rng, cfg);
            (0..len)
                .map(|m| {
                    let base = if m < p {
                        ring.add(d, m)
                    } else {
                        decompose_index(m, cfg.p()).q
                    };
                    ring.add(base, ring.mul(p, h[m as usize]))
                })
                .collect()
        }
    };
    VdpTable::new(cfg, coeffs).expect("residues are reduced")
}

/// Admissible `h` with `Σ_{m<p} h_m ≡ 0 (mod p)` and every higher block sum
/// divisible by `p^n`. The last entry of each block absorbs the remainder.
fn block_balanced(rng: &mut ChaCha8Rng, cfg: PrimeConfig) -> Vec<u64> {
    let ring = cfg.ring().expect("fits");
    let p = ring.p();
    let n = cfg.precision();
    let mut h: Vec<u64> = (0..ring.modulus())
        .map(|m| scaled(rng, p, n, floor_log(m, p)))
        .collect();
    for k in 1..=n {
        let (lo, hi) = if k == 1 {
            (0, p)
        } else {
            (p.pow(k - 1), p.pow(k))
        };
        let rest = ring.sum(h[lo as usize..hi as usize - 1].iter().copied());
        let pk = ring.p_pow(k);
        let fix = ring.neg(rest) % pk;
        h[hi as usize - 1] = ring.add(fix, scaled(rng, p, n, k));
    }
    h
}

/// Adds `p^s · r` (with `r ≢ 0 mod p^{N-s}`) to one randomly chosen
/// coefficient; the result stays admissible.
pub fn near_miss(t: &VdpTable, seed: u64) -> VdpTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ring = t.ring();
    let p = ring.p();
    let n = t.precision();
    let m = uniform_below(&mut rng, t.len() as u64);
    let s = floor_log(m, p);
    let r = 1 + uniform_below(&mut rng, p.pow(n - s) - 1);
    let mut coeffs = t.coeffs().to_vec();
    coeffs[m as usize] = ring.add(coeffs[m as usize], ring.mul(p.pow(s), r));
    VdpTable::new(t.cfg(), coeffs).expect("residues are reduced")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MahlerProfile {
    /// `ord_p a_m >= ⌊log_p m⌋`.
    Lipschitz,
    /// `a_0` a unit, `a_1 ≡ 1 (mod p)`, `p^{⌊log_p(m+1)⌋+1} | a_m`.
    ErgodicSufficient,
    /// As above for `p = 2` but only `a_1 ≡ 1 (mod 2)` and one random
    /// coefficient relaxed by a factor `p`.
    NearErgodic,
}

pub fn random_mahler(seed: u64, cfg: PrimeConfig, profile: MahlerProfile) -> MahlerTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ring = cfg.ring().expect("generated tables fit in 64 bits");
    let p = ring.p();
    let n = cfg.precision();
    let len = ring.modulus();
    let unit = |rng: &mut ChaCha8Rng| loop {
        let d = uniform_below(rng, len);
        if !d.is_multiple_of(p) {
            break d;
        }
    };
    let ergodic_shape = |rng: &mut ChaCha8Rng| -> Vec<u64> {
        let mut a: Vec<u64> = (0..len)
            .map(|m| scaled(rng, p, n, floor_log(m + 1, p) + 1))
            .collect();
        a[0] = unit(rng);
        a[1] = ring.add(1, scaled(rng, p, n, 1));
        a
    };
    let coeffs = match profile {
        MahlerProfile::Lipschitz => (0..len)
            .map(|m| scaled(&mut rng, p, n, floor_log(m, p)))
            .collect(),
        MahlerProfile::ErgodicSufficient => ergodic_shape(&mut rng),
        MahlerProfile::NearErgodic => {
            let mut a = ergodic_shape(&mut rng);
            let m = 1 + uniform_below(&mut rng, len.min(64) - 1);
            let floor = if m == 1 { 0 } else { floor_log(m + 1, p) };
            a[m as usize] = scaled(&mut rng, p, n, floor);
            a
        }
    };
    MahlerTable::new(cfg, coeffs).expect("residues are reduced")
}

/// A vdp spec document for `r`, with the seed and algorithm recorded.
pub fn generate(r: &RandomSpec) -> SpecDocument {
    SpecDocument {
        spec: FunctionSpec::vdp(random_admissible(r)),
        generator: Some(GeneratorInfo {
            algorithm: ALGORITHM.to_string(),
            profile: r.profile.name().to_string(),
            seed: r.seed,
        }),
        report: None,
    }
}
