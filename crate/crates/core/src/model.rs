//! Function specifications and their value tables.
//!
//! Every map enters the crate as a finite [`FunctionSpec`]; [`compile`] turns
//! it into the residues `f(m) mod p^n` for `m < p^n`.

use std::fmt;

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::bases::{self, BasesError, MahlerTable, VdpTable};
use crate::padic::{PadicError, PadicTrunc, PrimeConfig, ResidueRing};

pub const DEFAULT_MAX_ENTRIES: u64 = 1 << 24;
pub const DEFAULT_MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Bases(#[from] BasesError),
    #[error("requested precision {requested}, but the spec is only defined to {available}")]
    Precision { requested: u32, available: u32 },
    #[error("table of {p}^{n} entries exceeds the budget of {limit}")]
    Budget { p: u32, n: u32, limit: u64 },
    #[error("construction nesting exceeds depth {limit}")]
    Depth { limit: usize },
    #[error("invalid construction parameters: {0}")]
    InvalidParams(String),
    #[error("inner function g is not 1-Lipschitz: {0}")]
    InnerNotLipschitz(LipschitzWitness),
    #[error("inconsistent spec: {0}")]
    Inconsistent(String),
}

/// `x ≡ y (mod p^level)` but `f(x) ≢ f(y) (mod p^level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LipschitzWitness {
    pub x: u64,
    pub y: u64,
    pub level: u32,
}

impl fmt::Display for LipschitzWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ≡ {} mod p^{} but their images differ",
            self.x, self.y, self.level
        )
    }
}

/// Residues `f(m) mod p^n` for every `m < p^n`; `n` is the certified
/// precision `n_cert`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueTable {
    cfg: PrimeConfig,
    values: Vec<u64>,
}

impl ValueTable {
    pub fn new(cfg: PrimeConfig, values: Vec<u64>) -> Result<Self, BasesError> {
        let ring = cfg.ring()?;
        if values.len() as u64 != ring.modulus() {
            return Err(BasesError::Length {
                precision: cfg.precision(),
                expected: ring.modulus(),
                got: values.len(),
            });
        }
        if let Some((m, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| v >= ring.modulus())
        {
            return Err(BasesError::Residue {
                m: m as u64,
                value,
                precision: cfg.precision(),
            });
        }
        Ok(Self { cfg, values })
    }

    /// Tabulates an integer-valued function, reducing modulo `p^N`.
    pub fn from_fn(cfg: PrimeConfig, f: impl Fn(u64) -> i128) -> Result<Self, BasesError> {
        let ring = cfg.ring()?;
        let values = (0..ring.modulus())
            .map(|m| ring.reduce_i128(f(m)))
            .collect();
        Ok(Self { cfg, values })
    }

    pub fn cfg(&self) -> PrimeConfig {
        self.cfg
    }

    pub fn p(&self) -> u32 {
        self.cfg.p()
    }

    pub fn n_cert(&self) -> u32 {
        self.cfg.precision()
    }

    pub fn ring(&self) -> ResidueRing {
        self.cfg.ring().expect("validated at construction")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn value(&self, m: u64) -> PadicTrunc {
        PadicTrunc::from_u64(self.values[m as usize], self.cfg)
    }

    /// Restriction to `m < p^k`, reduced modulo `p^k`.
    pub fn reduce(&self, k: u32) -> Result<Self, BasesError> {
        if k == 0 || k > self.n_cert() {
            return Err(PadicError::Precision(k).into());
        }
        let cfg = self.cfg.with_precision(k)?;
        let ring = cfg.ring()?;
        let values = self.values[..ring.modulus() as usize]
            .iter()
            .map(|&v| ring.reduce(v))
            .collect();
        Ok(Self { cfg, values })
    }

    /// Checks `x ≡ y (mod p^k) ⇒ f(x) ≡ f(y) (mod p^k)` for all `k <= n_cert`
    /// by comparing each `m` with its representative `m mod p^k`.
    pub fn check_lipschitz(&self) -> Result<(), LipschitzWitness> {
        let ring = self.ring();
        let len = self.values.len() as u64;
        for level in 1..=self.n_cert() {
            let modulus = ring.p_pow(level);
            for m in modulus..len {
                let rep = m % modulus;
                if self.values[m as usize] % modulus != self.values[rep as usize] % modulus {
                    return Err(LipschitzWitness {
                        x: rep,
                        y: m,
                        level,
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn check_lipschitz_table(values: &ValueTable) -> Result<(), LipschitzWitness> {
    values.check_lipschitz()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstructionForm {
    /// `d + x + p Δg(x)`
    DPlusXPlusPDeltaG,
    /// `d + x + p g(x)`
    DPlusXPlusPG,
    /// `d + εx + p Δg(x)`
    DPlusEpsXPlusPDeltaG,
}

impl ConstructionForm {
    pub const ALL: [ConstructionForm; 3] = [
        ConstructionForm::DPlusXPlusPDeltaG,
        ConstructionForm::DPlusXPlusPG,
        ConstructionForm::DPlusEpsXPlusPDeltaG,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstructionForm::DPlusXPlusPDeltaG => "d_plus_x_plus_pDeltaG",
            ConstructionForm::DPlusXPlusPG => "d_plus_x_plus_pG",
            ConstructionForm::DPlusEpsXPlusPDeltaG => "d_plus_epsx_plus_pDeltaG",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn uses_delta(self) -> bool {
        !matches!(self, ConstructionForm::DPlusXPlusPG)
    }

    /// Forms that are ergodic whenever `d` is a unit and `ε ≡ 1 (mod p)`.
    pub fn is_ergodic_form(self) -> bool {
        self.uses_delta()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionParams {
    pub d: PadicTrunc,
    pub epsilon: PadicTrunc,
    pub form: ConstructionForm,
}

impl ConstructionParams {
    pub fn validate(&self, cfg: PrimeConfig) -> Result<(), ModelError> {
        for (name, v) in [("d", &self.d), ("epsilon", &self.epsilon)] {
            if v.cfg() != cfg {
                return Err(ModelError::InvalidParams(format!(
                    "{name} lives in ({}), expected ({cfg})",
                    v.cfg()
                )));
            }
        }
        let p = cfg.p();
        if self.form.is_ergodic_form() && self.d.digits()[0] == 0 {
            return Err(ModelError::InvalidParams(format!(
                "d = {} is divisible by p = {p}",
                self.d
            )));
        }
        if self.epsilon.digits()[0] != 1 {
            return Err(ModelError::InvalidParams(format!(
                "epsilon = {} is not 1 mod p = {p}",
                self.epsilon
            )));
        }
        if self.form != ConstructionForm::DPlusEpsXPlusPDeltaG
            && self.epsilon != PadicTrunc::one(cfg)
        {
            return Err(ModelError::InvalidParams(format!(
                "form {} requires epsilon = 1",
                self.form.name()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecKind {
    /// Integer coefficients, ascending degree.
    Polynomial(Vec<BigInt>),
    Vdp(VdpTable),
    Mahler(MahlerTable),
    Construction {
        params: ConstructionParams,
        g: Box<FunctionSpec>,
    },
    Values(ValueTable),
}

impl SpecKind {
    pub fn name(&self) -> &'static str {
        match self {
            SpecKind::Polynomial(_) => "polynomial",
            SpecKind::Vdp(_) => "vdp",
            SpecKind::Mahler(_) => "mahler",
            SpecKind::Construction { .. } => "construction",
            SpecKind::Values(_) => "value-table",
        }
    }
}

/// A candidate map `Z_p → Z_p`, defined to precision `N = cfg.precision()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpec {
    cfg: PrimeConfig,
    kind: SpecKind,
}

impl FunctionSpec {
    pub fn new(cfg: PrimeConfig, kind: SpecKind) -> Result<Self, ModelError> {
        let table_cfg = match &kind {
            SpecKind::Polynomial(_) => None,
            SpecKind::Vdp(t) => Some(t.cfg()),
            SpecKind::Mahler(t) => Some(t.cfg()),
            SpecKind::Values(v) => Some(v.cfg()),
            SpecKind::Construction { params, g } => {
                params.validate(cfg)?;
                if g.cfg.p() != cfg.p() {
                    return Err(ModelError::Inconsistent(format!(
                        "inner function uses p={}, outer p={}",
                        g.cfg.p(),
                        cfg.p()
                    )));
                }
                if g.cfg.precision() < cfg.precision() {
                    return Err(ModelError::Inconsistent(format!(
                        "inner function precision {} is below outer precision {}",
                        g.cfg.precision(),
                        cfg.precision()
                    )));
                }
                None
            }
        };
        if let Some(tc) = table_cfg {
            if tc != cfg {
                return Err(ModelError::Inconsistent(format!(
                    "table is defined for ({tc}), spec declares ({cfg})"
                )));
            }
        }
        Ok(Self { cfg, kind })
    }

    pub fn polynomial(cfg: PrimeConfig, coeffs: Vec<BigInt>) -> Self {
        Self {
            cfg,
            kind: SpecKind::Polynomial(coeffs),
        }
    }

    pub fn vdp(table: VdpTable) -> Self {
        Self {
            cfg: table.cfg(),
            kind: SpecKind::Vdp(table),
        }
    }

    pub fn mahler(table: MahlerTable) -> Self {
        Self {
            cfg: table.cfg(),
            kind: SpecKind::Mahler(table),
        }
    }

    pub fn values(table: ValueTable) -> Self {
        Self {
            cfg: table.cfg(),
            kind: SpecKind::Values(table),
        }
    }

    pub fn cfg(&self) -> PrimeConfig {
        self.cfg
    }

    pub fn kind(&self) -> &SpecKind {
        &self.kind
    }

    /// Number of nested construction layers.
    pub fn depth(&self) -> usize {
        match &self.kind {
            SpecKind::Construction { g, .. } => 1 + g.depth(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub max_entries: u64,
    pub max_depth: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            max_entries: DEFAULT_MAX_ENTRIES,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

pub fn compile(spec: &FunctionSpec, n: u32) -> Result<ValueTable, ModelError> {
    compile_with(spec, n, &CompileOptions::default())
}

pub fn compile_with(
    spec: &FunctionSpec,
    n: u32,
    opts: &CompileOptions,
) -> Result<ValueTable, ModelError> {
    if spec.depth() > opts.max_depth {
        return Err(ModelError::Depth {
            limit: opts.max_depth,
        });
    }
    compile_inner(spec, n, opts)
}

fn compile_inner(
    spec: &FunctionSpec,
    n: u32,
    opts: &CompileOptions,
) -> Result<ValueTable, ModelError> {
    let available = spec.cfg.precision();
    if n == 0 || n > available {
        return Err(ModelError::Precision {
            requested: n,
            available,
        });
    }
    let p = spec.cfg.p();
    match spec.cfg.pow(n) {
        Some(entries) if entries <= opts.max_entries => {}
        _ => {
            return Err(ModelError::Budget {
                p,
                n,
                limit: opts.max_entries,
            })
        }
    }
    let cfg = spec.cfg.with_precision(n)?;
    let ring = cfg.ring()?;
    let table = match &spec.kind {
        SpecKind::Polynomial(coeffs) => {
            let residues: Vec<u64> = coeffs.iter().map(|c| ring.reduce_bigint(c)).collect();
            ValueTable::from_residues(cfg, |x| {
                residues
                    .iter()
                    .rev()
                    .fold(0, |acc, &c| ring.add(ring.mul(acc, x), c))
            })
        }
        SpecKind::Vdp(t) => t.values_at(n)?,
        SpecKind::Mahler(t) => t.values_at(n)?,
        SpecKind::Values(v) => v.reduce(n)?,
        SpecKind::Construction { params, g } => {
            params.validate(spec.cfg)?;
            // p·Δg mod p^n only needs Δg mod p^(n-1); g at precision n is enough.
            let inner = compile_inner(g, n, opts)?;
            inner
                .check_lipschitz()
                .map_err(ModelError::InnerNotLipschitz)?;
            let term = if params.form.uses_delta() {
                bases::delta(&inner)
            } else {
                inner
            };
            let d = params.d.to_residue(&ring);
            let eps = params.epsilon.to_residue(&ring);
            let t = term.values();
            let pm = ring.reduce(p as u64);
            ValueTable::from_residues(cfg, |x| {
                ring.add(ring.add(d, ring.mul(eps, x)), ring.mul(pm, t[x as usize]))
            })
        }
    };
    Ok(table)
}

impl ValueTable {
    fn from_residues(cfg: PrimeConfig, f: impl Fn(u64) -> u64) -> Self {
        let len = cfg.ring().expect("checked by caller").modulus();
        Self {
            cfg,
            values: (0..len).map(f).collect(),
        }
    }
}
