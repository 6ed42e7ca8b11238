//! Full check of one spec: every applicable criterion, the oracle ladder and
//! a per-level agreement matrix between the two.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::bases::{mahler_extract, vdp_extract, MahlerTable, NormalizedVdp, VdpTable};
use crate::criteria::{self, CriteriaError, DigitStats, Verdict};
use crate::model::{
    compile_with, CompileOptions, FunctionSpec, LipschitzWitness, ModelError, SpecKind,
};
use crate::oracle::{self, CycleReport, LevelReport};

/// Mahler extraction is quadratic in the table size, so it is skipped above
/// this many entries.
pub const DEFAULT_MAHLER_LIMIT: u64 = 1 << 14;

const P2_MAHLER_NOTE: &str = "not sufficient at p = 2 (1 + 3x passes and is not transitive mod 4); see mahler_ergodic_exact_2";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("max level {max_level} must be between 1 and the spec precision {precision}")]
    Level { max_level: u32, precision: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub max_level: Option<u32>,
    pub mahler_limit: u64,
    pub compile: CompileOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            max_level: None,
            mahler_limit: DEFAULT_MAHLER_LIMIT,
            compile: CompileOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// Pass iff the oracle passes.
    Exact,
    /// Pass implies the oracle passes.
    Sufficient,
    /// Oracle pass implies pass.
    Necessary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    MeasurePreserving,
    Ergodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Agree,
    Disagree,
    NotApplicable,
}

impl Cell {
    fn judge(claim: Claim, criterion: bool, truth: bool) -> Self {
        match (claim, criterion, truth) {
            (_, c, t) if c == t => Cell::Agree,
            (Claim::Exact, _, _) => Cell::Disagree,
            (Claim::Sufficient, true, false) => Cell::Disagree,
            (Claim::Necessary, false, true) => Cell::Disagree,
            _ => Cell::NotApplicable,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Cell::Agree => '=',
            Cell::Disagree => 'X',
            Cell::NotApplicable => '.',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgreementRow {
    pub criterion: String,
    pub claim: Claim,
    pub property: Property,
    /// One cell per level `1..=level`.
    pub cells: Vec<Cell>,
}

impl AgreementRow {
    pub fn disagreements(&self) -> usize {
        self.cells.iter().filter(|&&c| c == Cell::Disagree).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub check: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Timings {
    pub compile_us: u64,
    pub extraction_us: u64,
    pub criteria_us: u64,
    pub oracle_us: u64,
    pub agreement_us: u64,
}

fn us(since: Instant) -> u64 {
    since.elapsed().as_micros() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub p: u32,
    pub precision: u32,
    /// Level the table was compiled and checked to.
    pub level: u32,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz_violation: Option<LipschitzWitness>,
    pub verdicts: Vec<Verdict>,
    pub skipped: Vec<Skipped>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digit_stats: Option<DigitStats>,
    pub oracle: CycleReport,
    pub first_non_permutation: Option<u32>,
    pub agreement: Vec<AgreementRow>,
    pub timings: Timings,
}

impl Report {
    pub fn disagreements(&self) -> usize {
        self.agreement.iter().map(AgreementRow::disagreements).sum()
    }

    pub fn verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    /// Identity and equivalence checks that ran and failed.
    pub fn failed_identities(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|v| IDENTITIES.contains(&v.criterion.as_str()) && !v.passed)
            .map(|v| v.criterion.as_str())
            .collect()
    }
}

const IDENTITIES: [&str; 3] = [
    "block_sum_identity",
    "prop34_congruence",
    "equivalence_chain",
];

type Check<'a> = (
    &'static str,
    Claim,
    Property,
    Box<dyn Fn(u32) -> Option<bool> + 'a>,
);

pub fn analyze(spec: &FunctionSpec, opts: &AnalysisOptions) -> Result<Report, AnalysisError> {
    let cfg = spec.cfg();
    let level = opts.max_level.unwrap_or(cfg.precision());
    if level == 0 || level > cfg.precision() {
        return Err(AnalysisError::Level {
            max_level: level,
            precision: cfg.precision(),
        });
    }
    let p = cfg.p();
    let mut timings = Timings::default();
    let mut skipped = Vec::new();
    let mut skip = |check: &str, reason: String| {
        skipped.push(Skipped {
            check: check.to_string(),
            reason,
        })
    };

    let t = Instant::now();
    let values = compile_with(spec, level, &opts.compile)?;
    timings.compile_us = us(t);

    let t = Instant::now();
    let vdp = vdp_extract(&values);
    let mahler = if (values.len() as u64) <= opts.mahler_limit {
        Some(mahler_extract(&values))
    } else {
        skip(
            "mahler",
            format!(
                "{} entries exceed the Mahler extraction limit {}",
                values.len(),
                opts.mahler_limit
            ),
        );
        None
    };
    let normalized = NormalizedVdp::from_vdp(&vdp).ok();
    timings.extraction_us = us(t);

    let t = Instant::now();
    let lipschitz_violation = values.check_lipschitz().err();
    let mut verdicts = vec![criteria::vdp_lipschitz(&vdp)];
    if let Some(a) = &mahler {
        verdicts.push(criteria::mahler_lipschitz(a));
    }
    let mut push = |r: Result<Verdict, CriteriaError>,
                    name: &str,
                    skip: &mut dyn FnMut(&str, String)| match r {
        Ok(v) => verdicts.push(v),
        Err(e) => skip(name, e.to_string()),
    };
    if lipschitz_violation.is_none() {
        push(Ok(criteria::vdp_mp_sufficient_p(&vdp)), "", &mut skip);
        push(Ok(criteria::vdp_mp_necessary(&vdp)), "", &mut skip);
        push(
            criteria::vdp_ergodic_sufficient_p(&vdp),
            "vdp_ergodic_sufficient_p",
            &mut skip,
        );
        if let Some(b) = &normalized {
            if p == 2 {
                push(criteria::vdp_mp_exact_2(b), "vdp_mp_exact_2", &mut skip);
                push(
                    criteria::vdp_ergodic_exact_2(b),
                    "vdp_ergodic_exact_2",
                    &mut skip,
                );
            }
        }
        if let Some(a) = &mahler {
            push(Ok(criteria::mahler_mp_sufficient(a)), "", &mut skip);
            if p == 2 {
                skip("mahler_ergodic_sufficient_p", P2_MAHLER_NOTE.into());
                push(
                    criteria::mahler_ergodic_exact_2(a),
                    "mahler_ergodic_exact_2",
                    &mut skip,
                );
            } else {
                push(Ok(criteria::mahler_ergodic_sufficient_p(a)), "", &mut skip);
            }
        }
    } else {
        skip(
            "criteria",
            "table is not 1-Lipschitz; measure-preservation and ergodicity criteria do not apply"
                .into(),
        );
    }
    if let SpecKind::Polynomial(coeffs) = spec.kind() {
        if p == 2 {
            push(
                criteria::poly_ergodic_z2(coeffs),
                "poly_ergodic_z2",
                &mut skip,
            );
        }
    }
    push(
        Ok(criteria::block_sum_identity_check(&values)),
        "",
        &mut skip,
    );
    push(
        criteria::prop34_congruence_check(&values),
        "prop34_congruence",
        &mut skip,
    );
    push(
        criteria::equivalence_chain_check(&values),
        "equivalence_chain",
        &mut skip,
    );
    let digit_stats = match criteria::digit_stats(&values) {
        Ok(s) => Some(s),
        Err(e) => {
            skip("digit_stats", e.to_string());
            None
        }
    };
    timings.criteria_us = us(t);

    let t = Instant::now();
    let ladder = oracle::transitivity_ladder(&values);
    let first_non_permutation =
        oracle::first_non_permutation(&values, level).expect("level is valid");
    timings.oracle_us = us(t);

    let t = Instant::now();
    let agreement = if lipschitz_violation.is_none() {
        agreement_matrix(
            spec,
            &values,
            &vdp,
            normalized.as_ref(),
            mahler.as_ref(),
            &ladder,
            first_non_permutation,
        )
    } else {
        Vec::new()
    };
    timings.agreement_us = us(t);

    Ok(Report {
        p,
        precision: cfg.precision(),
        level,
        kind: spec.kind().name().to_string(),
        lipschitz_violation,
        verdicts,
        skipped,
        digit_stats,
        oracle: ladder,
        first_non_permutation,
        agreement,
        timings,
    })
}

fn agreement_matrix(
    spec: &FunctionSpec,
    values: &crate::model::ValueTable,
    vdp: &VdpTable,
    normalized: Option<&NormalizedVdp>,
    mahler: Option<&MahlerTable>,
    ladder: &CycleReport,
    first_non_permutation: Option<u32>,
) -> Vec<AgreementRow> {
    let level = values.n_cert();
    let p = values.p();
    let vdp_at = |k: u32| vdp.reduce(k).expect("k <= level");
    let norm_at = |k: u32| NormalizedVdp::from_vdp(&vdp_at(k)).ok();
    let mahler_at = |k: u32| mahler.map(|a| a.reduce(k).expect("k <= level"));

    let mut checks: Vec<Check> = vec![
        (
            "vdp_mp_sufficient_p",
            Claim::Sufficient,
            Property::MeasurePreserving,
            Box::new(|k| Some(criteria::vdp_mp_sufficient_p(&vdp_at(k)).passed)),
        ),
        (
            "vdp_mp_necessary",
            Claim::Necessary,
            Property::MeasurePreserving,
            Box::new(|k| Some(criteria::vdp_mp_necessary(&vdp_at(k)).passed)),
        ),
        (
            "vdp_ergodic_sufficient_p",
            Claim::Sufficient,
            Property::Ergodic,
            Box::new(|k| {
                criteria::vdp_ergodic_sufficient_p(&vdp_at(k))
                    .ok()
                    .map(|v| v.passed)
            }),
        ),
    ];
    if p == 2 && normalized.is_some() {
        checks.push((
            "vdp_mp_exact_2",
            Claim::Exact,
            Property::MeasurePreserving,
            Box::new(|k| {
                norm_at(k)
                    .and_then(|b| criteria::vdp_mp_exact_2(&b).ok())
                    .map(|v| v.passed)
            }),
        ));
        checks.push((
            "vdp_ergodic_exact_2",
            Claim::Exact,
            Property::Ergodic,
            Box::new(|k| {
                norm_at(k)
                    .and_then(|b| criteria::vdp_ergodic_exact_2(&b).ok())
                    .map(|v| v.passed)
            }),
        ));
    }
    if mahler.is_some() {
        checks.push((
            "mahler_mp_sufficient",
            Claim::Sufficient,
            Property::MeasurePreserving,
            Box::new(|k| mahler_at(k).map(|a| criteria::mahler_mp_sufficient(&a).passed)),
        ));
        if p != 2 {
            checks.push((
                "mahler_ergodic_sufficient_p",
                Claim::Sufficient,
                Property::Ergodic,
                Box::new(|k| {
                    mahler_at(k).map(|a| criteria::mahler_ergodic_sufficient_p(&a).passed)
                }),
            ));
        } else {
            checks.push((
                "mahler_ergodic_exact_2",
                Claim::Exact,
                Property::Ergodic,
                Box::new(|k| {
                    mahler_at(k)
                        .and_then(|a| criteria::mahler_ergodic_exact_2(&a).ok())
                        .map(|v| v.passed)
                }),
            ));
        }
    }
    if let SpecKind::Polynomial(coeffs) = spec.kind() {
        if p == 2 {
            let verdict = criteria::poly_ergodic_z2(coeffs).ok().map(|v| v.passed);
            checks.push((
                "poly_ergodic_z2",
                Claim::Sufficient,
                Property::Ergodic,
                Box::new(move |_| verdict),
            ));
        }
    }
    if p == 2 {
        checks.push((
            "sn_ladder_step",
            Claim::Exact,
            Property::Ergodic,
            Box::new(|k| {
                let prediction = (k >= 2)
                    .then(|| oracle::sn_ladder_step(values, k - 1).ok())
                    .flatten()?;
                let actual = LevelReport::at(values, k).ok()?.is_single_cycle;
                Some(prediction == actual)
            }),
        ));
    }

    let mp_truth = |k: u32| first_non_permutation.is_none_or(|f| k < f);
    let erg_truth = |k: u32| ladder.first_failure.is_none_or(|f| k < f);
    checks
        .into_iter()
        .map(|(name, claim, property, run)| {
            let cells = (1..=level)
                .map(|k| match run(k) {
                    None => Cell::NotApplicable,
                    Some(passed) if name == "sn_ladder_step" => {
                        if passed {
                            Cell::Agree
                        } else {
                            Cell::Disagree
                        }
                    }
                    Some(passed) => {
                        let truth = match property {
                            Property::MeasurePreserving => mp_truth(k),
                            Property::Ergodic => erg_truth(k),
                        };
                        Cell::judge(claim, passed, truth)
                    }
                })
                .collect();
            AgreementRow {
                criterion: name.to_string(),
                claim,
                property,
                cells,
            }
        })
        .collect()
}
