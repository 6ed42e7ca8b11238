//! Byte streams from iterating a 2-adic map.
//!
//! The state walks `x ← f(x) mod 2^N` and each step emits the low eight bits
//! of the new state. When `f` is transitive modulo `2^N` the state sequence
//! has period exactly `2^N`. This is a demonstration, not a cipher.

use thiserror::Error;

use crate::bases::{vdp_extract, NormalizedVdp};
use crate::criteria::vdp_ergodic_exact_2;
use crate::model::ValueTable;
use crate::oracle::{self, CycleReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("streams need p = 2, got p = {0}")]
    Prime(u32),
    #[error("initial state {state} is not below 2^{precision}")]
    State { state: u64, precision: u32 },
    #[error("map is not transitive modulo 2^{level}")]
    NotErgodic { level: u32 },
}

/// How a table was cleared for streaming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clearance {
    pub criterion_passed: bool,
    pub ladder: CycleReport,
    pub forced: bool,
}

/// Accepts `table` when the coefficient criterion or the oracle ladder
/// certifies a single cycle at every level; `force` overrides a refusal.
pub fn clear_for_streaming(table: &ValueTable, force: bool) -> Result<Clearance, StreamError> {
    if table.p() != 2 {
        return Err(StreamError::Prime(table.p()));
    }
    let criterion_passed = table.check_lipschitz().is_ok()
        && NormalizedVdp::from_vdp(&vdp_extract(table))
            .ok()
            .and_then(|b| vdp_ergodic_exact_2(&b).ok())
            .is_some_and(|v| v.passed);
    let ladder = oracle::transitivity_ladder(table);
    match ladder.first_failure {
        Some(level) if !criterion_passed && !force => Err(StreamError::NotErgodic { level }),
        _ => Ok(Clearance {
            criterion_passed,
            forced: force && !(criterion_passed || ladder.all_single_cycle()),
            ladder,
        }),
    }
}

/// Iterator over output bytes.
#[derive(Debug, Clone)]
pub struct Keystream<'a> {
    map: &'a [u64],
    state: u64,
}

impl<'a> Keystream<'a> {
    pub fn new(table: &'a ValueTable, state: u64) -> Result<Self, StreamError> {
        if table.p() != 2 {
            return Err(StreamError::Prime(table.p()));
        }
        if state >= table.len() as u64 {
            return Err(StreamError::State {
                state,
                precision: table.n_cert(),
            });
        }
        Ok(Self {
            map: table.values(),
            state,
        })
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn step(&mut self) -> u64 {
        self.state = self.map[self.state as usize];
        self.state
    }
}

impl Iterator for Keystream<'_> {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        Some(self.step() as u8)
    }
}

/// Length of the cycle through `start`, or `None` if the orbit of `start`
/// never returns to it.
pub fn state_period(table: &ValueTable, start: u64) -> Option<u64> {
    let map = table.values();
    let mut x = start;
    for steps in 1..=map.len() as u64 {
        x = map[x as usize];
        if x == start {
            return Some(steps);
        }
    }
    None
}

/// True when one period starting at `start` visits every state exactly once.
pub fn visits_every_state(table: &ValueTable, start: u64) -> bool {
    let map = table.values();
    let mut seen = vec![false; map.len()];
    let mut x = start;
    for _ in 0..map.len() {
        if seen[x as usize] {
            return false;
        }
        seen[x as usize] = true;
        x = map[x as usize];
    }
    x == start
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrimeConfig;

    fn table(n: u32, f: impl Fn(u64) -> i128) -> ValueTable {
        ValueTable::from_fn(PrimeConfig::new(2, n).unwrap(), f).unwrap()
    }

    #[test]
    fn counter_stream() {
        let t = table(8, |x| 1 + x as i128);
        let bytes: Vec<u8> = Keystream::new(&t, 0).unwrap().take(257).collect();
        assert_eq!(&bytes[..3], &[1, 2, 3]);
        assert_eq!(bytes[254], 255);
        assert_eq!(bytes[255], 0);
        assert_eq!(bytes[256], 1);
    }

    #[test]
    fn full_period() {
        let t = table(12, |x| 1 + x as i128 + 4 * (x * x) as i128);
        assert_eq!(state_period(&t, 0), Some(4096));
        assert!(visits_every_state(&t, 77));
        let t = table(6, |x| 3 * x as i128);
        assert_eq!(state_period(&t, 0), Some(1));
        assert!(!visits_every_state(&t, 0));
        let t = table(4, |x| (x * x) as i128);
        assert_eq!(state_period(&t, 3), None);
    }

    #[test]
    fn refuses_non_ergodic_maps() {
        let t = table(6, |x| x as i128);
        assert_eq!(
            clear_for_streaming(&t, false),
            Err(StreamError::NotErgodic { level: 1 })
        );
        let c = clear_for_streaming(&t, true).unwrap();
        assert!(c.forced);
        let c = clear_for_streaming(&table(6, |x| 1 + x as i128), false).unwrap();
        assert!(c.criterion_passed && !c.forced);
        let t3 = ValueTable::from_fn(PrimeConfig::new(3, 2).unwrap(), |x| 1 + x as i128).unwrap();
        assert_eq!(clear_for_streaming(&t3, false), Err(StreamError::Prime(3)));
        assert!(matches!(
            Keystream::new(&t, 64),
            Err(StreamError::State { .. })
        ));
    }
}
