use crate::error::{Error, Result};
use crate::logspace::log_add_exp;
use crate::scalar::Scalar;
use crate::system::SystemSpec;

use super::skeleton::{bump, LevelCache};
use super::{k_delta, validate, CutSetProblem, CutSetResult};

const MAX_DEPTH: usize = 6;
const MAX_BRANCHES: usize = 3;
const MAX_OPTIONS: usize = 1 << 21;

struct Enumerator<'a, T> {
    cache: LevelCache<'a, T>,
    log_j: T,
    log_delta: T,
    log_floor: T,
    t: T,
}

impl<T: Scalar> Enumerator<'_, T> {
    /// Log-costs of every admissible cut set below one word.
    fn costs(&mut self, counts: &[(u16, u32)], level: usize) -> Result<Vec<T>> {
        let d = self.cache.alphabet.log_diam(self.log_j, counts);
        let root = level == 0;
        let may_stop = !root && d <= self.log_delta;
        let may_expand = root || d > self.log_floor;
        let mut options = Vec::new();
        if may_stop {
            options.push(self.t * (d - self.log_j));
        }
        if may_expand {
            if level + 1 > MAX_DEPTH {
                return Err(Error::InstanceTooLarge(format!(
                    "admissible words deeper than {MAX_DEPTH}"
                )));
            }
            let maps = self.cache.expanded(level + 1)?;
            if maps.len() > MAX_BRANCHES {
                return Err(Error::InstanceTooLarge(format!(
                    "level {} has more than {MAX_BRANCHES} maps",
                    level + 1
                )));
            }
            let mut acc = vec![T::neg_infinity()];
            for idx in maps {
                let child = self.costs(&bump(counts, idx), level + 1)?;
                if acc.len().saturating_mul(child.len()) > MAX_OPTIONS {
                    return Err(Error::InstanceTooLarge("too many cut sets".into()));
                }
                let mut next = Vec::with_capacity(acc.len() * child.len());
                for &a in &acc {
                    for &b in &child {
                        next.push(log_add_exp(a, b));
                    }
                }
                acc = next;
            }
            options.extend(acc);
        }
        Ok(options)
    }
}

/// Exhaustive minimum over all admissible cut sets, word by word.
///
/// Only for tiny instances (at most 3 maps per level, depth at most 6); the
/// argmin summary is left empty.
pub fn brute_force_min_cut<T: Scalar>(spec: &SystemSpec<T>, problem: &CutSetProblem<T>) -> Result<CutSetResult<T>> {
    validate(spec, problem)?;
    let log_delta = problem.delta.ln();
    let mut e = Enumerator {
        cache: LevelCache::new(spec),
        log_j: spec.log_ambient_diameter(),
        log_delta,
        log_floor: log_delta / problem.theta,
        t: problem.t,
    };
    let all = e.costs(&[], 0)?;
    let min_cost_log = all.into_iter().fold(T::infinity(), T::min);
    Ok(CutSetResult {
        min_cost_log,
        k_delta: k_delta(spec, problem.delta)?,
        argmin_summary: Vec::new(),
        exact: true,
        classes: 0,
        delta: problem.delta,
        theta: problem.theta,
    })
}
