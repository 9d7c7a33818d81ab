//! The class DAG behind the cut-set recursion.
//!
//! In the product model a word's diameter and weight depend only on how
//! often each distinct ratio occurs along it, so words are grouped into
//! classes keyed by `(level, count vector)`. The DAG of classes for a given
//! `(delta, theta)` does not depend on `t`, which lets root finding in `t`
//! reuse it.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::system::{LevelSpec, SystemSpec};

/// Distinct log-ratios seen so far, in first-seen order.
#[derive(Debug, Clone, Default)]
pub(crate) struct Alphabet<T> {
    ratios: Vec<T>,
    index: HashMap<u64, u16>,
}

impl<T: Scalar> Alphabet<T> {
    pub fn new() -> Self {
        Self {
            ratios: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn intern(&mut self, log_ratio: T) -> u16 {
        let key = log_ratio.f64().to_bits();
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.ratios.len() as u16;
        self.ratios.push(log_ratio);
        self.index.insert(key, i);
        i
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    /// `log |J| + sum_i count_i * log r_i`, summed in alphabet order so equal
    /// classes always get bitwise-equal diameters.
    pub fn log_diam(&self, log_j: T, counts: &[(u16, u32)]) -> T {
        counts
            .iter()
            .fold(log_j, |acc, &(i, c)| acc + T::of(c as f64) * self.ratios[i as usize])
    }
}

/// Adds one occurrence of `idx` to a sorted sparse count vector.
pub(crate) fn bump(counts: &[(u16, u32)], idx: u16) -> Vec<(u16, u32)> {
    let mut out = Vec::with_capacity(counts.len() + 1);
    let mut placed = false;
    for &(i, c) in counts {
        if i == idx {
            out.push((i, c + 1));
            placed = true;
        } else {
            if !placed && i > idx {
                out.push((idx, 1));
                placed = true;
            }
            out.push((i, c));
        }
    }
    if !placed {
        out.push((idx, 1));
    }
    out
}

/// Levels indexed by alphabet entries, materialized on demand.
pub(crate) struct LevelCache<'a, T> {
    spec: &'a SystemSpec<T>,
    levels: Vec<Vec<(u16, T)>>,
    pub alphabet: Alphabet<T>,
}

impl<'a, T: Scalar> LevelCache<'a, T> {
    pub fn new(spec: &'a SystemSpec<T>) -> Self {
        Self {
            spec,
            levels: Vec::new(),
            alphabet: Alphabet::new(),
        }
    }

    /// `(alphabet index, log multiplicity)` per group of level `k >= 1`.
    pub fn level(&mut self, k: usize) -> Result<&[(u16, T)]> {
        while self.levels.len() < k {
            let n = self.levels.len() + 1;
            let level = self.spec.materialize_level(n)?;
            let LevelSpec::Finite(groups) = level else {
                return Err(Error::InfiniteLevel {
                    level: n,
                    what: "the cut-set recursion",
                });
            };
            let row = groups
                .iter()
                .map(|g| (self.alphabet.intern(g.log_ratio), g.mult.ln()))
                .collect();
            self.levels.push(row);
        }
        Ok(&self.levels[k - 1])
    }

    /// Every map of level `k` by alphabet index, for word enumeration.
    pub fn expanded(&mut self, k: usize) -> Result<Vec<u16>> {
        let spec = self.spec;
        self.level(k)?;
        let level = spec.materialize_level(k)?;
        let groups = level.groups().expect("finite level");
        let mut out = Vec::new();
        for g in groups {
            let idx = self.alphabet.intern(g.log_ratio);
            let n = g.mult.count().filter(|&n| n <= 64).ok_or_else(|| {
                Error::InstanceTooLarge(format!("level {k} has too many maps to enumerate"))
            })?;
            out.extend(std::iter::repeat_n(idx, n as usize));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    /// Diameter above `delta`.
    MustExpand,
    /// Diameter in `(delta^{1/theta}, delta]`.
    Optional,
    /// Diameter at most `delta^{1/theta}`: children would break the parent constraint.
    MustStop,
}

#[derive(Debug, Clone)]
pub(crate) struct Node<T> {
    pub level: u32,
    pub log_diam: T,
    pub kind: Kind,
    pub edges: (u32, u32),
}

/// Class DAG for one `(delta, theta)`; nodes are in breadth-first order so
/// every child has a larger index than its parents.
#[derive(Debug, Clone)]
pub(crate) struct Skeleton<T> {
    pub nodes: Vec<Node<T>>,
    pub edges: Vec<(u32, T)>,
    pub log_j: T,
}

pub(crate) struct Limits {
    pub depth_cap: usize,
    pub memo_budget: usize,
}

pub(crate) fn build<T: Scalar>(spec: &SystemSpec<T>, log_delta: T, log_floor: T, limits: &Limits) -> Result<Skeleton<T>> {
    let log_j = spec.log_ambient_diameter();
    let mut cache = LevelCache::new(spec);
    let classify = |d: T| {
        if d > log_delta {
            Kind::MustExpand
        } else if d > log_floor {
            Kind::Optional
        } else {
            Kind::MustStop
        }
    };
    let mut nodes = vec![Node {
        level: 0,
        log_diam: log_j,
        kind: Kind::MustExpand,
        edges: (0, 0),
    }];
    let mut edges: Vec<(u32, T)> = Vec::new();
    let mut frontier: Vec<(usize, Vec<(u16, u32)>)> = vec![(0, Vec::new())];
    let mut level = 0usize;
    while !frontier.is_empty() {
        let expanding: Vec<_> = frontier
            .into_iter()
            .filter(|(id, _)| nodes[*id].kind != Kind::MustStop)
            .collect();
        if expanding.is_empty() {
            break;
        }
        level += 1;
        if level > limits.depth_cap {
            return Err(Error::DepthCapExceeded { cap: limits.depth_cap });
        }
        let row = cache.level(level)?.to_vec();
        let mut next: HashMap<Vec<(u16, u32)>, usize> = HashMap::new();
        let mut next_frontier = Vec::new();
        for (id, counts) in expanding {
            let start = edges.len() as u32;
            for &(idx, mult_ln) in &row {
                let child = bump(&counts, idx);
                let child_id = match next.get(&child) {
                    Some(&c) => c,
                    None => {
                        let d = cache.alphabet.log_diam(log_j, &child);
                        let c = nodes.len();
                        nodes.push(Node {
                            level: level as u32,
                            log_diam: d,
                            kind: classify(d),
                            edges: (0, 0),
                        });
                        if nodes.len() > limits.memo_budget {
                            return Err(Error::MemoBudgetExceeded {
                                budget: limits.memo_budget,
                                level,
                                states: nodes.len(),
                                distinct_ratios: cache.alphabet.len(),
                            });
                        }
                        next.insert(child.clone(), c);
                        next_frontier.push((c, child));
                        c
                    }
                };
                edges.push((child_id as u32, mult_ln));
            }
            nodes[id].edges = (start, edges.len() as u32);
        }
        frontier = next_frontier;
    }
    Ok(Skeleton {
        nodes,
        edges,
        log_j,
    })
}

impl<T: Scalar> Skeleton<T> {
    fn expand_cost(&self, node: &Node<T>, costs: &[T]) -> T {
        let e = &self.edges[node.edges.0 as usize..node.edges.1 as usize];
        if e.len() == 1 {
            return e[0].1 + costs[e[0].0 as usize];
        }
        let mut max = T::neg_infinity();
        for &(c, m) in e {
            max = max.max(m + costs[c as usize]);
        }
        if max == T::infinity() || max == T::neg_infinity() {
            return max;
        }
        let mut acc = T::zero();
        for &(c, m) in e {
            acc = acc + (m + costs[c as usize] - max).exp();
        }
        max + acc.ln()
    }

    /// Minimum log-cost of every class at `t`, plus whether it expands.
    pub fn solve(&self, t: T) -> (Vec<T>, Vec<bool>) {
        let n = self.nodes.len();
        let mut costs = vec![T::zero(); n];
        let mut expands = vec![false; n];
        for i in (0..n).rev() {
            let node = &self.nodes[i];
            let stop = t * (node.log_diam - self.log_j);
            let (c, e) = match node.kind {
                Kind::MustStop => (stop, false),
                Kind::MustExpand => (self.expand_cost(node, &costs), true),
                Kind::Optional => {
                    let ex = self.expand_cost(node, &costs);
                    if ex < stop {
                        (ex, true)
                    } else {
                        (stop, false)
                    }
                }
            };
            costs[i] = c;
            expands[i] = e;
        }
        (costs, expands)
    }

    pub fn min_cost(&self, t: T) -> T {
        self.solve(t).0[0]
    }

    /// Classes of the optimal cut set as `(level, log_diam, log_count)`.
    pub fn argmin_classes(&self, expands: &[bool]) -> Vec<(usize, T, T)> {
        let n = self.nodes.len();
        let mut reach = vec![T::neg_infinity(); n];
        reach[0] = T::zero();
        let mut out = Vec::new();
        for i in 0..n {
            if reach[i] == T::neg_infinity() {
                continue;
            }
            let node = &self.nodes[i];
            if expands[i] {
                let here = reach[i];
                for &(c, m) in &self.edges[node.edges.0 as usize..node.edges.1 as usize] {
                    let r = &mut reach[c as usize];
                    *r = crate::logspace::log_add_exp(*r, here + m);
                }
            } else {
                out.push((node.level as usize, node.log_diam, reach[i]));
            }
        }
        out
    }
}
