//! Exact maximal-cube search shared by the scaled VC dimension, the
//! fat-shattering dimension and VC dimensions of inflated sets.
//!
//! Each coordinate offers a list of candidate pairs. A pair is given by the
//! sets of points matching its low and high value. A choice of one pair per
//! coordinate of `sigma` embeds when every one of the `2^|sigma|` patterns is
//! matched by some point. Embedding is downward closed in `sigma`.

use std::cell::Cell;

use crate::bitset::PointBits;
use crate::budget::Budget;
use crate::error::Result;

#[derive(Clone, Debug)]
pub(crate) struct PairOption {
    pub low: f64,
    pub high: f64,
    pub low_set: PointBits,
    pub high_set: PointBits,
}

#[derive(Clone, Debug)]
pub(crate) struct CubeProblem {
    pub npoints: usize,
    pub coords: Vec<Vec<PairOption>>,
    /// Low and high sets of every pair are disjoint, so each pattern set must
    /// hold at least `2^remaining` points.
    pub disjoint: bool,
}

/// A solved cube: coordinates, chosen pair index per coordinate, and the
/// points matching each pattern (bit `j` of the pattern index is "high" on
/// `sigma[j]`).
#[derive(Clone, Debug)]
pub(crate) struct CubeSolution {
    pub sigma: Vec<usize>,
    pub choice: Vec<usize>,
    pub patterns: Vec<PointBits>,
}

struct Ticker<'a> {
    budget: &'a Budget,
    nodes: Cell<u64>,
}

impl Ticker<'_> {
    #[inline]
    fn tick(&self) -> Result<()> {
        let n = self.nodes.get() + 1;
        self.nodes.set(n);
        if n % 2048 == 0 {
            self.budget.check("exact cube search")?;
        }
        Ok(())
    }
}

impl CubeProblem {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Keeps only pairs not dominated by another pair of the same coordinate
    /// (both match sets contained in the other's). Removing dominated pairs
    /// never changes which `sigma` embed.
    pub fn prune_dominated(&mut self) {
        for opts in &mut self.coords {
            let mut keep = vec![true; opts.len()];
            for i in 0..opts.len() {
                if !keep[i] {
                    continue;
                }
                for j in 0..opts.len() {
                    if i == j || !keep[j] {
                        continue;
                    }
                    let (a, b) = (&opts[i], &opts[j]);
                    if a.low_set.is_subset_of(&b.low_set) && a.high_set.is_subset_of(&b.high_set) {
                        let equal = b.low_set.is_subset_of(&a.low_set) && b.high_set.is_subset_of(&a.high_set);
                        // among equal pairs keep the earliest
                        if !equal || j < i {
                            keep[i] = false;
                            break;
                        }
                    }
                }
            }
            let mut k = keep.iter();
            opts.retain(|_| *k.next().unwrap());
        }
    }

    fn extend(
        &self,
        order: &[usize],
        depth: usize,
        patterns: &[PointBits],
        chosen: &mut Vec<usize>,
        ticker: &Ticker<'_>,
    ) -> Result<Option<Vec<PointBits>>> {
        if depth == order.len() {
            return Ok(Some(patterns.to_vec()));
        }
        ticker.tick()?;
        let need = if self.disjoint {
            1usize << (order.len() - depth - 1)
        } else {
            1
        };
        let len = patterns.len();
        let mut next = vec![PointBits::empty(self.npoints); 2 * len];
        'opt: for (pi, opt) in self.coords[order[depth]].iter().enumerate() {
            for (q, p) in patterns.iter().enumerate() {
                let (lo, hi) = next.split_at_mut(len);
                if p.and_into(&opt.low_set, &mut lo[q]) < need {
                    continue 'opt;
                }
                if p.and_into(&opt.high_set, &mut hi[q]) < need {
                    continue 'opt;
                }
            }
            chosen.push(pi);
            if let Some(found) = self.extend(order, depth + 1, &next, chosen, ticker)? {
                return Ok(Some(found));
            }
            chosen.pop();
        }
        Ok(None)
    }

    fn solve_in_order(&self, order: &[usize], ticker: &Ticker<'_>) -> Result<Option<(Vec<usize>, Vec<PointBits>)>> {
        if order.len() >= usize::BITS as usize - 1 || (1usize << order.len()) > self.npoints {
            return Ok(None);
        }
        let mut chosen = Vec::with_capacity(order.len());
        let root = vec![PointBits::full(self.npoints)];
        Ok(self
            .extend(order, 0, &root, &mut chosen, ticker)?
            .map(|patterns| (chosen, patterns)))
    }

    /// Pair assignment for a fixed `sigma`, the lexicographically smallest
    /// one in pair-index order.
    pub fn assignment(&self, sigma: &[usize], budget: &Budget) -> Result<Option<CubeSolution>> {
        let ticker = Ticker {
            budget,
            nodes: Cell::new(0),
        };
        Ok(self.solve_in_order(sigma, &ticker)?.map(|(choice, patterns)| CubeSolution {
            sigma: sigma.to_vec(),
            choice,
            patterns,
        }))
    }

    /// Existence test that visits coordinates with the fewest options first.
    fn feasible(&self, sigma: &[usize], ticker: &Ticker<'_>) -> Result<bool> {
        let mut order = sigma.to_vec();
        order.sort_by_key(|&c| (self.coords[c].len(), c));
        Ok(self.solve_in_order(&order, ticker)?.is_some())
    }

    /// Largest embedding cube; among those the lexicographically smallest
    /// `sigma`, then the smallest pair choice.
    pub fn maximize(&self, budget: &Budget) -> Result<Option<CubeSolution>> {
        budget.check("exact cube search")?;
        let ticker = Ticker {
            budget,
            nodes: Cell::new(0),
        };
        let cap = if self.npoints == 0 {
            0
        } else {
            (usize::BITS - 1 - self.npoints.leading_zeros()) as usize
        };
        let mut best: Vec<usize> = Vec::new();
        let mut sigma = Vec::new();
        self.dfs(&mut sigma, 0, cap, &mut best, &ticker)?;
        if best.is_empty() {
            return Ok(None);
        }
        self.assignment(&best, budget)
    }

    fn dfs(
        &self,
        sigma: &mut Vec<usize>,
        start: usize,
        cap: usize,
        best: &mut Vec<usize>,
        ticker: &Ticker<'_>,
    ) -> Result<()> {
        if sigma.len() >= cap {
            return Ok(());
        }
        for j in start..self.dim() {
            if sigma.len() + (self.dim() - j) <= best.len() || best.len() >= cap {
                break;
            }
            if self.coords[j].is_empty() {
                continue;
            }
            sigma.push(j);
            if self.feasible(sigma, ticker)? {
                if sigma.len() > best.len() {
                    *best = sigma.clone();
                }
                self.dfs(sigma, j + 1, cap, best, ticker)?;
            }
            sigma.pop();
        }
        Ok(())
    }
}
