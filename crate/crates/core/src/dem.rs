//! Shot-level inference for the k-independent-set decision problem.
//!
//! [`bf_dem`] scans error patterns around a measured word in increasing
//! Hamming weight and stops at the first independent candidate of weight at
//! least `k`. [`tarjan_dem`] runs max-degree in/out branching with an
//! entropy-sized cap `K = ceil(n * H2(p))` on the number of vertices a branch
//! may include.
//!
//! Pattern order: weight classes ascending; inside a class, the flipped-index
//! tuples `c_1 < ... < c_w` in colexicographic order (compare `c_w` first).
//! Rank 1 is the zero pattern.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{binary_entropy, median};
use crate::bitstring::Bitstring;
use crate::error::{Error, Result};
use crate::graph::{is_independent_set, Graph};
use crate::mis::{branch_and_reduce, BranchObserver, Reductions};

/// Largest word length whose ranks fit the `u128` rank space.
pub const MAX_RANK_BITS: usize = 127;

/// Default cap on candidate evaluations.
pub const DEFAULT_BUDGET_CAP: u64 = 1_000_000_000;

/// `min(2^n, 10^9)`.
pub fn default_budget(n: usize) -> u64 {
    if n >= 30 {
        DEFAULT_BUDGET_CAP
    } else {
        (1u64 << n).min(DEFAULT_BUDGET_CAP)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * num is divisible by den; cancel first to stay inside u128
        let (mut num, mut den) = ((n - i) as u128, (i + 1) as u128);
        let g = gcd(acc, den);
        acc /= g;
        den /= g;
        num /= den;
        acc *= num;
    }
    acc
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_rank_bits(n: usize) -> Result<()> {
    if n > MAX_RANK_BITS {
        return Err(Error::InvalidArgument(format!(
            "pattern ranks are limited to n <= {MAX_RANK_BITS}, got {n}"
        )));
    }
    Ok(())
}

/// Error pattern with the given 1-based rank.
pub fn unrank_pattern(n: usize, rank: u128) -> Result<Bitstring> {
    check_rank_bits(n)?;
    let total = 1u128 << n;
    if rank == 0 || rank > total {
        return Err(Error::RankOutOfRange { n, rank });
    }
    let mut r = rank - 1;
    let mut weight = 0;
    loop {
        let shell = binomial(n, weight);
        if r < shell {
            break;
        }
        r -= shell;
        weight += 1;
    }
    // combinatorial number system: r = sum_j C(c_j, j)
    let mut indices = Vec::with_capacity(weight);
    let mut upper = n;
    for j in (1..=weight).rev() {
        let mut c = j - 1;
        while c + 1 < upper && binomial(c + 1, j) <= r {
            c += 1;
        }
        r -= binomial(c, j);
        indices.push(c);
        upper = c;
    }
    Bitstring::from_indices(n, indices)
}

/// Inverse of [`unrank_pattern`].
pub fn rank_pattern(pattern: &Bitstring) -> Result<u128> {
    let n = pattern.len();
    check_rank_bits(n)?;
    let weight = pattern.weight();
    let below: u128 = (0..weight).map(|w| binomial(n, w)).sum();
    let within: u128 = pattern
        .ones()
        .enumerate()
        .map(|(j, c)| binomial(c, j + 1))
        .sum();
    Ok(below + within + 1)
}

/// Walks error patterns in rank order without unranking each one.
#[derive(Clone, Debug)]
pub struct ErrorPatternCursor {
    n: usize,
    /// 1-based rank of the current pattern.
    index: u64,
    /// Flipped indices of the current pattern, ascending.
    set: Vec<usize>,
    done: bool,
}

impl ErrorPatternCursor {
    pub fn new(n: usize) -> Self {
        ErrorPatternCursor {
            n,
            index: 1,
            set: Vec::new(),
            done: false,
        }
    }

    pub fn rank(&self) -> u64 {
        self.index
    }

    /// Indices flipped by the current pattern, or `None` past the last one.
    pub fn indices(&self) -> Option<&[usize]> {
        (!self.done).then_some(self.set.as_slice())
    }

    pub fn weight(&self) -> usize {
        self.set.len()
    }

    pub fn pattern(&self) -> Option<Bitstring> {
        self.indices()
            .map(|ix| Bitstring::from_indices(self.n, ix.iter().copied()).expect("indices < n"))
    }

    pub fn advance(&mut self) {
        if self.done {
            return;
        }
        self.index += 1;
        let w = self.set.len();
        // colex successor: bump the lowest element that has room
        for j in 0..w {
            let limit = if j + 1 < w { self.set[j + 1] } else { self.n };
            if self.set[j] + 1 < limit {
                self.set[j] += 1;
                for (i, slot) in self.set[..j].iter_mut().enumerate() {
                    *slot = i;
                }
                return;
            }
        }
        if w == self.n {
            self.done = true;
            return;
        }
        self.set.clear();
        self.set.extend(0..w + 1);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Yes,
    No,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Yes => "YES",
            Decision::No => "NO",
        }
    }
}

/// Why a BF-DEM run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Found,
    BudgetExhausted,
    SpaceExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemResult {
    pub decision: Decision,
    pub output: Bitstring,
    /// Loop iterations, i.e. candidates evaluated.
    pub ops: u64,
    /// Hamming weight of the last pattern evaluated.
    pub max_distance_reached: usize,
    pub termination: Termination,
}

/// Brute-force shell search around the measured word `z`.
///
/// Candidate `w' = z XOR e_i` replaces the running output `w` when it is
/// independent and heavier than the heaviest independent word seen so far
/// (`z` itself counts only if it is independent). The search stops as soon
/// as `w` is independent with `|w| >= k`.
pub fn bf_dem(g: &Graph, k: usize, z: &Bitstring, budget: u64) -> Result<DemResult> {
    if z.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            found: z.len(),
        });
    }
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let n = g.n();
    let adj = g.adjacency();
    let z_weight = z.weight();

    let mut output = z.clone();
    let mut best: Option<usize> = is_independent_set(g, z)?.then_some(z_weight);
    let mut work = z.as_bitset().clone();
    let mut cursor = ErrorPatternCursor::new(n);
    let mut ops = 0u64;

    let termination = loop {
        let Some(flips) = cursor.indices() else {
            break Termination::SpaceExhausted;
        };
        if ops == budget {
            break Termination::BudgetExhausted;
        }
        ops += 1;

        let mut weight = z_weight;
        for &i in flips {
            if z.get(i) {
                weight -= 1;
            } else {
                weight += 1;
            }
        }
        if best.is_none_or(|b| weight > b) {
            for &i in flips {
                work.toggle(i);
            }
            if work.ones().all(|v| adj[v].is_disjoint(&work)) {
                best = Some(weight);
                output = Bitstring::from_bitset(work.clone());
            }
            for &i in flips {
                work.toggle(i);
            }
        }
        if best.is_some_and(|b| b >= k) {
            break Termination::Found;
        }
        cursor.advance();
    };

    let decision = if termination == Termination::Found {
        Decision::Yes
    } else {
        Decision::No
    };
    Ok(DemResult {
        decision,
        output,
        ops,
        max_distance_reached: cursor.weight(),
        termination,
    })
}

// ---------------------------------------------------------------------------
// Entropy-budgeted branch-and-reduce
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TarjanDemResult {
    pub size: usize,
    /// `ceil(n * H2(p))`.
    #[serde(rename = "K")]
    pub k_budget: usize,
    pub node_count: u64,
    pub witness: Bitstring,
}

/// `ceil(n * H2(p))`, snapping values within rounding noise of an integer.
pub fn entropy_budget(n: usize, p: f64) -> usize {
    let x = n as f64 * binary_entropy(p);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Reductions used by [`tarjan_dem`]: component splitting only. The
/// low-degree rules solve square lattices almost without branching.
pub const TARJAN_DEM_REDUCTIONS: Reductions = Reductions::COMPONENTS;

/// Entropy-budgeted search. Depth grows by one on each include branch and
/// stays put on exclude branches; a subproblem at depth `>= K` returns 0.
pub fn tarjan_dem(g: &Graph, p: f64) -> Result<TarjanDemResult> {
    tarjan_dem_with(g, p, TARJAN_DEM_REDUCTIONS, &mut ())
}

/// [`tarjan_dem`] with an explicit reduction set and a hook on every
/// branching node. Vertices forced by the low-degree rules count toward the
/// depth like include branches.
pub fn tarjan_dem_with<O: BranchObserver>(
    g: &Graph,
    p: f64,
    reductions: Reductions,
    observer: &mut O,
) -> Result<TarjanDemResult> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::InvalidProbability {
            name: "p",
            value: p,
            lo: 0.0,
            hi: 0.5,
        });
    }
    let k_budget = entropy_budget(g.n(), p);
    let out = branch_and_reduce(g, Some(k_budget), reductions, observer);
    Ok(TarjanDemResult {
        size: out.size,
        k_budget,
        node_count: out.node_count,
        witness: out.witness,
    })
}

// ---------------------------------------------------------------------------
// Multi-shot decision
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotOutcome {
    pub shot: usize,
    pub decision: Decision,
    pub ops: u64,
    pub hd_explored: usize,
    pub output: Bitstring,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub decision: Decision,
    pub k: usize,
    pub per_shot: Vec<ShotOutcome>,
    pub median_ops: f64,
    pub mean_ops: f64,
    /// Index of the first shot that returned YES.
    pub first_yes_shot: Option<usize>,
    /// Total ops over shots `0..=first_yes_shot`.
    pub ops_until_first_yes: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShotPolicy {
    /// Process shots in order and stop after the first YES.
    StopAtFirstYes,
    /// Process every shot, in parallel.
    All,
}

pub fn decide_k_is(
    g: &Graph,
    k: usize,
    shots: &[Bitstring],
    budget: u64,
    policy: ShotPolicy,
) -> Result<DecisionReport> {
    if shots.is_empty() {
        return Err(Error::InvalidArgument("no shots supplied".into()));
    }
    let run = |(i, z): (usize, &Bitstring)| -> Result<ShotOutcome> {
        let r = bf_dem(g, k, z, budget)?;
        Ok(ShotOutcome {
            shot: i,
            decision: r.decision,
            ops: r.ops,
            hd_explored: r.max_distance_reached,
            output: r.output,
            termination: r.termination,
        })
    };
    let per_shot: Vec<ShotOutcome> = match policy {
        ShotPolicy::All => shots
            .par_iter()
            .enumerate()
            .map(run)
            .collect::<Result<_>>()?,
        ShotPolicy::StopAtFirstYes => {
            let mut out = Vec::new();
            for item in shots.iter().enumerate() {
                let o = run(item)?;
                let yes = o.decision == Decision::Yes;
                out.push(o);
                if yes {
                    break;
                }
            }
            out
        }
    };
    let ops: Vec<f64> = per_shot.iter().map(|o| o.ops as f64).collect();
    let first_yes_shot = per_shot.iter().position(|o| o.decision == Decision::Yes);
    Ok(DecisionReport {
        decision: if first_yes_shot.is_some() {
            Decision::Yes
        } else {
            Decision::No
        },
        k,
        median_ops: median(&ops),
        mean_ops: ops.iter().sum::<f64>() / ops.len() as f64,
        first_yes_shot,
        ops_until_first_yes: first_yes_shot.map(|i| per_shot[..=i].iter().map(|o| o.ops).sum()),
        per_shot,
    })
}
