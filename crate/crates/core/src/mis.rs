//! Exact maximum independent set solvers.
//!
//! [`brute_force_mis`] enumerates every subset and serves as the oracle.
//! [`tarjan_mis`] is a branch-and-reduce search: degree-0 and degree-1
//! vertices are taken greedily, disconnected residual graphs are split into
//! components, and otherwise the search branches on a maximum-degree vertex
//! (lowest index on ties), first including it and then excluding it. Each
//! reduction can be switched off through [`Reductions`].
//!
//! The same engine backs the depth-budgeted search in [`crate::dem::tarjan_dem`].

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::bitstring::Bitstring;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default vertex cap for [`brute_force_mis`].
pub const BRUTE_FORCE_CAP: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisResult {
    pub size: usize,
    pub witness: Bitstring,
    /// Search nodes visited: subsets for the brute-force oracle, recursive
    /// invocations for branch-and-reduce.
    pub node_count: u64,
}

pub fn brute_force_mis(g: &Graph) -> Result<MisResult> {
    brute_force_mis_capped(g, BRUTE_FORCE_CAP)
}

/// Exhaustive search over all `2^n` subsets. Among maximum sets, returns the
/// witness whose bitstring is lexicographically smallest.
pub fn brute_force_mis_capped(g: &Graph, cap: usize) -> Result<MisResult> {
    let n = g.n();
    if n > cap || n >= 64 {
        return Err(Error::CapExceeded { n, cap: cap.min(63) });
    }
    let adj: Vec<u64> = (0..n)
        .map(|v| g.neighbors(v).fold(0u64, |m, u| m | 1 << u))
        .collect();

    // Lexicographic order on the text form compares bit 0 first, i.e. the
    // bit-reversed mask.
    let lex_key = |mask: u64| if n == 0 { 0 } else { mask.reverse_bits() >> (64 - n) };

    let mut best_size = 0usize;
    let mut best_mask = 0u64;
    for mask in 0u64..(1u64 << n) {
        let size = mask.count_ones() as usize;
        if size < best_size {
            continue;
        }
        let mut rest = mask;
        let mut independent = true;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if adj[v] & mask != 0 {
                independent = false;
                break;
            }
        }
        if !independent {
            continue;
        }
        if size > best_size || lex_key(mask) < lex_key(best_mask) {
            best_size = size;
            best_mask = mask;
        }
    }
    let witness = Bitstring::from_indices(n, (0..n).filter(|&i| best_mask >> i & 1 == 1))?;
    Ok(MisResult {
        size: best_size,
        witness,
        node_count: 1u64 << n,
    })
}

/// Callback invoked at every branching node of the branch-and-reduce search.
pub trait BranchObserver {
    /// `pivot` is the chosen vertex; `residual` the vertex set of the current
    /// subproblem after reductions.
    fn on_branch(&mut self, graph: &Graph, residual: &FixedBitSet, pivot: usize);
}

impl BranchObserver for () {
    fn on_branch(&mut self, _: &Graph, _: &FixedBitSet, _: usize) {}
}

/// Reduction rules applied before branching.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Reductions {
    /// Take degree-0 vertices, and degree-1 vertices in place of their
    /// neighbour.
    pub low_degree: bool,
    /// Solve connected components independently.
    pub components: bool,
}

impl Reductions {
    pub const ALL: Reductions = Reductions {
        low_degree: true,
        components: true,
    };
    pub const COMPONENTS: Reductions = Reductions {
        low_degree: false,
        components: true,
    };
    pub const NONE: Reductions = Reductions {
        low_degree: false,
        components: false,
    };
}

impl Default for Reductions {
    fn default() -> Self {
        Reductions::ALL
    }
}

pub fn tarjan_mis(g: &Graph) -> MisResult {
    tarjan_mis_with(g, Reductions::ALL, &mut ())
}

pub fn tarjan_mis_observed<O: BranchObserver>(g: &Graph, observer: &mut O) -> MisResult {
    tarjan_mis_with(g, Reductions::ALL, observer)
}

pub fn tarjan_mis_with<O: BranchObserver>(
    g: &Graph,
    reductions: Reductions,
    observer: &mut O,
) -> MisResult {
    let out = branch_and_reduce(g, None, reductions, observer);
    MisResult {
        size: out.size,
        witness: out.witness,
        node_count: out.node_count,
    }
}

pub(crate) struct SearchOutcome {
    pub size: usize,
    pub witness: Bitstring,
    pub node_count: u64,
}

/// Runs the search. With `depth_budget = Some(k)` a subproblem returns 0 as
/// soon as `k` vertices have been committed on its path.
pub(crate) fn branch_and_reduce<O: BranchObserver>(
    g: &Graph,
    depth_budget: Option<usize>,
    reductions: Reductions,
    observer: &mut O,
) -> SearchOutcome {
    let mut search = Search {
        graph: g,
        budget: depth_budget.unwrap_or(usize::MAX),
        reductions,
        node_count: 0,
        observer,
    };
    let mut all = FixedBitSet::with_capacity(g.n());
    all.insert_range(..);
    let (size, chosen) = search.solve(all, 0);
    SearchOutcome {
        size,
        witness: Bitstring::from_bitset(chosen),
        node_count: search.node_count,
    }
}

struct Search<'a, O> {
    graph: &'a Graph,
    budget: usize,
    reductions: Reductions,
    node_count: u64,
    observer: &'a mut O,
}

impl<O: BranchObserver> Search<'_, O> {
    fn degree(&self, v: usize, alive: &FixedBitSet) -> usize {
        self.graph.adjacency()[v].intersection_count(alive)
    }

    /// Recursion depth is bounded by the number of branchings on one path,
    /// which never exceeds `n`.
    fn solve(&mut self, mut alive: FixedBitSet, depth: usize) -> (usize, FixedBitSet) {
        self.node_count += 1;
        let n = self.graph.n();
        let mut chosen = FixedBitSet::with_capacity(n);
        if depth >= self.budget || alive.is_clear() {
            return (0, chosen);
        }
        let adj = self.graph.adjacency();
        let mut size = 0usize;

        // Degree-0 and degree-1 reductions until fixpoint.
        let mut changed = self.reductions.low_degree;
        while changed {
            changed = false;
            for u in 0..n {
                if !alive.contains(u) {
                    continue;
                }
                let deg = self.degree(u, &alive);
                if deg <= 1 {
                    chosen.insert(u);
                    size += 1;
                    alive.set(u, false);
                    if deg == 1 {
                        let nb = adj[u]
                            .intersection(&alive)
                            .next()
                            .expect("degree-1 vertex has a live neighbour");
                        alive.set(nb, false);
                    }
                    changed = true;
                    if depth + size >= self.budget {
                        return (size, chosen);
                    }
                }
            }
        }
        if alive.is_clear() {
            return (size, chosen);
        }

        let comps = if self.reductions.components {
            components(adj, &alive)
        } else {
            Vec::new()
        };
        if comps.len() > 1 {
            for comp in comps {
                let (s, w) = self.solve(comp, depth + size);
                size += s;
                chosen.union_with(&w);
            }
            return (size, chosen);
        }

        let mut pivot = alive.minimum().expect("alive is non-empty");
        let mut best = self.degree(pivot, &alive);
        for v in alive.ones() {
            let d = self.degree(v, &alive);
            if d > best {
                best = d;
                pivot = v;
            }
        }
        self.observer.on_branch(self.graph, &alive, pivot);

        let mut without = alive.clone();
        without.set(pivot, false);
        let mut with = without.clone();
        with.difference_with(&adj[pivot]);

        let (s_in, mut w_in) = self.solve(with, depth + size + 1);
        let (s_out, w_out) = self.solve(without, depth + size);
        if s_in + 1 >= s_out {
            w_in.insert(pivot);
            chosen.union_with(&w_in);
            (size + s_in + 1, chosen)
        } else {
            chosen.union_with(&w_out);
            (size + s_out, chosen)
        }
    }
}

/// Connected components of the subgraph induced by `alive`, ordered by their
/// lowest vertex.
fn components(adj: &[FixedBitSet], alive: &FixedBitSet) -> Vec<FixedBitSet> {
    let mut unseen = alive.clone();
    let mut out = Vec::new();
    while let Some(start) = unseen.minimum() {
        let mut comp = FixedBitSet::with_capacity(alive.len());
        let mut frontier = vec![start];
        unseen.set(start, false);
        comp.insert(start);
        while let Some(v) = frontier.pop() {
            for u in adj[v].intersection(&unseen).collect::<Vec<_>>() {
                unseen.set(u, false);
                comp.insert(u);
                frontier.push(u);
            }
        }
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_lattice, is_independent_set, LatticeFamily, LatticeSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lattice(family: LatticeFamily, r: usize, c: usize) -> Graph {
        build_lattice(&LatticeSpec::full(family, r, c)).unwrap()
    }

    #[test]
    fn brute_force_examples() {
        let r = brute_force_mis(&lattice(LatticeFamily::Square, 3, 3)).unwrap();
        assert_eq!(r.size, 5);
        assert_eq!(r.witness.to_string(), "101010101");
        let r = brute_force_mis(&lattice(LatticeFamily::Kings, 3, 3)).unwrap();
        assert_eq!(r.size, 4);
        assert_eq!(r.witness.to_string(), "101000101");
        let r = brute_force_mis(&Graph::empty(4)).unwrap();
        assert_eq!((r.size, r.witness.to_string()), (4, "1111".to_string()));
    }

    #[test]
    fn brute_force_cap() {
        let g = Graph::empty(25);
        assert!(matches!(brute_force_mis(&g), Err(Error::CapExceeded { .. })));
        assert!(brute_force_mis_capped(&Graph::empty(5), 4).is_err());
    }

    #[test]
    fn brute_force_empty_graph_on_zero_vertices() {
        let r = brute_force_mis(&Graph::empty(0)).unwrap();
        assert_eq!(r.size, 0);
    }

    #[test]
    fn tarjan_examples() {
        let r = tarjan_mis(&lattice(LatticeFamily::Square, 4, 4));
        assert_eq!(r.size, 8);
        let r3 = tarjan_mis(&lattice(LatticeFamily::Square, 3, 3));
        assert_eq!(r3.size, 5);
        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let rp = tarjan_mis(&path);
        assert_eq!(rp.size, 2);
        assert_eq!(rp.node_count, 1);
    }

    #[test]
    fn tarjan_witness_is_valid() {
        for (fam, r, c) in [
            (LatticeFamily::Square, 5, 5),
            (LatticeFamily::Kings, 4, 5),
            (LatticeFamily::Square, 2, 7),
        ] {
            let g = lattice(fam, r, c);
            let res = tarjan_mis(&g);
            assert!(is_independent_set(&g, &res.witness).unwrap());
            assert_eq!(res.witness.weight(), res.size);
            assert!(res.node_count >= 1);
        }
    }

    #[test]
    fn tarjan_on_edgeless_and_empty() {
        let r = tarjan_mis(&Graph::empty(5));
        assert_eq!(r.size, 5);
        let r = tarjan_mis(&Graph::empty(0));
        assert_eq!((r.size, r.node_count), (0, 1));
    }

    #[test]
    fn tarjan_matches_oracle_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(1..=14);
            let density = rng.random_range(0.05..0.6);
            let edges: Vec<_> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|_| rng.random_bool(density))
                .collect();
            let g = Graph::new(n, edges).unwrap();
            let exact = brute_force_mis(&g).unwrap().size;
            for red in [Reductions::ALL, Reductions::COMPONENTS, Reductions::NONE] {
                let r = tarjan_mis_with(&g, red, &mut ());
                assert_eq!(r.size, exact, "{red:?}");
                assert!(is_independent_set(&g, &r.witness).unwrap());
            }
        }
    }

    #[test]
    fn reductions_only_shrink_the_tree() {
        let g = lattice(LatticeFamily::Square, 4, 4);
        let all = tarjan_mis_with(&g, Reductions::ALL, &mut ()).node_count;
        let comps = tarjan_mis_with(&g, Reductions::COMPONENTS, &mut ()).node_count;
        let none = tarjan_mis_with(&g, Reductions::NONE, &mut ()).node_count;
        assert!(all < comps && comps < none, "{all} {comps} {none}");
    }

    #[test]
    fn plain_branching_on_a_path() {
        // P3 without reductions: pivot 1, include -> {}, exclude -> {0, 2}
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let r = tarjan_mis_with(&g, Reductions::NONE, &mut ());
        assert_eq!(r.size, 2);
        assert_eq!(r.witness.to_string(), "101");
    }

    struct MaxDegreeCheck {
        branches: usize,
    }

    impl BranchObserver for MaxDegreeCheck {
        fn on_branch(&mut self, g: &Graph, residual: &FixedBitSet, pivot: usize) {
            self.branches += 1;
            let deg = |v: usize| g.adjacency()[v].intersection_count(residual);
            assert!(residual.contains(pivot));
            for v in residual.ones() {
                assert!(deg(v) <= deg(pivot));
                if deg(v) == deg(pivot) {
                    assert!(v >= pivot, "tie must go to the lowest index");
                }
            }
            assert!(deg(pivot) >= 2, "reductions leave no vertex of degree < 2");
        }
    }

    #[test]
    fn branches_on_max_degree_lowest_index() {
        let mut obs = MaxDegreeCheck { branches: 0 };
        let g = lattice(LatticeFamily::Square, 5, 5);
        tarjan_mis_observed(&g, &mut obs);
        assert!(obs.branches > 0);
        let g = lattice(LatticeFamily::Kings, 4, 4);
        tarjan_mis_observed(&g, &mut obs);
    }

    #[test]
    fn node_count_is_deterministic() {
        let g = lattice(LatticeFamily::Square, 5, 5);
        assert_eq!(tarjan_mis(&g).node_count, tarjan_mis(&g).node_count);
    }
}
