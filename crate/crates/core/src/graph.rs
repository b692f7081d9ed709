//! Problem instances: lattices, filling-fraction embeddings and unit-disk
//! graphs built from atom-register coordinates.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitstring::Bitstring;
use crate::error::{Error, Result};

/// Undirected simple graph on vertices `0..n`.
///
/// Edges are stored once, as `(u, v)` with `u < v`, in sorted order.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    labels: Option<Vec<String>>,
    adj: Vec<FixedBitSet>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges && self.labels == other.labels
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a graph, normalizing edge orientation and rejecting self-loops,
    /// duplicate pairs and out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) has an endpoint >= n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !set.insert(e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.0, e.1
                )));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adj = vec![FixedBitSet::with_capacity(n); n];
        for &(u, v) in &edges {
            adj[u].insert(v);
            adj[v].insert(u);
        }
        Ok(Graph {
            n,
            edges,
            labels: None,
            adj,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidGraph(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.n
            )));
        }
        let distinct: BTreeSet<_> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidGraph("labels are not unique".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn empty(n: usize) -> Self {
        Graph::new(n, std::iter::empty()).expect("edgeless graph is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adj[u].contains(v)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones(..)
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].ones()
    }

    pub(crate) fn adjacency(&self) -> &[FixedBitSet] {
        &self.adj
    }

    /// Subgraph induced by `keep`, relabelled to `0..keep.len()` in the order given.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<Graph> {
        let mut index = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.n {
                return Err(Error::InvalidGraph(format!("vertex {old} out of range")));
            }
            if index[old] != usize::MAX {
                return Err(Error::InvalidGraph(format!("vertex {old} listed twice")));
            }
            index[old] = new;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
            .map(|&(u, v)| (index[u], index[v]));
        Graph::new(keep.len(), edges)
    }
}

/// True iff no edge of `g` has both endpoints set in `x`.
pub fn is_independent_set(g: &Graph, x: &Bitstring) -> Result<bool> {
    if x.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            found: x.len(),
        });
    }
    let bits = x.as_bitset();
    Ok(x.ones().all(|v| g.adj[v].is_disjoint(bits)))
}

// ---------------------------------------------------------------------------
// Lattices
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeFamily {
    /// 4-neighbourhood.
    Square,
    /// 8-neighbourhood (King's graph).
    Kings,
}

impl LatticeFamily {
    fn connects(self, a: (usize, usize), b: (usize, usize)) -> bool {
        let dr = a.0.abs_diff(b.0);
        let dc = a.1.abs_diff(b.1);
        match self {
            LatticeFamily::Square => dr + dc == 1,
            LatticeFamily::Kings => dr.max(dc) == 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LatticeFamily::Square => "square",
            LatticeFamily::Kings => "kings",
        }
    }
}

/// A `rows x cols` cell grid, optionally restricted to a subset of active cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub family: LatticeFamily,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_sites: Option<Vec<(usize, usize)>>,
}

impl LatticeSpec {
    pub fn full(family: LatticeFamily, rows: usize, cols: usize) -> Self {
        LatticeSpec {
            family,
            rows,
            cols,
            active_sites: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidLattice(format!(
                "grid {}x{} must have at least one row and column",
                self.rows, self.cols
            )));
        }
        if let Some(sites) = &self.active_sites {
            if sites.is_empty() {
                return Err(Error::InvalidLattice("active_sites is empty".into()));
            }
            let mut seen = BTreeSet::new();
            for &(r, c) in sites {
                if r >= self.rows || c >= self.cols {
                    return Err(Error::InvalidLattice(format!(
                        "active site ({r}, {c}) outside the {}x{} grid",
                        self.rows, self.cols
                    )));
                }
                if !seen.insert((r, c)) {
                    return Err(Error::InvalidLattice(format!(
                        "active site ({r}, {c}) listed twice"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Active cells in row-major order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        match &self.active_sites {
            Some(sites) => {
                let mut v = sites.clone();
                v.sort_unstable();
                v
            }
            None => (0..self.rows)
                .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
                .collect(),
        }
    }

    pub fn filling_fraction(&self) -> f64 {
        let active = self
            .active_sites
            .as_ref()
            .map_or(self.rows * self.cols, Vec::len);
        active as f64 / (self.rows * self.cols) as f64
    }
}

/// Builds the lattice graph on the active cells, vertices in row-major order.
pub fn build_lattice(spec: &LatticeSpec) -> Result<Graph> {
    spec.validate()?;
    let cells = spec.cells();
    let mut edges = Vec::new();
    for (i, &a) in cells.iter().enumerate() {
        for (j, &b) in cells.iter().enumerate().skip(i + 1) {
            if spec.family.connects(a, b) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(cells.len(), edges)
}

/// Side length of the embedded block used for filling-fraction studies.
pub const EMBED_BLOCK: usize = 4;

/// Places a contiguous `EMBED_BLOCK x EMBED_BLOCK` block of `target.family`
/// inside the `target` grid. `base` must be that block's graph (16 vertices).
///
/// The anchor cell is drawn uniformly from all feasible anchors using
/// `placement_seed`, so the induced subgraph on the returned active cells is
/// always the block itself while the filling fraction drops to
/// `16 / (rows * cols)`.
pub fn embed_filling_fraction(
    base: &Graph,
    target: &LatticeSpec,
    placement_seed: u64,
) -> Result<LatticeSpec> {
    let block = build_lattice(&LatticeSpec::full(target.family, EMBED_BLOCK, EMBED_BLOCK))?;
    if base.n() != EMBED_BLOCK * EMBED_BLOCK || base.edges() != block.edges() {
        return Err(Error::InfeasiblePlacement(format!(
            "base graph must be the {0}x{0} {1} block",
            EMBED_BLOCK,
            target.family.name()
        )));
    }
    if target.rows == 0 || target.cols == 0 {
        return Err(Error::InvalidLattice("target grid is empty".into()));
    }
    if target.rows * target.cols < EMBED_BLOCK * EMBED_BLOCK {
        return Err(Error::InfeasiblePlacement(format!(
            "{}x{} grid has fewer than {} cells",
            target.rows,
            target.cols,
            EMBED_BLOCK * EMBED_BLOCK
        )));
    }
    if target.rows < EMBED_BLOCK || target.cols < EMBED_BLOCK {
        return Err(Error::InfeasiblePlacement(format!(
            "a {0}x{0} block does not fit in a {1}x{2} grid",
            EMBED_BLOCK, target.rows, target.cols
        )));
    }
    let anchor_rows = target.rows - EMBED_BLOCK + 1;
    let anchor_cols = target.cols - EMBED_BLOCK + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(placement_seed);
    let anchor = rng.random_range(0..anchor_rows * anchor_cols);
    let (r0, c0) = (anchor / anchor_cols, anchor % anchor_cols);
    let sites = (0..EMBED_BLOCK)
        .flat_map(|dr| (0..EMBED_BLOCK).map(move |dc| (r0 + dr, c0 + dc)))
        .collect();
    Ok(LatticeSpec {
        family: target.family,
        rows: target.rows,
        cols: target.cols,
        active_sites: Some(sites),
    })
}

// ---------------------------------------------------------------------------
// Registers and unit-disk graphs
// ---------------------------------------------------------------------------

/// Fixed-point scale for coordinates: 10^-9 micrometre resolution.
const COORD_SCALE_DIGITS: u32 = 9;

/// Converts a decimal value to an exact scaled integer via its shortest
/// round-trip representation, so `7.3` is compared as the decimal 7.3 rather
/// than its binary approximation.
fn to_fixed(value: f64) -> Result<i128> {
    if !value.is_finite() {
        return Err(Error::InvalidRegister(format!("non-finite coordinate {value}")));
    }
    let text = format!("{value}");
    let (neg, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let int: i128 = int_part
        .parse()
        .map_err(|_| Error::InvalidRegister(format!("coordinate {value} out of range")))?;
    let scale = 10i128.pow(COORD_SCALE_DIGITS);
    let mut frac: i128 = 0;
    let mut round_up = false;
    for (i, ch) in frac_part.bytes().enumerate() {
        let d = i128::from(ch - b'0');
        if i < COORD_SCALE_DIGITS as usize {
            frac = frac * 10 + d;
        } else {
            round_up = i == COORD_SCALE_DIGITS as usize && d >= 5;
            break;
        }
    }
    let shown = frac_part.len().min(COORD_SCALE_DIGITS as usize) as u32;
    frac *= 10i128.pow(COORD_SCALE_DIGITS - shown);
    let mut v = int
        .checked_mul(scale)
        .and_then(|x| x.checked_add(frac + i128::from(round_up)))
        .ok_or_else(|| Error::InvalidRegister(format!("coordinate {value} out of range")))?;
    if neg {
        v = -v;
    }
    Ok(v)
}

/// Atom positions in micrometres plus the blockade radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Register {
    #[serde(rename = "positions_um")]
    pub positions: Vec<[f64; 2]>,
    #[serde(rename = "blockade_radius_um")]
    pub blockade_radius: f64,
}

impl Register {
    pub fn new(positions: Vec<[f64; 2]>, blockade_radius: f64) -> Result<Self> {
        let reg = Register {
            positions,
            blockade_radius,
        };
        reg.validate()?;
        Ok(reg)
    }

    /// Square grid of `rows x cols` atoms at the given spacing, row-major.
    pub fn square_grid(rows: usize, cols: usize, spacing: f64, blockade_radius: f64) -> Result<Self> {
        let positions = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| [c as f64 * spacing, r as f64 * spacing]))
            .collect();
        Register::new(positions, blockade_radius)
    }

    pub fn validate(&self) -> Result<()> {
        self.fixed().map(|_| ())
    }

    fn fixed(&self) -> Result<(Vec<(i128, i128)>, i128)> {
        if !(self.blockade_radius.is_finite() && self.blockade_radius > 0.0) {
            return Err(Error::InvalidRegister(format!(
                "blockade radius must be positive, got {}",
                self.blockade_radius
            )));
        }
        let radius = to_fixed(self.blockade_radius)?;
        let mut pts = Vec::with_capacity(self.positions.len());
        let mut seen = BTreeSet::new();
        for (i, &[x, y]) in self.positions.iter().enumerate() {
            let p = (to_fixed(x)?, to_fixed(y)?);
            if !seen.insert(p) {
                return Err(Error::InvalidRegister(format!(
                    "position {i} ({x}, {y}) duplicates an earlier atom"
                )));
            }
            pts.push(p);
        }
        Ok((pts, radius))
    }
}

/// Unit-disk graph: atoms `u`, `v` are adjacent iff their distance is at most
/// the blockade radius. Distances are compared as exact squared integers.
pub fn unit_disk_graph(reg: &Register) -> Result<Graph> {
    let (pts, radius) = reg.fixed()?;
    let r2 = radius * radius;
    let mut edges = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let dx = pts[i].0 - pts[j].0;
            let dy = pts[i].1 - pts[j].1;
            if dx * dx + dy * dy <= r2 {
                edges.push((i, j));
            }
        }
    }
    Graph::new(pts.len(), edges)
}

// ---------------------------------------------------------------------------
// Graph document
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    n: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

pub fn serialize_graph(g: &Graph) -> String {
    let doc = GraphDoc {
        n: g.n,
        edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
        labels: g.labels.clone(),
    };
    serde_json::to_string(&doc).expect("graph document serializes")
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let doc: GraphDoc = serde_json::from_str(text)?;
    let g = Graph::new(doc.n, doc.edges.into_iter().map(|[u, v]| (u, v)))?;
    match doc.labels {
        Some(labels) => g.with_labels(labels),
        None => Ok(g),
    }
}

pub fn parse_register(text: &str) -> Result<Register> {
    let reg: Register = serde_json::from_str(text)?;
    reg.validate()?;
    Ok(reg)
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphDoc {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
            labels: self.labels.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = GraphDoc::deserialize(d)?;
        let g = Graph::new(doc.n, doc.edges.into_iter().map(|[u, v]| (u, v)))
            .map_err(serde::de::Error::custom)?;
        match doc.labels {
            Some(l) => g.with_labels(l).map_err(serde::de::Error::custom),
            None => Ok(g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(l: usize) -> Graph {
        build_lattice(&LatticeSpec::full(LatticeFamily::Square, l, l)).unwrap()
    }

    fn kings(l: usize) -> Graph {
        build_lattice(&LatticeSpec::full(LatticeFamily::Kings, l, l)).unwrap()
    }

    /// Pair enumeration on explicit coordinates, independent of `connects`.
    fn brute_lattice_edges(l: usize, diag: bool) -> usize {
        let mut count = 0;
        for a in 0..l * l {
            for b in a + 1..l * l {
                let (ra, ca) = ((a / l) as i64, (a % l) as i64);
                let (rb, cb) = ((b / l) as i64, (b % l) as i64);
                let d2 = (ra - rb).pow(2) + (ca - cb).pow(2);
                if d2 == 1 || (diag && d2 == 2) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn small_lattice_counts() {
        let g = square(3);
        assert_eq!((g.n(), g.edge_count()), (9, 12));
        let g = kings(3);
        assert_eq!((g.n(), g.edge_count()), (9, 20));
    }

    #[test]
    fn lattice_edge_formulas() {
        for l in 1..=6 {
            assert_eq!(square(l).edge_count(), 2 * l * (l - 1));
            assert_eq!(square(l).edge_count(), brute_lattice_edges(l, false));
            assert_eq!(kings(l).edge_count(), 4 * l * l + 2 - 6 * l);
            assert_eq!(kings(l).edge_count(), brute_lattice_edges(l, true));
        }
    }

    #[test]
    fn full_active_set_is_identity() {
        let sites = (0..4).flat_map(|r| (0..4).map(move |c| (r, c))).collect();
        let spec = LatticeSpec {
            family: LatticeFamily::Square,
            rows: 4,
            cols: 4,
            active_sites: Some(sites),
        };
        assert_eq!(build_lattice(&spec).unwrap(), square(4));
        assert_eq!(spec.filling_fraction(), 1.0);
    }

    #[test]
    fn lattice_validation() {
        let mut spec = LatticeSpec::full(LatticeFamily::Square, 3, 3);
        spec.active_sites = Some(vec![]);
        assert!(build_lattice(&spec).is_err());
        spec.active_sites = Some(vec![(0, 0), (0, 0)]);
        assert!(build_lattice(&spec).is_err());
        spec.active_sites = Some(vec![(3, 0)]);
        assert!(build_lattice(&spec).is_err());
        assert!(build_lattice(&LatticeSpec::full(LatticeFamily::Kings, 0, 3)).is_err());
    }

    #[test]
    fn register_grid_matches_square_lattice() {
        let reg = Register::square_grid(3, 3, 5.4, 7.2).unwrap();
        assert_eq!(unit_disk_graph(&reg).unwrap(), square(3));
    }

    #[test]
    fn unit_disk_matches_lattices_by_radius() {
        let a = 5.4;
        for l in 1..=6 {
            let near = Register::square_grid(l, l, a, 1.2 * a).unwrap();
            assert_eq!(unit_disk_graph(&near).unwrap(), square(l));
            let far = Register::square_grid(l, l, a, 1.6 * a).unwrap();
            assert_eq!(unit_disk_graph(&far).unwrap(), kings(l));
        }
    }

    #[test]
    fn boundary_distance_is_inclusive() {
        let reg = Register::new(vec![[0.1, 0.0], [7.3, 0.0]], 7.2).unwrap();
        assert_eq!(unit_disk_graph(&reg).unwrap().edge_count(), 1);
        let reg = Register::new(vec![[0.0, 0.0], [7.2000001, 0.0]], 7.2).unwrap();
        assert_eq!(unit_disk_graph(&reg).unwrap().edge_count(), 0);
    }

    #[test]
    fn single_atom() {
        let reg = Register::new(vec![[1.0, 2.0]], 7.2).unwrap();
        let g = unit_disk_graph(&reg).unwrap();
        assert_eq!((g.n(), g.edge_count()), (1, 0));
    }

    #[test]
    fn register_rejects_duplicates_and_bad_radius() {
        assert!(Register::new(vec![[1.0, 2.0], [1.0, 2.0]], 7.2).is_err());
        assert!(Register::new(vec![[1.0, 2.0]], 0.0).is_err());
        assert!(Register::new(vec![[1.0, 2.0]], -1.0).is_err());
    }

    #[test]
    fn fixed_point_conversion() {
        assert_eq!(to_fixed(7.2).unwrap(), 7_200_000_000);
        assert_eq!(to_fixed(-0.5).unwrap(), -500_000_000);
        assert_eq!(to_fixed(3.0).unwrap(), 3_000_000_000);
    }

    #[test]
    fn independence_examples() {
        let g = square(3);
        let ok: Bitstring = "101010101".parse().unwrap();
        let bad: Bitstring = "101001101".parse().unwrap();
        assert!(is_independent_set(&g, &ok).unwrap());
        assert!(!is_independent_set(&g, &bad).unwrap());
        assert!(is_independent_set(&g, &Bitstring::zeros(9)).unwrap());
        assert!(is_independent_set(&g, &Bitstring::zeros(8)).is_err());
    }

    #[test]
    fn independence_matches_pair_loop_exhaustively() {
        for spec in [
            LatticeSpec::full(LatticeFamily::Square, 3, 4),
            LatticeSpec::full(LatticeFamily::Kings, 3, 4),
        ] {
            let g = build_lattice(&spec).unwrap();
            for mask in 0u32..(1 << g.n()) {
                let x = Bitstring::from_indices(g.n(), (0..g.n()).filter(|i| mask >> i & 1 == 1))
                    .unwrap();
                let mut expect = true;
                for u in 0..g.n() {
                    for v in u + 1..g.n() {
                        if x.get(u) && x.get(v) && g.adjacent(u, v) {
                            expect = false;
                        }
                    }
                }
                assert_eq!(is_independent_set(&g, &x).unwrap(), expect);
            }
        }
    }

    #[test]
    fn adjacency_symmetric() {
        let g = kings(4);
        for u in 0..g.n() {
            for v in 0..g.n() {
                assert_eq!(g.adjacent(u, v), g.adjacent(v, u));
            }
        }
    }

    #[test]
    fn graph_rejects_bad_edges() {
        assert!(Graph::new(3, [(0, 0)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
    }

    #[test]
    fn embedding_filling_fractions() {
        let base = square(4);
        let target = LatticeSpec::full(LatticeFamily::Square, 4, 4);
        let e = embed_filling_fraction(&base, &target, 7).unwrap();
        assert_eq!(e.filling_fraction(), 1.0);
        for seed in 0..20 {
            let t = LatticeSpec::full(LatticeFamily::Square, 8, 8);
            let e = embed_filling_fraction(&base, &t, seed).unwrap();
            assert_eq!(e.filling_fraction(), 0.25);
        }
        let t = LatticeSpec::full(LatticeFamily::Square, 6, 6);
        let e = embed_filling_fraction(&base, &t, 0).unwrap();
        assert!((e.filling_fraction() - 16.0 / 36.0).abs() < 1e-15);
        // the induced graph on the active cells reproduces the base block
        assert_eq!(build_lattice(&e).unwrap(), base);
    }

    #[test]
    fn embedding_kings_preserves_block() {
        let base = kings(4);
        let t = LatticeSpec::full(LatticeFamily::Kings, 6, 6);
        for seed in 0..10 {
            let e = embed_filling_fraction(&base, &t, seed).unwrap();
            assert_eq!(build_lattice(&e).unwrap(), base);
        }
    }

    #[test]
    fn embedding_is_seed_deterministic() {
        let base = square(4);
        let t = LatticeSpec::full(LatticeFamily::Square, 8, 8);
        assert_eq!(
            embed_filling_fraction(&base, &t, 3).unwrap(),
            embed_filling_fraction(&base, &t, 3).unwrap()
        );
    }

    #[test]
    fn embedding_errors() {
        let base = square(4);
        let t = LatticeSpec::full(LatticeFamily::Square, 3, 5);
        assert!(embed_filling_fraction(&base, &t, 0).is_err());
        let t = LatticeSpec::full(LatticeFamily::Square, 2, 8);
        assert!(matches!(
            embed_filling_fraction(&base, &t, 0),
            Err(Error::InfeasiblePlacement(_))
        ));
        let t = LatticeSpec::full(LatticeFamily::Kings, 6, 6);
        assert!(embed_filling_fraction(&base, &t, 0).is_err());
    }

    #[test]
    fn document_round_trip() {
        let g = square(3);
        assert_eq!(parse_graph(&serialize_graph(&g)).unwrap(), g);
        let labelled = Graph::new(2, [(0, 1)])
            .unwrap()
            .with_labels(vec!["a".into(), "b".into()])
            .unwrap();
        assert_eq!(parse_graph(&serialize_graph(&labelled)).unwrap(), labelled);
    }

    #[test]
    fn document_errors() {
        assert!(parse_graph(r#"{"n": 2, "edges": [[0, 2]]}"#).is_err());
        let err = parse_graph("{\"n\": 2,\n \"edges\": [[0, 1]").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let g = parse_graph(r#"{"n": 1, "edges": []}"#).unwrap();
        assert_eq!((g.n(), g.edge_count()), (1, 0));
    }

    #[test]
    fn register_document() {
        let reg = parse_register(r#"{"positions_um": [[0,0],[5.4,0]], "blockade_radius_um": 7.2}"#)
            .unwrap();
        assert_eq!(unit_disk_graph(&reg).unwrap().edge_count(), 1);
        assert!(parse_register(r#"{"positions_um": [[0,0],[0,0]], "blockade_radius_um": 7.2}"#)
            .is_err());
    }
}
