//! Local interaction functionals and their efficient evaluation.
//!
//! A functional of order `k` with locality fraction `delta` vanishes on any
//! k-subset of diameter greater than `delta * r`, is bounded, permutation
//! symmetric, and translation/scale invariant. The built-in family are
//! indicator functionals: the pair indicator (distance at most `delta * r`)
//! and subgraph counts of the geometric graph with connection radius
//! `r * delta / k` (so that connected patterns respect the diameter bound).
//!
//! `evaluate_f` sums the functional over all k-subsets of a configuration.
//! Locality makes a cell-list evaluation exact: only subsets of diameter at
//! most `delta * r` can contribute, and those are enumerated through a
//! periodic grid with cell width at least the interaction radius.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::torus::{wrap_coord, TorusPoint};

/// A k-vertex pattern graph given by its adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricPattern {
    k: usize,
    adjacency: Vec<Vec<bool>>,
}

impl GeometricPattern {
    pub fn new(adjacency: Vec<Vec<bool>>) -> Result<Self> {
        let k = adjacency.len();
        if k < 2 {
            return Err(Error::invalid("pattern", "needs at least 2 vertices"));
        }
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != k {
                return Err(Error::invalid("pattern", "adjacency must be square"));
            }
            if row[i] {
                return Err(Error::invalid("pattern", "diagonal must be zero"));
            }
            for j in 0..k {
                if adjacency[i][j] != adjacency[j][i] {
                    return Err(Error::invalid("pattern", "adjacency must be symmetric"));
                }
            }
        }
        Ok(GeometricPattern { k, adjacency })
    }

    pub fn from_edges(k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![vec![false; k]; k];
        for &(a, b) in edges {
            if a >= k || b >= k || a == b {
                return Err(Error::invalid("pattern", format!("bad edge ({a},{b})")));
            }
            adj[a][b] = true;
            adj[b][a] = true;
        }
        Self::new(adj)
    }

    /// Single edge on two vertices.
    pub fn edge() -> Self {
        Self::from_edges(2, &[(0, 1)]).unwrap()
    }

    /// Complete graph (clique) on `k` vertices.
    pub fn clique(k: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                edges.push((i, j));
            }
        }
        Self::from_edges(k, &edges)
    }

    /// Path graph on `k` vertices.
    pub fn path(k: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..k.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Self::from_edges(k, &edges)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }

    /// Randomized feasibility search: does some configuration of k iid
    /// uniform points in the unit-radius graph realize the pattern?
    pub fn is_feasible(&self, d: usize, trials: usize, rng: &mut impl Rng) -> bool {
        // search at connection radius delta/k with points in a ball of
        // radius delta/2, mirroring how the subgraph functional is scaled;
        // absolute scale is irrelevant for feasibility
        let delta = 0.4;
        let radius = delta / self.k as f64;
        let mut coords = vec![0.0; self.k * d];
        for _ in 0..trials {
            for c in coords.iter_mut() {
                *c = rng.gen_range(-delta / 2.0..delta / 2.0);
            }
            let adj = geometric_adjacency(&coords, d, radius);
            if graph_isomorphic_adj(&adj, &self.adjacency).unwrap_or(false) {
                return true;
            }
        }
        false
    }
}

/// Adjacency of the Euclidean geometric graph on a flat coordinate tuple.
fn geometric_adjacency(coords: &[f64], d: usize, radius: f64) -> Vec<Vec<bool>> {
    let k = coords.len() / d;
    let mut adj = vec![vec![false; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            if euclid(&coords[i * d..(i + 1) * d], &coords[j * d..(j + 1) * d]) <= radius {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    adj
}

#[inline]
fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Brute-force graph isomorphism with a degree-sequence prefilter;
/// supports up to 8 vertices.
pub fn graph_isomorphic(a: &GeometricPattern, b: &GeometricPattern) -> Result<bool> {
    graph_isomorphic_adj(a.adjacency(), b.adjacency())
}

pub fn graph_isomorphic_adj(a: &[Vec<bool>], b: &[Vec<bool>]) -> Result<bool> {
    let k = a.len();
    if k != b.len() {
        return Ok(false);
    }
    if k > 8 {
        return Err(Error::Unsupported(format!(
            "isomorphism check limited to k <= 8, got {k}"
        )));
    }
    let degs = |m: &[Vec<bool>]| {
        let mut dsum: Vec<usize> = m.iter().map(|r| r.iter().filter(|&&x| x).count()).collect();
        dsum.sort_unstable();
        dsum
    };
    if degs(a) != degs(b) {
        return Ok(false);
    }
    // backtracking vertex map a -> b with incremental consistency checks
    fn assign(a: &[Vec<bool>], b: &[Vec<bool>], map: &mut Vec<usize>, used: &mut Vec<bool>) -> bool {
        let i = map.len();
        if i == a.len() {
            return true;
        }
        for cand in 0..b.len() {
            if used[cand] {
                continue;
            }
            let ok = (0..i).all(|j| a[i][j] == b[cand][map[j]]);
            if ok {
                map.push(cand);
                used[cand] = true;
                if assign(a, b, map, used) {
                    return true;
                }
                used[cand] = false;
                map.pop();
            }
        }
        false
    }
    Ok(assign(a, b, &mut Vec::new(), &mut vec![false; k]))
}

type UnitRule = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    PairIndicator,
    SubgraphCount(GeometricPattern),
    Custom(UnitRule),
}

/// An interaction functional `xi_r` of order `k` with locality fraction
/// `delta`, defined through its unit-scale rule and extended to all
/// `0 < r <= 1` by scale invariance.
#[derive(Clone)]
pub struct InteractionFunctional {
    k: usize,
    delta: f64,
    sup: f64,
    kind: Kind,
}

impl std::fmt::Debug for InteractionFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.kind {
            Kind::PairIndicator => "pair-indicator".to_string(),
            Kind::SubgraphCount(p) => format!("subgraph-count(k={})", p.k()),
            Kind::Custom(_) => "custom".to_string(),
        };
        write!(f, "InteractionFunctional[{kind}, k={}, delta={}]", self.k, self.delta)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::invalid("delta", format!("{delta} not in (0, 1/2)")));
    }
    Ok(())
}

impl InteractionFunctional {
    /// Pair indicator: `1` iff the two points are within `delta * r`.
    pub fn pair_indicator(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(InteractionFunctional {
            k: 2,
            delta,
            sup: 1.0,
            kind: Kind::PairIndicator,
        })
    }

    /// Indicator that the geometric graph with connection radius
    /// `r * delta / k` is isomorphic to `pattern`. Warns (but does not fail)
    /// if a randomized search finds no realization of the pattern.
    pub fn subgraph_count(pattern: GeometricPattern, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let k = pattern.k();
        if k > 8 {
            return Err(Error::Unsupported("subgraph patterns limited to k <= 8".into()));
        }
        let mut rng = crate::rng::stream_rng(0x5eed, 17);
        if !pattern.is_feasible(2, 20_000, &mut rng) {
            eprintln!(
                "warning: no realization of the {k}-vertex pattern found by randomized search; \
                 the functional may be identically zero"
            );
        }
        Ok(InteractionFunctional {
            k,
            delta,
            sup: 1.0,
            kind: Kind::SubgraphCount(pattern),
        })
    }

    /// User-supplied unit-scale rule `xi_1(anchored k-tuple)`. The rule is
    /// property-checked on random inputs for locality, boundedness and
    /// permutation symmetry at registration.
    pub fn custom(
        k: usize,
        delta: f64,
        sup: f64,
        rule: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_delta(delta)?;
        if k < 2 {
            return Err(Error::invalid("k", "must be >= 2"));
        }
        if !(sup.is_finite() && sup > 0.0) {
            return Err(Error::invalid("sup", "must be positive and finite"));
        }
        let fnl = InteractionFunctional {
            k,
            delta,
            sup,
            kind: Kind::Custom(Arc::new(rule)),
        };
        fnl.check_assumptions()?;
        Ok(fnl)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Uniform bound on the functional.
    pub fn sup_bound(&self) -> f64 {
        self.sup
    }

    /// Evaluate `xi_1` on a flat k-tuple of unwrapped coordinates (any
    /// anchoring; translation invariant by construction).
    pub fn evaluate_unit(&self, coords: &[f64], d: usize) -> f64 {
        debug_assert_eq!(coords.len(), self.k * d);
        match &self.kind {
            Kind::PairIndicator => {
                if euclid(&coords[0..d], &coords[d..2 * d]) <= self.delta {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::SubgraphCount(pattern) => {
                // diameter cutoff first: Localization holds by construction
                let k = self.k;
                let mut diam = 0.0f64;
                for i in 0..k {
                    for j in (i + 1)..k {
                        diam = diam.max(euclid(&coords[i * d..(i + 1) * d], &coords[j * d..(j + 1) * d]));
                    }
                }
                if diam > self.delta {
                    return 0.0;
                }
                let adj = geometric_adjacency(coords, d, self.delta / k as f64);
                if graph_isomorphic_adj(&adj, pattern.adjacency()).unwrap_or(false) {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Custom(rule) => rule(coords, d),
        }
    }

    /// Evaluate `xi_r` on unwrapped coordinates via scale invariance.
    pub fn evaluate_scaled(&self, coords: &[f64], d: usize, r: f64) -> f64 {
        if r == 1.0 {
            return self.evaluate_unit(coords, d);
        }
        let scaled: Vec<f64> = coords.iter().map(|c| c / r).collect();
        self.evaluate_unit(&scaled, d)
    }

    /// Property-check Localization, Boundedness and symmetry on random
    /// inputs (used at registration of custom rules).
    pub fn check_assumptions(&self) -> Result<()> {
        let mut rng = crate::rng::stream_rng(0x5eed, 29);
        let d = 2;
        let k = self.k;
        for trial in 0..2000 {
            let spread = if trial % 2 == 0 { self.delta } else { 0.6 };
            let mut coords = vec![0.0; k * d];
            for c in coords.iter_mut() {
                *c = rng.gen_range(-spread..spread);
            }
            let v = self.evaluate_unit(&coords, d);
            if !(v.is_finite() && v >= 0.0 && v <= self.sup + 1e-12) {
                return Err(Error::invalid(
                    "functional",
                    format!("value {v} outside [0, {}]", self.sup),
                ));
            }
            let diam = (0..k)
                .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
                .map(|(i, j)| euclid(&coords[i * d..(i + 1) * d], &coords[j * d..(j + 1) * d]))
                .fold(0.0f64, f64::max);
            if diam > self.delta && v != 0.0 {
                return Err(Error::invalid(
                    "functional",
                    format!("nonzero value {v} at diameter {diam} > delta {}", self.delta),
                ));
            }
            // swap two arguments: set functions are permutation symmetric
            let mut swapped = coords.clone();
            let (a, b) = (trial % k, (trial + 1) % k);
            for t in 0..d {
                swapped.swap(a * d + t, b * d + t);
            }
            let vs = self.evaluate_unit(&swapped, d);
            if (v - vs).abs() > 1e-9 * self.sup {
                return Err(Error::invalid("functional", "not permutation symmetric"));
            }
        }
        Ok(())
    }
}

/// Periodic cell list over the torus with cell width at least `radius`.
///
/// Buckets are kept in an open-addressing table keyed by the packed cell
/// index; buffers are reused across rebuilds.
pub struct SpatialGrid {
    d: usize,
    m: i64,
    mask: usize,
    keys: Vec<u64>,
    heads: Vec<u32>,
    next: Vec<u32>,
    offsets: Vec<Vec<i64>>,
}

const EMPTY_KEY: u64 = u64::MAX;
const NO_ENTRY: u32 = u32::MAX;

impl SpatialGrid {
    pub fn new(d: usize) -> Self {
        let mut offsets = vec![Vec::new()];
        for _ in 0..d {
            let mut grown = Vec::new();
            for base in &offsets {
                for off in -1..=1i64 {
                    let mut v = base.clone();
                    v.push(off);
                    grown.push(v);
                }
            }
            offsets = grown;
        }
        SpatialGrid {
            d,
            m: 1,
            mask: 0,
            keys: Vec::new(),
            heads: Vec::new(),
            next: Vec::new(),
            offsets,
        }
    }

    /// Cells per axis for a given interaction radius.
    fn cells_per_axis(radius: f64) -> i64 {
        ((1.0 / radius).floor() as i64).max(1)
    }

    /// Whether the grid path applies; with fewer than 4 cells per axis the
    /// 3^d neighborhood wraps onto itself and we fall back to brute force.
    pub fn usable(radius: f64) -> bool {
        radius > 0.0 && Self::cells_per_axis(radius) >= 4
    }

    #[inline]
    fn cell_of(&self, coords: &[f64]) -> u64 {
        let mut key = 0u64;
        for &c in coords {
            let ix = (((c + 0.5) * self.m as f64) as i64).clamp(0, self.m - 1);
            key = key * self.m as u64 + ix as u64;
        }
        key
    }

    #[inline]
    fn slot_of(&self, key: u64) -> Option<usize> {
        let mut s = (crate::rng::splitmix64(key) as usize) & self.mask;
        loop {
            let k = self.keys[s];
            if k == key {
                return Some(s);
            }
            if k == EMPTY_KEY {
                return None;
            }
            s = (s + 1) & self.mask;
        }
    }

    /// Rebuild the table for `n_points` flat coordinates.
    pub fn rebuild(&mut self, coords: &[f64], radius: f64) {
        let d = self.d;
        let n = coords.len() / d;
        self.m = Self::cells_per_axis(radius);
        debug_assert!(self.m >= 4, "grid unusable at this radius");
        let cap = (2 * n.max(4)).next_power_of_two();
        if self.keys.len() != cap {
            self.keys = vec![EMPTY_KEY; cap];
            self.heads = vec![NO_ENTRY; cap];
            self.mask = cap - 1;
        } else {
            self.keys.fill(EMPTY_KEY);
            self.heads.fill(NO_ENTRY);
        }
        self.next.clear();
        self.next.resize(n, NO_ENTRY);
        for i in 0..n {
            let key = self.cell_of(&coords[i * d..(i + 1) * d]);
            let mut s = (crate::rng::splitmix64(key) as usize) & self.mask;
            loop {
                if self.keys[s] == key {
                    break;
                }
                if self.keys[s] == EMPTY_KEY {
                    self.keys[s] = key;
                    break;
                }
                s = (s + 1) & self.mask;
            }
            self.next[i] = self.heads[s];
            self.heads[s] = i as u32;
        }
    }

    /// Call `visit` with every point index in the 3^d cell neighborhood of
    /// the given location.
    #[inline]
    pub fn for_each_neighbor(&self, coords: &[f64], mut visit: impl FnMut(usize)) {
        let d = self.d;
        let m = self.m;
        let mut base = [0i64; 8];
        for (t, &c) in coords.iter().enumerate().take(d) {
            base[t] = (((c + 0.5) * m as f64) as i64).clamp(0, m - 1);
        }
        for off in &self.offsets {
            let mut key = 0u64;
            for t in 0..d {
                let ix = (base[t] + off[t] + m) % m;
                key = key * m as u64 + ix as u64;
            }
            if let Some(s) = self.slot_of(key) {
                let mut e = self.heads[s];
                while e != NO_ENTRY {
                    visit(e as usize);
                    e = self.next[e as usize];
                }
            }
        }
    }
}

#[inline]
fn torus_dist(a: &[f64], b: &[f64]) -> f64 {
    crate::torus::distance_coords(a, b)
}

/// Enumerate every k-subset of diameter at most `radius` exactly once,
/// invoking `f` with the member indices (anchor first, ascending).
pub fn for_each_local_ktuple(
    coords: &[f64],
    d: usize,
    k: usize,
    radius: f64,
    mut f: impl FnMut(&[usize]),
) -> Result<()> {
    if !(radius > 0.0 && radius < 0.5) {
        return Err(Error::invalid("radius", format!("{radius} not in (0, 1/2)")));
    }
    let n = coords.len() / d;
    if n < k {
        return Ok(());
    }
    if !SpatialGrid::usable(radius) {
        return for_each_local_ktuple_brute(coords, d, k, radius, f);
    }
    if k == 2 && for_each_close_pair_sorted(coords, d, radius, &mut f) {
        return Ok(());
    }
    let mut grid = SpatialGrid::new(d);
    grid.rebuild(coords, radius);
    enumerate_with_grid(&grid, coords, d, k, radius, &mut f);
    Ok(())
}

/// Pair enumeration by sorted cell keys: pack each point's cell into an
/// integer, sort, then find co-cell and neighbor-cell pairs by linear merges
/// against the 13 positive offset deltas. Pairs that cross the torus seam
/// sit in boundary cells on the wrapped axis, so they are recovered by a
/// brute pass over boundary points, deduplicated against the merge phase by
/// key difference. Returns false (declining the call) when the boundary
/// layer is so thick that the cell-table walk is cheaper.
fn for_each_close_pair_sorted(
    coords: &[f64],
    d: usize,
    radius: f64,
    f: &mut impl FnMut(&[usize]),
) -> bool {
    // key and index share one u64 so the sort moves plain integers
    const IDX_BITS: u32 = 20;
    const IDX_MASK: u64 = (1 << IDX_BITS) - 1;
    let m = SpatialGrid::cells_per_axis(radius);
    let n = coords.len() / d;
    if m < 8 || n < 2 || n >= (1 << IDX_BITS) || (m as f64).powi(d as i32) > (1u64 << 43) as f64 {
        return false;
    }
    let mut stride = vec![1u64; d];
    for t in (0..d.saturating_sub(1)).rev() {
        stride[t] = stride[t + 1] * m as u64;
    }
    // packed key per point, sorted copy, and the seam-adjacent subset
    let mut key_of = vec![0u64; n];
    let mut boundary: Vec<u32> = Vec::new();
    let mut cells: Vec<u64> = Vec::with_capacity(n);
    for i in 0..n {
        let p = &coords[i * d..(i + 1) * d];
        let mut key = 0u64;
        let mut on_seam = false;
        for (t, &c) in p.iter().enumerate() {
            let ix = (((c + 0.5) * m as f64) as i64).clamp(0, m - 1);
            on_seam |= ix == 0 || ix == m - 1;
            key += stride[t] * ix as u64;
        }
        key_of[i] = key;
        cells.push(key << IDX_BITS | i as u64);
        if on_seam {
            boundary.push(i as u32);
        }
    }
    if boundary.len() * boundary.len() > 64 * n * 3usize.pow(d as u32) {
        return false;
    }
    cells.sort_unstable();
    let mut runs: Vec<(u32, u32)> = Vec::new();
    let mut run_keys: Vec<u64> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || cells[i] >> IDX_BITS != cells[start] >> IDX_BITS {
            runs.push((start as u32, i as u32));
            run_keys.push(cells[start] >> IDX_BITS);
            start = i;
        }
    }
    let mut emit = |i: u64, j: u64| {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let (a, b) = (a as usize, b as usize);
        if torus_dist(&coords[a * d..(a + 1) * d], &coords[b * d..(b + 1) * d]) <= radius {
            f(&[a, b]);
        }
    };
    // co-cell pairs
    for &(s, e) in &runs {
        for a in s..e {
            for b in a + 1..e {
                emit(cells[a as usize] & IDX_MASK, cells[b as usize] & IDX_MASK);
            }
        }
    }
    // Neighbor cells. A positive key gap corresponds to a lexicographically
    // positive cell offset with digits in {-1, 0, 1} exactly when its
    // balanced base-m expansion has leading digit +1 on some axis t and the
    // remainder reduces to zero; the possible gaps for axis t lie in the
    // disjoint window stride[t] +- band[t], with band the suffix stride sum.
    let mut band = vec![0u64; d];
    for t in (0..d.saturating_sub(1)).rev() {
        band[t] = band[t + 1] + stride[t + 1];
    }
    let digits_ok = |gap_minus_lead: i64, t: usize| -> bool {
        let mut h = gap_minus_lead;
        for u in t + 1..d {
            let b = band[u] as i64;
            if h > b {
                h -= stride[u] as i64;
            } else if h < -b {
                h += stride[u] as i64;
            }
            if h.abs() > b {
                return false;
            }
        }
        h == 0
    };
    let gap_is_neighbor = |gap: u64| -> bool {
        for t in 0..d {
            if gap + band[t] >= stride[t] && gap <= stride[t] + band[t] {
                return digits_ok(gap as i64 - stride[t] as i64, t);
            }
        }
        false
    };
    for t in 0..d {
        let lo = stride[t] - band[t];
        let hi = stride[t] + band[t];
        let mut b0 = 0usize;
        for a in 0..runs.len() {
            let ka = run_keys[a];
            while b0 < runs.len() && run_keys[b0] < ka + lo {
                b0 += 1;
            }
            let mut b = b0;
            while b < runs.len() && run_keys[b] <= ka + hi {
                if digits_ok((run_keys[b] - ka) as i64 - stride[t] as i64, t) {
                    for x in runs[a].0..runs[a].1 {
                        for y in runs[b].0..runs[b].1 {
                            emit(cells[x as usize] & IDX_MASK, cells[y as usize] & IDX_MASK);
                        }
                    }
                }
                b += 1;
            }
        }
    }
    // seam-crossing pairs; skip key gaps already covered above
    for ai in 0..boundary.len() {
        for bi in ai + 1..boundary.len() {
            let (i, j) = (boundary[ai] as u64, boundary[bi] as u64);
            let dk = key_of[i as usize].abs_diff(key_of[j as usize]);
            if dk == 0 || gap_is_neighbor(dk) {
                continue;
            }
            emit(i, j);
        }
    }
    true
}

/// Grid-based enumeration with an already-built table (hot path: the table
/// can be reused across snapshots).
pub fn enumerate_with_grid(
    grid: &SpatialGrid,
    coords: &[f64],
    d: usize,
    k: usize,
    radius: f64,
    f: &mut impl FnMut(&[usize]),
) {
    let n = coords.len() / d;
    let mut cands: Vec<usize> = Vec::new();
    let mut subset: Vec<usize> = Vec::with_capacity(k);
    for i in 0..n {
        let pi = &coords[i * d..(i + 1) * d];
        cands.clear();
        grid.for_each_neighbor(pi, |j| {
            // anchor at the minimal index of the subset
            if j > i && torus_dist(pi, &coords[j * d..(j + 1) * d]) <= radius {
                cands.push(j);
            }
        });
        if cands.len() + 1 < k {
            continue;
        }
        cands.sort_unstable();
        if k == 2 {
            for &j in &cands {
                f(&[i, j]);
            }
            continue;
        }
        subset.clear();
        subset.push(i);
        extend_subsets(coords, d, k, radius, &cands, 0, &mut subset, f);
    }
}

fn extend_subsets(
    coords: &[f64],
    d: usize,
    k: usize,
    radius: f64,
    cands: &[usize],
    from: usize,
    subset: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if subset.len() == k {
        f(subset);
        return;
    }
    let need = k - subset.len();
    for ci in from..cands.len() {
        if cands.len() - ci < need {
            break;
        }
        let j = cands[ci];
        let pj = &coords[j * d..(j + 1) * d];
        // pairwise check against current members keeps the diameter bound
        if subset
            .iter()
            .skip(1)
            .all(|&s| torus_dist(pj, &coords[s * d..(s + 1) * d]) <= radius)
        {
            subset.push(j);
            extend_subsets(coords, d, k, radius, cands, ci + 1, subset, f);
            subset.pop();
        }
    }
}

fn for_each_local_ktuple_brute(
    coords: &[f64],
    d: usize,
    k: usize,
    radius: f64,
    mut f: impl FnMut(&[usize]),
) -> Result<()> {
    let n = coords.len() / d;
    let mut subset = Vec::with_capacity(k);
    fn rec(
        coords: &[f64],
        d: usize,
        k: usize,
        radius: f64,
        n: usize,
        start: usize,
        subset: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if subset.len() == k {
            f(subset);
            return;
        }
        for j in start..n {
            if subset
                .iter()
                .all(|&s| torus_dist(&coords[j * d..(j + 1) * d], &coords[s * d..(s + 1) * d]) <= radius)
            {
                subset.push(j);
                rec(coords, d, k, radius, n, j + 1, subset, f);
                subset.pop();
            }
        }
    }
    rec(coords, d, k, radius, n, 0, &mut subset, &mut f);
    Ok(())
}

fn check_r(fnl: &InteractionFunctional, r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::invalid("r", format!("{r} not in (0, 1]")));
    }
    if fnl.delta * r >= 0.5 {
        return Err(Error::invalid(
            "r",
            format!("delta * r = {} must be < 1/2", fnl.delta * r),
        ));
    }
    Ok(())
}

/// Sum of `xi_r` over all k-subsets of the configuration (the observable
/// `f`), evaluated exactly through the cell list.
pub fn evaluate_f(points: &[TorusPoint], fnl: &InteractionFunctional, r: f64) -> Result<f64> {
    let d = match points.first() {
        Some(p) => p.dim(),
        None => return Ok(0.0),
    };
    let mut coords = Vec::with_capacity(points.len() * d);
    for p in points {
        coords.extend_from_slice(p.coords());
    }
    evaluate_f_coords(&coords, d, fnl, r)
}

/// Flat-coordinate version of [`evaluate_f`].
pub fn evaluate_f_coords(coords: &[f64], d: usize, fnl: &InteractionFunctional, r: f64) -> Result<f64> {
    check_r(fnl, r)?;
    let k = fnl.k();
    let radius = fnl.delta() * r;
    let mut total = 0.0;
    let mut tuple = vec![0.0; k * d];
    for_each_local_ktuple(coords, d, k, radius, |idx| {
        total += eval_tuple(coords, d, fnl, r, idx, &mut tuple);
    })?;
    Ok(total)
}

/// Unwrap the tuple around its anchor (minimal image) and evaluate `xi_r`.
#[inline]
fn eval_tuple(
    coords: &[f64],
    d: usize,
    fnl: &InteractionFunctional,
    r: f64,
    idx: &[usize],
    tuple: &mut [f64],
) -> f64 {
    let anchor = &coords[idx[0] * d..(idx[0] + 1) * d];
    for (slot, &pi) in idx.iter().enumerate() {
        let p = &coords[pi * d..(pi + 1) * d];
        for t in 0..d {
            tuple[slot * d + t] = wrap_coord(p[t] - anchor[t]);
        }
    }
    fnl.evaluate_scaled(tuple, d, r)
}

/// Brute-force oracle for [`evaluate_f`]: enumerates all k-subsets.
pub fn evaluate_f_brute(coords: &[f64], d: usize, fnl: &InteractionFunctional, r: f64) -> Result<f64> {
    check_r(fnl, r)?;
    let k = fnl.k();
    let n = coords.len() / d;
    let mut total = 0.0;
    let mut tuple = vec![0.0; k * d];
    let mut idx = vec![0usize; k];
    fn rec(
        n: usize,
        k: usize,
        start: usize,
        depth: usize,
        idx: &mut [usize],
        visit: &mut impl FnMut(&[usize]),
    ) {
        if depth == k {
            visit(idx);
            return;
        }
        for j in start..n {
            idx[depth] = j;
            rec(n, k, j + 1, depth + 1, idx, visit);
        }
    }
    rec(n, k, 0, 0, &mut idx, &mut |subset: &[usize]| {
        // reject wide subsets with the torus metric; local ones unwrap
        let wide = subset.iter().enumerate().any(|(a, &i)| {
            subset[a + 1..].iter().any(|&j| {
                torus_dist(&coords[i * d..(i + 1) * d], &coords[j * d..(j + 1) * d])
                    > fnl.delta() * r
            })
        });
        if !wide {
            total += eval_tuple(coords, d, fnl, r, subset, &mut tuple);
        }
    });
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::project;
    use rand::Rng;

    #[test]
    fn iso_examples() {
        let tri = GeometricPattern::clique(3).unwrap();
        let path3 = GeometricPattern::path(3).unwrap();
        assert!(graph_isomorphic(&tri, &tri).unwrap());
        assert!(!graph_isomorphic(&tri, &path3).unwrap());
        // two labelings of the 4-cycle
        let c4a = GeometricPattern::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let c4b = GeometricPattern::from_edges(4, &[(0, 2), (2, 1), (1, 3), (3, 0)]).unwrap();
        assert!(graph_isomorphic(&c4a, &c4b).unwrap());
        let big = GeometricPattern::path(9).unwrap();
        assert!(graph_isomorphic(&big, &big).is_err());
    }

    #[test]
    fn pattern_validation() {
        assert!(GeometricPattern::new(vec![vec![true]]).is_err());
        assert!(GeometricPattern::new(vec![vec![false, true], vec![false, false]]).is_err());
        assert!(GeometricPattern::from_edges(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn subgraph_edge_indicator() {
        let delta = 0.3;
        let r = 0.5;
        let fnl = InteractionFunctional::subgraph_count(GeometricPattern::edge(), delta).unwrap();
        // two points at 0.9 * r * delta / 2: within connection radius
        let gap = 0.9 * r * delta / 2.0;
        let pts = [0.0, gap];
        assert_eq!(fnl.evaluate_scaled(&pts, 1, r), 1.0);
        // beyond the connection radius
        let pts = [0.0, 1.1 * r * delta / 2.0];
        assert_eq!(fnl.evaluate_scaled(&pts, 1, r), 0.0);
    }

    #[test]
    fn locality_zero_beyond_delta_r() {
        let delta = 0.3;
        let r = 0.5;
        let fnl = InteractionFunctional::pair_indicator(delta).unwrap();
        let pts = [0.0, delta * r * 1.0001];
        assert_eq!(fnl.evaluate_scaled(&pts, 1, r), 0.0);
        let sub = InteractionFunctional::subgraph_count(GeometricPattern::edge(), delta).unwrap();
        assert_eq!(sub.evaluate_scaled(&pts, 1, r), 0.0);
    }

    #[test]
    fn triangle_count() {
        let delta = 0.45;
        let r = 1.0 / 3.0;
        let fnl =
            InteractionFunctional::subgraph_count(GeometricPattern::clique(3).unwrap(), delta).unwrap();
        let conn = r * delta / 3.0;
        // near-equilateral triangle with sides ~0.9 * conn
        let pts = [0.0, 0.0, 0.9 * conn, 0.0, 0.45 * conn, 0.78 * conn];
        assert_eq!(fnl.evaluate_scaled(&pts, 2, r), 1.0);
        // stretch one leg beyond the radius: no triangle
        let pts = [0.0, 0.0, 2.5 * conn, 0.0, 0.0, 0.9 * conn];
        assert_eq!(fnl.evaluate_scaled(&pts, 2, r), 0.0);
    }

    #[test]
    fn evaluate_f_examples() {
        let delta = 0.25;
        let r = 0.2;
        let fnl = InteractionFunctional::pair_indicator(delta).unwrap();
        // fewer than k points
        let single = [project(&[0.1]).unwrap()];
        assert_eq!(evaluate_f(&single, &fnl, r).unwrap(), 0.0);
        // tight 3-cluster: all C(3,2) pairs count
        let tight: Vec<_> = [0.0, 0.01, 0.02]
            .iter()
            .map(|&x| project(&[x]).unwrap())
            .collect();
        assert_eq!(evaluate_f(&tight, &fnl, r).unwrap(), 3.0);
        assert!(evaluate_f(&tight, &fnl, 1.5).is_err());
    }

    #[test]
    fn grid_matches_brute_force_pairs() {
        let mut rng = crate::rng::stream_rng(7, 0);
        let fnl = InteractionFunctional::pair_indicator(0.25).unwrap();
        for d in 1..=3usize {
            for trial in 0..5 {
                let n = 50;
                let coords: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-0.5..0.5)).collect();
                let r = [0.05, 0.1, 0.3, 0.6, 1.2][trial] / 1.2 * 0.8;
                let fast = evaluate_f_coords(&coords, d, &fnl, r).unwrap();
                let brute = evaluate_f_brute(&coords, d, &fnl, r).unwrap();
                assert_eq!(fast, brute, "d={d} r={r}");
            }
        }
    }

    #[test]
    fn sorted_pair_path_matches_brute_near_seam() {
        // clusters hugging the faces exercise the boundary pass of the
        // sorted-key enumeration
        let mut rng = crate::rng::stream_rng(11, 0);
        for d in 1..=3usize {
            for &radius in &[0.004, 0.011, 0.05] {
                let n = 120;
                let coords: Vec<f64> = (0..n * d)
                    .map(|_| {
                        let x: f64 = rng.gen_range(-0.5..0.5);
                        if rng.gen_bool(0.6) {
                            // squash toward the seam at +-1/2
                            crate::torus::wrap_coord(0.5 + 0.02 * x)
                        } else {
                            x
                        }
                    })
                    .collect();
                let mut fast: Vec<Vec<usize>> = Vec::new();
                let mut brute: Vec<Vec<usize>> = Vec::new();
                for_each_local_ktuple(&coords, d, 2, radius, |idx| fast.push(idx.to_vec()))
                    .unwrap();
                for_each_local_ktuple_brute(&coords, d, 2, radius, |idx| {
                    brute.push(idx.to_vec())
                })
                .unwrap();
                fast.sort();
                brute.sort();
                assert_eq!(fast, brute, "d={d} radius={radius}");
            }
        }
    }

    #[test]
    fn grid_matches_brute_force_triangles() {
        let mut rng = crate::rng::stream_rng(8, 0);
        let fnl =
            InteractionFunctional::subgraph_count(GeometricPattern::clique(3).unwrap(), 0.4).unwrap();
        for trial in 0..4 {
            let n = 40;
            let d = 2;
            let coords: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let r = [0.3, 0.5, 0.8, 1.0][trial];
            let fast = evaluate_f_coords(&coords, d, &fnl, r).unwrap();
            let brute = evaluate_f_brute(&coords, d, &fnl, r).unwrap();
            assert_eq!(fast, brute, "trial {trial}");
        }
    }

    #[test]
    fn enumeration_yields_each_subset_once() {
        let mut rng = crate::rng::stream_rng(9, 0);
        let d = 2;
        let n = 30;
        let coords: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let radius = 0.15;
        let mut seen = std::collections::HashSet::new();
        for_each_local_ktuple(&coords, d, 3, radius, |idx| {
            let mut key = idx.to_vec();
            key.sort_unstable();
            assert!(seen.insert(key), "duplicate subset {idx:?}");
        })
        .unwrap();
        // compare against brute force
        let mut brute = std::collections::HashSet::new();
        for_each_local_ktuple_brute(&coords, d, 3, radius, |idx| {
            let mut key = idx.to_vec();
            key.sort_unstable();
            brute.insert(key);
        })
        .unwrap();
        assert_eq!(seen, brute);
    }

    #[test]
    fn enumeration_edge_cases() {
        // dispersed points: nothing within radius
        let coords = [-0.4, 0.0, 0.4];
        let mut count = 0;
        for_each_local_ktuple(&coords, 1, 2, 0.05, |_| count += 1).unwrap();
        assert_eq!(count, 0);
        // one tight k-cluster: exactly one subset
        let coords = [0.0, 0.01, 0.02];
        let mut tuples = Vec::new();
        for_each_local_ktuple(&coords, 1, 3, 0.1, |idx| tuples.push(idx.to_vec())).unwrap();
        assert_eq!(tuples, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn wraparound_pairs_found() {
        // pair straddling the boundary
        let coords = [-0.49, 0.49];
        let fnl = InteractionFunctional::pair_indicator(0.25).unwrap();
        assert_eq!(evaluate_f_coords(&coords, 1, &fnl, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn translation_and_scale_invariance() {
        let mut rng = crate::rng::stream_rng(10, 0);
        let fnl =
            InteractionFunctional::subgraph_count(GeometricPattern::clique(3).unwrap(), 0.4).unwrap();
        let d = 2;
        for _ in 0..200 {
            let base: Vec<f64> = (0..3 * d).map(|_| rng.gen_range(-0.05..0.05)).collect();
            let r: f64 = rng.gen_range(0.2..1.0);
            let v = fnl.evaluate_scaled(&base, d, r);
            // translation
            let shift: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let moved: Vec<f64> = base
                .iter()
                .enumerate()
                .map(|(i, c)| c + shift[i % d])
                .collect();
            assert_eq!(fnl.evaluate_scaled(&moved, d, r), v);
            // scale: xi_r(0, Y) = xi_{alpha r}(0, alpha Y)
            let alpha: f64 = rng.gen_range(0.1..1.0);
            let shrunk: Vec<f64> = base.iter().map(|c| c * alpha).collect();
            assert_eq!(fnl.evaluate_scaled(&shrunk, d, alpha * r), v);
        }
    }

    #[test]
    fn custom_rule_checked_at_registration() {
        // well-behaved rule passes
        let ok = InteractionFunctional::custom(2, 0.3, 1.0, |coords, d| {
            let dist = euclid(&coords[0..d], &coords[d..2 * d]);
            if dist <= 0.3 {
                1.0 - dist / 0.3
            } else {
                0.0
            }
        });
        assert!(ok.is_ok());
        // non-local rule is rejected
        let bad = InteractionFunctional::custom(2, 0.1, 1.0, |_, _| 0.5);
        assert!(bad.is_err());
        // asymmetric rule is rejected
        let asym = InteractionFunctional::custom(2, 0.3, 1.0, |coords, d| {
            let dist = euclid(&coords[0..d], &coords[d..2 * d]);
            if dist <= 0.3 && coords[0] < coords[d] {
                1.0
            } else {
                0.0
            }
        });
        assert!(asym.is_err());
    }

    #[test]
    fn feasibility_search() {
        let mut rng = crate::rng::stream_rng(11, 0);
        assert!(GeometricPattern::edge().is_feasible(2, 500, &mut rng));
        assert!(GeometricPattern::clique(3).unwrap().is_feasible(2, 20_000, &mut rng));
    }
}
