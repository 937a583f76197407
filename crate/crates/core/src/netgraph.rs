//! Directed networks with dyadic covariates, degree sequences and the
//! boundary-degree diagnostics that decide whether the unpenalized fixed
//! effects estimator can exist.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::InputError;

/// Dense binary adjacency matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    n: usize,
    adj: Vec<u8>,
    labels: Option<Vec<String>>,
}

impl Network {
    /// An empty network on `n` nodes.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adj: vec![0; n * n],
            labels: None,
        }
    }

    /// Builds a network from an edge list, rejecting self-loops and duplicates.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, InputError> {
        let mut net = Self::empty(n);
        for &(s, d) in edges {
            for id in [s, d] {
                if id >= n {
                    return Err(InputError::NodeOutOfRange { id, n });
                }
            }
            if s == d {
                return Err(InputError::SelfLoop(s));
            }
            if net.has_edge(s, d) {
                return Err(InputError::DuplicateEdge(s, d));
            }
            net.adj[s * n + d] = 1;
        }
        Ok(net)
    }

    /// The complete directed graph on `n` nodes.
    pub fn complete(n: usize) -> Self {
        let mut net = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    net.adj[i * n + j] = 1;
                }
            }
        }
        net
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j] != 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.adj[i * self.n + j]
    }

    /// Sets `g_ij`; the diagonal is left untouched.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        if i != j {
            self.adj[i * self.n + j] = present as u8;
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, InputError> {
        if labels.len() != self.n {
            return Err(InputError::Labels {
                got: labels.len(),
                n: self.n,
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|&g| g as usize).sum()
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.adj
            .iter()
            .enumerate()
            .filter(|(_, &g)| g != 0)
            .map(move |(k, _)| (k / n, k % n))
    }

    /// The network restricted to `nodes`, relabelled `0..nodes.len()` in the
    /// given order.
    pub fn subnetwork(&self, nodes: &[usize]) -> Network {
        let m = nodes.len();
        let mut sub = Network::empty(m);
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                sub.adj[a * m + b] = self.adj[i * self.n + j];
            }
        }
        sub.labels = self
            .labels
            .as_ref()
            .map(|l| nodes.iter().map(|&i| l[i].clone()).collect());
        sub
    }

    /// The symmetric network of mutual links, `g*_ij = g_ij g_ji`.
    pub fn mutual_part(&self) -> Network {
        let mut out = Network::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.has_edge(i, j) && self.has_edge(j, i) {
                    out.adj[i * self.n + j] = 1;
                }
            }
        }
        out.labels = self.labels.clone();
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Out- and in-degree sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequences {
    pub out_degree: Vec<usize>,
    pub in_degree: Vec<usize>,
}

pub fn degrees(net: &Network) -> DegreeSequences {
    let n = net.n;
    let mut out_degree = vec![0; n];
    let mut in_degree = vec![0; n];
    for (i, j) in net.edges() {
        out_degree[i] += 1;
        in_degree[j] += 1;
    }
    debug_assert!(n == 0 || out_degree.iter().all(|&d| d < n));
    DegreeSequences {
        out_degree,
        in_degree,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryReason {
    ZeroOut,
    ZeroIn,
    FullOut,
    FullIn,
}

impl fmt::Display for BoundaryReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryReason::ZeroOut => "zero-out",
            BoundaryReason::ZeroIn => "zero-in",
            BoundaryReason::FullOut => "full-out",
            BoundaryReason::FullIn => "full-in",
        })
    }
}

fn reasons_for(d: usize, b: usize, n: usize) -> Vec<BoundaryReason> {
    let full = n.saturating_sub(1);
    let mut r = Vec::new();
    if d == 0 {
        r.push(BoundaryReason::ZeroOut);
    }
    if b == 0 {
        r.push(BoundaryReason::ZeroIn);
    }
    if d == full {
        r.push(BoundaryReason::FullOut);
    }
    if b == full {
        r.push(BoundaryReason::FullIn);
    }
    r
}

/// Every node whose out- or in-degree is 0 or `n-1`, one entry per
/// applicable reason, ordered by node.
pub fn boundary_nodes(net: &Network) -> Vec<(usize, BoundaryReason)> {
    let deg = degrees(net);
    let mut out = Vec::new();
    for i in 0..net.n {
        for r in reasons_for(deg.out_degree[i], deg.in_degree[i], net.n) {
            out.push((i, r));
        }
    }
    out
}

/// Boundary nodes grouped per node.
pub fn boundary_map(net: &Network) -> BTreeMap<usize, Vec<BoundaryReason>> {
    let mut map: BTreeMap<usize, Vec<BoundaryReason>> = BTreeMap::new();
    for (i, r) in boundary_nodes(net) {
        map.entry(i).or_default().push(r);
    }
    map
}

/// One cohort of simultaneously removed nodes (ids refer to the original network).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrimRound {
    pub removed: Vec<(usize, Vec<BoundaryReason>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrimTrace {
    pub rounds: Vec<TrimRound>,
    /// Surviving original node ids, ascending.
    pub surviving: Vec<usize>,
}

/// Removes every boundary node of the current subnetwork, round after round,
/// until none remain.
pub fn trim_iteratively(net: &Network) -> (Network, TrimTrace) {
    let mut alive: Vec<usize> = (0..net.n).collect();
    let mut rounds = Vec::new();
    loop {
        let sub = net.subnetwork(&alive);
        let flagged = boundary_map(&sub);
        if flagged.is_empty() {
            return (
                sub,
                TrimTrace {
                    rounds,
                    surviving: alive,
                },
            );
        }
        let removed: Vec<(usize, Vec<BoundaryReason>)> = flagged
            .iter()
            .map(|(&local, reasons)| (alive[local], reasons.clone()))
            .collect();
        alive = alive
            .iter()
            .enumerate()
            .filter(|(local, _)| !flagged.contains_key(local))
            .map(|(_, &id)| id)
            .collect();
        rounds.push(TrimRound { removed });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkStats {
    pub density: f64,
    pub reciprocity_share: f64,
    /// Global directed clustering; `None` when there are no two-paths.
    pub transitivity: Option<f64>,
}

/// Density, share of mutual dyads and directed transitivity.
///
/// Transitivity counts ordered triples `i -> j -> k` with distinct
/// endpoints and reports the fraction that are closed by `i -> k`.
pub fn network_stats(net: &Network) -> NetworkStats {
    let n = net.n;
    assert!(n >= 2, "network_stats requires at least two nodes");
    let links = net.edge_count() as f64;
    let ordered = (n * (n - 1)) as f64;
    let mut mutual = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if net.has_edge(i, j) && net.has_edge(j, i) {
                mutual += 1;
            }
        }
    }
    let deg = degrees(net);
    let mut open = 0u64;
    for j in 0..n {
        let back = (0..n)
            .filter(|&i| net.has_edge(i, j) && net.has_edge(j, i))
            .count();
        open += (deg.in_degree[j] * deg.out_degree[j] - back) as u64;
    }
    let mut closed = 0u64;
    for i in 0..n {
        let row_i = &net.adj[i * n..(i + 1) * n];
        for (j, &gij) in row_i.iter().enumerate() {
            if gij == 0 {
                continue;
            }
            let row_j = &net.adj[j * n..(j + 1) * n];
            closed += row_i
                .iter()
                .zip(row_j)
                .enumerate()
                .filter(|&(k, (&a, &b))| k != i && a != 0 && b != 0)
                .count() as u64;
        }
    }
    NetworkStats {
        density: links / ordered,
        reciprocity_share: mutual as f64 / (ordered / 2.0),
        transitivity: (open > 0).then(|| closed as f64 / open as f64),
    }
}

/// Covariate family tag used in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    X,
    Z,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::X => "X",
            Family::Z => "Z",
        }
    }
}

/// Dyadic covariates: directed `X_ij` per ordered pair and symmetric `Z_ij`
/// stored once per unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    n: usize,
    x_names: Vec<String>,
    z_names: Vec<String>,
    x: Vec<f64>,
    z: Vec<f64>,
}

/// Index of the unordered pair `{i, j}` with `i < j` in row-major upper
/// triangular order.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Rows of a covariate table as read from disk: `(i, j, values)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DyadTable {
    pub names: Vec<String>,
    pub rows: Vec<(usize, usize, Vec<f64>)>,
}

impl Covariates {
    /// Covariates with no columns at all.
    pub fn none(n: usize) -> Self {
        Self {
            n,
            x_names: Vec::new(),
            z_names: Vec::new(),
            x: Vec::new(),
            z: Vec::new(),
        }
    }

    /// Fills both families from closures. `z(i, j)` is only called with `i < j`.
    pub fn from_fn(
        n: usize,
        x_names: Vec<String>,
        z_names: Vec<String>,
        mut x: impl FnMut(usize, usize) -> Vec<f64>,
        mut z: impl FnMut(usize, usize) -> Vec<f64>,
    ) -> Result<Self, InputError> {
        let kx = x_names.len();
        let kz = z_names.len();
        let mut xs = vec![0.0; n * n * kx];
        let mut zs = vec![0.0; pair_count(n) * kz];
        for i in 0..n {
            for j in 0..n {
                if i == j || kx == 0 {
                    continue;
                }
                let row = x(i, j);
                check_row("X", i, j, &row, kx)?;
                xs[(i * n + j) * kx..(i * n + j + 1) * kx].copy_from_slice(&row);
            }
        }
        if kz > 0 {
            for i in 0..n {
                for j in i + 1..n {
                    let row = z(i, j);
                    check_row("Z", i, j, &row, kz)?;
                    let p = pair_index(n, i, j);
                    zs[p * kz..(p + 1) * kz].copy_from_slice(&row);
                }
            }
        }
        Ok(Self {
            n,
            x_names,
            z_names,
            x: xs,
            z: zs,
        })
    }

    /// Builds covariates from tables. X rows must cover every ordered pair;
    /// Z rows every unordered pair, given either once or in both orders with
    /// identical values.
    pub fn from_tables(n: usize, x: &DyadTable, z: &DyadTable) -> Result<Self, InputError> {
        let kx = x.names.len();
        let kz = z.names.len();
        let mut xs = vec![0.0; n * n * kx];
        let mut zs = vec![0.0; pair_count(n) * kz];
        if kx > 0 {
            let mut seen = vec![false; n * n];
            for (i, j, row) in &x.rows {
                let (i, j) = (*i, *j);
                check_pair(i, j, n)?;
                check_row("X", i, j, row, kx)?;
                if std::mem::replace(&mut seen[i * n + j], true) {
                    return Err(InputError::DuplicateCovariate { family: "X", i, j });
                }
                xs[(i * n + j) * kx..(i * n + j + 1) * kx].copy_from_slice(row);
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j && !seen[i * n + j] {
                        return Err(InputError::MissingCovariate { family: "X", i, j });
                    }
                }
            }
        }
        if kz > 0 {
            // 0 = unseen, 1 = seen as (lo, hi), 2 = seen as (hi, lo), 3 = both
            let mut seen = vec![0u8; pair_count(n)];
            for (i, j, row) in &z.rows {
                let (i, j) = (*i, *j);
                check_pair(i, j, n)?;
                check_row("Z", i, j, row, kz)?;
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                let p = pair_index(n, lo, hi);
                let bit = if i < j { 1 } else { 2 };
                if seen[p] & bit != 0 {
                    return Err(InputError::DuplicateCovariate { family: "Z", i, j });
                }
                let slot = &mut zs[p * kz..(p + 1) * kz];
                if seen[p] != 0 {
                    if slot != row.as_slice() {
                        return Err(InputError::AsymmetricZ { i: lo, j: hi });
                    }
                } else {
                    slot.copy_from_slice(row);
                }
                seen[p] |= bit;
            }
            for i in 0..n {
                for j in i + 1..n {
                    if seen[pair_index(n, i, j)] == 0 {
                        return Err(InputError::MissingCovariate { family: "Z", i, j });
                    }
                }
            }
        }
        Ok(Self {
            n,
            x_names: x.names.clone(),
            z_names: z.names.clone(),
            x: xs,
            z: zs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim_x(&self) -> usize {
        self.x_names.len()
    }

    pub fn dim_z(&self) -> usize {
        self.z_names.len()
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    pub fn z_names(&self) -> &[String] {
        &self.z_names
    }

    /// `X_ij` for the ordered pair `(i, j)`.
    #[inline]
    pub fn x(&self, i: usize, j: usize) -> &[f64] {
        let k = self.x_names.len();
        let o = (i * self.n + j) * k;
        &self.x[o..o + k]
    }

    /// `Z_ij = Z_ji`.
    #[inline]
    pub fn z(&self, i: usize, j: usize) -> &[f64] {
        let k = self.z_names.len();
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let o = pair_index(self.n, lo, hi) * k;
        &self.z[o..o + k]
    }

    /// Covariates restricted to `nodes`, relabelled in order.
    pub fn subset(&self, nodes: &[usize]) -> Covariates {
        let m = nodes.len();
        let kx = self.dim_x();
        let kz = self.dim_z();
        let mut x = vec![0.0; m * m * kx];
        let mut z = vec![0.0; pair_count(m) * kz];
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                if a == b {
                    continue;
                }
                x[(a * m + b) * kx..(a * m + b + 1) * kx].copy_from_slice(self.x(i, j));
                if a < b && kz > 0 {
                    let p = pair_index(m, a, b);
                    z[p * kz..(p + 1) * kz].copy_from_slice(self.z(i, j));
                }
            }
        }
        Covariates {
            n: m,
            x_names: self.x_names.clone(),
            z_names: self.z_names.clone(),
            x,
            z,
        }
    }

    /// Drops one covariate family entirely.
    pub fn without(&self, family: Family) -> Covariates {
        let mut out = self.clone();
        match family {
            Family::X => {
                out.x_names.clear();
                out.x.clear();
            }
            Family::Z => {
                out.z_names.clear();
                out.z.clear();
            }
        }
        out
    }

    /// Overwrites `X_ij[k]` (used to build counterfactual tables in tests).
    pub fn set_x(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let kx = self.dim_x();
        self.x[(i * self.n + j) * kx + k] = v;
    }

    pub fn set_z(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let kz = self.dim_z();
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.z[pair_index(self.n, lo, hi) * kz + k] = v;
    }

    /// Export as tables (X: all ordered pairs, Z: pairs with `i < j`).
    pub fn to_tables(&self) -> (DyadTable, DyadTable) {
        let mut x = DyadTable {
            names: self.x_names.clone(),
            rows: Vec::new(),
        };
        let mut z = DyadTable {
            names: self.z_names.clone(),
            rows: Vec::new(),
        };
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                if !x.names.is_empty() {
                    x.rows.push((i, j, self.x(i, j).to_vec()));
                }
                if i < j && !z.names.is_empty() {
                    z.rows.push((i, j, self.z(i, j).to_vec()));
                }
            }
        }
        (x, z)
    }
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<(), InputError> {
    for id in [i, j] {
        if id >= n {
            return Err(InputError::NodeOutOfRange { id, n });
        }
    }
    if i == j {
        return Err(InputError::SelfLoop(i));
    }
    Ok(())
}

fn check_row(
    family: &'static str,
    i: usize,
    j: usize,
    row: &[f64],
    expected: usize,
) -> Result<(), InputError> {
    if row.len() != expected {
        return Err(InputError::RowLength {
            family,
            i,
            j,
            got: row.len(),
            expected,
        });
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(InputError::NonFinite { family, i, j });
    }
    Ok(())
}

/// Builds a network together with its validated covariates.
pub fn build_network(
    n: usize,
    edges: &[(usize, usize)],
    x: &DyadTable,
    z: &DyadTable,
) -> Result<(Network, Covariates), InputError> {
    let net = Network::from_edges(n, edges)?;
    let cov = Covariates::from_tables(n, x, z)?;
    Ok((net, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryReason::*;

    fn star4() -> Network {
        Network::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    #[test]
    fn empty_pair_has_zero_degrees() {
        let (net, _) = build_network(2, &[], &DyadTable::default(), &DyadTable::default()).unwrap();
        let d = degrees(&net);
        assert_eq!(d.out_degree, vec![0, 0]);
        assert_eq!(d.in_degree, vec![0, 0]);
        assert_eq!(net.edge_count(), 0);
    }

    #[test]
    fn hand_counted_degrees() {
        let net = Network::from_edges(3, &[(0, 1), (1, 0), (2, 0)]).unwrap();
        let d = degrees(&net);
        assert_eq!(d.out_degree, vec![1, 1, 1]);
        assert_eq!(d.in_degree, vec![2, 1, 0]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            Network::from_edges(2, &[(0, 0)]),
            Err(InputError::SelfLoop(0))
        );
        assert_eq!(
            Network::from_edges(3, &[(0, 1), (0, 1)]),
            Err(InputError::DuplicateEdge(0, 1))
        );
        assert!(matches!(
            Network::from_edges(3, &[(0, 3)]),
            Err(InputError::NodeOutOfRange { id: 3, n: 3 })
        ));
    }

    #[test]
    fn complete_and_star_degrees() {
        let d = degrees(&Network::complete(4));
        assert_eq!(d.out_degree, vec![3; 4]);
        assert_eq!(d.in_degree, vec![3; 4]);
        let d = degrees(&Network::empty(3));
        assert_eq!(d.out_degree, vec![0; 3]);
        let d = degrees(&star4());
        assert_eq!(d.out_degree, vec![3, 0, 0, 0]);
        assert_eq!(d.in_degree, vec![0, 1, 1, 1]);
    }

    #[test]
    fn boundary_flags() {
        let b = boundary_nodes(&Network::empty(3));
        assert_eq!(b.len(), 6);
        assert!(b.iter().all(|(_, r)| matches!(r, ZeroOut | ZeroIn)));
        let b = boundary_nodes(&Network::complete(3));
        assert_eq!(b.len(), 6);
        assert!(b.iter().all(|(_, r)| matches!(r, FullOut | FullIn)));
        let b = boundary_map(&star4());
        assert_eq!(b[&0], vec![ZeroIn, FullOut]);
        for i in 1..4 {
            assert_eq!(b[&i], vec![ZeroOut]);
        }
    }

    #[test]
    fn trim_complete_graph_in_one_round() {
        let (sub, trace) = trim_iteratively(&Network::complete(3));
        assert_eq!(sub.n(), 0);
        assert_eq!(trace.rounds.len(), 1);
        assert_eq!(trace.rounds[0].removed.len(), 3);
        assert!(trace.surviving.is_empty());
    }

    #[test]
    fn trim_leaves_interior_cycle_alone() {
        let net = Network::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let d = degrees(&net);
        assert!(d
            .out_degree
            .iter()
            .chain(&d.in_degree)
            .all(|&k| (1..=2).contains(&k)));
        let (sub, trace) = trim_iteratively(&net);
        assert!(trace.rounds.is_empty());
        assert_eq!(sub, net);
        assert!(boundary_nodes(&net).is_empty());
    }

    #[test]
    fn trim_chain_cascades() {
        let net = Network::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let (sub, trace) = trim_iteratively(&net);
        assert_eq!(trace.rounds.len(), 2);
        assert_eq!(
            trace.rounds[0].removed,
            vec![(0, vec![ZeroIn]), (3, vec![ZeroOut])]
        );
        let ids: Vec<usize> = trace.rounds[1].removed.iter().map(|r| r.0).collect();
        assert_eq!(ids, vec![1, 2]);
        assert_eq!(sub.n(), 0);
    }

    #[test]
    fn stats_of_extremes() {
        let s = network_stats(&Network::complete(5));
        assert_eq!(s.density, 1.0);
        assert_eq!(s.reciprocity_share, 1.0);
        assert_eq!(s.transitivity, Some(1.0));
        let s = network_stats(&Network::empty(5));
        assert_eq!(s.density, 0.0);
        assert_eq!(s.reciprocity_share, 0.0);
        assert_eq!(s.transitivity, None);
    }

    #[test]
    fn transitivity_matches_brute_force() {
        let net = Network::from_edges(
            5,
            &[(0, 1), (1, 2), (0, 2), (2, 0), (3, 4), (4, 3), (2, 3), (1, 4)],
        )
        .unwrap();
        let (mut open, mut closed) = (0, 0);
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    if net.has_edge(i, j) && net.has_edge(j, k) {
                        open += 1;
                        if net.has_edge(i, k) {
                            closed += 1;
                        }
                    }
                }
            }
        }
        let t = network_stats(&net).transitivity.unwrap();
        assert!((t - closed as f64 / open as f64).abs() < 1e-15);
    }

    fn tables(n: usize) -> (DyadTable, DyadTable) {
        let mut x = DyadTable {
            names: vec!["x".into()],
            rows: vec![],
        };
        let mut z = DyadTable {
            names: vec!["z".into()],
            rows: vec![],
        };
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    x.rows.push((i, j, vec![(i * 10 + j) as f64]));
                    if i < j {
                        z.rows.push((i, j, vec![(i + j) as f64]));
                    }
                }
            }
        }
        (x, z)
    }

    #[test]
    fn covariate_tables_validate() {
        let (x, z) = tables(3);
        let cov = Covariates::from_tables(3, &x, &z).unwrap();
        assert_eq!(cov.x(2, 1), &[21.0]);
        assert_eq!(cov.z(2, 1), cov.z(1, 2));

        let mut missing = x.clone();
        missing.rows.pop();
        assert!(matches!(
            Covariates::from_tables(3, &missing, &z),
            Err(InputError::MissingCovariate { family: "X", .. })
        ));

        let mut asym = z.clone();
        asym.rows.push((1, 0, vec![99.0]));
        assert_eq!(
            Covariates::from_tables(3, &x, &asym),
            Err(InputError::AsymmetricZ { i: 0, j: 1 })
        );
        let mut both = z.clone();
        both.rows.push((1, 0, vec![1.0]));
        assert!(Covariates::from_tables(3, &x, &both).is_ok());
    }

    #[test]
    fn subset_relabels() {
        let (x, z) = tables(4);
        let cov = Covariates::from_tables(4, &x, &z).unwrap();
        let sub = cov.subset(&[1, 3]);
        assert_eq!(sub.x(0, 1), cov.x(1, 3));
        assert_eq!(sub.x(1, 0), cov.x(3, 1));
        assert_eq!(sub.z(0, 1), cov.z(1, 3));
    }
}
