//! Communication graphs and the mixing matrices built on them.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matops::{second_largest_singular_value, DenseMatrix};

const ER_MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologyKind {
    Ring,
    Star,
    Complete,
    ErdosRenyi { p: f64 },
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::Ring => write!(f, "ring"),
            TopologyKind::Star => write!(f, "star"),
            TopologyKind::Complete => write!(f, "complete"),
            TopologyKind::ErdosRenyi { p } => write!(f, "er({p})"),
        }
    }
}

/// Undirected simple connected graph on agents `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    /// Sorted, each pair stored as `(i, j)` with `i < j`.
    edges: Vec<(usize, usize)>,
}

impl Topology {
    /// Validates the edge set: indices in range, no self-loops, no duplicates,
    /// connected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("topology needs at least one agent".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Parameter(format!(
                    "edge ({a}, {b}) out of range for n = {n}"
                )));
            }
            if a == b {
                return Err(Error::Parameter(format!("self-loop at agent {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::Parameter(format!("duplicate edge ({a}, {b})")));
            }
        }
        let topo = Topology {
            n,
            edges: set.into_iter().collect(),
        };
        if !topo.is_connected() {
            return Err(Error::Parameter("communication graph is not connected".into()));
        }
        Ok(topo)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        connected(self.n, &self.edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list()).map_err(|e| Error::io(path, e))
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }
}

/// Plain edge list: first non-blank line `n`, then one `i j` pair per line.
/// Lines starting with `#` are ignored.
impl FromStr for Topology {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Format("edge list is empty".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Format(format!("bad agent count {header:?}")))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
                    Error::Format(format!("line {}: expected `i j`, got {line:?}", lineno + 1))
                })
            };
            let a = parse(parts.next())?;
            let b = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Format(format!(
                    "line {}: trailing tokens in {line:?}",
                    lineno + 1
                )));
            }
            edges.push((a, b));
        }
        Topology::new(n, edges)
    }
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Builds one of the standard test topologies. `seed` only matters for
/// Erdős–Rényi graphs, which are redrawn wholesale until connected.
pub fn build_topology(kind: TopologyKind, n: usize, seed: u64) -> Result<Topology> {
    if n < 2 {
        return Err(Error::Parameter(format!("need n >= 2 agents, got {n}")));
    }
    let edges: Vec<(usize, usize)> = match kind {
        TopologyKind::Ring => {
            let mut e: BTreeSet<(usize, usize)> = BTreeSet::new();
            for i in 0..n {
                let j = (i + 1) % n;
                e.insert((i.min(j), i.max(j)));
            }
            e.into_iter().collect()
        }
        TopologyKind::Star => (1..n).map(|j| (0, j)).collect(),
        TopologyKind::Complete => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect(),
        TopologyKind::ErdosRenyi { p } => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Parameter(format!(
                    "edge probability must lie in (0, 1], got {p}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut found = None;
            for _ in 0..ER_MAX_ATTEMPTS {
                let e: Vec<(usize, usize)> = (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .filter(|_| rng.random_bool(p))
                    .collect();
                if connected(n, &e) {
                    found = Some(e);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Generation(format!(
                    "no connected ER({p}) graph on {n} nodes after {ER_MAX_ATTEMPTS} draws"
                ))
            })?
        }
    };
    Topology::new(n, edges)
}

/// Metropolis–Hastings weights: `1 / (1 + max(deg_i, deg_j))` on edges,
/// remainder on the diagonal.
pub fn metropolis_weights(t: &Topology) -> DenseMatrix {
    let deg = t.degrees();
    let mut w = DenseMatrix::zeros(t.n, t.n);
    for &(a, b) in &t.edges {
        let wij = 1.0 / (1.0 + deg[a].max(deg[b]) as f64);
        w[(a, b)] = wij;
        w[(b, a)] = wij;
    }
    for i in 0..t.n {
        let off: f64 = (0..t.n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    w
}

/// The mixing matrix `W` together with the EXTRA correction `V = θI + (1−θ)W`.
#[derive(Debug, Clone)]
pub struct MixingPair {
    pub w: DenseMatrix,
    pub v: DenseMatrix,
    pub theta: f64,
    pub sigma2: f64,
    /// Nonzero off-diagonal pattern of `W`, one list per agent.
    neighbors: Vec<Vec<usize>>,
}

impl MixingPair {
    pub fn with_correction(w: DenseMatrix, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 0.5) {
            return Err(Error::Parameter(format!(
                "theta must lie in (0, 1/2], got {theta}"
            )));
        }
        if !w.is_square() {
            return Err(Error::Dimension(format!(
                "mixing matrix must be square, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        let n = w.nrows();
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Parameter(
                "mixing matrix entries must be finite and nonnegative".into(),
            ));
        }
        if (&w - w.transpose()).norm() > 1e-12 {
            return Err(Error::Parameter("mixing matrix is not symmetric".into()));
        }
        for i in 0..n {
            let row: f64 = w.row(i).sum();
            if (row - 1.0).abs() > 1e-12 {
                return Err(Error::Parameter(format!(
                    "row {i} of the mixing matrix sums to {row}"
                )));
            }
        }
        let sigma2 = second_largest_singular_value(&w)?;
        let v = DenseMatrix::identity(n, n) * theta + &w * (1.0 - theta);
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && w[(i, j)] != 0.0).collect())
            .collect();
        Ok(MixingPair {
            w,
            v,
            theta,
            sigma2,
            neighbors,
        })
    }

    /// Metropolis weights on `t` with correction parameter `theta`.
    pub fn metropolis(t: &Topology, theta: f64) -> Result<Self> {
        let mp = Self::with_correction(metropolis_weights(t), theta)?;
        if mp.sigma2 >= 1.0 {
            return Err(Error::Parameter(format!(
                "sigma_2(W) = {} is not below 1",
                mp.sigma2
            )));
        }
        Ok(mp)
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbors[agent]
    }

    /// `Σᵢ degᵢ`: the number of directed neighbor messages in one exchange.
    pub fn total_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }
}

/// Agent-level joint-error transition matrix
/// `P = [[W − J, I], [W − V, I − J]]` with `J = 𝟙𝟙ᵀ/n`.
pub fn build_joint_transition(mp: &MixingPair) -> DenseMatrix {
    let n = mp.n();
    let j = DenseMatrix::from_element(n, n, 1.0 / n as f64);
    let eye = DenseMatrix::identity(n, n);
    let mut p = DenseMatrix::zeros(2 * n, 2 * n);
    p.view_mut((0, 0), (n, n)).copy_from(&(&mp.w - &j));
    p.view_mut((0, n), (n, n)).copy_from(&eye);
    p.view_mut((n, 0), (n, n)).copy_from(&(&mp.w - &mp.v));
    p.view_mut((n, n), (n, n)).copy_from(&(&eye - &j));
    p
}

/// Adjacency lists for a topology, used by tests and diagnostics.
pub fn adjacency(t: &Topology) -> Vec<Vec<usize>> {
    t.adjacency()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::spectral_radius;
    use nalgebra::SymmetricEigen;

    fn bfs_reaches_all(t: &Topology) -> bool {
        let adj = adjacency(t);
        let mut dist = vec![usize::MAX; t.n()];
        let mut queue = std::collections::VecDeque::from([0]);
        dist[0] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist.iter().all(|&d| d != usize::MAX)
    }

    /// `ρ(P)` from the spectrum of `W`: `W` and `V` share eigenvectors, so `P`
    /// splits into the nilpotent consensus block and one 2×2 block
    /// `[[λ, 1], [−θ(1−λ), 1]]` per remaining eigenvalue `λ` of `W`.
    fn rho_p_from_w_spectrum(mp: &MixingPair) -> f64 {
        let eig = SymmetricEigen::new(mp.w.clone());
        let mut lambdas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let theta = mp.theta;
        lambdas[1..]
            .iter()
            .map(|&l| {
                let tr = l + 1.0;
                let det = l + theta * (1.0 - l);
                let disc = tr * tr - 4.0 * det;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    ((tr + s) / 2.0).abs().max(((tr - s) / 2.0).abs())
                } else {
                    det.sqrt()
                }
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn ring_and_star_edges() {
        let ring = build_topology(TopologyKind::Ring, 4, 0).unwrap();
        assert_eq!(ring.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
        let star = build_topology(TopologyKind::Star, 4, 0).unwrap();
        assert_eq!(star.edges(), &[(0, 1), (0, 2), (0, 3)]);
        let complete = build_topology(TopologyKind::Complete, 4, 0).unwrap();
        assert_eq!(complete.edges().len(), 6);
    }

    #[test]
    fn erdos_renyi_is_connected_and_reproducible() {
        let kind = TopologyKind::ErdosRenyi { p: 0.6 };
        let a = build_topology(kind, 8, 7).unwrap();
        assert!(bfs_reaches_all(&a));
        assert_eq!(a, build_topology(kind, 8, 7).unwrap());
        for seed in 0..50 {
            let t = build_topology(TopologyKind::ErdosRenyi { p: 0.3 }, 10, seed).unwrap();
            assert!(bfs_reaches_all(&t));
        }
    }

    #[test]
    fn topology_parameter_errors() {
        assert!(matches!(
            build_topology(TopologyKind::Ring, 1, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_topology(TopologyKind::ErdosRenyi { p: 0.0 }, 4, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_topology(TopologyKind::ErdosRenyi { p: 1e-6 }, 30, 0),
            Err(Error::Generation(_))
        ));
        assert!(Topology::new(3, [(0, 0)]).is_err());
        assert!(Topology::new(3, [(0, 1), (1, 0), (1, 2)]).is_err());
        assert!(Topology::new(4, [(0, 1), (2, 3)]).is_err());
    }

    #[test]
    fn metropolis_examples() {
        let third = 1.0 / 3.0;
        let ring = build_topology(TopologyKind::Ring, 4, 0).unwrap();
        let w = metropolis_weights(&ring);
        for i in 0..4 {
            assert!((w[(i, i)] - third).abs() < 1e-15);
            assert!((w[(i, (i + 1) % 4)] - third).abs() < 1e-15);
            assert_eq!(w[(i, (i + 2) % 4)], 0.0);
        }

        let k3 = build_topology(TopologyKind::Complete, 3, 0).unwrap();
        let w = metropolis_weights(&k3);
        assert!(w.iter().all(|v| (v - third).abs() < 1e-15));

        let star = build_topology(TopologyKind::Star, 4, 0).unwrap();
        let w = metropolis_weights(&star);
        assert!((w[(0, 0)] - 0.25).abs() < 1e-15);
        for j in 1..4 {
            assert!((w[(0, j)] - 0.25).abs() < 1e-15);
            assert!((w[(j, j)] - 0.75).abs() < 1e-15);
        }
    }

    #[test]
    fn correction_examples() {
        let ring = build_topology(TopologyKind::Ring, 4, 0).unwrap();
        let w = metropolis_weights(&ring);
        let mp = MixingPair::with_correction(w.clone(), 0.5).unwrap();
        let half = (DenseMatrix::identity(4, 4) + &w) * 0.5;
        assert!((&mp.v - half).norm() < 1e-15);
        for i in 0..4 {
            assert!((mp.v[(i, i)] - 2.0 / 3.0).abs() < 1e-15);
            assert!((mp.v[(i, (i + 1) % 4)] - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((mp.sigma2 - 1.0 / 3.0).abs() < 1e-14);

        let eye = DenseMatrix::identity(4, 4);
        let mp = MixingPair::with_correction(eye.clone(), 0.37).unwrap();
        assert!((&mp.v - eye).norm() < 1e-15);

        assert!(MixingPair::with_correction(w.clone(), 0.0).is_err());
        assert!(MixingPair::with_correction(w, 0.6).is_err());
    }

    #[test]
    fn mixing_invariants_hold_for_all_topologies() {
        let kinds = [
            TopologyKind::Ring,
            TopologyKind::Star,
            TopologyKind::Complete,
            TopologyKind::ErdosRenyi { p: 0.4 },
            TopologyKind::ErdosRenyi { p: 0.8 },
        ];
        for kind in kinds {
            for n in [2, 4, 8, 16] {
                let t = build_topology(kind, n, 11).unwrap();
                let mp = MixingPair::metropolis(&t, 0.5).unwrap();
                let ones = DenseMatrix::from_element(n, 1, 1.0);
                for m in [&mp.w, &mp.v] {
                    assert!((m * &ones - &ones).amax() <= 1e-12);
                    assert!((m - m.transpose()).norm() <= 1e-12);
                }
                assert!(mp.sigma2 < 1.0);
                let col_sums = ones.transpose() * (&mp.w - &mp.v);
                assert!(col_sums.amax() <= 1e-12);
                for &(a, b) in t.edges() {
                    assert!(mp.w[(a, b)] > 0.0);
                }
                assert_eq!(mp.total_degree(), 2 * t.edges().len());
            }
        }
    }

    #[test]
    fn joint_transition_examples() {
        let k2 = build_topology(TopologyKind::Complete, 2, 0).unwrap();
        let mp = MixingPair::metropolis(&k2, 0.5).unwrap();
        let p = build_joint_transition(&mp);
        assert_eq!(p.shape(), (4, 4));
        // Metropolis on K2 is exactly J, so the top-left block vanishes.
        assert!(p.view((0, 0), (2, 2)).norm() < 1e-15);
        let rho = spectral_radius(&p).unwrap();
        assert!(rho < 1.0);
        assert!((rho - rho_p_from_w_spectrum(&mp)).abs() < 1e-8);

        let ring = build_topology(TopologyKind::Ring, 8, 0).unwrap();
        let mp = MixingPair::metropolis(&ring, 0.5).unwrap();
        let rho = spectral_radius(&build_joint_transition(&mp)).unwrap();
        assert!(rho < 1.0);
        assert!((rho - rho_p_from_w_spectrum(&mp)).abs() < 1e-8);
    }

    #[test]
    fn spectral_radius_of_p_matches_block_oracle() {
        for kind in [TopologyKind::Star, TopologyKind::ErdosRenyi { p: 0.5 }] {
            for n in [3, 5, 8] {
                for theta in [0.1, 0.25, 0.5] {
                    let t = build_topology(kind, n, 3).unwrap();
                    let mp = MixingPair::metropolis(&t, theta).unwrap();
                    let rho = spectral_radius(&build_joint_transition(&mp)).unwrap();
                    assert!((rho - rho_p_from_w_spectrum(&mp)).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let t = build_topology(TopologyKind::ErdosRenyi { p: 0.5 }, 9, 2).unwrap();
        let text = t.to_edge_list();
        assert_eq!(text.parse::<Topology>().unwrap(), t);
        assert!("".parse::<Topology>().is_err());
        assert!("3\n0 1\n1 x\n".parse::<Topology>().is_err());
        assert!("3\n0 1 2\n".parse::<Topology>().is_err());
        let with_comment = "# ring\n3\n0 1\n1 2\n\n2 0\n";
        assert_eq!(
            with_comment.parse::<Topology>().unwrap(),
            build_topology(TopologyKind::Ring, 3, 0).unwrap()
        );
    }
}
