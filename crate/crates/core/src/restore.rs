//! Symmetry restoration by error correction: iid Z noise on both qubit
//! species, 1-form syndrome extraction, matching decoders, and logical error
//! rates along the Nishimori conversion p = 1/(1 + e^{2/T}).
//!
//! Noise on edge qubits produces a 1-chain c1 whose boundary is a set of
//! vertex defects; noise on face qubits produces a dual 1-chain c1' whose
//! coboundary marks cube defects. A decoder pairs up defects and connects
//! the pairs with shortest recovery chains; correction succeeds iff both
//! residuals (error xor recovery) are homologically trivial cycles. The two
//! sublattices are decoded independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::homology::{CellKind, Chain, CubicLattice, HomologyClass, Side, AXES};
use crate::runio::split_seed;

/// One iid noise draw over both qubit species.
#[derive(Clone, Debug)]
pub struct NoiseSample {
    /// Errors on edge qubits (a primal 1-chain).
    pub c1: Chain,
    /// Errors on face qubits (a dual 1-chain).
    pub c1p: Chain,
    /// Per-qubit flip probability used to draw this sample.
    pub p: f64,
}

/// Defect sets read off from violated stabilizers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Syndrome {
    /// Endpoints of the edge-error chain (0-chain of vertices).
    pub vertex_defects: Chain,
    /// Coboundary endpoints of the face-error chain (set of cubes, i.e.
    /// dual vertices).
    pub cube_defects: Chain,
}

/// Defect-pairing strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Greedy cluster growth: odd-parity defect clusters grow outward in
    /// half-bond steps until every cluster has even parity, then defects are
    /// paired by peeling a spanning forest of the grown region. Linear time
    /// and close to minimum-weight matching in correction quality.
    Greedy,
    /// Exact minimum-weight perfect matching by branch-and-bound;
    /// limited to at most 14 defects per sublattice.
    Exact,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Exact => "exact",
        }
    }
}

/// Outcome of decoding one noise sample.
#[derive(Clone, Debug)]
pub struct DecodeResult {
    /// Recovery chain on edges; boundary(gamma1) equals the vertex defects.
    pub gamma1: Chain,
    /// Recovery chain on faces; coboundary(gamma1p) equals the cube defects.
    pub gamma1p: Chain,
    /// Homology classes of the two residual cycles c1 xor gamma1 and
    /// c1' xor gamma1p.
    pub residual_class_edges: HomologyClass,
    pub residual_class_faces: HomologyClass,
    /// Success per sublattice: the residual is a trivial cycle.
    pub success_edges: bool,
    pub success_faces: bool,
    /// Overall success: both sublattices succeed.
    pub success: bool,
}

/// Noise rate equivalent to temperature T on the Nishimori line
/// e^{-2/T} = p/(1-p), i.e. p = 1/(1 + e^{2/T}).
pub fn nishimori_p(t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidParameter(format!("temperature must be positive, got {t}")));
    }
    Ok(1.0 / (1.0 + (2.0 / t).exp()))
}

/// Draw iid Bernoulli(p) errors over all 3d^3 edges and 3d^3 faces.
pub fn sample_noise(lat: &CubicLattice, p: f64, rng: &mut ChaCha20Rng) -> Result<NoiseSample> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "flip probability must lie in [0, 1/2], got {p}"
        )));
    }
    let mut c1 = Chain::empty(lat, Side::Primal, CellKind::Edge);
    for e in 0..lat.n_cells(CellKind::Edge) {
        if rng.gen_bool(p) {
            c1.flip(e);
        }
    }
    let mut c1p = Chain::empty(lat, Side::Dual, CellKind::Face);
    for f in 0..lat.n_cells(CellKind::Face) {
        if rng.gen_bool(p) {
            c1p.flip(f);
        }
    }
    Ok(NoiseSample { c1, c1p, p })
}

/// Read off both defect sets. Cycles contribute nothing: they are exactly
/// the syndrome-invisible 1-form-symmetric sector.
pub fn extract_syndrome(lat: &CubicLattice, noise: &NoiseSample) -> Syndrome {
    let vertex_defects = lat.boundary(&noise.c1).expect("edge chain");
    let cube_defects = lat.dual_boundary(&noise.c1p).expect("face chain");
    debug_assert_eq!(vertex_defects.weight() % 2, 0);
    debug_assert_eq!(cube_defects.weight() % 2, 0);
    Syndrome { vertex_defects, cube_defects }
}

/// Torus taxicab distance between two same-kind cells' base coordinates.
fn defect_dist(lat: &CubicLattice, kind: CellKind, a: usize, b: usize) -> usize {
    let d = lat.d();
    let (_, ax, ay, az) = lat.cell_coords(kind, a);
    let (_, bx, by, bz) = lat.cell_coords(kind, b);
    let t = |u: usize, v: usize| {
        let diff = (u + d - v) % d;
        diff.min(d - diff)
    };
    t(ax, bx) + t(ay, by) + t(az, bz)
}

/// Bond graph on which defects live: nodes are vertices (edge-error sector)
/// or cubes (face-error sector); bonds are the qubit cells joining them.
struct BondGraph {
    n_nodes: usize,
    /// bond id (flat cell index) -> the two nodes it joins.
    ends: Vec<(usize, usize)>,
    /// node -> (bond id, neighbor node).
    incident: Vec<Vec<(usize, usize)>>,
}

impl BondGraph {
    fn new(lat: &CubicLattice, kind: CellKind) -> Self {
        let (n_nodes, n_bonds) = match kind {
            CellKind::Vertex => (lat.n_cells(CellKind::Vertex), lat.n_cells(CellKind::Edge)),
            CellKind::Cube => (lat.n_cells(CellKind::Cube), lat.n_cells(CellKind::Face)),
            _ => unreachable!("defects live on vertices or cubes"),
        };
        let mut ends = Vec::with_capacity(n_bonds);
        let mut incident = vec![Vec::with_capacity(6); n_nodes];
        for b in 0..n_bonds {
            let (u, v) = match kind {
                CellKind::Vertex => {
                    let e = lat.edge_endpoints(b);
                    (e[0], e[1])
                }
                CellKind::Cube => {
                    let cubes: Vec<usize> = lat
                        .dual_boundary(&Chain::single(lat, Side::Dual, CellKind::Face, b))
                        .expect("face chain")
                        .iter_cells()
                        .collect();
                    (cubes[0], cubes[1])
                }
                _ => unreachable!(),
            };
            ends.push((u, v));
            incident[u].push((b, v));
            incident[v].push((b, u));
        }
        BondGraph { n_nodes, ends, incident }
    }
}

/// Union-find over nodes with per-root defect parity and growth boundary.
struct Clusters {
    parent: Vec<usize>,
    rank: Vec<u8>,
    parity: Vec<bool>,
    boundary: Vec<Vec<usize>>,
}

impl Clusters {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        let (big, small) = if self.rank[ra] >= self.rank[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        if self.rank[big] == self.rank[small] {
            self.rank[big] += 1;
        }
        self.parity[big] ^= self.parity[small];
        let moved = std::mem::take(&mut self.boundary[small]);
        self.boundary[big].extend(moved);
        big
    }
}

/// Greedy cluster-growth correction for one defect sector: grow odd-parity
/// clusters in half-bond steps, merge on contact, and peel a spanning forest
/// of the grown region to pair the defects. Returns a correction chain whose
/// boundary is exactly the defect set.
fn cluster_decode(lat: &CubicLattice, kind: CellKind, defect_chain: &Chain) -> Chain {
    let (side, bond_kind) = match kind {
        CellKind::Vertex => (Side::Primal, CellKind::Edge),
        CellKind::Cube => (Side::Dual, CellKind::Face),
        _ => unreachable!("defects live on vertices or cubes"),
    };
    let mut correction = Chain::empty(lat, side, bond_kind);
    if defect_chain.is_empty() {
        return correction;
    }
    let graph = BondGraph::new(lat, kind);
    let mut defect = vec![false; graph.n_nodes];
    for v in defect_chain.iter_cells() {
        defect[v] = true;
    }

    let mut cl = Clusters {
        parent: (0..graph.n_nodes).collect(),
        rank: vec![0; graph.n_nodes],
        parity: defect.clone(),
        boundary: vec![Vec::new(); graph.n_nodes],
    };
    // Nodes already absorbed into some cluster (their incident bonds are on a
    // boundary list).
    let mut absorbed = vec![false; graph.n_nodes];
    let mut roots: Vec<usize> = Vec::new();
    for v in defect_chain.iter_cells() {
        absorbed[v] = true;
        cl.boundary[v] = graph.incident[v].iter().map(|&(b, _)| b).collect();
        roots.push(v);
    }
    // growth[b] in {0, 1, 2}; a bond is part of the grown region at 2.
    let mut growth = vec![0u8; graph.ends.len()];

    loop {
        roots.sort_unstable();
        roots.dedup();
        roots.retain(|&r| cl.find(r) == r);
        let odd: Vec<usize> = roots.iter().copied().filter(|&r| cl.parity[r]).collect();
        if odd.is_empty() {
            break;
        }
        for r in odd {
            let root = cl.find(r);
            let bonds = std::mem::take(&mut cl.boundary[root]);
            let mut keep = Vec::with_capacity(bonds.len());
            for b in bonds {
                if growth[b] == 2 {
                    continue;
                }
                growth[b] += 1;
                if growth[b] < 2 {
                    keep.push(b);
                    continue;
                }
                let (u, v) = graph.ends[b];
                for w in [u, v] {
                    if !absorbed[w] {
                        absorbed[w] = true;
                        let root = cl.find(if w == u { v } else { u });
                        let joined = cl.union(root, w);
                        roots.push(joined);
                        let fresh: Vec<usize> =
                            graph.incident[w].iter().map(|&(bb, _)| bb).collect();
                        cl.boundary[joined].extend(fresh);
                    }
                }
                let merged = cl.union(u, v);
                roots.push(merged);
            }
            let root_now = cl.find(r);
            cl.boundary[root_now].extend(keep);
        }
    }

    // Peel: BFS forest over fully grown bonds, then resolve defects from the
    // leaves inward. Every tree component has even defect parity, so all
    // defects pair up.
    let mut erasure_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph.n_nodes];
    for (b, &(u, v)) in graph.ends.iter().enumerate() {
        if growth[b] == 2 {
            erasure_adj[u].push((b, v));
            erasure_adj[v].push((b, u));
        }
    }
    let mut visited = vec![false; graph.n_nodes];
    let mut order: Vec<(usize, usize, usize)> = Vec::new(); // (node, parent node, parent bond)
    for start in 0..graph.n_nodes {
        if visited[start] || !absorbed[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(b, v) in &erasure_adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    order.push((v, u, b));
                    queue.push_back(v);
                }
            }
        }
    }
    for &(node, parent, bond) in order.iter().rev() {
        if defect[node] {
            correction.flip(bond);
            defect[node] = false;
            defect[parent] ^= true;
        }
    }
    debug_assert!(defect.iter().all(|&x| !x), "even parity pairs every defect");
    correction
}

/// Exact minimum-weight perfect matching by branch-and-bound over pairings
/// of the lowest-index free defect.
fn match_exact(lat: &CubicLattice, kind: CellKind, defects: &[usize]) -> Result<Vec<(usize, usize)>> {
    let n = defects.len();
    if n > 14 {
        return Err(Error::InvalidParameter(format!(
            "exact matching supports at most 14 defects, got {n}"
        )));
    }
    let dist: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).map(|j| defect_dist(lat, kind, defects[i], defects[j])).collect())
        .collect();
    let mut best_cost = usize::MAX;
    let mut best: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; n];
    let mut cur: Vec<(usize, usize)> = Vec::new();

    fn recurse(
        dist: &[Vec<usize>],
        used: &mut [bool],
        cur: &mut Vec<(usize, usize)>,
        cost: usize,
        best_cost: &mut usize,
        best: &mut Vec<(usize, usize)>,
    ) {
        let Some(i) = used.iter().position(|&u| !u) else {
            if cost < *best_cost {
                *best_cost = cost;
                *best = cur.clone();
            }
            return;
        };
        used[i] = true;
        for j in (i + 1)..used.len() {
            if used[j] {
                continue;
            }
            let c = cost + dist[i][j];
            if c >= *best_cost {
                continue;
            }
            used[j] = true;
            cur.push((i, j));
            recurse(dist, used, cur, c, best_cost, best);
            cur.pop();
            used[j] = false;
        }
        used[i] = false;
    }

    recurse(&dist, &mut used, &mut cur, 0, &mut best_cost, &mut best);
    Ok(best.into_iter().map(|(i, j)| (defects[i], defects[j])).collect())
}

/// Shortest recovery path between two vertex defects: per axis, walk the
/// shorter way around the torus (ties resolved toward positive direction),
/// in axis order x, then y, then z. Stepping from coordinate c to c+1 along
/// axis m crosses the edge of direction m based at the pre-step position;
/// stepping to c-1 crosses the edge based one below.
fn vertex_path(lat: &CubicLattice, a: usize, b: usize) -> Chain {
    let d = lat.d() as isize;
    let (_, ax, ay, az) = lat.cell_coords(CellKind::Vertex, a);
    let (_, bx, by, bz) = lat.cell_coords(CellKind::Vertex, b);
    let mut pos = [ax as isize, ay as isize, az as isize];
    let target = [bx as isize, by as isize, bz as isize];
    let mut path = Chain::empty(lat, Side::Primal, CellKind::Edge);
    for axis in AXES {
        let forward = (target[axis] - pos[axis]).rem_euclid(d);
        let step: isize = if forward * 2 <= d { 1 } else { -1 };
        while pos[axis] != target[axis] {
            if step == 1 {
                path.flip(lat.cell_index(CellKind::Edge, axis, pos[0], pos[1], pos[2]));
            } else {
                let mut q = pos;
                q[axis] -= 1;
                path.flip(lat.cell_index(CellKind::Edge, axis, q[0], q[1], q[2]));
            }
            pos[axis] = (pos[axis] + step).rem_euclid(d);
        }
    }
    path
}

/// Shortest recovery path between two cube defects, as faces: stepping the
/// cube position from c to c+1 along axis m crosses the m-normal face based
/// at the post-step position; stepping down crosses the face at the pre-step
/// position.
fn cube_path(lat: &CubicLattice, a: usize, b: usize) -> Chain {
    let d = lat.d() as isize;
    let (_, ax, ay, az) = lat.cell_coords(CellKind::Cube, a);
    let (_, bx, by, bz) = lat.cell_coords(CellKind::Cube, b);
    let mut pos = [ax as isize, ay as isize, az as isize];
    let target = [bx as isize, by as isize, bz as isize];
    let mut path = Chain::empty(lat, Side::Dual, CellKind::Face);
    for axis in AXES {
        let forward = (target[axis] - pos[axis]).rem_euclid(d);
        let step: isize = if forward * 2 <= d { 1 } else { -1 };
        while pos[axis] != target[axis] {
            if step == 1 {
                let mut q = pos;
                q[axis] += 1;
                path.flip(lat.cell_index(CellKind::Face, axis, q[0], q[1], q[2]));
            } else {
                path.flip(lat.cell_index(CellKind::Face, axis, pos[0], pos[1], pos[2]));
            }
            pos[axis] = (pos[axis] + step).rem_euclid(d);
        }
    }
    path
}

/// Recovery chains for a syndrome: pair defects and connect each pair by a
/// shortest path. Aborts on odd defect counts (an invariant violation) or
/// when the exact matcher's instance limit is exceeded.
pub fn recovery_chains(
    lat: &CubicLattice,
    syndrome: &Syndrome,
    method: Method,
) -> Result<(Chain, Chain)> {
    let check_even = |defect_chain: &Chain| -> Result<()> {
        if !defect_chain.weight().is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "odd number of defects ({}) on the torus",
                defect_chain.weight()
            )));
        }
        Ok(())
    };
    check_even(&syndrome.vertex_defects)?;
    check_even(&syndrome.cube_defects)?;

    let (gamma1, gamma1p) = match method {
        Method::Greedy => (
            cluster_decode(lat, CellKind::Vertex, &syndrome.vertex_defects),
            cluster_decode(lat, CellKind::Cube, &syndrome.cube_defects),
        ),
        Method::Exact => {
            let pair_up = |defect_chain: &Chain, kind: CellKind| {
                let defects: Vec<usize> = defect_chain.iter_cells().collect();
                match_exact(lat, kind, &defects)
            };
            let mut g1 = Chain::empty(lat, Side::Primal, CellKind::Edge);
            for (a, b) in pair_up(&syndrome.vertex_defects, CellKind::Vertex)? {
                g1.xor_assign(&vertex_path(lat, a, b));
            }
            let mut g1p = Chain::empty(lat, Side::Dual, CellKind::Face);
            for (a, b) in pair_up(&syndrome.cube_defects, CellKind::Cube)? {
                g1p.xor_assign(&cube_path(lat, a, b));
            }
            (g1, g1p)
        }
    };
    debug_assert_eq!(lat.boundary(&gamma1).unwrap(), syndrome.vertex_defects);
    debug_assert_eq!(lat.dual_boundary(&gamma1p).unwrap(), syndrome.cube_defects);
    Ok((gamma1, gamma1p))
}

/// Decode one noise sample end to end: extract the syndrome, build recovery
/// chains, and classify both residual cycles. Success per sublattice means
/// the residual is homologically trivial.
pub fn decode(lat: &CubicLattice, noise: &NoiseSample, method: Method) -> Result<DecodeResult> {
    let syndrome = extract_syndrome(lat, noise);
    let (gamma1, gamma1p) = recovery_chains(lat, &syndrome, method)?;
    let residual_edges = noise.c1.xor(&gamma1);
    let residual_faces = noise.c1p.xor(&gamma1p);
    let residual_class_edges = lat.homology_class(&residual_edges)?;
    let residual_class_faces = lat.homology_class(&residual_faces)?;
    let success_edges = residual_class_edges.is_trivial();
    let success_faces = residual_class_faces.is_trivial();
    Ok(DecodeResult {
        gamma1,
        gamma1p,
        residual_class_edges,
        residual_class_faces,
        success_edges,
        success_faces,
        success: success_edges && success_faces,
    })
}

/// Logical-error-rate estimate over independent trials.
#[derive(Clone, Copy, Debug)]
pub struct LogicalRate {
    /// Fraction of trials where either sublattice failed.
    pub fail_rate: f64,
    /// Binomial standard error of `fail_rate`.
    pub stderr: f64,
    pub fail_rate_edges: f64,
    pub fail_rate_faces: f64,
    pub n_trials: usize,
}

/// Run `n_trials` independent noise draws at rate p and decode each one;
/// trials are parallel with per-trial seeds split from `seed`, so the result
/// is independent of scheduling.
pub fn logical_error_rate(
    d: usize,
    p: f64,
    n_trials: usize,
    method: Method,
    seed: u64,
) -> Result<LogicalRate> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("n_trials must be positive".into()));
    }
    let lat = CubicLattice::new(d)?;
    let counts = (0..n_trials)
        .into_par_iter()
        .map(|i| -> Result<(u32, u32, u32)> {
            let mut rng = ChaCha20Rng::seed_from_u64(split_seed(seed, i as u64));
            let noise = sample_noise(&lat, p, &mut rng)?;
            let r = decode(&lat, &noise, method)?;
            Ok((!r.success as u32, !r.success_edges as u32, !r.success_faces as u32))
        })
        .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;
    let n = n_trials as f64;
    let rate = counts.0 as f64 / n;
    Ok(LogicalRate {
        fail_rate: rate,
        stderr: (rate * (1.0 - rate) / n).sqrt(),
        fail_rate_edges: counts.1 as f64 / n,
        fail_rate_faces: counts.2 as f64 / n,
        n_trials,
    })
}
