//! The 2D cluster-like model on a periodic triangular lattice, sink
//! statistics of its thermal ensemble, and the layered symmetric circuit
//! that disentangles every valid sink configuration to a product state.
//!
//! The model places one qubit per vertex with commuting terms
//! h_v = X_v * prod_{e in Link1(v)} CZ_e, where Link1(v) is the hexagon of
//! edges between the six neighbours of v. Removing a term (k_v = 0) creates
//! a "sink" where single excitations can terminate. If every square of a
//! grid partition contains a sink, a two-phase circuit of gates
//!
//!   U_(v,w) = exp(pi/4 h_v Z_v Z_w),   W_(v,w) = exp(pi/4 X_v Z_v Z_w)
//!
//! conjugates every remaining term to a single-qubit X: U maps
//! h_v -> -Z_v Z_w and W maps Z_v Z_w -> X_v. The conjugation is tracked
//! symbolically per term; dense matrix oracles on patches of at most 12
//! qubits validate the rewrite rules themselves.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Sink probability per vertex at inverse temperature beta:
/// p_beta = 2 / (e^{2 beta} + 1). Each k_v is 1 with probability 1 - p_beta.
pub fn p_beta(beta: f64) -> f64 {
    2.0 / ((2.0 * beta).exp() + 1.0)
}

/// Closed-form bound on the trace distance between the symmetric Gibbs
/// ensemble and the free sink ensemble on n qubits:
/// 2 q^n / (1 + q^n) with q = 1 - p_beta.
pub fn lemma1_bound(n: usize, beta: f64) -> f64 {
    let q = (1.0 - p_beta(beta)).powi(n as i32);
    2.0 * q / (1.0 + q)
}

/// Exact sum of the configuration distribution over all weights:
/// sum_l C(n, l) (1-p)^l p^(n-l), which must be 1.
pub fn prob_normalization(n: usize, beta: f64) -> f64 {
    let p = p_beta(beta);
    let mut total = 0.0f64;
    let mut binom = 1.0f64;
    for l in 0..=n {
        total += binom * (1.0 - p).powi(l as i32) * p.powi((n - l) as i32);
        binom = binom * (n - l) as f64 / (l + 1) as f64;
    }
    total
}

// ---------------------------------------------------------------------------
// Lattice
// ---------------------------------------------------------------------------

/// Neighbour offsets of the triangular lattice, in cyclic (hexagonal) order:
/// consecutive offsets differ by another offset, so consecutive neighbours
/// share an edge and the six Link1 edges form a closed hexagon.
const NEIGHBOR_OFFSETS: [(isize, isize); 6] =
    [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// Periodic triangular lattice of `lx` x `ly` vertices (flat index
/// y * lx + x), every vertex of degree 6.
#[derive(Clone, Debug)]
pub struct TriLattice {
    lx: usize,
    ly: usize,
}

impl TriLattice {
    /// Square torus of linear size L.
    pub fn new(l: usize) -> Result<Self> {
        TriLattice::rect(l, l)
    }

    /// Rectangular torus; both sides must be >= 3 so that the six
    /// neighbours of every vertex are distinct and each Link1 hexagon is a
    /// proper 6-cycle.
    pub fn rect(lx: usize, ly: usize) -> Result<Self> {
        if lx < 3 || ly < 3 {
            return Err(Error::InvalidParameter(
                "triangular torus needs both sides >= 3".into(),
            ));
        }
        Ok(TriLattice { lx, ly })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn n_vertices(&self) -> usize {
        self.lx * self.ly
    }

    pub fn index(&self, x: isize, y: isize) -> usize {
        let xm = x.rem_euclid(self.lx as isize) as usize;
        let ym = y.rem_euclid(self.ly as isize) as usize;
        ym * self.lx + xm
    }

    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v % self.lx, v / self.lx)
    }

    /// The six neighbours of v, in cyclic order.
    pub fn neighbors(&self, v: usize) -> [usize; 6] {
        let (x, y) = self.coords(v);
        let mut out = [0usize; 6];
        for (i, (dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
            out[i] = self.index(x as isize + dx, y as isize + dy);
        }
        out
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).contains(&v)
    }

    /// The hexagon Link1(v): the six edges between cyclically consecutive
    /// neighbours of v; none of them contains v.
    pub fn link1(&self, v: usize) -> [(usize, usize); 6] {
        let n = self.neighbors(v);
        let mut out = [(0usize, 0usize); 6];
        for i in 0..6 {
            out[i] = (n[i], n[(i + 1) % 6]);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Sink configurations and the grid partition
// ---------------------------------------------------------------------------

/// A term-presence vector: k_v = true means the term h_v is present;
/// k_v = false is a sink.
#[derive(Clone, Debug)]
pub struct SinkConfig {
    pub k: Vec<bool>,
}

impl SinkConfig {
    pub fn weight(&self) -> usize {
        self.k.iter().filter(|&&b| b).count()
    }

    pub fn n_sinks(&self) -> usize {
        self.k.len() - self.weight()
    }
}

/// Draw iid k_v = 1 with probability 1 - p_beta.
pub fn sample_sinks(lat: &TriLattice, beta: f64, rng: &mut impl Rng) -> SinkConfig {
    let keep = 1.0 - p_beta(beta);
    SinkConfig { k: (0..lat.n_vertices()).map(|_| rng.gen_bool(keep)).collect() }
}

/// One rectangle of the grid partition.
#[derive(Clone, Copy, Debug)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Region {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.w && y >= self.y0 && y < self.y0 + self.h
    }

    /// Diameter of the region in the triangular-lattice graph metric:
    /// steps along +x and +y do not combine, so the worst pair is opposite
    /// corners at distance (w-1) + (h-1).
    pub fn graph_diameter(&self) -> usize {
        (self.w - 1) + (self.h - 1)
    }
}

fn cuts(total: usize, l: usize) -> Vec<(usize, usize)> {
    // Stride-l cuts; the last region absorbs any remainder, so sides are in
    // [l, 2l).
    let mut out = Vec::new();
    let mut start = 0;
    while start + 2 * l <= total {
        out.push((start, l));
        start += l;
    }
    out.push((start, total - start));
    out
}

/// The grid partition with square side l (boundary rows/columns absorb the
/// remainder when l does not divide the lattice size).
pub fn grid_regions(lat: &TriLattice, l: usize) -> Result<Vec<Region>> {
    if l == 0 || l > lat.lx() || l > lat.ly() {
        return Err(Error::InvalidParameter(format!(
            "grid side {l} out of range for {}x{} lattice",
            lat.lx(),
            lat.ly()
        )));
    }
    let mut out = Vec::new();
    for &(y0, h) in &cuts(lat.ly(), l) {
        for &(x0, w) in &cuts(lat.lx(), l) {
            out.push(Region { x0, y0, w, h });
        }
    }
    Ok(out)
}

/// Default grid side l = ceil(sqrt(c log L)), clamped to the lattice.
pub fn default_square_side(lat: &TriLattice, c: f64) -> usize {
    let l = (c * (lat.lx() as f64).ln()).sqrt().ceil() as usize;
    l.clamp(1, lat.lx().min(lat.ly()))
}

/// True iff every grid region contains at least one sink.
pub fn is_valid(lat: &TriLattice, cfg: &SinkConfig, l: usize) -> Result<bool> {
    for region in grid_regions(lat, l)? {
        let mut has_sink = false;
        'scan: for y in region.y0..region.y0 + region.h {
            for x in region.x0..region.x0 + region.w {
                if !cfg.k[y * lat.lx() + x] {
                    has_sink = true;
                    break 'scan;
                }
            }
        }
        if !has_sink {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exact probability that every region holds a sink (regions are disjoint,
/// so validity factorizes): prod_B (1 - (1-p)^{|B|}). A lower bound in the
/// union-bound form 1 - sum_B (1-p)^{|B|} is implied.
pub fn valid_probability(lat: &TriLattice, l: usize, beta: f64) -> Result<f64> {
    let q = 1.0 - p_beta(beta);
    let mut prob = 1.0;
    for region in grid_regions(lat, l)? {
        prob *= 1.0 - q.powi((region.w * region.h) as i32);
    }
    Ok(prob)
}

// ---------------------------------------------------------------------------
// The disentangling circuit
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    /// exp(pi/4 h_v Z_v Z_w): maps h_v to -Z_v Z_w.
    U,
    /// exp(pi/4 X_v Z_v Z_w): maps Z_v Z_w to X_v.
    W,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gate {
    pub v: usize,
    pub w: usize,
}

#[derive(Clone, Debug)]
pub struct Layer {
    pub kind: GateKind,
    pub gates: Vec<Gate>,
    /// Partition of `gates` (by index) into groups with pairwise disjoint
    /// supports; gates within a group can run simultaneously.
    pub parallel_groups: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct Circuit {
    pub layers: Vec<Layer>,
    /// Maximum BFS distance from the chosen sink set.
    pub radius: usize,
    /// Largest graph diameter among the grid regions (an upper bound on
    /// `radius`, since every region owns a sink).
    pub max_region_diameter: usize,
}

impl Circuit {
    /// Layer count: one U pass plus one W pass over the BFS shells.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

fn gate_support(lat: &TriLattice, g: &Gate) -> Vec<usize> {
    let mut s = vec![g.v, g.w];
    s.extend_from_slice(&lat.neighbors(g.v));
    s.sort_unstable();
    s.dedup();
    s
}

fn group_gates(lat: &TriLattice, gates: &[Gate]) -> Vec<Vec<usize>> {
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new(); // (members, used vertices)
    for (i, g) in gates.iter().enumerate() {
        let support = gate_support(lat, g);
        match groups
            .iter_mut()
            .find(|(_, used)| support.iter().all(|v| !used.contains(v)))
        {
            Some((members, used)) => {
                members.push(i);
                used.extend_from_slice(&support);
            }
            None => groups.push((vec![i], support)),
        }
    }
    groups.into_iter().map(|(members, _)| members).collect()
}

/// Build the layered circuit for a valid configuration: pick one sink per
/// grid region (lowest flat index), BFS outwards from that sink set, and
/// give every vertex in shell j a gate partnered with its
/// lowest-index neighbour in shell j-1. U layers run over shells 1..r in
/// order; W layers run over the same shells in reverse, so a W gate never
/// acts after its partner's term has already been turned into an X.
pub fn build_circuit(lat: &TriLattice, cfg: &SinkConfig, l: usize) -> Result<Circuit> {
    if cfg.k.len() != lat.n_vertices() {
        return Err(Error::Dimension("configuration size mismatch".into()));
    }
    let regions = grid_regions(lat, l)?;
    let mut chosen = Vec::with_capacity(regions.len());
    for region in &regions {
        let mut sink = None;
        for y in region.y0..region.y0 + region.h {
            for x in region.x0..region.x0 + region.w {
                let v = y * lat.lx() + x;
                if !cfg.k[v] {
                    sink = Some(sink.map_or(v, |s: usize| s.min(v)));
                }
            }
        }
        chosen.push(sink.ok_or_else(|| {
            Error::Precondition(format!(
                "configuration is not valid: region at ({}, {}) has no sink",
                region.x0, region.y0
            ))
        })?);
    }

    // Multi-source BFS.
    let n = lat.n_vertices();
    let mut dist = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for &s in &chosen {
        if dist[s] == usize::MAX {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for w in lat.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    let radius = dist.iter().copied().max().unwrap_or(0);

    let mut shells: Vec<Vec<Gate>> = vec![Vec::new(); radius];
    for v in 0..n {
        let j = dist[v];
        if j == 0 {
            continue;
        }
        let partner = lat
            .neighbors(v)
            .into_iter()
            .filter(|&u| dist[u] == j - 1)
            .min()
            .expect("BFS shell j has a neighbour in shell j-1");
        shells[j - 1].push(Gate { v, w: partner });
    }

    let mut layers = Vec::with_capacity(2 * radius);
    for gates in &shells {
        layers.push(Layer {
            kind: GateKind::U,
            gates: gates.clone(),
            parallel_groups: group_gates(lat, gates),
        });
    }
    for gates in shells.iter().rev() {
        layers.push(Layer {
            kind: GateKind::W,
            gates: gates.clone(),
            parallel_groups: group_gates(lat, gates),
        });
    }

    let max_region_diameter =
        regions.iter().map(Region::graph_diameter).max().unwrap_or(0);
    Ok(Circuit { layers, radius, max_region_diameter })
}

// ---------------------------------------------------------------------------
// Symbolic conjugation
// ---------------------------------------------------------------------------

/// What one original Hamiltonian term currently looks like under
/// conjugation by the layers applied so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    /// sign * h_v.
    H { sign: i8 },
    /// sign * Z_v Z_partner.
    ZZ { partner: usize, sign: i8 },
    /// sign * X_v.
    X { sign: i8 },
}

/// Conjugate H(k) = -sum k_v h_v through the circuit, term by term, using
/// the rewrite rules h_v -> -Z_v Z_w (U) and Z_v Z_w -> X_v (W). Every
/// gate application first checks the structural side conditions under which
/// those rules hold; any violation (e.g. a gate touching a live term it
/// does not commute with, or overlapping targets within a layer) aborts.
pub fn conjugate_hamiltonian(
    lat: &TriLattice,
    cfg: &SinkConfig,
    circuit: &Circuit,
) -> Result<BTreeMap<usize, Term>> {
    let mut terms: BTreeMap<usize, Term> = (0..lat.n_vertices())
        .filter(|&v| cfg.k[v])
        .map(|v| (v, Term::H { sign: -1 }))
        .collect();

    for layer in &circuit.layers {
        // Within one layer no vertex may be the target of one gate and
        // touched (as target or partner) by another.
        let mut partner_of = vec![false; lat.n_vertices()];
        let mut target_of = vec![false; lat.n_vertices()];
        for g in &layer.gates {
            if target_of[g.v] || target_of[g.w] || partner_of[g.v] {
                return Err(Error::Precondition(format!(
                    "overlapping gates in one layer at vertices {} / {}",
                    g.v, g.w
                )));
            }
            target_of[g.v] = true;
            partner_of[g.w] = true;
        }

        for g in &layer.gates {
            apply_gate(lat, layer.kind, g, &mut terms)?;
        }
    }
    Ok(terms)
}

fn side_condition(detail: String) -> Error {
    Error::Precondition(format!("gate side condition violated: {detail}"))
}

fn apply_gate(
    lat: &TriLattice,
    kind: GateKind,
    g: &Gate,
    terms: &mut BTreeMap<usize, Term>,
) -> Result<()> {
    let (v, w) = (g.v, g.w);
    // Cross-checks against every live term the gate might not commute with.
    for (&u, term) in terms.iter() {
        match (*term, kind) {
            (Term::H { .. }, GateKind::U) => {
                // U_(v,w) commutes with h_u for all u != v, w.
                if u == w {
                    return Err(side_condition(format!(
                        "U({v},{w}) applied while partner {w} still carries an h term"
                    )));
                }
            }
            (Term::H { .. }, GateKind::W) => {
                // W's X_v hits CZ edges of Link1(u) when v neighbours u;
                // its Z_v/Z_w hit X_u when u is v or w.
                if u == w || u == v || lat.adjacent(u, v) {
                    return Err(side_condition(format!(
                        "W({v},{w}) applied near live h term at {u}"
                    )));
                }
            }
            (Term::ZZ { partner, .. }, _) => {
                // Both gate kinds act with X on vertex v only.
                if u != v && (partner == v) {
                    return Err(side_condition(format!(
                        "gate at {v} hits Z pair ({u},{partner})"
                    )));
                }
            }
            (Term::X { .. }, _) => {
                // Z_v Z_w in the generator hits X terms at v or w.
                if u == v || u == w {
                    return Err(side_condition(format!(
                        "gate ({v},{w}) hits finished X term at {u}"
                    )));
                }
            }
        }
    }

    // Rewrite the target term, if present.
    if let Some(term) = terms.get_mut(&v) {
        match (kind, *term) {
            (GateKind::U, Term::H { sign }) => {
                *term = Term::ZZ { partner: w, sign: -sign };
            }
            (GateKind::W, Term::ZZ { partner, sign }) if partner == w => {
                *term = Term::X { sign };
            }
            (k, t) => {
                return Err(side_condition(format!(
                    "{k:?} gate at {v} meets unexpected term {t:?}"
                )));
            }
        }
    }
    Ok(())
}

/// True iff the conjugated Hamiltonian is exactly { +X_v : k_v = 1 }.
pub fn matches_target(cfg: &SinkConfig, terms: &BTreeMap<usize, Term>) -> bool {
    let want: Vec<usize> = (0..cfg.k.len()).filter(|&v| cfg.k[v]).collect();
    terms.len() == want.len()
        && want
            .iter()
            .all(|v| matches!(terms.get(v), Some(Term::X { sign: 1 })))
}

// ---------------------------------------------------------------------------
// Dense oracles
// ---------------------------------------------------------------------------

/// A model patch small enough for explicit state-vector checks: `n` qubits,
/// one distinguished target/partner pair, and the terms representable on
/// the patch as (vertex, hexagon CZ edges).
#[derive(Clone, Debug)]
pub struct Patch {
    pub n: usize,
    pub target: usize,
    pub partner: usize,
    pub terms: Vec<(usize, Vec<(usize, usize)>)>,
}

impl Patch {
    /// 7-qubit star: the target at the centre, its six neighbours on the
    /// ring, the Link1 hexagon closed around them. Only the centre term is
    /// representable.
    pub fn star() -> Self {
        let hex: Vec<(usize, usize)> = (1..=6).map(|i| (i, i % 6 + 1)).collect();
        Patch { n: 7, target: 0, partner: 1, terms: vec![(0, hex)] }
    }

    /// A full 3 x 4 triangular torus (12 qubits): every term representable,
    /// so cross-commutation of a gate with all other terms can be checked.
    pub fn torus_3x4() -> Self {
        let lat = TriLattice::rect(3, 4).expect("valid size");
        let terms = (0..lat.n_vertices())
            .map(|v| (v, lat.link1(v).to_vec()))
            .collect();
        Patch { n: 12, target: 0, partner: lat.neighbors(0)[0], terms }
    }

    fn term(&self, v: usize) -> Option<&(usize, Vec<(usize, usize)>)> {
        self.terms.iter().find(|(u, _)| *u == v)
    }
}

/// State-vector operators on n <= 12 qubits (dimension <= 4096), applied
/// column by column; all operators here are real.
struct Dense {
    dim: usize,
}

type Vecf = Vec<f64>;

impl Dense {
    fn new(n: usize) -> Self {
        Dense { dim: 1 << n }
    }

    fn apply_x(&self, q: usize, psi: &Vecf) -> Vecf {
        (0..self.dim).map(|s| psi[s ^ (1 << q)]).collect()
    }

    fn apply_zz(&self, a: usize, b: usize, psi: &Vecf) -> Vecf {
        (0..self.dim)
            .map(|s| {
                let sign = if (s >> a) & 1 == 1 { -1.0 } else { 1.0 }
                    * if (s >> b) & 1 == 1 { -1.0 } else { 1.0 };
                sign * psi[s]
            })
            .collect()
    }

    /// Diagonal hexagon factor of a term: prod over CZ edges of
    /// (-1)^{s_a s_b}.
    fn cz_sign(edges: &[(usize, usize)], s: usize) -> f64 {
        let mut sign = 1.0;
        for &(a, b) in edges {
            if (s >> a) & 1 == 1 && (s >> b) & 1 == 1 {
                sign = -sign;
            }
        }
        sign
    }

    fn apply_h(&self, v: usize, edges: &[(usize, usize)], psi: &Vecf) -> Vecf {
        // h = X_v * D with D diagonal and independent of qubit v:
        // (h psi)[r] = D(r ^ e_v) psi[r ^ e_v] = D(r) psi[r ^ e_v].
        (0..self.dim)
            .map(|r| Dense::cz_sign(edges, r) * psi[r ^ (1 << v)])
            .collect()
    }

    /// exp(pi/4 A) = (I + A)/sqrt(2) for any A with A^2 = -I; `dagger`
    /// flips the sign of A.
    fn apply_rotation(&self, a: impl Fn(&Vecf) -> Vecf, dagger: bool, psi: &Vecf) -> Vecf {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let apsi = a(psi);
        let s = if dagger { -c } else { c };
        (0..self.dim).map(|i| c * psi[i] + s * apsi[i]).collect()
    }

    fn apply_global_x(&self, psi: &Vecf) -> Vecf {
        (0..self.dim).map(|s| psi[self.dim - 1 - s]).collect()
    }

    fn basis(&self, s: usize) -> Vecf {
        let mut v = vec![0.0; self.dim];
        v[s] = 1.0;
        v
    }

    fn max_diff(a: &Vecf, b: &Vecf) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Max over all basis columns of the difference between two operator
    /// actions.
    fn op_distance(
        &self,
        f: impl Fn(&Vecf) -> Vecf,
        g: impl Fn(&Vecf) -> Vecf,
    ) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..self.dim {
            let e = self.basis(s);
            worst = worst.max(Dense::max_diff(&f(&e), &g(&e)));
        }
        worst
    }
}

/// Validate the rewrite rules by explicit linear algebra on a small patch:
/// U h_v U+ = -Z_v Z_w, W Z_v Z_w W+ = X_v, the commutations the
/// construction relies on, and symmetry of both gates, all to operator
/// tolerance `tol`.
pub fn dense_oracle(patch: &Patch, tol: f64) -> Result<bool> {
    if patch.n > 12 {
        return Err(Error::InvalidParameter("patch larger than 12 qubits".into()));
    }
    let d = Dense::new(patch.n);
    let (v, w) = (patch.target, patch.partner);
    let (_, hv_edges) = patch
        .term(v)
        .ok_or_else(|| Error::Precondition("target term not on patch".into()))?;

    let hv = |psi: &Vecf| d.apply_h(v, hv_edges, psi);
    let zz = |psi: &Vecf| d.apply_zz(v, w, psi);
    let u_gen = |psi: &Vecf| hv(&zz(psi));
    let w_gen = |psi: &Vecf| d.apply_x(v, &zz(psi));
    let u = |dag: bool, psi: &Vecf| d.apply_rotation(u_gen, dag, psi);
    let wg = |dag: bool, psi: &Vecf| d.apply_rotation(w_gen, dag, psi);

    let mut ok = true;

    // U h_v U+ = -Z_v Z_w.
    ok &= d.op_distance(
        |psi| u(false, &hv(&u(true, psi))),
        |psi| zz(psi).iter().map(|x| -x).collect(),
    ) <= tol;

    // W Z_v Z_w W+ = X_v.
    ok &= d.op_distance(
        |psi| wg(false, &zz(&wg(true, psi))),
        |psi| d.apply_x(v, psi),
    ) <= tol;

    // {h_v, Z_v Z_w} = 0: the excitation-creation relation.
    ok &= d.op_distance(
        |psi| {
            let ab = hv(&zz(psi));
            let ba = zz(&hv(psi));
            (0..ab.len()).map(|i| ab[i] + ba[i]).collect()
        },
        |psi| vec![0.0; psi.len()],
    ) <= tol;

    // Both gates are symmetric: [U, S] = [W, S] = 0 with S the global X.
    ok &= d.op_distance(
        |psi| u(false, &d.apply_global_x(psi)),
        |psi| d.apply_global_x(&u(false, psi)),
    ) <= tol;
    ok &= d.op_distance(
        |psi| wg(false, &d.apply_global_x(psi)),
        |psi| d.apply_global_x(&wg(false, psi)),
    ) <= tol;

    // U commutes with every other representable term h_l, l != v, w
    // (including distant ones), and both gates commute with Z pairs away
    // from v.
    for (l, edges) in &patch.terms {
        if *l == v || *l == w {
            continue;
        }
        let hl = |psi: &Vecf| d.apply_h(*l, edges, psi);
        ok &= d.op_distance(
            |psi| u(false, &hl(psi)),
            |psi| hl(&u(false, psi)),
        ) <= tol;
        // [h_l, Z_v Z_w] = 0 for l != v.
        ok &= d.op_distance(|psi| hl(&zz(psi)), |psi| zz(&hl(psi))) <= tol;
    }
    for a in 0..patch.n {
        for b in (a + 1)..patch.n {
            if a == v || b == v {
                continue;
            }
            let zab = |psi: &Vecf| d.apply_zz(a, b, psi);
            ok &= d.op_distance(
                |psi| wg(false, &zab(psi)),
                |psi| zab(&wg(false, psi)),
            ) <= tol;
        }
    }

    Ok(ok)
}

// ---------------------------------------------------------------------------
// Exact thermal comparison on the 3 x 3 torus
// ---------------------------------------------------------------------------

fn apply_h_to_matrix(d: usize, v: usize, edges: &[(usize, usize)], m: &DMatrix<f64>) -> DMatrix<f64> {
    // (h M)[r, c] = D(r) M[r ^ e_v, c]; the hexagon diagonal D does not
    // involve qubit v.
    let dim = 1usize << d;
    let mut out = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        let sign = Dense::cz_sign(edges, r);
        let rp = r ^ (1 << v);
        for c in 0..dim {
            out[(r, c)] = sign * m[(rp, c)];
        }
    }
    out
}

fn project_symmetric(m: &DMatrix<f64>) -> DMatrix<f64> {
    // P M P with P = (I + S)/2 and S the global bit flip.
    let dim = m.nrows();
    let mut out = DMatrix::zeros(dim, dim);
    let flip = dim - 1;
    for r in 0..dim {
        for c in 0..dim {
            out[(r, c)] = 0.25
                * (m[(r, c)] + m[(r ^ flip, c)] + m[(r, c ^ flip)] + m[(r ^ flip, c ^ flip)]);
        }
    }
    out
}

fn trace_norm(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).sum()
}

/// Exact 512-dimensional comparison on the 3 x 3 torus: trace distance
/// between the symmetric Gibbs ensemble and the free sink ensemble, paired
/// with the closed-form bound 2 Pr(k=1...1) / (1 + Pr(k=1...1)).
pub fn lemma1_gap(l: usize, beta: f64) -> Result<(f64, f64)> {
    if l != 3 {
        return Err(Error::InvalidParameter(
            "exact thermal comparison is only feasible at linear size 3".into(),
        ));
    }
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::InvalidParameter("beta must be >= 0".into()));
    }
    let lat = TriLattice::new(3)?;
    let n = lat.n_vertices();
    let dim = 1usize << n;
    let t = beta.tanh();
    let p = p_beta(beta);
    let pr_k1 = (1.0 - p).powi(n as i32);

    // Gibbs state rho' = prod_v (I + tanh(beta) h_v) / 2^n, and the full
    // ground-space mixture rho(k=1...1) = prod_v (I + h_v) / 2^n.
    let mut gibbs = DMatrix::identity(dim, dim);
    let mut ground = gibbs.clone();
    for v in 0..n {
        let edges = lat.link1(v);
        gibbs = &gibbs + apply_h_to_matrix(n, v, &edges, &gibbs) * t;
        ground = &ground + apply_h_to_matrix(n, v, &edges, &ground);
    }
    gibbs /= dim as f64;
    ground /= dim as f64;

    // Symmetric Gibbs ensemble: P rho' P renormalized.
    let projected = project_symmetric(&gibbs);
    let rho = &projected / projected.trace();

    // Free ensemble: sum_k Pr(k) rhobar(k) with rhobar(k) = 2 P rho(k) P
    // for k != 1...1 and rhobar = rho for the full configuration; summed in
    // closed form as 2 P rho' P + Pr(k1) (rho(k1) - 2 P rho(k1) P).
    let rho_f = &projected * 2.0 + (&ground - project_symmetric(&ground) * 2.0) * pr_k1;

    let distance = trace_norm(&(rho - rho_f));
    Ok((distance, 2.0 * pr_k1 / (1.0 + pr_k1)))
}
