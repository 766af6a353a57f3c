//! The 1-form-symmetric Gibbs ensemble of the 3D cluster model as a product
//! loop gas over pairs (gamma, gamma'): a primal 1-cycle of edges and a dual
//! 1-cycle of faces. The distribution is
//!
//!   Pr_beta(gamma, gamma') = e^{-2 beta (|gamma| + |gamma'|)} / Z,
//!
//! which factorizes over the two cycles. This module samples it exactly at
//! d = 2 by full enumeration of the rank-17 cycle space per factor, and by
//! Metropolis MCMC otherwise; it also decomposes cycles into simple loops and
//! evaluates the analytic non-backtracking-walk tail bound on large loops.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::homology::{CellKind, Chain, CubicLattice, Side, AXES};

/// A joint excitation configuration: gamma is a primal 1-cycle (edges),
/// gamma' a dual 1-cycle (faces). Both cycle conditions hold at all times;
/// construction validates them and every sampler move preserves them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopConfig {
    gamma: Chain,
    gamma_prime: Chain,
}

impl LoopConfig {
    pub fn new(lat: &CubicLattice, gamma: Chain, gamma_prime: Chain) -> Result<Self> {
        if gamma.kind() != CellKind::Edge || gamma.side() != Side::Primal {
            return Err(Error::Mismatch("gamma must be a primal edge chain".into()));
        }
        if gamma_prime.kind() != CellKind::Face || gamma_prime.side() != Side::Dual {
            return Err(Error::Mismatch("gamma' must be a dual face chain".into()));
        }
        if !lat.is_cycle(&gamma) {
            return Err(Error::Precondition("gamma is not a 1-cycle".into()));
        }
        if !lat.is_dual_cycle(&gamma_prime) {
            return Err(Error::Precondition("gamma' is not a dual 1-cycle".into()));
        }
        Ok(LoopConfig { gamma, gamma_prime })
    }

    /// The ground configuration: both cycles empty.
    pub fn ground(lat: &CubicLattice) -> Self {
        LoopConfig {
            gamma: Chain::empty(lat, Side::Primal, CellKind::Edge),
            gamma_prime: Chain::empty(lat, Side::Dual, CellKind::Face),
        }
    }

    pub fn gamma(&self) -> &Chain {
        &self.gamma
    }

    pub fn gamma_prime(&self) -> &Chain {
        &self.gamma_prime
    }
}

/// Excitation energy 2(|gamma| + |gamma'|) with unit coupling.
pub fn energy(cfg: &LoopConfig) -> usize {
    2 * (cfg.gamma.weight() + cfg.gamma_prime.weight())
}

/// Sampler parameters. `beta` may be `f64::INFINITY` (zero temperature:
/// the sampler then rejects every weight-increasing move).
#[derive(Clone, Copy, Debug)]
pub struct EnsembleParams {
    pub beta: f64,
    pub d: usize,
    pub seed: u64,
    pub sweeps: usize,
    pub burn_in: usize,
}

impl EnsembleParams {
    pub fn new(beta: f64, d: usize, seed: u64) -> Result<Self> {
        let p = EnsembleParams { beta, d, seed, sweeps: 10_000, burn_in: 1_000 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be nonnegative, got {}",
                self.beta
            )));
        }
        if self.d < 2 {
            return Err(Error::InvalidParameter(format!(
                "lattice size d must be at least 2, got {}",
                self.d
            )));
        }
        Ok(())
    }
}

/// Boltzmann factor for a configuration of the given total weight
/// |gamma| + |gamma'| (or a per-factor weight). Handles beta = infinity:
/// weight 0 always has factor 1.
pub fn boltzmann(beta: f64, weight: usize) -> f64 {
    if weight == 0 {
        1.0
    } else {
        (-2.0 * beta * weight as f64).exp()
    }
}

/// Metropolis acceptance probability min(1, e^{-beta dE}), safe at
/// beta = infinity.
pub fn metropolis_accept(beta: f64, delta_energy: f64) -> f64 {
    if delta_energy <= 0.0 {
        1.0
    } else {
        (-beta * delta_energy).exp()
    }
}

/// Which factor of the product distribution a move targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Gamma,
    GammaPrime,
}

/// Metropolis sampler for the loop gas. One sampler per worker thread, each
/// owning its RNG and configuration; the lattice is shared read-only.
///
/// Move mix per proposal: 90% local (XOR a plaquette boundary into gamma, or
/// the four cofaces of an edge into gamma'), 10% winding (XOR a straight
/// wrapping line or dual line). All moves are involutions with a
/// state-independent proposal menu, so the proposal kernel is symmetric and
/// the Metropolis rule alone enforces detailed balance.
pub struct Sampler<'a> {
    lat: &'a CubicLattice,
    beta: f64,
    cfg: LoopConfig,
    rng: ChaCha20Rng,
    /// Boundary of each face: 4 edge indices (local gamma moves).
    face_rims: Vec<[usize; 4]>,
    /// Cofaces of each edge: 4 face indices (local gamma' moves).
    edge_cofaces: Vec<[usize; 4]>,
    /// All 3d^2 straight wrapping lines (edge supports).
    winding_lines: Vec<Vec<usize>>,
    /// All 3d^2 straight wrapping dual lines (face supports).
    winding_dual_lines: Vec<Vec<usize>>,
    proposals: u64,
    accepts: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(lat: &'a CubicLattice, params: &EnsembleParams) -> Result<Self> {
        params.validate()?;
        if params.d != lat.d() {
            return Err(Error::Mismatch(format!(
                "params.d = {} but lattice has d = {}",
                params.d,
                lat.d()
            )));
        }
        let n_faces = lat.n_cells(CellKind::Face);
        let mut face_rims = Vec::with_capacity(n_faces);
        for f in 0..n_faces {
            let b = lat.boundary(&Chain::single(lat, Side::Primal, CellKind::Face, f))?;
            let cells: Vec<usize> = b.iter_cells().collect();
            face_rims.push([cells[0], cells[1], cells[2], cells[3]]);
        }
        let n_edges = lat.n_cells(CellKind::Edge);
        let mut edge_cofaces = Vec::with_capacity(n_edges);
        for e in 0..n_edges {
            let b = lat.dual_boundary(&Chain::single(lat, Side::Primal, CellKind::Edge, e))?;
            let cells: Vec<usize> = b.iter_cells().collect();
            edge_cofaces.push([cells[0], cells[1], cells[2], cells[3]]);
        }
        let mut winding_lines = Vec::new();
        let mut winding_dual_lines = Vec::new();
        for axis in AXES {
            for t0 in 0..lat.d() {
                for t1 in 0..lat.d() {
                    winding_lines.push(
                        lat.wrapping_line(Side::Primal, axis, [t0, t1]).iter_cells().collect(),
                    );
                    winding_dual_lines.push(
                        lat.wrapping_dual_line(Side::Dual, axis, [t0, t1])
                            .iter_cells()
                            .collect(),
                    );
                }
            }
        }
        Ok(Sampler {
            lat,
            beta: params.beta,
            cfg: LoopConfig::ground(lat),
            rng: ChaCha20Rng::seed_from_u64(params.seed),
            face_rims,
            edge_cofaces,
            winding_lines,
            winding_dual_lines,
            proposals: 0,
            accepts: 0,
        })
    }

    pub fn cfg(&self) -> &LoopConfig {
        &self.cfg
    }

    pub fn set_cfg(&mut self, cfg: LoopConfig) -> Result<()> {
        if !self.lat.is_cycle(&cfg.gamma) || !self.lat.is_dual_cycle(&cfg.gamma_prime) {
            return Err(Error::Precondition("configuration is not a pair of cycles".into()));
        }
        self.cfg = cfg;
        Ok(())
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepts as f64 / self.proposals as f64
        }
    }

    /// One Metropolis proposal against a uniformly random factor.
    /// Returns true iff the move was accepted.
    pub fn mcmc_step(&mut self) -> bool {
        let factor = if self.rng.gen_bool(0.5) { Factor::Gamma } else { Factor::GammaPrime };
        self.propose(factor)
    }

    /// One Metropolis proposal against the given factor.
    pub fn propose(&mut self, factor: Factor) -> bool {
        let local = self.rng.gen_bool(0.9);
        let cells: &[usize] = match (factor, local) {
            (Factor::Gamma, true) => &self.face_rims[self.rng.gen_range(0..self.face_rims.len())],
            (Factor::Gamma, false) => {
                &self.winding_lines[self.rng.gen_range(0..self.winding_lines.len())]
            }
            (Factor::GammaPrime, true) => {
                &self.edge_cofaces[self.rng.gen_range(0..self.edge_cofaces.len())]
            }
            (Factor::GammaPrime, false) => {
                &self.winding_dual_lines[self.rng.gen_range(0..self.winding_dual_lines.len())]
            }
        };
        let target = match factor {
            Factor::Gamma => &mut self.cfg.gamma,
            Factor::GammaPrime => &mut self.cfg.gamma_prime,
        };
        let mut dw: i64 = 0;
        for &c in cells {
            dw += if target.contains(c) { -1 } else { 1 };
        }
        let de = 2.0 * dw as f64;
        let accept = metropolis_accept(self.beta, de) > self.rng.gen::<f64>();
        self.proposals += 1;
        if accept {
            for &c in cells {
                target.flip(c);
            }
            self.accepts += 1;
            // Full cycle checks cost O(d^3); in debug builds, spot-check the
            // 1-form symmetry on a thinned schedule rather than every accept.
            if cfg!(debug_assertions) && self.accepts % 1024 == 1 {
                debug_assert!(self.lat.is_cycle(&self.cfg.gamma));
                debug_assert!(self.lat.is_dual_cycle(&self.cfg.gamma_prime));
            }
        }
        accept
    }

    /// One sweep: 3 d^3 proposals against each factor.
    pub fn sweep(&mut self) {
        let n = 3 * self.lat.volume();
        for _ in 0..n {
            self.propose(Factor::Gamma);
        }
        for _ in 0..n {
            self.propose(Factor::GammaPrime);
        }
    }
}

/// Decomposition of a cycle into edge-disjoint simple loops.
#[derive(Clone, Debug)]
pub struct LoopDecomposition {
    /// Cell-index lists, one per loop; each is a simple closed loop and
    /// their XOR reproduces the input cycle.
    pub loops: Vec<Vec<usize>>,
}

impl LoopDecomposition {
    pub fn lengths(&self) -> Vec<usize> {
        self.loops.iter().map(|l| l.len()).collect()
    }

    pub fn largest(&self) -> usize {
        self.loops.iter().map(|l| l.len()).max().unwrap_or(0)
    }
}

/// Decompose a cycle into simple loops by walk extraction: follow unused
/// cells from node to node; whenever the walk revisits a node, split off the
/// enclosed segment as one simple loop. Accepts primal 1-cycles (edges,
/// nodes = vertices) and dual 1-cycles (faces, nodes = cubes).
pub fn decompose_loops(lat: &CubicLattice, c: &Chain) -> Result<LoopDecomposition> {
    let nodes_of: Box<dyn Fn(usize) -> [usize; 2]> = match c.kind() {
        CellKind::Edge => {
            if !lat.is_cycle(c) {
                return Err(Error::Precondition("chain is not a 1-cycle".into()));
            }
            Box::new(|e| lat.edge_endpoints(e))
        }
        CellKind::Face => {
            if !lat.is_dual_cycle(c) {
                return Err(Error::Precondition("chain is not a dual 1-cycle".into()));
            }
            Box::new(|f| lat.face_cocubes(f))
        }
        _ => {
            return Err(Error::Dimension(
                "loop decomposition applies to edge or face chains only".into(),
            ))
        }
    };

    // Incidence of unused cells at each node.
    let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for cell in c.iter_cells() {
        for n in nodes_of(cell) {
            incident.entry(n).or_default().push(cell);
        }
    }
    let mut used = vec![false; lat.n_cells(c.kind())];
    let mut take_unused = |node: usize, used: &[bool]| -> Option<usize> {
        let list = incident.get_mut(&node)?;
        while let Some(cell) = list.pop() {
            if !used[cell] {
                return Some(cell);
            }
        }
        None
    };

    let mut loops: Vec<Vec<usize>> = Vec::new();
    for start in c.iter_cells() {
        if used[start] {
            continue;
        }
        // Walk from one endpoint of `start`; the even-degree property of a
        // cycle guarantees the walk can always continue until it closes.
        let mut walk_nodes: Vec<usize> = vec![nodes_of(start)[0]];
        let mut walk_cells: Vec<usize> = Vec::new();
        let mut pos: BTreeMap<usize, usize> = BTreeMap::new();
        pos.insert(walk_nodes[0], 0);
        while let Some(cell) = take_unused(*walk_nodes.last().unwrap(), &used) {
            used[cell] = true;
            let [a, b] = nodes_of(cell);
            let cur = *walk_nodes.last().unwrap();
            let next = if a == cur { b } else { a };
            walk_cells.push(cell);
            if let Some(&p) = pos.get(&next) {
                // Closed a simple loop through nodes p..end.
                let loop_cells: Vec<usize> = walk_cells.split_off(p);
                for n in walk_nodes.split_off(p + 1) {
                    pos.remove(&n);
                }
                loops.push(loop_cells);
                debug_assert_eq!(*walk_nodes.last().unwrap(), next);
            } else {
                pos.insert(next, walk_nodes.len());
                walk_nodes.push(next);
            }
        }
        debug_assert_eq!(walk_nodes.len(), 1, "walk fully unwound");
    }
    Ok(LoopDecomposition { loops })
}

/// Visit every chain in the GF(2) span of `basis` exactly once, in Gray-code
/// order (one XOR of a basis element per step). The first visit is the empty
/// chain. Panics if the span is too large to enumerate (more than 2^26).
pub fn for_each_in_span(basis: &[Chain], mut f: impl FnMut(&Chain)) {
    assert!(basis.len() <= 26, "span too large to enumerate");
    if basis.is_empty() {
        return;
    }
    let mut cur = basis[0].xor(&basis[0]);
    f(&cur);
    for i in 1u64..(1u64 << basis.len()) {
        let bit = i.trailing_zeros() as usize;
        cur.xor_assign(&basis[bit]);
        f(&cur);
    }
}

/// Count of cycles per (weight, largest simple loop) over one full cycle
/// space; beta-independent, so one enumeration serves every temperature.
#[derive(Clone, Debug)]
pub struct CycleTally {
    /// (|c|, largest loop length) -> number of cycles.
    pub counts: BTreeMap<(usize, usize), u64>,
}

/// Enumerate the full 1-cycle space of one side and tally weights and
/// largest-loop lengths. Restricted to d = 2, where each side has rank 17
/// (2^17 cycles).
pub fn tally_cycles(lat: &CubicLattice, side: Side) -> Result<CycleTally> {
    if lat.d() != 2 {
        return Err(Error::InvalidParameter(format!(
            "exact enumeration supported only at d = 2, got d = {}",
            lat.d()
        )));
    }
    let basis = lat.cycle_space_basis(side);
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut err = None;
    for_each_in_span(&basis, |c| {
        if err.is_some() {
            return;
        }
        match decompose_loops(lat, c) {
            Ok(dec) => {
                *counts.entry((c.weight(), dec.largest())).or_insert(0) += 1;
            }
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(CycleTally { counts }),
    }
}

/// Exact Boltzmann distribution over one cycle-space factor.
#[derive(Clone, Debug)]
pub struct ExactFactor {
    pub beta: f64,
    /// Partition function of this factor.
    pub z: f64,
    /// Probability mass per cycle weight.
    pub mass_by_weight: BTreeMap<usize, f64>,
    /// Probability mass per largest-simple-loop length.
    pub mass_by_largest_loop: BTreeMap<usize, f64>,
}

impl ExactFactor {
    pub fn from_tally(tally: &CycleTally, beta: f64) -> ExactFactor {
        let mut z = 0.0;
        let mut mass_by_weight: BTreeMap<usize, f64> = BTreeMap::new();
        let mut mass_by_largest_loop: BTreeMap<usize, f64> = BTreeMap::new();
        for (&(w, largest), &n) in &tally.counts {
            let mass = n as f64 * boltzmann(beta, w);
            z += mass;
            *mass_by_weight.entry(w).or_insert(0.0) += mass;
            *mass_by_largest_loop.entry(largest).or_insert(0.0) += mass;
        }
        for v in mass_by_weight.values_mut() {
            *v /= z;
        }
        for v in mass_by_largest_loop.values_mut() {
            *v /= z;
        }
        ExactFactor { beta, z, mass_by_weight, mass_by_largest_loop }
    }

    /// Probability of one specific cycle of the given weight.
    pub fn prob_single(&self, weight: usize) -> f64 {
        boltzmann(self.beta, weight) / self.z
    }

    /// Probability that the largest simple loop has length >= alpha.
    pub fn tail_mass(&self, alpha: usize) -> f64 {
        self.mass_by_largest_loop
            .iter()
            .filter(|&(&l, _)| l >= alpha)
            .map(|(_, &m)| m)
            .sum()
    }

    /// Expected largest-simple-loop length.
    pub fn expected_largest_loop(&self) -> f64 {
        self.mass_by_largest_loop.iter().map(|(&l, &m)| l as f64 * m).sum()
    }
}

/// The exact joint ensemble at d = 2: the joint law is the product of the
/// two per-factor tables.
#[derive(Clone, Debug)]
pub struct ExactEnsemble {
    pub gamma: ExactFactor,
    pub gamma_prime: ExactFactor,
}

/// Tabulate the exact distribution at d = 2 by enumerating both rank-17
/// cycle-space factors.
pub fn exact_ensemble(lat: &CubicLattice, beta: f64) -> Result<ExactEnsemble> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta must be nonnegative, got {beta}")));
    }
    let g = tally_cycles(lat, Side::Primal)?;
    let gp = tally_cycles(lat, Side::Dual)?;
    Ok(ExactEnsemble {
        gamma: ExactFactor::from_tally(&g, beta),
        gamma_prime: ExactFactor::from_tally(&gp, beta),
    })
}

/// Analytic upper bound on the probability that a configuration contains a
/// simple loop of length >= alpha:
///
///   c' |vertices| e^{-alpha (2 beta - log 5)},   c' = (12/5) / (1 - e^{log 5 - 2 beta}),
///
/// obtained by counting non-backtracking walks. Valid only above the
/// convergence threshold beta > log(5)/2.
pub fn peierls_tail(alpha: usize, beta: f64, d: usize) -> Result<f64> {
    let log5 = 5.0_f64.ln();
    if beta.is_nan() || beta <= log5 / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "tail bound requires beta > log(5)/2 ~ {:.4}, got {beta}",
            log5 / 2.0
        )));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!("lattice size d must be >= 2, got {d}")));
    }
    let c_prime = (12.0 / 5.0) / (1.0 - (log5 - 2.0 * beta).exp());
    Ok(c_prime * (d * d * d) as f64 * (-(alpha as f64) * (2.0 * beta - log5)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn lat(d: usize) -> CubicLattice {
        CubicLattice::new(d).unwrap()
    }

    /// Enumerating 2 x 2^17 cycles with loop decompositions is the slow part
    /// of this module's tests; share one tally per side across tests.
    fn tally2(side: Side) -> &'static CycleTally {
        static PRIMAL: OnceLock<CycleTally> = OnceLock::new();
        static DUAL: OnceLock<CycleTally> = OnceLock::new();
        let cell = match side {
            Side::Primal => &PRIMAL,
            Side::Dual => &DUAL,
        };
        cell.get_or_init(|| tally_cycles(&lat(2), side).unwrap())
    }

    fn plaquette(l: &CubicLattice, f: usize) -> Chain {
        l.boundary(&Chain::single(l, Side::Primal, CellKind::Face, f)).unwrap()
    }

    #[test]
    fn energy_examples() {
        let l = lat(4);
        assert_eq!(energy(&LoopConfig::ground(&l)), 0);

        let cfg = LoopConfig::new(
            &l,
            plaquette(&l, 5),
            Chain::empty(&l, Side::Dual, CellKind::Face),
        )
        .unwrap();
        assert_eq!(energy(&cfg), 8, "4-edge loop costs 8");

        let cfg = LoopConfig::new(
            &l,
            Chain::empty(&l, Side::Primal, CellKind::Edge),
            l.wrapping_dual_line(Side::Dual, 0, [1, 2]),
        )
        .unwrap();
        assert_eq!(energy(&cfg), 8, "x-wrapping dual line has 4 faces at d = 4");
    }

    #[test]
    fn loop_config_validation() {
        let l = lat(3);
        let open = Chain::single(&l, Side::Primal, CellKind::Edge, 0);
        let empty_gp = Chain::empty(&l, Side::Dual, CellKind::Face);
        assert!(LoopConfig::new(&l, open, empty_gp.clone()).is_err());
        let wrong_side = Chain::empty(&l, Side::Dual, CellKind::Edge);
        assert!(LoopConfig::new(&l, wrong_side, empty_gp).is_err());
    }

    #[test]
    fn decompose_loops_examples() {
        let l = lat(4);
        // Single plaquette: one loop of length 4.
        let p = plaquette(&l, 0);
        let dec = decompose_loops(&l, &p).unwrap();
        assert_eq!(dec.lengths(), vec![4]);

        // Two disjoint plaquettes: two loops of length 4.
        let far = l.cell_index(CellKind::Face, 0, 2, 2, 2);
        let two = plaquette(&l, 0).xor(&plaquette(&l, far));
        let mut lens = decompose_loops(&l, &two).unwrap().lengths();
        lens.sort();
        assert_eq!(lens, vec![4, 4]);
        assert_eq!(decompose_loops(&l, &two).unwrap().largest(), 4);

        // Two plaquettes sharing one edge: a single 6-edge loop.
        let f1 = l.cell_index(CellKind::Face, 2, 0, 0, 0);
        let f2 = l.cell_index(CellKind::Face, 2, 1, 0, 0);
        let six = plaquette(&l, f1).xor(&plaquette(&l, f2));
        assert_eq!(decompose_loops(&l, &six).unwrap().lengths(), vec![6]);

        // Dual side: a wrapping dual line is one loop of d faces.
        let line = l.wrapping_dual_line(Side::Dual, 1, [0, 3]);
        assert_eq!(decompose_loops(&l, &line).unwrap().lengths(), vec![4]);

        // Non-cycles are rejected.
        let open = Chain::single(&l, Side::Primal, CellKind::Edge, 0);
        assert!(decompose_loops(&l, &open).is_err());
    }

    #[test]
    fn decomposition_reassembles_cycle() {
        // Property over random cycles, including the multi-edge geometry of
        // d = 2: the XOR of the extracted loops reproduces the cycle and
        // every extracted loop is itself closed.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        for d in [2usize, 3, 4] {
            let l = lat(d);
            for _ in 0..30 {
                let mut c = Chain::empty(&l, Side::Primal, CellKind::Edge);
                for f in 0..l.n_cells(CellKind::Face) {
                    if rng.gen_bool(0.3) {
                        c.xor_assign(&plaquette(&l, f));
                    }
                }
                let dec = decompose_loops(&l, &c).unwrap();
                let mut rebuilt = Chain::empty(&l, Side::Primal, CellKind::Edge);
                for lp in &dec.loops {
                    let lc = Chain::from_cells(&l, Side::Primal, CellKind::Edge, lp.iter().copied());
                    assert_eq!(lc.weight(), lp.len(), "loops are edge-disjoint");
                    assert!(l.is_cycle(&lc), "each extracted loop is closed");
                    rebuilt.xor_assign(&lc);
                }
                assert_eq!(rebuilt, c);
            }
        }
    }

    #[test]
    fn exact_ensemble_point_mass_at_zero_temperature() {
        let e = ExactFactor::from_tally(tally2(Side::Primal), f64::INFINITY);
        assert!((e.mass_by_weight[&0] - 1.0).abs() < 1e-12);
        assert_eq!(e.z, 1.0);
    }

    #[test]
    fn exact_ensemble_uniform_at_infinite_temperature() {
        let e = ExactFactor::from_tally(tally2(Side::Primal), 0.0);
        assert!((e.z - 131072.0).abs() < 1e-6, "2^17 cycles, unit weight each");
        let total: f64 = e.mass_by_weight.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((e.prob_single(0) - 1.0 / 131072.0).abs() < 1e-18);
    }

    #[test]
    fn exact_ensemble_boltzmann_ratio() {
        // Pr(empty) / Pr(one specific plaquette) = e^{2 beta * 4} = e^8 at beta = 1.
        let e = ExactFactor::from_tally(tally2(Side::Primal), 1.0);
        let ratio = e.prob_single(0) / e.prob_single(4);
        assert!((ratio - 8.0_f64.exp()).abs() / 8.0_f64.exp() < 1e-12);
    }

    #[test]
    fn exact_ensemble_rejects_large_lattice() {
        let l = lat(3);
        assert!(exact_ensemble(&l, 1.0).is_err());
        assert!(exact_ensemble(&lat(2), -1.0).is_err());
    }

    #[test]
    fn exact_factorization_total_mass() {
        // Both factors are normalized distributions; the joint law is their
        // product, so its total mass is the product of two ones.
        let g = ExactFactor::from_tally(tally2(Side::Primal), 0.7);
        let gp = ExactFactor::from_tally(tally2(Side::Dual), 0.7);
        let tg: f64 = g.mass_by_weight.values().sum();
        let tgp: f64 = gp.mass_by_weight.values().sum();
        assert!((tg * tgp - 1.0).abs() < 1e-12);
        // The two factors are isomorphic under lattice duality.
        for (k, v) in &g.mass_by_weight {
            assert!((gp.mass_by_weight[k] - v).abs() < 1e-9);
        }
    }

    #[test]
    fn monotone_largest_loop_suppression() {
        // Exact check: expected largest loop is non-increasing in beta.
        let t = tally2(Side::Primal);
        let mut prev = f64::INFINITY;
        for beta in [0.0, 0.3, 0.6, 1.0, 2.0] {
            let e = ExactFactor::from_tally(t, beta);
            let mean = e.expected_largest_loop();
            assert!(mean <= prev + 1e-12, "beta {beta}: {mean} > {prev}");
            prev = mean;
        }
    }

    #[test]
    fn metropolis_rule_examples() {
        assert_eq!(metropolis_accept(1.0, -4.0), 1.0, "downhill always accepted");
        assert_eq!(metropolis_accept(1.0, 0.0), 1.0);
        assert!((metropolis_accept(1.0, 8.0) - (-8.0_f64).exp()).abs() < 1e-15);
        assert_eq!(metropolis_accept(f64::INFINITY, 8.0), 0.0);
        assert_eq!(metropolis_accept(f64::INFINITY, 0.0), 1.0);
    }

    #[test]
    fn moves_are_involutions_and_preserve_cycles() {
        let l = lat(3);
        let params = EnsembleParams::new(0.2, 3, 42).unwrap();
        let mut s = Sampler::new(&l, &params).unwrap();
        for _ in 0..2000 {
            s.mcmc_step();
            assert!(l.is_cycle(s.cfg().gamma()));
            assert!(l.is_dual_cycle(s.cfg().gamma_prime()));
        }
        assert!(s.acceptance_rate() > 0.0);

        // Involution: XOR-ing the same plaquette rim twice is the identity.
        let rim = s.face_rims[7];
        let mut g = s.cfg().gamma().clone();
        let before = g.clone();
        for &c in &rim {
            g.flip(c);
        }
        for &c in &rim {
            g.flip(c);
        }
        assert_eq!(g, before);
    }

    #[test]
    fn zero_temperature_sampler_stays_in_ground_state() {
        let l = lat(3);
        let params = EnsembleParams::new(f64::INFINITY, 3, 1).unwrap();
        let mut s = Sampler::new(&l, &params).unwrap();
        for _ in 0..50 {
            s.sweep();
        }
        assert_eq!(energy(s.cfg()), 0);
    }

    #[test]
    fn detailed_balance_on_neighbor_pairs() {
        // For configs related by one move, pi(a) P(a->b) = pi(b) P(b->a).
        // The proposal menu is state-independent and every move is an
        // involution, so the proposal factor cancels and the identity
        // reduces to the Metropolis acceptance ratio; check it numerically
        // over all local-move neighbors of several configs.
        let l = lat(2);
        let beta = 0.8;
        let params = EnsembleParams::new(beta, 2, 5).unwrap();
        let mut s = Sampler::new(&l, &params).unwrap();
        for _ in 0..20 {
            s.sweep();
            let a = s.cfg().gamma().clone();
            for rim in s.face_rims.clone() {
                let mut b = a.clone();
                for &c in &rim {
                    b.flip(c);
                }
                let de = 2.0 * (b.weight() as f64 - a.weight() as f64);
                let lhs = boltzmann(beta, a.weight()) * metropolis_accept(beta, de);
                let rhs = boltzmann(beta, b.weight()) * metropolis_accept(beta, -de);
                assert!((lhs - rhs).abs() <= 1e-14 * lhs.max(rhs).max(1e-300));
            }
        }
    }

    #[test]
    fn mcmc_marginal_matches_exact_table() {
        // Empirical |gamma| marginal at d = 2, beta = 1 vs the exact table,
        // in total variation.
        let l = lat(2);
        let params = EnsembleParams::new(1.0, 2, 1234).unwrap();
        let mut s = Sampler::new(&l, &params).unwrap();
        for _ in 0..500 {
            s.sweep();
        }
        let n = 120_000usize;
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for _ in 0..n {
            s.sweep();
            *counts.entry(s.cfg().gamma().weight()).or_insert(0) += 1;
        }
        let exact = ExactFactor::from_tally(tally2(Side::Primal), 1.0);
        let mut tv = 0.0;
        let mut keys: Vec<usize> = exact.mass_by_weight.keys().copied().collect();
        keys.extend(counts.keys().copied());
        keys.sort();
        keys.dedup();
        for k in keys {
            let emp = *counts.get(&k).unwrap_or(&0) as f64 / n as f64;
            let ex = *exact.mass_by_weight.get(&k).unwrap_or(&0.0);
            tv += (emp - ex).abs();
        }
        tv /= 2.0;
        assert!(tv < 0.02, "total variation {tv} too large");
    }

    #[test]
    fn peierls_tail_examples() {
        // Closed form at alpha = 4, beta = 1, d = 2.
        let log5 = 5.0_f64.ln();
        let expected = (12.0 / 5.0) / (1.0 - (log5 - 2.0).exp()) * 8.0 * (-4.0 * (2.0 - log5)).exp();
        let got = peierls_tail(4, 1.0, 2).unwrap();
        assert!((got - expected).abs() < 1e-12);

        // Bound vanishes at zero temperature.
        assert!(peierls_tail(4, 50.0, 2).unwrap() < 1e-60);

        // Below the convergence threshold the bound is undefined.
        assert!(peierls_tail(4, 0.5, 2).is_err());
        assert!(peierls_tail(4, log5 / 2.0, 2).is_err());
    }

    #[test]
    fn exact_tail_mass_below_peierls_bound() {
        // The analytic bound dominates the exact tail mass at d = 2, beta = 1.
        let e = ExactFactor::from_tally(tally2(Side::Primal), 1.0);
        let alpha = 8;
        let tail = e.tail_mass(alpha);
        let bound = peierls_tail(alpha, 1.0, 2).unwrap();
        assert!(tail <= bound, "tail {tail} exceeds bound {bound}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn sampler_preserves_one_form_symmetry(seed in 0u64..10_000, beta in 0.0f64..3.0) {
            let l = lat(3);
            let params = EnsembleParams { beta, d: 3, seed, sweeps: 0, burn_in: 0 };
            let mut s = Sampler::new(&l, &params).unwrap();
            for _ in 0..200 {
                s.mcmc_step();
            }
            prop_assert!(l.is_cycle(s.cfg().gamma()));
            prop_assert!(l.is_dual_cycle(s.cfg().gamma_prime()));
        }
    }
}
