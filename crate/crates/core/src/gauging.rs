//! Symbolic Pauli algebra over chains and the gauging duality.
//!
//! Qubits live on faces (the "primal register") and edges (the "dual
//! register"). Every Pauli operator is kept in the normal form
//!
//!   P = i^alpha X(x2) Z(z2) X(x1) Z(z1),
//!
//! with x2, z2 face chains and x1, z1 edge chains. The gauging map acts on
//! basis states by |c1> (x) |c2> -> |coboundary c1> (x) |boundary c2| and
//! transports symmetric operators accordingly:
//!
//! - X supports move through the boundary maps (X(c2) -> X(boundary c2) on
//!   edges, X(c1) -> X(coboundary c1) on faces);
//! - Z supports are pulled back through them (solve a GF(2) linear system);
//! - 1-form symmetry operators map to the identity.
//!
//! The image is defined modulo the gauge symmetry group {Z(w)Z(v)} with w a
//! face 2-cycle and v an edge chain with empty coboundary; equality of gauged
//! operators is decided after canonical reduction against that group.

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, Echelon, Solver};
use crate::homology::{CellKind, Chain, CubicLattice, Side, AXES};

/// A Pauli operator in normal form i^phase X(x_primal) Z(z_primal)
/// X(x_dual) Z(z_dual); the primal register is the faces, the dual register
/// the edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicPauli {
    /// Power of i, modulo 4.
    pub phase: u8,
    pub x_primal: Chain,
    pub z_primal: Chain,
    pub x_dual: Chain,
    pub z_dual: Chain,
}

impl SymbolicPauli {
    pub fn identity(lat: &CubicLattice) -> Self {
        SymbolicPauli {
            phase: 0,
            x_primal: Chain::empty(lat, Side::Primal, CellKind::Face),
            z_primal: Chain::empty(lat, Side::Primal, CellKind::Face),
            x_dual: Chain::empty(lat, Side::Dual, CellKind::Edge),
            z_dual: Chain::empty(lat, Side::Dual, CellKind::Edge),
        }
    }

    fn with(lat: &CubicLattice, f: impl FnOnce(&mut SymbolicPauli)) -> Self {
        let mut p = SymbolicPauli::identity(lat);
        f(&mut p);
        p
    }

    pub fn x_on_faces(lat: &CubicLattice, support: &Chain) -> Self {
        debug_assert_eq!(support.kind(), CellKind::Face);
        SymbolicPauli::with(lat, |p| p.x_primal = support.clone())
    }

    pub fn z_on_faces(lat: &CubicLattice, support: &Chain) -> Self {
        debug_assert_eq!(support.kind(), CellKind::Face);
        SymbolicPauli::with(lat, |p| p.z_primal = support.clone())
    }

    pub fn x_on_edges(lat: &CubicLattice, support: &Chain) -> Self {
        debug_assert_eq!(support.kind(), CellKind::Edge);
        SymbolicPauli::with(lat, |p| p.x_dual = support.clone())
    }

    pub fn z_on_edges(lat: &CubicLattice, support: &Chain) -> Self {
        debug_assert_eq!(support.kind(), CellKind::Edge);
        SymbolicPauli::with(lat, |p| p.z_dual = support.clone())
    }

    /// Cluster term on a face: K(f) = X(f) Z(boundary f).
    pub fn cluster_k_face(lat: &CubicLattice, face: usize) -> Self {
        let f = Chain::single(lat, Side::Primal, CellKind::Face, face);
        let b = lat.boundary(&f).expect("face chain");
        SymbolicPauli::with(lat, |p| {
            p.x_primal = f;
            p.z_dual = Chain::from_bits(Side::Dual, CellKind::Edge, b.bits().clone());
        })
    }

    /// Cluster term on an edge: K(e) = X(e) Z(coboundary e).
    pub fn cluster_k_edge(lat: &CubicLattice, edge: usize) -> Self {
        let e = Chain::single(lat, Side::Dual, CellKind::Edge, edge);
        let cob = lat
            .dual_boundary(&Chain::single(lat, Side::Primal, CellKind::Edge, edge))
            .expect("edge chain");
        SymbolicPauli::with(lat, |p| {
            p.x_dual = e;
            p.z_primal = Chain::from_bits(Side::Primal, CellKind::Face, cob.bits().clone());
        })
    }

    /// 1-form symmetry generator on the face register: X over the six faces
    /// of a cube.
    pub fn symmetry_cube(lat: &CubicLattice, cube: usize) -> Self {
        let faces = lat
            .boundary(&Chain::single(lat, Side::Primal, CellKind::Cube, cube))
            .expect("cube chain");
        SymbolicPauli::x_on_faces(lat, &faces)
    }

    /// 1-form symmetry generator on the edge register: X over the six edges
    /// at a vertex.
    pub fn symmetry_vertex(lat: &CubicLattice, vertex: usize) -> Self {
        let edges = lat
            .dual_boundary(&Chain::single(lat, Side::Primal, CellKind::Vertex, vertex))
            .expect("vertex chain");
        let edges = Chain::from_bits(Side::Dual, CellKind::Edge, edges.bits().clone());
        SymbolicPauli::x_on_edges(lat, &edges)
    }

    pub fn is_identity(&self) -> bool {
        self.phase == 0
            && self.x_primal.is_empty()
            && self.z_primal.is_empty()
            && self.x_dual.is_empty()
            && self.z_dual.is_empty()
    }

    /// Normal-ordered product self * other: phases add, and each Z of self
    /// moving past an X of other contributes a sign.
    pub fn mul(&self, other: &SymbolicPauli, lat: &CubicLattice) -> SymbolicPauli {
        let crossings = lat
            .intersection_parity(&self.z_primal, &other.x_primal)
            .expect("face chains")
            + lat.intersection_parity(&self.z_dual, &other.x_dual).expect("edge chains");
        let mut out = self.clone();
        out.phase = (self.phase + other.phase + 2 * crossings) % 4;
        out.x_primal.xor_assign(&other.x_primal);
        out.z_primal.xor_assign(&other.z_primal);
        out.x_dual.xor_assign(&other.x_dual);
        out.z_dual.xor_assign(&other.z_dual);
        out
    }

    /// Conjugate by the global Hadamard: swap X and Z supports within each
    /// register, with the reordering sign (-1)^{|x and z|} per register.
    pub fn hadamard(&self, lat: &CubicLattice) -> SymbolicPauli {
        let crossings = lat
            .intersection_parity(&self.x_primal, &self.z_primal)
            .expect("face chains")
            + lat.intersection_parity(&self.x_dual, &self.z_dual).expect("edge chains");
        SymbolicPauli {
            phase: (self.phase + 2 * crossings) % 4,
            x_primal: self.z_primal.clone(),
            z_primal: self.x_primal.clone(),
            x_dual: self.z_dual.clone(),
            z_dual: self.x_dual.clone(),
        }
    }
}

/// True iff the total crossing parity between the X support of one operator
/// and the Z support of the other (both registers, both directions) is even.
pub fn pauli_commutes(lat: &CubicLattice, a: &SymbolicPauli, b: &SymbolicPauli) -> bool {
    let parity = lat.intersection_parity(&a.z_primal, &b.x_primal).expect("face chains")
        ^ lat.intersection_parity(&a.x_primal, &b.z_primal).expect("face chains")
        ^ lat.intersection_parity(&a.z_dual, &b.x_dual).expect("edge chains")
        ^ lat.intersection_parity(&a.x_dual, &b.z_dual).expect("edge chains");
    parity == 0
}

/// True iff the operator commutes with every local 1-form symmetry
/// generator: all cube generators (X on the six faces of a cube) and all
/// vertex generators (X on the six edges at a vertex). X supports always
/// commute; the conditions are that z_primal has empty coboundary and
/// z_dual has empty boundary.
pub fn is_symmetric(lat: &CubicLattice, op: &SymbolicPauli) -> bool {
    let zp = Chain::from_bits(Side::Primal, CellKind::Face, op.z_primal.bits().clone());
    let zd = Chain::from_bits(Side::Primal, CellKind::Edge, op.z_dual.bits().clone());
    lat.dual_boundary(&zp).expect("face chain").is_empty()
        && lat.boundary(&zd).expect("edge chain").is_empty()
}

/// A list of commuting stabilizer-Hamiltonian terms.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub terms: Vec<SymbolicPauli>,
}

impl HamiltonianSpec {
    /// The trivial paramagnet: single-qubit X on every face and every edge.
    pub fn trivial_x(lat: &CubicLattice) -> Self {
        let mut terms = Vec::new();
        for f in 0..lat.n_cells(CellKind::Face) {
            terms.push(SymbolicPauli::x_on_faces(
                lat,
                &Chain::single(lat, Side::Primal, CellKind::Face, f),
            ));
        }
        for e in 0..lat.n_cells(CellKind::Edge) {
            terms.push(SymbolicPauli::x_on_edges(
                lat,
                &Chain::single(lat, Side::Dual, CellKind::Edge, e),
            ));
        }
        HamiltonianSpec { terms }
    }

    /// The cluster model: one K term per face and per edge.
    pub fn cluster(lat: &CubicLattice) -> Self {
        let mut terms = Vec::new();
        for f in 0..lat.n_cells(CellKind::Face) {
            terms.push(SymbolicPauli::cluster_k_face(lat, f));
        }
        for e in 0..lat.n_cells(CellKind::Edge) {
            terms.push(SymbolicPauli::cluster_k_edge(lat, e));
        }
        HamiltonianSpec { terms }
    }

    pub fn all_commute(&self, lat: &CubicLattice) -> bool {
        for i in 0..self.terms.len() {
            for j in (i + 1)..self.terms.len() {
                if !pauli_commutes(lat, &self.terms[i], &self.terms[j]) {
                    return false;
                }
            }
        }
        true
    }
}

/// Report from [`Gauger::verify_dualities`].
#[derive(Clone, Debug)]
pub struct DualityReport {
    /// Gauged trivial model equals the two toric-code generator sets.
    pub trivial_to_toric: bool,
    /// Gauged cluster model equals its Hadamard image.
    pub cluster_to_hadamard: bool,
    /// Human-readable description of each mismatch, with the offending cell.
    pub mismatches: Vec<String>,
}

impl DualityReport {
    pub fn ok(&self) -> bool {
        self.trivial_to_toric && self.cluster_to_hadamard
    }
}

/// Gauging engine for one lattice: holds the factorizations of the boundary
/// maps (for Z-support pullbacks) and the echelon bases of the gauge
/// symmetry group (for canonical reduction).
pub struct Gauger<'a> {
    lat: &'a CubicLattice,
    /// Solves boundary(f) = target over face chains f.
    face_boundary_solver: Solver,
    /// Solves coboundary(e) = target over edge chains e.
    edge_coboundary_solver: Solver,
    /// Gauge symmetry on the face register: face 2-cycles ker(boundary).
    face_gauge_group: Echelon,
    /// Gauge symmetry on the edge register: ker(coboundary) on edges.
    edge_gauge_group: Echelon,
}

impl<'a> Gauger<'a> {
    pub fn new(lat: &'a CubicLattice) -> Self {
        // boundary: faces -> edges. Rows are edge equations.
        let mut b2 = BitMatrix::new(lat.n_cells(CellKind::Face));
        for e in 0..lat.n_cells(CellKind::Edge) {
            let row = lat
                .dual_boundary(&Chain::single(lat, Side::Primal, CellKind::Edge, e))
                .expect("edge chain");
            b2.push_row(row.bits().clone());
        }
        // coboundary: edges -> faces. Rows are face equations.
        let mut d1 = BitMatrix::new(lat.n_cells(CellKind::Edge));
        for f in 0..lat.n_cells(CellKind::Face) {
            let row = lat
                .boundary(&Chain::single(lat, Side::Primal, CellKind::Face, f))
                .expect("face chain");
            d1.push_row(row.bits().clone());
        }
        let mut face_gauge_group = Echelon::new();
        for v in b2.kernel_basis() {
            face_gauge_group.insert(&v);
        }
        let mut edge_gauge_group = Echelon::new();
        for v in d1.kernel_basis() {
            edge_gauge_group.insert(&v);
        }
        Gauger {
            lat,
            face_boundary_solver: Solver::new(&b2),
            edge_coboundary_solver: Solver::new(&d1),
            face_gauge_group,
            edge_gauge_group,
        }
    }

    /// Canonical representative of an operator modulo the gauge symmetry
    /// group (right multiplication by Z(w)Z(v), which never alters the
    /// phase of the normal form).
    pub fn canonicalize(&self, op: &SymbolicPauli) -> SymbolicPauli {
        let mut out = op.clone();
        out.z_primal = Chain::from_bits(
            Side::Primal,
            CellKind::Face,
            self.face_gauge_group.reduce(op.z_primal.bits()),
        );
        out.z_dual = Chain::from_bits(
            Side::Dual,
            CellKind::Edge,
            self.edge_gauge_group.reduce(op.z_dual.bits()),
        );
        out
    }

    /// Equality modulo the gauge symmetry group.
    pub fn gauge_equal(&self, a: &SymbolicPauli, b: &SymbolicPauli) -> bool {
        self.canonicalize(a) == self.canonicalize(b)
    }

    /// Transport a symmetric operator through the gauging map:
    /// X supports push forward through the boundary maps; Z supports pull
    /// back through them (rejecting inputs outside the image, e.g. Z on a
    /// winding cycle, which is symmetric under all local generators but has
    /// no gauged counterpart). The result is returned in canonical form.
    pub fn gauge_operator(&self, op: &SymbolicPauli) -> Result<SymbolicPauli> {
        if !is_symmetric(self.lat, op) {
            return Err(Error::Precondition(
                "only 1-form-symmetric operators can be gauged".into(),
            ));
        }
        let mut out = SymbolicPauli::identity(self.lat);
        out.phase = op.phase;

        // X(c2) -> X(boundary c2) on the edge register.
        let xp = Chain::from_bits(Side::Primal, CellKind::Face, op.x_primal.bits().clone());
        let bx = self.lat.boundary(&xp).expect("face chain");
        out.x_dual = Chain::from_bits(Side::Dual, CellKind::Edge, bx.bits().clone());

        // X(c1) -> X(coboundary c1) on the face register.
        let xd = Chain::from_bits(Side::Primal, CellKind::Edge, op.x_dual.bits().clone());
        let cx = self.lat.dual_boundary(&xd).expect("edge chain");
        out.x_primal = Chain::from_bits(Side::Primal, CellKind::Face, cx.bits().clone());

        // Z(z2) reads a face parity; pulled back, it reads the same parity
        // off the gauged edge configuration: find e with coboundary(e) = z2.
        if !op.z_primal.is_empty() {
            let e = self.edge_coboundary_solver.solve(op.z_primal.bits()).ok_or_else(|| {
                Error::NoSolution(
                    "z_primal is not a coboundary (winding Z has no gauged image)".into(),
                )
            })?;
            out.z_dual.xor_assign(&Chain::from_bits(Side::Dual, CellKind::Edge, e));
        }

        // Z(z1) reads an edge parity: find f with boundary(f) = z1.
        if !op.z_dual.is_empty() {
            let f = self.face_boundary_solver.solve(op.z_dual.bits()).ok_or_else(|| {
                Error::NoSolution(
                    "z_dual is not a boundary (winding Z has no gauged image)".into(),
                )
            })?;
            out.z_primal.xor_assign(&Chain::from_bits(Side::Primal, CellKind::Face, f));
        }

        Ok(self.canonicalize(&out))
    }

    /// Verify both dualities term by term:
    /// (i) the gauged trivial model is the pair of 3D toric-code generator
    /// sets {X(boundary f)} and {X(coboundary e)};
    /// (ii) the gauged cluster model is the Hadamard image of the cluster
    /// model. Equality is modulo gauge symmetry.
    pub fn verify_dualities(&self) -> Result<DualityReport> {
        let lat = self.lat;
        let mut mismatches = Vec::new();

        let mut trivial_to_toric = true;
        for f in 0..lat.n_cells(CellKind::Face) {
            let term = SymbolicPauli::x_on_faces(
                lat,
                &Chain::single(lat, Side::Primal, CellKind::Face, f),
            );
            let gauged = self.gauge_operator(&term)?;
            let rim = lat.boundary(&Chain::single(lat, Side::Primal, CellKind::Face, f))?;
            let expected = SymbolicPauli::x_on_edges(
                lat,
                &Chain::from_bits(Side::Dual, CellKind::Edge, rim.bits().clone()),
            );
            if !self.gauge_equal(&gauged, &expected) {
                trivial_to_toric = false;
                mismatches.push(format!("gauged X on face {f} is not the toric plaquette term"));
            }
        }
        for e in 0..lat.n_cells(CellKind::Edge) {
            let term = SymbolicPauli::x_on_edges(
                lat,
                &Chain::single(lat, Side::Dual, CellKind::Edge, e),
            );
            let gauged = self.gauge_operator(&term)?;
            let cob = lat.dual_boundary(&Chain::single(lat, Side::Primal, CellKind::Edge, e))?;
            let expected = SymbolicPauli::x_on_faces(
                lat,
                &Chain::from_bits(Side::Primal, CellKind::Face, cob.bits().clone()),
            );
            if !self.gauge_equal(&gauged, &expected) {
                trivial_to_toric = false;
                mismatches.push(format!("gauged X on edge {e} is not the toric star term"));
            }
        }

        let mut cluster_to_hadamard = true;
        for term in HamiltonianSpec::cluster(lat).terms {
            let gauged = self.gauge_operator(&term)?;
            let expected = term.hadamard(lat);
            if !self.gauge_equal(&gauged, &expected) {
                cluster_to_hadamard = false;
                mismatches.push(format!(
                    "gauged cluster term (x_primal {:?}, x_dual {:?}) differs from its Hadamard image",
                    term.x_primal.iter_cells().collect::<Vec<_>>(),
                    term.x_dual.iter_cells().collect::<Vec<_>>()
                ));
            }
        }

        Ok(DualityReport { trivial_to_toric, cluster_to_hadamard, mismatches })
    }
}

/// Winding-plane symmetry representatives: all edges of direction `axis` at
/// a fixed `axis` coordinate form an element of ker(coboundary) that is not
/// a vertex-generator product; dually for faces.
pub fn edge_winding_plane(lat: &CubicLattice, axis: usize, coord: usize) -> Chain {
    let mut c = Chain::empty(lat, Side::Dual, CellKind::Edge);
    let (a, b) = crate::homology::other_axes(axis);
    for i in 0..lat.d() {
        for j in 0..lat.d() {
            let mut p = [0isize; 3];
            p[axis] = coord as isize;
            p[a] = i as isize;
            p[b] = j as isize;
            c.flip(lat.cell_index(CellKind::Edge, axis, p[0], p[1], p[2]));
        }
    }
    c
}

/// All faces normal to `axis` at a fixed `axis` coordinate: a face 2-cycle
/// beyond the span of cube boundaries.
pub fn face_winding_plane(lat: &CubicLattice, axis: usize, coord: usize) -> Chain {
    let mut c = Chain::empty(lat, Side::Primal, CellKind::Face);
    let (a, b) = crate::homology::other_axes(axis);
    for i in 0..lat.d() {
        for j in 0..lat.d() {
            let mut p = [0isize; 3];
            p[axis] = coord as isize;
            p[a] = i as isize;
            p[b] = j as isize;
            c.flip(lat.cell_index(CellKind::Face, axis, p[0], p[1], p[2]));
        }
    }
    c
}

/// Check that the kernel of the state-level gauging map on each register is
/// exactly the span of the 1-form symmetry orbit shifts: local generator
/// supports plus the three winding planes.
pub fn kernel_matches_symmetry_orbits(lat: &CubicLattice) -> bool {
    // Edge register: kernel of coboundary(edges -> faces).
    let mut d1 = BitMatrix::new(lat.n_cells(CellKind::Edge));
    for f in 0..lat.n_cells(CellKind::Face) {
        let row = lat
            .boundary(&Chain::single(lat, Side::Primal, CellKind::Face, f))
            .expect("face chain");
        d1.push_row(row.bits().clone());
    }
    let mut orbit_span = Echelon::new();
    for v in 0..lat.n_cells(CellKind::Vertex) {
        let gen = lat
            .dual_boundary(&Chain::single(lat, Side::Primal, CellKind::Vertex, v))
            .expect("vertex chain");
        orbit_span.insert(gen.bits());
    }
    for axis in AXES {
        orbit_span.insert(edge_winding_plane(lat, axis, 0).bits());
    }
    let kernel = d1.kernel_basis();
    let edges_ok = kernel.len() == orbit_span.rank()
        && kernel.iter().all(|k| orbit_span.contains(k));

    // Face register: kernel of boundary(faces -> edges).
    let mut b2 = BitMatrix::new(lat.n_cells(CellKind::Face));
    for e in 0..lat.n_cells(CellKind::Edge) {
        let row = lat
            .dual_boundary(&Chain::single(lat, Side::Primal, CellKind::Edge, e))
            .expect("edge chain");
        b2.push_row(row.bits().clone());
    }
    let mut orbit_span = Echelon::new();
    for c in 0..lat.n_cells(CellKind::Cube) {
        let gen = lat
            .boundary(&Chain::single(lat, Side::Primal, CellKind::Cube, c))
            .expect("cube chain");
        orbit_span.insert(gen.bits());
    }
    for axis in AXES {
        orbit_span.insert(face_winding_plane(lat, axis, 0).bits());
    }
    let kernel = b2.kernel_basis();
    let faces_ok = kernel.len() == orbit_span.rank()
        && kernel.iter().all(|k| orbit_span.contains(k));

    edges_ok && faces_ok
}
