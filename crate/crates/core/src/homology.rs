//! Mod-2 chain complex of the d x d x d periodic cubic lattice (a 3-torus):
//! cells, chains as bit-vectors, boundary / dual-boundary maps, cycle tests,
//! homology classes via winding parities, intersection parities, and GF(2)
//! cycle-space bases.
//!
//! Dual-lattice cells are represented by their primal counterparts (dual
//! vertex <-> cube, dual edge <-> face, dual face <-> edge, dual cube <->
//! vertex); there is no second index space. The dual boundary map is the
//! geometric coboundary on this shared representation.

use crate::error::{Error, Result};
use crate::gf2::{self, BitMatrix, BitRow};

/// Which complex a chain semantically belongs to. A `Dual` chain of dual
/// dimension k is stored over the primal (3-k)-cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Primal,
    Dual,
}

/// Species of primal cell a chain is indexed over; doubles as the primal
/// dimension (0..=3).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Vertex,
    Edge,
    Face,
    Cube,
}

impl CellKind {
    pub fn dim(self) -> usize {
        match self {
            CellKind::Vertex => 0,
            CellKind::Edge => 1,
            CellKind::Face => 2,
            CellKind::Cube => 3,
        }
    }

    fn from_dim(dim: usize) -> CellKind {
        match dim {
            0 => CellKind::Vertex,
            1 => CellKind::Edge,
            2 => CellKind::Face,
            3 => CellKind::Cube,
            _ => unreachable!("cell dimension out of range"),
        }
    }

    /// Number of orientations a cell of this kind carries.
    fn orientations(self) -> usize {
        match self {
            CellKind::Vertex | CellKind::Cube => 1,
            CellKind::Edge | CellKind::Face => 3,
        }
    }
}

/// The three lattice directions, indexed 0 = x, 1 = y, 2 = z.
pub const AXES: [usize; 3] = [0, 1, 2];

/// The two axes other than `axis`, in increasing order.
pub fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        2 => (0, 1),
        _ => unreachable!("axis out of range"),
    }
}

/// Periodic cubic lattice of linear size d. Immutable after construction;
/// all operations are pure and safe to share across threads.
#[derive(Clone, Debug)]
pub struct CubicLattice {
    d: usize,
}

impl CubicLattice {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "lattice size d must be at least 2, got {d}"
            )));
        }
        Ok(CubicLattice { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// d^3, the number of vertices (equivalently cubes).
    pub fn volume(&self) -> usize {
        self.d * self.d * self.d
    }

    pub fn n_cells(&self, kind: CellKind) -> usize {
        kind.orientations() * self.volume()
    }

    fn wrap(&self, c: isize) -> usize {
        c.rem_euclid(self.d as isize) as usize
    }

    /// Flat index of a cell: orientation * d^3 + z * d^2 + y * d + x,
    /// with coordinates taken mod d.
    pub fn cell_index(&self, kind: CellKind, o: usize, x: isize, y: isize, z: isize) -> usize {
        debug_assert!(o < kind.orientations());
        let d = self.d;
        let (x, y, z) = (self.wrap(x), self.wrap(y), self.wrap(z));
        o * self.volume() + z * d * d + y * d + x
    }

    /// Inverse of [`cell_index`](Self::cell_index): (orientation, x, y, z).
    pub fn cell_coords(&self, kind: CellKind, idx: usize) -> (usize, usize, usize, usize) {
        debug_assert!(idx < self.n_cells(kind));
        let v = self.volume();
        let o = idx / v;
        let r = idx % v;
        let d = self.d;
        (o, r % d, (r / d) % d, r / (d * d))
    }

    /// Cells of dimension one lower incident to the given cell.
    fn facets(&self, kind: CellKind, idx: usize, out: &mut Vec<usize>) {
        let (o, x, y, z) = self.cell_coords(kind, idx);
        let (x, y, z) = (x as isize, y as isize, z as isize);
        let mut p = [x, y, z];
        match kind {
            CellKind::Edge => {
                out.push(self.cell_index(CellKind::Vertex, 0, x, y, z));
                p[o] += 1;
                out.push(self.cell_index(CellKind::Vertex, 0, p[0], p[1], p[2]));
            }
            CellKind::Face => {
                // A face normal to `o` spans the axes (a, b) and is bounded
                // by two a-edges and two b-edges.
                let (a, b) = other_axes(o);
                out.push(self.cell_index(CellKind::Edge, a, x, y, z));
                out.push(self.cell_index(CellKind::Edge, b, x, y, z));
                p[b] += 1;
                out.push(self.cell_index(CellKind::Edge, a, p[0], p[1], p[2]));
                p[b] -= 1;
                p[a] += 1;
                out.push(self.cell_index(CellKind::Edge, b, p[0], p[1], p[2]));
            }
            CellKind::Cube => {
                for axis in AXES {
                    out.push(self.cell_index(CellKind::Face, axis, x, y, z));
                    p[axis] += 1;
                    out.push(self.cell_index(CellKind::Face, axis, p[0], p[1], p[2]));
                    p[axis] -= 1;
                }
            }
            CellKind::Vertex => unreachable!("vertices have no facets"),
        }
    }

    /// Cells of dimension one higher incident to the given cell.
    fn cofacets(&self, kind: CellKind, idx: usize, out: &mut Vec<usize>) {
        let (o, x, y, z) = self.cell_coords(kind, idx);
        let (x, y, z) = (x as isize, y as isize, z as isize);
        let mut p = [x, y, z];
        match kind {
            CellKind::Vertex => {
                for axis in AXES {
                    out.push(self.cell_index(CellKind::Edge, axis, x, y, z));
                    p[axis] -= 1;
                    out.push(self.cell_index(CellKind::Edge, axis, p[0], p[1], p[2]));
                    p[axis] += 1;
                }
            }
            CellKind::Edge => {
                // An edge along `o` lies in two faces per transverse axis t,
                // each normal to the remaining axis.
                let (a, b) = other_axes(o);
                out.push(self.cell_index(CellKind::Face, b, x, y, z));
                p[a] -= 1;
                out.push(self.cell_index(CellKind::Face, b, p[0], p[1], p[2]));
                p[a] += 1;
                out.push(self.cell_index(CellKind::Face, a, x, y, z));
                p[b] -= 1;
                out.push(self.cell_index(CellKind::Face, a, p[0], p[1], p[2]));
            }
            CellKind::Face => {
                out.push(self.cell_index(CellKind::Cube, 0, x, y, z));
                p[o] -= 1;
                out.push(self.cell_index(CellKind::Cube, 0, p[0], p[1], p[2]));
            }
            CellKind::Cube => unreachable!("cubes have no cofacets"),
        }
    }

    /// The two endpoint vertices of an edge.
    pub fn edge_endpoints(&self, edge: usize) -> [usize; 2] {
        let mut v = Vec::with_capacity(2);
        self.facets(CellKind::Edge, edge, &mut v);
        [v[0], v[1]]
    }

    /// The two cubes sharing a face.
    pub fn face_cocubes(&self, face: usize) -> [usize; 2] {
        let mut v = Vec::with_capacity(2);
        self.cofacets(CellKind::Face, face, &mut v);
        [v[0], v[1]]
    }

    /// The six edges meeting at a vertex.
    pub fn vertex_coedges(&self, vertex: usize) -> Vec<usize> {
        let mut v = Vec::with_capacity(6);
        self.cofacets(CellKind::Vertex, vertex, &mut v);
        v
    }

    /// The six faces bounding a cube.
    pub fn cube_faces(&self, cube: usize) -> Vec<usize> {
        let mut v = Vec::with_capacity(6);
        self.facets(CellKind::Cube, cube, &mut v);
        v
    }

    /// Boundary map: incident cells of one dimension lower, mod 2.
    /// Rejects 0-dimensional input.
    pub fn boundary(&self, c: &Chain) -> Result<Chain> {
        if c.kind == CellKind::Vertex {
            return Err(Error::Dimension(
                "boundary of a 0-dimensional chain is undefined".into(),
            ));
        }
        let out_kind = CellKind::from_dim(c.kind.dim() - 1);
        let mut out = Chain::empty(self, c.side, out_kind);
        let mut buf = Vec::with_capacity(6);
        for idx in c.iter_cells() {
            buf.clear();
            self.facets(c.kind, idx, &mut buf);
            for &f in &buf {
                out.flip(f);
            }
        }
        Ok(out)
    }

    /// Dual boundary map on the primal representation: incident cells of one
    /// dimension higher, mod 2. Rejects 3-dimensional input.
    pub fn dual_boundary(&self, c: &Chain) -> Result<Chain> {
        if c.kind == CellKind::Cube {
            return Err(Error::Dimension(
                "dual boundary of a 3-dimensional chain is undefined".into(),
            ));
        }
        let out_kind = CellKind::from_dim(c.kind.dim() + 1);
        let mut out = Chain::empty(self, c.side, out_kind);
        let mut buf = Vec::with_capacity(6);
        for idx in c.iter_cells() {
            buf.clear();
            self.cofacets(c.kind, idx, &mut buf);
            for &f in &buf {
                out.flip(f);
            }
        }
        Ok(out)
    }

    /// True iff the primal boundary of `c` is empty. 0-chains are trivially
    /// cycles.
    pub fn is_cycle(&self, c: &Chain) -> bool {
        match c.kind {
            CellKind::Vertex => true,
            _ => self.boundary(c).expect("dim checked").is_empty(),
        }
    }

    /// True iff the dual-complex boundary of `c` (the coboundary of its
    /// primal representation) is empty. Dual 0-chains (cubes) are trivially
    /// cycles.
    pub fn is_dual_cycle(&self, c: &Chain) -> bool {
        match c.kind {
            CellKind::Cube => true,
            _ => self.dual_boundary(c).expect("dim checked").is_empty(),
        }
    }

    /// Homology class of a cycle as three winding parities, computed by
    /// intersection with coordinate test surfaces/curves at coordinate 0.
    ///
    /// Supported inputs: primal 1-cycles (edges), dual 1-cycles (faces),
    /// primal 2-cycles (faces), dual 2-cycles (edges). Non-cycle input is
    /// rejected.
    pub fn homology_class(&self, c: &Chain) -> Result<HomologyClass> {
        self.homology_class_shifted(c, [0, 0, 0])
    }

    /// As [`homology_class`](Self::homology_class) but with the test
    /// surfaces/curves shifted to the given coordinates. Any shift yields
    /// the same class (they differ by boundaries).
    pub fn homology_class_shifted(&self, c: &Chain, shift: [usize; 3]) -> Result<HomologyClass> {
        let one_dimensional = match (c.kind, c.side) {
            (CellKind::Edge, Side::Primal) | (CellKind::Face, Side::Dual) => true,
            (CellKind::Face, Side::Primal) | (CellKind::Edge, Side::Dual) => false,
            _ => {
                return Err(Error::Dimension(format!(
                    "homology class undefined for {:?}-side {:?} chains",
                    c.side, c.kind
                )))
            }
        };
        let closed = match c.side {
            Side::Primal => self.is_cycle(c),
            Side::Dual => self.is_dual_cycle(c),
        };
        if !closed {
            return Err(Error::Precondition(
                "homology class requires a cycle (chain has a boundary)".into(),
            ));
        }
        let mut windings = [false; 3];
        for idx in c.iter_cells() {
            let (o, x, y, z) = self.cell_coords(c.kind, idx);
            let coords = [x, y, z];
            let crossing = if one_dimensional {
                // A 1-cycle crosses the transverse test surface at axis
                // coordinate `shift[o]` once per cell of orientation o there.
                coords[o] == shift[o]
            } else {
                // A 2-cycle is probed by the transverse test curve along its
                // normal axis: cells whose in-plane coordinates both match.
                let (a, b) = other_axes(o);
                coords[a] == shift[a] && coords[b] == shift[b]
            };
            if crossing {
                windings[o] = !windings[o];
            }
        }
        Ok(HomologyClass(windings))
    }

    /// Popcount of the AND of two chains over the same cell set, mod 2.
    /// Bilinear over XOR. Sides may differ (e.g. a primal 2-chain against a
    /// dual 1-cycle, both face-supported); kinds may not.
    pub fn intersection_parity(&self, a: &Chain, b: &Chain) -> Result<u8> {
        if a.kind != b.kind {
            return Err(Error::Mismatch(format!(
                "intersection parity needs a common cell space, got {:?} vs {:?}",
                a.kind, b.kind
            )));
        }
        Ok(gf2::and_parity(&a.bits, &b.bits) as u8)
    }

    /// GF(2) basis of the 1-cycle space: Z_1 = ker(boundary on edges) for the
    /// primal side, Z_1* = ker(dual boundary on faces) for the dual side.
    /// Rank is 2 d^3 + 1 on the 3-torus.
    pub fn cycle_space_basis(&self, side: Side) -> Vec<Chain> {
        let (kind, eq_kind) = match side {
            Side::Primal => (CellKind::Edge, CellKind::Vertex),
            Side::Dual => (CellKind::Face, CellKind::Cube),
        };
        let mut a = BitMatrix::new(self.n_cells(kind));
        let mut buf = Vec::with_capacity(6);
        for cell in 0..self.n_cells(eq_kind) {
            buf.clear();
            match side {
                Side::Primal => self.cofacets(CellKind::Vertex, cell, &mut buf),
                Side::Dual => self.facets(CellKind::Cube, cell, &mut buf),
            }
            let mut row = gf2::zero_row(self.n_cells(kind));
            for &i in &buf {
                row.set(i, true);
            }
            a.push_row(row);
        }
        a.kernel_basis()
            .into_iter()
            .map(|bits| Chain { side, kind, bits })
            .collect()
    }

    /// Straight wrapping line of d collinear edges along `axis`; `t` gives
    /// the two fixed transverse coordinates in increasing-axis order.
    pub fn wrapping_line(&self, side: Side, axis: usize, t: [usize; 2]) -> Chain {
        let mut c = Chain::empty(self, side, CellKind::Edge);
        let (a, b) = other_axes(axis);
        for s in 0..self.d {
            let mut p = [0isize; 3];
            p[axis] = s as isize;
            p[a] = t[0] as isize;
            p[b] = t[1] as isize;
            c.flip(self.cell_index(CellKind::Edge, axis, p[0], p[1], p[2]));
        }
        c
    }

    /// Straight wrapping dual line: d faces normal to `axis`, stacked along
    /// `axis` at fixed transverse coordinates `t` (increasing-axis order).
    pub fn wrapping_dual_line(&self, side: Side, axis: usize, t: [usize; 2]) -> Chain {
        let mut c = Chain::empty(self, side, CellKind::Face);
        let (a, b) = other_axes(axis);
        for s in 0..self.d {
            let mut p = [0isize; 3];
            p[axis] = s as isize;
            p[a] = t[0] as isize;
            p[b] = t[1] as isize;
            c.flip(self.cell_index(CellKind::Face, axis, p[0], p[1], p[2]));
        }
        c
    }
}

/// A set of k-cells of the primal or dual lattice as a bit-vector; the
/// universal currency for errors, cycles, membranes, and operator supports.
/// Addition is XOR.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chain {
    side: Side,
    kind: CellKind,
    bits: BitRow,
}

impl Chain {
    pub fn empty(lat: &CubicLattice, side: Side, kind: CellKind) -> Self {
        Chain { side, kind, bits: gf2::zero_row(lat.n_cells(kind)) }
    }

    pub fn from_cells(
        lat: &CubicLattice,
        side: Side,
        kind: CellKind,
        cells: impl IntoIterator<Item = usize>,
    ) -> Self {
        let mut c = Chain::empty(lat, side, kind);
        for i in cells {
            c.flip(i);
        }
        c
    }

    pub fn single(lat: &CubicLattice, side: Side, kind: CellKind, idx: usize) -> Self {
        Chain::from_cells(lat, side, kind, [idx])
    }

    pub fn from_bits(side: Side, kind: CellKind, bits: BitRow) -> Self {
        Chain { side, kind, bits }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    /// Primal dimension of the underlying cells.
    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Dimension as a chain of the dual complex.
    pub fn dual_dim(&self) -> usize {
        3 - self.kind.dim()
    }

    pub fn bits(&self) -> &BitRow {
        &self.bits
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn flip(&mut self, idx: usize) {
        let cur = self.bits[idx];
        self.bits.set(idx, !cur);
    }

    pub fn set(&mut self, idx: usize, value: bool) {
        self.bits.set(idx, value);
    }

    /// XOR another chain into this one. Chains must live over the same cell
    /// set; the side tag of `self` is kept.
    pub fn xor_assign(&mut self, other: &Chain) {
        debug_assert_eq!(self.kind, other.kind);
        debug_assert_eq!(self.bits.len(), other.bits.len());
        gf2::xor_into(&mut self.bits, &other.bits);
    }

    pub fn xor(&self, other: &Chain) -> Chain {
        let mut c = self.clone();
        c.xor_assign(other);
        c
    }

    /// |c|: number of cells in the support.
    pub fn weight(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }
}

/// Three winding parities, one per lattice direction. The class of a
/// boundary is (0,0,0); the class is additive under chain XOR.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct HomologyClass(pub [bool; 3]);

impl HomologyClass {
    pub fn is_trivial(&self) -> bool {
        !self.0[0] && !self.0[1] && !self.0[2]
    }

    pub fn xor(&self, other: &HomologyClass) -> HomologyClass {
        HomologyClass([
            self.0[0] ^ other.0[0],
            self.0[1] ^ other.0[1],
            self.0[2] ^ other.0[2],
        ])
    }
}

impl std::fmt::Display for HomologyClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{},{})",
            self.0[0] as u8, self.0[1] as u8, self.0[2] as u8
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::Echelon;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn lat(d: usize) -> CubicLattice {
        CubicLattice::new(d).unwrap()
    }

    fn random_chain(lat: &CubicLattice, kind: CellKind, rng: &mut impl Rng) -> Chain {
        let mut c = Chain::empty(lat, Side::Primal, kind);
        for i in 0..lat.n_cells(kind) {
            if rng.gen_bool(0.5) {
                c.flip(i);
            }
        }
        c
    }

    #[test]
    fn cell_counts() {
        let l = lat(3);
        assert_eq!(l.n_cells(CellKind::Vertex), 27);
        assert_eq!(l.n_cells(CellKind::Edge), 81);
        assert_eq!(l.n_cells(CellKind::Face), 81);
        assert_eq!(l.n_cells(CellKind::Cube), 27);
    }

    #[test]
    fn index_roundtrip() {
        let l = lat(4);
        for kind in [CellKind::Vertex, CellKind::Edge, CellKind::Face, CellKind::Cube] {
            for idx in 0..l.n_cells(kind) {
                let (o, x, y, z) = l.cell_coords(kind, idx);
                assert_eq!(l.cell_index(kind, o, x as isize, y as isize, z as isize), idx);
            }
        }
        // Coordinates wrap mod d.
        assert_eq!(
            l.cell_index(CellKind::Vertex, 0, -1, 4, 7),
            l.cell_index(CellKind::Vertex, 0, 3, 0, 3)
        );
    }

    #[test]
    fn face_boundary_is_four_edges() {
        let l = lat(3);
        for f in 0..l.n_cells(CellKind::Face) {
            let b = l
                .boundary(&Chain::single(&l, Side::Primal, CellKind::Face, f))
                .unwrap();
            assert_eq!(b.weight(), 4);
        }
    }

    #[test]
    fn incidence_degrees() {
        let l = lat(3);
        for e in 0..l.n_cells(CellKind::Edge) {
            let cof = l
                .dual_boundary(&Chain::single(&l, Side::Primal, CellKind::Edge, e))
                .unwrap();
            assert_eq!(cof.weight(), 4, "every edge has 4 cofaces");
        }
        for c in 0..l.n_cells(CellKind::Cube) {
            assert_eq!(l.cube_faces(c).len(), 6);
        }
        for v in 0..l.n_cells(CellKind::Vertex) {
            assert_eq!(l.vertex_coedges(v).len(), 6);
        }
    }

    #[test]
    fn boundary_of_boundary_vanishes_on_cells() {
        let l = lat(3);
        for c in 0..l.n_cells(CellKind::Cube) {
            let faces = l
                .boundary(&Chain::single(&l, Side::Primal, CellKind::Cube, c))
                .unwrap();
            assert!(l.boundary(&faces).unwrap().is_empty());
        }
        for v in 0..l.n_cells(CellKind::Vertex) {
            let edges = l
                .dual_boundary(&Chain::single(&l, Side::Primal, CellKind::Vertex, v))
                .unwrap();
            assert!(l.dual_boundary(&edges).unwrap().is_empty());
        }
    }

    #[test]
    fn dimension_limits_rejected() {
        let l = lat(2);
        let v = Chain::single(&l, Side::Primal, CellKind::Vertex, 0);
        assert!(l.boundary(&v).is_err());
        let c = Chain::single(&l, Side::Primal, CellKind::Cube, 0);
        assert!(l.dual_boundary(&c).is_err());
    }

    #[test]
    fn two_adjacent_faces_bound_a_six_edge_loop() {
        // Oracle (worked out on a 3x3x3 patch by enumerating incidences):
        // two z-normal faces side by side in x share exactly one edge, so the
        // XOR of their boundaries is a 6-edge loop omitting the shared edge.
        let l = lat(3);
        let f1 = l.cell_index(CellKind::Face, 2, 0, 0, 0);
        let f2 = l.cell_index(CellKind::Face, 2, 1, 0, 0);
        let pair = Chain::from_cells(&l, Side::Primal, CellKind::Face, [f1, f2]);
        let b = l.boundary(&pair).unwrap();
        assert_eq!(b.weight(), 6);
        let shared = l.cell_index(CellKind::Edge, 1, 1, 0, 0);
        assert!(!b.contains(shared), "shared edge cancels mod 2");
        assert!(l.is_cycle(&b));
        // The loop consists of the outer rim of the 2x1 rectangle.
        let expected = Chain::from_cells(
            &l,
            Side::Primal,
            CellKind::Edge,
            [
                l.cell_index(CellKind::Edge, 0, 0, 0, 0),
                l.cell_index(CellKind::Edge, 0, 1, 0, 0),
                l.cell_index(CellKind::Edge, 0, 0, 1, 0),
                l.cell_index(CellKind::Edge, 0, 1, 1, 0),
                l.cell_index(CellKind::Edge, 1, 0, 0, 0),
                l.cell_index(CellKind::Edge, 1, 2, 0, 0),
            ],
        );
        assert_eq!(b, expected);
    }

    #[test]
    fn wrapping_line_coboundary_is_a_tube() {
        // Oracle at d = 4: a straight wrapping line of 4 collinear edges has
        // 4d = 16 cofaces forming a tube (each edge contributes 4 faces, all
        // distinct because the faces of consecutive edges do not coincide).
        let l = lat(4);
        let line = l.wrapping_line(Side::Primal, 0, [1, 2]);
        assert_eq!(line.weight(), 4);
        assert!(l.is_cycle(&line));
        let tube = l.dual_boundary(&line).unwrap();
        assert_eq!(tube.weight(), 16);
        // The tube is a closed surface of the dual complex.
        assert!(l.is_dual_cycle(&tube));
    }

    #[test]
    fn is_cycle_examples() {
        let l = lat(4);
        let plaquette = l
            .boundary(&Chain::single(&l, Side::Primal, CellKind::Face, 7))
            .unwrap();
        assert!(l.is_cycle(&plaquette));
        let single = Chain::single(&l, Side::Primal, CellKind::Edge, 3);
        assert!(!l.is_cycle(&single));
        assert!(l.is_cycle(&l.wrapping_line(Side::Primal, 2, [0, 3])));
    }

    #[test]
    fn homology_class_examples() {
        let l = lat(4);
        let plaquette = l
            .boundary(&Chain::single(&l, Side::Primal, CellKind::Face, 11))
            .unwrap();
        assert!(l.homology_class(&plaquette).unwrap().is_trivial());

        let line = l.wrapping_line(Side::Primal, 0, [2, 1]);
        assert_eq!(l.homology_class(&line).unwrap(), HomologyClass([true, false, false]));

        // XOR of two parallel x-wrapping lines is trivial, and indeed lies in
        // the boundary space: confirm via a GF(2) span of all face boundaries.
        let pair = line.xor(&l.wrapping_line(Side::Primal, 0, [0, 0]));
        assert!(l.homology_class(&pair).unwrap().is_trivial());
        let mut boundaries = Echelon::new();
        for f in 0..l.n_cells(CellKind::Face) {
            let b = l
                .boundary(&Chain::single(&l, Side::Primal, CellKind::Face, f))
                .unwrap();
            boundaries.insert(b.bits());
        }
        assert!(boundaries.contains(pair.bits()));
        assert!(!boundaries.contains(line.bits()));

        // Non-cycle input is rejected.
        let open = Chain::single(&l, Side::Primal, CellKind::Edge, 5);
        assert!(l.homology_class(&open).is_err());
    }

    #[test]
    fn homology_class_shift_invariance() {
        let l = lat(4);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..20 {
            // Random 1-cycle: random face chain's boundary XOR random lines.
            let mut c = l.boundary(&random_chain(&l, CellKind::Face, &mut rng)).unwrap();
            for axis in AXES {
                if rng.gen_bool(0.5) {
                    c.xor_assign(&l.wrapping_line(Side::Primal, axis, [0, 0]));
                }
            }
            let base = l.homology_class(&c).unwrap();
            let shifted = l
                .homology_class_shifted(&c, [1, 3, 2])
                .unwrap();
            assert_eq!(base, shifted);
        }
    }

    #[test]
    fn intersection_parity_examples() {
        let l = lat(4);
        let a = Chain::single(&l, Side::Primal, CellKind::Edge, 0);
        let b = Chain::single(&l, Side::Primal, CellKind::Edge, 1);
        assert_eq!(l.intersection_parity(&a, &b).unwrap(), 0);
        let f = Chain::single(&l, Side::Primal, CellKind::Face, 0);
        assert!(l.intersection_parity(&a, &f).is_err(), "mismatched cell spaces");
    }

    #[test]
    fn boundaries_meet_dual_cycles_evenly() {
        // Exhaustive at d = 3: every cube-boundary surface has even
        // intersection with every generator of the dual 1-cycle space.
        let l = lat(3);
        let dual_basis = l.cycle_space_basis(Side::Dual);
        for c in 0..l.n_cells(CellKind::Cube) {
            let surf = l
                .boundary(&Chain::single(&l, Side::Primal, CellKind::Cube, c))
                .unwrap();
            for z in &dual_basis {
                assert_eq!(l.intersection_parity(&surf, z).unwrap(), 0);
            }
        }
    }

    #[test]
    fn cycle_space_rank_at_d2() {
        let l = lat(2);
        let primal = l.cycle_space_basis(Side::Primal);
        assert_eq!(primal.len(), 17, "rank 2 d^3 + 1 = 17 at d = 2");
        let dual = l.cycle_space_basis(Side::Dual);
        assert_eq!(dual.len(), 17);
        for c in primal.iter() {
            assert!(l.is_cycle(c));
        }
        for c in dual.iter() {
            assert!(l.is_dual_cycle(c));
        }
        // The empty chain is always in the span.
        let mut span = Echelon::new();
        for c in &primal {
            span.insert(c.bits());
        }
        let empty = Chain::empty(&l, Side::Primal, CellKind::Edge);
        assert!(span.contains(empty.bits()));
    }

    #[test]
    fn cycle_space_rank_matches_formula() {
        for d in 2..=4 {
            let l = lat(d);
            assert_eq!(l.cycle_space_basis(Side::Primal).len(), 2 * l.volume() + 1);
        }
    }

    proptest! {
        #[test]
        fn boundary_squared_is_zero(d in 2usize..=5, seed in 0u64..1000) {
            let l = lat(d);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for kind in [CellKind::Face, CellKind::Cube] {
                let c = random_chain(&l, kind, &mut rng);
                let bb = l.boundary(&l.boundary(&c).unwrap()).unwrap();
                prop_assert!(bb.is_empty());
            }
        }

        #[test]
        fn dual_boundary_squared_is_zero(d in 2usize..=5, seed in 0u64..1000) {
            let l = lat(d);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for kind in [CellKind::Vertex, CellKind::Edge] {
                let c = random_chain(&l, kind, &mut rng);
                let bb = l.dual_boundary(&l.dual_boundary(&c).unwrap()).unwrap();
                prop_assert!(bb.is_empty());
            }
        }

        #[test]
        fn boundary_is_linear(d in 2usize..=4, seed in 0u64..1000) {
            let l = lat(d);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a = random_chain(&l, CellKind::Face, &mut rng);
            let b = random_chain(&l, CellKind::Face, &mut rng);
            let lhs = l.boundary(&a.xor(&b)).unwrap();
            let rhs = l.boundary(&a).unwrap().xor(&l.boundary(&b).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn homology_class_is_additive(seed in 0u64..1000) {
            let l = lat(4);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut cycles = Vec::new();
            for _ in 0..2 {
                let mut c = l.boundary(&random_chain(&l, CellKind::Face, &mut rng)).unwrap();
                for axis in AXES {
                    if rng.gen_bool(0.5) {
                        c.xor_assign(&l.wrapping_line(Side::Primal, axis, [0, 1]));
                    }
                }
                cycles.push(c);
            }
            let ca = l.homology_class(&cycles[0]).unwrap();
            let cb = l.homology_class(&cycles[1]).unwrap();
            let cab = l.homology_class(&cycles[0].xor(&cycles[1])).unwrap();
            prop_assert_eq!(cab, ca.xor(&cb));
        }

        #[test]
        fn intersection_parity_is_bilinear(seed in 0u64..1000) {
            let l = lat(3);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a = random_chain(&l, CellKind::Edge, &mut rng);
            let b = random_chain(&l, CellKind::Edge, &mut rng);
            let c = random_chain(&l, CellKind::Edge, &mut rng);
            let lhs = l.intersection_parity(&a.xor(&b), &c).unwrap();
            let rhs = l.intersection_parity(&a, &c).unwrap()
                ^ l.intersection_parity(&b, &c).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
