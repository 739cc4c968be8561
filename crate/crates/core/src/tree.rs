//! Graph manifolds presented as trees of Seifert pieces glued along tori.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seifert::{self, FillOutcome, SeifertError, SeifertPiece};
use crate::slopes::{GluingMap, Slope};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("edge `{edge}`: gluing matrix has determinant {det}, expected -1")]
    Determinant { edge: String, det: i128 },
    #[error("edge `{edge}`: piece index {piece} does not exist")]
    DanglingPiece { edge: String, piece: usize },
    #[error("edge `{edge}`: piece `{piece}` has no boundary {boundary}")]
    DanglingBoundary { edge: String, piece: String, boundary: usize },
    #[error("boundary {boundary} of piece `{piece}` is used by edges `{first}` and `{second}`")]
    ReusedBoundary { piece: String, boundary: usize, first: String, second: String },
    #[error("gluing graph is not a tree: {0}")]
    NotATree(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("no edge named `{0}`")]
    UnknownEdge(String),
    #[error("boundary {boundary} of piece `{piece}` is not open")]
    NotOpen { piece: String, boundary: usize },
    #[error("slope assignment missing for boundary {boundary} of piece `{piece}`")]
    IncompleteAssignment { piece: String, boundary: usize },
    #[error("fiber filling of `{0}` with further open boundaries is not representable")]
    UnsupportedFiberFilling(String),
    #[error(transparent)]
    Seifert(#[from] SeifertError),
}

/// A boundary torus: `boundary` indexes the boundaries of `piece`, from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryRef {
    pub piece: usize,
    pub boundary: usize,
}

impl BoundaryRef {
    pub fn new(piece: usize, boundary: usize) -> Self {
        BoundaryRef { piece, boundary }
    }
}

/// Gluing of boundary `a` to boundary `b`; `map` sends `(d, h)` slopes on
/// `a` to slopes on `b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub a: BoundaryRef,
    pub b: BoundaryRef,
    pub map: GluingMap,
    /// Edges attaching copies of N during N-filling.
    #[serde(default)]
    pub synthetic: bool,
}

impl Edge {
    pub fn new(id: impl Into<String>, a: BoundaryRef, b: BoundaryRef, map: GluingMap) -> Self {
        Edge { id: id.into(), a, b, map, synthetic: false }
    }

    pub fn touches(&self, piece: usize) -> bool {
        self.a.piece == piece || self.b.piece == piece
    }

    /// `(this side, other side, map from this side)` as seen from `piece`.
    pub fn oriented_from(&self, piece: usize) -> (BoundaryRef, BoundaryRef, GluingMap) {
        if self.a.piece == piece {
            (self.a, self.b, self.map)
        } else {
            (self.b, self.a, self.map.inverse())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GmTree {
    pieces: Vec<SeifertPiece>,
    edges: Vec<Edge>,
}

/// Connected-sum factors left by a fiber-slope filling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumDecomposition {
    pub summands: Vec<GmTree>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Filled {
    Tree(GmTree),
    Sum(SumDecomposition),
}

/// Result of cutting a tree along one edge.
#[derive(Debug, Clone)]
pub struct Cut {
    pub side_a: GmTree,
    pub boundary_a: BoundaryRef,
    pub side_b: GmTree,
    pub boundary_b: BoundaryRef,
    pub map: GluingMap,
    pub edge_id: String,
}

fn sphere() -> GmTree {
    GmTree { pieces: vec![SeifertPiece::closed("S3", 1, &[])], edges: vec![] }
}

/// `L(alpha, beta)`, the neighborhood of a `(alpha, beta)` fiber filled along
/// the fiber: one fiber `alpha/beta` over the sphere, so `|H1| = alpha`.
fn lens(name: &str, beta: i64, alpha: i64) -> GmTree {
    let piece = seifert::normalize_sfs(&SeifertPiece::closed(name, 0, &[(alpha, beta)])).expect("coprime fiber");
    GmTree { pieces: vec![piece], edges: vec![] }
}

/// Checks the tree invariants and normalizes every piece.
pub fn validate_tree(pieces: Vec<SeifertPiece>, edges: Vec<Edge>) -> Result<GmTree, TreeError> {
    let mut names = HashSet::new();
    for p in &pieces {
        if !names.insert(p.name.clone()) {
            return Err(TreeError::DuplicateName(p.name.clone()));
        }
    }
    let mut ids = HashSet::new();
    for e in &edges {
        if !ids.insert(e.id.clone()) {
            return Err(TreeError::DuplicateName(e.id.clone()));
        }
    }
    let pieces = pieces.iter().map(seifert::normalize_sfs).collect::<Result<Vec<_>, _>>()?;
    let mut used: BTreeMap<BoundaryRef, String> = BTreeMap::new();
    for e in &edges {
        let det = e.map.det();
        if det != -1 {
            return Err(TreeError::Determinant { edge: e.id.clone(), det });
        }
        for side in [e.a, e.b] {
            let piece = pieces
                .get(side.piece)
                .ok_or(TreeError::DanglingPiece { edge: e.id.clone(), piece: side.piece })?;
            if side.boundary >= piece.boundaries {
                return Err(TreeError::DanglingBoundary {
                    edge: e.id.clone(),
                    piece: piece.name.clone(),
                    boundary: side.boundary,
                });
            }
            if let Some(first) = used.insert(side, e.id.clone()) {
                return Err(TreeError::ReusedBoundary {
                    piece: piece.name.clone(),
                    boundary: side.boundary,
                    first,
                    second: e.id.clone(),
                });
            }
        }
    }
    if pieces.is_empty() {
        return Err(TreeError::NotATree("no pieces".into()));
    }
    if edges.len() + 1 != pieces.len() {
        return Err(TreeError::NotATree(format!("{} pieces but {} edges", pieces.len(), edges.len())));
    }
    let tree = GmTree { pieces, edges };
    let reach = tree.component_of(0, None);
    if reach.len() != tree.pieces.len() {
        let missing = (0..tree.pieces.len()).find(|i| !reach.contains(i)).unwrap();
        return Err(TreeError::NotATree(format!("piece `{}` is disconnected", tree.pieces[missing].name)));
    }
    Ok(tree)
}

impl GmTree {
    pub fn single(piece: SeifertPiece) -> Result<GmTree, TreeError> {
        validate_tree(vec![piece], vec![])
    }

    pub fn pieces(&self) -> &[SeifertPiece] {
        &self.pieces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn piece_index(&self, name: &str) -> Option<usize> {
        self.pieces.iter().position(|p| p.name == name)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn original_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| !e.synthetic)
    }

    pub fn open_boundaries(&self) -> Vec<BoundaryRef> {
        let used: HashSet<BoundaryRef> = self.edges.iter().flat_map(|e| [e.a, e.b]).collect();
        self.pieces
            .iter()
            .enumerate()
            .flat_map(|(i, p)| (0..p.boundaries).map(move |j| BoundaryRef::new(i, j)))
            .filter(|b| !used.contains(b))
            .collect()
    }

    pub fn is_closed(&self) -> bool {
        self.open_boundaries().is_empty()
    }

    pub fn describe(&self, b: BoundaryRef) -> String {
        format!("{}.{}", self.pieces[b.piece].name, b.boundary + 1)
    }

    pub fn degree(&self, piece: usize) -> usize {
        self.edges.iter().filter(|e| e.touches(piece)).count()
    }

    /// Edges incident to a piece of degree one, in storage order.
    pub fn leaf_edges(&self) -> Vec<&Edge> {
        self.edges
            .iter()
            .filter(|e| self.degree(e.a.piece) == 1 || self.degree(e.b.piece) == 1)
            .collect()
    }

    /// Pieces reachable from `start` without crossing edge `skip`.
    fn component_of(&self, start: usize, skip: Option<usize>) -> Vec<usize> {
        let mut seen = vec![false; self.pieces.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(p) = stack.pop() {
            for (k, e) in self.edges.iter().enumerate() {
                if Some(k) == skip || !e.touches(p) {
                    continue;
                }
                let other = if e.a.piece == p { e.b.piece } else { e.a.piece };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        (0..self.pieces.len()).filter(|&i| seen[i]).collect()
    }

    /// Sub-tree on `keep` (sorted piece indices), dropping edges that leave it.
    fn restrict(&self, keep: &[usize]) -> (GmTree, Vec<Option<usize>>) {
        let mut remap = vec![None; self.pieces.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = Some(new);
        }
        let pieces = keep.iter().map(|&i| self.pieces[i].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter_map(|e| {
                let (a, b) = (remap[e.a.piece]?, remap[e.b.piece]?);
                Some(Edge {
                    a: BoundaryRef::new(a, e.a.boundary),
                    b: BoundaryRef::new(b, e.b.boundary),
                    ..e.clone()
                })
            })
            .collect();
        (GmTree { pieces, edges }, remap)
    }

    pub fn cut_edge(&self, id: &str) -> Result<Cut, TreeError> {
        let k = self.edges.iter().position(|e| e.id == id).ok_or_else(|| TreeError::UnknownEdge(id.into()))?;
        let e = &self.edges[k];
        let side_a_pieces = self.component_of(e.a.piece, Some(k));
        let side_b_pieces = self.component_of(e.b.piece, Some(k));
        let (side_a, remap_a) = self.restrict(&side_a_pieces);
        let (side_b, remap_b) = self.restrict(&side_b_pieces);
        Ok(Cut {
            boundary_a: BoundaryRef::new(remap_a[e.a.piece].unwrap(), e.a.boundary),
            boundary_b: BoundaryRef::new(remap_b[e.b.piece].unwrap(), e.b.boundary),
            side_a,
            side_b,
            map: e.map,
            edge_id: e.id.clone(),
        })
    }

    /// Disjoint union of two trees joined by a new edge from `at_self` to `at_other`.
    pub fn glue(
        &self,
        at_self: BoundaryRef,
        other: &GmTree,
        at_other: BoundaryRef,
        map: GluingMap,
        id: impl Into<String>,
    ) -> GmTree {
        let shift = self.pieces.len();
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|e| Edge {
            a: BoundaryRef::new(e.a.piece + shift, e.a.boundary),
            b: BoundaryRef::new(e.b.piece + shift, e.b.boundary),
            ..e.clone()
        }));
        edges.push(Edge::new(id, at_self, BoundaryRef::new(at_other.piece + shift, at_other.boundary), map));
        GmTree { pieces, edges }
    }

    /// Removes boundary `b` from its piece and renumbers the later boundaries.
    fn drop_boundary_index(&mut self, b: BoundaryRef) {
        for e in &mut self.edges {
            for side in [&mut e.a, &mut e.b] {
                if side.piece == b.piece && side.boundary > b.boundary {
                    side.boundary -= 1;
                }
            }
        }
    }

    /// Replaces piece `i` by `piece`, keeping its index.
    pub fn with_piece(&self, i: usize, piece: SeifertPiece) -> GmTree {
        let mut t = self.clone();
        t.pieces[i] = piece;
        t
    }

    /// Same tree with every piece renamed `prefix` + index; keys ignore names,
    /// so this only matters for display.
    pub fn rename_pieces(&self, prefix: &str) -> GmTree {
        let mut t = self.clone();
        for (i, p) in t.pieces.iter_mut().enumerate() {
            p.name = format!("{prefix}{i}");
        }
        t
    }

    /// Reorders pieces by `order` (a permutation of indices).
    pub fn permute_pieces(&self, order: &[usize]) -> GmTree {
        let mut pos = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        GmTree {
            pieces: order.iter().map(|&i| self.pieces[i].clone()).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    a: BoundaryRef::new(pos[e.a.piece], e.a.boundary),
                    b: BoundaryRef::new(pos[e.b.piece], e.b.boundary),
                    ..e.clone()
                })
                .collect(),
        }
    }

    /// Same manifold with edge `id` stored in the opposite direction.
    pub fn reverse_edge(&self, id: &str) -> GmTree {
        let mut t = self.clone();
        for e in &mut t.edges {
            if e.id == id {
                std::mem::swap(&mut e.a, &mut e.b);
                e.map = e.map.inverse();
            }
        }
        t
    }

    /// Same manifold after the section change `d ↦ d + k h` on chosen boundaries.
    ///
    /// Each shift raises the twist of its piece by `k`; slopes on the boundary
    /// transform by `(x, y) ↦ (x, y - k x)`.
    pub fn shift_sections(&self, shifts: &BTreeMap<BoundaryRef, i64>) -> GmTree {
        let mut t = self.clone();
        for (b, &k) in shifts {
            t.pieces[b.piece].e0 += k;
        }
        let basis = |b: &BoundaryRef| GluingMap::new(1, 0, -shifts.get(b).copied().unwrap_or(0), 1);
        for e in &mut t.edges {
            e.map = basis(&e.b).compose(&e.map).compose(&basis(&e.a).inverse());
        }
        t
    }

    fn signature(piece: &SeifertPiece) -> String {
        let mut fibers = piece.fibers.clone();
        fibers.sort();
        let fibers: Vec<String> = fibers.iter().map(|f| f.to_string()).collect();
        format!("{};{};{}", piece.e0, fibers.join(","), piece.boundaries)
    }

    fn encode_from(&self, piece: usize, parent_edge: Option<usize>) -> String {
        let mut out = format!("<{}", Self::signature(&self.pieces[piece]));
        for j in 0..self.pieces[piece].boundaries {
            let here = BoundaryRef::new(piece, j);
            let incident = self.edges.iter().position(|e| e.a == here || e.b == here);
            match incident {
                None => out.push_str("|o"),
                Some(k) if Some(k) == parent_edge => out.push_str("|^"),
                Some(k) => {
                    let (_, there, m) = self.edges[k].oriented_from(piece);
                    out.push_str(&format!(
                        "|[{},{},{},{}]@{}{}",
                        m.a,
                        m.b,
                        m.c,
                        m.d,
                        there.boundary,
                        self.encode_from(there.piece, Some(k))
                    ));
                }
            }
        }
        out.push('>');
        out
    }

    /// Deterministic key, invariant under piece order, fiber order, names and
    /// edge direction.
    pub fn canonical_key(&self) -> Vec<u8> {
        (0..self.pieces.len())
            .map(|r| self.encode_from(r, None))
            .min()
            .unwrap_or_default()
            .into_bytes()
    }

    /// Dehn filling of an open boundary along `slope`, given in its `(d, h)` basis.
    ///
    /// The fiber slope dissolves the piece into a connected sum: a lens space
    /// `L(alpha, beta)` per exceptional fiber and, per attached subtree, that
    /// subtree filled along the image of the fiber; with nothing left the sum is `S^3`.
    pub fn fill_boundary(&self, b: BoundaryRef, slope: Slope) -> Result<Filled, TreeError> {
        if !self.open_boundaries().contains(&b) {
            return Err(TreeError::NotOpen {
                piece: self.pieces.get(b.piece).map(|p| p.name.clone()).unwrap_or_default(),
                boundary: b.boundary,
            });
        }
        match seifert::fill_boundary(&self.pieces[b.piece], slope)? {
            FillOutcome::Piece(p) => {
                let mut t = self.clone();
                t.drop_boundary_index(b);
                t.pieces[b.piece] = p;
                Ok(Filled::Tree(t))
            }
            FillOutcome::FiberFilling => self.fiber_fill(b).map(Filled::Sum),
        }
    }

    fn fiber_fill(&self, b: BoundaryRef) -> Result<SumDecomposition, TreeError> {
        let piece = &self.pieces[b.piece];
        let open_here = self.open_boundaries().iter().filter(|o| o.piece == b.piece).count();
        if open_here > 1 {
            return Err(TreeError::UnsupportedFiberFilling(piece.name.clone()));
        }
        let mut summands = Vec::new();
        for (i, f) in piece.fibers.iter().enumerate() {
            summands.push(lens(&format!("{}~L{}", piece.name, i), f.beta, f.alpha));
        }
        let incident: Vec<usize> =
            (0..self.edges.len()).filter(|&k| self.edges[k].touches(b.piece)).collect();
        for k in incident {
            let e = &self.edges[k];
            let (_, _, m) = e.oriented_from(b.piece);
            let cut = self.cut_edge(&e.id)?;
            let (sub, at) =
                if e.a.piece == b.piece { (cut.side_b, cut.boundary_b) } else { (cut.side_a, cut.boundary_a) };
            match sub.fill_boundary(at, m.apply(Slope::ZERO))? {
                Filled::Tree(t) => summands.push(t),
                Filled::Sum(s) => summands.extend(s.summands),
            }
        }
        if summands.is_empty() {
            summands.push(sphere());
        }
        Ok(SumDecomposition { summands })
    }

    /// Glues a copy of N to every open boundary so that the rational longitude
    /// of N meets the assigned slope.
    ///
    /// The gluing sends `alpha ↦ λ_N` and `delta + k·alpha ↦ ±(0,1)`, where
    /// `delta` is the simplest slope dual to `alpha` and `k` the dual choice.
    pub fn n_fill(&self, assignment: &BTreeMap<BoundaryRef, Slope>, dual_choice: &BTreeMap<BoundaryRef, i64>) -> Result<GmTree, TreeError> {
        let mut out = self.clone();
        let open = self.open_boundaries();
        for b in &open {
            let alpha = *assignment.get(b).ok_or_else(|| TreeError::IncompleteAssignment {
                piece: self.pieces[b.piece].name.clone(),
                boundary: b.boundary,
            })?;
            let k = dual_choice.get(b).copied().unwrap_or(0);
            let map = n_gluing_map(alpha, k);
            let mut n = GmTree::single(seifert::make_n())?;
            n.pieces[0].name = format!("N~{}", self.describe(*b));
            let id = format!("~{}", self.describe(*b));
            out = out.glue(*b, &n, BoundaryRef::new(0, 0), map, id);
            out.edges.last_mut().unwrap().synthetic = true;
        }
        Ok(out)
    }
}

/// Rational longitude of N in its `(d, h)` basis.
pub fn n_longitude() -> Slope {
    Slope::new(-1, 1).unwrap()
}

/// Simplest slope `delta` with `|det(alpha, delta)| = 1`.
pub fn canonical_dual(alpha: Slope) -> Slope {
    let (p, q) = (alpha.p() as i128, alpha.q() as i128);
    // u p + v q = 1, so det(alpha, (-v, u)) = p u + q v = 1
    let g = p.extended_gcd(&q);
    let sign = g.gcd.signum();
    let (u, v) = (g.x * sign, g.y * sign);
    let base = (-v, u);
    let at = |k: i128| Slope::from_wide(base.0 + k * p, base.1 + k * q).unwrap();
    let mut candidates = vec![0i128];
    for (x, y) in [(base.0, p), (base.1, q)] {
        if y != 0 {
            let root = -x / y;
            candidates.extend([root - 1, root, root + 1]);
        }
    }
    candidates
        .into_iter()
        .map(at)
        .min_by_key(|s| (s.height(), s.simplicity_key()))
        .unwrap()
}

/// Gluing map from a boundary with slope `alpha` into N, with `dual_choice`
/// Dehn twists about `alpha`.
pub fn n_gluing_map(alpha: Slope, dual_choice: i64) -> GluingMap {
    let delta = canonical_dual(alpha);
    let (dp, dq) = (delta.p() + dual_choice * alpha.p(), delta.q() + dual_choice * alpha.q());
    let source = GluingMap::from_columns((alpha.p(), alpha.q()), (dp, dq));
    let lam = n_longitude();
    let target = |s: i64| GluingMap::from_columns((lam.p(), lam.q()), (0, s));
    // det(map) = det(target) / det(source) must be -1
    let sign = if (target(1).det() * source.det()) < 0 { 1 } else { -1 };
    target(sign).compose(&source.inverse())
}

impl fmt::Display for GmTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.pieces {
            writeln!(f, "piece {} {} boundaries {}", p.name, p.sfs_text(), p.boundaries)?;
        }
        for e in &self.edges {
            writeln!(
                f,
                "glue {} {} [{},{};{},{}]",
                self.describe(e.a),
                self.describe(e.b),
                e.map.a,
                e.map.b,
                e.map.c,
                e.map.d
            )?;
        }
        Ok(())
    }
}
