//! L-space decisions for closed trees, L-space slope arcs for one-boundary
//! trees, and non-L-space certificates.

use std::collections::{BTreeMap, HashMap};
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homology::{self, HomologyError};
use crate::seifert::{self, JnWitness, LSpaceVerdict, Rational, SeifertError, SeifertPiece};
use crate::slopes::{arc_intersection, GluingMap, Slope, SlopeArc};
use crate::tree::{BoundaryRef, Edge, Filled, GmTree, TreeError};

/// Probed slopes never exceed this height in the boundary basis, keeping
/// all Seifert invariants far inside the integer range.
const HEIGHT_CAP: i64 = 1 << 24;

/// Interior witness candidates tried per arc intersection.
const CERT_SPREAD: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("tree has open boundaries")]
    NotClosed,
    #[error("decision not reached within denominator bound {0}; raise --max-denominator")]
    Unknown(i64),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Seifert(#[from] SeifertError),
}

/// Which leaf edge a closed tree is cut along first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeHeuristic {
    #[default]
    FirstLeaf,
    LastLeaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    /// Probed slopes `p/q` have `|p|` and Stern–Brocot frame coordinates at
    /// most this bound.
    pub max_denominator: i64,
    pub max_depth: usize,
    pub heuristic: EdgeHeuristic,
}

impl Default for Config {
    fn default() -> Self {
        Config { max_denominator: 4096, max_depth: 32, heuristic: EdgeHeuristic::FirstLeaf }
    }
}

/// Verdict without supporting data; the unit of memoization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    LSpace,
    NonLSpace,
    NotQhs,
    Unknown,
}

impl Status {
    /// Not an L-space: either a non-L rational homology sphere or `b1 > 0`.
    pub fn is_non_l(self) -> bool {
        matches!(self, Status::NonLSpace | Status::NotQhs)
    }
}

/// Evidence attached to a non-L-space verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A closed Seifert fibered space carrying a horizontal foliation.
    ClosedSeifert { piece: String, realization: Option<JnWitness>, boundary_sensitive: bool },
    /// A slope, in the first side's basis of `edge`, outside the strict
    /// L-space slopes of both sides.
    Gluing { edge: String, slope: Slope },
    /// A non-L connected summand.
    Summand { index: usize, witness: Box<Witness> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    LSpace,
    NonLSpace(Witness),
    NotQhs,
    Unknown { bound: i64 },
}

impl Verdict {
    pub fn status(&self) -> Status {
        match self {
            Verdict::LSpace => Status::LSpace,
            Verdict::NonLSpace(_) => Status::NonLSpace,
            Verdict::NotQhs => Status::NotQhs,
            Verdict::Unknown { .. } => Status::Unknown,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::NonLSpace(w) => Some(w),
            _ => None,
        }
    }
}

/// Brackets for the complement `K` of the strict L-space slopes:
/// `inner ⊆ K ⊆ outer`, both closed arcs containing the rational longitude.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ArcEstimate {
    pub longitude: Slope,
    pub nls_inner: SlopeArc,
    pub nls_outer: SlopeArc,
    pub exact: bool,
    pub tested_denominator_bound: i64,
}

impl ArcEstimate {
    fn exact(longitude: Slope, arc: SlopeArc) -> Self {
        ArcEstimate { longitude, nls_inner: arc, nls_outer: arc, exact: true, tested_denominator_bound: 0 }
    }

    /// The same estimate in another boundary basis.
    pub fn image(&self, m: &GluingMap) -> ArcEstimate {
        ArcEstimate {
            longitude: m.apply(self.longitude),
            nls_inner: self.nls_inner.image(m),
            nls_outer: self.nls_outer.image(m),
            ..self.clone()
        }
    }

    fn endpoints(&self) -> Vec<Slope> {
        let mut v = self.nls_inner.endpoints();
        v.extend(self.nls_outer.endpoints());
        v.dedup();
        v
    }
}

/// `(inner, outer)` closed brackets of the complement of the strict L-space slopes.
pub fn strict_complement_arc(est: &ArcEstimate) -> (SlopeArc, SlopeArc) {
    (est.nls_inner.closure(), est.nls_outer.closure())
}

/// Simplest `alpha` in `arc_a` with `map(alpha)` in `arc_b`.
pub fn find_witness(arc_a: &SlopeArc, map: &GluingMap, arc_b: &SlopeArc) -> Option<Slope> {
    simplest_of(&arc_intersection(arc_a, &arc_b.image(&map.inverse())), false)
}

fn simplest_of(arcs: &[SlopeArc], interior: bool) -> Option<Slope> {
    arcs.iter()
        .filter_map(|a| if interior { a.simplest_interior_member() } else { a.simplest_member() })
        .min_by_key(|s| s.simplicity_key())
}

/// Slope of the filling parameter `t = q/p` of a Seifert boundary.
fn slope_of_t(t: Rational) -> Slope {
    Slope::from_wide(*t.denom(), *t.numer()).expect("reduced fraction")
}

/// Rational longitude of a normalized one-boundary piece: `q/p = -(e0 + Σ r)`.
pub fn piece_longitude(p: &SeifertPiece) -> Slope {
    slope_of_t(-p.total_twist())
}

/// Exact complement of the strict L-space slopes of a one-boundary piece.
///
/// Filling along `t = q/p = N + u` gives `sfs(e0 + N; r, u)`. With `n` fibers,
/// `T0 = -n - e0` and `T1 = -e0`, the non-L fillings are: `(T1-1, T1-1+c)` with
/// `c` the realizability threshold of `r`, `(T0+1-c', T0+1)` with `c'` that of
/// `1 - r`, every `(N, N+1)` with `1-n <= e0+N <= -2`, some integers in
/// `[T0, T1]`, and the longitude. The fiber slope always gives an L-space.
pub fn exact_piece_arc(piece: &SeifertPiece) -> Result<SlopeArc, EngineError> {
    let p = seifert::normalize_sfs(piece)?;
    if p.boundaries != 1 {
        return Err(TreeError::NotOpen { piece: p.name.clone(), boundary: 0 }.into());
    }
    let lambda_t = -p.total_twist();
    let n = p.fibers.len() as i64;
    if n <= 1 {
        return Ok(SlopeArc::Point(slope_of_t(lambda_t)));
    }
    let int = |k: i64| Rational::from_integer(k as i128);
    let one = int(1);
    let (t0, t1) = (-n - p.e0, -p.e0);
    let (mut lo, mut hi) = (lambda_t, lambda_t);
    let mut take = |a: Rational, b: Rational| {
        lo = lo.min(a);
        hi = hi.max(b);
    };
    let r: Vec<Rational> = p.fibers.iter().map(|f| f.ratio()).collect();
    let c_fwd = seifert::realizable_threshold(&r);
    let c_rev = seifert::realizable_threshold(&r.iter().map(|x| one - x).collect::<Vec<_>>());
    if c_fwd > int(0) {
        take(int(t1 - 1), int(t1 - 1) + c_fwd);
    }
    if c_rev > int(0) {
        take(int(t0 + 1) - c_rev, int(t0 + 1));
    }
    for k in t0 + 1..=t1 - 2 {
        take(int(k), int(k + 1));
    }
    for k in t0 - 1..=t1 + 1 {
        let closed = SeifertPiece::new(p.name.clone(), p.e0 + k, p.fibers.clone(), 0);
        if seifert::is_lspace_sfs(&closed)?.verdict != LSpaceVerdict::LSpace {
            take(int(k), int(k));
        }
    }
    Ok(if lo == hi { SlopeArc::Point(slope_of_t(lo)) } else { SlopeArc::closed(slope_of_t(hi), slope_of_t(lo)) })
}

/// Whether a slope collection is NLS detected; `Unknown` when undecided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Detection {
    Detected,
    NotDetected,
    Unknown,
}

/// Per-piece record of a certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceRecord {
    pub id: String,
    pub verdict: Status,
    /// The closed N-filling of the piece; not part of the serialized form.
    #[serde(skip)]
    pub filling: Option<GmTree>,
}

/// Slope assigned to one edge, in the basis of its first side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSlope {
    pub id: String,
    pub slope: Slope,
}

/// Slopes on every edge whose N-fillings are all non-L, or the `b1 > 0` marker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NlsCertificate {
    pub edges: Vec<EdgeSlope>,
    pub pieces: Vec<PieceRecord>,
    pub b1_shortcut: bool,
}

type Memo = RwLock<HashMap<(Vec<u8>, bool), Status>>;

/// Recursion state: depth, and whether touching arc endpoints may be settled
/// by deciding an N-filling (allowed one level deep, so results stay a pure
/// function of the tree and this flag).
#[derive(Debug, Clone, Copy)]
struct Ctx {
    depth: usize,
    n_probe: bool,
}

impl Ctx {
    const ROOT: Ctx = Ctx { depth: 0, n_probe: true };

    fn deeper(self) -> Ctx {
        Ctx { depth: self.depth + 1, ..self }
    }
}

/// Decision engine with a memo table shared by all calls.
pub struct Engine {
    config: Config,
    memo: Memo,
}

enum Probe {
    NonL,
    L,
    Stop,
}

impl Engine {
    pub fn new(config: Config) -> Self {
        Engine { config, memo: RwLock::new(HashMap::new()) }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn memo_len(&self) -> usize {
        self.memo.read().map(|m| m.len()).unwrap_or(0)
    }

    /// L-space decision for a closed tree.
    pub fn decide_closed(&self, tree: &GmTree) -> Result<Verdict, EngineError> {
        self.step(tree, Ctx::ROOT)
    }

    fn status(&self, tree: &GmTree, ctx: Ctx) -> Result<Status, EngineError> {
        let key = (tree.canonical_key(), ctx.n_probe);
        if let Some(s) = self.memo.read().ok().and_then(|m| m.get(&key).copied()) {
            return Ok(s);
        }
        let s = self.step(tree, ctx.deeper())?.status();
        if let Ok(mut m) = self.memo.write() {
            m.insert(key, s);
        }
        Ok(s)
    }

    fn filled_status(&self, filled: &Filled, ctx: Ctx) -> Result<Status, EngineError> {
        match filled {
            Filled::Tree(t) => self.status(t, ctx),
            Filled::Sum(s) => {
                let statuses =
                    s.summands.iter().map(|t| self.status(t, ctx)).collect::<Result<Vec<_>, _>>()?;
                Ok(combine_summands(&statuses))
            }
        }
    }

    fn step(&self, tree: &GmTree, ctx: Ctx) -> Result<Verdict, EngineError> {
        if !tree.is_closed() {
            return Err(EngineError::NotClosed);
        }
        if ctx.depth > self.config.max_depth {
            return Ok(Verdict::Unknown { bound: self.config.max_denominator });
        }
        if homology::h1_invariants(tree).b1 > 0 {
            return Ok(Verdict::NotQhs);
        }
        let tree = match absorb_solid_tori(tree)? {
            Filled::Tree(t) => t,
            Filled::Sum(s) => {
                let verdicts = s.summands.iter().map(|t| self.step(t, ctx.deeper())).collect::<Result<Vec<_>, _>>()?;
                let statuses: Vec<Status> = verdicts.iter().map(Verdict::status).collect();
                return Ok(match combine_summands(&statuses) {
                    Status::NonLSpace => {
                        let (index, v) = verdicts.iter().enumerate().find(|(_, v)| v.status() == Status::NonLSpace).unwrap();
                        Verdict::NonLSpace(Witness::Summand { index, witness: Box::new(v.witness().unwrap().clone()) })
                    }
                    Status::LSpace => Verdict::LSpace,
                    Status::NotQhs => Verdict::NotQhs,
                    Status::Unknown => Verdict::Unknown { bound: self.config.max_denominator },
                });
            }
        };
        if tree.pieces().len() == 1 {
            let d = seifert::is_lspace_sfs(&tree.pieces()[0])?;
            return Ok(match d.verdict {
                LSpaceVerdict::LSpace => Verdict::LSpace,
                LSpaceVerdict::NotQhs => Verdict::NotQhs,
                LSpaceVerdict::NonLSpace => Verdict::NonLSpace(Witness::ClosedSeifert {
                    piece: tree.pieces()[0].name.clone(),
                    realization: d.witness,
                    boundary_sensitive: d.boundary_sensitive,
                }),
            });
        }
        self.decide_gluing(&tree, ctx)
    }

    /// Cuts leaf edges, the heuristic's choice first, until one decides.
    fn decide_gluing(&self, tree: &GmTree, ctx: Ctx) -> Result<Verdict, EngineError> {
        let mut leaves = tree.leaf_edges();
        if self.config.heuristic == EdgeHeuristic::LastLeaf {
            leaves.reverse();
        }
        let mut bound = self.config.max_denominator;
        for edge in leaves {
            match self.decide_at_edge(tree, edge, ctx)? {
                Verdict::Unknown { bound: b } => bound = bound.max(b),
                v => return Ok(v),
            }
        }
        Ok(Verdict::Unknown { bound })
    }

    fn decide_at_edge(&self, tree: &GmTree, edge: &Edge, ctx: Ctx) -> Result<Verdict, EngineError> {
        let cut = tree.cut_edge(&edge.id)?;
        let h = cut.map;
        let exact_a = self.exact_arc(&cut.side_a)?;
        let exact_b = self.exact_arc(&cut.side_b)?;
        let (est_a, est_b) = match (exact_a, exact_b) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => {
                let hints = a.image(&h).endpoints();
                let b = self.arc_estimate(&cut.side_b, &hints, self.config.max_denominator, ctx)?;
                (a, b)
            }
            (None, Some(b)) => {
                let hints = b.image(&h.inverse()).endpoints();
                let a = self.arc_estimate(&cut.side_a, &hints, self.config.max_denominator, ctx)?;
                (a, b)
            }
            (None, None) => {
                let a = self.arc_estimate(&cut.side_a, &[], self.config.max_denominator, ctx)?;
                let hints = a.image(&h).endpoints();
                let b = self.arc_estimate(&cut.side_b, &hints, self.config.max_denominator, ctx)?;
                (a, b)
            }
        };
        if let Some(v) = compare_arcs(&est_a, &h, &est_b, &edge.id) {
            return Ok(v);
        }
        // the undecided side is probed; check the other side's endpoints directly
        let (probed, probed_at, other, to_probed, probed_is_b) = if !est_b.exact {
            (&cut.side_b, cut.boundary_b, &est_a, h, true)
        } else {
            (&cut.side_a, cut.boundary_a, &est_b, h.inverse(), false)
        };
        let hints = other.image(&to_probed).endpoints();
        for &e in &hints {
            let alpha = if probed_is_b { h.inverse().apply(e) } else { e };
            let other_side = if probed_is_b { &est_a } else { &est_b };
            let other_slope = if probed_is_b { alpha } else { h.apply(alpha) };
            if !other_side.nls_inner.contains(other_slope) {
                continue;
            }
            let filled = self.filled_status(&probed.fill_boundary(probed_at, e)?, ctx)?;
            // an L-space filling may still sit on the end of the L-space arc
            let detected = filled.is_non_l()
                || (ctx.n_probe
                    && filled == Status::LSpace
                    && self
                        .status(
                            &probed.n_fill(&BTreeMap::from([(probed_at, e)]), &BTreeMap::new())?,
                            Ctx { n_probe: false, ..ctx },
                        )?
                        .is_non_l());
            if detected {
                return Ok(Verdict::NonLSpace(Witness::Gluing { edge: edge.id.clone(), slope: alpha }));
            }
        }
        let bound = 4 * hints.iter().map(Slope::height).max().unwrap_or(0).max(self.config.max_denominator);
        let refined = self.arc_estimate(probed, &hints, bound, ctx)?;
        let v = if probed_is_b {
            compare_arcs(&est_a, &h, &refined, &edge.id)
        } else {
            compare_arcs(&refined, &h, &est_b, &edge.id)
        };
        Ok(v.unwrap_or(Verdict::Unknown { bound }))
    }

    /// Exact estimate when the one-boundary tree reduces to a single piece.
    fn exact_arc(&self, tree: &GmTree) -> Result<Option<ArcEstimate>, EngineError> {
        let reduced = match absorb_solid_tori(tree)? {
            Filled::Tree(t) => t,
            Filled::Sum(_) => return Ok(None),
        };
        if reduced.pieces().len() != 1 {
            return Ok(None);
        }
        let piece = &reduced.pieces()[0];
        Ok(Some(ArcEstimate::exact(piece_longitude(piece), exact_piece_arc(piece)?)))
    }

    /// L-space slope arc of a tree with one open boundary.
    pub fn lspace_arc(&self, tree: &GmTree) -> Result<ArcEstimate, EngineError> {
        if let Some(e) = self.exact_arc(tree)? {
            return Ok(e);
        }
        self.arc_estimate(tree, &[], self.config.max_denominator, Ctx::ROOT)
    }

    /// Membership oracle of the L-space slopes of a one-boundary tree.
    pub fn filling_status(&self, tree: &GmTree, slope: Slope) -> Result<Status, EngineError> {
        let b = single_open(tree)?;
        self.filled_status(&tree.fill_boundary(b, slope)?, Ctx::ROOT)
    }

    fn arc_estimate(&self, tree: &GmTree, hints: &[Slope], bound: i64, ctx: Ctx) -> Result<ArcEstimate, EngineError> {
        if let Some(e) = self.exact_arc(tree)? {
            return Ok(e);
        }
        let b = single_open(tree)?;
        let lambda = homology::rational_longitude(tree)?;
        let probe = |s: Slope| -> Result<Status, EngineError> { self.filled_status(&tree.fill_boundary(b, s)?, ctx) };
        let mut candidates: Vec<Slope> = Vec::new();
        for &s in hints.iter().chain(intrinsic_small_slopes(lambda, &tree.pieces()[b.piece]).iter()) {
            if s != lambda && !candidates.contains(&s) {
                candidates.push(s);
            }
        }
        let mut z = None;
        for chunk in candidates.chunks(8) {
            let statuses: Vec<Result<Status, EngineError>> = chunk.par_iter().map(|&s| probe(s)).collect();
            for (s, st) in chunk.iter().zip(statuses) {
                if st? == Status::LSpace {
                    z = Some(*s);
                    break;
                }
            }
            if z.is_some() {
                break;
            }
        }
        let Some(z) = z else {
            return Ok(ArcEstimate {
                longitude: lambda,
                nls_inner: SlopeArc::Point(lambda),
                nls_outer: SlopeArc::Full,
                exact: false,
                tested_denominator_bound: bound,
            });
        };
        let classify = |s: Slope| -> Result<Probe, EngineError> {
            Ok(match probe(s)? {
                Status::LSpace => Probe::L,
                Status::NonLSpace | Status::NotQhs => Probe::NonL,
                Status::Unknown => Probe::Stop,
            })
        };
        let (a1, b1) = transition(lambda, z, 1, hints, bound, &classify)?;
        let (a2, b2) = transition(lambda, z, -1, hints, bound, &classify)?;
        let nls_inner = if a1 == lambda && a2 == lambda { SlopeArc::Point(lambda) } else { SlopeArc::closed(a2, a1) };
        let nls_outer = if b1 == b2 { SlopeArc::Full } else { SlopeArc::closed(b2, b1) };
        Ok(ArcEstimate { longitude: lambda, nls_inner, nls_outer, exact: false, tested_denominator_bound: bound })
    }

    /// Whether the slopes on the open boundaries are NLS detected.
    pub fn nls_detected(&self, tree: &GmTree, assignment: &BTreeMap<BoundaryRef, Slope>) -> Result<Detection, EngineError> {
        let filled = tree.n_fill(assignment, &BTreeMap::new())?;
        Ok(match self.decide_closed(&filled)?.status() {
            Status::NonLSpace | Status::NotQhs => Detection::Detected,
            Status::LSpace => Detection::NotDetected,
            Status::Unknown => Detection::Unknown,
        })
    }

    /// Certificate for a closed non-L-space; `None` for L-spaces.
    pub fn certificate_search(&self, tree: &GmTree) -> Result<Option<NlsCertificate>, EngineError> {
        match self.decide_closed(tree)? {
            Verdict::LSpace => Ok(None),
            Verdict::Unknown { bound } => Err(EngineError::Unknown(bound)),
            Verdict::NotQhs => Ok(Some(NlsCertificate { edges: vec![], pieces: vec![], b1_shortcut: true })),
            Verdict::NonLSpace(_) => {
                let mut edges = BTreeMap::new();
                let mut pieces = Vec::new();
                self.build_certificate(tree, &mut edges, &mut pieces)?;
                let order: HashMap<&str, usize> =
                    tree.pieces().iter().enumerate().map(|(i, p)| (p.name.as_str(), i)).collect();
                pieces.sort_by_key(|r: &PieceRecord| order.get(r.id.as_str()).copied().unwrap_or(usize::MAX));
                let edges = tree
                    .edges()
                    .iter()
                    .filter_map(|e| edges.get(&e.id).map(|&slope| EdgeSlope { id: e.id.clone(), slope }))
                    .collect();
                Ok(Some(NlsCertificate { edges, pieces, b1_shortcut: false }))
            }
        }
    }

    fn build_certificate(
        &self,
        tree: &GmTree,
        edges: &mut BTreeMap<String, Slope>,
        pieces: &mut Vec<PieceRecord>,
    ) -> Result<(), EngineError> {
        let Some(edge) = tree.original_edges().next().cloned() else {
            let status = self.status(tree, Ctx::ROOT)?;
            if !status.is_non_l() {
                return Err(EngineError::Unknown(self.config.max_denominator));
            }
            pieces.push(PieceRecord { id: original_piece(tree), verdict: status, filling: Some(tree.clone()) });
            return Ok(());
        };
        let cut = tree.cut_edge(&edge.id)?;
        let h = cut.map;
        let bound = self.config.max_denominator;
        let est_a = match self.exact_arc(&cut.side_a)? {
            Some(a) => a,
            None => self.arc_estimate(&cut.side_a, &[], bound, Ctx::ROOT)?,
        };
        let est_b = match self.exact_arc(&cut.side_b)? {
            Some(b) => b,
            None => self.arc_estimate(&cut.side_b, &est_a.image(&h).endpoints(), bound, Ctx::ROOT)?,
        };
        let pull = |arc: &SlopeArc| arc.image(&h.inverse());
        let inner = arc_intersection(&est_a.nls_inner, &pull(&est_b.nls_inner));
        let outer = arc_intersection(&est_a.nls_outer, &pull(&est_b.nls_outer));
        let mut candidates: Vec<Slope> = Vec::new();
        let spread = |arcs: &[SlopeArc]| arcs.iter().flat_map(|a| spread_members(a, CERT_SPREAD)).collect::<Vec<_>>();
        for c in spread(&inner)
            .into_iter()
            .chain(simplest_of(&inner, false))
            .chain(spread(&outer))
            .chain(simplest_of(&outer, false))
            .chain(outer.iter().flat_map(SlopeArc::endpoints))
            .chain([est_a.longitude, h.inverse().apply(est_b.longitude)])
        {
            if !candidates.contains(&c) {
                candidates.push(c);
            }
        }
        for alpha in candidates {
            let ya = cut.side_a.n_fill(&BTreeMap::from([(cut.boundary_a, alpha)]), &BTreeMap::new())?;
            let yb = cut.side_b.n_fill(&BTreeMap::from([(cut.boundary_b, h.apply(alpha))]), &BTreeMap::new())?;
            let (sa, sb) = rayon::join(|| self.status(&ya, Ctx::ROOT), || self.status(&yb, Ctx::ROOT));
            if sa?.is_non_l() && sb?.is_non_l() {
                edges.insert(edge.id.clone(), alpha);
                self.build_certificate(&ya, edges, pieces)?;
                self.build_certificate(&yb, edges, pieces)?;
                return Ok(());
            }
        }
        Err(EngineError::Unknown(bound))
    }
}

/// Interior slopes of an arc spread along it: the simplest member, then the
/// simplest members of the two open pieces it leaves, breadth first.
fn spread_members(arc: &SlopeArc, limit: usize) -> Vec<Slope> {
    let mut out = Vec::new();
    let mut queue = std::collections::VecDeque::from([arc.interior()]);
    while let Some(a) = queue.pop_front() {
        if out.len() >= limit {
            break;
        }
        let Some(s) = a.simplest_interior_member() else { continue };
        out.push(s);
        match a {
            SlopeArc::Arc { start, end, .. } => {
                queue.push_back(SlopeArc::open(start, s));
                queue.push_back(SlopeArc::open(s, end));
            }
            SlopeArc::Full => queue.push_back(SlopeArc::punctured(s)),
            _ => {}
        }
    }
    out
}

fn original_piece(tree: &GmTree) -> String {
    tree.pieces().iter().find(|p| !p.name.starts_with("N~")).map(|p| p.name.clone()).unwrap_or_default()
}

fn single_open(tree: &GmTree) -> Result<BoundaryRef, EngineError> {
    let open = tree.open_boundaries();
    if open.len() != 1 {
        return Err(HomologyError::OpenBoundaries(open.len()).into());
    }
    Ok(open[0])
}

fn combine_summands(statuses: &[Status]) -> Status {
    if statuses.contains(&Status::NotQhs) {
        Status::NotQhs
    } else if statuses.contains(&Status::NonLSpace) {
        Status::NonLSpace
    } else if statuses.contains(&Status::Unknown) {
        Status::Unknown
    } else {
        Status::LSpace
    }
}

/// Theorem-level comparison of the two sides of a cut edge.
fn compare_arcs(a: &ArcEstimate, h: &GluingMap, b: &ArcEstimate, edge: &str) -> Option<Verdict> {
    let pull = |arc: &SlopeArc| arc.image(&h.inverse());
    let inner = arc_intersection(&a.nls_inner, &pull(&b.nls_inner));
    if let Some(slope) = simplest_of(&inner, false) {
        return Some(Verdict::NonLSpace(Witness::Gluing { edge: edge.to_string(), slope }));
    }
    if arc_intersection(&a.nls_outer, &pull(&b.nls_outer)).is_empty() {
        return Some(Verdict::LSpace);
    }
    None
}

/// Replaces solid-torus leaves by Dehn fillings of their neighbours.
///
/// A leaf is kept when its filling would fill a piece that still has an open
/// boundary along the fiber: that is a sum with an open summand.
pub fn absorb_solid_tori(tree: &GmTree) -> Result<Filled, EngineError> {
    let mut t = tree.clone();
    'absorb: loop {
        if t.pieces().len() == 1 {
            return Ok(Filled::Tree(t));
        }
        let open = t.open_boundaries();
        for i in 0..t.pieces().len() {
            if !t.pieces()[i].is_solid_torus() || t.degree(i) != 1 || open.iter().any(|b| b.piece == i) {
                continue;
            }
            let edge = t.edges().iter().find(|e| e.touches(i)).unwrap().clone();
            let (_, _, m) = edge.oriented_from(i);
            let slope = m.apply(piece_longitude(&seifert::normalize_sfs(&t.pieces()[i])?));
            let cut = t.cut_edge(&edge.id)?;
            let (rest, at) = if edge.a.piece == i { (cut.side_b, cut.boundary_b) } else { (cut.side_a, cut.boundary_a) };
            match rest.fill_boundary(at, slope) {
                Ok(Filled::Tree(next)) => t = next,
                Ok(Filled::Sum(s)) => return Ok(Filled::Sum(s)),
                Err(TreeError::UnsupportedFiberFilling(_)) => continue,
                Err(e) => return Err(e.into()),
            }
            continue 'absorb;
        }
        return Ok(Filled::Tree(t));
    }
}

/// Slopes of height at most `h`, simplest first.
fn small_slopes(h: i64) -> Vec<Slope> {
    let mut v = vec![Slope::INFINITY];
    for q in 1..=h {
        for p in -h..=h {
            if num_integer::Integer::gcd(&p, &q) == 1 {
                v.push(Slope::new(p, q).unwrap());
            }
        }
    }
    v.sort_by_key(|s| (s.height(), s.simplicity_key()));
    v
}

type Vec2 = (i128, i128);

fn le(a: Vec2, b: Vec2) -> bool {
    a.0 * b.1 <= b.0 * a.1
}

fn mat_apply(m: &[[i128; 2]; 2], v: Vec2) -> Vec2 {
    (m[0][0] * v.0 + m[0][1] * v.1, m[1][0] * v.0 + m[1][1] * v.1)
}

fn canon(v: Vec2) -> Vec2 {
    if v.1 < 0 || (v.1 == 0 && v.0 < 0) {
        (-v.0, -v.1)
    } else {
        v
    }
}

fn vec_of(s: Slope) -> Vec2 {
    (s.p() as i128, s.q() as i128)
}

/// The matrix `T` of determinant `sign` with `T(lambda) = 0` and `T(anchor)`
/// in `(0, 1]`; it depends only on the two slopes, not on the basis they are
/// written in.
fn normal_frame(lambda: Slope, anchor: Slope, sign: i128) -> Option<[[i128; 2]; 2]> {
    if lambda == anchor {
        return None;
    }
    let (p, q) = vec_of(lambda);
    // c p + d q = -sign, then T = [[-q, p], [c, d]] has det sign and T(lambda) = 0
    let g = num_integer::Integer::extended_gcd(&p, &q);
    debug_assert_eq!(g.gcd.abs(), 1);
    let (c, d) = (-sign * g.gcd * g.x, -sign * g.gcd * g.y);
    let t = [[-q, p], [c, d]];
    let zt = canon(mat_apply(&t, vec_of(anchor)));
    // shift by [[1,0],[k,1]] so the image of the anchor lies in (0, 1]
    let k = num_integer::Integer::div_floor(&-zt.1, &zt.0) + 1;
    Some([[t[0][0], t[0][1]], [t[1][0] + k * t[0][0], t[1][1] + k * t[0][1]]])
}

fn frame_inverse(t: &[[i128; 2]; 2]) -> [[i128; 2]; 2] {
    let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    [[t[1][1] * det, -t[0][1] * det], [-t[1][0] * det, t[0][0] * det]]
}

fn from_frame(inv: &[[i128; 2]; 2], v: Vec2) -> Option<Slope> {
    let w = mat_apply(inv, v);
    Slope::from_wide(w.0, w.1).ok().filter(|s| s.height() <= HEIGHT_CAP)
}

/// Simple slopes measured in the frame fixed by the rational longitude and
/// an anchor slope that moves with the boundary basis, so the choice does not
/// depend on that basis. The anchor is the fiber unless the fiber is the
/// longitude; then it is the section along which the boundary piece has total
/// twist zero.
fn intrinsic_small_slopes(lambda: Slope, piece: &SeifertPiece) -> Vec<Slope> {
    let anchor = if lambda == Slope::ZERO { piece_longitude(piece) } else { Slope::ZERO };
    match normal_frame(lambda, anchor, 1) {
        Some(t) => {
            let inv = frame_inverse(&t);
            small_slopes(6).into_iter().filter_map(|s| from_frame(&inv, vec_of(s))).collect()
        }
        None => small_slopes(6),
    }
}

/// Transition between non-L slopes near `lambda` and the L slope `z` in one
/// of the two gaps between them: `sign = 1` searches the arc running from
/// `lambda` to `z` in the positive direction, `sign = -1` the other one.
///
/// The gap is mapped onto `(0, Y)` by the normal frame of `lambda` and `z`
/// and searched along the Stern–Brocot tree, stopping at slopes whose frame
/// coordinates exceed `bound` or that are `p/q` with `|p| > bound`. `|p|` is
/// the order of the fiber a filling adds and does
/// not change under twists along the fiber. Returns the last non-L and first
/// L slope found.
fn transition(
    lambda: Slope,
    z: Slope,
    sign: i128,
    hints: &[Slope],
    bound: i64,
    classify: &dyn Fn(Slope) -> Result<Probe, EngineError>,
) -> Result<(Slope, Slope), EngineError> {
    let t = normal_frame(lambda, z, sign).expect("z differs from lambda");
    let inv = frame_inverse(&t);
    let y_top = canon(mat_apply(&t, vec_of(z)));
    let back = |v: Vec2| from_frame(&inv, v);
    let endpoint = |v: Vec2| back(v).expect("probed slopes are within the height cap");
    let mapped_hints: Vec<Vec2> = hints
        .iter()
        .filter(|&&h| h != lambda && h != z)
        .map(|&h| canon(mat_apply(&t, vec_of(h))))
        .filter(|v| v.0 > 0)
        .collect();
    let focus = !hints.is_empty();
    let in_gap = |v: Vec2| !le(y_top, v);
    let class = |v: Vec2| -> Result<Probe, EngineError> {
        if !in_gap(v) {
            Ok(Probe::L)
        } else if v.0.abs().max(v.1.abs()) > bound as i128 {
            Ok(Probe::Stop)
        } else {
            match back(v) {
                Some(s) if s.p().abs() <= bound => classify(s),
                _ => Ok(Probe::Stop),
            }
        }
    };
    let (mut lf, mut rt): (Vec2, Vec2) = ((0, 1), (1, 0));
    let add = |a: Vec2, b: Vec2, k: i128| (a.0 + k * b.0, a.1 + k * b.1);
    loop {
        if focus && !mapped_hints.iter().any(|&h| le(lf, h) && le(h, rt)) {
            break;
        }
        match class(add(lf, rt, 1))? {
            Probe::Stop => break,
            Probe::NonL => {
                let kmax = gallop(|k| Ok(matches!(class(add(lf, rt, k))?, Probe::NonL)))?;
                lf = add(lf, rt, kmax);
                if !matches!(class(add(lf, rt, 1))?, Probe::L) {
                    break;
                }
                rt = add(lf, rt, 1);
            }
            Probe::L => {
                let jmax = gallop(|j| Ok(matches!(class(add(rt, lf, j))?, Probe::L)))?;
                rt = add(rt, lf, jmax);
                if !matches!(class(add(rt, lf, 1))?, Probe::NonL) {
                    break;
                }
                lf = add(rt, lf, 1);
            }
        }
    }
    let a = if lf == (0, 1) { lambda } else { endpoint(lf) };
    let b = if in_gap(rt) { endpoint(rt) } else { z };
    Ok((a, b))
}

/// Largest `k >= 1` with `good(k)`, given `good(1)` and monotonicity.
fn gallop(good: impl Fn(i128) -> Result<bool, EngineError>) -> Result<i128, EngineError> {
    let mut lo = 1;
    let mut hi = 2;
    while good(hi)? {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if good(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
