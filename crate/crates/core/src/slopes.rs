//! Slopes on a torus, integral gluing maps, and arcs of slopes on the
//! rational projective circle.
//!
//! A slope is a primitive class `(p, q)` up to sign, written `p/q`. The
//! circle is ordered as the one-point compactification of the rationals,
//! `0 < 1 < 1/0 < -1 < 0`, and every arc is read in that positive direction.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlopeError {
    #[error("the zero vector is not a slope")]
    ZeroVector,
    #[error("cannot parse slope `{0}`")]
    Parse(String),
    #[error("degenerate arc: endpoints coincide")]
    Degenerate,
    #[error("open arc ({0}, {1}) contains no slope")]
    EmptyArc(Slope, Slope),
    #[error("integer overflow in slope arithmetic")]
    Overflow,
}

/// Primitive integer pair modulo sign, canonical with `q > 0` or `(1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slope {
    p: i64,
    q: i64,
}

impl Slope {
    pub const INFINITY: Slope = Slope { p: 1, q: 0 };
    pub const ZERO: Slope = Slope { p: 0, q: 1 };

    pub fn new(p: i64, q: i64) -> Result<Self, SlopeError> {
        Self::from_wide(p as i128, q as i128)
    }

    pub(crate) fn from_wide(p: i128, q: i128) -> Result<Self, SlopeError> {
        if p == 0 && q == 0 {
            return Err(SlopeError::ZeroVector);
        }
        let g = p.gcd(&q);
        let (mut p, mut q) = (p / g, q / g);
        if q < 0 || (q == 0 && p < 0) {
            p = -p;
            q = -q;
        }
        let p = i64::try_from(p).map_err(|_| SlopeError::Overflow)?;
        let q = i64::try_from(q).map_err(|_| SlopeError::Overflow)?;
        Ok(Slope { p, q })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn is_infinity(&self) -> bool {
        self.q == 0
    }

    /// `max(|p|, q)`; the search bound used throughout the engine.
    pub fn height(&self) -> i64 {
        self.p.abs().max(self.q)
    }

    /// Ordering key for "simplest slope" choices: smaller `q`, then smaller `|p|`, then `p`.
    pub fn simplicity_key(&self) -> (i64, i64, i64) {
        (self.q, self.p.abs(), self.p)
    }

    /// Determinant `p1 q2 - q1 p2` of the canonical representatives.
    pub fn det(&self, other: &Slope) -> i128 {
        self.p as i128 * other.q as i128 - self.q as i128 * other.p as i128
    }

    /// Linear comparison on `Q ∪ {∞}` with `∞` as the maximum.
    fn linear_cmp(&self, other: &Slope) -> Ordering {
        match (self.q == 0, other.q == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => {
                (self.p as i128 * other.q as i128).cmp(&(other.p as i128 * self.q as i128))
            }
        }
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Slope {
    type Err = SlopeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SlopeError::Parse(s.to_string());
        let (p, q) = match s.trim().split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s.trim(), "1"),
        };
        let p: i64 = p.parse().map_err(|_| bad())?;
        let q: i64 = q.parse().map_err(|_| bad())?;
        Slope::new(p, q)
    }
}

impl Serialize for Slope {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn normalize_slope(p: i64, q: i64) -> Result<Slope, SlopeError> {
    Slope::new(p, q)
}

/// Integral 2×2 matrix acting on column vectors `(p, q)`.
///
/// The image of the first basis vector is `(a, c)`, of the second `(b, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GluingMap {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl GluingMap {
    pub const IDENTITY: GluingMap = GluingMap { a: 1, b: 0, c: 0, d: 1 };

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        GluingMap { a, b, c, d }
    }

    pub fn det(&self) -> i128 {
        self.a as i128 * self.d as i128 - self.b as i128 * self.c as i128
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs() == 1
    }

    pub fn apply(&self, s: Slope) -> Slope {
        let (p, q) = (s.p as i128, s.q as i128);
        Slope::from_wide(
            self.a as i128 * p + self.b as i128 * q,
            self.c as i128 * p + self.d as i128 * q,
        )
        .expect("unimodular image of a slope fits in i64")
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GluingMap) -> GluingMap {
        GluingMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// Inverse of a unimodular matrix via the adjugate.
    pub fn inverse(&self) -> GluingMap {
        let det = self.det();
        assert!(det.abs() == 1, "inverse of non-unimodular map {self:?}");
        let s = det as i64;
        GluingMap { a: s * self.d, b: -s * self.b, c: -s * self.c, d: s * self.a }
    }

    pub fn preserves_orientation(&self) -> bool {
        self.det() > 0
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(first: (i64, i64), second: (i64, i64)) -> GluingMap {
        GluingMap { a: first.0, b: second.0, c: first.1, d: second.1 }
    }
}

pub fn apply_map(m: &GluingMap, s: Slope) -> Slope {
    m.apply(s)
}

pub fn compose_maps(m1: &GluingMap, m2: &GluingMap) -> GluingMap {
    m1.compose(m2)
}

pub fn invert_map(m: &GluingMap) -> GluingMap {
    m.inverse()
}

/// True iff `c` lies strictly inside the positive arc from `a` to `b`.
pub fn circular_between(a: Slope, b: Slope, c: Slope) -> Result<bool, SlopeError> {
    if a == b {
        return Err(SlopeError::Degenerate);
    }
    Ok(between_unchecked(a, b, c))
}

/// Like [`circular_between`], but `a == b` denotes the circle punctured at `a`.
fn between_unchecked(a: Slope, b: Slope, c: Slope) -> bool {
    if c == a || c == b {
        return false;
    }
    match a.linear_cmp(&b) {
        Ordering::Equal => true,
        Ordering::Less => a.linear_cmp(&c).is_lt() && c.linear_cmp(&b).is_lt(),
        Ordering::Greater => a.linear_cmp(&c).is_lt() || c.linear_cmp(&b).is_lt(),
    }
}

/// Simplest rational strictly inside `(lo, hi)`, both finite, `lo < hi`.
fn simplest_in_interval(lo: (i128, i128), hi: (i128, i128)) -> (i128, i128) {
    // (numerator, positive denominator)
    let lt = |x: (i128, i128), y: (i128, i128)| x.0 * y.1 < y.0 * x.1;
    let floor_lo = Integer::div_floor(&lo.0, &lo.1);
    let first_int = floor_lo + 1;
    if lt((first_int, 1), hi) {
        // at least one integer inside; take the one closest to zero
        let last_int = Integer::div_floor(&(hi.0 - 1), &hi.1);
        let n = if first_int <= 0 && last_int >= 0 {
            0
        } else if first_int > 0 {
            first_int
        } else {
            last_int
        };
        return (n, 1);
    }
    if hi.0 <= 0 {
        let (n, d) = simplest_in_interval((-hi.0, hi.1), (-lo.0, lo.1));
        return (-n, d);
    }
    // 0 <= lo < hi, no integer strictly inside: Stern–Brocot descent
    let (mut l, mut r) = ((floor_lo, 1i128), (floor_lo + 1, 1i128));
    loop {
        let m = (l.0 + r.0, l.1 + r.1);
        if !lt(lo, m) {
            // m <= lo: largest k with l + k r <= lo
            let num = lo.0 * l.1 - lo.1 * l.0;
            let den = lo.1 * r.0 - lo.0 * r.1;
            let k = Integer::div_floor(&num, &den).max(1);
            l = (l.0 + k * r.0, l.1 + k * r.1);
        } else if !lt(m, hi) {
            // m >= hi: largest k with r + k l >= hi
            let num = hi.1 * r.0 - hi.0 * r.1;
            let den = hi.0 * l.1 - hi.1 * l.0;
            let k = Integer::div_floor(&num, &den).max(1);
            r = (r.0 + k * l.0, r.1 + k * l.1);
        } else {
            return m;
        }
    }
}

/// Simplest slope (minimal `q`, then minimal `|p|`) strictly inside the
/// positive arc from `a` to `b`. With `a == b` the arc is the punctured circle.
pub fn slope_between(a: Slope, b: Slope) -> Result<Slope, SlopeError> {
    if a == b {
        return Ok(if a.is_infinity() { Slope::ZERO } else { Slope::INFINITY });
    }
    let wraps = a.linear_cmp(&b).is_gt();
    if wraps && !a.is_infinity() {
        return Ok(Slope::INFINITY);
    }
    let (p, q) = if a.is_infinity() {
        // (-inf, b): integers below b, closest to zero
        let below = Integer::div_floor(&(b.p as i128 - 1), &(b.q as i128));
        (if b.p > 0 { 0 } else { below }, 1)
    } else if b.is_infinity() {
        // (a, +inf)
        let above = Integer::div_floor(&(a.p as i128), &(a.q as i128)) + 1;
        (if a.p < 0 { 0 } else { above }, 1)
    } else {
        simplest_in_interval((a.p as i128, a.q as i128), (b.p as i128, b.q as i128))
    };
    Slope::from_wide(p, q)
}

/// A connected subset of the slope circle with rational endpoints.
///
/// `Arc` runs positively from `start` to `end`; `start == end` is allowed only
/// with both ends open, and then means the circle minus that slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlopeArc {
    Empty,
    Full,
    Point(Slope),
    Arc { start: Slope, end: Slope, start_closed: bool, end_closed: bool },
}

impl SlopeArc {
    pub fn closed(start: Slope, end: Slope) -> SlopeArc {
        if start == end {
            SlopeArc::Point(start)
        } else {
            SlopeArc::Arc { start, end, start_closed: true, end_closed: true }
        }
    }

    pub fn open(start: Slope, end: Slope) -> SlopeArc {
        SlopeArc::Arc { start, end, start_closed: false, end_closed: false }
    }

    pub fn punctured(at: Slope) -> SlopeArc {
        SlopeArc::open(at, at)
    }

    pub fn contains(&self, s: Slope) -> bool {
        match *self {
            SlopeArc::Empty => false,
            SlopeArc::Full => true,
            SlopeArc::Point(x) => x == s,
            SlopeArc::Arc { start, end, start_closed, end_closed } => {
                if s == start {
                    start_closed
                } else if s == end {
                    end_closed
                } else {
                    between_unchecked(start, end, s)
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SlopeArc::Empty)
    }

    pub fn interior(&self) -> SlopeArc {
        match *self {
            SlopeArc::Empty | SlopeArc::Point(_) => SlopeArc::Empty,
            SlopeArc::Full => SlopeArc::Full,
            SlopeArc::Arc { start, end, .. } => SlopeArc::open(start, end),
        }
    }

    pub fn closure(&self) -> SlopeArc {
        match *self {
            SlopeArc::Arc { start, end, .. } if start == end => SlopeArc::Full,
            SlopeArc::Arc { start, end, .. } => SlopeArc::closed(start, end),
            other => other,
        }
    }

    pub fn complement(&self) -> SlopeArc {
        match *self {
            SlopeArc::Empty => SlopeArc::Full,
            SlopeArc::Full => SlopeArc::Empty,
            SlopeArc::Point(x) => SlopeArc::punctured(x),
            SlopeArc::Arc { start, end, .. } if start == end => SlopeArc::Point(start),
            SlopeArc::Arc { start, end, start_closed, end_closed } => SlopeArc::Arc {
                start: end,
                end: start,
                start_closed: !end_closed,
                end_closed: !start_closed,
            },
        }
    }

    pub fn image(&self, m: &GluingMap) -> SlopeArc {
        match *self {
            SlopeArc::Empty => SlopeArc::Empty,
            SlopeArc::Full => SlopeArc::Full,
            SlopeArc::Point(x) => SlopeArc::Point(m.apply(x)),
            SlopeArc::Arc { start, end, start_closed, end_closed } => {
                let (s, e) = (m.apply(start), m.apply(end));
                if m.preserves_orientation() {
                    SlopeArc::Arc { start: s, end: e, start_closed, end_closed }
                } else {
                    SlopeArc::Arc { start: e, end: s, start_closed: end_closed, end_closed: start_closed }
                }
            }
        }
    }

    pub fn endpoints(&self) -> Vec<Slope> {
        match *self {
            SlopeArc::Empty | SlopeArc::Full => vec![],
            SlopeArc::Point(x) => vec![x],
            SlopeArc::Arc { start, end, .. } if start == end => vec![start],
            SlopeArc::Arc { start, end, .. } => vec![start, end],
        }
    }

    /// Simplest slope in the arc (closed endpoints count).
    pub fn simplest_member(&self) -> Option<Slope> {
        let mut best: Option<Slope> = None;
        let mut offer = |s: Slope| {
            if best.map_or(true, |b| s.simplicity_key() < b.simplicity_key()) {
                best = Some(s);
            }
        };
        match *self {
            SlopeArc::Empty => {}
            SlopeArc::Full => offer(Slope::INFINITY),
            SlopeArc::Point(x) => offer(x),
            SlopeArc::Arc { start, end, start_closed, end_closed } => {
                if start_closed {
                    offer(start);
                }
                if end_closed {
                    offer(end);
                }
                if let Ok(s) = slope_between(start, end) {
                    offer(s);
                }
            }
        }
        best
    }

    /// Simplest slope in the interior, if the interior is nonempty.
    pub fn simplest_interior_member(&self) -> Option<Slope> {
        self.interior().simplest_member()
    }
}

impl fmt::Display for SlopeArc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlopeArc::Empty => write!(f, "∅"),
            SlopeArc::Full => write!(f, "RP1"),
            SlopeArc::Point(x) => write!(f, "{{{x}}}"),
            SlopeArc::Arc { start, end, start_closed, end_closed } => write!(
                f,
                "{}{}, {}{}",
                if *start_closed { '[' } else { '(' },
                start,
                end,
                if *end_closed { ']' } else { ')' }
            ),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ArcRecord {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    start: Option<Slope>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    end: Option<Slope>,
    #[serde(rename = "startClosed", skip_serializing_if = "Option::is_none", default)]
    start_closed: Option<bool>,
    #[serde(rename = "endClosed", skip_serializing_if = "Option::is_none", default)]
    end_closed: Option<bool>,
}

impl Serialize for SlopeArc {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rec = match *self {
            SlopeArc::Empty => ArcRecord { kind: "EMPTY".into(), start: None, end: None, start_closed: None, end_closed: None },
            SlopeArc::Full => ArcRecord { kind: "FULL".into(), start: None, end: None, start_closed: None, end_closed: None },
            SlopeArc::Point(x) => ArcRecord { kind: "POINT".into(), start: Some(x), end: Some(x), start_closed: Some(true), end_closed: Some(true) },
            SlopeArc::Arc { start, end, start_closed, end_closed } => ArcRecord {
                kind: "ARC".into(),
                start: Some(start),
                end: Some(end),
                start_closed: Some(start_closed),
                end_closed: Some(end_closed),
            },
        };
        rec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SlopeArc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let rec = ArcRecord::deserialize(d)?;
        match rec.kind.as_str() {
            "EMPTY" => Ok(SlopeArc::Empty),
            "FULL" => Ok(SlopeArc::Full),
            "POINT" => rec.start.map(SlopeArc::Point).ok_or_else(|| D::Error::missing_field("start")),
            "ARC" => Ok(SlopeArc::Arc {
                start: rec.start.ok_or_else(|| D::Error::missing_field("start"))?,
                end: rec.end.ok_or_else(|| D::Error::missing_field("end"))?,
                start_closed: rec.start_closed.unwrap_or(true),
                end_closed: rec.end_closed.unwrap_or(true),
            }),
            other => Err(D::Error::custom(format!("unknown arc kind {other}"))),
        }
    }
}

/// Intersection of two arcs; the result has at most two components, listed
/// in circular order starting from the smallest endpoint.
pub fn arc_intersection(x: &SlopeArc, y: &SlopeArc) -> Vec<SlopeArc> {
    combine(&[*x, *y], |m| m[0] && m[1])
}

/// Union of arcs as a list of disjoint components.
pub fn arc_union(arcs: &[SlopeArc]) -> Vec<SlopeArc> {
    combine(arcs, |m| m.iter().any(|&b| b))
}

/// Cuts the circle at every endpoint, evaluates `keep` on each point and gap,
/// and reassembles the kept cells into maximal arcs.
fn combine(arcs: &[SlopeArc], keep: impl Fn(&[bool]) -> bool) -> Vec<SlopeArc> {
    let mut pts: Vec<Slope> = arcs.iter().flat_map(|a| a.endpoints()).collect();
    pts.sort_by(|a, b| a.linear_cmp(b));
    pts.dedup();
    let member = |s: Slope| keep(&arcs.iter().map(|a| a.contains(s)).collect::<Vec<_>>());
    if pts.is_empty() {
        return if member(Slope::INFINITY) { vec![SlopeArc::Full] } else { vec![] };
    }
    let k = pts.len();
    // cells: point i at 2i, gap (pts[i], pts[i+1]) at 2i+1
    let cells: Vec<bool> = (0..2 * k)
        .map(|c| {
            if c % 2 == 0 {
                member(pts[c / 2])
            } else {
                let (a, b) = (pts[c / 2], pts[(c / 2 + 1) % k]);
                member(slope_between(a, b).expect("gap between distinct cut points is nonempty"))
            }
        })
        .collect();
    if cells.iter().all(|&b| b) {
        return vec![SlopeArc::Full];
    }
    let n = cells.len();
    let first_out = cells.iter().position(|&b| !b).unwrap();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let c = (first_out + i) % n;
        if !cells[c] {
            i += 1;
            continue;
        }
        let run_start = c;
        let mut len = 0;
        while i < n && cells[(first_out + i) % n] {
            len += 1;
            i += 1;
        }
        let run_end = (run_start + len - 1) % n;
        let (start, start_closed) = if run_start % 2 == 0 {
            (pts[run_start / 2], true)
        } else {
            (pts[run_start / 2], false)
        };
        let (end, end_closed) = if run_end % 2 == 0 {
            (pts[run_end / 2], true)
        } else {
            (pts[(run_end / 2 + 1) % k], false)
        };
        if len == 1 && run_start % 2 == 0 {
            out.push(SlopeArc::Point(start));
        } else {
            out.push(SlopeArc::Arc { start, end, start_closed, end_closed });
        }
    }
    out.sort_by(|a, b| {
        let key = |x: &SlopeArc| x.endpoints().first().copied().unwrap_or(Slope::INFINITY);
        key(a).linear_cmp(&key(b))
    });
    out
}

pub fn arc_contains(arc: &SlopeArc, s: Slope) -> bool {
    arc.contains(s)
}

pub fn arc_interior(arc: &SlopeArc) -> SlopeArc {
    arc.interior()
}

pub fn arc_complement(arc: &SlopeArc) -> SlopeArc {
    arc.complement()
}

pub fn arc_image(m: &GluingMap, arc: &SlopeArc) -> SlopeArc {
    arc.image(m)
}
