//! Seifert pieces over holed disks and the L-space oracle for closed
//! Seifert fibered spaces over the sphere.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::slopes::Slope;

pub type Rational = Ratio<i128>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeifertError {
    #[error("fiber {beta}/{alpha} has zero multiplicity")]
    ZeroMultiplicity { beta: i64, alpha: i64 },
    #[error("fiber {beta}/{alpha} is not a reduced fraction")]
    NotReduced { beta: i64, alpha: i64 },
    #[error("piece `{0}` has boundary; operation needs a closed piece")]
    NotClosed(String),
    #[error("piece `{0}` has no boundary to fill")]
    NoBoundary(String),
    #[error("realizability input {0} is outside (0,1)")]
    OutOfRange(Rational),
}

/// An exceptional fiber with invariant `beta/alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fiber {
    pub beta: i64,
    pub alpha: i64,
}

impl Fiber {
    pub fn new(beta: i64, alpha: i64) -> Self {
        Fiber { beta, alpha }
    }

    pub fn ratio(&self) -> Rational {
        Rational::new(self.beta as i128, self.alpha as i128)
    }
}

impl fmt::Display for Fiber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.beta, self.alpha)
    }
}

/// Seifert fibration over a disk with `boundaries` holes (the sphere when zero),
/// twist `e0` and exceptional fibers.
///
/// Every boundary torus carries the basis `(d, h)`: `d` the section curve,
/// `h` the regular fiber.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeifertPiece {
    pub name: String,
    pub e0: i64,
    pub fibers: Vec<Fiber>,
    pub boundaries: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LSpaceVerdict {
    LSpace,
    NonLSpace,
    NotQhs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FillOutcome {
    Piece(SeifertPiece),
    /// The filling slope is the fiber; the caller handles the degeneration.
    FiberFilling,
}

impl SeifertPiece {
    pub fn new(name: impl Into<String>, e0: i64, fibers: Vec<Fiber>, boundaries: usize) -> Self {
        SeifertPiece { name: name.into(), e0, fibers, boundaries }
    }

    pub fn closed(name: impl Into<String>, e0: i64, fibers: &[(i64, i64)]) -> Self {
        let fibers = fibers.iter().map(|&(b, a)| Fiber::new(b, a)).collect();
        SeifertPiece::new(name, e0, fibers, 0)
    }

    pub fn is_closed(&self) -> bool {
        self.boundaries == 0
    }

    /// A piece with one boundary and at most one exceptional fiber.
    pub fn is_solid_torus(&self) -> bool {
        self.boundaries == 1 && self.fibers.len() <= 1
    }

    pub fn fiber_sum(&self) -> Rational {
        self.fibers.iter().map(Fiber::ratio).fold(Rational::from_integer(0), |a, b| a + b)
    }

    /// `e0 + Σ β/α`; for a piece with boundary this is the section-dependent
    /// quantity that locates the rational longitude.
    pub fn total_twist(&self) -> Rational {
        Rational::from_integer(self.e0 as i128) + self.fiber_sum()
    }

    /// Text form used by the manifold DSL.
    pub fn sfs_text(&self) -> String {
        if self.fibers.is_empty() {
            format!("sfs({})", self.e0)
        } else {
            let fibers: Vec<String> = self.fibers.iter().map(Fiber::to_string).collect();
            format!("sfs({}; {})", self.e0, fibers.join(", "))
        }
    }
}

impl fmt::Display for SeifertPiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} boundaries {}", self.sfs_text(), self.boundaries)
    }
}

/// Puts every fiber in `(0,1)` with `alpha >= 2`, moving integer parts into `e0`.
pub fn normalize_sfs(piece: &SeifertPiece) -> Result<SeifertPiece, SeifertError> {
    let mut e0 = piece.e0;
    let mut fibers = Vec::with_capacity(piece.fibers.len());
    for f in &piece.fibers {
        if f.alpha == 0 {
            return Err(SeifertError::ZeroMultiplicity { beta: f.beta, alpha: f.alpha });
        }
        if f.beta.gcd(&f.alpha) != 1 {
            return Err(SeifertError::NotReduced { beta: f.beta, alpha: f.alpha });
        }
        let (beta, alpha) = if f.alpha < 0 { (-f.beta, -f.alpha) } else { (f.beta, f.alpha) };
        let (whole, rest) = beta.div_mod_floor(&alpha);
        e0 += whole;
        if rest != 0 {
            fibers.push(Fiber::new(rest, alpha));
        }
    }
    Ok(SeifertPiece { name: piece.name.clone(), e0, fibers, boundaries: piece.boundaries })
}

pub fn euler_number(piece: &SeifertPiece) -> Result<Rational, SeifertError> {
    if !piece.is_closed() {
        return Err(SeifertError::NotClosed(piece.name.clone()));
    }
    Ok(piece.total_twist())
}

/// `(e0; r_1..r_n) ↦ (-e0 - n; 1 - r_1 .. 1 - r_n)`, normalized.
pub fn reverse_orientation(piece: &SeifertPiece) -> Result<SeifertPiece, SeifertError> {
    if !piece.is_closed() {
        return Err(SeifertError::NotClosed(piece.name.clone()));
    }
    let p = normalize_sfs(piece)?;
    let n = p.fibers.len() as i64;
    let fibers = p.fibers.iter().map(|f| Fiber::new(f.alpha - f.beta, f.alpha)).collect();
    normalize_sfs(&SeifertPiece::new(p.name.clone(), -p.e0 - n, fibers, 0))
}

/// Dehn filling of one boundary along `(p, q)` in its `(d, h)` basis.
///
/// A non-fiber slope adds the exceptional fiber `q/p`.
pub fn fill_boundary(piece: &SeifertPiece, slope: Slope) -> Result<FillOutcome, SeifertError> {
    if piece.boundaries == 0 {
        return Err(SeifertError::NoBoundary(piece.name.clone()));
    }
    if slope.p() == 0 {
        return Ok(FillOutcome::FiberFilling);
    }
    let mut filled = piece.clone();
    filled.boundaries -= 1;
    filled.fibers.push(Fiber::new(slope.q(), slope.p()));
    normalize_sfs(&filled).map(FillOutcome::Piece)
}

/// The twisted I-bundle over the Klein bottle: `sfs(0; 1/2, 1/2)` over the disk.
pub fn make_n() -> SeifertPiece {
    SeifertPiece::new("N", 0, vec![Fiber::new(1, 2), Fiber::new(1, 2)], 1)
}

/// Strictness of the realizability inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    Strict,
    NonStrict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JnWitness {
    pub a: i64,
    pub m: i64,
    /// Indices into the input: first takes `a/m`, second `(m-a)/m`, the rest `1/m`.
    pub permutation: Vec<usize>,
}

/// Largest `alpha` among the inputs, used to bound the search over `m`.
fn max_denominator(r: &[Rational]) -> i128 {
    r.iter().map(|x| *x.denom()).max().unwrap_or(1)
}

/// Smallest `s` in `[1, m/2]`, coprime to `m`, with `r_mid < s/m` and
/// `r_big < (m-s)/m` (`<=` when non-strict).
fn smallest_slot(m: i128, r_big: Rational, r_mid: Rational, ineq: Inequality) -> Option<i128> {
    let below = |x: Rational, y: Rational| match ineq {
        Inequality::Strict => x < y,
        Inequality::NonStrict => x <= y,
    };
    let scaled = r_mid * Rational::from_integer(m);
    let mut s = match ineq {
        Inequality::Strict => scaled.floor().to_integer() + 1,
        Inequality::NonStrict => scaled.ceil().to_integer(),
    }
    .max(1);
    while 2 * s <= m && below(r_big, Rational::new(m - s, m)) {
        if s.gcd(&m) == 1 {
            return Some(s);
        }
        s += 1;
    }
    None
}

/// Search for `0 < a < m`, coprime, and a permutation with
/// `r_σ1 < a/m`, `r_σ2 < (m-a)/m`, `r_σi < 1/m` for `i >= 3`.
///
/// Inputs with at most two entries are never realizable. The search runs over
/// `m <= bound_factor * max denominator` and returns the smallest `m`, with
/// the largest `a` for it; any realizing `m` is smaller than the largest
/// denominator, so factor 1 already suffices.
pub fn jn_search(
    r: &[Rational],
    ineq: Inequality,
    bound_factor: i128,
) -> Result<Option<JnWitness>, SeifertError> {
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    if let Some(bad) = r.iter().find(|x| **x <= zero || **x >= one) {
        return Err(SeifertError::OutOfRange(*bad));
    }
    if r.len() <= 2 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&i, &j| r[j].cmp(&r[i]).then(i.cmp(&j)));
    let bound = bound_factor.max(1) * max_denominator(r);
    for m in 2..=bound {
        let small = Rational::new(1, m);
        let fits = match ineq {
            Inequality::Strict => r[order[2]] < small,
            Inequality::NonStrict => r[order[2]] <= small,
        };
        if !fits {
            // 1/m only shrinks from here on
            break;
        }
        if let Some(s) = smallest_slot(m, r[order[0]], r[order[1]], ineq) {
            return Ok(Some(JnWitness { a: (m - s) as i64, m: m as i64, permutation: order }));
        }
    }
    Ok(None)
}

/// Strict realizability with the default search bound `m <= 2 max(alpha)`.
pub fn jn_realizable(r: &[Rational]) -> Result<Option<JnWitness>, SeifertError> {
    jn_search(r, Inequality::Strict, 2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SfsDecision {
    pub verdict: LSpaceVerdict,
    /// Set when the verdict would flip if the realizability inequalities were non-strict.
    pub boundary_sensitive: bool,
    pub witness: Option<JnWitness>,
}

fn horizontal(p: &SeifertPiece, ineq: Inequality) -> Result<(bool, Option<JnWitness>), SeifertError> {
    let k = p.fibers.len() as i64;
    if k <= 2 {
        return Ok((false, None));
    }
    let e0 = p.e0;
    if (2 - k..=-2).contains(&e0) {
        return Ok((true, None));
    }
    let r: Vec<Rational> = p.fibers.iter().map(Fiber::ratio).collect();
    if e0 == -1 {
        let w = jn_search(&r, ineq, 2)?;
        return Ok((w.is_some(), w));
    }
    if e0 == 1 - k {
        let flipped: Vec<Rational> = r.iter().map(|x| Rational::from_integer(1) - x).collect();
        let w = jn_search(&flipped, ineq, 2)?;
        return Ok((w.is_some(), w));
    }
    Ok((false, None))
}

/// L-space decision for a closed Seifert fibered space over the sphere.
///
/// Non-L-spaces are exactly those carrying a horizontal foliation:
/// `2-k <= e0 <= -2`, or `e0 = -1` with `(r_i)` realizable, or `e0 = 1-k`
/// with `(1 - r_i)` realizable (k fibers, normalized). Euler number zero
/// means `b1 > 0`.
pub fn is_lspace_sfs(piece: &SeifertPiece) -> Result<SfsDecision, SeifertError> {
    let e = euler_number(piece)?;
    let p = normalize_sfs(piece)?;
    if e == Rational::from_integer(0) {
        return Ok(SfsDecision { verdict: LSpaceVerdict::NotQhs, boundary_sensitive: false, witness: None });
    }
    let (strict, witness) = horizontal(&p, Inequality::Strict)?;
    let (loose, _) = horizontal(&p, Inequality::NonStrict)?;
    let verdict = if strict { LSpaceVerdict::NonLSpace } else { LSpaceVerdict::LSpace };
    Ok(SfsDecision { verdict, boundary_sensitive: strict != loose, witness })
}

/// Supremum of `u in (0,1)` with `(r_1..r_n, u)` strictly realizable;
/// the realizable `u` form the open interval `(0, sup)`. Zero when empty.
pub fn realizable_threshold(r: &[Rational]) -> Rational {
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    let n = r.len();
    if n < 2 {
        return zero;
    }
    let mut sorted: Vec<Rational> = r.to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    let mut best = zero;
    // u in the a/m slot: the largest r takes (m-a)/m, the rest sit below 1/m
    let mut m = 2;
    while sorted[1] < Rational::new(1, m) {
        let cap = (Rational::from_integer(m) * (one - sorted[0])).ceil().to_integer() - 1;
        if let Some(a) = (1..=cap.min(m - 1)).rev().find(|a| a.gcd(&m) == 1) {
            best = best.max(Rational::new(a, m));
        }
        m += 1;
    }
    // u in a 1/m slot: the smallest workable m wins
    if n == 2 {
        if sorted[0] + sorted[1] < one {
            // m unbounded: the simplest fraction strictly between the larger
            // input and 1 - smaller input gives the smallest m
            best = best.max(Rational::new(1, simplest_denominator(sorted[0], one - sorted[1])));
        }
    } else {
        let mut m = 2;
        while sorted[2] < Rational::new(1, m) {
            if smallest_slot(m, sorted[0], sorted[1], Inequality::Strict).is_some() {
                best = best.max(Rational::new(1, m));
                break;
            }
            m += 1;
        }
    }
    best
}

fn simplest_denominator(lo: Rational, hi: Rational) -> i128 {
    let a = Slope::new(*lo.numer() as i64, *lo.denom() as i64).expect("nonzero");
    let b = Slope::new(*hi.numer() as i64, *hi.denom() as i64).expect("nonzero");
    crate::slopes::slope_between(a, b).expect("interval nonempty").q() as i128
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn verdict(e0: i64, fibers: &[(i64, i64)]) -> LSpaceVerdict {
        is_lspace_sfs(&SeifertPiece::closed("Y", e0, fibers)).unwrap().verdict
    }

    #[test]
    fn normalization() {
        let p = normalize_sfs(&SeifertPiece::closed("P", 0, &[(3, 2)])).unwrap();
        assert_eq!((p.e0, p.fibers.clone()), (1, vec![Fiber::new(1, 2)]));
        let p = normalize_sfs(&SeifertPiece::closed("P", -1, &[(5, 1)])).unwrap();
        assert_eq!((p.e0, p.fibers.len()), (4, 0));
        let p = SeifertPiece::closed("P", -2, &[(1, 2), (2, 3)]);
        assert_eq!(normalize_sfs(&p).unwrap(), p);
        let p = normalize_sfs(&SeifertPiece::closed("P", 0, &[(1, -3)])).unwrap();
        assert_eq!((p.e0, p.fibers.clone()), (-1, vec![Fiber::new(2, 3)]));
        assert!(matches!(
            normalize_sfs(&SeifertPiece::closed("P", 0, &[(1, 0)])),
            Err(SeifertError::ZeroMultiplicity { .. })
        ));
        assert!(matches!(
            normalize_sfs(&SeifertPiece::closed("P", 0, &[(2, 4)])),
            Err(SeifertError::NotReduced { .. })
        ));
    }

    #[test]
    fn euler_numbers() {
        let e = euler_number(&SeifertPiece::closed("P", -2, &[(1, 2), (2, 3), (4, 5)])).unwrap();
        assert_eq!(e, rat(-1, 30));
        assert_eq!(euler_number(&SeifertPiece::closed("P", -1, &[(1, 2), (1, 2)])).unwrap(), rat(0, 1));
        assert_eq!(euler_number(&SeifertPiece::closed("P", 0, &[])).unwrap(), rat(0, 1));
        assert!(euler_number(&make_n()).is_err());
    }

    #[test]
    fn orientation_reversal() {
        let p = SeifertPiece::closed("P", -2, &[(1, 2), (2, 3), (6, 7)]);
        let r = reverse_orientation(&p).unwrap();
        assert_eq!(r.e0, -1);
        assert_eq!(r.fibers, vec![Fiber::new(1, 2), Fiber::new(1, 3), Fiber::new(1, 7)]);
        assert_eq!(euler_number(&p).unwrap(), rat(1, 42));
        assert_eq!(euler_number(&r).unwrap(), rat(-1, 42));
        let s = SeifertPiece::closed("S", 0, &[]);
        assert_eq!(reverse_orientation(&s).unwrap(), s);
    }

    #[test]
    fn filling() {
        let solid = SeifertPiece::new("T", 0, vec![], 1);
        match fill_boundary(&solid, Slope::new(3, 1).unwrap()).unwrap() {
            FillOutcome::Piece(p) => {
                assert_eq!(p.fibers, vec![Fiber::new(1, 3)]);
                assert_eq!(is_lspace_sfs(&p).unwrap().verdict, LSpaceVerdict::LSpace);
            }
            other => panic!("{other:?}"),
        }
        match fill_boundary(&solid, Slope::INFINITY).unwrap() {
            FillOutcome::Piece(p) => {
                assert!(p.fibers.is_empty() && p.e0 == 0 && p.is_closed());
                assert_eq!(is_lspace_sfs(&p).unwrap().verdict, LSpaceVerdict::NotQhs);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(fill_boundary(&make_n(), Slope::ZERO).unwrap(), FillOutcome::FiberFilling);
    }

    #[test]
    fn realizability_examples() {
        let w = jn_realizable(&[rat(1, 2), rat(1, 3), rat(1, 7)]).unwrap().unwrap();
        assert_eq!((w.a, w.m), (3, 5));
        assert!(jn_realizable(&[rat(1, 2), rat(1, 3), rat(1, 5)]).unwrap().is_none());
        assert!(jn_realizable(&[rat(1, 2), rat(1, 2)]).unwrap().is_none());
        assert!(jn_realizable(&[rat(0, 1), rat(1, 2), rat(1, 3)]).is_err());
        assert!(jn_search(&[rat(1, 2), rat(1, 3), rat(1, 5)], Inequality::NonStrict, 2).unwrap().is_some());
    }

    #[test]
    fn closed_sfs_verdicts() {
        assert_eq!(verdict(-2, &[(1, 2), (2, 3), (4, 5)]), LSpaceVerdict::LSpace);
        assert_eq!(verdict(-2, &[(1, 2), (2, 3), (6, 7)]), LSpaceVerdict::NonLSpace);
        assert_eq!(verdict(-1, &[(1, 2), (1, 2)]), LSpaceVerdict::NotQhs);
        // negative definite star plumbing with no bad vertex
        assert_eq!(verdict(-5, &[(1, 2), (1, 3), (1, 7)]), LSpaceVerdict::LSpace);
        // e0 strictly inside the always-foliated range
        assert_eq!(verdict(-2, &[(1, 2), (1, 2), (1, 2), (1, 3)]), LSpaceVerdict::NonLSpace);
        let d = is_lspace_sfs(&SeifertPiece::closed("P", -2, &[(1, 2), (2, 3), (4, 5)])).unwrap();
        assert!(d.boundary_sensitive);
    }

    #[test]
    fn threshold_matches_direct_search() {
        let cases: Vec<Vec<Rational>> = vec![
            vec![rat(1, 2), rat(1, 3)],
            vec![rat(1, 2), rat(1, 2)],
            vec![rat(1, 3), rat(2, 5), rat(1, 7)],
            vec![rat(2, 3), rat(1, 4)],
        ];
        for r in cases {
            let t = realizable_threshold(&r);
            for den in 2..60i128 {
                for num in 1..den {
                    let u = rat(num, den);
                    let mut with_u = r.clone();
                    with_u.push(u);
                    let direct = jn_search(&with_u, Inequality::Strict, 2).unwrap().is_some();
                    assert_eq!(direct, u < t, "r={r:?} u={u} threshold={t}");
                }
            }
        }
    }
}
