//! First homology of pieces and trees via presentation matrices.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::slopes::Slope;
use crate::tree::{BoundaryRef, GmTree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("expected exactly one open boundary, found {0}")]
    OpenBoundaries(usize),
    #[error("not a rational homology solid torus (boundary kernel has dimension {0})")]
    KernelDimension(usize),
    #[error("vector of length {got} does not match {expected} generators")]
    Dimension { expected: usize, got: usize },
}

/// Dense integer matrix, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i128>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<i128>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        IntMatrix { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i128 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i128) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add(&mut self, r: usize, c: usize, v: i128) {
        self.data[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[i128] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[i128]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    /// row[dst] -= k * row[src]
    fn row_sub(&mut self, dst: usize, src: usize, k: i128) {
        for c in 0..self.cols {
            let v = self.get(src, c);
            self.add(dst, c, -k * v);
        }
    }

    /// col[dst] -= k * col[src]
    fn col_sub(&mut self, dst: usize, src: usize, k: i128) {
        for r in 0..self.rows {
            let v = self.get(r, src);
            self.add(r, dst, -k * v);
        }
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Rank and invariant factors `d1 | d2 | ...` of the Smith normal form.
pub fn smith_invariants(m: &IntMatrix) -> (usize, Vec<i128>) {
    let mut a = m.clone();
    let mut diag = Vec::new();
    let mut t = 0;
    while t < a.rows && t < a.cols {
        // smallest nonzero entry of the remaining block as pivot
        let pivot = (t..a.rows)
            .flat_map(|r| (t..a.cols).map(move |c| (r, c)))
            .filter(|&(r, c)| a.get(r, c) != 0)
            .min_by_key(|&(r, c)| a.get(r, c).abs());
        let Some((pr, pc)) = pivot else { break };
        a.swap_rows(t, pr);
        a.swap_cols(t, pc);
        loop {
            let mut clean = true;
            for r in t + 1..a.rows {
                let k = Integer::div_floor(&a.get(r, t), &a.get(t, t));
                a.row_sub(r, t, k);
                if a.get(r, t) != 0 {
                    clean = false;
                }
            }
            for c in t + 1..a.cols {
                let k = Integer::div_floor(&a.get(t, c), &a.get(t, t));
                a.col_sub(c, t, k);
                if a.get(t, c) != 0 {
                    clean = false;
                }
            }
            if clean {
                break;
            }
            let r = (t + 1..a.rows).filter(|&r| a.get(r, t) != 0).min_by_key(|&r| a.get(r, t).abs());
            let c = (t + 1..a.cols).filter(|&c| a.get(t, c) != 0).min_by_key(|&c| a.get(t, c).abs());
            let r_best = r.map(|r| a.get(r, t).abs());
            let c_best = c.map(|c| a.get(t, c).abs());
            match (r_best, c_best) {
                (Some(x), Some(y)) if x <= y => a.swap_rows(t, r.unwrap()),
                (Some(_), None) => a.swap_rows(t, r.unwrap()),
                _ => a.swap_cols(t, c.unwrap()),
            }
        }
        diag.push(a.get(t, t).abs());
        t += 1;
    }
    // the diagonal becomes a divisibility chain by gcd/lcm exchanges
    for i in 0..diag.len() {
        for j in i + 1..diag.len() {
            let (g, l) = (diag[i].gcd(&diag[j]), diag[i].lcm(&diag[j]));
            diag[i] = g;
            diag[j] = l;
        }
    }
    (diag.len(), diag)
}

/// Order of a finitely generated abelian group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupOrder {
    Finite(u128),
    Infinite,
}

impl GroupOrder {
    pub fn finite(&self) -> Option<u128> {
        match self {
            GroupOrder::Finite(n) => Some(*n),
            GroupOrder::Infinite => None,
        }
    }
}

impl fmt::Display for GroupOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupOrder::Finite(n) => write!(f, "{n}"),
            GroupOrder::Infinite => f.write_str("INFINITE"),
        }
    }
}

impl Serialize for GroupOrder {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GroupOrder::Finite(n) => s.serialize_u128(*n),
            GroupOrder::Infinite => s.serialize_str("INFINITE"),
        }
    }
}

impl<'de> Deserialize<'de> for GroupOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u128),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(GroupOrder::Finite(n)),
            Raw::Text(t) if t == "INFINITE" => Ok(GroupOrder::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad order `{t}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct H1Invariants {
    pub b1: usize,
    pub torsion: Vec<i128>,
    pub order: GroupOrder,
}

impl H1Invariants {
    pub fn from_presentation(m: &IntMatrix) -> Self {
        let (rank, factors) = smith_invariants(m);
        let b1 = m.cols() - rank;
        let torsion: Vec<i128> = factors.into_iter().filter(|&f| f > 1).collect();
        let order = if b1 > 0 {
            GroupOrder::Infinite
        } else {
            GroupOrder::Finite(torsion.iter().map(|&f| f as u128).product())
        };
        H1Invariants { b1, torsion, order }
    }
}

impl fmt::Display for H1Invariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.b1 > 0 {
            parts.push(if self.b1 == 1 { "Z".into() } else { format!("Z^{}", self.b1) });
        }
        parts.extend(self.torsion.iter().map(|t| format!("Z/{t}")));
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// Presentation matrix of H1 with named generator columns.
#[derive(Debug, Clone)]
pub struct H1Presentation {
    pub matrix: IntMatrix,
    pub generators: Vec<String>,
    fiber: Vec<usize>,
    section: Vec<Vec<usize>>,
}

impl H1Presentation {
    pub fn fiber_column(&self, piece: usize) -> usize {
        self.fiber[piece]
    }

    pub fn section_column(&self, b: BoundaryRef) -> usize {
        self.section[b.piece][b.boundary]
    }

    /// Column vector of the class `p·d + q·h` on boundary `b`.
    pub fn slope_class(&self, b: BoundaryRef, s: Slope) -> Vec<i128> {
        let mut v = vec![0; self.generators.len()];
        v[self.section_column(b)] += s.p() as i128;
        v[self.fiber_column(b.piece)] += s.q() as i128;
        v
    }

    /// The presentation with the relation `class = 0` appended.
    pub fn with_relation(&self, class: &[i128]) -> Result<IntMatrix, HomologyError> {
        if class.len() != self.generators.len() {
            return Err(HomologyError::Dimension { expected: self.generators.len(), got: class.len() });
        }
        let mut m = self.matrix.clone();
        m.push_row(class);
        Ok(m)
    }
}

/// Abelianized Seifert relations of every piece plus the edge identifications.
pub fn h1_presentation(tree: &GmTree) -> H1Presentation {
    let mut generators = Vec::new();
    let mut fiber = Vec::new();
    let mut fibers_at = Vec::new();
    let mut section = Vec::new();
    for p in tree.pieces() {
        fiber.push(generators.len());
        generators.push(format!("h[{}]", p.name));
        let mut qs = Vec::new();
        for i in 0..p.fibers.len() {
            qs.push(generators.len());
            generators.push(format!("q[{},{}]", p.name, i + 1));
        }
        fibers_at.push(qs);
        let mut ds = Vec::new();
        for j in 0..p.boundaries {
            ds.push(generators.len());
            generators.push(format!("d[{},{}]", p.name, j + 1));
        }
        section.push(ds);
    }
    let n = generators.len();
    let mut matrix = IntMatrix::zeros(0, n);
    for (pi, p) in tree.pieces().iter().enumerate() {
        for (f, &col) in p.fibers.iter().zip(&fibers_at[pi]) {
            let mut row = vec![0; n];
            row[col] = f.alpha as i128;
            row[fiber[pi]] += f.beta as i128;
            matrix.push_row(&row);
        }
        let mut row = vec![0; n];
        for &col in fibers_at[pi].iter().chain(&section[pi]) {
            row[col] += 1;
        }
        row[fiber[pi]] -= p.e0 as i128;
        matrix.push_row(&row);
    }
    for e in tree.edges() {
        let m = e.map;
        let (da, ha) = (section[e.a.piece][e.a.boundary], fiber[e.a.piece]);
        let (db, hb) = (section[e.b.piece][e.b.boundary], fiber[e.b.piece]);
        let mut row = vec![0; n];
        row[da] += 1;
        row[db] -= m.a as i128;
        row[hb] -= m.c as i128;
        matrix.push_row(&row);
        let mut row = vec![0; n];
        row[ha] += 1;
        row[db] -= m.b as i128;
        row[hb] -= m.d as i128;
        matrix.push_row(&row);
    }
    H1Presentation { matrix, generators, fiber, section }
}

pub fn h1_invariants(tree: &GmTree) -> H1Invariants {
    H1Invariants::from_presentation(&h1_presentation(tree).matrix)
}

type Q = Ratio<i128>;

/// Basis of the right kernel of `m` over the rationals.
fn rational_nullspace(m: &IntMatrix) -> Vec<Vec<Q>> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a: Vec<Vec<Q>> = (0..rows).map(|r| m.row(r).iter().map(|&v| Q::from_integer(v)).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for v in a[r].iter_mut() {
            *v *= inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let k = a[i][c];
                for j in 0..cols {
                    let sub = k * a[r][j];
                    a[i][j] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut z = vec![Q::zero(); cols];
            z[free] = Q::from_integer(1);
            for (i, &pc) in pivots.iter().enumerate() {
                z[pc] = -a[i][free];
            }
            z
        })
        .collect()
}

/// The slope on the single open boundary whose class is torsion in H1.
pub fn rational_longitude(tree: &GmTree) -> Result<Slope, HomologyError> {
    let open = tree.open_boundaries();
    if open.len() != 1 {
        return Err(HomologyError::OpenBoundaries(open.len()));
    }
    let pres = h1_presentation(tree);
    let (dc, hc) = (pres.section_column(open[0]), pres.fiber_column(open[0].piece));
    // p·d + q·h is torsion iff it pairs to zero with every kernel vector
    let pairs: Vec<(Q, Q)> = rational_nullspace(&pres.matrix)
        .into_iter()
        .map(|z| (z[dc], z[hc]))
        .filter(|(x, y)| !x.is_zero() || !y.is_zero())
        .collect();
    let Some(&(x, y)) = pairs.first() else { return Err(HomologyError::KernelDimension(2)) };
    if pairs.iter().any(|&(u, v)| u * y - v * x != Q::zero()) {
        return Err(HomologyError::KernelDimension(0));
    }
    let (p, q) = (y, -x);
    let den = p.denom().lcm(q.denom());
    let (p, q) = ((p * den).to_integer(), (q * den).to_integer());
    let g = p.gcd(&q);
    Slope::from_wide(p / g, q / g).map_err(|_| HomologyError::KernelDimension(0))
}

/// Whether `p·d + q·h` on `b` is torsion, used by tests as a second path.
pub fn is_torsion_class(pres: &H1Presentation, class: &[i128]) -> bool {
    let base = smith_invariants(&pres.matrix).0;
    let Ok(with) = pres.with_relation(class) else { return false };
    smith_invariants(&with).0 == base
}
