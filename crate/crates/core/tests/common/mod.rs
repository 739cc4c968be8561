//! Seeded random instances shared by the integration tests.
#![allow(dead_code)]

use lspace::engine::Status;
use lspace::seifert::{Fiber, SeifertPiece};
use lspace::slopes::{GluingMap, Slope};
use lspace::tree::{validate_tree, BoundaryRef, Edge, GmTree};
use num_integer::Integer;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_fiber(rng: &mut impl Rng, max_alpha: i64) -> Fiber {
    let alpha = rng.gen_range(2..=max_alpha);
    loop {
        let beta = rng.gen_range(1..alpha);
        if beta.gcd(&alpha) == 1 {
            return Fiber::new(beta, alpha);
        }
    }
}

pub fn random_piece(rng: &mut impl Rng, name: &str, boundaries: usize, max_fibers: usize) -> SeifertPiece {
    let k = rng.gen_range(0..=max_fibers);
    let fibers = (0..k).map(|_| random_fiber(rng, 7)).collect();
    SeifertPiece::new(name, rng.gen_range(-3..=1), fibers, boundaries)
}

/// Random matrix of determinant -1 with small entries.
pub fn random_map(rng: &mut impl Rng) -> GluingMap {
    let mut m = GluingMap::new(0, 1, 1, 0);
    for _ in 0..rng.gen_range(0..4) {
        let k = rng.gen_range(-3..=3);
        let step = if rng.gen_bool(0.5) { GluingMap::new(1, k, 0, 1) } else { GluingMap::new(1, 0, k, 1) };
        m = m.compose(&step);
    }
    m
}

pub fn random_slope(rng: &mut impl Rng, max_height: i64) -> Slope {
    loop {
        let q = rng.gen_range(0..=max_height);
        let p = rng.gen_range(-max_height..=max_height);
        if let Ok(s) = Slope::new(p, q) {
            if p.gcd(&q) == 1 {
                return s;
            }
        }
    }
}

/// Random tree with `n` pieces; with `open` set, piece 0 keeps one extra open boundary.
pub fn random_tree(rng: &mut impl Rng, n: usize, open: bool, max_fibers: usize) -> GmTree {
    let parents: Vec<usize> = (1..n).map(|i| rng.gen_range(0..i)).collect();
    let mut degree = vec![0usize; n];
    for (i, &p) in parents.iter().enumerate() {
        degree[i + 1] += 1;
        degree[p] += 1;
    }
    if open {
        degree[0] += 1;
    }
    let pieces: Vec<SeifertPiece> =
        (0..n).map(|i| random_piece(rng, &format!("P{}", i + 1), degree[i], max_fibers)).collect();
    let mut used = vec![if open { 1 } else { 0 }; n];
    used[1..].iter_mut().for_each(|u| *u = 0);
    let mut edges = Vec::new();
    for (i, &p) in parents.iter().enumerate() {
        let child = i + 1;
        let a = BoundaryRef::new(p, used[p]);
        used[p] += 1;
        let b = BoundaryRef::new(child, used[child]);
        used[child] += 1;
        edges.push(Edge::new(format!("e{}", i + 1), a, b, random_map(rng)));
    }
    validate_tree(pieces, edges).expect("generated tree is valid")
}

/// Closed two-solid-torus tree realizing `L(p, q)`.
pub fn lens_tree(p: i64, q: i64) -> GmTree {
    // the meridian d goes to q·d + p·h; from q x + p y = 1 the second column
    // (y, -x) completes det -1
    let g = q.extended_gcd(&p);
    assert_eq!(g.gcd, 1);
    let m = GluingMap::new(q, g.y, p, -g.x);
    let solid = |n: &str| SeifertPiece::new(n, 0, vec![], 1);
    validate_tree(
        vec![solid("A"), solid("B")],
        vec![Edge::new("e1", BoundaryRef::new(0, 0), BoundaryRef::new(1, 0), m)],
    )
    .unwrap()
}

/// Closed Seifert pieces by brute force: `(e0, r)` with every `r_i` in `(0, 1)`.
pub fn normalized(piece: &SeifertPiece) -> (i64, Vec<(i64, i64)>) {
    let mut e0 = piece.e0;
    let mut r = Vec::new();
    for f in &piece.fibers {
        let (b, a) = if f.alpha < 0 { (-f.beta, -f.alpha) } else { (f.beta, f.alpha) };
        e0 += b.div_euclid(a);
        if b.rem_euclid(a) != 0 {
            r.push((b.rem_euclid(a), a));
        }
    }
    (e0, r)
}

/// Whether some `0 < a < m` coprime to `m` and two distinct indices `i, j`
/// give `r_i < a/m`, `r_j < (m-a)/m` and `r_k < 1/m` for every other `k`.
/// Every `m` up to `4 max(alpha)` is tried.
pub fn brute_realizable(r: &[(i64, i64)]) -> bool {
    if r.len() <= 2 {
        return false;
    }
    let big = r.iter().map(|x| x.1).max().unwrap();
    // x/y < a/m  <=>  x m < a y
    let below = |x: (i64, i64), a: i64, m: i64| x.0 * m < a * x.1;
    for m in 2..=4 * big {
        for a in 1..m {
            if a.gcd(&m) != 1 {
                continue;
            }
            for i in 0..r.len() {
                for j in 0..r.len() {
                    if i == j || !below(r[i], a, m) || !below(r[j], m - a, m) {
                        continue;
                    }
                    if (0..r.len()).filter(|&k| k != i && k != j).all(|k| below(r[k], 1, m)) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Status of a closed Seifert piece from the horizontal foliation criterion,
/// with realizability decided by `brute_realizable`.
pub fn brute_sfs_status(piece: &SeifertPiece) -> Status {
    let (e0, r) = normalized(piece);
    let k = r.len() as i64;
    let lcm = r.iter().fold(1i64, |l, x| l.lcm(&x.1));
    let e_scaled = e0 * lcm + r.iter().map(|x| x.0 * (lcm / x.1)).sum::<i64>();
    if e_scaled == 0 {
        return Status::NotQhs;
    }
    let flipped: Vec<(i64, i64)> = r.iter().map(|&(b, a)| (a - b, a)).collect();
    let horizontal = k >= 3
        && ((2 - k..=-2).contains(&e0) || (e0 == -1 && brute_realizable(&r)) || (e0 == 1 - k && brute_realizable(&flipped)));
    if horizontal {
        Status::NonLSpace
    } else {
        Status::LSpace
    }
}

/// Order of `Z^n / rows` by explicit enumeration, for presentations built as
/// `P · diag(d) · Q` with `q_inv = Q^-1`: the map `x ↦ x Q^-1 mod d` identifies
/// the group with `⊕ Z/d_i`. Returns the index of the subgroup generated by
/// `gens`.
pub fn coset_count(d: &[i128], q_inv: &[Vec<i128>], gens: &[Vec<i128>]) -> u128 {
    let n = d.len();
    let image = |x: &[i128]| -> Vec<i128> {
        (0..n).map(|j| (0..n).map(|i| x[i] * q_inv[i][j]).sum::<i128>().rem_euclid(d[j])).collect()
    };
    let gens: Vec<Vec<i128>> = gens.iter().map(|g| image(g)).collect();
    let zero = vec![0i128; n];
    let mut seen = std::collections::HashSet::from([zero.clone()]);
    let mut stack = vec![zero];
    while let Some(x) = stack.pop() {
        for g in &gens {
            let y: Vec<i128> = (0..n).map(|j| (x[j] + g[j]).rem_euclid(d[j])).collect();
            if seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    let order: i128 = d.iter().product();
    order as u128 / seen.len() as u128
}

/// Random unimodular `n × n` matrix and its inverse.
pub fn random_unimodular(rng: &mut impl Rng, n: usize) -> (Vec<Vec<i128>>, Vec<Vec<i128>>) {
    let id = |n: usize| (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect::<Vec<_>>()).collect::<Vec<_>>();
    let (mut m, mut inv) = (id(n), id(n));
    if n < 2 {
        return (m, inv);
    }
    for _ in 0..rng.gen_range(0..6) {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let k: i128 = rng.gen_range(-2..=2);
        // m := E m with E adding k·row j to row i; inv := inv E^-1
        for c in 0..n {
            let v = m[j][c];
            m[i][c] += k * v;
        }
        for r in 0..n {
            let v = inv[r][i];
            inv[r][j] -= k * v;
        }
    }
    (m, inv)
}

pub fn mat_mul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Vec<Vec<i128>> {
    (0..a.len()).map(|i| (0..b[0].len()).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}
