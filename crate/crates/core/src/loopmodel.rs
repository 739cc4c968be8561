//! Puzzle-piece words for simple loops and the spin^c loop count.
//!
//! A simple loop is a cyclic word in the letters `c̄_k`, `d_k` and `e`. Each
//! letter carries one `•` vertex; `c̄_k` and `d_k` carry `k` further `∘`
//! vertices. The loops of a simple loop-type manifold `M` parametrized by
//! `(α, β)` are counted by `H_1(M)/⟨α, β⟩`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::homology::{smith_invariants, GroupOrder, IntMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoopError {
    #[error("empty loop word")]
    Empty,
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("letter `{0}` needs an index k >= 1")]
    BadIndex(String),
    #[error("class of length {got} does not match {expected} generators")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PuzzlePiece {
    Cbar(u32),
    D(u32),
    E,
}

impl PuzzlePiece {
    /// `(•, ∘)` vertices contributed by this piece.
    pub fn vertices(&self) -> (usize, usize) {
        match *self {
            PuzzlePiece::Cbar(k) | PuzzlePiece::D(k) => (1, k as usize),
            PuzzlePiece::E => (1, 0),
        }
    }
}

impl fmt::Display for PuzzlePiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PuzzlePiece::Cbar(k) => write!(f, "c{k}"),
            PuzzlePiece::D(k) => write!(f, "d{k}"),
            PuzzlePiece::E => write!(f, "e"),
        }
    }
}

impl FromStr for PuzzlePiece {
    type Err = LoopError;

    fn from_str(token: &str) -> Result<Self, LoopError> {
        if token == "e" {
            return Ok(PuzzlePiece::E);
        }
        let (make, rest): (fn(u32) -> PuzzlePiece, &str) = if let Some(r) = token.strip_prefix('c') {
            (PuzzlePiece::Cbar, r)
        } else if let Some(r) = token.strip_prefix('d') {
            (PuzzlePiece::D, r)
        } else {
            return Err(LoopError::UnknownLetter(token.to_string()));
        };
        match rest.parse::<u32>() {
            Ok(k) if k >= 1 => Ok(make(k)),
            _ => Err(LoopError::BadIndex(token.to_string())),
        }
    }
}

/// Edge labels of a loop, by algebra element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    Rho1,
    Rho2,
    Rho3,
    Rho12,
    Rho23,
    Rho123,
}

impl EdgeLabel {
    /// Shift of the relative spin^c label along an edge, as coefficients of
    /// `(α, β)`, for the labels whose action is fixed: `ρ1` preserves the
    /// label, `ρ23` adds `α` and `ρ3` adds `α + β`.
    pub fn spin_shift(&self) -> Option<(i64, i64)> {
        match self {
            EdgeLabel::Rho1 => Some((0, 0)),
            EdgeLabel::Rho23 => Some((1, 0)),
            EdgeLabel::Rho3 => Some((1, 1)),
            _ => None,
        }
    }
}

/// A nonempty cyclic word; words equal up to rotation compare equal.
#[derive(Debug, Clone, Eq)]
pub struct LoopWord {
    letters: Vec<PuzzlePiece>,
}

impl LoopWord {
    pub fn new(letters: Vec<PuzzlePiece>) -> Result<Self, LoopError> {
        if letters.is_empty() {
            return Err(LoopError::Empty);
        }
        Ok(LoopWord { letters })
    }

    pub fn letters(&self) -> &[PuzzlePiece] {
        &self.letters
    }

    pub fn rotated(&self, by: usize) -> LoopWord {
        let mut letters = self.letters.clone();
        let n = letters.len();
        letters.rotate_left(by % n);
        LoopWord { letters }
    }
}

impl PartialEq for LoopWord {
    fn eq(&self, other: &Self) -> bool {
        let n = self.letters.len();
        n == other.letters.len()
            && (0..n).any(|r| (0..n).all(|i| self.letters[(i + r) % n] == other.letters[i]))
    }
}

impl fmt::Display for LoopWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Parses whitespace-separated letters such as `c2 d1 e`.
pub fn parse_loop_word(text: &str) -> Result<LoopWord, LoopError> {
    LoopWord::new(text.split_whitespace().map(str::parse).collect::<Result<_, _>>()?)
}

/// Total `(•, ∘)` vertex counts of a word.
pub fn vertex_counts(w: &LoopWord) -> (usize, usize) {
    w.letters.iter().map(PuzzlePiece::vertices).fold((0, 0), |(b, w), (x, y)| (b + x, w + y))
}

/// Order of `H_1/⟨α, β⟩` where `presentation` has one row per relation and
/// one column per generator.
pub fn predicted_loop_count(presentation: &IntMatrix, alpha: &[i128], beta: &[i128]) -> Result<GroupOrder, LoopError> {
    let n = presentation.cols();
    for class in [alpha, beta] {
        if class.len() != n {
            return Err(LoopError::Dimension { expected: n, got: class.len() });
        }
    }
    let mut m = presentation.clone();
    m.push_row(alpha);
    m.push_row(beta);
    let (rank, factors) = smith_invariants(&m);
    Ok(if rank < n {
        GroupOrder::Infinite
    } else {
        GroupOrder::Finite(factors.iter().map(|&f| f.unsigned_abs()).product())
    })
}
