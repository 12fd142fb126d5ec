//! Integer partitions and their statistics.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::{Error, Result, Scalar};

/// Weakly decreasing finite sequence of positive integers.
///
/// The conjugate is computed once and kept alongside, since Nekrasov
/// products query both rows and columns of cells outside the diagram.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<usize>,
    conj: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) || parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Invalid(format!("not a partition: {parts:?}")));
        }
        let conj = conjugate_parts(&parts);
        Ok(Partition { parts, conj })
    }

    /// Builds from any sequence, dropping zeros; panics if not weakly decreasing.
    pub fn from_slice(parts: &[usize]) -> Self {
        Self::new(parts.iter().copied().filter(|&p| p > 0).collect()).expect("weakly decreasing parts")
    }

    pub fn empty() -> Self {
        Partition { parts: Vec::new(), conj: Vec::new() }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of nonzero parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    /// `λ_i` with `λ_i = 0` past the last part; rows are 1-based.
    pub fn part(&self, i: usize) -> usize {
        if i == 0 {
            return 0;
        }
        self.parts.get(i - 1).copied().unwrap_or(0)
    }

    /// `λ'_j`, 1-based.
    pub fn col(&self, j: usize) -> usize {
        if j == 0 {
            return 0;
        }
        self.conj.get(j - 1).copied().unwrap_or(0)
    }

    pub fn conjugate(&self) -> Partition {
        Partition { parts: self.conj.clone(), conj: self.parts.clone() }
    }

    /// `a_λ(i,j) = λ_i - j`.
    pub fn arm(&self, i: usize, j: usize) -> i64 {
        self.part(i) as i64 - j as i64
    }

    /// `ℓ_λ(i,j) = λ'_j - i`.
    pub fn leg(&self, i: usize, j: usize) -> i64 {
        self.col(j) as i64 - i as i64
    }

    /// Cells `(i, j)` in row-major order, 1-based.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parts.iter().enumerate().flat_map(|(i, &r)| (1..=r).map(move |j| (i + 1, j)))
    }

    /// `n(λ) = Σ_{□∈λ} ℓ_λ(□)`.
    pub fn n(&self) -> i64 {
        self.cells().map(|(i, j)| self.leg(i, j)).sum()
    }

    pub fn stats(&self) -> Stats {
        let n = self.n();
        let n_conj = self.conjugate().n();
        Stats {
            n,
            n_conj,
            f_exponent: n_conj - n,
            f_sign: if self.size().is_multiple_of(2) { 1 } else { -1 },
        }
    }

    /// `f_λ = (-1)^{|λ|} q^{n(λ') - n(λ)}`.
    pub fn f<S: Scalar>(&self, q: &S) -> S {
        let s = self.stats();
        let v = q.powi(s.f_exponent);
        if s.f_sign < 0 {
            -v
        } else {
            v
        }
    }

    /// Hook product `c_λ = ∏ (1 - q^{ℓ+a+1})`.
    pub fn c_lambda<S: Scalar>(&self, q: &S) -> S {
        let mut r = S::one();
        for (i, j) in self.cells() {
            r *= S::one() - q.powi(self.leg(i, j) + self.arm(i, j) + 1);
        }
        r
    }

    /// `λ̄ = (λ_1 - 1, …, λ_ℓ - 1)` with zeros dropped.
    pub fn bar(&self) -> Partition {
        Partition::from_slice(&self.parts.iter().map(|&p| p - 1).collect::<Vec<_>>())
    }

    /// `r_n(λ) = (λ_1+1, …, λ_n+1, λ_{n+2}, …)` over the zero-padded sequence.
    pub fn r(&self, n: usize) -> Partition {
        let mut out: Vec<usize> = (1..=n).map(|i| self.part(i) + 1).collect();
        out.extend(self.parts.iter().skip(n + 1).copied());
        Partition::from_slice(&out)
    }
}

/// Partition statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub n: i64,
    pub n_conj: i64,
    pub f_exponent: i64,
    pub f_sign: i64,
}

fn conjugate_parts(parts: &[usize]) -> Vec<usize> {
    let first = parts.first().copied().unwrap_or(0);
    (1..=first).map(|j| parts.iter().filter(|&&p| p >= j).count()).collect()
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.parts)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.parts)
    }
}

impl Serialize for Partition {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        self.parts.serialize(s)
    }
}

/// A pair `(λ_+, λ_-)` of partitions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PartitionPair {
    pub plus: Partition,
    pub minus: Partition,
}

impl PartitionPair {
    pub fn size(&self) -> usize {
        self.plus.size() + self.minus.size()
    }

    pub fn get(&self, s: crate::Sign) -> &Partition {
        match s {
            crate::Sign::Plus => &self.plus,
            crate::Sign::Minus => &self.minus,
        }
    }
}

/// Partitions of exactly `n`, parts in reverse lexicographic order.
pub fn partitions_of(n: usize) -> Vec<Partition> {
    fn go(n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(Partition::from_slice(cur));
            return;
        }
        for k in (1..=n.min(max)).rev() {
            cur.push(k);
            go(n - k, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// All partitions of weight at most `k`, by weight and then reverse lexicographically.
pub fn enumerate_upto(k: usize) -> Vec<Partition> {
    (0..=k).flat_map(partitions_of).collect()
}

/// All pairs of total weight at most `k`, by total weight.
pub fn pairs_upto(k: usize) -> Vec<PartitionPair> {
    let parts = enumerate_upto(k);
    let mut out = Vec::new();
    for w in 0..=k {
        for a in &parts {
            for b in &parts {
                if a.size() + b.size() == w {
                    out.push(PartitionPair { plus: a.clone(), minus: b.clone() });
                }
            }
        }
    }
    out
}
