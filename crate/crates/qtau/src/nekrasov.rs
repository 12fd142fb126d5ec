//! Nekrasov factors and the exact identities they satisfy.

use rayon::prelude::*;

use crate::partitions::enumerate_upto;
use crate::{Error, Partition, Report, Result, Scalar};

/// `N_{λ,μ}(w) = ∏_{□∈λ}(1 - q^{-ℓ_λ(□)-a_μ(□)-1} w) ∏_{□∈μ}(1 - q^{a_λ(□)+ℓ_μ(□)+1} w)`.
pub fn nekrasov<S: Scalar>(l: &Partition, m: &Partition, w: &S, q: &S) -> S {
    let mut r = S::one();
    for (i, j) in l.cells() {
        r *= S::one() - q.powi(-l.leg(i, j) - m.arm(i, j) - 1) * w;
    }
    for (i, j) in m.cells() {
        r *= S::one() - q.powi(l.arm(i, j) + m.leg(i, j) + 1) * w;
    }
    r
}

/// Cell exponents of `N_{λ,μ}`: each factor is `1 - q^k w` for one listed `k`.
pub fn exponents<'a>(l: &'a Partition, m: &'a Partition) -> impl Iterator<Item = i64> + 'a {
    l.cells()
        .map(move |(i, j)| -l.leg(i, j) - m.arm(i, j) - 1)
        .chain(m.cells().map(move |(i, j)| l.arm(i, j) + m.leg(i, j) + 1))
}

/// Powers `q^k` for `|k| ≤ m`.
#[derive(Clone, Debug)]
pub struct IntPowers<S> {
    m: i64,
    vals: Vec<S>,
}

impl<S: Scalar> IntPowers<S> {
    pub fn new(q: &S, m: usize) -> Self {
        let m = m as i64;
        let inv = S::one() / q.clone();
        let mut vals = vec![S::one(); (2 * m + 1) as usize];
        for k in 1..=m {
            vals[(m + k) as usize] = vals[(m + k - 1) as usize].clone() * q;
            vals[(m - k) as usize] = vals[(m - k + 1) as usize].clone() * &inv;
        }
        IntPowers { m, vals }
    }

    pub fn get(&self, k: i64) -> S {
        if k.abs() <= self.m {
            self.vals[(k + self.m) as usize].clone()
        } else {
            self.vals[(self.m + 1) as usize].powi(k)
        }
    }
}

/// `N_{·,·}(w)` for a fixed argument, with each `1 - q^k w` tabulated.
#[derive(Clone, Debug)]
pub struct NekFactor<S> {
    m: i64,
    vals: Vec<S>,
    q: S,
    w: S,
    shift: Option<i64>,
}

impl<S: Scalar> NekFactor<S> {
    pub fn new(w: &S, pw: &IntPowers<S>) -> Self {
        let m = pw.m;
        let vals = (-m..=m).map(|k| S::one() - pw.get(k) * w).collect();
        NekFactor { m, vals, q: pw.get(1), w: w.clone(), shift: None }
    }

    /// Argument `w = q^j`; factors `1 - q^{k+j}` are formed from integer powers so zeros are exact.
    pub fn new_int(j: i64, pw: &IntPowers<S>) -> Self {
        let m = pw.m;
        let vals = (-m..=m).map(|k| S::one() - pw.get(k + j)).collect();
        NekFactor { m, vals, q: pw.get(1), w: pw.get(j), shift: Some(j) }
    }

    fn factor(&self, k: i64) -> S {
        if k.abs() <= self.m {
            self.vals[(k + self.m) as usize].clone()
        } else if let Some(j) = self.shift {
            S::one() - self.q.powi(k + j)
        } else {
            S::one() - self.q.powi(k) * &self.w
        }
    }

    pub fn eval(&self, l: &Partition, m: &Partition) -> S {
        let mut r = S::one();
        for k in exponents(l, m) {
            r *= self.factor(k);
        }
        r
    }
}

/// `N_{λ,μ}(w) = N_{μ,λ}(w^{-1}) w^{|λ|+|μ|} f_λ / f_μ`.
pub fn check_rule1<S: Scalar>(l: &Partition, m: &Partition, w: &S, q: &S) -> Report {
    let lhs = nekrasov(l, m, w, q);
    let winv = S::one() / w.clone();
    let rhs = nekrasov(m, l, &winv, q) * w.powi((l.size() + m.size()) as i64) * l.f(q) / m.f(q);
    single("rule1", lhs == rhs, format!("lambda={l} mu={m}"))
}

/// `(q^{n(λ')}/c_λ)^2 = f_λ q^{-|λ|} / N_{λ,λ}(1)`.
pub fn check_rule2<S: Scalar>(l: &Partition, q: &S) -> Report {
    let base = q.powi(l.conjugate().n()) / l.c_lambda(q);
    let lhs = base.clone() * base;
    let rhs = l.f(q) * q.powi(-(l.size() as i64)) / nekrasov(l, l, &S::one(), q);
    single("rule2", lhs == rhs, format!("lambda={l}"))
}

/// `N_{λ',μ'}(u) = N_{μ,λ}(u)`.
pub fn check_transpose<S: Scalar>(l: &Partition, m: &Partition, u: &S, q: &S) -> Report {
    let lhs = nekrasov(&l.conjugate(), &m.conjugate(), u, q);
    let rhs = nekrasov(m, l, u, q);
    single("transpose", lhs == rhs, format!("lambda={l} mu={m}"))
}

/// `N_{λ,μ}(1) = 0` for `λ ≠ μ`.
pub fn check_delta<S: Scalar>(l: &Partition, m: &Partition, q: &S) -> Report {
    let v = nekrasov(l, m, &S::one(), q);
    let ok = if l == m { !v.is_zero() } else { v.is_zero() };
    single("delta", ok, format!("lambda={l} mu={m}"))
}

fn single(id: &str, ok: bool, witness: String) -> Report {
    let fails = if ok { vec![] } else { vec![witness] };
    Report::exact(id, 1, &fails)
}

/// Vanishing of `N_{η,λ}(q^{-1})` next to membership of `η` in `{r_n(λ)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nonvanishing {
    pub is_zero: bool,
    pub n_if_rn: Option<usize>,
}

impl Nonvanishing {
    pub fn consistent(&self) -> bool {
        self.is_zero == self.n_if_rn.is_none()
    }
}

pub fn classify_nonvanishing<S: Scalar>(l: &Partition, eta: &Partition, q: &S) -> Nonvanishing {
    let qinv = S::one() / q.clone();
    let is_zero = nekrasov(eta, l, &qinv, q).is_zero();
    let n_if_rn = (0..=eta.size() + l.len()).find(|&n| l.r(n) == *eta);
    Nonvanishing { is_zero, n_if_rn }
}

/// The partitions `η = r_n(λ)`, `γ = (r_n(μ'))'` and `η̃` of the reduction lemma.
pub fn reduction_data(l: &Partition, m: &Partition, n: usize) -> (Partition, Partition, Partition) {
    let len = l.len();
    let eta = l.r(n);
    let gamma = m.conjugate().r(n).conjugate();
    let eta_t = if n < len {
        eta.bar()
    } else {
        let mut v = l.parts().to_vec();
        v.extend(std::iter::repeat_n(1, n + 1 - len));
        Partition::from_slice(&v)
    };
    (eta, gamma, eta_t)
}

/// `∏_{j=1}^{μ_r} (1-q^{j-1}u)/(1-q^{-ℓ_μ(r,j)+j-2}u) · ∏_{i=1}^{r-1} (1-q^{r-i+a_μ(i,1)+s}u)`.
fn row_factor<S: Scalar>(m: &Partition, r: usize, shift: i64, u: &S, q: &S) -> S {
    let one = S::one();
    let mut out = S::one();
    for j in 1..=m.part(r) {
        out *= one.clone() - q.powi(j as i64 - 1) * u;
        out /= one.clone() - q.powi(-m.leg(r, j) + j as i64 - 2) * u;
    }
    for i in 1..r {
        out *= one.clone() - q.powi((r - i) as i64 + m.arm(i, 1) + shift) * u;
    }
    out
}

/// Both sides of one of the six reduction identities.
pub fn reduction_lemma_sides<S: Scalar>(which: u8, l: &Partition, m: &Partition, n: usize, u: &S, q: &S) -> Result<(S, S)> {
    if l.is_empty() {
        return Err(Error::Invalid("lambda must be nonempty".into()));
    }
    let len = l.len();
    let (eta, gamma, eta_t) = reduction_data(l, m, n);
    let lb = l.bar();
    let one = S::one();
    let qinv = one.clone() / q.clone();
    let uq = u.clone() / q;
    let qu = u.clone() * q;
    let nek = |a: &Partition, b: &Partition, w: &S| nekrasov(a, b, w, q);
    let nz = |x: S, what: &str| -> Result<S> {
        if x.is_zero() {
            Err(Error::Singular(format!("{what} vanishes")))
        } else {
            Ok(x)
        }
    };
    let sides = match which {
        1 => {
            let lhs = nek(&eta, l, &qinv) / nz(nek(&eta, &eta, &one), "N_{eta,eta}(1)")?;
            let e = eta_t.size() as i64 - l.size() as i64;
            let rhs = nek(&eta_t, &lb, &qinv) / nz(nek(&eta_t, &eta_t, &one), "N_{eta~,eta~}(1)")? * (one.clone() - q.powi(e));
            (lhs, rhs)
        }
        2 => {
            let lhs = nek(m, l, u) / nz(nek(m, &eta, &qu), "N_{mu,eta}(qu)")?;
            let rhs = nek(m, &lb, &uq) / nz(nek(m, &eta_t, u), "N_{mu,eta~}(u)")? * (one.clone() - u);
            (lhs, rhs)
        }
        3 => {
            let k = m.len() as i64;
            let lhs = nek(m, l, u) / nz(nek(m, &eta, &qu), "N_{mu,eta}(qu)")?;
            let mb = m.bar();
            let e = eta.size() as i64 - l.size() as i64 + 1 - k;
            let rhs = nek(&mb, l, &qu) / nz(nek(&mb, &eta, &(qu.clone() * q)), "N_{mu-bar,eta}(q^2u)")?
                * (one.clone() - q.powi(e) * u)
                / nz(one.clone() - qu.clone(), "1-qu")?;
            (lhs, rhs)
        }
        4 => {
            let lhs = nek(m, l, u);
            let rhs = nek(m, &lb, &uq) * row_factor_guard(m, len + 1, 0, u, q)?;
            (lhs, rhs)
        }
        5 => {
            let lhs = nek(m, &eta, u);
            let rhs = nek(m, &eta_t, &uq) * row_factor_guard(m, len, 0, u, q)?;
            (lhs, rhs)
        }
        6 => {
            let lhs = nek(&gamma, l, u);
            let e = len as i64 + gamma.size() as i64 - m.size() as i64 - 1;
            let rhs = nek(&gamma, &lb, &uq) * (one.clone() - q.powi(e) * u) * row_factor_guard(m, len, 0, u, q)?;
            (lhs, rhs)
        }
        _ => return Err(Error::Invalid(format!("identity index {which} not in 1..=6"))),
    };
    Ok(sides)
}

fn row_factor_guard<S: Scalar>(m: &Partition, r: usize, shift: i64, u: &S, q: &S) -> Result<S> {
    for j in 1..=m.part(r) {
        if (S::one() - q.powi(-m.leg(r, j) + j as i64 - 2) * u).is_zero() {
            return Err(Error::Singular("row factor denominator vanishes".into()));
        }
    }
    Ok(row_factor(m, r, shift, u, q))
}

pub fn check_reduction_lemma<S: Scalar>(which: u8, l: &Partition, m: &Partition, n: usize, u: &S, q: &S) -> Result<Report> {
    let (lhs, rhs) = reduction_lemma_sides(which, l, m, n, u, q)?;
    Ok(single(&format!("reduction-{which}"), lhs == rhs, format!("lambda={l} mu={m} n={n}")))
}

/// Exhaustive exact sweep over all partitions up to `max_weight`, `n ≤ max_n`.
///
/// Sample points where a denominator vanishes are reported as failures with
/// the offending instance, never skipped.
pub fn lemma_suite<S: Scalar>(max_weight: usize, max_n: usize, q: &S, u: &S, w: &S) -> Vec<Report> {
    let parts = enumerate_upto(max_weight);
    let pairs: Vec<(Partition, Partition)> =
        parts.iter().flat_map(|a| parts.iter().map(move |b| (a.clone(), b.clone()))).collect();
    let run = |id: &str, items: Vec<std::result::Result<bool, String>>, witnesses: Vec<String>| {
        let fails: Vec<String> = items
            .iter()
            .zip(witnesses)
            .filter_map(|(r, wit)| match r {
                Ok(true) => None,
                Ok(false) => Some(wit),
                Err(e) => Some(format!("{wit}: {e}")),
            })
            .collect();
        Report::exact(id, items.len(), &fails)
    };
    let wit_pairs: Vec<String> = pairs.iter().map(|(a, b)| format!("lambda={a} mu={b}")).collect();
    let mut out = Vec::new();

    let r: Vec<_> = pairs.par_iter().map(|(a, b)| Ok(check_transpose(a, b, u, q).pass)).collect();
    out.push(run("transpose", r, wit_pairs.clone()));
    let r: Vec<_> = pairs.par_iter().map(|(a, b)| Ok(check_rule1(a, b, w, q).pass)).collect();
    out.push(run("rule1", r, wit_pairs.clone()));
    let r: Vec<_> = parts.par_iter().map(|a| Ok(check_rule2(a, q).pass)).collect();
    out.push(run("rule2", r, parts.iter().map(|a| format!("lambda={a}")).collect()));
    let r: Vec<_> = pairs.par_iter().map(|(a, b)| Ok(check_delta(a, b, q).pass)).collect();
    out.push(run("delta", r, wit_pairs.clone()));
    let r: Vec<_> = pairs.par_iter().map(|(a, b)| Ok(classify_nonvanishing(a, b, q).consistent())).collect();
    out.push(run("nonvanishing", r, wit_pairs.clone()));

    let triples: Vec<(Partition, Partition, usize)> = pairs
        .iter()
        .filter(|(a, _)| !a.is_empty())
        .flat_map(|(a, b)| (0..=max_n).map(move |n| (a.clone(), b.clone(), n)))
        .collect();
    let wit_triples: Vec<String> = triples.iter().map(|(a, b, n)| format!("lambda={a} mu={b} n={n}")).collect();
    for which in 1..=6u8 {
        let r: Vec<_> = triples
            .par_iter()
            .map(|(a, b, n)| reduction_lemma_sides(which, a, b, *n, u, q).map(|(x, y)| x == y).map_err(|e| e.to_string()))
            .collect();
        out.push(run(&format!("reduction-{which}"), r, wit_triples.clone()));
    }
    for rep in out.iter_mut() {
        *rep = rep
            .clone()
            .param("q", format!("{q:?}"))
            .param("u", format!("{u:?}"))
            .param("w", format!("{w:?}"))
            .trunc("max_weight", max_weight as u64)
            .trunc("max_n", max_n as u64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::enumerate_upto;
    use crate::{Analytic, Exact, C128};
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    fn p(v: &[usize]) -> Partition {
        Partition::from_slice(v)
    }

    fn r(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    #[test]
    fn small_factors() {
        let q = r(1, 3);
        let w = r(5, 7);
        let one = Exact::one();
        assert_eq!(nekrasov(&p(&[]), &p(&[]), &w, &q), one);
        assert_eq!(nekrasov(&p(&[1]), &p(&[]), &w, &q), one.clone() - &w);
        assert_eq!(nekrasov(&p(&[]), &p(&[1]), &w, &q), one - &w);
    }

    // single-box pair: exponents from the definition by hand
    #[test]
    fn one_box_pair() {
        let q = r(1, 3);
        let w = r(2, 1);
        let one = Exact::one();
        let expect = (one.clone() - q.powi(-1) * &w) * (one - q.powi(1) * &w);
        assert_eq!(nekrasov(&p(&[1]), &p(&[1]), &w, &q), expect);
        assert!(check_rule1(&p(&[1]), &p(&[1]), &w, &q).pass);
    }

    #[test]
    fn rule2_single_box() {
        let q = r(1, 3);
        let one = Exact::one();
        let lhs = (one.clone() / (one.clone() - &q)).powi(2);
        let rhs = -one.clone() * q.powi(-1) / nekrasov(&p(&[1]), &p(&[1]), &one, &q);
        assert_eq!(lhs, rhs);
        assert!(check_rule2(&p(&[1]), &q).pass);
        for l in enumerate_upto(8) {
            assert!(check_rule2(&l, &r(2, 5)).pass, "{l}");
        }
    }

    #[test]
    fn transpose_examples() {
        assert!(check_transpose(&p(&[2, 1]), &p(&[1]), &r(2, 1), &r(1, 3)).pass);
        assert!(check_transpose(&p(&[]), &p(&[3, 1]), &r(2, 1), &r(1, 3)).pass);
    }

    #[test]
    fn nonvanishing_examples() {
        let q = r(1, 3);
        let c = classify_nonvanishing(&p(&[]), &p(&[]), &q);
        assert_eq!(c, Nonvanishing { is_zero: false, n_if_rn: Some(0) });
        let c = classify_nonvanishing(&p(&[2, 1]), &p(&[1]), &q);
        assert_eq!(c, Nonvanishing { is_zero: false, n_if_rn: Some(0) });
        let c = classify_nonvanishing(&p(&[2, 1]), &p(&[2]), &q);
        assert_eq!(c, Nonvanishing { is_zero: true, n_if_rn: None });
        assert!(c.consistent());
    }

    #[test]
    fn reduction_data_cases() {
        let (eta, _, eta_t) = reduction_data(&p(&[1]), &p(&[]), 0);
        assert_eq!(eta, p(&[]));
        assert_eq!(eta_t, p(&[]));
        let (eta, _, eta_t) = reduction_data(&p(&[2, 1]), &p(&[]), 3);
        assert_eq!(eta, p(&[3, 2, 1]));
        assert_eq!(eta_t, p(&[2, 1, 1, 1]));
        let (_, gamma, _) = reduction_data(&p(&[1]), &p(&[2]), 1);
        assert_eq!(gamma, p(&[1, 1]));
    }

    #[test]
    fn first_reduction_identity_at_one_box() {
        let q = r(1, 3);
        let (lhs, rhs) = reduction_lemma_sides(1, &p(&[1]), &p(&[]), 0, &r(3, 5), &q).unwrap();
        // eta = eta~ = empty, both sides reduce to 1 - q^{-1}
        let expect = Exact::one() - q.powi(-1);
        assert_eq!(lhs, expect);
        assert_eq!(rhs, expect);
        assert!(check_reduction_lemma(2, &p(&[2]), &p(&[]), 1, &r(3, 5), &q).unwrap().pass);
        assert!(reduction_lemma_sides(7, &p(&[1]), &p(&[]), 0, &r(3, 5), &q).is_err());
        assert!(reduction_lemma_sides(1, &p(&[]), &p(&[]), 0, &r(3, 5), &q).is_err());
    }

    #[test]
    fn small_exact_sweep() {
        for rep in lemma_suite(3, 4, &r(2, 7), &r(3, 5), &r(5, 3)) {
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn singular_point_is_flagged() {
        // u = 1/q kills the 1 - qu denominator of the third identity
        let rep = lemma_suite(2, 2, &r(2, 7), &r(7, 2), &r(5, 3));
        let third = rep.iter().find(|r| r.identity == "reduction-3").unwrap();
        assert!(!third.pass);
        assert!(third.witness.as_deref().unwrap().contains("vanishes"));
    }

    #[test]
    fn float_table_matches_definition() {
        let q = C128::from_f64(0.3);
        let w = C128::new(0.4, 0.2);
        let pw = IntPowers::new(&q, 10);
        let nf = NekFactor::new(&w, &pw);
        for a in enumerate_upto(4) {
            for b in enumerate_upto(4) {
                let d = nekrasov(&a, &b, &w, &q);
                assert!(nf.eval(&a, &b).rel_diff(&d) < 1e-35);
            }
        }
        let int = NekFactor::new_int(-1, &pw);
        let qinv = C128::one() / q.clone();
        assert!(int.eval(&p(&[1]), &p(&[1])).is_zero());
        assert!(int.eval(&p(&[3, 1]), &p(&[2])).rel_diff(&nekrasov(&p(&[3, 1]), &p(&[2]), &qinv, &q)) < 1e-35);
        let small = NekFactor::new(&w, &IntPowers::new(&q, 1));
        let (a, b) = (p(&[4, 2]), p(&[3]));
        assert!(small.eval(&a, &b).rel_diff(&nekrasov(&a, &b, &w, &q)) < 1e-35);
    }

    // Lagrange interpolation through |λ|+|μ|+1 nodes predicts a further node
    // exactly only when the degree in w is at most |λ|+|μ|; the w^d coefficient
    // is nonzero so the degree is exact.
    #[test]
    fn degree_in_w() {
        let q = r(2, 7);
        for a in enumerate_upto(4) {
            for b in enumerate_upto(4) {
                let d = a.size() + b.size();
                let nodes: Vec<Exact> = (0..=d as i64 + 1).map(|k| r(k + 2, 3)).collect();
                let vals: Vec<Exact> = nodes.iter().map(|x| nekrasov(&a, &b, x, &q)).collect();
                let lag = |upto: usize, x: &Exact| -> Exact {
                    let mut s = Exact::from_i64(0);
                    for i in 0..upto {
                        let mut li = Exact::one();
                        for j in 0..upto {
                            if i != j {
                                li *= (x.clone() - &nodes[j]) / (nodes[i].clone() - &nodes[j]);
                            }
                        }
                        s += li * &vals[i];
                    }
                    s
                };
                assert_eq!(lag(d + 1, &nodes[d + 1]), vals[d + 1], "{a} {b}");
                if d > 0 {
                    assert_ne!(lag(d, &nodes[d]), vals[d], "{a} {b}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn rule1_random_rationals(i in 0usize..30, j in 0usize..30, wn in 1i64..40, wd in 1i64..40, qn in 1i64..9) {
            let parts = enumerate_upto(5);
            let (a, b) = (&parts[i % parts.len()], &parts[j % parts.len()]);
            let q = r(qn, 10);
            prop_assert!(check_rule1(a, b, &r(wn, wd), &q).pass);
            prop_assert!(check_transpose(a, b, &r(wn, wd), &q).pass);
        }
    }
}
