//! q-conformal block series, degenerate 4-point blocks, the braiding matrix
//! and the braiding identity for arbitrary partition matrix elements.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::nekrasov::{nekrasov, IntPowers, NekFactor};
use crate::partitions::{enumerate_upto, pairs_upto};
use crate::qspecial::{barnes_g_q, barnes_g_q_inv, gamma_q, heine_f, theta};
use crate::report::worst;
use crate::{Analytic, Error, Matrix2, Partition, PartitionPair, QContext, Report, Result, Sign};

/// Default truncation of the η-sums in the X and Y functions.
pub const DEFAULT_K_ETA: usize = 12;

/// Nearest integer to `e` when `e` is an integer up to rounding.
pub fn snap_integer<S: Analytic>(e: &S) -> Option<i64> {
    let n = e.re().round();
    if n.abs() < 1e15 && e.dist(&S::from_i64(n as i64)) <= 1e6 * S::epsilon() {
        Some(n as i64)
    } else {
        None
    }
}

/// True when `ϑ(u) = 0`, i.e. `u ∈ ℤ + (2πi / log q) ℤ` up to rounding.
pub fn theta_vanishes<S: Analytic>(u: &S, ctx: &QContext<S>) -> bool {
    let two_pi_i = S::pi() * S::from_i64(2) * S::imag_unit();
    let omega = two_pi_i / &ctx.log_q;
    let m = if omega.im().abs() > 0.0 { (u.im() / omega.im()).round() } else { 0.0 };
    let rest = u.clone() - omega * S::from_f64(m);
    snap_integer(&rest).is_some()
}

pub(crate) fn nek_factor<S: Analytic>(e: &S, ctx: &QContext<S>, pw: &IntPowers<S>) -> NekFactor<S> {
    match snap_integer(e) {
        Some(j) => NekFactor::new_int(j, pw),
        None => NekFactor::new(&ctx.qpow(e), pw),
    }
}

fn sign_of<S: Analytic>(s: Sign) -> S {
    S::from_i64(s.int())
}

/// `𝒩(θ3; θ2; θ1) = ∏_{ε,ε'} G_q(1+εθ3-θ2-ε'θ1) / (G_q(1+2θ3) G_q(1-2θ1))`.
pub fn normalization_n<S: Analytic>(theta3: &S, theta2: &S, theta1: &S, ctx: &QContext<S>) -> Result<S> {
    normalization_impl(theta3, theta2, theta1, ctx, false)
}

/// `𝒩'` for a degenerate middle field: the single vanishing `G_q(0)` factor is cancelled.
pub fn normalization_n_degenerate<S: Analytic>(theta3: &S, theta2: &S, theta1: &S, ctx: &QContext<S>) -> Result<S> {
    normalization_impl(theta3, theta2, theta1, ctx, true)
}

fn normalization_impl<S: Analytic>(t3: &S, t2: &S, t1: &S, ctx: &QContext<S>, degenerate: bool) -> Result<S> {
    let one = S::one();
    let mut num = S::one();
    let mut dropped = false;
    for e in Sign::BOTH {
        for ep in Sign::BOTH {
            let arg = one.clone() + e.apply(t3) - t2 - ep.apply(t1);
            if degenerate && !dropped && snap_integer(&arg) == Some(0) {
                dropped = true;
                continue;
            }
            num *= barnes_g_q(&arg, ctx);
        }
    }
    if degenerate && !dropped {
        return Err(Error::Invalid("degenerate normalization without a vanishing G_q factor".into()));
    }
    let two = S::from_i64(2);
    let d1 = barnes_g_q_inv(&(one.clone() + two.clone() * t3), ctx)?;
    let d2 = barnes_g_q_inv(&(one - two * t1), ctx)?;
    Ok(num * d1 * d2)
}

/// Internal data of an `m`-point block: `θ_0, …, θ_{m+1}` and `σ_1, …, σ_{m-1}`.
#[derive(Clone, Debug)]
pub struct BlockSpec<S> {
    pub thetas: Vec<S>,
    pub sigmas: Vec<S>,
    /// 1-based slots `p` whose field is the degenerate `V'` with `θ_p = ½`.
    pub degenerate: Vec<usize>,
}

impl<S: Analytic> BlockSpec<S> {
    pub fn new(thetas: Vec<S>, sigmas: Vec<S>) -> Result<Self> {
        if thetas.len() < 3 || thetas.len() != sigmas.len() + 3 {
            return Err(Error::Invalid(format!(
                "need m+2 thetas and m-1 sigmas, got {} and {}",
                thetas.len(),
                sigmas.len()
            )));
        }
        Ok(BlockSpec { thetas, sigmas, degenerate: Vec::new() })
    }

    /// Marks slot `p` as degenerate; needs `θ_p = ½` and `σ_p - σ_{p-1} = ±½`.
    pub fn with_degenerate(mut self, p: usize) -> Result<Self> {
        let m = self.m();
        if p == 0 || p > m {
            return Err(Error::Invalid(format!("degenerate slot {p} outside 1..={m}")));
        }
        let chain = self.sigma_chain();
        let half = S::half();
        let d = (chain[p].clone() - &chain[p - 1]) * S::from_i64(2);
        if self.thetas[p].dist(&half) > 1e6 * S::epsilon() || snap_integer(&d).map(|k| k.abs()) != Some(1) {
            return Err(Error::Invalid(format!("slot {p} is not a degenerate field")));
        }
        self.degenerate.push(p);
        self.degenerate.sort_unstable();
        self.degenerate.dedup();
        Ok(self)
    }

    /// Number of inserted primaries.
    pub fn m(&self) -> usize {
        self.thetas.len() - 2
    }

    /// `σ_0 = θ_0, σ_1, …, σ_{m-1}, σ_m = θ_{m+1}`.
    pub fn sigma_chain(&self) -> Vec<S> {
        let mut v = vec![self.thetas[0].clone()];
        v.extend(self.sigmas.iter().cloned());
        v.push(self.thetas[self.m() + 1].clone());
        v
    }
}

/// Truncated block series with coefficients grouped by the weights `(|λ^{(1)}|, …, |λ^{(m-1)}|)`.
///
/// The grouping lets one series be evaluated at many points `x` at the cost of a
/// polynomial evaluation.
#[derive(Clone, Debug)]
pub struct BlockSeries<S> {
    pub spec: BlockSpec<S>,
    pub weight_cap: usize,
    coeffs: Vec<(Vec<usize>, S)>,
    norm: S,
    x_exps: Vec<S>,
    ratio_q: Vec<S>,
}

type Factors<S> = [[NekFactor<S>; 2]; 2];

impl<S: Analytic> BlockSeries<S> {
    pub fn new(spec: BlockSpec<S>, ctx: &QContext<S>) -> Result<Self> {
        let m = spec.m();
        let k = ctx.weight_cap;
        let sig = spec.sigma_chain();
        let th = &spec.thetas;
        let two = S::from_i64(2);

        for p in 1..m {
            if let Some(j) = snap_integer(&(two.clone() * &sig[p])) {
                if j.unsigned_abs() as usize <= 2 * k {
                    return Err(Error::Resonance(format!("2 sigma_{p} = {j} is an integer")));
                }
            }
        }

        let mut norm = S::one();
        let mut x_exps = Vec::with_capacity(m);
        for p in 1..=m {
            let n = if spec.degenerate.contains(&p) {
                normalization_n_degenerate(&sig[p], &th[p], &sig[p - 1], ctx)?
            } else {
                normalization_n(&sig[p], &th[p], &sig[p - 1], ctx)?
            };
            norm *= n * ctx.qpow(&(two.clone() * &th[p] * &sig[p] * &sig[p]));
            x_exps.push(sig[p].clone() * &sig[p] - th[p].clone() * &th[p] - sig[p - 1].clone() * &sig[p - 1]);
        }
        let ratio_q = (1..m).map(|p| ctx.qpow(&(two.clone() * &th[p]))).collect();

        let pw = IntPowers::new(&ctx.q, 2 * k + 4);
        let num: Vec<Factors<S>> = (1..=m)
            .map(|p| {
                let f = |e: Sign, ep: Sign| {
                    let arg = e.apply(&sig[p]) - &th[p] - ep.apply(&sig[p - 1]);
                    nek_factor(&arg, ctx, &pw)
                };
                [[f(Sign::Plus, Sign::Plus), f(Sign::Plus, Sign::Minus)], [f(Sign::Minus, Sign::Plus), f(Sign::Minus, Sign::Minus)]]
            })
            .collect();
        let den: Vec<Factors<S>> = (1..=m)
            .map(|p| {
                let f = |e: Sign, ep: Sign| {
                    let arg = sign_of::<S>(e) * &sig[p] - sign_of::<S>(ep) * &sig[p];
                    nek_factor(&arg, ctx, &pw)
                };
                [[f(Sign::Plus, Sign::Plus), f(Sign::Plus, Sign::Minus)], [f(Sign::Minus, Sign::Plus), f(Sign::Minus, Sign::Minus)]]
            })
            .collect();

        let pairs = pairs_upto(k);
        let empty = PartitionPair { plus: Partition::empty(), minus: Partition::empty() };
        let coeffs = if m == 1 {
            vec![(Vec::new(), pair_product(&num[0], &empty, &empty))]
        } else {
            let walker = Walker { m, pairs: &pairs, num: &num, den: &den, empty: &empty };
            let parts: Vec<Result<BTreeMap<Vec<usize>, S>>> = pairs
                .par_iter()
                .map(|top| {
                    let mut out = BTreeMap::new();
                    let f = pair_product(&num[0], top, &empty);
                    if !f.is_zero() {
                        let d = walker.denominator(0, top)?;
                        let mut w = vec![top.size()];
                        walker.descend(2, top, k - top.size(), f / d, &mut w, &mut out)?;
                    }
                    Ok(out)
                })
                .collect();
            let mut total: BTreeMap<Vec<usize>, S> = BTreeMap::new();
            for part in parts {
                for (key, v) in part? {
                    let e = total.entry(key).or_insert_with(S::zero);
                    *e += v;
                }
            }
            total.into_iter().collect()
        };
        Ok(BlockSeries { spec, weight_cap: k, coeffs, norm, x_exps, ratio_q })
    }

    pub fn coefficients(&self) -> &[(Vec<usize>, S)] {
        &self.coeffs
    }

    /// `∏_p 𝒩 q^{2θ_pσ_p²} x_p^{σ_p²-θ_p²-σ_{p-1}²}`.
    pub fn prefactor(&self, xs: &[S]) -> Result<S> {
        self.check_xs(xs)?;
        let mut out = self.norm.clone();
        for (x, e) in xs.iter().zip(&self.x_exps) {
            out *= x.pow(e);
        }
        Ok(out)
    }

    /// Ratios `q^{2θ_p} x_p / x_{p+1}` weighting `λ^{(p)}`.
    pub fn ratios(&self, xs: &[S]) -> Result<Vec<S>> {
        self.check_xs(xs)?;
        Ok((0..self.spec.m() - 1).map(|p| self.ratio_q[p].clone() * &xs[p] / &xs[p + 1]).collect())
    }

    /// The truncated multi-partition sum without the prefactor.
    pub fn sum(&self, xs: &[S]) -> Result<S> {
        let r = self.ratios(xs)?;
        let k = self.weight_cap;
        let pows: Vec<Vec<S>> = r
            .iter()
            .map(|x| {
                let mut v = vec![S::one()];
                for i in 0..k {
                    let next = v[i].clone() * x;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut s = S::zero();
        for (w, c) in &self.coeffs {
            let mut t = c.clone();
            for (p, &wp) in w.iter().enumerate() {
                t *= &pows[p][wp];
            }
            s += t;
        }
        Ok(s)
    }

    pub fn eval(&self, xs: &[S]) -> Result<S> {
        Ok(self.prefactor(xs)? * self.sum(xs)?)
    }

    fn check_xs(&self, xs: &[S]) -> Result<()> {
        if xs.len() != self.spec.m() {
            return Err(Error::Invalid(format!("need {} points, got {}", self.spec.m(), xs.len())));
        }
        if xs.iter().any(|x| x.is_zero()) {
            return Err(Error::Domain("block at x = 0".into()));
        }
        Ok(())
    }
}

fn pair_product<S: Analytic>(f: &Factors<S>, cur: &PartitionPair, prev: &PartitionPair) -> S {
    let mut out = S::one();
    for e in Sign::BOTH {
        for ep in Sign::BOTH {
            out *= f[e.idx()][ep.idx()].eval(cur.get(e), prev.get(ep));
            if out.is_zero() {
                return out;
            }
        }
    }
    out
}

struct Walker<'a, S> {
    m: usize,
    pairs: &'a [PartitionPair],
    num: &'a [Factors<S>],
    den: &'a [Factors<S>],
    empty: &'a PartitionPair,
}

impl<S: Analytic> Walker<'_, S> {
    fn denominator(&self, level: usize, lam: &PartitionPair) -> Result<S> {
        let d = pair_product(&self.den[level], lam, lam);
        if d.is_zero() {
            return Err(Error::Resonance(format!("Nekrasov denominator vanishes at level {} for {lam:?}", level + 1)));
        }
        Ok(d)
    }

    fn descend(
        &self,
        p: usize,
        prev: &PartitionPair,
        wleft: usize,
        acc: S,
        weights: &mut Vec<usize>,
        out: &mut BTreeMap<Vec<usize>, S>,
    ) -> Result<()> {
        if p == self.m {
            let f = acc * pair_product(&self.num[p - 1], self.empty, prev);
            let e = out.entry(weights.clone()).or_insert_with(S::zero);
            *e += f;
            return Ok(());
        }
        for lam in self.pairs {
            let w = lam.size();
            if w > wleft {
                break;
            }
            let f = pair_product(&self.num[p - 1], lam, prev);
            if f.is_zero() {
                continue;
            }
            let d = self.denominator(p - 1, lam)?;
            weights.push(w);
            self.descend(p + 1, lam, wleft - w, acc.clone() * f / d, weights, out)?;
            weights.pop();
        }
        Ok(())
    }
}

/// Full block `𝓕` at points `x_1, …, x_m`, truncated at the context weight cap.
pub fn conformal_block<S: Analytic>(spec: BlockSpec<S>, xs: &[S], ctx: &QContext<S>) -> Result<S> {
    BlockSeries::new(spec, ctx)?.eval(xs)
}

/// Which of the two degenerate 4-point blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `V'` next to `θ∞`: the intermediate weight is `θ∞ + ε'/2`.
    Left,
    /// `V'` next to `θ0`: the intermediate weight is `θ0 + ε/2`.
    Right,
}

fn degenerate_ncal<S: Analytic>(ti: &S, t1: &S, t0: &S, x1: &S, x2: &S, ctx: &QContext<S>) -> Result<S> {
    let half = S::half();
    let two = S::from_i64(2);
    let one = S::one();
    let mut g = S::one();
    for mu in Sign::BOTH {
        for mup in Sign::BOTH {
            g *= barnes_g_q(&(half.clone() + mu.apply(ti) - t1 + mup.apply(t0)), ctx);
        }
    }
    g *= barnes_g_q_inv(&(one.clone() + two.clone() * ti), ctx)?;
    g *= barnes_g_q_inv(&(one - two.clone() * t0), ctx)?;
    let pre = ctx.qpow(&(two * t1 * ti * ti))
        * x1.pow(&S::from_ratio(-1, 4))
        * x2.pow(&(ti.clone() * ti - t1.clone() * t1 - t0.clone() * t0));
    Ok(pre * g)
}


/// Closed form of a degenerate 4-point block through Heine's `F`, summed to the context weight cap.
///
/// `sign` is `ε'` for [`Side::Left`] and `ε` for [`Side::Right`].
#[allow(clippy::too_many_arguments)]
pub fn degenerate_block_4pt<S: Analytic>(
    side: Side,
    sign: Sign,
    theta_inf: &S,
    theta1: &S,
    theta0: &S,
    x1: &S,
    x2: &S,
    ctx: &QContext<S>,
) -> Result<S> {
    let (ti, t1, t0) = (theta_inf, theta1, theta0);
    let half = S::half();
    let two = S::from_i64(2);
    let quarter = S::from_ratio(1, 4);
    let (r, lead, e) = match side {
        Side::Left => (ctx.qpow(&(two.clone() * t1)) * x2 / x1, ctx.qpow(&(ti.clone() * ti)), sign.apply(ti)),
        Side::Right => (ctx.q.clone() * x1 / x2, ctx.qpow(&(t0.clone() * t0)), sign.apply(t0)),
    };
    if !(r.abs() < 1.0) {
        return Err(Error::Domain(format!("degenerate block needs |ratio| < 1, got {}", r.abs())));
    }
    let (a, b) = match side {
        Side::Left => (half.clone() + &e - t1 + t0, half + &e - t1 - t0),
        Side::Right => (half.clone() + ti - t1 + &e, half - ti - t1 + &e),
    };
    let c = S::one() + two * &e;
    let f = heine_f(&a, &b, &c, &r, ctx, ctx.weight_cap)?;
    let ncal = degenerate_ncal(ti, t1, t0, x1, x2, ctx)?;
    Ok(ncal * lead * r.pow(&(e + quarter)) * f)
}

/// The same degenerate 4-point block as a series over partitions.
#[allow(clippy::too_many_arguments)]
pub fn degenerate_block_4pt_series<S: Analytic>(
    side: Side,
    sign: Sign,
    theta_inf: &S,
    theta1: &S,
    theta0: &S,
    x1: &S,
    x2: &S,
    ctx: &QContext<S>,
) -> Result<S> {
    let half = S::half();
    let (ti, t1, t0) = (theta_inf.clone(), theta1.clone(), theta0.clone());
    let (spec, xs) = match side {
        Side::Left => {
            let s = ti.clone() + sign.apply(&half);
            let spec = BlockSpec::new(vec![t0, t1, half, ti], vec![s])?.with_degenerate(2)?;
            (spec, [x2.clone(), x1.clone()])
        }
        Side::Right => {
            let s = t0.clone() + sign.apply(&half);
            let spec = BlockSpec::new(vec![t0, half, t1, ti], vec![s])?.with_degenerate(1)?;
            (spec, [x1.clone(), x2.clone()])
        }
    };
    conformal_block(spec, &xs, ctx)
}

/// `ℬ_{ε,ε'} = -ε ϑ(½+ε'θ∞+θ1-εθ0)/ϑ(2θ0) · ϑ(½+ε'θ∞+θ1+εθ0+u)/ϑ(2θ1+u)` with `x = q^u`.
pub fn braiding_matrix_u<S: Analytic>(theta1: &S, theta_inf: &S, theta0: &S, u: &S, ctx: &QContext<S>) -> Result<Matrix2<S>> {
    let two = S::from_i64(2);
    let d0 = two.clone() * theta0;
    let d1 = two * theta1 + u;
    for (name, v) in [("2 theta0", &d0), ("2 theta1 + u", &d1)] {
        if theta_vanishes(v, ctx) {
            return Err(Error::Resonance(format!("theta({name}) = 0")));
        }
    }
    let den = theta(&d0, ctx) * theta(&d1, ctx);
    let half = S::half();
    Ok(Matrix2::from_fn(|e, ep| {
        let base = half.clone() + ep.apply(theta_inf) + theta1;
        let a = theta(&(base.clone() - e.apply(theta0)), ctx);
        let b = theta(&(base + e.apply(theta0) + u), ctx);
        -e.apply(&(a * b / &den))
    }))
}

/// `ℬ[θ1; θ∞, θ0 | x]` with `u = log_q x` on the principal branch.
pub fn braiding_matrix<S: Analytic>(theta1: &S, theta_inf: &S, theta0: &S, x: &S, ctx: &QContext<S>) -> Result<Matrix2<S>> {
    if x.is_zero() {
        return Err(Error::Domain("braiding matrix at x = 0".into()));
    }
    braiding_matrix_u(theta1, theta_inf, theta0, &ctx.log_base(x), ctx)
}

/// Relative residuals of the braiding-matrix properties at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct BraidResiduals {
    pub q_periodicity: f64,
    pub inverse: f64,
    pub determinant: f64,
    pub period_theta0: f64,
    pub period_theta1: f64,
    pub period_theta_inf: f64,
}

impl BraidResiduals {
    pub fn labelled(&self) -> [(&'static str, f64); 6] {
        [
            ("q-periodicity", self.q_periodicity),
            ("inverse", self.inverse),
            ("determinant", self.determinant),
            ("period-theta0", self.period_theta0),
            ("period-theta1", self.period_theta1),
            ("period-theta-inf", self.period_theta_inf),
        ]
    }
}

pub fn braiding_properties<S: Analytic>(theta1: &S, theta_inf: &S, theta0: &S, u: &S, ctx: &QContext<S>) -> Result<BraidResiduals> {
    let one = S::one();
    let two = S::from_i64(2);
    let b = braiding_matrix_u(theta1, theta_inf, theta0, u, ctx)?;
    let shifted = braiding_matrix_u(theta1, theta_inf, theta0, &(u.clone() + &one), ctx)?;
    let inv = b.inverse()?;
    let dual = braiding_matrix_u(theta1, theta0, theta_inf, &(-(two.clone() * theta1) - u), ctx)?;
    let det = theta(&(two.clone() * theta_inf), ctx) * theta(u, ctx)
        / (theta(&(two.clone() * theta0), ctx) * theta(&(u.clone() + two * theta1), ctx));
    let p0 = braiding_matrix_u(theta1, theta_inf, &(theta0.clone() + &one), u, ctx)?;
    let p1 = braiding_matrix_u(&(theta1.clone() + &one), theta_inf, theta0, u, ctx)?;
    let pi = braiding_matrix_u(theta1, &(theta_inf.clone() + &one), theta0, u, ctx)?;
    Ok(BraidResiduals {
        q_periodicity: shifted.rel_diff(&b),
        inverse: inv.rel_diff(&dual),
        determinant: b.det().rel_diff(&det),
        period_theta0: p0.rel_diff(&b),
        period_theta1: p1.rel_diff(&b),
        period_theta_inf: pi.rel_diff(&b),
    })
}

/// Braiding-matrix properties at `points` seeded pseudo-random generic points.
pub fn braiding_property_report<S: Analytic>(points: usize, seed: u64, ctx: &QContext<S>) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two = S::from_i64(2);
    let mut all: Vec<(String, f64)> = Vec::new();
    let mut drawn = 0;
    while drawn < points {
        let t1 = S::from_f64(rng.gen_range(0.05..0.45));
        let ti = S::from_f64(rng.gen_range(0.05..0.45));
        let t0 = S::from_f64(rng.gen_range(0.05..0.45));
        let u = S::from_c64(rng.gen_range(-0.95..0.95), rng.gen_range(-0.3..0.3));
        let generic = [two.clone() * &t0, two.clone() * &ti, two.clone() * &t1 + &u, u.clone()]
            .iter()
            .all(|v| (v.re() - v.re().round()).abs() >= 0.05 || v.im().abs() >= 0.05);
        if !generic {
            continue;
        }
        let r = braiding_properties(&t1, &ti, &t0, &u, ctx)?;
        for (k, v) in r.labelled() {
            all.push((format!("{k} at point {drawn}"), v));
        }
        drawn += 1;
    }
    let (label, res) = worst(all.iter().map(|(k, v)| (k.as_str(), *v)));
    Ok(Report::numeric("braiding-matrix-properties", points, res, 1e-20)
        .param("q", ctx.q.to_decimal().0)
        .param("seed", seed)
        .witness(label))
}

/// Degenerate 4-point blocks: series against closed form for both sides and both signs.
pub fn degenerate_block_report<S: Analytic>(
    theta_inf: &S,
    theta1: &S,
    theta0: &S,
    left: (&S, &S),
    right: (&S, &S),
    ctx: &QContext<S>,
) -> Result<Report> {
    let mut all = Vec::new();
    for side in [Side::Left, Side::Right] {
        let (x1, x2) = if side == Side::Left { left } else { right };
        for s in Sign::BOTH {
            let a = degenerate_block_4pt(side, s, theta_inf, theta1, theta0, x1, x2, ctx)?;
            let b = degenerate_block_4pt_series(side, s, theta_inf, theta1, theta0, x1, x2, ctx)?;
            all.push((format!("{side:?} {s}"), a.rel_diff(&b)));
        }
    }
    let (label, res) = worst(all.iter().map(|(k, v)| (k.as_str(), *v)));
    Ok(Report::numeric("degenerate-4pt-blocks", all.len(), res, 1e-20)
        .param("q", ctx.q.to_decimal().0)
        .param("theta_inf", theta_inf.to_decimal().0)
        .param("theta1", theta1.to_decimal().0)
        .param("theta0", theta0.to_decimal().0)
        .trunc("K", ctx.weight_cap as u64)
        .witness(label))
}

/// Partitions `(λ, μ, α, β)` labelling a matrix element of the braiding relation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Quad {
    pub lambda: Partition,
    pub mu: Partition,
    pub alpha: Partition,
    pub beta: Partition,
}

impl Quad {
    pub fn new(lambda: &[usize], mu: &[usize], alpha: &[usize], beta: &[usize]) -> Self {
        Quad {
            lambda: Partition::from_slice(lambda),
            mu: Partition::from_slice(mu),
            alpha: Partition::from_slice(alpha),
            beta: Partition::from_slice(beta),
        }
    }

    pub fn vacuum() -> Self {
        Quad::new(&[], &[], &[], &[])
    }

    pub fn size(&self) -> usize {
        self.lambda.size() + self.mu.size() + self.alpha.size() + self.beta.size()
    }

    /// All quadruples of total weight at most `w`, by weight.
    pub fn all_upto(w: usize) -> Vec<Quad> {
        let parts = enumerate_upto(w);
        let mut out = Vec::new();
        for total in 0..=w {
            for l in &parts {
                for m in &parts {
                    for a in &parts {
                        for b in &parts {
                            if l.size() + m.size() + a.size() + b.size() == total {
                                out.push(Quad { lambda: l.clone(), mu: m.clone(), alpha: a.clone(), beta: b.clone() });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

impl std::fmt::Display for Quad {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "lambda={} mu={} alpha={} beta={}", self.lambda, self.mu, self.alpha, self.beta)
    }
}

/// Parameters `(θ∞, θ1, σ; x1, x2)` of the braiding relation.
#[derive(Clone, Debug)]
pub struct BraidParams<S> {
    pub theta_inf: S,
    pub theta1: S,
    pub sigma: S,
    pub x1: S,
    pub x2: S,
}

impl<S: Analytic> BraidParams<S> {
    fn with(&self, theta1: S, sigma: S, x1: S) -> Self {
        BraidParams { theta_inf: self.theta_inf.clone(), theta1, sigma, x1, x2: self.x2.clone() }
    }
}

/// The partitions `(r_n(α'))'` with `|η| ≤ k`: the only `η` with `N_{α,η}(q^{-1}) ≠ 0`.
fn eta_dual(alpha: &Partition, k: usize) -> Vec<Partition> {
    let ac = alpha.conjugate();
    (0..=k).map(|n| ac.r(n).conjugate()).filter(|e| e.size() <= k).collect()
}

/// The partitions `r_n(μ)` with `|η| ≤ k`: the only `η` with `N_{η,μ}(q^{-1}) ≠ 0`.
fn eta_direct(mu: &Partition, k: usize) -> Vec<Partition> {
    (0..=k).map(|n| mu.r(n)).filter(|e| e.size() <= k).collect()
}

fn nonzero<S: Analytic>(v: S, what: &str) -> Result<S> {
    if v.is_zero() {
        Err(Error::Resonance(format!("{what} vanishes")))
    } else {
        Ok(v)
    }
}

#[allow(clippy::too_many_arguments)]
fn x_plus<S: Analytic>(
    l: &Partition,
    m: &Partition,
    a: &Partition,
    b: &Partition,
    ti: &S,
    t1: &S,
    sg: &S,
    x1: &S,
    x2: &S,
    ctx: &QContext<S>,
    k_eta: usize,
) -> Result<S> {
    let q = &ctx.q;
    let half = S::half();
    let two = S::from_i64(2);
    let one = S::one();
    let nek = |p: &Partition, r: &Partition, e: &S| nekrasov(p, r, &ctx.qpow(e), q);
    let base = -(ti.clone()) - &half - t1;
    let pre = nek(a, b, &(two.clone() * ti)) * nek(b, l, &(base.clone() - sg)) * nek(b, m, &(base + sg));
    let qinv = one.clone() / q.clone();
    let r2 = ctx.qpow(&(two.clone() * t1)) * x2 / x1;
    let lm = (l.size() + m.size()) as i64;
    let ab = (a.size() + b.size()) as i64;
    let outer = (one.clone() / x2.clone()).powi(lm) * (q.clone() * x1).powi(ab);
    let w_l = ctx.qpow(&(ti.clone() + &half - t1 - sg));
    let w_m = ctx.qpow(&(ti.clone() + &half - t1 + sg));
    let w_b = ctx.qpow(&(two * ti + &one));
    let mut sum = S::zero();
    for eta in eta_dual(a, k_eta) {
        let d = nonzero(nekrasov(&eta, b, &w_b, q), "N_{eta,beta}(q^{2 theta_inf + 1})")?
            * nonzero(nekrasov(&eta, &eta, &one, q), "N_{eta,eta}(1)")?;
        let n = nekrasov(a, &eta, &qinv, q) * nekrasov(&eta, l, &w_l, q) * nekrasov(&eta, m, &w_m, q);
        sum += r2.powi((eta.size() + b.size()) as i64) * n / d;
    }
    Ok(pre * outer * sum)
}

#[allow(clippy::too_many_arguments)]
fn y_plus<S: Analytic>(
    l: &Partition,
    m: &Partition,
    a: &Partition,
    b: &Partition,
    ti: &S,
    t1: &S,
    sg: &S,
    x1: &S,
    x2: &S,
    ctx: &QContext<S>,
    k_eta: usize,
) -> Result<S> {
    let q = &ctx.q;
    let half = S::half();
    let two = S::from_i64(2);
    let one = S::one();
    let nek = |p: &Partition, r: &Partition, e: &S| nekrasov(p, r, &ctx.qpow(e), q);
    let base = -(t1.clone()) - sg - &half;
    let pre = nek(l, m, &(two.clone() * sg)) * nek(a, l, &(base.clone() + ti)) * nek(b, l, &(base - ti));
    let qinv = one.clone() / q.clone();
    let r = q.clone() * x1 / x2;
    let lm = (l.size() + m.size()) as i64;
    let ab = (a.size() + b.size()) as i64;
    let outer = (one.clone() / x1.clone()).powi(lm) * (ctx.qpow(&(two.clone() * t1)) * x2).powi(ab);
    let w_a = ctx.qpow(&(ti.clone() - t1 + sg + &half));
    let w_b = ctx.qpow(&(-(ti.clone()) - t1 + sg + &half));
    let w_l = ctx.qpow(&(two * sg + &one));
    let mut sum = S::zero();
    for eta in eta_direct(m, k_eta) {
        let d = nonzero(nekrasov(l, &eta, &w_l, q), "N_{lambda,eta}(q^{2 sigma + 1})")?
            * nonzero(nekrasov(&eta, &eta, &one, q), "N_{eta,eta}(1)")?;
        let n = nekrasov(&eta, m, &qinv, q) * nekrasov(a, &eta, &w_a, q) * nekrasov(b, &eta, &w_b, q);
        sum += r.powi((l.size() + eta.size()) as i64) * n / d;
    }
    Ok(pre * outer * sum)
}

/// `X^{ε'}_{λ,μ,α,β}(θ∞, θ1, σ; x1, x2)` with the η-sum cut at `|η| ≤ k_eta`.
pub fn x_func<S: Analytic>(sign: Sign, quad: &Quad, p: &BraidParams<S>, ctx: &QContext<S>, k_eta: usize) -> Result<S> {
    let Quad { lambda, mu, alpha, beta } = quad;
    match sign {
        Sign::Plus => x_plus(lambda, mu, alpha, beta, &p.theta_inf, &p.theta1, &p.sigma, &p.x1, &p.x2, ctx, k_eta),
        Sign::Minus => x_plus(lambda, mu, beta, alpha, &-p.theta_inf.clone(), &p.theta1, &p.sigma, &p.x1, &p.x2, ctx, k_eta),
    }
}

/// `Y^{ε}_{λ,μ,α,β}(θ∞, θ1, σ; x1, x2)` with the η-sum cut at `|η| ≤ k_eta`.
pub fn y_func<S: Analytic>(sign: Sign, quad: &Quad, p: &BraidParams<S>, ctx: &QContext<S>, k_eta: usize) -> Result<S> {
    let Quad { lambda, mu, alpha, beta } = quad;
    match sign {
        Sign::Plus => y_plus(lambda, mu, alpha, beta, &p.theta_inf, &p.theta1, &p.sigma, &p.x1, &p.x2, ctx, k_eta),
        Sign::Minus => y_plus(mu, lambda, alpha, beta, &p.theta_inf, &p.theta1, &-p.sigma.clone(), &p.x1, &p.x2, ctx, k_eta),
    }
}

/// Both sides of the braiding relation for one `ε'`.
pub fn braiding_identity_sides<S: Analytic>(
    sign: Sign,
    quad: &Quad,
    p: &BraidParams<S>,
    ctx: &QContext<S>,
    k_eta: usize,
) -> Result<(S, S)> {
    let BraidParams { theta_inf: ti, theta1: t1, sigma: sg, x1, x2 } = p;
    let half = S::half();
    let quarter = S::from_ratio(1, 4);
    let two = S::from_i64(2);
    let one = S::one();
    let e_ti = sign.apply(ti);
    let ratio_l = ctx.qpow(&(two.clone() * t1)) * x2 / x1;
    let lhs = ctx.qpow(&(ti.clone() * ti))
        * ratio_l.pow(&(e_ti.clone() + &quarter))
        * gamma_q(&(half.clone() + &e_ti - t1 + sg), ctx)?
        * gamma_q(&(half.clone() + &e_ti - t1 - sg), ctx)?
        / gamma_q(&(one.clone() + two.clone() * &e_ti), ctx)?
        * x_func(sign, quad, p, ctx, k_eta)?;

    let u = ctx.log_base(&(x2.clone() / x1));
    let b = braiding_matrix_u(t1, ti, sg, &u, ctx)?;
    let ratio_r = ctx.q.clone() * x1 / x2;
    let tail = ctx.qpow(&(t1.clone() * t1 - t1.clone() * &half)) * (x2.clone() / x1).pow(t1);
    let mut rhs = S::zero();
    for e in Sign::BOTH {
        let e_sg = e.apply(sg);
        rhs += ctx.qpow(&(sg.clone() * sg))
            * ratio_r.pow(&(e_sg.clone() + &quarter))
            * gamma_q(&(half.clone() + ti - t1 + &e_sg), ctx)?
            * gamma_q(&(half.clone() - ti - t1 + &e_sg), ctx)?
            / gamma_q(&(one.clone() + two.clone() * &e_sg), ctx)?
            * y_func(e, quad, p, ctx, k_eta)?
            * &b[(e, sign)];
    }
    Ok((lhs, rhs * tail))
}

/// `max_{ε'} |LHS - RHS| / max(|LHS|, |RHS|)` of the braiding relation.
pub fn braiding_identity_residual<S: Analytic>(quad: &Quad, p: &BraidParams<S>, ctx: &QContext<S>, k_eta: usize) -> Result<f64> {
    braiding_identity_residual_for(&Sign::BOTH, quad, p, ctx, k_eta)
}

/// As [`braiding_identity_residual`], over the given values of `ε'` only.
pub fn braiding_identity_residual_for<S: Analytic>(
    signs: &[Sign],
    quad: &Quad,
    p: &BraidParams<S>,
    ctx: &QContext<S>,
    k_eta: usize,
) -> Result<f64> {
    let mut out = 0.0f64;
    for &s in signs {
        let (l, r) = braiding_identity_sides(s, quad, p, ctx, k_eta)?;
        let res = l.rel_diff(&r);
        if res.is_nan() {
            return Ok(f64::NAN);
        }
        out = out.max(res);
    }
    Ok(out)
}

/// The prefactor `C` of the λ-reduction operators.
pub fn reduction_c<S: Analytic>(quad: &Quad, p: &BraidParams<S>, ctx: &QContext<S>) -> S {
    let len = quad.lambda.len();
    let li = len as i64;
    let half = S::half();
    let one = S::one();
    let base = -(p.theta1.clone()) - &p.sigma;
    let mut c = S::one();
    for (part, s) in [(&quad.alpha, Sign::Plus), (&quad.beta, Sign::Minus)] {
        let b = s.apply(&p.theta_inf) + &base;
        for j in 1..=part.part(len) {
            let jj = S::from_i64(j as i64);
            c *= one.clone() - ctx.qpow(&(jj.clone() + &b - &half));
            c /= one.clone() - ctx.qpow(&(S::from_i64(-part.leg(len, j)) + jj + &b - S::from_ratio(3, 2)));
        }
        for i in 1..len {
            c *= one.clone() - ctx.qpow(&(S::from_i64((len - i) as i64 + part.arm(i, 1)) + &b + &half));
        }
    }
    c * ctx.qpowi(li - (quad.alpha.size() + quad.beta.size()) as i64) * p.x2.powi(-li)
}

/// Residuals of the λ-reduction identities for `X^+`, `X^-`, `Y^+`, `Y^-`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionResiduals {
    pub x_plus: f64,
    pub x_minus: f64,
    pub y_plus: f64,
    pub y_minus: f64,
}

impl ReductionResiduals {
    pub fn max(&self) -> f64 {
        worst([("", self.x_plus), ("", self.x_minus), ("", self.y_plus), ("", self.y_minus)]).1
    }
}

/// Each reduction identity evaluated on both sides.
///
/// The reduced side uses `(λ̄, θ1+½, σ+½)` and a q-shift of `x1`. The `Y^-` reduced
/// sum is cut at `k_eta - ℓ(λ) + 1`, which matches the η-range of the direct side.
pub fn reduction_sides<S: Analytic>(
    quad: &Quad,
    p: &BraidParams<S>,
    ctx: &QContext<S>,
    k_eta: usize,
) -> Result<[(S, S); 4]> {
    if quad.lambda.is_empty() {
        return Err(Error::Invalid("reduction needs a nonempty lambda".into()));
    }
    let len = quad.lambda.len() as i64;
    let half = S::half();
    let one = S::one();
    let two = S::from_i64(2);
    let (ti, t1, sg, x1, x2) = (&p.theta_inf, &p.theta1, &p.sigma, &p.x1, &p.x2);
    let c = reduction_c(quad, p, ctx);
    let red = Quad { lambda: quad.lambda.bar(), ..quad.clone() };
    let t1h = t1.clone() + &half;
    let sgh = sg.clone() + &half;
    let at = |x: S| p.with(t1h.clone(), sgh.clone(), x);
    let qx1 = ctx.q.clone() * x1;
    let ll = S::from_i64(len);

    let mut xs = Vec::new();
    for s in Sign::BOTH {
        let e_ti = s.apply(ti);
        let direct = x_func(s, quad, p, ctx, k_eta)?;
        let f0 = x_func(s, &red, &at(x1.clone()), ctx, k_eta)?;
        let f1 = x_func(s, &red, &at(qx1.clone()), ctx, k_eta)?;
        let shift = ctx.qpow(&(-ll.clone() - &e_ti + t1 + sg + &half));
        let reduced = c.clone()
            * (one.clone() - ctx.qpow(&(-(e_ti.clone()) - t1 - sg - &half)))
            * ctx.qpow(&(e_ti - t1 - sg - &half))
            * (shift * f1 - f0);
        xs.push((direct, reduced));
    }

    let direct = y_func(Sign::Plus, quad, p, ctx, k_eta)?;
    let f0 = y_func(Sign::Plus, &red, &at(x1.clone()), ctx, k_eta)?;
    let f1 = y_func(Sign::Plus, &red, &at(qx1.clone()), ctx, k_eta)?;
    let den = nonzero(one.clone() - ctx.qpow(&(two.clone() * sg + &one)), "1 - q^{2 sigma + 1}")?;
    let yp = c.clone()
        * (one.clone() - ctx.qpow(&(ti.clone() - t1 - sg - &half)))
        * (one.clone() - ctx.qpow(&(-(ti.clone()) - t1 - sg - &half)))
        / den
        * (f0 - ctx.qpow(&(-ll.clone() + &one + two.clone() * sg)) * f1);

    let k_red = (k_eta + 1).saturating_sub(len as usize);
    let direct_m = y_func(Sign::Minus, quad, p, ctx, k_eta)?;
    let f0 = y_func(Sign::Minus, &red, &at(x1.clone()), ctx, k_red)?;
    let f1 = y_func(Sign::Minus, &red, &at(qx1), ctx, k_red)?;
    let ym = c
        * (one.clone() - ctx.qpow(&(-(two * sg))))
        * ctx.qpowi(-1)
        * (x2.clone() / x1)
        * (f0 - ctx.qpowi(-len) * f1);

    let [xp, xm]: [(S, S); 2] = xs.try_into().expect("two signs");
    Ok([xp, xm, (direct, yp), (direct_m, ym)])
}

pub fn reduction_residuals<S: Analytic>(quad: &Quad, p: &BraidParams<S>, ctx: &QContext<S>, k_eta: usize) -> Result<ReductionResiduals> {
    let [a, b, c, d] = reduction_sides(quad, p, ctx, k_eta)?;
    Ok(ReductionResiduals {
        x_plus: a.0.rel_diff(&a.1),
        x_minus: b.0.rel_diff(&b.1),
        y_plus: c.0.rel_diff(&c.1),
        y_minus: d.0.rel_diff(&d.1),
    })
}

pub fn check_lemma_reduction<S: Analytic>(quad: &Quad, p: &BraidParams<S>, ctx: &QContext<S>, k_eta: usize, tol: f64) -> Result<Report> {
    let r = reduction_residuals(quad, p, ctx, k_eta)?;
    let labelled = [("X+", r.x_plus), ("X-", r.x_minus), ("Y+", r.y_plus), ("Y-", r.y_minus)];
    let (label, res) = worst(labelled);
    Ok(Report::numeric("lambda-reduction", 4, res, tol).witness(format!("{quad} {label}")).trunc("K_eta", k_eta as u64))
}

fn braid_params_strings<S: Analytic>(p: &BraidParams<S>) -> String {
    format!(
        "theta_inf={} theta1={} sigma={} x1={} x2={}",
        p.theta_inf.to_decimal().0,
        p.theta1.to_decimal().0,
        p.sigma.to_decimal().0,
        p.x1.to_decimal().0,
        p.x2.to_decimal().0
    )
}

/// Braiding relation over all quadruples of weight `≤ max_weight` at each parameter point.
///
/// Every point carries its own base `q`; the context supplies the product cutoff.
pub fn braiding_identity_suite<S: Analytic>(
    signs: &[Sign],
    max_weight: usize,
    points: &[(QContext<S>, BraidParams<S>)],
    k_eta: usize,
    tol: f64,
) -> Report {
    let quads = Quad::all_upto(max_weight);
    let jobs: Vec<(usize, &Quad)> = (0..points.len()).flat_map(|i| quads.iter().map(move |q| (i, q))).collect();
    let res: Vec<(String, f64)> = jobs
        .par_iter()
        .map(|(i, quad)| {
            let (ctx, p) = &points[*i];
            let label = format!("point {i} {quad}");
            match braiding_identity_residual_for(signs, quad, p, ctx, k_eta) {
                Ok(r) => (label, r),
                Err(e) => (format!("{label}: {e}"), f64::NAN),
            }
        })
        .collect();
    let (label, r) = worst(res.iter().map(|(k, v)| (k.as_str(), *v)));
    let eps: Vec<String> = signs.iter().map(|s| s.to_string()).collect();
    let mut rep = Report::numeric("braiding-relation", res.len() * signs.len(), r, tol)
        .param("eps_prime", eps.join(","))
        .trunc("K_eta", k_eta as u64)
        .trunc("max_weight", max_weight as u64)
        .witness(label);
    for (i, (ctx, p)) in points.iter().enumerate() {
        rep = rep.param(&format!("point{i}"), format!("q={} {}", ctx.q.to_decimal().0, braid_params_strings(p)));
    }
    rep
}

/// Reduction identities for every quadruple of weight `≤ max_weight` with `1 ≤ |λ| ≤ max_lambda`.
pub fn reduction_suite<S: Analytic>(
    max_weight: usize,
    max_lambda: usize,
    points: &[(QContext<S>, BraidParams<S>)],
    k_eta: usize,
    tol: f64,
) -> Report {
    let quads: Vec<Quad> = Quad::all_upto(max_weight)
        .into_iter()
        .filter(|q| !q.lambda.is_empty() && q.lambda.size() <= max_lambda)
        .collect();
    let jobs: Vec<(usize, &Quad)> = (0..points.len()).flat_map(|i| quads.iter().map(move |q| (i, q))).collect();
    let res: Vec<(String, f64)> = jobs
        .par_iter()
        .map(|(i, quad)| {
            let (ctx, p) = &points[*i];
            let label = format!("point {i} {quad}");
            match reduction_residuals(quad, p, ctx, k_eta) {
                Ok(r) => (label, r.max()),
                Err(e) => (format!("{label}: {e}"), f64::NAN),
            }
        })
        .collect();
    let (label, r) = worst(res.iter().map(|(k, v)| (k.as_str(), *v)));
    let mut rep = Report::numeric("lambda-reduction", res.len() * 4, r, tol)
        .trunc("K_eta", k_eta as u64)
        .trunc("max_weight", max_weight as u64)
        .trunc("max_lambda", max_lambda as u64)
        .witness(label);
    for (i, (ctx, p)) in points.iter().enumerate() {
        rep = rep.param(&format!("point{i}"), format!("q={} {}", ctx.q.to_decimal().0, braid_params_strings(p)));
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Scalar, C128};
    use num_traits::{One, Zero};

    fn c(x: f64) -> C128 {
        C128::from_f64(x)
    }

    fn d(s: &str) -> C128 {
        C128::parse(s).unwrap()
    }

    fn ctx(q: &str, k: usize) -> QContext<C128> {
        QContext::new(d(q)).unwrap().with_weight_cap(k)
    }

    // every tuple of pairs enumerated separately, factors straight from the definition
    fn literal_block(thetas: &[C128], sigmas: &[C128], xs: &[C128], ctx: &QContext<C128>, degenerate: &[usize]) -> C128 {
        let m = xs.len();
        let mut sig = vec![thetas[0].clone()];
        sig.extend(sigmas.iter().cloned());
        sig.push(thetas[m + 1].clone());
        let mut pre = C128::one();
        for p in 1..=m {
            let n = if degenerate.contains(&p) {
                normalization_n_degenerate(&sig[p], &thetas[p], &sig[p - 1], ctx).unwrap()
            } else {
                normalization_n(&sig[p], &thetas[p], &sig[p - 1], ctx).unwrap()
            };
            pre *= n * ctx.qpow(&(c(2.0) * &thetas[p] * &sig[p] * &sig[p]));
            pre *= xs[p - 1].pow(&(sig[p].clone() * &sig[p] - thetas[p].clone() * &thetas[p] - sig[p - 1].clone() * &sig[p - 1]));
        }
        let pairs = pairs_upto(ctx.weight_cap);
        let empty = PartitionPair { plus: Partition::empty(), minus: Partition::empty() };
        let q = &ctx.q;
        let arg = |e: Sign, ep: Sign, p: usize| {
            let x = e.apply(&sig[p]) - &thetas[p] - ep.apply(&sig[p - 1]);
            match snap_integer(&x) {
                Some(j) => ctx.qpowi(j),
                None => ctx.qpow(&x),
            }
        };
        let mut total = C128::zero();
        let mut stack: Vec<Vec<PartitionPair>> = vec![vec![]];
        while let Some(tuple) = stack.pop() {
            let used: usize = tuple.iter().map(|p| p.size()).sum();
            if tuple.len() < m - 1 {
                for lam in &pairs {
                    if used + lam.size() <= ctx.weight_cap {
                        let mut t = tuple.clone();
                        t.push(lam.clone());
                        stack.push(t);
                    }
                }
                continue;
            }
            let mut f = C128::one();
            for p in 1..=m {
                let cur = if p < m { &tuple[p - 1] } else { &empty };
                let prev = if p > 1 { &tuple[p - 2] } else { &empty };
                for e in Sign::BOTH {
                    for ep in Sign::BOTH {
                        f *= nekrasov(cur.get(e), prev.get(ep), &arg(e, ep, p), q);
                        if p < m {
                            let w = ctx.qpow(&(e.apply(&sig[p]) - ep.apply(&sig[p])));
                            f /= nekrasov(cur.get(e), cur.get(ep), &w, q);
                        }
                    }
                }
                if p < m {
                    f *= (ctx.qpow(&(c(2.0) * &thetas[p])) * &xs[p - 1] / &xs[p]).powi(cur.size() as i64);
                }
            }
            total += f;
        }
        pre * total
    }

    #[test]
    fn normalization_cancels_at_trivial_middle() {
        let ctx = ctx("0.3", 4);
        let t = c(0.237);
        let n = normalization_n(&t, &C128::zero(), &t, &ctx).unwrap();
        assert!(n.rel_diff(&C128::one()) < 1e-34);
    }

    #[test]
    fn normalization_matches_direct_product() {
        let ctx = ctx("0.3", 4);
        let (a, b, e) = (c(0.31), c(0.17), c(0.42));
        let mut direct = C128::one();
        for x in [1.0 + 0.31 - 0.17 - 0.42, 1.0 + 0.31 - 0.17 + 0.42, 1.0 - 0.31 - 0.17 - 0.42, 1.0 - 0.31 - 0.17 + 0.42] {
            direct *= barnes_g_q(&c(x), &ctx);
        }
        direct = direct / barnes_g_q(&c(1.62), &ctx) / barnes_g_q(&c(1.0 - 0.84), &ctx);
        assert!(normalization_n(&a, &b, &e, &ctx).unwrap().rel_diff(&direct) < 1e-14);
    }

    #[test]
    fn degenerate_normalization_has_a_zero() {
        let ctx = ctx("0.3", 4);
        let t = d("0.291");
        let t1 = t.clone() + C128::half();
        let n = normalization_n(&t, &C128::half(), &t1, &ctx).unwrap();
        assert!(n.abs() < 1e-30);
        let n = normalization_n_degenerate(&t, &C128::half(), &t1, &ctx).unwrap();
        assert!(n.abs() > 1e-3);
        assert!(normalization_n_degenerate(&t, &d("0.2"), &t1, &ctx).is_err());
        assert!(matches!(normalization_n(&c(-0.5), &c(0.1), &c(0.2), &ctx), Err(Error::Pole(_))));
    }

    #[test]
    fn one_point_and_zero_weight_blocks_are_prefactors() {
        let ctx0 = ctx("0.3", 0);
        let th = vec![d("0.1"), d("0.23"), d("0.31")];
        let s = BlockSeries::new(BlockSpec::new(th, vec![]).unwrap(), &ctx("0.3", 5)).unwrap();
        let x = [d("0.7")];
        assert_eq!(s.eval(&x).unwrap(), s.prefactor(&x).unwrap());
        let th = vec![d("0.1"), d("0.23"), d("0.19"), d("0.31")];
        let spec = BlockSpec::new(th, vec![d("0.277")]).unwrap();
        let s = BlockSeries::new(spec, &ctx0).unwrap();
        let xs = [d("0.2"), d("1.1")];
        assert_eq!(s.eval(&xs).unwrap(), s.prefactor(&xs).unwrap());
    }

    #[test]
    fn series_matches_literal_oracle() {
        let th = vec![d("0.137"), d("0.211"), d("0.173"), d("0.291")];
        let sg = vec![d("0.317")];
        let xs = [d("0.15"), d("1.3")];
        for k in [1, 3] {
            let ctx = ctx("0.3", k);
            let a = conformal_block(BlockSpec::new(th.clone(), sg.clone()).unwrap(), &xs, &ctx).unwrap();
            let b = literal_block(&th, &sg, &xs, &ctx, &[]);
            assert!(a.rel_diff(&b) < 1e-34, "K={k}");
        }
        let th = vec![d("0.137"), d("0.211"), d("0.173"), d("0.233"), d("0.291")];
        let sg = vec![d("0.317"), d("0.402")];
        let xs = [d("0.05"), d("0.4"), d("2.2")];
        let ctx = ctx("0.3", 3);
        let a = conformal_block(BlockSpec::new(th.clone(), sg.clone()).unwrap(), &xs, &ctx).unwrap();
        let b = literal_block(&th, &sg, &xs, &ctx, &[]);
        assert!(a.rel_diff(&b) < 1e-34);
    }

    #[test]
    fn degenerate_series_matches_literal_oracle() {
        let h = C128::half();
        let (t0, t1, ti) = (d("0.137"), d("0.173"), d("0.291"));
        let th = vec![t0.clone(), t1, h.clone(), ti.clone()];
        let sg = vec![ti - h];
        let xs = [d("0.3"), d("2.0")];
        let ctx = ctx("0.3", 4);
        let spec = BlockSpec::new(th.clone(), sg.clone()).unwrap().with_degenerate(2).unwrap();
        let a = conformal_block(spec, &xs, &ctx).unwrap();
        let b = literal_block(&th, &sg, &xs, &ctx, &[2]);
        assert!(a.rel_diff(&b) < 1e-34);
    }

    #[test]
    fn truncation_is_monotone() {
        let th = vec![d("0.137"), d("0.211"), d("0.173"), d("0.291")];
        let spec = BlockSpec::new(th, vec![d("0.317")]).unwrap();
        let xs = [d("0.1"), d("1.0")];
        let s4 = BlockSeries::new(spec.clone(), &ctx("0.3", 4)).unwrap();
        let s6 = BlockSeries::new(spec, &ctx("0.3", 6)).unwrap();
        let r = s4.ratios(&xs).unwrap()[0].abs();
        let dropped: f64 = s6
            .coefficients()
            .iter()
            .filter(|(w, _)| w[0] > 4)
            .map(|(w, c)| c.abs() * r.powi(w[0] as i32))
            .fold(0.0, f64::max);
        let diff = s6.sum(&xs).unwrap().dist(&s4.sum(&xs).unwrap());
        assert!(diff <= 3.0 * dropped, "{diff} vs {dropped}");
        assert!(diff > 0.0);
    }

    #[test]
    fn resonant_sigma_is_rejected() {
        let th = vec![d("0.137"), d("0.211"), d("0.173"), d("0.291")];
        let spec = BlockSpec::new(th, vec![C128::half()]).unwrap();
        assert!(matches!(BlockSeries::new(spec, &ctx("0.3", 3)), Err(Error::Resonance(_))));
        assert!(BlockSpec::new(vec![d("0.1")], vec![]).is_err());
    }

    #[test]
    fn degenerate_closed_forms_match_series() {
        let ctx = ctx("0.3", 6);
        let (ti, t1, t0) = (d("0.291"), d("0.173"), d("0.137"));
        let rep = degenerate_block_report(&ti, &t1, &t0, (&d("2.0"), &d("0.3")), (&d("0.2"), &d("1.5")), &ctx).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn degenerate_closed_form_at_small_ratio() {
        // the closed form tends to 𝒩 q^{θ∞²} r^{ε'θ∞+¼} Γ_q(α)Γ_q(β)/Γ_q(γ) as r → 0
        let ctx = ctx("0.3", 6);
        let (ti, t1, t0) = (d("0.291"), d("0.173"), d("0.137"));
        let x1 = C128::one();
        let x2 = d("1e-30");
        let v = degenerate_block_4pt(Side::Left, Sign::Plus, &ti, &t1, &t0, &x1, &x2, &ctx).unwrap();
        let h = C128::half();
        let r = ctx.qpow(&(c(2.0) * &t1)) * &x2;
        let g = gamma_q(&(h.clone() + &ti - &t1 + &t0), &ctx).unwrap() * gamma_q(&(h + &ti - &t1 - &t0), &ctx).unwrap()
            / gamma_q(&(C128::one() + c(2.0) * &ti), &ctx).unwrap();
        let lim = degenerate_ncal(&ti, &t1, &t0, &x1, &x2, &ctx).unwrap() * ctx.qpow(&(ti.clone() * &ti)) * r.pow(&(ti.clone() + c(0.25))) * g;
        assert!(v.rel_diff(&lim) < 1e-28);
        assert!(degenerate_block_4pt(Side::Right, Sign::Plus, &ti, &t1, &t0, &c(20.0), &c(1.0), &ctx).is_err());
    }

    #[test]
    fn braiding_matrix_properties() {
        let ctx = ctx("0.3", 4);
        let r = braiding_properties(&d("0.173"), &d("0.291"), &d("0.137"), &C128::new(0.37, 0.11), &ctx).unwrap();
        for (k, v) in r.labelled() {
            assert!(v < 1e-30, "{k}: {v}");
        }
        let rep = braiding_property_report(5, 1, &ctx).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(braiding_matrix_u(&d("0.1"), &d("0.2"), &C128::half(), &d("0.3"), &ctx).is_err());
        assert!(braiding_matrix_u(&d("0.1"), &d("0.2"), &d("0.3"), &d("-0.2"), &ctx).is_err());
    }

    #[test]
    fn braiding_matrix_from_x_uses_log_base() {
        let ctx = ctx("0.3", 4);
        let u = d("0.41");
        let a = braiding_matrix(&d("0.173"), &d("0.291"), &d("0.137"), &ctx.qpow(&u), &ctx).unwrap();
        let b = braiding_matrix_u(&d("0.173"), &d("0.291"), &d("0.137"), &u, &ctx).unwrap();
        assert!(a.rel_diff(&b) < 1e-34);
    }

    fn params(q: &QContext<C128>) -> BraidParams<C128> {
        let t1 = d("0.223");
        BraidParams {
            theta_inf: d("0.291"),
            x2: q.qpow(&((C128::one() - c(2.0) * &t1) * C128::half())),
            theta1: t1,
            sigma: d("0.317"),
            x1: C128::one(),
        }
    }

    // sums over every partition η with |η| ≤ K, not only those with nonvanishing factors
    fn literal_x_plus(quad: &Quad, p: &BraidParams<C128>, ctx: &QContext<C128>, k: usize) -> C128 {
        let q = &ctx.q;
        let h = C128::half();
        let Quad { lambda: l, mu: m, alpha: a, beta: b } = quad;
        let (ti, t1, sg) = (&p.theta_inf, &p.theta1, &p.sigma);
        let w = |e: C128| ctx.qpow(&e);
        let pre = nekrasov(a, b, &w(c(2.0) * ti), q)
            * nekrasov(b, l, &w(-ti.clone() - &h - t1 - sg), q)
            * nekrasov(b, m, &w(-ti.clone() - &h - t1 + sg), q);
        let mut s = C128::zero();
        for e in enumerate_upto(k) {
            let term = (C128::one() / p.x2.clone()).powi((l.size() + m.size()) as i64)
                * (w(c(2.0) * t1) * &p.x2 / &p.x1).powi((e.size() + b.size()) as i64)
                * (q.clone() * &p.x1).powi((a.size() + b.size()) as i64)
                * nekrasov(a, &e, &(C128::one() / q.clone()), q)
                * nekrasov(&e, l, &w(ti.clone() + &h - t1 - sg), q)
                * nekrasov(&e, m, &w(ti.clone() + &h - t1 + sg), q)
                / (nekrasov(&e, b, &w(c(2.0) * ti + C128::one()), q) * nekrasov(&e, &e, &C128::one(), q));
            s += term;
        }
        pre * s
    }

    fn literal_y_plus(quad: &Quad, p: &BraidParams<C128>, ctx: &QContext<C128>, k: usize) -> C128 {
        let q = &ctx.q;
        let h = C128::half();
        let Quad { lambda: l, mu: m, alpha: a, beta: b } = quad;
        let (ti, t1, sg) = (&p.theta_inf, &p.theta1, &p.sigma);
        let w = |e: C128| ctx.qpow(&e);
        let pre = nekrasov(l, m, &w(c(2.0) * sg), q)
            * nekrasov(a, l, &w(ti.clone() - t1 - sg - &h), q)
            * nekrasov(b, l, &w(-ti.clone() - t1 - sg - &h), q);
        let mut s = C128::zero();
        for e in enumerate_upto(k) {
            let term = (C128::one() / p.x1.clone()).powi((l.size() + m.size()) as i64)
                * (q.clone() * &p.x1 / &p.x2).powi((l.size() + e.size()) as i64)
                * (w(c(2.0) * t1) * &p.x2).powi((a.size() + b.size()) as i64)
                * nekrasov(&e, m, &(C128::one() / q.clone()), q)
                * nekrasov(a, &e, &w(ti.clone() - t1 + sg + &h), q)
                * nekrasov(b, &e, &w(-ti.clone() - t1 + sg + &h), q)
                / (nekrasov(l, &e, &w(c(2.0) * sg + C128::one()), q) * nekrasov(&e, &e, &C128::one(), q));
            s += term;
        }
        pre * s
    }

    #[test]
    fn x_and_y_match_literal_sums() {
        let ctx = ctx("0.3", 4);
        let p = params(&ctx);
        for quad in [Quad::new(&[1], &[], &[], &[]), Quad::new(&[], &[1], &[], &[]), Quad::new(&[2], &[1], &[1, 1], &[1])] {
            let x = x_func(Sign::Plus, &quad, &p, &ctx, 6).unwrap();
            assert!(x.rel_diff(&literal_x_plus(&quad, &p, &ctx, 6)) < 1e-32, "{quad}");
            let y = y_func(Sign::Plus, &quad, &p, &ctx, 6).unwrap();
            assert!(y.rel_diff(&literal_y_plus(&quad, &p, &ctx, 6)) < 1e-32, "{quad}");
        }
    }

    #[test]
    fn vacuum_x_y_are_one_at_zero_cutoff() {
        let ctx = ctx("0.3", 4);
        let p = params(&ctx);
        for s in Sign::BOTH {
            assert_eq!(x_func(s, &Quad::vacuum(), &p, &ctx, 0).unwrap(), C128::one());
            assert_eq!(y_func(s, &Quad::vacuum(), &p, &ctx, 0).unwrap(), C128::one());
        }
    }

    #[test]
    fn transpose_duality_of_x_and_y() {
        let ctx = ctx("0.3", 4);
        let p = params(&ctx);
        let dual = BraidParams {
            theta_inf: p.sigma.clone(),
            theta1: p.theta1.clone(),
            sigma: p.theta_inf.clone(),
            x1: C128::one() / (ctx.q.clone() * &p.x1),
            x2: C128::one() / (ctx.qpow(&(c(2.0) * &p.theta1)) * &p.x2),
        };
        for quad in [Quad::new(&[1], &[], &[], &[]), Quad::new(&[2, 1], &[1], &[], &[1]), Quad::new(&[1, 1], &[], &[2], &[1])] {
            let t = Quad {
                lambda: quad.beta.conjugate(),
                mu: quad.alpha.conjugate(),
                alpha: quad.mu.conjugate(),
                beta: quad.lambda.conjugate(),
            };
            for s in Sign::BOTH {
                let x = x_func(s, &quad, &p, &ctx, 8).unwrap();
                let y = y_func(s, &t, &dual, &ctx, 8).unwrap();
                assert!(x.rel_diff(&y) < 1e-32, "{quad} {s}");
            }
        }
    }

    #[test]
    fn vacuum_braiding_is_the_connection_formula() {
        let ctx = ctx("0.02", 4);
        let p = params(&ctx);
        let r = braiding_identity_residual(&Quad::vacuum(), &p, &ctx, 24).unwrap();
        assert!(r < 1e-15, "{r}");
    }

    #[test]
    fn braiding_relation_small_quads() {
        let ctx = ctx("0.02", 4);
        let p = params(&ctx);
        for quad in [Quad::new(&[1], &[], &[], &[]), Quad::new(&[], &[], &[1], &[1]), Quad::new(&[1], &[1], &[], &[1])] {
            let r = braiding_identity_residual(&quad, &p, &ctx, DEFAULT_K_ETA).unwrap();
            assert!(r < 1e-12, "{quad}: {r}");
        }
    }

    #[test]
    fn reduction_prefactor_for_single_box() {
        let ctx = ctx("0.3", 4);
        let p = params(&ctx);
        let got = reduction_c(&Quad::new(&[1], &[], &[], &[]), &p, &ctx);
        assert!(got.rel_diff(&(ctx.q.clone() / &p.x2)) < 1e-36);
    }

    #[test]
    fn reduction_identities() {
        let ctx = ctx("0.3", 4);
        let p = BraidParams { x2: d("0.6"), ..params(&ctx) };
        let r = reduction_residuals(&Quad::new(&[1], &[], &[], &[]), &p, &ctx, 10).unwrap();
        assert!(r.max() < 1e-15, "{r:?}");
        let r = reduction_residuals(&Quad::new(&[1, 1], &[1], &[], &[]), &p, &ctx, 10).unwrap();
        assert!(r.max() < 1e-12, "{r:?}");
        let r = reduction_residuals(&Quad::new(&[2, 1], &[], &[1], &[1]), &p, &ctx, 10).unwrap();
        assert!(r.max() < 1e-12, "{r:?}");
        assert!(reduction_residuals(&Quad::vacuum(), &p, &ctx, 10).is_err());
    }

    #[test]
    fn quad_enumeration() {
        assert_eq!(Quad::all_upto(0), vec![Quad::vacuum()]);
        assert_eq!(Quad::all_upto(1).len(), 5);
        assert_eq!(Quad::all_upto(3).len(), 1 + 4 + 14 + 40);
    }

    #[test]
    fn theta_zero_lattice() {
        let ctx = ctx("0.3", 4);
        assert!(theta_vanishes(&c(2.0), &ctx));
        let omega = S2::omega(&ctx);
        assert!(theta_vanishes(&(c(-1.0) + omega), &ctx));
        assert!(!theta_vanishes(&c(0.5), &ctx));
    }

    struct S2;
    impl S2 {
        fn omega(ctx: &QContext<C128>) -> C128 {
            C128::pi() * c(2.0) * C128::imag_unit() / &ctx.log_q
        }
    }
}
