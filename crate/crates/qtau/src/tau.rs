//! Tau functions as Fourier sums of `C·Z` over the window `n ∈ [-N, N]`, and
//! the shifted tau families entering the q-PVI formulas.

use rayon::prelude::*;
use serde::Serialize;

use crate::blocks::nek_factor;
use crate::nekrasov::IntPowers;
use crate::partitions::pairs_upto;
use crate::qspecial::{barnes_g_q, barnes_g_q_inv};
use crate::{Analytic, Error, QContext, Result, Sign};

/// Minimal distance of `2σ` from the resonant lattice `ℤ + (2πi / log q) ℤ`.
pub const RESONANCE_GUARD: f64 = 0.02;

/// `(θ0, θt, θ1, θ∞, σ, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaParams<S> {
    pub theta0: S,
    pub theta_t: S,
    pub theta1: S,
    pub theta_inf: S,
    pub sigma: S,
    pub s: S,
}

/// Parameter shift in units of ½.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Shift {
    pub theta0: i64,
    pub theta_t: i64,
    pub theta1: i64,
    pub theta_inf: i64,
    pub sigma: i64,
}

impl Shift {
    pub const fn new(theta0: i64, theta_t: i64, theta1: i64, theta_inf: i64, sigma: i64) -> Self {
        Shift { theta0, theta_t, theta1, theta_inf, sigma }
    }

    pub fn neg(self) -> Self {
        Shift::new(-self.theta0, -self.theta_t, -self.theta1, -self.theta_inf, -self.sigma)
    }
}

/// `τ1, …, τ8` of the eight-member family, with `θ∞` already in the shifted convention.
pub const FAMILY_SHIFTS: [Shift; 8] = [
    Shift::new(0, 0, 0, 1, 0),
    Shift::new(0, 0, 0, -1, 0),
    Shift::new(1, 0, 0, 0, 1),
    Shift::new(-1, 0, 0, 0, -1),
    Shift::new(0, 0, -1, 0, 0),
    Shift::new(0, 0, 1, 0, 0),
    Shift::new(0, -1, 0, 0, 1),
    Shift::new(0, 1, 0, 0, -1),
];

/// `τ1, …, τ4` of the tau-ratio theorem, in the unshifted `θ∞` convention.
pub const RATIO_SHIFTS: [Shift; 4] = [
    Shift::new(0, 0, 0, 0, 0),
    Shift::new(0, 0, 0, -2, 0),
    Shift::new(1, 0, 0, -1, 1),
    Shift::new(-1, 0, 0, -1, -1),
];

impl<S: Analytic> ThetaParams<S> {
    pub fn new(theta0: S, theta_t: S, theta1: S, theta_inf: S, sigma: S, s: S) -> Self {
        ThetaParams { theta0, theta_t, theta1, theta_inf, sigma, s }
    }

    /// Parses `[θ0, θt, θ1, θ∞, σ, s]` from decimal strings.
    pub fn parse(v: [&str; 6]) -> Result<Self> {
        Ok(ThetaParams::new(
            S::parse(v[0])?,
            S::parse(v[1])?,
            S::parse(v[2])?,
            S::parse(v[3])?,
            S::parse(v[4])?,
            S::parse(v[5])?,
        ))
    }

    pub fn shifted(&self, d: Shift) -> Self {
        let h = |x: &S, k: i64| x.clone() + S::from_ratio(k, 2);
        ThetaParams {
            theta0: h(&self.theta0, d.theta0),
            theta_t: h(&self.theta_t, d.theta_t),
            theta1: h(&self.theta1, d.theta1),
            theta_inf: h(&self.theta_inf, d.theta_inf),
            sigma: h(&self.sigma, d.sigma),
            s: self.s.clone(),
        }
    }

    /// Converts a shifted-convention `θ∞` (eight-member family) to the unshifted one.
    pub fn to_unshifted_inf(&self) -> Self {
        self.shifted(Shift::new(0, 0, 0, 1, 0))
    }

    /// Inverse of [`ThetaParams::to_unshifted_inf`].
    pub fn to_shifted_inf(&self) -> Self {
        self.shifted(Shift::new(0, 0, 0, -1, 0))
    }

    /// Checks the resonance guard for `2σ`.
    pub fn check_generic(&self, ctx: &QContext<S>) -> Result<()> {
        let two_sigma = self.sigma.clone() * S::from_i64(2);
        let d = lattice_distance(&two_sigma, ctx);
        if d < RESONANCE_GUARD {
            return Err(Error::Resonance(format!("2 sigma lies {d:.3e} from q^Z resonance")));
        }
        Ok(())
    }
}

/// Distance of `u` from `ℤ + (2πi / log q) ℤ`.
pub fn lattice_distance<S: Analytic>(u: &S, ctx: &QContext<S>) -> f64 {
    let omega = S::pi() * S::from_i64(2) * S::imag_unit() / &ctx.log_q;
    let m = if omega.im().abs() > 0.0 { (u.im() / omega.im()).round() } else { 0.0 };
    let rest = u.clone() - omega * S::from_f64(m);
    let n = rest.re().round();
    rest.dist(&S::from_f64(n))
}

/// `C = ∏_{ε,ε'} G_q(1+εθ∞-θ1+ε'σ) G_q(1+εσ-θt+ε'θ0) / (G_q(1+2σ) G_q(1-2σ))`.
pub fn c_structure<S: Analytic>(theta1: &S, theta_t: &S, theta_inf: &S, theta0: &S, sigma: &S, ctx: &QContext<S>) -> Result<S> {
    let one = S::one();
    let mut out = S::one();
    for e in Sign::BOTH {
        for ep in Sign::BOTH {
            out *= barnes_g_q(&(one.clone() + e.apply(theta_inf) - theta1 + ep.apply(sigma)), ctx);
            out *= barnes_g_q(&(one.clone() + e.apply(sigma) - theta_t + ep.apply(theta0)), ctx);
        }
    }
    let two_sigma = sigma.clone() * S::from_i64(2);
    out *= barnes_g_q_inv(&(one.clone() + &two_sigma), ctx)?;
    out *= barnes_g_q_inv(&(one - two_sigma), ctx)?;
    Ok(out)
}

/// Coefficients `Z_k` of `t^k`, `k ≤ K`, in the instanton sum `Z[σ, t]`.
pub fn z_coefficients<S: Analytic>(theta1: &S, theta_t: &S, theta_inf: &S, theta0: &S, sigma: &S, ctx: &QContext<S>) -> Result<Vec<S>> {
    let k = ctx.weight_cap;
    let pw = IntPowers::new(&ctx.q, 2 * k + 4);
    let table = |f: &dyn Fn(Sign, Sign) -> S| {
        Sign::BOTH.map(|e| Sign::BOTH.map(|ep| nek_factor(&f(e, ep), ctx, &pw)))
    };
    let left = table(&|e, ep| e.apply(theta_inf) - theta1 - ep.apply(sigma));
    let right = table(&|e, ep| e.apply(sigma) - theta_t - ep.apply(theta0));
    let den = table(&|e, ep| e.apply(sigma) - ep.apply(sigma));
    let empty = crate::Partition::empty();

    let mut z = vec![S::zero(); k + 1];
    for lam in pairs_upto(k) {
        let mut num = S::one();
        for e in Sign::BOTH {
            for ep in Sign::BOTH {
                num *= left[e.idx()][ep.idx()].eval(&empty, lam.get(ep));
                num *= right[e.idx()][ep.idx()].eval(lam.get(e), &empty);
            }
        }
        if num.is_zero() {
            continue;
        }
        let mut d = S::one();
        for e in Sign::BOTH {
            for ep in Sign::BOTH {
                d *= den[e.idx()][ep.idx()].eval(lam.get(e), lam.get(ep));
            }
        }
        if d.is_zero() {
            return Err(Error::Resonance(format!("Z denominator vanishes at {lam:?}")));
        }
        z[lam.size()] += num / d;
    }
    Ok(z)
}

/// `Z[σ, t]` truncated at `|λ| ≤ K`.
pub fn z_instanton<S: Analytic>(theta1: &S, theta_t: &S, theta_inf: &S, theta0: &S, sigma: &S, t: &S, ctx: &QContext<S>) -> Result<S> {
    let c = z_coefficients(theta1, theta_t, theta_inf, theta0, sigma, ctx)?;
    Ok(horner(&c, t))
}

fn horner<S: Analytic>(c: &[S], t: &S) -> S {
    c.iter().rev().fold(S::zero(), |acc, x| acc * t + x)
}

#[derive(Clone, Debug)]
struct Term<S> {
    n: i64,
    c: S,
    z: Vec<S>,
    exponent: S,
}

/// A tau function with its `C` and `Z` data precomputed for the whole window.
#[derive(Clone, Debug)]
pub struct Tau<S> {
    pub params: ThetaParams<S>,
    pub weight_cap: usize,
    pub window: usize,
    terms: Vec<Term<S>>,
}

/// `τ(t)` with the relative size of the dropped pieces.
#[derive(Clone, Debug)]
pub struct TauValue<S> {
    pub value: S,
    /// Largest `|n| = N` term over `|τ|`.
    pub boundary: f64,
    /// Largest weight-`K` instanton term over `|τ|`.
    pub truncation: f64,
}

impl<S> TauValue<S> {
    pub fn converged(&self, tol: f64) -> bool {
        self.boundary <= tol && self.truncation <= tol
    }
}

impl<S: Analytic> Tau<S> {
    pub fn new(params: ThetaParams<S>, ctx: &QContext<S>) -> Result<Self> {
        params.check_generic(ctx)?;
        let n = ctx.window as i64;
        let p = &params;
        let sq = |x: &S| x.clone() * x;
        let base = sq(&p.theta_t) + sq(&p.theta0);
        let terms = (-n..=n)
            .into_par_iter()
            .map(|n| {
                let sigma = p.sigma.clone() + S::from_i64(n);
                let c = c_structure(&p.theta1, &p.theta_t, &p.theta_inf, &p.theta0, &sigma, ctx)?;
                let z = z_coefficients(&p.theta1, &p.theta_t, &p.theta_inf, &p.theta0, &sigma, ctx)?;
                Ok(Term { n, c, z, exponent: sq(&sigma) - &base })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Tau { params, weight_cap: ctx.weight_cap, window: ctx.window, terms })
    }

    /// `Σ_n s^n t^{(σ+n)²-θt²-θ0²} C[σ+n] Z[σ+n, t]`; at `s = 0` only `n = 0` contributes.
    pub fn eval(&self, t: &S) -> Result<TauValue<S>> {
        if t.is_zero() {
            return Err(Error::Domain("tau at t = 0".into()));
        }
        let s = &self.params.s;
        let k = self.weight_cap as i64;
        let mut value = S::zero();
        let mut edge = 0.0f64;
        let mut last = 0.0f64;
        for term in &self.terms {
            if s.is_zero() && term.n != 0 {
                continue;
            }
            let pre = s.powi(term.n) * t.pow(&term.exponent) * &term.c;
            let v = pre.clone() * horner(&term.z, t);
            if term.n.unsigned_abs() as usize == self.window && self.window > 0 {
                edge = edge.max(v.abs());
            }
            last = last.max((pre * &term.z[k as usize] * t.powi(k)).abs());
            value += v;
        }
        let a = value.abs();
        let rel = |x: f64| if a > 0.0 { x / a } else { f64::INFINITY };
        Ok(TauValue { boundary: rel(edge), truncation: if k == 0 { 0.0 } else { rel(last) }, value })
    }

    pub fn value(&self, t: &S) -> Result<S> {
        Ok(self.eval(t)?.value)
    }
}

/// `τ(p, t)` evaluated directly.
pub fn tau_eval<S: Analytic>(p: &ThetaParams<S>, t: &S, ctx: &QContext<S>) -> Result<TauValue<S>> {
    Tau::new(p.clone(), ctx)?.eval(t)
}

/// Eight tau functions built from a base point in the shifted `θ∞` convention.
#[derive(Clone, Debug)]
pub struct TauFamily<S> {
    pub base: ThetaParams<S>,
    pub taus: Vec<Tau<S>>,
}

impl<S: Analytic> TauFamily<S> {
    /// `τ_i` for `i ∈ 1..=8`.
    pub fn get(&self, i: usize) -> &Tau<S> {
        &self.taus[i - 1]
    }

    /// `[τ1(t), …, τ8(t)]`.
    pub fn values(&self, t: &S) -> Result<Vec<S>> {
        self.taus.iter().map(|x| x.value(t)).collect()
    }
}

/// Parameter sets of the eight-member family.
pub fn tau_family_params<S: Analytic>(base: &ThetaParams<S>) -> Vec<ThetaParams<S>> {
    FAMILY_SHIFTS.iter().map(|d| base.shifted(*d)).collect()
}

pub fn tau_family<S: Analytic>(base: &ThetaParams<S>, ctx: &QContext<S>) -> Result<TauFamily<S>> {
    let taus = tau_family_params(base).into_par_iter().map(|p| Tau::new(p, ctx)).collect::<Result<Vec<_>>>()?;
    Ok(TauFamily { base: base.clone(), taus })
}

/// Four tau functions of the tau-ratio theorem, from a base point in the unshifted `θ∞` convention.
#[derive(Clone, Debug)]
pub struct RatioFamily<S> {
    pub base: ThetaParams<S>,
    pub taus: Vec<Tau<S>>,
}

impl<S: Analytic> RatioFamily<S> {
    /// `τ_i` for `i ∈ 1..=4`.
    pub fn get(&self, i: usize) -> &Tau<S> {
        &self.taus[i - 1]
    }

    pub fn values(&self, t: &S) -> Result<Vec<S>> {
        self.taus.iter().map(|x| x.value(t)).collect()
    }
}

pub fn tau_ratio_params<S: Analytic>(base: &ThetaParams<S>) -> Vec<ThetaParams<S>> {
    RATIO_SHIFTS.iter().map(|d| base.shifted(*d)).collect()
}

pub fn tau_ratio_family<S: Analytic>(base: &ThetaParams<S>, ctx: &QContext<S>) -> Result<RatioFamily<S>> {
    let taus = tau_ratio_params(base).into_par_iter().map(|p| Tau::new(p, ctx)).collect::<Result<Vec<_>>>()?;
    Ok(RatioFamily { base: base.clone(), taus })
}

#[cfg(test)]
mod tests {
    use num_traits::{One, Zero};

    use super::*;
    use crate::qspecial::gamma_q;
    use crate::{Scalar, C128};

    fn c(x: f64) -> C128 {
        C128::from_f64(x)
    }

    fn ctx(q: &str, k: usize, n: usize) -> QContext<C128> {
        QContext::with_orders(C128::parse(q).unwrap(), 256, k, n).unwrap()
    }

    fn base() -> ThetaParams<C128> {
        ThetaParams::parse(["0.137", "0.211", "0.173", "0.291", "0.317", "0.83"]).unwrap()
    }

    fn c_of(p: &ThetaParams<C128>, sigma: &C128, x: &QContext<C128>) -> C128 {
        c_structure(&p.theta1, &p.theta_t, &p.theta_inf, &p.theta0, sigma, x).unwrap()
    }

    #[test]
    fn c_matches_direct_product() {
        let x = ctx("0.3", 4, 2);
        let p = base();
        let g = |u: f64| barnes_g_q(&c(u), &x);
        let (t0, tt, t1, ti, s) = (0.137, 0.211, 0.173, 0.291, 0.317);
        let mut direct = c(1.0);
        for e in [1.0, -1.0] {
            for ep in [1.0, -1.0] {
                direct = direct * g(1.0 + e * ti - t1 + ep * s) * g(1.0 + e * s - tt + ep * t0);
            }
        }
        direct /= g(1.0 + 2.0 * s) * g(1.0 - 2.0 * s);
        assert!(c_of(&p, &p.sigma, &x).rel_diff(&direct) < 1e-14);
    }

    #[test]
    fn c_sigma_shift_through_gamma() {
        let x = ctx("0.3", 4, 2);
        let p = base();
        let s = p.sigma.clone();
        let one = C128::one();
        let gm = |u: C128| gamma_q(&u, &x).unwrap();
        let mut ratio = C128::one();
        for e in Sign::BOTH {
            let a = e.apply(&p.theta_inf) - &p.theta1;
            ratio = ratio * gm(one.clone() + &a + &s) / gm(a - &s);
            let b = e.apply(&p.theta0) - &p.theta_t;
            ratio = ratio * gm(one.clone() + &s + &b) / gm(b - &s);
        }
        let two = C128::from_i64(2);
        ratio = ratio * gm(-one.clone() - two.clone() * &s) * gm(-(two.clone() * &s))
            / (gm(two.clone() + two.clone() * &s) * gm(one.clone() + two * &s));
        let lhs = c_of(&p, &(s.clone() + &one), &x) / c_of(&p, &s, &x);
        assert!(lhs.rel_diff(&ratio) < 1e-30, "{}", lhs.rel_diff(&ratio));
    }

    #[test]
    fn c_is_even_in_sigma() {
        let x = ctx("0.3", 4, 2);
        let p = base();
        let a = c_of(&p, &p.sigma, &x);
        let b = c_of(&p, &(-p.sigma.clone()), &x);
        assert!(a.rel_diff(&b) < 1e-32);
    }

    #[test]
    fn z_trivial_cases() {
        let p = base();
        let x = ctx("0.3", 6, 2);
        let z = z_coefficients(&p.theta1, &p.theta_t, &p.theta_inf, &p.theta0, &p.sigma, &x).unwrap();
        assert_eq!(z[0], C128::one());
        let x0 = ctx("0.3", 0, 2);
        let z0 = z_instanton(&p.theta1, &p.theta_t, &p.theta_inf, &p.theta0, &p.sigma, &c(0.04), &x0).unwrap();
        assert_eq!(z0, C128::one());
    }

    #[test]
    fn z_single_box_literal() {
        let p = base();
        let x = ctx("0.3", 1, 0);
        let qp = |u: C128| x.qpow(&u);
        let one = C128::one();
        let single = |s: &C128| {
            let mut num = C128::one();
            for e in Sign::BOTH {
                num *= one.clone() - qp(e.apply(&p.theta_inf) - &p.theta1 - s);
                num *= one.clone() - qp(s.clone() - &p.theta_t - e.apply(&p.theta0));
            }
            let two_s = s.clone() * C128::from_i64(2);
            let den = (one.clone() - x.qpowi(-1)) * (one.clone() - &x.q) * (one.clone() - qp(two_s.clone())) * (one.clone() - qp(-two_s));
            num / den
        };
        let t = c(0.03);
        let oracle = one.clone() + t.clone() * (single(&p.sigma) + single(&(-p.sigma.clone())));
        let z = z_instanton(&p.theta1, &p.theta_t, &p.theta_inf, &p.theta0, &p.sigma, &t, &x).unwrap();
        assert!(z.rel_diff(&oracle) < 1e-32);
    }

    #[test]
    fn z_truncation_control() {
        let p = base();
        let t = c(0.05);
        let x = ctx("0.3", 6, 0);
        let zc = z_coefficients(&p.theta1, &p.theta_t, &p.theta_inf, &p.theta0, &p.sigma, &x).unwrap();
        let z6 = horner(&zc, &t);
        let z8 = z_instanton(&p.theta1, &p.theta_t, &p.theta_inf, &p.theta0, &p.sigma, &t, &x.with_weight_cap(8)).unwrap();
        let last = (zc[6].clone() * t.powi(6)).abs();
        assert!(z6.dist(&z8) <= 10.0 * last, "{} {}", z6.dist(&z8), last);
    }

    #[test]
    fn window_collapse_and_s_zero() {
        let p = base();
        let t = c(0.02);
        let x0 = ctx("0.3", 6, 0);
        let v0 = tau_eval(&p, &t, &x0).unwrap().value;
        let expo = p.sigma.clone() * &p.sigma - p.theta_t.clone() * &p.theta_t - p.theta0.clone() * &p.theta0;
        let z = z_instanton(&p.theta1, &p.theta_t, &p.theta_inf, &p.theta0, &p.sigma, &t, &x0).unwrap();
        let single = t.pow(&expo) * c_of(&p, &p.sigma, &x0) * z;
        assert!(v0.rel_diff(&single) < 1e-32);
        let mut p0 = p.clone();
        p0.s = C128::zero();
        let v = tau_eval(&p0, &t, &ctx("0.3", 6, 3)).unwrap().value;
        assert!(v.rel_diff(&v0) < 1e-32);
    }

    #[test]
    fn sigma_shift_reindexes_window() {
        let p = base();
        let x = ctx("0.3", 6, 5);
        let t = c(0.02);
        let a = tau_eval(&p, &t, &x).unwrap().value;
        let b = tau_eval(&p.shifted(Shift::new(0, 0, 0, 0, 2)), &t, &x).unwrap().value;
        assert!((b * &p.s).rel_diff(&a) < 1e-12);
    }

    #[test]
    fn leading_exponent_from_log_slope() {
        let p = ThetaParams::parse(["0.137", "0.211", "0.173", "0.291", "0.1", "0.83"]).unwrap();
        let x = ctx("0.3", 6, 3);
        let tau = Tau::new(p.clone(), &x).unwrap();
        let (t1, t2) = (c(1e-3), c(1e-4));
        let slope = (tau.value(&t1).unwrap() / tau.value(&t2).unwrap()).ln().re() / 10f64.ln();
        let expected = 0.1f64.powi(2) - 0.211f64.powi(2) - 0.137f64.powi(2);
        assert!((slope - expected).abs() < 5e-3, "{slope} vs {expected}");
    }

    #[test]
    fn tails_are_reported() {
        let x = ctx("0.3", 6, 4);
        let v = tau_eval(&base(), &c(0.02), &x).unwrap();
        assert!(v.boundary < 1e-20);
        assert!(v.truncation < 1e-8);
        assert!(v.converged(1e-8));
    }

    #[test]
    fn resonance_is_rejected() {
        let mut p = base();
        p.sigma = c(0.505);
        assert!(matches!(tau_eval(&p, &c(0.02), &ctx("0.3", 4, 2)), Err(Error::Resonance(_))));
        p.sigma = c(1.03);
        assert!(tau_eval(&p, &c(0.02), &ctx("0.3", 4, 2)).is_ok());
    }

    #[test]
    fn family_shift_table() {
        let p = base();
        let f = tau_family_params(&p);
        let h = c(0.5);
        assert_eq!(f[0].theta_inf, p.theta_inf.clone() + &h);
        assert_eq!((&f[0].theta0, &f[0].theta_t, &f[0].theta1, &f[0].sigma), (&p.theta0, &p.theta_t, &p.theta1, &p.sigma));
        assert_eq!(f[6].theta_t, p.theta_t.clone() - &h);
        assert_eq!(f[6].sigma, p.sigma.clone() + &h);
        assert_eq!(f[6].s, p.s);
        for d in FAMILY_SHIFTS {
            let back = p.shifted(d).shifted(d.neg());
            assert!(back.sigma.rel_diff(&p.sigma) < 1e-36 && back.theta_inf.rel_diff(&p.theta_inf) < 1e-36);
            assert!(back.theta0.rel_diff(&p.theta0) < 1e-36 && back.theta_t.rel_diff(&p.theta_t) < 1e-36);
        }
        let g = tau_ratio_params(&p);
        assert_eq!(g[1].theta_inf, p.theta_inf.clone() - c(1.0));
        assert_eq!(g[2].theta_inf, p.theta_inf.clone() - &h);
        assert_eq!(g[2].theta0, p.theta0.clone() + &h);
        assert_eq!(g[2].sigma, p.sigma.clone() + &h);
    }

    #[test]
    fn ratio_family_is_first_half_of_eight() {
        let x = ctx("0.3", 4, 3);
        let p = base();
        let f8 = tau_family(&p, &x).unwrap();
        let f4 = tau_ratio_family(&p.to_unshifted_inf(), &x).unwrap();
        let t = c(0.02);
        for i in 1..=4 {
            let a = f8.get(i).value(&t).unwrap();
            let b = f4.get(i).value(&t).unwrap();
            assert!(a.rel_diff(&b) < 1e-30, "tau{i}");
        }
    }
}
