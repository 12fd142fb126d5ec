//! q-Pochhammer symbols, q-Gamma, q-Barnes, theta functions and Heine's series.
//!
//! Non-integer powers use the principal branch: `q^u = exp(u Log q)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::worst;
use crate::{Analytic, Error, Report, Result, Scalar};

pub const DEFAULT_CUTOFF: usize = 256;
pub const DEFAULT_WEIGHT_CAP: usize = 8;
pub const DEFAULT_WINDOW: usize = 6;

/// Base `q` together with the truncation orders used throughout.
#[derive(Clone, Debug)]
pub struct QContext<S> {
    pub q: S,
    pub log_q: S,
    /// Factors kept in infinite products.
    pub cutoff: usize,
    /// Total partition weight kept in block and instanton sums.
    pub weight_cap: usize,
    /// Fourier window `n ∈ [-N, N]` of tau functions.
    pub window: usize,
    qpows: Vec<S>,
    poch_q: S,
    dpoch_q: S,
}

impl<S: Analytic> QContext<S> {
    pub fn new(q: S) -> Result<Self> {
        Self::with_orders(q, DEFAULT_CUTOFF, DEFAULT_WEIGHT_CAP, DEFAULT_WINDOW)
    }

    pub fn with_orders(q: S, cutoff: usize, weight_cap: usize, window: usize) -> Result<Self> {
        let aq = q.abs();
        if !(aq < 1.0) || q.is_zero() {
            return Err(Error::Domain(format!("need 0 < |q| < 1, got |q| = {aq}")));
        }
        let mut qpows = Vec::with_capacity(cutoff + 1);
        let mut p = S::one();
        for _ in 0..=cutoff {
            qpows.push(p.clone());
            p *= &q;
        }
        let mut ctx = QContext {
            log_q: q.ln(),
            q,
            cutoff,
            weight_cap,
            window,
            qpows,
            poch_q: S::one(),
            dpoch_q: S::one(),
        };
        let q = ctx.q.clone();
        ctx.poch_q = q_pochhammer_inf(&q, &ctx).value;
        ctx.dpoch_q = q_double_pochhammer_inf(&q, &ctx).value;
        Ok(ctx)
    }

    pub fn with_weight_cap(&self, k: usize) -> Self {
        QContext { weight_cap: k, ..self.clone() }
    }

    pub fn with_window(&self, n: usize) -> Self {
        QContext { window: n, ..self.clone() }
    }

    pub fn mantissa_bits(&self) -> u32 {
        S::mantissa_bits()
    }

    /// `q^u` on the principal branch.
    pub fn qpow(&self, u: &S) -> S {
        (u.clone() * &self.log_q).exp()
    }

    /// `q^k` for integer `k`, by table or repeated squaring.
    pub fn qpowi(&self, k: i64) -> S {
        if k >= 0 && (k as usize) < self.qpows.len() {
            self.qpows[k as usize].clone()
        } else {
            self.q.powi(k)
        }
    }

    /// `log_q x` on the principal branch.
    pub fn log_base(&self, x: &S) -> S {
        x.ln() / &self.log_q
    }

    /// The q-number `[u] = (1 - q^u)/(1 - q)`.
    pub fn qnumber(&self, u: &S) -> S {
        (S::one() - self.qpow(u)) / (S::one() - &self.q)
    }
}

/// Truncated infinite product with its tail bound.
#[derive(Clone, Debug)]
pub struct Product<S> {
    pub value: S,
    pub tail: f64,
    pub converged: bool,
}

/// `(a;q)_N`.
pub fn q_pochhammer_finite<S: Scalar>(a: &S, q: &S, n: usize) -> S {
    let mut r = S::one();
    let mut aq = a.clone();
    for _ in 0..n {
        r *= S::one() - &aq;
        aq *= q;
    }
    r
}

/// `(a;q)_∞` truncated at `j < P`.
pub fn q_pochhammer_inf<S: Analytic>(a: &S, ctx: &QContext<S>) -> Product<S> {
    let mut r = S::one();
    for j in 0..ctx.cutoff {
        r *= S::one() - a.clone() * &ctx.qpows[j];
    }
    let aq = ctx.q.abs();
    let tail = a.abs() * aq.powi(ctx.cutoff as i32) / (1.0 - aq);
    Product { value: r, tail, converged: tail <= S::epsilon() }
}

/// `(a;q,q)_∞ = ∏_{m<P} (1 - a q^m)^{m+1}`.
pub fn q_double_pochhammer_inf<S: Analytic>(a: &S, ctx: &QContext<S>) -> Product<S> {
    let mut r = S::one();
    for m in 0..ctx.cutoff {
        let f = S::one() - a.clone() * &ctx.qpows[m];
        r *= f.powi(m as i64 + 1);
    }
    let aq = ctx.q.abs();
    let p = ctx.cutoff as f64;
    let tail = a.abs() * aq.powi(ctx.cutoff as i32) * (p + 1.0) / ((1.0 - aq) * (1.0 - aq));
    Product { value: r, tail, converged: tail <= S::epsilon() }
}

fn nonpositive_integer<S: Analytic>(u: &S) -> Option<i64> {
    let n = u.re().round();
    if n <= 0.0 && u.dist(&S::from_i64(n as i64)) <= 1e3 * S::epsilon() {
        Some(n as i64)
    } else {
        None
    }
}

/// `Γ_q(u) = (q;q)_∞ / (q^u;q)_∞ · (1-q)^{1-u}`.
pub fn gamma_q<S: Analytic>(u: &S, ctx: &QContext<S>) -> Result<S> {
    if let Some(n) = nonpositive_integer(u) {
        return Err(Error::Pole(format!("Gamma_q({n})")));
    }
    let den = q_pochhammer_inf(&ctx.qpow(u), ctx).value;
    let one_minus_q = S::one() - &ctx.q;
    Ok(ctx.poch_q.clone() / den * one_minus_q.pow(&(S::one() - u)))
}

/// `G_q(u) = (q^u;q,q)_∞/(q;q,q)_∞ · (q;q)_∞^{u-1} · (1-q)^{-(u-1)(u-2)/2}`.
///
/// Entire in `u`; vanishes at nonpositive integers.
pub fn barnes_g_q<S: Analytic>(u: &S, ctx: &QContext<S>) -> S {
    let one = S::one();
    let num = q_double_pochhammer_inf(&ctx.qpow(u), ctx).value;
    let um1 = u.clone() - &one;
    let um2 = u.clone() - S::from_i64(2);
    let e = -(um1.clone() * &um2) * S::half();
    let one_minus_q = one.clone() - &ctx.q;
    num / &ctx.dpoch_q * ctx.poch_q.pow(&um1) * one_minus_q.pow(&e)
}

/// `1 / G_q(u)`, failing where `G_q` vanishes.
pub fn barnes_g_q_inv<S: Analytic>(u: &S, ctx: &QContext<S>) -> Result<S> {
    if let Some(n) = nonpositive_integer(u) {
        return Err(Error::Pole(format!("1/G_q({n})")));
    }
    Ok(S::one() / barnes_g_q(u, ctx))
}

/// `Θ_q(x) = (x, q/x, q; q)_∞`.
pub fn big_theta<S: Analytic>(x: &S, ctx: &QContext<S>) -> Result<S> {
    if x.is_zero() {
        return Err(Error::Domain("Theta_q(0)".into()));
    }
    let a = q_pochhammer_inf(x, ctx).value;
    let b = q_pochhammer_inf(&(ctx.q.clone() / x), ctx).value;
    Ok(a * b * &ctx.poch_q)
}

/// `ϑ(u) = q^{u(u-1)/2} Θ_q(q^u)`.
pub fn theta<S: Analytic>(u: &S, ctx: &QContext<S>) -> S {
    let e = u.clone() * (u.clone() - S::one()) * S::half();
    let x = ctx.qpow(u);
    ctx.qpow(&e) * big_theta(&x, ctx).expect("q^u is never zero")
}

/// `₂φ₁(a, b; c; q, x)` summed over `n ≤ terms`.
pub fn phi21<S: Analytic>(a: &S, b: &S, c: &S, x: &S, ctx: &QContext<S>, terms: usize) -> Result<S> {
    let mut sum = S::zero();
    let mut term = S::one();
    for n in 0..=terms {
        sum += &term;
        let qn = ctx.qpowi(n as i64);
        let den = (S::one() - c.clone() * &qn) * (S::one() - ctx.qpowi(n as i64 + 1));
        if den.is_zero() {
            return Err(Error::Pole(format!("2phi1 denominator at n = {n}")));
        }
        term = term * (S::one() - a.clone() * &qn) * (S::one() - b.clone() * &qn) / den * x;
    }
    Ok(sum)
}

/// `F(α,β;γ;x) = Γ_q(α)Γ_q(β)/Γ_q(γ) · ₂φ₁(q^α, q^β; q^γ; q, x)`, summed over `n ≤ terms`.
pub fn heine_f<S: Analytic>(alpha: &S, beta: &S, gamma: &S, x: &S, ctx: &QContext<S>, terms: usize) -> Result<S> {
    if let Some(n) = nonpositive_integer(gamma) {
        return Err(Error::Pole(format!("Heine F at gamma = {n}")));
    }
    let pre = gamma_q(alpha, ctx)? * gamma_q(beta, ctx)? / gamma_q(gamma, ctx)?;
    let phi = phi21(&ctx.qpow(alpha), &ctx.qpow(beta), &ctx.qpow(gamma), x, ctx, terms)?;
    Ok(pre * phi)
}

/// Functional equations at `points` seeded random arguments: `Γ_q(u+1) = [u]Γ_q(u)`,
/// `G_q(u+1) = Γ_q(u)G_q(u)`, `ϑ(u+1) = -ϑ(u) = ϑ(-u)`, `Θ_q(qx) = -Θ_q(x)/x`, `Θ_q(q/x) = Θ_q(x)`.
pub fn functional_equation_report<S: Analytic>(points: usize, seed: u64, ctx: &QContext<S>, tol: f64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = S::one();
    let mut res: Vec<(String, f64)> = Vec::new();
    for i in 0..points {
        let u = S::from_c64(rng.gen_range(-2.5..2.5), rng.gen_range(-1.0..1.0));
        let x = ctx.qpow(&S::from_c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let g0 = gamma_q(&u, ctx)?;
        let g1 = gamma_q(&(u.clone() + &one), ctx)?;
        res.push((format!("gamma {i}"), g1.rel_diff(&(ctx.qnumber(&u) * &g0))));
        let b1 = barnes_g_q(&(u.clone() + &one), ctx);
        res.push((format!("barnes {i}"), b1.rel_diff(&(g0 * barnes_g_q(&u, ctx)))));
        let t0 = theta(&u, ctx);
        res.push((format!("theta shift {i}"), theta(&(u.clone() + &one), ctx).rel_diff(&(-t0.clone()))));
        res.push((format!("theta odd {i}"), theta(&(-u.clone()), ctx).rel_diff(&(-t0))));
        let th = big_theta(&x, ctx)?;
        let thq = big_theta(&(ctx.q.clone() * &x), ctx)?;
        res.push((format!("Theta quasi-period {i}"), thq.rel_diff(&(-(th.clone() / &x)))));
        res.push((format!("Theta inversion {i}"), big_theta(&(ctx.q.clone() / &x), ctx)?.rel_diff(&th)));
    }
    let (w, r) = worst(res.iter().map(|(k, v)| (k.as_str(), *v)));
    Ok(Report::numeric("q-special-functional-equations", res.len(), r, tol)
        .witness(w)
        .param("q", ctx.q.to_decimal().0)
        .param("seed", seed)
        .param("bits", S::mantissa_bits())
        .trunc("cutoff", ctx.cutoff as u64))
}
