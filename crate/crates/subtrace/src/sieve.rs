//! The three sufficient criteria for (q, n) ∈ D_m, decided in exact arithmetic.
//!
//! Every comparison of the form q^{n/2−2} > R is squared to q^{n−4} > R², which is
//! rational on both sides. The modified sieve has a further q^{n/2} inside R; it is
//! cleared the same way (see [`check_modified_sieve`]).

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::cyclofactor::{CosetProfile, Factor};
use crate::ntheory::{log10_big, primes_below_pow2, theta_of_primes, w_bound_constant, Factorization};
use crate::par;
use crate::precise::Interval;
use crate::ser;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// S ≤ 0 or the positivity hypothesis fails
    Inapplicable,
    /// a factorization needed for the W-values is incomplete
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Basic,
    PrimeSieve,
    ModifiedSieve,
}

#[derive(Clone, Debug, Serialize)]
pub struct SieveReport {
    pub criterion: Criterion,
    pub verdict: Verdict,
    #[serde(serialize_with = "ser::opt_rational", skip_serializing_if = "Option::is_none")]
    pub s: Option<BigRational>,
    #[serde(serialize_with = "ser::opt_rational", skip_serializing_if = "Option::is_none")]
    pub m: Option<BigRational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_approx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_approx: Option<f64>,
    /// log10(lhs/rhs) of the unsquared inequality; positive iff it holds
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log10_margin: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SieveReport {
    fn new(criterion: Criterion, verdict: Verdict) -> Self {
        SieveReport { criterion, verdict, s: None, m: None, s_approx: None, m_approx: None, log10_margin: None, notes: Vec::new() }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

fn rat(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

fn big_rat(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    sign * 10f64.powf(log10_rat(&r.abs()))
}

/// log10 of a positive rational.
pub fn log10_rat(r: &BigRational) -> f64 {
    log10_big(r.numer().magnitude()) - log10_big(r.denom().magnitude())
}

fn q_pow_inv(q: &BigUint, d: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(q.pow(d)))
}

/// Σ 1/p over distinct primes, by a product tree; the result is already in lowest terms.
pub fn reciprocal_sum(primes: &[BigUint]) -> BigRational {
    fn go(ps: &[BigUint]) -> (BigUint, BigUint) {
        match ps.len() {
            0 => (BigUint::zero(), BigUint::one()),
            1 => (BigUint::one(), ps[0].clone()),
            n => {
                let (a, b) = go(&ps[..n / 2]);
                let (c, d) = go(&ps[n / 2..]);
                (a * &d + c * &b, b * d)
            }
        }
    }
    let (num, den) = go(primes);
    BigRational::new_raw(BigInt::from(num), BigInt::from(den))
}

fn recip(p: &BigUint) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(p.clone()))
}

/// Θ(g) = Π (1 − q^{−deg}) over the listed irreducible factors.
pub fn big_theta(q: &BigUint, factors: &[Factor]) -> BigRational {
    factors
        .iter()
        .fold(BigRational::one(), |acc, f| acc * (BigRational::one() - q_pow_inv(q, f.degree)))
}

// ------------------------------------------------------------------ basic

/// q^{n/2−2} > 2m·W(q^n−1)²·W(L)·W(x^n−1), decided as q^{n−4} > RHS².
pub fn check_basic(q: &BigUint, n: u64, m: u64, w_qn: &BigUint, w_l: &BigUint, w_xn: &BigUint) -> SieveReport {
    let rhs = BigUint::from(2 * m) * w_qn * w_qn * w_l * w_xn;
    let lhs2 = lhs_squared(q, n);
    let mut rep = SieveReport::new(Criterion::Basic, verdict_of(lhs2.as_ref().map(|l| l > &big_rat(&(&rhs * &rhs))).unwrap_or(false)));
    rep.log10_margin = Some((n as f64 / 2.0 - 2.0) * log10_big(q) - log10_big(&rhs));
    rep
}

/// [`check_basic`] from a factorization and coset profile; incomplete factorizations give Indeterminate.
pub fn check_basic_pair(q: &BigUint, n: u64, m: u64, fact: &Factorization, profile: &CosetProfile) -> SieveReport {
    if !fact.complete {
        let mut r = SieveReport::new(Criterion::Basic, Verdict::Indeterminate);
        r.notes.push(format!("unfactored cofactor {}", fact.cofactor));
        return r;
    }
    let w_qn = fact.big_w().expect("complete");
    let w_xn = profile.w_xn();
    let w_l = &w_xn >> 1u32;
    check_basic(q, n, m, &w_qn, &w_l, &w_xn)
}

/// q^{n−4} as a rational (n < 4 gives a fraction).
fn lhs_squared(q: &BigUint, n: u64) -> Option<BigRational> {
    let e = n as i64 - 4;
    let qq = BigInt::from(q.clone());
    Some(if e >= 0 {
        BigRational::from_integer(qq.pow(e as u32))
    } else {
        BigRational::new(BigInt::one(), qq.pow((-e) as u32))
    })
}

fn verdict_of(holds: bool) -> Verdict {
    if holds {
        Verdict::Holds
    } else {
        Verdict::Fails
    }
}

// ------------------------------------------------------------------ prime sieve

/// Kept and sieved parts for the prime sieve. Factors are named by coset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SieveChoice {
    #[serde(serialize_with = "ser::big_vec")]
    pub kept_l: Vec<BigUint>,
    #[serde(serialize_with = "ser::big_vec")]
    pub sieved_primes: Vec<BigUint>,
    pub kept_g: Vec<Factor>,
    pub sieved_g: Vec<Factor>,
    pub kept_gp: Vec<Factor>,
    pub sieved_gp: Vec<Factor>,
}

impl SieveChoice {
    /// Keeps everything: l = rad(q^n−1), g = L, g′ = x^n−1.
    pub fn keep_all(primes: &[BigUint], profile: &CosetProfile) -> SieveChoice {
        SieveChoice {
            kept_l: primes.to_vec(),
            sieved_primes: Vec::new(),
            kept_g: profile.l_factors(),
            sieved_g: Vec::new(),
            kept_gp: profile.factors(),
            sieved_gp: Vec::new(),
        }
    }

    /// Keeps the first `i` primes, factors of L of degree ≤ dg and of x^n−1 of degree ≤ dgp.
    pub fn threshold(primes: &[BigUint], profile: &CosetProfile, i: usize, dg: u32, dgp: u32) -> SieveChoice {
        let (kept_g, sieved_g) = profile.l_factors().into_iter().partition(|f| f.degree <= dg);
        let (kept_gp, sieved_gp) = profile.factors().into_iter().partition(|f| f.degree <= dgp);
        SieveChoice {
            kept_l: primes[..i].to_vec(),
            sieved_primes: primes[i..].to_vec(),
            kept_g,
            sieved_g,
            kept_gp,
            sieved_gp,
        }
    }

    /// Builds a choice from explicit kept sets; None when they are not subsets of the radicals.
    pub fn from_kept(primes: &[BigUint], profile: &CosetProfile, l: &[BigUint], g: &[Factor], gp: &[Factor]) -> Option<SieveChoice> {
        if l.iter().any(|p| !primes.contains(p)) || g.iter().any(|f| f.rep == 0) {
            return None;
        }
        let lf = profile.l_factors();
        let xf = profile.factors();
        if g.iter().any(|f| !lf.contains(f)) || gp.iter().any(|f| !xf.contains(f)) {
            return None;
        }
        Some(SieveChoice {
            kept_l: primes.iter().filter(|p| l.contains(p)).cloned().collect(),
            sieved_primes: primes.iter().filter(|p| !l.contains(p)).cloned().collect(),
            kept_g: lf.iter().filter(|f| g.contains(f)).copied().collect(),
            sieved_g: lf.iter().filter(|f| !g.contains(f)).copied().collect(),
            kept_gp: xf.iter().filter(|f| gp.contains(f)).copied().collect(),
            sieved_gp: xf.iter().filter(|f| !gp.contains(f)).copied().collect(),
        })
    }

    /// Kept and sieved parts are disjoint and reconstruct the radicals.
    pub fn is_valid_for(&self, primes: &[BigUint], profile: &CosetProfile) -> bool {
        let mut all: Vec<BigUint> = self.kept_l.iter().chain(&self.sieved_primes).cloned().collect();
        all.sort();
        let mut lf: Vec<Factor> = self.kept_g.iter().chain(&self.sieved_g).copied().collect();
        lf.sort();
        let mut xf: Vec<Factor> = self.kept_gp.iter().chain(&self.sieved_gp).copied().collect();
        xf.sort();
        let mut pl = profile.l_factors();
        pl.sort();
        let mut px = profile.factors();
        px.sort();
        all == primes && lf == pl && xf == px
    }

    pub fn l_value(&self) -> BigUint {
        self.kept_l.iter().product()
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.sieved_primes.len(), self.sieved_g.len(), self.sieved_gp.len())
    }
}

/// S = 1 − 2Σ1/p_i − Σq^{−deg g_j} − Σq^{−deg g′_j}, and M = (2r+s+t−1)/S + 2 when S > 0.
pub fn prime_sieve_quantities(choice: &SieveChoice, q: &BigUint) -> (BigRational, Option<BigRational>) {
    let mut s = BigRational::one() - reciprocal_sum(&choice.sieved_primes) * rat(2);
    for f in choice.sieved_g.iter().chain(&choice.sieved_gp) {
        s -= q_pow_inv(q, f.degree);
    }
    let (r, ss, t) = choice.counts();
    let m = s.is_positive().then(|| rat(2 * r as i64 + ss as i64 + t as i64 - 1) / &s + rat(2));
    (s, m)
}

/// S and M from bare data: sieved primes and sieved factor degrees.
pub fn s_and_m(sieved_primes: &[BigUint], sieved_degrees: &[u32], q: &BigUint) -> (BigRational, Option<BigRational>) {
    let mut s = BigRational::one() - reciprocal_sum(sieved_primes) * rat(2);
    for &d in sieved_degrees {
        s -= q_pow_inv(q, d);
    }
    let k = 2 * sieved_primes.len() as i64 + sieved_degrees.len() as i64 - 1;
    let m = s.is_positive().then(|| rat(k) / &s + rat(2));
    (s, m)
}

/// 2m·W(l)²·W(g)·W(g′)·M.
fn prime_sieve_rhs(choice: &SieveChoice, m_param: u64, big_m: &BigRational) -> BigRational {
    let w = BigUint::from(2 * m_param) << (2 * choice.kept_l.len() + choice.kept_g.len() + choice.kept_gp.len());
    big_rat(&w) * big_m
}

/// q^{n/2−2} > 2m·W(l)²·W(g)·W(g′)·M.
pub fn check_prime_sieve(choice: &SieveChoice, q: &BigUint, n: u64, m: u64) -> SieveReport {
    let (s, big_m) = prime_sieve_quantities(choice, q);
    let mut rep = SieveReport::new(Criterion::PrimeSieve, Verdict::Inapplicable);
    rep.s_approx = Some(rat_to_f64(&s));
    rep.s = Some(s);
    let Some(big_m) = big_m else {
        rep.notes.push("S <= 0".into());
        return rep;
    };
    let rhs = prime_sieve_rhs(choice, m, &big_m);
    let lhs2 = lhs_squared(q, n).unwrap();
    rep.verdict = verdict_of(lhs2 > &rhs * &rhs);
    rep.log10_margin = Some((n as f64 / 2.0 - 2.0) * log10_big(q) - log10_rat(&rhs));
    rep.m_approx = Some(rat_to_f64(&big_m));
    rep.m = Some(big_m);
    rep
}

/// Largest number of kept-prime prefix sizes tried by [`search_choice`].
pub const KEEP_PREFIX_CAP: usize = 64;

/// Searches keep-prefixes of the ascending primes and degree thresholds for g ⊆ L and
/// g′ ⊆ x^n−1; returns the certifying choice with the smallest right-hand side.
pub fn search_choice(q: &BigUint, n: u64, m: u64, profile: &CosetProfile, group_fact: &Factorization) -> Option<(SieveChoice, SieveReport)> {
    if !group_fact.complete {
        return None;
    }
    let primes = group_fact.primes();
    let lhs2 = lhs_squared(q, n).unwrap();
    let mut degs: Vec<u32> = profile.degree_profile();
    degs.push(0);
    degs.sort_unstable();
    degs.dedup();
    let lf = profile.l_factors();
    let xf = profile.factors();
    // suffix sums of 2/p
    let mut suffix = vec![BigRational::zero(); primes.len() + 1];
    for i in (0..primes.len()).rev() {
        suffix[i] = &suffix[i + 1] + recip(&primes[i]) * rat(2);
    }
    let side = |fs: &[Factor], d: u32| -> (BigRational, usize, usize) {
        let sieved: Vec<&Factor> = fs.iter().filter(|f| f.degree > d).collect();
        let sum = sieved.iter().fold(BigRational::zero(), |a, f| a + q_pow_inv(q, f.degree));
        (sum, fs.len() - sieved.len(), sieved.len())
    };
    let g_sides: Vec<_> = degs.iter().map(|&d| side(&lf, d)).collect();
    let gp_sides: Vec<_> = degs.iter().map(|&d| side(&xf, d)).collect();
    let top = primes.len().min(KEEP_PREFIX_CAP);
    let best_per_i: Vec<Option<(BigRational, usize, usize, usize)>> = par::map_range(top + 1, |i| {
        let r = primes.len() - i;
        let mut best: Option<(BigRational, usize, usize, usize)> = None;
        for (a, (gs, gk, s)) in g_sides.iter().enumerate() {
            for (b, (gps, gpk, t)) in gp_sides.iter().enumerate() {
                let sv = BigRational::one() - &suffix[i] - gs - gps;
                if !sv.is_positive() {
                    continue;
                }
                let big_m = rat((2 * r + s + t) as i64 - 1) / &sv + rat(2);
                let w = BigUint::from(2 * m) << (2 * i + gk + gpk);
                let rhs = big_rat(&w) * big_m;
                if lhs2 > &rhs * &rhs && best.as_ref().is_none_or(|bb| rhs < bb.0) {
                    best = Some((rhs, i, a, b));
                }
            }
        }
        best
    });
    let best = best_per_i
        .into_iter()
        .flatten()
        .reduce(|x, y| if y.0 < x.0 { y } else { x })?;
    let (_, i, a, b) = best;
    let choice = SieveChoice::threshold(&primes, profile, i, degs[a], degs[b]);
    let rep = check_prime_sieve(&choice, q, n, m);
    debug_assert!(rep.holds());
    Some((choice, rep))
}

// ------------------------------------------------------------------ modified sieve

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModifiedMode {
    /// θ(g′) in the denominator, evaluated on the norm q^{deg g′}
    Printed,
    /// Θ(g′) in the denominator
    Corrected,
}

/// rad(q^n−1) = k·P·T, rad(L) = g·G·H, rad(x^n−1) = g′·G′·H′.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModifiedPartition {
    #[serde(serialize_with = "ser::big_vec")]
    pub k_primes: Vec<BigUint>,
    #[serde(serialize_with = "ser::big_vec")]
    pub p_primes: Vec<BigUint>,
    #[serde(serialize_with = "ser::big_vec")]
    pub t_primes: Vec<BigUint>,
    pub g: Vec<Factor>,
    pub big_g: Vec<Factor>,
    pub h: Vec<Factor>,
    pub gp: Vec<Factor>,
    pub big_gp: Vec<Factor>,
    pub hp: Vec<Factor>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModifiedQuantities {
    pub v: usize,
    pub r: usize,
    pub s_count: usize,
    pub t: usize,
    pub w: usize,
    pub u: usize,
    #[serde(serialize_with = "ser::rational")]
    pub s: BigRational,
    #[serde(serialize_with = "ser::rational")]
    pub gamma1: BigRational,
    #[serde(serialize_with = "ser::rational")]
    pub gamma2: BigRational,
    #[serde(serialize_with = "ser::rational")]
    pub gamma3: BigRational,
    #[serde(serialize_with = "ser::rational")]
    pub positivity: BigRational,
}

impl ModifiedPartition {
    /// The prime-sieve choice with T, H, H′ empty.
    pub fn from_choice(c: &SieveChoice) -> ModifiedPartition {
        ModifiedPartition {
            k_primes: c.kept_l.clone(),
            p_primes: c.sieved_primes.clone(),
            t_primes: Vec::new(),
            g: c.kept_g.clone(),
            big_g: c.sieved_g.clone(),
            h: Vec::new(),
            gp: c.kept_gp.clone(),
            big_gp: c.sieved_gp.clone(),
            hp: Vec::new(),
        }
    }

    pub fn quantities(&self, q: &BigUint) -> ModifiedQuantities {
        let mut s = BigRational::one() - reciprocal_sum(&self.p_primes) * rat(2);
        for f in self.big_g.iter().chain(&self.big_gp) {
            s -= q_pow_inv(q, f.degree);
        }
        let gamma1 = reciprocal_sum(&self.t_primes);
        let gamma2 = self.hp.iter().fold(BigRational::zero(), |a, f| a + q_pow_inv(q, f.degree));
        let gamma3 = self.h.iter().fold(BigRational::zero(), |a, f| a + q_pow_inv(q, f.degree));
        let th = theta_of_primes(&self.k_primes);
        let positivity = &s * &th * &th * big_theta(q, &self.g) * big_theta(q, &self.gp) - (&gamma1 * rat(2) + &gamma2 + &gamma3);
        ModifiedQuantities {
            v: self.t_primes.len(),
            r: self.p_primes.len(),
            s_count: self.big_g.len(),
            t: self.big_gp.len(),
            w: self.h.len(),
            u: self.hp.len(),
            s,
            gamma1,
            gamma2,
            gamma3,
            positivity,
        }
    }
}

pub const PAIRING_NOTE: &str = "(m+1)(v+gamma1+w+gamma2) term evaluated as printed: w is paired with gamma2";

/// The modified prime sieve. With X = q^{n/2}, the displayed inequality reads
/// X/q² > 2m(A + B + C/(2mX))/D, i.e. D·q^n − C·q² > 2m(A+B)·q²·X for D > 0,
/// which is squared once more to stay rational.
pub fn check_modified_sieve(part: &ModifiedPartition, p: u64, q: &BigUint, n: u64, m: u64, mode: ModifiedMode) -> SieveReport {
    let qt = part.quantities(q);
    let mut rep = SieveReport::new(Criterion::ModifiedSieve, Verdict::Inapplicable);
    rep.s_approx = Some(rat_to_f64(&qt.s));
    rep.s = Some(qt.s.clone());
    rep.notes.push(PAIRING_NOTE.into());
    if !qt.positivity.is_positive() {
        rep.notes.push("positivity hypothesis fails".into());
        return rep;
    }
    let (a, b, c, d) = modified_terms(part, &qt, p, q, m, mode);
    if !d.is_positive() {
        rep.notes.push("denominator is not positive".into());
        return rep;
    }
    let qn = big_rat(&q.pow(n as u32));
    let q2 = big_rat(&(q * q));
    let lv = &d * &qn - &c * &q2;
    let rv = (&a + &b) * rat(2 * m as i64) * &q2;
    let holds = lv.is_positive() && &lv * &lv > &rv * &rv * &qn;
    rep.verdict = verdict_of(holds);
    rep.log10_margin = Some(if lv.is_positive() {
        log10_rat(&lv) - log10_rat(&rv) - n as f64 / 2.0 * log10_big(q)
    } else {
        f64::NEG_INFINITY
    });
    rep
}

fn modified_terms(part: &ModifiedPartition, qt: &ModifiedQuantities, p: u64, q: &BigUint, m: u64, mode: ModifiedMode) -> (BigRational, BigRational, BigRational, BigRational) {
    let th_k = theta_of_primes(&part.k_primes);
    let big_th_g = big_theta(q, &part.g);
    let big_th_gp = big_theta(q, &part.gp);
    let w_exp = 2 * part.k_primes.len() + part.g.len() + part.gp.len();
    let ws = big_rat(&(BigUint::one() << w_exp));
    let (v, r, s, t, w, u) = (qt.v as i64, qt.r as i64, qt.s_count as i64, qt.t as i64, qt.w as i64, qt.u as i64);
    let mm = m as i64;
    let (g1, g2, g3) = (&qt.gamma1, &qt.gamma2, &qt.gamma3);
    let a = &th_k * &th_k * &big_th_g * &big_th_gp * ws * (rat(2 * r + s + t - 1) + &qt.s * rat(2));
    let b = (rat(v) - g1 + rat(2 * u) - g2 * rat(2)) / rat(2) + (rat(3 * v) - g1 + rat(w + u)) / rat(2 * mm);
    let c = (rat(v) + g1 + rat(w) + g2) * rat(mm + 1) + (rat(u) - g2);
    let theta_gp = match mode {
        ModifiedMode::Corrected => big_th_gp,
        ModifiedMode::Printed if part.gp.is_empty() => BigRational::one(),
        ModifiedMode::Printed => BigRational::new(BigInt::from(p - 1), BigInt::from(p)),
    };
    let d = &qt.s * &th_k * &th_k * &big_th_g * theta_gp - (g1 * rat(2) + g2 + g3);
    (a, b, c, d)
}

/// How the partition search carves up the radicals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionSpace {
    /// g, g′ = factors of degree ≤ δ1; H, H′ = degree > δ2 (δ1 ≤ δ2)
    DegreeThreshold,
    /// g, G, H as consecutive runs of the (degree, coset)-sorted factors, any lengths
    FactorPrefix,
}

/// Factor-list length above which [`PartitionSpace::FactorPrefix`] falls back to degree cuts.
pub const FACTOR_PREFIX_CAP: usize = 24;

fn cut_points(fs: &[Factor], space: PartitionSpace) -> Vec<usize> {
    let mut out = vec![0];
    for i in 1..=fs.len() {
        if space == PartitionSpace::FactorPrefix && fs.len() <= FACTOR_PREFIX_CAP || i == fs.len() || fs[i].degree != fs[i - 1].degree {
            out.push(i);
        }
    }
    out
}

/// Best partition of the space by reported margin, with its report; certification is
/// decided exactly for the returned partition.
pub fn search_modified(p: u64, q: &BigUint, n: u64, m: u64, profile: &CosetProfile, group_fact: &Factorization, mode: ModifiedMode, space: PartitionSpace) -> Option<(ModifiedPartition, SieveReport)> {
    if !group_fact.complete {
        return None;
    }
    let primes = group_fact.primes();
    let om = primes.len();
    let mut lf = profile.l_factors();
    lf.sort();
    let mut xf = profile.factors();
    xf.sort();
    let cl = cut_points(&lf, space);
    let cx = cut_points(&xf, space);
    let pairs: Vec<(usize, usize)> = (0..=om).flat_map(|i| (0..=om - i).map(move |v| (i, v))).collect();
    let results = par::map_collect(pairs, |(i, v)| {
        let mut best: Option<(f64, ModifiedPartition, SieveReport)> = None;
        for &a in &cl {
            for &b in cl.iter().filter(|&&b| b >= a) {
                for &a2 in &cx {
                    for &b2 in cx.iter().filter(|&&b2| b2 >= a2) {
                        let part = ModifiedPartition {
                            k_primes: primes[..i].to_vec(),
                            p_primes: primes[i..om - v].to_vec(),
                            t_primes: primes[om - v..].to_vec(),
                            g: lf[..a].to_vec(),
                            big_g: lf[a..b].to_vec(),
                            h: lf[b..].to_vec(),
                            gp: xf[..a2].to_vec(),
                            big_gp: xf[a2..b2].to_vec(),
                            hp: xf[b2..].to_vec(),
                        };
                        let rep = check_modified_sieve(&part, p, q, n, m, mode);
                        let Some(mg) = rep.log10_margin else { continue };
                        if best.as_ref().is_none_or(|bb| mg > bb.0) {
                            best = Some((mg, part, rep));
                        }
                    }
                }
            }
        }
        best
    });
    results
        .into_iter()
        .flatten()
        .reduce(|x, y| if y.0 > x.0 { y } else { x })
        .map(|(_, part, rep)| (part, rep))
}

// ------------------------------------------------------------------ large-n bound

/// Upper cap on n for [`asymptotic_n_threshold`].
pub const THRESHOLD_N_CAP: u64 = 5000;
/// The bound must also hold at every n up to this many steps past the threshold.
pub const THRESHOLD_LOOKAHEAD: u64 = 50;

/// Exact test of q^{n/2−2} > 2m·C²·q^{2n/r}·2^{2n−1}, q = p^k, C the worst case
/// Π_{ℓ<2^r} 2/ℓ^{1/r}. With r = a/b the 2a-th power reads
/// q^{a(n−4)}·(Πℓ)^{4b} > (2m)^{2a}·2^{4aπ}·q^{4nb}·2^{2a(2n−1)}.
pub struct LargeNBound {
    q: BigUint,
    a: u32,
    b: u32,
    m: u64,
    primorial_4b: BigUint,
    pi: u32,
}

impl LargeNBound {
    pub fn new(p: u64, k: u32, r: &BigRational, m: u64) -> LargeNBound {
        let a = r.numer().to_u32().expect("small r");
        let b = r.denom().to_u32().expect("small r");
        let primes = primes_below_pow2(r);
        let prod: BigUint = primes.iter().map(|&p| BigUint::from(p)).product();
        LargeNBound { q: BigUint::from(p).pow(k), a, b, m, primorial_4b: prod.pow(4 * b), pi: primes.len() as u32 }
    }

    pub fn holds(&self, n: u64) -> bool {
        let n = n as u32;
        let (a, b) = (self.a, self.b);
        // move q^{4nb} across: q^{a(n−4)} vs q^{4nb}
        let lq = a as i64 * (n as i64 - 4);
        let rq = 4 * n as i64 * b as i64;
        let (lqe, rqe) = if lq >= rq { ((lq - rq) as u32, 0) } else { (0, (rq - lq) as u32) };
        let lhs = self.q.pow(lqe) * &self.primorial_4b;
        let two_exp = 4 * a as u64 * self.pi as u64 + 2 * a as u64 * (2 * n as u64 - 1);
        let rhs = (BigUint::from(2 * self.m).pow(2 * a) * self.q.pow(rqe)) << two_exp;
        lhs > rhs
    }

    /// The inequality's log margin (natural log), as an outward-rounded interval.
    pub fn margin(&self, n: u64, r: &BigRational, bits: u32) -> Interval {
        let c = w_bound_constant(r, bits);
        let lnq = Interval::from_int(&BigInt::from(self.q.clone()), bits).ln();
        let nn = Interval::from_u64(n, bits);
        let half = Interval::from_rational(&BigRational::new(1.into(), 2.into()), bits);
        let lhs = nn.mul(&half).sub(&Interval::from_u64(2, bits)).mul(&lnq);
        let two_n_over_r = Interval::from_rational(&(BigRational::from_integer((2 * n).into()) / r), bits);
        let rhs = Interval::from_u64(2 * self.m, bits)
            .ln()
            .add(&c.ln().mul_int(2))
            .add(&two_n_over_r.mul(&lnq))
            .add(&Interval::ln2(bits).mul_int(2 * n as i64 - 1));
        lhs.sub(&rhs)
    }
}

/// Smallest n ≥ 5 at which the large-n bound holds for n..=n+50; None below the cap.
pub fn asymptotic_n_threshold(p: u64, k: u32, r: &BigRational, m: u64) -> Option<u64> {
    let bound = LargeNBound::new(p, k, r, m);
    let mut run_start = None;
    for n in 5..=THRESHOLD_N_CAP + THRESHOLD_LOOKAHEAD {
        if bound.holds(n) {
            let start = *run_start.get_or_insert(n);
            if n - start == THRESHOLD_LOOKAHEAD {
                return Some(start);
            }
        } else {
            run_start = None;
        }
    }
    None
}

// ------------------------------------------------------------------ primes-window constants

/// A prime-sieve bound over a window of possible ω(q^n−1): l = product of the `keep`
/// smallest primes, the sieved primes the next `omega_max − keep` primes (the worst case).
#[derive(Clone, Debug, Serialize)]
pub struct WindowBound {
    pub keep: usize,
    pub omega_max: usize,
    pub w_rest_exp: u32,
    #[serde(serialize_with = "ser::rational")]
    pub s: BigRational,
    #[serde(serialize_with = "ser::rational")]
    pub m: BigRational,
    /// 2m·M·W(l)²·2^{w_rest_exp}
    #[serde(serialize_with = "ser::rational")]
    pub bound: BigRational,
    pub s_approx: f64,
    pub m_approx: f64,
    pub bound_log10: f64,
}

/// `w_rest_exp` is log2 of the bound on W(g)W(g′) (2^13 for n ≤ 7).
pub fn window_bound(keep: usize, omega_max: usize, w_rest_exp: u32, m: u64) -> WindowBound {
    let primes: Vec<BigUint> = crate::ntheory::first_primes(omega_max).into_iter().map(BigUint::from).collect();
    let (s, big_m) = s_and_m(&primes[keep..], &[], &BigUint::one());
    let big_m = big_m.expect("positive S");
    let w = BigUint::from(2 * m) << (2 * keep as u32 + w_rest_exp);
    let bound = big_rat(&w) * &big_m;
    WindowBound {
        keep,
        omega_max,
        w_rest_exp,
        s_approx: rat_to_f64(&s),
        m_approx: rat_to_f64(&big_m),
        bound_log10: log10_rat(&bound),
        s,
        m: big_m,
        bound,
    }
}

/// Smallest ω with primorial(ω) > x: any integer with at least that many prime factors exceeds x.
pub fn omega_forcing(x: &BigRational) -> usize {
    let mut prod = BigUint::one();
    for (i, p) in crate::ntheory::first_primes(100_000).into_iter().enumerate() {
        prod *= p;
        if big_rat(&prod) > *x {
            return i + 1;
        }
    }
    usize::MAX
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclofactor::coset_profile;
    use crate::hints::HintSet;
    use crate::ntheory::{factor_group_order, DEFAULT_BUDGET};

    fn setup(k: u32, n: u64) -> (BigUint, CosetProfile, Factorization) {
        let q = BigUint::from(7u32).pow(k);
        let pr = coset_profile(7, &q, n);
        let f = factor_group_order(7, k, n as u32, &HintSet::builtin(), DEFAULT_BUDGET);
        (q, pr, f)
    }

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn degenerate_quantities() {
        let (q, pr, f) = setup(1, 11);
        let c = SieveChoice::keep_all(&f.primes(), &pr);
        let (s, m) = prime_sieve_quantities(&c, &q);
        assert_eq!((s, m), (BigRational::one(), Some(BigRational::one())));
        // with all W = 1: 7^{1/2} > 2m holds for m = 1 only
        let one = BigUint::one();
        assert!(check_basic(&BigUint::from(7u32), 5, 1, &one, &one, &one).holds());
        assert!(!check_basic(&BigUint::from(7u32), 5, 2, &one, &one, &one).holds());
    }

    #[test]
    fn empty_sieve_matches_basic() {
        for k in 1..=3u32 {
            for n in 5..=24u64 {
                let (q, pr, f) = setup(k, n);
                let c = SieveChoice::keep_all(&f.primes(), &pr);
                let a = check_prime_sieve(&c, &q, n, 2).verdict;
                let b = check_basic_pair(&q, n, 2, &f, &pr).verdict;
                assert_eq!(a, b, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn s_decreases_when_sieving_more() {
        let (q, pr, f) = setup(1, 30);
        let primes = f.primes();
        let mut prev = None;
        for i in (0..=primes.len()).rev() {
            let (s, m) = prime_sieve_quantities(&SieveChoice::threshold(&primes, &pr, i, 4, 4), &q);
            assert!(s <= BigRational::one());
            if let Some(p) = prev {
                assert!(s < p);
            }
            if let Some(m) = m {
                if primes.len() - i >= 1 {
                    assert!(m >= BigRational::one());
                }
            }
            prev = Some(s);
        }
    }

    #[test]
    fn table_rows_match_search() {
        let (q, pr, f) = setup(1, 11);
        let primes = f.primes();
        let c = SieveChoice::from_kept(&primes, &pr, &[BigUint::from(2u32)], &[], &[]).unwrap();
        assert!(c.is_valid_for(&primes, &pr));
        assert!(check_prime_sieve(&c, &q, 11, 2).holds());
        let (best, rep) = search_choice(&q, 11, 2, &pr, &f).unwrap();
        assert!(rep.holds());
        assert!(check_prime_sieve(&best, &q, 11, 2).holds());
        let (q6, pr6, f6) = setup(1, 6);
        assert!(search_choice(&q6, 6, 2, &pr6, &f6).is_none());
    }

    #[test]
    fn monotone_in_n() {
        // same W-structure, growing q-power: (q, n) with n ≡ fixed cosets is hard to build,
        // so compare the same choice evaluated at larger n directly
        let (q, pr, f) = setup(1, 11);
        let c = SieveChoice::from_kept(&f.primes(), &pr, &[BigUint::from(2u32)], &[], &[]).unwrap();
        for n in 11..40 {
            assert!(check_prime_sieve(&c, &q, n, 2).holds());
        }
    }

    #[test]
    fn modified_reduces_to_prime_sieve() {
        let mut checked = 0;
        for &(k, n) in &[(1u32, 11u64), (1, 14), (1, 15), (1, 19), (1, 20), (2, 9), (2, 10), (3, 8), (1, 6), (1, 8), (2, 8), (1, 30), (3, 9), (4, 8), (1, 16), (2, 12), (1, 13), (2, 6), (1, 12), (5, 8)] {
            let (q, pr, f) = setup(k, n);
            let primes = f.primes();
            for i in [0usize, 1, 2] {
                let i = i.min(primes.len());
                let c = SieveChoice::threshold(&primes, &pr, i, 1, 1);
                let a = check_prime_sieve(&c, &q, n, 2);
                let b = check_modified_sieve(&ModifiedPartition::from_choice(&c), 7, &q, n, 2, ModifiedMode::Corrected);
                assert_eq!(a.verdict, b.verdict, "k={k} n={n} i={i}");
                checked += 1;
            }
        }
        assert!(checked >= 20);
    }

    #[test]
    fn m_below_two_n_prime() {
        for k in 1..=2u32 {
            let q = BigUint::from(7u32).pow(k);
            for n in 5..=40u64 {
                let pr = coset_profile(7, &q, n);
                if pr.e_order <= 2 || ((&q - 1u32) % pr.n_prime).is_zero() {
                    continue;
                }
                let e = pr.e_order as u32;
                // l = q^n−1; each degree-e factor is sieved from both L and x^n−1
                let degs: Vec<u32> = pr.factors().iter().filter(|f| f.degree == e).flat_map(|f| [f.degree, f.degree]).collect();
                let (_, m) = s_and_m(&[], &degs, &q);
                assert!(m.unwrap() < BigRational::from_integer((2 * pr.n_prime).into()), "k={k} n={n}");
            }
        }
    }

    #[test]
    fn threshold_rows() {
        assert_eq!(asymptotic_n_threshold(7, 3, &r(10, 1), 2), Some(149));
        assert_eq!(asymptotic_n_threshold(7, 9, &r(17, 2), 2), Some(18));
        let b = LargeNBound::new(7, 3, &r(10, 1), 2);
        assert!(b.margin(149, &r(10, 1), 256).is_positive());
        assert!(b.margin(148, &r(10, 1), 256).is_negative());
    }

    #[test]
    fn window_constants() {
        let w = window_bound(17, 156, 13, 2);
        assert!(w.s > r(238003, 10_000_000));
        assert!(w.m < r(11640489, 1000));
        let big = window_bound(88, 2827, 13, 2);
        assert!(big.s > r(44306, 10_000_000));
        assert!(big.m < BigRational::from_integer(1_240_000.into()));
    }
}
