//! Integer number theory: primality, factoring, multiplicative functions,
//! cyclotomic values and the W-bound constants.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::hints::HintSet;
use crate::precise::Interval;

/// Trial division bound used before the randomized stage.
pub const TRIAL_BOUND: u64 = 1_000_000;
/// Default iteration budget for a single Brent rho run.
pub const DEFAULT_BUDGET: u64 = 1 << 21;
const RHO_SEED: u64 = 0x5ab7_2ace_0f1e_1d5e;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum NtError {
    #[error("factorization of {0} is incomplete (cofactor {1})")]
    Incomplete(String, String),
    #[error("{0} does not divide {1}")]
    NotDivisor(String, String),
}

/// Exact prime-power decomposition, possibly with an unfactored cofactor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub value: BigUint,
    pub factors: Vec<(BigUint, u32)>,
    pub complete: bool,
    pub cofactor: BigUint,
    /// Hints that failed verification (non-divisors or composites).
    pub rejected_hints: Vec<BigUint>,
}

impl Factorization {
    pub fn one() -> Self {
        Factorization {
            value: BigUint::one(),
            factors: Vec::new(),
            complete: true,
            cofactor: BigUint::one(),
            rejected_hints: Vec::new(),
        }
    }

    /// Builds a complete factorization from prime powers (primes are trusted).
    pub fn from_prime_powers(pp: &[(BigUint, u32)]) -> Self {
        let mut map: BTreeMap<BigUint, u32> = BTreeMap::new();
        for (p, e) in pp {
            if *e > 0 {
                *map.entry(p.clone()).or_insert(0) += e;
            }
        }
        let factors: Vec<_> = map.into_iter().collect();
        let value = factors
            .iter()
            .fold(BigUint::one(), |acc, (p, e)| acc * p.pow(*e));
        Factorization { value, factors, complete: true, cofactor: BigUint::one(), rejected_hints: Vec::new() }
    }

    pub fn from_u64(n: u64) -> Self {
        factorize(&BigUint::from(n), &[], DEFAULT_BUDGET)
    }

    fn require(&self) -> Result<(), NtError> {
        if self.complete {
            Ok(())
        } else {
            Err(NtError::Incomplete(self.value.to_string(), self.cofactor.to_string()))
        }
    }

    pub fn primes(&self) -> Vec<BigUint> {
        self.factors.iter().map(|(p, _)| p.clone()).collect()
    }

    pub fn mobius(&self) -> Result<i32, NtError> {
        self.require()?;
        if self.factors.iter().any(|(_, e)| *e >= 2) {
            return Ok(0);
        }
        Ok(if self.factors.len() % 2 == 0 { 1 } else { -1 })
    }

    pub fn euler_phi(&self) -> Result<BigUint, NtError> {
        self.require()?;
        Ok(self.factors.iter().fold(BigUint::one(), |acc, (p, e)| {
            acc * p.pow(e - 1) * (p - 1u32)
        }))
    }

    pub fn omega(&self) -> Result<usize, NtError> {
        self.require()?;
        Ok(self.factors.len())
    }

    pub fn big_w(&self) -> Result<BigUint, NtError> {
        Ok(BigUint::one() << self.omega()?)
    }

    /// θ(n) = φ(n)/n, reduced.
    pub fn theta(&self) -> Result<BigRational, NtError> {
        self.require()?;
        Ok(theta_of_primes(&self.primes()))
    }

    /// Merges two factorizations of coprime or overlapping values into one of the product.
    pub fn merge(&self, other: &Factorization) -> Factorization {
        let mut map: BTreeMap<BigUint, u32> = BTreeMap::new();
        for (p, e) in self.factors.iter().chain(other.factors.iter()) {
            *map.entry(p.clone()).or_insert(0) += e;
        }
        let mut rejected = self.rejected_hints.clone();
        for h in &other.rejected_hints {
            if !rejected.contains(h) {
                rejected.push(h.clone());
            }
        }
        Factorization {
            value: &self.value * &other.value,
            factors: map.into_iter().collect(),
            complete: self.complete && other.complete,
            cofactor: &self.cofactor * &other.cofactor,
            rejected_hints: rejected,
        }
    }

    /// Checks the reassembly invariant.
    pub fn is_consistent(&self) -> bool {
        let prod = self
            .factors
            .iter()
            .fold(self.cofactor.clone(), |acc, (p, e)| acc * p.pow(*e));
        let increasing = self.factors.windows(2).all(|w| w[0].0 < w[1].0);
        prod == self.value
            && increasing
            && self.factors.iter().all(|(p, e)| *e >= 1 && is_prime(p))
            && (self.complete == self.cofactor.is_one())
    }
}

/// θ of a squarefree product given by its primes.
pub fn theta_of_primes(primes: &[BigUint]) -> BigRational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for p in primes {
        let p = BigInt::from(p.clone());
        num *= &p - 1;
        den *= p;
    }
    BigRational::new(num, den)
}

// ---------------------------------------------------------------- primes

pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}

fn trial_primes() -> &'static [u64] {
    static P: OnceLock<Vec<u64>> = OnceLock::new();
    P.get_or_init(|| primes_up_to(TRIAL_BOUND))
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut bound = 64u64.max((count as f64 * ((count as f64).ln() + (count as f64).ln().ln() + 2.0)) as u64);
    loop {
        let ps = primes_up_to(bound);
        if ps.len() >= count {
            return ps[..count].to_vec();
        }
        bound *= 2;
    }
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod_u64(r, b, m);
        }
        b = mul_mod_u64(b, b, m);
        e >>= 1;
    }
    r
}

const MR_BASES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'outer: for &a in &MR_BASES[..12] {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn strong_probable_prime(n: &BigUint, a: &BigUint) -> bool {
    let one = BigUint::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let mut x = a.modpow(&d, n);
    if x == one || x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == nm1 {
            return true;
        }
    }
    false
}

fn jacobi(a: &BigInt, n: &BigInt) -> i32 {
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut t = 1;
    let three = BigInt::from(3);
    let five = BigInt::from(5);
    let eight = BigInt::from(8);
    let four = BigInt::from(4);
    while !a.is_zero() {
        while a.is_even() {
            a >>= 1;
            let r = n.mod_floor(&eight);
            if r == three || r == five {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.mod_floor(&four) == three && n.mod_floor(&four) == three {
            t = -t;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        t
    } else {
        0
    }
}

/// Strong Lucas probable prime test with Selfridge parameters.
fn strong_lucas(n: &BigUint) -> bool {
    let nb = BigInt::from(n.clone());
    if n.sqrt().pow(2) == *n {
        return false;
    }
    let mut d = BigInt::from(5);
    loop {
        let j = jacobi(&d, &nb);
        if j == -1 {
            break;
        }
        if j == 0 && d.abs() != nb {
            return false;
        }
        d = if d.is_positive() { -(d + 2i32) } else { -(d - 2i32) };
    }
    let p: BigInt = BigInt::one();
    let q: BigInt = (BigInt::one() - &d) / BigInt::from(4);
    let half = |x: BigInt| -> BigInt {
        let x = if x.is_odd() { x + &nb } else { x };
        (x >> 1usize).mod_floor(&nb)
    };
    let np1: BigUint = n + 1u32;
    let s = np1.trailing_zeros().unwrap_or(0);
    let k = &np1 >> s;
    let mut u = BigInt::zero();
    let mut v = BigInt::from(2);
    let mut qk = BigInt::one();
    let bits = k.bits();
    for i in (0..bits).rev() {
        u = (&u * &v).mod_floor(&nb);
        v = (&v * &v - (&qk << 1usize)).mod_floor(&nb);
        qk = (&qk * &qk).mod_floor(&nb);
        if k.bit(i) {
            let nu = half(&p * &u + &v);
            let nv = half(&d * &u + &p * &v);
            u = nu;
            v = nv;
            qk = (&qk * &q).mod_floor(&nb);
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = (&v * &v - (&qk << 1usize)).mod_floor(&nb);
        qk = (&qk * &qk).mod_floor(&nb);
        if v.is_zero() {
            return true;
        }
    }
    false
}

/// Deterministic below 3.3e24 (first 13 prime bases); BPSW above.
pub fn is_prime(n: &BigUint) -> bool {
    if let Some(x) = n.to_u64() {
        return is_prime_u64(x);
    }
    for &p in &MR_BASES {
        if (n % p).is_zero() {
            return false;
        }
    }
    let bound: BigUint = "3317044064679887385961981".parse().unwrap();
    if *n < bound {
        return MR_BASES.iter().all(|&a| strong_probable_prime(n, &BigUint::from(a)));
    }
    strong_probable_prime(n, &BigUint::from(2u32)) && strong_lucas(n)
}

// ---------------------------------------------------------------- factoring

fn rho_u64(n: u64, rng: &mut ChaCha8Rng, budget: &mut u64) -> Option<u64> {
    while *budget > 0 {
        let c = rng.gen_range(1..n);
        let mut y = rng.gen_range(0..n);
        let f = |x: u64| (mul_mod_u64(x, x, n) + c) % n;
        let (mut r, mut q, mut g) = (1u64, 1u64, 1u64);
        let (mut x, mut ys) = (0u64, 0u64);
        while g == 1 && *budget > 0 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let steps = 128.min(r - k);
                for _ in 0..steps {
                    y = f(y);
                    q = mul_mod_u64(q, x.abs_diff(y), n);
                }
                *budget = budget.saturating_sub(steps);
                g = q.gcd(&n);
                k += steps;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g > 1 && g < n {
            return Some(g);
        }
    }
    None
}

fn rho_big(n: &BigUint, rng: &mut ChaCha8Rng, budget: &mut u64) -> Option<BigUint> {
    let one = BigUint::one();
    let bits = n.bits();
    let rand_below = |rng: &mut ChaCha8Rng| -> BigUint {
        let words: Vec<u32> = (0..(bits / 32 + 2)).map(|_| rng.gen()).collect();
        BigUint::from_slice(&words) % n
    };
    while *budget > 0 {
        let c = rand_below(rng) | BigUint::one();
        let mut y = rand_below(rng);
        let f = |x: &BigUint| (x * x + &c) % n;
        let diff = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };
        let mut r = 1u64;
        let mut q = BigUint::one();
        let mut g = BigUint::one();
        let mut x = BigUint::zero();
        let mut ys = BigUint::zero();
        while g == one && *budget > 0 {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g == one {
                ys = y.clone();
                let steps = 128.min(r - k);
                for _ in 0..steps {
                    y = f(&y);
                    q = (&q * diff(&x, &y)) % n;
                }
                *budget = budget.saturating_sub(steps);
                g = q.gcd(n);
                k += steps;
            }
            r *= 2;
        }
        if g == *n {
            loop {
                ys = f(&ys);
                g = diff(&x, &ys).gcd(n);
                if g > one {
                    break;
                }
            }
        }
        if g > one && g < *n {
            return Some(g);
        }
    }
    None
}

fn perfect_power(n: &BigUint) -> Option<(BigUint, u32)> {
    let bits = n.bits() as u32;
    for k in primes_up_to(bits as u64).into_iter().map(|k| k as u32) {
        let r = n.nth_root(k);
        if r > BigUint::one() && r.pow(k) == *n {
            return Some((r, k));
        }
    }
    None
}

/// Splits `n` (raised to `mult`) into primes; unsplit composites go to `rest`.
fn split(n: BigUint, mult: u32, rng: &mut ChaCha8Rng, budget: u64, out: &mut BTreeMap<BigUint, u32>, rest: &mut BigUint) {
    if n.is_one() {
        return;
    }
    if is_prime(&n) {
        *out.entry(n).or_insert(0) += mult;
        return;
    }
    if let Some((r, k)) = perfect_power(&n) {
        split(r, mult * k, rng, budget, out, rest);
        return;
    }
    let mut b = budget;
    let d = match n.to_u64() {
        Some(x) => rho_u64(x, rng, &mut b).map(BigUint::from),
        None => rho_big(&n, rng, &mut b),
    };
    match d {
        None => *rest *= n.pow(mult),
        Some(d) => {
            let e = &n / &d;
            split(d, mult, rng, budget, out, rest);
            split(e, mult, rng, budget, out, rest);
        }
    }
}

/// Factors `n`: trial division, then verified hints, then Brent rho.
pub fn factorize(n: &BigUint, hints: &[BigUint], budget: u64) -> Factorization {
    assert!(!n.is_zero(), "factorize needs n >= 1");
    let mut rem = n.clone();
    let mut map: BTreeMap<BigUint, u32> = BTreeMap::new();
    for &p in trial_primes() {
        if rem.is_one() || (rem.bits() <= 40 && p * p > rem.to_u64().unwrap()) {
            break;
        }
        let pb = BigUint::from(p);
        if (&rem % p).is_zero() {
            let mut e = 0;
            while (&rem % p).is_zero() {
                rem /= &pb;
                e += 1;
            }
            map.insert(pb, e);
        }
    }
    let mut rejected = Vec::new();
    for h in hints {
        if h <= &BigUint::one() || !(n % h).is_zero() || !is_prime(h) {
            if !rejected.contains(h) {
                rejected.push(h.clone());
            }
            continue;
        }
        let mut e = 0;
        while (&rem % h).is_zero() {
            rem /= h;
            e += 1;
        }
        if e > 0 {
            *map.entry(h.clone()).or_insert(0) += e;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(RHO_SEED);
    let mut cofactor = BigUint::one();
    split(rem, 1, &mut rng, budget, &mut map, &mut cofactor);
    map.retain(|_, e| *e > 0);
    Factorization {
        value: n.clone(),
        factors: map.into_iter().collect(),
        complete: cofactor.is_one(),
        cofactor,
        rejected_hints: rejected,
    }
}

// ---------------------------------------------------------------- small helpers

pub fn divisors_u64(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

pub fn prime_factors_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn mobius_u64(n: u64) -> i32 {
    let f = prime_factors_u64(n);
    if f.iter().any(|(_, e)| *e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn phi_u64(n: u64) -> u64 {
    prime_factors_u64(n)
        .iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Multiplicative order of `a` modulo `m` (requires gcd(a, m) = 1), 1 for m = 1.
pub fn multiplicative_order(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 1;
    }
    assert_eq!(a.gcd(&m), 1, "order needs a unit");
    let phi = phi_u64(m);
    let mut ord = phi;
    for (p, _) in prime_factors_u64(phi) {
        while ord % p == 0 && pow_mod_u64(a, ord / p, m) == 1 {
            ord /= p;
        }
    }
    ord
}

/// Φ_d(x) evaluated exactly through the Möbius product of (x^e − 1).
pub fn cyclotomic_eval(d: u64, x: &BigUint) -> BigUint {
    assert!(d >= 1);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for e in divisors_u64(d) {
        let term = x.pow(e as u32) - 1u32;
        match mobius_u64(d / e) {
            1 => num *= term,
            -1 => den *= term,
            _ => {}
        }
    }
    num / den
}

// ---------------------------------------------------------------- group orders

type PieceKey = (u64, u64, u64, Vec<BigUint>);

fn piece_cache() -> &'static Mutex<HashMap<PieceKey, Factorization>> {
    static C: OnceLock<Mutex<HashMap<PieceKey, Factorization>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Factorization of Φ_d(p), memoized per (p, d, budget, applicable hints).
pub fn factor_cyclotomic_piece(p: u64, d: u64, hints: &[BigUint], budget: u64) -> Factorization {
    let value = cyclotomic_eval(d, &BigUint::from(p));
    let mut relevant: Vec<BigUint> = hints
        .iter()
        .filter(|h| !h.is_zero() && (&value % *h).is_zero())
        .cloned()
        .collect();
    relevant.sort();
    relevant.dedup();
    let key = (p, d, budget, relevant.clone());
    if let Some(f) = piece_cache().lock().unwrap().get(&key) {
        return f.clone();
    }
    let f = factorize(&value, &relevant, budget);
    piece_cache().lock().unwrap().insert(key, f.clone());
    f
}

/// Factorization of p^{kn} − 1 assembled from the cyclotomic pieces Φ_d(p), d | kn.
pub fn factor_group_order(p: u64, k: u32, n: u32, hints: &HintSet, budget: u64) -> Factorization {
    let big_n = k as u64 * n as u64;
    let candidates = hints.factors_for_prime(p);
    let pieces: Vec<Factorization> = crate::par::map_collect(divisors_u64(big_n), |d| {
        factor_cyclotomic_piece(p, d, &candidates, budget)
    });
    let mut total = pieces
        .iter()
        .fold(Factorization::one(), |acc, f| acc.merge(f));
    total.value = BigUint::from(p).pow(big_n as u32) - 1u32;
    total.rejected_hints = hints.rejected_for(p, big_n, &total.value);
    total
}

// ---------------------------------------------------------------- W bounds

/// The worst-case constant of the W(m) < C·m^{1/r} bound, as an outward-rounded interval.
pub fn w_bound_constant(r: &BigRational, bits: u32) -> Interval {
    let two_r = crate::precise::pow2_rational_floor(r);
    let primes = primes_up_to(two_r);
    let primes: Vec<u64> = primes.into_iter().filter(|&p| is_prime_below_pow2(p, r)).collect();
    let mut log_c = Interval::zero(bits);
    let ln2 = Interval::ln2(bits);
    let inv_r = Interval::from_rational(&r.recip(), bits);
    for p in &primes {
        let lp = Interval::from_u64(*p, bits).ln();
        log_c = log_c.add(&ln2.sub(&lp.mul(&inv_r)));
    }
    log_c.exp()
}

/// p < 2^r, decided exactly for rational r = a/b as p^b < 2^a.
pub fn is_prime_below_pow2(p: u64, r: &BigRational) -> bool {
    let a = r.numer().to_biguint().expect("r > 0");
    let b = r.denom().to_u32().expect("small denominator");
    let a = a.to_u32().expect("small numerator");
    BigUint::from(p).pow(b) < (BigUint::one() << a)
}

/// Primes p < 2^r (exact comparison).
pub fn primes_below_pow2(r: &BigRational) -> Vec<u64> {
    let top = crate::precise::pow2_rational_floor(r);
    primes_up_to(top)
        .into_iter()
        .filter(|&p| is_prime_below_pow2(p, r))
        .collect()
}

/// Exact test C(r) < bound, via 2^{π·a} < bound^a · (Π p)^b for r = a/b.
pub fn w_bound_constant_below(r: &BigRational, bound: &BigRational) -> bool {
    let primes = primes_below_pow2(r);
    let a = r.numer().to_u32().unwrap();
    let b = r.denom().to_u32().unwrap();
    let prod = primes.iter().fold(BigUint::one(), |acc, &p| acc * p);
    let lhs = BigInt::one() << (primes.len() * a as usize);
    let bn = bound.numer().pow(a);
    let bd = bound.denom().pow(a);
    lhs * bd < bn * BigInt::from_biguint(Sign::Plus, prod.pow(b))
}

#[derive(Clone, Debug, Serialize)]
pub struct LargeNReport {
    pub prime_2828: u64,
    pub next_prime: u64,
    pub log10_primorial_2828: f64,
    pub primorial_exceeds_2_24e11067: bool,
    pub log10_m1_root13: f64,
    pub m1_root13_exceeds_2_16e851: bool,
    pub log10_w_m1: f64,
    pub w_m1_below_2_06e851: bool,
    pub next_prime_root13_exceeds_2: bool,
    pub prime_2828_matches: bool,
}

impl LargeNReport {
    pub fn all_hold(&self) -> bool {
        self.primorial_exceeds_2_24e11067
            && self.m1_root13_exceeds_2_16e851
            && self.w_m1_below_2_06e851
            && self.next_prime_root13_exceeds_2
            && self.prime_2828_matches
    }
}

/// log10 of a big integer, accurate to f64 precision.
pub fn log10_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap().log10();
    }
    let shift = bits - 60;
    let top = (x >> shift).to_f64().unwrap();
    top.log10() + shift as f64 * std::f64::consts::LN_2 / std::f64::consts::LN_10
}

/// Recomputes the constants used for W(M) < M^{1/13}; every comparison is exact.
pub fn verify_large_n_constants() -> LargeNReport {
    let primes = first_primes(2829);
    let m1 = primes[..2828].iter().fold(BigUint::one(), |acc, &p| acc * p);
    let ten = BigUint::from(10u32);
    let t1 = BigUint::from(224u32) * ten.pow(11065);
    let t2 = (BigUint::from(216u32) * ten.pow(849)).pow(13);
    let w = BigUint::one() << 2828u32;
    let t3 = BigUint::from(206u32) * ten.pow(849);
    let next = primes[2828];
    LargeNReport {
        prime_2828: primes[2827],
        next_prime: next,
        log10_primorial_2828: log10_big(&m1),
        primorial_exceeds_2_24e11067: m1 > t1,
        log10_m1_root13: log10_big(&m1) / 13.0,
        m1_root13_exceeds_2_16e851: m1 > t2,
        log10_w_m1: log10_big(&w),
        w_m1_below_2_06e851: w < t3,
        next_prime_root13_exceeds_2: BigUint::from(next) > BigUint::from(1u32 << 13),
        prime_2828_matches: primes[2827] == 25673,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fu(n: u64) -> Factorization {
        factorize(&BigUint::from(n), &[], DEFAULT_BUDGET)
    }

    fn trial_oracle(mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut d = 2;
        while d * d <= n {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            if e > 0 {
                out.push((d, e));
            }
            d += 1;
        }
        if n > 1 {
            out.push((n, 1));
        }
        out
    }

    fn as_u64(f: &Factorization) -> Vec<(u64, u32)> {
        f.factors.iter().map(|(p, e)| (p.to_u64().unwrap(), *e)).collect()
    }

    #[test]
    fn frozen_factorizations() {
        assert_eq!(as_u64(&fu(16806)), vec![(2, 1), (3, 1), (2801, 1)]);
        assert_eq!(as_u64(&fu(117648)), vec![(2, 4), (3, 2), (19, 1), (43, 1)]);
        assert_eq!(as_u64(&fu(16806)), trial_oracle(16806));
        assert_eq!(as_u64(&fu(117648)), trial_oracle(117648));
        let one = fu(1);
        assert!(one.complete && one.factors.is_empty());
    }

    #[test]
    fn multiplicative_functions() {
        assert_eq!(fu(1).mobius().unwrap(), 1);
        assert_eq!(fu(6).mobius().unwrap(), 1);
        assert_eq!(fu(12).mobius().unwrap(), 0);
        assert_eq!(fu(16806).big_w().unwrap(), BigUint::from(8u32));
        assert_eq!(fu(1).theta().unwrap(), BigRational::one());
        assert_eq!(fu(117648).euler_phi().unwrap(), BigUint::from(36288u32));
        let units = (1..117648u64).filter(|x| x.gcd(&117648) == 1).count();
        assert_eq!(units, 36288);
    }

    #[test]
    fn divisor_sums() {
        for n in (1..3000u64).chain([720720, 999_999, 1_000_000]) {
            let ds = divisors_u64(n);
            assert_eq!(ds.iter().map(|&d| phi_u64(d)).sum::<u64>(), n);
            assert_eq!(ds.iter().map(|&d| mobius_u64(d) as i64).sum::<i64>(), (n == 1) as i64);
        }
    }

    #[test]
    fn cyclotomic_values() {
        let seven = BigUint::from(7u32);
        assert_eq!(cyclotomic_eval(1, &seven), BigUint::from(6u32));
        assert_eq!(cyclotomic_eval(2, &seven), BigUint::from(8u32));
        assert_eq!(cyclotomic_eval(6, &seven), BigUint::from(43u32));
        for x in [3u32, 5, 7, 49] {
            let xb = BigUint::from(x);
            for m in 1..=200u64 {
                let prod = divisors_u64(m)
                    .iter()
                    .fold(BigUint::one(), |acc, &d| acc * cyclotomic_eval(d, &xb));
                assert_eq!(prod, xb.pow(m as u32) - 1u32, "x={x} m={m}");
            }
        }
    }

    #[test]
    fn group_orders() {
        let h = HintSet::default();
        let a = factor_group_order(7, 1, 5, &h, DEFAULT_BUDGET);
        assert_eq!(a.factors, fu(16806).factors);
        let b = factor_group_order(7, 1, 1, &h, DEFAULT_BUDGET);
        assert_eq!(as_u64(&b), vec![(2, 1), (3, 1)]);
        let c = factor_group_order(7, 2, 3, &h, DEFAULT_BUDGET);
        assert_eq!(c.factors, fu(117648).factors);
        assert!(c.is_consistent());
    }

    #[test]
    fn primality_agrees_with_sieve() {
        let ps = primes_up_to(200_000);
        let mut it = ps.iter().peekable();
        for n in 0..200_000u64 {
            let expect = it.peek() == Some(&&n);
            if expect {
                it.next();
            }
            assert_eq!(is_prime_u64(n), expect, "{n}");
            if n % 97 == 0 {
                assert_eq!(is_prime(&BigUint::from(n)), expect);
            }
        }
    }

    #[test]
    fn big_primality() {
        // 2^127 - 1 and 2^89 - 1 are Mersenne primes; 2^128 + 1 is composite.
        let m127 = (BigUint::one() << 127u32) - 1u32;
        let m89 = (BigUint::one() << 89u32) - 1u32;
        assert!(is_prime(&m127));
        assert!(is_prime(&m89));
        assert!(!is_prime(&((BigUint::one() << 128u32) + 1u32)));
        assert!(!is_prime(&(&m127 * &m89)));
        // strong pseudoprime to bases 2..37 (Arnault-style products are caught by Lucas)
        let spsp: BigUint = "3825123056546413051".parse().unwrap();
        assert!(!is_prime(&spsp));
    }

    #[test]
    fn rho_splits_semiprime() {
        let p: BigUint = "1000000007".parse().unwrap();
        let q: BigUint = "998244353".parse().unwrap();
        let r: BigUint = "4294967311".parse().unwrap();
        let n = &p * &q * &r;
        let f = factorize(&n, &[], DEFAULT_BUDGET);
        assert!(f.complete);
        assert_eq!(f.factors.len(), 3);
        assert!(f.is_consistent());
        let sq = &p * &p * &q;
        let f = factorize(&sq, &[], DEFAULT_BUDGET);
        assert!(f.complete && f.is_consistent());
    }

    #[test]
    fn hints_verified() {
        let n = BigUint::from(16806u32);
        let f = factorize(&n, &[BigUint::from(5u32), BigUint::from(2801u32)], DEFAULT_BUDGET);
        assert_eq!(f.rejected_hints, vec![BigUint::from(5u32)]);
        assert!(f.complete);
    }

    #[test]
    fn tiny_budget_leaves_cofactor() {
        let p: BigUint = "1000000000039".parse().unwrap();
        let q: BigUint = "1000000000061".parse().unwrap();
        let f = factorize(&(&p * &q), &[], 16);
        assert!(!f.complete);
        assert_eq!(f.cofactor, &p * &q);
        assert!(f.is_consistent());
        assert!(f.big_w().is_err());
    }

    #[test]
    fn multiplicative_order_small() {
        assert_eq!(multiplicative_order(7, 11), 10);
        assert_eq!(multiplicative_order(7, 18), 3);
        assert_eq!(multiplicative_order(7, 1), 1);
    }

    #[test]
    fn c_bound_values() {
        let r = BigRational::new(19.into(), 2.into());
        let c = w_bound_constant(&r, 256);
        assert!(c.hi_f64() < 1.46e7);
        assert!(w_bound_constant_below(&r, &BigRational::from_integer(14_600_000.into())));
        assert!((c.mid_f64() - 14580306.9).abs() < 1.0);
        let tiny = BigRational::new(1.into(), 2.into());
        assert!((w_bound_constant(&tiny, 128).mid_f64() - 1.0).abs() < 1e-30);
    }

    #[test]
    fn c_bound_applies_to_small_m() {
        for (a, b) in [(17, 2), (9, 1), (19, 2), (10, 1), (13, 1)] {
            let r = BigRational::new(BigInt::from(a), BigInt::from(b));
            let c = w_bound_constant(&r, 128).lo_f64();
            let rf = a as f64 / b as f64;
            // smallest-prime-factor sieve keeps this exhaustive pass fast
            let n = 1_000_000usize;
            let mut omega = vec![0u8; n + 1];
            for p in 2..=n {
                if omega[p] == 0 {
                    let mut j = p;
                    while j <= n {
                        omega[j] += 1;
                        j += p;
                    }
                }
            }
            for m in 1..=n {
                let w = (1u64 << omega[m]) as f64;
                assert!(w < c * (m as f64).powf(1.0 / rf) * (1.0 - 1e-12), "m={m} r={rf}");
            }
        }
    }

    #[test]
    fn large_n_constants() {
        let rep = verify_large_n_constants();
        assert!(rep.all_hold(), "{rep:?}");
        assert_eq!(rep.next_prime, 25679);
        assert!((rep.log10_w_m1 - 851.31).abs() < 0.01);
        assert!(rep.log10_primorial_2828 > 11067.35);
    }
}
