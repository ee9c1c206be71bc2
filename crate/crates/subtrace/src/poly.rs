//! Dense univariate polynomials over any [`Field`], little-endian coefficient vectors.

use std::fmt::Debug;

use num_bigint::BigUint;
use num_traits::Zero;

pub trait Field: Sync + Send {
    type Elem: Clone + PartialEq + Eq + Debug + Send + Sync;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    /// Image of an integer under Z → F.
    fn from_int(&self, c: i64) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool {
        *a == self.zero()
    }
}

/// The prime field F_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    pub p: u32,
}

impl PrimeField {
    pub fn new(p: u32) -> Self {
        PrimeField { p }
    }
}

impl Field for PrimeField {
    type Elem = u32;
    fn zero(&self) -> u32 {
        0
    }
    fn one(&self) -> u32 {
        1 % self.p
    }
    fn add(&self, a: &u32, b: &u32) -> u32 {
        ((*a as u64 + *b as u64) % self.p as u64) as u32
    }
    fn sub(&self, a: &u32, b: &u32) -> u32 {
        ((*a as u64 + self.p as u64 - *b as u64) % self.p as u64) as u32
    }
    fn neg(&self, a: &u32) -> u32 {
        (self.p - a % self.p) % self.p
    }
    fn mul(&self, a: &u32, b: &u32) -> u32 {
        ((*a as u64 * *b as u64) % self.p as u64) as u32
    }
    fn inv(&self, a: &u32) -> Option<u32> {
        if *a % self.p == 0 {
            return None;
        }
        // Fermat
        let mut r = 1u64;
        let mut b = *a as u64 % self.p as u64;
        let mut e = self.p as u64 - 2;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % self.p as u64;
            }
            b = b * b % self.p as u64;
            e >>= 1;
        }
        Some(r as u32)
    }
    fn from_int(&self, c: i64) -> u32 {
        c.rem_euclid(self.p as i64) as u32
    }
}

pub type Poly<E> = Vec<E>;

pub fn trim<F: Field>(f: &F, mut a: Poly<F::Elem>) -> Poly<F::Elem> {
    while a.last().is_some_and(|c| f.is_zero(c)) {
        a.pop();
    }
    a
}

/// Degree, with the zero polynomial reported as None.
pub fn degree<F: Field>(f: &F, a: &[F::Elem]) -> Option<usize> {
    a.iter().rposition(|c| !f.is_zero(c))
}

pub fn constant<F: Field>(f: &F, c: F::Elem) -> Poly<F::Elem> {
    trim(f, vec![c])
}

/// x^n − 1.
pub fn x_pow_minus_one<F: Field>(f: &F, n: usize) -> Poly<F::Elem> {
    let mut v = vec![f.zero(); n + 1];
    v[0] = f.neg(&f.one());
    v[n] = f.add(&v[n], &f.one());
    trim(f, v)
}

pub fn add<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    let n = a.len().max(b.len());
    let z = f.zero();
    let out = (0..n)
        .map(|i| f.add(a.get(i).unwrap_or(&z), b.get(i).unwrap_or(&z)))
        .collect();
    trim(f, out)
}

pub fn sub<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    let n = a.len().max(b.len());
    let z = f.zero();
    let out = (0..n)
        .map(|i| f.sub(a.get(i).unwrap_or(&z), b.get(i).unwrap_or(&z)))
        .collect();
    trim(f, out)
}

pub fn scale<F: Field>(f: &F, a: &[F::Elem], c: &F::Elem) -> Poly<F::Elem> {
    trim(f, a.iter().map(|x| f.mul(x, c)).collect())
}

pub fn mul<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![f.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if f.is_zero(x) {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = f.add(&out[i + j], &f.mul(x, y));
        }
    }
    trim(f, out)
}

/// Quotient and remainder; the divisor must be nonzero.
pub fn divrem<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> (Poly<F::Elem>, Poly<F::Elem>) {
    let db = degree(f, b).expect("division by the zero polynomial");
    let lead_inv = f.inv(&b[db]).expect("leading coefficient invertible");
    let mut r: Poly<F::Elem> = trim(f, a.to_vec());
    let mut q = vec![f.zero(); r.len().saturating_sub(db).max(1)];
    while let Some(dr) = degree(f, &r) {
        if dr < db {
            break;
        }
        let c = f.mul(&r[dr], &lead_inv);
        let shift = dr - db;
        for (i, bc) in b[..=db].iter().enumerate() {
            r[shift + i] = f.sub(&r[shift + i], &f.mul(&c, bc));
        }
        q[shift] = c;
        r = trim(f, r);
    }
    (trim(f, q), r)
}

pub fn rem<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    divrem(f, a, b).1
}

pub fn monic<F: Field>(f: &F, a: &[F::Elem]) -> Poly<F::Elem> {
    match degree(f, a) {
        None => Vec::new(),
        Some(d) => {
            let inv = f.inv(&a[d]).unwrap();
            scale(f, a, &inv)
        }
    }
}

/// Monic gcd.
pub fn gcd<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    let mut x = trim(f, a.to_vec());
    let mut y = trim(f, b.to_vec());
    while degree(f, &y).is_some() {
        let r = rem(f, &x, &y);
        x = y;
        y = r;
    }
    monic(f, &x)
}

pub fn mulmod<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem], m: &[F::Elem]) -> Poly<F::Elem> {
    rem(f, &mul(f, a, b), m)
}

pub fn powmod<F: Field>(f: &F, base: &[F::Elem], e: &BigUint, m: &[F::Elem]) -> Poly<F::Elem> {
    let mut result = rem(f, &[f.one()], m);
    if e.is_zero() {
        return result;
    }
    let b = rem(f, base, m);
    for i in (0..e.bits()).rev() {
        result = mulmod(f, &result, &result, m);
        if e.bit(i) {
            result = mulmod(f, &result, &b, m);
        }
    }
    result
}

pub fn eval<F: Field>(f: &F, a: &[F::Elem], x: &F::Elem) -> F::Elem {
    a.iter().rev().fold(f.zero(), |acc, c| f.add(&f.mul(&acc, x), c))
}

pub fn is_monic<F: Field>(f: &F, a: &[F::Elem]) -> bool {
    degree(f, a).is_some_and(|d| a[d] == f.one())
}

/// Rabin's irreducibility test over F_p.
pub fn is_irreducible_fp(fp: &PrimeField, m: &[u32]) -> bool {
    let Some(n) = degree(fp, m) else { return false };
    if n == 0 {
        return false;
    }
    if n == 1 {
        return true;
    }
    let p = BigUint::from(fp.p);
    let x = vec![0u32, 1];
    // x^{p^i} mod m for i = 1..=n
    let mut pows = Vec::with_capacity(n + 1);
    pows.push(rem(fp, &x, m));
    for i in 0..n {
        let next = powmod(fp, &pows[i], &p, m);
        pows.push(next);
    }
    if pows[n] != pows[0] {
        return false;
    }
    for (r, _) in crate::ntheory::prime_factors_u64(n as u64) {
        let t = sub(fp, &pows[n / r as usize], &x);
        if degree(fp, &gcd(fp, &t, m)) != Some(0) {
            return false;
        }
    }
    true
}

/// Smallest monic irreducible of degree `n` over F_p, comparing coefficients
/// low-degree-first (c0 is the most significant key).
pub fn smallest_irreducible(p: u32, n: usize) -> Poly<u32> {
    let fp = PrimeField::new(p);
    let total = (p as u128).pow(n as u32);
    // constant term 0 means x divides, so those candidates are skipped wholesale
    let start = if n >= 2 { total / p as u128 } else { 0 };
    for idx in start..total {
        // digits: c_{n-1} least significant, c0 most significant
        let mut coeffs = vec![0u32; n + 1];
        let mut t = idx;
        for j in (0..n).rev() {
            coeffs[j] = (t % p as u128) as u32;
            t /= p as u128;
        }
        coeffs[n] = 1;
        if is_irreducible_fp(&fp, &coeffs) {
            return coeffs;
        }
    }
    unreachable!("an irreducible of every degree exists")
}

/// Human-readable form like `x^3+x^2+5x+5` for prime-field coefficients.
pub fn format_fp(a: &[u32]) -> String {
    let mut terms = Vec::new();
    for (i, &c) in a.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let coef = if c == 1 && i > 0 { String::new() } else { c.to_string() };
        let t = match i {
            0 => c.to_string(),
            1 => format!("{coef}x"),
            _ => format!("{coef}x^{i}"),
        };
        terms.push(t);
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+")
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("bad polynomial literal `{0}`")]
    Bad(String),
    #[error("`{0}` is not divisible by `{1}`")]
    NotDivisible(String, String),
}

fn parse_sum(s: &str, fp: &PrimeField) -> Result<Poly<u32>, ParseError> {
    let bad = || ParseError::Bad(s.to_string());
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.trim_start_matches('(').trim_end_matches(')');
    if s.is_empty() {
        return Err(bad());
    }
    let mut out: Poly<u32> = Vec::new();
    let mut i = 0;
    let b = s.as_bytes();
    while i < b.len() {
        let mut sign = 1i64;
        if b[i] == b'+' || b[i] == b'-' {
            sign = if b[i] == b'-' { -1 } else { 1 };
            i += 1;
        }
        let start = i;
        while i < b.len() && b[i] != b'+' && b[i] != b'-' {
            i += 1;
        }
        let term = &s[start..i];
        if term.is_empty() {
            return Err(bad());
        }
        let (coef, exp) = match term.find('x') {
            None => (term.parse::<i64>().map_err(|_| bad())?, 0usize),
            Some(pos) => {
                let c = &term[..pos];
                let c = if c.is_empty() { 1 } else { c.trim_end_matches('*').parse::<i64>().map_err(|_| bad())? };
                let rest = &term[pos + 1..];
                let e = if rest.is_empty() {
                    1
                } else {
                    rest.strip_prefix('^').ok_or_else(bad)?.trim_matches(|c| c == '{' || c == '}').parse::<usize>().map_err(|_| bad())?
                };
                (c, e)
            }
        };
        if out.len() <= exp {
            out.resize(exp + 1, 0);
        }
        out[exp] = fp.add(&out[exp], &fp.from_int(sign * coef));
    }
    Ok(trim(fp, out))
}

/// Parses `x^3+x^2+5x+5` or a quotient `(x^6+6)/(x+6)` over F_p; quotients must divide exactly.
pub fn parse_fp(s: &str, p: u32) -> Result<Poly<u32>, ParseError> {
    let fp = PrimeField::new(p);
    let s = s.trim();
    if s == "1" {
        return Ok(vec![1]);
    }
    match s.split_once('/') {
        None => parse_sum(s, &fp),
        Some((a, b)) => {
            let pa = parse_sum(a, &fp)?;
            let pb = parse_sum(b, &fp)?;
            if pb.is_empty() {
                return Err(ParseError::Bad(s.to_string()));
            }
            let (q, r) = divrem(&fp, &pa, &pb);
            if !r.is_empty() {
                return Err(ParseError::NotDivisible(a.into(), b.into()));
            }
            Ok(q)
        }
    }
}
