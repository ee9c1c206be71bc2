//! Fixed-point intervals over big integers with outward rounding.
//!
//! A value is the set [lo, hi]·2^{-bits}. Every operation rounds the lower end
//! down and the upper end up, so the true result always lies inside.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Precision ladder used when a comparison is not yet decided.
pub const PRECISION_LADDER: [u32; 4] = [256, 512, 1024, 2048];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    bits: u32,
}

fn div_floor(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn div_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

fn shr_floor(a: &BigInt, s: u32) -> BigInt {
    // arithmetic shift of BigInt rounds toward -inf
    a >> s
}

fn shr_ceil(a: &BigInt, s: u32) -> BigInt {
    -((-a) >> s)
}

impl Interval {
    pub fn zero(bits: u32) -> Self {
        Interval { lo: BigInt::zero(), hi: BigInt::zero(), bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn from_int(v: &BigInt, bits: u32) -> Self {
        let x = v << bits;
        Interval { lo: x.clone(), hi: x, bits }
    }

    pub fn from_u64(v: u64, bits: u32) -> Self {
        Self::from_int(&BigInt::from(v), bits)
    }

    pub fn from_rational(r: &BigRational, bits: u32) -> Self {
        let num = r.numer() << bits;
        let den = r.denom();
        Interval { lo: div_floor(&num, den), hi: div_ceil(&num, den), bits }
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }

    fn to_f64_raw(v: &BigInt, bits: u32) -> f64 {
        let b = v.bits();
        if b <= 1000 {
            v.to_f64().unwrap() / 2f64.powi(bits as i32)
        } else {
            let s = b - 900;
            (v >> s).to_f64().unwrap() * 2f64.powi(s as i32 - bits as i32)
        }
    }

    pub fn lo_f64(&self) -> f64 {
        Self::to_f64_raw(&self.lo, self.bits)
    }

    pub fn hi_f64(&self) -> f64 {
        Self::to_f64_raw(&self.hi, self.bits)
    }

    pub fn mid_f64(&self) -> f64 {
        Self::to_f64_raw(&((&self.lo + &self.hi) >> 1), self.bits)
    }

    pub fn lo_rational(&self) -> BigRational {
        BigRational::new(self.lo.clone(), BigInt::one() << self.bits)
    }

    pub fn hi_rational(&self) -> BigRational {
        BigRational::new(self.hi.clone(), BigInt::one() << self.bits)
    }

    /// Width of the interval as a float.
    pub fn width_f64(&self) -> f64 {
        Self::to_f64_raw(&(&self.hi - &self.lo), self.bits)
    }

    fn align(&self, other: &Interval) -> (Interval, Interval) {
        // both to the lower precision (rounding outward)
        let bits = self.bits.min(other.bits);
        (self.with_bits(bits), other.with_bits(bits))
    }

    pub fn with_bits(&self, bits: u32) -> Interval {
        if bits == self.bits {
            return self.clone();
        }
        if bits > self.bits {
            let s = bits - self.bits;
            return Interval { lo: &self.lo << s, hi: &self.hi << s, bits };
        }
        let s = self.bits - bits;
        Interval { lo: shr_floor(&self.lo, s), hi: shr_ceil(&self.hi, s), bits }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        let (a, b) = self.align(other);
        Interval { lo: &a.lo + &b.lo, hi: &a.hi + &b.hi, bits: a.bits }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: -&self.hi, hi: -&self.lo, bits: self.bits }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let (a, b) = self.align(other);
        let ps = [&a.lo * &b.lo, &a.lo * &b.hi, &a.hi * &b.lo, &a.hi * &b.hi];
        let mn = ps.iter().min().unwrap();
        let mx = ps.iter().max().unwrap();
        Interval { lo: shr_floor(mn, a.bits), hi: shr_ceil(mx, a.bits), bits: a.bits }
    }

    /// Division by an interval that excludes zero.
    pub fn div(&self, other: &Interval) -> Interval {
        assert!(!other.contains_zero(), "interval division by a range containing zero");
        let (a, b) = self.align(other);
        let mut cands = Vec::with_capacity(8);
        for x in [&a.lo, &a.hi] {
            for y in [&b.lo, &b.hi] {
                let num = x << a.bits;
                cands.push((div_floor(&num, y), div_ceil(&num, y)));
            }
        }
        let lo = cands.iter().map(|c| c.0.clone()).min().unwrap();
        let hi = cands.iter().map(|c| c.1.clone()).max().unwrap();
        Interval { lo, hi, bits: a.bits }
    }

    pub fn mul_int(&self, k: i64) -> Interval {
        let k = BigInt::from(k);
        let (x, y) = (&self.lo * &k, &self.hi * &k);
        if k.is_negative() {
            Interval { lo: y, hi: x, bits: self.bits }
        } else {
            Interval { lo: x, hi: y, bits: self.bits }
        }
    }

    /// ln 2 enclosure.
    pub fn ln2(bits: u32) -> Interval {
        let w = bits + 32;
        let third = BigRational::new(BigInt::one(), BigInt::from(3));
        let (v, err) = atanh_fixed(&third, w);
        let lo = (&v - &err) << 1usize;
        let hi = (&v + &err) << 1usize;
        Interval { lo, hi, bits: w }.with_bits(bits)
    }

    /// Natural log of a positive interval.
    pub fn ln(&self) -> Interval {
        assert!(self.lo.is_positive(), "ln needs a positive interval");
        let lo = ln_point(&self.lo, self.bits, false);
        let hi = ln_point(&self.hi, self.bits, true);
        Interval { lo, hi, bits: self.bits }
    }

    pub fn exp(&self) -> Interval {
        let lo = exp_point(&self.lo, self.bits, false);
        let hi = exp_point(&self.hi, self.bits, true);
        Interval { lo, hi, bits: self.bits }
    }
}

/// atanh(z) for rational 0 <= z <= 1/2 at fixed point w: returns (value, error bound).
fn atanh_fixed(z: &BigRational, w: u32) -> (BigInt, BigInt) {
    let one = BigInt::one() << w;
    let zf = div_floor(&(z.numer() << w), z.denom());
    let z2 = (&zf * &zf) >> w;
    let mut term = zf.clone();
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    let mut ops: u64 = 0;
    loop {
        let t = &term / BigInt::from(2 * k + 1);
        if t.is_zero() {
            break;
        }
        sum += t;
        term = (&term * &z2) >> w;
        k += 1;
        ops += 3;
    }
    // tail below one unit per step plus rounding of z and z^2 (propagated with factor <= 2)
    let err = BigInt::from(ops + 8) + (&one >> (w - 2)).max(BigInt::one());
    (sum, err)
}

/// ln(v·2^{-bits}) rounded down (up when `up`), result at `bits`.
fn ln_point(v: &BigInt, bits: u32, up: bool) -> BigInt {
    // v = m·2^e with m/2^bits in [1, 2)
    let vb = v.bits() as i64;
    let e = vb - 1 - bits as i64;
    let w = bits + 64;
    let m = if e >= 0 { BigInt::from(v.clone()) << (w - bits) >> e as u32 } else { BigInt::from(v.clone()) << ((w - bits) as i64 - e) as u32 };
    // z = (m-1)/(m+1) as a rational in [0, 1/3)
    let one = BigInt::one() << w;
    let z = BigRational::new(&m - &one, &m + &one);
    let (at, err_at) = atanh_fixed(&z, w);
    let ln2 = Interval::ln2(w);
    let base = &at << 1usize;
    let err = &err_at * 2 + BigInt::from(4);
    let e_big = BigInt::from(e);
    let (l2lo, l2hi) = if e >= 0 { (&ln2.lo * &e_big, &ln2.hi * &e_big) } else { (&ln2.hi * &e_big, &ln2.lo * &e_big) };
    let total_lo = &base - &err + l2lo;
    let total_hi = &base + &err + l2hi;
    if up {
        shr_ceil(&total_hi, w - bits)
    } else {
        shr_floor(&total_lo, w - bits)
    }
}

/// exp(v·2^{-bits}) rounded down or up, result at `bits`.
fn exp_point(v: &BigInt, bits: u32, up: bool) -> BigInt {
    let mag = (v.abs() >> bits).to_u64().unwrap_or(u64::MAX);
    assert!(mag < 1 << 20, "exp argument too large");
    // scale down by 2^j so the Taylor argument is below 1/2
    let j = 64 - (mag + 1).leading_zeros() + 1;
    let grow = (mag as f64 * std::f64::consts::LOG2_E).ceil() as u32 + 2;
    let w = bits + 64 + 2 * j + grow;
    let x = (BigInt::from(v.clone()) << (w - bits)) >> j;
    let one = BigInt::one() << w;
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut k: u64 = 1;
    loop {
        term = (&term * &x) >> w;
        term /= BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum += &term;
        k += 1;
    }
    // error after the series: a few units; each squaring doubles relative error
    let mut err = BigInt::from(k + 4);
    let mut s = sum;
    for _ in 0..j {
        let s2 = (&s * &s) >> w;
        err = ((&err * &s * 2) >> w) + ((&err * &err) >> w) + 2;
        s = s2;
    }
    let (lo, hi) = (&s - &err, &s + &err);
    if up {
        shr_ceil(&hi, w - bits)
    } else {
        shr_floor(&lo.max(BigInt::zero()), w - bits)
    }
}

/// floor(2^r) for positive rational r.
pub fn pow2_rational_floor(r: &BigRational) -> u64 {
    let a = r.numer().to_u32().expect("small numerator");
    let b = r.denom().to_u32().expect("small denominator");
    // largest x with x^b <= 2^a
    let target = BigUint::one() << a;
    let x = num_integer::Roots::nth_root(&target, b);
    x.to_u64().expect("2^r fits in u64")
}

/// Decide `interval > 0` (true), `< 0` (false) or undecided (None).
pub fn sign_of(x: &Interval) -> Option<bool> {
    if x.is_positive() {
        Some(true)
    } else if x.is_negative() {
        Some(false)
    } else {
        None
    }
}

/// Evaluates `f` along the precision ladder until its sign is decided.
pub fn decide_sign<F: Fn(u32) -> Interval>(f: F) -> Option<bool> {
    PRECISION_LADDER.iter().find_map(|&b| sign_of(&f(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn ln2_digits() {
        let l = Interval::ln2(200);
        assert!(l.width_f64() < 1e-50);
        assert!((l.mid_f64() - std::f64::consts::LN_2).abs() < 1e-15);
        // ln 2 = 0.693147180559945309417232121458...
        let lo: BigRational = rat(693147180559945309, 1_000_000_000_000_000_000);
        let hi: BigRational = rat(693147180559945310, 1_000_000_000_000_000_000);
        assert!(l.lo_rational() > lo && l.hi_rational() < hi);
    }

    #[test]
    fn ln_and_exp_enclose() {
        for &x in &[1.0f64, 1.5, 2.0, 3.0, 10.0, 0.25, 12345.678, 1e-3] {
            let r = BigRational::from_float(x).unwrap();
            let i = Interval::from_rational(&r, 128);
            let l = i.ln();
            assert!(l.lo_f64() <= x.ln() + 1e-14 && l.hi_f64() >= x.ln() - 1e-14, "ln {x}");
            assert!(l.width_f64() < 1e-30);
        }
        for &x in &[0.0f64, 1.0, -1.0, 0.5, 20.0, -20.0, 92.5] {
            let r = BigRational::from_float(x).unwrap();
            let e = Interval::from_rational(&r, 128).exp();
            let want = x.exp();
            assert!(e.lo_f64() <= want * (1.0 + 1e-14) && e.hi_f64() >= want * (1.0 - 1e-14), "exp {x}");
            assert!(e.width_f64() <= want * 1e-25 + 1e-30);
        }
        // e = 2.718281828459045235360287...
        let e = Interval::from_u64(1, 160).exp();
        assert!(e.lo_rational() > rat(2718281828459045235, 1_000_000_000_000_000_000));
        assert!(e.hi_rational() < rat(2718281828459045236, 1_000_000_000_000_000_000));
    }

    #[test]
    fn arithmetic_encloses() {
        let a = Interval::from_rational(&rat(1, 3), 64);
        let b = Interval::from_rational(&rat(-2, 7), 64);
        let want = rat(1, 3) * rat(-2, 7);
        let p = a.mul(&b);
        assert!(p.lo_rational() <= want && p.hi_rational() >= want);
        let q = a.div(&b);
        let want = rat(1, 3) / rat(-2, 7);
        assert!(q.lo_rational() <= want && q.hi_rational() >= want);
        let s = a.sub(&b).add(&b);
        assert!(s.lo_rational() <= rat(1, 3) && s.hi_rational() >= rat(1, 3));
    }

    #[test]
    fn pow2_floor() {
        assert_eq!(pow2_rational_floor(&rat(19, 2)), 724);
        assert_eq!(pow2_rational_floor(&rat(13, 1)), 8192);
        assert_eq!(pow2_rational_floor(&rat(17, 2)), 362);
    }

    #[test]
    fn ladder_decides() {
        let x = Interval::from_rational(&rat(1, 1000), 256);
        assert_eq!(decide_sign(|b| x.with_bits(b)), Some(true));
        assert_eq!(decide_sign(|b| Interval::zero(b)), None);
    }
}
