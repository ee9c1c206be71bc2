//! Brute-force ground truth on small fields.
//!
//! Everything here enumerates the whole field. A discrete-log table turns
//! multiplication into index addition, and F_p-linear maps (traces, the
//! F_q[x]-action) are tabulated once, so a count costs one pass over the
//! unit group.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cyclofactor::{explicit_factors, CosetProfile, Factor};
use crate::ffield::{FFElem, FieldCtx, FieldError};
use crate::ntheory::{prime_factors_u64, Factorization};
use crate::par;
use crate::poly::{self, Field, Poly};

/// Largest field the oracle will enumerate.
pub const ORACLE_CAP: u64 = 1_000_000;
/// The formula evaluation is quadratic in the field size.
pub const FORMULA_CAP: u64 = 20_000;
/// Formula versus count, absolute.
pub const FORMULA_TOL: f64 = 1e-4;
pub const IMAG_TOL: f64 = 1e-6;
/// Characteristic functions must be 0 or 1 to within this.
pub const CHAR_TOL: f64 = 1e-6;
const MAX_FORMULA_FACTORS: usize = 8;
const NO_LOG: u32 = u32::MAX;
const CHUNK: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("field has {size} elements, above the oracle cap {cap}")]
    CapExceeded { size: String, cap: u64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("a must be the square of b with b a nonzero element of F_q (the relaxed count drops this tie)")]
    NotSquare,
    #[error("value lies outside the subfield F_q")]
    OutsideSubfield,
    #[error("rational function not admissible: {0}")]
    BadFunction(String),
    #[error("{0} is not a prime factor of q^n - 1")]
    NotGroupPrime(u64),
    #[error("factor index {0} out of range")]
    BadFactor(usize),
    #[error("x^n - 1 has {0} irreducible factors, too many for the formula evaluation")]
    TooManyFactors(usize),
    #[error("decomposition arguments overlap: {0}")]
    Overlap(&'static str),
}

// ------------------------------------------------------------------ codes

/// Dense integer codes of field elements, c0 least significant.
#[derive(Clone, Debug)]
struct Codec {
    p: u32,
    pw: Vec<u32>,
}

impl Codec {
    fn new(p: u32, deg: usize) -> Codec {
        let mut pw = Vec::with_capacity(deg);
        let mut x = 1u32;
        for _ in 0..deg {
            pw.push(x);
            x = x.wrapping_mul(p);
        }
        Codec { p, pw }
    }

    fn add(&self, mut x: u32, mut y: u32) -> u32 {
        let p = self.p;
        let mut out = 0;
        for &w in &self.pw {
            if x == 0 && y == 0 {
                break;
            }
            out += ((x % p + y % p) % p) * w;
            x /= p;
            y /= p;
        }
        out
    }

    fn neg(&self, mut x: u32) -> u32 {
        let p = self.p;
        let mut out = 0;
        for &w in &self.pw {
            if x == 0 {
                break;
            }
            out += ((p - x % p) % p) * w;
            x /= p;
        }
        out
    }

    /// Position of the most significant nonzero digit (code > 0).
    fn top(&self, code: u32) -> usize {
        self.pw.iter().rposition(|&w| w <= code).expect("nonzero code")
    }

    /// Tabulates an F_p-linear map from the images of the basis vectors.
    fn linear_table(&self, size: usize, images: &[u32]) -> Vec<u32> {
        let mut t = vec![0u32; size];
        for code in 1..size as u32 {
            let j = self.top(code);
            t[code as usize] = self.add(t[(code - self.pw[j]) as usize], images[j]);
        }
        t
    }
}

// ------------------------------------------------------------------ tables

/// Discrete logarithms and additive phases over the whole field.
pub struct CharacterTables {
    pub generator: FFElem,
    /// dlog[code]; undefined (u32::MAX) at zero
    pub dlog: Vec<u32>,
    /// exp[j] = code of generator^j
    pub exp: Vec<u32>,
    /// Tr_{q^n/p}(ε) by code
    pub phase: Vec<u32>,
}

/// Description of a field that is enough to rebuild it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub k: u32,
    pub n: u32,
    pub modulus: String,
}

impl FieldSpec {
    pub fn of(ctx: &FieldCtx) -> FieldSpec {
        FieldSpec { p: ctx.p, k: ctx.k, n: ctx.n, modulus: poly::format_fp(&ctx.modulus) }
    }
}

/// f = f₁/f₂ with coefficients in F_{q^n}.
#[derive(Clone, Debug)]
pub struct RatFn {
    pub f1: Poly<FFElem>,
    pub f2: Poly<FFElem>,
    pub label: String,
}

impl RatFn {
    pub fn new(ctx: &FieldCtx, f1: Poly<FFElem>, f2: Poly<FFElem>) -> RatFn {
        let f1 = poly::trim(ctx, f1);
        let f2 = poly::trim(ctx, f2);
        let label = format!("({})/({})", ctx.format_poly(&f1), ctx.format_poly(&f2));
        RatFn { f1, f2, label }
    }

    /// Coefficients from F_p.
    pub fn from_fp(ctx: &FieldCtx, f1: &[u32], f2: &[u32]) -> RatFn {
        RatFn::new(ctx, ctx.embed_fp_poly(f1), ctx.embed_fp_poly(f2))
    }

    pub fn degrees(&self, ctx: &FieldCtx) -> (usize, usize) {
        (poly::degree(ctx, &self.f1).unwrap_or(0), poly::degree(ctx, &self.f2).unwrap_or(0))
    }

    /// Membership in R_{q,n}(m₁, m₂): f₁, f₂ coprime, each irreducible or a nonzero constant.
    pub fn validate(&self, ctx: &FieldCtx) -> Result<(), OracleError> {
        for (name, h) in [("numerator", &self.f1), ("denominator", &self.f2)] {
            match poly::degree(ctx, h) {
                None => return Err(OracleError::BadFunction(format!("{name} is zero"))),
                Some(0) => {}
                Some(_) => {
                    if !is_irreducible_over(ctx, h) {
                        return Err(OracleError::BadFunction(format!("{name} {} is reducible", ctx.format_poly(h))));
                    }
                }
            }
        }
        let g = poly::gcd(ctx, &self.f1, &self.f2);
        if poly::degree(ctx, &g) != Some(0) {
            return Err(OracleError::BadFunction("numerator and denominator share a factor".into()));
        }
        Ok(())
    }
}

/// Rabin's test over the big field F_{q^n}.
pub fn is_irreducible_over(ctx: &FieldCtx, h: &[FFElem]) -> bool {
    let h = poly::monic(ctx, h);
    let Some(d) = poly::degree(ctx, &h) else { return false };
    if d <= 1 {
        return d == 1;
    }
    let x = vec![ctx.zero(), ctx.one()];
    let mut pows = vec![x.clone()];
    for _ in 0..d {
        let next = poly::powmod(ctx, pows.last().unwrap(), &ctx.order, &h);
        pows.push(next);
    }
    if !poly::trim(ctx, poly::sub(ctx, &pows[d], &x)).is_empty() {
        return false;
    }
    prime_factors_u64(d as u64).iter().all(|&(r, _)| {
        let diff = poly::sub(ctx, &pows[d / r as usize], &x);
        poly::degree(ctx, &poly::gcd(ctx, &diff, &h)) == Some(0)
    })
}

/// Which freeness conditions a count imposes.
///
/// `l1`, `l2` list prime divisors of q^n − 1; `g1`, `g2` list indices into
/// [`Oracle::factors`]. The x − 1 factor is dropped from `g1` when counting,
/// since ε is g₁-free exactly when it is L_{g₁}-free.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreenessSpec {
    pub l1: Vec<u64>,
    pub l2: Vec<u64>,
    pub g1: Vec<usize>,
    pub g2: Vec<usize>,
}

impl FreenessSpec {
    pub fn trivial() -> FreenessSpec {
        FreenessSpec::default()
    }

    /// l₁ = l₂ = q^n − 1, g₁ = g₂ = x^n − 1: primitive normal pairs.
    pub fn full(o: &Oracle) -> FreenessSpec {
        let all: Vec<usize> = (0..o.factors.len()).collect();
        FreenessSpec { l1: o.group_primes.clone(), l2: o.group_primes.clone(), g1: all.clone(), g2: all }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Masks {
    l1: u64,
    l2: u64,
    g1: u64,
    g2: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFlags {
    pub eps_primitive: bool,
    pub eps_normal: bool,
    pub f_primitive: bool,
    pub f_normal: bool,
}

/// A counted element, self-contained so it can be checked without the oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub field: FieldSpec,
    pub f: String,
    pub f1: Vec<String>,
    pub f2: Vec<String>,
    pub a: String,
    pub b: String,
    pub epsilon: String,
    pub dlog_index: u64,
    pub f_value: String,
    pub flags: WitnessFlags,
    pub trace_val: String,
    pub trace_sq_val: String,
    pub subtrace_val: String,
}

impl WitnessRecord {
    /// Recomputes every field of the record from ε with [`FieldCtx`] methods only.
    pub fn reverify(&self, ctx: &FieldCtx) -> bool {
        if FieldSpec::of(ctx) != self.field {
            return false;
        }
        let parse = |v: &[String]| v.iter().map(|s| FFElem::parse(s)).collect::<Option<Vec<_>>>();
        let (Some(eps), Some(f1), Some(f2)) = (FFElem::parse(&self.epsilon), parse(&self.f1), parse(&self.f2)) else {
            return false;
        };
        let Ok(Some(fv)) = ctx.eval_rational(&f1, &f2, &eps) else { return false };
        if ctx.is_zero(&fv) || fv.to_string() != self.f_value {
            return false;
        }
        let flags = WitnessFlags {
            eps_primitive: ctx.is_primitive(&eps).unwrap_or(false),
            eps_normal: ctx.is_normal(&eps),
            f_primitive: ctx.is_primitive(&fv).unwrap_or(false),
            f_normal: ctx.is_normal(&fv),
        };
        let tr = ctx.rel_trace(&eps);
        let tr2 = ctx.rel_trace(&ctx.mul(&eps, &eps));
        let st = ctx.subtrace_direct(&eps);
        let st_id = ctx.mul(&ctx.sub(&ctx.mul(&tr, &tr), &tr2), &ctx.inv(&ctx.from_int(2)).unwrap());
        let gen = ctx.primitive_element();
        let dlog_ok = gen.map(|g| ctx.pow_u64(&g, self.dlog_index) == eps).unwrap_or(false);
        flags == self.flags
            && dlog_ok
            && tr.to_string() == self.trace_val
            && tr2.to_string() == self.trace_sq_val
            && st == st_id
            && st.to_string() == self.subtrace_val
    }

    pub fn is_primitive_normal_pair(&self) -> bool {
        let f = self.flags;
        f.eps_primitive && f.eps_normal && f.f_primitive && f.f_normal
    }
}

#[derive(Clone, Debug)]
pub struct CountResult {
    pub count: u64,
    pub witnesses: Vec<WitnessRecord>,
    /// |Z₁|: zero plus the zeros of f₁f₂ in the field
    pub z1_size: u64,
    pub relaxed: bool,
}

/// Tabulated field plus the irreducible factors of x^n − 1.
pub struct Oracle {
    pub ctx: FieldCtx,
    pub tables: CharacterTables,
    codec: Codec,
    size: usize,
    pub q: u64,
    /// codes of the embedded F_q, ordered by subfield coordinates
    pub fq: Vec<u32>,
    /// Tr_{q/p} on F_q, keyed by code
    fq_trace: HashMap<u32, u32>,
    pub group_primes: Vec<u64>,
    prime_mask: Vec<u64>,
    pub profile: CosetProfile,
    /// monic irreducible factors of x^n − 1 over F_q, in profile order
    pub factors: Vec<Poly<FFElem>>,
    x_minus_1: Option<usize>,
    nonfree: Vec<u64>,
    rel_trace: Vec<u32>,
}

impl Oracle {
    pub fn new(ctx: FieldCtx) -> Result<Oracle, OracleError> {
        Self::with_cap(ctx, ORACLE_CAP)
    }

    pub fn with_cap(ctx: FieldCtx, cap: u64) -> Result<Oracle, OracleError> {
        let size = match ctx.size() {
            Some(s) if s <= cap => s as usize,
            _ => return Err(OracleError::CapExceeded { size: ctx.order.to_string(), cap }),
        };
        let codec = Codec::new(ctx.p, ctx.degree());
        let qm1 = size - 1;
        let generator = ctx.primitive_element()?;
        let mut exp = Vec::with_capacity(qm1);
        let mut dlog = vec![NO_LOG; size];
        let mut x = ctx.one();
        for j in 0..qm1 {
            let c = ctx.encode(&x) as usize;
            assert_eq!(dlog[c], NO_LOG, "generator of order below q^n - 1");
            dlog[c] = j as u32;
            exp.push(c as u32);
            x = ctx.mul(&x, &generator);
        }
        let basis: Vec<FFElem> = (0..ctx.degree())
            .map(|i| {
                let mut c = vec![0; ctx.degree()];
                c[i] = 1;
                ctx.elem(&c)
            })
            .collect();
        let phase_img: Vec<u32> = basis.iter().map(|b| ctx.abs_trace(b)).collect();
        let phase = codec.linear_table(size, &phase_img);
        let tr_img: Vec<u32> = basis.iter().map(|b| ctx.encode(&ctx.rel_trace(b)) as u32).collect();
        let rel_trace = codec.linear_table(size, &tr_img);

        let k = ctx.k as usize;
        let q = ctx.q.to_u64().expect("small q");
        let mut fq = Vec::with_capacity(q as usize);
        let mut fq_trace = HashMap::new();
        for idx in 0..q {
            let mut coords = vec![0u32; k];
            let mut t = idx;
            for c in coords.iter_mut() {
                *c = (t % ctx.p as u64) as u32;
                t /= ctx.p as u64;
            }
            let e = ctx.from_subfield_coords(&coords);
            let mut acc = ctx.zero();
            let mut y = e.clone();
            for _ in 0..k {
                acc = ctx.add(&acc, &y);
                y = ctx.frobenius_p(&y);
            }
            let code = ctx.encode(&e) as u32;
            fq.push(code);
            fq_trace.insert(code, acc.coeffs[0]);
        }

        let group_primes: Vec<u64> = prime_factors_u64(qm1 as u64).into_iter().map(|(r, _)| r).collect();
        assert!(group_primes.len() <= 64);
        let prime_mask: Vec<u64> = (0..size)
            .map(|c| {
                let j = dlog[c];
                if j == NO_LOG {
                    return 0;
                }
                group_primes
                    .iter()
                    .enumerate()
                    .filter(|&(_, &r)| j as u64 % r == 0)
                    .fold(0u64, |m, (i, _)| m | 1 << i)
            })
            .collect();

        let ef = explicit_factors(ctx.p, ctx.k, ctx.n as u64)?;
        let factors: Vec<Poly<FFElem>> = (0..ef.factors.len())
            .map(|i| ef.factor_in(&ctx, i).expect("factor has F_q coefficients"))
            .collect();
        assert!(factors.len() <= 64);
        let profile = ef.profile.clone();
        let x_minus_1 = profile.cosets.iter().position(|c| c == &vec![0]);
        let cof = ctx.freeness_cofactors(&factors)?;
        let mut nonfree = vec![0u64; size];
        for (i, c) in cof.iter().enumerate() {
            let img: Vec<u32> = basis.iter().map(|b| ctx.encode(&ctx.poly_action_unchecked(c, b)) as u32).collect();
            let t = codec.linear_table(size, &img);
            for (m, &v) in nonfree.iter_mut().zip(&t) {
                if v == 0 {
                    *m |= 1 << i;
                }
            }
        }
        Ok(Oracle {
            tables: CharacterTables { generator, dlog, exp, phase },
            ctx,
            codec,
            size,
            q,
            fq,
            fq_trace,
            group_primes,
            prime_mask,
            profile,
            factors,
            x_minus_1,
            nonfree,
            rel_trace,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn code(&self, e: &FFElem) -> u32 {
        self.ctx.encode(e) as u32
    }

    pub fn elem(&self, code: u32) -> FFElem {
        self.ctx.decode(code as u64)
    }

    /// The factor list in the sieve's [`Factor`] form.
    pub fn factor_keys(&self) -> Vec<Factor> {
        self.profile.factors()
    }

    pub fn x_minus_1_index(&self) -> Option<usize> {
        self.x_minus_1
    }

    fn mul(&self, x: u32, y: u32) -> u32 {
        if x == 0 || y == 0 {
            return 0;
        }
        let t = &self.tables;
        let s = (t.dlog[x as usize] as u64 + t.dlog[y as usize] as u64) % (self.size as u64 - 1);
        t.exp[s as usize]
    }

    fn inv(&self, x: u32) -> Option<u32> {
        if x == 0 {
            return None;
        }
        let t = &self.tables;
        let j = t.dlog[x as usize] as usize;
        Some(t.exp[(self.size - 1 - j) % (self.size - 1)])
    }

    fn eval_codes(&self, h: &[u32], x: u32) -> u32 {
        h.iter().rev().fold(0, |acc, &c| self.codec.add(self.mul(acc, x), c))
    }

    fn poly_codes(&self, h: &[FFElem]) -> Vec<u32> {
        h.iter().map(|c| self.code(c)).collect()
    }

    /// f(ε) for every code: `None` on Z₁ (ε = 0, or a zero of f₁ or f₂).
    fn f_values(&self, f: &RatFn) -> Vec<Option<u32>> {
        let f1 = self.poly_codes(&f.f1);
        let f2 = self.poly_codes(&f.f2);
        par::map_range(self.size, |c| {
            if c == 0 {
                return None;
            }
            let num = self.eval_codes(&f1, c as u32);
            let den = self.eval_codes(&f2, c as u32);
            if num == 0 || den == 0 {
                return None;
            }
            Some(self.mul(num, self.inv(den)?))
        })
    }

    fn masks(&self, spec: &FreenessSpec) -> Result<Masks, OracleError> {
        let lmask = |l: &[u64]| {
            l.iter().try_fold(0u64, |m, r| match self.group_primes.iter().position(|x| x == r) {
                Some(i) => Ok(m | 1 << i),
                None => Err(OracleError::NotGroupPrime(*r)),
            })
        };
        let gmask = |g: &[usize], drop_x1: bool| {
            g.iter().try_fold(0u64, |m, &i| {
                if i >= self.factors.len() {
                    return Err(OracleError::BadFactor(i));
                }
                if drop_x1 && Some(i) == self.x_minus_1 {
                    return Ok(m);
                }
                Ok(m | 1 << i)
            })
        };
        Ok(Masks { l1: lmask(&spec.l1)?, l2: lmask(&spec.l2)?, g1: gmask(&spec.g1, true)?, g2: gmask(&spec.g2, false)? })
    }

    fn in_fq(&self, e: &FFElem) -> Result<u32, OracleError> {
        let c = self.code(e);
        if self.fq_trace.contains_key(&c) {
            Ok(c)
        } else {
            Err(OracleError::OutsideSubfield)
        }
    }

    /// The number of ε ∉ Z₁ with ε l₁-free and L_{g₁}-free, f(ε) l₂-free and
    /// g₂-free, Tr(ε) = b and Tr(ε²) = −a. Requires a = b² with b ≠ 0.
    pub fn count_c(&self, f: &RatFn, a: &FFElem, b: &FFElem, spec: &FreenessSpec, max_witnesses: usize) -> Result<CountResult, OracleError> {
        let (ac, bc) = (self.in_fq(a)?, self.in_fq(b)?);
        if bc == 0 || self.mul(bc, bc) != ac {
            return Err(OracleError::NotSquare);
        }
        self.count_inner(f, ac, bc, spec, max_witnesses, false)
    }

    /// Same count for arbitrary a, b ∈ F_q, without the a = b² tie. Counted
    /// elements then have subtrace (b² + a)/2 rather than a.
    pub fn count_c_relaxed(&self, f: &RatFn, a: &FFElem, b: &FFElem, spec: &FreenessSpec, max_witnesses: usize) -> Result<CountResult, OracleError> {
        let (ac, bc) = (self.in_fq(a)?, self.in_fq(b)?);
        self.count_inner(f, ac, bc, spec, max_witnesses, true)
    }

    fn count_inner(&self, f: &RatFn, a: u32, b: u32, spec: &FreenessSpec, max_w: usize, relaxed: bool) -> Result<CountResult, OracleError> {
        f.validate(&self.ctx)?;
        let masks = self.masks(spec)?;
        let fv = self.f_values(f);
        let z1 = fv.iter().filter(|v| v.is_none()).count() as u64;
        let (count, js) = self.count_masks(&fv, a, b, masks, max_w);
        let witnesses = js.into_iter().map(|j| self.witness(f, a, b, j, &fv, relaxed)).collect();
        Ok(CountResult { count, witnesses, z1_size: z1, relaxed })
    }

    /// Core loop over ε = gen^j in ascending j; returns the count and the first witnesses.
    fn count_masks(&self, fv: &[Option<u32>], a: u32, b: u32, m: Masks, max_w: usize) -> (u64, Vec<usize>) {
        let neg_a = self.codec.neg(a);
        let qm1 = self.size - 1;
        let chunks = qm1.div_ceil(CHUNK);
        let t = &self.tables;
        let parts = par::map_range(chunks, |ci| {
            let mut cnt = 0u64;
            let mut first = Vec::new();
            for j in ci * CHUNK..((ci + 1) * CHUNK).min(qm1) {
                let e = t.exp[j];
                let Some(v) = fv[e as usize] else { continue };
                if self.rel_trace[e as usize] != b {
                    continue;
                }
                let sq = t.exp[(2 * j) % qm1];
                if self.rel_trace[sq as usize] != neg_a {
                    continue;
                }
                if self.prime_mask[e as usize] & m.l1 != 0 || self.nonfree[e as usize] & m.g1 != 0 {
                    continue;
                }
                if self.prime_mask[v as usize] & m.l2 != 0 || self.nonfree[v as usize] & m.g2 != 0 {
                    continue;
                }
                cnt += 1;
                if first.len() < max_w {
                    first.push(j);
                }
            }
            (cnt, first)
        });
        let mut total = 0;
        let mut js = Vec::new();
        for (c, f) in parts {
            total += c;
            for j in f {
                if js.len() < max_w {
                    js.push(j);
                }
            }
        }
        (total, js)
    }

    fn witness(&self, f: &RatFn, a: u32, b: u32, j: usize, fv: &[Option<u32>], relaxed: bool) -> WitnessRecord {
        let ctx = &self.ctx;
        let ec = self.tables.exp[j];
        let eps = self.elem(ec);
        let v = fv[ec as usize].expect("counted element lies outside Z1");
        let tr = ctx.rel_trace(&eps);
        let tr2 = ctx.rel_trace(&ctx.mul(&eps, &eps));
        let st = ctx.subtrace_identity(&eps);
        if !relaxed {
            assert_eq!(self.code(&st), a, "counted element has subtrace different from a");
        }
        let all_l = (1u64 << self.group_primes.len()) - 1;
        let all_g = if self.factors.len() == 64 { u64::MAX } else { (1u64 << self.factors.len()) - 1 };
        let flags = WitnessFlags {
            eps_primitive: self.prime_mask[ec as usize] & all_l == 0,
            eps_normal: self.nonfree[ec as usize] & all_g == 0,
            f_primitive: self.prime_mask[v as usize] & all_l == 0,
            f_normal: self.nonfree[v as usize] & all_g == 0,
        };
        WitnessRecord {
            field: FieldSpec::of(ctx),
            f: f.label.clone(),
            f1: f.f1.iter().map(|c| c.to_string()).collect(),
            f2: f.f2.iter().map(|c| c.to_string()).collect(),
            a: self.elem(a).to_string(),
            b: self.elem(b).to_string(),
            epsilon: eps.to_string(),
            dlog_index: j as u64,
            f_value: self.elem(v).to_string(),
            flags,
            trace_val: tr.to_string(),
            trace_sq_val: tr2.to_string(),
            subtrace_val: st.to_string(),
        }
    }

    /// Elements with Tr(ε) = b and Tr(ε²) = −a, by a plain loop over all
    /// elements using field arithmetic only.
    pub fn direct_trace_count(&self, a: &FFElem, b: &FFElem) -> u64 {
        let ctx = &self.ctx;
        let neg_a = ctx.neg(a);
        par::sum_range_u64(self.size, |c| {
            let e = self.elem(c as u32);
            (ctx.rel_trace(&e) == *b && ctx.rel_trace(&ctx.mul(&e, &e)) == neg_a) as u64
        })
    }

    /// Pairs (a, b) with b ∈ F_q^* and a = b².
    pub fn square_pairs(&self) -> Vec<(FFElem, FFElem)> {
        self.fq
            .iter()
            .filter(|&&b| b != 0)
            .map(|&b| (self.elem(self.mul(b, b)), self.elem(b)))
            .collect()
    }

    // -------------------------------------------------------------- characters

    fn zeta(&self) -> Vec<Complex64> {
        let p = self.ctx.p;
        (0..p).map(|s| Complex64::from_polar(1.0, TAU * s as f64 / p as f64)).collect()
    }

    fn tr_qp(&self, code: u32) -> u32 {
        self.fq_trace[&code]
    }

    /// Σ over characters of exact order d of χ(gen^j) = Σ_{c ∈ (Z/d)^*} e^{2πi cj/d}.
    /// The value depends on j only through gcd(j, d), which keys the cache.
    fn order_d_sum(cache: &mut HashMap<(u64, u64), Complex64>, d: u64, j: u64) -> Complex64 {
        let g = j.gcd(&d);
        *cache.entry((d, g)).or_insert_with(|| {
            let mut acc = Kahan::default();
            for c in 0..d {
                if c.gcd(&d) == 1 {
                    acc.add(Complex64::from_polar(1.0, TAU * ((c as u128 * g as u128) % d as u128) as f64 / d as f64));
                }
            }
            acc.value()
        })
    }

    /// F_q[x]-orders of the additive characters λ_y, restricted to squarefree
    /// products of the factors in `universe`: for each subset mask S, the y
    /// whose character has order exactly Π_{i∈S} P_i.
    fn additive_classes(&self, universe: u64) -> HashMap<u64, Vec<u32>> {
        let ctx = &self.ctx;
        let bits: Vec<usize> = (0..self.factors.len()).filter(|i| universe >> i & 1 == 1).collect();
        let subsets: Vec<u64> = (0..1u64 << bits.len())
            .map(|s| bits.iter().enumerate().filter(|&(t, _)| s >> t & 1 == 1).fold(0u64, |m, (_, &i)| m | 1 << i))
            .collect();
        let basis: Vec<FFElem> = (0..ctx.degree())
            .map(|i| {
                let mut c = vec![0; ctx.degree()];
                c[i] = 1;
                ctx.elem(&c)
            })
            .collect();
        // h_S ∘ b_i for each subset and basis vector
        let images: HashMap<u64, Vec<u32>> = subsets
            .iter()
            .map(|&s| {
                let h = (0..self.factors.len())
                    .filter(|i| s >> i & 1 == 1)
                    .fold(vec![ctx.one()], |acc, i| poly::mul(ctx, &acc, &self.factors[i]));
                (s, basis.iter().map(|b| self.code(&ctx.poly_action_unchecked(&h, b))).collect())
            })
            .collect();
        let per_y: Vec<Option<u64>> = par::map_range(self.size, |y| {
            let ann = |s: u64| images[&s].iter().all(|&w| self.tables.phase[self.mul(y as u32, w) as usize] == 0);
            subsets.iter().copied().find(|&s| ann(s) && bits.iter().all(|&i| s >> i & 1 == 0 || !ann(s & !(1 << i))))
        });
        let mut classes: HashMap<u64, Vec<u32>> = subsets.iter().map(|&s| (s, Vec::new())).collect();
        for (y, s) in per_y.into_iter().enumerate() {
            if let Some(s) = s {
                classes.get_mut(&s).unwrap().push(y as u32);
            }
        }
        classes
    }

    /// Σ_{λ of order h} λ(ε) for every code ε, from phase histograms.
    fn additive_order_sums(&self, class: &[u32]) -> Vec<Complex64> {
        let zeta = self.zeta();
        let p = self.ctx.p as usize;
        par::map_range(self.size, |e| {
            let mut hist = vec![0u64; p];
            for &y in class {
                hist[self.tables.phase[self.mul(y, e as u32) as usize] as usize] += 1;
            }
            hist.iter().zip(&zeta).map(|(&c, z)| z * c as f64).sum()
        })
    }

    /// Σ_{t,u ∈ F_q} λ₀(−bt + au) λ̂₀(tε + uε²), with λ̂₀ = λ₀ ∘ Tr_{q^n/q}.
    fn trace_kernel(&self, e: u32, a: u32, b: u32, zeta: &[Complex64]) -> Complex64 {
        let p = self.ctx.p;
        let e2 = self.mul(e, e);
        let nb = self.codec.neg(b);
        let mut hist = vec![0u64; p as usize];
        for &t in &self.fq {
            let te = self.mul(t, e);
            let bt = self.mul(nb, t);
            for &u in &self.fq {
                let inner = self.codec.add(bt, self.mul(a, u));
                let outer = self.rel_trace[self.codec.add(te, self.mul(u, e2)) as usize];
                hist[((self.tr_qp(inner) + self.tr_qp(outer)) % p) as usize] += 1;
            }
        }
        hist.iter().zip(zeta).map(|(&c, z)| z * c as f64).sum()
    }

    /// The counting formula: G · Σ_{d₁|l₁, d₂|l₂, h₁|L_{g₁}, h₂|g₂} μ/φ ·
    /// Σ_{χ_{d₁},χ_{d₂},λ_{h₁},λ_{h₂}} Σ_{t,u} λ₀(−bt+au) Σ_{ε∉Z₁} χ_{d₁}(ε)χ_{d₂}(f(ε))λ_{h₁}(ε)λ_{h₂}(f(ε))λ̂₀(tε+uε²).
    ///
    /// Each inner character sum is grouped by exact order before the ε loop, so
    /// the ε sum runs once per divisor tuple. The real part equals [`Oracle::count_c`].
    pub fn eval_count_formula(&self, f: &RatFn, a: &FFElem, b: &FFElem, spec: &FreenessSpec) -> Result<Complex64, OracleError> {
        if self.size as u64 > FORMULA_CAP {
            return Err(OracleError::CapExceeded { size: self.size.to_string(), cap: FORMULA_CAP });
        }
        f.validate(&self.ctx)?;
        let (ac, bc) = (self.in_fq(a)?, self.in_fq(b)?);
        let masks = self.masks(spec)?;
        let nf = (masks.g1 | masks.g2).count_ones() as usize;
        if nf > MAX_FORMULA_FACTORS {
            return Err(OracleError::TooManyFactors(nf));
        }
        let fv = self.f_values(f);
        let elems: Vec<(u32, u32)> = (1..self.size as u32).filter_map(|e| fv[e as usize].map(|v| (e, v))).collect();
        let zeta = self.zeta();
        let qf = self.q as f64;

        let divisors = |mask: u64| -> Vec<(u64, f64)> {
            let primes: Vec<u64> = (0..self.group_primes.len()).filter(|i| mask >> i & 1 == 1).map(|i| self.group_primes[i]).collect();
            (0..1u64 << primes.len())
                .map(|s| {
                    let chosen: Vec<u64> = (0..primes.len()).filter(|t| s >> t & 1 == 1).map(|t| primes[t]).collect();
                    let d: u64 = chosen.iter().product();
                    let phi: u64 = chosen.iter().map(|r| r - 1).product();
                    let mu = if chosen.len() % 2 == 0 { 1.0 } else { -1.0 };
                    (d, mu / phi as f64)
                })
                .collect()
        };
        let poly_divisors = |mask: u64| -> Vec<(u64, f64)> {
            let bits: Vec<usize> = (0..self.factors.len()).filter(|i| mask >> i & 1 == 1).collect();
            (0..1u64 << bits.len())
                .map(|s| {
                    let chosen: Vec<usize> = (0..bits.len()).filter(|t| s >> t & 1 == 1).map(|t| bits[t]).collect();
                    let sm = chosen.iter().fold(0u64, |m, &i| m | 1 << i);
                    let big_phi: f64 = chosen.iter().map(|&i| qf.powi(self.factors[i].len() as i32 - 1) - 1.0).product();
                    let mu = if chosen.len() % 2 == 0 { 1.0 } else { -1.0 };
                    (sm, mu / big_phi)
                })
                .collect()
        };
        let d1s = divisors(masks.l1);
        let d2s = divisors(masks.l2);
        let h1s = poly_divisors(masks.g1);
        let h2s = poly_divisors(masks.g2);

        let mut cache = HashMap::new();
        let dl = |c: u32| self.tables.dlog[c as usize] as u64;
        let x1: Vec<Vec<Complex64>> = d1s.iter().map(|&(d, _)| elems.iter().map(|&(e, _)| Self::order_d_sum(&mut cache, d, dl(e))).collect()).collect();
        let x2: Vec<Vec<Complex64>> = d2s.iter().map(|&(d, _)| elems.iter().map(|&(_, v)| Self::order_d_sum(&mut cache, d, dl(v))).collect()).collect();
        let classes = self.additive_classes(masks.g1 | masks.g2);
        let mut ysum: HashMap<u64, Vec<Complex64>> = HashMap::new();
        for &(s, _) in h1s.iter().chain(&h2s) {
            ysum.entry(s).or_insert_with(|| self.additive_order_sums(&classes[&s]));
        }
        let kernel: Vec<Complex64> = par::map_collect(elems.clone(), |(e, _)| self.trace_kernel(e, ac, bc, &zeta));

        let mut tuples = Vec::new();
        for (i1, &(_, w1)) in d1s.iter().enumerate() {
            for (i2, &(_, w2)) in d2s.iter().enumerate() {
                for &(s1, w3) in &h1s {
                    for &(s2, w4) in &h2s {
                        tuples.push((i1, i2, s1, s2, w1 * w2 * w3 * w4));
                    }
                }
            }
        }
        let inner = par::map_collect(tuples, |(i1, i2, s1, s2, w)| {
            let (y1, y2) = (&ysum[&s1], &ysum[&s2]);
            let mut acc = Kahan::default();
            for (idx, &(e, v)) in elems.iter().enumerate() {
                acc.add(x1[i1][idx] * x2[i2][idx] * y1[e as usize] * y2[v as usize] * kernel[idx]);
            }
            acc.value() * w
        });
        let mut total = Kahan::default();
        for z in inner {
            total.add(z);
        }
        let g_pref = self.density(masks.l1, true) * self.density(masks.l2, true) * self.density(masks.g1, false) * self.density(masks.g2, false) / (qf * qf);
        Ok(total.value() * g_pref)
    }

    /// θ(l) for a prime mask, or Θ(g) for a factor mask.
    fn density(&self, mask: u64, integer: bool) -> f64 {
        if integer {
            (0..self.group_primes.len()).filter(|i| mask >> i & 1 == 1).map(|i| 1.0 - 1.0 / self.group_primes[i] as f64).product()
        } else {
            (0..self.factors.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| 1.0 - (self.q as f64).powi(-(self.factors[i].len() as i32 - 1)))
                .product()
        }
    }

    /// Right side of the lower-bound chain
    /// G{q^n − |Z₁|q² − q(q−1)q^{n/2} − 2m q^{n/2+2}(W(l₁)W(l₂)W(L_{g₁})W(g₂) − 1)}.
    pub fn count_lower_bound(&self, spec: &FreenessSpec, m: u64, z1_size: u64) -> Result<f64, OracleError> {
        let masks = self.masks(spec)?;
        let qf = self.q as f64;
        let big_q = self.size as f64;
        let g_pref = self.density(masks.l1, true) * self.density(masks.l2, true) * self.density(masks.g1, false) * self.density(masks.g2, false) / (qf * qf);
        let w = 2f64.powi((masks.l1.count_ones() + masks.l2.count_ones() + masks.g1.count_ones() + masks.g2.count_ones()) as i32);
        let root = big_q.sqrt();
        Ok(g_pref * (big_q - z1_size as f64 * qf * qf - qf * (qf - 1.0) * root - 2.0 * m as f64 * root * qf * qf * (w - 1.0)))
    }

    // ---------------------------------------------------- characteristic functions

    /// Evaluates ρ_l, κ_g and τ_a at every element and compares them with the
    /// direct predicates.
    pub fn char_fn_checks(&self, l: &[u64], g: &[usize], a: &FFElem) -> Result<CharFnReport, OracleError> {
        let spec = FreenessSpec { l1: l.to_vec(), g2: g.to_vec(), ..Default::default() };
        let masks = self.masks(&spec)?;
        let ac = self.in_fq(a)?;
        let nf = masks.g2.count_ones() as usize;
        if nf > MAX_FORMULA_FACTORS {
            return Err(OracleError::TooManyFactors(nf));
        }
        let ctx = &self.ctx;
        let zeta = self.zeta();
        let qm1 = (self.size - 1) as u64;
        let l_value: u64 = l.iter().product();
        let l_fact = Factorization::from_u64(l_value);
        let g_polys: Vec<Poly<FFElem>> = g.iter().map(|&i| self.factors[i].clone()).collect();

        // ρ_l(ε) = θ(l) Σ_{d|l} μ(d)/φ(d) Σ_{χ_d} χ_d(ε)
        let primes: Vec<u64> = l.to_vec();
        let theta = self.density(masks.l1, true);
        let mut cache = HashMap::new();
        let mut rho = Vec::with_capacity(self.size - 1);
        for j in 0..qm1 {
            let mut acc = Kahan::default();
            for s in 0..1u64 << primes.len() {
                let chosen: Vec<u64> = (0..primes.len()).filter(|t| s >> t & 1 == 1).map(|t| primes[t]).collect();
                let d: u64 = chosen.iter().product();
                let phi: u64 = chosen.iter().map(|r| r - 1).product();
                let mu = if chosen.len() % 2 == 0 { 1.0 } else { -1.0 };
                acc.add(Self::order_d_sum(&mut cache, d, j) * (mu / phi as f64));
            }
            rho.push(acc.value() * theta);
        }
        // κ_g(ε) = Θ(g) Σ_{h|g} μ_q(h)/Φ_q(h) Σ_{λ_h} λ_h(ε)
        let classes = self.additive_classes(masks.g2);
        let big_theta = self.density(masks.g2, false);
        let mut kappa = vec![Complex64::new(0.0, 0.0); self.size];
        for (&s, class) in &classes {
            let chosen: Vec<usize> = (0..self.factors.len()).filter(|i| s >> i & 1 == 1).collect();
            let big_phi: f64 = chosen.iter().map(|&i| (self.q as f64).powi(self.factors[i].len() as i32 - 1) - 1.0).product();
            let w = if chosen.len() % 2 == 0 { 1.0 } else { -1.0 } / big_phi;
            for (k, y) in kappa.iter_mut().zip(self.additive_order_sums(class)) {
                *k += y * w;
            }
        }
        for k in kappa.iter_mut() {
            *k *= big_theta;
        }

        let mut rep = CharFnReport::default();
        let mut rho_sum = Kahan::default();
        let mut kappa_sum = Kahan::default();
        let mut tau_sum = Kahan::default();
        for code in 0..self.size as u32 {
            let e = self.elem(code);
            if code != 0 {
                let r = rho[self.tables.dlog[code as usize] as usize];
                let want = ctx.is_l_free(&e, &l_fact)?;
                rep.max_deviation = rep.max_deviation.max(dev01(r));
                if (r.re > 0.5) != want || dev01(r) > CHAR_TOL {
                    rep.rho_mismatches += 1;
                }
                rep.l_free_count += want as u64;
                rho_sum.add(r);
            }
            let k = kappa[code as usize];
            let want = ctx.is_g_free(&e, &g_polys)?;
            rep.max_deviation = rep.max_deviation.max(dev01(k));
            if (k.re > 0.5) != want || dev01(k) > CHAR_TOL {
                rep.kappa_mismatches += 1;
            }
            rep.g_free_count += want as u64;
            kappa_sum.add(k);
            // τ_a(ε) = (1/q) Σ_t λ₀(t Tr(ε) − ta)
            let tr = self.code(&ctx.rel_trace(&e));
            let mut hist = vec![0u64; ctx.p as usize];
            for &t in &self.fq {
                let arg = self.codec.add(self.mul(t, tr), self.codec.neg(self.mul(t, ac)));
                hist[self.tr_qp(arg) as usize] += 1;
            }
            let tau: Complex64 = hist.iter().zip(&zeta).map(|(&c, z)| z * c as f64).sum::<Complex64>() / self.q as f64;
            let want = tr == ac;
            rep.max_deviation = rep.max_deviation.max(dev01(tau));
            if (tau.re > 0.5) != want || dev01(tau) > CHAR_TOL {
                rep.tau_mismatches += 1;
            }
            rep.trace_count += want as u64;
            tau_sum.add(tau);
        }
        rep.rho_total = rho_sum.value().re;
        rep.kappa_total = kappa_sum.value().re;
        rep.tau_total = tau_sum.value().re;
        let big_q = BigUint::from(self.size);
        rep.rho_expected = big_theta_int(&primes) * BigRational::from_integer((&big_q - 1u32).into());
        rep.kappa_expected = g
            .iter()
            .fold(BigRational::from_integer(big_q.clone().into()), |acc, &i| {
                let qd = BigRational::from_integer(BigUint::from(self.q).pow(self.factors[i].len() as u32 - 1).into());
                acc * (BigRational::one() - qd.recip())
            });
        rep.tau_expected = BigRational::new(big_q.clone().into(), BigUint::from(self.q).into());
        Ok(rep)
    }

    // ------------------------------------------------------------------ Weil

    /// Randomized admissible instances of the three Weil-type bounds, evaluated exhaustively.
    pub fn weil_checks(&self, trials: usize, seed: u64) -> WeilReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rep = WeilReport::default();
        let qm1 = (self.size - 1) as u64;
        let orders: Vec<u64> = crate::ntheory::divisors_u64(qm1).into_iter().filter(|&d| d > 1).collect();
        for t in 0..trials {
            let inst = loop {
                let cand = match t % 3 {
                    0 => self.random_multiplicative(&mut rng, &orders),
                    1 => self.random_mixed(&mut rng, &orders),
                    _ => self.random_additive(&mut rng),
                };
                match cand {
                    Some(i) => break i,
                    None => rep.skipped += 1,
                }
            };
            if inst.abs_sum > inst.bound * (1.0 + 1e-9) + 1e-9 {
                rep.violations.push(inst.clone());
            }
            rep.instances.push(inst);
        }
        rep
    }

    fn random_nonzero(&self, rng: &mut ChaCha8Rng) -> u32 {
        rng.gen_range(1..self.size as u32)
    }

    fn random_coprime(rng: &mut ChaCha8Rng, d: u64) -> u64 {
        loop {
            let c = rng.gen_range(1..d);
            if c.gcd(&d) == 1 {
                return c;
            }
        }
    }

    fn dlog_of(&self, c: u32) -> u64 {
        self.tables.dlog[c as usize] as u64
    }

    /// Distinct roots with nonzero exponents in −3..=3.
    fn random_linear_factors(&self, rng: &mut ChaCha8Rng) -> Vec<(u32, i64)> {
        let r = rng.gen_range(1..=3usize);
        let mut out: Vec<(u32, i64)> = Vec::new();
        while out.len() < r {
            let alpha = rng.gen_range(0..self.size as u32);
            if out.iter().any(|&(x, _)| x == alpha) {
                continue;
            }
            let mut e = rng.gen_range(1..=3i64);
            if rng.gen_bool(0.5) {
                e = -e;
            }
            out.push((alpha, e));
        }
        out
    }

    /// Bound on |Σ χ(f(ε))| for f = Π f_i^{a_i}, not of the form c·h^d.
    fn random_multiplicative(&self, rng: &mut ChaCha8Rng, orders: &[u64]) -> Option<WeilInstance> {
        let d = orders[rng.gen_range(0..orders.len())];
        let c = Self::random_coprime(rng, d);
        let qm1 = (self.size - 1) as u64;
        // factors as (monic polynomial codes, exponent)
        let mut factors: Vec<(Vec<u32>, i64)> = self
            .random_linear_factors(rng)
            .into_iter()
            .map(|(alpha, e)| (vec![self.codec.neg(alpha), 1], e))
            .collect();
        if rng.gen_bool(0.4) {
            // x² − s with s a non-square is irreducible
            let s = self.tables.exp[(2 * rng.gen_range(0..qm1 / 2) + 1) as usize];
            let e = if rng.gen_bool(0.5) { 1 } else { -2 };
            factors.push((vec![self.codec.neg(s), 0, 1], e));
        }
        if factors.iter().all(|&(_, e)| e.rem_euclid(d as i64) == 0) {
            return None;
        }
        let total_deg: usize = factors.iter().map(|(h, _)| h.len() - 1).sum();
        let bound = (total_deg as f64 - 1.0) * (self.size as f64).sqrt();
        let mut acc = Kahan::default();
        'eps: for x in 0..self.size as u32 {
            let mut jsum: i128 = 0;
            let mut zero = false;
            for (h, e) in &factors {
                let v = self.eval_codes(h, x);
                if v == 0 {
                    if *e < 0 {
                        continue 'eps;
                    }
                    zero = true;
                } else {
                    jsum += *e as i128 * self.dlog_of(v) as i128;
                }
            }
            if zero {
                continue;
            }
            let jm = jsum.rem_euclid(qm1 as i128) as u64;
            // χ(gen^J) = e^{2πi cJ/d}, and J mod d is read off from J mod q^n − 1
            let k = (c as u128 * (jm % d) as u128 % d as u128) as f64;
            acc.add(Complex64::from_polar(1.0, TAU * k / d as f64));
        }
        let desc = format!(
            "order {d} character (c={c}); f = {}",
            factors.iter().map(|(h, e)| format!("({})^{e}", self.format_codes(h))).collect::<Vec<_>>().join("·")
        );
        Some(WeilInstance { kind: WeilKind::Multiplicative, description: desc, abs_sum: acc.value().norm(), bound })
    }

    /// Bound on |Σ χ(f(ε))λ(g(ε))| for g = P(x) + e/(x − γ); the pole orders
    /// deg P and 1 are prime to p, so g ≠ h^p − h + β.
    fn random_mixed(&self, rng: &mut ChaCha8Rng, orders: &[u64]) -> Option<WeilInstance> {
        let p = self.ctx.p as usize;
        let r = orders[rng.gen_range(0..orders.len())];
        let c = Self::random_coprime(rng, r);
        let qm1 = (self.size - 1) as u64;
        let fac = self.random_linear_factors(rng);
        if fac.iter().all(|&(_, e)| e.rem_euclid(r as i64) == 0) {
            return None;
        }
        let y = self.random_nonzero(rng);
        let degs: Vec<usize> = (0..=4).filter(|d| d % p != 0).collect();
        let dp = if rng.gen_bool(0.3) { 0 } else { degs[rng.gen_range(0..degs.len())] };
        let mut gp: Vec<u32> = (0..=dp).map(|_| rng.gen_range(0..self.size as u32)).collect();
        if dp > 0 {
            gp[dp] = self.random_nonzero(rng);
        }
        let pole = if dp == 0 || rng.gen_bool(0.5) { Some((rng.gen_range(0..self.size as u32), self.random_nonzero(rng))) } else { None };
        let g_at = |x: u32| -> Option<u32> {
            let mut v = self.eval_codes(&gp, x);
            if let Some((gamma, e)) = pole {
                let den = self.codec.add(x, self.codec.neg(gamma));
                v = self.codec.add(v, self.mul(e, self.inv(den)?));
            }
            Some(v)
        };
        let deg_inf = dp + pole.is_some() as usize;
        let l = fac.len();
        // ∞ is always counted among the poles of g, as the conductor at ∞ needs it
        let l1 = 1 + pole.is_some() as usize;
        let l2 = fac
            .iter()
            .filter(|&&(alpha, e)| e < 0 && (pole.map(|(g, _)| g) == Some(alpha) || g_at(alpha) == Some(0)))
            .count();
        let bound = (deg_inf + l + l1) as f64 - l2 as f64 - 2.0;
        let bound = bound * (self.size as f64).sqrt();
        let zeta = self.zeta();
        let mut acc = Kahan::default();
        'eps: for x in 0..self.size as u32 {
            let mut jsum: i128 = 0;
            let mut zero = false;
            for &(alpha, e) in &fac {
                let v = self.codec.add(x, self.codec.neg(alpha));
                if v == 0 {
                    if e < 0 {
                        continue 'eps;
                    }
                    zero = true;
                } else {
                    jsum += e as i128 * self.dlog_of(v) as i128;
                }
            }
            let Some(gv) = g_at(x) else { continue };
            if zero {
                continue;
            }
            let jm = jsum.rem_euclid(qm1 as i128) as u64;
            let k = (c as u128 * (jm % r) as u128 % r as u128) as f64;
            let chi = Complex64::from_polar(1.0, TAU * k / r as f64);
            acc.add(chi * zeta[self.tables.phase[self.mul(y, gv) as usize] as usize]);
        }
        let desc = format!(
            "order {r} character (c={c}), λ_y y={}; f = {}; g = ({}){}",
            self.elem(y),
            fac.iter().map(|&(a, e)| format!("(x-{})^{e}", self.elem(a))).collect::<Vec<_>>().join("·"),
            self.format_codes(&gp),
            pole.map(|(g, e)| format!(" + {}/(x-{})", self.elem(e), self.elem(g))).unwrap_or_default()
        );
        Some(WeilInstance { kind: WeilKind::Mixed, description: desc, abs_sum: acc.value().norm(), bound })
    }

    fn random_additive(&self, rng: &mut ChaCha8Rng) -> Option<WeilInstance> {
        let p = self.ctx.p as usize;
        let degs: Vec<usize> = (1..=5).filter(|d| d % p != 0).collect();
        let d = degs[rng.gen_range(0..degs.len())];
        let mut h: Vec<u32> = (0..=d).map(|_| rng.gen_range(0..self.size as u32)).collect();
        h[d] = self.random_nonzero(rng);
        let y = self.random_nonzero(rng);
        Some(self.additive_sum(&h, y))
    }

    /// |Σ_{α ∈ F} λ_y(h(α))| against (deg h − 1)·|F|^{1/2}, the field here
    /// playing the role of the base field; h is given by coefficient codes.
    pub fn additive_sum(&self, h: &[u32], y: u32) -> WeilInstance {
        let zeta = self.zeta();
        let mut acc = Kahan::default();
        for x in 0..self.size as u32 {
            acc.add(zeta[self.tables.phase[self.mul(y, self.eval_codes(h, x)) as usize] as usize]);
        }
        let d = h.len() - 1;
        WeilInstance {
            kind: WeilKind::Additive,
            description: format!("λ_y y={}; f = {}", self.elem(y), self.format_codes(h)),
            abs_sum: acc.value().norm(),
            bound: (d as f64 - 1.0) * (self.size as f64).sqrt(),
        }
    }

    fn format_codes(&self, h: &[u32]) -> String {
        self.ctx.format_poly(&h.iter().map(|&c| self.elem(c)).collect::<Vec<_>>())
    }

    // ----------------------------------------------------------- decomposition

    /// Counts both sides of the sieve decomposition inequality
    /// C(kP, kP, gG, g′G′) ≥ Σ_i C(p_i k, k, g, g′) + Σ_i C(k, p_i k, g, g′)
    /// + Σ_j C(k, k, g_j g, g′) + Σ_j C(k, k, g, g′_j g′) − (2r+s+t−1) C(k, k, g, g′).
    #[allow(clippy::too_many_arguments)]
    pub fn verify_sieve_decomposition(
        &self,
        f: &RatFn,
        a: &FFElem,
        b: &FFElem,
        k: &[u64],
        big_p: &[u64],
        g: &[usize],
        big_g: &[usize],
        gp: &[usize],
        big_gp: &[usize],
    ) -> Result<DecompositionReport, OracleError> {
        if k.iter().any(|r| big_p.contains(r)) {
            return Err(OracleError::Overlap("gcd(k, P) > 1"));
        }
        if g.iter().any(|i| big_g.contains(i)) {
            return Err(OracleError::Overlap("gcd(g, G) > 1"));
        }
        if gp.iter().any(|i| big_gp.contains(i)) {
            return Err(OracleError::Overlap("gcd(g', G') > 1"));
        }
        let (ac, bc) = (self.in_fq(a)?, self.in_fq(b)?);
        if bc == 0 || self.mul(bc, bc) != ac {
            return Err(OracleError::NotSquare);
        }
        f.validate(&self.ctx)?;
        let fv = self.f_values(f);
        let cat = |x: &[u64], y: &[u64]| [x, y].concat();
        let catg = |x: &[usize], y: &[usize]| [x, y].concat();
        let count = |spec: FreenessSpec| -> Result<u64, OracleError> {
            Ok(self.count_masks(&fv, ac, bc, self.masks(&spec)?, 0).0)
        };
        let base = FreenessSpec { l1: k.to_vec(), l2: k.to_vec(), g1: g.to_vec(), g2: gp.to_vec() };
        let lhs = count(FreenessSpec { l1: cat(k, big_p), l2: cat(k, big_p), g1: catg(g, big_g), g2: catg(gp, big_gp) })?;
        let c0 = count(base.clone())?;
        let mut terms = Vec::new();
        for &r in big_p {
            terms.push(count(FreenessSpec { l1: cat(k, &[r]), ..base.clone() })?);
            terms.push(count(FreenessSpec { l2: cat(k, &[r]), ..base.clone() })?);
        }
        for &j in big_g {
            terms.push(count(FreenessSpec { g1: catg(g, &[j]), ..base.clone() })?);
        }
        for &j in big_gp {
            terms.push(count(FreenessSpec { g2: catg(gp, &[j]), ..base.clone() })?);
        }
        let (r, s, t) = (big_p.len() as i64, big_g.len() as i64, big_gp.len() as i64);
        let rhs = terms.iter().map(|&x| x as i64).sum::<i64>() - (2 * r + s + t - 1) * c0 as i64;
        Ok(DecompositionReport { lhs, rhs, base: c0, terms, holds: lhs as i64 >= rhs })
    }
}

fn big_theta_int(primes: &[u64]) -> BigRational {
    primes.iter().fold(BigRational::one(), |acc, &r| acc * BigRational::new((r - 1).into(), r.into()))
}

fn dev01(z: Complex64) -> f64 {
    z.re.abs().min((z.re - 1.0).abs()).max(z.im.abs())
}

/// Compensated summation of complex terms.
#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: Complex64,
    comp: Complex64,
}

impl Kahan {
    fn add(&mut self, x: Complex64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> Complex64 {
        self.sum
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CharFnReport {
    pub rho_total: f64,
    #[serde(serialize_with = "crate::ser::rational")]
    pub rho_expected: BigRational,
    pub kappa_total: f64,
    #[serde(serialize_with = "crate::ser::rational")]
    pub kappa_expected: BigRational,
    pub tau_total: f64,
    #[serde(serialize_with = "crate::ser::rational")]
    pub tau_expected: BigRational,
    pub l_free_count: u64,
    pub g_free_count: u64,
    pub trace_count: u64,
    pub rho_mismatches: u64,
    pub kappa_mismatches: u64,
    pub tau_mismatches: u64,
    pub max_deviation: f64,
}

impl CharFnReport {
    /// Pointwise agreement, and totals matching the densities exactly (counts) and numerically (sums).
    pub fn all_ok(&self) -> bool {
        let close = |x: f64, r: &BigRational| (x - crate::sieve::rat_to_f64(r)).abs() < 1e-6 * (1.0 + x.abs());
        let exact = |c: u64, r: &BigRational| *r == BigRational::from_integer(c.into());
        self.rho_mismatches == 0
            && self.kappa_mismatches == 0
            && self.tau_mismatches == 0
            && self.max_deviation < CHAR_TOL
            && close(self.rho_total, &self.rho_expected)
            && close(self.kappa_total, &self.kappa_expected)
            && close(self.tau_total, &self.tau_expected)
            && exact(self.l_free_count, &self.rho_expected)
            && exact(self.g_free_count, &self.kappa_expected)
            && exact(self.trace_count, &self.tau_expected)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WeilKind {
    /// |Σχ(f)| ≤ (Σ deg f_i − 1) q^{n/2}
    Multiplicative,
    /// |Σχ(f)λ(g)| ≤ (deg g_∞ + l + l′ − l″ − 2) q^{n/2}
    Mixed,
    /// |Σλ(f)| ≤ (deg f − 1) q^{1/2}
    Additive,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeilInstance {
    pub kind: WeilKind,
    pub description: String,
    pub abs_sum: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct WeilReport {
    pub instances: Vec<WeilInstance>,
    pub violations: Vec<WeilInstance>,
    /// candidates rejected as inadmissible before evaluation
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub lhs: u64,
    pub rhs: i64,
    /// C(k, k, g, g′)
    pub base: u64,
    pub terms: Vec<u64>,
    pub holds: bool,
}

/// Representatives of every split m₁ + m₂ = m for m ∈ {1, 2}: x, 1/x,
/// x² + c, x/(x + c), 1/(x² + c), with c ∈ F_q^*. Returns the functions and
/// the skipped candidates with reasons.
pub fn test_functions(o: &Oracle, max_m: usize) -> (Vec<RatFn>, Vec<String>) {
    let ctx = &o.ctx;
    let x = vec![ctx.zero(), ctx.one()];
    let one = vec![ctx.one()];
    let mut out = vec![RatFn::new(ctx, x.clone(), one.clone()), RatFn::new(ctx, one.clone(), x.clone())];
    let mut skipped = Vec::new();
    if max_m >= 2 {
        for &c in o.fq.iter().filter(|&&c| c != 0) {
            let ce = o.elem(c);
            let quad = vec![ce.clone(), ctx.zero(), ctx.one()];
            let lin = vec![ce.clone(), ctx.one()];
            let sq = RatFn::new(ctx, quad.clone(), one.clone());
            match sq.validate(ctx) {
                Ok(()) => {
                    out.push(sq);
                    out.push(RatFn::new(ctx, one.clone(), quad));
                }
                Err(e) => skipped.push(format!("{}: {e}", sq.label)),
            }
            out.push(RatFn::new(ctx, x.clone(), lin));
        }
    }
    out.retain(|f| f.validate(ctx).is_ok());
    (out, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(p: u32, k: u32, n: u32) -> Oracle {
        Oracle::new(FieldCtx::build(p, k, n).unwrap()).unwrap()
    }

    #[test]
    fn tables_consistent() {
        let o = oracle(3, 1, 5);
        let t = &o.tables;
        assert_eq!(t.exp.len(), 242);
        for (j, &c) in t.exp.iter().enumerate() {
            assert_eq!(t.dlog[c as usize] as usize, j);
        }
        assert!(o.ctx.is_primitive(&t.generator).unwrap());
        for c in 0..243u32 {
            assert_eq!(t.phase[c as usize], o.ctx.abs_trace(&o.elem(c)));
        }
        assert_eq!(o.factors.len(), 2);
        assert_eq!(o.group_primes, vec![2, 11]);
    }

    #[test]
    fn trivial_count_matches_double_loop() {
        let o = oracle(3, 1, 5);
        let f = RatFn::from_fp(&o.ctx, &[0, 1], &[1]);
        for (a, b) in o.square_pairs() {
            let r = o.count_c(&f, &a, &b, &FreenessSpec::trivial(), 0).unwrap();
            assert_eq!(r.count, o.direct_trace_count(&a, &b));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let o = oracle(3, 1, 5);
        let f = RatFn::from_fp(&o.ctx, &[0, 1], &[1]);
        let one = o.ctx.one();
        let two = o.ctx.from_int(2);
        assert!(matches!(o.count_c(&f, &two, &one, &FreenessSpec::trivial(), 0), Err(OracleError::NotSquare)));
        assert!(o.count_c_relaxed(&f, &two, &one, &FreenessSpec::trivial(), 0).is_ok());
        let bad = RatFn::from_fp(&o.ctx, &[2, 0, 1], &[1]);
        assert!(bad.validate(&o.ctx).is_err());
        let shared = RatFn::from_fp(&o.ctx, &[0, 1], &[0, 1]);
        assert!(shared.validate(&o.ctx).is_err());
        assert!(matches!(Oracle::with_cap(FieldCtx::build(3, 1, 7).unwrap(), 1000), Err(OracleError::CapExceeded { .. })));
    }

    #[test]
    fn pole_at_zero_is_excluded() {
        let o = oracle(3, 1, 5);
        let f = RatFn::from_fp(&o.ctx, &[1], &[0, 1]);
        let fv = o.f_values(&f);
        assert!(fv[0].is_none());
        assert_eq!(fv.iter().filter(|v| v.is_none()).count(), 1);
    }

    #[test]
    fn formula_trivial_characters() {
        let o = oracle(3, 1, 5);
        let f = RatFn::from_fp(&o.ctx, &[0, 1], &[1]);
        let (a, b) = &o.square_pairs()[0];
        let z = o.eval_count_formula(&f, a, b, &FreenessSpec::trivial()).unwrap();
        let c = o.count_c(&f, a, b, &FreenessSpec::trivial(), 0).unwrap().count;
        assert!((z.re - c as f64).abs() < FORMULA_TOL && z.im.abs() < IMAG_TOL);
    }

    #[test]
    fn formula_matches_count_full() {
        let o = oracle(3, 1, 5);
        let f = RatFn::from_fp(&o.ctx, &[1, 0, 1], &[1]);
        let spec = FreenessSpec::full(&o);
        for (a, b) in o.square_pairs() {
            let z = o.eval_count_formula(&f, &a, &b, &spec).unwrap();
            let c = o.count_c(&f, &a, &b, &spec, 1).unwrap();
            assert!((z.re - c.count as f64).abs() < FORMULA_TOL, "{z} vs {}", c.count);
            assert!(z.im.abs() < IMAG_TOL);
        }
    }

    #[test]
    fn witnesses_reverify() {
        let o = oracle(3, 1, 5);
        let spec = FreenessSpec::full(&o);
        let (fs, _) = test_functions(&o, 2);
        assert!(fs.len() >= 5);
        for f in &fs {
            for (a, b) in o.square_pairs() {
                let r = o.count_c(f, &a, &b, &spec, 1).unwrap();
                if let Some(w) = r.witnesses.first() {
                    assert!(w.is_primitive_normal_pair());
                    assert!(w.reverify(&o.ctx));
                }
            }
        }
    }

    #[test]
    fn characteristic_functions() {
        let o = oracle(3, 1, 5);
        let all: Vec<usize> = (0..o.factors.len()).collect();
        let rep = o.char_fn_checks(&[2, 11], &all, &o.ctx.zero()).unwrap();
        assert!(rep.all_ok(), "{rep:?}");
        assert_eq!(rep.l_free_count, 110);
        assert_eq!(rep.trace_count, 81);
        let normal = (0..243u32).filter(|&c| o.ctx.is_normal(&o.elem(c))).count() as u64;
        assert_eq!(rep.g_free_count, normal);
    }

    #[test]
    fn gauss_sum_equality_case() {
        let o = oracle(7, 1, 1);
        let inst = o.additive_sum(&[0, 0, 1], 1);
        assert!((inst.abs_sum - 7f64.sqrt()).abs() < 1e-9);
        assert!((inst.bound - 7f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn weil_bounds_hold() {
        let o = oracle(3, 1, 5);
        for seed in 0..5 {
            let rep = o.weil_checks(300, seed);
            assert_eq!(rep.instances.len(), 300);
            assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        }
        let o5 = oracle(5, 1, 5);
        let rep = o5.weil_checks(300, 1);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
    }

    #[test]
    fn decomposition_inequality() {
        let o = oracle(3, 1, 5);
        let f = RatFn::from_fp(&o.ctx, &[0, 1], &[1]);
        let (a, b) = &o.square_pairs()[0];
        let l = vec![o.factors.iter().position(|h| h.len() == 5).unwrap()];
        let rep = o.verify_sieve_decomposition(&f, a, b, &[2], &[11], &[], &l, &[], &[]).unwrap();
        assert!(rep.holds, "{rep:?}");
        let deg = o.verify_sieve_decomposition(&f, a, b, &[2, 11], &[], &[], &[], &[], &[]).unwrap();
        assert_eq!(deg.lhs as i64, deg.rhs);
    }
}
