//! Arithmetic in F_{p^{kn}} with the distinguished subfield F_q, q = p^k.
//!
//! One big field F_p[y]/(m(y)) of degree kn; F_q sits inside as the fixed
//! field of x ↦ x^q. Frobenius maps are precomputed as basis-image tables.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::hints::HintSet;
use crate::ntheory::{factor_group_order, is_prime_u64, Factorization, DEFAULT_BUDGET};
use crate::poly::{self, Field, Poly, PrimeField};

/// Largest extension degree kn accepted by [`FieldCtx::build`].
pub const MAX_DEGREE: u32 = 256;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("p = 2 is not supported: the subtrace identity divides by 2, so q must be odd")]
    EvenCharacteristic,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("k and n must be at least 1")]
    ZeroDegree,
    #[error("extension degree {0} exceeds the limit {MAX_DEGREE}")]
    TooLarge(u32),
    #[error("zero has no multiplicative order")]
    ZeroElement,
    #[error("group order factorization is incomplete")]
    IncompleteGroupOrder,
    #[error("{0} does not divide q^n - 1")]
    NotDivisor(String),
    #[error("polynomial coefficient lies outside the subfield F_q")]
    OutsideSubfield,
    #[error("polynomial does not divide x^n - 1")]
    NotFactorOfXn,
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
}

/// Element of the big field: little-endian coefficients in the modulus basis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FFElem {
    pub coeffs: Vec<u32>,
}

impl fmt::Debug for FFElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FFElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl FFElem {
    /// Parses `[c0,c1,...]`.
    pub fn parse(s: &str) -> Option<FFElem> {
        let body = s.trim().strip_prefix('[')?.strip_suffix(']')?;
        let coeffs = body
            .split(',')
            .map(|t| t.trim().parse::<u32>().ok())
            .collect::<Option<Vec<_>>>()?;
        Some(FFElem { coeffs })
    }
}

pub struct FieldCtx {
    pub p: u32,
    pub k: u32,
    pub n: u32,
    deg: usize,
    fp: PrimeField,
    pub modulus: Vec<u32>,
    pub q: BigUint,
    /// p^{kn}
    pub order: BigUint,
    pub q_embed: FFElem,
    frob_q: Vec<FFElem>,
    frob_p: Vec<FFElem>,
    /// powers 1, w, ..., w^{k-1} of q_embed, for subfield coordinates
    w_pows: Vec<FFElem>,
    pub group_order_fact: Factorization,
    inv2: FFElem,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{{{}^{}}} over F_{{{}^{}}} (modulus {})", self.p, self.k * self.n, self.p, self.k, poly::format_fp(&self.modulus))
    }
}

impl FieldCtx {
    pub fn build(p: u32, k: u32, n: u32) -> Result<FieldCtx, FieldError> {
        Self::build_with(p, k, n, &HintSet::builtin())
    }

    pub fn build_with(p: u32, k: u32, n: u32, hints: &HintSet) -> Result<FieldCtx, FieldError> {
        if p == 2 {
            return Err(FieldError::EvenCharacteristic);
        }
        if !is_prime_u64(p as u64) {
            return Err(FieldError::NotPrime(p as u64));
        }
        if k == 0 || n == 0 {
            return Err(FieldError::ZeroDegree);
        }
        let kn = k.checked_mul(n).filter(|&d| d <= MAX_DEGREE).ok_or(FieldError::TooLarge(k.saturating_mul(n)))?;
        let deg = kn as usize;
        let modulus = poly::smallest_irreducible(p, deg);
        let fact = factor_group_order(p as u64, k, n, hints, DEFAULT_BUDGET);
        let q = BigUint::from(p).pow(k);
        let order = BigUint::from(p).pow(kn);
        let mut ctx = FieldCtx {
            p,
            k,
            n,
            deg,
            fp: PrimeField::new(p),
            modulus,
            q,
            order,
            q_embed: FFElem { coeffs: vec![0; deg] },
            frob_q: Vec::new(),
            frob_p: Vec::new(),
            w_pows: Vec::new(),
            group_order_fact: fact,
            inv2: FFElem { coeffs: vec![0; deg] },
        };
        let y = ctx.gen_y();
        let yp = ctx.pow(&y, &BigUint::from(p));
        ctx.frob_p = ctx.power_table(&yp);
        let yq = ctx.pow(&y, &ctx.q.clone());
        ctx.frob_q = ctx.power_table(&yq);
        ctx.inv2 = ctx.inv(&ctx.from_int(2)).expect("odd characteristic");
        ctx.q_embed = ctx.find_q_embed();
        let mut w_pows = vec![ctx.one()];
        for i in 1..k as usize {
            let next = ctx.mul(&w_pows[i - 1], &ctx.q_embed);
            w_pows.push(next);
        }
        ctx.w_pows = w_pows;
        Ok(ctx)
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn prime_field(&self) -> PrimeField {
        self.fp
    }

    fn gen_y(&self) -> FFElem {
        let mut c = vec![0; self.deg];
        if self.deg == 1 {
            // F_p[y]/(y - c): y is the constant -m0
            c[0] = self.fp.neg(&self.modulus[0]);
        } else {
            c[1] = 1;
        }
        FFElem { coeffs: c }
    }

    fn power_table(&self, base: &FFElem) -> Vec<FFElem> {
        let mut out = vec![self.one()];
        for i in 1..self.deg {
            let next = self.mul(&out[i - 1], base);
            out.push(next);
        }
        out
    }

    fn find_q_embed(&self) -> FFElem {
        if self.k == 1 {
            return self.one();
        }
        let h: Vec<FFElem> = poly::smallest_irreducible(self.p, self.k as usize)
            .iter()
            .map(|&c| self.from_int(c as i64))
            .collect();
        let root = self.find_root(&h).expect("degree-k irreducible splits in F_{p^{kn}}");
        // all roots are the p-power conjugates
        let mut best = root.clone();
        let mut r = root;
        for _ in 1..self.k {
            r = self.frobenius_p(&r);
            if r < best {
                best = r.clone();
            }
        }
        best
    }

    /// Finds a root of a squarefree polynomial that splits into linear factors (Cantor–Zassenhaus).
    pub fn find_root(&self, h: &[FFElem]) -> Option<FFElem> {
        let mut f = poly::monic(self, h);
        let half = (&self.order - 1u32) >> 1;
        let mut shift_idx: u64 = 1;
        loop {
            match poly::degree(self, &f)? {
                0 => return None,
                1 => return Some(self.neg(&f[0])),
                _ => {}
            }
            let delta = self.decode_lex(shift_idx % self.order.to_u64().unwrap_or(u64::MAX));
            shift_idx += 1;
            let base = vec![delta, self.one()];
            let t = poly::powmod(self, &base, &half, &f);
            let t = poly::sub(self, &t, &[self.one()]);
            let g = poly::gcd(self, &t, &f);
            let dg = poly::degree(self, &g).unwrap_or(0);
            if dg > 0 && Some(dg) < poly::degree(self, &f) {
                f = g;
            }
            if shift_idx > 100_000 {
                return None;
            }
        }
    }

    // ------------------------------------------------------------ elements

    pub fn elem(&self, coeffs: &[u32]) -> FFElem {
        let mut c: Vec<u32> = coeffs.iter().map(|&x| x % self.p).collect();
        c.resize(self.deg, 0);
        FFElem { coeffs: c }
    }

    /// Dense code Σ c_i p^i (c0 least significant), for table lookups.
    pub fn encode(&self, e: &FFElem) -> u64 {
        e.coeffs.iter().rev().fold(0u64, |acc, &c| acc * self.p as u64 + c as u64)
    }

    pub fn decode(&self, mut code: u64) -> FFElem {
        let mut c = vec![0u32; self.deg];
        for x in c.iter_mut() {
            *x = (code % self.p as u64) as u32;
            code /= self.p as u64;
        }
        FFElem { coeffs: c }
    }

    /// The i-th element in lexicographic order of coefficient vectors (c0 most significant).
    pub fn decode_lex(&self, mut idx: u64) -> FFElem {
        let mut c = vec![0u32; self.deg];
        for x in c.iter_mut().rev() {
            *x = (idx % self.p as u64) as u32;
            idx /= self.p as u64;
        }
        FFElem { coeffs: c }
    }

    /// Number of elements when it fits in a u64.
    pub fn size(&self) -> Option<u64> {
        self.order.to_u64()
    }

    pub fn pow(&self, a: &FFElem, e: &BigUint) -> FFElem {
        let mut r = self.one();
        for i in (0..e.bits()).rev() {
            r = self.mul(&r, &r);
            if e.bit(i) {
                r = self.mul(&r, a);
            }
        }
        r
    }

    pub fn pow_u64(&self, a: &FFElem, e: u64) -> FFElem {
        self.pow(a, &BigUint::from(e))
    }

    fn apply_table(&self, table: &[FFElem], a: &FFElem) -> FFElem {
        let p = self.p as u64;
        let mut acc = vec![0u64; self.deg];
        for (i, &c) in a.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (j, &t) in table[i].coeffs.iter().enumerate() {
                acc[j] += c as u64 * t as u64;
            }
            if i % 1024 == 1023 {
                acc.iter_mut().for_each(|x| *x %= p);
            }
        }
        FFElem { coeffs: acc.into_iter().map(|x| (x % p) as u32).collect() }
    }

    /// ε ↦ ε^q.
    pub fn frobenius_q(&self, a: &FFElem) -> FFElem {
        self.apply_table(&self.frob_q, a)
    }

    /// ε ↦ ε^p.
    pub fn frobenius_p(&self, a: &FFElem) -> FFElem {
        self.apply_table(&self.frob_p, a)
    }

    /// ε, ε^q, ..., ε^{q^{n-1}}.
    pub fn conjugates(&self, a: &FFElem) -> Vec<FFElem> {
        let mut out = Vec::with_capacity(self.n as usize);
        let mut x = a.clone();
        for _ in 0..self.n {
            let next = self.frobenius_q(&x);
            out.push(x);
            x = next;
        }
        out
    }

    pub fn in_subfield(&self, a: &FFElem) -> bool {
        self.frobenius_q(a) == *a
    }

    pub fn in_prime_field(&self, a: &FFElem) -> bool {
        a.coeffs.iter().skip(1).all(|&c| c == 0)
    }

    /// Relative trace Tr_{q^n/q}(ε) (an element of the embedded F_q).
    pub fn rel_trace(&self, a: &FFElem) -> FFElem {
        let t = self
            .conjugates(a)
            .iter()
            .fold(self.zero(), |acc, c| self.add(&acc, c));
        debug_assert!(self.in_subfield(&t));
        t
    }

    /// Absolute trace Tr_{q^n/p}(ε) as a residue mod p.
    pub fn abs_trace(&self, a: &FFElem) -> u32 {
        let mut x = a.clone();
        let mut acc = self.zero();
        for _ in 0..self.deg {
            acc = self.add(&acc, &x);
            x = self.frobenius_p(&x);
        }
        debug_assert!(self.in_prime_field(&acc));
        acc.coeffs[0]
    }

    /// Σ_{i<j} ε^{q^i + q^j}.
    pub fn subtrace_direct(&self, a: &FFElem) -> FFElem {
        let c = self.conjugates(a);
        let mut acc = self.zero();
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                acc = self.add(&acc, &self.mul(&c[i], &c[j]));
            }
        }
        acc
    }

    /// (Tr(ε)^2 − Tr(ε^2))/2.
    pub fn subtrace_identity(&self, a: &FFElem) -> FFElem {
        let t = self.rel_trace(a);
        let t2 = self.rel_trace(&self.mul(a, a));
        self.mul(&self.sub(&self.mul(&t, &t), &t2), &self.inv2)
    }

    /// Minimal polynomial over F_q, from the distinct conjugates.
    pub fn minimal_polynomial(&self, a: &FFElem) -> Poly<FFElem> {
        let mut orbit = vec![a.clone()];
        loop {
            let next = self.frobenius_q(orbit.last().unwrap());
            if next == *a {
                break;
            }
            orbit.push(next);
        }
        orbit.iter().fold(vec![self.one()], |acc, r| {
            poly::mul(self, &acc, &[self.neg(r), self.one()])
        })
    }

    fn require_group(&self) -> Result<(), FieldError> {
        if self.group_order_fact.complete {
            Ok(())
        } else {
            Err(FieldError::IncompleteGroupOrder)
        }
    }

    pub fn element_order(&self, a: &FFElem) -> Result<BigUint, FieldError> {
        if self.is_zero(a) {
            return Err(FieldError::ZeroElement);
        }
        self.require_group()?;
        let mut ord = &self.order - 1u32;
        for (r, _) in &self.group_order_fact.factors {
            while (&ord % r).is_zero() {
                let cand = &ord / r;
                if self.pow(a, &cand) == self.one() {
                    ord = cand;
                } else {
                    break;
                }
            }
        }
        Ok(ord)
    }

    /// ε is l-free iff ε^{(q^n−1)/d} ≠ 1 for every prime d | l.
    pub fn is_l_free(&self, a: &FFElem, l: &Factorization) -> Result<bool, FieldError> {
        if self.is_zero(a) {
            return Err(FieldError::ZeroElement);
        }
        if !l.complete {
            return Err(FieldError::IncompleteGroupOrder);
        }
        let qm1 = &self.order - 1u32;
        if !(&qm1 % &l.value).is_zero() {
            return Err(FieldError::NotDivisor(l.value.to_string()));
        }
        for (d, _) in &l.factors {
            if self.pow(a, &(&qm1 / d)) == self.one() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_primitive(&self, a: &FFElem) -> Result<bool, FieldError> {
        if self.is_zero(a) {
            return Ok(false);
        }
        self.require_group()?;
        self.is_l_free(a, &self.group_order_fact)
    }

    /// h ∘ ε = Σ a_i ε^{q^i}.
    pub fn poly_action(&self, h: &[FFElem], a: &FFElem) -> Result<FFElem, FieldError> {
        if h.iter().any(|c| !self.in_subfield(c)) {
            return Err(FieldError::OutsideSubfield);
        }
        Ok(self.poly_action_unchecked(h, a))
    }

    pub(crate) fn poly_action_unchecked(&self, h: &[FFElem], a: &FFElem) -> FFElem {
        let mut acc = self.zero();
        let mut x = a.clone();
        for (i, c) in h.iter().enumerate() {
            if !self.is_zero(c) {
                acc = self.add(&acc, &self.mul(c, &x));
            }
            if i + 1 < h.len() {
                x = self.frobenius_q(&x);
            }
        }
        acc
    }

    pub fn x_n_minus_1(&self) -> Poly<FFElem> {
        poly::x_pow_minus_one(self, self.n as usize)
    }

    /// Cofactors (x^n − 1)/h for each listed irreducible h, validated.
    pub fn freeness_cofactors(&self, g: &[Poly<FFElem>]) -> Result<Vec<Poly<FFElem>>, FieldError> {
        let xn = self.x_n_minus_1();
        g.iter()
            .map(|h| {
                if h.iter().any(|c| !self.in_subfield(c)) {
                    return Err(FieldError::OutsideSubfield);
                }
                let (quot, r) = poly::divrem(self, &xn, h);
                if !r.is_empty() {
                    return Err(FieldError::NotFactorOfXn);
                }
                Ok(quot)
            })
            .collect()
    }

    /// ε is g-free iff ((x^n−1)/h) ∘ ε ≠ 0 for every irreducible h | g.
    pub fn is_g_free(&self, a: &FFElem, g: &[Poly<FFElem>]) -> Result<bool, FieldError> {
        let cof = self.freeness_cofactors(g)?;
        Ok(cof.iter().all(|c| !self.is_zero(&self.poly_action_unchecked(c, a))))
    }

    /// Normality through gcd(x^n − 1, Σ ε^{q^i} x^i) = 1.
    pub fn is_normal(&self, a: &FFElem) -> bool {
        let c = poly::trim(self, self.conjugates(a));
        if c.is_empty() {
            return false;
        }
        let g = poly::gcd(self, &self.x_n_minus_1(), &c);
        poly::degree(self, &g) == Some(0)
    }

    /// f₁(ε)/f₂(ε), or None at a pole.
    pub fn eval_rational(&self, f1: &[FFElem], f2: &[FFElem], a: &FFElem) -> Result<Option<FFElem>, FieldError> {
        if poly::degree(self, f2).is_none() {
            return Err(FieldError::ZeroDenominator);
        }
        let den = poly::eval(self, f2, a);
        Ok(self.inv(&den).map(|inv| self.mul(&poly::eval(self, f1, a), &inv)))
    }

    /// Coordinates of a subfield element in the basis 1, w, ..., w^{k−1} (w = q_embed).
    pub fn subfield_coords(&self, a: &FFElem) -> Option<Vec<u32>> {
        let k = self.k as usize;
        let fp = &self.fp;
        // augmented matrix: rows = coefficient positions, columns = w^j, last = a
        let mut m: Vec<Vec<u32>> = (0..self.deg)
            .map(|r| {
                let mut row: Vec<u32> = (0..k).map(|j| self.w_pows[j].coeffs[r]).collect();
                row.push(a.coeffs[r]);
                row
            })
            .collect();
        let mut pivot_row = 0;
        let mut pivots = Vec::new();
        for col in 0..k {
            let Some(r) = (pivot_row..m.len()).find(|&r| m[r][col] != 0) else { continue };
            m.swap(pivot_row, r);
            let inv = fp.inv(&m[pivot_row][col]).unwrap();
            for x in m[pivot_row].iter_mut() {
                *x = fp.mul(x, &inv);
            }
            for r2 in 0..m.len() {
                if r2 != pivot_row && m[r2][col] != 0 {
                    let f = m[r2][col];
                    for c in 0..=k {
                        let v = fp.mul(&f, &m[pivot_row][c]);
                        m[r2][c] = fp.sub(&m[r2][c], &v);
                    }
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        if m[pivot_row..].iter().any(|row| row[k] != 0) {
            return None;
        }
        let mut out = vec![0u32; k];
        for (i, &col) in pivots.iter().enumerate() {
            out[col] = m[i][k];
        }
        Some(out)
    }

    /// Element of this field's F_q with the given coordinates in powers of q_embed.
    pub fn from_subfield_coords(&self, coords: &[u32]) -> FFElem {
        coords.iter().enumerate().fold(self.zero(), |acc, (j, &c)| {
            self.add(&acc, &self.mul(&self.from_int(c as i64), &self.w_pows[j]))
        })
    }

    /// Moves a polynomial with F_q coefficients from `other` into this field.
    pub fn transport_poly(&self, other: &FieldCtx, h: &[FFElem]) -> Option<Poly<FFElem>> {
        assert_eq!((self.p, self.k), (other.p, other.k));
        h.iter()
            .map(|c| other.subfield_coords(c).map(|co| self.from_subfield_coords(&co)))
            .collect()
    }

    /// Literal for a polynomial with F_q coefficients: prime-field coefficients print as
    /// integers, others as `(a0+a1w+...)` in powers of w = q_embed.
    pub fn format_poly(&self, h: &[FFElem]) -> String {
        let mut terms = Vec::new();
        for (i, c) in h.iter().enumerate().rev() {
            if self.is_zero(c) {
                continue;
            }
            let coef = if self.in_prime_field(c) {
                let v = c.coeffs[0];
                if v == 1 && i > 0 { String::new() } else { v.to_string() }
            } else {
                let co = self.subfield_coords(c).unwrap_or_default();
                let parts: Vec<String> = co
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(j, &v)| match j {
                        0 => v.to_string(),
                        1 => format!("{v}w"),
                        _ => format!("{v}w^{j}"),
                    })
                    .collect();
                format!("({})", parts.join("+"))
            };
            terms.push(match i {
                0 => if coef.is_empty() { "1".into() } else { coef },
                1 => format!("{coef}x"),
                _ => format!("{coef}x^{i}"),
            });
        }
        if terms.is_empty() { "0".into() } else { terms.join("+") }
    }

    /// Embeds a polynomial over F_p.
    pub fn embed_fp_poly(&self, h: &[u32]) -> Poly<FFElem> {
        poly::trim(self, h.iter().map(|&c| self.from_int(c as i64)).collect())
    }

    /// Deterministic primitive element: smallest in lexicographic order.
    pub fn primitive_element(&self) -> Result<FFElem, FieldError> {
        self.require_group()?;
        let mut idx = 1u64;
        loop {
            let e = self.decode_lex(idx);
            if self.is_primitive(&e)? {
                return Ok(e);
            }
            idx += 1;
        }
    }
}

impl Field for FieldCtx {
    type Elem = FFElem;

    fn zero(&self) -> FFElem {
        FFElem { coeffs: vec![0; self.deg] }
    }

    fn one(&self) -> FFElem {
        let mut c = vec![0; self.deg];
        c[0] = 1;
        FFElem { coeffs: c }
    }

    fn add(&self, a: &FFElem, b: &FFElem) -> FFElem {
        let p = self.p;
        FFElem {
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| {
                let s = x + y;
                if s >= p { s - p } else { s }
            }).collect(),
        }
    }

    fn sub(&self, a: &FFElem, b: &FFElem) -> FFElem {
        let p = self.p;
        FFElem {
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| if x >= y { x - y } else { x + p - y }).collect(),
        }
    }

    fn neg(&self, a: &FFElem) -> FFElem {
        let p = self.p;
        FFElem { coeffs: a.coeffs.iter().map(|&x| if x == 0 { 0 } else { p - x }).collect() }
    }

    fn mul(&self, a: &FFElem, b: &FFElem) -> FFElem {
        let d = self.deg;
        let p = self.p as u64;
        let mut prod = vec![0u64; 2 * d - 1];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
            }
        }
        // reduce by the monic modulus, top degree down
        for top in (d..2 * d - 1).rev() {
            let c = prod[top] % p;
            if c == 0 {
                continue;
            }
            prod[top] = 0;
            for (i, &m) in self.modulus[..d].iter().enumerate() {
                let idx = top - d + i;
                prod[idx] = (prod[idx] + c * (p - m as u64)) % p;
            }
        }
        FFElem { coeffs: prod[..d].iter().map(|&x| (x % p) as u32).collect() }
    }

    fn inv(&self, a: &FFElem) -> Option<FFElem> {
        if self.is_zero(a) {
            return None;
        }
        Some(self.pow(a, &(&self.order - 2u32)))
    }

    fn from_int(&self, c: i64) -> FFElem {
        let mut v = vec![0; self.deg];
        v[0] = c.rem_euclid(self.p as i64) as u32;
        FFElem { coeffs: v }
    }

    fn is_zero(&self, a: &FFElem) -> bool {
        a.coeffs.iter().all(|&c| c == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Field;
    use num_traits::One;

    fn all(ctx: &FieldCtx) -> Vec<FFElem> {
        (0..ctx.size().unwrap()).map(|c| ctx.decode(c)).collect()
    }

    #[test]
    fn construction() {
        let f = FieldCtx::build(3, 1, 5).unwrap();
        assert_eq!(f.size(), Some(243));
        assert_eq!(f.modulus, poly::smallest_irreducible(3, 5));
        assert!(poly::is_irreducible_fp(&PrimeField::new(3), &f.modulus));
        let f1 = FieldCtx::build(7, 1, 1).unwrap();
        assert_eq!(f1.degree(), 1);
        let f2 = FieldCtx::build(7, 2, 3).unwrap();
        let w = &f2.q_embed;
        assert_eq!(f2.pow_u64(w, 49), *w);
        assert_ne!(f2.pow_u64(w, 7), *w);
        assert_eq!(f2.minimal_polynomial(w).len(), 2);
        assert!(matches!(FieldCtx::build(2, 1, 5), Err(FieldError::EvenCharacteristic)));
        assert!(matches!(FieldCtx::build(9, 1, 5), Err(FieldError::NotPrime(9))));
    }

    #[test]
    fn modulus_is_lex_smallest() {
        // exhaustive over monic quintics over F_3, in the same order
        let fp = PrimeField::new(3);
        let mut found = None;
        'outer: for c0 in 0..3u32 {
            for c1 in 0..3u32 {
                for c2 in 0..3u32 {
                    for c3 in 0..3u32 {
                        for c4 in 0..3u32 {
                            let m = vec![c0, c1, c2, c3, c4, 1];
                            let no_root = (0..3).all(|a| poly::eval(&fp, &m, &a) != 0);
                            let no_quad = (0..9u32).all(|i| !poly::rem(&fp, &m, &[i % 3, i / 3, 1]).is_empty());
                            if no_root && no_quad {
                                found = Some(m);
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(FieldCtx::build(3, 1, 5).unwrap().modulus, found.unwrap());
    }

    #[test]
    fn frobenius_and_traces() {
        let f = FieldCtx::build(3, 1, 5).unwrap();
        let q = BigUint::from(3u32);
        let els = all(&f);
        for a in &els {
            assert_eq!(f.frobenius_q(a), f.pow(a, &q));
            let mut x = a.clone();
            for _ in 0..5 {
                x = f.frobenius_q(&x);
            }
            assert_eq!(x, *a);
            assert!(f.in_subfield(&f.rel_trace(a)));
            assert_eq!(f.subtrace_direct(a), f.subtrace_identity(a));
        }
        for a in els.iter().step_by(7) {
            for b in els.iter().step_by(11) {
                assert_eq!(f.frobenius_q(&f.add(a, b)), f.add(&f.frobenius_q(a), &f.frobenius_q(b)));
                assert_eq!(f.frobenius_q(&f.mul(a, b)), f.mul(&f.frobenius_q(a), &f.frobenius_q(b)));
            }
        }
        assert_eq!(f.rel_trace(&f.one()), f.from_int(5));
        assert_eq!(f.subtrace_direct(&f.one()), f.from_int(10));
        assert_eq!(f.subtrace_direct(&f.zero()), f.zero());
        // trace fibers
        let mut fiber = [0u32; 3];
        for a in &els {
            fiber[f.rel_trace(a).coeffs[0] as usize] += 1;
        }
        assert_eq!(fiber, [81, 81, 81]);
    }

    #[test]
    fn field_axioms_sampled() {
        let f = FieldCtx::build(5, 2, 3).unwrap();
        let pick = |i: u64| f.decode(i * 2654435761 % f.size().unwrap());
        for i in 1..60u64 {
            let (a, b, c) = (pick(i), pick(i + 101), pick(i + 977));
            assert_eq!(f.mul(&f.mul(&a, &b), &c), f.mul(&a, &f.mul(&b, &c)));
            assert_eq!(f.mul(&a, &f.add(&b, &c)), f.add(&f.mul(&a, &b), &f.mul(&a, &c)));
            if !f.is_zero(&a) {
                assert_eq!(f.mul(&a, &f.inv(&a).unwrap()), f.one());
            }
        }
    }

    #[test]
    fn orders_and_freeness() {
        let f = FieldCtx::build(3, 1, 5).unwrap();
        let g = f.primitive_element().unwrap();
        assert_eq!(f.element_order(&g).unwrap(), BigUint::from(242u32));
        assert_ne!(f.pow_u64(&g, 121), f.one());
        assert_ne!(f.pow_u64(&g, 22), f.one());
        assert_eq!(f.element_order(&f.mul(&g, &g)).unwrap(), BigUint::from(121u32));
        assert_eq!(f.element_order(&f.one()).unwrap(), BigUint::one());
        let els = all(&f);
        let two = Factorization::from_u64(2);
        let two_free = els.iter().skip(1).filter(|a| f.is_l_free(a, &two).unwrap()).count();
        assert_eq!(two_free, 121);
        let prim = els.iter().skip(1).filter(|a| f.is_primitive(a).unwrap()).count();
        assert_eq!(prim, 110);
        assert!(!f.is_l_free(&f.one(), &two).unwrap());
    }

    #[test]
    fn subtrace_is_minpoly_coefficient() {
        let f = FieldCtx::build(5, 1, 5).unwrap();
        for code in (1..f.size().unwrap()).step_by(37) {
            let a = f.decode(code);
            let mp = f.minimal_polynomial(&a);
            if mp.len() == 6 {
                // x^5 + a4 x^4 + a3 x^3 + ...: STr = a3 (second-highest after the trace)
                assert_eq!(f.subtrace_direct(&a), mp[3]);
            }
        }
    }

    #[test]
    fn action_and_normality() {
        let f = FieldCtx::build(3, 1, 5).unwrap();
        let xn = f.x_n_minus_1();
        let a = f.decode(17);
        assert_eq!(f.poly_action(&[f.one()], &a).unwrap(), a);
        assert!(f.is_zero(&f.poly_action(&xn, &a).unwrap()));
        let xm1 = vec![f.neg(&f.one()), f.one()];
        assert!(f.is_zero(&f.poly_action(&xm1, &f.from_int(2)).unwrap()));
        assert!(!f.is_normal(&f.from_int(2)));
        assert!(f.poly_action(&[f.decode(5)], &a).is_err());
    }

    #[test]
    fn rational_evaluation() {
        let f = FieldCtx::build(3, 1, 5).unwrap();
        let x = vec![f.zero(), f.one()];
        let one = vec![f.one()];
        let a = f.decode(100);
        assert_eq!(f.eval_rational(&x, &one, &a).unwrap(), Some(a.clone()));
        assert_eq!(f.eval_rational(&one, &x, &f.zero()).unwrap(), None);
        assert!(f.eval_rational(&one, &[], &a).is_err());
        // x^2+1 has roots only when -1 is a square; it is in F_{5^5}
        let g = FieldCtx::build(5, 1, 5).unwrap();
        let h = vec![g.one(), g.zero(), g.one()];
        let gone = vec![g.one()];
        let roots: Vec<_> = (0..g.size().unwrap())
            .map(|c| g.decode(c))
            .filter(|e| g.eval_rational(&h, &gone, e).unwrap() == Some(g.zero()))
            .collect();
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert_eq!(g.mul(r, r), g.neg(&g.one()));
        }
    }

    #[test]
    fn subfield_coordinates_roundtrip() {
        let f = FieldCtx::build(7, 2, 3).unwrap();
        for c0 in 0..7u32 {
            for c1 in 0..7u32 {
                let e = f.from_subfield_coords(&[c0, c1]);
                assert!(f.in_subfield(&e));
                assert_eq!(f.subfield_coords(&e).unwrap(), vec![c0, c1]);
            }
        }
        assert!(f.subfield_coords(&f.decode(8)).is_none() || f.in_subfield(&f.decode(8)));
        let lit = FFElem::parse("[1,2,0,0,0,3]").unwrap();
        assert_eq!(lit.to_string(), "[1,2,0,0,0,3]");
    }
}
