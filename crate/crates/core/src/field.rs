//! Exact arithmetic in GF(p) and GF(p^k).
//!
//! Elements are addressed by their packed index: the coefficient vector
//! `c_0 + c_1 x + ... + c_{k-1} x^{k-1}` is stored as `sum c_i p^i`. This is
//! the encoding used by matrix literals in config files, and it is canonical,
//! so zero is always `0` and one is always `1`.
//!
//! Every operation has a polynomial reference path. Fields with `q <= 2^16`
//! additionally get log/antilog tables; the table path is tested to be
//! bit-identical to the reference path.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest field for which log/antilog tables are built.
const TABLE_LIMIT: u64 = 1 << 16;

/// Built-in moduli: the lexicographically smallest primitive monic
/// polynomial of each degree, coefficients low-to-high.
const BUILTIN_MODULI: &[(u32, u32, &[u32])] = &[
    (2, 1, &[1, 1]),
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (2, 5, &[1, 0, 1, 0, 0, 1]),
    (2, 6, &[1, 1, 0, 0, 0, 0, 1]),
    (2, 7, &[1, 1, 0, 0, 0, 0, 0, 1]),
    (2, 8, &[1, 0, 1, 1, 1, 0, 0, 0, 1]),
    (2, 9, &[1, 0, 0, 0, 1, 0, 0, 0, 0, 1]),
    (2, 10, &[1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1]),
    (2, 11, &[1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1]),
    (2, 12, &[1, 1, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 1]),
    (3, 1, &[1, 1]),
    (3, 2, &[2, 1, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (3, 4, &[2, 1, 0, 0, 1]),
    (3, 5, &[1, 2, 0, 0, 0, 1]),
    (3, 6, &[2, 1, 0, 0, 0, 0, 1]),
    (3, 7, &[1, 2, 1, 0, 0, 0, 0, 1]),
    (3, 8, &[2, 0, 0, 1, 0, 0, 0, 0, 1]),
    (3, 9, &[1, 0, 1, 2, 0, 0, 0, 0, 0, 1]),
    (3, 10, &[2, 1, 0, 1, 0, 0, 0, 0, 0, 0, 1]),
    (3, 11, &[1, 2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1]),
    (3, 12, &[2, 2, 2, 1, 2, 0, 0, 0, 0, 0, 0, 0, 1]),
    (5, 1, &[2, 1]),
    (5, 2, &[2, 1, 1]),
    (5, 3, &[2, 3, 0, 1]),
    (5, 4, &[2, 2, 1, 0, 1]),
    (5, 5, &[2, 4, 0, 0, 0, 1]),
    (5, 6, &[2, 1, 0, 0, 0, 0, 1]),
    (5, 7, &[2, 3, 0, 0, 0, 0, 0, 1]),
    (5, 8, &[3, 2, 1, 0, 0, 0, 0, 0, 1]),
    (5, 9, &[3, 2, 1, 0, 0, 0, 0, 0, 0, 1]),
    (5, 10, &[3, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1]),
    (5, 11, &[2, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]),
    (5, 12, &[3, 2, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1]),
];

/// The built-in modulus for GF(p^k), if the table has one.
pub fn builtin_modulus(p: u32, k: u32) -> Option<&'static [u32]> {
    BUILTIN_MODULI
        .iter()
        .find(|(bp, bk, _)| *bp == p && *bk == k)
        .map(|(_, _, m)| *m)
}

struct Tables {
    exp: Vec<u32>,
    log: Vec<u32>,
}

struct Inner {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    tables: Option<Tables>,
}

/// A finite field GF(p^k) defined by a monic irreducible modulus.
///
/// Cloning is cheap; all clones share the same arithmetic tables.
#[derive(Clone)]
pub struct FieldSpec {
    inner: Arc<Inner>,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.p == other.inner.p
                && self.inner.k == other.inner.k
                && self.inner.modulus == other.inner.modulus)
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{}; {:?})", self.p(), self.k(), self.modulus())
    }
}

/// Field description as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub p: u32,
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u32>>,
}

impl FieldConfig {
    pub fn build(&self) -> Result<FieldSpec> {
        match &self.modulus {
            Some(m) => FieldSpec::with_modulus(self.p, self.k, m),
            None => FieldSpec::new(self.p, self.k),
        }
    }
}

impl From<&FieldSpec> for FieldConfig {
    fn from(f: &FieldSpec) -> Self {
        FieldConfig {
            p: f.p(),
            k: f.k(),
            modulus: Some(f.modulus().to_vec()),
        }
    }
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let p = p as u64;
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl FieldSpec {
    /// GF(p^k) with the built-in modulus. Pairs outside the built-in table
    /// fall back to a deterministic search for the smallest primitive
    /// polynomial.
    pub fn new(p: u32, k: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidField(format!("{p} is not prime")));
        }
        if k == 0 {
            return Err(Error::InvalidField("extension degree must be >= 1".into()));
        }
        if let Some(m) = builtin_modulus(p, k) {
            return Self::with_modulus(p, k, m);
        }
        if k == 1 {
            return Self::with_modulus(p, 1, &[0, 1]);
        }
        let q = checked_q(p, k)?;
        if q > TABLE_LIMIT {
            return Err(Error::InvalidField(format!(
                "no built-in modulus for GF({p}^{k}); supply one explicitly"
            )));
        }
        let modulus = search_primitive(p, k)
            .ok_or_else(|| Error::Internal(format!("no primitive polynomial found for GF({p}^{k})")))?;
        Self::with_modulus(p, k, &modulus)
    }

    /// The prime field GF(p).
    pub fn prime(p: u32) -> Result<Self> {
        Self::new(p, 1)
    }

    /// GF(p^k) with a user-supplied modulus (coefficients low-to-high, monic).
    pub fn with_modulus(p: u32, k: u32, modulus: &[u32]) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidField(format!("{p} is not prime")));
        }
        if k == 0 {
            return Err(Error::InvalidField("extension degree must be >= 1".into()));
        }
        let q = checked_q(p, k)?;
        if modulus.len() != k as usize + 1 {
            return Err(Error::InvalidField(format!(
                "modulus must have {} coefficients, got {}",
                k + 1,
                modulus.len()
            )));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::InvalidField("modulus coefficient out of range".into()));
        }
        if modulus[k as usize] != 1 {
            return Err(Error::InvalidField("modulus must be monic".into()));
        }
        let poly: Vec<u64> = modulus.iter().map(|&c| c as u64).collect();
        if !poly_is_irreducible(&poly, p as u64) {
            return Err(Error::InvalidField(format!(
                "modulus {modulus:?} is reducible over GF({p})"
            )));
        }
        let mut spec = FieldSpec {
            inner: Arc::new(Inner {
                p,
                k,
                q: q as u32,
                modulus: modulus.to_vec(),
                tables: None,
            }),
        };
        if q <= TABLE_LIMIT {
            let tables = spec.build_tables();
            Arc::get_mut(&mut spec.inner).expect("fresh Arc").tables = Some(tables);
        }
        Ok(spec)
    }

    pub fn p(&self) -> u32 {
        self.inner.p
    }

    pub fn k(&self) -> u32 {
        self.inner.k
    }

    /// Field size `p^k`.
    pub fn q(&self) -> u32 {
        self.inner.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.inner.modulus
    }

    pub fn log2_q(&self) -> f64 {
        (self.q() as f64).log2()
    }

    pub fn is_prime_field(&self) -> bool {
        self.inner.k == 1
    }

    pub fn has_tables(&self) -> bool {
        self.inner.tables.is_some()
    }

    #[inline]
    pub fn contains(&self, a: u32) -> bool {
        a < self.inner.q
    }

    /// Coefficient vector (length k, low-to-high) of the element with index `a`.
    pub fn coeffs(&self, mut a: u32) -> Vec<u32> {
        let p = self.inner.p;
        (0..self.inner.k)
            .map(|_| {
                let c = a % p;
                a /= p;
                c
            })
            .collect()
    }

    /// Index of the element with the given coefficients; extra high-order
    /// coefficients must be zero.
    pub fn from_coeffs(&self, coeffs: &[u32]) -> u32 {
        let p = self.inner.p as u64;
        let mut v = 0u64;
        for &c in coeffs.iter().take(self.inner.k as usize).rev() {
            v = v * p + (c as u64 % p);
        }
        v as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let p = self.inner.p;
        if p == 2 {
            return a ^ b;
        }
        if self.inner.k == 1 {
            let s = a as u64 + b as u64;
            return (s % p as u64) as u32;
        }
        self.digitwise(a, b, |x, y| (x + y) % p)
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        let p = self.inner.p;
        if p == 2 {
            return a ^ b;
        }
        if self.inner.k == 1 {
            let s = a as u64 + p as u64 - b as u64;
            return (s % p as u64) as u32;
        }
        self.digitwise(a, b, |x, y| (x + p - y) % p)
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        self.sub(0, a)
    }

    fn digitwise(&self, mut a: u32, mut b: u32, f: impl Fn(u32, u32) -> u32) -> u32 {
        let p = self.inner.p;
        let mut out = 0u64;
        let mut place = 1u64;
        for _ in 0..self.inner.k {
            out += f(a % p, b % p) as u64 * place;
            a /= p;
            b /= p;
            place *= p as u64;
        }
        out as u32
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        if let Some(t) = &self.inner.tables {
            let s = t.log[a as usize] + t.log[b as usize];
            return t.exp[s as usize];
        }
        self.mul_reference(a, b)
    }

    /// Polynomial multiplication modulo the field modulus, without tables.
    pub fn mul_reference(&self, a: u32, b: u32) -> u32 {
        let p = self.inner.p as u64;
        if self.inner.k == 1 {
            return ((a as u64 * b as u64) % p) as u32;
        }
        let k = self.inner.k as usize;
        let ca: Vec<u64> = self.coeffs(a).into_iter().map(u64::from).collect();
        let cb: Vec<u64> = self.coeffs(b).into_iter().map(u64::from).collect();
        let mut prod = vec![0u64; 2 * k - 1];
        for (i, &x) in ca.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in cb.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        // Reduce with x^k = -(m_0 + ... + m_{k-1} x^{k-1}).
        let m: Vec<u64> = self.inner.modulus.iter().map(|&c| c as u64).collect();
        for d in (k..prod.len()).rev() {
            let c = prod[d];
            if c == 0 {
                continue;
            }
            prod[d] = 0;
            for (i, &mi) in m.iter().enumerate().take(k) {
                let idx = d - k + i;
                prod[idx] = (prod[idx] + (p - (c * mi) % p)) % p;
            }
        }
        let coeffs: Vec<u32> = prod[..k].iter().map(|&c| c as u32).collect();
        self.from_coeffs(&coeffs)
    }

    pub fn inv(&self, a: u32) -> Result<u32> {
        if a == 0 {
            return Err(Error::DivideByZero);
        }
        if let Some(t) = &self.inner.tables {
            let order = self.inner.q - 1;
            let l = t.log[a as usize];
            return Ok(t.exp[((order - l) % order) as usize]);
        }
        Ok(self.pow_reference(a, self.inner.q as u64 - 2))
    }

    pub fn div(&self, a: u32, b: u32) -> Result<u32> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        if let Some(t) = &self.inner.tables {
            let order = (self.inner.q - 1) as u64;
            let l = (t.log[a as usize] as u64 * (e % order)) % order;
            return t.exp[l as usize];
        }
        self.pow_reference(a, e)
    }

    /// Square-and-multiply on the reference multiplication.
    pub fn pow_reference(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_reference(acc, base);
            }
            base = self.mul_reference(base, base);
            e >>= 1;
        }
        acc
    }

    /// `a^(p^power)`: the Frobenius automorphism over the prime subfield,
    /// applied `power` times.
    pub fn frobenius(&self, a: u32, power: u32) -> u32 {
        let mut x = a;
        for _ in 0..(power % self.inner.k) {
            x = self.pow(x, self.inner.p as u64);
        }
        x
    }

    /// `a^(q0^power)` for a subfield of size `q0 = p^d`, `d | k`.
    pub fn frobenius_over(&self, a: u32, q0: u32, power: u32) -> Result<u32> {
        let p = self.inner.p;
        let mut d = 0u32;
        let mut v = 1u64;
        while v < q0 as u64 {
            v *= p as u64;
            d += 1;
        }
        if v != q0 as u64 || d == 0 || !self.inner.k.is_multiple_of(d) {
            return Err(Error::domain(format!(
                "{q0} is not the size of a subfield of GF({}^{})",
                p, self.inner.k
            )));
        }
        Ok(self.frobenius(a, d * power))
    }

    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if !self.contains(value) {
            return Err(Error::InvalidField(format!(
                "element index {value} out of range for q = {}",
                self.q()
            )));
        }
        Ok(FieldElement {
            field: self.clone(),
            value,
        })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            field: self.clone(),
            value: 0,
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            field: self.clone(),
            value: 1,
        }
    }

    /// Order of a nonzero element in the multiplicative group.
    pub fn multiplicative_order(&self, a: u32) -> Option<u64> {
        if a == 0 {
            return None;
        }
        let n = self.inner.q as u64 - 1;
        let mut order = n;
        for f in prime_factors(n) {
            while order.is_multiple_of(f) && self.pow_reference(a, order / f) == 1 {
                order /= f;
            }
        }
        Some(order)
    }

    fn build_tables(&self) -> Tables {
        let q = self.inner.q;
        let n = (q - 1) as u64;
        let generator = (1..q)
            .find(|&g| self.multiplicative_order(g) == Some(n))
            .expect("finite field has a primitive element");
        let mut exp = vec![0u32; 2 * n as usize];
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for i in 0..n as usize {
            exp[i] = x;
            log[x as usize] = i as u32;
            x = self.mul_reference(x, generator);
        }
        for i in n as usize..2 * n as usize {
            exp[i] = exp[i - n as usize];
        }
        Tables { exp, log }
    }
}

fn checked_q(p: u32, k: u32) -> Result<u64> {
    let q = (p as u64)
        .checked_pow(k)
        .filter(|&q| q <= u32::MAX as u64)
        .ok_or_else(|| Error::InvalidField(format!("GF({p}^{k}) exceeds the supported size")))?;
    Ok(q)
}

// ----- polynomials over GF(p), coefficients low-to-high -----

fn poly_trim(a: &mut Vec<u64>) {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
}

fn poly_is_zero(a: &[u64]) -> bool {
    a.iter().all(|&c| c == 0)
}

fn inv_mod_prime(a: u64, p: u64) -> u64 {
    // Fermat; p is prime and a != 0.
    let mut base = a % p;
    let mut e = p - 2;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut m = m.to_vec();
    poly_trim(&mut m);
    let dm = m.len() - 1;
    let lead_inv = inv_mod_prime(m[dm], p);
    while r.len() > dm && !poly_is_zero(&r) {
        let dr = r.len() - 1;
        let c = r[dr] * lead_inv % p;
        for i in 0..=dm {
            let idx = dr - dm + i;
            r[idx] = (r[idx] + p - c * m[i] % p) % p;
        }
        poly_trim(&mut r);
        if r.len() - 1 < dm || (r.len() == 1 && r[0] == 0) {
            break;
        }
    }
    if r.len() > dm && dm > 0 {
        r.truncate(dm);
    }
    if dm == 0 {
        return vec![0];
    }
    r
}

fn poly_mulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    poly_rem(&prod, m, p)
}

fn poly_powmod(base: &[u64], mut e: u64, m: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut b = poly_rem(base, m, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mulmod(&acc, &b, m, p);
        }
        b = poly_mulmod(&b, &b, m, p);
        e >>= 1;
    }
    acc
}

fn poly_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out: Vec<u64> = (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect();
    poly_trim(&mut out);
    out
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    poly_trim(&mut x);
    poly_trim(&mut y);
    while !poly_is_zero(&y) {
        let r = poly_rem(&x, &y, p);
        x = y;
        y = r;
        poly_trim(&mut y);
    }
    x
}

/// `x^(p^i) mod f`, by repeated p-th powering.
fn x_pow_p_iter(f: &[u64], p: u64, i: u32) -> Vec<u64> {
    let mut x = poly_rem(&[0, 1], f, p);
    for _ in 0..i {
        x = poly_powmod(&x, p, f, p);
    }
    x
}

/// Rabin's irreducibility test for a monic polynomial over GF(p).
pub(crate) fn poly_is_irreducible(f: &[u64], p: u64) -> bool {
    let k = f.len() as u32 - 1;
    if k == 0 {
        return false;
    }
    if k == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    // x^(p^k) == x mod f
    let xk = x_pow_p_iter(f, p, k);
    if !poly_is_zero(&poly_sub(&xk, &poly_rem(&x, f, p), p)) {
        return false;
    }
    for l in prime_factors(k as u64) {
        let xi = x_pow_p_iter(f, p, k / l as u32);
        let d = poly_sub(&xi, &x, p);
        let g = poly_gcd(f, &d, p);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

fn search_primitive(p: u32, k: u32) -> Option<Vec<u32>> {
    let q = (p as u64).pow(k);
    for idx in 1..q {
        let mut low = Vec::with_capacity(k as usize + 1);
        let mut v = idx;
        for _ in 0..k {
            low.push((v % p as u64) as u32);
            v /= p as u64;
        }
        if low[0] == 0 {
            continue;
        }
        low.push(1);
        let poly: Vec<u64> = low.iter().map(|&c| c as u64).collect();
        if !poly_is_irreducible(&poly, p as u64) {
            continue;
        }
        let candidate = FieldSpec {
            inner: Arc::new(Inner {
                p,
                k,
                q: q as u32,
                modulus: low.clone(),
                tables: None,
            }),
        };
        // x (index p) must generate the multiplicative group.
        if candidate.multiplicative_order(p) == Some(q - 1) {
            return Some(low);
        }
    }
    None
}

/// Arithmetic operation selector for [`field_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Inverse of the first operand; the second is ignored.
    Inv,
    /// First operand raised to the second operand's index as an integer.
    Pow,
}

/// An element together with its field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    field: FieldSpec,
    value: u32,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coeffs())
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.k() == 1 {
            return write!(f, "{}", self.value);
        }
        let terms: Vec<String> = self
            .coeffs()
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| match (i, c) {
                (0, c) => format!("{c}"),
                (1, 1) => "x".to_string(),
                (1, c) => format!("{c}x"),
                (i, 1) => format!("x^{i}"),
                (i, c) => format!("{c}x^{i}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl FieldElement {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    /// Packed index of this element.
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn coeffs(&self) -> Vec<u32> {
        self.field.coeffs(self.value)
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &FieldElement) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    fn with(&self, value: u32) -> FieldElement {
        FieldElement {
            field: self.field.clone(),
            value,
        }
    }

    pub fn checked_add(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same_field(other)?;
        Ok(self.with(self.field.add(self.value, other.value)))
    }

    pub fn checked_sub(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same_field(other)?;
        Ok(self.with(self.field.sub(self.value, other.value)))
    }

    pub fn checked_mul(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same_field(other)?;
        Ok(self.with(self.field.mul(self.value, other.value)))
    }

    pub fn checked_div(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same_field(other)?;
        Ok(self.with(self.field.div(self.value, other.value)?))
    }

    pub fn inv(&self) -> Result<FieldElement> {
        Ok(self.with(self.field.inv(self.value)?))
    }

    pub fn pow(&self, e: u64) -> FieldElement {
        self.with(self.field.pow(self.value, e))
    }

    pub fn frobenius(&self, power: u32) -> FieldElement {
        self.with(self.field.frobenius(self.value, power))
    }
}

/// Dispatches one of the field operations, checking that both operands
/// come from the same field.
pub fn field_arith(a: &FieldElement, b: &FieldElement, op: FieldOp) -> Result<FieldElement> {
    match op {
        FieldOp::Add => a.checked_add(b),
        FieldOp::Sub => a.checked_sub(b),
        FieldOp::Mul => a.checked_mul(b),
        FieldOp::Div => a.checked_div(b),
        FieldOp::Inv => {
            a.same_field(b)?;
            a.inv()
        }
        FieldOp::Pow => {
            a.same_field(b)?;
            Ok(a.pow(b.value as u64))
        }
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl std::ops::$trait for &FieldElement {
            type Output = FieldElement;
            /// Panics if the operands come from different fields.
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                self.$checked(rhs).expect("field mismatch")
            }
        }
        impl std::ops::$trait for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                (&self).$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add, checked_add);
impl_binop!(Sub, sub, checked_sub);
impl_binop!(Mul, mul, checked_mul);

impl std::ops::Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.with(self.field.neg(self.value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u32, k: u32) -> FieldSpec {
        FieldSpec::new(p, k).unwrap()
    }

    #[test]
    fn small_examples() {
        let f2 = gf(2, 1);
        assert_eq!(f2.add(1, 1), 0);
        let f3 = gf(3, 1);
        assert_eq!(f3.inv(2).unwrap(), 2);
        // GF(4) = GF(2)[x]/(x^2+x+1): x is index 2, x+1 is index 3.
        let f4 = gf(2, 2);
        assert_eq!(f4.modulus(), &[1, 1, 1]);
        assert_eq!(f4.mul(2, 2), 3);
        assert_eq!(f4.frobenius(2, 1), 3);
        for a in 0..2 {
            assert_eq!(f2.frobenius(a, 1), a);
        }
    }

    #[test]
    fn errors() {
        let f = gf(5, 1);
        assert_eq!(f.inv(0), Err(Error::DivideByZero));
        assert_eq!(f.div(3, 0), Err(Error::DivideByZero));
        let a = f.element(2).unwrap();
        let b = gf(3, 1).element(2).unwrap();
        assert_eq!(field_arith(&a, &b, FieldOp::Add), Err(Error::FieldMismatch));
        assert!(FieldSpec::new(4, 1).is_err());
        assert!(FieldSpec::with_modulus(2, 2, &[1, 0, 1]).is_err()); // (x+1)^2
        assert!(FieldSpec::with_modulus(2, 2, &[1, 1, 0]).is_err());
    }

    #[test]
    fn builtin_moduli_are_primitive() {
        for &(p, k, m) in BUILTIN_MODULI {
            let f = FieldSpec::with_modulus(p, k, m).unwrap();
            if k > 1 {
                // x generates the multiplicative group.
                assert_eq!(
                    f.multiplicative_order(p),
                    Some(f.q() as u64 - 1),
                    "GF({p}^{k})"
                );
            }
        }
    }

    #[test]
    fn search_reproduces_table() {
        for &(p, k, m) in BUILTIN_MODULI.iter().filter(|(p, k, _)| (*p as u64).pow(*k) <= 4096 && *k > 1) {
            assert_eq!(search_primitive(p, k).unwrap(), m, "GF({p}^{k})");
        }
    }

    #[test]
    fn axioms_exhaustive_small_fields() {
        for (p, k) in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (2, 4), (13, 1)] {
            let f = gf(p, k);
            let q = f.q();
            for a in 0..q {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.sub(f.add(a, b), b), a);
                    for c in 0..q {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn table_path_matches_reference() {
        for (p, k) in [(2, 4), (2, 8), (3, 3), (5, 2), (7, 2), (3, 5)] {
            let f = gf(p, k);
            assert!(f.has_tables());
            for a in 0..f.q() {
                for b in 0..f.q() {
                    assert_eq!(f.mul(a, b), f.mul_reference(a, b));
                }
                assert_eq!(f.pow(a, 11), f.pow_reference(a, 11));
            }
        }
    }

    #[test]
    fn inverse_exhaustive_up_to_256() {
        for (p, k) in [(2, 8), (251, 1), (3, 5), (5, 3)] {
            let f = gf(p, k);
            for a in 1..f.q() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
            }
        }
    }

    #[test]
    fn frobenius_is_automorphism() {
        for (p, k) in [(2, 2), (2, 3), (2, 4), (3, 2)] {
            let f = gf(p, k);
            for a in 0..f.q() {
                assert_eq!(f.frobenius(f.frobenius(a, 1), k - 1), a);
                for b in 0..f.q() {
                    assert_eq!(
                        f.frobenius(f.add(a, b), 1),
                        f.add(f.frobenius(a, 1), f.frobenius(b, 1))
                    );
                    assert_eq!(
                        f.frobenius(f.mul(a, b), 1),
                        f.mul(f.frobenius(a, 1), f.frobenius(b, 1))
                    );
                }
            }
            // fixes the prime subfield
            for a in 0..p {
                assert_eq!(f.frobenius(a, 1), a);
            }
        }
    }

    #[test]
    fn frobenius_randomized_large_field() {
        use rand::{Rng, SeedableRng};
        let f = FieldSpec::with_modulus(2, 20, &{
            // x^20 + x^3 + 1
            let mut m = vec![0u32; 21];
            m[0] = 1;
            m[3] = 1;
            m[20] = 1;
            m
        })
        .unwrap();
        assert!(!f.has_tables());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let a = rng.gen_range(0..f.q());
            let b = rng.gen_range(0..f.q());
            assert_eq!(
                f.frobenius(f.mul(a, b), 1),
                f.mul(f.frobenius(a, 1), f.frobenius(b, 1))
            );
            assert_eq!(
                f.frobenius(f.add(a, b), 1),
                f.add(f.frobenius(a, 1), f.frobenius(b, 1))
            );
        }
    }

    #[test]
    fn frobenius_over_subfield() {
        let f = gf(2, 4);
        for a in 0..16 {
            assert_eq!(f.frobenius_over(a, 4, 1).unwrap(), f.pow(a, 4));
            assert_eq!(f.frobenius_over(a, 4, 2).unwrap(), a);
        }
        assert!(f.frobenius_over(3, 8, 1).is_err());
    }

    #[test]
    fn coeff_roundtrip_and_display() {
        let f = gf(3, 2);
        for a in 0..9 {
            assert_eq!(f.from_coeffs(&f.coeffs(a)), a);
        }
        let x = gf(2, 2).element(3).unwrap();
        assert_eq!(x.to_string(), "x + 1");
        let cfg: FieldConfig = serde_json::from_str(r#"{"p": 2, "k": 2}"#).unwrap();
        assert_eq!(cfg.build().unwrap(), gf(2, 2));
        assert!(serde_json::from_str::<FieldConfig>(r#"{"p": 2, "k": 2, "q": 4}"#).is_err());
    }
}
