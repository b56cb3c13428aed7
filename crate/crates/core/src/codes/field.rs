//! Finite fields GF(q) for q a prime power up to 256.
//!
//! Prime fields use arithmetic mod p. For q = p^m with m > 1 an element is
//! labelled by the integer Σ cᵢ·pⁱ of its polynomial coefficients over GF(p),
//! and products are reduced modulo the smallest monic irreducible polynomial
//! of degree m, where polynomials are ordered by that same integer label.
//! This fixes, for example, x²+x+1 for GF(4), x³+x+1 for GF(8), x⁴+x+1 for
//! GF(16), x²+1 for GF(9) and x⁸+x⁴+x³+x+1 for GF(256).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_FIELD_ORDER: usize = 256;
const AXIOM_SAMPLES: usize = 1000;
const AXIOM_SEED: u64 = 0x6f69656c64;

/// Returns `(p, m)` with `q = p^m`, or `None` if `q` is not a prime power.
pub fn prime_power(q: usize) -> Option<(usize, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|&d| q.is_multiple_of(d))?;
    let mut rest = q;
    let mut m = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldTables {
    q: usize,
    p: usize,
    m: u32,
    /// Coefficients c₀..c_m of the reduction polynomial (prime-power fields).
    modulus: Option<Vec<usize>>,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
}

fn digits(mut x: usize, p: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for d in out.iter_mut() {
        *d = x % p;
        x /= p;
    }
    out
}

fn undigits(ds: &[usize], p: usize) -> usize {
    ds.iter().rev().fold(0, |acc, &d| acc * p + d)
}

/// Remainder of `a` modulo monic `b` over GF(p), coefficient vectors low-first.
fn poly_rem(a: &[usize], b: &[usize], p: usize) -> Vec<usize> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().expect("nonempty");
        if lead != 0 {
            let shift = r.len() - 1 - db;
            for (i, &bc) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - (lead * bc) % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn poly_mul(a: &[usize], b: &[usize], p: usize) -> Vec<usize> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

fn is_irreducible(poly: &[usize], p: usize) -> bool {
    let deg = poly.len() - 1;
    for d in 1..=deg / 2 {
        // every monic divisor candidate of degree d
        for low in 0..p.pow(d as u32) {
            let mut cand = digits(low, p, d);
            cand.push(1);
            if poly_rem(poly, &cand, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn smallest_irreducible(p: usize, m: u32) -> Vec<usize> {
    let m = m as usize;
    (0..p.pow(m as u32))
        .map(|low| {
            let mut poly = digits(low, p, m);
            poly.push(1);
            poly
        })
        .find(|poly| is_irreducible(poly, p))
        .expect("an irreducible polynomial of every degree exists")
}

/// Builds GF(q) and checks the field axioms.
pub fn field_make(q: usize) -> Result<FieldTables> {
    let (p, m) = prime_power(q)
        .filter(|_| q <= MAX_FIELD_ORDER)
        .ok_or_else(|| Error::Code(format!("q = {q} is not a prime power <= {MAX_FIELD_ORDER}")))?;
    let modulus = (m > 1).then(|| smallest_irreducible(p, m));
    let mut add = vec![0u8; q * q];
    let mut mul = vec![0u8; q * q];
    for a in 0..q {
        for b in 0..q {
            let (s, t) = match &modulus {
                None => ((a + b) % p, (a * b) % p),
                Some(md) => {
                    let (da, db) = (digits(a, p, m as usize), digits(b, p, m as usize));
                    let sum: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                    let prod = poly_rem(&poly_mul(&da, &db, p), md, p);
                    (undigits(&sum, p), undigits(&prod, p))
                }
            };
            add[a * q + b] = s as u8;
            mul[a * q + b] = t as u8;
        }
    }
    let neg = (0..q)
        .map(|a| {
            (0..q)
                .find(|&b| add[a * q + b] == 0)
                .expect("additive inverse") as u8
        })
        .collect();
    let mut inv = vec![0u8; q];
    for a in 1..q {
        inv[a] = (1..q)
            .find(|&b| mul[a * q + b] == 1)
            .ok_or_else(|| Error::Code(format!("GF({q}): element {a} has no inverse")))?
            as u8;
    }
    let field = FieldTables {
        q,
        p,
        m,
        modulus,
        add,
        mul,
        neg,
        inv,
    };
    field.verify_axioms()?;
    Ok(field)
}

impl FieldTables {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn characteristic(&self) -> usize {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Reduction polynomial coefficients, constant term first.
    pub fn modulus(&self) -> Option<&[usize]> {
        self.modulus.as_deref()
    }

    pub fn zero(&self) -> usize {
        0
    }

    pub fn one(&self) -> usize {
        1
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a * self.q + b] as usize
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.q + b] as usize
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        self.neg[a] as usize
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    pub fn inv(&self, a: usize) -> Option<usize> {
        (a != 0).then(|| self.inv[a] as usize)
    }

    pub fn pow(&self, a: usize, e: usize) -> usize {
        (0..e).fold(1, |acc, _| self.mul(acc, a))
    }

    fn check_triple(&self, a: usize, b: usize, c: usize) -> Result<()> {
        let fail = |what: &str| {
            Err(Error::Code(format!(
                "GF({}) violates {what} at ({a},{b},{c})",
                self.q
            )))
        };
        if self.add(self.add(a, b), c) != self.add(a, self.add(b, c)) {
            return fail("additive associativity");
        }
        if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
            return fail("multiplicative associativity");
        }
        if self.mul(a, self.add(b, c)) != self.add(self.mul(a, b), self.mul(a, c)) {
            return fail("distributivity");
        }
        if self.add(a, b) != self.add(b, a) || self.mul(a, b) != self.mul(b, a) {
            return fail("commutativity");
        }
        if self.add(a, 0) != a || self.mul(a, 1) != a {
            return fail("identity");
        }
        if self.add(a, self.neg(a)) != 0 {
            return fail("additive inverse");
        }
        if a != 0 && self.mul(a, self.inv[a] as usize) != 1 {
            return fail("multiplicative inverse");
        }
        Ok(())
    }

    fn verify_axioms(&self) -> Result<()> {
        let q = self.q;
        if q <= 16 {
            for a in 0..q {
                for b in 0..q {
                    for c in 0..q {
                        self.check_triple(a, b, c)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(AXIOM_SEED);
            for _ in 0..AXIOM_SAMPLES {
                let (a, b, c) = (
                    rng.gen_range(0..q),
                    rng.gen_range(0..q),
                    rng.gen_range(0..q),
                );
                self.check_triple(a, b, c)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_arithmetic() {
        let f = field_make(5).unwrap();
        assert_eq!(f.mul(3, 4), 2);
        assert_eq!(f.add(3, 4), 2);
        assert_eq!(f.inv(2), Some(3));
        assert_eq!(f.inv(0), None);
        assert!(f.modulus().is_none());
    }

    #[test]
    fn gf4_uses_x2_x_1() {
        let f = field_make(4).unwrap();
        assert_eq!(f.modulus(), Some(&[1, 1, 1][..]));
        assert_eq!(f.mul(2, 2), 3);
        assert_eq!(f.add(2, 3), 1);
        assert_eq!(f.characteristic(), 2);
    }

    #[test]
    fn published_polynomials() {
        assert_eq!(field_make(8).unwrap().modulus(), Some(&[1, 1, 0, 1][..]));
        assert_eq!(
            field_make(16).unwrap().modulus(),
            Some(&[1, 1, 0, 0, 1][..])
        );
        assert_eq!(field_make(9).unwrap().modulus(), Some(&[1, 0, 1][..]));
        assert_eq!(
            field_make(256).unwrap().modulus(),
            Some(&[1, 1, 0, 1, 1, 0, 0, 0, 1][..])
        );
    }

    #[test]
    fn additive_identity_everywhere() {
        for q in [
            2, 3, 4, 5, 7, 8, 9, 16, 25, 27, 32, 49, 64, 81, 125, 128, 243, 256,
        ] {
            let f = field_make(q).unwrap();
            assert!((0..q).all(|a| f.add(a, 0) == a), "GF({q})");
        }
    }

    #[test]
    fn rejects_non_prime_powers() {
        for q in [0, 1, 6, 10, 12, 100, 257, 512] {
            assert!(field_make(q).is_err(), "q = {q}");
        }
    }

    #[test]
    fn prime_power_detection() {
        assert_eq!(prime_power(64), Some((2, 6)));
        assert_eq!(prime_power(243), Some((3, 5)));
        assert_eq!(prime_power(6), None);
    }
}
