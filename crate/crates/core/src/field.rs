//! Exact arithmetic over GF(p) and GF(2^e).
//!
//! Elements are carried as raw `u64` labels: the residue for prime fields and
//! the packed coefficient vector (bit `i` holds the coefficient of `z^i`) for
//! binary extension fields. A label is always in `0..q`, which also gives every
//! field a canonical element order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported prime characteristic.
pub const MAX_PRIME: u64 = 1 << 31;
/// Largest supported binary extension degree.
pub const MAX_BINARY_DEGREE: u32 = 16;

/// Default irreducible moduli for GF(2^e), packed with bit `i` = coefficient of `z^i`.
/// Index `e - 2`; these are the Conway polynomials for p = 2.
const BINARY_MODULI: [u64; 15] = [
    0x7,     // z^2 + z + 1
    0xb,     // z^3 + z + 1
    0x13,    // z^4 + z + 1
    0x25,    // z^5 + z^2 + 1
    0x5b,    // z^6 + z^4 + z^3 + z + 1
    0x83,    // z^7 + z + 1
    0x11d,   // z^8 + z^4 + z^3 + z^2 + 1
    0x211,   // z^9 + z^4 + 1
    0x46f,   // z^10 + z^6 + z^5 + z^3 + z^2 + z + 1
    0x805,   // z^11 + z^2 + 1
    0x10eb,  // z^12 + z^7 + z^6 + z^5 + z^3 + z + 1
    0x201b,  // z^13 + z^4 + z^3 + z + 1
    0x40a9,  // z^14 + z^7 + z^5 + z^3 + 1
    0x8035,  // z^15 + z^5 + z^4 + z^2 + 1
    0x1002d, // z^16 + z^5 + z^3 + z^2 + 1
];

/// A finite field GF(p^e) with `p` prime and either `e = 1` or `p = 2`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FieldSpec {
    characteristic: u64,
    degree: u32,
    /// Packed binary modulus including the leading term; 0 for prime fields.
    modulus: u64,
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn bit_degree(x: u64) -> u32 {
    63 - x.leading_zeros()
}

/// Remainder of packed binary polynomial `a` modulo `m` (m != 0).
fn binary_poly_rem(mut a: u64, m: u64) -> u64 {
    let dm = bit_degree(m);
    while a != 0 && bit_degree(a) >= dm {
        a ^= m << (bit_degree(a) - dm);
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
fn binary_poly_irreducible(m: u64) -> bool {
    if m < 2 {
        return false;
    }
    let deg = bit_degree(m);
    for d in 1..=deg / 2 {
        for cand in (1u64 << d)..(1u64 << (d + 1)) {
            if binary_poly_rem(m, cand) == 0 {
                return false;
            }
        }
    }
    true
}

impl FieldSpec {
    /// The prime field GF(p).
    pub fn prime(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p > MAX_PRIME {
            return Err(Error::Unsupported(format!("prime {p} exceeds 2^31")));
        }
        Ok(Self { characteristic: p, degree: 1, modulus: 0 })
    }

    /// GF(2^e) with the default modulus. `e = 1` yields the prime field GF(2).
    pub fn binary(e: u32) -> Result<Self> {
        match e {
            0 => Err(Error::Parameter("extension degree must be positive".into())),
            1 => Self::prime(2),
            2..=MAX_BINARY_DEGREE => Self::binary_with_modulus(e, BINARY_MODULI[e as usize - 2]),
            _ => Err(Error::Unsupported(format!("GF(2^{e}) exceeds GF(2^16)"))),
        }
    }

    /// GF(2^e) reduced modulo the packed polynomial `modulus` (bit `e` must be set).
    pub fn binary_with_modulus(e: u32, modulus: u64) -> Result<Self> {
        if e == 0 || e > MAX_BINARY_DEGREE {
            return Err(Error::Unsupported(format!("GF(2^{e}) out of range")));
        }
        if e == 1 {
            return Self::prime(2);
        }
        if modulus >> e != 1 {
            return Err(Error::Parameter(format!(
                "modulus {modulus:#x} does not have degree {e}"
            )));
        }
        if !binary_poly_irreducible(modulus) {
            return Err(Error::Reducible(format!("{modulus:#x}")));
        }
        Ok(Self { characteristic: 2, degree: e, modulus })
    }

    /// Field of order `q`, a prime or a power of two.
    pub fn with_order(q: u64) -> Result<Self> {
        if q >= 4 && q.is_power_of_two() {
            Self::binary(q.trailing_zeros())
        } else if is_prime(q) {
            Self::prime(q)
        } else if q > 2 && (2..q).any(|p| is_prime(p) && is_power_of(q, p)) {
            Err(Error::Unsupported(format!(
                "GF({q}): odd-characteristic extension fields are not supported"
            )))
        } else {
            Err(Error::NotPrime(q))
        }
    }

    pub fn characteristic(&self) -> u64 {
        self.characteristic
    }

    pub fn extension_degree(&self) -> u32 {
        self.degree
    }

    pub fn is_prime_field(&self) -> bool {
        self.degree == 1
    }

    /// Number of elements q = p^e.
    pub fn order(&self) -> u64 {
        self.characteristic.pow(self.degree)
    }

    /// Modulus coefficients, lowest degree first. Empty for prime fields.
    pub fn modulus(&self) -> Vec<u64> {
        if self.degree == 1 {
            return Vec::new();
        }
        (0..=self.degree).map(|i| (self.modulus >> i) & 1).collect()
    }

    /// Packed binary modulus, `None` for prime fields.
    pub fn packed_modulus(&self) -> Option<u64> {
        (self.degree > 1).then_some(self.modulus)
    }

    /// All element labels in canonical order.
    pub fn elements(&self) -> std::ops::Range<u64> {
        0..self.order()
    }

    pub fn contains(&self, x: u64) -> bool {
        x < self.order()
    }

    /// Reduces an arbitrary integer into the field (prime fields only reduce mod p;
    /// binary extension labels are truncated modulo the modulus).
    pub fn reduce(&self, x: u64) -> u64 {
        if self.degree == 1 {
            x % self.characteristic
        } else {
            binary_poly_rem(x, self.modulus)
        }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        if self.characteristic == 2 {
            a ^ b
        } else {
            let s = a + b;
            if s >= self.characteristic {
                s - self.characteristic
            } else {
                s
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if self.characteristic == 2 || a == 0 {
            a
        } else {
            self.characteristic - a
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if self.degree == 1 {
            if self.characteristic == 2 {
                a & b
            } else {
                a * b % self.characteristic
            }
        } else {
            let mut prod = 0u64;
            let mut x = a;
            let mut y = b;
            while y != 0 {
                if y & 1 == 1 {
                    prod ^= x;
                }
                y >>= 1;
                x <<= 1;
            }
            binary_poly_rem(prod, self.modulus)
        }
    }

    pub fn pow(&self, a: u64, mut exp: u64) -> u64 {
        let mut base = a;
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via a^(q-2).
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.order() - 2))
    }

    pub fn div(&self, a: u64, b: u64) -> Result<u64> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn element(&self, value: u64) -> Result<FieldElement> {
        FieldElement::new(*self, value)
    }

    /// Renders an element label in the code-file convention.
    pub fn format_element(&self, x: u64) -> String {
        if self.degree == 1 {
            x.to_string()
        } else {
            format!("{x:#x}")
        }
    }

    /// Parses an element written as a decimal integer or `0x` hex pack.
    pub fn parse_element(&self, s: &str) -> Result<u64> {
        let s = s.trim();
        let v = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            u64::from_str_radix(hex, 16)
        } else {
            s.parse::<u64>()
        }
        .map_err(|_| Error::Parse(format!("bad field element {s:?}")))?;
        if !self.contains(v) {
            return Err(Error::Parse(format!("element {s} not in {self}")));
        }
        Ok(v)
    }
}

fn is_power_of(mut q: u64, p: u64) -> bool {
    while q.is_multiple_of(p) {
        q /= p;
    }
    q == 1
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree == 1 {
            write!(f, "gf({})", self.characteristic)
        } else {
            write!(f, "gf(2^{};modulus={:#x})", self.degree, self.modulus)
        }
    }
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    /// Accepts `gf(q)`, `gf(2^e)` and `gf(2^e;modulus=<hex>)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad field spec {s:?}"));
        let lower = s.trim().to_ascii_lowercase();
        let inner = lower
            .strip_prefix("gf(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (order, modulus) = match inner.split_once(';') {
            Some((o, m)) => {
                let hex = m.trim().strip_prefix("modulus=").ok_or_else(bad)?.trim();
                let hex = hex.strip_prefix("0x").unwrap_or(hex);
                (o.trim(), Some(u64::from_str_radix(hex, 16).map_err(|_| bad())?))
            }
            None => (inner.trim(), None),
        };
        if let Some((base, exp)) = order.split_once('^') {
            let base: u64 = base.trim().parse().map_err(|_| bad())?;
            let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
            if base != 2 {
                if exp == 1 {
                    return Self::prime(base);
                }
                return Err(Error::Unsupported(format!(
                    "GF({base}^{exp}): only binary extensions are supported"
                )));
            }
            match modulus {
                Some(m) => Self::binary_with_modulus(exp, m),
                None => Self::binary(exp),
            }
        } else {
            let q: u64 = order.parse().map_err(|_| bad())?;
            match modulus {
                Some(m) if q.is_power_of_two() && q >= 4 => {
                    Self::binary_with_modulus(q.trailing_zeros(), m)
                }
                Some(_) => Err(bad()),
                None => Self::with_order(q),
            }
        }
    }
}

impl TryFrom<String> for FieldSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FieldSpec> for String {
    fn from(f: FieldSpec) -> String {
        f.to_string()
    }
}

/// An element of a specific field.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FieldElement {
    spec: FieldSpec,
    value: u64,
}

/// Binary field operations accepted by [`field_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl FieldElement {
    pub fn new(spec: FieldSpec, value: u64) -> Result<Self> {
        if !spec.contains(value) {
            return Err(Error::Parameter(format!("{value} is not a label of {spec}")));
        }
        Ok(Self { spec, value })
    }

    pub fn zero(spec: FieldSpec) -> Self {
        Self { spec, value: 0 }
    }

    pub fn one(spec: FieldSpec) -> Self {
        Self { spec, value: 1 }
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Coefficients over GF(p), lowest degree first (length e).
    pub fn coefficients(&self) -> Vec<u64> {
        if self.spec.degree == 1 {
            vec![self.value]
        } else {
            (0..self.spec.degree).map(|i| (self.value >> i) & 1).collect()
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self { spec: self.spec, value: self.spec.inv(self.value)? })
    }

    pub fn checked(self, other: Self, op: FieldOp) -> Result<Self> {
        field_arith(self, other, op)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec.format_element(self.value))
    }
}

/// Exact field operation on two elements of the same field.
pub fn field_arith(a: FieldElement, b: FieldElement, op: FieldOp) -> Result<FieldElement> {
    if a.spec != b.spec {
        return Err(Error::SpecMismatch(a.spec.to_string(), b.spec.to_string()));
    }
    let f = a.spec;
    let value = match op {
        FieldOp::Add => f.add(a.value, b.value),
        FieldOp::Sub => f.sub(a.value, b.value),
        FieldOp::Mul => f.mul(a.value, b.value),
        FieldOp::Div => f.div(a.value, b.value)?,
    };
    Ok(FieldElement { spec: f, value })
}

macro_rules! impl_op {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait for FieldElement {
            type Output = FieldElement;
            /// Panics on mismatched fields (and on division by zero); use
            /// [`field_arith`] for the fallible form.
            fn $method(self, rhs: FieldElement) -> FieldElement {
                field_arith(self, rhs, $op).expect("field operation")
            }
        }
    };
}

impl_op!(Add, add, FieldOp::Add);
impl_op!(Sub, sub, FieldOp::Sub);
impl_op!(Mul, mul, FieldOp::Mul);
impl_op!(Div, div, FieldOp::Div);

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement { spec: self.spec, value: self.spec.neg(self.value) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_fields() -> Vec<FieldSpec> {
        let mut v: Vec<_> = [2, 3, 5, 7, 11, 13].iter().map(|&p| FieldSpec::prime(p).unwrap()).collect();
        v.extend((2..=4).map(|e| FieldSpec::binary(e).unwrap()));
        v
    }

    #[test]
    fn characteristic_two_identity() {
        let f = FieldSpec::prime(2).unwrap();
        let one = f.element(1).unwrap();
        assert!(field_arith(one, one, FieldOp::Add).unwrap().is_zero());
    }

    #[test]
    fn inverse_of_three_mod_five() {
        let f = FieldSpec::prime(5).unwrap();
        let x = field_arith(f.element(1).unwrap(), f.element(3).unwrap(), FieldOp::Div).unwrap();
        assert_eq!(x.value(), 2);
    }

    /// GF(4) table built from schoolbook polynomial products reduced by z^2 = z + 1.
    #[test]
    fn gf4_table_from_reduction() {
        let f = FieldSpec::binary(2).unwrap();
        assert_eq!(f.modulus(), vec![1, 1, 1]);
        // elements c0 + c1 z as (c0, c1)
        let reference = |a: u64, b: u64| -> u64 {
            let (a0, a1, b0, b1) = (a & 1, a >> 1, b & 1, b >> 1);
            let c0 = (a0 * b0) % 2;
            let c1 = (a0 * b1 + a1 * b0) % 2;
            let c2 = (a1 * b1) % 2;
            // z^2 -> z + 1
            let r0 = (c0 + c2) % 2;
            let r1 = (c1 + c2) % 2;
            r0 | (r1 << 1)
        };
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(f.mul(a, b), reference(a, b), "{a}*{b}");
            }
        }
        // z * z = z + 1
        assert_eq!(f.mul(0b10, 0b10), 0b11);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small_orders() {
        for f in small_fields() {
            let q = f.order();
            for a in 0..q {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1, "{f} inv {a}");
                }
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
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
    fn default_moduli_are_irreducible() {
        for e in 2..=MAX_BINARY_DEGREE {
            let f = FieldSpec::binary(e).unwrap();
            assert!(binary_poly_irreducible(f.packed_modulus().unwrap()), "e = {e}");
            // the multiplicative group has order 2^e - 1
            let z = 2;
            assert_eq!(f.pow(z, f.order() - 1), 1);
        }
    }

    #[test]
    fn rejects_reducible_modulus_and_composites() {
        // z^2 + 1 = (z + 1)^2
        assert!(matches!(FieldSpec::binary_with_modulus(2, 0b101), Err(Error::Reducible(_))));
        assert!(matches!(FieldSpec::prime(9), Err(Error::NotPrime(9))));
        assert!(matches!(FieldSpec::with_order(9), Err(Error::Unsupported(_))));
        assert!(matches!(FieldSpec::with_order(6), Err(Error::NotPrime(6))));
    }

    #[test]
    fn mismatch_and_division_errors() {
        let f2 = FieldSpec::prime(2).unwrap();
        let f3 = FieldSpec::prime(3).unwrap();
        let r = field_arith(f2.element(1).unwrap(), f3.element(1).unwrap(), FieldOp::Add);
        assert!(matches!(r, Err(Error::SpecMismatch(..))));
        let r = field_arith(f3.element(1).unwrap(), f3.element(0).unwrap(), FieldOp::Div);
        assert_eq!(r, Err(Error::DivisionByZero));
    }

    #[test]
    fn text_form_round_trips() {
        for s in ["gf(2)", "gf(5)", "gf(2^3;modulus=0xb)", "gf(2147483647)"] {
            let f: FieldSpec = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        let f: FieldSpec = "gf(4)".parse().unwrap();
        assert_eq!(f, FieldSpec::binary(2).unwrap());
        let f: FieldSpec = "GF(2^4)".parse().unwrap();
        assert_eq!(f.order(), 16);
        assert!("gf(x)".parse::<FieldSpec>().is_err());
        assert!("gf(2^2;modulus=0x5)".parse::<FieldSpec>().is_err());
    }

    #[test]
    fn large_prime_multiplication_does_not_overflow() {
        let p = 2_147_483_647;
        let f = FieldSpec::prime(p).unwrap();
        let a = p - 1;
        assert_eq!(f.mul(a, a), 1);
        assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
    }
}
