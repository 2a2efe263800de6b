//! Arithmetic in GF(2^8).
//!
//! Elements are bytes read as polynomials over GF(2) of degree < 8, reduced
//! modulo x^8 + x^4 + x^3 + x^2 + 1 (0x11D). Addition is XOR. Multiplication
//! goes through log/antilog tables generated at compile time; `x` (0x02)
//! generates the multiplicative group.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Full reduction polynomial, x^8 + x^4 + x^3 + x^2 + 1.
pub const REDUCTION_POLY: u16 = 0x11D;

/// Order of the multiplicative group.
pub const GROUP_ORDER: usize = 255;

static EXP: [u8; 512] = build_exp();
static LOG: [u8; 256] = build_log();

const fn build_exp() -> [u8; 512] {
    let mut table = [0u8; 512];
    let mut val: u16 = 1;
    let mut i = 0;
    while i < GROUP_ORDER {
        table[i] = val as u8;
        table[i + GROUP_ORDER] = val as u8;
        val <<= 1;
        if val & 0x100 != 0 {
            val ^= REDUCTION_POLY;
        }
        i += 1;
    }
    table[510] = table[0];
    table[511] = table[1];
    table
}

const fn build_log() -> [u8; 256] {
    let exp = build_exp();
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < GROUP_ORDER {
        table[exp[i] as usize] = i as u8;
        i += 1;
    }
    table
}

/// An element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
#[repr(transparent)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Self = Gf256(0);
    pub const ONE: Self = Gf256(1);
    /// The primitive element `x`.
    pub const GENERATOR: Self = Gf256(2);

    #[inline]
    pub const fn new(value: u8) -> Self {
        Gf256(value)
    }

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// `generator^exponent`.
    #[inline]
    pub fn exp(exponent: usize) -> Self {
        Gf256(EXP[exponent % GROUP_ORDER])
    }

    /// Discrete log base `x`; `None` for zero.
    #[inline]
    pub fn log(self) -> Option<u8> {
        if self.0 == 0 {
            None
        } else {
            Some(LOG[self.0 as usize])
        }
    }

    /// Multiplicative inverse. Zero has none.
    pub fn inv(self) -> Result<Self> {
        match self.0 {
            0 => Err(Error::Domain("zero has no multiplicative inverse".into())),
            v => Ok(Gf256(EXP[GROUP_ORDER - LOG[v as usize] as usize])),
        }
    }

    pub fn pow(self, mut e: u32) -> Self {
        let mut base = self;
        let mut acc = Gf256::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

/// Field addition (XOR).
#[inline]
pub fn add(a: Gf256, b: Gf256) -> Gf256 {
    Gf256(a.0 ^ b.0)
}

#[inline]
pub fn mul(a: Gf256, b: Gf256) -> Gf256 {
    if a.0 == 0 || b.0 == 0 {
        return Gf256::ZERO;
    }
    Gf256(EXP[LOG[a.0 as usize] as usize + LOG[b.0 as usize] as usize])
}

#[inline]
pub fn inv(a: Gf256) -> Result<Gf256> {
    a.inv()
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

impl Add for Gf256 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        add(self, rhs)
    }
}

impl Sub for Gf256 {
    type Output = Self;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Self) -> Self {
        add(self, rhs)
    }
}

impl Neg for Gf256 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self
    }
}

impl Mul for Gf256 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        mul(self, rhs)
    }
}

/// Panics on division by zero, like integer division.
impl Div for Gf256 {
    type Output = Self;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.inv().expect("division by zero in GF(2^8)")
    }
}

impl AddAssign for Gf256 {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

impl SubAssign for Gf256 {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn sub_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Zero for Gf256 {
    fn zero() -> Self {
        Gf256::ZERO
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl One for Gf256 {
    fn one() -> Self {
        Gf256::ONE
    }
}

impl std::iter::Sum for Gf256 {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Gf256::ZERO, Add::add)
    }
}

/// Row of the multiplication table for a fixed coefficient.
fn mul_row(c: Gf256) -> [u8; 256] {
    let mut row = [0u8; 256];
    if c.0 != 0 {
        let lc = LOG[c.0 as usize] as usize;
        for (v, out) in row.iter_mut().enumerate().skip(1) {
            *out = EXP[lc + LOG[v] as usize];
        }
    }
    row
}

/// `dst[i] += c * src[i]` over the field.
pub fn mul_add_slice(dst: &mut [u8], src: &[u8], c: Gf256) {
    assert_eq!(dst.len(), src.len(), "slice length mismatch");
    match c.0 {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        _ => {
            let row = mul_row(c);
            dst.iter_mut()
                .zip(src)
                .for_each(|(d, s)| *d ^= row[*s as usize]);
        }
    }
}

/// `buf[i] *= c` over the field.
pub fn scale_slice(buf: &mut [u8], c: Gf256) {
    match c.0 {
        1 => {}
        0 => buf.fill(0),
        _ => {
            let row = mul_row(c);
            buf.iter_mut().for_each(|b| *b = row[*b as usize]);
        }
    }
}
