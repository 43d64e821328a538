//! Exact arithmetic in Q(ζ), ζ a primitive 11th root of unity.
//!
//! Elements are stored in the power basis ζ⁰..ζ⁹ as ten integer numerators over a
//! single positive denominator. Products are accumulated in Z[x]/(x¹¹ − 1) and folded
//! back with ζ¹⁰ = −(1 + ζ + … + ζ⁹).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::OnceLock;

use rug::{Assign, Complex, Float, Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const P: usize = 11;
pub const DIM: usize = 10;

pub type Coords = [Integer; DIM];
pub type Slots = [Integer; P];

pub fn zero_coords() -> Coords {
    std::array::from_fn(|_| Integer::new())
}

pub fn zero_slots() -> Slots {
    std::array::from_fn(|_| Integer::new())
}

/// Folds a vector of Z[x]/(x¹¹ − 1) onto the reduced basis.
pub fn fold(s: &Slots) -> Coords {
    std::array::from_fn(|k| Integer::from(&s[k] - &s[P - 1]))
}

pub fn fold_into(s: &Slots, out: &mut Coords) {
    for k in 0..DIM {
        out[k].assign(&s[k] - &s[P - 1]);
    }
}

/// acc += a·b in Z[x]/(x¹¹ − 1).
#[inline]
pub fn mul_acc(acc: &mut Slots, a: &Coords, b: &Coords) {
    for s in 0..DIM {
        if a[s].is_zero() {
            continue;
        }
        for t in 0..DIM {
            if b[t].is_zero() {
                continue;
            }
            let k = if s + t >= P { s + t - P } else { s + t };
            acc[k] += &a[s] * &b[t];
        }
    }
}

pub fn is_zero_coords(c: &Coords) -> bool {
    c.iter().all(|x| x.is_zero())
}

/// Element of Q(ζ) in canonical form: gcd(num, den) = 1 and den > 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycElem {
    num: Coords,
    den: Integer,
}

/// Automorphism ζ ↦ ζ^d of Q(ζ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaloisAuto {
    d: u32,
}

impl GaloisAuto {
    pub fn new(d: i64) -> Result<Self> {
        let d = d.rem_euclid(P as i64) as u32;
        if d == 0 {
            return Err(Error::InvalidInput("galois exponent divisible by 11".into()));
        }
        Ok(GaloisAuto { d })
    }

    pub fn identity() -> Self {
        GaloisAuto { d: 1 }
    }

    /// ζ ↦ ζ⁹, generator of Gal(Q(ζ)/Q(√−11)).
    pub fn sigma() -> Self {
        GaloisAuto { d: 9 }
    }

    /// Complex conjugation.
    pub fn conj() -> Self {
        GaloisAuto { d: 10 }
    }

    pub fn exponent(self) -> u32 {
        self.d
    }

    pub fn compose(self, other: GaloisAuto) -> GaloisAuto {
        GaloisAuto { d: (self.d * other.d) % P as u32 }
    }

    pub fn pow(self, k: u32) -> GaloisAuto {
        let mut g = GaloisAuto::identity();
        for _ in 0..k {
            g = g.compose(self);
        }
        g
    }

    pub fn apply(self, a: &CycElem) -> CycElem {
        a.galois(self)
    }
}

impl CycElem {
    pub fn zero() -> Self {
        CycElem { num: zero_coords(), den: Integer::from(1) }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: impl Into<Integer>) -> Self {
        let mut num = zero_coords();
        num[0] = n.into();
        CycElem { num, den: Integer::from(1) }
    }

    pub fn from_rational(r: &Rational) -> Self {
        let mut num = zero_coords();
        num[0] = r.numer().clone();
        CycElem { num, den: r.denom().clone() }
    }

    /// Builds from integer numerators over a common denominator and canonicalizes.
    pub fn from_parts(num: Coords, den: Integer) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut e = CycElem { num, den };
        e.canonicalize();
        e
    }

    pub fn from_slots(s: &Slots, den: Integer) -> Self {
        Self::from_parts(fold(s), den)
    }

    pub fn from_coords(c: &[Rational; DIM]) -> Self {
        let mut den = Integer::from(1);
        for x in c {
            den.lcm_mut(x.denom());
        }
        let num = std::array::from_fn(|k| {
            let mut v = Integer::from(&den / c[k].denom());
            v *= c[k].numer();
            v
        });
        Self::from_parts(num, den)
    }

    /// ζ^k for any integer k.
    pub fn zeta(k: i64) -> Self {
        let k = k.rem_euclid(P as i64) as usize;
        let mut s = zero_slots();
        s[k] = Integer::from(1);
        Self::from_slots(&s, Integer::from(1))
    }

    /// ε = ζ + ζ⁻¹.
    pub fn eps() -> Self {
        &Self::zeta(1) + &Self::zeta(-1)
    }

    /// Σ cᵢ εⁱ.
    pub fn from_eps_poly(c: &[Rational]) -> Self {
        let pw = eps_powers(c.len());
        let mut acc = CycElem::zero();
        for (ci, e) in c.iter().zip(pw.iter()) {
            if ci.cmp0() != std::cmp::Ordering::Equal {
                acc = &acc + &e.scale(ci);
            }
        }
        acc
    }

    pub fn from_eps_ints(c: &[i64]) -> Self {
        let r: Vec<Rational> = c.iter().map(|&x| Rational::from(x)).collect();
        Self::from_eps_poly(&r)
    }

    /// Gauss sum Σ (a/11) ζ^a, the square root of −11 with positive imaginary part.
    pub fn sqrt_m11() -> Self {
        let mut s = zero_slots();
        for a in 1..P {
            s[a] = Integer::from(legendre11(a as i64));
        }
        Self::from_slots(&s, Integer::from(1))
    }

    pub fn numerators(&self) -> &Coords {
        &self.num
    }

    pub fn denominator(&self) -> &Integer {
        &self.den
    }

    pub fn coord(&self, k: usize) -> Rational {
        Rational::from((self.num[k].clone(), self.den.clone()))
    }

    pub fn coords(&self) -> [Rational; DIM] {
        std::array::from_fn(|k| self.coord(k))
    }

    pub fn is_zero(&self) -> bool {
        is_zero_coords(&self.num)
    }

    pub fn is_one(&self) -> bool {
        self.den == 1 && self.num[0] == 1 && self.num[1..].iter().all(|x| x.is_zero())
    }

    pub fn as_rational(&self) -> Option<Rational> {
        if self.num[1..].iter().all(|x| x.is_zero()) {
            Some(self.coord(0))
        } else {
            None
        }
    }

    fn canonicalize(&mut self) {
        if self.den.cmp0() == std::cmp::Ordering::Less {
            self.den = -std::mem::take(&mut self.den);
            for x in self.num.iter_mut() {
                *x = -std::mem::take(x);
            }
        }
        if is_zero_coords(&self.num) {
            self.den = Integer::from(1);
            return;
        }
        let mut g = self.den.clone();
        for x in &self.num {
            if g == 1 {
                break;
            }
            g.gcd_mut(x);
        }
        if g != 1 {
            for x in self.num.iter_mut() {
                x.div_exact_mut(&g);
            }
            self.den.div_exact_mut(&g);
        }
    }

    pub fn scale(&self, r: &Rational) -> Self {
        let num = std::array::from_fn(|k| Integer::from(&self.num[k] * r.numer()));
        Self::from_parts(num, Integer::from(&self.den * r.denom()))
    }

    pub fn scale_int(&self, n: &Integer) -> Self {
        let num = std::array::from_fn(|k| Integer::from(&self.num[k] * n));
        Self::from_parts(num, self.den.clone())
    }

    pub fn galois(&self, g: GaloisAuto) -> Self {
        let d = g.d as usize;
        let mut s = zero_slots();
        for k in 0..DIM {
            s[(d * k) % P] += &self.num[k];
        }
        Self::from_slots(&s, self.den.clone())
    }

    pub fn conj(&self) -> Self {
        self.galois(GaloisAuto::conj())
    }

    /// Product of all ten conjugates (a rational number).
    pub fn norm(&self) -> Rational {
        let p = self.conjugate_product();
        (self * &p).as_rational().expect("norm is rational")
    }

    /// Σ of all ten conjugates.
    pub fn trace(&self) -> Rational {
        let mut acc = CycElem::zero();
        for d in 1..P as i64 {
            acc = &acc + &self.galois(GaloisAuto::new(d).unwrap());
        }
        acc.as_rational().expect("trace is rational")
    }

    fn conjugate_product(&self) -> CycElem {
        let mut p = CycElem::one();
        for d in 2..P as i64 {
            p = &p * &self.galois(GaloisAuto::new(d).unwrap());
        }
        p
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDivision("inverse of zero in Q(ζ)".into()));
        }
        if let Some(r) = self.as_rational() {
            return Ok(CycElem::from_rational(&Rational::from(r.recip_ref())));
        }
        let p = self.conjugate_product();
        let n = (self * &p).as_rational().expect("norm is rational");
        Ok(p.scale(&Rational::from(n.recip_ref())))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut r = CycElem::one();
        let mut b = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                r = &r * &b;
            }
            k >>= 1;
            if k > 0 {
                b = &b * &b;
            }
        }
        r
    }

    pub fn is_real(&self) -> bool {
        self.conj() == *self
    }

    /// Coordinates in the basis 1, ε, …, ε⁴ of Q(ε).
    pub fn eps_coords(&self) -> Result<[Rational; 5]> {
        if !self.is_real() {
            return Err(Error::NotInSubfield);
        }
        let solver = eps_solver();
        let c: [Rational; 5] = std::array::from_fn(|i| {
            let mut acc = Rational::new();
            for (j, &row) in solver.rows.iter().enumerate() {
                acc += Rational::from(&solver.inv[i][j] * &self.coord(row));
            }
            acc
        });
        if CycElem::from_eps_poly(&c) != *self {
            return Err(Error::NotInSubfield);
        }
        Ok(c)
    }

    /// Value under ζ ↦ e^{2πi j/11}.
    pub fn embed(&self, j: u32, bits: u32) -> Complex {
        let mut acc = Complex::new(bits);
        for k in 0..DIM {
            if self.num[k].is_zero() {
                continue;
            }
            let w = unit_root(((j as usize) * k) % P, bits);
            acc += w * Float::with_val(bits, &self.num[k]);
        }
        acc / Float::with_val(bits, &self.den)
    }

    pub fn embed_f64(&self, j: u32) -> num_complex::Complex64 {
        let z = self.embed(j, 64);
        num_complex::Complex64::new(z.real().to_f64(), z.imag().to_f64())
    }

    pub fn to_strings(&self) -> [String; DIM] {
        std::array::from_fn(|k| self.coord(k).to_string())
    }

    pub fn from_strings<S: AsRef<str>>(parts: &[S]) -> Result<Self> {
        if parts.len() != DIM {
            return Err(Error::Parse(format!("expected {DIM} coordinates, got {}", parts.len())));
        }
        let mut c: [Rational; DIM] = std::array::from_fn(|_| Rational::new());
        for (k, p) in parts.iter().enumerate() {
            c[k] = parse_rational(p.as_ref())?;
        }
        Ok(CycElem::from_coords(&c))
    }

    /// Compact text in ε when real, otherwise in ζ.
    pub fn pretty(&self) -> String {
        match self.eps_coords() {
            Ok(c) => poly_string(&c, "ε"),
            Err(_) => poly_string(&self.coords(), "ζ"),
        }
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() || t.len() > 4096 {
        return Err(Error::Parse(format!("bad rational {t:?}")));
    }
    let ok = t.bytes().enumerate().all(|(i, b)| {
        b.is_ascii_digit() || b == b'/' || ((b == b'-' || b == b'+') && (i == 0 || t.as_bytes()[i - 1] == b'/'))
    });
    if !ok {
        return Err(Error::Parse(format!("bad rational {t:?}")));
    }
    let r: Rational = t.parse().map_err(|_| Error::Parse(format!("bad rational {t:?}")))?;
    Ok(r)
}

fn poly_string(c: &[Rational], var: &str) -> String {
    let mut out = String::new();
    for (i, x) in c.iter().enumerate() {
        if x.cmp0() == std::cmp::Ordering::Equal {
            continue;
        }
        let neg = x.cmp0() == std::cmp::Ordering::Less;
        let a = Rational::from(x.abs_ref());
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let unit = a == 1;
        if i == 0 || !unit {
            out.push_str(&a.to_string());
        }
        match i {
            0 => {}
            1 => out.push_str(var),
            _ => out.push_str(&format!("{var}^{i}")),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

pub fn legendre11(a: i64) -> i64 {
    match a.rem_euclid(11) {
        0 => 0,
        1 | 3 | 4 | 5 | 9 => 1,
        _ => -1,
    }
}

fn unit_root(k: usize, bits: u32) -> Complex {
    let mut ang = Float::with_val(bits, rug::float::Constant::Pi);
    ang *= 2 * k as u32;
    ang /= P as u32;
    let (s, c) = ang.sin_cos(Float::new(bits));
    Complex::with_val(bits, (c, s))
}

fn eps_powers(n: usize) -> Vec<CycElem> {
    let e = CycElem::eps();
    let mut out = Vec::with_capacity(n);
    let mut cur = CycElem::one();
    for _ in 0..n {
        out.push(cur.clone());
        cur = &cur * &e;
    }
    out
}

struct EpsSolver {
    rows: [usize; 5],
    inv: [[Rational; 5]; 5],
}

fn eps_solver() -> &'static EpsSolver {
    static S: OnceLock<EpsSolver> = OnceLock::new();
    S.get_or_init(|| {
        let pw = eps_powers(5);
        // pick five coordinate rows on which the ε-power matrix is invertible
        let m: Vec<[Rational; 5]> = (0..DIM).map(|r| std::array::from_fn(|i| pw[i].coord(r))).collect();
        let mut chosen: Vec<usize> = Vec::new();
        let mut basis: Vec<[Rational; 5]> = Vec::new();
        for (r, row) in m.iter().enumerate() {
            let mut v = row.clone();
            for b in &basis {
                let piv = b.iter().position(|x| x.cmp0() != std::cmp::Ordering::Equal).unwrap();
                if v[piv].cmp0() != std::cmp::Ordering::Equal {
                    let f = Rational::from(&v[piv] / &b[piv]);
                    for i in 0..5 {
                        v[i] -= Rational::from(&f * &b[i]);
                    }
                }
            }
            if v.iter().any(|x| x.cmp0() != std::cmp::Ordering::Equal) {
                chosen.push(r);
                basis.push(v);
                if chosen.len() == 5 {
                    break;
                }
            }
        }
        let rows: [usize; 5] = chosen.try_into().expect("ε powers are independent");
        let a: [[Rational; 5]; 5] = std::array::from_fn(|j| m[rows[j]].clone());
        EpsSolver { rows, inv: invert5(&a) }
    })
}

fn invert5(a: &[[Rational; 5]; 5]) -> [[Rational; 5]; 5] {
    // a[j][i] = coord row j of εⁱ; we need c = A⁻¹ x with A[j][i]
    let n = 5;
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|j| {
            let mut row: Vec<Rational> = a[j].to_vec();
            for k in 0..n {
                row.push(Rational::from(if j == k { 1 } else { 0 }));
            }
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| m[r][col].cmp0() != std::cmp::Ordering::Equal).expect("singular");
        m.swap(col, p);
        let pv = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x /= &pv;
        }
        for r in 0..n {
            if r != col && m[r][col].cmp0() != std::cmp::Ordering::Equal {
                let f = m[r][col].clone();
                for k in 0..2 * n {
                    let t = Rational::from(&f * &m[col][k]);
                    m[r][k] -= t;
                }
            }
        }
    }
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][n + j].clone()))
}

impl<'a> Add<&'a CycElem> for &'a CycElem {
    type Output = CycElem;
    fn add(self, o: &CycElem) -> CycElem {
        if self.den == o.den {
            let num = std::array::from_fn(|k| Integer::from(&self.num[k] + &o.num[k]));
            return CycElem::from_parts(num, self.den.clone());
        }
        let den = Integer::from(self.den.lcm_ref(&o.den));
        let fa = Integer::from(&den / &self.den);
        let fb = Integer::from(&den / &o.den);
        let num = std::array::from_fn(|k| {
            let mut v = Integer::from(&self.num[k] * &fa);
            v += &o.num[k] * &fb;
            v
        });
        CycElem::from_parts(num, den)
    }
}

impl<'a> Sub<&'a CycElem> for &'a CycElem {
    type Output = CycElem;
    fn sub(self, o: &CycElem) -> CycElem {
        self + &(-o)
    }
}

impl Neg for &CycElem {
    type Output = CycElem;
    fn neg(self) -> CycElem {
        CycElem { num: std::array::from_fn(|k| Integer::from(-&self.num[k])), den: self.den.clone() }
    }
}

impl<'a> Mul<&'a CycElem> for &'a CycElem {
    type Output = CycElem;
    fn mul(self, o: &CycElem) -> CycElem {
        let mut s = zero_slots();
        mul_acc(&mut s, &self.num, &o.num);
        CycElem::from_slots(&s, Integer::from(&self.den * &o.den))
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr<CycElem> for CycElem {
            type Output = CycElem;
            fn $m(self, o: CycElem) -> CycElem {
                (&self).$m(&o)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl From<i64> for CycElem {
    fn from(n: i64) -> Self {
        CycElem::from_int(n)
    }
}

impl fmt::Debug for CycElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CycElem({})", self.pretty())
    }
}

impl fmt::Display for CycElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.to_strings();
        write!(f, "{}", s.join(" "))
    }
}

impl FromStr for CycElem {
    type Err = Error;
    /// Ten rationals separated by whitespace or commas.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(|c: char| c.is_whitespace() || c == ',').filter(|p| !p.is_empty()).collect();
        CycElem::from_strings(&parts)
    }
}

impl Serialize for CycElem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CycElem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        CycElem::from_strings(&v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn zeta_times_zeta9_is_reduced_zeta10() {
        let p = &CycElem::zeta(1) * &CycElem::zeta(9);
        let expect = CycElem::from_parts(std::array::from_fn(|_| Integer::from(-1)), Integer::from(1));
        assert_eq!(p, expect);
        assert_eq!(&CycElem::zeta(1) * &p, CycElem::one());
    }

    #[test]
    fn eps_squared() {
        let e = CycElem::eps();
        let e2 = &e * &e;
        let expect = &(&CycElem::from_int(2) + &CycElem::zeta(2)) + &CycElem::zeta(9);
        assert_eq!(e2, expect);
        assert_eq!(e2.eps_coords().unwrap(), [q(0, 1), q(0, 1), q(1, 1), q(0, 1), q(0, 1)]);
        // 2 + ζ² + ζ⁹ expressed back in ε: ζ² + ζ⁹ = ε² − 2
        let z = &CycElem::zeta(2) + &CycElem::zeta(9);
        assert_eq!(z.eps_coords().unwrap(), [q(-2, 1), q(0, 1), q(1, 1), q(0, 1), q(0, 1)]);
    }

    #[test]
    fn inverse_of_one_minus_zeta() {
        assert_eq!(CycElem::one().inv().unwrap(), CycElem::one());
        assert_eq!(CycElem::zeta(1).inv().unwrap(), CycElem::zeta(10));
        let a = &CycElem::one() - &CycElem::zeta(1);
        let b = a.inv().unwrap();
        assert!((&a * &b).is_one());
        // (1 − ζ)⁻¹ = −(1/11) Σ_{k=1}^{10} k ζ^k
        let mut s = zero_slots();
        for k in 1..11 {
            s[k] = Integer::from(-(k as i64));
        }
        assert_eq!(b, CycElem::from_slots(&s, Integer::from(11)));
        assert!(CycElem::zero().inv().is_err());
    }

    #[test]
    fn sigma_on_eps_and_sqrt() {
        let e = CycElem::eps();
        let s = GaloisAuto::sigma();
        assert_eq!(e.galois(s), &(&e * &e) - &CycElem::from_int(2));
        let r = CycElem::sqrt_m11();
        assert_eq!(&r * &r, CycElem::from_int(-11));
        assert_eq!(r.galois(s), r);
        assert_eq!(r.conj(), -&r);
        assert!(r.eps_coords().is_err());
        assert!(CycElem::zeta(1).eps_coords().is_err());
        assert!(r.embed_f64(1).im > 3.3);
    }

    #[test]
    fn sqrt_m11_coordinates() {
        // Σ χ(a)ζ^a with ζ¹⁰ folded: subtract χ(10) = −1 from every coordinate
        let chi: Vec<i64> = (1..=10).map(legendre11).collect();
        assert_eq!(chi, vec![1, -1, 1, 1, 1, -1, -1, -1, 1, -1]);
        let expect: Vec<i64> = (0..10).map(|k| if k == 0 { 1 } else { chi[k - 1] + 1 }).collect();
        let got: Vec<i64> = CycElem::sqrt_m11().numerators().iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn minimal_polynomial_of_eps() {
        let e = CycElem::eps();
        let v = &(&(&(&(&e.pow(5) + &e.pow(4)) - &e.pow(3).scale_int(&Integer::from(4)))
            - &e.pow(2).scale_int(&Integer::from(3)))
            + &e.scale_int(&Integer::from(3)))
            + &CycElem::one();
        assert!(v.is_zero());
        assert_eq!(CycElem::zeta(1).trace(), -1);
        assert_eq!(CycElem::eps().norm(), 1);
    }

    #[test]
    fn string_roundtrip() {
        let a = CycElem::from_coords(&std::array::from_fn(|k| q(k as i64 - 3, 7)));
        let b: CycElem = a.to_string().parse().unwrap();
        assert_eq!(a, b);
        assert!("1 2 3".parse::<CycElem>().is_err());
        assert!("1 2 3 4 5 6 7 8 9 x".parse::<CycElem>().is_err());
        assert!("1 2 3 4 5 6 7 8 9 1/0".parse::<CycElem>().is_err());
    }
}
