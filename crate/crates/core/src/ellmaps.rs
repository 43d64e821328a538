//! Weierstrass models, the group law over exact and numeric fields, the explicit maps
//! between the curves attached to X_ns(11), and AGM period lattices.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

use crate::cyclo::CycElem;
use crate::error::{Error, Result};
use crate::qexp::QSeries;

/// Minimal field interface shared by exact numbers, q-series and multiprecision complexes.
pub trait Field: Clone {
    /// The rational `r` in the same domain (and precision) as `self`.
    fn rational_like(&self, r: &Rational) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn inv(&self) -> Result<Self>;
    fn is_zero(&self) -> bool;

    fn int_like(&self, n: i64) -> Self {
        self.rational_like(&Rational::from(n))
    }

    fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    fn neg(&self) -> Self {
        self.int_like(0).sub(self)
    }

    fn square(&self) -> Self {
        self.mul(self)
    }

    fn powu(&self, k: u32) -> Self {
        let mut r = self.int_like(1);
        let mut b = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                r = r.mul(&b);
            }
            k >>= 1;
            if k > 0 {
                b = b.square();
            }
        }
        r
    }

    fn scale(&self, r: &Rational) -> Self {
        self.mul(&self.rational_like(r))
    }

    fn add_rational(&self, r: &Rational) -> Self {
        self.add(&self.rational_like(r))
    }

    /// Σ cᵢ selfⁱ with integer coefficients, lowest degree first.
    fn poly(&self, c: &[i64]) -> Self {
        let mut acc = self.int_like(0);
        for &a in c.iter().rev() {
            acc = acc.mul(self).add(&self.int_like(a));
        }
        acc
    }
}

impl Field for Rational {
    fn rational_like(&self, r: &Rational) -> Self {
        r.clone()
    }
    fn add(&self, o: &Self) -> Self {
        Rational::from(self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        Rational::from(self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Rational::from(self * o)
    }
    fn inv(&self) -> Result<Self> {
        if self.cmp0() == std::cmp::Ordering::Equal {
            return Err(Error::ZeroDivision("rational zero".into()));
        }
        Ok(Rational::from(self.recip_ref()))
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == std::cmp::Ordering::Equal
    }
}

impl Field for CycElem {
    fn rational_like(&self, r: &Rational) -> Self {
        CycElem::from_rational(r)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn inv(&self) -> Result<Self> {
        CycElem::inv(self)
    }
    fn is_zero(&self) -> bool {
        CycElem::is_zero(self)
    }
}

impl Field for QSeries {
    fn rational_like(&self, r: &Rational) -> Self {
        let top = self.known_to132();
        let len = if top <= 0 { 1 } else { ((top + 131) / 132) as usize };
        QSeries::constant(&CycElem::from_rational(r), len)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self.mul_series(o)
    }
    fn inv(&self) -> Result<Self> {
        QSeries::inv(self)
    }
    fn is_zero(&self) -> bool {
        QSeries::is_zero(self)
    }
    fn scale(&self, r: &Rational) -> Self {
        self.scale_rational(r)
    }
    fn add_rational(&self, r: &Rational) -> Self {
        self.add_const(&CycElem::from_rational(r))
    }
    fn poly(&self, c: &[i64]) -> Self {
        self.eval_int_poly(c)
    }
}

impl Field for Complex {
    fn rational_like(&self, r: &Rational) -> Self {
        Complex::with_val(self.prec(), r)
    }
    fn add(&self, o: &Self) -> Self {
        Complex::with_val(self.prec(), self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        Complex::with_val(self.prec(), self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Complex::with_val(self.prec(), self * o)
    }
    fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDivision("complex zero".into()));
        }
        Ok(Complex::with_val(self.prec(), self.recip_ref()))
    }
    fn is_zero(&self) -> bool {
        self.real().is_zero() && self.imag().is_zero()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Point<F> {
    Infinity,
    Affine(F, F),
}

impl<F: Field> Point<F> {
    pub fn xy(&self) -> Option<(&F, &F)> {
        match self {
            Point::Infinity => None,
            Point::Affine(x, y) => Some((x, y)),
        }
    }
}

/// y² + a1xy + a3y = x³ + a2x² + a4x + a6
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeierstrassModel {
    pub a: [Rational; 5],
}

impl WeierstrassModel {
    pub fn new(a1: i64, a2: i64, a3: i64, a4: i64, a6: i64) -> Result<Self> {
        let m = WeierstrassModel { a: [a1, a2, a3, a4, a6].map(Rational::from) };
        if m.discriminant() == 0 {
            return Err(Error::InvalidInput("singular Weierstrass model".into()));
        }
        Ok(m)
    }

    pub fn from_rationals(a: [Rational; 5]) -> Result<Self> {
        let m = WeierstrassModel { a };
        if m.discriminant() == 0 {
            return Err(Error::InvalidInput("singular Weierstrass model".into()));
        }
        Ok(m)
    }

    pub fn e_a() -> Self {
        Self::new(1, 1, 1, -30, -76).unwrap()
    }

    /// X⁺_ns(11).
    pub fn e_b() -> Self {
        Self::new(0, -1, 1, -7, 10).unwrap()
    }

    pub fn e_c() -> Self {
        Self::new(1, 1, 0, -2, -7).unwrap()
    }

    pub fn e_d() -> Self {
        Self::new(0, -1, 1, -40, -221).unwrap()
    }

    fn a1(&self) -> &Rational {
        &self.a[0]
    }
    fn a2(&self) -> &Rational {
        &self.a[1]
    }
    fn a3(&self) -> &Rational {
        &self.a[2]
    }
    fn a4(&self) -> &Rational {
        &self.a[3]
    }
    fn a6(&self) -> &Rational {
        &self.a[4]
    }

    pub fn b_invariants(&self) -> [Rational; 4] {
        let (a1, a2, a3, a4, a6) = (self.a1(), self.a2(), self.a3(), self.a4(), self.a6());
        let b2 = Rational::from(a1 * a1) + Rational::from(4 * a2);
        let b4 = Rational::from(2 * a4) + Rational::from(a1 * a3);
        let b6 = Rational::from(a3 * a3) + Rational::from(4 * a6);
        let b8 = Rational::from(a1 * a1) * a6 + Rational::from(4 * a2) * a6 - Rational::from(a1 * a3) * a4
            + Rational::from(a2 * a3) * a3
            - Rational::from(a4 * a4);
        [b2, b4, b6, b8]
    }

    pub fn c4(&self) -> Rational {
        let [b2, b4, _, _] = self.b_invariants();
        Rational::from(&b2 * &b2) - 24 * b4
    }

    pub fn discriminant(&self) -> Rational {
        let [b2, b4, b6, b8] = self.b_invariants();
        -Rational::from(&b2 * &b2) * &b8 - 8 * b4.clone().pow(3) - 27 * Rational::from(&b6 * &b6)
            + 9 * b2 * b4 * b6
    }

    pub fn j_invariant(&self) -> Rational {
        self.c4().pow(3) / self.discriminant()
    }

    /// y² + a1xy + a3y − (x³ + a2x² + a4x + a6)
    pub fn residual<F: Field>(&self, x: &F, y: &F) -> F {
        let lhs = y.square().add(&x.mul(y).scale(self.a1())).add(&y.scale(self.a3()));
        let rhs = x.powu(3).add(&x.square().scale(self.a2())).add(&x.scale(self.a4())).add_rational(self.a6());
        lhs.sub(&rhs)
    }

    pub fn contains<F: Field>(&self, p: &Point<F>) -> bool {
        match p {
            Point::Infinity => true,
            Point::Affine(x, y) => self.residual(x, y).is_zero(),
        }
    }

    pub fn neg<F: Field>(&self, p: &Point<F>) -> Point<F> {
        match p {
            Point::Infinity => Point::Infinity,
            Point::Affine(x, y) => {
                let ny = y.neg().sub(&x.scale(self.a1())).add_rational(&Rational::from(-self.a3()));
                Point::Affine(x.clone(), ny)
            }
        }
    }

    /// Chord-tangent addition.
    pub fn add<F: Field>(&self, p: &Point<F>, q: &Point<F>) -> Result<Point<F>> {
        let (x1, y1) = match p {
            Point::Infinity => return Ok(q.clone()),
            Point::Affine(x, y) => (x, y),
        };
        let (x2, y2) = match q {
            Point::Infinity => return Ok(p.clone()),
            Point::Affine(x, y) => (x, y),
        };
        let dx = x2.sub(x1);
        let lambda;
        let nu;
        if dx.is_zero() {
            let Point::Affine(_, ny1) = self.neg(p) else { unreachable!() };
            if y2.sub(&ny1).is_zero() {
                return Ok(Point::Infinity);
            }
            // tangent
            let num = x1
                .square()
                .scale(&Rational::from(3))
                .add(&x1.scale(&Rational::from(2 * self.a2())))
                .add_rational(self.a4())
                .sub(&y1.scale(self.a1()));
            let den = y1.scale(&Rational::from(2)).add(&x1.scale(self.a1())).add_rational(self.a3());
            lambda = num.div(&den)?;
            let num2 = x1
                .powu(3)
                .neg()
                .add(&x1.scale(self.a4()))
                .add_rational(&Rational::from(2 * self.a6()))
                .sub(&y1.scale(self.a3()));
            nu = num2.div(&den)?;
        } else {
            lambda = y2.sub(y1).div(&dx)?;
            nu = y1.mul(x2).sub(&y2.mul(x1)).div(&dx)?;
        }
        let x3 =
            lambda.square().add(&lambda.scale(self.a1())).add_rational(&Rational::from(-self.a2())).sub(x1).sub(x2);
        let y3 = lambda.add_rational(self.a1()).mul(&x3).neg().sub(&nu).add_rational(&Rational::from(-self.a3()));
        Ok(Point::Affine(x3, y3))
    }

    pub fn mul_int<F: Field>(&self, p: &Point<F>, n: i64) -> Result<Point<F>> {
        let mut r = Point::Infinity;
        let mut b = if n < 0 { self.neg(p) } else { p.clone() };
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                r = self.add(&r, &b)?;
            }
            k >>= 1;
            if k > 0 {
                b = self.add(&b, &b)?;
            }
        }
        Ok(r)
    }

    /// Local expansion at O in s = −x/y: returns (x(s), y(s)) with `len` terms of w.
    pub fn formal_point(&self, len: usize) -> (QSeries, QSeries) {
        // w = s³ + a1 s w + a2 s² w + a3 w² + a4 s w² + a6 w³, solved by fixed-point iteration
        let r = |q: &Rational| CycElem::from_rational(q);
        let s = QSeries::monomial(1, &CycElem::one(), len);
        let mut w = QSeries::monomial(3, &CycElem::one(), len);
        for _ in 0..len {
            let w2 = w.square();
            let w3 = w2.mul_series(&w);
            let next = s
                .pow(3)
                .try_add(&s.mul_series(&w).scale(&r(self.a1())))
                .and_then(|t| t.try_add(&s.square().mul_series(&w).scale(&r(self.a2()))))
                .and_then(|t| t.try_add(&w2.scale(&r(self.a3()))))
                .and_then(|t| t.try_add(&s.mul_series(&w2).scale(&r(self.a4()))))
                .and_then(|t| t.try_add(&w3.scale(&r(self.a6()))))
                .expect("integer exponents");
            let next = next.truncate_abs(len as i64 + 3);
            if next == w {
                break;
            }
            w = next;
        }
        let winv = w.inv().expect("w ≠ 0");
        let x = s.mul_series(&winv);
        let y = -&winv;
        (x, y)
    }
}

/// Translation by P = (4, −6) on X⁺_ns(11).
pub fn translate_by_p<F: Field>(x: &F, y: &F) -> Result<(F, F)> {
    let d = x.add_rational(&Rational::from(-4));
    if d.is_zero() {
        return Err(Error::ZeroDivision("translation by P has a pole at x = 4".into()));
    }
    let di = d.inv()?;
    let xn = x.poly(&[-2, 1, 4]).add(&y.scale(&Rational::from(11))).mul(&di.square());
    let yn = x.poly(&[-34, 17, 2]).add(&y.scale(&Rational::from(11))).mul(&x.poly(&[1, -3])).mul(&di.powu(3));
    Ok((xn, yn))
}

/// The j-map X⁺_ns(11) → X(1) as a rational function of (x, y).
pub fn j_map<F: Field>(x: &F, y: &F) -> Result<F> {
    let r = |n: i64| Rational::from(n);
    let f1 = x.poly(&[-44, 16, 7]).add(&x.poly(&[18, 1]).mul(y));
    let f2 = x.poly(&[-11, -24, 1, 4]).sub(&x.poly(&[5, 3, 1]).mul(y));
    let f3 = y
        .add_rational(&r(-5))
        .mul(&x.poly(&[-6, 3, 1]))
        .mul(&x.poly(&[-14, -3, 3]).sub(&x.poly(&[3, 2]).mul(y)))
        .scale(&r(11));
    let f4 = x.poly(&[-62, -41, 28, 12]).add(&x.poly(&[37, 20, 3]).mul(y));
    let f5 = x.poly(&[22, 1, 4, 1]).sub(&x.poly(&[-1, 3]).mul(y));
    let d1 = x.poly(&[2, 1]);
    let d2 = x.poly(&[-4, 1]);
    let d3 = x.poly(&[-23, 37, 53, -16, -9, 1]);
    if d1.is_zero() || d2.is_zero() || d3.is_zero() {
        return Err(Error::ZeroDivision("pole of the j-map".into()));
    }
    let num = f1.square().mul(&f2.powu(11)).mul(&f3.powu(3)).mul(&f4.mul(&f5).powu(3));
    let den = d1.powu(12).mul(&d2.powu(14)).mul(&d3.powu(11));
    num.div(&den)
}

/// j(q) = E₄³/Δ as integer coefficients of q^{-1}, q^0, …, q^{len-2}.
pub fn j_oracle(len: usize) -> Vec<Integer> {
    let n = len + 1;
    let mut e4 = vec![Integer::new(); n];
    e4[0] = Integer::from(1);
    for (k, c) in e4.iter_mut().enumerate().skip(1) {
        let s: u64 = (1..=k as u64).filter(|d| (k as u64).is_multiple_of(*d)).map(|d| d * d * d).sum();
        *c = Integer::from(240) * s;
    }
    // Δ/q = Π (1 − qᵏ)²⁴
    let mut d = vec![Integer::new(); n];
    d[0] = Integer::from(1);
    for k in 1..n {
        for _ in 0..24 {
            for i in (k..n).rev() {
                let t = d[i - k].clone();
                d[i] -= t;
            }
        }
    }
    let conv = |a: &[Integer], b: &[Integer]| {
        let mut o = vec![Integer::new(); n];
        for i in 0..n {
            for j in 0..n - i {
                o[i + j] += Integer::from(&a[i] * &b[j]);
            }
        }
        o
    };
    let e43 = conv(&conv(&e4, &e4), &e4);
    // divide by Δ/q, leading 1
    let mut out = vec![Integer::new(); n];
    for i in 0..n {
        let mut acc = e43[i].clone();
        for k in 1..=i {
            acc -= Integer::from(&d[k] * &out[i - k]);
        }
        out[i] = acc;
    }
    out.truncate(len);
    out
}

/// φ_B(x, y, t) = (x, y)
pub fn phi_b<F: Field>(x: &F, y: &F, _t: &F) -> (F, F) {
    (x.clone(), y.clone())
}

/// φ_X(x, y, t) = (x, (2y + 1) t)
pub fn phi_x<F: Field>(x: &F, y: &F, t: &F) -> (F, F) {
    (x.clone(), y.scale(&Rational::from(2)).add_rational(&Rational::from(1)).mul(t))
}

/// φ_C(x, y, t) = (−x − 1, (t + x + 1)/2)
pub fn phi_c<F: Field>(x: &F, _y: &F, t: &F) -> (F, F) {
    let nx = x.neg().add_rational(&Rational::from(-1));
    let ny = t.add(x).add_rational(&Rational::from(1)).scale(&Rational::from((1, 2)));
    (nx, ny)
}

/// π_A : genus-2 curve → E_A
pub fn pi_a<F: Field>(x: &F, y: &F) -> Result<(F, F)> {
    let d = x.poly(&[41, -28, -4, 4]);
    let di = d.inv()?;
    let nx = x.poly(&[-147, 102, 13, -13]).mul(&di);
    let ny = x
        .poly(&[6, -10, 19, -8])
        .mul(y)
        .mul(&di.square())
        .scale(&Rational::from((1, 2)))
        .add(&x.poly(&[106, -74, -9, 9]).mul(&di).scale(&Rational::from((1, 2))));
    Ok((nx, ny))
}

/// π_D : genus-2 curve → E_D
pub fn pi_d<F: Field>(x: &F, y: &F) -> Result<(F, F)> {
    let d = x.poly(&[19, -6, 7, 4]);
    let di = d.inv()?;
    let nx = x.poly(&[-749, -101, 138, 27]).mul(&di);
    let ny = x
        .poly(&[-53, -29, -1, 1])
        .mul(y)
        .mul(&di.square())
        .scale(&Rational::from((121, 2)))
        .add_rational(&Rational::from((-1, 2)));
    Ok((nx, ny))
}

/// y² + (4x³ − 4x² − 28x + 41)(4x³ + 7x² − 6x + 19)
pub fn genus2_residual<F: Field>(x: &F, y: &F) -> F {
    y.square().add(&x.poly(&[41, -28, -4, 4]).mul(&x.poly(&[19, -6, 7, 4])))
}

/// t² + 4x³ + 7x² − 6x + 19
pub fn xns_residual<F: Field>(x: &F, t: &F) -> F {
    t.square().add(&x.poly(&[19, -6, 7, 4]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapName {
    PhiB,
    PhiX,
    PhiC,
    PiA,
    PiD,
}

impl std::str::FromStr for MapName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "phi_b" => MapName::PhiB,
            "phi_x" => MapName::PhiX,
            "phi_c" => MapName::PhiC,
            "pi_a" => MapName::PiA,
            "pi_d" => MapName::PiD,
            _ => return Err(Error::Parse(format!("unknown map {s:?}"))),
        })
    }
}

/// Applies a named map; φ maps take (x, y, t), π maps take (x, y) and ignore the third entry.
pub fn apply_map<F: Field>(name: MapName, p: &[F; 3]) -> Result<(F, F)> {
    let [x, y, t] = p;
    match name {
        MapName::PhiB => Ok(phi_b(x, y, t)),
        MapName::PhiX => Ok(phi_x(x, y, t)),
        MapName::PhiC => Ok(phi_c(x, y, t)),
        MapName::PiA => pi_a(x, y),
        MapName::PiD => pi_d(x, y),
    }
}

fn agm(a: &Float, b: &Float) -> Float {
    let prec = a.prec();
    let mut a = a.clone();
    let mut b = b.clone();
    let eps = Float::with_val(prec, Float::u_exp(1, -(prec as i32) + 4));
    for _ in 0..200 {
        let na = Float::with_val(prec, &a + &b) / 2u32;
        let nb = Float::with_val(prec, &a * &b).sqrt();
        let diff = Float::with_val(prec, &na - &nb).abs();
        a = na;
        b = nb;
        if diff <= Float::with_val(prec, &a * &eps) {
            break;
        }
    }
    a
}

/// Real roots of 4x³ + b2x² + 2b4x + b6 by Newton refinement of a bracketed bisection.
fn cubic_real_roots(b: &[Rational; 4], prec: u32) -> Vec<Float> {
    let c = [
        Float::with_val(prec, &b[2]),
        Float::with_val(prec, Rational::from(2 * &b[1])),
        Float::with_val(prec, &b[0]),
        Float::with_val(prec, 4),
    ];
    let f = |x: &Float| -> Float {
        let mut acc = Float::with_val(prec, 0);
        for k in (0..4).rev() {
            acc = acc * x + &c[k];
        }
        acc
    };
    let df = |x: &Float| -> Float {
        let mut acc = Float::with_val(prec, 0);
        for k in (1..4).rev() {
            acc = acc * x + Float::with_val(prec, &c[k] * k as u32);
        }
        acc
    };
    // bracket: Cauchy bound
    let bound = 1.0 + [c[0].to_f64(), c[1].to_f64(), c[2].to_f64()].iter().map(|v| (v / 4.0).abs()).fold(0.0, f64::max);
    let steps = 20000;
    let mut roots = Vec::new();
    let mut prev_x = -bound;
    let mut prev_f = f(&Float::with_val(prec, prev_x)).to_f64();
    for i in 1..=steps {
        let xv = -bound + 2.0 * bound * i as f64 / steps as f64;
        let fv = f(&Float::with_val(prec, xv)).to_f64();
        if prev_f == 0.0 || prev_f.signum() != fv.signum() {
            let mut lo = Float::with_val(prec, prev_x);
            let mut hi = Float::with_val(prec, xv);
            let flo_neg = f(&lo).is_sign_negative();
            for _ in 0..80 {
                let mid = Float::with_val(prec, &lo + &hi) / 2u32;
                if f(&mid).is_sign_negative() == flo_neg {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut x = lo;
            for _ in 0..(prec / 16 + 8) {
                let d = df(&x);
                if d.is_zero() {
                    break;
                }
                x -= f(&x) / d;
            }
            roots.push(x);
        }
        prev_x = xv;
        prev_f = fv;
    }
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    roots.dedup_by(|a, b| Float::with_val(prec, &*a - &*b).abs().to_f64() < 1e-20);
    roots
}

/// Z-basis (ω₁, ω₂) of the period lattice of dx/(2y + a1x + a3), with ω₁ real.
pub fn agm_lattice(model: &WeierstrassModel, prec: u32) -> Result<(Complex, Complex)> {
    let disc = model.discriminant();
    if disc == 0 {
        return Err(Error::InvalidInput("singular model".into()));
    }
    let b = model.b_invariants();
    let pi = Float::with_val(prec, Constant::Pi);
    let roots = cubic_real_roots(&b, prec);
    if disc < 0 {
        let e1 = roots.first().ok_or_else(|| Error::Numeric("no real root".into()))?.clone();
        let b2 = Float::with_val(prec, &b[0]);
        let b4 = Float::with_val(prec, &b[1]);
        let a = Float::with_val(prec, 3 * &e1) + Float::with_val(prec, &b2 / 4u32);
        let bb = (Float::with_val(prec, 3 * Float::with_val(prec, &e1 * &e1))
            + Float::with_val(prec, &b2 * &e1) / 2u32
            + Float::with_val(prec, &b4 / 2u32))
        .sqrt();
        let two_sqrt_b = Float::with_val(prec, bb.clone().sqrt() * 2u32);
        let w1 = Float::with_val(prec, 2u32 * &pi) / agm(&two_sqrt_b, &(Float::with_val(prec, 2u32 * &bb) + &a).sqrt());
        let w2i = Float::with_val(prec, &pi) / agm(&two_sqrt_b, &(Float::with_val(prec, 2u32 * &bb) - &a).sqrt());
        let w2 = Complex::with_val(prec, (Float::with_val(prec, -&w1) / 2u32, w2i));
        Ok((Complex::with_val(prec, (w1, 0)), w2))
    } else {
        if roots.len() != 3 {
            return Err(Error::Numeric(format!("expected three real roots, found {}", roots.len())));
        }
        let (e1, e2, e3) = (&roots[0], &roots[1], &roots[2]);
        let s13 = Float::with_val(prec, e1 - e3).sqrt();
        let s12 = Float::with_val(prec, e1 - e2).sqrt();
        let s23 = Float::with_val(prec, e2 - e3).sqrt();
        let w1 = Float::with_val(prec, &pi) / agm(&s13, &s12);
        let w2 = Float::with_val(prec, &pi) / agm(&s13, &s23);
        Ok((Complex::with_val(prec, (w1, 0)), Complex::with_val(prec, (0, w2))))
    }
}

/// f64 view of an AGM lattice.
pub fn agm_lattice_f64(model: &WeierstrassModel) -> Result<(num_complex::Complex64, num_complex::Complex64)> {
    let (a, b) = agm_lattice(model, 128)?;
    let c = |z: &Complex| num_complex::Complex64::new(z.real().to_f64(), z.imag().to_f64());
    Ok((c(&a), c(&b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn discriminants() {
        assert_eq!(WeierstrassModel::e_a().discriminant(), -121);
        assert_eq!(WeierstrassModel::e_b().discriminant(), -1331);
        assert_eq!(WeierstrassModel::e_c().discriminant(), -14641);
        assert_eq!(WeierstrassModel::e_d().discriminant(), -19487171);
        assert!(WeierstrassModel::new(0, 0, 0, 0, 0).is_err());
    }

    #[test]
    fn doubling_p_matches_implicit_slope() {
        let e = WeierstrassModel::e_b();
        let p = Point::Affine(q(4), q(-6));
        assert!(e.contains(&p));
        // slope from implicit differentiation: (3x² − 2x − 7)/(2y + 1)
        let lam = Rational::from((3 * 16 - 8 - 7, -11));
        let x3 = Rational::from(&lam * &lam) + 1 - 8;
        let y3 = -(&lam * (Rational::from(&x3 - 4))) + 6 - 1;
        let r = e.add(&p, &p).unwrap();
        assert_eq!(r, Point::Affine(x3, y3));
        assert!(e.contains(&r));
    }

    #[test]
    fn inverse_pairs_and_identity() {
        let e = WeierstrassModel::e_b();
        let p = Point::Affine(q(4), q(-6));
        assert_eq!(e.add(&p, &e.neg(&p)).unwrap(), Point::Infinity);
        assert_eq!(e.add(&p, &Point::Infinity).unwrap(), p);
        assert_eq!(e.add(&Point::Infinity, &p).unwrap(), p);
    }

    #[test]
    fn translation_matches_group_law() {
        let e = WeierstrassModel::e_b();
        let p = Point::Affine(q(4), q(-6));
        for n in [2, 3, -2, 5] {
            let r = e.mul_int(&p, n).unwrap();
            let Point::Affine(x, y) = &r else { panic!() };
            let t = translate_by_p(x, y).unwrap();
            assert_eq!(Point::Affine(t.0, t.1), e.add(&r, &p).unwrap());
        }
        assert!(translate_by_p(&q(4), &q(-6)).is_err());
    }

    #[test]
    fn j_oracle_prefix() {
        let j = j_oracle(4);
        assert_eq!(j[0], 1);
        assert_eq!(j[1], 744);
        assert_eq!(j[2], 196884);
        assert_eq!(j[3], 21493760);
    }

    #[test]
    fn j_at_origin_and_p() {
        let e = WeierstrassModel::e_b();
        let (x, y) = e.formal_point(120);
        assert!(e.residual(&x, &y).is_zero());
        let j0 = j_map(&x, &y).unwrap();
        assert_eq!(j0.lead(), 0);
        assert_eq!(j0.coeff(0), CycElem::from_int(287496));
        let (xp, yp) = translate_by_p(&x, &y).unwrap();
        let jp = j_map(&xp, &yp).unwrap();
        assert_eq!(jp.lead(), 0);
        assert_eq!(jp.coeff(0), CycElem::from_int(-12288000));
    }

    fn period_quadrature(model: &WeierstrassModel) -> f64 {
        // 2 ∫_{e1}^∞ dx / sqrt(4x³ + b2x² + 2b4x + b6), with x = e1 + t², t = tan θ
        let b = model.b_invariants();
        let roots = cubic_real_roots(&b, 128);
        let e1 = roots[0].to_f64();
        let (b2, b4, b6) = (b[0].to_f64(), b[1].to_f64(), b[2].to_f64());
        let f = |x: f64| 4.0 * x * x * x + b2 * x * x + 2.0 * b4 * x + b6;
        // f(e1 + t²) = t² g(t²) with g the quotient quadratic
        let g = |t: f64| {
            let x = e1 + t * t;
            if t.abs() < 1e-9 {
                (12.0 * e1 * e1 + 2.0 * b2 * e1 + 2.0 * b4).sqrt()
            } else {
                (f(x) / (t * t)).sqrt()
            }
        };
        let n = 200000;
        let h = std::f64::consts::FRAC_PI_2 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let th = (i as f64 + 0.5) * h;
            let t = th.tan();
            let dt = 1.0 / (th.cos() * th.cos());
            s += 2.0 * dt / g(t) * h;
        }
        2.0 * s
    }

    #[test]
    fn agm_real_period_matches_quadrature() {
        for m in [WeierstrassModel::e_a(), WeierstrassModel::e_b(), WeierstrassModel::new(0, 0, 0, -1, 0).unwrap()] {
            let (w1, w2) = agm_lattice_f64(&m).unwrap();
            let oracle = period_quadrature(&m);
            assert!((w1.re - oracle).abs() < 1e-6 * oracle, "{} vs {}", w1.re, oracle);
            assert!(w2.im.abs() > 1e-3);
        }
    }

    #[test]
    fn agm_scales_under_change_of_model() {
        // x ↦ u²x, y ↦ u³y multiplies aᵢ by uⁱ and divides the lattice by u
        let e = WeierstrassModel::e_c();
        let u = 2i64;
        let a = &e.a;
        let scaled = WeierstrassModel::from_rationals([
            Rational::from(&a[0] * u),
            Rational::from(&a[1] * u.pow(2)),
            Rational::from(&a[2] * u.pow(3)),
            Rational::from(&a[3] * u.pow(4)),
            Rational::from(&a[4] * u.pow(6)),
        ])
        .unwrap();
        let (w1, w2) = agm_lattice_f64(&e).unwrap();
        let (v1, v2) = agm_lattice_f64(&scaled).unwrap();
        assert!((w1 / 2.0 - v1).norm() < 1e-12);
        assert!((w2 / 2.0 - v2).norm() < 1e-12);
    }

    #[test]
    fn complex_translation_spot_check() {
        let e = WeierstrassModel::e_b();
        let prec = 128;
        let x = Complex::with_val(prec, (1.25, 0.75));
        // solve y² + y = f(x) for y
        let fx = Field::poly(&x, &[10, -7, -1, 1]);
        let disc = Complex::with_val(prec, 1 + 4 * fx).sqrt();
        let y = Complex::with_val(prec, (disc - 1u32) / 2u32);
        let p = Point::Affine(x.clone(), y.clone());
        let pp = Point::Affine(Complex::with_val(prec, 4), Complex::with_val(prec, -6));
        let Point::Affine(sx, sy) = e.add(&p, &pp).unwrap() else { panic!() };
        let (tx, ty) = translate_by_p(&x, &y).unwrap();
        let err = Complex::with_val(prec, &sx - &tx).abs().real().to_f64()
            + Complex::with_val(prec, &sy - &ty).abs().real().to_f64();
        assert!(err < 1e-30);
    }
}
