//! Truncated q_*-expansions with rational leading exponent and Q(ζ) coefficients.
//!
//! A series is `q_*^lead · Σ_{n < len} (c_n / den) q_*^n`, known modulo
//! `q_*^(lead + len)`. Exponents are stored scaled by 132, the common denominator of
//! all Siegel prefactors. A series whose retained coefficients all vanish is the zero
//! series; it keeps `lead + len` as the exponent up to which it is known to vanish.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::{Integer, Rational};

use crate::cyclo::{fold, is_zero_coords, mul_acc, zero_slots, Coords, CycElem, GaloisAuto, DIM, P};
use crate::error::{Error, Result};

pub const LEAD_DEN: i64 = 132;

#[derive(Clone, PartialEq, Eq)]
pub struct QSeries {
    lead: i64,
    den: Integer,
    c: Vec<Coords>,
}

fn lead_to_rational(l: i64) -> Rational {
    Rational::from((l, LEAD_DEN))
}

fn rational_to_lead(r: &Rational) -> Result<i64> {
    let scaled = Rational::from(r * LEAD_DEN);
    if *scaled.denom() != 1 {
        return Err(Error::InvalidInput(format!("exponent {r} has denominator not dividing 132")));
    }
    scaled.numer().to_i64().ok_or_else(|| Error::InvalidInput("exponent out of range".into()))
}

impl QSeries {
    /// Builds from integer numerators over `den`, exponent `lead132/132`.
    pub fn from_parts(lead132: i64, c: Vec<Coords>, den: Integer) -> Self {
        let mut s = QSeries { lead: lead132, den, c };
        s.reduce();
        s
    }

    pub fn from_coeffs(lead: &Rational, coeffs: &[CycElem]) -> Result<Self> {
        let l = rational_to_lead(lead)?;
        let mut den = Integer::from(1);
        for x in coeffs {
            den.lcm_mut(x.denominator());
        }
        let c = coeffs
            .iter()
            .map(|x| {
                let f = Integer::from(&den / x.denominator());
                std::array::from_fn(|k| Integer::from(&x.numerators()[k] * &f))
            })
            .collect();
        Ok(Self::from_parts(l, c, den))
    }

    /// Zero series known to vanish below `q_*^upto`.
    pub fn zero(upto: i64) -> Self {
        QSeries { lead: upto * LEAD_DEN, den: Integer::from(1), c: Vec::new() }
    }

    pub fn constant(a: &CycElem, len: usize) -> Self {
        Self::monomial(0, a, len)
    }

    pub fn one(len: usize) -> Self {
        Self::constant(&CycElem::one(), len)
    }

    /// a · q_*^exp with `len` known terms.
    pub fn monomial(exp: i64, a: &CycElem, len: usize) -> Self {
        let mut c = vec![crate::cyclo::zero_coords(); len];
        if len > 0 {
            c[0] = a.numerators().clone();
        }
        Self::from_parts(exp * LEAD_DEN, c, a.denominator().clone())
    }

    pub fn lead(&self) -> Rational {
        lead_to_rational(self.lead)
    }

    pub fn lead132(&self) -> i64 {
        self.lead
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Exponent (×132) below which the series is known.
    pub fn known_to132(&self) -> i64 {
        self.lead + LEAD_DEN * self.c.len() as i64
    }

    pub fn known_to(&self) -> Rational {
        lead_to_rational(self.known_to132())
    }

    pub fn denominator(&self) -> &Integer {
        &self.den
    }

    pub fn numerators(&self) -> &[Coords] {
        &self.c
    }

    pub fn coeff(&self, n: usize) -> CycElem {
        CycElem::from_parts(self.c[n].clone(), self.den.clone())
    }

    pub fn coeffs(&self) -> Vec<CycElem> {
        (0..self.len()).map(|n| self.coeff(n)).collect()
    }

    /// Coefficient of q_*^e; `None` when e is not on the support grid or beyond precision.
    pub fn coeff_at(&self, e: &Rational) -> Option<CycElem> {
        let l = rational_to_lead(e).ok()?;
        if (l - self.lead).rem_euclid(LEAD_DEN) != 0 || l >= self.known_to132() {
            return None;
        }
        if l < self.lead {
            return Some(CycElem::zero());
        }
        Some(self.coeff(((l - self.lead) / LEAD_DEN) as usize))
    }

    pub fn leading_coeff(&self) -> Option<CycElem> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeff(0))
        }
    }

    fn reduce(&mut self) {
        let nz = self.c.iter().position(|x| !is_zero_coords(x));
        match nz {
            None => {
                self.lead = self.known_to132();
                self.c.clear();
                self.den = Integer::from(1);
                return;
            }
            Some(k) if k > 0 => {
                self.c.drain(..k);
                self.lead += LEAD_DEN * k as i64;
            }
            _ => {}
        }
        if self.den.cmp0() == std::cmp::Ordering::Less {
            self.den = -std::mem::take(&mut self.den);
            for v in self.c.iter_mut() {
                for x in v.iter_mut() {
                    *x = -std::mem::take(x);
                }
            }
        }
        if self.den == 1 {
            return;
        }
        let mut g = self.den.clone();
        'outer: for v in &self.c {
            for x in v {
                if g == 1 {
                    break 'outer;
                }
                g.gcd_mut(x);
            }
        }
        if g != 1 {
            for v in self.c.iter_mut() {
                for x in v.iter_mut() {
                    x.div_exact_mut(&g);
                }
            }
            self.den.div_exact_mut(&g);
        }
    }

    /// Keeps at most `len` terms.
    pub fn truncate(&self, len: usize) -> Self {
        let mut s = self.clone();
        s.c.truncate(len);
        s
    }

    /// Keeps only terms with exponent below `upto` (integer).
    pub fn truncate_abs(&self, upto: i64) -> Self {
        let n = ((upto * LEAD_DEN - self.lead) as f64 / LEAD_DEN as f64).ceil().max(0.0) as usize;
        if self.is_zero() {
            return QSeries::zero(upto.min(self.known_to132() / LEAD_DEN));
        }
        self.truncate(n)
    }

    /// Multiplies by q_*^k.
    pub fn shift(&self, k: i64) -> Self {
        let mut s = self.clone();
        s.lead += k * LEAD_DEN;
        s
    }

    pub fn scale(&self, a: &CycElem) -> Self {
        if a.is_zero() {
            return QSeries { lead: self.known_to132(), den: Integer::from(1), c: Vec::new() };
        }
        let c = self
            .c
            .iter()
            .map(|v| {
                let mut s = zero_slots();
                mul_acc(&mut s, v, a.numerators());
                fold(&s)
            })
            .collect();
        Self::from_parts(self.lead, c, Integer::from(&self.den * a.denominator()))
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        if r.cmp0() == std::cmp::Ordering::Equal {
            return QSeries { lead: self.known_to132(), den: Integer::from(1), c: Vec::new() };
        }
        let c = self.c.iter().map(|v| std::array::from_fn(|k| Integer::from(&v[k] * r.numer()))).collect();
        Self::from_parts(self.lead, c, Integer::from(&self.den * r.denom()))
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale_rational(&Rational::from(n))
    }

    pub fn galois(&self, g: GaloisAuto) -> Self {
        let d = g.exponent() as usize;
        let c = self
            .c
            .iter()
            .map(|v| {
                let mut s = zero_slots();
                for k in 0..DIM {
                    s[(d * k) % P] += &v[k];
                }
                fold(&s)
            })
            .collect();
        Self::from_parts(self.lead, c, self.den.clone())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        if (self.lead - o.lead).rem_euclid(LEAD_DEN) != 0 {
            return Err(Error::IncompatibleSteps(self.lead().to_string(), o.lead().to_string()));
        }
        let top = self.known_to132().min(o.known_to132());
        let lo = self.lead.min(o.lead);
        if top <= lo {
            return Ok(QSeries { lead: top, den: Integer::from(1), c: Vec::new() });
        }
        let n = ((top - lo) / LEAD_DEN) as usize;
        let den = Integer::from(self.den.lcm_ref(&o.den));
        let mut c = vec![crate::cyclo::zero_coords(); n];
        for s in [self, o] {
            if s.is_zero() {
                continue;
            }
            let f = Integer::from(&den / &s.den);
            let off = ((s.lead - lo) / LEAD_DEN) as usize;
            for (i, v) in s.c.iter().enumerate() {
                if off + i >= n {
                    break;
                }
                for k in 0..DIM {
                    if f == 1 {
                        c[off + i][k] += &v[k];
                    } else {
                        c[off + i][k] += &v[k] * &f;
                    }
                }
            }
        }
        Ok(Self::from_parts(lo, c, den))
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        self.try_add(&-o)
    }

    /// Adds a constant (exponent 0) without changing precision.
    pub fn add_const(&self, a: &CycElem) -> Self {
        let top = self.known_to132();
        if top <= 0 {
            return self.clone();
        }
        let len = (top as f64 / LEAD_DEN as f64).ceil() as usize;
        let k = QSeries::constant(a, len.max(1));
        self.try_add(&k).expect("constant added to series with fractional steps")
    }

    pub fn mul_series(&self, o: &Self) -> Self {
        let lead = self.lead + o.lead;
        let n = self.len().min(o.len());
        if self.is_zero() || o.is_zero() {
            // zero known up to the smaller absolute precision
            let top = (self.known_to132() + o.lead).min(o.known_to132() + self.lead);
            let top = if self.is_zero() && o.is_zero() { self.known_to132() + o.known_to132() } else { top };
            return QSeries { lead: top, den: Integer::from(1), c: Vec::new() };
        }
        let c = convolve(&self.c, &o.c, n);
        Self::from_parts(lead, c, Integer::from(&self.den * &o.den))
    }

    pub fn square(&self) -> Self {
        self.mul_series(self)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut r: Option<QSeries> = None;
        let mut b = self.clone();
        let mut k = k;
        if k == 0 {
            return QSeries::one(self.len().max(1));
        }
        while k > 0 {
            if k & 1 == 1 {
                r = Some(match r {
                    None => b.clone(),
                    Some(x) => x.mul_series(&b),
                });
            }
            k >>= 1;
            if k > 0 {
                b = b.square();
            }
        }
        r.unwrap()
    }

    pub fn powi(&self, k: i32) -> Result<Self> {
        if k >= 0 {
            Ok(self.pow(k as u32))
        } else {
            Ok(self.inv()?.pow((-k) as u32))
        }
    }

    /// Multiplicative inverse to the same relative precision.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDivision("inverse of zero series".into()));
        }
        let n = self.len();
        let f0 = &self.c[0];
        let e0 = CycElem::from_parts(f0.clone(), Integer::from(1));
        // F₀ · P = N with P the product of the other conjugates
        let f0inv = e0.inv()?;
        let nn = f0inv.denominator().clone();
        let pp = f0inv.numerators().clone();
        // g₀ = d·P/N
        let mut l = Integer::from(1);
        let mut g: Vec<Coords> = Vec::with_capacity(n);
        {
            let mut g0: Coords = std::array::from_fn(|k| Integer::from(&pp[k] * &self.den));
            let mut gg = nn.clone();
            for x in &g0 {
                gg.gcd_mut(x);
            }
            for x in g0.iter_mut() {
                x.div_exact_mut(&gg);
            }
            l = Integer::from(&nn / &gg) * l;
            g.push(g0);
        }
        for m in 1..n {
            let mut s = zero_slots();
            for k in 1..=m {
                mul_acc(&mut s, &self.c[k], &g[m - k]);
            }
            let sf = fold(&s);
            let mut w = zero_slots();
            mul_acc(&mut w, &pp, &sf);
            let mut wv = fold(&w);
            for x in wv.iter_mut() {
                *x = -std::mem::take(x);
            }
            // g_m = wv / (N · L) ; keep common denominator L
            let mut gg = nn.clone();
            for x in &wv {
                if gg == 1 {
                    break;
                }
                gg.gcd_mut(x);
            }
            let extra = Integer::from(&nn / &gg);
            for x in wv.iter_mut() {
                x.div_exact_mut(&gg);
            }
            if extra != 1 {
                for v in g.iter_mut() {
                    for x in v.iter_mut() {
                        *x *= &extra;
                    }
                }
                l *= &extra;
            }
            g.push(wv);
        }
        Ok(Self::from_parts(-self.lead, g, l))
    }

    pub fn div_series(&self, o: &Self) -> Result<Self> {
        Ok(self.mul_series(&o.inv()?))
    }

    /// (series with leading coefficient 1, original leading coefficient).
    pub fn normalize(&self) -> Result<(Self, CycElem)> {
        let lc = self.leading_coeff().ok_or_else(|| Error::ZeroDivision("normalizing zero series".into()))?;
        Ok((self.scale(&lc.inv()?), lc))
    }

    /// Termwise d/dq_*.
    pub fn derivative(&self) -> Self {
        if self.is_zero() {
            return QSeries { lead: self.lead - LEAD_DEN, den: Integer::from(1), c: Vec::new() };
        }
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(n, v)| {
                let e = self.lead + LEAD_DEN * n as i64;
                std::array::from_fn(|k| Integer::from(&v[k] * e))
            })
            .collect();
        Self::from_parts(self.lead - LEAD_DEN, c, Integer::from(&self.den * LEAD_DEN))
    }

    /// Evaluates a polynomial Σ pᵢ xⁱ (Horner).
    pub fn eval_poly(&self, p: &[CycElem]) -> Self {
        let mut acc: Option<QSeries> = None;
        for a in p.iter().rev() {
            acc = Some(match acc {
                None => QSeries::constant(a, self.len().max(1)),
                Some(x) => x.mul_series(self).add_const(a),
            });
        }
        acc.unwrap_or_else(|| QSeries::constant(&CycElem::zero(), self.len().max(1)))
    }

    pub fn eval_int_poly(&self, p: &[i64]) -> Self {
        let v: Vec<CycElem> = p.iter().map(|&x| CycElem::from_int(x)).collect();
        self.eval_poly(&v)
    }

    /// First index where the coefficients differ from `expected` (indexed from `lead`).
    pub fn first_mismatch(&self, expected: &[CycElem]) -> Option<usize> {
        for (i, e) in expected.iter().enumerate() {
            if i >= self.len() {
                return Some(i);
            }
            if self.coeff(i) != *e {
                return Some(i);
            }
        }
        None
    }

    /// Text dump: header then one `exponent : c0 … c9` line per term.
    pub fn dump(&self) -> String {
        let mut out = format!("qseries lead={} terms={}\n", self.lead(), self.len());
        for n in 0..self.len() {
            let e = lead_to_rational(self.lead + LEAD_DEN * n as i64);
            out.push_str(&format!("{} : {}\n", e, self.coeff(n)));
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty dump".into()))?;
        let mut lead: Option<Rational> = None;
        let mut terms: Option<usize> = None;
        let mut it = header.split_whitespace();
        if it.next() != Some("qseries") {
            return Err(Error::Parse("missing qseries header".into()));
        }
        for kv in it {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field {kv:?}")))?;
            match k {
                "lead" => lead = Some(crate::cyclo::parse_rational(v)?),
                "terms" => terms = Some(v.parse().map_err(|_| Error::Parse(format!("bad term count {v:?}")))?),
                _ => return Err(Error::Parse(format!("unknown header field {k:?}"))),
            }
        }
        let lead = lead.ok_or_else(|| Error::Parse("missing lead".into()))?;
        let terms = terms.ok_or_else(|| Error::Parse("missing terms".into()))?;
        if terms > 1_000_000 {
            return Err(Error::Parse("term count too large".into()));
        }
        let l = rational_to_lead(&lead).map_err(|e| Error::Parse(e.to_string()))?;
        let mut coeffs = Vec::with_capacity(terms.min(4096));
        for n in 0..terms {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing term {n}")))?;
            let (e, rest) = line.split_once(':').ok_or_else(|| Error::Parse(format!("bad term line {line:?}")))?;
            let e = crate::cyclo::parse_rational(e)?;
            let expect =
                lead_to_rational(l.checked_add(LEAD_DEN.checked_mul(n as i64).unwrap_or(i64::MAX)).unwrap_or(i64::MAX));
            if e != expect {
                return Err(Error::Parse(format!("exponent {e} out of sequence, expected {expect}")));
            }
            coeffs.push(rest.parse::<CycElem>()?);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing lines".into()));
        }
        if terms == 0 {
            return Ok(QSeries { lead: l, den: Integer::from(1), c: Vec::new() });
        }
        if coeffs[0].is_zero() {
            return Err(Error::Parse("leading coefficient is zero".into()));
        }
        QSeries::from_coeffs(&lead, &coeffs)
    }
}

/// Truncated product of two coefficient sequences in Z[ζ].
pub fn convolve(a: &[Coords], b: &[Coords], n: usize) -> Vec<Coords> {
    let mut acc = vec![zero_slots(); n];
    let bnz: Vec<bool> = b.iter().map(|v| !is_zero_coords(v)).collect();
    for (i, ai) in a.iter().enumerate().take(n) {
        if is_zero_coords(ai) {
            continue;
        }
        for j in 0..(n - i).min(b.len()) {
            if bnz[j] {
                mul_acc(&mut acc[i + j], ai, &b[j]);
            }
        }
    }
    acc.iter().map(fold).collect()
}

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        QSeries {
            lead: self.lead,
            den: self.den.clone(),
            c: self.c.iter().map(|v| std::array::from_fn(|k| Integer::from(-&v[k]))).collect(),
        }
    }
}

impl Neg for QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        -&self
    }
}

impl<'a> Mul<&'a QSeries> for &'a QSeries {
    type Output = QSeries;
    fn mul(self, o: &QSeries) -> QSeries {
        self.mul_series(o)
    }
}

impl<'a> Add<&'a QSeries> for &'a QSeries {
    type Output = QSeries;
    /// Panics on incompatible exponent grids; use [`QSeries::try_add`] to handle that case.
    fn add(self, o: &QSeries) -> QSeries {
        self.try_add(o).expect("incompatible exponent steps")
    }
}

impl<'a> Sub<&'a QSeries> for &'a QSeries {
    type Output = QSeries;
    fn sub(self, o: &QSeries) -> QSeries {
        self.try_sub(o).expect("incompatible exponent steps")
    }
}

impl fmt::Debug for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "O(q_*^{})", self.known_to());
        }
        write!(f, "q_*^{} (", self.lead())?;
        for n in 0..self.len().min(4) {
            write!(f, "[{}] ", self.coeff(n).pretty())?;
        }
        write!(f, "… + O(q_*^{}))", self.known_to())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(len: usize) -> QSeries {
        let mut c = vec![crate::cyclo::zero_coords(); len];
        c[0][0] = Integer::from(1);
        if len > 1 {
            c[1][0] = Integer::from(-1);
        }
        QSeries::from_parts(0, c, Integer::from(1))
    }

    #[test]
    fn half_powers_multiply() {
        let h = QSeries::from_coeffs(&Rational::from((1, 2)), [CycElem::one(); 1].as_ref()).unwrap();
        let p = h.mul_series(&h);
        assert_eq!(p.lead(), 1);
        assert_eq!(p.coeff(0), CycElem::one());
    }

    #[test]
    fn inverse_of_one_minus_q() {
        let f = geometric(30);
        let g = f.inv().unwrap();
        for n in 0..30 {
            assert_eq!(g.coeff(n), CycElem::one());
        }
        let one = f.mul_series(&g);
        assert_eq!(one.len(), 30);
        assert!(one.coeff(0).is_one());
        assert!((1..30).all(|n| one.coeff(n).is_zero()));
    }

    #[test]
    fn inverse_negates_lead() {
        let z = CycElem::zeta(3);
        let f = QSeries::monomial(-2, &z, 10).try_add(&QSeries::monomial(0, &CycElem::one(), 12)).unwrap();
        let g = f.inv().unwrap();
        assert_eq!(g.lead(), 2);
        let e = f.mul_series(&g);
        assert!(e.coeff(0).is_one());
        assert!((1..e.len()).all(|n| e.coeff(n).is_zero()));
    }

    #[test]
    fn add_cancels_and_incompatible_steps() {
        let f = geometric(10);
        let z = f.try_sub(&f).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.known_to(), 10);
        let a = QSeries::from_coeffs(&Rational::from((1, 2)), &[CycElem::one()]).unwrap();
        let b = QSeries::from_coeffs(&Rational::from(1), &[CycElem::one()]).unwrap();
        assert!(a.try_add(&b).is_err());
    }

    #[test]
    fn normalize_extracts_lead_coefficient() {
        let three_z = CycElem::zeta(1).scale_int(&Integer::from(3));
        let f = QSeries::monomial(1, &three_z, 5).try_add(&QSeries::monomial(2, &CycElem::one(), 6)).unwrap();
        let (g, c) = f.normalize().unwrap();
        assert_eq!(c, three_z);
        assert!(g.coeff(0).is_one());
        let (h, c2) = g.normalize().unwrap();
        assert_eq!(h, g);
        assert!(c2.is_one());
    }

    #[test]
    fn derivative_rules() {
        let f = QSeries::monomial(5, &CycElem::one(), 3);
        let d = f.derivative();
        assert_eq!(d.lead(), 4);
        assert_eq!(d.coeff(0), CycElem::from_int(5));
        let k = QSeries::constant(&CycElem::from_int(7), 4).derivative();
        assert!(k.is_zero());
        let h = QSeries::from_coeffs(&Rational::from((-61, 132)), &[CycElem::one()]).unwrap().derivative();
        assert_eq!(h.coeff(0), CycElem::from_rational(&Rational::from((-61, 132))));
    }

    #[test]
    fn dump_roundtrip() {
        let f = QSeries::from_coeffs(
            &Rational::from((-13, 22)),
            &[CycElem::eps(), CycElem::zero(), CycElem::sqrt_m11().scale(&Rational::from((2, 3)))],
        )
        .unwrap();
        let g = QSeries::parse_dump(&f.dump()).unwrap();
        assert_eq!(f, g);
        let z = QSeries::zero(7);
        assert_eq!(QSeries::parse_dump(&z.dump()).unwrap().known_to(), 7);
        assert!(QSeries::parse_dump("qseries lead=1 terms=1\n2 : 1 0 0 0 0 0 0 0 0 0\n").is_err());
    }
}
