//! Siegel functions of level 11 and the cusp combinatorics of the non-split Cartan group.
//!
//! Cusps of X(11) are pairs (m, n) ∈ F₁₁² \ {0} up to sign. The Siegel function
//! S_(m,n) has q_*-expansion
//! `q_*^{(11/2)B₂(m/11)} (1 − ζⁿ q_*^m) Π_{k≥1} (1 − ζⁿ q_*^{11k+m})(1 − ζ⁻ⁿ q_*^{11k−m})`.
//! Products are evaluated directly on binomial factors, which keeps coefficients in
//! Z[ζ] and avoids full series multiplications.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::cyclo::{fold, zero_slots, CycElem, Slots, P};
use crate::error::{Error, Result};
use crate::qexp::QSeries;

const PI: i64 = P as i64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CuspLabel {
    m: u8,
    n: u8,
}

impl CuspLabel {
    /// Canonical representative of ±(m, n).
    pub fn new(m: i64, n: i64) -> Result<Self> {
        let (m, n) = (m.rem_euclid(PI), n.rem_euclid(PI));
        if m == 0 && n == 0 {
            return Err(Error::InvalidInput("(0,0) is not a cusp".into()));
        }
        let (m, n) = if m > 5 || (m == 0 && n > 5) { ((PI - m) % PI, (PI - n) % PI) } else { (m, n) };
        Ok(CuspLabel { m: m as u8, n: n as u8 })
    }

    pub fn m(self) -> i64 {
        self.m as i64
    }

    pub fn n(self) -> i64 {
        self.n as i64
    }

    pub fn all() -> Vec<CuspLabel> {
        let mut v: BTreeSet<CuspLabel> = BTreeSet::new();
        for m in 0..PI {
            for n in 0..PI {
                if let Ok(c) = CuspLabel::new(m, n) {
                    v.insert(c);
                }
            }
        }
        v.into_iter().collect()
    }

    /// Cusp at infinity of the q_*-expansion.
    pub fn infinity() -> Self {
        CuspLabel { m: 1, n: 0 }
    }
}

impl fmt::Display for CuspLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.m, self.n)
    }
}

type Mat = [[i64; 2]; 2];

#[derive(Clone, Debug)]
pub struct CartanData {
    alpha: i64,
    g: Vec<Mat>,
    h: Vec<Mat>,
}

fn is_square_mod11(a: i64) -> bool {
    (1..PI).any(|x| (x * x - a).rem_euclid(PI) == 0)
}

impl CartanData {
    pub fn new(alpha: i64) -> Result<Self> {
        let alpha = alpha.rem_euclid(PI);
        if alpha == 0 || is_square_mod11(alpha) {
            return Err(Error::InvalidInput(format!("α = {alpha} is not a non-square mod 11")));
        }
        let mut g = Vec::new();
        let mut h = Vec::new();
        for a in 0..PI {
            for b in 0..PI {
                let q = (a * a - alpha * b * b).rem_euclid(PI);
                if q == 1 {
                    g.push([[a, (alpha * b) % PI], [b, a]]);
                    h.push([[a, (alpha * b) % PI], [b, a]]);
                }
                if q == PI - 1 {
                    // determinant-1 elements of the other normalizer coset
                    h.push([[a, (PI - alpha * b % PI) % PI], [b, (PI - a) % PI]]);
                }
            }
        }
        Ok(CartanData { alpha, g, h })
    }

    pub fn alpha(&self) -> i64 {
        self.alpha
    }

    pub fn group_g(&self) -> &[Mat] {
        &self.g
    }

    pub fn group_h(&self) -> &[Mat] {
        &self.h
    }

    /// Row-vector action (x, y) · M.
    pub fn act(c: CuspLabel, m: &Mat) -> CuspLabel {
        let (x, y) = (c.m(), c.n());
        CuspLabel::new(x * m[0][0] + y * m[1][0], x * m[0][1] + y * m[1][1]).expect("invertible action")
    }

    pub fn orbit(&self, c: CuspLabel, group: &[Mat]) -> BTreeSet<CuspLabel> {
        group.iter().map(|m| Self::act(c, m)).collect()
    }
}

impl Default for CartanData {
    fn default() -> Self {
        CartanData::new(-1).expect("−1 is a non-square mod 11")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuspOrbit {
    pub k: u8,
    pub side: Side,
    pub members: Vec<CuspLabel>,
}

/// The ten G-orbits indexed by (k, side).
#[derive(Clone, Debug)]
pub struct CuspOrbits {
    orbits: BTreeMap<(u8, Side), Vec<CuspLabel>>,
    swapped: bool,
}

impl CuspOrbits {
    pub fn get(&self, k: u8, side: Side) -> &[CuspLabel] {
        let s = if self.swapped { side.flip() } else { side };
        &self.orbits[&(k, s)]
    }

    pub fn list(&self) -> Vec<CuspOrbit> {
        let mut out = Vec::new();
        for k in 1..=5u8 {
            for side in [Side::Plus, Side::Minus] {
                out.push(CuspOrbit { k, side, members: self.get(k, side).to_vec() });
            }
        }
        out
    }

    /// Exchanges the roles of plus and minus fibers.
    pub fn swapped(&self) -> Self {
        CuspOrbits { orbits: self.orbits.clone(), swapped: !self.swapped }
    }

    pub fn is_swapped(&self) -> bool {
        self.swapped
    }

    /// Orbit containing the cusp, as (k, side).
    pub fn locate(&self, c: CuspLabel) -> Option<(u8, Side)> {
        for k in 1..=5u8 {
            for side in [Side::Plus, Side::Minus] {
                if self.get(k, side).contains(&c) {
                    return Some((k, side));
                }
            }
        }
        None
    }
}

pub fn cusp_orbits(cd: &CartanData) -> CuspOrbits {
    let mut orbits = BTreeMap::new();
    for k in 1..=5u8 {
        let seed = CuspLabel::new(k as i64, 0).unwrap();
        let plus = cd.orbit(seed, cd.group_g());
        let full = cd.orbit(seed, cd.group_h());
        let minus: BTreeSet<_> = full.difference(&plus).cloned().collect();
        orbits.insert((k, Side::Plus), plus.into_iter().collect());
        orbits.insert((k, Side::Minus), minus.into_iter().collect());
    }
    CuspOrbits { orbits, swapped: false }
}

/// 726·B₂(r/11) = 6r² − 66r + 121 for 0 ≤ r ≤ 10.
pub fn b2_726(r: i64) -> i64 {
    let r = r.rem_euclid(PI);
    6 * r * r - 66 * r + 121
}

/// Leading q_*-exponent of S_(m,n), scaled by 132.
pub fn siegel_lead132(m: i64) -> i64 {
    b2_726(m)
}

/// Product of Siegel functions S_(m,n)^e given with 0 ≤ m ≤ 10.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SiegelProduct {
    factors: BTreeMap<(u8, u8), i32>,
}

impl SiegelProduct {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, m: i64, n: i64, e: i32) -> Result<()> {
        let (m, n) = (m.rem_euclid(PI), n.rem_euclid(PI));
        if m == 0 && n == 0 {
            return Err(Error::InvalidInput("(0,0) is not a Siegel index".into()));
        }
        *self.factors.entry((m as u8, n as u8)).or_insert(0) += e;
        Ok(())
    }

    pub fn push_label(&mut self, c: CuspLabel, e: i32) {
        self.push(c.m(), c.n(), e).expect("labels are nonzero");
    }

    pub fn factors(&self) -> impl Iterator<Item = ((i64, i64), i32)> + '_ {
        self.factors.iter().filter(|(_, &e)| e != 0).map(|(&(m, n), &e)| ((m as i64, n as i64), e))
    }

    pub fn lead132(&self) -> i64 {
        self.factors().map(|((m, _), e)| e as i64 * siegel_lead132(m)).sum()
    }

    /// Order of vanishing at the cusp (m′, n′), in q_*-units.
    pub fn divisor_order(&self, at: CuspLabel) -> Rational {
        let s: i64 = self.factors().map(|((m, n), e)| e as i64 * b2_726(m * at.m() + n * at.n())).sum();
        Rational::from((s, 132))
    }

    /// q_*-expansion with `len` terms.
    pub fn series(&self, len: usize) -> QSeries {
        let mut binom: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        let mut constant = CycElem::one();
        for ((m, n), e) in self.factors() {
            let nr = n as usize;
            let nneg = ((PI - n) % PI) as usize;
            if m == 0 {
                let c = &CycElem::one() - &CycElem::zeta(n);
                let c = if e > 0 { c.pow(e as u32) } else { c.inv().expect("1−ζⁿ ≠ 0").pow((-e) as u32) };
                constant = &constant * &c;
            } else {
                *binom.entry((m as usize, nr)).or_insert(0) += e as i64;
            }
            let mut k = 1usize;
            while 11 * k < len + m as usize {
                let e1 = 11 * k + m as usize;
                let e2 = 11 * k - m as usize;
                if e1 < len {
                    *binom.entry((e1, nr)).or_insert(0) += e as i64;
                }
                if e2 < len && e2 > 0 {
                    *binom.entry((e2, nneg)).or_insert(0) += e as i64;
                }
                k += 1;
            }
        }
        let mut c: Vec<Slots> = vec![zero_slots(); len];
        if len > 0 {
            c[0][0] = Integer::from(1);
        }
        for (&(e, r), &pw) in binom.iter() {
            for _ in 0..pw.unsigned_abs() {
                if pw > 0 {
                    mul_binomial(&mut c, e, r);
                } else {
                    div_binomial(&mut c, e, r);
                }
            }
        }
        let coords = c.iter().map(fold).collect();
        QSeries::from_parts(self.lead132(), coords, Integer::from(1)).scale(&constant)
    }
}

/// c ← c · (1 − ζ^r q^e)
fn mul_binomial(c: &mut [Slots], e: usize, r: usize) {
    for i in (e..c.len()).rev() {
        let (lo, hi) = c.split_at_mut(i);
        let src = &lo[i - e];
        for s in 0..P {
            hi[0][(s + r) % P] -= &src[s];
        }
    }
}

/// c ← c / (1 − ζ^r q^e)
fn div_binomial(c: &mut [Slots], e: usize, r: usize) {
    for i in e..c.len() {
        let (lo, hi) = c.split_at_mut(i);
        let src = &lo[i - e];
        for s in 0..P {
            hi[0][(s + r) % P] += &src[s];
        }
    }
}

/// S_(m,n) with 0 ≤ m ≤ 10 to `len` terms.
pub fn siegel_series(m: i64, n: i64, len: usize) -> Result<QSeries> {
    let mut p = SiegelProduct::new();
    p.push(m, n, 1)?;
    Ok(p.series(len))
}

/// Exponents on the fiber products g_k (plus side) and h_k (minus side).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UnitSpec {
    exps: BTreeMap<(u8, Side), i32>,
}

impl UnitSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, side: Side, k: u8, e: i32) -> Self {
        *self.exps.entry((k, side)).or_insert(0) += e;
        self
    }

    pub fn exponents(&self) -> impl Iterator<Item = ((u8, Side), i32)> + '_ {
        self.exps.iter().filter(|(_, &e)| e != 0).map(|(&k, &e)| (k, e))
    }

    pub fn expand(&self, orbits: &CuspOrbits) -> SiegelProduct {
        let mut p = SiegelProduct::new();
        for ((k, side), e) in self.exponents() {
            for &c in orbits.get(k, side) {
                p.push_label(c, e);
            }
        }
        p
    }

    pub fn divisor_order(&self, orbits: &CuspOrbits, at: CuspLabel) -> Rational {
        self.expand(orbits).divisor_order(at)
    }
}

impl FromStr for UnitSpec {
    type Err = Error;

    /// Parses factors such as `g5^2 h5 h2^-1 g3^-1`.
    fn from_str(s: &str) -> Result<Self> {
        let mut u = UnitSpec::new();
        for tok in s.split_whitespace() {
            let (base, e) = match tok.split_once('^') {
                Some((b, e)) => (b, e.parse::<i32>().map_err(|_| Error::Parse(format!("bad exponent in {tok:?}")))?),
                None => (tok, 1),
            };
            if e.unsigned_abs() > 1000 {
                return Err(Error::Parse(format!("exponent too large in {tok:?}")));
            }
            let mut ch = base.chars();
            let side = match ch.next() {
                Some('g') => Side::Plus,
                Some('h') => Side::Minus,
                _ => return Err(Error::Parse(format!("factor {tok:?} must start with g or h"))),
            };
            let k: u8 = ch.as_str().parse().map_err(|_| Error::Parse(format!("bad index in {tok:?}")))?;
            if !(1..=5).contains(&k) {
                return Err(Error::Parse(format!("index out of range in {tok:?}")));
            }
            u = u.with(side, k, e);
        }
        Ok(u)
    }
}

impl fmt::Display for UnitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .exponents()
            .map(|((k, side), e)| {
                let b = if side == Side::Plus { 'g' } else { 'h' };
                if e == 1 {
                    format!("{b}{k}")
                } else {
                    format!("{b}{k}^{e}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Product of Siegel functions described by `spec`, to `len` terms.
pub fn unit_product(spec: &UnitSpec, orbits: &CuspOrbits, len: usize) -> QSeries {
    spec.expand(orbits).series(len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_labels() {
        assert_eq!(CuspLabel::all().len(), 60);
        assert_eq!(CuspLabel::new(-1, 0).unwrap(), CuspLabel::infinity());
    }

    #[test]
    fn orbit_sizes_and_conic() {
        let cd = CartanData::default();
        assert_eq!(cd.group_g().len(), 12);
        assert_eq!(cd.group_h().len(), 24);
        let o = cusp_orbits(&cd);
        let mut seen = BTreeSet::new();
        for orb in o.list() {
            assert_eq!(orb.members.len(), 6);
            for c in &orb.members {
                assert!(seen.insert(*c));
                let q = (cd.alpha() * c.m() * c.m() - c.n() * c.n()).rem_euclid(11);
                let k = orb.k as i64;
                let t = match orb.side {
                    Side::Plus => cd.alpha() * k * k,
                    Side::Minus => -cd.alpha() * k * k,
                };
                assert_eq!(q, t.rem_euclid(11));
            }
        }
        assert_eq!(seen.len(), 60);
        assert!(o.get(1, Side::Plus).contains(&CuspLabel::infinity()));
    }

    #[test]
    fn square_alpha_rejected() {
        assert!(CartanData::new(3).is_err());
        assert!(CartanData::new(2).is_ok());
    }

    #[test]
    fn leads() {
        assert_eq!(siegel_series(1, 0, 5).unwrap().lead(), Rational::from((61, 132)));
        let s = siegel_series(0, 3, 5).unwrap();
        assert_eq!(s.lead(), Rational::from((11, 12)));
        assert_eq!(s.coeff(0), &CycElem::one() - &CycElem::zeta(3));
    }

    #[test]
    fn binomial_division_inverts_multiplication() {
        let mut a = SiegelProduct::new();
        a.push(2, 7, 1).unwrap();
        a.push(2, 7, -1).unwrap();
        let s = a.series(30);
        assert!(s.coeff(0).is_one());
        assert!((1..30).all(|i| s.coeff(i).is_zero()));
        let f = siegel_series(3, 4, 40).unwrap();
        let mut b = SiegelProduct::new();
        b.push(3, 4, -1).unwrap();
        let g = b.series(40);
        let one = f.mul_series(&g);
        assert!(one.coeff(0).is_one());
        assert!((1..one.len()).all(|i| one.coeff(i).is_zero()));
    }

    #[test]
    fn product_matches_series_product() {
        let a = siegel_series(2, 5, 50).unwrap();
        let b = siegel_series(0, 1, 50).unwrap();
        let mut p = SiegelProduct::new();
        p.push(2, 5, 1).unwrap();
        p.push(0, 1, 1).unwrap();
        assert_eq!(p.series(50), a.mul_series(&b));
    }

    fn binomial(e: usize, r: i64, len: usize) -> QSeries {
        let mut c = vec![CycElem::zero(); len];
        c[0] = CycElem::one();
        if e < len {
            c[e] = -&CycElem::zeta(r);
        }
        QSeries::from_coeffs(&Rational::new(), &c).unwrap()
    }

    #[test]
    fn siegel_series_matches_definition() {
        let len = 60;
        for (m, n) in [(1i64, 0i64), (4, 9), (7, 2), (10, 10)] {
            let mut s = binomial(m as usize, n, len);
            for k in 1..7 {
                s = s.mul_series(&binomial(11 * k + m as usize, n, len));
                s = s.mul_series(&binomial(11 * k - m as usize, -n, len));
            }
            let direct = s.truncate(len);
            let engine = siegel_series(m, n, len).unwrap();
            assert_eq!(engine.lead(), Rational::from((b2_726(m), 132)));
            assert_eq!(engine.coeffs(), direct.coeffs());
        }
    }

    #[test]
    fn unit_spec_roundtrip() {
        let u: UnitSpec = "g5^2 h5 h2^-1 g3^-1 h3^-2 g4^-1".parse().unwrap();
        let v: UnitSpec = u.to_string().parse().unwrap();
        assert_eq!(u, v);
        assert!("x5".parse::<UnitSpec>().is_err());
        assert!("g6".parse::<UnitSpec>().is_err());
        assert!("g1^".parse::<UnitSpec>().is_err());
    }
}
