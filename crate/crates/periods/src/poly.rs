//! Exact polynomials over Q in one and two variables, and numerical roots.

use num_complex::Complex64;
use rug::{Complex, Float, Integer, Rational};
use xns_core::{Error, Result};

/// Univariate polynomial over Q, lowest degree first, no trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UPoly(pub Vec<Rational>);

impl UPoly {
    pub fn new(mut c: Vec<Rational>) -> Self {
        while c.last().is_some_and(|x| *x == 0) {
            c.pop();
        }
        UPoly(c)
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| Rational::from(x)).collect())
    }

    pub fn zero() -> Self {
        UPoly(Vec::new())
    }

    pub fn constant(a: Rational) -> Self {
        Self::new(vec![a])
    }

    /// t
    pub fn var() -> Self {
        Self::from_ints(&[0, 1])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn lc(&self) -> Rational {
        self.0.last().cloned().unwrap_or_default()
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        Self::new(
            (0..n)
                .map(|i| {
                    let mut s = self.0.get(i).cloned().unwrap_or_default();
                    if let Some(x) = o.0.get(i) {
                        s += x;
                    }
                    s
                })
                .collect(),
        )
    }

    pub fn neg(&self) -> Self {
        UPoly(self.0.iter().map(|x| Rational::from(-x)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, a: &Rational) -> Self {
        Self::new(self.0.iter().map(|x| Rational::from(x * a)).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut c = vec![Rational::new(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += Rational::from(a * b);
            }
        }
        Self::new(c)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut r = Self::constant(Rational::from(1));
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.0.iter().enumerate().skip(1).map(|(i, a)| Rational::from(a * i as u32)).collect())
    }

    pub fn div_rem(&self, d: &Self) -> Result<(Self, Self)> {
        let dd = d.degree().ok_or_else(|| Error::ZeroDivision("polynomial division by zero".into()))?;
        let mut r = self.0.clone();
        let lc = d.lc();
        let mut q = vec![Rational::new(); r.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let f = Rational::from(r.last().unwrap() / &lc);
            for (i, b) in d.0.iter().enumerate() {
                r[k + i] -= Rational::from(&f * b);
            }
            q[k] = f;
            r.pop();
            while r.last().is_some_and(|x| *x == 0) {
                r.pop();
            }
        }
        Ok((Self::new(q), Self::new(r)))
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&self.lc().recip())
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).expect("b ≠ 0").1;
            a = std::mem::replace(&mut b, r);
        }
        a.monic()
    }

    pub fn squarefree(&self) -> Self {
        if self.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        self.div_rem(&self.gcd(&self.derivative())).expect("gcd ≠ 0").0.monic()
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        let mut acc = Rational::new();
        for a in self.0.iter().rev() {
            acc *= t;
            acc += a;
        }
        acc
    }

    pub fn eval_c64(&self, t: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in self.0.iter().rev() {
            acc = acc * t + a.to_f64();
        }
        acc
    }

    /// Newton interpolation through (xᵢ, yᵢ).
    pub fn interpolate(xs: &[Rational], ys: &[Rational]) -> Self {
        let n = xs.len();
        let mut dd: Vec<Rational> = ys.to_vec();
        for j in 1..n {
            for i in (j..n).rev() {
                let num = Rational::from(&dd[i] - &dd[i - 1]);
                let den = Rational::from(&xs[i] - &xs[i - j]);
                dd[i] = num / den;
            }
        }
        let mut p = Self::constant(dd[n - 1].clone());
        for i in (0..n - 1).rev() {
            p = p.mul(&Self::new(vec![Rational::from(-&xs[i]), Rational::from(1)])).add(&Self::constant(dd[i].clone()));
        }
        p
    }

    /// All complex roots with multiplicity, by Aberth iteration at `bits` precision.
    pub fn roots(&self, bits: u32) -> Result<Vec<Complex>> {
        aberth(&self.0, bits)
    }
}

fn aberth(c: &[Rational], bits: u32) -> Result<Vec<Complex>> {
    let n = c.len().checked_sub(1).ok_or_else(|| Error::InvalidInput("roots of the zero polynomial".into()))?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let wp = bits + 64;
    let lc = Float::with_val(wp, &c[n]);
    let coef: Vec<Complex> = c.iter().map(|x| Complex::with_val(wp, Float::with_val(wp, x) / &lc)).collect();
    // Cauchy bound for the initial circle
    let mut r = 0.0f64;
    for x in &coef[..n] {
        r = r.max(x.real().to_f64().hypot(x.imag().to_f64()));
    }
    let radius = 1.0 + r;
    let mut z: Vec<Complex> = (0..n)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            Complex::with_val(wp, (radius * 0.5 * a.cos(), radius * 0.5 * a.sin()))
        })
        .collect();
    let eval = |x: &Complex| -> (Complex, Complex) {
        let mut p = Complex::with_val(wp, 0);
        let mut dp = Complex::with_val(wp, 0);
        for a in coef.iter().rev() {
            dp = Complex::with_val(wp, &dp * x) + &p;
            p = Complex::with_val(wp, &p * x) + a;
        }
        (p, dp)
    };
    let tol = Float::with_val(wp, Float::i_exp(1, -(bits as i32)));
    for _ in 0..(20 * bits as usize + 500) {
        let mut moved = Float::with_val(wp, 0);
        for i in 0..n {
            let (p, dp) = eval(&z[i]);
            if p.real().is_zero() && p.imag().is_zero() {
                continue;
            }
            let ratio = Complex::with_val(wp, &p / &dp);
            let mut s = Complex::with_val(wp, 0);
            for j in 0..n {
                if j != i {
                    let d = Complex::with_val(wp, &z[i] - &z[j]);
                    s += d.recip();
                }
            }
            let denom = Complex::with_val(wp, 1) - Complex::with_val(wp, &ratio * &s);
            let w = Complex::with_val(wp, &ratio / &denom);
            let mag = Float::with_val(wp, w.abs_ref());
            let zm = Float::with_val(wp, z[i].abs_ref()).max(&Float::with_val(wp, 1));
            let rel = mag / zm;
            if rel > moved {
                moved = rel;
            }
            z[i] -= w;
        }
        if moved < tol {
            return Ok(z.into_iter().map(|x| Complex::with_val(bits, x)).collect());
        }
    }
    Err(Error::Numeric(format!("Aberth iteration did not converge for degree {n}")))
}

/// Roots of a polynomial with complex f64 coefficients (lowest first), polished by Newton.
pub fn roots_c64(c: &[Complex64]) -> Vec<Complex64> {
    let mut c = c.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lc = c[n];
    let coef: Vec<Complex64> = c.iter().map(|x| x / lc).collect();
    let radius = 1.0 + coef[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    let eval = |x: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = p;
        for a in coef.iter().rev() {
            dp = dp * x + p;
            p = p * x + a;
        }
        (p, dp)
    };
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * s);
            moved = moved.max(w.norm() / z[i].norm().max(1.0));
            z[i] -= w;
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// F(t, z) = Σ_k c_k(t) z^k over Q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiPoly {
    pub c: Vec<UPoly>,
}

impl BiPoly {
    pub fn new(mut c: Vec<UPoly>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        BiPoly { c }
    }

    /// From (coefficient, t-degree, z-degree) triples.
    pub fn from_terms(terms: &[(i64, usize, usize)]) -> Self {
        let mut c: Vec<UPoly> = Vec::new();
        for &(a, i, k) in terms {
            if c.len() <= k {
                c.resize(k + 1, UPoly::zero());
            }
            let mut m = vec![Rational::new(); i + 1];
            m[i] = Rational::from(a);
            c[k] = c[k].add(&UPoly::new(m));
        }
        Self::new(c)
    }

    pub fn from_t(p: UPoly) -> Self {
        Self::new(vec![p])
    }

    /// z
    pub fn z() -> Self {
        Self::new(vec![UPoly::zero(), UPoly::from_ints(&[1])])
    }

    /// t
    pub fn t() -> Self {
        Self::from_t(UPoly::var())
    }

    pub fn constant(a: i64) -> Self {
        Self::from_t(UPoly::from_ints(&[a]))
    }

    pub fn deg_z(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn deg_t(&self) -> usize {
        self.c.iter().filter_map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        Self::new(
            (0..n)
                .map(|k| {
                    let z = UPoly::zero();
                    self.c.get(k).unwrap_or(&z).add(o.c.get(k).unwrap_or(&z))
                })
                .collect(),
        )
    }

    pub fn scale(&self, a: i64) -> Self {
        let a = Rational::from(a);
        Self::new(self.c.iter().map(|p| p.scale(&a)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1))
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.c.is_empty() || o.c.is_empty() {
            return Self::new(Vec::new());
        }
        let mut c = vec![UPoly::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] = c[i + j].add(&a.mul(b));
            }
        }
        Self::new(c)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut r = Self::constant(1);
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    pub fn dz(&self) -> Self {
        Self::new(self.c.iter().enumerate().skip(1).map(|(k, p)| p.scale(&Rational::from(k as u32))).collect())
    }

    /// Coefficients in z of F(t₀, z).
    pub fn at_t(&self, t: &Rational) -> UPoly {
        UPoly::new(self.c.iter().map(|p| p.eval(t)).collect())
    }

    pub fn at_t_c64(&self, t: Complex64) -> Vec<Complex64> {
        self.c.iter().map(|p| p.eval_c64(t)).collect()
    }

    /// Value and z-derivative at (t, z).
    pub fn eval_c64(&self, t: Complex64, z: Complex64) -> (Complex64, Complex64) {
        let cs = self.at_t_c64(t);
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = p;
        for a in cs.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    }

    /// gcd over Q[t] of the z-coefficients.
    pub fn content(&self) -> UPoly {
        let mut g = UPoly::zero();
        for p in &self.c {
            g = g.gcd(p);
        }
        g
    }

    /// F divided by its Q[t]-content and scaled to integer coefficients with positive leading term.
    pub fn primitive_part(&self) -> Self {
        let g = self.content();
        let mut c: Vec<UPoly> = self
            .c
            .iter()
            .map(|p| if p.is_zero() { p.clone() } else { p.div_rem(&g).expect("content ≠ 0").0 })
            .collect();
        let mut den = Integer::from(1);
        let mut num = Integer::new();
        for p in &c {
            for a in &p.0 {
                den.lcm_mut(a.denom());
                num.gcd_mut(a.numer());
            }
        }
        let mut s = Rational::from((den, num));
        if c.last().is_some_and(|p| p.lc() < 0) {
            s = -s;
        }
        for p in c.iter_mut() {
            *p = p.scale(&s);
        }
        Self::new(c)
    }

    /// Discriminant in z, as a polynomial in t: Res_z(F, ∂F/∂z) up to the sign and leading-coefficient factor.
    pub fn discriminant_z(&self) -> UPoly {
        let n = self.deg_z();
        let bound = (2 * n).saturating_sub(1) * self.deg_t() + 1;
        let mut xs = Vec::with_capacity(bound);
        let mut ys = Vec::with_capacity(bound);
        let dz = self.dz();
        let mut t = 0i64;
        while xs.len() < bound {
            let tr = Rational::from(t);
            let f = self.at_t(&tr);
            if f.degree() == Some(n) {
                ys.push(resultant(&f, &dz.at_t(&tr)));
                xs.push(tr);
            }
            t = if t <= 0 { 1 - t } else { -t };
        }
        UPoly::interpolate(&xs, &ys)
    }
}

/// Resultant of two univariate polynomials via the Sylvester matrix.
pub fn resultant(f: &UPoly, g: &UPoly) -> Rational {
    let (Some(m), Some(n)) = (f.degree(), g.degree()) else { return Rational::new() };
    let size = m + n;
    if size == 0 {
        return Rational::from(1);
    }
    let mut a = vec![vec![Rational::new(); size]; size];
    for i in 0..n {
        for (k, c) in f.0.iter().rev().enumerate() {
            a[i][i + k] = c.clone();
        }
    }
    for i in 0..m {
        for (k, c) in g.0.iter().rev().enumerate() {
            a[n + i][i + k] = c.clone();
        }
    }
    rational_det(a)
}

fn rational_det(mut a: Vec<Vec<Rational>>) -> Rational {
    let n = a.len();
    let mut d = Rational::from(1);
    for k in 0..n {
        let Some(p) = (k..n).find(|&r| a[r][k] != 0) else { return Rational::new() };
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        d *= &a[k][k];
        for r in k + 1..n {
            if a[r][k] == 0 {
                continue;
            }
            let f = Rational::from(&a[r][k] / &a[k][k]);
            for c in k..n {
                let v = Rational::from(&f * &a[k][c]);
                a[r][c] -= v;
            }
        }
    }
    d
}
