//! Fourier coefficients of the level-121 newforms and their modular-symbol periods.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rug::Rational;
use serde::Serialize;
use xns_core::ellmaps::WeierstrassModel;
use xns_core::{Error, Result};

pub const LEVEL: i64 = 121;
pub const DEFAULT_NMAX: usize = 20000;
pub const TSV_VERSION: &str = "xns-an v1";

/// The eight paths {0, a/c}.
pub const SYMBOLS: [(i64, i64); 8] = [(3, 52), (4, 97), (19, 92), (59, 119), (8, 57), (11, 74), (3, 28), (11, 37)];

pub const LABELS: [char; 4] = ['A', 'B', 'C', 'D'];

pub fn curve(label: char) -> Result<WeierstrassModel> {
    match label {
        'A' => Ok(WeierstrassModel::e_a()),
        'B' => Ok(WeierstrassModel::e_b()),
        'C' => Ok(WeierstrassModel::e_c()),
        'D' => Ok(WeierstrassModel::e_d()),
        _ => Err(Error::InvalidInput(format!("unknown curve label {label:?}"))),
    }
}

fn int_coeffs(e: &WeierstrassModel) -> Result<[i64; 5]> {
    let mut out = [0i64; 5];
    for (o, a) in out.iter_mut().zip(e.a.iter()) {
        if *a.denom() != 1 {
            return Err(Error::InvalidInput("point counting needs an integral model".into()));
        }
        *o = a.numer().to_i64().ok_or_else(|| Error::InvalidInput("coefficient too large".into()))?;
    }
    Ok(out)
}

/// a_p = p + 1 − #E(F_p), with a_11 = 0 for the level-121 forms.
pub fn ap_count(e: &WeierstrassModel, p: u64) -> Result<i64> {
    if p == 11 {
        return Ok(0);
    }
    let [a1, a2, a3, a4, a6] = int_coeffs(e)?;
    let pi = p as i64;
    let m = |x: i64| x.rem_euclid(pi);
    if p == 2 {
        let mut affine = 0;
        for x in 0..2 {
            for y in 0..2 {
                if m(y * y + a1 * x * y + a3 * y - x * x * x - a2 * x * x - a4 * x - a6) == 0 {
                    affine += 1;
                }
            }
        }
        return Ok(2 - affine);
    }
    let mut is_sq = vec![false; p as usize];
    for y in 0..pi {
        is_sq[(y * y % pi) as usize] = true;
    }
    let mut s = 0i64;
    for x in 0..pi {
        let b = m(a1 * x + a3);
        let c = m(m(m(x * x) * x) + m(a2 * m(x * x)) + m(a4 * x) + a6);
        let d = m(b * b + 4 * c) as usize;
        if d != 0 {
            s += if is_sq[d] { 1 } else { -1 };
        }
    }
    Ok(-s)
}

/// Coefficients a_1 … a_nmax of the newform attached to a curve of conductor 121.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnTable {
    pub label: char,
    /// a[n] for 0 ≤ n ≤ nmax (a[0] = 0)
    pub a: Vec<i64>,
}

fn smallest_prime_factors(n: usize) -> Vec<usize> {
    let mut spf: Vec<usize> = (0..=n).collect();
    let mut p = 2;
    while p * p <= n {
        if spf[p] == p {
            let mut m = p * p;
            while m <= n {
                if spf[m] == m {
                    spf[m] = p;
                }
                m += p;
            }
        }
        p += 1;
    }
    spf
}

impl AnTable {
    pub fn nmax(&self) -> usize {
        self.a.len().saturating_sub(1)
    }

    /// Multiplicative extension of the prime coefficients.
    pub fn extend(label: char, ap: impl Fn(u64) -> Result<i64>, nmax: usize) -> Result<Self> {
        let spf = smallest_prime_factors(nmax.max(1));
        let mut a = vec![0i64; nmax + 1];
        if nmax >= 1 {
            a[1] = 1;
        }
        for n in 2..=nmax {
            let p = spf[n];
            let mut m = n;
            let mut pk = 1;
            while m % p == 0 {
                m /= p;
                pk *= p;
            }
            a[n] = if m > 1 {
                a[pk] * a[m]
            } else if pk == p {
                ap(p as u64)?
            } else {
                let tail = if p == 11 { 0 } else { p as i64 * a[n / p / p] };
                a[p] * a[n / p] - tail
            };
        }
        Ok(AnTable { label, a })
    }

    pub fn compute(label: char, nmax: usize) -> Result<Self> {
        let e = curve(label)?;
        Self::extend(label, |p| ap_count(&e, p), nmax)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = format!("# {TSV_VERSION} label={} nmax={}\n", self.label, self.nmax());
        for (n, v) in self.a.iter().enumerate().skip(1) {
            writeln!(s, "{n}\t{v}").expect("write to string");
        }
        s
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty a_n file".into()))?;
        let rest = header
            .strip_prefix("# ")
            .and_then(|h| h.strip_prefix(TSV_VERSION))
            .ok_or_else(|| Error::Parse(format!("bad a_n header {header:?}")))?;
        let mut label = None;
        let mut nmax = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("label", l)) if l.len() == 1 => label = l.chars().next(),
                Some(("nmax", n)) => nmax = n.parse::<usize>().ok(),
                _ => return Err(Error::Parse(format!("bad header field {field:?}"))),
            }
        }
        let (Some(label), Some(nmax)) = (label, nmax) else {
            return Err(Error::Parse("header needs label and nmax".into()));
        };
        if nmax > 10_000_000 {
            return Err(Error::Parse("nmax too large".into()));
        }
        let mut a = vec![0i64; nmax + 1];
        let mut expect = 1usize;
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let (n, v) = line.split_once('\t').ok_or_else(|| Error::Parse(format!("bad line {line:?}")))?;
            let n: usize = n.parse().map_err(|_| Error::Parse(format!("bad index {n:?}")))?;
            let v: i64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad coefficient {v:?}")))?;
            if n != expect || n > nmax {
                return Err(Error::Parse(format!("index {n} out of sequence")));
            }
            a[n] = v;
            expect += 1;
        }
        if expect != nmax + 1 {
            return Err(Error::Parse(format!("expected {nmax} coefficients, found {}", expect - 1)));
        }
        if nmax >= 1 && a[1] != 1 {
            return Err(Error::Parse("a_1 must be 1".into()));
        }
        Ok(AnTable { label, a })
    }

    /// Reads `an_<label>.tsv` from `dir` when it covers `nmax`, else computes and writes it.
    pub fn load_or_compute(label: char, nmax: usize, dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            let path = cache_path(d, label);
            if let Ok(text) = std::fs::read_to_string(&path) {
                if let Ok(t) = Self::parse_tsv(&text) {
                    if t.label == label && t.nmax() >= nmax {
                        return Ok(AnTable { label, a: t.a[..=nmax].to_vec() });
                    }
                }
            }
            let t = Self::compute(label, nmax)?;
            std::fs::create_dir_all(d).map_err(|e| Error::Io(e.to_string()))?;
            std::fs::write(&path, t.to_tsv()).map_err(|e| Error::Io(e.to_string()))?;
            return Ok(t);
        }
        Self::compute(label, nmax)
    }
}

pub fn cache_path(dir: &Path, label: char) -> PathBuf {
    dir.join(format!("an_{label}.tsv"))
}

/// [[A, a], [121k, c]] in Γ₀(121) sending 0 to a/c, with k ≥ 0 minimal.
pub fn symbol_matrix(a: i64, c: i64) -> Result<[[i64; 2]; 2]> {
    let g = rug::Integer::from(c).gcd(&rug::Integer::from(LEVEL));
    if c <= 0 || g != 1 || rug::Integer::from(a).gcd(&rug::Integer::from(c)) != 1 {
        return Err(Error::InvalidInput(format!("{{0, {a}/{c}}} is not a closed path on X_0(121)")));
    }
    if c == 1 {
        return Ok([[1, a], [0, 1]]);
    }
    // 121·k·a ≡ −1 (mod c)
    let inv = rug::Integer::from(LEVEL * a)
        .invert(&rug::Integer::from(c))
        .map_err(|_| Error::InvalidInput("121a not invertible mod c".into()))?;
    let k = (-inv.to_i64().expect("small")).rem_euclid(c);
    let big_a = (1 + LEVEL * k * a) / c;
    debug_assert_eq!(big_a * c - a * LEVEL * k, 1);
    Ok([[big_a, a], [LEVEL * k, c]])
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegralInfo {
    pub terms: usize,
    pub tail_bound: f64,
}

/// Number of terms after which 4 Σ_{n>N} e^{−2πn/C} < tol.
pub fn terms_needed(c: i64, tol: f64) -> usize {
    let r = (-2.0 * std::f64::consts::PI / c as f64).exp();
    let mut n = 1usize;
    while 4.0 * r.powi(n as i32 + 1) / (1.0 - r) >= tol {
        n += 1;
    }
    n
}

/// ∫ 2πi f(τ) dτ from z₁ = (−D + i)/C to γz₁, truncated at `terms`.
pub fn period_sum(table: &AnTable, g: [[i64; 2]; 2], terms: usize) -> Result<Complex64> {
    let [[a, _], [c, d]] = g;
    if c == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if terms > table.nmax() {
        return Err(Error::Numeric(format!("need {terms} coefficients, table has {}", table.nmax())));
    }
    let cf = c as f64;
    let z1 = Complex64::new(-d as f64 / cf, 1.0 / cf);
    let z2 = Complex64::new(a as f64 / cf, 1.0 / cf);
    let tau = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let mut s = Complex64::new(0.0, 0.0);
    for n in 1..=terms {
        let an = table.a[n];
        if an == 0 {
            continue;
        }
        let nf = n as f64;
        s += (an as f64 / nf) * ((tau * z2 * nf).exp() - (tau * z1 * nf).exp());
    }
    Ok(s)
}

pub fn period_integral(table: &AnTable, g: [[i64; 2]; 2], tol: f64) -> Result<(Complex64, IntegralInfo)> {
    let c = g[1][0].abs().max(1);
    let terms = terms_needed(c, tol);
    let r = (-2.0 * std::f64::consts::PI / c as f64).exp();
    let v = period_sum(table, g, terms)?;
    Ok((v, IntegralInfo { terms, tail_bound: 4.0 * r.powi(terms as i32 + 1) / (1.0 - r) }))
}

#[derive(Clone, Debug)]
pub struct OmegaNew {
    /// rows A, B, C, D; columns γ₁ … γ₈
    pub omega: Vec<Vec<Complex64>>,
    pub info: Vec<Vec<IntegralInfo>>,
    /// largest change when the number of terms is doubled
    pub doubling_change: f64,
}

pub fn omega_new(tables: &[AnTable; 4], tol: f64) -> Result<OmegaNew> {
    let mut omega = vec![vec![Complex64::new(0.0, 0.0); SYMBOLS.len()]; 4];
    let mut info = vec![Vec::new(); 4];
    let mut change = 0.0f64;
    for (i, t) in tables.iter().enumerate() {
        for (j, &(a, c)) in SYMBOLS.iter().enumerate() {
            let g = symbol_matrix(a, c)?;
            let (v, inf) = period_integral(t, g, tol)?;
            let twice = (2 * inf.terms).min(t.nmax());
            let w = period_sum(t, g, twice)?;
            change = change.max((v - w).norm());
            omega[i][j] = v;
            info[i].push(inf);
        }
    }
    Ok(OmegaNew { omega, info, doubling_change: change })
}

pub fn load_tables(nmax: usize, dir: Option<&Path>) -> Result<[AnTable; 4]> {
    let mut v = Vec::new();
    for l in LABELS {
        v.push(AnTable::load_or_compute(l, nmax, dir)?);
    }
    Ok(v.try_into().expect("four labels"))
}

/// Rational view of a period's lattice coordinates, used in reports.
pub fn as_rationals(x: &[f64], max_den: u64) -> Vec<Rational> {
    x.iter().map(|&v| xns_core::lattices::rationalize(v, max_den)).collect()
}
