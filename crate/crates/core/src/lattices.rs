//! Integer linear algebra for period lattices known numerically.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};

pub type IntMatrix = Vec<Vec<Integer>>;

pub fn int_matrix(rows: &[Vec<i64>]) -> IntMatrix {
    rows.iter().map(|r| r.iter().map(|&x| Integer::from(x)).collect()).collect()
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| Integer::from((i == j) as i32)).collect()).collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let m = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| {
                    let mut s = Integer::new();
                    for (k, x) in row.iter().enumerate() {
                        s += Integer::from(x * &b[k][j]);
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn fdiv(a: &Integer, b: &Integer) -> Integer {
    a.clone().div_rem_floor(b.clone()).0
}

/// Determinant by fraction-free Bareiss elimination.
pub fn det(m: &IntMatrix) -> Integer {
    let n = m.len();
    if n == 0 {
        return Integer::from(1);
    }
    let mut a = m.clone();
    let mut sign = 1;
    let mut prev = Integer::from(1);
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Integer::new(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = Integer::from(&a[i][j] * &a[k][k]) - Integer::from(&a[i][k] * &a[k][j]);
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    a[n - 1][n - 1].clone() * sign
}

/// Row-style Hermite normal form; returns the nonzero rows.
pub fn hnf_rows(m: &IntMatrix) -> IntMatrix {
    let mut a = m.clone();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut p = 0;
    for c in 0..cols {
        if p == rows {
            break;
        }
        loop {
            let best = (p..rows).filter(|&r| a[r][c] != 0).min_by(|&x, &y| a[x][c].cmp_abs(&a[y][c]));
            let Some(b) = best else { break };
            a.swap(p, b);
            let mut done = true;
            for r in p + 1..rows {
                if a[r][c] != 0 {
                    let q = fdiv(&a[r][c], &a[p][c]);
                    let (top, rest) = a.split_at_mut(r);
                    for (x, y) in rest[0].iter_mut().zip(top[p].iter()) {
                        *x -= Integer::from(&q * y);
                    }
                    if rest[0][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if a.get(p).is_none_or(|r| r[c] == 0) {
            continue;
        }
        if a[p][c] < 0 {
            for x in a[p].iter_mut() {
                *x = -x.clone();
            }
        }
        for r in 0..p {
            let q = fdiv(&a[r][c], &a[p][c]);
            if q != 0 {
                let (top, rest) = a.split_at_mut(p);
                for (x, y) in top[r].iter_mut().zip(rest[0].iter()) {
                    *x -= Integer::from(&q * y);
                }
            }
        }
        p += 1;
    }
    a.truncate(p);
    a
}

#[derive(Clone, Debug, Serialize)]
pub struct SnfResult {
    pub factors: Vec<Integer>,
    /// U·M·V = diag(factors)
    pub u: IntMatrix,
    pub v: IntMatrix,
}

/// Smith normal form of a square or rectangular integer matrix.
pub fn snf(m: &IntMatrix) -> SnfResult {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a = m.clone();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let row_op = |a: &mut IntMatrix, u: &mut IntMatrix, dst: usize, src: usize, q: &Integer| {
        for mat in [a, u] {
            let s = mat[src].clone();
            for (x, y) in mat[dst].iter_mut().zip(s.iter()) {
                *x -= Integer::from(q * y);
            }
        }
    };
    let col_op = |a: &mut IntMatrix, v: &mut IntMatrix, dst: usize, src: usize, q: &Integer| {
        for mat in [a, v] {
            for r in mat.iter_mut() {
                let t = Integer::from(q * &r[src]);
                r[dst] -= t;
            }
        }
    };
    let swap_cols = |mat: &mut IntMatrix, i: usize, j: usize| {
        for r in mat.iter_mut() {
            r.swap(i, j);
        }
    };
    let n = rows.min(cols);
    for t in 0..n {
        loop {
            let mut piv = None;
            for i in t..rows {
                for j in t..cols {
                    if a[i][j] != 0 && piv.is_none_or(|(pi, pj): (usize, usize)| a[i][j].cmp_abs(&a[pi][pj]).is_lt()) {
                        piv = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = piv else { break };
            a.swap(t, pi);
            u.swap(t, pi);
            swap_cols(&mut a, t, pj);
            swap_cols(&mut v, t, pj);
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t] != 0 {
                    let q = fdiv(&a[i][t], &a[t][t]);
                    row_op(&mut a, &mut u, i, t, &q);
                    clean &= a[i][t] == 0;
                }
            }
            for j in t + 1..cols {
                if a[t][j] != 0 {
                    let q = fdiv(&a[t][j], &a[t][t]);
                    col_op(&mut a, &mut v, j, t, &q);
                    clean &= a[t][j] == 0;
                }
            }
            if !clean {
                continue;
            }
            // divisibility: fold a row with an entry not divisible by the pivot into row t
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a[i][j].is_divisible(&a[t][t])));
            match bad {
                Some(i) => row_op(&mut a, &mut u, t, i, &Integer::from(-1)),
                None => break,
            }
        }
        if a[t][t] < 0 {
            for x in a[t].iter_mut() {
                *x = -x.clone();
            }
            for x in u[t].iter_mut() {
                *x = -x.clone();
            }
        }
    }
    let factors = (0..n).map(|i| a[i][i].clone()).collect();
    SnfResult { factors, u, v }
}

/// Prime-power decomposition of the invariant factors, e.g. (2,2,6,6) → [2,2,2,2,3,3].
pub fn elementary_divisors(factors: &[Integer]) -> Vec<Integer> {
    let mut out = Vec::new();
    for f in factors {
        let mut n = Integer::from(f.abs_ref());
        let mut p = Integer::from(2);
        while n > 1 {
            if Integer::from(&p * &p) > n {
                out.push(n.clone());
                break;
            }
            let mut q = Integer::from(1);
            while n.is_divisible(&p) {
                n /= &p;
                q *= &p;
            }
            if q > 1 {
                out.push(q);
            }
            p += 1;
        }
    }
    out.sort();
    out
}

/// Nontrivial invariant factors (those > 1).
pub fn nontrivial(factors: &[Integer]) -> Vec<Integer> {
    factors.iter().filter(|f| **f != 1).cloned().collect()
}

/// Best rational approximation with denominator at most `max_den` (continued fractions).
pub fn rationalize(x: f64, max_den: u64) -> Rational {
    if !x.is_finite() {
        return Rational::new();
    }
    let exact = Rational::from_f64(x).expect("finite");
    let (mut p0, mut q0, mut p1, mut q1) = (Integer::from(0), Integer::from(1), Integer::from(1), Integer::from(0));
    let mut r = exact.clone();
    loop {
        let a = r.clone().floor().into_numer_denom().0;
        let q2 = Integer::from(&a * &q1) + &q0;
        if q2 > max_den {
            // semiconvergent check
            let k = Integer::from(max_den - &q0) / &q1;
            let pb = Integer::from(&k * &p1) + &p0;
            let qb = Integer::from(&k * &q1) + &q0;
            let c1 = Rational::from((p1.clone(), q1.clone()));
            let c2 = Rational::from((pb, qb));
            let d1 = Rational::from(&c1 - &exact).abs();
            let d2 = Rational::from(&c2 - &exact).abs();
            return if d2 < d1 { c2 } else { c1 };
        }
        let p2 = Integer::from(&a * &p1) + &p0;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = Rational::from(&r - &a);
        if frac == 0 {
            return Rational::from((p1, q1));
        }
        r = frac.recip();
    }
}

/// Real stacking [Re; Im] of a g×n complex matrix.
pub fn stack(m: &[Vec<Complex64>]) -> DMatrix<f64> {
    let g = m.len();
    let n = m.first().map_or(0, |r| r.len());
    DMatrix::from_fn(2 * g, n, |i, j| if i < g { m[i][j].re } else { m[i - g][j].im })
}

pub fn unstack(m: &DMatrix<f64>) -> Vec<Vec<Complex64>> {
    let g = m.nrows() / 2;
    (0..g).map(|i| (0..m.ncols()).map(|j| Complex64::new(m[(i, j)], m[(i + g, j)])).collect()).collect()
}

/// Full-rank real lattice given by the columns of a square matrix.
#[derive(Clone, Debug)]
pub struct RealLattice {
    pub basis: DMatrix<f64>,
    pub condition: f64,
    pub label: String,
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

impl RealLattice {
    pub fn new(basis: DMatrix<f64>, label: &str) -> Result<Self> {
        if basis.nrows() != basis.ncols() || basis.nrows() == 0 {
            return Err(Error::InvalidInput("lattice basis must be square".into()));
        }
        let condition = condition_number(&basis);
        if !condition.is_finite() || condition > 1e12 {
            return Err(Error::Numeric(format!("{label}: basis is singular (condition {condition:e})")));
        }
        Ok(RealLattice { basis, condition, label: label.to_string() })
    }

    pub fn from_complex(m: &[Vec<Complex64>], label: &str) -> Result<Self> {
        Self::new(stack(m), label)
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Coordinates of the columns of `v` in this basis.
    pub fn coordinates(&self, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.basis.clone().lu().solve(v).ok_or_else(|| Error::Numeric(format!("{}: singular basis", self.label)))
    }

    pub fn scaled(&self, s: f64) -> Self {
        RealLattice { basis: &self.basis * s, condition: self.condition, label: self.label.clone() }
    }

    /// Product lattice Λ₁ × … × Λ_g of rank-2 lattices in C, stacked as [Re; Im].
    pub fn product_of_elliptic(periods: &[(Complex64, Complex64)], label: &str) -> Result<Self> {
        let g = periods.len();
        let mut m = vec![vec![Complex64::new(0.0, 0.0); 2 * g]; g];
        for (i, (w1, w2)) in periods.iter().enumerate() {
            m[i][2 * i] = *w1;
            m[i][2 * i + 1] = *w2;
        }
        Self::from_complex(&m, label)
    }
}

/// Exact C with super·C = sub, every entry a rational of denominator ≤ max_den.
pub fn reconstruct(sub: &RealLattice, sup: &RealLattice, tol: f64, max_den: u64) -> Result<Vec<Vec<Rational>>> {
    let c = sup.coordinates(&sub.basis)?;
    rationalize_matrix(&c, tol, max_den)
}

fn rationalize_matrix(c: &DMatrix<f64>, tol: f64, max_den: u64) -> Result<Vec<Vec<Rational>>> {
    let mut out = Vec::with_capacity(c.nrows());
    for i in 0..c.nrows() {
        let mut row = Vec::with_capacity(c.ncols());
        for j in 0..c.ncols() {
            let x = c[(i, j)];
            let r = rationalize(x, max_den);
            let err = (r.to_f64() - x).abs();
            if err > tol * x.abs().max(1.0) {
                return Err(Error::Numeric(format!(
                    "entry ({i},{j}) = {x} not within {tol:e} of a rational with denominator ≤ {max_den}"
                )));
            }
            row.push(r);
        }
        out.push(row);
    }
    Ok(out)
}

/// Integer matrix from a rational one, failing if any entry is not integral.
pub fn integral(c: &[Vec<Rational>]) -> Result<IntMatrix> {
    c.iter()
        .map(|row| {
            row.iter()
                .map(|x| {
                    if *x.denom() == 1 {
                        Ok(x.numer().clone())
                    } else {
                        Err(Error::CheckFailed(format!("non-integral coordinate {x}")))
                    }
                })
                .collect()
        })
        .collect()
}

/// Z-basis of the lattice generated by the columns of `gens` (which must span R^d).
pub fn lattice_from_generators(gens: &DMatrix<f64>, tol: f64, max_den: u64, label: &str) -> Result<RealLattice> {
    let d = gens.nrows();
    if gens.ncols() < d {
        return Err(Error::Numeric(format!("{label}: {} generators for rank {d}", gens.ncols())));
    }
    let scale = gens.amax();
    let qr = gens.clone().col_piv_qr();
    let mut perm = nalgebra::DVector::from_fn(gens.ncols(), |i, _| i as f64).transpose();
    qr.p().permute_columns(&mut perm);
    let r = qr.r();
    let rank = (0..d).filter(|&i| r[(i, i)].abs() > 1e-9 * scale).count();
    if rank < d {
        return Err(Error::Numeric(format!("{label}: generators have rank {rank} < {d}")));
    }
    let cols: Vec<usize> = (0..d).map(|i| perm[i] as usize).collect();
    let b = DMatrix::from_fn(d, d, |i, j| gens[(i, cols[j])]);
    let prov = RealLattice::new(b, label)?;
    let c = prov.coordinates(gens)?;
    let cr = rationalize_matrix(&c, tol, max_den)?;
    let mut den = Integer::from(1);
    for row in &cr {
        for x in row {
            den.lcm_mut(x.denom());
        }
    }
    // generators as rows of integer coordinates with respect to prov.basis / den
    let rows: IntMatrix = (0..gens.ncols())
        .map(|j| (0..d).map(|i| (Rational::from(&cr[i][j] * &den)).numer().clone()).collect())
        .collect();
    let h = hnf_rows(&rows);
    if h.len() != d {
        return Err(Error::Numeric(format!("{label}: HNF rank {} ≠ {d}", h.len())));
    }
    let denf = den.to_f64();
    let hm = DMatrix::from_fn(d, d, |i, j| h[j][i].to_f64() / denf);
    RealLattice::new(&prov.basis * hm, label)
}

/// Maximal distance of an integer-rounded matrix entry from its real value.
pub fn integrality_residual(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| (x - x.round()).abs()).fold(0.0, f64::max)
}

pub fn round_matrix(m: &DMatrix<f64>) -> IntMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Integer::from_f64(m[(i, j)].round()).unwrap()).collect()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Gl8Witness {
    pub signs: Vec<i8>,
    pub matrix: IntMatrix,
    pub det: Integer,
    pub residual: f64,
}

/// Searches sign vectors s with [Re;Im(s·Ω_ns)]⁻¹[Re;Im(Ω_new)] integral of determinant ±1.
pub fn gl8_check(omega_ns: &[Vec<Complex64>], omega_new: &[Vec<Complex64>], tol: f64) -> Result<Gl8Witness> {
    let g = omega_ns.len();
    if omega_new.len() != g || g == 0 {
        return Err(Error::InvalidInput("period matrices must have the same number of rows".into()));
    }
    let target = stack(omega_new);
    let mut best: Option<Gl8Witness> = None;
    for mask in 0u32..(1 << g) {
        let signs: Vec<i8> = (0..g).map(|i| if mask & (1 << i) != 0 { -1 } else { 1 }).collect();
        let s: Vec<Vec<Complex64>> =
            omega_ns.iter().zip(&signs).map(|(row, &e)| row.iter().map(|z| z * e as f64).collect()).collect();
        let Ok(lat) = RealLattice::from_complex(&s, "omega_ns") else { continue };
        let m = lat.coordinates(&target)?;
        let residual = integrality_residual(&m);
        let matrix = round_matrix(&m);
        let d = det(&matrix);
        let w = Gl8Witness { signs, matrix, det: d, residual };
        let ok = w.residual < tol && Integer::from(w.det.abs_ref()) == 1;
        if ok {
            return Ok(w);
        }
        if best.as_ref().is_none_or(|b| w.residual < b.residual) {
            best = Some(w);
        }
    }
    let b = best.expect("at least one sign vector");
    Err(Error::CheckFailed(format!(
        "no sign vector gives a unimodular integral matrix (best residual {:.3e}, det {})",
        b.residual, b.det
    )))
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientReport {
    pub label: String,
    pub inclusion: IntMatrix,
    pub invariant_factors: Vec<Integer>,
    pub index: Integer,
}

/// Invariant factors of sup/sub for a full-rank sublattice.
pub fn quotient(sub: &RealLattice, sup: &RealLattice, tol: f64, max_den: u64) -> Result<QuotientReport> {
    let c = integral(&reconstruct(sub, sup, tol, max_den)?)?;
    let s = snf(&c);
    let index = Integer::from(det(&c).abs_ref());
    let mut f = s.factors;
    f.sort();
    Ok(QuotientReport { label: format!("{}/{}", sup.label, sub.label), inclusion: c, invariant_factors: f, index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use proptest::test_runner::{Config, RngSeed};

    fn seeded(cases: u32, seed: u64) -> Config {
        Config { cases, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..Config::default() }
    }

    fn ints(v: &[Integer]) -> Vec<i64> {
        v.iter().map(|x| x.to_i64().unwrap()).collect()
    }

    #[test]
    fn snf_examples() {
        assert_eq!(ints(&snf(&identity(3)).factors), vec![1, 1, 1]);
        assert_eq!(ints(&snf(&int_matrix(&[vec![2, 0], vec![0, 6]])).factors), vec![2, 6]);
        assert_eq!(ints(&snf(&int_matrix(&[vec![6, 0], vec![0, 4]])).factors), vec![2, 12]);
        let m = int_matrix(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]);
        let s = snf(&m);
        assert_eq!(ints(&s.factors), vec![2, 6, 12]);
        let d = mat_mul(&mat_mul(&s.u, &m), &s.v);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[i][j], if i == j { s.factors[i].clone() } else { Integer::new() });
            }
        }
    }

    #[test]
    fn elementary_refactoring() {
        let f: Vec<Integer> = [1, 1, 1, 1, 2, 2, 6, 6].iter().map(|&x| Integer::from(x)).collect();
        assert_eq!(ints(&elementary_divisors(&f)), vec![2, 2, 2, 2, 3, 3]);
    }

    #[test]
    fn rationalize_examples() {
        assert_eq!(rationalize(0.333333333, 1000), Rational::from((1, 3)));
        assert_eq!(rationalize(-2.5, 10), Rational::from((-5, 2)));
        assert_eq!(rationalize(std::f64::consts::PI, 1000), Rational::from((355, 113)));
        assert_eq!(rationalize(7.0, 1), Rational::from(7));
    }

    #[test]
    fn hnf_of_generators() {
        let h = hnf_rows(&int_matrix(&[vec![2, 0], vec![0, 3], vec![4, 3], vec![1, 1]]));
        assert_eq!(h.len(), 2);
        assert_eq!(det(&h).abs(), 1);
        let h = hnf_rows(&int_matrix(&[vec![2, 0], vec![0, 2], vec![2, 2]]));
        assert_eq!(det(&h).abs(), 4);
    }

    #[test]
    fn reconstruct_trivial() {
        let b = DMatrix::from_row_slice(2, 2, &[1.3, 0.2, -0.4, 2.1]);
        let l = RealLattice::new(b.clone(), "L").unwrap();
        let c = reconstruct(&l, &l, 1e-9, 1000).unwrap();
        assert_eq!(integral(&c).unwrap(), identity(2));
        let l2 = l.scaled(2.0);
        let c2 = integral(&reconstruct(&l2, &l, 1e-9, 1000).unwrap()).unwrap();
        assert_eq!(c2, int_matrix(&[vec![2, 0], vec![0, 2]]));
    }

    #[test]
    fn gl8_self_and_negative_control() {
        let om: Vec<Vec<Complex64>> = (0..2)
            .map(|i| {
                (0..4)
                    .map(|j| {
                        Complex64::new(
                            ((i * 4 + j) as f64).sin() + 2.0 * (i == j % 2) as i32 as f64,
                            ((i + 3 * j) as f64).cos(),
                        )
                    })
                    .collect()
            })
            .collect();
        let w = gl8_check(&om, &om, 1e-6).unwrap();
        assert_eq!(w.signs, vec![1, 1]);
        assert_eq!(w.matrix, identity(4));
        let mut bad = om.clone();
        bad[0][1] += Complex64::new(1e-2, 0.0);
        assert!(gl8_check(&om, &bad, 1e-4).is_err());
    }

    fn unimodular(n: usize, ops: &[(usize, usize, i64)]) -> IntMatrix {
        let mut m = identity(n);
        for &(i, j, k) in ops {
            let (i, j) = (i % n, j % n);
            if i == j {
                continue;
            }
            let src = m[j].clone();
            for (x, y) in m[i].iter_mut().zip(src.iter()) {
                *x += Integer::from(y * k);
            }
        }
        m
    }

    proptest! {
        #![proptest_config(seeded(64, 0x5eed_0001))]
        #[test]
        fn snf_divisibility_chain(v in proptest::collection::vec(-20i64..20, 9)) {
            let m = int_matrix(&[v[0..3].to_vec(), v[3..6].to_vec(), v[6..9].to_vec()]);
            let s = snf(&m);
            let d = mat_mul(&mat_mul(&s.u, &m), &s.v);
            for i in 0..3 {
                for j in 0..3 {
                    if i != j { prop_assert_eq!(&d[i][j], &Integer::new()); }
                }
                prop_assert_eq!(&d[i][i], &s.factors[i]);
            }
            for i in 0..2 {
                if s.factors[i] != 0 {
                    prop_assert!(s.factors[i + 1].is_divisible(&s.factors[i]));
                } else {
                    prop_assert_eq!(&s.factors[i + 1], &Integer::new());
                }
            }
            let prod = s.factors.iter().fold(Integer::from(1), |a, b| a * b);
            prop_assert_eq!(prod, det(&m).abs());
        }

        #[test]
        fn snf_basis_independent(
            ou in proptest::collection::vec((0usize..4, 0usize..4, -2i64..=2), 12),
            ov in proptest::collection::vec((0usize..4, 0usize..4, -2i64..=2), 12),
        ) {
            let m = int_matrix(&[vec![2, 4, 0, 1], vec![0, 6, 3, 3], vec![8, -2, 6, 0], vec![1, 1, 1, 1]]);
            let (u, v) = (unimodular(4, &ou), unimodular(4, &ov));
            prop_assert_eq!(det(&u).abs(), 1);
            prop_assert_eq!(snf(&mat_mul(&mat_mul(&u, &m), &v)).factors, snf(&m).factors);
        }
    }
}
