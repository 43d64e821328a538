//! Period matrices of plane curves F(t, z) = 0 by monodromy and contour integration.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use xns_core::derive::{self, Constants, Report, Stage};
use xns_core::lattices::{self, RealLattice};
use xns_core::qexp::QSeries;
use xns_core::{CycElem, Error, Result};

use crate::poly::{roots_c64, BiPoly, UPoly};

pub type Integrand = fn(Complex64, Complex64) -> Complex64;

/// A differential g(t, z) dt on the curve.
#[derive(Clone)]
pub struct Differential {
    pub label: &'static str,
    pub g: Integrand,
}

#[derive(Clone)]
pub struct PlaneCurve {
    pub name: &'static str,
    pub f: BiPoly,
    pub differentials: Vec<Differential>,
}

/// 12T⁴ + 187T² + Z²
fn n_tz() -> BiPoly {
    let t2 = BiPoly::t().pow(2);
    t2.pow(2).scale(12).add(&t2.scale(187)).add(&BiPoly::z().pow(2))
}

/// T⁴ − 11T² + Z²
fn d_tz() -> BiPoly {
    let t2 = BiPoly::t().pow(2);
    t2.pow(2).sub(&t2.scale(11)).add(&BiPoly::z().pow(2))
}

/// 16D³(T² + 4X³ + 7X² − 6X + 19) with X = N/(4D), before removing the content.
pub fn xns_cleared() -> BiPoly {
    let (n, d) = (n_tz(), d_tz());
    let t2 = BiPoly::t().pow(2);
    t2.mul(&d.pow(3))
        .scale(16)
        .add(&n.pow(3))
        .add(&n.pow(2).mul(&d).scale(7))
        .sub(&n.mul(&d.pow(2)).scale(24))
        .add(&d.pow(3).scale(304))
}

fn wc(t: Complex64, z: Complex64) -> Complex64 {
    let (t2, z2) = (t * t, z * z);
    let d = t2 * t2 - 11.0 * t2 + z2;
    let e1 = 18.0 * t2 * t2 + 121.0 * t2 + 7.0 * z2;
    let e2 = 32.0 * t2 * t2 + 605.0 * t2 - z2;
    32.0 * d * d / (e1 * e2)
}

fn wa(t: Complex64, z: Complex64) -> Complex64 {
    -11.0 * t / z * wc(t, z)
}

fn wb(t: Complex64, z: Complex64) -> Complex64 {
    -t * t / z * wc(t, z)
}

fn wd(t: Complex64, z: Complex64) -> Complex64 {
    let (t2, z2) = (t * t, z * z);
    let d = t2 * t2 - 11.0 * t2 + z2;
    -t * (32.0 * t2 * t2 + 605.0 * t2 - z2) / (4.0 * z * d) * wc(t, z)
}

/// The (T, Z) model of X_ns(11) with ω_A, ω_B, ω_C, ω_D.
pub fn plane_model_xns() -> PlaneCurve {
    PlaneCurve {
        name: "xns11",
        f: xns_cleared().primitive_part(),
        differentials: vec![
            Differential { label: "omega_A", g: wa },
            Differential { label: "omega_B", g: wb },
            Differential { label: "omega_C", g: wc },
            Differential { label: "omega_D", g: wd },
        ],
    }
}

fn eta_a(_x: Complex64, y: Complex64) -> Complex64 {
    44.0 / y
}

fn eta_d(x: Complex64, y: Complex64) -> Complex64 {
    4.0 * (3.0 * x - 1.0) / y
}

/// y² = −(4x³ − 4x² − 28x + 41)(4x³ + 7x² − 6x + 19) with η_A = 44dx/y, η_D = 4(3x − 1)dx/y.
pub fn genus2_model() -> PlaneCurve {
    let p = UPoly::from_ints(&[41, -28, -4, 4]).mul(&UPoly::from_ints(&[19, -6, 7, 4]));
    PlaneCurve {
        name: "genus2",
        f: BiPoly::new(vec![p, UPoly::zero(), UPoly::from_ints(&[1])]),
        differentials: vec![Differential { label: "eta_A", g: eta_a }, Differential { label: "eta_D", g: eta_d }],
    }
}

/// F(t(q), z(q)) for series arguments.
pub fn eval_series(f: &BiPoly, t: &QSeries, z: &QSeries) -> Result<QSeries> {
    let mut acc: Option<QSeries> = None;
    for p in f.c.iter().rev() {
        let coeffs: Vec<CycElem> = p.0.iter().map(CycElem::from_rational).collect();
        let c = t.eval_poly(&coeffs);
        acc = Some(match acc {
            None => c,
            Some(a) => a.mul_series(z).try_add(&c)?,
        });
    }
    Ok(acc.unwrap_or_else(|| QSeries::zero(0)))
}

/// Finite branch points: roots of the squarefree z-discriminant and of the leading coefficient.
pub fn branch_points(f: &BiPoly, bits: u32) -> Result<Vec<Complex64>> {
    let disc = f.discriminant_z().squarefree();
    let mut out = Vec::new();
    for z in disc.roots(bits)? {
        out.push(Complex64::new(z.real().to_f64(), z.imag().to_f64()));
    }
    let lc = f.c.last().cloned().unwrap_or_else(UPoly::zero).squarefree();
    if lc.degree().unwrap_or(0) > 0 {
        for z in lc.roots(bits)? {
            let c = Complex64::new(z.real().to_f64(), z.imag().to_f64());
            if out.iter().all(|o| (o - c).norm() > 1e-12) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

fn min_gap(z: &[Complex64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..z.len() {
        for j in 0..i {
            g = g.min((z[i] - z[j]).norm());
        }
    }
    g
}

fn newton(f: &BiPoly, t: Complex64, z0: Complex64) -> Option<Complex64> {
    let cs = f.at_t_c64(t);
    let mut z = z0;
    let mut last = f64::INFINITY;
    for _ in 0..40 {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = p;
        for a in cs.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        if dp.norm() == 0.0 {
            return None;
        }
        let step = p / dp;
        z -= step;
        if step.norm() <= 1e-14 * z.norm().max(1.0) {
            return Some(z);
        }
        last = step.norm();
    }
    (last <= 1e-10 * z.norm().max(1.0)).then_some(z)
}

fn fiber(f: &BiPoly, t: Complex64) -> Vec<Complex64> {
    roots_c64(&f.at_t_c64(t)).into_iter().map(|z| newton(f, t, z).unwrap_or(z)).collect()
}

/// Continues the roots `prev` (valid at the previous point) to t.
fn continue_roots(f: &BiPoly, t: Complex64, prev: &[Complex64]) -> Option<Vec<Complex64>> {
    let gap = min_gap(prev);
    let mut out = Vec::with_capacity(prev.len());
    for &z in prev {
        let w = newton(f, t, z)?;
        if (w - z).norm() > 0.4 * gap {
            return None;
        }
        out.push(w);
    }
    if min_gap(&out) < 0.25 * gap {
        return None;
    }
    Some(out)
}

const GL_NODES: usize = 12;

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// A path t(s), s ∈ [0, 1], with derivative.
#[derive(Clone, Copy, Debug)]
pub enum Path {
    Line {
        from: Complex64,
        to: Complex64,
    },
    /// counterclockwise circle around `center` starting at angle `start`
    Circle {
        center: Complex64,
        radius: f64,
        start: f64,
    },
}

impl Path {
    fn at(&self, s: f64) -> (Complex64, Complex64) {
        match *self {
            Path::Line { from, to } => (from + (to - from) * s, to - from),
            Path::Circle { center, radius, start } => {
                let a = start + 2.0 * PI * s;
                let u = Complex64::from_polar(radius, a);
                (center + u, Complex64::new(0.0, 2.0 * PI) * u)
            }
        }
    }
}

struct Integrator<'a> {
    curve: &'a PlaneCurve,
    nodes: (Vec<f64>, Vec<f64>),
    tol: f64,
    evaluations: usize,
}

type Panel = (Vec<Complex64>, Vec<Vec<Complex64>>);

impl Integrator<'_> {
    /// Tracks through the Gauss nodes of [a, b]; returns roots at b and integrals per differential and sheet.
    fn panel(&mut self, path: &Path, a: f64, b: f64, z: &[Complex64]) -> Option<Panel> {
        let nd = self.curve.differentials.len();
        let mut acc = vec![vec![Complex64::new(0.0, 0.0); z.len()]; nd];
        let mut cur = z.to_vec();
        let (xs, ws) = &self.nodes;
        for (x, w) in xs.iter().zip(ws) {
            let s = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let (t, dt) = path.at(s);
            cur = continue_roots(&self.curve.f, t, &cur)?;
            self.evaluations += 1;
            for (k, d) in self.curve.differentials.iter().enumerate() {
                for (i, zz) in cur.iter().enumerate() {
                    acc[k][i] += (d.g)(t, *zz) * dt * (0.5 * (b - a) * w);
                }
            }
        }
        let (tb, _) = path.at(b);
        let end = continue_roots(&self.curve.f, tb, &cur)?;
        Some((end, acc))
    }

    fn adaptive(&mut self, path: &Path, a: f64, b: f64, z: &[Complex64], depth: u32) -> Result<Panel> {
        if depth > 40 {
            return Err(Error::Numeric(format!("{}: step collapse near t = {}", self.curve.name, path.at(a).0)));
        }
        let m = 0.5 * (a + b);
        let whole = self.panel(path, a, b, z);
        let left = self.panel(path, a, m, z);
        if let (Some((_, iw)), Some((zm, il))) = (&whole, &left) {
            if let Some((zb, ir)) = self.panel(path, m, b, zm) {
                let mut err = 0.0f64;
                let mut scale = 1.0f64;
                let mut sum = il.clone();
                for k in 0..sum.len() {
                    for i in 0..sum[k].len() {
                        sum[k][i] += ir[k][i];
                        err = err.max((sum[k][i] - iw[k][i]).norm());
                        scale = scale.max(sum[k][i].norm());
                    }
                }
                if err <= self.tol * scale && depth >= 2 {
                    return Ok((zb, sum));
                }
            }
        }
        let (zm, mut il) = self.adaptive(path, a, m, z, depth + 1)?;
        let (zb, ir) = self.adaptive(path, m, b, &zm, depth + 1)?;
        for k in 0..il.len() {
            for i in 0..il[k].len() {
                il[k][i] += ir[k][i];
            }
        }
        Ok((zb, il))
    }

    fn along(&mut self, path: &Path, z: &[Complex64]) -> Result<Panel> {
        self.adaptive(path, 0.0, 1.0, z, 0)
    }
}

fn nearest_perm(from: &[Complex64], to: &[Complex64]) -> Result<Vec<usize>> {
    let gap = min_gap(to);
    let mut perm = Vec::with_capacity(from.len());
    for z in from {
        let (k, d) = to
            .iter()
            .enumerate()
            .map(|(k, w)| (k, (z - w).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("nonempty fiber");
        if d > 0.1 * gap {
            return Err(Error::Numeric("lost track of a fiber root".into()));
        }
        perm.push(k);
    }
    let mut seen = vec![false; perm.len()];
    for &k in &perm {
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::Numeric("fiber matching is not a permutation".into()));
        }
    }
    Ok(perm)
}

/// sheet s → perm[s]
pub type Perm = Vec<usize>;

pub fn compose(p: &Perm, q: &Perm) -> Perm {
    p.iter().map(|&i| q[i]).collect()
}

pub fn inverse(p: &Perm) -> Perm {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// n minus the number of cycles.
pub fn ramification(p: &Perm) -> usize {
    let mut seen = vec![false; p.len()];
    let mut cycles = 0;
    for i in 0..p.len() {
        if !seen[i] {
            cycles += 1;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = p[j];
            }
        }
    }
    p.len() - cycles
}

pub fn is_transitive(perms: &[Perm], n: usize) -> bool {
    let mut seen = vec![false; n];
    let mut q = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(s) = q.pop_front() {
        for p in perms {
            for t in [p[s], inverse(p)[s]] {
                if !seen[t] {
                    seen[t] = true;
                    q.push_back(t);
                }
            }
        }
    }
    seen.iter().all(|&b| b)
}

#[derive(Clone, Debug, Serialize)]
pub struct Loop {
    pub branch_point: (f64, f64),
    pub radius: f64,
    pub perm: Perm,
}

#[derive(Clone, Debug, Serialize)]
pub struct Monodromy {
    pub basepoint: (f64, f64),
    pub degree: usize,
    pub loops: Vec<Loop>,
    /// permutation of a large counterclockwise circle through the basepoint
    pub infinity: Perm,
    pub genus: usize,
    pub transitive: bool,
    /// whether the ordered product of the loops equals the circle's inverse-free permutation
    pub relation_holds: bool,
    pub evaluations: usize,
    pub fiber: Vec<Complex64>,
    #[serde(skip)]
    integrals: Vec<Vec<Vec<Complex64>>>,
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let s = ((p - a) * d.conj()).re / d.norm_sqr();
    (p - (a + d * s.clamp(0.0, 1.0))).norm()
}

/// Basepoint on the real axis right of every branch point; moved off the axis only when
/// some radial segment would pass too close to another branch point.
fn choose_basepoint(bp: &[Complex64], standoff: &[f64]) -> Complex64 {
    let r = bp.iter().map(|c| c.norm()).fold(0.0, f64::max) + 1.0;
    let ok = |b: Complex64| {
        bp.iter()
            .enumerate()
            .all(|(j, &c)| bp.iter().enumerate().all(|(k, &o)| k == j || segment_distance(o, b, c) > 2.0 * standoff[k]))
    };
    let mut b = Complex64::new(r, 0.0);
    let mut h = 0.0;
    while !ok(b) {
        h += 0.05 * r;
        b = Complex64::new(r, h);
        if h > 10.0 * r {
            break;
        }
    }
    b
}

/// Loops around every finite branch point from a common basepoint, with per-sheet integrals.
pub fn monodromy(curve: &PlaneCurve, bits: u32, tol: f64) -> Result<Monodromy> {
    let bp = branch_points(&curve.f, bits)?;
    let n = curve.f.deg_z();
    let standoff: Vec<f64> = bp
        .iter()
        .enumerate()
        .map(|(j, c)| {
            bp.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, o)| (c - o).norm()).fold(1.0f64, f64::min) / 8.0
        })
        .collect();
    let b = choose_basepoint(&bp, &standoff);
    let mut order: Vec<usize> = (0..bp.len()).collect();
    order.sort_by(|&i, &j| (bp[i] - b).arg().partial_cmp(&(bp[j] - b).arg()).unwrap());
    let z0 = fiber(&curve.f, b);
    if z0.len() != n || min_gap(&z0) < 1e-8 {
        return Err(Error::Numeric("basepoint fiber is degenerate".into()));
    }
    let mut ig = Integrator { curve, nodes: gauss_legendre(GL_NODES), tol, evaluations: 0 };
    let mut loops = Vec::new();
    let mut integrals = Vec::new();
    for &j in &order {
        let c = bp[j];
        let rho = standoff[j];
        let u = (c - b) / (c - b).norm();
        let p = c - u * rho;
        let line = Path::Line { from: b, to: p };
        let (zp, il) = ig.along(&line, &z0)?;
        let circle = Path::Circle { center: c, radius: rho, start: (-u).arg() };
        let (zc, ic) = ig.along(&circle, &zp)?;
        // sheet s at p returns on sheet pi[s]; the way back on it is the reverse of the outward line
        let pi = nearest_perm(&zc, &zp)?;
        let mut tot = il.clone();
        for k in 0..tot.len() {
            for s in 0..n {
                tot[k][s] = il[k][s] + ic[k][s] - il[k][pi[s]];
            }
        }
        loops.push(Loop { branch_point: (c.re, c.im), radius: rho, perm: pi });
        integrals.push(tot);
    }
    let circle = Path::Circle { center: Complex64::new(0.0, 0.0), radius: b.norm(), start: b.arg() };
    let (zi, _) = ig.along(&circle, &z0)?;
    let infinity = nearest_perm(&zi, &z0)?;
    let mut prod: Perm = (0..n).collect();
    for l in &loops {
        prod = compose(&prod, &l.perm);
    }
    let relation_holds = prod == infinity;
    let r: usize = loops.iter().map(|l| ramification(&l.perm)).sum::<usize>() + ramification(&inverse(&infinity));
    let genus = (r + 2).saturating_sub(2 * n) / 2;
    let perms: Vec<Perm> = loops.iter().map(|l| l.perm.clone()).collect();
    Ok(Monodromy {
        basepoint: (b.re, b.im),
        degree: n,
        transitive: is_transitive(&perms, n),
        loops,
        infinity,
        genus,
        relation_holds,
        evaluations: ig.evaluations,
        fiber: z0,
        integrals,
    })
}

/// Traversal of the lift of loop `loop_index` that starts on `sheet`; backwards when `!forward`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub loop_index: usize,
    pub sheet: usize,
    pub forward: bool,
}

impl Step {
    fn reversed(self) -> Self {
        Step { forward: !self.forward, ..self }
    }

    /// (vertex, half-edge position) where the step leaves and where it arrives. Around each
    /// fiber point the outgoing end of loop j sits at position 2j and the incoming end at 2j + 1.
    fn ends(self, loops: &[Loop]) -> ((usize, usize), (usize, usize)) {
        let j = self.loop_index;
        let out = (self.sheet, 2 * j);
        let inc = (loops[j].perm[self.sheet], 2 * j + 1);
        if self.forward {
            (out, inc)
        } else {
            (inc, out)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Cycle {
    pub steps: Vec<Step>,
    pub word: String,
}

fn cyclic_reduce(mut w: Vec<Step>) -> Vec<Step> {
    loop {
        let mut changed = false;
        let mut out: Vec<Step> = Vec::with_capacity(w.len());
        for s in w {
            if out.last() == Some(&s.reversed()) {
                out.pop();
                changed = true;
            } else {
                out.push(s);
            }
        }
        while out.len() >= 2 && out[0] == out[out.len() - 1].reversed() {
            out.pop();
            out.remove(0);
            changed = true;
        }
        w = out;
        if !changed {
            return w;
        }
    }
}

fn word_string(steps: &[Step]) -> String {
    steps
        .iter()
        .map(|s| {
            format!(
                "{}{}{}",
                if s.forward { "" } else { "-" },
                s.loop_index,
                ["a", "b", "c", "d", "e", "f", "g", "h"].get(s.sheet).copied().unwrap_or("?")
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Schreier generators of the sheet graph: tree path to s, the lift of γ_j from s, tree path back.
pub fn schreier_cycles(m: &Monodromy) -> Vec<Cycle> {
    let n = m.degree;
    let mut tree: Vec<Option<Vec<Step>>> = vec![None; n];
    tree[0] = Some(Vec::new());
    let mut q = VecDeque::from([0usize]);
    while let Some(s) = q.pop_front() {
        let path = tree[s].clone().expect("visited");
        for (j, l) in m.loops.iter().enumerate() {
            let t = l.perm[s];
            if tree[t].is_none() {
                tree[t] = Some([path.clone(), vec![Step { loop_index: j, sheet: s, forward: true }]].concat());
                q.push_back(t);
            }
            let t0 = inverse(&l.perm)[s];
            if tree[t0].is_none() {
                tree[t0] = Some([path.clone(), vec![Step { loop_index: j, sheet: t0, forward: false }]].concat());
                q.push_back(t0);
            }
        }
    }
    let mut out = Vec::new();
    for s in 0..n {
        let Some(ps) = &tree[s] else { continue };
        for (j, l) in m.loops.iter().enumerate() {
            let Some(pt) = &tree[l.perm[s]] else { continue };
            let mut w = ps.clone();
            w.push(Step { loop_index: j, sheet: s, forward: true });
            w.extend(pt.iter().rev().map(|s| s.reversed()));
            let w = cyclic_reduce(w);
            if !w.is_empty() {
                out.push(Cycle { word: word_string(&w), steps: w });
            }
        }
    }
    out
}

impl Monodromy {
    /// Periods of each differential over a closed cycle.
    pub fn cycle_periods(&self, c: &Cycle) -> Vec<Complex64> {
        let nd = self.integrals.first().map_or(0, |v| v.len());
        let mut v = vec![Complex64::new(0.0, 0.0); nd];
        for s in &c.steps {
            for (k, x) in v.iter_mut().enumerate() {
                let i = self.integrals[s.loop_index][k][s.sheet];
                *x += if s.forward { i } else { -i };
            }
        }
        v
    }

    fn passes(&self, c: &Cycle) -> Vec<(usize, usize, usize)> {
        let k = c.steps.len();
        (0..k)
            .map(|i| {
                let (_, (v, a)) = c.steps[i].ends(&self.loops);
                let ((v2, d), _) = c.steps[(i + 1) % k].ends(&self.loops);
                debug_assert_eq!(v, v2);
                (v, a, d)
            })
            .collect()
    }

    /// Algebraic intersection number: push `a` off to its left inside the ribbon graph and
    /// count signed crossings with `b` at the fiber points over the basepoint.
    pub fn intersection(&self, a: &Cycle, b: &Cycle) -> i64 {
        let h = 2 * self.loops.len();
        let mut total = 0;
        let pb = self.passes(b);
        for (v, ain, aout) in self.passes(a) {
            let span = (ain + h - aout) % h;
            let left = |p: usize| {
                let r = (p + h - aout) % h;
                r > 0 && r < span
            };
            for &(w, bin, bout) in &pb {
                if w != v {
                    continue;
                }
                total += match (left(bin), left(bout)) {
                    (true, false) => -1,
                    (false, true) => 1,
                    _ => 0,
                };
            }
        }
        total
    }

    pub fn is_closed(&self, c: &Cycle) -> bool {
        let k = c.steps.len();
        (0..k).all(|i| c.steps[i].ends(&self.loops).1 .0 == c.steps[(i + 1) % k].ends(&self.loops).0 .0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodMatrix {
    pub curve: String,
    pub labels: Vec<String>,
    /// g × 2g, columns over `basis`
    pub omega: Vec<Vec<Complex64>>,
    pub genus: usize,
    pub condition: f64,
    pub monodromy: Monodromy,
    pub cycles: Vec<Cycle>,
    /// each basis cycle as an integer combination of `cycles`
    pub basis: Vec<Vec<i64>>,
    /// intersection matrix of the basis cycles
    pub intersection: Vec<Vec<i64>>,
    pub intersection_det: i64,
    /// |Ω J⁻¹ Ωᵀ| relative to |Ω|²
    pub riemann_first: f64,
    /// eigenvalues of the Hermitian form −iΩJ⁻¹Ω*
    pub riemann_second: Vec<f64>,
}

fn to_i64(m: &lattices::IntMatrix) -> Vec<Vec<i64>> {
    m.iter().map(|r| r.iter().map(|x| x.to_i64().expect("small entry")).collect()).collect()
}

/// Period matrix of the curve's differentials, each divided by `scale`, on an integral homology basis.
pub fn period_matrix(curve: &PlaneCurve, bits: u32, tol: f64, scale: f64) -> Result<PeriodMatrix> {
    let m = monodromy(curve, bits, tol)?;
    period_matrix_from(curve, m, scale)
}

pub fn period_matrix_from(curve: &PlaneCurve, m: Monodromy, scale: f64) -> Result<PeriodMatrix> {
    if !m.transitive {
        return Err(Error::Numeric(format!("{}: monodromy group is not transitive", curve.name)));
    }
    let g = curve.differentials.len();
    if m.genus != g {
        return Err(Error::CheckFailed(format!("{}: genus {} from monodromy, expected {g}", curve.name, m.genus)));
    }
    let mut cycles = Vec::new();
    let mut periods = Vec::new();
    for c in schreier_cycles(&m) {
        let v: Vec<Complex64> = m.cycle_periods(&c).into_iter().map(|x| x / scale).collect();
        // null-homologous: the period map is injective on homology
        if v.iter().all(|x| x.norm() < 1e-9) {
            continue;
        }
        cycles.push(c);
        periods.push(v);
    }
    let gens =
        DMatrix::from_fn(2 * g, periods.len(), |i, j| if i < g { periods[j][i].re } else { periods[j][i - g].im });
    let lat = lattices::lattice_from_generators(&gens, 1e-6, 1000, curve.name)?;
    let coords = lat.coordinates(&gens)?;
    if lattices::integrality_residual(&coords) > 1e-6 {
        return Err(Error::Numeric(format!("{}: generators are not integral in the basis", curve.name)));
    }
    let k = lattices::round_matrix(&coords);
    let s = lattices::snf(&k);
    if s.factors.iter().any(|f| *f != 1) {
        return Err(Error::Numeric(format!("{}: basis is not spanned by the cycles", curve.name)));
    }
    // K·V·[U; 0] = I
    let n = cycles.len();
    let u0: lattices::IntMatrix =
        (0..n)
            .map(|i| {
                if i < 2 * g {
                    (0..2 * g).map(|j| s.u[i][j].clone()).collect()
                } else {
                    vec![rug::Integer::new(); 2 * g]
                }
            })
            .collect();
    let x = lattices::mat_mul(&s.v, &u0);
    let jg: lattices::IntMatrix =
        cycles.iter().map(|a| cycles.iter().map(|b| rug::Integer::from(m.intersection(a, b))).collect()).collect();
    let xt: lattices::IntMatrix = (0..2 * g).map(|i| (0..n).map(|r| x[r][i].clone()).collect()).collect();
    let jb = lattices::mat_mul(&lattices::mat_mul(&xt, &jg), &x);
    let det = lattices::det(&jb).to_i64().unwrap_or(0);
    let omega = lattices::unstack(&lat.basis);
    let (first, second) = bilinear(&omega, &to_i64(&jb));
    Ok(PeriodMatrix {
        curve: curve.name.to_string(),
        labels: curve.differentials.iter().map(|d| d.label.to_string()).collect(),
        omega,
        genus: m.genus,
        condition: lat.condition,
        monodromy: m,
        cycles,
        basis: (0..2 * g).map(|i| (0..n).map(|r| x[r][i].to_i64().expect("small entry")).collect()).collect(),
        intersection: to_i64(&jb),
        intersection_det: det,
        riemann_first: first,
        riemann_second: second,
    })
}

fn bilinear(omega: &[Vec<Complex64>], j: &[Vec<i64>]) -> (f64, Vec<f64>) {
    let g = omega.len();
    let n = j.len();
    let om = DMatrix::from_fn(g, n, |r, c| omega[r][c]);
    let jm = DMatrix::from_fn(n, n, |r, c| Complex64::new(j[r][c] as f64, 0.0));
    let Some(ji) = jm.try_inverse() else { return (f64::INFINITY, Vec::new()) };
    let first = (&om * &ji * om.transpose()).norm() / om.norm().powi(2);
    let h = (&om * &ji * om.adjoint()) * Complex64::new(0.0, -1.0);
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (first, ev)
}

impl PeriodMatrix {
    pub fn lattice(&self) -> Result<RealLattice> {
        RealLattice::from_complex(&self.omega, &self.curve)
    }

    /// Basis intersection matrix is antisymmetric and unimodular, Ω J⁻¹ Ωᵀ vanishes and −iΩJ⁻¹Ω* is positive.
    pub fn homology_consistent(&self, tol: f64) -> bool {
        let j = &self.intersection;
        let anti = (0..j.len()).all(|a| (0..j.len()).all(|b| j[a][b] == -j[b][a]));
        anti && self.intersection_det == 1 && self.riemann_first < tol && self.riemann_second.iter().all(|&e| e > 0.0)
    }
}

/// Ω_ns for ω_A/4, ω_B/4, ω_C/4, ω_D/4.
pub fn omega_ns(bits: u32, tol: f64) -> Result<PeriodMatrix> {
    period_matrix(&plane_model_xns(), bits, tol, 4.0)
}

/// Periods of η_A/4 = 11dx/y and η_D/4 = (3x − 1)dx/y on the genus-2 quotient.
pub fn omega_genus2(bits: u32, tol: f64) -> Result<PeriodMatrix> {
    period_matrix(&genus2_model(), bits, tol, 4.0)
}

/// Largest change of any cycle period when the quadrature tolerance is divided by 100.
pub fn stability(curve: &PlaneCurve, bits: u32, tol: f64) -> Result<f64> {
    let a = monodromy(curve, bits, tol)?;
    let b = monodromy(curve, bits, tol / 100.0)?;
    let mut worst = 0.0f64;
    for c in schreier_cycles(&a) {
        for (x, y) in a.cycle_periods(&c).iter().zip(b.cycle_periods(&c)) {
            worst = worst.max((x - y).norm());
        }
    }
    Ok(worst)
}

/// Checks that F vanishes on the (T, Z) q_*-series point built by the derivation at `prec`.
pub fn series_check(f: &BiPoly, prec: usize) -> Result<Report> {
    let c = Constants::builtin();
    let (mut report, g) = derive::run(prec, Stage::Trace, &c)?;
    let g = g.ok_or_else(|| Error::Numeric("derivation produced no generators".into()))?;
    let res = eval_series(f, &g.t, &derive::z_coordinate(&g))?;
    report.zero("riemann.series_point", "F(T, Z) = 0 on the q_*-expansions", &res, prec);
    Ok(report)
}

/// Integrates every differential along `path` on each sheet, starting from the fiber `z0` at path(0).
pub fn integrate(
    curve: &PlaneCurve,
    path: &Path,
    z0: &[Complex64],
    tol: f64,
) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
    let mut ig = Integrator { curve, nodes: gauss_legendre(GL_NODES), tol, evaluations: 0 };
    ig.along(path, z0)
}

/// Fiber of the curve over t, sorted by real then imaginary part.
pub fn fiber_at(curve: &PlaneCurve, t: Complex64) -> Vec<Complex64> {
    let mut z = fiber(&curve.f, t);
    z.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let (x, w) = gauss_legendre(GL_NODES);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn permutation_helpers() {
        let p = vec![1, 2, 0, 3];
        assert_eq!(ramification(&p), 2);
        assert_eq!(compose(&p, &inverse(&p)), vec![0, 1, 2, 3]);
        assert!(!is_transitive(std::slice::from_ref(&p), 4));
        assert!(is_transitive(&[p, vec![0, 1, 3, 2]], 4));
    }

    #[test]
    fn xns_plane_model_degree() {
        let f = plane_model_xns().f;
        assert_eq!(f.deg_z(), 6);
        // even in both variables
        for (k, p) in f.c.iter().enumerate() {
            if k % 2 == 1 {
                assert!(p.is_zero());
            }
            for (i, a) in p.0.iter().enumerate() {
                assert!(i % 2 == 0 || *a == 0);
            }
        }
    }
}
