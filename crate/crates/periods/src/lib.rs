//! Numerical periods of the curves attached to X_ns(11) and X_0(121).
//!
//! [`msym`] integrates the four level-121 newforms along modular symbols, [`riemann`]
//! computes period matrices of plane curves by monodromy and contour integration, and
//! [`poly`] holds the exact and numerical polynomial tools both rely on. [`isom`] compares
//! the resulting period lattices.

#![allow(clippy::needless_range_loop)]

pub mod isom;
pub mod msym;
pub mod poly;
pub mod riemann;

use num_complex::Complex64;
use serde::Serialize;

/// Position of a complex number relative to the lattice Zω₁ + Zω₂.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Membership {
    pub m: i64,
    pub n: i64,
    /// |v − (mω₁ + nω₂)| / max(|v|, |ω₁|)
    pub rel_error: f64,
}

pub fn lattice_membership(v: Complex64, w: (Complex64, Complex64)) -> Membership {
    let (w1, w2) = w;
    let det = w1.re * w2.im - w1.im * w2.re;
    let x = (v.re * w2.im - v.im * w2.re) / det;
    let y = (w1.re * v.im - w1.im * v.re) / det;
    let (m, n) = (x.round(), y.round());
    let err = (v - w1 * m - w2 * n).norm() / v.norm().max(w1.norm());
    Membership { m: m as i64, n: n as i64, rel_error: err }
}

/// AGM lattices of E_A, E_B, E_C, E_D in that order.
pub fn elliptic_lattices() -> xns_core::Result<[(Complex64, Complex64); 4]> {
    let mut out = [(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); 4];
    for (o, l) in out.iter_mut().zip(msym::LABELS) {
        *o = xns_core::ellmaps::agm_lattice_f64(&msym::curve(l)?)?;
    }
    Ok(out)
}
