//! Comparison of Ω_ns with Ω_new and the three lattice quotients.

use num_complex::Complex64;
use rug::Integer;
use serde::Serialize;
use xns_core::lattices::{self, Gl8Witness, QuotientReport, RealLattice};
use xns_core::Result;

pub const INTEGRALITY_TOL: f64 = 1e-4;
pub const MAX_DEN: u64 = 1000;

#[derive(Clone, Debug, Serialize)]
pub struct IsomReport {
    pub gl8: Gl8Witness,
    pub new_in_product: QuotientReport,
    pub ns_in_product: QuotientReport,
    pub x_in_ad: QuotientReport,
    /// elementary divisors of the Λ_ns quotient, i.e. the kernel written as ⊕ Z/p^k
    pub kernel: Vec<Integer>,
}

impl IsomReport {
    pub fn passes(&self) -> bool {
        let f = |q: &QuotientReport| lattices::nontrivial(&q.invariant_factors);
        let ints = |v: &[i64]| v.iter().map(|&x| Integer::from(x)).collect::<Vec<_>>();
        Integer::from(self.gl8.det.abs_ref()) == 1
            && self.gl8.residual < INTEGRALITY_TOL
            && f(&self.new_in_product) == ints(&[2, 2, 6, 6])
            && f(&self.ns_in_product) == ints(&[2, 2, 6, 6])
            && f(&self.x_in_ad) == ints(&[3, 3])
            && self.kernel == ints(&[2, 2, 2, 2, 3, 3])
    }
}

/// Writes invariant factors as a product of cyclic groups, e.g. "(Z/2Z)⁴×(Z/3Z)²".
pub fn group_string(factors: &[Integer]) -> String {
    let nt = lattices::nontrivial(factors);
    if nt.is_empty() {
        return "0".into();
    }
    let sup = |k: usize| -> String {
        k.to_string()
            .chars()
            .map(|c| ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'][c.to_digit(10).unwrap() as usize])
            .collect()
    };
    let mut parts = Vec::new();
    let mut i = 0;
    while i < nt.len() {
        let mut j = i;
        while j < nt.len() && nt[j] == nt[i] {
            j += 1;
        }
        let k = j - i;
        parts.push(if k == 1 { format!("Z/{}Z", nt[i]) } else { format!("(Z/{}Z){}", nt[i], sup(k)) });
        i = j;
    }
    parts.join("×")
}

/// `omega_new`, `omega_ns`: rows A, B, C, D. `omega_x`: rows η_A/4, η_D/4. `elliptic`: AGM lattices of A..D.
pub fn compare(
    omega_new: &[Vec<Complex64>],
    omega_ns: &[Vec<Complex64>],
    omega_x: &[Vec<Complex64>],
    elliptic: &[(Complex64, Complex64); 4],
) -> Result<IsomReport> {
    let gl8 = lattices::gl8_check(omega_ns, omega_new, INTEGRALITY_TOL)?;
    let prod = RealLattice::product_of_elliptic(elliptic, "A×B×C×D")?;
    let ad = RealLattice::product_of_elliptic(&[elliptic[0], elliptic[3]], "A×D")?;
    let lnew = RealLattice::from_complex(omega_new, "new")?;
    // the witness signs make Ω_ns and Ω_new row-compatible
    let signed: Vec<Vec<Complex64>> =
        omega_ns.iter().zip(&gl8.signs).map(|(r, &s)| r.iter().map(|z| z * s as f64).collect()).collect();
    let lns = RealLattice::from_complex(&signed, "ns")?;
    let lx = RealLattice::from_complex(omega_x, "X")?;
    let new_in_product = lattices::quotient(&lnew, &prod, INTEGRALITY_TOL, MAX_DEN)?;
    let ns_in_product = lattices::quotient(&lns, &prod, INTEGRALITY_TOL, MAX_DEN)?;
    let x_in_ad = lattices::quotient(&lx, &ad, INTEGRALITY_TOL, MAX_DEN)?;
    let kernel = lattices::elementary_divisors(&ns_in_product.invariant_factors);
    Ok(IsomReport { gl8, new_in_product, ns_in_product, x_in_ad, kernel })
}
