//! Maximal augmented system (all jets of order below `N0`) read off a certificate.

use num_traits::One;

use super::AugmentedSystem;
use crate::diffop::DiffOperator;
use crate::error::{Error, Result};
use crate::fc_cert::{pstar_symbol, verify_certificate, FcCertificate};
use crate::multipoly::{monomial_basis, GaussianRational, MultiIndex};

type G = GaussianRational;

/// Builds the system on jet variables `Φ_{(α,J)} = ∂^α φ_J`, `|α| ≤ N0 − 1`.
///
/// Below the top order the rows are pure shifts. For `|α| = N0 − 1` and
/// `β = α + e_i`, substituting `ξ → −i∂` in `ξ^β = Σ_K g_β[J,K] p*[K,·]`
/// gives `∂^β φ_J = Σ_{K,μ} i^{m_K} g_{β,J,K,μ} ∂^μ (P*_prin φ)_K`. Lower-order
/// parts of `P*` are moved to the `B` side via `P*_prin = P* − P*_low`.
pub fn maximal_from_certificate(p: &DiffOperator, cert: &FcCertificate) -> Result<AugmentedSystem> {
    let ps = pstar_symbol(p);
    if !verify_certificate(cert, &ps) {
        return Err(Error::CertificateMismatch(format!(
            "certificate (N0 = {}) does not verify against the symbol of {}",
            cert.n0, p.name
        )));
    }
    let pstar = p.adjoint();
    let d = p.d;
    let r0 = pstar.s0;
    let n0 = cert.n0;
    if n0 == 0 {
        return Err(Error::Unsupported("N0 = 0 certificates (order-zero invertible symbols) have no jets".into()));
    }
    let m = pstar.row_orders();
    let mut sys = AugmentedSystem::empty(&format!("{}:maximal", p.name), pstar.clone());
    let mut index = std::collections::BTreeMap::new();
    for k in 0..n0 {
        for alpha in monomial_basis(d, k) {
            for j in 0..r0 {
                let label = format!("{}{}", pstar.in_labels[j], jet_suffix(&alpha));
                let a = sys.push_var(label, -(k as i64), vec![(alpha.clone(), j, G::one())]);
                index.insert((alpha.clone(), j), a);
                if k == 0 {
                    sys.primary[j] = a;
                }
            }
        }
    }
    let lower: Vec<(MultiIndex, usize, usize, G)> = pstar
        .terms()
        .filter(|(a, k, _, _)| a.order() < m[*k])
        .map(|(a, k, j, c)| (a.clone(), k, j, c.clone()))
        .collect();
    for ((alpha, j), &a) in &index {
        for i in 0..d {
            let beta = alpha.raised(i);
            if alpha.order() + 1 < n0 {
                sys.add_b(i, a, index[&(beta, *j)], G::one());
                continue;
            }
            let g = &cert.g[&beta];
            for (row, k, mu, v) in g.iter() {
                if row != *j {
                    continue;
                }
                let c = v * &G::i_pow(m[k] as i64);
                sys.add_c(i, a, mu.clone(), k, c.clone());
                for (nu, lk, jp, lc) in &lower {
                    if *lk != k {
                        continue;
                    }
                    let target = mu.add(nu);
                    let Some(&ap) = index.get(&(target.clone(), *jp)) else {
                        return Err(Error::Invalid(format!(
                            "lower-order term produces a jet {target} of order >= N0"
                        )));
                    };
                    sys.add_b(i, a, ap, -(&c * lc));
                }
            }
        }
    }
    sys.check_grading()?;
    Ok(sys)
}

fn jet_suffix(alpha: &MultiIndex) -> String {
    if alpha.order() == 0 {
        return String::new();
    }
    let mut s = String::from("_d");
    for (i, &e) in alpha.0.iter().enumerate() {
        for _ in 0..e {
            s.push_str(&(i + 1).to_string());
        }
    }
    s
}
