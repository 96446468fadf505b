//! Symbolic commands: `fc`, `augment`, `cokernel`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use curvesolve::augmented::{
    cokernel_basis, is_completely_integrable, maximal_from_certificate, special_system, AugmentedSystem, BField,
};
use curvesolve::diffop::{builtin, canonical_name};
use curvesolve::fc_cert::{decide_fc, default_n0_max, pstar_symbol, verify_certificate, FcVerdict};
use curvesolve::DiffOperator;

use crate::expr::{format_exact, parse_poly};
use crate::{CliError, Global, OpArgs, Output};

/// An operator together with its zoo name when it came from the zoo.
pub struct LoadedOp {
    pub op: DiffOperator,
    pub zoo: Option<&'static str>,
}

pub fn require_dim(a: &OpArgs) -> Result<usize, CliError> {
    a.dim.ok_or_else(|| CliError::usage("--dim is required with --op"))
}

pub fn load_op(a: &OpArgs) -> Result<LoadedOp, CliError> {
    match (&a.op, &a.op_file) {
        (Some(name), _) => {
            let d = require_dim(a)?;
            let canon = canonical_name(name).ok_or_else(|| CliError::Core(curvesolve::Error::UnknownName(name.clone())))?;
            Ok(LoadedOp { op: builtin(canon, d)?, zoo: Some(canon) })
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let op = DiffOperator::from_text(&text)?;
            if let Some(d) = a.dim {
                if d != op.d {
                    return Err(CliError::usage(format!("--dim {d} disagrees with dim {} in {}", op.d, path.display())));
                }
            }
            Ok(LoadedOp { op, zoo: None })
        }
        (None, None) => Err(CliError::usage("one of --op or --op-file is required")),
    }
}

/// Uniform points in `[lo, hi]^d` drawn from `rng`.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(lo..hi)).collect()).collect()
}

fn n0_cap(g: &Global, ps: &curvesolve::multipoly::HomPolyMatrix) -> u32 {
    g.n0_max.unwrap_or_else(|| default_n0_max(ps))
}

pub fn fc(g: &Global, a: &OpArgs, trials: usize) -> Result<Output, CliError> {
    let LoadedOp { op, .. } = load_op(a)?;
    let ps = pstar_symbol(&op);
    let n0_max = n0_cap(g, &ps);
    let mut report = json!({
        "command": "fc",
        "operator": op.name,
        "dim": op.d,
        "rows": op.r0,
        "cols": op.s0,
        "seed": g.seed,
        "trials": trials,
        "n0_max": n0_max,
    });
    let exit = match decide_fc(&ps, n0_max, trials, g.seed) {
        FcVerdict::Certified(cert) => {
            report["status"] = json!("certified");
            report["n0"] = json!(cert.n0);
            report["certificate_verified"] = json!(verify_certificate(&cert, &ps));
            report["certificate"] = json!(cert.to_text());
            0
        }
        FcVerdict::Falsified(w) => {
            report["status"] = json!("falsified");
            report["witness"] = json!({
                "xi": w.xi.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "kernel_vector": w.phi.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "residual": w.residual,
                "exact": w.exact,
            });
            2
        }
        FcVerdict::Inconclusive { n0_max } => {
            report["status"] = json!("inconclusive");
            report["reason"] = json!(format!("no certificate with N0 <= {n0_max} and no exact witness"));
            3
        }
    };
    Ok(Output { report, csv: None, exit })
}

/// Splits at `sep` outside parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Entries `(direction, row, column, polynomial)` with 0-based indices.
type LowerOrder = Vec<(usize, usize, usize, curvesolve::multipoly::RealPoly)>;

/// Parses `B=(e1,…,ed)` (one variable) or `Bi[a,b]=expr; …` (indices from 1).
fn parse_lower_order(spec: &str, d: usize, n: usize) -> Result<LowerOrder, CliError> {
    let bad = |m: String| CliError::usage(format!("--lower-order: {m}"));
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("B=").or_else(|| spec.strip_prefix("B =")) {
        if n != 1 {
            return Err(bad(format!("the `B=(...)` shorthand needs a single variable, the system has {n}")));
        }
        let inner = rest.trim();
        let inner = inner
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| bad("expected `B=(e1, ..., ed)`".into()))?;
        let parts = split_top(inner, ',');
        if parts.len() != d {
            return Err(bad(format!("expected {d} entries, found {}", parts.len())));
        }
        return parts
            .iter()
            .enumerate()
            .map(|(i, p)| parse_poly(p, d).map(|q| (i, 0, 0, q)).map_err(&bad))
            .collect();
    }
    let mut out = Vec::new();
    for item in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (lhs, rhs) = item.split_once('=').ok_or_else(|| bad(format!("`{item}` lacks `=`")))?;
        let lhs = lhs.trim();
        let body = lhs.strip_prefix('B').ok_or_else(|| bad(format!("`{lhs}` must start with B")))?;
        let (dir, idx) = body.split_once('[').ok_or_else(|| bad(format!("`{lhs}` must look like Bi[a,b]")))?;
        let idx = idx.strip_suffix(']').ok_or_else(|| bad(format!("`{lhs}` must end with `]`")))?;
        let (ra, rb) = idx.split_once(',').ok_or_else(|| bad(format!("`{lhs}` needs two indices")))?;
        let num = |t: &str, max: usize, what: &str| -> Result<usize, CliError> {
            match t.trim().parse::<usize>() {
                Ok(k) if (1..=max).contains(&k) => Ok(k - 1),
                _ => Err(bad(format!("{what} index `{}` must lie in 1..={max}", t.trim()))),
            }
        };
        let i = num(dir, d, "direction")?;
        let a = num(ra, n, "row")?;
        let b = num(rb, n, "column")?;
        out.push((i, a, b, parse_poly(rhs, d).map_err(&bad)?));
    }
    if out.is_empty() {
        return Err(bad("no entries".into()));
    }
    Ok(out)
}

fn install_lower_order(sys: &mut AugmentedSystem, entries: LowerOrder) {
    let base = sys.b_const_real();
    let f: BField = Arc::new(move |x: &[f64]| {
        let mut b = base.clone();
        for (i, a, c, p) in &entries {
            b[*i][(*a, *c)] = p.eval(x);
        }
        b
    });
    sys.b_field = Some(f);
}

pub fn augment(
    g: &Global,
    special: Option<&str>,
    maximal: bool,
    a: &OpArgs,
    lower_order: Option<&str>,
    samples: usize,
    trials: usize,
) -> Result<Output, CliError> {
    let (mut sys, zoo, n0_cert) = match (special, maximal) {
        (Some(name), false) => {
            let d = require_dim(a)?;
            let canon = canonical_name(name).ok_or_else(|| CliError::Core(curvesolve::Error::UnknownName(name.into())))?;
            (special_system(canon, d)?, Some(canon), None)
        }
        (None, true) => {
            let LoadedOp { op, zoo } = load_op(a)?;
            let ps = pstar_symbol(&op);
            match decide_fc(&ps, n0_cap(g, &ps), trials, g.seed) {
                FcVerdict::Certified(cert) => {
                    let n0 = cert.n0;
                    (maximal_from_certificate(&op, &cert)?, zoo, Some(n0))
                }
                FcVerdict::Falsified(_) => {
                    return Err(CliError::Refused { code: 2, reason: "FC is falsified; no augmented system exists".into() })
                }
                FcVerdict::Inconclusive { n0_max } => {
                    return Err(CliError::Refused {
                        code: 3,
                        reason: format!("FC inconclusive up to N0 = {n0_max}; refusing to build a maximal system"),
                    })
                }
            }
        }
        _ => return Err(CliError::usage("choose exactly one of --special NAME or --maximal")),
    };
    if let Some(spec) = lower_order {
        let entries = parse_lower_order(spec, sys.d, sys.len())?;
        install_lower_order(&mut sys, entries);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let pts = random_points(&mut rng, samples.max(1), sys.d, -1.0, 1.0);
    let integ = is_completely_integrable(&sys, &pts);
    let vars: Vec<Value> =
        sys.vars.iter().zip(&sys.degree).map(|(v, deg)| json!({ "label": v, "degree": deg })).collect();
    let mut report = json!({
        "command": "augment",
        "system": sys.name,
        "dim": sys.d,
        "num_vars": sys.len(),
        "vars": vars,
        "n0": n0_cert.unwrap_or_else(|| sys.n0()),
        "r0": sys.r0(),
        "seed": g.seed,
        "curvature_samples": pts.len(),
        "integrable": integ.integrable,
        "max_curvature": integ.max_curvature,
        "system_text": sys.to_text(),
    });
    if let Some(spec) = lower_order {
        report["lower_order"] = json!(spec);
    }
    if integ.integrable {
        report["cokernel_dim_bound"] = json!(sys.len());
        if let (Some(name), None) = (zoo, lower_order) {
            if let Ok(basis) = cokernel_basis(name, sys.d) {
                report["cokernel_dim"] = json!(basis.len());
            }
        }
    } else {
        report["note"] = json!("cokernel trivial; use conic construction or external special solution");
    }
    Ok(Output { report, csv: None, exit: 0 })
}

pub fn cokernel(a: &OpArgs) -> Result<Output, CliError> {
    let name = a.op.as_deref().ok_or_else(|| CliError::usage("cokernel needs --op NAME"))?;
    let basis = cokernel_basis(name, require_dim(a)?)?;
    let annihilated = basis.annihilated()?;
    let rank = basis.rank();
    let elements: Vec<Vec<String>> = basis.elements.iter().map(|z| z.iter().map(format_exact).collect()).collect();
    let ok = annihilated && rank == basis.len();
    let report = json!({
        "command": "cokernel",
        "operator": basis.name,
        "dim": basis.d,
        "dimension": basis.len(),
        "rank": rank,
        "annihilated": annihilated,
        "labels": basis.labels,
        "elements": elements,
        "status": if ok { "pass" } else { "fail" },
    });
    Ok(Output { report, csv: None, exit: if ok { 0 } else { 2 } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_order_forms() {
        let s = parse_lower_order("B=(0, (x1 + 1)*x2)", 2, 1).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[1].3.eval(&[1.0, 2.0]) - 4.0).abs() < 1e-15);
        let g = parse_lower_order("B2[1,3]=x1; B1[2,2] = -1", 2, 3).unwrap();
        assert_eq!((g[0].0, g[0].1, g[0].2), (1, 0, 2));
        assert!(parse_lower_order("B=(0,x1)", 2, 3).is_err());
        assert!(parse_lower_order("B3[1,1]=x1", 2, 1).is_err());
        assert!(parse_lower_order("B=(x1)", 2, 1).is_err());
    }

    #[test]
    fn lower_order_curvature_is_one() {
        let mut sys = special_system("divergence", 2).unwrap();
        install_lower_order(&mut sys, parse_lower_order("B=(0,x1)", 2, 1).unwrap());
        let r = is_completely_integrable(&sys, &[vec![0.3, 0.2], vec![-0.5, 0.9]]);
        assert!(!r.integrable);
        assert!((r.max_curvature - 1.0).abs() < 1e-8);
    }
}
