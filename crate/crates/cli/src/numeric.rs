//! Numerical commands: `kernel`, `verify`, `solve`.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use curvesolve::augmented::{cokernel_basis, special_system};
use curvesolve::averaging::{
    b_eta, closed_form_kernel, decay_fit, kernel_table_csv, synthesize_kernel, AveragedKernel, BEta, Weight, WeightKind,
    CLOSED_FORMS,
};
use curvesolve::diffop::{builtin, canonical_name, ScalarTestFunction, TestFunction};
use curvesolve::multipoly::{MultiIndex, RealPoly};
use curvesolve::solve_verify::polar::PolarRule;
use curvesolve::solve_verify::{
    apply_operator_s_with, cokernel_moment, greens_convergence, project_out_cokernel, residual_matches_beta,
    QuadratureSpec, VerificationReport,
};

use crate::commands::{random_points, require_dim};
use crate::config::{parse_vector, SolveConfig};
use crate::{CliError, Global, OpArgs, Output, WeightArgs};

fn vector_arg(flag: &str, s: &str, d: usize) -> Result<Vec<f64>, CliError> {
    let v = parse_vector(s).map_err(|m| CliError::usage(format!("--{flag}: {m}")))?;
    if v.len() != d {
        return Err(CliError::usage(format!("--{flag} needs {d} coordinates, got {}", v.len())));
    }
    Ok(v)
}

fn zoo_name(a: &OpArgs) -> Result<&'static str, CliError> {
    let name = a.op.as_deref().ok_or_else(|| CliError::usage("this command needs a zoo operator via --op"))?;
    canonical_name(name).ok_or_else(|| CliError::Core(curvesolve::Error::UnknownName(name.into())))
}

fn unit(d: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    e
}

pub fn build_weight(
    kind: &str,
    d: usize,
    center: Option<Vec<f64>>,
    radius: f64,
    axis: Option<Vec<f64>>,
    aperture: f64,
    power: u32,
) -> Result<Weight, CliError> {
    Ok(match kind {
        "bogovskii" => Weight::bogovskii(&center.unwrap_or_else(|| vec![0.0; d]), radius, power)?,
        "conic" => Weight::conic(&axis.unwrap_or_else(|| unit(d)), aperture, power)?,
        "uniform" => Weight::uniform_conic(d),
        other => return Err(CliError::usage(format!("unknown weight `{other}` (bogovskii, conic, uniform)"))),
    })
}

fn weight_from_args(w: &WeightArgs, d: usize) -> Result<Weight, CliError> {
    let center = w.center.as_deref().map(|s| vector_arg("center", s, d)).transpose()?;
    let axis = w.axis.as_deref().map(|s| vector_arg("axis", s, d)).transpose()?;
    build_weight(&w.weight, d, center, w.radius, axis, w.aperture, w.power)
}

/// Kernel from the requested source; `auto` prefers the closed form.
fn build_kernel(name: &str, d: usize, w: &Weight, source: &str) -> Result<AveragedKernel, CliError> {
    let closed = match source {
        "closed" => true,
        "ode" => false,
        "auto" => CLOSED_FORMS.contains(&name),
        other => return Err(CliError::usage(format!("unknown kernel source `{other}` (closed, ode, auto)"))),
    };
    Ok(if closed {
        closed_form_kernel(name, w, d)?
    } else {
        synthesize_kernel(&special_system(name, d)?, w)?
    })
}

fn backing(k: &AveragedKernel) -> String {
    format!("{:?}", k.backing)
}

/// Tensor grid over `[lo, hi]^d`, last coordinate varying fastest.
fn grid_points(lo: f64, hi: f64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut x = vec![0.0; d];
            for i in (0..d).rev() {
                x[i] = lo + step * (k % n) as f64;
                k /= n;
            }
            x
        })
        .collect()
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize), CliError> {
    let v = parse_vector(s).map_err(|m| CliError::usage(format!("--grid: {m}")))?;
    if v.len() != 3 || v[2] < 1.0 || v[2].fract() != 0.0 {
        return Err(CliError::usage("--grid expects `lo,hi,n` with a positive integer n"));
    }
    Ok((v[0], v[1], v[2] as usize))
}

#[allow(clippy::too_many_arguments)]
pub fn kernel(
    g: &Global,
    a: &OpArgs,
    wa: &WeightArgs,
    oracle: bool,
    y: Option<&str>,
    grid: &str,
    decay: bool,
    theta: Option<&str>,
) -> Result<Output, CliError> {
    let name = zoo_name(a)?;
    let d = require_dim(a)?;
    builtin(name, d)?;
    let w = weight_from_args(wa, d)?;
    // with an oracle the table itself comes from the ODE synthesis unless a source is forced
    let source = if oracle && wa.source == "auto" { "ode" } else { wa.source.as_str() };
    let k = build_kernel(name, d, &w, source)?;
    let o = if oracle { Some(closed_form_kernel(name, &w, d)?) } else { None };
    let y = match y {
        Some(s) => vector_arg("y", s, d)?,
        None => vec![0.05; d],
    };
    let (lo, hi, n) = parse_grid(grid)?;
    let points: Vec<(Vec<f64>, Vec<f64>)> = grid_points(lo, hi, n, d).into_iter().map(|x| (x, y.clone())).collect();
    let (csv, skipped, worst) = kernel_table_csv(&k, &points, o.as_ref())?;
    let tol = g.tol.unwrap_or(1e-8);
    let mut pass = true;
    let mut report = json!({
        "command": "kernel",
        "operator": name,
        "dim": d,
        "weight": format!("{:?}", w.kind),
        "power": w.power,
        "backing": backing(&k),
        "rows": k.rows,
        "cols": k.cols,
        "y": y,
        "samples": points.len() - skipped,
        "skipped_near_diagonal": skipped,
        "columns": "x1..xd, y1..yd, K_r_c (row r = solution component, column c = data component), then O_r_c oracle columns when requested",
    });
    if let Some(o) = &o {
        pass &= worst <= tol;
        report["oracle"] = json!(backing(o));
        report["max_relative_discrepancy"] = json!(worst);
        report["tolerance"] = json!(tol);
    }
    if decay {
        let th = match theta {
            Some(s) => vector_arg("theta", s, d)?,
            None => (0..d).map(|i| [1.0, 0.37, 0.23, 0.17][i % 4]).collect(),
        };
        let nrm = th.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Err(CliError::usage("--theta must be nonzero"));
        }
        let th: Vec<f64> = th.iter().map(|v| v / nrm).collect();
        let fits = decay_fit(&k, &y, &th);
        let rows: Vec<Value> = fits
            .iter()
            .map(|f| {
                // a row vanishing along the whole ray has no slope to fit
                if !f.slope.is_finite() {
                    return json!({ "row": f.row + 1, "expected": f.expected, "skipped": "row vanishes along the ray" });
                }
                let ok = (f.slope - f.expected).abs() <= 0.05;
                pass &= ok;
                json!({ "row": f.row + 1, "slope": f.slope, "expected": f.expected, "pass": ok })
            })
            .collect();
        report["decay"] = json!(rows);
    }
    report["status"] = json!(if pass { "pass" } else { "fail" });
    Ok(Output { report, csv: Some(csv), exit: if pass { 0 } else { 2 } })
}

/// Smooth test function `φ` with `n` components, each a Gaussian times a linear polynomial.
fn green_phi(d: usize, n: usize) -> TestFunction {
    let mut c = vec![0.1; d];
    c[0] = 0.2;
    let comps = (0..n)
        .map(|j| {
            let mut poly = RealPoly::constant(d, 1.0 + 0.25 * j as f64);
            poly.add_term(MultiIndex::unit(d, j % d), 0.5);
            ScalarTestFunction::gaussian(&c, 0.5, poly)
        })
        .collect();
    TestFunction::from_components(d, comps)
}

fn green_quad(d: usize) -> QuadratureSpec {
    if d == 2 {
        QuadratureSpec { angular: 8, radial: 12, patch_radius: 0.4, ..Default::default() }
    } else {
        QuadratureSpec { angular: 4, radial: 12, patch_radius: 0.4, outer_points: 24, ..Default::default() }
    }
}

fn default_levels(d: usize) -> usize {
    if d == 2 {
        4
    } else {
        3
    }
}

fn green_tol(d: usize) -> f64 {
    if d == 2 {
        1e-6
    } else {
        1e-5
    }
}

fn b_for(name: &str, d: usize, w: &Weight) -> Result<Option<BEta>, CliError> {
    Ok(match w.kind {
        WeightKind::Bogovskii { .. } => Some(b_eta(&special_system(name, d)?, w)?),
        WeightKind::Conic { .. } => None,
    })
}

/// Green's identity residuals at each `y`, with the refinement history.
fn green_study(
    name: &str,
    d: usize,
    k: &AveragedKernel,
    b: Option<&BEta>,
    ys: &[Vec<f64>],
    levels: usize,
    tol: f64,
) -> Result<(VerificationReport, Vec<Value>), CliError> {
    let pstar = special_system(name, d)?.pstar;
    let phi = green_phi(d, k.cols);
    let quad = green_quad(d);
    let studies = ys
        .par_iter()
        .map(|y| greens_convergence(k, &pstar, b, &phi, y, &quad, levels))
        .collect::<curvesolve::Result<Vec<_>>>()?;
    let finest: Vec<f64> = studies.iter().map(|s| s.finest()).collect();
    let rows = ys
        .iter()
        .zip(&studies)
        .map(|(y, s)| {
            json!({ "y": y, "residuals": s.residuals, "ratios": s.ratios, "converges": s.converges(4.0, 1e-9) })
        })
        .collect();
    let rep = VerificationReport::from_residuals(
        "<K(., y), P* phi> + <b(., y), phi> = phi(y)",
        "polar quadrature at the finest level",
        &finest,
        tol,
    );
    Ok((rep, rows))
}

pub fn verify(g: &Global, a: &OpArgs, wa: &WeightArgs, samples: usize, levels: Option<usize>) -> Result<Output, CliError> {
    let name = zoo_name(a)?;
    let d = require_dim(a)?;
    builtin(name, d)?;
    let w = weight_from_args(wa, d)?;
    let k = build_kernel(name, d, &w, &wa.source)?;
    let b = b_for(name, d, &w)?;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let ys = random_points(&mut rng, samples.max(1), d, -1.0, 1.0);
    let levels = levels.unwrap_or_else(|| default_levels(d)).max(1);
    let tol = g.tol.unwrap_or_else(|| green_tol(d));
    let (rep, rows) = green_study(name, d, &k, b.as_ref(), &ys, levels, tol)?;
    let report = json!({
        "command": "verify",
        "operator": name,
        "dim": d,
        "weight": format!("{:?}", w.kind),
        "backing": backing(&k),
        "seed": g.seed,
        "levels": levels,
        "report": rep,
        "samples": rows,
        "status": if rep.passed { "pass" } else { "fail" },
    });
    Ok(Output { report, csv: None, exit: if rep.passed { 0 } else { 2 } })
}

fn data_from_config(c: &SolveConfig, n: usize) -> Result<TestFunction, CliError> {
    let d = c.dim;
    let mut f = TestFunction::zero(d, n);
    for (i, b) in c.bumps.iter().enumerate() {
        if b.component == 0 || b.component > n {
            return Err(CliError::usage(format!("bump {} targets component {} of {n}", i + 1, b.component)));
        }
        let s = ScalarTestFunction::bump(&b.center, b.radius, b.power, RealPoly::constant(d, b.amplitude));
        f.comp_mut(b.component - 1).add_scaled(&s, 1.0);
    }
    Ok(f)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Balls `(centre, radius)` covering the support of `f`.
fn support_balls(f: &TestFunction) -> Vec<(Vec<f64>, f64)> {
    (0..f.components()).flat_map(|k| f.comp(k).support_balls(1e-18)).collect()
}

/// Whether `x` may carry a nonzero solution value for data supported in `balls`.
fn in_support_region(w: &Weight, balls: &[(Vec<f64>, f64)], x: &[f64], margin: f64) -> bool {
    balls.iter().any(|(c, r)| {
        let dx: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
        let dist = norm(&dx);
        if dist <= r + margin {
            return true;
        }
        match &w.kind {
            WeightKind::Bogovskii { center, radius } => (0..=200).any(|i| {
                let s = i as f64 / 200.0;
                let m: Vec<f64> = c.iter().zip(center).map(|(a, b)| a + s * (b - a)).collect();
                let rad = r + s * (radius - r);
                let e: Vec<f64> = x.iter().zip(&m).map(|(a, b)| a - b).collect();
                norm(&e) <= rad + margin
            }),
            WeightKind::Conic { axis, aperture } => {
                let cos = dx.iter().zip(axis).map(|(a, b)| a * b).sum::<f64>() / dist;
                cos.clamp(-1.0, 1.0).acos() <= aperture + (r / dist).min(1.0).asin() + margin
            }
        }
    })
}

fn fmt_row(x: &[f64], u: &[f64]) -> String {
    x.iter().chain(u).map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
}

pub fn solve(g: &Global, path: &Path, project_flag: bool) -> Result<Output, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut c = SolveConfig::from_text(&text)?;
    c.project_cokernel |= project_flag;
    let name = canonical_name(&c.op).ok_or_else(|| CliError::Core(curvesolve::Error::UnknownName(c.op.clone())))?;
    let d = c.dim;
    let p = builtin(name, d)?;
    let w = build_weight(&c.weight, d, c.center.clone(), c.radius, c.axis.clone(), c.aperture, c.power)?;
    let k = build_kernel(name, d, &w, &c.source)?;
    let mut f = data_from_config(&c, k.cols)?;
    let pair_w: Vec<f64> = p.out_weight.iter().map(|x| x.re_f64()).collect();
    let conic = w.is_conic();
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);

    // cokernel moments, removed on request (Bogovskii weights only)
    let basis = cokernel_basis(name, d)?;
    let zs: Vec<Vec<RealPoly>> = basis
        .elements
        .iter()
        .map(|z| z.iter().map(|q| q.to_real()).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::usage("cokernel basis has complex coefficients"))?;
    let moments = |f: &TestFunction| -> Result<Vec<f64>, CliError> {
        zs.iter().map(|z| cokernel_moment(f, z, &pair_w).map_err(CliError::from)).collect()
    };
    let before = moments(&f)?;
    let project = c.project_cokernel && !conic;
    let mut projection = json!({ "requested": c.project_cokernel, "applied": project, "moments_before": before });
    if project {
        let (wc, wr) = match &w.kind {
            WeightKind::Bogovskii { center, radius } => (center.clone(), *radius),
            WeightKind::Conic { .. } => unreachable!("projection is skipped for conic weights"),
        };
        let cc = c.correction_center.clone().unwrap_or(wc);
        let cr = c.correction_radius.unwrap_or(0.7 * wr);
        f = project_out_cokernel(&f, &basis, &pair_w, &cc, cr)?;
        let after = moments(&f)?;
        let worst = after.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        projection["correction_center"] = json!(cc);
        projection["correction_radius"] = json!(cr);
        projection["moments_after"] = json!(after);
        projection["max_moment_after"] = json!(worst);
    } else if c.project_cokernel {
        projection["note"] = json!("conic solution operators have no cokernel obstruction; data left unchanged");
    }

    // solution on the grid
    let rule = PolarRule { angular: c.angular, radial: c.radial, max_panel: c.patch_radius };
    let (lo, hi, n) = c.grid;
    let xs = grid_points(lo, hi, n, d);
    let us = xs
        .par_iter()
        .map(|x| apply_operator_s_with(&k, &f, x, rule))
        .collect::<curvesolve::Result<Vec<_>>>()?;
    let mut head: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    head.extend((1..=k.rows).map(|i| format!("u{i}")));
    let mut csv = head.join(",");
    csv.push('\n');
    for (x, u) in xs.iter().zip(&us) {
        csv.push_str(&fmt_row(x, u));
        csv.push('\n');
    }

    // P(Sf) − f against the predicted −∫ b f (zero after projection or for conic weights)
    let b = b_for(name, d, &w)?;
    let b_used = if project || conic { None } else { b.as_ref() };
    let res_pts = random_points(&mut rng, c.residual_samples, d, lo, hi);
    let residual = residual_matches_beta(&k, &p, b_used, &f, &res_pts, c.fd_step, rule, c.residual_tol)?;

    // weak Green's identity
    let ys = random_points(&mut rng, c.green_samples, d, -1.0, 1.0);
    let gtol = c.green_tol.or(g.tol).unwrap_or_else(|| green_tol(d));
    let (green, green_rows) = if ys.is_empty() {
        (VerificationReport::from_residuals("green", "none", &[], gtol), Vec::new())
    } else {
        green_study(name, d, &k, b.as_ref(), &ys, default_levels(d), gtol)?
    };

    // support containment on the grid
    let balls = support_balls(&f);
    let outside: Vec<f64> = xs
        .iter()
        .zip(&us)
        .filter(|(x, _)| !in_support_region(&w, &balls, x, 0.05))
        .map(|(_, u)| u.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    let support = VerificationReport::from_residuals(
        "u = 0 outside the support hull",
        if conic { "data support plus the cap cone" } else { "convex hull of data support and weight ball" },
        &outside,
        c.support_tol,
    );

    let moments_ok = !project || projection["max_moment_after"].as_f64().is_some_and(|m| m <= 1e-11);
    let pass = residual.passed && green.passed && support.passed && moments_ok;
    let report = json!({
        "command": "solve",
        "config": c,
        "seed": g.seed,
        "operator": name,
        "backing": backing(&k),
        "grid_points": xs.len(),
        "cokernel": projection,
        "residual": residual,
        "residual_points": res_pts,
        "green": green,
        "green_samples": green_rows,
        "support": support,
        "status": if pass { "pass" } else { "fail" },
    });
    Ok(Output { report, csv: Some(csv), exit: if pass { 0 } else { 2 } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_lexicographic() {
        let g = grid_points(0.0, 1.0, 3, 2);
        assert_eq!(g.len(), 9);
        assert_eq!(g[1], vec![0.0, 0.5]);
        assert_eq!(g[3], vec![0.5, 0.0]);
    }

    #[test]
    fn support_region_shapes() {
        let w = Weight::bogovskii(&[0.0, 0.0], 0.5, 8).unwrap();
        let balls = vec![(vec![1.0, 0.0], 0.2)];
        assert!(in_support_region(&w, &balls, &[0.6, 0.0], 0.0));
        assert!(!in_support_region(&w, &balls, &[0.6, 0.6], 0.0));
        let cone = Weight::conic(&[1.0, 0.0], 0.3, 8).unwrap();
        assert!(in_support_region(&cone, &balls, &[3.0, 0.1], 0.0));
        assert!(!in_support_region(&cone, &balls, &[-1.0, 0.0], 0.0));
    }
}
