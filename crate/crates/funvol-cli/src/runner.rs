//! Experiment dispatch and result serialization.

use crate::spec::{ExperimentDef, ExperimentSpec};
use anyhow::{anyhow, bail, Context};
use funvol::quad::BoxDomain;
use funvol::valuation::{self, KubotaConfig};
use funvol::{abel, density, measure};
use funvol::nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// One experiment outcome. `passed` is set only for assertion-type
/// experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub id: String,
    pub operation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub value: f64,
    pub stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    pub seconds: f64,
    pub config: ExperimentDef,
}

/// Defaults applied when an experiment omits a parameter.
#[derive(Debug, Clone, Copy)]
pub struct RunDefaults {
    pub seed: u64,
    pub sample_count: usize,
}

fn default_resolution_for(n: usize) -> usize {
    measure::default_resolution(n)
}

pub fn run_experiment(
    def: &ExperimentDef,
    base: &Path,
    defaults: &RunDefaults,
) -> anyhow::Result<ExperimentResult> {
    let start = Instant::now();
    let seed = def.seed.unwrap_or(defaults.seed);
    let samples = def.sample_count.unwrap_or(defaults.sample_count);

    let density = || -> anyhow::Result<density::Density> {
        let r = def
            .density
            .as_ref()
            .ok_or_else(|| anyhow!("experiment {:?} needs a density", def.id))?;
        crate::spec::resolve_density(r, base)
    };
    let function = || -> anyhow::Result<funvol::convex::ConvexFunction> {
        let r = def
            .function
            .as_ref()
            .ok_or_else(|| anyhow!("experiment {:?} needs a function", def.id))?;
        crate::spec::resolve_function(r, base)
    };
    let need_j = || {
        def.j
            .ok_or_else(|| anyhow!("experiment {:?} needs j", def.id))
    };
    let need_n = || {
        def.n
            .ok_or_else(|| anyhow!("experiment {:?} needs n", def.id))
    };
    let need_t = || {
        def.t
            .ok_or_else(|| anyhow!("experiment {:?} needs t", def.id))
    };

    let mut result = ExperimentResult {
        id: def.id.clone(),
        operation: def.operation.clone(),
        j: def.j,
        n: def.n,
        value: 0.0,
        stderr: 0.0,
        oracle: def.expect.map(|e| e.oracle),
        discrepancy: None,
        tolerance: def.expect.map(|e| e.tolerance),
        passed: None,
        seconds: 0.0,
        config: def.clone(),
    };

    match def.operation.as_str() {
        "eval_density" => {
            result.value = density()?.eval(need_t()?)?;
        }
        "unit_ball_volume" => {
            result.value = density::unit_ball_volume(need_j()?);
        }
        "check_hadwiger_class" => {
            let zeta = density()?;
            let rep = density::check_hadwiger_class(
                &zeta,
                need_j()?,
                need_n()?,
                &density::default_class_sequence(&zeta),
            )?;
            result.value = if rep.member { 1.0 } else { 0.0 };
        }
        "zeta_to_alpha_eval" => {
            let alpha = density::zeta_to_alpha(&density()?, need_j()?, need_n()?)?;
            result.value = alpha.eval_at(need_t()?)?;
        }
        "abel_eval" => {
            result.value = abel::abel_eval(&density()?, need_t()?)?;
        }
        "abel_k_eval" => {
            let k = def.k.ok_or_else(|| anyhow!("abel_k_eval needs k"))?;
            result.value = abel::abel_k_eval(&density()?, k, need_t()?)?;
        }
        "abel2_eval" => {
            let out = abel::abel2_closed_form(&density()?)?;
            result.value = out.eval_at(need_t()?)?;
        }
        "inverse_abel_eval" => {
            result.value = abel::inverse_abel_eval(&density()?, need_t()?)?;
        }
        "abel_round_trip" => {
            let zeta = density()?;
            let forward = abel::abel(&zeta)?;
            let back = abel::inverse_abel(&forward)?;
            let support = zeta.support_upper();
            let mut sup_err: f64 = 0.0;
            for k in 0..200 {
                let s = support * (0.05 + 0.90 * k as f64 / 199.0);
                sup_err = sup_err.max((back.eval(s)? - zeta.eval(s)?).abs());
            }
            result.value = sup_err;
            result.oracle = Some(0.0);
            result.discrepancy = Some(sup_err);
            let tol = def.expect.map(|e| e.tolerance).unwrap_or(1e-4);
            result.tolerance = Some(tol);
            result.passed = Some(sup_err < tol);
        }
        "hadwiger_transport" => {
            let zeta = density()?;
            let (j, n) = (need_j()?, need_n()?);
            let pre = density::check_hadwiger_class(
                &zeta,
                j,
                n,
                &density::default_class_sequence(&zeta),
            )?;
            let transported = abel::abel(&zeta)?;
            let post = density::check_hadwiger_class(
                &transported,
                j,
                n - 1,
                &density::default_class_sequence(&transported),
            )?;
            let ok = pre.member && post.member;
            result.value = if ok { 1.0 } else { 0.0 };
            result.oracle = Some(1.0);
            result.discrepancy = Some(1.0 - result.value);
            result.tolerance = Some(0.5);
            result.passed = Some(ok);
        }
        "fiv_direct" => {
            let u = function()?;
            let res = def.resolution.unwrap_or(default_resolution_for(u.dim()));
            let rep = valuation::fiv_direct(&u, need_j()?, &density()?, res)?;
            result.value = rep.value;
            result.n = Some(u.dim());
        }
        "fiv_measure" => {
            let u = function()?;
            let res = def.resolution.unwrap_or(default_resolution_for(u.dim()));
            let rep = valuation::fiv_measure(&u, need_j()?, &density()?, res)?;
            result.value = rep.value;
            result.n = Some(u.dim());
        }
        "fiv_kubota" => {
            let u = function()?;
            let mut cfg = KubotaConfig::new(need_j()?, samples, seed);
            if let Some(res) = def.resolution {
                cfg.inner_points = res;
            }
            let rep = valuation::fiv_kubota(&u, &density()?, &cfg)?;
            result.value = rep.value;
            result.stderr = rep.stderr;
            result.n = Some(u.dim());
        }
        "cross_route" => {
            let u = function()?;
            let zeta = density()?;
            let j = need_j()?;
            let res = def.resolution.unwrap_or(default_resolution_for(u.dim()));
            let direct = valuation::fiv_direct(&u, j, &zeta, res)?;
            let cfg = KubotaConfig::new(j, samples, seed);
            let kubota = valuation::fiv_kubota(&u, &zeta, &cfg)?;
            let gap = (kubota.value - direct.value).abs();
            let bound = (3.0 * kubota.stderr).max(0.02 * direct.value.abs());
            result.value = kubota.value;
            result.stderr = kubota.stderr;
            result.oracle = Some(direct.value);
            result.discrepancy = Some(gap);
            result.tolerance = Some(bound);
            result.passed = Some(gap <= bound);
            result.n = Some(u.dim());
        }
        "cone_identity" => {
            let (n, j, t) = (need_n()?, need_j()?, need_t()?);
            let zeta = density()?;
            let alpha = density::zeta_to_alpha(&zeta, j, n)?;
            let u = funvol::convex::ConvexFunction::cone_t(n, t);
            let cfg = KubotaConfig::new(j, samples.min(256), seed);
            let rep = valuation::fiv_kubota(&u, &zeta, &cfg)?;
            let expected = valuation::kubota_prefactor(n, j)
                * valuation::cone_alpha_identity(t, j, &alpha)?;
            let rel = (rep.value - expected).abs() / expected.abs().max(1e-300);
            result.value = rep.value;
            result.stderr = rep.stderr;
            result.oracle = Some(expected);
            result.discrepancy = Some(rel);
            let tol = def.expect.map(|e| e.tolerance).unwrap_or(1e-9);
            result.tolerance = Some(tol);
            result.passed = Some(rel < tol && rep.stderr == 0.0);
        }
        "monge_ampere_pl" => {
            let u = function()?;
            let pl = measure::SeparablePiecewiseLinear::from_convex(&u)?;
            let region = match &def.region {
                Some(b) => BoxDomain::new(b.lo.clone(), b.hi.clone()),
                None => BoxDomain::new(vec![-1e6; u.dim()], vec![1e6; u.dim()]),
            };
            let mu = measure::monge_ampere_pl(&pl, &region)?;
            result.value = mu.total_mass();
            result.n = Some(u.dim());
        }
        "conjugate_transport" => {
            let u = function()?;
            let res = def.resolution.unwrap_or(512);
            let rep = measure::conjugate_transport(&u, need_j()?, res)?;
            result.value = rep.max_abs_discrepancy;
            result.oracle = Some(0.0);
            result.discrepancy = Some(rep.max_abs_discrepancy);
            let tol = def.expect.map(|e| e.tolerance).unwrap_or(1e-4);
            result.tolerance = Some(tol);
            result.passed = Some(rep.max_abs_discrepancy < tol);
            result.n = Some(u.dim());
        }
        "product_decomposition" => {
            let v_e = function()?;
            let v_f = crate::spec::resolve_function(
                def.function2
                    .as_ref()
                    .ok_or_else(|| anyhow!("product_decomposition needs function2"))?,
                base,
            )?;
            let l = def.l.ok_or_else(|| anyhow!("product_decomposition needs l"))?;
            let n = v_e.dim() + v_f.dim();
            let b = match &def.region {
                Some(b) => BoxDomain::new(b.lo.clone(), b.hi.clone()),
                None => BoxDomain::new(vec![-1.0; n], vec![1.0; n]),
            };
            let res = def.resolution.unwrap_or(default_resolution_for(n));
            let rep = measure::product_decomposition_check(&v_e, &v_f, l, &b, res)?;
            result.value = rep.lhs;
            result.oracle = Some(rep.rhs);
            result.discrepancy = Some(rep.rel_discrepancy);
            let tol = def.expect.map(|e| e.tolerance).unwrap_or(0.01);
            result.tolerance = Some(tol);
            result.passed = Some(rep.rel_discrepancy < tol);
            result.n = Some(n);
            result.j = Some(l);
        }
        "lower_dim_extension" => {
            let inner = function()?;
            let n = need_n()?;
            let axes = def
                .axes
                .as_ref()
                .ok_or_else(|| anyhow!("lower_dim_extension needs axes"))?;
            let e = funvol::geometry::Subspace::coordinate(n, axes);
            let res = def.resolution.unwrap_or(default_resolution_for(n));
            let rep = measure::lower_dim_extension_check(&inner, &e, need_j()?, &density()?, res)?;
            result.value = rep.ambient_integral;
            result.oracle = Some(rep.restricted_integral);
            let rel = rep.abs_discrepancy / rep.restricted_integral.abs().max(1e-12);
            result.discrepancy = Some(rel);
            let tol = def.expect.map(|e| e.tolerance).unwrap_or(0.01);
            result.tolerance = Some(tol);
            result.passed = Some(rel < tol);
            result.n = Some(n);
        }
        "sigma_from_xi" => {
            let zeta = density()?;
            let z = def
                .z
                .as_ref()
                .ok_or_else(|| anyhow!("sigma_from_xi needs z"))?;
            let (n, j) = (need_n()?, need_j()?);
            let zv = DVector::from_column_slice(z);
            result.value = valuation::sigma_from_xi(
                |x: &DVector<f64>| zeta.eval_unchecked(x.norm()),
                n,
                j,
                &zv,
            )?;
        }
        "eval_function" => {
            let u = function()?;
            let x = def
                .x
                .as_ref()
                .ok_or_else(|| anyhow!("eval_function needs x"))?;
            result.value = u.evaluate(&DVector::from_column_slice(x));
            result.n = Some(u.dim());
        }
        other => bail!("unknown operation {other:?} in experiment {:?}", def.id),
    }

    // Generic expectation check for value-producing operations.
    if let (Some(expect), None) = (def.expect, result.passed) {
        let gap = (result.value - expect.oracle).abs();
        result.oracle = Some(expect.oracle);
        result.discrepancy = Some(gap);
        result.tolerance = Some(expect.tolerance);
        result.passed = Some(gap <= expect.tolerance);
    }
    result.seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Run all experiments (concurrently when a rayon pool is configured),
/// writing one JSON artifact per experiment atomically.
pub fn run_spec(
    spec: &ExperimentSpec,
    base: &Path,
    out_dir: &Path,
    defaults: &RunDefaults,
) -> anyhow::Result<Vec<ExperimentResult>> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    use rayon::prelude::*;
    let results: Vec<anyhow::Result<ExperimentResult>> = spec
        .experiments
        .par_iter()
        .map(|def| {
            let result = run_experiment(def, base, defaults)?;
            write_json_atomic(out_dir, &format!("{}.json", def.id), &result)?;
            Ok(result)
        })
        .collect();
    results.into_iter().collect()
}

pub fn write_json_atomic<T: Serialize>(dir: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(&tmp, text).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, &path)
        .with_context(|| format!("cannot move result into place at {}", path.display()))?;
    Ok(())
}

/// Floating-point CSV field with 17 significant digits (round-trip exact).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write the aggregate CSV (single writer, spec order). Columns are fixed:
/// id, operation, j, n, value, stderr, oracle, discrepancy.
pub fn write_csv(path: &Path, results: &[ExperimentResult]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create CSV at {}", path.display()))?;
    writer.write_record(["id", "operation", "j", "n", "value", "stderr", "oracle", "discrepancy"])?;
    for r in results {
        writer.write_record([
            r.id.clone(),
            r.operation.clone(),
            r.j.map(|v| v.to_string()).unwrap_or_default(),
            r.n.map(|v| v.to_string()).unwrap_or_default(),
            fmt_float(r.value),
            fmt_float(r.stderr),
            r.oracle.map(fmt_float).unwrap_or_default(),
            r.discrepancy.map(fmt_float).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
