//! Functional intrinsic volumes by direct Hessian-integral quadrature, by
//! Hessian-measure integration, and by Cauchy-Kubota Grassmannian
//! averaging, together with the cone-function closed form, the
//! central-projection density formula, and the valuation-axiom harness.

use crate::convex::{self, ConvexFunction, Shape};
use crate::density::{
    check_hadwiger_class, default_class_sequence, unit_ball_volume, zeta_to_alpha, Density,
};
use crate::error::{Error, Result};
use crate::geometry::Subspace;
use crate::measure;
use crate::quad::BoxDomain;
use crate::rng::CounterRng;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// `kappa_n / (kappa_j kappa_(n-j)) * C(n, j)`: the Cauchy-Kubota
/// prefactor (the flag coefficient of the representation theorem).
pub fn kubota_prefactor(n: usize, j: usize) -> f64 {
    unit_ball_volume(n) / (unit_ball_volume(j) * unit_ball_volume(n - j)) * binomial(n, j)
}

/// Configuration of a Grassmannian Monte Carlo run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KubotaConfig {
    pub j: usize,
    pub sample_count: usize,
    pub rng_seed: u64,
    /// Midpoint nodes per axis for the inner integrals.
    pub inner_points: usize,
    /// Tolerance forwarded to fiber minimizations of lazy projections.
    pub fiber_tol: f64,
}

impl KubotaConfig {
    pub fn new(j: usize, sample_count: usize, rng_seed: u64) -> Self {
        KubotaConfig {
            j,
            sample_count,
            rng_seed,
            inner_points: 128,
            fiber_tol: convex::FIBER_TOL,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.j > n {
            return Err(Error::precondition(format!(
                "kubota config needs 0 <= j <= n, got j={}, n={n}",
                self.j
            )));
        }
        if self.sample_count == 0 {
            return Err(Error::precondition("kubota config needs sample_count >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Direct,
    Kubota,
    Measure,
}

/// Result of a functional-intrinsic-volume computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValuationReport {
    pub value: f64,
    /// Monte Carlo standard error; exactly zero for deterministic routes.
    pub stderr: f64,
    pub route: Route,
    pub j: usize,
    pub n: usize,
    pub samples: usize,
}

fn require_class(zeta: &Density, j: usize, n: usize) -> Result<()> {
    let report = check_hadwiger_class(zeta, j, n, &default_class_sequence(zeta))?;
    if !report.member {
        return Err(Error::precondition(format!(
            "density is not in Had({j},{n}): moment limit {}, tail divergent: {}",
            report.limit_moment_zero, report.diagnostics.tail_divergent
        )));
    }
    Ok(())
}

/// Strip rigid motions and constant offsets, which leave gradient-norm
/// integrals of super-coercive functions unchanged.
fn strip_rigid(u: &ConvexFunction) -> &ConvexFunction {
    match u.shape() {
        Shape::Affine {
            inner,
            linear: None,
            ..
        } => strip_rigid(inner),
        _ => u,
    }
}

/// Direct route: quadrature of
/// `int zeta(|grad u(x)|) [D^2 u(x)]_(n-j) dx` over the effective domain.
///
/// Cone functions (for `j = n`) collapse to the closed form
/// `zeta(t) kappa_n R^n` since their gradient norm is constant almost
/// everywhere.
pub fn fiv_direct(
    u: &ConvexFunction,
    j: usize,
    zeta: &Density,
    points_per_axis: usize,
) -> Result<ValuationReport> {
    let n = u.dim();
    if j > n {
        return Err(Error::precondition(format!("need 0 <= j <= n, got j={j}, n={n}")));
    }
    require_class(zeta, j, n)?;
    let core = strip_rigid(u);

    let value = if j == n {
        match core.shape() {
            Shape::ConeBall { slope, radius, .. } => {
                zeta.eval_at(*slope)? * unit_ball_volume(n) * radius.powi(n as i32)
            }
            _ => {
                if !(core.is_smooth() || gradient_defined_a_e(core)) {
                    return Err(Error::precondition(format!(
                        "direct route needs an a.e. gradient for j = n, got {}",
                        core.variant_name()
                    )));
                }
                let domain = integration_box(core, zeta.support_upper())?;
                measure::pushforward_integral(
                    core,
                    n,
                    |y: &DVector<f64>| zeta.eval_unchecked(y.norm()),
                    &domain,
                    points_per_axis,
                )
            }
        }
    } else {
        if !core.is_smooth() {
            return Err(Error::precondition(format!(
                "direct route needs a twice-differentiable variant for j < n, got {}",
                core.variant_name()
            )));
        }
        let domain = integration_box(core, zeta.support_upper())?;
        measure::pushforward_integral(
            core,
            j,
            |y: &DVector<f64>| zeta.eval_unchecked(y.norm()),
            &domain,
            points_per_axis,
        )
    };
    Ok(ValuationReport {
        value,
        stderr: 0.0,
        route: Route::Direct,
        j,
        n,
        samples: 0,
    })
}

fn gradient_defined_a_e(u: &ConvexFunction) -> bool {
    match u.shape() {
        Shape::ConeBall { .. }
        | Shape::SupportPlusIndicator { .. }
        | Shape::Embedded { .. }
        | Shape::PiecewiseLinearSum { .. } => true,
        Shape::MaxOf { items } | Shape::MinOf { items } => {
            items.iter().all(|v| v.is_smooth() || gradient_defined_a_e(v))
        }
        _ => u.is_smooth(),
    }
}

fn integration_box(u: &ConvexFunction, gradient_bound: f64) -> Result<BoxDomain> {
    u.gradient_preimage_box(gradient_bound).ok_or_else(|| {
        Error::precondition(format!(
            "cannot bound the integration region for {}",
            u.variant_name()
        ))
    })
}

/// Measure route: build the pushforward particle cloud and integrate the
/// radial density against it.
pub fn fiv_measure(
    u: &ConvexFunction,
    j: usize,
    zeta: &Density,
    points_per_axis: usize,
) -> Result<ValuationReport> {
    let n = u.dim();
    require_class(zeta, j, n)?;
    let core = strip_rigid(u);
    let domain = integration_box(core, zeta.support_upper())?;
    let grid = measure::QuadratureGrid {
        domain,
        points_per_axis,
    };
    let mu = measure::hessian_measure_smooth(core, j, &grid)?;
    let value = measure::integrate_density(&mu, |y| zeta.eval_unchecked(y.norm()));
    Ok(ValuationReport {
        value,
        stderr: 0.0,
        route: Route::Measure,
        j,
        n,
        samples: 0,
    })
}

/// Haar-uniform j-frame: the first j columns of the orthonormalization of
/// an n-by-n array of standard normals drawn from the counter-based
/// generator keyed by `(seed, index)`.
pub fn grassmannian_frame(n: usize, j: usize, seed: u64, index: u64) -> Subspace {
    let mut rng = CounterRng::new(seed, index);
    loop {
        let mut raw = vec![0.0; n * n];
        rng.fill_normals(&mut raw);
        if let Some(q) = orthonormalize_columns(n, &raw, &mut rng) {
            let mut frame = DMatrix::zeros(n, j);
            for col in 0..j {
                frame.set_column(col, &q.column(col).into_owned());
            }
            if let Ok(s) = Subspace::new(frame) {
                return s;
            }
        }
    }
}

fn orthonormalize_columns(n: usize, raw: &[f64], rng: &mut CounterRng) -> Option<DMatrix<f64>> {
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut v = DVector::from_fn(n, |r, _| raw[c * n + r]);
        for _attempt in 0..8 {
            // Two Gram-Schmidt passes for orthogonality at 1e-12.
            for _ in 0..2 {
                for q in &cols {
                    let d = q.dot(&v);
                    v -= q * d;
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                cols.push(v / norm);
                break;
            }
            // Degenerate draw: replace the column deterministically.
            let mut fresh = vec![0.0; n];
            rng.fill_normals(&mut fresh);
            v = DVector::from_vec(fresh);
        }
        if cols.len() != c + 1 {
            return None;
        }
    }
    let mut q = DMatrix::zeros(n, n);
    for (c, col) in cols.iter().enumerate() {
        q.set_column(c, col);
    }
    Some(q)
}

/// Haar-uniform list of subspaces; deterministic in `(seed, index)` and
/// independent of evaluation order.
pub fn sample_grassmannian(n: usize, j: usize, count: usize, seed: u64) -> Vec<Subspace> {
    (0..count)
        .map(|i| grassmannian_frame(n, j, seed, i as u64))
        .collect()
}

/// Haar-uniform rotation in `SO(n)` keyed by `(seed, index)`.
pub fn random_rotation(n: usize, seed: u64, index: u64) -> DMatrix<f64> {
    let frame = grassmannian_frame(n, n, seed, index);
    let mut q = frame.frame().clone();
    if q.determinant() < 0.0 {
        let flipped = -q.column(n - 1).into_owned();
        q.set_column(n - 1, &flipped);
    }
    q
}

/// Shifted two-pass mean and standard error. With identical samples both
/// outputs are exactly the first sample and exactly zero.
fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let k = samples.len();
    if k == 0 {
        return (0.0, 0.0);
    }
    let shift = samples[0];
    let mut acc = 0.0;
    for s in samples {
        acc += s - shift;
    }
    let mean_shifted = acc / k as f64;
    let mean = shift + mean_shifted;
    if k == 1 {
        return (mean, 0.0);
    }
    let mut ss = 0.0;
    for s in samples {
        let d = (s - shift) - mean_shifted;
        ss += d * d;
    }
    let var = ss / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// Inner gradient-density integral
/// `int_(dom proj) alpha(|grad proj(x)|) dx` for a projected function.
fn inner_gradient_integral(
    proj: &ConvexFunction,
    alpha: &Density,
    points_per_axis: usize,
) -> Result<f64> {
    let core = strip_rigid(proj);
    let j = core.dim();
    match core.shape() {
        // Cone slice: |grad| = slope a.e. on a j-ball of the cone radius.
        Shape::ConeBall { slope, radius, .. } => {
            Ok(alpha.eval_at(*slope)? * unit_ball_volume(j) * radius.powi(j as i32))
        }
        Shape::Quadratic { a, b, .. } => {
            let domain = integration_box(core, alpha.support_upper())?;
            // Flattened column-major matrix for an allocation-free node loop.
            let a_flat: Vec<f64> = a.iter().copied().collect();
            let b_flat: Vec<f64> = b.iter().copied().collect();
            Ok(crate::quad::midpoint_box(
                |x: &[f64]| {
                    let mut norm_sq = 0.0;
                    for row in 0..j {
                        let mut g = b_flat[row];
                        for col in 0..j {
                            g += a_flat[col * j + row] * x[col];
                        }
                        norm_sq += g * g;
                    }
                    alpha.eval_unchecked(norm_sq.sqrt())
                },
                &domain,
                points_per_axis,
            ))
        }
        Shape::SmoothRadial { profile } => {
            let domain = integration_box(core, alpha.support_upper())?;
            let profile = profile.clone();
            Ok(crate::quad::midpoint_box(
                |x: &[f64]| {
                    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    alpha.eval_unchecked(profile.derivative(r))
                },
                &domain,
                points_per_axis,
            ))
        }
        _ => {
            // Generic path: evaluate-and-differentiate with half-cell
            // jitter at kinks.
            let domain = integration_box(core, alpha.support_upper())?;
            let steps: Vec<f64> = (0..j)
                .map(|i| (domain.hi[i] - domain.lo[i]) / points_per_axis as f64)
                .collect();
            let core = core.clone();
            Ok(crate::quad::midpoint_box(
                |x: &[f64]| {
                    let xv = DVector::from_column_slice(x);
                    if !core.evaluate(&xv).is_finite() {
                        return 0.0;
                    }
                    match core.gradient(&xv) {
                        Ok(g) => alpha.eval_unchecked(g.norm()),
                        Err(_) => {
                            let jittered = DVector::from_fn(j, |i, _| x[i] + 0.25 * steps[i]);
                            match core.gradient(&jittered) {
                                Ok(g) => alpha.eval_unchecked(g.norm()),
                                Err(_) => 0.0,
                            }
                        }
                    }
                },
                &domain,
                points_per_axis,
            ))
        }
    }
}

/// Cauchy-Kubota route: Monte Carlo average over Haar-uniform subspaces of
/// inner gradient-density integrals of projection functions, scaled by the
/// representation prefactor.
///
/// `j = 0` is deterministic (`alpha(0)` at the trivial subspace); `j = n`
/// coincides with the direct route (the Grassmannian is a point and the
/// density map is the identity there).
pub fn fiv_kubota(
    u: &ConvexFunction,
    zeta: &Density,
    cfg: &KubotaConfig,
) -> Result<ValuationReport> {
    let n = u.dim();
    cfg.validate(n)?;
    let j = cfg.j;
    if j == n {
        let mut report = fiv_direct(u, n, zeta, cfg.inner_points)?;
        report.route = Route::Kubota;
        return Ok(report);
    }
    require_class(zeta, j, n)?;
    let alpha = zeta_to_alpha(zeta, j, n)?;

    if j == 0 {
        // proj onto the zero subspace has the single domain point 0 with
        // gradient 0; the 0-dimensional integral is alpha(0).
        let value = kubota_prefactor(n, 0) * alpha.eval_at(0.0)?;
        return Ok(ValuationReport {
            value,
            stderr: 0.0,
            route: Route::Kubota,
            j,
            n,
            samples: cfg.sample_count,
        });
    }

    let inner_values: Vec<Result<f64>> = (0..cfg.sample_count as u64)
        .into_par_iter()
        .map(|index| {
            let frame = grassmannian_frame(n, j, cfg.rng_seed, index);
            let proj = u.project(&frame)?;
            inner_gradient_integral(&proj, &alpha, cfg.inner_points)
        })
        .collect();
    let mut samples = Vec::with_capacity(inner_values.len());
    for v in inner_values {
        samples.push(v?);
    }
    let (mean, sample_stderr) = mean_and_stderr(&samples);
    let prefactor = kubota_prefactor(n, j);
    Ok(ValuationReport {
        value: prefactor * mean,
        stderr: prefactor * sample_stderr,
        route: Route::Kubota,
        j,
        n,
        samples: cfg.sample_count,
    })
}

/// Closed form of the Grassmannian double integral on the cone family:
/// `kappa_j alpha(t)`.
pub fn cone_alpha_identity(t: f64, j: usize, alpha: &Density) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("cone parameter must be >= 0, got {t}")));
    }
    if j == 0 {
        return Err(Error::precondition("cone identity needs j >= 1"));
    }
    Ok(unit_ball_volume(j) * alpha.eval_at(t)?)
}

/// Central-projection density formula: for `z = (z', z_(n+1))` on the open
/// lower half-sphere,
/// `sigma(z) = C(n, j) xi(z' / |z_(n+1)|) |z_(n+1)|^(n-j+1)`.
pub fn sigma_from_xi<F: Fn(&DVector<f64>) -> f64>(
    xi: F,
    n: usize,
    j: usize,
    z: &DVector<f64>,
) -> Result<f64> {
    if z.len() != n + 1 {
        return Err(Error::Dimension {
            expected: n + 1,
            got: z.len(),
        });
    }
    if !(1 <= j && j <= n) {
        return Err(Error::precondition(format!("need 1 <= j <= n, got j={j}")));
    }
    if (z.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::domain(format!(
            "z must lie on the unit sphere within 1e-10, |z| = {}",
            z.norm()
        )));
    }
    let last = z[n];
    if !(last < 0.0) {
        return Err(Error::domain(format!(
            "z must lie on the open lower half-sphere, z_(n+1) = {last}"
        )));
    }
    let abs_last = last.abs();
    let projected = DVector::from_fn(n, |i, _| z[i] / abs_last);
    Ok(binomial(n, j) * xi(&projected) * abs_last.powi(n as i32 - j as i32 + 1))
}

// --- axiom harness -----------------------------------------------------

/// A functional-intrinsic-volume handle with a fixed route, index and
/// density.
#[derive(Debug, Clone)]
pub struct FivRoute {
    pub route: Route,
    pub j: usize,
    pub zeta: Density,
    pub resolution: usize,
    pub kubota: Option<KubotaConfig>,
}

impl FivRoute {
    pub fn direct(j: usize, zeta: Density, resolution: usize) -> Self {
        FivRoute {
            route: Route::Direct,
            j,
            zeta,
            resolution,
            kubota: None,
        }
    }

    pub fn measure(j: usize, zeta: Density, resolution: usize) -> Self {
        FivRoute {
            route: Route::Measure,
            j,
            zeta,
            resolution,
            kubota: None,
        }
    }

    pub fn kubota(j: usize, zeta: Density, cfg: KubotaConfig) -> Self {
        FivRoute {
            route: Route::Kubota,
            j,
            zeta,
            resolution: cfg.inner_points,
            kubota: Some(cfg),
        }
    }

    pub fn evaluate(&self, u: &ConvexFunction) -> Result<ValuationReport> {
        match self.route {
            Route::Direct => fiv_direct(u, self.j, &self.zeta, self.resolution),
            Route::Measure => fiv_measure(u, self.j, &self.zeta, self.resolution),
            Route::Kubota => {
                let cfg = self
                    .kubota
                    .clone()
                    .unwrap_or_else(|| KubotaConfig::new(self.j, 256, 0));
                fiv_kubota(u, &self.zeta, &cfg)
            }
        }
    }

    /// Evaluate over an explicitly shared integration box so structurally
    /// equal integrands cancel node by node (used by the valuation-identity
    /// check).
    fn evaluate_on_box(&self, u: &ConvexFunction, domain: &BoxDomain) -> Result<f64> {
        match self.route {
            Route::Direct => Ok(measure::pushforward_integral(
                strip_rigid(u),
                self.j,
                |y: &DVector<f64>| self.zeta.eval_unchecked(y.norm()),
                domain,
                self.resolution,
            )),
            Route::Measure => {
                let grid = measure::QuadratureGrid {
                    domain: domain.clone(),
                    points_per_axis: self.resolution,
                };
                let mu = measure::hessian_measure_smooth(strip_rigid(u), self.j, &grid)?;
                Ok(measure::integrate_density(&mu, |y| {
                    self.zeta.eval_unchecked(y.norm())
                }))
            }
            Route::Kubota => Err(Error::unsupported(
                "shared-box evaluation applies to deterministic routes",
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub name: String,
    pub cases: usize,
    /// Pairs whose pointwise minimum failed the convexity acceptance test
    /// (informational; only populated by the valuation-identity check).
    pub rejected_pairs: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
    pub all_passed: bool,
}

#[derive(Debug, Clone)]
pub struct AxiomSuiteConfig {
    pub seed: u64,
    pub required_lattice_pairs: usize,
    pub translations: usize,
    pub rotations: usize,
    pub lambdas: Vec<f64>,
    pub valuation_tol: f64,
    pub invariance_tol: f64,
    pub homogeneity_rel_tol: f64,
    pub simplicity_tol: f64,
}

impl Default for AxiomSuiteConfig {
    fn default() -> Self {
        AxiomSuiteConfig {
            seed: 0x0a1b_2c3d,
            required_lattice_pairs: 20,
            translations: 10,
            rotations: 10,
            lambdas: vec![0.5, 2.0, 3.0],
            valuation_tol: 1e-6,
            invariance_tol: 1e-6,
            homogeneity_rel_tol: 1e-6,
            simplicity_tol: 1e-9,
        }
    }
}

/// Run the valuation-axiom checks for a route over a corpus:
/// (a) the valuation identity on accepted lattice pairs, (b) epi-translation
/// invariance, (c) rotation invariance, (d) epi-homogeneity of degree `j`,
/// and (e) simplicity of the top-degree route on functions with
/// hyperplane-contained domains.
pub fn axiom_suite(
    route: &FivRoute,
    corpus: &[ConvexFunction],
    cfg: &AxiomSuiteConfig,
) -> Result<AxiomReport> {
    let mut checks = Vec::new();

    checks.push(valuation_identity_check(route, corpus, cfg)?);
    checks.push(translation_invariance_check(route, corpus, cfg)?);
    checks.push(rotation_invariance_check(route, corpus, cfg)?);
    checks.push(homogeneity_check(route, corpus, cfg)?);
    if let Some(check) = simplicity_check(route, corpus, cfg)? {
        checks.push(check);
    }

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(AxiomReport { checks, all_passed })
}

fn eligible(route: &FivRoute, u: &ConvexFunction) -> bool {
    route.evaluate(u).is_ok()
}

fn valuation_identity_check(
    route: &FivRoute,
    corpus: &[ConvexFunction],
    cfg: &AxiomSuiteConfig,
) -> Result<AxiomCheck> {
    // Candidate pairs: identical, constant offsets, epi-multiples, and all
    // cross pairs from the corpus.
    let mut candidates: Vec<(ConvexFunction, ConvexFunction)> = Vec::new();
    let n = corpus.first().map(|u| u.dim()).unwrap_or(0);
    let zero_shift = DVector::zeros(n);
    for u in corpus {
        if !eligible(route, u) {
            continue;
        }
        candidates.push((u.clone(), u.clone()));
        candidates.push((u.clone(), u.translate(&zero_shift, 0.7)));
        if let Ok(scaled) = convex::epi_mult(2.0, u) {
            candidates.push((u.clone(), scaled));
        }
        if let Ok(scaled) = convex::epi_mult(1.5, u) {
            candidates.push((u.clone(), scaled));
        }
    }
    for (i, u) in corpus.iter().enumerate() {
        for v in corpus.iter().skip(i + 1) {
            if u.dim() == v.dim() && eligible(route, u) && eligible(route, v) {
                candidates.push((u.clone(), v.clone()));
            }
        }
    }

    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut max_violation: f64 = 0.0;
    for (u, v) in &candidates {
        if accepted >= cfg.required_lattice_pairs {
            break;
        }
        let outcome = convex::lattice_ops(u, v, cfg.seed)?;
        let Some(min) = outcome.min else {
            rejected += 1;
            continue;
        };
        let max = outcome.max;
        // Shared integration box: the identity then holds node by node.
        let bound = route.zeta.support_upper();
        let boxes = [
            u.gradient_preimage_box(bound),
            v.gradient_preimage_box(bound),
        ];
        let Some(domain) = boxes
            .into_iter()
            .flatten()
            .reduce(|a, b| a.hull(&b))
        else {
            continue;
        };
        let values = [
            route.evaluate_on_box(u, &domain),
            route.evaluate_on_box(v, &domain),
            route.evaluate_on_box(&max, &domain),
            route.evaluate_on_box(&min, &domain),
        ];
        let [zu, zv, zmax, zmin] = match values {
            [Ok(a), Ok(b), Ok(c), Ok(d)] => [a, b, c, d],
            _ => continue,
        };
        let gap = ((zu + zv) - (zmax + zmin)).abs();
        max_violation = max_violation.max(gap);
        accepted += 1;
    }

    Ok(AxiomCheck {
        name: "valuation_identity".into(),
        cases: accepted,
        rejected_pairs: rejected,
        max_violation,
        tolerance: cfg.valuation_tol,
        passed: accepted >= cfg.required_lattice_pairs && max_violation <= cfg.valuation_tol,
    })
}

fn translation_invariance_check(
    route: &FivRoute,
    corpus: &[ConvexFunction],
    cfg: &AxiomSuiteConfig,
) -> Result<AxiomCheck> {
    let mut rng = CounterRng::new(cfg.seed, 1);
    let mut cases = 0usize;
    let mut max_violation: f64 = 0.0;
    for u in corpus {
        if !eligible(route, u) {
            continue;
        }
        let base = route.evaluate(u)?.value;
        for _ in 0..cfg.translations {
            let n = u.dim();
            let tau = DVector::from_fn(n, |_, _| rng.next_range(-0.5, 0.5));
            let c = rng.next_range(-1.0, 1.0);
            let moved = u.translate(&tau, c);
            let value = route.evaluate(&moved)?.value;
            max_violation = max_violation.max((value - base).abs());
            cases += 1;
        }
    }
    Ok(AxiomCheck {
        name: "epi_translation_invariance".into(),
        cases,
        rejected_pairs: 0,
        max_violation,
        tolerance: cfg.invariance_tol,
        passed: cases > 0 && max_violation <= cfg.invariance_tol,
    })
}

fn rotation_invariance_check(
    route: &FivRoute,
    corpus: &[ConvexFunction],
    cfg: &AxiomSuiteConfig,
) -> Result<AxiomCheck> {
    let mut cases = 0usize;
    let mut max_violation: f64 = 0.0;
    for u in corpus {
        if !eligible(route, u) {
            continue;
        }
        let base = route.evaluate(u)?.value;
        for k in 0..cfg.rotations {
            let rot = random_rotation(u.dim(), cfg.seed ^ 0x5151, k as u64);
            let rotated = u.rotate(&rot);
            let value = route.evaluate(&rotated)?.value;
            max_violation = max_violation.max((value - base).abs());
            cases += 1;
        }
    }
    Ok(AxiomCheck {
        name: "rotation_invariance".into(),
        cases,
        rejected_pairs: 0,
        max_violation,
        tolerance: cfg.invariance_tol,
        passed: cases > 0 && max_violation <= cfg.invariance_tol,
    })
}

fn homogeneity_check(
    route: &FivRoute,
    corpus: &[ConvexFunction],
    cfg: &AxiomSuiteConfig,
) -> Result<AxiomCheck> {
    let mut cases = 0usize;
    let mut max_violation: f64 = 0.0;
    for u in corpus {
        if !eligible(route, u) {
            continue;
        }
        let base = route.evaluate(u)?.value;
        if base.abs() < 1e-12 {
            continue;
        }
        for lambda in &cfg.lambdas {
            let scaled = convex::epi_mult(*lambda, u)?;
            let value = route.evaluate(&scaled)?.value;
            let expected = lambda.powi(route.j as i32) * base;
            let rel = (value - expected).abs() / expected.abs().max(1e-300);
            max_violation = max_violation.max(rel);
            cases += 1;
        }
    }
    Ok(AxiomCheck {
        name: "epi_homogeneity".into(),
        cases,
        rejected_pairs: 0,
        max_violation,
        tolerance: cfg.homogeneity_rel_tol,
        passed: cases > 0 && max_violation <= cfg.homogeneity_rel_tol,
    })
}

fn simplicity_check(
    route: &FivRoute,
    corpus: &[ConvexFunction],
    cfg: &AxiomSuiteConfig,
) -> Result<Option<AxiomCheck>> {
    // Applies to the top-degree route only: it must vanish on functions
    // whose domain lies in a hyperplane.
    let mut cases = 0usize;
    let mut max_violation: f64 = 0.0;
    for u in corpus {
        let degenerate = matches!(u.shape(), Shape::Embedded { .. })
            || u.domain_box().map(|b| b.volume() == 0.0).unwrap_or(false);
        if !degenerate {
            continue;
        }
        if route.j != u.dim() {
            continue;
        }
        let value = match route.route {
            Route::Direct => fiv_direct(u, route.j, &route.zeta, route.resolution)?.value,
            Route::Measure => fiv_measure(u, route.j, &route.zeta, route.resolution)?.value,
            Route::Kubota => continue,
        };
        max_violation = max_violation.max(value.abs());
        cases += 1;
    }
    if cases == 0 {
        return Ok(None);
    }
    Ok(Some(AxiomCheck {
        name: "simplicity_top_degree".into(),
        cases,
        rejected_pairs: 0,
        max_violation,
        tolerance: cfg.simplicity_tol,
        passed: max_violation <= cfg.simplicity_tol,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::RadialProfile;
    use crate::density::ClosedFormExpr;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 5), 0.0);
    }

    #[test]
    fn direct_isotropic_quadratic_tent() {
        // n = 2, j = 1: int tent(|x|) * e_1(I) dx = 2 * 2 pi / 6 = 2 pi / 3.
        let u = ConvexFunction::isotropic_quadratic(2);
        let rep = fiv_direct(&u, 1, &Density::tent(), 256).unwrap();
        assert_abs_diff_eq!(rep.value, 2.0 * PI / 3.0, epsilon = 2e-4);
        assert_eq!(rep.stderr, 0.0);
    }

    #[test]
    fn direct_cone_closed_form() {
        // j = n on the cone family: kappa_n zeta(t).
        let tent = Density::tent();
        for t in [0.0, 0.3, 0.8] {
            let u = ConvexFunction::cone_t(2, t);
            let rep = fiv_direct(&u, 2, &tent, 128).unwrap();
            assert_abs_diff_eq!(rep.value, PI * (1.0 - t), epsilon = 1e-12);
        }
    }

    #[test]
    fn direct_zero_density() {
        let u = ConvexFunction::isotropic_quadratic(2);
        let rep = fiv_direct(&u, 1, &Density::zero(), 64).unwrap();
        assert_eq!(rep.value, 0.0);
    }

    #[test]
    fn direct_rejects_nonsmooth_for_intermediate_j() {
        let cone = ConvexFunction::cone_t(2, 0.5);
        assert!(fiv_direct(&cone, 1, &Density::tent(), 64).is_err());
    }

    #[test]
    fn grassmannian_frames_are_orthonormal_and_deterministic() {
        let frames = sample_grassmannian(4, 2, 16, 99);
        assert_eq!(frames.len(), 16);
        for f in &frames {
            let gram = f.frame().transpose() * f.frame();
            for i in 0..2 {
                for j in 0..2 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(gram[(i, j)], expect, epsilon = 1e-12);
                }
            }
        }
        // Order independence: frame 7 drawn in isolation matches.
        let lone = grassmannian_frame(4, 2, 99, 7);
        assert_eq!(lone.frame(), frames[7].frame());
        assert!(sample_grassmannian(3, 1, 0, 5).is_empty());
    }

    #[test]
    fn grassmannian_line_direction_moments() {
        // Mean of <e1, E>^2 over Gr(1, n) is 1/n.
        let n = 3;
        let count = 10_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..count {
            let frame = grassmannian_frame(n, 1, 12345, i);
            let c = frame.frame()[(0, 0)];
            sum += c * c;
            sum_sq += c * c * c * c;
        }
        let mean = sum / count as f64;
        let var = (sum_sq / count as f64 - mean * mean) / count as f64;
        let stderr = var.sqrt();
        assert!(
            (mean - 1.0 / n as f64).abs() < 3.0 * stderr,
            "mean {mean}, expected {} +- {}",
            1.0 / n as f64,
            3.0 * stderr
        );
    }

    #[test]
    fn rotations_are_special_orthogonal() {
        for k in 0..5 {
            let r = random_rotation(3, 7, k);
            let gram = r.transpose() * &r;
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(gram[(i, j)], expect, epsilon = 1e-12);
                }
            }
            assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn kubota_cone_identity_deterministic() {
        let tent = Density::tent();
        for (n, j) in [(2usize, 1usize), (3, 1), (3, 2)] {
            let alpha = zeta_to_alpha(&tent, j, n).unwrap();
            for t in [0.0, 0.3, 0.8] {
                let u = ConvexFunction::cone_t(n, t);
                let cfg = KubotaConfig::new(j, 32, 4242);
                let rep = fiv_kubota(&u, &tent, &cfg).unwrap();
                let expected = kubota_prefactor(n, j) * cone_alpha_identity(t, j, &alpha).unwrap();
                assert_eq!(rep.stderr, 0.0, "cone run must have zero variance");
                let rel = (rep.value - expected).abs() / expected.abs().max(1e-300);
                assert!(rel < 1e-9, "(n={n}, j={j}, t={t}): rel error {rel}");
            }
        }
    }

    #[test]
    fn kubota_zero_density() {
        let u = ConvexFunction::isotropic_quadratic(2);
        let rep = fiv_kubota(&u, &Density::zero(), &KubotaConfig::new(1, 16, 1)).unwrap();
        assert_eq!(rep.value, 0.0);
        assert_eq!(rep.stderr, 0.0);
    }

    #[test]
    fn kubota_matches_direct_isotropic() {
        let u = ConvexFunction::isotropic_quadratic(2);
        let tent = Density::tent();
        let direct = fiv_direct(&u, 1, &tent, 256).unwrap();
        let cfg = KubotaConfig::new(1, 200, 7);
        let kub = fiv_kubota(&u, &tent, &cfg).unwrap();
        let gap = (kub.value - direct.value).abs();
        let bound = (3.0 * kub.stderr).max(0.02 * direct.value.abs());
        assert!(gap <= bound, "gap {gap}, bound {bound}");
    }

    #[test]
    fn kubota_stderr_scales_like_sqrt_samples() {
        // A genuinely anisotropic input has positive variance across
        // subspaces; quadrupling the samples roughly halves the error.
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let u = ConvexFunction::quadratic(a, DVector::zeros(2), 0.0).unwrap();
        let bump = Density::from_expr(ClosedFormExpr::Bump {
            center: 0.5,
            width: 0.3,
            height: 1.0,
        });
        let small = fiv_kubota(&u, &bump, &KubotaConfig::new(1, 250, 3)).unwrap();
        let large = fiv_kubota(&u, &bump, &KubotaConfig::new(1, 1000, 3)).unwrap();
        assert!(small.stderr > 0.0);
        let ratio = small.stderr / large.stderr;
        assert!(
            (ratio - 2.0).abs() < 0.6,
            "stderr ratio {ratio}, expected about 2"
        );
    }

    #[test]
    fn kubota_j_zero_is_constant_in_u() {
        let tent = Density::tent();
        let u = ConvexFunction::isotropic_quadratic(2);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.8]);
        let v = ConvexFunction::quadratic(a, DVector::zeros(2), 0.0).unwrap();
        let cfg = KubotaConfig::new(0, 8, 5);
        let ru = fiv_kubota(&u, &tent, &cfg).unwrap();
        let rv = fiv_kubota(&v, &tent, &cfg).unwrap();
        assert_abs_diff_eq!(ru.value, rv.value, epsilon = 1e-14);
        // Against the direct j = 0 integral.
        let direct = fiv_direct(&u, 0, &tent, 512).unwrap();
        assert_abs_diff_eq!(ru.value, direct.value, epsilon = 2e-3 * direct.value.abs());
    }

    #[test]
    fn sigma_formula_examples() {
        let xi_one = |_: &DVector<f64>| 1.0;
        // z = -e_(n+1): sigma = C(n, j) xi(0).
        let z = DVector::from_vec(vec![0.0, 0.0, -1.0]);
        assert_abs_diff_eq!(sigma_from_xi(xi_one, 2, 1, &z).unwrap(), 2.0);
        // z = (sin theta, 0, -cos theta): sigma = 2 cos^2 theta.
        let theta = 0.6f64;
        let z = DVector::from_vec(vec![theta.sin(), 0.0, -theta.cos()]);
        assert_abs_diff_eq!(
            sigma_from_xi(xi_one, 2, 1, &z).unwrap(),
            2.0 * theta.cos() * theta.cos(),
            epsilon = 1e-12
        );
        let xi_zero = |_: &DVector<f64>| 0.0;
        assert_eq!(sigma_from_xi(xi_zero, 2, 1, &z).unwrap(), 0.0);
        // Upper half-sphere rejected.
        let bad = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(sigma_from_xi(xi_one, 2, 1, &bad).is_err());
    }

    #[test]
    fn measure_route_agrees_with_direct() {
        let u = ConvexFunction::isotropic_quadratic(2);
        let tent = Density::tent();
        let a = fiv_direct(&u, 1, &tent, 256).unwrap();
        let b = fiv_measure(&u, 1, &tent, 256).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-12);
    }

    #[test]
    fn simplicity_of_top_degree_route() {
        // A function with domain in a hyperplane has zero top-degree
        // valuation.
        let e = Subspace::coordinate(2, &[0]);
        let inner = ConvexFunction::cone_t(1, 0.4);
        let u = ConvexFunction::embedded(e, inner).unwrap();
        let rep = fiv_direct(&u, 2, &Density::tent(), 128).unwrap();
        assert_eq!(rep.value, 0.0);
    }

    #[test]
    fn homogeneity_of_direct_route() {
        let tent = Density::tent();
        let u = ConvexFunction::isotropic_quadratic(2);
        for j in 0..=2usize {
            let base = fiv_direct(&u, j, &tent, 256).unwrap().value;
            let scaled = convex::epi_mult(2.0, &u).unwrap();
            let value = fiv_direct(&scaled, j, &tent, 256).unwrap().value;
            let expected = 2f64.powi(j as i32) * base;
            let rel = (value - expected).abs() / expected.abs();
            assert!(rel < 1e-6, "j = {j}: rel {rel}");
        }
    }

    #[test]
    fn axiom_suite_on_a_small_corpus() {
        let bump = Density::from_expr(ClosedFormExpr::Bump {
            center: 0.5,
            width: 0.3,
            height: 1.0,
        });
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let corpus = vec![
            ConvexFunction::isotropic_quadratic(2),
            ConvexFunction::quadratic(a, DVector::zeros(2), 0.0).unwrap(),
            ConvexFunction::smooth_radial(
                2,
                RadialProfile::Power {
                    coeff: 1.0,
                    exponent: 4.0,
                },
            )
            .unwrap(),
            ConvexFunction::cone_t(2, 0.4),
            ConvexFunction::embedded(
                Subspace::coordinate(2, &[0]),
                ConvexFunction::cone_t(1, 0.2),
            )
            .unwrap(),
        ];
        let route = FivRoute::direct(2, bump, 192);
        let cfg = AxiomSuiteConfig {
            required_lattice_pairs: 8,
            translations: 3,
            rotations: 3,
            ..AxiomSuiteConfig::default()
        };
        let report = axiom_suite(&route, &corpus, &cfg).unwrap();
        for check in &report.checks {
            assert!(
                check.passed,
                "{} failed: violation {} > {} over {} cases",
                check.name, check.max_violation, check.tolerance, check.cases
            );
        }
        assert!(report.checks.len() >= 5);
    }
}
