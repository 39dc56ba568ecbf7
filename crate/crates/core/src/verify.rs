//! Numerical checks of every pipeline stage, merged into one report.
//!
//! Each check yields records `(name, residual, bound)`; a record passes when
//! its residual is finite and at most its bound. Random samples come from a
//! ChaCha stream per check, seeded from the configuration, so two runs with
//! the same configuration produce identical residuals.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::io::grid_points;
use crate::kernel::{KernelModel, Orientation};
use crate::linalg::{inner, ComplexMatrix, ComplexVector, C64};
use crate::pipeline::Pipeline;
use crate::quadrature::integrate_doubling;
use crate::splitting::SplitSystem;
use crate::wavelet::{EvalMode, WaveletSystem};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub bound: f64,
    pub residual: f64,
    pub pass: bool,
    #[serde(skip)]
    pub runtime: Duration,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, residual: f64, bound: f64) -> Self {
        CheckRecord {
            name: name.into(),
            bound,
            residual,
            pass: residual.is_finite() && residual <= bound,
            runtime: Duration::ZERO,
        }
    }

    /// `CHECK <name> residual=<r> bound=<b> PASS|FAIL`.
    pub fn line(&self) -> String {
        format!(
            "CHECK {} residual={:e} bound={:e} {}",
            self.name,
            self.residual,
            self.bound,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn from_records(records: Vec<CheckRecord>) -> Self {
        let pass = records.iter().all(|r| r.pass);
        VerificationReport { records, pass }
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    /// One line per record plus a summary line. Runtimes are left out so
    /// that the text is reproducible.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.line());
            out.push('\n');
        }
        out.push_str(&format!(
            "RESULT {} checks={} failed={}\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.records.len(),
            self.failures().count()
        ));
        out
    }
}

type Check = fn(&Pipeline) -> Vec<CheckRecord>;

const CHECKS: &[Check] = &[
    membership,
    normalization,
    svd_checks,
    schwarz_chain,
    splitting_checks,
    nuclear_sums,
    wavelet_gram,
    bound_certificates,
    basis_derivatives,
    table_interpolation,
    unitarity,
    isometry,
    summability,
    stored_norms,
    action_agreement,
    conjugate_symmetry,
    smoothness,
    carleman_parseval,
    condition_ii,
    vanishing,
    truncation,
];

/// Runs every check. Checks are independent and run concurrently; records
/// come back in a fixed order.
pub fn run_all(pipeline: &Pipeline) -> VerificationReport {
    let groups: Vec<Vec<CheckRecord>> = CHECKS
        .par_iter()
        .map(|check| {
            let start = Instant::now();
            let mut records = check(pipeline);
            let elapsed = start.elapsed();
            for r in &mut records {
                r.runtime = elapsed;
            }
            records
        })
        .collect();
    VerificationReport::from_records(groups.into_iter().flatten().collect())
}

fn rng(p: &Pipeline, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(p.config.seed);
    r.set_stream(stream);
    r
}

pub fn random_unit_vector(rng: &mut impl Rng, dim: usize) -> ComplexVector {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let v = ComplexVector::new(v).expect("finite");
    let norm = v.norm();
    v.scale(C64::new(1.0 / norm, 0.0))
}

fn orientation_tag(o: Orientation) -> &'static str {
    match o {
        Orientation::Kernel => "K",
        Orientation::Adjoint => "Kstar",
    }
}

/// `a / b`, with `0 / 0 = 0`.
fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn membership(p: &Pipeline) -> Vec<CheckRecord> {
    let m = &p.inspection.membership;
    let last = |v: &[f64]| v.last().copied().unwrap_or(0.0);
    vec![CheckRecord::new(
        "c00_membership",
        last(&m.forward_norms).max(last(&m.adjoint_norms)),
        m.tolerance,
    )]
}

fn normalization(p: &Pipeline) -> Vec<CheckRecord> {
    vec![CheckRecord::new(
        "normalization_sum",
        p.inspection.normalization.sum,
        1.0,
    )]
}

/// Max entry of `m − reconstruct`, relative to `max(1, max|m|)`, and the
/// orthonormality defect of the singular vectors.
pub fn svd_residuals(split: &SplitSystem) -> (f64, f64) {
    let mut recon: f64 = 0.0;
    let mut orth: f64 = 0.0;
    for (m, sys) in [
        (&split.forward, &split.forward_schmidt),
        (&split.adjoint, &split.adjoint_schmidt),
    ] {
        let diff = m.max_abs_diff(&sys.reconstruct()).unwrap_or(f64::INFINITY);
        recon = recon.max(diff / m.max_abs().max(1.0));
        let rank = sys.rank();
        for vectors in [&sys.left_vectors, &sys.right_vectors] {
            for a in 0..rank {
                for b in 0..rank {
                    let want = if a == b { 1.0 } else { 0.0 };
                    let g = inner(&vectors[a], &vectors[b]).unwrap_or(C64::new(f64::NAN, 0.0));
                    orth = orth.max((g - want).norm());
                }
            }
        }
    }
    (recon, orth)
}

fn svd_checks(p: &Pipeline) -> Vec<CheckRecord> {
    let (recon, orth) = svd_residuals(&p.split);
    let tol = p.config.tolerances.svd;
    vec![
        CheckRecord::new("svd_reconstruction", recon, tol),
        CheckRecord::new("svd_orthonormality", orth, tol),
    ]
}

/// Largest excess `‖Bf‖ − ‖Jf‖^{1/4}` (and the `B̃`, `J̃` analogue) over
/// `count` random unit vectors; zero when the inequality holds everywhere.
pub fn schwarz_excess(split: &SplitSystem, rng: &mut impl Rng, count: usize) -> f64 {
    let dim = split.forward.cols();
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let f = random_unit_vector(rng, dim);
        for (root, op) in [
            (&split.forward_root, &split.forward),
            (&split.adjoint_root, &split.adjoint),
        ] {
            let lhs = root.apply(&f).map_or(f64::INFINITY, |v| v.norm());
            let rhs = op.apply(&f).map_or(0.0, |v| v.norm()).powf(0.25);
            worst = worst.max(lhs - rhs);
        }
    }
    worst
}

fn schwarz_chain(p: &Pipeline) -> Vec<CheckRecord> {
    let excess = schwarz_excess(&p.split, &mut rng(p, 1), p.config.samples.schwarz_vectors);
    vec![CheckRecord::new("schwarz_chain", excess, p.config.tolerances.schwarz)]
}

fn splitting_checks(p: &Pipeline) -> Vec<CheckRecord> {
    let env = p.environment();
    let s = env.matrix();
    let sp = &p.split;
    let scale = s.max_abs().max(1.0);
    let identity = |lhs: &ComplexMatrix, q: &ComplexMatrix, j: &ComplexMatrix| -> f64 {
        q.add(&j.adjoint())
            .and_then(|m| lhs.max_abs_diff(&m))
            .unwrap_or(f64::INFINITY)
    };
    let split_residual =
        identity(s, &sp.complement, &sp.adjoint).max(identity(&s.adjoint(), &sp.complement_adjoint, &sp.forward));
    let mut rng = rng(p, 2);
    let mut series_residual: f64 = 0.0;
    for _ in 0..10 {
        let f = random_unit_vector(&mut rng, env.dim());
        let direct = sp.complement.apply(&f);
        let series = SplitSystem::complement_series(env, &f);
        series_residual = series_residual.max(match (direct, series) {
            (Ok(a), Ok(b)) => a.sub(&b).map_or(f64::INFINITY, |d| d.max_abs()),
            _ => f64::INFINITY,
        });
    }
    let tol = p.config.tolerances.splitting;
    vec![
        CheckRecord::new("splitting_identity", split_residual / scale, tol),
        CheckRecord::new("complement_series", series_residual / scale, tol),
    ]
}

fn nuclear_sums(p: &Pipeline) -> Vec<CheckRecord> {
    let (a, b) = p.split.nuclear_sums();
    vec![CheckRecord::new("nuclear_sums", a + b, f64::INFINITY)]
}

/// Max entry of `G − I` for the Gram matrix of the first `count`
/// enumerated wavelets, by adaptive quadrature over `[-window, window]`.
pub fn gram_deviation(wavelets: &WaveletSystem, count: usize, config: &PipelineConfig) -> f64 {
    let count = count.min(wavelets.enumeration().len());
    let idx: Vec<usize> = (0..count).collect();
    let w = config.grid.window;
    let q = &config.quadrature;
    let est = integrate_doubling(-w, w, q.order, q.start_panels, q.max_panels, q.tolerance, |rule| {
        let samples = wavelets.sample_unchecked(&idx, &rule.nodes, 0, EvalMode::Direct);
        let mut g = vec![0.0; count * count];
        for (k, &wt) in rule.weights.iter().enumerate() {
            let row = samples.row(k);
            for a in 0..count {
                for b in a..count {
                    g[a * count + b] += wt * row[a] * row[b];
                }
            }
        }
        g
    });
    let mut worst: f64 = 0.0;
    for a in 0..count {
        for b in a..count {
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((est.value[a * count + b] - want).abs());
        }
    }
    worst
}

fn wavelet_gram(p: &Pipeline) -> Vec<CheckRecord> {
    let dev = gram_deviation(&p.wavelets, p.config.samples.gram_functions, &p.config);
    vec![CheckRecord::new("wavelet_gram", dev, p.config.tolerances.gram)]
}

/// Half-width, in mother coordinates, of the sup scan of each wavelet.
const CERTIFICATE_HALF_WIDTH: f64 = 32.0;

/// Largest ratio `grid-sup |[u_n]^{(i)}| / (D_n A_i)` over `indices` and
/// `i < orders`; at most 1 when every certificate holds.
pub fn certificate_ratio(wavelets: &WaveletSystem, indices: &[usize], orders: usize, points: usize) -> f64 {
    let xs = grid_points(points, CERTIFICATE_HALF_WIDTH);
    indices
        .par_iter()
        .map(|&n| {
            let pair = wavelets.enumeration().pairs()[n];
            let scale = 2f64.powi(pair.j);
            let mut sup = vec![0.0f64; orders];
            let mut buf = vec![0.0; orders];
            for &x in &xs {
                wavelets.basis_orders_im(n, (x + pair.k as f64) / scale, &mut buf);
                for (s, v) in sup.iter_mut().zip(&buf) {
                    *s = s.max(v.abs());
                }
            }
            (0..orders)
                .map(|i| sup[i] / wavelets.sup_bound(n, i))
                .fold(0.0, f64::max)
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

fn bound_certificates(p: &Pipeline) -> Vec<CheckRecord> {
    let orders = p.config.i_max.min(3) + 1;
    let r = certificate_ratio(
        &p.wavelets,
        &p.assignment.wavelets,
        orders,
        p.config.samples.certificate_points,
    );
    vec![CheckRecord::new("bound_certificates", r, 1.0)]
}

/// Five-point central difference of samples at `x − 2h, …, x + 2h`.
fn five_point<T>(v: [T; 5], h: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    (v[0] - v[4] + (v[3] - v[1]) * 8.0) * (1.0 / (12.0 * h))
}

fn basis_derivatives(p: &Pipeline) -> Vec<CheckRecord> {
    let top = p.config.i_max.min(3);
    if top == 0 {
        return vec![CheckRecord::new(
            "basis_derivatives",
            0.0,
            p.config.tolerances.basis_derivative,
        )];
    }
    let mut rng = rng(p, 3);
    let mut jobs = Vec::new();
    for &n in &p.assignment.wavelets {
        for _ in 0..p.config.samples.basis_derivative_points {
            jobs.push((n, rng.gen_range(-8.0..8.0)));
        }
    }
    let worst = jobs
        .par_iter()
        .map(|&(n, x)| {
            let pair = p.wavelets.enumeration().pairs()[n];
            let scale = 2f64.powi(pair.j);
            let s = (x + pair.k as f64) / scale;
            let h = 1e-3 / scale;
            let mut at = [[0.0; 4]; 5];
            for (m, row) in at.iter_mut().enumerate() {
                p.wavelets
                    .basis_orders_im(n, s + (m as f64 - 2.0) * h, &mut row[..=top]);
            }
            (1..=top)
                .map(|i| {
                    let exact = at[2][i];
                    let fd = five_point(
                        [at[0][i - 1], at[1][i - 1], at[2][i - 1], at[3][i - 1], at[4][i - 1]],
                        h,
                    );
                    let floor = 1e-6 * p.wavelets.sup_bound(n, i);
                    (fd - exact).abs() / exact.abs().max(floor)
                })
                .fold(0.0, f64::max)
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    vec![CheckRecord::new(
        "basis_derivatives",
        worst,
        p.config.tolerances.basis_derivative,
    )]
}

fn table_interpolation(p: &Pipeline) -> Vec<CheckRecord> {
    if !p.config.grid.tabulated {
        return Vec::new();
    }
    let table = p.wavelets.table();
    let mother = p.wavelets.mother();
    let mut rng = rng(p, 4);
    let xs: Vec<f64> = (0..p.config.samples.interpolation_points)
        .map(|_| rng.gen_range(-40.0..40.0))
        .collect();
    let orders = p.config.i_max + 1;
    let worst = xs
        .par_iter()
        .map(|&x| {
            let mut direct = vec![0.0; orders];
            mother.eval_orders_im(x, &mut direct);
            (0..orders)
                .map(|i| (table.eval_im(x, i) - direct[i]).abs())
                .fold(0.0, f64::max)
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    vec![CheckRecord::new(
        "table_interpolation",
        worst,
        p.config.tolerances.interpolation,
    )]
}

/// `max|UU* − I| + max|U*U − I|` plus the number of entries of `U` that
/// disagree with the assignment map. Zero means `U` is exactly the
/// permutation the kernel was built from.
pub fn unitarity_residual(p: &Pipeline) -> f64 {
    let u = &p.assignment.unitary;
    let id = ComplexMatrix::identity(u.rows());
    let gram =
        |a: &ComplexMatrix, b: &ComplexMatrix| a.matmul(b).and_then(|m| m.max_abs_diff(&id)).unwrap_or(f64::INFINITY);
    let adj = u.adjoint();
    gram(u, &adj) + gram(&adj, u) + p.assignment.map_mismatches() as f64
}

fn unitarity(p: &Pipeline) -> Vec<CheckRecord> {
    vec![CheckRecord::new("unitarity", unitarity_residual(p), 0.0)]
}

fn isometry(p: &Pipeline) -> Vec<CheckRecord> {
    let u = &p.assignment.unitary;
    let mut rng = rng(p, 5);
    let mut worst: f64 = 0.0;
    for _ in 0..p.config.samples.isometry_pairs {
        let f = random_unit_vector(&mut rng, u.cols());
        let g = random_unit_vector(&mut rng, u.cols());
        let lhs = u.apply(&f).and_then(|uf| inner(&uf, &u.apply(&g)?));
        let rhs = inner(&f, &g);
        worst = worst.max(match (lhs, rhs) {
            (Ok(a), Ok(b)) => (a - b).norm(),
            _ => f64::INFINITY,
        });
    }
    vec![CheckRecord::new("isometry", worst, p.config.tolerances.isometry)]
}

fn summability(p: &Pipeline) -> Vec<CheckRecord> {
    p.summability
        .orders
        .iter()
        .flat_map(|o| {
            let i = o.order;
            [
                CheckRecord::new(format!("summability_h_i{i}"), o.h_sum, o.h_bound),
                CheckRecord::new(format!("summability_v_i{i}"), o.v_sum, o.v_bound),
                CheckRecord::new(
                    format!("summability_complement_i{i}"),
                    o.complement_sum,
                    o.complement_bound,
                ),
                CheckRecord::new(format!("summability_x_i{i}"), o.x_sum, o.x_bound),
            ]
        })
        .collect()
}

fn stored_norms(p: &Pipeline) -> Vec<CheckRecord> {
    use crate::kernel::Series;
    let m = &p.model;
    let mut worst: f64 = 0.0;
    for series in [Series::P, Series::PTilde] {
        for (term, z) in m.terms(series).iter().zip(m.complement_z()) {
            worst = worst.max(term.right.norm() - z);
        }
    }
    vec![CheckRecord::new(
        "stored_norms",
        worst.max(0.0),
        p.config.tolerances.stored_norm,
    )]
}

/// Residuals of `∫∫ K f conj(g)` against `⟨Tf, g⟩` and of `∫ K(s, t) f(t) dt`
/// against `(Tf)(s)`, with `T = U S U⁻¹` taken from the assignment map.
///
/// The double integral uses the tensor product of one composite Gauss rule
/// on `[-window, window]`; since every kernel term is separable, the
/// tensor sum is evaluated as a sum over terms of products of line sums.
pub fn action_residuals(
    model: &KernelModel,
    wavelets: &WaveletSystem,
    t: &ComplexMatrix,
    tests: &[(ComplexVector, ComplexVector)],
    points: &[f64],
    config: &PipelineConfig,
    mode: EvalMode,
) -> (f64, f64) {
    if tests.is_empty() {
        return (0.0, 0.0);
    }
    let exact_pairs: Vec<C64> = tests
        .iter()
        .map(|(f, g)| {
            t.apply(f)
                .and_then(|tf| inner(&tf, g))
                .unwrap_or(C64::new(f64::NAN, 0.0))
        })
        .collect();
    let tf0 = t.apply(&tests[0].0).expect("square");
    let at_points = model.sample(wavelets, points, 0, EvalMode::Direct).expect("order 0");
    let exact_points: Vec<C64> = (0..points.len()).map(|m| at_points.combine(m, &tf0)).collect();
    let terms: Vec<_> = Orientation::Kernel
        .series()
        .iter()
        .flat_map(|&s| model.active_terms(s))
        .collect();
    let left_at_points: Vec<Vec<C64>> = (0..points.len())
        .map(|m| terms.iter().map(|term| at_points.combine(m, &term.left)).collect())
        .collect();
    let w = config.grid.window;
    let q = &config.quadrature;
    let est = integrate_doubling(-w, w, q.order, q.start_panels, q.max_panels, q.tolerance, |rule| {
        let samples = model.sample(wavelets, &rule.nodes, 0, mode).expect("order 0");
        // right[k][n] = Σ wt conj([b_k]) f_n, left[k][n] = Σ wt [a_k] conj(g_n)
        let mut right = vec![vec![C64::new(0.0, 0.0); tests.len()]; terms.len()];
        let mut left = right.clone();
        for (node, &wt) in rule.weights.iter().enumerate() {
            let fs: Vec<C64> = tests.iter().map(|(f, _)| samples.combine(node, f)).collect();
            let gs: Vec<C64> = tests.iter().map(|(_, g)| samples.combine(node, g).conj()).collect();
            for (k, term) in terms.iter().enumerate() {
                let a = samples.combine(node, &term.left) * wt;
                let b = samples.combine(node, &term.right).conj() * wt;
                for n in 0..tests.len() {
                    right[k][n] += b * fs[n];
                    left[k][n] += a * gs[n];
                }
            }
        }
        let mut out = Vec::with_capacity(2 * (tests.len() + points.len()));
        for n in 0..tests.len() {
            let v: C64 = terms
                .iter()
                .enumerate()
                .map(|(k, term)| term.weight * left[k][n] * right[k][n])
                .sum();
            out.extend([v.re, v.im]);
        }
        for row in &left_at_points {
            let v: C64 = terms
                .iter()
                .enumerate()
                .map(|(k, term)| term.weight * row[k] * right[k][0])
                .sum();
            out.extend([v.re, v.im]);
        }
        out
    });
    let value = |k: usize| C64::new(est.value[2 * k], est.value[2 * k + 1]);
    let pair_residual = (0..tests.len())
        .map(|n| (value(n) - exact_pairs[n]).norm())
        .fold(0.0, f64::max);
    let point_residual = (0..points.len())
        .map(|m| (value(tests.len() + m) - exact_points[m]).norm())
        .fold(0.0, f64::max);
    (pair_residual, point_residual)
}

fn action_agreement(p: &Pipeline) -> Vec<CheckRecord> {
    let t = match p.assignment.conjugate(p.environment().matrix()) {
        Ok(t) => t,
        Err(_) => {
            return vec![CheckRecord::new(
                "action_agreement",
                f64::INFINITY,
                p.config.tolerances.action,
            )]
        }
    };
    let dim = p.model.dim();
    let mut rng = rng(p, 6);
    let tests: Vec<_> = (0..p.config.samples.action_tests)
        .map(|_| (random_unit_vector(&mut rng, dim), random_unit_vector(&mut rng, dim)))
        .collect();
    let e = p.config.grid.extent;
    let points: Vec<f64> = (0..p.config.samples.action_points)
        .map(|_| rng.gen_range(-e..e))
        .collect();
    let (pairs, pointwise) = action_residuals(&p.model, &p.wavelets, &t, &tests, &points, &p.config, p.eval_mode());
    let tol = p.config.tolerances.action;
    vec![
        CheckRecord::new("action_agreement", pairs, tol),
        CheckRecord::new("action_pointwise", pointwise, tol),
    ]
}

/// `max |K(s, t) − conj(K*(t, s))|` over the given points.
pub fn symmetry_residual(model: &KernelModel, wavelets: &WaveletSystem, points: &[(f64, f64)]) -> f64 {
    points
        .par_iter()
        .map(|&(s, t)| {
            let k = model.eval(wavelets, Orientation::Kernel, s, t, 0, 0);
            let ks = model.eval(wavelets, Orientation::Adjoint, t, s, 0, 0);
            match (k, ks) {
                (Ok(a), Ok(b)) => (a - b.conj()).norm(),
                _ => f64::INFINITY,
            }
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

fn random_plane_points(rng: &mut impl Rng, count: usize, extent: f64) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| (rng.gen_range(-extent..extent), rng.gen_range(-extent..extent)))
        .collect()
}

fn conjugate_symmetry(p: &Pipeline) -> Vec<CheckRecord> {
    let pts = random_plane_points(&mut rng(p, 7), p.config.samples.symmetry_points, p.config.grid.extent);
    vec![CheckRecord::new(
        "conjugate_symmetry",
        symmetry_residual(&p.model, &p.wavelets, &pts),
        p.config.tolerances.symmetry,
    )]
}

/// Basis rows (all orders `0..=i_max`) at `x − 2h, …, x + 2h`.
fn stencil_rows(model: &KernelModel, wavelets: &WaveletSystem, x: f64, h: f64) -> Vec<Vec<Vec<f64>>> {
    let orders = model.i_max() + 1;
    (0..5)
        .map(|m| {
            let at = x + (m as f64 - 2.0) * h;
            let mut by_order = vec![vec![0.0; model.dim()]; orders];
            let mut buf = vec![0.0; orders];
            for (r, &n) in model.wavelets().iter().enumerate() {
                wavelets.basis_orders_im(n, at, &mut buf);
                for i in 0..orders {
                    by_order[i][r] = buf[i];
                }
            }
            by_order
        })
        .collect()
}

/// Largest relative gap between termwise `∂^{i+j}K` and a five-point
/// central difference of the next lower order, over `1 ≤ i + j ≤ i_max`.
/// Values below `1e-6` of the certified sup are compared against that floor.
pub fn smoothness_residual(
    model: &KernelModel,
    wavelets: &WaveletSystem,
    orientation: Orientation,
    points: &[(f64, f64)],
) -> f64 {
    let h = 1e-3;
    let top = model.i_max();
    points
        .par_iter()
        .map(|&(s, t)| {
            let ls = stencil_rows(model, wavelets, s, h);
            let rs = stencil_rows(model, wavelets, t, h);
            let k =
                |ms: usize, mt: usize, i: usize, j: usize| model.value_from_rows(orientation, &ls[ms][i], &rs[mt][j]);
            let mut worst: f64 = 0.0;
            for i in 0..=top {
                for j in 0..=(top - i) {
                    if i + j == 0 {
                        continue;
                    }
                    let exact = k(2, 2, i, j);
                    let fd = if i > 0 {
                        five_point([0, 1, 2, 3, 4].map(|m| k(m, 2, i - 1, j)), h)
                    } else {
                        five_point([0, 1, 2, 3, 4].map(|m| k(2, m, i, j - 1)), h)
                    };
                    let floor = 1e-6 * model.certified_sup(orientation, i, j);
                    let denom = exact.norm().max(floor);
                    worst = worst.max(ratio((fd - exact).norm(), denom));
                }
            }
            worst
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

fn smoothness(p: &Pipeline) -> Vec<CheckRecord> {
    let pts = random_plane_points(&mut rng(p, 8), p.config.samples.smoothness_points, p.config.grid.extent);
    [Orientation::Kernel, Orientation::Adjoint]
        .into_iter()
        .map(|o| {
            CheckRecord::new(
                format!("smoothness_{}", orientation_tag(o)),
                smoothness_residual(&p.model, &p.wavelets, o, &pts),
                p.config.tolerances.smoothness,
            )
        })
        .collect()
}

/// `‖𝐤(s)‖²` by coefficient Parseval against `∫|K(s, t)|² dt` by adaptive
/// quadrature over `|t| ≤ window`; the largest gap relative to the largest
/// squared norm.
pub fn parseval_residual(
    model: &KernelModel,
    wavelets: &WaveletSystem,
    orientation: Orientation,
    points: &[f64],
    config: &PipelineConfig,
    mode: EvalMode,
) -> f64 {
    let left = model.sample(wavelets, points, 0, EvalMode::Direct).expect("order 0");
    let coeff: Vec<f64> = (0..points.len())
        .map(|m| model.carleman_from_row(orientation, left.row(m)).norm_sqr())
        .collect();
    let w = config.grid.window;
    let q = &config.quadrature;
    let est = integrate_doubling(-w, w, q.order, q.start_panels, q.max_panels, q.tolerance, |rule| {
        let right = model.sample(wavelets, &rule.nodes, 0, mode).expect("order 0");
        let grid = model.grid_from_samples(orientation, &left, &right);
        let n = rule.nodes.len();
        (0..points.len())
            .map(|m| {
                grid[m * n..(m + 1) * n]
                    .iter()
                    .zip(&rule.weights)
                    .map(|(k, wt)| wt * k.norm_sqr())
                    .sum()
            })
            .collect()
    });
    let scale = coeff.iter().copied().fold(0.0, f64::max);
    let gap = coeff
        .iter()
        .zip(&est.value)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ratio(gap, scale)
}

fn carleman_parseval(p: &Pipeline) -> Vec<CheckRecord> {
    let mut rng = rng(p, 9);
    let e = p.config.grid.extent;
    let pts: Vec<f64> = (0..p.config.samples.parseval_points)
        .map(|_| rng.gen_range(-e..e))
        .collect();
    [Orientation::Kernel, Orientation::Adjoint]
        .into_iter()
        .map(|o| {
            CheckRecord::new(
                format!("carleman_parseval_{}", orientation_tag(o)),
                parseval_residual(&p.model, &p.wavelets, o, &pts, &p.config, p.eval_mode()),
                p.config.tolerances.parseval,
            )
        })
        .collect()
}

fn spaced_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Condition (ii) for `d^i𝐤/ds^i` (or the `K*` analogue):
///
/// * continuity: the largest step `‖𝐤^{(i)}(s + δ) − 𝐤^{(i)}(s)‖` on the
///   `δ`-spaced grid over `|s| ≤ window`, against `δ · Σ w sup|[a]^{(i+1)}| ‖b‖`;
/// * decay: `max_{frame ≤ |s| ≤ window} ‖𝐤^{(i)}‖ / max_{|s| ≤ extent} ‖𝐤^{(i)}‖`;
/// * strong derivative (`i ≥ 1`): central differences of `𝐤^{(i−1)}` with
///   step `1e-3` against `𝐤^{(i)}`, in `L₂`, relative to `max ‖𝐤^{(i)}‖`.
pub fn check_condition_ii(
    model: &KernelModel,
    wavelets: &WaveletSystem,
    orientation: Orientation,
    i: usize,
    config: &PipelineConfig,
    mode: EvalMode,
) -> Vec<CheckRecord> {
    let g = &config.grid;
    let tol = &config.tolerances;
    let tag = format!("condition_ii_{}_i{i}", orientation_tag(orientation));
    let pts = spaced_points(-g.window, g.window, g.continuity_step);
    let samples = match model.sample(wavelets, &pts, i, mode) {
        Ok(s) => s,
        Err(_) => return vec![CheckRecord::new(format!("{tag}_continuity"), f64::INFINITY, 0.0)],
    };
    let vectors: Vec<ComplexVector> = (0..pts.len())
        .map(|m| model.carleman_from_row(orientation, samples.row(m)))
        .collect();
    let step = vectors
        .windows(2)
        .map(|w| w[1].sub(&w[0]).map_or(f64::INFINITY, |d| d.norm()))
        .fold(0.0, f64::max);
    let lipschitz: f64 = orientation
        .series()
        .iter()
        .flat_map(|&s| model.active_terms(s))
        .map(|t| t.weight * model.sup_bound(&t.left, i + 1) * t.right.norm())
        .sum();
    let mut records = vec![CheckRecord::new(
        format!("{tag}_continuity"),
        step,
        g.continuity_step * lipschitz,
    )];

    let mut outer: f64 = 0.0;
    let mut inner_max: f64 = 0.0;
    for (s, v) in pts.iter().zip(&vectors) {
        let n = v.norm();
        if s.abs() >= g.frame {
            outer = outer.max(n);
        }
        if s.abs() <= g.extent {
            inner_max = inner_max.max(n);
        }
    }
    records.push(CheckRecord::new(
        format!("{tag}_decay"),
        ratio(outer, inner_max),
        tol.vanishing,
    ));

    if i >= 1 {
        let h = 1e-3;
        let centres = grid_points(21, g.extent);
        let probe: Vec<f64> = centres.iter().flat_map(|&s| [s - h, s + h]).collect();
        let lower = model
            .sample(wavelets, &probe, i - 1, EvalMode::Direct)
            .expect("lower order");
        let exact = model.sample(wavelets, &centres, i, EvalMode::Direct).expect("order i");
        let mut gap: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for m in 0..centres.len() {
            let lo = model.carleman_from_row(orientation, lower.row(2 * m));
            let hi = model.carleman_from_row(orientation, lower.row(2 * m + 1));
            let fd = hi.sub(&lo).expect("same length").scale(C64::new(0.5 / h, 0.0));
            let want = model.carleman_from_row(orientation, exact.row(m));
            scale = scale.max(want.norm());
            gap = gap.max(fd.sub(&want).map_or(f64::INFINITY, |d| d.norm()));
        }
        records.push(CheckRecord::new(
            format!("{tag}_derivative"),
            ratio(gap, scale),
            tol.smoothness,
        ));
    }
    records
}

fn condition_ii(p: &Pipeline) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for o in [Orientation::Kernel, Orientation::Adjoint] {
        for i in 0..=p.config.i_max {
            out.extend(check_condition_ii(
                &p.model,
                &p.wavelets,
                o,
                i,
                &p.config,
                p.eval_mode(),
            ));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn grid_sup(
    model: &KernelModel,
    wavelets: &WaveletSystem,
    o: Orientation,
    s: &[f64],
    t: &[f64],
    i: usize,
    j: usize,
    mode: EvalMode,
) -> f64 {
    model
        .grid(wavelets, o, s, t, i, j, mode)
        .map_or(f64::INFINITY, |g| g.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `sup |K|` over `frame ≤ |s| ≤ window, |t| ≤ window` divided by
/// `sup |K|` over `|s|, |t| ≤ extent`, both on a grid of spacing
/// `sup_spacing`.
pub fn vanishing_ratio(
    model: &KernelModel,
    wavelets: &WaveletSystem,
    orientation: Orientation,
    config: &PipelineConfig,
    mode: EvalMode,
) -> f64 {
    let g = &config.grid;
    let ring = spaced_points(g.frame, g.window, g.sup_spacing);
    let frame_s: Vec<f64> = ring.iter().rev().map(|x| -x).chain(ring.iter().copied()).collect();
    let line = spaced_points(-g.window, g.window, g.sup_spacing);
    let centre = spaced_points(-g.extent, g.extent, g.sup_spacing);
    let outer = grid_sup(model, wavelets, orientation, &frame_s, &line, 0, 0, mode);
    let inner_sup = grid_sup(model, wavelets, orientation, &centre, &centre, 0, 0, mode);
    ratio(outer, inner_sup)
}

fn vanishing(p: &Pipeline) -> Vec<CheckRecord> {
    [Orientation::Kernel, Orientation::Adjoint]
        .into_iter()
        .map(|o| {
            CheckRecord::new(
                format!("vanishing_{}", orientation_tag(o)),
                vanishing_ratio(&p.model, &p.wavelets, o, &p.config, p.eval_mode()),
                p.config.tolerances.vanishing,
            )
        })
        .collect()
}

/// Cap used by the truncation check: the configured cap, otherwise half of
/// the longest series.
pub fn truncation_cap(model: &KernelModel, config: &PipelineConfig) -> usize {
    use crate::kernel::Series;
    config.cap_terms.unwrap_or_else(|| {
        [Series::P, Series::PTilde, Series::F, Series::FTilde]
            .iter()
            .map(|&s| model.terms(s).len())
            .max()
            .unwrap_or(0)
            / 2
    })
}

/// Measured sup of the omitted part against the certified bound for
/// `∂^{i+j}`, `(i, j) ∈ {0, 1}²`, both orientations.
pub fn truncation_records(
    model: &KernelModel,
    wavelets: &WaveletSystem,
    cap: usize,
    config: &PipelineConfig,
    mode: EvalMode,
) -> Vec<CheckRecord> {
    let full = model.clone().with_cap(None);
    let capped = model.clone().with_cap(Some(cap));
    let pts = spaced_points(-config.grid.extent, config.grid.extent, config.grid.sup_spacing);
    let top = config.i_max.min(1);
    let mut out = Vec::new();
    for o in [Orientation::Kernel, Orientation::Adjoint] {
        for i in 0..=top {
            for j in 0..=top {
                let name = format!("truncation_{}_d{i}{j}", orientation_tag(o));
                let measured = match (
                    full.grid(wavelets, o, &pts, &pts, i, j, mode),
                    capped.grid(wavelets, o, &pts, &pts, i, j, mode),
                ) {
                    (Ok(a), Ok(b)) => a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max),
                    _ => f64::INFINITY,
                };
                let bound = capped.truncation_bound(o, i, j).unwrap_or(f64::NAN);
                out.push(CheckRecord::new(name, measured, bound));
            }
        }
    }
    out
}

fn truncation(p: &Pipeline) -> Vec<CheckRecord> {
    truncation_records(
        &p.model,
        &p.wavelets,
        truncation_cap(&p.model, &p.config),
        &p.config,
        p.eval_mode(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn record_line_format() {
        let r = CheckRecord::new("gram", 1.5e-7, 5e-6);
        assert_eq!(r.line(), "CHECK gram residual=1.5e-7 bound=5e-6 PASS");
        let bad = CheckRecord::new("x", f64::NAN, 1.0);
        assert!(!bad.pass);
        assert!(CheckRecord::new("zero", 0.0, 0.0).pass);
    }

    #[test]
    fn report_conjunction_and_render() {
        let rep =
            VerificationReport::from_records(vec![CheckRecord::new("a", 0.0, 1.0), CheckRecord::new("b", 2.0, 1.0)]);
        assert!(!rep.pass);
        assert_eq!(rep.failures().count(), 1);
        assert!(rep.render().ends_with("RESULT FAIL checks=2 failed=1\n"));
    }

    #[test]
    fn five_point_is_exact_on_quartics() {
        let f = |x: f64| x.powi(4) - 2.0 * x.powi(3) + x;
        let x = 0.7;
        let h = 0.1;
        let v = [-2.0, -1.0, 0.0, 1.0, 2.0].map(|m| f(x + m * h));
        let want = 4.0 * x.powi(3) - 6.0 * x * x + 1.0;
        assert!((five_point(v, h) - want).abs() < 1e-12);
    }

    #[test]
    fn zero_operator_passes_everything() {
        let p = Pipeline::build(&fixtures::zero_operator(), &PipelineConfig::default()).unwrap();
        let rep = run_all(&p);
        for r in &rep.records {
            assert!(r.pass, "{}", r.line());
            assert!(r.residual.is_finite() || r.name == "nuclear_sums");
        }
        assert!(rep.pass);
    }
}
