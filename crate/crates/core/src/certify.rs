//! Mechanical certification of the structural inequalities behind the
//! a priori bounds: degenerate parabolicity, the gradient-bound differential
//! inequality, and the per-family sufficient conditions on G and psi tables.
//!
//! All verdicts come from sampling closed-form tables on the admissibility
//! box; nothing here runs a simulation. Two independent routes guard each
//! other: a closed-form reduction of the inequality to a scalar quadratic in
//! the tangential curvature eigenvalues, and a raw matrix oracle that
//! evaluates the inequality on random curvature matrices built orthogonal to
//! the gradient direction. The routes share no algebra beyond the model
//! derivative tables themselves.

use crate::error::Error;
use crate::models::{AdmissibilityBox, Form, GTable, ModelSpec, PsiTable};
use crate::sym::{frame_from_direction, SymMat};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::io::Write;

/// Largest admissible exponent for u_t = Lap(u^m) in `dim` space
/// dimensions: 1 + 4 / (3 + dim).
pub fn pme_m_max(dim: usize) -> f64 {
    1.0 + 4.0 / (3.0 + dim as f64)
}

/// Half-width of the saturation interval around 1/2 on which the full
/// hydrology model is certified: (2 + 2 dim)^(-1/2).
pub fn hydrology_delta(dim: usize) -> f64 {
    1.0 / (2.0 + 2.0 * dim as f64).sqrt()
}

/// Upper edge of the admissible window for (m - 1)(p - 1) in the doubly
/// nonlinear family: 4 / (3 + dim).
pub fn doubly_nonlinear_window(dim: usize) -> f64 {
    4.0 / (3.0 + dim as f64)
}

/// The scalar reduction target: q(L) = c + b * sum(L) + a * sum(L^2) over
/// L in R^(dim-1), the tangential curvature eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub dim: usize,
}

/// Exact minimum of q over all of R^(dim-1): each eigenvalue sits at
/// -b / (2a), giving c - (dim-1) b^2 / (4a). Requires a > 0.
pub fn quadratic_min_closed_form(q: &QuadraticForm) -> Result<f64> {
    if !(q.a > 0.0) {
        return Err(Error::invalid_parameter(
            "a",
            format!("closed-form minimum needs a > 0, got {}", q.a),
        ));
    }
    Ok(q.c - (q.dim as f64 - 1.0) * q.b * q.b / (4.0 * q.a))
}

/// Minimum of q over the uniform grid of L in [-radius, radius]^(dim-1)
/// with `n_steps` points per axis.
///
/// The objective is separable across eigenvalues, so the product-grid
/// minimum equals c + (dim-1) * min over one axis; that identity (tested
/// against full enumeration) keeps the scan O(n_steps) in any dimension.
pub fn quadratic_min_brute_force(q: &QuadraticForm, radius: f64, n_steps: usize) -> f64 {
    if q.dim <= 1 {
        return q.c;
    }
    assert!(n_steps >= 2, "need at least two grid points");
    assert!(radius > 0.0, "radius must be positive");
    let step = 2.0 * radius / (n_steps - 1) as f64;
    let mut best = f64::INFINITY;
    for j in 0..n_steps {
        let l = -radius + j as f64 * step;
        let t = q.b * l + q.a * l * l;
        if t < best {
            best = t;
        }
    }
    q.c + (q.dim - 1) as f64 * best
}

/// Pass/fail outcome of a certification check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Where the worst margin was attained.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Witness {
    pub u: Option<f64>,
    pub s: Option<f64>,
    pub lambda: Option<Vec<f64>>,
    /// Free-form note, e.g. which sub-condition or branch fired.
    pub detail: Option<String>,
}

/// Outcome of one certification check. Composite checks carry their
/// sub-checks in `parts`; `worst_margin` is then the minimum over parts.
#[derive(Debug, Clone)]
pub struct CertReport {
    pub condition: String,
    pub verdict: Verdict,
    pub worst_margin: f64,
    pub witness: Witness,
    pub samples: usize,
    pub seed: Option<u64>,
    pub parts: Vec<CertReport>,
}

impl CertReport {
    fn combine(condition: &str, parts: Vec<CertReport>) -> CertReport {
        assert!(!parts.is_empty());
        let verdict = if parts.iter().all(|p| p.verdict.is_pass()) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let worst = parts
            .iter()
            .min_by(|x, y| x.worst_margin.partial_cmp(&y.worst_margin).unwrap())
            .unwrap();
        CertReport {
            condition: condition.to_string(),
            verdict,
            worst_margin: worst.worst_margin,
            witness: worst.witness.clone(),
            samples: parts.iter().map(|p| p.samples).sum(),
            seed: parts.iter().find_map(|p| p.seed),
            parts,
        }
    }

    /// Serializes this report (leaf parts first, then the composite) as
    /// key = value blocks separated by blank lines.
    pub fn write_blocks<W: Write>(&self, w: &mut W) -> Result<()> {
        for part in &self.parts {
            part.write_blocks(w)?;
        }
        let fmt_opt = |v: &Option<f64>| v.map_or("-".to_string(), |x| format!("{x}"));
        let lambda = self.witness.lambda.as_ref().map_or("-".to_string(), |l| {
            let mut s = String::new();
            for (i, v) in l.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v}");
            }
            if s.is_empty() {
                "()".to_string()
            } else {
                s
            }
        });
        writeln!(w, "condition = {}", self.condition)?;
        writeln!(
            w,
            "verdict = {}",
            if self.verdict.is_pass() { "pass" } else { "fail" }
        )?;
        writeln!(w, "worst_margin = {}", self.worst_margin)?;
        writeln!(w, "witness_u = {}", fmt_opt(&self.witness.u))?;
        writeln!(w, "witness_s = {}", fmt_opt(&self.witness.s))?;
        writeln!(w, "witness_lambda = {lambda}")?;
        writeln!(w, "samples = {}", self.samples)?;
        writeln!(
            w,
            "seed = {}",
            self.seed.map_or("-".to_string(), |s| s.to_string())
        )?;
        if let Some(d) = &self.witness.detail {
            writeln!(w, "note = {d}")?;
        }
        writeln!(w)?;
        Ok(())
    }
}

/// Sampling parameters shared by the checkers.
#[derive(Debug, Clone, Copy)]
pub struct CertOptions {
    /// Tolerance, applied as `tol * (1 + local magnitude)` per sample.
    pub tol: f64,
    /// Seed for every randomized route; recorded in reports.
    pub seed: u64,
    /// Half-range for sampled tangential eigenvalues.
    pub lambda_range: f64,
}

impl Default for CertOptions {
    fn default() -> Self {
        CertOptions {
            tol: 1e-9,
            seed: 0,
            lambda_range: 5.0,
        }
    }
}

impl CertOptions {
    fn tol_at(&self, scale: f64) -> f64 {
        self.tol * (1.0 + scale)
    }
}

/// Running minimum of inequality slack over samples. Keeps the first
/// (lowest-index) sample attaining the minimum as the witness.
struct Tracker {
    worst: f64,
    witness: Witness,
    violated: bool,
    samples: usize,
}

impl Tracker {
    fn new() -> Self {
        Tracker {
            worst: f64::INFINITY,
            witness: Witness::default(),
            violated: false,
            samples: 0,
        }
    }

    fn push(&mut self, slack: f64, tol: f64, witness: impl FnOnce() -> Witness) {
        self.samples += 1;
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if slack < -tol {
            self.violated = true;
        }
        if slack < self.worst {
            self.worst = slack;
            self.witness = witness();
        }
    }

    fn report(self, condition: &str, seed: Option<u64>) -> CertReport {
        CertReport {
            condition: condition.to_string(),
            verdict: if self.violated { Verdict::Fail } else { Verdict::Pass },
            worst_margin: self.worst,
            witness: self.witness,
            samples: self.samples,
            seed,
            parts: Vec::new(),
        }
    }
}

fn grid_1d(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Finite guard: sampling a non-finite table value can never certify.
fn guarded(slack: f64) -> f64 {
    if slack.is_finite() {
        slack
    } else if slack == f64::INFINITY {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// Checks the G-family sufficient conditions on [u_lo, u_hi] at `n_u`
/// equispaced points (endpoints included):
///
/// * G' >= 0 (monotone flux),
/// * (dim-1)/4 (G'')^2 + G''' G' <= 0 (the curvature product bound),
/// * G''' <= 0 (reported separately so failures are distinguishable).
pub fn check_g_condition(
    g: &GTable,
    dim: usize,
    u_lo: f64,
    u_hi: f64,
    n_u: usize,
    opts: &CertOptions,
) -> CertReport {
    let mut prime = Tracker::new();
    let mut third = Tracker::new();
    let mut curvature = Tracker::new();
    let quarter = (dim as f64 - 1.0) / 4.0;
    for &u in &grid_1d(u_lo, u_hi, n_u) {
        let (g1, g2, g3) = (g.g1(u), g.g2(u), g.g3(u));
        let wit = |detail: &str| {
            let d = detail.to_string();
            move || Witness {
                u: Some(u),
                detail: Some(d),
                ..Witness::default()
            }
        };
        if !(g1.is_finite() && g2.is_finite() && g3.is_finite()) {
            let t = opts.tol_at(1.0);
            prime.push(f64::NEG_INFINITY, t, wit("non-finite table value"));
            third.push(f64::NEG_INFINITY, t, wit("non-finite table value"));
            curvature.push(f64::NEG_INFINITY, t, wit("non-finite table value"));
            continue;
        }
        prime.push(g1, opts.tol_at(g1.abs()), wit("g_prime"));
        third.push(-g3, opts.tol_at(g3.abs()), wit("g_third"));
        let lhs = quarter * g2 * g2 + g3 * g1;
        let scale = quarter * g2 * g2 + (g3 * g1).abs();
        curvature.push(guarded(-lhs), opts.tol_at(scale), wit("curvature_product"));
    }
    CertReport::combine(
        "g_condition",
        vec![
            prime.report("g_condition/prime_nonneg", None),
            curvature.report("g_condition/curvature_product", None),
            third.report("g_condition/third_nonpos", None),
        ],
    )
}

/// Checks the psi-family sufficient conditions on the box's (u, s) grid:
///
/// * psi >= 0,
/// * psi + 2 s D_s psi >= 0 (radial diffusivity),
/// * (dim-1)/4 (D_u psi)^2 + psi D_uu psi <= 0.
pub fn check_psi_condition(
    psi: &PsiTable,
    dim: usize,
    abox: &AdmissibilityBox,
    n_u: usize,
    n_s: usize,
    opts: &CertOptions,
) -> CertReport {
    let mut nonneg = Tracker::new();
    let mut radial = Tracker::new();
    let mut curvature = Tracker::new();
    let quarter = (dim as f64 - 1.0) / 4.0;
    for &u in &grid_1d(abox.u_lo, abox.u_hi, n_u) {
        for &s in &grid_1d(abox.grad_sq_min, abox.grad_sq_max, n_s) {
            let wit = |detail: &str| {
                let d = detail.to_string();
                move || Witness {
                    u: Some(u),
                    s: Some(s),
                    detail: Some(d),
                    ..Witness::default()
                }
            };
            let p = psi.psi(u, s);
            let r = psi.radial(u, s);
            let du = psi.d_u(u, s);
            let duu = psi.d_uu(u, s);
            nonneg.push(guarded(p), opts.tol_at(p.abs()), wit("psi_nonneg"));
            radial.push(guarded(r), opts.tol_at(r.abs()), wit("radial_diffusivity"));
            let lhs = quarter * du * du + p * duu;
            let scale = quarter * du * du + (p * duu).abs();
            curvature.push(guarded(-lhs), opts.tol_at(scale), wit("curvature_product"));
        }
    }
    CertReport::combine(
        "psi_condition",
        vec![
            nonneg.report("psi_condition/psi_nonneg", None),
            radial.report("psi_condition/radial_nonneg", None),
            curvature.report("psi_condition/curvature_product", None),
        ],
    )
}

/// Quadratic coefficients of the tangential reduction at a state (u, s):
/// slack(L) = c + b sum(L) + a sum(L^2) with a the tangential diffusivity,
/// b = -s * d(diffusivity)/du, c = -s^2 * d2(table)/du2.
fn reduction_coefficients(model: &ModelSpec, u: f64, s: f64) -> (f64, f64, f64) {
    match model.form() {
        Form::G(t) => (t.g1(u), -s * t.g2(u), -s * s * t.g3(u)),
        Form::Psi(t) => (t.psi(u, s), -s * t.d_u(u, s), -s * s * t.d_uu(u, s)),
    }
}

/// Checks the gradient-bound differential inequality on the model's box by
/// two independent routes and reports the worst margin over both.
///
/// Route 1 (`closed_form`): on an n_u x n_s grid, reduce to the scalar
/// quadratic and take its exact minimum over all tangential curvatures.
/// Degenerate branch: where the leading coefficient vanishes the minimum is
/// c in one dimension, and requires b = 0 (then equals c) in higher
/// dimension since the linear term is otherwise unbounded below.
///
/// Route 2 (`matrix_oracle`): n_matrix random states; build a curvature
/// matrix X = sum_k L_k q_k q_k^T from an orthonormal frame with first
/// column p/|p| (X p = 0 is verified to 1e-12 before use), then evaluate
/// the raw inequality -dF/dX : X^2 + |p|^2 dF/du <= 0 with full derivative
/// assembly and no use of the constraint.
pub fn check_differential_inequality_a(
    model: &ModelSpec,
    n_u: usize,
    n_s: usize,
    n_matrix: usize,
    opts: &CertOptions,
) -> Result<CertReport> {
    let abox = *model.abox();
    let dim = abox.dim;

    // Route 1: closed-form reduction on the sampling grid.
    let mut closed = Tracker::new();
    for &u in &grid_1d(abox.u_lo, abox.u_hi, n_u) {
        for &s in &grid_1d(abox.grad_sq_min, abox.grad_sq_max, n_s) {
            let (a, b, c) = reduction_coefficients(model, u, s);
            let scale = a.abs() + b.abs() + c.abs();
            let tol = opts.tol_at(if scale.is_finite() { scale } else { 1.0 });
            let wit = |lambda: Option<Vec<f64>>, detail: &str| {
                let d = detail.to_string();
                move || Witness {
                    u: Some(u),
                    s: Some(s),
                    lambda,
                    detail: Some(d),
                }
            };
            if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                closed.push(f64::NEG_INFINITY, tol, wit(None, "non-finite reduction"));
            } else if a > tol {
                let q = QuadraticForm { a, b, c, dim };
                let slack = quadratic_min_closed_form(&q).expect("a > 0 checked");
                let minimizer = vec![-b / (2.0 * a); dim.saturating_sub(1)];
                closed.push(slack, tol, wit(Some(minimizer), "interior"));
            } else if a < -tol {
                // Anti-diffusive leading coefficient: unbounded below.
                closed.push(f64::NEG_INFINITY, tol, wit(None, "negative leading coefficient"));
            } else if dim == 1 {
                // No tangential directions; the inequality is c >= 0.
                closed.push(c, tol, wit(None, "degenerate"));
            } else if b.abs() > tol {
                // a = 0 with b != 0: linear term unbounded below.
                closed.push(f64::NEG_INFINITY, tol, wit(None, "degenerate with drift"));
            } else {
                closed.push(c, tol, wit(None, "degenerate"));
            }
        }
    }
    let closed = closed.report("differential_inequality/closed_form", None);

    // Route 2: raw evaluation on random tangential curvature matrices.
    let mut oracle = Tracker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let s_floor = abox.grad_sq_min.max(1e-6 * abox.grad_sq_max);
    for _ in 0..n_matrix {
        let u = rng.gen_range(abox.u_lo..=abox.u_hi);
        let s = rng.gen_range(s_floor..=abox.grad_sq_max);
        let dir = random_direction(&mut rng, dim);
        let p: Vec<f64> = dir.iter().map(|d| d * s.sqrt()).collect();
        let lambda: Vec<f64> =
            (0..dim - 1).map(|_| rng.gen_range(-opts.lambda_range..=opts.lambda_range)).collect();
        let frame = frame_from_direction(&p);
        let terms: Vec<(f64, &[f64])> = lambda
            .iter()
            .zip(frame.iter().skip(1))
            .map(|(l, q)| (*l, q.as_slice()))
            .collect();
        let x = SymMat::from_rank_one_sum(dim, &terms);
        let p_norm: f64 = s.sqrt();
        let l_max = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let xp_bound = x
            .mul_vec(&p)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if xp_bound > 1e-12 * (1.0 + l_max * p_norm) {
            return Err(Error::invalid_parameter(
                "matrix_oracle",
                format!("constructed curvature matrix fails X p = 0: residual {xp_bound}"),
            ));
        }
        let derivs = model.f_derivatives(&x, &p, u);
        let term1 = derivs.d_xf.frobenius_inner(&x.square());
        let term2 = s * derivs.d_uf;
        let slack = term1 - term2; // = -(raw inequality left side)
        let tol = opts.tol_at(term1.abs() + term2.abs());
        oracle.push(guarded(slack), tol, || Witness {
            u: Some(u),
            s: Some(s),
            lambda: Some(lambda.clone()),
            detail: Some("matrix sample".to_string()),
        });
    }
    let oracle = oracle.report("differential_inequality/matrix_oracle", Some(opts.seed));

    Ok(CertReport::combine(
        "differential_inequality",
        vec![closed, oracle],
    ))
}

/// Checks degenerate parabolicity two ways: both effective diffusivities
/// nonnegative on the box grid, and F monotone along random positive
/// semidefinite matrix increments at random in-box states.
pub fn check_parabolicity(
    model: &ModelSpec,
    n_samples: usize,
    n_u: usize,
    n_s: usize,
    opts: &CertOptions,
) -> Result<CertReport> {
    let abox = *model.abox();
    let dim = abox.dim;

    let mut diff = Tracker::new();
    for &u in &grid_1d(abox.u_lo, abox.u_hi, n_u) {
        for &s in &grid_1d(abox.grad_sq_min, abox.grad_sq_max, n_s) {
            let (tang, rad) = model.effective_diffusivities_unchecked(u, s);
            let scale = tang.abs() + rad.abs();
            let tol = opts.tol_at(if scale.is_finite() { scale } else { 1.0 });
            let wit = |detail: &str| {
                let d = detail.to_string();
                move || Witness {
                    u: Some(u),
                    s: Some(s),
                    detail: Some(d),
                    ..Witness::default()
                }
            };
            diff.push(guarded(tang), tol, wit("tangential diffusivity"));
            diff.push(guarded(rad), tol, wit("radial diffusivity"));
        }
    }
    let diff = diff.report("parabolicity/diffusivity_nonneg", None);

    let mut mono = Tracker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let s_floor = abox.grad_sq_min.max(1e-6 * abox.grad_sq_max);
    for _ in 0..n_samples {
        let u = rng.gen_range(abox.u_lo..=abox.u_hi);
        let s = rng.gen_range(s_floor..=abox.grad_sq_max);
        let dir = random_direction(&mut rng, dim);
        let p: Vec<f64> = dir.iter().map(|d| d * s.sqrt()).collect();
        let mut x = SymMat::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                x.set(i, j, rng.gen_range(-2.0..2.0));
            }
        }
        // Y = X + P^T P is X plus a positive semidefinite increment.
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut y = x.clone();
        for i in 0..dim {
            for j in 0..=i {
                let inc: f64 = (0..dim).map(|k| rows[k][i] * rows[k][j]).sum();
                y.set(i, j, y.get(i, j) + inc);
            }
        }
        let fx = model.eval_f(&x, &p, u)?;
        let fy = model.eval_f(&y, &p, u)?;
        let slack = fy - fx;
        let tol = opts.tol_at(fx.abs() + fy.abs());
        mono.push(guarded(slack), tol, || Witness {
            u: Some(u),
            s: Some(s),
            detail: Some("monotone matrix increment".to_string()),
            ..Witness::default()
        });
    }
    let mono = mono.report("parabolicity/matrix_monotonicity", Some(opts.seed));

    Ok(CertReport::combine("parabolicity", vec![diff, mono]))
}

/// Runs every checker that applies to the model's family and returns the
/// reports in a fixed order: parabolicity, the family condition, the
/// differential inequality.
pub fn certify_model(
    model: &ModelSpec,
    n_u: usize,
    n_s: usize,
    n_matrix: usize,
    opts: &CertOptions,
) -> Result<Vec<CertReport>> {
    let abox = model.abox();
    let mut reports = vec![check_parabolicity(model, n_matrix.min(200), n_u, n_s, opts)?];
    match model.form() {
        Form::G(t) => reports.push(check_g_condition(
            t,
            abox.dim,
            abox.u_lo,
            abox.u_hi,
            n_u,
            opts,
        )),
        Form::Psi(t) => reports.push(check_psi_condition(t, abox.dim, abox, n_u, n_s, opts)),
    }
    reports.push(check_differential_inequality_a(model, n_u, n_s, n_matrix, opts)?);
    Ok(reports)
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.1 && norm <= 1.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
