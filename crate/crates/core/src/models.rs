//! The shipped equation families and their closed-form derivative tables.
//!
//! Every model here is a degenerate diffusion equation
//! u_t = F(D^2 u, Du, u) in one of two structural forms:
//!
//! * G-form: F = G'(u) tr X + G''(u) |p|^2, the expansion of
//!   u_t = Lap(G(u)). The flux through a cell face is the exact chord
//!   (G(u_r) - G(u_l)) / h, so the scheme is the standard 3/5-point stencil
//!   applied to G(u) and is monotone under the CFL bound.
//! * psi-form: F = (psi I + 2 D_s psi p (x) p) : X + D_u psi |p|^2, the
//!   expansion of u_t = div(psi(u, |Du|^2) Du). Fluxes use arithmetic face
//!   averages; monotonicity is not guaranteed, and the solver enforces range
//!   preservation at run time instead.
//!
//! Derivative tables are closed-form; nothing here differentiates
//! numerically. Evaluators are total on the shipped boxes.

use crate::error::Error;
use crate::sym::SymMat;
use crate::Result;
use std::fmt;

/// Relative slack applied to box-membership checks so boundary evaluations
/// (u exactly at u_lo, s exactly at grad_sq_max) stay legal.
const BOX_TOL: f64 = 1e-12;

/// Closed region of state space a model is certified/run on:
/// u in [u_lo, u_hi], |Du|^2 in [grad_sq_min, grad_sq_max], in `dim`
/// space dimensions.
///
/// `grad_sq_min` is a sampling bound for certification (power-law tables
/// with fractional exponents are singular at zero gradient); evaluation only
/// enforces the upper bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityBox {
    pub u_lo: f64,
    pub u_hi: f64,
    pub grad_sq_min: f64,
    pub grad_sq_max: f64,
    pub dim: usize,
}

impl AdmissibilityBox {
    pub fn new(u_lo: f64, u_hi: f64, grad_sq_max: f64, dim: usize) -> Result<Self> {
        AdmissibilityBox {
            u_lo,
            u_hi,
            grad_sq_min: 0.0,
            grad_sq_max,
            dim,
        }
        .validated()
    }

    pub fn with_grad_sq_min(mut self, grad_sq_min: f64) -> Result<Self> {
        self.grad_sq_min = grad_sq_min;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.u_lo.is_finite() && self.u_hi.is_finite()) || self.u_lo > self.u_hi {
            return Err(Error::invalid_parameter(
                "box.u",
                format!("need u_lo <= u_hi, got [{}, {}]", self.u_lo, self.u_hi),
            ));
        }
        if !(self.grad_sq_max > 0.0) || !self.grad_sq_max.is_finite() {
            return Err(Error::invalid_parameter(
                "box.grad_sq_max",
                format!("must be positive and finite, got {}", self.grad_sq_max),
            ));
        }
        if !(0.0..=self.grad_sq_max).contains(&self.grad_sq_min) {
            return Err(Error::invalid_parameter(
                "box.grad_sq_min",
                format!(
                    "must lie in [0, grad_sq_max], got {} with grad_sq_max {}",
                    self.grad_sq_min, self.grad_sq_max
                ),
            ));
        }
        if self.dim == 0 {
            return Err(Error::invalid_parameter("box.dim", "must be at least 1"));
        }
        Ok(self)
    }

    pub fn check_u(&self, u: f64) -> Result<()> {
        let slack = BOX_TOL * (1.0 + self.u_lo.abs().max(self.u_hi.abs()));
        if u < self.u_lo - slack {
            return Err(Error::DomainViolation {
                bound: "u_lo",
                value: u,
                limit: self.u_lo,
            });
        }
        if u > self.u_hi + slack {
            return Err(Error::DomainViolation {
                bound: "u_hi",
                value: u,
                limit: self.u_hi,
            });
        }
        Ok(())
    }

    pub fn check_s(&self, s: f64) -> Result<()> {
        let slack = BOX_TOL * (1.0 + self.grad_sq_max);
        if !(s >= -slack) {
            return Err(Error::DomainViolation {
                bound: "grad_sq",
                value: s,
                limit: 0.0,
            });
        }
        if s > self.grad_sq_max + slack {
            return Err(Error::DomainViolation {
                bound: "grad_sq_max",
                value: s,
                limit: self.grad_sq_max,
            });
        }
        Ok(())
    }
}

/// Closed-form table for a G-form model: G and its first three derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum GTable {
    /// G(u) = u^m.
    Power { m: f64 },
    /// G(u) = sum_k coeffs[k] * u^k.
    Poly { coeffs: Vec<f64> },
}

impl GTable {
    pub fn g(&self, u: f64) -> f64 {
        match self {
            GTable::Power { m } => upow(u, *m),
            GTable::Poly { coeffs } => horner(coeffs, 0, u),
        }
    }

    pub fn g1(&self, u: f64) -> f64 {
        match self {
            GTable::Power { m } => power_term(*m, u, m - 1.0),
            GTable::Poly { coeffs } => horner(coeffs, 1, u),
        }
    }

    pub fn g2(&self, u: f64) -> f64 {
        match self {
            GTable::Power { m } => power_term(m * (m - 1.0), u, m - 2.0),
            GTable::Poly { coeffs } => horner(coeffs, 2, u),
        }
    }

    pub fn g3(&self, u: f64) -> f64 {
        match self {
            GTable::Power { m } => power_term(m * (m - 1.0) * (m - 2.0), u, m - 3.0),
            GTable::Poly { coeffs } => horner(coeffs, 3, u),
        }
    }
}

/// c * u^e, identically zero when the coefficient is zero: a derivative
/// order past the polynomial degree has no term, so u = 0 must not turn it
/// into 0 * inf.
#[inline]
fn power_term(c: f64, u: f64, e: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * upow(u, e)
    }
}

/// u^e with the common small integer exponents special-cased so that the
/// heat case (e = 0 or 1) is exact and fluxes reproduce linear stencils
/// bit for bit.
#[inline]
fn upow(u: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        u
    } else if e == 2.0 {
        u * u
    } else if e == 3.0 {
        u * u * u
    } else {
        u.powf(e)
    }
}

/// Evaluates the `deriv`-th derivative of sum_k c_k u^k by Horner's rule.
fn horner(coeffs: &[f64], deriv: usize, u: f64) -> f64 {
    let mut acc = 0.0;
    for k in (deriv..coeffs.len()).rev() {
        // falling factorial k * (k-1) * ... * (k-deriv+1)
        let mut w = 1.0;
        for j in 0..deriv {
            w *= (k - j) as f64;
        }
        acc = acc * u + w * coeffs[k];
    }
    acc
}

/// Closed-form table for a psi-form model: psi(u, s) with s = |Du|^2 and the
/// partial derivatives the certifier and diagnostics need.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiTable {
    /// psi = u(1-u) / (1+s): saturation-limited flow with flux limiting.
    HydrologyFull,
    /// psi = u(1-u): the same family without the gradient limiter.
    HydrologySimplified,
    /// psi = (m u^(m-1))^(p-1) * s^((p-2)/2), the divergence form of
    /// u_t = Lap_p(u^m). Requires m >= 1, p_exp >= 1.
    PowerLaw { m: f64, p_exp: f64 },
}

impl PsiTable {
    pub fn psi(&self, u: f64, s: f64) -> f64 {
        match self {
            PsiTable::HydrologyFull => u * (1.0 - u) / (1.0 + s),
            PsiTable::HydrologySimplified => u * (1.0 - u),
            PsiTable::PowerLaw { m, p_exp } => {
                let (c0, alpha, beta) = power_law_params(*m, *p_exp);
                c0 * upow(u, alpha) * upow(s, beta)
            }
        }
    }

    pub fn d_u(&self, u: f64, s: f64) -> f64 {
        match self {
            PsiTable::HydrologyFull => (1.0 - 2.0 * u) / (1.0 + s),
            PsiTable::HydrologySimplified => 1.0 - 2.0 * u,
            PsiTable::PowerLaw { m, p_exp } => {
                let (c0, alpha, beta) = power_law_params(*m, *p_exp);
                if alpha == 0.0 {
                    0.0
                } else {
                    c0 * alpha * upow(u, alpha - 1.0) * upow(s, beta)
                }
            }
        }
    }

    pub fn d_uu(&self, u: f64, s: f64) -> f64 {
        match self {
            PsiTable::HydrologyFull => -2.0 / (1.0 + s),
            PsiTable::HydrologySimplified => -2.0,
            PsiTable::PowerLaw { m, p_exp } => {
                let (c0, alpha, beta) = power_law_params(*m, *p_exp);
                if alpha == 0.0 || alpha == 1.0 {
                    0.0
                } else {
                    c0 * alpha * (alpha - 1.0) * upow(u, alpha - 2.0) * upow(s, beta)
                }
            }
        }
    }

    pub fn d_s(&self, u: f64, s: f64) -> f64 {
        match self {
            PsiTable::HydrologyFull => {
                let q = 1.0 + s;
                -u * (1.0 - u) / (q * q)
            }
            PsiTable::HydrologySimplified => 0.0,
            PsiTable::PowerLaw { m, p_exp } => {
                let (c0, alpha, beta) = power_law_params(*m, *p_exp);
                if beta == 0.0 {
                    0.0
                } else {
                    c0 * upow(u, alpha) * beta * upow(s, beta - 1.0)
                }
            }
        }
    }

    pub fn d_us(&self, u: f64, s: f64) -> f64 {
        match self {
            PsiTable::HydrologyFull => {
                let q = 1.0 + s;
                -(1.0 - 2.0 * u) / (q * q)
            }
            PsiTable::HydrologySimplified => 0.0,
            PsiTable::PowerLaw { m, p_exp } => {
                let (c0, alpha, beta) = power_law_params(*m, *p_exp);
                if alpha == 0.0 || beta == 0.0 {
                    0.0
                } else {
                    c0 * alpha * upow(u, alpha - 1.0) * beta * upow(s, beta - 1.0)
                }
            }
        }
    }

    /// Radial diffusivity psi + 2 s D_s psi, written in a form that stays
    /// finite where D_s psi alone diverges (power laws at s = 0).
    pub fn radial(&self, u: f64, s: f64) -> f64 {
        match self {
            PsiTable::HydrologyFull => {
                let q = 1.0 + s;
                u * (1.0 - u) * (1.0 - s) / (q * q)
            }
            PsiTable::HydrologySimplified => u * (1.0 - u),
            // psi = K(u) s^beta gives psi + 2 s D_s psi = (1 + 2 beta) psi
            // with 1 + 2 beta = p - 1.
            PsiTable::PowerLaw { p_exp, .. } => (p_exp - 1.0) * self.psi(u, s),
        }
    }
}

#[inline]
fn power_law_params(m: f64, p_exp: f64) -> (f64, f64, f64) {
    let c0 = upow(m, p_exp - 1.0);
    let alpha = (m - 1.0) * (p_exp - 1.0);
    let beta = (p_exp - 2.0) / 2.0;
    (c0, alpha, beta)
}

/// Structural form of the right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub enum Form {
    G(GTable),
    Psi(PsiTable),
}

/// Which shipped family a model belongs to (used for reporting and CLI
/// dispatch; the numerics only look at [`Form`]).
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Pme { m: f64 },
    GDiffusion,
    PsiDiffusion,
    HydrologyFull,
    HydrologySimplified,
    DoublyNonlinear { m: f64, p_exp: f64 },
}

/// A model together with the box it is admissible on.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    form: Form,
    abox: AdmissibilityBox,
    name: String,
}

/// First derivatives of F at a point, as needed by the certifier's matrix
/// oracle and the max-gradient rate diagnostic.
#[derive(Debug, Clone)]
pub struct FDerivs {
    /// dF/dX, a symmetric matrix.
    pub d_xf: SymMat,
    /// dF/du.
    pub d_uf: f64,
}

impl ModelSpec {
    /// Porous-medium equation u_t = Lap(u^m), m >= 1. Default box
    /// [0.01, 1] x [0, 16]: the lower u bound keeps the derivative table
    /// finite for fractional m.
    pub fn pme(m: f64, dim: usize) -> Result<Self> {
        if !(m >= 1.0) || !m.is_finite() {
            return Err(Error::invalid_parameter("m", format!("need m >= 1, got {m}")));
        }
        Ok(ModelSpec {
            kind: ModelKind::Pme { m },
            form: Form::G(GTable::Power { m }),
            abox: AdmissibilityBox::new(0.01, 1.0, 16.0, dim)?,
            name: format!("pme(m={m})"),
        })
    }

    /// u_t = Lap(G(u)) for a user-supplied table. Default box [0, 1] x [0, 16].
    pub fn g_diffusion(table: GTable, dim: usize) -> Result<Self> {
        if let GTable::Poly { coeffs } = &table {
            if coeffs.is_empty() {
                return Err(Error::invalid_parameter("coeffs", "need at least one coefficient"));
            }
        }
        Ok(ModelSpec {
            kind: ModelKind::GDiffusion,
            form: Form::G(table),
            abox: AdmissibilityBox::new(0.0, 1.0, 16.0, dim)?,
            name: "gdiff".to_string(),
        })
    }

    /// u_t = div(psi(u, |Du|^2) Du) for a user-supplied table.
    pub fn psi_diffusion(table: PsiTable, abox: AdmissibilityBox) -> Result<Self> {
        Ok(ModelSpec {
            kind: ModelKind::PsiDiffusion,
            form: Form::Psi(table),
            abox,
            name: "psi".to_string(),
        })
    }

    /// psi = u(1-u)/(1+s) on its certified box: u within
    /// hydrology_delta(dim) of 1/2 and |Du|^2 <= 1.
    pub fn hydrology_full(dim: usize) -> Result<Self> {
        let delta = crate::certify::hydrology_delta(dim);
        Ok(ModelSpec {
            kind: ModelKind::HydrologyFull,
            form: Form::Psi(PsiTable::HydrologyFull),
            abox: AdmissibilityBox::new(0.5 - delta, 0.5 + delta, 1.0, dim)?,
            name: "hydrology_full".to_string(),
        })
    }

    /// psi = u(1-u) on the same u-box; the gradient bound M is a free choice.
    pub fn hydrology_simplified(dim: usize, grad_max: f64) -> Result<Self> {
        if !(grad_max > 0.0) {
            return Err(Error::invalid_parameter("grad_max", "must be positive"));
        }
        let delta = crate::certify::hydrology_delta(dim);
        Ok(ModelSpec {
            kind: ModelKind::HydrologySimplified,
            form: Form::Psi(PsiTable::HydrologySimplified),
            abox: AdmissibilityBox::new(0.5 - delta, 0.5 + delta, grad_max * grad_max, dim)?,
            name: "hydrology_simple".to_string(),
        })
    }

    /// u_t = Lap_p(u^m) in divergence form. The certifier accepts
    /// p_exp >= 1 (on boxes with grad_sq_min > 0 when p_exp < 2); the
    /// solver additionally requires p_exp >= 2, where the flux is regular
    /// at zero gradient.
    pub fn doubly_nonlinear(m: f64, p_exp: f64, dim: usize) -> Result<Self> {
        if !(m >= 1.0) || !m.is_finite() {
            return Err(Error::invalid_parameter("m", format!("need m >= 1, got {m}")));
        }
        if !(p_exp >= 1.0) || !p_exp.is_finite() {
            return Err(Error::invalid_parameter(
                "p_exp",
                format!("need p_exp >= 1, got {p_exp}"),
            ));
        }
        Ok(ModelSpec {
            kind: ModelKind::DoublyNonlinear { m, p_exp },
            form: Form::Psi(PsiTable::PowerLaw { m, p_exp }),
            abox: AdmissibilityBox::new(0.01, 1.0, 16.0, dim)?.with_grad_sq_min(0.01)?,
            name: format!("doubly_nonlinear(m={m},p={p_exp})"),
        })
    }

    /// Replaces the admissibility box (dimension change included).
    pub fn with_box(mut self, abox: AdmissibilityBox) -> Result<Self> {
        if let Form::Psi(PsiTable::PowerLaw { p_exp, .. }) = &self.form {
            if *p_exp < 2.0 && abox.grad_sq_min <= 0.0 {
                return Err(Error::invalid_parameter(
                    "box.grad_sq_min",
                    "power-law tables with p_exp < 2 need a positive gradient floor",
                ));
            }
        }
        self.abox = abox.validated()?;
        Ok(self)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn abox(&self) -> &AdmissibilityBox {
        &self.abox
    }

    pub fn dim(&self) -> usize {
        self.abox.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn g_table(&self) -> Option<&GTable> {
        match &self.form {
            Form::G(t) => Some(t),
            Form::Psi(_) => None,
        }
    }

    pub fn psi_table(&self) -> Option<&PsiTable> {
        match &self.form {
            Form::Psi(t) => Some(t),
            Form::G(_) => None,
        }
    }

    /// F(X, p, u). Errors when (p, u) leaves the admissibility box
    /// (X is unconstrained).
    pub fn eval_f(&self, x: &SymMat, p: &[f64], u: f64) -> Result<f64> {
        if x.dim() != self.abox.dim || p.len() != self.abox.dim {
            return Err(Error::invalid_parameter(
                "eval_f",
                format!(
                    "argument dimension {} / {} does not match model dimension {}",
                    x.dim(),
                    p.len(),
                    self.abox.dim
                ),
            ));
        }
        let s: f64 = p.iter().map(|v| v * v).sum();
        self.abox.check_u(u)?;
        self.abox.check_s(s)?;
        Ok(self.eval_f_unchecked(x, p, u))
    }

    /// F(X, p, u) without box enforcement; used by diagnostics on live
    /// fields that may overshoot the box by discretization error.
    pub(crate) fn eval_f_unchecked(&self, x: &SymMat, p: &[f64], u: f64) -> f64 {
        let s: f64 = p.iter().map(|v| v * v).sum();
        match &self.form {
            Form::G(t) => {
                // Guard s = 0 so degenerate tables (G'' infinite at an
                // endpoint) still satisfy F(0, 0, c) = 0 exactly.
                let grad_term = if s == 0.0 { 0.0 } else { t.g2(u) * s };
                t.g1(u) * x.trace() + grad_term
            }
            Form::Psi(t) => {
                let pxp = x.quad(p);
                let radial_term = if pxp == 0.0 { 0.0 } else { 2.0 * t.d_s(u, s) * pxp };
                let grad_term = if s == 0.0 { 0.0 } else { t.d_u(u, s) * s };
                t.psi(u, s) * x.trace() + radial_term + grad_term
            }
        }
    }

    /// dF/dX and dF/du at (X, p, u), assembled without any use of the
    /// constraint X p = 0. No box enforcement.
    pub fn f_derivatives(&self, x: &SymMat, p: &[f64], u: f64) -> FDerivs {
        let dim = self.abox.dim;
        let s: f64 = p.iter().map(|v| v * v).sum();
        match &self.form {
            Form::G(t) => FDerivs {
                d_xf: SymMat::from_rank_one_sum(dim, &[])
                    .add_scaled(t.g1(u), &SymMat::identity(dim)),
                d_uf: t.g2(u) * x.trace() + if s == 0.0 { 0.0 } else { t.g3(u) * s },
            },
            Form::Psi(t) => {
                let mut d_xf = SymMat::identity(dim);
                for i in 0..dim {
                    for j in 0..dim {
                        let v = t.psi(u, s) * (if i == j { 1.0 } else { 0.0 })
                            + 2.0 * t.d_s(u, s) * p[i] * p[j];
                        d_xf.set(i, j, v);
                    }
                }
                let pxp = x.quad(p);
                let cross = if pxp == 0.0 { 0.0 } else { 2.0 * t.d_us(u, s) * pxp };
                let grad = if s == 0.0 { 0.0 } else { t.d_uu(u, s) * s };
                FDerivs {
                    d_xf,
                    d_uf: t.d_u(u, s) * x.trace() + cross + grad,
                }
            }
        }
    }

    /// Flux through a cell face along `axis`, given the two adjacent node
    /// values, the reconstructed face gradient, and the grid spacing.
    ///
    /// G-form: the exact chord (G(u_r) - G(u_l)) / h, so the divergence is
    /// the standard stencil Laplacian of G(u). psi-form: the normal
    /// component of psi(u_face, |grad|^2) * grad with arithmetic averages.
    pub fn face_flux(&self, u_left: f64, u_right: f64, grad_face: &[f64], axis: usize, h: f64) -> f64 {
        debug_assert!(axis < grad_face.len());
        match &self.form {
            Form::G(t) => (t.g(u_right) - t.g(u_left)) / h,
            Form::Psi(t) => {
                let u_face = 0.5 * (u_left + u_right);
                let s_face: f64 = grad_face.iter().map(|g| g * g).sum();
                t.psi(u_face, s_face) * grad_face[axis]
            }
        }
    }

    /// (tangential, radial) diffusion coefficients at a state:
    /// (G', G') for G-form, (psi, psi + 2 s D_s psi) for psi-form.
    /// Errors if (u, s) leaves the box.
    pub fn effective_diffusivities(&self, u: f64, s: f64) -> Result<(f64, f64)> {
        self.abox.check_u(u)?;
        self.abox.check_s(s)?;
        Ok(self.effective_diffusivities_unchecked(u, s))
    }

    pub(crate) fn effective_diffusivities_unchecked(&self, u: f64, s: f64) -> (f64, f64) {
        match &self.form {
            Form::G(t) => {
                let d = t.g1(u);
                (d, d)
            }
            Form::Psi(t) => (t.psi(u, s), t.radial(u, s)),
        }
    }

    /// True for forms whose explicit scheme is provably monotone under the
    /// CFL bound (currently: all G-form models).
    pub fn has_monotone_scheme(&self) -> bool {
        matches!(self.form, Form::G(_))
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Builds a shipped model by CLI name. Recognized names:
/// `pme` (params: [m]), `gdiff:poly` (params: coefficients, constant term
/// first), `psi:hydrology_full` (no params), `psi:hydrology_simple`
/// (params: [] or [M]), `doubly_nonlinear` (params: [m, p_exp]).
pub fn builtin_model(name: &str, params: &[f64], dim: usize) -> Result<ModelSpec> {
    match name {
        "pme" => {
            let m = one_param("pme", "m", params)?;
            ModelSpec::pme(m, dim)
        }
        "gdiff:poly" => ModelSpec::g_diffusion(
            GTable::Poly {
                coeffs: params.to_vec(),
            },
            dim,
        ),
        "psi:hydrology_full" | "hydrology_full" => {
            if !params.is_empty() {
                return Err(Error::invalid_parameter("params", "hydrology_full takes none"));
            }
            ModelSpec::hydrology_full(dim)
        }
        "psi:hydrology_simple" | "hydrology_simple" => match params {
            [] => ModelSpec::hydrology_simplified(dim, 4.0),
            [m] => ModelSpec::hydrology_simplified(dim, *m),
            _ => Err(Error::invalid_parameter(
                "params",
                "hydrology_simple takes at most a gradient bound",
            )),
        },
        "doubly_nonlinear" => match params {
            [m, p] => ModelSpec::doubly_nonlinear(*m, *p, dim),
            _ => Err(Error::invalid_parameter(
                "params",
                "doubly_nonlinear takes exactly [m, p_exp]",
            )),
        },
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

fn one_param(model: &str, name: &str, params: &[f64]) -> Result<f64> {
    match params {
        [v] => Ok(*v),
        _ => Err(Error::invalid_parameter(
            name,
            format!("{model} takes exactly one parameter ({name})"),
        )),
    }
}
