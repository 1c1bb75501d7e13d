//! Time-series statistics for a run and the verdicts on the monitored
//! bounds: gradient non-expansion, range preservation, mass conservation.
//! Also hosts the pointwise rate diagnostic evaluated where |Du|^2 is
//! maximal, the quantity whose sign the gradient bound hinges on.

use crate::error::Error;
use crate::grid::{field_minmax, gradient_centered, mass, sup_grad_norm, ScalarField};
use crate::models::ModelSpec;
use crate::sym::SymMat;
use crate::Result;
use std::io::Write;

/// One recorded row of run statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub dt: f64,
    /// sup |Du| by centered differences.
    pub max_grad: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub mass: f64,
    /// Rate diagnostic at the gradient argmax, when requested.
    pub w_rate: Option<f64>,
    /// Field-wide magnitude of the assembled rate terms,
    /// 1 + max over nodes of |term1| + |term2|, recorded with `w_rate`.
    /// The rate at the argmax is a near-cancellation of such terms, so
    /// this is the natural yardstick for its discretization error.
    pub w_rate_scale: Option<f64>,
}

/// Statistics rows for one run, strictly increasing in t, first row at
/// t = 0. Owned by a single run; read-only after completion.
#[derive(Debug, Clone)]
pub struct RunDiagnostics {
    rows: Vec<DiagRow>,
    record_w_rate: bool,
}

/// Verdict on one monitored bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundVerdict {
    pub pass: bool,
    /// Worst observed value of the monitored quantity.
    pub worst: f64,
    /// The limit it was compared against.
    pub limit: f64,
    /// Time at which the worst value occurred.
    pub t_worst: f64,
}

/// Verdicts for the three bounds every run monitors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundVerdicts {
    pub gradient: BoundVerdict,
    pub range: BoundVerdict,
    pub mass: BoundVerdict,
}

impl BoundVerdicts {
    pub fn all_pass(&self) -> bool {
        self.gradient.pass && self.range.pass && self.mass.pass
    }
}

impl RunDiagnostics {
    pub fn new(record_w_rate: bool) -> Self {
        RunDiagnostics {
            rows: Vec::new(),
            record_w_rate,
        }
    }

    pub fn rows(&self) -> &[DiagRow] {
        &self.rows
    }

    pub fn records_w_rate(&self) -> bool {
        self.record_w_rate
    }

    /// Appends a statistics row for the state `u` at time `t` reached with
    /// step size `dt`. The first row must be at t = 0; later rows must be
    /// strictly increasing in t.
    pub fn record_row(&mut self, t: f64, dt: f64, u: &ScalarField, model: &ModelSpec) -> Result<()> {
        match self.rows.last() {
            None => {
                if t != 0.0 {
                    return Err(Error::Diagnostics(format!(
                        "first row must be at t = 0, got t = {t}"
                    )));
                }
            }
            Some(last) if t <= last.t => {
                return Err(Error::OrderingViolated(format!(
                    "diagnostics rows must be strictly increasing in t: {t} after {}",
                    last.t
                )));
            }
            Some(_) => {}
        }
        let (u_min, u_max) = field_minmax(u);
        let (w_rate, w_rate_scale) = if self.record_w_rate {
            let (r, s) = w_rate_with_scale(model, u);
            (Some(r), Some(s))
        } else {
            (None, None)
        };
        self.rows.push(DiagRow {
            t,
            dt,
            max_grad: sup_grad_norm(u),
            u_min,
            u_max,
            mass: mass(u),
            w_rate,
            w_rate_scale,
        });
        Ok(())
    }

    /// Writes the series as CSV with the fixed column order
    /// `t,dt,max_grad,u_min,u_max,mass,w_rate`; the last column is empty
    /// on rows where the rate was not computed.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,dt,max_grad,u_min,u_max,mass,w_rate")?;
        for r in &self.rows {
            let rate = r.w_rate.map_or(String::new(), |v| format!("{v}"));
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.t, r.dt, r.max_grad, r.u_min, r.u_max, r.mass, rate
            )?;
        }
        Ok(())
    }

    /// Judges the recorded series against the three monitored bounds.
    ///
    /// * gradient: max_grad never exceeds its initial value times
    ///   (1 + tol_grad);
    /// * range: [u_min, u_max] never leaves the initial interval by more
    ///   than 1e-12 absolute;
    /// * mass: relative drift from the initial mass stays within 1e-10.
    pub fn verdict_bounds(&self, tol_grad: f64) -> Result<BoundVerdicts> {
        let first = self
            .rows
            .first()
            .ok_or_else(|| Error::Diagnostics("no rows recorded".to_string()))?;

        let mut g_worst = f64::NEG_INFINITY;
        let mut g_t = 0.0;
        let mut r_worst = f64::NEG_INFINITY;
        let mut r_t = 0.0;
        let mut m_worst = f64::NEG_INFINITY;
        let mut m_t = 0.0;
        for r in &self.rows {
            if r.max_grad > g_worst {
                g_worst = r.max_grad;
                g_t = r.t;
            }
            let expansion = (first.u_min - r.u_min).max(r.u_max - first.u_max);
            if expansion > r_worst {
                r_worst = expansion;
                r_t = r.t;
            }
            let drift = (r.mass - first.mass).abs() / (1.0 + first.mass.abs());
            if drift > m_worst {
                m_worst = drift;
                m_t = r.t;
            }
        }
        let g_limit = first.max_grad * (1.0 + tol_grad);
        Ok(BoundVerdicts {
            gradient: BoundVerdict {
                pass: g_worst <= g_limit,
                worst: g_worst,
                limit: g_limit,
                t_worst: g_t,
            },
            range: BoundVerdict {
                pass: r_worst <= 1e-12,
                worst: r_worst,
                limit: 1e-12,
                t_worst: r_t,
            },
            mass: BoundVerdict {
                pass: m_worst <= 1e-10,
                worst: m_worst,
                limit: 1e-10,
                t_worst: m_t,
            },
        })
    }
}

/// Evaluates -dF/dX : (D^2 u)^2 + |Du|^2 dF/du at the node maximizing
/// w = |Du|^2 / 2 (ties broken by lowest index), with centered second
/// differences for the Hessian. Nonpositive up to discretization error
/// exactly when the structural inequality behind the gradient bound holds.
pub fn w_rate_at_argmax(model: &ModelSpec, u: &ScalarField) -> f64 {
    w_rate_with_scale(model, u).0
}

/// Rate at the argmax plus the field-wide magnitude scale
/// 1 + max over nodes of |term1| + |term2|.
///
/// The rate is a signed difference of the two terms and nearly cancels at
/// the argmax, where the discrete node sits within half a cell of the
/// point that would zero it exactly. Relating the residue to the size of
/// the terms over the whole field, rather than at the one node where they
/// cancel, gives a tolerance that shrinks under refinement instead of
/// chasing the cancellation.
pub(crate) fn w_rate_with_scale(model: &ModelSpec, u: &ScalarField) -> (f64, f64) {
    let grid = *u.grid();
    let dim = grid.dim();
    let h = grid.h();
    let v = u.values();
    let grad = gradient_centered(u);

    let mut best_s = f64::NEG_INFINITY;
    let mut best_terms = (0.0f64, 0.0f64);
    let mut field_mag = 0.0f64;
    let mut hess = SymMat::zeros(dim);
    let mut p = vec![0.0f64; dim];
    for i in 0..grid.len() {
        for a in 0..dim {
            p[a] = grad.component(a)[i];
        }
        let s: f64 = p.iter().map(|x| x * x).sum();
        for a in 0..dim {
            let up = v[grid.neighbor(i, a, 1)];
            let dn = v[grid.neighbor(i, a, -1)];
            hess.set(a, a, (up - 2.0 * v[i] + dn) / (h * h));
            for b in (a + 1)..dim {
                let pp = v[grid.neighbor(grid.neighbor(i, a, 1), b, 1)];
                let pm = v[grid.neighbor(grid.neighbor(i, a, 1), b, -1)];
                let mp = v[grid.neighbor(grid.neighbor(i, a, -1), b, 1)];
                let mm = v[grid.neighbor(grid.neighbor(i, a, -1), b, -1)];
                hess.set(a, b, (pp - pm - mp + mm) / (4.0 * h * h));
            }
        }

        let d = model.f_derivatives(&hess, &p, v[i]);
        let term1 = d.d_xf.frobenius_inner(&hess.square());
        let term2 = s * d.d_uf;
        field_mag = field_mag.max(term1.abs() + term2.abs());
        if s > best_s {
            best_s = s;
            best_terms = (term1, term2);
        }
    }
    (-best_terms.0 + best_terms.1, 1.0 + field_mag)
}
