//! Explicit conservative time integration on the torus. Forward Euler in
//! divergence form under a CFL constraint that keeps the G-form stencil
//! monotone, so the maximum-principle structure of the equations is
//! observable rather than assumed: range preservation is hard-checked every
//! step and the a priori bounds are recorded as diagnostics.

use crate::diagnostics::RunDiagnostics;
use crate::error::Error;
use crate::grid::{
    divergence_of_face_flux, field_minmax, gradient_centered, sup_grad_norm, ScalarField,
    VectorField,
};
use crate::models::ModelSpec;
use crate::Result;

/// Run parameters. `output_every` is a time interval between diagnostics
/// rows (0 records only the first and last); `snapshot_times` are absolute
/// times in [0, t_end] at which the full field is kept.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub n: usize,
    pub dim: usize,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub output_every: f64,
    pub snapshot_times: Vec<f64>,
    pub record_w_rate: bool,
}

impl SolverConfig {
    pub fn new(n: usize, dim: usize, t_end: f64) -> Self {
        SolverConfig {
            n,
            dim,
            t_end,
            cfl_safety: 0.9,
            output_every: 0.0,
            snapshot_times: Vec::new(),
            record_w_rate: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::invalid_parameter(
                "t_end",
                format!("must be positive and finite, got {}", self.t_end),
            ));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::invalid_parameter(
                "cfl_safety",
                format!("must lie in (0, 1], got {}", self.cfl_safety),
            ));
        }
        if !(self.output_every >= 0.0) || !self.output_every.is_finite() {
            return Err(Error::invalid_parameter(
                "output_every",
                format!("must be a nonnegative time interval, got {}", self.output_every),
            ));
        }
        for &s in &self.snapshot_times {
            if !s.is_finite() || s < 0.0 || s > self.t_end {
                return Err(Error::invalid_parameter(
                    "snapshot_times",
                    format!("snapshot time {s} outside [0, {}]", self.t_end),
                ));
            }
        }
        Ok(())
    }
}

/// Final state plus everything recorded along the way.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_field: ScalarField,
    pub diagnostics: RunDiagnostics,
    pub snapshots: Vec<(f64, ScalarField)>,
    pub steps: usize,
}

/// Outcome of co-evolving an ordered pair of fields.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// max over recorded times of max over nodes of (u - v); ordering is
    /// preserved while this stays <= 0 up to rounding.
    pub max_defect: f64,
    pub t_at_max: f64,
    pub steps: usize,
}

/// Largest stable time step at the current state:
/// cfl_safety * h^2 / (2 * dim * D_max) with D_max the maximum effective
/// diffusivity over all nodes and faces, or cfl_safety * h^2 when the state
/// is fully degenerate (D_max <= 0, the right side is then zero anyway).
/// Returns 0 when a table value is non-finite, so callers fail fast.
pub fn compute_dt_cfl(model: &ModelSpec, u: &ScalarField, cfl_safety: f64) -> f64 {
    assert!(
        cfl_safety > 0.0 && cfl_safety <= 1.0,
        "cfl_safety must lie in (0, 1]"
    );
    let grid = *u.grid();
    let dim = grid.dim();
    let h = grid.h();
    let v = u.values();
    let grad = gradient_centered(u);

    let mut d_max = f64::NEG_INFINITY;
    let mut bad = false;
    let mut push = |d: f64| {
        if d.is_finite() {
            if d > d_max {
                d_max = d;
            }
        } else {
            bad = true;
        }
    };
    // node states, with the centered gradient
    for i in 0..grid.len() {
        let s: f64 = (0..dim)
            .map(|a| grad.component(a)[i] * grad.component(a)[i])
            .sum();
        let (tang, rad) = model.effective_diffusivities_unchecked(v[i], s);
        push(tang);
        push(rad);
    }
    // face states, exactly as the flux sees them
    let mut grad_face = [0.0f64; 2];
    for axis in 0..dim {
        for i in 0..grid.len() {
            let j = grid.neighbor(i, axis, 1);
            face_gradient(&grid, v, &grad, i, j, axis, &mut grad_face);
            let s: f64 = grad_face[..dim].iter().map(|g| g * g).sum();
            let (tang, rad) = model.effective_diffusivities_unchecked(0.5 * (v[i] + v[j]), s);
            push(tang);
            push(rad);
        }
    }
    if bad {
        return 0.0;
    }
    if d_max <= 0.0 {
        cfl_safety * h * h
    } else {
        cfl_safety * h * h / (2.0 * dim as f64 * d_max)
    }
}

/// Gradient reconstruction at the face between nodes i and j = i + e_axis:
/// exact difference along the normal, average of the two centered
/// differences along each tangential axis.
fn face_gradient(
    grid: &crate::grid::PeriodicGrid,
    v: &[f64],
    grad: &VectorField,
    i: usize,
    j: usize,
    axis: usize,
    out: &mut [f64; 2],
) {
    let dim = grid.dim();
    let h = grid.h();
    for b in 0..dim {
        out[b] = if b == axis {
            (v[j] - v[i]) / h
        } else {
            0.5 * (grad.component(b)[i] + grad.component(b)[j])
        };
    }
}

/// All face fluxes of the model at the current state, flux\[axis\]\[i\]
/// through the face between node i and its +1 neighbor along axis.
fn face_fluxes(model: &ModelSpec, u: &ScalarField) -> Vec<Vec<f64>> {
    let grid = *u.grid();
    let dim = grid.dim();
    let h = grid.h();
    let v = u.values();
    // G-form fluxes depend only on the endpoint values; skip the gradient.
    let grad = if model.has_monotone_scheme() {
        None
    } else {
        Some(gradient_centered(u))
    };
    let mut fluxes = vec![vec![0.0; grid.len()]; dim];
    let mut grad_face = [0.0f64; 2];
    for axis in 0..dim {
        for i in 0..grid.len() {
            let j = grid.neighbor(i, axis, 1);
            if let Some(g) = &grad {
                face_gradient(&grid, v, g, i, j, axis, &mut grad_face);
            } else {
                grad_face = [0.0, 0.0];
            }
            fluxes[axis][i] = model.face_flux(v[i], v[j], &grad_face[..dim], axis, h);
        }
    }
    fluxes
}

/// One forward-Euler step without the CFL recheck; `step` and `t` only
/// label errors.
fn advance(model: &ModelSpec, u: &ScalarField, dt: f64, step: usize, t: f64) -> Result<ScalarField> {
    let fluxes = face_fluxes(model, u);
    let div = divergence_of_face_flux(u.grid(), &fluxes);
    let v = u.values();
    let d = div.values();
    let mut out = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let w = v[i] + dt * d[i];
        if !w.is_finite() {
            return Err(Error::Instability {
                step,
                t,
                detail: format!("non-finite value at node {i} after update"),
            });
        }
        out.push(w);
    }
    ScalarField::from_values(*u.grid(), out)
}

/// One explicit step of size `dt`. Errors if `dt` exceeds the stable step
/// at this state, or if the update produces a non-finite value.
pub fn step_explicit(model: &ModelSpec, u: &ScalarField, dt: f64) -> Result<ScalarField> {
    let dt_max = compute_dt_cfl(model, u, 1.0);
    if !(dt <= dt_max) {
        return Err(Error::CflViolation { dt, dt_max });
    }
    advance(model, u, dt, 0, 0.0)
}

fn check_initial(model: &ModelSpec, u0: &ScalarField, config: &SolverConfig) -> Result<(f64, f64)> {
    let grid = u0.grid();
    if grid.n() != config.n || grid.dim() != config.dim {
        return Err(Error::InvalidGrid(format!(
            "initial field is {}^{}, config says {}^{}",
            grid.n(),
            grid.dim(),
            config.n,
            config.dim
        )));
    }
    if model.dim() != grid.dim() {
        return Err(Error::InvalidGrid(format!(
            "model dimension {} does not match grid dimension {}",
            model.dim(),
            grid.dim()
        )));
    }
    let abox = model.abox();
    let (min0, max0) = field_minmax(u0);
    abox.check_u(min0)?;
    abox.check_u(max0)?;
    let g0 = sup_grad_norm(u0);
    if g0 * g0 > abox.grad_sq_max * (1.0 + 1e-12) {
        return Err(Error::DomainViolation {
            bound: "grad_sq_max",
            value: g0 * g0,
            limit: abox.grad_sq_max,
        });
    }
    Ok((min0, max0))
}

/// Advances u0 to t_end, recording diagnostics rows at the configured
/// cadence (always at t = 0 and t_end) and snapshots at the requested
/// times. Every step hard-checks that the range has not expanded beyond
/// the initial extremes by more than 1e-12; for non-monotone (psi-form)
/// schemes this is the enforcement of range preservation, not an
/// assumption.
pub fn run(model: &ModelSpec, u0: &ScalarField, config: &SolverConfig) -> Result<RunOutput> {
    config.validate()?;
    let (min0, max0) = check_initial(model, u0, config)?;

    let mut snaps: Vec<f64> = config.snapshot_times.clone();
    snaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snaps.dedup();

    let mut diag = RunDiagnostics::new(config.record_w_rate);
    diag.record_row(0.0, 0.0, u0, model)?;
    let mut snapshots = Vec::new();
    let mut next_snap = 0usize;
    while next_snap < snaps.len() && snaps[next_snap] == 0.0 {
        snapshots.push((0.0, u0.clone()));
        next_snap += 1;
    }

    let mut u = u0.clone();
    let mut t = 0.0f64;
    let mut steps = 0usize;
    let mut out_index = 1u64; // next diagnostics row sits at out_index * output_every

    while t < config.t_end {
        let dt_stab = compute_dt_cfl(model, &u, config.cfl_safety);
        if !(dt_stab > 0.0) || !dt_stab.is_finite() {
            return Err(Error::Instability {
                step: steps,
                t,
                detail: "stable time step collapsed (non-finite diffusivity)".to_string(),
            });
        }

        // nearest event: next diagnostics row, next snapshot, or the end
        let mut target = config.t_end;
        if config.output_every > 0.0 {
            target = target.min(out_index as f64 * config.output_every);
        }
        if next_snap < snaps.len() {
            target = target.min(snaps[next_snap]);
        }

        let hit = t + dt_stab >= target;
        let dt = if hit { target - t } else { dt_stab };
        u = advance(model, &u, dt, steps, t)?;
        steps += 1;
        t = if hit { target } else { t + dt };
        if !hit && t >= config.t_end {
            // float accumulation overshot the next event; land exactly
            t = config.t_end;
        }

        let (mn, mx) = field_minmax(&u);
        if mn < min0 - 1e-12 || mx > max0 + 1e-12 {
            return Err(Error::BoxExit {
                step: steps,
                t,
                detail: format!(
                    "range [{mn}, {mx}] left initial [{min0}, {max0}]"
                ),
            });
        }

        if hit {
            let is_output = config.output_every > 0.0
                && target == out_index as f64 * config.output_every;
            if is_output {
                out_index += 1;
            }
            if is_output || target == config.t_end {
                diag.record_row(t, dt, &u, model)?;
            }
            while next_snap < snaps.len() && snaps[next_snap] == target {
                snapshots.push((t, u.clone()));
                next_snap += 1;
            }
        }
    }

    // end time not on the output cadence: close the series at t_end
    if diag.rows().last().map(|r| r.t) != Some(config.t_end) {
        let last_dt = diag.rows().last().map_or(0.0, |r| r.dt);
        diag.record_row(config.t_end, last_dt, &u, model)?;
    }

    Ok(RunOutput {
        final_field: u,
        diagnostics: diag,
        snapshots,
        steps,
    })
}

/// Co-evolves an ordered pair u0 <= v0 with the shared step size
/// min(stable step of u, stable step of v), tracking the worst ordering
/// defect max(u - v) over all steps. For a monotone scheme the defect
/// stays <= 0 up to rounding.
pub fn comparison_run(
    model: &ModelSpec,
    u0: &ScalarField,
    v0: &ScalarField,
    config: &SolverConfig,
) -> Result<ComparisonReport> {
    config.validate()?;
    let _ = check_initial(model, u0, config)?;
    let _ = check_initial(model, v0, config)?;
    for (i, (a, b)) in u0.values().iter().zip(v0.values()).enumerate() {
        if a > b {
            return Err(Error::OrderingViolated(format!(
                "u0 > v0 at node {i}: {a} > {b}"
            )));
        }
    }

    let defect = |u: &ScalarField, v: &ScalarField| {
        u.values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max)
    };

    let mut u = u0.clone();
    let mut v = v0.clone();
    let mut t = 0.0f64;
    let mut steps = 0usize;
    let mut max_defect = defect(&u, &v);
    let mut t_at_max = 0.0;

    while t < config.t_end {
        let dt_u = compute_dt_cfl(model, &u, config.cfl_safety);
        let dt_v = compute_dt_cfl(model, &v, config.cfl_safety);
        let dt_stab = dt_u.min(dt_v);
        if !(dt_stab > 0.0) || !dt_stab.is_finite() {
            return Err(Error::Instability {
                step: steps,
                t,
                detail: "stable time step collapsed (non-finite diffusivity)".to_string(),
            });
        }
        let hit = t + dt_stab >= config.t_end;
        let dt = if hit { config.t_end - t } else { dt_stab };
        u = advance(model, &u, dt, steps, t)?;
        v = advance(model, &v, dt, steps, t)?;
        steps += 1;
        t = if hit { config.t_end } else { t + dt };
        let d = defect(&u, &v);
        if d > max_defect {
            max_defect = d;
            t_at_max = t;
        }
    }

    Ok(ComparisonReport {
        max_defect,
        t_at_max,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{mass, PeriodicGrid};
    use crate::models::builtin_model;
    use std::f64::consts::PI;

    fn sine_field(n: usize, mean: f64, amp: f64) -> ScalarField {
        let grid = PeriodicGrid::new(1, n).unwrap();
        ScalarField::from_fn(grid, |x| mean + amp * (2.0 * PI * x[0]).sin()).unwrap()
    }

    #[test]
    fn cfl_step_matches_hand_values() {
        // heat: unit diffusivity everywhere, so the bound is exact arithmetic
        let heat = builtin_model("pme", &[1.0], 1).unwrap();
        let u = sine_field(256, 0.5, 0.1);
        let h = 1.0 / 256.0;
        assert_eq!(compute_dt_cfl(&heat, &u, 0.9), 0.9 * h * h / 2.0);

        // fully degenerate state: bounded fallback step
        let pme = builtin_model("pme", &[2.0], 1).unwrap();
        let degenerate = pme
            .clone()
            .with_box(crate::models::AdmissibilityBox::new(0.0, 1.0, 16.0, 1).unwrap())
            .unwrap();
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let zero = ScalarField::constant(grid, 0.0).unwrap();
        let h = 1.0 / 64.0;
        assert_eq!(compute_dt_cfl(&degenerate, &zero, 0.9), 0.9 * h * h);

        // diffusivity maximum taken over the actual field values
        let grid = PeriodicGrid::new(1, 128).unwrap();
        let ramp = ScalarField::from_fn(grid, |x| {
            0.01 + (0.9 - 0.01) * 0.5 * (1.0 - (2.0 * PI * x[0]).cos())
        })
        .unwrap();
        let h = 1.0 / 128.0;
        let want = h * h / (2.0 * 1.8);
        let got = compute_dt_cfl(&pme, &ramp, 1.0);
        assert!(
            (got - want).abs() <= 1e-15 * want,
            "dt {got} vs {want}"
        );
    }

    #[test]
    fn constant_states_are_fixed_points_of_the_step() {
        for name in ["pme", "psi:hydrology_full"] {
            let params: &[f64] = if name == "pme" { &[2.0] } else { &[] };
            let model = builtin_model(name, params, 1).unwrap();
            let grid = PeriodicGrid::new(1, 64).unwrap();
            let u = ScalarField::constant(grid, 0.5).unwrap();
            let dt = compute_dt_cfl(&model, &u, 0.9);
            let next = step_explicit(&model, &u, dt).unwrap();
            assert_eq!(next.values(), u.values(), "{name}");
        }
    }

    #[test]
    fn one_heat_step_reproduces_the_discrete_fourier_symbol() {
        let heat = builtin_model("pme", &[1.0], 1).unwrap();
        let n = 64;
        let u = sine_field(n, 0.5, 0.1);
        let h = 1.0 / n as f64;
        let dt = 0.5 * compute_dt_cfl(&heat, &u, 1.0);
        let next = step_explicit(&heat, &u, dt).unwrap();
        let factor = 1.0 - 4.0 * dt * (PI * h).sin().powi(2) / (h * h);
        for (i, (&got, &was)) in next.values().iter().zip(u.values()).enumerate() {
            let want = 0.5 + (was - 0.5) * factor;
            assert!(
                (got - want).abs() <= 1e-12,
                "node {i}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn oversized_steps_are_rejected() {
        let heat = builtin_model("pme", &[1.0], 1).unwrap();
        let u = sine_field(64, 0.5, 0.1);
        let dt_max = compute_dt_cfl(&heat, &u, 1.0);
        let err = step_explicit(&heat, &u, 1.1 * dt_max).unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }), "{err:?}");
    }

    #[test]
    fn steps_conserve_mass_for_both_forms() {
        for (name, params) in [("pme", vec![2.0]), ("psi:hydrology_full", vec![])] {
            let model = builtin_model(name, &params, 1).unwrap();
            let grid = PeriodicGrid::new(1, 96).unwrap();
            let u = ScalarField::from_fn(grid, |x| {
                0.5 + 0.1 * (2.0 * PI * x[0]).sin() + 0.04 * (4.0 * PI * x[0]).cos()
            })
            .unwrap();
            let m0 = mass(&u);
            let dt = compute_dt_cfl(&model, &u, 0.9);
            let next = step_explicit(&model, &u, dt).unwrap();
            let m1 = mass(&next);
            assert!(
                (m1 - m0).abs() <= 1e-12 * (1.0 + m0.abs()),
                "{name}: mass drift {}",
                m1 - m0
            );
        }
    }

    #[test]
    fn monotone_scheme_never_expands_the_range() {
        let pme = builtin_model("pme", &[2.0], 1).unwrap();
        let grid = PeriodicGrid::new(1, 96).unwrap();
        let mut u = ScalarField::from_fn(grid, |x| {
            0.5 + 0.3 * (2.0 * PI * x[0]).sin() + 0.1 * (6.0 * PI * x[0]).cos()
        })
        .unwrap();
        let (min0, max0) = field_minmax(&u);
        for _ in 0..50 {
            let dt = compute_dt_cfl(&pme, &u, 1.0);
            u = step_explicit(&pme, &u, dt).unwrap();
            let (mn, mx) = field_minmax(&u);
            assert!(mn >= min0 - 1e-12 && mx <= max0 + 1e-12);
        }
    }

    #[test]
    fn heat_run_matches_the_exact_fourier_decay() {
        let heat = builtin_model("pme", &[1.0], 1).unwrap();
        let u0 = sine_field(256, 0.5, 0.1);
        let config = SolverConfig::new(256, 1, 0.01);
        let out = run(&heat, &u0, &config).unwrap();
        let want = 0.2 * PI * (-4.0 * PI * PI * 0.01).exp();
        let got = out.diagnostics.rows().last().unwrap().max_grad;
        assert!(
            (got - want).abs() <= 0.01 * want,
            "final max|Du| {got} vs exact {want}"
        );
        assert_eq!(out.diagnostics.rows().first().unwrap().t, 0.0);
        assert_eq!(out.diagnostics.rows().last().unwrap().t, 0.01);
    }

    #[test]
    fn constant_data_stays_fixed_through_a_run() {
        let model = builtin_model("psi:hydrology_full", &[], 1).unwrap();
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let u0 = ScalarField::constant(grid, 0.25).unwrap();
        let mut config = SolverConfig::new(64, 1, 0.05);
        config.output_every = 0.01;
        let out = run(&model, &u0, &config).unwrap();
        assert_eq!(out.final_field.values(), u0.values());
        for r in out.diagnostics.rows() {
            assert_eq!((r.u_min, r.u_max, r.max_grad), (0.25, 0.25, 0.0));
        }
    }

    #[test]
    fn runs_reject_out_of_box_data_up_front() {
        let model = builtin_model("pme", &[2.0], 1).unwrap(); // box [0.01, 1]
        let u0 = sine_field(64, 0.5, 0.5); // min 0 < 0.01
        let config = SolverConfig::new(64, 1, 0.01);
        let err = run(&model, &u0, &config).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { .. }), "{err:?}");

        // hydrology bound |Du|^2 <= 1: amplitude 0.3 has sup|Du| = 0.6 pi > 1
        let hy = builtin_model("psi:hydrology_full", &[], 1).unwrap();
        let steep = sine_field(64, 0.5, 0.3);
        let err = run(&hy, &steep, &config).unwrap_err();
        assert!(
            matches!(err, Error::DomainViolation { bound: "grad_sq_max", .. }),
            "{err:?}"
        );
    }

    #[test]
    fn diagnostics_cadence_and_snapshots_land_on_exact_times() {
        let heat = builtin_model("pme", &[1.0], 1).unwrap();
        let u0 = sine_field(64, 0.5, 0.1);
        let mut config = SolverConfig::new(64, 1, 0.1);
        config.output_every = 0.025;
        config.snapshot_times = vec![0.0, 0.04, 0.1];
        let out = run(&heat, &u0, &config).unwrap();

        let times: Vec<f64> = out.diagnostics.rows().iter().map(|r| r.t).collect();
        let want: Vec<f64> = (0..=4).map(|k| k as f64 * 0.025).collect();
        assert_eq!(times, want, "cadence rows at exact multiples");

        let snap_times: Vec<f64> = out.snapshots.iter().map(|(t, _)| *t).collect();
        assert_eq!(snap_times, vec![0.0, 0.04, 0.1]);
        assert_eq!(out.snapshots[0].1.values(), u0.values());

        // snapshot outside [0, t_end] is a config error
        config.snapshot_times = vec![0.2];
        assert!(run(&heat, &u0, &config).is_err());
    }

    #[test]
    fn trajectories_are_deterministic_and_translation_equivariant() {
        for (name, params, dim, n) in [
            ("pme", vec![2.0], 1usize, 64usize),
            ("psi:hydrology_full", vec![], 2, 16),
        ] {
            let model = builtin_model(name, &params, dim).unwrap();
            let grid = PeriodicGrid::new(dim, n).unwrap();
            // amplitudes keep |Du|^2 below the hydrology bound of 1
            let u0 = ScalarField::from_fn(grid, |x| {
                let phase: f64 = x.iter().sum();
                0.5 + 0.08 * (2.0 * PI * phase).sin() + 0.02 * (2.0 * PI * x[0]).cos()
            })
            .unwrap();
            let config = SolverConfig::new(n, dim, 2e-4);

            let a = run(&model, &u0, &config).unwrap();
            let b = run(&model, &u0, &config).unwrap();
            assert_eq!(a.final_field.values(), b.final_field.values(), "{name}");

            let shift: Vec<isize> = (0..dim).map(|k| 3 + k as isize).collect();
            let shifted = u0.translate(&shift);
            let c = run(&model, &shifted, &config).unwrap();
            assert_eq!(
                c.final_field.values(),
                a.final_field.translate(&shift).values(),
                "{name}: trajectory must commute with torus translation"
            );
        }
    }

    #[test]
    fn comparison_preserves_ordering_for_the_monotone_scheme() {
        let pme = builtin_model("pme", &[2.0], 1).unwrap();
        let u0 = sine_field(64, 0.5, 0.3);
        let grid = *u0.grid();
        let v0 = ScalarField::from_values(
            grid,
            u0.values().iter().map(|v| v + 0.1).collect(),
        )
        .unwrap();
        let config = SolverConfig::new(64, 1, 0.02);
        let report = comparison_run(&pme, &u0, &v0, &config).unwrap();
        assert!(
            report.max_defect <= 1e-12,
            "ordering defect {}",
            report.max_defect
        );

        // constants are exact solutions; the gap never moves
        let a = ScalarField::constant(grid, 0.3).unwrap();
        let b = ScalarField::constant(grid, 0.5).unwrap();
        let report = comparison_run(&pme, &a, &b, &config).unwrap();
        assert_eq!(report.max_defect, -0.2);

        // identical data: defect exactly zero (determinism)
        let report = comparison_run(&pme, &u0, &u0, &config).unwrap();
        assert_eq!(report.max_defect, 0.0);

        // violated ordering is a precondition error
        let err = comparison_run(&pme, &v0, &u0, &config).unwrap_err();
        assert!(matches!(err, Error::OrderingViolated(_)), "{err:?}");
    }

    #[test]
    fn config_validation_rejects_bad_parameters() {
        let heat = builtin_model("pme", &[1.0], 1).unwrap();
        let u0 = sine_field(64, 0.5, 0.1);
        for (patch, _why) in [
            (
                Box::new(|c: &mut SolverConfig| c.t_end = 0.0) as Box<dyn Fn(&mut SolverConfig)>,
                "t_end",
            ),
            (Box::new(|c: &mut SolverConfig| c.cfl_safety = 0.0), "cfl"),
            (Box::new(|c: &mut SolverConfig| c.cfl_safety = 1.5), "cfl"),
            (Box::new(|c: &mut SolverConfig| c.output_every = -1.0), "cadence"),
            (Box::new(|c: &mut SolverConfig| c.n = 128), "grid mismatch"),
        ] {
            let mut config = SolverConfig::new(64, 1, 0.01);
            patch(&mut config);
            assert!(run(&heat, &u0, &config).is_err());
        }
    }
}
