use nalgebra::DVector;

use crate::algebra::{devectorize, vectorize, C64};
use crate::algebra::ComplexMatrix;
use crate::error::{Error, Result};
use crate::model::SystemModel;

use super::{Diagnostics, Method, SteadyStateResult};

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Stop once `‖L(ρ)‖_F` drops to this value.
    pub tol: f64,
}

impl EvolveOptions {
    /// `dt = 0.1 / max(Σ p_i, max E_i)`, `t_max = 10⁴`, `tol = 10⁻⁹`.
    pub fn for_model(model: &SystemModel) -> Self {
        let e_max = model.qubits().iter().map(|q| q.energy()).fold(0.0, f64::max);
        let scale = model.total_rate().max(e_max);
        Self { dt: 0.1 / scale, t_max: 1e4, tol: 1e-9 }
    }
}

// Classical RK4 is stable for |λ dt| up to about 2.8 on both axes.
const STABILITY_LIMIT: f64 = 2.5;

/// Integrates `ρ̇ = L(ρ)` with classical fourth-order Runge–Kutta until the
/// generator residual falls below `opts.tol`. The trace is renormalized
/// after every step and the accumulated correction reported as drift.
pub fn evolve_to_steady(model: &SystemModel, rho0: &ComplexMatrix, opts: &EvolveOptions) -> Result<SteadyStateResult> {
    let l = model.liouvillian();
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch { left: l.dim(), right: rho0.dim() });
    }
    let norm = l.inf_norm();
    if !(opts.dt > 0.0) || opts.dt * norm > STABILITY_LIMIT {
        return Err(Error::UnstableStep { dt: opts.dt, norm });
    }

    let dim = l.dim();
    let diag: Vec<usize> = (0..dim).map(|j| j * dim + j).collect();
    let trace = |v: &DVector<C64>| diag.iter().map(|&i| v[i]).sum::<C64>();

    let h = C64::from(opts.dt);
    let mut v = vectorize(rho0);
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut drift = 0.0;
    let mut k1 = l.apply_vector(&v);
    loop {
        let residual = k1.norm();
        if residual <= opts.tol {
            let rho = devectorize(&v)?;
            let discarded = rho.anti_hermitian_norm();
            return Ok(SteadyStateResult {
                rho: rho.hermitian_part(),
                method: Method::Evolved,
                residual,
                diagnostics: Diagnostics {
                    iterations: Some(steps),
                    trace_drift: Some(drift),
                    discarded_antihermitian: discarded,
                    ..Diagnostics::default()
                },
            });
        }
        if t >= opts.t_max {
            return Err(Error::NotConverged { time: t, residual });
        }

        let k2 = l.apply_vector(&(&v + &k1 * (h * 0.5)));
        let k3 = l.apply_vector(&(&v + &k2 * (h * 0.5)));
        let k4 = l.apply_vector(&(&v + &k3 * h));
        v += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * (h / 6.0);

        let tr = trace(&v);
        drift += (tr - C64::from(1.0)).norm();
        v /= tr;

        t += opts.dt;
        steps += 1;
        k1 = l.apply_vector(&v);
    }
}
