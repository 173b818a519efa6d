use crate::geometry::DomainDiscretization;
use crate::operators::ShapeStorage;
use crate::Point;

use super::PdeError;

/// `du/dt = lap u + source` with Dirichlet data on all boundary nodes except
/// those whose type is listed in `neumann_types`, where `du/dn` is prescribed.
pub struct HeatProblem<'a, const D: usize> {
    pub dt: f64,
    pub steps: usize,
    pub initial: &'a (dyn Fn(&Point<D>) -> f64 + Sync),
    pub source: &'a (dyn Fn(&Point<D>, f64) -> f64 + Sync),
    pub dirichlet: &'a (dyn Fn(&Point<D>, f64) -> f64 + Sync),
    pub neumann: &'a (dyn Fn(&Point<D>, f64) -> f64 + Sync),
    pub neumann_types: &'a [i32],
    /// Keep a copy of the field every this many steps (`0` for none).
    pub snapshot_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatResult {
    pub field: Vec<f64>,
    pub snapshots: Vec<(usize, Vec<f64>)>,
    /// `max_i |u^{k+1}_i - u^k_i|` over the last step.
    pub last_change: f64,
}

/// The usual explicit Euler stability guideline `h_min^2 / (2 d)` for unit
/// diffusivity.
pub fn stable_time_step<const D: usize>(domain: &DomainDiscretization<D>) -> f64 {
    let h = domain.min_separation();
    h * h / (2.0 * D as f64)
}

#[derive(Clone, Copy)]
enum Update {
    Interior,
    Dirichlet,
    Neumann(usize),
}

/// Explicit Euler time stepping. Each step updates interior nodes from
/// `u^k`, then assigns Dirichlet values, then closes Neumann nodes from the
/// `u^k` values of their stencil neighbours.
pub fn run_heat_explicit<const D: usize>(
    domain: &DomainDiscretization<D>,
    storage: &ShapeStorage<D>,
    problem: &HeatProblem<'_, D>,
) -> Result<HeatResult, PdeError> {
    if !(problem.dt > 0.0 && problem.dt.is_finite()) {
        return Err(PdeError::InvalidParameter(format!(
            "time step must be positive, got {}",
            problem.dt
        )));
    }
    let n = domain.size();
    let mut normals = Vec::new();
    let plan: Vec<Update> = (0..n)
        .map(|i| {
            let t = domain.type_of(i);
            if t > 0 {
                Ok(Update::Interior)
            } else if problem.neumann_types.contains(&t) {
                let normal = domain.normal(i).ok_or(PdeError::MissingNormal { node: i })?;
                normals.push(*normal);
                Ok(Update::Neumann(normals.len() - 1))
            } else {
                Ok(Update::Dirichlet)
            }
        })
        .collect::<Result<_, PdeError>>()?;

    let mut u: Vec<f64> = domain.positions().iter().map(|p| (problem.initial)(p)).collect();
    let mut next = u.clone();
    let mut snapshots = Vec::new();
    let mut last_change = 0.0;
    for step in 0..problem.steps {
        let t = step as f64 * problem.dt;
        let t_next = (step + 1) as f64 * problem.dt;
        for i in 0..n {
            let p = domain.pos(i);
            next[i] = match plan[i] {
                Update::Interior => u[i] + problem.dt * (storage.lap(&u, i)? + (problem.source)(p, t)),
                Update::Dirichlet => (problem.dirichlet)(p, t_next),
                Update::Neumann(_) => u[i],
            };
        }
        for i in 0..n {
            if let Update::Neumann(k) = plan[i] {
                next[i] = storage.neumann(&u, i, &normals[k], (problem.neumann)(domain.pos(i), t_next))?;
            }
        }
        let mut change: f64 = 0.0;
        for i in 0..n {
            if !next[i].is_finite() {
                return Err(PdeError::Unstable {
                    step: step + 1,
                    node: i,
                    dt: problem.dt,
                    guideline: stable_time_step(domain),
                });
            }
            change = change.max((next[i] - u[i]).abs());
        }
        last_change = change;
        std::mem::swap(&mut u, &mut next);
        if problem.snapshot_every > 0 && (step + 1) % problem.snapshot_every == 0 {
            snapshots.push((step + 1, u.clone()));
        }
    }
    Ok(HeatResult {
        field: u,
        snapshots,
        last_change,
    })
}
