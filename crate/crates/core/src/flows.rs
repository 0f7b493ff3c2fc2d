//! ODE integration for orbit systems and for geodesics of generalized
//! Lagrange metrics, obtained as Euler-Lagrange flow of the direction energy
//! `L(x, v) = h_ij(x, v) v^i v^j`.

use crate::chart::field::VectorField;
use crate::chart::linalg::{cholesky, cholesky_solve, Mat};
use crate::error::{Error, Result};
use crate::gl_metric::GLMetric;
use crate::scalar::Real;
use crate::table::NodeTable;

/// Uniformly sampled solution of a first-order or second-order flow.
#[derive(Clone, Debug)]
pub struct Trajectory<F> {
    pub times: Vec<F>,
    pub states: Vec<Vec<F>>,
    pub velocities: Vec<Vec<F>>,
}

impl<F: Real> Trajectory<F> {
    pub fn new(times: Vec<F>, states: Vec<Vec<F>>, velocities: Vec<Vec<F>>) -> Result<Self> {
        if times.len() != states.len() || times.len() != velocities.len() {
            return Err(Error::InvalidArgument(
                "trajectory arrays must have equal length".into(),
            ));
        }
        Ok(Trajectory {
            times,
            states,
            velocities,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn step(&self) -> F {
        self.times[1] - self.times[0]
    }

    /// Table with time, position components and velocity components; an
    /// optional per-node residual column is appended by callers.
    pub fn to_table(&self) -> NodeTable {
        let n = self.states[0].len();
        let mut headers = vec!["t".to_string()];
        for i in 0..n {
            headers.push(format!("x{}", i + 1));
        }
        for i in 0..n {
            headers.push(format!("v{}", i + 1));
        }
        let mut table = NodeTable::new(headers);
        for k in 0..self.len() {
            let mut row = vec![num_traits::ToPrimitive::to_f64(&self.times[k]).unwrap()];
            row.extend(self.states[k].iter().map(|v| {
                num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
            }));
            row.extend(self.velocities[k].iter().map(|v| {
                num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
            }));
            table.push(row);
        }
        table
    }
}

/// Classic fixed-step fourth-order Runge-Kutta over `steps` uniform steps.
pub(crate) fn rk4<F: Real>(
    t0: F,
    t1: F,
    steps: usize,
    y0: Vec<F>,
    mut deriv: impl FnMut(F, &[F]) -> Result<Vec<F>>,
) -> Result<(Vec<F>, Vec<Vec<F>>)> {
    let h = (t1 - t0) / F::of(steps as f64);
    let half = F::of(0.5);
    let sixth = F::of(1.0 / 6.0);
    let two = F::of(2.0);

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut y = y0;
    times.push(t0);
    states.push(y.clone());

    for k in 0..steps {
        let t = t0 + h * F::of(k as f64);
        let k1 = deriv(t, &y)?;
        let y2: Vec<F> = y.iter().zip(&k1).map(|(&a, &b)| a + half * h * b).collect();
        let k2 = deriv(t + half * h, &y2)?;
        let y3: Vec<F> = y.iter().zip(&k2).map(|(&a, &b)| a + half * h * b).collect();
        let k3 = deriv(t + half * h, &y3)?;
        let y4: Vec<F> = y.iter().zip(&k3).map(|(&a, &b)| a + h * b).collect();
        let k4 = deriv(t + h, &y4)?;
        for i in 0..y.len() {
            y[i] = y[i] + h * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        let t_next = t0 + h * F::of((k + 1) as f64);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::TrajectoryNonFinite {
                t: num_traits::ToPrimitive::to_f64(&t_next).unwrap_or(f64::NAN),
            });
        }
        times.push(t_next);
        states.push(y.clone());
    }
    Ok((times, states))
}

/// Integrates the orbit system `dx/dt = xi(x)` with RK4.
pub fn integrate_orbit<F: Real>(
    xi: &VectorField<F>,
    x0: &[F],
    t_span: (F, F),
    steps: usize,
) -> Result<Trajectory<F>> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "orbit integration needs at least 2 steps, got {steps}"
        )));
    }
    let deriv = |t: F, y: &[F]| -> Result<Vec<F>> {
        xi.eval(y).map_err(|e| match e {
            Error::NonFinite { .. } => Error::TrajectoryNonFinite {
                t: num_traits::ToPrimitive::to_f64(&t).unwrap_or(f64::NAN),
            },
            other => other,
        })
    };
    let (times, states) = rk4(t_span.0, t_span.1, steps, x0.to_vec(), deriv)?;
    let velocities: Vec<Vec<F>> = times
        .iter()
        .zip(&states)
        .map(|(&t, s)| deriv(t, s))
        .collect::<Result<_>>()?;
    Trajectory::new(times, states, velocities)
}

/// Gradients of the direction energy `L(x, v) = h_ij(x, v) v^i v^j` and its
/// velocity Hessian blocks at one phase point.
struct EnergyDerivatives<F> {
    /// `dL/dx`
    lx: Vec<F>,
    /// `dL/dv`
    lv: Vec<F>,
    /// `d2L/dv dv`
    mass: Mat<F>,
    /// `d2L/dv dx`
    mixed: Mat<F>,
}

fn energy_derivatives<F: Real>(h: &GLMetric<F>, x: &[F], v: &[F]) -> Result<EnergyDerivatives<F>> {
    let n = h.dim();
    let jet = h.lagrangian_jet(x, v)?;
    let lx = (0..n).map(|i| jet.first_at(i)).collect();
    let lv = (0..n).map(|i| jet.first_at(n + i)).collect();
    let mass = Mat::from_fn(n, n, |i, j| jet.second_at(n + i, n + j));
    let mixed = Mat::from_fn(n, n, |i, j| jet.second_at(n + i, j));
    Ok(EnergyDerivatives {
        lx,
        lv,
        mass,
        mixed,
    })
}

/// Integrates the Euler-Lagrange flow of the direction energy of `h`:
/// `d/dt (dL/dv) - dL/dx = 0`, reduced to `a = M^{-1} (dL/dx - B v)` with the
/// velocity Hessian `M` and mixed Hessian `B` from the derivative engine.
pub fn gl_geodesic<F: Real>(
    h: &GLMetric<F>,
    x0: &[F],
    v0: &[F],
    t_span: (F, F),
    steps: usize,
) -> Result<Trajectory<F>> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "geodesic integration needs at least 2 steps, got {steps}"
        )));
    }
    let n = h.dim();
    let mut state = Vec::with_capacity(2 * n);
    state.extend_from_slice(x0);
    state.extend_from_slice(v0);
    let deriv = |t: F, y: &[F]| -> Result<Vec<F>> {
        let (x, v) = y.split_at(n);
        let d = energy_derivatives(h, x, v).map_err(|e| match e {
            Error::DegenerateMetric { .. } => Error::TrajectoryDegenerate {
                t: num_traits::ToPrimitive::to_f64(&t).unwrap_or(f64::NAN),
            },
            other => other,
        })?;
        let chol = cholesky(&d.mass).ok_or(Error::SingularMass {
            t: num_traits::ToPrimitive::to_f64(&t).unwrap_or(f64::NAN),
        })?;
        let mut rhs = vec![F::zero(); n];
        for i in 0..n {
            let mut acc = d.lx[i];
            for j in 0..n {
                acc = acc - d.mixed[(i, j)] * v[j];
            }
            rhs[i] = acc;
        }
        let accel = cholesky_solve(&chol, &rhs);
        let mut out = vec![F::zero(); 2 * n];
        out[..n].copy_from_slice(v);
        out[n..].copy_from_slice(&accel);
        Ok(out)
    };
    let (times, states) = rk4(t_span.0, t_span.1, steps, state, deriv)?;
    let positions: Vec<Vec<F>> = states.iter().map(|s| s[..n].to_vec()).collect();
    let velocities: Vec<Vec<F>> = states.iter().map(|s| s[n..].to_vec()).collect();
    Trajectory::new(times, positions, velocities)
}

/// Per-interior-node norm of the Euler-Lagrange defect
/// `d/dt (dL/dv) - dL/dx` along a stored trajectory, with the time
/// derivative taken by central differences.
pub fn el_residual<F: Real>(h: &GLMetric<F>, traj: &Trajectory<F>) -> Result<Vec<F>> {
    let m = traj.len();
    if m < 3 {
        return Err(Error::InvalidArgument(
            "EL residual needs at least 3 trajectory nodes".into(),
        ));
    }
    let n = h.dim();
    let mut lx_all = Vec::with_capacity(m);
    let mut lv_all = Vec::with_capacity(m);
    for k in 0..m {
        let d = energy_derivatives(h, &traj.states[k], &traj.velocities[k])?;
        lx_all.push(d.lx);
        lv_all.push(d.lv);
    }
    let dt = traj.step();
    let two_dt = F::of(2.0) * dt;
    let mut out = Vec::with_capacity(m - 2);
    for k in 1..m - 1 {
        let mut sq = F::zero();
        for i in 0..n {
            let dp = (lv_all[k + 1][i] - lv_all[k - 1][i]) / two_dt;
            let r = dp - lx_all[k][i];
            sq = sq + r * r;
        }
        out.push(sq.sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::field::{MetricField, ScalarField};
    use crate::chart::tower::DualTower;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn rotation_field() -> VectorField<f64> {
        VectorField::new(2, 2, |x: &[DualTower<f64>]| vec![-x[1].clone(), x[0].clone()])
    }

    #[test]
    fn rotation_orbit_closes() {
        let xi = rotation_field();
        let traj = integrate_orbit(&xi, &[1.0, 0.0], (0.0, 2.0 * PI), 2000).unwrap();
        let last = traj.states.last().unwrap();
        assert!((last[0] - 1.0).abs() < 1e-6);
        assert!(last[1].abs() < 1e-6);
    }

    #[test]
    fn zero_field_constant_orbit() {
        let xi = VectorField::constant(2, vec![0.0, 0.0]);
        let traj = integrate_orbit(&xi, &[0.3, -0.4], (0.0, 1.0), 10).unwrap();
        for s in &traj.states {
            assert_eq!(s, &vec![0.3, -0.4]);
        }
    }

    #[test]
    fn linear_field_exponential_growth() {
        // closed form: x(t) = e^t
        let xi = VectorField::new(1, 1, |x: &[DualTower<f64>]| vec![x[0].clone()]);
        let traj = integrate_orbit(&xi, &[1.0], (0.0, 1.0), 200).unwrap();
        let last = traj.states.last().unwrap();
        assert!((last[0] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn velocities_consistent_with_positions() {
        let xi = rotation_field();
        let traj = integrate_orbit(&xi, &[1.0, 0.0], (0.0, 1.0), 200).unwrap();
        let dt = traj.step();
        for k in 1..traj.len() - 1 {
            for i in 0..2 {
                let central = (traj.states[k + 1][i] - traj.states[k - 1][i]) / (2.0 * dt);
                assert!((central - traj.velocities[k][i]).abs() < dt * dt * 2.0);
            }
        }
    }

    #[test]
    fn rk4_order_against_rotation_flow() {
        let xi = rotation_field();
        let err = |steps: usize| {
            let traj = integrate_orbit(&xi, &[1.0, 0.0], (0.0, 2.0 * PI), steps).unwrap();
            let last = traj.states.last().unwrap();
            ((last[0] - 1.0).powi(2) + last[1].powi(2)).sqrt()
        };
        let e1 = err(40);
        let e2 = err(80);
        let e3 = err(160);
        let p1 = (e1 / e2).log2();
        let p2 = (e2 / e3).log2();
        assert!((3.7..=4.3).contains(&p1), "order {p1}");
        assert!((3.7..=4.3).contains(&p2), "order {p2}");
    }

    fn sphere() -> MetricField<f64> {
        MetricField::new(2, |x: &[DualTower<f64>]| {
            let s = x[0].sin();
            let s2 = &s * &s;
            crate::chart::linalg::Mat::from_fn(2, 2, |i, j| match (i, j) {
                (0, 0) => DualTower::constant(1.0),
                (1, 1) => s2.clone(),
                _ => DualTower::constant(0.0),
            })
        })
    }

    #[test]
    fn flat_gl_geodesic_is_straight() {
        let h: GLMetric<f64> = GLMetric::riemannian(MetricField::euclidean(2));
        let traj = gl_geodesic(&h, &[0.0, 0.0], &[0.5, -1.0], (0.0, 2.0), 100).unwrap();
        let last = traj.states.last().unwrap();
        assert!((last[0] - 1.0).abs() < 1e-9);
        assert!((last[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn gl_geodesic_matches_riemann_geodesic_on_sphere() {
        let gamma = sphere();
        let h = GLMetric::riemannian(gamma.clone());
        let x0 = [FRAC_PI_3, 0.0];
        let v0 = [0.1, 0.9];
        let a = gl_geodesic(&h, &x0, &v0, (0.0, 1.0), 500).unwrap();
        let b = crate::riemannian::riemann_geodesic(&gamma, &x0, &v0, (0.0, 1.0), 500).unwrap();
        for k in 0..a.len() {
            for i in 0..2 {
                assert!((a.states[k][i] - b.states[k][i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn gl_geodesic_conserves_lagrangian() {
        let h = GLMetric::riemannian(sphere());
        let traj = gl_geodesic(&h, &[FRAC_PI_3, 0.0], &[0.2, 1.0], (0.0, 1.0), 1000).unwrap();
        let lag = |x: &[f64], v: &[f64]| h.lagrangian(x, v).unwrap();
        let l0 = lag(&traj.states[0], &traj.velocities[0]);
        for k in 0..traj.len() {
            let l = lag(&traj.states[k], &traj.velocities[k]);
            assert!((l - l0).abs() < 1e-6);
        }
    }

    #[test]
    fn reparameterization_scales_traversal() {
        // homogeneity: doubling v0 halves the time to reach the same point
        let h = GLMetric::riemannian(sphere());
        let a = gl_geodesic(&h, &[FRAC_PI_3, 0.0], &[0.1, 0.8], (0.0, 1.0), 400).unwrap();
        let b = gl_geodesic(&h, &[FRAC_PI_3, 0.0], &[0.2, 1.6], (0.0, 0.5), 200).unwrap();
        let sa = a.states.last().unwrap();
        let sb = b.states.last().unwrap();
        for i in 0..2 {
            assert!((sa[i] - sb[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn straight_line_has_zero_el_residual() {
        let h = GLMetric::riemannian(MetricField::euclidean(2));
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        let states: Vec<Vec<f64>> = times.iter().map(|&t| vec![t, 2.0 * t]).collect();
        let velocities: Vec<Vec<f64>> = times.iter().map(|_| vec![1.0, 2.0]).collect();
        let traj = Trajectory::new(times, states, velocities).unwrap();
        let res = el_residual(&h, &traj).unwrap();
        for r in res {
            assert!(r < 1e-10);
        }
    }

    #[test]
    fn great_circle_el_residual_small_latitude_large() {
        let h = GLMetric::riemannian(sphere());
        let sample = |theta: f64| {
            let steps = 1000usize;
            let dt = 1e-3;
            let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
            let states: Vec<Vec<f64>> = times.iter().map(|&t| vec![theta, t]).collect();
            let velocities: Vec<Vec<f64>> = times.iter().map(|_| vec![0.0, 1.0]).collect();
            Trajectory::new(times, states, velocities).unwrap()
        };
        let equator = el_residual(&h, &sample(FRAC_PI_2)).unwrap();
        assert!(equator.iter().cloned().fold(0.0f64, f64::max) < 1e-5);
        let latitude = el_residual(&h, &sample(FRAC_PI_3)).unwrap();
        assert!(latitude.iter().cloned().fold(0.0f64, f64::max) > 1e-2);
    }

    #[test]
    fn pfaff_metric_has_singular_mass_matrix() {
        // h = 1/y^2 on the line: L = (v/v)^2 = 1, so the velocity Hessian
        // degenerates identically
        let gamma = MetricField::diagonal(vec![1.0f64]);
        let sigma = ScalarField::new(2, |xy: &[DualTower<f64>]| -xy[1].abs().ln());
        let h = GLMetric::new(gamma, sigma, |_: &[f64], y: &[f64]| y[0].abs() < 1e-12);
        assert!(matches!(
            gl_geodesic(&h, &[0.0], &[1.0], (0.0, 1.0), 10),
            Err(Error::SingularMass { .. })
        ));
    }
}
