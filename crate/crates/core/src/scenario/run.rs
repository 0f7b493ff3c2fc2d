//! Scenario pipelines: build, evaluate, verdict, and write reports.
//!
//! Everything here is single-threaded and seeded, so identical configs
//! produce byte-identical outputs.

use crate::chart::field::{MetricField, ScalarField, VectorField};
use crate::chart::tower::DualTower;
use crate::error::Error;
use crate::flows::{el_residual, integrate_orbit, Trajectory};
use crate::riemannian::second_fundamental_form_residual;
use crate::scenario::build::{
    build_field_eq_scenario, build_orbit_scenario, build_pfaff_scenario,
    build_pseudolinear_scenario,
};
use crate::scenario::config::{ConfigError, ScenarioConfig, ScenarioKind};
use crate::scenario::report::Report;
use crate::table::NodeTable;
use crate::variational::{
    energy, first_variation, lagrangian_lt, lagrangian_lt_detailed, polynomial_bump,
    system_e_residual, MeshQuadrature, SmoothMap,
};
use std::path::Path;
use thiserror::Error as ThisError;

type T = DualTower<f64>;

#[derive(Debug, ThisError)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure in {location}: {source}")]
    Numerical { location: String, source: Error },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

fn num(location: &str) -> impl FnOnce(Error) -> RunError + '_ {
    move |source| RunError::Numerical {
        location: location.to_string(),
        source,
    }
}

/// Runs one scenario and writes `report.txt`, `report.json` and the CSV
/// tables into `out_dir`. The report's verdicts decide the exit status.
pub fn run_config(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Report, RunError> {
    cfg.validate()?;
    let mut report = Report::new(cfg);
    let mut tables: Vec<(String, NodeTable)> = Vec::new();
    match cfg.kind {
        ScenarioKind::Orbit => run_orbit(cfg, &mut report, &mut tables)?,
        ScenarioKind::Pfaff => run_pfaff(cfg, &mut report, &mut tables)?,
        ScenarioKind::Pseudolinear => run_pseudolinear(cfg, &mut report, &mut tables)?,
        ScenarioKind::CustomGlFieldEqs => run_field_eqs(cfg, &mut report, &mut tables)?,
    }
    std::fs::create_dir_all(out_dir)?;
    for (name, table) in &tables {
        table.write_csv(&out_dir.join(name))?;
        report.csv_files.push(name.clone());
    }
    std::fs::write(out_dir.join("report.txt"), report.to_text())?;
    std::fs::write(out_dir.join("report.json"), report.to_json())?;
    Ok(report)
}

/// Samples a closed-form curve into a trajectory with exact velocities.
fn sample_curve(map: &SmoothMap<f64>, t0: f64, t1: f64, steps: usize) -> Result<Trajectory<f64>, Error> {
    let n = map.target_dim();
    let dt = (t1 - t0) / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut velocities = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = t0 + dt * k as f64;
        let jet = map.jet(&[t])?;
        times.push(t);
        states.push((0..n).map(|i| jet[i].value()).collect());
        velocities.push((0..n).map(|i| jet[i].first_at(0)).collect());
    }
    Trajectory::new(times, states, velocities)
}

fn run_orbit(
    cfg: &ScenarioConfig,
    report: &mut Report,
    tables: &mut Vec<(String, NodeTable)>,
) -> Result<(), RunError> {
    let sc = build_orbit_scenario(cfg)?;
    let tol = &cfg.tolerances;
    let (t0, t1) = (cfg.domain.lo[0], cfg.domain.hi[0]);
    let phi = MetricField::euclidean(1);
    let mesh = MeshQuadrature::trapezoid_euclidean(&[(t0, t1)], &[cfg.domain.resolution[0]])
        .map_err(num("quadrature mesh"))?;
    report.set_volume(mesh.volume());

    let lt = lagrangian_lt_detailed(&phi, &sc.psi, &sc.section, &sc.analytic, &mesh)
        .map_err(num("ratio functional on the orbit"))?;
    report.add_value("lt_orbit", lt.value);
    report.add_value("min_cos2", lt.min_cos2);
    report.check_le(
        "lt_attains_half_volume",
        (lt.value - lt.half_volume).abs(),
        tol.functional,
        "functional",
    );
    report.check_ge(
        "lower_bound_holds",
        lt.value - lt.half_volume,
        -tol.bound_slack,
        "bound_slack",
    );
    tables.push(("lt_nodes.csv".into(), lt.table.clone()));

    // the ratio functional is the direction energy of the induced metric
    let e = energy(
        &phi,
        &VectorField::constant(1, vec![1.0]),
        &sc.h,
        &sc.analytic,
        &mesh,
    )
    .map_err(num("direction energy of the orbit"))?;
    report.add_value("energy_induced_metric", e);
    report.check_le(
        "energy_agrees_with_lt",
        (e - lt.value).abs(),
        tol.invariance,
        "invariance",
    );

    // rescaling the section by a positive function leaves the value alone
    let scaling = ScalarField::new(1, |t: &[T]| (&t[0] * 0.25).exp() + 0.5);
    let scaled = sc.section.scaled_by(scaling);
    let lt_scaled = lagrangian_lt(&phi, &sc.psi, &scaled, &sc.analytic, &mesh)
        .map_err(num("rescaled ratio functional"))?;
    report.check_le(
        "scaling_invariance",
        (lt_scaled - lt.value).abs(),
        tol.invariance,
        "invariance",
    );

    // perturbed non-solution sweep
    let count = cfg.params.perturbations.unwrap_or(50);
    let amplitude = cfg.params.amplitude.unwrap_or(0.05);
    let mut sweep = NodeTable::new(vec!["index".into(), "lt".into(), "excess".into()]);
    let mut min_excess = f64::INFINITY;
    for k in 0..count {
        let eta = polynomial_bump(&[(t0, t1)], sc.analytic.target_dim(), cfg.seed.wrapping_add(k as u64));
        let f = sc.analytic.perturbed(&eta, amplitude);
        let v = lagrangian_lt(&phi, &sc.psi, &sc.section, &f, &mesh)
            .map_err(num("ratio functional on a perturbed curve"))?;
        let excess = v - lt.half_volume;
        min_excess = min_excess.min(excess);
        sweep.push(vec![k as f64, v, excess]);
    }
    if count > 0 {
        report.add_value("perturbation_min_excess", min_excess);
        report.check_ge(
            "perturbed_curves_exceed_bound",
            min_excess,
            tol.perturbation_margin,
            "perturbation_margin",
        );
        tables.push(("perturbation_sweep.csv".into(), sweep));
    }

    // RK4 orbit endpoint against the closed form
    let steps = cfg.params.integrate_steps.unwrap_or(2000);
    let traj = integrate_orbit(&sc.xi, &sc.x0, (t0, t1), steps)
        .map_err(num("orbit integration"))?;
    let target = sc.analytic.eval(&[t1]).map_err(num("closed-form orbit"))?;
    let endpoint = traj.states.last().expect("nonempty trajectory");
    let endpoint_err = endpoint
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    report.add_value("integrated_endpoint_error", endpoint_err);
    report.check_le(
        "integrated_orbit_matches_closed_form",
        endpoint_err,
        tol.geodesic_match,
        "geodesic_match",
    );

    // Euler-Lagrange residual along the analytic orbit under the induced
    // metric; orbits are geodesics of that metric
    let el_steps = ((t1 - t0) / 1e-3).ceil() as usize;
    let orbit_traj = sample_curve(&sc.analytic, t0, t1, el_steps).map_err(num("orbit sampling"))?;
    let orbit_res = el_residual(&sc.h, &orbit_traj).map_err(num("EL residual on the orbit"))?;
    let orbit_max = orbit_res.iter().cloned().fold(0.0f64, f64::max);
    report.add_value("el_residual_orbit", orbit_max);
    report.check_le(
        "orbit_is_geodesic_of_induced_metric",
        orbit_max,
        tol.el_residual,
        "el_residual",
    );
    {
        let mut t = orbit_traj.to_table();
        t.headers.push("el_residual".into());
        for (k, row) in t.rows.iter_mut().enumerate() {
            let r = if k == 0 || k == orbit_traj.len() - 1 {
                f64::NAN
            } else {
                orbit_res[k - 1]
            };
            row.push(r);
        }
        tables.push(("orbit_trajectory.csv".into(), t));
    }

    // a squashed comparison curve is visibly not a geodesic
    if sc.xi_name == "rotation" {
        let base = sc.analytic.clone();
        let squashed = SmoothMap::new(1, 2, move |t: &[T]| {
            let mut out = base.eval_towers(t);
            out[1] = &out[1] * 0.6;
            out
        });
        let cmp_traj = sample_curve(&squashed, t0, t1, el_steps)
            .map_err(num("comparison curve sampling"))?;
        let cmp_res = el_residual(&sc.h, &cmp_traj)
            .map_err(num("EL residual on the comparison curve"))?;
        let cmp_max = cmp_res.iter().cloned().fold(0.0f64, f64::max);
        report.add_value("el_residual_comparison", cmp_max);
        report.check_ge(
            "comparison_curve_is_not_geodesic",
            cmp_max,
            tol.el_contrast,
            "el_contrast",
        );
    }

    if cfg.output.emit_plots {
        let mut path_table = NodeTable::new(
            (1..=sc.analytic.target_dim())
                .map(|i| format!("x{i}"))
                .collect(),
        );
        for s in &orbit_traj.states {
            path_table.push(s.clone());
        }
        tables.push(("orbit_path.csv".into(), path_table));
    }
    Ok(())
}

fn run_pfaff(
    cfg: &ScenarioConfig,
    report: &mut Report,
    tables: &mut Vec<(String, NodeTable)>,
) -> Result<(), RunError> {
    let sc = build_pfaff_scenario(cfg)?;
    let tol = &cfg.tolerances;
    let m = cfg.domain.lo.len();
    let domain: Vec<(f64, f64)> = (0..m)
        .map(|k| (cfg.domain.lo[k], cfg.domain.hi[k]))
        .collect();
    let phi = MetricField::euclidean(m);
    let mesh = MeshQuadrature::trapezoid_euclidean(&domain, &cfg.domain.resolution)
        .map_err(num("quadrature mesh"))?;
    report.set_volume(mesh.volume());
    let mesh_g = MeshQuadrature::trapezoid(&domain, &cfg.domain.resolution, &sc.g)
        .map_err(num("rescaled-metric mesh"))?;
    record_rescaled_volume(report, mesh_g.volume());
    let psi = MetricField::diagonal(vec![1.0]);

    if let Some(f) = &sc.exact_solution {
        let sys = system_e_residual(&sc.section, f, &mesh).map_err(num("system residual"))?;
        report.add_value("system_residual", sys.max_residual);
        report.check_le(
            "exact_form_solves_the_system",
            sys.max_residual,
            tol.residual,
            "residual",
        );
        tables.push(("system_residual.csv".into(), sys.table));

        let lt = lagrangian_lt_detailed(&phi, &psi, &sc.section, f, &mesh)
            .map_err(num("ratio functional"))?;
        report.add_value("lt_solution", lt.value);
        report.check_le(
            "lt_attains_half_volume",
            (lt.value - lt.half_volume).abs(),
            tol.equality,
            "equality",
        );
        report.check_ge(
            "lower_bound_holds",
            lt.value - lt.half_volume,
            -tol.bound_slack,
            "bound_slack",
        );
        tables.push(("lt_nodes.csv".into(), lt.table));

        let e = energy(&sc.g, &sc.a_sharp, &sc.h, f, &mesh_g)
            .map_err(num("direction energy"))?;
        report.add_value("energy_rescaled_metric", e);
        if sc.form_norm_constant_one {
            report.check_le(
                "energy_agrees_with_lt",
                (e - lt.value).abs(),
                tol.invariance,
                "invariance",
            );
        } else {
            report.add_note(
                "the rescaled-metric energy uses the rescaled volume and only matches the ratio functional for unit-norm forms",
            );
        }
    } else {
        // no potential exists: sweep candidate maps, none may attain the bound
        let count = cfg.params.perturbations.unwrap_or(12);
        let mut sweep = NodeTable::new(vec!["index".into(), "lt".into(), "excess".into()]);
        let mut min_excess = f64::INFINITY;
        for k in 0..count {
            let slope = -1.0 + 2.0 * (k as f64) / (count.max(2) as f64 - 1.0);
            let base = SmoothMap::new(m, 1, move |a: &[T]| {
                let mut acc = a[0].clone();
                if a.len() > 1 {
                    acc = acc + &a[1] * slope;
                }
                vec![acc]
            });
            let eta = polynomial_bump(&domain, 1, cfg.seed.wrapping_add(1000 + k as u64));
            let f = base.perturbed(&eta, 0.05);
            let v = lagrangian_lt(&phi, &psi, &sc.section, &f, &mesh)
                .map_err(num("ratio functional on a candidate"))?;
            let excess = v - 0.5 * mesh.volume();
            min_excess = min_excess.min(excess);
            sweep.push(vec![k as f64, v, excess]);
        }
        report.add_value("candidate_min_excess", min_excess);
        report.check_ge(
            "no_candidate_attains_the_bound",
            min_excess,
            tol.perturbation_margin,
            "perturbation_margin",
        );
        report.add_note("the configured 1-form is not closed, so the system has no solution");
        tables.push(("candidate_sweep.csv".into(), sweep));
    }
    Ok(())
}

fn record_rescaled_volume(report: &mut Report, v: f64) {
    report.add_value("volume_rescaled_metric", v);
}

fn run_pseudolinear(
    cfg: &ScenarioConfig,
    report: &mut Report,
    tables: &mut Vec<(String, NodeTable)>,
) -> Result<(), RunError> {
    let sc = build_pseudolinear_scenario(cfg)?;
    let tol = &cfg.tolerances;
    let m = cfg.domain.lo.len();
    let domain: Vec<(f64, f64)> = (0..m)
        .map(|k| (cfg.domain.lo[k], cfg.domain.hi[k]))
        .collect();
    let phi = MetricField::euclidean(m);
    let mesh = MeshQuadrature::trapezoid_euclidean(&domain, &cfg.domain.resolution)
        .map_err(num("quadrature mesh"))?;
    report.set_volume(mesh.volume());

    let sys = system_e_residual(&sc.section, &sc.f, &mesh).map_err(num("system residual"))?;
    report.add_value("system_residual", sys.max_residual);
    report.check_le(
        "closed_form_solves_the_system",
        sys.max_residual,
        tol.residual,
        "residual",
    );
    tables.push(("system_residual.csv".into(), sys.table));

    // level hypersurfaces are totally geodesic for the flat chart metric
    let mut ii_table = NodeTable::new(
        (1..=m)
            .map(|k| format!("a{k}"))
            .chain(["ii_residual".to_string()])
            .collect(),
    );
    let mut ii_max = 0.0f64;
    for node in mesh.nodes() {
        let r = second_fundamental_form_residual(&sc.scalar, &phi, node)
            .map_err(num("level-set second fundamental form"))?;
        ii_max = ii_max.max(r);
        let mut row = node.clone();
        row.push(r);
        ii_table.push(row);
    }
    report.add_value("level_set_ii_residual", ii_max);
    report.check_le(
        "level_sets_are_totally_geodesic",
        ii_max,
        tol.residual,
        "residual",
    );
    tables.push(("level_set_ii.csv".into(), ii_table));

    let psi = MetricField::diagonal(vec![1.0]);
    let lt = lagrangian_lt_detailed(&phi, &psi, &sc.section, &sc.f, &mesh)
        .map_err(num("ratio functional"))?;
    report.add_value("lt_solution", lt.value);
    report.check_le(
        "lt_attains_half_volume",
        (lt.value - lt.half_volume).abs(),
        tol.equality,
        "equality",
    );
    report.check_ge(
        "lower_bound_holds",
        lt.value - lt.half_volume,
        -tol.bound_slack,
        "bound_slack",
    );
    tables.push(("lt_nodes.csv".into(), lt.table));

    let functional =
        |g: &SmoothMap<f64>| lagrangian_lt(&phi, &psi, &sc.section, g, &mesh);
    let mut fv_max = 0.0f64;
    for seed in 0..5u64 {
        let eta = polynomial_bump(&domain, 1, cfg.seed.wrapping_add(seed));
        let dv = first_variation(functional, &sc.f, &eta, 1e-4)
            .map_err(num("first variation"))?;
        fv_max = fv_max.max(dv.abs());
    }
    report.add_value("first_variation_max", fv_max);
    report.check_le(
        "solution_is_critical",
        fv_max,
        tol.first_variation,
        "first_variation",
    );

    let mesh_g = MeshQuadrature::trapezoid(&domain, &cfg.domain.resolution, &sc.g)
        .map_err(num("rescaled-metric mesh"))?;
    record_rescaled_volume(report, mesh_g.volume());
    Ok(())
}

fn run_field_eqs(
    cfg: &ScenarioConfig,
    report: &mut Report,
    tables: &mut Vec<(String, NodeTable)>,
) -> Result<(), RunError> {
    let sc = build_field_eq_scenario(cfg)?;
    let tol = &cfg.tolerances;
    let n = cfg.domain.lo.len();
    report.add_value("sample_count", sc.samples.len() as f64);
    report.add_value("rejected_samples", sc.rejected as f64);
    report.add_note(&format!(
        "singular-locus margin {q:e} rejected {r} of {t} raw samples",
        q = sc.margin,
        r = sc.rejected,
        t = sc.rejected + sc.samples.len()
    ));

    let mut headers: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    headers.extend((1..=n).map(|k| format!("y{k}")));
    headers.extend(
        [
            "em_h_max",
            "em_v_max",
            "maxwell_h_max",
            "maxwell_mixed_max",
            "maxwell_v_max",
            "sigma_h",
            "sigma_v",
            "t_ij_max",
            "t_asym_max",
            "t_h_max",
            "t_v_max",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let mut table = NodeTable::new(headers);

    let mut em_h_max = 0.0f64;
    let mut em_v_max = 0.0f64;
    let mut mx_h_max = 0.0f64;
    let mut mx_m_max = 0.0f64;
    let mut mx_v_max = 0.0f64;
    let mut t_ij_max = 0.0f64;
    let mut t_asym_max = 0.0f64;
    let mut t_h_max = 0.0f64;
    let mut t_v_max = 0.0f64;
    for (x, y) in &sc.samples {
        let em = sc.metric.em_tensors(x, y).map_err(num("electromagnetic tensors"))?;
        let sd = sc.metric.sigma_derived(x, y).map_err(num("sigma-derived tensors"))?;
        let mx = sc
            .metric
            .maxwell_residuals(x, y)
            .map_err(num("Maxwell residuals"))?;
        let (t_h, t_v) = sc
            .metric
            .einstein_components(x, y, sc.kappa)
            .map_err(num("Einstein components"))?;
        let row_vals = [
            em.horizontal.max_abs(),
            em.vertical.max_abs(),
            mx.horizontal.max_abs(),
            mx.mixed.max_abs(),
            mx.vertical.max_abs(),
            sd.sigma_h,
            sd.sigma_v,
            sd.t_ij.max_abs(),
            sd.t_antisymmetric_magnitude(),
            t_h.max_abs(),
            t_v.max_abs(),
        ];
        em_h_max = em_h_max.max(row_vals[0]);
        em_v_max = em_v_max.max(row_vals[1]);
        mx_h_max = mx_h_max.max(row_vals[2]);
        mx_m_max = mx_m_max.max(row_vals[3]);
        mx_v_max = mx_v_max.max(row_vals[4]);
        t_ij_max = t_ij_max.max(row_vals[7]);
        t_asym_max = t_asym_max.max(row_vals[8]);
        t_h_max = t_h_max.max(row_vals[9]);
        t_v_max = t_v_max.max(row_vals[10]);
        let mut row = x.clone();
        row.extend_from_slice(y);
        row.extend_from_slice(&row_vals);
        table.push(row);
    }
    tables.push(("field_equation_samples.csv".into(), table));

    report.add_value("em_horizontal_max", em_h_max);
    report.add_value("em_vertical_max", em_v_max);
    report.add_value("maxwell_horizontal_max", mx_h_max);
    report.add_value("maxwell_mixed_max", mx_m_max);
    report.add_value("maxwell_vertical_max", mx_v_max);
    report.add_value("t_ij_max", t_ij_max);
    report.add_value("t_ij_antisymmetric_max", t_asym_max);
    report.add_value("energy_momentum_h_max", t_h_max);
    report.add_value("energy_momentum_v_max", t_v_max);
    report.add_note(
        "Maxwell equations are reported as residuals of the stated connection choice, not asserted",
    );

    report.check_ge(
        "samples_available",
        sc.samples.len() as f64,
        1.0,
        "structural",
    );
    if sc.sigma_name == "zero" {
        for (name, v) in [
            ("riemannian_reduction_em", em_h_max.max(em_v_max)),
            (
                "riemannian_reduction_maxwell",
                mx_h_max.max(mx_m_max).max(mx_v_max),
            ),
            ("riemannian_reduction_t_ij", t_ij_max),
            ("riemannian_reduction_t_v", t_v_max),
        ] {
            report.check_le(name, v, tol.riemannian_zero, "riemannian_zero");
        }
    }
    if n == 2 {
        report.check_le(
            "vertical_energy_momentum_vanishes_in_dim_2",
            t_v_max,
            tol.riemannian_zero,
            "riemannian_zero",
        );
    }
    Ok(())
}
