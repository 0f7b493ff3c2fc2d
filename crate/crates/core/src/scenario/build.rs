//! Builders for the scenario families: data validation happens here so the
//! pipeline never starts on incomplete or degenerate configurations.

use crate::chart::field::{MetricField, ScalarField, VectorField};
use crate::chart::linalg::Mat;
use crate::chart::tower::DualTower;
use crate::gl_metric::GLMetric;
use crate::scenario::catalog;
use crate::scenario::config::{ConfigError, ScenarioConfig};
use crate::scenario::run::RunError;
use crate::variational::{DirectionSection, SmoothMap};

type T = DualTower<f64>;

fn probe_failure(location: &str) -> impl FnOnce(crate::error::Error) -> RunError + '_ {
    move |source| RunError::Numerical {
        location: location.to_string(),
        source,
    }
}

/// Orbit scenario: the direction-induced metric, the orbit section, and the
/// closed-form orbit of the catalog field.
pub struct OrbitScenario {
    pub h: GLMetric<f64>,
    pub xi: VectorField<f64>,
    pub psi: MetricField<f64>,
    pub section: DirectionSection<f64>,
    pub x0: Vec<f64>,
    pub xi_name: String,
    pub analytic: SmoothMap<f64>,
}

pub fn build_orbit_scenario(cfg: &ScenarioConfig) -> Result<OrbitScenario, RunError> {
    let p = &cfg.params;
    let x0 = p.x0.clone().expect("validated");
    let n = x0.len();
    let xi_name = p.xi.clone().expect("validated");
    let xi = catalog::vector_field(&xi_name, n, p.xi_vector.as_deref())?;
    let psi = MetricField::euclidean(n);

    let analytic: SmoothMap<f64> = match xi_name.as_str() {
        "rotation" => {
            let (a, b) = (x0[0], x0[1]);
            SmoothMap::new(1, 2, move |t: &[T]| {
                let (c, s) = (t[0].cos(), t[0].sin());
                vec![&c * a - &s * b, &s * a + &c * b]
            })
        }
        "identity-linear" => {
            let x0c = x0.clone();
            SmoothMap::new(1, n, move |t: &[T]| {
                let e = t[0].exp();
                x0c.iter().map(|&c| &e * c).collect()
            })
        }
        "constant" => {
            let c = p.xi_vector.clone().expect("validated");
            let x0c = x0.clone();
            SmoothMap::new(1, n, move |t: &[T]| {
                (0..x0c.len()).map(|i| &t[0] * c[i] + x0c[i]).collect()
            })
        }
        other => {
            return Err(ConfigError::Invalid(format!(
                "no closed-form orbit for field {other:?}"
            ))
            .into())
        }
    };

    // the field must not vanish along the configured orbit
    let (t0, t1) = (cfg.domain.lo[0], cfg.domain.hi[0]);
    for k in 0..=32 {
        let t = t0 + (t1 - t0) * (k as f64) / 32.0;
        let x = analytic
            .eval(&[t])
            .map_err(probe_failure("closed-form orbit sampling"))?;
        let v = xi.eval(&x).map_err(probe_failure("direction-field sampling"))?;
        let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 1e-12) {
            return Err(ConfigError::Invalid(format!(
                "direction field vanishes on the configured region (t = {t})"
            )).into());
        }
    }

    let section = DirectionSection::product(xi.clone(), VectorField::constant(1, vec![1.0]));
    let h = GLMetric::induced_by_direction_field(xi.clone(), psi.clone());
    Ok(OrbitScenario {
        h,
        xi,
        psi,
        section,
        x0,
        xi_name,
        analytic,
    })
}

/// Pfaff scenario: the rescaled base metric, the inverse-square line metric,
/// the 1-form and its raised field.
pub struct PfaffScenario {
    pub g: MetricField<f64>,
    pub h: GLMetric<f64>,
    pub a_form: VectorField<f64>,
    pub a_sharp: VectorField<f64>,
    pub section: DirectionSection<f64>,
    /// Potential of the form when closed: `f(a) = <v, a>`.
    pub exact_solution: Option<SmoothMap<f64>>,
    pub form_norm_constant_one: bool,
}

pub fn build_pfaff_scenario(cfg: &ScenarioConfig) -> Result<PfaffScenario, RunError> {
    let p = &cfg.params;
    let m = cfg.domain.lo.len();
    let name = p.a_form.clone().expect("validated");
    let v = p.v.clone().expect("validated");
    let a_form = catalog::one_form(&name, m, &v)?;

    // the form must not vanish on the domain box
    let mut probe = vec![0usize; m];
    let samples = 5usize;
    for _ in 0..samples.pow(m as u32) {
        let a: Vec<f64> = (0..m)
            .map(|k| {
                cfg.domain.lo[k]
                    + (cfg.domain.hi[k] - cfg.domain.lo[k]) * (probe[k] as f64)
                        / (samples as f64 - 1.0)
            })
            .collect();
        let comp = a_form.eval(&a).map_err(probe_failure("1-form sampling"))?;
        let norm: f64 = comp.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 1e-9) {
            return Err(ConfigError::Invalid(format!(
                "1-form vanishes on the domain near {a:?}"
            )).into());
        }
        for k in (0..m).rev() {
            probe[k] += 1;
            if probe[k] < samples {
                break;
            }
            probe[k] = 0;
        }
    }

    // g = phi / |A|^2 with phi Euclidean
    let g = {
        let form = a_form.clone();
        MetricField::new(m, move |a: &[T]| {
            let comp = form.eval_towers(a);
            let mut norm2 = T::constant(0.0);
            for c in &comp {
                norm2 = norm2 + c * c;
            }
            let inv = norm2.recip();
            Mat::from_fn(m, m, |i, j| {
                if i == j {
                    inv.clone()
                } else {
                    T::constant(0.0)
                }
            })
        })
    };
    // with phi Euclidean the raised field has the same components
    let a_sharp = a_form.clone();

    let gamma = MetricField::diagonal(vec![1.0]);
    let h = GLMetric::new(gamma, catalog::sigma_log_speed(), |_: &[f64], y: &[f64]| {
        y[0].abs() < 1e-12
    });

    let exact_solution = match name.as_str() {
        "constant" | "exact-linear" => {
            let vc = v.clone();
            Some(SmoothMap::new(m, 1, move |a: &[T]| {
                let mut acc = T::constant(0.0);
                for k in 0..vc.len() {
                    acc = acc + &a[k] * vc[k];
                }
                vec![acc]
            }))
        }
        _ => None,
    };

    let section =
        DirectionSection::product(VectorField::constant(1, vec![1.0]), a_form.clone());
    let norm_v: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let form_norm_constant_one =
        matches!(name.as_str(), "constant" | "exact-linear") && (norm_v - 1.0).abs() < 1e-14;
    Ok(PfaffScenario {
        g,
        h,
        a_form,
        a_sharp,
        section,
        exact_solution,
        form_norm_constant_one,
    })
}

/// Pseudolinear scenario: the closed-form map, its section decomposition, and
/// the rescaled base metric.
pub struct PseudolinearScenario {
    pub f: SmoothMap<f64>,
    /// The same map as a scalar field, for level-set tests.
    pub scalar: ScalarField<f64>,
    pub section: DirectionSection<f64>,
    pub g: MetricField<f64>,
    pub form_name: String,
}

pub fn build_pseudolinear_scenario(
    cfg: &ScenarioConfig,
) -> Result<PseudolinearScenario, RunError> {
    let p = &cfg.params;
    let m = cfg.domain.lo.len();
    let form_name = p.form.clone().expect("validated");
    let v = p.v.clone().expect("validated");
    if v.len() != m {
        return Err(ConfigError::Invalid(format!(
            "params.v must have the domain dimension {m}"
        )).into());
    }
    let w = p.w.unwrap_or(0.0);

    match form_name.as_str() {
        "exponential" => {
            let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(ConfigError::Invalid(
                    "v = 0 gives a constant map with vanishing gradient".into(),
                ).into());
            }
            let vc = v.clone();
            let f = SmoothMap::new(m, 1, move |a: &[T]| {
                let mut acc = T::constant(w);
                for k in 0..vc.len() {
                    acc = acc + &a[k] * vc[k];
                }
                vec![acc.exp()]
            });
            let vc = v.clone();
            let scalar = ScalarField::new(m, move |a: &[T]| {
                let mut acc = T::constant(w);
                for k in 0..vc.len() {
                    acc = acc + &a[k] * vc[k];
                }
                acc.exp()
            });
            let ordering = p.ordering.as_deref().unwrap_or("e3");
            let section = match ordering {
                "e3" => {
                    // T^1_alpha = xi(x) alpha_alpha(a) with xi(x) = x, alpha = v
                    let xi = VectorField::new(1, 1, |x: &[T]| vec![x[0].clone()]);
                    DirectionSection::product(xi, VectorField::constant(m, v.clone()))
                }
                "pl" => {
                    // T^1_alpha = scale(a) form_alpha(x) with scale = 1,
                    // form(x) = x v
                    let vc = v.clone();
                    let form = VectorField::new(1, m, move |x: &[T]| {
                        vc.iter().map(|&c| &x[0] * c).collect()
                    });
                    DirectionSection::product_swapped(ScalarField::constant(m, 1.0), form)
                }
                _ => unreachable!("validated"),
            };
            // g = delta / |A|^2 with A(x) = x v evaluated along the map
            let g = {
                let f = f.clone();
                let norm2_v: f64 = v.iter().map(|c| c * c).sum();
                MetricField::new(m, move |a: &[T]| {
                    let x = f.eval_towers(a).remove(0);
                    let inv = (&x * &x * norm2_v).recip();
                    Mat::from_fn(m, m, |i, j| {
                        if i == j {
                            inv.clone()
                        } else {
                            T::constant(0.0)
                        }
                    })
                })
            };
            Ok(PseudolinearScenario {
                f,
                scalar,
                section,
                g,
                form_name,
            })
        }
        "quotient" => {
            let vp = p.vprime.clone().expect("validated");
            let wp = p.wprime.expect("validated");
            if vp.len() != m {
                return Err(ConfigError::Invalid(format!(
                    "params.vprime must have the domain dimension {m}"
                )).into());
            }
            if p.ordering.as_deref() == Some("e3") {
                return Err(ConfigError::Invalid(
                    "the quotient form only decomposes in the \"pl\" ordering".into(),
                ).into());
            }
            // the affine denominator must keep one sign over the box: check
            // all corners exactly
            let mut corner = vec![0usize; m];
            let mut sign = 0.0f64;
            for _ in 0..(1usize << m) {
                let a: Vec<f64> = (0..m)
                    .map(|k| {
                        if corner[k] == 0 {
                            cfg.domain.lo[k]
                        } else {
                            cfg.domain.hi[k]
                        }
                    })
                    .collect();
                let q: f64 = wp + (0..m).map(|k| vp[k] * a[k]).sum::<f64>();
                if q == 0.0 || (sign != 0.0 && q.signum() != sign) {
                    return Err(ConfigError::Invalid(
                        "quotient denominator vanishes on the domain box".into(),
                    ).into());
                }
                sign = q.signum();
                for k in (0..m).rev() {
                    corner[k] += 1;
                    if corner[k] < 2 {
                        break;
                    }
                    corner[k] = 0;
                }
            }
            let (vc, vpc) = (v.clone(), vp.clone());
            let f = SmoothMap::new(m, 1, move |a: &[T]| {
                let mut num = T::constant(w);
                let mut den = T::constant(wp);
                for k in 0..vc.len() {
                    num = num + &a[k] * vc[k];
                    den = den + &a[k] * vpc[k];
                }
                vec![num / den]
            });
            let (vc, vpc) = (v.clone(), vp.clone());
            let scalar = ScalarField::new(m, move |a: &[T]| {
                let mut num = T::constant(w);
                let mut den = T::constant(wp);
                for k in 0..vc.len() {
                    num = num + &a[k] * vc[k];
                    den = den + &a[k] * vpc[k];
                }
                num / den
            });
            // the gradient (v - f v') / q must not vanish on the box
            let mut probe = vec![0usize; m];
            let samples = 5usize;
            for _ in 0..samples.pow(m as u32) {
                let a: Vec<f64> = (0..m)
                    .map(|k| {
                        cfg.domain.lo[k]
                            + (cfg.domain.hi[k] - cfg.domain.lo[k]) * (probe[k] as f64)
                                / (samples as f64 - 1.0)
                    })
                    .collect();
                let fv = f.eval(&a).map_err(probe_failure("map sampling"))?[0];
                let norm: f64 = (0..m)
                    .map(|k| (v[k] - fv * vp[k]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if !(norm > 1e-9) {
                    return Err(ConfigError::Invalid(format!(
                        "gradient vanishes on the domain near {a:?}"
                    )).into());
                }
                for k in (0..m).rev() {
                    probe[k] += 1;
                    if probe[k] < samples {
                        break;
                    }
                    probe[k] = 0;
                }
            }
            let (vpc, vc) = (vp.clone(), v.clone());
            let scale = ScalarField::new(m, move |a: &[T]| {
                let mut den = T::constant(wp);
                for k in 0..vpc.len() {
                    den = den + &a[k] * vpc[k];
                }
                den.recip()
            });
            let vpc = vp.clone();
            let form = VectorField::new(1, m, move |x: &[T]| {
                (0..vc.len())
                    .map(|k| -(&x[0] * vpc[k]) + vc[k])
                    .collect()
            });
            let section = DirectionSection::product_swapped(scale, form);
            // g = delta / |A|^2 with A(x) = v - x v'
            let g = {
                let f = f.clone();
                let (vc, vpc) = (v.clone(), vp.clone());
                MetricField::new(m, move |a: &[T]| {
                    let x = f.eval_towers(a).remove(0);
                    let mut norm2 = T::constant(0.0);
                    for k in 0..vc.len() {
                        let comp = -(&x * vpc[k]) + vc[k];
                        norm2 = norm2 + &comp * &comp;
                    }
                    let inv = norm2.recip();
                    Mat::from_fn(m, m, |i, j| {
                        if i == j {
                            inv.clone()
                        } else {
                            T::constant(0.0)
                        }
                    })
                })
            };
            Ok(PseudolinearScenario {
                f,
                scalar,
                section,
                g,
                form_name,
            })
        }
        _ => unreachable!("validated"),
    }
}

/// Field-equation scenario: the metric and the surviving sample points.
pub struct FieldEqScenario {
    pub metric: GLMetric<f64>,
    pub samples: Vec<(Vec<f64>, Vec<f64>)>,
    pub rejected: usize,
    pub kappa: f64,
    pub margin: f64,
    pub sigma_name: String,
    pub gamma_name: String,
}

pub fn build_field_eq_scenario(cfg: &ScenarioConfig) -> Result<FieldEqScenario, RunError> {
    let p = &cfg.params;
    let n = cfg.domain.lo.len();
    let gamma_name = p.gamma.clone().expect("validated");
    let sigma_name = p.sigma.clone().expect("validated");
    let gamma = catalog::base_metric(&gamma_name, n, p.conformal_slope.as_deref())?;
    let margin = p.locus_margin.unwrap_or(1e-3);
    let kappa = p.kappa.unwrap_or(1.0);

    let metric = match sigma_name.as_str() {
        "zero" => GLMetric::riemannian(gamma.clone()),
        "log-speed" => {
            if n != 1 {
                return Err(ConfigError::Invalid(
                    "sigma = \"log-speed\" lives on a 1-dimensional base".into(),
                ).into());
            }
            GLMetric::new(gamma.clone(), catalog::sigma_log_speed(), |_, y: &[f64]| {
                y[0].abs() < 1e-12
            })
        }
        "direction-induced" => {
            let xi_name = p.xi.as_deref().unwrap_or("rotation");
            let xi = catalog::vector_field(xi_name, n, p.xi_vector.as_deref())?;
            GLMetric::induced_by_direction_field(xi, gamma.clone())
        }
        "y-only" => GLMetric::new(gamma.clone(), catalog::sigma_y_only(n), |_, _| false),
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown sigma {other:?} (expected zero | log-speed | direction-induced | y-only)"
            ))
            .into())
        }
    };

    // tensor sample grid over base box x fiber box, filtered by the
    // singular-locus margin
    let y_lo = p.y_lo.clone().expect("validated");
    let y_hi = p.y_hi.clone().expect("validated");
    let y_res = p.y_resolution.clone().expect("validated");
    let axis = |lo: f64, hi: f64, r: usize, i: usize| lo + (hi - lo) * (i as f64) / (r - 1) as f64;
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut index = vec![0usize; n];
    let total_x: usize = cfg.domain.resolution.iter().product();
    for _ in 0..total_x {
        xs.push(
            (0..n)
                .map(|k| axis(cfg.domain.lo[k], cfg.domain.hi[k], cfg.domain.resolution[k], index[k]))
                .collect(),
        );
        for k in (0..n).rev() {
            index[k] += 1;
            if index[k] < cfg.domain.resolution[k] {
                break;
            }
            index[k] = 0;
        }
    }
    let mut ys: Vec<Vec<f64>> = Vec::new();
    let mut yindex = vec![0usize; n];
    let total_y: usize = y_res.iter().product();
    for _ in 0..total_y {
        ys.push(
            (0..n)
                .map(|k| axis(y_lo[k], y_hi[k], y_res[k], yindex[k]))
                .collect(),
        );
        for k in (0..n).rev() {
            yindex[k] += 1;
            if yindex[k] < y_res[k] {
                break;
            }
            yindex[k] = 0;
        }
    }

    let mut samples = Vec::new();
    let mut rejected = 0usize;
    for x in &xs {
        for y in &ys {
            if !margin_ok(&metric, &sigma_name, p, x, y, margin) {
                rejected += 1;
                continue;
            }
            if metric.eval(x, y).is_err() {
                rejected += 1;
                continue;
            }
            samples.push((x.clone(), y.clone()).into());
        }
    }
    if samples.is_empty() {
        return Err(ConfigError::Invalid(
            "no sample points survive the singular-locus margin".into(),
        ).into());
    }
    Ok(FieldEqScenario {
        metric,
        samples,
        rejected,
        kappa,
        margin,
        sigma_name,
        gamma_name,
    })
}

fn margin_ok(
    metric: &GLMetric<f64>,
    sigma_name: &str,
    p: &crate::scenario::config::Params,
    x: &[f64],
    y: &[f64],
    margin: f64,
) -> bool {
    match sigma_name {
        "log-speed" => y[0].abs() >= margin,
        "direction-induced" => {
            let xi_name = p.xi.as_deref().unwrap_or("rotation");
            let Ok(xi) = catalog::vector_field(xi_name, x.len(), p.xi_vector.as_deref()) else {
                return false;
            };
            let Ok(xi_v) = xi.eval(x) else { return false };
            let Ok(psi) = metric.gamma().eval(x) else {
                return false;
            };
            let n = x.len();
            let mut pair = 0.0;
            let mut norm_xi = 0.0;
            let mut norm_y = 0.0;
            for i in 0..n {
                for j in 0..n {
                    pair += psi[(i, j)] * xi_v[i] * y[j];
                    norm_xi += psi[(i, j)] * xi_v[i] * xi_v[j];
                    norm_y += psi[(i, j)] * y[i] * y[j];
                }
            }
            pair.abs() >= margin * (norm_xi * norm_y).sqrt()
        }
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::ScenarioConfig;

    fn orbit_cfg() -> ScenarioConfig {
        ScenarioConfig::from_str(
            r#"
kind = "orbit"
[domain]
lo = [0.0]
hi = [6.283185307179586]
resolution = [2000]
[params]
xi = "rotation"
x0 = [1.0, 0.0]
"#,
        )
        .unwrap()
    }

    #[test]
    fn orbit_scenario_matches_unit_circle() {
        let sc = build_orbit_scenario(&orbit_cfg()).unwrap();
        let x = sc.analytic.eval(&[std::f64::consts::FRAC_PI_2]).unwrap();
        assert!((x[0]).abs() < 1e-15);
        assert!((x[1] - 1.0).abs() < 1e-15);
        // induced metric is the conformal shrink on-shell: h(x, xi) = psi/|xi|^2
        let g = sc.h.eval(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_field_scenario() {
        let cfg = ScenarioConfig::from_str(
            r#"
kind = "orbit"
[domain]
lo = [0.0]
hi = [1.0]
resolution = [100]
[params]
xi = "constant"
xi_vector = [1.0, 0.0]
x0 = [0.0, 0.5]
"#,
        )
        .unwrap();
        let sc = build_orbit_scenario(&cfg).unwrap();
        // h_ij = psi_ij / (y^1)^2, singular plane y^1 = 0
        let g = sc.h.eval(&[0.0, 0.5], &[2.0, 0.0]).unwrap();
        assert!((g[(0, 0)] - 0.25).abs() < 1e-14);
        assert!(sc.h.eval(&[0.0, 0.5], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn pfaff_unit_form_gives_euclidean_g() {
        let cfg = ScenarioConfig::from_str(
            r#"
kind = "pfaff"
[domain]
lo = [0.0, 0.0]
hi = [1.0, 1.0]
resolution = [9, 9]
[params]
a_form = "constant"
v = [1.0, 0.0]
"#,
        )
        .unwrap();
        let sc = build_pfaff_scenario(&cfg).unwrap();
        let g = sc.g.eval(&[0.3, 0.7]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - expect).abs() < 1e-14);
            }
        }
        assert_eq!(sc.a_sharp.eval(&[0.3, 0.7]).unwrap(), vec![1.0, 0.0]);
        assert!(sc.form_norm_constant_one);
    }

    #[test]
    fn pseudolinear_rejects_zero_gradient() {
        let cfg = ScenarioConfig::from_str(
            r#"
kind = "pseudolinear"
[domain]
lo = [0.0, 0.0]
hi = [1.0, 1.0]
resolution = [5, 5]
[params]
form = "exponential"
v = [0.0, 0.0]
"#,
        )
        .unwrap();
        assert!(build_pseudolinear_scenario(&cfg).is_err());
    }

    #[test]
    fn quotient_rejects_interior_pole() {
        let cfg = ScenarioConfig::from_str(
            r#"
kind = "pseudolinear"
[domain]
lo = [0.0, 0.0]
hi = [1.0, 1.0]
resolution = [5, 5]
[params]
form = "quotient"
v = [1.0, 0.0]
vprime = [0.0, 1.0]
wprime = -0.5
"#,
        )
        .unwrap();
        assert!(build_pseudolinear_scenario(&cfg).is_err());
    }
}
