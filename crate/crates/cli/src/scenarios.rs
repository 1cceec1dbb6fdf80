//! Scenario dispatch: each runner produces verdicts, residual tables and
//! point-cloud artifacts, then folds everything into one [`Report`].

use std::path::Path;
use std::time::Instant;
use serde_json::json;

use mobius_core::cones::{classify_sequence, verify_verdict, ConeLimitVerdict};
use mobius_core::domains::{
    bilipschitz_report, eta, fibered_constant_check, intrinsic_distance, sample_pairs, Domain,
    GridEstimator,
};
use mobius_core::frame_metric::{
    cauchy_probe, right_jacobian_check, BundleFixture, CauchyProbeOptions, CauchyVerdict,
    FrameMetric, NormalityFixture,
};
use mobius_core::group::{boost, compact_element, random_parabolic, GroupElement};
use mobius_core::kleinian::{
    limit_set, maximality_verdict, simple_divergence, MaximalityVerdict,
    SimpleDivergenceOutcome,
};
use mobius_core::mat::{vecn, Mat};
use mobius_core::rng::SplitMix64;
use mobius_core::sphere::{basepoint, SampledSet, SpherePoint};

use crate::config::{Scenario, ScenarioConfig};
use crate::csvio::emit_plot_data;
use crate::report::{write_atomic, Provenance, Report, TOOL_VERSION};

/// Runs the configured scenario, writing point clouds under `out_dir`.
pub fn run(cfg: &ScenarioConfig, out_dir: &Path) -> anyhow::Result<Report> {
    let started = Instant::now();
    let mut failures: Vec<String> = Vec::new();
    let mut residuals: Vec<serde_json::Value> = Vec::new();
    let mut schedule: Vec<f64> = Vec::new();
    let mut tolerances = json!({});
    let verdicts = match &cfg.scenario {
        Scenario::ConeDynamics { cone, sequence, resolution, margin } => {
            schedule = sequence.schedule.clone();
            tolerances = json!({
                "resolution_rad": resolution,
                "avoidance_margin_rad": margin,
                "final_residual_rad": 0.05 * cfg.tolerance_scale,
            });
            let verdict = classify_sequence(sequence, cone, *margin)?;
            let rep = verify_verdict(sequence, cone, &verdict, *resolution)?;
            for row in &rep.rows {
                residuals.push(json!({
                    "k": row.k,
                    "residual_rad": row.residual,
                    "tol_rad": row.tol,
                }));
            }
            if !rep.pass {
                failures.push(rep.failure.clone().unwrap_or_else(|| "verifier failed".into()));
            }
            if rep.final_residual >= 0.05 * cfg.tolerance_scale {
                failures.push(format!(
                    "final residual {:.4} exceeds {:.4}",
                    rep.final_residual,
                    0.05 * cfg.tolerance_scale
                ));
            }
            let verdict_json = match &verdict {
                ConeLimitVerdict::ShrinkToVertex { subcone, detail } => {
                    let sample = subcone.sample(*resolution, mobius_core::cones::SAMPLE_BUDGET)?;
                    emit_plot_data(&sample, &out_dir.join(format!("{}.subcone.csv", cfg.out_prefix)))?;
                    let last = *sequence.schedule.last().unwrap();
                    let image = sample.map(&sequence.at(last).to_group());
                    emit_plot_data(&image, &out_dir.join(format!("{}.image.csv", cfg.out_prefix)))?;
                    json!({
                        "case": "ShrinkToVertex",
                        "detail": format!("{detail:?}"),
                        "subcone": {
                            "center": subcone.center,
                            "alpha_rad": subcone.alpha,
                            "lambda": subcone.lambda,
                        },
                        "resolution_rad": resolution,
                    })
                }
                ConeLimitVerdict::Renormalizable { eps, limit, translator_final, note } => {
                    let sample = limit.sample(*resolution, mobius_core::cones::SAMPLE_BUDGET)?;
                    emit_plot_data(&sample, &out_dir.join(format!("{}.limit.csv", cfg.out_prefix)))?;
                    json!({
                        "case": "Renormalizable",
                        "eps_schedule": eps,
                        "translator_final": { "v": translator_final.trans },
                        "limit_cone": {
                            "center": limit.center,
                            "alpha_rad": limit.alpha,
                            "lambda": limit.lambda,
                        },
                        "note": note,
                        "resolution_rad": resolution,
                    })
                }
            };
            json!({
                "classification": verdict_json,
                "verifier": {
                    "final_residual_rad": rep.final_residual,
                    "final_tol_rad": rep.final_tol,
                    "decreasing": rep.decreasing,
                    "pass": rep.pass,
                },
            })
        }
        Scenario::LimitSet { group, depth, method } => {
            tolerances = json!({ "depth": depth });
            let lam = limit_set(group, *depth, *method, 400_000)?;
            let covering = lam.covering_radius_estimate();
            if lam.points.is_empty() {
                json!({
                    "count": 0,
                    "warning": lam.warning,
                    "depth": depth,
                    "method": format!("{method:?}"),
                })
            } else {
                let set = SampledSet::new(lam.points.clone(), covering)?;
                emit_plot_data(&set, &out_dir.join(format!("{}.points.csv", cfg.out_prefix)))?;
                json!({
                    "count": lam.points.len(),
                    "covering_radius_estimate_rad": covering,
                    "depth": depth,
                    "method": format!("{method:?}"),
                    "warning": lam.warning,
                })
            }
        }
        Scenario::Maximality { group, fixture, eps, depth, expect_maximal, min_gap } => {
            tolerances = json!({ "eps_rad": eps, "depth": depth });
            let verdict = maximality_verdict(group, fixture, *eps, *depth, 400_000)?;
            if let Some(expect) = expect_maximal {
                if verdict.is_maximal() != *expect {
                    failures.push(format!(
                        "expected maximal = {expect}, got {}",
                        verdict.is_maximal()
                    ));
                }
            }
            let gap_json = match &verdict {
                MaximalityVerdict::NotMaximal { gap: Some(gap), .. } => {
                    if let Some(min) = min_gap {
                        if gap.gap_angle < *min {
                            failures.push(format!(
                                "gap witness {:.4} below configured separation {min}",
                                gap.gap_angle
                            ));
                        }
                    }
                    residuals.push(json!({
                        "max_min_distance_rad": gap.max_min_distance,
                        "grid_size": gap.grid_size,
                    }));
                    json!({
                        "gap_angle_rad": gap.gap_angle,
                        "gap_center": gap.gap_center.xi(),
                        "caveat": gap.caveat,
                    })
                }
                _ => serde_json::Value::Null,
            };
            json!({
                "verdict": match &verdict {
                    MaximalityVerdict::MaximalAtResolution { eps, depth } =>
                        format!("MaximalAtResolution(eps = {eps}, depth = {depth})"),
                    MaximalityVerdict::Maximal { reason } => format!("Maximal: {reason}"),
                    MaximalityVerdict::NotMaximal { reason, .. } => format!("NotMaximal: {reason}"),
                },
                "is_maximal": verdict.is_maximal(),
                "gap": gap_json,
                "caveat": "verdicts are evidence at the stated resolution and depth",
            })
        }
        Scenario::SimpleDivergence { boost_rate, rotation_angle, count } => {
            let n = cfg.n;
            let rot = match rotation_angle {
                Some(angle) => {
                    let mut q = Mat::identity(n + 1);
                    q[(0, 0)] = angle.cos();
                    q[(0, 1)] = -angle.sin();
                    q[(1, 0)] = angle.sin();
                    q[(1, 1)] = angle.cos();
                    compact_element(&q)?
                }
                None => GroupElement::identity(n),
            };
            let seq: Vec<GroupElement> = (1..=*count)
                .map(|k| rot.mul(&boost(n, boost_rate * k as f64)))
                .collect();
            schedule = (1..=*count).map(|k| k as f64).collect();
            tolerances = json!({
                "l_limit_tol": 1e-8 * cfg.tolerance_scale,
                "reconstruction_tol": 1e-9 * cfg.tolerance_scale,
            });
            match simple_divergence(&seq)? {
                SimpleDivergenceOutcome::Simple(sd) => {
                    let l1_err = sd.l1.projective_dist(&rot);
                    let l2_err = sd.l2.projective_dist(&GroupElement::identity(n));
                    if l1_err > 1e-8 * cfg.tolerance_scale {
                        failures.push(format!("l1 limit off by {l1_err:.3e}"));
                    }
                    if l2_err > 1e-8 * cfg.tolerance_scale {
                        failures.push(format!("l2 limit off by {l2_err:.3e}"));
                    }
                    for (k, g) in (1..=*count).zip(seq.iter()) {
                        let dec = mobius_core::group::kak(g)?;
                        let recon = dec.reconstruct().max_abs_diff(g);
                        let tol =
                            1e-9 * cfg.tolerance_scale * (1.0 + g.mat().norm_inf());
                        if recon > tol {
                            failures.push(format!("reconstruction at k = {k}: {recon:.3e}"));
                        }
                        residuals.push(json!({
                            "k": k,
                            "t": dec.t,
                            "reconstruction_residual": recon,
                        }));
                    }
                    json!({
                        "outcome": "Simple",
                        "l1": sd.l1.mat().data,
                        "l2": sd.l2.mat().data,
                        "p_plus": sd.p_plus.xi(),
                        "p_minus": sd.p_minus.xi(),
                        "l1_error_vs_predicted": l1_err,
                        "l2_error_vs_predicted": l2_err,
                        "convention": "KAK with deterministic Householder section; \
                                       sequence limits depend on this convention",
                    })
                }
                SimpleDivergenceOutcome::NotSimple { variation } => {
                    failures.push(format!(
                        "sequence is not simply diverging (tail variation {variation:.3e})"
                    ));
                    json!({ "outcome": "NotSimple", "variation": variation })
                }
            }
        }
        Scenario::CauchyProbe { two_points, pairs } => {
            let n = cfg.n;
            let fm = FrameMetric::new(n);
            let q1 = SpherePoint::new({
                let mut v = vec![0.0; n + 1];
                v[0] = 0.6;
                v[n] = 0.8;
                v
            })?;
            let q2 = q1.antipode();
            let fixture = if *two_points {
                BundleFixture::SphereMinusTwoPoints { first: q1.clone(), second: q2.clone() }
            } else {
                BundleFixture::SphereMinusPoint { deleted: q1.clone() }
            };
            let gate = mobius_core::frame_metric::normality_gate(
                &NormalityFixture::SphereMinusPoint { n },
            );
            let opts = CauchyProbeOptions {
                coset_tol: 1e-8 * cfg.tolerance_scale,
                ..CauchyProbeOptions::default()
            };
            tolerances = json!({
                "coset_tol": opts.coset_tol,
                "distance_threshold": opts.distance_threshold,
            });
            let mut rng = SplitMix64::new(cfg.seed);
            let r1 = rotation_to(n, &q1);
            let r2 = rotation_to(n, &q2);
            let mut rows = Vec::new();
            for i in 0..*pairs {
                let dir1 = mobius_core::group::AlgebraElement::pure_plus(&rng.unit_vector(n));
                let dir2 = mobius_core::group::AlgebraElement::pure_plus(&rng.unit_vector(n));
                let frame1 = r1.clone();
                let p0 = random_parabolic(&mut rng, n, 0.4).to_group();
                let (frame2, expect_equivalent) = if *two_points {
                    (r2.clone(), false)
                } else {
                    (r1.mul(&p0), true)
                };
                let tail1 = tail(&frame1, &dir1, 14);
                let tail2 = tail(&frame2, &dir2, 14);
                let verdict = cauchy_probe(&fm, &fixture, &tail1, &tail2, &opts)?;
                let (label, residual, ok, solution, distances) = match &verdict {
                    CauchyVerdict::Equivalent {
                        coset_residual,
                        coset_solution,
                        distance_rows,
                        ..
                    } => (
                        "Equivalent",
                        *coset_residual,
                        expect_equivalent,
                        serde_json::Value::from(coset_solution.mat().data.clone()),
                        serde_json::Value::from(distance_rows.clone()),
                    ),
                    CauchyVerdict::Inequivalent { coset_residual } => (
                        "Inequivalent",
                        *coset_residual,
                        !expect_equivalent,
                        serde_json::Value::Null,
                        serde_json::Value::Null,
                    ),
                };
                if !ok {
                    failures.push(format!("pair {i}: unexpected verdict {label}"));
                }
                residuals.push(json!({
                    "pair": i,
                    "verdict": label,
                    "coset_residual": residual,
                    "distance_upper_bounds": distances,
                }));
                rows.push(json!({
                    "pair": i,
                    "verdict": label,
                    "coset_solution_row_major": solution,
                }));
            }
            json!({
                "fixture": if *two_points { "sphere-minus-two-points" } else { "sphere-minus-point" },
                "pairs": rows,
                "normality_gate": {
                    "codimension": gate.codimension,
                    "authorized": gate.authorized,
                    "note": gate.note,
                },
            })
        }
        Scenario::NormalDomain { domain, h, pairs, pair_list, fibered, include_reference_pair } => {
            let d = domain.dim();
            let (lo, hi, sample_lo, sample_hi) = domain_box(domain);
            let est = GridEstimator::new(*h, lo, hi);
            let mut rng = SplitMix64::new(cfg.seed);
            let pair_list: Vec<(Vec<f64>, Vec<f64>)> = if pair_list.is_empty() {
                sample_pairs(domain, &sample_lo, &sample_hi, 0.06, *pairs, &mut rng)
            } else {
                pair_list.iter().map(|p| (p.x.clone(), p.y.clone())).collect()
            };
            tolerances = json!({
                "h": h,
                "eta_connectivity": mobius_core::domains::eta_connectivity(d),
            });
            let mut csv = String::from("intrinsic,extrinsic,ratio\n");
            let verdict = if *fibered {
                let rep = fibered_constant_check(domain, &est, &pair_list)?;
                for row in &rep.rows {
                    residuals.push(json!({
                        "intrinsic": row.intrinsic,
                        "extrinsic": row.extrinsic,
                        "ratio": row.ratio,
                        "composite_bound": row.composite,
                    }));
                    csv.push_str(&format!(
                        "{:.16e},{:.16e},{:.16e}\n",
                        row.intrinsic, row.extrinsic, row.ratio
                    ));
                }
                if !rep.pass {
                    failures.push(format!(
                        "fibered bound failed: worst {} vs K (1 + eta) = {}",
                        rep.worst_ratio,
                        rep.k_bound * (1.0 + rep.eta)
                    ));
                }
                json!({
                    "worst_ratio": rep.worst_ratio,
                    "k_bound": rep.k_bound,
                    "eta": rep.eta,
                    "pass": rep.pass,
                    "estimator": "nested dyadic grid, full 3^d - 1 connectivity",
                })
            } else {
                let rep = bilipschitz_report(domain, &est, &pair_list)?;
                for row in &rep.rows {
                    residuals.push(json!({
                        "intrinsic": row.intrinsic,
                        "extrinsic": row.extrinsic,
                        "ratio": row.ratio,
                    }));
                    csv.push_str(&format!(
                        "{:.16e},{:.16e},{:.16e}\n",
                        row.intrinsic, row.extrinsic, row.ratio
                    ));
                }
                if !rep.pass {
                    failures.push(format!(
                        "bi-Lipschitz bound failed: worst {} vs {} (1 + eta = {})",
                        rep.worst_ratio,
                        rep.shape_bound,
                        1.0 + rep.eta
                    ));
                }
                json!({
                    "worst_ratio": rep.worst_ratio,
                    "shape_bound": rep.shape_bound,
                    "eta": rep.eta,
                    "unreachable_pairs": rep.unreachable,
                    "pass": rep.pass,
                    "estimator": "nested dyadic grid, full 3^d - 1 connectivity",
                    "caveat": "finite sampling verifies necessary instances of the definition only",
                })
            };
            let mut reference = serde_json::Value::Null;
            if *include_reference_pair {
                let x = vec![-1.0, -0.99];
                let y = vec![1.0, -0.99];
                let gd = intrinsic_distance(domain, &est, &x, &y)?;
                let e = eta(est.h, d, est.margin, gd.extrinsic_snapped);
                reference = json!({
                    "pair": [x, y],
                    "intrinsic": gd.value,
                    "extrinsic": gd.extrinsic_snapped,
                    "ratio": gd.value / gd.extrinsic_snapped,
                    "eta": e,
                });
                if !(2.79..=2.84).contains(&gd.value) {
                    failures.push(format!(
                        "reference cone pair out of window: {}",
                        gd.value
                    ));
                }
            }
            write_atomic(
                &out_dir.join(format!("{}.ratios.csv", cfg.out_prefix)),
                csv.as_bytes(),
            )?;
            json!({ "bounds": verdict, "reference_pair": reference })
        }
        Scenario::JacobianCheck { samples, fd_step, scale } => {
            let fm = FrameMetric::new(cfg.n);
            let mut rng = SplitMix64::new(cfg.seed);
            let tol = 1e-6 * cfg.tolerance_scale;
            tolerances = json!({ "fd_step": fd_step, "max_residual": tol });
            let mut max_res = 0.0f64;
            for i in 0..*samples {
                let p = random_parabolic(&mut rng, cfg.n, *scale);
                let check = right_jacobian_check(&fm, &p, *fd_step)?;
                if check.max_abs_diff > max_res {
                    max_res = check.max_abs_diff;
                }
                if i < 16 {
                    residuals.push(json!({ "sample": i, "residual": check.max_abs_diff }));
                }
            }
            if max_res >= tol {
                failures.push(format!("max Jacobian residual {max_res:.3e} >= {tol:.1e}"));
            }
            json!({
                "samples": samples,
                "max_residual": max_res,
                "identity": "frame Jacobian of right multiplication equals Ad(p^{-1})",
            })
        }
    };

    Ok(Report {
        schema: 1,
        scenario: cfg.scenario_name().to_string(),
        verdicts,
        residuals,
        pass: failures.is_empty(),
        failures,
        provenance: Provenance {
            tool: TOOL_VERSION.to_string(),
            seed: cfg.seed,
            n: cfg.n,
            tolerance_scale: cfg.tolerance_scale,
            schedule,
            tolerances,
        },
        wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Deterministic compact rotation mapping the basepoint to `q`.
fn rotation_to(n: usize, q: &SpherePoint) -> GroupElement {
    let o = basepoint(n);
    let mut h = vecn::sub(q.xi(), o.xi());
    let hn = vecn::norm(&h);
    if hn < 1e-12 {
        return GroupElement::identity(n);
    }
    for v in h.iter_mut() {
        *v /= hn;
    }
    let mut m = Mat::identity(n + 1);
    for i in 0..n + 1 {
        for j in 0..n + 1 {
            m[(i, j)] -= 2.0 * h[i] * h[j];
        }
    }
    compact_element(&m).expect("householder is orthogonal")
}

fn tail(
    frame: &GroupElement,
    dir: &mobius_core::group::AlgebraElement,
    len: usize,
) -> Vec<GroupElement> {
    (1..=len)
        .map(|k| {
            let eps = 0.5f64.powi(k as i32);
            frame.mul(
                &mobius_core::group::AlgebraElement::from_mat_unchecked(dir.mat().scale(eps))
                    .exp(),
            )
        })
        .collect()
}

/// Grid box and sampling box per domain fixture.
fn domain_box(domain: &Domain) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    match domain {
        Domain::LipschitzGraph { f, dim } => {
            let k = f.lipschitz_constant();
            let depth = k.max(0.2) * 1.2;
            let mut lo = vec![-1.5; *dim];
            let mut hi = vec![1.5; *dim];
            lo[dim - 1] = -depth;
            hi[dim - 1] = 1.5;
            let mut slo = vec![-1.2; *dim];
            let mut shi = vec![1.2; *dim];
            slo[dim - 1] = -depth * 0.8;
            shi[dim - 1] = 1.2;
            (lo, hi, slo, shi)
        }
        Domain::DeletedPoints { dim, .. } | Domain::DeletedSphere { dim, .. } => {
            (vec![0.0; *dim], vec![1.0; *dim], vec![0.05; *dim], vec![0.95; *dim])
        }
        Domain::Product { base, fiber_width, fiber_dim } => {
            let (mut lo, mut hi, mut slo, mut shi) = domain_box(base);
            for _ in 0..*fiber_dim {
                lo.push(0.0);
                hi.push(*fiber_width);
                slo.push(0.05 * fiber_width);
                shi.push(0.95 * fiber_width);
            }
            (lo, hi, slo, shi)
        }
    }
}

