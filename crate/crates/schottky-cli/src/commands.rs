//! The decide / recover / scan / selftest commands.

use crate::io::{
    complex_to_json, quadform_to_json, read_family_file, read_matrix_file, ParsedFamily,
    ParsedMatrix,
};
use crate::{Config, Mode};
use anyhow::{anyhow, bail, Result};
use schottky::exact::{rational_to_string, QuadForm, Rational};
use schottky::graphs::catalog;
use schottky::polytope::face_lattice_fvector;
use schottky::schottky_trop::{
    decide_tropical, recover_tropical, verify_azygetic_lemma, TropSchottkyError, Verdict,
};
use schottky::theta_classical::{
    canonical_curve, decide_classical, schottky_igusa, tritangent_planes, Classification,
    RiemannMatrix,
};
use schottky::tropical::voronoi_polytope;
use serde_json::json;
use std::path::{Path, PathBuf};

pub const REPORT_SCHEMA: &str = "schottky-report/1";

/// Exit status used by every subcommand: 0 = Jacobian / success,
/// 1 = not a Jacobian, 2 = undecided or error.
pub type Exit = i32;

fn report_envelope(cfg: &Config, command: &str, input: &Path, result: serde_json::Value) -> serde_json::Value {
    let bytes = std::fs::read(input).unwrap_or_default();
    let hash = {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(&bytes);
        hex::encode(h.finalize())
    };
    json!({
        "schema": REPORT_SCHEMA,
        "command": command,
        "mode": cfg.mode_str(),
        "library_version": env!("CARGO_PKG_VERSION"),
        "input": {"path": input.display().to_string(), "sha256": hash},
        "config": {
            "eps": cfg.eps,
            "threshold": cfg.threshold,
            "seed": cfg.seed,
            "slow": cfg.slow,
            "format": cfg.format,
        },
        "result": result,
    })
}

fn emit(cfg: &Config, name: &str, report: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, format!("{text}\n"))?;
            println!("{}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// decide
// ---------------------------------------------------------------------------

pub fn cmd_decide(cfg: &Config, input: &Path) -> Result<Exit> {
    match (read_matrix_file(input)?, cfg.mode) {
        (ParsedMatrix::Rational(q), Mode::Tropical) => {
            let decision = decide_tropical(&q).map_err(|e| anyhow!("{e}"))?;
            let [f0, f1, f2, f3] = decision.f_vector.0;
            let entry = decision.matched_entry.map(|i| {
                let e = &catalog()[i - 1];
                json!({"index": e.index, "name": e.name})
            });
            let cert = decision.vartheta_certificate.as_ref().map(|(l, v)| {
                json!({
                    "label": l,
                    "value": rational_to_string(v),
                    "half_value": rational_to_string(&(v / Rational::from_integer(2.into()))),
                })
            });
            let verdict = match decision.verdict {
                Verdict::Jacobian => "jacobian",
                Verdict::NotJacobian => "not_jacobian",
            };
            let result = json!({
                "verdict": verdict,
                "f_vector": [f0, f1, f2, f3],
                "matched_entry": entry,
                "vartheta_certificate": cert,
                "consistent": decision.consistent(),
            });
            emit(cfg, "decide_report.json", &report_envelope(cfg, "decide", input, result))?;
            Ok(match decision.verdict {
                Verdict::Jacobian => 0,
                Verdict::NotJacobian => 1,
            })
        }
        (ParsedMatrix::Complex(rm), Mode::Classical) => {
            let (class, rel) = decide_classical(&rm, cfg.eps, cfg.threshold);
            let form = schottky_igusa(&rm, cfg.eps);
            let verdict = match class {
                Classification::Jacobian => "jacobian",
                Classification::NotJacobian => "not_jacobian",
                Classification::Undecided => "undecided",
            };
            let result = json!({
                "verdict": verdict,
                "relative_magnitude": rel,
                "sum_of_squares": complex_to_json(&form.sum_squares),
                "sum_of_cross_terms": complex_to_json(&form.sum_cross),
                "log_scale": form.scale_log,
            });
            emit(cfg, "decide_report.json", &report_envelope(cfg, "decide", input, result))?;
            Ok(match class {
                Classification::Jacobian => 0,
                Classification::NotJacobian => 1,
                Classification::Undecided => 2,
            })
        }
        (ParsedMatrix::Rational(_), Mode::Classical) => {
            bail!("--classical expects a complex matrix file")
        }
        (ParsedMatrix::Complex(_), Mode::Tropical) => {
            bail!("--tropical expects a rational matrix file")
        }
    }
}

// ---------------------------------------------------------------------------
// recover
// ---------------------------------------------------------------------------

pub fn cmd_recover(cfg: &Config, input: &Path, want_basis: bool) -> Result<Exit> {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "input".into());
    let out_dir: PathBuf = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    match (read_matrix_file(input)?, cfg.mode) {
        (ParsedMatrix::Rational(q), Mode::Tropical) => {
            let rec = match recover_tropical(&q, want_basis) {
                Ok(r) => r,
                Err(TropSchottkyError::NotAJacobian { reason }) => {
                    eprintln!("recovery precondition failed: {reason}");
                    return Ok(2);
                }
                Err(e) => return Err(anyhow!("{e}")),
            };
            let graph_json = out_dir.join(format!("{stem}_graph.json"));
            std::fs::write(
                &graph_json,
                format!("{}\n", serde_json::to_string_pretty(&rec.graph.to_json())?),
            )?;
            let dot_path = out_dir.join(format!("{stem}_graph.dot"));
            std::fs::write(&dot_path, rec.graph.to_dot(rec.entry_name))?;
            let witness = rec.basis_witness.as_ref().map(|x| {
                x.iter()
                    .map(|row| row.iter().map(|v| v.to_string()).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            });
            let result = json!({
                "entry": {"index": rec.entry_index, "name": rec.entry_name},
                "lengths": rec.lengths.iter().map(rational_to_string).collect::<Vec<_>>(),
                "edge_labels": rec.edge_labels,
                "basis_witness": witness,
                "reconstructed_matrix": quadform_to_json(&q),
                "files": [graph_json.display().to_string(), dot_path.display().to_string()],
            });
            emit(cfg, "recover_report.json", &report_envelope(cfg, "recover", input, result))?;
            Ok(0)
        }
        (ParsedMatrix::Complex(rm), Mode::Classical) => {
            let (class, rel) = decide_classical(&rm, cfg.eps, cfg.threshold);
            if class == Classification::NotJacobian {
                eprintln!(
                    "recovery precondition failed: Schottky-Igusa form does not vanish \
                     (relative magnitude {rel:.3e})"
                );
                return Ok(2);
            }
            let curve = match canonical_curve(&rm, cfg.seed, 50, cfg.eps) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("recovery failed: {e}");
                    return Ok(2);
                }
            };
            let f2: serde_json::Map<String, serde_json::Value> = curve
                .f2_monomials()
                .into_iter()
                .map(|(k, v)| (k, complex_to_json(&v)))
                .collect();
            let f3: serde_json::Map<String, serde_json::Value> = curve
                .f3_monomials()
                .into_iter()
                .map(|(k, v)| (k, complex_to_json(&v)))
                .collect();
            let curve_json = json!({
                "schema": "schottky-curve/1",
                "f2": f2,
                "f3": f3,
                "singular_point": curve.singular_point.z.iter().map(complex_to_json).collect::<Vec<_>>(),
                "residuals": {"theta_abs": curve.residuals.0, "grad_norm": curve.residuals.1},
                "restarts_used": curve.singular_point.restarts_used,
            });
            let curve_path = out_dir.join(format!("{stem}_curve.json"));
            std::fs::write(&curve_path, format!("{}\n", serde_json::to_string_pretty(&curve_json)?))?;
            let planes = tritangent_planes(&rm, cfg.eps);
            let tri_json = json!({
                "schema": "schottky-tritangents/1",
                "planes": planes.iter().map(|(m, coeffs)| json!({
                    "characteristic": m.label(),
                    "coefficients": coeffs.iter().map(complex_to_json).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            });
            let tri_path = out_dir.join(format!("{stem}_tritangents.json"));
            std::fs::write(&tri_path, format!("{}\n", serde_json::to_string_pretty(&tri_json)?))?;
            let result = json!({
                "classification_relative_magnitude": rel,
                "residuals": {"theta_abs": curve.residuals.0, "grad_norm": curve.residuals.1},
                "files": [curve_path.display().to_string(), tri_path.display().to_string()],
            });
            emit(cfg, "recover_report.json", &report_envelope(cfg, "recover", input, result))?;
            Ok(0)
        }
        (ParsedMatrix::Rational(_), Mode::Classical) => {
            bail!("--classical expects a complex matrix file")
        }
        (ParsedMatrix::Complex(_), Mode::Tropical) => {
            bail!("--tropical expects a rational matrix file")
        }
    }
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

fn thread_cap() -> usize {
    std::env::var("SCHOTTKY_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Significant-digit formatting used in scan CSV rows.
fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn cmd_scan(cfg: &Config, input: &Path) -> Result<Exit> {
    let family = read_family_file(input)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_cap()).build()?;
    let bytes = std::fs::read(input).unwrap_or_default();
    let hash = {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(&bytes);
        hex::encode(h.finalize())
    };
    let mut lines: Vec<String> = vec![
        format!("# schema: schottky-scan/1"),
        format!("# library_version: {}", env!("CARGO_PKG_VERSION")),
        format!("# input: {} sha256:{}", input.display(), hash),
        format!(
            "# config: mode={} eps={} threshold={} seed={}",
            cfg.mode_str(),
            cfg.eps,
            cfg.threshold,
            cfg.seed
        ),
    ];
    match family {
        ParsedFamily::Rational { base, s_term, t_term, s_points, t_points } => {
            if cfg.mode != Mode::Tropical {
                bail!("rational families scan tropically; pass --tropical");
            }
            lines.push("s,t,status,f0,f1,f2,f3,entry".into());
            let mut grid: Vec<(usize, Rational, Rational)> = Vec::new();
            for (ti, t) in t_points.iter().enumerate() {
                for (si, s) in s_points.iter().enumerate() {
                    grid.push((ti * s_points.len() + si, s.clone(), t.clone()));
                }
            }
            use rayon::prelude::*;
            let mut rows: Vec<(usize, String)> = pool.install(|| {
                grid.par_iter()
                    .map(|(idx, s, t)| {
                        let g = base.len();
                        let entries: Vec<Vec<Rational>> = (0..g)
                            .map(|i| {
                                (0..g)
                                    .map(|j| {
                                        let mut e = base[i][j].clone() + s * &s_term[i][j];
                                        if let Some(tt) = &t_term {
                                            e += t * &tt[i][j];
                                        }
                                        e
                                    })
                                    .collect()
                            })
                            .collect();
                        let sf = rational_to_string(s);
                        let tf = rational_to_string(t);
                        let row = match QuadForm::new(entries) {
                            Err(_) => format!("{sf},{tf},not_positive_definite,,,,,"),
                            Ok(q) => match decide_tropical(&q) {
                                Ok(d) => {
                                    let [f0, f1, f2, f3] = d.f_vector.0;
                                    let verdict = match d.verdict {
                                        Verdict::Jacobian => "jacobian",
                                        Verdict::NotJacobian => "not_jacobian",
                                    };
                                    let entry = d
                                        .matched_entry
                                        .map(|i| i.to_string())
                                        .unwrap_or_default();
                                    format!("{sf},{tf},{verdict},{f0},{f1},{f2},{f3},{entry}")
                                }
                                Err(e) => format!("{sf},{tf},error:{e},,,,,"),
                            },
                        };
                        (*idx, row)
                    })
                    .collect()
            });
            rows.sort_by_key(|(i, _)| *i);
            lines.extend(rows.into_iter().map(|(_, r)| r));
        }
        ParsedFamily::Complex { base, s_term, t_term, s_points, t_points } => {
            if cfg.mode != Mode::Classical {
                bail!("complex families scan classically; pass --classical");
            }
            lines.push("s,t,status,relative_magnitude".into());
            let mut grid: Vec<(usize, f64, f64)> = Vec::new();
            for (ti, &t) in t_points.iter().enumerate() {
                for (si, &s) in s_points.iter().enumerate() {
                    grid.push((ti * s_points.len() + si, s, t));
                }
            }
            use rayon::prelude::*;
            let eps = cfg.eps;
            let threshold = cfg.threshold;
            let mut rows: Vec<(usize, String)> = pool.install(|| {
                grid.par_iter()
                    .map(|(idx, s, t)| {
                        let entries: [[num_complex::Complex64; 4]; 4] =
                            std::array::from_fn(|i| {
                                std::array::from_fn(|j| {
                                    let mut e = base[i][j];
                                    e.re += s * s_term[i][j];
                                    if let Some(tt) = &t_term {
                                        e.re += t * tt[i][j];
                                    }
                                    e
                                })
                            });
                        let row = match RiemannMatrix::new(entries) {
                            Err(_) => format!("{},{},not_positive_definite,", fmt12(*s), fmt12(*t)),
                            Ok(rm) => {
                                let (class, rel) = decide_classical(&rm, eps, threshold);
                                let verdict = match class {
                                    Classification::Jacobian => "jacobian",
                                    Classification::NotJacobian => "not_jacobian",
                                    Classification::Undecided => "undecided",
                                };
                                format!("{},{},{verdict},{}", fmt12(*s), fmt12(*t), fmt12(rel))
                            }
                        };
                        (*idx, row)
                    })
                    .collect()
            });
            rows.sort_by_key(|(i, _)| *i);
            lines.extend(rows.into_iter().map(|(_, r)| r));
        }
    }
    let text = lines.join("\n") + "\n";
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join("scan.csv");
            std::fs::write(&path, text)?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

pub fn cmd_selftest(cfg: &Config) -> Result<Exit> {
    println!(
        "# schottky selftest, library_version={}, slow={}",
        env!("CARGO_PKG_VERSION"),
        cfg.slow
    );
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{} {name}{}", if ok { "PASS" } else { "FAIL" }, if detail.is_empty() {
            String::new()
        } else {
            format!(" ({detail})")
        });
        if !ok {
            failures += 1;
        }
    };

    // catalog reproduction: exact f-vectors of all 16 representatives
    for entry in catalog() {
        let ok = voronoi_polytope(&entry.q_rep)
            .and_then(|p| face_lattice_fvector(&p))
            .map(|fv| fv == entry.f_vector)
            .unwrap_or(false);
        check(
            &format!("table1_entry_{:02}_{}", entry.index, entry.name.replace(' ', "_")),
            ok,
            format!("expect {}", entry.f_vector),
        );
    }

    // decision examples
    let q33 = QuadForm::from_int_rows(&[
        vec![14, -9, 11, 0],
        vec![-9, 11, -2, 1],
        vec![11, -2, 21, 11],
        vec![0, 1, 11, 14],
    ])
    .expect("static");
    let d33 = decide_tropical(&q33);
    check(
        "decision_non_jacobian_example",
        matches!(&d33, Ok(d) if d.verdict == Verdict::NotJacobian
            && d.f_vector.0 == [62, 142, 104, 24]),
        String::new(),
    );
    let q36 = QuadForm::from_int_rows(&[
        vec![17, 5, 3, 5],
        vec![5, 19, 7, 11],
        vec![3, 7, 23, 16],
        vec![5, 11, 16, 29],
    ])
    .expect("static");
    let r36 = recover_tropical(&q36, true);
    check(
        "recovery_prism_example",
        matches!(&r36, Ok(r) if r.entry_index == 1 && r.basis_witness.is_some()),
        String::new(),
    );

    if cfg.slow {
        let report = verify_azygetic_lemma(None, None);
        check(
            "azygetic_lemma_exhaustive",
            report.complete() && report.counterexample_free(),
            format!(
                "{} subgroups, {} triples",
                report.subgroups_processed, report.triples_checked
            ),
        );
    } else {
        let report = verify_azygetic_lemma(Some(5000), None);
        check(
            "azygetic_lemma_sample",
            report.counterexample_free(),
            format!("{} subgroups (pass --slow for the full sweep)", report.subgroups_processed),
        );
    }

    println!(
        "# selftest {}: {} failure(s)",
        if failures == 0 { "ok" } else { "FAILED" },
        failures
    );
    Ok(if failures == 0 { 0 } else { 2 })
}
