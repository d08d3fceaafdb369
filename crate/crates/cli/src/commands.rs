use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use noise_id::consensus::{
    binary_stats, empirical_joint, err_metric, estimate_with, exact_joint, exact_joint_models,
    mixing_bound, witness_p2, ErrMode, EstimateOptions, EstimateSummary, WITNESS_MATCH_TOL,
};
use noise_id::features::{
    estimate_features_joint, estimate_from_features, sample_with_features,
    sampling_residual_threshold, stack_observations, FeatureEstimate,
};
use noise_id::identifiability::{
    check_generic, check_group_features, check_instance_three_labels, check_kruskal_sum,
    check_unknown_groups, is_informative_feature, ObservationModel,
};
use noise_id::matrices::align_permutation;
use noise_id::noisegen::{
    check_2nn, sample_instance_dataset, sample_iid_noisy, unstructured_process, InstanceNoise,
    UnstructuredParams,
};
use noise_id::{IdentifiabilityReport, NoisyDataset, TransitionMatrix};
use serde_json::{json, Value};

use crate::failure::Failure;
use crate::scenario::{read_json, read_matrix, NoiseModel, ScenarioFile};

/// What a command prints: a text form and a structured form.
pub struct Report {
    pub text: String,
    pub json: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CheckMode {
    Instance3,
    Kruskal,
    Group,
    UnknownGroups,
    Generic,
}

fn matrix_text(rows: &[Vec<f64>]) -> String {
    rows.iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.6}")).collect();
            format!("  [{}]\n", cells.join(", "))
        })
        .collect()
}

fn identifiability(r: IdentifiabilityReport) -> Result<Report, Failure> {
    Ok(Report {
        text: format!("{r}\n"),
        json: serde_json::to_value(&r).map_err(|e| Failure::internal(e.to_string()))?,
    })
}

fn require_features(s: &ScenarioFile, seed: u64) -> Result<noise_id::FeatureModel, Failure> {
    s.feature_model(seed)?
        .ok_or_else(|| Failure::validation("this mode needs a features block"))
}

pub fn check(path: &Path, mode: CheckMode, seed: Option<u64>) -> Result<Report, Failure> {
    let s = ScenarioFile::load(path)?;
    let seed = s.seed_or(seed);
    let report = match mode {
        CheckMode::Instance3 => check_instance_three_labels(&s.transition()?),
        CheckMode::Kruskal => {
            let t = s.transition()?;
            match s.feature_model(seed)? {
                Some(fm) => {
                    let mut obs = ObservationModel::repeated(&t, s.p);
                    for m in stack_observations(None, &fm)?.models() {
                        obs.push(m.clone())?;
                    }
                    check_kruskal_sum(&obs)?
                }
                None => check_kruskal_sum(&ObservationModel::repeated(&t, s.p))?,
            }
        }
        CheckMode::Group => {
            if s.groups.is_some() {
                return Err(Failure::validation("group mode expects known groups; use unknown-groups"));
            }
            let fm = require_features(&s, seed)?;
            check_group_features(&s.transition()?, &ObservationModel::new(fm.models)?)?
        }
        CheckMode::UnknownGroups => {
            let g = s
                .groups
                .as_ref()
                .ok_or_else(|| Failure::validation("unknown-groups mode needs a groups block"))?;
            let fm = require_features(&s, seed)?;
            let d_star = fm.models.iter().filter(|m| is_informative_feature(m)).count();
            check_unknown_groups(g.count, s.k, d_star)?
        }
        CheckMode::Generic => {
            let f = s
                .features
                .as_ref()
                .ok_or_else(|| Failure::validation("generic mode needs a features block"))?;
            check_generic(s.k, &f.cardinalities)?
        }
    };
    identifiability(report)
}

fn rows_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    out.with_file_name(format!("{stem}.rows.csv"))
}

fn write_rows(path: &Path, clean: &[usize], noise: &InstanceNoise) -> Result<(), Failure> {
    let mut f = BufWriter::new(File::create(path)?);
    let k = noise.rows.first().map_or(0, |r| r.len());
    let cols: Vec<String> = (1..=k).map(|j| format!("p_{j}")).collect();
    writeln!(f, "n,y,q,{}", cols.join(","))?;
    for (n, ((row, q), y)) in noise.rows.iter().zip(&noise.flip_rates).zip(clean).enumerate() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(f, "{},{},{q},{}", n + 1, y + 1, cells.join(","))?;
    }
    f.flush()?;
    Ok(())
}

pub fn generate(path: &Path, out: &Path, emit_rows: bool, seed: Option<u64>) -> Result<Report, Failure> {
    let s = ScenarioFile::load(path)?;
    let seed = s.seed_or(seed);
    let mut rows_file = None;
    let ds = match (&s.noise_model, s.feature_model(seed)?) {
        (NoiseModel::Instance { eps, s: width }, None) => {
            let (ds, noise) = sample_instance_dataset(&s.prior()?, *eps, *width, s.p, s.n, seed)?;
            if emit_rows {
                let rp = rows_path(out);
                let clean: Vec<usize> = ds.records.iter().map(|r| r.y).collect();
                write_rows(&rp, &clean, &noise)?;
                rows_file = Some(rp);
            }
            ds
        }
        (NoiseModel::Instance { .. }, Some(_)) => {
            return Err(Failure::validation("features are not supported with instance noise"))
        }
        (_, _) if emit_rows => {
            return Err(Failure::validation("--emit-rows applies to the instance noise model only"))
        }
        (_, Some(fm)) => {
            let t = s.transition()?;
            sample_with_features(&s.hidden_prior()?, Some(&t), &fm, s.p, s.n, seed)?
        }
        (_, None) => sample_iid_noisy(&s.prior()?, &s.transition()?, s.p, s.n, seed)?,
    };
    let side = ds.save(out)?;
    let mut text = format!(
        "wrote {} records with {} noisy labels to {}\nprovenance: {}\n",
        ds.len(),
        ds.p,
        out.display(),
        side.display()
    );
    if let Some(rp) = &rows_file {
        let _ = writeln!(text, "instance rows: {}", rp.display());
    }
    Ok(Report {
        text,
        json: json!({
            "records": ds.len(),
            "p": ds.p,
            "K": ds.k,
            "dataset": out.display().to_string(),
            "provenance": side.display().to_string(),
            "rows": rows_file.map(|p| p.display().to_string()),
            "seed": seed,
        }),
    })
}

pub struct EstimateArgs<'a> {
    pub input: &'a Path,
    pub exact: bool,
    pub restarts: usize,
    pub truth: Option<&'a Path>,
    pub from_features: bool,
    pub k: Option<usize>,
    pub seed: Option<u64>,
}

fn feature_report(est: &FeatureEstimate, truth: Option<&TransitionMatrix>) -> Result<Report, Failure> {
    let mut text = format!("prior: {:?}\nT:\n{}", est.scenario.prior.to_vec(), matrix_text(&est.scenario.t.to_rows()));
    for (i, m) in est.feature_models.iter().enumerate() {
        let _ = write!(text, "M_{}:\n{}", i + 1, matrix_text(&m.to_rows()));
    }
    let _ = writeln!(text, "residual: {:.3e}", est.residual);
    let _ = writeln!(text, "best restart: #{}", est.best_restart);
    for w in &est.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    let mut json = json!({
        "prior": est.scenario.prior.to_vec(),
        "T": est.scenario.t.to_rows(),
        "feature_models": est.feature_models.iter().map(|m| m.to_rows()).collect::<Vec<_>>(),
        "residual": est.residual,
        "permutation": est.permutation,
        "best_restart": est.best_restart,
        "restarts": est.restarts,
        "warnings": est.warnings,
    });
    if let Some(truth) = truth {
        let aligned = align_permutation(&est.scenario.t, truth)?;
        let err = err_metric(&aligned.aligned, truth, ErrMode::AsIs)?;
        let _ = writeln!(text, "err: {err:.6}");
        json["err"] = json!(err);
        json["aligned_T"] = json!(aligned.aligned.to_rows());
    }
    Ok(Report { text, json })
}

pub fn estimate(args: &EstimateArgs) -> Result<Report, Failure> {
    if !args.input.exists() {
        return Err(Failure::validation(format!("{}: no such file", args.input.display())));
    }
    let mut truth = match args.truth {
        Some(p) => Some(read_matrix(p)?),
        None => None,
    };
    if args.exact {
        let s = ScenarioFile::load(args.input)?;
        let seed = s.seed_or(args.seed);
        let t = s.transition()?;
        truth.get_or_insert_with(|| t.clone());
        if args.from_features {
            if s.groups.is_some() {
                return Err(Failure::validation("feature recovery over unknown groups is not supported"));
            }
            let fm = require_features(&s, seed)?;
            if fm.models.len() < 2 {
                return Err(Failure {
                    code: crate::failure::EXIT_CAPABILITY,
                    message: "feature recovery needs at least two features plus one noisy label".into(),
                });
            }
            let joint = exact_joint_models(&s.prior()?, &[&fm.models[0], &fm.models[1], t.as_obs()])?;
            let est = estimate_features_joint(&joint, s.k, &EstimateOptions::with_restarts(args.restarts), seed)?;
            return feature_report(&est, truth.as_ref());
        }
        let joint = exact_joint(&s.scenario()?, s.p)?;
        let est = estimate_with(&joint, &EstimateOptions::with_restarts(args.restarts), seed)?;
        return estimate_report(est, truth.as_ref());
    }
    let seed = args.seed.unwrap_or(0);
    let ds = NoisyDataset::load(args.input)?;
    if args.from_features {
        let k = args.k.unwrap_or(ds.k);
        let est = estimate_from_features(&ds, k, args.restarts, seed)?;
        return feature_report(&est, truth.as_ref());
    }
    if ds.p < 3 {
        return Err(Failure {
            code: crate::failure::EXIT_CAPABILITY,
            message: format!(
                "recovery needs at least three noisy labels per record, dataset has {}; two labels do not determine T",
                ds.p
            ),
        });
    }
    let joint = empirical_joint(&ds)?;
    let mut options = EstimateOptions::with_restarts(args.restarts);
    options.residual_threshold = sampling_residual_threshold(ds.len());
    let est = estimate_with(&joint, &options, seed)?;
    estimate_report(est, truth.as_ref())
}

fn estimate_report(mut est: noise_id::Estimate, truth: Option<&TransitionMatrix>) -> Result<Report, Failure> {
    let mut err = None;
    if let Some(t) = truth {
        est.align_to(t)?;
        err = Some(err_metric(&est.scenario.t, t, ErrMode::AsIs)?);
    }
    let mut text = est.to_string();
    let mut json = serde_json::to_value(EstimateSummary::from(&est))
        .map_err(|e| Failure::internal(e.to_string()))?;
    if let Some(e) = err {
        let _ = writeln!(text, "err: {e:.6}");
        json["err"] = json!(e);
    }
    Ok(Report { text, json })
}

pub fn witness(gamma: f64, e_plus: f64, e_minus: f64, seed: u64) -> Result<Report, Failure> {
    let w = witness_p2(gamma, e_plus, e_minus, seed)?;
    let recheck = binary_stats(w.witness.gamma, w.witness.e_plus, w.witness.e_minus)
        .max_abs_diff(&binary_stats(gamma, e_plus, e_minus));
    if recheck > WITNESS_MATCH_TOL {
        return Err(Failure::internal(format!(
            "witness failed re-verification: statistics differ by {recheck:e}"
        )));
    }
    let text = format!(
        "input:   gamma={:.10} e_plus={:.10} e_minus={:.10}\n\
         witness: gamma={:.10} e_plus={:.10} e_minus={:.10}\n\
         input stats:   posterior={:.12} pos_consensus={:.12} neg_consensus={:.12}\n\
         witness stats: posterior={:.12} pos_consensus={:.12} neg_consensus={:.12}\n\
         statistic residual: {:.3e}\nparameter distance: {:.6}\n",
        w.input.gamma,
        w.input.e_plus,
        w.input.e_minus,
        w.witness.gamma,
        w.witness.e_plus,
        w.witness.e_minus,
        w.input_stats.posterior,
        w.input_stats.pos_consensus,
        w.input_stats.neg_consensus,
        w.witness_stats.posterior,
        w.witness_stats.pos_consensus,
        w.witness_stats.neg_consensus,
        recheck,
        w.distance,
    );
    Ok(Report {
        text,
        json: serde_json::to_value(&w).map_err(|e| Failure::internal(e.to_string()))?,
    })
}

pub fn simulate_2nn(path: &Path, trials: usize, seed: u64) -> Result<Report, Failure> {
    let params: UnstructuredParams = read_json(path)?;
    params.validate()?;
    if trials == 0 {
        return Err(Failure::validation("--trials must be at least 1"));
    }
    let mut fractions = Vec::with_capacity(trials);
    let mut thresholds = Vec::with_capacity(trials);
    let mut empty = 0;
    for i in 0..trials {
        let td = unstructured_process(&params, seed.wrapping_add(i as u64))?;
        let c = check_2nn(&td);
        if c.triplets == 0 {
            empty += 1;
        }
        fractions.push(c.fraction);
        thresholds.push(td.threshold);
    }
    let full = fractions.iter().filter(|&&f| f == 1.0).count();
    let mean = fractions.iter().sum::<f64>() / trials as f64;
    let min = fractions.iter().copied().fold(1.0, f64::min);
    // The threshold depends on the drawn q; report the largest one seen.
    let threshold = thresholds.iter().copied().fold(0.0, f64::max);
    let clears = params.n as f64 > threshold;
    let mut warnings = Vec::new();
    if !clears {
        warnings.push(format!(
            "N = {} does not exceed the threshold 4*sum(q)/min(q) = {threshold}",
            params.n
        ));
    }
    if empty > 0 {
        warnings.push(format!("{empty} trial(s) formed no triplets; counted as satisfied"));
    }
    let mut text = format!(
        "N: {}\nthreshold: {threshold}\nclears threshold: {clears}\ntrials: {trials}\n\
         trials fully satisfying 2-NN: {full}\nmean satisfaction: {mean:.6}\nmin satisfaction: {min:.6}\n",
        params.n
    );
    for w in &warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    Ok(Report {
        text,
        json: json!({
            "N": params.n,
            "threshold": threshold,
            "clears_threshold": clears,
            "trials": trials,
            "fully_satisfied_trials": full,
            "mean_fraction": mean,
            "min_fraction": min,
            "fractions": fractions,
            "warnings": warnings,
        }),
    })
}

pub fn bound(t1: &Path, t2: &Path, t_star: &Path) -> Result<Report, Failure> {
    let (a, b, c) = (read_matrix(t1)?, read_matrix(t2)?, read_matrix(t_star)?);
    let m = mixing_bound(&a, &b, &c)?;
    Ok(Report {
        text: format!("lhs: {:.12}\nrhs: {:.12}\nholds: {}\n", m.lhs, m.rhs, m.holds),
        json: serde_json::to_value(m).map_err(|e| Failure::internal(e.to_string()))?,
    })
}
