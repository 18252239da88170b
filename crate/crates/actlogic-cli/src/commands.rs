//! The five subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use actlogic::constraints::{Constraint, ConstraintSet, LabelId};
use actlogic::data::{load_libsvm_multiclass, load_sparse_labels, save_sparse_labels, Dataset};
use actlogic::data::SplitSpec;
use actlogic::experiment::{emit_metrics, run_experiment, ExperimentConfig, RunResult};
use actlogic::oracle::{exact_information_gain, JointDistribution};
use actlogic::scoring::ScoringMethod;
use actlogic::synth::{nell13_dataset, segment_like_dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::manifest::{self, Resolved};
use crate::{
    charts, CliError, CliResult, CompareArgs, DataArgs, Format, KnobArgs, OracleCheckArgs,
    RunArgs, SynthArgs, SynthProfile, ValidateArgs,
};

fn require_exists(path: &Path, what: &str) -> CliResult {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} `{}` does not exist", path.display())))
    }
}

fn load_constraints(path: &Path) -> Result<ConstraintSet, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("constraints {}: {e}", path.display())))?;
    ConstraintSet::from_json_str(&text)
        .map_err(|e| CliError::Config(format!("constraints {}: {e}", path.display())))
}

/// Loads the dataset named by the resolved paths; content problems (parse
/// errors, constraint violations) are runtime failures, missing files and
/// missing flags are configuration errors.
fn load_dataset(
    dataset: &Path,
    format: Format,
    labels: Option<&Path>,
    cs: &ConstraintSet,
) -> Result<Dataset, CliError> {
    require_exists(dataset, "dataset")?;
    let d = match format {
        Format::Libsvm => {
            load_libsvm_multiclass(dataset).map_err(|e| CliError::Runtime(e.to_string()))?
        }
        Format::Sparse => {
            let labels = labels.ok_or_else(|| {
                CliError::Config("the sparse format needs --labels <file>".into())
            })?;
            require_exists(labels, "labels")?;
            load_sparse_labels(dataset, labels, cs)
                .map_err(|e| CliError::Runtime(e.to_string()))?
        }
    };
    if format == Format::Libsvm {
        d.validate_against(cs).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(d)
}

fn parse_method(name: &str) -> Result<ScoringMethod, CliError> {
    ScoringMethod::from_name(name).map_err(|e| CliError::Config(e.to_string()))
}

/// Default training split when none is given: one fifth of the dataset.
fn resolve_train_count(requested: Option<usize>, n: usize) -> usize {
    requested.unwrap_or_else(|| (n / 5).max(1))
}

fn experiment_config(r: &Resolved, method: ScoringMethod, train_count: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(method, SplitSpec { train_count, seed: r.seed });
    cfg.per_iteration = r.per_iteration;
    cfg.max_iterations = r.max_iterations;
    cfg.target_auc = r.target_auc;
    cfg.train_cfg = r.train;
    cfg.seed = r.seed;
    cfg
}

fn describe_outcome(name: &str, result: &RunResult) -> String {
    let final_auc = result.iterations.last().map_or(f64::NAN, |it| it.average_auc);
    match result.iterations_to_target {
        Some(n) => format!("{name}: reached target at iteration {n} (AUC {final_auc:.4})"),
        None => format!(
            "{name}: target not reached in {} iterations (AUC {final_auc:.4})",
            result.iterations.len()
        ),
    }
}

pub fn cmd_run(args: RunArgs) -> CliResult {
    let baseline = match &args.manifest {
        Some(path) if path.exists() => manifest::read(path)?,
        _ => manifest::Manifest::default(),
    };
    let resolved = manifest::resolve(args.data, args.knobs, baseline)?;
    require_exists(&resolved.constraints, "constraints")?;
    let method = parse_method(&resolved.method)?;
    let cs = load_constraints(&resolved.constraints)?;
    let d = load_dataset(&resolved.dataset, resolved.format, resolved.labels.as_deref(), &cs)?;

    let train_count = resolve_train_count(resolved.train_count, d.len());
    let cfg = experiment_config(&resolved, method, train_count);
    let result = run_experiment(&d, &cs, &cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    emit_metrics(&result, &args.out).map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(path) = &args.manifest {
        manifest::write(path, &resolved, train_count)?;
    }

    println!(
        "dataset: {} instances, {} labels, {} features ({} train)",
        d.len(),
        d.label_count(),
        d.feature_dim(),
        train_count
    );
    println!("{}", describe_outcome(&resolved.method, &result));
    println!("metrics: {}", args.out.display());
    if let Some(path) = &args.manifest {
        println!("manifest: {}", path.display());
    }
    Ok(())
}

fn sibling_with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

pub fn cmd_compare(args: CompareArgs) -> CliResult {
    if args.methods.len() < 2 {
        return Err(CliError::Config(
            "compare needs at least two --method flags".into(),
        ));
    }
    for (i, name) in args.methods.iter().enumerate() {
        if args.methods[..i].contains(name) {
            return Err(CliError::Config(format!("method `{name}` given twice")));
        }
    }
    let methods: Vec<(String, ScoringMethod)> = args
        .methods
        .iter()
        .map(|name| parse_method(name).map(|m| (name.clone(), m)))
        .collect::<Result<_, _>>()?;

    let knobs = KnobArgs {
        method: None,
        per_iter: args.per_iter,
        max_iters: args.max_iters,
        target_auc: args.target_auc,
        train_count: args.train_count,
        seed: args.seed,
    };
    let data = DataArgs {
        dataset: args.data.dataset,
        format: args.data.format,
        labels: args.data.labels,
        constraints: args.data.constraints,
    };
    // Reuse the run resolution with a placeholder method; each real method
    // then runs under the identical seed and split.
    let knobs = KnobArgs { method: Some(methods[0].0.clone()), ..knobs };
    let resolved = manifest::resolve(data, knobs, manifest::Manifest::default())?;
    require_exists(&resolved.constraints, "constraints")?;
    let cs = load_constraints(&resolved.constraints)?;
    let d = load_dataset(&resolved.dataset, resolved.format, resolved.labels.as_deref(), &cs)?;
    let train_count = resolve_train_count(resolved.train_count, d.len());

    let mut combined = String::from("method,iteration,average_auc,labels_requested,labels_fixed,wall_ms\n");
    let mut trailers = String::new();
    let mut auc_series = Vec::new();
    let mut bars = Vec::new();
    for (name, method) in &methods {
        let cfg = experiment_config(&resolved, *method, train_count);
        let result =
            run_experiment(&d, &cs, &cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
        for it in &result.iterations {
            combined.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                it.iteration, it.average_auc, it.labels_requested, it.labels_fixed, it.wall_ms
            ));
        }
        match result.iterations_to_target {
            Some(n) => trailers.push_str(&format!("# iterations_to_target[{name}]={n}\n")),
            None => trailers.push_str(&format!("# iterations_to_target[{name}]=NA\n")),
        }
        println!("{}", describe_outcome(name, &result));
        auc_series
            .push((name.clone(), result.iterations.iter().map(|it| it.average_auc).collect()));
        bars.push((name.clone(), result.iterations_to_target));
    }
    combined.push_str(&trailers);

    let write = |path: &Path, text: &str| {
        fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    };
    write(&args.out, &combined)?;
    let auc_svg = sibling_with_suffix(&args.out, "_auc.svg");
    let iters_svg = sibling_with_suffix(&args.out, "_iters.svg");
    write(&auc_svg, &charts::auc_line_chart(&auc_series, resolved.target_auc))?;
    write(&iters_svg, &charts::iterations_bar_chart(&bars, resolved.max_iterations))?;
    println!("metrics: {}", args.out.display());
    println!("charts: {} {}", auc_svg.display(), iters_svg.display());
    Ok(())
}

pub fn cmd_validate(args: ValidateArgs) -> CliResult {
    let constraints = args
        .data
        .constraints
        .as_deref()
        .ok_or_else(|| CliError::Config("missing --constraints".into()))?;
    let dataset = args
        .data
        .dataset
        .as_deref()
        .ok_or_else(|| CliError::Config("missing --dataset".into()))?;
    let format = args
        .data
        .format
        .ok_or_else(|| CliError::Config("missing --format".into()))?;
    require_exists(constraints, "constraints")?;
    let cs = load_constraints(constraints)?;

    let (me, sub) = cs.constraints().iter().fold((0, 0), |(me, sub), c| match c {
        Constraint::MutualExclusion(_) => (me + 1, sub),
        Constraint::Subsumption { .. } => (me, sub + 1),
    });
    println!(
        "constraints: {} labels, {me} mutual-exclusion groups, {sub} subsumption edges",
        cs.label_count()
    );
    let d = load_dataset(dataset, format, args.data.labels.as_deref(), &cs)?;
    println!(
        "dataset: {} instances, {} labels, {} features",
        d.len(),
        d.label_count(),
        d.feature_dim()
    );
    println!("verdict: consistent");
    Ok(())
}

pub fn cmd_synth(args: SynthArgs) -> CliResult {
    if args.n == 0 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    let (d, _cs, profile) = match args.profile {
        SynthProfile::Nell13 => {
            let (d, cs) = nell13_dataset(args.n, args.seed);
            (d, cs, "nell13")
        }
        SynthProfile::Segment => {
            let (d, cs) = segment_like_dataset(args.n, args.seed);
            (d, cs, "segment")
        }
    };
    let features = PathBuf::from(format!("{}.features", args.out.display()));
    let labels = PathBuf::from(format!("{}.labels", args.out.display()));
    save_sparse_labels(&features, &labels, &d)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "{profile}: {} instances, {} labels, {} features",
        d.len(),
        d.label_count(),
        d.feature_dim()
    );
    println!("features: {}", features.display());
    println!("labels: {}", labels.display());
    Ok(())
}

pub fn cmd_oracle_check(args: OracleCheckArgs) -> CliResult {
    if args.k < 2 {
        return Err(CliError::Config("--k must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut matches = 0usize;
    for _ in 0..args.trials {
        let mass: f64 = rng.gen_range(0.2..0.98);
        let raw: Vec<f64> = (0..args.k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|r| r / total * mass).collect();
        let joint = JointDistribution::from_me_marginals(&p)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let ig: Vec<f64> = (0..args.k)
            .map(|l| exact_information_gain(&joint, LabelId(l)))
            .collect();
        let agrees = (0..args.k).all(|a| {
            (0..args.k).all(|b| {
                (p[a] <= p[b] || ig[a] >= ig[b] - 1e-9)
                    && (p[a] != p[b] || (ig[a] - ig[b]).abs() <= 1e-9)
            })
        });
        if agrees {
            matches += 1;
        }
    }
    println!("{matches}/{} rankings match", args.trials);
    if matches == args.trials {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} of {} rankings disagreed",
            args.trials - matches,
            args.trials
        )))
    }
}
