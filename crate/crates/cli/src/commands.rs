use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use specmargin_core::bounds::{run_conformance, SweepConfig};
use specmargin_core::cluster::{self, Assignment, ClusterOptions, CountSource, OUTSIDE};
use specmargin_core::kde::{sample, schedule, DensityModel, ScheduleParams, ScheduleProfile};
use specmargin_core::{Error, Execution, KernelSpec, PointSet, Variant};

use crate::io::{fmt_f64, labels_csv, parse_grid, parse_points, read_input, write_file};
use crate::manifest::{Outcome, RunManifest};
use crate::{ClusterArgs, KernelArgs, LevelsetArgs, SweepArgs, VerifyArgs};

struct Resolved {
    spec: KernelSpec,
    variant: Variant,
    opts: ClusterOptions,
}

fn resolve_kernel(args: &KernelArgs, dim: usize, manifest: &mut RunManifest) -> Result<Resolved> {
    let spec = KernelSpec::exponential_power(args.alpha, dim)?;
    let variant: Variant = args.variant.parse()?;
    let assignment = match args.assignment.as_str() {
        "linkage" => Assignment::CompleteLinkage,
        "kmeans" => Assignment::KMeans { restarts: 10, seed: args.seed },
        other => bail!("unknown assignment {other:?}; expected linkage or kmeans"),
    };
    if let Some(f) = args.degree_floor {
        if !(f.is_finite() && f > 0.0) {
            bail!("--degree-floor must be positive, got {f}");
        }
    }
    manifest.param("alpha", args.alpha);
    manifest.param("variant", variant.short_name());
    manifest.param("assignment", &args.assignment);
    manifest.param("degree_floor", args.degree_floor);
    manifest.param("seed", args.seed);
    let opts = ClusterOptions { assignment, degree_floor: args.degree_floor, exec: Execution::default(), ..Default::default() };
    Ok(Resolved { spec, variant, opts })
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn load_points(path: &Path, manifest: &mut RunManifest) -> Result<PointSet> {
    let input = read_input(path)?;
    manifest.input_digest = Some(input.digest);
    parse_points(&input.bytes).with_context(|| format!("malformed input {}", path.display()))
}

fn scope_note(manifest: &mut RunManifest, dim: usize) {
    if dim == 1 {
        manifest.diag("scope", "d = 1 lies outside the stated theorem scope (d >= 2)");
    }
}

pub fn cluster(args: ClusterArgs) -> Result<Outcome> {
    let mut manifest = RunManifest::new("cluster");
    let points = load_points(&args.input, &mut manifest)?;
    let r = resolve_kernel(&args.kernel, points.dim(), &mut manifest)?;
    manifest.param("k", args.k);
    manifest.param("sigma", args.sigma);
    prepare_dir(&args.output_dir)?;
    scope_note(&mut manifest, points.dim());
    match cluster::spectral_cluster_with(&points, &r.spec, args.sigma, args.k, r.variant, &r.opts) {
        Ok(result) => {
            let name = write_file(&args.output_dir, "labels.csv", &labels_csv(result.labels.iter().map(|&l| Some(l))))?;
            manifest.outputs.push(name);
            manifest.diag("applicable", true);
            manifest.diag("k_used", result.k_used);
            manifest.diag("max_within", result.diagnostics.max_within);
            manifest.diag("min_between", result.diagnostics.min_between);
            manifest.diag("ratio", result.diagnostics.ratio);
            manifest.diag("eigengap", result.diagnostics.eigengap);
            manifest.diag("resolution", result.diagnostics.resolution);
            manifest.diag("eigenvalues", &result.eigenvalues);
            if result.diagnostics.tie_at_k {
                manifest.diag("warning", "eigenvalue tie at k; the embedding basis is not unique");
            }
        }
        Err(e) if e.is_degenerate() => {
            manifest.diag("applicable", false);
            manifest.degenerate(e.to_string());
        }
        Err(e) => return Err(e.into()),
    }
    manifest.finish(&args.output_dir)
}

pub fn levelset(args: LevelsetArgs) -> Result<Outcome> {
    let mut manifest = RunManifest::new("levelset");
    let (points, model_lambda) = match (&args.input, &args.model) {
        (Some(path), _) => (load_points(path, &mut manifest)?, None),
        (None, Some(path)) => {
            let input = read_input(path)?;
            manifest.input_digest = Some(input.digest);
            let text = String::from_utf8(input.bytes).map_err(|_| anyhow!("model config is not UTF-8"))?;
            let model: DensityModel = text.parse().with_context(|| format!("malformed model {}", path.display()))?;
            manifest.param("n", args.n);
            (sample(&model, args.n, args.kernel.seed)?, model.lambda())
        }
        (None, None) => bail!("one of --input or --model is required"),
    };
    let lambda = args.lambda.or(model_lambda).ok_or_else(|| anyhow!("--lambda is required when the model sets no lambda"))?;
    let r = resolve_kernel(&args.kernel, points.dim(), &mut manifest)?;
    let profile: ScheduleProfile = match &args.profile {
        Some(p) => p.parse()?,
        None if args.c.is_some() => ScheduleProfile::EvecConsistency,
        None => ScheduleProfile::EvalConsistency,
    };
    let params = ScheduleParams { slack_scale: args.slack_scale, epsilon: args.eps, nu: args.nu, h_scale: args.h_scale, h_exp: args.h_exp };
    manifest.param("lambda", lambda);
    manifest.param("c", args.c);
    manifest.param("profile", profile.to_string());
    manifest.param("D", args.slack_scale);
    manifest.param("eps", args.eps);
    manifest.param("nu", args.nu);
    manifest.param("H", args.h_scale);
    manifest.param("h", args.h_exp);
    prepare_dir(&args.output_dir)?;
    scope_note(&mut manifest, points.dim());

    let sched = match schedule(points.len(), points.dim(), &r.spec, profile, params) {
        Ok(s) => s,
        Err(e @ Error::ScheduleInfeasible { min_feasible_n, .. }) => {
            manifest.diag("min_feasible_n", min_feasible_n);
            manifest.degenerate(e.to_string());
            return manifest.finish(&args.output_dir);
        }
        Err(e) => return Err(e.into()),
    };
    manifest.diag("sigma_n", sched.sigma_n);
    manifest.diag("s_n", sched.s_n);
    manifest.diag("nu", sched.nu);
    manifest.diag("window", [sched.lower, sched.upper]);

    match cluster::level_set_components(&points, lambda, &r.spec, &sched, r.variant, args.c, &r.opts) {
        Ok(result) => {
            let labels = result.labels.iter().map(|&l| (l != OUTSIDE).then_some(l));
            manifest.outputs.push(write_file(&args.output_dir, "labels.csv", &labels_csv(labels))?);
            let mut dens = String::from("index,phat\n");
            for (i, p) in result.densities.iter().enumerate() {
                dens.push_str(&format!("{i},{}\n", fmt_f64(*p)));
            }
            manifest.outputs.push(write_file(&args.output_dir, "densities.csv", &dens)?);
            let source = match result.count_source {
                CountSource::Forced => "forced",
                CountSource::Estimated => "estimated",
            };
            manifest.diag("c", source);
            manifest.diag("components", result.cluster.k_used);
            manifest.diag("survivors", result.survivors.len());
            manifest.diag("outside_label", -1);
            manifest.diag("log_f_n", result.log_f_n);
            manifest.diag("max_nn_gap", &result.max_nn_gap);
            manifest.diag("eigenvalues", &result.cluster.eigenvalues);
            manifest.diag("ratio", result.cluster.diagnostics.ratio);
            if result.cluster.diagnostics.tie_at_k {
                manifest.diag("warning", "eigenvalue tie at c; the embedding basis is not unique");
            }
        }
        Err(e) if e.is_degenerate() => manifest.degenerate(e.to_string()),
        Err(e) => return Err(e.into()),
    }
    manifest.finish(&args.output_dir)
}

pub fn verify_bounds(args: VerifyArgs) -> Result<Outcome> {
    let variants = args
        .variants
        .split(',')
        .map(|v| v.trim().parse::<Variant>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if variants.is_empty() {
        bail!("--variants must name at least one variant");
    }
    let defaults = SweepConfig::default();
    let cfg = SweepConfig {
        instances: args.instances,
        seed: args.seed,
        n_min: defaults.n_min.min(args.nmax),
        n_max: args.nmax,
        variants,
        exec: Execution::default(),
        ..defaults
    };
    let mut manifest = RunManifest::new("verify-bounds");
    manifest.param("instances", cfg.instances);
    manifest.param("seed", cfg.seed);
    manifest.param("nmax", cfg.n_max);
    manifest.param("variants", cfg.variants.iter().map(|v| v.short_name()).collect::<Vec<_>>());
    let outcome = run_conformance(&cfg)?;

    let mut lines = String::new();
    for r in &outcome.reports {
        lines.push_str(&serde_json::to_string(r)?);
        lines.push('\n');
    }
    for (id, t) in &outcome.tally {
        eprintln!("{:<24} evaluated {:>5}  applicable {:>5}  violations {:>5}", id.name(), t.evaluated, t.applicable, t.violations);
    }
    eprintln!("total violations: {}", outcome.violations());
    manifest.diag("violations", outcome.violations());
    manifest.diag(
        "tally",
        outcome
            .tally
            .iter()
            .map(|(id, t)| (id.name(), [t.evaluated, t.applicable, t.violations]))
            .collect::<std::collections::BTreeMap<_, _>>(),
    );
    if outcome.violations() > 0 {
        manifest.outcome = Outcome::Violations;
    }
    match &args.output_dir {
        Some(dir) => {
            prepare_dir(dir)?;
            manifest.outputs.push(write_file(dir, "reports.jsonl", &lines)?);
            manifest.finish(dir)
        }
        None => {
            std::io::stdout().lock().write_all(lines.as_bytes())?;
            Ok(manifest.outcome)
        }
    }
}

pub fn sigma_sweep(args: SweepArgs) -> Result<Outcome> {
    let grid = parse_grid(&args.grid)?;
    let mut manifest = RunManifest::new("sigma-sweep");
    let points = load_points(&args.input, &mut manifest)?;
    let r = resolve_kernel(&args.kernel, points.dim(), &mut manifest)?;
    manifest.param("k", args.k);
    manifest.param("grid", &args.grid);
    prepare_dir(&args.output_dir)?;
    scope_note(&mut manifest, points.dim());
    let entries = cluster::sigma_sweep(&points, &r.spec, args.k, r.variant, &grid, &r.opts)?;

    let width = (args.k + 1).min(points.len());
    let mut csv = String::from("sigma,variant,ratio,agreement");
    for j in 1..=width {
        csv.push_str(&format!(",e{j}"));
    }
    csv.push('\n');
    for e in &entries {
        let ratio = e.ratio().map(fmt_f64).unwrap_or_default();
        let agreement = match e.agreement {
            Some(a) => a.to_string(),
            None => "NA".to_string(),
        };
        csv.push_str(&format!("{},{},{ratio},{agreement}", fmt_f64(e.sigma), e.variant));
        for j in 0..width {
            let v = e.result.as_ref().and_then(|r| r.eigenvalues.get(j)).map(|v| fmt_f64(*v)).unwrap_or_default();
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    manifest.outputs.push(write_file(&args.output_dir, "sweep.csv", &csv)?);
    manifest.diag("applicable", entries.iter().filter(|e| e.applicable).count());
    manifest.diag("stable_agreement_from", cluster::stable_agreement_from(&entries));
    if let Some(last) = cluster::smallest_applicable(&entries) {
        manifest.diag("smallest_applicable_sigma", last.sigma);
        manifest.diag("smallest_applicable_ratio", last.ratio());
    }
    let reasons: Vec<_> = entries.iter().filter_map(|e| e.reason.as_ref().map(|r| (e.sigma, r.clone()))).collect();
    if !reasons.is_empty() {
        manifest.diag("not_applicable", reasons);
    }
    manifest.finish(&args.output_dir)
}
