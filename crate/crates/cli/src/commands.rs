use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::Utc;
use meantest_core::exec::{available_parallelism, with_threads};
use meantest_core::experiments::{
    calibrate_cstar, run_experiment, ComplexitySearch, ExperimentPlan, ExperimentResult, Hypothesis,
};
use meantest_core::{run_tester, DistributionSpec, Seed, Verdict};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::formats::{self, Format};
use crate::manifest::{write_json, RunManifest};
use crate::{CalibrateArgs, ComplexityArgs, GenerateArgs, SimulateArgs, TestArgs};

/// Parses a JSON file, reporting the path of the offending field.
fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        anyhow::anyhow!("{}: field `{field}`: {}", path.display(), e.inner())
    })
}

pub fn test(args: TestArgs) -> Result<ExitCode> {
    let format = Format::resolve(args.format, &args.file);
    let batch = formats::read_batch(&args.file, format, args.dim)?;
    let decision = run_tester(&batch, args.epsilon, args.c_star)?;

    if args.json {
        let report = json!({
            "verdict": decision.verdict,
            "z": decision.z,
            "threshold": decision.threshold,
            "n": decision.n,
            "under_sampled": decision.under_sampled,
            "rows": batch.count(),
            "dim": batch.dim(),
            "epsilon": args.epsilon,
            "c_star": args.c_star,
        });
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("verdict:   {}", decision.verdict);
        println!("z:         {:.17e}", decision.z);
        println!("threshold: {:.17e}", decision.threshold);
        println!("n:         {} per half ({} of {} rows used, dim {})", decision.n, 2 * decision.n, batch.count(), batch.dim());
        if decision.under_sampled {
            println!("warning:   under-sampled; fewer rows than the sample-size rule requires, guarantees do not apply");
        }
    }
    Ok(match decision.verdict {
        Verdict::Accept => ExitCode::SUCCESS,
        Verdict::Reject => ExitCode::from(1),
    })
}

pub fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let started = Utc::now();
    let mut plan: ExperimentPlan = load_json(&args.plan)?;
    if let Some(seed) = args.seed {
        plan.base_seed = Seed::new(seed);
    }
    if let Some(trials) = args.trials {
        plan.trials = trials;
    }
    plan.validate().map_err(|e| anyhow::anyhow!("invalid plan {}: {e}", args.plan.display()))?;
    if args.parallelism == Some(0) {
        bail!("--parallelism must be >= 1");
    }

    let threads = args.parallelism.unwrap_or(0);
    let result = with_threads(threads, || run_experiment(&plan))?;

    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    write_json(&args.out.join("result.json"), &result)?;
    write_sweeps(&args.out, &plan, &result)?;
    let config = serde_json::to_value(&plan)?;
    let manifest = RunManifest::new("simulate", config, Some(plan.base_seed), started);
    manifest.write(&args.out.join("manifest.json"))?;

    if args.json {
        println!("{}", serde_json::to_string_pretty(&result)?);
    } else {
        let shown = if threads == 0 { available_parallelism() } else { threads };
        print!("{}", summary_table(&result, shown));
    }
    if result.partial {
        eprintln!("error: some cells failed; results in {} are partial", args.out.display());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn summary_table(result: &ExperimentResult, threads: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "plan {} ({} trials per cell, {threads} thread(s))", result.plan_name, result.completed_trials);
    let _ = writeln!(s, "{:>5} {:>6} {:>8} {:>8} {:>12} {:>10} {:>19} {:>12} {:>12}", "cell", "hyp", "eps", "n", "threshold", "accept", "wilson95", "mean_z", "var_z");
    for (i, c) in result.per_cell.iter().enumerate() {
        let hyp = match c.hypothesis {
            Hypothesis::Null => "null",
            Hypothesis::Alternative => "alt",
        };
        let _ = writeln!(
            s,
            "{i:>5} {hyp:>6} {:>8} {:>8} {:>12.5e} {:>10.4} [{:.4}, {:.4}] {:>12.4e} {:>12.4e}",
            c.config.epsilon, c.config.n, c.config.threshold, c.accept_rate, c.wilson_ci.0, c.wilson_ci.1, c.mean_z, c.var_z
        );
    }
    s
}

/// One file per spec: acceptance rate against `n` across the grid.
fn write_sweeps(dir: &Path, plan: &ExperimentPlan, result: &ExperimentResult) -> Result<()> {
    let per_grid = 1 + plan.alt_specs.len();
    for spec_idx in 0..per_grid {
        let name = if spec_idx == 0 { "sweep_null.dat".to_owned() } else { format!("sweep_alt{}.dat", spec_idx - 1) };
        let mut text = String::from("# n accept_rate wilson_lo wilson_hi\n");
        for cell in result.per_cell.iter().skip(spec_idx).step_by(per_grid) {
            let _ = writeln!(text, "{} {:.17e} {:.17e} {:.17e}", cell.config.n, cell.accept_rate, cell.wilson_ci.0, cell.wilson_ci.1);
        }
        let path = dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

pub fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let started = Utc::now();
    let spec: DistributionSpec = load_json(&args.spec)?;
    spec.validate().map_err(|e| anyhow::anyhow!("invalid spec {}: {e}", args.spec.display()))?;
    if args.count == 0 {
        bail!("--count must be >= 1");
    }
    let seed = Seed::new(args.seed);
    let batch = spec.sample(args.count, seed)?;
    let format = Format::resolve(args.format, &args.out);
    formats::write_batch(&args.out, format, &batch)?;

    let config = json!({ "spec": spec, "count": args.count, "format": format });
    let manifest = RunManifest::new("generate", config, Some(seed), started);
    let mut manifest_path = args.out.clone().into_os_string();
    manifest_path.push(".manifest.json");
    manifest.write(Path::new(&manifest_path))?;
    eprintln!("wrote {} rows of dim {} to {}", batch.count(), batch.dim(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn calibrate(args: CalibrateArgs) -> Result<ExitCode> {
    let specs: Vec<DistributionSpec> = load_json(&args.specs)?;
    let dim = specs.first().map(|s| s.dim).context("spec list is empty")?;
    let c = with_threads(args.parallelism.unwrap_or(0), || {
        calibrate_cstar(dim, &specs, args.trials, Seed::new(args.seed))
    })?;
    if args.json {
        println!("{}", json!({ "c_star": c, "specs": specs.len(), "trials": args.trials, "seed": args.seed }));
    } else {
        println!("empirical small-ball constant: {c:.6}");
    }
    Ok(ExitCode::SUCCESS)
}

pub fn complexity(args: ComplexityArgs) -> Result<ExitCode> {
    let search = ComplexitySearch::new(args.dim, args.epsilon, args.target, args.trials, Seed::new(args.seed));
    let outcome = with_threads(args.parallelism.unwrap_or(0), || search.run())?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&outcome)?);
    } else {
        println!("smallest n per half: {}", outcome.n);
        for r in &outcome.evaluations {
            println!("  n={:<10} completeness={:.4} soundness={:.4}", r.n, r.completeness, r.soundness);
        }
    }
    Ok(ExitCode::SUCCESS)
}
