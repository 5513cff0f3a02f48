use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use cachehop::algorithms::{parse_algorithms, select};
use cachehop::config::parse_overrides;
use cachehop::experiment::{
    cdf_csv, compute_cdf, durations_csv, means_csv, run_campaign, summary_json, CampaignOptions, CampaignResult, SCHEMA_VERSION,
};
use cachehop::schedule::evaluate;
use cachehop::seed::drop_seed;
use cachehop::{Error, PowerPolicy, RouteSet, Scenario, SimConfig};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "cachehop", version, about = "Route selection and power splitting for cached content delivery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Campaign at a single N.
    Run(CampaignArgs),
    /// Campaign over a range or list of N.
    Sweep(CampaignArgs),
    /// One drop in full detail: routes, assignments, timelines.
    Replay(ReplayArgs),
    /// Empirical CDF points of per-UE delivery durations.
    Cdf(CampaignArgs),
    /// Resolve and check a configuration, printing it as TOML.
    Validate(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration; absent keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a dotted config key, e.g. `--set zipf_gamma=0.8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed (overrides experiment.master_seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "CACHEHOP_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CampaignArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// N values: `20`, `1..30` (inclusive) or `5,10,20`.
    #[arg(long)]
    n: Option<String>,
    /// Drops per N (overrides experiment.drops).
    #[arg(long)]
    drops: Option<usize>,
    /// Comma list of benchmark, greedy, greedy-pa, brute, brute-pa.
    #[arg(long, default_value = "benchmark,greedy-pa")]
    algos: String,
    /// Power policy for every selector: sequential, static or dynamic.
    #[arg(long)]
    policy: Option<PowerPolicy>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Check caps, conservation and policy dominance on every assignment.
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Requesting UEs in the replayed drop.
    #[arg(long)]
    n: Option<usize>,
    /// Drop index within the campaign.
    #[arg(long, default_value_t = 0)]
    drop: usize,
    /// Replay a saved scenario JSON instead of regenerating from the seed.
    #[arg(long, conflicts_with_all = ["n", "drop"])]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "benchmark,greedy,greedy-pa")]
    algos: String,
    #[arg(long)]
    policy: Option<PowerPolicy>,
}

/// Config errors exit with 2, everything else with 1.
struct ConfigError(String);

/// `n` is the largest N the command will use; it replaces `num_requesting`
/// before validation so that e.g. `--n 2 --set num_ues=10` is accepted.
fn load_config(args: &ConfigArgs, n: Option<usize>) -> anyhow::Result<SimConfig> {
    let mut overrides = parse_overrides(&args.overrides).map_err(|e| anyhow::Error::new(ConfigError(e.to_string())))?;
    if let Some(n) = n {
        overrides.push(("num_requesting".into(), n.to_string()));
    }
    let loaded = match &args.config {
        Some(path) => SimConfig::from_file(path, &overrides),
        None => SimConfig::from_toml_str("", &overrides),
    };
    let mut cfg = loaded.map_err(|e| anyhow::Error::new(ConfigError(config_message(&e))))?;
    if let Some(seed) = args.seed {
        cfg.experiment.master_seed = seed;
    }
    Ok(cfg)
}

fn config_message(e: &Error) -> String {
    match e {
        Error::Config(errs) => errs.iter().map(|m| format!("  - {m}")).collect::<Vec<_>>().join("\n"),
        other => format!("  - {other}"),
    }
}

impl std::fmt::Debug for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration:\n{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse_n(spec: &str) -> anyhow::Result<Vec<usize>> {
    let spec = spec.trim();
    let values: Vec<usize> = if let Some((a, b)) = spec.split_once("..") {
        let a: usize = a.trim().parse().with_context(|| format!("bad range start in `{spec}`"))?;
        let b: usize = b.trim().trim_start_matches('=').parse().with_context(|| format!("bad range end in `{spec}`"))?;
        if a > b {
            bail!("empty N range `{spec}`");
        }
        (a..=b).collect()
    } else {
        spec.split(',').map(|p| p.trim().parse().with_context(|| format!("bad N `{p}`"))).collect::<anyhow::Result<_>>()?
    };
    if values.contains(&0) {
        bail!("N must be at least 1");
    }
    Ok(values)
}

fn config_hash(toml: &str) -> String {
    Sha256::digest(toml.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes only plain file names, joined onto the output directory.
struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    fn create(root: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        debug_assert!(!name.contains(['/', '\\']) && name != ".." && name != ".");
        let path = self.root.join(name);
        std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, mut manifest: serde_json::Value) -> anyhow::Result<()> {
        self.files.sort();
        manifest["files"] = json!(self.files);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(self.root.join("manifest.json"), text).context("cannot write manifest")?;
        Ok(())
    }
}

fn manifest(command: &str, cfg: &SimConfig) -> serde_json::Value {
    let toml = cfg.to_toml_string();
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "cachehop",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "master_seed": cfg.experiment.master_seed,
        "config_sha256": config_hash(&toml),
        "config_toml": toml,
    })
}

fn campaign(command: &str, args: &CampaignArgs) -> anyhow::Result<(SimConfig, Vec<usize>, CampaignResult)> {
    let requested = args.n.as_deref().map(parse_n).transpose()?;
    let mut cfg = load_config(&args.config, requested.as_ref().and_then(|v| v.iter().max().copied()))?;
    if let Some(d) = args.drops {
        cfg.experiment.drops = d;
    }
    let n_values = match (requested, command) {
        (Some(v), _) => v,
        (None, "sweep") => bail!("sweep needs --n"),
        (None, _) => vec![cfg.num_requesting],
    };
    if command == "run" && n_values.len() != 1 {
        bail!("run takes a single N; use sweep for several");
    }
    if cfg.experiment.drops == 0 {
        bail!("at least one drop is required");
    }
    let opts = CampaignOptions {
        algorithms: parse_algorithms(&args.algos)?,
        policy_override: args.policy,
        audit: args.audit,
        workers: args.workers,
    };
    let result = run_campaign(&cfg, &n_values, cfg.experiment.drops, &opts)?;
    Ok((cfg, n_values, result))
}

fn campaign_manifest(command: &str, cfg: &SimConfig, n_values: &[usize], args: &CampaignArgs) -> anyhow::Result<serde_json::Value> {
    let mut m = manifest(command, cfg);
    m["n"] = json!(n_values);
    m["drops"] = json!(cfg.experiment.drops);
    m["algorithms"] = json!(parse_algorithms(&args.algos)?.iter().map(|a| a.as_str()).collect::<Vec<_>>());
    m["policy_override"] = json!(args.policy.map(|p| p.as_str()));
    Ok(m)
}

fn dominance_csv(result: &CampaignResult) -> String {
    let mut out = String::from("drop,N,seed,algo,policy,greedy_sum_s,benchmark_sum_s\n");
    for (d, dom) in result.dominance_failures() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            d.drop_index, d.n, d.seed, dom.algorithm, dom.policy, dom.greedy_sum_s, dom.benchmark_sum_s
        ));
    }
    out
}

fn write_campaign(out: &mut OutDir, result: &CampaignResult, audit: bool) -> anyhow::Result<()> {
    out.write("durations.csv", &durations_csv(result))?;
    out.write("means.csv", &means_csv(result))?;
    out.write("summary.json", &(summary_json(result) + "\n"))?;
    out.write("dominance.csv", &dominance_csv(result))?;
    if audit {
        let a = result.audit().unwrap_or_default();
        out.write("audit.json", &(serde_json::to_string_pretty(&a)? + "\n"))?;
        if !a.is_clean() {
            eprintln!("warning: audit found violations, see audit.json");
        }
    }
    Ok(())
}

fn cmd_campaign(command: &str, args: &CampaignArgs) -> anyhow::Result<()> {
    let (cfg, n_values, result) = campaign(command, args)?;
    let mut out = OutDir::create(&args.output.out)?;
    write_campaign(&mut out, &result, args.audit)?;
    if command == "cdf" {
        for s in &result.summaries {
            for a in s.algorithms.iter().filter(|a| !a.samples.is_empty()) {
                out.write(&format!("cdf_N{}_{}.csv", s.n, a.algorithm), &cdf_csv(&compute_cdf(&a.samples)?))?;
            }
        }
    }
    out.finish(campaign_manifest(command, &cfg, &n_values, args)?)?;
    println!("{}", summary_json(&result));
    Ok(())
}

fn cmd_replay(args: &ReplayArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.config, args.n)?;
    let scenario = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            Scenario::from_json(&text)?
        }
        None => Scenario::generate(&cfg, drop_seed(cfg.experiment.master_seed, cfg.num_requesting, args.drop))?,
    };
    let algorithms = parse_algorithms(&args.algos)?;
    let routes = RouteSet::build(&scenario, true);
    let mut out = OutDir::create(&args.output.out)?;
    out.write("scenario.json", &(scenario.to_json() + "\n"))?;
    out.write("routes.csv", &routes.dump(&scenario))?;
    out.write("gains.csv", &scenario.gains().to_csv(&scenario.nodes))?;
    let mut summary = serde_json::Map::new();
    for alg in algorithms {
        let policy = args.policy.unwrap_or_else(|| alg.default_policy(&scenario.config));
        let selection = match select(alg, &scenario, &routes, policy) {
            Ok(s) => s,
            Err(e @ Error::BudgetExceeded { .. }) => {
                eprintln!("{alg}: {e}");
                summary.insert(alg.to_string(), json!({ "policy": policy.as_str(), "skipped": e.to_string() }));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let timeline = evaluate(&selection.assignment, &scenario, policy)?;
        let mut assignment = String::from("ue,content,route,hops,completion_s\n");
        for (r, t) in selection.assignment.routes.iter().zip(&timeline.completion) {
            assignment.push_str(&format!("{},{},{},{},{}\n", r.ue, r.content.0, r.label(), r.hop_count(), t));
        }
        out.write(&format!("{alg}_assignment.csv"), &assignment)?;
        out.write(&format!("{alg}_events.csv"), &timeline.to_csv())?;
        out.write(&format!("{alg}_segments.csv"), &timeline.segments_csv())?;
        if !selection.trace.is_empty() {
            out.write(&format!("{alg}_trace.json"), &(serde_json::to_string_pretty(&selection.trace)? + "\n"))?;
        }
        summary.insert(
            alg.to_string(),
            json!({
                "policy": policy.as_str(),
                "sum_s": timeline.sum_duration(),
                "mean_s": timeline.sum_duration() / timeline.completion.len() as f64,
                "evaluations": selection.evaluations,
            }),
        );
    }
    let summary = serde_json::to_string_pretty(&summary)? + "\n";
    out.write("replay.json", &summary)?;
    let mut m = manifest("replay", &scenario.config);
    m["drop"] = json!(args.scenario.is_none().then_some(args.drop));
    m["drop_seed"] = json!(scenario.seed);
    m["n"] = json!(scenario.num_requesting());
    m["algorithms"] = json!(parse_algorithms(&args.algos)?.iter().map(|a| a.as_str()).collect::<Vec<_>>());
    m["policy_override"] = json!(args.policy.map(|p| p.as_str()));
    out.finish(m)?;
    print!("{summary}");
    Ok(())
}

fn cmd_validate(args: &ConfigArgs) -> anyhow::Result<()> {
    let cfg = load_config(args, None)?;
    print!("{}", cfg.to_toml_string());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => cmd_campaign("run", a),
        Command::Sweep(a) => cmd_campaign("sweep", a),
        Command::Cdf(a) => cmd_campaign("cdf", a),
        Command::Replay(a) => cmd_replay(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ConfigError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_ranges_are_inclusive() {
        assert_eq!(parse_n("1..30").unwrap().len(), 30);
        assert_eq!(parse_n("3..=5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_n("5, 10,20").unwrap(), vec![5, 10, 20]);
        assert_eq!(parse_n("7").unwrap(), vec![7]);
        assert!(parse_n("5..2").is_err());
        assert!(parse_n("0").is_err());
        assert!(parse_n("x").is_err());
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(config_hash("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
